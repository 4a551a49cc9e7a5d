//! Certificate files for constructed metrics.
//!
//! Distances are stored as integer numerators over a common `2^scale_exp`,
//! so a certificate can be re-checked exactly without the original input.

use std::fmt;

use parmetric_core::{
    certify_parallel, BlockId, ChainStep, ConstructionTrace, DyadicMetric, DyadicValue,
    ParallelCertificate, Partition, PointId, Side, Verdict, VerifyError,
};
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A numerator. Written as a JSON number when it fits in `u64`, else as a
/// decimal string.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Scaled(pub u128);

impl Serialize for Scaled {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match u64::try_from(self.0) {
            Ok(v) => s.serialize_u64(v),
            Err(_) => s.serialize_str(&self.0.to_string()),
        }
    }
}

impl<'de> Deserialize<'de> for Scaled {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Scaled;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a non-negative integer or a decimal string")
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Scaled, E> {
                Ok(Scaled(v.into()))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<Scaled, E> {
                v.parse().map(Scaled).map_err(E::custom)
            }
        }
        d.deserialize_any(V)
    }
}

/// Value `v` as a numerator over `2^scale`.
fn scaled(v: DyadicValue, scale: u32) -> Scaled {
    Scaled(v.rescale(scale).expect("value is representable at the certificate scale").numerator())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockDistance {
    pub a: String,
    pub b: String,
    pub scaled: Scaled,
    pub attained: [usize; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ViolationEntry {
    pub a: String,
    pub b: String,
    pub point: usize,
    /// `"A"` when the point lies in `a`, else `"B"`.
    pub side: String,
    pub point_distance: Scaled,
    pub set_distance: Scaled,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepEntry {
    pub level: u32,
    pub block: usize,
    pub member: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessEntry {
    pub a: String,
    pub b: String,
    pub side: String,
    pub points: Vec<usize>,
    pub steps: Vec<StepEntry>,
    pub cost: Scaled,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelSummary {
    pub level: u32,
    pub net_radius: f64,
    pub base_sets: usize,
    pub members: usize,
    pub max_member_diameter: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceSummary {
    pub max_level: u32,
    pub levels: Vec<LevelSummary>,
}

impl TraceSummary {
    pub fn from_trace(trace: &ConstructionTrace) -> Self {
        TraceSummary {
            max_level: trace.plan.max_level(),
            levels: trace
                .levels
                .iter()
                .map(|l| LevelSummary {
                    level: l.level,
                    net_radius: trace.plan.radius(l.level),
                    base_sets: l.base_cover.len(),
                    members: l.blocks.iter().map(|b| b.members.len()).sum(),
                    max_member_diameter: l.check.max_member_diameter,
                })
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub n_points: usize,
    /// Block label of each point.
    pub labels: Vec<String>,
    pub scale_exp: u32,
    /// Full table of numerators over `2^scale_exp`.
    pub d_scaled: Vec<Vec<Scaled>>,
    pub block_distances: Vec<BlockDistance>,
    pub verdict: String,
    pub violations: Vec<ViolationEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witnesses: Option<Vec<WitnessEntry>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<TraceSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleSummary>,
}

/// Outcome of the brute-force cross-check of a construction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleSummary {
    pub pairs_checked: usize,
    pub gauge_agrees: bool,
    pub closure_agrees: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum CertificateError {
    #[error("parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("malformed certificate: {0}")]
    Shape(String),
    #[error(transparent)]
    Verify(#[from] VerifyError),
}

pub fn verdict_str(v: Verdict) -> &'static str {
    match v {
        Verdict::Pass => "pass",
        Verdict::Fail => "fail",
    }
}

pub fn side_str(s: Side) -> &'static str {
    match s {
        Side::InA => "A",
        Side::InB => "B",
    }
}

fn step_entry(s: &ChainStep) -> StepEntry {
    StepEntry {
        level: s.level,
        block: s.block.0,
        member: s.member,
    }
}

impl CertificateFile {
    /// Assembles a certificate file from a constructed metric and its check.
    pub fn build(
        name: Option<String>,
        d: &DyadicMetric,
        p: &Partition,
        block_labels: &[String],
        cert: &ParallelCertificate<DyadicValue>,
        trace: Option<&ConstructionTrace>,
        with_witnesses: bool,
    ) -> Self {
        let n = d.n_points();
        let scale = d.scale_exp();
        let label = |b: BlockId| block_labels[b.0].clone();
        let d_scaled = (0..n)
            .map(|x| (0..n).map(|y| Scaled(d.numerator(PointId(x), PointId(y)))).collect())
            .collect();
        let block_distances = cert
            .pairs
            .iter()
            .map(|pc| BlockDistance {
                a: label(pc.blocks.0),
                b: label(pc.blocks.1),
                scaled: scaled(pc.distance, scale),
                attained: [pc.attained.0 .0, pc.attained.1 .0],
            })
            .collect();
        let violations = cert
            .violations
            .iter()
            .map(|v| ViolationEntry {
                a: label(v.blocks.0),
                b: label(v.blocks.1),
                point: v.violation.witness.0,
                side: side_str(v.violation.side).into(),
                point_distance: scaled(v.violation.witness_distance, scale),
                set_distance: scaled(v.violation.set_distance, scale),
            })
            .collect();
        let witnesses = with_witnesses.then(|| {
            cert.witnesses
                .iter()
                .map(|w| WitnessEntry {
                    a: label(w.blocks.0),
                    b: label(w.blocks.1),
                    side: side_str(w.side).into(),
                    points: w.chain.points.iter().map(|p| p.0).collect(),
                    steps: w.chain.steps.iter().map(step_entry).collect(),
                    cost: scaled(w.chain.cost, scale),
                })
                .collect()
        });
        CertificateFile {
            name,
            n_points: n,
            labels: (0..n).map(|i| label(p.block_of(PointId(i)))).collect(),
            scale_exp: scale,
            d_scaled,
            block_distances,
            verdict: verdict_str(cert.verdict()).into(),
            violations,
            witnesses,
            trace: trace.map(TraceSummary::from_trace),
            oracle: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, CertificateError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("certificate serializes")
    }

    /// The stored metric, partition and block labels.
    pub fn to_metric(&self) -> Result<(DyadicMetric, Partition, Vec<String>), CertificateError> {
        let n = self.n_points;
        if self.d_scaled.len() != n || self.d_scaled.iter().any(|r| r.len() != n) {
            return Err(CertificateError::Shape(format!("d_scaled is not {n} x {n}")));
        }
        if self.labels.len() != n {
            return Err(CertificateError::Shape(format!(
                "{} labels for {n} points",
                self.labels.len()
            )));
        }
        let flat = self.d_scaled.iter().flatten().map(|s| s.0).collect();
        let d = DyadicMetric::from_scaled(n, self.scale_exp, flat)
            .map_err(|e| CertificateError::Shape(e.to_string()))?;
        let mut names: Vec<String> = Vec::new();
        let assignment: Vec<usize> = self
            .labels
            .iter()
            .map(|l| match names.iter().position(|x| x == l) {
                Some(i) => i,
                None => {
                    names.push(l.clone());
                    names.len() - 1
                }
            })
            .collect();
        let p = Partition::from_assignment(&assignment)
            .map_err(|_| CertificateError::Shape("labels do not form a partition".into()))?;
        Ok((d, p, names))
    }

    /// Re-checks the stored table exactly and compares the result with the
    /// stored verdict and block distances. Returns the fresh certificate and
    /// a list of disagreements (empty when the file is consistent).
    pub fn reverify(&self) -> Result<(ParallelCertificate<DyadicValue>, Vec<String>), CertificateError> {
        let (d, p, names) = self.to_metric()?;
        let mut problems = Vec::new();
        let report = d.validate();
        if !report.is_valid() {
            problems.push(format!("stored table violates the metric axioms ({} violations)", report.violations.len()));
        }
        let cert = certify_parallel(&d, &p, 0.0)?;
        let fresh = CertificateFile::build(self.name.clone(), &d, &p, &names, &cert, None, false);
        if fresh.verdict != self.verdict {
            problems.push(format!("stored verdict {} but recomputed {}", self.verdict, fresh.verdict));
        }
        if fresh.block_distances != self.block_distances {
            problems.push("stored block distances differ from recomputed ones".into());
        }
        if fresh.violations != self.violations {
            problems.push("stored violations differ from recomputed ones".into());
        }
        Ok((cert, problems))
    }
}
