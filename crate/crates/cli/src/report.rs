//! JSON renderings of reports and violations.

use parmetric_core::{
    CoverViolation, Dichotomy, DyadicValue, MetricViolation, ParallelCertificate, PointId,
};
use serde_json::{json, Value};

use crate::certificate::{side_str, verdict_str};

/// A distance value as JSON: floats as numbers, dyadic values as `"k/2^N"`.
pub trait JsonValue {
    fn json(&self) -> Value;
}

impl JsonValue for f64 {
    fn json(&self) -> Value {
        json!(self)
    }
}

impl JsonValue for DyadicValue {
    fn json(&self) -> Value {
        json!(self.reduced().to_string())
    }
}

pub fn metric_violation<V: JsonValue>(v: &MetricViolation<V>) -> Value {
    match v {
        MetricViolation::NotFinite { x, y, value } => {
            json!({"kind": "not_finite", "x": x.0, "y": y.0, "value": value.to_string()})
        }
        MetricViolation::NonZeroDiagonal { point, value } => {
            json!({"kind": "nonzero_diagonal", "point": point.0, "value": value.json()})
        }
        MetricViolation::NonPositive { x, y, value } => {
            json!({"kind": "non_positive", "x": x.0, "y": y.0, "value": value.json()})
        }
        MetricViolation::Asymmetric { x, y, forward, backward } => json!({
            "kind": "asymmetric", "x": x.0, "y": y.0,
            "forward": forward.json(), "backward": backward.json(),
        }),
        MetricViolation::Triangle { x, y, z, direct, via } => json!({
            "kind": "triangle", "x": x.0, "y": y.0, "z": z.0,
            "direct": direct.json(), "via": via.json(),
        }),
    }
}

pub fn cover_violation(v: &CoverViolation, labels: &[String]) -> Value {
    let name = |b: usize| labels.get(b).cloned().unwrap_or_else(|| b.to_string());
    match v {
        CoverViolation::Uncovered { point } => json!({"kind": "uncovered", "point": point.0}),
        CoverViolation::EmptyBlock { block } => json!({"kind": "empty_block", "block": name(block.0)}),
        CoverViolation::Overlap { point, first, second } => json!({
            "kind": "overlap", "point": point.0, "first": name(first.0), "second": name(second.0),
        }),
        CoverViolation::OutOfRange { block, point } => {
            json!({"kind": "out_of_range", "block": name(block.0), "point": point.0})
        }
    }
}

/// Certificate of a real-valued (or dyadic) metric with block labels.
pub fn parallel_certificate<V: JsonValue>(cert: &ParallelCertificate<V>, labels: &[String]) -> Value {
    let pairs: Vec<Value> = cert
        .pairs
        .iter()
        .map(|pc| {
            json!({
                "a": labels[pc.blocks.0 .0], "b": labels[pc.blocks.1 .0],
                "distance": pc.distance.json(),
                "attained": [pc.attained.0 .0, pc.attained.1 .0],
            })
        })
        .collect();
    let violations: Vec<Value> = cert.violations.iter().map(|v| parallel_violation(v, labels)).collect();
    json!({
        "verdict": verdict_str(cert.verdict()),
        "tol": cert.tol,
        "block_distances": pairs,
        "violations": violations,
    })
}

pub fn parallel_violation<V: JsonValue>(v: &parmetric_core::ParallelViolation<V>, labels: &[String]) -> Value {
    json!({
        "a": labels[v.blocks.0 .0], "b": labels[v.blocks.1 .0],
        "point": v.violation.witness.0,
        "side": side_str(v.violation.side),
        "point_distance": v.violation.witness_distance.json(),
        "set_distance": v.violation.set_distance.json(),
    })
}

pub fn dichotomy(d: &Dichotomy) -> Value {
    match d {
        Dichotomy::Disjoint => json!("disjoint"),
        Dichotomy::Coincide => json!("coincide"),
        Dichotomy::Inconsistent { witness, set_distance } => json!({
            "inconsistent": {"witness": witness.0, "set_distance": set_distance}
        }),
    }
}

pub fn point_pair(p: (PointId, PointId)) -> Value {
    json!([p.0 .0, p.1 .0])
}
