//! Instance files: a point set given by coordinates or a distance table, plus
//! a block label per point.

use std::fs;
use std::path::{Path, PathBuf};

use parmetric_core::{
    validate_metric, Cover, FiniteMetricSpace, MetricError, Partition, PartitionReport, PointId,
    ValidationReport,
};
use serde::{Deserialize, Serialize};

/// On-disk instance. Exactly one of `coords` and `dist` must be present.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coords: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dist: Option<DistTable>,
    pub labels: Vec<LabelEntry>,
}

/// A distance table in one of the accepted layouts:
///
/// * a full square matrix;
/// * lower-triangular rows, either strict (`rows[i]` has `i` entries, so the
///   first row is empty) or including the zero diagonal (`i + 1` entries);
/// * a flat list of the strict lower triangle in row-major order
///   (`d(1,0), d(2,0), d(2,1), d(3,0), ..`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DistTable {
    Rows(Vec<Vec<f64>>),
    Flat(Vec<f64>),
}

/// Block label of one point. A list puts the point in several blocks, which
/// is only useful for describing (and rejecting) overlapping covers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LabelEntry {
    Name(String),
    Index(u64),
    Many(Vec<String>),
}

impl LabelEntry {
    fn names(&self) -> Vec<String> {
        match self {
            LabelEntry::Name(s) => vec![s.clone()],
            LabelEntry::Index(i) => vec![i.to_string()],
            LabelEntry::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("malformed instance: {0}")]
    Shape(String),
    #[error("invalid metric: {0}")]
    Metric(MetricError),
    #[error("{labels} labels for {points} points")]
    LabelMismatch { labels: usize, points: usize },
    #[error("labels do not form a partition ({} violations)", .0.violations.len())]
    Cover(PartitionReport),
}

impl LoadError {
    /// Stable machine-readable class name.
    pub fn kind(&self) -> &'static str {
        match self {
            LoadError::Io { .. } => "io",
            LoadError::Parse(_) => "parse",
            LoadError::Shape(_) => "shape",
            LoadError::Metric(_) => "metric",
            LoadError::LabelMismatch { .. } => "label_mismatch",
            LoadError::Cover(_) => "cover",
        }
    }

    /// Input could not be read as an instance at all (as opposed to an
    /// instance that fails validation).
    pub fn is_parse_error(&self) -> bool {
        matches!(self, LoadError::Io { .. } | LoadError::Parse(_) | LoadError::Shape(_))
    }
}

/// A validated instance.
#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    pub name: Option<String>,
    pub coords: Option<Vec<Vec<f64>>>,
    pub metric: FiniteMetricSpace,
    pub partition: Partition,
    /// Label of each block, in block-index order (first appearance).
    pub block_labels: Vec<String>,
}

impl Instance {
    /// Label of the block containing `p`.
    pub fn label_of(&self, p: PointId) -> &str {
        &self.block_labels[self.partition.block_of(p).0]
    }

    /// Point labels, suitable for writing back out.
    pub fn point_labels(&self) -> Vec<String> {
        (0..self.metric.n_points())
            .map(|i| self.label_of(PointId(i)).to_owned())
            .collect()
    }

    pub fn to_file(&self) -> InstanceFile {
        let labels = self.point_labels().into_iter().map(LabelEntry::Name).collect();
        match &self.coords {
            Some(c) => InstanceFile {
                name: self.name.clone(),
                coords: Some(c.clone()),
                dist: None,
                labels,
            },
            None => InstanceFile {
                name: self.name.clone(),
                coords: None,
                dist: Some(DistTable::Rows(self.metric.to_rows())),
                labels,
            },
        }
    }
}

/// Everything wrong with an instance file that parses.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct InstanceReport {
    pub n_points: usize,
    pub metric: Option<ValidationReport>,
    /// Construction error other than axiom violations (duplicate points, ..).
    pub metric_error: Option<MetricError>,
    pub label_mismatch: Option<(usize, usize)>,
    pub cover: PartitionReport,
}

impl InstanceReport {
    pub fn is_valid(&self) -> bool {
        self.metric.as_ref().is_none_or(|r| r.is_valid())
            && self.metric_error.is_none()
            && self.label_mismatch.is_none()
            && self.cover.is_valid()
    }
}

impl InstanceFile {
    pub fn from_json(text: &str) -> Result<Self, LoadError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance serializes")
    }

    fn n_points(&self) -> Result<usize, LoadError> {
        match (&self.coords, &self.dist) {
            (Some(c), None) => Ok(c.len()),
            (None, Some(d)) => Ok(square_rows(d)?.len()),
            (Some(_), Some(_)) => Err(LoadError::Shape("both coords and dist given".into())),
            (None, None) => Err(LoadError::Shape("neither coords nor dist given".into())),
        }
    }

    /// The distance table as full square rows.
    pub fn dist_rows(&self) -> Result<Vec<Vec<f64>>, LoadError> {
        match (&self.coords, &self.dist) {
            (Some(c), None) => FiniteMetricSpace::euclidean_from_points(c)
                .map(|m| m.to_rows())
                .map_err(LoadError::Metric),
            (None, Some(d)) => square_rows(d),
            _ => self.n_points().map(|_| Vec::new()),
        }
    }

    /// Labels as a raw cover, blocks in order of first appearance.
    pub fn cover(&self) -> (Cover, Vec<String>) {
        let n = self.labels.len();
        let mut names: Vec<String> = Vec::new();
        let mut blocks: Vec<Vec<PointId>> = Vec::new();
        for (p, entry) in self.labels.iter().enumerate() {
            for name in entry.names() {
                let b = match names.iter().position(|x| *x == name) {
                    Some(b) => b,
                    None => {
                        names.push(name);
                        blocks.push(Vec::new());
                        names.len() - 1
                    }
                };
                blocks[b].push(PointId(p));
            }
        }
        (Cover::new(n, blocks), names)
    }

    /// Collects every problem instead of stopping at the first. Only shape
    /// errors (which make the content unreadable) are returned as `Err`.
    pub fn check(&self, tol: f64) -> Result<InstanceReport, LoadError> {
        let n = self.n_points()?;
        let mut report = InstanceReport {
            n_points: n,
            ..Default::default()
        };
        match (&self.coords, &self.dist) {
            (Some(c), _) => match FiniteMetricSpace::euclidean_from_points(c) {
                Ok(m) => report.metric = Some(m.validate(tol)),
                Err(MetricError::Invalid(r)) => report.metric = Some(r),
                Err(MetricError::Table(t)) => return Err(LoadError::Shape(t.to_string())),
                Err(e) => report.metric_error = Some(e),
            },
            (_, Some(d)) => {
                let rows = square_rows(d)?;
                report.metric =
                    Some(validate_metric(&rows, tol).map_err(|e| LoadError::Shape(e.to_string()))?);
            }
            _ => unreachable!("n_points checked presence"),
        }
        if self.labels.len() != n {
            report.label_mismatch = Some((self.labels.len(), n));
        } else {
            report.cover = self.cover().0.validate();
        }
        Ok(report)
    }

    /// Validates and builds the metric and partition. Errors are reported in
    /// the order: shape, metric, label count, cover.
    pub fn resolve(&self, tol: f64) -> Result<Instance, LoadError> {
        let n = self.n_points()?;
        let metric = match (&self.coords, &self.dist) {
            (Some(c), _) => FiniteMetricSpace::euclidean_from_points(c),
            (_, Some(d)) => FiniteMetricSpace::from_rows(&square_rows(d)?, tol),
            _ => unreachable!("n_points checked presence"),
        }
        .map_err(|e| match e {
            MetricError::Table(t) => LoadError::Shape(t.to_string()),
            e => LoadError::Metric(e),
        })?;
        if self.labels.len() != n {
            return Err(LoadError::LabelMismatch {
                labels: self.labels.len(),
                points: n,
            });
        }
        let (cover, block_labels) = self.cover();
        let partition = cover.into_partition().map_err(LoadError::Cover)?;
        Ok(Instance {
            name: self.name.clone(),
            coords: self.coords.clone(),
            metric,
            partition,
            block_labels,
        })
    }
}

/// Expands any accepted layout into full square rows, mirroring triangles.
fn square_rows(d: &DistTable) -> Result<Vec<Vec<f64>>, LoadError> {
    match d {
        DistTable::Flat(v) => {
            // n(n-1)/2 = len
            let mut n = 1usize;
            while n * (n - 1) / 2 < v.len() {
                n += 1;
            }
            if n * (n - 1) / 2 != v.len() {
                return Err(LoadError::Shape(format!(
                    "flat table of length {} is not triangular",
                    v.len()
                )));
            }
            let mut rows = vec![vec![0.0; n]; n];
            let pairs = (1..n).flat_map(|i| (0..i).map(move |j| (i, j)));
            for ((i, j), &d) in pairs.zip(v) {
                rows[i][j] = d;
                rows[j][i] = d;
            }
            Ok(rows)
        }
        DistTable::Rows(rows) => {
            let n = rows.len();
            if n == 0 {
                return Err(LoadError::Shape("distance table is empty".into()));
            }
            if rows.iter().all(|r| r.len() == n) {
                return Ok(rows.clone());
            }
            let strict = rows.iter().enumerate().all(|(i, r)| r.len() == i);
            let with_diag = rows.iter().enumerate().all(|(i, r)| r.len() == i + 1);
            if !strict && !with_diag {
                return Err(LoadError::Shape(
                    "distance rows are neither square nor lower-triangular".into(),
                ));
            }
            let mut full = vec![vec![0.0; n]; n];
            for (i, r) in rows.iter().enumerate() {
                for (j, &v) in r.iter().enumerate() {
                    full[i][j] = v;
                    if i != j {
                        full[j][i] = v;
                    }
                }
            }
            Ok(full)
        }
    }
}

pub fn parse_instance(text: &str, tol: f64) -> Result<Instance, LoadError> {
    InstanceFile::from_json(text)?.resolve(tol)
}

pub fn read_text(path: &Path) -> Result<String, LoadError> {
    fs::read_to_string(path).map_err(|source| LoadError::Io {
        path: path.to_owned(),
        source,
    })
}

/// Reads, validates and resolves an instance file.
pub fn load_instance(path: &Path, tol: f64) -> Result<Instance, LoadError> {
    parse_instance(&read_text(path)?, tol)
}

pub fn save_instance(path: &Path, instance: &Instance) -> std::io::Result<()> {
    fs::write(path, instance.to_file().to_json())
}

#[cfg(test)]
mod tests {
    use super::*;
    use parmetric_core::{BlockId, CoverViolation, DEFAULT_METRIC_TOLERANCE as TOL};

    #[test]
    fn coords_instance() {
        let inst = parse_instance(r#"{"coords": [[0,0],[3,4]], "labels": ["A","B"]}"#, TOL).unwrap();
        assert_eq!(inst.metric.get(0, 1), 5.0);
        assert_eq!(inst.partition.n_blocks(), 2);
        assert_eq!(inst.block_labels, vec!["A", "B"]);
    }

    #[test]
    fn lower_triangular_layouts() {
        let inst = parse_instance(r#"{"dist": [1], "labels": ["A","A"]}"#, TOL).unwrap();
        assert_eq!(inst.metric.n_points(), 2);
        assert_eq!(inst.partition.n_blocks(), 1);
        let strict = parse_instance(r#"{"dist": [[], [1], [2, 1.5]], "labels": [0, 1, 1]}"#, TOL).unwrap();
        let diag = parse_instance(r#"{"dist": [[0], [1, 0], [2, 1.5, 0]], "labels": [0, 1, 1]}"#, TOL).unwrap();
        let flat = parse_instance(r#"{"dist": [1, 2, 1.5], "labels": [0, 1, 1]}"#, TOL).unwrap();
        assert_eq!(strict.metric, diag.metric);
        assert_eq!(strict.metric, flat.metric);
        assert_eq!(strict.metric.get(0, 2), 2.0);
    }

    #[test]
    fn error_classes_are_distinct() {
        let e = parse_instance(r#"{"coords": [[0,0],[3,4]], "labels": ["A"]}"#, TOL).unwrap_err();
        assert!(matches!(e, LoadError::LabelMismatch { labels: 1, points: 2 }));
        assert_eq!(e.kind(), "label_mismatch");
        let e = parse_instance(r#"{"coords": [[0,0]], "dist": [], "labels": ["A"]}"#, TOL).unwrap_err();
        assert_eq!(e.kind(), "shape");
        let e = parse_instance(r#"{"coords": "#, TOL).unwrap_err();
        assert_eq!(e.kind(), "parse");
        let e = parse_instance(r#"{"dist": [1, 5, 1], "labels": [0,0,0]}"#, TOL).unwrap_err();
        assert_eq!(e.kind(), "metric");
        let e = parse_instance(r#"{"dist": [1, 2], "labels": [0,0,0]}"#, TOL).unwrap_err();
        assert_eq!(e.kind(), "shape");
        let e = parse_instance(r#"{"dist": [[0, 1], [1.5, 0]], "labels": [0,0]}"#, TOL).unwrap_err();
        assert_eq!(e.kind(), "metric");
    }

    #[test]
    fn overlapping_labels_are_a_cover_error() {
        let text = r#"{"dist": [1, 1, 1], "labels": ["A", ["A", "B"], "B"]}"#;
        let file = InstanceFile::from_json(text).unwrap();
        let report = file.check(TOL).unwrap();
        assert!(!report.is_valid());
        assert_eq!(
            report.cover.violations,
            vec![CoverViolation::Overlap {
                point: PointId(1),
                first: BlockId(0),
                second: BlockId(1)
            }]
        );
        assert!(matches!(file.resolve(TOL), Err(LoadError::Cover(_))));
        let uncovered = r#"{"dist": [1], "labels": ["A", []]}"#;
        let report = InstanceFile::from_json(uncovered).unwrap().check(TOL).unwrap();
        assert_eq!(report.cover.violations, vec![CoverViolation::Uncovered { point: PointId(1) }]);
    }

    #[test]
    fn round_trip_through_json() {
        let inst = parse_instance(r#"{"name": "t", "dist": [0.1, 0.7, 0.65], "labels": ["x", "y", "x"]}"#, TOL).unwrap();
        let again = parse_instance(&inst.to_file().to_json(), TOL).unwrap();
        assert_eq!(inst, again);
    }
}
