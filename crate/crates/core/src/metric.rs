//! Finite metric spaces, their validation, and distance functionals on point sets.

use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt::Debug;

use crate::dyadic::DyadicValue;
use crate::points::{PointId, PointSet};

/// Default relative tolerance for validating real-valued input tables.
pub const DEFAULT_METRIC_TOLERANCE: f64 = 1e-9;

/// A distance value: real (`f64`) or exact ([`DyadicValue`]).
pub trait Distance: Copy + PartialOrd + Debug {
    fn zero() -> Self;

    fn to_f64(self) -> f64;

    /// `|self - other| <= tol`. Exact equality when `tol == 0`.
    fn approx_eq(self, other: Self, tol: f64) -> bool;

    /// `None` when the sum is not representable.
    fn checked_add(self, other: Self) -> Option<Self>;

    /// `self <= a + b + tol`.
    fn le_sum(self, a: Self, b: Self, tol: f64) -> bool;
}

impl Distance for f64 {
    fn zero() -> Self {
        0.0
    }

    fn to_f64(self) -> f64 {
        self
    }

    fn approx_eq(self, other: Self, tol: f64) -> bool {
        if tol == 0.0 {
            self == other
        } else {
            (self - other).abs() <= tol
        }
    }

    fn checked_add(self, other: Self) -> Option<Self> {
        Some(self + other)
    }

    fn le_sum(self, a: Self, b: Self, tol: f64) -> bool {
        self <= a + b + tol
    }
}

impl Distance for DyadicValue {
    fn zero() -> Self {
        DyadicValue::ZERO
    }

    fn to_f64(self) -> f64 {
        DyadicValue::to_f64(self)
    }

    fn approx_eq(self, other: Self, tol: f64) -> bool {
        if tol == 0.0 {
            self == other
        } else {
            (self.to_f64() - other.to_f64()).abs() <= tol
        }
    }

    fn checked_add(self, other: Self) -> Option<Self> {
        DyadicValue::checked_add(self, other)
    }

    fn le_sum(self, a: Self, b: Self, tol: f64) -> bool {
        match DyadicValue::checked_add(a, b) {
            Some(s) if tol == 0.0 => self <= s,
            Some(s) => self.to_f64() <= s.to_f64() + tol,
            // a + b exceeds any representable value
            None => true,
        }
    }
}

/// Read access to a finite (pseudo)metric table.
pub trait Metric {
    type Value: Distance;

    fn n_points(&self) -> usize;

    fn dist(&self, x: PointId, y: PointId) -> Self::Value;

    fn points(&self) -> core::iter::Map<core::ops::Range<usize>, fn(usize) -> PointId> {
        (0..self.n_points()).map(PointId as fn(usize) -> PointId)
    }
}

/// The table itself is malformed; no axioms were checked.
#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum TableError {
    #[error("distance table is empty")]
    Empty,
    #[error("row {row} has {found} entries, expected {expected}")]
    NotSquare {
        row: usize,
        expected: usize,
        found: usize,
    },
}

/// One failed metric axiom, with the witnessing indices.
#[derive(Clone, Debug, PartialEq)]
pub enum MetricViolation<V = f64> {
    NotFinite { x: PointId, y: PointId, value: f64 },
    NonZeroDiagonal { point: PointId, value: V },
    NonPositive { x: PointId, y: PointId, value: V },
    Asymmetric { x: PointId, y: PointId, forward: V, backward: V },
    /// `d(x, z) > d(x, y) + d(y, z)`.
    Triangle { x: PointId, y: PointId, z: PointId, direct: V, via: V },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ValidationReport<V = f64> {
    pub violations: Vec<MetricViolation<V>>,
}

impl<V> ValidationReport<V> {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum MetricError {
    #[error(transparent)]
    Table(#[from] TableError),
    #[error("metric axioms violated ({} violations)", .0.violations.len())]
    Invalid(ValidationReport),
    #[error("point {point} has dimension {found}, expected {expected}")]
    DimensionMismatch {
        point: usize,
        expected: usize,
        found: usize,
    },
    #[error("points {first} and {second} coincide")]
    DuplicatePoint { first: usize, second: usize },
    #[error("point {point} has a non-finite coordinate")]
    NonFiniteCoordinate { point: usize },
    #[error("point set is empty")]
    EmptySet,
    #[error("need at least 2 points, got {0}")]
    TooFewPoints(usize),
}

/// Checks the metric axioms on a square table of rows.
///
/// Symmetry and the triangle inequality are tested with relative tolerance
/// `tol`; the diagonal must be exactly zero and off-diagonal entries strictly
/// positive.
pub fn validate_metric(rows: &[Vec<f64>], tol: f64) -> Result<ValidationReport, TableError> {
    let flat = flatten_square(rows)?;
    Ok(validate_flat(rows.len(), &flat, tol))
}

fn flatten_square(rows: &[Vec<f64>]) -> Result<Vec<f64>, TableError> {
    let n = rows.len();
    if n == 0 {
        return Err(TableError::Empty);
    }
    let mut flat = Vec::with_capacity(n * n);
    for (row, r) in rows.iter().enumerate() {
        if r.len() != n {
            return Err(TableError::NotSquare {
                row,
                expected: n,
                found: r.len(),
            });
        }
        flat.extend_from_slice(r);
    }
    Ok(flat)
}

fn validate_flat(n: usize, d: &[f64], tol: f64) -> ValidationReport {
    let mut violations = Vec::new();
    let mut finite = true;
    for x in 0..n {
        for y in 0..n {
            let v = d[x * n + y];
            if !v.is_finite() {
                finite = false;
                violations.push(MetricViolation::NotFinite {
                    x: PointId(x),
                    y: PointId(y),
                    value: v,
                });
            }
        }
    }
    if !finite {
        return ValidationReport { violations };
    }
    let sym_ok = |a: f64, b: f64| (a - b).abs() <= tol * a.abs().max(b.abs());
    let tri_ok = |direct: f64, via: f64| direct <= via + tol * direct.max(via);
    violations.extend(check_axioms(n, |x, y| d[x * n + y], sym_ok, tri_ok).violations);
    ValidationReport { violations }
}

/// Axiom scan shared by every table type. `sym_ok(a, b)` and
/// `tri_ok(direct, via)` carry the comparison semantics.
pub(crate) fn check_axioms<V: Distance>(
    n: usize,
    get: impl Fn(usize, usize) -> V,
    sym_ok: impl Fn(V, V) -> bool,
    tri_ok: impl Fn(V, V) -> bool,
) -> ValidationReport<V> {
    let mut violations = Vec::new();
    let zero = V::zero();
    for x in 0..n {
        let v = get(x, x);
        if v != zero {
            violations.push(MetricViolation::NonZeroDiagonal {
                point: PointId(x),
                value: v,
            });
        }
    }
    for x in 0..n {
        for y in (x + 1)..n {
            let (f, b) = (get(x, y), get(y, x));
            // written to also catch NaN
            if f.partial_cmp(&zero) != Some(Ordering::Greater) || b.partial_cmp(&zero) != Some(Ordering::Greater) {
                violations.push(MetricViolation::NonPositive {
                    x: PointId(x),
                    y: PointId(y),
                    value: if f > zero { b } else { f },
                });
            }
            if !sym_ok(f, b) {
                violations.push(MetricViolation::Asymmetric {
                    x: PointId(x),
                    y: PointId(y),
                    forward: f,
                    backward: b,
                });
            }
        }
    }
    for x in 0..n {
        for z in (x + 1)..n {
            let direct = get(x, z);
            for y in 0..n {
                if y == x || y == z {
                    continue;
                }
                let Some(via) = get(x, y).checked_add(get(y, z)) else {
                    continue;
                };
                if !tri_ok(direct, via) {
                    violations.push(MetricViolation::Triangle {
                        x: PointId(x),
                        y: PointId(y),
                        z: PointId(z),
                        direct,
                        via,
                    });
                }
            }
        }
    }
    ValidationReport { violations }
}

/// A validated finite metric space with real distances.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteMetricSpace {
    n: usize,
    dist: Vec<f64>,
}

impl FiniteMetricSpace {
    /// Builds a space from a full square table, validating with relative
    /// tolerance `tol`. The stored table mirrors the upper triangle, so it is
    /// exactly symmetric.
    pub fn from_rows(rows: &[Vec<f64>], tol: f64) -> Result<Self, MetricError> {
        let flat = flatten_square(rows)?;
        Self::from_flat(rows.len(), flat, tol)
    }

    /// `dist` is row-major `n * n`.
    pub fn from_flat(n: usize, mut dist: Vec<f64>, tol: f64) -> Result<Self, MetricError> {
        if n == 0 {
            return Err(TableError::Empty.into());
        }
        if dist.len() != n * n {
            return Err(TableError::NotSquare {
                row: 0,
                expected: n * n,
                found: dist.len(),
            }
            .into());
        }
        let report = validate_flat(n, &dist, tol);
        if !report.is_valid() {
            return Err(MetricError::Invalid(report));
        }
        for x in 0..n {
            for y in 0..x {
                dist[x * n + y] = dist[y * n + x];
            }
        }
        Ok(FiniteMetricSpace { n, dist })
    }

    /// Euclidean distances between coordinate vectors.
    pub fn euclidean_from_points(coords: &[Vec<f64>]) -> Result<Self, MetricError> {
        let n = coords.len();
        if n == 0 {
            return Err(TableError::Empty.into());
        }
        let dim = coords[0].len();
        for (i, c) in coords.iter().enumerate() {
            if c.len() != dim {
                return Err(MetricError::DimensionMismatch {
                    point: i,
                    expected: dim,
                    found: c.len(),
                });
            }
            if c.iter().any(|v| !v.is_finite()) {
                return Err(MetricError::NonFiniteCoordinate { point: i });
            }
        }
        let mut dist = alloc::vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let sq: f64 = coords[i]
                    .iter()
                    .zip(&coords[j])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                if coords[i] == coords[j] {
                    return Err(MetricError::DuplicatePoint {
                        first: i,
                        second: j,
                    });
                }
                let d = libm::sqrt(sq);
                dist[i * n + j] = d;
                dist[j * n + i] = d;
            }
        }
        Self::from_flat(n, dist, DEFAULT_METRIC_TOLERANCE)
    }

    #[inline]
    pub fn n_points(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.dist[x * self.n + y]
    }

    pub fn row(&self, x: PointId) -> &[f64] {
        &self.dist[x.0 * self.n..(x.0 + 1) * self.n]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.dist.chunks(self.n).map(|r| r.to_vec()).collect()
    }

    /// `min(d, 1)` entrywise; still a metric.
    pub fn truncate_to_unit(&self) -> FiniteMetricSpace {
        FiniteMetricSpace {
            n: self.n,
            dist: self.dist.iter().map(|&d| d.min(1.0)).collect(),
        }
    }

    pub fn max_distance(&self) -> f64 {
        self.dist.iter().copied().fold(0.0, f64::max)
    }

    pub fn validate(&self, tol: f64) -> ValidationReport {
        validate_flat(self.n, &self.dist, tol)
    }
}

impl Metric for FiniteMetricSpace {
    type Value = f64;

    fn n_points(&self) -> usize {
        self.n
    }

    #[inline]
    fn dist(&self, x: PointId, y: PointId) -> f64 {
        self.dist[x.0 * self.n + y.0]
    }
}

/// An exact metric whose entries share the denominator `2^scale_exp`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DyadicMetric {
    n: usize,
    scale_exp: u32,
    numerators: Vec<u128>,
}

impl DyadicMetric {
    /// `numerators` is row-major `n * n`; no axioms are checked here.
    pub fn from_scaled(n: usize, scale_exp: u32, numerators: Vec<u128>) -> Result<Self, TableError> {
        if n == 0 {
            return Err(TableError::Empty);
        }
        if numerators.len() != n * n {
            return Err(TableError::NotSquare {
                row: 0,
                expected: n * n,
                found: numerators.len(),
            });
        }
        Ok(DyadicMetric {
            n,
            scale_exp,
            numerators,
        })
    }

    #[inline]
    pub fn n_points(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn scale_exp(&self) -> u32 {
        self.scale_exp
    }

    #[inline]
    pub fn numerator(&self, x: PointId, y: PointId) -> u128 {
        self.numerators[x.0 * self.n + y.0]
    }

    /// Row-major numerators over `2^scale_exp`.
    pub fn numerators(&self) -> &[u128] {
        &self.numerators
    }

    pub fn to_f64_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n)
            .map(|x| {
                (0..self.n)
                    .map(|y| self.dist(PointId(x), PointId(y)).to_f64())
                    .collect()
            })
            .collect()
    }

    /// Exact axiom check (no tolerance).
    pub fn validate(&self) -> ValidationReport<DyadicValue> {
        check_axioms(
            self.n,
            |x, y| DyadicValue::new(self.numerators[x * self.n + y], self.scale_exp),
            |a, b| a == b,
            |direct, via| direct <= via,
        )
    }
}

impl Metric for DyadicMetric {
    type Value = DyadicValue;

    fn n_points(&self) -> usize {
        self.n
    }

    #[inline]
    fn dist(&self, x: PointId, y: PointId) -> DyadicValue {
        DyadicValue::new(self.numerators[x.0 * self.n + y.0], self.scale_exp)
    }
}

/// An infimum over a finite set of pairs, with the lexicographically first pair
/// attaining it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SetDistance<V> {
    pub value: V,
    pub attained: (PointId, PointId),
}

/// `d(A, B) = min { d(a, b) : a in A, b in B }`.
pub fn set_distance<M: Metric + ?Sized>(
    m: &M,
    a: &PointSet,
    b: &PointSet,
) -> Result<SetDistance<M::Value>, MetricError> {
    let mut best: Option<SetDistance<M::Value>> = None;
    for x in a {
        for y in b {
            let v = m.dist(x, y);
            if best.is_none_or(|s| v < s.value) {
                best = Some(SetDistance {
                    value: v,
                    attained: (x, y),
                });
            }
        }
    }
    best.ok_or(MetricError::EmptySet)
}

/// `d(x, B)`.
pub fn point_set_distance<M: Metric + ?Sized>(
    m: &M,
    x: PointId,
    b: &PointSet,
) -> Result<SetDistance<M::Value>, MetricError> {
    let mut best: Option<SetDistance<M::Value>> = None;
    for y in b {
        let v = m.dist(x, y);
        if best.is_none_or(|s| v < s.value) {
            best = Some(SetDistance {
                value: v,
                attained: (x, y),
            });
        }
    }
    best.ok_or(MetricError::EmptySet)
}

pub fn diameter<M: Metric + ?Sized>(m: &M, s: &PointSet) -> Result<M::Value, MetricError> {
    if s.is_empty() {
        return Err(MetricError::EmptySet);
    }
    let pts = s.to_vec();
    let mut best = M::Value::zero();
    for (i, &x) in pts.iter().enumerate() {
        for &y in &pts[i + 1..] {
            let v = m.dist(x, y);
            if v > best {
                best = v;
            }
        }
    }
    Ok(best)
}

/// Smallest distance between distinct points.
pub fn min_positive_distance<M: Metric + ?Sized>(m: &M) -> Result<M::Value, MetricError> {
    let n = m.n_points();
    if n < 2 {
        return Err(MetricError::TooFewPoints(n));
    }
    let mut best = m.dist(PointId(0), PointId(1));
    for x in 0..n {
        for y in (x + 1)..n {
            let v = m.dist(PointId(x), PointId(y));
            if v < best {
                best = v;
            }
        }
    }
    Ok(best)
}
