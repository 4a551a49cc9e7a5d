//! Parallelism certificates, the consequences of parallelism (disjointness and
//! the block quotient metric), and brute-force oracles for the construction.

use alloc::vec;
use alloc::vec::Vec;

use crate::construction::{optimal_chain, transport_chain, ChainWitness, ConstructionError, ConstructionTrace, DeltaTable, ScaleCoverLevel};
use crate::cover::Partition;
use crate::dyadic::DyadicValue;
use crate::metric::{check_axioms, point_set_distance, set_distance, Distance, DyadicMetric, FiniteMetricSpace, Metric, MetricError, ValidationReport};
use crate::points::{BlockId, PointId, PointSet};

/// Largest space [`oracle_chain_infimum`] will enumerate.
pub const ORACLE_MAX_POINTS: usize = 12;

/// Default absolute tolerance when certifying real-valued metrics.
pub const DEFAULT_PARALLEL_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum VerifyError {
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Construction(#[from] ConstructionError),
    #[error("metric has {metric} points but partition has {partition}")]
    SizeMismatch { metric: usize, partition: usize },
    #[error("sets are not parallel: d({witness}, other) = {witness_distance} but d(A, B) = {set_distance}")]
    NotParallel {
        witness: PointId,
        witness_distance: f64,
        set_distance: f64,
    },
    #[error("certificate failed with {violations} violations")]
    CertificateFailed { violations: usize },
    #[error("quotient table violates the metric axioms ({violations} violations)")]
    QuotientInvalid { violations: usize },
    #[error("transported chain from {point} costs {cost}, expected {expected}")]
    TransportCost {
        point: PointId,
        cost: DyadicValue,
        expected: DyadicValue,
    },
    #[error("oracle limited to {limit} points, got {n}")]
    TooLarge { n: usize, limit: usize },
}

/// Which of the two sets the witnessing point belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    /// `d(w, B)` was compared against `d(A, B)`.
    InA,
    /// `d(A, w)` was compared against `d(A, B)`.
    InB,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairViolation<V> {
    pub witness: PointId,
    pub side: Side,
    /// Distance from the witness to the other set.
    pub witness_distance: V,
    pub set_distance: V,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ParallelViolation<V> {
    pub blocks: (BlockId, BlockId),
    pub violation: PairViolation<V>,
}

/// `None` if `d(a, B) = d(A, B) = d(A, b)` within `tol` for all `a`, `b`;
/// otherwise the first failing point, A side before B side, by index.
pub fn is_parallel_pair<M: Metric + ?Sized>(
    m: &M,
    a: &PointSet,
    b: &PointSet,
    tol: f64,
) -> Result<Option<PairViolation<M::Value>>, MetricError> {
    let sd = set_distance(m, a, b)?.value;
    for (set, other, side) in [(a, b, Side::InA), (b, a, Side::InB)] {
        for w in set {
            let v = point_set_distance(m, w, other)?.value;
            if !v.approx_eq(sd, tol) {
                return Ok(Some(PairViolation {
                    witness: w,
                    side,
                    witness_distance: v,
                    set_distance: sd,
                }));
            }
        }
    }
    Ok(None)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PointCheck<V> {
    pub point: PointId,
    pub side: Side,
    pub distance: V,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PairCertificate<V> {
    pub blocks: (BlockId, BlockId),
    pub distance: V,
    pub attained: (PointId, PointId),
    pub checks: Vec<PointCheck<V>>,
}

/// A chain from `point` into the opposite block of `blocks`, costing exactly
/// the block distance.
#[derive(Clone, Debug, PartialEq)]
pub struct TransportWitness {
    pub blocks: (BlockId, BlockId),
    pub point: PointId,
    pub side: Side,
    pub chain: ChainWitness,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParallelCertificate<V> {
    pub tol: f64,
    /// One entry per unordered block pair `(A, B)`, `A < B`, lexicographic.
    pub pairs: Vec<PairCertificate<V>>,
    /// Every failed check, in the order of `pairs`.
    pub violations: Vec<ParallelViolation<V>>,
    pub witnesses: Vec<TransportWitness>,
}

impl<V> ParallelCertificate<V> {
    pub fn verdict(&self) -> Verdict {
        if self.violations.is_empty() {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn first_violation(&self) -> Option<&ParallelViolation<V>> {
        self.violations.first()
    }

    pub fn pair(&self, a: BlockId, b: BlockId) -> Option<&PairCertificate<V>> {
        let key = if a <= b { (a, b) } else { (b, a) };
        self.pairs.iter().find(|pc| pc.blocks == key)
    }
}

/// Checks every block pair of `p` for parallelism under `m`.
pub fn certify_parallel<M: Metric + ?Sized>(
    m: &M,
    p: &Partition,
    tol: f64,
) -> Result<ParallelCertificate<M::Value>, VerifyError> {
    if m.n_points() != p.n_points() {
        return Err(VerifyError::SizeMismatch {
            metric: m.n_points(),
            partition: p.n_points(),
        });
    }
    let k = p.n_blocks();
    let mut pairs = Vec::with_capacity(k * k.saturating_sub(1) / 2);
    let mut violations = Vec::new();
    for i in 0..k {
        for j in (i + 1)..k {
            let blocks = (BlockId(i), BlockId(j));
            let (a, b) = (p.block(blocks.0), p.block(blocks.1));
            let sd = set_distance(m, a, b)?;
            let mut checks = Vec::with_capacity(a.len() + b.len());
            for (set, other, side) in [(a, b, Side::InA), (b, a, Side::InB)] {
                for w in set {
                    let v = point_set_distance(m, w, other)?.value;
                    let holds = v.approx_eq(sd.value, tol);
                    if !holds {
                        violations.push(ParallelViolation {
                            blocks,
                            violation: PairViolation {
                                witness: w,
                                side,
                                witness_distance: v,
                                set_distance: sd.value,
                            },
                        });
                    }
                    checks.push(PointCheck {
                        point: w,
                        side,
                        distance: v,
                        holds,
                    });
                }
            }
            pairs.push(PairCertificate {
                blocks,
                distance: sd.value,
                attained: sd.attained,
                checks,
            });
        }
    }
    Ok(ParallelCertificate {
        tol,
        pairs,
        violations,
        witnesses: Vec::new(),
    })
}

/// Exact certificate (`tol = 0`) for a constructed metric, with a transported
/// chain for every point of every block pair.
///
/// For the pair `(A, B)` the optimal chain between the attaining points is
/// transported from each `a` in `A`, and its reverse from each `b` in `B`;
/// each transported chain must verify and cost exactly `d(A, B)`.
pub fn certify_constructed(
    d: &DyadicMetric,
    trace: &ConstructionTrace,
) -> Result<ParallelCertificate<DyadicValue>, VerifyError> {
    let p = &trace.partition;
    let mut cert = certify_parallel(d, p, 0.0)?;
    let mut witnesses = Vec::new();
    for pc in &cert.pairs {
        let (a0, b0) = pc.attained;
        let forward = optimal_chain(trace, d, a0, b0)?;
        let backward = forward.reversed();
        for (block, template, side) in [(pc.blocks.0, &forward, Side::InA), (pc.blocks.1, &backward, Side::InB)] {
            for point in p.block(block) {
                let chain = transport_chain(trace, template, point)?;
                chain.verify(trace)?;
                if chain.cost != pc.distance {
                    return Err(VerifyError::TransportCost {
                        point,
                        cost: chain.cost,
                        expected: pc.distance,
                    });
                }
                witnesses.push(TransportWitness {
                    blocks: pc.blocks,
                    point,
                    side,
                    chain,
                });
            }
        }
    }
    cert.witnesses = witnesses;
    Ok(cert)
}

/// Outcome of the disjoint-or-equal test for a parallel pair.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Dichotomy {
    Disjoint,
    Coincide,
    /// Parallel, yet overlapping without being equal (or at distance zero
    /// without overlapping). Only possible for inconsistent input such as a
    /// loose tolerance or a pseudometric; `witness` lies in exactly one set.
    Inconsistent { witness: PointId, set_distance: f64 },
}

/// Parallel closed sets are disjoint or equal. Requires the pair to pass
/// [`is_parallel_pair`] at `tol`.
pub fn disjoint_or_coincide<M: Metric + ?Sized>(
    m: &M,
    a: &PointSet,
    b: &PointSet,
    tol: f64,
) -> Result<Dichotomy, VerifyError> {
    if let Some(v) = is_parallel_pair(m, a, b, tol)? {
        return Err(VerifyError::NotParallel {
            witness: v.witness,
            witness_distance: v.witness_distance.to_f64(),
            set_distance: v.set_distance.to_f64(),
        });
    }
    if a == b {
        return Ok(Dichotomy::Coincide);
    }
    let sd = set_distance(m, a, b)?.value;
    let symmetric = a.difference(b).union(&b.difference(a));
    let witness = symmetric.first().expect("sets differ");
    if a.intersects(b) || sd.approx_eq(<M::Value as Distance>::zero(), tol) {
        return Ok(Dichotomy::Inconsistent {
            witness,
            set_distance: sd.to_f64(),
        });
    }
    Ok(Dichotomy::Disjoint)
}

pub type PairDichotomy = ((BlockId, BlockId), Dichotomy);

/// Dichotomy outcome for every block pair, `A < B`.
pub fn check_necessity<M: Metric + ?Sized>(
    m: &M,
    p: &Partition,
    tol: f64,
) -> Result<Vec<PairDichotomy>, VerifyError> {
    let k = p.n_blocks();
    let mut out = Vec::new();
    for i in 0..k {
        for j in (i + 1)..k {
            let verdict = disjoint_or_coincide(m, p.block(BlockId(i)), p.block(BlockId(j)), tol)?;
            out.push(((BlockId(i), BlockId(j)), verdict));
        }
    }
    Ok(out)
}

/// Block-level distances `D(A, B) = d(A, B)` of a parallel metric.
#[derive(Clone, Debug, PartialEq)]
pub struct QuotientMetric<V> {
    n_blocks: usize,
    table: Vec<V>,
}

impl<V: Distance> QuotientMetric<V> {
    pub fn n_blocks(&self) -> usize {
        self.n_blocks
    }

    pub fn get(&self, a: BlockId, b: BlockId) -> V {
        self.table[a.0 * self.n_blocks + b.0]
    }

    pub fn rows(&self) -> Vec<Vec<V>> {
        self.table.chunks(self.n_blocks.max(1)).map(|r| r.to_vec()).collect()
    }

    /// Metric axioms on blocks with absolute tolerance `tol` (exact at 0).
    pub fn validate(&self, tol: f64) -> ValidationReport<V> {
        let k = self.n_blocks;
        check_axioms(
            k,
            |x, y| self.table[x * k + y],
            |a, b| a.approx_eq(b, tol),
            |direct, via| direct.le_sum(via, V::zero(), tol),
        )
    }
}

impl<V: Distance> Metric for QuotientMetric<V> {
    type Value = V;

    fn n_points(&self) -> usize {
        self.n_blocks
    }

    fn dist(&self, x: PointId, y: PointId) -> V {
        self.table[x.0 * self.n_blocks + y.0]
    }
}

/// The quotient of a parallel metric, validated at the certificate's tolerance.
pub fn quotient_metric<V: Distance>(
    p: &Partition,
    cert: &ParallelCertificate<V>,
) -> Result<QuotientMetric<V>, VerifyError> {
    if !cert.passed() {
        return Err(VerifyError::CertificateFailed {
            violations: cert.violations.len(),
        });
    }
    let k = p.n_blocks();
    let mut table = vec![V::zero(); k * k];
    for pc in &cert.pairs {
        let (a, b) = (pc.blocks.0 .0, pc.blocks.1 .0);
        table[a * k + b] = pc.distance;
        table[b * k + a] = pc.distance;
    }
    let q = QuotientMetric { n_blocks: k, table };
    let report = q.validate(cert.tol);
    if !report.is_valid() {
        return Err(VerifyError::QuotientInvalid {
            violations: report.violations.len(),
        });
    }
    Ok(q)
}

/// First pair with `rho(x, y) > d(x, y)` or `d(x, y) > 1`, compared exactly.
pub fn check_domination(rho: &FiniteMetricSpace, d: &DyadicMetric) -> Option<(PointId, PointId)> {
    let n = rho.n_points();
    for x in 0..n {
        for y in 0..n {
            let (px, py) = (PointId(x), PointId(y));
            let r = DyadicValue::from_f64(rho.dist(px, py)).expect("rho is finite and at most 1");
            let dv = d.dist(px, py);
            if r > dv || dv > DyadicValue::ONE {
                return Some((px, py));
            }
        }
    }
    None
}

/// Minimum of `sum delta(x_{i-1}, x_i)` over all simple chains from `x` to `y`,
/// by depth-first enumeration (branches already costlier than the best found
/// are cut; weights are positive, so this cannot lose the minimum).
pub fn oracle_chain_infimum(delta: &DeltaTable, x: PointId, y: PointId) -> Result<DyadicValue, VerifyError> {
    let n = delta.n_points();
    if n > ORACLE_MAX_POINTS {
        return Err(VerifyError::TooLarge {
            n,
            limit: ORACLE_MAX_POINTS,
        });
    }
    if x == y {
        return Ok(DyadicValue::ZERO);
    }
    let mut visited = vec![false; n];
    visited[x.0] = true;
    let mut best = delta.delta(x, y);
    explore(delta, x, y, DyadicValue::ZERO, &mut visited, &mut best);
    Ok(best)
}

fn explore(
    delta: &DeltaTable,
    at: PointId,
    target: PointId,
    cost: DyadicValue,
    visited: &mut [bool],
    best: &mut DyadicValue,
) {
    for v in 0..visited.len() {
        if visited[v] {
            continue;
        }
        let next = PointId(v);
        let c = cost + delta.delta(at, next);
        if c >= *best {
            continue;
        }
        if next == target {
            *best = c;
            continue;
        }
        visited[v] = true;
        explore(delta, next, target, c, visited, best);
        visited[v] = false;
    }
}

/// Largest level `n` with some block `C` and member `U` of its level-`n` scale
/// cover containing both `x` and `y`; 0 if none.
pub fn oracle_delta(levels: &[ScaleCoverLevel], x: PointId, y: PointId) -> u32 {
    let mut best = 0;
    for lvl in levels {
        for bc in &lvl.blocks {
            for u in &bc.members {
                if u.contains(x) && u.contains(y) && lvl.level > best {
                    best = lvl.level;
                }
            }
        }
    }
    best
}
