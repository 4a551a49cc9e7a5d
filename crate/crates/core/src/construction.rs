//! Construction of a metric under which the blocks of a partition are
//! pairwise parallel.
//!
//! The pipeline works on `rho = min(m, 1)`:
//!
//! 1. For each level `n` in `1..=max_level`, a greedy net of closed balls of
//!    radius `2^-(n+2)` covers the space (the *base cover*).
//! 2. For each block `C`, the base sets meeting `C` are cut down to the
//!    block-saturated neighborhood `W(C)`, yielding a family of members whose
//!    union contains `C`, each of `rho`-diameter at most `2^-n`, and such that a
//!    block meeting one member meets all of them.
//! 3. The gauge `delta(x, y) = 2^-e` records the finest level `e` at which
//!    `x` and `y` share a member (level 0 is the whole space).
//! 4. The metric is the shortest-chain closure of `delta`, computed exactly.
//!
//! Chains realizing the metric can be *transported*: starting from any point
//! of the first block, each step is mirrored inside the same member family,
//! reaching the last block at identical cost. This is what makes every block
//! pair parallel.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::RangeInclusive;

use crate::cover::Partition;
use crate::dyadic::{scale_by_pow2_neg, DyadicValue};
use crate::metric::{diameter, min_positive_distance, DyadicMetric, FiniteMetricSpace, Metric, MetricError};
use crate::points::{BlockId, PointId, PointSet};

/// Finest level the exact closure supports: numerators stay below `2^127`.
pub const MAX_LEVEL: u32 = 126;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum ConstructionError {
    #[error("metric has {metric} points but partition has {partition}")]
    SizeMismatch { metric: usize, partition: usize },
    #[error("metric must be bounded by 1 for level planning (max distance {max})")]
    NotUnitBounded { max: f64 },
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("requested max level {requested} is below the planned {planned}")]
    LevelBelowPlan { requested: u32, planned: u32 },
    #[error("distances need {required} levels, exact arithmetic supports {limit}")]
    ScaleTooFine { required: u32, limit: u32 },
    #[error("scale cover invariant broken: {0}")]
    Claim(#[from] ClaimViolation),
    #[error("no scale-cover member holds both {x} and {y}")]
    MissingStep { x: PointId, y: PointId },
    #[error("chain is malformed: {0}")]
    MalformedChain(&'static str),
    #[error("start point {start} is not in the block of the chain's first point")]
    StartOutsideBlock { start: PointId },
    #[error("transport failed at step {step}: {reason}")]
    Transport { step: usize, reason: &'static str },
}

/// A scale-cover property that failed. None of these can occur for a valid
/// partition; each one indicates a construction bug.
#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum ClaimViolation {
    #[error("level {level}: point {point} not covered by the base cover")]
    BaseCoverIncomplete { level: u32, point: PointId },
    #[error("level {level}: base set {member} has diameter {diameter}")]
    BaseSetTooWide { level: u32, member: usize, diameter: f64 },
    #[error("level {level}, block {block}: {set} is not block-saturated")]
    NotSaturated {
        level: u32,
        block: BlockId,
        set: &'static str,
    },
    #[error("level {level}, block {block}: point {point} of the block is not covered by the members")]
    BlockNotCovered {
        level: u32,
        block: BlockId,
        point: PointId,
    },
    #[error("level {level}, block {block}: member {member} has diameter {diameter} > {bound}")]
    MemberTooWide {
        level: u32,
        block: BlockId,
        member: usize,
        diameter: f64,
        bound: f64,
    },
    #[error("level {level}, block {block}: block {meeting} meets a member but {point} is outside all members")]
    NotContained {
        level: u32,
        block: BlockId,
        meeting: BlockId,
        point: PointId,
    },
    #[error("level {level}, block {block}: block {meeting} misses member {member}")]
    MissesMember {
        level: u32,
        block: BlockId,
        meeting: BlockId,
        member: usize,
    },
}

/// Which levels to build, and the net radius at each.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelPlan {
    max_level: u32,
    radii: Vec<f64>,
}

impl LevelPlan {
    pub fn new(max_level: u32) -> Self {
        LevelPlan {
            max_level,
            radii: (1..=max_level).map(net_radius).collect(),
        }
    }

    #[inline]
    pub fn max_level(&self) -> u32 {
        self.max_level
    }

    /// Net radius `r_n` for `n` in `1..=max_level`.
    pub fn radius(&self, n: u32) -> f64 {
        self.radii[(n - 1) as usize]
    }

    pub fn levels(&self) -> RangeInclusive<u32> {
        1..=self.max_level
    }
}

/// `2^-(n+2)`: balls of this radius have diameter at most `2^-(n+1) < 2^-n`.
pub fn net_radius(n: u32) -> f64 {
    scale_by_pow2_neg(1.0, n + 2)
}

/// `max_level = ceil(log2(1 / min_distance)) + 1`, so the finest base cover is
/// all singletons.
pub fn plan_levels(m: &FiniteMetricSpace) -> Result<LevelPlan, ConstructionError> {
    let max = m.max_distance();
    if max > 1.0 {
        return Err(ConstructionError::NotUnitBounded { max });
    }
    let min = min_positive_distance(m)?;
    // smallest c with 2^-c <= min
    let mut c = 0u32;
    while min < scale_by_pow2_neg(1.0, c) {
        c += 1;
    }
    Ok(LevelPlan::new(c + 1))
}

/// Greedy net: the lowest-index uncovered point `p` contributes the closed ball
/// of radius `net_radius(n)` around it, until every point is covered.
pub fn build_base_cover<M>(m: &M, n: u32) -> Vec<PointSet>
where
    M: Metric<Value = f64> + ?Sized,
{
    let radius = net_radius(n);
    let size = m.n_points();
    let mut covered = PointSet::empty(size);
    let mut cover = Vec::new();
    for center in m.points() {
        if covered.contains(center) {
            continue;
        }
        let ball = PointSet::from_points(size, m.points().filter(|&y| m.dist(center, y) <= radius));
        covered.union_with(&ball);
        cover.push(ball);
    }
    cover
}

/// The per-block part of a scale cover.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockCover {
    pub block: BlockId,
    /// Indices into the base cover of the sets meeting the block.
    pub touching: Vec<usize>,
    /// Star of the complement of the touching sets' union.
    pub barrier: PointSet,
    /// Intersection of the touching sets' stars, minus the barrier.
    pub neighborhood: PointSet,
    /// Nonempty intersections of the neighborhood with the touching sets.
    pub members: Vec<PointSet>,
    /// Base-cover index each member was cut from.
    pub member_sources: Vec<usize>,
}

/// Outcome of the per-level invariant check.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClaimCheck {
    pub max_member_diameter: f64,
    pub bound: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScaleCoverLevel {
    pub level: u32,
    pub base_cover: Vec<PointSet>,
    pub blocks: Vec<BlockCover>,
    pub check: ClaimCheck,
}

impl ScaleCoverLevel {
    pub fn block(&self, b: BlockId) -> &BlockCover {
        &self.blocks[b.0]
    }

    /// Verifies, exhaustively over blocks and members:
    /// the base cover covers the space with sets of diameter `< 2^-n`; barrier
    /// and neighborhood are saturated; the members cover their block and have
    /// diameter `<= 2^-n`; any block meeting a member lies inside their union
    /// and meets every one of them.
    pub fn check_claims<M>(&self, m: &M, p: &Partition) -> Result<ClaimCheck, ClaimViolation>
    where
        M: Metric<Value = f64> + ?Sized,
    {
        let level = self.level;
        let bound = scale_by_pow2_neg(1.0, level);
        let n = p.n_points();
        let mut covered = PointSet::empty(n);
        for (i, v) in self.base_cover.iter().enumerate() {
            covered.union_with(v);
            let d = diameter(m, v).unwrap_or(0.0);
            if d.partial_cmp(&bound) != Some(core::cmp::Ordering::Less) {
                return Err(ClaimViolation::BaseSetTooWide {
                    level,
                    member: i,
                    diameter: d,
                });
            }
        }
        if let Some(point) = covered.complement().first() {
            return Err(ClaimViolation::BaseCoverIncomplete { level, point });
        }

        let mut max_member_diameter = 0.0f64;
        for bc in &self.blocks {
            let block = bc.block;
            for (set, name) in [(&bc.barrier, "barrier"), (&bc.neighborhood, "neighborhood")] {
                if !p.is_saturated(set) {
                    return Err(ClaimViolation::NotSaturated { level, block, set: name });
                }
            }
            let mut union = PointSet::empty(n);
            for (k, u) in bc.members.iter().enumerate() {
                union.union_with(u);
                let d = diameter(m, u).unwrap_or(0.0);
                max_member_diameter = max_member_diameter.max(d);
                if d > bound {
                    return Err(ClaimViolation::MemberTooWide {
                        level,
                        block,
                        member: k,
                        diameter: d,
                        bound,
                    });
                }
            }
            if let Some(point) = p.block(block).difference(&union).first() {
                return Err(ClaimViolation::BlockNotCovered { level, block, point });
            }
            for meeting in p.block_ids() {
                let a = p.block(meeting);
                if !bc.members.iter().any(|u| u.intersects(a)) {
                    continue;
                }
                if let Some(point) = a.difference(&union).first() {
                    return Err(ClaimViolation::NotContained {
                        level,
                        block,
                        meeting,
                        point,
                    });
                }
                if let Some(member) = bc.members.iter().position(|u| !u.intersects(a)) {
                    return Err(ClaimViolation::MissesMember {
                        level,
                        block,
                        meeting,
                        member,
                    });
                }
            }
        }
        Ok(ClaimCheck {
            max_member_diameter,
            bound,
        })
    }
}

/// Builds the level-`n` scale cover for every block and checks its invariants.
pub fn build_scale_cover<M>(m: &M, p: &Partition, n: u32) -> Result<ScaleCoverLevel, ConstructionError>
where
    M: Metric<Value = f64> + ?Sized,
{
    let size = p.n_points();
    if m.n_points() != size {
        return Err(ConstructionError::SizeMismatch {
            metric: m.n_points(),
            partition: size,
        });
    }
    let base_cover = build_base_cover(m, n);
    let stars: Vec<PointSet> = base_cover.iter().map(|v| p.star(v)).collect();

    let blocks = p
        .block_ids()
        .map(|block| {
            let c = p.block(block);
            let touching: Vec<usize> = (0..base_cover.len())
                .filter(|&i| base_cover[i].intersects(c))
                .collect();
            let mut reach = PointSet::empty(size);
            let mut neighborhood = PointSet::full(size);
            for &i in &touching {
                reach.union_with(&base_cover[i]);
                neighborhood.intersect_with(&stars[i]);
            }
            let barrier = p.star(&reach.complement());
            neighborhood.subtract(&barrier);
            let mut members = Vec::new();
            let mut member_sources = Vec::new();
            for &i in &touching {
                let u = neighborhood.intersection(&base_cover[i]);
                if !u.is_empty() {
                    members.push(u);
                    member_sources.push(i);
                }
            }
            BlockCover {
                block,
                touching,
                barrier,
                neighborhood,
                members,
                member_sources,
            }
        })
        .collect();

    let mut level = ScaleCoverLevel {
        level: n,
        base_cover,
        blocks,
        check: ClaimCheck {
            max_member_diameter: 0.0,
            bound: scale_by_pow2_neg(1.0, n),
        },
    };
    level.check = level.check_claims(m, p)?;
    Ok(level)
}

/// The gauge as exponents: `delta(x, y) = 2^-exponent(x, y)` for `x != y`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DeltaTable {
    n: usize,
    exps: Vec<u32>,
}

impl DeltaTable {
    /// Row-major exponents; the diagonal is ignored.
    pub fn from_exponents(n: usize, exps: Vec<u32>) -> Self {
        assert_eq!(exps.len(), n * n, "exponent table must be n * n");
        DeltaTable { n, exps }
    }

    #[inline]
    pub fn n_points(&self) -> usize {
        self.n
    }

    /// Meaningful only for `x != y`.
    #[inline]
    pub fn exponent(&self, x: PointId, y: PointId) -> u32 {
        self.exps[x.0 * self.n + y.0]
    }

    /// `delta(x, x) = 0` by convention.
    pub fn delta(&self, x: PointId, y: PointId) -> DyadicValue {
        if x == y {
            DyadicValue::ZERO
        } else {
            DyadicValue::pow2_neg(self.exponent(x, y))
        }
    }

    /// Largest off-diagonal exponent (0 for a single point).
    pub fn max_exponent(&self) -> u32 {
        let mut best = 0;
        for x in 0..self.n {
            for y in 0..self.n {
                if x != y {
                    best = best.max(self.exps[x * self.n + y]);
                }
            }
        }
        best
    }
}

/// `exponent(x, y)` is the largest level at which some member of some block's
/// scale cover contains both points; 0 (the whole space) if there is none.
pub fn build_delta(levels: &[ScaleCoverLevel], n_points: usize) -> DeltaTable {
    let mut exps = vec![0u32; n_points * n_points];
    for lvl in levels {
        for bc in &lvl.blocks {
            for u in &bc.members {
                let pts = u.to_vec();
                for (i, &x) in pts.iter().enumerate() {
                    for &y in &pts[i + 1..] {
                        let e = &mut exps[x.0 * n_points + y.0];
                        *e = (*e).max(lvl.level);
                        exps[y.0 * n_points + x.0] = *e;
                    }
                }
            }
        }
    }
    DeltaTable { n: n_points, exps }
}

/// Shortest-chain closure of the gauge, by all-pairs relaxation in exact
/// integer units of `2^-s`, where `s` is the largest exponent in the table.
///
/// Since every entry stays at most `2^s`, no sum overflows for `s <= MAX_LEVEL`.
pub fn chain_closure(delta: &DeltaTable) -> Result<DyadicMetric, ConstructionError> {
    let n = delta.n;
    let scale = delta.max_exponent();
    if scale > MAX_LEVEL {
        return Err(ConstructionError::ScaleTooFine {
            required: scale,
            limit: MAX_LEVEL,
        });
    }
    let mut d = vec![0u128; n * n];
    for x in 0..n {
        for y in 0..n {
            if x != y {
                d[x * n + y] = 1u128 << (scale - delta.exps[x * n + y]);
            }
        }
    }
    for k in 0..n {
        for i in 0..n {
            let ik = d[i * n + k];
            for j in 0..n {
                let via = ik + d[k * n + j];
                if via < d[i * n + j] {
                    d[i * n + j] = via;
                }
            }
        }
    }
    Ok(DyadicMetric::from_scaled(n, scale, d).expect("square by construction"))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ConstructionOptions {
    /// Build levels up to this index instead of the planned one. Must not be
    /// below the plan; extra levels leave the result unchanged.
    pub max_level: Option<u32>,
}

/// Everything the construction produced besides the metric.
#[derive(Clone, Debug, PartialEq)]
pub struct ConstructionTrace {
    /// `min(m, 1)`.
    pub rho: FiniteMetricSpace,
    pub partition: Partition,
    pub plan: LevelPlan,
    /// Levels `1..=plan.max_level()`, in order.
    pub levels: Vec<ScaleCoverLevel>,
    pub delta: DeltaTable,
}

impl ConstructionTrace {
    pub fn level(&self, n: u32) -> Option<&ScaleCoverLevel> {
        if n == 0 {
            return None;
        }
        self.levels.get((n - 1) as usize)
    }

    /// Members of the level-`n` scale cover of `block`, for `n >= 1`.
    pub fn members(&self, n: u32, block: BlockId) -> Option<&[PointSet]> {
        self.level(n)
            .and_then(|l| l.blocks.get(block.0))
            .map(|bc| bc.members.as_slice())
    }

    /// Whether the set named by `step` contains `x`. Level 0 is the whole space.
    pub fn step_contains(&self, step: &ChainStep, x: PointId) -> bool {
        if step.level == 0 {
            return x.0 < self.rho.n_points();
        }
        self.members(step.level, step.block)
            .and_then(|ms| ms.get(step.member))
            .is_some_and(|u| u.contains(x))
    }

    /// The first `(block, member)` at the gauge level of `x, y` holding both.
    pub fn locate_step(&self, x: PointId, y: PointId) -> Result<ChainStep, ConstructionError> {
        let level = self.delta.exponent(x, y);
        if level == 0 {
            return Ok(ChainStep {
                level,
                block: self.partition.block_of(x),
                member: 0,
            });
        }
        let lvl = self.level(level).ok_or(ConstructionError::MissingStep { x, y })?;
        for bc in &lvl.blocks {
            if let Some(member) = bc.members.iter().position(|u| u.contains(x) && u.contains(y)) {
                return Ok(ChainStep {
                    level,
                    block: bc.block,
                    member,
                });
            }
        }
        Err(ConstructionError::MissingStep { x, y })
    }
}

/// One step of a chain: the member `member` of the level-`level` scale cover of
/// `block`. At level 0 the member is the whole space.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ChainStep {
    pub level: u32,
    pub block: BlockId,
    pub member: usize,
}

impl ChainStep {
    pub fn cost(&self) -> DyadicValue {
        DyadicValue::pow2_neg(self.level)
    }
}

/// A chain `x_0, .., x_m` with, for each step, a scale-cover member holding
/// both endpoints. `cost` is the sum of `2^-level` over the steps.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainWitness {
    pub points: Vec<PointId>,
    pub steps: Vec<ChainStep>,
    pub cost: DyadicValue,
}

impl ChainWitness {
    pub fn start(&self) -> PointId {
        self.points[0]
    }

    pub fn end(&self) -> PointId {
        *self.points.last().expect("chains are nonempty")
    }

    pub fn is_simple(&self) -> bool {
        let mut seen: Vec<PointId> = self.points.clone();
        seen.sort_unstable();
        seen.windows(2).all(|w| w[0] != w[1])
    }

    /// The same chain walked backwards.
    pub fn reversed(&self) -> ChainWitness {
        ChainWitness {
            points: self.points.iter().rev().copied().collect(),
            steps: self.steps.iter().rev().copied().collect(),
            cost: self.cost,
        }
    }

    /// Checks that each step's member holds both of its endpoints and that
    /// `cost` is the sum of the step costs.
    pub fn verify(&self, trace: &ConstructionTrace) -> Result<(), ConstructionError> {
        if self.points.is_empty() || self.points.len() != self.steps.len() + 1 {
            return Err(ConstructionError::MalformedChain("points and steps disagree"));
        }
        let mut total = DyadicValue::ZERO;
        for (i, step) in self.steps.iter().enumerate() {
            if step.level > trace.plan.max_level() {
                return Err(ConstructionError::MalformedChain("step level beyond the plan"));
            }
            let (x, y) = (self.points[i], self.points[i + 1]);
            if !trace.step_contains(step, x) || !trace.step_contains(step, y) {
                return Err(ConstructionError::MalformedChain("step member misses an endpoint"));
            }
            total = total
                .checked_add(step.cost())
                .ok_or(ConstructionError::MalformedChain("cost overflow"))?;
        }
        if total != self.cost {
            return Err(ConstructionError::MalformedChain("cost is not the sum of step costs"));
        }
        Ok(())
    }
}

/// A chain from `x` to `y` whose cost equals `d(x, y)`: from each point, the
/// lowest-index neighbor `v` with `delta(u, v) + d(v, y) = d(u, y)`.
pub fn optimal_chain(
    trace: &ConstructionTrace,
    d: &DyadicMetric,
    x: PointId,
    y: PointId,
) -> Result<ChainWitness, ConstructionError> {
    let n = d.n_points();
    let mut points = vec![x];
    let mut steps = Vec::new();
    let mut cur = x;
    while cur != y {
        let target = d.dist(cur, y);
        let next = (0..n)
            .map(PointId)
            .find(|&v| v != cur && trace.delta.delta(cur, v) + d.dist(v, y) == target)
            .ok_or(ConstructionError::MalformedChain("metric is not the closure of the gauge"))?;
        steps.push(trace.locate_step(cur, next)?);
        points.push(next);
        cur = next;
    }
    let cost = d.dist(x, y);
    Ok(ChainWitness { points, steps, cost })
}

/// Mirrors `chain` from `start`, a point of the block of `chain.start()`.
///
/// Step `i` reuses the level and block of the input step: the current point
/// lies in some member of that family (its block met the input member), and
/// the block of the input chain's next point meets that member too, so the
/// lowest-index point there becomes the next point. Costs are unchanged.
pub fn transport_chain(
    trace: &ConstructionTrace,
    chain: &ChainWitness,
    start: PointId,
) -> Result<ChainWitness, ConstructionError> {
    if chain.points.is_empty() || chain.points.len() != chain.steps.len() + 1 {
        return Err(ConstructionError::MalformedChain("points and steps disagree"));
    }
    let p = &trace.partition;
    if start.0 >= p.n_points() || p.block_of(start) != p.block_of(chain.start()) {
        return Err(ConstructionError::StartOutsideBlock { start });
    }
    let mut points = Vec::with_capacity(chain.points.len());
    let mut steps = Vec::with_capacity(chain.steps.len());
    points.push(start);
    let mut cur = start;
    for (i, step) in chain.steps.iter().enumerate() {
        let target = p.block(p.block_of(chain.points[i + 1]));
        let (next, member) = if step.level == 0 {
            let next = target.first().expect("blocks are nonempty");
            (next, 0)
        } else {
            let members = trace
                .members(step.level, step.block)
                .ok_or(ConstructionError::Transport {
                    step: i,
                    reason: "step refers to a level or block outside the trace",
                })?;
            let member = members
                .iter()
                .position(|u| u.contains(cur))
                .ok_or(ConstructionError::Transport {
                    step: i,
                    reason: "current point lies in no member of the step's family",
                })?;
            let next = members[member]
                .intersection(target)
                .first()
                .ok_or(ConstructionError::Transport {
                    step: i,
                    reason: "next block misses the chosen member",
                })?;
            (next, member)
        };
        steps.push(ChainStep {
            level: step.level,
            block: step.block,
            member,
        });
        points.push(next);
        cur = next;
    }
    Ok(ChainWitness {
        points,
        steps,
        cost: chain.cost,
    })
}

/// Runs the full pipeline with the planned number of levels.
pub fn construct_parallel_metric(
    m: &FiniteMetricSpace,
    p: &Partition,
) -> Result<(DyadicMetric, ConstructionTrace), ConstructionError> {
    construct_parallel_metric_with(m, p, ConstructionOptions::default())
}

pub fn construct_parallel_metric_with(
    m: &FiniteMetricSpace,
    p: &Partition,
    options: ConstructionOptions,
) -> Result<(DyadicMetric, ConstructionTrace), ConstructionError> {
    if m.n_points() != p.n_points() {
        return Err(ConstructionError::SizeMismatch {
            metric: m.n_points(),
            partition: p.n_points(),
        });
    }
    let rho = m.truncate_to_unit();
    let planned = if rho.n_points() < 2 {
        LevelPlan::new(0)
    } else {
        plan_levels(&rho)?
    };
    let plan = match options.max_level {
        Some(requested) if requested < planned.max_level() => {
            return Err(ConstructionError::LevelBelowPlan {
                requested,
                planned: planned.max_level(),
            })
        }
        Some(requested) => LevelPlan::new(requested),
        None => planned,
    };
    if plan.max_level() > MAX_LEVEL {
        return Err(ConstructionError::ScaleTooFine {
            required: plan.max_level(),
            limit: MAX_LEVEL,
        });
    }
    let levels = plan
        .levels()
        .map(|n| build_scale_cover(&rho, p, n))
        .collect::<Result<Vec<_>, _>>()?;
    let delta = build_delta(&levels, rho.n_points());
    let d = chain_closure(&delta)?;
    let trace = ConstructionTrace {
        rho,
        partition: p.clone(),
        plan,
        levels,
        delta,
    };
    Ok((d, trace))
}
