//! Covers and partitions of a finite point set, the star operator, and a
//! quantitative continuity diagnostic for sampled covers.

use alloc::vec;
use alloc::vec::Vec;

use crate::metric::{point_set_distance, Distance, Metric};
use crate::points::{BlockId, PointId, PointSet};

/// A raw family of point lists, possibly overlapping or incomplete.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cover {
    pub n_points: usize,
    pub blocks: Vec<Vec<PointId>>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CoverViolation {
    Uncovered { point: PointId },
    EmptyBlock { block: BlockId },
    /// `point` lies in both `first` and `second`.
    Overlap {
        point: PointId,
        first: BlockId,
        second: BlockId,
    },
    OutOfRange { block: BlockId, point: PointId },
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct PartitionReport {
    pub violations: Vec<CoverViolation>,
}

impl PartitionReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl Cover {
    pub fn new(n_points: usize, blocks: Vec<Vec<PointId>>) -> Self {
        Cover { n_points, blocks }
    }

    /// Reports uncovered points, empty blocks and double assignments.
    pub fn validate(&self) -> PartitionReport {
        let mut violations = Vec::new();
        let mut owner: Vec<Option<BlockId>> = vec![None; self.n_points];
        for (b, block) in self.blocks.iter().enumerate() {
            let b = BlockId(b);
            if block.is_empty() {
                violations.push(CoverViolation::EmptyBlock { block: b });
            }
            for &p in block {
                if p.0 >= self.n_points {
                    violations.push(CoverViolation::OutOfRange { block: b, point: p });
                    continue;
                }
                match owner[p.0] {
                    None => owner[p.0] = Some(b),
                    // a point listed twice in one block is harmless
                    Some(first) if first == b => {}
                    Some(first) => violations.push(CoverViolation::Overlap {
                        point: p,
                        first,
                        second: b,
                    }),
                }
            }
        }
        for (p, o) in owner.iter().enumerate() {
            if o.is_none() {
                violations.push(CoverViolation::Uncovered { point: PointId(p) });
            }
        }
        PartitionReport { violations }
    }

    pub fn into_partition(self) -> Result<Partition, PartitionReport> {
        let report = self.validate();
        if !report.is_valid() {
            return Err(report);
        }
        let mut block_of = vec![BlockId(0); self.n_points];
        for (b, block) in self.blocks.iter().enumerate() {
            for &p in block {
                block_of[p.0] = BlockId(b);
            }
        }
        Ok(Partition::from_parts(block_of, self.blocks.len()))
    }
}

/// See [`Cover::validate`].
pub fn validate_partition(cover: &Cover) -> PartitionReport {
    cover.validate()
}

/// A disjoint cover of `0..n_points` by nonempty blocks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    block_of: Vec<BlockId>,
    blocks: Vec<PointSet>,
}

impl Partition {
    fn from_parts(block_of: Vec<BlockId>, n_blocks: usize) -> Self {
        let n = block_of.len();
        let mut blocks = vec![PointSet::empty(n); n_blocks];
        for (p, b) in block_of.iter().enumerate() {
            blocks[b.0].insert(PointId(p));
        }
        Partition { block_of, blocks }
    }

    /// `assignment[p]` is the block index of point `p`. Block indices must be
    /// dense: every index below the maximum has to be used.
    pub fn from_assignment(assignment: &[usize]) -> Result<Self, PartitionReport> {
        let n_blocks = assignment.iter().max().map_or(0, |m| m + 1);
        let mut blocks = vec![Vec::new(); n_blocks];
        for (p, &b) in assignment.iter().enumerate() {
            blocks[b].push(PointId(p));
        }
        Cover::new(assignment.len(), blocks).into_partition()
    }

    /// Every point its own block.
    pub fn singletons(n_points: usize) -> Self {
        Self::from_parts((0..n_points).map(BlockId).collect(), n_points)
    }

    /// The one-block partition `{X}`.
    pub fn whole(n_points: usize) -> Self {
        Self::from_parts(vec![BlockId(0); n_points], usize::from(n_points > 0))
    }

    #[inline]
    pub fn n_points(&self) -> usize {
        self.block_of.len()
    }

    #[inline]
    pub fn n_blocks(&self) -> usize {
        self.blocks.len()
    }

    #[inline]
    pub fn block_of(&self, p: PointId) -> BlockId {
        self.block_of[p.0]
    }

    #[inline]
    pub fn block(&self, b: BlockId) -> &PointSet {
        &self.blocks[b.0]
    }

    pub fn blocks(&self) -> &[PointSet] {
        &self.blocks
    }

    pub fn block_ids(&self) -> impl Iterator<Item = BlockId> {
        (0..self.blocks.len()).map(BlockId)
    }

    /// Block index per point.
    pub fn assignment(&self) -> Vec<usize> {
        self.block_of.iter().map(|b| b.0).collect()
    }

    pub fn to_cover(&self) -> Cover {
        Cover::new(
            self.n_points(),
            self.blocks.iter().map(PointSet::to_vec).collect(),
        )
    }

    /// Union of the blocks meeting `s`.
    pub fn star(&self, s: &PointSet) -> PointSet {
        let mut hit = vec![false; self.blocks.len()];
        let mut out = PointSet::empty(self.n_points());
        for p in s {
            let b = self.block_of[p.0];
            if !hit[b.0] {
                hit[b.0] = true;
                out.union_with(&self.blocks[b.0]);
            }
        }
        out
    }

    /// `star(s) == s`.
    pub fn is_saturated(&self, s: &PointSet) -> bool {
        s.iter().all(|p| self.blocks[self.block_of[p.0].0].is_subset(s))
    }
}

/// Modulus at one scale: the largest one-sided Hausdorff gap between the
/// blocks of two points at distance at most `scale`.
#[derive(Clone, Debug, PartialEq)]
pub struct ModulusEntry {
    pub scale: f64,
    pub modulus: f64,
    /// Pair attaining the modulus, if any pair of distinct points qualifies.
    pub witness: Option<(PointId, PointId)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModulusReport {
    pub entries: Vec<ModulusEntry>,
}

impl ModulusReport {
    /// Whether the modulus never increases as the scale shrinks.
    pub fn is_monotone(&self) -> bool {
        let mut sorted: Vec<&ModulusEntry> = self.entries.iter().collect();
        sorted.sort_by(|a, b| a.scale.total_cmp(&b.scale));
        sorted.windows(2).all(|w| w[0].modulus <= w[1].modulus)
    }
}

/// For each `scale`, the supremum over pairs `x, y` with `m(x, y) <= scale` of
/// `max(h(A_x -> A_y), h(A_y -> A_x))`, where `A_x` is the block of `x` and
/// `h(A -> B) = max_{a in A} m(a, B)`.
///
/// On a finite space every cover is trivially semicontinuous; a modulus that
/// shrinks with the scale indicates that a sampled continuum cover is.
pub fn semicontinuity_diagnostic<M: Metric + ?Sized>(
    m: &M,
    p: &Partition,
    scales: &[f64],
) -> ModulusReport {
    let k = p.n_blocks();
    let mut hausdorff = vec![0.0f64; k * k];
    for a in 0..k {
        for b in 0..k {
            if a == b {
                continue;
            }
            let mut worst = 0.0f64;
            for x in p.block(BlockId(a)) {
                let v = point_set_distance(m, x, p.block(BlockId(b)))
                    .map(|s| s.value.to_f64())
                    .unwrap_or(0.0);
                worst = worst.max(v);
            }
            hausdorff[a * k + b] = worst;
        }
    }
    let n = m.n_points();
    let entries = scales
        .iter()
        .map(|&scale| {
            let mut modulus = 0.0f64;
            let mut witness = None;
            for x in 0..n {
                for y in (x + 1)..n {
                    let (px, py) = (PointId(x), PointId(y));
                    if m.dist(px, py).to_f64() > scale {
                        continue;
                    }
                    let (a, b) = (p.block_of(px).0, p.block_of(py).0);
                    let gap = hausdorff[a * k + b].max(hausdorff[b * k + a]);
                    if witness.is_none() || gap > modulus {
                        modulus = gap;
                        witness = Some((px, py));
                    }
                }
            }
            ModulusEntry {
                scale,
                modulus,
                witness,
            }
        })
        .collect();
    ModulusReport { entries }
}
