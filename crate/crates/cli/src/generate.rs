//! Seeded instance generators.

use std::f64::consts::TAU;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::instance::{InstanceFile, LabelEntry};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum GeneratorKind {
    /// Concentric circles, one block each, at independent uniform angles.
    Circles,
    /// Parallel horizontal segments, one block each.
    Segments,
    /// Blocks `F x {q}` of a product `F x Q` in Euclidean space.
    ProductFibers,
    /// Uniform points in the unit cube with random labels.
    RandomPartition,
}

impl fmt::Display for GeneratorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GeneratorKind::Circles => "circles",
            GeneratorKind::Segments => "segments",
            GeneratorKind::ProductFibers => "product-fibers",
            GeneratorKind::RandomPartition => "random-partition",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorParams {
    pub points_per_block: usize,
    /// Ignored by `circles`, which has one block per radius.
    pub blocks: usize,
    pub radii: Vec<f64>,
    /// Gap between consecutive segments.
    pub separation: f64,
    pub length: f64,
    /// Dimension of the cube (`random-partition`) or of each factor
    /// (`product-fibers`).
    pub dim: usize,
    /// Per-point perturbation of segment samples, as a fraction of the
    /// spacing. Zero keeps the segments exactly parallel.
    pub jitter: f64,
}

impl Default for GeneratorParams {
    fn default() -> Self {
        GeneratorParams {
            points_per_block: 8,
            blocks: 2,
            radii: vec![1.0, 1.2],
            separation: 1.0,
            length: 1.0,
            dim: 2,
            jitter: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum GenerateError {
    #[error("invalid generator parameter: {0}")]
    InvalidParam(String),
}

fn invalid<T>(msg: impl Into<String>) -> Result<T, GenerateError> {
    Err(GenerateError::InvalidParam(msg.into()))
}

/// Deterministic in `(kind, params, seed)`.
pub fn generate(kind: GeneratorKind, params: &GeneratorParams, seed: u64) -> Result<InstanceFile, GenerateError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = params.points_per_block;
    if k == 0 {
        return invalid("points_per_block must be positive");
    }
    let (coords, labels) = match kind {
        GeneratorKind::Circles => circles(&mut rng, params)?,
        GeneratorKind::Segments => segments(&mut rng, params)?,
        GeneratorKind::ProductFibers => product_fibers(&mut rng, params)?,
        GeneratorKind::RandomPartition => random_partition(&mut rng, params)?,
    };
    Ok(InstanceFile {
        name: Some(format!("{kind}-{seed}")),
        coords: Some(coords),
        dist: None,
        labels: labels.into_iter().map(|b| LabelEntry::Name(format!("B{b}"))).collect(),
    })
}

type Sample = (Vec<Vec<f64>>, Vec<usize>);

fn circles(rng: &mut ChaCha8Rng, params: &GeneratorParams) -> Result<Sample, GenerateError> {
    let radii = &params.radii;
    if radii.is_empty() || radii.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
        return invalid("radii must be positive and finite");
    }
    for (i, r) in radii.iter().enumerate() {
        if radii[..i].contains(r) {
            return invalid("radii must be distinct");
        }
    }
    let k = params.points_per_block;
    let mut coords = Vec::new();
    let mut labels = Vec::new();
    for (b, &r) in radii.iter().enumerate() {
        let mut angles: Vec<f64> = Vec::with_capacity(k);
        while angles.len() < k {
            let t = rng.random::<f64>() * TAU;
            if !angles.contains(&t) {
                angles.push(t);
            }
        }
        angles.sort_by(f64::total_cmp);
        for t in angles {
            coords.push(vec![r * t.cos(), r * t.sin()]);
            labels.push(b);
        }
    }
    Ok((coords, labels))
}

fn segments(rng: &mut ChaCha8Rng, params: &GeneratorParams) -> Result<Sample, GenerateError> {
    let (k, b) = (params.points_per_block, params.blocks);
    if b == 0 {
        return invalid("blocks must be positive");
    }
    if !(params.separation.is_finite() && params.separation > 0.0) {
        return invalid("separation must be positive");
    }
    if !(params.length.is_finite() && params.length > 0.0) {
        return invalid("length must be positive");
    }
    if !(0.0..0.5).contains(&params.jitter) {
        return invalid("jitter must lie in [0, 0.5)");
    }
    let spacing = if k > 1 { params.length / (k - 1) as f64 } else { params.length };
    let shift = rng.random::<f64>();
    let mut coords = Vec::new();
    let mut labels = Vec::new();
    for s in 0..b {
        for i in 0..k {
            let wobble = if params.jitter > 0.0 {
                rng.random_range(-params.jitter..params.jitter) * spacing
            } else {
                0.0
            };
            coords.push(vec![shift + spacing * i as f64 + wobble, params.separation * s as f64]);
            labels.push(s);
        }
    }
    Ok((coords, labels))
}

fn unit_point(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.random::<f64>()).collect()
}

/// `n` distinct random points of the unit cube.
fn distinct_points(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(n);
    while out.len() < n {
        let p = unit_point(rng, dim);
        if !out.contains(&p) {
            out.push(p);
        }
    }
    out
}

fn product_fibers(rng: &mut ChaCha8Rng, params: &GeneratorParams) -> Result<Sample, GenerateError> {
    let (k, b, dim) = (params.points_per_block, params.blocks, params.dim);
    if b == 0 || dim == 0 {
        return invalid("blocks and dim must be positive");
    }
    let fiber = distinct_points(rng, k, dim);
    let base = distinct_points(rng, b, dim);
    let mut coords = Vec::new();
    let mut labels = Vec::new();
    for (j, q) in base.iter().enumerate() {
        for f in &fiber {
            coords.push(f.iter().chain(q).copied().collect());
            labels.push(j);
        }
    }
    Ok((coords, labels))
}

fn random_partition(rng: &mut ChaCha8Rng, params: &GeneratorParams) -> Result<Sample, GenerateError> {
    let (k, b, dim) = (params.points_per_block, params.blocks, params.dim);
    if b == 0 || dim == 0 {
        return invalid("blocks and dim must be positive");
    }
    let n = k * b;
    let coords = distinct_points(rng, n, dim);
    // first b points seed the blocks so none is empty
    let labels = (0..n)
        .map(|i| if i < b { i } else { rng.random_range(0..b) })
        .collect();
    Ok((coords, labels))
}

#[cfg(test)]
mod tests {
    use super::*;
    use parmetric_core::{set_distance, BlockId, DEFAULT_METRIC_TOLERANCE};

    #[test]
    fn segments_example() {
        let p = GeneratorParams {
            points_per_block: 5,
            separation: 1.0,
            ..Default::default()
        };
        let inst = generate(GeneratorKind::Segments, &p, 7).unwrap().resolve(DEFAULT_METRIC_TOLERANCE).unwrap();
        assert_eq!(inst.metric.n_points(), 10);
        assert_eq!(inst.partition.n_blocks(), 2);
        let sd = set_distance(&inst.metric, inst.partition.block(BlockId(0)), inst.partition.block(BlockId(1))).unwrap();
        assert!(sd.value >= 1.0);
    }

    #[test]
    fn deterministic_in_seed() {
        for kind in [
            GeneratorKind::Circles,
            GeneratorKind::Segments,
            GeneratorKind::ProductFibers,
            GeneratorKind::RandomPartition,
        ] {
            let p = GeneratorParams {
                jitter: 0.1,
                ..Default::default()
            };
            let a = generate(kind, &p, 3).unwrap().to_json();
            assert_eq!(a, generate(kind, &p, 3).unwrap().to_json());
            assert_ne!(a, generate(kind, &p, 4).unwrap().to_json());
        }
    }

    #[test]
    fn rejects_bad_params() {
        let p = GeneratorParams {
            radii: vec![1.0, 1.0],
            ..Default::default()
        };
        assert!(generate(GeneratorKind::Circles, &p, 0).is_err());
        let p = GeneratorParams {
            points_per_block: 0,
            ..Default::default()
        };
        assert!(generate(GeneratorKind::Segments, &p, 0).is_err());
        let p = GeneratorParams {
            separation: -1.0,
            ..Default::default()
        };
        assert!(generate(GeneratorKind::Segments, &p, 0).is_err());
    }
}
