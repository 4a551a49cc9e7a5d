//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::time::Instant;

use parmetric::{generate, run_command, GeneratorKind, GeneratorParams, Instance, InstanceFile, LoadError};
use parmetric_core::{
    certify_constructed, certify_parallel, check_necessity, construct_parallel_metric,
    construct_parallel_metric_with, oracle_chain_infimum, quotient_metric, ConstructionOptions,
    ConstructionTrace, CoverViolation, DeltaTable, Dichotomy, DyadicMetric, DyadicValue, Metric,
    Partition, PointId, Side,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

/// Tolerance for constructed (dyadic) metrics: exact.
const TOL_DYADIC: f64 = 0.0;
/// Tolerance for real-valued input metrics.
const TOL_REAL: f64 = 1e-9;
const METRIC_TOL: f64 = 1e-9;

const MAIN_INSTANCES: usize = 200;
const MAX_POINTS: usize = 64;
const MAX_BLOCKS: usize = 8;
const ORACLE_INSTANCES: usize = 120;
const ORACLE_CLOSURE_POINTS: usize = 8;
const ORACLE_GAUGE_POINTS: usize = 16;
const MIN_TRANSPORT: usize = 50;
const MIN_STABILITY: usize = 50;
const EXTRA_LEVELS: u32 = 3;

struct Outcome {
    pass: bool,
    summary: String,
    problems: Vec<String>,
}

impl Outcome {
    fn new(pass: bool, summary: String, problems: Vec<String>) -> Self {
        Outcome { pass: pass && problems.is_empty(), summary, problems }
    }
}

// ---------------------------------------------------------------- instances

#[allow(clippy::needless_range_loop)]
fn table_instance(rng: &mut ChaCha8Rng, n: usize, blocks: usize) -> InstanceFile {
    // entries in [0.4, 0.8] always satisfy the triangle inequality
    let mut rows = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..i {
            let v = 0.4 + 0.4 * rng.random::<f64>();
            rows[i][j] = v;
            rows[j][i] = v;
        }
    }
    let labels = (0..n)
        .map(|i| {
            let b = if i < blocks { i } else { rng.random_range(0..blocks) };
            parmetric::instance::LabelEntry::Name(format!("T{b}"))
        })
        .collect();
    InstanceFile {
        name: Some("table".into()),
        coords: None,
        dist: Some(parmetric::instance::DistTable::Rows(rows)),
        labels,
    }
}

/// A mixed-generator instance with at most `max_points` points and
/// `MAX_BLOCKS` blocks.
fn random_instance(seed: u64, max_points: usize) -> (String, Instance) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let family = seed % 5;
    let cap = |k: usize, b: usize| k.min((max_points / b).max(1));
    let file = match family {
        0 => {
            let blocks = rng.random_range(1..=MAX_BLOCKS.min(max_points));
            let p = GeneratorParams {
                blocks,
                points_per_block: cap(rng.random_range(1..=8), blocks),
                dim: rng.random_range(1..=3),
                ..Default::default()
            };
            generate(GeneratorKind::RandomPartition, &p, seed).unwrap()
        }
        1 => {
            let blocks = rng.random_range(1..=4usize.min(max_points));
            let p = GeneratorParams {
                blocks,
                points_per_block: cap(rng.random_range(2..=12), blocks),
                separation: rng.random_range(0.05..1.5),
                length: rng.random_range(0.3..2.0),
                jitter: if rng.random_bool(0.5) { 0.0 } else { rng.random_range(0.0..0.45) },
                ..Default::default()
            };
            generate(GeneratorKind::Segments, &p, seed).unwrap()
        }
        2 => {
            let blocks = rng.random_range(1..=MAX_BLOCKS.min(max_points));
            let p = GeneratorParams {
                blocks,
                points_per_block: cap(rng.random_range(1..=8), blocks),
                dim: rng.random_range(1..=2),
                ..Default::default()
            };
            generate(GeneratorKind::ProductFibers, &p, seed).unwrap()
        }
        3 => {
            let count = rng.random_range(2..=4usize.min(max_points.max(2)));
            let mut radii: Vec<f64> = Vec::new();
            while radii.len() < count {
                let r = rng.random_range(0.05..1.5);
                if !radii.contains(&r) {
                    radii.push(r);
                }
            }
            let p = GeneratorParams {
                points_per_block: cap(rng.random_range(2..=16), count),
                radii,
                ..Default::default()
            };
            generate(GeneratorKind::Circles, &p, seed).unwrap()
        }
        _ => {
            let n = rng.random_range(2..=max_points);
            let blocks = rng.random_range(1..=MAX_BLOCKS.min(n));
            table_instance(&mut rng, n, blocks)
        }
    };
    let name = format!("{}#{seed}", file.name.clone().unwrap_or_default());
    let inst = file.resolve(METRIC_TOL).unwrap_or_else(|e| panic!("{name}: {e}"));
    (name, inst)
}

// ---------------------------------------------------------------- independent checks

fn pow2_neg_f64(n: u32) -> f64 {
    2f64.powi(-(n as i32))
}

fn to_mask(set: impl IntoIterator<Item = PointId>, n: usize) -> Vec<bool> {
    let mut m = vec![false; n];
    for p in set {
        m[p.0] = true;
    }
    m
}

fn brute_point_to_set(d: &DyadicMetric, x: usize, set: &[usize]) -> DyadicValue {
    set.iter().map(|&y| d.dist(PointId(x), PointId(y))).min().unwrap()
}

/// `d(a, B) = d(A, B) = d(A, b)` for every block pair, by direct scans.
fn brute_parallel(d: &DyadicMetric, p: &Partition) -> Result<(), String> {
    let blocks: Vec<Vec<usize>> = p.blocks().iter().map(|b| b.iter().map(|x| x.0).collect()).collect();
    for i in 0..blocks.len() {
        for j in (i + 1)..blocks.len() {
            let (a, b) = (&blocks[i], &blocks[j]);
            let dab = a.iter().map(|&x| brute_point_to_set(d, x, b)).min().unwrap();
            for &x in a {
                if brute_point_to_set(d, x, b) != dab {
                    return Err(format!("d({x}, B{j}) != d(B{i}, B{j})"));
                }
            }
            for &y in b {
                if brute_point_to_set(d, y, a) != dab {
                    return Err(format!("d(B{i}, {y}) != d(B{i}, B{j})"));
                }
            }
        }
    }
    Ok(())
}

/// `min(m, 1) <= d <= 1`, truncating the input here rather than trusting the
/// trace.
fn domination(inst: &Instance, d: &DyadicMetric) -> Result<(), String> {
    let n = d.n_points();
    for x in 0..n {
        for y in 0..n {
            let r = inst.metric.get(x, y).min(1.0);
            let dv = d.dist(PointId(x), PointId(y));
            let exact = DyadicValue::from_f64(r).ok_or("unrepresentable input distance")?;
            if exact > dv || dv > DyadicValue::ONE {
                return Err(format!("rho <= d <= 1 fails at ({x}, {y}): rho {r}, d {dv}"));
            }
        }
    }
    Ok(())
}

fn star(p: &Partition, s: &[bool]) -> Vec<bool> {
    let mut out = vec![false; s.len()];
    for b in p.blocks() {
        if b.iter().any(|x| s[x.0]) {
            for x in b {
                out[x.0] = true;
            }
        }
    }
    out
}

/// Recomputes every level from the definitions with plain boolean vectors
/// and checks both claim conditions exhaustively.
fn check_claims(trace: &ConstructionTrace) -> Result<usize, String> {
    let rho = &trace.rho;
    let p = &trace.partition;
    let n = rho.n_points();
    let mut checked = 0;
    if trace.levels.len() != trace.plan.max_level() as usize {
        return Err("trace does not hold every level".into());
    }
    for (idx, lvl) in trace.levels.iter().enumerate() {
        let level = idx as u32 + 1;
        if lvl.level != level {
            return Err(format!("level {idx} labelled {}", lvl.level));
        }
        let bound = pow2_neg_f64(level);
        let radius = pow2_neg_f64(level + 2);
        // greedy net
        let mut covered = vec![false; n];
        let mut base: Vec<Vec<bool>> = Vec::new();
        while let Some(c) = (0..n).find(|&x| !covered[x]) {
            let ball: Vec<bool> = (0..n).map(|y| rho.get(c, y) <= radius).collect();
            for y in 0..n {
                covered[y] |= ball[y];
            }
            base.push(ball);
        }
        let trace_base: Vec<Vec<bool>> = lvl.base_cover.iter().map(|s| to_mask(s.iter(), n)).collect();
        if trace_base != base {
            return Err(format!("level {level}: base cover differs from the greedy net"));
        }
        for v in &base {
            for x in 0..n {
                for y in 0..n {
                    if v[x] && v[y] && rho.get(x, y) >= bound {
                        return Err(format!("level {level}: base set too wide"));
                    }
                }
            }
        }
        for (bi, block) in p.blocks().iter().enumerate() {
            let c = to_mask(block.iter(), n);
            let touching: Vec<&Vec<bool>> = base.iter().filter(|v| (0..n).any(|x| v[x] && c[x])).collect();
            let union: Vec<bool> = (0..n).map(|x| touching.iter().any(|v| v[x])).collect();
            let outside: Vec<bool> = union.iter().map(|u| !u).collect();
            let f = star(p, &outside);
            let mut w = vec![true; n];
            for v in &touching {
                let sv = star(p, v);
                for x in 0..n {
                    w[x] &= sv[x];
                }
            }
            for x in 0..n {
                w[x] &= !f[x];
            }
            let members: Vec<Vec<bool>> = touching
                .iter()
                .map(|v| (0..n).map(|x| v[x] && w[x]).collect::<Vec<bool>>())
                .filter(|u| u.iter().any(|&b| b))
                .collect();
            let bc = &lvl.blocks[bi];
            let trace_members: Vec<Vec<bool>> = bc.members.iter().map(|u| to_mask(u.iter(), n)).collect();
            if trace_members != members {
                return Err(format!("level {level}, block {bi}: members differ from the definition"));
            }
            if (0..n).any(|x| c[x] && !members.iter().any(|u| u[x])) {
                return Err(format!("level {level}, block {bi}: block not covered by its members"));
            }
            // (i)
            for u in &members {
                for x in 0..n {
                    for y in 0..n {
                        if u[x] && u[y] && rho.get(x, y) > bound {
                            return Err(format!("level {level}, block {bi}: claim (i) fails for ({x}, {y})"));
                        }
                    }
                }
            }
            // (ii)
            let member_union: Vec<bool> = (0..n).map(|x| members.iter().any(|u| u[x])).collect();
            for (ai, other) in p.blocks().iter().enumerate() {
                let a = to_mask(other.iter(), n);
                let meets = |u: &Vec<bool>| (0..n).any(|x| a[x] && u[x]);
                if members.iter().any(meets) {
                    if (0..n).any(|x| a[x] && !member_union[x]) {
                        return Err(format!("level {level}, block {bi}: block {ai} not inside the members"));
                    }
                    if !members.iter().all(meets) {
                        return Err(format!("level {level}, block {bi}: block {ai} misses a member"));
                    }
                }
            }
            checked += 1;
        }
    }
    Ok(checked)
}

fn triple_scan_exponent(trace: &ConstructionTrace, x: PointId, y: PointId) -> u32 {
    let mut e = 0;
    for lvl in &trace.levels {
        for bc in &lvl.blocks {
            for u in &bc.members {
                if u.contains(x) && u.contains(y) {
                    e = e.max(lvl.level);
                }
            }
        }
    }
    e
}

/// Minimum over every simple path, no pruning.
fn exhaustive_chain(delta: &DeltaTable, x: usize, y: usize) -> DyadicValue {
    fn go(delta: &DeltaTable, at: usize, y: usize, cost: DyadicValue, used: &mut [bool], best: &mut Option<DyadicValue>) {
        if at == y {
            if best.is_none_or(|b| cost < b) {
                *best = Some(cost);
            }
            return;
        }
        for v in 0..used.len() {
            if !used[v] {
                used[v] = true;
                go(delta, v, y, cost + delta.delta(PointId(at), PointId(v)), used, best);
                used[v] = false;
            }
        }
    }
    let mut used = vec![false; delta.n_points()];
    used[x] = true;
    let mut best = None;
    go(delta, x, y, DyadicValue::ZERO, &mut used, &mut best);
    best.unwrap()
}

// ---------------------------------------------------------------- criteria

struct Built {
    name: String,
    inst: Instance,
    d: DyadicMetric,
    trace: ConstructionTrace,
}

fn main_theorem(built: &[Built]) -> Outcome {
    let mut problems = Vec::new();
    let mut certified = 0;
    let max_n = built.iter().map(|b| b.d.n_points()).max().unwrap_or(0);
    let max_k = built.iter().map(|b| b.inst.partition.n_blocks()).max().unwrap_or(0);
    for b in built {
        let report = b.d.validate();
        if !report.is_valid() {
            problems.push(format!("{}: exact metric validation fails", b.name));
            continue;
        }
        match certify_parallel(&b.d, &b.inst.partition, TOL_DYADIC) {
            Ok(c) if c.passed() => {}
            Ok(c) => {
                problems.push(format!("{}: {} parallel violations", b.name, c.violations.len()));
                continue;
            }
            Err(e) => {
                problems.push(format!("{}: {e}", b.name));
                continue;
            }
        }
        if let Err(e) = brute_parallel(&b.d, &b.inst.partition).and_then(|_| domination(&b.inst, &b.d)) {
            problems.push(format!("{}: {e}", b.name));
            continue;
        }
        certified += 1;
    }
    // instances where d is not just the discrete metric
    let nontrivial = built.iter().filter(|b| b.d.scale_exp() > 0).count();
    Outcome::new(
        built.len() >= MAIN_INSTANCES && max_n <= MAX_POINTS && max_k <= MAX_BLOCKS,
        format!(
            "main theorem: {certified}/{} instances (n <= {max_n}, <= {max_k} blocks, {nontrivial} with non-constant d) certified at tol {TOL_DYADIC}, exact metric, rho <= d <= 1",
            built.len()
        ),
        problems,
    )
}

fn claims(built: &[Built]) -> Outcome {
    let mut problems = Vec::new();
    let mut checks = 0;
    let mut levels = 0;
    for b in built {
        match check_claims(&b.trace) {
            Ok(c) => {
                checks += c;
                levels += b.trace.levels.len();
            }
            Err(e) => problems.push(format!("{}: {e}", b.name)),
        }
    }
    Outcome::new(
        true,
        format!(
            "claim conditions (i) and (ii): {checks} (level, block) covers over {levels} levels of {} instances recomputed and checked",
            built.len()
        ),
        problems,
    )
}

fn oracles() -> Outcome {
    let mut problems = Vec::new();
    let mut closure_instances = 0;
    let mut gauge_instances = 0;
    let mut pairs = 0;
    for i in 0..(2 * ORACLE_INSTANCES) as u64 {
        let small = i < ORACLE_INSTANCES as u64;
        let limit = if small { ORACLE_CLOSURE_POINTS } else { ORACLE_GAUGE_POINTS };
        let (name, inst) = random_instance(10_000 + i, limit);
        if inst.metric.n_points() > limit {
            problems.push(format!("{name}: generator exceeded {limit} points"));
            continue;
        }
        let (d, trace) = match construct_parallel_metric(&inst.metric, &inst.partition) {
            Ok(x) => x,
            Err(e) => {
                problems.push(format!("{name}: {e}"));
                continue;
            }
        };
        let n = d.n_points();
        let mut ok = true;
        for x in 0..n {
            for y in 0..n {
                if x == y {
                    continue;
                }
                let (px, py) = (PointId(x), PointId(y));
                if trace.delta.exponent(px, py) != triple_scan_exponent(&trace, px, py) {
                    problems.push(format!("{name}: gauge differs at ({x}, {y})"));
                    ok = false;
                }
                if small {
                    let brute = exhaustive_chain(&trace.delta, x, y);
                    let lib = oracle_chain_infimum(&trace.delta, px, py);
                    if d.dist(px, py) != brute || lib != Ok(brute) {
                        problems.push(format!("{name}: closure differs at ({x}, {y})"));
                        ok = false;
                    }
                    pairs += 1;
                }
            }
        }
        if ok {
            gauge_instances += 1;
            if small {
                closure_instances += 1;
            }
        }
    }
    Outcome::new(
        closure_instances >= 100 && gauge_instances >= 100,
        format!(
            "oracles: closure = exhaustive simple-chain minimum on {closure_instances} instances (<= {ORACLE_CLOSURE_POINTS} points, {pairs} ordered pairs); gauge = triple scan on {gauge_instances} instances (<= {ORACLE_GAUGE_POINTS} points)"
        ),
        problems,
    )
}

fn transport(built: &[Built]) -> Outcome {
    let mut problems = Vec::new();
    let mut instances = 0;
    let mut chains = 0;
    for b in built {
        let p = &b.inst.partition;
        let cert = match certify_constructed(&b.d, &b.trace) {
            Ok(c) => c,
            Err(e) => {
                problems.push(format!("{}: {e}", b.name));
                continue;
            }
        };
        let mut ok = true;
        for pc in &cert.pairs {
            for (block, side) in [(pc.blocks.0, Side::InA), (pc.blocks.1, Side::InB)] {
                let target = if side == Side::InA { pc.blocks.1 } else { pc.blocks.0 };
                let target_pts: Vec<usize> = p.block(target).iter().map(|x| x.0).collect();
                for a in p.block(block) {
                    let w = cert.witnesses.iter().find(|w| w.blocks == pc.blocks && w.side == side && w.point == a);
                    let Some(w) = w else {
                        problems.push(format!("{}: no witness from {a}", b.name));
                        ok = false;
                        continue;
                    };
                    let c = &w.chain;
                    let cost = c.steps.iter().fold(DyadicValue::ZERO, |s, st| s + DyadicValue::pow2_neg(st.level));
                    let links_ok = c.points.windows(2).zip(&c.steps).all(|(xy, st)| {
                        st.level == 0
                            || b.trace
                                .members(st.level, st.block)
                                .and_then(|m| m.get(st.member))
                                .is_some_and(|u| u.contains(xy[0]) && u.contains(xy[1]))
                    });
                    let ends_ok = c.points.first() == Some(&a) && p.block_of(*c.points.last().unwrap()) == target;
                    let to_set = brute_point_to_set(&b.d, a.0, &target_pts);
                    if !(links_ok && ends_ok && c.is_simple() && cost == c.cost && cost == pc.distance && to_set == pc.distance) {
                        problems.push(format!("{}: bad transported chain from {a}", b.name));
                        ok = false;
                    }
                    chains += 1;
                }
            }
        }
        if ok {
            instances += 1;
        }
    }
    Outcome::new(
        instances >= MIN_TRANSPORT,
        format!("transport: {chains} transported chains on {instances} instances cost exactly d(A, B) and link through scale-cover members"),
        problems,
    )
}

fn necessity(built: &[Built]) -> Outcome {
    let mut problems = Vec::new();
    let mut dyadic = 0;
    let mut real_input = 0;
    let mut real_singletons = 0;
    let mut quotient_triangles = 0usize;
    let check = |name: &str, verdicts: Vec<((parmetric_core::BlockId, parmetric_core::BlockId), Dichotomy)>, problems: &mut Vec<String>| {
        let bad = verdicts.iter().filter(|(_, v)| !matches!(v, Dichotomy::Disjoint | Dichotomy::Coincide)).count();
        if bad > 0 {
            problems.push(format!("{name}: {bad} block pairs neither disjoint nor equal"));
        }
        bad == 0
    };
    for b in built {
        let p = &b.inst.partition;
        let cert = certify_parallel(&b.d, p, TOL_DYADIC).unwrap();
        let ok = match check_necessity(&b.d, p, TOL_DYADIC) {
            Ok(v) => check(&b.name, v, &mut problems),
            Err(e) => {
                problems.push(format!("{}: {e}", b.name));
                false
            }
        };
        let q = match quotient_metric(p, &cert) {
            Ok(q) => q,
            Err(e) => {
                problems.push(format!("{}: {e}", b.name));
                continue;
            }
        };
        let k = q.n_blocks();
        let id = parmetric_core::BlockId;
        for x in 0..k {
            for y in 0..k {
                for z in 0..k {
                    quotient_triangles += 1;
                    if q.get(id(x), id(z)) > q.get(id(x), id(y)) + q.get(id(y), id(z)) {
                        problems.push(format!("{}: quotient triangle fails", b.name));
                    }
                }
            }
        }
        if ok && q.validate(TOL_DYADIC).is_valid() {
            dyadic += 1;
        }
        // the input metric itself, when it happens to be parallel
        for (label, part) in [("input", p.clone()), ("singletons", Partition::singletons(p.n_points()))] {
            let m = &b.inst.metric;
            let c = certify_parallel(m, &part, TOL_REAL).unwrap();
            if !c.passed() {
                continue;
            }
            let name = format!("{} ({label})", b.name);
            let ok = match check_necessity(m, &part, TOL_REAL) {
                Ok(v) => check(&name, v, &mut problems),
                Err(e) => {
                    problems.push(format!("{name}: {e}"));
                    false
                }
            };
            match quotient_metric(&part, &c) {
                Ok(q) if q.validate(TOL_REAL).is_valid() => {
                    if ok && label == "input" {
                        real_input += 1;
                    } else if ok {
                        real_singletons += 1;
                    }
                }
                Ok(_) => problems.push(format!("{name}: quotient violates the axioms")),
                Err(e) => problems.push(format!("{name}: {e}")),
            }
        }
    }
    Outcome::new(
        dyadic >= MAIN_INSTANCES && real_input >= 20,
        format!(
            "necessity: {dyadic} constructed metrics (tol {TOL_DYADIC}) and {real_input} parallel input partitions plus {real_singletons} singleton partitions of real metrics (tol {TOL_REAL:e}) have disjoint-or-equal blocks and valid quotients ({quotient_triangles} exact quotient triangles)"
        ),
        problems,
    )
}

fn stability(built: &[Built]) -> Outcome {
    let mut problems = Vec::new();
    let mut same = 0;
    for b in built {
        let opts = ConstructionOptions { max_level: Some(b.trace.plan.max_level() + EXTRA_LEVELS) };
        match construct_parallel_metric_with(&b.inst.metric, &b.inst.partition, opts) {
            Ok((d2, _)) if d2.scale_exp() == b.d.scale_exp() && d2.numerators() == b.d.numerators() => same += 1,
            Ok(_) => problems.push(format!("{}: d changes with {EXTRA_LEVELS} extra levels", b.name)),
            Err(e) => problems.push(format!("{}: {e}", b.name)),
        }
    }
    // the same through the command line
    let dir = tempfile::TempDir::new().unwrap();
    let mut cli_same = 0;
    for b in built.iter().take(5) {
        let path = dir.path().join("inst.json");
        std::fs::write(&path, b.inst.to_file().to_json()).unwrap();
        let path = path.to_str().unwrap().to_string();
        let level = (b.trace.plan.max_level() + EXTRA_LEVELS).to_string();
        let base = cli_json(&["parmetric", "construct", &path]);
        let finer = cli_json(&["parmetric", "construct", &path, "--max-level", &level]);
        match (base, finer) {
            (Ok(a), Ok(c)) if a["d_scaled"] == c["d_scaled"] && a["scale_exp"] == c["scale_exp"] => cli_same += 1,
            _ => problems.push(format!("{}: command-line --max-level changes d", b.name)),
        }
    }
    Outcome::new(
        same >= MIN_STABILITY,
        format!("stability: d bit-identical with max level N_max + {EXTRA_LEVELS} on {same} instances ({cli_same} also via --max-level)"),
        problems,
    )
}

fn cli_json(args: &[&str]) -> Result<Value, String> {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run_command(args, &mut out, &mut err);
    if code != 0 {
        return Err(String::from_utf8_lossy(&err).into_owned());
    }
    serde_json::from_slice(&out).map_err(|e| e.to_string())
}

fn negative_controls() -> Outcome {
    let mut problems = Vec::new();
    let mut circles = 0;
    for seed in 0..10u64 {
        let params = GeneratorParams { points_per_block: 32, radii: vec![1.0, 1.2], ..Default::default() };
        let inst = generate(GeneratorKind::Circles, &params, seed).unwrap().resolve(METRIC_TOL).unwrap();
        let cert = certify_parallel(&inst.metric, &inst.partition, TOL_REAL).unwrap();
        let Some(v) = cert.first_violation() else {
            problems.push(format!("circles seed {seed}: reported parallel"));
            continue;
        };
        // re-evaluate the recorded violation
        let w = v.violation.witness;
        let other = if v.violation.side == Side::InA { v.blocks.1 } else { v.blocks.0 };
        let recomputed = inst
            .partition
            .block(other)
            .iter()
            .map(|y| inst.metric.dist(w, y))
            .fold(f64::INFINITY, f64::min);
        if recomputed != v.violation.witness_distance || (recomputed - v.violation.set_distance).abs() <= TOL_REAL {
            problems.push(format!("circles seed {seed}: violation does not reproduce"));
            continue;
        }
        circles += 1;
    }
    // command line: exit 4 with the first violation
    let dir = tempfile::TempDir::new().unwrap();
    let path = dir.path().join("circles.json");
    let path = path.to_str().unwrap();
    let (mut out, mut err) = (Vec::new(), Vec::new());
    run_command(["parmetric", "gen", "circles", "--points-per-block", "32", "--out", path], &mut out, &mut err);
    let code = run_command(["parmetric", "certify", path], &mut Vec::new(), &mut err);
    let stderr: Value = serde_json::from_slice(&err).unwrap_or(Value::Null);
    let cli_circles = code == 4 && stderr["details"]["first_violation"]["point"].is_u64();
    if !cli_circles {
        problems.push(format!("command-line certify on circles exited {code}"));
    }

    // overlapping cover
    let text = r#"{"dist": [0.5, 0.5, 0.5, 0.5, 0.5, 0.5], "labels": ["A", ["A", "B"], "B", "B"]}"#;
    let file = InstanceFile::from_json(text).unwrap();
    let lib_overlap = matches!(
        file.resolve(METRIC_TOL),
        Err(LoadError::Cover(r)) if r.violations.iter().any(|v| matches!(v, CoverViolation::Overlap { point: PointId(1), .. }))
    );
    let ov = dir.path().join("overlap.json");
    std::fs::write(&ov, text).unwrap();
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run_command(["parmetric", "construct", ov.to_str().unwrap()], &mut out, &mut err);
    let stderr: Value = serde_json::from_slice(&err).unwrap_or(Value::Null);
    let cli_overlap = code == 3 && out.is_empty() && stderr["details"][0]["kind"] == "overlap" && stderr["details"][0]["point"] == 1;
    if !lib_overlap || !cli_overlap {
        problems.push("overlapping cover not rejected with an overlap witness".into());
    }
    Outcome::new(
        circles == 10,
        format!(
            "negative controls: {circles}/10 sampled circle pairs non-parallel with a reproducible violation (tol {TOL_REAL:e}); command line exit 4: {cli_circles}; overlapping cover rejected before construction with overlap witness: {}",
            lib_overlap && cli_overlap
        ),
        problems,
    )
}

fn main() {
    let start = Instant::now();
    let mut built = Vec::new();
    let mut build_problems = Vec::new();
    for i in 0..MAIN_INSTANCES as u64 {
        let (name, inst) = random_instance(i, MAX_POINTS);
        match construct_parallel_metric(&inst.metric, &inst.partition) {
            Ok((d, trace)) => built.push(Built { name, inst, d, trace }),
            Err(e) => build_problems.push(format!("{name}: {e}")),
        }
    }
    let mut results = vec![main_theorem(&built)];
    results[0].problems.extend(build_problems);
    results[0].pass &= results[0].problems.is_empty();
    results.push(claims(&built));
    results.push(oracles());
    results.push(transport(&built));
    results.push(necessity(&built));
    results.push(stability(&built));
    results.push(negative_controls());

    let mut failed = 0;
    for (i, r) in results.iter().enumerate() {
        println!("{} criterion {}: {}", if r.pass { "PASS" } else { "FAIL" }, i + 1, r.summary);
        for p in r.problems.iter().take(5) {
            println!("       {p}");
        }
        if !r.pass {
            failed += 1;
        }
    }
    println!(
        "acceptance: {}/{} criteria passed in {:.1}s",
        results.len() - failed,
        results.len(),
        start.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
