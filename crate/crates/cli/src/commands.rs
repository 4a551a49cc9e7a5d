//! Command-line surface.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use parmetric_core::{
    certify_constructed, certify_parallel, check_domination, check_necessity,
    construct_parallel_metric_with, oracle_chain_infimum, oracle_delta, quotient_metric,
    ConstructionError, ConstructionOptions, ConstructionTrace, Dichotomy, DyadicMetric, Metric,
    MetricError, Partition, PointId, VerifyError, DEFAULT_PARALLEL_TOLERANCE,
};
use serde_json::{json, Value};

use crate::certificate::{CertificateError, CertificateFile, OracleSummary, Scaled};
use crate::generate::{generate, GeneratorKind, GeneratorParams};
use crate::instance::{read_text, Instance, InstanceFile, LoadError};
use crate::report;

pub const EXIT_OK: i32 = 0;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_INVALID: i32 = 3;
pub const EXIT_NOT_PARALLEL: i32 = 4;
pub const EXIT_INTERNAL: i32 = 5;

#[derive(Debug, Parser)]
#[command(name = "parmetric", version, about = "Parallel metrics for partitioned finite metric spaces")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check an instance (or certificate) file and list every problem.
    Validate(InputArgs),
    /// Build the parallel metric and write a certificate.
    Construct(ConstructArgs),
    /// Check whether the blocks are pairwise parallel.
    Certify(InputArgs),
    /// Block distances of a parallel metric.
    Quotient(ConstructArgs),
    /// Write a generated instance.
    Gen(GenArgs),
    /// CSV tables for plotting.
    PlotData(PlotArgs),
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Instance or certificate JSON file.
    pub input: PathBuf,
    /// Tolerance for metric validation (relative) and parallelism (absolute)
    /// on real-valued input. Dyadic tables are always checked exactly.
    #[arg(long, default_value_t = DEFAULT_PARALLEL_TOLERANCE)]
    pub tol: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ConstructArgs {
    #[command(flatten)]
    pub io: InputArgs,
    /// Finest level; must not be below the planned one.
    #[arg(long)]
    pub max_level: Option<u32>,
    /// Cross-check the gauge and closure against brute-force oracles.
    #[arg(long)]
    pub oracle: bool,
    /// Include a transported chain for every point of every block pair.
    #[arg(long)]
    pub witnesses: bool,
    /// For `quotient` on an instance: construct first instead of requiring
    /// the input metric to be parallel.
    #[arg(long)]
    pub construct: bool,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(value_enum)]
    pub kind: GeneratorKind,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 8)]
    pub points_per_block: usize,
    #[arg(long, default_value_t = 2)]
    pub blocks: usize,
    #[arg(long, value_delimiter = ',', default_values_t = [1.0, 1.2])]
    pub radii: Vec<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub separation: f64,
    #[arg(long, default_value_t = 1.0)]
    pub length: f64,
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    #[arg(long, default_value_t = 0.0)]
    pub jitter: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Table {
    Points,
    Pairs,
    Blocks,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    #[command(flatten)]
    pub io: InputArgs,
    #[arg(long, value_enum, default_value_t = Table::Pairs)]
    pub table: Table,
    /// Add a column with the constructed metric.
    #[arg(long)]
    pub construct: bool,
    #[arg(long)]
    pub max_level: Option<u32>,
}

/// A command outcome other than success: exit code plus a JSON error record.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub kind: &'static str,
    pub message: String,
    pub details: Value,
}

impl Failure {
    fn new(code: i32, kind: &'static str, message: impl Into<String>) -> Self {
        Failure {
            code,
            kind,
            message: message.into(),
            details: Value::Null,
        }
    }

    fn with(mut self, details: Value) -> Self {
        self.details = details;
        self
    }

    fn to_json(&self) -> Value {
        let mut v = json!({"error": self.kind, "exit_code": self.code, "message": self.message});
        if !self.details.is_null() {
            v["details"] = self.details.clone();
        }
        v
    }
}

impl From<LoadError> for Failure {
    fn from(e: LoadError) -> Self {
        let code = if e.is_parse_error() { EXIT_PARSE } else { EXIT_INVALID };
        let details = match &e {
            LoadError::Metric(MetricError::Invalid(r)) => {
                json!(r.violations.iter().map(report::metric_violation).collect::<Vec<_>>())
            }
            LoadError::Cover(r) => {
                json!(r.violations.iter().map(|v| report::cover_violation(v, &[])).collect::<Vec<_>>())
            }
            _ => Value::Null,
        };
        Failure::new(code, e.kind(), e.to_string()).with(details)
    }
}

impl From<CertificateError> for Failure {
    fn from(e: CertificateError) -> Self {
        match e {
            CertificateError::Parse(e) => Failure::new(EXIT_PARSE, "parse", e.to_string()),
            CertificateError::Shape(s) => Failure::new(EXIT_PARSE, "shape", s),
            CertificateError::Verify(e) => e.into(),
        }
    }
}

impl From<ConstructionError> for Failure {
    fn from(e: ConstructionError) -> Self {
        let (code, kind) = match &e {
            ConstructionError::Metric(_) => (EXIT_INVALID, "metric"),
            ConstructionError::LevelBelowPlan { .. } => (EXIT_INVALID, "level_below_plan"),
            ConstructionError::ScaleTooFine { .. } => (EXIT_INVALID, "scale_too_fine"),
            _ => (EXIT_INTERNAL, "construction"),
        };
        Failure::new(code, kind, e.to_string())
    }
}

impl From<VerifyError> for Failure {
    fn from(e: VerifyError) -> Self {
        match e {
            VerifyError::Construction(c) => c.into(),
            VerifyError::TooLarge { .. } => Failure::new(EXIT_INVALID, "oracle_too_large", e.to_string()),
            VerifyError::NotParallel { .. }
            | VerifyError::CertificateFailed { .. }
            | VerifyError::QuotientInvalid { .. } => Failure::new(EXIT_NOT_PARALLEL, "not_parallel", e.to_string()),
            e => Failure::new(EXIT_INTERNAL, "verification", e.to_string()),
        }
    }
}

/// Successful (or certification-failed) command output.
struct Output {
    body: String,
    /// Set when the command ran but the verdict is negative.
    failure: Option<Failure>,
}

impl Output {
    fn ok(body: String) -> Self {
        Output { body, failure: None }
    }
}

fn pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("json value serializes")
}

/// Parses `argv` (including the program name) and runs the command. Output
/// goes to `stdout` or the `--out` file, errors as JSON to `stderr`.
pub fn run_command<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_PARSE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK {
                stdout.write_all(text.as_bytes())
            } else {
                stderr.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let out_path = match &cli.command {
        Command::Validate(a) | Command::Certify(a) => a.out.clone(),
        Command::Construct(a) | Command::Quotient(a) => a.io.out.clone(),
        Command::PlotData(a) => a.io.out.clone(),
        Command::Gen(a) => a.out.clone(),
    };
    let result = match &cli.command {
        Command::Validate(a) => validate(a),
        Command::Construct(a) => construct(a),
        Command::Certify(a) => certify(a),
        Command::Quotient(a) => quotient(a),
        Command::Gen(a) => gen(a),
        Command::PlotData(a) => plot_data(a),
    };
    let (output, failure) = match result {
        Ok(o) => (Some(o.body), o.failure),
        Err(f) => (None, Some(f)),
    };
    if let Some(body) = output {
        let written = match &out_path {
            Some(p) => std::fs::write(p, &body).map_err(|e| e.to_string()),
            None => stdout
                .write_all(body.as_bytes())
                .and_then(|_| if body.ends_with('\n') { Ok(()) } else { stdout.write_all(b"\n") })
                .map_err(|e| e.to_string()),
        };
        if let Err(e) = written {
            let f = Failure::new(EXIT_PARSE, "io", format!("cannot write output: {e}"));
            let _ = writeln!(stderr, "{}", pretty(&f.to_json()));
            return f.code;
        }
    }
    match failure {
        Some(f) => {
            let _ = writeln!(stderr, "{}", pretty(&f.to_json()));
            f.code
        }
        None => EXIT_OK,
    }
}

enum Input {
    Instance(Instance),
    Certificate(CertificateFile),
}

fn is_certificate(text: &str) -> bool {
    serde_json::from_str::<Value>(text)
        .map(|v| v.get("d_scaled").is_some())
        .unwrap_or(false)
}

fn load(path: &Path, tol: f64) -> Result<Input, Failure> {
    let text = read_text(path)?;
    if is_certificate(&text) {
        Ok(Input::Certificate(CertificateFile::from_json(&text)?))
    } else {
        let file = InstanceFile::from_json(&text)?;
        match file.resolve(tol) {
            Ok(inst) => Ok(Input::Instance(inst)),
            Err(LoadError::Cover(r)) => {
                let (_, labels) = file.cover();
                let details = r.violations.iter().map(|v| report::cover_violation(v, &labels)).collect::<Vec<_>>();
                Err(Failure::from(LoadError::Cover(r)).with(json!(details)))
            }
            Err(e) => Err(e.into()),
        }
    }
}

fn load_instance(path: &Path, tol: f64) -> Result<Instance, Failure> {
    match load(path, tol)? {
        Input::Instance(i) => Ok(i),
        Input::Certificate(_) => Err(Failure::new(EXIT_PARSE, "shape", "expected an instance file, got a certificate")),
    }
}

fn validate(a: &InputArgs) -> Result<Output, Failure> {
    let text = read_text(&a.input)?;
    if is_certificate(&text) {
        let file = CertificateFile::from_json(&text)?;
        let (d, p, _) = file.to_metric()?;
        let r = d.validate();
        let body = json!({
            "valid": r.is_valid(),
            "n_points": d.n_points(),
            "n_blocks": p.n_blocks(),
            "metric_violations": r.violations.iter().map(report::metric_violation).collect::<Vec<_>>(),
            "cover_violations": [],
        });
        return Ok(finish_validation(body, r.is_valid()));
    }
    let file = InstanceFile::from_json(&text)?;
    let r = file.check(a.tol)?;
    let (_, labels) = file.cover();
    let n_blocks = if r.cover.is_valid() && r.label_mismatch.is_none() { json!(labels.len()) } else { Value::Null };
    let mut body = json!({
        "valid": r.is_valid(),
        "n_points": r.n_points,
        "n_blocks": n_blocks,
        "metric_violations": r.metric.iter().flat_map(|m| m.violations.iter().map(report::metric_violation)).collect::<Vec<_>>(),
        "cover_violations": r.cover.violations.iter().map(|v| report::cover_violation(v, &labels)).collect::<Vec<_>>(),
    });
    if let Some(e) = &r.metric_error {
        body["metric_error"] = json!(e.to_string());
    }
    if let Some((labels, points)) = r.label_mismatch {
        body["label_mismatch"] = json!({"labels": labels, "points": points});
    }
    Ok(finish_validation(body, r.is_valid()))
}

fn finish_validation(body: Value, valid: bool) -> Output {
    let failure = (!valid).then(|| Failure::new(EXIT_INVALID, "invalid_instance", "input failed validation"));
    Output {
        body: pretty(&body),
        failure,
    }
}

fn run_construction(inst: &Instance, max_level: Option<u32>) -> Result<(DyadicMetric, ConstructionTrace), Failure> {
    let (d, trace) = construct_parallel_metric_with(&inst.metric, &inst.partition, ConstructionOptions { max_level })?;
    if let Some((x, y)) = check_domination(&trace.rho, &d) {
        return Err(Failure::new(EXIT_INTERNAL, "construction", format!("domination fails at ({x}, {y})")));
    }
    Ok((d, trace))
}

/// Compares the gauge and closure with the brute-force oracles on every pair.
pub fn oracle_check(d: &DyadicMetric, trace: &ConstructionTrace) -> Result<OracleSummary, VerifyError> {
    let n = d.n_points();
    let mut summary = OracleSummary {
        pairs_checked: 0,
        gauge_agrees: true,
        closure_agrees: true,
    };
    for x in 0..n {
        for y in (x + 1)..n {
            let (px, py) = (PointId(x), PointId(y));
            summary.pairs_checked += 1;
            summary.gauge_agrees &= trace.delta.exponent(px, py) == oracle_delta(&trace.levels, px, py);
            summary.closure_agrees &= d.dist(px, py) == oracle_chain_infimum(&trace.delta, px, py)?;
        }
    }
    Ok(summary)
}

fn construct(a: &ConstructArgs) -> Result<Output, Failure> {
    let inst = load_instance(&a.io.input, a.io.tol)?;
    let (d, trace) = run_construction(&inst, a.max_level)?;
    let cert = certify_constructed(&d, &trace)?;
    let mut file = CertificateFile::build(
        inst.name.clone(),
        &d,
        &inst.partition,
        &inst.block_labels,
        &cert,
        Some(&trace),
        a.witnesses,
    );
    if a.oracle {
        let summary = oracle_check(&d, &trace)?;
        let agrees = summary.gauge_agrees && summary.closure_agrees;
        file.oracle = Some(summary);
        if !agrees {
            return Ok(Output {
                body: file.to_json(),
                failure: Some(Failure::new(EXIT_INTERNAL, "oracle_mismatch", "construction disagrees with the oracle")),
            });
        }
    }
    let failure = (!cert.passed()).then(|| not_parallel(report::parallel_violation(&cert.violations[0], &inst.block_labels)));
    Ok(Output {
        body: file.to_json(),
        failure,
    })
}

fn not_parallel(first: Value) -> Failure {
    Failure::new(EXIT_NOT_PARALLEL, "not_parallel", "blocks are not pairwise parallel").with(json!({"first_violation": first}))
}

fn certify(a: &InputArgs) -> Result<Output, Failure> {
    match load(&a.input, a.tol)? {
        Input::Instance(inst) => {
            let cert = certify_parallel(&inst.metric, &inst.partition, a.tol)?;
            let body = report::parallel_certificate(&cert, &inst.block_labels);
            let failure = cert
                .first_violation()
                .map(|v| not_parallel(report::parallel_violation(v, &inst.block_labels)));
            Ok(Output {
                body: pretty(&body),
                failure,
            })
        }
        Input::Certificate(file) => {
            let (cert, problems) = file.reverify()?;
            let (_, _, labels) = file.to_metric()?;
            let mut body = report::parallel_certificate(&cert, &labels);
            body["consistent"] = json!(problems.is_empty());
            body["problems"] = json!(problems);
            let failure = if let Some(v) = cert.first_violation() {
                Some(not_parallel(report::parallel_violation(v, &labels)))
            } else if !problems.is_empty() {
                Some(Failure::new(EXIT_NOT_PARALLEL, "inconsistent_certificate", problems.join("; ")))
            } else {
                None
            };
            Ok(Output {
                body: pretty(&body),
                failure,
            })
        }
    }
}

fn necessity_json<M: Metric + ?Sized>(m: &M, p: &Partition, labels: &[String], tol: f64) -> Result<(Value, bool), Failure> {
    let checks = check_necessity(m, p, tol)?;
    let consistent = checks.iter().all(|(_, d)| !matches!(d, Dichotomy::Inconsistent { .. }));
    let v = checks
        .iter()
        .map(|((a, b), d)| json!({"a": labels[a.0], "b": labels[b.0], "relation": report::dichotomy(d)}))
        .collect::<Vec<_>>();
    Ok((json!(v), consistent))
}

fn dyadic_quotient(d: &DyadicMetric, p: &Partition, labels: &[String]) -> Result<Output, Failure> {
    let cert = certify_parallel(d, p, 0.0)?;
    if let Some(v) = cert.first_violation() {
        return Err(not_parallel(report::parallel_violation(v, labels)));
    }
    let q = quotient_metric(p, &cert)?;
    let (necessity, consistent) = necessity_json(d, p, labels, 0.0)?;
    let scale = d.scale_exp();
    let table: Vec<Vec<Scaled>> = q
        .rows()
        .iter()
        .map(|r| r.iter().map(|v| Scaled(v.rescale(scale).expect("block distance at table scale").numerator())).collect())
        .collect();
    let body = json!({"blocks": labels, "scale_exp": scale, "d_scaled": table, "necessity": necessity});
    Ok(Output {
        body: pretty(&body),
        failure: (!consistent).then(|| Failure::new(EXIT_NOT_PARALLEL, "inconsistent", "parallel blocks overlap")),
    })
}

fn quotient(a: &ConstructArgs) -> Result<Output, Failure> {
    match load(&a.io.input, a.io.tol)? {
        Input::Certificate(file) => {
            let (d, p, labels) = file.to_metric()?;
            dyadic_quotient(&d, &p, &labels)
        }
        Input::Instance(inst) if a.construct => {
            let (d, _) = run_construction(&inst, a.max_level)?;
            dyadic_quotient(&d, &inst.partition, &inst.block_labels)
        }
        Input::Instance(inst) => {
            let (m, p, labels) = (&inst.metric, &inst.partition, &inst.block_labels);
            let cert = certify_parallel(m, p, a.io.tol)?;
            if let Some(v) = cert.first_violation() {
                return Err(not_parallel(report::parallel_violation(v, labels)));
            }
            let q = quotient_metric(p, &cert)?;
            let (necessity, consistent) = necessity_json(m, p, labels, a.io.tol)?;
            let body = json!({"blocks": labels, "tol": a.io.tol, "distances": q.rows(), "necessity": necessity});
            Ok(Output {
                body: pretty(&body),
                failure: (!consistent).then(|| Failure::new(EXIT_NOT_PARALLEL, "inconsistent", "parallel blocks overlap")),
            })
        }
    }
}

fn gen(a: &GenArgs) -> Result<Output, Failure> {
    let params = GeneratorParams {
        points_per_block: a.points_per_block,
        blocks: a.blocks,
        radii: a.radii.clone(),
        separation: a.separation,
        length: a.length,
        dim: a.dim,
        jitter: a.jitter,
    };
    let file = generate(a.kind, &params, a.seed).map_err(|e| Failure::new(EXIT_PARSE, "invalid_parameter", e.to_string()))?;
    Ok(Output::ok(file.to_json()))
}

fn csv_text(header: &[String], rows: Vec<Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory csv");
    for r in rows {
        w.write_record(&r).expect("in-memory csv");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("csv is utf-8")
}

fn plot_data(a: &PlotArgs) -> Result<Output, Failure> {
    // (input table as f64 rows, constructed table, partition, labels, coords)
    let (base, constructed, p, labels, coords) = match load(&a.io.input, a.io.tol)? {
        Input::Certificate(file) => {
            let (d, p, labels) = file.to_metric()?;
            (d.to_f64_rows(), None, p, labels, None)
        }
        Input::Instance(inst) => {
            let constructed = if a.construct {
                Some(run_construction(&inst, a.max_level)?.0.to_f64_rows())
            } else {
                None
            };
            (inst.metric.to_rows(), constructed, inst.partition, inst.block_labels, inst.coords)
        }
    };
    let n = p.n_points();
    let label = |i: usize| labels[p.block_of(PointId(i)).0].clone();
    let body = match a.table {
        Table::Points => {
            let dim = coords.as_ref().and_then(|c| c.first()).map_or(0, Vec::len);
            let mut header = vec!["index".to_string(), "label".to_string()];
            header.extend((0..dim).map(|k| format!("x{k}")));
            let rows = (0..n)
                .map(|i| {
                    let mut r = vec![i.to_string(), label(i)];
                    if let Some(c) = &coords {
                        r.extend(c[i].iter().map(|v| v.to_string()));
                    }
                    r
                })
                .collect();
            csv_text(&header, rows)
        }
        Table::Pairs => {
            let mut header: Vec<String> = ["x", "y", "label_x", "label_y", "distance"].map(String::from).to_vec();
            if constructed.is_some() {
                header.push("constructed".into());
            }
            let mut rows = Vec::new();
            for x in 0..n {
                for y in (x + 1)..n {
                    let mut r = vec![x.to_string(), y.to_string(), label(x), label(y), base[x][y].to_string()];
                    if let Some(c) = &constructed {
                        r.push(c[x][y].to_string());
                    }
                    rows.push(r);
                }
            }
            csv_text(&header, rows)
        }
        Table::Blocks => {
            let mut header: Vec<String> = ["a", "b", "distance", "max_point_distance"].map(String::from).to_vec();
            if constructed.is_some() {
                header.push("constructed".into());
            }
            let k = p.n_blocks();
            let mut rows = Vec::new();
            for i in 0..k {
                for j in (i + 1)..k {
                    let (bi, bj) = (p.blocks()[i].to_vec(), p.blocks()[j].to_vec());
                    // the blocks are parallel iff every point-to-block distance equals the minimum
                    let mut pts = Vec::new();
                    for (s, o) in [(&bi, &bj), (&bj, &bi)] {
                        for x in s {
                            pts.push(o.iter().map(|y| base[x.0][y.0]).fold(f64::INFINITY, f64::min));
                        }
                    }
                    let lo = pts.iter().copied().fold(f64::INFINITY, f64::min);
                    let hi = pts.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    let mut r = vec![labels[i].clone(), labels[j].clone(), lo.to_string(), hi.to_string()];
                    if let Some(c) = &constructed {
                        let v = bi
                            .iter()
                            .flat_map(|x| bj.iter().map(move |y| c[x.0][y.0]))
                            .fold(f64::INFINITY, f64::min);
                        r.push(v.to_string());
                    }
                    rows.push(r);
                }
            }
            csv_text(&header, rows)
        }
    };
    Ok(Output::ok(body))
}
