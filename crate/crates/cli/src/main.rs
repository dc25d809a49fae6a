//! Command-line front end: kernel tables, correlation functions, the
//! verification suite and trajectory simulation.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DMatrix;
use serde_json::{json, Value};

use schurdyn::dynamics::{estimate_correlation, simulate_many};
use schurdyn::io::to_json_string;
use schurdyn::kernels::{
    det_plancherel_series, det_static_series, params_json, pf_dynamic_series, pf_plancherel_series,
    pf_static_series, zz_dynamic_series, zz_static_series,
};
use schurdyn::oracle::{exact_dynamic_correlation, exact_static_correlation, exact_static_correlation_plancherel};
use schurdyn::pfaffian::{assemble_dynamic_with, assemble_static_with, det, pfaffian};
use schurdyn::verify;
use schurdyn::{Error, HalfInt, SeriesValue, KernelKind, KernelTable, ModelParams, PlancherelParams, ZPair};

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Numeric(Error),
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("verification failed")]
    Verification,
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameters(_) | Error::Parse(_) | Error::DuplicatePoints(_) | Error::UnorderedTimes { .. } => {
                Self::Usage(e.to_string())
            }
            other => Self::Numeric(other),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            Self::Verification => 1,
            Self::Usage(_) => 2,
            Self::Numeric(_) | Self::Io { .. } => 3,
        }
    }
}

type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "schurdyn", version, about = "Correlation kernels and jump dynamics on strict partitions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Tabulate a correlation kernel over a grid.
    Kernel(KernelArgs),
    /// Correlation function of a set of (space-time) points by every available method.
    Correlate(CorrelateArgs),
    /// Run the acceptance checks and print a JSON report.
    Verify(VerifyArgs),
    /// Simulate equilibrium trajectories and write them as CSV.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
struct ModelArgs {
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    xi: Option<f64>,
    /// Plancherel mode.
    #[arg(long, allow_hyphen_values = true, conflicts_with_all = ["alpha", "xi"])]
    theta: Option<f64>,
    /// Relative tolerance of the kernel series.
    #[arg(long, default_value_t = 1e-15)]
    series_tol: f64,
}

enum Model {
    Hyper(ModelParams),
    Plancherel(PlancherelParams),
}

impl ModelArgs {
    fn resolve(&self) -> CliResult<Model> {
        match (self.alpha, self.xi, self.theta) {
            (Some(a), Some(x), None) => Ok(Model::Hyper(ModelParams::new(a, x)?.with_series(self.series_tol, 10_000)?)),
            (None, None, Some(t)) => Ok(Model::Plancherel(PlancherelParams::new(t)?.with_series(self.series_tol, 10_000)?)),
            _ => Err(CliError::Usage("give either both --alpha and --xi, or --theta".into())),
        }
    }

    fn hyper(&self) -> CliResult<ModelParams> {
        match self.resolve()? {
            Model::Hyper(p) => Ok(p),
            Model::Plancherel(_) => Err(CliError::Usage("this command needs --alpha and --xi".into())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum KindArg {
    Det,
    PfStatic,
    PfDynamic,
    ZzStatic,
    ZzDynamic,
}

#[derive(Debug, Args)]
struct KernelArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Kernel to tabulate; `det` is the determinantal kernel of the chosen model.
    #[arg(long, value_enum, default_value = "det")]
    kind: KindArg,
    /// Grid as `a..b` (inclusive) or a comma-separated list; half-integers for zz kinds.
    #[arg(long, allow_hyphen_values = true)]
    grid: String,
    /// Time differences t − s for dynamic kinds, comma-separated.
    #[arg(long, allow_hyphen_values = true, default_value = "0")]
    dt: String,
    /// Shift d of the parameter pair (ν+½+d, −ν+½+d) for zz kinds.
    #[arg(long, allow_hyphen_values = true, default_value_t = 0)]
    d: i64,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CorrelateArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Points as `x` or `t:x`, comma-separated.
    #[arg(long, allow_hyphen_values = true)]
    points: String,
    /// Tail mass allowed in the enumeration oracle.
    #[arg(long, default_value_t = 1e-10)]
    tail_tol: f64,
    /// Also estimate by Monte Carlo with this many trajectories.
    #[arg(long)]
    trajectories: Option<usize>,
    #[arg(long, default_value_t = verify::DEFAULT_SEED)]
    seed: u64,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// Run only these families (names or numbers); repeatable.
    #[arg(long)]
    only: Vec<String>,
    /// Seed of the Monte Carlo checks.
    #[arg(long, default_value_t = verify::DEFAULT_SEED)]
    seed: u64,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 1)]
    trajectories: usize,
    #[arg(long)]
    horizon: f64,
    #[arg(long, default_value_t = verify::DEFAULT_SEED)]
    seed: u64,
    /// Directory receiving trajectory_<i>.csv and summary.json.
    #[arg(long)]
    output_dir: PathBuf,
    /// Occupancies are reported for points 1..=max-point.
    #[arg(long, default_value_t = 5)]
    max_point: u32,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let outcome = match cli.command {
        Command::Kernel(a) => cmd_kernel(&a),
        Command::Correlate(a) => cmd_correlate(&a),
        Command::Verify(a) => cmd_verify(&a),
        Command::Simulate(a) => cmd_simulate(&a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if !matches!(e, CliError::Verification) {
                eprintln!("error: {e}");
            }
            ExitCode::from(e.exit_code())
        }
    }
}

fn emit(text: &str, output: Option<&Path>) -> CliResult<()> {
    match output {
        Some(path) => fs::write(path, text).map_err(|source| CliError::Io {
            path: path.to_owned(),
            source,
        }),
        None => {
            print!("{text}");
            if !text.ends_with('\n') {
                println!();
            }
            Ok(())
        }
    }
}

fn parse_f64(tok: &str) -> CliResult<f64> {
    tok.trim()
        .parse::<f64>()
        .map_err(|_| CliError::Usage(format!("not a number: {tok:?}")))
}

/// Parses `a..b` (unit steps, inclusive) or `v1,v2,…`.
fn parse_grid(spec: &str) -> CliResult<Vec<f64>> {
    let spec = spec.trim();
    let values = if let Some((a, b)) = spec.split_once("..") {
        let (a, b) = (parse_f64(a)?, parse_f64(b)?);
        let count = (b - a).floor();
        if count > 1e6 {
            return Err(CliError::Usage(format!("grid {spec:?} is too large")));
        }
        (0..(count + 1.0).max(0.0) as usize).map(|k| a + k as f64).collect()
    } else if spec.is_empty() {
        Vec::new()
    } else {
        spec.split(',').map(parse_f64).collect::<CliResult<Vec<_>>>()?
    };
    if values.is_empty() {
        return Err(CliError::Usage(format!("grid {spec:?} is empty")));
    }
    Ok(values)
}

fn as_int(v: f64) -> CliResult<i64> {
    if v.fract() != 0.0 || v.abs() > 1e12 {
        return Err(CliError::Usage(format!("{v} is not an integer")));
    }
    Ok(v as i64)
}

fn as_half(v: f64) -> CliResult<HalfInt> {
    Ok(HalfInt::try_from_f64(v)?)
}

fn pairs(grid: &[f64]) -> impl Iterator<Item = (f64, f64)> + '_ {
    grid.iter().flat_map(move |&x| grid.iter().map(move |&y| (x, y)))
}

fn cmd_kernel(a: &KernelArgs) -> CliResult<()> {
    let grid = parse_grid(&a.grid)?;
    let dts = parse_grid(&a.dt)?;
    let model = a.model.resolve()?;
    let z = ZPair::new(a.d);
    let table = match a.kind {
        KindArg::Det | KindArg::PfStatic => {
            let ints = grid.iter().map(|&v| as_int(v)).collect::<CliResult<Vec<_>>>()?;
            let args: Vec<Vec<f64>> = pairs(&grid).map(|(x, y)| vec![x, y]).collect();
            if a.kind == KindArg::Det && ints.iter().any(|&x| x < 1) {
                return Err(CliError::Usage("determinantal kernels need a grid of positive integers".into()));
            }
            match (a.kind, model) {
                (KindArg::Det, Model::Hyper(p)) => KernelTable::build(KernelKind::DetStatic, params_json(Some(p), None), args, |v| {
                    det_static_series(v[0] as i64, v[1] as i64, &p)
                })?,
                (KindArg::Det, Model::Plancherel(q)) => {
                    KernelTable::build(KernelKind::DetPlancherel, params_json(None, Some(q)), args, |v| {
                        det_plancherel_series(v[0] as i64, v[1] as i64, &q)
                    })?
                }
                (_, Model::Hyper(p)) => KernelTable::build(KernelKind::PfStatic, params_json(Some(p), None), args, |v| {
                    pf_static_series(v[0] as i64, v[1] as i64, &p)
                })?,
                (_, Model::Plancherel(q)) => {
                    KernelTable::build(KernelKind::PfPlancherel, params_json(None, Some(q)), args, |v| {
                        pf_plancherel_series(0.0, v[0] as i64, 0.0, v[1] as i64, &q)
                    })?
                }
            }
        }
        KindArg::PfDynamic => {
            for &v in &grid {
                as_int(v)?;
            }
            if dts.iter().any(|&d| d < 0.0) {
                return Err(CliError::Usage("--dt must be nonnegative for pf-dynamic".into()));
            }
            let args: Vec<Vec<f64>> = dts
                .iter()
                .flat_map(|&d| pairs(&grid).map(move |(x, y)| vec![0.0, x, d, y]))
                .collect();
            match model {
                Model::Hyper(p) => KernelTable::build(KernelKind::PfDynamic, params_json(Some(p), None), args, |v| {
                    pf_dynamic_series(v[0], v[1] as i64, v[2], v[3] as i64, &p)
                })?,
                Model::Plancherel(q) => {
                    KernelTable::build(KernelKind::PfPlancherel, params_json(None, Some(q)), args, |v| {
                        pf_plancherel_series(v[0], v[1] as i64, v[2], v[3] as i64, &q)
                    })?
                }
            }
        }
        KindArg::ZzStatic | KindArg::ZzDynamic => {
            let p = a.model.hyper()?;
            for &v in &grid {
                as_half(v)?;
            }
            let mut params = params_json(Some(p), None);
            params["d"] = json!(a.d);
            if a.kind == KindArg::ZzStatic {
                let args: Vec<Vec<f64>> = pairs(&grid).map(|(x, y)| vec![x, y]).collect();
                KernelTable::build(KernelKind::ZzStatic, params, args, |v| {
                    zz_static_series(HalfInt::try_from_f64(v[0])?, HalfInt::try_from_f64(v[1])?, z, &p)
                })?
            } else {
                let args: Vec<Vec<f64>> = dts
                    .iter()
                    .flat_map(|&d| pairs(&grid).map(move |(x, y)| vec![d, x, 0.0, y]))
                    .collect();
                KernelTable::build(KernelKind::ZzDynamic, params, args, |v| {
                    zz_dynamic_series(v[0], HalfInt::try_from_f64(v[1])?, v[2], HalfInt::try_from_f64(v[3])?, z, &p)
                })?
            }
        }
    };
    let text = match a.format {
        Format::Csv => table.to_csv(),
        Format::Json => table.to_json(),
    };
    emit(&text, a.output.as_deref())
}

/// Parses `x` or `t:x` items; a missing time means t = 0.
fn parse_points(spec: &str) -> CliResult<Vec<(f64, u32)>> {
    let items: Vec<&str> = spec.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
    if items.is_empty() {
        return Err(CliError::Usage("no points given".into()));
    }
    items
        .into_iter()
        .map(|item| {
            let (t, x) = match item.split_once(':') {
                Some((t, x)) => (parse_f64(t)?, x),
                None => (0.0, item),
            };
            let x: u32 = x
                .trim()
                .parse()
                .ok()
                .filter(|&x| x > 0)
                .ok_or_else(|| CliError::Usage(format!("malformed point {item:?}: expected x or t:x with x ≥ 1")))?;
            if !t.is_finite() || t < 0.0 {
                return Err(CliError::Usage(format!("malformed point {item:?}: time must be finite and nonnegative")));
            }
            Ok((t, x))
        })
        .collect()
}

fn cmd_correlate(a: &CorrelateArgs) -> CliResult<()> {
    let points = parse_points(&a.points)?;
    let model = a.model.resolve()?;
    let is_static = points.iter().all(|q| q.0 == points[0].0);
    let xs: Vec<u32> = points.iter().map(|q| q.1).collect();
    let mut tail = 0.0f64;
    let mut out = serde_json::Map::new();
    let point_json: Vec<Value> = points.iter().map(|&(t, x)| json!({"t": t, "x": x})).collect();
    out.insert("points".into(), Value::Array(point_json));
    match model {
        Model::Hyper(p) => {
            out.insert("params".into(), params_json(Some(p), None));
            let pf = if is_static {
                pfaffian(&assemble_static_with(&xs, |x, y| {
                    let s = pf_static_series(x, y, &p)?;
                    tail = tail.max(s.est_tail);
                    Ok(s.value)
                })?)?
            } else {
                pfaffian(&assemble_dynamic_with(&points, |s, x, t, y| {
                    let v = pf_dynamic_series(s, x, t, y, &p)?;
                    tail = tail.max(v.est_tail);
                    Ok(v.value)
                })?)?
            };
            out.insert("pfaffian_value".into(), json!(pf));
            out.insert("kernel_est_tail".into(), json!(tail));
            if is_static {
                let k = kernel_matrix(&xs, |x, y| det_static_series(x, y, &p))?;
                out.insert("determinant_value".into(), json!(det(&k)));
                let o = exact_static_correlation(&xs, &p, a.tail_tol)?;
                out.insert("oracle_value".into(), json!(o.value));
                out.insert("oracle_error".into(), json!(o.error_bound));
            } else {
                let o = exact_dynamic_correlation(&points, &p, a.tail_tol)?;
                out.insert("oracle_value".into(), json!(o.value));
                out.insert("oracle_error".into(), json!(o.error_bound));
            }
            if let Some(r) = a.trajectories {
                let est = estimate_correlation(&points, &p, r, a.seed)?;
                out.insert("mc_estimate".into(), json!(est.estimate));
                out.insert("mc_stderr".into(), json!(est.std_error));
                out.insert("mc_trajectories".into(), json!(r));
                out.insert("seed".into(), json!(a.seed));
            }
        }
        Model::Plancherel(q) => {
            if a.trajectories.is_some() {
                return Err(CliError::Usage("Monte Carlo estimates need --alpha and --xi".into()));
            }
            out.insert("params".into(), params_json(None, Some(q)));
            let pf = if is_static {
                pfaffian(&assemble_static_with(&xs, |x, y| {
                    let s = pf_plancherel_series(0.0, x, 0.0, y, &q)?;
                    tail = tail.max(s.est_tail);
                    Ok(s.value)
                })?)?
            } else {
                pfaffian(&assemble_dynamic_with(&points, |s, x, t, y| {
                    let v = pf_plancherel_series(s, x, t, y, &q)?;
                    tail = tail.max(v.est_tail);
                    Ok(v.value)
                })?)?
            };
            out.insert("pfaffian_value".into(), json!(pf));
            out.insert("kernel_est_tail".into(), json!(tail));
            if is_static {
                let k = kernel_matrix(&xs, |x, y| det_plancherel_series(x, y, &q))?;
                out.insert("determinant_value".into(), json!(det(&k)));
                let o = exact_static_correlation_plancherel(&xs, &q, a.tail_tol)?;
                out.insert("oracle_value".into(), json!(o.value));
                out.insert("oracle_error".into(), json!(o.error_bound));
            }
        }
    }
    emit(&to_json_string(&Value::Object(out)), a.output.as_deref())
}

fn kernel_matrix(xs: &[u32], kernel: impl Fn(i64, i64) -> schurdyn::Result<SeriesValue>) -> CliResult<DMatrix<f64>> {
    let n = xs.len();
    let mut values = Vec::with_capacity(n * n);
    for &x in xs {
        for &y in xs {
            values.push(kernel(x as i64, y as i64)?.value);
        }
    }
    Ok(DMatrix::from_row_slice(n, n, &values))
}

fn cmd_verify(a: &VerifyArgs) -> CliResult<()> {
    let report = verify::run(&a.only, a.seed).map_err(CliError::Usage)?;
    emit(&report.to_json(), a.output.as_deref())?;
    for line in verify::summary_lines(&report) {
        eprintln!("{line}");
    }
    if report.passed {
        Ok(())
    } else {
        Err(CliError::Verification)
    }
}

fn cmd_simulate(a: &SimulateArgs) -> CliResult<()> {
    let p = a.model.hyper()?;
    if a.trajectories == 0 {
        return Err(CliError::Usage("--trajectories must be at least 1".into()));
    }
    let trajectories = simulate_many(&p, a.seed, a.trajectories, a.horizon)?;
    let io_err = |path: &Path| {
        let path = path.to_owned();
        move |source| CliError::Io { path, source }
    };
    fs::create_dir_all(&a.output_dir).map_err(io_err(&a.output_dir))?;
    let width = (a.trajectories - 1).to_string().len().max(6);
    for (i, tr) in trajectories.iter().enumerate() {
        let path = a.output_dir.join(format!("trajectory_{i:0width$}.csv"));
        fs::write(&path, tr.to_csv()).map_err(io_err(&path))?;
    }
    let r = trajectories.len() as f64;
    let occupancy: Vec<Value> = (1..=a.max_point)
        .map(|x| {
            let vals: Vec<f64> = trajectories.iter().map(|t| t.occupancy(x)).collect();
            let mean = vals.iter().sum::<f64>() / r;
            let var = if vals.len() > 1 {
                vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (r - 1.0)
            } else {
                0.0
            };
            json!({"x": x, "occupancy": mean, "std_error": (var / r).sqrt()})
        })
        .collect();
    let events: usize = trajectories.iter().map(|t| t.events.len()).sum();
    let summary = json!({
        "params": params_json(Some(p), None),
        "seed": a.seed,
        "trajectories": a.trajectories,
        "horizon": a.horizon,
        "events": events,
        "occupancy": occupancy,
    });
    let path = a.output_dir.join("summary.json");
    fs::write(&path, to_json_string(&summary)).map_err(io_err(&path))
}
