//! Command-line front end: `count`, `average`, `selberg`, `spectrum`, `plan`.
//!
//! Settings resolve as flags (or `PICARD_*` environment variables), then the
//! `--config` TOML file, then built-in defaults. Every data file starts with
//! the resolved settings.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::average::{
    curve_csv, integral, local_average_levels, remainder_curve, QuadratureSpec, TestFunction, DEFAULT_CUSP_CUTOFF,
};
use crate::count::{count_exact, count_sweep, log_grid, sweep_csv, CountResult};
use crate::error::{Error, Result};
use crate::geometry::PointH3;
use crate::planner::{parse_rational, plan, plan_csv, HypothesisParams, PlanRow, StxPreset};
use crate::selberg::{
    ab_decomposition, ab_envelope, bound_check_hpm, convolution_check, h_pm_real, BOUND_CONSTANT, CONVOLUTION_TOL,
};
use crate::smoothed::{Sign, SmoothedKernelSpec};
use crate::spectral::EigenvalueTable;

/// Seed used when none is given.
pub const DEFAULT_SEED: u64 = 0x5eed;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(
    name = "picard",
    version,
    about = "Lattice points, Selberg transforms and spectral sums for PSL2(Z[i])"
)]
pub struct Cli {
    /// Output format.
    #[arg(long, global = true, env = "PICARD_FORMAT", value_enum)]
    format: Option<Format>,
    /// Write data here; a summary goes to stdout.
    #[arg(long, global = true, env = "PICARD_OUTPUT")]
    output: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, global = true, env = "PICARD_THREADS")]
    threads: Option<usize>,
    /// Seed for randomised sweeps.
    #[arg(long, global = true, env = "PICARD_SEED")]
    seed: Option<u64>,
    /// TOML file with defaults for any setting.
    #[arg(long, global = true, env = "PICARD_CONFIG")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Count orbit points `N(X, z)`.
    Count(CountArgs),
    /// Local averages against a smooth bump and their remainders.
    Average(AverageArgs),
    /// Selberg transforms of the smoothed kernels.
    Selberg(SelbergArgs),
    /// Eigenvalue-table diagnostics.
    Spectrum(SpectrumArgs),
    /// Exponent table of the local-average remainder.
    Plan(PlanArgs),
}

/// Field-wise `a.or(b)`; boolean switches are or-ed.
macro_rules! merge_struct {
    ($t:ident { $($opt:ident),* } { $($flag:ident),* }) => {
        impl $t {
            fn merge(self, file: Option<$t>) -> $t {
                let file = file.unwrap_or_default();
                $t {
                    $($opt: self.$opt.or(file.$opt),)*
                    $($flag: self.$flag || file.$flag,)*
                }
            }
        }
    };
}

#[derive(Clone, Debug, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CountArgs {
    /// Cutoff `X ≥ 1` on `cosh d(z, γz)`.
    #[arg(long = "X")]
    #[serde(rename = "X")]
    x: Option<f64>,
    /// Sweep `a:b:log[:n]` or `a:b:lin:n`.
    #[arg(long)]
    sweep: Option<String>,
    /// `j` or `x1,x2,y`.
    #[arg(long)]
    z: Option<String>,
}
merge_struct!(CountArgs { x, sweep, z } {});

#[derive(Clone, Debug, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AverageArgs {
    /// Cutoffs, comma separated.
    #[arg(long = "X", value_delimiter = ',')]
    #[serde(rename = "X")]
    x: Option<Vec<f64>>,
    /// Sweep `a:b:log[:n]` or `a:b:lin:n`.
    #[arg(long)]
    sweep: Option<String>,
    /// Bump centre `x1,x2,y`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    center: Option<Vec<f64>>,
    /// Geodesic support radius.
    #[arg(long)]
    radius: Option<f64>,
    #[arg(long)]
    sharpness: Option<f64>,
    /// Highest admissible support height.
    #[arg(long)]
    cutoff: Option<f64>,
    /// Gauss–Legendre nodes per axis and cell.
    #[arg(long)]
    quad_nodes: Option<usize>,
    /// Refinement levels; level `L` has `2^(L-1)` cells per axis.
    #[arg(long)]
    quad_levels: Option<u32>,
    /// Report every refinement level instead of the remainder curve.
    #[arg(long, action = ArgAction::SetTrue)]
    #[serde(default)]
    convergence: bool,
}
merge_struct!(AverageArgs { x, sweep, center, radius, sharpness, cutoff, quad_nodes, quad_levels } { convergence });

#[derive(Clone, Debug, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SelbergArgs {
    /// Kernel radius `R ≥ 1`.
    #[arg(long = "R")]
    #[serde(rename = "R")]
    r: Option<f64>,
    /// Smoothing width `0 < η < 1`.
    #[arg(long)]
    eta: Option<f64>,
    /// `+` or `-`.
    #[arg(long, allow_hyphen_values = true)]
    sign: Option<String>,
    /// Largest spectral parameter in the grid.
    #[arg(long)]
    r_max: Option<f64>,
    /// Grid points (random samples for --check-convolution).
    #[arg(long)]
    points: Option<usize>,
    /// Compare the quadrature transform of `k±` with the closed form.
    #[arg(long, action = ArgAction::SetTrue)]
    #[serde(default)]
    check_convolution: bool,
    /// Envelope ratio of `h±` on a log grid in `[1, r_max]`.
    #[arg(long, action = ArgAction::SetTrue)]
    #[serde(default)]
    bound_check: bool,
}
merge_struct!(SelbergArgs { r, eta, sign, r_max, points } { check_convolution, bound_check });

#[derive(Clone, Debug, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpectrumArgs {
    /// `synthetic-weyl` or a CSV file with header `r`.
    #[arg(long)]
    table: Option<String>,
    /// Size of the synthetic table.
    #[arg(long)]
    n: Option<usize>,
    /// `max` or a number.
    #[arg(long = "weyl-T")]
    #[serde(rename = "weyl_T")]
    weyl_t: Option<String>,
    /// Pair for the `S(T, X)` envelope.
    #[arg(long)]
    stx_alpha: Option<f64>,
    #[arg(long)]
    stx_beta: Option<f64>,
    /// `T` values of the envelope grid.
    #[arg(long = "T", value_delimiter = ',')]
    #[serde(rename = "T")]
    t: Option<Vec<f64>>,
    /// `X` values of the envelope grid.
    #[arg(long = "X", value_delimiter = ',')]
    #[serde(rename = "X")]
    x: Option<Vec<f64>>,
    /// Kernel for `Σ h±(r_j)`.
    #[arg(long = "R")]
    #[serde(rename = "R")]
    r: Option<f64>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    sign: Option<String>,
}
merge_struct!(SpectrumArgs { table, n, weyl_t, stx_alpha, stx_beta, t, x, r, eta, sign } {});

#[derive(Clone, Debug, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PlanArgs {
    /// Subconvexity exponent in `[0, 1/4]`, e.g. `1/6`.
    #[arg(long)]
    theta: Option<String>,
    /// Quantum-variance exponent in `[1, 3]`.
    #[arg(long)]
    q: Option<String>,
    /// Exponent-pair preset.
    #[arg(long)]
    preset: Option<String>,
    /// Print every preset.
    #[arg(long, action = ArgAction::SetTrue)]
    #[serde(default)]
    table: bool,
}
merge_struct!(PlanArgs { theta, q, preset } { table });

impl CountArgs {
    fn with_defaults(mut self) -> Self {
        self.z.get_or_insert_with(|| "j".into());
        self
    }
}

impl AverageArgs {
    fn with_defaults(mut self) -> Self {
        let f = TestFunction::default_bump();
        let q = QuadratureSpec::default();
        if self.sweep.is_none() {
            self.x.get_or_insert_with(|| vec![10.0, 100.0]);
        }
        let c = f.center();
        self.center.get_or_insert_with(|| vec![c.x1(), c.x2(), c.y()]);
        self.radius.get_or_insert(f.radius());
        self.sharpness.get_or_insert(f.sharpness());
        self.cutoff.get_or_insert(DEFAULT_CUSP_CUTOFF);
        self.quad_nodes.get_or_insert(q.nodes_per_axis);
        self.quad_levels.get_or_insert(q.refinement_levels);
        self
    }
}

impl SelbergArgs {
    fn with_defaults(mut self) -> Self {
        self.sign.get_or_insert_with(|| "+".into());
        self.r_max.get_or_insert(50.0);
        self.points.get_or_insert(if self.check_convolution { 10 } else { 64 });
        self
    }
}

impl SpectrumArgs {
    fn with_defaults(mut self) -> Self {
        let synthetic = self.table.get_or_insert_with(|| "synthetic-weyl".into()) == "synthetic-weyl";
        if synthetic {
            self.n.get_or_insert(1000);
        }
        self.weyl_t.get_or_insert_with(|| "max".into());
        if self.r.is_some() || self.eta.is_some() {
            self.sign.get_or_insert_with(|| "+".into());
        }
        self
    }
}

impl PlanArgs {
    fn with_defaults(mut self) -> Self {
        self.theta.get_or_insert_with(|| "1/4".into());
        self.q.get_or_insert_with(|| "5/3".into());
        if !self.table {
            self.preset.get_or_insert_with(|| "interpolated".into());
        }
        self
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    format: Option<Format>,
    output: Option<PathBuf>,
    threads: Option<usize>,
    seed: Option<u64>,
    count: Option<CountArgs>,
    average: Option<AverageArgs>,
    selberg: Option<SelbergArgs>,
    spectrum: Option<SpectrumArgs>,
    plan: Option<PlanArgs>,
}

fn load_config(path: &Path) -> Result<FileConfig> {
    let text = fs::read_to_string(path)?;
    toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

/// Settings shared by all commands after resolution.
#[derive(Clone, Debug, Serialize)]
struct Common {
    command: &'static str,
    format: Format,
    threads: usize,
    seed: u64,
}

/// What a command produced: data for the file, and a summary for people.
struct Output {
    json: Value,
    csv: String,
    summary: String,
    /// Runtime failure to report after the data is written.
    failure: Option<String>,
}

/// Runs the CLI on `args` and returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    0
                }
                _ => {
                    let _ = write!(err, "{e}");
                    2
                }
            };
            return code;
        }
    };
    match execute(cli, out) {
        Ok(None) => 0,
        Ok(Some(msg)) => {
            let _ = writeln!(err, "picard: {msg}");
            1
        }
        Err(e) => {
            let _ = writeln!(err, "picard: {e}");
            if e.is_validation() {
                2
            } else {
                1
            }
        }
    }
}

fn execute(cli: Cli, out: &mut dyn Write) -> Result<Option<String>> {
    let file = match &cli.config {
        Some(p) => load_config(p)?,
        None => FileConfig::default(),
    };
    let format = cli.format.or(file.format).unwrap_or(Format::Json);
    let output = cli.output.or(file.output);
    let threads = cli.threads.or(file.threads).unwrap_or_else(default_threads);
    if threads == 0 {
        return Err(Error::Config("threads must be at least 1".into()));
    }
    let seed = cli.seed.or(file.seed).unwrap_or(DEFAULT_SEED);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {threads} threads: {e}")))?;
    let common = |command| Common {
        command,
        format,
        threads,
        seed,
    };
    let (common, args, result) = pool.install(|| match cli.command {
        Command::Count(a) => {
            let a = a.merge(file.count).with_defaults();
            let r = cmd_count(&a);
            (common("count"), to_value(&a), r)
        }
        Command::Average(a) => {
            let a = a.merge(file.average).with_defaults();
            let r = cmd_average(&a);
            (common("average"), to_value(&a), r)
        }
        Command::Selberg(a) => {
            let a = a.merge(file.selberg).with_defaults();
            let r = cmd_selberg(&a, seed);
            (common("selberg"), to_value(&a), r)
        }
        Command::Spectrum(a) => {
            let a = a.merge(file.spectrum).with_defaults();
            let r = cmd_spectrum(&a);
            (common("spectrum"), to_value(&a), r)
        }
        Command::Plan(a) => {
            let a = a.merge(file.plan).with_defaults();
            let r = cmd_plan(&a);
            (common("plan"), to_value(&a), r)
        }
    });
    let result = result?;
    let provenance = json!({ "settings": common, "args": args });
    let data = match format {
        Format::Json => {
            let doc = json!({ "config": provenance, "result": result.json });
            serde_json::to_string_pretty(&doc).expect("json") + "\n"
        }
        Format::Csv => format!("# config: {provenance}\n{}", result.csv),
    };
    match output {
        Some(path) => {
            fs::write(&path, data)?;
            write!(out, "{}", result.summary)?;
            writeln!(out, "wrote {}", path.display())?;
        }
        None => write!(out, "{data}")?,
    }
    Ok(result.failure)
}

fn default_threads() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("settings serialise")
}

fn required<T>(v: Option<T>, what: &str) -> Result<T> {
    v.ok_or_else(|| Error::Config(format!("missing {what}")))
}

/// Parses `j` or `x1,x2,y`.
pub fn parse_point(s: &str) -> Result<PointH3> {
    let s = s.trim();
    if s == "j" {
        return Ok(PointH3::j());
    }
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::Config(format!("point must be j or x1,x2,y, got {s:?}")))?;
    match v.as_slice() {
        [a, b, c] => PointH3::new(*a, *b, *c),
        _ => Err(Error::Config(format!("point must have three coordinates, got {s:?}"))),
    }
}

/// Parses `a:b:log[:n]` (`n` defaults to 20) or `a:b:lin:n`.
pub fn parse_sweep(s: &str) -> Result<Vec<f64>> {
    let bad = || Error::Config(format!("sweep must look like a:b:log[:n] or a:b:lin:n, got {s:?}"));
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() < 3 || parts.len() > 4 {
        return Err(bad());
    }
    let a: f64 = parts[0].parse().map_err(|_| bad())?;
    let b: f64 = parts[1].parse().map_err(|_| bad())?;
    let n: usize = match parts.get(3) {
        Some(n) => n.parse().map_err(|_| bad())?,
        None => 20,
    };
    match parts[2] {
        "log" => log_grid(a, b, n),
        "lin" if parts.len() == 4 => {
            if !(b >= a) || n == 0 {
                return Err(bad());
            }
            if n == 1 {
                return Ok(vec![a]);
            }
            Ok((0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect())
        }
        _ => Err(bad()),
    }
}

fn parse_sign(s: Option<&str>) -> Result<Sign> {
    s.unwrap_or("+").parse()
}

fn cmd_count(a: &CountArgs) -> Result<Output> {
    let z = parse_point(a.z.as_deref().unwrap_or("j"))?;
    let rows: Vec<CountResult> = match (&a.sweep, a.x) {
        (Some(_), Some(_)) => return Err(Error::Config("give either --X or --sweep, not both".into())),
        (Some(s), None) => count_sweep(&parse_sweep(s)?, &z)?,
        (None, Some(x)) => vec![count_exact(x, &z)?],
        (None, None) => return Err(Error::Config("count needs --X or --sweep".into())),
    };
    let summary: String = rows
        .iter()
        .map(|r| {
            format!(
                "N({}, {}) = {}   main term {:.3}   remainder {:.3}\n",
                r.x, r.z, r.count, r.main_term, r.remainder
            )
        })
        .collect();
    let json = if a.sweep.is_some() {
        to_value(&rows)
    } else {
        to_value(&rows[0])
    };
    Ok(Output {
        json,
        csv: sweep_csv(&rows),
        summary,
        failure: None,
    })
}

fn test_function(a: &AverageArgs) -> Result<TestFunction> {
    let d = TestFunction::default_bump();
    let center = match &a.center {
        Some(c) if c.len() == 3 => PointH3::new(c[0], c[1], c[2])?,
        Some(c) => {
            return Err(Error::Config(format!(
                "center needs three coordinates, got {}",
                c.len()
            )))
        }
        None => d.center(),
    };
    TestFunction::new(
        center,
        a.radius.unwrap_or(d.radius()),
        a.sharpness.unwrap_or(d.sharpness()),
        a.cutoff.unwrap_or(DEFAULT_CUSP_CUTOFF),
    )
}

fn cmd_average(a: &AverageArgs) -> Result<Output> {
    let f = test_function(a)?;
    let d = QuadratureSpec::default();
    let quad = QuadratureSpec::new(
        a.quad_nodes.unwrap_or(d.nodes_per_axis),
        a.quad_levels.unwrap_or(d.refinement_levels),
    )?;
    let xs = match (&a.sweep, &a.x) {
        (Some(_), Some(_)) => return Err(Error::Config("give either --X or --sweep, not both".into())),
        (Some(s), None) => parse_sweep(s)?,
        (None, Some(x)) => x.clone(),
        (None, None) => return Err(Error::Config("average needs --X or --sweep".into())),
    };
    if a.convergence {
        let mut csv = String::from("X,level,local_average,relative_change\n");
        let mut summary = String::new();
        let mut rows = Vec::new();
        for &x in &xs {
            let levels = local_average_levels(x, &f, &quad)?;
            for (k, v) in levels.iter().enumerate() {
                let change = if k == 0 {
                    None
                } else {
                    Some((v - levels[k - 1]).abs() / v.abs())
                };
                let shown = change.map(|c| c.to_string()).unwrap_or_default();
                csv.push_str(&format!("{x},{},{v},{shown}\n", k + 1));
                summary.push_str(&format!(
                    "X = {x}  level {}  local average {v:.6}  change {}\n",
                    k + 1,
                    change.map(|c| format!("{c:.2e}")).unwrap_or_else(|| "-".into())
                ));
                rows.push(json!({ "X": x, "level": k + 1, "local_average": v, "relative_change": change }));
            }
        }
        return Ok(Output {
            json: json!({ "integral_f": integral(&f, &quad)?, "levels": rows }),
            csv,
            summary,
            failure: None,
        });
    }
    let curve = remainder_curve(&xs, &f, &quad)?;
    let mut summary: String = curve
        .rows
        .iter()
        .map(|r| {
            format!(
                "X = {}  local average {:.6}  main term {:.6}  remainder {:.6}\n",
                r.x, r.local_average, r.main_term, r.remainder
            )
        })
        .collect();
    if let Some(s) = curve.slope {
        summary.push_str(&format!("log-log slope of |remainder|: {s:.4}\n"));
    }
    Ok(Output {
        json: to_value(&curve),
        csv: curve_csv(&curve.rows),
        summary,
        failure: None,
    })
}

fn kernel_spec(r: Option<f64>, eta: Option<f64>, sign: Option<&str>) -> Result<SmoothedKernelSpec> {
    SmoothedKernelSpec::new(required(r, "--R")?, required(eta, "--eta")?, parse_sign(sign)?)
}

fn cmd_selberg(a: &SelbergArgs, seed: u64) -> Result<Output> {
    let spec = kernel_spec(a.r, a.eta, a.sign.as_deref())?;
    let r_max = a.r_max.unwrap_or(50.0);
    if !(r_max >= 1.0) || !r_max.is_finite() {
        return Err(Error::Config(format!("r_max must be at least 1, got {r_max}")));
    }
    if a.check_convolution && a.bound_check {
        return Err(Error::Config(
            "choose one of --check-convolution and --bound-check".into(),
        ));
    }
    if a.check_convolution {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rs: Vec<f64> = (0..a.points.unwrap_or(10)).map(|_| rng.gen_range(0.0..r_max)).collect();
        let rep = convolution_check(&spec, &rs, CONVOLUTION_TOL)?;
        let mut csv = String::from("r,numeric,closed_form,abs_error\n");
        for row in &rep.rows {
            csv.push_str(&format!(
                "{},{},{},{}\n",
                row.r, row.numeric, row.closed_form, row.abs_error
            ));
        }
        let verdict = if rep.passed { "pass" } else { "FAIL" };
        let summary = format!(
            "convolution check {verdict}: max |numeric - closed form| = {:.3e} over {} points (tolerance {:.0e})\n",
            rep.max_abs_error,
            rep.rows.len(),
            rep.tolerance
        );
        let failure = (!rep.passed).then(|| summary.trim().to_string());
        return Ok(Output {
            json: to_value(&rep),
            csv,
            summary,
            failure,
        });
    }
    let grid = log_grid(1.0, r_max, a.points.unwrap_or(64))?;
    if a.bound_check {
        let rep = bound_check_hpm(&spec, &grid, BOUND_CONSTANT)?;
        let csv = format!(
            "max_ratio,grid_size,flagged\n{},{},{}\n",
            rep.max_ratio, rep.grid_size, rep.flagged
        );
        let summary = format!(
            "envelope ratio max {:.4} over {} points; flagged: {}\n",
            rep.max_ratio, rep.grid_size, rep.flagged
        );
        return Ok(Output {
            json: to_value(&rep),
            csv,
            summary,
            failure: None,
        });
    }
    let mut csv = String::from("r,h_pm,abs_A,abs_B,envelope\n");
    let mut rows = Vec::new();
    for &r in &grid {
        let h = h_pm_real(&spec, r)?;
        let ab = ab_decomposition(&spec, r)?;
        let env = ab_envelope(&spec, r);
        csv.push_str(&format!("{r},{h},{},{},{env}\n", ab.a.norm(), ab.b.norm()));
        rows.push(json!({ "r": r, "h_pm": h, "abs_A": ab.a.norm(), "abs_B": ab.b.norm(), "envelope": env }));
    }
    let summary = format!("h± tabulated at {} points in [1, {r_max}]\n", grid.len());
    Ok(Output {
        json: json!({ "spec": spec, "rows": rows }),
        csv,
        summary,
        failure: None,
    })
}

fn load_table(a: &SpectrumArgs) -> Result<EigenvalueTable> {
    match a.table.as_deref().unwrap_or("synthetic-weyl") {
        "synthetic-weyl" => Ok(EigenvalueTable::synthetic_weyl(a.n.unwrap_or(1000))),
        path => EigenvalueTable::ingest(path),
    }
}

fn cmd_spectrum(a: &SpectrumArgs) -> Result<Output> {
    let table = load_table(a)?;
    let mut json = json!({ "source": table.source(), "entries": table.len() });
    let mut csv = String::from("quantity,value\n");
    let mut summary = format!("table: {} ({} entries)\n", table.source(), table.len());
    csv.push_str(&format!("entries,{}\n", table.len()));

    let t = match a.weyl_t.as_deref().unwrap_or("max") {
        "max" => table.max(),
        v => Some(
            v.parse::<f64>()
                .map_err(|_| Error::Config(format!("weyl-T must be max or a number, got {v:?}")))?,
        ),
    };
    if let Some(t) = t {
        let ratio = table.weyl_ratio(t)?;
        json["weyl"] = json!({ "T": t, "count": table.count_up_to(t), "ratio": ratio });
        csv.push_str(&format!("weyl_T,{t}\nweyl_ratio,{ratio}\n"));
        summary.push_str(&format!("Weyl ratio at T = {t:.6}: {ratio:.6}\n"));
    } else {
        summary.push_str("empty table: no Weyl ratio\n");
    }

    if a.stx_alpha.is_some() || a.stx_beta.is_some() {
        let alpha = required(a.stx_alpha, "--stx-alpha")?;
        let beta = required(a.stx_beta, "--stx-beta")?;
        let ts = a.t.clone().unwrap_or_else(|| vec![table.max().unwrap_or(10.0)]);
        let xs = a.x.clone().unwrap_or_else(|| vec![10.0, 100.0, 1000.0]);
        let grid: Vec<(f64, f64)> = ts.iter().flat_map(|&t| xs.iter().map(move |&x| (t, x))).collect();
        let rep = table.stx_envelope(alpha, beta, &grid)?;
        for p in &rep.points {
            csv.push_str(&format!("stx_ratio[T={};X={}],{}\n", p.t, p.x, p.ratio));
        }
        csv.push_str(&format!("stx_max_ratio,{}\n", rep.max_ratio));
        summary.push_str(&format!(
            "max |S(T,X)|/(T^{alpha} X^{beta} + T^2) = {:.6} over {} points\n",
            rep.max_ratio,
            rep.points.len()
        ));
        json["stx"] = to_value(&rep);
    }

    if a.r.is_some() || a.eta.is_some() {
        let spec = kernel_spec(a.r, a.eta, a.sign.as_deref())?;
        let direct = table.sum_h_direct(&spec)?;
        let parts = table.sum_h_parts(&spec)?;
        let rel = if direct.value == 0.0 {
            (parts - direct.value).abs()
        } else {
            (parts - direct.value).abs() / direct.value.abs()
        };
        csv.push_str(&format!(
            "sum_h_direct,{}\ntail_estimate,{}\nsum_h_parts,{}\nrelative_difference,{}\n",
            direct.value, direct.tail_estimate, parts, rel
        ));
        summary.push_str(&format!(
            "sum h = {:.10e} (direct), {:.10e} (by parts), relative difference {rel:.2e}, tail estimate {:.3e}\n",
            direct.value, parts, direct.tail_estimate
        ));
        json["sum_h"] = json!({
            "spec": spec,
            "direct": direct.value,
            "tail_estimate": direct.tail_estimate,
            "parts": parts,
            "relative_difference": rel,
        });
    }
    Ok(Output {
        json,
        csv,
        summary,
        failure: None,
    })
}

fn cmd_plan(a: &PlanArgs) -> Result<Output> {
    let theta = parse_rational(a.theta.as_deref().unwrap_or("1/4"))?;
    let q = parse_rational(a.q.as_deref().unwrap_or("5/3"))?;
    let p = HypothesisParams::new(theta, q)?;
    let presets: Vec<StxPreset> = if a.table {
        StxPreset::ALL.to_vec()
    } else {
        vec![a.preset.as_deref().unwrap_or("interpolated").parse()?]
    };
    let rows: Vec<PlanRow> = presets.iter().map(|s| plan(&p, *s)).collect::<Result<_>>()?;
    let mut summary = String::new();
    for r in &rows {
        let cross = r.crossover.map(|c| c.0.to_string()).unwrap_or_else(|| "none".into());
        summary.push_str(&format!(
            "{:<20} theta {}  q {}  pair ({}, {})  crossover {}  exponent {}\n",
            r.preset, r.theta.0, r.q.0, r.alpha.0, r.beta.0, cross, r.exponent
        ));
    }
    let json = if a.table { to_value(&rows) } else { to_value(&rows[0]) };
    Ok(Output {
        json,
        csv: plan_csv(&rows),
        summary,
        failure: None,
    })
}
