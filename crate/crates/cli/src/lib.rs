//! Command-line driver: configuration, checker suites and deterministic report emission.

pub mod config;
pub mod suite;

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use finsler_core::curvature::{analyze, cartan_tensor};
use finsler_core::polar::{polar_field, PolarOptions};
use finsler_core::report::{fmt_num, num, Status, Summary};
use serde::Serialize;
use serde_json::value::RawValue;
use sha2::{Digest, Sha256};

use config::{ConfigError, Format, Resolved};
use suite::{run_suite, CheckOutcome};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_MARGIN_FAILURE: i32 = 1;
pub const EXIT_HYPOTHESIS_UNMET: i32 = 2;
pub const EXIT_CONFIG_ERROR: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "finsler", about = "Finsler metric-measure comparison workbench")]
pub struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Output directory (overrides output.dir; default "out").
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Multiplies every checker tolerance.
    #[arg(long, global = true, default_value_t = 1.0)]
    pub tolerance_scale: f64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Pointwise F, g, Cartan tensor, Ric, S, Ṡ and Ric_∞ at the configured (x, y) points.
    Compute,
    /// Polar field CSV for every base point.
    Polar,
    /// Runs the checker suite and writes CSV tables plus a JSON summary.
    Verify {
        /// Also write a gnuplot script plotting every table.
        #[arg(long)]
        emit_plot_script: bool,
    },
    /// Lists metric families, measures and checkers with their parameters.
    Catalog,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Run(String),
}

struct Loaded {
    resolved: Resolved,
    hash: String,
}

fn load(path: Option<&Path>) -> Result<Loaded, ConfigError> {
    let path = path.ok_or_else(|| ConfigError::at("", "--config is required"))?;
    let text = fs::read_to_string(path)
        .map_err(|e| ConfigError::at("", format!("cannot read {}: {e}", path.display())))?;
    let hash = format!("{:x}", Sha256::digest(text.as_bytes()));
    let resolved = config::validate(config::parse(&text)?)?;
    Ok(Loaded { resolved, hash })
}

fn out_dir(cli: &Cli, res: &Resolved) -> PathBuf {
    cli.out
        .clone()
        .or_else(|| res.config.output.dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

/// Runs the parsed command line and returns the process exit code.
pub fn run(cli: &Cli) -> i32 {
    match execute(cli) {
        Ok(code) => code,
        Err(CliError::Config(e)) => {
            eprintln!("{e}");
            EXIT_CONFIG_ERROR
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_MARGIN_FAILURE
        }
    }
}

fn execute(cli: &Cli) -> Result<i32, CliError> {
    if let Command::Catalog = cli.command {
        println!("{}", catalog_text());
        return Ok(EXIT_PASS);
    }
    if !(cli.tolerance_scale > 0.0) {
        return Err(ConfigError::at("--tolerance-scale", "must be positive").into());
    }
    if cli.jobs == Some(0) {
        return Err(ConfigError::at("--jobs", "must be at least 1").into());
    }
    let loaded = load(cli.config.as_deref())?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = cli.jobs {
        builder = builder.num_threads(j);
    }
    let pool = builder.build().map_err(|e| CliError::Run(e.to_string()))?;
    let dir = out_dir(cli, &loaded.resolved);
    fs::create_dir_all(&dir)?;
    pool.install(|| match &cli.command {
        Command::Compute => compute(&loaded, &dir),
        Command::Polar => polar(&loaded, &dir),
        Command::Verify { emit_plot_script } => verify(&loaded, &dir, cli.tolerance_scale, *emit_plot_script),
        Command::Catalog => unreachable!("handled above"),
    })
}

#[derive(Serialize)]
struct PointRecord {
    x: Vec<Box<RawValue>>,
    y: Vec<Box<RawValue>>,
    f: Box<RawValue>,
    g: Vec<Vec<Box<RawValue>>>,
    cartan: Vec<Box<RawValue>>,
    ric: Box<RawValue>,
    tau: Box<RawValue>,
    s: Box<RawValue>,
    s_dot: Box<RawValue>,
    ric_inf: Box<RawValue>,
}

#[derive(Serialize)]
struct ComputeSummary {
    config_hash: String,
    points: Vec<PointRecord>,
}

fn nums(v: &[f64]) -> Vec<Box<RawValue>> {
    v.iter().map(|x| num(*x)).collect()
}

fn compute(loaded: &Loaded, dir: &Path) -> Result<i32, CliError> {
    let res = &loaded.resolved;
    let n = res.metric.n;
    let mut records = Vec::new();
    let mut csv = String::from("index,F,ric,tau,s,s_dot,ric_inf\n");
    for (i, p) in res.config.points.iter().enumerate() {
        let err = |e: finsler_core::Error| CliError::Run(format!("points[{i}]: {e}"));
        let pg = analyze(&res.metric, Some(&res.measure), &p.x, &p.y).map_err(err)?;
        let cartan = cartan_tensor(&res.metric, &p.x, &p.y).map_err(err)?;
        let s = pg.s.expect("measure given");
        let s_dot = pg.s_dot.expect("measure given");
        let tau = pg.tau.expect("measure given");
        let ric = pg.curvature.ricci;
        let g = &pg.curvature.g;
        csv.push_str(&format!(
            "{i},{},{},{},{},{},{}\n",
            fmt_num(pg.f),
            fmt_num(ric),
            fmt_num(tau),
            fmt_num(s),
            fmt_num(s_dot),
            fmt_num(ric + s_dot)
        ));
        records.push(PointRecord {
            x: nums(&p.x),
            y: nums(&p.y),
            f: num(pg.f),
            g: (0..n).map(|r| (0..n).map(|c| num(g[(r, c)])).collect()).collect(),
            cartan: nums(&cartan.data),
            ric: num(ric),
            tau: num(tau),
            s: num(s),
            s_dot: num(s_dot),
            ric_inf: num(ric + s_dot),
        });
    }
    let formats = &res.config.output.formats;
    if formats.contains(&Format::Csv) {
        fs::write(dir.join("compute.csv"), &csv)?;
    }
    if formats.contains(&Format::Json) {
        let doc = ComputeSummary {
            config_hash: loaded.hash.clone(),
            points: records,
        };
        let json = serde_json::to_string_pretty(&doc).map_err(|e| CliError::Run(e.to_string()))?;
        fs::write(dir.join("compute.json"), json + "\n")?;
    }
    print!("{csv}");
    Ok(EXIT_PASS)
}

fn polar(loaded: &Loaded, dir: &Path) -> Result<i32, CliError> {
    let res = &loaded.resolved;
    let g = &res.config.grids;
    let opts = PolarOptions::new(g.h, g.r_max);
    for (j, base) in res.base_points.iter().enumerate() {
        let field = polar_field(&res.metric, &res.measure, base, &res.grid, &opts)
            .map_err(|e| CliError::Run(format!("base_points[{j}]: {e}")))?;
        let mut buf = Vec::new();
        field.write_csv(&mut buf)?;
        let name = format!("polar_b{j}.csv");
        fs::write(dir.join(&name), buf)?;
        println!("wrote {name}");
    }
    Ok(EXIT_PASS)
}

#[derive(Serialize)]
struct GridSummary {
    h: Box<RawValue>,
    r_max: Box<RawValue>,
    directions: Vec<usize>,
    direction_nodes: usize,
}

#[derive(Serialize)]
struct CheckRecord {
    index: usize,
    check: &'static str,
    base_index: usize,
    status: &'static str,
    csv: Option<String>,
    extra_csv: Vec<String>,
    report: Option<Summary>,
    error: Option<String>,
}

#[derive(Serialize)]
struct VerifySummary {
    config_hash: String,
    metric: &'static str,
    measure: &'static str,
    n: usize,
    grids: GridSummary,
    tolerance_scale: Box<RawValue>,
    base_points: Vec<Vec<Box<RawValue>>>,
    checks: Vec<CheckRecord>,
    status: &'static str,
    exit_code: i32,
}

/// Margin failures and errors give 1; otherwise any unmet hypothesis or threshold gives 2.
pub fn exit_code(outcomes: &[CheckOutcome]) -> i32 {
    let mut code = EXIT_PASS;
    for o in outcomes {
        match &o.report {
            Err(_) => return EXIT_MARGIN_FAILURE,
            Ok(r) => match r.status() {
                Status::Fail => return EXIT_MARGIN_FAILURE,
                Status::HypothesisUnmet => code = EXIT_HYPOTHESIS_UNMET,
                Status::Pass | Status::Informational => {}
            },
        }
    }
    code
}

fn overall_status(code: i32) -> &'static str {
    match code {
        EXIT_PASS => "pass",
        EXIT_HYPOTHESIS_UNMET => "hypothesis_unmet",
        _ => "fail",
    }
}

fn verify(loaded: &Loaded, dir: &Path, tol_scale: f64, plot: bool) -> Result<i32, CliError> {
    let res = &loaded.resolved;
    let outcomes = run_suite(res, tol_scale);
    let formats = &res.config.output.formats;
    let write_csv = formats.contains(&Format::Csv);
    let mut records = Vec::new();
    let mut tables = Vec::new();
    for o in &outcomes {
        let stem = format!("{:02}_{}_b{}", o.index, o.check, o.base_index);
        let mut csv = None;
        let mut extra_csv = Vec::new();
        if let (Ok(report), true) = (&o.report, write_csv) {
            let name = format!("{stem}.csv");
            let mut buf = Vec::new();
            report.write_csv(&mut buf)?;
            fs::write(dir.join(&name), buf)?;
            tables.push((name.clone(), format!("{} (base {})", report.check, o.base_index)));
            csv = Some(name);
            for (suffix, bytes) in &o.extras {
                let name = format!("{stem}_{suffix}.csv");
                fs::write(dir.join(&name), bytes)?;
                extra_csv.push(name);
            }
        }
        let (status, report, error) = match &o.report {
            Ok(r) => (r.status().as_str(), Some(r.summary()), None),
            Err(e) => ("error", None, Some(e.clone())),
        };
        println!(
            "{status:<16} {:<22} base {} worst margin {}",
            o.check,
            o.base_index,
            o.report.as_ref().map_or_else(|e| e.clone(), |r| fmt_num(r.worst_margin()))
        );
        records.push(CheckRecord {
            index: o.index,
            check: o.check,
            base_index: o.base_index,
            status,
            csv,
            extra_csv,
            report,
            error,
        });
    }
    let code = exit_code(&outcomes);
    if formats.contains(&Format::Json) {
        let g = &res.config.grids;
        let summary = VerifySummary {
            config_hash: loaded.hash.clone(),
            metric: res.metric.family_name(),
            measure: res.measure.kind_name(),
            n: res.metric.n,
            grids: GridSummary {
                h: num(g.h),
                r_max: num(g.r_max),
                directions: res.grid.shape.clone(),
                direction_nodes: res.grid.len(),
            },
            tolerance_scale: num(tol_scale),
            base_points: res.base_points.iter().map(|b| nums(b)).collect(),
            checks: records,
            status: overall_status(code),
            exit_code: code,
        };
        let json = serde_json::to_string_pretty(&summary).map_err(|e| CliError::Run(e.to_string()))?;
        fs::write(dir.join("summary.json"), json + "\n")?;
    }
    if plot {
        fs::write(dir.join("plot.gp"), plot_script(&tables))?;
    }
    println!("overall: {} (exit {code})", overall_status(code));
    Ok(code)
}

/// gnuplot script drawing lhs and rhs against r for every table, one PNG per table.
pub fn plot_script(tables: &[(String, String)]) -> String {
    let mut s = String::from(
        "# gnuplot script; run from the output directory: gnuplot plot.gp\n\
         set datafile separator ','\n\
         set terminal pngcairo size 900,600\n\
         set key top left\n\
         set xlabel 'r'\n",
    );
    for (csv, title) in tables {
        let png = csv.trim_end_matches(".csv").to_string() + ".png";
        s.push_str(&format!(
            "set output '{png}'\nset title '{title}'\n\
             plot '{csv}' every ::1 using 1:2 with linespoints title 'lhs', \
             '' every ::1 using 1:3 with linespoints title 'rhs'\n"
        ));
    }
    s.push_str("unset output\n");
    s
}

pub fn catalog_text() -> String {
    let doc = serde_json::json!({
        "metrics": [
            {"family": "euclidean", "params": {"n": "2 or 3"}},
            {"family": "poincare_ball", "params": {"n": "2 or 3", "curvature": "K < 0 (default -1)"}},
            {"family": "stereographic_sphere", "params": {"n": "2 or 3", "curvature": "K > 0 (default 1)"}},
            {"family": "minkowski_quartic", "params": {"n": "2 or 3", "epsilon": "0 <= epsilon < 0.5"}},
            {"family": "randers", "params": {"n": "2 or 3", "b": "one-form, alpha-norm < 1", "alpha": "optional n x n SPD rows (default identity)"}},
            {"family": "funk", "params": {"n": "2 or 3"}}
        ],
        "measures": [
            {"kind": "lebesgue"},
            {"kind": "busemann_hausdorff", "default": true},
            {"kind": "gaussian"},
            {"kind": "poly_log_density", "params": {"terms": "[{exponents: [n integers], coefficient}]"}}
        ],
        "checks": [
            {"check": "riccati", "params": ["k", "theta", "tol"]},
            {"check": "laplacian_comparison", "params": ["p", "k", "theta", "tol"]},
            {"check": "volume_comparison", "params": ["p", "k", "theta", "r", "R", "tol"]},
            {"check": "bishop_gromov", "params": ["k", "theta", "R", "tol"]},
            {"check": "doubling", "params": ["p", "k", "theta", "xi", "r1", "r2", "R", "tol"]},
            {"check": "relative_volume", "params": ["p", "k", "theta", "r1", "r2", "R1", "R2", "tol"]},
            {"check": "volume_growth", "params": ["p", "R", "tol"]},
            {"check": "norm_relation", "params": ["p", "k", "theta", "xi", "r1", "r2", "tol"]},
            {"check": "iso_bound", "params": ["theta", "xi", "R", "tol"]},
            {"check": "coarea", "params": ["t", "eps", "tol"]},
            {"check": "lambda1", "params": ["theta", "xi", "R", "tol"]},
            {"check": "gradient_scaling", "params": ["radii", "inner_fraction"]}
        ]
    });
    serde_json::to_string_pretty(&doc).expect("static document")
}
