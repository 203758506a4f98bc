//! Command-line front end of the `lradi` binary.
//!
//! Settings come from flags, then an optional TOML file given by `--config`,
//! then built-in defaults. Every run writes `manifest.toml` next to its CSV
//! files with the resolved settings.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::adi::{self, AdiOptions, Tolerance};
use crate::error::{Error, Result};
use crate::experiments::{self, Columns, DreCell, CSV_SCHEMA_VERSION};
use crate::io;
use crate::lowrank::LowRankFactor;
use crate::newton::{ForcingMode, NewtonConfig, RiccatiProblem};
use crate::problems::{generate_heat_fd, HeatSpec};
use crate::rosenbrock::DreConfig;
use crate::shifts::{ShiftStrategy, DEFAULT_ARNOLDI_SEED};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NOT_CONVERGED: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "lradi", version, about = "Low-rank ADI experiments for Lyapunov and Riccati equations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve A X E^T + E X A^T + B B^T = 0 and write the iteration trace.
    Lyap(Common),
    /// Newton-Kleinman sweep over forcing modes, line search and shifts.
    Newton {
        #[command(flatten)]
        common: Common,
        /// Forcing modes, comma separated (classical, inexact, hybrid).
        #[arg(long, value_delimiter = ',')]
        modes: Vec<String>,
        /// off, on or both.
        #[arg(long)]
        line_search: Option<String>,
        #[arg(long)]
        max_newton: Option<usize>,
    },
    /// Implicit Euler sweep over step counts and shifts.
    Dre {
        #[command(flatten)]
        common: Common,
        /// Step counts, comma separated.
        #[arg(long, value_delimiter = ',')]
        nsteps: Vec<usize>,
        #[arg(long)]
        t0: Option<f64>,
        #[arg(long)]
        tf: Option<f64>,
    },
    /// Cayley radius curves along three orderings of the dense spectrum.
    ShiftAnalysis(Common),
    /// Write a generated problem as a bundle directory.
    GenProblem(Common),
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Bundle directory or manifest, or a generator spec such as heat:16x16,m=2,q=2.
    #[arg(long)]
    pub problem: Option<String>,
    /// Shift strategy, repeatable: heur:l0,kp,km or proj:{heur|decr|incr}:u.
    #[arg(long)]
    pub shifts: Vec<String>,
    /// zero or file:<path> for lyap; zero, warm, both or file:<path> for newton; zero, warm or both for dre.
    #[arg(long)]
    pub init: Option<String>,
    #[arg(long)]
    pub reltol: Option<f64>,
    #[arg(long, conflicts_with = "reltol")]
    pub abstol: Option<f64>,
    /// Cap on ADI iterations per solve.
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Seed of the Arnoldi start vector.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Threads for sweep cells.
    #[arg(long)]
    pub workers: Option<usize>,
    /// TOML file with defaults for any of the flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// Keys accepted in a `--config` file; names match the long flags with `_`.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub problem: Option<String>,
    pub shifts: Option<Vec<String>>,
    pub init: Option<String>,
    pub reltol: Option<f64>,
    pub abstol: Option<f64>,
    pub max_iters: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    pub modes: Option<Vec<String>>,
    pub line_search: Option<String>,
    pub max_newton: Option<usize>,
    pub nsteps: Option<Vec<usize>>,
    pub t0: Option<f64>,
    pub tf: Option<f64>,
}

/// Settings after merging flags, config file and defaults.
#[derive(Debug, Clone, Serialize)]
pub struct Resolved {
    pub problem: String,
    pub shifts: Vec<String>,
    pub init: String,
    pub reltol: Option<f64>,
    pub abstol: Option<f64>,
    pub max_iters: usize,
    pub seed: u64,
    pub out: PathBuf,
    pub workers: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub modes: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub line_search: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_newton: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nsteps: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tf: Option<f64>,
}

const DEFAULT_PROBLEM: &str = "heat:10x10";
const DEFAULT_SHIFTS: &str = "heur:10,10,10";

fn non_empty<T>(v: Vec<T>) -> Option<Vec<T>> {
    if v.is_empty() {
        None
    } else {
        Some(v)
    }
}

fn load_file_config(path: Option<&Path>) -> Result<FileConfig> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = fs::read_to_string(path)?;
    toml::from_str(&text).map_err(|e| Error::Parse { context: path.display().to_string(), message: e.to_string() })
}

fn resolve_common(c: &Common, f: &FileConfig, default_out: &str, default_init: &str) -> Result<Resolved> {
    let reltol = c.reltol.or(if c.abstol.is_some() { None } else { f.reltol });
    let abstol = c.abstol.or(if c.reltol.is_some() { None } else { f.abstol });
    if reltol.is_some() && abstol.is_some() {
        return Err(Error::InvalidArgument("reltol and abstol are mutually exclusive".into()));
    }
    for (name, v) in [("reltol", reltol), ("abstol", abstol)] {
        if let Some(v) = v {
            if !(v > 0.0) {
                return Err(Error::InvalidArgument(format!("{name} must be positive")));
            }
        }
    }
    let workers = c.workers.or(f.workers).unwrap_or(1);
    if workers == 0 {
        return Err(Error::InvalidArgument("workers must be at least 1".into()));
    }
    Ok(Resolved {
        problem: c.problem.clone().or_else(|| f.problem.clone()).unwrap_or_else(|| DEFAULT_PROBLEM.into()),
        shifts: non_empty(c.shifts.clone()).or_else(|| f.shifts.clone()).unwrap_or_else(|| vec![DEFAULT_SHIFTS.into()]),
        init: c.init.clone().or_else(|| f.init.clone()).unwrap_or_else(|| default_init.into()),
        reltol,
        abstol,
        max_iters: c.max_iters.or(f.max_iters).unwrap_or(300),
        seed: c.seed.or(f.seed).unwrap_or(DEFAULT_ARNOLDI_SEED),
        out: c.out.clone().or_else(|| f.out.clone()).unwrap_or_else(|| PathBuf::from(default_out)),
        workers,
        modes: None,
        line_search: None,
        max_newton: None,
        nsteps: None,
        t0: None,
        tf: None,
    })
}

impl Resolved {
    fn strategies(&self) -> Result<Vec<ShiftStrategy>> {
        self.shifts.iter().map(|s| s.parse::<ShiftStrategy>().map(|st| st.with_seed(self.seed))).collect()
    }

    fn tolerance(&self) -> Tolerance {
        match (self.reltol, self.abstol) {
            (_, Some(a)) => Tolerance::Absolute(a),
            (Some(r), None) => Tolerance::Relative(r),
            (None, None) => Tolerance::Relative(1e-10),
        }
    }

    fn adi_options(&self) -> AdiOptions {
        AdiOptions::default().with_tolerance(self.tolerance()).with_max_iters(self.max_iters)
    }
}

/// Loads a bundle or generates a `heat:` problem.
pub fn load_problem(spec: &str) -> Result<RiccatiProblem> {
    if spec.starts_with("heat:") {
        Ok(generate_heat_fd(&spec.parse::<HeatSpec>()?)?.problem)
    } else {
        Ok(io::load_bundle(Path::new(spec))?.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Init {
    Zero,
    Warm,
    Both,
    File(PathBuf),
}

fn parse_init(s: &str) -> Result<Init> {
    match s {
        "zero" => Ok(Init::Zero),
        "warm" => Ok(Init::Warm),
        "both" => Ok(Init::Both),
        _ => match s.strip_prefix("file:") {
            Some(p) if !p.is_empty() => Ok(Init::File(PathBuf::from(p))),
            _ => Err(Error::InvalidArgument(format!("unknown init '{s}'"))),
        },
    }
}

fn sweep_columns(init: &Init) -> Columns {
    match init {
        Init::Zero => Columns { old: true, new: false },
        Init::Warm => Columns { old: false, new: true },
        Init::Both | Init::File(_) => Columns::BOTH,
    }
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    command: &'a str,
    version: &'a str,
    csv_schema: u32,
    settings: &'a Resolved,
    outputs: Vec<String>,
    status: String,
    wall_seconds: f64,
}

fn write_manifest(command: &str, r: &Resolved, outputs: Vec<String>, status: &str, wall: f64) -> Result<()> {
    let m = Manifest {
        command,
        version: env!("CARGO_PKG_VERSION"),
        csv_schema: CSV_SCHEMA_VERSION,
        settings: r,
        outputs,
        status: status.into(),
        wall_seconds: wall,
    };
    let text = toml::to_string(&m).map_err(|e| Error::InvalidArgument(format!("manifest: {e}")))?;
    fs::write(r.out.join("manifest.toml"), text)?;
    Ok(())
}

fn with_pool<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

fn cmd_lyap(r: &Resolved) -> Result<i32> {
    let clock = Instant::now();
    let strategies = r.strategies()?;
    let [strategy] = strategies.as_slice() else {
        return Err(Error::InvalidArgument("lyap takes exactly one shift strategy".into()));
    };
    let p = load_problem(&r.problem)?;
    let lp = experiments::controllability_problem(&p)?;
    let x0 = match parse_init(&r.init)? {
        Init::Zero => LowRankFactor::zeros(p.n()),
        Init::File(path) => io::read_factor(&path)?,
        other => return Err(Error::InvalidArgument(format!("lyap accepts init zero or file:<path>, not {other:?}"))),
    };
    let out = adi::solve(&lp, &x0, strategy, &r.adi_options())?;
    fs::create_dir_all(&r.out)?;
    experiments::write_csv(&r.out.join("lyap_trace.csv"), &experiments::lyap_rows(&out.trace))?;
    io::write_factor(&r.out.join("solution.txt"), &out.solution)?;
    let status = if out.converged() { "converged" } else { "max-iterations" };
    println!(
        "lyap: {status} after {} iterations, residual {:.3e} (threshold {:.3e}), rank {}",
        out.trace.iterations(),
        out.trace.final_residual(),
        out.trace.threshold,
        out.solution.rank()
    );
    let outputs = vec!["lyap_trace.csv".into(), "solution.txt".into()];
    write_manifest("lyap", r, outputs, status, clock.elapsed().as_secs_f64())?;
    Ok(if out.converged() { EXIT_OK } else { EXIT_NOT_CONVERGED })
}

fn parse_line_search(s: &str) -> Result<Vec<bool>> {
    match s {
        "off" => Ok(vec![false]),
        "on" => Ok(vec![true]),
        "both" => Ok(vec![false, true]),
        _ => Err(Error::InvalidArgument(format!("line search must be off, on or both, not '{s}'"))),
    }
}

fn failed(status: &str) -> bool {
    status.split(';').any(|s| !s.ends_with("skipped") && s != "ok")
}

fn cmd_newton(r: &Resolved) -> Result<i32> {
    let clock = Instant::now();
    let modes = r.modes.as_deref().unwrap_or_default().iter().map(|m| m.parse()).collect::<Result<Vec<ForcingMode>>>()?;
    let line_search = parse_line_search(r.line_search.as_deref().unwrap_or("off"))?;
    let strategies = r.strategies()?;
    let init = parse_init(&r.init)?;
    let p = load_problem(&r.problem)?;
    let start = match &init {
        Init::File(path) => io::read_factor(path)?,
        _ => LowRankFactor::zeros(p.n()),
    };
    let base = NewtonConfig {
        reltol: r.reltol.unwrap_or(1e-10),
        max_newton: r.max_newton.unwrap_or(30),
        adi: NewtonConfig::default().adi.with_max_iters(r.max_iters),
        ..NewtonConfig::default()
    };
    let cells = experiments::newton_grid(&modes, &line_search, &strategies);
    let rows = with_pool(r.workers, || experiments::newton_sweep(&p, &base, &start, &cells, sweep_columns(&init)))?;
    fs::create_dir_all(&r.out)?;
    experiments::write_csv(&r.out.join("newton.csv"), &rows)?;
    let bad = rows.iter().filter(|row| failed(&row.status)).count();
    println!("newton: {} cells, {bad} with a non-converged run", rows.len());
    let status = if bad == 0 { "ok".to_string() } else { format!("{bad} cells not converged") };
    write_manifest("newton", r, vec!["newton.csv".into()], &status, clock.elapsed().as_secs_f64())?;
    Ok(if bad == 0 { EXIT_OK } else { EXIT_NOT_CONVERGED })
}

fn file_safe(s: &str) -> String {
    s.chars().map(|c| if c.is_ascii_alphanumeric() { c } else { '-' }).collect()
}

fn cmd_dre(r: &Resolved) -> Result<i32> {
    let clock = Instant::now();
    let strategies = r.strategies()?;
    let init = parse_init(&r.init)?;
    if let Init::File(_) = init {
        return Err(Error::InvalidArgument("dre starts from C^T C; init must be zero, warm or both".into()));
    }
    let nsteps = r.nsteps.clone().unwrap_or_default();
    let p = load_problem(&r.problem)?;
    let base = DreConfig {
        t0: r.t0.unwrap_or(0.0),
        tf: r.tf.unwrap_or(1.0),
        adi: DreConfig::default().adi.with_tolerance(r.tolerance()).with_max_iters(r.max_iters),
        ..DreConfig::default()
    };
    let mut cells = Vec::new();
    for &n in &nsteps {
        for s in &strategies {
            cells.push(DreCell { nsteps: n, shifts: s.clone() });
        }
    }
    let results = with_pool(r.workers, || experiments::dre_sweep(&p, &base, &cells, sweep_columns(&init)))?;
    fs::create_dir_all(&r.out)?;
    let rows: Vec<_> = results.iter().map(|c| c.row.clone()).collect();
    experiments::write_csv(&r.out.join("dre_summary.csv"), &rows)?;
    let mut outputs = vec!["dre_summary.csv".to_string()];
    for c in &results {
        for (tag, steps) in [("old", &c.old_steps), ("new", &c.new_steps)] {
            if steps.is_empty() {
                continue;
            }
            let name = format!("dre_steps_n{}_{}_{tag}.csv", c.cell.nsteps, file_safe(&c.cell.shifts.to_string()));
            experiments::write_csv(&r.out.join(&name), steps)?;
            outputs.push(name);
        }
    }
    let bad = rows.iter().filter(|row| failed(&row.status)).count();
    println!("dre: {} cells, {bad} with a non-converged run", rows.len());
    let status = if bad == 0 { "ok".to_string() } else { format!("{bad} cells not converged") };
    write_manifest("dre", r, outputs, &status, clock.elapsed().as_secs_f64())?;
    Ok(if bad == 0 { EXIT_OK } else { EXIT_NOT_CONVERGED })
}

fn cmd_shift_analysis(r: &Resolved) -> Result<i32> {
    let clock = Instant::now();
    let p = load_problem(&r.problem)?;
    let rows = experiments::shift_analysis(&p.a().to_dense(), &p.e().to_dense())?;
    fs::create_dir_all(&r.out)?;
    experiments::write_csv(&r.out.join("shift_analysis.csv"), &rows)?;
    println!("shift-analysis: {} points per curve", rows.len() / 3);
    write_manifest("shift-analysis", r, vec!["shift_analysis.csv".into()], "ok", clock.elapsed().as_secs_f64())?;
    Ok(EXIT_OK)
}

fn cmd_gen_problem(r: &Resolved) -> Result<i32> {
    let clock = Instant::now();
    let spec: HeatSpec = r.problem.parse()?;
    let g = generate_heat_fd(&spec)?;
    let path = io::save_bundle(&r.out, &g)?;
    println!("gen-problem: n = {} written to {}", g.problem.n(), path.display());
    write_manifest("gen-problem", r, vec![io::MANIFEST_NAME.into()], "ok", clock.elapsed().as_secs_f64())?;
    Ok(EXIT_OK)
}

fn dispatch(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Lyap(c) => {
            let f = load_file_config(c.config.as_deref())?;
            cmd_lyap(&resolve_common(&c, &f, "out/lyap", "zero")?)
        }
        Command::Newton { common, modes, line_search, max_newton } => {
            let f = load_file_config(common.config.as_deref())?;
            let mut r = resolve_common(&common, &f, "out/newton", "both")?;
            r.modes = Some(
                non_empty(modes)
                    .or(f.modes)
                    .unwrap_or_else(|| ["classical", "inexact", "hybrid"].map(String::from).to_vec()),
            );
            r.line_search = Some(line_search.or(f.line_search).unwrap_or_else(|| "both".into()));
            r.max_newton = Some(max_newton.or(f.max_newton).unwrap_or(30));
            if r.abstol.is_some() {
                return Err(Error::InvalidArgument("newton stops on --reltol; --abstol is not supported".into()));
            }
            cmd_newton(&r)
        }
        Command::Dre { common, nsteps, t0, tf } => {
            let f = load_file_config(common.config.as_deref())?;
            let mut r = resolve_common(&common, &f, "out/dre", "both")?;
            r.nsteps = Some(non_empty(nsteps).or(f.nsteps).unwrap_or_else(|| vec![45, 450]));
            r.t0 = Some(t0.or(f.t0).unwrap_or(0.0));
            r.tf = Some(tf.or(f.tf).unwrap_or(1.0));
            cmd_dre(&r)
        }
        Command::ShiftAnalysis(c) => {
            let f = load_file_config(c.config.as_deref())?;
            cmd_shift_analysis(&resolve_common(&c, &f, "out/shift-analysis", "zero")?)
        }
        Command::GenProblem(c) => {
            let f = load_file_config(c.config.as_deref())?;
            cmd_gen_problem(&resolve_common(&c, &f, "out/problem", "zero")?)
        }
    }
}

/// Parses `args` (including the program name), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("lradi: {e}");
            match e {
                Error::NonConvergence(_) => EXIT_NOT_CONVERGED,
                _ => EXIT_USAGE,
            }
        }
    }
}
