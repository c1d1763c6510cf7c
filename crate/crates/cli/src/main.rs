use std::fs::{self, File};
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use infheat_core::config::ExperimentConfig;
use infheat_core::exact::{
    default_step, residual_at, Barenblatt, BlowUp, ExactSolution, GiantProfile, TravelingWave, DEFAULT_GIANT_NODES,
};
use infheat_core::experiment::{load_run, run_to_dir, ExperimentError};
use infheat_core::operator::{Homogeneity, Mutation};
use infheat_core::report::{evaluate, write_report_csv, Target};
use infheat_core::verify::{self, Suite, Summary};

const EXIT_FAILED: u8 = 1;
const EXIT_INVALID: u8 = 2;
const EXIT_ABORT: u8 = 3;

#[derive(Parser)]
#[command(name = "infheat", version, about = "Solvers and large-time diagnostics for the h-homogeneous infinity-Laplacian evolution")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample an exact solution along the first axis.
    Exact(ExactArgs),
    /// Run an experiment described by a config file.
    Evolve(EvolveArgs),
    /// Check large-time targets on a finished run directory.
    Asymptotics(AsymptoticsArgs),
    /// Run a verification suite and print a JSON summary.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Barenblatt,
    Giant,
    Blowup,
    Wave,
}

#[derive(Args)]
struct ExactArgs {
    #[arg(long, value_enum)]
    family: Family,
    #[arg(long)]
    h: f64,
    /// Barenblatt radius.
    #[arg(long = "R", default_value_t = 1.0)]
    radius: f64,
    #[arg(long, default_value_t = 1.0)]
    t: f64,
    /// Zero-sphere radius (giant, blowup).
    #[arg(long, default_value_t = 1.0)]
    r0: f64,
    /// Reference time: start of the giant, blow-up time of the blowup.
    #[arg(long)]
    t0: Option<f64>,
    /// Wave speed.
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    /// Wave direction; normalised. Defaults to the first axis.
    #[arg(long, value_delimiter = ',')]
    direction: Option<Vec<f64>>,
    #[arg(long, default_value_t = 1)]
    dim: usize,
    #[arg(long, default_value_t = 201)]
    axis_samples: usize,
    /// Half-width of the sampled segment; chosen per family when absent.
    #[arg(long)]
    extent: Option<f64>,
    /// Giant only: write the profile table `s,r,X,Xprime` instead.
    #[arg(long)]
    dump_profile: bool,
    /// Output file; stdout when absent.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvolveArgs {
    /// Experiment config (TOML).
    #[arg(long, short)]
    config: PathBuf,
    /// Override a config key, e.g. `--set grid.n=400` or `--set equation.h=2.0`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Run directory; defaults to `output.dir` of the config.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AsymptoticsArgs {
    /// Run directory written by `evolve`.
    run: PathBuf,
    /// Targets to check; defaults depend on the problem.
    #[arg(long = "target", short)]
    targets: Vec<String>,
    /// Report CSV; defaults to `report.csv` inside the run directory.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum MutationArg {
    AmplitudeConstant,
    WaveConstant,
    EvenFlux,
}

impl From<MutationArg> for Mutation {
    fn from(m: MutationArg) -> Self {
        match m {
            MutationArg::AmplitudeConstant => Mutation::AmplitudeConstant,
            MutationArg::WaveConstant => Mutation::WaveConstant,
            MutationArg::EvenFlux => Mutation::EvenFlux,
        }
    }
}

#[derive(Args)]
struct VerifyArgs {
    /// default, operator, exact, giant, radial, grid, cauchy, dirichlet, mutation or acceptance.
    #[arg(long, default_value = "default")]
    suite: String,
    /// Run a single acceptance criterion (1 to 11) instead of a suite.
    #[arg(long, conflicts_with = "suite")]
    criterion: Option<u8>,
    /// Deliberately corrupt a constant; the suite is expected to fail.
    #[arg(long, value_enum)]
    mutate: Option<MutationArg>,
    /// Also write the JSON summary here.
    #[arg(long)]
    json: Option<PathBuf>,
}

/// An error paired with the exit code it maps to.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure {
            code: EXIT_FAILED,
            error: e.into(),
        }
    }
}

fn invalid(error: impl Into<anyhow::Error>) -> Failure {
    Failure {
        code: EXIT_INVALID,
        error: error.into(),
    }
}

fn experiment_failure(e: ExperimentError) -> Failure {
    let code = match &e {
        ExperimentError::Config(_) | ExperimentError::Exact(_) | ExperimentError::InitialFile(_) => EXIT_INVALID,
        ExperimentError::Missing(_) => EXIT_INVALID,
        ExperimentError::Aborted(_) | ExperimentError::Grid(_) | ExperimentError::Radial(_) => EXIT_ABORT,
        _ => EXIT_FAILED,
    };
    Failure { code, error: e.into() }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Exact(a) => cmd_exact(a),
        Command::Evolve(a) => cmd_evolve(a),
        Command::Asymptotics(a) => cmd_asymptotics(a),
        Command::Verify(a) => cmd_verify(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) if is_broken_pipe(&f.error) => ExitCode::SUCCESS,
        Err(f) => {
            let body = serde_json::json!({
                "error": format!("{:#}", f.error),
                "exit_code": f.code,
            });
            eprintln!("{body}");
            ExitCode::from(f.code)
        }
    }
}

fn is_broken_pipe(e: &anyhow::Error) -> bool {
    e.chain()
        .any(|c| c.downcast_ref::<io::Error>().is_some_and(|io| io.kind() == io::ErrorKind::BrokenPipe))
}

fn output(path: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(io::BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn cmd_exact(a: ExactArgs) -> Result<u8, Failure> {
    let hom = Homogeneity::new(a.h).map_err(invalid)?;
    if a.dim == 0 || a.dim > 3 {
        return Err(invalid(anyhow!("--dim must be 1, 2 or 3")));
    }
    if a.axis_samples < 2 {
        return Err(invalid(anyhow!("--axis-samples must be at least 2")));
    }
    let (solution, extent): (ExactSolution, f64) = match a.family {
        Family::Barenblatt => {
            let b = Barenblatt::new(a.radius, hom).map_err(invalid)?;
            let support = b.support_radius(a.t).map_err(invalid)?;
            (b.into(), 1.25 * support)
        }
        Family::Giant => {
            let profile = GiantProfile::build(hom, DEFAULT_GIANT_NODES).map_err(invalid)?;
            if a.dump_profile {
                eprintln!("Rbar = {:.6}", profile.rbar());
                profile.write_csv(output(a.out.as_deref())?)?;
                return Ok(0);
            }
            let g = ExactSolution::giant(Arc::new(profile), a.r0, a.t0.unwrap_or(0.0)).map_err(invalid)?;
            (g, a.r0)
        }
        Family::Blowup => {
            let b = BlowUp::new(a.r0, a.t0.unwrap_or(a.t + 1.0), hom).map_err(invalid)?;
            (b.into(), 3.0 * a.r0)
        }
        Family::Wave => {
            let mut nu = a.direction.clone().unwrap_or_else(|| {
                let mut e = vec![0.0; a.dim];
                e[0] = 1.0;
                e
            });
            if nu.len() != a.dim {
                return Err(invalid(anyhow!("--direction has {} components, --dim is {}", nu.len(), a.dim)));
            }
            let norm = nu.iter().map(|x| x * x).sum::<f64>().sqrt();
            nu.iter_mut().for_each(|x| *x /= norm);
            let w = TravelingWave::new(nu, a.c, hom).map_err(invalid)?;
            let front = w.front(a.t);
            eprintln!("front x.nu = {front}");
            (w.into(), front.abs() + 2.0)
        }
    };
    if a.dump_profile {
        return Err(invalid(anyhow!("--dump-profile applies to the giant family only")));
    }
    let extent = a.extent.unwrap_or(extent);
    let n = a.axis_samples;
    let mut w = csv::Writer::from_writer(output(a.out.as_deref())?);
    w.write_record(["x", "u"])?;
    let mut point = vec![0.0; a.dim];
    let mut spot: f64 = 0.0;
    let mut checked = 0;
    for i in 0..n {
        point[0] = -extent + 2.0 * extent * i as f64 / (n - 1) as f64;
        let u = solution.eval(&point, a.t).map_err(invalid)?;
        w.write_record([format!("{:.17e}", point[0]), format!("{u:.17e}")])?;
        if i % (n / 8).max(1) == 0 {
            if let Ok((dist, _)) = solution.singular_distance(&point, a.t) {
                if dist > 0.05 {
                    spot = spot.max(residual_at(&solution, &point, a.t, default_step()).map_err(invalid)?);
                    checked += 1;
                }
            }
        }
    }
    w.flush()?;
    eprintln!("residual spot checks: {checked} points, max {spot:.3e}");
    Ok(0)
}

/// Applies `key=value` overrides; values are TOML, bare words become strings.
fn apply_overrides(text: &str, overrides: &[String]) -> anyhow::Result<String> {
    let mut doc: toml::Table = toml::from_str(text).context("parsing config")?;
    for o in overrides {
        let (key, raw) = o.split_once('=').ok_or_else(|| anyhow!("override {o:?} is not KEY=VALUE"))?;
        let value: toml::Value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
            .ok()
            .and_then(|mut t| t.remove("v"))
            .unwrap_or_else(|| toml::Value::String(raw.to_string()));
        let parts: Vec<&str> = key.trim().split('.').collect();
        let (last, path) = parts.split_last().ok_or_else(|| anyhow!("empty override key"))?;
        let mut table = &mut doc;
        for p in path {
            table = table
                .entry(p.to_string())
                .or_insert_with(|| toml::Value::Table(toml::Table::new()))
                .as_table_mut()
                .ok_or_else(|| anyhow!("{key}: {p} is not a table"))?;
        }
        table.insert(last.to_string(), value);
    }
    Ok(toml::to_string(&doc)?)
}

fn cmd_evolve(a: EvolveArgs) -> Result<u8, Failure> {
    let text = fs::read_to_string(&a.config).with_context(|| format!("reading {}", a.config.display())).map_err(invalid)?;
    let text = apply_overrides(&text, &a.overrides).map_err(invalid)?;
    let cfg = ExperimentConfig::parse(&text).map_err(invalid)?;
    let dir = a
        .out
        .or_else(|| cfg.output.dir.clone())
        .ok_or_else(|| invalid(anyhow!("no run directory: pass --out or set output.dir")))?;
    match run_to_dir(&cfg, &dir) {
        Ok((run, manifest)) => {
            println!("run {} written to {}", manifest.name, dir.display());
            println!("steps {} snapshots {} wall {:.2}s", manifest.steps, manifest.snapshot_times.len(), manifest.wall_time_s);
            if let Some(e) = run.oracle_error {
                println!("oracle max-norm error {e:.6e}");
            }
            Ok(0)
        }
        Err(e) => Err(experiment_failure(e)),
    }
}

fn cmd_asymptotics(a: AsymptoticsArgs) -> Result<u8, Failure> {
    if !a.run.is_dir() {
        return Err(invalid(anyhow!("run directory {} does not exist", a.run.display())));
    }
    let (run, _) = load_run(&a.run).map_err(experiment_failure)?;
    // defaulted targets that do not fit the run are skipped; named ones are errors
    let explicit = !a.targets.is_empty();
    let targets = if explicit {
        a.targets.iter().map(|t| t.parse::<Target>().map_err(|e| invalid(anyhow!(e)))).collect::<Result<_, _>>()?
    } else {
        Target::defaults_for(&run.config)
    };
    let mut checks = Vec::new();
    for t in targets {
        match evaluate(&run, t) {
            Ok(c) => checks.extend(c),
            Err(e) if explicit => return Err(invalid(e)),
            Err(e) => println!("SKIP {}: {e}", t.name()),
        }
    }
    if checks.is_empty() {
        return Err(invalid(anyhow!("no target applies to run {}", a.run.display())));
    }
    let path = a.out.unwrap_or_else(|| a.run.join("report.csv"));
    write_report_csv(&checks, File::create(&path).with_context(|| format!("creating {}", path.display()))?)?;
    for c in &checks {
        let status = if c.passed { "PASS" } else { "FAIL" };
        println!(
            "{status} {} {} measured {:.6e} expected {:.6e} tol {:.1e}",
            c.target.name(),
            c.quantity,
            c.measured,
            c.expected,
            c.tolerance
        );
    }
    println!("report written to {}", path.display());
    Ok(if checks.iter().all(|c| c.passed) { 0 } else { EXIT_FAILED })
}

fn cmd_verify(a: VerifyArgs) -> Result<u8, Failure> {
    let mutation = a.mutate.map(Mutation::from).unwrap_or_default();
    let (suite, outcomes) = match a.criterion {
        Some(id) => {
            let Some(o) = verify::criterion(id, mutation) else {
                return Err(invalid(anyhow!("criterion must be between 1 and 11, got {id}")));
            };
            (Suite::Acceptance, vec![o])
        }
        None => {
            let suite: Suite = a.suite.parse().map_err(|e: String| invalid(anyhow!(e)))?;
            (suite, verify::run_suite(suite, mutation))
        }
    };
    for o in &outcomes {
        eprintln!("{}", o.line());
    }
    let summary = Summary::new(suite, mutation, outcomes);
    let json = serde_json::to_string_pretty(&summary)?;
    if let Some(p) = &a.json {
        fs::write(p, &json).with_context(|| format!("writing {}", p.display()))?;
    }
    println!("{json}");
    if summary.outcomes.is_empty() {
        return Err(anyhow!("suite produced no checks").into());
    }
    Ok(if summary.passed { 0 } else { EXIT_FAILED })
}
