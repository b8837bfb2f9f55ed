use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mimcei::estimator::{EstimatorOutput, Method, RunOptions};
use mimcei::harness::{
    compute_reference, cost_error_sweep, cost_slope, estimate_rate_surface, fit_dominating_surface, io,
    run_method, ExperimentConfig, Preset, ReferenceMode, SweepSpec,
};
use mimcei::{par, validate};

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Runtime(#[from] mimcei::Error),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "mimcei", version, about = "Multi-index and multilevel Monte Carlo for semilinear SPDEs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct Common {
    /// Experiment configuration (JSON).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Built-in problem used when no configuration file is given.
    #[arg(long, global = true, value_name = "NAME")]
    preset: Option<String>,
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
    /// Fixed merge order and timing-free output files.
    #[arg(long, global = true)]
    deterministic: bool,
    /// Abort runs whose accounted cost exceeds this many units.
    #[arg(long, global = true, value_name = "UNITS")]
    budget_cap: Option<f64>,
    /// Tolerance; repeat for several.
    #[arg(long = "epsilon", global = true, value_name = "EPS")]
    epsilons: Vec<f64>,
    /// MIMC1, MIMC2, MIMC-mixed or MLMC; repeat for several.
    #[arg(long = "method", global = true, value_name = "NAME")]
    methods: Vec<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Estimate the double-difference rate surface and fit a dominating surface.
    Rates,
    /// Cost/error sweep over methods, tolerances and replicates.
    Sweep,
    /// Run each selected estimator once per tolerance.
    Estimate,
    /// Compute the reference solution.
    Reference,
    /// Run the fast invariant suite.
    Validate,
}

struct Context {
    cfg: ExperimentConfig,
    seed: u64,
    out: PathBuf,
    opts: RunOptions,
}

impl Context {
    fn new(common: &Common) -> Result<Self, CliError> {
        let mut cfg = match (&common.config, &common.preset) {
            (Some(path), _) => {
                if !path.is_file() {
                    return Err(CliError::Usage(format!("config file not found: {}", path.display())));
                }
                ExperimentConfig::load(path)
                    .map_err(|e| CliError::Usage(format!("cannot load config {}: {e}", path.display())))?
            }
            (None, Some(name)) => ExperimentConfig::for_preset(
                Preset::parse(name).ok_or_else(|| CliError::Usage(format!("unknown preset: {name}")))?,
            ),
            (None, None) => ExperimentConfig::for_preset(Preset::LinearNu4_3),
        };
        if !common.epsilons.is_empty() {
            cfg.epsilons = common.epsilons.clone();
        }
        if !common.methods.is_empty() {
            cfg.methods = common
                .methods
                .iter()
                .map(|m| Method::parse(m).ok_or_else(|| CliError::Usage(format!("unknown method: {m}"))))
                .collect::<Result<_, _>>()?;
        }
        if common.budget_cap.is_some() {
            cfg.budget_cap = common.budget_cap;
        }
        cfg.deterministic |= common.deterministic;
        cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        let out = common
            .out
            .clone()
            .or_else(|| cfg.output_dir.clone())
            .unwrap_or_else(|| PathBuf::from("results"));
        let opts = RunOptions {
            deterministic: cfg.deterministic,
            budget_cap: cfg.budget_cap,
            ..RunOptions::default()
        };
        Ok(Self { seed: common.seed.unwrap_or(0), cfg, out, opts })
    }

    fn out_dir(&self) -> Result<&Path, CliError> {
        std::fs::create_dir_all(&self.out).map_err(mimcei::Error::from)?;
        Ok(&self.out)
    }

    fn sweep_spec(&self) -> Result<SweepSpec, CliError> {
        let problem = self.cfg.problem.problem();
        Ok(SweepSpec {
            methods: self.cfg.methods.clone(),
            epsilons: self.cfg.epsilons.clone(),
            replicates: self.cfg.replicates,
            rates: self.cfg.rates.rates(&problem)?,
            mixed: self.cfg.rates.mixed_model(),
            replicate_seeds: self.cfg.seeds.clone(),
        })
    }
}

fn rates(ctx: &Context) -> Result<(), CliError> {
    let problem = ctx.cfg.problem.problem();
    let s = &ctx.cfg.surface;
    let surface = estimate_rate_surface(&problem, s.max_level, s.samples, ctx.seed, &ctx.opts)?;
    let dir = ctx.out_dir()?;
    io::write_file(&dir.join("rates.csv"), |w| io::write_rates_csv(&surface, w))?;
    let fit = fit_dominating_surface(&surface);
    match &fit {
        Ok(fit) => {
            io::write_json(fit, &dir.join("fit.json"))?;
            println!(
                "B1bar={:.3} B2bar={:.3} B3bar={:.3} c1={:.3} c2={:.3} dominates={}",
                fit.b1, fit.b2, fit.b3, fit.c1, fit.c2, fit.dominates
            );
        }
        Err(e) => eprintln!("no fit: {e}"),
    }
    println!("wrote {}", dir.join("rates.csv").display());
    fit.map(|_| ()).map_err(CliError::from)
}

fn reference_value(ctx: &Context, write: bool) -> Result<mimcei::QoIValue, CliError> {
    let problem = ctx.cfg.problem.problem();
    let rates = ctx.cfg.rates.rates(&problem)?;
    let mode = ctx.cfg.reference_mode();
    let seed = mimcei::rng::derive_seed(ctx.seed, &[u64::from_le_bytes(*b"referenc")]);
    let reference = compute_reference(&problem, mode, &rates, seed, &ctx.opts)?;
    if write || matches!(mode, ReferenceMode::PseudoMimc(_)) {
        io::write_json(&reference, &ctx.out_dir()?.join("reference.json"))?;
    }
    println!("reference {:?}: norm {:.6e}", mode, reference.value.norm());
    Ok(reference.value)
}

fn sweep(ctx: &Context) -> Result<(), CliError> {
    let problem = ctx.cfg.problem.problem();
    let spec = ctx.sweep_spec()?;
    let reference = reference_value(ctx, false)?;
    let outcome = cost_error_sweep(&problem, &spec, &reference, ctx.seed, &ctx.opts);
    let dir = ctx.out_dir()?;
    io::write_file(&dir.join("sweep.csv"), |w| {
        io::write_sweep_csv(&outcome.records, ctx.cfg.deterministic, w)
    })?;
    if ctx.cfg.deterministic {
        io::write_file(&dir.join("timings.csv"), |w| io::write_timings_csv(&outcome.records, w))?;
    }
    if !outcome.failures.is_empty() {
        io::write_file(&dir.join("failures.csv"), |w| io::write_failures_csv(&outcome.failures, w))?;
        for f in &outcome.failures {
            eprintln!("{} eps={} replicate={}: {}", f.method, f.epsilon, f.replicate, f.message);
        }
    }
    for &m in &spec.methods {
        if let Some(s) = cost_slope(&outcome.records, m) {
            println!("{m}: cost slope {s:.3}");
        }
    }
    println!("wrote {}", dir.join("sweep.csv").display());
    if outcome.records.is_empty() && !outcome.failures.is_empty() {
        return Err(CliError::Runtime(mimcei::Error::Config("every sweep cell failed".into())));
    }
    Ok(())
}

fn estimate(ctx: &Context) -> Result<(), CliError> {
    let problem = ctx.cfg.problem.problem();
    let spec = ctx.sweep_spec()?;
    let dir = ctx.out_dir()?.to_path_buf();
    for &method in &spec.methods {
        for &eps in &spec.epsilons {
            let out: EstimatorOutput = run_method(&problem, method, eps, &spec, ctx.seed, &ctx.opts)?;
            let path = dir.join(format!("estimate-{}-eps{}.json", method.name(), eps));
            io::write_json(&out, &path)?;
            println!(
                "{method} eps={eps}: |value|={:.6e} cost={} indices={}",
                out.value.norm(),
                out.total_cost,
                out.per_index.len()
            );
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(t) = cli.common.threads {
        if t == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        par::set_threads(t);
    }
    if let Command::Validate = cli.command {
        let checks = validate::run_all();
        print!("{}", validate::format_table(&checks));
        if checks.iter().all(|c| c.passed) {
            return Ok(());
        }
        return Err(CliError::Runtime(mimcei::Error::Config("invariant suite failed".into())));
    }
    let ctx = Context::new(&cli.common)?;
    match cli.command {
        Command::Rates => rates(&ctx),
        Command::Sweep => sweep(&ctx),
        Command::Estimate => estimate(&ctx),
        Command::Reference => reference_value(&ctx, true).map(|_| ()),
        Command::Validate => unreachable!(),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
