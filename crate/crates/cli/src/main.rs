//! Command-line harness: covers, online learners, limited-type runs,
//! dispersion experiments, and distributional ERM.
//!
//! Exit codes: 0 success, 2 configuration error, 3 enumeration cap exceeded.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use menu_forge::cover::{LotteryCoverParams, TariffCoverParams};
use menu_forge::dispersion::{
    lottery_dispersion_failure, tariff_dispersion_experiment, BoundedDensity, DispersionParams,
};
use menu_forge::harness::{
    enumeration_cap, fmt_f64, run_experiment, run_seed_sweep, AdversarySpec, ExperimentConfig,
    Family, Learner, LearnerParams,
};
use menu_forge::limited_types::TypeSet;
use menu_forge::Error;

#[derive(Parser)]
#[command(
    name = "menu-forge",
    version,
    about = "Selling-mechanism learning experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print cover sizes; optionally dump the cover as JSON lines.
    Cover(CoverArgs),
    /// Full-information weighted majority over a discretized cover.
    Online(RunArgs),
    /// Bandit Exp3 over a discretized cover.
    Bandit(RunArgs),
    /// Block-structured partial-information learner for known buyer types.
    Limited(LimitedArgs),
    /// Grid-discretized semi-bandit Exp3-SET (tariffs).
    Semibandit(RunArgs),
    /// Dispersion experiments.
    Dispersion(DispersionArgs),
    /// Distributional ERM over a discretized cover.
    Distributional(RunArgs),
}

#[derive(Args)]
struct CoverArgs {
    #[arg(long, value_parser = parse_family, default_value = "tariff")]
    family: Family,
    #[arg(long, default_value_t = 1)]
    ell: usize,
    /// Maximum units K (tariff family).
    #[arg(long, default_value_t = 1)]
    k: usize,
    /// Item count m (lottery family).
    #[arg(long, default_value_t = 1)]
    m: usize,
    #[arg(long, default_value_t = 1.0)]
    h: f64,
    #[arg(long)]
    alpha: f64,
    /// Lottery level decay.
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    /// Lottery level count.
    #[arg(long, default_value_t = 2)]
    levels: usize,
    /// Dump every menu as one JSON object per line.
    #[arg(long)]
    dump: bool,
}

#[derive(Args)]
struct RunArgs {
    /// JSON experiment config; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_parser = parse_family)]
    family: Option<Family>,
    #[arg(long)]
    ell: Option<usize>,
    /// Maximum units K (tariff family).
    #[arg(long)]
    k: Option<usize>,
    /// Item count m (lottery family).
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    h: Option<f64>,
    /// Horizon T (online) or sample count N (distributional).
    #[arg(long)]
    t: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    levels: Option<usize>,
    #[arg(long)]
    epsilon: Option<f64>,
    /// ERM confidence target.
    #[arg(long)]
    erm_delta: Option<f64>,
    /// Semi-bandit step size.
    #[arg(long)]
    step: Option<f64>,
    /// Named density: uniform:<lo>,<hi> or triangular-down.
    #[arg(long)]
    density: Option<String>,
    /// JSON-lines valuation file played in order.
    #[arg(long)]
    adversary_file: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Seed sweep `a..b` (half-open); one output file per seed.
    #[arg(long)]
    seeds: Option<String>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct LimitedArgs {
    #[command(flatten)]
    run: RunArgs,
    /// JSON file holding the buyer type set (array of valuations).
    #[arg(long)]
    types: Option<PathBuf>,
    #[arg(long)]
    spanner_c: Option<f64>,
    /// Adversary over type indices: iid | cyclic.
    #[arg(long, default_value = "iid")]
    type_adversary: String,
}

#[derive(Args)]
struct DispersionArgs {
    #[command(subcommand)]
    case: DispersionCase,
}

#[derive(Subcommand)]
#[allow(clippy::large_enum_variant)]
enum DispersionCase {
    /// Ball-split counts for tariff hyperplane arrangements.
    TariffSplits {
        #[arg(long, default_value_t = 1000)]
        t: usize,
        #[arg(long, default_value_t = 1)]
        ell: usize,
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long, default_value_t = 1.0)]
        h: f64,
        /// Comma-separated radii.
        #[arg(long, default_value = "0.02,0.01,0.005,0.0025")]
        radii: String,
        #[arg(long, default_value_t = 256)]
        centers: usize,
        #[arg(long, default_value = "uniform:0,1")]
        density: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Constant crossing probability for the near-identical lottery pair.
    LotteryFailure {
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        #[arg(long, default_value_t = 1.0)]
        lipschitz: f64,
        #[arg(long, default_value_t = 1.0)]
        h: f64,
        #[arg(long, default_value = "0.1,0.01,0.001")]
        epsilons: String,
        #[arg(long, default_value = "uniform:0,1")]
        density: String,
        #[arg(long, default_value_t = 10000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Semi-bandit trace (same runner as the top-level subcommand).
    Semibandit(RunArgs),
}

fn parse_family(s: &str) -> Result<Family, String> {
    match s {
        "tariff" => Ok(Family::Tariff),
        "lottery" => Ok(Family::Lottery),
        other => Err(format!("unknown family {other:?} (tariff|lottery)")),
    }
}

fn parse_density(s: &str) -> anyhow::Result<BoundedDensity> {
    if let Some(rest) = s.strip_prefix("uniform:") {
        let parts: Vec<&str> = rest.split(',').collect();
        anyhow::ensure!(parts.len() == 2, "uniform:<lo>,<hi>");
        return Ok(BoundedDensity::Uniform {
            lo: parts[0].parse()?,
            hi: parts[1].parse()?,
        });
    }
    if s == "triangular-down" {
        return Ok(BoundedDensity::TriangularDown);
    }
    if let Some(rest) = s.strip_prefix("piecewise:") {
        // piecewise:b0,b1,...;h0,h1,...
        let (b, h) = rest
            .split_once(';')
            .ok_or_else(|| anyhow::anyhow!("piecewise:<breaks>;<heights>"))?;
        let breaks: Result<Vec<f64>, _> = b.split(',').map(str::parse).collect();
        let heights: Result<Vec<f64>, _> = h.split(',').map(str::parse).collect();
        return Ok(BoundedDensity::PiecewiseConstant {
            breaks: breaks?,
            heights: heights?,
        });
    }
    anyhow::bail!("unknown density {s:?} (uniform:<lo>,<hi> | triangular-down | piecewise:...)")
}

fn parse_list(s: &str) -> anyhow::Result<Vec<f64>> {
    s.split(',')
        .map(|p| p.trim().parse::<f64>().map_err(Into::into))
        .collect()
}

fn parse_seed_range(s: &str) -> anyhow::Result<std::ops::Range<u64>> {
    let (a, b) = s
        .split_once("..")
        .ok_or_else(|| anyhow::anyhow!("seed sweep must look like a..b"))?;
    Ok(a.parse()?..b.parse()?)
}

/// Merges CLI flags over an optional config file into a full config.
fn build_config(args: &RunArgs, learner: Learner) -> anyhow::Result<ExperimentConfig> {
    let mut config = match &args.config {
        Some(path) => ExperimentConfig::from_json_file(path)?,
        None => {
            let family = args.family.unwrap_or(Family::Tariff);
            ExperimentConfig {
                family,
                ell: 1,
                max_units: Some(1),
                items: Some(1),
                h: 1.0,
                learner,
                params: LearnerParams::default(),
                adversary: AdversarySpec::Iid {
                    density: BoundedDensity::Uniform { lo: 0.0, hi: 1.0 },
                    shared_mix: None,
                },
                rounds: None,
                samples: None,
                types: None,
                seed: 0,
                output: PathBuf::from("trace.csv"),
            }
        }
    };
    config.learner = learner;
    if let Some(f) = args.family {
        config.family = f;
    }
    if let Some(v) = args.ell {
        config.ell = v;
    }
    if let Some(v) = args.k {
        config.max_units = Some(v);
    }
    if let Some(v) = args.m {
        config.items = Some(v);
    }
    if let Some(v) = args.h {
        config.h = v;
    }
    if let Some(v) = args.t {
        if learner == Learner::Erm {
            config.samples = Some(v);
        } else {
            config.rounds = Some(v);
        }
    }
    if let Some(v) = args.alpha {
        config.params.alpha = Some(v);
    }
    if let Some(v) = args.beta {
        config.params.beta = Some(v);
    }
    if let Some(v) = args.gamma {
        config.params.gamma = Some(v);
    }
    if let Some(v) = args.delta {
        config.params.delta = Some(v);
    }
    if let Some(v) = args.levels {
        config.params.levels = Some(v);
    }
    if let Some(v) = args.epsilon {
        config.params.epsilon = Some(v);
    }
    if let Some(v) = args.erm_delta {
        config.params.erm_delta = Some(v);
    }
    if let Some(v) = args.step {
        config.params.step = Some(v);
    }
    if let Some(d) = &args.density {
        config.adversary = AdversarySpec::Iid {
            density: parse_density(d)?,
            shared_mix: None,
        };
    }
    if let Some(path) = &args.adversary_file {
        config.adversary = AdversarySpec::FixedSequence { path: path.clone() };
    }
    if let Some(s) = args.seed {
        config.seed = s;
    }
    if let Some(o) = &args.output {
        config.output = o.clone();
    }
    Ok(config)
}

fn dispatch_run(args: &RunArgs, learner: Learner) -> anyhow::Result<()> {
    let config = build_config(args, learner)?;
    match &args.seeds {
        Some(range) => run_seed_sweep(&config, parse_seed_range(range)?)?,
        None => run_experiment(&config)?,
    }
    Ok(())
}

fn cmd_cover(args: &CoverArgs) -> anyhow::Result<()> {
    let cap = Some(enumeration_cap());
    match args.family {
        Family::Tariff => {
            let params = TariffCoverParams::new(args.alpha, args.h, args.k, args.ell)?;
            println!(
                "family=tariff ell={} grid_points={} menus={}",
                args.ell,
                params.grid_points(),
                params.count()
            );
            if args.dump {
                for menu in menu_forge::cover::enumerate_tariff_cover(&params, cap)? {
                    println!("{}", serde_json::to_string(&menu)?);
                }
            }
        }
        Family::Lottery => {
            let params = LotteryCoverParams::new(
                args.alpha,
                args.delta,
                args.levels,
                args.m,
                args.h,
                args.ell,
            )?;
            println!(
                "family=lottery ell={} prices={} allocations={} menus={}",
                args.ell,
                params.price_grid().len(),
                params.allocation_grid().len(),
                params.count()
            );
            if args.dump {
                for menu in menu_forge::cover::enumerate_lottery_cover(&params, cap)? {
                    println!("{}", serde_json::to_string(&menu)?);
                }
            }
        }
    }
    Ok(())
}

fn cmd_limited(args: &LimitedArgs) -> anyhow::Result<()> {
    let mut config = build_config(&args.run, Learner::Limited)?;
    if let Some(path) = &args.types {
        let text = std::fs::read_to_string(path)?;
        let types: TypeSet = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("bad type-set file: {e}")))?;
        config.types = Some(types);
    }
    if let Some(c) = args.spanner_c {
        config.params.spanner_c = Some(c);
    }
    if args.run.adversary_file.is_none() && args.run.density.is_none() {
        config.adversary = match args.type_adversary.as_str() {
            "iid" => AdversarySpec::Iid {
                density: BoundedDensity::Uniform { lo: 0.0, hi: 1.0 },
                shared_mix: None,
            },
            "cyclic" => AdversarySpec::Cyclic {
                valuations: config
                    .types
                    .clone()
                    .ok_or_else(|| Error::Config("cyclic adversary needs types".into()))?,
            },
            other => anyhow::bail!("unknown type adversary {other:?} (iid|cyclic)"),
        };
    }
    match &args.run.seeds {
        Some(range) => run_seed_sweep(&config, parse_seed_range(range)?)?,
        None => run_experiment(&config)?,
    }
    Ok(())
}

fn write_or_print(output: &Option<PathBuf>, text: String) -> anyhow::Result<()> {
    match output {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn cmd_dispersion(args: &DispersionArgs) -> anyhow::Result<()> {
    match &args.case {
        DispersionCase::TariffSplits {
            t,
            ell,
            k,
            h,
            radii,
            centers,
            density,
            seed,
            output,
        } => {
            let schedule = parse_list(radii)?;
            let density = parse_density(density)?;
            let params = DispersionParams {
                w: schedule.first().copied().unwrap_or(0.01),
                kappa: density.kappa(),
                lipschitz: (*k + 1) as f64,
                zeta: 0.05,
                trials: *centers,
            };
            let rows = tariff_dispersion_experiment(
                &params, *t, *ell, *k, *h, &density, &schedule, *seed,
            )?;
            let mut text = String::from("w,mean_splits,max_splits\n");
            for r in rows {
                text.push_str(&format!(
                    "{},{},{}\n",
                    fmt_f64(r.w),
                    fmt_f64(r.mean_splits),
                    r.max_splits
                ));
            }
            write_or_print(output, text)?;
        }
        DispersionCase::LotteryFailure {
            c,
            lipschitz,
            h,
            epsilons,
            density,
            trials,
            seed,
            output,
        } => {
            let schedule = parse_list(epsilons)?;
            let density = parse_density(density)?;
            let rows = lottery_dispersion_failure(
                *c, *lipschitz, *h, &schedule, &density, *trials, *seed,
            )?;
            let mut text = String::from("epsilon,estimate,floor\n");
            for r in rows {
                text.push_str(&format!(
                    "{},{},{}\n",
                    fmt_f64(r.epsilon),
                    fmt_f64(r.estimate),
                    fmt_f64(r.floor)
                ));
            }
            write_or_print(output, text)?;
        }
        DispersionCase::Semibandit(run) => dispatch_run(run, Learner::Semibandit)?,
    }
    Ok(())
}

fn run() -> anyhow::Result<()> {
    let cli = Cli::parse();
    match &cli.command {
        Command::Cover(args) => cmd_cover(args),
        Command::Online(args) => dispatch_run(args, Learner::Wm),
        Command::Bandit(args) => dispatch_run(args, Learner::Exp3),
        Command::Limited(args) => cmd_limited(args),
        Command::Semibandit(args) => dispatch_run(args, Learner::Semibandit),
        Command::Dispersion(args) => cmd_dispersion(args),
        Command::Distributional(args) => dispatch_run(args, Learner::Erm),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            let code = err
                .downcast_ref::<Error>()
                .map(|e| e.exit_code())
                .unwrap_or(1);
            ExitCode::from(code as u8)
        }
    }
}
