use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use skycell::channel::pathloss_vs_altitude;
use skycell::scenario::{generate_scenario_one, generate_scenario_two, load_scenario, save_scenario};
use skycell::{plan, ChannelParams, FootprintModel, PlanOptions, Problem, PsoParams, RadioConfig, Region, Scenario};

const EXIT_INFEASIBLE: u8 = 2;
const EXIT_FAILURE: u8 = 1;

#[derive(Debug, Parser)]
#[command(name = "skycell", version, about = "Plan aerial base station fleets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Size, place and prune a fleet for one user snapshot.
    Plan(PlanArgs),
    /// Tabulate pathloss against altitude at fixed horizontal distances.
    ChannelCurve(CurveArgs),
    /// Write a generated user snapshot to a JSON file.
    Generate(GenerateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
enum ScenarioKind {
    One,
    Two,
    File,
}

#[derive(Debug, Args)]
struct ScenarioFlags {
    /// Scenario JSON to load.
    #[arg(long, conflicts_with_all = ["scenario_one", "scenario_two"])]
    scenario: Option<PathBuf>,
    /// Two halves with a density split.
    #[arg(long, conflicts_with = "scenario_two")]
    scenario_one: bool,
    /// Central normal hot spot plus uniform users.
    #[arg(long)]
    scenario_two: bool,
    /// Number of users for generated scenarios.
    #[arg(long)]
    users: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct PlanArgs {
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    scenario: ScenarioFlags,
    /// Output directory for tables, summary and map.
    #[arg(long, env = "SKYCELL_OUT", default_value = "skycell-out")]
    out: PathBuf,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    swarm_size: Option<usize>,
    /// Worker threads for utility evaluation; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Keep every drone the swarm placed.
    #[arg(long)]
    no_prune: bool,
}

#[derive(Debug, Args)]
struct CurveArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Horizontal distances, m.
    #[arg(long = "r", value_delimiter = ',', default_values_t = [200.0, 500.0])]
    distances: Vec<f64>,
    #[arg(long, default_value_t = 1.0)]
    h_min: f64,
    #[arg(long, default_value_t = 3000.0)]
    h_max: f64,
    #[arg(long, default_value_t = 1.0)]
    h_step: f64,
    /// CSV destination with columns r_m,h_m,pathloss_db.
    #[arg(long, default_value = "channel_curve.csv")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct GenerateArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    scenario: ScenarioFlags,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct Config {
    seed: Option<u64>,
    channel: ChannelParams,
    radio: RadioConfig,
    footprint: FootprintModel,
    pso: PsoParams,
    scenario: ScenarioConfig,
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ScenarioConfig {
    kind: ScenarioKind,
    users: usize,
    /// Region width, m.
    width: f64,
    height: f64,
    /// Left and right user fractions for `one`.
    split: (f64, f64),
    central_fraction: f64,
    sigma: f64,
    path: Option<PathBuf>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            kind: ScenarioKind::One,
            users: 1000,
            width: 10_000.0,
            height: 10_000.0,
            split: (0.2, 0.8),
            central_fraction: 0.4,
            sigma: 1000.0,
            path: None,
        }
    }
}

fn load_config(path: Option<&Path>) -> anyhow::Result<Config> {
    let Some(path) = path else {
        return Ok(Config::default());
    };
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn build_scenario(cfg: &Config, flags: &ScenarioFlags) -> anyhow::Result<Scenario> {
    let sc = &cfg.scenario;
    let mut kind = sc.kind;
    let mut path = sc.path.clone();
    if let Some(p) = &flags.scenario {
        kind = ScenarioKind::File;
        path = Some(p.clone());
    } else if flags.scenario_one {
        kind = ScenarioKind::One;
    } else if flags.scenario_two {
        kind = ScenarioKind::Two;
    }
    let users = flags.users.unwrap_or(sc.users);
    let seed = flags.seed.or(cfg.seed).unwrap_or(0);
    let region = Region::new(sc.width, sc.height)?;
    let scenario = match kind {
        ScenarioKind::File => {
            let Some(path) = path else {
                bail!("scenario kind `file` needs a path");
            };
            load_scenario(&path)?
        }
        ScenarioKind::One => generate_scenario_one(users, region, sc.split, seed)?,
        ScenarioKind::Two => generate_scenario_two(users, region, sc.central_fraction, sc.sigma, seed)?,
    };
    Ok(scenario)
}

fn run_plan(args: &PlanArgs) -> anyhow::Result<bool> {
    let cfg = load_config(args.config.as_deref())?;
    let scenario = build_scenario(&cfg, &args.scenario)?;
    let seed = args.scenario.seed.or(cfg.seed).unwrap_or(scenario.seed);
    let mut pso = cfg.pso.clone();
    if let Some(n) = args.max_iters {
        pso.max_iters = n;
    }
    if let Some(n) = args.swarm_size {
        pso.swarm_size = n;
    }
    let problem = Problem::new(scenario, cfg.channel, cfg.radio, cfg.footprint)?;
    let options = PlanOptions {
        pso,
        seed,
        no_prune: args.no_prune,
    };

    let pool = rayon::ThreadPoolBuilder::new().num_threads(args.threads).build()?;
    let result = pool.install(|| plan(&problem, &options))?;
    let files = result.export(&problem, &args.out)?;

    let s = &result.summary;
    println!("users            {}", s.n_users);
    println!("users per drone  {}", s.users_per_bs);
    println!("initial fleet    {}", s.initial_fleet);
    println!("final fleet      {}", s.final_fleet);
    println!("iterations       {}", s.iterations);
    println!("final stage      {}", s.final_stage.name());
    println!("coverage         {:.2}%", s.coverage_percent);
    println!("harmonic SE      {:.4} bit/s/Hz", s.harmonic_se);
    println!("feasible         {}", s.feasible);
    println!("outputs          {}", files.summary.parent().unwrap_or(&args.out).display());
    Ok(s.feasible)
}

fn run_curve(args: &CurveArgs) -> anyhow::Result<()> {
    let cfg = load_config(args.config.as_deref())?;
    cfg.channel.validate()?;
    if !(args.h_step > 0.0 && args.h_min > 0.0 && args.h_max >= args.h_min) {
        bail!("need 0 < h-min <= h-max and h-step > 0");
    }
    let n = ((args.h_max - args.h_min) / args.h_step + 1e-9).floor() as usize + 1;
    let altitudes: Vec<f64> = (0..n).map(|i| args.h_min + i as f64 * args.h_step).collect();

    let mut out = String::from("r_m,h_m,pathloss_db\n");
    for &r in &args.distances {
        let curve = pathloss_vs_altitude(r, &altitudes, &cfg.channel)?;
        let (h_best, pl_best) = curve
            .iter()
            .copied()
            .fold((f64::NAN, f64::INFINITY), |best, p| if p.1 < best.1 { p } else { best });
        for (h, pl) in &curve {
            out.push_str(&format!("{r},{h},{pl}\n"));
        }
        println!("r={r} m: minimum {pl_best:.4} dB at h={h_best} m");
    }
    fs::write(&args.out, out).with_context(|| format!("writing {}", args.out.display()))?;
    Ok(())
}

fn run_generate(args: &GenerateArgs) -> anyhow::Result<()> {
    let cfg = load_config(args.config.as_deref())?;
    let scenario = build_scenario(&cfg, &args.scenario)?;
    save_scenario(&scenario, &args.out)?;
    println!("{} users in {} subareas -> {}", scenario.n_users(), scenario.subareas.len(), args.out.display());
    Ok(())
}

fn report(err: &anyhow::Error) -> ExitCode {
    eprintln!("error: {err:#}");
    match err.downcast_ref::<skycell::Error>() {
        Some(skycell::Error::InfeasibleRate { .. }) => ExitCode::from(EXIT_INFEASIBLE),
        _ => ExitCode::from(EXIT_FAILURE),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_FAILURE) } else { ExitCode::SUCCESS };
        }
    };
    let outcome = match &cli.command {
        Command::Plan(args) => run_plan(args).map(|feasible| {
            if feasible {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_INFEASIBLE)
            }
        }),
        Command::ChannelCurve(args) => run_curve(args).map(|()| ExitCode::SUCCESS),
        Command::Generate(args) => run_generate(args).map(|()| ExitCode::SUCCESS),
    };
    outcome.unwrap_or_else(|e| report(&e))
}
