use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use evfeeder_core::load::{consumers, sample_fleet, serialize_fleet, FleetDistribution};
use evfeeder_core::metrics::Comparison;
use evfeeder_core::scenario::{
    simulate_scenario, simulate_sweep, validate, write_run, write_sweep, FleetSourceConfig, RunManifest,
    ScenarioConfig, StrategyConfig, ORACLE_TOLERANCE_PU,
};
use evfeeder_core::time::TimeSlot;

#[derive(Parser)]
#[command(name = "evfeeder", version, about = "EV charging strategies on an unbalanced four-wire LV feeder")]
struct Cli {
    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one charging strategy over a day.
    Run {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// baseline, uncontrolled, timer, zoned or semismart.
        #[arg(long, default_value = "semismart")]
        strategy: String,
        #[arg(long, default_value = "out/run")]
        out: PathBuf,
    },
    /// Simulate all five strategies on the same household draws and compare them.
    Sweep {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, default_value = "out/sweep")]
        out: PathBuf,
    },
    /// Cross-check the sweep solver against the direct nodal solver at the
    /// valley, shoulder and peak of the base curve.
    Validate {
        #[command(flatten)]
        scenario: ScenarioArgs,
    },
    /// Draw a random fleet and print it in the fleet file format.
    Sample {
        #[arg(long, value_name = "PATH")]
        feeder: Option<PathBuf>,
        #[arg(long, value_name = "F", default_value_t = 0.6)]
        penetration: f64,
        #[arg(long, value_name = "N", default_value_t = 1)]
        seed: u64,
        #[arg(long, value_name = "W", default_value_t = evfeeder_core::load::DEFAULT_CHARGE_POWER_W)]
        charge_power: f64,
        /// Write `fleet.txt` into this directory instead of printing.
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct ScenarioArgs {
    /// Feeder file; the shipped 19-bus feeder by default.
    #[arg(long, value_name = "PATH")]
    feeder: Option<PathBuf>,
    /// 96-value base load curve; the shipped residential curve by default.
    #[arg(long, value_name = "PATH")]
    curve: Option<PathBuf>,
    /// Fixed fleet file; the shipped 34-vehicle fleet by default.
    #[arg(long, value_name = "PATH", conflicts_with = "penetration")]
    fleet: Option<PathBuf>,
    /// Sample a fleet per trial with this share of consumers owning an EV.
    #[arg(long, value_name = "F")]
    penetration: Option<f64>,
    #[arg(long, value_name = "N", default_value_t = 1)]
    seed: u64,
    /// Start time of the global timer.
    #[arg(long, value_name = "HH:MM", default_value = "24:00", value_parser = parse_time)]
    timer_start: TimeSlot,
    /// Zone plan file; the shipped three-zone plan by default.
    #[arg(long, value_name = "PATH")]
    zones: Option<PathBuf>,
    #[arg(long, value_name = "N", default_value_t = 1)]
    trials: usize,
    /// Convergence tolerance in volts (default 1e-6 x v_base).
    #[arg(long, value_name = "V")]
    tolerance: Option<f64>,
    #[arg(long = "max-iter", value_name = "N", default_value_t = 100)]
    max_iter: usize,
}

fn parse_time(s: &str) -> std::result::Result<TimeSlot, String> {
    TimeSlot::parse(s).ok_or_else(|| format!("'{s}' is not a quarter-hour HH:MM time"))
}

impl ScenarioArgs {
    fn config(&self, strategy: &str, out: Option<&Path>) -> ScenarioConfig {
        let fleet = match (&self.fleet, self.penetration) {
            (Some(path), _) => FleetSourceConfig::File { path: path.clone() },
            (None, Some(penetration)) => FleetSourceConfig::Sampled { penetration },
            (None, None) => FleetSourceConfig::Shipped,
        };
        ScenarioConfig {
            feeder: self.feeder.clone(),
            curve: self.curve.clone(),
            fleet,
            strategy: StrategyConfig {
                name: strategy.to_string(),
                timer_start: self.timer_start,
                zones: self.zones.clone(),
            },
            seed: self.seed,
            trials: self.trials,
            tolerance: self.tolerance,
            max_iterations: self.max_iter,
            out: out.map(Path::to_path_buf),
            ..ScenarioConfig::default()
        }
    }
}

fn print_comparison(cmp: &Comparison) {
    println!(
        "{:<16} {:>12} {:>10} {:>10} {:>10} {:>10}",
        "scenario",
        "loss kWh",
        format!("vs {}", &cmp.baseline[..1]),
        "Vmin pu",
        "dVmin pp",
        "Vn max pu"
    );
    for r in &cmp.rows {
        println!(
            "{:<16} {:>12.3} {:>9.2}% {:>10.4} {:>10.2} {:>10.4}",
            r.scenario, r.total_loss_kwh, r.loss_change_pct, r.min_voltage_pu, r.min_voltage_change_pp, r.max_neutral_pu
        );
    }
}

fn run(scenario: &ScenarioArgs, strategy: &str, out: &Path) -> Result<()> {
    let started = Instant::now();
    let config = scenario.config(strategy, Some(out));
    let inputs = config.load_inputs()?;
    let strategy = config.strategy.resolve()?;
    let run = simulate_scenario(&inputs, &strategy, config.seed, config.trials)?;
    let mut manifest = RunManifest::new("run", &config);
    manifest.elapsed_s = started.elapsed().as_secs_f64();
    write_run(out, &run, &inputs.topology, Some(&manifest))?;

    let stats = &run.stats;
    println!("{} ({} trial(s), seed {})", run.label(), stats.trials, config.seed);
    println!("  energy losses   {:.3} kWh (sd {:.3})", stats.total_loss_kwh.mean, stats.total_loss_kwh.sd);
    println!("  min voltage     {:.4} pu (sd {:.4})", stats.min_voltage_pu.mean, stats.min_voltage_pu.sd);
    println!("  max neutral     {:.4} pu", stats.max_neutral_pu.max);
    let worst = &run.trials[0].report.summary.worst;
    println!(
        "  worst bus       {} phase {} at {}",
        worst.overall.bus,
        worst.overall_phase,
        TimeSlot::new(worst.overall.slot as i64)
    );
    println!("wrote {}", out.display());
    Ok(())
}

fn sweep(scenario: &ScenarioArgs, out: &Path) -> Result<()> {
    let started = Instant::now();
    let config = scenario.config("semismart", Some(out));
    let inputs = config.load_inputs()?;
    let plan = config.strategy.zone_plan()?;
    let sweep = simulate_sweep(&inputs, config.strategy.timer_start, plan, config.seed, config.trials)?;
    let mut manifest = RunManifest::new("sweep", &config);
    manifest.elapsed_s = started.elapsed().as_secs_f64();
    write_sweep(out, &sweep, &inputs.topology, Some(&manifest))?;
    print_comparison(&sweep.comparison);
    println!("wrote {}", out.display());
    Ok(())
}

fn check(scenario: &ScenarioArgs) -> Result<bool> {
    let config = scenario.config("baseline", None);
    let inputs = config.load_inputs()?;
    let report = validate(&inputs, config.seed)?;
    println!(
        "{:<9} {:>5} {:>6} {:>6} {:>12} {:>12} {:>12} {:>12}",
        "snapshot", "slot", "sweep", "direct", "oracle pu", "KCL/I_base", "balance", "PQ gap VA"
    );
    for c in &report.checks {
        println!(
            "{:<9} {:>5} {:>6} {:>6} {:>12.3e} {:>12.3e} {:>12.3e} {:>12.3e}",
            c.label,
            TimeSlot::new(c.slot as i64).to_string(),
            c.sweep_iterations,
            c.direct_iterations,
            c.oracle_diff_pu,
            c.kcl_residual_pu,
            c.balance_error,
            c.load_power_mismatch_va
        );
    }
    if report.passed {
        println!("ok: solvers agree within {ORACLE_TOLERANCE_PU:e} pu");
    } else {
        println!("FAILED: solvers disagree or did not converge");
    }
    Ok(report.passed)
}

fn sample(
    feeder: Option<&Path>,
    penetration: f64,
    seed: u64,
    charge_power: f64,
    out: Option<&Path>,
) -> Result<()> {
    let topology = match feeder {
        Some(path) => evfeeder_core::grid::load_topology(path)?,
        None => evfeeder_core::data::feeder_19(),
    };
    let fleet = sample_fleet(
        &consumers(&topology),
        penetration,
        &FleetDistribution::default(),
        charge_power,
        seed,
    )?;
    let text = format!(
        "# sampled fleet: penetration {penetration}, seed {seed}\n{}",
        serialize_fleet(&fleet)
    );
    match out {
        Some(dir) => {
            std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            let path = dir.join("fleet.txt");
            std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
            println!("wrote {} vehicles to {}", fleet.len(), path.display());
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let result = match &cli.command {
        Command::Run {
            scenario,
            strategy,
            out,
        } => run(scenario, strategy, out),
        Command::Sweep { scenario, out } => sweep(scenario, out),
        Command::Validate { scenario } => match check(scenario) {
            Ok(true) => Ok(()),
            Ok(false) => return ExitCode::from(1),
            Err(e) => Err(e),
        },
        Command::Sample {
            feeder,
            penetration,
            seed,
            charge_power,
            out,
        } => sample(feeder.as_deref(), *penetration, *seed, *charge_power, out.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
