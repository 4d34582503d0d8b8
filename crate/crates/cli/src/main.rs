use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mmgame::experiment::{
    preset_configs, run_experiment, run_preset, verify, ExperimentConfig, Overrides, Report, Trajectory,
    PRESET_NAMES,
};

const EXIT_CONFIG: u8 = 1;
const EXIT_NUMERIC: u8 = 2;
const EXIT_VERIFY: u8 = 3;

/// Learning dynamics in multi-memory repeated games.
#[derive(Parser)]
#[command(name = "mmgame", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment from a config file.
    Run {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// CSV path; overrides `output.path`.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        t_max: Option<f64>,
    },
    /// Run a shipped figure preset: fig2, fig3, fig4 or figA1.
    Preset {
        name: String,
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory for the per-run CSV files.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        t_max: Option<f64>,
    },
    /// Run a verification suite: equivalence, stationary, nash or gradient.
    Verify {
        suite: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Defaults to 50, 100, 20 and 20 for the four suites.
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long, default_value_t = 3)]
        m_max: usize,
        #[arg(long, default_value_t = 2)]
        n_max: usize,
        #[arg(long, default_value_t = 0.01)]
        grid_step: f64,
        /// Also write the report to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn init_workers() {
    let Ok(raw) = std::env::var("MMGAME_WORKERS") else {
        return;
    };
    match raw.parse::<usize>() {
        Ok(n) if n > 0 => {
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                log::warn!("cannot size worker pool: {e}");
            }
        }
        _ => log::warn!("ignoring MMGAME_WORKERS={raw:?}: expected a positive integer"),
    }
}

fn write_trajectory(traj: &Trajectory, path: &Path) -> Result<(), u8> {
    traj.write(path).map_err(|e| {
        eprintln!("error: cannot write {}: {e}", path.display());
        EXIT_NUMERIC
    })?;
    println!("wrote {} ({} samples)", path.display(), traj.samples.len());
    Ok(())
}

fn partial_exit(name: &str, traj: &Trajectory) -> Result<(), u8> {
    if traj.is_complete() {
        return Ok(());
    }
    eprintln!("error: {name} stopped early: {:?}", traj.status);
    Err(EXIT_NUMERIC)
}

fn cmd_run(config: &Path, seed: Option<u64>, out: Option<PathBuf>, t_max: Option<f64>) -> Result<(), u8> {
    let mut cfg = ExperimentConfig::from_file(config).map_err(|e| {
        eprintln!("config error: {e}");
        EXIT_CONFIG
    })?;
    Overrides { seed, t_max }.apply(&mut cfg);
    let path = out.or_else(|| cfg.output.clone()).unwrap_or_else(|| {
        let stem = config.file_stem().unwrap_or_default().to_string_lossy();
        PathBuf::from(format!("{stem}.csv"))
    });
    let traj = run_experiment(&cfg).map_err(|e| {
        eprintln!("numerical failure: {e}");
        EXIT_NUMERIC
    })?;
    write_trajectory(&traj, &path)?;
    partial_exit("run", &traj)
}

fn cmd_preset(name: &str, seed: Option<u64>, out: &Path, t_max: Option<f64>) -> Result<(), u8> {
    let configs = preset_configs(name, &Overrides { seed, t_max }).map_err(|e| {
        eprintln!("config error: {e}");
        EXIT_CONFIG
    })?;
    let outcome = run_preset(name, configs).map_err(|e| {
        eprintln!("numerical failure: {e}");
        EXIT_NUMERIC
    })?;
    for run in &outcome.runs {
        write_trajectory(&run.trajectory, &out.join(format!("{}.csv", run.name)))?;
    }
    for line in &outcome.summary {
        println!("{line}");
    }
    for run in &outcome.runs {
        partial_exit(&run.name, &run.trajectory)?;
    }
    Ok(())
}

fn cmd_verify(
    suite: &str,
    seed: u64,
    trials: Option<usize>,
    m_max: usize,
    n_max: usize,
    grid_step: f64,
    out: Option<PathBuf>,
) -> Result<(), u8> {
    let config_error = |msg: String| {
        eprintln!("config error: {msg}");
        EXIT_CONFIG
    };
    let report: Report = match suite {
        "equivalence" => {
            if !(1..=3).contains(&m_max) || !(1..=2).contains(&n_max) {
                return Err(config_error(format!("need m_max <= 3 and n_max <= 2, got {m_max} and {n_max}")));
            }
            verify::verify_equivalence(trials.unwrap_or(50), m_max, n_max, seed)
        }
        "stationary" => verify::verify_stationary(trials.unwrap_or(100), seed),
        "nash" => {
            if !(grid_step > 0.0 && grid_step < 0.5) {
                return Err(config_error(format!("grid step must lie in (0, 0.5), got {grid_step}")));
            }
            verify::verify_nash(trials.unwrap_or(20), grid_step, seed)
        }
        "gradient" => verify::verify_gradient(trials.unwrap_or(20), seed),
        other => {
            return Err(config_error(format!(
                "unknown suite `{other}` (expected one of {})",
                verify::SUITES.join(", ")
            )))
        }
    };
    print!("{report}");
    if let Some(path) = out {
        std::fs::write(&path, report.to_string()).map_err(|e| {
            eprintln!("error: cannot write {}: {e}", path.display());
            EXIT_NUMERIC
        })?;
    }
    if report.passed() {
        Ok(())
    } else {
        Err(EXIT_VERIFY)
    }
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    init_workers();
    let result = match cli.command {
        Command::Run { config, seed, out, t_max } => cmd_run(&config, seed, out, t_max),
        Command::Preset { name, seed, out, t_max } => {
            if !PRESET_NAMES.contains(&name.as_str()) {
                eprintln!("config error: unknown preset `{name}` (expected one of {})", PRESET_NAMES.join(", "));
                return ExitCode::from(EXIT_CONFIG);
            }
            cmd_preset(&name, seed, &out, t_max)
        }
        Command::Verify {
            suite,
            seed,
            trials,
            m_max,
            n_max,
            grid_step,
            out,
        } => cmd_verify(&suite, seed, trials, m_max, n_max, grid_step, out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(code) => ExitCode::from(code),
    }
}
