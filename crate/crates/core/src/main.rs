use clap::{Parser, Subcommand};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use thermocut::harness::{
    report, run_matrix, run_trial, CellSummary, MatrixResult, ScenarioFile, SuiteFile, TrialConfig,
};
use thermocut::Error;

/// Output directory used when neither `--out` nor the environment sets one.
const DEFAULT_OUT: &str = "out";
const OUT_ENV: &str = "THERMOCUT_OUT";

#[derive(Parser)]
#[command(name = "thermocut", version, about = "Simulated thermography-guided electrosurgical cutting trials")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the scenario's seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Dump every n-th frame as a 16-bit PGM under `<out>/frames`.
        #[arg(long, value_name = "N")]
        dump_frames: Option<usize>,
    },
    /// Run a controllers x phantoms x repetitions suite.
    Matrix {
        #[arg(long)]
        suite: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Summarise a finished run directory.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
        /// Also write velocity/deflection/width plots as SVG.
        #[arg(long)]
        svg: bool,
    },
}

fn out_dir(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) => 2,
        Error::Io(_) => 3,
        _ => 1,
    }
}

fn run(config: &Path, seed: Option<u64>, out: &Path, dump: Option<usize>) -> thermocut::Result<()> {
    let (scenario, cal) = ScenarioFile::load(config)?;
    let seed = seed.unwrap_or(scenario.seed);
    let mut cfg = TrialConfig::new(&cal, scenario.controller, scenario.phantom, seed)?;
    if let Some(len) = scenario.cut_length {
        cfg.cut_length = len;
        cfg.validate()?;
    }
    if let Some(every) = dump {
        let dir = out.join("frames");
        std::fs::create_dir_all(&dir)?;
        cfg.frame_dump = Some((dir, every));
    }
    let result = run_trial(&cfg)?;
    let cell = CellSummary::from_results(scenario.controller, scenario.phantom, std::slice::from_ref(&result))?;
    println!(
        "{}: {} at {:.1} mm, peak deflection {:.2} mm, mean width {:.2} mm",
        result.label,
        if result.success { "completed" } else { "failed" },
        result.traces.last().map_or(0.0, |r| r.position * 1e3),
        result.peak_deflection() * 1e3,
        result.mean_of(|r| r.width) * 1e3,
    );
    MatrixResult {
        cells: vec![cell],
        trials: vec![result],
    }
    .write(out)
}

fn matrix(suite: &Path, out: &Path) -> thermocut::Result<()> {
    let (suite, cal) = SuiteFile::load(suite)?;
    let result = run_matrix(&suite, &cal)?;
    result.write(out)?;
    print!("{}", report(out, false)?.table);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run {
            config,
            seed,
            out,
            dump_frames,
        } => run(&config, seed, &out_dir(out), dump_frames),
        Command::Matrix { suite, out } => matrix(&suite, &out_dir(out)),
        Command::Report { input, svg } => report(&input, svg).map(|r| print!("{}", r.table)),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
