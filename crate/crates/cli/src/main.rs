use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use simo_noma::simkernel::{self, StopRule, SweepSpec};
use simo_noma_cli::config::SweepRange;
use simo_noma_cli::run::{csv_string, RunOptions};
use simo_noma_cli::{parse_config, run_scenario};

#[derive(Parser)]
#[command(
    name = "noma",
    version,
    about = "Uplink SIMO-NOMA BER simulator and union bounds"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file.
    Simulate {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Skip Monte Carlo, emit bound columns only.
        #[arg(long)]
        bounds_only: bool,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Print a bound table as CSV.
    Bounds {
        #[arg(long)]
        m1: usize,
        #[arg(long)]
        m2: usize,
        #[arg(long = "l", default_value_t = 4)]
        antennas: usize,
        /// Sweep as START:STOP:STEP in dB.
        #[arg(long = "sigma1-db", value_parser = parse_range)]
        sigma1_db: SweepRange,
        #[arg(long, default_value_t = 0.125)]
        ratio: f64,
    },
}

fn parse_range(s: &str) -> Result<SweepRange, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [a, b, c] = parts.as_slice() else {
        return Err("expected START:STOP:STEP".into());
    };
    let num = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}"));
    let r = SweepRange {
        start: num(a)?,
        stop: num(b)?,
        step: num(c)?,
    };
    let finite = r.start.is_finite() && r.stop.is_finite() && r.step.is_finite();
    if !finite || r.step <= 0.0 || r.start > r.stop {
        return Err("need finite START <= STOP and STEP > 0".into());
    }
    Ok(r)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Simulate {
            config,
            seed,
            out,
            bounds_only,
            threads,
        } => {
            let text = match std::fs::read_to_string(&config) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("error: cannot read {}: {e}", config.display());
                    return ExitCode::from(3);
                }
            };
            let cfg = match parse_config(&text) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {}: {e}", config.display());
                    return ExitCode::from(2);
                }
            };
            let opts = RunOptions {
                out_dir: out,
                seed,
                bounds_only,
                threads,
            };
            match run_scenario(&cfg, &opts) {
                Ok(report) => {
                    for p in &report.written {
                        eprintln!("wrote {}", p.display());
                    }
                    eprintln!("wrote {}", report.manifest.display());
                    if report.low_confidence {
                        eprintln!("warning: some points stopped at the trial cap");
                    }
                    ExitCode::from(report.exit_code() as u8)
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(e.exit_code() as u8)
                }
            }
        }
        Command::Bounds {
            m1,
            m2,
            antennas,
            sigma1_db,
            ratio,
        } => {
            let spec = SweepSpec {
                sigma1_db_points: sigma1_db.points(),
                sigma_ratio: ratio,
                antennas,
                m1,
                m2,
                detectors: Vec::new(),
                stop: StopRule::default(),
                seed: 0,
            };
            match simkernel::run_sweep(&spec) {
                Ok(curve) => {
                    print!("{}", csv_string(&curve));
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(2)
                }
            }
        }
    }
}
