use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use proxcg_bench::config::{Overrides, RunConfig};
use proxcg_bench::{cmd_selftest, compare, run, BenchError};

#[derive(Parser)]
#[command(name = "proxcg", about = "Run and compare proximal solvers on benchmark problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the configured problem with every listed solver and write CSVs.
    Run {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        max_iters: Option<usize>,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Iterations and time to reach fixed fractions of the best objective gap.
    Compare { dir: PathBuf },
    /// Fast property checks of oracles, proxes and spectral estimates.
    Selftest,
}

fn run(command: Command) -> Result<ExitCode, BenchError> {
    match command {
        Command::Run { config, seed, out, max_iters, tol } => {
            let mut cfg = RunConfig::load(&config)?;
            cfg.apply(&Overrides { seed, out, max_iters, tol })?;
            for o in run::cmd_run(&cfg)? {
                let r = &o.result;
                let mut line = format!(
                    "{:<4} {:<10} iters={:<5} f={:.10e} hvps={}",
                    o.kind.name(),
                    r.termination.to_string(),
                    r.iterations(),
                    r.final_f(),
                    r.stats.hvp_count
                );
                if let Some(p) = o.psnr {
                    line += &format!(" psnr={p:.2}dB");
                }
                println!("{line}");
            }
            println!("wrote {}", cfg.out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Compare { dir } => {
            print!("{}", compare::cmd_compare(&dir)?);
            Ok(ExitCode::SUCCESS)
        }
        Command::Selftest => {
            let ok = cmd_selftest(&mut std::io::stdout()).map_err(|e| BenchError::Io(e.to_string()))?;
            Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
