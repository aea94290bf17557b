use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pem_plate::config::RunConfig;
use pem_plate::{pipeline, Error};

/// Finite element analysis of plates with a distributed piezoelectric network.
#[derive(Parser)]
#[command(name = "pem-plate", version)]
struct Cli {
    /// Run config file, or a preset name (paper-square, clamped-demo).
    #[arg(long, global = true, default_value = "paper-square")]
    config: String,
    /// Output directory; overrides PEM_PLATE_OUT and the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for assembly and resistance sweeps.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Uncoupled mechanical and electric eigenfrequencies.
    Modes,
    /// Tune the net inductance onto a mechanical mode.
    Tune,
    /// Integrate the reduced model from the configured initial condition.
    Simulate,
    /// Search the net resistance maximizing mechanical damping.
    OptimizeR,
    /// Electric/mechanical modal coupling table.
    Coupling,
    /// Patch test of the plate element on an irregular patch.
    PatchTest {
        /// Run with a deliberately corrupted element (must fail).
        #[arg(long, hide = true)]
        corrupt: bool,
    },
    /// All of the above, with a summary and a manifest.
    Pipeline,
}

fn run(cli: Cli) -> Result<(String, bool), Error> {
    if let Some(k) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| Error::invalid(format!("--threads: {e}")))?;
    }
    if let Command::PatchTest { corrupt } = cli.command {
        let (report, text) = pipeline::cmd_patch_test(corrupt)?;
        return Ok((text, report.passed));
    }
    let cfg = RunConfig::load(&cli.config).map_err(|e| e.in_stage("config"))?;
    let out = cfg.resolve_output(cli.out.as_deref());
    let text = match cli.command {
        Command::Modes => pipeline::cmd_modes(&cfg, &out)?,
        Command::Tune => pipeline::cmd_tune(&cfg, &out)?,
        Command::Simulate => pipeline::cmd_simulate(&cfg, &out)?,
        Command::OptimizeR => pipeline::cmd_optimize_r(&cfg, &out)?,
        Command::Coupling => pipeline::cmd_coupling(&cfg, &out)?,
        Command::Pipeline => pipeline::cmd_pipeline(&cfg, &out)?,
        Command::PatchTest { .. } => unreachable!(),
    };
    Ok((text, true))
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok((text, passed)) => {
            print!("{text}");
            if passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
