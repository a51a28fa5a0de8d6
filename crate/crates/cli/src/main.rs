use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fofscope::pipeline::{run_pipeline, synthesize, PipelineConfig, SynthesisConfig};
use fofscope::spectra::{read_dsf, write_dsf};
use fofscope::Error;

#[derive(Parser)]
#[command(name = "fofscope", about = "Friends-of-friends transient search over dynamic spectra")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the search described by a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Write a synthetic noise-plus-pulses DSF file.
    Inject {
        #[arg(long)]
        config: PathBuf,
    },
    /// Print the header of a DSF file.
    Inspect { dsf: PathBuf },
    /// Print the version.
    Version,
}

fn run(command: Command) -> Result<(), Error> {
    match command {
        Command::Run { config } => {
            let cfg = PipelineConfig::from_file(&config)?;
            let summary = run_pipeline(&cfg)?;
            println!(
                "searched {}x{} grid in {} chunk(s): {} candidate(s) -> {}",
                summary.n_time,
                summary.n_freq,
                summary.n_chunks,
                summary.n_candidates,
                summary.candidates_path.display()
            );
            for p in &summary.plot_paths {
                println!("plot {}", p.display());
            }
        }
        Command::Inject { config } => {
            let cfg = SynthesisConfig::from_file(&config)?;
            let spectrum = synthesize(&cfg)?;
            write_dsf(&spectrum, &cfg.output_path)?;
            println!(
                "wrote {}x{} grid with {} pulse(s) to {}",
                spectrum.n_time(),
                spectrum.n_freq(),
                cfg.pulses.len(),
                cfg.output_path.display()
            );
        }
        Command::Inspect { dsf } => {
            let s = read_dsf(&dsf)?;
            println!("n_time\t{}", s.n_time());
            println!("n_freq\t{}", s.n_freq());
            println!("dt_s\t{}", s.dt_s());
            println!("f0_mhz\t{}", s.f0_mhz());
            println!("df_mhz\t{}", s.df_mhz());
            println!("f_max_mhz\t{}", s.f_max_mhz());
            println!("duration_s\t{}", s.n_time() as f64 * s.dt_s());
        }
        Command::Version => println!("fofscope {}", env!("CARGO_PKG_VERSION")),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fofscope: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
