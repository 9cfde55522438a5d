use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use soft_augment::experiment::{
    cmd_compare, cmd_curve, cmd_occlusion, cmd_sampler_stats, cmd_train, exit_code, sampler_from_parts,
};
use soft_augment::Result;

#[derive(Parser)]
#[command(name = "softaug", about = "Soft augmentation experiments at desk scale")]
struct Cli {
    /// Overrides the run seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (train) or file directory for CSV output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model from a config file.
    Train {
        #[arg(long)]
        config: PathBuf,
    },
    /// Softening curves p(v) for a list of k.
    Curve {
        #[arg(long, value_delimiter = ',', default_values_t = vec![0.0, 1.0, 2.0, 4.0])]
        k: Vec<f64>,
        #[arg(long, default_value_t = 0.01)]
        p_min: f64,
        #[arg(long, default_value_t = 101)]
        resolution: usize,
    },
    /// Top-1 error of a checkpoint under random square occlusion.
    Occlusion {
        #[arg(long)]
        checkpoint: PathBuf,
        /// Config whose dataset section supplies the test split.
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_delimiter = ',', default_values_t = vec![0.0, 0.2, 0.4, 0.6, 0.8])]
        lambdas: Vec<f64>,
        #[arg(long, default_value_t = 1)]
        trials: usize,
    },
    /// Monte-Carlo summary of a crop sampler.
    SamplerStats {
        /// identity, uniform, gaussian, resize_crop or standard_resize_crop.
        #[arg(long)]
        sampler: String,
        #[arg(long)]
        sigma: Option<f64>,
        #[arg(long)]
        range: Option<u32>,
        #[arg(long)]
        l_min: Option<usize>,
        #[arg(long, default_value_t = 32)]
        size: usize,
        #[arg(long, default_value_t = 100_000)]
        draws: usize,
    },
    /// Train two configs over several seeds and report paired deltas.
    Compare {
        #[arg(long)]
        config_a: PathBuf,
        #[arg(long)]
        config_b: PathBuf,
        #[arg(long, default_value_t = 3)]
        seeds: usize,
    },
}

fn emit(out: Option<&Path>, name: &str, csv: &str) -> Result<()> {
    match out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            fs::write(dir.join(name), csv)?;
        }
        None => print!("{csv}"),
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let out = cli.out.as_deref();
    match cli.command {
        Command::Train { config } => {
            let art = cmd_train(&config, out, cli.seed)?;
            println!(
                "wrote {} (top1_error={:.4}, ece={:.4})",
                art.dir.display(),
                art.top1_error,
                art.ece
            );
        }
        Command::Curve { k, p_min, resolution } => {
            emit(out, "curve.csv", &cmd_curve(&k, p_min, resolution)?)?
        }
        Command::Occlusion {
            checkpoint,
            config,
            lambdas,
            trials,
        } => {
            let csv = cmd_occlusion(&checkpoint, &config, &lambdas, trials, cli.seed.unwrap_or(0))?;
            emit(out, "occlusion.csv", &csv)?;
        }
        Command::SamplerStats {
            sampler,
            sigma,
            range,
            l_min,
            size,
            draws,
        } => {
            let s = sampler_from_parts(&sampler, sigma, range, l_min, None)?;
            emit(
                out,
                "sampler_stats.csv",
                &cmd_sampler_stats(&s, size, draws, cli.seed.unwrap_or(0))?,
            )?;
        }
        Command::Compare {
            config_a,
            config_b,
            seeds,
        } => {
            emit(
                out,
                "compare.csv",
                &cmd_compare(&config_a, &config_b, seeds, cli.seed)?,
            )?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
