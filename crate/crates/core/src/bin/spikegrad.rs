use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use spikegrad::codec::{ClampMode, Polarity};
use spikegrad::harness::gradcheck::{run_suite, Suite};
use spikegrad::harness::run::{self, EncodeOptions, Scheme};
use spikegrad::harness::RunConfig;

#[derive(Parser)]
#[command(name = "spikegrad", version, about = "Train and inspect spiking neural networks")]
struct Cli {
    /// Worker threads for sample-parallel training; results do not depend on it.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured trainer; writes history.csv, checkpoint.txt and config.resolved.
    Train {
        #[arg(long)]
        config: PathBuf,
    },
    /// Score a checkpoint on the configured task; writes eval.csv and eval_counts.csv.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        config: PathBuf,
    },
    /// Convert a feature CSV into an event file.
    Encode {
        #[arg(long, value_enum)]
        scheme: SchemeArg,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long = "out")]
        output: PathBuf,
        /// Raster length for rate and latency coding.
        #[arg(long, default_value_t = 100)]
        t_steps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Latency RC time constant, in steps.
        #[arg(long, default_value_t = 5.0)]
        tau: f64,
        /// Latency firing threshold.
        #[arg(long, default_value_t = 0.2)]
        theta: f64,
        #[arg(long, value_enum, default_value_t = ClampArg::NoSpike)]
        clamp: ClampArg,
        /// Delta-coding change threshold.
        #[arg(long, default_value_t = 0.1)]
        threshold: f64,
        #[arg(long, value_enum, default_value_t = PolarityArg::Positive)]
        polarity: PolarityArg,
    },
    /// Run a gradient verification suite; exit status 0 iff every case passes.
    Gradcheck {
        #[arg(long)]
        suite: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Measure the STDP window for the configured rule; writes stdp_curve.csv.
    StdpDemo {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeArg {
    Rate,
    Latency,
    Delta,
}

#[derive(Clone, Copy, ValueEnum)]
enum ClampArg {
    NoSpike,
    ForceLast,
}

#[derive(Clone, Copy, ValueEnum)]
enum PolarityArg {
    Positive,
    Bipolar,
}

fn run(cli: Cli) -> spikegrad::Result<bool> {
    match cli.command {
        Command::Train { config } => {
            let cfg = RunConfig::load(&config)?;
            let out = run::train_command(&cfg, cli.threads)?;
            if let Some(last) = out.history.last() {
                println!(
                    "{} epochs, final loss {:.6}, accuracy {:.4}, spikes {}",
                    out.history.len(),
                    last.loss,
                    last.accuracy,
                    last.total_spikes
                );
            }
            println!("wrote {}", out.history_path.display());
            println!("wrote {}", out.checkpoint_path.display());
            println!("wrote {}", out.config_path.display());
        }
        Command::Eval { checkpoint, config } => {
            let cfg = RunConfig::load(&config)?;
            let (report, path) = run::eval_command(&cfg, &checkpoint)?;
            println!("accuracy {:.4}", report.accuracy);
            println!("loss {:.6}", report.loss);
            for (l, counts) in report.mean_counts.iter().enumerate() {
                let shown: Vec<String> = counts.iter().map(|c| format!("{c:.3}")).collect();
                println!("layer {l} mean spikes: {}", shown.join(" "));
            }
            println!("wrote {}", path.display());
        }
        Command::Encode {
            scheme,
            input,
            output,
            t_steps,
            seed,
            tau,
            theta,
            clamp,
            threshold,
            polarity,
        } => {
            let opts = EncodeOptions {
                scheme: match scheme {
                    SchemeArg::Rate => Scheme::Rate,
                    SchemeArg::Latency => Scheme::Latency,
                    SchemeArg::Delta => Scheme::Delta,
                },
                t_steps,
                seed,
                tau,
                theta,
                clamp: match clamp {
                    ClampArg::NoSpike => ClampMode::NoSpike,
                    ClampArg::ForceLast => ClampMode::ForceLast,
                },
                threshold,
                polarity: match polarity {
                    PolarityArg::Positive => Polarity::PositiveOnly,
                    PolarityArg::Bipolar => Polarity::Bipolar,
                },
            };
            let r = run::encode_command(&input, &output, &opts)?;
            println!("{} spikes over {} steps x {} channels -> {}", r.total(), r.t_steps(), r.n(), output.display());
        }
        Command::Gradcheck { suite, seed } => {
            let suite = Suite::parse(&suite).ok_or_else(|| {
                spikegrad::Error::Argument(format!(
                    "--suite: unknown suite {suite:?}; expected relaxed-fd, rtrl-vs-bptt, spikeprop-fd or beta-power"
                ))
            })?;
            let cases = run_suite(suite, seed)?;
            let mut ok = true;
            for c in &cases {
                ok &= c.passed();
                println!(
                    "{:<4} {:<28} max_rel_err {:.3e} (tol {:.0e})",
                    if c.passed() { "ok" } else { "FAIL" },
                    c.name,
                    c.max_rel_err,
                    c.tol
                );
            }
            let worst = cases.iter().map(|c| c.max_rel_err).fold(0.0, f64::max);
            println!("{}: {} cases, worst {worst:.3e}", suite.name(), cases.len());
            return Ok(ok);
        }
        Command::StdpDemo { config } => {
            let cfg = RunConfig::load(&config)?;
            let path = run::stdp_demo_command(&cfg)?;
            println!("wrote {}", path.display());
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
