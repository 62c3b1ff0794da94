//! `melif`: command-line front end for the ME neuron experiments.

use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use melif_core::harness::{self, ExperimentConfig};

#[derive(Parser, Debug)]
#[command(name = "melif", version, about = "Magneto-electric LIF neuron experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Switching probability versus ME voltage, plus a hazard table for the network.
    SwitchProb(Common),
    /// Single-neuron membrane and output trace under a scripted input.
    NeuronTrace(Common),
    /// Train the spiking network on MNIST.
    Train(Common),
    /// Evaluate trained weights on the MNIST test set.
    Evaluate(Common),
    /// Energy per neuron per training image.
    Energy(Common),
    /// Accuracy versus number of excitatory neurons.
    SweepNeurons(Common),
    /// Print the effective configuration as TOML.
    ShowConfig(Common),
}

/// Flags shared by every command; they override values from the config file.
#[derive(Args, Debug, Clone, Default)]
struct Common {
    /// TOML configuration file.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Seed for every random stream.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Monte Carlo trials per sweep point.
    #[arg(long, value_name = "N")]
    trials: Option<usize>,
    /// Number of excitatory neurons.
    #[arg(long, value_name = "N")]
    neurons: Option<usize>,
}

impl Common {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut c = match &self.config {
            Some(p) => ExperimentConfig::load(p).with_context(|| format!("loading {}", p.display()))?,
            None => ExperimentConfig::default(),
        };
        if let Some(s) = self.seed {
            c.seed = s;
        }
        if let Some(o) = &self.out {
            c.out_dir = o.clone();
        }
        if let Some(t) = self.trials {
            c.sweep.trials = t;
        }
        if let Some(n) = self.neurons {
            c.snn.n_excitatory = n;
        }
        let c = c.with_seed_propagated();
        c.validate()?;
        Ok(c)
    }
}

fn require_mnist(c: &ExperimentConfig) -> Result<()> {
    let dir = c.mnist_dir();
    if !dir.exists() {
        anyhow::bail!("{} (looked in {})", harness::mnist::DOWNLOAD_HINT, dir.0.display());
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::SwitchProb(a) => {
            let c = a.resolve()?;
            let o = harness::run_switch_prob(&c)?;
            println!("V* = {:.6} V{}", o.artifact.v_star, if o.cached { " (cached sweep)" } else { "" });
            for p in &o.artifact.points {
                println!("{:.6} V  p = {:.4} +- {:.4}", p.voltage, p.probability, p.stderr);
            }
        }
        Command::NeuronTrace(a) => {
            let c = a.resolve()?;
            let o = harness::run_neuron_trace(&c)?;
            println!("{} steps, {} output spikes, energy {:.3e} J", o.steps, o.output_spikes, o.energy.total());
        }
        Command::Train(a) => {
            let c = a.resolve()?;
            require_mnist(&c)?;
            let o = harness::run_train(&c)?;
            let e = o.report.epochs.last().cloned().unwrap_or_default();
            println!(
                "trained {} epochs, {:.1} post spikes/image, receptive-field match {:.2}",
                o.report.epochs.len(),
                e.mean_post_spikes(),
                o.receptive_field_match
            );
        }
        Command::Evaluate(a) => {
            let c = a.resolve()?;
            harness::load_weights(&c.out_dir)?;
            require_mnist(&c)?;
            let r = harness::run_evaluate(&c)?;
            println!("accuracy {:.4} ({} / {}), no prediction {}", r.accuracy, r.correct, r.n_images, r.no_prediction);
        }
        Command::Energy(a) => {
            let c = a.resolve()?;
            require_mnist(&c)?;
            let s = harness::run_energy(&c)?;
            let e = s.per_neuron_per_image;
            println!(
                "per neuron per image: charge {:.3e} J, read {:.3e} J, reset {:.3e} J",
                e.charge_energy, e.read_energy, e.reset_energy
            );
        }
        Command::SweepNeurons(a) => {
            let c = a.resolve()?;
            require_mnist(&c)?;
            for r in harness::run_sweep_neurons(&c)? {
                println!("{:>4} neurons: accuracy {:.4}", r.n_excitatory, r.accuracy);
            }
        }
        Command::ShowConfig(a) => print!("{}", a.resolve()?.to_toml_string()?),
    }
    Ok(())
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
