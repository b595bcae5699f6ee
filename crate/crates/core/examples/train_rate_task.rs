//! Trains a 10-16-2 network with BPTT on the two-class rate task, then again
//! with a lower-activity regulariser, and compares hidden activity.
//!
//!     cargo run --release --example train_rate_task

use spikegrad::bptt::{evaluate, train_bptt, Network, OptimizerKind, TrainConfig};
use spikegrad::harness::gen_rate_task;
use spikegrad::neuron::LifParams;
use spikegrad::objectives::RegularizerSpec;
use spikegrad::rng::seeded;

fn run(reg: RegularizerSpec) -> spikegrad::Result<()> {
    let train = gen_rate_task(1, 10, 25, 0.2, 0.8, 40)?;
    let test = gen_rate_task(2, 10, 25, 0.2, 0.8, 40)?;
    let mut net = Network::init(&[10, 16, 2], &LifParams::default(), false, &mut seeded(7))?;
    let cfg = TrainConfig {
        reg: reg.clone(),
        optimizer: OptimizerKind::adam(1e-2),
        epochs: 15,
        ..Default::default()
    };
    for s in train_bptt(&mut net, &train, &cfg)? {
        println!(
            "  epoch {:>2}  loss {:.4}  acc {:.3}  spikes {}",
            s.epoch, s.loss, s.accuracy, s.total_spikes
        );
    }
    let e = evaluate(&net, &test, &cfg.objective, &RegularizerSpec::default())?;
    println!(
        "  held-out accuracy {:.3}, quietest hidden neuron fires {:.2} times per sample",
        e.accuracy,
        e.min_hidden_count().unwrap_or(0.0)
    );
    Ok(())
}

fn main() -> spikegrad::Result<()> {
    println!("plain cross-entropy on spike counts:");
    run(RegularizerSpec::default())?;
    println!("\nwith a lower-activity penalty (theta_L = 2):");
    run(RegularizerSpec {
        lambda_lower: 0.05,
        theta_lower: 2.0,
        ..Default::default()
    })
}
