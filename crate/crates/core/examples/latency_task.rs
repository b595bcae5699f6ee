//! Four classes that differ only in which input fires first. The network is
//! trained on output first-spike times (cross-entropy over negated times),
//! and predictions are read off the earliest output spike.
//!
//!     cargo run --release --example latency_task

use spikegrad::bptt::{train_bptt, Network, OptimizerKind, TrainConfig};
use spikegrad::harness::{gen_latency_task, LatencyTaskParams};
use spikegrad::neuron::LifParams;
use spikegrad::objectives::{Inversion, ObjectiveSpec};
use spikegrad::rng::seeded;

fn main() -> spikegrad::Result<()> {
    let (data, patterns) = gen_latency_task(&LatencyTaskParams {
        seed: 42,
        n_inputs: 8,
        t_steps: 30,
        n_classes: 4,
        samples_per_class: 25,
        jitter: 1,
    })?;
    for (c, order) in patterns.orders.iter().enumerate() {
        println!("class {c}: inputs fire in order {order:?}");
    }
    let mut net = Network::init(&[8, 32, 4], &LifParams::default(), false, &mut seeded(42))?;
    let cfg = TrainConfig {
        objective: ObjectiveSpec::CeSpikeTime {
            inversion: Inversion::Negate,
        },
        optimizer: OptimizerKind::adam(5e-3),
        epochs: 100,
        seed: 42,
        ..Default::default()
    };
    for s in train_bptt(&mut net, &data, &cfg)?.iter().step_by(10) {
        println!("epoch {:>3}  loss {:.4}  acc {:.3}", s.epoch, s.loss, s.accuracy);
    }
    Ok(())
}
