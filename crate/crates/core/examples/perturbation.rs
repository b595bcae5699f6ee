//! Gradient-free learning by random weight perturbation: a trial is kept only
//! when it lowers the loss.
//!
//!     cargo run --release --example perturbation

use spikegrad::bptt::{evaluate, Network};
use spikegrad::harness::gen_rate_task;
use spikegrad::neuron::LifParams;
use spikegrad::objectives::{ObjectiveSpec, RegularizerSpec};
use spikegrad::plasticity::{perturbation_search, perturbation_train};
use spikegrad::rng::seeded;

fn main() -> spikegrad::Result<()> {
    // a smooth bowl first, to show the acceptance rule in isolation
    let mut x = vec![2.0, -1.5];
    let h = perturbation_search(&mut x, |p| Ok(p.iter().map(|v| v * v).sum()), 0.3, 200, &mut seeded(0))?;
    println!(
        "quadratic: loss {:.3} -> {:.5} ({:.0}% of trials accepted)",
        h.initial_loss,
        h.losses.last().unwrap(),
        100.0 * h.accept_rate()
    );

    let data = gen_rate_task(1, 10, 25, 0.2, 0.8, 20)?;
    let mut net = Network::init(&[10, 8, 2], &LifParams::default(), false, &mut seeded(4))?;
    let obj = ObjectiveSpec::CeSpikeRate;
    for round in 0..5 {
        let h = perturbation_train(&mut net, &data, &obj, 0.05, 20, round)?;
        let e = evaluate(&net, &data, &obj, &RegularizerSpec::default())?;
        println!(
            "round {round}: loss {:.4} -> {:.4}, accuracy {:.3}, {} of 20 accepted",
            h.initial_loss,
            h.losses.last().unwrap(),
            e.accuracy,
            h.accepted.iter().filter(|a| **a).count()
        );
    }
    Ok(())
}
