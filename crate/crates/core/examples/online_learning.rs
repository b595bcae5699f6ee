//! Forward-mode (online) learning on a single LIF layer: every step updates
//! an eligibility trace per synapse, so gradients are ready without storing
//! the sequence. Compares the deferred online gradient with BPTT and then
//! trains with per-step updates.
//!
//!     cargo run --release --example online_learning

use ndarray::Array2;
use spikegrad::bptt::{backward, BackwardOptions, DirectGrads, Network, OptimizerKind};
use spikegrad::neuron::LifParams;
use spikegrad::objectives::mse_membrane;
use spikegrad::online::{online_gradients, train_online, OnlineConfig, StepLoss, Stream, UpdatePolicy};
use spikegrad::rng::seeded;
use spikegrad::surrogate::SurrogateKind;

fn main() -> spikegrad::Result<()> {
    let mut net = Network::init(&[5, 3], &LifParams::default(), false, &mut seeded(2))?;
    let t_steps = 60;
    let inputs = Array2::from_shape_fn((t_steps, 5), |(t, i)| ((t + 2 * i) % 4 == 0) as u8 as f64);
    // each output should hover at its own level
    let targets = Array2::from_shape_fn((t_steps, 3), |(_, j)| 0.2 + 0.3 * j as f64);
    let stream = Stream {
        inputs: inputs.clone(),
        targets: targets.clone(),
    };
    let surrogate = SurrogateKind::default();

    let (loss, online) = online_gradients(&net, &stream, StepLoss::Membrane, surrogate)?;
    let rec = net.forward(&inputs)?;
    let (_, d_membrane) = mse_membrane(&rec.output().membrane, &targets)?;
    let direct = DirectGrads::output(&rec, Array2::zeros((t_steps, 3)), d_membrane);
    let bptt = backward(&net, &rec, &direct, &BackwardOptions::default())?;
    let diff = (&online[0] - &bptt.layers[0].dw).iter().fold(0.0f64, |a, v| a.max(v.abs()));
    println!("sequence loss {loss:.4}; max |online - BPTT| = {diff:.2e}");

    let cfg = OnlineConfig {
        loss: StepLoss::Membrane,
        surrogate,
        policy: UpdatePolicy::PerStep(1),
        optimizer: OptimizerKind::Sgd { lr: 2e-3 },
        epochs: 20,
    };
    let h = train_online(&mut net, &[stream], &cfg)?;
    for (e, l) in h.sequence_losses.iter().enumerate().step_by(4) {
        println!("epoch {e:>2}  loss {l:.4}");
    }
    println!("{} weight updates applied", h.updates);
    Ok(())
}
