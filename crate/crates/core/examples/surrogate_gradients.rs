//! Tabulates each surrogate derivative across the threshold, then shows the
//! dead-neuron problem: with the exact (Heaviside) derivative no error
//! reaches the hidden layer.
//!
//!     cargo run --example surrogate_gradients

use ndarray::Array2;
use spikegrad::bptt::{backward, BackwardOptions, DirectGrads, Network};
use spikegrad::neuron::LifParams;
use spikegrad::objectives::ObjectiveSpec;
use spikegrad::rng::seeded;
use spikegrad::surrogate::{spike_forward, surrogate_grad, SurrogateKind};

fn main() -> spikegrad::Result<()> {
    let kinds = [
        SurrogateKind::Heaviside,
        SurrogateKind::Sigmoid { slope: 5.0 },
        SurrogateKind::FastSigmoid { slope: 25.0 },
        SurrogateKind::Triangular,
        SurrogateKind::HybridSpike { subthreshold_scale: 0.1 },
        SurrogateKind::ShiftedReluGrad { scale: 1.0 },
    ];
    let theta = 1.0;
    print!("{:>6}", "U");
    for k in &kinds {
        print!("{:>14}", k.name());
    }
    println!();
    for i in 0..=8 {
        let u = 0.6 + 0.1 * i as f64;
        let s = spike_forward(u, theta);
        print!("{u:>6.2}");
        for k in kinds {
            print!("{:>14.4}", surrogate_grad(k, u, theta, s));
        }
        println!();
    }

    let mut rng = seeded(5);
    let net = Network::init(&[8, 12, 2], &LifParams::default(), false, &mut rng)?;
    let input = Array2::from_shape_fn((40, 8), |(t, i)| ((t * 7 + i * 3) % 5 == 0) as u8 as f64);
    let rec = net.forward(&input)?;
    let out = rec.output();
    let l = ObjectiveSpec::CeSpikeRate.evaluate(&out.membrane, &out.spikes, 0)?;
    let direct = DirectGrads::output(&rec, l.d_spikes, l.d_membrane);
    println!();
    for k in [SurrogateKind::Heaviside, SurrogateKind::default()] {
        let opts = BackwardOptions {
            surrogate: k,
            ..Default::default()
        };
        let g = backward(&net, &rec, &direct, &opts)?;
        let hidden = g.layers[0].dw.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        println!("{:<14} max |dL/dW| hidden layer = {hidden:.3e}", k.name());
    }
    Ok(())
}
