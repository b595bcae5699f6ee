//! Evaluates every output objective on one recorded output layer and prints
//! the loss, where its gradient lands, and the class each one predicts.
//!
//!     cargo run --example objectives_tour

use ndarray::Array2;
use spikegrad::bptt::Network;
use spikegrad::neuron::LifParams;
use spikegrad::objectives::{regularize, Inversion, ObjectiveSpec, RegularizerSpec};
use spikegrad::rng::seeded;

fn main() -> spikegrad::Result<()> {
    let mut rng = seeded(11);
    let mut net = Network::init(&[6, 3], &LifParams::default(), false, &mut rng)?;
    // stronger weights than the default init so every output fires
    net.layers[0].w.mapv_inplace(|w| 1.5 * w.abs());
    let input = Array2::from_shape_fn((30, 6), |(t, i)| ((t + i) % 2 == 0) as u8 as f64);
    let rec = net.forward(&input)?;
    let out = rec.output();
    println!("output counts {:?}\n", out.counts());

    let objectives = [
        ObjectiveSpec::CeSpikeRate,
        ObjectiveSpec::MseSpikeRate {
            on_count: 8.0,
            off_count: 1.0,
        },
        ObjectiveSpec::MaxMembraneCe,
        ObjectiveSpec::SumMembraneCe,
        ObjectiveSpec::MseMembrane {
            on_level: 1.2,
            off_level: 0.0,
        },
        ObjectiveSpec::CeSpikeTime {
            inversion: Inversion::Negate,
        },
        ObjectiveSpec::MseSpikeTime {
            on_time: 2.0,
            off_time: 20.0,
        },
        ObjectiveSpec::MseRelativeSpikeTime { f0: 2.0, gamma: 5.0 },
    ];
    let label = 1;
    println!("{:<24} {:>10} {:>12} {:>12} {:>6}", "objective", "loss", "|dL/dS|", "|dL/dU|", "pred");
    for obj in objectives {
        let l = obj.evaluate(&out.membrane, &out.spikes, label)?;
        let norm = |g: &Array2<f64>| g.iter().map(|v| v * v).sum::<f64>().sqrt();
        println!(
            "{:<24} {:>10.4} {:>12.4} {:>12.4} {:>6}",
            obj.name(),
            l.loss,
            norm(&l.d_spikes),
            norm(&l.d_membrane),
            obj.predict(&out.membrane, &out.spikes)?
        );
    }

    // activity regularisers act on spike counts of every layer
    let spec = RegularizerSpec {
        lambda_l1: 0.01,
        lambda_lower: 0.1,
        theta_lower: 3.0,
        ..Default::default()
    };
    let (penalty, grads) = regularize(&[out.counts()], &spec)?;
    println!("\nregulariser penalty {penalty:.4}, d/dcount {:?}", grads[0]);
    Ok(())
}
