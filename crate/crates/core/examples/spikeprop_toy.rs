//! Continuous-time spike response neurons trained on exact spike times.
//! Three inputs fire at fixed times; two outputs learn to fire at 1.6 and
//! 2.0 time units. Targets near the peak of the summed kernel are
//! fragile: the membrane slope vanishes there and the step size explodes.
//!
//!     cargo run --release --example spikeprop_toy

use ndarray::array;
use spikegrad::spikeprop::{alpha_kernel, spike_times, train_spikeprop, SpikePropConfig, SrmNet};

fn main() -> spikegrad::Result<()> {
    let tau = 2.0;
    println!("alpha kernel peaks at t = tau: eps({tau}) = {}", alpha_kernel(tau, tau));

    let presyn = vec![vec![0.0], vec![0.5], vec![1.0]];
    let targets = vec![1.6, 2.0];
    let mut net = SrmNet::new(array![[0.6, 0.5, 0.4], [0.5, 0.4, 0.3]], tau, 1.0, 12.0)?;
    println!("initial spike times {:?}", spike_times(&net, &presyn)?);

    let cfg = SpikePropConfig {
        lr: 0.02,
        epochs: 200,
        ..Default::default()
    };
    let h = train_spikeprop(&mut net, &[(presyn.clone(), targets.clone())], &cfg)?;
    for (e, l) in h.losses.iter().enumerate().step_by(40) {
        match l {
            Some(l) => println!("epoch {e:>3}  loss {l:.6}"),
            None => println!("epoch {e:>3}  every output silent"),
        }
    }
    for i in h.interventions.iter().take(5) {
        println!("epoch {}: output {} was silent, threshold lowered to {:.3}", i.epoch, i.neuron, i.new_theta);
    }
    println!("{} threshold interventions in total", h.interventions.len());
    println!("final spike times {:?} (targets {targets:?})", spike_times(&net, &presyn)?);
    Ok(())
}
