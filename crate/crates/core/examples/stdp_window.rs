//! The STDP learning window, measured by applying the rule to single
//! pre/post pairs, and its effect on a synapse driven by a causal input.
//!
//!     cargo run --example stdp_window

use ndarray::Array2;
use spikegrad::plasticity::{stdp_delta_w, stdp_update, Pairing, StdpParams};
use spikegrad::SpikeRaster;

fn main() -> spikegrad::Result<()> {
    let p = StdpParams::default();
    println!("{:>5} {:>12}", "dt", "dW");
    for dt in (-40..=40).step_by(5) {
        let dw = stdp_delta_w(dt as f64, &p);
        let bar = "#".repeat((dw.abs() * 2000.0) as usize);
        println!("{dt:>5} {dw:>12.6} {}{bar}", if dw >= 0.0 { '+' } else { '-' });
    }

    // input 0 always fires 2 steps before the output, input 1 2 steps after
    let t_steps = 100;
    let mut pre = SpikeRaster::zeros(t_steps, 2);
    let mut post = SpikeRaster::zeros(t_steps, 1);
    for k in 0..9 {
        let t = 5 + 10 * k;
        pre.set(t - 2, 0, true);
        post.set(t, 0, true);
        pre.set(t + 2, 1, true);
    }
    let w0 = Array2::from_elem((1, 2), 0.5);
    for pairing in [Pairing::AllPairs(100), Pairing::NearestNeighbor] {
        let w = stdp_update(&pre, &post, &w0, &StdpParams { pairing, ..p.clone() })?;
        println!("{pairing:?}: causal input -> {:.4}, anti-causal input -> {:.4}", w[[0, 0]], w[[0, 1]]);
    }
    Ok(())
}
