//! Drives a single LIF neuron with a constant current under each reset mode,
//! then with threshold adaptation, and prints the membrane trace.
//!
//!     cargo run --example lif_dynamics

use ndarray::Array2;
use spikegrad::neuron::{beta_from_tau, lif_forward, LifParams, ResetMode};

fn show(label: &str, params: &LifParams, current: f64, steps: usize) -> spikegrad::Result<()> {
    let inputs = Array2::from_elem((steps, 1), current);
    let (trace, spikes) = lif_forward(params, &inputs, None)?;
    let marks: String = (0..steps).map(|t| if spikes.get(t, 0) { '|' } else { '.' }).collect();
    println!("{label:<22} {marks}  ({} spikes)", spikes.total());
    let u: Vec<String> = trace.column(0).iter().take(8).map(|u| format!("{u:.3}")).collect();
    println!("{:<22} U[0..8] = {}", "", u.join(" "));
    Ok(())
}

fn main() -> spikegrad::Result<()> {
    let beta = beta_from_tau(10.0, 1.0)?;
    println!("beta for tau = 10 steps: {beta:.4}\n");
    for mode in [ResetMode::Subtract, ResetMode::Zero, ResetMode::None] {
        show(mode.as_str(), &LifParams::new(beta, 1.0, mode)?, 0.3, 40)?;
    }
    // a slow threshold that climbs after every spike spaces the spikes out
    let adaptive = LifParams::new(beta, 1.0, ResetMode::Subtract)?.with_adaptation(0.95)?;
    show("subtract + adaptation", &adaptive, 0.3, 40)?;

    // subthreshold drive settles at I / (1 - beta) without ever firing
    show("weak drive", &LifParams::new(beta, 1.0, ResetMode::Subtract)?, 0.05, 40)?;
    println!("\nsteady state for I = 0.05: {:.3}", 0.05 / (1.0 - beta));
    Ok(())
}
