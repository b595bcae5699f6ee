//! Rate, latency and delta coding of the same features, and decoding the
//! resulting rasters back to a class.
//!
//!     cargo run --example encode_decode

use ndarray::array;
use spikegrad::codec::{
    delta_encode, latency_decode, latency_encode, latency_time, population_decode, rate_decode, rate_encode, ClampMode,
    DeltaParams, LatencyParams, Polarity,
};
use spikegrad::rng::seeded;
use spikegrad::SpikeRaster;

fn draw(name: &str, r: &SpikeRaster) {
    println!("{name}:");
    for i in 0..r.n() {
        let row: String = (0..r.t_steps()).map(|t| if r.get(t, i) { '|' } else { '.' }).collect();
        println!("  {i} {row}");
    }
}

fn main() -> spikegrad::Result<()> {
    let features = [0.9, 0.5, 0.2, 0.05];

    let rate = rate_encode(&features, 40, &mut seeded(3))?;
    draw("rate (p = feature per step)", &rate);
    let (counts, class) = rate_decode(&rate)?;
    println!("  counts {counts:?} -> class {class}\n");

    let p = LatencyParams {
        tau: 5.0,
        theta: 0.1,
        t_max: 40,
        clamp_mode: ClampMode::ForceLast,
    };
    for x in features {
        match latency_time(x, p.tau, p.theta) {
            Some(t) => println!("  x = {x:<4} fires at t = {t:.3}"),
            None => println!("  x = {x:<4} never reaches threshold"),
        }
    }
    let lat = latency_encode(&features, &p)?;
    draw("latency (brighter is earlier, weak input forced to the last step)", &lat);
    println!("  first spike -> class {}\n", latency_decode(&lat)?);

    let signal = array![[0.0, 1.0], [0.3, 1.0], [0.3, 0.6], [0.8, 0.6], [0.1, 0.9]];
    let d = delta_encode(
        &signal,
        &DeltaParams {
            threshold: 0.2,
            polarity: Polarity::Bipolar,
        },
    )?;
    draw("delta on", &d.on);
    draw("delta off", d.off.as_ref().expect("bipolar"));

    // two populations of two neurons each; the second group is louder
    let pop = SpikeRaster::from_events(3, 4, &[(0, 0), (0, 2), (1, 3), (2, 2)])?;
    println!("\npopulation decode over groups [0, 0, 1, 1] -> class {}", population_decode(&pop, &[0, 0, 1, 1])?);
    Ok(())
}
