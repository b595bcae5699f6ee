//! Spike encoders (rate, latency, delta modulation) and output decoders.

use ndarray::Array2;
use rand::Rng as _;

use crate::error::{Error, Result};
use crate::raster::SpikeRaster;
use crate::rng::Rng;

/// What to do with features that never reach the encoder threshold, or whose
/// spike would land past the horizon.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClampMode {
    NoSpike,
    /// Emit a single spike on the final step instead.
    ForceLast,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LatencyParams {
    /// RC time constant, in steps.
    pub tau: f64,
    /// Firing threshold, in feature units.
    pub theta: f64,
    /// Horizon `T` in steps.
    pub t_max: usize,
    pub clamp_mode: ClampMode,
}

impl LatencyParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0) || !(self.theta > 0.0) {
            return Err(Error::arg("latency encoder needs tau > 0 and theta > 0"));
        }
        if self.t_max == 0 {
            return Err(Error::arg("latency encoder needs t_max >= 1"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Polarity {
    PositiveOnly,
    Bipolar,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DeltaParams {
    pub threshold: f64,
    pub polarity: Polarity,
}

/// Output of [`delta_encode`]. `off` is present only in bipolar mode.
#[derive(Clone, Debug, PartialEq)]
pub struct DeltaRasters {
    pub on: SpikeRaster,
    pub off: Option<SpikeRaster>,
}

/// Bernoulli rate code: entry `(t, i)` spikes with probability `features[i]`.
pub fn rate_encode(features: &[f64], t_steps: usize, rng: &mut Rng) -> Result<SpikeRaster> {
    if let Some(bad) = features.iter().find(|x| !(0.0..=1.0).contains(*x)) {
        return Err(Error::arg(format!(
            "rate-coded features must lie in [0, 1], found {bad}"
        )));
    }
    let mut raster = SpikeRaster::zeros(t_steps, features.len());
    for t in 0..t_steps {
        for (i, &p) in features.iter().enumerate() {
            // random() is in [0, 1): p = 0 never fires, p = 1 always does
            if rng.random::<f64>() < p {
                raster.set(t, i, true);
            }
        }
    }
    Ok(raster)
}

/// Continuous firing time of an RC neuron charged to steady state `x`:
/// `tau * ln(x / (x - theta))`, or `None` when `x <= theta`.
pub fn latency_time(x: f64, tau: f64, theta: f64) -> Option<f64> {
    if x > theta {
        Some(tau * (x / (x - theta)).ln())
    } else {
        None
    }
}

/// Latency code: each feature produces at most one spike, earlier for larger
/// values. Firing times are rounded to the nearest step (ties away from zero).
pub fn latency_encode(features: &[f64], params: &LatencyParams) -> Result<SpikeRaster> {
    params.validate()?;
    let mut raster = SpikeRaster::zeros(params.t_max, features.len());
    for (i, &x) in features.iter().enumerate() {
        let step = latency_time(x, params.tau, params.theta)
            .map(f64::round)
            .filter(|&s| s < params.t_max as f64)
            .map(|s| s as usize);
        match (step, params.clamp_mode) {
            (Some(s), _) => raster.set(s, i, true),
            (None, ClampMode::ForceLast) => raster.set(params.t_max - 1, i, true),
            (None, ClampMode::NoSpike) => {}
        }
    }
    Ok(raster)
}

/// Delta modulation over a `T x N` signal. Row 0 is compared against a zero
/// baseline. A spike fires when the step-to-step increase strictly exceeds
/// the threshold; the bipolar `off` raster marks decreases below `-threshold`.
pub fn delta_encode(signal: &Array2<f64>, params: &DeltaParams) -> Result<DeltaRasters> {
    if !(params.threshold > 0.0) {
        return Err(Error::arg("delta threshold must be positive"));
    }
    let (t_steps, n) = signal.dim();
    if t_steps == 0 {
        return Err(Error::arg("delta encoder needs at least one time step"));
    }
    let mut on = SpikeRaster::zeros(t_steps, n);
    let mut off = SpikeRaster::zeros(t_steps, n);
    for t in 0..t_steps {
        for i in 0..n {
            let prev = if t == 0 { 0.0 } else { signal[[t - 1, i]] };
            let diff = signal[[t, i]] - prev;
            if diff > params.threshold {
                on.set(t, i, true);
            } else if diff < -params.threshold {
                off.set(t, i, true);
            }
        }
    }
    Ok(DeltaRasters {
        on,
        off: (params.polarity == Polarity::Bipolar).then_some(off),
    })
}

fn argmax_lowest(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Spike counts per neuron and the index of the largest count.
pub fn rate_decode(raster: &SpikeRaster) -> Result<(Vec<f64>, usize)> {
    if raster.n() == 0 {
        return Err(Error::arg("cannot decode a raster with no neurons"));
    }
    let counts = raster.counts();
    let class = argmax_lowest(&counts);
    Ok((counts, class))
}

/// The neuron that fires first. Silent neurons rank last; ties go to the
/// lowest index.
pub fn latency_decode(raster: &SpikeRaster) -> Result<usize> {
    if raster.n() == 0 {
        return Err(Error::arg("cannot decode a raster with no neurons"));
    }
    let firsts = raster.first_spikes();
    let mut best = 0;
    let mut best_t = usize::MAX;
    for (i, f) in firsts.iter().enumerate() {
        if let Some(t) = *f {
            if t < best_t {
                best_t = t;
                best = i;
            }
        }
    }
    Ok(best)
}

/// Sums counts within each class group (`groups[neuron] = class`) and returns
/// the winning class.
pub fn population_decode(raster: &SpikeRaster, groups: &[usize]) -> Result<usize> {
    if groups.len() != raster.n() {
        return Err(Error::arg(format!(
            "population map covers {} neurons but raster has {}",
            groups.len(),
            raster.n()
        )));
    }
    let n_classes = groups.iter().max().map_or(0, |m| m + 1);
    if n_classes == 0 {
        return Err(Error::arg("population map is empty"));
    }
    let mut sums = vec![0.0; n_classes];
    for (count, &class) in raster.counts().iter().zip(groups) {
        sums[class] += count;
    }
    Ok(argmax_lowest(&sums))
}
