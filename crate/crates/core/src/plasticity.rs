//! Pair-based spike-timing-dependent plasticity and weight-perturbation
//! learning.
//!
//! With `dt = t_pre - t_post`:
//!
//! ```text
//! dW = A+ exp( dt / tau+)   if dt < 0   (pre before post)
//!      A- exp(-dt / tau-)   if dt > 0
//!      0                    if dt = 0
//! ```

use ndarray::Array2;
use rand_distr::{Distribution, Normal};

use crate::bptt::{evaluate, Network};
use crate::error::{check_dim, Error, Result};
use crate::harness::dataset::Dataset;
use crate::objectives::{ObjectiveSpec, RegularizerSpec};
use crate::raster::SpikeRaster;
use crate::rng::{seeded, Rng};

/// Which spike pairs contribute to an update.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Pairing {
    /// Every pre/post pair at most `window` steps apart.
    AllPairs(usize),
    /// Each post spike with the nearest earlier pre spike, and each pre
    /// spike with the nearest earlier post spike.
    NearestNeighbor,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StdpParams {
    pub a_plus: f64,
    /// Depression amplitude, negative for depression.
    pub a_minus: f64,
    /// Time constants in steps.
    pub tau_plus: f64,
    pub tau_minus: f64,
    pub w_min: f64,
    pub w_max: f64,
    pub pairing: Pairing,
}

impl Default for StdpParams {
    fn default() -> Self {
        Self {
            a_plus: 0.01,
            a_minus: -0.012,
            tau_plus: 20.0,
            tau_minus: 20.0,
            w_min: 0.0,
            w_max: 1.0,
            pairing: Pairing::AllPairs(100),
        }
    }
}

impl StdpParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau_plus > 0.0 && self.tau_minus > 0.0) {
            return Err(Error::arg("STDP time constants must be positive"));
        }
        if !(self.w_min <= self.w_max) {
            return Err(Error::arg("STDP needs w_min <= w_max"));
        }
        Ok(())
    }
}

/// Weight change for one spike pair separated by `dt = t_pre - t_post` steps.
pub fn stdp_delta_w(dt: f64, p: &StdpParams) -> f64 {
    if dt < 0.0 {
        p.a_plus * (dt / p.tau_plus).exp()
    } else if dt > 0.0 {
        p.a_minus * (-dt / p.tau_minus).exp()
    } else {
        0.0
    }
}

fn nearest_before(times: &[usize], t: usize) -> Option<usize> {
    // times are sorted ascending
    let k = times.partition_point(|&s| s < t);
    k.checked_sub(1).map(|k| times[k])
}

/// Applies the summed pair updates to `w` (`N_post x N_pre`) and clamps.
pub fn stdp_update(pre: &SpikeRaster, post: &SpikeRaster, w: &Array2<f64>, p: &StdpParams) -> Result<Array2<f64>> {
    p.validate()?;
    check_dim("STDP raster length", pre.t_steps(), post.t_steps())?;
    check_dim("STDP presynaptic width", w.ncols(), pre.n())?;
    check_dim("STDP postsynaptic width", w.nrows(), post.n())?;
    let pre_times: Vec<Vec<usize>> = (0..pre.n()).map(|i| pre.spike_steps(i)).collect();
    let post_times: Vec<Vec<usize>> = (0..post.n()).map(|j| post.spike_steps(j)).collect();
    let mut out = w.clone();
    for (j, tj) in post_times.iter().enumerate() {
        for (i, ti) in pre_times.iter().enumerate() {
            let mut dw = 0.0;
            match p.pairing {
                Pairing::AllPairs(window) => {
                    for &a in ti {
                        for &b in tj {
                            if a.abs_diff(b) <= window {
                                dw += stdp_delta_w(a as f64 - b as f64, p);
                            }
                        }
                    }
                }
                Pairing::NearestNeighbor => {
                    for &b in tj {
                        if let Some(a) = nearest_before(ti, b) {
                            dw += stdp_delta_w(a as f64 - b as f64, p);
                        }
                    }
                    for &a in ti {
                        if let Some(b) = nearest_before(tj, a) {
                            dw += stdp_delta_w(a as f64 - b as f64, p);
                        }
                    }
                }
            }
            out[[j, i]] = (out[[j, i]] + dw).clamp(p.w_min, p.w_max);
        }
    }
    Ok(out)
}

/// Loss after every trial and whether the trial was kept.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PerturbationHistory {
    pub initial_loss: f64,
    pub losses: Vec<f64>,
    pub accepted: Vec<bool>,
}

impl PerturbationHistory {
    pub fn accept_rate(&self) -> f64 {
        if self.accepted.is_empty() {
            0.0
        } else {
            self.accepted.iter().filter(|&&a| a).count() as f64 / self.accepted.len() as f64
        }
    }
}

/// Random search over a flat parameter vector: add Gaussian noise of scale
/// `sigma`, keep the change only if `loss` strictly decreases.
pub fn perturbation_search(
    params: &mut [f64],
    mut loss: impl FnMut(&[f64]) -> Result<f64>,
    sigma: f64,
    trials: usize,
    rng: &mut Rng,
) -> Result<PerturbationHistory> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::arg(format!("sigma must be non-negative, got {sigma}")));
    }
    let noise = Normal::new(0.0, sigma).map_err(|e| Error::arg(e.to_string()))?;
    let mut current = loss(params)?;
    let mut history = PerturbationHistory {
        initial_loss: current,
        ..Default::default()
    };
    let mut trial = params.to_vec();
    for _ in 0..trials {
        for (t, &p) in trial.iter_mut().zip(params.iter()) {
            *t = p + noise.sample(rng);
        }
        let l = loss(&trial)?;
        let keep = l < current;
        if keep {
            params.copy_from_slice(&trial);
            current = l;
        }
        history.losses.push(current);
        history.accepted.push(keep);
    }
    Ok(history)
}

fn weights(model: &Network) -> Vec<f64> {
    let mut out = Vec::new();
    for l in &model.layers {
        out.extend(l.w.iter());
        if let Some(v) = &l.v {
            out.extend(v.iter());
        }
    }
    out
}

fn set_weights(model: &mut Network, flat: &[f64]) {
    let mut k = 0;
    for l in &mut model.layers {
        for x in l.w.iter_mut().chain(l.v.iter_mut().flat_map(|v| v.iter_mut())) {
            *x = flat[k];
            k += 1;
        }
    }
}

/// Weight-perturbation training of every weight in `model` against the mean
/// dataset loss.
pub fn perturbation_train(
    model: &mut Network,
    data: &Dataset,
    objective: &ObjectiveSpec,
    sigma: f64,
    trials: usize,
    seed: u64,
) -> Result<PerturbationHistory> {
    let mut rng = seeded(seed);
    let mut flat = weights(model);
    let mut scratch = model.clone();
    let reg = RegularizerSpec::default();
    let history = perturbation_search(
        &mut flat,
        |p| {
            set_weights(&mut scratch, p);
            Ok(evaluate(&scratch, data, objective, &reg)?.loss)
        },
        sigma,
        trials,
        &mut rng,
    )?;
    set_weights(model, &flat);
    Ok(history)
}
