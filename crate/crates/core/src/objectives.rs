//! Loss functions over output spikes, membranes and spike times, plus the
//! activity regularisers. Every function returns the scalar loss together
//! with its gradient with respect to its direct input.

use ndarray::{Array2, Axis};

use crate::codec::{latency_decode, rate_decode};
use crate::error::{check_dim, Error, Result};
use crate::raster::SpikeRaster;

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&l| (l - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// One-hot cross entropy on logits: `(-ln p_target, p - onehot)`.
fn softmax_ce(logits: &[f64], target: usize) -> Result<(f64, Vec<f64>)> {
    if logits.is_empty() {
        return Err(Error::arg("cross entropy needs at least one logit"));
    }
    if target >= logits.len() {
        return Err(Error::arg(format!(
            "target class {target} out of range for {} logits",
            logits.len()
        )));
    }
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let log_sum = logits.iter().map(|&l| (l - max).exp()).sum::<f64>().ln() + max;
    let loss = log_sum - logits[target];
    let mut grad = softmax(logits);
    grad[target] -= 1.0;
    Ok((loss, grad))
}

/// Spike counts used as softmax logits.
pub fn ce_spike_rate(counts: &[f64], target_class: usize) -> Result<(f64, Vec<f64>)> {
    softmax_ce(counts, target_class)
}

/// `sum_i (y_i - c_i)^2`.
pub fn mse_spike_rate(counts: &[f64], target_counts: &[f64]) -> Result<(f64, Vec<f64>)> {
    check_dim("mse_spike_rate targets", counts.len(), target_counts.len())?;
    Ok(sq_err(counts, target_counts))
}

fn sq_err(actual: &[f64], target: &[f64]) -> (f64, Vec<f64>) {
    let mut loss = 0.0;
    let grad = actual
        .iter()
        .zip(target)
        .map(|(&a, &y)| {
            let d = y - a;
            loss += d * d;
            -2.0 * d
        })
        .collect();
    (loss, grad)
}

/// Peak membrane of each output neuron as logits. The gradient lands on the
/// first step attaining the peak.
pub fn max_membrane_ce(trace: &Array2<f64>, target_class: usize) -> Result<(f64, Array2<f64>)> {
    let (t_steps, n) = trace.dim();
    if t_steps == 0 {
        return Err(Error::arg("max_membrane_ce needs at least one time step"));
    }
    let mut logits = vec![0.0; n];
    let mut peak_step = vec![0usize; n];
    for j in 0..n {
        let col = trace.column(j);
        let mut best = 0;
        for t in 1..t_steps {
            if col[t] > col[best] {
                best = t;
            }
        }
        logits[j] = col[best];
        peak_step[j] = best;
    }
    let (loss, g) = softmax_ce(&logits, target_class)?;
    let mut grad = Array2::zeros((t_steps, n));
    for j in 0..n {
        grad[[peak_step[j], j]] = g[j];
    }
    Ok((loss, grad))
}

/// Time-summed membrane as logits; the gradient is the same at every step.
pub fn sum_membrane_ce(trace: &Array2<f64>, target_class: usize) -> Result<(f64, Array2<f64>)> {
    let (t_steps, n) = trace.dim();
    if t_steps == 0 {
        return Err(Error::arg("sum_membrane_ce needs at least one time step"));
    }
    let logits = trace.sum_axis(Axis(0)).to_vec();
    let (loss, g) = softmax_ce(&logits, target_class)?;
    let grad = Array2::from_shape_fn((t_steps, n), |(_, j)| g[j]);
    Ok((loss, grad))
}

/// `sum_t sum_i (y_i[t] - U_i[t])^2`.
pub fn mse_membrane(trace: &Array2<f64>, target: &Array2<f64>) -> Result<(f64, Array2<f64>)> {
    if trace.dim() != target.dim() {
        return Err(Error::arg(format!(
            "membrane target shape {:?} does not match trace {:?}",
            target.dim(),
            trace.dim()
        )));
    }
    let diff = target - trace;
    let loss = diff.iter().map(|d| d * d).sum();
    Ok((loss, diff * -2.0))
}

/// Monotone decreasing map from spike time to logit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Inversion {
    /// `-f`
    Negate,
    /// `1 / f`; spike times must be nonzero.
    Reciprocal,
}

/// Cross entropy over inverted first-spike times.
pub fn ce_spike_time(
    first_spike_steps: &[f64],
    target_class: usize,
    inversion: Inversion,
) -> Result<(f64, Vec<f64>)> {
    let logits: Vec<f64> = match inversion {
        Inversion::Negate => first_spike_steps.iter().map(|f| -f).collect(),
        Inversion::Reciprocal => {
            if first_spike_steps.contains(&0.0) {
                return Err(Error::arg(
                    "reciprocal spike-time logits need every spike time >= 1",
                ));
            }
            first_spike_steps.iter().map(|f| 1.0 / f).collect()
        }
    };
    let (loss, g) = softmax_ce(&logits, target_class)?;
    let grad = match inversion {
        Inversion::Negate => g.iter().map(|v| -v).collect(),
        Inversion::Reciprocal => g
            .iter()
            .zip(first_spike_steps)
            .map(|(v, f)| -v / (f * f))
            .collect(),
    };
    Ok((loss, grad))
}

/// Squared error between the k-th emitted spike and the k-th target spike of
/// every neuron.
pub fn mse_spike_time(
    spike_time_lists: &[Vec<f64>],
    target_lists: &[Vec<f64>],
) -> Result<(f64, Vec<Vec<f64>>)> {
    check_dim("mse_spike_time neurons", target_lists.len(), spike_time_lists.len())?;
    let mut loss = 0.0;
    let mut grads = Vec::with_capacity(spike_time_lists.len());
    for (i, (f, y)) in spike_time_lists.iter().zip(target_lists).enumerate() {
        if f.len() != y.len() {
            return Err(Error::arg(format!(
                "neuron {i}: {} spikes but {} target times",
                f.len(),
                y.len()
            )));
        }
        let (l, g) = sq_err(f, y);
        loss += l;
        grads.push(g);
    }
    Ok((loss, grads))
}

/// Targets the correct class at `f0` and pushes incorrect classes to fire no
/// earlier than `f0 + gamma`. Incorrect neurons already outside the window
/// contribute nothing.
pub fn mse_relative_spike_time(
    first_spike_steps: &[f64],
    target_class: usize,
    f0: f64,
    gamma: f64,
) -> Result<(f64, Vec<f64>)> {
    if gamma < 0.0 {
        return Err(Error::arg("latency window gamma must be non-negative"));
    }
    if target_class >= first_spike_steps.len() {
        return Err(Error::arg("target class out of range"));
    }
    let targets: Vec<f64> = first_spike_steps
        .iter()
        .enumerate()
        .map(|(i, &f)| {
            if i == target_class {
                f0
            } else if f < f0 + gamma {
                f0 + gamma
            } else {
                f
            }
        })
        .collect();
    Ok(sq_err(first_spike_steps, &targets))
}

/// Activity regulariser weights.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RegularizerSpec {
    /// L1 weight on the output layer's total spike count.
    pub lambda_l1: f64,
    /// Population upper-activity weight.
    pub lambda_upper: f64,
    pub theta_upper: f64,
    /// Exponent of the rectified upper term, 1 or 2.
    pub upper_exponent: u32,
    /// Per-neuron lower-activity weight.
    pub lambda_lower: f64,
    pub theta_lower: f64,
}

impl RegularizerSpec {
    pub fn validate(&self) -> Result<()> {
        if self.lambda_l1 < 0.0 || self.lambda_upper < 0.0 || self.lambda_lower < 0.0 {
            return Err(Error::arg("regulariser weights must be non-negative"));
        }
        if self.theta_upper < 0.0 || self.theta_lower < 0.0 {
            return Err(Error::arg("regulariser thresholds must be non-negative"));
        }
        if self.lambda_upper > 0.0 && !matches!(self.upper_exponent, 1 | 2) {
            return Err(Error::arg("upper-activity exponent must be 1 or 2"));
        }
        Ok(())
    }

    pub fn is_inactive(&self) -> bool {
        self.lambda_l1 == 0.0 && self.lambda_upper == 0.0 && self.lambda_lower == 0.0
    }
}

/// Penalty over per-layer spike counts (last entry is the output layer) and
/// its subgradient with respect to each count.
pub fn regularize(
    layer_counts: &[Vec<f64>],
    spec: &RegularizerSpec,
) -> Result<(f64, Vec<Vec<f64>>)> {
    spec.validate()?;
    let mut penalty = 0.0;
    let mut grads: Vec<Vec<f64>> = layer_counts.iter().map(|c| vec![0.0; c.len()]).collect();
    let last = layer_counts.len().checked_sub(1);
    for (l, counts) in layer_counts.iter().enumerate() {
        if spec.lambda_l1 > 0.0 && Some(l) == last {
            penalty += spec.lambda_l1 * counts.iter().sum::<f64>();
            grads[l].iter_mut().for_each(|g| *g += spec.lambda_l1);
        }
        if spec.lambda_upper > 0.0 {
            let excess = counts.iter().sum::<f64>() - spec.theta_upper;
            if excess > 0.0 {
                let (p, d) = if spec.upper_exponent == 2 {
                    (excess * excess, 2.0 * excess)
                } else {
                    (excess, 1.0)
                };
                penalty += spec.lambda_upper * p;
                grads[l].iter_mut().for_each(|g| *g += spec.lambda_upper * d);
            }
        }
        if spec.lambda_lower > 0.0 && !counts.is_empty() {
            let scale = spec.lambda_lower / counts.len() as f64;
            for (i, &c) in counts.iter().enumerate() {
                let deficit = spec.theta_lower - c;
                if deficit > 0.0 {
                    penalty += scale * deficit * deficit;
                    grads[l][i] -= 2.0 * scale * deficit;
                }
            }
        }
    }
    Ok((penalty, grads))
}

/// First-spike step of each neuron in a `T x N` spike matrix, expressed as
/// `T - sum_t cummax(S)[t]`. Silent neurons read `T`.
pub fn first_spike_times(spikes: &Array2<f64>) -> Vec<f64> {
    let (t_steps, n) = spikes.dim();
    (0..n)
        .map(|j| {
            let mut running = 0.0f64;
            let mut acc = 0.0;
            for t in 0..t_steps {
                running = running.max(spikes[[t, j]]);
                acc += running;
            }
            t_steps as f64 - acc
        })
        .collect()
}

/// Pulls a gradient on first-spike times back onto the spike matrix.
///
/// A neuron whose first spike is at step `k` receives `-(T - k) * d_f` at
/// step `k`, the subgradient of the prefix-maximum form. A silent neuron is
/// treated as if forced to fire on the final step, receiving `-d_f` there.
pub fn first_spike_backward(spikes: &Array2<f64>, d_first: &[f64]) -> Array2<f64> {
    let (t_steps, n) = spikes.dim();
    let mut grad = Array2::zeros((t_steps, n));
    if t_steps == 0 {
        return grad;
    }
    for j in 0..n {
        match (0..t_steps).find(|&t| spikes[[t, j]] > 0.0) {
            Some(k) => grad[[k, j]] = -((t_steps - k) as f64) * d_first[j],
            None => grad[[t_steps - 1, j]] = -d_first[j],
        }
    }
    grad
}

/// Which loss a trainer optimises, and how class labels become targets.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ObjectiveSpec {
    CeSpikeRate,
    /// Correct class targets `on_count` spikes, others `off_count`.
    MseSpikeRate { on_count: f64, off_count: f64 },
    MaxMembraneCe,
    SumMembraneCe,
    /// Time-static membrane targets.
    MseMembrane { on_level: f64, off_level: f64 },
    CeSpikeTime { inversion: Inversion },
    /// First-spike targets per class.
    MseSpikeTime { on_time: f64, off_time: f64 },
    MseRelativeSpikeTime { f0: f64, gamma: f64 },
}

/// Loss of one sample and its gradients on the output layer's spikes and
/// membrane, both `T x N`.
#[derive(Clone, Debug)]
pub struct OutputLoss {
    pub loss: f64,
    pub d_spikes: Array2<f64>,
    pub d_membrane: Array2<f64>,
}

impl ObjectiveSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ObjectiveSpec::CeSpikeRate => "ce_spike_rate",
            ObjectiveSpec::MseSpikeRate { .. } => "mse_spike_rate",
            ObjectiveSpec::MaxMembraneCe => "max_membrane_ce",
            ObjectiveSpec::SumMembraneCe => "sum_membrane_ce",
            ObjectiveSpec::MseMembrane { .. } => "mse_membrane",
            ObjectiveSpec::CeSpikeTime { .. } => "ce_spike_time",
            ObjectiveSpec::MseSpikeTime { .. } => "mse_spike_time",
            ObjectiveSpec::MseRelativeSpikeTime { .. } => "mse_relative_spike_time",
        }
    }

    fn class_targets(n: usize, label: usize, on: f64, off: f64) -> Vec<f64> {
        (0..n).map(|j| if j == label { on } else { off }).collect()
    }

    /// Evaluates the loss for class `label` on the output layer's membrane and
    /// spike matrices. Spike-time kinds use the prefix-maximum first-spike
    /// representation.
    pub fn evaluate(
        &self,
        membrane: &Array2<f64>,
        spikes: &Array2<f64>,
        label: usize,
    ) -> Result<OutputLoss> {
        let (t_steps, n) = spikes.dim();
        if membrane.dim() != spikes.dim() {
            return Err(Error::arg("membrane and spike matrices differ in shape"));
        }
        if label >= n {
            return Err(Error::arg(format!(
                "label {label} out of range for {n} output neurons"
            )));
        }
        let zeros = || Array2::<f64>::zeros((t_steps, n));
        let per_step = |g: &[f64]| Array2::from_shape_fn((t_steps, n), |(_, j)| g[j]);
        let counts = spikes.sum_axis(Axis(0)).to_vec();
        let out = match *self {
            ObjectiveSpec::CeSpikeRate => {
                let (loss, g) = ce_spike_rate(&counts, label)?;
                OutputLoss {
                    loss,
                    d_spikes: per_step(&g),
                    d_membrane: zeros(),
                }
            }
            ObjectiveSpec::MseSpikeRate {
                on_count,
                off_count,
            } => {
                let y = Self::class_targets(n, label, on_count, off_count);
                let (loss, g) = mse_spike_rate(&counts, &y)?;
                OutputLoss {
                    loss,
                    d_spikes: per_step(&g),
                    d_membrane: zeros(),
                }
            }
            ObjectiveSpec::MaxMembraneCe => {
                let (loss, g) = max_membrane_ce(membrane, label)?;
                OutputLoss {
                    loss,
                    d_spikes: zeros(),
                    d_membrane: g,
                }
            }
            ObjectiveSpec::SumMembraneCe => {
                let (loss, g) = sum_membrane_ce(membrane, label)?;
                OutputLoss {
                    loss,
                    d_spikes: zeros(),
                    d_membrane: g,
                }
            }
            ObjectiveSpec::MseMembrane {
                on_level,
                off_level,
            } => {
                let y = Self::class_targets(n, label, on_level, off_level);
                let target = per_step(&y);
                let (loss, g) = mse_membrane(membrane, &target)?;
                OutputLoss {
                    loss,
                    d_spikes: zeros(),
                    d_membrane: g,
                }
            }
            ObjectiveSpec::CeSpikeTime { inversion } => {
                let f = first_spike_times(spikes);
                let (loss, g) = ce_spike_time(&f, label, inversion)?;
                OutputLoss {
                    loss,
                    d_spikes: first_spike_backward(spikes, &g),
                    d_membrane: zeros(),
                }
            }
            ObjectiveSpec::MseSpikeTime { on_time, off_time } => {
                let f = first_spike_times(spikes);
                let y = Self::class_targets(n, label, on_time, off_time);
                let (loss, g) = sq_err(&f, &y);
                OutputLoss {
                    loss,
                    d_spikes: first_spike_backward(spikes, &g),
                    d_membrane: zeros(),
                }
            }
            ObjectiveSpec::MseRelativeSpikeTime { f0, gamma } => {
                let f = first_spike_times(spikes);
                let (loss, g) = mse_relative_spike_time(&f, label, f0, gamma)?;
                OutputLoss {
                    loss,
                    d_spikes: first_spike_backward(spikes, &g),
                    d_membrane: zeros(),
                }
            }
        };
        Ok(out)
    }

    /// Predicted class under the decoding that matches this loss.
    pub fn predict(&self, membrane: &Array2<f64>, spikes: &Array2<f64>) -> Result<usize> {
        let argmax = |v: Vec<f64>| {
            let mut best = 0;
            for i in 1..v.len() {
                if v[i] > v[best] {
                    best = i;
                }
            }
            best
        };
        match self {
            ObjectiveSpec::MaxMembraneCe => Ok(argmax(
                membrane
                    .columns()
                    .into_iter()
                    .map(|c| c.fold(f64::NEG_INFINITY, |a, &b| a.max(b)))
                    .collect(),
            )),
            ObjectiveSpec::SumMembraneCe => Ok(argmax(membrane.sum_axis(Axis(0)).to_vec())),
            ObjectiveSpec::CeSpikeTime { .. }
            | ObjectiveSpec::MseSpikeTime { .. }
            | ObjectiveSpec::MseRelativeSpikeTime { .. } => {
                latency_decode(&SpikeRaster::from_array(binarize(spikes))?)
            }
            _ => Ok(rate_decode(&SpikeRaster::from_array(binarize(spikes))?)?.1),
        }
    }
}

fn binarize(spikes: &Array2<f64>) -> Array2<f64> {
    spikes.mapv(|v| if v > 0.5 { 1.0 } else { 0.0 })
}
