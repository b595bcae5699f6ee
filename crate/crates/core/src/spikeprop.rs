//! Continuous-time spike response model with alpha-kernel synapses, trained
//! on first-spike times.
//!
//! ```text
//! eps(s) = (s / tau) * exp(1 - s / tau)   for s > 0, else 0
//! U_j(t) = sum_i sum_k W_ij eps(t - f_i^k)
//! ```
//!
//! Output neuron `j` fires at the first `f_j` with `U_j(f_j) = theta_j`. No
//! reset follows; only the first crossing is used. At the crossing
//! `df_j/dW_ij = -sum_k eps(f_j - f_i^k) / U_j'(f_j)`.

use ndarray::{Array1, Array2};

use crate::error::{check_dim, Error, Result};
use crate::raster::SpikeRaster;

const BISECTION_STEPS: usize = 60;

/// Presynaptic spike times, one list per input, in seconds.
pub type SpikeLists = Vec<Vec<f64>>;

#[derive(Clone, Debug, PartialEq)]
pub struct SrmNet {
    /// `N_out x N_in` weights.
    pub w: Array2<f64>,
    /// Kernel time constant, seconds.
    pub tau: f64,
    /// Firing threshold of each output neuron.
    pub theta: Vec<f64>,
    /// Simulation horizon, seconds.
    pub t_end: f64,
    /// Scan resolution for locating crossings, seconds.
    pub dt_fine: f64,
}

impl SrmNet {
    /// Network with a shared threshold and the default resolution `tau / 1000`.
    pub fn new(w: Array2<f64>, tau: f64, theta: f64, t_end: f64) -> Result<Self> {
        let net = Self {
            theta: vec![theta; w.nrows()],
            w,
            tau,
            t_end,
            dt_fine: tau / 1000.0,
        };
        net.validate()?;
        Ok(net)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::arg(format!("tau must be positive, got {}", self.tau)));
        }
        if !(self.dt_fine > 0.0 && self.dt_fine <= self.tau / 100.0) {
            return Err(Error::arg(format!(
                "dt_fine must lie in (0, tau/100], got {}",
                self.dt_fine
            )));
        }
        if !(self.t_end > 0.0) {
            return Err(Error::arg("t_end must be positive"));
        }
        check_dim("threshold count", self.w.nrows(), self.theta.len())?;
        if self.theta.iter().any(|&t| !(t > 0.0)) {
            return Err(Error::arg("thresholds must be positive"));
        }
        if self.w.iter().any(|w| !w.is_finite()) {
            return Err(Error::arg("weights must be finite"));
        }
        Ok(())
    }

    pub fn n_in(&self) -> usize {
        self.w.ncols()
    }

    pub fn n_out(&self) -> usize {
        self.w.nrows()
    }
}

pub fn alpha_kernel(t: f64, tau: f64) -> f64 {
    if t > 0.0 {
        let x = t / tau;
        x * (1.0 - x).exp()
    } else {
        0.0
    }
}

/// Time derivative of [`alpha_kernel`].
pub fn alpha_kernel_deriv(t: f64, tau: f64) -> f64 {
    if t > 0.0 {
        let x = t / tau;
        (1.0 - x) * (1.0 - x).exp() / tau
    } else {
        0.0
    }
}

fn check_spikes(net: &SrmNet, presyn: &[Vec<f64>]) -> Result<()> {
    check_dim("presynaptic spike lists", net.n_in(), presyn.len())?;
    for (i, list) in presyn.iter().enumerate() {
        if let Some(&f) = list.iter().find(|&&f| !(0.0..=net.t_end).contains(&f)) {
            return Err(Error::arg(format!(
                "input {i} spike at {f} lies outside [0, {}]",
                net.t_end
            )));
        }
    }
    Ok(())
}

/// Summed kernel `sum_k eps(t - f_i^k)` for each input.
fn kernel_sums(net: &SrmNet, presyn: &[Vec<f64>], t: f64) -> Array1<f64> {
    presyn
        .iter()
        .map(|list| list.iter().map(|&f| alpha_kernel(t - f, net.tau)).sum())
        .collect()
}

fn membrane_j(net: &SrmNet, presyn: &[Vec<f64>], t: f64, j: usize) -> f64 {
    net.w
        .row(j)
        .iter()
        .zip(presyn)
        .map(|(&w, list)| w * list.iter().map(|&f| alpha_kernel(t - f, net.tau)).sum::<f64>())
        .sum()
}

/// Membrane of every output neuron at time `t`.
pub fn srm_membrane(net: &SrmNet, presyn: &[Vec<f64>], t: f64) -> Result<Array1<f64>> {
    check_spikes(net, presyn)?;
    Ok(net.w.dot(&kernel_sums(net, presyn, t)))
}

/// Analytic `dU_j/dt` at time `t`.
pub fn membrane_slope(net: &SrmNet, presyn: &[Vec<f64>], t: f64, j: usize) -> f64 {
    net.w
        .row(j)
        .iter()
        .zip(presyn)
        .map(|(&w, list)| w * list.iter().map(|&f| alpha_kernel_deriv(t - f, net.tau)).sum::<f64>())
        .sum()
}

/// First time neuron `j`'s membrane exceeds its threshold: a scan on the
/// `dt_fine` grid, then bisection between the bracketing grid points.
pub fn find_spike_time(net: &SrmNet, presyn: &[Vec<f64>], j: usize) -> Result<Option<f64>> {
    check_spikes(net, presyn)?;
    if j >= net.n_out() {
        return Err(Error::arg(format!("output neuron {j} out of range")));
    }
    let theta = net.theta[j];
    let n_steps = (net.t_end / net.dt_fine).ceil() as usize;
    let mut prev = 0.0;
    for k in 0..=n_steps {
        let t = (k as f64 * net.dt_fine).min(net.t_end);
        if membrane_j(net, presyn, t, j) > theta {
            let (mut lo, mut hi) = (prev, t);
            for _ in 0..BISECTION_STEPS {
                let mid = 0.5 * (lo + hi);
                if membrane_j(net, presyn, mid, j) > theta {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            return Ok(Some(0.5 * (lo + hi)));
        }
        prev = t;
    }
    Ok(None)
}

/// First spike time of every output neuron.
pub fn spike_times(net: &SrmNet, presyn: &[Vec<f64>]) -> Result<Vec<Option<f64>>> {
    (0..net.n_out()).map(|j| find_spike_time(net, presyn, j)).collect()
}

/// `df_j/dW_ij` for one output neuron, or a dead-neuron error if it never
/// fires.
pub fn spike_time_grad(net: &SrmNet, presyn: &[Vec<f64>], j: usize) -> Result<(f64, Array1<f64>)> {
    let f = find_spike_time(net, presyn, j)?.ok_or(Error::DeadNeuron { neuron: j })?;
    let slope = membrane_slope(net, presyn, f, j);
    Ok((f, kernel_sums(net, presyn, f) * (-1.0 / slope)))
}

/// Loss `sum_j (y_j - f_j)^2` and its gradient with respect to the weights.
pub fn spikeprop_grad(net: &SrmNet, presyn: &[Vec<f64>], targets: &[f64]) -> Result<(f64, Array2<f64>)> {
    check_dim("spike-time targets", net.n_out(), targets.len())?;
    let mut grad = Array2::zeros(net.w.dim());
    let mut loss = 0.0;
    for (j, &y) in targets.iter().enumerate() {
        let (f, df_dw) = spike_time_grad(net, presyn, j)?;
        loss += (y - f) * (y - f);
        // dL/df = -2 (y - f)
        grad.row_mut(j).assign(&(df_dw * (-2.0 * (y - f))));
    }
    Ok((loss, grad))
}

/// Spike lists from a raster whose step index counts `dt_fine` intervals.
pub fn spike_lists_from_raster(raster: &SpikeRaster, dt_fine: f64) -> SpikeLists {
    (0..raster.n())
        .map(|i| raster.spike_steps(i).into_iter().map(|t| t as f64 * dt_fine).collect())
        .collect()
}

pub const CHECKPOINT_HEADER: &str = "spikegrad-srm-v1";

/// Text form: header, `srm <N_out> <N_in> <tau> <t_end> <dt_fine>`, one
/// threshold per line, then the weights row-major, 17 significant digits.
pub fn to_text(net: &SrmNet) -> String {
    let mut out = format!(
        "{CHECKPOINT_HEADER}\nsrm {} {} {:.16e} {:.16e} {:.16e}\n",
        net.n_out(),
        net.n_in(),
        net.tau,
        net.t_end,
        net.dt_fine
    );
    for x in net.theta.iter().chain(net.w.iter()) {
        out.push_str(&format!("{x:.16e}\n"));
    }
    out
}

pub fn from_text(text: &str, path: &std::path::Path) -> Result<SrmNet> {
    let err = |line: usize, msg: &str| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: msg.to_string(),
    };
    let lines: Vec<&str> = text.lines().collect();
    if lines.first().map(|l| l.trim()) != Some(CHECKPOINT_HEADER) {
        return Err(err(1, "expected spikegrad-srm-v1 header"));
    }
    let f: Vec<&str> = lines.get(1).map(|l| l.split_whitespace().collect()).unwrap_or_default();
    if f.len() != 6 || f[0] != "srm" {
        return Err(err(2, "expected `srm <N_out> <N_in> <tau> <t_end> <dt_fine>`"));
    }
    let int = |s: &str| s.parse::<usize>().map_err(|_| err(2, "invalid size"));
    let num = |s: &str, line: usize| s.trim().parse::<f64>().map_err(|_| err(line, "invalid number"));
    let (n_out, n_in) = (int(f[1])?, int(f[2])?);
    let values: Vec<f64> = lines[2..]
        .iter()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(k, l)| num(l, k + 3))
        .collect::<Result<_>>()?;
    if values.len() != n_out + n_out * n_in {
        return Err(err(lines.len(), "wrong number of values"));
    }
    let net = SrmNet {
        theta: values[..n_out].to_vec(),
        w: Array2::from_shape_vec((n_out, n_in), values[n_out..].to_vec()).expect("sized above"),
        tau: num(f[3], 2)?,
        t_end: num(f[4], 2)?,
        dt_fine: num(f[5], 2)?,
    };
    net.validate().map_err(|e| err(2, &e.to_string()))?;
    Ok(net)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpikePropConfig {
    pub lr: f64,
    pub epochs: usize,
    /// Factor applied to a silent neuron's threshold.
    pub threshold_factor: f64,
}

impl Default for SpikePropConfig {
    fn default() -> Self {
        Self {
            lr: 1e-2,
            epochs: 100,
            threshold_factor: 0.9,
        }
    }
}

/// Threshold lowered because a neuron stayed silent.
#[derive(Clone, Debug, PartialEq)]
pub struct Intervention {
    pub epoch: usize,
    pub neuron: usize,
    pub new_theta: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SpikePropHistory {
    /// Per epoch, the mean over samples of `sum_j (y_j - f_j)^2` taken over
    /// the outputs that fired; `None` when no output fired on any sample.
    pub losses: Vec<Option<f64>>,
    pub interventions: Vec<Intervention>,
}

/// Full-batch gradient descent on spike-time error. Each output neuron is
/// handled on its own: when it stays silent for a sample its threshold is
/// scaled by `threshold_factor` (at most once per epoch) and it contributes
/// nothing for that sample, while the outputs that did fire keep learning.
pub fn train_spikeprop(
    net: &mut SrmNet,
    data: &[(SpikeLists, Vec<f64>)],
    cfg: &SpikePropConfig,
) -> Result<SpikePropHistory> {
    if data.is_empty() {
        return Err(Error::arg("spikeprop training needs a non-empty dataset"));
    }
    if !(cfg.threshold_factor > 0.0 && cfg.threshold_factor < 1.0) {
        return Err(Error::config("spikeprop.threshold_factor", "must lie in (0, 1)"));
    }
    net.validate()?;
    for (_, targets) in data {
        check_dim("spike-time targets", net.n_out(), targets.len())?;
    }
    let mut history = SpikePropHistory::default();
    for epoch in 0..cfg.epochs {
        let mut grad = Array2::zeros(net.w.dim());
        let mut loss = 0.0;
        let mut fired = 0usize;
        let mut silent = vec![false; net.n_out()];
        for (presyn, targets) in data {
            for (j, &y) in targets.iter().enumerate() {
                match spike_time_grad(net, presyn, j) {
                    Ok((f, df_dw)) => {
                        loss += (y - f) * (y - f);
                        grad.row_mut(j).scaled_add(-2.0 * (y - f), &df_dw);
                        fired += 1;
                    }
                    Err(Error::DeadNeuron { .. }) => silent[j] = true,
                    Err(e) => return Err(e),
                }
            }
        }
        net.w.scaled_add(-cfg.lr / data.len() as f64, &grad);
        history.losses.push((fired > 0).then(|| loss / data.len() as f64));
        for (neuron, _) in silent.iter().enumerate().filter(|(_, s)| **s) {
            net.theta[neuron] *= cfg.threshold_factor;
            history.interventions.push(Intervention {
                epoch,
                neuron,
                new_theta: net.theta[neuron],
            });
        }
    }
    Ok(history)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn toy(w: Array2<f64>, theta: f64) -> SrmNet {
        SrmNet::new(w, 1.0, theta, 6.0).unwrap()
    }

    #[test]
    fn text_round_trip() {
        let net = toy(array![[0.1 + 0.2, -1.0 / 3.0]], 0.7);
        let back = from_text(&to_text(&net), std::path::Path::new("m")).unwrap();
        assert_eq!(back, net);
        assert!(from_text("nope", std::path::Path::new("m")).is_err());
    }

    #[test]
    fn kernel_values() {
        assert_eq!(alpha_kernel(1.0, 1.0), 1.0);
        assert!((alpha_kernel(2.0, 1.0) - 2.0 * (-1.0f64).exp()).abs() < 1e-15);
        assert_eq!(alpha_kernel(0.0, 1.0), 0.0);
        assert_eq!(alpha_kernel(-3.0, 1.0), 0.0);
        assert!((alpha_kernel(0.004, 0.004) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn membrane_superposition() {
        let net = toy(array![[1.0]], 5.0);
        assert_eq!(srm_membrane(&net, &[vec![]], 1.0).unwrap()[0], 0.0);
        assert_eq!(srm_membrane(&net, &[vec![0.0]], 1.0).unwrap()[0], 1.0);
        assert_eq!(srm_membrane(&net, &[vec![0.0, 0.0]], 1.0).unwrap()[0], 2.0);
        assert!(srm_membrane(&net, &[vec![7.0]], 1.0).is_err());
    }

    #[test]
    fn crossing_near_peak() {
        let net = toy(array![[1.0 + 1e-6]], 1.0);
        let f = find_spike_time(&net, &[vec![0.0]], 0).unwrap().unwrap();
        assert!((f - 1.0).abs() < 0.01);
        assert!((membrane_j(&net, &[vec![0.0]], f, 0) - 1.0).abs() < 1e-10);
        assert_eq!(find_spike_time(&toy(array![[0.99]], 1.0), &[vec![0.0]], 0).unwrap(), None);
    }

    #[test]
    fn stronger_weights_fire_no_later() {
        let spikes = vec![vec![0.1], vec![0.4, 1.2]];
        let mut last = f64::INFINITY;
        for s in [0.8, 1.0, 1.5, 2.0, 4.0] {
            let f = find_spike_time(&toy(array![[s, s]], 1.2), &spikes, 0).unwrap().unwrap();
            assert!(f <= last);
            last = f;
        }
    }

    #[test]
    fn slope_matches_central_difference() {
        let net = toy(array![[0.9, 0.7]], 1.0);
        let spikes = vec![vec![0.1], vec![0.5]];
        let f = find_spike_time(&net, &spikes, 0).unwrap().unwrap();
        let h = net.dt_fine;
        let num = (membrane_j(&net, &spikes, f + h, 0) - membrane_j(&net, &spikes, f - h, 0)) / (2.0 * h);
        let ana = membrane_slope(&net, &spikes, f, 0);
        assert!(((num - ana) / ana).abs() < 1e-6);
    }

    #[test]
    fn gradient_matches_finite_difference() {
        let net = toy(array![[0.9, 0.7], [1.3, 0.2]], 1.0);
        let spikes = vec![vec![0.1, 1.0], vec![0.5]];
        let targets = [1.0, 2.0];
        let (_, g) = spikeprop_grad(&net, &spikes, &targets).unwrap();
        let h = 1e-6;
        for j in 0..2 {
            for i in 0..2 {
                let loss = |d: f64| {
                    let mut n = net.clone();
                    n.w[[j, i]] += d;
                    spikeprop_grad(&n, &spikes, &targets).unwrap().0
                };
                let fd = (loss(h) - loss(-h)) / (2.0 * h);
                assert!(((g[[j, i]] - fd) / fd).abs() < 1e-3, "{j},{i}: {} vs {fd}", g[[j, i]]);
            }
        }
    }

    #[test]
    fn on_target_gives_zero_row_and_dead_neuron_errors() {
        let net = toy(array![[0.9, 0.7]], 1.0);
        let spikes = vec![vec![0.1], vec![0.5]];
        let f = find_spike_time(&net, &spikes, 0).unwrap().unwrap();
        let (_, g) = spikeprop_grad(&net, &spikes, &[f]).unwrap();
        assert!(g.iter().all(|&x| x == 0.0));
        let dead = toy(array![[0.1, 0.1]], 1.0);
        assert!(matches!(spikeprop_grad(&dead, &spikes, &[1.0]), Err(Error::DeadNeuron { neuron: 0 })));
    }

    #[test]
    fn training_reduces_loss_and_revives_dead_neurons() {
        let presyn = vec![vec![0.0], vec![0.3]];
        let teacher = toy(array![[1.0, 1.0]], 1.0);
        let target = find_spike_time(&teacher, &presyn, 0).unwrap().unwrap();
        let data = vec![(presyn, vec![target])];
        let mut net = toy(array![[0.8, 0.8]], 1.0);
        let h = train_spikeprop(&mut net, &data, &SpikePropConfig { lr: 0.5, epochs: 30, ..Default::default() }).unwrap();
        let losses: Vec<f64> = h.losses.iter().map(|l| l.unwrap()).collect();
        assert!(losses.windows(2).all(|p| p[1] <= p[0]));
        assert!(losses.last().unwrap() < &(0.1 * losses[0]));

        let mut frozen = toy(array![[0.8, 0.8]], 1.0);
        let h = train_spikeprop(&mut frozen, &data, &SpikePropConfig { lr: 0.0, epochs: 3, ..Default::default() }).unwrap();
        assert!(h.losses.iter().all(|l| *l == h.losses[0]));

        let mut dead = toy(array![[0.3, 0.3]], 1.0);
        let h = train_spikeprop(&mut dead, &data, &SpikePropConfig { lr: 0.01, epochs: 20, ..Default::default() }).unwrap();
        assert!(!h.interventions.is_empty());
        assert!(h.losses.last().unwrap().is_some());
    }

    #[test]
    fn silent_output_does_not_block_the_others() {
        let presyn = vec![vec![0.0], vec![0.3]];
        let target = find_spike_time(&toy(array![[1.0, 1.0]], 1.0), &presyn, 0).unwrap().unwrap();
        let data = vec![(presyn, vec![target, 1.0])];
        let mut net = toy(array![[0.8, 0.8], [0.05, 0.05]], 1.0);
        let before = net.w.row(0).to_owned();
        let h = train_spikeprop(&mut net, &data, &SpikePropConfig { lr: 0.5, epochs: 1, ..Default::default() }).unwrap();
        assert_ne!(net.w.row(0), before);
        assert_eq!(net.w.row(1), array![0.05, 0.05]);
        assert_eq!(h.interventions, vec![Intervention { epoch: 0, neuron: 1, new_theta: 0.9 }]);
    }
}
