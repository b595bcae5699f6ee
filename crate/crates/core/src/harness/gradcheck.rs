//! Gradient verification suites run by `spikegrad gradcheck`.

use ndarray::Array2;
use rand::Rng as _;

use crate::bptt::{backward, forward, forward_with, weight_contributions, BackwardOptions, DirectGrads, Network, SnnLayer};
use crate::error::{Error, Result};
use crate::neuron::{LifParams, ResetMode, SpikeFn};
use crate::online::{online_gradients, StepLoss, Stream};
use crate::rng::{seeded, Rng};
use crate::spikeprop::{alpha_kernel, find_spike_time, spike_time_grad, SrmNet};
use crate::surrogate::SurrogateKind;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    RelaxedFd,
    RtrlVsBptt,
    SpikepropFd,
    BetaPower,
}

impl Suite {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "relaxed-fd" => Some(Suite::RelaxedFd),
            "rtrl-vs-bptt" => Some(Suite::RtrlVsBptt),
            "spikeprop-fd" => Some(Suite::SpikepropFd),
            "beta-power" => Some(Suite::BetaPower),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Suite::RelaxedFd => "relaxed-fd",
            Suite::RtrlVsBptt => "rtrl-vs-bptt",
            Suite::SpikepropFd => "spikeprop-fd",
            Suite::BetaPower => "beta-power",
        }
    }
}

/// One checked case: the worst error found and the tolerance it must meet.
#[derive(Clone, Debug, PartialEq)]
pub struct Case {
    pub name: String,
    pub max_rel_err: f64,
    pub tol: f64,
}

impl Case {
    pub fn passed(&self) -> bool {
        self.max_rel_err < self.tol
    }
}

pub fn run_suite(suite: Suite, seed: u64) -> Result<Vec<Case>> {
    match suite {
        Suite::RelaxedFd => relaxed_fd(seed, 20),
        Suite::RtrlVsBptt => rtrl_vs_bptt(seed, 50),
        Suite::SpikepropFd => spikeprop_fd(seed, 20),
        Suite::BetaPower => beta_power(seed),
    }
}

/// `max|a - b| / max|b|` (absolute error when `b` is all zero).
pub fn rel_err(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    let diff = (a - b).iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let scale = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale > 0.0 {
        diff / scale
    } else {
        diff
    }
}

fn random_lif(rng: &mut Rng, mode: ResetMode) -> LifParams {
    LifParams::new(rng.random_range(0.6..0.95), rng.random_range(0.3..1.0), mode).expect("valid ranges")
}

/// Smooth-forward networks: backward against central differences.
pub fn relaxed_fd(seed: u64, cases: usize) -> Result<Vec<Case>> {
    let mut rng = seeded(seed);
    let eps = 1e-5;
    let mut out = Vec::with_capacity(cases);
    for c in 0..cases {
        let mode = [ResetMode::Subtract, ResetMode::Zero, ResetMode::None][c % 3];
        let n_in = rng.random_range(2..5);
        let n_hid = rng.random_range(2..5);
        let n_out = rng.random_range(1..4);
        let t = rng.random_range(5..12);
        let lif = random_lif(&mut rng, mode);
        let mut net = Network::init(&[n_in, n_hid, n_out], &lif, c % 2 == 1, &mut rng)?;
        for l in &mut net.layers {
            l.w *= 2.0;
        }
        let input = Array2::from_shape_fn((t, n_in), |_| rng.random_range(0.0..1.0));
        let a = Array2::from_shape_fn((t, n_out), |_| rng.random_range(-1.0..1.0));
        let b = Array2::from_shape_fn((t, n_out), |_| rng.random_range(-1.0..1.0));
        let spike_fn = SpikeFn::Sigmoid { slope: rng.random_range(2.0..6.0) };
        let loss = |n: &Network| -> Result<f64> {
            let rec = forward_with(n, &input, spike_fn)?;
            let o = rec.output();
            Ok((&o.spikes * &a).sum() + (&o.membrane * &b).sum())
        };
        let rec = forward_with(&net, &input, spike_fn)?;
        let direct = DirectGrads::output(&rec, a.clone(), b.clone());
        let opts = BackwardOptions {
            detach_reset: false,
            ..Default::default()
        };
        let g = backward(&net, &rec, &direct, &opts)?;
        let mut worst = 0.0f64;
        for l in 0..net.layers.len() {
            let mut fd = Array2::zeros(net.layers[l].w.dim());
            for idx in ndarray::indices(fd.dim()) {
                let mut p = net.clone();
                p.layers[l].w[idx] += eps;
                let up = loss(&p)?;
                p.layers[l].w[idx] -= 2.0 * eps;
                let down = loss(&p)?;
                fd[idx] = (up - down) / (2.0 * eps);
            }
            worst = worst.max(rel_err(&g.layers[l].dw, &fd));
            if let (Some(v), Some(dv)) = (&net.layers[l].v, &g.layers[l].dv) {
                let mut fd = Array2::zeros(v.dim());
                for idx in ndarray::indices(fd.dim()) {
                    let mut p = net.clone();
                    p.layers[l].v.as_mut().expect("present")[idx] += eps;
                    let up = loss(&p)?;
                    p.layers[l].v.as_mut().expect("present")[idx] -= 2.0 * eps;
                    let down = loss(&p)?;
                    fd[idx] = (up - down) / (2.0 * eps);
                }
                worst = worst.max(rel_err(dv, &fd));
            }
        }
        out.push(Case {
            name: format!("net {c}: {n_in}-{n_hid}-{n_out}, T={t}, reset={}", mode.as_str()),
            max_rel_err: worst,
            tol: 1e-5,
        });
    }
    Ok(out)
}

/// Online influence gradients against BPTT on single-layer networks.
pub fn rtrl_vs_bptt(seed: u64, cases: usize) -> Result<Vec<Case>> {
    let mut rng = seeded(seed);
    let mut out = Vec::with_capacity(cases);
    for c in 0..cases {
        let n_in = rng.random_range(1..=8);
        let n_out = rng.random_range(1..=4);
        let t = rng.random_range(1..=32);
        let lif = random_lif(&mut rng, ResetMode::Subtract);
        let mut net = Network::init(&[n_in, n_out], &lif, false, &mut rng)?;
        for l in &mut net.layers {
            l.w *= 3.0;
        }
        let inputs = Array2::from_shape_fn((t, n_in), |_| (rng.random::<f64>() < 0.5) as u8 as f64);
        let targets = Array2::from_shape_fn((t, n_out), |_| rng.random_range(-1.0..1.0));
        let stream = Stream { inputs, targets };
        let surrogate = SurrogateKind::default();
        let (_, online) = online_gradients(&net, &stream, StepLoss::Membrane, surrogate)?;
        let rec = forward(&net, &stream.inputs)?;
        let (_, dm) = crate::objectives::mse_membrane(&rec.output().membrane, &stream.targets)?;
        let direct = DirectGrads::output(&rec, Array2::zeros(dm.dim()), dm);
        let opts = BackwardOptions {
            surrogate,
            ..Default::default()
        };
        let g = backward(&net, &rec, &direct, &opts)?;
        out.push(Case {
            name: format!("net {c}: {n_in}->{n_out}, T={t}"),
            max_rel_err: rel_err(&online[0], &g.layers[0].dw),
            tol: 1e-9,
        });
    }
    Ok(out)
}

fn random_srm(rng: &mut Rng) -> Result<(SrmNet, Vec<Vec<f64>>)> {
    loop {
        let n_in = rng.random_range(1..=4);
        let n_out = rng.random_range(1..=2);
        let tau = rng.random_range(0.5..2.0);
        let w = Array2::from_shape_fn((n_out, n_in), |_| rng.random_range(0.2..1.5));
        let net = SrmNet::new(w, tau, rng.random_range(0.5..1.2), 6.0 * tau)?;
        let spikes: Vec<Vec<f64>> = (0..n_in)
            .map(|_| (0..rng.random_range(1..=2)).map(|_| rng.random_range(0.0..2.0 * tau)).collect())
            .collect();
        let all_fire = (0..n_out).all(|j| matches!(find_spike_time(&net, &spikes, j), Ok(Some(_))));
        if all_fire {
            return Ok((net, spikes));
        }
    }
}

/// Analytic spike-time gradients against finite differences of the located
/// spike time.
pub fn spikeprop_fd(seed: u64, cases: usize) -> Result<Vec<Case>> {
    let mut rng = seeded(seed);
    let h = 1e-6;
    let mut out = vec![Case {
        name: "kernel peak".into(),
        max_rel_err: (alpha_kernel(1.7, 1.7) - 1.0).abs(),
        tol: 1e-12,
    }];
    for c in 0..cases {
        let (net, spikes) = random_srm(&mut rng)?;
        let mut worst = 0.0f64;
        for j in 0..net.n_out() {
            let (_, g) = spike_time_grad(&net, &spikes, j)?;
            for i in 0..net.n_in() {
                let at = |d: f64| -> Result<f64> {
                    let mut p = net.clone();
                    p.w[[j, i]] += d;
                    find_spike_time(&p, &spikes, j)?.ok_or(Error::DeadNeuron { neuron: j })
                };
                let fd = (at(h)? - at(-h)?) / (2.0 * h);
                let err = (g[i] - fd).abs() / fd.abs().max(1e-12);
                worst = worst.max(err);
            }
        }
        out.push(Case {
            name: format!("srm {c}: {}->{}", net.n_in(), net.n_out()),
            max_rel_err: worst,
            tol: 1e-3,
        });
    }
    Ok(out)
}

/// Contribution to `dW` of an input spike `n` quiet steps before the output
/// spike, for a single neuron under the spike-gated surrogate. Returns the
/// per-step contribution at the input spike and the decay rate.
pub fn gap_contribution(beta: f64, n: usize) -> Result<f64> {
    let s = 2;
    let t = s + n + 3;
    let lif = LifParams::new(beta, 1.0, ResetMode::Zero)?;
    // channel 0 is the tagged input, channel 1 forces the output spike
    let net = Network::new(vec![SnnLayer {
        w: ndarray::array![[0.01, 5.0]],
        v: None,
        lif,
        feedback_b: None,
    }])?;
    let mut input = Array2::zeros((t, 2));
    input[[s, 0]] = 1.0;
    input[[s + n, 1]] = 1.0;
    let rec = forward(&net, &input)?;
    let spikes = rec.output().raster()?;
    if spikes.spike_steps(0) != vec![s + n] {
        return Err(Error::arg("the probe neuron must fire exactly once, at the end of the gap"));
    }
    let mut ds = Array2::zeros((t, 1));
    ds[[s + n, 0]] = 1.0;
    let direct = DirectGrads::output(&rec, ds, Array2::zeros((t, 1)));
    let opts = BackwardOptions {
        surrogate: SurrogateKind::HybridSpike { subthreshold_scale: 0.0 },
        ..Default::default()
    };
    let steps = weight_contributions(&net, &rec, &direct, &opts, 0)?;
    Ok(steps[s][[0, 0]])
}

/// The spike-gated surrogate scales a contribution by `beta` per quiet step.
pub fn beta_power(seed: u64) -> Result<Vec<Case>> {
    let mut rng = seeded(seed);
    let mut out = Vec::new();
    for _ in 0..5 {
        let beta: f64 = rng.random_range(0.5..0.99);
        let gaps: Vec<usize> = (0..=20).collect();
        let contrib: Vec<f64> = gaps.iter().map(|&n| gap_contribution(beta, n)).collect::<Result<_>>()?;
        let ratio_err = contrib
            .windows(2)
            .map(|w| (w[1] / w[0] - beta).abs())
            .fold(0.0f64, f64::max);
        out.push(Case {
            name: format!("beta={beta:.4}: ratio per quiet step"),
            max_rel_err: ratio_err,
            tol: 1e-9,
        });
        let logs: Vec<f64> = contrib.iter().map(|c| c.ln()).collect();
        let r2 = r_squared(&gaps.iter().map(|&n| n as f64).collect::<Vec<_>>(), &logs);
        out.push(Case {
            name: format!("beta={beta:.4}: 1 - R^2 of log-linear fit"),
            max_rel_err: 1.0 - r2,
            tol: 1e-3,
        });
    }
    Ok(out)
}

/// Coefficient of determination of the least-squares line through `(x, y)`.
pub fn r_squared(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    if syy == 0.0 {
        return 1.0;
    }
    let slope = sxy / sxx;
    let ss_res: f64 = x.iter().zip(y).map(|(a, b)| (b - my - slope * (a - mx)).powi(2)).sum();
    1.0 - ss_res / syy
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suites_pass_on_default_seed() {
        for suite in [Suite::RelaxedFd, Suite::RtrlVsBptt, Suite::SpikepropFd, Suite::BetaPower] {
            let cases = run_suite(suite, 0).unwrap();
            assert!(!cases.is_empty());
            for c in &cases {
                assert!(c.passed(), "{}: {} {} >= {}", suite.name(), c.name, c.max_rel_err, c.tol);
            }
        }
    }

    #[test]
    fn gap_contribution_is_beta_power() {
        for n in [0, 1, 5, 12] {
            let c = gap_contribution(0.8, n).unwrap();
            assert!((c - 0.8f64.powi(n as i32)).abs() < 1e-12);
        }
    }

    #[test]
    fn r_squared_of_a_line_is_one() {
        assert!((r_squared(&[0.0, 1.0, 2.0], &[1.0, 3.0, 5.0]) - 1.0).abs() < 1e-15);
        assert!(r_squared(&[0.0, 1.0, 2.0], &[1.0, 0.0, 1.0]) < 0.5);
    }
}
