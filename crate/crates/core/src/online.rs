//! Forward-in-time (real-time recurrent) gradients.
//!
//! Each weight `W_ij` carries an influence value `m_ij = dU_j[t]/dW_ij`
//! updated alongside the membrane:
//!
//! ```text
//! m_ij[t] = g_j[t] * (beta * m_ij[t-1] + x_i[t])
//! dL[t]/dW_ij = cbar_j[t] * m_ij[t]
//! ```
//!
//! where `g_j[t]` is `1 - S_j[t-1]` under reset-to-zero and `1` otherwise (the
//! reset term itself is treated as a constant), and `cbar_j[t]` is the
//! immediate credit `dL[t]/dU_j[t]` including the surrogate path through the
//! spike. For a single layer without recurrence the sum over `t` is exactly
//! the BPTT gradient with a detached reset.
//!
//! Deeper networks keep one influence matrix per layer and pass credit down
//! only through the same time step, so hidden-layer gradients are a
//! truncation.

use ndarray::{Array1, Array2, ArrayView1, Axis};

use crate::bptt::{optimizer_step, Network, OptimizerKind, OptimizerState};
use crate::error::{check_dim, Error, Result};
use crate::neuron::{advance, LifState, ResetMode, SpikeFn};
use crate::surrogate::{surrogate_grad, SurrogateKind};

/// Influence values and the gradient accumulated since the last update.
#[derive(Clone, Debug, PartialEq)]
pub struct InfluenceState {
    /// `dU_j/dW_ij`, `N_out x N_in`.
    pub m: Array2<f64>,
    pub grad_acc: Array2<f64>,
}

impl InfluenceState {
    pub fn zeros(n_out: usize, n_in: usize) -> Self {
        Self {
            m: Array2::zeros((n_out, n_in)),
            grad_acc: Array2::zeros((n_out, n_in)),
        }
    }

    /// Clears both the influence and the accumulator for a new sequence.
    pub fn reset(&mut self) {
        self.m.fill(0.0);
        self.grad_acc.fill(0.0);
    }
}

/// `m_ij <- beta * m_ij + x_i` for every postsynaptic `j`.
pub fn influence_step(state: &mut InfluenceState, beta: f64, x: ArrayView1<'_, f64>) -> Result<()> {
    check_dim("influence input", state.m.ncols(), x.len())?;
    for mut row in state.m.axis_iter_mut(Axis(0)) {
        row.zip_mut_with(&x, |m, &xi| *m = beta * *m + xi);
    }
    Ok(())
}

/// Same as [`influence_step`] with each row scaled afterwards by `gate_j`.
fn gated_influence_step(state: &mut InfluenceState, beta: f64, x: ArrayView1<'_, f64>, gate: &Array1<f64>) {
    for (mut row, &g) in state.m.axis_iter_mut(Axis(0)).zip(gate) {
        row.zip_mut_with(&x, |m, &xi| *m = g * (beta * *m + xi));
    }
}

/// `dW_ij = cbar_j * m_ij`.
pub fn online_grad(cbar: ArrayView1<'_, f64>, state: &InfluenceState) -> Result<Array2<f64>> {
    check_dim("immediate credit", state.m.nrows(), cbar.len())?;
    Ok(&state.m * &cbar.insert_axis(Axis(1)))
}

/// Per-step squared-error loss on the output layer.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepLoss {
    /// `sum_j (y_j - U_j[t])^2`.
    Membrane,
    /// `sum_j (y_j - S_j[t])^2`, reaching the membrane through the surrogate.
    Spikes,
}

impl StepLoss {
    /// Loss and its direct gradients `(dL/dU, dL/dS)` at one step.
    pub fn eval(self, u: &Array1<f64>, s: &Array1<f64>, target: ArrayView1<'_, f64>) -> (f64, Array1<f64>, Array1<f64>) {
        let n = u.len();
        let actual = match self {
            StepLoss::Membrane => u,
            StepLoss::Spikes => s,
        };
        let diff = &target - actual;
        let loss = diff.dot(&diff);
        let grad = diff * -2.0;
        match self {
            StepLoss::Membrane => (loss, grad, Array1::zeros(n)),
            StepLoss::Spikes => (loss, Array1::zeros(n), grad),
        }
    }
}

/// When accumulated online gradients are applied.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UpdatePolicy {
    /// One optimizer step at the end of each sequence.
    Deferred,
    /// An optimizer step every `n` steps; leftovers are applied at the end of
    /// the sequence. With Adam, very frequent updates can be unstable.
    PerStep(usize),
}

impl Default for UpdatePolicy {
    fn default() -> Self {
        UpdatePolicy::PerStep(1)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OnlineConfig {
    pub loss: StepLoss,
    pub surrogate: SurrogateKind,
    pub policy: UpdatePolicy,
    pub optimizer: OptimizerKind,
    pub epochs: usize,
}

impl Default for OnlineConfig {
    fn default() -> Self {
        Self {
            loss: StepLoss::Membrane,
            surrogate: SurrogateKind::default(),
            policy: UpdatePolicy::default(),
            optimizer: OptimizerKind::Sgd { lr: 1e-2 },
            epochs: 1,
        }
    }
}

/// A sequence of inputs (`T x N_in`) with per-step output targets (`T x N_out`).
#[derive(Clone, Debug, PartialEq)]
pub struct Stream {
    pub inputs: Array2<f64>,
    pub targets: Array2<f64>,
}

/// Summed loss of each pass over each stream, in order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct OnlineHistory {
    pub sequence_losses: Vec<f64>,
    pub updates: usize,
}

fn check_model(model: &Network) -> Result<()> {
    if model.layers.iter().any(|l| l.v.is_some()) {
        return Err(Error::arg(
            "online learning supports feedforward layers only (no explicit recurrence)",
        ));
    }
    Ok(())
}

type UpdateHook<'a> = (usize, &'a mut dyn FnMut(&mut Network, &mut [InfluenceState]) -> Result<()>);

/// Runs `model` over one stream, accumulating online gradients into
/// `states`. When `on_update` is given it is called with the states whenever
/// the policy asks for an update; it may change the model's weights, which
/// take effect from the next step.
fn run_stream(
    model: &mut Network,
    stream: &Stream,
    loss: StepLoss,
    surrogate: SurrogateKind,
    states: &mut [InfluenceState],
    mut on_update: Option<UpdateHook<'_>>,
) -> Result<f64> {
    check_dim("stream input width", model.n_inputs(), stream.inputs.ncols())?;
    check_dim("stream target width", model.n_outputs(), stream.targets.ncols())?;
    check_dim("stream length", stream.inputs.nrows(), stream.targets.nrows())?;
    let n_layers = model.layers.len();
    let mut lif: Vec<LifState> = model.layers.iter().map(|l| LifState::zeros(l.n_out())).collect();
    let mut total = 0.0;
    for t in 0..stream.inputs.nrows() {
        // forward one step through every layer, updating influences
        let mut x = stream.inputs.row(t).to_owned();
        let mut sg = Vec::with_capacity(n_layers);
        for (l, layer) in model.layers.iter().enumerate() {
            let gate = match layer.lif.reset_mode {
                ResetMode::Zero => lif[l].s_prev.mapv(|s| 1.0 - s),
                _ => Array1::ones(layer.n_out()),
            };
            gated_influence_step(&mut states[l], layer.lif.beta, x.view(), &gate);
            let current = layer.w.dot(&x);
            let out = advance(&mut lif[l], &layer.lif, current.view(), SpikeFn::Heaviside);
            let st = &lif[l];
            sg.push(Array1::from_shape_fn(layer.n_out(), |j| {
                surrogate_grad(surrogate, st.u[j], out.threshold[j], st.s_prev[j])
            }));
            x = st.s_prev.clone();
        }
        // immediate credit, output layer first, then down through W^T
        let last = n_layers - 1;
        let (l_t, du, ds) = loss.eval(&lif[last].u, &lif[last].s_prev, stream.targets.row(t));
        total += l_t;
        let mut cbar = du + &(&ds * &sg[last]);
        for l in (0..n_layers).rev() {
            let g = online_grad(cbar.view(), &states[l])?;
            states[l].grad_acc += &g;
            if l > 0 {
                let to_spikes = model.layers[l].w.t().dot(&cbar);
                cbar = to_spikes * &sg[l - 1];
            }
        }
        if let Some((interval, f)) = on_update.as_mut() {
            if (t + 1) % *interval == 0 {
                f(model, states)?;
            }
        }
    }
    Ok(total)
}

/// Online gradient of the summed per-step loss over one stream, one matrix
/// per layer, computed with the weights held fixed.
pub fn online_gradients(model: &Network, stream: &Stream, loss: StepLoss, surrogate: SurrogateKind) -> Result<(f64, Vec<Array2<f64>>)> {
    check_model(model)?;
    let mut states: Vec<InfluenceState> = model.layers.iter().map(|l| InfluenceState::zeros(l.n_out(), l.n_in())).collect();
    let mut m = model.clone();
    let total = run_stream(&mut m, stream, loss, surrogate, &mut states, None)?;
    Ok((total, states.into_iter().map(|s| s.grad_acc).collect()))
}

fn apply(model: &mut Network, states: &mut [InfluenceState], opt: &mut OptimizerState) -> Result<()> {
    let grads: Vec<&[f64]> = states.iter().map(|s| s.grad_acc.as_slice().expect("standard layout")).collect();
    let mut params: Vec<&mut [f64]> = model
        .layers
        .iter_mut()
        .map(|l| l.w.as_slice_mut().expect("standard layout"))
        .collect();
    optimizer_step(&mut params, &grads, opt)?;
    for s in states.iter_mut() {
        s.grad_acc.fill(0.0);
    }
    Ok(())
}

/// Trains the feedforward weights online. Decay rates are not learned here.
pub fn train_online(model: &mut Network, streams: &[Stream], cfg: &OnlineConfig) -> Result<OnlineHistory> {
    check_model(model)?;
    if streams.is_empty() {
        return Err(Error::arg("online training needs at least one stream"));
    }
    if cfg.policy == UpdatePolicy::PerStep(0) {
        return Err(Error::config("trainer.update_interval", "must be at least 1"));
    }
    let mut opt = OptimizerState::new(cfg.optimizer)?;
    let mut states: Vec<InfluenceState> = model.layers.iter().map(|l| InfluenceState::zeros(l.n_out(), l.n_in())).collect();
    let mut history = OnlineHistory::default();
    let mut updates = 0usize;
    for _ in 0..cfg.epochs {
        for stream in streams {
            states.iter_mut().for_each(InfluenceState::reset);
            let mut step = |m: &mut Network, s: &mut [InfluenceState]| {
                updates += 1;
                apply(m, s, &mut opt)
            };
            let hook: Option<UpdateHook<'_>> = match cfg.policy {
                UpdatePolicy::Deferred => None,
                UpdatePolicy::PerStep(n) => Some((n, &mut step)),
            };
            let loss = run_stream(model, stream, cfg.loss, cfg.surrogate, &mut states, hook)?;
            history.sequence_losses.push(loss);
            let pending = match cfg.policy {
                UpdatePolicy::Deferred => true,
                UpdatePolicy::PerStep(n) => stream.inputs.nrows() % n != 0,
            };
            if pending {
                updates += 1;
                apply(model, &mut states, &mut opt)?;
            }
        }
    }
    history.updates = updates;
    Ok(history)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bptt::{backward, forward, BackwardOptions, DirectGrads};
    use crate::neuron::LifParams;
    use crate::rng::seeded;
    use ndarray::array;
    use rand::Rng as _;

    #[test]
    fn influence_hand_rolled() {
        let mut s = InfluenceState::zeros(1, 1);
        let mut seen = vec![];
        for x in [1.0, 0.0, 1.0] {
            influence_step(&mut s, 0.5, array![x].view()).unwrap();
            seen.push(s.m[[0, 0]]);
        }
        assert_eq!(seen, vec![1.0, 0.5, 1.25]);
        let g = online_grad(array![2.0].view(), &s).unwrap();
        assert_eq!(g[[0, 0]], 2.5);
    }

    #[test]
    fn memoryless_and_decay() {
        let mut s = InfluenceState::zeros(2, 2);
        influence_step(&mut s, 0.0, array![3.0, 4.0].view()).unwrap();
        assert_eq!(s.m, array![[3.0, 4.0], [3.0, 4.0]]);
        influence_step(&mut s, 0.5, array![0.0, 0.0].view()).unwrap();
        assert_eq!(s.m, array![[1.5, 2.0], [1.5, 2.0]]);
        assert_eq!(online_grad(array![0.0, 0.0].view(), &s).unwrap(), Array2::zeros((2, 2)));
        assert!(influence_step(&mut s, 0.5, array![1.0].view()).is_err());
    }

    fn random_case(seed: u64, mode: ResetMode) -> (Network, Stream) {
        let mut rng = seeded(seed);
        let lif = LifParams::new(rng.random_range(0.5..0.99), rng.random_range(0.2..1.0), mode).unwrap();
        let net = Network::init(&[5, 3], &lif, false, &mut rng).unwrap();
        let t = 20;
        let inputs = Array2::from_shape_fn((t, 5), |_| (rng.random::<f64>() < 0.5) as u8 as f64 * 1.5);
        let targets = Array2::from_shape_fn((t, 3), |_| rng.random_range(-0.5..1.0));
        (net, Stream { inputs, targets })
    }

    fn bptt_grad(net: &Network, stream: &Stream, loss: StepLoss, surrogate: SurrogateKind) -> Array2<f64> {
        let rec = forward(net, &stream.inputs).unwrap();
        let out = rec.output();
        let diff = &stream.targets - match loss {
            StepLoss::Membrane => &out.membrane,
            StepLoss::Spikes => &out.spikes,
        };
        let g = diff * -2.0;
        let zeros = Array2::zeros(g.dim());
        let direct = match loss {
            StepLoss::Membrane => DirectGrads::output(&rec, zeros, g),
            StepLoss::Spikes => DirectGrads::output(&rec, g, zeros),
        };
        let opts = BackwardOptions { surrogate, ..Default::default() };
        backward(net, &rec, &direct, &opts).unwrap().layers[0].dw.clone()
    }

    #[test]
    fn single_layer_matches_bptt() {
        for (seed, mode, loss) in [
            (1, ResetMode::Subtract, StepLoss::Membrane),
            (2, ResetMode::Zero, StepLoss::Membrane),
            (3, ResetMode::Subtract, StepLoss::Spikes),
            (4, ResetMode::Zero, StepLoss::Spikes),
        ] {
            let (net, stream) = random_case(seed, mode);
            let sur = SurrogateKind::FastSigmoid { slope: 5.0 };
            let (_, online) = online_gradients(&net, &stream, loss, sur).unwrap();
            let bptt = bptt_grad(&net, &stream, loss, sur);
            let scale = bptt.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let err = (&online[0] - &bptt).iter().fold(0.0f64, |m, v| m.max(v.abs()));
            assert!(err <= 1e-9 * scale.max(1e-300), "seed {seed}: {err} vs {scale}");
        }
    }

    #[test]
    fn deferred_equals_one_sgd_step_on_bptt_gradient() {
        let (mut net, stream) = random_case(7, ResetMode::Subtract);
        let lr = 0.05;
        let expected = &net.layers[0].w - &(bptt_grad(&net, &stream, StepLoss::Membrane, SurrogateKind::default()) * lr);
        let cfg = OnlineConfig {
            policy: UpdatePolicy::Deferred,
            optimizer: OptimizerKind::Sgd { lr },
            ..Default::default()
        };
        train_online(&mut net, &[stream], &cfg).unwrap();
        let err = (&net.layers[0].w - &expected).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(err < 1e-9);
    }

    #[test]
    fn huge_interval_is_deferred_and_lr_zero_is_frozen() {
        let (net, stream) = random_case(9, ResetMode::Subtract);
        let base = OnlineConfig { optimizer: OptimizerKind::adam(1e-2), epochs: 3, ..Default::default() };
        let mut a = net.clone();
        let mut b = net.clone();
        let ha = train_online(&mut a, std::slice::from_ref(&stream), &OnlineConfig { policy: UpdatePolicy::Deferred, ..base.clone() }).unwrap();
        let hb = train_online(&mut b, std::slice::from_ref(&stream), &OnlineConfig { policy: UpdatePolicy::PerStep(usize::MAX), ..base.clone() }).unwrap();
        assert_eq!(a, b);
        assert_eq!(ha, hb);
        let mut c = net.clone();
        train_online(&mut c, &[stream], &OnlineConfig { optimizer: OptimizerKind::Sgd { lr: 0.0 }, ..base }).unwrap();
        assert_eq!(c, net);
    }

    #[test]
    fn per_step_updates_reduce_membrane_error() {
        let (mut net, stream) = random_case(11, ResetMode::Subtract);
        let cfg = OnlineConfig { optimizer: OptimizerKind::Sgd { lr: 2e-3 }, epochs: 30, ..Default::default() };
        let h = train_online(&mut net, &[stream], &cfg).unwrap();
        assert_eq!(h.updates, 30 * 20);
        assert!(h.sequence_losses.last().unwrap() < &h.sequence_losses[0]);
    }

    #[test]
    fn recurrent_layers_rejected() {
        let mut rng = seeded(1);
        let net = Network::init(&[2, 2], &LifParams::default(), true, &mut rng).unwrap();
        let s = Stream { inputs: Array2::zeros((3, 2)), targets: Array2::zeros((3, 2)) };
        assert!(online_gradients(&net, &s, StepLoss::Membrane, SurrogateKind::default()).is_err());
    }
}
