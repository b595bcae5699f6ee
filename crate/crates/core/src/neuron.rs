//! Discrete-time leaky integrate-and-fire dynamics.
//!
//! One step of a layer computes
//!
//! ```text
//! P[t] = beta * U[t-1] + I[t]
//! U[t] = P[t] - theta0 * S[t-1]          (Subtract)
//!      = P[t] * (1 - S[t-1])             (Zero)
//!      = P[t]                            (None)
//! S[t] = 1 if U[t] > theta0 + b[t] else 0
//! b[t+1] = alpha * b[t] + (1 - alpha) * S[t]
//! ```
//!
//! `I[t]` is the already-weighted input current; the `(1 - beta)` input gain of
//! the Euler discretisation is folded into the weights.

use ndarray::{Array1, Array2, ArrayView1};

use crate::error::{check_dim, Error, Result};
use crate::raster::SpikeRaster;

/// Membrane potential over time, `T x N`.
pub type MembraneTrace = Array2<f64>;

/// How the membrane is lowered after a spike.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ResetMode {
    /// Subtract the threshold, keeping any superthreshold residue.
    Subtract,
    /// Force the membrane to zero.
    Zero,
    /// No reset at all.
    None,
}

impl ResetMode {
    pub fn as_str(self) -> &'static str {
        match self {
            ResetMode::Subtract => "subtract",
            ResetMode::Zero => "zero",
            ResetMode::None => "none",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "subtract" => Some(ResetMode::Subtract),
            "zero" => Some(ResetMode::Zero),
            "none" => Some(ResetMode::None),
            _ => None,
        }
    }
}

/// Per-layer neuron constants.
#[derive(Clone, Debug, PartialEq)]
pub struct LifParams {
    /// Membrane decay per step, in `(0, 1]`.
    pub beta: f64,
    /// Steady-state firing threshold.
    pub theta0: f64,
    pub reset_mode: ResetMode,
    /// Threshold adaptation decay in `[0, 1)`; `0` disables adaptation.
    pub adapt_alpha: f64,
    /// Whether training updates `beta`.
    pub learn_beta: bool,
}

impl Default for LifParams {
    fn default() -> Self {
        Self {
            beta: 0.9,
            theta0: 1.0,
            reset_mode: ResetMode::Subtract,
            adapt_alpha: 0.0,
            learn_beta: false,
        }
    }
}

impl LifParams {
    pub fn new(beta: f64, theta0: f64, reset_mode: ResetMode) -> Result<Self> {
        let p = Self {
            beta,
            theta0,
            reset_mode,
            ..Self::default()
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_adaptation(mut self, alpha: f64) -> Result<Self> {
        self.adapt_alpha = alpha;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return Err(Error::arg(format!("beta must lie in (0, 1], got {}", self.beta)));
        }
        if !(self.theta0 > 0.0 && self.theta0.is_finite()) {
            return Err(Error::arg(format!("theta0 must be positive, got {}", self.theta0)));
        }
        if !(0.0..1.0).contains(&self.adapt_alpha) {
            return Err(Error::arg(format!(
                "adapt_alpha must lie in [0, 1), got {}",
                self.adapt_alpha
            )));
        }
        Ok(())
    }
}

/// Evolving state of a layer of `N` neurons.
#[derive(Clone, Debug, PartialEq)]
pub struct LifState {
    pub u: Array1<f64>,
    /// Adaptive threshold offset.
    pub b: Array1<f64>,
    pub s_prev: Array1<f64>,
}

impl LifState {
    /// Resting state: zero membrane, zero threshold offset, no prior spikes.
    pub fn zeros(n: usize) -> Self {
        Self {
            u: Array1::zeros(n),
            b: Array1::zeros(n),
            s_prev: Array1::zeros(n),
        }
    }

    pub fn with_membrane(u0: Array1<f64>) -> Self {
        let n = u0.len();
        Self {
            u: u0,
            b: Array1::zeros(n),
            s_prev: Array1::zeros(n),
        }
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }
}

/// Spike nonlinearity used by the forward pass.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SpikeFn {
    /// `S = 1` iff `U > threshold`.
    Heaviside,
    /// `S = sigmoid(slope * (U - threshold))`; a smooth stand-in used for
    /// gradient verification.
    Sigmoid { slope: f64 },
}

impl SpikeFn {
    #[inline]
    pub fn eval(self, u: f64, threshold: f64) -> f64 {
        match self {
            SpikeFn::Heaviside => {
                if u > threshold {
                    1.0
                } else {
                    0.0
                }
            }
            SpikeFn::Sigmoid { slope } => sigmoid(slope * (u - threshold)),
        }
    }
}

#[inline]
pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Everything one step produces; the pre-reset and threshold values are
/// needed by the backward pass.
#[derive(Clone, Debug)]
pub(crate) struct StepOutput {
    pub pre_reset: Array1<f64>,
    pub threshold: Array1<f64>,
}

/// Advances `state` by one step in place and returns the auxiliary values.
pub(crate) fn advance(
    state: &mut LifState,
    params: &LifParams,
    current: ArrayView1<'_, f64>,
    spike_fn: SpikeFn,
) -> StepOutput {
    let n = state.u.len();
    let mut pre_reset = Array1::zeros(n);
    let mut threshold = Array1::zeros(n);
    let adapt = params.adapt_alpha > 0.0;
    for j in 0..n {
        let p = params.beta * state.u[j] + current[j];
        let s_prev = state.s_prev[j];
        let u = match params.reset_mode {
            ResetMode::Subtract => p - params.theta0 * s_prev,
            ResetMode::Zero => p * (1.0 - s_prev),
            ResetMode::None => p,
        };
        let thr = params.theta0 + state.b[j];
        let s = spike_fn.eval(u, thr);
        if adapt {
            state.b[j] = params.adapt_alpha * state.b[j] + (1.0 - params.adapt_alpha) * s;
        }
        state.u[j] = u;
        state.s_prev[j] = s;
        pre_reset[j] = p;
        threshold[j] = thr;
    }
    StepOutput {
        pre_reset,
        threshold,
    }
}

/// Decay rate for time constant `tau` sampled at step `dt`: `exp(-dt / tau)`.
pub fn beta_from_tau(tau: f64, dt: f64) -> Result<f64> {
    if !(tau > 0.0) || !(dt > 0.0) {
        return Err(Error::arg(format!(
            "tau and dt must be positive, got tau={tau} dt={dt}"
        )));
    }
    Ok((-dt / tau).exp())
}

/// One step of a layer. Returns the new state and the emitted spikes.
pub fn lif_step(
    state: &LifState,
    params: &LifParams,
    weighted_input: ArrayView1<'_, f64>,
) -> Result<(LifState, Array1<f64>)> {
    check_dim("lif_step input", state.len(), weighted_input.len())?;
    check_dim("lif_step threshold offset", state.len(), state.b.len())?;
    check_dim("lif_step previous spikes", state.len(), state.s_prev.len())?;
    let mut next = state.clone();
    advance(&mut next, params, weighted_input, SpikeFn::Heaviside);
    let spikes = next.s_prev.clone();
    Ok((next, spikes))
}

/// Rolls [`lif_step`] over every row of `inputs` (a `T x N` current matrix),
/// recording the membrane (the value compared against the threshold) and the
/// spikes at each step.
pub fn lif_forward(
    params: &LifParams,
    inputs: &Array2<f64>,
    u0: Option<Array1<f64>>,
) -> Result<(MembraneTrace, SpikeRaster)> {
    let (t_steps, n) = inputs.dim();
    let mut state = match u0 {
        Some(u0) => {
            check_dim("lif_forward initial membrane", n, u0.len())?;
            if u0.iter().any(|v| !v.is_finite()) {
                return Err(Error::arg("initial membrane must be finite"));
            }
            LifState::with_membrane(u0)
        }
        None => LifState::zeros(n),
    };
    let mut trace = Array2::zeros((t_steps, n));
    let mut spikes = Array2::zeros((t_steps, n));
    for t in 0..t_steps {
        advance(&mut state, params, inputs.row(t), SpikeFn::Heaviside);
        trace.row_mut(t).assign(&state.u);
        spikes.row_mut(t).assign(&state.s_prev);
    }
    Ok((trace, SpikeRaster::from_array(spikes)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;

    fn params(beta: f64, theta0: f64, reset_mode: ResetMode) -> LifParams {
        LifParams::new(beta, theta0, reset_mode).unwrap()
    }

    #[test]
    fn beta_from_tau_values() {
        assert!((beta_from_tau(2.0, 1.0).unwrap() - 0.606_530_659_712_633_4).abs() < 1e-15);
        assert!((beta_from_tau(1.0, 1.0).unwrap() - 0.367_879_441_171_442_3).abs() < 1e-15);
        assert!((beta_from_tau(1e12, 1.0).unwrap() - 1.0).abs() < 1e-11);
        assert!(beta_from_tau(0.0, 1.0).is_err());
        assert!(beta_from_tau(1.0, -1.0).is_err());
    }

    #[test]
    fn params_validation() {
        assert!(LifParams::new(0.0, 1.0, ResetMode::Subtract).is_err());
        assert!(LifParams::new(1.1, 1.0, ResetMode::Subtract).is_err());
        assert!(LifParams::new(1.0, 1.0, ResetMode::Subtract).is_ok());
        assert!(LifParams::new(0.5, 0.0, ResetMode::Subtract).is_err());
        assert!(params(0.5, 1.0, ResetMode::Zero).with_adaptation(1.0).is_err());
    }

    #[test]
    fn subtract_step_then_reset() {
        let p = params(0.5, 0.5, ResetMode::Subtract);
        let s0 = LifState::with_membrane(array![1.0]);
        let (s1, spk) = lif_step(&s0, &p, array![0.3].view()).unwrap();
        assert!((s1.u[0] - 0.8).abs() < 1e-15);
        assert_eq!(spk[0], 1.0);
        // next step: 0.5 * 0.8 + 0 - 0.5
        let (s2, spk) = lif_step(&s1, &p, array![0.0].view()).unwrap();
        assert!((s2.u[0] - (-0.1)).abs() < 1e-15);
        assert_eq!(spk[0], 0.0);
    }

    #[test]
    fn zero_state_zero_input_stays_silent() {
        let p = params(0.37, 1.0, ResetMode::Subtract);
        let (s, spk) = lif_step(&LifState::zeros(3), &p, Array1::zeros(3).view()).unwrap();
        assert_eq!(s.u, Array1::<f64>::zeros(3));
        assert_eq!(spk, Array1::<f64>::zeros(3));
    }

    #[test]
    fn zero_mode_clears_after_spike() {
        let p = params(0.9, 1.0, ResetMode::Zero);
        let state = LifState {
            u: array![0.6],
            b: array![0.0],
            s_prev: array![1.0],
        };
        let (s, spk) = lif_step(&state, &p, array![0.5].view()).unwrap();
        assert_eq!(s.u[0], 0.0);
        assert_eq!(spk[0], 0.0);
    }

    #[test]
    fn threshold_tie_does_not_fire() {
        let p = params(1.0, 1.0, ResetMode::None);
        let (_, spk) = lif_step(&LifState::zeros(1), &p, array![1.0].view()).unwrap();
        assert_eq!(spk[0], 0.0);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let p = LifParams::default();
        assert!(lif_step(&LifState::zeros(2), &p, array![1.0].view()).is_err());
    }

    #[test]
    fn forward_zero_input() {
        let p = LifParams::default();
        let (trace, raster) = lif_forward(&p, &Array2::zeros((7, 3)), None).unwrap();
        assert!(trace.iter().all(|&v| v == 0.0));
        assert_eq!(raster.total(), 0);
    }

    #[test]
    fn forward_constant_input_converges_to_geometric_limit() {
        let beta = 0.8;
        let p = params(beta, 1e9, ResetMode::Subtract);
        let inputs = Array2::from_elem((200, 1), 0.3);
        let (trace, _) = lif_forward(&p, &inputs, None).unwrap();
        let limit = 0.3 / (1.0 - beta);
        assert!((trace[[199, 0]] - limit).abs() < 1e-12);
        // partial sums of the geometric series
        for t in 0..10 {
            let expected = 0.3 * (1.0 - beta.powi(t as i32 + 1)) / (1.0 - beta);
            assert!((trace[[t, 0]] - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn forward_pulse_decays_geometrically() {
        let beta = 0.7;
        let p = params(beta, 1e9, ResetMode::None);
        let mut inputs = Array2::zeros((12, 1));
        inputs[[2, 0]] = 1.5;
        let (trace, _) = lif_forward(&p, &inputs, None).unwrap();
        assert_eq!(trace[[1, 0]], 0.0);
        for k in 0..10 {
            let expected = 1.5 * beta.powi(k);
            assert!((trace[[2 + k as usize, 0]] - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn adaptation_jumps_and_decays() {
        let alpha = 0.8;
        let p = params(0.5, 1.0, ResetMode::Subtract).with_adaptation(alpha).unwrap();
        let mut inputs = Array2::zeros((8, 1));
        inputs[[0, 0]] = 2.0;
        let mut state = LifState::zeros(1);
        let mut bs = Vec::new();
        for t in 0..8 {
            let (next, _) = lif_step(&state, &p, inputs.row(t)).unwrap();
            state = next;
            bs.push(state.b[0]);
        }
        assert!((bs[0] - (1.0 - alpha)).abs() < 1e-15);
        for k in 1..8 {
            assert!(bs[k] >= 0.0);
            assert!((bs[k] - alpha * bs[k - 1]).abs() < 1e-15);
        }
    }

    #[test]
    fn adaptive_threshold_reads_offset_before_update() {
        // a spike at t=0 raises b only from t=1 onwards
        let p = params(1.0, 1.0, ResetMode::None).with_adaptation(0.5).unwrap();
        let (s1, spk) = lif_step(&LifState::zeros(1), &p, array![1.2].view()).unwrap();
        assert_eq!(spk[0], 1.0);
        // u=1.2 now, threshold 1.5 > 1.2 + 0.2
        let (_, spk) = lif_step(&s1, &p, array![0.2].view()).unwrap();
        assert_eq!(spk[0], 0.0);
    }

    proptest! {
        #[test]
        fn subtract_residual_is_exact(u in 1.0f64..5.0, beta in 0.1f64..1.0, theta in 0.1f64..1.0, x in -1.0f64..1.0) {
            let p = params(beta, theta, ResetMode::Subtract);
            let with_spike = LifState { u: array![u], b: array![0.0], s_prev: array![1.0] };
            let without = LifState { u: array![u], b: array![0.0], s_prev: array![0.0] };
            let (a, _) = lif_step(&with_spike, &p, array![x].view()).unwrap();
            let (b, _) = lif_step(&without, &p, array![x].view()).unwrap();
            prop_assert_eq!(a.u[0], b.u[0] - theta);
        }

        #[test]
        fn deterministic(xs in proptest::collection::vec(-2.0f64..2.0, 1..40)) {
            let p = params(0.9, 0.5, ResetMode::Zero);
            let inputs = Array2::from_shape_vec((xs.len(), 1), xs).unwrap();
            let a = lif_forward(&p, &inputs, None).unwrap();
            let b = lif_forward(&p, &inputs, None).unwrap();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn no_spike_regime_is_linear_recurrence(xs in proptest::collection::vec(-1.0f64..1.0, 1..40), beta in 0.05f64..1.0) {
            let p = params(beta, 1e6, ResetMode::Subtract);
            let inputs = Array2::from_shape_vec((xs.len(), 1), xs.clone()).unwrap();
            let (trace, raster) = lif_forward(&p, &inputs, None).unwrap();
            prop_assert_eq!(raster.total(), 0);
            let mut u = 0.0;
            for (t, x) in xs.iter().enumerate() {
                u = beta * u + x;
                prop_assert_eq!(trace[[t, 0]], u);
            }
        }
    }
}
