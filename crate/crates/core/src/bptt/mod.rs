//! Multi-layer spiking networks trained by backpropagation through time.
//!
//! [`forward`] unrolls every layer over the input and keeps the traces the
//! adjoint pass needs; [`backward`] walks the unrolled graph in reverse with a
//! surrogate standing in for the spike derivative.

mod backward;
pub mod checkpoint;
mod optim;
mod train;

pub use backward::{
    backward, weight_contributions, BackwardOptions, DirectGrads, Feedback, Gradients,
    LayerGradients,
};
pub use optim::{optimizer_step, OptimizerKind, OptimizerState};
pub use train::{
    evaluate, output_rasters, sample_gradients, train_bptt, EpochStats, EvalStats, SampleResult,
    TrainConfig,
};

use ndarray::Array2;
use rand::Rng as _;

use crate::error::{check_dim, Error, Result};
use crate::neuron::{advance, LifParams, LifState, SpikeFn};
use crate::raster::SpikeRaster;
use crate::rng::Rng;

/// One fully connected layer of LIF neurons.
#[derive(Clone, Debug, PartialEq)]
pub struct SnnLayer {
    /// Feedforward weights, `N_out x N_in`.
    pub w: Array2<f64>,
    /// Optional explicit recurrence from the layer's own previous spikes,
    /// `N_out x N_out`.
    pub v: Option<Array2<f64>>,
    pub lif: LifParams,
    /// Fixed random matrix (`N_in x N_out`) replacing `w^T` when errors are
    /// sent to the layer below under random feedback. Never trained.
    pub feedback_b: Option<Array2<f64>>,
}

impl SnnLayer {
    pub fn n_in(&self) -> usize {
        self.w.ncols()
    }

    pub fn n_out(&self) -> usize {
        self.w.nrows()
    }

    fn validate(&self) -> Result<()> {
        self.lif.validate()?;
        if self.w.iter().any(|x| !x.is_finite()) {
            return Err(Error::arg("layer weights must be finite"));
        }
        if let Some(v) = &self.v {
            check_dim("recurrent weight rows", self.n_out(), v.nrows())?;
            check_dim("recurrent weight columns", self.n_out(), v.ncols())?;
        }
        if let Some(b) = &self.feedback_b {
            check_dim("feedback matrix rows", self.n_in(), b.nrows())?;
            check_dim("feedback matrix columns", self.n_out(), b.ncols())?;
        }
        Ok(())
    }
}

/// Weights drawn uniformly from `±1/sqrt(fan_in)`.
pub fn uniform_fan_in(rows: usize, cols: usize, fan_in: usize, rng: &mut Rng) -> Array2<f64> {
    let bound = 1.0 / (fan_in.max(1) as f64).sqrt();
    Array2::from_shape_simple_fn((rows, cols), || rng.random_range(-bound..bound))
}

/// A feedforward stack of [`SnnLayer`]s.
#[derive(Clone, Debug, PartialEq)]
pub struct Network {
    pub layers: Vec<SnnLayer>,
}

impl Network {
    pub fn new(layers: Vec<SnnLayer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::arg("a network needs at least one layer"));
        }
        for l in &layers {
            l.validate()?;
        }
        for pair in layers.windows(2) {
            check_dim("layer chain", pair[0].n_out(), pair[1].n_in())?;
        }
        Ok(Self { layers })
    }

    /// Builds a network with layer widths `sizes` (input first), sharing one
    /// set of neuron parameters. Weights use the fan-in uniform scheme;
    /// recurrent matrices are added when `recurrent` is set.
    pub fn init(sizes: &[usize], lif: &LifParams, recurrent: bool, rng: &mut Rng) -> Result<Self> {
        if sizes.len() < 2 {
            return Err(Error::arg("layer sizes need an input and at least one layer"));
        }
        let layers = sizes
            .windows(2)
            .map(|p| SnnLayer {
                w: uniform_fan_in(p[1], p[0], p[0], rng),
                v: recurrent.then(|| uniform_fan_in(p[1], p[1], p[1], rng)),
                lif: lif.clone(),
                feedback_b: None,
            })
            .collect();
        Self::new(layers)
    }

    /// Draws a fixed random feedback matrix for every layer.
    pub fn attach_random_feedback(&mut self, rng: &mut Rng) {
        for layer in &mut self.layers {
            let (n_out, n_in) = layer.w.dim();
            layer.feedback_b = Some(uniform_fan_in(n_in, n_out, n_in, rng));
        }
    }

    pub fn n_inputs(&self) -> usize {
        self.layers[0].n_in()
    }

    pub fn n_outputs(&self) -> usize {
        self.layers.last().map_or(0, SnnLayer::n_out)
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![self.n_inputs()];
        s.extend(self.layers.iter().map(SnnLayer::n_out));
        s
    }

    /// Trainable parameter buffers in a fixed order: per layer `w`, then `v`
    /// when present, then `beta` when learnable.
    pub fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::new();
        for layer in &mut self.layers {
            out.push(layer.w.as_slice_mut().expect("standard layout"));
            if let Some(v) = layer.v.as_mut() {
                out.push(v.as_slice_mut().expect("standard layout"));
            }
            if layer.lif.learn_beta {
                out.push(std::slice::from_mut(&mut layer.lif.beta));
            }
        }
        out
    }

    /// Keeps learnable decay rates inside `(0, 1]`.
    pub(crate) fn clamp_beta(&mut self) {
        for layer in &mut self.layers {
            if layer.lif.learn_beta {
                layer.lif.beta = layer.lif.beta.clamp(1e-6, 1.0);
            }
        }
    }

    pub fn forward(&self, input: &Array2<f64>) -> Result<ForwardRecord> {
        forward_with(self, input, SpikeFn::Heaviside)
    }
}

/// Traces of one layer over `T` steps.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerRecord {
    /// Input fed to the layer, `T x N_in`.
    pub input: Array2<f64>,
    /// Membrane after reset, the value compared against the threshold.
    pub membrane: Array2<f64>,
    /// `beta * U[t-1] + I[t]`, before the reset is applied.
    pub pre_reset: Array2<f64>,
    pub spikes: Array2<f64>,
    /// Effective threshold `theta0 + b[t]` at each step.
    pub threshold: Array2<f64>,
}

impl LayerRecord {
    /// Spikes as a raster. Fails for records produced by a smooth forward pass.
    pub fn raster(&self) -> Result<SpikeRaster> {
        SpikeRaster::from_array(self.spikes.clone())
    }

    pub fn counts(&self) -> Vec<f64> {
        self.spikes.sum_axis(ndarray::Axis(0)).to_vec()
    }
}

/// Everything the backward pass needs from one forward rollout.
#[derive(Clone, Debug, PartialEq)]
pub struct ForwardRecord {
    pub layers: Vec<LayerRecord>,
    pub spike_fn: SpikeFn,
}

impl ForwardRecord {
    pub fn t_steps(&self) -> usize {
        self.layers[0].input.nrows()
    }

    pub fn output(&self) -> &LayerRecord {
        self.layers.last().expect("non-empty network")
    }

    pub fn total_spikes(&self) -> f64 {
        self.layers.iter().map(|l| l.spikes.sum()).sum()
    }
}

/// Runs the network over a `T x N_in` input (spikes or real currents).
pub fn forward(model: &Network, input: &Array2<f64>) -> Result<ForwardRecord> {
    forward_with(model, input, SpikeFn::Heaviside)
}

/// Forward pass with an explicit spike nonlinearity. [`SpikeFn::Sigmoid`]
/// gives a smooth network whose exact gradient [`backward`] reproduces; it
/// exists for gradient verification.
pub fn forward_with(model: &Network, input: &Array2<f64>, spike_fn: SpikeFn) -> Result<ForwardRecord> {
    check_dim("network input width", model.n_inputs(), input.ncols())?;
    let t_steps = input.nrows();
    let mut layers = Vec::with_capacity(model.layers.len());
    let mut x = input.clone();
    for layer in &model.layers {
        let n = layer.n_out();
        let mut state = LifState::zeros(n);
        let mut rec = LayerRecord {
            input: x,
            membrane: Array2::zeros((t_steps, n)),
            pre_reset: Array2::zeros((t_steps, n)),
            spikes: Array2::zeros((t_steps, n)),
            threshold: Array2::zeros((t_steps, n)),
        };
        for t in 0..t_steps {
            let mut current = layer.w.dot(&rec.input.row(t));
            if let Some(v) = &layer.v {
                current += &v.dot(&state.s_prev);
            }
            let out = advance(&mut state, &layer.lif, current.view(), spike_fn);
            rec.membrane.row_mut(t).assign(&state.u);
            rec.spikes.row_mut(t).assign(&state.s_prev);
            rec.pre_reset.row_mut(t).assign(&out.pre_reset);
            rec.threshold.row_mut(t).assign(&out.threshold);
        }
        x = rec.spikes.clone();
        layers.push(rec);
    }
    Ok(ForwardRecord { layers, spike_fn })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neuron::{lif_forward, ResetMode};
    use crate::rng::seeded;
    use ndarray::array;

    #[test]
    fn zero_weights_stay_silent() {
        let mut rng = seeded(3);
        let mut net = Network::init(&[4, 3], &LifParams::default(), false, &mut rng).unwrap();
        net.layers[0].w.fill(0.0);
        let input = Array2::ones((10, 4));
        let rec = net.forward(&input).unwrap();
        assert_eq!(rec.total_spikes(), 0.0);
    }

    #[test]
    fn single_neuron_pulse_trace() {
        let layer = SnnLayer {
            w: array![[1.0]],
            v: None,
            lif: LifParams::new(0.5, 10.0, ResetMode::Subtract).unwrap(),
            feedback_b: None,
        };
        let net = Network::new(vec![layer]).unwrap();
        let mut input = Array2::zeros((5, 1));
        input[[0, 0]] = 1.0;
        let rec = net.forward(&input).unwrap();
        assert_eq!(rec.output().membrane.column(0).to_vec(), vec![1.0, 0.5, 0.25, 0.125, 0.0625]);
    }

    #[test]
    fn two_layer_chain_matches_resimulation() {
        let mut rng = seeded(11);
        let lif = LifParams::new(0.8, 0.4, ResetMode::Subtract).unwrap();
        let net = Network::init(&[5, 4, 3], &lif, false, &mut rng).unwrap();
        let input = Array2::from_shape_fn((20, 5), |(t, i)| ((t * 7 + i * 3) % 4 == 0) as u8 as f64);
        let rec = net.forward(&input).unwrap();
        let (_, s1) = lif_forward(&lif, &input.dot(&net.layers[0].w.t()), None).unwrap();
        assert_eq!(rec.layers[1].input, *s1.as_array());
        let (u2, s2) = lif_forward(&lif, &s1.as_array().dot(&net.layers[1].w.t()), None).unwrap();
        assert_eq!(rec.output().membrane, u2);
        assert_eq!(rec.output().spikes, *s2.as_array());
    }

    #[test]
    fn chain_mismatch_rejected() {
        let lif = LifParams::default();
        let a = SnnLayer { w: Array2::zeros((3, 2)), v: None, lif: lif.clone(), feedback_b: None };
        let b = SnnLayer { w: Array2::zeros((1, 4)), v: None, lif, feedback_b: None };
        assert!(Network::new(vec![a, b]).is_err());
        let mut rng = seeded(1);
        let net = Network::init(&[2, 2], &LifParams::default(), false, &mut rng).unwrap();
        assert!(net.forward(&Array2::zeros((3, 5))).is_err());
    }

    #[test]
    fn init_bounds() {
        let mut rng = seeded(5);
        let net = Network::init(&[16, 8], &LifParams::default(), true, &mut rng).unwrap();
        assert!(net.layers[0].w.iter().all(|w| w.abs() < 0.25));
        assert!(net.layers[0].v.as_ref().unwrap().iter().all(|w| w.abs() < 1.0 / 8f64.sqrt()));
    }
}
