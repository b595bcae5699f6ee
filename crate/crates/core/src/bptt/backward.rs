use ndarray::{Array1, Array2, Axis};

use super::{ForwardRecord, Network};
use crate::error::{check_dim, Error, Result};
use crate::neuron::{ResetMode, SpikeFn};
use crate::surrogate::{surrogate_grad, SurrogateKind};

/// How errors travel from a layer to the one below it.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Feedback {
    /// Through the transposed forward weights.
    Symmetric,
    /// Through each layer's fixed `feedback_b` matrix.
    RandomFixed,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BackwardOptions {
    pub surrogate: SurrogateKind,
    pub feedback: Feedback,
    /// Cut the gradient path through the reset term.
    pub detach_reset: bool,
}

impl Default for BackwardOptions {
    fn default() -> Self {
        Self {
            surrogate: SurrogateKind::default(),
            feedback: Feedback::Symmetric,
            detach_reset: true,
        }
    }
}

/// Loss gradients applied directly to each layer's spikes and membrane
/// (`T x N` per layer). Usually only the output layer is nonzero; activity
/// regularisers touch hidden layers too.
#[derive(Clone, Debug, PartialEq)]
pub struct DirectGrads {
    pub d_spikes: Vec<Array2<f64>>,
    pub d_membrane: Vec<Array2<f64>>,
}

impl DirectGrads {
    pub fn zeros(record: &ForwardRecord) -> Self {
        let shapes: Vec<_> = record.layers.iter().map(|l| l.spikes.dim()).collect();
        Self {
            d_spikes: shapes.iter().map(|&s| Array2::zeros(s)).collect(),
            d_membrane: shapes.iter().map(|&s| Array2::zeros(s)).collect(),
        }
    }

    /// Zero everywhere except the given output-layer gradients.
    pub fn output(record: &ForwardRecord, d_spikes: Array2<f64>, d_membrane: Array2<f64>) -> Self {
        let mut g = Self::zeros(record);
        let last = g.d_spikes.len() - 1;
        g.d_spikes[last] = d_spikes;
        g.d_membrane[last] = d_membrane;
        g
    }
}

/// Gradients of one layer's parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerGradients {
    pub dw: Array2<f64>,
    pub dv: Option<Array2<f64>>,
    /// Present only when the layer's `beta` is learnable.
    pub dbeta: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub layers: Vec<LayerGradients>,
}

impl Gradients {
    pub fn zeros_like(net: &Network) -> Self {
        Self {
            layers: net
                .layers
                .iter()
                .map(|l| LayerGradients {
                    dw: Array2::zeros(l.w.dim()),
                    dv: l.v.as_ref().map(|v| Array2::zeros(v.dim())),
                    dbeta: l.lif.learn_beta.then_some(0.0),
                })
                .collect(),
        }
    }

    pub fn add_assign(&mut self, other: &Gradients) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            a.dw += &b.dw;
            if let (Some(x), Some(y)) = (a.dv.as_mut(), b.dv.as_ref()) {
                *x += y;
            }
            if let (Some(x), Some(y)) = (a.dbeta.as_mut(), b.dbeta) {
                *x += y;
            }
        }
    }

    pub fn scale(&mut self, k: f64) {
        for g in &mut self.layers {
            g.dw *= k;
            if let Some(v) = g.dv.as_mut() {
                *v *= k;
            }
            if let Some(b) = g.dbeta.as_mut() {
                *b *= k;
            }
        }
    }

    /// Buffers in the order of [`Network::param_slices_mut`].
    pub fn flat(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = Vec::new();
        for g in &self.layers {
            out.push(g.dw.as_slice().expect("standard layout"));
            if let Some(v) = &g.dv {
                out.push(v.as_slice().expect("standard layout"));
            }
            if let Some(b) = &g.dbeta {
                out.push(std::slice::from_ref(b));
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.flat()
            .iter()
            .flat_map(|s| s.iter())
            .fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Adjoint of the unrolled network.
///
/// Walking each layer backwards in time, with `P[t] = beta U[t-1] + I[t]`:
///
/// ```text
/// gS[t] = dL/dS[t] (direct + from the layer above)
///       + V^T gP[t+1]                      (explicit recurrence)
///       - theta0 gU[t+1]   or  -P[t+1] gU[t+1]   (reset, unless detached)
/// gU[t] = dL/dU[t] + surrogate(U[t]) gS[t] + beta gP[t+1]
/// gP[t] = gU[t] * (1 - S[t-1] in zero-reset mode, else 1)
/// dW   += gP[t] X[t]^T,  dV += gP[t] S[t-1]^T,  dbeta += gP[t] . U[t-1]
/// ```
///
/// The error sent to the layer below is `W^T gP[t]` or `B gP[t]`.
/// Threshold adaptation is treated as a constant offset here.
pub fn backward(
    model: &Network,
    record: &ForwardRecord,
    direct: &DirectGrads,
    opts: &BackwardOptions,
) -> Result<Gradients> {
    run_backward(model, record, direct, opts, None)
}

/// Per-step contributions `gP[s] X[s]^T` to `dW` of layer `layer`. Their sum
/// over `s` is the `dw` returned by [`backward`].
pub fn weight_contributions(
    model: &Network,
    record: &ForwardRecord,
    direct: &DirectGrads,
    opts: &BackwardOptions,
    layer: usize,
) -> Result<Vec<Array2<f64>>> {
    let mut steps = Vec::new();
    run_backward(model, record, direct, opts, Some((layer, &mut steps)))?;
    steps.reverse();
    Ok(steps)
}

fn run_backward(
    model: &Network,
    record: &ForwardRecord,
    direct: &DirectGrads,
    opts: &BackwardOptions,
    mut per_step: Option<(usize, &mut Vec<Array2<f64>>)>,
) -> Result<Gradients> {
    let n_layers = model.layers.len();
    check_dim("forward record layers", n_layers, record.layers.len())?;
    check_dim("direct spike gradients", n_layers, direct.d_spikes.len())?;
    check_dim("direct membrane gradients", n_layers, direct.d_membrane.len())?;
    if opts.feedback == Feedback::RandomFixed {
        for (l, layer) in model.layers.iter().enumerate().skip(1) {
            if layer.feedback_b.is_none() {
                return Err(Error::config(
                    "trainer.feedback",
                    format!("random feedback requested but layer {l} has no feedback matrix"),
                ));
            }
        }
    }
    let t_steps = record.t_steps();
    let mut grads = Gradients::zeros_like(model);
    // error arriving from the layer above, dL/dS of the current layer
    let mut from_above: Option<Array2<f64>> = None;

    for l in (0..n_layers).rev() {
        let layer = &model.layers[l];
        let rec = &record.layers[l];
        let n = layer.n_out();
        if direct.d_spikes[l].dim() != rec.spikes.dim() || direct.d_membrane[l].dim() != rec.spikes.dim() {
            return Err(Error::arg(format!("direct gradient shape mismatch at layer {l}")));
        }
        let beta = layer.lif.beta;
        let theta0 = layer.lif.theta0;
        let mode = layer.lif.reset_mode;
        let mut g_below = Array2::zeros((t_steps, layer.n_in()));
        let mut gu_next: Array1<f64> = Array1::zeros(n);
        let mut gp_next: Array1<f64> = Array1::zeros(n);
        let lg = &mut grads.layers[l];

        for t in (0..t_steps).rev() {
            let mut gs = direct.d_spikes[l].row(t).to_owned();
            if let Some(above) = &from_above {
                gs += &above.row(t);
            }
            if t + 1 < t_steps {
                if let Some(v) = &layer.v {
                    gs += &v.t().dot(&gp_next);
                }
                if !opts.detach_reset {
                    match mode {
                        ResetMode::Subtract => gs.scaled_add(-theta0, &gu_next),
                        ResetMode::Zero => {
                            gs -= &(&rec.pre_reset.row(t + 1) * &gu_next);
                        }
                        ResetMode::None => {}
                    }
                }
            }
            let mut gu = direct.d_membrane[l].row(t).to_owned();
            for j in 0..n {
                let u = rec.membrane[[t, j]];
                let s = rec.spikes[[t, j]];
                let ds_du = match record.spike_fn {
                    SpikeFn::Heaviside => surrogate_grad(opts.surrogate, u, rec.threshold[[t, j]], s),
                    SpikeFn::Sigmoid { slope } => slope * s * (1.0 - s),
                };
                gu[j] += ds_du * gs[j];
            }
            if t + 1 < t_steps {
                gu.scaled_add(beta, &gp_next);
            }
            let mut gp = gu.clone();
            if mode == ResetMode::Zero && t > 0 {
                gp *= &rec.spikes.row(t - 1).mapv(|s| 1.0 - s);
            }

            let x = rec.input.row(t);
            let contrib = outer(&gp, &x);
            lg.dw += &contrib;
            if let Some((target, steps)) = per_step.as_mut() {
                if *target == l {
                    steps.push(contrib);
                }
            }
            if t > 0 {
                if let Some(dv) = lg.dv.as_mut() {
                    *dv += &outer(&gp, &rec.spikes.row(t - 1));
                }
                if let Some(db) = lg.dbeta.as_mut() {
                    *db += gp.dot(&rec.membrane.row(t - 1));
                }
            }
            if l > 0 {
                let down = match opts.feedback {
                    Feedback::Symmetric => layer.w.t().dot(&gp),
                    Feedback::RandomFixed => layer
                        .feedback_b
                        .as_ref()
                        .expect("checked above")
                        .dot(&gp),
                };
                g_below.row_mut(t).assign(&down);
            }
            gu_next = gu;
            gp_next = gp;
        }
        from_above = Some(g_below);
    }
    Ok(grads)
}

fn outer(a: &Array1<f64>, b: &ndarray::ArrayView1<'_, f64>) -> Array2<f64> {
    let col = a.view().insert_axis(Axis(1));
    let row = b.view().insert_axis(Axis(0));
    col.dot(&row)
}
