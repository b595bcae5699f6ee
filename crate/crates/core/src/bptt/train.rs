use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use rayon::prelude::*;

use super::{backward, forward, BackwardOptions, DirectGrads, Feedback, ForwardRecord, Gradients, Network};
use super::{optimizer_step, OptimizerKind, OptimizerState};
use crate::error::{Error, Result};
use crate::harness::dataset::{Dataset, Sample};
use crate::objectives::{regularize, ObjectiveSpec, RegularizerSpec};
use crate::rng::seeded;
use crate::surrogate::SurrogateKind;

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub objective: ObjectiveSpec,
    pub reg: RegularizerSpec,
    pub surrogate: SurrogateKind,
    pub feedback: Feedback,
    pub detach_reset: bool,
    pub optimizer: OptimizerKind,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    /// Worker threads for per-sample gradients. Results do not depend on it.
    pub threads: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            objective: ObjectiveSpec::CeSpikeRate,
            reg: RegularizerSpec::default(),
            surrogate: SurrogateKind::default(),
            feedback: Feedback::Symmetric,
            detach_reset: true,
            optimizer: OptimizerKind::adam(1e-3),
            epochs: 10,
            batch_size: 16,
            seed: 0,
            threads: 1,
        }
    }
}

impl TrainConfig {
    pub fn backward_options(&self) -> BackwardOptions {
        BackwardOptions {
            surrogate: self.surrogate,
            feedback: self.feedback,
            detach_reset: self.detach_reset,
        }
    }
}

/// One row of training history.
#[derive(Clone, Debug, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    /// Mean per-sample loss (objective plus regularisers) seen during the epoch.
    pub loss: f64,
    /// Training accuracy of the predictions made during the epoch.
    pub accuracy: f64,
    /// Spikes emitted by all layers over the epoch.
    pub total_spikes: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalStats {
    pub loss: f64,
    pub accuracy: f64,
    /// Mean spike count of every neuron per sample, indexed `[layer][neuron]`.
    pub mean_counts: Vec<Vec<f64>>,
}

impl EvalStats {
    /// Smallest mean spike count among the non-output layers' neurons, or
    /// `None` for a single-layer network.
    pub fn min_hidden_count(&self) -> Option<f64> {
        let n = self.mean_counts.len();
        self.mean_counts[..n.saturating_sub(1)]
            .iter()
            .flatten()
            .copied()
            .reduce(f64::min)
    }
}

/// Result of one sample's forward and backward pass.
#[derive(Clone, Debug)]
pub struct SampleResult {
    pub loss: f64,
    pub correct: bool,
    pub spikes: f64,
    pub grads: Gradients,
}

fn sample_loss(
    record: &ForwardRecord,
    sample: &Sample,
    objective: &ObjectiveSpec,
    reg: &RegularizerSpec,
) -> Result<(f64, DirectGrads, bool)> {
    let out = record.output();
    let value = objective.evaluate(&out.membrane, &out.spikes, sample.label)?;
    let correct = objective.predict(&out.membrane, &out.spikes)? == sample.label;
    let mut direct = DirectGrads::output(record, value.d_spikes, value.d_membrane);
    let mut loss = value.loss;
    if !reg.is_inactive() {
        let counts: Vec<Vec<f64>> = record.layers.iter().map(|l| l.counts()).collect();
        let (penalty, dc) = regularize(&counts, reg)?;
        loss += penalty;
        for (d, g) in direct.d_spikes.iter_mut().zip(&dc) {
            // a count is the sum over steps, so its gradient lands on every step
            for mut row in d.axis_iter_mut(Axis(0)) {
                row.iter_mut().zip(g).for_each(|(x, gi)| *x += gi);
            }
        }
    }
    Ok((loss, direct, correct))
}

/// Loss and parameter gradients for one sample.
pub fn sample_gradients(model: &Network, sample: &Sample, cfg: &TrainConfig) -> Result<SampleResult> {
    let record = forward(model, &sample.input)?;
    let (loss, direct, correct) = sample_loss(&record, sample, &cfg.objective, &cfg.reg)?;
    let grads = backward(model, &record, &direct, &cfg.backward_options())?;
    Ok(SampleResult {
        loss,
        correct,
        spikes: record.total_spikes(),
        grads,
    })
}

fn thread_pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::config("threads", e.to_string()))
}

/// Mini-batch training by backpropagation through time.
///
/// Samples are shuffled each epoch from `cfg.seed`; per-sample gradients are
/// computed in parallel and summed in batch order, so the result is the same
/// for any thread count.
pub fn train_bptt(model: &mut Network, data: &Dataset, cfg: &TrainConfig) -> Result<Vec<EpochStats>> {
    if data.is_empty() {
        return Err(Error::arg("training needs a non-empty dataset"));
    }
    if cfg.batch_size == 0 {
        return Err(Error::config("trainer.batch_size", "must be at least 1"));
    }
    cfg.reg.validate()?;
    if cfg.feedback == Feedback::RandomFixed && model.layers.iter().skip(1).any(|l| l.feedback_b.is_none()) {
        return Err(Error::config(
            "trainer.feedback",
            "random feedback needs a feedback matrix on every layer above the first",
        ));
    }
    let pool = thread_pool(cfg.threads)?;
    let mut opt = OptimizerState::new(cfg.optimizer)?;
    let mut rng = seeded(cfg.seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut history = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut losses = vec![0.0; data.len()];
        let mut correct = 0usize;
        let mut spikes = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let snapshot = &*model;
            let results: Vec<Result<SampleResult>> = pool.install(|| {
                batch
                    .par_iter()
                    .map(|&k| sample_gradients(snapshot, &data.samples[k], cfg))
                    .collect()
            });
            let mut total = Gradients::zeros_like(model);
            for (&k, r) in batch.iter().zip(results) {
                let r = r?;
                losses[k] = r.loss;
                correct += r.correct as usize;
                spikes += r.spikes;
                total.add_assign(&r.grads);
            }
            total.scale(1.0 / batch.len() as f64);
            let flat = total.flat();
            optimizer_step(&mut model.param_slices_mut(), &flat, &mut opt)?;
            model.clamp_beta();
        }
        history.push(EpochStats {
            epoch,
            loss: losses.iter().sum::<f64>() / data.len() as f64,
            accuracy: correct as f64 / data.len() as f64,
            total_spikes: spikes,
        });
    }
    Ok(history)
}

/// Loss (objective plus regularisers), accuracy and mean spike counts over a
/// dataset without updating the model.
pub fn evaluate(model: &Network, data: &Dataset, objective: &ObjectiveSpec, reg: &RegularizerSpec) -> Result<EvalStats> {
    if data.is_empty() {
        return Err(Error::arg("evaluation needs a non-empty dataset"));
    }
    let mut loss = 0.0;
    let mut correct = 0usize;
    let mut counts: Vec<Vec<f64>> = model.layers.iter().map(|l| vec![0.0; l.n_out()]).collect();
    for sample in &data.samples {
        let record = forward(model, &sample.input)?;
        let (l, _, ok) = sample_loss(&record, sample, objective, reg)?;
        loss += l;
        correct += ok as usize;
        for (acc, layer) in counts.iter_mut().zip(&record.layers) {
            acc.iter_mut().zip(layer.counts()).for_each(|(a, c)| *a += c);
        }
    }
    let n = data.len() as f64;
    counts.iter_mut().flatten().for_each(|c| *c /= n);
    Ok(EvalStats {
        loss: loss / n,
        accuracy: correct as f64 / n,
        mean_counts: counts,
    })
}

/// Output spike matrix for each sample, handy for inspection.
pub fn output_rasters(model: &Network, data: &Dataset) -> Result<Vec<Array2<f64>>> {
    data.samples
        .iter()
        .map(|s| Ok(forward(model, &s.input)?.output().spikes.clone()))
        .collect()
}
