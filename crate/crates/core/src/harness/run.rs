//! Drivers behind the command-line subcommands. Each one reads its inputs,
//! does the work through the library, and writes CSV and checkpoint
//! artifacts.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use ndarray::{Array1, Array2};

use super::config::{RunConfig, TaskSpec, TrainerKind};
use super::dataset::{gen_latency_task, gen_rate_task, Dataset, Sample};
use super::events::{load_events, save_events};
use crate::bptt::{checkpoint, evaluate, forward, train_bptt, uniform_fan_in, EpochStats, Feedback, Network, SnnLayer, TrainConfig};
use crate::codec::{delta_encode, latency_encode, rate_encode, ClampMode, DeltaParams, LatencyParams, Polarity};
use crate::error::{Error, Result};
use crate::objectives::RegularizerSpec;
use crate::online::{train_online, OnlineConfig, Stream};
use crate::plasticity::{perturbation_train, stdp_delta_w, stdp_update};
use crate::raster::SpikeRaster;
use crate::rng::{seeded, split};
use crate::spikeprop::{self, spike_lists_from_raster, spike_times, train_spikeprop, SpikeLists, SpikePropConfig, SrmNet};

pub const HISTORY_FILE: &str = "history.csv";
pub const CHECKPOINT_FILE: &str = "checkpoint.txt";
pub const RESOLVED_CONFIG_FILE: &str = "config.resolved";
pub const EVAL_FILE: &str = "eval.csv";
pub const EVAL_COUNTS_FILE: &str = "eval_counts.csv";
pub const STDP_CURVE_FILE: &str = "stdp_curve.csv";

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Samples described by the config's task section.
pub fn build_dataset(cfg: &RunConfig) -> Result<Dataset> {
    match &cfg.task {
        TaskSpec::Rate {
            n_inputs,
            t_steps,
            rate_lo,
            rate_hi,
            samples_per_class,
        } => gen_rate_task(cfg.task_seed, *n_inputs, *t_steps, *rate_lo, *rate_hi, *samples_per_class)
            .map_err(|e| Error::config("task", e.to_string())),
        TaskSpec::Latency(p) => gen_latency_task(p)
            .map(|(d, _)| d)
            .map_err(|e| Error::config("task", e.to_string())),
        TaskSpec::Events { manifest, n_classes } => load_manifest(manifest, *n_classes),
    }
}

/// Reads `<event file>,<label>` lines; paths are relative to the manifest.
pub fn load_manifest(manifest: &Path, n_classes: usize) -> Result<Dataset> {
    let text = fs::read_to_string(manifest).map_err(|e| Error::io(manifest, e))?;
    let dir = manifest.parent().unwrap_or(Path::new("."));
    let mut samples = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |msg: String| Error::Parse {
            path: manifest.to_path_buf(),
            line: k + 1,
            msg,
        };
        let (file, label) = line
            .rsplit_once(',')
            .ok_or_else(|| bad(format!("expected `<event file>,<label>`, got {line:?}")))?;
        let label: usize = label
            .trim()
            .parse()
            .map_err(|_| bad(format!("invalid label {label:?}")))?;
        if label >= n_classes {
            return Err(bad(format!("label {label} out of range for {n_classes} classes")));
        }
        let raster = load_events(&dir.join(file.trim()))?;
        samples.push(Sample {
            input: raster.into_array(),
            label,
        });
    }
    if samples.is_empty() {
        return Err(Error::config("task.manifest", "manifest lists no samples"));
    }
    Dataset::new(samples, n_classes).map_err(|e| Error::config("task.manifest", e.to_string()))
}

/// Fresh network for the config, checked against the dataset's shape.
pub fn build_network(cfg: &RunConfig, data: &Dataset) -> Result<Network> {
    let sizes = &cfg.model.layers;
    if sizes[0] != data.n_inputs() {
        return Err(Error::config(
            "model.layers",
            format!("input width {} does not match the task's {} inputs", sizes[0], data.n_inputs()),
        ));
    }
    if *sizes.last().expect("validated") < data.n_classes {
        return Err(Error::config(
            "model.layers",
            format!("output width {} is smaller than the {} classes", sizes.last().unwrap(), data.n_classes),
        ));
    }
    let mut rng = seeded(cfg.seed);
    let layers = sizes
        .windows(2)
        .enumerate()
        .map(|(l, p)| SnnLayer {
            w: uniform_fan_in(p[1], p[0], p[0], &mut rng),
            v: cfg.model.recurrent[l].then(|| uniform_fan_in(p[1], p[1], p[1], &mut rng)),
            lif: cfg.model.lif[l].clone(),
            feedback_b: None,
        })
        .collect();
    let mut net = Network::new(layers)?;
    if cfg.feedback == Feedback::RandomFixed {
        net.attach_random_feedback(&mut split(&mut rng));
    }
    Ok(net)
}

pub fn train_config(cfg: &RunConfig, threads: usize) -> TrainConfig {
    TrainConfig {
        objective: cfg.objective,
        reg: cfg.reg.clone(),
        surrogate: cfg.surrogate,
        feedback: cfg.feedback,
        detach_reset: cfg.detach_reset,
        optimizer: cfg.optimizer,
        epochs: cfg.epochs,
        batch_size: cfg.batch_size,
        seed: cfg.seed,
        threads,
    }
}

/// `history.csv` text: `epoch,loss,accuracy,total_spikes`.
pub fn history_csv(history: &[EpochStats]) -> String {
    let mut out = String::from("epoch,loss,accuracy,total_spikes\n");
    for h in history {
        let _ = writeln!(out, "{},{},{},{}", h.epoch, h.loss, h.accuracy, h.total_spikes);
    }
    out
}

/// Derived timing for the spike-response trainer.
struct SrmSetup {
    t_end: f64,
    target_on: f64,
    target_off: f64,
}

fn srm_setup(cfg: &RunConfig, data: &Dataset) -> SrmSetup {
    let sp = &cfg.spikeprop;
    let span = data.t_steps() as f64 * sp.step_seconds;
    // zero means "derive from the input span"
    let target_on = if sp.target_on > 0.0 { sp.target_on } else { 0.5 * span };
    let target_off = if sp.target_off > 0.0 { sp.target_off } else { target_on + 2.0 * sp.tau };
    let t_end = if sp.t_end > 0.0 { sp.t_end } else { span.max(target_off) + 4.0 * sp.tau };
    SrmSetup {
        t_end,
        target_on,
        target_off,
    }
}

fn srm_samples(data: &Dataset, step: f64, n_out: usize, s: &SrmSetup) -> Result<Vec<(SpikeLists, Vec<f64>)>> {
    data.samples
        .iter()
        .map(|x| {
            let raster = SpikeRaster::from_array(x.input.clone())
                .map_err(|_| Error::config("trainer.kind", "spikeprop needs binary spike inputs"))?;
            let targets = (0..n_out)
                .map(|j| if j == x.label { s.target_on } else { s.target_off })
                .collect();
            Ok((spike_lists_from_raster(&raster, step), targets))
        })
        .collect()
}

/// Accuracy (earliest-firing output is the label) and output spike count.
fn srm_scores(net: &SrmNet, samples: &[(SpikeLists, Vec<f64>)], data: &Dataset) -> Result<(f64, f64)> {
    let mut correct = 0usize;
    let mut fired = 0usize;
    for ((presyn, _), x) in samples.iter().zip(&data.samples) {
        let times = spike_times(net, presyn)?;
        fired += times.iter().filter(|t| t.is_some()).count();
        let mut best: Option<(usize, f64)> = None;
        for (j, t) in times.iter().enumerate() {
            if let Some(t) = *t {
                if best.is_none_or(|(_, b)| t < b) {
                    best = Some((j, t));
                }
            }
        }
        correct += (best.map(|b| b.0) == Some(x.label)) as usize;
    }
    Ok((correct as f64 / data.len() as f64, fired as f64))
}

fn train_srm(cfg: &RunConfig, data: &Dataset) -> Result<(Vec<EpochStats>, String)> {
    if cfg.model.layers.len() != 2 {
        return Err(Error::config("model.layers", "spikeprop trains a single layer: give `inputs,outputs`"));
    }
    let n_out = cfg.model.layers[1];
    let setup = srm_setup(cfg, data);
    let sp = &cfg.spikeprop;
    let mut rng = seeded(cfg.seed);
    let w = uniform_fan_in(n_out, data.n_inputs(), data.n_inputs(), &mut rng).mapv(|x| x.abs() * 2.0);
    let mut net = SrmNet::new(w, sp.tau, sp.theta, setup.t_end).map_err(|e| Error::config("spikeprop", e.to_string()))?;
    let samples = srm_samples(data, sp.step_seconds, n_out, &setup)?;
    let sp_cfg = SpikePropConfig {
        lr: cfg.optimizer.lr(),
        epochs: 1,
        threshold_factor: sp.threshold_factor,
    };
    let mut history = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let h = train_spikeprop(&mut net, &samples, &sp_cfg)?;
        let (accuracy, total_spikes) = srm_scores(&net, &samples, data)?;
        history.push(EpochStats {
            epoch,
            loss: h.losses[0].unwrap_or(f64::NAN),
            accuracy,
            total_spikes,
        });
        for i in h.interventions {
            eprintln!("epoch {epoch}: output {} silent, threshold lowered to {}", i.neuron, i.new_theta);
        }
    }
    Ok((history, spikeprop::to_text(&net)))
}

fn eval_row(net: &Network, data: &Dataset, cfg: &RunConfig, epoch: usize, loss: Option<f64>) -> Result<EpochStats> {
    let e = evaluate(net, data, &cfg.objective, &RegularizerSpec::default())?;
    let total: f64 = e.mean_counts.iter().flatten().sum::<f64>() * data.len() as f64;
    Ok(EpochStats {
        epoch,
        loss: loss.unwrap_or(e.loss),
        accuracy: e.accuracy,
        total_spikes: total,
    })
}

fn online_streams(cfg: &RunConfig, data: &Dataset, n_out: usize) -> Vec<Stream> {
    data.samples
        .iter()
        .map(|s| Stream {
            inputs: s.input.clone(),
            targets: Array2::from_shape_fn((s.input.nrows(), n_out), |(_, j)| {
                if j == s.label {
                    cfg.online_on
                } else {
                    cfg.online_off
                }
            }),
        })
        .collect()
}

/// Runs the configured trainer and returns its history plus the final
/// checkpoint text.
pub fn run_training(cfg: &RunConfig, data: &Dataset, threads: usize) -> Result<(Vec<EpochStats>, String)> {
    if cfg.trainer == TrainerKind::Spikeprop {
        return train_srm(cfg, data);
    }
    let mut net = build_network(cfg, data)?;
    let history = match cfg.trainer {
        TrainerKind::Bptt => train_bptt(&mut net, data, &train_config(cfg, threads))?,
        TrainerKind::Online => {
            let streams = online_streams(cfg, data, net.n_outputs());
            let oc = OnlineConfig {
                loss: cfg.online_loss,
                surrogate: cfg.surrogate,
                policy: cfg.update_policy,
                optimizer: cfg.optimizer,
                epochs: 1,
            };
            let mut rows = Vec::with_capacity(cfg.epochs);
            for epoch in 0..cfg.epochs {
                let h = train_online(&mut net, &streams, &oc)?;
                let loss = h.sequence_losses.iter().sum::<f64>() / streams.len() as f64;
                rows.push(eval_row(&net, data, cfg, epoch, Some(loss))?);
            }
            rows
        }
        TrainerKind::Perturbation => {
            let mut rows = Vec::with_capacity(cfg.epochs);
            for epoch in 0..cfg.epochs {
                perturbation_train(&mut net, data, &cfg.objective, cfg.sigma, cfg.trials, cfg.seed.wrapping_add(epoch as u64))?;
                // rejected trials are reverted, so score the model actually kept
                rows.push(eval_row(&net, data, cfg, epoch, None)?);
            }
            rows
        }
        TrainerKind::Stdp => {
            let mut rows = Vec::with_capacity(cfg.epochs);
            for epoch in 0..cfg.epochs {
                for s in &data.samples {
                    let rec = forward(&net, &s.input)?;
                    for (layer, lr) in net.layers.iter_mut().zip(&rec.layers) {
                        let pre = SpikeRaster::from_array(lr.input.clone())
                            .map_err(|_| Error::config("trainer.kind", "stdp needs binary spike inputs"))?;
                        layer.w = stdp_update(&pre, &lr.raster()?, &layer.w, &cfg.stdp)?;
                    }
                }
                rows.push(eval_row(&net, data, cfg, epoch, None)?);
            }
            rows
        }
        TrainerKind::Spikeprop => unreachable!("handled above"),
    };
    Ok((history, checkpoint::to_string(&net)))
}

/// Outputs of `train`.
#[derive(Clone, Debug)]
pub struct TrainArtifacts {
    pub history: Vec<EpochStats>,
    pub history_path: PathBuf,
    pub checkpoint_path: PathBuf,
    pub config_path: PathBuf,
}

pub fn train_command(cfg: &RunConfig, threads: usize) -> Result<TrainArtifacts> {
    let data = build_dataset(cfg)?;
    let (history, ckpt) = run_training(cfg, &data, threads)?;
    let dir = &cfg.output_dir;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let out = TrainArtifacts {
        history_path: dir.join(HISTORY_FILE),
        checkpoint_path: dir.join(CHECKPOINT_FILE),
        config_path: dir.join(RESOLVED_CONFIG_FILE),
        history,
    };
    write(&out.history_path, &history_csv(&out.history))?;
    write(&out.checkpoint_path, &ckpt)?;
    write(&out.config_path, &cfg.resolved())?;
    Ok(out)
}

/// Result of `eval`: accuracy, loss and mean spikes per neuron per sample.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub loss: f64,
    pub accuracy: f64,
    pub mean_counts: Vec<Vec<f64>>,
}

pub fn eval_command(cfg: &RunConfig, checkpoint_path: &Path) -> Result<(EvalReport, PathBuf)> {
    let data = build_dataset(cfg)?;
    let text = fs::read_to_string(checkpoint_path).map_err(|e| Error::io(checkpoint_path, e))?;
    let report = if text.starts_with(spikeprop::CHECKPOINT_HEADER) {
        let net = spikeprop::from_text(&text, checkpoint_path)?;
        let setup = srm_setup(cfg, &data);
        let samples = srm_samples(&data, cfg.spikeprop.step_seconds, net.n_out(), &setup)?;
        let (accuracy, fired) = srm_scores(&net, &samples, &data)?;
        let mut loss = 0.0;
        for (presyn, targets) in &samples {
            for (t, y) in spike_times(&net, presyn)?.iter().zip(targets) {
                let f = t.unwrap_or(net.t_end);
                loss += (y - f) * (y - f);
            }
        }
        EvalReport {
            loss: loss / data.len() as f64,
            accuracy,
            mean_counts: vec![vec![fired / (data.len() * net.n_out()) as f64; net.n_out()]],
        }
    } else {
        let net = checkpoint::from_str(&text, checkpoint_path)?;
        if net.n_inputs() != data.n_inputs() {
            return Err(Error::config(
                "model.layers",
                format!("checkpoint expects {} inputs, task has {}", net.n_inputs(), data.n_inputs()),
            ));
        }
        let e = evaluate(&net, &data, &cfg.objective, &cfg.reg)?;
        EvalReport {
            loss: e.loss,
            accuracy: e.accuracy,
            mean_counts: e.mean_counts,
        }
    };
    let dir = &cfg.output_dir;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join(EVAL_FILE);
    let neurons: usize = report.mean_counts.iter().map(Vec::len).sum();
    let mean = report.mean_counts.iter().flatten().sum::<f64>() / neurons.max(1) as f64;
    write(&path, &format!("loss,accuracy,mean_spikes\n{},{},{mean}\n", report.loss, report.accuracy))?;
    let mut csv = String::from("layer,neuron,mean_count\n");
    for (l, counts) in report.mean_counts.iter().enumerate() {
        for (j, c) in counts.iter().enumerate() {
            let _ = writeln!(csv, "{l},{j},{c}");
        }
    }
    write(&dir.join(EVAL_COUNTS_FILE), &csv)?;
    Ok((report, path))
}

/// Reads a CSV of numbers. Blank lines and lines starting with `#` are
/// skipped; every row must have the same width.
pub fn read_feature_csv(path: &Path) -> Result<Array2<f64>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = line
            .split(',')
            .map(|s| {
                s.trim().parse::<f64>().map_err(|_| Error::Parse {
                    path: path.to_path_buf(),
                    line: k + 1,
                    msg: format!("invalid number {:?}", s.trim()),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: k + 1,
                    msg: format!("expected {} values, found {}", first.len(), row.len()),
                });
            }
        }
        rows.push(row);
    }
    let width = rows.first().map_or(0, Vec::len);
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    Ok(Array2::from_shape_vec((rows.len(), width), flat).expect("rows checked"))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    Rate,
    Latency,
    Delta,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EncodeOptions {
    pub scheme: Scheme,
    pub t_steps: usize,
    pub seed: u64,
    pub tau: f64,
    pub theta: f64,
    pub clamp: ClampMode,
    pub threshold: f64,
    pub polarity: Polarity,
}

/// Feature CSV to event file. Rate and latency take a single row of
/// features; delta takes a `T x N` signal. Bipolar delta output has `2N`
/// channels: the on channels first, then the off channels.
pub fn encode_command(input: &Path, output: &Path, opts: &EncodeOptions) -> Result<SpikeRaster> {
    let m = read_feature_csv(input)?;
    let single_row = || -> Result<Array1<f64>> {
        match m.nrows() {
            0 => Ok(Array1::zeros(0)),
            1 => Ok(m.row(0).to_owned()),
            n => Err(Error::arg(format!(
                "{}: rate and latency encoding take one row of features, found {n}",
                input.display()
            ))),
        }
    };
    let raster = match opts.scheme {
        Scheme::Rate => {
            let x = single_row()?;
            rate_encode(x.as_slice().expect("owned"), opts.t_steps, &mut seeded(opts.seed))?
        }
        Scheme::Latency => {
            let x = single_row()?;
            let p = LatencyParams {
                tau: opts.tau,
                theta: opts.theta,
                t_max: opts.t_steps,
                clamp_mode: opts.clamp,
            };
            latency_encode(x.as_slice().expect("owned"), &p)?
        }
        Scheme::Delta => {
            let d = delta_encode(
                &m,
                &DeltaParams {
                    threshold: opts.threshold,
                    polarity: opts.polarity,
                },
            )?;
            match d.off {
                None => d.on,
                Some(off) => {
                    let joined = ndarray::concatenate(ndarray::Axis(1), &[d.on.view(), off.view()])
                        .expect("same number of rows");
                    SpikeRaster::from_array(joined)?
                }
            }
        }
    };
    save_events(&raster, output)?;
    Ok(raster)
}

/// Measured STDP window: one pre/post pair per offset from `-max_dt` to
/// `max_dt`, each applied to a fresh weight at the middle of the clamp range.
/// Rows are `(dt, measured dW, analytic dW)` with `dt = t_pre - t_post`.
pub fn stdp_curve(cfg: &RunConfig) -> Result<Vec<(i64, f64, f64)>> {
    let p = &cfg.stdp;
    let max = cfg.stdp_max_dt as i64;
    let t_steps = (2 * max + 1) as usize;
    let w0 = 0.5 * (p.w_min + p.w_max);
    let mut rows = Vec::with_capacity(t_steps);
    for dt in -max..=max {
        let (t_pre, t_post) = if dt < 0 { (0, (-dt) as usize) } else { (dt as usize, 0) };
        let pre = SpikeRaster::from_events(t_steps, 1, &[(t_pre, 0)])?;
        let post = SpikeRaster::from_events(t_steps, 1, &[(t_post, 0)])?;
        let w = stdp_update(&pre, &post, &Array2::from_elem((1, 1), w0), p)?;
        rows.push((dt, w[[0, 0]] - w0, stdp_delta_w(dt as f64, p)));
    }
    Ok(rows)
}

pub fn stdp_demo_command(cfg: &RunConfig) -> Result<PathBuf> {
    let rows = stdp_curve(cfg)?;
    let dir = &cfg.output_dir;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join(STDP_CURVE_FILE);
    let mut csv = String::from("dt,dw,dw_analytic\n");
    for (dt, dw, a) in rows {
        let _ = writeln!(csv, "{dt},{dw},{a}");
    }
    write(&path, &csv)?;
    Ok(path)
}
