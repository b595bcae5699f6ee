//! Run configuration: flat `key = value` lines with dotted keys.
//!
//! ```text
//! # comments start with '#'
//! seed = 42
//! task.kind = rate
//! model.layers = 10,16,2
//! optimizer.lr = 1e-3
//! ```
//!
//! Every key is consumed by [`RunConfig::parse`]; anything left over is an
//! error naming the key.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::bptt::{Feedback, OptimizerKind};
use crate::error::{Error, Result};
use crate::harness::dataset::LatencyTaskParams;
use crate::neuron::{LifParams, ResetMode};
use crate::objectives::{Inversion, ObjectiveSpec, RegularizerSpec};
use crate::online::{StepLoss, UpdatePolicy};
use crate::plasticity::{Pairing, StdpParams};
use crate::surrogate::SurrogateKind;

/// Raw key/value pairs with the line each came from.
#[derive(Clone, Debug, Default)]
pub struct KeyValues {
    path: PathBuf,
    entries: BTreeMap<String, (String, usize)>,
}

impl KeyValues {
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (k, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                path: path.to_path_buf(),
                line: k + 1,
                msg: format!("expected `key = value`, got {line:?}"),
            })?;
            let key = key.trim().to_string();
            if key.is_empty() {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: k + 1,
                    msg: "empty key".into(),
                });
            }
            if entries.insert(key.clone(), (value.trim().to_string(), k + 1)).is_some() {
                return Err(Error::config(key, format!("duplicate key at line {}", k + 1)));
            }
        }
        Ok(Self {
            path: path.to_path_buf(),
            entries,
        })
    }

    pub fn set(&mut self, key: &str, value: &str) {
        self.entries.insert(key.to_string(), (value.to_string(), 0));
    }

    fn take_raw(&mut self, key: &str) -> Option<String> {
        self.entries.remove(key).map(|(v, _)| v)
    }

    fn bad(key: &str, value: &str, what: &str) -> Error {
        Error::config(key, format!("expected {what}, got {value:?}"))
    }

    fn take<T: FromStr>(&mut self, key: &str, what: &str) -> Result<Option<T>> {
        match self.take_raw(key) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|_| Self::bad(key, &v, what)),
        }
    }

    fn f64_or(&mut self, key: &str, default: f64) -> Result<f64> {
        let v = self.take::<f64>(key, "a number")?.unwrap_or(default);
        if !v.is_finite() {
            return Err(Error::config(key, "must be finite"));
        }
        Ok(v)
    }

    fn usize_or(&mut self, key: &str, default: usize) -> Result<usize> {
        Ok(self.take(key, "a non-negative integer")?.unwrap_or(default))
    }

    fn bool_or(&mut self, key: &str, default: bool) -> Result<bool> {
        match self.take_raw(key) {
            None => Ok(default),
            Some(v) => match v.as_str() {
                "true" | "1" => Ok(true),
                "false" | "0" => Ok(false),
                _ => Err(Self::bad(key, &v, "true or false")),
            },
        }
    }

    fn str_or(&mut self, key: &str, default: &str) -> String {
        self.take_raw(key).unwrap_or_else(|| default.to_string())
    }

    fn list<T: FromStr>(&mut self, key: &str, what: &str) -> Result<Option<Vec<T>>> {
        match self.take_raw(key) {
            None => Ok(None),
            Some(v) => v
                .split(',')
                .map(|s| s.trim().parse::<T>().map_err(|_| Self::bad(key, &v, what)))
                .collect::<Result<Vec<T>>>()
                .map(Some),
        }
    }

    /// Fails on the first key nobody consumed.
    fn finish(self) -> Result<()> {
        match self.entries.into_iter().next() {
            None => Ok(()),
            Some((key, (_, line))) => Err(Error::config(
                key,
                format!("unknown key (line {line} of {})", self.path.display()),
            )),
        }
    }
}

/// Where training samples come from.
#[derive(Clone, Debug, PartialEq)]
pub enum TaskSpec {
    Rate {
        n_inputs: usize,
        t_steps: usize,
        rate_lo: f64,
        rate_hi: f64,
        samples_per_class: usize,
    },
    Latency(LatencyTaskParams),
    /// A manifest whose lines are `<event file>,<label>`, relative paths
    /// resolved against the manifest's directory.
    Events { manifest: PathBuf, n_classes: usize },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TrainerKind {
    Bptt,
    Online,
    Spikeprop,
    Stdp,
    Perturbation,
}

impl TrainerKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            TrainerKind::Bptt => "bptt",
            TrainerKind::Online => "online",
            TrainerKind::Spikeprop => "spikeprop",
            TrainerKind::Stdp => "stdp",
            TrainerKind::Perturbation => "perturbation",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelSpec {
    /// Widths, input first.
    pub layers: Vec<usize>,
    /// One entry per weight layer.
    pub lif: Vec<LifParams>,
    pub recurrent: Vec<bool>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpikePropSpec {
    pub tau: f64,
    pub theta: f64,
    pub t_end: f64,
    /// Seconds per raster step when converting inputs to spike times.
    pub step_seconds: f64,
    pub threshold_factor: f64,
    pub target_on: f64,
    pub target_off: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub task_seed: u64,
    pub task: TaskSpec,
    pub model: ModelSpec,
    pub trainer: TrainerKind,
    pub objective: ObjectiveSpec,
    pub reg: RegularizerSpec,
    pub surrogate: SurrogateKind,
    pub optimizer: OptimizerKind,
    pub feedback: Feedback,
    pub detach_reset: bool,
    pub epochs: usize,
    pub batch_size: usize,
    pub update_policy: UpdatePolicy,
    pub online_loss: StepLoss,
    pub online_on: f64,
    pub online_off: f64,
    pub sigma: f64,
    pub trials: usize,
    pub stdp: StdpParams,
    pub stdp_max_dt: usize,
    pub spikeprop: SpikePropSpec,
    pub output_dir: PathBuf,
}

fn per_layer<T: Clone>(key: &str, values: Vec<T>, n: usize) -> Result<Vec<T>> {
    match values.len() {
        1 => Ok(vec![values[0].clone(); n]),
        k if k == n => Ok(values),
        k => Err(Error::config(
            key,
            format!("expected 1 or {n} comma-separated values, got {k}"),
        )),
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        Self::from_values(KeyValues::parse(text, path)?)
    }

    pub fn from_values(mut kv: KeyValues) -> Result<Self> {
        let base_dir = kv.path.parent().map(Path::to_path_buf).unwrap_or_default();
        let seed: u64 = kv.take("seed", "a non-negative integer")?.unwrap_or(0);
        let task_seed = kv.take("task.seed", "a non-negative integer")?.unwrap_or(seed);

        let task = match kv.str_or("task.kind", "rate").as_str() {
            "rate" => TaskSpec::Rate {
                n_inputs: kv.usize_or("task.n_inputs", 10)?,
                t_steps: kv.usize_or("task.t_steps", 50)?,
                rate_lo: kv.f64_or("task.rate_lo", 0.2)?,
                rate_hi: kv.f64_or("task.rate_hi", 0.8)?,
                samples_per_class: kv.usize_or("task.samples_per_class", 100)?,
            },
            "latency" => TaskSpec::Latency(LatencyTaskParams {
                seed: task_seed,
                n_inputs: kv.usize_or("task.n_inputs", 8)?,
                t_steps: kv.usize_or("task.t_steps", 40)?,
                n_classes: kv.usize_or("task.n_classes", 4)?,
                samples_per_class: kv.usize_or("task.samples_per_class", 25)?,
                jitter: kv.usize_or("task.jitter", 1)?,
            }),
            "events" => {
                let manifest = kv
                    .take_raw("task.manifest")
                    .ok_or_else(|| Error::config("task.manifest", "required when task.kind = events"))?;
                let joined = base_dir.join(manifest);
                // absolute, so the resolved config works from any directory
                let manifest = joined.canonicalize().map_err(|_| {
                    Error::config("task.manifest", format!("file {} does not exist", joined.display()))
                })?;
                TaskSpec::Events {
                    manifest,
                    n_classes: kv.usize_or("task.n_classes", 2)?,
                }
            }
            other => {
                return Err(Error::config(
                    "task.kind",
                    format!("unknown task {other:?} (rate, latency, events)"),
                ))
            }
        };

        let layers: Vec<usize> = kv
            .list("model.layers", "comma-separated integers")?
            .unwrap_or_else(|| vec![10, 16, 2]);
        if layers.len() < 2 || layers.contains(&0) {
            return Err(Error::config(
                "model.layers",
                "need at least an input and an output width, all positive",
            ));
        }
        let n_w = layers.len() - 1;
        let beta = match (kv.list::<f64>("model.beta", "numbers")?, kv.list::<f64>("model.tau", "numbers")?) {
            (Some(_), Some(_)) => {
                return Err(Error::config("model.tau", "give either model.beta or model.tau, not both"))
            }
            (Some(b), None) => per_layer("model.beta", b, n_w)?,
            (None, Some(tau)) => {
                let dt = kv.f64_or("model.dt", 1.0)?;
                let tau = per_layer("model.tau", tau, n_w)?;
                tau.iter()
                    .map(|&t| crate::neuron::beta_from_tau(t, dt).map_err(|e| Error::config("model.tau", e.to_string())))
                    .collect::<Result<_>>()?
            }
            (None, None) => vec![0.9; n_w],
        };
        let theta = per_layer("model.theta", kv.list("model.theta", "numbers")?.unwrap_or(vec![1.0]), n_w)?;
        let resets: Vec<String> = kv.list("model.reset", "reset modes")?.unwrap_or(vec!["subtract".into()]);
        let resets = per_layer("model.reset", resets, n_w)?;
        let alpha = per_layer(
            "model.adapt_alpha",
            kv.list("model.adapt_alpha", "numbers")?.unwrap_or(vec![0.0]),
            n_w,
        )?;
        let learn_beta = kv.bool_or("model.learn_beta", false)?;
        let recurrent = per_layer(
            "model.recurrent",
            kv.list("model.recurrent", "true/false values")?.unwrap_or(vec![false]),
            n_w,
        )?;
        let mut lif = Vec::with_capacity(n_w);
        for l in 0..n_w {
            let reset_mode = ResetMode::parse(&resets[l]).ok_or_else(|| {
                Error::config("model.reset", format!("unknown reset mode {:?}", resets[l]))
            })?;
            let p = LifParams {
                beta: beta[l],
                theta0: theta[l],
                reset_mode,
                adapt_alpha: alpha[l],
                learn_beta,
            };
            p.validate().map_err(|e| Error::config("model", e.to_string()))?;
            lif.push(p);
        }
        let model = ModelSpec {
            layers,
            lif,
            recurrent,
        };

        let trainer = match kv.str_or("trainer.kind", "bptt").as_str() {
            "bptt" => TrainerKind::Bptt,
            "online" => TrainerKind::Online,
            "spikeprop" => TrainerKind::Spikeprop,
            "stdp" => TrainerKind::Stdp,
            "perturbation" => TrainerKind::Perturbation,
            other => {
                return Err(Error::config(
                    "trainer.kind",
                    format!("unknown trainer {other:?} (bptt, online, spikeprop, stdp, perturbation)"),
                ))
            }
        };
        let on = kv.take::<f64>("objective.on", "a number")?;
        let off = kv.take::<f64>("objective.off", "a number")?;
        let objective = match kv.str_or("objective.kind", "ce_spike_rate").as_str() {
            "ce_spike_rate" => ObjectiveSpec::CeSpikeRate,
            "mse_spike_rate" => ObjectiveSpec::MseSpikeRate {
                on_count: on.unwrap_or(10.0),
                off_count: off.unwrap_or(0.0),
            },
            "max_membrane_ce" => ObjectiveSpec::MaxMembraneCe,
            "sum_membrane_ce" => ObjectiveSpec::SumMembraneCe,
            "mse_membrane" => ObjectiveSpec::MseMembrane {
                on_level: on.unwrap_or(1.0),
                off_level: off.unwrap_or(0.0),
            },
            "ce_spike_time" => ObjectiveSpec::CeSpikeTime {
                inversion: match kv.str_or("objective.inversion", "negate").as_str() {
                    "negate" => Inversion::Negate,
                    "reciprocal" => Inversion::Reciprocal,
                    other => {
                        return Err(Error::config(
                            "objective.inversion",
                            format!("unknown inversion {other:?} (negate, reciprocal)"),
                        ))
                    }
                },
            },
            "mse_spike_time" => ObjectiveSpec::MseSpikeTime {
                on_time: on.unwrap_or(0.0),
                off_time: off.unwrap_or(f64::NAN),
            },
            "mse_relative_spike_time" => ObjectiveSpec::MseRelativeSpikeTime {
                f0: kv.f64_or("objective.f0", 0.0)?,
                gamma: kv.f64_or("objective.gamma", 5.0)?,
            },
            other => return Err(Error::config("objective.kind", format!("unknown objective {other:?}"))),
        };
        if let ObjectiveSpec::MseSpikeTime { off_time, .. } = objective {
            if off_time.is_nan() {
                return Err(Error::config("objective.off", "mse_spike_time needs an off-class target time"));
            }
        }
        let reg = RegularizerSpec {
            lambda_l1: kv.f64_or("reg.l1", 0.0)?,
            lambda_upper: kv.f64_or("reg.upper", 0.0)?,
            theta_upper: kv.f64_or("reg.theta_upper", 0.0)?,
            upper_exponent: kv.usize_or("reg.upper_exponent", 2)? as u32,
            lambda_lower: kv.f64_or("reg.lower", 0.0)?,
            theta_lower: kv.f64_or("reg.theta_lower", 0.0)?,
        };
        reg.validate().map_err(|e| Error::config("reg", e.to_string()))?;

        let slope = kv.take::<f64>("surrogate.slope", "a number")?;
        let scale = kv.take::<f64>("surrogate.scale", "a number")?;
        let surrogate = match kv.str_or("surrogate.kind", "fast_sigmoid").as_str() {
            "heaviside" => SurrogateKind::Heaviside,
            "sigmoid" => SurrogateKind::Sigmoid { slope: slope.unwrap_or(5.0) },
            "fast_sigmoid" => SurrogateKind::FastSigmoid { slope: slope.unwrap_or(25.0) },
            "triangular" => SurrogateKind::Triangular,
            "hybrid_spike" => SurrogateKind::HybridSpike { subthreshold_scale: scale.unwrap_or(0.0) },
            "shifted_relu" => SurrogateKind::ShiftedReluGrad { scale: scale.unwrap_or(1.0) },
            other => return Err(Error::config("surrogate.kind", format!("unknown surrogate {other:?}"))),
        };

        let lr = kv.f64_or("optimizer.lr", 1e-3)?;
        let optimizer = match kv.str_or("optimizer.kind", "adam").as_str() {
            "adam" => OptimizerKind::Adam {
                lr,
                beta1: kv.f64_or("optimizer.beta1", 0.9)?,
                beta2: kv.f64_or("optimizer.beta2", 0.999)?,
                eps: kv.f64_or("optimizer.eps", 1e-8)?,
            },
            "sgd" => OptimizerKind::Sgd { lr },
            other => return Err(Error::config("optimizer.kind", format!("unknown optimizer {other:?} (adam, sgd)"))),
        };
        optimizer.validate().map_err(|e| Error::config("optimizer", e.to_string()))?;

        let feedback = match kv.str_or("trainer.feedback", "symmetric").as_str() {
            "symmetric" => Feedback::Symmetric,
            "random" => Feedback::RandomFixed,
            other => return Err(Error::config("trainer.feedback", format!("unknown feedback {other:?} (symmetric, random)"))),
        };
        let detach_reset = kv.bool_or("trainer.detach_reset", true)?;
        let epochs = kv.usize_or("trainer.epochs", 50)?;
        let batch_size = kv.usize_or("trainer.batch_size", 16)?;
        if batch_size == 0 {
            return Err(Error::config("trainer.batch_size", "must be at least 1"));
        }
        let update_policy = match kv.str_or("trainer.update", "per_step").as_str() {
            "deferred" => UpdatePolicy::Deferred,
            "per_step" => {
                let n = kv.usize_or("trainer.update_interval", 1)?;
                if n == 0 {
                    return Err(Error::config("trainer.update_interval", "must be at least 1"));
                }
                UpdatePolicy::PerStep(n)
            }
            other => return Err(Error::config("trainer.update", format!("unknown policy {other:?} (deferred, per_step)"))),
        };
        let online_loss = match kv.str_or("trainer.online_loss", "membrane").as_str() {
            "membrane" => StepLoss::Membrane,
            "spikes" => StepLoss::Spikes,
            other => return Err(Error::config("trainer.online_loss", format!("unknown loss {other:?} (membrane, spikes)"))),
        };
        let online_on = kv.f64_or("trainer.online_on", 1.0)?;
        let online_off = kv.f64_or("trainer.online_off", 0.0)?;
        let sigma = kv.f64_or("trainer.sigma", 0.05)?;
        if sigma < 0.0 {
            return Err(Error::config("trainer.sigma", "must be non-negative"));
        }
        let trials = kv.usize_or("trainer.trials", 20)?;

        let defaults = StdpParams::default();
        let pairing = match kv.str_or("stdp.pairing", "all_pairs").as_str() {
            "all_pairs" => Pairing::AllPairs(kv.usize_or("stdp.window", 100)?),
            "nearest" => Pairing::NearestNeighbor,
            other => return Err(Error::config("stdp.pairing", format!("unknown pairing {other:?} (all_pairs, nearest)"))),
        };
        let stdp = StdpParams {
            a_plus: kv.f64_or("stdp.a_plus", defaults.a_plus)?,
            a_minus: kv.f64_or("stdp.a_minus", defaults.a_minus)?,
            tau_plus: kv.f64_or("stdp.tau_plus", defaults.tau_plus)?,
            tau_minus: kv.f64_or("stdp.tau_minus", defaults.tau_minus)?,
            w_min: kv.f64_or("stdp.w_min", defaults.w_min)?,
            w_max: kv.f64_or("stdp.w_max", defaults.w_max)?,
            pairing,
        };
        stdp.validate().map_err(|e| Error::config("stdp", e.to_string()))?;
        let stdp_max_dt = kv.usize_or("stdp.max_dt", 60)?;

        let spikeprop = SpikePropSpec {
            tau: kv.f64_or("spikeprop.tau", 4.0)?,
            theta: kv.f64_or("spikeprop.theta", 1.0)?,
            t_end: kv.f64_or("spikeprop.t_end", 0.0)?,
            step_seconds: kv.f64_or("spikeprop.step", 1.0)?,
            threshold_factor: kv.f64_or("spikeprop.threshold_factor", 0.9)?,
            target_on: kv.f64_or("spikeprop.target_on", 0.0)?,
            target_off: kv.f64_or("spikeprop.target_off", 0.0)?,
        };

        let output_dir = PathBuf::from(kv.str_or("output.dir", "spikegrad-out"));
        kv.finish()?;
        Ok(Self {
            seed,
            task_seed,
            task,
            model,
            trainer,
            objective,
            reg,
            surrogate,
            optimizer,
            feedback,
            detach_reset,
            epochs,
            batch_size,
            update_policy,
            online_loss,
            online_on,
            online_off,
            sigma,
            trials,
            stdp,
            stdp_max_dt,
            spikeprop,
            output_dir,
        })
    }

    /// The configuration with every default filled in, in the input format.
    pub fn resolved(&self) -> String {
        let mut o = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(o, "{k} = {v}");
        };
        let join = |v: Vec<String>| v.join(",");
        kv("seed", self.seed.to_string());
        kv("task.seed", self.task_seed.to_string());
        match &self.task {
            TaskSpec::Rate {
                n_inputs,
                t_steps,
                rate_lo,
                rate_hi,
                samples_per_class,
            } => {
                kv("task.kind", "rate".into());
                kv("task.n_inputs", n_inputs.to_string());
                kv("task.t_steps", t_steps.to_string());
                kv("task.rate_lo", rate_lo.to_string());
                kv("task.rate_hi", rate_hi.to_string());
                kv("task.samples_per_class", samples_per_class.to_string());
            }
            TaskSpec::Latency(p) => {
                kv("task.kind", "latency".into());
                kv("task.n_inputs", p.n_inputs.to_string());
                kv("task.t_steps", p.t_steps.to_string());
                kv("task.n_classes", p.n_classes.to_string());
                kv("task.samples_per_class", p.samples_per_class.to_string());
                kv("task.jitter", p.jitter.to_string());
            }
            TaskSpec::Events { manifest, n_classes } => {
                kv("task.kind", "events".into());
                kv("task.manifest", manifest.display().to_string());
                kv("task.n_classes", n_classes.to_string());
            }
        }
        let m = &self.model;
        kv("model.layers", join(m.layers.iter().map(|x| x.to_string()).collect()));
        kv("model.beta", join(m.lif.iter().map(|p| p.beta.to_string()).collect()));
        kv("model.theta", join(m.lif.iter().map(|p| p.theta0.to_string()).collect()));
        kv("model.reset", join(m.lif.iter().map(|p| p.reset_mode.as_str().to_string()).collect()));
        kv("model.adapt_alpha", join(m.lif.iter().map(|p| p.adapt_alpha.to_string()).collect()));
        kv("model.learn_beta", m.lif[0].learn_beta.to_string());
        kv("model.recurrent", join(m.recurrent.iter().map(|x| x.to_string()).collect()));
        kv("trainer.kind", self.trainer.as_str().into());
        kv("objective.kind", self.objective.name().into());
        match self.objective {
            ObjectiveSpec::MseSpikeRate { on_count, off_count } => {
                kv("objective.on", on_count.to_string());
                kv("objective.off", off_count.to_string());
            }
            ObjectiveSpec::MseMembrane { on_level, off_level } => {
                kv("objective.on", on_level.to_string());
                kv("objective.off", off_level.to_string());
            }
            ObjectiveSpec::MseSpikeTime { on_time, off_time } => {
                kv("objective.on", on_time.to_string());
                kv("objective.off", off_time.to_string());
            }
            ObjectiveSpec::CeSpikeTime { inversion } => kv(
                "objective.inversion",
                match inversion {
                    Inversion::Negate => "negate",
                    Inversion::Reciprocal => "reciprocal",
                }
                .into(),
            ),
            ObjectiveSpec::MseRelativeSpikeTime { f0, gamma } => {
                kv("objective.f0", f0.to_string());
                kv("objective.gamma", gamma.to_string());
            }
            _ => {}
        }
        let r = &self.reg;
        kv("reg.l1", r.lambda_l1.to_string());
        kv("reg.upper", r.lambda_upper.to_string());
        kv("reg.theta_upper", r.theta_upper.to_string());
        kv("reg.upper_exponent", r.upper_exponent.to_string());
        kv("reg.lower", r.lambda_lower.to_string());
        kv("reg.theta_lower", r.theta_lower.to_string());
        kv("surrogate.kind", self.surrogate.name().into());
        match self.surrogate {
            SurrogateKind::Sigmoid { slope } | SurrogateKind::FastSigmoid { slope } => kv("surrogate.slope", slope.to_string()),
            SurrogateKind::HybridSpike { subthreshold_scale } => kv("surrogate.scale", subthreshold_scale.to_string()),
            SurrogateKind::ShiftedReluGrad { scale } => kv("surrogate.scale", scale.to_string()),
            _ => {}
        }
        match self.optimizer {
            OptimizerKind::Sgd { lr } => {
                kv("optimizer.kind", "sgd".into());
                kv("optimizer.lr", lr.to_string());
            }
            OptimizerKind::Adam { lr, beta1, beta2, eps } => {
                kv("optimizer.kind", "adam".into());
                kv("optimizer.lr", lr.to_string());
                kv("optimizer.beta1", beta1.to_string());
                kv("optimizer.beta2", beta2.to_string());
                kv("optimizer.eps", eps.to_string());
            }
        }
        kv(
            "trainer.feedback",
            match self.feedback {
                Feedback::Symmetric => "symmetric",
                Feedback::RandomFixed => "random",
            }
            .into(),
        );
        kv("trainer.detach_reset", self.detach_reset.to_string());
        kv("trainer.epochs", self.epochs.to_string());
        kv("trainer.batch_size", self.batch_size.to_string());
        match self.update_policy {
            UpdatePolicy::Deferred => kv("trainer.update", "deferred".into()),
            UpdatePolicy::PerStep(n) => {
                kv("trainer.update", "per_step".into());
                kv("trainer.update_interval", n.to_string());
            }
        }
        kv(
            "trainer.online_loss",
            match self.online_loss {
                StepLoss::Membrane => "membrane",
                StepLoss::Spikes => "spikes",
            }
            .into(),
        );
        kv("trainer.online_on", self.online_on.to_string());
        kv("trainer.online_off", self.online_off.to_string());
        kv("trainer.sigma", self.sigma.to_string());
        kv("trainer.trials", self.trials.to_string());
        let s = &self.stdp;
        match s.pairing {
            Pairing::AllPairs(w) => {
                kv("stdp.pairing", "all_pairs".into());
                kv("stdp.window", w.to_string());
            }
            Pairing::NearestNeighbor => kv("stdp.pairing", "nearest".into()),
        }
        kv("stdp.a_plus", s.a_plus.to_string());
        kv("stdp.a_minus", s.a_minus.to_string());
        kv("stdp.tau_plus", s.tau_plus.to_string());
        kv("stdp.tau_minus", s.tau_minus.to_string());
        kv("stdp.w_min", s.w_min.to_string());
        kv("stdp.w_max", s.w_max.to_string());
        kv("stdp.max_dt", self.stdp_max_dt.to_string());
        let sp = &self.spikeprop;
        kv("spikeprop.tau", sp.tau.to_string());
        kv("spikeprop.theta", sp.theta.to_string());
        kv("spikeprop.t_end", sp.t_end.to_string());
        kv("spikeprop.step", sp.step_seconds.to_string());
        kv("spikeprop.threshold_factor", sp.threshold_factor.to_string());
        kv("spikeprop.target_on", sp.target_on.to_string());
        kv("spikeprop.target_off", sp.target_off.to_string());
        kv("output.dir", self.output_dir.display().to_string());
        o
    }
}
