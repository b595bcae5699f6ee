//! Labelled sample collections and the synthetic task generators.

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::Rng as _;

use crate::codec::rate_encode;
use crate::error::{Error, Result};
use crate::raster::SpikeRaster;
use crate::rng::{seeded, split};

/// One input (`T x N`, spikes or real currents) and its class label.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub input: Array2<f64>,
    pub label: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub samples: Vec<Sample>,
    pub n_classes: usize,
}

impl Dataset {
    /// Checks that every sample shares `T` and `N` and every label is in range.
    pub fn new(samples: Vec<Sample>, n_classes: usize) -> Result<Self> {
        if let Some(first) = samples.first() {
            let dim = first.input.dim();
            for (k, s) in samples.iter().enumerate() {
                if s.input.dim() != dim {
                    return Err(Error::arg(format!(
                        "sample {k} has shape {:?}, expected {dim:?}",
                        s.input.dim()
                    )));
                }
                if s.label >= n_classes {
                    return Err(Error::arg(format!(
                        "sample {k} has label {} but only {n_classes} classes",
                        s.label
                    )));
                }
            }
        }
        Ok(Self { samples, n_classes })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn t_steps(&self) -> usize {
        self.samples.first().map_or(0, |s| s.input.nrows())
    }

    pub fn n_inputs(&self) -> usize {
        self.samples.first().map_or(0, |s| s.input.ncols())
    }
}

/// Two-class rate task: class 0 inputs fire with probability `rate_lo` per
/// step, class 1 with `rate_hi`. Samples alternate between the classes.
pub fn gen_rate_task(
    seed: u64,
    n_inputs: usize,
    t_steps: usize,
    rate_lo: f64,
    rate_hi: f64,
    n_samples_per_class: usize,
) -> Result<Dataset> {
    if !(0.0 <= rate_lo && rate_lo < rate_hi && rate_hi <= 1.0) {
        return Err(Error::arg(format!(
            "rates must satisfy 0 <= rate_lo < rate_hi <= 1, got {rate_lo} and {rate_hi}"
        )));
    }
    let mut rng = seeded(seed);
    let mut samples = Vec::with_capacity(2 * n_samples_per_class);
    for _ in 0..n_samples_per_class {
        for (label, rate) in [(0, rate_lo), (1, rate_hi)] {
            let raster = rate_encode(&vec![rate; n_inputs], t_steps, &mut rng)?;
            samples.push(Sample {
                input: raster.into_array(),
                label,
            });
        }
    }
    Dataset::new(samples, 2)
}

#[derive(Clone, Debug, PartialEq)]
pub struct LatencyTaskParams {
    pub seed: u64,
    pub n_inputs: usize,
    pub t_steps: usize,
    pub n_classes: usize,
    pub samples_per_class: usize,
    /// Maximum per-sample timing jitter in steps.
    pub jitter: usize,
}

/// Per-class input firing order and base spike steps for the latency task.
#[derive(Clone, Debug, PartialEq)]
pub struct LatencyPatterns {
    /// `orders[c][k]` is the input that fires k-th for class `c`.
    pub orders: Vec<Vec<usize>>,
    /// Step spacing between consecutive inputs in a pattern.
    pub spacing: usize,
    pub offset: usize,
}

impl LatencyPatterns {
    /// Base spike step of input `i` for class `c` (before jitter).
    pub fn base_step(&self, c: usize, i: usize) -> usize {
        let rank = self.orders[c].iter().position(|&x| x == i).expect("permutation");
        self.offset + rank * self.spacing
    }
}

fn latency_patterns(p: &LatencyTaskParams, rng: &mut crate::rng::Rng) -> Result<LatencyPatterns> {
    if p.n_classes < 2 {
        return Err(Error::arg("the latency task needs at least two classes"));
    }
    if p.n_classes > p.n_inputs {
        return Err(Error::arg(
            "the latency task needs at least as many inputs as classes",
        ));
    }
    let offset = p.jitter;
    let usable = p.t_steps.saturating_sub(2 * p.jitter + 1);
    let spacing = if p.n_inputs > 1 { usable / (p.n_inputs - 1) } else { 0 };
    if p.n_inputs > 1 && spacing == 0 {
        return Err(Error::arg(format!(
            "{} steps are too few for {} inputs with jitter {}",
            p.t_steps, p.n_inputs, p.jitter
        )));
    }
    // distinct leading inputs keep the classes apart by their first spike
    let mut leaders: Vec<usize> = (0..p.n_inputs).collect();
    leaders.shuffle(rng);
    let orders = (0..p.n_classes)
        .map(|c| {
            let mut rest: Vec<usize> = (0..p.n_inputs).filter(|&i| i != leaders[c]).collect();
            rest.shuffle(rng);
            let mut order = vec![leaders[c]];
            order.extend(rest);
            order
        })
        .collect();
    Ok(LatencyPatterns {
        orders,
        spacing,
        offset,
    })
}

/// Each class is a fixed permutation of single-spike times over the inputs,
/// shifted per sample by a uniform jitter in `[-jitter, jitter]` steps per
/// input. Returns the dataset and the class patterns.
pub fn gen_latency_task(p: &LatencyTaskParams) -> Result<(Dataset, LatencyPatterns)> {
    let mut rng = seeded(p.seed);
    let patterns = latency_patterns(p, &mut split(&mut rng))?;
    let mut samples = Vec::with_capacity(p.n_classes * p.samples_per_class);
    for _ in 0..p.samples_per_class {
        for c in 0..p.n_classes {
            let mut raster = SpikeRaster::zeros(p.t_steps, p.n_inputs);
            for i in 0..p.n_inputs {
                let base = patterns.base_step(c, i) as i64;
                let j = p.jitter as i64;
                let shift = if j > 0 { rng.random_range(-j..=j) } else { 0 };
                let step = (base + shift).clamp(0, p.t_steps as i64 - 1) as usize;
                raster.set(step, i, true);
            }
            samples.push(Sample {
                input: raster.into_array(),
                label: c,
            });
        }
    }
    Ok((Dataset::new(samples, p.n_classes)?, patterns))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::latency_decode;

    #[test]
    fn rate_task_extremes_and_moments() {
        let d = gen_rate_task(1, 10, 100, 0.0, 0.8, 5).unwrap();
        assert_eq!(d.len(), 10);
        for s in d.samples.iter().filter(|s| s.label == 0) {
            assert_eq!(s.input.sum(), 0.0);
        }
        // per-input count ~ Binomial(100, 0.8): mean 80, sd 4
        for s in d.samples.iter().filter(|s| s.label == 1) {
            let mean = s.input.sum() / 10.0;
            assert!((mean - 80.0).abs() <= 12.0);
        }
    }

    #[test]
    fn rate_task_deterministic_and_validated() {
        assert_eq!(gen_rate_task(9, 4, 20, 0.1, 0.7, 3).unwrap(), gen_rate_task(9, 4, 20, 0.1, 0.7, 3).unwrap());
        assert!(gen_rate_task(9, 4, 20, 0.7, 0.1, 3).is_err());
        assert!(gen_rate_task(9, 4, 20, 0.1, 1.5, 3).is_err());
    }

    fn params(jitter: usize) -> LatencyTaskParams {
        LatencyTaskParams {
            seed: 4,
            n_inputs: 8,
            t_steps: 40,
            n_classes: 4,
            samples_per_class: 6,
            jitter,
        }
    }

    #[test]
    fn latency_task_without_jitter_is_constant_per_class() {
        let (d, _) = gen_latency_task(&params(0)).unwrap();
        for c in 0..4 {
            let class: Vec<_> = d.samples.iter().filter(|s| s.label == c).collect();
            assert!(class.windows(2).all(|w| w[0].input == w[1].input));
        }
    }

    #[test]
    fn latency_task_single_spike_per_input() {
        let (d, _) = gen_latency_task(&params(1)).unwrap();
        for s in &d.samples {
            for i in 0..8 {
                assert_eq!(s.input.column(i).sum(), 1.0);
            }
        }
        assert_eq!(gen_latency_task(&params(1)).unwrap(), gen_latency_task(&params(1)).unwrap());
    }

    #[test]
    fn first_spiking_input_separates_classes() {
        let (d, patterns) = gen_latency_task(&params(1)).unwrap();
        // brute force: the earliest input identifies the class exactly
        let lookup: Vec<usize> = patterns.orders.iter().map(|o| o[0]).collect();
        for s in &d.samples {
            let raster = SpikeRaster::from_array(s.input.clone()).unwrap();
            let first = latency_decode(&raster).unwrap();
            assert_eq!(lookup.iter().position(|&i| i == first), Some(s.label));
        }
    }

    #[test]
    fn latency_task_validation() {
        let mut p = params(0);
        p.n_classes = 1;
        assert!(gen_latency_task(&p).is_err());
        let mut p = params(0);
        p.n_classes = 9;
        assert!(gen_latency_task(&p).is_err());
    }
}
