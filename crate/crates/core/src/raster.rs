//! Binary spike rasters, the common currency between codecs, layers and losses.

use ndarray::{Array2, ArrayView1, ArrayView2, Axis};

use crate::error::{Error, Result};

/// A `T x N` matrix of spikes. Every entry is exactly `0.0` or `1.0`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpikeRaster {
    data: Array2<f64>,
}

impl SpikeRaster {
    pub fn zeros(t_steps: usize, n: usize) -> Self {
        Self {
            data: Array2::zeros((t_steps, n)),
        }
    }

    /// Wraps a matrix, rejecting any entry that is not 0 or 1.
    pub fn from_array(data: Array2<f64>) -> Result<Self> {
        if let Some(bad) = data.iter().find(|&&v| v != 0.0 && v != 1.0) {
            return Err(Error::arg(format!(
                "spike raster entries must be 0 or 1, found {bad}"
            )));
        }
        Ok(Self { data })
    }

    /// Builds a raster from `(t, i)` spike coordinates.
    pub fn from_events(t_steps: usize, n: usize, events: &[(usize, usize)]) -> Result<Self> {
        let mut raster = Self::zeros(t_steps, n);
        for &(t, i) in events {
            if t >= t_steps || i >= n {
                return Err(Error::arg(format!(
                    "event ({t},{i}) outside raster {t_steps}x{n}"
                )));
            }
            raster.data[[t, i]] = 1.0;
        }
        Ok(raster)
    }

    pub fn t_steps(&self) -> usize {
        self.data.nrows()
    }

    pub fn n(&self) -> usize {
        self.data.ncols()
    }

    pub fn get(&self, t: usize, i: usize) -> bool {
        self.data[[t, i]] != 0.0
    }

    pub fn set(&mut self, t: usize, i: usize, spike: bool) {
        self.data[[t, i]] = if spike { 1.0 } else { 0.0 };
    }

    pub fn view(&self) -> ArrayView2<'_, f64> {
        self.data.view()
    }

    pub fn row(&self, t: usize) -> ArrayView1<'_, f64> {
        self.data.row(t)
    }

    pub fn as_array(&self) -> &Array2<f64> {
        &self.data
    }

    pub fn into_array(self) -> Array2<f64> {
        self.data
    }

    /// Spike coordinates sorted by time, then neuron index.
    pub fn events(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for ((t, i), &v) in self.data.indexed_iter() {
            if v != 0.0 {
                out.push((t, i));
            }
        }
        out
    }

    /// Spike count per neuron.
    pub fn counts(&self) -> Vec<f64> {
        self.data.sum_axis(Axis(0)).to_vec()
    }

    pub fn total(&self) -> usize {
        self.data.iter().filter(|&&v| v != 0.0).count()
    }

    /// Spike steps of neuron `i`, in increasing order.
    pub fn spike_steps(&self, i: usize) -> Vec<usize> {
        (0..self.t_steps()).filter(|&t| self.get(t, i)).collect()
    }

    /// First spike step of each neuron, `None` for silent neurons.
    pub fn first_spikes(&self) -> Vec<Option<usize>> {
        (0..self.n())
            .map(|i| (0..self.t_steps()).find(|&t| self.get(t, i)))
            .collect()
    }
}
