//! Trainable spiking neural networks.
//!
//! The crate covers discrete-time leaky integrate-and-fire neurons
//! ([`neuron`]), spike encoders and decoders ([`codec`]), losses over spikes,
//! membranes and spike times ([`objectives`]), surrogate derivatives
//! ([`surrogate`]), backpropagation through time ([`bptt`]), forward-mode
//! online gradients ([`online`]), a continuous-time spike response model
//! trained on spike times ([`spikeprop`]), STDP and weight perturbation
//! ([`plasticity`]), and the task generators, file formats and command-line
//! drivers in [`harness`].
//!
//! ```
//! use ndarray::Array2;
//! use spikegrad::bptt::Network;
//! use spikegrad::neuron::LifParams;
//! use spikegrad::rng::seeded;
//!
//! let mut rng = seeded(7);
//! let net = Network::init(&[3, 4, 2], &LifParams::default(), false, &mut rng).unwrap();
//! let record = net.forward(&Array2::ones((20, 3))).unwrap();
//! assert_eq!(record.output().spikes.dim(), (20, 2));
//! ```

// `!(x > 0.0)` is used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bptt;
pub mod codec;
pub mod error;
pub mod harness;
pub mod neuron;
pub mod objectives;
pub mod online;
pub mod plasticity;
pub mod raster;
pub mod rng;
pub mod spikeprop;
pub mod surrogate;

pub use error::{Error, Result};
pub use raster::SpikeRaster;
