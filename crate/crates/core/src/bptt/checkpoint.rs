//! Versioned plain-text network checkpoints.
//!
//! ```text
//! spikegrad-v1
//! layer 0 16 10 0
//! lif 9.0000000000000002e-1 1.0000000000000000e0 subtract 0.0000000000000000e0 0
//! <N_out * N_in weights, row-major, one per line>
//! <N_out * N_out recurrent weights when has_v is 1>
//! layer 1 ...
//! ```
//!
//! Floats are written with 17 significant digits, which round-trips every
//! finite `f64` exactly. Random feedback matrices are not stored.

use std::fmt::Write as _;
use std::path::Path;

use ndarray::Array2;

use super::{Network, SnnLayer};
use crate::error::{Error, Result};
use crate::neuron::{LifParams, ResetMode};

pub const HEADER: &str = "spikegrad-v1";

fn push_float(out: &mut String, x: f64) {
    let _ = writeln!(out, "{x:.16e}");
}

pub fn to_string(net: &Network) -> String {
    let mut out = String::new();
    out.push_str(HEADER);
    out.push('\n');
    for (idx, layer) in net.layers.iter().enumerate() {
        let lif = &layer.lif;
        let _ = writeln!(
            out,
            "layer {idx} {} {} {}",
            layer.n_out(),
            layer.n_in(),
            layer.v.is_some() as u8
        );
        let _ = writeln!(
            out,
            "lif {:.16e} {:.16e} {} {:.16e} {}",
            lif.beta,
            lif.theta0,
            lif.reset_mode.as_str(),
            lif.adapt_alpha,
            lif.learn_beta as u8
        );
        for &w in layer.w.iter() {
            push_float(&mut out, w);
        }
        if let Some(v) = &layer.v {
            for &x in v.iter() {
                push_float(&mut out, x);
            }
        }
    }
    out
}

struct Lines<'a> {
    path: &'a Path,
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Parse {
            path: self.path.to_path_buf(),
            line: self.line,
            msg: msg.into(),
        }
    }

    fn next_line(&mut self) -> Result<&'a str> {
        match self.inner.next() {
            Some((k, l)) => {
                self.line = k + 1;
                Ok(l)
            }
            None => Err(self.err("unexpected end of checkpoint")),
        }
    }

    fn float(&self, s: &str) -> Result<f64> {
        s.trim()
            .parse::<f64>()
            .map_err(|_| self.err(format!("invalid number {s:?}")))
    }

    fn usize(&self, s: &str) -> Result<usize> {
        s.parse::<usize>()
            .map_err(|_| self.err(format!("invalid integer {s:?}")))
    }

    fn flag(&self, s: &str) -> Result<bool> {
        match s {
            "0" => Ok(false),
            "1" => Ok(true),
            _ => Err(self.err(format!("expected 0 or 1, got {s:?}"))),
        }
    }

    fn matrix(&mut self, rows: usize, cols: usize) -> Result<Array2<f64>> {
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows * cols {
            let l = self.next_line()?;
            let x = self.float(l)?;
            if !x.is_finite() {
                return Err(self.err("weights must be finite"));
            }
            data.push(x);
        }
        Ok(Array2::from_shape_vec((rows, cols), data).expect("sized above"))
    }
}

/// Parses checkpoint text. `path` is only used in error messages.
pub fn from_str(text: &str, path: &Path) -> Result<Network> {
    let mut lines = Lines {
        path,
        inner: text.lines().enumerate(),
        line: 0,
    };
    let header = lines.next_line()?;
    if header.trim() != HEADER {
        return Err(lines.err(format!("expected header {HEADER:?}, got {header:?}")));
    }
    let mut layers = Vec::new();
    while let Some((k, l)) = lines.inner.next() {
        lines.line = k + 1;
        if l.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = l.split_whitespace().collect();
        if f.len() != 5 || f[0] != "layer" {
            return Err(lines.err("expected `layer <index> <N_out> <N_in> <has_v>`"));
        }
        if lines.usize(f[1])? != layers.len() {
            return Err(lines.err(format!("expected layer index {}", layers.len())));
        }
        let n_out = lines.usize(f[2])?;
        let n_in = lines.usize(f[3])?;
        let has_v = lines.flag(f[4])?;

        let l = lines.next_line()?;
        let f: Vec<&str> = l.split_whitespace().collect();
        if f.len() != 6 || f[0] != "lif" {
            return Err(lines.err(
                "expected `lif <beta> <theta0> <reset> <adapt_alpha> <learn_beta>`",
            ));
        }
        let lif = LifParams {
            beta: lines.float(f[1])?,
            theta0: lines.float(f[2])?,
            reset_mode: ResetMode::parse(f[3])
                .ok_or_else(|| lines.err(format!("unknown reset mode {:?}", f[3])))?,
            adapt_alpha: lines.float(f[4])?,
            learn_beta: lines.flag(f[5])?,
        };
        lif.validate().map_err(|e| lines.err(e.to_string()))?;
        let w = lines.matrix(n_out, n_in)?;
        let v = if has_v {
            Some(lines.matrix(n_out, n_out)?)
        } else {
            None
        };
        layers.push(SnnLayer {
            w,
            v,
            lif,
            feedback_b: None,
        });
    }
    Network::new(layers).map_err(|e| lines.err(e.to_string()))
}

pub fn save(net: &Network, path: &Path) -> Result<()> {
    std::fs::write(path, to_string(net)).map_err(|e| Error::io(path, e))
}

pub fn load(path: &Path) -> Result<Network> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    from_str(&text, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    #[test]
    fn round_trip_is_exact() {
        let mut rng = seeded(8);
        let lif = LifParams {
            beta: 0.1 + 0.2,
            theta0: 1.0 / 3.0,
            reset_mode: ResetMode::Zero,
            adapt_alpha: 0.05,
            learn_beta: true,
        };
        let net = Network::init(&[3, 4, 2], &lif, true, &mut rng).unwrap();
        let text = to_string(&net);
        let back = from_str(&text, Path::new("mem")).unwrap();
        assert_eq!(back, net);
        assert_eq!(to_string(&back), text);
    }

    #[test]
    fn header_is_checked() {
        let err = from_str("spikegrad-v0\n", Path::new("x.ckpt")).unwrap_err();
        assert!(err.to_string().contains("x.ckpt"));
    }

    #[test]
    fn truncated_weights_rejected() {
        let mut rng = seeded(1);
        let net = Network::init(&[2, 2], &LifParams::default(), false, &mut rng).unwrap();
        let text = to_string(&net);
        let cut: String = text.lines().take(4).map(|l| format!("{l}\n")).collect();
        assert!(from_str(&cut, Path::new("c")).is_err());
    }
}
