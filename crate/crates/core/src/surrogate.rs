//! Spike generation and the backward-pass stand-ins for its derivative.

use crate::neuron::sigmoid;

/// Derivative substitute used in place of `dS/dU` during backpropagation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SurrogateKind {
    /// The exact derivative: zero everywhere (the dead-neuron baseline).
    Heaviside,
    /// Logistic derivative rescaled to peak at 1.
    Sigmoid { slope: f64 },
    /// `1 / (1 + k|U - theta|)^2`.
    FastSigmoid { slope: f64 },
    /// `max(1 - |U - theta|, 0)`.
    Triangular,
    /// The forward spike itself, or `subthreshold_scale` where the neuron
    /// stayed silent.
    HybridSpike { subthreshold_scale: f64 },
    /// `scale` above threshold, zero below.
    ShiftedReluGrad { scale: f64 },
}

impl Default for SurrogateKind {
    fn default() -> Self {
        SurrogateKind::FastSigmoid { slope: 25.0 }
    }
}

impl SurrogateKind {
    pub fn name(&self) -> &'static str {
        match self {
            SurrogateKind::Heaviside => "heaviside",
            SurrogateKind::Sigmoid { .. } => "sigmoid",
            SurrogateKind::FastSigmoid { .. } => "fast_sigmoid",
            SurrogateKind::Triangular => "triangular",
            SurrogateKind::HybridSpike { .. } => "hybrid_spike",
            SurrogateKind::ShiftedReluGrad { .. } => "shifted_relu",
        }
    }

    /// Estimate of `dS/dU` at membrane `u`, threshold `theta` and forward
    /// spike bit `s`.
    pub fn grad(&self, u: f64, theta: f64, s: f64) -> f64 {
        surrogate_grad(*self, u, theta, s)
    }
}

/// `1` iff `u > theta`.
#[inline]
pub fn spike_forward(u: f64, theta: f64) -> f64 {
    if u > theta {
        1.0
    } else {
        0.0
    }
}

/// Unnormalised logistic slope `sigma'(k (u - theta))`, as it would come out
/// of differentiating `sigmoid(u - theta)` with unit slope.
pub fn sigmoid_slope_raw(u: f64, theta: f64) -> f64 {
    let s = sigmoid(u - theta);
    s * (1.0 - s)
}

pub fn surrogate_grad(kind: SurrogateKind, u: f64, theta: f64, s: f64) -> f64 {
    let x = u - theta;
    match kind {
        SurrogateKind::Heaviside => 0.0,
        SurrogateKind::Sigmoid { slope } => {
            // sigma' peaks at 1/4, so 4 sigma'(kx) has unit peak
            let sg = sigmoid(slope * x);
            4.0 * sg * (1.0 - sg)
        }
        SurrogateKind::FastSigmoid { slope } => {
            let d = 1.0 + slope * x.abs();
            1.0 / (d * d)
        }
        SurrogateKind::Triangular => (1.0 - x.abs()).max(0.0),
        SurrogateKind::HybridSpike { subthreshold_scale } => {
            if s > 0.0 {
                s
            } else {
                subthreshold_scale
            }
        }
        SurrogateKind::ShiftedReluGrad { scale } => {
            if x > 0.0 {
                scale
            } else {
                0.0
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn forward_is_strict() {
        assert_eq!(spike_forward(1.0, 1.0), 0.0);
        assert_eq!(spike_forward(1.0 + 1e-12, 1.0), 1.0);
        let trace = [0.2, 1.5, 1.0, -3.0, 2.0];
        let bits: Vec<f64> = trace.iter().map(|&u| spike_forward(u, 1.0)).collect();
        assert_eq!(bits, vec![0.0, 1.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn sigmoid_normalised_peak() {
        let k = SurrogateKind::Sigmoid { slope: 3.0 };
        assert!((k.grad(1.0, 1.0, 0.0) - 1.0).abs() < 1e-15);
        assert!(k.grad(1.3, 1.0, 0.0) < 1.0);
    }

    #[test]
    fn raw_sigmoid_slope_one_below_threshold() {
        // sigma'(-1) = e^-1 / (1 + e^-1)^2
        let e = (-1.0f64).exp();
        let expected = e / ((1.0 + e) * (1.0 + e));
        assert!((sigmoid_slope_raw(0.0, 1.0) - expected).abs() < 1e-15);
        assert!((sigmoid_slope_raw(0.0, 1.0) - 0.1966).abs() < 1e-4);
    }

    #[test]
    fn hybrid_follows_forward_spike() {
        let k = SurrogateKind::HybridSpike {
            subthreshold_scale: 0.0,
        };
        assert_eq!(k.grad(0.2, 1.0, 0.0), 0.0);
        assert_eq!(k.grad(1.2, 1.0, 1.0), 1.0);
        let k = SurrogateKind::HybridSpike {
            subthreshold_scale: 0.05,
        };
        assert_eq!(k.grad(0.2, 1.0, 0.0), 0.05);
    }

    #[test]
    fn heaviside_and_relu() {
        assert_eq!(SurrogateKind::Heaviside.grad(1.0, 1.0, 0.0), 0.0);
        let r = SurrogateKind::ShiftedReluGrad { scale: 0.7 };
        assert_eq!(r.grad(1.1, 1.0, 1.0), 0.7);
        assert_eq!(r.grad(0.9, 1.0, 0.0), 0.0);
    }

    #[test]
    fn triangular_compact_support() {
        let t = SurrogateKind::Triangular;
        assert_eq!(t.grad(-0.5, 1.0, 0.0), 0.0);
        assert_eq!(t.grad(2.0, 1.0, 1.0), 0.0);
        assert!((t.grad(1.5, 1.0, 1.0) - 0.5).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn smooth_surrogates_even_nonneg_unit_peak(x in -5.0f64..5.0, k in 0.1f64..50.0, theta in -2.0f64..2.0) {
            for kind in [
                SurrogateKind::Sigmoid { slope: k },
                SurrogateKind::FastSigmoid { slope: k },
                SurrogateKind::Triangular,
            ] {
                let a = kind.grad(theta + x, theta, 0.0);
                let b = kind.grad(theta - x, theta, 0.0);
                prop_assert!(a >= 0.0);
                prop_assert!((a - b).abs() < 1e-12);
                prop_assert!(a <= 1.0 + 1e-15);
                prop_assert!((kind.grad(theta, theta, 0.0) - 1.0).abs() < 1e-15);
            }
        }
    }
}
