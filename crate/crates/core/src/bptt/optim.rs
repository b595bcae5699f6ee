use crate::error::{check_dim, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OptimizerKind {
    Sgd {
        lr: f64,
    },
    Adam {
        lr: f64,
        beta1: f64,
        beta2: f64,
        eps: f64,
    },
}

impl OptimizerKind {
    pub fn adam(lr: f64) -> Self {
        OptimizerKind::Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    pub fn lr(&self) -> f64 {
        match *self {
            OptimizerKind::Sgd { lr } | OptimizerKind::Adam { lr, .. } => lr,
        }
    }

    pub fn validate(&self) -> Result<()> {
        // lr = 0 is allowed: it freezes the parameters
        if !(self.lr() >= 0.0) {
            return Err(Error::arg("learning rate must be non-negative"));
        }
        if let OptimizerKind::Adam { beta1, beta2, eps, .. } = *self {
            if !(0.0..1.0).contains(&beta1) || !(0.0..1.0).contains(&beta2) || !(eps > 0.0) {
                return Err(Error::arg("Adam needs 0 <= beta1, beta2 < 1 and eps > 0"));
            }
        }
        Ok(())
    }
}

/// Optimizer kind plus Adam's per-parameter moment buffers.
#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerState {
    pub kind: OptimizerKind,
    pub step: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl OptimizerState {
    pub fn new(kind: OptimizerKind) -> Result<Self> {
        kind.validate()?;
        Ok(Self {
            kind,
            step: 0,
            m: Vec::new(),
            v: Vec::new(),
        })
    }
}

/// Applies one update to every parameter buffer in place.
pub fn optimizer_step(
    params: &mut [&mut [f64]],
    grads: &[&[f64]],
    state: &mut OptimizerState,
) -> Result<()> {
    check_dim("optimizer parameter groups", params.len(), grads.len())?;
    for (p, g) in params.iter().zip(grads) {
        check_dim("optimizer parameter size", p.len(), g.len())?;
    }
    state.step += 1;
    match state.kind {
        OptimizerKind::Sgd { lr } => {
            for (p, g) in params.iter_mut().zip(grads) {
                for (pi, gi) in p.iter_mut().zip(g.iter()) {
                    *pi -= lr * gi;
                }
            }
        }
        OptimizerKind::Adam {
            lr,
            beta1,
            beta2,
            eps,
        } => {
            if state.m.is_empty() {
                state.m = grads.iter().map(|g| vec![0.0; g.len()]).collect();
                state.v = grads.iter().map(|g| vec![0.0; g.len()]).collect();
            }
            check_dim("Adam moment groups", state.m.len(), grads.len())?;
            let t = state.step as i32;
            let c1 = 1.0 - beta1.powi(t);
            let c2 = 1.0 - beta2.powi(t);
            for (k, (p, g)) in params.iter_mut().zip(grads).enumerate() {
                let (m, v) = (&mut state.m[k], &mut state.v[k]);
                check_dim("Adam moment size", m.len(), g.len())?;
                for i in 0..g.len() {
                    m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
                    v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
                    let m_hat = m[i] / c1;
                    let v_hat = v[i] / c2;
                    p[i] -= lr * m_hat / (v_hat.sqrt() + eps);
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(kind: OptimizerKind, p: &mut [f64], g: &[f64]) {
        let mut state = OptimizerState::new(kind).unwrap();
        optimizer_step(&mut [p], &[g], &mut state).unwrap();
    }

    #[test]
    fn zero_gradient_is_a_no_op() {
        let mut p = [0.5, -1.0];
        run(OptimizerKind::Sgd { lr: 0.1 }, &mut p, &[0.0, 0.0]);
        assert_eq!(p, [0.5, -1.0]);
        run(OptimizerKind::adam(0.1), &mut p, &[0.0, 0.0]);
        assert_eq!(p, [0.5, -1.0]);
    }

    #[test]
    fn sgd_step() {
        let mut p = [1.0];
        run(OptimizerKind::Sgd { lr: 0.1 }, &mut p, &[1.0]);
        assert!((p[0] - 0.9).abs() < 1e-15);
    }

    #[test]
    fn adam_first_step_is_lr() {
        // m_hat = 1, v_hat = 1, so the step is lr / (1 + eps)
        let mut p = [0.0];
        run(OptimizerKind::adam(1e-3), &mut p, &[1.0]);
        assert!((p[0] + 1e-3 / (1.0 + 1e-8)).abs() < 1e-15);
        let mut p = [0.0];
        run(OptimizerKind::adam(1e-3), &mut p, &[-250.0]);
        assert!((p[0] - 1e-3).abs() < 1e-10);
    }

    #[test]
    fn shape_mismatch_rejected() {
        let mut state = OptimizerState::new(OptimizerKind::Sgd { lr: 0.1 }).unwrap();
        let mut p = [1.0, 2.0];
        assert!(optimizer_step(&mut [&mut p], &[&[1.0]], &mut state).is_err());
        assert!(OptimizerState::new(OptimizerKind::Adam { lr: 0.1, beta1: 1.0, beta2: 0.9, eps: 1e-8 }).is_err());
    }
}
