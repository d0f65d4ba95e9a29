use super::{AutogradError, DenseMatrix, Gradients, Params};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 5e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 5e-4,
        }
    }
}

/// Adam with decoupled weight decay.
///
/// Parameters without an entry in the supplied [`Gradients`] are left
/// untouched for that step (no decay, no moment update).
#[derive(Debug, Clone)]
pub struct Adam {
    pub config: AdamConfig,
    step: u64,
    first: Vec<Option<DenseMatrix>>,
    second: Vec<Option<DenseMatrix>>,
}

impl Adam {
    pub fn new(config: AdamConfig) -> Self {
        Self {
            config,
            step: 0,
            first: Vec::new(),
            second: Vec::new(),
        }
    }

    pub fn steps_taken(&self) -> u64 {
        self.step
    }

    pub fn step(&mut self, params: &mut Params, grads: &Gradients) -> Result<(), AutogradError> {
        let next = self.step + 1;
        for (id, g) in grads.iter() {
            let p = params.get(id);
            if g.shape() != p.shape() {
                return Err(AutogradError::GradientShape {
                    name: params.name(id).to_string(),
                    got: g.shape(),
                    expected: p.shape(),
                });
            }
            if !g.is_finite() {
                return Err(AutogradError::NonFiniteGradient {
                    name: params.name(id).to_string(),
                    step: next,
                });
            }
        }
        if self.first.len() < params.len() {
            self.first.resize(params.len(), None);
            self.second.resize(params.len(), None);
        }
        self.step = next;

        let AdamConfig {
            lr,
            beta1,
            beta2,
            eps,
            weight_decay,
        } = self.config;
        let bc1 = 1.0 - beta1.powi(self.step as i32);
        let bc2 = 1.0 - beta2.powi(self.step as i32);

        for (id, g) in grads.iter() {
            let (rows, cols) = g.shape();
            let m = self.first[id].get_or_insert_with(|| DenseMatrix::zeros(rows, cols));
            let v = self.second[id].get_or_insert_with(|| DenseMatrix::zeros(rows, cols));
            let p = params.get_mut(id);
            for (((pv, gv), mv), vv) in p
                .values_mut()
                .iter_mut()
                .zip(g.values())
                .zip(m.values_mut())
                .zip(v.values_mut())
            {
                *pv -= lr * weight_decay * *pv;
                *mv = beta1 * *mv + (1.0 - beta1) * gv;
                *vv = beta2 * *vv + (1.0 - beta2) * gv * gv;
                let m_hat = *mv / bc1;
                let v_hat = *vv / bc2;
                *pv -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}
