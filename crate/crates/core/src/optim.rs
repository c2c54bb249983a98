use crate::error::{dim_err, Result};
use crate::tensor::Tensor;

/// Adam with bias correction.
#[derive(Debug, Clone)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step: u64,
    m: Vec<Tensor>,
    v: Vec<Tensor>,
}

impl Adam {
    pub fn new(lr: f64, params: &[Tensor]) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            m: params.iter().map(Tensor::zeros_like).collect(),
            v: params.iter().map(Tensor::zeros_like).collect(),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn moments(&self) -> (&[Tensor], &[Tensor]) {
        (&self.m, &self.v)
    }

    pub fn step(&mut self, params: &mut [Tensor], grads: &[Tensor]) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != params.len() {
            return Err(dim_err(
                "adam_step",
                format!(
                    "{} params, {} grads, {} moment slots",
                    params.len(),
                    grads.len(),
                    self.m.len()
                ),
            ));
        }
        for ((p, g), m) in params.iter().zip(grads).zip(&self.m) {
            p.check_same_shape(g, "adam_step")?;
            p.check_same_shape(m, "adam_step")?;
        }
        self.step += 1;
        let t = self.step as i32;
        let bc1 = 1.0 - self.beta1.powi(t);
        let bc2 = 1.0 - self.beta2.powi(t);
        for ((p, g), (m, v)) in params
            .iter_mut()
            .zip(grads)
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            let (pd, gd) = (p.data_mut(), g.data());
            let (md, vd) = (m.data_mut(), v.data_mut());
            for i in 0..pd.len() {
                md[i] = self.beta1 * md[i] + (1.0 - self.beta1) * gd[i];
                vd[i] = self.beta2 * vd[i] + (1.0 - self.beta2) * gd[i] * gd[i];
                let m_hat = md[i] / bc1;
                let v_hat = vd[i] / bc2;
                pd[i] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_params() {
        let mut p = vec![Tensor::from_rows(&[&[1.0, -2.0]])];
        let mut adam = Adam::new(0.1, &p);
        adam.step(&mut p, &[Tensor::zeros(1, 2)]).unwrap();
        assert_eq!(p[0].data(), &[1.0, -2.0]);
        assert_eq!(adam.step_count(), 1);
    }

    #[test]
    fn first_step_moves_by_lr() {
        // m_hat = 1, v_hat = 1 after bias correction -> delta = lr / (1 + eps)
        let mut p = vec![Tensor::scalar(0.5)];
        let mut adam = Adam::new(0.001, &p);
        adam.step(&mut p, &[Tensor::scalar(1.0)]).unwrap();
        let want = 0.5 - 0.001 / (1.0 + 1e-8);
        assert!((p[0].item() - want).abs() < 1e-15);
    }

    #[test]
    fn second_identical_step_not_larger() {
        let mut p = vec![Tensor::scalar(0.0)];
        let mut adam = Adam::new(0.001, &p);
        adam.step(&mut p, &[Tensor::scalar(1.0)]).unwrap();
        let d1 = p[0].item().abs();
        let before = p[0].item();
        adam.step(&mut p, &[Tensor::scalar(1.0)]).unwrap();
        let d2 = (p[0].item() - before).abs();
        assert!(d2 <= d1 + 1e-9);
    }

    #[test]
    fn shape_mismatch_rejected() {
        let mut p = vec![Tensor::zeros(2, 2)];
        let mut adam = Adam::new(0.1, &p);
        assert!(adam.step(&mut p, &[Tensor::zeros(1, 2)]).is_err());
        assert!(adam.step(&mut p, &[]).is_err());
        assert_eq!(adam.moments().0[0].shape(), p[0].shape());
    }
}
