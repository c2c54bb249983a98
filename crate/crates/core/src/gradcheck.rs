//! Central finite-difference checks for tape gradients.

use crate::autodiff::{Tape, Var};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// `|a - n| / max(|a|, |n|, 1e-6)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6)
}

/// Builds `f` on a fresh tape with every input as a parameter, backpropagates,
/// and compares each partial derivative with a central difference of the given
/// step. Returns the largest relative error.
///
/// Fails with a domain error when the central differences at `step` and
/// `step / 2` disagree, i.e. some input sits within one step of a kink (e.g.
/// a relu at 0) where the difference quotient is meaningless.
pub fn max_gradient_error<F>(f: F, inputs: &[Tensor], step: f64) -> Result<f64>
where
    F: for<'t> Fn(&'t Tape, &[Var<'t>]) -> Result<Var<'t>>,
{
    let eval = |xs: &[Tensor]| -> Result<f64> {
        let tape = Tape::new();
        let vars: Vec<Var> = xs.iter().map(|x| tape.constant(x.clone())).collect();
        Ok(f(&tape, &vars)?.item())
    };
    let tape = Tape::new();
    let vars: Vec<Var> = inputs.iter().map(|x| tape.param(x.clone())).collect();
    let root = f(&tape, &vars)?;
    let grads = tape.backward(root)?;

    let mut worst = 0.0f64;
    let mut probe = inputs.to_vec();
    for (i, v) in vars.iter().enumerate() {
        let analytic = grads.wrt_or_zeros(*v);
        for j in 0..inputs[i].len() {
            let x = inputs[i].data()[j];
            let mut central = |h: f64| -> Result<f64> {
                probe[i].data_mut()[j] = x + h;
                let hi = eval(&probe)?;
                probe[i].data_mut()[j] = x - h;
                let lo = eval(&probe)?;
                probe[i].data_mut()[j] = x;
                Ok((hi - lo) / (2.0 * h))
            };
            let numeric = central(step)?;
            let half = central(step / 2.0)?;
            if !numeric.is_finite() {
                return Err(Error::Domain(format!("non-finite difference at input {i}[{j}]")));
            }
            if (numeric - half).abs() > 1e-7 * numeric.abs().max(1.0) {
                return Err(Error::Domain(format!("input {i}[{j}] is at a non-differentiable point")));
            }
            worst = worst.max(relative_error(analytic.data()[j], numeric));
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_is_exact() {
        let x = Tensor::from_rows(&[&[1.0, -2.0, 0.5]]);
        let err = max_gradient_error(|_, v| Ok(v[0].mul(v[0])?.sum()), &[x], 1e-5).unwrap();
        assert!(err < 1e-8, "{err}");
    }

    #[test]
    fn flags_kinks() {
        let x = Tensor::from_rows(&[&[2e-6]]);
        let r = max_gradient_error(|_, v| Ok(v[0].relu().sum()), &[x], 1e-5);
        assert!(matches!(r, Err(Error::Domain(_))));
    }

    #[test]
    fn detects_wrong_gradient() {
        // copying into a constant hides the dependence from the tape
        let x = Tensor::from_rows(&[&[1.0]]);
        let err = max_gradient_error(
            |t, v| {
                let frozen = t.constant(v[0].to_tensor());
                Ok(frozen.mul(frozen)?.sum())
            },
            &[x],
            1e-5,
        )
        .unwrap();
        assert!(err > 0.5);
    }
}
