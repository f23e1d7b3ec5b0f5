//! AdamW with bias-corrected moments and decoupled weight decay.

use crate::encoder::{EncoderModel, GradientSet};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Scalar;
use crate::textproc::PAD_ID;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamWHyper {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamWHyper {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Moment accumulators for one flat parameter slice.
#[derive(Debug, Clone, PartialEq)]
pub struct Moments<T> {
    pub m: Vec<T>,
    pub v: Vec<T>,
}

impl<T: Scalar> Moments<T> {
    pub fn zeros(len: usize) -> Self {
        Self {
            m: vec![T::zero(); len],
            v: vec![T::zero(); len],
        }
    }
}

/// One AdamW update of a flat slice. `step` is 1-based.
///
/// `p ← p − lr · (m̂ / (√v̂ + eps) + weight_decay · p)`
#[allow(clippy::too_many_arguments)]
pub fn adamw_update<T: Scalar>(
    params: &mut [T],
    grads: &[T],
    m: &mut [T],
    v: &mut [T],
    step: u64,
    lr: f64,
    weight_decay: f64,
    hyper: AdamWHyper,
) {
    debug_assert_eq!(params.len(), grads.len());
    let (b1, b2) = (T::of(hyper.beta1), T::of(hyper.beta2));
    let bc1 = T::of(1.0 - hyper.beta1.powi(step as i32));
    let bc2 = T::of(1.0 - hyper.beta2.powi(step as i32));
    let (lr, wd, eps) = (T::of(lr), T::of(weight_decay), T::of(hyper.eps));
    let one = T::one();
    for (((p, &g), m), v) in params
        .iter_mut()
        .zip(grads)
        .zip(m.iter_mut())
        .zip(v.iter_mut())
    {
        *m = b1 * *m + (one - b1) * g;
        *v = b2 * *v + (one - b2) * g * g;
        let m_hat = *m / bc1;
        let v_hat = *v / bc2;
        *p -= lr * (m_hat / (v_hat.sqrt() + eps) + wd * *p);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState<T> {
    pub hyper: AdamWHyper,
    pub step: u64,
    moments: Vec<Moments<T>>,
}

impl<T: Scalar> OptimizerState<T> {
    pub fn new(model: &EncoderModel<T>, hyper: AdamWHyper) -> Self {
        Self {
            hyper,
            step: 0,
            moments: model
                .tensors()
                .iter()
                .map(|m| Moments::zeros(m.as_slice().len()))
                .collect(),
        }
    }

    pub fn moments(&self) -> &[Moments<T>] {
        &self.moments
    }
}

/// Applies one AdamW step to every parameter tensor. The PAD embedding row
/// is never touched. Non-finite gradients abort before any update.
pub fn adamw_step<T: Scalar>(
    model: &mut EncoderModel<T>,
    grads: &GradientSet<T>,
    state: &mut OptimizerState<T>,
    lr: f64,
    weight_decay: f64,
) -> Result<()> {
    if !grads.all_finite() {
        return Err(Error::Numeric("non-finite gradient".into()));
    }
    let dense: Vec<Matrix<T>> = grads.to_dense(model);
    if dense.len() != state.moments.len() {
        return Err(Error::Dimension {
            expected: state.moments.len(),
            got: dense.len(),
        });
    }
    state.step += 1;
    let step = state.step;
    let hyper = state.hyper;
    for (ti, ((param, grad), mom)) in model
        .tensors_mut()
        .into_iter()
        .zip(&dense)
        .zip(state.moments.iter_mut())
        .enumerate()
    {
        if param.shape() != grad.shape() {
            return Err(Error::Dimension {
                expected: param.as_slice().len(),
                got: grad.as_slice().len(),
            });
        }
        // Tensor 0 is the embedding table; skip its PAD row.
        let skip = if ti == 0 {
            (PAD_ID + 1) * param.cols()
        } else {
            0
        };
        adamw_update(
            &mut param.as_mut_slice()[skip..],
            &grad.as_slice()[skip..],
            &mut mom.m[skip..],
            &mut mom.v[skip..],
            step,
            lr,
            weight_decay,
            hyper,
        );
    }
    if !model.all_finite() {
        return Err(Error::Numeric(format!(
            "non-finite parameters after step {step}"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_no_decay_is_identity() {
        let mut p = vec![0.5f64, -2.0];
        let mut mo = Moments::<f64>::zeros(2);
        adamw_update(
            &mut p,
            &[0.0, 0.0],
            &mut mo.m,
            &mut mo.v,
            1,
            0.1,
            0.0,
            AdamWHyper::default(),
        );
        assert_eq!(p, vec![0.5, -2.0]);
    }

    #[test]
    fn zero_gradient_decay_shrinks() {
        let mut p = vec![0.5f64, -2.0];
        let mut mo = Moments::<f64>::zeros(2);
        adamw_update(
            &mut p,
            &[0.0, 0.0],
            &mut mo.m,
            &mut mo.v,
            1,
            0.1,
            0.01,
            AdamWHyper::default(),
        );
        let f = 1.0 - 0.1 * 0.01;
        assert!((p[0] - 0.5 * f).abs() < 1e-15);
        assert!((p[1] + 2.0 * f).abs() < 1e-15);
    }

    #[test]
    fn first_step_moves_by_lr() {
        let mut p = vec![1.0f64];
        let mut mo = Moments::<f64>::zeros(1);
        adamw_update(
            &mut p,
            &[1.0],
            &mut mo.m,
            &mut mo.v,
            1,
            1e-3,
            0.0,
            AdamWHyper::default(),
        );
        // m̂ = 1, v̂ = 1 → step = lr / (1 + eps)
        assert!((1.0 - p[0] - 1e-3).abs() < 1e-10);
    }

    #[test]
    fn sign_of_gradient_not_magnitude_sets_first_step() {
        let mut p = vec![0.0f64, 0.0];
        let mut mo = Moments::<f64>::zeros(2);
        adamw_update(
            &mut p,
            &[1e-3, -50.0],
            &mut mo.m,
            &mut mo.v,
            1,
            0.01,
            0.0,
            AdamWHyper::default(),
        );
        assert!((p[0] + 0.01).abs() < 1e-6);
        assert!((p[1] - 0.01).abs() < 1e-9);
    }
}
