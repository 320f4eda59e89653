//! Differentiable building blocks with hand-written backward passes.
//!
//! Each block is a pure function. Forward passes that need state for the
//! backward pass return a cache value; the caller owns it and hands it back
//! to the matching `backward`. There is no tape.

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Clamp added to probabilities before taking logarithms.
pub const LOG_EPS: f64 = 1e-12;

/// Default negative-side slope of the leaky ReLU.
pub const DEFAULT_SLOPE: f64 = 0.2;

/// Weights of `x -> x W + b`, with `W` stored `in_dim x out_dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineParams {
    pub weight: Matrix,
    pub bias: Matrix,
}

/// Gradients produced by [`AffineParams::backward`].
#[derive(Debug, Clone)]
pub struct AffineGrads {
    pub weight: Matrix,
    pub bias: Matrix,
    pub input: Matrix,
}

/// Input recorded by the affine forward pass.
#[derive(Debug, Clone)]
pub struct AffineCache {
    input: Matrix,
}

impl AffineCache {
    pub fn input(&self) -> &Matrix {
        &self.input
    }
}

impl AffineParams {
    pub fn new(weight: Matrix, bias: Matrix) -> Result<Self> {
        if bias.rows() != 1 || bias.cols() != weight.cols() {
            return Err(Error::shape(
                "AffineParams::new",
                format!(
                    "bias {}x{} for weight {}x{}",
                    bias.rows(),
                    bias.cols(),
                    weight.rows(),
                    weight.cols()
                ),
            ));
        }
        Ok(Self { weight, bias })
    }

    pub fn zeros(in_dim: usize, out_dim: usize) -> Self {
        Self {
            weight: Matrix::zeros(in_dim, out_dim),
            bias: Matrix::zeros(1, out_dim),
        }
    }

    pub fn in_dim(&self) -> usize {
        self.weight.rows()
    }

    pub fn out_dim(&self) -> usize {
        self.weight.cols()
    }

    /// `x W + b`, broadcasting the bias over rows.
    pub fn apply(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.in_dim() {
            return Err(Error::shape(
                "affine_forward",
                format!("input has {} columns, layer expects {}", x.cols(), self.in_dim()),
            ));
        }
        let mut out = x.matmul(&self.weight)?;
        let bias = self.bias.as_slice();
        for r in 0..out.rows() {
            for (o, &b) in out.row_mut(r).iter_mut().zip(bias) {
                *o += b;
            }
        }
        Ok(out)
    }

    pub fn forward(&self, x: &Matrix) -> Result<(Matrix, AffineCache)> {
        let out = self.apply(x)?;
        Ok((out, AffineCache { input: x.clone() }))
    }

    pub fn backward(&self, cache: &AffineCache, upstream: &Matrix) -> Result<AffineGrads> {
        if upstream.rows() != cache.input.rows() || upstream.cols() != self.out_dim() {
            return Err(Error::State(format!(
                "affine backward got a {}x{} gradient for a forward pass of {} rows into {} outputs",
                upstream.rows(),
                upstream.cols(),
                cache.input.rows(),
                self.out_dim()
            )));
        }
        Ok(AffineGrads {
            weight: cache.input.t_matmul(upstream)?,
            bias: upstream.col_sums(),
            input: upstream.matmul_t(&self.weight)?,
        })
    }
}

/// Free-function form of [`AffineParams::apply`].
pub fn affine_forward(p: &AffineParams, x: &Matrix) -> Result<Matrix> {
    p.apply(x)
}

/// Elementwise `max(x, slope * x)` for `slope` in `[0, 1)`.
pub fn leaky_relu(x: &Matrix, slope: f64) -> Matrix {
    x.map(|v| if v >= 0.0 { v } else { slope * v })
}

/// Gradient of [`leaky_relu`] given the pre-activation it was applied to.
pub fn leaky_relu_backward(pre: &Matrix, upstream: &Matrix, slope: f64) -> Result<Matrix> {
    if pre.shape() != upstream.shape() {
        return Err(Error::State(format!(
            "leaky_relu backward got {:?} gradient for {:?} activation",
            upstream.shape(),
            pre.shape()
        )));
    }
    let data = pre
        .as_slice()
        .iter()
        .zip(upstream.as_slice())
        .map(|(&x, &g)| if x >= 0.0 { g } else { slope * g })
        .collect();
    Matrix::new(pre.rows(), pre.cols(), data)
}

/// Row-wise softmax with max subtraction.
pub fn softmax_rows(z: &Matrix) -> Matrix {
    let mut out = z.clone();
    for r in 0..out.rows() {
        let row = out.row_mut(r);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            total += *v;
        }
        for v in row.iter_mut() {
            *v /= total;
        }
    }
    out
}

/// Summed cross-entropy `-sum_i sum_k y_ik ln(p_ik + eps)`.
///
/// This is the sum over samples, not the mean.
pub fn cross_entropy(probs: &Matrix, labels: &Matrix) -> Result<f64> {
    if probs.shape() != labels.shape() {
        return Err(Error::shape(
            "cross_entropy",
            format!("probs {:?} vs labels {:?}", probs.shape(), labels.shape()),
        ));
    }
    Ok(-probs
        .as_slice()
        .iter()
        .zip(labels.as_slice())
        .filter(|(_, &y)| y != 0.0)
        .map(|(&p, &y)| y * (p + LOG_EPS).ln())
        .sum::<f64>())
}

/// Gradient of `cross_entropy(softmax_rows(z), y)` with respect to the logits `z`.
///
/// Label rows must sum to one; the result is `probs - labels`.
pub fn softmax_cross_entropy_backward(probs: &Matrix, labels: &Matrix) -> Result<Matrix> {
    probs.sub(labels)
}
