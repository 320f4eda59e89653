//! Projection networks, shared classifier and soft labels.
//!
//! Source and target features live in spaces of different dimension. Two
//! projection networks, each `affine -> leaky ReLU -> affine`, map them into a
//! common `subspace_dim`-dimensional space where a single softmax classifier
//! is shared by both domains.

use serde::{Deserialize, Serialize};

use crate::blocks::{leaky_relu, leaky_relu_backward, softmax_rows, AffineCache, AffineParams};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::optim::ParamSet;
use crate::rng::SeededRng;

/// Architecture of an STN model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub source_dim: usize,
    pub target_dim: usize,
    pub subspace_dim: usize,
    pub hidden_dim: usize,
    pub classes: usize,
    pub slope: f64,
    pub init_seed: u64,
}

impl ModelConfig {
    /// Default architecture for the given feature dimensions and class count:
    /// a 256-dimensional subspace, hidden width equal to it, slope 0.2.
    pub fn new(source_dim: usize, target_dim: usize, classes: usize) -> Self {
        Self {
            source_dim,
            target_dim,
            subspace_dim: 256,
            hidden_dim: 256,
            classes,
            slope: crate::blocks::DEFAULT_SLOPE,
            init_seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let dims = [
            ("source_dim", self.source_dim),
            ("target_dim", self.target_dim),
            ("subspace_dim", self.subspace_dim),
            ("hidden_dim", self.hidden_dim),
            ("classes", self.classes),
        ];
        for (name, v) in dims {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be at least 1")));
            }
        }
        if !(0.0..1.0).contains(&self.slope) {
            return Err(Error::Config(format!(
                "leaky ReLU slope {} outside [0, 1)",
                self.slope
            )));
        }
        Ok(())
    }
}

/// Two-layer projection network into the common subspace.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub hidden: AffineParams,
    pub output: AffineParams,
}

/// Activations recorded by [`Projection::forward`].
#[derive(Debug, Clone)]
pub struct ProjectionCache {
    hidden: AffineCache,
    pre_activation: Matrix,
    output: AffineCache,
}

impl Projection {
    fn zeros_like(&self) -> Self {
        Self {
            hidden: AffineParams::zeros(self.hidden.in_dim(), self.hidden.out_dim()),
            output: AffineParams::zeros(self.output.in_dim(), self.output.out_dim()),
        }
    }

    pub fn in_dim(&self) -> usize {
        self.hidden.in_dim()
    }

    pub fn out_dim(&self) -> usize {
        self.output.out_dim()
    }

    pub fn apply(&self, x: &Matrix, slope: f64) -> Result<Matrix> {
        let h = leaky_relu(&self.hidden.apply(x)?, slope);
        self.output.apply(&h)
    }

    pub fn forward(&self, x: &Matrix, slope: f64) -> Result<(Matrix, ProjectionCache)> {
        let (pre, hidden) = self.hidden.forward(x)?;
        let h = leaky_relu(&pre, slope);
        let (z, output) = self.output.forward(&h)?;
        Ok((
            z,
            ProjectionCache {
                hidden,
                pre_activation: pre,
                output,
            },
        ))
    }

    /// Adds the parameter gradient for upstream `d_out` into `grads`.
    pub fn backward_into(
        &self,
        cache: &ProjectionCache,
        d_out: &Matrix,
        slope: f64,
        grads: &mut Projection,
    ) -> Result<()> {
        let g_out = self.output.backward(&cache.output, d_out)?;
        let d_pre = leaky_relu_backward(&cache.pre_activation, &g_out.input, slope)?;
        let g_hidden = self.hidden.backward(&cache.hidden, &d_pre)?;
        grads.output.weight.add_assign(&g_out.weight)?;
        grads.output.bias.add_assign(&g_out.bias)?;
        grads.hidden.weight.add_assign(&g_hidden.weight)?;
        grads.hidden.bias.add_assign(&g_hidden.bias)?;
        Ok(())
    }

    fn weight_sum_sq(&self) -> f64 {
        self.hidden.weight.sum_sq() + self.output.weight.sum_sq()
    }
}

/// All learnable weights: source projection, target projection, classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct StnParams {
    pub phi_s: Projection,
    pub phi_t: Projection,
    pub clf: AffineParams,
    pub slope: f64,
}

/// Gradient container with the same layout as [`StnParams`].
pub type StnGrads = StnParams;

fn glorot(rng: &mut SeededRng, fan_in: usize, fan_out: usize) -> Result<AffineParams> {
    let bound = glorot_bound(fan_in, fan_out);
    Ok(AffineParams {
        weight: rng.uniform(fan_in, fan_out, -bound, bound)?,
        bias: Matrix::zeros(1, fan_out),
    })
}

/// `sqrt(6 / (fan_in + fan_out))`.
pub fn glorot_bound(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}

impl StnParams {
    /// Glorot-uniform weights and zero biases, deterministic in `cfg.init_seed`.
    pub fn init(cfg: &ModelConfig) -> Result<Self> {
        cfg.validate()?;
        let mut rng = SeededRng::new(cfg.init_seed);
        let (h, d) = (cfg.hidden_dim, cfg.subspace_dim);
        Ok(Self {
            phi_s: Projection {
                hidden: glorot(&mut rng, cfg.source_dim, h)?,
                output: glorot(&mut rng, h, d)?,
            },
            phi_t: Projection {
                hidden: glorot(&mut rng, cfg.target_dim, h)?,
                output: glorot(&mut rng, h, d)?,
            },
            clf: glorot(&mut rng, d, cfg.classes)?,
            slope: cfg.slope,
        })
    }

    /// Assembles parameters from explicit layers, checking that they chain.
    pub fn from_parts(phi_s: Projection, phi_t: Projection, clf: AffineParams, slope: f64) -> Result<Self> {
        let chain_ok = |p: &Projection| p.hidden.out_dim() == p.output.in_dim();
        if !chain_ok(&phi_s) || !chain_ok(&phi_t) {
            return Err(Error::shape("StnParams", "projection layers do not chain"));
        }
        if phi_s.out_dim() != phi_t.out_dim() || phi_s.out_dim() != clf.in_dim() {
            return Err(Error::shape(
                "StnParams",
                format!(
                    "source subspace {}, target subspace {}, classifier input {}",
                    phi_s.out_dim(),
                    phi_t.out_dim(),
                    clf.in_dim()
                ),
            ));
        }
        Ok(Self {
            phi_s,
            phi_t,
            clf,
            slope,
        })
    }

    pub fn source_dim(&self) -> usize {
        self.phi_s.in_dim()
    }

    pub fn target_dim(&self) -> usize {
        self.phi_t.in_dim()
    }

    pub fn subspace_dim(&self) -> usize {
        self.clf.in_dim()
    }

    pub fn classes(&self) -> usize {
        self.clf.out_dim()
    }

    pub fn project_source(&self, xs: &Matrix) -> Result<Matrix> {
        self.phi_s.apply(xs, self.slope)
    }

    pub fn project_target(&self, xt: &Matrix) -> Result<Matrix> {
        self.phi_t.apply(xt, self.slope)
    }

    /// Classifier logits for subspace points.
    pub fn logits(&self, z: &Matrix) -> Result<Matrix> {
        self.clf.apply(z)
    }

    /// Class probabilities `softmax(z W_f + b_f)`.
    pub fn classify(&self, z: &Matrix) -> Result<Matrix> {
        Ok(softmax_rows(&self.logits(z)?))
    }

    /// Predicted class per target-domain row; ties go to the lowest index.
    pub fn predict(&self, xt: &Matrix) -> Result<Vec<usize>> {
        Ok(self.classify(&self.project_target(xt)?)?.argmax_rows())
    }

    /// Sum of squared weight entries over all five layers (biases excluded).
    pub fn weight_sum_sq(&self) -> f64 {
        self.phi_s.weight_sum_sq() + self.phi_t.weight_sum_sq() + self.clf.weight.sum_sq()
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            phi_s: self.phi_s.zeros_like(),
            phi_t: self.phi_t.zeros_like(),
            clf: AffineParams::zeros(self.clf.in_dim(), self.clf.out_dim()),
            slope: self.slope,
        }
    }

    /// The ten parameter matrices in a fixed order.
    pub fn matrices(&self) -> [&Matrix; 10] {
        [
            &self.phi_s.hidden.weight,
            &self.phi_s.hidden.bias,
            &self.phi_s.output.weight,
            &self.phi_s.output.bias,
            &self.phi_t.hidden.weight,
            &self.phi_t.hidden.bias,
            &self.phi_t.output.weight,
            &self.phi_t.output.bias,
            &self.clf.weight,
            &self.clf.bias,
        ]
    }

    pub fn matrices_mut(&mut self) -> [&mut Matrix; 10] {
        [
            &mut self.phi_s.hidden.weight,
            &mut self.phi_s.hidden.bias,
            &mut self.phi_s.output.weight,
            &mut self.phi_s.output.bias,
            &mut self.phi_t.hidden.weight,
            &mut self.phi_t.hidden.bias,
            &mut self.phi_t.output.weight,
            &mut self.phi_t.output.bias,
            &mut self.clf.weight,
            &mut self.clf.bias,
        ]
    }

    pub fn num_params(&self) -> usize {
        self.matrices().iter().map(|m| m.as_slice().len()).sum()
    }

    /// All parameters concatenated in [`matrices`](Self::matrices) order.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        for m in self.matrices() {
            out.extend_from_slice(m.as_slice());
        }
        out
    }

    /// Inverse of [`flatten`](Self::flatten).
    pub fn load_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.num_params() {
            return Err(Error::shape(
                "load_flat",
                format!("{} values for {} parameters", flat.len(), self.num_params()),
            ));
        }
        let mut offset = 0;
        for m in self.matrices_mut() {
            let n = m.as_slice().len();
            m.as_mut_slice().copy_from_slice(&flat[offset..offset + n]);
            offset += n;
        }
        Ok(())
    }
}

impl ParamSet for StnParams {
    fn zeros_like(&self) -> Self {
        StnParams::zeros_like(self)
    }

    fn buffers(&self) -> Vec<&[f64]> {
        self.matrices().into_iter().map(Matrix::as_slice).collect()
    }

    fn buffers_mut(&mut self) -> Vec<&mut [f64]> {
        self.matrices_mut()
            .into_iter()
            .map(Matrix::as_mut_slice)
            .collect()
    }
}

/// Class-probability estimates for the unlabeled target rows together with
/// the iteration they were taken at.
///
/// The adaptive weight of row `i` for class `k` is `(r / R) * probs[i][k]`,
/// so unlabeled data is phased in linearly over training.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftLabelMatrix {
    probs: Matrix,
    iteration: usize,
    total: usize,
}

impl SoftLabelMatrix {
    pub fn new(probs: Matrix, iteration: usize, total: usize) -> Result<Self> {
        if total == 0 {
            return Err(Error::Config("total iterations must be at least 1".into()));
        }
        if iteration > total {
            return Err(Error::Config(format!(
                "iteration {iteration} exceeds total {total}"
            )));
        }
        for (i, row) in probs.iter_rows().enumerate() {
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > 1e-9 || row.iter().any(|&p| !(p >= 0.0)) {
                return Err(Error::Range(format!(
                    "soft-label row {i} is not a probability vector (sum {s})"
                )));
            }
        }
        Ok(Self {
            probs,
            iteration,
            total,
        })
    }

    pub fn probs(&self) -> &Matrix {
        &self.probs
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn total(&self) -> usize {
        self.total
    }

    pub fn rows(&self) -> usize {
        self.probs.rows()
    }

    pub fn classes(&self) -> usize {
        self.probs.cols()
    }

    /// `r / R`.
    pub fn coefficient(&self) -> f64 {
        self.iteration as f64 / self.total as f64
    }

    /// Adaptive weights `A[i][k] = (r / R) * probs[i][k]`.
    pub fn weights(&self) -> Matrix {
        let c = self.coefficient();
        self.probs.map(|p| c * p)
    }

    /// Same labels taken at another iteration.
    pub fn at_iteration(&self, iteration: usize) -> Result<Self> {
        Self::new(self.probs.clone(), iteration, self.total)
    }

    /// Replaces every row with the one-hot vector of its most likely class.
    pub fn hardened(&self) -> Self {
        let hard = crate::matrix::one_hot(&self.probs.argmax_rows(), self.classes())
            .expect("argmax is always in range");
        Self {
            probs: hard,
            iteration: self.iteration,
            total: self.total,
        }
    }
}

/// Soft labels of the unlabeled target rows under the current parameters.
///
/// The result is a constant: no gradient flows back through it.
pub fn compute_soft_labels(
    params: &StnParams,
    unlabeled: &Matrix,
    iteration: usize,
    total: usize,
) -> Result<SoftLabelMatrix> {
    let probs = params.classify(&params.project_target(unlabeled)?)?;
    SoftLabelMatrix::new(probs, iteration, total)
}
