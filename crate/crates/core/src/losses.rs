//! Classification loss and the centroid-based discrepancy terms.
//!
//! Every loss returns its value together with the gradient with respect to
//! the embeddings it was given, so the caller can push the gradient back
//! through the projection networks.

use serde::{Deserialize, Serialize};

use crate::blocks::{cross_entropy, softmax_cross_entropy_backward, softmax_rows};
use crate::error::{Error, Result};
use crate::matrix::{one_hot, Matrix};
use crate::model::{SoftLabelMatrix, StnGrads, StnParams};

/// Floor on the target-side class denominator.
pub const DEN_EPS: f64 = 1e-8;

/// Projected labeled rows of both domains, source rows first.
#[derive(Debug, Clone)]
pub struct LabeledProjectedBatch {
    embeddings: Matrix,
    labels: Matrix,
    source_rows: usize,
}

impl LabeledProjectedBatch {
    /// Stacks projected source rows on top of projected labeled target rows.
    pub fn new(
        source: &Matrix,
        source_labels: &[usize],
        labeled: &Matrix,
        labeled_labels: &[usize],
        classes: usize,
    ) -> Result<Self> {
        if source.rows() != source_labels.len() || labeled.rows() != labeled_labels.len() {
            return Err(Error::shape(
                "LabeledProjectedBatch",
                "label count differs from row count",
            ));
        }
        let labels: Vec<usize> = source_labels.iter().chain(labeled_labels).copied().collect();
        Ok(Self {
            embeddings: source.vstack(labeled)?,
            labels: one_hot(&labels, classes)?,
            source_rows: source.rows(),
        })
    }

    /// Batch from already-stacked embeddings and one-hot label rows.
    pub fn from_stacked(embeddings: Matrix, labels: Matrix, source_rows: usize) -> Result<Self> {
        if embeddings.rows() != labels.rows() || source_rows > embeddings.rows() {
            return Err(Error::shape(
                "LabeledProjectedBatch",
                format!(
                    "{} embeddings, {} label rows, {source_rows} source rows",
                    embeddings.rows(),
                    labels.rows()
                ),
            ));
        }
        for (i, row) in labels.iter_rows().enumerate() {
            let ones = row.iter().filter(|&&v| v == 1.0).count();
            let zeros = row.iter().filter(|&&v| v == 0.0).count();
            if ones != 1 || ones + zeros != row.len() {
                return Err(Error::Range(format!("label row {i} is not one-hot")));
            }
        }
        Ok(Self {
            embeddings,
            labels,
            source_rows,
        })
    }

    pub fn embeddings(&self) -> &Matrix {
        &self.embeddings
    }

    pub fn labels(&self) -> &Matrix {
        &self.labels
    }

    pub fn source_rows(&self) -> usize {
        self.source_rows
    }

    pub fn len(&self) -> usize {
        self.embeddings.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.embeddings.rows() == 0
    }
}

/// Per-class row indices of the labeled source and labeled target sets.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassIndex {
    source: Vec<Vec<usize>>,
    labeled: Vec<Vec<usize>>,
}

impl ClassIndex {
    /// Fails with a configuration error naming the first class that has no
    /// labeled source or no labeled target row.
    pub fn new(source_labels: &[usize], labeled_labels: &[usize], classes: usize) -> Result<Self> {
        let bucket = |labels: &[usize], side: &str| -> Result<Vec<Vec<usize>>> {
            let mut out = vec![Vec::new(); classes];
            for (i, &y) in labels.iter().enumerate() {
                if y >= classes {
                    return Err(Error::Config(format!(
                        "{side} label {y} at row {i} outside 0..{classes}"
                    )));
                }
                out[y].push(i);
            }
            if let Some(k) = out.iter().position(Vec::is_empty) {
                return Err(Error::Config(format!("class {k} has no {side} samples")));
            }
            Ok(out)
        };
        Ok(Self {
            source: bucket(source_labels, "labeled source")?,
            labeled: bucket(labeled_labels, "labeled target")?,
        })
    }

    pub fn classes(&self) -> usize {
        self.source.len()
    }

    pub fn source(&self, class: usize) -> &[usize] {
        &self.source[class]
    }

    pub fn labeled(&self, class: usize) -> &[usize] {
        &self.labeled[class]
    }
}

/// Per-iteration objective values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveBreakdown {
    pub iteration: usize,
    pub cls_loss: f64,
    pub reg_term: f64,
    pub q_m: f64,
    pub q_c: f64,
    pub total: f64,
}

/// Value and gradients of the regularised classification loss.
#[derive(Debug, Clone)]
pub struct ClassificationLoss {
    /// Mean cross-entropy over the batch.
    pub cls: f64,
    /// `tau * sum of squared weights`.
    pub reg: f64,
    /// Gradient with respect to the batch embeddings.
    pub d_embeddings: Matrix,
    /// Classifier gradients plus the regulariser gradient of every weight.
    pub param_grads: StnGrads,
}

impl ClassificationLoss {
    pub fn value(&self) -> f64 {
        self.cls + self.reg
    }
}

/// Mean cross-entropy of the shared classifier on the batch plus
/// `tau * (|phi_s|^2 + |phi_t|^2 + |f|^2)` over weight matrices.
pub fn classification_loss(
    batch: &LabeledProjectedBatch,
    params: &StnParams,
    tau: f64,
) -> Result<ClassificationLoss> {
    if batch.is_empty() {
        return Err(Error::EmptyInput("classification_loss"));
    }
    if !(tau >= 0.0) {
        return Err(Error::Range(format!("tau {tau} must be nonnegative")));
    }
    if batch.labels().cols() != params.classes() {
        return Err(Error::shape(
            "classification_loss",
            format!(
                "{} label columns for {} classes",
                batch.labels().cols(),
                params.classes()
            ),
        ));
    }
    let n = batch.len() as f64;
    let (logits, cache) = params.clf.forward(batch.embeddings())?;
    let probs = softmax_rows(&logits);
    let cls = cross_entropy(&probs, batch.labels())? / n;
    let d_logits = softmax_cross_entropy_backward(&probs, batch.labels())?.scale(1.0 / n);
    let g = params.clf.backward(&cache, &d_logits)?;

    let mut grads = params.zeros_like();
    grads.clf.weight = g.weight;
    grads.clf.bias = g.bias;
    let reg = tau * params.weight_sum_sq();
    if tau > 0.0 {
        let pairs = [
            (&mut grads.phi_s.hidden.weight, &params.phi_s.hidden.weight),
            (&mut grads.phi_s.output.weight, &params.phi_s.output.weight),
            (&mut grads.phi_t.hidden.weight, &params.phi_t.hidden.weight),
            (&mut grads.phi_t.output.weight, &params.phi_t.output.weight),
            (&mut grads.clf.weight, &params.clf.weight),
        ];
        for (g, w) in pairs {
            g.axpy(2.0 * tau, w)?;
        }
    }
    Ok(ClassificationLoss {
        cls,
        reg,
        d_embeddings: g.input,
        param_grads: grads,
    })
}

#[derive(Debug, Clone)]
pub struct MarginalMmd {
    pub value: f64,
    pub d_source: Matrix,
    pub d_target: Matrix,
}

/// Squared distance between the source and target centroids.
pub fn marginal_mmd(source: &Matrix, target: &Matrix) -> Result<MarginalMmd> {
    if source.rows() == 0 || target.rows() == 0 {
        return Err(Error::EmptyInput("marginal_mmd"));
    }
    if source.cols() != target.cols() {
        return Err(Error::shape(
            "marginal_mmd",
            format!("{} vs {} columns", source.cols(), target.cols()),
        ));
    }
    let diff = source.rowwise_mean()?.sub(&target.rowwise_mean()?)?;
    let value = diff.sum_sq();

    let spread = |rows: usize, coef: f64| {
        let g = diff.scale(coef);
        let mut out = Matrix::zeros(rows, diff.cols());
        for r in 0..rows {
            out.row_mut(r).copy_from_slice(g.as_slice());
        }
        out
    };
    Ok(MarginalMmd {
        value,
        d_source: spread(source.rows(), 2.0 / source.rows() as f64),
        d_target: spread(target.rows(), -2.0 / target.rows() as f64),
    })
}

#[derive(Debug, Clone)]
pub struct ConditionalMmd {
    pub value: f64,
    pub per_class: Vec<f64>,
    pub d_source: Matrix,
    pub d_labeled: Matrix,
    pub d_unlabeled: Matrix,
}

/// Soft-label weighted class-conditional discrepancy.
///
/// For each class `k` the source centroid is the plain mean of the source
/// rows of class `k`. The target centroid averages the labeled target rows of
/// class `k` together with every unlabeled row `i` weighted by
/// `A[i][k] = (r / R) * probs[i][k]`. The soft labels are constants here.
pub fn conditional_mmd(
    source: &Matrix,
    labeled: &Matrix,
    unlabeled: &Matrix,
    idx: &ClassIndex,
    soft: &SoftLabelMatrix,
) -> Result<ConditionalMmd> {
    let d = source.cols();
    if labeled.cols() != d || (unlabeled.rows() > 0 && unlabeled.cols() != d) {
        return Err(Error::shape(
            "conditional_mmd",
            format!(
                "embedding widths {} / {} / {}",
                d,
                labeled.cols(),
                unlabeled.cols()
            ),
        ));
    }
    if soft.rows() != unlabeled.rows() || soft.classes() != idx.classes() {
        return Err(Error::shape(
            "conditional_mmd",
            format!(
                "soft labels {}x{} for {} unlabeled rows and {} classes",
                soft.rows(),
                soft.classes(),
                unlabeled.rows(),
                idx.classes()
            ),
        ));
    }
    let weights = soft.weights();
    // column k of the weights, as a 1 x n_u row, drives the class-k sums
    let weights_t = weights.transpose();
    let weighted_sums = weights_t.matmul(unlabeled)?;

    let mut d_source = Matrix::zeros(source.rows(), d);
    let mut d_labeled = Matrix::zeros(labeled.rows(), d);
    let mut coeff_u = Matrix::zeros(idx.classes(), d);
    let mut per_class = Vec::with_capacity(idx.classes());

    for k in 0..idx.classes() {
        let src = idx.source(k);
        let lab = idx.labeled(k);
        let mut src_centroid = vec![0.0; d];
        for &i in src {
            for (c, &v) in src_centroid.iter_mut().zip(source.row(i)) {
                *c += v;
            }
        }
        let n_src = src.len() as f64;
        src_centroid.iter_mut().for_each(|c| *c /= n_src);

        let mut numerator = weighted_sums.row(k).to_vec();
        for &i in lab {
            for (c, &v) in numerator.iter_mut().zip(labeled.row(i)) {
                *c += v;
            }
        }
        let mass: f64 = weights_t.row(k).iter().sum();
        let den = (lab.len() as f64 + mass).max(DEN_EPS);

        let diff: Vec<f64> = src_centroid
            .iter()
            .zip(&numerator)
            .map(|(s, n)| s - n / den)
            .collect();
        per_class.push(diff.iter().map(|v| v * v).sum());

        for &i in src {
            for (g, &v) in d_source.row_mut(i).iter_mut().zip(&diff) {
                *g += 2.0 * v / n_src;
            }
        }
        for &i in lab {
            for (g, &v) in d_labeled.row_mut(i).iter_mut().zip(&diff) {
                *g -= 2.0 * v / den;
            }
        }
        for (g, &v) in coeff_u.row_mut(k).iter_mut().zip(&diff) {
            *g = -2.0 * v / den;
        }
    }
    let d_unlabeled = weights.matmul(&coeff_u)?;
    Ok(ConditionalMmd {
        value: per_class.iter().sum(),
        per_class,
        d_source,
        d_labeled,
        d_unlabeled,
    })
}

#[derive(Debug, Clone)]
pub struct SoftMmd {
    pub q_m: f64,
    pub q_c: f64,
    pub d_source: Matrix,
    pub d_labeled: Matrix,
    pub d_unlabeled: Matrix,
}

impl SoftMmd {
    pub fn value(&self) -> f64 {
        self.q_m + self.q_c
    }
}

/// Marginal plus conditional discrepancy, unweighted.
///
/// The marginal target side is the labeled and unlabeled target rows together.
pub fn soft_mmd(
    source: &Matrix,
    labeled: &Matrix,
    unlabeled: &Matrix,
    idx: &ClassIndex,
    soft: &SoftLabelMatrix,
) -> Result<SoftMmd> {
    let target = labeled.vstack(unlabeled)?;
    let qm = marginal_mmd(source, &target)?;
    let qc = conditional_mmd(source, labeled, unlabeled, idx, soft)?;
    let (dm_l, dm_u) = qm.d_target.split_rows(labeled.rows());
    Ok(SoftMmd {
        q_m: qm.value,
        q_c: qc.value,
        d_source: qm.d_source.add(&qc.d_source)?,
        d_labeled: dm_l.add(&qc.d_labeled)?,
        d_unlabeled: dm_u.add(&qc.d_unlabeled)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gradcheck::{grad_check, Coordinates};
    use crate::model::ModelConfig;
    use crate::rng::SeededRng;
    use proptest::prelude::*;

    fn uniform_soft(n: usize, c: usize, r: usize, big_r: usize) -> SoftLabelMatrix {
        SoftLabelMatrix::new(Matrix::filled(n, c, 1.0 / c as f64), r, big_r).unwrap()
    }

    fn random_soft(rng: &mut SeededRng, n: usize, c: usize, r: usize, big_r: usize) -> SoftLabelMatrix {
        let probs = softmax_rows(&rng.normal(n, c).scale(2.0));
        SoftLabelMatrix::new(probs, r, big_r).unwrap()
    }

    /// Class-wise centroid discrepancy over a hard partition, written without
    /// any weighting: unlabeled rows join the class of their argmax.
    fn hard_partition_oracle(
        source: &Matrix,
        ys: &[usize],
        labeled: &Matrix,
        yl: &[usize],
        unlabeled: &Matrix,
        yu: &[usize],
        classes: usize,
    ) -> f64 {
        let mut total = 0.0;
        for k in 0..classes {
            let src: Vec<&[f64]> = (0..source.rows()).filter(|&i| ys[i] == k).map(|i| source.row(i)).collect();
            let mut tgt: Vec<&[f64]> = (0..labeled.rows()).filter(|&i| yl[i] == k).map(|i| labeled.row(i)).collect();
            tgt.extend((0..unlabeled.rows()).filter(|&i| yu[i] == k).map(|i| unlabeled.row(i)));
            for c in 0..source.cols() {
                let ms = src.iter().map(|r| r[c]).sum::<f64>() / src.len() as f64;
                let mt = tgt.iter().map(|r| r[c]).sum::<f64>() / tgt.len() as f64;
                total += (ms - mt) * (ms - mt);
            }
        }
        total
    }

    #[test]
    fn marginal_hand_case() {
        let s = Matrix::from_rows(&[[0.0, 0.0], [2.0, 0.0]]).unwrap();
        let t = Matrix::from_rows(&[[1.0, 1.0]]).unwrap();
        assert!((marginal_mmd(&s, &t).unwrap().value - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn marginal_errors() {
        assert!(matches!(
            marginal_mmd(&Matrix::zeros(0, 2), &Matrix::zeros(3, 2)),
            Err(Error::EmptyInput(_))
        ));
        assert!(marginal_mmd(&Matrix::zeros(2, 2), &Matrix::zeros(3, 3)).is_err());
    }

    #[test]
    fn marginal_permutation_invariant() {
        let mut rng = SeededRng::new(3);
        let s = rng.normal(6, 3);
        let t = rng.normal(4, 3);
        let a = marginal_mmd(&s, &t).unwrap().value;
        let perm = s.select_rows(&[5, 2, 0, 4, 1, 3]);
        let b = marginal_mmd(&perm, &t).unwrap().value;
        assert!((a - b).abs() <= 1e-12);
    }

    #[test]
    fn class_index_requires_every_class() {
        let err = ClassIndex::new(&[0, 1, 2], &[0, 2], 3).unwrap_err();
        assert!(err.to_string().contains("class 1"), "{err}");
        assert!(ClassIndex::new(&[0, 1, 1], &[0, 1], 3).is_err());
        assert!(ClassIndex::new(&[0, 1, 5], &[0, 1], 3).is_err());
        let idx = ClassIndex::new(&[1, 0, 1], &[0, 1], 2).unwrap();
        assert_eq!(idx.source(1), &[0, 2]);
    }

    #[test]
    fn conditional_at_r_zero_ignores_unlabeled() {
        let mut rng = SeededRng::new(4);
        let ys = [0, 1, 2, 0, 1, 2, 0];
        let yl = [2, 1, 0];
        let idx = ClassIndex::new(&ys, &yl, 3).unwrap();
        let s = rng.normal(7, 4);
        let l = rng.normal(3, 4);
        let u = rng.normal(5, 4);
        let soft = random_soft(&mut rng, 5, 3, 0, 10);
        let base = conditional_mmd(&s, &l, &u, &idx, &soft).unwrap();
        let u2 = rng.normal(5, 4).scale(100.0);
        let moved = conditional_mmd(&s, &l, &u2, &idx, &soft).unwrap();
        assert!((base.value - moved.value).abs() <= 1e-12);
        assert!(base.d_unlabeled.as_slice().iter().all(|&g| g == 0.0));

        let empty_u = Matrix::zeros(0, 4);
        let none = SoftLabelMatrix::new(Matrix::zeros(0, 3), 0, 10).unwrap();
        let oracle = hard_partition_oracle(&s, &ys, &l, &yl, &empty_u, &[], 3);
        let labeled_only = conditional_mmd(&s, &l, &empty_u, &idx, &none).unwrap();
        assert!((labeled_only.value - oracle).abs() <= 1e-10);
        assert!((base.value - oracle).abs() <= 1e-10);
    }

    #[test]
    fn conditional_one_hot_at_end_matches_hard_partition() {
        let mut rng = SeededRng::new(5);
        let ys = [0, 1, 2, 0, 1, 2];
        let yl = [0, 1, 2];
        let yu = [2, 2, 0, 1, 0];
        let idx = ClassIndex::new(&ys, &yl, 3).unwrap();
        let s = rng.normal(6, 3);
        let l = rng.normal(3, 3);
        let u = rng.normal(5, 3);
        let soft = SoftLabelMatrix::new(one_hot(&yu, 3).unwrap(), 7, 7).unwrap();
        let v = conditional_mmd(&s, &l, &u, &idx, &soft).unwrap().value;
        let oracle = hard_partition_oracle(&s, &ys, &l, &yl, &u, &yu, 3);
        assert!((v - oracle).abs() <= 1e-10, "{v} vs {oracle}");
    }

    #[test]
    fn conditional_zero_when_centroids_agree() {
        let s = Matrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]]).unwrap();
        let l = s.clone();
        let u = Matrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]]).unwrap();
        let idx = ClassIndex::new(&[0, 1], &[0, 1], 2).unwrap();
        let soft = SoftLabelMatrix::new(one_hot(&[0, 1], 2).unwrap(), 3, 5).unwrap();
        let out = conditional_mmd(&s, &l, &u, &idx, &soft).unwrap();
        assert!(out.value.abs() < 1e-24);
    }

    #[test]
    fn soft_mmd_is_sum_of_parts() {
        let mut rng = SeededRng::new(6);
        let ys = [0, 1, 0, 1];
        let yl = [1, 0];
        let idx = ClassIndex::new(&ys, &yl, 2).unwrap();
        let s = rng.normal(4, 3);
        let l = rng.normal(2, 3);
        let u = rng.normal(3, 3);
        let soft = random_soft(&mut rng, 3, 2, 2, 4);
        let total = soft_mmd(&s, &l, &u, &idx, &soft).unwrap();
        let qm = marginal_mmd(&s, &l.vstack(&u).unwrap()).unwrap().value;
        let qc = conditional_mmd(&s, &l, &u, &idx, &soft).unwrap().value;
        assert!((total.value() - (qm + qc)).abs() <= 1e-12);

        let same = soft_mmd(&l, &l, &Matrix::zeros(0, 3), &ClassIndex::new(&yl, &yl, 2).unwrap(),
            &SoftLabelMatrix::new(Matrix::zeros(0, 2), 1, 1).unwrap()).unwrap();
        assert_eq!(same.value(), 0.0);
    }

    #[test]
    fn soft_mmd_gradient_matches_finite_differences() {
        let mut rng = SeededRng::new(8);
        let ys = [0, 1, 2, 0, 1, 2, 1];
        let yl = [0, 1, 2, 2];
        let idx = ClassIndex::new(&ys, &yl, 3).unwrap();
        let (ns, nl, nu, d) = (7, 4, 5, 3);
        let s = rng.normal(ns, d);
        let l = rng.normal(nl, d);
        let u = rng.normal(nu, d);
        let soft = random_soft(&mut rng, nu, 3, 4, 9);

        let pack = |s: &Matrix, l: &Matrix, u: &Matrix| {
            let mut v = s.as_slice().to_vec();
            v.extend_from_slice(l.as_slice());
            v.extend_from_slice(u.as_slice());
            v
        };
        let unpack = |p: &[f64]| {
            let (a, rest) = p.split_at(ns * d);
            let (b, c) = rest.split_at(nl * d);
            (
                Matrix::new(ns, d, a.to_vec()).unwrap(),
                Matrix::new(nl, d, b.to_vec()).unwrap(),
                Matrix::new(nu, d, c.to_vec()).unwrap(),
            )
        };
        let out = soft_mmd(&s, &l, &u, &idx, &soft).unwrap();
        let analytic = pack(&out.d_source, &out.d_labeled, &out.d_unlabeled);
        let report = grad_check(
            |p| {
                let (a, b, c) = unpack(p);
                soft_mmd(&a, &b, &c, &idx, &soft).unwrap().value()
            },
            &pack(&s, &l, &u),
            &analytic,
            1e-6,
            1e-5,
            Coordinates::All,
        )
        .unwrap();
        assert!(report.passed, "{report:?}");
    }

    fn toy_params() -> StnParams {
        StnParams::init(&ModelConfig {
            source_dim: 4,
            target_dim: 3,
            subspace_dim: 3,
            hidden_dim: 5,
            classes: 3,
            slope: 0.2,
            init_seed: 9,
        })
        .unwrap()
    }

    #[test]
    fn classification_loss_closed_forms() {
        let mut p = toy_params();
        // zero classifier: uniform predictions, loss ln C per sample
        p.clf = crate::blocks::AffineParams::zeros(3, 3);
        let z = SeededRng::new(1).normal(5, 3);
        let batch = LabeledProjectedBatch::new(&z.split_rows(3).0, &[0, 1, 2], &z.split_rows(3).1, &[1, 1], 3).unwrap();
        let loss = classification_loss(&batch, &p, 0.0).unwrap();
        assert!((loss.cls - 3f64.ln()).abs() < 1e-9);
        assert_eq!(loss.reg, 0.0);

        // a huge margin on the true class drives the loss to zero
        let mut p = toy_params();
        p.clf = crate::blocks::AffineParams::new(Matrix::identity(3).scale(100.0), Matrix::zeros(1, 3)).unwrap();
        let z = Matrix::identity(3);
        let batch = LabeledProjectedBatch::new(&z, &[0, 1, 2], &Matrix::zeros(0, 3), &[], 3).unwrap();
        assert!(classification_loss(&batch, &p, 0.0).unwrap().value() <= 1e-10);
    }

    #[test]
    fn regulariser_is_tau_times_weight_squares() {
        let p = toy_params();
        let z = SeededRng::new(2).normal(4, 3);
        let batch = LabeledProjectedBatch::new(&z, &[0, 1, 2, 0], &Matrix::zeros(0, 3), &[], 3).unwrap();
        let loss = classification_loss(&batch, &p, 0.001).unwrap();
        let mut hand = 0.0;
        for w in [
            &p.phi_s.hidden.weight,
            &p.phi_s.output.weight,
            &p.phi_t.hidden.weight,
            &p.phi_t.output.weight,
            &p.clf.weight,
        ] {
            for &v in w.as_slice() {
                hand += v * v;
            }
        }
        assert!((loss.reg - 0.001 * hand).abs() <= 1e-15);
    }

    #[test]
    fn classification_loss_errors() {
        let p = toy_params();
        let empty = LabeledProjectedBatch::new(&Matrix::zeros(0, 3), &[], &Matrix::zeros(0, 3), &[], 3).unwrap();
        assert!(matches!(classification_loss(&empty, &p, 0.0), Err(Error::EmptyInput(_))));
        assert!(LabeledProjectedBatch::from_stacked(
            Matrix::zeros(1, 3),
            Matrix::row_vector(vec![0.5, 0.5, 0.0]),
            1
        )
        .is_err());
    }

    #[test]
    fn classification_gradient_matches_finite_differences() {
        let p = toy_params();
        let mut rng = SeededRng::new(3);
        let z = rng.normal(6, 3);
        let labels = one_hot(&[0, 1, 2, 2, 1, 0], 3).unwrap();
        let loss = |p: &StnParams, z: &Matrix| {
            let b = LabeledProjectedBatch::from_stacked(z.clone(), labels.clone(), 4).unwrap();
            classification_loss(&b, p, 0.01).unwrap()
        };
        let out = loss(&p, &z);
        let report = grad_check(
            |flat| {
                let zz = Matrix::new(6, 3, flat.to_vec()).unwrap();
                loss(&p, &zz).value()
            },
            z.as_slice(),
            out.d_embeddings.as_slice(),
            1e-6,
            1e-5,
            Coordinates::All,
        )
        .unwrap();
        assert!(report.passed, "{report:?}");

        let report = grad_check(
            |flat| {
                let mut q = p.clone();
                q.load_flat(flat).unwrap();
                loss(&q, &z).value()
            },
            &p.flatten(),
            &out.param_grads.flatten(),
            1e-6,
            1e-5,
            Coordinates::All,
        )
        .unwrap();
        assert!(report.passed, "{report:?}");
    }

    proptest! {
        #[test]
        fn marginal_self_distance_is_zero(data in proptest::collection::vec(-1e3f64..1e3, 12)) {
            let a = Matrix::new(4, 3, data).unwrap();
            prop_assert_eq!(marginal_mmd(&a, &a).unwrap().value, 0.0);
        }

        #[test]
        fn marginal_nonnegative(a in proptest::collection::vec(-10f64..10.0, 6), b in proptest::collection::vec(-10f64..10.0, 4)) {
            let s = Matrix::new(3, 2, a).unwrap();
            let t = Matrix::new(2, 2, b).unwrap();
            prop_assert!(marginal_mmd(&s, &t).unwrap().value >= 0.0);
        }

        #[test]
        fn conditional_permutation_invariant(seed in 0u64..1000, r in 0usize..=5) {
            let mut rng = SeededRng::new(seed);
            let ys = [0, 1, 0, 1, 0];
            let yl = [1, 0, 1];
            let idx = ClassIndex::new(&ys, &yl, 2).unwrap();
            let s = rng.normal(5, 3);
            let l = rng.normal(3, 3);
            let u = rng.normal(4, 3);
            let soft = random_soft(&mut rng, 4, 2, r, 5);
            let base = conditional_mmd(&s, &l, &u, &idx, &soft).unwrap().value;

            // swap two source rows of class 0 and two labeled rows of class 1
            let s2 = s.select_rows(&[4, 1, 2, 3, 0]);
            let l2 = l.select_rows(&[2, 1, 0]);
            // paired permutation of unlabeled rows and soft-label rows
            let order = [3, 0, 2, 1];
            let u2 = u.select_rows(&order);
            let soft2 = SoftLabelMatrix::new(soft.probs().select_rows(&order), r, 5).unwrap();
            let permuted = conditional_mmd(&s2, &l2, &u2, &idx, &soft2).unwrap().value;
            prop_assert!((base - permuted).abs() <= 1e-12 * base.max(1.0));
        }

        #[test]
        fn conditional_nonnegative(seed in 0u64..1000) {
            let mut rng = SeededRng::new(seed);
            let idx = ClassIndex::new(&[0, 1], &[1, 0], 2).unwrap();
            let soft = uniform_soft(3, 2, 1, 2);
            let v = conditional_mmd(&rng.normal(2, 2), &rng.normal(2, 2), &rng.normal(3, 2), &idx, &soft).unwrap().value;
            prop_assert!(v >= 0.0);
        }
    }
}
