//! The full training objective and its gradient with respect to every
//! parameter.
//!
//! `total = cls + reg + beta * (q_m + q_c)`, where `cls + reg` is the
//! regularised classification loss on the labeled rows of both domains and
//! `q_m + q_c` is the soft-label discrepancy between the projected domains.

use crate::data::HdaDataset;
use crate::error::{Error, Result};
use crate::losses::{
    classification_loss, conditional_mmd, marginal_mmd, ClassIndex, LabeledProjectedBatch,
    ObjectiveBreakdown,
};
use crate::matrix::{one_hot, Matrix};
use crate::model::{ProjectionCache, SoftLabelMatrix, StnGrads, StnParams};

/// Which terms enter the objective and with what weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveSettings {
    pub beta: f64,
    pub tau: f64,
    /// Include the class-conditional term.
    pub conditional: bool,
    /// Include source rows at all. Without them only the labeled target rows
    /// are classified and no discrepancy is computed.
    pub use_source: bool,
}

impl ObjectiveSettings {
    pub fn new(beta: f64, tau: f64) -> Self {
        Self {
            beta,
            tau,
            conditional: true,
            use_source: true,
        }
    }
}

/// Training inputs in the layout the objective consumes.
///
/// Built from an [`HdaDataset`] without touching its held-out labels.
#[derive(Debug, Clone)]
pub struct TrainingData {
    source: Matrix,
    labeled: Matrix,
    target: Matrix,
    labeled_rows: usize,
    all_labels: Matrix,
    labeled_labels: Matrix,
    index: ClassIndex,
    classes: usize,
}

impl TrainingData {
    pub fn new(dataset: &HdaDataset) -> Result<Self> {
        let classes = dataset.classes();
        let index = ClassIndex::new(dataset.source_labels(), dataset.labeled_labels(), classes)?;
        let ys = one_hot(dataset.source_labels(), classes)?;
        let yl = one_hot(dataset.labeled_labels(), classes)?;
        Ok(Self {
            source: dataset.source().clone(),
            labeled: dataset.labeled().clone(),
            target: dataset.target(),
            labeled_rows: dataset.labeled().rows(),
            all_labels: ys.vstack(&yl)?,
            labeled_labels: yl,
            index,
            classes,
        })
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn index(&self) -> &ClassIndex {
        &self.index
    }

    pub fn unlabeled_rows(&self) -> usize {
        self.target.rows() - self.labeled_rows
    }

    /// Labeled target rows.
    pub fn labeled(&self) -> &Matrix {
        &self.labeled
    }

    fn check_params(&self, params: &StnParams) -> Result<()> {
        if params.source_dim() != self.source.cols()
            || params.target_dim() != self.target.cols()
            || params.classes() != self.classes
        {
            return Err(Error::Config(format!(
                "model expects {}/{} features and {} classes, data has {}/{} and {}",
                params.source_dim(),
                params.target_dim(),
                params.classes(),
                self.source.cols(),
                self.target.cols(),
                self.classes
            )));
        }
        Ok(())
    }
}

/// Projected data and the caches needed to backpropagate through it.
#[derive(Debug, Clone)]
pub struct ForwardPass {
    pub source: Option<Matrix>,
    pub labeled: Matrix,
    pub unlabeled: Matrix,
    source_cache: Option<ProjectionCache>,
    target_cache: ProjectionCache,
}

/// Projects the source rows (when `with_source`) and all target rows.
pub fn forward(params: &StnParams, data: &TrainingData, with_source: bool) -> Result<ForwardPass> {
    data.check_params(params)?;
    let (source, source_cache) = if with_source {
        let (z, c) = params.phi_s.forward(&data.source, params.slope)?;
        (Some(z), Some(c))
    } else {
        (None, None)
    };
    let (zt, target_cache) = params.phi_t.forward(&data.target, params.slope)?;
    let (labeled, unlabeled) = zt.split_rows(data.labeled_rows);
    Ok(ForwardPass {
        source,
        labeled,
        unlabeled,
        source_cache,
        target_cache,
    })
}

/// Current class probabilities of the unlabeled rows.
pub fn unlabeled_probs(params: &StnParams, fp: &ForwardPass) -> Result<Matrix> {
    params.classify(&fp.unlabeled)
}

/// Objective value and gradient at `params` for a forward pass taken at
/// `params`, with `soft` held constant.
pub fn evaluate(
    params: &StnParams,
    data: &TrainingData,
    fp: &ForwardPass,
    soft: &SoftLabelMatrix,
    settings: &ObjectiveSettings,
    iteration: usize,
) -> Result<(ObjectiveBreakdown, StnGrads)> {
    let zs = match (settings.use_source, &fp.source) {
        (true, Some(zs)) => Some(zs),
        (true, None) => {
            return Err(Error::State("forward pass was taken without source rows".into()))
        }
        (false, _) => None,
    };

    let batch = match zs {
        Some(zs) => LabeledProjectedBatch::from_stacked(
            zs.vstack(&fp.labeled)?,
            data.all_labels.clone(),
            zs.rows(),
        )?,
        None => LabeledProjectedBatch::from_stacked(
            fp.labeled.clone(),
            data.labeled_labels.clone(),
            0,
        )?,
    };
    let cl = classification_loss(&batch, params, settings.tau)?;
    let mut grads = cl.param_grads;
    let (mut d_source, mut d_labeled) = cl.d_embeddings.split_rows(batch.source_rows());
    let mut d_unlabeled = Matrix::zeros(fp.unlabeled.rows(), fp.unlabeled.cols());

    let (mut q_m, mut q_c) = (0.0, 0.0);
    if let Some(zs) = zs {
        let target = fp.labeled.vstack(&fp.unlabeled)?;
        let qm = marginal_mmd(zs, &target)?;
        q_m = qm.value;
        let beta = settings.beta;
        if beta != 0.0 {
            let (dl, du) = qm.d_target.split_rows(fp.labeled.rows());
            d_source.axpy(beta, &qm.d_source)?;
            d_labeled.axpy(beta, &dl)?;
            d_unlabeled.axpy(beta, &du)?;
        }
        if settings.conditional {
            let qc = conditional_mmd(zs, &fp.labeled, &fp.unlabeled, &data.index, soft)?;
            q_c = qc.value;
            if beta != 0.0 {
                d_source.axpy(beta, &qc.d_source)?;
                d_labeled.axpy(beta, &qc.d_labeled)?;
                d_unlabeled.axpy(beta, &qc.d_unlabeled)?;
            }
        }
    }

    if let (Some(cache), true) = (&fp.source_cache, settings.use_source) {
        params
            .phi_s
            .backward_into(cache, &d_source, params.slope, &mut grads.phi_s)?;
    }
    let d_target = d_labeled.vstack(&d_unlabeled)?;
    params
        .phi_t
        .backward_into(&fp.target_cache, &d_target, params.slope, &mut grads.phi_t)?;

    let breakdown = ObjectiveBreakdown {
        iteration,
        cls_loss: cl.cls,
        reg_term: cl.reg,
        q_m,
        q_c,
        total: cl.cls + cl.reg + settings.beta * (q_m + q_c),
    };
    Ok((breakdown, grads))
}

/// Objective value only, with a fresh forward pass; soft labels are fixed.
pub fn objective_value(
    params: &StnParams,
    data: &TrainingData,
    soft: &SoftLabelMatrix,
    settings: &ObjectiveSettings,
) -> Result<f64> {
    let fp = forward(params, data, settings.use_source)?;
    Ok(evaluate(params, data, &fp, soft, settings, 0)?.0.total)
}
