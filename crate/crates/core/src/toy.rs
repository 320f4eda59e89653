//! A tiny fixed problem for checking the training objective's gradient.

use serde::Serialize;

use crate::data::{HdaDataset, HeldOutLabels};
use crate::error::Result;
use crate::gradcheck::{grad_check, Coordinates, GradCheckReport};
use crate::model::{ModelConfig, SoftLabelMatrix, StnParams};
use crate::objective::{
    evaluate, forward, objective_value, unlabeled_probs, ObjectiveSettings, TrainingData,
};
use crate::rng::SeededRng;
use crate::train::Variant;

/// Shapes of the toy problem.
pub const SOURCE_DIM: usize = 7;
pub const TARGET_DIM: usize = 5;
pub const SUBSPACE_DIM: usize = 4;
pub const HIDDEN_DIM: usize = 6;
pub const CLASSES: usize = 3;
pub const SOURCE_ROWS: usize = 12;
pub const LABELED_ROWS: usize = 6;
pub const UNLABELED_ROWS: usize = 10;

/// Gaussian features with labels cycling through the classes, and
/// parameters whose biases are nonzero so every gradient entry is exercised.
#[derive(Debug, Clone)]
pub struct ToyProblem {
    pub dataset: HdaDataset,
    pub model: ModelConfig,
    pub params: StnParams,
}

impl ToyProblem {
    pub fn new(seed: u64) -> Result<Self> {
        let rng = SeededRng::new(seed);
        let cycle = |n: usize| (0..n).map(|i| i % CLASSES).collect::<Vec<_>>();
        let dataset = HdaDataset::new(
            rng.fork(0).normal(SOURCE_ROWS, SOURCE_DIM),
            cycle(SOURCE_ROWS),
            rng.fork(1).normal(LABELED_ROWS, TARGET_DIM),
            cycle(LABELED_ROWS),
            rng.fork(2).normal(UNLABELED_ROWS, TARGET_DIM),
            Some(HeldOutLabels::new(cycle(UNLABELED_ROWS))),
            CLASSES,
        )?;
        let model = ModelConfig {
            subspace_dim: SUBSPACE_DIM,
            hidden_dim: HIDDEN_DIM,
            init_seed: seed,
            ..ModelConfig::new(SOURCE_DIM, TARGET_DIM, CLASSES)
        };
        let mut params = StnParams::init(&model)?;
        let mut jitter = rng.fork(3);
        for m in params.matrices_mut() {
            let noise = jitter.uniform(m.rows(), m.cols(), -0.1, 0.1)?;
            m.add_assign(&noise)?;
        }
        Ok(Self {
            dataset,
            model,
            params,
        })
    }
}

/// Checks the analytic gradient of the objective at `params` against
/// central differences, holding `soft` fixed.
pub fn check_objective_gradient(
    params: &StnParams,
    data: &TrainingData,
    soft: &SoftLabelMatrix,
    settings: &ObjectiveSettings,
    h: f64,
    tol: f64,
    coords: Coordinates,
) -> Result<GradCheckReport> {
    let fp = forward(params, data, settings.use_source)?;
    let (_, grads) = evaluate(params, data, &fp, soft, settings, soft.iteration())?;
    let mut probe = params.clone();
    let mut failure = None;
    let report = grad_check(
        |flat| {
            let value = probe
                .load_flat(flat)
                .and_then(|_| objective_value(&probe, data, soft, settings));
            value.unwrap_or_else(|e| {
                failure.get_or_insert(e);
                f64::NAN
            })
        },
        &params.flatten(),
        &grads.flatten(),
        h,
        tol,
        coords,
    );
    match failure {
        Some(e) => Err(e),
        None => report,
    }
}

/// One gradient-check result on the toy problem.
#[derive(Debug, Clone, Serialize)]
pub struct GradCheckCase {
    pub variant: String,
    pub iteration: usize,
    pub checked: usize,
    pub max_rel_error: f64,
    pub passed: bool,
}

/// Checks every variant at `r = 0, R/2, R`, plus the target-only objective.
pub fn check_all_variants(
    problem: &ToyProblem,
    beta: f64,
    tau: f64,
    total: usize,
    h: f64,
    tol: f64,
) -> Result<Vec<GradCheckCase>> {
    let data = TrainingData::new(&problem.dataset)?;
    let params = &problem.params;
    let fp = forward(params, &data, true)?;
    let probs = unlabeled_probs(params, &fp)?;
    let mut cases = Vec::new();
    for variant in Variant::ALL {
        for r in [0, total / 2, total] {
            let soft = variant.soft_labels(probs.clone(), r, total)?;
            let settings = variant.settings(beta, tau);
            let rep =
                check_objective_gradient(params, &data, &soft, &settings, h, tol, Coordinates::All)?;
            cases.push(GradCheckCase {
                variant: variant.name().to_string(),
                iteration: r,
                checked: rep.checked,
                max_rel_error: rep.max_rel_error,
                passed: rep.passed,
            });
        }
    }
    let settings = ObjectiveSettings {
        beta: 0.0,
        tau,
        conditional: false,
        use_source: false,
    };
    let soft = SoftLabelMatrix::new(probs, 0, total)?;
    let rep = check_objective_gradient(params, &data, &soft, &settings, h, tol, Coordinates::All)?;
    cases.push(GradCheckCase {
        variant: crate::eval::TARGET_ONLY.to_string(),
        iteration: 0,
        checked: rep.checked,
        max_rel_error: rep.max_rel_error,
        passed: rep.passed,
    });
    Ok(cases)
}
