//! Full-batch training loop and the ablation variants.

use std::fmt;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::HdaDataset;
use crate::error::{Error, Result};
use crate::losses::ObjectiveBreakdown;
use crate::matrix::Matrix;
use crate::model::{ModelConfig, SoftLabelMatrix, StnParams};
use crate::objective::{evaluate, forward, unlabeled_probs, ObjectiveSettings, TrainingData};
use crate::optim::{AdamConfig, AdamState};

/// Training configuration with one ablation switch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Variant {
    /// Soft labels phased in with weight `r / R`.
    #[serde(rename = "full")]
    Full,
    /// Soft labels at full weight from the first iteration.
    #[serde(rename = "r_eq_R")]
    REqR,
    /// Unlabeled rows never enter the conditional term.
    #[serde(rename = "r_eq_0")]
    REq0,
    /// No discrepancy term in the objective.
    #[serde(rename = "beta_0")]
    Beta0,
    /// Soft labels replaced by one-hot argmax labels.
    #[serde(rename = "hard")]
    Hard,
    /// Marginal discrepancy only.
    #[serde(rename = "qm_only")]
    QmOnly,
}

impl Variant {
    pub const ALL: [Variant; 6] = [
        Variant::Full,
        Variant::REqR,
        Variant::REq0,
        Variant::Beta0,
        Variant::Hard,
        Variant::QmOnly,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Full => "full",
            Variant::REqR => "r_eq_R",
            Variant::REq0 => "r_eq_0",
            Variant::Beta0 => "beta_0",
            Variant::Hard => "hard",
            Variant::QmOnly => "qm_only",
        }
    }

    /// Iteration index the soft-label weights are evaluated at.
    pub fn schedule_iteration(self, r: usize, total: usize) -> usize {
        match self {
            Variant::REqR => total,
            Variant::REq0 => 0,
            _ => r,
        }
    }

    /// Objective terms for this variant given the configured weights.
    pub fn settings(self, beta: f64, tau: f64) -> ObjectiveSettings {
        ObjectiveSettings {
            beta: if self == Variant::Beta0 { 0.0 } else { beta },
            tau,
            conditional: self != Variant::QmOnly,
            use_source: true,
        }
    }

    /// Soft labels this variant uses at iteration `r` of `total`, given the
    /// current class probabilities of the unlabeled rows.
    pub fn soft_labels(self, probs: Matrix, r: usize, total: usize) -> Result<SoftLabelMatrix> {
        let soft = SoftLabelMatrix::new(probs, self.schedule_iteration(r, total), total)?;
        Ok(if self == Variant::Hard {
            soft.hardened()
        } else {
            soft
        })
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown variant {s:?}; expected one of {}",
                    Variant::ALL.map(Variant::name).join(", ")
                ))
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub beta: f64,
    pub tau: f64,
    pub iterations: usize,
    pub adam: AdamConfig,
    pub variant: Variant,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            beta: 1e-3,
            tau: 1e-3,
            iterations: 300,
            adam: AdamConfig::default(),
            variant: Variant::Full,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta >= 0.0) || !(self.tau >= 0.0) {
            return Err(Error::Config("beta and tau must be nonnegative".into()));
        }
        if !(self.adam.lr > 0.0) {
            return Err(Error::Config("learning rate must be positive".into()));
        }
        if self.iterations == 0 {
            return Err(Error::Config("at least one iteration is required".into()));
        }
        Ok(())
    }
}

/// One objective record per iteration plus the final parameters.
#[derive(Debug, Clone)]
pub struct TrainTrace {
    pub records: Vec<ObjectiveBreakdown>,
    pub params: StnParams,
}

impl TrainTrace {
    pub fn totals(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.total).collect()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_trace_csv(path, &self.records)
    }
}

/// Header: `r,cls_loss,q_m,q_c,reg,total`.
pub fn write_trace_csv(path: &Path, records: &[ObjectiveBreakdown]) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    writeln!(w, "r,cls_loss,q_m,q_c,reg,total").map_err(io)?;
    for rec in records {
        writeln!(
            w,
            "{},{:?},{:?},{:?},{:?},{:?}",
            rec.iteration, rec.cls_loss, rec.q_m, rec.q_c, rec.reg_term, rec.total
        )
        .map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Trains all three networks jointly for `tcfg.iterations` full-batch steps.
///
/// At iteration `r` (1-based) the unlabeled soft labels are recomputed from
/// the current parameters and held constant for that step.
pub fn train(dataset: &HdaDataset, mcfg: &ModelConfig, tcfg: &TrainConfig) -> Result<TrainTrace> {
    let variant = tcfg.variant;
    run(dataset, mcfg, tcfg, variant.settings(tcfg.beta, tcfg.tau), variant)
}

/// Baseline that sees only the labeled target rows: classification loss on
/// them plus the weight penalty, no source data and no discrepancy term.
pub fn train_target_only(
    dataset: &HdaDataset,
    mcfg: &ModelConfig,
    tcfg: &TrainConfig,
) -> Result<TrainTrace> {
    let settings = ObjectiveSettings {
        beta: 0.0,
        tau: tcfg.tau,
        conditional: false,
        use_source: false,
    };
    run(dataset, mcfg, tcfg, settings, Variant::Beta0)
}

fn run(
    dataset: &HdaDataset,
    mcfg: &ModelConfig,
    tcfg: &TrainConfig,
    settings: ObjectiveSettings,
    variant: Variant,
) -> Result<TrainTrace> {
    tcfg.validate()?;
    mcfg.validate()?;
    if mcfg.source_dim != dataset.source_dim()
        || mcfg.target_dim != dataset.target_dim()
        || mcfg.classes != dataset.classes()
    {
        return Err(Error::Config(format!(
            "model config ({}/{} features, {} classes) does not match data ({}/{}, {})",
            mcfg.source_dim,
            mcfg.target_dim,
            mcfg.classes,
            dataset.source_dim(),
            dataset.target_dim(),
            dataset.classes()
        )));
    }
    let data = TrainingData::new(dataset)?;
    let mut params = StnParams::init(mcfg)?;
    let mut adam = AdamState::new(&params);
    let total = tcfg.iterations;
    let mut records = Vec::with_capacity(total);

    for r in 1..=total {
        let fp = forward(&params, &data, settings.use_source)?;
        let probs = unlabeled_probs(&params, &fp)?;
        if !probs.all_finite() {
            return Err(Error::Divergence {
                iteration: r,
                what: "non-finite class probabilities".into(),
            });
        }
        let soft = variant.soft_labels(probs, r, total)?;
        let (breakdown, grads) = evaluate(&params, &data, &fp, &soft, &settings, r)?;
        if !breakdown.total.is_finite() {
            return Err(Error::Divergence {
                iteration: r,
                what: format!("objective is {}", breakdown.total),
            });
        }
        adam.step(&mut params, &grads, &tcfg.adam, r)?;
        records.push(breakdown);
    }
    Ok(TrainTrace { records, params })
}

/// Predicted class of each target-domain row.
pub fn predict(params: &StnParams, x: &Matrix) -> Result<Vec<usize>> {
    if x.cols() != params.target_dim() {
        return Err(Error::shape(
            "predict",
            format!("{} features, model expects {}", x.cols(), params.target_dim()),
        ));
    }
    params.predict(x)
}
