//! Accuracy, multi-seed trials, the ablation suite and embedding export.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{gen_synthetic, HdaDataset, SynthSpec};
use crate::error::{Error, Result};
use crate::losses::ObjectiveBreakdown;
use crate::matrix::Matrix;
use crate::model::{ModelConfig, StnParams};
use crate::rng::SeededRng;
use crate::train::{predict, train, train_target_only, TrainConfig, Variant};

/// Label used in reports for the baseline trained on labeled target rows only.
pub const TARGET_ONLY: &str = "target_only";

/// Fraction of positions where `pred` and `truth` agree.
pub fn accuracy(pred: &[usize], truth: &[usize]) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(Error::shape(
            "accuracy",
            format!("{} predictions for {} labels", pred.len(), truth.len()),
        ));
    }
    if pred.is_empty() {
        return Err(Error::EmptyInput("accuracy"));
    }
    let hits = pred.iter().zip(truth).filter(|(p, t)| p == t).count();
    Ok(hits as f64 / pred.len() as f64)
}

/// Where trial data comes from. Each trial redraws the labeled/unlabeled
/// target split of the base dataset with its own seed.
#[derive(Debug, Clone)]
pub struct TrialPlan {
    base: HdaDataset,
    labeled_per_class: usize,
}

impl TrialPlan {
    pub fn synthetic(spec: &SynthSpec) -> Result<Self> {
        Ok(Self {
            base: gen_synthetic(spec)?,
            labeled_per_class: spec.labeled_per_class,
        })
    }

    /// Fixed dataset; must carry held-out labels for its unlabeled rows.
    pub fn fixed(dataset: HdaDataset, labeled_per_class: usize) -> Result<Self> {
        if dataset.truth().is_none() {
            return Err(Error::Config(
                "trials need held-out labels for the unlabeled target rows".into(),
            ));
        }
        if labeled_per_class == 0 {
            return Err(Error::Config("labeled_per_class must be at least 1".into()));
        }
        Ok(Self {
            base: dataset,
            labeled_per_class,
        })
    }

    pub fn base(&self) -> &HdaDataset {
        &self.base
    }

    /// The split trial `seed` trains on.
    pub fn split(&self, seed: u64) -> Result<HdaDataset> {
        let mut rng = SeededRng::new(seed).fork(0);
        self.base.resplit(self.labeled_per_class, &mut rng)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrialReport {
    pub seed: u64,
    #[serde(skip)]
    pub variant: String,
    pub accuracy: f64,
    pub wall_ms: u64,
    #[serde(skip)]
    pub trace: Vec<ObjectiveBreakdown>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VariantReport {
    pub variant: String,
    pub trials: Vec<TrialReport>,
    pub mean: f64,
    /// Sample standard deviation; zero for a single trial.
    pub std: f64,
}

impl VariantReport {
    pub fn from_trials(variant: impl Into<String>, trials: Vec<TrialReport>) -> Self {
        let accs: Vec<f64> = trials.iter().map(|t| t.accuracy).collect();
        let (mean, std) = mean_std(&accs);
        Self {
            variant: variant.into(),
            trials,
            mean,
            std,
        }
    }
}

/// Mean and sample standard deviation (zero for fewer than two values).
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SuiteReport {
    pub variants: Vec<VariantReport>,
}

impl SuiteReport {
    pub fn get(&self, variant: &str) -> Option<&VariantReport> {
        self.variants.iter().find(|v| v.variant == variant)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports contain only plain data")
    }

    /// Plain-text table of per-variant mean and standard deviation.
    pub fn summary_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<12} {:>7} {:>9} {:>9}", "variant", "trials", "mean(%)", "std(%)");
        for v in &self.variants {
            let _ = writeln!(
                out,
                "{:<12} {:>7} {:>9.2} {:>9.2}",
                v.variant,
                v.trials.len(),
                100.0 * v.mean,
                100.0 * v.std
            );
        }
        out
    }

    /// Writes `report.json` plus one trace CSV per trial into `dir`.
    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let path = dir.join("report.json");
        fs::write(&path, self.to_json()).map_err(|e| Error::io(&path, e))?;
        for v in &self.variants {
            for t in &v.trials {
                let p = dir.join(format!("trace_{}_seed{}.csv", v.variant, t.seed));
                crate::train::write_trace_csv(&p, &t.trace)?;
            }
        }
        Ok(())
    }
}

/// What a single trial trains.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Arm {
    Variant(Variant),
    TargetOnly,
}

impl Arm {
    fn label(self) -> String {
        match self {
            Arm::Variant(v) => v.name().to_string(),
            Arm::TargetOnly => TARGET_ONLY.to_string(),
        }
    }
}

fn run_one(
    plan: &TrialPlan,
    mcfg: &ModelConfig,
    tcfg: &TrainConfig,
    arm: Arm,
    seed: u64,
) -> Result<TrialReport> {
    let annotate = |e: Error| Error::Trial {
        seed,
        source: Box::new(e),
    };
    let start = Instant::now();
    let data = plan.split(seed).map_err(annotate)?;
    let mcfg = ModelConfig {
        init_seed: seed,
        ..mcfg.clone()
    };
    let trace = match arm {
        Arm::Variant(variant) => train(&data, &mcfg, &TrainConfig { variant, ..tcfg.clone() }),
        Arm::TargetOnly => train_target_only(&data, &mcfg, tcfg),
    }
    .map_err(annotate)?;
    let truth = data.truth().expect("splits carry held-out labels").reveal();
    let pred = predict(&trace.params, data.unlabeled()).map_err(annotate)?;
    let acc = accuracy(&pred, truth).map_err(annotate)?;
    Ok(TrialReport {
        seed,
        variant: arm.label(),
        accuracy: acc,
        wall_ms: start.elapsed().as_millis() as u64,
        trace: trace.records,
    })
}

/// Runs every (arm, seed) pair, `jobs` at a time, and groups results by arm
/// in the given order with trials ordered by seed.
fn run_grid(
    plan: &TrialPlan,
    mcfg: &ModelConfig,
    tcfg: &TrainConfig,
    arms: &[Arm],
    n_trials: usize,
    base_seed: u64,
    jobs: usize,
) -> Result<SuiteReport> {
    if n_trials == 0 {
        return Err(Error::Config("at least one trial is required".into()));
    }
    let tasks: Vec<(Arm, u64)> = arms
        .iter()
        .flat_map(|&a| (0..n_trials as u64).map(move |i| (a, base_seed + i)))
        .collect();
    let work = || -> Vec<Result<TrialReport>> {
        tasks
            .par_iter()
            .map(|&(arm, seed)| run_one(plan, mcfg, tcfg, arm, seed))
            .collect()
    };
    let results = if jobs <= 1 {
        tasks
            .iter()
            .map(|&(arm, seed)| run_one(plan, mcfg, tcfg, arm, seed))
            .collect()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?
            .install(work)
    };
    let mut results = results.into_iter();
    let mut variants = Vec::with_capacity(arms.len());
    for &arm in arms {
        let trials = results
            .by_ref()
            .take(n_trials)
            .collect::<Result<Vec<_>>>()?;
        variants.push(VariantReport::from_trials(arm.label(), trials));
    }
    Ok(SuiteReport { variants })
}

/// `n_trials` runs of `tcfg.variant`; trial `i` uses seed `base_seed + i`
/// for both the target split and the initialization.
pub fn run_trials(
    plan: &TrialPlan,
    mcfg: &ModelConfig,
    tcfg: &TrainConfig,
    n_trials: usize,
    base_seed: u64,
    jobs: usize,
) -> Result<SuiteReport> {
    run_grid(plan, mcfg, tcfg, &[Arm::Variant(tcfg.variant)], n_trials, base_seed, jobs)
}

/// All six variants on identical per-trial splits and initializations.
pub fn run_ablations(
    plan: &TrialPlan,
    mcfg: &ModelConfig,
    tcfg: &TrainConfig,
    n_trials: usize,
    base_seed: u64,
    jobs: usize,
) -> Result<SuiteReport> {
    let arms = Variant::ALL.map(Arm::Variant);
    run_grid(plan, mcfg, tcfg, &arms, n_trials, base_seed, jobs)
}

/// Chosen variants plus, optionally, the target-only baseline, all paired
/// on the same seeds.
pub fn run_comparison(
    plan: &TrialPlan,
    mcfg: &ModelConfig,
    tcfg: &TrainConfig,
    variants: &[Variant],
    with_target_only: bool,
    n_trials: usize,
    base_seed: u64,
    jobs: usize,
) -> Result<SuiteReport> {
    let mut arms: Vec<Arm> = variants.iter().copied().map(Arm::Variant).collect();
    if with_target_only {
        arms.push(Arm::TargetOnly);
    }
    run_grid(plan, mcfg, tcfg, &arms, n_trials, base_seed, jobs)
}

/// Projected rows as written by [`export_embeddings`].
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    /// `"source"` or `"target"` per row.
    pub domains: Vec<String>,
    /// Known label per row; `None` for unlabeled rows without held-out labels.
    pub labels: Vec<Option<usize>>,
    pub embeddings: Matrix,
}

/// Writes `domain,label,z0,..` for every source row followed by every
/// target row (labeled first). Unknown labels are left empty.
pub fn export_embeddings(params: &StnParams, dataset: &HdaDataset, path: &Path) -> Result<()> {
    let zs = params.project_source(dataset.source())?;
    let zt = params.project_target(&dataset.target())?;
    let truth = dataset.truth().map(|t| t.reveal());

    let mut rows: Vec<(&str, Option<usize>, &[f64])> = Vec::with_capacity(zs.rows() + zt.rows());
    for (i, z) in zs.iter_rows().enumerate() {
        rows.push(("source", Some(dataset.source_labels()[i]), z));
    }
    let n_l = dataset.labeled().rows();
    for (i, z) in zt.iter_rows().enumerate() {
        let label = if i < n_l {
            Some(dataset.labeled_labels()[i])
        } else {
            truth.map(|t| t[i - n_l])
        };
        rows.push(("target", label, z));
    }

    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    let header: Vec<String> = (0..params.subspace_dim()).map(|k| format!("z{k}")).collect();
    writeln!(w, "domain,label,{}", header.join(",")).map_err(io)?;
    for (domain, label, z) in rows {
        let label = label.map(|l| l.to_string()).unwrap_or_default();
        let vals: Vec<String> = z.iter().map(|v| format!("{v:?}")).collect();
        writeln!(w, "{domain},{label},{}", vals.join(",")).map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Reads a file written by [`export_embeddings`].
pub fn load_embeddings(path: &Path) -> Result<EmbeddingTable> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let parse_err = |line: usize, msg: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let mut lines = text.lines().enumerate();
    let width = match lines.next() {
        Some((_, h)) if h.starts_with("domain,label") => h.split(',').count() - 2,
        _ => return Err(parse_err(1, "missing embedding header".into())),
    };
    let (mut domains, mut labels, mut data) = (Vec::new(), Vec::new(), Vec::new());
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != width + 2 {
            return Err(parse_err(i + 1, format!("expected {} cells, got {}", width + 2, cells.len())));
        }
        domains.push(cells[0].to_string());
        labels.push(if cells[1].is_empty() {
            None
        } else {
            Some(cells[1].parse().map_err(|_| parse_err(i + 1, format!("bad label {:?}", cells[1])))?)
        });
        for c in &cells[2..] {
            data.push(c.parse::<f64>().map_err(|_| parse_err(i + 1, format!("bad value {c:?}")))?);
        }
    }
    let embeddings = Matrix::new(domains.len(), width, data)?;
    Ok(EmbeddingTable {
        domains,
        labels,
        embeddings,
    })
}
