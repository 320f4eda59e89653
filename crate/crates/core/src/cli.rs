//! The `stn` command line: `gen`, `train`, `ablate`, `gradcheck`, `export`.
//!
//! Values resolve as defaults, then `--config` file, then flags. The
//! resolved configuration is written to `resolved_config.json` in the output
//! directory and can be passed back via `--config` to rerun a command.

use std::ffi::OsString;
use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::checkpoint;
use crate::data::{gen_synthetic, CsvSchema, HdaDataset, SynthSpec};
use crate::error::{Error, Result};
use crate::eval::{accuracy, export_embeddings, run_ablations, TrialPlan};
use crate::gradcheck::{DEFAULT_STEP, DEFAULT_TOL};
use crate::model::ModelConfig;
use crate::optim::AdamConfig;
use crate::toy::{check_all_variants, ToyProblem};
use crate::train::{predict, train, TrainConfig, Variant};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;

pub const RESOLVED_CONFIG: &str = "resolved_config.json";

/// Every tunable value in one flat record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CliConfig {
    pub beta: f64,
    pub tau: f64,
    pub lr: f64,
    pub iters: usize,
    pub dim: usize,
    pub hidden: Option<usize>,
    pub slope: f64,
    pub seed: u64,
    pub trials: usize,
    pub variant: Variant,
    pub jobs: usize,
    /// Directory with `source.csv`, `target_labeled.csv`, `target_unlabeled.csv`.
    /// Without it, commands that need data generate the synthetic task.
    pub data: Option<PathBuf>,
    pub out: PathBuf,
    pub checkpoint: Option<PathBuf>,
    pub tol: f64,
    pub synth: SynthSpec,
}

impl Default for CliConfig {
    fn default() -> Self {
        let t = TrainConfig::default();
        Self {
            beta: t.beta,
            tau: t.tau,
            lr: t.adam.lr,
            iters: t.iterations,
            dim: 256,
            hidden: None,
            slope: crate::blocks::DEFAULT_SLOPE,
            seed: 0,
            trials: 20,
            variant: Variant::Full,
            jobs: 1,
            data: None,
            out: PathBuf::from("out"),
            checkpoint: None,
            tol: DEFAULT_TOL,
            synth: SynthSpec::default(),
        }
    }
}

impl CliConfig {
    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            beta: self.beta,
            tau: self.tau,
            iterations: self.iters,
            adam: AdamConfig {
                lr: self.lr,
                ..AdamConfig::default()
            },
            variant: self.variant,
        }
    }

    pub fn model_config(&self, data: &HdaDataset) -> ModelConfig {
        ModelConfig {
            subspace_dim: self.dim,
            hidden_dim: self.hidden.unwrap_or(self.dim),
            slope: self.slope,
            init_seed: self.seed,
            ..ModelConfig::new(data.source_dim(), data.target_dim(), data.classes())
        }
    }

    /// The configured dataset, or the synthetic task generated with `seed`.
    pub fn dataset(&self) -> Result<HdaDataset> {
        match &self.data {
            Some(dir) => HdaDataset::load_dir(dir, &CsvSchema::default()),
            None => gen_synthetic(&self.synth_spec()),
        }
    }

    fn synth_spec(&self) -> SynthSpec {
        SynthSpec {
            seed: self.seed,
            ..self.synth.clone()
        }
    }

    fn write_resolved(&self) -> Result<()> {
        fs::create_dir_all(&self.out).map_err(|e| Error::io(&self.out, e))?;
        let path = self.out.join(RESOLVED_CONFIG);
        let json = serde_json::to_string_pretty(self).expect("config is plain data");
        fs::write(&path, json).map_err(|e| Error::io(&path, e))
    }
}

#[derive(Debug, Parser)]
#[command(name = "stn", about = "Soft transfer network for heterogeneous domain adaptation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the synthetic task as CSV files.
    Gen(Overrides),
    /// Train once; write a checkpoint, the objective trace and the accuracy.
    Train(Overrides),
    /// Run all six variants over paired seeds.
    Ablate(Overrides),
    /// Check the objective gradient on a toy problem for every variant.
    Gradcheck(Overrides),
    /// Write projected source and target rows of a checkpoint.
    Export(Overrides),
}

#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// JSON file with any subset of the configuration keys.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub iters: Option<usize>,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub hidden: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub variant: Option<Variant>,
    #[arg(long)]
    pub jobs: Option<usize>,
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long)]
    pub tol: Option<f64>,
}

impl Overrides {
    /// Defaults, then the config file, then these flags.
    pub fn resolve(&self) -> Result<CliConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
                serde_json::from_str(&text)
                    .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
            }
            None => CliConfig::default(),
        };
        macro_rules! apply {
            ($($field:ident),*) => {$(
                if let Some(v) = self.$field.clone() {
                    cfg.$field = v.into();
                }
            )*};
        }
        apply!(beta, tau, lr, iters, dim, seed, trials, variant, jobs, out, tol);
        if self.hidden.is_some() {
            cfg.hidden = self.hidden;
        }
        if self.data.is_some() {
            cfg.data = self.data.clone();
        }
        if self.checkpoint.is_some() {
            cfg.checkpoint = self.checkpoint.clone();
        }
        Ok(cfg)
    }
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match dispatch(&cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_divergence() {
                EXIT_NUMERIC
            } else {
                EXIT_DATA
            }
        }
    }
}

fn dispatch(cmd: &Command) -> Result<i32> {
    match cmd {
        Command::Gen(o) => cmd_gen(&o.resolve()?),
        Command::Train(o) => cmd_train(&o.resolve()?),
        Command::Ablate(o) => cmd_ablate(&o.resolve()?),
        Command::Gradcheck(o) => cmd_gradcheck(&o.resolve()?),
        Command::Export(o) => cmd_export(&o.resolve()?),
    }
}

pub fn cmd_gen(cfg: &CliConfig) -> Result<i32> {
    let spec = cfg.synth_spec();
    let data = gen_synthetic(&spec)?;
    cfg.write_resolved()?;
    data.write_dir(&cfg.out)?;
    println!(
        "wrote {} source, {} labeled and {} unlabeled target rows to {}",
        data.source().rows(),
        data.labeled().rows(),
        data.unlabeled().rows(),
        cfg.out.display()
    );
    Ok(EXIT_OK)
}

pub fn cmd_train(cfg: &CliConfig) -> Result<i32> {
    let data = cfg.dataset()?;
    let mcfg = cfg.model_config(&data);
    let tcfg = cfg.train_config();
    cfg.write_resolved()?;
    let trace = train(&data, &mcfg, &tcfg)?;
    trace.write_csv(&cfg.out.join("trace.csv"))?;
    checkpoint::save(&trace.params, &cfg.out.join("model.ckpt"))?;
    let last = trace.records.last().expect("at least one iteration");
    println!("final objective {:.6} after {} iterations", last.total, last.iteration);
    if let Some(truth) = data.truth() {
        let acc = accuracy(&predict(&trace.params, data.unlabeled())?, truth.reveal())?;
        let path = cfg.out.join("accuracy.json");
        let json = serde_json::json!({ "variant": tcfg.variant, "accuracy": acc });
        fs::write(&path, json.to_string()).map_err(|e| Error::io(&path, e))?;
        println!("unlabeled target accuracy {:.2}%", 100.0 * acc);
    }
    Ok(EXIT_OK)
}

pub fn cmd_ablate(cfg: &CliConfig) -> Result<i32> {
    let plan = match &cfg.data {
        Some(_) => TrialPlan::fixed(cfg.dataset()?, cfg.synth.labeled_per_class)?,
        None => TrialPlan::synthetic(&cfg.synth_spec())?,
    };
    let mcfg = cfg.model_config(plan.base());
    cfg.write_resolved()?;
    let report = run_ablations(&plan, &mcfg, &cfg.train_config(), cfg.trials, cfg.seed, cfg.jobs)?;
    report.write_dir(&cfg.out)?;
    print!("{}", report.summary_table());
    Ok(EXIT_OK)
}

pub fn cmd_gradcheck(cfg: &CliConfig) -> Result<i32> {
    let problem = ToyProblem::new(cfg.seed)?;
    cfg.write_resolved()?;
    let cases = check_all_variants(&problem, cfg.beta, cfg.tau, cfg.iters, DEFAULT_STEP, cfg.tol)?;
    let path = cfg.out.join("gradcheck.json");
    let json = serde_json::to_string_pretty(&cases).expect("plain data");
    fs::write(&path, json).map_err(|e| Error::io(&path, e))?;
    let mut all_passed = true;
    for c in &cases {
        println!(
            "{:<12} r={:<4} coords={:<4} max_rel_err={:.3e} {}",
            c.variant,
            c.iteration,
            c.checked,
            c.max_rel_error,
            if c.passed { "ok" } else { "FAIL" }
        );
        all_passed &= c.passed;
    }
    Ok(if all_passed { EXIT_OK } else { EXIT_NUMERIC })
}

pub fn cmd_export(cfg: &CliConfig) -> Result<i32> {
    let ckpt = cfg
        .checkpoint
        .as_deref()
        .ok_or_else(|| Error::Config("export needs --checkpoint".into()))?;
    let params = checkpoint::load(ckpt)?;
    let data = cfg.dataset()?;
    cfg.write_resolved()?;
    let path = cfg.out.join("embeddings.csv");
    export_embeddings(&params, &data, &path)?;
    println!("wrote {}", path.display());
    Ok(EXIT_OK)
}
