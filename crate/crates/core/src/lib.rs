//! Soft transfer network for heterogeneous domain adaptation.
//!
//! Source and target features live in different spaces. Two small
//! projection networks map both into a shared subspace where a single
//! softmax classifier is trained on the labeled rows of both domains, while
//! a soft-label discrepancy pulls the projected domains together.

pub mod blocks;
pub mod checkpoint;
pub mod cli;
pub mod data;
pub mod error;
pub mod eval;
pub mod gradcheck;
pub mod losses;
pub mod matrix;
pub mod model;
pub mod objective;
pub mod optim;
pub mod rng;
pub mod toy;
pub mod train;

pub use data::{gen_synthetic, HdaDataset, SynthSpec};
pub use error::{Error, Result};
pub use eval::{accuracy, run_ablations, run_trials, SuiteReport, TrialPlan};
pub use matrix::Matrix;
pub use model::{ModelConfig, SoftLabelMatrix, StnParams};
pub use rng::SeededRng;
pub use train::{train, TrainConfig, TrainTrace, Variant};
