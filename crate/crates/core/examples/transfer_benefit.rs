// Full model against a baseline that never sees source data.
//
// `cargo run --release --example transfer_benefit [trials] [dim] [beta]`

use stn::data::SynthSpec;
use stn::eval::{run_comparison, TrialPlan};
use stn::train::{TrainConfig, Variant};
use stn::ModelConfig;

pub fn run_example() -> stn::Result<()> {
    run(2, 32, 1e-3)
}

fn run(trials: usize, dim: usize, beta: f64) -> stn::Result<()> {
    let spec = SynthSpec::default();
    let plan = TrialPlan::synthetic(&spec)?;
    let mcfg = ModelConfig {
        subspace_dim: dim,
        hidden_dim: dim,
        ..ModelConfig::new(spec.source_dim, spec.target_dim, spec.classes)
    };
    let tcfg = TrainConfig {
        beta,
        ..TrainConfig::default()
    };
    let variants = [Variant::Full, Variant::Beta0, Variant::REq0];
    let report = run_comparison(&plan, &mcfg, &tcfg, &variants, true, trials, 0, 1)?;
    print!("{}", report.summary_table());
    Ok(())
}

#[allow(dead_code)]
fn main() -> stn::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let arg = |i: usize| args.get(i).and_then(|a| a.parse::<f64>().ok());
    run(
        arg(0).map_or(2, |v| v as usize),
        arg(1).map_or(32, |v| v as usize),
        arg(2).unwrap_or(1e-3),
    )
}
