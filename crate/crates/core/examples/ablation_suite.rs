// All six training variants on paired seeds.
//
// `cargo run --release --example ablation_suite [trials]`

use stn::data::SynthSpec;
use stn::eval::{run_ablations, TrialPlan};
use stn::train::TrainConfig;
use stn::ModelConfig;

pub fn run_example() -> stn::Result<()> {
    run(2)
}

fn run(trials: usize) -> stn::Result<()> {
    let spec = SynthSpec {
        source_per_class: 40,
        unlabeled_per_class: 25,
        ..SynthSpec::default()
    };
    let plan = TrialPlan::synthetic(&spec)?;
    let mcfg = ModelConfig {
        subspace_dim: 16,
        hidden_dim: 16,
        ..ModelConfig::new(spec.source_dim, spec.target_dim, spec.classes)
    };
    let tcfg = TrainConfig {
        iterations: 100,
        ..TrainConfig::default()
    };
    let report = run_ablations(&plan, &mcfg, &tcfg, trials, 0, 1)?;
    print!("{}", report.summary_table());
    Ok(())
}

#[allow(dead_code)]
fn main() -> stn::Result<()> {
    run(std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(2))
}
