// Train once on the synthetic task and score the unlabeled target rows.

use stn::data::{gen_synthetic, SynthSpec};
use stn::eval::accuracy;
use stn::train::{predict, train, TrainConfig};
use stn::ModelConfig;

pub fn run_example() -> stn::Result<()> {
    let data = gen_synthetic(&SynthSpec::default())?;
    let mcfg = ModelConfig {
        subspace_dim: 32,
        hidden_dim: 32,
        ..ModelConfig::new(data.source_dim(), data.target_dim(), data.classes())
    };
    let trace = train(&data, &mcfg, &TrainConfig::default())?;

    for rec in trace.records.iter().step_by(50).chain(trace.records.last()) {
        println!(
            "r={:<3} cls={:.4} reg={:.4} q_m={:.4} q_c={:.4} total={:.4}",
            rec.iteration, rec.cls_loss, rec.reg_term, rec.q_m, rec.q_c, rec.total
        );
    }
    let truth = data.truth().expect("synthetic data keeps held-out labels");
    let acc = accuracy(&predict(&trace.params, data.unlabeled())?, truth.reveal())?;
    println!("unlabeled target accuracy: {:.2}%", 100.0 * acc);
    Ok(())
}

#[allow(dead_code)]
fn main() -> stn::Result<()> {
    run_example()
}
