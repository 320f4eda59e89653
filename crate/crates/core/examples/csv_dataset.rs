// Load a dataset from the three-file CSV layout and train on it.
//
// `cargo run --example csv_dataset [dir]`; without a directory a small
// synthetic set is written to a temporary one first.

use std::path::PathBuf;

use stn::data::{gen_synthetic, CsvSchema, HdaDataset, SynthSpec};
use stn::eval::accuracy;
use stn::train::{predict, train, TrainConfig};
use stn::ModelConfig;

pub fn run_example() -> stn::Result<()> {
    let dir = std::env::temp_dir().join("stn_csv_example");
    let spec = SynthSpec {
        source_per_class: 30,
        unlabeled_per_class: 20,
        ..SynthSpec::default()
    };
    gen_synthetic(&spec)?.write_dir(&dir)?;
    run(dir)
}

fn run(dir: PathBuf) -> stn::Result<()> {
    let data = HdaDataset::load_dir(&dir, &CsvSchema::default())?;
    println!(
        "loaded {} classes: source {} features, target {} features",
        data.classes(),
        data.source_dim(),
        data.target_dim()
    );
    let mcfg = ModelConfig {
        subspace_dim: 16,
        hidden_dim: 16,
        ..ModelConfig::new(data.source_dim(), data.target_dim(), data.classes())
    };
    let tcfg = TrainConfig {
        iterations: 150,
        ..TrainConfig::default()
    };
    let trace = train(&data, &mcfg, &tcfg)?;
    match data.truth() {
        Some(truth) => {
            let acc = accuracy(&predict(&trace.params, data.unlabeled())?, truth.reveal())?;
            println!("unlabeled target accuracy: {:.2}%", 100.0 * acc);
        }
        None => println!("no held-out labels; final objective {:.4}", trace.totals()[149]),
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> stn::Result<()> {
    match std::env::args().nth(1) {
        Some(dir) => run(PathBuf::from(dir)),
        None => run_example(),
    }
}
