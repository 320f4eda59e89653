// Train, checkpoint, reload and write the projected rows for plotting.

use stn::checkpoint;
use stn::data::{gen_synthetic, SynthSpec};
use stn::eval::{export_embeddings, load_embeddings};
use stn::train::{train, TrainConfig};
use stn::ModelConfig;

pub fn run_example() -> stn::Result<()> {
    let spec = SynthSpec {
        source_per_class: 30,
        unlabeled_per_class: 20,
        ..SynthSpec::default()
    };
    let data = gen_synthetic(&spec)?;
    let mcfg = ModelConfig {
        subspace_dim: 8,
        hidden_dim: 16,
        ..ModelConfig::new(data.source_dim(), data.target_dim(), data.classes())
    };
    let tcfg = TrainConfig {
        iterations: 100,
        ..TrainConfig::default()
    };
    let trace = train(&data, &mcfg, &tcfg)?;

    let dir = std::env::temp_dir().join("stn_export_example");
    std::fs::create_dir_all(&dir).map_err(|e| stn::Error::Io {
        path: dir.clone(),
        source: e,
    })?;
    let ckpt = dir.join("model.ckpt");
    checkpoint::save(&trace.params, &ckpt)?;
    let params = checkpoint::load(&ckpt)?;
    assert_eq!(params, trace.params);

    let csv = dir.join("embeddings.csv");
    export_embeddings(&params, &data, &csv)?;
    let table = load_embeddings(&csv)?;
    println!(
        "{} rows x {} dims written to {}",
        table.embeddings.rows(),
        table.embeddings.cols(),
        csv.display()
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> stn::Result<()> {
    run_example()
}
