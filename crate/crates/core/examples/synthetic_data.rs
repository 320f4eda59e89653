// Generate the two-domain synthetic task and write it as CSV.
//
// `cargo run --example synthetic_data [out_dir]`

use std::path::PathBuf;

use stn::data::{gen_synthetic, SynthSpec};

pub fn run_example() -> stn::Result<()> {
    run(std::env::temp_dir().join("stn_synthetic"))
}

fn run(out: PathBuf) -> stn::Result<()> {
    let spec = SynthSpec {
        seed: 7,
        ..SynthSpec::default()
    };
    let data = gen_synthetic(&spec)?;
    println!(
        "source {:?}, labeled target {:?}, unlabeled target {:?}, {} classes",
        data.source().shape(),
        data.labeled().shape(),
        data.unlabeled().shape(),
        data.classes()
    );
    let mut per_class = vec![0; data.classes()];
    for &y in data.labeled_labels() {
        per_class[y] += 1;
    }
    println!("labeled target rows per class: {per_class:?}");

    data.write_dir(&out)?;
    println!("wrote CSV files to {}", out.display());
    Ok(())
}

#[allow(dead_code)]
fn main() -> stn::Result<()> {
    match std::env::args().nth(1) {
        Some(dir) => run(PathBuf::from(dir)),
        None => run_example(),
    }
}
