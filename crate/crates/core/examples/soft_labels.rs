// How the soft-label weights phase unlabeled rows into the class-wise
// discrepancy over training.

use stn::losses::{conditional_mmd, ClassIndex};
use stn::model::SoftLabelMatrix;
use stn::Matrix;

pub fn run_example() -> stn::Result<()> {
    // Two classes in a 1-d subspace. Source centroids sit at 0 and 10, the
    // labeled target rows at 1 and 9, and one unlabeled row at 5 is
    // predicted 80% class 0.
    let zs = Matrix::from_rows(&[[0.0], [10.0]])?;
    let zl = Matrix::from_rows(&[[1.0], [9.0]])?;
    let zu = Matrix::from_rows(&[[5.0]])?;
    let idx = ClassIndex::new(&[0, 1], &[0, 1], 2)?;
    let probs = Matrix::from_rows(&[[0.8, 0.2]])?;

    let total = 300;
    for r in [0, 75, 150, 225, 300] {
        let soft = SoftLabelMatrix::new(probs.clone(), r, total)?;
        let q_c = conditional_mmd(&zs, &zl, &zu, &idx, &soft)?;
        println!(
            "r={r:<3} weights={:?} q_c={:.4} per class={:?}",
            soft.weights().as_slice(),
            q_c.value,
            q_c.per_class
        );
    }
    let hard = SoftLabelMatrix::new(probs, total, total)?.hardened();
    println!("hardened labels: {:?}", hard.probs().as_slice());
    Ok(())
}

#[allow(dead_code)]
fn main() -> stn::Result<()> {
    run_example()
}
