// Finite-difference check of the training objective for every variant.

use stn::gradcheck::{DEFAULT_STEP, DEFAULT_TOL};
use stn::toy::{check_all_variants, ToyProblem};

pub fn run_example() -> stn::Result<()> {
    let problem = ToyProblem::new(0)?;
    let cases = check_all_variants(&problem, 1e-3, 1e-3, 300, DEFAULT_STEP, DEFAULT_TOL)?;
    for c in &cases {
        println!(
            "{:<12} r={:<3} {} coords, max rel err {:.2e}",
            c.variant, c.iteration, c.checked, c.max_rel_error
        );
    }
    if cases.iter().all(|c| c.passed) {
        Ok(())
    } else {
        Err(stn::Error::Evaluation("gradient check failed".into()))
    }
}

#[allow(dead_code)]
fn main() -> stn::Result<()> {
    run_example()
}
