//! Poisson matching: an encoder and a decoder select from one shared
//! exponential codebook with different weights; the mismatch rate stays
//! below the single-letter bound.

use secondorder::probkit::{Alphabet, CondKernel, ProbVec};
use secondorder::simlab::{pml_bound_check, pml_select, Codebook};

fn main() -> secondorder::Result<()> {
    let book = Codebook::new(1, 0, 4)?;
    let pick = pml_select(&book, [(0, 0.1), (1, 0.2), (2, 0.3), (3, 0.4)])?;
    println!("selected key {} (score/weight {:.4})", pick.key, pick.ratio);

    // X uniform on 3 symbols, U a noisy copy of X, Y a noisy copy of U.
    let x = Alphabet::indexed("X", 3);
    let u = Alphabet::indexed("U", 3);
    let y = Alphabet::indexed("Y", 3);
    let noisy = |from: &Alphabet, to: &Alphabet, keep: f64| {
        let rows = (0..9).map(|i| if i / 3 == i % 3 { keep } else { (1.0 - keep) / 2.0 }).collect();
        CondKernel::new(from.clone(), to.clone(), rows)
    };
    let joint = ProbVec::uniform(x.clone())
        .as_func()
        .semidirect(&noisy(&x, &u, 0.8)?.as_func())?
        .semidirect(&noisy(&u, &y, 0.9)?.as_func())?;
    let check = pml_bound_check(&joint, 100_000, 3)?;
    println!(
        "mismatch {:.5} in [{:.5}, {:.5}], bound {:.5}, passes: {}",
        check.empirical_mismatch_rate, check.wilson_interval.0, check.wilson_interval.1, check.mean_bound, check.passes
    );
    Ok(())
}
