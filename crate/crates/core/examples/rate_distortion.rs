//! Rate-distortion curve, tilted information and dispersion of a ternary
//! source under Hamming distortion.

use secondorder::bounds::lsc_dispersion;
use secondorder::probkit::{variance, Alphabet, ProbVec, RealFunc};
use secondorder::rdsolver::{blahut_arimoto_rd, tilted_information};

fn main() -> secondorder::Result<()> {
    let x = Alphabet::indexed("X", 3);
    let px = ProbVec::new(x.clone(), vec![0.5, 0.3, 0.2])?;
    let d = RealFunc::from_fn(vec![x, Alphabet::indexed("Z", 3)], |i| (i[0] != i[1]) as u8 as f64)?;

    println!("{:>6} {:>10} {:>10} {:>10} {:>10}", "D", "R(D)", "lambda", "Var[j]", "gap");
    for level in [0.05, 0.1, 0.2, 0.3, 0.4] {
        let sol = blahut_arimoto_rd(&px, &d, level)?;
        let tilted = tilted_information(&sol, &px, &d)?;
        let joint_x = px.as_func();
        let v = variance(&joint_x, &tilted.j)?;
        // Same dispersion through the library shortcut.
        debug_assert!((v - lsc_dispersion(&px, &d, level)?).abs() < 1e-9);
        println!("{level:>6.2} {:>10.6} {:>10.6} {:>10.6} {:>10.2e}", sol.rate, sol.lambda, v, sol.duality_gap);
    }
    Ok(())
}
