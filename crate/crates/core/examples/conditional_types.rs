//! Conditional-type codewords: the joint type of (x, u) tracks the target
//! kernel plus a perturbation of the input's type deviation.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use secondorder::gm::Zeta;
use secondorder::probkit::{Alphabet, CondKernel, ProbVec};
use secondorder::simlab::{gcc_deviation, gcc_sample};

fn main() -> secondorder::Result<()> {
    let x = Alphabet::indexed("X", 2);
    let px = ProbVec::new(x.clone(), vec![0.4, 0.6])?;
    let kernel = CondKernel::new(x, Alphabet::indexed("U", 2), vec![0.7, 0.3, 0.2, 0.8])?;
    let joint = px.as_func().semidirect(&kernel.as_func())?;

    // Moves conditional mass of U toward 1 when symbol 0 is over-represented.
    let matrix = DMatrix::from_row_slice(4, 2, &[-0.3, 0.3, 0.3, -0.3, -0.2, 0.2, 0.2, -0.2]);
    let zeta = Zeta::Affine { matrix, offset: DVector::zeros(4) };

    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for n in [50, 200, 800] {
        let mut worst: f64 = 0.0;
        for draw in 0..200 {
            let xs: Vec<usize> = (0..n).map(|_| (rng.gen::<f64>() >= 0.4) as usize).collect();
            let us = gcc_sample(&joint, &zeta, &xs, draw)?;
            worst = worst.max(gcc_deviation(&joint, &zeta, &xs, &us)? * (n as f64).sqrt());
        }
        println!("n = {n:>3}: sqrt(n) * max deviation over 200 draws = {worst:.4}");
    }
    Ok(())
}
