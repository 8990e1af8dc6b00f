//! Gaussian-multinomial deviations: composing a marginal deviation with a
//! channel, pushing forward to functionals, sampling and orthant
//! probabilities.

use secondorder::gm::{
    compose_channel_deviation, gaussian_orthant, linear_pushforward, nm_covariance, nm_of_joint, sample_gaussian,
};
use secondorder::probkit::{variance, Alphabet, CondKernel, ProbVec, RealFunc};

fn main() -> secondorder::Result<()> {
    let x = Alphabet::indexed("X", 3);
    let y = Alphabet::indexed("Y", 2);
    let px = ProbVec::new(x.clone(), vec![0.2, 0.5, 0.3])?;
    let kernel = CondKernel::new(x.clone(), y.clone(), vec![0.9, 0.1, 0.4, 0.6, 0.25, 0.75])?;
    let joint = px.as_func().semidirect(&kernel.as_func())?;

    let composed = compose_channel_deviation(&nm_covariance(&px), &kernel.as_func())?;
    let direct = nm_of_joint(&joint)?;
    println!("max |composed - NM(joint)| = {:.2e}", (&composed.cov - &direct.cov).abs().max());

    let f = RealFunc::new(vec![x, y], vec![1.0, -1.0, 0.5, 2.0, 0.0, -0.5])?;
    let g = RealFunc::new(joint.domain().to_vec(), vec![0.0, 1.0, 1.0, 0.0, 1.0, 0.0])?;
    let pushed = linear_pushforward(&direct, &[&f, &g])?;
    println!("Var <G, f> = {:.6}, Var[f] = {:.6}", pushed.cov[(0, 0)], variance(&joint, &f)?);

    let draws = sample_gaussian(&direct, 7, 20000)?;
    let closure = draws.iter().map(|s| direct.closure_residual(s)).fold(0.0, f64::max);
    println!("20000 draws, largest coordinate-sum residual {closure:.1e}");

    let p = gaussian_orthant(&pushed, &[1.0, 0.5])?;
    println!("P(<G,f> <= 1, <G,g> <= 0.5) = {:.8}", p.value);
    Ok(())
}
