//! Type deviations of a memoryless source: a Levy-Prokhorov estimate of the
//! distance between the scaled deviation and its Gaussian limit, and the
//! self-information residual of type-class sources.

use secondorder::probkit::{Alphabet, ProbVec};
use secondorder::simlab::{self_info_residual, type_deviation_stats, ResidualSource};

fn main() -> secondorder::Result<()> {
    let p = ProbVec::new(Alphabet::indexed("X", 3), vec![0.5, 0.3, 0.2])?;
    println!("{:>6} {:>10} {:>10} {:>10} {:>12}", "n", "estimate", "floor", "radius", "excess*sqrt");
    for row in type_deviation_stats(&p, &[100, 1000, 10000], 5000, 0)? {
        println!(
            "{:>6} {:>10.5} {:>10.5} {:>10.5} {:>12.4}",
            row.n, row.lp_estimate, row.noise_floor, row.bootstrap_radius, row.excess_scaled
        );
    }
    for n in [100, 1000, 10000] {
        let r = self_info_residual(&p, n, 2000, 0, ResidualSource::TypeBall { radius: 1.0 })?;
        println!("n = {n:>5}: 95th percentile of |residual| / log2 n = {:.4}", r.ratio_q95);
    }
    Ok(())
}
