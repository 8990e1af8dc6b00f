//! Random coding over a binary symmetric channel with conditional-type
//! codewords and Poisson-matching decoding, against the normal
//! approximation at the rate actually used.

use secondorder::bounds::cc_dispersion;
use secondorder::numeric::q_func;
use secondorder::probkit::{Alphabet, CondKernel, RealFunc};
use secondorder::rdsolver::{capacity_cost, ChannelCost, CodingInstance};
use secondorder::simlab::{simulate, SimConfig};

fn main() -> secondorder::Result<()> {
    let bit = |name: &str| Alphabet::indexed(name, 2);
    let channel = CondKernel::bsc(bit("X"), bit("Y"), 0.11)?;
    let cost = RealFunc::constant(vec![bit("X")], 0.0)?;
    let capacity = capacity_cost(&channel, &cost, 0.0)?.capacity;
    let dispersion = cc_dispersion(&channel, &cost, 0.0)?;
    let inst = CodingInstance::ChannelCost(ChannelCost { channel, cost, budget: 0.0, input: None });
    println!("C = {capacity:.5}, V = {dispersion:.5}");

    for (n, rate) in [(8, 0.05), (8, 0.3), (10, 0.3), (12, 0.25)] {
        let r = simulate(&SimConfig::new(inst.clone(), n, rate, 5_000, 0)?)?;
        let w = (n as f64).sqrt() * (capacity - r.empirical_rate_used);
        let bound = q_func(w / dispersion.sqrt());
        println!(
            "n = {n:>2}, M = {:>3}: error {:.4} +- {:.4}, normal approximation {:.4}",
            r.messages,
            r.error_rate,
            r.wilson_radius(),
            bound
        );
    }
    Ok(())
}
