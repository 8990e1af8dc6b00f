//! Wyner-Ziv coding of a uniform bit with BSC(0.25) side information:
//! simulated excess-distortion probability against the second-order bound
//! at the simulated rate.
//!
//! The last column is `(empirical - bound) * sqrt(n)`; the acceptance
//! allowance was frozen from this output with seed 1:
//! `cargo run --release --example wyner_ziv_simulation -- 1 4000 6,8,10`.
//! Each blocklength uses the rate `R(D) + 1/sqrt(n)`.

use secondorder::bounds::{expected_pe, wz_second_order_terms};
use secondorder::rdsolver::{wz_binary_optimize, CodingInstance};
use secondorder::simlab::{simulate, SimConfig};

fn main() -> secondorder::Result<()> {
    let mut args = std::env::args().skip(1);
    let seed: u64 = args.next().map(|s| s.parse().expect("seed")).unwrap_or(0);
    let trials: u64 = args.next().map(|s| s.parse().expect("trials")).unwrap_or(2000);
    let lengths: Vec<usize> =
        args.next().unwrap_or_else(|| "6,8".into()).split(',').map(|s| s.parse().expect("blocklength")).collect();

    let opt = wz_binary_optimize(0.25, 0.1)?;
    let inst = CodingInstance::WynerZiv(opt.family.instance(opt.lambda));
    let terms = wz_second_order_terms(&inst)?;
    println!("R(D) = {:.5}, V = {:.5}, seed {seed}, {trials} trials", terms.rate, terms.v_gcc());
    for n in lengths {
        let rate = terms.rate + 1.0 / (n as f64).sqrt();
        let r = simulate(&SimConfig::new(inst.clone(), n, rate, trials, seed)?)?;
        let w = (n as f64).sqrt() * (r.empirical_rate_used - terms.rate);
        let bound = expected_pe(w, &terms)?.value;
        println!(
            "n = {n:>2}, M = {:>3}, W = {w:.4}: excess {:.4} +- {:.4}, bound {bound:.4}, scaled gap {:.4}",
            r.messages,
            r.error_rate,
            r.wilson_radius(),
            (r.error_rate - bound) * (n as f64).sqrt()
        );
    }
    Ok(())
}
