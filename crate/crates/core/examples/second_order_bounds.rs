//! Error probability and second-order rate of a binary Wyner-Ziv code, and
//! the comparison against the LA and VYAG bounds.

use secondorder::bounds::{comparison_suite, expected_pe, rate_for_epsilon, wz_second_order_terms};
use secondorder::rdsolver::{wz_binary_optimize, CodingInstance};

fn main() -> secondorder::Result<()> {
    let opt = wz_binary_optimize(0.25, 0.1)?;
    let inst = CodingInstance::WynerZiv(opt.family.instance(opt.lambda));
    let terms = wz_second_order_terms(&inst)?;
    println!("R(D) = {:.6}, lambda = {:.4}, V = {:.6}", terms.rate, opt.lambda, terms.v_gcc());
    println!("Var[A] = {:.6}, sigma_J = {:.6}, sigma_D = {:.6}", terms.var_a, terms.sigma_j(), terms.sigma_d(0));

    for w in [0.0, 0.5, 1.0, 2.0] {
        let e = expected_pe(w, &terms)?;
        println!("W = {w:3.1}: E[P_e*(W - A)] = {:.6} (+- {:.1e})", e.value, e.radius);
    }
    for n in [100u64, 1000, 10000] {
        let r = rate_for_epsilon(0.01, &terms, n, terms.rate)?;
        println!("n = {n:>5}, epsilon = 0.01: rate {:.6} (W = {:.4})", r.rate, r.w);
    }

    let report = comparison_suite(&inst, &[0.2, 0.5, 1.0])?;
    for row in &report.rows {
        println!("W = {:.1}: second order {:.5} <= LA {:.5} <= VYAG {:.5}", row.w, row.second_order, row.la, row.vyag);
    }
    println!("ordering holds: {}", report.all_hold);
    Ok(())
}
