//! Dispersion curves of binary-Hamming Wyner-Ziv coding with a BSC(p) side
//! channel: the conditional-type bound against three earlier bounds.
//!
//! `cargo run --release --example wyner_ziv_dispersions -- 0.4`

use secondorder::bounds::{binary_wz_dispersions, open_grid};

fn main() -> secondorder::Result<()> {
    let p: f64 = std::env::args().nth(1).map(|s| s.parse().expect("crossover")).unwrap_or(0.4);
    println!("p = {p}");
    println!("{:>8} {:>9} {:>9} {:>9} {:>9} {:>9}", "D", "rate", "V_GCC", "V_LA", "V_VYAG", "V_WKT");
    for d in open_grid(p, 12) {
        let r = binary_wz_dispersions(p, d, Some(0.01))?;
        let mark = if r.flagged { " flagged" } else { "" };
        println!(
            "{d:>8.4} {:>9.5} {:>9.5} {:>9.5} {:>9.5} {:>9.5}{mark}",
            r.rate, r.v_gcc, r.v_la, r.v_vyag, r.v_wkt
        );
    }
    Ok(())
}
