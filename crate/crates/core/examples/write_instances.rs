//! Writes the sample instance files used by the command-line examples.
//!
//! `cargo run --example write_instances -- <dir>` (default `instances`).

use std::fs;
use std::path::PathBuf;

use secondorder::probkit::{Alphabet, CondKernel, ProbVec, RealFunc};
use secondorder::rdsolver::{
    wz_binary_optimize, ChannelCost, CodingInstance, DecoderMap, GelfandPinsker, LossySc,
};

fn hamming(a: &str, b: &str, size: usize) -> RealFunc {
    RealFunc::from_fn(vec![Alphabet::indexed(a, size), Alphabet::indexed(b, size)], |i| (i[0] != i[1]) as u8 as f64)
        .unwrap()
}

fn main() -> secondorder::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "instances".into()));
    fs::create_dir_all(&dir)?;
    let write = |name: &str, text: String| fs::write(dir.join(name), text + "\n");

    let bit = |name: &str| Alphabet::indexed(name, 2);
    let lossy = CodingInstance::LossySC(LossySc {
        source: ProbVec::uniform(bit("X")),
        distortion: hamming("X", "Z", 2),
        level: 0.11,
        test_channel: None,
        lambda: None,
    });
    write("lossy_binary.json", lossy.to_json()?)?;

    let opt = wz_binary_optimize(0.25, 0.1)?;
    write("wz_binary.json", CodingInstance::WynerZiv(opt.family.instance(opt.lambda)).to_json()?)?;

    let bsc = CodingInstance::ChannelCost(ChannelCost {
        channel: CondKernel::bsc(bit("X"), bit("Y"), 0.11)?,
        cost: RealFunc::constant(vec![bit("X")], 0.0)?,
        budget: 0.0,
        input: None,
    });
    write("bsc.json", bsc.to_json()?)?;

    // Binary dirty paper: U = S + B(q), X = U + S, Y = X + S + B(0.1) = U + B(0.1),
    // cost = weight of X.
    let q = 0.3;
    let (s, u, x, y) = (bit("S"), bit("U"), bit("X"), bit("Y"));
    let gp = CodingInstance::GelfandPinsker(GelfandPinsker {
        state: ProbVec::uniform(s.clone()),
        aux: CondKernel::bsc(s.clone(), u.clone(), q)?,
        encoder: DecoderMap::new(vec![s.clone(), u.clone()], x.clone(), vec![0, 1, 1, 0])?,
        channel: RealFunc::from_fn(vec![s.clone(), x.clone(), y], |i| if (i[0] ^ i[1]) == i[2] { 0.9 } else { 0.1 })?,
        cost: RealFunc::from_fn(vec![s, x], |i| i[1] as f64)?,
        budget: q,
        lambda: 1.0,
    });
    write("gp_binary.json", gp.to_json()?)?;

    write("source_half.json", serde_json::to_string_pretty(&ProbVec::uniform(bit("X")))?)?;
    println!("wrote instances to {}", dir.display());
    Ok(())
}
