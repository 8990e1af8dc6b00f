//! Poisson-matching selection and the single-letter mismatch check.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::codebook::{ArgMin, Codebook};
use crate::error::{Error, Result};
use crate::numeric::wilson_interval;
use crate::probkit::RealFunc;

/// Salt separating source randomness from codebook randomness.
pub(crate) const SOURCE_SALT: u64 = 0x5DEE_CE66_DA5A_5A5A;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Selection {
    pub key: u64,
    pub ratio: f64,
}

/// `argmin_key T_key / weight(key)` over the listed keys; zero weights are
/// skipped and ties go to the smaller key.
pub fn pml_select(codebook: &Codebook, weights: impl IntoIterator<Item = (u64, f64)>) -> Result<Selection> {
    let mut best = ArgMin::empty();
    let mut total = 0.0;
    for (key, w) in weights {
        if !(w >= 0.0) || !w.is_finite() {
            return Err(Error::InvalidInput(format!("weight {w} for key {key}")));
        }
        if key >= codebook.index_count() {
            return Err(Error::InvalidInput(format!("key {key} outside the codebook")));
        }
        total += w;
        if w > 0.0 {
            best.offer(key, codebook.score(key), w);
        }
    }
    if total > 1.0 + 1e-9 {
        return Err(Error::InvalidInput(format!("weights sum to {total} > 1")));
    }
    if !best.found() {
        return Err(Error::Domain("all selection weights are zero".into()));
    }
    Ok(Selection { key: best.key, ratio: best.ratio })
}

pub(crate) fn draw_index(weights: &[f64], rng: &mut impl Rng) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.gen::<f64>() * total;
    let mut last = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            last = i;
            if u < w {
                return i;
            }
            u -= w;
        }
    }
    last
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PmlCheck {
    pub trials: u64,
    pub mismatches: u64,
    pub empirical_mismatch_rate: f64,
    pub wilson_interval: (f64, f64),
    /// `E[min(1, 2^{iota(U;X) - iota(U;Y)})]` by exact summation.
    pub mean_bound: f64,
    /// `empirical <= mean_bound + 3 * (Wilson half-width)`.
    pub passes: bool,
}

/// Single-letter Poisson-matching experiment on a joint pmf over
/// `X x U x Y` (factor order as given): encoder weights `P(u|x)`, decoder
/// weights `P(u|y)`, fresh codebook over `U` per trial.
pub fn pml_bound_check(joint: &RealFunc, trials: u64, seed: u64) -> Result<PmlCheck> {
    if joint.domain().len() != 3 {
        return Err(Error::Shape("pml_bound_check expects a joint over three factors".into()));
    }
    if (joint.sum() - 1.0).abs() > 1e-9 || joint.values().iter().any(|&v| v < 0.0) {
        return Err(Error::InvalidInput("joint is not a pmf".into()));
    }
    let shape = joint.shape();
    let (nx, nu, ny) = (shape[0], shape[1], shape[2]);
    let p = |x: usize, u: usize, y: usize| joint.values()[(x * nu + u) * ny + y];
    let px: Vec<f64> = (0..nx).map(|x| (0..nu).flat_map(|u| (0..ny).map(move |y| (u, y))).map(|(u, y)| p(x, u, y)).sum()).collect();
    let pxu: Vec<f64> = (0..nx * nu).map(|i| (0..ny).map(|y| p(i / nu, i % nu, y)).sum()).collect();
    let puy: Vec<f64> = (0..nu * ny).map(|i| (0..nx).map(|x| p(x, i / ny, i % ny)).sum()).collect();
    let py: Vec<f64> = (0..ny).map(|y| (0..nu).map(|u| puy[u * ny + y]).sum()).collect();

    let mut mean_bound = 0.0;
    for x in 0..nx {
        for u in 0..nu {
            for y in 0..ny {
                let m = p(x, u, y);
                if m > 0.0 {
                    let u_given_x = pxu[x * nu + u] / px[x];
                    let u_given_y = puy[u * ny + y] / py[y];
                    mean_bound += m * (u_given_x / u_given_y).min(1.0);
                }
            }
        }
    }

    let mut mismatches = 0u64;
    for t in 0..trials {
        let cb = Codebook::new(seed, t, nu as u64)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ SOURCE_SALT);
        rng.set_stream(t);
        let x = draw_index(&px, &mut rng);
        let u = pml_select(&cb, (0..nu).map(|u| (u as u64, pxu[x * nu + u] / px[x])))?.key as usize;
        let side: Vec<f64> = (0..ny).map(|y| p(x, u, y)).collect();
        let y = draw_index(&side, &mut rng);
        let u_hat = pml_select(&cb, (0..nu).map(|u| (u as u64, puy[u * ny + y] / py[y])))?.key as usize;
        if u_hat != u {
            mismatches += 1;
        }
    }
    let (lo, hi) = wilson_interval(mismatches, trials);
    let rate = if trials == 0 { 0.0 } else { mismatches as f64 / trials as f64 };
    Ok(PmlCheck {
        trials,
        mismatches,
        empirical_mismatch_rate: rate,
        wilson_interval: (lo, hi),
        mean_bound,
        passes: rate <= mean_bound + 1.5 * (hi - lo),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probkit::Alphabet;

    #[test]
    fn single_positive_weight_wins() {
        let cb = Codebook::new(3, 0, 8).unwrap();
        let s = pml_select(&cb, [(0, 0.0), (5, 0.4), (6, 0.0)]).unwrap();
        assert_eq!(s.key, 5);
        let s = pml_select(&cb, [(1, 1.0), (2, 0.0)]).unwrap();
        assert_eq!(s.key, 1);
    }

    #[test]
    fn all_zero_weights_fail() {
        let cb = Codebook::new(3, 0, 8).unwrap();
        assert!(pml_select(&cb, [(0, 0.0), (1, 0.0)]).is_err());
        assert!(pml_select(&cb, [(0, 0.7), (1, 0.7)]).is_err());
    }

    #[test]
    fn side_equal_to_aux_never_mismatches() {
        let (x, u, y) = (Alphabet::indexed("X", 2), Alphabet::indexed("U", 3), Alphabet::indexed("Y", 3));
        let kernel = [[0.5, 0.3, 0.2], [0.1, 0.1, 0.8]];
        let joint = RealFunc::from_fn(vec![x, u, y], |i| if i[1] == i[2] { 0.5 * kernel[i[0]][i[1]] } else { 0.0 }).unwrap();
        let r = pml_bound_check(&joint, 2000, 9).unwrap();
        assert_eq!(r.mismatches, 0);
        assert!(r.passes);
    }
}
