use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::golden_section;
use crate::probkit::{entropy, Alphabet, CondKernel, ProbVec, RealFunc};

use super::instance::{DecoderMap, WynerZiv};

fn hb(p: f64) -> f64 {
    entropy(&[p, 1.0 - p])
}

fn conv(a: f64, b: f64) -> f64 {
    a * (1.0 - b) + b * (1.0 - a)
}

/// `H_b(p * b) - H_b(b)`: the rate of the erasure-free member of the family
/// at crossover `b`.
fn erasure_free_rate(p: f64, b: f64) -> f64 {
    hb(conv(p, b)) - hb(b)
}

/// Derivative of [`erasure_free_rate`] in `b`.
fn erasure_free_slope(p: f64, b: f64) -> f64 {
    let c = conv(p, b);
    (1.0 - 2.0 * p) * ((1.0 - c) / c).log2() - ((1.0 - b) / b).log2()
}

/// Binary-Hamming Wyner-Ziv test channel: `U = X xor Bern(beta)` with
/// probability `gamma`, erasure otherwise; `Y = BSC(p)` output; the decoder
/// outputs `U` unless erased, then `Y`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WzBinaryFamily {
    pub p: f64,
    pub beta: f64,
    pub gamma: f64,
}

/// Validating constructor for the binary family.
pub fn wz_binary_family(p: f64, beta: f64, gamma: f64) -> Result<WzBinaryFamily> {
    if !(p > 0.0 && p <= 0.5) {
        return Err(Error::Domain(format!("crossover {p} outside (0, 1/2]")));
    }
    if !(0.0..=0.5).contains(&beta) || !(0.0..=1.0).contains(&gamma) {
        return Err(Error::Domain(format!("beta = {beta}, gamma = {gamma} outside [0, 1/2] x [0, 1]")));
    }
    Ok(WzBinaryFamily { p, beta, gamma })
}

impl WzBinaryFamily {
    /// `I(U;X) - I(U;Y) = gamma (H_b(beta * p) - H_b(beta))`.
    pub fn objective(&self) -> f64 {
        self.gamma * erasure_free_rate(self.p, self.beta)
    }

    /// `E d = gamma beta + (1 - gamma) p`.
    pub fn expected_distortion(&self) -> f64 {
        self.gamma * self.beta + (1.0 - self.gamma) * self.p
    }

    pub fn aux_kernel(&self) -> CondKernel {
        let (b, g) = (self.beta, self.gamma);
        CondKernel::new(
            Alphabet::indexed("X", 2),
            Alphabet::indexed("U", 3),
            vec![g * (1.0 - b), g * b, 1.0 - g, g * b, g * (1.0 - b), 1.0 - g],
        )
        .expect("family rows are pmfs")
    }

    /// The family as a Wyner-Ziv instance at slope `lambda`.
    pub fn instance(&self, lambda: f64) -> WynerZiv {
        let x = Alphabet::indexed("X", 2);
        let y = Alphabet::indexed("Y", 2);
        let z = Alphabet::indexed("Z", 2);
        let decoder = DecoderMap::new(vec![Alphabet::indexed("U", 3), y.clone()], z.clone(), vec![0, 0, 1, 1, 0, 1])
            .expect("valid map");
        WynerZiv {
            source: ProbVec::uniform(x.clone()),
            side_channel: CondKernel::bsc(x.clone(), y, self.p).expect("valid crossover"),
            aux: self.aux_kernel(),
            decoder,
            distortion: RealFunc::from_fn(vec![x, z], |i| (i[0] != i[1]) as u8 as f64).expect("valid table"),
            level: self.expected_distortion(),
            lambda,
        }
    }
}

/// Optimized member of the binary family at a distortion level.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct WzBinaryOptimum {
    pub rate: f64,
    pub family: WzBinaryFamily,
    /// Slope from the envelope at the optimizer.
    pub lambda: f64,
    /// Central finite difference of the optimized rate at `D +- 1e-4`.
    pub lambda_fd: f64,
    /// The optimum time-shares with the no-coding point (`gamma < 1`).
    pub on_tangent: bool,
}

fn check_pd(p: f64, d: f64) -> Result<()> {
    if !(p > 0.0 && p <= 0.5) {
        return Err(Error::Domain(format!("crossover {p} outside (0, 1/2]")));
    }
    if !(d > 0.0 && d <= p) {
        return Err(Error::Domain(format!("D = {d} outside (0, p]")));
    }
    Ok(())
}

/// Best crossover for `min gamma g(beta)` subject to `E d = D`; the
/// distortion constraint is active at the optimum, which fixes
/// `gamma = (p - D) / (p - beta)` for `beta <= D`.
fn best_beta(p: f64, d: f64) -> f64 {
    let h = |b: f64| erasure_free_rate(p, b) / (p - b);
    let steps = (d / 1e-3).floor() as usize;
    let mut grid: Vec<f64> = (0..=steps).map(|i| i as f64 * 1e-3).collect();
    if grid.last().map_or(true, |&b| b < d) {
        grid.push(d);
    }
    let (mut bi, mut bv) = (0, f64::INFINITY);
    for (i, &b) in grid.iter().enumerate() {
        let v = h(b);
        if v < bv {
            bi = i;
            bv = v;
        }
    }
    let lo = grid[bi.saturating_sub(1)];
    let hi = grid[(bi + 1).min(grid.len() - 1)];
    let (b, v) = golden_section(h, lo, hi, 1e-13);
    if v <= bv {
        b
    } else {
        grid[bi]
    }
}

fn optimized_rate(p: f64, d: f64) -> f64 {
    if d >= p {
        return 0.0;
    }
    let b = best_beta(p, d);
    (p - d) * erasure_free_rate(p, b) / (p - b)
}

/// Minimizes the family's rate at distortion `D` (grid then golden-section
/// refinement over the crossover, erasure probability from the active
/// constraint).
pub fn wz_binary_optimize(p: f64, d: f64) -> Result<WzBinaryOptimum> {
    check_pd(p, d)?;
    if d >= p {
        let fam = wz_binary_family(p, 0.0, 0.0)?;
        let bc = best_beta(p, p - 1e-9);
        let lam = erasure_free_rate(p, bc) / (p - bc);
        return Ok(WzBinaryOptimum { rate: 0.0, family: fam, lambda: lam, lambda_fd: lam, on_tangent: true });
    }
    let b = best_beta(p, d);
    let gamma = ((p - d) / (p - b)).min(1.0);
    let on_tangent = b < d - 1e-9;
    let family = wz_binary_family(p, b, gamma)?;
    let lambda = if on_tangent { erasure_free_rate(p, b) / (p - b) } else { -erasure_free_slope(p, d) };
    let h = 1e-4;
    let lambda_fd = if d + h < p && d - h > 0.0 {
        (optimized_rate(p, d - h) - optimized_rate(p, d + h)) / (2.0 * h)
    } else {
        (optimized_rate(p, d - h) - optimized_rate(p, d)) / h
    };
    let lambda = if (lambda - lambda_fd).abs() > 1e-3 { lambda_fd } else { lambda };
    Ok(WzBinaryOptimum { rate: family.objective(), family, lambda, lambda_fd, on_tangent })
}

/// Binary-Hamming Wyner-Ziv rate: lower convex envelope of
/// `H_b(p * D) - H_b(D)` on `[0, p)` together with the point `(p, 0)`,
/// from a 1e5-point grid.
pub fn wz_rate_formula(p: f64, d: f64) -> Result<f64> {
    check_pd(p, d.min(p))?;
    if d >= p {
        return Ok(0.0);
    }
    let m = 100_000;
    let mut pts: Vec<(f64, f64)> = (0..m).map(|i| {
        let x = p * i as f64 / m as f64;
        (x, erasure_free_rate(p, x))
    }).collect();
    pts.push((p, 0.0));
    let mut hull: Vec<(f64, f64)> = Vec::new();
    for pt in pts {
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            let cross = (b.0 - a.0) * (pt.1 - a.1) - (b.1 - a.1) * (pt.0 - a.0);
            if cross <= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(pt);
    }
    let k = hull.partition_point(|q| q.0 <= d).max(1);
    let (a, b) = (hull[k - 1], hull[k.min(hull.len() - 1)]);
    if b.0 == a.0 {
        return Ok(a.1);
    }
    Ok(a.1 + (b.1 - a.1) * (d - a.0) / (b.0 - a.0))
}

/// Rate-optimal binary time-sharing splits of an optimum: pairs of members
/// on the tangent segment, with erasure probabilities on a grid of the
/// given step and weights chosen to keep the distortion at the optimum's.
/// Off the tangent segment no nontrivial split is rate-optimal.
pub fn wz_time_sharing_candidates(opt: &WzBinaryOptimum, step: f64) -> Vec<[(f64, WzBinaryFamily); 2]> {
    let mut out = Vec::new();
    if !opt.on_tangent {
        return out;
    }
    let f = opt.family;
    let n = (1.0 / step).round() as usize;
    let grid: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
    for &g1 in grid.iter().filter(|&&g| g > f.gamma) {
        for &g2 in grid.iter().filter(|&&g| g < f.gamma) {
            let w = (f.gamma - g2) / (g1 - g2);
            let a = WzBinaryFamily { gamma: g1, ..f };
            let b = WzBinaryFamily { gamma: g2, ..f };
            out.push([(w, a), (1.0 - w, b)]);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn family_closed_forms() {
        let f = wz_binary_family(0.25, 0.1, 0.7).unwrap();
        assert!((f.expected_distortion() - (0.07 + 0.3 * 0.25)).abs() < 1e-15);
        assert!(wz_binary_family(0.25, 0.6, 0.5).is_err());
    }

    #[test]
    fn optimizer_tracks_envelope() {
        for &p in &[0.1, 0.2, 0.4] {
            for i in 1..20 {
                let d = p * i as f64 / 20.0;
                let o = wz_binary_optimize(p, d).unwrap();
                let r = wz_rate_formula(p, d).unwrap();
                assert!((o.rate - r).abs() < 2e-4, "p={p} D={d}: {} vs {r}", o.rate);
                assert!((o.family.expected_distortion() - d).abs() < 1e-12);
                assert!((o.lambda - o.lambda_fd).abs() < 1e-3);
            }
        }
    }

    #[test]
    fn endpoint_has_zero_rate() {
        let o = wz_binary_optimize(0.2, 0.2).unwrap();
        assert_eq!(o.rate, 0.0);
        assert!(o.lambda.is_finite());
        assert!(wz_binary_optimize(0.2, 0.0).is_err());
    }
}
