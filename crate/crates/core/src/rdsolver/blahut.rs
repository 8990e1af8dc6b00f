use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::probkit::{CondKernel, ProbVec, RealFunc};

/// Iteration cap for one Blahut-Arimoto run.
pub const MAX_ITERATIONS: usize = 100_000;
/// Certified duality gap required of a returned solution.
pub const GAP_TOL: f64 = 1e-8;

/// Optimal test channel and slope at a distortion level.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RDSolution {
    pub rate: f64,
    pub test_channel: CondKernel,
    /// `-dR/dD` in bits per unit distortion.
    pub lambda: f64,
    /// Finite-difference slope used to cross-check `lambda`.
    pub lambda_fd: Option<f64>,
    #[serde(rename = "D")]
    pub distortion: f64,
    pub duality_gap: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// One Blahut-Arimoto fixed point at a given slope.
#[derive(Clone, Debug)]
pub(crate) struct SlopePoint {
    pub channel: Vec<f64>,
    pub q: Vec<f64>,
    pub distortion: f64,
    pub gap: f64,
    pub iterations: usize,
}

pub(crate) fn check_distortion(px: &ProbVec, d: &RealFunc) -> Result<usize> {
    if d.domain().len() != 2 || &d.domain()[0] != px.alphabet() {
        return Err(Error::Shape("distortion must be a function on source x reproduction".into()));
    }
    if d.values().iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::InvalidInput("distortion must be finite and nonnegative".into()));
    }
    Ok(d.domain()[1].size())
}

/// Blahut-Arimoto iteration at slope `lambda`, warm-started from `q0`.
pub(crate) fn rd_at_slope(px: &[f64], d: &[f64], ny: usize, lambda: f64, q0: Option<&[f64]>) -> SlopePoint {
    let nx = px.len();
    // Warm starts keep a little mass everywhere so a reproduction symbol
    // that re-enters the support is not stuck near zero.
    let uniform = 1.0 / ny as f64;
    let mut q: Vec<f64> = match q0 {
        Some(w) => w.iter().map(|v| 0.999 * v + 0.001 * uniform).collect(),
        None => vec![uniform; ny],
    };
    let rowmin: Vec<f64> = (0..nx).map(|x| d[x * ny..(x + 1) * ny].iter().cloned().fold(f64::INFINITY, f64::min)).collect();
    // 2^{-lambda (d - min_y d)} does not underflow on the row minimum.
    let a: Vec<f64> = (0..nx * ny).map(|i| (-lambda * (d[i] - rowmin[i / ny])).exp2()).collect();
    let mut chan = vec![0.0; nx * ny];
    let mut gap = f64::INFINITY;
    let mut it = 0;
    while it < MAX_ITERATIONS {
        it += 1;
        let mut cy = vec![0.0; ny];
        for x in 0..nx {
            let row = &a[x * ny..(x + 1) * ny];
            let c: f64 = row.iter().zip(&q).map(|(a, q)| a * q).sum();
            for y in 0..ny {
                chan[x * ny + y] = q[y] * row[y] / c;
                if px[x] > 0.0 {
                    cy[y] += px[x] * row[y] / c;
                }
            }
        }
        let qn: Vec<f64> = q.iter().zip(&cy).map(|(q, c)| q * c).collect();
        let max_log = cy.iter().filter(|&&c| c > 0.0).map(|c| c.log2()).fold(f64::NEG_INFINITY, f64::max);
        let avg_log: f64 = qn.iter().zip(&cy).filter(|(q, _)| **q > 0.0).map(|(q, c)| q * c.log2()).sum();
        gap = (max_log - avg_log).max(0.0);
        let step = q.iter().zip(&qn).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let s: f64 = qn.iter().sum();
        q = qn.into_iter().map(|v| v / s).collect();
        // The gap certifies optimality; a stalled step alone does not.
        if gap <= 1e-15 || (step <= 1e-16 && gap <= 1e-12) {
            break;
        }
    }
    // Channel consistent with the final marginal estimate.
    for x in 0..nx {
        let row = &a[x * ny..(x + 1) * ny];
        let c: f64 = row.iter().zip(&q).map(|(a, q)| a * q).sum();
        for y in 0..ny {
            chan[x * ny + y] = q[y] * row[y] / c;
        }
    }
    let distortion = (0..nx * ny).map(|i| px[i / ny] * chan[i] * d[i]).sum();
    SlopePoint { channel: chan, q, distortion, gap, iterations: it }
}

pub(crate) fn mutual_information(px: &[f64], chan: &[f64], ny: usize) -> f64 {
    let mut qy = vec![0.0; ny];
    for (i, &c) in chan.iter().enumerate() {
        qy[i % ny] += px[i / ny] * c;
    }
    let mut acc = 0.0;
    for (i, &c) in chan.iter().enumerate() {
        let p = px[i / ny];
        if p > 0.0 && c > 0.0 {
            acc += p * c * (c / qy[i % ny]).log2();
        }
    }
    acc.max(0.0)
}

/// `(D_min, D_max, argmin reproduction at D_max)`.
pub(crate) fn distortion_range(px: &[f64], d: &[f64], ny: usize) -> (f64, f64, usize) {
    let nx = px.len();
    let dmin = (0..nx)
        .map(|x| px[x] * d[x * ny..(x + 1) * ny].iter().cloned().fold(f64::INFINITY, f64::min))
        .sum();
    let (ystar, dmax) = (0..ny)
        .map(|y| (y, (0..nx).map(|x| px[x] * d[x * ny + y]).sum::<f64>()))
        .fold((0, f64::INFINITY), |acc, v| if v.1 < acc.1 { v } else { acc });
    (dmin, dmax, ystar)
}

/// Solves `R(D)` at the requested distortion: Blahut-Arimoto at a slope
/// found by safeguarded root finding on `D(lambda) = target`.
pub(crate) fn solve_rd(px: &ProbVec, d: &RealFunc, target: f64) -> Result<(SlopePoint, f64)> {
    let ny = check_distortion(px, d)?;
    let p = px.mass();
    let dv = d.values();
    let (dmin, dmax, _) = distortion_range(p, dv, ny);
    if !(target > dmin + 1e-12 && target < dmax) {
        return Err(Error::Domain(format!("D = {target} outside ({dmin}, {dmax})")));
    }
    let mut lo = 0.0;
    let mut lo_pt = rd_at_slope(p, dv, ny, 0.0, None);
    let mut hi = 1.0;
    let mut hi_pt = rd_at_slope(p, dv, ny, hi, None);
    while hi_pt.distortion > target {
        lo = hi;
        lo_pt = hi_pt;
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::Convergence { iterations: 0, detail: "slope bracket diverged".into() });
        }
        hi_pt = rd_at_slope(p, dv, ny, hi, Some(&lo_pt.q));
    }
    // Illinois false position on D(lambda) - target (decreasing in lambda).
    let (mut flo, mut fhi) = (lo_pt.distortion - target, hi_pt.distortion - target);
    let mut side = 0i32;
    for _ in 0..400 {
        if (hi - lo) <= 1e-15 * hi.max(1.0) {
            break;
        }
        let mut mid = hi - fhi * (hi - lo) / (fhi - flo);
        if !(mid > lo && mid < hi) {
            mid = 0.5 * (lo + hi);
        }
        let warm = if flo.abs() < fhi.abs() { &lo_pt.q } else { &hi_pt.q };
        let pt = rd_at_slope(p, dv, ny, mid, Some(warm));
        let f = pt.distortion - target;
        if f.abs() <= 1e-14 {
            return Ok((pt, mid));
        }
        if f > 0.0 {
            lo = mid;
            flo = f;
            lo_pt = pt;
            if side == 1 {
                fhi *= 0.5;
            }
            side = 1;
        } else {
            hi = mid;
            fhi = f;
            hi_pt = pt;
            if side == -1 {
                flo *= 0.5;
            }
            side = -1;
        }
    }
    // Flat stretch of D(lambda) (a linear piece of R(D)): mix the two end
    // channels, which share the slope and are both optimal.
    let (dl, dh) = (lo_pt.distortion, hi_pt.distortion);
    let w = if (dl - dh).abs() > 0.0 { ((target - dh) / (dl - dh)).clamp(0.0, 1.0) } else { 0.5 };
    let channel: Vec<f64> = lo_pt.channel.iter().zip(&hi_pt.channel).map(|(a, b)| w * a + (1.0 - w) * b).collect();
    let q: Vec<f64> = lo_pt.q.iter().zip(&hi_pt.q).map(|(a, b)| w * a + (1.0 - w) * b).collect();
    let distortion = (0..channel.len()).map(|i| p[i / ny] * channel[i] * dv[i]).sum();
    let gap = lo_pt.gap.max(hi_pt.gap);
    let iterations = lo_pt.iterations + hi_pt.iterations;
    Ok((SlopePoint { channel, q, distortion, gap, iterations }, 0.5 * (lo + hi)))
}

/// Rate-distortion function at `target` with its optimal test channel.
///
/// The slope is the Blahut-Arimoto multiplier; a central finite difference
/// of `R` cross-checks it and replaces it when they disagree by more than
/// 1e-3. At `D = D_max` the zero-rate solution is returned.
pub fn blahut_arimoto_rd(px: &ProbVec, d: &RealFunc, target: f64) -> Result<RDSolution> {
    let ny = check_distortion(px, d)?;
    let (dmin, dmax, ystar) = distortion_range(px.mass(), d.values(), ny);
    if (target - dmax).abs() <= 1e-12 {
        let map = vec![ystar; px.len()];
        let test_channel = CondKernel::deterministic(px.alphabet().clone(), d.domain()[1].clone(), &map)?;
        return Ok(RDSolution {
            rate: 0.0,
            test_channel,
            lambda: 0.0,
            lambda_fd: None,
            distortion: dmax,
            duality_gap: 0.0,
            converged: true,
            iterations: 0,
        });
    }
    let (pt, lambda) = solve_rd(px, d, target)?;
    if pt.gap > GAP_TOL {
        return Err(Error::Convergence { iterations: pt.iterations, detail: format!("duality gap {:e}", pt.gap) });
    }
    let rate = mutual_information(px.mass(), &pt.channel, ny);
    let h = 1e-4 * (dmax - dmin);
    let lambda_fd = if target - h > dmin + 1e-12 && target + h < dmax {
        let r = |t: f64| solve_rd(px, d, t).map(|(s, _)| mutual_information(px.mass(), &s.channel, ny));
        match (r(target - h), r(target + h)) {
            (Ok(a), Ok(b)) => Some((a - b) / (2.0 * h)),
            _ => None,
        }
    } else {
        None
    };
    let lambda = match lambda_fd {
        Some(fd) if (fd - lambda).abs() > 1e-3 => fd,
        _ => lambda,
    };
    let test_channel = CondKernel::new(px.alphabet().clone(), d.domain()[1].clone(), pt.channel)?;
    Ok(RDSolution {
        rate,
        test_channel,
        lambda,
        lambda_fd,
        distortion: pt.distortion,
        duality_gap: pt.gap,
        converged: true,
        iterations: pt.iterations,
    })
}

/// d-tilted information and the residual of the identity
/// `j(x) = E[iota(X;Y*) + lambda (d(X,Y*) - D) | X = x]`.
#[derive(Clone, Debug)]
pub struct TiltedInfo {
    pub j: RealFunc,
    pub identity_residual: f64,
    /// The residual exceeds 1e-6 (but not 1e-4).
    pub flagged: bool,
}

/// `j(x) = -log E[2^{-lambda (d(x, Y*) - D)}]` with `Y*` the output of the
/// test channel.
pub fn tilted_information(sol: &RDSolution, px: &ProbVec, d: &RealFunc) -> Result<TiltedInfo> {
    let ny = check_distortion(px, d)?;
    let chan = sol.test_channel.rows();
    let dv = d.values();
    let (lam, dd) = (sol.lambda, sol.distortion);
    let mut q = vec![0.0; ny];
    for (i, &c) in chan.iter().enumerate() {
        q[i % ny] += px.mass()[i / ny] * c;
    }
    let mut j = vec![0.0; px.len()];
    let mut residual: f64 = 0.0;
    for x in 0..px.len() {
        let s: f64 = (0..ny).map(|y| q[y] * (-lam * (dv[x * ny + y] - dd)).exp2()).sum();
        j[x] = -s.log2();
        if px.mass()[x] > 0.0 {
            let mut b = 0.0;
            for y in 0..ny {
                let c = chan[x * ny + y];
                if c > 0.0 {
                    b += c * ((c / q[y]).log2() + lam * (dv[x * ny + y] - dd));
                }
            }
            residual = residual.max((b - j[x]).abs());
        }
    }
    if residual > 1e-4 {
        return Err(Error::NotFirstOrderOptimal { residual });
    }
    Ok(TiltedInfo {
        j: RealFunc::new(vec![px.alphabet().clone()], j)?,
        identity_residual: residual,
        flagged: residual > 1e-6,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probkit::{entropy, expectation, Alphabet};

    fn hamming(n: usize) -> RealFunc {
        RealFunc::from_fn(vec![Alphabet::indexed("X", n), Alphabet::indexed("Z", n)], |i| (i[0] != i[1]) as u8 as f64)
            .unwrap()
    }

    fn hb(p: f64) -> f64 {
        entropy(&[p, 1.0 - p])
    }

    #[test]
    fn binary_hamming_closed_form() {
        for &(q, dd) in &[(0.5, 0.11), (0.3, 0.1), (0.2, 0.05)] {
            let px = ProbVec::new(Alphabet::indexed("X", 2), vec![q, 1.0 - q]).unwrap();
            let s = blahut_arimoto_rd(&px, &hamming(2), dd).unwrap();
            assert!((s.rate - (hb(q) - hb(dd))).abs() < 1e-8, "{} vs {}", s.rate, hb(q) - hb(dd));
            // -dR/dD = log((1 - D)/D)
            assert!((s.lambda - ((1.0 - dd) / dd).log2()).abs() < 1e-6);
            assert!((s.distortion - dd).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_rate_endpoint_and_domain() {
        let px = ProbVec::new(Alphabet::indexed("X", 2), vec![0.3, 0.7]).unwrap();
        let s = blahut_arimoto_rd(&px, &hamming(2), 0.3).unwrap();
        assert_eq!(s.rate, 0.0);
        assert!(matches!(blahut_arimoto_rd(&px, &hamming(2), 0.35), Err(Error::Domain(_))));
        assert!(matches!(blahut_arimoto_rd(&px, &hamming(2), 0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn tilted_information_mean_is_rate() {
        let px = ProbVec::new(Alphabet::indexed("X", 3), vec![0.2, 0.5, 0.3]).unwrap();
        let d = hamming(3);
        let s = blahut_arimoto_rd(&px, &d, 0.2).unwrap();
        let t = tilted_information(&s, &px, &d).unwrap();
        assert!(t.identity_residual < 1e-9, "{}", t.identity_residual);
        assert!((expectation(&px.as_func(), &t.j).unwrap() - s.rate).abs() < 1e-8);
    }
}
