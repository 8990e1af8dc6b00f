use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use std::sync::OnceLock;

use crate::numeric::{bvn_cdf, gauss_legendre, normal_cdf, normal_pdf, normal_quantile};

use super::ScalarGaussian;

/// Total number of quasi-Monte Carlo points used in four dimensions (16 randomly shifted lattices of 4096 points).
pub const QMC_POINTS: usize = 1 << 16;
const QMC_SHIFTS: usize = 16;
const QMC_SEED: u64 = 0x5eed_0f_1a77;
const ZERO_VAR: f64 = 1e-300;

/// Orthant probability with its Monte Carlo standard error (zero for the
/// deterministic one- and two-dimensional rules).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrthantProb {
    pub value: f64,
    pub std_error: f64,
}

impl OrthantProb {
    fn exact(value: f64) -> Self {
        OrthantProb { value, std_error: 0.0 }
    }

    /// Three standard errors.
    pub fn radius(&self) -> f64 {
        3.0 * self.std_error
    }
}

/// `P(Z <= upper)` componentwise for `Z ~ g`, in up to four dimensions.
/// Zero-variance coordinates are resolved by comparing the threshold with
/// the mean before any integration.
pub fn gaussian_orthant(g: &ScalarGaussian, upper: &[f64]) -> Result<OrthantProb> {
    if upper.len() != g.dim() {
        return Err(Error::Shape("threshold vector length differs from the dimension".into()));
    }
    if g.dim() > 4 {
        return Err(Error::Unsupported(format!("orthant probabilities above four dimensions (got {})", g.dim())));
    }
    if upper.iter().any(|v| v.is_nan()) {
        return Err(Error::InvalidInput("NaN threshold".into()));
    }
    let mut keep = Vec::new();
    for i in 0..g.dim() {
        let v = g.cov[(i, i)];
        if v < -1e-12 {
            return Err(Error::InvalidInput("negative variance".into()));
        }
        if v <= ZERO_VAR {
            if upper[i] < g.mean[i] {
                return Ok(OrthantProb::exact(0.0));
            }
        } else {
            keep.push(i);
        }
    }
    let sd: Vec<f64> = keep.iter().map(|&i| g.cov[(i, i)].sqrt()).collect();
    let b: Vec<f64> = keep.iter().zip(&sd).map(|(&i, s)| (upper[i] - g.mean[i]) / s).collect();
    let corr = DMatrix::from_fn(keep.len(), keep.len(), |r, c| {
        (g.cov[(keep[r], keep[c])] / (sd[r] * sd[c])).clamp(-1.0, 1.0)
    });
    Ok(match keep.len() {
        0 => OrthantProb::exact(1.0),
        1 => OrthantProb::exact(normal_cdf(b[0])),
        2 => OrthantProb::exact(bvn_cdf(b[0], b[1], corr[(0, 1)])),
        3 => trivariate_orthant(&corr, &b),
        _ => qmc_orthant(&corr, &b),
    })
}

fn legendre_pair() -> &'static [(Vec<f64>, Vec<f64>); 2] {
    static RULES: OnceLock<[(Vec<f64>, Vec<f64>); 2]> = OnceLock::new();
    RULES.get_or_init(|| [gauss_legendre(10), gauss_legendre(20)])
}

/// Conditional standard deviations below this are treated as zero.
const SHARP_SD: f64 = 1e-7;

/// `P(Z <= b)` for a standardized trivariate normal: condition on the
/// coordinate that leaves the best-conditioned bivariate remainder and
/// integrate the bivariate CDF against the normal density with adaptive
/// Gauss-Legendre panels. The reported standard error is a third of the
/// accumulated panel error estimate.
fn trivariate_orthant(corr: &DMatrix<f64>, b: &[f64]) -> OrthantProb {
    let others = |c: usize| -> (usize, usize) {
        match c {
            0 => (1, 2),
            1 => (0, 2),
            _ => (0, 1),
        }
    };
    let c = (0..3)
        .max_by(|&x, &y| {
            let m = |c: usize| {
                let (i, j) = others(c);
                (1.0 - corr[(i, c)].powi(2)).min(1.0 - corr[(j, c)].powi(2))
            };
            m(x).total_cmp(&m(y))
        })
        .unwrap();
    let (i, j) = others(c);
    let (ri, rj) = (corr[(i, c)], corr[(j, c)]);
    let si = (1.0 - ri * ri).max(0.0).sqrt();
    let sj = (1.0 - rj * rj).max(0.0).sqrt();
    let (mut lo, mut hi) = (-10.0f64, b[c].min(10.0));
    // A sharp coordinate becomes an indicator that restricts the range.
    for &(r, s, bb) in &[(ri, si, b[i]), (rj, sj, b[j])] {
        if s <= SHARP_SD {
            if r > 0.0 {
                hi = hi.min(bb / r);
            } else {
                lo = lo.max(bb / r);
            }
        }
    }
    if hi <= lo {
        return OrthantProb::exact(0.0);
    }
    let rho = if si > SHARP_SD && sj > SHARP_SD {
        ((corr[(i, j)] - ri * rj) / (si * sj)).clamp(-1.0, 1.0)
    } else {
        0.0
    };
    let f = |z: f64| {
        let u = if si > SHARP_SD { Some((b[i] - ri * z) / si) } else { None };
        let v = if sj > SHARP_SD { Some((b[j] - rj * z) / sj) } else { None };
        let p = match (u, v) {
            (Some(u), Some(v)) => bvn_cdf(u, v, rho),
            (Some(u), None) => normal_cdf(u),
            (None, Some(v)) => normal_cdf(v),
            (None, None) => 1.0,
        };
        normal_pdf(z) * p
    };
    let mut cuts = vec![lo, hi];
    for &(r, bb) in &[(ri, b[i]), (rj, b[j])] {
        if r != 0.0 {
            let z = bb / r;
            if z > lo && z < hi {
                cuts.push(z);
            }
        }
    }
    let mut z = lo.ceil();
    while z < hi {
        if z > lo {
            cuts.push(z);
        }
        z += 1.0;
    }
    cuts.sort_by(|a, b| a.total_cmp(b));
    let rules = legendre_pair();
    let panel = |a: f64, b: f64, rule: &(Vec<f64>, Vec<f64>)| -> f64 {
        let (m, h) = (0.5 * (a + b), 0.5 * (b - a));
        rule.0.iter().zip(&rule.1).map(|(x, w)| w * f(m + h * x)).sum::<f64>() * h
    };
    let mut total = 0.0;
    let mut err = 0.0;
    let mut stack: Vec<(f64, f64, u32)> = cuts.windows(2).filter(|w| w[1] > w[0]).map(|w| (w[0], w[1], 0)).collect();
    while let Some((a, bnd, depth)) = stack.pop() {
        let coarse = panel(a, bnd, &rules[0]);
        let fine = panel(a, bnd, &rules[1]);
        let e = (fine - coarse).abs();
        if e <= 1e-14 || depth >= 40 {
            total += fine;
            err += e;
        } else {
            let m = 0.5 * (a + bnd);
            stack.push((a, m, depth + 1));
            stack.push((m, bnd, depth + 1));
        }
    }
    OrthantProb { value: total.clamp(0.0, 1.0), std_error: err / 3.0 }
}

/// Cholesky factor of a correlation matrix that tolerates rank deficiency.
fn semidefinite_cholesky(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let mut l = DMatrix::zeros(n, n);
    for j in 0..n {
        let d = a[(j, j)] - (0..j).map(|k| l[(j, k)] * l[(j, k)]).sum::<f64>();
        if d <= 1e-12 {
            continue;
        }
        let dj = d.sqrt();
        l[(j, j)] = dj;
        for i in j + 1..n {
            let s = a[(i, j)] - (0..j).map(|k| l[(i, k)] * l[(j, k)]).sum::<f64>();
            l[(i, j)] = s / dj;
        }
    }
    l
}

/// Genz's separation-of-variables integrand on a randomly shifted
/// Kronecker lattice with the baker's transform.
fn qmc_orthant(corr: &DMatrix<f64>, b: &[f64]) -> OrthantProb {
    let n = b.len();
    let l = semidefinite_cholesky(corr);
    let gens: Vec<f64> = [2.0f64, 3.0, 5.0].iter().map(|p| p.sqrt().fract()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(QMC_SEED);
    let per = QMC_POINTS / QMC_SHIFTS;
    let mut means = Vec::with_capacity(QMC_SHIFTS);
    let mut y = vec![0.0; n];
    for _ in 0..QMC_SHIFTS {
        let shift: Vec<f64> = (0..n - 1).map(|_| rng.gen::<f64>()).collect();
        let mut acc = 0.0;
        for i in 1..=per {
            let mut f = 1.0;
            for k in 0..n {
                let s: f64 = (0..k).map(|j| l[(k, j)] * y[j]).sum();
                let e = if l[(k, k)] > 0.0 {
                    normal_cdf((b[k] - s) / l[(k, k)])
                } else if b[k] >= s {
                    1.0
                } else {
                    0.0
                };
                f *= e;
                if f == 0.0 {
                    break;
                }
                if k + 1 < n {
                    let x = (i as f64 * gens[k] + shift[k]).fract();
                    let w = 1.0 - (2.0 * x - 1.0).abs();
                    let u = (w * e).clamp(1e-300, 1.0 - 1e-16);
                    y[k] = if l[(k, k)] > 0.0 { normal_quantile(u) } else { 0.0 };
                }
            }
            acc += f;
        }
        means.push(acc / per as f64);
    }
    let m = means.iter().sum::<f64>() / QMC_SHIFTS as f64;
    let var = means.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (QMC_SHIFTS as f64 - 1.0);
    OrthantProb { value: m, std_error: (var / QMC_SHIFTS as f64).sqrt() }
}
