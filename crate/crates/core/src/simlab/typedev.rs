//! Convergence diagnostics for empirical types: Levy-Prokhorov estimates of
//! `sqrt(n)(P_hat - P)` against its Gaussian-multinomial limit, and the
//! residual of the linearized self-information of exchangeable sources.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::gcc::type_deviation;
use crate::error::{Error, Result};
use crate::gm::{nm_covariance, GaussianSampler};
use crate::numeric::{ln_factorial, normal_cdf};
use crate::probkit::ProbVec;

const RANDOM_DIRECTIONS: usize = 6;
const MAX_THRESHOLDS: usize = 2048;
const BOOTSTRAP_ROUNDS: usize = 20;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TypeDeviationRow {
    pub n: usize,
    /// Draws of `G = sqrt(n)(P_hat - P)`.
    pub samples: Vec<Vec<f64>>,
    /// Half-space Levy-Prokhorov estimate between the empirical law of the
    /// samples and `NM(P)`.
    pub lp_estimate: f64,
    /// The same estimate for an equally sized sample from `NM(P)` itself:
    /// the Monte-Carlo floor of the estimator.
    pub noise_floor: f64,
    /// Standard deviation of the estimate over bootstrap resamples.
    pub bootstrap_radius: f64,
    /// `lp_estimate * sqrt(n)`.
    pub scaled: f64,
    /// `(lp_estimate - noise_floor) * sqrt(n)`: the part of the scaled
    /// estimate not explained by Monte-Carlo noise.
    pub excess_scaled: f64,
}

/// Symbol counts of `n` i.i.d. draws, sampled as a chain of binomials.
fn multinomial_counts(p: &[f64], n: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut left = n as u64;
    let mut mass = 1.0;
    let mut out = vec![0usize; p.len()];
    for (i, &pi) in p.iter().enumerate() {
        if left == 0 {
            break;
        }
        let c = if i + 1 == p.len() || mass <= pi {
            left
        } else {
            let q = (pi / mass).clamp(0.0, 1.0);
            Binomial::new(left, q).expect("probability clamped to [0, 1]").sample(rng)
        };
        out[i] = c as usize;
        left -= c;
        mass -= pi;
    }
    out
}

fn unit(v: Vec<f64>) -> Vec<f64> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / norm).collect()
}

fn directions(dim: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    for i in 0..dim {
        let mut e = vec![0.0; dim];
        e[i] = 1.0;
        out.push(e.clone());
        e[i] = -1.0;
        out.push(e);
    }
    for _ in 0..RANDOM_DIRECTIONS {
        let a = unit((0..dim).map(|_| StandardNormal.sample(rng)).collect());
        out.push(a.iter().map(|x| -x).collect());
        out.push(a);
    }
    out
}

/// Smallest `eps` in `[0, 1]` with `mass <= Phi((c + eps) / sd) + eps`.
fn half_space_eps(mass: f64, c: f64, sd: f64) -> f64 {
    let gauss = |t: f64| {
        if sd > 0.0 {
            normal_cdf(t / sd)
        } else if t >= 0.0 {
            1.0
        } else {
            0.0
        }
    };
    if mass <= gauss(c) {
        return 0.0;
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if mass <= gauss(c + mid) + mid {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Largest violation over half-spaces `{<a, g> <= c}`: a lower estimate of
/// the Levy-Prokhorov distance, up to sampling noise.
fn lp_estimate(samples: &[Vec<f64>], cov: &DMatrix<f64>, dirs: &[Vec<f64>]) -> f64 {
    let m = samples.len();
    if m == 0 {
        return 0.0;
    }
    let mut worst = 0.0f64;
    for a in dirs {
        let av = DVector::from_column_slice(a);
        let sd = (av.transpose() * cov * &av)[(0, 0)].max(0.0).sqrt();
        let mut proj: Vec<f64> = samples.iter().map(|g| g.iter().zip(a).map(|(x, y)| x * y).sum()).collect();
        proj.sort_by(f64::total_cmp);
        // Each distinct value is the top of a step of the empirical CDF.
        let mut steps = Vec::new();
        for k in 0..m {
            if k + 1 == m || proj[k + 1] > proj[k] + 1e-12 {
                steps.push(k);
            }
        }
        let stride = steps.len().div_ceil(MAX_THRESHOLDS).max(1);
        for &k in steps.iter().step_by(stride) {
            let mass = (k + 1) as f64 / m as f64;
            worst = worst.max(half_space_eps(mass, proj[k], sd));
        }
    }
    worst
}

/// Draws `trials` types per blocklength, each from `n` i.i.d. symbols of
/// `source`, and estimates how far `sqrt(n)(P_hat - P)` is from `NM(P)`.
pub fn type_deviation_stats(source: &ProbVec, n_list: &[usize], trials: usize, seed: u64) -> Result<Vec<TypeDeviationRow>> {
    let p = source.mass();
    let nm = nm_covariance(source);
    let sampler = GaussianSampler::new(&nm.cov, &nm.mean)?;
    let mut dir_rng = ChaCha8Rng::seed_from_u64(seed);
    let dirs = directions(p.len(), &mut dir_rng);
    let mut rows = Vec::with_capacity(n_list.len());
    for (idx, &n) in n_list.iter().enumerate() {
        if n == 0 {
            return Err(Error::InvalidInput("blocklengths must be positive".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(1 + 3 * idx as u64);
        let samples: Vec<Vec<f64>> = (0..trials).map(|_| type_deviation(p, &multinomial_counts(p, n, &mut rng))).collect();
        let lp = lp_estimate(&samples, &nm.cov, &dirs);

        let mut gauss_rng = ChaCha8Rng::seed_from_u64(seed);
        gauss_rng.set_stream(2 + 3 * idx as u64);
        let reference: Vec<Vec<f64>> = (0..trials).map(|_| sampler.draw(&mut gauss_rng)).collect();
        let floor = lp_estimate(&reference, &nm.cov, &dirs);

        let mut boot_rng = ChaCha8Rng::seed_from_u64(seed);
        boot_rng.set_stream(3 + 3 * idx as u64);
        let boots: Vec<f64> = (0..BOOTSTRAP_ROUNDS)
            .map(|_| {
                let resample: Vec<Vec<f64>> = (0..trials).map(|_| samples[boot_rng.gen_range(0..trials)].clone()).collect();
                lp_estimate(&resample, &nm.cov, &dirs)
            })
            .collect();
        let mean = boots.iter().sum::<f64>() / boots.len() as f64;
        let radius = (boots.iter().map(|b| (b - mean).powi(2)).sum::<f64>() / (boots.len() - 1) as f64).sqrt();
        rows.push(TypeDeviationRow {
            n,
            samples,
            lp_estimate: lp,
            noise_floor: floor,
            bootstrap_radius: radius,
            scaled: lp * (n as f64).sqrt(),
            excess_scaled: (lp - floor) * (n as f64).sqrt(),
        });
    }
    Ok(rows)
}

/// Source law for the self-information residual.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub enum ResidualSource {
    /// A type drawn uniformly from those within Euclidean distance
    /// `radius / sqrt(n)` of the target, then a sequence drawn uniformly
    /// from its type class. Exchangeable but not a product law.
    TypeBall { radius: f64 },
    /// The i.i.d. product of the target.
    Product,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SelfInfoResidual {
    pub n: usize,
    /// `iota(x^n) - (n H(X) + sqrt(n) <G, iota_X>)` in bits, per draw.
    pub residuals: Vec<f64>,
    /// `|residual| / log2 n` (denominator floored at one).
    pub ratios: Vec<f64>,
    pub ratio_q95: f64,
}

fn log2_multinomial(counts: &[usize]) -> f64 {
    let n: usize = counts.iter().sum();
    (ln_factorial(n as u64) - counts.iter().map(|&c| ln_factorial(c as u64)).sum::<f64>()) / std::f64::consts::LN_2
}

fn nearest_type(p: &[f64], n: usize) -> Vec<usize> {
    let targets: Vec<f64> = p.iter().map(|&x| x * n as f64).collect();
    let mut c: Vec<usize> = targets.iter().map(|t| t.floor() as usize).collect();
    let mut order: Vec<usize> = (0..p.len()).filter(|&i| p[i] > 0.0).collect();
    order.sort_by(|&a, &b| (targets[b] - c[b] as f64).total_cmp(&(targets[a] - c[a] as f64)).then(a.cmp(&b)));
    let short = n - c.iter().sum::<usize>();
    for &i in order.iter().cycle().take(short) {
        c[i] += 1;
    }
    c
}

/// Types `k` with `k(x) = 0` off the support and `|k/n - p|_2 <= r/sqrt(n)`.
fn types_in_ball(p: &[f64], n: usize, radius: f64) -> Vec<Vec<usize>> {
    let nf = n as f64;
    let reach = radius * nf.sqrt();
    let mut out = Vec::new();
    let mut cur = vec![0usize; p.len()];
    fn rec(p: &[f64], n: usize, reach: f64, i: usize, left: usize, dist2: f64, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        let nf = n as f64;
        if dist2 > reach * reach + 1e-9 {
            return;
        }
        if i + 1 == p.len() {
            if p[i] == 0.0 && left > 0 {
                return;
            }
            let d = left as f64 - nf * p[i];
            if dist2 + d * d <= reach * reach + 1e-9 {
                cur[i] = left;
                out.push(cur.clone());
            }
            return;
        }
        if p[i] == 0.0 {
            cur[i] = 0;
            rec(p, n, reach, i + 1, left, dist2, cur, out);
            return;
        }
        let centre = nf * p[i];
        let lo = (centre - reach).ceil().max(0.0) as usize;
        let hi = ((centre + reach).floor().max(0.0) as usize).min(left);
        if lo > hi {
            return;
        }
        for k in lo..=hi {
            let d = k as f64 - centre;
            cur[i] = k;
            rec(p, n, reach, i + 1, left - k, dist2 + d * d, cur, out);
        }
    }
    rec(p, n, reach, 0, n, 0.0, &mut cur, &mut out);
    if out.is_empty() {
        out.push(nearest_type(p, n));
    }
    out
}

/// Residual of `n H(X) + sqrt(n) <G, iota_X>` as an approximation of the
/// exact self-information of a length-`n` block.
pub fn self_info_residual(p_target: &ProbVec, n: usize, trials: usize, seed: u64, source: ResidualSource) -> Result<SelfInfoResidual> {
    if n == 0 {
        return Err(Error::InvalidInput("blocklength must be positive".into()));
    }
    let p = p_target.mass();
    let surprisal: Vec<f64> = p.iter().map(|&x| if x > 0.0 { -x.log2() } else { 0.0 }).collect();
    let linear = |counts: &[usize]| counts.iter().zip(&surprisal).map(|(&c, &s)| c as f64 * s).sum::<f64>();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let residuals: Vec<f64> = match source {
        ResidualSource::TypeBall { radius } => {
            if !(radius > 0.0) {
                return Err(Error::Domain(format!("ball radius {radius} must be positive")));
            }
            let ball = types_in_ball(p, n, radius);
            let log_count = (ball.len() as f64).log2();
            (0..trials)
                .map(|_| {
                    let k = &ball[rng.gen_range(0..ball.len())];
                    log_count + log2_multinomial(k) - linear(k)
                })
                .collect()
        }
        ResidualSource::Product => (0..trials)
            .map(|_| {
                let k = multinomial_counts(p, n, &mut rng);
                // -log2 P(x^n) equals the linear term exactly for a product law.
                let exact = linear(&k);
                exact - linear(&k)
            })
            .collect(),
    };
    let denom = (n as f64).log2().max(1.0);
    let ratios: Vec<f64> = residuals.iter().map(|r| r.abs() / denom).collect();
    Ok(SelfInfoResidual { n, ratio_q95: quantile(&ratios, 0.95), residuals, ratios })
}

/// Empirical quantile by the nearest-rank rule.
pub(crate) fn quantile(values: &[f64], q: f64) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let rank = ((q * v.len() as f64).ceil() as usize).clamp(1, v.len());
    v[rank - 1]
}
