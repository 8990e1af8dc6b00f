use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gm::{gaussian_orthant, ScalarGaussian};
use crate::numeric::{
    bvn_upper, gauss_hermite, gauss_hermite_64, gaussian_expectation, golden_section, nelder_mead, q_func, q_inv,
};

use super::terms::{RateDirection, SecondOrderTerms};

/// Standard deviations below this are treated as exactly zero.
const DEGENERATE_SD: f64 = 1e-12;

/// A minimized error probability with the thresholds attaining it.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PeStar {
    pub prob: f64,
    pub t_star: Vec<f64>,
    /// Three standard errors of the orthant integration (zero for the
    /// deterministic two-dimensional rule).
    pub radius: f64,
}

fn check_psd(cov: &DMatrix<f64>) -> Result<()> {
    if cov.nrows() != cov.ncols() {
        return Err(Error::Shape("covariance must be square".into()));
    }
    let scale = cov.diagonal().iter().cloned().fold(0.0, f64::max).max(1.0);
    if cov.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("covariance has non-finite entries".into()));
    }
    let min = cov.clone().symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min);
    if min < -1e-9 * scale {
        return Err(Error::InvalidInput(format!("covariance is not positive semidefinite (eigenvalue {min:e})")));
    }
    Ok(())
}

/// `P(D > t or J > s)` for a centred bivariate normal.
fn union_tail(t: f64, s: f64, sd_j: f64, sd_d: f64, rho: f64) -> f64 {
    let (a, b) = (t / sd_d, s / sd_j);
    (q_func(a) + q_func(b) - bvn_upper(a, b, rho)).clamp(0.0, 1.0)
}

/// `min_t P(D > t or J > alpha - lambda t)` for `[J, D] ~ N(0, cov)`.
///
/// The minimizer is bracketed by a 200-point grid and refined by
/// golden-section search; ties go to the smaller threshold.
pub fn pe_star(alpha: f64, lambda: f64, cov: &DMatrix<f64>) -> Result<PeStar> {
    if cov.nrows() != 2 {
        return Err(Error::Shape("scalar threshold search needs a 2x2 covariance".into()));
    }
    check_psd(cov)?;
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::Domain(format!("slope {lambda} must be finite and nonnegative")));
    }
    let sd_j = cov[(0, 0)].max(0.0).sqrt();
    let sd_d = cov[(1, 1)].max(0.0).sqrt();
    let done = |prob: f64, t: f64| Ok(PeStar { prob, t_star: vec![t], radius: 0.0 });
    if sd_d <= DEGENERATE_SD {
        if sd_j <= DEGENERATE_SD {
            return done(if alpha >= 0.0 { 0.0 } else { 1.0 }, 0.0);
        }
        return done(q_func(alpha / sd_j), 0.0);
    }
    if sd_j <= DEGENERATE_SD {
        if lambda == 0.0 {
            // J = 0 is below alpha iff alpha >= 0, and t can grow freely.
            return done(if alpha >= 0.0 { 0.0 } else { 1.0 }, f64::INFINITY);
        }
        return done(q_func(alpha / (lambda * sd_d)), alpha / lambda);
    }
    let rho = (cov[(0, 1)] / (sd_j * sd_d)).clamp(-1.0, 1.0);
    let f = |t: f64| union_tail(t, alpha - lambda * t, sd_j, sd_d, rho);
    // The event J > alpha - lambda t has probability near one once
    // alpha - lambda t < -8 sd_J, which bounds useful thresholds above.
    let reach = if lambda > 0.0 { (alpha.abs() + 8.0 * sd_j) / lambda } else { 0.0 };
    let (lo, hi) = (-8.0 * sd_d - reach, 8.0 * sd_d + reach);
    let m = 200;
    let grid: Vec<f64> = (0..m).map(|i| lo + (hi - lo) * i as f64 / (m - 1) as f64).collect();
    let vals: Vec<f64> = grid.iter().map(|&t| f(t)).collect();
    let best = (0..m).fold(0, |b, i| if vals[i] < vals[b] { i } else { b });
    let a = grid[best.saturating_sub(1)];
    let b = grid[(best + 1).min(m - 1)];
    let (t, v) = golden_section(f, a, b, 1e-12 * (hi - lo).max(1.0));
    if v <= vals[best] {
        done(v, t)
    } else {
        done(vals[best], grid[best])
    }
}

fn seeds(sds: &[f64], f: &mut impl FnMut(&[f64]) -> f64) -> Vec<Vec<f64>> {
    let k = sds.len();
    let levels = match k {
        1 => 9,
        2 => 3,
        _ => 2,
    };
    let mut all = Vec::new();
    let total = (levels as usize).pow(k as u32);
    for code in 0..total {
        let mut c = code;
        let mut v = Vec::with_capacity(k);
        for s in sds {
            let l = c % levels;
            c /= levels;
            let z = if levels == 1 { 1.0 } else { -0.5 + 3.0 * l as f64 / (levels - 1) as f64 };
            v.push(z * s);
        }
        all.push(v);
    }
    let mut scored: Vec<(f64, Vec<f64>)> = all.into_iter().map(|v| (f(&v), v)).collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0));
    scored.into_iter().take(9).map(|s| s.1).collect()
}

/// Minimizes `1 - P(Z <= upper(t))` over the free thresholds `t` with
/// Nelder-Mead restarted from up to 9 grid seeds.
fn minimize_orthant(
    g: &ScalarGaussian,
    scales: &[f64],
    upper: impl Fn(&[f64]) -> Vec<f64>,
) -> Result<PeStar> {
    let eval = |t: &[f64]| -> Result<(f64, f64)> {
        let o = gaussian_orthant(g, &upper(t))?;
        Ok((1.0 - o.value, o.radius()))
    };
    if scales.is_empty() {
        let (p, r) = eval(&[])?;
        return Ok(PeStar { prob: p.clamp(0.0, 1.0), t_star: vec![], radius: r });
    }
    let mut err = None;
    let mut obj = |t: &[f64]| match eval(t) {
        Ok(v) => v.0,
        Err(e) => {
            err.get_or_insert(e);
            f64::INFINITY
        }
    };
    let mut best: Option<(Vec<f64>, f64)> = None;
    for s in seeds(scales, &mut obj) {
        let step: Vec<f64> = scales.iter().map(|v| 0.5 * v).collect();
        let (x, v) = nelder_mead(&mut obj, &s, &step, 400, 1e-10);
        if best.as_ref().map_or(true, |b| v < b.1) {
            best = Some((x, v));
        }
    }
    if let Some(e) = err {
        return Err(e);
    }
    let (t, _) = best.expect("at least one seed");
    let (p, r) = eval(&t)?;
    Ok(PeStar { prob: p.clamp(0.0, 1.0), t_star: t, radius: r })
}

/// `min_t P(J > alpha - <lambda, t> or not D <= t)` for
/// `[J, D_1, ..., D_k] ~ N(0, cov)` with `k <= 3`. Distortions with zero
/// variance get the threshold zero.
pub fn pe_star_vector(alpha: f64, lambdas: &[f64], cov: &DMatrix<f64>) -> Result<PeStar> {
    let k = lambdas.len();
    if cov.nrows() != k + 1 {
        return Err(Error::Shape("covariance must be (k+1)x(k+1) for k slopes".into()));
    }
    if k == 1 {
        return pe_star(alpha, lambdas[0], cov);
    }
    check_psd(cov)?;
    let sds: Vec<f64> = (0..k).map(|i| cov[(i + 1, i + 1)].max(0.0).sqrt()).collect();
    let free: Vec<usize> = (0..k).filter(|&i| sds[i] > DEGENERATE_SD).collect();
    let labels = (0..=k).map(|i| if i == 0 { "J".to_string() } else { format!("D{i}") }).collect();
    let g = ScalarGaussian::centered(labels, cov.clone())?;
    let scales: Vec<f64> = free.iter().map(|&i| sds[i]).collect();
    let upper = |t: &[f64]| {
        let mut full = vec![0.0; k];
        for (j, &i) in free.iter().enumerate() {
            full[i] = t[j];
        }
        let mut u = vec![alpha - full.iter().zip(lambdas).map(|(a, b)| a * b).sum::<f64>()];
        u.extend(full);
        u
    };
    let mut r = minimize_orthant(&g, &scales, upper)?;
    let mut full = vec![0.0; k];
    for (j, &i) in free.iter().enumerate() {
        full[i] = r.t_star[j];
    }
    r.t_star = full;
    Ok(r)
}

/// `min_{t, tau} P(J_X > w - lambda t - tau or J_Y > tau or D > t)` for
/// `[J_X, J_Y, D] ~ N(0, cov)`.
pub fn three_event_pe(w: f64, lambda: f64, cov: &DMatrix<f64>) -> Result<PeStar> {
    if cov.nrows() != 3 {
        return Err(Error::Shape("three-event bound needs a 3x3 covariance".into()));
    }
    check_psd(cov)?;
    let sd: Vec<f64> = (0..3).map(|i| cov[(i, i)].max(0.0).sqrt()).collect();
    let g = ScalarGaussian::centered(vec!["JX".into(), "JY".into(), "D".into()], cov.clone())?;
    let (free_t, free_tau) = (sd[2] > DEGENERATE_SD, sd[1] > DEGENERATE_SD);
    let mut scales = Vec::new();
    if free_t {
        scales.push(sd[2]);
    }
    if free_tau {
        scales.push(sd[1]);
    }
    let unpack = |v: &[f64]| -> (f64, f64) {
        let mut it = v.iter();
        let t = if free_t { *it.next().unwrap() } else { 0.0 };
        let tau = if free_tau { *it.next().unwrap() } else { 0.0 };
        (t, tau)
    };
    let upper = |v: &[f64]| {
        let (t, tau) = unpack(v);
        vec![w - lambda * t - tau, tau, t]
    };
    let mut r = minimize_orthant(&g, &scales, upper)?;
    let (t, tau) = unpack(&r.t_star);
    r.t_star = vec![t, tau];
    Ok(r)
}

/// `E[P_e*(W - A)]` with its quadrature error estimate.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExpectedPe {
    pub value: f64,
    /// Difference to a 48-node rule plus the largest orthant radius.
    pub radius: f64,
}

/// `E[P_e*(W - A)]` for `A ~ N(0, var_a)` by 64-node Gauss-Hermite
/// quadrature. Closed forms cover vanishing noise variances.
pub fn expected_pe(w: f64, terms: &SecondOrderTerms) -> Result<ExpectedPe> {
    let cov = terms.sigma_matrix();
    let k = terms.lambdas.len();
    let sd_j = terms.sigma_j();
    let d_zero = (0..k).all(|i| terms.sigma_d(i) <= DEGENERATE_SD);
    if d_zero {
        let s = (sd_j * sd_j + terms.var_a).sqrt();
        let value = if s <= DEGENERATE_SD {
            if w >= 0.0 {
                0.0
            } else {
                1.0
            }
        } else {
            q_func(w / s)
        };
        return Ok(ExpectedPe { value, radius: 0.0 });
    }
    let point = |alpha: f64| pe_star_vector(alpha, &terms.lambdas, &cov);
    if terms.var_a <= DEGENERATE_SD * DEGENERATE_SD {
        let p = point(w)?;
        return Ok(ExpectedPe { value: p.prob, radius: p.radius });
    }
    let rule64 = gauss_hermite_64();
    let rule48 = gauss_hermite(48);
    let mut err = None;
    let mut worst_radius: f64 = 0.0;
    let mut eval = |a: f64| match point(w - a) {
        Ok(p) => {
            worst_radius = worst_radius.max(p.radius);
            p.prob
        }
        Err(e) => {
            err.get_or_insert(e);
            f64::NAN
        }
    };
    let v64 = gaussian_expectation(rule64, terms.var_a, &mut eval);
    let v48 = gaussian_expectation(&rule48, terms.var_a, &mut eval);
    if let Some(e) = err {
        return Err(e);
    }
    Ok(ExpectedPe { value: v64.clamp(0.0, 1.0), radius: (v64 - v48).abs() + worst_radius })
}

/// Second-order rate at a target error probability.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RateForEpsilon {
    pub w: f64,
    /// First-order rate moved by `W / sqrt(n)`; the `O(log n / n)` term is
    /// not included.
    pub rate: f64,
    pub log_term_omitted: bool,
}

/// Solves `E[P_e*(W - A)] = epsilon` for `W` by bisection and assembles
/// the rate `R_1 + W / sqrt(n)` (source coding) or `R_1 - W / sqrt(n)`
/// (channel coding).
pub fn rate_for_epsilon(epsilon: f64, terms: &SecondOrderTerms, n: u64, first_order: f64) -> Result<RateForEpsilon> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::Domain(format!("epsilon = {epsilon} outside (0, 1)")));
    }
    if n == 0 {
        return Err(Error::Domain("blocklength must be positive".into()));
    }
    let proxy = terms.v_gcc();
    let w = if proxy <= DEGENERATE_SD * DEGENERATE_SD {
        0.0
    } else {
        let span = 10.0 * proxy.sqrt();
        let (mut lo, mut hi) = (-span, span);
        let f = |w: f64| expected_pe(w, terms).map(|e| e.value - epsilon);
        let (flo, fhi) = (f(lo)?, f(hi)?);
        if !(flo >= 0.0 && fhi <= 0.0) {
            return Err(Error::Convergence {
                iterations: 0,
                detail: format!("W bracket [{lo}, {hi}] does not straddle epsilon ({flo:e}, {fhi:e})"),
            });
        }
        let mut it = 0;
        while hi - lo > 1e-13 * span.max(1.0) && it < 200 {
            it += 1;
            let mid = 0.5 * (lo + hi);
            let v = f(mid)?;
            if v.abs() <= 1e-12 {
                lo = mid;
                hi = mid;
                break;
            }
            if v > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    let shift = w / (n as f64).sqrt();
    let rate = match terms.direction {
        RateDirection::Source => first_order + shift,
        RateDirection::Channel => first_order - shift,
    };
    Ok(RateForEpsilon { w, rate, log_term_omitted: true })
}

/// `C - sqrt(V / n) Q^{-1}(epsilon)` for channel coding with cost.
pub fn channel_rate_for_epsilon(epsilon: f64, dispersion: f64, n: u64, capacity: f64) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::Domain(format!("epsilon = {epsilon} outside (0, 1)")));
    }
    Ok(capacity - (dispersion / n as f64).sqrt() * q_inv(epsilon))
}
