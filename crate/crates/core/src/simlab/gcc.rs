//! Conditional-type sampler: codewords drawn uniformly from a conditional
//! type class that tracks a perturbation of the input's type deviation.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::gm::Zeta;
use crate::probkit::RealFunc;

/// Marginal `P_X` and row-major kernel `P_{U|X}` of a joint on `X x U`.
pub(crate) fn split_joint(joint: &RealFunc) -> Result<(Vec<f64>, Vec<f64>, usize)> {
    if joint.domain().len() != 2 {
        return Err(Error::Shape("conditional-type sampler expects a joint on X x U".into()));
    }
    if (joint.sum() - 1.0).abs() > 1e-9 || joint.values().iter().any(|&v| v < 0.0) {
        return Err(Error::InvalidInput("joint is not a pmf".into()));
    }
    let nu = joint.shape()[1];
    let px: Vec<f64> = joint.values().chunks(nu).map(|r| r.iter().sum()).collect();
    let kernel = joint
        .values()
        .chunks(nu)
        .zip(&px)
        .flat_map(|(r, &m)| r.iter().map(move |&v| if m > 0.0 { v / m } else { 0.0 }))
        .collect();
    Ok((px, kernel, nu))
}

fn check_zeta(zeta: &Zeta, nx: usize, nu: usize) -> Result<()> {
    if let Zeta::Affine { matrix, offset } = zeta {
        if matrix.nrows() != nx * nu || matrix.ncols() != nx || offset.len() != nx * nu {
            return Err(Error::Shape(format!(
                "zeta is {}x{}, expected {}x{}",
                matrix.nrows(),
                matrix.ncols(),
                nx * nu,
                nx
            )));
        }
    }
    Ok(())
}

/// `sqrt(n) (P_hat - P_X)` from symbol counts.
pub fn type_deviation(px: &[f64], counts: &[usize]) -> Vec<f64> {
    let n: usize = counts.iter().sum();
    let root = (n as f64).sqrt();
    counts.iter().zip(px).map(|(&c, &p)| root * (c as f64 / n as f64 - p)).collect()
}

/// Target conditional counts `n(x, u)` (row-major `|X| x |U|`) for an input
/// with symbol counts `x_counts`: the perturbed kernel
/// `P(u|x) + P_X(x) / (sqrt(n) P_hat(x)) zeta(G)(u|x)` rounded per row by
/// largest remainder, ties to the smaller symbol.
pub fn gcc_counts(px: &[f64], kernel: &[f64], nu: usize, zeta: &Zeta, x_counts: &[usize]) -> Result<Vec<usize>> {
    let nx = px.len();
    check_zeta(zeta, nx, nu)?;
    let n: usize = x_counts.iter().sum();
    if n == 0 {
        return Err(Error::InvalidInput("empty input sequence".into()));
    }
    for (x, (&c, &p)) in x_counts.iter().zip(px).enumerate() {
        if c > 0 && p <= 0.0 {
            return Err(Error::Undominated(format!("input symbol {x} has probability zero")));
        }
    }
    let g = type_deviation(px, x_counts);
    let shift = if zeta.is_zero() { vec![0.0; nx * nu] } else { zeta.apply(&g) };
    let root = (n as f64).sqrt();
    let mut out = vec![0usize; nx * nu];
    for x in 0..nx {
        let nxc = x_counts[x];
        if nxc == 0 {
            continue;
        }
        let p_hat = nxc as f64 / n as f64;
        let scale = px[x] / (root * p_hat);
        let mut targets = Vec::with_capacity(nu);
        for u in 0..nu {
            let base = kernel[x * nu + u];
            let s = shift[x * nu + u];
            if base == 0.0 && s != 0.0 {
                return Err(Error::InvalidInput(format!("zeta is not dominated by the kernel at ({x}, {u})")));
            }
            let v = base + scale * s;
            if v < -1e-12 {
                return Err(Error::Infeasible { row: x, detail: format!("perturbed entry {v:.3e} at symbol {u}") });
            }
            targets.push(v.max(0.0) * nxc as f64);
        }
        let total: f64 = targets.iter().sum();
        if (total - nxc as f64).abs() > 1e-6 * nxc as f64 {
            return Err(Error::InvalidInput(format!("zeta row {x} does not sum to zero")));
        }
        let floors: Vec<usize> = targets.iter().map(|t| (t + 1e-9).floor() as usize).collect();
        let assigned: usize = floors.iter().sum();
        let mut order: Vec<usize> = (0..nu).filter(|&u| targets[u] > 0.0).collect();
        order.sort_by(|&a, &b| {
            let fa = targets[a] - floors[a] as f64;
            let fb = targets[b] - floors[b] as f64;
            fb.total_cmp(&fa).then(a.cmp(&b))
        });
        let row = &mut out[x * nu..(x + 1) * nu];
        row.copy_from_slice(&floors);
        if assigned > nxc {
            return Err(Error::Infeasible { row: x, detail: "rounding overshoots the row count".into() });
        }
        for &u in order.iter().cycle().take(nxc - assigned) {
            row[u] += 1;
        }
    }
    Ok(out)
}

pub(crate) fn symbol_counts(seq: &[usize], size: usize) -> Result<Vec<usize>> {
    let mut c = vec![0usize; size];
    for &s in seq {
        if s >= size {
            return Err(Error::InvalidInput(format!("symbol index {s} out of range")));
        }
        c[s] += 1;
    }
    Ok(c)
}

/// Uniform draw from the conditional type class with counts `n(x, u)`.
pub(crate) fn fill_class(x_seq: &[usize], counts: &[usize], nu: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let nx = counts.len() / nu;
    let mut out = vec![0usize; x_seq.len()];
    for x in 0..nx {
        let positions: Vec<usize> = (0..x_seq.len()).filter(|&i| x_seq[i] == x).collect();
        let mut labels: Vec<usize> = (0..nu).flat_map(|u| std::iter::repeat(u).take(counts[x * nu + u])).collect();
        labels.shuffle(rng);
        for (pos, u) in positions.into_iter().zip(labels) {
            out[pos] = u;
        }
    }
    out
}

/// Draws `u_seq` uniformly over the perturbed conditional type class of
/// `x_seq` under the joint `P_{X,U}`.
pub fn gcc_sample(joint: &RealFunc, zeta: &Zeta, x_seq: &[usize], seed: u64) -> Result<Vec<usize>> {
    let (px, kernel, nu) = split_joint(joint)?;
    let counts = gcc_counts(&px, &kernel, nu, zeta, &symbol_counts(x_seq, px.len())?)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(fill_class(x_seq, &counts, nu, &mut rng))
}

/// Largest entry of `|G_{X,U} - (G_X o P_{U|X} + P_X o zeta(G_X))|` for a
/// realized pair; the deviation equation asks for this to be `O(1/sqrt(n))`.
pub fn gcc_deviation(joint: &RealFunc, zeta: &Zeta, x_seq: &[usize], u_seq: &[usize]) -> Result<f64> {
    let (px, kernel, nu) = split_joint(joint)?;
    deviation_from_tables(&px, &kernel, nu, zeta, x_seq, u_seq)
}

pub(crate) fn deviation_from_tables(
    px: &[f64],
    kernel: &[f64],
    nu: usize,
    zeta: &Zeta,
    x_seq: &[usize],
    u_seq: &[usize],
) -> Result<f64> {
    if x_seq.len() != u_seq.len() || x_seq.is_empty() {
        return Err(Error::Shape("sequences must be nonempty and of equal length".into()));
    }
    let nx = px.len();
    check_zeta(zeta, nx, nu)?;
    let n = x_seq.len() as f64;
    let root = n.sqrt();
    let gx = type_deviation(px, &symbol_counts(x_seq, nx)?);
    let shift = if zeta.is_zero() { vec![0.0; nx * nu] } else { zeta.apply(&gx) };
    let mut joint_counts = vec![0usize; nx * nu];
    for (&x, &u) in x_seq.iter().zip(u_seq) {
        if u >= nu {
            return Err(Error::InvalidInput(format!("symbol index {u} out of range")));
        }
        joint_counts[x * nu + u] += 1;
    }
    let mut worst = 0.0f64;
    for x in 0..nx {
        for u in 0..nu {
            let i = x * nu + u;
            let g = root * (joint_counts[i] as f64 / n - px[x] * kernel[i]);
            let predicted = gx[x] * kernel[i] + px[x] * shift[i];
            worst = worst.max((g - predicted).abs());
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probkit::Alphabet;

    fn joint(px: &[f64], kernel: &[f64], nu: usize) -> RealFunc {
        RealFunc::from_fn(vec![Alphabet::indexed("X", px.len()), Alphabet::indexed("U", nu)], |i| {
            px[i[0]] * kernel[i[0] * nu + i[1]]
        })
        .unwrap()
    }

    #[test]
    fn exact_type_gives_rounded_kernel() {
        let j = joint(&[0.5, 0.5], &[0.7, 0.3, 0.2, 0.8], 2);
        let x: Vec<usize> = (0..20).map(|i| i % 2).collect();
        let u = gcc_sample(&j, &Zeta::zero(2, 2), &x, 1).unwrap();
        let mut c = [0usize; 4];
        for (&a, &b) in x.iter().zip(&u) {
            c[a * 2 + b] += 1;
        }
        assert_eq!(c, [7, 3, 2, 8]);
    }

    #[test]
    fn deterministic_kernel_maps_pointwise() {
        let j = joint(&[0.3, 0.7], &[0.0, 1.0, 1.0, 0.0], 2);
        let x = vec![0, 1, 1, 0, 1];
        let u = gcc_sample(&j, &Zeta::zero(2, 2), &x, 4).unwrap();
        assert_eq!(u, vec![1, 0, 0, 1, 0]);
    }

    #[test]
    fn largest_remainder_ties_go_to_smaller_symbol() {
        let c = gcc_counts(&[1.0], &[0.5, 0.5], 2, &Zeta::zero(1, 2), &[3]).unwrap();
        assert_eq!(c, vec![2, 1]);
    }

    #[test]
    fn undominated_input_rejected() {
        let j = joint(&[1.0, 0.0], &[0.5, 0.5, 0.5, 0.5], 2);
        let err = gcc_sample(&j, &Zeta::zero(2, 2), &[0, 1], 0).unwrap_err();
        assert!(matches!(err, Error::Undominated(_)));
    }

    #[test]
    fn large_perturbation_is_infeasible() {
        let matrix = nalgebra::DMatrix::from_row_slice(4, 2, &[50.0, 0.0, -50.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let zeta = Zeta::Affine { matrix, offset: nalgebra::DVector::zeros(4) };
        let err = gcc_counts(&[0.5, 0.5], &[0.5, 0.5, 0.5, 0.5], 2, &zeta, &[2, 8]).unwrap_err();
        assert!(matches!(err, Error::Infeasible { row: 0, .. }));
    }
}
