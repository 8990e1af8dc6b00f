use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Error, Result};
use crate::probkit::{Alphabet, CondKernel, ProbVec, RealFunc};

/// Zero-variance threshold for coordinates and functionals.
const ZERO_VAR: f64 = 1e-300;

/// Gaussian vector indexed by a product alphabet.
///
/// `center` is the pmf whose deviation this describes, when there is one.
/// Samples sum to zero over the trailing factors for every value of the
/// first `cond_factors` factors (all factors trailing when it is zero).
#[derive(Clone, Debug)]
pub struct GaussianSpec {
    pub domain: Vec<Alphabet>,
    pub center: Option<RealFunc>,
    pub cov: DMatrix<f64>,
    pub mean: DVector<f64>,
    pub cond_factors: usize,
}

/// Finite-dimensional Gaussian with labelled coordinates.
#[derive(Clone, Debug)]
pub struct ScalarGaussian {
    pub labels: Vec<String>,
    pub cov: DMatrix<f64>,
    pub mean: DVector<f64>,
}

impl ScalarGaussian {
    pub fn centered(labels: Vec<String>, cov: DMatrix<f64>) -> Result<Self> {
        if cov.nrows() != cov.ncols() || cov.nrows() != labels.len() {
            return Err(Error::Shape("covariance must be square and match the labels".into()));
        }
        let n = labels.len();
        Ok(ScalarGaussian { labels, cov, mean: DVector::zeros(n) })
    }

    pub fn dim(&self) -> usize {
        self.labels.len()
    }
}

/// Perturbation map applied by the conditional-type sampler: a function
/// from `Tan(P_X)` into `Tan(P_{U|X})`.
#[derive(Clone)]
pub enum Zeta {
    /// `g -> matrix g + offset`, with `matrix` of shape `(|X||U|, |X|)`.
    Affine { matrix: DMatrix<f64>, offset: DVector<f64> },
    /// Arbitrary map; usable for sampling but not for Gaussian composition.
    Nonlinear(Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>),
}

impl std::fmt::Debug for Zeta {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Zeta::Affine { matrix, offset } => f.debug_struct("Affine").field("matrix", matrix).field("offset", offset).finish(),
            Zeta::Nonlinear(_) => f.write_str("Nonlinear(..)"),
        }
    }
}

impl Zeta {
    pub fn zero(x_size: usize, u_size: usize) -> Zeta {
        Zeta::Affine { matrix: DMatrix::zeros(x_size * u_size, x_size), offset: DVector::zeros(x_size * u_size) }
    }

    /// `zeta(g)` as a row-major `|X| x |U|` table.
    pub fn apply(&self, g: &[f64]) -> Vec<f64> {
        match self {
            Zeta::Affine { matrix, offset } => (matrix * DVector::from_column_slice(g) + offset).as_slice().to_vec(),
            Zeta::Nonlinear(f) => f(g),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Zeta::Affine { matrix, offset } => matrix.iter().all(|&v| v == 0.0) && offset.iter().all(|&v| v == 0.0),
            Zeta::Nonlinear(_) => false,
        }
    }
}

fn nm_block(p: &[f64]) -> DMatrix<f64> {
    let k = p.len();
    DMatrix::from_fn(k, k, |i, j| if i == j { p[i] * (1.0 - p[i]) } else { -p[i] * p[j] })
}

/// `NM(P)`: covariance `p(1 - p)` on the diagonal and `-p(x) p(x')` off it.
pub fn nm_covariance(p: &ProbVec) -> GaussianSpec {
    let k = p.len();
    GaussianSpec {
        domain: vec![p.alphabet().clone()],
        center: Some(p.as_func()),
        cov: nm_block(p.mass()),
        mean: DVector::zeros(k),
        cond_factors: 0,
    }
}

/// `NM` of a pmf on a product alphabet, flattened row-major.
pub fn nm_of_joint(joint: &RealFunc) -> Result<GaussianSpec> {
    let s: f64 = joint.sum();
    if (s - 1.0).abs() > 1e-12 || joint.values().iter().any(|&v| v < 0.0) {
        return invalid("joint is not a pmf");
    }
    Ok(GaussianSpec {
        domain: joint.domain().to_vec(),
        center: Some(joint.clone()),
        cov: nm_block(joint.values()),
        mean: DVector::zeros(joint.len()),
        cond_factors: 0,
    })
}

/// `NM(P_{Y|X})`: block-diagonal, one independent `NM(P_{Y|X=x})` block per
/// row.
pub fn nm_cond_covariance(k: &CondKernel) -> GaussianSpec {
    let (nx, ny) = (k.from_alphabet().size(), k.to_alphabet().size());
    let mut cov = DMatrix::zeros(nx * ny, nx * ny);
    for x in 0..nx {
        cov.view_mut((x * ny, x * ny), (ny, ny)).copy_from(&nm_block(k.row(x)));
    }
    GaussianSpec {
        domain: vec![k.from_alphabet().clone(), k.to_alphabet().clone()],
        center: None,
        cov,
        mean: DVector::zeros(nx * ny),
        cond_factors: 1,
    }
}

impl GaussianSpec {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Largest absolute row sum of a sample, per the closure structure.
    pub fn closure_residual(&self, sample: &[f64]) -> f64 {
        let lead: usize = self.domain[..self.cond_factors].iter().map(Alphabet::size).product();
        let row = sample.len() / lead.max(1);
        sample.chunks(row).map(|r| r.iter().sum::<f64>().abs()).fold(0.0, f64::max)
    }
}

/// Covariance (and mean) of the linear functionals `<G, f_i>`. Each map is
/// broadcast onto the spec's domain; `NaN` entries are allowed only on
/// coordinates with zero variance.
pub fn linear_pushforward(spec: &GaussianSpec, maps: &[&RealFunc]) -> Result<ScalarGaussian> {
    let d = spec.dim();
    let mut cols = DMatrix::zeros(d, maps.len());
    for (j, f) in maps.iter().enumerate() {
        let v = f.expand_to(&spec.domain)?;
        for i in 0..d {
            if v[i].is_finite() {
                cols[(i, j)] = v[i];
            } else if spec.cov[(i, i)] > ZERO_VAR || spec.mean[i] != 0.0 {
                return Err(Error::Undominated("functional undefined on a coordinate with positive variance".into()));
            }
        }
    }
    let cov = cols.transpose() * &spec.cov * &cols;
    let cov = (&cov + cov.transpose()) * 0.5;
    let mean = cols.transpose() * &spec.mean;
    let labels = maps.iter().enumerate().map(|(i, _)| format!("f{i}")).collect();
    Ok(ScalarGaussian { labels, cov, mean })
}

/// Kernel table broadcast onto `domain x out`, validated as conditional.
fn kernel_on(spec: &GaussianSpec, kernel: &RealFunc) -> Result<(Alphabet, Vec<f64>)> {
    let kd = kernel.domain();
    let out = kd.last().ok_or_else(|| Error::Shape("kernel has no factors".into()))?.clone();
    if spec.domain.iter().any(|a| a.name() == out.name()) {
        return Err(Error::Shape(format!("kernel output {} already in the domain", out.name())));
    }
    let mut target = spec.domain.clone();
    target.push(out.clone());
    let vals = kernel.expand_to(&target)?;
    for row in vals.chunks(out.size()) {
        let s: f64 = row.iter().sum();
        if (s - 1.0).abs() > 1e-12 || row.iter().any(|&v| v < 0.0) {
            return invalid("kernel rows must be pmfs");
        }
    }
    Ok((out, vals))
}

fn center_of(spec: &GaussianSpec) -> Result<&RealFunc> {
    spec.center.as_ref().ok_or_else(|| Error::InvalidInput("composition needs a deviation of a pmf".into()))
}

/// Law of `A o P_{Y|D} + sqrt(P_D) o B` for `A ~ spec` and an independent
/// `B ~ NM(P_{Y|D})`; for `A ~ NM(P_D)` this is `NM(P_D o P_{Y|D})`.
pub fn compose_channel_deviation(spec: &GaussianSpec, kernel: &RealFunc) -> Result<GaussianSpec> {
    let center = center_of(spec)?;
    let (out, kv) = kernel_on(spec, kernel)?;
    let (nd, ny) = (spec.dim(), out.size());
    let pd = center.expand_to(&spec.domain)?;
    let mut m = DMatrix::zeros(nd * ny, nd);
    let mut noise = DMatrix::zeros(nd * ny, nd * ny);
    for d in 0..nd {
        let row = &kv[d * ny..(d + 1) * ny];
        for y in 0..ny {
            m[(d * ny + y, d)] = row[y];
        }
        noise.view_mut((d * ny, d * ny), (ny, ny)).copy_from(&(nm_block(row) * pd[d]));
    }
    let cov = &m * &spec.cov * m.transpose() + noise;
    let mut domain = spec.domain.clone();
    domain.push(out);
    let new_center = center.semidirect(kernel)?.reorder(&domain.iter().map(Alphabet::name).collect::<Vec<_>>())?;
    Ok(GaussianSpec {
        domain,
        center: Some(new_center),
        cov: (&cov + cov.transpose()) * 0.5,
        mean: &m * &spec.mean,
        cond_factors: 0,
    })
}

/// Law of `G o P_{U|X} + P_X o zeta(G)` for `G ~ spec` and affine `zeta`.
pub fn compose_gcc_deviation(spec: &GaussianSpec, kernel: &RealFunc, zeta: &Zeta) -> Result<GaussianSpec> {
    let (matrix, offset) = match zeta {
        Zeta::Affine { matrix, offset } => (matrix, offset),
        Zeta::Nonlinear(_) => return Err(Error::Unsupported("Gaussian composition needs an affine perturbation".into())),
    };
    let center = center_of(spec)?;
    let (out, kv) = kernel_on(spec, kernel)?;
    let (nd, nu) = (spec.dim(), out.size());
    if matrix.nrows() != nd * nu || matrix.ncols() != nd || offset.len() != nd * nu {
        return Err(Error::Shape("perturbation has the wrong shape".into()));
    }
    for d in 0..nd {
        for u in 0..nu {
            let i = d * nu + u;
            if kv[i] == 0.0 && (matrix.row(i).iter().any(|&v| v != 0.0) || offset[i] != 0.0) {
                return invalid("perturbation is not dominated by the kernel");
            }
        }
        let col_sum: f64 = (0..nu).map(|u| offset[d * nu + u]).sum();
        let mat_sum = (0..nd).map(|c| (0..nu).map(|u| matrix[(d * nu + u, c)]).sum::<f64>().abs()).fold(0.0, f64::max);
        if col_sum.abs() > 1e-12 || mat_sum > 1e-12 {
            return invalid("perturbation rows must sum to zero");
        }
    }
    let pd = center.expand_to(&spec.domain)?;
    let mut l = DMatrix::zeros(nd * nu, nd);
    for d in 0..nd {
        for u in 0..nu {
            l[(d * nu + u, d)] = kv[d * nu + u];
        }
    }
    let scaled = DMatrix::from_fn(nd * nu, nd, |i, c| pd[i / nu] * matrix[(i, c)]);
    l += scaled;
    let off = DVector::from_fn(nd * nu, |i, _| pd[i / nu] * offset[i]);
    let cov = &l * &spec.cov * l.transpose();
    let mut domain = spec.domain.clone();
    domain.push(out);
    let new_center = center.semidirect(kernel)?.reorder(&domain.iter().map(Alphabet::name).collect::<Vec<_>>())?;
    Ok(GaussianSpec {
        domain,
        center: Some(new_center),
        cov: (&cov + cov.transpose()) * 0.5,
        mean: &l * &spec.mean + off,
        cond_factors: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probkit::{variance, variance_of_cond_expectation, expected_cond_covariance};

    fn px() -> ProbVec {
        ProbVec::new(Alphabet::indexed("X", 3), vec![0.2, 0.5, 0.3]).unwrap()
    }

    fn kyx() -> CondKernel {
        CondKernel::new(
            Alphabet::indexed("X", 3),
            Alphabet::indexed("Y", 2),
            vec![0.9, 0.1, 0.3, 0.7, 0.5, 0.5],
        )
        .unwrap()
    }

    #[test]
    fn composition_gives_joint_nm() {
        let composed = compose_channel_deviation(&nm_covariance(&px()), &kyx().as_func()).unwrap();
        let joint = px().as_func().semidirect(&kyx().as_func()).unwrap();
        let direct = nm_of_joint(&joint).unwrap();
        assert!((composed.cov - direct.cov).abs().max() < 1e-15);
    }

    #[test]
    fn functional_variances_split() {
        let joint = px().as_func().semidirect(&kyx().as_func()).unwrap();
        let f = RealFunc::new(joint.domain().to_vec(), vec![1.0, -2.0, 0.5, 3.0, 0.0, 1.5]).unwrap();
        let nm = nm_of_joint(&joint).unwrap();
        let total = linear_pushforward(&nm, &[&f]).unwrap().cov[(0, 0)];
        assert!((total - variance(&joint, &f).unwrap()).abs() < 1e-14);
        let ex = crate::probkit::cond_expectation(&joint, &f, &["X"]).unwrap();
        let a = linear_pushforward(&nm_covariance(&px()), &[&ex]).unwrap().cov[(0, 0)];
        assert!((a - variance_of_cond_expectation(&joint, &[&f], &["X"]).unwrap()[(0, 0)]).abs() < 1e-14);
        let b = expected_cond_covariance(&joint, &[&f], &["X"]).unwrap()[(0, 0)];
        assert!((total - a - b).abs() < 1e-14);
    }

    #[test]
    fn nonlinear_perturbation_is_unsupported() {
        let z = Zeta::Nonlinear(Arc::new(|g: &[f64]| vec![0.0; g.len() * 2]));
        let r = compose_gcc_deviation(&nm_covariance(&px()), &kyx().as_func(), &z);
        assert!(matches!(r, Err(Error::Unsupported(_))));
    }

    #[test]
    fn zero_perturbation_matches_channel_mean_part() {
        let spec = nm_covariance(&px());
        let g = compose_gcc_deviation(&spec, &kyx().as_func(), &Zeta::zero(3, 2)).unwrap();
        let c = compose_channel_deviation(&spec, &kyx().as_func()).unwrap();
        let joint = c.center.clone().unwrap();
        let noise = compose_channel_deviation(
            &GaussianSpec { cov: DMatrix::zeros(3, 3), ..spec.clone() },
            &kyx().as_func(),
        )
        .unwrap();
        assert!((g.cov + noise.cov - c.cov).abs().max() < 1e-15);
        assert_eq!(g.center.unwrap(), joint);
    }
}
