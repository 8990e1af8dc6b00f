use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Result};

use super::GaussianSpec;

/// Sampler `mean + V sqrt(max(L, 0)) z` from the eigendecomposition of a
/// covariance; eigenvalues below `-1e-8` are rejected.
#[derive(Clone, Debug)]
pub struct GaussianSampler {
    factor: DMatrix<f64>,
    mean: DVector<f64>,
}

impl GaussianSampler {
    pub fn new(cov: &DMatrix<f64>, mean: &DVector<f64>) -> Result<Self> {
        let eig = SymmetricEigen::new((cov + cov.transpose()) * 0.5);
        if let Some(&m) = eig.eigenvalues.iter().min_by(|a, b| a.total_cmp(b)) {
            if m < -1e-8 {
                return invalid(format!("covariance is not positive semidefinite (eigenvalue {m:e})"));
            }
        }
        // Eigen-solver noise on null directions would otherwise leak out of
        // the tangent space at the square-root scale.
        let top = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
        let floor = 1e-13 * top.max(f64::MIN_POSITIVE);
        let root = DVector::from_iterator(
            eig.eigenvalues.len(),
            eig.eigenvalues.iter().map(|&l| if l > floor { l.sqrt() } else { 0.0 }),
        );
        let factor = &eig.eigenvectors * DMatrix::from_diagonal(&root);
        Ok(GaussianSampler { factor, mean: mean.clone() })
    }

    pub fn draw(&self, rng: &mut impl rand::Rng) -> Vec<f64> {
        let z = DVector::from_fn(self.factor.ncols(), |_, _| StandardNormal.sample(rng));
        (&self.factor * z + &self.mean).as_slice().to_vec()
    }
}

/// `count` seeded draws from `spec`.
pub fn sample_gaussian(spec: &GaussianSpec, seed: u64, count: usize) -> Result<Vec<Vec<f64>>> {
    let s = GaussianSampler::new(&spec.cov, &spec.mean)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..count).map(|_| s.draw(&mut rng)).collect())
}
