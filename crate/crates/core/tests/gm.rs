use nalgebra::DMatrix;
use proptest::prelude::*;

use secondorder::gm::{gaussian_orthant, nm_covariance, sample_gaussian, ScalarGaussian};
use secondorder::numeric::normal_cdf;
use secondorder::probkit::{Alphabet, ProbVec};

fn labels(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("z{i}")).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn independent_orthants_factorize(
        sds in prop::collection::vec(0.2f64..3.0, 1..=4),
        ups in prop::collection::vec(-2.0f64..2.0, 4),
    ) {
        let dim = sds.len();
        let cov = DMatrix::from_fn(dim, dim, |r, c| if r == c { sds[r] * sds[r] } else { 0.0 });
        let g = ScalarGaussian::centered(labels(dim), cov).unwrap();
        let p = gaussian_orthant(&g, &ups[..dim]).unwrap();
        let want: f64 = (0..dim).map(|i| normal_cdf(ups[i] / sds[i])).product();
        let tol = if dim <= 3 { 1e-10 } else { p.radius() + 1e-6 };
        prop_assert!((p.value - want).abs() <= tol, "dim {dim}: {} vs {want}", p.value);
    }

    #[test]
    fn multinomial_samples_stay_on_the_simplex_tangent(w in prop::collection::vec(0.05f64..1.0, 2..6), seed in 0u64..1000) {
        let s: f64 = w.iter().sum();
        let p = ProbVec::new(Alphabet::indexed("X", w.len()), w.iter().map(|v| v / s).collect()).unwrap();
        let spec = nm_covariance(&p);
        for draw in sample_gaussian(&spec, seed, 50).unwrap() {
            prop_assert!(draw.iter().sum::<f64>().abs() < 1e-9);
        }
    }
}

#[test]
fn sample_covariance_matches() {
    let p = ProbVec::new(Alphabet::indexed("X", 3), vec![0.2, 0.3, 0.5]).unwrap();
    let spec = nm_covariance(&p);
    let n = 200_000;
    let draws = sample_gaussian(&spec, 3, n).unwrap();
    for a in 0..3 {
        for b in 0..3 {
            let est: f64 = draws.iter().map(|d| d[a] * d[b]).sum::<f64>() / n as f64;
            // Standard error of a product moment is at most about 0.25 / sqrt(n) here.
            assert!((est - spec.cov[(a, b)]).abs() < 5.0 * 0.25 / (n as f64).sqrt(), "({a},{b}): {est}");
        }
    }
}

#[test]
fn sampling_is_reproducible() {
    let p = ProbVec::new(Alphabet::indexed("X", 2), vec![0.4, 0.6]).unwrap();
    let spec = nm_covariance(&p);
    assert_eq!(sample_gaussian(&spec, 9, 10).unwrap(), sample_gaussian(&spec, 9, 10).unwrap());
    assert_ne!(sample_gaussian(&spec, 9, 10).unwrap(), sample_gaussian(&spec, 10, 10).unwrap());
}

#[test]
fn correlated_bivariate_orthant() {
    // P(Z1 <= 0, Z2 <= 0) = 1/4 + asin(rho) / (2 pi).
    for rho in [-0.8, -0.3, 0.0, 0.5, 0.95] {
        let g = ScalarGaussian::centered(labels(2), DMatrix::from_row_slice(2, 2, &[1.0, rho, rho, 1.0])).unwrap();
        let p = gaussian_orthant(&g, &[0.0, 0.0]).unwrap().value;
        let want = 0.25 + f64::asin(rho) / (2.0 * std::f64::consts::PI);
        assert!((p - want).abs() < 1e-12, "rho {rho}: {p} vs {want}");
    }
}

#[test]
fn trivariate_equicorrelated_orthant() {
    // P(all <= 0) = 1/8 + 3 asin(rho) / (4 pi) for equal correlations.
    let rho = 0.4;
    let cov = DMatrix::from_fn(3, 3, |r, c| if r == c { 1.0 } else { rho });
    let g = ScalarGaussian::centered(labels(3), cov).unwrap();
    let p = gaussian_orthant(&g, &[0.0; 3]).unwrap().value;
    let want = 0.125 + 3.0 * f64::asin(rho) / (4.0 * std::f64::consts::PI);
    assert!((p - want).abs() < 1e-10, "{p} vs {want}");
}
