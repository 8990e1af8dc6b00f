use proptest::prelude::*;

use secondorder::probkit::{
    entropy, expectation, info_density, info_functionals, tangent_basis, Alphabet, CondKernel, ProbVec, RealFunc,
    TangentBase,
};

fn normalize(w: Vec<f64>) -> Vec<f64> {
    let s: f64 = w.iter().sum();
    w.into_iter().map(|v| v / s).collect()
}

fn pmf(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01f64..1.0, len).prop_map(normalize)
}

fn kernel_rows(rows: usize, len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(pmf(len), rows).prop_map(|r| r.concat())
}

proptest! {
    #[test]
    fn semidirect_product_recovers_marginal_and_kernel((px, rows) in (pmf(3), kernel_rows(3, 4))) {
        let x = Alphabet::indexed("X", 3);
        let p = ProbVec::new(x.clone(), px.clone()).unwrap();
        let k = CondKernel::new(x, Alphabet::indexed("Y", 4), rows.clone()).unwrap();
        let joint = p.as_func().semidirect(&k.as_func()).unwrap();
        prop_assert!((joint.sum() - 1.0).abs() < 1e-12);
        let marg = joint.marginal(&["X"]).unwrap();
        for (a, b) in marg.values().iter().zip(&px) {
            prop_assert!((a - b).abs() < 1e-14);
        }
        let cond = joint.conditional(&["X"]).unwrap();
        for (a, b) in cond.values().iter().zip(&rows) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn mutual_information_is_mean_density_and_bounded((px, rows) in (pmf(3), kernel_rows(3, 3))) {
        let x = Alphabet::indexed("X", 3);
        let joint = ProbVec::new(x.clone(), px).unwrap().as_func()
            .semidirect(&CondKernel::new(x, Alphabet::indexed("Y", 3), rows).unwrap().as_func()).unwrap();
        let f = info_functionals(&joint).unwrap();
        let mean = expectation(&joint, &info_density(&joint, &["X"], &["Y"]).unwrap()).unwrap();
        prop_assert!((mean - f.mutual_information).abs() < 1e-12);
        prop_assert!(f.mutual_information >= -1e-12);
        prop_assert!(f.mutual_information <= f.h_x.min(f.h_y) + 1e-12);
        prop_assert!(f.h_x <= 3f64.log2() + 1e-12);
    }

    #[test]
    fn tangent_basis_rows_sum_to_zero(rows in kernel_rows(2, 3), zero in 0usize..6) {
        let mut rows = rows;
        // Knock out one entry so domination matters.
        let r = zero / 3;
        rows[zero] = 0.0;
        let s: f64 = rows[r * 3..r * 3 + 3].iter().sum();
        rows[r * 3..r * 3 + 3].iter_mut().for_each(|v| *v /= s);
        let k = CondKernel::new(Alphabet::indexed("X", 2), Alphabet::indexed("U", 3), rows.clone()).unwrap();
        let basis = tangent_basis(&TangentBase::Kernel(k));
        // Support sizes 2 and 3 give 1 + 2 free directions.
        prop_assert_eq!(basis.len(), 3);
        for t in &basis {
            for (row, base) in t.delta().chunks(3).zip(rows.chunks(3)) {
                prop_assert!(row.iter().sum::<f64>().abs() < 1e-12);
                for (d, b) in row.iter().zip(base) {
                    prop_assert!(*b > 0.0 || *d == 0.0);
                }
            }
        }
    }
}

#[test]
fn entropy_of_known_pmfs() {
    assert_eq!(entropy(&[1.0, 0.0]), 0.0);
    assert!((entropy(&[0.5, 0.5]) - 1.0).abs() < 1e-15);
    assert!((entropy(&[0.25; 4]) - 2.0).abs() < 1e-15);
}

#[test]
fn broadcast_follows_factor_names() {
    let x = Alphabet::indexed("X", 2);
    let y = Alphabet::indexed("Y", 3);
    let f = RealFunc::new(vec![y.clone()], vec![1.0, 2.0, 3.0]).unwrap();
    let b = f.broadcast(&[x, y]).unwrap();
    assert_eq!(b.values(), &[1.0, 2.0, 3.0, 1.0, 2.0, 3.0]);
}
