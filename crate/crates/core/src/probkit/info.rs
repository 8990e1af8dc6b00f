use nalgebra::DMatrix;

use crate::error::{Error, Result};

use super::{Alphabet, RealFunc};

/// Entropy in bits of a mass vector.
pub fn entropy(p: &[f64]) -> f64 {
    -p.iter().filter(|&&v| v > 0.0).map(|&v| v * v.log2()).sum::<f64>()
}

fn names(f: &RealFunc) -> Vec<String> {
    f.names().into_iter().map(String::from).collect()
}

fn union(a: &[&str], b: &[&str]) -> Vec<String> {
    let mut out: Vec<String> = a.iter().map(|s| s.to_string()).collect();
    for s in b {
        if !out.iter().any(|t| t == s) {
            out.push(s.to_string());
        }
    }
    out
}

fn log_ratio(num: &[f64], den: &[f64]) -> Vec<f64> {
    num.iter().zip(den).map(|(&n, &d)| if n > 0.0 { (n / d).log2() } else { f64::NAN }).collect()
}

/// `-log P(a)` over the factors `a`; `NaN` where `P(a) = 0`.
pub fn self_information(joint: &RealFunc, a: &[&str]) -> Result<RealFunc> {
    let m = joint.marginal(a)?;
    Ok(m.map(|v| if v > 0.0 { -v.log2() } else { f64::NAN }))
}

/// Information density `log P(a, b) / (P(a) P(b))` over `a` then `b`;
/// `NaN` where `P(a, b) = 0`.
pub fn info_density(joint: &RealFunc, a: &[&str], b: &[&str]) -> Result<RealFunc> {
    let ab = union(a, b);
    let ab_ref: Vec<&str> = ab.iter().map(String::as_str).collect();
    let pab = joint.marginal(&ab_ref)?;
    let pa = joint.marginal(a)?.expand_to(pab.domain())?;
    let pb = joint.marginal(b)?.expand_to(pab.domain())?;
    let den: Vec<f64> = pa.iter().zip(&pb).map(|(x, y)| x * y).collect();
    RealFunc::new(pab.domain().to_vec(), log_ratio(pab.values(), &den))
}

/// Conditional information density `log P(a, b | c) / (P(a | c) P(b | c))`
/// over `a`, `b`, `c`; `NaN` where `P(a, b, c) = 0`.
pub fn cond_info_density(joint: &RealFunc, a: &[&str], b: &[&str], c: &[&str]) -> Result<RealFunc> {
    if c.is_empty() {
        return info_density(joint, a, b);
    }
    let abc = union(&union(a, b).iter().map(String::as_str).collect::<Vec<_>>(), c);
    let abc_ref: Vec<&str> = abc.iter().map(String::as_str).collect();
    let pabc = joint.marginal(&abc_ref)?;
    let dom = pabc.domain().to_vec();
    let ac = union(a, c);
    let bc = union(b, c);
    let pac = joint.marginal(&ac.iter().map(String::as_str).collect::<Vec<_>>())?.expand_to(&dom)?;
    let pbc = joint.marginal(&bc.iter().map(String::as_str).collect::<Vec<_>>())?.expand_to(&dom)?;
    let pc = joint.marginal(c)?.expand_to(&dom)?;
    let num: Vec<f64> = pabc.values().iter().zip(&pc).map(|(x, y)| x * y).collect();
    let den: Vec<f64> = pac.iter().zip(&pbc).map(|(x, y)| x * y).collect();
    let vals = pabc.values().iter().zip(log_ratio(&num, &den)).map(|(&p, l)| if p > 0.0 { l } else { f64::NAN });
    RealFunc::new(dom, vals.collect())
}

/// Information functionals of a joint pmf on two factors.
#[derive(Clone, Debug)]
pub struct InfoFunctionals {
    pub iota_x: RealFunc,
    pub iota_y: RealFunc,
    pub iota_x_given_y: RealFunc,
    pub iota_xy: RealFunc,
    pub h_x: f64,
    pub h_y: f64,
    pub mutual_information: f64,
}

/// `iota_X`, `iota_Y`, `iota_{X|Y}`, `iota_{X;Y}`, the entropies and the
/// mutual information of a two-factor joint pmf.
pub fn info_functionals(joint: &RealFunc) -> Result<InfoFunctionals> {
    if joint.domain().len() != 2 {
        return Err(Error::Shape("joint must have exactly two factors".into()));
    }
    let n = names(joint);
    let (x, y) = (n[0].as_str(), n[1].as_str());
    let iota_x = self_information(joint, &[x])?;
    let iota_y = self_information(joint, &[y])?;
    let iota_xy = info_density(joint, &[x], &[y])?;
    let py = joint.marginal(&[y])?.expand_to(joint.domain())?;
    let iota_x_given_y = RealFunc::new(
        joint.domain().to_vec(),
        joint.values().iter().zip(&py).map(|(&p, &q)| if p > 0.0 { -(p / q).log2() } else { f64::NAN }).collect(),
    )?;
    let h_x = entropy(joint.marginal(&[x])?.values());
    let h_y = entropy(joint.marginal(&[y])?.values());
    let mutual_information = joint.inner(&iota_xy)?.max(0.0);
    Ok(InfoFunctionals { iota_x, iota_y, iota_x_given_y, iota_xy, h_x: h_x.max(0.0), h_y: h_y.max(0.0), mutual_information })
}

/// Functions aligned to the joint's cells, restricted to charged cells.
struct Aligned {
    mass: Vec<f64>,
    cells: Vec<usize>,
    vals: Vec<Vec<f64>>,
}

fn align(joint: &RealFunc, fs: &[&RealFunc]) -> Result<Aligned> {
    let cells: Vec<usize> = (0..joint.len()).filter(|&i| joint.values()[i] > 0.0).collect();
    let mut vals = Vec::with_capacity(fs.len());
    for f in fs {
        let e = f.expand_to(joint.domain())?;
        let mut v = Vec::with_capacity(cells.len());
        for &c in &cells {
            if !e[c].is_finite() {
                return Err(Error::Undominated(format!("function undefined on a charged cell of {:?}", joint.names())));
            }
            v.push(e[c]);
        }
        vals.push(v);
    }
    Ok(Aligned { mass: cells.iter().map(|&c| joint.values()[c]).collect(), cells, vals })
}

/// `E f` under `joint`.
pub fn expectation(joint: &RealFunc, f: &RealFunc) -> Result<f64> {
    let a = align(joint, &[f])?;
    Ok(a.mass.iter().zip(&a.vals[0]).map(|(p, v)| p * v).sum())
}

/// `Var f` under `joint`.
pub fn variance(joint: &RealFunc, f: &RealFunc) -> Result<f64> {
    Ok(covariance_matrix(joint, &[f])?[(0, 0)])
}

/// Covariance matrix of the listed functions under `joint`.
pub fn covariance_matrix(joint: &RealFunc, fs: &[&RealFunc]) -> Result<DMatrix<f64>> {
    expected_cond_covariance(joint, fs, &[])
}

fn group_ids(joint: &RealFunc, given: &[&str]) -> Result<(usize, Vec<usize>)> {
    let dom: Vec<Alphabet> = given.iter().map(|g| joint.factor(g).cloned()).collect::<Result<_>>()?;
    let probe = RealFunc::constant(dom, 0.0)?;
    Ok((probe.len(), probe.broadcast_map(joint.domain())?))
}

fn group_means(a: &Aligned, gid: &[usize], groups: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let k = a.vals.len();
    let mut gm = vec![0.0; groups];
    let mut mean = vec![vec![0.0; groups]; k];
    for (j, &c) in a.cells.iter().enumerate() {
        let g = gid[c];
        gm[g] += a.mass[j];
        for i in 0..k {
            mean[i][g] += a.mass[j] * a.vals[i][j];
        }
    }
    for i in 0..k {
        for g in 0..groups {
            if gm[g] > 0.0 {
                mean[i][g] /= gm[g];
            }
        }
    }
    (gm, mean)
}

/// `E[f | given]` as a function of the `given` factors; `NaN` where the
/// conditioning event has zero mass.
pub fn cond_expectation(joint: &RealFunc, f: &RealFunc, given: &[&str]) -> Result<RealFunc> {
    let a = align(joint, &[f])?;
    let (groups, gid) = group_ids(joint, given)?;
    let (gm, mean) = group_means(&a, &gid, groups);
    let dom: Vec<Alphabet> = given.iter().map(|g| joint.factor(g).cloned()).collect::<Result<_>>()?;
    let vals = (0..groups).map(|g| if gm[g] > 0.0 { mean[0][g] } else { f64::NAN }).collect();
    RealFunc::new(dom, vals)
}

/// `E[Cov[f | given]]` for the listed functions (two-pass, centred on the
/// conditional means).
pub fn expected_cond_covariance(joint: &RealFunc, fs: &[&RealFunc], given: &[&str]) -> Result<DMatrix<f64>> {
    let a = align(joint, fs)?;
    let (groups, gid) = group_ids(joint, given)?;
    let (_, mean) = group_means(&a, &gid, groups);
    let k = fs.len();
    let mut cov = DMatrix::zeros(k, k);
    let mut dev = vec![0.0; k];
    for (j, &c) in a.cells.iter().enumerate() {
        let g = gid[c];
        for i in 0..k {
            dev[i] = a.vals[i][j] - mean[i][g];
        }
        for r in 0..k {
            for s in r..k {
                cov[(r, s)] += a.mass[j] * dev[r] * dev[s];
            }
        }
    }
    for r in 0..k {
        for s in 0..r {
            cov[(r, s)] = cov[(s, r)];
        }
    }
    Ok(cov)
}

/// `Cov[E[f | given]]` for the listed functions.
pub fn variance_of_cond_expectation(joint: &RealFunc, fs: &[&RealFunc], given: &[&str]) -> Result<DMatrix<f64>> {
    let a = align(joint, fs)?;
    let (groups, gid) = group_ids(joint, given)?;
    let (gm, mean) = group_means(&a, &gid, groups);
    let k = fs.len();
    let total: Vec<f64> = (0..k).map(|i| (0..groups).map(|g| gm[g] * mean[i][g]).sum()).collect();
    let mut cov = DMatrix::zeros(k, k);
    for g in 0..groups {
        if gm[g] == 0.0 {
            continue;
        }
        for r in 0..k {
            for s in 0..k {
                cov[(r, s)] += gm[g] * (mean[r][g] - total[r]) * (mean[s][g] - total[s]);
            }
        }
    }
    Ok(cov)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probkit::{CondKernel, ProbVec};

    fn bsc_joint(q: f64, p: f64) -> RealFunc {
        let px = ProbVec::new(Alphabet::indexed("X", 2), vec![q, 1.0 - q]).unwrap();
        let k = CondKernel::bsc(Alphabet::indexed("X", 2), Alphabet::indexed("Y", 2), p).unwrap();
        px.as_func().semidirect(&k.as_func()).unwrap()
    }

    fn hb(p: f64) -> f64 {
        entropy(&[p, 1.0 - p])
    }

    #[test]
    fn bsc_mutual_information() {
        let f = info_functionals(&bsc_joint(0.5, 0.11)).unwrap();
        assert!((f.mutual_information - (1.0 - hb(0.11))).abs() < 1e-14);
        assert!((f.h_x - 1.0).abs() < 1e-15);
    }

    #[test]
    fn mutual_information_two_ways() {
        let j = bsc_joint(0.3, 0.2);
        let f = info_functionals(&j).unwrap();
        let h_xy = entropy(j.values());
        assert!((f.mutual_information - (f.h_x + f.h_y - h_xy)).abs() < 1e-12);
    }

    #[test]
    fn total_variance_decomposes() {
        let j = bsc_joint(0.3, 0.2);
        let f = info_density(&j, &["X"], &["Y"]).unwrap();
        let v = variance(&j, &f).unwrap();
        let a = variance_of_cond_expectation(&j, &[&f], &["X"]).unwrap()[(0, 0)];
        let b = expected_cond_covariance(&j, &[&f], &["X"]).unwrap()[(0, 0)];
        assert!((v - a - b).abs() < 1e-14);
    }

    #[test]
    fn conditional_density_matches_chain_rule() {
        let px = ProbVec::new(Alphabet::indexed("X", 2), vec![0.4, 0.6]).unwrap();
        let u = CondKernel::new(Alphabet::indexed("X", 2), Alphabet::indexed("U", 3), vec![0.2, 0.5, 0.3, 0.6, 0.1, 0.3])
            .unwrap();
        let y = CondKernel::bsc(Alphabet::indexed("X", 2), Alphabet::indexed("Y", 2), 0.25).unwrap();
        let j = px.as_func().semidirect(&u.as_func()).unwrap().semidirect(&y.as_func()).unwrap();
        // I(U;X|Y) = I(U;X,Y) - I(U;Y)
        let c = cond_info_density(&j, &["U"], &["X"], &["Y"]).unwrap();
        let lhs = expectation(&j, &c).unwrap();
        let a = expectation(&j, &info_density(&j, &["U"], &["X", "Y"]).unwrap()).unwrap();
        let b = expectation(&j, &info_density(&j, &["U"], &["Y"]).unwrap()).unwrap();
        assert!((lhs - (a - b)).abs() < 1e-13);
    }
}
