use crate::error::{Error, Result};
use crate::probkit::{cond_expectation, info_density, tangent_deltas, CondKernel, RealFunc};

use super::blahut::MAX_ITERATIONS;
use super::capacity::capacity_cost;
use super::instance::{CodingInstance, WynerZiv};

/// Largest `|<joint along V, iota + sum lambda d>|` over the tangent basis of
/// the auxiliary kernel (the test channel for lossy source coding, the input
/// pmf for channel coding). Zero exactly at a first-order stationary point.
pub fn first_order_stationarity(instance: &CodingInstance) -> Result<f64> {
    if let CodingInstance::ChannelCost(c) = instance {
        return channel_stationarity(c);
    }
    let model = instance.model()?;
    let g = model.lagrangian_density()?;
    let cond = cond_expectation(&model.joint, &g, &model.controlled_refs())?;
    let obs = model.joint.marginal(&model.observed_refs())?;
    let k = &model.aux_kernel;
    let cond = cond.broadcast(k.domain())?;
    let pobs = obs.broadcast(k.domain())?;
    let row = model.aux_names.iter().map(|n| k.factor(n).map(|a| a.size())).product::<Result<usize>>()?;
    let mut worst: f64 = 0.0;
    for delta in tangent_deltas(k.values(), row) {
        let mut acc = 0.0;
        for (i, &v) in delta.iter().enumerate() {
            if v != 0.0 {
                acc += pobs.values()[i] * v * cond.values()[i];
            }
        }
        worst = worst.max(acc.abs());
    }
    Ok(worst)
}

/// `E[iota(X;Y) | X = x] - mu c(x)` is constant on the support of the
/// optimal input.
fn channel_stationarity(c: &super::instance::ChannelCost) -> Result<f64> {
    let c = c.normalized()?;
    let sol = capacity_cost(&c.channel, &c.cost, c.budget)?;
    if !sol.mu.is_finite() {
        return Err(Error::Domain("budget at the minimum cost leaves no tangent directions".into()));
    }
    let input = c.input.clone().unwrap_or(sol.input);
    let joint = input.as_func().semidirect(&c.channel.as_func())?;
    let iota = info_density(&joint, &["X"], &["Y"])?;
    let g = iota.sub(&c.cost.broadcast(joint.domain())?.scale(sol.mu))?;
    let cond = cond_expectation(&joint, &g, &["X"])?;
    let mut worst: f64 = 0.0;
    for delta in tangent_deltas(input.mass(), input.len()) {
        let acc: f64 = delta.iter().zip(cond.values()).filter(|(v, _)| **v != 0.0).map(|(v, e)| v * e).sum();
        worst = worst.max(acc.abs());
    }
    Ok(worst)
}

const COLLAPSED: f64 = 1e-10;

/// Stationary auxiliary kernel for a Wyner-Ziv instance with its decoder
/// map and slope held fixed.
///
/// Minimizes `I(U;X|Y) + lambda E d(X, z(U,Y))` over `P_{U|X}` by the
/// alternating update `P(u|x) ~ 2^{E[log P(u|Y) | x] - lambda E[d | x, u]}`,
/// started from the instance's kernel (zeros stay zero). Entries that fall
/// below 1e-10 are set to zero at the end. Returns the
/// instance with the new kernel and its achieved distortion as the level.
pub fn stationary_aux_kernel(wz: &WynerZiv, tol: f64) -> Result<WynerZiv> {
    let px = wz.source.mass();
    let (nx, nu) = (px.len(), wz.aux.to_alphabet().size());
    let ny = wz.side_channel.to_alphabet().size();
    let side = wz.side_channel.rows();
    // Mean distortion of (x, u) over the side information.
    let mut dbar = vec![0.0; nx * nu];
    for x in 0..nx {
        for u in 0..nu {
            dbar[x * nu + u] =
                (0..ny).map(|y| side[x * ny + y] * wz.distortion.get(&[x, wz.decoder.apply(&[u, y])])).sum();
        }
    }
    let mut k = wz.aux.rows().to_vec();
    let mut iterations = 0;
    loop {
        iterations += 1;
        // P(u | y)
        let mut puy = vec![0.0; ny * nu];
        let mut py = vec![0.0; ny];
        for x in 0..nx {
            for y in 0..ny {
                let w = px[x] * side[x * ny + y];
                py[y] += w;
                for u in 0..nu {
                    puy[y * nu + u] += w * k[x * nu + u];
                }
            }
        }
        for y in 0..ny {
            if py[y] > 0.0 {
                puy[y * nu..(y + 1) * nu].iter_mut().for_each(|v| *v /= py[y]);
            }
        }
        let mut next = vec![0.0; nx * nu];
        for x in 0..nx {
            let mut expo = vec![f64::NEG_INFINITY; nu];
            for u in 0..nu {
                if k[x * nu + u] > 0.0 {
                    let s: f64 = (0..ny)
                        .filter(|&y| side[x * ny + y] > 0.0)
                        .map(|y| side[x * ny + y] * puy[y * nu + u].log2())
                        .sum();
                    expo[u] = s - wz.lambda * dbar[x * nu + u];
                }
            }
            let m = expo.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let row: Vec<f64> = expo.iter().map(|e| (e - m).exp2()).collect();
            let s: f64 = row.iter().sum();
            for u in 0..nu {
                next[x * nu + u] = row[u] / s;
            }
        }
        let step = k.iter().zip(&next).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        k = next;
        if step <= tol {
            break;
        }
        if iterations >= MAX_ITERATIONS {
            return Err(Error::Convergence { iterations, detail: format!("kernel step {step:e}") });
        }
    }
    // Mass collapsing onto the boundary is removed so stationarity holds on
    // the remaining support.
    for row in k.chunks_mut(nu) {
        row.iter_mut().filter(|v| **v < COLLAPSED).for_each(|v| *v = 0.0);
        let s: f64 = row.iter().sum();
        row.iter_mut().for_each(|v| *v /= s);
    }
    let aux = CondKernel::new(wz.aux.from_alphabet().clone(), wz.aux.to_alphabet().clone(), k)?;
    let level: f64 = (0..nx * nu).map(|i| px[i / nu] * aux.rows()[i] * dbar[i]).sum();
    Ok(WynerZiv { aux, level, ..wz.clone() })
}

/// A kernel perturbation useful for negative checks: moves `shift` of the
/// mass of row `row` from its first support point to its second.
pub fn perturb_kernel(k: &RealFunc, row_len: usize, row: usize, shift: f64) -> Result<RealFunc> {
    let mut v = k.values().to_vec();
    let r = &mut v[row * row_len..(row + 1) * row_len];
    let supp: Vec<usize> = (0..row_len).filter(|&i| r[i] > 0.0).collect();
    if supp.len() < 2 || r[supp[0]] < shift {
        return Err(Error::InvalidInput("row has no room for the perturbation".into()));
    }
    r[supp[0]] -= shift;
    r[supp[1]] += shift;
    RealFunc::new(k.domain().to_vec(), v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probkit::{Alphabet, ProbVec};
    use crate::rdsolver::{blahut_arimoto_rd, wz_binary_family, ChannelCost, LossySc};

    fn hamming(a: &str, b: &str) -> RealFunc {
        RealFunc::from_fn(vec![Alphabet::indexed(a, 2), Alphabet::indexed(b, 2)], |i| (i[0] != i[1]) as u8 as f64)
            .unwrap()
    }

    #[test]
    fn rd_optimum_is_stationary_and_perturbation_is_not() {
        let px = ProbVec::new(Alphabet::indexed("X", 2), vec![0.3, 0.7]).unwrap();
        let d = hamming("X", "Z");
        let s = blahut_arimoto_rd(&px, &d, 0.1).unwrap();
        let inst = |k: CondKernel| {
            CodingInstance::LossySC(LossySc {
                source: px.clone(),
                distortion: d.clone(),
                level: 0.1,
                test_channel: Some(k),
                lambda: Some(s.lambda),
            })
        };
        assert!(first_order_stationarity(&inst(s.test_channel.clone())).unwrap() < 1e-6);
        let moved = perturb_kernel(&s.test_channel.as_func(), 2, 0, 0.01).unwrap();
        let moved = CondKernel::from_func(&moved).unwrap();
        assert!(first_order_stationarity(&inst(moved)).unwrap() > 1e-4);
    }

    #[test]
    fn capacity_input_is_stationary() {
        let w = CondKernel::new(Alphabet::indexed("X", 2), Alphabet::indexed("Y", 2), vec![1.0, 0.0, 0.3, 0.7]).unwrap();
        let cost = RealFunc::new(vec![Alphabet::indexed("X", 2)], vec![0.0, 0.0]).unwrap();
        let inst = CodingInstance::ChannelCost(ChannelCost { channel: w, cost, budget: 1.0, input: None });
        assert!(first_order_stationarity(&inst).unwrap() < 1e-6);
    }

    #[test]
    fn alternating_solver_reaches_stationarity() {
        let fam = wz_binary_family(0.25, 0.1, 0.6).unwrap();
        let wz = fam.instance(6.0);
        let s = stationary_aux_kernel(&wz, 1e-14).unwrap();
        let v = first_order_stationarity(&CodingInstance::WynerZiv(s.clone())).unwrap();
        assert!(v < 1e-9, "violation {v}");
        let before = first_order_stationarity(&CodingInstance::WynerZiv(wz)).unwrap();
        assert!(before > 1e-4);
    }

    #[test]
    fn binary_family_optimum_is_stationary() {
        for &(p, d) in &[(0.25, 0.05), (0.4, 0.1), (0.2, 0.15)] {
            let o = crate::rdsolver::wz_binary_optimize(p, d).unwrap();
            let v = first_order_stationarity(&CodingInstance::WynerZiv(o.family.instance(o.lambda))).unwrap();
            assert!(v < 1e-6, "p={p} D={d}: {v}");
        }
    }
}
