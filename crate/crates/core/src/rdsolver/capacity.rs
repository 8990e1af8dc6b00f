use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::probkit::{CondKernel, ProbVec, RealFunc};

use super::blahut::MAX_ITERATIONS;

/// Capacity-cost solution.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CapacitySolution {
    pub capacity: f64,
    pub input: ProbVec,
    /// Cost multiplier (zero when the budget is slack).
    pub mu: f64,
    pub duality_gap: f64,
    pub iterations: usize,
}

struct CapPoint {
    p: Vec<f64>,
    info: f64,
    cost: f64,
    gap: f64,
    iterations: usize,
}

fn divergences(w: &CondKernel, p: &[f64]) -> Vec<f64> {
    let ny = w.to_alphabet().size();
    let mut q = vec![0.0; ny];
    for (x, &px) in p.iter().enumerate() {
        for y in 0..ny {
            q[y] += px * w.get(x, y);
        }
    }
    (0..p.len())
        .map(|x| {
            w.row(x).iter().zip(&q).filter(|(&a, _)| a > 0.0).map(|(&a, &b)| a * (a / b).log2()).sum::<f64>()
        })
        .collect()
}

/// Blahut-Arimoto for `max I(X;Y) - mu E d(X)` over inputs supported on
/// `allowed`.
fn ba_capacity(w: &CondKernel, cost: &[f64], mu: f64, allowed: &[bool]) -> CapPoint {
    let nx = cost.len();
    let k = allowed.iter().filter(|&&a| a).count() as f64;
    let mut p: Vec<f64> = allowed.iter().map(|&a| if a { 1.0 / k } else { 0.0 }).collect();
    let mut gap = f64::INFINITY;
    let mut it = 0;
    while it < MAX_ITERATIONS {
        it += 1;
        let dv = divergences(w, &p);
        let score: Vec<f64> = (0..nx).map(|x| dv[x] - mu * cost[x]).collect();
        let best = (0..nx).filter(|&x| allowed[x]).map(|x| score[x]).fold(f64::NEG_INFINITY, f64::max);
        let avg: f64 = (0..nx).map(|x| p[x] * score[x]).sum();
        gap = best - avg;
        if gap <= 1e-13 {
            break;
        }
        let mut next: Vec<f64> = (0..nx).map(|x| if allowed[x] { p[x] * (score[x] - best).exp2() } else { 0.0 }).collect();
        let s: f64 = next.iter().sum();
        next.iter_mut().for_each(|v| *v /= s);
        p = next;
    }
    let dv = divergences(w, &p);
    let info = (0..nx).map(|x| p[x] * dv[x]).sum::<f64>().max(0.0);
    let c = (0..nx).map(|x| p[x] * cost[x]).sum();
    CapPoint { p, info, cost: c, gap: gap.max(0.0), iterations: it }
}

/// `C(D) = max I(X;Y)` over inputs with `E d(X) <= budget`.
pub fn capacity_cost(channel: &CondKernel, cost: &RealFunc, budget: f64) -> Result<CapacitySolution> {
    if cost.domain().len() != 1 || &cost.domain()[0] != channel.from_alphabet() {
        return Err(Error::Shape("cost must be a function of the channel input".into()));
    }
    let c = cost.values();
    let cmin = c.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(budget >= cmin - 1e-15) {
        return Err(Error::Domain(format!("budget {budget} below the minimum cost {cmin}")));
    }
    let nx = c.len();
    let finish = |pt: CapPoint, mu: f64| -> Result<CapacitySolution> {
        if pt.gap > 1e-8 {
            return Err(Error::Convergence { iterations: pt.iterations, detail: format!("duality gap {:e}", pt.gap) });
        }
        Ok(CapacitySolution {
            capacity: pt.info,
            input: ProbVec::normalized(channel.from_alphabet().clone(), pt.p)?,
            mu,
            duality_gap: pt.gap,
            iterations: pt.iterations,
        })
    };
    if (budget - cmin).abs() <= 1e-15 {
        let allowed: Vec<bool> = c.iter().map(|&v| v <= cmin).collect();
        return finish(ba_capacity(channel, c, 0.0, &allowed), f64::INFINITY);
    }
    let all = vec![true; nx];
    let free = ba_capacity(channel, c, 0.0, &all);
    if free.cost <= budget + 1e-12 {
        return finish(free, 0.0);
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    while ba_capacity(channel, c, hi, &all).cost > budget {
        lo = hi;
        hi *= 2.0;
        if hi > 1e8 {
            return Err(Error::Convergence { iterations: 0, detail: "cost multiplier bracket diverged".into() });
        }
    }
    for _ in 0..200 {
        if hi - lo <= 1e-14 * hi.max(1.0) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if ba_capacity(channel, c, mid, &all).cost > budget {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mu = 0.5 * (lo + hi);
    finish(ba_capacity(channel, c, mu, &all), mu)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probkit::{entropy, Alphabet};

    #[test]
    fn bsc_capacity_unconstrained() {
        let w = CondKernel::bsc(Alphabet::indexed("X", 2), Alphabet::indexed("Y", 2), 0.11).unwrap();
        let cost = RealFunc::new(vec![Alphabet::indexed("X", 2)], vec![0.0, 1.0]).unwrap();
        let s = capacity_cost(&w, &cost, 1.0).unwrap();
        assert!((s.capacity - (1.0 - entropy(&[0.11, 0.89]))).abs() < 1e-8);
        assert_eq!(s.mu, 0.0);
    }

    #[test]
    fn cost_constraint_binds() {
        let w = CondKernel::bsc(Alphabet::indexed("X", 2), Alphabet::indexed("Y", 2), 0.11).unwrap();
        let cost = RealFunc::new(vec![Alphabet::indexed("X", 2)], vec![0.0, 1.0]).unwrap();
        let s = capacity_cost(&w, &cost, 0.2).unwrap();
        // With input weight 0.2 on the costly symbol: H(0.2 * 0.11) - H(0.11).
        let a = 0.2 * 0.89 + 0.8 * 0.11;
        let expect = entropy(&[a, 1.0 - a]) - entropy(&[0.11, 0.89]);
        assert!((s.capacity - expect).abs() < 1e-8);
        assert!((s.input.mass()[1] - 0.2).abs() < 1e-8);
        let z = capacity_cost(&w, &cost, 0.0).unwrap();
        assert!(z.capacity.abs() < 1e-12);
        assert!(matches!(capacity_cost(&w, &cost, -0.1), Err(Error::Domain(_))));
    }
}
