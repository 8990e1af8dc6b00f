use crate::error::{Error, Result};

use super::Alphabet;

/// Real-valued function on a product of named alphabets, stored row-major
/// with the last factor varying fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct RealFunc {
    domain: Vec<Alphabet>,
    values: Vec<f64>,
}

/// Calls `f(flat, idx)` for every multi-index of `shape` in row-major order.
pub fn for_each_index(shape: &[usize], mut f: impl FnMut(usize, &[usize])) {
    let total: usize = shape.iter().product();
    let mut idx = vec![0usize; shape.len()];
    for flat in 0..total {
        f(flat, &idx);
        for k in (0..shape.len()).rev() {
            idx[k] += 1;
            if idx[k] < shape[k] {
                break;
            }
            idx[k] = 0;
        }
    }
}

fn check_names(domain: &[Alphabet]) -> Result<()> {
    for (i, a) in domain.iter().enumerate() {
        if domain[..i].iter().any(|b| b.name() == a.name()) {
            return Err(Error::Shape(format!("factor {} appears twice", a.name())));
        }
    }
    Ok(())
}

/// Union of two domains: `a` in order, then the factors of `b` not in `a`.
pub(crate) fn merge_domains(a: &[Alphabet], b: &[Alphabet]) -> Result<Vec<Alphabet>> {
    let mut out = a.to_vec();
    for f in b {
        match a.iter().find(|g| g.name() == f.name()) {
            Some(g) if g != f => {
                return Err(Error::Shape(format!("factor {} has mismatched symbols", f.name())));
            }
            Some(_) => {}
            None => out.push(f.clone()),
        }
    }
    Ok(out)
}

impl RealFunc {
    pub fn new(domain: Vec<Alphabet>, values: Vec<f64>) -> Result<Self> {
        check_names(&domain)?;
        let len: usize = domain.iter().map(Alphabet::size).product();
        if values.len() != len {
            return Err(Error::Shape(format!("expected {len} values, got {}", values.len())));
        }
        Ok(RealFunc { domain, values })
    }

    pub fn from_fn(domain: Vec<Alphabet>, mut f: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        check_names(&domain)?;
        let shape: Vec<usize> = domain.iter().map(Alphabet::size).collect();
        let mut values = Vec::with_capacity(shape.iter().product());
        for_each_index(&shape, |_, idx| values.push(f(idx)));
        Ok(RealFunc { domain, values })
    }

    pub fn constant(domain: Vec<Alphabet>, c: f64) -> Result<Self> {
        Self::from_fn(domain, |_| c)
    }

    pub fn domain(&self) -> &[Alphabet] {
        &self.domain
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn shape(&self) -> Vec<usize> {
        self.domain.iter().map(Alphabet::size).collect()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn names(&self) -> Vec<&str> {
        self.domain.iter().map(Alphabet::name).collect()
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.domain.iter().position(|a| a.name() == name)
    }

    pub fn factor(&self, name: &str) -> Result<&Alphabet> {
        self.domain
            .iter()
            .find(|a| a.name() == name)
            .ok_or_else(|| Error::Shape(format!("no factor named {name}")))
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.domain).fold(0, |acc, (&i, a)| acc * a.size() + i)
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.values[self.flat_index(idx)]
    }

    /// For each cell of `target`, the flat index of the corresponding cell of
    /// `self`. Every factor of `self` must appear in `target` with the same
    /// symbols.
    pub fn broadcast_map(&self, target: &[Alphabet]) -> Result<Vec<usize>> {
        let mut pos = Vec::with_capacity(self.domain.len());
        for a in &self.domain {
            let p = target
                .iter()
                .position(|b| b.name() == a.name())
                .ok_or_else(|| Error::Shape(format!("factor {} missing from target domain", a.name())))?;
            if &target[p] != a {
                return Err(Error::Shape(format!("factor {} has mismatched symbols", a.name())));
            }
            pos.push(p);
        }
        let shape: Vec<usize> = target.iter().map(Alphabet::size).collect();
        let mut map = Vec::with_capacity(shape.iter().product());
        for_each_index(&shape, |_, idx| {
            let mut flat = 0;
            for (a, &p) in self.domain.iter().zip(&pos) {
                flat = flat * a.size() + idx[p];
            }
            map.push(flat);
        });
        Ok(map)
    }

    /// Values broadcast onto `target`.
    pub fn expand_to(&self, target: &[Alphabet]) -> Result<Vec<f64>> {
        Ok(self.broadcast_map(target)?.into_iter().map(|i| self.values[i]).collect())
    }

    /// Same function viewed on a larger domain.
    pub fn broadcast(&self, target: &[Alphabet]) -> Result<RealFunc> {
        RealFunc::new(target.to_vec(), self.expand_to(target)?)
    }

    /// Pointwise combination on the union of both domains.
    pub fn zip_with(&self, other: &RealFunc, op: impl Fn(f64, f64) -> f64) -> Result<RealFunc> {
        let domain = merge_domains(&self.domain, &other.domain)?;
        let a = self.expand_to(&domain)?;
        let b = other.expand_to(&domain)?;
        let values = a.iter().zip(&b).map(|(&x, &y)| op(x, y)).collect();
        RealFunc::new(domain, values)
    }

    pub fn add(&self, other: &RealFunc) -> Result<RealFunc> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &RealFunc) -> Result<RealFunc> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &RealFunc) -> Result<RealFunc> {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn map(&self, op: impl Fn(f64) -> f64) -> RealFunc {
        RealFunc { domain: self.domain.clone(), values: self.values.iter().map(|&v| op(v)).collect() }
    }

    pub fn scale(&self, c: f64) -> RealFunc {
        self.map(|v| c * v)
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Semidirect product `(f o g)(x, y) = f(x) g(x, y)` on the union of the
    /// domains; factors missing from either side are broadcast.
    pub fn semidirect(&self, g: &RealFunc) -> Result<RealFunc> {
        self.mul(g)
    }

    /// `<f, g> = sum f g` with `g` broadcast onto the domain of `f` (or `f`
    /// onto `g` when `f`'s factors are a subset of `g`'s). Cells where `f`
    /// vanishes are skipped, so `g` may hold `NaN` there.
    pub fn inner(&self, g: &RealFunc) -> Result<f64> {
        let (a, b) = if g.domain.iter().all(|x| self.position(x.name()).is_some()) {
            (self.values.clone(), g.expand_to(&self.domain)?)
        } else if self.domain.iter().all(|x| g.position(x.name()).is_some()) {
            (self.expand_to(&g.domain)?, g.values.clone())
        } else {
            return Err(Error::Shape("neither domain contains the other".into()));
        };
        let mut acc = 0.0;
        for (x, y) in a.iter().zip(&b) {
            if *x == 0.0 {
                continue;
            }
            if !y.is_finite() {
                return Err(Error::Undominated("function undefined on a charged cell".into()));
            }
            acc += x * y;
        }
        Ok(acc)
    }

    /// Sum over every factor not listed in `keep`; the result has the
    /// factors of `keep` in that order.
    pub fn marginal(&self, keep: &[&str]) -> Result<RealFunc> {
        let mut dom = Vec::with_capacity(keep.len());
        for name in keep {
            dom.push(self.factor(name)?.clone());
        }
        check_names(&dom)?;
        let probe = RealFunc { domain: dom.clone(), values: vec![0.0; dom.iter().map(Alphabet::size).product()] };
        let map = probe.broadcast_map(&self.domain)?;
        let mut values = probe.values;
        for (v, &j) in self.values.iter().zip(&map) {
            values[j] += v;
        }
        RealFunc::new(dom, values)
    }

    /// Conditional kernel `self(rest | given)`: divides by the marginal on
    /// `given`; cells with zero conditioning mass hold `NaN`.
    pub fn conditional(&self, given: &[&str]) -> Result<RealFunc> {
        let m = self.marginal(given)?;
        let me = m.expand_to(&self.domain)?;
        let values = self.values.iter().zip(&me).map(|(&v, &d)| if d > 0.0 { v / d } else { f64::NAN }).collect();
        RealFunc::new(self.domain.clone(), values)
    }

    /// The same table with factors permuted into `order`.
    pub fn reorder(&self, order: &[&str]) -> Result<RealFunc> {
        if order.len() != self.domain.len() {
            return Err(Error::Shape("reorder must list every factor".into()));
        }
        self.marginal(order)
    }

    /// Renames a factor.
    pub fn rename(&self, from: &str, to: &str) -> Result<RealFunc> {
        let p = self.position(from).ok_or_else(|| Error::Shape(format!("no factor named {from}")))?;
        let mut domain = self.domain.clone();
        domain[p] = domain[p].renamed(to);
        RealFunc::new(domain, self.values.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ab(n: &str, k: usize) -> Alphabet {
        Alphabet::indexed(n, k)
    }

    #[test]
    fn broadcast_and_marginal() {
        let f = RealFunc::new(vec![ab("X", 2)], vec![1.0, 2.0]).unwrap();
        let g = RealFunc::new(vec![ab("Y", 3)], vec![1.0, 10.0, 100.0]).unwrap();
        let h = f.mul(&g).unwrap();
        assert_eq!(h.names(), vec!["X", "Y"]);
        assert_eq!(h.values(), &[1.0, 10.0, 100.0, 2.0, 20.0, 200.0]);
        let m = h.marginal(&["Y"]).unwrap();
        assert_eq!(m.values(), &[3.0, 30.0, 300.0]);
        let t = h.reorder(&["Y", "X"]).unwrap();
        assert_eq!(t.values(), &[1.0, 2.0, 10.0, 20.0, 100.0, 200.0]);
    }

    #[test]
    fn inner_skips_zero_cells_and_rejects_undominated() {
        let f = RealFunc::new(vec![ab("X", 2)], vec![0.0, 1.0]).unwrap();
        let g = RealFunc::new(vec![ab("X", 2)], vec![f64::NAN, 3.0]).unwrap();
        assert_eq!(f.inner(&g).unwrap(), 3.0);
        let f2 = RealFunc::new(vec![ab("X", 2)], vec![1.0, 1.0]).unwrap();
        assert!(matches!(f2.inner(&g), Err(Error::Undominated(_))));
    }

    #[test]
    fn mismatched_shared_factor_is_rejected() {
        let f = RealFunc::new(vec![ab("X", 2)], vec![1.0, 2.0]).unwrap();
        let g = RealFunc::new(vec![ab("X", 3)], vec![1.0, 2.0, 3.0]).unwrap();
        assert!(matches!(f.mul(&g), Err(Error::Shape(_))));
    }
}
