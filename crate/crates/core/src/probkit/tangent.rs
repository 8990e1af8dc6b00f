use crate::error::{invalid, Error, Result};

use super::{CondKernel, ProbVec, RealFunc};

/// The distribution a tangent vector is attached to.
#[derive(Clone, Debug, PartialEq)]
pub enum TangentBase {
    Pmf(ProbVec),
    Kernel(CondKernel),
}

impl TangentBase {
    fn values(&self) -> &[f64] {
        match self {
            TangentBase::Pmf(p) => p.mass(),
            TangentBase::Kernel(k) => k.rows(),
        }
    }

    fn row_len(&self) -> usize {
        match self {
            TangentBase::Pmf(p) => p.len(),
            TangentBase::Kernel(k) => k.to_alphabet().size(),
        }
    }

    pub fn as_func(&self) -> RealFunc {
        match self {
            TangentBase::Pmf(p) => p.as_func(),
            TangentBase::Kernel(k) => k.as_func(),
        }
    }
}

/// Element of `Tan(base)`: dominated by the base and summing to zero along
/// each row.
#[derive(Clone, Debug, PartialEq)]
pub struct TangentVec {
    base: TangentBase,
    delta: Vec<f64>,
}

impl TangentVec {
    pub fn new(base: TangentBase, delta: Vec<f64>) -> Result<Self> {
        let vals = base.values();
        if delta.len() != vals.len() {
            return Err(Error::Shape("tangent vector length differs from its base".into()));
        }
        if !is_dominated(&delta, vals)? {
            return invalid("tangent vector is not dominated by its base");
        }
        for row in delta.chunks(base.row_len()) {
            let s: f64 = row.iter().sum();
            let scale: f64 = row.iter().map(|v| v.abs()).sum::<f64>().max(1.0);
            if s.abs() > 1e-12 * scale {
                return invalid(format!("tangent row sums to {s:e}"));
            }
        }
        Ok(TangentVec { base, delta })
    }

    pub fn base(&self) -> &TangentBase {
        &self.base
    }

    pub fn delta(&self) -> &[f64] {
        &self.delta
    }

    pub fn as_func(&self) -> RealFunc {
        RealFunc::new(self.base.as_func().domain().to_vec(), self.delta.clone()).expect("shape checked")
    }
}

/// `f << g`: `f` vanishes wherever `g` does.
pub fn is_dominated(f: &[f64], g: &[f64]) -> Result<bool> {
    if f.len() != g.len() {
        return Err(Error::Shape("domination check on tables of different length".into()));
    }
    Ok(f.iter().zip(g).all(|(&a, &b)| b != 0.0 || a == 0.0))
}

/// Basis of the tangent space of a row-stochastic table: for each row, the
/// differences `e_i - e_j` of adjacent support points. The dimension is
/// `sum_rows (|support| - 1)`.
pub fn tangent_deltas(values: &[f64], row_len: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    for (r, row) in values.chunks(row_len).enumerate() {
        let supp: Vec<usize> = (0..row.len()).filter(|&i| row[i] > 0.0).collect();
        for w in supp.windows(2) {
            let mut d = vec![0.0; values.len()];
            d[r * row_len + w[0]] = 1.0;
            d[r * row_len + w[1]] = -1.0;
            out.push(d);
        }
    }
    out
}

/// Tangent basis of a pmf or kernel.
pub fn tangent_basis(base: &TangentBase) -> Vec<TangentVec> {
    tangent_deltas(base.values(), base.row_len())
        .into_iter()
        .map(|delta| TangentVec { base: base.clone(), delta })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probkit::Alphabet;

    #[test]
    fn basis_dimension_counts_support() {
        let k = CondKernel::new(
            Alphabet::indexed("X", 2),
            Alphabet::indexed("U", 3),
            vec![0.5, 0.0, 0.5, 0.2, 0.3, 0.5],
        )
        .unwrap();
        let b = tangent_basis(&TangentBase::Kernel(k.clone()));
        assert_eq!(b.len(), 1 + 2);
        for v in &b {
            assert!(TangentVec::new(TangentBase::Kernel(k.clone()), v.delta().to_vec()).is_ok());
        }
        let bad = vec![0.0, 1.0, -1.0, 0.0, 0.0, 0.0];
        assert!(TangentVec::new(TangentBase::Kernel(k), bad).is_err());
    }
}
