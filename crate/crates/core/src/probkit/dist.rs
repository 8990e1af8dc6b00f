use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

use super::{Alphabet, RealFunc, SUM_TOL};

/// Probability mass function on one alphabet.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TableWire", into = "TableWire")]
pub struct ProbVec {
    alphabet: Alphabet,
    mass: Vec<f64>,
}

/// Conditional pmf `P(to | from)` stored row-major (one row per `from`
/// symbol).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TableWire", into = "TableWire")]
pub struct CondKernel {
    from: Alphabet,
    to: Alphabet,
    rows: Vec<f64>,
}

fn check_mass(values: &[f64]) -> Result<()> {
    for &v in values {
        if !(v >= 0.0) || !v.is_finite() {
            return invalid(format!("negative or non-finite mass {v}"));
        }
    }
    let s: f64 = values.iter().sum();
    if (s - 1.0).abs() > SUM_TOL {
        return invalid(format!("mass sums to {s}, off by {:e}", s - 1.0));
    }
    Ok(())
}

impl ProbVec {
    /// Validating constructor: entries nonnegative, sum within 1e-12 of one.
    pub fn new(alphabet: Alphabet, mass: Vec<f64>) -> Result<Self> {
        if mass.len() != alphabet.size() {
            return Err(Error::Shape(format!("{} masses for {} symbols", mass.len(), alphabet.size())));
        }
        check_mass(&mass)?;
        Ok(ProbVec { alphabet, mass })
    }

    /// Renormalizing constructor for nonnegative weights with positive sum.
    pub fn normalized(alphabet: Alphabet, weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|&w| !(w >= 0.0) || !w.is_finite()) {
            return invalid("weights must be finite and nonnegative");
        }
        let s: f64 = weights.iter().sum();
        if s <= 0.0 {
            return invalid("weights sum to zero");
        }
        Self::new(alphabet, weights.into_iter().map(|w| w / s).collect())
    }

    pub fn uniform(alphabet: Alphabet) -> Self {
        let k = alphabet.size();
        ProbVec { alphabet, mass: vec![1.0 / k as f64; k] }
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn len(&self) -> usize {
        self.mass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mass.is_empty()
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.mass.len()).filter(|&i| self.mass[i] > 0.0).collect()
    }

    pub fn as_func(&self) -> RealFunc {
        RealFunc::new(vec![self.alphabet.clone()], self.mass.clone()).expect("shape checked")
    }

    pub fn from_func(f: &RealFunc) -> Result<Self> {
        if f.domain().len() != 1 {
            return Err(Error::Shape("a pmf has exactly one factor".into()));
        }
        Self::new(f.domain()[0].clone(), f.values().to_vec())
    }

    pub fn renamed(&self, name: &str) -> ProbVec {
        ProbVec { alphabet: self.alphabet.renamed(name), mass: self.mass.clone() }
    }
}

impl CondKernel {
    /// Validating constructor: every row is a pmf.
    pub fn new(from: Alphabet, to: Alphabet, rows: Vec<f64>) -> Result<Self> {
        if rows.len() != from.size() * to.size() {
            return Err(Error::Shape(format!("{} entries for a {}x{} kernel", rows.len(), from.size(), to.size())));
        }
        for r in rows.chunks(to.size()) {
            check_mass(r)?;
        }
        Ok(CondKernel { from, to, rows })
    }

    /// Deterministic kernel `y = map[x]`.
    pub fn deterministic(from: Alphabet, to: Alphabet, map: &[usize]) -> Result<Self> {
        let mut rows = vec![0.0; from.size() * to.size()];
        for (x, &y) in map.iter().enumerate() {
            if y >= to.size() {
                return invalid("deterministic map out of range");
            }
            rows[x * to.size() + y] = 1.0;
        }
        Self::new(from, to, rows)
    }

    /// Binary symmetric channel with crossover `p` between two alphabets of
    /// size two.
    pub fn bsc(from: Alphabet, to: Alphabet, p: f64) -> Result<Self> {
        Self::new(from, to, vec![1.0 - p, p, p, 1.0 - p])
    }

    pub fn from_alphabet(&self) -> &Alphabet {
        &self.from
    }

    pub fn to_alphabet(&self) -> &Alphabet {
        &self.to
    }

    pub fn rows(&self) -> &[f64] {
        &self.rows
    }

    pub fn row(&self, x: usize) -> &[f64] {
        let k = self.to.size();
        &self.rows[x * k..(x + 1) * k]
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.rows[x * self.to.size() + y]
    }

    pub fn as_func(&self) -> RealFunc {
        RealFunc::new(vec![self.from.clone(), self.to.clone()], self.rows.clone()).expect("shape checked")
    }

    pub fn from_func(f: &RealFunc) -> Result<Self> {
        if f.domain().len() != 2 {
            return Err(Error::Shape("a kernel has exactly two factors".into()));
        }
        Self::new(f.domain()[0].clone(), f.domain()[1].clone(), f.values().to_vec())
    }

    /// Output pmf under input `p`.
    pub fn push(&self, p: &ProbVec) -> Result<ProbVec> {
        if p.alphabet() != &self.from {
            return Err(Error::Shape("input pmf does not match kernel input".into()));
        }
        let k = self.to.size();
        let mut out = vec![0.0; k];
        for (x, &px) in p.mass().iter().enumerate() {
            for y in 0..k {
                out[y] += px * self.get(x, y);
            }
        }
        ProbVec::normalized(self.to.clone(), out)
    }

    pub fn renamed(&self, from: &str, to: &str) -> CondKernel {
        CondKernel { from: self.from.renamed(from), to: self.to.renamed(to), rows: self.rows.clone() }
    }
}

/// Empirical type of a symbol sequence.
pub fn empirical_type(seq: &[&str], alphabet: &Alphabet) -> Result<ProbVec> {
    if seq.is_empty() {
        return invalid("empty sequence has no type");
    }
    let mut idx = Vec::with_capacity(seq.len());
    for s in seq {
        idx.push(alphabet.index_of(s).ok_or_else(|| Error::InvalidInput(format!("symbol {s:?} not in alphabet")))?);
    }
    empirical_type_indices(&idx, alphabet)
}

/// Empirical type of a sequence of symbol indices.
pub fn empirical_type_indices(seq: &[usize], alphabet: &Alphabet) -> Result<ProbVec> {
    if seq.is_empty() {
        return invalid("empty sequence has no type");
    }
    let mut counts = vec![0.0; alphabet.size()];
    for &i in seq {
        if i >= counts.len() {
            return invalid("symbol index out of range");
        }
        counts[i] += 1.0;
    }
    let n = seq.len() as f64;
    Ok(ProbVec { alphabet: alphabet.clone(), mass: counts.into_iter().map(|c| c / n).collect() })
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum Sym {
    S(String),
    I(i64),
}

impl Sym {
    fn text(self) -> String {
        match self {
            Sym::S(s) => s,
            Sym::I(i) => i.to_string(),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum AlphabetWire {
    Flat(Vec<Sym>),
    Product(Vec<Vec<Sym>>),
}

/// JSON form `{"alphabet": [...], "values": [...]}`; kernels and
/// multi-factor functions use a list of symbol lists and row-major values.
/// An optional `"names"` list names the factors.
#[derive(Serialize, Deserialize)]
pub(crate) struct TableWire {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    names: Option<Vec<String>>,
    alphabet: AlphabetWire,
    values: Vec<f64>,
}

impl TableWire {
    pub(crate) fn into_func(self, default_names: &[&str]) -> Result<RealFunc> {
        let lists: Vec<Vec<String>> = match self.alphabet {
            AlphabetWire::Flat(v) => vec![v.into_iter().map(Sym::text).collect()],
            AlphabetWire::Product(v) => v.into_iter().map(|l| l.into_iter().map(Sym::text).collect()).collect(),
        };
        let names: Vec<String> = match self.names {
            Some(n) => n,
            None => (0..lists.len())
                .map(|i| default_names.get(i).map(|s| s.to_string()).unwrap_or_else(|| format!("F{i}")))
                .collect(),
        };
        if names.len() != lists.len() {
            return Err(Error::Shape("names and alphabet lists differ in length".into()));
        }
        let domain = names.into_iter().zip(lists).map(|(n, s)| Alphabet::new(n, s)).collect::<Result<Vec<_>>>()?;
        RealFunc::new(domain, self.values)
    }

    pub(crate) fn from_func(f: &RealFunc) -> TableWire {
        let names = Some(f.names().into_iter().map(String::from).collect());
        let alphabet = if f.domain().len() == 1 {
            AlphabetWire::Flat(f.domain()[0].symbols().iter().cloned().map(Sym::S).collect())
        } else {
            AlphabetWire::Product(
                f.domain().iter().map(|a| a.symbols().iter().cloned().map(Sym::S).collect()).collect(),
            )
        };
        TableWire { names, alphabet, values: f.values().to_vec() }
    }
}

impl TryFrom<TableWire> for ProbVec {
    type Error = Error;
    fn try_from(w: TableWire) -> Result<Self> {
        ProbVec::from_func(&w.into_func(&["X"])?)
    }
}

impl From<ProbVec> for TableWire {
    fn from(p: ProbVec) -> Self {
        TableWire::from_func(&p.as_func())
    }
}

impl TryFrom<TableWire> for CondKernel {
    type Error = Error;
    fn try_from(w: TableWire) -> Result<Self> {
        CondKernel::from_func(&w.into_func(&["X", "Y"])?)
    }
}

impl From<CondKernel> for TableWire {
    fn from(k: CondKernel) -> Self {
        TableWire::from_func(&k.as_func())
    }
}

impl Serialize for RealFunc {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        TableWire::from_func(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for RealFunc {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        TableWire::deserialize(d)?.into_func(&[]).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        let a = Alphabet::indexed("X", 2);
        assert!(ProbVec::new(a.clone(), vec![0.5, 0.5 + 1e-13]).is_ok());
        assert!(ProbVec::new(a.clone(), vec![0.5, 0.5 + 1e-10]).is_err());
        assert!(ProbVec::new(a.clone(), vec![1.2, -0.2]).is_err());
        let p = ProbVec::normalized(a, vec![1.0, 3.0]).unwrap();
        assert_eq!(p.mass(), &[0.25, 0.75]);
    }

    #[test]
    fn json_roundtrip() {
        let p: ProbVec = serde_json::from_str(r#"{"alphabet": ["a", "b"], "values": [0.25, 0.75]}"#).unwrap();
        assert_eq!(p.alphabet().name(), "X");
        let k: CondKernel =
            serde_json::from_str(r#"{"alphabet": [[0, 1], [0, 1]], "values": [0.9, 0.1, 0.1, 0.9]}"#).unwrap();
        assert_eq!(k.get(1, 1), 0.9);
        let back: CondKernel = serde_json::from_str(&serde_json::to_string(&k).unwrap()).unwrap();
        assert_eq!(back, k);
        assert!(serde_json::from_str::<ProbVec>(r#"{"alphabet": ["a"], "values": [0.2, 0.8]}"#).is_err());
    }

    #[test]
    fn types_of_sequences() {
        let a = Alphabet::indexed("X", 3);
        let t = empirical_type_indices(&[0, 2, 2, 1], &a).unwrap();
        assert_eq!(t.mass(), &[0.25, 0.25, 0.5]);
        assert!(empirical_type(&["0", "7"], &a).is_err());
    }
}
