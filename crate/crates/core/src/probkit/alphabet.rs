use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Named finite alphabet with distinct symbols.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Alphabet {
    name: String,
    symbols: Vec<String>,
}

impl Alphabet {
    pub fn new(name: impl Into<String>, symbols: Vec<String>) -> Result<Self> {
        if symbols.is_empty() {
            return invalid("alphabet must be nonempty");
        }
        let mut seen = std::collections::HashSet::new();
        for s in &symbols {
            if !seen.insert(s.as_str()) {
                return invalid(format!("duplicate symbol {s:?}"));
            }
        }
        Ok(Alphabet { name: name.into(), symbols })
    }

    /// Alphabet with symbols `"0"`, `"1"`, ... .
    pub fn indexed(name: impl Into<String>, size: usize) -> Self {
        assert!(size > 0, "alphabet must be nonempty");
        Alphabet { name: name.into(), symbols: (0..size).map(|i| i.to_string()).collect() }
    }

    /// One-symbol alphabet standing in for an absent variable.
    pub fn singleton(name: impl Into<String>) -> Self {
        Alphabet { name: name.into(), symbols: vec!["-".to_string()] }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn size(&self) -> usize {
        self.symbols.len()
    }

    pub fn index_of(&self, symbol: &str) -> Option<usize> {
        self.symbols.iter().position(|s| s == symbol)
    }

    /// Same symbols under another name.
    pub fn renamed(&self, name: impl Into<String>) -> Self {
        Alphabet { name: name.into(), symbols: self.symbols.clone() }
    }
}
