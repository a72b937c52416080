use serde::{Deserialize, Serialize};

use super::{LatticeTower, TowerElement};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Deduplicated store of function payloads referenced by index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bundle<E> {
    pub functions: Vec<E>,
}

impl<E> Default for Bundle<E> {
    fn default() -> Self {
        Self { functions: Vec::new() }
    }
}

impl<E: PartialEq + Clone> Bundle<E> {
    /// Stores `f` unless an equal payload is present; returns its index.
    pub fn add(&mut self, f: &E) -> usize {
        if let Some(i) = self.functions.iter().position(|g| g == f) {
            return i;
        }
        self.functions.push(f.clone());
        self.functions.len() - 1
    }

    pub fn get(&self, i: usize) -> Result<&E> {
        self.functions.get(i).ok_or_else(|| Error::Parse(format!("bundle has no function {i}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairRef {
    pub level: usize,
    pub lower_ref: usize,
    pub upper_ref: usize,
}

/// Serialized form of a [`TowerElement`]; payloads live in a [`Bundle`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct TowerElementDoc<S> {
    pub depth: usize,
    pub pairs: Vec<PairRef>,
    pub gap: S,
    pub tail: Vec<S>,
}

impl<E: PartialEq + Clone, S: Scalar> TowerElement<E, S> {
    pub fn to_doc(&self, bundle: &mut Bundle<E>) -> TowerElementDoc<S> {
        let pairs = self
            .pairs
            .iter()
            .enumerate()
            .map(|(level, (l, u))| PairRef { level, lower_ref: bundle.add(l), upper_ref: bundle.add(u) })
            .collect();
        TowerElementDoc { depth: self.depth(), pairs, gap: self.gap, tail: self.tail.clone() }
    }

    /// Rebuilds and re-checks an element; stored gaps are recomputed.
    pub fn from_doc<T: LatticeTower<Elem = E, Scalar = S>>(
        tower: &T,
        doc: &TowerElementDoc<S>,
        bundle: &Bundle<E>,
    ) -> Result<Self> {
        if doc.pairs.len() != doc.depth || doc.pairs.iter().enumerate().any(|(i, p)| p.level != i) {
            return Err(Error::Parse("tower element levels must be 0..depth in order".into()));
        }
        let pairs = doc
            .pairs
            .iter()
            .map(|p| Ok((bundle.get(p.lower_ref)?.clone(), bundle.get(p.upper_ref)?.clone())))
            .collect::<Result<Vec<_>>>()?;
        let element = Self::from_pairs(tower, pairs)?;
        element.check(tower)?;
        Ok(element)
    }
}
