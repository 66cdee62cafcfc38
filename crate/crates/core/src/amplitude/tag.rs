//! Tag amplitudes: sets of source-term indices.
//!
//! `τ_m·τ_n = τ_m` when `m = n` and `τ₀` otherwise, so a sum of tags is an
//! index set, addition is union and multiplication is intersection. The empty
//! set is `τ₀`.

use std::collections::BTreeSet;
use std::fmt;

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct TagAmp(BTreeSet<u32>);

impl TagAmp {
    pub fn zero() -> Self {
        TagAmp::default()
    }

    pub fn single(m: u32) -> Self {
        TagAmp([m].into_iter().collect())
    }

    pub fn from_indices<I: IntoIterator<Item = u32>>(it: I) -> Self {
        TagAmp(it.into_iter().collect())
    }

    pub fn indices(&self) -> &BTreeSet<u32> {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn add(&self, other: &Self) -> Self {
        TagAmp(self.0.union(&other.0).copied().collect())
    }

    pub fn mul(&self, other: &Self) -> Self {
        TagAmp(self.0.intersection(&other.0).copied().collect())
    }
}

impl fmt::Display for TagAmp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let items: Vec<String> = self.0.iter().map(|m| m.to_string()).collect();
        write!(f, "{{{}}}", items.join(","))
    }
}

impl fmt::Debug for TagAmp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}
