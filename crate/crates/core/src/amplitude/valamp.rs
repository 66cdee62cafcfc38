//! Valuation-dependent amplitudes.
//!
//! A value maps each surviving term index `m` to a truth assignment over that
//! term's inequality list `Φ_m`. The assignment is a vector aligned with the
//! [`ConstraintTable`] entry for `m`; values are only combined when they come
//! from one table.

use std::collections::BTreeMap;
use std::fmt;

use crate::ast::VarCon;

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct ValAmp(BTreeMap<u32, Vec<bool>>);

fn or_vec(x: &[bool], y: &[bool]) -> Vec<bool> {
    debug_assert_eq!(x.len(), y.len(), "valuations over different constraint lists");
    x.iter().zip(y).map(|(a, b)| *a || *b).collect()
}

impl ValAmp {
    pub fn zero() -> Self {
        ValAmp::default()
    }

    pub fn single(m: u32, valuation: Vec<bool>) -> Self {
        let mut map = BTreeMap::new();
        map.insert(m, valuation);
        ValAmp(map)
    }

    pub fn entries(&self) -> &BTreeMap<u32, Vec<bool>> {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    /// Union of indices; pointwise OR where both sides carry `m`.
    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.0.clone();
        for (m, f) in &other.0 {
            let merged = match out.get(m) {
                Some(g) => or_vec(g, f),
                None => f.clone(),
            };
            out.insert(*m, merged);
        }
        ValAmp(out)
    }

    /// Intersection of indices with pointwise OR.
    pub fn mul(&self, other: &Self) -> Self {
        let out = self.0.iter().filter_map(|(m, f)| other.0.get(m).map(|g| (*m, or_vec(f, g)))).collect();
        ValAmp(out)
    }
}

impl fmt::Display for ValAmp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let items: Vec<String> = self
            .0
            .iter()
            .map(|(m, v)| {
                let bits: String = v.iter().map(|b| if *b { 'T' } else { 'F' }).collect();
                format!("{m}:{bits}")
            })
            .collect();
        write!(f, "{{{}}}", items.join(","))
    }
}

impl fmt::Debug for ValAmp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Per-term inequality lists `Φ_m` shared by every value of one slice family.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct ConstraintTable {
    phi: BTreeMap<u32, Vec<VarCon>>,
}

impl ConstraintTable {
    pub fn new() -> Self {
        ConstraintTable::default()
    }

    pub fn set(&mut self, m: u32, constraints: Vec<VarCon>) {
        self.phi.insert(m, constraints);
    }

    pub fn get(&self, m: u32) -> &[VarCon] {
        self.phi.get(&m).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn terms(&self) -> impl Iterator<Item = (&u32, &Vec<VarCon>)> {
        self.phi.iter()
    }

    /// `{f1:{p≠z↦T, p≠q↦F}}`-style rendering of a value against this table.
    pub fn describe(&self, v: &ValAmp) -> String {
        let items: Vec<String> = v
            .entries()
            .iter()
            .map(|(m, bits)| {
                let body: Vec<String> = self
                    .get(*m)
                    .iter()
                    .zip(bits)
                    .map(|(c, b)| format!("{}->{}", c, if *b { 'T' } else { 'F' }))
                    .collect();
                format!("f{m}:{{{}}}", body.join(", "))
            })
            .collect();
        format!("{{{}}}", items.join(", "))
    }
}
