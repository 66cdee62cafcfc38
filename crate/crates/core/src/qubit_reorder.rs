//! Per-qubit slicing of a projected set. Slice `k` holds the `k`-th qubit of
//! every slot in the component; inequalities become per-slice truth values
//! whose disjunction across slices decides the full inequality.

use std::collections::{BTreeMap, BTreeSet};

use crate::amplitude::{ConstraintTable, ValAmp};
use crate::ast::{LengthMap, VarCon};
use crate::lsta::{basis_string, StateVector};
use crate::var_reorder::SetV;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QubitSlice {
    /// 1-based qubit position inside the component's slots.
    pub index: usize,
    pub qubits: usize,
    /// Distinct nonzero states, in set-variable enumeration order.
    pub states: Vec<StateVector<ValAmp>>,
}

/// `Φ_m`: the set predicate's inequalities followed by those of term `m`.
pub fn constraint_table(v: &SetV) -> ConstraintTable {
    let ineq = |c: &&VarCon| matches!(c, VarCon::NeqVar(..) | VarCon::NeqConst(..));
    let shared: Vec<VarCon> = v.predicate.iter().filter(ineq).cloned().collect();
    let mut table = ConstraintTable::new();
    for t in &v.terms {
        let mut phi = shared.clone();
        phi.extend(t.sum_constraints.iter().filter(ineq).cloned());
        table.set(t.tag, phi);
    }
    table
}

/// Common qubit length of the component's variables.
pub fn slice_count(v: &SetV, lengths: &LengthMap) -> usize {
    let all: BTreeSet<usize> = v.vars().iter().map(|x| lengths[*x]).collect();
    assert!(all.len() <= 1, "component mixes variable lengths {all:?}");
    all.into_iter().next().unwrap_or(0)
}

/// Bit assignment to a list of single-qubit variables; the first variable is
/// the most significant bit of the enumeration counter.
struct Assignment<'a> {
    vars: &'a [String],
    mask: u64,
}

impl Assignment<'_> {
    fn get(&self, v: &str) -> Option<bool> {
        let i = self.vars.iter().position(|x| x == v)?;
        Some((self.mask >> (self.vars.len() - 1 - i)) & 1 == 1)
    }
}

fn bit(set: &Assignment, sum: &Assignment, v: &str) -> bool {
    set.get(v).or_else(|| sum.get(v)).unwrap_or_else(|| panic!("variable {v} is not in this slice"))
}

/// Assignment `mask` over `vars` passes the equality and complement filters.
fn admissible(a: &Assignment, eqs: &[&VarCon], links: &BTreeMap<String, String>, k: usize, other: &Assignment) -> bool {
    for c in eqs {
        if let VarCon::EqConst(v, bits) = c {
            if a.get(v).is_some_and(|b| b != bits[k]) {
                return false;
            }
        }
    }
    for (c, b) in links {
        if let Some(x) = a.get(c) {
            let y = a.get(b).or_else(|| other.get(b)).expect("complement base in slice");
            if x == y {
                return false;
            }
        }
    }
    true
}

pub fn expand_qubit_slices(v: &SetV, lengths: &LengthMap) -> Vec<QubitSlice> {
    let ell = slice_count(v, lengths);
    let table = constraint_table(v);
    let width = v.slots.len();
    let empty: Vec<String> = Vec::new();
    let none = Assignment { vars: &empty, mask: 0 };
    let set_eqs: Vec<&VarCon> = v.predicate.iter().filter(|c| matches!(c, VarCon::EqConst(..))).collect();
    assert!(v.set_vars.len() < 63 && v.terms.iter().all(|t| t.sum_vars.len() < 63));
    let mut slices = Vec::new();
    for k in 0..ell {
        let mut seen = BTreeSet::new();
        let mut states = Vec::new();
        for smask in 0..(1u64 << v.set_vars.len()) {
            let set = Assignment { vars: &v.set_vars, mask: smask };
            if !admissible(&set, &set_eqs, &v.links, k, &none) {
                continue;
            }
            let mut psi: StateVector<ValAmp> = StateVector::new(width);
            for t in &v.terms {
                let phi = table.get(t.tag);
                let eqs: Vec<&VarCon> = t.sum_constraints.iter().filter(|c| matches!(c, VarCon::EqConst(..))).collect();
                for tmask in 0..(1u64 << t.sum_vars.len()) {
                    let sum = Assignment { vars: &t.sum_vars, mask: tmask };
                    if !admissible(&sum, &eqs, &v.links, k, &set) {
                        continue;
                    }
                    let valuation: Vec<bool> = phi
                        .iter()
                        .map(|c| match c {
                            VarCon::NeqVar(a, b) => bit(&set, &sum, a) != bit(&set, &sum, b),
                            VarCon::NeqConst(a, bits) => bit(&set, &sum, a) != bits[k],
                            _ => unreachable!("only inequalities enter the table"),
                        })
                        .collect();
                    let mut basis = 0u64;
                    for x in &t.pattern {
                        basis = (basis << 1) | bit(&set, &sum, x) as u64;
                    }
                    psi.accumulate(basis, &ValAmp::single(t.tag, valuation));
                }
            }
            if !psi.is_zero() && seen.insert(psi.clone()) {
                states.push(psi);
            }
        }
        slices.push(QubitSlice { index: k + 1, qubits: width, states });
    }
    slices
}

/// Terms grouped by amplitude, one line per state.
pub fn describe_slice(slice: &QubitSlice, table: &ConstraintTable) -> String {
    let mut out = String::new();
    for psi in &slice.states {
        let mut groups: BTreeMap<&ValAmp, Vec<String>> = BTreeMap::new();
        for (x, a) in &psi.amps {
            groups.entry(a).or_default().push(format!("|{}>", basis_string(*x, psi.n)));
        }
        let parts: Vec<String> =
            groups.iter().map(|(a, kets)| format!("{}({})", table.describe(a), kets.join(" + "))).collect();
        out.push_str(&format!("  slice {}: {{ {} }}\n", slice.index, parts.join(" + ")));
    }
    out
}
