//! Levelwise automaton construction for explicit states, and the two leaf
//! filters that move amplitudes from valuations to tags to polynomials.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::amplitude::{AmplitudePoly, Semiring, TagAmp, ValAmp};
use crate::lsta::{self, ChoiceSet, InternalTransition, LeafTransition, Lsta, StateId, StateVector};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum BuildError {
    #[error("state has no nonzero amplitude")]
    EmptyState,
    #[error("no states to build from")]
    EmptySet,
    #[error("no amplitude recorded for tag {1} of set {0}")]
    MissingLegendEntry(usize, u32),
}

/// Original amplitude of every tagged term, keyed by `(set id, tag)`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TagLegend {
    entries: BTreeMap<(usize, u32), AmplitudePoly>,
}

impl TagLegend {
    pub fn new() -> Self {
        TagLegend::default()
    }

    pub fn insert(&mut self, set: usize, tag: u32, amp: AmplitudePoly) {
        self.entries.insert((set, tag), amp);
    }

    pub fn get(&self, set: usize, tag: u32) -> Option<&AmplitudePoly> {
        self.entries.get(&(set, tag))
    }
}

fn bits_label(x: u64, len: usize) -> String {
    lsta::basis_string(x, len)
}

/// One active-prefix state per level, plus a sink per level `n..1` unless
/// the support is full. Every choice set is `{1}`.
pub fn build_state_lsta<A: Semiring>(psi: &StateVector<A>) -> Result<Lsta<A>, BuildError> {
    let n = psi.n;
    assert!(n >= 1, "states need at least one qubit");
    if psi.is_zero() {
        return Err(BuildError::EmptyState);
    }
    let full = n < 64 && psi.amps.len() as u128 == 1u128 << n;
    let one = ChoiceSet::single(1);
    let mut names = Vec::new();
    let mut internal = Vec::new();
    let mut leaves = Vec::new();
    let fresh = |names: &mut Vec<String>, label: String| -> StateId {
        names.push(label);
        names.len() as StateId - 1
    };

    let mut level: BTreeMap<u64, StateId> = BTreeMap::new();
    for (x, a) in &psi.amps {
        let q = fresh(&mut names, format!("q_{}", bits_label(*x, n)));
        leaves.push(LeafTransition { top: q, choices: one.clone(), amp: a.clone() });
        level.insert(*x, q);
    }
    let mut sink = None;
    if !full {
        let q = fresh(&mut names, format!("q_bot^{n}"));
        leaves.push(LeafTransition { top: q, choices: one.clone(), amp: A::zero() });
        sink = Some(q);
    }
    for l in (0..n).rev() {
        let below = sink;
        if !full && l >= 1 {
            let q = fresh(&mut names, format!("q_bot^{l}"));
            let s = below.expect("sink below");
            internal.push(InternalTransition { top: q, choices: one.clone(), left: s, right: s });
            sink = Some(q);
        }
        let prefixes: Vec<u64> = {
            let mut p: Vec<u64> = level.keys().map(|x| x >> 1).collect();
            p.dedup();
            p
        };
        let mut next = BTreeMap::new();
        for x in prefixes {
            let label = if l == 0 { "q_eps".to_string() } else { format!("q_{}", bits_label(x, l)) };
            let q = fresh(&mut names, label);
            let child = |b: u64| level.get(&((x << 1) | b)).copied().or(below).expect("missing child without sink");
            internal.push(InternalTransition { top: q, choices: one.clone(), left: child(0), right: child(1) });
            next.insert(x, q);
        }
        level = next;
    }
    let root = level[&0];
    let out = Lsta {
        num_states: names.len() as u32,
        variables: Default::default(),
        internal,
        leaves,
        root,
        qubits: n,
        names,
    };
    debug_assert!(out.size() <= (psi.amps.len() + 1) * (n + 1), "state automaton exceeds (N+1)(n+1)");
    Ok(out)
}

/// Left fold of union over the per-state automata.
pub fn build_setq_lsta<A: Semiring>(states: &[StateVector<A>]) -> Result<Lsta<A>, BuildError> {
    let mut acc: Option<Lsta<A>> = None;
    for psi in states {
        let a = build_state_lsta(psi)?;
        acc = Some(match acc {
            None => a,
            Some(prev) => lsta::union(&prev, &a),
        });
    }
    acc.ok_or(BuildError::EmptySet)
}

/// Keeps the terms whose inequalities all hold; an empty list holds.
pub fn filter_f(e: &ValAmp) -> TagAmp {
    TagAmp::from_indices(e.entries().iter().filter(|(_, f)| f.iter().all(|b| *b)).map(|(m, _)| *m))
}

pub fn filter_tau(e: &TagAmp, legend: &TagLegend, set: usize) -> Result<AmplitudePoly, BuildError> {
    let mut acc = AmplitudePoly::zero();
    for m in e.indices() {
        let a = legend.get(set, *m).ok_or(BuildError::MissingLegendEntry(set, *m))?;
        acc = acc.add(a);
    }
    Ok(acc)
}
