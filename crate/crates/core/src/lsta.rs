//! Level-synchronized tree automata over a pluggable amplitude semiring.
//!
//! States are the integers `0..num_states`. A run picks one choice number per
//! level, shared by every node on that level; choice disjointness makes the
//! transition taken by each node unique.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};

use thiserror::Error;

use crate::amplitude::Semiring;

pub type StateId = u32;

/// Nonempty sorted set of choice numbers.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ChoiceSet(Vec<u32>);

impl ChoiceSet {
    pub fn new<I: IntoIterator<Item = u32>>(it: I) -> Self {
        let set: BTreeSet<u32> = it.into_iter().collect();
        ChoiceSet(set.into_iter().collect())
    }

    pub fn single(c: u32) -> Self {
        ChoiceSet(vec![c])
    }

    pub fn contains(&self, c: u32) -> bool {
        self.0.binary_search(&c).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = u32> + '_ {
        self.0.iter().copied()
    }

    pub fn least(&self) -> u32 {
        self.0.first().copied().unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }
}

impl fmt::Display for ChoiceSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let items: Vec<String> = self.0.iter().map(|c| c.to_string()).collect();
        write!(f, "{{{}}}", items.join(","))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct InternalTransition {
    pub top: StateId,
    pub choices: ChoiceSet,
    pub left: StateId,
    pub right: StateId,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LeafTransition<A> {
    pub top: StateId,
    pub choices: ChoiceSet,
    pub amp: A,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lsta<A> {
    pub num_states: u32,
    pub variables: BTreeSet<String>,
    pub internal: Vec<InternalTransition>,
    pub leaves: Vec<LeafTransition<A>>,
    pub root: StateId,
    /// Number of internal levels of every accepted tree.
    pub qubits: usize,
    /// Debug label per state, kept for diffing against hand-written examples.
    pub names: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum LstaError {
    #[error("state {0} has two transitions sharing choice {1}")]
    ChoiceOverlap(StateId, u32),
    #[error("state {0} is referenced but not declared")]
    DanglingState(StateId),
    #[error("state {0} has a transition with an empty choice set")]
    EmptyChoices(StateId),
    #[error("automaton has no internal or no leaf transitions")]
    MissingTransitions,
    #[error("language has more than {0} states")]
    LimitExceeded(usize),
}

/// Map from basis strings to nonzero amplitudes; qubit 1 is the most
/// significant bit of the key.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StateVector<A> {
    pub n: usize,
    pub amps: BTreeMap<u64, A>,
}

impl<A: Semiring> StateVector<A> {
    pub fn new(n: usize) -> Self {
        assert!(n <= 64, "state vectors are limited to 64 qubits");
        StateVector { n, amps: BTreeMap::new() }
    }

    /// Adds `a` to the amplitude of `basis`, dropping the entry if it cancels.
    pub fn accumulate(&mut self, basis: u64, a: &A) {
        let merged = match self.amps.get(&basis) {
            Some(old) => old.add(a),
            None => a.clone(),
        };
        if merged.is_zero() {
            self.amps.remove(&basis);
        } else {
            self.amps.insert(basis, merged);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.amps.is_empty()
    }

    pub fn get(&self, basis: u64) -> A {
        self.amps.get(&basis).cloned().unwrap_or_else(A::zero)
    }

    pub fn tensor(&self, other: &Self) -> Self {
        let mut out = StateVector::new(self.n + other.n);
        for (x, a) in &self.amps {
            for (y, b) in &other.amps {
                out.accumulate((x << other.n) | y, &a.mul(b));
            }
        }
        out
    }

    /// Reorders qubits: qubit `j` of the result is qubit `perm[j]` of `self`
    /// (both 0-based).
    pub fn permuted(&self, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), self.n);
        let mut out = StateVector::new(self.n);
        for (x, a) in &self.amps {
            let mut y = 0u64;
            for (j, &src) in perm.iter().enumerate() {
                let bit = (x >> (self.n - 1 - src)) & 1;
                y |= bit << (self.n - 1 - j);
            }
            out.amps.insert(y, a.clone());
        }
        out
    }

    pub fn map<B: Semiring>(&self, f: impl Fn(&A) -> B) -> StateVector<B> {
        let mut out = StateVector::new(self.n);
        for (x, a) in &self.amps {
            out.accumulate(*x, &f(a));
        }
        out
    }
}

pub fn basis_string(x: u64, n: usize) -> String {
    (0..n).map(|i| if (x >> (n - 1 - i)) & 1 == 1 { '1' } else { '0' }).collect()
}

impl<A: Semiring> fmt::Display for StateVector<A> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.amps.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self.amps.iter().map(|(x, a)| format!("{a}|{}>", basis_string(*x, self.n))).collect();
        write!(f, "{}", parts.join(" + "))
    }
}

/// Per-state transition indices, used by the searches.
struct Index {
    internal: Vec<Vec<usize>>,
    leaves: Vec<Vec<usize>>,
}

impl<A: Semiring> Lsta<A> {
    pub fn size(&self) -> usize {
        self.internal.len() + self.leaves.len()
    }

    pub fn n_leaves(&self) -> usize {
        self.leaves.iter().map(|l| &l.amp).collect::<BTreeSet<_>>().len()
    }

    pub fn root_transitions(&self) -> impl Iterator<Item = &InternalTransition> {
        self.internal.iter().filter(move |t| t.top == self.root)
    }

    pub fn validate(&self) -> Result<(), LstaError> {
        let check = |s: StateId| if s < self.num_states { Ok(()) } else { Err(LstaError::DanglingState(s)) };
        check(self.root)?;
        if self.leaves.is_empty() || (self.qubits > 0 && self.internal.is_empty()) {
            return Err(LstaError::MissingTransitions);
        }
        let mut seen: BTreeMap<(StateId, u32), ()> = BTreeMap::new();
        let mut claim = |top: StateId, cs: &ChoiceSet| -> Result<(), LstaError> {
            if cs.is_empty() {
                return Err(LstaError::EmptyChoices(top));
            }
            for c in cs.iter() {
                if seen.insert((top, c), ()).is_some() {
                    return Err(LstaError::ChoiceOverlap(top, c));
                }
            }
            Ok(())
        };
        for t in &self.internal {
            check(t.top)?;
            check(t.left)?;
            check(t.right)?;
            claim(t.top, &t.choices)?;
        }
        for t in &self.leaves {
            check(t.top)?;
            claim(t.top, &t.choices)?;
        }
        Ok(())
    }

    fn index(&self) -> Index {
        let n = self.num_states as usize;
        let mut idx = Index { internal: vec![Vec::new(); n], leaves: vec![Vec::new(); n] };
        for (i, t) in self.internal.iter().enumerate() {
            idx.internal[t.top as usize].push(i);
        }
        for (i, t) in self.leaves.iter().enumerate() {
            idx.leaves[t.top as usize].push(i);
        }
        idx
    }

    pub fn map_leaves<B: Semiring>(&self, h: impl Fn(&A) -> B) -> Lsta<B> {
        Lsta {
            num_states: self.num_states,
            variables: self.variables.clone(),
            internal: self.internal.clone(),
            leaves: self
                .leaves
                .iter()
                .map(|l| LeafTransition { top: l.top, choices: l.choices.clone(), amp: h(&l.amp) })
                .collect(),
            root: self.root,
            qubits: self.qubits,
            names: self.names.clone(),
        }
    }

    /// Distinct choices usable by every state of `frontier`, grouped by the
    /// transitions they select. Each group is one distinct run step.
    fn steps(
        &self,
        frontier: &BTreeSet<StateId>,
        by_top: &[Vec<usize>],
        choices_of: impl Fn(usize) -> ChoiceSet,
    ) -> Vec<BTreeMap<StateId, usize>> {
        let mut candidates: Option<BTreeSet<u32>> = None;
        for s in frontier {
            let here: BTreeSet<u32> = by_top[*s as usize].iter().flat_map(|&t| choices_of(t).0).collect();
            candidates = Some(match candidates {
                None => here,
                Some(c) => c.intersection(&here).copied().collect(),
            });
        }
        let mut groups: BTreeSet<Vec<(StateId, usize)>> = BTreeSet::new();
        for c in candidates.unwrap_or_default() {
            let pick: Vec<(StateId, usize)> = frontier
                .iter()
                .map(|s| {
                    let t = by_top[*s as usize]
                        .iter()
                        .copied()
                        .find(|&t| choices_of(t).contains(c))
                        .expect("candidate choice present at every frontier state");
                    (*s, t)
                })
                .collect();
            groups.insert(pick);
        }
        groups.into_iter().map(|g| g.into_iter().collect()).collect()
    }

    /// Visits every distinct run over `n` levels with its leaf amplitudes by
    /// basis position. Stops early when `visit` returns `false`.
    fn for_each_run(&self, n: usize, visit: &mut dyn FnMut(&[&A]) -> bool) {
        let idx = self.index();
        let frontier = vec![self.root];
        self.run_level(&idx, 0, n, frontier, visit);
    }

    fn run_level(
        &self,
        idx: &Index,
        level: usize,
        n: usize,
        frontier: Vec<StateId>,
        visit: &mut dyn FnMut(&[&A]) -> bool,
    ) -> bool {
        let distinct: BTreeSet<StateId> = frontier.iter().copied().collect();
        if level == n {
            for step in self.steps(&distinct, &idx.leaves, |t| self.leaves[t].choices.clone()) {
                let amps: Vec<&A> = frontier.iter().map(|s| &self.leaves[step[s]].amp).collect();
                if !visit(&amps) {
                    return false;
                }
            }
            return true;
        }
        for step in self.steps(&distinct, &idx.internal, |t| self.internal[t].choices.clone()) {
            let mut next = Vec::with_capacity(frontier.len() * 2);
            for s in &frontier {
                let t = &self.internal[step[s]];
                next.push(t.left);
                next.push(t.right);
            }
            if !self.run_level(idx, level + 1, n, next, visit) {
                return false;
            }
        }
        true
    }

    fn vector_of(n: usize, amps: &[&A]) -> StateVector<A> {
        let mut v = StateVector::new(n);
        for (x, a) in amps.iter().enumerate() {
            if !a.is_zero() {
                v.amps.insert(x as u64, (*a).clone());
            }
        }
        v
    }

    /// Every `n`-qubit state of the language, including the zero vector when
    /// some run produces it.
    pub fn enumerate_language(&self, n: usize, limit: usize) -> Result<BTreeSet<StateVector<A>>, LstaError> {
        let mut out = BTreeSet::new();
        let mut over = false;
        self.for_each_run(n, &mut |amps| {
            out.insert(Self::vector_of(n, amps));
            if out.len() > limit {
                over = true;
                return false;
            }
            true
        });
        if over {
            return Err(LstaError::LimitExceeded(limit));
        }
        Ok(out)
    }

    pub fn membership(&self, psi: &StateVector<A>) -> bool {
        self.count_runs_for(psi) > 0
    }

    /// Number of distinct runs whose tree carries `psi`.
    pub fn count_runs_for(&self, psi: &StateVector<A>) -> usize {
        if psi.n != self.qubits {
            return 0;
        }
        let mut count = 0;
        self.for_each_run(psi.n, &mut |amps| {
            if amps.iter().enumerate().all(|(x, a)| **a == psi.get(x as u64)) {
                count += 1;
            }
            true
        });
        count
    }

    /// Bit-exact text form. Transitions are sorted by `(top, min choice)`.
    pub fn to_text(&self, constraint: Option<&str>) -> String {
        enum Line<'a, A> {
            In(&'a InternalTransition),
            Leaf(&'a LeafTransition<A>),
        }
        let mut lines: Vec<(StateId, u32, u8, Line<A>)> = Vec::new();
        for t in &self.internal {
            lines.push((t.top, t.choices.least(), 0, Line::In(t)));
        }
        for t in &self.leaves {
            lines.push((t.top, t.choices.least(), 1, Line::Leaf(t)));
        }
        lines.sort_by_key(|(top, c, kind, _)| (*top, *c, *kind));
        let mut s = String::new();
        writeln!(s, "lsta v1").unwrap();
        writeln!(s, "semiring {}", A::KIND).unwrap();
        writeln!(s, "qubits {}", self.qubits).unwrap();
        let vars: Vec<&str> = self.variables.iter().map(String::as_str).collect();
        if vars.is_empty() {
            writeln!(s, "vars").unwrap();
        } else {
            writeln!(s, "vars {}", vars.join(" ")).unwrap();
        }
        writeln!(s, "root {}", self.root).unwrap();
        for (_, _, _, line) in &lines {
            match line {
                Line::In(t) => writeln!(s, "i {} {} -> {} {}", t.top, t.choices, t.left, t.right).unwrap(),
                Line::Leaf(t) => writeln!(s, "l {} {} -> {}", t.top, t.choices, t.amp).unwrap(),
            }
        }
        if let Some(c) = constraint {
            writeln!(s, "constraint {c}").unwrap();
        }
        s
    }
}

/// States referenced as a child of some transition.
fn child_states<A>(a: &Lsta<A>) -> BTreeSet<StateId> {
    a.internal.iter().flat_map(|t| [t.left, t.right]).collect()
}

/// Set union: a fresh root selects, by its first choice, one root
/// transition of either operand.
pub fn union<A: Semiring>(a: &Lsta<A>, b: &Lsta<A>) -> Lsta<A> {
    assert_eq!(a.qubits, b.qubits, "union of automata over different qubit counts");
    let mut out = Lsta {
        num_states: 0,
        variables: a.variables.union(&b.variables).cloned().collect(),
        internal: Vec::new(),
        leaves: Vec::new(),
        root: 0,
        qubits: a.qubits,
        names: Vec::new(),
    };
    let mut root_internal: Vec<(StateId, StateId)> = Vec::new();
    let mut root_leaves: Vec<A> = Vec::new();
    for src in [a, b] {
        let keep_root = child_states(src).contains(&src.root);
        let mut map: Vec<Option<StateId>> = vec![None; src.num_states as usize];
        for s in 0..src.num_states {
            if s == src.root && !keep_root {
                continue;
            }
            map[s as usize] = Some(out.num_states);
            out.names.push(src.names.get(s as usize).cloned().unwrap_or_default());
            out.num_states += 1;
        }
        let m = |s: StateId| map[s as usize].expect("only the dropped root is unmapped");
        let mut roots: Vec<&InternalTransition> = Vec::new();
        for t in &src.internal {
            if t.top == src.root {
                roots.push(t);
                if !keep_root {
                    continue;
                }
            }
            out.internal.push(InternalTransition {
                top: m(t.top),
                choices: t.choices.clone(),
                left: m(t.left),
                right: m(t.right),
            });
        }
        roots.sort_by_key(|t| t.choices.least());
        root_internal.extend(roots.into_iter().map(|t| (m(t.left), m(t.right))));
        let mut root_leafs: Vec<&LeafTransition<A>> = Vec::new();
        for t in &src.leaves {
            if t.top == src.root {
                root_leafs.push(t);
                if !keep_root {
                    continue;
                }
            }
            out.leaves.push(LeafTransition { top: m(t.top), choices: t.choices.clone(), amp: t.amp.clone() });
        }
        root_leafs.sort_by_key(|t| t.choices.least());
        root_leaves.extend(root_leafs.into_iter().map(|t| t.amp.clone()));
    }
    let root = out.num_states;
    out.num_states += 1;
    out.names.push("r_union".to_string());
    out.root = root;
    for (i, (l, r)) in root_internal.into_iter().enumerate() {
        out.internal.push(InternalTransition {
            top: root,
            choices: ChoiceSet::single(i as u32 + 1),
            left: l,
            right: r,
        });
    }
    for (i, amp) in root_leaves.into_iter().enumerate() {
        out.leaves.push(LeafTransition { top: root, choices: ChoiceSet::single(i as u32 + 1), amp });
    }
    debug_assert!(out.size() <= a.size() + b.size(), "union size bound violated");
    out
}

/// Merges states that only carry leaf transitions and carry identical ones.
fn merge_leaf_states<A: Semiring>(a: &Lsta<A>) -> Lsta<A> {
    let has_internal: BTreeSet<StateId> = a.internal.iter().map(|t| t.top).collect();
    let mut sig: BTreeMap<StateId, Vec<(ChoiceSet, A)>> = BTreeMap::new();
    for t in &a.leaves {
        if !has_internal.contains(&t.top) && t.top != a.root {
            sig.entry(t.top).or_default().push((t.choices.clone(), t.amp.clone()));
        }
    }
    let mut rep_of_sig: BTreeMap<Vec<(ChoiceSet, A)>, StateId> = BTreeMap::new();
    let mut rep: BTreeMap<StateId, StateId> = BTreeMap::new();
    for (s, mut v) in sig {
        v.sort();
        let r = *rep_of_sig.entry(v).or_insert(s);
        rep.insert(s, r);
    }
    let mut map: Vec<Option<StateId>> = vec![None; a.num_states as usize];
    let mut names = Vec::new();
    let mut next = 0;
    for s in 0..a.num_states {
        if rep.get(&s).map(|r| *r != s).unwrap_or(false) {
            continue;
        }
        map[s as usize] = Some(next);
        names.push(a.names.get(s as usize).cloned().unwrap_or_default());
        next += 1;
    }
    let m = |s: StateId| map[*rep.get(&s).unwrap_or(&s) as usize].expect("representative is kept");
    Lsta {
        num_states: next,
        variables: a.variables.clone(),
        internal: a
            .internal
            .iter()
            .map(|t| InternalTransition {
                top: m(t.top),
                choices: t.choices.clone(),
                left: m(t.left),
                right: m(t.right),
            })
            .collect(),
        leaves: a
            .leaves
            .iter()
            .filter(|t| rep.get(&t.top).map(|r| *r == t.top).unwrap_or(true))
            .map(|t| LeafTransition { top: m(t.top), choices: t.choices.clone(), amp: t.amp.clone() })
            .collect(),
        root: m(a.root),
        qubits: a.qubits,
        names,
    }
}

/// Tensor product: every leaf of `a` with value `α` is grafted onto a copy of
/// `b` whose leaves are scaled by `α`. Interface choices encode the pair
/// (leaf choice of `a`, root choice of `b`) above the internal choices of `a`.
pub fn tensor<A: Semiring>(a: &Lsta<A>, b: &Lsta<A>) -> Lsta<A> {
    assert!(a.qubits > 0 && b.qubits > 0, "tensor operands need at least one qubit");
    let bound = a.size() + a.n_leaves() * b.size();
    let a = merge_leaf_states(a);

    let u_in: BTreeSet<u32> = a.internal.iter().flat_map(|t| t.choices.iter()).collect();
    let u_ex: Vec<u32> = a.leaves.iter().flat_map(|t| t.choices.iter()).collect::<BTreeSet<_>>().into_iter().collect();
    let b_roots: Vec<&InternalTransition> = b.root_transitions().collect();
    let u_r: Vec<u32> = b_roots.iter().flat_map(|t| t.choices.iter()).collect::<BTreeSet<_>>().into_iter().collect();
    let base = 1 + u_in.iter().max().copied().unwrap_or(0);
    let width = u_r.len() as u32;
    let pos = |v: &[u32], c: u32| v.binary_search(&c).expect("choice in universe") as u32;
    let f = |x: u32, y: u32| {
        base.checked_add(
            pos(&u_ex, x).checked_mul(width).and_then(|p| p.checked_add(pos(&u_r, y))).expect("choice overflow"),
        )
        .expect("choice overflow")
    };

    let alphas: Vec<A> = a.leaves.iter().map(|l| l.amp.clone()).collect::<BTreeSet<_>>().into_iter().collect();
    let keep_b_root = child_states(b).contains(&b.root);

    let mut out = Lsta {
        num_states: a.num_states,
        variables: a.variables.union(&b.variables).cloned().collect(),
        internal: a.internal.clone(),
        leaves: Vec::new(),
        root: a.root,
        qubits: a.qubits + b.qubits,
        names: a.names.clone(),
    };

    let mut copy_maps: BTreeMap<&A, Vec<Option<StateId>>> = BTreeMap::new();
    for alpha in &alphas {
        let mut map = vec![None; b.num_states as usize];
        for s in 0..b.num_states {
            if s == b.root && !keep_b_root {
                continue;
            }
            map[s as usize] = Some(out.num_states);
            let label = b.names.get(s as usize).cloned().unwrap_or_default();
            out.names.push(format!("{label}^{alpha}"));
            out.num_states += 1;
        }
        let m = |s: StateId| map[s as usize].expect("copied state");
        for t in &b.internal {
            if t.top == b.root && !keep_b_root {
                continue;
            }
            out.internal.push(InternalTransition {
                top: m(t.top),
                choices: t.choices.clone(),
                left: m(t.left),
                right: m(t.right),
            });
        }
        for t in &b.leaves {
            out.leaves.push(LeafTransition { top: m(t.top), choices: t.choices.clone(), amp: alpha.mul(&t.amp) });
        }
        copy_maps.insert(alpha, map);
    }

    for leaf in &a.leaves {
        let map = &copy_maps[&leaf.amp];
        for rt in &b_roots {
            let choices = ChoiceSet::new(
                leaf.choices.iter().flat_map(|x| rt.choices.iter().map(move |y| (x, y))).map(|(x, y)| f(x, y)),
            );
            out.internal.push(InternalTransition {
                top: leaf.top,
                choices,
                left: map[rt.left as usize].expect("copied child"),
                right: map[rt.right as usize].expect("copied child"),
            });
        }
    }
    debug_assert!(out.size() <= bound, "tensor size bound violated: {} > {}", out.size(), bound);
    out
}
