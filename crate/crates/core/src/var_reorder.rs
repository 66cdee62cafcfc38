//! Slot dependency analysis and projection of each aligned set onto the
//! connected components of the dependency graph.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::ast::{LengthMap, VarCon};
use crate::preprocess::SetP;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ReorderError {
    #[error("variable {0} occurs in no ket and is not tied to one by an inequality or complement")]
    UnanchoredVariable(String),
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum EdgeReason {
    Recurrence(String),
    Inequality(String, String),
    Complement(String, String),
}

impl fmt::Display for EdgeReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EdgeReason::Recurrence(v) => write!(f, "var {v}"),
            EdgeReason::Inequality(u, v) => write!(f, "{u}!={v}"),
            EdgeReason::Complement(c, b) => write!(f, "{c}=~{b}"),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SlotDependencyGraph {
    pub slots: Vec<usize>,
    pub edges: BTreeMap<(usize, usize), BTreeSet<EdgeReason>>,
}

impl SlotDependencyGraph {
    fn add(&mut self, a: usize, b: usize, why: EdgeReason) {
        if a != b {
            self.edges.entry((a.min(b), a.max(b))).or_default().insert(why);
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SlotOrder {
    pub components: Vec<Vec<usize>>,
}

impl SlotOrder {
    pub fn flat(&self) -> Vec<usize> {
        self.components.iter().flatten().copied().collect()
    }
}

impl fmt::Display for SlotOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .components
            .iter()
            .map(|c| format!("[{}]", c.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(",")))
            .collect();
        write!(f, "[{}]", parts.join(","))
    }
}

fn tied_slots(sp: &SetP, seg_slots: &[usize]) -> BTreeMap<String, BTreeSet<usize>> {
    let mut slots: BTreeMap<String, BTreeSet<usize>> = BTreeMap::new();
    for t in &sp.terms {
        for (i, v) in t.pattern.iter().enumerate() {
            slots.entry(v.clone()).or_default().insert(seg_slots[i]);
        }
    }
    let mut ties: Vec<(String, String)> = sp
        .constraints()
        .filter_map(|c| match c {
            VarCon::NeqVar(u, v) => Some((u.clone(), v.clone())),
            _ => None,
        })
        .collect();
    ties.extend(sp.links.iter().map(|(c, b)| (c.clone(), b.clone())));
    let placed: BTreeSet<String> = slots.keys().cloned().collect();
    loop {
        let mut changed = false;
        for (u, v) in &ties {
            for (x, y) in [(u, v), (v, u)] {
                if placed.contains(x) {
                    continue;
                }
                if let Some(from) = slots.get(y).cloned() {
                    let entry = slots.entry(x.clone()).or_default();
                    let before = entry.len();
                    entry.extend(from);
                    changed |= entry.len() != before;
                }
            }
        }
        if !changed {
            break;
        }
    }
    slots
}

/// Slots occupied by every variable of `sp`. A variable found in no pattern
/// takes the slots of the variables it is tied to by `≠` or a complement
/// link; one tied to nothing is dropped when only length constraints
/// mention it.
pub fn variable_slots(sp: &SetP, seg_slots: &[usize]) -> Result<BTreeMap<String, BTreeSet<usize>>, ReorderError> {
    let slots = tied_slots(sp, seg_slots);
    for v in &sp.set_vars {
        if slots.contains_key(v) {
            continue;
        }
        let constrained = sp.constraints().any(|c| !matches!(c, VarCon::Len(..)) && c.vars().contains(&v.as_str()))
            || sp.links.iter().any(|(c, b)| c == v || b == v);
        if constrained {
            return Err(ReorderError::UnanchoredVariable(v.clone()));
        }
    }
    Ok(slots)
}

/// Removes set variables that no slot reaches, together with the predicate
/// constraints on them. Those constraints mention no other variable, so they
/// only decide whether the set is empty; the second result says whether they
/// are satisfiable.
pub fn detach_unplaced(sp: &SetP, seg_slots: &[usize], lengths: &LengthMap) -> (SetP, bool) {
    let slots = tied_slots(sp, seg_slots);
    let detached: Vec<String> = sp.set_vars.iter().filter(|v| !slots.contains_key(*v)).cloned().collect();
    if detached.is_empty() {
        return (sp.clone(), true);
    }
    let (gate, predicate): (Vec<VarCon>, Vec<VarCon>) =
        sp.predicate.iter().cloned().partition(|c| c.vars().iter().any(|v| detached.iter().any(|d| d == v)));
    let mut out = sp.clone();
    out.predicate = predicate;
    out.set_vars.retain(|v| !detached.contains(v));
    (out, satisfiable(&gate, &detached, lengths))
}

/// Brute force over all assignments of `vars`.
fn satisfiable(cons: &[VarCon], vars: &[String], lengths: &LengthMap) -> bool {
    let widths: Vec<usize> = vars.iter().map(|v| lengths[v]).collect();
    let total: usize = widths.iter().sum();
    assert!(total < 32, "too many detached bits to enumerate");
    (0u64..1 << total).any(|mask| {
        let mut val: BTreeMap<&str, Vec<bool>> = BTreeMap::new();
        let mut shift = total;
        for (v, w) in vars.iter().zip(&widths) {
            shift -= w;
            val.insert(v, (0..*w).map(|i| (mask >> (shift + w - 1 - i)) & 1 == 1).collect());
        }
        cons.iter().all(|c| match c {
            VarCon::Len(..) => true,
            VarCon::NeqVar(u, v) => val[u.as_str()] != val[v.as_str()],
            VarCon::NeqConst(v, b) => &val[v.as_str()] != b,
            VarCon::EqConst(v, b) => &val[v.as_str()] == b,
        })
    })
}

/// One graph over the slots of a segment, merged across every aligned set of
/// that segment in all assertions.
pub fn build_dependency_graph(seg_slots: &[usize], sets: &[&SetP]) -> Result<SlotDependencyGraph, ReorderError> {
    let mut g = SlotDependencyGraph { slots: seg_slots.to_vec(), edges: BTreeMap::new() };
    for sp in sets {
        let mut occupied: BTreeMap<&str, BTreeSet<usize>> = BTreeMap::new();
        for t in &sp.terms {
            for (i, v) in t.pattern.iter().enumerate() {
                occupied.entry(v).or_default().insert(seg_slots[i]);
            }
        }
        for (v, s) in &occupied {
            let s: Vec<usize> = s.iter().copied().collect();
            for w in s.windows(2) {
                g.add(w[0], w[1], EdgeReason::Recurrence(v.to_string()));
            }
        }
        let placed = variable_slots(sp, seg_slots)?;
        let mut tie = |u: &str, v: &str, why: EdgeReason| {
            if let (Some(a), Some(b)) = (placed.get(u), placed.get(v)) {
                for x in a {
                    for y in b {
                        g.add(*x, *y, why.clone());
                    }
                }
            }
        };
        for c in sp.constraints() {
            if let VarCon::NeqVar(u, v) = c {
                tie(u, v, EdgeReason::Inequality(u.clone(), v.clone()));
            }
        }
        for (c, b) in &sp.links {
            tie(c, b, EdgeReason::Complement(c.clone(), b.clone()));
        }
    }
    Ok(g)
}

/// Connected components, each ascending, ordered by least slot.
pub fn compute_slot_order(g: &SlotDependencyGraph) -> SlotOrder {
    let mut parent: BTreeMap<usize, usize> = g.slots.iter().map(|s| (*s, *s)).collect();
    fn find(p: &mut BTreeMap<usize, usize>, x: usize) -> usize {
        let mut r = x;
        while p[&r] != r {
            r = p[&r];
        }
        let mut y = x;
        while p[&y] != r {
            let next = p[&y];
            p.insert(y, r);
            y = next;
        }
        r
    }
    for &(a, b) in g.edges.keys() {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent.insert(ra.max(rb), ra.min(rb));
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for &s in &g.slots {
        let r = find(&mut parent, s);
        groups.entry(r).or_default().push(s);
    }
    let mut components: Vec<Vec<usize>> = groups
        .into_values()
        .map(|mut c| {
            c.sort_unstable();
            c
        })
        .collect();
    components.sort_by_key(|c| c[0]);
    SlotOrder { components }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TermV {
    pub tag: u32,
    pub sum_vars: Vec<String>,
    pub sum_constraints: Vec<VarCon>,
    /// Variables at the component's slots, in component order.
    pub pattern: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SetV {
    pub setp: usize,
    pub slots: Vec<usize>,
    pub terms: Vec<TermV>,
    pub predicate: Vec<VarCon>,
    pub set_vars: Vec<String>,
    pub links: BTreeMap<String, String>,
}

impl SetV {
    pub fn vars(&self) -> BTreeSet<&str> {
        self.set_vars
            .iter()
            .map(String::as_str)
            .chain(self.terms.iter().flat_map(|t| t.sum_vars.iter().map(String::as_str)))
            .collect()
    }
}

/// Projects `sp` onto each component of `order`; term `m` (1-based) is
/// tagged `m`. Constraints follow the component holding their variables.
pub fn project_setp(
    sp: &SetP,
    order: &SlotOrder,
    seg_slots: &[usize],
    var_slots: &BTreeMap<String, BTreeSet<usize>>,
) -> Vec<SetV> {
    let pos: BTreeMap<usize, usize> = seg_slots.iter().enumerate().map(|(i, s)| (*s, i)).collect();
    let mut kept = 0usize;
    let mut out = Vec::new();
    for comp in &order.components {
        let in_comp = |v: &str| var_slots.get(v).map(|s| s.iter().any(|x| comp.contains(x))).unwrap_or(false);
        let keep = |c: &VarCon| c.vars().into_iter().all(&in_comp);
        let mut terms = Vec::new();
        for (m, t) in sp.terms.iter().enumerate() {
            let sum_constraints: Vec<VarCon> = t.sum_constraints.iter().filter(|c| keep(c)).cloned().collect();
            kept += sum_constraints.len();
            terms.push(TermV {
                tag: m as u32 + 1,
                sum_vars: t.sum_vars.iter().filter(|v| in_comp(v)).cloned().collect(),
                sum_constraints,
                pattern: comp.iter().map(|s| t.pattern[pos[s]].clone()).collect(),
            });
        }
        let predicate: Vec<VarCon> = sp.predicate.iter().filter(|c| keep(c)).cloned().collect();
        kept += predicate.len();
        out.push(SetV {
            setp: sp.id,
            slots: comp.clone(),
            terms,
            predicate,
            set_vars: sp.set_vars.iter().filter(|v| in_comp(v)).cloned().collect(),
            links: sp.links.iter().filter(|(c, _)| in_comp(c)).map(|(c, b)| (c.clone(), b.clone())).collect(),
        });
    }
    debug_assert!(
        sp.constraints().filter(|c| c.vars().into_iter().all(|v| var_slots.contains_key(v))).count() == kept,
        "a constraint was split across components"
    );
    out
}
