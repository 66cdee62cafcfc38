//! Brute-force semantics of assertions by direct enumeration. Shares only the
//! syntax tree and the state/amplitude types with the compiler, so agreement
//! between the two is a genuine cross-check.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::amplitude::AlgebraicComplex;
use crate::ast::{AssertionAst, Dirac, LengthMap, SetQ, Term, VStrAtom, VarCon};
use crate::lsta::StateVector;

pub type Valuation = BTreeMap<String, AlgebraicComplex>;

pub const DEFAULT_CAP: usize = 12;

/// Largest number of variable bits enumerated for one dirac or term.
const MAX_ENUM_BITS: usize = 26;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("assertion has {0} qubits, above the cap of {1}")]
    CapExceeded(usize, usize),
    #[error("complex variable {0} has no value")]
    UnboundComplexVar(String),
    #[error("variable {0} has no known length")]
    MissingLength(String),
    #[error("{0} variable bits are too many to enumerate")]
    EnumerationTooLarge(usize),
}

pub type StateSet = BTreeSet<StateVector<AlgebraicComplex>>;

type Assignment = BTreeMap<String, Vec<bool>>;

struct Ctx<'a> {
    lengths: &'a LengthMap,
    theta: &'a Valuation,
}

fn length_of(ctx: &Ctx, v: &str) -> Result<usize, OracleError> {
    ctx.lengths.get(v).copied().ok_or_else(|| OracleError::MissingLength(v.to_string()))
}

/// Calls `f` on every extension of `base` over `vars`; stops early when `f`
/// returns an error.
fn for_each_assignment(
    ctx: &Ctx,
    vars: &[String],
    base: &Assignment,
    f: &mut dyn FnMut(&Assignment) -> Result<(), OracleError>,
) -> Result<(), OracleError> {
    let widths: Vec<usize> = vars.iter().map(|v| length_of(ctx, v)).collect::<Result<_, _>>()?;
    let total: usize = widths.iter().sum();
    if total > MAX_ENUM_BITS {
        return Err(OracleError::EnumerationTooLarge(total));
    }
    for counter in 0u64..(1u64 << total) {
        let mut asg = base.clone();
        let mut shift = total;
        for (v, w) in vars.iter().zip(&widths) {
            shift -= w;
            let bits = (0..*w).map(|i| (counter >> (shift + w - 1 - i)) & 1 == 1).collect();
            asg.insert(v.clone(), bits);
        }
        f(&asg)?;
    }
    Ok(())
}

fn holds(c: &VarCon, asg: &Assignment) -> bool {
    match c {
        VarCon::Len(..) => true,
        VarCon::NeqVar(u, v) => asg[u] != asg[v],
        VarCon::NeqConst(v, bits) => &asg[v] != bits,
        VarCon::EqConst(v, bits) => &asg[v] == bits,
    }
}

fn basis_of(pattern: &[VStrAtom], asg: &Assignment) -> (u64, usize) {
    let mut x = 0u64;
    let mut n = 0usize;
    let mut push = |b: bool| {
        x = (x << 1) | b as u64;
        n += 1;
    };
    for a in pattern {
        match a {
            VStrAtom::ConstBit(b) => push(*b),
            VStrAtom::Var(v) => asg[v].iter().for_each(|b| push(*b)),
            VStrAtom::ComplVar(v) => asg[v].iter().for_each(|b| push(!*b)),
        }
    }
    (x, n)
}

fn pattern_names(t: &Term) -> impl Iterator<Item = &str> {
    t.pattern.iter().filter_map(|a| match a {
        VStrAtom::ConstBit(_) => None,
        VStrAtom::Var(v) | VStrAtom::ComplVar(v) => Some(v.as_str()),
    })
}

fn constraint_names(cs: &[VarCon]) -> BTreeSet<&str> {
    cs.iter()
        .flat_map(|c| match c {
            VarCon::Len(v, _) | VarCon::NeqConst(v, _) | VarCon::EqConst(v, _) => vec![v.as_str()],
            VarCon::NeqVar(u, v) => vec![u.as_str(), v.as_str()],
        })
        .collect()
}

/// Predicate variables plus pattern variables left unbound by their term.
fn free_vars(d: &Dirac, predicate: &[VarCon]) -> Vec<String> {
    let mut out: BTreeSet<&str> = constraint_names(predicate);
    for t in &d.terms {
        let bound = constraint_names(&t.sum_constraints);
        out.extend(pattern_names(t).filter(|v| !bound.contains(v)));
    }
    out.into_iter().map(str::to_string).collect()
}

fn bound_vars(t: &Term, free: &[String]) -> Vec<String> {
    let mut names: BTreeSet<&str> = constraint_names(&t.sum_constraints);
    names.extend(pattern_names(t));
    names.into_iter().filter(|v| !free.iter().any(|f| f == v)).map(str::to_string).collect()
}

fn denote_dirac(ctx: &Ctx, d: &Dirac, predicate: &[VarCon], out: &mut StateSet) -> Result<(), OracleError> {
    let free = free_vars(d, predicate);
    let amps: Vec<AlgebraicComplex> = d
        .terms
        .iter()
        .map(|t| t.amplitude.eval(ctx.theta).map_err(OracleError::UnboundComplexVar))
        .collect::<Result<_, _>>()?;
    let empty = Assignment::new();
    for_each_assignment(ctx, &free, &empty, &mut |outer| {
        if !predicate.iter().all(|c| holds(c, outer)) {
            return Ok(());
        }
        let mut psi: Option<StateVector<AlgebraicComplex>> = None;
        for (t, amp) in d.terms.iter().zip(&amps) {
            let bound = bound_vars(t, &free);
            for_each_assignment(ctx, &bound, outer, &mut |asg| {
                if t.sum_constraints.iter().all(|c| holds(c, asg)) {
                    let (x, n) = basis_of(&t.pattern, asg);
                    psi.get_or_insert_with(|| StateVector::new(n)).accumulate(x, amp);
                }
                Ok(())
            })?;
        }
        if let Some(psi) = psi {
            if !psi.is_zero() {
                out.insert(psi);
            }
        }
        Ok(())
    })
}

fn denote_setq(ctx: &Ctx, s: &SetQ, out: &mut StateSet) -> Result<(), OracleError> {
    for d in &s.diracs {
        denote_dirac(ctx, d, &s.predicate, out)?;
    }
    Ok(())
}

fn tensor_sets(a: &StateSet, b: &StateSet) -> StateSet {
    a.iter().flat_map(|x| b.iter().map(move |y| x.tensor(y))).collect()
}

/// Qubit count read off the first term of every segment.
fn total_qubits(ast: &AssertionAst, lengths: &LengthMap) -> Result<usize, OracleError> {
    let mut total = 0;
    for seg in &ast.segments {
        let Some(t) = seg.base.alternatives.first().and_then(|s| s.diracs.first()).and_then(|d| d.terms.first()) else {
            continue;
        };
        let mut n = 0;
        for a in &t.pattern {
            n += match a {
                VStrAtom::ConstBit(_) => 1,
                VStrAtom::Var(v) | VStrAtom::ComplVar(v) => {
                    lengths.get(v).copied().ok_or_else(|| OracleError::MissingLength(v.clone()))?
                }
            };
        }
        total += n * seg.power as usize;
    }
    Ok(total)
}

/// The set of nonzero states the assertion denotes. The global constraint is
/// not consulted; `theta` supplies every complex variable.
pub fn denote(
    ast: &AssertionAst,
    lengths: &LengthMap,
    theta: Option<&Valuation>,
    cap: usize,
) -> Result<StateSet, OracleError> {
    let n = total_qubits(ast, lengths)?;
    if n > cap {
        return Err(OracleError::CapExceeded(n, cap));
    }
    let none = Valuation::new();
    let ctx = Ctx { lengths, theta: theta.unwrap_or(&none) };
    let mut acc: Option<StateSet> = None;
    for seg in &ast.segments {
        let mut base = StateSet::new();
        for s in &seg.base.alternatives {
            denote_setq(&ctx, s, &mut base)?;
        }
        let mut powered = base.clone();
        for _ in 1..seg.power {
            powered = tensor_sets(&powered, &base);
        }
        acc = Some(match acc {
            None => powered,
            Some(prev) => tensor_sets(&prev, &powered),
        });
    }
    Ok(acc.unwrap_or_default())
}
