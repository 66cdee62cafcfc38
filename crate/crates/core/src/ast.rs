//! Abstract syntax of assertions and the well-formedness checks run before
//! translation.
//!
//! Scoping: the set variables of a dirac are the variables of the set
//! predicate together with every pattern variable that its term does not
//! mention under `Σ`. All other variables of a term are summation variables
//! local to that term.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::amplitude::AmplitudePoly;

pub type Bits = Vec<bool>;

pub fn bits_to_string(bits: &[bool]) -> String {
    bits.iter().map(|b| if *b { '1' } else { '0' }).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct AssertionAst {
    pub global_constraint: Option<CConsFormula>,
    pub segments: Vec<PSet>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PSet {
    pub base: USet,
    pub power: u32,
}

#[derive(Clone, Debug, PartialEq)]
pub struct USet {
    pub alternatives: Vec<SetQ>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SetQ {
    pub diracs: Vec<Dirac>,
    pub predicate: Vec<VarCon>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dirac {
    pub terms: Vec<Term>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Term {
    pub amplitude: AmplitudePoly,
    pub sum_constraints: Vec<VarCon>,
    pub pattern: Vec<VStrAtom>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VStrAtom {
    ConstBit(bool),
    Var(String),
    ComplVar(String),
}

impl VStrAtom {
    pub fn var_name(&self) -> Option<&str> {
        match self {
            VStrAtom::ConstBit(_) => None,
            VStrAtom::Var(v) | VStrAtom::ComplVar(v) => Some(v),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VarCon {
    Len(String, usize),
    NeqVar(String, String),
    NeqConst(String, Bits),
    EqConst(String, Bits),
}

impl VarCon {
    pub fn vars(&self) -> Vec<&str> {
        match self {
            VarCon::Len(v, _) | VarCon::NeqConst(v, _) | VarCon::EqConst(v, _) => vec![v],
            VarCon::NeqVar(u, v) => vec![u, v],
        }
    }

    pub fn rename(&self, f: &dyn Fn(&str) -> String) -> VarCon {
        match self {
            VarCon::Len(v, n) => VarCon::Len(f(v), *n),
            VarCon::NeqVar(u, v) => VarCon::NeqVar(f(u), f(v)),
            VarCon::NeqConst(v, c) => VarCon::NeqConst(f(v), c.clone()),
            VarCon::EqConst(v, c) => VarCon::EqConst(f(v), c.clone()),
        }
    }
}

impl fmt::Display for VarCon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VarCon::Len(v, n) => write!(f, "|{v}|={n}"),
            VarCon::NeqVar(u, v) => write!(f, "{u}!={v}"),
            VarCon::NeqConst(v, c) => write!(f, "{v}!={}", bits_to_string(c)),
            VarCon::EqConst(v, c) => write!(f, "{v}={}", bits_to_string(c)),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CmpOp {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
        }
    }
}

/// Real-valued arithmetic over complex variables, used only inside `bigU[...]`.
#[derive(Clone, Debug, PartialEq)]
pub enum CArith {
    /// Decimal literal kept verbatim.
    Num(String),
    /// A bare variable stands for its real part.
    Var(String),
    Re(String),
    Im(String),
    Abs(String),
    Abs2(String),
    Neg(Box<CArith>),
    Bin(char, Box<CArith>, Box<CArith>),
}

#[derive(Clone, Debug, PartialEq)]
pub enum CConsFormula {
    Cmp(CArith, CmpOp, CArith),
    And(Box<CConsFormula>, Box<CConsFormula>),
    Or(Box<CConsFormula>, Box<CConsFormula>),
    Not(Box<CConsFormula>),
}

impl CArith {
    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            CArith::Num(_) => {}
            CArith::Var(v) | CArith::Re(v) | CArith::Im(v) | CArith::Abs(v) | CArith::Abs2(v) => {
                out.insert(v.clone());
            }
            CArith::Neg(x) => x.collect_vars(out),
            CArith::Bin(_, x, y) => {
                x.collect_vars(out);
                y.collect_vars(out);
            }
        }
    }

    /// Floating-point value under a valuation of `(re, im)` pairs.
    pub fn eval(&self, theta: &BTreeMap<String, (f64, f64)>) -> Option<f64> {
        Some(match self {
            CArith::Num(s) => s.parse().ok()?,
            CArith::Var(v) | CArith::Re(v) => theta.get(v)?.0,
            CArith::Im(v) => theta.get(v)?.1,
            CArith::Abs(v) => {
                let (r, i) = theta.get(v)?;
                (r * r + i * i).sqrt()
            }
            CArith::Abs2(v) => {
                let (r, i) = theta.get(v)?;
                r * r + i * i
            }
            CArith::Neg(x) => -x.eval(theta)?,
            CArith::Bin(op, x, y) => {
                let (a, b) = (x.eval(theta)?, y.eval(theta)?);
                match op {
                    '+' => a + b,
                    '-' => a - b,
                    '*' => a * b,
                    '/' => a / b,
                    _ => return None,
                }
            }
        })
    }
}

impl CConsFormula {
    pub fn variables(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            CConsFormula::Cmp(x, _, y) => {
                x.collect_vars(out);
                y.collect_vars(out);
            }
            CConsFormula::And(x, y) | CConsFormula::Or(x, y) => {
                x.collect_vars(out);
                y.collect_vars(out);
            }
            CConsFormula::Not(x) => x.collect_vars(out),
        }
    }

    /// Floating-point evaluation; `None` when a variable is unbound.
    /// Equality atoms use an absolute tolerance of `1e-9`.
    pub fn holds(&self, theta: &BTreeMap<String, (f64, f64)>) -> Option<bool> {
        Some(match self {
            CConsFormula::Cmp(x, op, y) => {
                let (a, b) = (x.eval(theta)?, y.eval(theta)?);
                match op {
                    CmpOp::Lt => a < b,
                    CmpOp::Le => a <= b,
                    CmpOp::Gt => a > b,
                    CmpOp::Ge => a >= b,
                    CmpOp::Eq => (a - b).abs() <= 1e-9,
                    CmpOp::Ne => (a - b).abs() > 1e-9,
                }
            }
            CConsFormula::And(x, y) => x.holds(theta)? && y.holds(theta)?,
            CConsFormula::Or(x, y) => x.holds(theta)? || y.holds(theta)?,
            CConsFormula::Not(x) => !x.holds(theta)?,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum AstError {
    #[error("length of variable `{0}` cannot be determined")]
    UnknownLength(String),
    #[error("variable `{0}` has conflicting lengths {1} and {2}")]
    ConflictingLength(String, usize, usize),
    #[error("length mismatch in {0}: {1} vs {2}")]
    LengthMismatch(String, usize, usize),
    #[error("summation variable `{0}` does not occur in its ket")]
    RedundantSummationVar(String),
}

/// Qubit length of every string variable, keyed by name.
pub type LengthMap = BTreeMap<String, usize>;

impl Dirac {
    pub fn set_vars(&self, predicate: &[VarCon]) -> BTreeSet<String> {
        let mut out: BTreeSet<String> = predicate.iter().flat_map(|c| c.vars()).map(str::to_string).collect();
        for t in &self.terms {
            let bound = t.constraint_vars();
            for a in &t.pattern {
                if let Some(v) = a.var_name() {
                    if !bound.contains(v) {
                        out.insert(v.to_string());
                    }
                }
            }
        }
        out
    }
}

impl Term {
    pub fn constraint_vars(&self) -> BTreeSet<String> {
        self.sum_constraints.iter().flat_map(|c| c.vars()).map(str::to_string).collect()
    }

    pub fn pattern_vars(&self) -> BTreeSet<String> {
        self.pattern.iter().filter_map(|a| a.var_name()).map(str::to_string).collect()
    }

    /// Summation variables in first-mention order (constraints, then pattern).
    pub fn sum_vars(&self, set_vars: &BTreeSet<String>) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        let mentioned =
            self.sum_constraints.iter().flat_map(|c| c.vars()).chain(self.pattern.iter().filter_map(|a| a.var_name()));
        for v in mentioned {
            if !set_vars.contains(v) && !out.iter().any(|o| o == v) {
                out.push(v.to_string());
            }
        }
        out
    }

    pub fn qubit_len(&self, lengths: &LengthMap) -> usize {
        self.pattern
            .iter()
            .map(|a| match a.var_name() {
                None => 1,
                Some(v) => lengths.get(v).copied().unwrap_or(0),
            })
            .sum()
    }
}

impl AssertionAst {
    pub fn sets(&self) -> impl Iterator<Item = &SetQ> {
        self.segments.iter().flat_map(|p| p.base.alternatives.iter())
    }

    pub fn all_constraints(&self) -> impl Iterator<Item = &VarCon> {
        self.sets().flat_map(|s| {
            s.predicate
                .iter()
                .chain(s.diracs.iter().flat_map(|d| d.terms.iter().flat_map(|t| t.sum_constraints.iter())))
        })
    }

    pub fn string_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for c in self.all_constraints() {
            out.extend(c.vars().into_iter().map(str::to_string));
        }
        for s in self.sets() {
            for d in &s.diracs {
                for t in &d.terms {
                    out.extend(t.pattern_vars());
                }
            }
        }
        out
    }

    /// Complex-variable names appearing in amplitudes.
    pub fn complex_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for s in self.sets() {
            for d in &s.diracs {
                for t in &d.terms {
                    out.extend(t.amplitude.variables());
                }
            }
        }
        out
    }

    /// Total qubit count of one instance, with powers expanded.
    pub fn qubit_count(&self, lengths: &LengthMap) -> usize {
        self.segments
            .iter()
            .map(|p| {
                let per = p
                    .base
                    .alternatives
                    .first()
                    .and_then(|s| s.diracs.first())
                    .and_then(|d| d.terms.first())
                    .map(|t| t.qubit_len(lengths))
                    .unwrap_or(0);
                per * p.power as usize
            })
            .sum()
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }

    fn find(&mut self, x: usize) -> usize {
        let p = self.parent[x];
        if p == x {
            return x;
        }
        let r = self.find(p);
        self.parent[x] = r;
        r
    }

    fn union(&mut self, x: usize, y: usize) {
        let (a, b) = (self.find(x), self.find(y));
        if a != b {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            self.parent[hi] = lo;
        }
    }
}

/// Lengths come from `|v|=N`; variables without one take the unique length
/// reachable through `≠` links and constant operands.
pub fn infer_lengths(ast: &AssertionAst) -> Result<LengthMap, AstError> {
    let names: Vec<String> = ast.string_vars().into_iter().collect();
    let index: BTreeMap<&str, usize> = names.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
    let mut explicit: BTreeMap<usize, usize> = BTreeMap::new();
    let mut seeds: Vec<(usize, usize)> = Vec::new();
    let mut uf = UnionFind::new(names.len());

    let mut constraints: Vec<&VarCon> = ast.all_constraints().collect();
    constraints.sort();
    for c in constraints {
        match c {
            VarCon::Len(v, n) => {
                let i = index[v.as_str()];
                if let Some(old) = explicit.get(&i) {
                    if old != n {
                        let (a, b) = ((*old).min(*n), (*old).max(*n));
                        return Err(AstError::ConflictingLength(v.clone(), a, b));
                    }
                }
                explicit.insert(i, *n);
                seeds.push((i, *n));
            }
            VarCon::NeqVar(u, v) => uf.union(index[u.as_str()], index[v.as_str()]),
            VarCon::NeqConst(v, bits) | VarCon::EqConst(v, bits) => {
                seeds.push((index[v.as_str()], bits.len()));
            }
        }
    }

    let mut class_seeds: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
    for (i, n) in seeds {
        let r = uf.find(i);
        class_seeds.entry(r).or_default().insert(n);
    }

    let mut out = LengthMap::new();
    for (i, name) in names.iter().enumerate() {
        if let Some(n) = explicit.get(&i) {
            out.insert(name.clone(), *n);
            continue;
        }
        let r = uf.find(i);
        match class_seeds.get(&r) {
            None => return Err(AstError::UnknownLength(name.clone())),
            Some(s) if s.len() == 1 => {
                out.insert(name.clone(), *s.iter().next().unwrap());
            }
            Some(s) => {
                let mut it = s.iter();
                let (a, b) = (*it.next().unwrap(), *it.next().unwrap());
                return Err(AstError::ConflictingLength(name.clone(), a, b));
            }
        }
    }
    Ok(out)
}

fn check_constraint(c: &VarCon, lengths: &LengthMap) -> Result<(), AstError> {
    match c {
        VarCon::Len(..) => Ok(()),
        VarCon::NeqVar(u, v) => {
            let (a, b) = (lengths[u], lengths[v]);
            if a != b {
                return Err(AstError::LengthMismatch(format!("constraint {c}"), a, b));
            }
            Ok(())
        }
        VarCon::NeqConst(v, bits) | VarCon::EqConst(v, bits) => {
            let a = lengths[v];
            if a != bits.len() {
                return Err(AstError::LengthMismatch(format!("constraint {c}"), a, bits.len()));
            }
            Ok(())
        }
    }
}

/// Length consistency of unions, dirac terms and constraint operands, and
/// absence of summation variables that never reach a ket.
pub fn check_well_formed(ast: &AssertionAst, lengths: &LengthMap) -> Result<(), AstError> {
    for c in ast.all_constraints() {
        check_constraint(c, lengths)?;
    }
    for pset in &ast.segments {
        let mut uset_len: Option<usize> = None;
        for set in &pset.base.alternatives {
            for dirac in &set.diracs {
                let mut dirac_len: Option<usize> = None;
                for term in &dirac.terms {
                    let n = term.qubit_len(lengths);
                    match dirac_len {
                        None => dirac_len = Some(n),
                        Some(m) if m != n => return Err(AstError::LengthMismatch("terms of one dirac".into(), m, n)),
                        _ => {}
                    }
                }
                let n = dirac_len.unwrap_or(0);
                match uset_len {
                    None => uset_len = Some(n),
                    Some(m) if m != n => return Err(AstError::LengthMismatch("union alternatives".into(), m, n)),
                    _ => {}
                }
                let set_vars = dirac.set_vars(&set.predicate);
                for term in &dirac.terms {
                    let in_pattern = term.pattern_vars();
                    for v in term.sum_vars(&set_vars) {
                        if !in_pattern.contains(&v) {
                            return Err(AstError::RedundantSummationVar(v));
                        }
                    }
                }
            }
        }
    }
    Ok(())
}
