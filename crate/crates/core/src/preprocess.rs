//! Rewrites assertions into slot-aligned form: powers expanded, one dirac per
//! set, globally unique variable names, and every pattern atom a variable
//! occupying exactly one slot of the global partition.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::amplitude::AmplitudePoly;
use crate::ast::{AssertionAst, CConsFormula, Dirac, LengthMap, PSet, SetQ, Term, USet, VStrAtom, VarCon};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum PreprocessError {
    #[error("assertion {2} has {1} tensor segments, expected {0}")]
    SegmentCountMismatch(usize, usize, usize),
    #[error("tensor segment {0} mixes states of {1} and {2} qubits")]
    SegmentLengthMismatch(usize, usize, usize),
    #[error("variable {0} at [{1},{2}) overlaps variable {3} at [{4},{5})")]
    VariableOverlap(String, usize, usize, String, usize, usize),
    #[error("unsupported constraint {0}: equality on a set variable under a summation")]
    UnsupportedConstraint(String),
}

/// Fresh names are injective in `(name, assertion, segment, occurrence)`:
/// the numeric suffix after the last `'` cannot occur in source identifiers
/// ending the same way, since every variable is renamed.
fn fresh(name: &str, assertion: usize, segment: usize, occurrence: usize) -> String {
    format!("{name}'{assertion}_{segment}_{occurrence}")
}

fn complement_name(var: &str) -> String {
    format!("{var}c")
}

/// One assertion after sugar elimination and alpha-renaming. Complemented
/// atoms are replaced by fresh variables listed in `links`.
#[derive(Clone, Debug, PartialEq)]
pub struct CanonicalAssertion {
    pub ast: AssertionAst,
    /// Complement variable to the variable it negates bitwise.
    pub links: BTreeMap<String, String>,
    pub lengths: LengthMap,
}

pub fn canonicalize(
    ast: &AssertionAst,
    lengths: &LengthMap,
    assertion: usize,
) -> Result<CanonicalAssertion, PreprocessError> {
    let mut out_lengths = LengthMap::new();
    let mut links = BTreeMap::new();
    let mut segments = Vec::new();
    for pset in &ast.segments {
        for _ in 0..pset.power {
            let s = segments.len();
            let mut occ = 0;
            let mut alternatives = Vec::new();
            for setq in &pset.base.alternatives {
                for dirac in &setq.diracs {
                    let set_vars = dirac.set_vars(&setq.predicate);
                    let set_map: BTreeMap<String, String> =
                        set_vars.iter().map(|v| (v.clone(), fresh(v, assertion, s, occ))).collect();
                    occ += 1;
                    for (old, new) in &set_map {
                        out_lengths.insert(new.clone(), lengths[old]);
                    }
                    let predicate: Vec<VarCon> =
                        setq.predicate.iter().map(|c| c.rename(&|v| set_map[v].clone())).collect();
                    let mut terms = Vec::new();
                    for term in &dirac.terms {
                        let sum_vars = term.sum_vars(&set_vars);
                        let mut map = set_map.clone();
                        for v in &sum_vars {
                            let name = fresh(v, assertion, s, occ);
                            out_lengths.insert(name.clone(), lengths[v]);
                            map.insert(v.clone(), name);
                        }
                        occ += 1;
                        for c in &term.sum_constraints {
                            if let VarCon::EqConst(v, _) = c {
                                if set_vars.contains(v) {
                                    return Err(PreprocessError::UnsupportedConstraint(c.to_string()));
                                }
                            }
                        }
                        let mut sum_constraints: Vec<VarCon> =
                            term.sum_constraints.iter().map(|c| c.rename(&|v| map[v].clone())).collect();
                        let mut pattern = Vec::new();
                        for atom in &term.pattern {
                            pattern.push(match atom {
                                VStrAtom::ConstBit(b) => VStrAtom::ConstBit(*b),
                                VStrAtom::Var(v) => VStrAtom::Var(map[v].clone()),
                                VStrAtom::ComplVar(v) => {
                                    let base = map[v].clone();
                                    let comp = complement_name(&base);
                                    let n = lengths[v];
                                    out_lengths.insert(comp.clone(), n);
                                    if links.insert(comp.clone(), base).is_none() && !set_vars.contains(v) {
                                        // keeps the complement a summation variable of this term
                                        sum_constraints.push(VarCon::Len(comp.clone(), n));
                                    }
                                    VStrAtom::Var(comp)
                                }
                            });
                        }
                        terms.push(Term { amplitude: term.amplitude.clone(), sum_constraints, pattern });
                    }
                    alternatives.push(SetQ { diracs: vec![Dirac { terms }], predicate });
                }
            }
            segments.push(PSet { base: USet { alternatives }, power: 1 });
        }
    }
    Ok(CanonicalAssertion {
        ast: AssertionAst { global_constraint: ast.global_constraint.clone(), segments },
        links,
        lengths: out_lengths,
    })
}

fn segment_len(pset: &PSet, lengths: &LengthMap) -> Vec<usize> {
    pset.base
        .alternatives
        .iter()
        .flat_map(|s| s.diracs.iter())
        .flat_map(|d| d.terms.iter())
        .map(|t| t.qubit_len(lengths))
        .collect()
}

/// Qubit length of every tensor segment, shared by all assertions.
pub fn tensor_alignment_check(asts: &[CanonicalAssertion]) -> Result<Vec<usize>, PreprocessError> {
    let Some(first) = asts.first() else { return Ok(Vec::new()) };
    let count = first.ast.segments.len();
    for (i, a) in asts.iter().enumerate() {
        if a.ast.segments.len() != count {
            return Err(PreprocessError::SegmentCountMismatch(count, a.ast.segments.len(), i));
        }
    }
    let mut out = Vec::new();
    for s in 0..count {
        let mut len: Option<usize> = None;
        for a in asts {
            for n in segment_len(&a.ast.segments[s], &a.lengths) {
                match len {
                    None => len = Some(n),
                    Some(m) if m != n => return Err(PreprocessError::SegmentLengthMismatch(s + 1, m, n)),
                    _ => {}
                }
            }
        }
        out.push(len.unwrap_or(0));
    }
    Ok(out)
}

/// Visits every variable atom with its 1-based half-open qubit interval.
fn for_each_var_interval(
    a: &CanonicalAssertion,
    seg_lens: &[usize],
    mut f: impl FnMut(usize, &Term, &str, usize, usize),
) {
    let mut offset = 1;
    for (s, pset) in a.ast.segments.iter().enumerate() {
        for setq in &pset.base.alternatives {
            for d in &setq.diracs {
                for t in &d.terms {
                    let mut pos = offset;
                    for atom in &t.pattern {
                        match atom {
                            VStrAtom::ConstBit(_) => pos += 1,
                            VStrAtom::Var(v) | VStrAtom::ComplVar(v) => {
                                let n = a.lengths[v];
                                f(s, t, v, pos, pos + n);
                                pos += n;
                            }
                        }
                    }
                }
            }
        }
        offset += seg_lens[s];
    }
}

pub fn variable_alignment_check(asts: &[CanonicalAssertion], seg_lens: &[usize]) -> Result<(), PreprocessError> {
    let mut intervals: BTreeMap<(usize, usize), String> = BTreeMap::new();
    for a in asts {
        for_each_var_interval(a, seg_lens, |_, _, v, lo, hi| {
            intervals.entry((lo, hi)).or_insert_with(|| v.to_string());
        });
    }
    let mut reach: Option<((usize, usize), &String)> = None;
    for (iv, name) in &intervals {
        if let Some((prev, prev_name)) = reach {
            if iv.0 < prev.1 {
                return Err(PreprocessError::VariableOverlap(
                    prev_name.clone(),
                    prev.0,
                    prev.1,
                    name.clone(),
                    iv.0,
                    iv.1,
                ));
            }
        }
        if reach.map(|(p, _)| iv.1 > p.1).unwrap_or(true) {
            reach = Some((*iv, name));
        }
    }
    Ok(())
}

/// Ordered qubit intervals covering `[1, n+1)`. Slot `k` (1-based) is
/// `slots[k-1]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GlobalPartition {
    pub slots: Vec<(usize, usize)>,
    pub segment_of: Vec<usize>,
}

impl GlobalPartition {
    pub fn width(&self, slot: usize) -> usize {
        let (a, b) = self.slots[slot - 1];
        b - a
    }

    pub fn start(&self, slot: usize) -> usize {
        self.slots[slot - 1].0
    }

    /// 1-based slot indices of segment `s`.
    pub fn slots_of(&self, s: usize) -> Vec<usize> {
        (1..=self.slots.len()).filter(|k| self.segment_of[k - 1] == s).collect()
    }

    pub fn qubits(&self) -> usize {
        self.slots.last().map(|s| s.1 - 1).unwrap_or(0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TermP {
    pub amplitude: AmplitudePoly,
    pub sum_vars: Vec<String>,
    pub sum_constraints: Vec<VarCon>,
    /// One variable per slot of the segment, in slot order.
    pub pattern: Vec<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SetP {
    pub id: usize,
    pub assertion: usize,
    pub segment: usize,
    pub terms: Vec<TermP>,
    pub predicate: Vec<VarCon>,
    /// Includes variables that occur in no pattern.
    pub set_vars: BTreeSet<String>,
    pub links: BTreeMap<String, String>,
}

impl SetP {
    pub fn pattern_vars(&self) -> BTreeSet<&str> {
        self.terms.iter().flat_map(|t| t.pattern.iter().map(String::as_str)).collect()
    }

    /// Set variables occurring in no pattern.
    pub fn ghosts(&self) -> Vec<&str> {
        let seen = self.pattern_vars();
        self.set_vars.iter().map(String::as_str).filter(|v| !seen.contains(v)).collect()
    }

    pub fn constraints(&self) -> impl Iterator<Item = &VarCon> {
        self.predicate.iter().chain(self.terms.iter().flat_map(|t| t.sum_constraints.iter()))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AlignedAssertion {
    pub global_constraint: Option<CConsFormula>,
    /// Per segment, the union alternatives.
    pub segments: Vec<Vec<SetP>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AlignedSpec {
    pub assertions: Vec<AlignedAssertion>,
    pub partition: GlobalPartition,
    pub lengths: LengthMap,
}

pub fn constant_abstraction(asts: &[CanonicalAssertion], seg_lens: &[usize]) -> AlignedSpec {
    let mut cuts: BTreeSet<usize> = BTreeSet::new();
    let mut seg_start = Vec::new();
    let mut pos = 1;
    for n in seg_lens {
        seg_start.push(pos);
        cuts.insert(pos);
        pos += n;
        cuts.insert(pos);
    }
    for a in asts {
        for_each_var_interval(a, seg_lens, |_, _, _, lo, hi| {
            cuts.insert(lo);
            cuts.insert(hi);
        });
    }
    let cuts: Vec<usize> = cuts.into_iter().collect();
    let mut slots = Vec::new();
    let mut segment_of = Vec::new();
    for w in cuts.windows(2) {
        slots.push((w[0], w[1]));
        let s = seg_start.iter().rposition(|&st| st <= w[0]).expect("cut inside some segment");
        segment_of.push(s);
    }
    let partition = GlobalPartition { slots, segment_of };

    let mut lengths = LengthMap::new();
    let mut assertions = Vec::new();
    let mut next_id = 0;
    for (ai, a) in asts.iter().enumerate() {
        lengths.extend(a.lengths.iter().map(|(k, v)| (k.clone(), *v)));
        let mut segments = Vec::new();
        for (s, pset) in a.ast.segments.iter().enumerate() {
            let seg_slots = partition.slots_of(s);
            let mut alts = Vec::new();
            let mut occ = 0;
            for setq in &pset.base.alternatives {
                let dirac = &setq.diracs[0];
                let mut set_vars = dirac.set_vars(&setq.predicate);
                // a base seen only through its complement is still a set variable
                for (c, b) in &a.links {
                    if set_vars.contains(c) {
                        set_vars.insert(b.clone());
                    }
                }
                let mut terms = Vec::new();
                for t in &dirac.terms {
                    let mut sum_vars = t.sum_vars(&set_vars);
                    let mut sum_constraints = t.sum_constraints.clone();
                    // qubit position -> (variable starting there, end) or constant bit
                    let mut starts: BTreeMap<usize, (String, usize)> = BTreeMap::new();
                    let mut consts: BTreeMap<usize, bool> = BTreeMap::new();
                    let mut p = seg_start[s];
                    for atom in &t.pattern {
                        match atom {
                            VStrAtom::ConstBit(b) => {
                                consts.insert(p, *b);
                                p += 1;
                            }
                            VStrAtom::Var(v) | VStrAtom::ComplVar(v) => {
                                let n = a.lengths[v];
                                starts.insert(p, (v.clone(), p + n));
                                p += n;
                            }
                        }
                    }
                    let mut pattern = Vec::new();
                    for &k in &seg_slots {
                        let (lo, hi) = partition.slots[k - 1];
                        match starts.get(&lo) {
                            Some((v, end)) => {
                                assert_eq!(*end, hi, "variable boundary misses the partition");
                                pattern.push(v.clone());
                            }
                            None => {
                                let bits: Vec<bool> =
                                    (lo..hi).map(|q| *consts.get(&q).expect("slot is covered by constants")).collect();
                                let name = fresh("k", ai, s, occ);
                                occ += 1;
                                lengths.insert(name.clone(), hi - lo);
                                sum_constraints.push(VarCon::EqConst(name.clone(), bits));
                                sum_vars.push(name.clone());
                                pattern.push(name);
                            }
                        }
                    }
                    terms.push(TermP { amplitude: t.amplitude.clone(), sum_vars, sum_constraints, pattern });
                }
                let mentioned: BTreeSet<String> =
                    set_vars.iter().cloned().chain(terms.iter().flat_map(|t| t.sum_vars.iter().cloned())).collect();
                let links = a
                    .links
                    .iter()
                    .filter(|(c, _)| mentioned.contains(*c))
                    .map(|(c, b)| (c.clone(), b.clone()))
                    .collect();
                alts.push(SetP {
                    id: next_id,
                    assertion: ai,
                    segment: s,
                    terms,
                    predicate: setq.predicate.clone(),
                    set_vars,
                    links,
                });
                next_id += 1;
            }
            segments.push(alts);
        }
        assertions.push(AlignedAssertion { global_constraint: a.ast.global_constraint.clone(), segments });
    }
    AlignedSpec { assertions, partition, lengths }
}

/// Runs canonicalization and the three checks on assertions translated
/// together; `lengths[i]` belongs to `asts[i]`.
pub fn preprocess(asts: &[AssertionAst], lengths: &[LengthMap]) -> Result<AlignedSpec, PreprocessError> {
    let canon: Vec<CanonicalAssertion> =
        asts.iter().zip(lengths).enumerate().map(|(i, (a, l))| canonicalize(a, l, i)).collect::<Result<_, _>>()?;
    let seg_lens = tensor_alignment_check(&canon)?;
    variable_alignment_check(&canon, &seg_lens)?;
    Ok(constant_abstraction(&canon, &seg_lens))
}

/// The aligned form as an ordinary assertion. Complement links are not
/// expressible and appear as plain variables; see `render_aligned`.
pub fn aligned_to_ast(a: &AlignedAssertion, lengths: &LengthMap) -> AssertionAst {
    let segments = a
        .segments
        .iter()
        .map(|alts| PSet {
            base: USet {
                alternatives: alts
                    .iter()
                    .map(|sp| {
                        let terms = sp
                            .terms
                            .iter()
                            .map(|t| {
                                let mut sum_constraints = t.sum_constraints.clone();
                                for v in &t.sum_vars {
                                    if !sum_constraints.iter().any(|c| c.vars().contains(&v.as_str())) {
                                        sum_constraints.push(VarCon::Len(v.clone(), lengths[v]));
                                    }
                                }
                                Term {
                                    amplitude: t.amplitude.clone(),
                                    sum_constraints,
                                    pattern: t.pattern.iter().map(|v| VStrAtom::Var(v.clone())).collect(),
                                }
                            })
                            .collect();
                        SetQ { diracs: vec![Dirac { terms }], predicate: sp.predicate.clone() }
                    })
                    .collect(),
            },
            power: 1,
        })
        .collect();
    AssertionAst { global_constraint: a.global_constraint.clone(), segments }
}

pub fn render_aligned(spec: &AlignedSpec) -> String {
    let mut out = String::new();
    let slots: Vec<String> =
        spec.partition.slots.iter().enumerate().map(|(i, (a, b))| format!("{}:[{a},{b})", i + 1)).collect();
    out.push_str(&format!("// slots {}\n", slots.join(" ")));
    for (i, a) in spec.assertions.iter().enumerate() {
        if i > 0 {
            out.push_str(";;\n");
        }
        for alts in &a.segments {
            for sp in alts {
                for (c, b) in &sp.links {
                    out.push_str(&format!("// {c} is the bitwise complement of {b}\n"));
                }
            }
        }
        out.push_str(&crate::parser::render_assertion(&aligned_to_ast(a, &spec.lengths)));
        out.push('\n');
    }
    out
}
