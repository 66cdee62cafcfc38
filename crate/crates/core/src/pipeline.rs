//! End-to-end translation: checks, alignment, slot and qubit reordering,
//! per-slice construction, and assembly into one automaton per assertion.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::time::Instant;

use thiserror::Error;

use crate::amplitude::{AlgebraicComplex, AmplitudePoly, TagAmp, ValAmp};
use crate::ast::{check_well_formed, infer_lengths, AssertionAst, AstError, CConsFormula, LengthMap};
use crate::build::{build_setq_lsta, filter_f, filter_tau, BuildError, TagLegend};
use crate::lsta::{self, Lsta, LstaError, StateVector};
use crate::oracle::{self, OracleError, Valuation};
use crate::preprocess::{preprocess, AlignedSpec, PreprocessError, SetP};
use crate::qubit_reorder::{constraint_table, describe_slice, expand_qubit_slices};
use crate::var_reorder::{
    build_dependency_graph, compute_slot_order, detach_unplaced, project_setp, variable_slots, ReorderError,
    SlotDependencyGraph, SlotOrder,
};

#[derive(Debug, Error)]
pub enum TranslateError {
    #[error("assertion {0}: {1}")]
    WellFormedness(usize, AstError),
    #[error(transparent)]
    Alignment(#[from] PreprocessError),
    #[error(transparent)]
    Reorder(#[from] ReorderError),
    #[error(transparent)]
    Build(#[from] BuildError),
    #[error("assertion {0} denotes no state")]
    EmptyLanguage(usize),
    #[error(transparent)]
    Automaton(#[from] LstaError),
}

/// Structural parameters of one assertion and the realized sizes.
#[derive(Clone, Debug, PartialEq)]
pub struct SizeReport {
    pub qubits: usize,
    /// Largest number of terms in one dirac.
    pub n_term: usize,
    /// Largest number of variable constraints in one set.
    pub n_vc: usize,
    /// Largest number of diracs united in one segment.
    pub n_union: usize,
    /// Distinct amplitudes mentioning complex variables, at least 1.
    pub n_amp: usize,
    pub final_size: usize,
    pub final_leaves: usize,
    /// Number of single-state automata built, and the largest per-slice union.
    pub state_builds: usize,
    pub max_set_size: usize,
    pub build_micros: u128,
}

impl SizeReport {
    /// `2^(N_term·2^N_vc) · 2^N_vc · N_term · N_union · L · N_amp`, in floating point.
    pub fn envelope(&self) -> f64 {
        let vc = 2f64.powi(self.n_vc as i32);
        2f64.powf(self.n_term as f64 * vc)
            * vc
            * self.n_term as f64
            * self.n_union.max(1) as f64
            * self.qubits as f64
            * self.n_amp as f64
    }

    pub fn within_envelope(&self) -> bool {
        (self.final_size as f64) <= self.envelope()
    }
}

/// Counts the structural parameters from the source syntax.
pub fn measure(ast: &AssertionAst, lengths: &LengthMap) -> SizeReport {
    let n_term = ast.sets().flat_map(|s| s.diracs.iter()).map(|d| d.terms.len()).max().unwrap_or(0);
    let n_vc = ast
        .sets()
        .map(|s| {
            s.predicate.len()
                + s.diracs.iter().flat_map(|d| d.terms.iter()).map(|t| t.sum_constraints.len()).sum::<usize>()
        })
        .max()
        .unwrap_or(0);
    let n_union = ast
        .segments
        .iter()
        .map(|p| p.base.alternatives.iter().map(|s| s.diracs.len()).sum::<usize>())
        .max()
        .unwrap_or(0);
    let symbolic: BTreeSet<String> = ast
        .sets()
        .flat_map(|s| s.diracs.iter())
        .flat_map(|d| d.terms.iter())
        .filter(|t| !t.amplitude.variables().is_empty())
        .map(|t| t.amplitude.to_expr())
        .collect();
    SizeReport {
        qubits: ast.qubit_count(lengths),
        n_term,
        n_vc,
        n_union,
        n_amp: symbolic.len().max(1),
        final_size: 0,
        final_leaves: 0,
        state_builds: 0,
        max_set_size: 0,
        build_micros: 0,
    }
}

#[derive(Clone, Debug)]
pub struct AssertionOutput {
    pub lsta: Lsta<AmplitudePoly>,
    pub constraint: Option<CConsFormula>,
    pub lengths: LengthMap,
    pub report: SizeReport,
}

impl AssertionOutput {
    pub fn to_text(&self) -> String {
        let c = self.constraint.as_ref().map(crate::parser::render_formula);
        self.lsta.to_text(c.as_deref())
    }
}

#[derive(Clone, Debug)]
pub struct Translation {
    pub aligned: AlignedSpec,
    pub graphs: Vec<SlotDependencyGraph>,
    /// Slot order of every segment.
    pub orders: Vec<SlotOrder>,
    /// `permutation[j]` is the original (0-based) qubit at automaton level `j+1`.
    pub permutation: Vec<usize>,
    pub legend: TagLegend,
    pub outputs: Vec<AssertionOutput>,
    pub slices: String,
}

impl Translation {
    /// Inverse of `permutation`, for `StateVector::permuted`.
    pub fn restore_order(&self) -> Vec<usize> {
        let mut inv = vec![0; self.permutation.len()];
        for (j, q) in self.permutation.iter().enumerate() {
            inv[*q] = j;
        }
        inv
    }

    pub fn order_report(&self) -> String {
        let mut s = String::new();
        for (i, (o, g)) in self.orders.iter().zip(&self.graphs).enumerate() {
            writeln!(s, "segment {}: slots {}", i + 1, o).unwrap();
            for ((a, b), why) in &g.edges {
                let why: Vec<String> = why.iter().map(|r| r.to_string()).collect();
                writeln!(s, "  edge {a}-{b}: {}", why.join(", ")).unwrap();
            }
        }
        let perm: Vec<String> = self.permutation.iter().map(|q| (q + 1).to_string()).collect();
        writeln!(s, "qubit order: {}", perm.join(" ")).unwrap();
        s
    }
}

struct Stats {
    state_builds: usize,
    max_set_size: usize,
}

/// `None` when some slice of a component has no state, i.e. the set is empty.
fn setp_lsta(
    sp: &SetP,
    order: &SlotOrder,
    seg_slots: &[usize],
    lengths: &LengthMap,
    legend: &TagLegend,
    stats: &mut Stats,
    dump: &mut String,
) -> Result<Option<Lsta<AmplitudePoly>>, TranslateError> {
    let var_slots = variable_slots(sp, seg_slots)?;
    let mut acc: Option<Lsta<TagAmp>> = None;
    for v in project_setp(sp, order, seg_slots, &var_slots) {
        let table = constraint_table(&v);
        let slices = expand_qubit_slices(&v, lengths);
        writeln!(dump, "set {} slots {:?}", sp.id, v.slots).unwrap();
        let mut mv: Option<Lsta<ValAmp>> = None;
        for slice in &slices {
            dump.push_str(&describe_slice(slice, &table));
            if slice.states.is_empty() {
                return Ok(None);
            }
            stats.state_builds += slice.states.len();
            let mq = build_setq_lsta(&slice.states)?;
            stats.max_set_size = stats.max_set_size.max(mq.size());
            mv = Some(match mv {
                None => mq,
                Some(prev) => lsta::tensor(&prev, &mq),
            });
        }
        let mv = mv.expect("component without qubits").map_leaves(filter_f);
        acc = Some(match acc {
            None => mv,
            Some(prev) => lsta::tensor(&prev, &mv),
        });
    }
    let mp = acc.expect("set without components");
    for t in &mp.leaves {
        filter_tau(&t.amp, legend, sp.id)?;
    }
    let out = mp.map_leaves(|e| filter_tau(e, legend, sp.id).expect("legend checked above"));
    Ok(Some(out))
}

/// Translates assertions sharing one segment structure. Each output carries
/// its global constraint uninterpreted.
pub fn translate(asts: &[AssertionAst]) -> Result<Translation, TranslateError> {
    let mut lengths = Vec::new();
    for (i, a) in asts.iter().enumerate() {
        let l = infer_lengths(a).map_err(|e| TranslateError::WellFormedness(i, e))?;
        check_well_formed(a, &l).map_err(|e| TranslateError::WellFormedness(i, e))?;
        lengths.push(l);
    }
    let mut aligned = preprocess(asts, &lengths)?;
    let mut empty_sets = BTreeSet::new();
    for a in &mut aligned.assertions {
        for (s, sets) in a.segments.iter_mut().enumerate() {
            let seg_slots = aligned.partition.slots_of(s);
            for sp in sets.iter_mut() {
                let (kept, satisfiable) = detach_unplaced(sp, &seg_slots, &aligned.lengths);
                if !satisfiable {
                    empty_sets.insert(sp.id);
                }
                *sp = kept;
            }
        }
    }
    let partition = &aligned.partition;
    let n_segments = aligned.assertions.first().map(|a| a.segments.len()).unwrap_or(0);

    let mut legend = TagLegend::new();
    for sp in aligned.assertions.iter().flat_map(|a| a.segments.iter().flatten()) {
        for (m, t) in sp.terms.iter().enumerate() {
            legend.insert(sp.id, m as u32 + 1, t.amplitude.clone());
        }
    }

    let mut graphs = Vec::new();
    let mut orders = Vec::new();
    let mut permutation = Vec::new();
    for s in 0..n_segments {
        let seg_slots = partition.slots_of(s);
        let sets: Vec<&SetP> = aligned.assertions.iter().flat_map(|a| a.segments[s].iter()).collect();
        let g = build_dependency_graph(&seg_slots, &sets)?;
        let order = compute_slot_order(&g);
        for comp in &order.components {
            let widths: BTreeSet<usize> = comp.iter().map(|k| partition.width(*k)).collect();
            assert_eq!(widths.len(), 1, "component {comp:?} mixes slot widths");
            let w = *widths.iter().next().unwrap();
            for k in 0..w {
                for slot in comp {
                    permutation.push(partition.start(*slot) - 1 + k);
                }
            }
        }
        graphs.push(g);
        orders.push(order);
    }

    let mut outputs = Vec::new();
    let mut slices = String::new();
    for (i, a) in aligned.assertions.iter().enumerate() {
        let started = Instant::now();
        let mut stats = Stats { state_builds: 0, max_set_size: 0 };
        let mut whole: Option<Lsta<AmplitudePoly>> = None;
        for (s, sets) in a.segments.iter().enumerate() {
            let seg_slots = partition.slots_of(s);
            let mut seg: Option<Lsta<AmplitudePoly>> = None;
            for sp in sets.iter().filter(|sp| !empty_sets.contains(&sp.id)) {
                let Some(mp) =
                    setp_lsta(sp, &orders[s], &seg_slots, &aligned.lengths, &legend, &mut stats, &mut slices)?
                else {
                    continue;
                };
                seg = Some(match seg {
                    None => mp,
                    Some(prev) => lsta::union(&prev, &mp),
                });
            }
            let seg = seg.ok_or(TranslateError::EmptyLanguage(i))?;
            whole = Some(match whole {
                None => seg,
                Some(prev) => lsta::tensor(&prev, &seg),
            });
        }
        let mut m = whole.ok_or(TranslateError::EmptyLanguage(i))?;
        m.variables = m.leaves.iter().flat_map(|t| t.amp.variables()).collect();
        m.validate()?;
        let mut report = measure(&asts[i], &lengths[i]);
        report.final_size = m.size();
        report.final_leaves = m.n_leaves();
        report.state_builds = stats.state_builds;
        report.max_set_size = stats.max_set_size;
        report.build_micros = started.elapsed().as_micros();
        outputs.push(AssertionOutput {
            lsta: m,
            constraint: a.global_constraint.clone(),
            lengths: lengths[i].clone(),
            report,
        });
    }
    Ok(Translation { aligned, graphs, orders, permutation, legend, outputs, slices })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Match,
    /// A state in the automaton's language that the oracle does not produce.
    Extra(StateVector<AlgebraicComplex>),
    /// A state the oracle produces that the automaton lacks.
    Missing(StateVector<AlgebraicComplex>),
    /// The automaton has more states than the oracle set allows.
    TooMany(usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DiffOutcome {
    pub assertion: usize,
    pub theta: usize,
    pub oracle_states: usize,
    pub verdict: Verdict,
}

#[derive(Debug, Error)]
pub enum DiffError {
    #[error(transparent)]
    Translate(#[from] TranslateError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

/// Language of `out` under `theta`, without the zero vector, in the
/// original qubit order. At most `limit` states are collected.
pub fn concrete_language(
    out: &AssertionOutput,
    restore: &[usize],
    theta: &Valuation,
    limit: usize,
) -> Result<Result<BTreeSet<StateVector<AlgebraicComplex>>, usize>, OracleError> {
    if let Some(v) = out.lsta.variables.iter().find(|v| !theta.contains_key(*v)) {
        return Err(OracleError::UnboundComplexVar(v.clone()));
    }
    let concrete = out.lsta.map_leaves(|p| p.eval(theta).expect("variables checked above"));
    match concrete.enumerate_language(concrete.qubits, limit + 1) {
        Ok(set) => Ok(Ok(set.into_iter().filter(|s| !s.is_zero()).map(|s| s.permuted(restore)).collect())),
        Err(_) => Ok(Err(limit)),
    }
}

/// Compares every translated assertion with the oracle under each valuation.
/// Assertions without complex variables are checked once.
pub fn differential_check_translated(
    asts: &[AssertionAst],
    tr: &Translation,
    thetas: &[Valuation],
    cap: usize,
) -> Result<Vec<DiffOutcome>, DiffError> {
    let empty = [Valuation::new()];
    let restore = tr.restore_order();
    let mut outcomes = Vec::new();
    for (i, (ast, out)) in asts.iter().zip(&tr.outputs).enumerate() {
        let samples: &[Valuation] = if ast.complex_vars().is_empty() || thetas.is_empty() { &empty } else { thetas };
        for (k, theta) in samples.iter().enumerate() {
            let expected = oracle::denote(ast, &out.lengths, Some(theta), cap)?;
            let verdict = match concrete_language(out, &restore, theta, expected.len() + 1)? {
                Err(limit) => Verdict::TooMany(limit),
                Ok(actual) => {
                    if let Some(x) = actual.difference(&expected).next() {
                        Verdict::Extra(x.clone())
                    } else if let Some(x) = expected.difference(&actual).next() {
                        Verdict::Missing(x.clone())
                    } else {
                        Verdict::Match
                    }
                }
            };
            outcomes.push(DiffOutcome { assertion: i, theta: k, oracle_states: expected.len(), verdict });
        }
    }
    Ok(outcomes)
}

pub fn differential_check(
    asts: &[AssertionAst],
    thetas: &[Valuation],
    cap: usize,
) -> Result<Vec<DiffOutcome>, DiffError> {
    let tr = translate(asts)?;
    differential_check_translated(asts, &tr, thetas, cap)
}
