//! One test per acceptance criterion. Each writes a single `PASS`/`FAIL`
//! line straight to stderr so the verdicts survive output capture.

use std::cell::{Cell, RefCell};
use std::collections::{BTreeMap, BTreeSet};
use std::io::Write as _;
use std::path::PathBuf;
use std::process::Command;
use std::time::Instant;

use lstaq_cli::{bench, family_cases, parse_text, Family};
use lstaq_core::amplitude::{AlgebraicComplex, Semiring, TagAmp, ValAmp};
use lstaq_core::ast::VarCon;
use lstaq_core::build::{build_setq_lsta, build_state_lsta, filter_f};
use lstaq_core::lsta::{self, Lsta, StateId, StateVector};
use lstaq_core::oracle::{Valuation, DEFAULT_CAP};
use lstaq_core::pipeline::{self, differential_check, Verdict};
use lstaq_core::qubit_reorder::expand_qubit_slices;
use lstaq_core::var_reorder::{project_setp, variable_slots, SetV};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};

fn report(n: u32, what: &str, outcome: Result<String, String>) {
    let line = match &outcome {
        Ok(detail) => format!("acceptance {n} ({what}): PASS - {detail}\n"),
        Err(why) => format!("acceptance {n} ({what}): FAIL - {why}\n"),
    };
    let _ = std::io::stderr().write_all(line.as_bytes());
    if let Err(why) = outcome {
        panic!("criterion {n} failed: {why}");
    }
}

fn runner(cases: u32) -> TestRunner {
    let config = Config { cases, failure_persistence: None, ..Config::default() };
    TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha))
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// ---------------------------------------------------------------------------
// 1. Worked examples

const SET_A: &str = "{ a1 sum[|a| = 1, |b| = 1, |c| = 2, |d| = 2, e = 0, a != b] |a b c x w d e> \
    + a2 sum[|f| = 1, |g| = 1, |h| = 2, |j| = 2, |k| = 1] |f g h i j w k> : |i| = 1, |w| = 2, |x| = 1 }";
const SET_B: &str = "{ b1 sum[|l| = 1, |q| = 2, |m| = 2, |n| = 1, y = 0, p != q] |l u p y q m n> \
    + b2 sum[|o| = 1, |r| = 1, |s| = 2, |t| = 1, |v| = 2] |o r s t z v u> : |p| = 2, |u| = 1, |z| = 2, p != z }";

fn source_name(v: &str) -> String {
    v.split('\'').next().unwrap_or(v).to_string()
}

/// Patterns, summation constraints and predicate of a projected set, with
/// generated names mapped back to source names.
fn shape_of(v: &SetV) -> (Vec<Vec<String>>, Vec<BTreeSet<String>>, BTreeSet<String>) {
    let show = |c: &VarCon| c.rename(&|x| source_name(x)).to_string();
    let patterns = v.terms.iter().map(|t| t.pattern.iter().map(|x| source_name(x)).collect()).collect();
    let sums = v.terms.iter().map(|t| t.sum_constraints.iter().map(show).collect()).collect();
    let predicate = v.predicate.iter().map(show).collect();
    (patterns, sums, predicate)
}

fn strings(xs: &[&str]) -> Vec<String> {
    xs.iter().map(|s| s.to_string()).collect()
}

fn set_of(xs: &[&str]) -> BTreeSet<String> {
    xs.iter().map(|s| s.to_string()).collect()
}

fn val(m: u32, bits: &[bool]) -> ValAmp {
    ValAmp::single(m, bits.to_vec())
}

/// One qubit-slice state: for each entry, `amp` on every listed basis state.
fn slice_state(parts: &[(ValAmp, &[u64])]) -> StateVector<ValAmp> {
    let mut psi = StateVector::new(3);
    for (a, kets) in parts {
        for k in *kets {
            psi.accumulate(*k, a);
        }
    }
    psi
}

const T: bool = true;
const F: bool = false;

fn four_cases() -> BTreeSet<StateVector<ValAmp>> {
    let lo: &[u64] = &[0b000, 0b001];
    let mid: &[u64] = &[0b010, 0b011];
    let hi: &[u64] = &[0b100, 0b101];
    let top: &[u64] = &[0b110, 0b111];
    let z0: &[u64] = &[0b000, 0b001, 0b100, 0b101];
    let z1: &[u64] = &[0b010, 0b011, 0b110, 0b111];
    [
        slice_state(&[(val(1, &[F, F]), lo), (val(1, &[F, T]), mid), (val(2, &[F]), z0)]),
        slice_state(&[(val(1, &[T, F]), lo), (val(1, &[T, T]), mid), (val(2, &[T]), z1)]),
        slice_state(&[(val(1, &[T, T]), hi), (val(1, &[T, F]), top), (val(2, &[T]), z0)]),
        slice_state(&[(val(1, &[F, T]), hi), (val(1, &[F, F]), top), (val(2, &[F]), z1)]),
    ]
    .into_iter()
    .collect()
}

enum Rule {
    Internal(&'static str, &'static str),
    Leaf(ValAmp),
}

/// The transitions of the third case, by state name.
fn third_case_rules() -> BTreeMap<&'static str, Rule> {
    let f2 = val(2, &[T]);
    let f12 = val(1, &[T, T]).add(&val(2, &[T]));
    let f1 = val(1, &[T, F]);
    BTreeMap::from([
        ("q000", Rule::Leaf(f2.clone())),
        ("q001", Rule::Leaf(f2)),
        ("q100", Rule::Leaf(f12.clone())),
        ("q101", Rule::Leaf(f12)),
        ("q110", Rule::Leaf(f1.clone())),
        ("q111", Rule::Leaf(f1)),
        ("bot3", Rule::Leaf(ValAmp::zero())),
        ("bot2", Rule::Internal("bot3", "bot3")),
        ("q00", Rule::Internal("q000", "q001")),
        ("q10", Rule::Internal("q100", "q101")),
        ("q11", Rule::Internal("q110", "q111")),
        ("bot1", Rule::Internal("bot2", "bot2")),
        ("q0", Rule::Internal("q00", "bot2")),
        ("q1", Rule::Internal("q10", "q11")),
        ("qe", Rule::Internal("q0", "q1")),
    ])
}

/// Isomorphism between a single-choice automaton and named rules,
/// respecting children order and leaf amplitudes.
fn isomorphic(a: &Lsta<ValAmp>, rules: &BTreeMap<&'static str, Rule>, root: &'static str) -> Result<(), String> {
    ensure(a.size() == rules.len(), || format!("{} transitions, expected {}", a.size(), rules.len()))?;
    ensure(a.num_states as usize == rules.len(), || format!("{} states, expected {}", a.num_states, rules.len()))?;
    let mut by_state: BTreeMap<StateId, Vec<&lsta::InternalTransition>> = BTreeMap::new();
    for t in &a.internal {
        by_state.entry(t.top).or_default().push(t);
    }
    let leaf_of: BTreeMap<StateId, &ValAmp> = a.leaves.iter().map(|t| (t.top, &t.amp)).collect();
    let mut map: BTreeMap<StateId, &'static str> = BTreeMap::new();
    let mut back: BTreeMap<&'static str, StateId> = BTreeMap::new();
    let mut bind =
        |q: StateId, name: &'static str, map: &mut BTreeMap<StateId, &'static str>| -> Result<bool, String> {
            match (map.get(&q), back.get(name)) {
                (Some(n), _) if *n == name => Ok(false),
                (None, None) => {
                    map.insert(q, name);
                    back.insert(name, q);
                    Ok(true)
                }
                _ => Err(format!("state {q} cannot map to {name}")),
            }
        };
    bind(a.root, root, &mut map)?;
    loop {
        let mut grew = false;
        for (q, name) in map.clone() {
            match (&rules[name], by_state.get(&q), leaf_of.get(&q)) {
                (Rule::Internal(l, r), Some(ts), None) if ts.len() == 1 => {
                    grew |= bind(ts[0].left, l, &mut map)?;
                    grew |= bind(ts[0].right, r, &mut map)?;
                }
                (Rule::Leaf(amp), None, Some(got)) => ensure(amp == *got, || format!("leaf {name} carries {got}"))?,
                _ => return Err(format!("state {q} does not match rule {name}")),
            }
        }
        // states no run reaches are matched through their children
        for (name, rule) in rules {
            if map.values().any(|n| n == name) {
                continue;
            }
            if let Rule::Internal(l, r) = rule {
                let want: Option<(StateId, StateId)> = map
                    .iter()
                    .find(|(_, n)| *n == l)
                    .zip(map.iter().find(|(_, n)| *n == r))
                    .map(|((x, _), (y, _))| (*x, *y));
                if let Some((x, y)) = want {
                    let candidate = a
                        .internal
                        .iter()
                        .find(|t| t.left == x && t.right == y && !map.contains_key(&t.top))
                        .map(|t| t.top);
                    if let Some(q) = candidate {
                        grew |= bind(q, name, &mut map)?;
                    }
                }
            }
        }
        if !grew {
            break;
        }
    }
    ensure(map.len() == rules.len(), || format!("only {} of {} states matched", map.len(), rules.len()))
}

fn worked_examples() -> Result<String, String> {
    let asts = parse_text("worked", &format!("{SET_A}\n;;\n{SET_B}\n")).map_err(|e| e.to_string())?;
    let tr = pipeline::translate(&asts).map_err(|e| e.to_string())?;
    let order = tr.orders[0].to_string();
    ensure(order == "[[1,2,7],[3,5,6],[4]]", || format!("slot order {order}"))?;

    let seg_slots = tr.aligned.partition.slots_of(0);
    let sb = &tr.aligned.assertions[1].segments[0][0];
    let var_slots = variable_slots(sb, &seg_slots).map_err(|e| e.to_string())?;
    let parts = project_setp(sb, &tr.orders[0], &seg_slots, &var_slots);
    ensure(parts.len() == 3, || format!("{} projected sets", parts.len()))?;
    let expected = [
        (
            vec![strings(&["l", "u", "n"]), strings(&["o", "r", "u"])],
            vec![set_of(&["|l|=1", "|n|=1"]), set_of(&["|o|=1", "|r|=1"])],
            set_of(&["|u|=1"]),
        ),
        (
            vec![strings(&["p", "q", "m"]), strings(&["s", "z", "v"])],
            vec![set_of(&["|q|=2", "|m|=2", "p!=q"]), set_of(&["|s|=2", "|v|=2"])],
            set_of(&["|p|=2", "|z|=2", "p!=z"]),
        ),
        (vec![strings(&["y"]), strings(&["t"])], vec![set_of(&["y=0"]), set_of(&["|t|=1"])], BTreeSet::new()),
    ];
    for (i, (part, want)) in parts.iter().zip(&expected).enumerate() {
        let got = shape_of(part);
        ensure(&got == want, || format!("projection {} is {got:?}", i + 1))?;
        let tags: Vec<u32> = part.terms.iter().map(|t| t.tag).collect();
        ensure(tags == vec![1, 2], || format!("projection {} tags {tags:?}", i + 1))?;
    }

    let slices = expand_qubit_slices(&parts[1], &tr.aligned.lengths);
    ensure(slices.len() == 2, || format!("{} slices", slices.len()))?;
    let cases = four_cases();
    for s in &slices {
        let got: BTreeSet<StateVector<ValAmp>> = s.states.iter().cloned().collect();
        ensure(got == cases && s.states.len() == 4, || format!("slice {} expands to {:?}", s.index, s.states))?;
    }

    let third = cases.iter().nth(2).cloned().unwrap();
    ensure(third.get(0b110) == val(1, &[T, F]), || "case ordering changed".into())?;
    let m = build_state_lsta(&third).map_err(|e| e.to_string())?;
    isomorphic(&m, &third_case_rules(), "qe")?;

    let f2 = val(2, &[T]);
    let checks = [
        (f2.clone(), TagAmp::single(2)),
        (val(1, &[T, T]).add(&f2), TagAmp::from_indices([1, 2])),
        (val(1, &[T, F]), TagAmp::zero()),
        (ValAmp::zero(), TagAmp::zero()),
    ];
    for (input, want) in &checks {
        ensure(&filter_f(input) == want, || format!("filter_f({input}) = {}", filter_f(input)))?;
    }
    let theta: Valuation = [("a1", c(1, 0, 1)), ("a2", c(0, 1, 2)), ("b1", c(-1, 1, 0)), ("b2", c(1, 0, 3))]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
    let outcomes =
        pipeline::differential_check_translated(&asts, &tr, &[theta], DEFAULT_CAP).map_err(|e| e.to_string())?;
    ensure(outcomes.len() == 2, || format!("{} oracle comparisons", outcomes.len()))?;
    for o in &outcomes {
        ensure(o.verdict == Verdict::Match, || format!("assertion {}: {:?}", o.assertion, o.verdict))?;
    }
    Ok("slot order, three projections, four-case slices, 15-transition automaton, four filter values, oracle agreement"
        .into())
}

#[test]
fn criterion_1_worked_examples() {
    report(1, "worked examples", worked_examples());
}

// ---------------------------------------------------------------------------
// 2. Soundness against the brute-force oracle

fn c(re: i128, im: i128, k: u32) -> AlgebraicComplex {
    AlgebraicComplex::new(re, 0, im, 0, k)
}

/// Three valuations; the second satisfies every benchmark constraint.
fn theta_samples() -> Vec<Valuation> {
    let make = |xs: [(&str, AlgebraicComplex); 4]| -> Valuation {
        let mut v: Valuation = xs.iter().map(|(k, x)| (k.to_string(), *x)).collect();
        for (k, x) in xs {
            v.insert(k.replace('a', "b"), x.mul(&c(1, 1, 0)));
        }
        v
    };
    vec![
        make([("a_h", c(1, 0, 2)), ("a_l", c(1, 0, 4)), ("x", c(0, 0, 0)), ("y", c(0, 0, 0))]),
        make([("a_h", c(1, 0, 0)), ("a_l", c(0, 0, 0)), ("x", c(0, 0, 0)), ("y", c(0, 0, 0))]),
        make([("a_h", c(1, 0, 1)), ("a_l", c(-1, 1, 3)), ("x", c(0, 0, 0)), ("y", c(0, 0, 0))]),
    ]
}

fn constraint_holds(text: &str, theta: &Valuation) -> Option<bool> {
    let asts = parse_text("c", text).ok()?;
    let f = asts[0].global_constraint.as_ref()?;
    let floats = theta.iter().map(|(k, v)| (k.clone(), v.to_f64_pair())).collect();
    f.holds(&floats)
}

fn benchmarks_sound() -> Result<String, String> {
    let thetas = theta_samples();
    let mut checks = 0;
    for family in Family::ALL {
        for n in 2..=4 {
            for case in family_cases(family, n) {
                let asts = parse_text(&case.label, &case.file_text()).map_err(|e| e.to_string())?;
                let outcomes =
                    differential_check(&asts, &thetas, DEFAULT_CAP).map_err(|e| format!("{family} {n}: {e}"))?;
                for o in outcomes {
                    checks += 1;
                    ensure(o.verdict == Verdict::Match, || {
                        format!(
                            "{family} n={n} {} assertion {} valuation {}: {:?}",
                            case.label, o.assertion, o.theta, o.verdict
                        )
                    })?;
                }
            }
        }
    }
    let grover = &family_cases(Family::Grover, 3)[0].post;
    ensure(constraint_holds(grover, &thetas[1]) == Some(true), || {
        "second valuation violates the Grover constraint".into()
    })?;
    Ok(format!("{checks} benchmark comparisons"))
}

#[derive(Clone, Debug)]
enum Atom {
    Bits(u8),
    Set(u8, bool),
    Sum(u8, bool),
}

#[derive(Clone, Debug)]
struct RTerm {
    amp: u8,
    minus: bool,
    atoms: Vec<Atom>,
    extras: Vec<u8>,
    bits: u8,
}

#[derive(Clone, Debug)]
struct RSet {
    diracs: Vec<Vec<RTerm>>,
    preds: Vec<(u8, u8)>,
}

#[derive(Clone, Debug)]
struct Segment {
    widths: Vec<usize>,
    power: u32,
}

fn segments() -> impl Strategy<Value = Vec<Segment>> {
    let seg =
        (prop::collection::vec(1usize..=2, 1..=3), 1u32..=2).prop_map(|(widths, power)| Segment { widths, power });
    prop::collection::vec(seg, 1..=2).prop_filter("at most eight qubits", |segs| {
        segs.iter().map(|s| s.widths.iter().sum::<usize>() * s.power as usize).sum::<usize>() <= 8
    })
}

fn term(slots: usize) -> impl Strategy<Value = RTerm> {
    let atom = prop_oneof![
        any::<u8>().prop_map(Atom::Bits),
        (0u8..2, prop::bool::weighted(0.2)).prop_map(|(i, c)| Atom::Set(i, c)),
        (0u8..2, prop::bool::weighted(0.2)).prop_map(|(i, c)| Atom::Sum(i, c)),
    ];
    (0u8..6, any::<bool>(), prop::collection::vec(atom, slots), prop::collection::vec(0u8..5, 4), any::<u8>())
        .prop_map(|(amp, minus, atoms, extras, bits)| RTerm { amp, minus, atoms, extras, bits })
}

fn set(slots: usize) -> impl Strategy<Value = RSet> {
    let dirac = prop::collection::vec(term(slots), 1..=2);
    (prop::collection::vec(dirac, 1..=2), prop::collection::vec((0u8..4, any::<u8>()), 0..=2))
        .prop_map(|(diracs, preds)| RSet { diracs, preds })
}

fn bits_text(x: u8, w: usize) -> String {
    (0..w).rev().map(|i| if (x >> i) & 1 == 1 { '1' } else { '0' }).collect()
}

const AMPS: [&str; 6] = ["", "0.5 ", "i ", "sqrt2 ", "(1 + i) ", "(1 - i) "];

fn render_term(t: &RTerm, widths: &[usize], set_vars: &mut BTreeSet<String>) -> (String, bool) {
    let mut atoms = Vec::new();
    let mut sums: Vec<(String, usize)> = Vec::new();
    for (a, w) in t.atoms.iter().zip(widths) {
        atoms.push(match a {
            Atom::Bits(x) => bits_text(*x, *w),
            Atom::Set(i, comp) => {
                let v = format!("{}{w}", ["a", "b"][*i as usize]);
                set_vars.insert(v.clone());
                if *comp {
                    format!("~{v}")
                } else {
                    v
                }
            }
            Atom::Sum(i, comp) => {
                let v = format!("{}{w}", ["x", "y"][*i as usize]);
                if !sums.iter().any(|(s, _)| *s == v) {
                    sums.push((v.clone(), *w));
                }
                if *comp {
                    format!("~{v}")
                } else {
                    v
                }
            }
        });
    }
    let mut cons: Vec<String> = sums.iter().map(|(v, w)| format!("|{v}| = {w}")).collect();
    for ((v, w), extra) in sums.iter().zip(&t.extras) {
        let other = if v.starts_with('x') { format!("y{w}") } else { format!("x{w}") };
        match extra {
            1 => cons.push(format!("{v} != {}", bits_text(t.bits, *w))),
            2 => cons.push(format!("{v} = {}", bits_text(t.bits >> 2, *w))),
            3 => {
                let s = format!("a{w}");
                cons.push(format!("{v} != {s}"));
                set_vars.insert(s);
            }
            4 if sums.iter().any(|(s, _)| *s == other) => cons.push(format!("{v} != {other}")),
            _ => {}
        }
    }
    let sum = if cons.is_empty() { String::new() } else { format!("sum[{}] ", cons.join(", ")) };
    (format!("{}{sum}|{}>", AMPS[t.amp as usize], atoms.join(" ")), t.minus)
}

fn render_set(s: &RSet, widths: &[usize]) -> String {
    let mut set_vars = BTreeSet::new();
    let mut diracs = Vec::new();
    for d in &s.diracs {
        let mut text = String::new();
        for (k, t) in d.iter().enumerate() {
            let (body, minus) = render_term(t, widths, &mut set_vars);
            text.push_str(match (k, minus) {
                (0, false) => "",
                (0, true) => "-",
                (_, false) => " + ",
                (_, true) => " - ",
            });
            text.push_str(&body);
        }
        diracs.push(text);
    }
    let mut preds: Vec<String> = Vec::new();
    let vars: Vec<String> = set_vars.iter().cloned().collect();
    for (kind, x) in &s.preds {
        let Some(v) = vars.get(*x as usize % vars.len().max(1)) else { continue };
        let w: usize = v[1..].parse().unwrap();
        match kind {
            0 => preds.push(format!("{v} != {}", bits_text(*x, w))),
            1 => preds.push(format!("{v} = {}", bits_text(*x >> 3, w))),
            _ => {
                let other = if v.starts_with('a') { format!("b{w}") } else { format!("a{w}") };
                if set_vars.contains(&other) {
                    preds.push(format!("{v} != {other}"));
                }
            }
        }
    }
    let mut all: Vec<String> = set_vars.iter().map(|v| format!("|{v}| = {}", &v[1..])).collect();
    all.extend(preds);
    if all.is_empty() {
        format!("{{ {} }}", diracs.join(", "))
    } else {
        format!("{{ {} : {} }}", diracs.join(", "), all.join(", "))
    }
}

/// One assertion per element of `sets`, all sharing `segs`.
fn render_spec(segs: &[Segment], sets: &[Vec<Vec<RSet>>]) -> String {
    let mut out = Vec::new();
    for per_segment in sets {
        let parts: Vec<String> = segs
            .iter()
            .zip(per_segment)
            .map(|(seg, alts)| {
                let body: Vec<String> = alts.iter().map(|s| render_set(s, &seg.widths)).collect();
                let body = body.join(" \\/ ");
                if seg.power > 1 {
                    format!("({body})^{}", seg.power)
                } else {
                    body
                }
            })
            .collect();
        out.push(parts.join(" (x) "));
    }
    out.join("\n;;\n")
}

fn random_specs() -> impl Strategy<Value = String> {
    segments().prop_flat_map(|segs| {
        let per_assertion = segs.iter().map(|s| prop::collection::vec(set(s.widths.len()), 1..=2)).collect::<Vec<_>>();
        let assertions = prop::collection::vec(per_assertion, 1..=2);
        (Just(segs), assertions).prop_map(|(segs, sets)| render_spec(&segs, &sets))
    })
}

fn random_sound() -> Result<String, String> {
    let stats = RefCell::new(BTreeMap::<&str, usize>::new());
    let result = runner(500).run(&random_specs(), |text| {
        let asts = parse_text("random", &text).map_err(|e| TestCaseError::fail(format!("{e}\n{text}")))?;
        match differential_check(&asts, &[], DEFAULT_CAP) {
            Ok(outcomes) => {
                *stats.borrow_mut().entry("translated").or_default() += 1;
                for o in outcomes {
                    if o.verdict != Verdict::Match {
                        return Err(TestCaseError::fail(format!("{text}\nassertion {}: {:?}", o.assertion, o.verdict)));
                    }
                }
            }
            Err(pipeline::DiffError::Translate(pipeline::TranslateError::EmptyLanguage(i))) => {
                let lengths = lstaq_core::ast::infer_lengths(&asts[i]).unwrap();
                let denoted = lstaq_core::oracle::denote(&asts[i], &lengths, None, DEFAULT_CAP)
                    .map_err(|e| TestCaseError::fail(e.to_string()))?;
                if !denoted.is_empty() {
                    return Err(TestCaseError::fail(format!("{text}\nreported empty, oracle has {}", denoted.len())));
                }
                *stats.borrow_mut().entry("empty").or_default() += 1;
            }
            Err(e) => return Err(TestCaseError::fail(format!("{text}\n{e}"))),
        }
        Ok(())
    });
    result.map_err(|e| e.to_string())?;
    Ok(format!("500 random specifications, {:?}", stats.into_inner()))
}

#[test]
fn criterion_2_soundness() {
    let started = Instant::now();
    let outcome = benchmarks_sound().and_then(|a| random_sound().map(|b| format!("{a}; {b}")));
    report(2, "soundness", outcome.map(|s| format!("{s} in {:.1}s", started.elapsed().as_secs_f64())));
}

// ---------------------------------------------------------------------------
// 3 and 6. Size bounds and choice disjointness on random operands

fn state_strategy(n: usize) -> impl Strategy<Value = StateVector<AlgebraicComplex>> {
    prop::collection::vec((0u64..(1 << n), -2i128..=2, 0i128..=1), 1..=(1 << n).min(6)).prop_filter_map(
        "nonzero",
        move |entries| {
            let mut psi = StateVector::new(n);
            for (x, re, im) in entries {
                psi.accumulate(x, &c(re, im, 0));
            }
            (!psi.is_zero()).then_some(psi)
        },
    )
}

fn set_lsta(states: &[StateVector<AlgebraicComplex>]) -> Lsta<AlgebraicComplex> {
    build_setq_lsta(states).expect("nonempty states")
}

type Language = BTreeSet<StateVector<AlgebraicComplex>>;

fn tensor_lang(a: &Language, b: &Language) -> Language {
    a.iter().flat_map(|x| b.iter().map(move |y| x.tensor(y))).collect()
}

/// Ten random operations on one-qubit and matching-width operands.
fn chains() -> impl Strategy<Value = Vec<(bool, Vec<u64>, Vec<i128>)>> {
    prop::collection::vec(
        (any::<bool>(), prop::collection::vec(any::<u64>(), 1..=3), prop::collection::vec(-2i128..=2, 3)),
        10,
    )
}

fn operand(n: usize, keys: &[u64], amps: &[i128]) -> Vec<StateVector<AlgebraicComplex>> {
    keys.iter()
        .enumerate()
        .map(|(k, key)| {
            let mut psi = StateVector::new(n);
            psi.accumulate(key % (1 << n), &c(amps[k % amps.len()].max(1), 0, 0));
            psi.accumulate((key >> 7) % (1 << n), &c(amps[(k + 1) % amps.len()], 1, 0));
            psi
        })
        .collect()
}

fn bounds_and_validity() -> Result<(usize, usize), String> {
    let mut ops = 0usize;
    let mut automata = 0usize;
    let mut state_runner = runner(300);
    for n in 1..=4 {
        state_runner
            .run(&state_strategy(n), |psi| {
                let a = build_state_lsta(&psi).unwrap();
                prop_assert!(a.size() <= (psi.amps.len() + 1) * (n + 1));
                prop_assert!(a.validate().is_ok());
                prop_assert_eq!(a.enumerate_language(n, 2).unwrap().into_iter().collect::<Vec<_>>(), vec![psi]);
                Ok(())
            })
            .map_err(|e| e.to_string())?;
        automata += 300;
    }
    let steps_done = Cell::new(0usize);
    runner(200)
        .run(&chains(), |steps| {
            let mut acc = set_lsta(&operand(1, &[1, 2], &[1, 1, 1]));
            let mut lang: Language = operand(1, &[1, 2], &[1, 1, 1]).into_iter().collect();
            for (is_union, keys, amps) in steps {
                let n = if is_union { acc.qubits } else { 1 };
                let states = operand(n, &keys, &amps);
                let b = set_lsta(&states);
                let b_lang: Language = states.into_iter().filter(|s| !s.is_zero()).collect();
                if b_lang.is_empty() {
                    continue;
                }
                let next = if is_union { lsta::union(&acc, &b) } else { lsta::tensor(&acc, &b) };
                let bound = if is_union { acc.size() + b.size() } else { acc.size() + acc.n_leaves() * b.size() };
                prop_assert!(next.size() <= bound, "size {} above {}", next.size(), bound);
                prop_assert!(next.validate().is_ok(), "{:?}", next.validate());
                lang = if is_union { lang.union(&b_lang).cloned().collect() } else { tensor_lang(&lang, &b_lang) };
                if next.qubits <= 6 && lang.len() <= 64 {
                    let got: Language = next
                        .enumerate_language(next.qubits, 4096)
                        .unwrap()
                        .into_iter()
                        .filter(|s| !s.is_zero())
                        .collect();
                    prop_assert_eq!(&got, &lang);
                }
                acc = next;
                steps_done.set(steps_done.get() + 1);
            }
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    ops += steps_done.get();
    automata += steps_done.get();
    Ok((ops, automata))
}

#[test]
fn criterion_3_size_bounds() {
    let outcome = bounds_and_validity().and_then(|(ops, _)| {
        ensure(cfg!(debug_assertions), || "debug assertions are disabled; per-construction bounds unchecked".into())?;
        Ok(format!("1200 state builds and {ops} union/tensor steps within bounds, debug assertions armed"))
    });
    report(3, "size bounds", outcome);
}

#[test]
fn criterion_6_choice_disjointness() {
    let outcome = bounds_and_validity().and_then(|(ops, automata)| {
        for family in Family::ALL {
            for case in family_cases(family, 3) {
                let asts = parse_text(&case.label, &case.file_text()).map_err(|e| e.to_string())?;
                let tr = pipeline::translate(&asts).map_err(|e| e.to_string())?;
                for o in &tr.outputs {
                    o.lsta.validate().map_err(|e| format!("{family} {}: {e}", case.label))?;
                }
            }
        }
        Ok(format!("{automata} automata valid, 200 chains of 10 operations ({ops} steps)"))
    });
    report(6, "choice disjointness", outcome);
}

// ---------------------------------------------------------------------------
// 4. Linear growth in the qubit count

fn max_relative_residual(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = points.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    let icept = my - slope * mx;
    points.iter().map(|(x, y)| ((y - (icept + slope * x)) / y).abs()).fold(0.0, f64::max)
}

fn linearity() -> Result<String, String> {
    let mut worst = 0f64;
    let mut slowest = 0f64;
    for family in [Family::Bv, Family::McToffoli] {
        let mut series: BTreeMap<(String, bool), Vec<(f64, f64)>> = BTreeMap::new();
        for n in [4, 8, 16, 32, 64, 128] {
            for row in bench(family, family.qubits(n)).map_err(|e| e.to_string())? {
                let l = row.qubits as f64;
                series.entry((row.label.clone(), false)).or_default().push((l, row.pre_size as f64));
                series.entry((row.label.clone(), true)).or_default().push((l, row.post_size as f64));
                if n == 128 {
                    slowest = slowest.max(row.translate.as_secs_f64());
                    ensure(row.translate.as_secs_f64() < 2.0, || format!("{family} n=128 took {:?}", row.translate))?;
                }
            }
        }
        for ((label, post), pts) in series {
            let r = max_relative_residual(&pts);
            worst = worst.max(r);
            ensure(r < 0.05, || format!("{label} {} residual {r:.4}", if post { "post" } else { "pre" }))?;
        }
    }
    let grover = bench(Family::Grover, 32).map_err(|e| e.to_string())?;
    let g = grover[0].translate.as_secs_f64();
    ensure(g < 1.0, || format!("grover 32 took {g:.3}s"))?;
    Ok(format!("worst residual {:.2e}, slowest n=128 {:.3}s, grover 32 {:.3}s", worst, slowest, g))
}

#[test]
fn criterion_4_linearity() {
    report(4, "linear size and translation time", linearity());
}

// ---------------------------------------------------------------------------
// 5. Semiring laws

fn laws<A: Semiring>(a: &A, b: &A, x: &A) -> Result<(), TestCaseError> {
    prop_assert_eq!(a.add(b), b.add(a));
    prop_assert_eq!(a.mul(b), b.mul(a));
    prop_assert_eq!(a.add(b).add(x), a.add(&b.add(x)));
    prop_assert_eq!(a.mul(b).mul(x), a.mul(&b.mul(x)));
    prop_assert_eq!(a.mul(&b.add(x)), a.mul(b).add(&a.mul(x)));
    prop_assert_eq!(a.add(&A::zero()), a.clone());
    prop_assert!(a.mul(&A::zero()).is_zero());
    Ok(())
}

fn complex() -> impl Strategy<Value = AlgebraicComplex> {
    (-4i128..=4, -4i128..=4, -4i128..=4, -4i128..=4, 0u32..=3)
        .prop_map(|(a, b, c, d, k)| AlgebraicComplex::new(a, b, c, d, k))
}

fn tag() -> impl Strategy<Value = TagAmp> {
    prop::collection::btree_set(0u32..6, 0..4).prop_map(TagAmp::from_indices)
}

/// Term `m` always has `m % 3 + 1` constraints.
fn valuation_amp() -> impl Strategy<Value = ValAmp> {
    prop::collection::vec(prop::option::of(prop::collection::vec(any::<bool>(), 3)), 4).prop_map(|slots| {
        let mut v = ValAmp::zero();
        for (m, bits) in slots.into_iter().enumerate() {
            if let Some(mut bits) = bits {
                bits.truncate(m % 3 + 1);
                v = v.add(&ValAmp::single(m as u32, bits));
            }
        }
        v
    })
}

#[derive(Clone, Debug)]
enum Expr {
    Leaf(AlgebraicComplex),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
}

fn expr() -> impl Strategy<Value = Expr> {
    let leaf = (-2i128..=2, -2i128..=2, -2i128..=2, -2i128..=2, 0u32..=3)
        .prop_map(|(a, b, c, d, k)| Expr::Leaf(AlgebraicComplex::new(a, b, c, d, k)));
    leaf.prop_recursive(8, 48, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Add(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Sub(Box::new(a), Box::new(b))),
            (inner.clone(), inner).prop_map(|(a, b)| Expr::Mul(Box::new(a), Box::new(b))),
        ]
    })
}

fn exact(e: &Expr) -> AlgebraicComplex {
    match e {
        Expr::Leaf(x) => *x,
        Expr::Add(a, b) => exact(a).add(&exact(b)),
        Expr::Sub(a, b) => exact(a).sub(&exact(b)),
        Expr::Mul(a, b) => exact(a).mul(&exact(b)),
    }
}

fn float(e: &Expr) -> (f64, f64) {
    match e {
        Expr::Leaf(x) => x.to_f64_pair(),
        Expr::Add(a, b) => {
            let (x, y) = (float(a), float(b));
            (x.0 + y.0, x.1 + y.1)
        }
        Expr::Sub(a, b) => {
            let (x, y) = (float(a), float(b));
            (x.0 - y.0, x.1 - y.1)
        }
        Expr::Mul(a, b) => {
            let (x, y) = (float(a), float(b));
            (x.0 * y.0 - x.1 * y.1, x.0 * y.1 + x.1 * y.0)
        }
    }
}

fn semiring_laws() -> Result<String, String> {
    let cases = 10_000;
    runner(cases)
        .run(&(complex(), complex(), complex()), |(a, b, x)| laws(&a, &b, &x))
        .map_err(|e| format!("complex: {e}"))?;
    runner(cases).run(&(tag(), tag(), tag()), |(a, b, x)| laws(&a, &b, &x)).map_err(|e| format!("tag: {e}"))?;
    runner(cases)
        .run(&(valuation_amp(), valuation_amp(), valuation_amp()), |(a, b, x)| laws(&a, &b, &x))
        .map_err(|e| format!("valuation: {e}"))?;
    runner(cases)
        .run(&expr(), |e| {
            let (re, im) = exact(&e).to_f64_pair();
            let (fr, fi) = float(&e);
            let scale = 1f64.max(re.hypot(im));
            prop_assert!(
                (re - fr).abs() <= 1e-9 * scale && (im - fi).abs() <= 1e-9 * scale,
                "{re}+{im}i vs {fr}+{fi}i"
            );
            Ok(())
        })
        .map_err(|e| format!("float agreement: {e}"))?;
    Ok(format!("{cases} cases each for three semirings and float agreement (relative 1e-9, depth 8)"))
}

#[test]
fn criterion_5_semiring_laws() {
    report(5, "semiring laws", semiring_laws());
}

// ---------------------------------------------------------------------------
// 7. Negative controls

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn negative_controls() -> Result<String, String> {
    let out = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cases = [
        ("segment_count.qspec", 3, "SegmentCountMismatch"),
        ("segment_length.qspec", 3, "SegmentLengthMismatch"),
        ("variable_overlap.qspec", 3, "VariableOverlap"),
        ("redundant_sum.qspec", 2, "RedundantSummationVar"),
        ("unknown_length.qspec", 2, "UnknownLength"),
        ("conflicting_length.qspec", 2, "ConflictingLength"),
        ("union_length.qspec", 2, "LengthMismatch"),
        ("syntax.qspec", 1, "syntax error"),
    ];
    for (file, code, class) in cases {
        let run = Command::new(env!("CARGO_BIN_EXE_lstaq"))
            .args(["translate", fixture(file).to_str().unwrap(), "-o", out.path().to_str().unwrap()])
            .output()
            .map_err(|e| e.to_string())?;
        let stderr = String::from_utf8_lossy(&run.stderr);
        ensure(run.status.code() == Some(code), || format!("{file}: exit {:?}, expected {code}", run.status.code()))?;
        ensure(stderr.contains(class), || format!("{file}: diagnostic {stderr:?} lacks {class}"))?;
    }
    let ok = Command::new(env!("CARGO_BIN_EXE_lstaq"))
        .args([
            "translate",
            fixture("bv3.qspec").to_str().unwrap(),
            "-o",
            out.path().to_str().unwrap(),
            "--check-oracle",
        ])
        .output()
        .map_err(|e| e.to_string())?;
    ensure(ok.status.success(), || format!("control spec failed: {}", String::from_utf8_lossy(&ok.stderr)))?;
    Ok(format!("{} error classes with their exit codes, plus a passing control", cases.len()))
}

#[test]
fn criterion_7_negative_controls() {
    report(7, "negative controls", negative_controls());
}
