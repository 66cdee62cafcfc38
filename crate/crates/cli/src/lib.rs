//! Benchmark specification families and the plumbing shared by the `lstaq`
//! subcommands.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use lstaq_core::ast::AssertionAst;
use lstaq_core::oracle::{self, OracleError, Valuation};
use lstaq_core::parser::{parse_file, ParseError, SourceSpec};
use lstaq_core::pipeline::{self, SizeReport, TranslateError, Translation, Verdict};
use lstaq_core::preprocess::render_aligned;
use serde_json::json;

pub const EXIT_PARSE: i32 = 1;
pub const EXIT_WELL_FORMED: i32 = 2;
pub const EXIT_ALIGNMENT: i32 = 3;
pub const EXIT_INTERNAL: i32 = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    Bv,
    Ghz,
    Grover,
    GroverIter,
    McToffoli,
}

impl Family {
    pub const ALL: [Family; 5] = [Family::Bv, Family::Ghz, Family::Grover, Family::GroverIter, Family::McToffoli];

    pub fn parse(name: &str) -> Option<Family> {
        match name {
            "bv" => Some(Family::Bv),
            "ghz" => Some(Family::Ghz),
            "grover" => Some(Family::Grover),
            "groveriter" => Some(Family::GroverIter),
            "mctoffoli" => Some(Family::McToffoli),
            _ => None,
        }
    }

    /// Total qubits of the family at parameter `n`.
    pub fn qubits(self, n: usize) -> usize {
        match self {
            Family::Bv => 2 * n + 1,
            Family::Ghz => n + 1,
            Family::Grover | Family::GroverIter => 3 * n - 1,
            Family::McToffoli => 2 * n,
        }
    }

    pub fn min_parameter(self) -> usize {
        match self {
            Family::Grover | Family::GroverIter | Family::McToffoli => 2,
            _ => 1,
        }
    }

    /// Parameter whose instance has exactly `q` qubits.
    pub fn parameter_for_qubits(self, q: usize) -> Option<usize> {
        let n = match self {
            Family::Bv => q.checked_sub(1)? / 2,
            Family::Ghz => q.checked_sub(1)?,
            Family::Grover | Family::GroverIter => (q + 1) / 3,
            Family::McToffoli => q / 2,
        };
        (n >= self.min_parameter() && self.qubits(n) == q).then_some(n)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Family::Bv => "bv",
            Family::Ghz => "ghz",
            Family::Grover => "grover",
            Family::GroverIter => "groveriter",
            Family::McToffoli => "mctoffoli",
        };
        f.write_str(s)
    }
}

/// One pre/postcondition pair in concrete syntax.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BenchCase {
    pub label: String,
    pub pre: String,
    pub post: String,
}

impl BenchCase {
    pub fn file_text(&self) -> String {
        format!("{}\n;;\n{}\n", self.pre, self.post)
    }
}

/// `b^k` as a ket atom, or nothing when `k` is 0.
fn run(bit: char, k: usize) -> String {
    match k {
        0 => String::new(),
        1 => format!(" {bit}"),
        _ => format!(" {bit}^{k}"),
    }
}

fn ones(n: usize) -> String {
    "1".repeat(n)
}

fn grover_body(h: &str, l: &str, n: usize) -> String {
    let pad = run('0', n - 2);
    format!("{{ {h} |s s{pad} 1> + {l} sum[i != s] |s i{pad} 1> : |s| = {n} }}")
}

/// The pre/postcondition pairs of `family` at parameter `n`.
pub fn family_cases(family: Family, n: usize) -> Vec<BenchCase> {
    assert!(n >= family.min_parameter(), "{family} needs a parameter of at least {}", family.min_parameter());
    let case = |label: &str, pre: String, post: String| BenchCase { label: label.to_string(), pre, post };
    match family {
        Family::Bv => {
            vec![case("bv", format!("{{ |s{} 0> : |s| = {n} }}", run('0', n)), format!("{{ |s s 0> : |s| = {n} }}"))]
        }
        Family::Ghz => vec![case(
            "ghz",
            format!("{{ |b i> : |b| = 1, |i| = {n} }}"),
            format!("{{ (1/sqrt2) |0 i> + (1/sqrt2) |1 ~i>, (1/sqrt2) |0 i> - (1/sqrt2) |1 ~i> : |i| = {n} }}"),
        )],
        Family::Grover => vec![case(
            "grover",
            format!("{{ |s{}{} 0> : |s| = {n} }}", run('0', n), run('0', n - 2)),
            format!("bigU[im(a_h) = 0 && |a_h|^2 > 7/8] {}", grover_body("a_h", "a_l", n)),
        )],
        Family::GroverIter => vec![case(
            "groveriter",
            format!(
                "bigU[im(a_h) = 0 && re(a_h) > 0 && im(a_l) = 0 && re(a_l) > 0 && 7 * a_l > a_h] {}",
                grover_body("a_h", "a_l", n)
            ),
            format!("bigU[im(b_h) = 0 && im(b_l) = 0 && |b_h| > |a_h|] {}", grover_body("b_h", "b_l", n)),
        )],
        Family::McToffoli => {
            let pad = run('0', n - 1);
            let rest = |t: char| format!("{{ |i{pad} {t}> : |i| = {n}, i != {} }}", ones(n));
            let flip = |t: char| format!("{{ |1^{n}{pad} {t}> }}");
            vec![
                case("noflip_t0", rest('0'), rest('0')),
                case("noflip_t1", rest('1'), rest('1')),
                case("flip_t0", flip('0'), flip('1')),
                case("flip_t1", flip('1'), flip('0')),
            ]
        }
    }
}

/// Any failure of a subcommand, with its exit status.
#[derive(Debug)]
pub enum Failure {
    Io(String),
    Parse(String, ParseError),
    Translate(TranslateError),
    Oracle(OracleError),
    Mismatch(String),
    Usage(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Parse(..) => EXIT_PARSE,
            Failure::Translate(e) => translate_exit_code(e),
            Failure::Usage(_) => EXIT_PARSE,
            Failure::Io(_) | Failure::Oracle(_) | Failure::Mismatch(_) => EXIT_INTERNAL,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Io(m) => write!(f, "io error: {m}"),
            Failure::Parse(name, e) => write!(f, "{name}: {e}"),
            Failure::Translate(e) => write!(f, "{}: {e}", translate_error_class(e)),
            Failure::Oracle(e) => write!(f, "oracle: {e}"),
            Failure::Mismatch(m) => write!(f, "oracle mismatch: {m}"),
            Failure::Usage(m) => write!(f, "usage: {m}"),
        }
    }
}

pub fn translate_exit_code(e: &TranslateError) -> i32 {
    match e {
        TranslateError::WellFormedness(..) => EXIT_WELL_FORMED,
        TranslateError::Alignment(_) | TranslateError::Reorder(_) => EXIT_ALIGNMENT,
        TranslateError::Build(_) | TranslateError::EmptyLanguage(_) | TranslateError::Automaton(_) => EXIT_INTERNAL,
    }
}

/// Variant name of the underlying error, used as the diagnostic prefix.
pub fn translate_error_class(e: &TranslateError) -> String {
    let debug = match e {
        TranslateError::WellFormedness(_, inner) => format!("{inner:?}"),
        TranslateError::Alignment(inner) => format!("{inner:?}"),
        TranslateError::Reorder(inner) => format!("{inner:?}"),
        TranslateError::Build(inner) => format!("{inner:?}"),
        TranslateError::Automaton(inner) => format!("{inner:?}"),
        TranslateError::EmptyLanguage(_) => "EmptyLanguage".to_string(),
    };
    debug.split(['(', ' ']).next().unwrap_or_default().to_string()
}

pub fn load(path: &Path) -> Result<Vec<AssertionAst>, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    parse_text(&path.display().to_string(), &text)
}

pub fn parse_text(name: &str, text: &str) -> Result<Vec<AssertionAst>, Failure> {
    parse_file(&SourceSpec::new(name, text)).map_err(|e| Failure::Parse(name.to_string(), e))
}

pub fn stats_json(name: &str, tr: &Translation, elapsed: Duration) -> serde_json::Value {
    let per: Vec<serde_json::Value> = tr.outputs.iter().map(|o| report_json(&o.report)).collect();
    json!({
        "name": name,
        "qubits": tr.permutation.len(),
        "translate_micros": elapsed.as_micros() as u64,
        "assertions": per,
    })
}

fn report_json(r: &SizeReport) -> serde_json::Value {
    json!({
        "L": r.qubits,
        "N_term": r.n_term,
        "N_vc": r.n_vc,
        "N_union": r.n_union,
        "N_amp": r.n_amp,
        "delta": r.final_size,
        "leaves": r.final_leaves,
        "state_builds": r.state_builds,
        "max_slice_union": r.max_set_size,
        "build_micros": r.build_micros as u64,
        "envelope": r.envelope(),
        "within_envelope": r.within_envelope(),
    })
}

#[derive(Clone, Debug, Default)]
pub struct TranslateOptions {
    pub out_dir: PathBuf,
    pub dump_aligned: bool,
    pub order_report: bool,
    pub dump_slices: bool,
    pub stats: bool,
    pub check_oracle: bool,
    pub cap: usize,
    pub thetas: Vec<Valuation>,
}

/// Translates one file's assertions together and writes the automata, the
/// stats and the qubit order next to each other. Returns the text meant for
/// standard output.
pub fn translate_file(path: &Path, opts: &TranslateOptions) -> Result<String, Failure> {
    let asts = load(path)?;
    let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "out".into());
    translate_asts(&name, &asts, opts)
}

pub fn translate_asts(name: &str, asts: &[AssertionAst], opts: &TranslateOptions) -> Result<String, Failure> {
    let started = Instant::now();
    let tr = pipeline::translate(asts).map_err(Failure::Translate)?;
    let elapsed = started.elapsed();
    let mut stdout = String::new();
    fs::create_dir_all(&opts.out_dir).map_err(|e| Failure::Io(format!("{}: {e}", opts.out_dir.display())))?;
    let write = |file: String, text: &str| -> Result<(), Failure> {
        let p = opts.out_dir.join(file);
        fs::write(&p, text).map_err(|e| Failure::Io(format!("{}: {e}", p.display())))
    };
    for (k, out) in tr.outputs.iter().enumerate() {
        let file = if tr.outputs.len() == 1 { format!("{name}.lsta") } else { format!("{name}_{k}.lsta") };
        write(file, &out.to_text())?;
    }
    let stats = stats_json(name, &tr, elapsed);
    write(format!("{name}.stats.json"), &format!("{}\n", serde_json::to_string_pretty(&stats).unwrap()))?;
    write(format!("{name}.order.txt"), &tr.order_report())?;
    if opts.dump_aligned {
        stdout.push_str(&render_aligned(&tr.aligned));
    }
    if opts.order_report {
        stdout.push_str(&tr.order_report());
    }
    if opts.dump_slices {
        stdout.push_str(&tr.slices);
    }
    if opts.stats {
        for (k, o) in tr.outputs.iter().enumerate() {
            let r = &o.report;
            stdout.push_str(&format!(
                "assertion {k}: L={} N_term={} N_vc={} N_union={} N_amp={} |delta|={} envelope={:.3e}\n",
                r.qubits,
                r.n_term,
                r.n_vc,
                r.n_union,
                r.n_amp,
                r.final_size,
                r.envelope()
            ));
        }
    }
    if opts.check_oracle {
        let outcomes =
            pipeline::differential_check_translated(asts, &tr, &opts.thetas, opts.cap).map_err(|e| match e {
                pipeline::DiffError::Translate(t) => Failure::Translate(t),
                pipeline::DiffError::Oracle(o) => Failure::Oracle(o),
            })?;
        for o in &outcomes {
            match &o.verdict {
                Verdict::Match => stdout.push_str(&format!(
                    "oracle check: assertion {} valuation {}: match ({} states)\n",
                    o.assertion, o.theta, o.oracle_states
                )),
                v => {
                    return Err(Failure::Mismatch(format!("assertion {} valuation {}: {v:?}", o.assertion, o.theta)));
                }
            }
        }
    }
    Ok(stdout)
}

/// The denoted set of every assertion, one state per line.
pub fn oracle_listing(asts: &[AssertionAst], theta: &Valuation, cap: usize) -> Result<String, Failure> {
    let mut s = String::new();
    for (k, a) in asts.iter().enumerate() {
        let lengths =
            lstaq_core::ast::infer_lengths(a).map_err(|e| Failure::Translate(TranslateError::WellFormedness(k, e)))?;
        let set = oracle::denote(a, &lengths, Some(theta), cap).map_err(Failure::Oracle)?;
        s.push_str(&format!("assertion {k}: {} states\n", set.len()));
        let mut lines: Vec<String> = set.iter().map(|psi| psi.to_string()).collect();
        lines.sort();
        for l in lines {
            s.push_str(&format!("  {l}\n"));
        }
    }
    Ok(s)
}

#[derive(Clone, Debug)]
pub struct BenchRow {
    pub family: Family,
    pub label: String,
    pub qubits: usize,
    pub pre_size: usize,
    pub post_size: usize,
    pub translate: Duration,
}

/// Translates every case of `family` at the instance with `qubits` qubits.
pub fn bench(family: Family, qubits: usize) -> Result<Vec<BenchRow>, Failure> {
    let n = family
        .parameter_for_qubits(qubits)
        .ok_or_else(|| Failure::Usage(format!("{family} has no instance with {qubits} qubits")))?;
    let mut rows = Vec::new();
    for case in family_cases(family, n) {
        let asts = parse_text(&case.label, &case.file_text())?;
        let started = Instant::now();
        let tr = pipeline::translate(&asts).map_err(Failure::Translate)?;
        let translate = started.elapsed();
        rows.push(BenchRow {
            family,
            label: case.label,
            qubits,
            pre_size: tr.outputs[0].report.final_size,
            post_size: tr.outputs[1].report.final_size,
            translate,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parameters_round_trip() {
        for f in Family::ALL {
            for n in f.min_parameter()..10 {
                assert_eq!(f.parameter_for_qubits(f.qubits(n)), Some(n), "{f} {n}");
            }
        }
        assert_eq!(Family::Bv.parameter_for_qubits(18), None);
        assert_eq!(Family::Grover.parameter_for_qubits(32), Some(11));
    }

    #[test]
    fn every_case_parses() {
        for f in Family::ALL {
            for n in f.min_parameter()..5 {
                for c in family_cases(f, n) {
                    let asts = parse_text(&c.label, &c.file_text()).unwrap();
                    assert_eq!(asts.len(), 2);
                    let q: Vec<usize> =
                        asts.iter().map(|a| a.qubit_count(&lstaq_core::ast::infer_lengths(a).unwrap())).collect();
                    assert_eq!(q, vec![f.qubits(n); 2], "{f} {n} {}", c.label);
                }
            }
        }
    }
}
