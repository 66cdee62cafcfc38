//! Concrete ASCII syntax and its renderer.
//!
//! ```text
//! file      := assertion (';;' assertion)* ';;'?
//! assertion := ('bigU' '[' formula ']')? tset
//! tset      := pset ('(x)' pset)*
//! pset      := uset ('^' INT)?
//! uset      := uatom ('\/' uatom)*
//! uatom     := set | '(' uset ')'
//! set       := '{' dirac (',' dirac)* (':' varcons)? '}'
//! dirac     := ('+' | '-')? term (('+' | '-') term)*
//! term      := amp? ('sum' '[' varcons? ']')? '|' atom* '>'
//! atom      := BITS ('^' INT)? | IDENT | '~' IDENT
//! varcon    := '|' IDENT '|' '=' INT | IDENT '!=' (IDENT | BITS) | IDENT '=' BITS
//! ```
//!
//! The tensor power applies to the whole union before it, so
//! `{|0>} \/ {|1>}^2` is `({|0>} \/ {|1>})^2`.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::amplitude::{AlgebraicComplex, AmplitudePoly};
use crate::ast::*;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SourceSpec {
    pub text: String,
    pub name: String,
}

impl SourceSpec {
    pub fn new(name: &str, text: &str) -> Self {
        SourceSpec { text: text.to_string(), name: name.to_string() }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at {0}:{1}: expected {2}")]
    SyntaxError(usize, usize, String),
}

type PResult<T> = Result<T, ParseError>;

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

fn is_ident_start(c: u8) -> bool {
    c.is_ascii_alphabetic() || c == b'_'
}

fn is_ident_char(c: u8) -> bool {
    c.is_ascii_alphanumeric() || c == b'_' || c == b'\''
}

impl<'a> Parser<'a> {
    fn new(text: &'a str) -> Self {
        Parser { src: text.as_bytes(), pos: 0 }
    }

    fn line_col(&self, pos: usize) -> (usize, usize) {
        let mut line = 1;
        let mut col = 1;
        for &c in &self.src[..pos.min(self.src.len())] {
            if c == b'\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
        }
        (line, col)
    }

    fn err<T>(&self, expected: &str) -> PResult<T> {
        let (l, c) = self.line_col(self.pos);
        Err(ParseError::SyntaxError(l, c, expected.to_string()))
    }

    fn skip_ws(&mut self) {
        loop {
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
                self.pos += 1;
            }
            if self.src[self.pos..].starts_with(b"//") {
                while self.pos < self.src.len() && self.src[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else {
                break;
            }
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn at(&mut self, s: &str) -> bool {
        self.skip_ws();
        self.src[self.pos..].starts_with(s.as_bytes())
    }

    fn at_keyword(&mut self, kw: &str) -> bool {
        if !self.at(kw) {
            return false;
        }
        let after = self.src.get(self.pos + kw.len()).copied();
        !after.map(is_ident_char).unwrap_or(false)
    }

    fn eat(&mut self, s: &str) -> bool {
        if self.at(s) {
            self.pos += s.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, s: &str) -> PResult<()> {
        if self.eat(s) {
            Ok(())
        } else {
            self.err(&format!("`{s}`"))
        }
    }

    fn at_eof(&mut self) -> bool {
        self.peek().is_none()
    }

    fn ident(&mut self) -> PResult<String> {
        self.skip_ws();
        let start = self.pos;
        if self.pos < self.src.len() && is_ident_start(self.src[self.pos]) {
            self.pos += 1;
            while self.pos < self.src.len() && is_ident_char(self.src[self.pos]) {
                self.pos += 1;
            }
            Ok(String::from_utf8_lossy(&self.src[start..self.pos]).into_owned())
        } else {
            self.err("identifier")
        }
    }

    fn uint(&mut self) -> PResult<u64> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return self.err("integer");
        }
        let s = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        match s.parse() {
            Ok(v) => Ok(v),
            Err(_) => {
                self.pos = start;
                self.err("integer in range")
            }
        }
    }

    fn positive(&mut self) -> PResult<u64> {
        let start = self.pos;
        let v = self.uint()?;
        if v == 0 {
            self.pos = start;
            self.skip_ws();
            return self.err("positive integer");
        }
        Ok(v)
    }

    /// `[01]+` optionally followed by `^N`, which repeats the whole run.
    fn bits(&mut self) -> PResult<Bits> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && matches!(self.src[self.pos], b'0' | b'1') {
            self.pos += 1;
        }
        if start == self.pos {
            return self.err("bit string");
        }
        if self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            return self.err("bit string of 0 and 1");
        }
        let run: Bits = self.src[start..self.pos].iter().map(|c| *c == b'1').collect();
        if self.src.get(self.pos) == Some(&b'^') {
            self.pos += 1;
            let n = self.positive()? as usize;
            return Ok(run.iter().copied().cycle().take(run.len() * n).collect());
        }
        Ok(run)
    }

    fn file(&mut self) -> PResult<Vec<AssertionAst>> {
        let mut out = vec![self.assertion()?];
        while self.eat(";;") {
            if self.at_eof() {
                break;
            }
            out.push(self.assertion()?);
        }
        if !self.at_eof() {
            return self.err("`(x)`, `;;` or end of input");
        }
        Ok(out)
    }

    fn assertion(&mut self) -> PResult<AssertionAst> {
        let global_constraint = if self.at_keyword("bigU") {
            self.pos += 4;
            self.expect("[")?;
            let f = self.formula()?;
            self.expect("]")?;
            Some(f)
        } else {
            None
        };
        let mut segments = vec![self.pset()?];
        while self.eat("(x)") {
            segments.push(self.pset()?);
        }
        Ok(AssertionAst { global_constraint, segments })
    }

    fn pset(&mut self) -> PResult<PSet> {
        let base = self.uset()?;
        let power = if self.eat("^") { self.positive()? as u32 } else { 1 };
        Ok(PSet { base, power })
    }

    fn uset(&mut self) -> PResult<USet> {
        let mut alternatives = self.uatom()?;
        while self.eat("\\/") {
            alternatives.extend(self.uatom()?);
        }
        Ok(USet { alternatives })
    }

    fn uatom(&mut self) -> PResult<Vec<SetQ>> {
        if self.at("(x)") {
            return self.err("set or `(`");
        }
        if self.eat("(") {
            let inner = self.uset()?;
            self.expect(")")?;
            return Ok(inner.alternatives);
        }
        Ok(vec![self.set()?])
    }

    fn set(&mut self) -> PResult<SetQ> {
        self.expect("{")?;
        let mut diracs = vec![self.dirac()?];
        while self.eat(",") {
            diracs.push(self.dirac()?);
        }
        let predicate = if self.eat(":") { self.varcons()? } else { Vec::new() };
        self.expect("}")?;
        Ok(SetQ { diracs, predicate })
    }

    fn dirac(&mut self) -> PResult<Dirac> {
        let mut terms = Vec::new();
        let mut negate = if self.eat("+") { false } else { self.eat("-") };
        loop {
            let mut t = self.term()?;
            if negate {
                t.amplitude = t.amplitude.neg();
            }
            terms.push(t);
            if self.eat("+") {
                negate = false;
            } else if self.eat("-") {
                negate = true;
            } else {
                break;
            }
        }
        Ok(Dirac { terms })
    }

    fn term(&mut self) -> PResult<Term> {
        let amplitude = if self.at("|") || self.at_keyword("sum") { AmplitudePoly::one() } else { self.amp_product()? };
        let sum_constraints = if self.at_keyword("sum") {
            self.pos += 3;
            self.expect("[")?;
            let cs = if self.at("]") { Vec::new() } else { self.varcons()? };
            self.expect("]")?;
            cs
        } else {
            Vec::new()
        };
        let pattern = self.ket()?;
        Ok(Term { amplitude, sum_constraints, pattern })
    }

    fn ket(&mut self) -> PResult<Vec<VStrAtom>> {
        self.expect("|")?;
        let mut atoms = Vec::new();
        loop {
            match self.peek() {
                Some(b'>') => {
                    self.pos += 1;
                    break;
                }
                Some(b'0') | Some(b'1') => {
                    atoms.extend(self.bits()?.into_iter().map(VStrAtom::ConstBit));
                }
                Some(b'~') => {
                    self.pos += 1;
                    atoms.push(VStrAtom::ComplVar(self.ident()?));
                }
                Some(c) if is_ident_start(c) => atoms.push(VStrAtom::Var(self.ident()?)),
                _ => return self.err("ket atom or `>`"),
            }
        }
        if atoms.is_empty() {
            return self.err("nonempty ket");
        }
        Ok(atoms)
    }

    fn varcons(&mut self) -> PResult<Vec<VarCon>> {
        let mut out = vec![self.varcon()?];
        while self.eat(",") {
            out.push(self.varcon()?);
        }
        Ok(out)
    }

    fn varcon(&mut self) -> PResult<VarCon> {
        if self.eat("|") {
            let v = self.ident()?;
            self.expect("|")?;
            self.expect("=")?;
            let n = self.positive()? as usize;
            return Ok(VarCon::Len(v, n));
        }
        let v = self.ident()?;
        if self.eat("!=") {
            return match self.peek() {
                Some(c) if c.is_ascii_digit() => Ok(VarCon::NeqConst(v, self.bits()?)),
                _ => Ok(VarCon::NeqVar(v, self.ident()?)),
            };
        }
        if self.eat("=") {
            return Ok(VarCon::EqConst(v, self.bits()?));
        }
        self.err("`!=` or `=`")
    }

    fn amp_sum(&mut self) -> PResult<AmplitudePoly> {
        let mut acc = self.amp_product()?;
        loop {
            if self.eat("+") {
                acc = acc.add(&self.amp_product()?);
            } else if self.eat("-") {
                acc = acc.sub(&self.amp_product()?);
            } else {
                return Ok(acc);
            }
        }
    }

    fn amp_product(&mut self) -> PResult<AmplitudePoly> {
        let mut acc = self.amp_unary()?;
        loop {
            if self.eat("*") {
                acc = acc.mul(&self.amp_unary()?);
            } else if self.at("/") && !self.at("//") {
                self.pos += 1;
                let at = self.pos;
                let d = self.amp_unary()?;
                let inv = d.as_constant().and_then(|c| c.try_inv());
                match inv {
                    Some(inv) => acc = acc.scale(&inv),
                    None => {
                        self.pos = at;
                        self.skip_ws();
                        return self.err("divisor that is an invertible constant");
                    }
                }
            } else {
                return Ok(acc);
            }
        }
    }

    fn amp_unary(&mut self) -> PResult<AmplitudePoly> {
        if self.eat("-") {
            return Ok(self.amp_unary()?.neg());
        }
        let base = self.amp_atom()?;
        if self.eat("^") {
            let e = self.uint()? as u32;
            return Ok(base.pow(e));
        }
        Ok(base)
    }

    fn amp_atom(&mut self) -> PResult<AmplitudePoly> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let inner = self.amp_sum()?;
                self.expect(")")?;
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() => self.amp_number(),
            Some(c) if is_ident_start(c) => {
                let start = self.pos;
                let name = self.ident()?;
                match name.as_str() {
                    "i" => Ok(AmplitudePoly::constant(AlgebraicComplex::imag_unit())),
                    "sqrt2" => Ok(AmplitudePoly::constant(AlgebraicComplex::sqrt2())),
                    "sum" => {
                        self.pos = start;
                        self.err("amplitude")
                    }
                    _ => Ok(AmplitudePoly::var(&name)),
                }
            }
            _ => self.err("amplitude"),
        }
    }

    /// Decimal literal; it must be an integer divided by a power of two.
    fn amp_number(&mut self) -> PResult<AmplitudePoly> {
        self.skip_ws();
        let start = self.pos;
        let int = self.uint()?;
        let mut num = int as i128;
        let mut frac_digits = 0u32;
        if self.src.get(self.pos) == Some(&b'.')
            && self.src.get(self.pos + 1).map(|c| c.is_ascii_digit()).unwrap_or(false)
        {
            self.pos += 1;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                num = num * 10 + (self.src[self.pos] - b'0') as i128;
                frac_digits += 1;
                self.pos += 1;
                if frac_digits > 20 {
                    self.pos = start;
                    return self.err("shorter decimal literal");
                }
            }
        }
        let five = 5i128.pow(frac_digits);
        if num % five != 0 {
            self.pos = start;
            return self.err("decimal with a power-of-two denominator");
        }
        let value = AlgebraicComplex::new(num / five, 0, 0, 0, 2 * frac_digits);
        Ok(AmplitudePoly::constant(value))
    }

    fn formula(&mut self) -> PResult<CConsFormula> {
        let mut acc = self.conj()?;
        while self.eat("||") {
            acc = CConsFormula::Or(Box::new(acc), Box::new(self.conj()?));
        }
        Ok(acc)
    }

    fn conj(&mut self) -> PResult<CConsFormula> {
        let mut acc = self.negation()?;
        while self.eat("&&") {
            acc = CConsFormula::And(Box::new(acc), Box::new(self.negation()?));
        }
        Ok(acc)
    }

    fn negation(&mut self) -> PResult<CConsFormula> {
        if self.at("!") && !self.at("!=") {
            self.pos += 1;
            return Ok(CConsFormula::Not(Box::new(self.negation()?)));
        }
        if self.at("(") {
            let save = self.pos;
            self.pos += 1;
            if let Ok(f) = self.formula() {
                if self.eat(")") && !self.at_cmp() && !self.at_arith_op() {
                    return Ok(f);
                }
            }
            self.pos = save;
        }
        self.comparison()
    }

    fn at_cmp(&mut self) -> bool {
        ["<", ">", "=", "!="].iter().any(|s| self.at(s))
    }

    fn at_arith_op(&mut self) -> bool {
        ["+", "-", "*"].iter().any(|s| self.at(s)) || (self.at("/") && !self.at("//"))
    }

    fn comparison(&mut self) -> PResult<CConsFormula> {
        let lhs = self.arith()?;
        let op = if self.eat("<=") {
            CmpOp::Le
        } else if self.eat(">=") {
            CmpOp::Ge
        } else if self.eat("!=") {
            CmpOp::Ne
        } else if self.eat("==") || self.eat("=") {
            CmpOp::Eq
        } else if self.eat("<") {
            CmpOp::Lt
        } else if self.eat(">") {
            CmpOp::Gt
        } else {
            return self.err("comparison operator");
        };
        let rhs = self.arith()?;
        Ok(CConsFormula::Cmp(lhs, op, rhs))
    }

    fn arith(&mut self) -> PResult<CArith> {
        let mut acc = self.arith_term()?;
        loop {
            let op = if self.eat("+") {
                '+'
            } else if self.eat("-") {
                '-'
            } else {
                return Ok(acc);
            };
            acc = CArith::Bin(op, Box::new(acc), Box::new(self.arith_term()?));
        }
    }

    fn arith_term(&mut self) -> PResult<CArith> {
        let mut acc = self.arith_factor()?;
        loop {
            let op = if self.eat("*") {
                '*'
            } else if self.at("/") && !self.at("//") {
                self.pos += 1;
                '/'
            } else {
                return Ok(acc);
            };
            acc = CArith::Bin(op, Box::new(acc), Box::new(self.arith_factor()?));
        }
    }

    fn arith_factor(&mut self) -> PResult<CArith> {
        if self.eat("-") {
            return Ok(CArith::Neg(Box::new(self.arith_factor()?)));
        }
        if self.eat("(") {
            let inner = self.arith()?;
            self.expect(")")?;
            return Ok(inner);
        }
        if self.eat("|") {
            let v = self.ident()?;
            self.expect("|")?;
            if self.eat("^") {
                let at = self.pos;
                if self.uint()? != 2 {
                    self.pos = at;
                    self.skip_ws();
                    return self.err("exponent 2");
                }
                return Ok(CArith::Abs2(v));
            }
            return Ok(CArith::Abs(v));
        }
        match self.peek() {
            Some(c) if c.is_ascii_digit() => {
                let start = self.pos;
                while self.pos < self.src.len() && (self.src[self.pos].is_ascii_digit() || self.src[self.pos] == b'.') {
                    self.pos += 1;
                }
                let text = String::from_utf8_lossy(&self.src[start..self.pos]).into_owned();
                if text.parse::<f64>().is_err() {
                    self.pos = start;
                    return self.err("number");
                }
                Ok(CArith::Num(text))
            }
            Some(c) if is_ident_start(c) => {
                let name = self.ident()?;
                let ctor: Option<fn(String) -> CArith> = match name.as_str() {
                    "re" | "real" => Some(CArith::Re),
                    "im" | "imag" => Some(CArith::Im),
                    _ => None,
                };
                match ctor {
                    Some(ctor) if self.at("(") => {
                        self.expect("(")?;
                        let v = self.ident()?;
                        self.expect(")")?;
                        Ok(ctor(v))
                    }
                    _ => Ok(CArith::Var(name)),
                }
            }
            _ => self.err("arithmetic operand"),
        }
    }
}

/// Parses a file holding one or more `;;`-separated assertions.
pub fn parse_file(src: &SourceSpec) -> Result<Vec<AssertionAst>, ParseError> {
    Parser::new(&src.text).file()
}

/// Parses exactly one assertion.
pub fn parse(src: &SourceSpec) -> Result<AssertionAst, ParseError> {
    let mut p = Parser::new(&src.text);
    let a = p.assertion()?;
    if !p.at_eof() {
        return p.err("`(x)` or end of input");
    }
    Ok(a)
}

fn render_amp(a: &AmplitudePoly) -> String {
    let s = a.to_expr();
    if s.contains(' ') {
        format!("({s})")
    } else {
        s
    }
}

fn render_varcons(cs: &[VarCon]) -> String {
    cs.iter()
        .map(|c| match c {
            VarCon::Len(v, n) => format!("|{v}|={n}"),
            VarCon::NeqVar(u, v) => format!("{u} != {v}"),
            VarCon::NeqConst(v, b) => format!("{v} != {}", bits_to_string(b)),
            VarCon::EqConst(v, b) => format!("{v} = {}", bits_to_string(b)),
        })
        .collect::<Vec<_>>()
        .join(", ")
}

fn render_ket(atoms: &[VStrAtom]) -> String {
    let mut parts: Vec<String> = Vec::new();
    let mut run = String::new();
    for a in atoms {
        match a {
            VStrAtom::ConstBit(b) => run.push(if *b { '1' } else { '0' }),
            VStrAtom::Var(v) | VStrAtom::ComplVar(v) => {
                if !run.is_empty() {
                    parts.push(std::mem::take(&mut run));
                }
                let prefix = if matches!(a, VStrAtom::ComplVar(_)) { "~" } else { "" };
                parts.push(format!("{prefix}{v}"));
            }
        }
    }
    if !run.is_empty() {
        parts.push(run);
    }
    format!("|{}>", parts.join(" "))
}

fn render_term(t: &Term) -> String {
    let mut s = String::new();
    if t.amplitude != AmplitudePoly::one() {
        s.push_str(&render_amp(&t.amplitude));
        s.push(' ');
    }
    if !t.sum_constraints.is_empty() {
        s.push_str(&format!("sum[{}] ", render_varcons(&t.sum_constraints)));
    }
    s.push_str(&render_ket(&t.pattern));
    s
}

fn render_dirac(d: &Dirac) -> String {
    let mut s = String::new();
    for (i, t) in d.terms.iter().enumerate() {
        let flipped = t.amplitude.neg();
        let negative = t.amplitude.to_expr().starts_with('-') && !flipped.to_expr().starts_with('-');
        let shown = if negative { Term { amplitude: flipped, ..t.clone() } } else { t.clone() };
        match (i, negative) {
            (0, false) => {}
            (0, true) => s.push_str("- "),
            (_, false) => s.push_str(" + "),
            (_, true) => s.push_str(" - "),
        }
        s.push_str(&render_term(&shown));
    }
    s
}

fn render_set(set: &SetQ) -> String {
    let diracs: Vec<String> = set.diracs.iter().map(render_dirac).collect();
    if set.predicate.is_empty() {
        format!("{{ {} }}", diracs.join(", "))
    } else {
        format!("{{ {} : {} }}", diracs.join(", "), render_varcons(&set.predicate))
    }
}

fn render_arith(a: &CArith) -> String {
    let wrap = |x: &CArith| match x {
        CArith::Bin(..) | CArith::Neg(_) => format!("({})", render_arith(x)),
        _ => render_arith(x),
    };
    match a {
        CArith::Num(s) => s.clone(),
        CArith::Var(v) => v.clone(),
        CArith::Re(v) => format!("re({v})"),
        CArith::Im(v) => format!("im({v})"),
        CArith::Abs(v) => format!("|{v}|"),
        CArith::Abs2(v) => format!("|{v}|^2"),
        CArith::Neg(x) => format!("-{}", wrap(x)),
        CArith::Bin(op, x, y) => format!("{} {op} {}", wrap(x), wrap(y)),
    }
}

pub fn render_formula(f: &CConsFormula) -> String {
    let wrap = |x: &CConsFormula| match x {
        CConsFormula::Cmp(..) => render_formula(x),
        _ => format!("({})", render_formula(x)),
    };
    match f {
        CConsFormula::Cmp(x, op, y) => format!("{} {} {}", render_arith(x), op.symbol(), render_arith(y)),
        CConsFormula::And(x, y) => format!("{} && {}", wrap(x), wrap(y)),
        CConsFormula::Or(x, y) => format!("{} || {}", wrap(x), wrap(y)),
        CConsFormula::Not(x) => format!("!{}", wrap(x)),
    }
}

pub fn render_assertion(ast: &AssertionAst) -> String {
    let mut s = String::new();
    if let Some(f) = &ast.global_constraint {
        s.push_str(&format!("bigU[ {} ] ", render_formula(f)));
    }
    let segs: Vec<String> = ast
        .segments
        .iter()
        .map(|p| {
            let sets: Vec<String> = p.base.alternatives.iter().map(render_set).collect();
            let body = sets.join(" \\/ ");
            match (p.power, sets.len()) {
                (1, _) => body,
                (n, 1) => format!("{body}^{n}"),
                (n, _) => format!("({body})^{n}"),
            }
        })
        .collect();
    s.push_str(&segs.join(" (x) "));
    s
}

pub fn render(ast: &AssertionAst) -> SourceSpec {
    SourceSpec::new("rendered", &render_assertion(ast))
}

pub fn render_file(asts: &[AssertionAst]) -> String {
    let parts: Vec<String> = asts.iter().map(render_assertion).collect();
    let mut s = parts.join("\n;;\n");
    s.push('\n');
    s
}

/// Parses `name=expr` valuation bindings with amplitude-expression syntax.
pub fn parse_binding(text: &str) -> Result<(String, AlgebraicComplex), ParseError> {
    let mut p = Parser::new(text);
    let name = p.ident()?;
    p.expect("=")?;
    let value = p.amp_sum()?;
    if !p.at_eof() {
        return p.err("end of binding");
    }
    match value.as_constant() {
        Some(c) => Ok((name, c)),
        None => p.err("constant value"),
    }
}

/// Convenience for tests and generators.
pub fn parse_str(text: &str) -> Result<AssertionAst, ParseError> {
    parse(&SourceSpec::new("inline", text))
}

pub fn valuation_from_bindings(items: &[String]) -> Result<BTreeMap<String, AlgebraicComplex>, ParseError> {
    let mut out = BTreeMap::new();
    for it in items {
        let (k, v) = parse_binding(it)?;
        out.insert(k, v);
    }
    Ok(out)
}
