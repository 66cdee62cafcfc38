//! Polynomials over complex-variable names with exact coefficients.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::complex::AlgebraicComplex;

/// Sorted `(variable, exponent)` pairs; exponents are at least 1.
pub type Monomial = Vec<(String, u32)>;

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct AmplitudePoly {
    terms: BTreeMap<Monomial, AlgebraicComplex>,
}

fn mono_mul(x: &Monomial, y: &Monomial) -> Monomial {
    let mut acc: BTreeMap<String, u32> = BTreeMap::new();
    for (v, e) in x.iter().chain(y.iter()) {
        *acc.entry(v.clone()).or_insert(0) += e;
    }
    acc.into_iter().collect()
}

impl AmplitudePoly {
    pub fn zero() -> Self {
        AmplitudePoly::default()
    }

    pub fn constant(c: AlgebraicComplex) -> Self {
        let mut p = AmplitudePoly::zero();
        if !c.is_zero() {
            p.terms.insert(Vec::new(), c);
        }
        p
    }

    pub fn one() -> Self {
        AmplitudePoly::constant(AlgebraicComplex::one())
    }

    pub fn var(name: &str) -> Self {
        let mut p = AmplitudePoly::zero();
        p.terms.insert(vec![(name.to_string(), 1)], AlgebraicComplex::one());
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &AlgebraicComplex)> {
        self.terms.iter()
    }

    /// The value when the polynomial has no variables.
    pub fn as_constant(&self) -> Option<AlgebraicComplex> {
        match self.terms.len() {
            0 => Some(AlgebraicComplex::zero()),
            1 => self.terms.get(&Vec::new()).copied(),
            _ => None,
        }
    }

    pub fn variables(&self) -> BTreeSet<String> {
        self.terms.keys().flat_map(|m| m.iter().map(|(v, _)| v.clone())).collect()
    }

    fn insert_add(&mut self, m: Monomial, c: AlgebraicComplex) {
        let merged = match self.terms.get(&m) {
            Some(old) => old.add(&c),
            None => c,
        };
        if merged.is_zero() {
            self.terms.remove(&m);
        } else {
            self.terms.insert(m, merged);
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.insert_add(m.clone(), *c);
        }
        out
    }

    pub fn neg(&self) -> Self {
        AmplitudePoly { terms: self.terms.iter().map(|(m, c)| (m.clone(), c.neg())).collect() }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = AmplitudePoly::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                out.insert_add(mono_mul(m1, m2), c1.mul(c2));
            }
        }
        out
    }

    pub fn scale(&self, c: &AlgebraicComplex) -> Self {
        self.mul(&AmplitudePoly::constant(*c))
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut out = AmplitudePoly::one();
        for _ in 0..e {
            out = out.mul(self);
        }
        out
    }

    /// Substitutes every variable; returns the first unbound name on failure.
    pub fn eval(&self, theta: &BTreeMap<String, AlgebraicComplex>) -> Result<AlgebraicComplex, String> {
        let mut acc = AlgebraicComplex::zero();
        for (m, c) in &self.terms {
            let mut v = *c;
            for (name, e) in m {
                let x = theta.get(name).ok_or_else(|| name.clone())?;
                for _ in 0..*e {
                    v = v.mul(x);
                }
            }
            acc = acc.add(&v);
        }
        Ok(acc)
    }

    /// Rendering in the amplitude-expression syntax accepted by the parser.
    pub fn to_expr(&self) -> String {
        if self.terms.is_empty() {
            return "0".to_string();
        }
        let mut parts = Vec::new();
        for (m, c) in &self.terms {
            let mut factors = Vec::new();
            let coef = c.to_expr();
            let bare = m.is_empty();
            if bare || *c != AlgebraicComplex::one() {
                if !bare && *c == AlgebraicComplex::one().neg() {
                    factors.push("-1".to_string());
                } else if coef.contains(' ') && !bare {
                    factors.push(format!("({coef})"));
                } else {
                    factors.push(coef);
                }
            }
            for (v, e) in m {
                if *e == 1 {
                    factors.push(v.clone());
                } else {
                    factors.push(format!("{v}^{e}"));
                }
            }
            parts.push(factors.join("*"));
        }
        parts.join(" + ")
    }
}

impl fmt::Display for AmplitudePoly {
    /// Leaf-label form: `coef` or `coef*v*w^2`, summands joined by ` + `.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (m, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "{c}")?;
            for (v, e) in m {
                if *e == 1 {
                    write!(f, "*{v}")?;
                } else {
                    write!(f, "*{v}^{e}")?;
                }
            }
        }
        Ok(())
    }
}

impl fmt::Debug for AmplitudePoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_expr())
    }
}
