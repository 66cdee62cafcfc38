//! Exact arithmetic in `Z[ω, 1/√2]` with `ω = e^{iπ/4}`.
//!
//! A value is `(a + bω + cω² + dω³) / √2^k`. Values are kept in the unique
//! normal form where the numerator is not divisible by `√2` whenever `k > 0`,
//! so derived equality is semantic equality.

use std::fmt;

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AlgebraicComplex {
    a: i128,
    b: i128,
    c: i128,
    d: i128,
    k: u32,
}

fn ck_add(x: i128, y: i128) -> i128 {
    x.checked_add(y).expect("amplitude coefficient overflow")
}

fn ck_sub(x: i128, y: i128) -> i128 {
    x.checked_sub(y).expect("amplitude coefficient overflow")
}

fn ck_mul(x: i128, y: i128) -> i128 {
    x.checked_mul(y).expect("amplitude coefficient overflow")
}

/// Numerator times `√2`, using `√2 = ω − ω³`.
fn times_sqrt2([a, b, c, d]: [i128; 4]) -> [i128; 4] {
    [ck_sub(b, d), ck_add(a, c), ck_add(b, d), ck_sub(c, a)]
}

impl AlgebraicComplex {
    pub fn new(a: i128, b: i128, c: i128, d: i128, k: u32) -> Self {
        let mut x = AlgebraicComplex { a, b, c, d, k };
        x.normalize();
        x
    }

    pub const fn zero() -> Self {
        AlgebraicComplex { a: 0, b: 0, c: 0, d: 0, k: 0 }
    }

    pub const fn one() -> Self {
        AlgebraicComplex { a: 1, b: 0, c: 0, d: 0, k: 0 }
    }

    pub fn from_int(n: i128) -> Self {
        AlgebraicComplex::new(n, 0, 0, 0, 0)
    }

    pub fn imag_unit() -> Self {
        AlgebraicComplex::new(0, 0, 1, 0, 0)
    }

    pub fn omega() -> Self {
        AlgebraicComplex::new(0, 1, 0, 0, 0)
    }

    pub fn sqrt2() -> Self {
        AlgebraicComplex::new(0, 1, 0, -1, 0)
    }

    pub fn inv_sqrt2() -> Self {
        AlgebraicComplex::new(1, 0, 0, 0, 1)
    }

    /// `(a, b, c, d, k)` of the normal form.
    pub fn parts(&self) -> (i128, i128, i128, i128, u32) {
        (self.a, self.b, self.c, self.d, self.k)
    }

    pub fn is_zero(&self) -> bool {
        self.a == 0 && self.b == 0 && self.c == 0 && self.d == 0
    }

    fn numerator(&self) -> [i128; 4] {
        [self.a, self.b, self.c, self.d]
    }

    fn normalize(&mut self) {
        if self.is_zero() {
            self.k = 0;
            return;
        }
        while self.k > 0 && (self.a - self.c).rem_euclid(2) == 0 && (self.b - self.d).rem_euclid(2) == 0 {
            let [a, b, c, d] = times_sqrt2(self.numerator());
            self.a = a / 2;
            self.b = b / 2;
            self.c = c / 2;
            self.d = d / 2;
            self.k -= 1;
        }
    }

    fn raised_to(&self, k: u32) -> [i128; 4] {
        let mut n = self.numerator();
        for _ in self.k..k {
            n = times_sqrt2(n);
        }
        n
    }

    pub fn add(&self, other: &Self) -> Self {
        let k = self.k.max(other.k);
        let x = self.raised_to(k);
        let y = other.raised_to(k);
        AlgebraicComplex::new(ck_add(x[0], y[0]), ck_add(x[1], y[1]), ck_add(x[2], y[2]), ck_add(x[3], y[3]), k)
    }

    pub fn neg(&self) -> Self {
        AlgebraicComplex { a: -self.a, b: -self.b, c: -self.c, d: -self.d, k: self.k }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Self {
        let x = self.numerator();
        let y = other.numerator();
        let mut z = [0i128; 4];
        for (i, xi) in x.iter().enumerate() {
            for (j, yj) in y.iter().enumerate() {
                let p = ck_mul(*xi, *yj);
                let e = i + j;
                // ω⁴ = −1
                if e < 4 {
                    z[e] = ck_add(z[e], p);
                } else {
                    z[e - 4] = ck_sub(z[e - 4], p);
                }
            }
        }
        let k = self.k.checked_add(other.k).expect("amplitude exponent overflow");
        AlgebraicComplex::new(z[0], z[1], z[2], z[3], k)
    }

    pub fn conj(&self) -> Self {
        AlgebraicComplex::new(self.a, -self.d, -self.c, -self.b, self.k)
    }

    /// Multiplicative inverse when it stays inside the ring.
    ///
    /// The inverse exists iff `|x|²·2^k = p + q√2` has norm `p² − 2q² = ±2^j`.
    pub fn try_inv(&self) -> Option<Self> {
        if self.is_zero() {
            return None;
        }
        let num = AlgebraicComplex::new(self.a, self.b, self.c, self.d, 0);
        let sq = num.mul(&num.conj());
        // A real element with k = 0 has the shape p + q(ω − ω³).
        debug_assert!(sq.k == 0 && sq.c == 0 && sq.d == -sq.b);
        let (p, q) = (sq.a, sq.b);
        let norm = ck_sub(ck_mul(p, p), ck_mul(2, ck_mul(q, q)));
        let (sign, mag) = if norm < 0 { (-1i128, -norm) } else { (1i128, norm) };
        if mag & (mag - 1) != 0 {
            return None;
        }
        let j = mag.trailing_zeros();
        let conj_real = AlgebraicComplex::new(sign * p, -sign * q, 0, sign * q, 0);
        let inv_num = num.conj().mul(&conj_real);
        let scale = AlgebraicComplex::new(1, 0, 0, 0, 2 * j);
        Some(inv_num.mul(&scale).mul(&AlgebraicComplex::sqrt2_pow(self.k)))
    }

    pub fn sqrt2_pow(k: u32) -> Self {
        let mut x = AlgebraicComplex::one();
        for _ in 0..k {
            x = x.mul(&AlgebraicComplex::sqrt2());
        }
        x
    }

    pub fn to_f64_pair(&self) -> (f64, f64) {
        let r2 = std::f64::consts::SQRT_2;
        let (a, b, c, d) = (self.a as f64, self.b as f64, self.c as f64, self.d as f64);
        let re = a + (b - d) / r2;
        let im = c + (b + d) / r2;
        let scale = r2.powi(self.k as i32);
        (re / scale, im / scale)
    }

    /// Rendering in the amplitude-expression syntax accepted by the parser.
    pub fn to_expr(&self) -> String {
        let pieces: Vec<(i128, &str)> = [(self.a, ""), (self.b, "(1+i)/sqrt2"), (self.c, "i"), (self.d, "(i-1)/sqrt2")]
            .into_iter()
            .filter(|(n, _)| *n != 0)
            .collect();
        if pieces.is_empty() {
            return "0".to_string();
        }
        let mut body = String::new();
        for (idx, (n, unit)) in pieces.iter().enumerate() {
            let mag = n.unsigned_abs();
            let neg = *n < 0;
            if idx == 0 {
                if neg {
                    body.push('-');
                }
            } else {
                body.push_str(if neg { " - " } else { " + " });
            }
            match (*unit, mag) {
                ("", m) => body.push_str(&m.to_string()),
                (u, 1) => body.push_str(u),
                (u, m) => body.push_str(&format!("{m}*{u}")),
            }
        }
        let compound = pieces.len() > 1 || body.contains('/');
        match self.k {
            0 => body,
            k => {
                let den = if k == 1 { "sqrt2".to_string() } else { format!("sqrt2^{k}") };
                if compound {
                    format!("({body})/{den}")
                } else {
                    format!("{body}/{den}")
                }
            }
        }
    }
}

impl fmt::Display for AlgebraicComplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({} + {} w + {} w2 + {} w3)/sqrt2^{}", self.a, self.b, self.c, self.d, self.k)
    }
}

impl fmt::Debug for AlgebraicComplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}
