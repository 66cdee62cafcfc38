//! Amplitude domains used along the pipeline.

pub mod complex;
pub mod poly;
pub mod tag;
pub mod valamp;

use std::fmt::{Debug, Display};
use std::hash::Hash;

pub use complex::AlgebraicComplex;
pub use poly::AmplitudePoly;
pub use tag::TagAmp;
pub use valamp::{ConstraintTable, ValAmp};

/// Commutative semiring with an absorbing zero; no unit is required.
pub trait Semiring: Clone + Eq + Ord + Hash + Debug + Display {
    /// Name used in the `semiring` line of the automaton text format.
    const KIND: &'static str;
    fn zero() -> Self;
    fn is_zero(&self) -> bool;
    fn add(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
}

impl Semiring for AlgebraicComplex {
    const KIND: &'static str = "complex";
    fn zero() -> Self {
        AlgebraicComplex::zero()
    }
    fn is_zero(&self) -> bool {
        AlgebraicComplex::is_zero(self)
    }
    fn add(&self, other: &Self) -> Self {
        AlgebraicComplex::add(self, other)
    }
    fn mul(&self, other: &Self) -> Self {
        AlgebraicComplex::mul(self, other)
    }
}

impl Semiring for AmplitudePoly {
    const KIND: &'static str = "complex";
    fn zero() -> Self {
        AmplitudePoly::zero()
    }
    fn is_zero(&self) -> bool {
        AmplitudePoly::is_zero(self)
    }
    fn add(&self, other: &Self) -> Self {
        AmplitudePoly::add(self, other)
    }
    fn mul(&self, other: &Self) -> Self {
        AmplitudePoly::mul(self, other)
    }
}

impl Semiring for TagAmp {
    const KIND: &'static str = "tag";
    fn zero() -> Self {
        TagAmp::zero()
    }
    fn is_zero(&self) -> bool {
        TagAmp::is_zero(self)
    }
    fn add(&self, other: &Self) -> Self {
        TagAmp::add(self, other)
    }
    fn mul(&self, other: &Self) -> Self {
        TagAmp::mul(self, other)
    }
}

impl Semiring for ValAmp {
    const KIND: &'static str = "valuation";
    fn zero() -> Self {
        ValAmp::zero()
    }
    fn is_zero(&self) -> bool {
        ValAmp::is_zero(self)
    }
    fn add(&self, other: &Self) -> Self {
        ValAmp::add(self, other)
    }
    fn mul(&self, other: &Self) -> Self {
        ValAmp::mul(self, other)
    }
}
