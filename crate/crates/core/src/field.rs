//! Prime fields GF(p).
//!
//! Matrices store raw residues and do their arithmetic through [`FieldSpec`];
//! [`Fe`] is the checked, self-describing element type used at API edges.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FieldError {
    #[error("modulus {0} is not a prime")]
    NotPrime(u32),
    #[error("elements from GF({0}) and GF({1}) cannot be combined")]
    FieldMismatch(u32, u32),
    #[error("division by zero")]
    DivisionByZero,
}

/// A prime field GF(p).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct FieldSpec {
    p: u32,
}

impl TryFrom<u32> for FieldSpec {
    type Error = FieldError;

    fn try_from(p: u32) -> Result<Self, Self::Error> {
        FieldSpec::new(p)
    }
}

impl From<FieldSpec> for u32 {
    fn from(f: FieldSpec) -> u32 {
        f.p
    }
}

impl fmt::Display for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GF({})", self.p)
    }
}

impl FieldSpec {
    pub fn new(p: u32) -> Result<Self, FieldError> {
        if !is_prime(p as u64) {
            return Err(FieldError::NotPrime(p));
        }
        Ok(Self { p })
    }

    #[inline]
    pub fn modulus(self) -> u32 {
        self.p
    }

    /// Wraps an arbitrary integer into the field.
    pub fn elem(self, value: i64) -> Fe {
        Fe {
            value: self.reduce(value),
            field: self,
        }
    }

    pub fn zero(self) -> Fe {
        Fe {
            value: 0,
            field: self,
        }
    }

    pub fn one(self) -> Fe {
        Fe {
            value: 1,
            field: self,
        }
    }

    /// All field elements in value order.
    pub fn elements(self) -> impl Iterator<Item = Fe> {
        (0..self.p).map(move |value| Fe { value, field: self })
    }

    #[inline]
    pub fn reduce(self, value: i64) -> u32 {
        value.rem_euclid(self.p as i64) as u32
    }

    #[inline]
    pub fn add(self, a: u32, b: u32) -> u32 {
        ((a as u64 + b as u64) % self.p as u64) as u32
    }

    #[inline]
    pub fn sub(self, a: u32, b: u32) -> u32 {
        ((a as u64 + self.p as u64 - b as u64) % self.p as u64) as u32
    }

    #[inline]
    pub fn mul(self, a: u32, b: u32) -> u32 {
        ((a as u64 * b as u64) % self.p as u64) as u32
    }

    #[inline]
    pub fn neg(self, a: u32) -> u32 {
        if a == 0 {
            0
        } else {
            self.p - a
        }
    }

    /// Multiplicative inverse by Fermat's little theorem.
    pub fn inv(self, a: u32) -> Result<u32, FieldError> {
        if a.is_multiple_of(self.p) {
            return Err(FieldError::DivisionByZero);
        }
        Ok(self.pow(a, self.p as u64 - 2))
    }

    pub fn pow(self, mut base: u32, mut exp: u64) -> u32 {
        let mut acc = 1 % self.p;
        base %= self.p;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            exp >>= 1;
        }
        acc
    }

    /// Number of bits needed per symbol, `ceil(log2 p)`.
    pub fn symbol_bits(self) -> u32 {
        ceil_log2(self.p as u64)
    }
}

/// An element of a prime field. Carries its field so that mixing fields is
/// caught instead of silently reduced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Fe {
    value: u32,
    field: FieldSpec,
}

impl fmt::Display for Fe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

impl Fe {
    pub fn value(self) -> u32 {
        self.value
    }

    pub fn field(self) -> FieldSpec {
        self.field
    }

    pub fn is_zero(self) -> bool {
        self.value == 0
    }

    fn same_field(self, other: Fe) -> Result<FieldSpec, FieldError> {
        if self.field != other.field {
            return Err(FieldError::FieldMismatch(
                self.field.modulus(),
                other.field.modulus(),
            ));
        }
        Ok(self.field)
    }

    pub fn checked_add(self, other: Fe) -> Result<Fe, FieldError> {
        let f = self.same_field(other)?;
        Ok(Fe {
            value: f.add(self.value, other.value),
            field: f,
        })
    }

    pub fn checked_sub(self, other: Fe) -> Result<Fe, FieldError> {
        let f = self.same_field(other)?;
        Ok(Fe {
            value: f.sub(self.value, other.value),
            field: f,
        })
    }

    pub fn checked_mul(self, other: Fe) -> Result<Fe, FieldError> {
        let f = self.same_field(other)?;
        Ok(Fe {
            value: f.mul(self.value, other.value),
            field: f,
        })
    }

    pub fn negate(self) -> Fe {
        Fe {
            value: self.field.neg(self.value),
            field: self.field,
        }
    }

    pub fn inv(self) -> Result<Fe, FieldError> {
        Ok(Fe {
            value: self.field.inv(self.value)?,
            field: self.field,
        })
    }
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n < 4 {
        return true;
    }
    if n.is_multiple_of(2) {
        return false;
    }
    let mut d = 3;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

/// Least prime strictly greater than `n`.
pub fn smallest_prime_greater_than(n: u64) -> u64 {
    let mut c = n + 1;
    while !is_prime(c) {
        c += 1;
    }
    c
}

/// `ceil(log2 n)` for `n >= 1`.
pub fn ceil_log2(n: u64) -> u32 {
    if n <= 1 {
        0
    } else {
        64 - (n - 1).leading_zeros()
    }
}
