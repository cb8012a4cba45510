//! Arithmetic in binary extension fields GF(2^m), m <= 16.
//!
//! An element is an integer in `[0, 2^m)` whose binary digits are the
//! coefficients of a polynomial over GF(2): bit `i` is the coefficient of
//! `x^i`. Multiplication reduces modulo a fixed irreducible polynomial of
//! degree `m`. Unless a modulus is supplied explicitly, each `m` uses its
//! canonical modulus: the irreducible polynomial of degree `m` with the
//! smallest integer encoding. The first few are:
//!
//! | m | modulus | polynomial      |
//! |---|---------|-----------------|
//! | 1 | 0x2     | x               |
//! | 2 | 0x7     | x^2+x+1         |
//! | 3 | 0xB     | x^3+x+1         |
//! | 4 | 0x13    | x^4+x+1         |
//! | 8 | 0x11B   | x^8+x^4+x^3+x+1 |
//!
//! All operations are pure functions of immutable inputs.

use crate::error::{Error, Result};
use std::fmt;
use std::ops::{Add, Mul};

/// Largest supported extension degree.
pub const MAX_M: u32 = 16;

/// A binary extension field GF(2^m) with a fixed irreducible modulus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldSpec {
    m: u32,
    q: u32,
    modulus: u32,
}

impl FieldSpec {
    /// Field of degree `m` over GF(2) with the canonical modulus for `m`.
    pub fn new(m: u32) -> Result<FieldSpec> {
        if m == 0 || m > MAX_M {
            return Err(Error::InvalidParameter(format!(
                "extension degree m = {m} not in 1..={MAX_M}"
            )));
        }
        Ok(FieldSpec {
            m,
            q: 1 << m,
            modulus: canonical_modulus(m),
        })
    }

    /// Field of degree `m` with an explicit modulus, verified irreducible.
    pub fn with_modulus(m: u32, modulus: u32) -> Result<FieldSpec> {
        if m == 0 || m > MAX_M {
            return Err(Error::InvalidParameter(format!(
                "extension degree m = {m} not in 1..={MAX_M}"
            )));
        }
        if !is_irreducible(modulus as u64, m) {
            return Err(Error::InvalidParameter(format!(
                "modulus {modulus:#x} is not an irreducible polynomial of degree {m}"
            )));
        }
        Ok(FieldSpec {
            m,
            q: 1 << m,
            modulus,
        })
    }

    /// Field with `q = 2^m` elements; `q` must be a power of two.
    pub fn with_order(q: u32) -> Result<FieldSpec> {
        if !q.is_power_of_two() || q < 2 {
            return Err(Error::InvalidParameter(format!(
                "field order {q} is not a power of two"
            )));
        }
        FieldSpec::new(q.trailing_zeros())
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    /// Number of field elements, `2^m`.
    pub fn q(&self) -> u32 {
        self.q
    }

    /// Bit-encoded irreducible modulus (degree-`m` bit included).
    pub fn modulus(&self) -> u32 {
        self.modulus
    }

    /// Wraps an integer in `[0, q)` as an element of this field.
    ///
    /// Panics if `value >= q`.
    pub fn element(&self, value: u32) -> FieldElement<'_> {
        assert!(
            value < self.q,
            "value {value} out of range for GF({})",
            self.q
        );
        FieldElement { value, field: self }
    }

    pub fn zero(&self) -> FieldElement<'_> {
        self.element(0)
    }

    pub fn one(&self) -> FieldElement<'_> {
        self.element(1)
    }

    /// Characteristic-2 addition of raw values (bitwise xor).
    #[inline]
    pub fn add_raw(&self, a: u32, b: u32) -> u32 {
        debug_assert!(a < self.q && b < self.q);
        a ^ b
    }

    /// Polynomial product of raw values, reduced by the modulus.
    #[inline]
    pub fn mul_raw(&self, a: u32, b: u32) -> u32 {
        debug_assert!(a < self.q && b < self.q);
        let mut shifted = a;
        let mut acc = 0u32;
        for i in 0..self.m {
            if (b >> i) & 1 == 1 {
                acc ^= shifted;
            }
            shifted <<= 1;
            if shifted & self.q != 0 {
                shifted ^= self.modulus;
            }
        }
        acc
    }

    /// Repeated product; `pow_raw(0, 0) = 1`.
    pub fn pow_raw(&self, a: u32, e: u64) -> u32 {
        let mut base = a;
        let mut e = e;
        let mut acc = 1u32;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul_raw(acc, base);
            }
            base = self.mul_raw(base, base);
            e >>= 1;
        }
        acc
    }

    /// Multiplicative inverse via `a^(q-2)`.
    ///
    /// Panics if `a = 0`.
    pub fn inv_raw(&self, a: u32) -> u32 {
        assert!(a != 0, "zero has no multiplicative inverse");
        self.pow_raw(a, (self.q - 2) as u64)
    }
}

/// An element of a specific GF(2^m).
#[derive(Debug, Clone, Copy)]
pub struct FieldElement<'f> {
    value: u32,
    field: &'f FieldSpec,
}

impl<'f> FieldElement<'f> {
    pub fn value(&self) -> u32 {
        self.value
    }

    pub fn field(&self) -> &'f FieldSpec {
        self.field
    }

    /// Multiplicative inverse; panics on zero.
    pub fn inv(self) -> FieldElement<'f> {
        FieldElement {
            value: self.field.inv_raw(self.value),
            field: self.field,
        }
    }

    /// Repeated product; `pow(0, 0) = 1`.
    pub fn pow(self, e: u64) -> FieldElement<'f> {
        FieldElement {
            value: self.field.pow_raw(self.value, e),
            field: self.field,
        }
    }
}

impl PartialEq for FieldElement<'_> {
    fn eq(&self, other: &Self) -> bool {
        self.value == other.value && self.field == other.field
    }
}

impl Eq for FieldElement<'_> {}

impl<'f> Add for FieldElement<'f> {
    type Output = FieldElement<'f>;

    fn add(self, rhs: FieldElement<'f>) -> FieldElement<'f> {
        assert!(self.field == rhs.field, "operands from different fields");
        FieldElement {
            value: self.field.add_raw(self.value, rhs.value),
            field: self.field,
        }
    }
}

impl<'f> Mul for FieldElement<'f> {
    type Output = FieldElement<'f>;

    fn mul(self, rhs: FieldElement<'f>) -> FieldElement<'f> {
        assert!(self.field == rhs.field, "operands from different fields");
        FieldElement {
            value: self.field.mul_raw(self.value, rhs.value),
            field: self.field,
        }
    }
}

impl fmt::Display for FieldElement<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

fn poly_degree(p: u64) -> u32 {
    63 - p.leading_zeros()
}

/// Remainder of polynomial division over GF(2).
fn poly_rem(mut a: u64, b: u64) -> u64 {
    debug_assert!(b != 0);
    let db = poly_degree(b);
    while a != 0 && poly_degree(a) >= db {
        a ^= b << (poly_degree(a) - db);
    }
    a
}

/// Trial division by every polynomial of degree 1..=m/2.
pub fn is_irreducible(poly: u64, m: u32) -> bool {
    if m == 0 || poly >> m != 1 {
        return false; // wrong degree
    }
    for deg in 1..=m / 2 {
        for divisor in (1u64 << deg)..(1u64 << (deg + 1)) {
            if poly_rem(poly, divisor) == 0 {
                return false;
            }
        }
    }
    true
}

/// The irreducible polynomial of degree `m` with the smallest integer encoding.
pub fn canonical_modulus(m: u32) -> u32 {
    assert!((1..=MAX_M).contains(&m));
    ((1u64 << m)..(1u64 << (m + 1)))
        .find(|&p| is_irreducible(p, m))
        .expect("an irreducible polynomial exists for every degree") as u32
}
