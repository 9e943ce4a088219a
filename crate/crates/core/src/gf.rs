//! Arithmetic in GF(2^w) for 1 <= w <= 16.
//!
//! Multiplication goes through log/antilog tables built from a generator of
//! the multiplicative group. The modulus only has to be irreducible: when `x`
//! does not generate the group, the smallest element that does is used.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const MAX_WIDTH: u8 = 16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FieldError {
    #[error("field width {0} is outside 1..=16")]
    BadWidth(u8),
    #[error("modulus {modulus:#x} does not have degree {width}")]
    BadDegree { width: u8, modulus: u32 },
    #[error("modulus {0:#x} is reducible over GF(2)")]
    Reducible(u32),
    #[error("value {value:#x} does not fit in GF(2^{width})")]
    OutOfRange { width: u8, value: u32 },
    #[error("zero has no multiplicative inverse")]
    ZeroInverse,
}

/// Conventional primitive polynomials, indexed by width.
const DEFAULT_MODULI: [u32; 17] = [
    0, 0x3, 0x7, 0xB, 0x13, 0x25, 0x43, 0x89, 0x11D, 0x211, 0x409, 0x805, 0x1053, 0x201B, 0x4443,
    0x8003, 0x1100B,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FieldSpec {
    width_bits: u8,
    modulus: u32,
}

impl FieldSpec {
    pub fn new(width_bits: u8, modulus: u32) -> Result<Self, FieldError> {
        if width_bits == 0 || width_bits > MAX_WIDTH {
            return Err(FieldError::BadWidth(width_bits));
        }
        if poly_degree(modulus) != Some(u32::from(width_bits)) {
            return Err(FieldError::BadDegree {
                width: width_bits,
                modulus,
            });
        }
        if !is_irreducible(modulus) {
            return Err(FieldError::Reducible(modulus));
        }
        Ok(Self {
            width_bits,
            modulus,
        })
    }

    /// The field of the given width with its conventional primitive modulus.
    pub fn with_width(width_bits: u8) -> Result<Self, FieldError> {
        if width_bits == 0 || width_bits > MAX_WIDTH {
            return Err(FieldError::BadWidth(width_bits));
        }
        Self::new(width_bits, DEFAULT_MODULI[width_bits as usize])
    }

    pub fn width(&self) -> u8 {
        self.width_bits
    }

    pub fn modulus(&self) -> u32 {
        self.modulus
    }

    pub fn order(&self) -> u32 {
        1 << self.width_bits
    }

    /// Bytes used to store one symbol.
    pub fn symbol_bytes(&self) -> usize {
        (self.width_bits as usize).div_ceil(8)
    }
}

impl Default for FieldSpec {
    fn default() -> Self {
        Self {
            width_bits: 8,
            modulus: 0x11D,
        }
    }
}

fn poly_degree(p: u32) -> Option<u32> {
    (p != 0).then(|| 31 - p.leading_zeros())
}

fn poly_mod(mut a: u32, m: u32) -> u32 {
    let dm = poly_degree(m).expect("nonzero divisor");
    while let Some(da) = poly_degree(a) {
        if da < dm {
            break;
        }
        a ^= m << (da - dm);
    }
    a
}

/// Trial division by every polynomial of degree 1..=deg/2.
fn is_irreducible(p: u32) -> bool {
    let Some(deg) = poly_degree(p) else {
        return false;
    };
    if deg == 0 {
        return false;
    }
    for d in 1..=deg / 2 {
        for q in (1u32 << d)..(1u32 << (d + 1)) {
            if poly_mod(p, q) == 0 {
                return false;
            }
        }
    }
    true
}

/// A symbol of GF(2^w). Range checks happen where values enter a [`Field`].
#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize,
)]
pub struct FieldElement(u16);

impl FieldElement {
    pub const ZERO: Self = Self(0);
    pub const ONE: Self = Self(1);

    pub const fn from_raw(value: u16) -> Self {
        Self(value)
    }

    pub const fn value(self) -> u16 {
        self.0
    }

    pub const fn is_zero(self) -> bool {
        self.0 == 0
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#04x}", self.0)
    }
}

/// Table-driven GF(2^w). Immutable after construction.
#[derive(Clone)]
pub struct Field {
    spec: FieldSpec,
    /// exp[i] = g^i, doubled so that log sums never need a reduction.
    exp: Vec<u16>,
    log: Vec<u16>,
}

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Field").field("spec", &self.spec).finish()
    }
}

impl PartialEq for Field {
    fn eq(&self, other: &Self) -> bool {
        self.spec == other.spec
    }
}

impl Eq for Field {}

impl Field {
    pub fn new(spec: FieldSpec) -> Self {
        let order = spec.order();
        let group = (order - 1) as usize;
        let slow_mul = |a: u32, b: u32| poly_mod(clmul(a, b), spec.modulus);

        // smallest generator of the multiplicative group
        let mut generator = 2u32.min(order - 1);
        if group > 1 {
            generator = (2..order)
                .find(|&g| {
                    let mut x = g;
                    let mut ord = 1;
                    while x != 1 {
                        x = slow_mul(x, g);
                        ord += 1;
                    }
                    ord == group
                })
                .expect("an irreducible modulus yields a cyclic multiplicative group");
        }

        let mut exp = vec![0u16; 2 * group.max(1)];
        let mut log = vec![0u16; order as usize];
        let mut x = 1u32;
        for (i, e) in exp.iter_mut().take(group).enumerate() {
            *e = x as u16;
            log[x as usize] = i as u16;
            x = slow_mul(x, generator);
        }
        exp.copy_within(0..group, group);
        Self { spec, exp, log }
    }

    pub fn gf256() -> Self {
        Self::new(FieldSpec::default())
    }

    pub fn spec(&self) -> FieldSpec {
        self.spec
    }

    pub fn width(&self) -> u8 {
        self.spec.width_bits
    }

    pub fn order(&self) -> u32 {
        self.spec.order()
    }

    pub fn element(&self, value: u32) -> Result<FieldElement, FieldError> {
        if value >= self.order() {
            return Err(FieldError::OutOfRange {
                width: self.spec.width_bits,
                value,
            });
        }
        Ok(FieldElement(value as u16))
    }

    /// All field elements in increasing order.
    pub fn elements(&self) -> impl Iterator<Item = FieldElement> {
        (0..self.order()).map(|v| FieldElement(v as u16))
    }

    #[inline]
    pub fn add(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        FieldElement(a.0 ^ b.0)
    }

    #[inline]
    pub fn mul(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        if a.0 == 0 || b.0 == 0 {
            return FieldElement::ZERO;
        }
        let idx = self.log[a.0 as usize] as usize + self.log[b.0 as usize] as usize;
        FieldElement(self.exp[idx])
    }

    pub fn inv(&self, a: FieldElement) -> Result<FieldElement, FieldError> {
        if a.0 == 0 {
            return Err(FieldError::ZeroInverse);
        }
        let group = (self.order() - 1) as usize;
        let l = self.log[a.0 as usize] as usize;
        Ok(FieldElement(self.exp[(group - l) % group]))
    }

    pub fn div(&self, a: FieldElement, b: FieldElement) -> Result<FieldElement, FieldError> {
        Ok(self.mul(a, self.inv(b)?))
    }

    pub fn pow(&self, a: FieldElement, e: u32) -> FieldElement {
        if e == 0 {
            return FieldElement::ONE;
        }
        if a.0 == 0 {
            return FieldElement::ZERO;
        }
        let group = u64::from(self.order() - 1);
        let l = self.log[a.0 as usize] as u64 * u64::from(e) % group;
        FieldElement(self.exp[l as usize])
    }
}

/// Carry-less product of two polynomials over GF(2).
fn clmul(a: u32, b: u32) -> u32 {
    let mut acc = 0;
    for bit in 0..16 {
        if (b >> bit) & 1 == 1 {
            acc ^= a << bit;
        }
    }
    acc
}

/// Number of field multiplications and additions performed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpCount {
    pub mul: u64,
    pub add: u64,
}

impl OpCount {
    /// Weighted bit-operation units: `add·w + mul·w²`.
    pub fn weighted(&self, width: u8) -> u64 {
        let w = u64::from(width);
        self.add * w + self.mul * w * w
    }
}

impl std::ops::AddAssign for OpCount {
    fn add_assign(&mut self, rhs: Self) {
        self.mul += rhs.mul;
        self.add += rhs.add;
    }
}

/// A view of a [`Field`] that tallies every multiplication and addition.
#[derive(Debug)]
pub struct Counting<'f> {
    field: &'f Field,
    ops: OpCount,
}

impl<'f> Counting<'f> {
    pub fn new(field: &'f Field) -> Self {
        Self {
            field,
            ops: OpCount::default(),
        }
    }

    pub fn field(&self) -> &'f Field {
        self.field
    }

    pub fn ops(&self) -> OpCount {
        self.ops
    }

    pub fn add(&mut self, a: FieldElement, b: FieldElement) -> FieldElement {
        self.ops.add += 1;
        self.field.add(a, b)
    }

    pub fn mul(&mut self, a: FieldElement, b: FieldElement) -> FieldElement {
        self.ops.mul += 1;
        self.field.mul(a, b)
    }

    /// Division counts as one multiplication by the inverse.
    pub fn div(&mut self, a: FieldElement, b: FieldElement) -> Result<FieldElement, FieldError> {
        self.ops.mul += 1;
        self.field.div(a, b)
    }
}
