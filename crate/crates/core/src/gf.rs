//! Arithmetic in GF(q) for prime powers q ≤ 256.
//!
//! An element of GF(p^k) is encoded as the integer `Σ d_i p^i`, where `d_i` is the
//! coefficient of `x^i` in its polynomial representative modulo a fixed monic
//! irreducible polynomial of degree k. Prime fields (k = 1) use plain residues.
//!
//! The reduction polynomial for each (p, k) is taken from a fixed table so element
//! encodings never depend on a runtime search. Every table entry is a Conway
//! polynomial, so `x` (encoded as `p`) is always a primitive element.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

/// Largest supported field order.
pub const MAX_ORDER: u32 = 256;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GfError {
    #[error("{0} is not a prime power")]
    NotPrimePower(u32),
    #[error("field order {0} exceeds the supported maximum of 256")]
    OrderTooLarge(u32),
    #[error("elements belong to different fields (GF({0}) vs GF({1}))")]
    FieldMismatch(u32, u32),
    #[error("division by zero")]
    DivisionByZero,
    #[error("value {value} is not an element of GF({q})")]
    OutOfRange { value: u32, q: u32 },
}

/// Reduction polynomials for the extension fields, coefficients listed from `x^0`
/// up to (and including) the leading `x^k`.
const REDUCTION_POLYS: &[(u32, &[u8])] = &[
    (4, &[1, 1, 1]),
    (8, &[1, 1, 0, 1]),
    (16, &[1, 1, 0, 0, 1]),
    (32, &[1, 0, 1, 0, 0, 1]),
    (64, &[1, 1, 0, 1, 1, 0, 1]),
    (128, &[1, 1, 0, 0, 0, 0, 0, 1]),
    (256, &[1, 0, 1, 1, 1, 0, 0, 0, 1]),
    (9, &[2, 2, 1]),
    (27, &[1, 2, 0, 1]),
    (81, &[2, 0, 0, 2, 1]),
    (243, &[1, 2, 0, 0, 0, 1]),
    (25, &[2, 4, 1]),
    (125, &[3, 3, 0, 1]),
    (49, &[3, 6, 1]),
    (121, &[2, 7, 1]),
    (169, &[2, 12, 1]),
];

/// Splits `q` into `(p, k)` with `q = p^k`, or `None` if `q` is not a prime power.
pub fn prime_power(q: u32) -> Option<(u32, u32)> {
    if q < 2 {
        return None;
    }
    let mut p = 2;
    while (p as u64) * (p as u64) <= q as u64 && !q.is_multiple_of(p) {
        p += 1;
    }
    if !q.is_multiple_of(p) {
        // q itself is prime
        return Some((q, 1));
    }
    let mut rest = q;
    let mut k = 0;
    while rest.is_multiple_of(p) {
        rest /= p;
        k += 1;
    }
    (rest == 1).then_some((p, k))
}

struct Tables {
    q: u32,
    p: u32,
    k: u32,
    reduction_poly: Vec<u8>,
    add: Vec<u8>,
    neg: Vec<u8>,
    // exp has 2(q-1) entries so that exp[log a + log b] needs no reduction
    exp: Vec<u8>,
    log: Vec<u16>,
}

/// A finite field GF(q). Cheap to clone; all clones share the same lookup tables.
#[derive(Clone)]
pub struct FieldSpec(Arc<Tables>);

impl FieldSpec {
    /// Builds GF(q) for a prime power `2 ≤ q ≤ 256`.
    pub fn new(q: u32) -> Result<Self, GfError> {
        let (p, k) = prime_power(q).ok_or(GfError::NotPrimePower(q))?;
        if q > MAX_ORDER {
            return Err(GfError::OrderTooLarge(q));
        }
        let reduction_poly = if k == 1 {
            Vec::new()
        } else {
            REDUCTION_POLYS
                .iter()
                .find(|(order, _)| *order == q)
                .map(|(_, poly)| poly.to_vec())
                .expect("every extension field up to 256 has a table entry")
        };

        let n = q as usize;
        let mut add = vec![0u8; n * n];
        let mut neg = vec![0u8; n];
        for a in 0..q {
            for b in 0..q {
                add[(a * q + b) as usize] = digit_add(a, b, p, k) as u8;
            }
            neg[a as usize] = digit_neg(a, p, k) as u8;
        }

        let generator = if k == 1 { primitive_root(p) } else { p };
        let mut exp = vec![0u8; 2 * (n - 1)];
        let mut log = vec![0u16; n];
        let mut acc = 1u32;
        for i in 0..n - 1 {
            exp[i] = acc as u8;
            exp[i + n - 1] = acc as u8;
            log[acc as usize] = i as u16;
            acc = poly_mul(acc, generator, p, k, &reduction_poly);
        }
        debug_assert_eq!(acc, 1);

        Ok(FieldSpec(Arc::new(Tables {
            q,
            p,
            k,
            reduction_poly,
            add,
            neg,
            exp,
            log,
        })))
    }

    pub fn order(&self) -> u32 {
        self.0.q
    }

    pub fn characteristic(&self) -> u32 {
        self.0.p
    }

    pub fn degree(&self) -> u32 {
        self.0.k
    }

    /// Coefficients of the reduction polynomial from `x^0` to `x^k`; empty for prime fields.
    pub fn reduction_poly(&self) -> &[u8] {
        &self.0.reduction_poly
    }

    /// Maps an integer into the field, rejecting values outside `[0, q)`.
    pub fn element(&self, value: u32) -> Result<FieldElement, GfError> {
        if value >= self.0.q {
            return Err(GfError::OutOfRange { value, q: self.0.q });
        }
        Ok(FieldElement {
            value: value as u8,
            field: self.clone(),
        })
    }

    pub fn zero(&self) -> FieldElement {
        FieldElement {
            value: 0,
            field: self.clone(),
        }
    }

    pub fn one(&self) -> FieldElement {
        FieldElement {
            value: 1,
            field: self.clone(),
        }
    }

    pub fn elements(&self) -> impl Iterator<Item = FieldElement> + '_ {
        (0..self.0.q).map(move |v| FieldElement {
            value: v as u8,
            field: self.clone(),
        })
    }

    // Raw-value arithmetic used by the matrix routines. Inputs must be < q.

    #[inline]
    pub fn add_raw(&self, a: u8, b: u8) -> u8 {
        self.0.add[a as usize * self.0.q as usize + b as usize]
    }

    #[inline]
    pub fn neg_raw(&self, a: u8) -> u8 {
        self.0.neg[a as usize]
    }

    #[inline]
    pub fn sub_raw(&self, a: u8, b: u8) -> u8 {
        self.add_raw(a, self.neg_raw(b))
    }

    #[inline]
    pub fn mul_raw(&self, a: u8, b: u8) -> u8 {
        if a == 0 || b == 0 {
            return 0;
        }
        let t = &self.0;
        t.exp[t.log[a as usize] as usize + t.log[b as usize] as usize]
    }

    #[inline]
    pub fn inv_raw(&self, a: u8) -> Option<u8> {
        if a == 0 {
            return None;
        }
        let t = &self.0;
        let n = t.q as usize - 1;
        Some(t.exp[(n - t.log[a as usize] as usize) % n])
    }

    /// `a^e` on raw values, with `0^0 = 1`.
    pub fn pow_raw(&self, a: u8, e: u64) -> u8 {
        if e == 0 {
            return 1;
        }
        if a == 0 {
            return 0;
        }
        let t = &self.0;
        let n = (t.q - 1) as u64;
        let l = (t.log[a as usize] as u64 * (e % n)) % n;
        t.exp[l as usize]
    }

    pub fn same_field(&self, other: &FieldSpec) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.0.q == other.0.q
    }
}

impl PartialEq for FieldSpec {
    fn eq(&self, other: &Self) -> bool {
        self.same_field(other)
    }
}

impl Eq for FieldSpec {}

impl fmt::Debug for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FieldSpec")
            .field("q", &self.0.q)
            .field("p", &self.0.p)
            .field("k", &self.0.k)
            .field("reduction_poly", &self.0.reduction_poly)
            .finish()
    }
}

/// Builds GF(q); see [`FieldSpec::new`].
pub fn field_new(q: u32) -> Result<FieldSpec, GfError> {
    FieldSpec::new(q)
}

/// An element of a specific field.
#[derive(Clone, PartialEq, Eq)]
pub struct FieldElement {
    value: u8,
    field: FieldSpec,
}

impl FieldElement {
    pub fn value(&self) -> u32 {
        self.value as u32
    }

    pub fn field(&self) -> &FieldSpec {
        &self.field
    }

    pub fn is_zero(&self) -> bool {
        self.value == 0
    }

    fn check(&self, other: &FieldElement) -> Result<(), GfError> {
        if self.field.same_field(&other.field) {
            Ok(())
        } else {
            Err(GfError::FieldMismatch(
                self.field.order(),
                other.field.order(),
            ))
        }
    }

    fn with(&self, value: u8) -> FieldElement {
        FieldElement {
            value,
            field: self.field.clone(),
        }
    }

    pub fn add(&self, other: &FieldElement) -> Result<FieldElement, GfError> {
        self.check(other)?;
        Ok(self.with(self.field.add_raw(self.value, other.value)))
    }

    pub fn sub(&self, other: &FieldElement) -> Result<FieldElement, GfError> {
        self.check(other)?;
        Ok(self.with(self.field.sub_raw(self.value, other.value)))
    }

    pub fn neg(&self) -> FieldElement {
        self.with(self.field.neg_raw(self.value))
    }

    pub fn mul(&self, other: &FieldElement) -> Result<FieldElement, GfError> {
        self.check(other)?;
        Ok(self.with(self.field.mul_raw(self.value, other.value)))
    }

    pub fn inv(&self) -> Result<FieldElement, GfError> {
        self.field
            .inv_raw(self.value)
            .map(|v| self.with(v))
            .ok_or(GfError::DivisionByZero)
    }

    pub fn pow(&self, e: u64) -> FieldElement {
        self.with(self.field.pow_raw(self.value, e))
    }
}

impl fmt::Debug for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@GF({})", self.value, self.field.order())
    }
}

/// Free functions mirroring the element methods.
pub fn add(a: &FieldElement, b: &FieldElement) -> Result<FieldElement, GfError> {
    a.add(b)
}

pub fn mul(a: &FieldElement, b: &FieldElement) -> Result<FieldElement, GfError> {
    a.mul(b)
}

pub fn inv(a: &FieldElement) -> Result<FieldElement, GfError> {
    a.inv()
}

fn digits(mut a: u32, p: u32, k: u32) -> Vec<u32> {
    let mut out = vec![0; k as usize];
    for d in out.iter_mut() {
        *d = a % p;
        a /= p;
    }
    out
}

fn undigits(ds: &[u32], p: u32) -> u32 {
    ds.iter().rev().fold(0, |acc, &d| acc * p + d)
}

fn digit_add(a: u32, b: u32, p: u32, k: u32) -> u32 {
    let da = digits(a, p, k);
    let db = digits(b, p, k);
    let sum: Vec<u32> = da.iter().zip(&db).map(|(x, y)| (x + y) % p).collect();
    undigits(&sum, p)
}

fn digit_neg(a: u32, p: u32, k: u32) -> u32 {
    let d: Vec<u32> = digits(a, p, k).iter().map(|x| (p - x) % p).collect();
    undigits(&d, p)
}

/// Schoolbook product of two encoded elements reduced modulo `poly`.
fn poly_mul(a: u32, b: u32, p: u32, k: u32, poly: &[u8]) -> u32 {
    if k == 1 {
        return (a * b) % p;
    }
    let k = k as usize;
    let da = digits(a, p, k as u32);
    let db = digits(b, p, k as u32);
    let mut prod = vec![0u32; 2 * k - 1];
    for (i, x) in da.iter().enumerate() {
        for (j, y) in db.iter().enumerate() {
            prod[i + j] = (prod[i + j] + x * y) % p;
        }
    }
    // poly is monic: x^k ≡ -(c_0 + ... + c_{k-1} x^{k-1})
    for deg in (k..prod.len()).rev() {
        let c = prod[deg];
        if c == 0 {
            continue;
        }
        prod[deg] = 0;
        for (i, &pc) in poly[..k].iter().enumerate() {
            let sub = (c * pc as u32) % p;
            let idx = deg - k + i;
            prod[idx] = (prod[idx] + p - sub) % p;
        }
    }
    undigits(&prod[..k], p)
}

fn primitive_root(p: u32) -> u32 {
    if p == 2 {
        return 1;
    }
    (2..p)
        .find(|&g| {
            let mut acc = 1u32;
            for i in 1..p {
                acc = acc * g % p;
                if acc == 1 {
                    return i == p - 1;
                }
            }
            false
        })
        .expect("every prime has a primitive root")
}

#[cfg(test)]
mod tests {
    use super::*;

    const ALL_ORDERS: &[u32] = &[
        2, 3, 4, 5, 7, 8, 9, 11, 13, 16, 17, 19, 23, 25, 27, 29, 31, 32, 49, 64, 81, 121, 125, 128,
        169, 243, 251, 256,
    ];

    fn el(f: &FieldSpec, v: u32) -> FieldElement {
        f.element(v).unwrap()
    }

    #[test]
    fn construction() {
        let f2 = field_new(2).unwrap();
        assert_eq!((f2.characteristic(), f2.degree()), (2, 1));
        assert!(f2.reduction_poly().is_empty());

        let f4 = field_new(4).unwrap();
        assert_eq!((f4.characteristic(), f4.degree()), (2, 2));
        assert_eq!(f4.reduction_poly(), &[1, 1, 1]);

        assert_eq!(field_new(6), Err(GfError::NotPrimePower(6)));
        assert_eq!(field_new(1), Err(GfError::NotPrimePower(1)));
        assert_eq!(field_new(0), Err(GfError::NotPrimePower(0)));
        assert_eq!(field_new(12), Err(GfError::NotPrimePower(12)));
        assert_eq!(field_new(512), Err(GfError::OrderTooLarge(512)));
        assert_eq!(field_new(257), Err(GfError::OrderTooLarge(257)));
    }

    #[test]
    fn small_examples() {
        let f2 = field_new(2).unwrap();
        assert_eq!(el(&f2, 1).add(&el(&f2, 1)).unwrap().value(), 0);
        assert_eq!(el(&f2, 1).mul(&el(&f2, 1)).unwrap().value(), 1);
        assert_eq!(el(&f2, 1).inv().unwrap().value(), 1);

        let f3 = field_new(3).unwrap();
        assert_eq!(el(&f3, 2).add(&el(&f3, 2)).unwrap().value(), 1);

        // x = 2, x + 1 = 3
        let f4 = field_new(4).unwrap();
        assert_eq!(el(&f4, 2).add(&el(&f4, 3)).unwrap().value(), 1);
        assert_eq!(el(&f4, 2).mul(&el(&f4, 2)).unwrap().value(), 3);
        assert_eq!(el(&f4, 2).inv().unwrap().value(), 3);

        let f5 = field_new(5).unwrap();
        assert_eq!(el(&f5, 3).mul(&el(&f5, 4)).unwrap().value(), 2);
        assert_eq!(el(&f5, 2).inv().unwrap().value(), 3);
    }

    #[test]
    fn errors() {
        let f2 = field_new(2).unwrap();
        let f3 = field_new(3).unwrap();
        assert_eq!(
            el(&f2, 1).add(&el(&f3, 1)),
            Err(GfError::FieldMismatch(2, 3))
        );
        assert_eq!(
            el(&f2, 1).mul(&el(&f3, 1)),
            Err(GfError::FieldMismatch(2, 3))
        );
        assert_eq!(f3.zero().inv(), Err(GfError::DivisionByZero));
        assert_eq!(f3.element(3), Err(GfError::OutOfRange { value: 3, q: 3 }));
    }

    /// Irreducibility by exhaustive search: a polynomial of degree k is irreducible iff it
    /// has no monic factor of degree 1..=k/2. Checked by trial division over all such factors.
    fn is_irreducible(poly: &[u8], p: u32) -> bool {
        let k = poly.len() - 1;
        let poly: Vec<u32> = poly.iter().map(|&c| c as u32).collect();
        for deg in 1..=k / 2 {
            let count = p.pow(deg as u32);
            for lower in 0..count {
                let mut divisor = digits(lower, p, deg as u32);
                divisor.push(1);
                if poly_rem(&poly, &divisor, p).iter().all(|&c| c == 0) {
                    return false;
                }
            }
        }
        true
    }

    fn poly_rem(num: &[u32], den: &[u32], p: u32) -> Vec<u32> {
        let mut r = num.to_vec();
        let d = den.len() - 1;
        for deg in (d..r.len()).rev() {
            let c = r[deg];
            if c == 0 {
                continue;
            }
            for (i, &dc) in den.iter().enumerate() {
                let idx = deg - d + i;
                r[idx] = (r[idx] + p * p - c * dc % p) % p;
            }
        }
        r.truncate(d);
        r
    }

    #[test]
    fn reduction_polys_are_irreducible_and_monic() {
        for &(q, poly) in REDUCTION_POLYS {
            let (p, k) = prime_power(q).unwrap();
            assert_eq!(poly.len(), k as usize + 1, "q={q}");
            assert_eq!(*poly.last().unwrap(), 1, "q={q}");
            assert!(poly.iter().all(|&c| (c as u32) < p), "q={q}");
            assert!(is_irreducible(poly, p), "q={q}");
        }
    }

    #[test]
    fn x_is_primitive() {
        for &(q, _) in REDUCTION_POLYS {
            let f = field_new(q).unwrap();
            let x = f.characteristic() as u8;
            let order = (1..q as u64).find(|&e| f.pow_raw(x, e) == 1).unwrap();
            assert_eq!(order, q as u64 - 1, "q={q}");
        }
    }

    #[test]
    fn log_tables_agree_with_schoolbook_product() {
        for &q in ALL_ORDERS {
            let f = field_new(q).unwrap();
            let (p, k) = (f.characteristic(), f.degree());
            for a in 0..q {
                for b in 0..q {
                    let expected = poly_mul(a, b, p, k, f.reduction_poly());
                    assert_eq!(
                        f.mul_raw(a as u8, b as u8) as u32,
                        expected,
                        "q={q} {a}*{b}"
                    );
                }
            }
        }
    }

    #[test]
    fn field_axioms_exhaustive_small() {
        for q in [2, 3, 4, 5, 7, 8, 9, 11, 13, 16] {
            let f = field_new(q).unwrap();
            let els: Vec<u8> = (0..q as u8).collect();
            for &a in &els {
                assert_eq!(f.add_raw(a, 0), a);
                assert_eq!(f.mul_raw(a, 1), a);
                assert_eq!(f.add_raw(a, f.neg_raw(a)), 0);
                if a != 0 {
                    assert_eq!(f.mul_raw(a, f.inv_raw(a).unwrap()), 1);
                    assert_eq!(f.pow_raw(a, (q - 1) as u64), 1);
                }
                for &b in &els {
                    assert_eq!(f.add_raw(a, b), f.add_raw(b, a));
                    assert_eq!(f.mul_raw(a, b), f.mul_raw(b, a));
                    for &c in &els {
                        assert_eq!(f.add_raw(f.add_raw(a, b), c), f.add_raw(a, f.add_raw(b, c)));
                        assert_eq!(f.mul_raw(f.mul_raw(a, b), c), f.mul_raw(a, f.mul_raw(b, c)));
                        assert_eq!(
                            f.mul_raw(a, f.add_raw(b, c)),
                            f.add_raw(f.mul_raw(a, b), f.mul_raw(a, c))
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn fermat_and_closure_all_orders() {
        for &q in ALL_ORDERS {
            let f = field_new(q).unwrap();
            for a in f.elements() {
                if !a.is_zero() {
                    assert_eq!(a.pow((q - 1) as u64).value(), 1, "q={q}");
                    assert_eq!(a.mul(&a.inv().unwrap()).unwrap().value(), 1);
                }
                for b in f.elements().step_by(7) {
                    assert!(a.add(&b).unwrap().value() < q);
                    assert!(a.mul(&b).unwrap().value() < q);
                }
            }
        }
    }

    #[test]
    fn prime_power_detection() {
        assert_eq!(prime_power(2), Some((2, 1)));
        assert_eq!(prime_power(256), Some((2, 8)));
        assert_eq!(prime_power(243), Some((3, 5)));
        assert_eq!(prime_power(251), Some((251, 1)));
        assert_eq!(prime_power(100), None);
        let supported = (2..=MAX_ORDER)
            .filter(|&q| prime_power(q).is_some())
            .count();
        let built = (2..=MAX_ORDER).filter(|&q| field_new(q).is_ok()).count();
        assert_eq!(supported, built);
    }
}
