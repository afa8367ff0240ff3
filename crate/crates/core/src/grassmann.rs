//! Subspaces of F_q^T, Grassmannian enumeration, and the counting formulas used by
//! the channel model.
//!
//! A [`Subspace`] is stored by its RREF basis with the zero rows removed, so two
//! subspaces are equal exactly when their stored bases are equal.
//!
//! Enumeration order of [`GrassmannianIndex`] is stable: pivot column sets are
//! visited in lexicographic order, and for each pivot set the free entries (listed
//! row-major) are counted in base q with the last free entry changing fastest.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};
use rand::Rng;
use thiserror::Error;

use crate::gf::FieldSpec;
use crate::matrix::{sample_full_rank, Mat};

/// Default upper bound on the number of subspaces materialized by one enumeration.
pub const DEFAULT_ENUMERATION_CAP: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GrassmannError {
    #[error("enumeration of {count} subspaces exceeds the cap of {cap}")]
    EnumerationTooLarge { count: BigUint, cap: u64 },
    #[error("subspaces live in different spaces (GF({q_a})^{dim_a} vs GF({q_b})^{dim_b})")]
    AmbientMismatch {
        q_a: u32,
        dim_a: usize,
        q_b: u32,
        dim_b: usize,
    },
    #[error("requested dimension {requested} exceeds the available dimension {available}")]
    DimensionTooLarge { requested: usize, available: usize },
}

/// The q-ary Gaussian coefficient: the number of `l`-dimensional subspaces of an
/// `n`-dimensional space over GF(q). Zero when `l > n`.
pub fn gaussian_coefficient(n: u32, l: u32, q: u32) -> BigUint {
    if l > n {
        return BigUint::ZERO;
    }
    let q = BigUint::from(q);
    let mut num = BigUint::one();
    let mut den = BigUint::one();
    for i in 0..l {
        num *= q.pow(n - i) - 1u32;
        den *= q.pow(l - i) - 1u32;
    }
    num / den
}

/// Number of ordered bases of an `h`-dimensional space over GF(q), which is also
/// the order of GL(h, q): `∏_{i=1}^{h} (q^h − q^{i−1})`.
pub fn count_ordered_bases(h: u32, q: u32) -> BigUint {
    let q = BigUint::from(q);
    let qh = q.pow(h);
    (0..h).fold(BigUint::one(), |acc, i| acc * (&qh - q.pow(i)))
}

/// A subspace of F_q^T, held as its canonical RREF basis.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Subspace {
    basis: Mat,
}

impl Subspace {
    /// The zero space of F_q^T.
    pub fn zero(field: &FieldSpec, ambient_dim: usize) -> Subspace {
        Subspace {
            basis: Mat::zero(field, 0, ambient_dim),
        }
    }

    /// The whole of F_q^T.
    pub fn full(field: &FieldSpec, ambient_dim: usize) -> Subspace {
        Subspace {
            basis: Mat::identity(field, ambient_dim),
        }
    }

    /// Row space of `x`.
    pub fn span(x: &Mat) -> Subspace {
        let (r, pivots) = x.rref();
        Subspace {
            basis: r.truncate_rows(pivots.len()),
        }
    }

    pub fn dim(&self) -> usize {
        self.basis.rows()
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.cols()
    }

    pub fn field(&self) -> &FieldSpec {
        self.basis.field()
    }

    /// Canonical basis: RREF, no zero rows.
    pub fn basis(&self) -> &Mat {
        &self.basis
    }

    pub fn pivots(&self) -> Vec<usize> {
        self.basis
            .row_iter()
            .map(|r| {
                r.iter()
                    .position(|&v| v != 0)
                    .expect("basis rows are nonzero")
            })
            .collect()
    }

    fn check_ambient(&self, other: &Subspace) -> Result<(), GrassmannError> {
        if self.field().same_field(other.field()) && self.ambient_dim() == other.ambient_dim() {
            Ok(())
        } else {
            Err(GrassmannError::AmbientMismatch {
                q_a: self.field().order(),
                dim_a: self.ambient_dim(),
                q_b: other.field().order(),
                dim_b: other.ambient_dim(),
            })
        }
    }

    /// Whether `other ⊆ self`.
    pub fn contains(&self, other: &Subspace) -> Result<bool, GrassmannError> {
        self.check_ambient(other)?;
        if other.dim() > self.dim() {
            return Ok(false);
        }
        if other.dim() == 0 {
            return Ok(true);
        }
        let stacked = self
            .basis
            .vstack(&other.basis)
            .expect("same field and width");
        Ok(stacked.rank() == self.dim())
    }

    /// Whether the vector `v` (length T) lies in the subspace.
    pub fn contains_vector(&self, v: &[u8]) -> bool {
        let row = match Mat::from_rows(self.field(), &[v]) {
            Ok(r) if r.cols() == self.ambient_dim() => r,
            _ => return false,
        };
        self.contains(&Subspace::span(&row)).unwrap_or(false)
    }

    /// All `l`-dimensional subspaces of `self`, obtained by mapping the Grassmannian
    /// of F_q^{dim self} through the canonical basis.
    pub fn subspaces_of_dim(&self, l: usize) -> Result<Vec<Subspace>, GrassmannError> {
        if l > self.dim() {
            return Err(GrassmannError::DimensionTooLarge {
                requested: l,
                available: self.dim(),
            });
        }
        let coords = enumerate_unchecked(self.field(), self.dim(), l);
        Ok(coords
            .iter()
            .map(|c| {
                if l == 0 {
                    Subspace::zero(self.field(), self.ambient_dim())
                } else {
                    let m = c
                        .basis
                        .matmul(&self.basis)
                        .expect("inner dimension is dim self");
                    Subspace::span(&m)
                }
            })
            .collect())
    }

    /// An ordered basis of `self` chosen uniformly among all of them.
    ///
    /// Drawn as `A·B` with `B` the canonical basis and `A` uniform over GL(dim, q);
    /// GL acts simply transitively on ordered bases, so the result is uniform.
    pub fn random_ordered_basis<R: Rng + ?Sized>(&self, rng: &mut R) -> Mat {
        let h = self.dim();
        if h == 0 {
            return self.basis.clone();
        }
        let a = sample_full_rank(self.field(), h, h, rng);
        a.matmul(&self.basis).expect("square change of basis")
    }

    /// Row-wise digit strings joined by `|`, with `O` for the zero space.
    ///
    /// Digits are `0-9a-z` for q ≤ 36; larger fields write each entry in decimal,
    /// separated by `.`.
    pub fn label(&self) -> String {
        matrix_label(&self.basis)
    }
}

impl fmt::Debug for Subspace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{}>", self.label())
    }
}

/// Label of an arbitrary matrix in the format of [`Subspace::label`].
pub fn matrix_label(m: &Mat) -> String {
    use core::fmt::Write;
    if m.rows() == 0 {
        return String::from("O");
    }
    let q = m.field().order();
    let mut out = String::new();
    for (i, row) in m.row_iter().enumerate() {
        if i > 0 {
            out.push('|');
        }
        for (j, &v) in row.iter().enumerate() {
            if q <= 36 {
                out.push(char::from_digit(v as u32, 36).expect("digit below 36"));
            } else {
                if j > 0 {
                    out.push('.');
                }
                let _ = write!(out, "{v}");
            }
        }
    }
    out
}

/// Row space of `x`; see [`Subspace::span`].
pub fn span(x: &Mat) -> Subspace {
    Subspace::span(x)
}

pub fn contains(u: &Subspace, v: &Subspace) -> Result<bool, GrassmannError> {
    u.contains(v)
}

pub fn enumerate_subspaces_of(u: &Subspace, l: usize) -> Result<Vec<Subspace>, GrassmannError> {
    u.subspaces_of_dim(l)
}

pub fn random_ordered_basis<R: Rng + ?Sized>(u: &Subspace, rng: &mut R) -> Mat {
    u.random_ordered_basis(rng)
}

/// Dense, ordered list of every `dim`-dimensional subspace of F_q^T with reverse lookup.
#[derive(Clone)]
pub struct GrassmannianIndex {
    field: FieldSpec,
    ambient_dim: usize,
    dim: usize,
    subspaces: Vec<Subspace>,
    lookup: BTreeMap<Subspace, usize>,
}

impl GrassmannianIndex {
    pub fn field(&self) -> &FieldSpec {
        &self.field
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.subspaces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subspaces.is_empty()
    }

    pub fn subspace_at(&self, i: usize) -> Option<&Subspace> {
        self.subspaces.get(i)
    }

    pub fn index_of(&self, s: &Subspace) -> Option<usize> {
        self.lookup.get(s).copied()
    }

    pub fn iter(&self) -> core::slice::Iter<'_, Subspace> {
        self.subspaces.iter()
    }

    pub fn as_slice(&self) -> &[Subspace] {
        &self.subspaces
    }
}

impl fmt::Debug for GrassmannianIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "GrassmannianIndex(GF({}), T={}, dim={}, len={})",
            self.field.order(),
            self.ambient_dim,
            self.dim,
            self.subspaces.len()
        )
    }
}

/// Fails with `EnumerationTooLarge` if the Grassmannian has more than `cap` members.
pub fn check_enumeration_size(
    q: u32,
    ambient_dim: usize,
    dim: usize,
    cap: u64,
) -> Result<u64, GrassmannError> {
    let count = gaussian_coefficient(ambient_dim as u32, dim as u32, q);
    match count.to_u64() {
        Some(c) if c <= cap => Ok(c),
        _ => Err(GrassmannError::EnumerationTooLarge { count, cap }),
    }
}

/// Every `dim`-dimensional subspace of F_q^T in the documented order.
pub fn enumerate_grassmannian(
    field: &FieldSpec,
    ambient_dim: usize,
    dim: usize,
    cap: u64,
) -> Result<GrassmannianIndex, GrassmannError> {
    check_enumeration_size(field.order(), ambient_dim, dim, cap)?;
    let subspaces = enumerate_unchecked(field, ambient_dim, dim);
    let lookup = subspaces
        .iter()
        .enumerate()
        .map(|(i, s)| (s.clone(), i))
        .collect();
    Ok(GrassmannianIndex {
        field: field.clone(),
        ambient_dim,
        dim,
        subspaces,
        lookup,
    })
}

fn enumerate_unchecked(field: &FieldSpec, ambient_dim: usize, dim: usize) -> Vec<Subspace> {
    if dim > ambient_dim {
        return Vec::new();
    }
    if dim == 0 {
        return vec![Subspace::zero(field, ambient_dim)];
    }
    let q = field.order() as u16;
    let mut out = Vec::new();
    let mut pivots: Vec<usize> = (0..dim).collect();
    loop {
        let mut template = Mat::zero(field, dim, ambient_dim);
        let mut free = Vec::new();
        for (row, &p) in pivots.iter().enumerate() {
            template.set(row, p, 1);
            for col in p + 1..ambient_dim {
                if !pivots.contains(&col) {
                    free.push((row, col));
                }
            }
        }
        // odometer over the free entries, last position fastest
        let mut digits = vec![0u16; free.len()];
        loop {
            let mut m = template.clone();
            for (&(r, c), &d) in free.iter().zip(&digits) {
                m.set(r, c, d as u8);
            }
            out.push(Subspace { basis: m });
            let mut pos = digits.len();
            let wrapped = loop {
                if pos == 0 {
                    break true;
                }
                pos -= 1;
                digits[pos] += 1;
                if digits[pos] < q {
                    break false;
                }
                digits[pos] = 0;
            };
            if wrapped {
                break;
            }
        }
        if !next_combination(&mut pivots, ambient_dim) {
            break;
        }
    }
    out
}

/// Advances `c` to the next `c.len()`-subset of `0..n` in lexicographic order.
fn next_combination(c: &mut [usize], n: usize) -> bool {
    let k = c.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if c[i] < n - k + i {
            c[i] += 1;
            for j in i + 1..k {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}
