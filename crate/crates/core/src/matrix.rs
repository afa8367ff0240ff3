//! Dense matrices over GF(q).

use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use rand::Rng;
use thiserror::Error;

use crate::gf::FieldSpec;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MatrixError {
    #[error("dimension mismatch: {left_rows}x{left_cols} times {right_rows}x{right_cols}")]
    DimensionMismatch {
        left_rows: usize,
        left_cols: usize,
        right_rows: usize,
        right_cols: usize,
    },
    #[error("matrices are over different fields (GF({0}) vs GF({1}))")]
    FieldMismatch(u32, u32),
    #[error("rank {rank} is impossible for a {rows}x{cols} matrix")]
    InvalidRank {
        rank: usize,
        rows: usize,
        cols: usize,
    },
    #[error("entry {value} is not an element of GF({q})")]
    EntryOutOfRange { value: u32, q: u32 },
    #[error("expected {expected} entries, got {actual}")]
    BadShape { expected: usize, actual: usize },
}

/// A `rows × cols` matrix over GF(q), stored row-major. Zero-row and zero-column
/// shapes are allowed and stand for the zero space.
#[derive(Clone)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<u8>,
    field: FieldSpec,
}

impl Mat {
    pub fn zero(field: &FieldSpec, rows: usize, cols: usize) -> Mat {
        Mat {
            rows,
            cols,
            data: vec![0; rows * cols],
            field: field.clone(),
        }
    }

    pub fn identity(field: &FieldSpec, n: usize) -> Mat {
        let mut m = Mat::zero(field, n, n);
        for i in 0..n {
            m.data[i * n + i] = 1;
        }
        m
    }

    /// Builds a matrix from row-major raw values, each of which must be below q.
    pub fn from_raw(
        field: &FieldSpec,
        rows: usize,
        cols: usize,
        data: Vec<u8>,
    ) -> Result<Mat, MatrixError> {
        if data.len() != rows * cols {
            return Err(MatrixError::BadShape {
                expected: rows * cols,
                actual: data.len(),
            });
        }
        let q = field.order();
        if let Some(&bad) = data.iter().find(|&&v| v as u32 >= q) {
            return Err(MatrixError::EntryOutOfRange {
                value: bad as u32,
                q,
            });
        }
        Ok(Mat {
            rows,
            cols,
            data,
            field: field.clone(),
        })
    }

    /// Builds a matrix from a list of equal-length rows.
    pub fn from_rows<R: AsRef<[u8]>>(field: &FieldSpec, rows: &[R]) -> Result<Mat, MatrixError> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(MatrixError::BadShape {
                    expected: cols,
                    actual: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Mat::from_raw(field, rows.len(), cols, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn field(&self) -> &FieldSpec {
        &self.field
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> u8 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: u8) {
        debug_assert!((v as u32) < self.field.order());
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[u8] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_iter(&self) -> impl Iterator<Item = &[u8]> {
        // chunks_exact panics on a zero chunk size
        (0..self.rows).map(move |i| self.row(i))
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&v| v == 0)
    }

    /// Keeps the first `n` rows.
    pub fn truncate_rows(mut self, n: usize) -> Mat {
        let n = n.min(self.rows);
        self.data.truncate(n * self.cols);
        self.rows = n;
        self
    }

    /// Places `other` underneath `self`.
    pub fn vstack(&self, other: &Mat) -> Result<Mat, MatrixError> {
        self.check_field(other)?;
        if self.cols != other.cols && self.rows > 0 && other.rows > 0 {
            return Err(MatrixError::DimensionMismatch {
                left_rows: self.rows,
                left_cols: self.cols,
                right_rows: other.rows,
                right_cols: other.cols,
            });
        }
        let cols = if self.rows > 0 { self.cols } else { other.cols };
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Ok(Mat {
            rows: self.rows + other.rows,
            cols,
            data,
            field: self.field.clone(),
        })
    }

    fn check_field(&self, other: &Mat) -> Result<(), MatrixError> {
        if self.field.same_field(&other.field) {
            Ok(())
        } else {
            Err(MatrixError::FieldMismatch(
                self.field.order(),
                other.field.order(),
            ))
        }
    }

    /// Matrix product `self · rhs`.
    pub fn matmul(&self, rhs: &Mat) -> Result<Mat, MatrixError> {
        self.check_field(rhs)?;
        if self.cols != rhs.rows {
            return Err(MatrixError::DimensionMismatch {
                left_rows: self.rows,
                left_cols: self.cols,
                right_rows: rhs.rows,
                right_cols: rhs.cols,
            });
        }
        let f = &self.field;
        let mut out = Mat::zero(f, self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0 {
                    continue;
                }
                let src = rhs.row(k);
                let dst = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (d, &b) in dst.iter_mut().zip(src) {
                    *d = f.add_raw(*d, f.mul_raw(a, b));
                }
            }
        }
        Ok(out)
    }

    /// Reduced row echelon form together with its pivot columns. Shape is preserved;
    /// zero rows collect at the bottom.
    pub fn rref(&self) -> (Mat, Vec<usize>) {
        let f = &self.field;
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut lead = 0;
        for col in 0..m.cols {
            if lead == m.rows {
                break;
            }
            let Some(piv) = (lead..m.rows).find(|&r| m.get(r, col) != 0) else {
                continue;
            };
            m.swap_rows(lead, piv);
            let inv = f.inv_raw(m.get(lead, col)).expect("pivot is nonzero");
            m.scale_row(lead, inv);
            for r in 0..m.rows {
                if r != lead {
                    let factor = m.get(r, col);
                    if factor != 0 {
                        m.sub_scaled_row(r, lead, factor);
                    }
                }
            }
            pivots.push(col);
            lead += 1;
        }
        (m, pivots)
    }

    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    fn scale_row(&mut self, r: usize, s: u8) {
        let f = self.field.clone();
        for v in &mut self.data[r * self.cols..(r + 1) * self.cols] {
            *v = f.mul_raw(*v, s);
        }
    }

    // row[dst] -= factor * row[src]
    fn sub_scaled_row(&mut self, dst: usize, src: usize, factor: u8) {
        let f = self.field.clone();
        for j in 0..self.cols {
            let s = f.mul_raw(factor, self.data[src * self.cols + j]);
            let d = &mut self.data[dst * self.cols + j];
            *d = f.sub_raw(*d, s);
        }
    }

    /// Uniform random matrix (entries i.i.d. uniform over GF(q)).
    pub fn random<R: Rng + ?Sized>(
        field: &FieldSpec,
        rows: usize,
        cols: usize,
        rng: &mut R,
    ) -> Mat {
        let q = field.order();
        let data = (0..rows * cols)
            .map(|_| rng.gen_range(0..q) as u8)
            .collect();
        Mat {
            rows,
            cols,
            data,
            field: field.clone(),
        }
    }
}

/// Matrix product; see [`Mat::matmul`].
pub fn matmul(g: &Mat, x: &Mat) -> Result<Mat, MatrixError> {
    g.matmul(x)
}

pub fn rref(m: &Mat) -> (Mat, Vec<usize>) {
    m.rref()
}

pub fn rank(m: &Mat) -> usize {
    m.rank()
}

/// Uniform draw from the full-rank `n × m` matrices, by rejection.
pub fn sample_full_rank<R: Rng + ?Sized>(
    field: &FieldSpec,
    n: usize,
    m: usize,
    rng: &mut R,
) -> Mat {
    let target = n.min(m);
    loop {
        let candidate = Mat::random(field, n, m, rng);
        if candidate.rank() == target {
            return candidate;
        }
    }
}

/// An `n × m` matrix of exactly the given rank, drawn as `A·B` with `A` (`n × rank`)
/// and `B` (`rank × m`) each uniform over full-rank matrices of their shape.
///
/// The product is not uniform over all rank-`rank` matrices.
pub fn sample_matrix_with_rank<R: Rng + ?Sized>(
    field: &FieldSpec,
    n: usize,
    m: usize,
    rank: usize,
    rng: &mut R,
) -> Result<Mat, MatrixError> {
    if rank > n.min(m) {
        return Err(MatrixError::InvalidRank {
            rank,
            rows: n,
            cols: m,
        });
    }
    if rank == 0 {
        return Ok(Mat::zero(field, n, m));
    }
    let a = sample_full_rank(field, n, rank, rng);
    let b = sample_full_rank(field, rank, m, rng);
    a.matmul(&b)
}

impl PartialEq for Mat {
    fn eq(&self, other: &Self) -> bool {
        self.field.order() == other.field.order()
            && self.rows == other.rows
            && self.cols == other.cols
            && self.data == other.data
    }
}

impl Eq for Mat {}

impl Ord for Mat {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.field.order(), self.rows, self.cols, &self.data).cmp(&(
            other.field.order(),
            other.rows,
            other.cols,
            &other.data,
        ))
    }
}

impl PartialOrd for Mat {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl core::hash::Hash for Mat {
    fn hash<H: core::hash::Hasher>(&self, state: &mut H) {
        self.field.order().hash(state);
        self.rows.hash(state);
        self.cols.hash(state);
        self.data.hash(state);
    }
}

impl fmt::Debug for Mat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "Mat<GF({})>{}x{}[",
            self.field.order(),
            self.rows,
            self.cols
        )?;
        for (i, r) in self.row_iter().enumerate() {
            if i > 0 {
                f.write_str(" | ")?;
            }
            for (j, v) in r.iter().enumerate() {
                if j > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{v}")?;
            }
        }
        f.write_str("]")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf::field_new;
    use crate::rng::seeded;

    fn gf2() -> FieldSpec {
        field_new(2).unwrap()
    }

    fn m(f: &FieldSpec, rows: &[&[u8]]) -> Mat {
        Mat::from_rows(f, rows).unwrap()
    }

    /// All `rows × cols` matrices over GF(q), in lexicographic order of their entries.
    fn all_matrices(f: &FieldSpec, rows: usize, cols: usize) -> Vec<Mat> {
        let q = f.order() as usize;
        let n = rows * cols;
        let total = q.pow(n as u32);
        (0..total)
            .map(|mut idx| {
                let mut data = vec![0u8; n];
                for slot in data.iter_mut().rev() {
                    *slot = (idx % q) as u8;
                    idx /= q;
                }
                Mat::from_raw(f, rows, cols, data).unwrap()
            })
            .collect()
    }

    #[test]
    fn product_examples() {
        let f = gf2();
        let g = m(&f, &[&[0, 1], &[0, 1]]);
        let x = m(&f, &[&[0, 1, 0], &[1, 0, 0]]);
        let y = g.matmul(&x).unwrap();
        assert_eq!(y, m(&f, &[&[1, 0, 0], &[1, 0, 0]]));
        assert_eq!(Mat::identity(&f, 2).matmul(&x).unwrap(), x);
        assert!(Mat::zero(&f, 2, 2).matmul(&x).unwrap().is_zero());
    }

    #[test]
    fn product_errors() {
        let f = gf2();
        let f3 = field_new(3).unwrap();
        let a = Mat::zero(&f, 2, 3);
        assert!(matches!(
            a.matmul(&Mat::zero(&f, 2, 3)),
            Err(MatrixError::DimensionMismatch { .. })
        ));
        assert_eq!(
            a.matmul(&Mat::zero(&f3, 3, 1)),
            Err(MatrixError::FieldMismatch(2, 3))
        );
    }

    #[test]
    fn rref_examples() {
        let f = gf2();
        let (r, piv) = m(&f, &[&[0, 1, 0], &[1, 1, 0]]).rref();
        assert_eq!(r, m(&f, &[&[1, 0, 0], &[0, 1, 0]]));
        assert_eq!(piv, vec![0, 1]);

        let (r, piv) = Mat::zero(&f, 2, 3).rref();
        assert!(r.is_zero());
        assert!(piv.is_empty());

        let inv = m(&f, &[&[1, 1], &[0, 1]]);
        let (r, piv) = inv.rref();
        assert_eq!(r, Mat::identity(&f, 2));
        assert_eq!(piv, vec![0, 1]);
    }

    #[test]
    fn rank_examples() {
        let f = gf2();
        assert_eq!(m(&f, &[&[0, 1], &[0, 1]]).rank(), 1);
        assert_eq!(Mat::identity(&f, 4).rank(), 4);
        assert_eq!(Mat::zero(&f, 3, 3).rank(), 0);
        assert_eq!(Mat::zero(&f, 0, 3).rank(), 0);
        assert_eq!(Mat::zero(&f, 3, 0).rank(), 0);
    }

    #[test]
    fn rref_idempotent_and_product_rank_exhaustive() {
        let f = gf2();
        let gs = all_matrices(&f, 2, 2);
        let xs = all_matrices(&f, 2, 3);
        for x in &xs {
            let (r, _) = x.rref();
            assert_eq!(r.rref().0, r);
            for g in &gs {
                let gx = g.matmul(x).unwrap();
                assert!(gx.rank() <= g.rank().min(x.rank()));
                if x.rank() == 2 {
                    // full-rank X: rank deficiency of GX equals that of G
                    assert_eq!(gx.rank(), g.rank());
                }
            }
        }
    }

    #[test]
    fn rref_over_extension_field() {
        let f4 = field_new(4).unwrap();
        let x = m(&f4, &[&[2, 3, 1], &[3, 1, 2]]);
        let (r, piv) = x.rref();
        assert_eq!(r.rref().0, r);
        // row space: second row = x * first row in GF(4) (2*2=3, 2*3=1, 2*1=2)
        assert_eq!(piv, vec![0]);
        assert_eq!(r.rank(), 1);
    }

    #[test]
    fn rank_sampler_hits_requested_rank() {
        let mut rng = seeded(11);
        for q in [2, 3, 4, 5] {
            let f = field_new(q).unwrap();
            for (n, mm) in [(1, 1), (2, 2), (3, 3), (2, 4), (4, 2), (3, 5)] {
                for r in 0..=n.min(mm) {
                    for _ in 0..20 {
                        let g = sample_matrix_with_rank(&f, n, mm, r, &mut rng).unwrap();
                        assert_eq!((g.rows(), g.cols()), (n, mm));
                        assert_eq!(g.rank(), r);
                    }
                }
            }
        }
        let f = gf2();
        assert_eq!(
            sample_matrix_with_rank(&f, 2, 3, 3, &mut rng),
            Err(MatrixError::InvalidRank {
                rank: 3,
                rows: 2,
                cols: 3
            })
        );
        assert!(sample_matrix_with_rank(&f, 2, 2, 0, &mut rng)
            .unwrap()
            .is_zero());
    }

    #[test]
    fn full_rank_edge_shapes() {
        let f = gf2();
        let mut rng = seeded(3);
        for _ in 0..10 {
            assert_eq!(sample_full_rank(&f, 1, 1, &mut rng), m(&f, &[&[1]]));
            assert_eq!(sample_full_rank(&f, 2, 3, &mut rng).rank(), 2);
        }
    }

    #[test]
    fn full_rank_uniform_over_gl22() {
        let f = gf2();
        let gl: Vec<Mat> = all_matrices(&f, 2, 2)
            .into_iter()
            .filter(|g| g.rank() == 2)
            .collect();
        assert_eq!(gl.len(), 6);
        let mut counts = [0u32; 6];
        let mut rng = seeded(2024);
        let n = 60_000;
        for _ in 0..n {
            let g = sample_full_rank(&f, 2, 2, &mut rng);
            let idx = gl.iter().position(|h| *h == g).unwrap();
            counts[idx] += 1;
        }
        let expected = n as f64 / 6.0;
        let chi2: f64 = counts
            .iter()
            .map(|&c| (c as f64 - expected).powi(2) / expected)
            .sum();
        // chi-square, 5 dof: P(X > 20.52) = 0.001
        assert!(chi2 < 20.52, "chi2 = {chi2}, counts = {counts:?}");
    }

    #[test]
    fn construction_errors() {
        let f = gf2();
        assert_eq!(
            Mat::from_raw(&f, 1, 2, vec![0, 2]),
            Err(MatrixError::EntryOutOfRange { value: 2, q: 2 })
        );
        assert!(matches!(
            Mat::from_rows(&f, &[&[0u8, 1][..], &[1][..]]),
            Err(MatrixError::BadShape { .. })
        ));
    }
}
