//! Channel capacity: the closed form for the subspace channel and a general
//! Blahut–Arimoto solver that serves as an independent check on it.
//!
//! All internal computation is in nats; [`LogBase`] converts at the boundary.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use thiserror::Error;

use crate::channel::ChannelSpec;
use crate::grassmann::gaussian_coefficient;

/// Row sums of a [`TransitionMatrix`] must be within this of 1.
pub const ROW_SUM_TOLERANCE: f64 = 1e-9;
pub const DEFAULT_TOL: f64 = 1e-9;
pub const DEFAULT_MAX_ITERS: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CapacityError {
    #[error("row {row} sums to {sum}, not 1")]
    NotRowStochastic { row: usize, sum: f64 },
    #[error("entry ({row}, {col}) = {value} is not a probability")]
    InvalidEntry { row: usize, col: usize, value: f64 },
    #[error("expected {expected} entries, got {actual}")]
    BadShape { expected: usize, actual: usize },
    #[error("invalid input distribution: {0}")]
    DistributionInvalid(&'static str),
    #[error("log base must be finite and greater than 1, got {0}")]
    InvalidLogBase(f64),
    #[error("tolerance must be positive, got {0}")]
    InvalidTolerance(f64),
    #[error("no convergence after {iterations} iterations: estimate {best_estimate}, gap {gap}")]
    NonConvergence {
        best_estimate: f64,
        gap: f64,
        iterations: usize,
        input_distribution: Vec<f64>,
    },
}

/// Logarithm base used for reporting information quantities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogBase(f64);

impl LogBase {
    pub const BITS: LogBase = LogBase(2.0);
    pub const NATS: LogBase = LogBase(core::f64::consts::E);

    pub fn new(base: f64) -> Result<Self, CapacityError> {
        if base.is_finite() && base > 1.0 {
            Ok(LogBase(base))
        } else {
            Err(CapacityError::InvalidLogBase(base))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn log(self, x: f64) -> f64 {
        if self.0 == 2.0 {
            libm::log2(x)
        } else if self.0 == core::f64::consts::E {
            libm::log(x)
        } else {
            libm::log(x) / libm::log(self.0)
        }
    }

    pub fn from_nats(self, x: f64) -> f64 {
        if self.0 == core::f64::consts::E {
            x
        } else {
            x / libm::log(self.0)
        }
    }

    /// Logarithm of an exact integer, accurate beyond the range of f64.
    pub fn log_big(self, n: &BigUint) -> f64 {
        let bits = n.bits();
        if bits <= 1000 {
            return self.log(n.to_f64().expect("below f64::MAX"));
        }
        let shift = bits - 64;
        let top = (n >> shift).to_f64().expect("64-bit value");
        self.log(top) + shift as f64 * self.log(2.0)
    }

    pub fn units(self) -> String {
        if self.0 == 2.0 {
            String::from("bits per channel use")
        } else if self.0 == core::f64::consts::E {
            String::from("nats per channel use")
        } else {
            alloc::format!("base-{} units per channel use", self.0)
        }
    }
}

impl Default for LogBase {
    fn default() -> Self {
        LogBase::BITS
    }
}

/// Row-stochastic matrix `W[x][y] = P(y | x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl TransitionMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, CapacityError> {
        if data.len() != rows * cols {
            return Err(CapacityError::BadShape {
                expected: rows * cols,
                actual: data.len(),
            });
        }
        for (idx, &value) in data.iter().enumerate() {
            if !value.is_finite() || value < 0.0 {
                return Err(CapacityError::InvalidEntry {
                    row: idx / cols.max(1),
                    col: idx % cols.max(1),
                    value,
                });
            }
        }
        let m = TransitionMatrix { rows, cols, data };
        for row in 0..rows {
            let sum: f64 = m.row(row).iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                return Err(CapacityError::NotRowStochastic { row, sum });
            }
        }
        Ok(m)
    }

    /// Builds from nested rows.
    pub fn from_rows(rows: &[&[f64]]) -> Result<Self, CapacityError> {
        let cols = rows.first().map_or(0, |r| r.len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(CapacityError::BadShape {
                    expected: cols,
                    actual: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        TransitionMatrix::new(rows.len(), cols, data)
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        TransitionMatrix {
            rows: n,
            cols: n,
            data,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[x * self.cols + y]
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.data[x * self.cols..(x + 1) * self.cols]
    }

    pub fn column(&self, y: usize) -> impl Iterator<Item = f64> + '_ {
        (0..self.rows).map(move |x| self.get(x, y))
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.rows).map(|x| self.row(x).iter().sum()).collect()
    }

    /// All rows are permutations of one another.
    pub fn is_uniformly_dispersive(&self) -> bool {
        all_multiset_equal((0..self.rows).map(|x| self.row(x).iter().copied()))
    }

    /// All columns are permutations of one another.
    pub fn is_uniformly_focusing(&self) -> bool {
        all_multiset_equal((0..self.cols).map(|y| self.column(y)))
    }

    pub fn is_strongly_symmetric(&self) -> bool {
        self.is_uniformly_dispersive() && self.is_uniformly_focusing()
    }
}

/// Sort key for a probability rounded to 12 significant digits.
fn rounded_key(x: f64) -> (i32, i64) {
    if x == 0.0 {
        return (i32::MIN, 0);
    }
    let mut exp = libm::floor(libm::log10(x)) as i32;
    let mut mant = libm::round(x / libm::pow(10.0, (exp - 11) as f64)) as i64;
    if mant >= 1_000_000_000_000 {
        exp += 1;
        mant /= 10;
    } else if mant < 100_000_000_000 {
        exp -= 1;
        mant = libm::round(x / libm::pow(10.0, (exp - 11) as f64)) as i64;
    }
    (exp, mant)
}

fn multiset<I: Iterator<Item = f64>>(values: I) -> BTreeMap<(i32, i64), usize> {
    let mut m = BTreeMap::new();
    for v in values {
        *m.entry(rounded_key(v)).or_insert(0) += 1;
    }
    m
}

fn all_multiset_equal<I, J>(mut groups: I) -> bool
where
    I: Iterator<Item = J>,
    J: Iterator<Item = f64>,
{
    let Some(first) = groups.next() else {
        return true;
    };
    let reference = multiset(first);
    groups.all(|g| multiset(g) == reference)
}

/// Shannon entropy of a probability vector, with `0 log 0 = 0`.
pub fn entropy(probs: &[f64], base: LogBase) -> f64 {
    let nats: f64 = probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * libm::log(p))
        .sum();
    base.from_nats(nats)
}

fn check_distribution(p: &[f64], len: usize) -> Result<(), CapacityError> {
    if p.len() != len {
        return Err(CapacityError::DistributionInvalid(
            "length differs from the input alphabet",
        ));
    }
    if p.iter().any(|&v| !v.is_finite() || v < 0.0) {
        return Err(CapacityError::DistributionInvalid(
            "negative or non-finite entry",
        ));
    }
    if (p.iter().sum::<f64>() - 1.0).abs() > ROW_SUM_TOLERANCE {
        return Err(CapacityError::DistributionInvalid(
            "entries do not sum to 1",
        ));
    }
    Ok(())
}

/// `I(X;Y) = H(Y) − H(Y|X)` for the given input distribution.
pub fn mutual_information(
    w: &TransitionMatrix,
    input: &[f64],
    base: LogBase,
) -> Result<f64, CapacityError> {
    check_distribution(input, w.rows)?;
    let mut out = vec![0.0; w.cols];
    for (x, &px) in input.iter().enumerate() {
        if px > 0.0 {
            for (o, &wy) in out.iter_mut().zip(w.row(x)) {
                *o += px * wy;
            }
        }
    }
    let h_y = entropy(&out, LogBase::NATS);
    let h_y_given_x: f64 = input
        .iter()
        .enumerate()
        .filter(|(_, &px)| px > 0.0)
        .map(|(x, &px)| px * entropy(w.row(x), LogBase::NATS))
        .sum();
    Ok(base.from_nats((h_y - h_y_given_x).max(0.0)))
}

/// Result of [`blahut_arimoto`].
#[derive(Debug, Clone, PartialEq)]
pub struct BaSolution {
    /// Lower capacity bound at termination.
    pub capacity_estimate: f64,
    pub input_distribution: Vec<f64>,
    pub iterations: usize,
    /// Upper minus lower capacity bound at termination.
    pub gap_bound: f64,
}

/// Capacity of an arbitrary DMC by alternating maximization, starting from the
/// uniform input. Stops once `max_x D(W_x || q) − log Σ_x p_x exp D(W_x || q)`,
/// an upper minus a lower bound on capacity, is at most `tol` (in `base` units).
pub fn blahut_arimoto(
    w: &TransitionMatrix,
    tol: f64,
    max_iters: usize,
    base: LogBase,
) -> Result<BaSolution, CapacityError> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(CapacityError::InvalidTolerance(tol));
    }
    for x in 0..w.rows {
        let sum: f64 = w.row(x).iter().sum();
        if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
            return Err(CapacityError::NotRowStochastic { row: x, sum });
        }
    }
    let n = w.rows;
    if n == 0 {
        return Err(CapacityError::DistributionInvalid("empty input alphabet"));
    }

    // columns that no input reaches carry no information and would give 0/0 below
    let live: Vec<usize> = (0..w.cols)
        .filter(|&y| w.column(y).any(|v| v > 0.0))
        .collect();
    let sparse_rows: Vec<Vec<(usize, f64)>> = (0..n)
        .map(|x| {
            live.iter()
                .enumerate()
                .filter_map(|(k, &y)| {
                    let v = w.get(x, y);
                    (v > 0.0).then_some((k, v))
                })
                .collect()
        })
        .collect();

    let mut p = vec![1.0 / n as f64; n];
    let mut out = vec![0.0; live.len()];
    let mut div = vec![0.0; n];
    let mut best = 0.0;
    let mut gap = f64::INFINITY;

    for iter in 1..=max_iters {
        out.iter_mut().for_each(|o| *o = 0.0);
        for (x, row) in sparse_rows.iter().enumerate() {
            for &(k, v) in row {
                out[k] += p[x] * v;
            }
        }
        for (x, row) in sparse_rows.iter().enumerate() {
            div[x] = row.iter().map(|&(k, v)| v * libm::log(v / out[k])).sum();
        }
        let max_div = div.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = p
            .iter()
            .zip(&div)
            .map(|(&px, &d)| px * libm::exp(d - max_div))
            .sum();
        let lower = max_div + libm::log(z);
        let upper = max_div;
        best = base.from_nats(lower).max(0.0);
        gap = base.from_nats(upper - lower).max(0.0);
        if gap <= tol {
            return Ok(BaSolution {
                capacity_estimate: best,
                input_distribution: p,
                iterations: iter,
                gap_bound: gap,
            });
        }
        for (px, &d) in p.iter_mut().zip(&div) {
            *px *= libm::exp(d - max_div) / z;
        }
    }
    Err(CapacityError::NonConvergence {
        best_estimate: best,
        gap,
        iterations: max_iters,
        input_distribution: p,
    })
}

/// `log |Y| − H(row)`, the capacity of a strongly symmetric channel.
pub fn strongly_symmetric_capacity(row: &[f64], num_outputs: usize, base: LogBase) -> f64 {
    base.log(num_outputs as f64) - entropy(row, base)
}

/// Capacity of one component: `log([T, h−ρ]_q / [h, h−ρ]_q)`.
pub fn component_capacity(q: u32, packet_len: usize, h: usize, rho: usize, base: LogBase) -> f64 {
    assert!(rho <= h && h <= packet_len, "need rho <= h <= T");
    let l = (h - rho) as u32;
    let outer = gaussian_coefficient(packet_len as u32, l, q);
    let inner = gaussian_coefficient(h as u32, l, q);
    if outer == inner {
        return 0.0;
    }
    let log_inner = if inner == BigUint::from(1u32) {
        0.0
    } else {
        base.log_big(&inner)
    };
    base.log_big(&outer) - log_inner
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComponentCapacity {
    pub deficiency: usize,
    pub capacity: f64,
    pub selection_prob: f64,
}

/// `Σ_i q_i C_i` over component channels whose selection probabilities sum to 1.
pub fn symmetric_capacity_from_components(
    components: &[ComponentCapacity],
) -> Result<f64, CapacityError> {
    let total: f64 = components.iter().map(|c| c.selection_prob).sum();
    if components
        .iter()
        .any(|c| c.selection_prob.is_nan() || c.selection_prob < 0.0)
    {
        return Err(CapacityError::DistributionInvalid(
            "negative selection probability",
        ));
    }
    if (total - 1.0).abs() > ROW_SUM_TOLERANCE {
        return Err(CapacityError::DistributionInvalid(
            "selection probabilities do not sum to 1",
        ));
    }
    Ok(components
        .iter()
        .filter(|c| c.selection_prob > 0.0)
        .map(|c| c.selection_prob * c.capacity)
        .sum())
}

#[derive(Debug, Clone, PartialEq)]
pub struct CapacityReport {
    pub closed_form: f64,
    pub per_component: Vec<ComponentCapacity>,
    pub log_base: f64,
    pub units_note: String,
}

/// Closed-form capacity `Σ_r p_def(r) log([T, h−r]_q / [h, h−r]_q)` with its
/// per-component breakdown.
pub fn capacity_closed_form(spec: &ChannelSpec, base: LogBase) -> CapacityReport {
    let per_component: Vec<ComponentCapacity> = (0..=spec.h())
        .map(|rho| ComponentCapacity {
            deficiency: rho,
            capacity: component_capacity(spec.q(), spec.packet_len(), spec.h(), rho, base),
            selection_prob: spec.rank_def().prob(rho),
        })
        .collect();
    let closed_form = symmetric_capacity_from_components(&per_component)
        .expect("rank deficiency distribution is normalized");
    CapacityReport {
        closed_form,
        per_component,
        log_base: base.value(),
        units_note: base.units(),
    }
}
