//! The subspace channel.
//!
//! One channel use takes an `h`-dimensional subspace `U` of F_q^T, picks an ordered
//! basis `X` of `U` uniformly at random, draws a transfer matrix `G` whose rank
//! deficiency follows the channel's [`RankDefDist`], and outputs the row space of
//! `G·X`. The exact law of this process is
//!
//! ```text
//! p(V | U) = p_def(h − dim V) / [h, dim V]_q   if V ⊆ U
//!          = 0                                  otherwise
//! ```
//!
//! where `[n, l]_q` is the Gaussian coefficient. [`build_dmc`] materializes it as a
//! dense transition matrix; [`components`] splits it into one strongly symmetric
//! sub-channel per rank deficiency.

use alloc::vec;
use alloc::vec::Vec;

use num_traits::ToPrimitive;
use rand::Rng;
use thiserror::Error;

use crate::capacity::TransitionMatrix;
use crate::gf::FieldSpec;
use crate::grassmann::{
    check_enumeration_size, enumerate_grassmannian, gaussian_coefficient, GrassmannError,
    GrassmannianIndex, Subspace,
};
use crate::matrix::sample_matrix_with_rank;

/// Tolerance on the total mass of a [`RankDefDist`].
pub const RANK_DEF_SUM_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChannelError {
    #[error("rank deficiency distribution is empty")]
    EmptyDistribution,
    #[error("probability {value} at deficiency {index} is negative or not finite")]
    InvalidProbability { index: usize, value: f64 },
    #[error("rank deficiency probabilities sum to {sum}, not 1")]
    NotNormalized { sum: f64 },
    #[error("rank deficiency distribution has {actual} entries, expected h + 1 = {expected}")]
    RankDefLength { expected: usize, actual: usize },
    #[error("invalid channel dimensions: need 1 <= h <= T, got h = {h}, T = {packet_len}")]
    InvalidDimensions { h: usize, packet_len: usize },
    #[error("subspace of dimension {dim} in F_q^{ambient} does not fit the channel (expected {expected})")]
    DimensionMismatch {
        dim: usize,
        ambient: usize,
        expected: &'static str,
    },
    #[error("subspace is over GF({actual}), channel is over GF({expected})")]
    FieldMismatch { expected: u32, actual: u32 },
    #[error("rank deficiency {rho} exceeds h = {h}")]
    InvalidDeficiency { rho: usize, h: usize },
    #[error("observation {value} is outside 0..={h}")]
    ObservationOutOfRange { value: usize, h: usize },
    #[error("no observations")]
    InsufficientData,
    #[error(transparent)]
    Grassmann(#[from] GrassmannError),
}

/// Probability of each rank deficiency `r = 0..=h` of the transfer matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct RankDefDist {
    probs: Vec<f64>,
}

impl RankDefDist {
    /// Accepts a vector indexed by deficiency whose entries are nonnegative and sum
    /// to 1 within [`RANK_DEF_SUM_TOLERANCE`].
    pub fn new(probs: Vec<f64>) -> Result<Self, ChannelError> {
        let sum = validate_entries(&probs)?;
        if (sum - 1.0).abs() > RANK_DEF_SUM_TOLERANCE {
            return Err(ChannelError::NotNormalized { sum });
        }
        Ok(RankDefDist { probs })
    }

    /// Like [`RankDefDist::new`] but accepts sums within `tolerance` of 1 and rescales
    /// them. Returns the applied adjustment `sum − 1` when rescaling happened.
    pub fn normalized(
        probs: Vec<f64>,
        tolerance: f64,
    ) -> Result<(Self, Option<f64>), ChannelError> {
        let sum = validate_entries(&probs)?;
        let off = sum - 1.0;
        if off.abs() > tolerance {
            return Err(ChannelError::NotNormalized { sum });
        }
        if off == 0.0 {
            return Ok((RankDefDist { probs }, None));
        }
        let probs = probs.into_iter().map(|p| p / sum).collect();
        Ok((RankDefDist { probs }, Some(off)))
    }

    pub fn point_mass(h: usize, r: usize) -> Self {
        let mut probs = vec![0.0; h + 1];
        probs[r.min(h)] = 1.0;
        RankDefDist { probs }
    }

    pub fn uniform(h: usize) -> Self {
        RankDefDist {
            probs: vec![1.0 / (h + 1) as f64; h + 1],
        }
    }

    /// Largest deficiency, i.e. `len − 1`.
    pub fn h(&self) -> usize {
        self.probs.len() - 1
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, r: usize) -> f64 {
        self.probs.get(r).copied().unwrap_or(0.0)
    }

    /// Draws a deficiency by inverse CDF.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for (r, &p) in self.probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return r;
            }
        }
        // rounding left a sliver above the last cumulative sum
        self.probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
    }
}

fn validate_entries(probs: &[f64]) -> Result<f64, ChannelError> {
    if probs.is_empty() {
        return Err(ChannelError::EmptyDistribution);
    }
    if let Some((index, &value)) = probs
        .iter()
        .enumerate()
        .find(|(_, p)| !p.is_finite() || **p < 0.0)
    {
        return Err(ChannelError::InvalidProbability { index, value });
    }
    Ok(probs.iter().sum())
}

/// Whether observations passed to [`estimate_rank_def_dist`] are ranks or deficiencies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObservationKind {
    Rank,
    Deficiency,
}

/// Normalized histogram of observed rank deficiencies. Ranks are converted with
/// `deficiency = h − rank`.
pub fn estimate_rank_def_dist<I>(
    observations: I,
    h: usize,
    kind: ObservationKind,
) -> Result<RankDefDist, ChannelError>
where
    I: IntoIterator<Item = usize>,
{
    let mut counts = vec![0u64; h + 1];
    let mut total = 0u64;
    for value in observations {
        if value > h {
            return Err(ChannelError::ObservationOutOfRange { value, h });
        }
        let r = match kind {
            ObservationKind::Rank => h - value,
            ObservationKind::Deficiency => value,
        };
        counts[r] += 1;
        total += 1;
    }
    if total == 0 {
        return Err(ChannelError::InsufficientData);
    }
    let probs = counts.iter().map(|&c| c as f64 / total as f64).collect();
    let (dist, _) = RankDefDist::normalized(probs, 1e-9)?;
    Ok(dist)
}

/// Channel parameters: the field, packet length `T`, input dimension `h` and the
/// rank deficiency distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSpec {
    field: FieldSpec,
    packet_len: usize,
    h: usize,
    rank_def: RankDefDist,
}

impl ChannelSpec {
    pub fn new(
        field: FieldSpec,
        packet_len: usize,
        h: usize,
        rank_def: RankDefDist,
    ) -> Result<Self, ChannelError> {
        if h < 1 || h > packet_len {
            return Err(ChannelError::InvalidDimensions { h, packet_len });
        }
        if rank_def.h() != h {
            return Err(ChannelError::RankDefLength {
                expected: h + 1,
                actual: rank_def.probs().len(),
            });
        }
        Ok(ChannelSpec {
            field,
            packet_len,
            h,
            rank_def,
        })
    }

    pub fn field(&self) -> &FieldSpec {
        &self.field
    }

    pub fn q(&self) -> u32 {
        self.field.order()
    }

    pub fn packet_len(&self) -> usize {
        self.packet_len
    }

    pub fn h(&self) -> usize {
        self.h
    }

    pub fn rank_def(&self) -> &RankDefDist {
        &self.rank_def
    }

    /// Same channel with a different deficiency distribution.
    pub fn with_rank_def(&self, rank_def: RankDefDist) -> Result<Self, ChannelError> {
        ChannelSpec::new(self.field.clone(), self.packet_len, self.h, rank_def)
    }

    /// `[h, l]_q` for `l = 0..=h`, as floats.
    fn inner_counts(&self) -> Vec<f64> {
        (0..=self.h)
            .map(|l| {
                gaussian_coefficient(self.h as u32, l as u32, self.q())
                    .to_f64()
                    .expect("finite")
            })
            .collect()
    }

    fn check_subspace(&self, s: &Subspace, input: bool) -> Result<(), ChannelError> {
        if !s.field().same_field(&self.field) {
            return Err(ChannelError::FieldMismatch {
                expected: self.q(),
                actual: s.field().order(),
            });
        }
        let ok = s.ambient_dim() == self.packet_len
            && if input {
                s.dim() == self.h
            } else {
                s.dim() <= self.h
            };
        if ok {
            Ok(())
        } else {
            Err(ChannelError::DimensionMismatch {
                dim: s.dim(),
                ambient: s.ambient_dim(),
                expected: if input {
                    "input of dimension h in F_q^T"
                } else {
                    "output of dimension at most h in F_q^T"
                },
            })
        }
    }
}

/// Probability that `v` is received given that `u` is sent.
pub fn transition_prob(
    spec: &ChannelSpec,
    u: &Subspace,
    v: &Subspace,
) -> Result<f64, ChannelError> {
    spec.check_subspace(u, true)?;
    spec.check_subspace(v, false)?;
    if !u.contains(v)? {
        return Ok(0.0);
    }
    let l = v.dim();
    let count = gaussian_coefficient(spec.h as u32, l as u32, spec.q())
        .to_f64()
        .expect("finite");
    Ok(spec.rank_def.prob(spec.h - l) / count)
}

/// Probability that `v` is received given that `u` is sent and the transfer matrix
/// has rank deficiency `rho`.
pub fn conditional_prob_given_rank(
    spec: &ChannelSpec,
    u: &Subspace,
    v: &Subspace,
    rho: usize,
) -> Result<f64, ChannelError> {
    if rho > spec.h {
        return Err(ChannelError::InvalidDeficiency { rho, h: spec.h });
    }
    spec.check_subspace(u, true)?;
    spec.check_subspace(v, false)?;
    if rho != spec.h - v.dim() || !u.contains(v)? {
        return Ok(0.0);
    }
    let count = gaussian_coefficient(spec.h as u32, v.dim() as u32, spec.q())
        .to_f64()
        .expect("finite");
    Ok(1.0 / count)
}

/// One use of the channel: random basis of `u`, random transfer matrix with a
/// freshly drawn rank deficiency, row space of the product.
pub fn simulate_one_use<R: Rng + ?Sized>(
    spec: &ChannelSpec,
    u: &Subspace,
    rng: &mut R,
) -> Result<Subspace, ChannelError> {
    spec.check_subspace(u, true)?;
    let x = u.random_ordered_basis(rng);
    let r = spec.rank_def.sample(rng);
    let h = spec.h;
    let g = sample_matrix_with_rank(&spec.field, h, h, h - r, rng).expect("rank within 0..=h");
    let y = g.matmul(&x).expect("h x h times h x T");
    Ok(Subspace::span(&y))
}

/// Input alphabet (the Grassmannian of dimension h) and output alphabet (all
/// subspaces of dimension 0..=h, ascending by dimension).
#[derive(Debug, Clone)]
pub struct Alphabets {
    inputs: GrassmannianIndex,
    outputs: Vec<GrassmannianIndex>,
    offsets: Vec<usize>,
}

impl Alphabets {
    /// Enumerates both alphabets, failing if any single Grassmannian exceeds `cap`.
    pub fn new(spec: &ChannelSpec, cap: u64) -> Result<Self, ChannelError> {
        for l in 0..=spec.h {
            check_enumeration_size(spec.q(), spec.packet_len, l, cap)?;
        }
        let outputs: Vec<GrassmannianIndex> = (0..=spec.h)
            .map(|l| enumerate_grassmannian(&spec.field, spec.packet_len, l, cap))
            .collect::<Result<_, _>>()?;
        let inputs = outputs[spec.h].clone();
        let mut offsets = Vec::with_capacity(outputs.len() + 1);
        let mut acc = 0;
        for block in &outputs {
            offsets.push(acc);
            acc += block.len();
        }
        offsets.push(acc);
        Ok(Alphabets {
            inputs,
            outputs,
            offsets,
        })
    }

    pub fn inputs(&self) -> &GrassmannianIndex {
        &self.inputs
    }

    pub fn num_inputs(&self) -> usize {
        self.inputs.len()
    }

    pub fn num_outputs(&self) -> usize {
        *self.offsets.last().expect("nonempty")
    }

    /// Output block of dimension `l`.
    pub fn output_block(&self, l: usize) -> &GrassmannianIndex {
        &self.outputs[l]
    }

    /// Global index range of the outputs of dimension `l`.
    pub fn output_range(&self, l: usize) -> core::ops::Range<usize> {
        self.offsets[l]..self.offsets[l + 1]
    }

    pub fn output_index(&self, v: &Subspace) -> Option<usize> {
        let block = self.outputs.get(v.dim())?;
        block.index_of(v).map(|i| self.offsets[v.dim()] + i)
    }

    pub fn output_at(&self, j: usize) -> Option<&Subspace> {
        let l = self.offsets.partition_point(|&o| o <= j).checked_sub(1)?;
        self.outputs.get(l)?.subspace_at(j - self.offsets[l])
    }

    pub fn output_dim(&self, j: usize) -> usize {
        self.offsets.partition_point(|&o| o <= j) - 1
    }
}

/// The subspace channel as an explicit transition matrix.
#[derive(Debug, Clone)]
pub struct Dmc {
    spec: ChannelSpec,
    alphabets: Alphabets,
    trans: TransitionMatrix,
}

impl Dmc {
    pub fn spec(&self) -> &ChannelSpec {
        &self.spec
    }

    pub fn alphabets(&self) -> &Alphabets {
        &self.alphabets
    }

    pub fn trans(&self) -> &TransitionMatrix {
        &self.trans
    }

    pub fn num_inputs(&self) -> usize {
        self.alphabets.num_inputs()
    }

    pub fn num_outputs(&self) -> usize {
        self.alphabets.num_outputs()
    }

    pub fn input_at(&self, i: usize) -> Option<&Subspace> {
        self.alphabets.inputs.subspace_at(i)
    }

    pub fn output_at(&self, j: usize) -> Option<&Subspace> {
        self.alphabets.output_at(j)
    }

    /// Rank deficiency `h − dim V` associated with output column `j`.
    pub fn component_of_output(&self, j: usize) -> usize {
        self.spec.h - self.alphabets.output_dim(j)
    }
}

/// Builds the full transition matrix. Rows follow the Grassmannian order of the
/// inputs; columns are grouped by output dimension `0..=h`, each group in
/// Grassmannian order.
pub fn build_dmc(spec: &ChannelSpec, cap: u64) -> Result<Dmc, ChannelError> {
    let alphabets = Alphabets::new(spec, cap)?;
    let counts = spec.inner_counts();
    let (rows, cols) = (alphabets.num_inputs(), alphabets.num_outputs());
    let mut data = vec![0.0; rows * cols];
    for (i, u) in alphabets.inputs.iter().enumerate() {
        let row = &mut data[i * cols..(i + 1) * cols];
        for (l, &count) in counts.iter().enumerate() {
            let p = spec.rank_def.prob(spec.h - l) / count;
            for v in u.subspaces_of_dim(l)? {
                let j = alphabets
                    .output_index(&v)
                    .expect("subspace of an input is an output");
                row[j] = p;
            }
        }
    }
    let trans =
        TransitionMatrix::new(rows, cols, data).expect("rows sum to the total deficiency mass");
    Ok(Dmc {
        spec: spec.clone(),
        alphabets,
        trans,
    })
}

/// A strongly symmetric sub-channel selected with probability `selection_prob`.
#[derive(Debug, Clone)]
pub struct Component {
    pub deficiency: usize,
    pub selection_prob: f64,
    /// Inputs × outputs of dimension `h − deficiency`.
    pub channel: TransitionMatrix,
}

/// Splits the channel into its `h + 1` component channels, one per rank deficiency.
///
/// Each component keeps the output columns of dimension `h − ρ`, renormalized by
/// `p_def(ρ)`. Components with zero selection probability carry the conditional
/// law given `ρ` directly, since the renormalization would be 0/0.
pub fn components(dmc: &Dmc) -> Vec<Component> {
    let spec = &dmc.spec;
    let h = spec.h;
    let counts = spec.inner_counts();
    let inputs = dmc.num_inputs();
    (0..=h)
        .map(|rho| {
            let l = h - rho;
            let range = dmc.alphabets.output_range(l);
            let width = range.len();
            let sel = spec.rank_def.prob(rho);
            let mut data = Vec::with_capacity(inputs * width);
            for i in 0..inputs {
                let row = &dmc.trans.row(i)[range.clone()];
                if sel > 0.0 {
                    data.extend(row.iter().map(|&p| p / sel));
                } else {
                    let u = dmc.input_at(i).expect("row index");
                    let mut cond = vec![0.0; width];
                    for v in u.subspaces_of_dim(l).expect("l <= h") {
                        let j = dmc.alphabets.output_index(&v).expect("output") - range.start;
                        cond[j] = 1.0 / counts[l];
                    }
                    data.extend(cond);
                }
            }
            Component {
                deficiency: rho,
                selection_prob: sel,
                channel: TransitionMatrix::new(inputs, width, data)
                    .expect("conditional rows are stochastic"),
            }
        })
        .collect()
}
