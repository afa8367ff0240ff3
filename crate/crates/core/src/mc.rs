//! Monte Carlo checks of the channel law.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use libm::sqrt;
use num_traits::ToPrimitive;
use thiserror::Error;

use crate::capacity::{capacity_closed_form, CapacityReport, LogBase};
use crate::channel::{
    estimate_rank_def_dist, simulate_one_use, Alphabets, ChannelError, ChannelSpec,
    ObservationKind, RankDefDist,
};
use crate::grassmann::gaussian_coefficient;
use crate::rng::{seeded, substream};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum McError {
    #[error("need at least one draw")]
    InsufficientData,
    #[error(transparent)]
    Channel(#[from] ChannelError),
}

/// One (input, output) cell of a Monte Carlo run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McCell {
    pub input: usize,
    pub output: usize,
    pub count: u64,
    pub expected_prob: f64,
    /// `(frequency − p) / sqrt(p (1 − p) / N)`. Zero for an exact match when the
    /// binomial variance vanishes, infinite for any mismatch there.
    pub z: f64,
}

#[derive(Debug, Clone)]
pub struct McReport {
    pub spec: ChannelSpec,
    pub draws_per_input: u64,
    pub seed: u64,
    /// Observed counts keyed by (input index, output index).
    pub counts: BTreeMap<(usize, usize), u64>,
    /// Every cell with positive expected probability or a positive count.
    pub cells: Vec<McCell>,
    pub max_abs_deviation: f64,
    /// Largest |z| over cells with positive expected probability.
    pub worst_z_score: f64,
    /// Draws that landed on a cell of probability zero.
    pub off_support_hits: u64,
    pub alphabets: Alphabets,
}

fn z_score(freq: f64, p: f64, n: u64) -> f64 {
    let var = p * (1.0 - p) / n as f64;
    if var > 0.0 {
        (freq - p) / sqrt(var)
    } else if freq == p {
        0.0
    } else {
        f64::INFINITY
    }
}

/// Simulates `draws_per_input` uses of the channel for every input subspace and
/// compares output frequencies with the exact law.
///
/// Input `i` draws from substream `i` of `seed` (see [`crate::rng::substream`]), so
/// the report is a deterministic function of its arguments.
pub fn run_mc(
    spec: &ChannelSpec,
    draws_per_input: u64,
    seed: u64,
    cap: u64,
) -> Result<McReport, McError> {
    if draws_per_input == 0 {
        return Err(McError::InsufficientData);
    }
    let alphabets = Alphabets::new(spec, cap)?;
    let h = spec.h();
    let inner: Vec<f64> = (0..=h)
        .map(|l| {
            gaussian_coefficient(h as u32, l as u32, spec.q())
                .to_f64()
                .expect("finite")
        })
        .collect();

    let mut counts = BTreeMap::new();
    let mut cells = Vec::new();
    let mut max_abs_deviation: f64 = 0.0;
    let mut worst_z_score: f64 = 0.0;
    let mut off_support_hits = 0;
    let n = draws_per_input as f64;

    for (i, u) in alphabets.inputs().iter().enumerate() {
        let mut rng = substream(seed, i as u64);
        let mut row: BTreeMap<usize, u64> = BTreeMap::new();
        for _ in 0..draws_per_input {
            let v = simulate_one_use(spec, u, &mut rng)?;
            let j = alphabets
                .output_index(&v)
                .expect("output alphabet is complete");
            *row.entry(j).or_default() += 1;
        }

        let mut expected: BTreeMap<usize, f64> = BTreeMap::new();
        for (l, &count) in inner.iter().enumerate() {
            let p = spec.rank_def().prob(h - l) / count;
            if p > 0.0 {
                for v in u.subspaces_of_dim(l).map_err(ChannelError::from)? {
                    expected.insert(alphabets.output_index(&v).expect("output"), p);
                }
            }
        }

        let mut keys: Vec<usize> = expected.keys().chain(row.keys()).copied().collect();
        keys.sort_unstable();
        keys.dedup();
        for j in keys {
            let count = row.get(&j).copied().unwrap_or(0);
            let p = expected.get(&j).copied().unwrap_or(0.0);
            let freq = count as f64 / n;
            let z = z_score(freq, p, draws_per_input);
            max_abs_deviation = max_abs_deviation.max((freq - p).abs());
            if p > 0.0 {
                worst_z_score = worst_z_score.max(z.abs());
            } else {
                off_support_hits += count;
            }
            cells.push(McCell {
                input: i,
                output: j,
                count,
                expected_prob: p,
                z,
            });
        }
        counts.extend(row.into_iter().map(|(j, c)| ((i, j), c)));
    }

    Ok(McReport {
        spec: spec.clone(),
        draws_per_input,
        seed,
        counts,
        cells,
        max_abs_deviation,
        worst_z_score,
        off_support_hits,
        alphabets,
    })
}

#[derive(Debug, Clone)]
pub struct PipelineReport {
    pub draws: u64,
    pub seed: u64,
    pub true_dist: RankDefDist,
    /// Histogram of observed deficiencies `h − dim(output)`.
    pub deficiency_counts: Vec<u64>,
    pub estimated_dist: RankDefDist,
    pub true_capacity: CapacityReport,
    pub estimated_capacity: CapacityReport,
}

/// Simulates `draws` channel uses (inputs cycled through the Grassmannian in
/// enumeration order), estimates the deficiency distribution from the observed
/// output dimensions, and reports capacity under both the true and the estimated
/// distribution.
pub fn empirical_capacity_pipeline(
    spec: &ChannelSpec,
    draws: u64,
    seed: u64,
    cap: u64,
    base: LogBase,
) -> Result<PipelineReport, McError> {
    if draws == 0 {
        return Err(McError::InsufficientData);
    }
    let alphabets = Alphabets::new(spec, cap)?;
    let inputs = alphabets.inputs();
    let h = spec.h();
    let mut rng = seeded(seed);
    let mut deficiency_counts = vec![0u64; h + 1];
    let mut observed = Vec::with_capacity(draws as usize);
    for k in 0..draws {
        let u = inputs
            .subspace_at((k % inputs.len() as u64) as usize)
            .expect("index in range");
        let v = simulate_one_use(spec, u, &mut rng)?;
        // X has full rank h, so the output deficiency equals that of G
        let def = h - v.dim();
        deficiency_counts[def] += 1;
        observed.push(def);
    }
    let estimated_dist = estimate_rank_def_dist(observed, h, ObservationKind::Deficiency)?;
    let estimated_spec = spec.with_rank_def(estimated_dist.clone())?;
    Ok(PipelineReport {
        draws,
        seed,
        true_dist: spec.rank_def().clone(),
        deficiency_counts,
        estimated_dist,
        true_capacity: capacity_closed_form(spec, base),
        estimated_capacity: capacity_closed_form(&estimated_spec, base),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf::field_new;
    use crate::grassmann::DEFAULT_ENUMERATION_CAP;

    fn spec(q: u32, t: usize, h: usize, probs: &[f64]) -> ChannelSpec {
        ChannelSpec::new(
            field_new(q).unwrap(),
            t,
            h,
            RankDefDist::new(probs.to_vec()).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn full_rank_is_noiseless() {
        let r = run_mc(
            &spec(2, 3, 2, &[1.0, 0.0, 0.0]),
            200,
            1,
            DEFAULT_ENUMERATION_CAP,
        )
        .unwrap();
        assert_eq!(r.max_abs_deviation, 0.0);
        assert_eq!(r.off_support_hits, 0);
        assert_eq!(r.worst_z_score, 0.0);
        for (&(i, j), &c) in &r.counts {
            assert_eq!(c, 200);
            assert_eq!(
                r.alphabets
                    .output_index(r.alphabets.inputs().subspace_at(i).unwrap()),
                Some(j)
            );
        }
    }

    #[test]
    fn zero_rank_always_gives_zero_space() {
        let r = run_mc(
            &spec(2, 3, 2, &[0.0, 0.0, 1.0]),
            100,
            1,
            DEFAULT_ENUMERATION_CAP,
        )
        .unwrap();
        assert_eq!(r.counts.len(), 7);
        assert!(r.counts.iter().all(|(&(_, j), &c)| j == 0 && c == 100));
        assert_eq!(r.max_abs_deviation, 0.0);
    }

    #[test]
    fn counts_sum_per_input_and_stay_on_support() {
        let s = spec(3, 3, 2, &[0.2, 0.5, 0.3]);
        let r = run_mc(&s, 2_000, 42, DEFAULT_ENUMERATION_CAP).unwrap();
        let mut per_input = vec![0u64; r.alphabets.num_inputs()];
        for (&(i, _), &c) in &r.counts {
            per_input[i] += c;
        }
        assert!(per_input.iter().all(|&c| c == 2_000));
        assert_eq!(r.off_support_hits, 0);
        assert!(r.cells.iter().all(|c| c.expected_prob > 0.0));
        assert!(r.worst_z_score < 5.0, "{}", r.worst_z_score);
    }

    #[test]
    fn reproducible() {
        let s = spec(2, 4, 2, &[0.3, 0.4, 0.3]);
        let a = run_mc(&s, 500, 7, DEFAULT_ENUMERATION_CAP).unwrap();
        let b = run_mc(&s, 500, 7, DEFAULT_ENUMERATION_CAP).unwrap();
        assert_eq!(a.counts, b.counts);
        assert_eq!(a.cells, b.cells);
        let c = run_mc(&s, 500, 8, DEFAULT_ENUMERATION_CAP).unwrap();
        assert_ne!(a.counts, c.counts);
    }

    #[test]
    fn zero_draws_rejected() {
        let s = spec(2, 3, 2, &[1.0, 0.0, 0.0]);
        assert_eq!(
            run_mc(&s, 0, 1, DEFAULT_ENUMERATION_CAP).unwrap_err(),
            McError::InsufficientData
        );
        assert_eq!(
            empirical_capacity_pipeline(&s, 0, 1, DEFAULT_ENUMERATION_CAP, LogBase::BITS)
                .unwrap_err(),
            McError::InsufficientData
        );
    }

    #[test]
    fn cap_is_enforced() {
        let s = spec(2, 20, 10, RankDefDist::point_mass(10, 0).probs());
        assert!(matches!(
            run_mc(&s, 1, 1, DEFAULT_ENUMERATION_CAP),
            Err(McError::Channel(ChannelError::Grassmann(_)))
        ));
    }

    #[test]
    fn pipeline_point_mass() {
        let s = spec(2, 3, 2, &[1.0, 0.0, 0.0]);
        let r = empirical_capacity_pipeline(&s, 1_000, 3, DEFAULT_ENUMERATION_CAP, LogBase::BITS)
            .unwrap();
        assert_eq!(r.estimated_dist.probs(), &[1.0, 0.0, 0.0]);
        assert_eq!(
            r.true_capacity.closed_form,
            r.estimated_capacity.closed_form
        );
        assert_eq!(r.deficiency_counts, vec![1_000, 0, 0]);
    }

    #[test]
    fn pipeline_estimate_close_to_truth() {
        let s = spec(2, 3, 2, &[0.5, 0.3, 0.2]);
        for seed in 0..5 {
            let r = empirical_capacity_pipeline(
                &s,
                100_000,
                seed,
                DEFAULT_ENUMERATION_CAP,
                LogBase::BITS,
            )
            .unwrap();
            let diff = (r.true_capacity.closed_form - r.estimated_capacity.closed_form).abs();
            assert!(diff < 0.01, "seed {seed}: {diff}");
        }
    }
}
