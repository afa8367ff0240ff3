//! Channel spec files.
//!
//! ```json
//! { "q": 2, "T": 3, "h": 2, "rank_def": [0.5, 0.3, 0.2] }
//! ```
//!
//! `rank_def[r]` is the probability that the transfer matrix has rank deficiency `r`.
//! Vectors whose sum is within [`RENORMALIZE_TOLERANCE`] of 1 are rescaled and the
//! adjustment is reported as a warning; anything further off is rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use rlcn_core::channel::{ChannelError, ChannelSpec, RankDefDist};
use rlcn_core::gf::{field_new, GfError};

pub const RENORMALIZE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum SpecError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed channel spec: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid field size: {0}")]
    Field(#[from] GfError),
    #[error("invalid channel: {0}")]
    Channel(#[from] ChannelError),
    #[error("invalid rank deficiency list {0:?}: expected comma-separated numbers")]
    RankDefList(String),
}

/// On-disk form of a channel spec.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSpecFile {
    pub q: u32,
    #[serde(rename = "T")]
    pub packet_len: usize,
    pub h: usize,
    pub rank_def: Vec<f64>,
}

impl ChannelSpecFile {
    pub fn from_spec(spec: &ChannelSpec) -> Self {
        ChannelSpecFile {
            q: spec.q(),
            packet_len: spec.packet_len(),
            h: spec.h(),
            rank_def: spec.rank_def().probs().to_vec(),
        }
    }

    /// Validates and converts into a [`ChannelSpec`].
    pub fn resolve(&self) -> Result<LoadedSpec, SpecError> {
        let field = field_new(self.q)?;
        let (rank_def, adjustment) =
            RankDefDist::normalized(self.rank_def.clone(), RENORMALIZE_TOLERANCE)?;
        let spec = ChannelSpec::new(field, self.packet_len, self.h, rank_def)?;
        let warnings = adjustment
            .map(|off| {
                vec![format!(
                    "rank_def summed to 1{off:+e}; rescaled to sum to 1"
                )]
            })
            .unwrap_or_default();
        Ok(LoadedSpec { spec, warnings })
    }
}

#[derive(Debug, Clone)]
pub struct LoadedSpec {
    pub spec: ChannelSpec,
    pub warnings: Vec<String>,
}

pub fn parse_spec(json: &str) -> Result<LoadedSpec, SpecError> {
    let file: ChannelSpecFile = serde_json::from_str(json)?;
    file.resolve()
}

pub fn load_spec(path: &Path) -> Result<LoadedSpec, SpecError> {
    let text = std::fs::read_to_string(path).map_err(|source| SpecError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_spec(&text)
}

/// Parses `0.5,0.3,0.2` into a vector.
pub fn parse_rank_def_list(s: &str) -> Result<Vec<f64>, SpecError> {
    s.split(',')
        .map(|part| part.trim().parse::<f64>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|_| SpecError::RankDefList(s.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_valid_spec() {
        let loaded =
            parse_spec(r#"{"q": 2, "T": 3, "h": 2, "rank_def": [0.5, 0.3, 0.2]}"#).unwrap();
        assert_eq!(loaded.spec.q(), 2);
        assert_eq!(loaded.spec.packet_len(), 3);
        assert_eq!(loaded.spec.h(), 2);
        assert!(loaded.warnings.is_empty());
    }

    #[test]
    fn renormalizes_small_drift_with_warning() {
        let loaded =
            parse_spec(r#"{"q": 2, "T": 3, "h": 2, "rank_def": [0.5, 0.3, 0.2000000001]}"#)
                .unwrap();
        assert_eq!(loaded.warnings.len(), 1);
        let sum: f64 = loaded.spec.rank_def().probs().iter().sum();
        assert!((sum - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_invalid_specs() {
        let cases = [
            (
                r#"{"q": 2, "T": 3, "h": 2, "rank_def": [0.5, 0.3, 0.3]}"#,
                "sum",
            ),
            (
                r#"{"q": 6, "T": 3, "h": 2, "rank_def": [1, 0, 0]}"#,
                "prime power",
            ),
            (
                r#"{"q": 2, "T": 3, "h": 4, "rank_def": [1, 0, 0, 0, 0]}"#,
                "h <= T",
            ),
            (r#"{"q": 2, "T": 3, "h": 2, "rank_def": [1, 0]}"#, "h + 1"),
            (
                r#"{"q": 2, "T": 3, "h": 2, "rank_def": [1.2, -0.2, 0]}"#,
                "negative",
            ),
            (r#"{"q": 2, "T": 3, "h": 2}"#, "missing field"),
            (
                r#"{"q": 2, "T": 3, "h": 2, "rank_def": [1,0,0], "x": 1}"#,
                "unknown field",
            ),
        ];
        for (json, what) in cases {
            let err = parse_spec(json).unwrap_err().to_string();
            assert!(err.contains(what), "{json}: {err}");
        }
    }

    #[test]
    fn rank_def_lists() {
        assert_eq!(
            parse_rank_def_list("0.5, 0.3,0.2").unwrap(),
            vec![0.5, 0.3, 0.2]
        );
        assert_eq!(parse_rank_def_list("1").unwrap(), vec![1.0]);
        assert!(parse_rank_def_list("0.5,,0.5").is_err());
        assert!(parse_rank_def_list("a").is_err());
    }

    #[test]
    fn round_trips_through_file_form() {
        let loaded =
            parse_spec(r#"{"q": 4, "T": 5, "h": 3, "rank_def": [0.25, 0.25, 0.25, 0.25]}"#)
                .unwrap();
        let file = ChannelSpecFile::from_spec(&loaded.spec);
        let text = serde_json::to_string(&file).unwrap();
        assert_eq!(
            text,
            r#"{"q":4,"T":5,"h":3,"rank_def":[0.25,0.25,0.25,0.25]}"#
        );
    }
}
