//! Composite indices, dominance counts and rankings for a fixed weight vector.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::IndicatorMatrix;

/// Absolute tolerance on composite-index comparisons.
pub const DEFAULT_TIE_EPS: f64 = 1e-9;

/// Largest weight the integer mode admits (the OECD tool's slider range).
pub const MAX_INTEGER_WEIGHT: u32 = 5;

/// Normalized weights always sum to this value, so indices lie in `[0, 10]`.
pub const WEIGHT_TOTAL: f64 = 10.0;

const SUM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error, PartialEq)]
pub enum RankingError {
    #[error("entity index {index} out of range for {count} entities")]
    EntityOutOfRange { index: usize, count: usize },
    #[error("expected {expected} weights, got {found}")]
    Arity { expected: usize, found: usize },
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightMode {
    Continuous,
    Integer,
}

impl std::str::FromStr for WeightMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "continuous" => Ok(Self::Continuous),
            "integer" => Ok(Self::Integer),
            other => Err(format!("unknown weight mode `{other}`")),
        }
    }
}

impl std::fmt::Display for WeightMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Continuous => "continuous",
            Self::Integer => "integer",
        })
    }
}

/// Raw weights `w_q` together with the normalized weights `ŵ_q` that sum to 10.
///
/// Continuous vectors are nonnegative and already sum to 10, so the two
/// coincide. Integer vectors hold values in `0..=5` with at least one nonzero
/// entry and are rescaled by `10 / Σw`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightVector {
    mode: WeightMode,
    raw: Vec<f64>,
    normalized: Vec<f64>,
}

impl WeightVector {
    /// Accepts nonnegative weights whose sum is within `1e-6` of 10 and
    /// rescales them so the sum is 10 to machine precision.
    pub fn continuous(raw: Vec<f64>) -> Result<Self, RankingError> {
        if raw.is_empty() {
            return Err(RankingError::InvalidWeights("no weights given".into()));
        }
        if let Some(w) = raw.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(RankingError::InvalidWeights(format!(
                "continuous weights must be finite and nonnegative, got {w}"
            )));
        }
        let sum: f64 = raw.iter().sum();
        if (sum - WEIGHT_TOTAL).abs() > SUM_TOLERANCE {
            return Err(RankingError::InvalidWeights(format!(
                "continuous weights must sum to {WEIGHT_TOTAL}, got {sum}"
            )));
        }
        let raw: Vec<f64> = raw.iter().map(|w| w * WEIGHT_TOTAL / sum).collect();
        Ok(Self {
            mode: WeightMode::Continuous,
            normalized: raw.clone(),
            raw,
        })
    }

    /// Projects arbitrary nonnegative weights (not all zero) onto the
    /// continuous simplex `Σw = 10`.
    pub fn continuous_scaled(raw: &[f64]) -> Result<Self, RankingError> {
        let clipped: Vec<f64> = raw.iter().map(|w| w.max(0.0)).collect();
        let sum: f64 = clipped.iter().sum();
        if !(sum.is_finite() && sum > 0.0) {
            return Err(RankingError::InvalidWeights(
                "weights must have a positive finite sum".into(),
            ));
        }
        Self::continuous(clipped.iter().map(|w| w * WEIGHT_TOTAL / sum).collect())
    }

    pub fn integer(raw: &[u32]) -> Result<Self, RankingError> {
        if raw.is_empty() {
            return Err(RankingError::InvalidWeights("no weights given".into()));
        }
        if let Some(w) = raw.iter().find(|w| **w > MAX_INTEGER_WEIGHT) {
            return Err(RankingError::InvalidWeights(format!(
                "integer weights must lie in 0..={MAX_INTEGER_WEIGHT}, got {w}"
            )));
        }
        let sum: u32 = raw.iter().sum();
        if sum == 0 {
            return Err(RankingError::InvalidWeights(
                "integer weights must not all be zero".into(),
            ));
        }
        let normalized = raw
            .iter()
            .map(|&w| WEIGHT_TOTAL * f64::from(w) / f64::from(sum))
            .collect();
        Ok(Self {
            mode: WeightMode::Integer,
            raw: raw.iter().map(|&w| f64::from(w)).collect(),
            normalized,
        })
    }

    /// Interprets real-valued input according to `mode`; integer mode requires
    /// every entry to be a whole number.
    pub fn from_values(mode: WeightMode, values: &[f64]) -> Result<Self, RankingError> {
        match mode {
            WeightMode::Continuous => Self::continuous(values.to_vec()),
            WeightMode::Integer => {
                let ints = values
                    .iter()
                    .map(|&v| {
                        if v.fract() == 0.0 && (0.0..=f64::from(MAX_INTEGER_WEIGHT)).contains(&v) {
                            Ok(v as u32)
                        } else {
                            Err(RankingError::InvalidWeights(format!(
                                "integer weights must be whole numbers in 0..={MAX_INTEGER_WEIGHT}, got {v}"
                            )))
                        }
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                Self::integer(&ints)
            }
        }
    }

    /// Continuous vector with `w_q = 10 / Q`.
    pub fn equal_weights(dimensions: usize) -> Self {
        assert!(dimensions > 0, "equal weights need at least one dimension");
        let w = WEIGHT_TOTAL / dimensions as f64;
        Self {
            mode: WeightMode::Continuous,
            raw: vec![w; dimensions],
            normalized: vec![w; dimensions],
        }
    }

    pub fn mode(&self) -> WeightMode {
        self.mode
    }

    pub fn raw(&self) -> &[f64] {
        &self.raw
    }

    pub fn normalized(&self) -> &[f64] {
        &self.normalized
    }

    pub fn len(&self) -> usize {
        self.raw.len()
    }

    pub fn is_empty(&self) -> bool {
        self.raw.is_empty()
    }

    /// Raw integer weights, for integer-mode vectors.
    pub fn as_integers(&self) -> Option<Vec<u32>> {
        (self.mode == WeightMode::Integer).then(|| self.raw.iter().map(|&w| w as u32).collect())
    }
}

/// Continuous equal weights for `Q` dimensions.
pub fn equal_weights(dimensions: usize) -> WeightVector {
    WeightVector::equal_weights(dimensions)
}

fn check_entity(data: &IndicatorMatrix, c: usize) -> Result<(), RankingError> {
    if c >= data.num_entities() {
        return Err(RankingError::EntityOutOfRange {
            index: c,
            count: data.num_entities(),
        });
    }
    Ok(())
}

fn check_arity(data: &IndicatorMatrix, w: &WeightVector) -> Result<(), RankingError> {
    if w.len() != data.num_dimensions() {
        return Err(RankingError::Arity {
            expected: data.num_dimensions(),
            found: w.len(),
        });
    }
    Ok(())
}

/// `CI_c = Σ_q ŵ_q I_{q,c}`.
pub fn composite_index(
    data: &IndicatorMatrix,
    w: &WeightVector,
    c: usize,
) -> Result<f64, RankingError> {
    check_entity(data, c)?;
    check_arity(data, w)?;
    Ok(ci_unchecked(data, w.normalized(), c))
}

fn ci_unchecked(data: &IndicatorMatrix, normalized: &[f64], c: usize) -> f64 {
    normalized
        .iter()
        .enumerate()
        .map(|(q, wq)| wq * data.value(q, c))
        .sum()
}

/// Composite index of every entity.
pub fn composite_indices(
    data: &IndicatorMatrix,
    w: &WeightVector,
) -> Result<Vec<f64>, RankingError> {
    check_arity(data, w)?;
    Ok((0..data.num_entities())
        .map(|c| ci_unchecked(data, w.normalized(), c))
        .collect())
}

/// Number of rivals `k ≠ c` with `CI_c ≥ CI_k` (weak, within [`DEFAULT_TIE_EPS`]).
pub fn dominance_count(
    data: &IndicatorMatrix,
    w: &WeightVector,
    c: usize,
) -> Result<usize, RankingError> {
    dominance_count_with(data, w, c, DEFAULT_TIE_EPS)
}

pub fn dominance_count_with(
    data: &IndicatorMatrix,
    w: &WeightVector,
    c: usize,
    tie_eps: f64,
) -> Result<usize, RankingError> {
    check_entity(data, c)?;
    let ci = composite_indices(data, w)?;
    Ok(count_dominated(&ci, c, tie_eps))
}

/// Number of rivals that score strictly above `c` (beyond the tie tolerance).
pub fn dominated_by_count(
    data: &IndicatorMatrix,
    w: &WeightVector,
    c: usize,
) -> Result<usize, RankingError> {
    check_entity(data, c)?;
    let ci = composite_indices(data, w)?;
    Ok(ci.len() - 1 - count_dominated(&ci, c, DEFAULT_TIE_EPS))
}

pub(crate) fn count_dominated(ci: &[f64], c: usize, tie_eps: f64) -> usize {
    ci.iter()
        .enumerate()
        .filter(|&(k, &v)| k != c && ci[c] >= v - tie_eps)
        .count()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankEntry {
    pub entity: usize,
    pub name: String,
    pub ci: f64,
    pub dominance_count: usize,
    pub rank: usize,
}

/// All entities ordered by composite index, best first.
///
/// `rank = C − dominance_count`, so tied entities share the better rank.
/// Display order breaks ties by entity index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingTable {
    pub entries: Vec<RankEntry>,
}

impl RankingTable {
    pub fn rank_of(&self, entity: usize) -> Option<usize> {
        self.entry(entity).map(|e| e.rank)
    }

    pub fn entry(&self, entity: usize) -> Option<&RankEntry> {
        self.entries.iter().find(|e| e.entity == entity)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

pub fn ranking_table(
    data: &IndicatorMatrix,
    w: &WeightVector,
) -> Result<RankingTable, RankingError> {
    ranking_table_with(data, w, DEFAULT_TIE_EPS)
}

pub fn ranking_table_with(
    data: &IndicatorMatrix,
    w: &WeightVector,
    tie_eps: f64,
) -> Result<RankingTable, RankingError> {
    let ci = composite_indices(data, w)?;
    let n = ci.len();
    let mut entries: Vec<RankEntry> = (0..n)
        .map(|c| {
            let dominance_count = count_dominated(&ci, c, tie_eps);
            RankEntry {
                entity: c,
                name: data.entity_names()[c].clone(),
                ci: ci[c],
                dominance_count,
                rank: n - dominance_count,
            }
        })
        .collect();
    entries.sort_by(|a, b| b.ci.total_cmp(&a.ci).then(a.entity.cmp(&b.entity)));
    Ok(RankingTable { entries })
}
