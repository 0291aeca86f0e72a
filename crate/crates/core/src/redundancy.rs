//! Pairwise redundancy scoring: concatenate per-event feature vectors into
//! per-period rows, standardize column-wise, take squared Euclidean
//! distances between VPs, average over periods and min-max scale into
//! redundancy scores in `[0, 1]` (1 = most redundant pair).

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::features::{FeatureVector, VECTOR_LEN};

/// Per-period matrix of concatenated feature vectors, one row per VP in
/// canonical sorted `vp_id` order. Slots that were left empty by the sampler
/// are zero-filled and masked out of scaling and distances.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodMatrix {
    pub period_index: usize,
    pub vp_ids: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    /// One flag per event slot; a masked slot contributes no live columns.
    pub slot_mask: Vec<bool>,
    pub per_period: usize,
}

impl PeriodMatrix {
    pub fn width(&self) -> usize {
        self.per_period * VECTOR_LEN
    }

    /// Indices of columns belonging to filled slots.
    pub fn live_columns(&self) -> Vec<usize> {
        let mut cols = Vec::new();
        for (slot, &live) in self.slot_mask.iter().enumerate() {
            if live {
                cols.extend(slot * VECTOR_LEN..(slot + 1) * VECTOR_LEN);
            }
        }
        cols
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RedundancyError {
    /// VPs do not share the same filled-slot set for a period.
    InconsistentSlots { period: usize },
    /// Standardization needs at least two rows.
    SingleRow,
    /// No per-period matrices supplied.
    NoPeriods,
    /// VP orders differ across period matrices.
    VpOrderMismatch,
    /// All off-diagonal mean distances are equal; min-max scaling undefined.
    DegenerateScoreSpread,
}

impl fmt::Display for RedundancyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RedundancyError::InconsistentSlots { period } => {
                write!(f, "period {period}: VPs disagree on which event slots are filled")
            }
            RedundancyError::SingleRow => write!(f, "standardization undefined for a single row"),
            RedundancyError::NoPeriods => write!(f, "no period matrices supplied"),
            RedundancyError::VpOrderMismatch => write!(f, "period matrices use different VP orders"),
            RedundancyError::DegenerateScoreSpread => write!(f, "degenerate score spread"),
        }
    }
}

impl core::error::Error for RedundancyError {}

/// Build the period matrix from per-(VP, slot) feature vectors. Every VP must
/// cover the same slot set; slots absent for all VPs are masked.
pub fn assemble_period_matrix(
    vectors: &BTreeMap<(String, usize), FeatureVector>,
    period_index: usize,
    per_period: usize,
) -> Result<PeriodMatrix, RedundancyError> {
    let mut vp_ids: Vec<String> = vectors.keys().map(|(vp, _)| vp.clone()).collect();
    vp_ids.sort();
    vp_ids.dedup();

    let mut slot_mask = vec![false; per_period];
    for (_, slot) in vectors.keys() {
        if *slot < per_period {
            slot_mask[*slot] = true;
        }
    }
    // consistency: each VP must have exactly the filled slots
    for vp in &vp_ids {
        for (slot, &live) in slot_mask.iter().enumerate() {
            if live != vectors.contains_key(&(vp.clone(), slot)) {
                return Err(RedundancyError::InconsistentSlots { period: period_index });
            }
        }
    }

    let rows = vp_ids
        .iter()
        .map(|vp| {
            let mut row = vec![0.0; per_period * VECTOR_LEN];
            for (slot, &live) in slot_mask.iter().enumerate() {
                if live {
                    let v = &vectors[&(vp.clone(), slot)];
                    row[slot * VECTOR_LEN..(slot + 1) * VECTOR_LEN].copy_from_slice(&v.values);
                }
            }
            row
        })
        .collect();

    Ok(PeriodMatrix {
        period_index,
        vp_ids,
        rows,
        slot_mask,
        per_period,
    })
}

/// Column-wise standard scaling over live columns: subtract the mean, divide
/// by the population standard deviation. Zero-variance columns become zero;
/// masked columns stay zero.
pub fn standard_scale(matrix: &PeriodMatrix) -> Result<PeriodMatrix, RedundancyError> {
    let n = matrix.rows.len();
    if n < 2 {
        return Err(RedundancyError::SingleRow);
    }
    let mut out = matrix.clone();
    for col in matrix.live_columns() {
        let mean = matrix.rows.iter().map(|r| r[col]).sum::<f64>() / n as f64;
        let var = matrix
            .rows
            .iter()
            .map(|r| {
                let d = r[col] - mean;
                d * d
            })
            .sum::<f64>()
            / n as f64;
        let sd = libm::sqrt(var);
        for row in &mut out.rows {
            row[col] = if sd > 0.0 { (row[col] - mean) / sd } else { 0.0 };
        }
    }
    Ok(out)
}

/// Squared Euclidean distance between every pair of VP rows, over live
/// columns only.
pub fn pairwise_sq_distance(matrix: &PeriodMatrix) -> Vec<Vec<f64>> {
    let n = matrix.rows.len();
    let cols = matrix.live_columns();
    let mut dist = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d: f64 = cols
                .iter()
                .map(|&c| {
                    let d = matrix.rows[i][c] - matrix.rows[j][c];
                    d * d
                })
                .sum();
            dist[i][j] = d;
            dist[j][i] = d;
        }
    }
    dist
}

/// Pairwise VP redundancy scores with the raw per-pair mean distances they
/// were scaled from.
#[derive(Debug, Clone, PartialEq)]
pub struct RedundancyMatrix {
    pub vp_ids: Vec<String>,
    /// Symmetric, in `[0, 1]`; diagonal fixed at 1.
    pub scores: Vec<Vec<f64>>,
    /// Symmetric mean squared distances before min-max scaling.
    pub raw_mean_distances: Vec<Vec<f64>>,
}

impl RedundancyMatrix {
    pub fn index_of(&self, vp: &str) -> Option<usize> {
        self.vp_ids.iter().position(|v| v == vp)
    }

    pub fn score(&self, a: &str, b: &str) -> Option<f64> {
        Some(self.scores[self.index_of(a)?][self.index_of(b)?])
    }
}

/// Average the per-period distance matrices, min-max scale the off-diagonal
/// means and map to `1 - scaled` so the globally closest pair scores 1 and
/// the farthest 0.
pub fn redundancy_scores(
    vp_ids: &[String],
    distances: &[Vec<Vec<f64>>],
) -> Result<RedundancyMatrix, RedundancyError> {
    let p = distances.len();
    if p == 0 {
        return Err(RedundancyError::NoPeriods);
    }
    let n = vp_ids.len();
    for d in distances {
        if d.len() != n {
            return Err(RedundancyError::VpOrderMismatch);
        }
    }
    let mut mean = vec![vec![0.0; n]; n];
    for d in distances {
        for i in 0..n {
            for j in 0..n {
                mean[i][j] += d[i][j] / p as f64;
            }
        }
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                lo = lo.min(mean[i][j]);
                hi = hi.max(mean[i][j]);
            }
        }
    }
    if !(hi > lo) {
        return Err(RedundancyError::DegenerateScoreSpread);
    }
    let mut scores = vec![vec![1.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                scores[i][j] = 1.0 - (mean[i][j] - lo) / (hi - lo);
            }
        }
    }
    Ok(RedundancyMatrix {
        vp_ids: vp_ids.to_vec(),
        scores,
        raw_mean_distances: mean,
    })
}
