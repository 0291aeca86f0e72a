//! Greedy generation of the output VP set under a data-volume budget.
//!
//! The seed is the most redundant VP (lowest sum of raw mean distances to all
//! others). Each following pick restricts to the `ceil(alpha * unselected)`
//! VPs with the lowest maximum redundancy towards the selected set and takes
//! the one with the smallest estimated volume. Ties break by ascending
//! `vp_id` everywhere.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::ingest::BgpUpdate;
use crate::redundancy::RedundancyMatrix;

/// Estimated updates per sampled hour for each VP.
#[derive(Debug, Clone, PartialEq)]
pub struct VolumeProfile {
    pub estimates: BTreeMap<String, f64>,
    pub sample_count: usize,
}

impl VolumeProfile {
    pub fn volume(&self, vp: &str) -> f64 {
        self.estimates.get(vp).copied().unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.estimates.values().sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SelectionError {
    /// No one-hour sample windows supplied.
    NoSampleWindows,
    /// The seed VP alone exceeds the budget.
    EmptySelection { seed: String, volume: f64, budget: f64 },
    /// Redundancy matrix and volume profile disagree on the VP set.
    VpSetMismatch,
    /// No VPs at all.
    NoVps,
    /// No redundancy matrix stored under the requested tag.
    UnknownTag { tag: String, available: Vec<String> },
}

impl fmt::Display for SelectionError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SelectionError::NoSampleWindows => write!(f, "no sample windows supplied"),
            SelectionError::EmptySelection { seed, volume, budget } => write!(
                f,
                "budget {budget} below the seed VP `{seed}` volume {volume}; selection empty"
            ),
            SelectionError::VpSetMismatch => {
                write!(f, "redundancy matrix and volume profile cover different VP sets")
            }
            SelectionError::NoVps => write!(f, "no VPs to select from"),
            SelectionError::UnknownTag { tag, available } => {
                write!(f, "unknown tag `{tag}`; available: {}", available.join(", "))
            }
        }
    }
}

impl core::error::Error for SelectionError {}

/// One pick of the greedy selection.
#[derive(Debug, Clone, PartialEq)]
pub struct Pick {
    pub vp_id: String,
    /// Max redundancy towards the already-selected set (0 for the seed).
    pub max_redundancy: f64,
    pub volume: f64,
    pub cumulative_volume: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult {
    pub picks: Vec<Pick>,
    pub alpha: f64,
    pub budget: f64,
}

impl SelectionResult {
    pub fn vp_ids(&self) -> Vec<String> {
        self.picks.iter().map(|p| p.vp_id.clone()).collect()
    }

    pub fn final_volume(&self) -> f64 {
        self.picks.last().map_or(0.0, |p| p.cumulative_volume)
    }
}

/// Mean update count of `vp_id` over the given one-hour sample windows
/// (window start timestamps; a window spans `[start, start + 3600)`).
pub fn estimate_volume(
    updates: &[BgpUpdate],
    vp_id: &str,
    windows: &[u64],
) -> Result<f64, SelectionError> {
    if windows.is_empty() {
        return Err(SelectionError::NoSampleWindows);
    }
    let total: usize = windows
        .iter()
        .map(|&start| {
            updates
                .iter()
                .filter(|u| {
                    u.vp_id == vp_id && u.timestamp >= start && u.timestamp < start + 3600
                })
                .count()
        })
        .sum();
    Ok(total as f64 / windows.len() as f64)
}

/// Greedy budgeted selection. Stops before the first pick that would exceed
/// the budget.
pub fn greedy_select(
    redundancy: &RedundancyMatrix,
    volumes: &VolumeProfile,
    alpha: f64,
    budget: f64,
) -> Result<SelectionResult, SelectionError> {
    assert!(alpha > 0.0 && alpha <= 1.0, "alpha must be in (0, 1]");
    assert!(budget > 0.0, "budget must be positive");
    let n = redundancy.vp_ids.len();
    if n == 0 {
        return Err(SelectionError::NoVps);
    }
    for vp in &redundancy.vp_ids {
        if !volumes.estimates.contains_key(vp) {
            return Err(SelectionError::VpSetMismatch);
        }
    }
    if volumes.estimates.len() != n {
        return Err(SelectionError::VpSetMismatch);
    }

    // seed: lowest sum of raw mean distances; ties by vp_id (already in
    // canonical ascending order, so the first minimum wins)
    let seed = (0..n)
        .min_by(|&a, &b| {
            let da: f64 = redundancy.raw_mean_distances[a].iter().sum();
            let db: f64 = redundancy.raw_mean_distances[b].iter().sum();
            da.partial_cmp(&db).unwrap()
        })
        .unwrap();

    let seed_volume = volumes.volume(&redundancy.vp_ids[seed]);
    if seed_volume > budget {
        return Err(SelectionError::EmptySelection {
            seed: redundancy.vp_ids[seed].clone(),
            volume: seed_volume,
            budget,
        });
    }

    let mut selected = Vec::with_capacity(n);
    let mut picks = Vec::with_capacity(n);
    let mut cumulative = seed_volume;
    selected.push(seed);
    picks.push(Pick {
        vp_id: redundancy.vp_ids[seed].clone(),
        max_redundancy: 0.0,
        volume: seed_volume,
        cumulative_volume: cumulative,
    });

    loop {
        let unselected: Vec<usize> = (0..n).filter(|i| !selected.contains(i)).collect();
        if unselected.is_empty() {
            break;
        }
        // P(O, v) = max redundancy towards the selected set
        let mut scored: Vec<(f64, usize)> = unselected
            .iter()
            .map(|&v| {
                let p = selected
                    .iter()
                    .map(|&s| redundancy.scores[v][s])
                    .fold(f64::NEG_INFINITY, f64::max);
                (p, v)
            })
            .collect();
        scored.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        let k = ceil_fraction(alpha, unselected.len());
        let candidates = &scored[..k];
        let &(max_red, pick) = candidates
            .iter()
            .min_by(|a, b| {
                let va = volumes.volume(&redundancy.vp_ids[a.1]);
                let vb = volumes.volume(&redundancy.vp_ids[b.1]);
                va.partial_cmp(&vb).unwrap().then(a.1.cmp(&b.1))
            })
            .unwrap();
        let vol = volumes.volume(&redundancy.vp_ids[pick]);
        if cumulative + vol > budget {
            break;
        }
        cumulative += vol;
        selected.push(pick);
        picks.push(Pick {
            vp_id: redundancy.vp_ids[pick].clone(),
            max_redundancy: max_red,
            volume: vol,
            cumulative_volume: cumulative,
        });
    }

    Ok(SelectionResult { picks, alpha, budget })
}

fn ceil_fraction(alpha: f64, count: usize) -> usize {
    let k = libm::ceil(alpha * count as f64) as usize;
    k.clamp(1, count)
}

/// Precomputed redundancy matrices and volume profiles keyed by tag
/// (typically a year).
#[derive(Debug, Clone, Default)]
pub struct SelectionStore {
    entries: BTreeMap<String, (RedundancyMatrix, VolumeProfile)>,
}

impl SelectionStore {
    pub fn insert(
        &mut self,
        tag: impl Into<String>,
        redundancy: RedundancyMatrix,
        volumes: VolumeProfile,
    ) {
        self.entries.insert(tag.into(), (redundancy, volumes));
    }

    pub fn tags(&self) -> Vec<String> {
        self.entries.keys().cloned().collect()
    }

    /// Run the selection for a stored tag.
    pub fn emit_selection(
        &self,
        tag: &str,
        alpha: f64,
        budget: f64,
    ) -> Result<(SelectionResult, &RedundancyMatrix), SelectionError> {
        let (r, v) = self
            .entries
            .get(tag)
            .ok_or_else(|| SelectionError::UnknownTag {
                tag: tag.to_string(),
                available: self.tags(),
            })?;
        greedy_select(r, v, alpha, budget).map(|sel| (sel, r))
    }
}
