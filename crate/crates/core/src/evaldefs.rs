//! Formal update-redundancy definitions, use-case detectors, greedy and
//! naive baseline selectors and the data-reduction-factor metric.
//!
//! Three gradually stricter definitions relate an update of one VP to an
//! update of another: same prefix within 5 minutes (level 1), plus AS-link
//! additions included in the other side's additions (level 2), plus
//! community additions included as well (level 3). Levels 2 and 3 are
//! asymmetric.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::events::AsCategory;
use crate::graph::collapse_path;
use crate::ingest::{BgpUpdate, RibTable, UpdateKind};

/// Approximation of the BGP convergence time.
pub const REDUNDANCY_WINDOW_SECS: u64 = 300;

/// The three redundancy definitions, strictest last.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum DefinitionLevel {
    /// Same prefix within the time window.
    Prefix = 1,
    /// Plus AS-link additions included in the other update's additions.
    PrefixAndPath = 2,
    /// Plus community additions included as well.
    PrefixPathAndCommunity = 3,
}

/// The route installed immediately before an update was applied, used to
/// compute the additions the update introduces.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PriorState {
    pub as_path: Option<Vec<u32>>,
    pub communities: BTreeSet<String>,
}

fn path_links(path: &[u32]) -> BTreeSet<(u32, u32)> {
    collapse_path(path)
        .windows(2)
        .map(|p| (p[0].min(p[1]), p[0].max(p[1])))
        .collect()
}

/// An update paired with the additions it introduced over the prior state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotatedUpdate {
    pub update: BgpUpdate,
    pub link_additions: BTreeSet<(u32, u32)>,
    pub community_additions: BTreeSet<String>,
}

impl AnnotatedUpdate {
    pub fn new(update: BgpUpdate, prior: &PriorState) -> Self {
        let (link_additions, community_additions) = match update.kind {
            UpdateKind::Announce => {
                let old_links = prior
                    .as_path
                    .as_deref()
                    .map(path_links)
                    .unwrap_or_default();
                let links = path_links(&update.as_path)
                    .difference(&old_links)
                    .copied()
                    .collect();
                let comms = update
                    .communities
                    .difference(&prior.communities)
                    .cloned()
                    .collect();
                (links, comms)
            }
            // a withdrawal removes state; it adds no links or communities
            UpdateKind::Withdraw => (BTreeSet::new(), BTreeSet::new()),
        };
        AnnotatedUpdate {
            update,
            link_additions,
            community_additions,
        }
    }
}

/// Replay one VP's stream over its snapshot, recording each update's prior
/// state as it is applied.
pub fn annotate_stream(snapshot: &RibTable, updates: &[BgpUpdate]) -> Vec<AnnotatedUpdate> {
    let mut rib = snapshot.clone();
    let mut out = Vec::with_capacity(updates.len());
    for u in updates {
        if u.vp_id != rib.vp_id {
            continue;
        }
        let prior = match rib.routes.get(&u.prefix) {
            Some(e) => PriorState {
                as_path: Some(e.as_path.clone()),
                communities: e.communities.clone(),
            },
            None => PriorState::default(),
        };
        out.push(AnnotatedUpdate::new(u.clone(), &prior));
        rib.apply(u);
    }
    out
}

/// Is `u1` redundant with `u2` under the given definition? Levels 2 and 3
/// are directional: they ask whether `u1`'s additions are included in
/// `u2`'s.
pub fn is_redundant(level: DefinitionLevel, u1: &AnnotatedUpdate, u2: &AnnotatedUpdate) -> bool {
    if u1.update.timestamp.abs_diff(u2.update.timestamp) >= REDUNDANCY_WINDOW_SECS {
        return false;
    }
    if u1.update.prefix != u2.update.prefix {
        return false;
    }
    if level >= DefinitionLevel::PrefixAndPath
        && !u1.link_additions.is_subset(&u2.link_additions)
    {
        return false;
    }
    if level >= DefinitionLevel::PrefixPathAndCommunity
        && !u1.community_additions.is_subset(&u2.community_additions)
    {
        return false;
    }
    true
}

#[derive(Debug, Clone, PartialEq)]
pub enum EvalError {
    EmptyStream { vp_id: String },
    KTooLarge { k: usize, available: usize },
    /// The objective cannot be met by the given selector.
    UnreachableObjective { side: String, max_fraction: f64 },
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalError::EmptyStream { vp_id } => write!(f, "VP `{vp_id}` has an empty stream"),
            EvalError::KTooLarge { k, available } => {
                write!(f, "k = {k} exceeds the {available} available VPs")
            }
            EvalError::UnreachableObjective { side, max_fraction } => write!(
                f,
                "objective unreachable for `{side}`: at most {max_fraction:.3} of events covered"
            ),
        }
    }
}

impl core::error::Error for EvalError {}

/// Proportion of `u1`'s updates redundant with at least one update of `u2`.
pub fn vp_pair_redundancy(
    level: DefinitionLevel,
    u1: &[AnnotatedUpdate],
    u2: &[AnnotatedUpdate],
) -> Result<f64, EvalError> {
    if u1.is_empty() {
        return Err(EvalError::EmptyStream {
            vp_id: "first".to_string(),
        });
    }
    // bucket the other side by prefix to avoid the full cross product
    let mut by_prefix: BTreeMap<&str, Vec<&AnnotatedUpdate>> = BTreeMap::new();
    for u in u2 {
        by_prefix.entry(&u.update.prefix).or_default().push(u);
    }
    let matched = u1
        .iter()
        .filter(|u| {
            by_prefix
                .get(u.update.prefix.as_str())
                .is_some_and(|cands| cands.iter().any(|c| is_redundant(level, u, c)))
        })
        .count();
    Ok(matched as f64 / u1.len() as f64)
}

/// Proportion of updates in the compound stream of `vps` that are redundant
/// with at least one *other* update in the compound stream (including
/// same-VP matches).
fn compound_redundant_fraction(
    level: DefinitionLevel,
    streams: &BTreeMap<String, Vec<AnnotatedUpdate>>,
    vps: &[&String],
) -> f64 {
    let all: Vec<&AnnotatedUpdate> = vps
        .iter()
        .flat_map(|vp| streams[*vp].iter())
        .collect();
    if all.is_empty() {
        return 0.0;
    }
    let mut by_prefix: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, u) in all.iter().enumerate() {
        by_prefix.entry(&u.update.prefix).or_default().push(i);
    }
    let redundant = all
        .iter()
        .enumerate()
        .filter(|(i, u)| {
            by_prefix[u.update.prefix.as_str()]
                .iter()
                .any(|&j| j != *i && is_redundant(level, u, all[j]))
        })
        .count();
    redundant as f64 / all.len() as f64
}

/// Greedy selection minimizing the proportion of redundant updates in the
/// compound collected stream, under one of the formal definitions.
pub fn greedy_specific_def(
    level: DefinitionLevel,
    streams: &BTreeMap<String, Vec<AnnotatedUpdate>>,
    k: usize,
) -> Result<Vec<String>, EvalError> {
    if k > streams.len() {
        return Err(EvalError::KTooLarge {
            k,
            available: streams.len(),
        });
    }
    let mut selected: Vec<&String> = Vec::with_capacity(k);
    while selected.len() < k {
        let best = streams
            .keys()
            .filter(|vp| !selected.contains(vp))
            .map(|vp| {
                let mut trial = selected.clone();
                trial.push(vp);
                (compound_redundant_fraction(level, streams, &trial), vp)
            })
            .min_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(b.1)))
            .map(|(_, vp)| vp)
            .expect("k <= streams.len() guarantees a candidate");
        selected.push(best);
    }
    Ok(selected.into_iter().cloned().collect())
}

/// Use cases with ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum UseCase {
    TransientPaths,
    Moas,
    TopologyLinks,
    UnnecessaryUpdates,
}

impl UseCase {
    pub const ALL: [UseCase; 4] = [
        UseCase::TransientPaths,
        UseCase::Moas,
        UseCase::TopologyLinks,
        UseCase::UnnecessaryUpdates,
    ];

    pub fn name(self) -> &'static str {
        match self {
            UseCase::TransientPaths => "transient_paths",
            UseCase::Moas => "moas",
            UseCase::TopologyLinks => "topology_links",
            UseCase::UnnecessaryUpdates => "unnecessary_updates",
        }
    }
}

/// A coverage objective: detect `target_fraction` of a use case's ground
/// events.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveSpec {
    pub use_case: UseCase,
    pub target_fraction: f64,
}

/// What one VP observed, per use case.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct VpObservations {
    /// (prefix, collapsed path) episodes visible for < 5 minutes.
    pub transient: BTreeSet<(String, Vec<u32>)>,
    /// Origin ASes seen per prefix.
    pub origins: BTreeMap<String, BTreeSet<u32>>,
    /// Distinct undirected AS links over RIB and updates.
    pub links: BTreeSet<(u32, u32)>,
    /// (timestamp, prefix) of community-only re-announcements.
    pub unnecessary: BTreeSet<(u64, String)>,
    pub update_count: usize,
}

/// Ground truth over the full archive plus the per-VP views it was built
/// from.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GroundTruth {
    pub per_vp: BTreeMap<String, VpObservations>,
}

impl GroundTruth {
    /// Prefixes originated by at least two distinct ASes archive-wide.
    pub fn moas_prefixes(&self) -> BTreeSet<String> {
        let mut origins: BTreeMap<&String, BTreeSet<u32>> = BTreeMap::new();
        for obs in self.per_vp.values() {
            for (p, os) in &obs.origins {
                origins.entry(p).or_default().extend(os.iter().copied());
            }
        }
        origins
            .into_iter()
            .filter(|(_, os)| os.len() >= 2)
            .map(|(p, _)| p.clone())
            .collect()
    }

    pub fn total_events(&self, use_case: UseCase) -> usize {
        match use_case {
            UseCase::TransientPaths => self
                .per_vp
                .values()
                .flat_map(|o| o.transient.iter())
                .collect::<BTreeSet<_>>()
                .len(),
            UseCase::Moas => self.moas_prefixes().len(),
            UseCase::TopologyLinks => self
                .per_vp
                .values()
                .flat_map(|o| o.links.iter())
                .collect::<BTreeSet<_>>()
                .len(),
            UseCase::UnnecessaryUpdates => {
                self.per_vp.values().map(|o| o.unnecessary.len()).sum()
            }
        }
    }

    /// Events of a use case covered by a set of VPs.
    pub fn covered_events(&self, use_case: UseCase, selected: &[String]) -> usize {
        let obs: Vec<&VpObservations> = selected
            .iter()
            .filter_map(|vp| self.per_vp.get(vp))
            .collect();
        match use_case {
            UseCase::TransientPaths => obs
                .iter()
                .flat_map(|o| o.transient.iter())
                .collect::<BTreeSet<_>>()
                .len(),
            UseCase::Moas => {
                let mut origins: BTreeMap<&String, BTreeSet<u32>> = BTreeMap::new();
                for o in &obs {
                    for (p, os) in &o.origins {
                        origins.entry(p).or_default().extend(os.iter().copied());
                    }
                }
                let ground = self.moas_prefixes();
                origins
                    .into_iter()
                    .filter(|(p, os)| ground.contains(*p) && os.len() >= 2)
                    .count()
            }
            UseCase::TopologyLinks => obs
                .iter()
                .flat_map(|o| o.links.iter())
                .collect::<BTreeSet<_>>()
                .len(),
            UseCase::UnnecessaryUpdates => {
                // per-VP update instances: covered iff the VP is selected
                obs.iter().map(|o| o.unnecessary.len()).sum()
            }
        }
    }

    pub fn coverage(&self, use_case: UseCase, selected: &[String]) -> f64 {
        let total = self.total_events(use_case);
        if total == 0 {
            return 1.0;
        }
        self.covered_events(use_case, selected) as f64 / total as f64
    }

    pub fn updates_processed(&self, selected: &[String]) -> usize {
        selected
            .iter()
            .filter_map(|vp| self.per_vp.get(vp))
            .map(|o| o.update_count)
            .sum()
    }

    pub fn vp_ids(&self) -> Vec<String> {
        self.per_vp.keys().cloned().collect()
    }
}

/// Run all use-case detectors over per-VP snapshots and a merged,
/// time-sorted update stream.
pub fn detectors(
    snapshots: &BTreeMap<String, RibTable>,
    updates: &[BgpUpdate],
) -> GroundTruth {
    let mut ribs: BTreeMap<String, RibTable> = snapshots.clone();
    let mut gt = GroundTruth::default();

    for (vp, rib) in &ribs {
        let obs = gt.per_vp.entry(vp.clone()).or_default();
        for (prefix, entry) in &rib.routes {
            obs.links.extend(path_links(&entry.as_path));
            if let Some(&origin) = collapse_path(&entry.as_path).last() {
                obs.origins.entry(prefix.clone()).or_default().insert(origin);
            }
        }
    }

    for u in updates {
        let rib = ribs
            .entry(u.vp_id.clone())
            .or_insert_with(|| RibTable::new(u.vp_id.clone(), 0));
        let obs = gt.per_vp.entry(u.vp_id.clone()).or_default();
        obs.update_count += 1;
        let prior = rib.routes.get(&u.prefix).cloned();
        match u.kind {
            UpdateKind::Announce => {
                obs.links.extend(path_links(&u.as_path));
                if let Some(&origin) = collapse_path(&u.as_path).last() {
                    obs.origins
                        .entry(u.prefix.clone())
                        .or_default()
                        .insert(origin);
                }
                if let Some(prev) = &prior {
                    // replacement: was the previous route transient?
                    if u.as_path != prev.as_path
                        && u.timestamp.saturating_sub(prev.last_update_time)
                            < REDUNDANCY_WINDOW_SECS
                    {
                        obs.transient
                            .insert((u.prefix.clone(), collapse_path(&prev.as_path)));
                    }
                    if u.as_path == prev.as_path && u.communities != prev.communities {
                        obs.unnecessary.insert((u.timestamp, u.prefix.clone()));
                    }
                }
            }
            UpdateKind::Withdraw => {
                if let Some(prev) = &prior {
                    if u.timestamp.saturating_sub(prev.last_update_time)
                        < REDUNDANCY_WINDOW_SECS
                    {
                        obs.transient
                            .insert((u.prefix.clone(), collapse_path(&prev.as_path)));
                    }
                }
            }
        }
        rib.apply(u);
    }
    gt
}

/// Greedy per-use-case selection: each step picks the VP maximizing marginal
/// covered events per marginal update processed. Returns the full ordering.
pub fn greedy_specific_usecase(use_case: UseCase, gt: &GroundTruth) -> Vec<String> {
    let mut remaining: Vec<String> = gt.vp_ids();
    let mut order: Vec<String> = Vec::with_capacity(remaining.len());
    while !remaining.is_empty() {
        let covered_now = gt.covered_events(use_case, &order);
        let (best_idx, _) = remaining
            .iter()
            .enumerate()
            .map(|(i, vp)| {
                let mut trial = order.clone();
                trial.push(vp.clone());
                let gain = (gt.covered_events(use_case, &trial) - covered_now) as f64;
                let volume = gt.per_vp[vp].update_count as f64;
                let ratio = if volume > 0.0 {
                    gain / volume
                } else if gain > 0.0 {
                    f64::INFINITY
                } else {
                    0.0
                };
                (i, ratio)
            })
            .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(b.0.cmp(&a.0)))
            .expect("remaining is non-empty");
        order.push(remaining.remove(best_idx));
    }
    order
}

/// Smallest prefix of `ordering` meeting the objective, or the maximum
/// achievable fraction if it never does.
pub fn smallest_meeting_prefix(
    objective: &ObjectiveSpec,
    ordering: &[String],
    gt: &GroundTruth,
    side: &str,
) -> Result<usize, EvalError> {
    let mut max_fraction: f64 = 0.0;
    for len in 1..=ordering.len() {
        let frac = gt.coverage(objective.use_case, &ordering[..len]);
        max_fraction = max_fraction.max(frac);
        if frac >= objective.target_fraction {
            return Ok(len);
        }
    }
    Err(EvalError::UnreachableObjective {
        side: side.to_string(),
        max_fraction,
    })
}

/// Ratio of updates a baseline ordering must process to meet the objective
/// versus the candidate ordering.
pub fn reduction_factor(
    objective: &ObjectiveSpec,
    baseline_order: &[String],
    candidate_order: &[String],
    gt: &GroundTruth,
) -> Result<f64, EvalError> {
    let b = smallest_meeting_prefix(objective, baseline_order, gt, "baseline")?;
    let c = smallest_meeting_prefix(objective, candidate_order, gt, "candidate")?;
    let b_updates = gt.updates_processed(&baseline_order[..b]);
    let c_updates = gt.updates_processed(&candidate_order[..c]);
    Ok(b_updates as f64 / c_updates as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineStrategy {
    Random,
    AsDistance,
    Unbiased,
}

/// Side inputs for the naive baselines: the AS each VP sits in, the union
/// AS adjacency for hop distances and the category of each VP's AS.
#[derive(Debug, Clone, Default)]
pub struct BaselineContext {
    pub vp_asns: BTreeMap<String, u32>,
    pub union_adjacency: BTreeMap<u32, BTreeSet<u32>>,
    pub categories: BTreeMap<String, AsCategory>,
}

impl BaselineContext {
    fn hop_distances(&self, src: u32) -> BTreeMap<u32, u32> {
        let mut dist = BTreeMap::new();
        dist.insert(src, 0);
        let mut frontier = alloc::vec![src];
        while !frontier.is_empty() {
            let mut next = Vec::new();
            for node in frontier {
                let d = dist[&node];
                for &nbr in self.union_adjacency.get(&node).into_iter().flatten() {
                    if !dist.contains_key(&nbr) {
                        dist.insert(nbr, d + 1);
                        next.push(nbr);
                    }
                }
            }
            frontier = next;
        }
        dist
    }
}

/// Naive baseline selectors.
pub fn naive_baselines(
    strategy: BaselineStrategy,
    vps: &[String],
    k: usize,
    seed: u64,
    ctx: &BaselineContext,
) -> Result<Vec<String>, EvalError> {
    if k > vps.len() {
        return Err(EvalError::KTooLarge {
            k,
            available: vps.len(),
        });
    }
    let mut sorted: Vec<String> = vps.to_vec();
    sorted.sort();
    match strategy {
        BaselineStrategy::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut pool = sorted;
            pool.shuffle(&mut rng);
            pool.truncate(k);
            Ok(pool)
        }
        BaselineStrategy::AsDistance => {
            // distances between VP ASes over the union graph; unreachable
            // pairs count as farther than any reachable pair
            let far = self_or_unreachable(ctx);
            let dist = |a: &String, b: &String| -> u32 {
                let (sa, sb) = (ctx.vp_asns[a], ctx.vp_asns[b]);
                ctx.hop_distances(sa).get(&sb).copied().unwrap_or(far)
            };
            // seed with one end of the farthest pair, then farthest-point
            let first = sorted
                .iter()
                .map(|v| {
                    let m = sorted.iter().map(|o| dist(v, o)).max().unwrap_or(0);
                    (m, v.clone())
                })
                .max_by(|a, b| a.0.cmp(&b.0).then(b.1.cmp(&a.1)))
                .map(|(_, v)| v)
                .expect("k <= vps.len() and k > 0 imply a VP exists");
            let mut selected = alloc::vec![first];
            while selected.len() < k {
                let next = sorted
                    .iter()
                    .filter(|v| !selected.contains(v))
                    .map(|v| {
                        let d = selected.iter().map(|s| dist(v, s)).min().unwrap();
                        (d, v.clone())
                    })
                    .max_by(|a, b| a.0.cmp(&b.0).then(b.1.cmp(&a.1)))
                    .map(|(_, v)| v)
                    .unwrap();
                selected.push(next);
            }
            Ok(selected)
        }
        BaselineStrategy::Unbiased => {
            let mut remaining = sorted;
            while remaining.len() > k {
                let counts = |set: &[String], skip: &str| -> BTreeMap<AsCategory, usize> {
                    let mut c = BTreeMap::new();
                    for vp in set {
                        if vp != skip {
                            *c.entry(ctx.categories[vp]).or_insert(0) += 1;
                        }
                    }
                    c
                };
                let max_count = {
                    let all = counts(&remaining, "");
                    all.values().copied().max().unwrap_or(0)
                };
                let removable: Vec<&String> = remaining
                    .iter()
                    .filter(|vp| {
                        let all = counts(&remaining, "");
                        // keep the last member of a category while another
                        // category still has two or more
                        all[&ctx.categories[*vp]] > 1 || max_count <= 1
                    })
                    .collect();
                let victim = removable
                    .iter()
                    .map(|vp| {
                        let after = counts(&remaining, vp);
                        let n = after.len().max(1) as f64;
                        let mean = after.values().sum::<usize>() as f64 / n;
                        let var = after
                            .values()
                            .map(|&c| {
                                let d = c as f64 - mean;
                                d * d
                            })
                            .sum::<f64>()
                            / n;
                        (var, (*vp).clone())
                    })
                    .min_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)))
                    .map(|(_, vp)| vp)
                    .expect("remaining.len() > k >= 0 leaves a removable VP");
                remaining.retain(|v| v != &victim);
            }
            Ok(remaining)
        }
    }
}

fn self_or_unreachable(ctx: &BaselineContext) -> u32 {
    ctx.union_adjacency.len() as u32 + 1
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn announce(t: u64, vp: &str, prefix: &str, path: &[u32], comms: &[&str]) -> BgpUpdate {
        BgpUpdate {
            timestamp: t,
            vp_id: vp.to_string(),
            kind: UpdateKind::Announce,
            prefix: prefix.to_string(),
            as_path: path.to_vec(),
            communities: comms.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn annotated(t: u64, vp: &str, prefix: &str, path: &[u32]) -> AnnotatedUpdate {
        AnnotatedUpdate::new(announce(t, vp, prefix, path, &[]), &PriorState::default())
    }

    #[test]
    fn def1_window() {
        let u1 = annotated(0, "vp1", "p", &[1, 2]);
        let inside = annotated(240, "vp2", "p", &[9, 8]);
        let outside = annotated(360, "vp2", "p", &[1, 2]);
        assert!(is_redundant(DefinitionLevel::Prefix, &u1, &inside));
        assert!(!is_redundant(DefinitionLevel::Prefix, &u1, &outside));
        assert!(!is_redundant(
            DefinitionLevel::PrefixPathAndCommunity,
            &u1,
            &outside
        ));
    }

    #[test]
    fn def2_asymmetry() {
        // VP1 adds link (3,4); VP2 adds links (3,4) and (5,6)
        let base = PriorState {
            as_path: Some(vec![4, 6]),
            communities: BTreeSet::new(),
        };
        let u1 = AnnotatedUpdate::new(announce(10, "vp1", "p", &[3, 4, 6], &[]), &base);
        let u2 = AnnotatedUpdate::new(announce(20, "vp2", "p", &[3, 4, 5, 6], &[]), &base);
        assert_eq!(u1.link_additions, [(3, 4)].into_iter().collect());
        assert!(u2.link_additions.contains(&(5, 6)));
        assert!(is_redundant(DefinitionLevel::PrefixAndPath, &u1, &u2));
        assert!(!is_redundant(DefinitionLevel::PrefixAndPath, &u2, &u1));
    }

    #[test]
    fn def3_communities() {
        let u1 = AnnotatedUpdate::new(
            announce(10, "vp1", "p", &[1, 2], &["64496:1"]),
            &PriorState::default(),
        );
        let u2 = AnnotatedUpdate::new(
            announce(20, "vp2", "p", &[1, 2], &["64496:1", "64496:2"]),
            &PriorState::default(),
        );
        assert!(is_redundant(DefinitionLevel::PrefixPathAndCommunity, &u1, &u2));
        assert!(!is_redundant(DefinitionLevel::PrefixPathAndCommunity, &u2, &u1));
    }

    #[test]
    fn pair_redundancy_counts() {
        let a = vec![
            annotated(0, "a", "p1", &[1, 2]),
            annotated(10, "a", "p2", &[1, 2]),
            annotated(20, "a", "p3", &[1, 2]),
            annotated(30, "a", "p4", &[1, 2]),
        ];
        let b = vec![
            annotated(5, "b", "p1", &[1, 2]),
            annotated(5, "b", "p2", &[1, 2]),
            annotated(5, "b", "p3", &[1, 2]),
        ];
        let frac = vp_pair_redundancy(DefinitionLevel::Prefix, &a, &b).unwrap();
        assert!((frac - 0.75).abs() < 1e-12);
        let same = vp_pair_redundancy(DefinitionLevel::PrefixPathAndCommunity, &a, &a).unwrap();
        assert_eq!(same, 1.0);
        let disjoint = vec![annotated(0, "b", "q1", &[1, 2])];
        assert_eq!(
            vp_pair_redundancy(DefinitionLevel::Prefix, &a, &disjoint).unwrap(),
            0.0
        );
    }

    #[test]
    fn empty_first_stream_is_error() {
        let b = vec![annotated(0, "b", "p", &[1, 2])];
        assert!(vp_pair_redundancy(DefinitionLevel::Prefix, &[], &b).is_err());
    }

    #[test]
    fn greedy_def_base_case() {
        // "b" has internally redundant updates, "a" does not
        let mut streams = BTreeMap::new();
        streams.insert(
            "a".to_string(),
            vec![annotated(0, "a", "p1", &[1, 2]), annotated(1000, "a", "p1", &[1, 2])],
        );
        streams.insert(
            "b".to_string(),
            vec![annotated(0, "b", "p2", &[1, 2]), annotated(10, "b", "p2", &[1, 2])],
        );
        let order = greedy_specific_def(DefinitionLevel::Prefix, &streams, 1).unwrap();
        assert_eq!(order, vec!["a".to_string()]);
    }

    #[test]
    fn greedy_def_defers_clones() {
        let clone_stream = |vp: &str| {
            vec![
                annotated(0, vp, "p1", &[1, 2]),
                annotated(400, vp, "p2", &[3, 4]),
            ]
        };
        let mut streams = BTreeMap::new();
        streams.insert("a".to_string(), clone_stream("a"));
        streams.insert("b".to_string(), clone_stream("b"));
        streams.insert(
            "c".to_string(),
            vec![annotated(0, "c", "q1", &[5, 6]), annotated(400, "c", "q2", &[7, 8])],
        );
        let order = greedy_specific_def(DefinitionLevel::Prefix, &streams, 3).unwrap();
        // the second clone comes last: adding it makes everything redundant
        assert_eq!(order.last().map(String::as_str), Some("b"));
    }

    #[test]
    fn greedy_def_k_too_large() {
        assert!(greedy_specific_def(DefinitionLevel::Prefix, &BTreeMap::new(), 1).is_err());
    }

    fn sorted_updates(mut v: Vec<BgpUpdate>) -> Vec<BgpUpdate> {
        v.sort_by_key(|u| u.timestamp);
        v
    }

    #[test]
    fn detect_transient() {
        let updates = sorted_updates(vec![
            announce(0, "vp1", "p", &[1, 2], &[]),
            announce(200, "vp1", "p", &[3, 2], &[]),
        ]);
        let gt = detectors(&BTreeMap::new(), &updates);
        assert_eq!(gt.per_vp["vp1"].transient.len(), 1);
        assert!(gt.per_vp["vp1"]
            .transient
            .contains(&("p".to_string(), vec![1, 2])));
    }

    #[test]
    fn long_lived_route_not_transient() {
        let updates = sorted_updates(vec![
            announce(0, "vp1", "p", &[1, 2], &[]),
            announce(400, "vp1", "p", &[3, 2], &[]),
        ]);
        let gt = detectors(&BTreeMap::new(), &updates);
        assert!(gt.per_vp["vp1"].transient.is_empty());
    }

    #[test]
    fn detect_moas() {
        let updates = sorted_updates(vec![
            announce(0, "a", "p", &[2, 1], &[]),
            announce(0, "b", "p", &[2, 9], &[]),
        ]);
        let gt = detectors(&BTreeMap::new(), &updates);
        assert_eq!(gt.moas_prefixes(), ["p".to_string()].into_iter().collect());
        // one VP alone does not cover the MOAS event
        assert_eq!(gt.covered_events(UseCase::Moas, &["a".to_string()]), 0);
        assert_eq!(
            gt.covered_events(UseCase::Moas, &["a".to_string(), "b".to_string()]),
            1
        );
    }

    #[test]
    fn detect_unnecessary() {
        let updates = sorted_updates(vec![
            announce(0, "vp1", "p", &[1, 2], &["x:1"]),
            announce(1000, "vp1", "p", &[1, 2], &["y:2"]),
        ]);
        let gt = detectors(&BTreeMap::new(), &updates);
        assert_eq!(gt.per_vp["vp1"].unnecessary.len(), 1);
    }

    #[test]
    fn usecase_greedy_prefers_dominant_vp() {
        // "big" sees every link at low volume; others see one each
        let updates = sorted_updates(vec![
            announce(0, "big", "p1", &[1, 2], &[]),
            announce(0, "big", "p2", &[3, 4], &[]),
            announce(0, "s1", "p1", &[1, 2], &[]),
            announce(1, "s1", "p1", &[1, 2], &[]),
            announce(0, "s2", "p2", &[3, 4], &[]),
            announce(1, "s2", "p2", &[3, 4], &[]),
        ]);
        let gt = detectors(&BTreeMap::new(), &updates);
        let order = greedy_specific_usecase(UseCase::TopologyLinks, &gt);
        assert_eq!(order[0], "big");
    }

    #[test]
    fn reduction_factor_self_is_one() {
        let updates = sorted_updates(vec![
            announce(0, "a", "p1", &[1, 2], &[]),
            announce(0, "b", "p2", &[3, 4], &[]),
        ]);
        let gt = detectors(&BTreeMap::new(), &updates);
        let order = vec!["a".to_string(), "b".to_string()];
        let obj = ObjectiveSpec {
            use_case: UseCase::TopologyLinks,
            target_fraction: 0.9,
        };
        assert_eq!(reduction_factor(&obj, &order, &order, &gt).unwrap(), 1.0);
    }

    #[test]
    fn unreachable_objective_reports_side() {
        let updates = sorted_updates(vec![
            announce(0, "a", "p1", &[1, 2], &[]),
            announce(0, "b", "p2", &[3, 4], &[]),
        ]);
        let gt = detectors(&BTreeMap::new(), &updates);
        let obj = ObjectiveSpec {
            use_case: UseCase::TopologyLinks,
            target_fraction: 0.9,
        };
        // only "a" available: covers half the links
        let short = vec!["a".to_string()];
        match smallest_meeting_prefix(&obj, &short, &gt, "baseline") {
            Err(EvalError::UnreachableObjective { side, max_fraction }) => {
                assert_eq!(side, "baseline");
                assert!((max_fraction - 0.5).abs() < 1e-12);
            }
            other => panic!("expected unreachable, got {other:?}"),
        }
    }

    fn path_ctx() -> (Vec<String>, BaselineContext) {
        // VPs in ASes 1-2-3-4-5 along a path
        let vps: Vec<String> = (1..=5).map(|i| alloc::format!("vp{i}")).collect();
        let mut ctx = BaselineContext::default();
        for i in 1..=5u32 {
            ctx.vp_asns.insert(alloc::format!("vp{i}"), i);
            ctx.categories
                .insert(alloc::format!("vp{i}"), AsCategory::Stub);
        }
        for pair in [(1u32, 2u32), (2, 3), (3, 4), (4, 5)] {
            ctx.union_adjacency.entry(pair.0).or_default().insert(pair.1);
            ctx.union_adjacency.entry(pair.1).or_default().insert(pair.0);
        }
        (vps, ctx)
    }

    #[test]
    fn random_baseline_reproducible() {
        let (vps, ctx) = path_ctx();
        let a = naive_baselines(BaselineStrategy::Random, &vps, 3, 9, &ctx).unwrap();
        let b = naive_baselines(BaselineStrategy::Random, &vps, 3, 9, &ctx).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 3);
    }

    #[test]
    fn as_distance_picks_path_endpoints_first() {
        let (vps, ctx) = path_ctx();
        let order = naive_baselines(BaselineStrategy::AsDistance, &vps, 3, 0, &ctx).unwrap();
        let first_two: BTreeSet<&str> = order[..2].iter().map(String::as_str).collect();
        assert_eq!(first_two, ["vp1", "vp5"].into_iter().collect());
    }

    #[test]
    fn unbiased_keeps_category_representatives() {
        let mut ctx = BaselineContext::default();
        let vps: Vec<String> = (0..5).map(|i| alloc::format!("vp{i}")).collect();
        // four stubs and one tier1: the tier1 must survive down to k = 2
        for (i, vp) in vps.iter().enumerate() {
            ctx.vp_asns.insert(vp.clone(), i as u32);
            ctx.categories.insert(
                vp.clone(),
                if i == 4 { AsCategory::Tier1 } else { AsCategory::Stub },
            );
        }
        let kept = naive_baselines(BaselineStrategy::Unbiased, &vps, 2, 0, &ctx).unwrap();
        assert!(kept.contains(&"vp4".to_string()));
    }

    #[test]
    fn k_too_large_for_baselines() {
        let (vps, ctx) = path_ctx();
        assert!(naive_baselines(BaselineStrategy::Random, &vps, 9, 0, &ctx).is_err());
    }
}
