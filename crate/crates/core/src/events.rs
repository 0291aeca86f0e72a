//! New-AS-link event detection, AS categorization and balanced
//! period-stratified sampling.
//!
//! A candidate event is the appearance of an AS link on the path towards a
//! prefix, adopted by at least two but fewer than half of the VPs within a
//! 10-minute window. The sampler draws nonoverlapping 10-minute periods and
//! fills, per period, one event for each of the 15 unordered AS-category
//! pairs.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::graph::{apply_route_change, build_graph, collapse_path};
use crate::ingest::{BgpUpdate, RibTable, UpdateKind};

pub const EVENT_WINDOW_SECS: u64 = 600;

/// AS categories; an AS matching several takes the highest ID.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum AsCategory {
    Stub = 1,
    Transit1 = 2,
    Transit2 = 3,
    HyperGiant = 4,
    Tier1 = 5,
}

impl AsCategory {
    pub const ALL: [AsCategory; 5] = [
        AsCategory::Stub,
        AsCategory::Transit1,
        AsCategory::Transit2,
        AsCategory::HyperGiant,
        AsCategory::Tier1,
    ];

    pub fn id(self) -> u8 {
        self as u8
    }

    pub fn from_id(id: u8) -> Option<AsCategory> {
        AsCategory::ALL.into_iter().find(|c| c.id() == id)
    }
}

/// Unordered pair of categories, stored with the lower ID first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct CategoryPair(pub AsCategory, pub AsCategory);

impl CategoryPair {
    pub fn new(a: AsCategory, b: AsCategory) -> Self {
        if a <= b {
            CategoryPair(a, b)
        } else {
            CategoryPair(b, a)
        }
    }

    /// The 15 unordered pairs over 5 categories (10 mixed + 5 same).
    pub fn all() -> Vec<CategoryPair> {
        let mut out = Vec::new();
        for (i, &a) in AsCategory::ALL.iter().enumerate() {
            for &b in &AsCategory::ALL[i..] {
                out.push(CategoryPair(a, b));
            }
        }
        out
    }
}

impl fmt::Display for CategoryPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.0.id(), self.1.id())
    }
}

/// AS classification inputs: customer sets, customer cone sizes and the
/// externally supplied Tier1 / hypergiant memberships.
#[derive(Debug, Clone, Default)]
pub struct AsClassifier {
    pub customers: BTreeMap<u32, BTreeSet<u32>>,
    pub customer_cones: BTreeMap<u32, u64>,
    pub tier1: BTreeSet<u32>,
    pub hypergiants: BTreeSet<u32>,
}

impl AsClassifier {
    /// Mean cone size over transit ASes (those with at least one customer).
    pub fn transit_average_cone(&self) -> f64 {
        let transit: Vec<u64> = self
            .customers
            .iter()
            .filter(|(_, c)| !c.is_empty())
            .map(|(asn, _)| self.customer_cones.get(asn).copied().unwrap_or(0))
            .collect();
        if transit.is_empty() {
            return 0.0;
        }
        transit.iter().sum::<u64>() as f64 / transit.len() as f64
    }

    /// Classify one AS; unknown ASes fall back to Stub.
    pub fn classify(&self, asn: u32) -> AsCategory {
        let has_customers = self.customers.get(&asn).is_some_and(|c| !c.is_empty());
        let mut category = if !has_customers {
            AsCategory::Stub
        } else {
            let cone = self.customer_cones.get(&asn).copied().unwrap_or(0) as f64;
            if cone < self.transit_average_cone() {
                AsCategory::Transit1
            } else {
                AsCategory::Transit2
            }
        };
        if self.hypergiants.contains(&asn) {
            category = category.max(AsCategory::HyperGiant);
        }
        if self.tier1.contains(&asn) {
            category = category.max(AsCategory::Tier1);
        }
        category
    }

    pub fn classify_pair(&self, link: (u32, u32)) -> CategoryPair {
        CategoryPair::new(self.classify(link.0), self.classify(link.1))
    }
}

/// A new-AS-link event adopted by a bounded set of VPs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateEvent {
    /// Unordered; smaller ASN first.
    pub link: (u32, u32),
    pub prefix: String,
    pub first_seen: u64,
    pub observers: BTreeSet<String>,
}

/// Scan a merged, time-sorted update stream for candidate events. A VP
/// "begins to use" a link at `t` when its new best route for a prefix
/// contains the link and the link was absent from that VP's graph just
/// before `t`. Link absence is judged against the initial RIB snapshots
/// (empty snapshots mean an empty history).
pub fn detect_candidates(
    updates: &[BgpUpdate],
    snapshots: &BTreeMap<String, RibTable>,
    window: u64,
    vp_count: usize,
) -> Vec<CandidateEvent> {
    let mut ribs: BTreeMap<String, RibTable> = snapshots.clone();
    let mut graphs: BTreeMap<String, crate::graph::VpGraph> = snapshots
        .iter()
        .map(|(vp, rib)| (vp.clone(), build_graph(rib)))
        .collect();

    // (link, prefix) -> time-ordered adoptions (t, vp)
    let mut adoptions: BTreeMap<((u32, u32), String), Vec<(u64, String)>> = BTreeMap::new();

    for u in updates {
        let rib = ribs
            .entry(u.vp_id.clone())
            .or_insert_with(|| RibTable::new(u.vp_id.clone(), 0));
        let graph = graphs
            .entry(u.vp_id.clone())
            .or_insert_with(|| crate::graph::VpGraph::new(u.vp_id.clone(), 0));

        if u.kind == UpdateKind::Announce {
            let collapsed = collapse_path(&u.as_path);
            for pair in collapsed.windows(2) {
                let (a, b) = (pair[0].min(pair[1]), pair[0].max(pair[1]));
                if !graph.contains_edge(a, b) {
                    adoptions
                        .entry(((a, b), u.prefix.clone()))
                        .or_default()
                        .push((u.timestamp, u.vp_id.clone()));
                }
            }
        }

        let old = rib.apply(u);
        apply_route_change(
            graph,
            old.as_ref().map(|e| e.as_path.as_slice()),
            (u.kind == UpdateKind::Announce).then_some(u.as_path.as_slice()),
        )
        .expect("RIB and graph kept in lockstep");
    }

    // Episodes are greedy nonoverlapping windows from the earliest
    // unconsumed adoption. Each episode is judged once: a global episode
    // (half the VPs or more) is consumed without sliding into its tail,
    // which would otherwise re-qualify as a smaller local event.
    let mut candidates = Vec::new();
    for ((link, prefix), mut times) in adoptions {
        times.sort();
        let mut i = 0;
        while i < times.len() {
            let start = times[i].0;
            let mut observers = BTreeSet::new();
            while i < times.len() && times[i].0 < start.saturating_add(window) {
                observers.insert(times[i].1.clone());
                i += 1;
            }
            let n = observers.len();
            if n >= 2 && 2 * n < vp_count {
                candidates.push(CandidateEvent {
                    link,
                    prefix: prefix.clone(),
                    first_seen: start,
                    observers,
                });
            }
        }
    }
    candidates
}

/// Balanced, period-stratified event sample.
#[derive(Debug, Clone, PartialEq)]
pub struct EventSet {
    /// Start timestamps of the nonoverlapping 10-minute periods, one per
    /// period index.
    pub periods: Vec<u64>,
    pub events: BTreeMap<(usize, CategoryPair), CandidateEvent>,
    pub warnings: Vec<String>,
}

impl EventSet {
    pub fn period_count(&self) -> usize {
        self.periods.len()
    }

    pub fn is_fully_filled(&self) -> bool {
        self.events.len() == self.periods.len() * CategoryPair::all().len()
    }

    /// Slot index of a category pair within a period (0..15), by pair order.
    pub fn slot_of(pair: CategoryPair) -> usize {
        CategoryPair::all().iter().position(|&p| p == pair).unwrap()
    }

    /// Line-based export for pipeline checkpointing.
    pub fn to_lines(&self) -> Vec<String> {
        let mut lines: Vec<String> = self
            .periods
            .iter()
            .enumerate()
            .map(|(i, start)| alloc::format!("#PERIOD {i} {start}"))
            .collect();
        for ((period, pair), e) in &self.events {
            lines.push(alloc::format!(
                "{period}|{pair}|{}|{}|{}|{}|{}",
                e.link.0,
                e.link.1,
                e.prefix,
                e.first_seen,
                e.observers.len()
            ));
        }
        lines
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SampleError {
    /// Timeframe shorter than a single period.
    TimeframeTooShort { start: u64, end: u64 },
    /// Could not place the requested number of nonoverlapping periods.
    PeriodsDontFit { placed: usize, requested: usize },
}

impl fmt::Display for SampleError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SampleError::TimeframeTooShort { start, end } => {
                write!(f, "timeframe [{start}, {end}) shorter than one period")
            }
            SampleError::PeriodsDontFit { placed, requested } => {
                write!(f, "only {placed} of {requested} nonoverlapping periods fit")
            }
        }
    }
}

impl core::error::Error for SampleError {}

/// Draw `p_count` nonoverlapping 10-minute periods uniformly at random
/// within `[timeframe.0, timeframe.1)` and fill one candidate per category
/// pair per period. Periods whose slots cannot all be filled are redrawn up
/// to `redraw_cap` times; the best attempt is kept and unfilled slots are
/// recorded as warnings.
pub fn balanced_sample(
    candidates: &[CandidateEvent],
    classifier: &AsClassifier,
    p_count: usize,
    timeframe: (u64, u64),
    seed: u64,
    redraw_cap: usize,
) -> Result<EventSet, SampleError> {
    let (start, end) = timeframe;
    if end < start.saturating_add(EVENT_WINDOW_SECS) {
        return Err(SampleError::TimeframeTooShort { start, end });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pairs = CategoryPair::all();

    // candidates bucketed by category pair, time-sorted
    let mut by_pair: BTreeMap<CategoryPair, Vec<&CandidateEvent>> = BTreeMap::new();
    for c in candidates {
        by_pair
            .entry(classifier.classify_pair(c.link))
            .or_default()
            .push(c);
    }

    let fill = |period_start: u64, rng: &mut ChaCha8Rng| -> Vec<(CategoryPair, CandidateEvent)> {
        let mut filled = Vec::new();
        for &pair in &pairs {
            let matching: Vec<&&CandidateEvent> = by_pair
                .get(&pair)
                .map(|v| {
                    v.iter()
                        .filter(|c| {
                            c.first_seen >= period_start
                                && c.first_seen < period_start + EVENT_WINDOW_SECS
                        })
                        .collect()
                })
                .unwrap_or_default();
            if !matching.is_empty() {
                let pick = matching[rng.gen_range(0..matching.len())];
                filled.push((pair, (*pick).clone()));
            }
        }
        filled
    };

    let mut chosen: Vec<u64> = Vec::with_capacity(p_count);
    let mut events = BTreeMap::new();
    let mut warnings = Vec::new();

    let span = end - start - EVENT_WINDOW_SECS + 1;
    for period_index in 0..p_count {
        let mut best: Option<(u64, Vec<(CategoryPair, CandidateEvent)>)> = None;
        let mut placed = false;
        for _ in 0..redraw_cap.max(1) {
            let cand_start = start + rng.gen_range(0..span);
            let overlaps = chosen
                .iter()
                .any(|&s| cand_start.abs_diff(s) < EVENT_WINDOW_SECS);
            if overlaps {
                continue;
            }
            placed = true;
            let filled = fill(cand_start, &mut rng);
            let complete = filled.len() == pairs.len();
            if best.as_ref().is_none_or(|(_, f)| filled.len() > f.len()) {
                best = Some((cand_start, filled));
            }
            if complete {
                break;
            }
        }
        if !placed {
            return Err(SampleError::PeriodsDontFit {
                placed: period_index,
                requested: p_count,
            });
        }
        let (period_start, filled) = best.expect("placed implies an attempt was kept");
        if filled.len() < pairs.len() {
            warnings.push(alloc::format!(
                "period {period_index} (start {period_start}): filled {}/{} category pairs",
                filled.len(),
                pairs.len()
            ));
        }
        chosen.push(period_start);
        for (pair, event) in filled {
            events.insert((period_index, pair), event);
        }
    }

    Ok(EventSet {
        periods: chosen,
        events,
        warnings,
    })
}
