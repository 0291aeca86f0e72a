//! Seeded mini-Internet simulator: power-law AS topologies with inferred
//! business relationships, route propagation under standard export and
//! preference policies, and coverage measurement for monitor deployment
//! strategies. Serves as ground truth for evaluating VP selection.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::events::AsClassifier;
use crate::ingest::{RibTable, RouteEntry};

/// Link class between two ASes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkKind {
    Peer,
    /// Customer-to-provider: the named endpoint sells transit to the other.
    CustomerProvider { provider: u32 },
}

/// Generation parameters with the defaults used throughout.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TopologyParams {
    pub n: usize,
    pub mean_degree: f64,
    pub powerlaw_exponent: f64,
    /// Relative tolerance on the realized mean degree.
    pub mean_tolerance: f64,
    pub tier1_count: usize,
}

impl Default for TopologyParams {
    fn default() -> Self {
        TopologyParams {
            n: 600,
            mean_degree: 6.1,
            powerlaw_exponent: 2.1,
            mean_tolerance: 0.10,
            tier1_count: 3,
        }
    }
}

/// A generated AS-level topology. ASNs run 1..=n.
#[derive(Debug, Clone, PartialEq)]
pub struct AsTopology {
    pub params: TopologyParams,
    pub seed: u64,
    /// Undirected links keyed smaller-ASN-first.
    pub links: BTreeMap<(u32, u32), LinkKind>,
    /// Tier per AS; 1 is the top (fully meshed) clique.
    pub tiers: BTreeMap<u32, u32>,
    adjacency: BTreeMap<u32, BTreeSet<u32>>,
}

impl AsTopology {
    pub fn n(&self) -> usize {
        self.params.n
    }

    pub fn neighbors(&self, asn: u32) -> impl Iterator<Item = u32> + '_ {
        self.adjacency.get(&asn).into_iter().flatten().copied()
    }

    pub fn degree(&self, asn: u32) -> usize {
        self.adjacency.get(&asn).map_or(0, |s| s.len())
    }

    pub fn mean_degree(&self) -> f64 {
        2.0 * self.links.len() as f64 / self.params.n as f64
    }

    pub fn kind(&self, a: u32, b: u32) -> Option<LinkKind> {
        self.links.get(&(a.min(b), a.max(b))).copied()
    }

    /// Relationship of `nbr` from `asn`'s point of view.
    pub fn relation_to(&self, asn: u32, nbr: u32) -> Option<Relation> {
        self.kind(asn, nbr).map(|k| match k {
            LinkKind::Peer => Relation::Peer,
            LinkKind::CustomerProvider { provider } => {
                if provider == nbr {
                    Relation::Provider
                } else {
                    Relation::Customer
                }
            }
        })
    }

    pub fn p2p_links(&self) -> BTreeSet<(u32, u32)> {
        self.links
            .iter()
            .filter(|(_, k)| matches!(k, LinkKind::Peer))
            .map(|(&l, _)| l)
            .collect()
    }

    pub fn c2p_links(&self) -> BTreeSet<(u32, u32)> {
        self.links
            .iter()
            .filter(|(_, k)| matches!(k, LinkKind::CustomerProvider { .. }))
            .map(|(&l, _)| l)
            .collect()
    }

    /// The prefix an AS originates.
    pub fn prefix_of(asn: u32) -> String {
        format!("10.{}.{}.0/24", asn / 256, asn % 256)
    }

    /// Category inputs for the event pipeline: customer sets, recursive
    /// customer cones, the tier-1 clique, and the highest-degree non-tier-1
    /// ASes as hypergiants.
    pub fn classifier(&self, hypergiant_count: usize) -> AsClassifier {
        let mut customers: BTreeMap<u32, BTreeSet<u32>> = BTreeMap::new();
        for (&(a, b), kind) in &self.links {
            if let LinkKind::CustomerProvider { provider } = kind {
                let customer = if *provider == a { b } else { a };
                customers.entry(*provider).or_default().insert(customer);
            }
        }
        let mut customer_cones = BTreeMap::new();
        for &asn in self.tiers.keys() {
            let mut cone = BTreeSet::new();
            let mut stack = vec![asn];
            while let Some(x) = stack.pop() {
                for &c in customers.get(&x).into_iter().flatten() {
                    if cone.insert(c) {
                        stack.push(c);
                    }
                }
            }
            customer_cones.insert(asn, cone.len() as u64);
        }
        let tier1: BTreeSet<u32> = self
            .tiers
            .iter()
            .filter(|(_, &t)| t == 1)
            .map(|(&a, _)| a)
            .collect();
        let mut by_degree: Vec<u32> = self
            .tiers
            .keys()
            .copied()
            .filter(|a| !tier1.contains(a))
            .collect();
        by_degree.sort_by(|a, b| self.degree(*b).cmp(&self.degree(*a)).then(a.cmp(b)));
        let hypergiants = by_degree.into_iter().take(hypergiant_count).collect();
        AsClassifier {
            customers,
            customer_cones,
            tier1,
            hypergiants,
        }
    }
}

/// Relationship of a neighbor, from the local AS's point of view.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Customer,
    Peer,
    Provider,
}

#[derive(Debug, Clone, PartialEq)]
pub enum MiniError {
    /// Mean degree left the tolerance band after all retries.
    DegreeOutOfTolerance { realized: f64, target: f64 },
    /// Route propagation did not reach a fixed point.
    NotConverged { rounds: usize },
    KTooLarge { k: usize, n: usize },
}

impl fmt::Display for MiniError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MiniError::DegreeOutOfTolerance { realized, target } => write!(
                f,
                "realized mean degree {realized:.2} outside tolerance of target {target:.2}"
            ),
            MiniError::NotConverged { rounds } => {
                write!(f, "route propagation did not converge in {rounds} rounds")
            }
            MiniError::KTooLarge { k, n } => write!(f, "k = {k} exceeds {n} ASes"),
        }
    }
}

impl core::error::Error for MiniError {}

fn sample_degrees(params: &TopologyParams, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let n = params.n;
    let alpha = params.powerlaw_exponent;
    let max_deg = (n - 1) as f64;
    // continuous power-law sample rescaled to the target mean
    let raw: Vec<f64> = (0..n)
        .map(|_| {
            let u: f64 = rng.gen_range(0.0..1.0);
            libm::pow(1.0 - u, -1.0 / (alpha - 1.0))
        })
        .collect();
    let mut scale = params.mean_degree * n as f64 / raw.iter().sum::<f64>();
    for _ in 0..50 {
        let mut degs: Vec<usize> = raw
            .iter()
            .map(|&x| libm::round((x * scale).clamp(1.0, max_deg)) as usize)
            .collect();
        let mean = degs.iter().sum::<usize>() as f64 / n as f64;
        if (mean - params.mean_degree).abs() <= params.mean_tolerance * params.mean_degree {
            // ASNs run in descending degree order: AS 1 is the
            // best-connected, the tail holds the stubs
            degs.sort_unstable_by(|a, b| b.cmp(a));
            return degs;
        }
        scale *= params.mean_degree / mean;
    }
    // last iterate, caller re-checks the realized mean
    let mut degs: Vec<usize> = raw
        .iter()
        .map(|&x| libm::round((x * scale).clamp(1.0, max_deg)) as usize)
        .collect();
    degs.sort_unstable_by(|a, b| b.cmp(a));
    degs
}

/// Generate a connected topology with a power-law degree sequence, a fully
/// meshed top clique of the highest-degree ASes, breadth-first tiers below
/// it, and relationships derived from tiers: same tier peers, cross tier
/// customer-to-provider with the upper AS as provider.
pub fn generate_topology(params: TopologyParams, seed: u64) -> Result<AsTopology, MiniError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = params.n;
    let mut degrees = sample_degrees(&params, &mut rng);
    if degrees.iter().sum::<usize>() % 2 == 1 {
        let bump = rng.gen_range(0..n);
        degrees[bump] += 1;
    }

    // configuration model: pair shuffled stubs, drop self-loops and repeats
    let mut stubs: Vec<u32> = Vec::with_capacity(degrees.iter().sum());
    for (i, &d) in degrees.iter().enumerate() {
        stubs.extend(core::iter::repeat(i as u32 + 1).take(d));
    }
    stubs.shuffle(&mut rng);
    let mut adjacency: BTreeMap<u32, BTreeSet<u32>> = (1..=n as u32)
        .map(|a| (a, BTreeSet::new()))
        .collect();
    for pair in stubs.chunks_exact(2) {
        let (a, b) = (pair[0], pair[1]);
        if a != b && adjacency.get_mut(&a).unwrap().insert(b) {
            adjacency.get_mut(&b).unwrap().insert(a);
        }
    }

    // self-loops and duplicate pairings were dropped; top the graph back up
    // to the target mean, preferring nodes still short of their intended
    // degree so the tail shape survives
    let mean_of = |adj: &BTreeMap<u32, BTreeSet<u32>>| {
        adj.values().map(|s| s.len()).sum::<usize>() as f64 / n as f64
    };
    let mut deficit: Vec<u32> = (1..=n as u32)
        .flat_map(|a| {
            let want = degrees[a as usize - 1];
            let have = adjacency[&a].len();
            core::iter::repeat(a).take(want.saturating_sub(have))
        })
        .collect();
    deficit.shuffle(&mut rng);
    let mut attempts = 0usize;
    while mean_of(&adjacency) < params.mean_degree && attempts < 40 * n {
        attempts += 1;
        let a = if deficit.is_empty() {
            rng.gen_range(1..=n as u32)
        } else {
            deficit[rng.gen_range(0..deficit.len())]
        };
        let b = rng.gen_range(1..=n as u32);
        if a != b && adjacency.get_mut(&a).unwrap().insert(b) {
            adjacency.get_mut(&b).unwrap().insert(a);
            for x in [a, b] {
                if let Some(pos) = deficit.iter().position(|&y| y == x) {
                    deficit.swap_remove(pos);
                }
            }
        }
    }

    // stitch smaller components onto the largest one
    let mut component: BTreeMap<u32, usize> = BTreeMap::new();
    let mut comp_members: Vec<Vec<u32>> = Vec::new();
    for start in 1..=n as u32 {
        if component.contains_key(&start) {
            continue;
        }
        let id = comp_members.len();
        let mut members = vec![start];
        component.insert(start, id);
        let mut stack = vec![start];
        while let Some(x) = stack.pop() {
            for &y in &adjacency[&x] {
                if component.insert(y, id).is_none() {
                    members.push(y);
                    stack.push(y);
                }
            }
        }
        comp_members.push(members);
    }
    let largest = (0..comp_members.len())
        .max_by_key(|&i| comp_members[i].len())
        .expect("n >= 1 yields at least one component");
    for (i, members) in comp_members.iter().enumerate() {
        if i == largest {
            continue;
        }
        let from = members[rng.gen_range(0..members.len())];
        let anchor_pool = &comp_members[largest];
        let to = anchor_pool[rng.gen_range(0..anchor_pool.len())];
        adjacency.get_mut(&from).unwrap().insert(to);
        adjacency.get_mut(&to).unwrap().insert(from);
    }

    // top clique: the highest-degree ASes, fully meshed
    let mut by_degree: Vec<u32> = (1..=n as u32).collect();
    by_degree.sort_by(|a, b| adjacency[b].len().cmp(&adjacency[a].len()).then(a.cmp(b)));
    let top: Vec<u32> = by_degree.into_iter().take(params.tier1_count).collect();
    for i in 0..top.len() {
        for j in i + 1..top.len() {
            adjacency.get_mut(&top[i]).unwrap().insert(top[j]);
            adjacency.get_mut(&top[j]).unwrap().insert(top[i]);
        }
    }

    let realized = adjacency.values().map(|s| s.len()).sum::<usize>() as f64 / n as f64;
    if (realized - params.mean_degree).abs() > params.mean_tolerance * params.mean_degree {
        return Err(MiniError::DegreeOutOfTolerance {
            realized,
            target: params.mean_degree,
        });
    }

    // breadth-first tiers from the clique
    let mut tiers: BTreeMap<u32, u32> = top.iter().map(|&a| (a, 1)).collect();
    let mut frontier: Vec<u32> = top.clone();
    let mut tier = 1u32;
    while !frontier.is_empty() {
        tier += 1;
        let mut next = Vec::new();
        for &a in &frontier {
            for &b in &adjacency[&a] {
                if let alloc::collections::btree_map::Entry::Vacant(e) = tiers.entry(b) {
                    e.insert(tier);
                    next.push(b);
                }
            }
        }
        frontier = next;
    }

    let mut links = BTreeMap::new();
    for (&a, nbrs) in &adjacency {
        for &b in nbrs {
            if a < b {
                let kind = if tiers[&a] == tiers[&b] {
                    LinkKind::Peer
                } else if tiers[&a] < tiers[&b] {
                    LinkKind::CustomerProvider { provider: a }
                } else {
                    LinkKind::CustomerProvider { provider: b }
                };
                links.insert((a, b), kind);
            }
        }
    }

    Ok(AsTopology {
        params,
        seed,
        links,
        tiers,
        adjacency,
    })
}

/// Best route of one AS towards one origin during propagation.
#[derive(Debug, Clone, PartialEq, Eq)]
struct Route {
    /// 3 self-originated, 2 customer, 1 peer, 0 provider.
    class: u8,
    path: Vec<u32>,
}

fn class_of(rel: Relation) -> u8 {
    match rel {
        Relation::Customer => 2,
        Relation::Peer => 1,
        Relation::Provider => 0,
    }
}

fn exports_to(route_class: u8, rel_to_neighbor: Relation) -> bool {
    // own and customer routes go everywhere; peer and provider routes only
    // to customers
    route_class >= 2 || rel_to_neighbor == Relation::Customer
}

/// Candidate comparison: higher class, then shorter path, then lower
/// next-hop ASN.
fn better(class: u8, len: usize, next_hop: u32, cur: &Route) -> bool {
    let cur_next = cur.path.get(1).copied().unwrap_or(0);
    (class, core::cmp::Reverse(len), core::cmp::Reverse(next_hop))
        > (cur.class, core::cmp::Reverse(cur.path.len()), core::cmp::Reverse(cur_next))
}

/// Propagate every AS's prefix to a fixed point and return per-AS routing
/// tables. VP ids are `as<asn>`.
pub fn propagate_routes(topo: &AsTopology) -> Result<BTreeMap<String, RibTable>, MiniError> {
    let n = topo.n();
    // best[a-1][o-1] = a's best route towards origin o
    let mut best: Vec<Vec<Option<Route>>> = (0..n).map(|_| vec![None; n]).collect();
    for a in 1..=n as u32 {
        best[a as usize - 1][a as usize - 1] = Some(Route {
            class: 3,
            path: vec![a],
        });
    }
    let directed: Vec<(u32, u32, Relation, Relation)> = topo
        .links
        .keys()
        .flat_map(|&(a, b)| {
            let ab = topo.relation_to(a, b).expect("link endpoints are related");
            let ba = topo.relation_to(b, a).expect("link endpoints are related");
            // (from, to, from's relation to to, to's relation to from)
            [(a, b, ab, ba), (b, a, ba, ab)]
        })
        .collect();

    let cap = 4 * n + 8;
    let mut converged = false;
    for _ in 0..cap {
        let mut changed = false;
        for &(from, to, rel_from_to, rel_to_from) in &directed {
            let (fi, ti) = (from as usize - 1, to as usize - 1);
            for o in 0..n {
                let Some(offer) = best[fi][o].as_ref() else {
                    continue;
                };
                if !exports_to(offer.class, rel_from_to) {
                    continue;
                }
                if offer.path.contains(&to) {
                    continue;
                }
                let class = class_of(rel_to_from);
                let len = offer.path.len() + 1;
                let take = match best[ti][o].as_ref() {
                    None => true,
                    Some(cur) => better(class, len, from, cur),
                };
                if take {
                    let mut path = Vec::with_capacity(len);
                    path.push(to);
                    path.extend_from_slice(&best[fi][o].as_ref().unwrap().path);
                    best[ti][o] = Some(Route { class, path });
                    changed = true;
                }
            }
        }
        if !changed {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(MiniError::NotConverged { rounds: cap });
    }

    let mut ribs = BTreeMap::new();
    for a in 1..=n as u32 {
        let mut rib = RibTable::new(format!("as{a}"), 0);
        for o in 1..=n as u32 {
            if let Some(route) = &best[a as usize - 1][o as usize - 1] {
                rib.routes.insert(
                    AsTopology::prefix_of(o),
                    RouteEntry {
                        as_path: route.path.clone(),
                        communities: BTreeSet::new(),
                        last_update_time: 0,
                    },
                );
            }
        }
        ribs.insert(format!("as{a}"), rib);
    }
    Ok(ribs)
}

/// Check a propagated path never goes customerward and back up: climbing
/// customer-to-provider steps, at most one peer step, then only
/// provider-to-customer steps (read from origin to observer).
pub fn is_valley_free(topo: &AsTopology, path: &[u32]) -> bool {
    // phase 0 climbing, 1 after the peer step, 2 descending
    let mut phase = 0u8;
    for hop in path.windows(2).rev() {
        let (receiver, sender) = (hop[0], hop[1]);
        let Some(rel) = topo.relation_to(receiver, sender) else {
            return false;
        };
        match rel {
            Relation::Customer => {
                // announcement climbed from a customer to its provider
                if phase > 0 {
                    return false;
                }
            }
            Relation::Peer => {
                if phase > 0 {
                    return false;
                }
                phase = 1;
            }
            Relation::Provider => phase = 2,
        }
    }
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeployStrategy {
    Random,
    DistanceBased,
    GreedySpecific,
}

impl DeployStrategy {
    pub const ALL: [DeployStrategy; 3] = [
        DeployStrategy::Random,
        DeployStrategy::DistanceBased,
        DeployStrategy::GreedySpecific,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DeployStrategy::Random => "random",
            DeployStrategy::DistanceBased => "distance_based",
            DeployStrategy::GreedySpecific => "greedy_specific",
        }
    }
}

/// Fraction of each link class visible from the deployed monitors' tables.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoverageReport {
    pub p2p: f64,
    pub c2p: f64,
}

fn observed_link_bitset(
    rib: &RibTable,
    link_ids: &BTreeMap<(u32, u32), usize>,
    words: usize,
) -> Vec<u64> {
    let mut bits = vec![0u64; words];
    for entry in rib.routes.values() {
        for hop in entry.as_path.windows(2) {
            let key = (hop[0].min(hop[1]), hop[0].max(hop[1]));
            if let Some(&id) = link_ids.get(&key) {
                bits[id / 64] |= 1 << (id % 64);
            }
        }
    }
    bits
}

fn hop_distances(topo: &AsTopology, src: u32) -> BTreeMap<u32, u32> {
    let mut dist = BTreeMap::new();
    dist.insert(src, 0);
    let mut frontier = vec![src];
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for a in frontier {
            let d = dist[&a];
            for b in topo.neighbors(a) {
                if !dist.contains_key(&b) {
                    dist.insert(b, d + 1);
                    next.push(b);
                }
            }
        }
        frontier = next;
    }
    dist
}

/// Pick `k` monitor ASes with the given strategy and measure which fraction
/// of peer and customer-provider links their tables reveal.
pub fn deploy_and_measure(
    topo: &AsTopology,
    ribs: &BTreeMap<String, RibTable>,
    strategy: DeployStrategy,
    k: usize,
    seed: u64,
) -> Result<(Vec<u32>, CoverageReport), MiniError> {
    let n = topo.n();
    if k > n {
        return Err(MiniError::KTooLarge { k, n });
    }
    let link_ids: BTreeMap<(u32, u32), usize> = topo
        .links
        .keys()
        .enumerate()
        .map(|(i, &l)| (l, i))
        .collect();
    let words = link_ids.len().div_ceil(64);
    let observed: BTreeMap<u32, Vec<u64>> = (1..=n as u32)
        .map(|a| {
            let rib = &ribs[&format!("as{a}")];
            (a, observed_link_bitset(rib, &link_ids, words))
        })
        .collect();

    let selected: Vec<u32> = match strategy {
        DeployStrategy::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut pool: Vec<u32> = (1..=n as u32).collect();
            pool.shuffle(&mut rng);
            pool.truncate(k);
            pool
        }
        DeployStrategy::DistanceBased => {
            // anchor the deployment at the AS most distant from the rest of
            // the network (longest summed AS paths), then fill the budget
            // with that AS's nearest neighborhood; nearby ties prefer the
            // more remote AS
            if k == 0 {
                Vec::new()
            } else {
                let remoteness = |a: u32| -> u64 {
                    ribs[&format!("as{a}")]
                        .routes
                        .values()
                        .map(|e| e.as_path.len() as u64)
                        .sum()
                };
                let anchor = (1..=n as u32)
                    .max_by_key(|&a| (remoteness(a), core::cmp::Reverse(a)))
                    .expect("n >= 1");
                let dist = hop_distances(topo, anchor);
                let far = n as u32 + 1;
                let mut rest: Vec<u32> = (1..=n as u32).filter(|&a| a != anchor).collect();
                rest.sort_by_key(|&a| {
                    (
                        dist.get(&a).copied().unwrap_or(far),
                        core::cmp::Reverse(remoteness(a)),
                        a,
                    )
                });
                let mut selected = vec![anchor];
                selected.extend(rest.into_iter().take(k - 1));
                selected
            }
        }
        DeployStrategy::GreedySpecific => {
            let mut covered = vec![0u64; words];
            let mut selected = Vec::with_capacity(k);
            while selected.len() < k {
                let next = (1..=n as u32)
                    .filter(|a| !selected.contains(a))
                    .max_by_key(|a| {
                        let gain: u32 = observed[a]
                            .iter()
                            .zip(&covered)
                            .map(|(o, c)| (o & !c).count_ones())
                            .sum();
                        (gain, core::cmp::Reverse(*a))
                    })
                    .expect("k <= n leaves unselected ASes");
                for (c, o) in covered.iter_mut().zip(&observed[&next]) {
                    *c |= o;
                }
                selected.push(next);
            }
            selected
        }
    };

    let mut covered = vec![0u64; words];
    for a in &selected {
        for (c, o) in covered.iter_mut().zip(&observed[a]) {
            *c |= o;
        }
    }
    let (mut p2p_seen, mut p2p_total, mut c2p_seen, mut c2p_total) = (0usize, 0, 0usize, 0);
    for (link, &id) in &link_ids {
        let seen = covered[id / 64] >> (id % 64) & 1 == 1;
        match topo.links[link] {
            LinkKind::Peer => {
                p2p_total += 1;
                p2p_seen += seen as usize;
            }
            LinkKind::CustomerProvider { .. } => {
                c2p_total += 1;
                c2p_seen += seen as usize;
            }
        }
    }
    let frac = |seen: usize, total: usize| {
        if total == 0 {
            1.0
        } else {
            seen as f64 / total as f64
        }
    };
    Ok((
        selected,
        CoverageReport {
            p2p: frac(p2p_seen, p2p_total),
            c2p: frac(c2p_seen, c2p_total),
        },
    ))
}
