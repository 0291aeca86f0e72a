//! Topological features computed on a VP's AS graph: six node-based and
//! three pair-based, assembled into a 15-dimensional vector per (VP, event).
//!
//! Weighted shortest-path metrics use edge length `1/weight`: an edge
//! supported by more routes is "closer". Absent nodes and degenerate graphs
//! yield zero sentinels so every vector is finite.

use alloc::collections::{BTreeMap, BTreeSet, BinaryHeap};
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::graph::VpGraph;

/// Feature indices, in vector order.
pub const CLOSENESS: usize = 0;
pub const HARMONIC: usize = 1;
pub const AVG_NEIGHBOR_DEGREE: usize = 2;
pub const ECCENTRICITY: usize = 3;
pub const TRIANGLES: usize = 4;
pub const CLUSTERING: usize = 5;
pub const JACCARD: usize = 6;
pub const ADAMIC_ADAR: usize = 7;
pub const PREFERENTIAL_ATTACHMENT: usize = 8;

/// Indices (into the 9 features) that depend on edge weights.
pub const WEIGHTED_FEATURES: [usize; 5] = [0, 1, 2, 3, 5];

pub const VECTOR_LEN: usize = 15;

/// The 15-dimensional per-(VP, event) vector:
/// `[f0(a1), f0(a2), ..., f5(a1), f5(a2), f6, f7, f8]` with `a1` the
/// numerically smaller endpoint of the event link.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: [f64; VECTOR_LEN],
}

#[derive(PartialEq)]
struct HeapItem {
    dist: f64,
    node: u32,
}

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on distance; distances are always finite
        other
            .dist
            .partial_cmp(&self.dist)
            .unwrap_or(Ordering::Equal)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Single-source shortest paths with edge length `1/weight`. Returns finite
/// distances only (unreachable nodes are absent); the source maps to 0.
pub fn shortest_paths(graph: &VpGraph, src: u32) -> BTreeMap<u32, f64> {
    let mut dist: BTreeMap<u32, f64> = BTreeMap::new();
    if !graph.contains_node(src) {
        return dist;
    }
    dist.insert(src, 0.0);
    let mut heap = BinaryHeap::new();
    heap.push(HeapItem { dist: 0.0, node: src });
    while let Some(HeapItem { dist: d, node }) = heap.pop() {
        if d > dist[&node] {
            continue;
        }
        for (nbr, w) in graph.neighbors(node) {
            let nd = d + 1.0 / w as f64;
            if dist.get(&nbr).is_none_or(|&cur| nd < cur) {
                dist.insert(nbr, nd);
                heap.push(HeapItem { dist: nd, node: nbr });
            }
        }
    }
    dist
}

/// The six node-based features (indices 0-5) of `asn` on `graph`.
/// An absent or isolated node yields all zeros.
pub fn node_features(graph: &VpGraph, asn: u32) -> [f64; 6] {
    let mut f = [0.0; 6];
    if !graph.contains_node(asn) || graph.degree(asn) == 0 {
        return f;
    }
    let n = graph.node_count();
    let dist = shortest_paths(graph, asn);
    let reachable = dist.len(); // includes asn itself
    let sum_d: f64 = dist.values().sum();
    if reachable > 1 && n > 1 && sum_d > 0.0 {
        let r = (reachable - 1) as f64;
        f[CLOSENESS] = (r / (n - 1) as f64) * (r / sum_d);
    }
    f[HARMONIC] = dist.values().filter(|&&d| d > 0.0).map(|d| 1.0 / d).sum();
    f[ECCENTRICITY] = dist.values().cloned().fold(0.0, f64::max);

    let strength: f64 = graph.strength(asn) as f64;
    if strength > 0.0 {
        f[AVG_NEIGHBOR_DEGREE] = graph
            .neighbors(asn)
            .map(|(nbr, w)| w as f64 * graph.strength(nbr) as f64)
            .sum::<f64>()
            / strength;
    }

    let nbrs: Vec<(u32, u64)> = graph.neighbors(asn).collect();
    let deg = nbrs.len();
    let mut triangles = 0u64;
    let mut intensity = 0.0;
    for i in 0..deg {
        for j in (i + 1)..deg {
            let (u, wu) = nbrs[i];
            let (v, wv) = nbrs[j];
            if let Some(wuv) = graph.weight(u, v) {
                triangles += 1;
                intensity += libm::cbrt(wu as f64 * wv as f64 * wuv as f64);
            }
        }
    }
    f[TRIANGLES] = triangles as f64;
    if deg >= 2 {
        f[CLUSTERING] = 2.0 * intensity / (deg * (deg - 1)) as f64;
    }
    f
}

/// The three pair-based features (indices 6-8) of the unordered pair
/// `(a, b)`: Jaccard coefficient, Adamic-Adar index and preferential
/// attachment, all on the unweighted neighbor structure.
pub fn pair_features(graph: &VpGraph, a: u32, b: u32) -> [f64; 3] {
    let mut f = [0.0; 3];
    if !graph.contains_node(a) || !graph.contains_node(b) {
        return f;
    }
    let na: BTreeSet<u32> = graph.neighbors(a).map(|(n, _)| n).collect();
    let nb: BTreeSet<u32> = graph.neighbors(b).map(|(n, _)| n).collect();
    let inter: Vec<u32> = na.intersection(&nb).copied().collect();
    let union = na.union(&nb).count();
    if union > 0 {
        f[JACCARD - 6] = inter.len() as f64 / union as f64;
    }
    f[ADAMIC_ADAR - 6] = inter
        .iter()
        .map(|&z| graph.degree(z))
        .filter(|&d| d > 1)
        .map(|d| 1.0 / libm::log(d as f64))
        .sum();
    f[PREFERENTIAL_ATTACHMENT - 6] = (na.len() * nb.len()) as f64;
    f
}

/// Assemble the full feature vector for an event link on one VP's graph.
/// The endpoint order is fixed by the link: `e_AS1` is the smaller ASN.
pub fn event_feature_vector(graph: &VpGraph, link: (u32, u32)) -> FeatureVector {
    let (a1, a2) = if link.0 <= link.1 {
        (link.0, link.1)
    } else {
        (link.1, link.0)
    };
    let n1 = node_features(graph, a1);
    let n2 = node_features(graph, a2);
    let p = pair_features(graph, a1, a2);
    let mut values = [0.0; VECTOR_LEN];
    for i in 0..6 {
        values[2 * i] = n1[i];
        values[2 * i + 1] = n2[i];
    }
    values[12..15].copy_from_slice(&p);
    FeatureVector { values }
}
