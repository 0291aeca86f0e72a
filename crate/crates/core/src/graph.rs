//! Undirected weighted AS graph of one VP, built from its RIB and maintained
//! incrementally as routes change.
//!
//! Edge weights count the RIB routes whose collapsed AS path contains the
//! edge. Consecutive duplicate ASNs (prepending) are collapsed before edge
//! extraction so prepended paths do not produce self-loops. Single-AS paths
//! contribute a node with no incident edge.

use alloc::collections::btree_map::Entry;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::ingest::RibTable;

/// Collapse consecutive duplicates in an AS path (prepending removal).
pub fn collapse_path(path: &[u32]) -> Vec<u32> {
    let mut out: Vec<u32> = Vec::with_capacity(path.len());
    for &asn in path {
        if out.last() != Some(&asn) {
            out.push(asn);
        }
    }
    out
}

fn edge_key(a: u32, b: u32) -> (u32, u32) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GraphError {
    /// An edge was decremented that the graph does not contain.
    MissingEdge { a: u32, b: u32 },
    /// A lone-node count was decremented below zero.
    MissingNode { asn: u32 },
}

impl fmt::Display for GraphError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphError::MissingEdge { a, b } => {
                write!(f, "internal consistency: edge ({a},{b}) not present")
            }
            GraphError::MissingNode { asn } => {
                write!(f, "internal consistency: lone node {asn} not present")
            }
        }
    }
}

impl core::error::Error for GraphError {}

/// Undirected weighted AS graph of one VP at a point in time.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct VpGraph {
    pub vp_id: String,
    pub as_of: u64,
    /// Adjacency with symmetric entries: `adj[a][b] == adj[b][a]` = weight.
    adj: BTreeMap<u32, BTreeMap<u32, u64>>,
    /// Count of RIB routes whose collapsed path is a single AS, per AS.
    /// These keep the AS in the node set even with no incident edge.
    lone_routes: BTreeMap<u32, u64>,
}

impl VpGraph {
    pub fn new(vp_id: impl Into<String>, as_of: u64) -> Self {
        VpGraph {
            vp_id: vp_id.into(),
            as_of,
            adj: BTreeMap::new(),
            lone_routes: BTreeMap::new(),
        }
    }

    /// Node set `N_v(t)`: edge endpoints plus lone-route ASes.
    pub fn nodes(&self) -> BTreeSet<u32> {
        let mut nodes: BTreeSet<u32> = self.adj.keys().copied().collect();
        nodes.extend(self.lone_routes.keys().copied());
        nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes().len()
    }

    pub fn contains_node(&self, asn: u32) -> bool {
        self.adj.contains_key(&asn) || self.lone_routes.contains_key(&asn)
    }

    pub fn weight(&self, a: u32, b: u32) -> Option<u64> {
        self.adj.get(&a).and_then(|n| n.get(&b)).copied()
    }

    pub fn contains_edge(&self, a: u32, b: u32) -> bool {
        self.weight(a, b).is_some()
    }

    /// Weighted neighbors of `asn` (empty iterator if absent).
    pub fn neighbors(&self, asn: u32) -> impl Iterator<Item = (u32, u64)> + '_ {
        self.adj
            .get(&asn)
            .into_iter()
            .flat_map(|n| n.iter().map(|(&b, &w)| (b, w)))
    }

    pub fn degree(&self, asn: u32) -> usize {
        self.adj.get(&asn).map_or(0, |n| n.len())
    }

    /// Weighted degree (strength).
    pub fn strength(&self, asn: u32) -> u64 {
        self.adj.get(&asn).map_or(0, |n| n.values().sum())
    }

    /// Unordered edge list with weights.
    pub fn edges(&self) -> Vec<((u32, u32), u64)> {
        let mut out = Vec::new();
        for (&a, nbrs) in &self.adj {
            for (&b, &w) in nbrs {
                if a <= b {
                    out.push(((a, b), w));
                }
            }
        }
        out
    }

    pub fn edge_count(&self) -> usize {
        self.adj.values().map(|n| n.len()).sum::<usize>() / 2
    }

    pub fn total_weight(&self) -> u64 {
        self.adj
            .values()
            .map(|n| n.values().sum::<u64>())
            .sum::<u64>()
            / 2
    }

    pub fn max_weight(&self) -> u64 {
        self.adj
            .values()
            .flat_map(|n| n.values().copied())
            .max()
            .unwrap_or(0)
    }

    fn bump_edge(&mut self, a: u32, b: u32, delta: i64) -> Result<(), GraphError> {
        let (a, b) = edge_key(a, b);
        for (x, y) in [(a, b), (b, a)] {
            let nbrs = self.adj.entry(x).or_default();
            match nbrs.entry(y) {
                Entry::Occupied(mut e) => {
                    let w = *e.get() as i64 + delta;
                    if w > 0 {
                        *e.get_mut() = w as u64;
                    } else if w == 0 {
                        e.remove();
                    } else {
                        return Err(GraphError::MissingEdge { a, b });
                    }
                }
                Entry::Vacant(v) => {
                    if delta > 0 {
                        v.insert(delta as u64);
                    } else {
                        return Err(GraphError::MissingEdge { a, b });
                    }
                }
            }
            if self.adj.get(&x).is_some_and(|n| n.is_empty()) {
                self.adj.remove(&x);
            }
        }
        Ok(())
    }

    fn add_route_path(&mut self, path: &[u32]) -> Result<(), GraphError> {
        let collapsed = collapse_path(path);
        if collapsed.len() == 1 {
            *self.lone_routes.entry(collapsed[0]).or_insert(0) += 1;
            return Ok(());
        }
        for pair in collapsed.windows(2) {
            self.bump_edge(pair[0], pair[1], 1)?;
        }
        Ok(())
    }

    fn remove_route_path(&mut self, path: &[u32]) -> Result<(), GraphError> {
        let collapsed = collapse_path(path);
        if collapsed.len() == 1 {
            let asn = collapsed[0];
            match self.lone_routes.get_mut(&asn) {
                Some(c) if *c > 1 => *c -= 1,
                Some(_) => {
                    self.lone_routes.remove(&asn);
                }
                None => return Err(GraphError::MissingNode { asn }),
            }
            return Ok(());
        }
        for pair in collapsed.windows(2) {
            self.bump_edge(pair[0], pair[1], -1)?;
        }
        Ok(())
    }
}

/// Build the graph of a full RIB.
pub fn build_graph(rib: &RibTable) -> VpGraph {
    let mut g = VpGraph::new(rib.vp_id.clone(), rib.as_of);
    for entry in rib.routes.values() {
        // paths in a valid RIB are non-empty, so this cannot fail
        g.add_route_path(&entry.as_path)
            .expect("fresh graph build cannot underflow");
    }
    g
}

/// Apply one route change in place: `old_route` was installed for some
/// prefix, `new_route` replaces it (either side may be absent). The result
/// equals rebuilding from the RIB after the change.
pub fn apply_route_change(
    graph: &mut VpGraph,
    old_route: Option<&[u32]>,
    new_route: Option<&[u32]>,
) -> Result<(), GraphError> {
    if let Some(new) = new_route {
        graph.add_route_path(new)?;
    }
    if let Some(old) = old_route {
        graph.remove_route_path(old)?;
    }
    Ok(())
}

/// Edge-list export, one `asn_a asn_b weight` line per edge, sorted.
pub fn edge_list(graph: &VpGraph) -> String {
    let mut out = String::new();
    for ((a, b), w) in graph.edges() {
        out.push_str(&alloc::format!("{a} {b} {w}\n"));
    }
    out.pop();
    out
}
