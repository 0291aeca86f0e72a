//! Canonical route-archive parsing and per-VP RIB reconstruction.
//!
//! One record per line: `timestamp|vp_id|A or W|prefix|as_path|communities`
//! with the AS path space-separated and the communities space-separated
//! (possibly empty). Prefixes are opaque strings compared by exact equality.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum UpdateKind {
    Announce,
    Withdraw,
}

/// One collected route message.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BgpUpdate {
    pub timestamp: u64,
    pub vp_id: String,
    pub kind: UpdateKind,
    pub prefix: String,
    /// Stored verbatim, prepending loops included. Collapse happens at graph
    /// construction time.
    pub as_path: Vec<u32>,
    pub communities: BTreeSet<String>,
}

impl BgpUpdate {
    /// Canonical line form; communities are emitted sorted.
    pub fn to_line(&self) -> String {
        let kind = match self.kind {
            UpdateKind::Announce => "A",
            UpdateKind::Withdraw => "W",
        };
        let path = self
            .as_path
            .iter()
            .map(|a| a.to_string())
            .collect::<Vec<_>>()
            .join(" ");
        let comms = self.communities.iter().cloned().collect::<Vec<_>>().join(" ");
        alloc::format!(
            "{}|{}|{}|{}|{}|{}",
            self.timestamp,
            self.vp_id,
            kind,
            self.prefix,
            path,
            comms
        )
    }

    /// Origin AS, by convention the last element of the AS path.
    pub fn origin(&self) -> Option<u32> {
        self.as_path.last().copied()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub line_no: usize,
    pub field: &'static str,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "line {}: field `{}`: {}",
            self.line_no, self.field, self.message
        )
    }
}

impl core::error::Error for ParseError {}

fn parse_err(line_no: usize, field: &'static str, message: impl fmt::Display) -> ParseError {
    ParseError {
        line_no,
        field,
        message: alloc::format!("{message}"),
    }
}

/// Parse one canonical archive line. `line_no` is only used for error
/// reporting (1-based).
pub fn parse_update_line(line: &str, line_no: usize) -> Result<BgpUpdate, ParseError> {
    let fields: Vec<&str> = line.trim_end_matches(['\r', '\n']).split('|').collect();
    if fields.len() != 6 {
        return Err(parse_err(
            line_no,
            "record",
            alloc::format!("expected 6 pipe-delimited fields, got {}", fields.len()),
        ));
    }
    let timestamp: u64 = fields[0]
        .parse()
        .map_err(|e| parse_err(line_no, "timestamp", e))?;
    let vp_id = fields[1];
    if vp_id.is_empty() {
        return Err(parse_err(line_no, "vp_id", "empty VP identifier"));
    }
    let kind = match fields[2] {
        "A" => UpdateKind::Announce,
        "W" => UpdateKind::Withdraw,
        other => {
            return Err(parse_err(
                line_no,
                "kind",
                alloc::format!("expected `A` or `W`, got `{other}`"),
            ))
        }
    };
    let prefix = fields[3];
    if prefix.is_empty() {
        return Err(parse_err(line_no, "prefix", "empty prefix"));
    }
    let mut as_path = Vec::new();
    for tok in fields[4].split_whitespace() {
        as_path.push(tok.parse::<u32>().map_err(|e| parse_err(line_no, "as_path", e))?);
    }
    if kind == UpdateKind::Announce && as_path.is_empty() {
        return Err(parse_err(line_no, "as_path", "announce with empty path"));
    }
    let mut communities = BTreeSet::new();
    for tok in fields[5].split_whitespace() {
        communities.insert(tok.to_string());
    }
    Ok(BgpUpdate {
        timestamp,
        vp_id: vp_id.to_string(),
        kind,
        prefix: prefix.to_string(),
        as_path,
        communities,
    })
}

/// A route currently installed for one prefix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RouteEntry {
    pub as_path: Vec<u32>,
    pub communities: BTreeSet<String>,
    pub last_update_time: u64,
}

/// Snapshot of the best routes of one VP at a point in time.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RibTable {
    pub vp_id: String,
    pub as_of: u64,
    pub routes: BTreeMap<String, RouteEntry>,
}

impl RibTable {
    pub fn new(vp_id: impl Into<String>, as_of: u64) -> Self {
        RibTable {
            vp_id: vp_id.into(),
            as_of,
            routes: BTreeMap::new(),
        }
    }

    /// Apply a single update in place. Returns the replaced entry, if any.
    /// Withdrawals of absent prefixes are a no-op and return `None`.
    pub fn apply(&mut self, update: &BgpUpdate) -> Option<RouteEntry> {
        debug_assert_eq!(update.vp_id, self.vp_id);
        self.as_of = self.as_of.max(update.timestamp);
        match update.kind {
            UpdateKind::Announce => self.routes.insert(
                update.prefix.clone(),
                RouteEntry {
                    as_path: update.as_path.clone(),
                    communities: update.communities.clone(),
                    last_update_time: update.timestamp,
                },
            ),
            UpdateKind::Withdraw => self.routes.remove(&update.prefix),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ReplayError {
    /// The update stream is not sorted by timestamp.
    UnsortedStream { position: usize, timestamp: u64, previous: u64 },
    /// The snapshot postdates the requested time.
    SnapshotAfterQuery { as_of: u64, query: u64 },
}

impl fmt::Display for ReplayError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReplayError::UnsortedStream {
                position,
                timestamp,
                previous,
            } => write!(
                f,
                "update stream unsorted at position {position}: timestamp {timestamp} after {previous}"
            ),
            ReplayError::SnapshotAfterQuery { as_of, query } => {
                write!(f, "snapshot as_of {as_of} is later than queried time {query}")
            }
        }
    }
}

impl core::error::Error for ReplayError {}

/// Reconstruct the RIB of `vp_id` at time `t` from a snapshot and a sorted
/// update stream. Updates for other VPs are skipped; updates with equal
/// timestamps are applied in stream order.
pub fn rib_at(
    vp_id: &str,
    t: u64,
    snapshot: &RibTable,
    updates: &[BgpUpdate],
) -> Result<RibTable, ReplayError> {
    if snapshot.as_of > t {
        return Err(ReplayError::SnapshotAfterQuery {
            as_of: snapshot.as_of,
            query: t,
        });
    }
    let mut rib = snapshot.clone();
    rib.vp_id = vp_id.to_string();
    let mut prev = 0u64;
    for (i, u) in updates.iter().enumerate() {
        if u.timestamp < prev {
            return Err(ReplayError::UnsortedStream {
                position: i,
                timestamp: u.timestamp,
                previous: prev,
            });
        }
        prev = u.timestamp;
        if u.timestamp > t {
            break;
        }
        if u.vp_id != vp_id {
            continue;
        }
        rib.apply(u);
    }
    rib.as_of = rib.as_of.max(t);
    Ok(rib)
}
