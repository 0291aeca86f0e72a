//! Core algorithms for quantifying redundancy among BGP vantage points and
//! selecting a volume-budgeted set of least-redundant ones.
//!
//! The crate is `no_std` + `alloc`: it contains no IO. File formats, gzip
//! handling and the command-line pipeline live in the companion `vpset-cli`
//! crate.
//!
//! The pipeline goes: parse update streams ([`ingest`]), maintain per-VP AS
//! graphs ([`graph`]), detect and sample new-AS-link events ([`events`]),
//! compute topological feature vectors ([`features`]), reduce them to pairwise
//! redundancy scores ([`redundancy`]) and greedily select VPs under a data
//! volume budget ([`selection`]). [`evaldefs`] holds the formal redundancy
//! definitions, use-case detectors and baselines used for evaluation, and
//! [`minimet`] is a policy-aware mini-Internet simulator providing ground
//! truth.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod evaldefs;
pub mod events;
pub mod features;
pub mod graph;
pub mod ingest;
pub mod minimet;
pub mod redundancy;
pub mod selection;
