//! The pipeline stages behind each subcommand.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

use vpset_core::evaldefs::{
    detectors, greedy_specific_usecase, naive_baselines, reduction_factor, smallest_meeting_prefix,
    BaselineContext, BaselineStrategy, ObjectiveSpec, UseCase,
};
use vpset_core::events::{
    balanced_sample, detect_candidates, AsCategory, AsClassifier, CandidateEvent, CategoryPair,
    EventSet, EVENT_WINDOW_SECS,
};
use vpset_core::features::{event_feature_vector, FeatureVector, VECTOR_LEN};
use vpset_core::graph::{build_graph, collapse_path};
use vpset_core::ingest::{rib_at, BgpUpdate, RibTable, UpdateKind};
use vpset_core::minimet::{
    deploy_and_measure, generate_topology, propagate_routes, DeployStrategy, TopologyParams,
};
use vpset_core::redundancy::{
    assemble_period_matrix, pairwise_sq_distance, redundancy_scores, standard_scale,
    RedundancyMatrix,
};
use vpset_core::selection::{estimate_volume, greedy_select, VolumeProfile};

use crate::config::{ConfigError, PipelineConfig};
use crate::io::{read_archive, read_snapshots, read_text, write_artifact, Manifest};

pub const CANDIDATES: &str = "candidates.txt";
pub const EVENTS: &str = "events.txt";
pub const FEATURES: &str = "features.txt";
pub const SCORES: &str = "scores.csv";
pub const SELECTION: &str = "selection.csv";
pub const BENCHMARK: &str = "benchmark.csv";
pub const SIMULATE: &str = "simulate.csv";

/// A required upstream artifact is absent (exit code 2).
#[derive(Debug)]
pub struct MissingCheckpoint {
    pub path: PathBuf,
    pub stage: String,
}

impl std::fmt::Display for MissingCheckpoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "missing checkpoint {}: run `vpset {}` first",
            self.path.display(),
            self.stage
        )
    }
}

impl std::error::Error for MissingCheckpoint {}

fn require(out_dir: &Path, name: &str, producing_stage: &str) -> Result<PathBuf> {
    let path = out_dir.join(name);
    if !path.exists() {
        return Err(MissingCheckpoint {
            path,
            stage: producing_stage.to_string(),
        }
        .into());
    }
    Ok(path)
}

fn config_err(field: &str, message: &str) -> anyhow::Error {
    ConfigError {
        field: field.to_string(),
        message: message.to_string(),
    }
    .into()
}

fn archive_inputs(cfg: &PipelineConfig) -> Vec<&Path> {
    cfg.paths
        .archive
        .iter()
        .chain(cfg.paths.snapshots.iter())
        .map(|p| p.as_path())
        .collect()
}

fn all_vp_ids(updates: &[BgpUpdate], snapshots: &BTreeMap<String, RibTable>) -> Vec<String> {
    let mut vps: BTreeSet<String> = snapshots.keys().cloned().collect();
    vps.extend(updates.iter().map(|u| u.vp_id.clone()));
    vps.into_iter().collect()
}

/// `provider customer` pairs, one per line; cones by reachability.
fn load_classifier(cfg: &PipelineConfig) -> Result<AsClassifier> {
    let mut customers: BTreeMap<u32, BTreeSet<u32>> = BTreeMap::new();
    if let Some(path) = &cfg.paths.relationships {
        let text = read_text(path)?;
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut it = line.split_whitespace();
            let (p, c) = (it.next(), it.next());
            match (p, c, it.next()) {
                (Some(p), Some(c), None) => {
                    let p: u32 = p.parse().with_context(|| {
                        format!("{}: line {}: bad provider ASN", path.display(), i + 1)
                    })?;
                    let c: u32 = c.parse().with_context(|| {
                        format!("{}: line {}: bad customer ASN", path.display(), i + 1)
                    })?;
                    customers.entry(p).or_default().insert(c);
                }
                _ => bail!(
                    "{}: line {}: expected `provider customer`",
                    path.display(),
                    i + 1
                ),
            }
        }
    }
    let mut customer_cones = BTreeMap::new();
    for &asn in customers.keys() {
        let mut cone = BTreeSet::new();
        let mut stack = vec![asn];
        while let Some(a) = stack.pop() {
            for &c in customers.get(&a).into_iter().flatten() {
                if cone.insert(c) {
                    stack.push(c);
                }
            }
        }
        customer_cones.insert(asn, cone.len() as u64);
    }
    Ok(AsClassifier {
        customers,
        customer_cones,
        tier1: cfg.categories.tier1.clone(),
        hypergiants: cfg.categories.hypergiants.clone(),
    })
}

// ---------------------------------------------------------------- stages

pub fn ingest_check(cfg: &PipelineConfig) -> Result<()> {
    let updates = read_archive(&cfg.paths.archive)?;
    let snapshots = read_snapshots(&cfg.paths.snapshots)?;
    let vps = all_vp_ids(&updates, &snapshots);
    let prefixes: BTreeSet<&str> = updates.iter().map(|u| u.prefix.as_str()).collect();
    let routes: usize = snapshots.values().map(|r| r.routes.len()).sum();
    let span = match (updates.first(), updates.last()) {
        (Some(a), Some(b)) => format!("[{}, {}]", a.timestamp, b.timestamp),
        _ => "(empty)".to_string(),
    };
    println!(
        "archive: {} updates, {} prefixes, span {span}",
        updates.len(),
        prefixes.len()
    );
    println!("snapshots: {} tables, {routes} routes", snapshots.len());
    println!("vantage points: {}", vps.len());
    println!("ok");
    Ok(())
}

pub fn detect_events(cfg: &PipelineConfig) -> Result<()> {
    let updates = read_archive(&cfg.paths.archive)?;
    let snapshots = read_snapshots(&cfg.paths.snapshots)?;
    let vp_count = all_vp_ids(&updates, &snapshots).len();
    let candidates = detect_candidates(&updates, &snapshots, EVENT_WINDOW_SECS, vp_count);

    let mut out = String::new();
    for c in &candidates {
        let observers: Vec<&str> = c.observers.iter().map(|s| s.as_str()).collect();
        writeln!(
            out,
            "{}|{}|{}|{}|{}",
            c.link.0,
            c.link.1,
            c.prefix,
            c.first_seen,
            observers.join(" ")
        )?;
    }
    let mut m = Manifest::new("detect-events", cfg.pipeline.seed);
    m.record_inputs(&archive_inputs(cfg))?;
    write_artifact(&cfg.output_dir(), CANDIDATES, &out, m)?;
    println!("{} candidate events -> {CANDIDATES}", candidates.len());
    Ok(())
}

fn parse_candidates(path: &Path) -> Result<Vec<CandidateEvent>> {
    let text = read_text(path)?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('|').collect();
        if fields.len() != 5 {
            bail!("{}: line {}: expected 5 fields", path.display(), i + 1);
        }
        out.push(CandidateEvent {
            link: (fields[0].parse()?, fields[1].parse()?),
            prefix: fields[2].to_string(),
            first_seen: fields[3].parse()?,
            observers: fields[4].split_whitespace().map(str::to_string).collect(),
        });
    }
    Ok(out)
}

pub fn sample_events(cfg: &PipelineConfig) -> Result<()> {
    let out_dir = cfg.output_dir();
    let cand_path = require(&out_dir, CANDIDATES, "detect-events")?;
    let candidates = parse_candidates(&cand_path)?;
    if cfg.pipeline.timeframe == (0, 0) {
        return Err(config_err(
            "pipeline.timeframe",
            "a sampling timeframe is required for this stage",
        ));
    }
    let classifier = load_classifier(cfg)?;
    let set = balanced_sample(
        &candidates,
        &classifier,
        cfg.pipeline.periods,
        cfg.pipeline.timeframe,
        cfg.pipeline.seed,
        cfg.pipeline.redraw_cap,
    )
    .map_err(|e| anyhow::anyhow!("sampling failed: {e}"))?;

    for w in &set.warnings {
        eprintln!("warning: {w}");
    }
    let mut out = set.to_lines().join("\n");
    out.push('\n');
    let mut m = Manifest::new("sample-events", cfg.pipeline.seed);
    let mut inputs = archive_inputs(cfg);
    inputs.push(&cand_path);
    if let Some(rel) = &cfg.paths.relationships {
        inputs.push(rel);
    }
    m.record_inputs(&inputs)?;
    write_artifact(&out_dir, EVENTS, &out, m)?;
    println!(
        "{} events over {} periods ({} warnings) -> {EVENTS}",
        set.events.len(),
        set.period_count(),
        set.warnings.len()
    );
    Ok(())
}

/// (period, slot, link, first_seen) rows parsed back from the events file.
fn parse_events(path: &Path) -> Result<Vec<(usize, usize, (u32, u32), u64)>> {
    let text = read_text(path)?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('|').collect();
        if fields.len() != 7 {
            bail!("{}: line {}: expected 7 fields", path.display(), i + 1);
        }
        let period: usize = fields[0].parse()?;
        let ids: Vec<&str> = fields[1].split('-').collect();
        if ids.len() != 2 {
            bail!("{}: line {}: bad category pair", path.display(), i + 1);
        }
        let pair = CategoryPair::new(
            AsCategory::from_id(ids[0].parse()?)
                .with_context(|| format!("{}: line {}: bad category id", path.display(), i + 1))?,
            AsCategory::from_id(ids[1].parse()?)
                .with_context(|| format!("{}: line {}: bad category id", path.display(), i + 1))?,
        );
        let slot = EventSet::slot_of(pair);
        let link = (fields[2].parse()?, fields[3].parse()?);
        let first_seen: u64 = fields[5].parse()?;
        out.push((period, slot, link, first_seen));
    }
    Ok(out)
}

pub fn features(cfg: &PipelineConfig) -> Result<()> {
    let out_dir = cfg.output_dir();
    let events_path = require(&out_dir, EVENTS, "sample-events")?;
    let events = parse_events(&events_path)?;
    let updates = read_archive(&cfg.paths.archive)?;
    let snapshots = read_snapshots(&cfg.paths.snapshots)?;
    let vps = all_vp_ids(&updates, &snapshots);

    let mut out = String::new();
    for &(period, slot, link, first_seen) in &events {
        for vp in &vps {
            let empty = RibTable::new(vp.clone(), 0);
            let snapshot = snapshots.get(vp).unwrap_or(&empty);
            let rib = rib_at(vp, first_seen, snapshot, &updates)
                .map_err(|e| anyhow::anyhow!("replay for {vp}: {e}"))?;
            let graph = build_graph(&rib);
            let v = event_feature_vector(&graph, link);
            let nums: Vec<String> = v.values.iter().map(f64::to_string).collect();
            writeln!(out, "{period}|{slot}|{vp}|{}", nums.join(" "))?;
        }
    }
    let mut m = Manifest::new("features", cfg.pipeline.seed);
    let mut inputs = archive_inputs(cfg);
    inputs.push(&events_path);
    m.record_inputs(&inputs)?;
    write_artifact(&out_dir, FEATURES, &out, m)?;
    println!(
        "{} feature vectors ({} events x {} vps) -> {FEATURES}",
        events.len() * vps.len(),
        events.len(),
        vps.len()
    );
    Ok(())
}

type PeriodVectors = BTreeMap<usize, BTreeMap<(String, usize), FeatureVector>>;

fn parse_features(path: &Path) -> Result<PeriodVectors> {
    let text = read_text(path)?;
    let mut periods: PeriodVectors = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('|').collect();
        if fields.len() != 4 {
            bail!("{}: line {}: expected 4 fields", path.display(), i + 1);
        }
        let period: usize = fields[0].parse()?;
        let slot: usize = fields[1].parse()?;
        let nums: Vec<f64> = fields[3]
            .split_whitespace()
            .map(str::parse)
            .collect::<Result<_, _>>()?;
        if nums.len() != VECTOR_LEN {
            bail!(
                "{}: line {}: expected {VECTOR_LEN} values",
                path.display(),
                i + 1
            );
        }
        let mut values = [0.0; VECTOR_LEN];
        values.copy_from_slice(&nums);
        periods
            .entry(period)
            .or_default()
            .insert((fields[2].to_string(), slot), FeatureVector { values });
    }
    Ok(periods)
}

fn compute_scores(cfg: &PipelineConfig, features_path: &Path) -> Result<RedundancyMatrix> {
    let periods = parse_features(features_path)?;
    if periods.is_empty() {
        bail!("{}: no feature vectors", features_path.display());
    }
    let mut vp_ids: Vec<String> = Vec::new();
    let mut distances = Vec::new();
    for (&period, vectors) in &periods {
        let matrix = assemble_period_matrix(vectors, period, cfg.pipeline.per_period)
            .map_err(|e| anyhow::anyhow!("period {period}: {e}"))?;
        if vp_ids.is_empty() {
            vp_ids = matrix.vp_ids.clone();
        } else if vp_ids != matrix.vp_ids {
            bail!("period {period}: VP set differs from earlier periods");
        }
        let scaled = standard_scale(&matrix).map_err(|e| anyhow::anyhow!("period {period}: {e}"))?;
        distances.push(pairwise_sq_distance(&scaled));
    }
    redundancy_scores(&vp_ids, &distances).map_err(|e| anyhow::anyhow!("scoring failed: {e}"))
}

pub fn score(cfg: &PipelineConfig) -> Result<()> {
    let out_dir = cfg.output_dir();
    let features_path = require(&out_dir, FEATURES, "features")?;
    let matrix = compute_scores(cfg, &features_path)?;

    let mut out = String::from("vp_a,vp_b,score,raw_mean_distance\n");
    for i in 0..matrix.vp_ids.len() {
        for j in (i + 1)..matrix.vp_ids.len() {
            writeln!(
                out,
                "{},{},{},{}",
                matrix.vp_ids[i],
                matrix.vp_ids[j],
                matrix.scores[i][j],
                matrix.raw_mean_distances[i][j]
            )?;
        }
    }
    let mut m = Manifest::new("score", cfg.pipeline.seed);
    m.record_inputs(&[&features_path])?;
    write_artifact(&out_dir, SCORES, &out, m)?;
    println!("{} vp pairs -> {SCORES}", matrix.vp_ids.len() * (matrix.vp_ids.len() - 1) / 2);
    Ok(())
}

fn parse_scores(path: &Path) -> Result<RedundancyMatrix> {
    let text = read_text(path)?;
    let mut pairs: BTreeMap<(String, String), (f64, f64)> = BTreeMap::new();
    let mut vps: BTreeSet<String> = BTreeSet::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 || line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            bail!("{}: line {}: expected 4 columns", path.display(), i + 1);
        }
        vps.insert(fields[0].to_string());
        vps.insert(fields[1].to_string());
        pairs.insert(
            (fields[0].to_string(), fields[1].to_string()),
            (fields[2].parse()?, fields[3].parse()?),
        );
    }
    let vp_ids: Vec<String> = vps.into_iter().collect();
    let n = vp_ids.len();
    let mut scores = vec![vec![0.0; n]; n];
    let mut raw = vec![vec![0.0; n]; n];
    for i in 0..n {
        scores[i][i] = 1.0;
        for j in (i + 1)..n {
            let key = (vp_ids[i].clone(), vp_ids[j].clone());
            let alt = (vp_ids[j].clone(), vp_ids[i].clone());
            let &(s, d) = pairs
                .get(&key)
                .or_else(|| pairs.get(&alt))
                .with_context(|| {
                    format!("{}: missing pair {} / {}", path.display(), vp_ids[i], vp_ids[j])
                })?;
            scores[i][j] = s;
            scores[j][i] = s;
            raw[i][j] = d;
            raw[j][i] = d;
        }
    }
    Ok(RedundancyMatrix {
        vp_ids,
        scores,
        raw_mean_distances: raw,
    })
}

pub fn select(cfg: &PipelineConfig, alpha: Option<f64>, budget: Option<f64>) -> Result<()> {
    let out_dir = cfg.output_dir();
    let scores_path = require(&out_dir, SCORES, "score")?;
    let matrix = parse_scores(&scores_path)?;

    if cfg.pipeline.volume_windows.is_empty() {
        return Err(config_err(
            "pipeline.volume_windows",
            "at least one sample window is required for selection",
        ));
    }
    let alpha = alpha.unwrap_or(cfg.pipeline.alpha);
    let budget = budget.unwrap_or(cfg.pipeline.budget);
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(config_err("pipeline.alpha", "must be in (0, 1]"));
    }
    if !(budget > 0.0) {
        return Err(config_err("pipeline.budget", "must be positive"));
    }

    let updates = read_archive(&cfg.paths.archive)?;
    let mut estimates = BTreeMap::new();
    for vp in &matrix.vp_ids {
        let v = estimate_volume(&updates, vp, &cfg.pipeline.volume_windows)
            .map_err(|e| anyhow::anyhow!("volume estimation for {vp}: {e}"))?;
        estimates.insert(vp.clone(), v);
    }
    let volumes = VolumeProfile {
        estimates,
        sample_count: cfg.pipeline.volume_windows.len(),
    };
    let result = greedy_select(&matrix, &volumes, alpha, budget)
        .map_err(|e| anyhow::anyhow!("selection failed: {e}"))?;

    let mut out = String::from("rank,vp_id,max_redundancy,volume,cumulative_volume\n");
    for (rank, pick) in result.picks.iter().enumerate() {
        writeln!(
            out,
            "{},{},{},{},{}",
            rank + 1,
            pick.vp_id,
            pick.max_redundancy,
            pick.volume,
            pick.cumulative_volume
        )?;
    }
    let mut m = Manifest::new("select", cfg.pipeline.seed);
    let mut inputs = archive_inputs(cfg);
    inputs.push(&scores_path);
    m.record_inputs(&inputs)?;
    write_artifact(&out_dir, SELECTION, &out, m)?;
    println!(
        "selected {} of {} vps, volume {} -> {SELECTION}",
        result.picks.len(),
        matrix.vp_ids.len(),
        result.final_volume()
    );
    Ok(())
}

/// The AS a VP sits in: the most frequent first hop across its snapshot
/// routes and announcements; ties favor the lower ASN.
fn vp_as_map(
    updates: &[BgpUpdate],
    snapshots: &BTreeMap<String, RibTable>,
) -> BTreeMap<String, u32> {
    let mut counts: BTreeMap<String, BTreeMap<u32, usize>> = BTreeMap::new();
    for (vp, rib) in snapshots {
        for entry in rib.routes.values() {
            if let Some(&first) = entry.as_path.first() {
                *counts.entry(vp.clone()).or_default().entry(first).or_insert(0) += 1;
            }
        }
    }
    for u in updates {
        if u.kind == UpdateKind::Announce {
            if let Some(&first) = u.as_path.first() {
                *counts
                    .entry(u.vp_id.clone())
                    .or_default()
                    .entry(first)
                    .or_insert(0) += 1;
            }
        }
    }
    counts
        .into_iter()
        .filter_map(|(vp, by_asn)| {
            by_asn
                .into_iter()
                .max_by_key(|&(asn, c)| (c, std::cmp::Reverse(asn)))
                .map(|(asn, _)| (vp, asn))
        })
        .collect()
}

fn union_adjacency(
    updates: &[BgpUpdate],
    snapshots: &BTreeMap<String, RibTable>,
) -> BTreeMap<u32, BTreeSet<u32>> {
    let mut adj: BTreeMap<u32, BTreeSet<u32>> = BTreeMap::new();
    let mut add_path = |path: &[u32]| {
        for pair in collapse_path(path).windows(2) {
            adj.entry(pair[0]).or_default().insert(pair[1]);
            adj.entry(pair[1]).or_default().insert(pair[0]);
        }
    };
    for rib in snapshots.values() {
        for entry in rib.routes.values() {
            add_path(&entry.as_path);
        }
    }
    for u in updates {
        if u.kind == UpdateKind::Announce {
            add_path(&u.as_path);
        }
    }
    adj
}

pub fn benchmark(cfg: &PipelineConfig, target: Option<f64>) -> Result<()> {
    let target = target.unwrap_or(cfg.pipeline.target);
    if !(target > 0.0 && target <= 1.0) {
        return Err(config_err("pipeline.target", "must be in (0, 1]"));
    }
    let updates = read_archive(&cfg.paths.archive)?;
    let snapshots = read_snapshots(&cfg.paths.snapshots)?;
    let gt = detectors(&snapshots, &updates);
    let vps = gt.vp_ids();
    if vps.is_empty() {
        bail!("no vantage points in the archive");
    }
    let classifier = load_classifier(cfg)?;
    let vp_asns = vp_as_map(&updates, &snapshots);
    let categories = vp_asns
        .iter()
        .map(|(vp, &asn)| (vp.clone(), classifier.classify(asn)))
        .collect();
    let ctx = BaselineContext {
        vp_asns,
        union_adjacency: union_adjacency(&updates, &snapshots),
        categories,
    };

    let baselines = [
        (BaselineStrategy::Random, "random"),
        (BaselineStrategy::AsDistance, "as_distance"),
        (BaselineStrategy::Unbiased, "unbiased"),
    ];
    let mut out = String::from("use_case,target,strategy,updates_processed,reduction_factor\n");
    for use_case in UseCase::ALL {
        let objective = ObjectiveSpec {
            use_case,
            target_fraction: target,
        };
        let greedy = greedy_specific_usecase(use_case, &gt);
        let g_len = smallest_meeting_prefix(&objective, &greedy, &gt, "greedy_specific")
            .map_err(|e| anyhow::anyhow!("{}: {e}", use_case.name()))?;
        writeln!(
            out,
            "{},{target},greedy_specific,{},1",
            use_case.name(),
            gt.updates_processed(&greedy[..g_len])
        )?;
        for (strategy, name) in baselines {
            let order = naive_baselines(strategy, &vps, vps.len(), cfg.pipeline.seed, &ctx)
                .map_err(|e| anyhow::anyhow!("{name}: {e}"))?;
            let b_len = smallest_meeting_prefix(&objective, &order, &gt, name)
                .map_err(|e| anyhow::anyhow!("{}: {e}", use_case.name()))?;
            let factor = reduction_factor(&objective, &order, &greedy, &gt)
                .map_err(|e| anyhow::anyhow!("{}: {e}", use_case.name()))?;
            writeln!(
                out,
                "{},{target},{name},{},{}",
                use_case.name(),
                gt.updates_processed(&order[..b_len]),
                factor
            )?;
        }
    }
    let mut m = Manifest::new("benchmark", cfg.pipeline.seed);
    let mut inputs = archive_inputs(cfg);
    if let Some(rel) = &cfg.paths.relationships {
        inputs.push(rel);
    }
    m.record_inputs(&inputs)?;
    write_artifact(&cfg.output_dir(), BENCHMARK, &out, m)?;
    println!("{} objectives x 4 strategies -> {BENCHMARK}", UseCase::ALL.len());
    Ok(())
}

pub fn parse_k_sweep(spec: &str) -> Result<Vec<usize>> {
    let mut ks = BTreeSet::new();
    for item in spec.split(',') {
        let parts: Vec<&str> = item.split(':').collect();
        match parts.as_slice() {
            [one] => {
                ks.insert(one.trim().parse::<usize>().context("bad k value")?);
            }
            [lo, hi] | [lo, hi, _] => {
                let lo: usize = lo.trim().parse().context("bad k range start")?;
                let hi: usize = hi.trim().parse().context("bad k range end")?;
                let step: usize = if let [_, _, s] = parts.as_slice() {
                    s.trim().parse().context("bad k range step")?
                } else {
                    1
                };
                if step == 0 || hi < lo {
                    bail!("bad k range `{item}`");
                }
                ks.extend((lo..=hi).step_by(step));
            }
            _ => bail!("bad k sweep item `{item}`"),
        }
    }
    if ks.is_empty() {
        bail!("empty k sweep");
    }
    Ok(ks.into_iter().collect())
}

pub fn parse_strategies(spec: &str) -> Result<Vec<DeployStrategy>> {
    let mut out = Vec::new();
    for name in spec.split(',') {
        let name = name.trim();
        let s = DeployStrategy::ALL
            .into_iter()
            .find(|s| s.name() == name)
            .with_context(|| format!("unknown strategy `{name}`"))?;
        if !out.contains(&s) {
            out.push(s);
        }
    }
    Ok(out)
}

pub fn simulate(
    cfg: &PipelineConfig,
    n: usize,
    k_sweep: &str,
    strategies: &str,
    seeds: u64,
    jobs: usize,
) -> Result<()> {
    let ks = parse_k_sweep(k_sweep)?;
    let strategies = parse_strategies(strategies)?;
    if let Some(&k) = ks.iter().find(|&&k| k == 0 || k > n) {
        bail!("k = {k} outside 1..={n}");
    }
    if seeds == 0 {
        bail!("need at least one seed");
    }
    let base = cfg.pipeline.seed;
    let seed_list: Vec<u64> = (0..seeds).map(|i| base + i).collect();

    // one topology + routing fixed point per seed; coverage for every
    // (strategy, k) on top of it
    let run_seed = |seed: u64| -> Result<Vec<String>> {
        let params = TopologyParams {
            n,
            ..TopologyParams::default()
        };
        let topo = generate_topology(params, seed)
            .map_err(|e| anyhow::anyhow!("seed {seed}: {e}"))?;
        let ribs = propagate_routes(&topo).map_err(|e| anyhow::anyhow!("seed {seed}: {e}"))?;
        let mut rows = Vec::new();
        for &strategy in &strategies {
            for &k in &ks {
                let (_, cov) = deploy_and_measure(&topo, &ribs, strategy, k, seed)
                    .map_err(|e| anyhow::anyhow!("seed {seed}: {e}"))?;
                rows.push(format!(
                    "{},{k},{seed},{},{}",
                    strategy.name(),
                    cov.p2p,
                    cov.c2p
                ));
            }
        }
        Ok(rows)
    };

    let jobs = jobs.max(1).min(seed_list.len());
    let mut per_seed: Vec<Result<Vec<String>>> = Vec::with_capacity(seed_list.len());
    if jobs == 1 {
        for &seed in &seed_list {
            per_seed.push(run_seed(seed));
        }
    } else {
        let mut slots: Vec<Option<Result<Vec<String>>>> =
            (0..seed_list.len()).map(|_| None).collect();
        std::thread::scope(|scope| {
            for (chunk_ids, chunk_slots) in seed_list
                .chunks(seed_list.len().div_ceil(jobs))
                .zip(slots.chunks_mut(seed_list.len().div_ceil(jobs)))
            {
                scope.spawn(|| {
                    for (&seed, slot) in chunk_ids.iter().zip(chunk_slots.iter_mut()) {
                        *slot = Some(run_seed(seed));
                    }
                });
            }
        });
        per_seed.extend(slots.into_iter().map(|s| s.expect("worker finished")));
    }

    // stable output order regardless of worker scheduling: strategy (as
    // given), then k, then seed
    let mut by_seed: Vec<Vec<String>> = Vec::new();
    for r in per_seed {
        by_seed.push(r?);
    }
    let mut out = String::from("strategy,k,seed,p2p_coverage,c2p_coverage\n");
    for si in 0..strategies.len() {
        for ki in 0..ks.len() {
            for rows in &by_seed {
                out.push_str(&rows[si * ks.len() + ki]);
                out.push('\n');
            }
        }
    }
    let m = Manifest::new("simulate", base);
    write_artifact(&cfg.output_dir(), SIMULATE, &out, m)?;
    println!(
        "{} rows ({} strategies x {} k x {} seeds) -> {SIMULATE}",
        strategies.len() * ks.len() * seed_list.len(),
        strategies.len(),
        ks.len(),
        seed_list.len()
    );
    Ok(())
}
