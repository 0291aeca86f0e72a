//! Release gate: one test per exit criterion, each printing a single
//! pass/fail line (run with `--nocapture` to see them).

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use vpset_core::evaldefs::{
    detectors, is_redundant, reduction_factor, AnnotatedUpdate, DefinitionLevel, ObjectiveSpec,
    PriorState, UseCase,
};
use vpset_core::events::{balanced_sample, AsCategory, AsClassifier, CandidateEvent};
use vpset_core::features::{
    event_feature_vector, node_features, pair_features, FeatureVector, VECTOR_LEN,
    WEIGHTED_FEATURES,
};
use vpset_core::graph::{build_graph, VpGraph};
use vpset_core::ingest::{parse_update_line, rib_at, BgpUpdate, RibTable, UpdateKind};
use vpset_core::minimet::{
    deploy_and_measure, generate_topology, propagate_routes, DeployStrategy, TopologyParams,
};
use vpset_core::redundancy::{
    assemble_period_matrix, pairwise_sq_distance, redundancy_scores, standard_scale,
};
use vpset_core::selection::{greedy_select, VolumeProfile};

fn report<F: FnOnce() -> Result<(), String>>(n: usize, name: &str, f: F) {
    match f() {
        Ok(()) => println!("acceptance {n} ({name}): pass"),
        Err(msg) => {
            println!("acceptance {n} ({name}): fail - {msg}");
            panic!("acceptance {n} ({name}) failed: {msg}");
        }
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Criteria 1 and 2 share the 20 simulated topologies.
#[test]
fn simulator_criteria() {
    let start = Instant::now();
    let mut greedy_p2p = Vec::new();
    let mut random_p2p = Vec::new();
    let mut distance_p2p = Vec::new();
    let mut full_ok = true;
    for seed in 0..20u64 {
        let topo = generate_topology(TopologyParams::default(), seed).unwrap();
        let ribs = propagate_routes(&topo).unwrap();
        let (_, g) =
            deploy_and_measure(&topo, &ribs, DeployStrategy::GreedySpecific, 20, seed).unwrap();
        let (_, r) = deploy_and_measure(&topo, &ribs, DeployStrategy::Random, 20, seed).unwrap();
        let (_, d) =
            deploy_and_measure(&topo, &ribs, DeployStrategy::DistanceBased, 20, seed).unwrap();
        greedy_p2p.push(g.p2p);
        random_p2p.push(r.p2p);
        distance_p2p.push(d.p2p);
        let (_, full) =
            deploy_and_measure(&topo, &ribs, DeployStrategy::Random, 600, seed).unwrap();
        full_ok &= full.p2p == 1.0 && full.c2p == 1.0;
    }
    let elapsed = start.elapsed().as_secs_f64();
    let (gm, rm, dm) = (
        median(greedy_p2p),
        median(random_p2p),
        median(distance_p2p),
    );
    report(1, "mini-internet strategy ordering", || {
        if gm < 2.5 * rm {
            return Err(format!(
                "greedy median p2p {gm:.3} < 2.5x random median {rm:.3}"
            ));
        }
        if dm > rm {
            return Err(format!(
                "distance-based median {dm:.3} exceeds random median {rm:.3}"
            ));
        }
        if elapsed > 600.0 {
            return Err(format!("simulations took {elapsed:.0}s > 600s"));
        }
        Ok(())
    });
    report(2, "full deployment sees every link", || {
        if full_ok {
            Ok(())
        } else {
            Err("some seed missed links at k = n".to_string())
        }
    });
}

/// A small synthetic archive: ten VPs with structurally different tables,
/// two of them byte-identical apart from the VP id column.
fn clone_archive() -> (Vec<String>, BTreeMap<String, Vec<String>>) {
    let vp_ids: Vec<String> = (0..10).map(|i| format!("vp{i:02}")).collect();
    let mut lines = BTreeMap::new();
    for (i, vp) in vp_ids.iter().enumerate() {
        // vp09 mirrors vp03's routes exactly
        let shape = if i == 9 { 3 } else { i };
        let mut ls = Vec::new();
        for copy in 0..=shape {
            ls.push(format!(
                "{}|{vp}|A|10.0.{copy}.0/24|1 2 3 4|",
                100 + copy
            ));
        }
        ls.push(format!("{}|{vp}|A|10.1.0.0/24|1 2 5|64496:{shape}", 200));
        ls.push(format!("{}|{vp}|A|10.2.0.0/24|2 3 {}|", 210, 30 + shape));
        if shape % 2 == 0 {
            ls.push(format!("{}|{vp}|A|10.3.0.0/24|3 4 1|", 220));
        }
        lines.insert(vp.clone(), ls);
    }
    (vp_ids, lines)
}

fn archive_graphs(
    vp_ids: &[String],
    lines: &BTreeMap<String, Vec<String>>,
) -> BTreeMap<String, VpGraph> {
    vp_ids
        .iter()
        .map(|vp| {
            let updates: Vec<BgpUpdate> = lines[vp]
                .iter()
                .enumerate()
                .map(|(no, l)| parse_update_line(l, no + 1).unwrap())
                .collect();
            let rib = rib_at(vp, 10_000, &RibTable::new(vp.clone(), 0), &updates).unwrap();
            (vp.clone(), build_graph(&rib))
        })
        .collect()
}

fn clone_scores() -> (
    Vec<String>,
    vpset_core::redundancy::RedundancyMatrix,
    Vec<Vec<f64>>,
) {
    let (vp_ids, lines) = clone_archive();
    let graphs = archive_graphs(&vp_ids, &lines);
    let links = [(1u32, 2u32), (2, 3), (3, 4)];
    let mut cells = BTreeMap::new();
    for vp in &vp_ids {
        for (slot, &link) in links.iter().enumerate() {
            cells.insert((vp.clone(), slot), event_feature_vector(&graphs[vp], link));
        }
    }
    let raw = assemble_period_matrix(&cells, 0, links.len()).unwrap();
    let raw_dist = pairwise_sq_distance(&raw);
    let scaled = standard_scale(&raw).unwrap();
    let dist = pairwise_sq_distance(&scaled);
    let scores = redundancy_scores(&vp_ids, &[dist]).unwrap();
    (vp_ids, scores, raw_dist)
}

#[test]
fn clone_discrimination_criterion() {
    report(3, "byte-identical clones score 1.0 and are split", || {
        let (vp_ids, scores, raw_dist) = clone_scores();
        let (a, b) = (3usize, 9usize); // the clone pair
        if raw_dist[a][b].abs() > 1e-9 {
            return Err(format!("pre-scaling clone distance {}", raw_dist[a][b]));
        }
        let s = scores.score("vp03", "vp09").unwrap();
        if (s - 1.0).abs() > 1e-9 {
            return Err(format!("clone score {s}"));
        }
        let volumes = VolumeProfile {
            estimates: vp_ids.iter().map(|v| (v.clone(), 10.0)).collect(),
            sample_count: 1,
        };
        let sel = greedy_select(&scores, &volumes, 0.25, 1e12).unwrap();
        let order = sel.vp_ids();
        let first_clone = order.iter().position(|v| v == "vp03" || v == "vp09");
        let second_clone = order.iter().rposition(|v| v == "vp03" || v == "vp09");
        if let (Some(f), Some(s)) = (first_clone, second_clone) {
            if f != s && s < 9 {
                return Err(format!("both clones within the first {} picks", s + 1));
            }
        }
        Ok(())
    });
}

// ---- brute-force feature oracle ------------------------------------------

fn oracle_all_pairs(g: &VpGraph) -> BTreeMap<(u32, u32), f64> {
    // Floyd-Warshall over edge lengths 1/weight
    let nodes: Vec<u32> = g.nodes().into_iter().collect();
    let mut d: BTreeMap<(u32, u32), f64> = BTreeMap::new();
    for &a in &nodes {
        for &b in &nodes {
            let v = if a == b {
                0.0
            } else if let Some(w) = g.weight(a, b) {
                1.0 / w as f64
            } else {
                f64::INFINITY
            };
            d.insert((a, b), v);
        }
    }
    for &k in &nodes {
        for &a in &nodes {
            for &b in &nodes {
                let via = d[&(a, k)] + d[&(k, b)];
                if via < d[&(a, b)] {
                    d.insert((a, b), via);
                }
            }
        }
    }
    d
}

fn oracle_node(g: &VpGraph, asn: u32, d: &BTreeMap<(u32, u32), f64>) -> [f64; 6] {
    if !g.contains_node(asn) {
        return [0.0; 6];
    }
    let nodes: Vec<u32> = g.nodes().into_iter().collect();
    let n = nodes.len();
    let reach: Vec<f64> = nodes
        .iter()
        .filter(|&&b| b != asn && d[&(asn, b)].is_finite())
        .map(|&b| d[&(asn, b)])
        .collect();
    let r = reach.len() + 1;
    let sum: f64 = reach.iter().sum();
    let closeness = if n > 1 && sum > 0.0 {
        ((r - 1) as f64 / (n - 1) as f64) * ((r - 1) as f64 / sum)
    } else {
        0.0
    };
    let harmonic: f64 = reach.iter().map(|x| 1.0 / x).sum();
    let ecc = reach.iter().cloned().fold(0.0, f64::max);
    let nbrs: Vec<(u32, u64)> = g.neighbors(asn).collect();
    let wsum: f64 = nbrs.iter().map(|&(_, w)| w as f64).sum();
    let avg_nbr = if wsum > 0.0 {
        nbrs.iter()
            .map(|&(b, w)| w as f64 * g.strength(b) as f64)
            .sum::<f64>()
            / wsum
    } else {
        0.0
    };
    let mut triangles = 0.0;
    let mut intensity = 0.0;
    for i in 0..nbrs.len() {
        for j in i + 1..nbrs.len() {
            if let Some(w) = g.weight(nbrs[i].0, nbrs[j].0) {
                triangles += 1.0;
                intensity +=
                    (nbrs[i].1 as f64 * nbrs[j].1 as f64 * w as f64).cbrt();
            }
        }
    }
    let k = nbrs.len() as f64;
    let clustering = if k >= 2.0 {
        2.0 * intensity / (k * (k - 1.0))
    } else {
        0.0
    };
    [closeness, harmonic, avg_nbr, ecc, triangles, clustering]
}

fn oracle_pair(g: &VpGraph, a: u32, b: u32) -> [f64; 3] {
    let na: BTreeSet<u32> = g.neighbors(a).map(|(x, _)| x).collect();
    let nb: BTreeSet<u32> = g.neighbors(b).map(|(x, _)| x).collect();
    let inter = na.intersection(&nb).count() as f64;
    let union = na.union(&nb).count() as f64;
    let jaccard = if union > 0.0 { inter / union } else { 0.0 };
    let aa: f64 = na
        .intersection(&nb)
        .filter(|&&z| g.degree(z) > 1)
        .map(|&z| 1.0 / (g.degree(z) as f64).ln())
        .sum();
    [jaccard, aa, (na.len() * nb.len()) as f64]
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

fn random_graph(rng: &mut ChaCha8Rng) -> VpGraph {
    let n = rng.gen_range(3u32..=50);
    let mut rib = RibTable::new("vp1", 0);
    let target_edges = rng.gen_range(n..4 * n);
    for e in 0..target_edges {
        let a = rng.gen_range(1..=n);
        let b = rng.gen_range(1..=n);
        if a == b {
            continue;
        }
        let copies = rng.gen_range(1..=5);
        for c in 0..copies {
            rib.routes.insert(
                format!("10.{e}.{c}.0/24"),
                vpset_core::ingest::RouteEntry {
                    as_path: vec![a, b],
                    communities: BTreeSet::new(),
                    last_update_time: 0,
                },
            );
        }
    }
    build_graph(&rib)
}

fn scale_weights(g: &VpGraph, c: u64) -> VpGraph {
    let mut rib = RibTable::new("vp1", 0);
    for (i, ((a, b), w)) in g.edges().into_iter().enumerate() {
        for copy in 0..w * c {
            rib.routes.insert(
                format!("10.{i}.{copy}.0/24"),
                vpset_core::ingest::RouteEntry {
                    as_path: vec![a, b],
                    communities: BTreeSet::new(),
                    last_update_time: 0,
                },
            );
        }
    }
    build_graph(&rib)
}

#[test]
fn feature_oracle_criterion() {
    report(4, "features match brute force; weighted set scales", || {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for case in 0..200 {
            let g = random_graph(&mut rng);
            let d = oracle_all_pairs(&g);
            for asn in g.nodes() {
                let got = node_features(&g, asn);
                let want = oracle_node(&g, asn, &d);
                for (i, (x, y)) in got.iter().zip(&want).enumerate() {
                    if !close(*x, *y) {
                        return Err(format!(
                            "case {case} node {asn} feature {i}: {x} vs oracle {y}"
                        ));
                    }
                }
            }
            let nodes: Vec<u32> = g.nodes().into_iter().collect();
            for _ in 0..20 {
                let a = nodes[rng.gen_range(0..nodes.len())];
                let b = nodes[rng.gen_range(0..nodes.len())];
                let got = pair_features(&g, a, b);
                let want = oracle_pair(&g, a, b);
                for (i, (x, y)) in got.iter().zip(&want).enumerate() {
                    if !close(*x, *y) {
                        return Err(format!(
                            "case {case} pair ({a},{b}) feature {i}: {x} vs oracle {y}"
                        ));
                    }
                }
            }
        }

        // uniform weight scaling flips exactly the weighted node features
        let mut changed = [false; 6];
        let mut pair_changed = [false; 3];
        for seed in 0..10u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
            let g = random_graph(&mut rng);
            let scaled = scale_weights(&g, 7);
            for asn in g.nodes() {
                let x = node_features(&g, asn);
                let y = node_features(&scaled, asn);
                for i in 0..6 {
                    if !close(x[i], y[i]) {
                        changed[i] = true;
                    }
                }
            }
            let nodes: Vec<u32> = g.nodes().into_iter().collect();
            for &a in &nodes {
                for &b in &nodes {
                    let x = pair_features(&g, a, b);
                    let y = pair_features(&scaled, a, b);
                    for i in 0..3 {
                        if !close(x[i], y[i]) {
                            pair_changed[i] = true;
                        }
                    }
                }
            }
        }
        // node feature indices 0,1,2,3,5 are the weighted five; 4 and the
        // three pair features must be invariant
        let expected = [true, true, true, true, false, true];
        if changed != expected {
            return Err(format!("node features changed: {changed:?}"));
        }
        if pair_changed != [false; 3] {
            return Err(format!("pair features changed: {pair_changed:?}"));
        }
        assert_eq!(WEIGHTED_FEATURES, [0, 1, 2, 3, 5]);
        Ok(())
    });
}

#[test]
fn pipeline_invariants_criterion() {
    report(5, "scaling stats and score matrix bounds", || {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let n_vps = rng.gen_range(3..8);
            let mut cells = BTreeMap::new();
            for i in 0..n_vps {
                let mut fv = FeatureVector {
                    values: [0.0; VECTOR_LEN],
                };
                for v in fv.values.iter_mut() {
                    *v = rng.gen_range(-50.0..50.0);
                }
                cells.insert((format!("vp{i:02}"), 0usize), fv);
            }
            let m = assemble_period_matrix(&cells, 0, 1).unwrap();
            let scaled = standard_scale(&m).unwrap();
            let n = scaled.rows.len() as f64;
            for c in scaled.live_columns() {
                let col: Vec<f64> = scaled.rows.iter().map(|r| r[c]).collect();
                let mean = col.iter().sum::<f64>() / n;
                let var = col.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
                let sigma = var.sqrt();
                if mean.abs() >= 1e-9 {
                    return Err(format!("column {c} mean {mean}"));
                }
                if sigma > 0.0 && (sigma - 1.0).abs() >= 1e-9 {
                    return Err(format!("column {c} sigma {sigma}"));
                }
            }
            let vp_ids = scaled.vp_ids.clone();
            let dist = pairwise_sq_distance(&scaled);
            let Ok(scores) = redundancy_scores(&vp_ids, &[dist]) else {
                continue; // degenerate spread is rejected upstream
            };
            let s = &scores.scores;
            let mut off = Vec::new();
            for i in 0..s.len() {
                for j in 0..s.len() {
                    if !(0.0..=1.0).contains(&s[i][j]) {
                        return Err(format!("score out of range: {}", s[i][j]));
                    }
                    if s[i][j] != s[j][i] {
                        return Err("asymmetric score matrix".to_string());
                    }
                    if i != j {
                        off.push(s[i][j]);
                    }
                }
            }
            let min = off.iter().cloned().fold(f64::INFINITY, f64::min);
            let max = off.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            if min != 0.0 || max != 1.0 {
                return Err(format!("off-diagonal extremes {min}/{max}"));
            }
        }
        Ok(())
    });
}

#[test]
fn definition_nesting_criterion() {
    report(6, "definition nesting over 10k generated pairs", || {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mut asymmetry_witness = false;
        let gen_update = |rng: &mut ChaCha8Rng| {
            let path: Vec<u32> = (0..rng.gen_range(1..5))
                .map(|_| rng.gen_range(1..7))
                .collect();
            let comms: BTreeSet<String> = (0..rng.gen_range(0..3))
                .map(|_| format!("64496:{}", rng.gen_range(0..4)))
                .collect();
            let u = BgpUpdate {
                timestamp: rng.gen_range(0..500),
                vp_id: format!("vp{}", rng.gen_range(0..3)),
                kind: UpdateKind::Announce,
                prefix: format!("10.{}.0.0/16", rng.gen_range(0..2)),
                as_path: path,
                communities: comms,
            };
            let prior = if rng.gen_bool(0.5) {
                PriorState::default()
            } else {
                PriorState {
                    as_path: Some(
                        (0..rng.gen_range(1..4))
                            .map(|_| rng.gen_range(1..7))
                            .collect(),
                    ),
                    communities: (0..rng.gen_range(0..2))
                        .map(|_| format!("64496:{}", rng.gen_range(0..4)))
                        .collect(),
                }
            };
            AnnotatedUpdate::new(u, &prior)
        };
        for i in 0..10_000 {
            let u1 = gen_update(&mut rng);
            let u2 = gen_update(&mut rng);
            let d1 = is_redundant(DefinitionLevel::Prefix, &u1, &u2);
            let d2 = is_redundant(DefinitionLevel::PrefixAndPath, &u1, &u2);
            let d3 = is_redundant(DefinitionLevel::PrefixPathAndCommunity, &u1, &u2);
            if (d3 && !d2) || (d2 && !d1) {
                return Err(format!("nesting violated at case {i}"));
            }
            if d2 != is_redundant(DefinitionLevel::PrefixAndPath, &u2, &u1) {
                asymmetry_witness = true;
            }
        }
        if !asymmetry_witness {
            return Err("no asymmetry witness generated".to_string());
        }
        Ok(())
    });
}

#[test]
fn balanced_sampler_criterion() {
    report(7, "balanced sampler fills all 15 pair slots", || {
        // two ASes per category: n and n+10
        let classifier = AsClassifier {
            customers: [
                (2u32, [1u32].into_iter().collect::<BTreeSet<u32>>()),
                (12, [11].into_iter().collect()),
                (3, [1, 2].into_iter().collect()),
                (13, [11, 12].into_iter().collect()),
            ]
            .into_iter()
            .collect(),
            customer_cones: [(2u32, 1u64), (12, 1), (3, 100), (13, 100)]
                .into_iter()
                .collect(),
            tier1: [5, 15].into_iter().collect(),
            hypergiants: [4, 14].into_iter().collect(),
        };
        let p = 20usize;
        // room for 6x the requested periods so random placement fits
        let timeframe = (0u64, p as u64 * 600 * 6);
        let mut candidates = Vec::new();
        for a in 1..=5u32 {
            for b in a..=5u32 {
                for t in (0..timeframe.1).step_by(60) {
                    candidates.push(CandidateEvent {
                        link: (a.min(b + 10), a.max(b + 10)),
                        prefix: format!("10.{a}.{b}.0/24"),
                        first_seen: t,
                        observers: ["vpA".to_string(), "vpB".to_string()].into_iter().collect(),
                    });
                }
            }
        }
        let set = balanced_sample(&candidates, &classifier, p, timeframe, 5, 50)
            .map_err(|e| format!("{e:?}"))?;
        if !set.warnings.is_empty() {
            return Err(format!("warnings: {:?}", set.warnings));
        }
        if !set.is_fully_filled() {
            return Err("sampler left empty slots".to_string());
        }
        if set.events.len() != p * 15 {
            return Err(format!("{} events, wanted {}", set.events.len(), p * 15));
        }
        for period in 0..p {
            let mut pairs = BTreeSet::new();
            for ((per, pair), _) in set.events.iter().filter(|((per, _), _)| *per == period) {
                assert_eq!(*per, period);
                if !pairs.insert(*pair) {
                    return Err(format!("period {period} repeats pair {pair:?}"));
                }
            }
            if pairs.len() != 15 {
                return Err(format!("period {period} holds {} pairs", pairs.len()));
            }
        }
        let _ = AsCategory::ALL; // category ids 1..=5 back the 15 pairs
        Ok(())
    });
}

#[test]
fn selection_budget_criterion() {
    report(8, "budget prefix monotonicity and self reduction", || {
        let (vp_ids, scores, _) = clone_scores();
        let volumes = VolumeProfile {
            estimates: vp_ids
                .iter()
                .enumerate()
                .map(|(i, v)| (v.clone(), 5.0 + i as f64))
                .collect(),
            sample_count: 1,
        };
        let budgets = [12.0, 20.0, 33.0, 47.0, 60.0, 95.0];
        let mut prev: Option<(f64, Vec<String>)> = None;
        for &b in &budgets {
            let sel = greedy_select(&scores, &volumes, 0.25, b).unwrap();
            if sel.final_volume() > b {
                return Err(format!(
                    "budget {b}: final volume {}",
                    sel.final_volume()
                ));
            }
            let ids = sel.vp_ids();
            if let Some((pb, prev_ids)) = &prev {
                if ids.len() < prev_ids.len() || &ids[..prev_ids.len()] != &prev_ids[..] {
                    return Err(format!(
                        "selection({pb}) is not a prefix of selection({b})"
                    ));
                }
            }
            prev = Some((b, ids));
        }

        // a selector measured against itself reduces nothing
        let updates: Vec<BgpUpdate> = [
            "0|a|A|10.0.0.0/24|1 2|",
            "0|b|A|10.1.0.0/24|3 4|",
            "5|b|A|10.2.0.0/24|3 5|",
        ]
        .iter()
        .enumerate()
        .map(|(i, l)| parse_update_line(l, i + 1).unwrap())
        .collect();
        let gt = detectors(&BTreeMap::new(), &updates);
        let order = vec!["a".to_string(), "b".to_string()];
        let obj = ObjectiveSpec {
            use_case: UseCase::TopologyLinks,
            target_fraction: 1.0,
        };
        let rf = reduction_factor(&obj, &order, &order, &gt).map_err(|e| format!("{e}"))?;
        if rf != 1.0 {
            return Err(format!("self reduction factor {rf}"));
        }
        Ok(())
    });
}
