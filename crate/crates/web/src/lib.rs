//! Browser bindings for the demo page in `www/`. Every exported function
//! returns a JSON string: `{"ok": true, ...}` or `{"ok": false, "error": ...}`.

use mentionnet::communities::{detect_tag_rings, find_communities, RingParams};
use mentionnet::graphstats::{
    degree_sequence, render_degree_plot, render_matrix, tail_exponent, DegreeKind, TailMethod,
};
use mentionnet::mention::{mine, MineOptions};
use mentionnet::netbuild::{build_graph, to_adjacency, BuildConfig, MentionGraph, Ordering};
use mentionnet::synthgen::{generate, planted_partition_graph, PlantedSpec, RingSpec};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

/// Largest matrix the page will draw.
pub const MAX_MATRIX: usize = 400;

fn respond(result: Result<Value, String>) -> String {
    match result {
        Ok(mut v) => {
            v["ok"] = json!(true);
            v.to_string()
        }
        Err(e) => json!({"ok": false, "error": e}).to_string(),
    }
}

fn corpus_graph(spec: &PlantedSpec) -> Result<MentionGraph, String> {
    let corpus = generate(spec).map_err(|e| e.to_string())?;
    let mined = mine(&corpus.records, MineOptions::default());
    let cfg = BuildConfig {
        n1: spec.n_users.max(1),
        n2: spec.n_users.max(1),
        ..Default::default()
    };
    Ok(build_graph(&mined, &cfg).map_err(|e| e.to_string())?.graph)
}

pub fn rings_inner(
    users: u32,
    tweets: u32,
    ring_size: u32,
    per_pair: u32,
    noise: f64,
    seed: u32,
) -> Result<Value, String> {
    let spec = PlantedSpec {
        n_users: users as usize,
        n_tweets: tweets as usize,
        activity_zipf_s: 1.0,
        rings: vec![RingSpec {
            size: ring_size as usize,
            mentions_per_pair: per_pair,
        }],
        noise_edge_prob: noise,
        seed: seed as u64,
        ..Default::default()
    };
    let g = corpus_graph(&spec)?;
    if g.node_count() > MAX_MATRIX {
        return Err(format!(
            "{} nodes; the page draws at most {MAX_MATRIX}",
            g.node_count()
        ));
    }
    let rings = detect_tag_rings(&g, &RingParams::default());
    let adj = to_adjacency(&g, &Ordering::ByOutStrength, MAX_MATRIX).map_err(|e| e.to_string())?;
    let svg = render_matrix(&adj, true).map_err(|e| e.to_string())?;
    let planted: Vec<String> = (0..ring_size as usize)
        .map(mentionnet::synthgen::user_handle)
        .collect();
    Ok(json!({
        "svg": svg,
        "nodes": g.node_count(),
        "edges": g.edge_count(),
        "planted": planted,
        "rings": rings,
    }))
}

pub fn degree_inner(
    users: u32,
    tweets: u32,
    zipf_s: f64,
    seed: u32,
    hill: bool,
) -> Result<Value, String> {
    let spec = PlantedSpec {
        n_users: users as usize,
        n_tweets: tweets as usize,
        activity_zipf_s: zipf_s,
        seed: seed as u64,
        ..Default::default()
    };
    let g = corpus_graph(&spec)?;
    let dist = degree_sequence(&g, DegreeKind::Out, true);
    let method = if hill {
        TailMethod::Hill
    } else {
        TailMethod::Regression
    };
    let tail = tail_exponent(&dist, None, method).map_err(|e| e.to_string())?;
    let svg = render_degree_plot(&dist, true).map_err(|e| e.to_string())?;
    Ok(json!({"svg": svg, "tail": tail, "nodes": g.node_count()}))
}

pub fn communities_inner(
    blocks: u32,
    block_size: u32,
    p_in: f64,
    p_out: f64,
    seed: u32,
) -> Result<Value, String> {
    let n = blocks as usize * block_size as usize;
    if n == 0 || n > MAX_MATRIX {
        return Err(format!("need between 1 and {MAX_MATRIX} nodes, got {n}"));
    }
    for p in [p_in, p_out] {
        if !(0.0..=1.0).contains(&p) {
            return Err(format!("probability {p} outside [0, 1]"));
        }
    }
    let sizes = vec![block_size as usize; blocks as usize];
    let (g, planted) = planted_partition_graph(&sizes, p_in, p_out, seed as u64);
    let a = find_communities(&g, seed as u64, 1.0).map_err(|e| e.to_string())?;
    let adj = to_adjacency(&g, &Ordering::ByCommunity(a.membership.clone()), MAX_MATRIX)
        .map_err(|e| e.to_string())?;
    let svg = render_matrix(&adj, false).map_err(|e| e.to_string())?;
    let recovered = {
        let mut pairs: Vec<(usize, usize)> = planted
            .iter()
            .copied()
            .zip(a.membership.iter().copied())
            .collect();
        pairs.sort_unstable();
        pairs.dedup();
        pairs.len() == blocks as usize && a.n_communities == blocks as usize
    };
    Ok(json!({
        "svg": svg,
        "communities": a.n_communities,
        "modularity": a.modularity,
        "recovered": recovered,
        "edges": g.edge_count(),
    }))
}

/// Synthetic corpus with one planted ring: heatmap ordered by activity
/// plus the rings found at default thresholds.
#[wasm_bindgen]
pub fn ring_heatmap(
    users: u32,
    tweets: u32,
    ring_size: u32,
    per_pair: u32,
    noise: f64,
    seed: u32,
) -> String {
    respond(rings_inner(users, tweets, ring_size, per_pair, noise, seed))
}

/// Out-strength CCDF of a synthetic corpus with Zipf activity.
#[wasm_bindgen]
pub fn degree_plot(users: u32, tweets: u32, zipf_s: f64, seed: u32, hill: bool) -> String {
    respond(degree_inner(users, tweets, zipf_s, seed, hill))
}

/// Planted-partition graph, Louvain partition and a heatmap grouped by it.
#[wasm_bindgen]
pub fn community_heatmap(blocks: u32, block_size: u32, p_in: f64, p_out: f64, seed: u32) -> String {
    respond(communities_inner(blocks, block_size, p_in, p_out, seed))
}
