//! Shared fixtures and the independent shortest-path oracle.

// each test binary uses a different subset of these helpers
#![allow(dead_code)]

use arbiter_core::path::Point;
use arbiter_core::track::{EdgeId, NodeId, Track};
use arbiter_core::Pose;
use std::collections::HashSet;

pub fn benchmark_track() -> Track {
    let text = std::fs::read_to_string(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/../../scenarios/benchmark.track"
    ))
    .expect("bundled benchmark track");
    arbiter_core::parse_track(&text).expect("benchmark parses")
}

pub fn benchmark_start() -> Pose {
    Pose::new(2.0, -5.0, 0.0)
}

pub const BENCHMARK_GOAL: (f64, f64) = (125.0, -33.0);

/// Brute-force minimum driving distance from the start pose to the goal,
/// enumerating all node-simple edge paths. Independent of the planner: it
/// anchors the endpoints by raw projection and explores the lane graph
/// exhaustively (with branch-and-bound pruning on the running length).
pub fn brute_force_shortest(track: &Track, start: &Pose, goal: (f64, f64)) -> Option<f64> {
    let half = track.cell_size() / 2.0;
    let goal_point = Point::new(goal.0, goal.1);

    // start anchor: nearest aligned edge within half a cell
    let mut start_anchor: Option<(f64, EdgeId, f64)> = None;
    for edge in track.edges() {
        let proj = edge.polyline.project(start.position());
        if proj.distance > half {
            continue;
        }
        let mis = (arbiter_core::path::normalize_angle(start.heading - proj.tangent_heading)).abs()
            > std::f64::consts::FRAC_PI_2;
        let key = (
            proj.distance + if mis { 1e6 } else { 0.0 },
            edge.id,
            proj.arc,
        );
        if start_anchor.is_none_or(|(d, id, _)| (key.0, key.1) < (d, id)) {
            start_anchor = Some(key);
        }
    }
    let (_, start_edge, start_t) = start_anchor?;

    // goal anchors: every edge achieving the minimal projection distance
    let mut best_dist = f64::INFINITY;
    let mut goal_anchors: Vec<(EdgeId, f64)> = Vec::new();
    for edge in track.edges() {
        let proj = edge.polyline.project(goal_point);
        if proj.distance < best_dist - 1e-9 {
            best_dist = proj.distance;
            goal_anchors.clear();
        }
        if (proj.distance - best_dist).abs() <= 1e-9 {
            goal_anchors.push((edge.id, proj.arc));
        }
    }
    if best_dist > half {
        return None;
    }

    let mut best = f64::INFINITY;
    if let Some((_, t)) = goal_anchors
        .iter()
        .find(|(e, t)| *e == start_edge && *t >= start_t)
    {
        best = t - start_t;
    }

    let first = track.edge(start_edge);
    let mut visited: HashSet<NodeId> = HashSet::new();
    visited.insert(first.to);
    dfs(
        track,
        first.to,
        first.length() - start_t,
        &mut visited,
        &goal_anchors,
        &mut best,
    );
    best.is_finite().then_some(best)
}

fn dfs(
    track: &Track,
    node: NodeId,
    acc: f64,
    visited: &mut HashSet<NodeId>,
    goals: &[(EdgeId, f64)],
    best: &mut f64,
) {
    if acc >= *best {
        return;
    }
    for &edge_id in track.out_edges(node) {
        let edge = track.edge(edge_id);
        for (goal_edge, t) in goals {
            if *goal_edge == edge_id && acc + t < *best {
                *best = acc + t;
            }
        }
        if visited.contains(&edge.to) {
            continue;
        }
        visited.insert(edge.to);
        dfs(track, edge.to, acc + edge.length(), visited, goals, best);
        visited.remove(&edge.to);
    }
}
