//! Route planning over the lane graph and live route progress.
//!
//! A route is an ordered edge path from the start pose to the goal point,
//! annotated with driving instructions. Lane following is deliberately not
//! an instruction: it is the implicit default between instructions, and the
//! selector derives it from the live distance to the next instruction.

use crate::path::{normalize_angle, Point, Polyline};
use crate::track::{project_to_lane, EdgeId, LaneProjection, NodeId, Pose, Track, TurnKind};
use std::cmp::Reverse;
use std::collections::BinaryHeap;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum PlanError {
    #[error("no lane path connects the start to the goal")]
    NoPathExists,
    #[error("start pose projects onto no lane within half a cell")]
    StartOffTrack,
    #[error("goal lies more than half a cell from every lane centerline")]
    GoalOffTrack,
}

/// Projection landed on an edge that is not part of the route.
#[derive(Debug, Error, PartialEq)]
#[error("projection edge {edge:?} is not on the route")]
pub struct RouteDeparture {
    pub edge: EdgeId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InstructionKind {
    TurnLeft,
    TurnRight,
    CrossCrossing,
    Stop,
}

impl InstructionKind {
    pub fn name(self) -> &'static str {
        match self {
            InstructionKind::TurnLeft => "TurnLeft",
            InstructionKind::TurnRight => "TurnRight",
            InstructionKind::CrossCrossing => "CrossCrossing",
            InstructionKind::Stop => "Stop",
        }
    }
}

/// Exit taken through a crossing, relative to the entry heading.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrossingExit {
    Straight,
    Left,
    Right,
}

/// One planner-emitted maneuver. The maneuver region spans the instruction's
/// cell, anchor port to exit port; the terminal stop has zero length and is
/// anchored exactly at the goal projection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DrivingInstruction {
    pub kind: InstructionKind,
    pub anchor_node: Option<NodeId>,
    pub exit_node: Option<NodeId>,
    /// Route arc where the maneuver region begins.
    pub anchor_arc: f64,
    /// Route arc where the maneuver region ends and the instruction is consumed.
    pub exit_arc: f64,
    pub crossing_exit: Option<CrossingExit>,
}

/// Planner output: the edge path, its centerline, and the instruction list.
#[derive(Debug, Clone)]
pub struct Route {
    pub edges: Vec<EdgeId>,
    /// Route arc at the start of each edge.
    pub edge_starts: Vec<f64>,
    /// Route arc of the start pose projection.
    pub start_arc: f64,
    /// Route arc of the goal projection; the terminal stop anchor.
    pub goal_arc: f64,
    /// Driving distance from start projection to goal projection.
    pub total_length: f64,
    pub instructions: Vec<DrivingInstruction>,
    /// Concatenated centerline of the whole edge path.
    pub path: Polyline,
}

impl Route {
    pub fn initial_progress(&self) -> RouteProgress {
        progress_at(self, 0, self.start_arc)
    }
}

/// Live position along the route: which instruction is next, how far away it
/// is, and whether the vehicle is inside its maneuver region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RouteProgress {
    pub arc_position: f64,
    pub next_instruction_index: usize,
    pub distance_to_next: f64,
    pub in_maneuver: bool,
}

/// A route-level projection produced by [`RouteCursor`]; `projection.arc_position`
/// is rebased onto the route centerline.
#[derive(Debug, Clone, Copy)]
pub struct RoutePosition {
    pub edge_index: usize,
    pub edge: EdgeId,
    pub projection: LaneProjection,
}

/// Tracks which route edge the vehicle currently projects onto. The cursor
/// only moves forward.
#[derive(Debug, Clone)]
pub struct RouteCursor {
    edge_index: usize,
}

impl Default for RouteCursor {
    fn default() -> Self {
        Self::new()
    }
}

impl RouteCursor {
    pub fn new() -> Self {
        Self { edge_index: 0 }
    }

    pub fn project(&mut self, track: &Track, route: &Route, pose: &Pose) -> RoutePosition {
        let mut best_index = self.edge_index;
        let mut best = project_to_lane(track, route.edges[best_index], pose);
        if let Some(&next_edge) = route.edges.get(self.edge_index + 1) {
            let candidate = project_to_lane(track, next_edge, pose);
            if candidate.lateral_deviation.abs() < best.lateral_deviation.abs() {
                best = candidate;
                best_index = self.edge_index + 1;
            }
        }
        self.edge_index = best_index;
        let mut projection = best;
        projection.arc_position += route.edge_starts[best_index];
        RoutePosition {
            edge_index: best_index,
            edge: route.edges[best_index],
            projection,
        }
    }
}

/// Advance route progress from a fresh projection. Instruction consumption is
/// monotone; the terminal stop is never consumed.
pub fn update_progress(
    route: &Route,
    previous: &RouteProgress,
    position: &RoutePosition,
) -> Result<RouteProgress, RouteDeparture> {
    if route.edges.get(position.edge_index) != Some(&position.edge) {
        return Err(RouteDeparture {
            edge: position.edge,
        });
    }
    Ok(progress_at(
        route,
        previous.next_instruction_index,
        position.projection.arc_position,
    ))
}

fn progress_at(route: &Route, start_index: usize, arc: f64) -> RouteProgress {
    let last = route.instructions.len() - 1;
    let mut idx = start_index;
    while idx < last && arc >= route.instructions[idx].exit_arc {
        idx += 1;
    }
    let instr = &route.instructions[idx];
    let in_maneuver = arc >= instr.anchor_arc;
    RouteProgress {
        arc_position: arc,
        next_instruction_index: idx,
        distance_to_next: (instr.anchor_arc - arc).max(0.0),
        in_maneuver,
    }
}

/// Shortest route by arc length from the start pose to the goal point.
/// Ties break on fewer instructions, then on lane ids, so planning is
/// reproducible run to run.
pub fn plan_route(track: &Track, start: &Pose, goal: (f64, f64)) -> Result<Route, PlanError> {
    let half_cell = track.cell_size() / 2.0;
    let goal_point = Point::new(goal.0, goal.1);

    let (start_edge, start_t) = find_start_edge(track, start, half_cell)?;

    // the goal anchors to the nearest centerline point; every edge achieving
    // that minimal distance is a candidate (both travel directions usually do)
    let projections: Vec<(EdgeId, f64, f64)> = track
        .edges()
        .iter()
        .map(|edge| {
            let proj = edge.polyline.project(goal_point);
            (edge.id, proj.arc, proj.distance)
        })
        .collect();
    let min_dist = projections
        .iter()
        .map(|p| p.2)
        .fold(f64::INFINITY, f64::min);
    if min_dist > half_cell {
        return Err(PlanError::GoalOffTrack);
    }
    let goal_candidates: Vec<(EdgeId, f64)> = projections
        .iter()
        .filter(|p| p.2 <= min_dist + 1e-9)
        .map(|p| (p.0, p.1))
        .collect();

    let search = dijkstra(track, start_edge, start_t);

    // candidate cost = driving distance from the start projection
    let mut best: Option<(f64, u32, EdgeId, f64, bool)> = None;
    for &(edge, t_goal) in &goal_candidates {
        // reaching the goal without leaving the start edge
        if edge == start_edge && t_goal >= start_t {
            consider(&mut best, (t_goal - start_t, 0, edge, t_goal, true));
        }
        let from = track.edge(edge).from;
        if let Some(node_state) = &search.best[from.0] {
            let cost = node_state.dist + t_goal;
            let instructions = node_state.instructions + maneuver_weight(track, edge);
            consider(&mut best, (cost, instructions, edge, t_goal, false));
        }
    }
    let (_, _, goal_edge, goal_t, direct) = best.ok_or(PlanError::NoPathExists)?;

    let edges = if direct {
        vec![start_edge]
    } else {
        let mut chain = vec![goal_edge];
        let mut node = track.edge(goal_edge).from;
        while node != track.edge(start_edge).to {
            let pred = search.best[node.0]
                .as_ref()
                .and_then(|s| s.pred)
                .expect("predecessor chain reaches the start edge");
            chain.push(pred);
            node = track.edge(pred).from;
        }
        chain.push(start_edge);
        chain.reverse();
        chain
    };

    Ok(assemble_route(track, edges, start_t, goal_t))
}

fn consider(best: &mut Option<(f64, u32, EdgeId, f64, bool)>, cand: (f64, u32, EdgeId, f64, bool)) {
    let better = match best {
        None => true,
        Some(cur) => {
            (cand.0, cand.1, cand.2) < (cur.0, cur.1, cur.2)
                || (cand.0 == cur.0 && cand.1 == cur.1 && cand.2 == cur.2 && cand.4 && !cur.4)
        }
    };
    if better {
        *best = Some(cand);
    }
}

fn find_start_edge(
    track: &Track,
    start: &Pose,
    half_cell: f64,
) -> Result<(EdgeId, f64), PlanError> {
    let mut best: Option<(bool, f64, EdgeId, f64)> = None;
    for edge in track.edges() {
        let proj = edge.polyline.project(start.position());
        if proj.distance > half_cell {
            continue;
        }
        let misaligned = normalize_angle(start.heading - proj.tangent_heading).abs()
            > std::f64::consts::FRAC_PI_2;
        let key = (misaligned, proj.distance, edge.id, proj.arc);
        if best.is_none_or(|b| (key.0, key.1, key.2) < (b.0, b.1, b.2)) {
            best = Some(key);
        }
    }
    best.map(|(_, _, edge, t)| (edge, t))
        .ok_or(PlanError::StartOffTrack)
}

fn maneuver_weight(track: &Track, edge: EdgeId) -> u32 {
    let e = track.edge(edge);
    (e.turn != TurnKind::Straight || e.through_crossing) as u32
}

struct NodeState {
    dist: f64,
    instructions: u32,
    pred: Option<EdgeId>,
}

struct SearchResult {
    best: Vec<Option<NodeState>>,
}

/// Uniform-cost search over lane ports, seeded past the start edge.
fn dijkstra(track: &Track, start_edge: EdgeId, start_t: f64) -> SearchResult {
    let mut best: Vec<Option<NodeState>> = (0..track.nodes().len()).map(|_| None).collect();
    let mut heap: BinaryHeap<Reverse<(TotalF64, u32, usize)>> = BinaryHeap::new();

    let entry_node = track.edge(start_edge).to;
    let entry_dist = track.edge(start_edge).length() - start_t;
    best[entry_node.0] = Some(NodeState {
        dist: entry_dist,
        instructions: maneuver_weight(track, start_edge),
        pred: None,
    });
    heap.push(Reverse((
        TotalF64(entry_dist),
        best[entry_node.0].as_ref().unwrap().instructions,
        entry_node.0,
    )));

    while let Some(Reverse((TotalF64(dist), instructions, node))) = heap.pop() {
        match &best[node] {
            Some(s) if s.dist == dist && s.instructions == instructions => {}
            _ => continue, // stale heap entry
        }
        for &edge_id in track.out_edges(NodeId(node)) {
            let edge = track.edge(edge_id);
            let next_dist = dist + edge.length();
            let next_instr = instructions + maneuver_weight(track, edge_id);
            let target = edge.to.0;
            let replace = match &best[target] {
                None => true,
                Some(cur) => {
                    (TotalF64(next_dist), next_instr) < (TotalF64(cur.dist), cur.instructions)
                        || (next_dist == cur.dist
                            && next_instr == cur.instructions
                            && Some(edge_id) < cur.pred)
                }
            };
            if replace {
                best[target] = Some(NodeState {
                    dist: next_dist,
                    instructions: next_instr,
                    pred: Some(edge_id),
                });
                heap.push(Reverse((TotalF64(next_dist), next_instr, target)));
            }
        }
    }
    SearchResult { best }
}

#[derive(PartialEq)]
struct TotalF64(f64);

impl Eq for TotalF64 {}

impl PartialOrd for TotalF64 {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for TotalF64 {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

fn assemble_route(track: &Track, edges: Vec<EdgeId>, start_t: f64, goal_t: f64) -> Route {
    let mut edge_starts = Vec::with_capacity(edges.len());
    let mut acc = 0.0;
    for id in &edges {
        edge_starts.push(acc);
        acc += track.edge(*id).length();
    }
    let start_arc = start_t;
    let goal_arc = edge_starts.last().unwrap() + goal_t;

    let mut instructions = Vec::new();
    for (i, id) in edges.iter().enumerate() {
        let edge = track.edge(*id);
        let kind = if edge.through_crossing {
            Some(InstructionKind::CrossCrossing)
        } else {
            match edge.turn {
                TurnKind::Left => Some(InstructionKind::TurnLeft),
                TurnKind::Right => Some(InstructionKind::TurnRight),
                TurnKind::Straight => None,
            }
        };
        let Some(kind) = kind else { continue };
        let anchor_arc = edge_starts[i];
        if anchor_arc >= goal_arc {
            continue; // maneuver begins past the goal
        }
        let crossing_exit = edge.through_crossing.then_some(match edge.turn {
            TurnKind::Straight => CrossingExit::Straight,
            TurnKind::Left => CrossingExit::Left,
            TurnKind::Right => CrossingExit::Right,
        });
        instructions.push(DrivingInstruction {
            kind,
            anchor_node: Some(edge.from),
            exit_node: Some(edge.to),
            anchor_arc,
            exit_arc: anchor_arc + edge.length(),
            crossing_exit,
        });
    }
    instructions.push(DrivingInstruction {
        kind: InstructionKind::Stop,
        anchor_node: None,
        exit_node: None,
        anchor_arc: goal_arc,
        exit_arc: goal_arc,
        crossing_exit: None,
    });
    debug_assert!(instructions
        .windows(2)
        .all(|w| w[0].anchor_arc < w[1].anchor_arc));

    let path = concatenate_centerline(track, &edges);
    Route {
        edges,
        edge_starts,
        start_arc,
        goal_arc,
        total_length: goal_arc - start_arc,
        instructions,
        path,
    }
}

fn concatenate_centerline(track: &Track, edges: &[EdgeId]) -> Polyline {
    let mut points: Vec<Point> = Vec::new();
    let mut headings: Vec<f64> = Vec::new();
    for id in edges {
        let poly = &track.edge(*id).polyline;
        let n = poly.points().len();
        for i in 0..n {
            if i == 0 && !points.is_empty() {
                continue; // joint point already present
            }
            points.push(poly.points()[i]);
            headings.push(poly.vertex_heading(i));
        }
    }
    Polyline::with_vertex_headings(points, headings)
}
