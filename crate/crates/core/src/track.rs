//! Grid-mat track parsing and lane geometry queries.
//!
//! A track file is a grid of road mats. Each non-empty mat carries a single
//! lane centerline; adjacent mats whose sides both carry a lane port connect
//! automatically. The lane graph is directed: every mat is traversable in
//! both directions, a route picks one.
//!
//! Coordinates: x grows east, y grows north, headings are radians
//! counterclockwise from east. Row 0 of the file is the northernmost row, so
//! cell (row, col) spans x in [col*s, (col+1)*s] and y in [-(row+1)*s, -row*s].

use crate::path::{normalize_angle, Point, Polyline};
use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use thiserror::Error;

/// Samples per quarter-circle corner centerline.
const ARC_SAMPLES: usize = 32;

pub const DEFAULT_CELL_SIZE: f64 = 10.0;

#[derive(Debug, Error, PartialEq)]
pub enum TrackError {
    /// Malformed track text. `col` is the whitespace-separated token index.
    #[error("syntax error at line {line}, column {col}: {message}")]
    Syntax {
        line: usize,
        col: usize,
        message: String,
    },
    #[error("geometry error at cell ({row}, {col}): {message}")]
    Geometry {
        row: usize,
        col: usize,
        message: String,
    },
    #[error("track contains no drivable lane")]
    EmptyTrack,
}

#[derive(Debug, Error, PartialEq)]
#[error("node {0:?} does not lie ahead on the route")]
pub struct NodeNotOnRoute(pub NodeId);

/// Compass direction; also the travel heading through a lane port.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Direction {
    North,
    East,
    South,
    West,
}

impl Direction {
    pub fn from_digit(d: u8) -> Option<Direction> {
        match d {
            0 => Some(Direction::North),
            1 => Some(Direction::East),
            2 => Some(Direction::South),
            3 => Some(Direction::West),
            _ => None,
        }
    }

    pub fn digit(self) -> u8 {
        match self {
            Direction::North => 0,
            Direction::East => 1,
            Direction::South => 2,
            Direction::West => 3,
        }
    }

    pub fn opposite(self) -> Direction {
        match self {
            Direction::North => Direction::South,
            Direction::East => Direction::West,
            Direction::South => Direction::North,
            Direction::West => Direction::East,
        }
    }

    pub fn turn_left(self) -> Direction {
        match self {
            Direction::North => Direction::West,
            Direction::West => Direction::South,
            Direction::South => Direction::East,
            Direction::East => Direction::North,
        }
    }

    pub fn turn_right(self) -> Direction {
        self.turn_left().opposite()
    }

    pub fn heading(self) -> f64 {
        match self {
            Direction::East => 0.0,
            Direction::North => FRAC_PI_2,
            Direction::West => PI,
            Direction::South => -FRAC_PI_2,
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Direction::North => "N",
            Direction::East => "E",
            Direction::South => "S",
            Direction::West => "W",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TurnHand {
    Left,
    Right,
}

/// What kind of road a mat carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellKind {
    Straight,
    Corner(TurnHand),
    Crossing,
    Empty,
}

/// One grid mat as parsed from the track file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatCell {
    pub kind: CellKind,
    /// Entry travel direction for straights and corners; ignored otherwise.
    pub orientation: Direction,
    pub row: usize,
    pub col: usize,
}

impl MatCell {
    pub fn is_empty(&self) -> bool {
        self.kind == CellKind::Empty
    }

    fn code(&self) -> String {
        match self.kind {
            CellKind::Empty => ".".to_string(),
            CellKind::Straight => format!("S{}", self.orientation.digit()),
            CellKind::Corner(TurnHand::Left) => format!("L{}", self.orientation.digit()),
            CellKind::Corner(TurnHand::Right) => format!("R{}", self.orientation.digit()),
            CellKind::Crossing => "X".to_string(),
        }
    }
}

/// A vehicle pose in track coordinates. Heading is kept in (-pi, pi].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, heading: f64) -> Pose {
        Pose {
            x,
            y,
            heading: normalize_angle(heading),
        }
    }

    pub fn position(&self) -> Point {
        Point::new(self.x, self.y)
    }
}

/// Where a pose sits relative to a lane centerline.
#[derive(Debug, Clone, Copy)]
pub struct LaneProjection {
    /// Signed offset from the centerline, positive to the left of travel.
    pub lateral_deviation: f64,
    /// Pose heading minus centerline tangent heading, in (-pi, pi].
    pub heading_error: f64,
    /// Arc position of the foot point. Edge-local from `project_to_lane`;
    /// the route cursor rebases it onto the route centerline.
    pub arc_position: f64,
    pub centerline_point: Point,
}

/// Identity of a cell boundary. `Horizontal { row, col }` separates cell
/// (row-1, col) from (row, col); `Vertical { row, col }` separates
/// (row, col-1) from (row, col). Boundary indices may sit on the grid rim.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Boundary {
    Horizontal { row: usize, col: usize },
    Vertical { row: usize, col: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgeId(pub usize);

/// A lane port: a boundary crossed in a specific travel direction.
#[derive(Debug, Clone)]
pub struct PortNode {
    pub boundary: Boundary,
    pub direction: Direction,
    pub position: Point,
}

/// In-cell turn geometry of one directed lane edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TurnKind {
    Straight,
    Left,
    Right,
}

/// A directed centerline through one cell, port to port.
#[derive(Debug, Clone)]
pub struct LaneEdge {
    pub id: EdgeId,
    pub from: NodeId,
    pub to: NodeId,
    pub cell: (usize, usize),
    pub turn: TurnKind,
    pub through_crossing: bool,
    pub polyline: Polyline,
}

impl LaneEdge {
    pub fn length(&self) -> f64 {
        self.polyline.length()
    }
}

/// Immutable track: cell grid plus derived lane graph.
#[derive(Debug, Clone)]
pub struct Track {
    cells: Vec<Vec<MatCell>>,
    cell_size: f64,
    nodes: Vec<PortNode>,
    edges: Vec<LaneEdge>,
    out_edges: Vec<Vec<EdgeId>>,
}

impl Track {
    pub fn rows(&self) -> usize {
        self.cells.len()
    }

    pub fn cols(&self) -> usize {
        self.cells.first().map_or(0, |r| r.len())
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn cell(&self, row: usize, col: usize) -> &MatCell {
        &self.cells[row][col]
    }

    pub fn nodes(&self) -> &[PortNode] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &PortNode {
        &self.nodes[id.0]
    }

    pub fn edges(&self) -> &[LaneEdge] {
        &self.edges
    }

    pub fn edge(&self, id: EdgeId) -> &LaneEdge {
        &self.edges[id.0]
    }

    /// Outgoing edges of a node, ascending by edge id.
    pub fn out_edges(&self, node: NodeId) -> &[EdgeId] {
        &self.out_edges[node.0]
    }
}

/// Project a pose onto one lane edge. Total: every pose projects somewhere.
pub fn project_to_lane(track: &Track, edge: EdgeId, pose: &Pose) -> LaneProjection {
    let proj = track.edge(edge).polyline.project(pose.position());
    LaneProjection {
        lateral_deviation: proj.lateral,
        heading_error: normalize_angle(pose.heading - proj.tangent_heading),
        arc_position: proj.arc,
        centerline_point: proj.point,
    }
}

/// Along-route distance from arc position `from` to the first occurrence of
/// `to_node` at or ahead of `from` on the ordered edge list.
pub fn arc_distance(
    track: &Track,
    route_edges: &[EdgeId],
    from: f64,
    to_node: NodeId,
) -> Result<f64, NodeNotOnRoute> {
    let mut cum = 0.0;
    if let Some(first) = route_edges.first() {
        if track.edge(*first).from == to_node && from <= 0.0 {
            return Ok(-from);
        }
    }
    for id in route_edges {
        let edge = track.edge(*id);
        cum += edge.length();
        if edge.to == to_node && cum >= from {
            return Ok(cum - from);
        }
    }
    Err(NodeNotOnRoute(to_node))
}

/// Parse a track file, allowing dead-end lanes and ports facing empty cells.
pub fn parse_track(text: &str) -> Result<Track, TrackError> {
    parse(text, false)
}

/// Parse a track file, rejecting any lane port that faces an in-grid cell
/// without a matching lane continuation.
pub fn parse_track_strict(text: &str) -> Result<Track, TrackError> {
    parse(text, true)
}

/// Render a track back to file form. Reparsing yields an identical cell grid.
pub fn serialize_track(track: &Track) -> String {
    let mut out = format!("cellsize {}\n", track.cell_size);
    for row in &track.cells {
        let codes: Vec<String> = row.iter().map(|c| c.code()).collect();
        out.push_str(&codes.join(" "));
        out.push('\n');
    }
    out
}

fn parse(text: &str, strict: bool) -> Result<Track, TrackError> {
    let mut cell_size = DEFAULT_CELL_SIZE;
    let mut rows: Vec<Vec<MatCell>> = Vec::new();
    let mut width: Option<usize> = None;
    let mut header_allowed = true;

    for (line_idx, raw) in text.lines().enumerate() {
        let line_no = line_idx + 1;
        let content = match raw.find('#') {
            Some(i) => &raw[..i],
            None => raw,
        };
        let tokens: Vec<&str> = content.split_whitespace().collect();
        if tokens.is_empty() {
            continue;
        }

        if header_allowed && tokens[0] == "cellsize" {
            header_allowed = false;
            if tokens.len() != 2 {
                return Err(TrackError::Syntax {
                    line: line_no,
                    col: tokens.len().min(2),
                    message: "cellsize header takes exactly one value".to_string(),
                });
            }
            let value: f64 = tokens[1].parse().map_err(|_| TrackError::Syntax {
                line: line_no,
                col: 2,
                message: format!("invalid cellsize value {:?}", tokens[1]),
            })?;
            if !value.is_finite() || value <= 0.0 {
                return Err(TrackError::Syntax {
                    line: line_no,
                    col: 2,
                    message: "cellsize must be a positive length".to_string(),
                });
            }
            cell_size = value;
            continue;
        }
        header_allowed = false;

        let row_idx = rows.len();
        let mut row = Vec::with_capacity(tokens.len());
        for (tok_idx, tok) in tokens.iter().enumerate() {
            let cell = parse_code(tok, row_idx, tok_idx).ok_or_else(|| TrackError::Syntax {
                line: line_no,
                col: tok_idx + 1,
                message: format!("unknown cell code {:?}", tok),
            })?;
            row.push(cell);
        }
        match width {
            None => width = Some(row.len()),
            Some(w) if w != row.len() => {
                return Err(TrackError::Syntax {
                    line: line_no,
                    col: row.len(),
                    message: format!("row has {} cells, expected {}", row.len(), w),
                });
            }
            _ => {}
        }
        rows.push(row);
    }

    if rows.is_empty() {
        return Err(TrackError::EmptyTrack);
    }

    let (nodes, edges, out_edges) = build_lane_graph(&rows, cell_size);
    if edges.is_empty() {
        return Err(TrackError::EmptyTrack);
    }

    let track = Track {
        cells: rows,
        cell_size,
        nodes,
        edges,
        out_edges,
    };

    if strict {
        check_continuity(&track)?;
    }
    Ok(track)
}

fn parse_code(tok: &str, row: usize, col: usize) -> Option<MatCell> {
    let make = |kind, orientation| {
        Some(MatCell {
            kind,
            orientation,
            row,
            col,
        })
    };
    match tok {
        "." => make(CellKind::Empty, Direction::North),
        "X" => make(CellKind::Crossing, Direction::North),
        _ => {
            let mut chars = tok.chars();
            let head = chars.next()?;
            let digit: u8 = chars.as_str().parse().ok()?;
            if chars.as_str().len() != 1 {
                return None;
            }
            let dir = Direction::from_digit(digit)?;
            match head {
                'S' => make(CellKind::Straight, dir),
                'L' => make(CellKind::Corner(TurnHand::Left), dir),
                'R' => make(CellKind::Corner(TurnHand::Right), dir),
                _ => None,
            }
        }
    }
}

/// Directed (entry, exit) travel pairs supported by a cell.
fn cell_traversals(cell: &MatCell) -> Vec<(Direction, Direction)> {
    use Direction::*;
    match cell.kind {
        CellKind::Empty => Vec::new(),
        CellKind::Straight => match cell.orientation {
            North | South => vec![(North, North), (South, South)],
            East | West => vec![(East, East), (West, West)],
        },
        CellKind::Corner(hand) => {
            let entry = cell.orientation;
            let exit = match hand {
                TurnHand::Left => entry.turn_left(),
                TurnHand::Right => entry.turn_right(),
            };
            // the same mat is drivable in reverse, with the opposite hand
            vec![(entry, exit), (exit.opposite(), entry.opposite())]
        }
        CellKind::Crossing => {
            let mut out = Vec::with_capacity(12);
            for entry in [North, East, South, West] {
                out.push((entry, entry));
                out.push((entry, entry.turn_left()));
                out.push((entry, entry.turn_right()));
            }
            out
        }
    }
}

/// The boundary carrying the port crossed when traveling `travel` through
/// side `side` of cell (row, col).
fn side_boundary(row: usize, col: usize, side: Direction) -> Boundary {
    match side {
        Direction::North => Boundary::Horizontal { row, col },
        Direction::South => Boundary::Horizontal { row: row + 1, col },
        Direction::West => Boundary::Vertical { row, col },
        Direction::East => Boundary::Vertical { row, col: col + 1 },
    }
}

fn side_midpoint(row: usize, col: usize, side: Direction, s: f64) -> Point {
    let (r, c) = (row as f64, col as f64);
    match side {
        Direction::North => Point::new((c + 0.5) * s, -r * s),
        Direction::South => Point::new((c + 0.5) * s, -(r + 1.0) * s),
        Direction::West => Point::new(c * s, -(r + 0.5) * s),
        Direction::East => Point::new((c + 1.0) * s, -(r + 0.5) * s),
    }
}

/// Corner of the cell shared by two perpendicular sides.
fn shared_corner(row: usize, col: usize, a: Direction, b: Direction, s: f64) -> Point {
    let (r, c) = (row as f64, col as f64);
    let has = |d: Direction| a == d || b == d;
    let x = if has(Direction::East) {
        (c + 1.0) * s
    } else {
        c * s
    };
    let y = if has(Direction::North) {
        -r * s
    } else {
        -(r + 1.0) * s
    };
    Point::new(x, y)
}

fn traversal_polyline(
    row: usize,
    col: usize,
    entry: Direction,
    exit: Direction,
    s: f64,
) -> Polyline {
    let entry_side = entry.opposite();
    let exit_side = exit;
    let a = side_midpoint(row, col, entry_side, s);
    let b = side_midpoint(row, col, exit_side, s);
    if entry == exit {
        return Polyline::new(vec![a, b]);
    }
    let center = shared_corner(row, col, entry_side, exit_side, s);
    let radius = s / 2.0;
    let phi0 = (a.y - center.y).atan2(a.x - center.x);
    let left = exit == entry.turn_left();
    let sweep = if left { FRAC_PI_2 } else { -FRAC_PI_2 };
    let tangent_offset = if left { FRAC_PI_2 } else { -FRAC_PI_2 };
    let mut points = Vec::with_capacity(ARC_SAMPLES + 1);
    let mut headings = Vec::with_capacity(ARC_SAMPLES + 1);
    for k in 0..=ARC_SAMPLES {
        let phi = phi0 + sweep * (k as f64) / (ARC_SAMPLES as f64);
        points.push(Point::new(
            center.x + radius * phi.cos(),
            center.y + radius * phi.sin(),
        ));
        headings.push(normalize_angle(phi + tangent_offset));
    }
    Polyline::with_vertex_headings(points, headings)
}

type GraphParts = (Vec<PortNode>, Vec<LaneEdge>, Vec<Vec<EdgeId>>);

fn build_lane_graph(rows: &[Vec<MatCell>], s: f64) -> GraphParts {
    // pass 1: canonical node numbering, sorted by (boundary, direction)
    let mut keys: BTreeSet<(Boundary, Direction)> = BTreeSet::new();
    for row in rows {
        for cell in row {
            for (entry, exit) in cell_traversals(cell) {
                keys.insert((side_boundary(cell.row, cell.col, entry.opposite()), entry));
                keys.insert((side_boundary(cell.row, cell.col, exit), exit));
            }
        }
    }
    let ids: BTreeMap<(Boundary, Direction), NodeId> = keys
        .iter()
        .enumerate()
        .map(|(i, k)| (*k, NodeId(i)))
        .collect();
    let nodes: Vec<PortNode> = keys
        .iter()
        .map(|(b, d)| PortNode {
            boundary: *b,
            direction: *d,
            position: boundary_midpoint(*b, s),
        })
        .collect();

    // pass 2: edges, row-major, fixed per-cell traversal order
    let mut edges = Vec::new();
    let mut out_edges = vec![Vec::new(); nodes.len()];
    for row in rows {
        for cell in row {
            for (entry, exit) in cell_traversals(cell) {
                let from = ids[&(side_boundary(cell.row, cell.col, entry.opposite()), entry)];
                let to = ids[&(side_boundary(cell.row, cell.col, exit), exit)];
                let id = EdgeId(edges.len());
                let turn = if exit == entry {
                    TurnKind::Straight
                } else if exit == entry.turn_left() {
                    TurnKind::Left
                } else {
                    TurnKind::Right
                };
                edges.push(LaneEdge {
                    id,
                    from,
                    to,
                    cell: (cell.row, cell.col),
                    turn,
                    through_crossing: cell.kind == CellKind::Crossing,
                    polyline: traversal_polyline(cell.row, cell.col, entry, exit, s),
                });
                out_edges[from.0].push(id);
            }
        }
    }
    (nodes, edges, out_edges)
}

fn boundary_midpoint(b: Boundary, s: f64) -> Point {
    match b {
        Boundary::Horizontal { row, col } => Point::new((col as f64 + 0.5) * s, -(row as f64) * s),
        Boundary::Vertical { row, col } => Point::new(col as f64 * s, -(row as f64 + 0.5) * s),
    }
}

/// Cell a port leads into, if it is not on the grid rim.
fn port_target(track: &Track, node: &PortNode) -> Option<(usize, usize)> {
    match (node.boundary, node.direction) {
        (Boundary::Horizontal { row, col }, Direction::North) => {
            row.checked_sub(1).map(|r| (r, col))
        }
        (Boundary::Horizontal { row, col }, Direction::South) => {
            (row < track.rows()).then_some((row, col))
        }
        (Boundary::Vertical { row, col }, Direction::East) => {
            (col < track.cols()).then_some((row, col))
        }
        (Boundary::Vertical { row, col }, Direction::West) => col.checked_sub(1).map(|c| (row, c)),
        _ => None,
    }
}

fn check_continuity(track: &Track) -> Result<(), TrackError> {
    for edge in track.edges() {
        if !track.out_edges(edge.to).is_empty() {
            continue;
        }
        let node = track.node(edge.to);
        if let Some((r, c)) = port_target(track, node) {
            let target = track.cell(r, c);
            let what = if target.is_empty() {
                "an empty cell"
            } else {
                "a cell without a matching lane"
            };
            return Err(TrackError::Geometry {
                row: edge.cell.0,
                col: edge.cell.1,
                message: format!("lane exit heading {} faces {}", node.direction, what),
            });
        }
    }
    Ok(())
}
