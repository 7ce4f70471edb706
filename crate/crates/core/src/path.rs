//! Polyline geometry shared by the track, planner and behavior controllers.

use std::f64::consts::{PI, TAU};

/// A point in track coordinates (meters, x east, y north).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Normalize an angle into the half-open interval (-pi, pi].
pub fn normalize_angle(a: f64) -> f64 {
    let mut a = a % TAU;
    if a > PI {
        a -= TAU;
    } else if a <= -PI {
        a += TAU;
    }
    a
}

/// Result of projecting a point onto a polyline.
#[derive(Debug, Clone, Copy)]
pub struct PolylineProjection {
    /// Arc length from the polyline start to the foot point.
    pub arc: f64,
    /// Unsigned distance from the query point to the foot point.
    pub distance: f64,
    /// Signed lateral offset, positive to the left of travel.
    pub lateral: f64,
    /// Heading of the polyline segment at the foot point.
    pub tangent_heading: f64,
    /// The foot point itself.
    pub point: Point,
}

/// An open polyline with a precomputed cumulative arc-length table.
///
/// Polylines sampled from circular arcs also carry the analytic tangent
/// heading at each vertex; projections interpolate those instead of using
/// the chord heading, so heading queries are exact at the sample points.
#[derive(Debug, Clone)]
pub struct Polyline {
    points: Vec<Point>,
    cum: Vec<f64>,
    vertex_headings: Option<Vec<f64>>,
}

impl Polyline {
    pub fn new(points: Vec<Point>) -> Self {
        Self::build(points, None)
    }

    pub fn with_vertex_headings(points: Vec<Point>, headings: Vec<f64>) -> Self {
        assert_eq!(points.len(), headings.len());
        Self::build(points, Some(headings))
    }

    fn build(points: Vec<Point>, vertex_headings: Option<Vec<f64>>) -> Self {
        assert!(points.len() >= 2, "polyline needs at least two points");
        let mut cum = Vec::with_capacity(points.len());
        let mut acc = 0.0;
        cum.push(0.0);
        for w in points.windows(2) {
            acc += w[0].distance(w[1]);
            cum.push(acc);
        }
        Self {
            points,
            cum,
            vertex_headings,
        }
    }

    pub fn length(&self) -> f64 {
        *self.cum.last().unwrap()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn first(&self) -> Point {
        self.points[0]
    }

    pub fn last(&self) -> Point {
        *self.points.last().unwrap()
    }

    /// Point at the given arc length, clamped to the polyline extent.
    pub fn point_at(&self, arc: f64) -> Point {
        let (i, t) = self.locate(arc);
        let a = self.points[i];
        let b = self.points[i + 1];
        Point::new(a.x + (b.x - a.x) * t, a.y + (b.y - a.y) * t)
    }

    /// Tangent heading at the given arc length.
    pub fn heading_at(&self, arc: f64) -> f64 {
        let (i, t) = self.locate(arc);
        self.segment_heading(i, t)
    }

    /// Tangent heading at a vertex: the stored analytic value for arc-sampled
    /// polylines, otherwise the heading of the adjacent segment.
    pub fn vertex_heading(&self, index: usize) -> f64 {
        if let Some(headings) = &self.vertex_headings {
            return headings[index];
        }
        let seg = index.min(self.points.len() - 2);
        let a = self.points[seg];
        let b = self.points[seg + 1];
        (b.y - a.y).atan2(b.x - a.x)
    }

    fn segment_heading(&self, seg: usize, t: f64) -> f64 {
        if let Some(headings) = &self.vertex_headings {
            let h0 = headings[seg];
            let delta = normalize_angle(headings[seg + 1] - h0);
            return normalize_angle(h0 + t * delta);
        }
        let a = self.points[seg];
        let b = self.points[seg + 1];
        (b.y - a.y).atan2(b.x - a.x)
    }

    fn locate(&self, arc: f64) -> (usize, f64) {
        let arc = arc.clamp(0.0, self.length());
        // partition_point returns the first index with cum > arc
        let idx = self.cum.partition_point(|&c| c <= arc);
        let seg = idx.saturating_sub(1).min(self.points.len() - 2);
        let seg_len = self.cum[seg + 1] - self.cum[seg];
        let t = if seg_len > 0.0 {
            (arc - self.cum[seg]) / seg_len
        } else {
            0.0
        };
        (seg, t.clamp(0.0, 1.0))
    }

    /// Nearest point on the polyline to `p`. Ties resolve to the earliest segment.
    pub fn project(&self, p: Point) -> PolylineProjection {
        let mut best: Option<PolylineProjection> = None;
        for i in 0..self.points.len() - 1 {
            let a = self.points[i];
            let b = self.points[i + 1];
            let dx = b.x - a.x;
            let dy = b.y - a.y;
            let len2 = dx * dx + dy * dy;
            let t = if len2 > 0.0 {
                (((p.x - a.x) * dx + (p.y - a.y) * dy) / len2).clamp(0.0, 1.0)
            } else {
                0.0
            };
            let foot = Point::new(a.x + dx * t, a.y + dy * t);
            let dist = p.distance(foot);
            if best.as_ref().is_none_or(|b| dist < b.distance) {
                let heading = self.segment_heading(i, t);
                // full distance to the foot, signed by side: positive when p
                // lies left of the direction of travel
                let cross = dx * (p.y - foot.y) - dy * (p.x - foot.x);
                let lateral = dist.copysign(cross);
                best = Some(PolylineProjection {
                    arc: self.cum[i] + len2.sqrt() * t,
                    distance: dist,
                    lateral,
                    tangent_heading: heading,
                    point: foot,
                });
            }
        }
        best.expect("polyline has at least one segment")
    }
}
