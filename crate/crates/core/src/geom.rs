//! Planar geometry in meters.

use alloc::vec::Vec;
use core::ops::{Add, Mul, Sub};
use serde::{Deserialize, Serialize};

use crate::math;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl From<[f64; 2]> for Point {
    fn from([x, y]: [f64; 2]) -> Self {
        Point { x, y }
    }
}

impl From<Point> for [f64; 2] {
    fn from(p: Point) -> Self {
        [p.x, p.y]
    }
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    #[inline]
    pub fn dot(self, o: Point) -> f64 {
        self.x * o.x + self.y * o.y
    }

    #[inline]
    pub fn cross(self, o: Point) -> f64 {
        self.x * o.y - self.y * o.x
    }

    #[inline]
    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> f64 {
        math::sqrt(self.norm_sq())
    }

    #[inline]
    pub fn dist(self, o: Point) -> f64 {
        (self - o).norm()
    }

    #[inline]
    pub fn dist_sq(self, o: Point) -> f64 {
        (self - o).norm_sq()
    }

    /// Unit vector in the same direction; the zero vector maps to zero.
    #[inline]
    pub fn unit(self) -> Point {
        let n = self.norm();
        if n > 0.0 {
            self * (1.0 / n)
        } else {
            Point::default()
        }
    }

    pub fn lerp(self, o: Point, t: f64) -> Point {
        self + (o - self) * t
    }
}

impl Add for Point {
    type Output = Point;
    #[inline]
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point {
    type Output = Point;
    #[inline]
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    #[inline]
    fn mul(self, k: f64) -> Point {
        Point::new(self.x * k, self.y * k)
    }
}

/// Axis-aligned rectangle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rect {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl Rect {
    pub const fn new(min_x: f64, min_y: f64, max_x: f64, max_y: f64) -> Self {
        Rect {
            min_x,
            min_y,
            max_x,
            max_y,
        }
    }

    pub fn from_size(width: f64, height: f64) -> Self {
        Rect::new(0.0, 0.0, width, height)
    }

    pub fn width(&self) -> f64 {
        self.max_x - self.min_x
    }

    pub fn height(&self) -> f64 {
        self.max_y - self.min_y
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn center(&self) -> Point {
        Point::new(
            0.5 * (self.min_x + self.max_x),
            0.5 * (self.min_y + self.max_y),
        )
    }

    /// Closed containment with slack `tol`.
    pub fn contains_tol(&self, p: Point, tol: f64) -> bool {
        p.x >= self.min_x - tol
            && p.x <= self.max_x + tol
            && p.y >= self.min_y - tol
            && p.y <= self.max_y + tol
    }

    pub fn contains(&self, p: Point) -> bool {
        self.contains_tol(p, 0.0)
    }

    pub fn clamp(&self, p: Point) -> Point {
        Point::new(
            p.x.clamp(self.min_x, self.max_x),
            p.y.clamp(self.min_y, self.max_y),
        )
    }

    pub fn shrink(&self, dx: f64, dy: f64) -> Rect {
        Rect::new(
            self.min_x + dx,
            self.min_y + dy,
            self.max_x - dx,
            self.max_y - dy,
        )
    }

    pub fn corners(&self) -> [Point; 4] {
        [
            Point::new(self.min_x, self.min_y),
            Point::new(self.max_x, self.min_y),
            Point::new(self.max_x, self.max_y),
            Point::new(self.min_x, self.max_y),
        ]
    }

    /// Whether the segment a→b touches this rectangle (slab test).
    pub fn intersects_segment(&self, a: Point, b: Point) -> bool {
        self.segment_span(a, b).is_some()
    }

    /// Parameter interval `[t0, t1]` of segment a→b inside the box.
    pub fn segment_span(&self, a: Point, b: Point) -> Option<(f64, f64)> {
        let mut t0 = 0.0f64;
        let mut t1 = 1.0f64;
        let d = b - a;
        for (p, dp, lo, hi) in [
            (a.x, d.x, self.min_x, self.max_x),
            (a.y, d.y, self.min_y, self.max_y),
        ] {
            if dp == 0.0 {
                if p < lo || p > hi {
                    return None;
                }
            } else {
                let inv = 1.0 / dp;
                let (mut ta, mut tb) = ((lo - p) * inv, (hi - p) * inv);
                if ta > tb {
                    core::mem::swap(&mut ta, &mut tb);
                }
                t0 = t0.max(ta);
                t1 = t1.min(tb);
                if t0 > t1 {
                    return None;
                }
            }
        }
        Some((t0, t1))
    }
}

/// Parameters `(t, u)` where segments p→p2 and q→q2 cross, if they do.
pub fn segment_intersection(p: Point, p2: Point, q: Point, q2: Point) -> Option<(f64, f64)> {
    let r = p2 - p;
    let s = q2 - q;
    let denom = r.cross(s);
    if denom == 0.0 {
        return None;
    }
    let qp = q - p;
    let t = qp.cross(s) / denom;
    let u = qp.cross(r) / denom;
    if (0.0..=1.0).contains(&t) && (0.0..=1.0).contains(&u) {
        Some((t, u))
    } else {
        None
    }
}

/// Closest point to `p` on segment a→b.
pub fn closest_on_segment(p: Point, a: Point, b: Point) -> Point {
    let ab = b - a;
    let len_sq = ab.norm_sq();
    if len_sq == 0.0 {
        return a;
    }
    let t = ((p - a).dot(ab) / len_sq).clamp(0.0, 1.0);
    a + ab * t
}

/// Simple polygon given by its vertices (implicitly closed).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Polygon {
    pub vertices: Vec<Point>,
}

impl Polygon {
    pub fn new(vertices: Vec<Point>) -> Self {
        Polygon { vertices }
    }

    pub fn from_rect(r: &Rect) -> Self {
        Polygon::new(r.corners().to_vec())
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn edges(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    pub fn bbox(&self) -> Rect {
        let mut r = Rect::new(f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
        for v in &self.vertices {
            r.min_x = r.min_x.min(v.x);
            r.min_y = r.min_y.min(v.y);
            r.max_x = r.max_x.max(v.x);
            r.max_y = r.max_y.max(v.y);
        }
        r
    }

    /// Signed shoelace area (positive for counter-clockwise order).
    pub fn signed_area(&self) -> f64 {
        0.5 * self.edges().map(|(a, b)| a.cross(b)).sum::<f64>()
    }

    pub fn area(&self) -> f64 {
        math::abs(self.signed_area())
    }

    pub fn centroid(&self) -> Point {
        let a = self.signed_area();
        if a == 0.0 {
            let n = self.vertices.len().max(1) as f64;
            let s = self
                .vertices
                .iter()
                .fold(Point::default(), |acc, &v| acc + v);
            return s * (1.0 / n);
        }
        let mut c = Point::default();
        for (p, q) in self.edges() {
            let w = p.cross(q);
            c = c + (p + q) * w;
        }
        c * (1.0 / (6.0 * a))
    }

    /// Even-odd containment. Points exactly on the boundary may land on
    /// either side; use [`Polygon::boundary_distance`] when that matters.
    pub fn contains(&self, p: Point) -> bool {
        let mut inside = false;
        let n = self.vertices.len();
        let mut j = n.wrapping_sub(1);
        for i in 0..n {
            let a = self.vertices[i];
            let b = self.vertices[j];
            if (a.y > p.y) != (b.y > p.y) {
                let x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
                if p.x < x {
                    inside = !inside;
                }
            }
            j = i;
        }
        inside
    }

    /// Closest boundary point and its distance.
    pub fn nearest_boundary_point(&self, p: Point) -> (Point, f64) {
        let mut best = (p, f64::INFINITY);
        for (a, b) in self.edges() {
            let q = closest_on_segment(p, a, b);
            let d = q.dist(p);
            if d < best.1 {
                best = (q, d);
            }
        }
        best
    }

    pub fn boundary_distance(&self, p: Point) -> f64 {
        self.nearest_boundary_point(p).1
    }

    /// No two non-adjacent edges touch, and there are at least three
    /// vertices enclosing positive area.
    pub fn is_simple(&self) -> bool {
        let n = self.vertices.len();
        if n < 3 || self.area() <= 0.0 {
            return false;
        }
        for i in 0..n {
            let (a, b) = (self.vertices[i], self.vertices[(i + 1) % n]);
            if a == b {
                return false;
            }
            for j in (i + 1)..n {
                let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                if adjacent {
                    continue;
                }
                let (c, d) = (self.vertices[j], self.vertices[(j + 1) % n]);
                if segment_intersection(a, b, c, d).is_some() {
                    return false;
                }
            }
        }
        true
    }

    /// Whether `inner` lies strictly inside this polygon: every inner vertex
    /// is inside and off the boundary, and no edges cross.
    pub fn contains_polygon(&self, inner: &Polygon) -> bool {
        if inner
            .vertices
            .iter()
            .any(|&v| !self.contains(v) || self.boundary_distance(v) < 1e-9)
        {
            return false;
        }
        for (a, b) in self.edges() {
            for (c, d) in inner.edges() {
                if segment_intersection(a, b, c, d).is_some() {
                    return false;
                }
            }
        }
        true
    }

    /// Parameter values in [0, 1] where segment a→b crosses the boundary,
    /// sorted and including the endpoints.
    pub fn crossing_params(&self, a: Point, b: Point, out: &mut Vec<f64>) {
        out.clear();
        out.push(0.0);
        for (p, q) in self.edges() {
            if let Some((t, _)) = segment_intersection(a, b, p, q) {
                out.push(t);
            }
        }
        out.push(1.0);
        out.sort_by(f64::total_cmp);
    }
}
