//! Planar geometry: vectors, segments, oriented rectangles and polygons.
//!
//! Angles are degrees, counter-clockwise from +x. An oriented rectangle's
//! front axis points along its rotation; `depth` is measured along the
//! front axis and `width` along the lateral axis.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

/// Tolerance for overlap and containment tests (meters).
pub const EPS: f64 = 1e-6;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn length(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, o: Vec2) -> f64 {
        (self - o).length()
    }

    /// Left-hand perpendicular (rotated +90°).
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    pub fn normalized(self) -> Vec2 {
        let l = self.length();
        if l == 0.0 {
            self
        } else {
            Vec2::new(self.x / l, self.y / l)
        }
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, k: f64) -> Vec2 {
        Vec2::new(self.x * k, self.y * k)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// Wrap an angle into `[0, 360)`.
pub fn normalize_deg(deg: f64) -> f64 {
    let d = deg.rem_euclid(360.0);
    if d >= 360.0 || d == -0.0 {
        0.0
    } else {
        d
    }
}

/// Unsigned angular difference in `[0, 180]`.
pub fn angle_diff(a: f64, b: f64) -> f64 {
    let d = normalize_deg(a - b);
    if d > 180.0 {
        360.0 - d
    } else {
        d
    }
}

/// Snap to the nearest multiple of `step`, wrapped into `[0, 360)`.
pub fn quantize_deg(deg: f64, step: f64) -> f64 {
    normalize_deg((normalize_deg(deg) / step).round() * step)
}

/// Unit vector for a heading. Exact for multiples of 90°.
pub fn heading_vector(deg: f64) -> Vec2 {
    let d = normalize_deg(deg);
    if d == 0.0 {
        Vec2::new(1.0, 0.0)
    } else if d == 90.0 {
        Vec2::new(0.0, 1.0)
    } else if d == 180.0 {
        Vec2::new(-1.0, 0.0)
    } else if d == 270.0 {
        Vec2::new(0.0, -1.0)
    } else {
        let r = d.to_radians();
        Vec2::new(r.cos(), r.sin())
    }
}

/// Heading of a direction vector, in `[0, 360)`.
pub fn heading_of(v: Vec2) -> f64 {
    normalize_deg(v.y.atan2(v.x).to_degrees())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub a: Vec2,
    pub b: Vec2,
}

impl Segment {
    pub fn new(a: Vec2, b: Vec2) -> Self {
        Segment { a, b }
    }

    pub fn length(&self) -> f64 {
        self.a.distance(self.b)
    }

    pub fn direction(&self) -> Vec2 {
        (self.b - self.a).normalized()
    }

    pub fn point_at(&self, t: f64) -> Vec2 {
        self.a + (self.b - self.a) * t
    }

    pub fn closest_point(&self, p: Vec2) -> Vec2 {
        let ab = self.b - self.a;
        let len2 = ab.dot(ab);
        if len2 == 0.0 {
            return self.a;
        }
        let t = ((p - self.a).dot(ab) / len2).clamp(0.0, 1.0);
        self.a + ab * t
    }

    pub fn distance_to_point(&self, p: Vec2) -> f64 {
        p.distance(self.closest_point(p))
    }

    /// True when the segments share at least one point (within tolerance).
    pub fn intersects(&self, o: &Segment) -> bool {
        let d1 = orient(o.a, o.b, self.a);
        let d2 = orient(o.a, o.b, self.b);
        let d3 = orient(self.a, self.b, o.a);
        let d4 = orient(self.a, self.b, o.b);
        if d1 * d2 < 0.0 && d3 * d4 < 0.0 {
            return true;
        }
        self.distance_to_point(o.a) <= EPS
            || self.distance_to_point(o.b) <= EPS
            || o.distance_to_point(self.a) <= EPS
            || o.distance_to_point(self.b) <= EPS
    }

    /// True when the segments cross at a single interior point of both.
    pub fn crosses_properly(&self, o: &Segment) -> bool {
        let s = |v: f64| if v.abs() <= 1e-12 { 0.0 } else { v.signum() };
        let d1 = s(orient(o.a, o.b, self.a));
        let d2 = s(orient(o.a, o.b, self.b));
        let d3 = s(orient(self.a, self.b, o.a));
        let d4 = s(orient(self.a, self.b, o.b));
        d1 * d2 < 0.0 && d3 * d4 < 0.0
    }

    pub fn distance_to_segment(&self, o: &Segment) -> f64 {
        if self.intersects(o) {
            return 0.0;
        }
        self.distance_to_point(o.a)
            .min(self.distance_to_point(o.b))
            .min(o.distance_to_point(self.a))
            .min(o.distance_to_point(self.b))
    }
}

fn orient(a: Vec2, b: Vec2, c: Vec2) -> f64 {
    (b - a).cross(c - a)
}

/// Oriented rectangle: an object footprint.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Obb {
    pub center: Vec2,
    pub width: f64,
    pub depth: f64,
    pub rotation: f64,
}

impl Obb {
    pub fn new(center: Vec2, width: f64, depth: f64, rotation: f64) -> Self {
        Obb {
            center,
            width,
            depth,
            rotation: normalize_deg(rotation),
        }
    }

    /// Axis-aligned square cell centered at `center`.
    pub fn square(center: Vec2, side: f64) -> Self {
        Obb::new(center, side, side, 0.0)
    }

    pub fn front(&self) -> Vec2 {
        heading_vector(self.rotation)
    }

    pub fn lateral(&self) -> Vec2 {
        self.front().perp()
    }

    pub fn translated(&self, by: Vec2) -> Obb {
        Obb {
            center: self.center + by,
            ..*self
        }
    }

    /// Corners in counter-clockwise order.
    pub fn corners(&self) -> [Vec2; 4] {
        let f = self.front() * (self.depth / 2.0);
        let l = self.lateral() * (self.width / 2.0);
        let c = self.center;
        [c - f - l, c + f - l, c + f + l, c - f + l]
    }

    pub fn edges(&self) -> [Segment; 4] {
        let c = self.corners();
        [
            Segment::new(c[0], c[1]),
            Segment::new(c[1], c[2]),
            Segment::new(c[2], c[3]),
            Segment::new(c[3], c[0]),
        ]
    }

    /// Local coordinates (front, lateral) of a world point.
    pub fn to_local(&self, p: Vec2) -> (f64, f64) {
        let d = p - self.center;
        (d.dot(self.front()), d.dot(self.lateral()))
    }

    pub fn from_local(&self, front: f64, lateral: f64) -> Vec2 {
        self.center + self.front() * front + self.lateral() * lateral
    }

    /// Point containment, shrunk by `margin` on every side.
    pub fn contains_point_inset(&self, p: Vec2, margin: f64) -> bool {
        let (f, l) = self.to_local(p);
        f.abs() < self.depth / 2.0 - margin && l.abs() < self.width / 2.0 - margin
    }

    pub fn contains_point(&self, p: Vec2) -> bool {
        let (f, l) = self.to_local(p);
        f.abs() <= self.depth / 2.0 + EPS && l.abs() <= self.width / 2.0 + EPS
    }

    /// True when `other` lies entirely within this rectangle.
    pub fn contains_obb(&self, other: &Obb) -> bool {
        other.corners().iter().all(|&c| self.contains_point(c))
    }

    /// Separating-axis overlap test. Touching rectangles do not overlap.
    pub fn overlaps(&self, other: &Obb) -> bool {
        let axes = [self.front(), self.lateral(), other.front(), other.lateral()];
        let ca = self.corners();
        let cb = other.corners();
        for axis in axes {
            let (amin, amax) = project(&ca, axis);
            let (bmin, bmax) = project(&cb, axis);
            if amax.min(bmax) - amin.max(bmin) <= EPS {
                return false;
            }
        }
        true
    }

    pub fn distance_to_point(&self, p: Vec2) -> f64 {
        let (f, l) = self.to_local(p);
        let df = (f.abs() - self.depth / 2.0).max(0.0);
        let dl = (l.abs() - self.width / 2.0).max(0.0);
        df.hypot(dl)
    }

    /// Closest point of the rectangle (boundary or interior) to `p`.
    pub fn closest_point(&self, p: Vec2) -> Vec2 {
        let (f, l) = self.to_local(p);
        let f = f.clamp(-self.depth / 2.0, self.depth / 2.0);
        let l = l.clamp(-self.width / 2.0, self.width / 2.0);
        self.from_local(f, l)
    }

    pub fn distance_to_segment(&self, s: &Segment) -> f64 {
        if self.contains_point(s.a) || self.contains_point(s.b) {
            return 0.0;
        }
        self.edges()
            .iter()
            .map(|e| e.distance_to_segment(s))
            .fold(f64::INFINITY, f64::min)
    }

    /// Clearance between two rectangles, 0 when they touch or overlap.
    pub fn distance_to(&self, other: &Obb) -> f64 {
        if self.overlaps(other) {
            return 0.0;
        }
        let mut best = f64::INFINITY;
        for e in self.edges() {
            for c in other.corners() {
                best = best.min(e.distance_to_point(c));
            }
        }
        for e in other.edges() {
            for c in self.corners() {
                best = best.min(e.distance_to_point(c));
            }
        }
        best
    }
}

fn project(pts: &[Vec2], axis: Vec2) -> (f64, f64) {
    pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
        let v = p.dot(axis);
        (lo.min(v), hi.max(v))
    })
}

/// Simple polygon, counter-clockwise.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Polygon {
    pub points: Vec<Vec2>,
}

impl Polygon {
    pub fn new(points: Vec<Vec2>) -> Self {
        Polygon { points }
    }

    pub fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Polygon::new(vec![
            Vec2::new(x0, y0),
            Vec2::new(x1, y0),
            Vec2::new(x1, y1),
            Vec2::new(x0, y1),
        ])
    }

    pub fn edges(&self) -> Vec<Segment> {
        let n = self.points.len();
        (0..n)
            .map(|i| Segment::new(self.points[i], self.points[(i + 1) % n]))
            .collect()
    }

    pub fn signed_area(&self) -> f64 {
        self.edges().iter().map(|e| e.a.cross(e.b)).sum::<f64>() / 2.0
    }

    pub fn area(&self) -> f64 {
        self.signed_area().abs()
    }

    pub fn centroid(&self) -> Vec2 {
        let a = self.signed_area();
        if a == 0.0 {
            return self.points.first().copied().unwrap_or_default();
        }
        let (mut cx, mut cy) = (0.0, 0.0);
        for e in self.edges() {
            let k = e.a.cross(e.b);
            cx += (e.a.x + e.b.x) * k;
            cy += (e.a.y + e.b.y) * k;
        }
        Vec2::new(cx / (6.0 * a), cy / (6.0 * a))
    }

    pub fn bbox(&self) -> (Vec2, Vec2) {
        let mut lo = Vec2::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in &self.points {
            lo = Vec2::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Vec2::new(hi.x.max(p.x), hi.y.max(p.y));
        }
        (lo, hi)
    }

    /// Inclusive point-in-polygon test (boundary counts as inside).
    pub fn contains_point(&self, p: Vec2) -> bool {
        let edges = self.edges();
        if edges.iter().any(|e| e.distance_to_point(p) <= EPS) {
            return true;
        }
        let mut inside = false;
        for e in &edges {
            let (a, b) = (e.a, e.b);
            if (a.y > p.y) != (b.y > p.y) {
                let x = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
                if p.x < x {
                    inside = !inside;
                }
            }
        }
        inside
    }

    /// True when the rectangle lies inside the polygon (touching allowed).
    pub fn contains_obb(&self, r: &Obb) -> bool {
        if !r.corners().iter().all(|&c| self.contains_point(c)) {
            return false;
        }
        if self.points.iter().any(|&v| r.contains_point_inset(v, EPS)) {
            return false;
        }
        let edges = self.edges();
        !r.edges()
            .iter()
            .any(|re| edges.iter().any(|pe| re.crosses_properly(pe)))
    }

    /// Whether vertex `i` is convex (interior angle below 180°).
    pub fn is_convex_vertex(&self, i: usize) -> bool {
        let n = self.points.len();
        let prev = self.points[(i + n - 1) % n];
        let cur = self.points[i];
        let next = self.points[(i + 1) % n];
        (cur - prev).cross(next - cur) * self.signed_area().signum() > 0.0
    }

    pub fn is_simple(&self) -> bool {
        let edges = self.edges();
        let n = edges.len();
        if n < 3 {
            return false;
        }
        for i in 0..n {
            for j in (i + 1)..n {
                let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                if !adjacent && edges[i].intersects(&edges[j]) {
                    return false;
                }
            }
        }
        true
    }
}

/// Clip a polygon against a convex counter-clockwise clip polygon.
pub fn clip_convex(subject: &[Vec2], clip: &[Vec2]) -> Vec<Vec2> {
    let mut out = subject.to_vec();
    let n = clip.len();
    for i in 0..n {
        if out.is_empty() {
            break;
        }
        let (ca, cb) = (clip[i], clip[(i + 1) % n]);
        let inside = |p: Vec2| orient(ca, cb, p) >= -1e-12;
        let input = std::mem::take(&mut out);
        let m = input.len();
        for j in 0..m {
            let cur = input[j];
            let prev = input[(j + m - 1) % m];
            let (ci, pi) = (inside(cur), inside(prev));
            if ci {
                if !pi {
                    out.push(line_intersection(prev, cur, ca, cb));
                }
                out.push(cur);
            } else if pi {
                out.push(line_intersection(prev, cur, ca, cb));
            }
        }
    }
    out
}

fn line_intersection(p1: Vec2, p2: Vec2, q1: Vec2, q2: Vec2) -> Vec2 {
    let r = p2 - p1;
    let s = q2 - q1;
    let denom = r.cross(s);
    if denom.abs() < 1e-15 {
        return p1;
    }
    let t = (q1 - p1).cross(s) / denom;
    p1 + r * t
}

/// Distance from `p` to a convex polygon (0 when inside).
pub fn convex_distance(poly: &[Vec2], p: Vec2) -> f64 {
    if poly.is_empty() {
        return f64::INFINITY;
    }
    if poly.len() >= 3 {
        let n = poly.len();
        let inside = (0..n).all(|i| orient(poly[i], poly[(i + 1) % n], p) >= -1e-12);
        if inside {
            return 0.0;
        }
    }
    let n = poly.len();
    (0..n)
        .map(|i| Segment::new(poly[i], poly[(i + 1) % n]).distance_to_point(p))
        .fold(f64::INFINITY, f64::min)
}
