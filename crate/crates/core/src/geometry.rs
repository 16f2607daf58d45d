//! Lattice-independent line geometry: the domain outline, straight cracks,
//! link intersection tests and closest-point queries.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::GeometryError;
use crate::load::TimeFunction;

/// Relative tolerance of the orientation predicates.
pub const ORIENT_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 3D cross product.
    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn normalized(self) -> Vec2 {
        let n = self.norm();
        Vec2::new(self.x / n, self.y / n)
    }

    /// Counter-clockwise rotation by 90 degrees.
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    pub fn distance(self, o: Vec2) -> f64 {
        (self - o).norm()
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
    fn mul(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// Twice the signed area of the triangle (a, b, c).
pub fn orient(a: Vec2, b: Vec2, c: Vec2) -> f64 {
    (b - a).cross(c - a)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub a: Vec2,
    pub b: Vec2,
}

impl Segment {
    pub fn new(a: Vec2, b: Vec2) -> Result<Self, GeometryError> {
        if a.distance(b) == 0.0 || !(a.x.is_finite() && a.y.is_finite() && b.x.is_finite() && b.y.is_finite()) {
            return Err(GeometryError::DegenerateSegment);
        }
        Ok(Self { a, b })
    }

    pub fn length(&self) -> f64 {
        self.a.distance(self.b)
    }

    pub fn direction(&self) -> Vec2 {
        (self.b - self.a).normalized()
    }

    /// Closest point on the closed segment and its parameter in [0, 1].
    pub fn closest_point(&self, x: Vec2) -> (Vec2, f64) {
        let d = self.b - self.a;
        let t = ((x - self.a).dot(d) / d.dot(d)).clamp(0.0, 1.0);
        (self.a + d * t, t)
    }

    pub fn distance(&self, x: Vec2) -> f64 {
        self.closest_point(x).0.distance(x)
    }
}

/// Does the crack segment `seg` cut the lattice link between `p` and `q`?
///
/// The link is treated as the open segment (p, q). A segment endpoint lying
/// on the link counts as a cut. A segment collinear with the link is a setup
/// error since the crack must pass strictly between lattice sites.
pub fn segment_intersects_link(seg: &Segment, p: Vec2, q: Vec2) -> Result<bool, GeometryError> {
    let scale = seg.length() * p.distance(q);
    let tol = ORIENT_EPS * scale;
    let sign = |v: f64| -> i8 {
        if v > tol {
            1
        } else if v < -tol {
            -1
        } else {
            0
        }
    };
    let op = sign(orient(seg.a, seg.b, p));
    let oq = sign(orient(seg.a, seg.b, q));
    if op == 0 && oq == 0 {
        let t_a = (seg.a - p).dot(q - p) / (q - p).dot(q - p);
        let t_b = (seg.b - p).dot(q - p) / (q - p).dot(q - p);
        let (lo, hi) = if t_a < t_b { (t_a, t_b) } else { (t_b, t_a) };
        if hi > 0.0 && lo < 1.0 {
            return Err(GeometryError::CollinearCrack { p, q });
        }
        return Ok(false);
    }
    // the open link excludes its end sites
    if op * oq >= 0 {
        return Ok(false);
    }
    let oa = sign(orient(p, q, seg.a));
    let ob = sign(orient(p, q, seg.b));
    Ok(oa * ob <= 0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BcKind {
    Dirichlet,
    Neumann,
}

/// Boundary condition on one outline edge. For Neumann edges the value is
/// the prescribed traction t*_z.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeCondition {
    pub kind: BcKind,
    pub value: TimeFunction,
}

impl EdgeCondition {
    pub fn dirichlet(value: TimeFunction) -> Self {
        Self { kind: BcKind::Dirichlet, value }
    }

    pub fn traction_free() -> Self {
        Self { kind: BcKind::Neumann, value: TimeFunction::Constant { value: 0.0 } }
    }
}

/// Closed simple polygon; edge `i` runs from vertex `i` to vertex `i + 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainOutline {
    pub vertices: Vec<Vec2>,
    pub edges: Vec<EdgeCondition>,
}

impl DomainOutline {
    pub fn new(vertices: Vec<Vec2>, edges: Vec<EdgeCondition>) -> Result<Self, GeometryError> {
        let outline = Self { vertices, edges };
        outline.validate()?;
        Ok(outline)
    }

    /// Axis-aligned rectangle with edges ordered bottom, right, top, left.
    pub fn rectangle(min: Vec2, max: Vec2, bottom: EdgeCondition, right: EdgeCondition, top: EdgeCondition, left: EdgeCondition) -> Result<Self, GeometryError> {
        Self::new(
            vec![min, Vec2::new(max.x, min.y), max, Vec2::new(min.x, max.y)],
            vec![bottom, right, top, left],
        )
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        let n = self.vertices.len();
        if n < 3 || self.edges.len() != n {
            return Err(GeometryError::InvalidOutline(format!(
                "{} vertices and {} edge conditions",
                n,
                self.edges.len()
            )));
        }
        for i in 0..n {
            let e = self.edge(i);
            if e.length() == 0.0 {
                return Err(GeometryError::InvalidOutline(format!("edge {i} has zero length")));
            }
        }
        for i in 0..n {
            for j in i + 1..n {
                if j == i + 1 || (i == 0 && j == n - 1) {
                    continue;
                }
                let (ei, ej) = (self.edge(i), self.edge(j));
                if segments_touch(&ei, &ej) {
                    return Err(GeometryError::InvalidOutline(format!("edges {i} and {j} intersect")));
                }
            }
        }
        if self.signed_area() == 0.0 {
            return Err(GeometryError::InvalidOutline("zero area".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn edge(&self, i: usize) -> Segment {
        let n = self.vertices.len();
        Segment { a: self.vertices[i], b: self.vertices[(i + 1) % n] }
    }

    pub fn signed_area(&self) -> f64 {
        let n = self.vertices.len();
        (0..n).map(|i| self.vertices[i].cross(self.vertices[(i + 1) % n])).sum::<f64>() / 2.0
    }

    /// Outward unit normal of edge `i`.
    pub fn outward_normal(&self, i: usize) -> Vec2 {
        let d = self.edge(i).direction();
        // for a counter-clockwise polygon the interior lies to the left
        if self.signed_area() > 0.0 {
            Vec2::new(d.y, -d.x)
        } else {
            Vec2::new(-d.y, d.x)
        }
    }

    /// Even-odd point-in-polygon test.
    pub fn contains(&self, p: Vec2) -> bool {
        let n = self.vertices.len();
        let mut inside = false;
        let mut j = n - 1;
        for i in 0..n {
            let (vi, vj) = (self.vertices[i], self.vertices[j]);
            if (vi.y > p.y) != (vj.y > p.y) {
                let x = vj.x + (p.y - vj.y) * (vi.x - vj.x) / (vi.y - vj.y);
                if p.x < x {
                    inside = !inside;
                }
            }
            j = i;
        }
        inside
    }

    pub fn distance(&self, p: Vec2) -> f64 {
        (0..self.len()).map(|i| self.edge(i).distance(p)).fold(f64::INFINITY, f64::min)
    }

    pub fn bounding_box(&self) -> (Vec2, Vec2) {
        let mut lo = Vec2::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for v in &self.vertices {
            lo = Vec2::new(lo.x.min(v.x), lo.y.min(v.y));
            hi = Vec2::new(hi.x.max(v.x), hi.y.max(v.y));
        }
        (lo, hi)
    }
}

fn segments_touch(s: &Segment, t: &Segment) -> bool {
    let o1 = orient(s.a, s.b, t.a);
    let o2 = orient(s.a, s.b, t.b);
    let o3 = orient(t.a, t.b, s.a);
    let o4 = orient(t.a, t.b, s.b);
    if o1 * o2 < 0.0 && o3 * o4 < 0.0 {
        return true;
    }
    let on = |a: Vec2, b: Vec2, p: Vec2| Segment { a, b }.distance(p) == 0.0;
    on(s.a, s.b, t.a) || on(s.a, s.b, t.b) || on(t.a, t.b, s.a) || on(t.a, t.b, s.b)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CrackEnd {
    Start,
    End,
}

/// An active crack tip.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrackTip {
    pub end: CrackEnd,
    pub position: Vec2,
    /// Unit growth direction; the local ξ axis.
    pub direction: Vec2,
    /// Accumulated extension since setup.
    pub extension: f64,
    /// Current relative speed v = ȧ / c_s.
    pub speed: f64,
    pub halted: bool,
}

/// Straight crack polyline with one or two tips.
#[derive(Debug, Clone, PartialEq)]
pub struct CrackPath {
    vertices: Vec<Vec2>,
    tips: Vec<CrackTip>,
}

impl CrackPath {
    /// `active` lists which ends of the polyline grow.
    pub fn new(vertices: Vec<Vec2>, active: &[CrackEnd]) -> Result<Self, GeometryError> {
        if vertices.len() < 2 {
            return Err(GeometryError::InvalidCrack("a crack needs at least two vertices".into()));
        }
        let first = vertices[0];
        let last = *vertices.last().unwrap();
        let chord = Segment::new(first, last).map_err(|_| GeometryError::InvalidCrack("crack has zero length".into()))?;
        let d = chord.direction();
        for v in &vertices {
            if d.cross(*v - first).abs() > 1e-9 * chord.length().max(1.0) {
                return Err(GeometryError::InvalidCrack("crack vertices are not collinear".into()));
            }
        }
        let mut tips = Vec::new();
        for &end in active {
            if tips.iter().any(|t: &CrackTip| t.end == end) {
                return Err(GeometryError::InvalidCrack("duplicate crack tip".into()));
            }
            let (position, direction) = match end {
                CrackEnd::Start => (first, -d),
                CrackEnd::End => (last, d),
            };
            tips.push(CrackTip { end, position, direction, extension: 0.0, speed: 0.0, halted: false });
        }
        Ok(Self { vertices, tips })
    }

    pub fn vertices(&self) -> &[Vec2] {
        &self.vertices
    }

    pub fn tips(&self) -> &[CrackTip] {
        &self.tips
    }

    pub fn tip_mut(&mut self, i: usize) -> &mut CrackTip {
        &mut self.tips[i]
    }

    pub fn first(&self) -> Vec2 {
        self.vertices[0]
    }

    pub fn last(&self) -> Vec2 {
        *self.vertices.last().unwrap()
    }

    /// Unit vector from the first to the last vertex.
    pub fn axis(&self) -> Vec2 {
        (self.last() - self.first()).normalized()
    }

    /// The whole crack as one segment; valid because cracks stay straight.
    pub fn hull(&self) -> Segment {
        Segment { a: self.first(), b: self.last() }
    }

    pub fn segments(&self) -> impl Iterator<Item = Segment> + '_ {
        self.vertices.windows(2).map(|w| Segment { a: w[0], b: w[1] })
    }

    pub fn length(&self) -> f64 {
        self.first().distance(self.last())
    }

    /// Moves tip `i` by `da` along its direction and returns the new segment.
    pub fn extend_tip(&mut self, i: usize, da: f64) -> Result<Segment, GeometryError> {
        let tip = &mut self.tips[i];
        let prev = tip.position;
        let next = prev + tip.direction * da;
        let seg = Segment::new(prev, next)?;
        tip.position = next;
        tip.extension += da;
        match tip.end {
            CrackEnd::Start => self.vertices.insert(0, next),
            CrackEnd::End => self.vertices.push(next),
        }
        Ok(seg)
    }
}

/// Polar coordinates (r, φ) of `x` about a crack tip, with φ ∈ (−π, π]
/// measured from the growth direction and positive toward the face on the
/// left of the direction.
pub fn polar_about_tip(tip: &CrackTip, x: Vec2) -> (f64, f64) {
    let rel = x - tip.position;
    let r = rel.norm();
    let mut phi = tip.direction.cross(rel).atan2(tip.direction.dot(rel));
    if phi <= -PI {
        phi += 2.0 * PI;
    }
    (r, phi)
}

/// Which part of the geometry a closest point lies on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundarySource {
    Edge(usize),
    /// Crack face; `upper` is the face to the left of the crack axis.
    CrackFace { upper: bool },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosestPoint {
    pub point: Vec2,
    pub source: BoundarySource,
    pub kind: BcKind,
    /// Unit normal pointing from the boundary point toward `x`.
    pub inward_normal: Vec2,
    pub distance: f64,
}

/// Closest point on the outline edges and the crack faces. Ties within a
/// relative 1e-9 are resolved toward the lowest index; outline edges come
/// before the crack.
pub fn closest_boundary_point(outline: &DomainOutline, crack: Option<&CrackPath>, x: Vec2) -> Result<ClosestPoint, GeometryError> {
    let (lo, hi) = outline.bounding_box();
    let scale = (hi - lo).norm();
    let tol = 1e-9 * scale;
    let mut best: Option<(Vec2, BoundarySource, BcKind, f64)> = None;
    let mut consider = |p: Vec2, src: BoundarySource, kind: BcKind| {
        let d = p.distance(x);
        if best.map_or(true, |(_, _, _, bd)| d < bd - tol) {
            best = Some((p, src, kind, d));
        }
    };
    for i in 0..outline.len() {
        let (p, _) = outline.edge(i).closest_point(x);
        consider(p, BoundarySource::Edge(i), outline.edges[i].kind);
    }
    if let Some(crack) = crack {
        let hull = crack.hull();
        let (p, _) = hull.closest_point(x);
        let upper = crack.axis().cross(x - hull.a) > 0.0;
        consider(p, BoundarySource::CrackFace { upper }, BcKind::Neumann);
    }
    let (point, source, kind, distance) = best.ok_or(GeometryError::NoBoundary)?;
    if distance <= 1e-12 * scale {
        return Err(GeometryError::OnBoundary { x });
    }
    let inward_normal = (x - point) * (1.0 / distance);
    Ok(ClosestPoint { point, source, kind, inward_normal, distance })
}
