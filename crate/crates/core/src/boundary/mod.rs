//! Macroscopic treatment of non-lattice-conforming boundaries.
//!
//! Every boundary site `x_B` gets a one-dimensional quadratic
//! `p(s) = a₀ + a₁s + a₂s²` along the inward normal through its closest
//! boundary point `x_BC` (s = 0). The polynomial is fixed by the boundary
//! datum at `x_BC` (value for Dirichlet edges, normal slope for Neumann edges)
//! and by bilinearly interpolated displacements at two sample points
//! `x_I = x_B + Δh n̂` and `x_II = x_B + 2Δh n̂`. Evaluating `p` at `x_B` gives
//! one linear equation per boundary site; sample-cell corners that are
//! themselves boundary sites stay unknown and end up in the matrix `S` of
//! [`BoundarySystem`].

use crate::error::BoundaryError;
use crate::geometry::{closest_boundary_point, orient, BcKind, BoundarySource, CrackPath, DomainOutline, Segment, Vec2};
use crate::lattice::{opposite, LatticeState, Q};

mod dense;
mod system;

pub use dense::GrowableMatrix;
pub use system::{BoundaryRow, BoundarySystem, BoundaryUpdate};

/// Geometry the stencils are built against.
#[derive(Debug, Clone, Copy)]
pub struct BoundaryGeometry<'a> {
    pub outline: &'a DomainOutline,
    pub crack: Option<&'a CrackPath>,
    pub mu: f64,
}

impl BoundaryGeometry<'_> {
    /// Boundary datum at time `t`: the displacement on Dirichlet edges, the
    /// slope `∂w/∂s = −t*/μ` along the inward normal on Neumann edges.
    pub fn datum(&self, source: BoundarySource, t: f64) -> f64 {
        match source {
            BoundarySource::Edge(i) => {
                let bc = &self.outline.edges[i];
                let v = bc.value.eval(t);
                match bc.kind {
                    BcKind::Dirichlet => v,
                    BcKind::Neumann => -v / self.mu,
                }
            }
            // crack faces are traction free
            BoundarySource::CrackFace { .. } => 0.0,
        }
    }

    /// True if the straight path from `from` to `to` stays on one side of
    /// the crack and inside the outline.
    pub fn visible(&self, from: Vec2, to: Vec2) -> bool {
        if from == to {
            return self.outline.contains(to);
        }
        let path = Segment { a: from, b: to };
        if let Some(crack) = self.crack {
            if segments_cross(&path, &crack.hull()) {
                return false;
            }
        }
        for i in 0..self.outline.len() {
            if segments_cross(&path, &self.outline.edge(i)) {
                return false;
            }
        }
        self.outline.contains(to)
    }
}

/// Closed-segment intersection test, touching included.
fn segments_cross(s: &Segment, t: &Segment) -> bool {
    let o1 = orient(s.a, s.b, t.a);
    let o2 = orient(s.a, s.b, t.b);
    let o3 = orient(t.a, t.b, s.a);
    let o4 = orient(t.a, t.b, s.b);
    let scale = s.length() * t.length();
    let eps = 1e-12 * scale;
    let sg = |v: f64| if v > eps { 1 } else if v < -eps { -1 } else { 0 };
    let (o1, o2, o3, o4) = (sg(o1), sg(o2), sg(o3), sg(o4));
    if o1 * o2 < 0 && o3 * o4 < 0 {
        return true;
    }
    let on = |seg: &Segment, p: Vec2| seg.distance(p) <= 1e-12 * seg.length().max(1e-300);
    (o1 == 0 && on(s, t.a)) || (o2 == 0 && on(s, t.b)) || (o3 == 0 && on(t, s.a)) || (o4 == 0 && on(t, s.b))
}

/// Bilinear interpolation weights of a sample point; zero-weight corners are
/// dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct InterpolationCell {
    pub point: Vec2,
    pub corners: Vec<(usize, f64)>,
}

impl InterpolationCell {
    pub fn locate(state: &LatticeState, point: Vec2) -> Option<Self> {
        let spec = state.spec();
        let (u, v) = spec.lattice_coords(point);
        let (i0, j0) = (u.floor(), v.floor());
        let (fx, fy) = (u - i0, v - j0);
        let mut corners = Vec::with_capacity(4);
        for (di, wx) in [(0, 1.0 - fx), (1, fx)] {
            for (dj, wy) in [(0, 1.0 - fy), (1, fy)] {
                let weight = wx * wy;
                if weight == 0.0 {
                    continue;
                }
                let (i, j) = (i0 as i64 + di, j0 as i64 + dj);
                if i < 0 || j < 0 || i >= spec.nx as i64 || j >= spec.ny as i64 {
                    return None;
                }
                corners.push((spec.index(i as usize, j as usize), weight));
            }
        }
        Some(Self { point, corners })
    }

    pub fn interpolate(&self, w: impl Fn(usize) -> f64) -> f64 {
        self.corners.iter().map(|&(s, c)| c * w(s)).sum()
    }
}

/// Slots of `site` that streaming cannot supply: `α` is missing when the
/// link toward `x − c^α` is broken.
pub fn missing_mask(state: &LatticeState, site: usize) -> u8 {
    let mut m = 0;
    for alpha in 1..Q {
        if !state.link_intact(site, opposite(alpha)) {
            m |= 1 << alpha;
        }
    }
    m
}

/// Weights `(datum, samples)` such that `p(s_B) = datum_w · datum + Σ wₖ · w(sₖ)`.
///
/// Uses the quadratic through the datum and two samples, or the linear
/// polynomial when only one sample is given. Coordinates are scaled by `dh`.
pub fn polynomial_weights(kind: BcKind, s_b: f64, samples: &[f64], dh: f64) -> (f64, Vec<f64>) {
    let degree = samples.len();
    assert!(degree == 1 || degree == 2, "one or two samples");
    let n = degree + 1;
    let sb = s_b / dh;
    // rows: functionals applied to the monomials 1, σ, σ²
    let mut m = nalgebra::DMatrix::<f64>::zeros(n, n);
    match kind {
        BcKind::Dirichlet => m[(0, 0)] = 1.0,
        BcKind::Neumann => m[(0, 1)] = 1.0 / dh,
    }
    for (k, &s) in samples.iter().enumerate() {
        let sigma = s / dh;
        for p in 0..n {
            m[(k + 1, p)] = sigma.powi(p as i32);
        }
    }
    let phi = nalgebra::DVector::from_iterator(n, (0..n).map(|p| sb.powi(p as i32)));
    let l = m.transpose().lu().solve(&phi).expect("sample abscissae are distinct");
    (l[0], l.iter().skip(1).copied().collect())
}

/// Stencil of one boundary site.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundarySite {
    pub site: usize,
    pub x_b: Vec2,
    pub x_bc: Vec2,
    pub normal: Vec2,
    pub source: BoundarySource,
    pub kind: BcKind,
    /// Slots filled by the boundary rule rather than streaming.
    pub missing: u8,
    pub samples: Vec<InterpolationCell>,
    /// Normal coordinates of `x_B` and the samples, measured from `x_BC`.
    pub s_b: f64,
    pub s_samples: Vec<f64>,
    pub datum_weight: f64,
    pub sample_weights: Vec<f64>,
    pub linear_fallback: bool,
}

impl BoundarySite {
    /// Builds the stencil of boundary site `site`.
    pub fn build(site: usize, state: &LatticeState, geom: &BoundaryGeometry) -> Result<Self, BoundaryError> {
        let spec = state.spec();
        let dh = spec.dh;
        let x_b = spec.position(site);
        let cp = closest_boundary_point(geom.outline, geom.crack, x_b)?;
        let normal = cp.inward_normal;
        let mut samples = Vec::with_capacity(2);
        let mut s_samples = Vec::with_capacity(2);
        for k in 1..=2 {
            let x = x_b + normal * (k as f64 * dh);
            match sample_cell(state, geom, x_b, x) {
                Some(cell) => {
                    samples.push(cell);
                    s_samples.push(cp.distance + k as f64 * dh);
                }
                None => break,
            }
        }
        if samples.is_empty() {
            return Err(BoundaryError::UnresolvableStencil {
                site,
                reason: format!("first sample point {:?} is not resolvable", x_b + normal * dh),
            });
        }
        let linear_fallback = samples.len() == 1;
        let (datum_weight, sample_weights) = polynomial_weights(cp.kind, cp.distance, &s_samples, dh);
        Ok(Self {
            site,
            x_b,
            x_bc: cp.point,
            normal,
            source: cp.source,
            kind: cp.kind,
            missing: missing_mask(state, site),
            samples,
            s_b: cp.distance,
            s_samples,
            datum_weight,
            sample_weights,
            linear_fallback,
        })
    }

    /// `w(x_B) = datum_weight · datum + Σ (site, coefficient) · w(site)`,
    /// merged per site and sorted by site index.
    pub fn site_coefficients(&self) -> Vec<(usize, f64)> {
        let mut terms: Vec<(usize, f64)> = Vec::with_capacity(8);
        for (cell, &wk) in self.samples.iter().zip(&self.sample_weights) {
            for &(s, c) in &cell.corners {
                match terms.iter_mut().find(|(t, _)| *t == s) {
                    Some(entry) => entry.1 += wk * c,
                    None => terms.push((s, wk * c)),
                }
            }
        }
        terms.sort_by_key(|&(s, _)| s);
        terms
    }

    /// Evaluates the boundary polynomial at `x_B` for a given field.
    pub fn evaluate(&self, datum: f64, w: impl Fn(usize) -> f64) -> f64 {
        self.datum_weight * datum + self.site_coefficients().iter().map(|&(s, c)| c * w(s)).sum::<f64>()
    }
}

/// Interpolation cell for a sample point if the point and every corner with
/// nonzero weight are live and visible from `x_b`.
fn sample_cell(state: &LatticeState, geom: &BoundaryGeometry, x_b: Vec2, x: Vec2) -> Option<InterpolationCell> {
    if !geom.visible(x_b, x) {
        return None;
    }
    let cell = InterpolationCell::locate(state, x)?;
    for &(s, _) in &cell.corners {
        if !state.is_live(s) {
            return None;
        }
        let p = state.spec().position(s);
        if p != x_b && !geom.visible(x, p) {
            return None;
        }
    }
    Some(cell)
}

/// Value assigned to each missing slot so that `Σ_α f^α = (w_new − w_old)/Δt`.
pub fn missing_value(missing: u8, f: &[f64; Q], w_new: f64, w_old: f64, dt: f64) -> f64 {
    let n_miss = missing.count_ones() as f64;
    let known: f64 = (0..Q).filter(|&a| missing & (1 << a) == 0).map(|a| f[a]).sum();
    ((w_new - w_old) / dt - known) / n_miss
}

/// Fills the missing slots of `f` in place.
pub fn reconstruct_missing(missing: u8, f: &mut [f64; Q], w_new: f64, w_old: f64, dt: f64) {
    if missing == 0 {
        return;
    }
    let v = missing_value(missing, f, w_new, w_old, dt);
    for (a, slot) in f.iter_mut().enumerate() {
        if missing & (1 << a) != 0 {
            *slot = v;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{CrackEnd, EdgeCondition};
    use crate::lattice::{LatticeSpec, MaterialParams};
    use crate::load::TimeFunction;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn reconstruction_examples() {
        let mut f = [0.25, 0.0, 0.0, 0.0, 0.0];
        reconstruct_missing(1 << 2, &mut f, 1.0, 0.0, 1.0);
        assert_abs_diff_eq!(f[2], 0.75);
        let mut f = [0.0; Q];
        reconstruct_missing((1 << 1) | (1 << 4), &mut f, 1.0, 0.0, 1.0);
        assert_eq!(f, [0.0, 0.5, 0.0, 0.0, 0.5]);
    }

    proptest! {
        #[test]
        fn reconstruction_hits_target_velocity(mask in 1u8..16, f in proptest::array::uniform5(-1.0..1.0f64),
                                               w_new in -1.0..1.0f64, w_old in -1.0..1.0f64, dt in 0.01..1.0f64) {
            let missing = mask << 1;
            let mut g = f;
            reconstruct_missing(missing, &mut g, w_new, w_old, dt);
            let target = (w_new - w_old) / dt;
            prop_assert!((g.iter().sum::<f64>() - target).abs() <= 1e-12 * target.abs().max(1.0));
        }
    }

    #[test]
    fn polynomial_weights_reproduce_quadratics() {
        let dh = 0.1;
        let (sb, s1, s2) = (0.03, 0.13, 0.23);
        let p = |s: f64| 0.7 - 2.0 * s + 5.0 * s * s;
        let dp = |s: f64| -2.0 + 10.0 * s;
        let (d, w) = polynomial_weights(BcKind::Dirichlet, sb, &[s1, s2], dh);
        assert_abs_diff_eq!(d * p(0.0) + w[0] * p(s1) + w[1] * p(s2), p(sb), epsilon = 1e-13);
        let (d, w) = polynomial_weights(BcKind::Neumann, sb, &[s1, s2], dh);
        assert_abs_diff_eq!(d * dp(0.0) + w[0] * p(s1) + w[1] * p(s2), p(sb), epsilon = 1e-13);
        let lin = |s: f64| 0.3 + 4.0 * s;
        let (d, w) = polynomial_weights(BcKind::Dirichlet, sb, &[s1], dh);
        assert_abs_diff_eq!(d * lin(0.0) + w[0] * lin(s1), lin(sb), epsilon = 1e-13);
        let (d, w) = polynomial_weights(BcKind::Neumann, sb, &[s1], dh);
        assert_abs_diff_eq!(d * 4.0 + w[0] * lin(s1), lin(sb), epsilon = 1e-13);
    }

    fn square(top: EdgeCondition) -> DomainOutline {
        DomainOutline::rectangle(
            Vec2::new(0.0, 0.0),
            Vec2::new(1.0, 1.0),
            EdgeCondition::traction_free(),
            EdgeCondition::traction_free(),
            top,
            EdgeCondition::traction_free(),
        )
        .unwrap()
    }

    fn lattice(outline: &DomainOutline, crack: Option<&CrackPath>) -> LatticeState {
        let m = MaterialParams::new(1.0, 1.0).unwrap();
        let dh = 1.0 / 8.0;
        let spec = LatticeSpec::new(8, 8, dh, &m, 2.0, 1.0, Vec2::new(dh / 2.0, dh / 2.0)).unwrap();
        let mut st = LatticeState::new(spec, |p| outline.contains(p));
        if let Some(c) = crack {
            for s in 0..st.len() {
                for a in 1..Q {
                    if let Some(nb) = st.spec().neighbor(s, a) {
                        let (p, q) = (st.spec().position(s), st.spec().position(nb));
                        if st.link_intact(s, a) && crate::geometry::segment_intersects_link(&c.hull(), p, q).unwrap() {
                            st.sever_link(s, a);
                        }
                    }
                }
            }
        }
        st.refresh_roles();
        st
    }

    #[test]
    fn flat_top_edge_stencil() {
        let outline = square(EdgeCondition::dirichlet(TimeFunction::Constant { value: 1.0 }));
        let st = lattice(&outline, None);
        let geom = BoundaryGeometry { outline: &outline, crack: None, mu: 1.0 };
        let site = st.spec().index(4, 7);
        let b = BoundarySite::build(site, &st, &geom).unwrap();
        assert_eq!(b.kind, BcKind::Dirichlet);
        assert_abs_diff_eq!(b.normal.y, -1.0);
        assert_abs_diff_eq!(b.x_bc.y, 1.0);
        assert_eq!(b.missing, 1 << 4);
        assert!(!b.linear_fallback);
        for cell in &b.samples {
            let sum: f64 = cell.corners.iter().map(|c| c.1).sum();
            assert_abs_diff_eq!(sum, 1.0, epsilon = 1e-14);
            assert!(cell.corners.iter().all(|&(_, w)| (0.0..=1.0).contains(&w)));
            assert!(cell.point.y < b.x_b.y);
        }
    }

    #[test]
    fn crack_face_stencil_points_away_from_crack() {
        let outline = square(EdgeCondition::traction_free());
        let crack = CrackPath::new(vec![Vec2::new(0.0, 0.5), Vec2::new(0.6, 0.5)], &[CrackEnd::End]).unwrap();
        let st = lattice(&outline, Some(&crack));
        let geom = BoundaryGeometry { outline: &outline, crack: Some(&crack), mu: 1.0 };
        let above = BoundarySite::build(st.spec().index(2, 4), &st, &geom).unwrap();
        assert_eq!(above.source, BoundarySource::CrackFace { upper: true });
        assert_abs_diff_eq!(above.x_bc.y, 0.5);
        assert!(above.samples.iter().all(|c| c.point.y > 0.5));
        let below = BoundarySite::build(st.spec().index(2, 3), &st, &geom).unwrap();
        assert!(below.samples.iter().all(|c| c.point.y < 0.5));
    }

    #[test]
    fn quadratic_field_is_reproduced() {
        let outline = square(EdgeCondition::dirichlet(TimeFunction::Constant { value: 0.0 }));
        let st = lattice(&outline, None);
        let geom = BoundaryGeometry { outline: &outline, crack: None, mu: 1.0 };
        let field = |p: Vec2| p.x * p.x;
        for site in st.boundary_sites() {
            let b = BoundarySite::build(site, &st, &geom).unwrap();
            let datum = match b.kind {
                BcKind::Dirichlet => field(b.x_bc),
                BcKind::Neumann => -(2.0 * b.x_bc.x) * (-b.normal.x),
            };
            let got = b.evaluate(datum, |s| field(st.spec().position(s)));
            assert_abs_diff_eq!(got, field(b.x_b), epsilon = 1e-12);
        }
    }

    #[test]
    fn cells_outside_the_lattice_are_rejected() {
        let outline = square(EdgeCondition::traction_free());
        let st = lattice(&outline, None);
        assert!(InterpolationCell::locate(&st, Vec2::new(-0.5, 0.5)).is_none());
        let c = InterpolationCell::locate(&st, Vec2::new(3.0 / 16.0, 0.25)).unwrap();
        assert_eq!(c.corners.len(), 2);
    }
}
