//! Crack-tip processing: SIF evaluation from the displacement jump, the
//! growth criterion, tip advance and localized link severing.

use std::collections::VecDeque;

use log::info;

use crate::boundary::{BoundaryGeometry, BoundarySite, BoundarySystem, BoundaryUpdate};
use crate::error::FractureError;
use crate::geometry::{segment_intersects_link, CrackEnd, CrackPath, CrackTip, DomainOutline, Segment, Vec2};
use crate::lattice::{LatticeState, SiteRole, Q};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CriterionMode {
    /// Growth at the prescribed rate `a_dot < c_s`.
    Steady { a_dot: f64 },
    KCriterion { k_c: f64, v_max: f64, r0: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FractureCriterion {
    pub mode: CriterionMode,
    /// Fixed evaluation distance; otherwise `r0 / (1 − v)`.
    pub r_min: Option<f64>,
}

impl FractureCriterion {
    pub fn steady(a_dot: f64, cs: f64, r_min: f64) -> Result<Self, FractureError> {
        let c = Self { mode: CriterionMode::Steady { a_dot }, r_min: Some(r_min) };
        c.validate(cs)?;
        Ok(c)
    }

    pub fn k_criterion(k_c: f64, v_max: f64, r0: f64) -> Result<Self, FractureError> {
        let c = Self { mode: CriterionMode::KCriterion { k_c, v_max, r0 }, r_min: None };
        c.validate(1.0)?;
        Ok(c)
    }

    pub fn validate(&self, cs: f64) -> Result<(), FractureError> {
        let bad = |m: &str| Err(FractureError::InvalidCriterion(m.into()));
        match self.mode {
            CriterionMode::Steady { a_dot } if !(a_dot > 0.0 && a_dot < cs) => return bad("a_dot must lie in (0, c_s)"),
            CriterionMode::KCriterion { k_c, .. } if !(k_c > 0.0) => return bad("K_C must be positive"),
            CriterionMode::KCriterion { v_max, .. } if !(v_max > 0.0 && v_max < 1.0) => return bad("v_max must lie in (0, 1)"),
            CriterionMode::KCriterion { r0, .. } if !(r0 > 0.0) => return bad("r0 must be positive"),
            _ => {}
        }
        match self.r_min {
            Some(r) if !(r > 0.0) => bad("r_min must be positive"),
            _ => Ok(()),
        }
    }

    /// Evaluation distance for a tip moving at relative speed `v`.
    pub fn r_min(&self, v: f64, cs: f64) -> Result<f64, FractureError> {
        if let Some(r) = self.r_min {
            return Ok(r);
        }
        match self.mode {
            CriterionMode::KCriterion { r0, .. } => r_min_of_v(v, r0),
            CriterionMode::Steady { a_dot } => Err(FractureError::InvalidCriterion(format!(
                "steady growth at {} needs an explicit r_min",
                a_dot / cs
            ))),
        }
    }
}

/// `r_min = r0 / (1 − v)`.
pub fn r_min_of_v(v: f64, r0: f64) -> Result<f64, FractureError> {
    if !(0.0..1.0).contains(&v) {
        return Err(FractureError::InvalidSpeed(v));
    }
    Ok(r0 / (1.0 - v))
}

/// `K = |w_up − w_down| (μ/4) √(2π/r)`.
pub fn evaluate_sif(w_up: f64, w_down: f64, r: f64, mu: f64) -> f64 {
    (w_up - w_down).abs() * mu / 4.0 * (2.0 * std::f64::consts::PI / r).sqrt()
}

/// Relative tip speed `v_max tanh(√((K/K_C)⁴ − 1))` above `K_C`, zero below.
#[allow(non_snake_case)]
pub fn crack_speed_of_K(k: f64, k_c: f64, v_max: f64) -> f64 {
    if k <= k_c {
        return 0.0;
    }
    let ratio = k / k_c;
    (v_max * (ratio.powi(4) - 1.0).sqrt().tanh()).min(v_max)
}

/// A severed link `a ↔ b` with its midpoint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutLink {
    pub a: usize,
    pub b: usize,
    pub mid: Vec2,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvaluationPair {
    /// Site on the left of the tip direction.
    pub above: usize,
    pub below: usize,
    /// Along-crack distance from the tip to the pair.
    pub r: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SifSample {
    pub t: f64,
    pub k: f64,
    pub r_used: f64,
    pub pair: (usize, usize),
}

/// Cut link whose along-crack distance behind the tip is the smallest one
/// in `[r_min, r_min + Δh]`.
pub fn select_evaluation_pair(tip: &CrackTip, cuts: &[CutLink], state: &LatticeState, r_min: f64) -> Option<EvaluationPair> {
    let dh = state.spec().dh;
    let tol = 1e-9 * dh;
    let mut best: Option<EvaluationPair> = None;
    for c in cuts {
        let r = (tip.position - c.mid).dot(tip.direction);
        if r < r_min - tol || r > r_min + dh + tol {
            continue;
        }
        if best.is_some_and(|b| b.r <= r) {
            continue;
        }
        let pa = state.spec().position(c.a) - tip.position;
        let (above, below) = if tip.direction.cross(pa) > 0.0 { (c.a, c.b) } else { (c.b, c.a) };
        best = Some(EvaluationPair { above, below, r });
    }
    best
}

/// Outcome of severing the links crossed by one segment.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Severed {
    /// Endpoints of the severed links, sorted and unique.
    pub sites: Vec<usize>,
    pub cuts: Vec<CutLink>,
}

fn crosses(state: &LatticeState, seg: &Segment, s: usize, alpha: usize) -> Result<Option<usize>, FractureError> {
    let spec = state.spec();
    let Some(nb) = spec.neighbor(s, alpha) else { return Ok(None) };
    let (p, q) = (spec.position(s), spec.position(nb));
    // periodic wrap links are not geometric neighbors
    if (p - q).norm() > 1.5 * spec.dh {
        return Ok(None);
    }
    Ok(segment_intersects_link(seg, p, q)?.then_some(nb))
}

fn cut(state: &mut LatticeState, s: usize, alpha: usize, nb: usize, out: &mut Severed) {
    state.sever_link(s, alpha);
    let mid = (state.spec().position(s) + state.spec().position(nb)) * 0.5;
    let (a, b) = if s < nb { (s, nb) } else { (nb, s) };
    out.cuts.push(CutLink { a, b, mid });
    out.sites.push(s);
    out.sites.push(nb);
}

fn finish(mut out: Severed) -> Severed {
    out.sites.sort_unstable();
    out.sites.dedup();
    out.cuts.sort_by_key(|c| (c.a, c.b));
    out
}

/// Severs every intact link crossed by `seg`, testing all links.
pub fn sever_links_scan(seg: &Segment, state: &mut LatticeState) -> Result<Severed, FractureError> {
    let mut out = Severed::default();
    for s in 0..state.len() {
        for alpha in 1..Q {
            if !state.link_intact(s, alpha) {
                continue;
            }
            if let Some(nb) = crosses(state, seg, s, alpha)? {
                cut(state, s, alpha, nb, &mut out);
            }
        }
    }
    Ok(finish(out))
}

/// Severs the links crossed by `seg` with a breadth-first search over links
/// that starts next to `seeds`.
pub fn sever_links(seg: &Segment, state: &mut LatticeState, seeds: &[usize]) -> Result<Severed, FractureError> {
    let mut out = Severed::default();
    let mut visited = vec![false; state.len()];
    let mut queue = VecDeque::new();
    let push = |s: usize, visited: &mut Vec<bool>, queue: &mut VecDeque<usize>| {
        if !visited[s] {
            visited[s] = true;
            queue.push_back(s);
        }
    };
    for &s in seeds {
        push(s, &mut visited, &mut queue);
        for alpha in 1..Q {
            if let Some(nb) = state.spec().neighbor(s, alpha) {
                push(nb, &mut visited, &mut queue);
            }
        }
    }
    while let Some(p) = queue.pop_front() {
        for alpha in 1..Q {
            if !state.link_intact(p, alpha) {
                continue;
            }
            if let Some(nb) = crosses(state, seg, p, alpha)? {
                cut(state, p, alpha, nb, &mut out);
                for end in [p, nb] {
                    for beta in 1..Q {
                        if let Some(n2) = state.spec().neighbor(end, beta) {
                            push(n2, &mut visited, &mut queue);
                        }
                    }
                }
            }
        }
    }
    Ok(finish(out))
}

/// Per-tip result of one crack-processing phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TipReport {
    pub end: CrackEnd,
    pub sample: Option<SifSample>,
    pub k: f64,
    /// Relative speed applied in this step.
    pub v: f64,
    pub extension: f64,
    pub grew: bool,
}

/// Crack state that lives next to the lattice: severed links and BFS seeds.
#[derive(Debug, Clone)]
pub struct FractureEngine {
    pub criterion: FractureCriterion,
    pub mu: f64,
    pub cs: f64,
    cuts: Vec<CutLink>,
    seeds: Vec<Vec<usize>>,
}

impl FractureEngine {
    /// Severs the initial crack with a full scan and seeds each tip's search
    /// with the pair of the cut closest to it.
    pub fn setup(criterion: FractureCriterion, crack: &CrackPath, state: &mut LatticeState, mu: f64) -> Result<Self, FractureError> {
        let cs = state.spec().cs;
        criterion.validate(cs)?;
        let mut cuts = Vec::new();
        for seg in crack.segments() {
            cuts.extend(sever_links_scan(&seg, state)?.cuts);
        }
        let seeds = crack
            .tips()
            .iter()
            .map(|tip| {
                cuts.iter()
                    .min_by(|x, y| {
                        let rx = (tip.position - x.mid).dot(tip.direction);
                        let ry = (tip.position - y.mid).dot(tip.direction);
                        rx.total_cmp(&ry)
                    })
                    .map(|c| vec![c.a, c.b])
                    .unwrap_or_else(|| nearest_live(state, tip.position).into_iter().collect())
            })
            .collect();
        Ok(Self { criterion, mu, cs, cuts, seeds })
    }

    pub fn cuts(&self) -> &[CutLink] {
        &self.cuts
    }

    /// SIF at tip `i` from the current field; `None` when the crack is too
    /// short for the evaluation interval.
    pub fn evaluate(&self, t: f64, tip: &CrackTip, state: &LatticeState) -> Result<Option<SifSample>, FractureError> {
        let r_min = self.criterion.r_min(tip.speed, self.cs)?;
        Ok(select_evaluation_pair(tip, &self.cuts, state, r_min).map(|p| SifSample {
            t,
            k: evaluate_sif(state.w()[p.above], state.w()[p.below], p.r, self.mu),
            r_used: p.r,
            pair: (p.above, p.below),
        }))
    }

    /// Evaluates every tip, grows those that meet the criterion, and updates
    /// the lattice links and the boundary system.
    pub fn step(
        &mut self,
        t: f64,
        state: &mut LatticeState,
        crack: &mut CrackPath,
        outline: &DomainOutline,
        system: &mut BoundarySystem,
    ) -> Result<Vec<TipReport>, FractureError> {
        let dt = state.spec().dt;
        let dh = state.spec().dh;
        let mut reports = Vec::with_capacity(crack.tips().len());
        for i in 0..crack.tips().len() {
            let tip = crack.tips()[i];
            let sample = self.evaluate(t, &tip, state)?;
            let k = sample.map_or(0.0, |s| s.k);
            let v = match self.criterion.mode {
                CriterionMode::Steady { a_dot } => a_dot / self.cs,
                CriterionMode::KCriterion { k_c, v_max, .. } => {
                    if k > k_c {
                        crack_speed_of_K(k, k_c, v_max)
                    } else {
                        0.0
                    }
                }
            };
            let mut grew = false;
            if tip.halted || v <= 0.0 {
                crack.tip_mut(i).speed = 0.0;
            } else {
                let da = v * self.cs * dt;
                let target = tip.position + tip.direction * da;
                if outline.distance(target) < 2.0 * dh || !outline.contains(target) {
                    info!("t = {t}: tip {:?} halted {} from the outline", tip.end, outline.distance(tip.position));
                    let tm = crack.tip_mut(i);
                    tm.halted = true;
                    tm.speed = 0.0;
                } else {
                    let seg = crack.extend_tip(i, da)?;
                    crack.tip_mut(i).speed = v;
                    self.grow(i, &seg, state, crack, outline, system)?;
                    grew = true;
                }
            }
            let tip = crack.tips()[i];
            reports.push(TipReport { end: tip.end, sample, k, v: if grew { v } else { 0.0 }, extension: tip.extension, grew });
        }
        Ok(reports)
    }

    fn grow(
        &mut self,
        i: usize,
        seg: &Segment,
        state: &mut LatticeState,
        crack: &CrackPath,
        outline: &DomainOutline,
        system: &mut BoundarySystem,
    ) -> Result<(), FractureError> {
        let severed = sever_links(seg, state, &self.seeds[i])?;
        if !severed.sites.is_empty() {
            self.seeds[i] = severed.sites.clone();
            self.cuts.extend_from_slice(&severed.cuts);
        }
        let geom = BoundaryGeometry { outline, crack: Some(crack), mu: self.mu };
        let mut update = BoundaryUpdate::default();
        for &s in &severed.sites {
            let was_boundary = state.role(s) == SiteRole::Boundary;
            state.refresh_role(s);
            if state.role(s) != SiteRole::Boundary {
                continue;
            }
            let b = BoundarySite::build(s, state, &geom)?;
            if was_boundary {
                update.rebuilt.push(b);
            } else {
                update.added.push(b);
            }
        }
        // stencils near the new segment see the moved tip even when no link was cut
        let reach = 3.0 * state.spec().dh;
        for old in system.sites() {
            if severed.sites.binary_search(&old.site).is_ok() || seg.distance(old.x_b) > reach {
                continue;
            }
            let b = BoundarySite::build(old.site, state, &geom)?;
            if b != *old {
                update.rebuilt.push(b);
            }
        }
        if !update.added.is_empty() || !update.rebuilt.is_empty() {
            system.extend(update)?;
        }
        Ok(())
    }
}

fn nearest_live(state: &LatticeState, x: Vec2) -> Option<usize> {
    (0..state.len())
        .filter(|&s| state.is_live(s))
        .min_by(|&a, &b| state.spec().position(a).distance(x).total_cmp(&state.spec().position(b).distance(x)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{DomainOutline, EdgeCondition};
    use crate::lattice::{LatticeSpec, MaterialParams};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn r_min_examples() {
        assert_eq!(r_min_of_v(0.0, 0.07).unwrap(), 0.07);
        assert_abs_diff_eq!(r_min_of_v(0.5, 0.07).unwrap(), 0.14, epsilon = 1e-15);
        assert!(r_min_of_v(1.0, 0.07).is_err());
        let c = FractureCriterion::steady(0.8, 1.0, 8.0 / 16.0).unwrap();
        assert_eq!(c.r_min(0.8, 1.0).unwrap(), 0.5);
    }

    #[test]
    fn sif_examples() {
        assert_eq!(evaluate_sif(0.3, 0.3, 1.0, 1.0), 0.0);
        assert_abs_diff_eq!(evaluate_sif(2.0, -2.0, 2.0 * PI, 1.0), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn speed_examples() {
        assert_eq!(crack_speed_of_K(0.006, 0.006, 0.85), 0.0);
        let k = 2f64.powf(0.25) * 0.006;
        assert_abs_diff_eq!(crack_speed_of_K(k, 0.006, 0.85), 0.85 * 1f64.tanh(), epsilon = 1e-12);
        assert_abs_diff_eq!(crack_speed_of_K(0.06, 0.006, 0.85), 0.85, epsilon = 1e-12);
    }

    #[test]
    fn criterion_validation() {
        assert!(FractureCriterion::steady(1.0, 1.0, 0.1).is_err());
        assert!(FractureCriterion::k_criterion(0.0, 0.5, 0.07).is_err());
        assert!(FractureCriterion::k_criterion(0.006, 1.0, 0.07).is_err());
        assert!(FractureCriterion::k_criterion(0.006, 0.85, 0.07).is_ok());
    }

    proptest! {
        #[test]
        fn speed_is_monotone_and_bounded(a in 0.0..5.0f64, b in 0.0..5.0f64, vmax in 0.1..0.99f64) {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            let (vl, vh) = (crack_speed_of_K(lo, 1.0, vmax), crack_speed_of_K(hi, 1.0, vmax));
            prop_assert!(vl <= vh && vh <= vmax && vl >= 0.0);
        }
    }

    fn grid(n: usize) -> LatticeState {
        let m = MaterialParams::new(1.0, 1.0).unwrap();
        let spec = LatticeSpec::new(n, n, 1.0, &m, 2.0, 1.0, Vec2::new(0.0, 0.0)).unwrap();
        LatticeState::new(spec, |_| true)
    }

    fn cell_corners(state: &LatticeState, p: Vec2) -> Vec<usize> {
        let (i, j) = (p.x.floor() as usize, p.y.floor() as usize);
        let spec = state.spec();
        vec![spec.index(i, j), spec.index(i + 1, j), spec.index(i, j + 1), spec.index(i + 1, j + 1)]
    }

    #[test]
    fn segment_between_columns_cuts_nothing() {
        let mut st = grid(10);
        let seg = Segment::new(Vec2::new(3.1, 4.5), Vec2::new(3.8, 4.5)).unwrap();
        let seeds = cell_corners(&st, seg.a);
        assert_eq!(sever_links(&seg, &mut st, &seeds).unwrap(), Severed::default());
    }

    #[test]
    fn one_vertical_link() {
        let mut st = grid(10);
        let seg = Segment::new(Vec2::new(3.8, 4.5), Vec2::new(4.3, 4.5)).unwrap();
        let seeds = cell_corners(&st, seg.a);
        let s = sever_links(&seg, &mut st, &seeds).unwrap();
        let spec = st.spec();
        assert_eq!(s.sites, vec![spec.index(4, 4), spec.index(4, 5)]);
        assert_eq!(s.cuts.len(), 1);
        assert!(!st.link_intact(spec.index(4, 4), 2));
        assert!(!st.link_intact(spec.index(4, 5), 4));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn bfs_matches_full_scan(x in 2.0..29.0f64, y in 2.0..29.0f64, len in 0.05..1.0f64, angle in 0.0..(2.0 * PI)) {
            let a = Vec2::new(x, y);
            let b = a + Vec2::new(angle.cos(), angle.sin()) * len;
            let seg = Segment::new(a, b).unwrap();
            let mut bfs = grid(32);
            let mut scan = bfs.clone();
            let seeds = cell_corners(&bfs, a);
            let expect = sever_links_scan(&seg, &mut scan);
            prop_assume!(expect.is_ok());
            let got = sever_links(&seg, &mut bfs, &seeds).unwrap();
            prop_assert_eq!(got, expect.unwrap());
            for s in 0..bfs.len() {
                prop_assert_eq!(bfs.link_mask(s), scan.link_mask(s));
            }
        }
    }

    fn open_square() -> DomainOutline {
        let free = EdgeCondition::traction_free;
        DomainOutline::rectangle(Vec2::new(0.0, 0.0), Vec2::new(10.0, 10.0), free(), free(), free(), free()).unwrap()
    }

    fn cracked(len: f64, criterion: FractureCriterion) -> (LatticeState, CrackPath, FractureEngine, BoundarySystem, DomainOutline) {
        let outline = open_square();
        let m = MaterialParams::new(1.0, 1.0).unwrap();
        let spec = LatticeSpec::new(10, 10, 1.0, &m, 2.0, 1.0, Vec2::new(0.5, 0.5)).unwrap();
        let mut st = LatticeState::new(spec, |p| outline.contains(p));
        let crack = CrackPath::new(vec![Vec2::new(0.0, 5.0), Vec2::new(len, 5.0)], &[CrackEnd::End]).unwrap();
        let engine = FractureEngine::setup(criterion, &crack, &mut st, 1.0).unwrap();
        st.refresh_roles();
        let geom = BoundaryGeometry { outline: &outline, crack: Some(&crack), mu: 1.0 };
        let sites = st.boundary_sites().into_iter().map(|s| BoundarySite::build(s, &st, &geom).unwrap()).collect();
        let system = BoundarySystem::assemble(sites, st.len()).unwrap();
        (st, crack, engine, system, outline)
    }

    #[test]
    fn short_crack_reports_zero() {
        let crit = FractureCriterion::steady(0.8, 1.0, 8.0).unwrap();
        let (st, crack, engine, _, _) = cracked(3.2, crit);
        assert_eq!(engine.evaluate(0.0, &crack.tips()[0], &st).unwrap(), None);
    }

    #[test]
    fn pair_selection_picks_the_column_in_range() {
        let crit = FractureCriterion::steady(0.2, 1.0, 1.5).unwrap();
        let (st, crack, engine, _, _) = cracked(4.7, crit);
        let tip = crack.tips()[0];
        let p = select_evaluation_pair(&tip, engine.cuts(), &st, 1.5).unwrap();
        assert_abs_diff_eq!(p.r, 2.2, epsilon = 1e-12);
        assert_eq!(p.above, st.spec().index(2, 5));
        assert_eq!(p.below, st.spec().index(2, 4));
    }

    #[test]
    fn subcritical_k_leaves_everything_untouched() {
        let crit = FractureCriterion::k_criterion(1.0, 0.85, 0.5).unwrap();
        let (mut st, mut crack, mut engine, mut sys, outline) = cracked(4.7, crit);
        let (st0, crack0, sys0) = (st.clone(), crack.clone(), sys.clone());
        let rep = engine.step(0.0, &mut st, &mut crack, &outline, &mut sys).unwrap();
        assert!(!rep[0].grew);
        assert_eq!(crack, crack0);
        assert_eq!(sys.rows(), sys0.rows());
        for s in 0..st.len() {
            assert_eq!(st.link_mask(s), st0.link_mask(s));
            assert_eq!(st.role(s), st0.role(s));
        }
    }

    #[test]
    fn crossing_one_column_adds_one_pair() {
        let crit = FractureCriterion::steady(0.8, 1.0, 1.5).unwrap();
        let (mut st, mut crack, mut engine, mut sys, outline) = cracked(4.2, crit);
        let before = sys.len();
        let dt = st.spec().dt;
        // 0.4 per step: 4.2 → 4.6 → 5.0 → 5.4 crosses the column at x = 4.5 only
        for k in 0..3 {
            engine.step(k as f64 * dt, &mut st, &mut crack, &outline, &mut sys).unwrap();
        }
        assert_abs_diff_eq!(crack.tips()[0].position.x, 4.2 + 3.0 * 0.8 * dt, epsilon = 1e-12);
        assert_eq!(sys.len(), before + 2);
        let full = BoundarySystem::assemble(sys.sites().to_vec(), st.len()).unwrap();
        assert!((sys.inverse().to_dmatrix() - full.inverse().to_dmatrix()).abs().max() < 1e-12);
    }
}
