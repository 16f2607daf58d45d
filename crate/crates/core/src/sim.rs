//! The time loop.

use log::debug;

use crate::boundary::{reconstruct_missing, BoundaryGeometry, BoundarySite, BoundarySystem};
use crate::error::SimError;
use crate::fracture::{sever_links_scan, FractureEngine, TipReport};
use crate::geometry::{CrackEnd, CrackPath, DomainOutline, Vec2};
use crate::lattice::calibrate::DEFAULT_KAPPA;
use crate::lattice::{LatticeSpec, LatticeState, MaterialParams, SiteRole};
use crate::scenario::ScenarioConfig;

/// Sub-steps of one time step, in execution order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    Equilibrium,
    AdvanceTime,
    StreamCollide,
    SolveBoundary,
    ReconstructBoundary,
    Integrate,
    ProcessCrack,
}

impl Phase {
    pub const ORDER: [Phase; 7] = [
        Phase::Equilibrium,
        Phase::AdvanceTime,
        Phase::StreamCollide,
        Phase::SolveBoundary,
        Phase::ReconstructBoundary,
        Phase::Integrate,
        Phase::ProcessCrack,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TipRecord {
    pub k: f64,
    pub v: f64,
    pub da: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeSeriesRecord {
    pub t: f64,
    pub left: Option<TipRecord>,
    pub right: Option<TipRecord>,
}

/// Lattice placed over the outline's bounding box with sites at cell
/// centres, shifted by half a cell if a straight axis-aligned crack would
/// otherwise run along a lattice line.
pub fn lattice_for(outline: &DomainOutline, crack: Option<&CrackPath>, dh: f64, material: &MaterialParams, kappa: f64, tau: f64) -> Result<LatticeSpec, SimError> {
    let (min, max) = outline.bounding_box();
    let mut origin = min + Vec2::new(dh / 2.0, dh / 2.0);
    if let Some(c) = crack {
        let d = c.axis();
        let on_line = |offset: f64| {
            let u = offset / dh;
            (u - u.round()).abs() < 1e-9
        };
        if d.y.abs() < 1e-12 && on_line(c.first().y - origin.y) {
            origin.y += dh / 2.0;
        }
        if d.x.abs() < 1e-12 && on_line(c.first().x - origin.x) {
            origin.x += dh / 2.0;
        }
    }
    let count = |span: f64| ((span / dh) - 1e-9).ceil().max(1.0) as usize;
    let (nx, ny) = (count(max.x - min.x), count(max.y - min.y));
    LatticeSpec::new(nx, ny, dh, material, kappa, tau, origin).map_err(|e| SimError::Config(e.to_string()))
}

/// A running simulation.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub outline: DomainOutline,
    pub crack: Option<CrackPath>,
    pub engine: Option<FractureEngine>,
    pub state: LatticeState,
    pub system: BoundarySystem,
    pub material: MaterialParams,
    step: u64,
    w_boundary: Vec<f64>,
    last_reports: Vec<TipReport>,
}

impl Simulation {
    pub fn new(cfg: &ScenarioConfig) -> Result<Self, SimError> {
        cfg.validate()?;
        let material = MaterialParams::new(cfg.material.mu, cfg.material.rho).map_err(|e| SimError::Config(e.to_string()))?;
        let kappa = match (cfg.lattice.kappa, cfg.lattice.dt) {
            (Some(k), _) => k,
            (None, Some(dt)) => cfg.lattice.dh / (material.cs() * dt),
            (None, None) => DEFAULT_KAPPA,
        };
        let outline = cfg.domain.clone();
        let crack = match &cfg.crack {
            Some(c) => Some(CrackPath::new(c.vertices.clone(), &c.tips)?),
            None => None,
        };
        let spec = lattice_for(&outline, crack.as_ref(), cfg.lattice.dh, &material, kappa, cfg.lattice.tau)?;
        let dh = spec.dh;
        let mut state = LatticeState::new(spec, |p| outline.contains(p) && outline.distance(p) > 1e-9 * dh);
        let engine = match (&crack, &cfg.criterion) {
            (Some(c), Some(crit)) => {
                Some(FractureEngine::setup(crit.criterion(), c, &mut state, material.mu).map_err(|e| SimError::Config(e.to_string()))?)
            }
            (Some(c), None) => {
                for seg in c.segments() {
                    sever_links_scan(&seg, &mut state).map_err(|e| SimError::Config(e.to_string()))?;
                }
                None
            }
            _ => None,
        };
        Self::from_parts(outline, crack, engine, state, material)
    }

    /// Classifies sites and assembles the boundary system for a lattice
    /// whose links are already severed.
    pub fn from_parts(
        outline: DomainOutline,
        crack: Option<CrackPath>,
        engine: Option<FractureEngine>,
        mut state: LatticeState,
        material: MaterialParams,
    ) -> Result<Self, SimError> {
        state.refresh_roles();
        state.check_link_symmetry().map_err(|e| SimError::Lattice { step: 0, source: e })?;
        let geom = BoundaryGeometry { outline: &outline, crack: crack.as_ref(), mu: material.mu };
        let sites = state
            .boundary_sites()
            .into_iter()
            .map(|s| BoundarySite::build(s, &state, &geom))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| SimError::Boundary { step: 0, source: e })?;
        let system = BoundarySystem::assemble(sites, state.len()).map_err(|e| SimError::Boundary { step: 0, source: e })?;
        state.initialize_equilibrium();
        debug!("lattice {}x{}, {} boundary sites", state.spec().nx, state.spec().ny, system.len());
        Ok(Self { outline, crack, engine, state, system, material, step: 0, w_boundary: Vec::new(), last_reports: Vec::new() })
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn time(&self) -> f64 {
        self.step as f64 * self.state.spec().dt
    }

    pub fn dt(&self) -> f64 {
        self.state.spec().dt
    }

    /// Boundary displacements solved in the current step, ordered like the
    /// boundary system's sites.
    pub fn boundary_solution(&self) -> &[f64] {
        &self.w_boundary
    }

    pub fn last_reports(&self) -> &[TipReport] {
        &self.last_reports
    }

    pub fn geometry(&self) -> BoundaryGeometry<'_> {
        BoundaryGeometry { outline: &self.outline, crack: self.crack.as_ref(), mu: self.material.mu }
    }

    pub fn advance(&mut self) -> Result<(), SimError> {
        self.advance_with(&mut |_, _| {})
    }

    /// One time step; `hook` runs after every phase.
    pub fn advance_with(&mut self, hook: &mut dyn FnMut(Phase, &Simulation)) -> Result<(), SimError> {
        let step = self.step + 1;

        self.state.compute_equilibria();
        hook(Phase::Equilibrium, self);

        self.step = step;
        let t = self.time();
        let dt = self.dt();
        hook(Phase::AdvanceTime, self);

        self.state.stream_collide().map_err(|e| SimError::Lattice { step, source: e })?;
        self.state.update_interior_velocity();
        hook(Phase::StreamCollide, self);

        let (w, wdot) = (self.state.w(), self.state.wdot());
        self.w_boundary = self.system.solve(&self.geometry(), t, |s| w[s] + dt * wdot[s]);
        hook(Phase::SolveBoundary, self);

        for (b, &w_new) in self.system.sites().iter().zip(&self.w_boundary) {
            let s = b.site;
            let w_old = self.state.w()[s];
            let missing = self.state.missing(s);
            let f = self.state.f_mut(s);
            reconstruct_missing(missing, f, w_new, w_old, dt);
            let v = f.iter().sum();
            self.state.wdot_mut()[s] = v;
        }
        hook(Phase::ReconstructBoundary, self);

        self.state.integrate();
        hook(Phase::Integrate, self);

        self.last_reports.clear();
        if let (Some(engine), Some(crack)) = (self.engine.as_mut(), self.crack.as_mut()) {
            self.last_reports = engine
                .step(t, &mut self.state, crack, &self.outline, &mut self.system)
                .map_err(|e| SimError::Fracture { step, source: e })?;
        }
        hook(Phase::ProcessCrack, self);

        if step % 64 == 0 && !self.field_is_finite() {
            return Err(SimError::Numerical(format!("step {step}: displacement field is no longer finite")));
        }
        Ok(())
    }

    pub fn field_is_finite(&self) -> bool {
        self.state.w().iter().all(|v| v.is_finite())
    }

    /// Per-tip state after the last step.
    pub fn record(&self) -> TimeSeriesRecord {
        let mut rec = TimeSeriesRecord { t: self.time(), left: None, right: None };
        if let Some(crack) = &self.crack {
            for tip in crack.tips() {
                let r = self.last_reports.iter().find(|r| r.end == tip.end);
                let tr = TipRecord { k: r.map_or(0.0, |r| r.k), v: r.map_or(0.0, |r| r.v), da: tip.extension };
                match tip.end {
                    CrackEnd::Start => rec.left = Some(tr),
                    CrackEnd::End => rec.right = Some(tr),
                }
            }
        }
        rec
    }

    pub fn steps_for(&self, t_max: f64) -> u64 {
        (t_max / self.dt() - 1e-9).ceil().max(0.0) as u64
    }

    /// Runs until `t_max`, handing a record to `sink` every `sample_every`
    /// steps.
    pub fn run(
        &mut self,
        t_max: f64,
        sample_every: u64,
        sink: &mut dyn FnMut(&Simulation, &TimeSeriesRecord) -> Result<(), SimError>,
    ) -> Result<(), SimError> {
        let n = self.steps_for(t_max);
        while self.step < n {
            self.advance()?;
            if self.step % sample_every == 0 {
                let rec = self.record();
                sink(self, &rec)?;
            }
        }
        if !self.field_is_finite() {
            return Err(SimError::Numerical(format!("step {}: displacement field is no longer finite", self.step)));
        }
        Ok(())
    }

    pub fn boundary_sites(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.state.len()).filter(|&s| self.state.role(s) == SiteRole::Boundary)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::EdgeCondition;
    use crate::load::TimeFunction;
    use crate::scenario::{CrackConfig, CriterionConfig, LatticeConfig, MaterialConfig, OutputConfig, RunConfig};

    fn strip(load: f64) -> ScenarioConfig {
        let free = EdgeCondition::traction_free;
        let pull = |s: f64| EdgeCondition::dirichlet(TimeFunction::SinSquaredRamp { amplitude: s * load, ramp_time: 0.5 });
        ScenarioConfig {
            material: MaterialConfig { mu: 1.0, rho: 1.0 },
            lattice: LatticeConfig { dh: 1.0 / 8.0, kappa: None, dt: None, tau: 1.0 },
            domain: DomainOutline::rectangle(Vec2::new(0.0, -1.0), Vec2::new(3.0, 1.0), pull(-0.5), free(), pull(0.5), free()).unwrap(),
            crack: Some(CrackConfig { vertices: vec![Vec2::new(0.0, 0.0), Vec2::new(0.5, 0.0)], tips: vec![CrackEnd::End] }),
            criterion: Some(CriterionConfig::Steady { a_dot: 0.3, r_min: 1.5 / 8.0 }),
            run: RunConfig { t_max: 2.0, sample_every: 1, output: OutputConfig::default() },
        }
    }

    #[test]
    fn hooks_fire_in_order() {
        let mut sim = Simulation::new(&strip(0.2)).unwrap();
        let mut seen = Vec::new();
        for _ in 0..3 {
            sim.advance_with(&mut |p, _| seen.push(p)).unwrap();
        }
        assert_eq!(seen.len(), 21);
        for chunk in seen.chunks(7) {
            assert_eq!(chunk, Phase::ORDER);
        }
    }

    #[test]
    fn time_advances_exactly() {
        let mut sim = Simulation::new(&strip(0.2)).unwrap();
        let dt = sim.dt();
        let mut times = Vec::new();
        sim.advance_with(&mut |p, s| {
            if p == Phase::Equilibrium {
                times.push(s.time());
            }
            if p == Phase::AdvanceTime {
                times.push(s.time());
            }
        })
        .unwrap();
        assert_eq!(times, vec![0.0, dt]);
    }

    #[test]
    fn unloaded_run_stays_at_rest() {
        let mut cfg = strip(0.0);
        cfg.criterion = Some(CriterionConfig::KCriterion { k_c: 0.01, v_max: 0.5, r0: 0.25, r_min: None });
        let mut sim = Simulation::new(&cfg).unwrap();
        let mut recs = Vec::new();
        sim.run(1.0, 1, &mut |_, r| {
            recs.push(*r);
            Ok(())
        })
        .unwrap();
        assert!(recs.iter().all(|r| r.right.unwrap() == TipRecord { k: 0.0, v: 0.0, da: 0.0 }));
        assert!(sim.state.w().iter().all(|&w| w == 0.0));
    }

    #[test]
    fn runs_are_bitwise_deterministic() {
        let go = || {
            let mut sim = Simulation::new(&strip(0.2)).unwrap();
            let mut recs = Vec::new();
            sim.run(1.5, 1, &mut |_, r| {
                recs.push(*r);
                Ok(())
            })
            .unwrap();
            (recs, sim.state.w().to_vec())
        };
        let (a, wa) = go();
        let (b, wb) = go();
        assert_eq!(a, b);
        assert!(wa.iter().zip(&wb).all(|(x, y)| x.to_bits() == y.to_bits()));
        assert!(a.last().unwrap().right.unwrap().k > 0.0);
    }

    #[test]
    fn lattice_avoids_collinear_crack() {
        let cfg = strip(0.2);
        let outline = cfg.domain.clone();
        let m = MaterialParams::new(1.0, 1.0).unwrap();
        let crack = CrackPath::new(vec![Vec2::new(0.0, -1.0 + 1.0 / 16.0), Vec2::new(1.0, -1.0 + 1.0 / 16.0)], &[CrackEnd::End]).unwrap();
        let spec = lattice_for(&outline, Some(&crack), 1.0 / 8.0, &m, 2.0, 1.0).unwrap();
        assert_eq!(spec.origin.y, -1.0 + 1.0 / 8.0);
        let spec = lattice_for(&outline, None, 1.0 / 8.0, &m, 2.0, 1.0).unwrap();
        assert_eq!((spec.nx, spec.ny), (24, 16));
    }
}
