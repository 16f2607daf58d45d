//! The two built-in scenarios: steady growth in a strip and K-criterion
//! growth under a transient wave.

use crate::analytic::{mandal_sif, StripProblem};
use crate::error::SimError;
use crate::geometry::{CrackEnd, DomainOutline, EdgeCondition, Vec2};
use crate::load::TimeFunction;
use crate::scenario::{CrackConfig, CriterionConfig, LatticeConfig, MaterialConfig, OutputConfig, RunConfig, ScenarioConfig};
use crate::sim::{Simulation, TimeSeriesRecord};
use crate::stats::{summarize, Summary};

/// Default `r_min / Δh` for the tabulated steady speeds.
pub fn default_r_min_cells(v: f64) -> Option<f64> {
    [(0.2, 1.5), (0.4, 2.25), (0.6, 4.0), (0.8, 8.0)].iter().find(|(s, _)| (s - v).abs() < 1e-12).map(|p| p.1)
}

/// Steady growth at `v c_s` through a strip of width `2L`.
#[derive(Debug, Clone, PartialEq)]
pub struct SteadyStrip {
    pub v: f64,
    pub l: f64,
    pub w0: f64,
    pub mu: f64,
    pub rho: f64,
    /// Lattice spacing in units of `L`.
    pub dh: f64,
    pub kappa: Option<f64>,
    /// Evaluation distance; defaults to the table values for 0.2..0.8.
    pub r_min: Option<f64>,
    /// Load ramp time; defaults to `25 v L/c_s`, at least `5 L/c_s`.
    pub t0: Option<f64>,
    /// Duration of the sampling window in `L/c_s`.
    pub window: f64,
    pub samples: usize,
    /// Strip length; defaults to the shortest admissible one.
    pub b: Option<f64>,
    pub initial_crack: f64,
}

impl SteadyStrip {
    pub fn new(v: f64) -> Self {
        Self {
            v,
            l: 1.0,
            w0: 0.2,
            mu: 1.0,
            rho: 1.0,
            dh: 1.0 / 16.0,
            kappa: None,
            r_min: None,
            t0: None,
            window: 15.0,
            samples: 300,
            b: None,
            initial_crack: 0.5,
        }
    }

    pub fn cs(&self) -> f64 {
        (self.mu / self.rho).sqrt()
    }

    pub fn t0(&self) -> f64 {
        let traverse = self.l / self.cs();
        self.t0.unwrap_or(traverse * (25.0 * self.v).max(5.0))
    }

    pub fn t_final(&self) -> f64 {
        self.t0() + self.window * self.l / self.cs()
    }

    fn min_length(&self) -> f64 {
        self.initial_crack * self.l + self.v * self.cs() * self.t_final() + 2.0 * self.l
    }

    pub fn length(&self) -> f64 {
        let h = self.dh * self.l;
        self.b.unwrap_or_else(|| ((self.min_length() / h).ceil() + 1.0) * h)
    }

    pub fn r_min(&self) -> Result<f64, SimError> {
        match (self.r_min, default_r_min_cells(self.v)) {
            (Some(r), _) => Ok(r),
            (None, Some(c)) => Ok(c * self.dh * self.l),
            (None, None) => Err(SimError::Config(format!("no default r_min for v = {}; pass one explicitly", self.v))),
        }
    }

    pub fn theory(&self) -> f64 {
        StripProblem::new(self.l, self.w0, self.mu, self.v).map_or(f64::NAN, |p| mandal_sif(&p).abs())
    }

    pub fn config(&self) -> Result<ScenarioConfig, SimError> {
        if !(self.v > 0.0 && self.v < 1.0) {
            return Err(SimError::Config(format!("v = {} must lie in (0, 1)", self.v)));
        }
        let b = self.length();
        if b <= self.min_length() {
            return Err(SimError::Config(format!("strip length {b} is too short; need more than {}", self.min_length())));
        }
        let l = self.l;
        let ramp = |s: f64| EdgeCondition::dirichlet(TimeFunction::SinSquaredRamp { amplitude: s * 0.5 * self.w0, ramp_time: self.t0() });
        let free = EdgeCondition::traction_free;
        Ok(ScenarioConfig {
            material: MaterialConfig { mu: self.mu, rho: self.rho },
            lattice: LatticeConfig { dh: self.dh * l, kappa: self.kappa, dt: None, tau: 1.0 },
            domain: DomainOutline::rectangle(Vec2::new(0.0, -l), Vec2::new(b, l), ramp(-1.0), free(), ramp(1.0), free())?,
            crack: Some(CrackConfig { vertices: vec![Vec2::new(0.0, 0.0), Vec2::new(self.initial_crack * l, 0.0)], tips: vec![CrackEnd::End] }),
            criterion: Some(CriterionConfig::Steady { a_dot: self.v * self.cs(), r_min: self.r_min()? }),
            run: RunConfig { t_max: self.t_final(), sample_every: 1, output: OutputConfig::default() },
        })
    }

    /// Times at which `K` is sampled: evenly spaced over the final window.
    pub fn sample_times(&self) -> Vec<f64> {
        let start = self.t_final() - self.window * self.l / self.cs();
        let step = (self.t_final() - start) / self.samples as f64;
        (1..=self.samples).map(|k| start + k as f64 * step).collect()
    }
}

#[derive(Debug, Clone)]
pub struct SteadyResult {
    pub theory: f64,
    pub samples: Vec<f64>,
    pub summary: Summary,
    pub records: Vec<TimeSeriesRecord>,
}

impl SteadyResult {
    pub fn relative_error(&self) -> f64 {
        (self.summary.median - self.theory) / self.theory
    }
}

/// Runs the strip and samples `|K|` at the step closest to each sample time.
pub fn run_steady(exp: &SteadyStrip, sink: &mut dyn FnMut(&Simulation, &TimeSeriesRecord) -> Result<(), SimError>) -> Result<SteadyResult, SimError> {
    let cfg = exp.config()?;
    let mut sim = Simulation::new(&cfg)?;
    let mut records = Vec::new();
    sim.run(cfg.run.t_max, 1, &mut |s, r| {
        records.push(*r);
        sink(s, r)
    })?;
    let dt = sim.dt();
    let samples: Vec<f64> = exp
        .sample_times()
        .iter()
        .map(|&t| {
            let i = ((t / dt).round() as usize).clamp(1, records.len()) - 1;
            records[i].right.map_or(0.0, |r| r.k.abs())
        })
        .collect();
    let summary = summarize(&samples).ok_or_else(|| SimError::Numerical("not enough SIF samples".into()))?;
    Ok(SteadyResult { theory: exp.theory(), samples, summary, records })
}

/// Two-tip crack in a `8L × 3L` plate loaded by a half-sine pulse on the top
/// edge.
#[derive(Debug, Clone, PartialEq)]
pub struct KCriterionPlate {
    pub w0: f64,
    pub dh: f64,
    pub kappa: Option<f64>,
    pub mu: f64,
    pub rho: f64,
    pub k_c: f64,
    pub v_max: f64,
    pub r0: f64,
    pub pulse: f64,
    pub t_max: f64,
}

impl KCriterionPlate {
    pub fn new() -> Self {
        Self {
            w0: 0.011,
            dh: 1.0 / 64.0,
            kappa: None,
            mu: 1.0,
            rho: 1.0,
            k_c: 0.006,
            v_max: 0.85,
            r0: 0.07,
            pulse: 8.0,
            t_max: 16.0,
        }
    }

    pub fn config(&self) -> Result<ScenarioConfig, SimError> {
        let free = EdgeCondition::traction_free;
        let fixed = EdgeCondition::dirichlet(TimeFunction::Constant { value: 0.0 });
        let pulse = EdgeCondition::dirichlet(TimeFunction::HalfSine { amplitude: self.w0, duration: self.pulse });
        Ok(ScenarioConfig {
            material: MaterialConfig { mu: self.mu, rho: self.rho },
            lattice: LatticeConfig { dh: self.dh, kappa: self.kappa, dt: None, tau: 1.0 },
            domain: DomainOutline::rectangle(Vec2::new(-4.0, -2.0), Vec2::new(4.0, 1.0), fixed, free(), pulse, free())?,
            crack: Some(CrackConfig { vertices: vec![Vec2::new(-0.5, 0.0), Vec2::new(0.5, 0.0)], tips: vec![CrackEnd::Start, CrackEnd::End] }),
            criterion: Some(CriterionConfig::KCriterion { k_c: self.k_c, v_max: self.v_max, r0: self.r0, r_min: None }),
            run: RunConfig { t_max: self.t_max, sample_every: 1, output: OutputConfig::default() },
        })
    }
}

impl Default for KCriterionPlate {
    fn default() -> Self {
        Self::new()
    }
}

/// Runs the plate; aborts if neither tip has reached `K_C` by the time the
/// pulse has passed the crack.
pub fn run_k_criterion(exp: &KCriterionPlate, sink: &mut dyn FnMut(&Simulation, &TimeSeriesRecord) -> Result<(), SimError>) -> Result<Vec<TimeSeriesRecord>, SimError> {
    let cfg = exp.config()?;
    let mut sim = Simulation::new(&cfg)?;
    let cs = (exp.mu / exp.rho).sqrt();
    let deadline = exp.pulse + 1.0 / cs;
    let mut records = Vec::new();
    let mut peak: f64 = 0.0;
    sim.run(cfg.run.t_max, 1, &mut |s, r| {
        records.push(*r);
        peak = peak.max(r.left.map_or(0.0, |t| t.k)).max(r.right.map_or(0.0, |t| t.k));
        if r.t >= deadline && peak <= exp.k_c && r.t - s.dt() < deadline {
            return Err(SimError::Config(format!(
                "K never exceeded K_C = {} (peak {peak}) by t = {deadline}; raise w0",
                exp.k_c
            )));
        }
        sink(s, r)
    })?;
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn steady_geometry() {
        let e = SteadyStrip::new(0.8);
        assert_eq!(e.t0(), 20.0);
        assert_eq!(e.t_final(), 35.0);
        assert!(e.length() > 0.5 + 0.8 * 35.0 + 2.0);
        assert_eq!(e.r_min().unwrap(), 0.5);
        assert!((e.theory() - 0.1477).abs() < 1e-4);
        let times = e.sample_times();
        assert_eq!(times.len(), 300);
        assert!((times[299] - 35.0).abs() < 1e-12 && (times[0] - 20.05).abs() < 1e-12);
        let mut short = SteadyStrip::new(0.4);
        short.b = Some(5.0);
        assert!(short.config().is_err());
        assert!(SteadyStrip::new(0.3).r_min().is_err());
    }

    #[test]
    fn plate_is_symmetric() {
        let cfg = KCriterionPlate::new().config().unwrap();
        let (min, max) = cfg.domain.bounding_box();
        assert_eq!(min.x, -max.x);
        assert_eq!(max.y - min.y, 3.0);
    }
}
