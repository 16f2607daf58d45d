//! Empirical check of the wave speed recovered by the kernel.
//!
//! A Gaussian pulse at rest on a periodic strip splits into two halves
//! travelling in opposite directions. The right-hand peak is tracked with
//! parabolic sub-cell interpolation and its speed is compared to `c_s`.

use crate::error::LatticeError;
use crate::geometry::Vec2;
use crate::lattice::{LatticeSpec, LatticeState, MaterialParams};

/// Default lattice speed ratio `c / c_s`, fixed with [`calibrate_wave_speed`].
pub const DEFAULT_KAPPA: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseTest {
    /// Gaussian standard deviation in lattice spacings.
    pub width: f64,
    /// Distance travelled between the two peak measurements, in spacings.
    pub travel: f64,
    /// Travel before the first measurement, so the two halves have separated.
    pub settle: f64,
}

impl Default for PulseTest {
    fn default() -> Self {
        Self { width: 8.0, travel: 240.0, settle: 40.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    pub kappa: f64,
    pub measured: f64,
    pub cs: f64,
    /// Distance between the two measurements.
    pub travel: f64,
    /// Peak height at the end relative to half the initial amplitude.
    pub peak_retention: f64,
}

impl Calibration {
    pub fn ratio(&self) -> f64 {
        self.measured / self.cs
    }
}

/// Builds a one-row periodic strip with the discretization of `template`
/// and a Gaussian displacement pulse of unit height at rest.
pub fn pulse_strip(template: &LatticeSpec, test: &PulseTest) -> Result<LatticeState, LatticeError> {
    let total = test.settle + test.travel;
    let nx = (2.0 * (total + 6.0 * test.width)).ceil() as usize + 16;
    let material = MaterialParams::new(template.cs * template.cs, 1.0)?;
    let spec = LatticeSpec::new(nx, 1, template.dh, &material, template.kappa, template.tau, Vec2::default())?.with_periodic(true, true);
    let mut state = LatticeState::new(spec, |_| true);
    let centre = (nx / 2) as f64;
    let sigma = test.width;
    for i in 0..nx {
        let d = i as f64 - centre;
        state.w_mut()[i] = (-0.5 * d * d / (sigma * sigma)).exp();
    }
    state.initialize_equilibrium();
    Ok(state)
}

/// Sub-cell position (in spacings) and height of the largest value of `w`
/// in `range`.
pub fn locate_peak(w: &[f64], range: std::ops::Range<usize>) -> (f64, f64) {
    let (k, &v) = w[range.clone()].iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).expect("non-empty range");
    let k = k + range.start;
    if k == 0 || k + 1 >= w.len() {
        return (k as f64, v);
    }
    let (l, r) = (w[k - 1], w[k + 1]);
    let denom = l - 2.0 * v + r;
    let shift = if denom != 0.0 { 0.5 * (l - r) / denom } else { 0.0 };
    (k as f64 + shift, v - 0.25 * (l - r) * shift)
}

/// Measures the propagation speed of a pulse with the discretization of
/// `spec` (its `dh`, `kappa`, `tau` and `cs`).
pub fn calibrate_wave_speed(spec: &LatticeSpec, test: &PulseTest) -> Result<Calibration, LatticeError> {
    let mut state = pulse_strip(spec, test)?;
    let nx = state.spec().nx;
    let centre = nx / 2;
    let dt = state.spec().dt;
    let cs = state.spec().cs;
    let steps_for = |dist: f64| (dist * spec.dh / (cs * dt)).round() as usize;
    let n1 = steps_for(test.settle);
    let n2 = steps_for(test.settle + test.travel);
    let mut first = None;
    for n in 1..=n2 {
        state.advance_free()?;
        if n == n1 {
            first = Some(locate_peak(state.w(), centre + 1..nx));
        }
    }
    let (x1, _) = first.ok_or_else(|| LatticeError::Calibration("settle distance shorter than one step".into()))?;
    let (x2, height) = locate_peak(state.w(), centre + 1..nx);
    let retention = height / 0.5;
    if retention < 0.8 {
        return Err(LatticeError::Calibration(format!("pulse dispersed: peak retained {retention:.3} of its height")));
    }
    let travel = (x2 - x1) * spec.dh;
    let measured = travel / ((n2 - n1) as f64 * dt);
    Ok(Calibration { kappa: spec.kappa, measured, cs, travel, peak_retention: retention })
}
