//! Time-dependent boundary values.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

/// A scalar function of time used for Dirichlet displacements and Neumann
/// tractions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TimeFunction {
    Constant { value: f64 },
    /// `amplitude * sin²(π t / (2 ramp_time))` for `t < ramp_time`, then `amplitude`.
    SinSquaredRamp { amplitude: f64, ramp_time: f64 },
    /// `amplitude * sin(π t / duration)` for `t < duration`, then zero.
    HalfSine { amplitude: f64, duration: f64 },
}

impl TimeFunction {
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            TimeFunction::Constant { value } => value,
            TimeFunction::SinSquaredRamp { amplitude, ramp_time } => {
                if t < ramp_time {
                    let s = (0.5 * PI * t / ramp_time).sin();
                    amplitude * s * s
                } else {
                    amplitude
                }
            }
            TimeFunction::HalfSine { amplitude, duration } => {
                if t < duration {
                    amplitude * (PI * t / duration).sin()
                } else {
                    0.0
                }
            }
        }
    }
}
