//! Dynamic mode-III fracture with a D2Q5 lattice Boltzmann solver.
//!
//! The antiplane displacement `w` obeys `ẅ = c_s² ∇²w`. [`lattice`] advances
//! it on a square grid. [`boundary`] imposes edge and crack-face conditions
//! that need not follow the grid. [`fracture`] measures stress intensity
//! factors and grows cracks by cutting links. [`sim`] runs the time loop,
//! and [`experiments`] holds the two built-in scenarios.
//!
//! ```
//! use lbm_fracture::experiments::SteadyStrip;
//! use lbm_fracture::sim::Simulation;
//!
//! let mut strip = SteadyStrip::new(0.6);
//! strip.dh = 0.25;
//! let mut sim = Simulation::new(&strip.config().unwrap()).unwrap();
//! for _ in 0..10 {
//!     sim.advance().unwrap();
//! }
//! assert!(sim.record().right.unwrap().da > 0.0);
//! ```

pub mod analytic;
pub mod boundary;
pub mod error;
pub mod experiments;
pub mod fracture;
pub mod geometry;
pub mod lattice;
pub mod load;
pub mod output;
pub mod scenario;
pub mod sim;
pub mod stats;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/lattice.md")]
    mod lattice {}
    #[doc = include_str!("../../../book/src/boundary.md")]
    mod boundary {}
    #[doc = include_str!("../../../book/src/fracture.md")]
    mod fracture {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
