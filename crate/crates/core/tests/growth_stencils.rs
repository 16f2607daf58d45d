use lbm_fracture::boundary::{BoundarySite, BoundarySystem};
use lbm_fracture::geometry::{CrackEnd, DomainOutline, EdgeCondition, Vec2};
use lbm_fracture::load::TimeFunction;
use lbm_fracture::scenario::{CrackConfig, CriterionConfig, LatticeConfig, MaterialConfig, OutputConfig, RunConfig, ScenarioConfig};
use lbm_fracture::sim::Simulation;

fn inclined(angle: f64) -> ScenarioConfig {
    let dh = 1.0 / 16.0;
    let free = EdgeCondition::traction_free;
    let pull = |s: f64| EdgeCondition::dirichlet(TimeFunction::SinSquaredRamp { amplitude: s * 0.1, ramp_time: 2.0 });
    let a = Vec2::new(0.4, -0.3);
    ScenarioConfig {
        material: MaterialConfig { mu: 1.0, rho: 1.0 },
        lattice: LatticeConfig { dh, kappa: None, dt: None, tau: 1.0 },
        domain: DomainOutline::rectangle(Vec2::new(0.0, -1.0), Vec2::new(4.0, 1.0), pull(-1.0), free(), pull(1.0), free()).unwrap(),
        crack: Some(CrackConfig { vertices: vec![a, a + Vec2::new(angle.cos(), angle.sin()) * 0.5], tips: vec![CrackEnd::End] }),
        criterion: Some(CriterionConfig::Steady { a_dot: 0.4, r_min: 2.25 * dh }),
        run: RunConfig { t_max: 1.0, sample_every: 1, output: OutputConfig::default() },
    }
}

// The tip moves on steps that cut no link; stencils that look at the tip
// end must follow it.
#[test]
fn stencils_track_the_tip_on_an_inclined_crack() {
    for angle in [0.15, 0.3, -0.4] {
        let mut sim = Simulation::new(&inclined(angle)).unwrap();
        for step in 1..=120 {
            sim.advance().unwrap();
            let geom = sim.geometry();
            for b in sim.system.sites() {
                let fresh = BoundarySite::build(b.site, &sim.state, &geom).unwrap();
                let (x, y) = (fresh.site_coefficients(), b.site_coefficients());
                assert_eq!(x.len(), y.len(), "angle {angle}, step {step}, site {}", b.site);
                for (p, q) in x.iter().zip(&y) {
                    assert_eq!(p.0, q.0);
                    assert!((p.1 - q.1).abs() < 1e-9, "angle {angle}, step {step}, site {}", b.site);
                }
                assert!((fresh.datum_weight - b.datum_weight).abs() < 1e-9);
            }
            let mut listed: Vec<usize> = sim.system.sites().iter().map(|b| b.site).collect();
            listed.sort_unstable();
            assert_eq!(listed, sim.state.boundary_sites());
        }
        let full = BoundarySystem::assemble(sim.system.sites().to_vec(), sim.state.len()).unwrap();
        assert!((full.inverse().to_dmatrix() - sim.system.inverse().to_dmatrix()).abs().max() < 1e-10);
    }
}
