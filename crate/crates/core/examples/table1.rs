//! Steady-state SIF at the four tabulated crack speeds.
//!
//! ```text
//! cargo run --release --example table1
//! ```

use lbm_fracture::experiments::{run_steady, SteadyStrip};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    println!("{:>4} {:>7} {:>7} {:>7} {:>7} {:>7} {:>7} {:>7}", "v", "K_theo", "mean", "sigma", "median", "-p25", "+p75", "error");
    for v in [0.2, 0.4, 0.6, 0.8] {
        let r = run_steady(&SteadyStrip::new(v), &mut |_, _| Ok(()))?;
        let s = r.summary;
        println!(
            "{v:>4} {:>7.4} {:>7.4} {:>7.4} {:>7.4} {:>7.4} {:>7.4} {:>+6.2}%",
            r.theory,
            s.mean,
            s.std,
            s.median,
            s.minus,
            s.plus,
            100.0 * r.relative_error()
        );
    }
    Ok(())
}
