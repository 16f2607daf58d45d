use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::info;

use lbm_fracture::error::SimError;
use lbm_fracture::experiments::{run_k_criterion, run_steady, KCriterionPlate, SteadyStrip};
use lbm_fracture::lattice::calibrate::{calibrate_wave_speed, PulseTest, DEFAULT_KAPPA};
use lbm_fracture::lattice::{LatticeSpec, MaterialParams};
use lbm_fracture::geometry::Vec2;
use lbm_fracture::output::{write_snapshot, CsvSink};
use lbm_fracture::scenario::ScenarioConfig;
use lbm_fracture::sim::{Simulation, TimeSeriesRecord};

#[derive(Parser)]
#[command(version, about = "Dynamic mode-III fracture with a D2Q5 lattice Boltzmann solver")]
struct Cli {
    /// Write a VTK snapshot of w every N steps.
    #[arg(long, global = true, value_name = "N")]
    snapshot_every: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario described by a JSON file.
    Run { config: PathBuf },
    /// Steady crack growth through a strip.
    Steady {
        /// Crack speed relative to c_s.
        #[arg(long)]
        v: f64,
        /// Evaluation distance r_min in units of L.
        #[arg(long)]
        rmin: Option<f64>,
        /// Lattice spacing in units of L.
        #[arg(long, default_value_t = 1.0 / 16.0)]
        dh: f64,
        /// Load ramp time in units of L/c_s.
        #[arg(long)]
        t0: Option<f64>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Two-tip crack under a transient wave with a K-criterion.
    Kcrit {
        /// Amplitude of the half-sine displacement pulse.
        #[arg(long)]
        w0: Option<f64>,
        #[arg(long)]
        dh: Option<f64>,
        #[arg(long)]
        t_max: Option<f64>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Measure the wave speed recovered by the lattice.
    Calibrate {
        #[arg(long, default_value_t = DEFAULT_KAPPA)]
        kappa: f64,
    },
}

/// Streams records to a CSV file and writes periodic snapshots.
struct Outputs {
    csv: CsvSink<BufWriter<Box<dyn Write>>>,
    snapshots: Option<(u64, PathBuf)>,
}

impl Outputs {
    fn new(csv: Box<dyn Write>, snapshot_every: Option<u64>, dir: &Path) -> Result<Self, SimError> {
        if snapshot_every == Some(0) {
            return Err(SimError::Config("--snapshot-every must be at least 1".into()));
        }
        Ok(Self { csv: CsvSink::new(BufWriter::new(csv))?, snapshots: snapshot_every.map(|n| (n, dir.to_path_buf())) })
    }

    fn record(&mut self, sim: &Simulation, rec: &TimeSeriesRecord) -> Result<(), SimError> {
        self.csv.write(rec)?;
        if let Some((n, dir)) = &self.snapshots {
            if sim.step_count() % n == 0 {
                let path = dir.join(format!("w_{:07}.vtk", sim.step_count()));
                write_snapshot(&path, &sim.state, &format!("w at t = {}", sim.time()))?;
            }
        }
        Ok(())
    }

    fn finish(self) -> Result<(), SimError> {
        self.csv.finish()?.flush()?;
        Ok(())
    }
}

fn create(dir: &Path, name: &str) -> Result<Box<dyn Write>, SimError> {
    fs::create_dir_all(dir)?;
    Ok(Box::new(File::create(dir.join(name))?))
}

fn execute(cli: Cli) -> Result<(), SimError> {
    match cli.command {
        Command::Run { config } => {
            let text = fs::read_to_string(&config).map_err(|e| SimError::Config(format!("{}: {e}", config.display())))?;
            let cfg = ScenarioConfig::from_json(&text)?;
            let snapshot_every = cli.snapshot_every.or(cfg.run.output.snapshot_every);
            let base = config.parent().unwrap_or(Path::new("."));
            let snap_dir = base.join(cfg.run.output.snapshot_dir.clone().unwrap_or_else(|| PathBuf::from(".")));
            if snapshot_every.is_some() {
                fs::create_dir_all(&snap_dir)?;
            }
            let csv: Box<dyn Write> = match &cfg.run.output.csv {
                Some(p) => {
                    let path = base.join(p);
                    if let Some(parent) = path.parent() {
                        fs::create_dir_all(parent)?;
                    }
                    Box::new(File::create(path)?)
                }
                None => Box::new(io::stdout()),
            };
            let mut out = Outputs::new(csv, snapshot_every, &snap_dir)?;
            let mut sim = Simulation::new(&cfg)?;
            sim.run(cfg.run.t_max, cfg.run.sample_every, &mut |s, r| out.record(s, r))?;
            out.finish()
        }
        Command::Steady { v, rmin, dh, t0, out } => {
            let mut exp = SteadyStrip::new(v);
            exp.r_min = rmin;
            exp.dh = dh;
            exp.t0 = t0;
            let mut sink = Outputs::new(create(&out, "steady.csv")?, cli.snapshot_every, &out)?;
            let res = run_steady(&exp, &mut |s, r| sink.record(s, r))?;
            sink.finish()?;
            let s = res.summary;
            println!("v,r_min,K_theo,mean,std,median,minus_p25,plus_p75");
            println!("{v},{},{},{},{},{},{},{}", exp.r_min()?, res.theory, s.mean, s.std, s.median, s.minus, s.plus);
            info!("median |K| deviates {:+.2}% from theory", 100.0 * res.relative_error());
            Ok(())
        }
        Command::Kcrit { w0, dh, t_max, out } => {
            let mut exp = KCriterionPlate::new();
            exp.w0 = w0.unwrap_or(exp.w0);
            exp.dh = dh.unwrap_or(exp.dh);
            exp.t_max = t_max.unwrap_or(exp.t_max);
            let mut sink = Outputs::new(create(&out, "kcrit.csv")?, cli.snapshot_every, &out)?;
            run_k_criterion(&exp, &mut |s, r| sink.record(s, r))?;
            sink.finish()
        }
        Command::Calibrate { kappa } => {
            let m = MaterialParams::new(1.0, 1.0).map_err(|e| SimError::Config(e.to_string()))?;
            let spec = LatticeSpec::new(1, 1, 1.0, &m, kappa, 1.0, Vec2::new(0.0, 0.0)).map_err(|e| SimError::Config(e.to_string()))?;
            let c = calibrate_wave_speed(&spec, &PulseTest::default()).map_err(|e| SimError::Numerical(e.to_string()))?;
            println!("kappa,measured,c_s,ratio,travel,peak_retention");
            println!("{},{},{},{},{},{}", c.kappa, c.measured, c.cs, c.ratio(), c.travel, c.peak_retention);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 2 } else { 3 })
        }
    }
}
