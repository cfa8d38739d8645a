use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use egl::calculus::{divergence, vorticity};
use egl::eulerian::{energy, EulerSolver, StepRecord};
use egl::illposedness::{
    composition_experiment_with, solution_map_experiment_with, CompositionConfig, SeparationSeries, SolutionMapConfig,
};
use egl::invariants::{run_battery, taylor_green, BatteryConfig};
use egl::io::{csv, svg, Experiment, Initial, Mode, RunConfig, Snapshot};
use egl::lagrangian::{eulerian_from_lagrangian, Geodesic, GeodesicConfig, InversionConfig};
use egl::random::{random_div_free, rng};
use egl::{Error, Sobolev, VectorField};

/// Pseudo-spectral Euler laboratory on the periodic box.
///
/// Settings come from the built-in defaults, then `--config`, then flags.
/// Defaults: n = 2, N = 64, L = 2π, dt = 1e-3, T = 1, s = 2.5, cutoff = 1,
/// R = 0.1, kmax = 8, seed = 0, out = ./out.
///
/// Exit codes: 0 success, 1 invariant or experiment failure, 2 configuration
/// error, 3 numerical failure (blow-up, chart exit, failed inversion).
#[derive(Parser, Debug)]
#[command(name = "egl", version, about, long_about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct Common {
    /// Config file (`key = value` lines under [section] headers).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory [default: out].
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Seed for random fields [default: 0].
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,
    /// Spatial dimension, 2 or 3 [default: 2].
    #[arg(long = "n", global = true, value_name = "DIM")]
    dim: Option<usize>,
    /// Grid points per axis, even [default: 64].
    #[arg(long = "N", global = true, value_name = "POINTS")]
    points: Option<usize>,
    /// Box side length [default: 2π].
    #[arg(long = "L", global = true, value_name = "LENGTH")]
    length: Option<f64>,
    /// Sobolev index, must exceed n/2 + 1 [default: 2.5].
    #[arg(long = "s", global = true)]
    s: Option<f64>,
    /// Time step [default: 1e-3].
    #[arg(long = "dt", global = true)]
    dt: Option<f64>,
    /// Final time [default: 1].
    #[arg(long = "T", global = true)]
    t_final: Option<f64>,
    /// Comma-separated amplitudes for the separation experiments [default: 0.1].
    #[arg(long = "R", global = true, value_name = "LIST")]
    r: Option<String>,
    /// Largest k in the separation experiments [default: 8].
    #[arg(long = "kmax", global = true)]
    k_max: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Integrate the Euler equation or the geodesic system; writes snapshots and a CSV of norms.
    Simulate {
        /// euler or geodesic [default: euler].
        #[arg(long)]
        mode: Option<Mode>,
        /// taylor_green, random or zero [default: taylor_green].
        #[arg(long)]
        initial: Option<Initial>,
    },
    /// Run the invariant battery on the 2π box in two dimensions and print a pass/fail table.
    Verify {
        /// Random fields per statistical check.
        #[arg(long, default_value_t = 100)]
        samples: usize,
    },
    /// Run the separation experiments; writes one CSV and one SVG per amplitude.
    Illposedness {
        /// composition, solution_map or both [default: both].
        #[arg(long)]
        experiment: Option<Experiment>,
    },
    /// Print the records of a snapshot file.
    SnapshotDump {
        path: PathBuf,
        /// Also print every sample.
        #[arg(long)]
        values: bool,
    },
}

enum Failure {
    Config(String),
    Experiment(String),
    Numerical(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config { .. } | Error::InvalidParameter { .. } | Error::InvalidGrid(_) => Failure::Config(e.to_string()),
            Error::BlowUp { .. } | Error::LeftChart { .. } | Error::Inversion { .. } | Error::NonFinite { .. } => {
                Failure::Numerical(e.to_string())
            }
            other => Failure::Experiment(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Experiment(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn load_config(common: &Common) -> Result<RunConfig, Failure> {
    let mut cfg = match &common.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))?;
            RunConfig::parse(&text)?
        }
        None => RunConfig::default(),
    };
    if let Some(v) = &common.out {
        cfg.out = v.clone();
    }
    if let Some(v) = common.seed {
        cfg.seed = v;
    }
    if let Some(v) = common.dim {
        cfg.dim = v;
    }
    if let Some(v) = common.points {
        cfg.n = v;
    }
    if let Some(v) = common.length {
        cfg.length = v;
    }
    if let Some(v) = common.s {
        cfg.s = v;
    }
    if let Some(v) = common.dt {
        cfg.dt = v;
    }
    if let Some(v) = common.t_final {
        cfg.t_final = v;
    }
    if let Some(v) = &common.r {
        cfg.set("experiment", "r", v, 0)
            .map_err(|_| Failure::Config(format!("invalid parameter `R`: cannot parse `{v}`")))?;
    }
    if let Some(v) = common.k_max {
        cfg.k_max = v;
    }
    Ok(cfg)
}

fn create_out(cfg: &RunConfig) -> Outcome {
    fs::create_dir_all(&cfg.out)
        .map_err(|e| Failure::Experiment(format!("cannot create {}: {e}", cfg.out.display())))
}

fn write_file(path: &Path, bytes: &[u8]) -> Outcome {
    fs::write(path, bytes).map_err(|e| Failure::Experiment(format!("cannot write {}: {e}", path.display())))
}

fn initial_field(cfg: &RunConfig) -> Result<VectorField, Failure> {
    let grid = cfg.grid()?;
    Ok(match cfg.initial {
        Initial::TaylorGreen => taylor_green(&grid),
        Initial::Zero => VectorField::zeros(&grid),
        Initial::Random => random_div_free(&grid, cfg.band, cfg.s, cfg.amplitude, &mut rng(cfg.seed))?,
    })
}

fn simulate(cfg: &RunConfig) -> Outcome {
    let u0 = initial_field(cfg)?;
    create_out(cfg)?;
    let hash = cfg.hash();
    match cfg.mode {
        Mode::Euler => simulate_euler(cfg, &u0, &hash),
        Mode::Geodesic => simulate_geodesic(cfg, &u0, &hash),
    }
}

fn simulate_euler(cfg: &RunConfig, u0: &VectorField, hash: &str) -> Outcome {
    let stepper = cfg.stepper();
    let steps = ((cfg.t_final / cfg.dt) - 1e-9).ceil().max(1.0) as usize;
    let (states, records, violation) = if u0.max_abs() == 0.0 {
        // Zero is a fixed point; no need to step it.
        let records: Vec<StepRecord> = (0..=steps)
            .map(|i| StepRecord {
                t: cfg.t_final * i as f64 / steps as f64,
                energy: 0.0,
                hs_norm: 0.0,
                div_drift: 0.0,
            })
            .collect();
        let saved: Vec<VectorField> = (0..=steps)
            .filter(|i| *i == 0 || *i == steps || (cfg.save_every > 0 && i % cfg.save_every == 0))
            .map(|_| u0.clone())
            .collect();
        (saved, records, None)
    } else {
        let tr = EulerSolver::new(u0.grid(), stepper)?.solve(u0, cfg.t_final)?;
        let saved = tr.states.into_iter().map(|s| s.u).collect();
        (saved, tr.records, tr.budget_violation)
    };

    let mut vel = Vec::new();
    let mut vort = Vec::new();
    for u in &states {
        Snapshot::vector(u).encode(&mut vel)?;
        Snapshot::vorticity(&vorticity(u))?.encode(&mut vort)?;
    }
    write_file(&cfg.out.join("velocity.egl"), &vel)?;
    write_file(&cfg.out.join("vorticity.egl"), &vort)?;
    let mut table = Vec::new();
    csv::write_records(&mut table, &records, hash)?;
    write_file(&cfg.out.join("records.csv"), &table)?;

    let first = &records[0];
    let last = records.last().expect("at least one record");
    let drift = records.iter().map(|r| r.div_drift).fold(0.0, f64::max);
    let rel = |a: f64, b: f64| if b > 0.0 { (a - b).abs() / b } else { (a - b).abs() };
    println!("steps            {}", records.len() - 1);
    println!("final energy     {:.12e}", last.energy);
    println!("final H^s norm   {:.12e}", last.hs_norm);
    println!("energy drift     {:.3e}", rel(last.energy, first.energy));
    println!("H^s drift        {:.3e}", rel(last.hs_norm, first.hs_norm));
    println!("max div drift    {drift:.3e}");
    println!("snapshots        {}", states.len());
    if let Some(v) = violation {
        return Err(Failure::Experiment(format!(
            "relative divergence drift {v:.3e} exceeds the budget {:.1e}",
            cfg.stepper().drift_budget
        )));
    }
    Ok(())
}

fn simulate_geodesic(cfg: &RunConfig, u0: &VectorField, hash: &str) -> Outcome {
    let geo = Geodesic::new(
        u0.grid(),
        GeodesicConfig {
            cutoff: cfg.cutoff,
            ..GeodesicConfig::with_interp(cfg.interp)
        },
    )?;
    let steps = ((cfg.t_final / cfg.dt) - 1e-9).ceil().max(1.0) as usize;
    let states = geo.integrate(u0, cfg.t_final, steps, cfg.save_every)?;
    let inv = InversionConfig {
        interp: cfg.interp,
        ..Default::default()
    };
    let phis: Vec<_> = states.iter().map(|s| s.phi.clone()).collect();
    let vs: Vec<_> = states.iter().map(|s| s.v.clone()).collect();
    let us = eulerian_from_lagrangian(&phis, &vs, &inv)?;

    let mut maps = Vec::new();
    let mut vel = Vec::new();
    let mut rows = Vec::new();
    for ((st, u), phi) in states.iter().zip(&us).zip(&phis) {
        Snapshot::diffeo(phi).encode(&mut maps)?;
        Snapshot::vector(u).encode(&mut vel)?;
        rows.push(vec![
            st.t,
            energy(u),
            u.sobolev_norm(cfg.s),
            divergence(u).sobolev_norm(cfg.s - 1.0),
            phi.min_det(),
        ]);
    }
    write_file(&cfg.out.join("flow.egl"), &maps)?;
    write_file(&cfg.out.join("velocity.egl"), &vel)?;
    let mut table = Vec::new();
    csv::write_table(&mut table, &["t", "energy", "hs_norm", "div_drift", "min_det"], &rows, hash)?;
    write_file(&cfg.out.join("records.csv"), &table)?;

    let last = rows.last().expect("final state");
    println!("steps            {steps}");
    println!("final energy     {:.12e}", last[1]);
    println!("final H^s norm   {:.12e}", last[2]);
    println!("energy drift     {:.3e}", (last[1] - rows[0][1]).abs() / rows[0][1].max(f64::MIN_POSITIVE));
    println!("max div drift    {:.3e}", rows.iter().map(|r| r[3]).fold(0.0, f64::max));
    println!("min det dφ       {:.12e}", rows.iter().map(|r| r[4]).fold(f64::INFINITY, f64::min));
    println!("snapshots        {}", rows.len());
    Ok(())
}

fn verify(cfg: &RunConfig, samples: usize) -> Outcome {
    if cfg.dim != 2 || (cfg.length - std::f64::consts::TAU).abs() > 1e-12 {
        log::warn!("verify runs on the 2π box in two dimensions; n and L are ignored");
    }
    let battery = BatteryConfig {
        n: cfg.n,
        s: cfg.s,
        dt: cfg.dt,
        t_final: cfg.t_final,
        seed: cfg.seed,
        samples: samples.max(1),
        interp: cfg.interp,
    };
    let checks = run_battery(&battery)?;
    create_out(cfg)?;
    let mut table = format!("# config-hash: {}\ncheck,value,tol,passed,detail\n", cfg.hash());
    println!("{:<32} {:>12} {:>10}  status", "check", "value", "tol");
    for c in &checks {
        let status = if c.passed { "PASS" } else { "FAIL" };
        println!("{:<32} {:>12.3e} {:>10.1e}  {status}  {}", c.name, c.value, c.tol, c.detail);
        table.push_str(&format!(
            "{},{:.17e},{:.17e},{},\"{}\"\n",
            c.name,
            c.value,
            c.tol,
            c.passed,
            c.detail.replace('"', "\"\"")
        ));
    }
    write_file(&cfg.out.join("verify.csv"), table.as_bytes())?;
    let failed: Vec<_> = checks.iter().filter(|c| !c.passed).map(|c| c.name).collect();
    if failed.is_empty() {
        println!("all {} checks passed", checks.len());
        Ok(())
    } else {
        Err(Failure::Experiment(format!("failed checks: {}", failed.join(", "))))
    }
}

fn emit_series(cfg: &RunConfig, series: &SeparationSeries, r: f64) -> Outcome {
    let stem = format!("{}_R{r}", series.name);
    let mut table = Vec::new();
    csv::write_series(&mut table, series, &cfg.hash())?;
    write_file(&cfg.out.join(format!("{stem}.csv")), &table)?;
    let ks = series.ks();
    let (input, output) = (series.input_gaps(), series.output_gaps());
    let plot = svg::loglog(
        &format!("{} separation, R = {r}", series.name),
        "k",
        "H^s gap",
        &[
            svg::Curve {
                label: "input gap",
                x: &ks,
                y: &input,
            },
            svg::Curve {
                label: "output gap",
                x: &ks,
                y: &output,
            },
        ],
    );
    write_file(&cfg.out.join(format!("{stem}.svg")), plot.as_bytes())?;
    if let Some(k) = series.truncated_at {
        eprintln!("warning: {stem} truncated at k = {k} by grid resolution");
    }
    println!(
        "{stem:<24} rows {:>3}  input slope {:>8.4}  min output {:.4e}  output/input growth {:.3}",
        series.rows.len(),
        series.input_slope(),
        series.min_output(),
        series.ratio_growth()
    );
    Ok(())
}

fn illposedness(cfg: &RunConfig) -> Outcome {
    let run_comp = matches!(cfg.experiment, Experiment::Composition | Experiment::Both);
    let run_sol = matches!(cfg.experiment, Experiment::SolutionMap | Experiment::Both);
    if run_sol && cfg.dim != 2 {
        return Err(Failure::Config("invalid parameter `dim`: the solution-map experiment needs n = 2".into()));
    }
    create_out(cfg)?;
    for &r in &cfg.r {
        if run_comp {
            let comp = CompositionConfig {
                n: cfg.composition_n,
                ..Default::default()
            };
            emit_series(cfg, &composition_experiment_with(&comp, r, cfg.k_max, cfg.s)?, r)?;
        }
        if run_sol {
            let sol = SolutionMapConfig {
                stepper: egl::eulerian::StepperConfig {
                    save_every: 0,
                    ..cfg.stepper()
                },
                beta: cfg.beta,
                ..Default::default()
            };
            let base = initial_field(cfg)?;
            emit_series(cfg, &solution_map_experiment_with(&sol, &base, r, cfg.k_max, cfg.s)?, r)?;
        }
    }
    Ok(())
}

fn snapshot_dump(path: &Path, values: bool) -> Outcome {
    let bytes = fs::read(path).map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))?;
    let records = egl::io::decode_all(&bytes)?;
    for (i, snap) in records.iter().enumerate() {
        println!(
            "record {i}: {} dim={} N={} L={} components={}",
            snap.kind.name(),
            snap.grid.dim(),
            snap.grid.n(),
            snap.grid.length(),
            snap.components.len()
        );
        for (c, f) in snap.components.iter().enumerate() {
            let s = f.samples();
            let min = s.iter().copied().fold(f64::INFINITY, f64::min);
            let max = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            println!("  [{c}] min {min:.6e} max {max:.6e} mean {:.6e} L2 {:.6e}", f.mean(), f.sobolev_norm(0.0));
            if values {
                for v in s {
                    println!("    {v:.17e}");
                }
            }
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Outcome {
    if let Command::SnapshotDump { path, values } = &cli.command {
        return snapshot_dump(path, *values);
    }
    let mut cfg = load_config(&cli.common)?;
    match &cli.command {
        Command::Simulate { mode, initial } => {
            if let Some(m) = mode {
                cfg.mode = *m;
            }
            if let Some(i) = initial {
                cfg.initial = *i;
            }
        }
        Command::Illposedness { experiment: Some(e) } => cfg.experiment = *e,
        _ => {}
    }
    cfg.validate()?;
    match cli.command {
        Command::Simulate { .. } => simulate(&cfg),
        Command::Verify { samples } => verify(&cfg, samples),
        Command::Illposedness { .. } => illposedness(&cfg),
        Command::SnapshotDump { .. } => unreachable!("handled above"),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Experiment(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Config(m)) => {
            eprintln!("config error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Numerical(m)) => {
            eprintln!("numerical failure: {m}");
            ExitCode::from(3)
        }
    }
}
