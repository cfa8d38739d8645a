//! Run configuration: a flat `key = value` file with `[section]` headers.
//!
//! ```text
//! # comment
//! [grid]
//! dim = 2
//! n = 64
//! length = 6.283185307179586
//!
//! [experiment]
//! kind = solution_map
//! r = 0.05, 0.1, 0.2
//! ```
//!
//! Keys outside a section belong to `[run]`. Unknown sections and keys are
//! errors, so typos do not silently fall back to defaults.

use std::fmt::Write as _;
use std::path::PathBuf;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::eulerian::{Method, StepperConfig};
use crate::grid::Grid;
use crate::lagrangian::Interpolation;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Experiment {
    Composition,
    SolutionMap,
    Both,
}

impl std::str::FromStr for Experiment {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "composition" => Ok(Experiment::Composition),
            "solution_map" => Ok(Experiment::SolutionMap),
            "both" => Ok(Experiment::Both),
            other => Err(format!("unknown experiment `{other}` (composition, solution_map, both)")),
        }
    }
}

impl Experiment {
    fn name(self) -> &'static str {
        match self {
            Experiment::Composition => "composition",
            Experiment::SolutionMap => "solution_map",
            Experiment::Both => "both",
        }
    }
}

/// What `simulate` integrates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Euler,
    Geodesic,
}

impl std::str::FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "euler" => Ok(Mode::Euler),
            "geodesic" => Ok(Mode::Geodesic),
            other => Err(format!("unknown mode `{other}` (euler, geodesic)")),
        }
    }
}

/// Initial data for `simulate`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Initial {
    TaylorGreen,
    Random,
    Zero,
}

impl std::str::FromStr for Initial {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "taylor_green" => Ok(Initial::TaylorGreen),
            "random" => Ok(Initial::Random),
            "zero" => Ok(Initial::Zero),
            other => Err(format!("unknown initial data `{other}` (taylor_green, random, zero)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub dim: usize,
    pub n: usize,
    pub length: f64,
    pub dt: f64,
    pub t_final: f64,
    pub method: Method,
    pub cutoff: f64,
    pub save_every: usize,
    pub s: f64,
    pub mode: Mode,
    pub initial: Initial,
    /// `‖u₀‖_s` for random initial data.
    pub amplitude: f64,
    /// Largest wavenumber of random initial data.
    pub band: i64,
    pub interp: Interpolation,
    pub experiment: Experiment,
    pub r: Vec<f64>,
    pub k_max: usize,
    pub beta: f64,
    /// Points per axis of the composition experiment.
    pub composition_n: usize,
    pub out: PathBuf,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            dim: 2,
            n: 64,
            length: std::f64::consts::TAU,
            dt: 1e-3,
            t_final: 1.0,
            method: Method::Rk4,
            cutoff: 1.0,
            save_every: 100,
            s: 2.5,
            mode: Mode::Euler,
            initial: Initial::TaylorGreen,
            amplitude: 0.5,
            band: 4,
            interp: Interpolation::QuinticSpline,
            experiment: Experiment::Both,
            r: vec![0.1],
            k_max: 8,
            beta: 12.0,
            composition_n: 2048,
            out: PathBuf::from("out"),
            seed: 0,
        }
    }
}

fn bad(line: usize, message: impl Into<String>) -> Error {
    Error::Config {
        line,
        message: message.into(),
    }
}

fn parse_num<T: std::str::FromStr>(line: usize, key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| bad(line, format!("{key}: cannot parse `{v}`")))
}

fn parse_with<T: std::str::FromStr<Err = String>>(line: usize, key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|e: String| bad(line, format!("{key}: {e}")))
}

impl RunConfig {
    /// Parses `text` on top of the defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let mut section = String::from("run");
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split(['#', ';']).next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            if let Some(rest) = content.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| bad(line, "unterminated section header"))?
                    .trim();
                if !["run", "grid", "dynamics", "sobolev", "experiment", "output"].contains(&name) {
                    return Err(bad(line, format!("unknown section [{name}]")));
                }
                section = name.to_string();
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| bad(line, format!("expected `key = value`, got `{content}`")))?;
            cfg.set(&section, key.trim(), value.trim(), line)?;
        }
        Ok(cfg)
    }

    /// Sets one key; `line` is used in error messages (0 for command-line
    /// overrides).
    pub fn set(&mut self, section: &str, key: &str, v: &str, line: usize) -> Result<()> {
        if v.is_empty() {
            return Err(bad(line, format!("{key}: empty value")));
        }
        match (section, key) {
            ("grid", "dim") => self.dim = parse_num(line, key, v)?,
            ("grid", "n") => self.n = parse_num(line, key, v)?,
            ("grid", "length") => self.length = parse_num(line, key, v)?,
            ("dynamics", "dt") => self.dt = parse_num(line, key, v)?,
            ("dynamics", "t") => self.t_final = parse_num(line, key, v)?,
            ("dynamics", "method") => self.method = parse_with(line, key, v)?,
            ("dynamics", "cutoff") => self.cutoff = parse_num(line, key, v)?,
            ("dynamics", "save_every") => self.save_every = parse_num(line, key, v)?,
            ("dynamics", "interp") => self.interp = parse_with(line, key, v)?,
            ("sobolev", "s") => self.s = parse_num(line, key, v)?,
            ("run", "mode") => self.mode = parse_with(line, key, v)?,
            ("run", "initial") => self.initial = parse_with(line, key, v)?,
            ("run", "amplitude") => self.amplitude = parse_num(line, key, v)?,
            ("run", "band") => self.band = parse_num(line, key, v)?,
            ("run", "seed") => self.seed = parse_num(line, key, v)?,
            ("experiment", "kind") => self.experiment = parse_with(line, key, v)?,
            ("experiment", "r") => {
                self.r = v
                    .split(',')
                    .map(|p| parse_num(line, key, p.trim()))
                    .collect::<Result<_>>()?
            }
            ("experiment", "kmax") => self.k_max = parse_num(line, key, v)?,
            ("experiment", "beta") => self.beta = parse_num(line, key, v)?,
            ("experiment", "composition_n") => self.composition_n = parse_num(line, key, v)?,
            ("output", "dir") => self.out = PathBuf::from(v),
            _ => return Err(bad(line, format!("unknown key `{key}` in [{section}]"))),
        }
        Ok(())
    }

    /// Checks every field before any computation. Errors name the offending key.
    pub fn validate(&self) -> Result<()> {
        let err = |key: &'static str, reason: String| Err(Error::param(key, reason));
        Grid::new(self.dim, self.n, self.length).map_err(|e| Error::param("grid", e.to_string()))?;
        self.stepper().validate()?;
        if !(self.t_final.is_finite() && self.t_final > 0.0) {
            return err("T", format!("must be positive, got {}", self.t_final));
        }
        if !(self.s.is_finite() && self.s > self.dim as f64 / 2.0 + 1.0) {
            return err("s", format!("need s > n/2 + 1, got {}", self.s));
        }
        if !(self.amplitude.is_finite() && self.amplitude >= 0.0) {
            return err("amplitude", format!("must be nonnegative, got {}", self.amplitude));
        }
        let kd = (self.n as i64 - 1) / 3;
        if !(1..=kd).contains(&self.band) {
            return err("band", format!("must lie in 1..={kd} for N = {}", self.n));
        }
        if self.r.is_empty() || self.r.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return err("R", "every value must be positive".into());
        }
        if self.k_max == 0 {
            return err("kmax", "must be at least 1".into());
        }
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return err("beta", format!("must be positive, got {}", self.beta));
        }
        if self.composition_n < 8 || !self.composition_n.is_power_of_two() {
            return err("composition_n", format!("must be a power of two >= 8, got {}", self.composition_n));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.dim, self.n, self.length)
    }

    pub fn stepper(&self) -> StepperConfig {
        StepperConfig {
            dt: self.dt,
            method: self.method,
            s_monitor: self.s,
            cutoff: self.cutoff,
            save_every: self.save_every,
            ..Default::default()
        }
    }

    /// Canonical text form; parsing it gives back the same configuration.
    pub fn canonical(&self) -> String {
        let mut t = String::new();
        let list = |v: &[f64]| v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(", ");
        let method = match self.method {
            Method::Rk4 => "rk4",
            Method::Rk2 => "rk2",
        };
        let interp = match self.interp {
            Interpolation::CubicSpline => "cubic",
            Interpolation::QuinticSpline => "quintic",
            Interpolation::Fourier => "fourier",
        };
        let mode = match self.mode {
            Mode::Euler => "euler",
            Mode::Geodesic => "geodesic",
        };
        let initial = match self.initial {
            Initial::TaylorGreen => "taylor_green",
            Initial::Random => "random",
            Initial::Zero => "zero",
        };
        let _ = writeln!(t, "[run]\nmode = {mode}\ninitial = {initial}\namplitude = {:?}\nband = {}\nseed = {}", self.amplitude, self.band, self.seed);
        let _ = writeln!(t, "[grid]\ndim = {}\nn = {}\nlength = {:?}", self.dim, self.n, self.length);
        let _ = writeln!(
            t,
            "[dynamics]\ndt = {:?}\nt = {:?}\nmethod = {method}\ncutoff = {:?}\nsave_every = {}\ninterp = {interp}",
            self.dt, self.t_final, self.cutoff, self.save_every
        );
        let _ = writeln!(t, "[sobolev]\ns = {:?}", self.s);
        let _ = writeln!(
            t,
            "[experiment]\nkind = {}\nr = {}\nkmax = {}\nbeta = {:?}\ncomposition_n = {}",
            self.experiment.name(),
            list(&self.r),
            self.k_max,
            self.beta,
            self.composition_n
        );
        let _ = writeln!(t, "[output]\ndir = {}", self.out.display());
        t
    }

    /// SHA-256 of [`RunConfig::canonical`], hex encoded.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}
