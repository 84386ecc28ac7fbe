//! Flat `key = value` run configuration.
//!
//! Blank lines and lines starting with `#` are ignored. Every key must be
//! known, appear once and parse as its type; violations are config errors
//! reported with the line number.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use coupled_transport::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Manufactured,
    Diagonal,
    Run,
}

/// Radius description for the generic `run` command.
#[derive(Debug, Clone, PartialEq)]
pub enum RadiusConfig {
    Constant(f64),
    Tanh { r_min: f64, r_max: f64, beta: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub levels: Vec<usize>,
    pub degree: usize,
    pub epsilon: i32,
    pub sigma: f64,
    /// `tau = time_step_factor * h`.
    pub time_step_factor: f64,
    pub final_time: f64,
    pub circle_points: usize,
    pub out: PathBuf,
    pub snapshots: Vec<f64>,
    pub case: u32,
    pub fine: usize,
    /// Evaluate the reproduction bands and fail with exit code 4 when missed.
    pub check: bool,
    pub sequential: bool,
    pub p0: [f64; 3],
    pub p1: [f64; 3],
    pub radius: RadiusConfig,
    /// Permeability values on equal-length pieces of the vessel.
    pub gamma: Vec<f64>,
    pub kappa: f64,
    pub kappa_hat: f64,
    pub velocity: [f64; 3],
    pub u_hat: f64,
    pub inflow_value: f64,
    /// Inflow is switched off after this time; unbounded if absent.
    pub inflow_until: Option<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let d = 1.0 / 3f64.sqrt();
        RunConfig {
            command: Command::Run,
            levels: vec![4, 8, 16],
            degree: 1,
            epsilon: 1,
            sigma: 50.0,
            time_step_factor: 0.1,
            final_time: 1.0,
            circle_points: 16,
            out: PathBuf::from("out"),
            snapshots: vec![0.0125, 0.5, 1.0],
            case: 1,
            fine: 32,
            check: false,
            sequential: false,
            p0: [-0.4; 3],
            p1: [0.4; 3],
            radius: RadiusConfig::Constant(0.05),
            gamma: vec![0.1],
            kappa: 1.0,
            kappa_hat: 1.0,
            velocity: [d; 3],
            u_hat: 1.0,
            inflow_value: 5.0,
            inflow_until: Some(0.1),
        }
    }
}

const KEYS: &[&str] = &[
    "command",
    "levels",
    "degree",
    "epsilon",
    "sigma",
    "time_step_factor",
    "final_time",
    "circle_points",
    "out",
    "snapshots",
    "case",
    "fine",
    "check",
    "sequential",
    "p0",
    "p1",
    "radius",
    "r_min",
    "r_max",
    "beta",
    "gamma",
    "kappa",
    "kappa_hat",
    "velocity",
    "u_hat",
    "inflow_value",
    "inflow_until",
];

fn config_error(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("line {line}: {msg}"))
}

fn parse_f64(line: usize, key: &str, v: &str) -> Result<f64> {
    v.parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| config_error(line, format!("{key}: expected a number, got '{v}'")))
}

fn parse_list<T: std::str::FromStr>(line: usize, key: &str, v: &str) -> Result<Vec<T>> {
    v.split(',')
        .map(|p| {
            p.trim()
                .parse::<T>()
                .map_err(|_| config_error(line, format!("{key}: cannot parse '{}'", p.trim())))
        })
        .collect()
}

fn parse_vec3(line: usize, key: &str, v: &str) -> Result<[f64; 3]> {
    let xs: Vec<f64> = parse_list(line, key, v)?;
    <[f64; 3]>::try_from(xs)
        .map_err(|_| config_error(line, format!("{key}: expected three comma-separated numbers")))
}

pub fn parse_command(v: &str) -> Result<Command> {
    match v {
        "manufactured" => Ok(Command::Manufactured),
        "diagonal" => Ok(Command::Diagonal),
        "run" => Ok(Command::Run),
        other => Err(Error::Config(format!(
            "command must be manufactured, diagonal or run, got '{other}'"
        ))),
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut entries: BTreeMap<String, (usize, String)> = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.trim();
            if content.is_empty() || content.starts_with('#') {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| config_error(line, format!("expected key = value, got '{content}'")))?;
            let key = key.trim();
            if !KEYS.contains(&key) {
                return Err(config_error(line, format!("unknown key '{key}'")));
            }
            if entries.insert(key.to_string(), (line, value.trim().to_string())).is_some() {
                return Err(config_error(line, format!("duplicate key '{key}'")));
            }
        }

        let mut c = RunConfig::default();
        let mut tanh = [None, None, None];
        for (key, (line, v)) in &entries {
            let (line, v) = (*line, v.as_str());
            match key.as_str() {
                "command" => c.command = parse_command(v).map_err(|e| config_error(line, e))?,
                "levels" => c.levels = parse_list(line, key, v)?,
                "degree" => c.degree = parse_list::<usize>(line, key, v).map(|x| x[0])?,
                "epsilon" => c.epsilon = parse_list::<i32>(line, key, v).map(|x| x[0])?,
                "sigma" => c.sigma = parse_f64(line, key, v)?,
                "time_step_factor" => c.time_step_factor = parse_f64(line, key, v)?,
                "final_time" => c.final_time = parse_f64(line, key, v)?,
                "circle_points" => c.circle_points = parse_list::<usize>(line, key, v).map(|x| x[0])?,
                "out" => c.out = PathBuf::from(v),
                "snapshots" => c.snapshots = parse_list(line, key, v)?,
                "case" => c.case = parse_list::<u32>(line, key, v).map(|x| x[0])?,
                "fine" => c.fine = parse_list::<usize>(line, key, v).map(|x| x[0])?,
                "check" => c.check = parse_bool(line, key, v)?,
                "sequential" => c.sequential = parse_bool(line, key, v)?,
                "p0" => c.p0 = parse_vec3(line, key, v)?,
                "p1" => c.p1 = parse_vec3(line, key, v)?,
                "radius" => c.radius = RadiusConfig::Constant(parse_f64(line, key, v)?),
                "r_min" => tanh[0] = Some(parse_f64(line, key, v)?),
                "r_max" => tanh[1] = Some(parse_f64(line, key, v)?),
                "beta" => tanh[2] = Some(parse_f64(line, key, v)?),
                "gamma" => c.gamma = parse_list(line, key, v)?,
                "kappa" => c.kappa = parse_f64(line, key, v)?,
                "kappa_hat" => c.kappa_hat = parse_f64(line, key, v)?,
                "velocity" => c.velocity = parse_vec3(line, key, v)?,
                "u_hat" => c.u_hat = parse_f64(line, key, v)?,
                "inflow_value" => c.inflow_value = parse_f64(line, key, v)?,
                "inflow_until" => {
                    c.inflow_until = if v == "none" {
                        None
                    } else {
                        Some(parse_f64(line, key, v)?)
                    }
                }
                _ => unreachable!("key list checked above"),
            }
        }
        match tanh {
            [None, None, None] => {}
            [Some(r_min), Some(r_max), Some(beta)] => {
                if entries.contains_key("radius") {
                    return Err(Error::Config(
                        "give either radius or r_min/r_max/beta, not both".into(),
                    ));
                }
                c.radius = RadiusConfig::Tanh { r_min, r_max, beta };
            }
            _ => {
                return Err(Error::Config(
                    "a tanh radius needs all of r_min, r_max and beta".into(),
                ))
            }
        }
        c.validate()?;
        Ok(c)
    }

    /// Checks that do not need any assembly.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.levels.is_empty() || self.levels.windows(2).any(|w| w[1] <= w[0]) || self.levels[0] < 2 {
            return bad(format!("levels must be strictly increasing integers >= 2, got {:?}", self.levels));
        }
        if self.degree < 1 {
            return bad(format!("degree must be >= 1, got {}", self.degree));
        }
        if !(self.time_step_factor > 0.0) {
            return bad(format!("time_step_factor must be positive, got {}", self.time_step_factor));
        }
        if !(self.final_time > 0.0) {
            return bad(format!("final_time must be positive, got {}", self.final_time));
        }
        if self.circle_points < 4 {
            return bad(format!("circle_points must be >= 4, got {}", self.circle_points));
        }
        if self.snapshots.iter().any(|&t| !(0.0..=self.final_time).contains(&t)) {
            return bad(format!("snapshot times must lie in [0, {}]", self.final_time));
        }
        if !(1..=3).contains(&self.case) {
            return bad(format!("case must be 1, 2 or 3, got {}", self.case));
        }
        if self.command == Command::Diagonal && self.levels.iter().any(|&n| n > self.fine) {
            return bad(format!("fine level {} is coarser than the levels {:?}", self.fine, self.levels));
        }
        if self.gamma.is_empty() {
            return bad("gamma needs at least one value".into());
        }
        Ok(())
    }
}

fn parse_bool(line: usize, key: &str, v: &str) -> Result<bool> {
    match v {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(config_error(line, format!("{key}: expected true or false, got '{v}'"))),
    }
}
