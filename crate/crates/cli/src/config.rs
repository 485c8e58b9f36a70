//! Run configuration: a plain `key = value` file, overridden by flags.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;

use crate::CliError;

/// Environment variable naming the default configuration file.
pub const CONFIG_ENV: &str = "MONO_CONFIG";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FieldKind {
    Abelian,
    Hedgehog,
    FromNahm,
}

impl FromStr for FieldKind {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "abelian" => Ok(Self::Abelian),
            "hedgehog" => Ok(Self::Hedgehog),
            "from-nahm" => Ok(Self::FromNahm),
            other => Err(CliError::Config(format!("unknown field {other:?} (abelian | hedgehog | from-nahm)"))),
        }
    }
}

impl fmt::Display for FieldKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Abelian => "abelian",
            Self::Hedgehog => "hedgehog",
            Self::FromNahm => "from-nahm",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub field: FieldKind,
    pub mass: f64,
    pub charge: u32,
    #[serde(rename = "T")]
    pub t: Option<f64>,
    pub ode_rtol: f64,
    pub ode_atol: f64,
    pub fd_step: f64,
    pub grid_n: usize,
    pub threshold: f64,
    pub seed: u64,
    pub workers: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            field: FieldKind::Hedgehog,
            mass: 1.0,
            charge: 1,
            t: None,
            ode_rtol: 1e-10,
            ode_atol: 1e-12,
            fd_step: 1e-3,
            grid_n: 40,
            threshold: 1e-3,
            seed: 0,
            workers: 0,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, CliError> {
    value.trim().parse().map_err(|_| CliError::Config(format!("invalid value {value:?} for {key}")))
}

impl RunConfig {
    /// Sets one key; unknown keys are errors.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        match key.trim() {
            "field" => self.field = value.parse()?,
            "mass" => self.mass = parse(key, value)?,
            "charge" => self.charge = parse(key, value)?,
            "T" => self.t = Some(parse(key, value)?),
            "ode_rtol" => self.ode_rtol = parse(key, value)?,
            "ode_atol" => self.ode_atol = parse(key, value)?,
            "fd_step" => self.fd_step = parse(key, value)?,
            "grid_n" => self.grid_n = parse(key, value)?,
            "threshold" => self.threshold = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "workers" => self.workers = parse(key, value)?,
            other => return Err(CliError::Config(format!("unknown configuration key {other:?}"))),
        }
        Ok(())
    }

    /// Applies `key = value` lines; `#` starts a comment.
    pub fn merge_text(&mut self, text: &str) -> Result<(), CliError> {
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected `key = value`", n + 1)))?;
            self.set(key, value)?;
        }
        Ok(())
    }

    pub fn merge_file(&mut self, path: &Path) -> Result<(), CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        self.merge_text(&text)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let positive = [
            ("mass", self.mass),
            ("ode_rtol", self.ode_rtol),
            ("ode_atol", self.ode_atol),
            ("fd_step", self.fd_step),
            ("threshold", self.threshold),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(CliError::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if let Some(t) = self.t {
            if !(t > 0.0 && t.is_finite()) {
                return Err(CliError::Config(format!("T must be positive, got {t}")));
            }
        }
        if self.grid_n < 8 {
            return Err(CliError::Config(format!("grid_n must be at least 8, got {}", self.grid_n)));
        }
        if self.charge == 0 {
            return Err(CliError::Config("charge must be at least 1".into()));
        }
        Ok(())
    }
}
