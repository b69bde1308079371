//! Run configuration: flat `key = value` text grouped in `[section]`s.
//!
//! ```text
//! [model]
//! mu = 0.1
//! beta = 0.3
//! r = 3.0
//!
//! [grid]
//! k = 10
//! n = 32
//! ```
//!
//! Missing keys take their defaults; unknown or repeated keys are errors.
//! [`RunConfig::to_text`] writes every key in a fixed order, so
//! `to_text(parse(text))` is a fixed point.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;

use crate::dynamics::ModelParams;
use crate::error::{CbfError, Result};
use crate::integrator::StepperConfig;
use crate::spectral::Resolution;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum IcKind {
    TaylorGreen,
    Shear,
    Beltrami,
    RandomSpectrum,
}

impl IcKind {
    pub fn name(self) -> &'static str {
        match self {
            IcKind::TaylorGreen => "taylor_green",
            IcKind::Shear => "shear",
            IcKind::Beltrami => "beltrami",
            IcKind::RandomSpectrum => "random_spectrum",
        }
    }
}

impl FromStr for IcKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "taylor_green" => Ok(IcKind::TaylorGreen),
            "shear" => Ok(IcKind::Shear),
            "beltrami" => Ok(IcKind::Beltrami),
            "random_spectrum" => Ok(IcKind::RandomSpectrum),
            other => Err(format!(
                "unknown initial condition `{other}` (taylor_green, shear, beltrami, random_spectrum)"
            )),
        }
    }
}

/// Initial condition; `seed`, `slope` and `amplitude` only affect
/// `random_spectrum`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IcSpec {
    pub kind: IcKind,
    pub seed: u64,
    pub slope: f64,
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub params: ModelParams,
    pub k_max: usize,
    pub grid: usize,
    pub t_end: f64,
    /// Equal `dt_min` and `dt_max` select a fixed step.
    pub dt_min: f64,
    pub dt_max: f64,
    pub tol: f64,
    pub blowup_factor: f64,
    pub ic: IcSpec,
    /// Observe every `cadence`-th accepted step.
    pub cadence: usize,
    /// Write a checkpoint every `checkpoint_every` observations; 0 writes
    /// only the initial and final states.
    pub checkpoint_every: usize,
    pub ledger: PathBuf,
    pub checkpoints: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            params: ModelParams {
                mu: 0.1,
                alpha: 0.0,
                beta: 0.3,
                r: 3.0,
            },
            k_max: 10,
            grid: 32,
            t_end: 0.5,
            dt_min: 1e-3,
            dt_max: 1e-3,
            tol: 1e-8,
            blowup_factor: 1e6,
            ic: IcSpec {
                kind: IcKind::TaylorGreen,
                seed: 7,
                slope: -3.0,
                amplitude: 1.0,
            },
            cadence: 1,
            checkpoint_every: 100,
            ledger: PathBuf::from("ledger.ndjson"),
            checkpoints: PathBuf::from("checkpoints"),
        }
    }
}

const KEYS: &[(&str, &[&str])] = &[
    ("model", &["mu", "alpha", "beta", "r"]),
    ("grid", &["k", "n"]),
    ("time", &["t_end", "dt_min", "dt_max", "tol", "blowup_factor"]),
    ("ic", &["kind", "seed", "slope", "amplitude"]),
    ("output", &["cadence", "checkpoint_every", "ledger", "checkpoints"]),
];

fn parse_value<T: FromStr>(line: usize, key: &str, raw: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    raw.parse().map_err(|e| CbfError::Config {
        line,
        message: format!("`{key}`: cannot parse `{raw}`: {e}"),
    })
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let mut section: Option<&str> = None;
        let mut seen: HashMap<String, usize> = HashMap::new();
        for (i, raw_line) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw_line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            if let Some(rest) = content.strip_prefix('[') {
                let name = rest.strip_suffix(']').ok_or_else(|| CbfError::Config {
                    line,
                    message: format!("malformed section header `{content}`"),
                })?;
                let name = name.trim();
                section =
                    Some(
                        KEYS.iter()
                            .find(|(s, _)| *s == name)
                            .map(|(s, _)| *s)
                            .ok_or_else(|| CbfError::Config {
                                line,
                                message: format!("unknown section `[{name}]`"),
                            })?,
                    );
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| CbfError::Config {
                line,
                message: format!("expected `key = value`, found `{content}`"),
            })?;
            let (key, value) = (key.trim(), value.trim());
            let sec = section.ok_or_else(|| CbfError::Config {
                line,
                message: format!("key `{key}` appears before any section"),
            })?;
            let full = format!("{sec}.{key}");
            if !KEYS.iter().any(|(s, ks)| *s == sec && ks.contains(&key)) {
                return Err(CbfError::Config {
                    line,
                    message: format!("unknown key `{full}`"),
                });
            }
            if let Some(prev) = seen.insert(full.clone(), line) {
                return Err(CbfError::Config {
                    line,
                    message: format!("`{full}` already set on line {prev}"),
                });
            }
            cfg.assign(line, &full, value)?;
        }
        cfg.check().map_err(|(key, message)| CbfError::Config {
            line: seen.get(key).copied().unwrap_or(0),
            message: format!("`{key}`: {message}"),
        })?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    fn assign(&mut self, line: usize, key: &str, v: &str) -> Result<()> {
        match key {
            "model.mu" => self.params.mu = parse_value(line, key, v)?,
            "model.alpha" => self.params.alpha = parse_value(line, key, v)?,
            "model.beta" => self.params.beta = parse_value(line, key, v)?,
            "model.r" => self.params.r = parse_value(line, key, v)?,
            "grid.k" => self.k_max = parse_value(line, key, v)?,
            "grid.n" => self.grid = parse_value(line, key, v)?,
            "time.t_end" => self.t_end = parse_value(line, key, v)?,
            "time.dt_min" => self.dt_min = parse_value(line, key, v)?,
            "time.dt_max" => self.dt_max = parse_value(line, key, v)?,
            "time.tol" => self.tol = parse_value(line, key, v)?,
            "time.blowup_factor" => self.blowup_factor = parse_value(line, key, v)?,
            "ic.kind" => self.ic.kind = parse_value(line, key, v)?,
            "ic.seed" => self.ic.seed = parse_value(line, key, v)?,
            "ic.slope" => self.ic.slope = parse_value(line, key, v)?,
            "ic.amplitude" => self.ic.amplitude = parse_value(line, key, v)?,
            "output.cadence" => self.cadence = parse_value(line, key, v)?,
            "output.checkpoint_every" => self.checkpoint_every = parse_value(line, key, v)?,
            "output.ledger" => self.ledger = PathBuf::from(v),
            "output.checkpoints" => self.checkpoints = PathBuf::from(v),
            _ => unreachable!("key table and assignments agree"),
        }
        Ok(())
    }

    /// First violated invariant as `(key, message)`.
    fn check(&self) -> std::result::Result<(), (&'static str, String)> {
        let p = &self.params;
        if !(p.mu > 0.0 && p.mu.is_finite()) {
            return Err(("model.mu", format!("must be positive, got {}", p.mu)));
        }
        if !(p.alpha >= 0.0 && p.alpha.is_finite()) {
            return Err(("model.alpha", format!("must be nonnegative, got {}", p.alpha)));
        }
        if !(p.beta >= 0.0 && p.beta.is_finite()) {
            return Err(("model.beta", format!("must be nonnegative, got {}", p.beta)));
        }
        if !(p.r >= 1.0 && p.r.is_finite()) {
            return Err(("model.r", format!("must be at least 1, got {}", p.r)));
        }
        if self.k_max == 0 {
            return Err(("grid.k", "must be at least 1".into()));
        }
        if self.grid < 2 * self.k_max + 2 {
            return Err((
                "grid.n",
                format!("must be at least 2k+2 = {}, got {}", 2 * self.k_max + 2, self.grid),
            ));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(("time.t_end", format!("must be nonnegative, got {}", self.t_end)));
        }
        if !(self.dt_min > 0.0 && self.dt_min.is_finite()) {
            return Err(("time.dt_min", format!("must be positive, got {}", self.dt_min)));
        }
        if !(self.dt_max >= self.dt_min && self.dt_max.is_finite()) {
            return Err(("time.dt_max", format!("must be at least dt_min, got {}", self.dt_max)));
        }
        if !(self.tol > 0.0) {
            return Err(("time.tol", format!("must be positive, got {}", self.tol)));
        }
        if !(self.blowup_factor > 1.0) {
            return Err((
                "time.blowup_factor",
                format!("must exceed 1, got {}", self.blowup_factor),
            ));
        }
        if !(self.ic.amplitude >= 0.0 && self.ic.amplitude.is_finite()) {
            return Err((
                "ic.amplitude",
                format!("must be nonnegative, got {}", self.ic.amplitude),
            ));
        }
        if !self.ic.slope.is_finite() {
            return Err(("ic.slope", "must be finite".into()));
        }
        if self.cadence == 0 {
            return Err(("output.cadence", "must be at least 1".into()));
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.check().map_err(|(key, message)| CbfError::Config {
            line: 0,
            message: format!("`{key}`: {message}"),
        })
    }

    /// Canonical text form.
    pub fn to_text(&self) -> String {
        let p = &self.params;
        let mut s = String::new();
        let mut section = |name: &str, entries: &[(&str, String)]| {
            if !s.is_empty() {
                s.push('\n');
            }
            let _ = writeln!(s, "[{name}]");
            for (k, v) in entries {
                let _ = writeln!(s, "{k} = {v}");
            }
        };
        section(
            "model",
            &[
                ("mu", format!("{:?}", p.mu)),
                ("alpha", format!("{:?}", p.alpha)),
                ("beta", format!("{:?}", p.beta)),
                ("r", format!("{:?}", p.r)),
            ],
        );
        section("grid", &[("k", self.k_max.to_string()), ("n", self.grid.to_string())]);
        section(
            "time",
            &[
                ("t_end", format!("{:?}", self.t_end)),
                ("dt_min", format!("{:?}", self.dt_min)),
                ("dt_max", format!("{:?}", self.dt_max)),
                ("tol", format!("{:?}", self.tol)),
                ("blowup_factor", format!("{:?}", self.blowup_factor)),
            ],
        );
        section(
            "ic",
            &[
                ("kind", self.ic.kind.name().to_string()),
                ("seed", self.ic.seed.to_string()),
                ("slope", format!("{:?}", self.ic.slope)),
                ("amplitude", format!("{:?}", self.ic.amplitude)),
            ],
        );
        section(
            "output",
            &[
                ("cadence", self.cadence.to_string()),
                ("checkpoint_every", self.checkpoint_every.to_string()),
                ("ledger", self.ledger.display().to_string()),
                ("checkpoints", self.checkpoints.display().to_string()),
            ],
        );
        s
    }

    pub fn resolution(&self) -> Result<Resolution> {
        Resolution::new(self.k_max, self.grid)
    }

    pub fn is_fixed_step(&self) -> bool {
        self.dt_min == self.dt_max
    }

    pub fn stepper_config(&self) -> StepperConfig {
        let mut c = if self.is_fixed_step() {
            StepperConfig::fixed(self.dt_max)
        } else {
            StepperConfig::adaptive(self.dt_min, self.dt_max, self.tol)
        };
        c.blowup_factor = self.blowup_factor;
        c
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let c = RunConfig::default();
        let text = c.to_text();
        let back = RunConfig::parse(&text).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.to_text(), text);
    }

    #[test]
    fn parses_sections_and_comments() {
        let c = RunConfig::parse(
            "# run\n[model]\nmu = 0.5  # viscosity\nbeta=0.5\n\n[ic]\nkind = random_spectrum\nseed = 9\n",
        )
        .unwrap();
        assert_eq!(c.params.mu, 0.5);
        assert_eq!(c.params.beta, 0.5);
        assert_eq!(c.ic.kind, IcKind::RandomSpectrum);
        assert_eq!(c.ic.seed, 9);
        assert_eq!(c.grid, 32);
    }

    fn line_of(text: &str) -> usize {
        match RunConfig::parse(text) {
            Err(CbfError::Config { line, .. }) => line,
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn errors_carry_line_numbers() {
        assert_eq!(line_of("[model]\nmu = 1\nnu = 2\n"), 3);
        assert_eq!(line_of("[model]\nmu = abc\n"), 2);
        assert_eq!(line_of("mu = 1\n"), 1);
        assert_eq!(line_of("[model]\nmu = 1\nmu = 2\n"), 3);
        assert_eq!(line_of("[nope]\n"), 1);
        assert_eq!(line_of("[grid]\nk = 10\nn = 20\n"), 3);
        assert_eq!(line_of("[model]\n\nmu = -1\n"), 3);
        assert_eq!(line_of("[ic]\nkind = vortex\n"), 2);
    }
}
