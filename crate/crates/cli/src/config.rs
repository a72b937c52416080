//! Run configuration: built-in defaults, then a TOML file named by
//! `SETCALC_CONFIG`, then command-line flags.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use setcalc::{default_ks, Grid1D, SmoothingKind, SmoothingSchedule};

use crate::error::{CliError, Result};

pub const CONFIG_ENV: &str = "SETCALC_CONFIG";
pub const MIN_NODES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub a: f64,
    pub b: f64,
    pub n: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { a: -1.0, b: 1.0, n: 1001 }
    }
}

impl FromStr for GridSpec {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || CliError::BadConfig(format!("grid must be `a,b,n`, got {s:?}"));
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        let [a, b, n] = parts.as_slice() else { return Err(bad()) };
        Ok(Self {
            a: a.parse().map_err(|_| bad())?,
            b: b.parse().map_err(|_| bad())?,
            n: n.parse().map_err(|_| bad())?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Csv => "csv",
            Format::Json => "json",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SmoothingSpec {
    pub kind: SmoothingKind,
    /// First width; `(b − a)/8` when absent.
    pub w0: Option<f64>,
    pub max_stages: usize,
}

impl Default for SmoothingSpec {
    fn default() -> Self {
        Self { kind: SmoothingKind::Mollifier, w0: None, max_stages: 24 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub grid: GridSpec,
    pub ks: Vec<f64>,
    /// Direction count for vector-valued metrics.
    pub dirs: usize,
    /// Multiplier applied to every automatic tolerance.
    pub tol: f64,
    pub smoothing: SmoothingSpec,
    pub format: Format,
    pub seed: u64,
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            grid: GridSpec::default(),
            ks: default_ks(),
            dirs: 64,
            tol: 1.0,
            smoothing: SmoothingSpec::default(),
            format: Format::Csv,
            seed: 0,
            out: None,
        }
    }
}

/// Flag values; `None` leaves the lower layer in place.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub grid: Option<GridSpec>,
    pub n: Option<usize>,
    pub ks: Option<Vec<f64>>,
    pub dirs: Option<usize>,
    pub tol: Option<f64>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub seed: Option<u64>,
}

pub fn parse_ks(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| CliError::BadConfig(format!("bad k value {t:?}"))))
        .collect()
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::BadConfig(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::BadConfig(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Defaults, then the file named by `SETCALC_CONFIG` if set, then `ov`.
    pub fn load(ov: &Overrides) -> Result<Self> {
        let file = std::env::var_os(CONFIG_ENV).map(PathBuf::from);
        Self::resolve(file.as_deref(), ov)
    }

    pub fn resolve(file: Option<&Path>, ov: &Overrides) -> Result<Self> {
        let mut c = match file {
            Some(p) => Self::from_file(p)?,
            None => Self::default(),
        };
        c.apply(ov);
        c.validate()?;
        Ok(c)
    }

    pub fn apply(&mut self, ov: &Overrides) {
        if let Some(g) = ov.grid {
            self.grid = g;
        }
        if let Some(n) = ov.n {
            self.grid.n = n;
        }
        if let Some(ks) = &ov.ks {
            self.ks = ks.clone();
        }
        if let Some(d) = ov.dirs {
            self.dirs = d;
        }
        if let Some(t) = ov.tol {
            self.tol = t;
        }
        if let Some(o) = &ov.out {
            self.out = Some(o.clone());
        }
        if let Some(f) = ov.format {
            self.format = f;
        }
        if let Some(s) = ov.seed {
            self.seed = s;
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(CliError::BadConfig(m));
        if self.grid.n < MIN_NODES {
            return bad(format!("grid needs at least {MIN_NODES} nodes, got {}", self.grid.n));
        }
        if !(self.grid.a.is_finite() && self.grid.b.is_finite() && self.grid.a < self.grid.b) {
            return bad(format!("grid interval [{}, {}] is empty or not finite", self.grid.a, self.grid.b));
        }
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return bad(format!("tolerance scale must be positive, got {}", self.tol));
        }
        if self.ks.is_empty() || self.ks.iter().any(|k| !(k.is_finite() && *k > 0.0)) || self.ks.windows(2).any(|w| w[0] >= w[1]) {
            return bad(format!("k-schedule must be positive and strictly increasing, got {:?}", self.ks));
        }
        if self.dirs == 0 {
            return bad("direction count must be positive".into());
        }
        if let Some(w) = self.smoothing.w0 {
            if !(w.is_finite() && w > 0.0) {
                return bad(format!("smoothing w0 must be positive, got {w}"));
            }
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid1D<f64>> {
        Grid1D::new(self.grid.a, self.grid.b, self.grid.n).map_err(|e| CliError::BadConfig(e.to_string()))
    }

    /// Halving widths from `w0` down to `h/20`.
    pub fn schedule(&self) -> Result<SmoothingSchedule<f64>> {
        let grid = self.grid()?;
        let s = &self.smoothing;
        let sched = match s.w0 {
            None => SmoothingSchedule::for_grid(&grid, s.kind).map(|mut sc| {
                sc.max_stages = s.max_stages;
                sc
            }),
            Some(w0) => {
                let floor = grid.spacing() / 20.0;
                let widths: Vec<f64> = std::iter::successors(Some(w0), |w| Some(w / 2.0)).take_while(|&w| w >= floor).take(24).collect();
                SmoothingSchedule::new(s.kind, widths, s.max_stages)
            }
        };
        sched.map_err(|e| CliError::BadConfig(e.to_string()))
    }
}
