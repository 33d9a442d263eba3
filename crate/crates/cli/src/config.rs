//! Flat `key=value` run configuration.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use hdl_core::io::canonical_r_max;

/// `<n_r>x<n_theta>@<r_max>`, with `r_max` already rounded to what the field
/// header stores.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub n_r: usize,
    pub n_theta: usize,
    pub r_max: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { n_r: 64, n_theta: 128, r_max: canonical_r_max(0.95) }
    }
}

impl FromStr for GridSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let bad = || format!("expected <n_r>x<n_theta>@<r_max>, got {s:?}");
        let (dims, r) = s.trim().split_once('@').ok_or_else(bad)?;
        let (a, b) = dims.split_once('x').ok_or_else(bad)?;
        let n_r: usize = a.trim().parse().map_err(|_| bad())?;
        let n_theta: usize = b.trim().parse().map_err(|_| bad())?;
        let r_max: f64 = r.trim().parse().map_err(|_| bad())?;
        if n_r < 8 || n_theta < 8 || !n_theta.is_multiple_of(2) {
            return Err(format!("grid {s:?} needs n_r >= 8 and an even n_theta >= 8"));
        }
        let r_max = canonical_r_max(r_max);
        if !(r_max > 0.0 && r_max < 1.0) {
            return Err(format!("r_max must lie in (0, 1), got {r}"));
        }
        Ok(Self { n_r, n_theta, r_max })
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}@{}", self.n_r, self.n_theta, self.r_max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// `None` until set, so that a grid stored in an input file can win.
    pub grid: Option<GridSpec>,
    pub curvature: Option<String>,
    pub boundary: Option<String>,
    pub metric_tol: f64,
    pub map_tol: f64,
    pub steps: usize,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub report: Option<PathBuf>,
    pub plot: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            grid: None,
            curvature: None,
            boundary: None,
            metric_tol: 1e-10,
            map_tol: 1e-8,
            steps: 11,
            seed: 0,
            out: None,
            report: None,
            plot: None,
        }
    }
}

impl RunConfig {
    pub fn grid_or_default(&self) -> GridSpec {
        self.grid.unwrap_or_default()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

impl std::error::Error for ConfigError {}

fn positive(v: &str) -> Result<f64, String> {
    let x: f64 = v.parse().map_err(|_| format!("not a number: {v:?}"))?;
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(format!("must be positive, got {v}"))
    }
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut cfg = RunConfig::default();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let err = |message: String| ConfigError { line, message };
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| err(format!("expected key=value, got {content:?}")))?;
        let (key, value) = (key.trim(), value.trim());
        if value.is_empty() {
            return Err(err(format!("missing value for {key:?}")));
        }
        match key {
            "grid" => cfg.grid = Some(value.parse().map_err(err)?),
            "curvature" => cfg.curvature = Some(value.to_string()),
            "boundary" => cfg.boundary = Some(value.to_string()),
            "metric_tol" => cfg.metric_tol = positive(value).map_err(err)?,
            "map_tol" => cfg.map_tol = positive(value).map_err(err)?,
            "steps" => {
                let n: usize = value.parse().map_err(|_| err(format!("steps: not an integer: {value:?}")))?;
                if n < 2 {
                    return Err(err(format!("steps must be at least 2, got {n}")));
                }
                cfg.steps = n;
            }
            "seed" => cfg.seed = value.parse().map_err(|_| err(format!("seed: not an integer: {value:?}")))?,
            "out" => cfg.out = Some(value.into()),
            "report" => cfg.report = Some(value.into()),
            "plot" => cfg.plot = Some(value.into()),
            other => return Err(err(format!("unknown key {other:?}"))),
        }
    }
    Ok(cfg)
}
