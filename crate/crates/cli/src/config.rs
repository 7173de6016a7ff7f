//! Flat `key = value` run configuration.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use wpfp_core::evolve::EvolveConfig;
use wpfp_core::params::{Dim, ParamError, ParameterSet};
use wpfp_core::phase_state::{gaussian, PhaseGrid, WignerState};
use wpfp_core::{Grid, Params, State};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Linear,
    Nonlinear,
    VerifyKernel,
    VerifyTheta,
    VerifyDispersive,
    VerifyAll,
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "linear" => Mode::Linear,
            "nonlinear" => Mode::Nonlinear,
            "verify-kernel" => Mode::VerifyKernel,
            "verify-theta" => Mode::VerifyTheta,
            "verify-dispersive" => Mode::VerifyDispersive,
            "verify-all" => Mode::VerifyAll,
            _ => return Err(format!("unknown mode '{s}'")),
        })
    }
}

/// Every accepted key with its default.
pub const KEYS: &[(&str, &str)] = &[
    ("mode", "linear"),
    ("alpha", "1"),
    ("beta", "1"),
    ("gamma", "0"),
    ("sigma", "1"),
    ("hbar", "1"),
    ("dim", "1"),
    ("nx", "64"),
    ("nv", "64"),
    ("lx", "8"),
    ("lv", "8"),
    ("dt", "0.01"),
    ("t_end", "1"),
    ("picard_tol", "1e-10"),
    ("picard_max", "25"),
    ("max_halvings", "8"),
    ("monitor_every", "1"),
    ("snapshot_every", "0"),
    ("init_amplitude", "1"),
    ("init_x0", "0"),
    ("init_v0", "0"),
    ("init_sx", "1"),
    ("init_sv", "1"),
    ("init_perturbation", "0"),
    ("init_mode", "1"),
    ("cases", "20"),
    ("omegas", "0.5,0"),
    ("seed", "0"),
    ("out", "out"),
];

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<ParamError> for ConfigError {
    fn from(e: ParamError) -> Self {
        ConfigError(format!("invalid physical parameters: {e}"))
    }
}

/// Resolved configuration: defaults, then the file, then `--set`, then dedicated flags.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    values: BTreeMap<String, String>,
}

impl RunConfig {
    pub fn defaults() -> Self {
        Self { values: KEYS.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect() }
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg = Self::defaults();
        cfg.merge_text(&text, &path.display().to_string())?;
        Ok(cfg)
    }

    pub fn merge_text(&mut self, text: &str, origin: &str) -> Result<(), ConfigError> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            self.set_pair(line).map_err(|e| ConfigError(format!("{origin}:{}: {e}", n + 1)))?;
        }
        Ok(())
    }

    /// Applies one `key=value` (spaces around `=` allowed).
    pub fn set_pair(&mut self, pair: &str) -> Result<(), ConfigError> {
        let (k, v) = pair.split_once('=').ok_or_else(|| ConfigError(format!("expected key = value, got '{pair}'")))?;
        self.set(k.trim(), v.trim())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        match self.values.get_mut(key) {
            Some(slot) if !value.is_empty() => {
                *slot = value.to_string();
                Ok(())
            }
            Some(_) => Err(ConfigError(format!("empty value for '{key}'"))),
            None => Err(ConfigError(format!("unknown key '{key}'"))),
        }
    }

    fn raw(&self, key: &str) -> &str {
        &self.values[key]
    }

    pub fn get<V: FromStr>(&self, key: &str) -> Result<V, ConfigError> {
        self.raw(key).parse().map_err(|_| ConfigError(format!("cannot parse {key} = {}", self.raw(key))))
    }

    pub fn mode(&self) -> Result<Mode, ConfigError> {
        self.raw("mode").parse().map_err(ConfigError)
    }

    pub fn out_dir(&self) -> PathBuf {
        PathBuf::from(self.raw("out"))
    }

    pub fn seed(&self) -> Result<u64, ConfigError> {
        self.get("seed")
    }

    /// Decay exponents for the dispersive fits, each in `[0, 1)`.
    pub fn omegas(&self) -> Result<Vec<f64>, ConfigError> {
        let bad = || ConfigError(format!("omegas must be a comma list of numbers in [0, 1), got {}", self.raw("omegas")));
        let list: Vec<f64> = self.raw("omegas").split(',').map(|w| w.trim().parse().map_err(|_| bad())).collect::<Result<_, _>>()?;
        if list.iter().all(|w| (0.0..1.0).contains(w)) {
            Ok(list)
        } else {
            Err(bad())
        }
    }

    pub fn dim(&self) -> Result<Dim, ConfigError> {
        let d: usize = self.get("dim")?;
        Dim::from_usize(d).ok_or_else(|| ConfigError(format!("dim must be 1 or 3, got {d}")))
    }

    pub fn params(&self) -> Result<Params, ConfigError> {
        Ok(ParameterSet::new(self.get("alpha")?, self.get("beta")?, self.get("gamma")?, self.get("sigma")?, self.get("hbar")?, self.dim()?)?)
    }

    pub fn grid(&self) -> Result<Grid, ConfigError> {
        PhaseGrid::new(self.get("nx")?, self.get("nv")?, self.get("lx")?, self.get("lv")?).map_err(|e| ConfigError(e.to_string()))
    }

    pub fn evolve(&self, nonlinear: bool) -> Result<EvolveConfig<f64>, ConfigError> {
        let cfg = EvolveConfig {
            dt: self.get("dt")?,
            t_end: self.get("t_end")?,
            picard_tol: self.get("picard_tol")?,
            picard_max: self.get("picard_max")?,
            max_halvings: self.get("max_halvings")?,
            monitor_every: self.get("monitor_every")?,
            nonlinear,
        };
        cfg.validate().map_err(|e| ConfigError(e.to_string()))?;
        Ok(cfg)
    }

    /// Gaussian bump times `1 + eps cos(pi m x / lx)`.
    pub fn initial_state(&self, grid: &Grid) -> Result<State, ConfigError> {
        let bump = gaussian(
            grid,
            self.get("init_amplitude")?,
            self.get("init_x0")?,
            self.get("init_v0")?,
            self.get("init_sx")?,
            self.get("init_sv")?,
        );
        let eps: f64 = self.get("init_perturbation")?;
        let m: u32 = self.get("init_mode")?;
        let k = std::f64::consts::PI * m as f64 / grid.lx();
        let w = WignerState::from_fn(grid, |x, _| 1.0 + eps * (k * x).cos());
        let w = bump.with_values(&bump.values * &w.values);
        w.check_finite().map_err(|e| ConfigError(format!("initial state: {e}")))?;
        Ok(w)
    }

    /// Every key checked, so a bad value fails before any work starts.
    pub fn validate(&self) -> Result<Mode, ConfigError> {
        let mode = self.mode()?;
        self.params()?;
        self.grid()?;
        self.evolve(true)?;
        self.seed()?;
        let cases: usize = self.get("cases")?;
        if cases == 0 {
            return Err(ConfigError("cases must be positive".into()));
        }
        self.get::<usize>("snapshot_every")?;
        self.omegas()?;
        self.initial_state(&self.grid()?)?;
        if matches!(mode, Mode::Linear | Mode::Nonlinear) && self.dim()? != Dim::One {
            return Err(ConfigError("grid runs support dim = 1 only".into()));
        }
        Ok(mode)
    }

    /// `# key = value` lines, sorted by key.
    pub fn header(&self) -> String {
        self.values.iter().map(|(k, v)| format!("# {k} = {v}\n")).collect()
    }

    /// Plain `key = value` form, loadable with `--config`.
    pub fn to_text(&self) -> String {
        self.values.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}
