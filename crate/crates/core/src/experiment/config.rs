//! Flat `key = value` experiment configuration.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::potential::PotentialChoice;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dynamics {
    Langevin1d,
    Langevin2d,
    Gle,
}

impl Dynamics {
    pub fn as_str(&self) -> &'static str {
        match self {
            Dynamics::Langevin1d => "langevin-1d",
            Dynamics::Langevin2d => "langevin-2d",
            Dynamics::Gle => "gle",
        }
    }
}

impl FromStr for Dynamics {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "langevin-1d" => Ok(Dynamics::Langevin1d),
            "langevin-2d" => Ok(Dynamics::Langevin2d),
            "gle" => Ok(Dynamics::Gle),
            _ => Err(Error::Config(format!("unknown dynamics '{s}'"))),
        }
    }
}

/// Control variate families.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CvKind {
    None,
    /// `p / gamma`
    Linear,
    Galerkin,
    Underdamped,
    File,
    Tensorized,
}

impl CvKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            CvKind::None => "none",
            CvKind::Linear => "linear",
            CvKind::Galerkin => "galerkin",
            CvKind::Underdamped => "underdamped",
            CvKind::File => "file",
            CvKind::Tensorized => "tensorized",
        }
    }
}

impl FromStr for CvKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "none" => CvKind::None,
            "linear" => CvKind::Linear,
            "galerkin" => CvKind::Galerkin,
            "underdamped" => CvKind::Underdamped,
            "file" => CvKind::File,
            "tensorized" => CvKind::Tensorized,
            _ => return Err(Error::Config(format!("unknown control variate '{s}'"))),
        })
    }
}

/// Final time as a function of the friction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TimeRule {
    Fixed(f64),
    /// `T = multiplier / gamma`
    InverseGamma(f64),
}

impl TimeRule {
    pub fn final_time(&self, gamma: f64) -> f64 {
        match *self {
            TimeRule::Fixed(t) => t,
            TimeRule::InverseGamma(m) => m / gamma,
        }
    }
}

impl FromStr for TimeRule {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let bad = || {
            Error::Config(format!(
                "time rule must be 'fixed', '<m>/gamma' or a number, got '{s}'"
            ))
        };
        if let Some(m) = s.strip_suffix("/gamma") {
            let m: f64 = m.trim().parse().map_err(|_| bad())?;
            return Ok(TimeRule::InverseGamma(m));
        }
        if s == "fixed" {
            return Ok(TimeRule::Fixed(f64::NAN));
        }
        s.parse::<f64>().map(TimeRule::Fixed).map_err(|_| bad())
    }
}

impl std::fmt::Display for TimeRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TimeRule::Fixed(t) => write!(f, "{t}"),
            TimeRule::InverseGamma(m) => write!(f, "{m}/gamma"),
        }
    }
}

/// Full experiment description. Every field has a key of the same name.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub dynamics: Dynamics,
    pub potential: String,
    pub stiffness: f64,
    pub delta: Vec<f64>,
    pub beta: f64,
    pub gamma: Vec<f64>,
    pub nu: f64,
    pub dt: f64,
    pub t_rule: TimeRule,
    pub replicas: usize,
    /// Snapshot times as fractions of the final time.
    pub snapshots: Vec<f64>,
    pub cv: CvKind,
    /// Base family of a tensorized control variate.
    pub tensorized_base: CvKind,
    pub cv_file: Option<PathBuf>,
    pub axis: usize,
    pub preset: String,
    pub spectral_n: usize,
    /// Hermite scale in units of `1/sqrt(beta)`.
    pub spectral_sigma: f64,
    pub grid_nq: usize,
    pub grid_np: usize,
    /// Momentum truncation in units of `1/sqrt(beta)`.
    pub grid_lp: f64,
    pub seed: u64,
    pub output: PathBuf,
    pub max_steps: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            dynamics: Dynamics::Langevin1d,
            potential: "cosine".into(),
            stiffness: 1.0,
            delta: vec![0.0],
            beta: 1.0,
            gamma: vec![1.0],
            nu: 1.0,
            dt: 0.01,
            t_rule: TimeRule::InverseGamma(100.0),
            replicas: 1000,
            snapshots: vec![0.25, 0.5, 0.75, 1.0],
            cv: CvKind::None,
            tensorized_base: CvKind::Underdamped,
            cv_file: None,
            axis: 0,
            preset: "desk".into(),
            spectral_n: 60,
            spectral_sigma: 0.5,
            grid_nq: 128,
            grid_np: 192,
            grid_lp: 9.0,
            seed: 20240601,
            output: PathBuf::from("out"),
            max_steps: 100_000_000,
        }
    }
}

fn list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(|s| s.trim())
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<T>()
                .map_err(|_| Error::Config(format!("bad value '{s}' for '{key}'")))
        })
        .collect()
}

fn scalar<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse::<T>()
        .map_err(|_| Error::Config(format!("bad value '{value}' for '{key}'")))
}

fn join(xs: &[f64]) -> String {
    xs.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

impl ExperimentConfig {
    /// Parse configuration text: one `key = value` per line, `#` comments.
    /// A `preset` key is applied before all other keys.
    pub fn parse(text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected 'key = value'", lineno + 1))
            })?;
            pairs.push((k.trim().to_string(), v.trim().to_string()));
        }
        Self::from_pairs(&pairs)
    }

    pub fn from_pairs(pairs: &[(String, String)]) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        if let Some((_, p)) = pairs.iter().rev().find(|(k, _)| k == "preset") {
            cfg.apply_preset(p)?;
        }
        for (k, v) in pairs {
            if k != "preset" {
                cfg.set(k, v)?;
            }
        }
        Ok(cfg)
    }

    /// Named parameter sets for the control-variate construction.
    pub fn apply_preset(&mut self, name: &str) -> Result<()> {
        match name {
            "desk" => {
                self.spectral_n = 60;
                self.spectral_sigma = 0.5;
                self.grid_nq = 128;
                self.grid_np = 192;
                self.grid_lp = 9.0;
            }
            "table1" | "paper" => {
                self.spectral_n = 300;
                self.spectral_sigma = 0.1;
                self.grid_nq = 300;
                self.grid_np = 500;
                self.grid_lp = 9.0;
            }
            _ => return Err(Error::Config(format!("unknown preset '{name}'"))),
        }
        self.preset = name.into();
        Ok(())
    }

    /// Set one key.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "dynamics" => self.dynamics = value.parse()?,
            "potential" => self.potential = value.to_string(),
            "stiffness" | "k" => self.stiffness = scalar(key, value)?,
            "delta" => self.delta = list(key, value)?,
            "beta" => self.beta = scalar(key, value)?,
            "gamma" => self.gamma = list(key, value)?,
            "nu" => self.nu = scalar(key, value)?,
            "dt" => self.dt = scalar(key, value)?,
            "t_rule" => self.t_rule = value.parse()?,
            "t_final" => self.t_rule = TimeRule::Fixed(scalar(key, value)?),
            "replicas" | "J" => self.replicas = scalar(key, value)?,
            "snapshots" => self.snapshots = list(key, value)?,
            "cv" | "cv_source" => self.cv = value.parse()?,
            "tensorized_base" => self.tensorized_base = value.parse()?,
            "cv_file" => {
                self.cv_file = if value.is_empty() {
                    None
                } else {
                    Some(PathBuf::from(value))
                }
            }
            "axis" => self.axis = scalar(key, value)?,
            "preset" => self.apply_preset(value)?,
            "spectral_n" => self.spectral_n = scalar(key, value)?,
            "spectral_sigma" => self.spectral_sigma = scalar(key, value)?,
            "grid_nq" => self.grid_nq = scalar(key, value)?,
            "grid_np" => self.grid_np = scalar(key, value)?,
            "grid_lp" => self.grid_lp = scalar(key, value)?,
            "seed" => self.seed = scalar(key, value)?,
            "output" => self.output = PathBuf::from(value),
            "max_steps" => self.max_steps = scalar::<f64>(key, value)? as u64,
            _ => return Err(Error::Config(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be positive, got {v}")))
            }
        };
        positive("beta", self.beta)?;
        positive("dt", self.dt)?;
        if self.gamma.is_empty() {
            return Err(Error::Config("gamma list is empty".into()));
        }
        for &g in &self.gamma {
            positive("gamma", g)?;
        }
        if self.delta.is_empty() {
            return Err(Error::Config("delta list is empty".into()));
        }
        match self.t_rule {
            TimeRule::Fixed(t) => positive("t_final", t)?,
            TimeRule::InverseGamma(m) => positive("t_rule multiplier", m)?,
        }
        if self.replicas < 2 {
            return Err(Error::Config("replicas must be at least 2".into()));
        }
        if self.snapshots.is_empty() || self.snapshots.iter().any(|&s| !(s > 0.0 && s <= 1.0)) {
            return Err(Error::Config(
                "snapshots must be fractions in (0, 1]".into(),
            ));
        }
        if self.snapshots.windows(2).any(|w| w[0] >= w[1]) || *self.snapshots.last().unwrap() != 1.0
        {
            return Err(Error::Config("snapshots must increase and end at 1".into()));
        }
        positive("nu", self.nu)?;
        positive("spectral_sigma", self.spectral_sigma)?;
        positive("grid_lp", self.grid_lp)?;
        if self.spectral_n < 2 || self.grid_nq < 2 || self.grid_np < 1 {
            return Err(Error::Config("spectral and grid sizes too small".into()));
        }
        if self.max_steps == 0 {
            return Err(Error::Config("max_steps must be positive".into()));
        }
        let dim = match self.dynamics {
            Dynamics::Langevin2d => 2,
            _ => 1,
        };
        if self.axis >= dim {
            return Err(Error::Config(format!(
                "axis {} out of range for {}",
                self.axis,
                self.dynamics.as_str()
            )));
        }
        for &d in &self.delta {
            let pot = PotentialChoice::from_name(&self.potential, self.stiffness, d)?;
            if pot.dimension() != dim {
                return Err(Error::Config(format!(
                    "potential '{}' does not match dynamics {}",
                    self.potential,
                    self.dynamics.as_str()
                )));
            }
        }
        let allowed = match self.dynamics {
            Dynamics::Langevin1d => &[
                CvKind::None,
                CvKind::Linear,
                CvKind::Galerkin,
                CvKind::Underdamped,
                CvKind::File,
            ][..],
            Dynamics::Langevin2d => &[CvKind::None, CvKind::Linear, CvKind::Tensorized][..],
            Dynamics::Gle => &[CvKind::None, CvKind::File][..],
        };
        if !allowed.contains(&self.cv) {
            return Err(Error::Config(format!(
                "cv '{}' is not available for {}",
                self.cv.as_str(),
                self.dynamics.as_str()
            )));
        }
        if self.cv == CvKind::Tensorized
            && ![CvKind::Galerkin, CvKind::Underdamped, CvKind::File]
                .contains(&self.tensorized_base)
        {
            return Err(Error::Config(
                "tensorized_base must be galerkin, underdamped or file".into(),
            ));
        }
        let needs_file = self.cv == CvKind::File
            || (self.cv == CvKind::Tensorized && self.tensorized_base == CvKind::File);
        if needs_file && self.cv_file.is_none() {
            return Err(Error::Config(
                "cv_file is required for file-based control variates".into(),
            ));
        }
        Ok(())
    }

    /// Canonical `key = value` listing, one per line.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        put("dynamics", self.dynamics.as_str().into());
        put("potential", self.potential.clone());
        put("stiffness", self.stiffness.to_string());
        put("delta", join(&self.delta));
        put("beta", self.beta.to_string());
        put("gamma", join(&self.gamma));
        put("nu", self.nu.to_string());
        put("dt", self.dt.to_string());
        put("t_rule", self.t_rule.to_string());
        put("replicas", self.replicas.to_string());
        put("snapshots", join(&self.snapshots));
        put("cv", self.cv.as_str().into());
        put("tensorized_base", self.tensorized_base.as_str().into());
        put(
            "cv_file",
            self.cv_file
                .as_ref()
                .map(|p| p.display().to_string())
                .unwrap_or_default(),
        );
        put("axis", self.axis.to_string());
        put("preset", self.preset.clone());
        put("spectral_n", self.spectral_n.to_string());
        put("spectral_sigma", self.spectral_sigma.to_string());
        put("grid_nq", self.grid_nq.to_string());
        put("grid_np", self.grid_np.to_string());
        put("grid_lp", self.grid_lp.to_string());
        put("seed", self.seed.to_string());
        put("output", self.output.display().to_string());
        put("max_steps", self.max_steps.to_string());
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_with_preset_and_overrides() {
        let cfg = ExperimentConfig::parse(
            "# comment\ngrid_nq = 64\npreset = table1\ngamma = 1, 0.1 # trailing\nt_rule = 50/gamma\ncv = galerkin\n",
        )
        .unwrap();
        assert_eq!(cfg.spectral_n, 300);
        assert_eq!(cfg.grid_nq, 64);
        assert_eq!(cfg.gamma, vec![1.0, 0.1]);
        assert_eq!(cfg.t_rule.final_time(0.1), 500.0);
        cfg.validate().unwrap();
    }

    #[test]
    fn round_trips_through_text() {
        let mut cfg = ExperimentConfig::default();
        cfg.set("delta", "0, 0.25").unwrap();
        cfg.set("dynamics", "langevin-2d").unwrap();
        cfg.set("potential", "cos2d").unwrap();
        cfg.set("cv", "tensorized").unwrap();
        cfg.set("t_final", "12.5").unwrap();
        let back = ExperimentConfig::parse(&cfg.to_text()).unwrap();
        assert_eq!(back, cfg);
        back.validate().unwrap();
    }

    #[test]
    fn rejects_bad_input() {
        assert!(ExperimentConfig::parse("gamma = -1")
            .unwrap()
            .validate()
            .is_err());
        assert!(ExperimentConfig::parse("nonsense = 1").is_err());
        assert!(ExperimentConfig::parse("just text").is_err());
        assert!(ExperimentConfig::parse("cv = galerkin\ndynamics = gle")
            .unwrap()
            .validate()
            .is_err());
        assert!(ExperimentConfig::parse("snapshots = 0.5")
            .unwrap()
            .validate()
            .is_err());
        assert!(ExperimentConfig::parse("cv = file")
            .unwrap()
            .validate()
            .is_err());
        assert!(ExperimentConfig::parse("potential = cos2d")
            .unwrap()
            .validate()
            .is_err());
    }
}
