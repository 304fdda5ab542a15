//! Experiment configuration and its key-value text format.
//!
//! ```text
//! # stability sweep
//! m0 = 0.5, 1
//! eps = 0.02, 0.01, 0.005
//! perturb = eps          # or a fixed amplitude
//! t_end = 3/eps          # or eps^-3/2
//! t_cap = 1000
//! dt = 1e-3
//! n = 256
//! sample_every = 100
//! seed = 1
//! out = results
//! ```

use std::path::PathBuf;

use cnwave::approx::EPS_MAX_DEFAULT;
use cnwave::evolve::{DECAY_HORIZON, DT_MAX};
use cnwave::profiles::M_MAX_DEFAULT;

use crate::CliError;

/// Amplitude of the initial perturbation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PerturbRule {
    EqualToEps,
    Fixed(f64),
}

impl PerturbRule {
    pub fn amplitude(self, eps: f64) -> f64 {
        match self {
            PerturbRule::EqualToEps => eps,
            PerturbRule::Fixed(a) => a,
        }
    }
}

/// Final time as a function of ε.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TEndRule {
    /// T = c/ε.
    MultipleOfInvEps(f64),
    /// T = ε^{-3/2}.
    CappedEpsMinus32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub m0_list: Vec<f64>,
    pub eps_list: Vec<f64>,
    pub perturb: PerturbRule,
    pub dt: f64,
    pub n_grid: usize,
    pub t_end_rule: TEndRule,
    /// Absolute cap on T.
    pub t_cap: f64,
    pub sample_every: usize,
    pub seed: u64,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            m0_list: vec![0.5, 1.0],
            eps_list: vec![0.02, 0.01, 0.005],
            perturb: PerturbRule::EqualToEps,
            dt: 1e-3,
            n_grid: 256,
            t_end_rule: TEndRule::MultipleOfInvEps(3.0),
            t_cap: 5000.0,
            sample_every: 100,
            seed: 1,
            output_dir: PathBuf::from("cnwave-out"),
        }
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn parse_f64(key: &str, v: &str) -> Result<f64, CliError> {
    v.trim().parse::<f64>().map_err(|_| usage(format!("{key}: '{v}' is not a number")))
}

/// Comma-separated list of reals.
pub fn parse_list(key: &str, v: &str) -> Result<Vec<f64>, CliError> {
    v.split(',').filter(|s| !s.trim().is_empty()).map(|s| parse_f64(key, s)).collect()
}

pub fn parse_perturb(v: &str) -> Result<PerturbRule, CliError> {
    match v.trim() {
        "eps" | "equal_to_eps" => Ok(PerturbRule::EqualToEps),
        other => Ok(PerturbRule::Fixed(parse_f64("perturb", other)?)),
    }
}

pub fn parse_t_end(v: &str) -> Result<TEndRule, CliError> {
    let v: String = v.chars().filter(|c| !c.is_whitespace()).collect();
    if v == "eps^-3/2" || v == "eps^-1.5" || v == "capped_eps_minus_3_2" {
        return Ok(TEndRule::CappedEpsMinus32);
    }
    if let Some(c) = v.strip_suffix("/eps") {
        return Ok(TEndRule::MultipleOfInvEps(parse_f64("t_end", c)?));
    }
    Err(usage(format!("t_end: expected 'c/eps' or 'eps^-3/2', got '{v}'")))
}

impl ExperimentConfig {
    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let value = value.trim();
        match key.trim() {
            "m0" | "m0_list" => self.m0_list = parse_list(key, value)?,
            "eps" | "eps_list" => self.eps_list = parse_list(key, value)?,
            "perturb" | "perturb_amp" => self.perturb = parse_perturb(value)?,
            "dt" => self.dt = parse_f64(key, value)?,
            "n" | "n_grid" => {
                self.n_grid = value.parse().map_err(|_| usage(format!("n: '{value}' is not an integer")))?
            }
            "t_end" | "t_end_rule" => self.t_end_rule = parse_t_end(value)?,
            "t_cap" => self.t_cap = parse_f64(key, value)?,
            "sample_every" => {
                self.sample_every =
                    value.parse().map_err(|_| usage(format!("sample_every: '{value}' is not an integer")))?
            }
            "seed" => self.seed = value.parse().map_err(|_| usage(format!("seed: '{value}' is not an integer")))?,
            "out" | "output_dir" => self.output_dir = PathBuf::from(value),
            other => return Err(usage(format!("unknown config key '{other}'"))),
        }
        Ok(())
    }

    /// Parses the key-value format on top of the defaults.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut cfg = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| usage(format!("line {}: expected key = value", i + 1)))?;
            cfg.set(k, v)?;
        }
        Ok(cfg)
    }

    /// Final time for a given ε.
    pub fn t_end(&self, eps: f64) -> f64 {
        let t = match self.t_end_rule {
            TEndRule::MultipleOfInvEps(c) => c / eps,
            TEndRule::CappedEpsMinus32 => eps.powf(-1.5),
        };
        t.min(self.t_cap)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.m0_list.is_empty() || self.eps_list.is_empty() {
            return Err(usage("m0 and eps lists must be nonempty"));
        }
        for &m in &self.m0_list {
            if !(m > 0.0 && m <= M_MAX_DEFAULT) {
                return Err(usage(format!("m0 = {m} outside (0, {M_MAX_DEFAULT}]")));
            }
        }
        for &e in &self.eps_list {
            if !(e > 0.0 && e <= EPS_MAX_DEFAULT) {
                return Err(usage(format!("eps = {e} outside (0, {EPS_MAX_DEFAULT}] for the damped suite")));
            }
            let t = self.t_end(e);
            if t > e.powf(-1.5) * (1.0 + 1e-12) {
                return Err(usage(format!("t_end = {t} exceeds eps^-3/2 = {} at eps = {e}", e.powf(-1.5))));
            }
            if t * e > DECAY_HORIZON {
                return Err(usage(format!("t_end*eps = {} exceeds {DECAY_HORIZON}", t * e)));
            }
        }
        if let PerturbRule::Fixed(a) = self.perturb {
            if !(a >= 0.0 && a.is_finite()) {
                return Err(usage(format!("perturbation amplitude {a} must be finite and non-negative")));
            }
        }
        if !(self.dt > 0.0 && self.dt <= DT_MAX) {
            return Err(usage(format!("dt = {} outside (0, {DT_MAX}]", self.dt)));
        }
        if self.n_grid < 64 || self.n_grid % 4 != 0 {
            return Err(usage(format!("n = {} must be a multiple of 4 and at least 64", self.n_grid)));
        }
        if self.sample_every == 0 {
            return Err(usage("sample_every must be positive"));
        }
        if !(self.t_cap > 0.0) {
            return Err(usage("t_cap must be positive"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_key_values() {
        let cfg = ExperimentConfig::parse(
            "# sweep\nm0 = 1\neps = 0.02, 0.01\nperturb = 0.001\nt_end = eps^-3/2\nt_cap = 400\nseed = 9\n",
        )
        .unwrap();
        assert_eq!(cfg.m0_list, vec![1.0]);
        assert_eq!(cfg.eps_list, vec![0.02, 0.01]);
        assert_eq!(cfg.perturb, PerturbRule::Fixed(0.001));
        assert_eq!(cfg.t_end_rule, TEndRule::CappedEpsMinus32);
        assert_eq!(cfg.seed, 9);
        assert!((cfg.t_end(0.02) - 0.02f64.powf(-1.5)).abs() < 1e-9);
        assert_eq!(cfg.t_end(0.01), 400.0);
        cfg.validate().unwrap();
    }

    #[test]
    fn rejects_bad_input() {
        assert!(ExperimentConfig::parse("colour = red").is_err());
        assert!(ExperimentConfig::parse("m0 1").is_err());
        assert!(ExperimentConfig::parse("t_end = forever").is_err());
        let mut cfg = ExperimentConfig::default();
        cfg.eps_list = vec![0.01, 0.0];
        assert!(cfg.validate().is_err());
        cfg.eps_list = vec![];
        assert!(cfg.validate().is_err());
        let cfg = ExperimentConfig { t_end_rule: TEndRule::MultipleOfInvEps(50.0), ..Default::default() };
        assert!(cfg.validate().is_err());
    }
}
