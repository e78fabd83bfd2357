//! Run configuration: defaults, `key = value` files, and flag overrides,
//! all funneled through one typed setter so every source gets the same
//! validation.

use std::path::PathBuf;
use std::str::FromStr;

use dnls::Setting;
use thiserror::Error;

/// Configuration failures, with enough context to fix the offending entry.
#[derive(Debug, Error)]
pub enum ConfigError {
    /// Key is not part of the schema.
    #[error("unknown configuration key {key:?}")]
    UnknownKey {
        /// Offending key.
        key: String,
    },
    /// Value failed to parse or violated a range constraint.
    #[error("bad value {value:?} for {key}: {reason}")]
    BadValue {
        /// Key the value was given for.
        key: String,
        /// Raw value text.
        value: String,
        /// Constraint that failed.
        reason: String,
    },
    /// A config-file line is not `key = value` or a comment.
    #[error("line {line} is not `key = value`: {text:?}")]
    MalformedLine {
        /// 1-based line number.
        line: usize,
        /// Raw line text.
        text: String,
    },
}

/// Everything a run needs. The pipeline is deterministic; there is no seed.
#[derive(Clone, Debug)]
pub struct RunConfig {
    /// Built-in potential name (`cubic`, `power:d`, `doublewell`) or a path
    /// to an F-table file. Built-in names win when both exist.
    pub potential: String,
    /// Site placement of the symmetry center.
    pub setting: Setting,
    /// Truncation half-width.
    pub n: usize,
    /// Coupling.
    pub beta: f64,
    /// Flow step; `None` picks 0.8 of the stability threshold.
    pub tau: Option<f64>,
    /// Iteration cap for the flow.
    pub max_steps: usize,
    /// Convergence threshold on the sup-norm residual.
    pub residual_tol: f64,
    /// Directory all artifacts are written into.
    pub output_dir: PathBuf,
    /// Lattice spacings for the continuum sweep, in sweep order.
    pub eps_list: Vec<f64>,
    /// Comparison window half-width `L` for the continuum sweep.
    pub window: f64,
    /// Integration end time.
    pub t_final: f64,
    /// Integrator step.
    pub dt: f64,
    /// Half-widths for truncation sweeps (strictly increasing).
    pub n_list: Vec<usize>,
    /// Couplings for coupling sweeps.
    pub beta_list: Vec<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            potential: "cubic".to_string(),
            setting: Setting::OnSite,
            n: 16,
            beta: 1.0,
            tau: None,
            max_steps: 50_000,
            residual_tol: 1e-10,
            output_dir: PathBuf::from("out"),
            eps_list: vec![0.8, 0.4, 0.2, 0.1, 0.05],
            window: 6.0,
            t_final: 10.0,
            dt: 1e-3,
            n_list: vec![4, 8, 16, 32],
            beta_list: vec![0.25, 0.5, 1.0, 2.0],
        }
    }
}

fn bad(key: &str, value: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::BadValue {
        key: key.to_string(),
        value: value.to_string(),
        reason: reason.into(),
    }
}

fn parse_positive_real(key: &str, value: &str) -> Result<f64, ConfigError> {
    let x: f64 = value
        .parse()
        .map_err(|e| bad(key, value, format!("{e}")))?;
    if !(x.is_finite() && x > 0.0) {
        return Err(bad(key, value, "must be positive and finite"));
    }
    Ok(x)
}

fn parse_positive_int(key: &str, value: &str) -> Result<usize, ConfigError> {
    let n: usize = value
        .parse()
        .map_err(|e| bad(key, value, format!("{e}")))?;
    if n == 0 {
        return Err(bad(key, value, "must be at least 1"));
    }
    Ok(n)
}

fn parse_list<T>(
    key: &str,
    value: &str,
    item: impl Fn(&str, &str) -> Result<T, ConfigError>,
) -> Result<Vec<T>, ConfigError> {
    let items: Vec<T> = value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| item(key, s))
        .collect::<Result<_, _>>()?;
    if items.is_empty() {
        return Err(bad(key, value, "list must not be empty"));
    }
    Ok(items)
}

impl RunConfig {
    /// Applies one `key = value` entry. Both config files and command-line
    /// flags go through here, so precedence is purely call order.
    pub fn apply_kv(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        match key {
            "potential" => {
                if value.is_empty() {
                    return Err(bad(key, value, "must not be empty"));
                }
                self.potential = value.to_string();
            }
            "setting" => {
                self.setting = Setting::from_str(value).map_err(|e| bad(key, value, e))?;
            }
            "n" => self.n = parse_positive_int(key, value)?,
            "beta" => self.beta = parse_positive_real(key, value)?,
            "tau" => {
                self.tau = if value == "auto" {
                    None
                } else {
                    Some(parse_positive_real(key, value)?)
                };
            }
            "steps" => self.max_steps = parse_positive_int(key, value)?,
            "tol" => self.residual_tol = parse_positive_real(key, value)?,
            "out" => {
                if value.is_empty() {
                    return Err(bad(key, value, "must not be empty"));
                }
                self.output_dir = PathBuf::from(value);
            }
            "eps-list" => self.eps_list = parse_list(key, value, parse_positive_real)?,
            "window" => self.window = parse_positive_real(key, value)?,
            "t-final" => self.t_final = parse_positive_real(key, value)?,
            "dt" => self.dt = parse_positive_real(key, value)?,
            "n-list" => {
                let list = parse_list(key, value, parse_positive_int)?;
                if !list.windows(2).all(|w| w[0] < w[1]) {
                    return Err(bad(key, value, "must be strictly increasing"));
                }
                self.n_list = list;
            }
            "beta-list" => self.beta_list = parse_list(key, value, parse_positive_real)?,
            _ => {
                return Err(ConfigError::UnknownKey {
                    key: key.to_string(),
                })
            }
        }
        Ok(())
    }

    /// Applies a plain-text config file: one `key = value` per line, `#`
    /// comments and blank lines ignored, later entries win.
    pub fn apply_file(&mut self, text: &str) -> Result<(), ConfigError> {
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or(ConfigError::MalformedLine {
                line: idx + 1,
                text: raw.to_string(),
            })?;
            self.apply_kv(key.trim(), value.trim())?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_parse_and_override_in_order() {
        let mut cfg = RunConfig::default();
        cfg.apply_file("# comment\n\nn = 8\nbeta = 0.25\nsetting = inter-site\n")
            .unwrap();
        assert_eq!(cfg.n, 8);
        assert_eq!(cfg.beta, 0.25);
        assert_eq!(cfg.setting, Setting::InterSite);
        cfg.apply_kv("n", "12").unwrap();
        assert_eq!(cfg.n, 12);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let mut cfg = RunConfig::default();
        let err = cfg.apply_file("frobnicate = 3\n").unwrap_err();
        assert!(matches!(err, ConfigError::UnknownKey { key } if key == "frobnicate"));
    }

    #[test]
    fn malformed_lines_are_rejected_with_position() {
        let mut cfg = RunConfig::default();
        let err = cfg.apply_file("n = 4\nnot a pair\n").unwrap_err();
        assert!(matches!(err, ConfigError::MalformedLine { line: 2, .. }));
    }

    #[test]
    fn range_constraints_hold_for_every_source() {
        let mut cfg = RunConfig::default();
        assert!(cfg.apply_kv("beta", "-1").is_err());
        assert!(cfg.apply_kv("beta", "nan").is_err());
        assert!(cfg.apply_kv("n", "0").is_err());
        assert!(cfg.apply_kv("dt", "0").is_err());
        assert!(cfg.apply_kv("n-list", "4,4").is_err());
        assert!(cfg.apply_kv("eps-list", "").is_err());
        assert!(cfg.apply_kv("setting", "diagonal").is_err());
    }

    #[test]
    fn tau_accepts_auto() {
        let mut cfg = RunConfig::default();
        cfg.apply_kv("tau", "0.05").unwrap();
        assert_eq!(cfg.tau, Some(0.05));
        cfg.apply_kv("tau", "auto").unwrap();
        assert_eq!(cfg.tau, None);
    }

    #[test]
    fn lists_parse_with_whitespace() {
        let mut cfg = RunConfig::default();
        cfg.apply_kv("eps-list", "0.8, 0.4 ,0.2").unwrap();
        assert_eq!(cfg.eps_list, vec![0.8, 0.4, 0.2]);
        cfg.apply_kv("n-list", "2,6, 10").unwrap();
        assert_eq!(cfg.n_list, vec![2, 6, 10]);
    }
}
