use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{CoriskError, Result};

pub const OUTPUT_DIR_ENV: &str = "CORISK_OUTPUT_DIR";
pub const DEFAULT_OUTPUT_DIR: &str = "corisk-out";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum CopulaChoice {
    Gaussian,
    Gumbel,
    Clayton,
    #[default]
    Mixed,
    Auto,
}

/// A level row: either one probability used for every asset, or `[p1, p_tail...]`
/// with `p1` for the target and the rest for the other assets in column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LevelSpec {
    Diagonal(f64),
    Full(Vec<f64>),
}

impl LevelSpec {
    pub fn parse(s: &str) -> Result<Self> {
        let parts = s
            .split(',')
            .map(|t| t.trim().parse::<f64>().map_err(|_| CoriskError::Input(format!("bad level {t:?} in {s:?}"))))
            .collect::<Result<Vec<f64>>>()?;
        Ok(if parts.len() == 1 { LevelSpec::Diagonal(parts[0]) } else { LevelSpec::Full(parts) })
    }

    /// `(p1, p_tail)` for an `n`-asset portfolio.
    pub fn resolve(&self, n: usize) -> Result<(f64, Vec<f64>)> {
        let (p1, tail) = match self {
            LevelSpec::Diagonal(p) => (*p, vec![*p; n - 1]),
            LevelSpec::Full(v) => {
                if v.len() != n {
                    return Err(CoriskError::Input(format!("level {v:?} needs {n} entries")));
                }
                (v[0], v[1..].to_vec())
            }
        };
        if let Some(p) = std::iter::once(&p1).chain(&tail).find(|p| !(**p > 0.0 && **p < 1.0)) {
            return Err(CoriskError::Input(format!("level {p} outside (0, 1)")));
        }
        Ok((p1, tail))
    }

    /// Stem used in output file names.
    pub fn label(&self) -> String {
        match self {
            LevelSpec::Diagonal(p) => format!("{p}"),
            LevelSpec::Full(v) => {
                if v.iter().all(|p| *p == v[0]) {
                    format!("{}", v[0])
                } else {
                    v.iter().map(|p| format!("{p}")).collect::<Vec<_>>().join("_")
                }
            }
        }
    }
}

pub fn default_levels() -> Vec<LevelSpec> {
    vec![LevelSpec::Diagonal(0.95), LevelSpec::Diagonal(0.975), LevelSpec::Diagonal(0.99)]
}

fn default_threshold() -> f64 {
    0.90
}

fn default_output_dir() -> PathBuf {
    PathBuf::from(DEFAULT_OUTPUT_DIR)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub input_path: PathBuf,
    /// Price columns in portfolio order; empty selects every non-date column.
    #[serde(default)]
    pub asset_columns: Vec<String>,
    #[serde(default = "default_threshold")]
    pub threshold_level: f64,
    #[serde(default = "default_levels")]
    pub levels: Vec<LevelSpec>,
    /// One weight vector per target, in asset order; either over all assets with a zero
    /// at the target, or over the other assets only. Missing means equal weights.
    #[serde(default)]
    pub mmme_weights: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub copula_choice: CopulaChoice,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

impl PipelineConfig {
    pub fn new(input_path: impl Into<PathBuf>) -> Self {
        PipelineConfig {
            input_path: input_path.into(),
            asset_columns: Vec::new(),
            threshold_level: default_threshold(),
            levels: default_levels(),
            mmme_weights: None,
            copula_choice: CopulaChoice::default(),
            seed: 0,
            output_dir: default_output_dir(),
        }
    }

    /// Reads a JSON or TOML file, chosen by extension. Relative input paths resolve
    /// against the config file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CoriskError::Input(format!("cannot read config {}: {e}", path.display())))?;
        let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("").to_ascii_lowercase();
        let mut cfg: PipelineConfig = match ext.as_str() {
            "toml" => toml::from_str(&text).map_err(|e| CoriskError::Input(format!("config {}: {e}", path.display())))?,
            "json" => serde_json::from_str(&text).map_err(|e| CoriskError::Input(format!("config {}: {e}", path.display())))?,
            other => return Err(CoriskError::Input(format!("config extension {other:?} is neither json nor toml"))),
        };
        if cfg.input_path.is_relative() {
            if let Some(dir) = path.parent() {
                cfg.input_path = dir.join(&cfg.input_path);
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.threshold_level > 0.0 && self.threshold_level < 1.0) {
            return Err(CoriskError::Input(format!("threshold_level {} outside (0, 1)", self.threshold_level)));
        }
        if self.levels.is_empty() {
            return Err(CoriskError::Input("levels must not be empty".into()));
        }
        Ok(())
    }
}

/// `CORISK_OUTPUT_DIR` wins over the flag, which wins over the configured value.
pub fn resolve_output_dir(flag: Option<&Path>, configured: Option<&Path>) -> PathBuf {
    if let Some(env) = std::env::var_os(OUTPUT_DIR_ENV).filter(|v| !v.is_empty()) {
        return PathBuf::from(env);
    }
    flag.or(configured).map(Path::to_path_buf).unwrap_or_else(default_output_dir)
}

/// MMME weights over the non-target assets for `target`.
pub fn target_weights(all: Option<&Vec<Vec<f64>>>, target: usize, n: usize) -> Result<Vec<f64>> {
    let Some(all) = all else {
        let k = n - 1;
        let mut w = vec![1.0 / k as f64; k];
        let rest: f64 = w[1..].iter().sum();
        w[0] = 1.0 - rest;
        return Ok(w);
    };
    if all.len() != n {
        return Err(CoriskError::Input(format!("mmme_weights needs one vector per asset ({n}), got {}", all.len())));
    }
    let w = &all[target];
    if w.len() == n {
        if w[target] != 0.0 {
            return Err(CoriskError::Input(format!("mmme_weights for asset {} must be 0 at the target", target + 1)));
        }
        Ok(w.iter().enumerate().filter(|(j, _)| *j != target).map(|(_, v)| *v).collect())
    } else if w.len() == n - 1 {
        Ok(w.clone())
    } else {
        Err(CoriskError::Input(format!("mmme_weights for asset {} has {} entries", target + 1, w.len())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn levels_parse_and_resolve() {
        assert_eq!(LevelSpec::parse("0.95").unwrap(), LevelSpec::Diagonal(0.95));
        let l = LevelSpec::parse("0.95, 0.9,0.9").unwrap();
        assert_eq!(l.resolve(3).unwrap(), (0.95, vec![0.9, 0.9]));
        assert_eq!(l.label(), "0.95_0.9_0.9");
        assert_eq!(LevelSpec::Diagonal(0.975).label(), "0.975");
        assert!(LevelSpec::parse("1.0").unwrap().resolve(3).is_err());
        assert!(l.resolve(4).is_err());
    }

    #[test]
    fn config_files_reject_unknown_keys() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.toml");
        std::fs::write(&p, "input_path = \"x.csv\"\nthreshold_level = 0.9\nlevels = [0.95, [0.99, 0.9, 0.9]]\n").unwrap();
        let c = PipelineConfig::load(&p).unwrap();
        assert_eq!(c.input_path, dir.path().join("x.csv"));
        assert_eq!(c.levels[1], LevelSpec::Full(vec![0.99, 0.9, 0.9]));
        std::fs::write(&p, "input_path = \"x.csv\"\nthreshold = 0.9\n").unwrap();
        assert!(matches!(PipelineConfig::load(&p), Err(CoriskError::Input(_))));
        let j = dir.path().join("c.json");
        std::fs::write(&j, r#"{"input_path": "/a.csv", "copula_choice": "auto", "seed": 3}"#).unwrap();
        let c = PipelineConfig::load(&j).unwrap();
        assert_eq!(c.copula_choice, CopulaChoice::Auto);
        assert_eq!(c.levels, default_levels());
    }

    #[test]
    fn weights_per_target() {
        let w = vec![vec![0.0, 0.75, 0.25], vec![0.5, 0.5], vec![0.9, 0.0, 0.1]];
        assert_eq!(target_weights(Some(&w), 0, 3).unwrap(), vec![0.75, 0.25]);
        assert_eq!(target_weights(Some(&w), 1, 3).unwrap(), vec![0.5, 0.5]);
        assert!(target_weights(Some(&w), 2, 3).is_err());
        assert_eq!(target_weights(None, 0, 3).unwrap(), vec![0.5, 0.5]);
    }
}
