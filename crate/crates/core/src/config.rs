//! Experiment manifest shared by every CLI subcommand.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::adaptive::{CostModel, DEFAULT_REPEATS, DEFAULT_SPLIT_FRACTION};
use crate::dataset::DEFAULT_PER_RELATION_CAP;
use crate::error::{Error, Result};
use crate::eval::{MatchMode, Mode};
use crate::lm::{EndpointConfig, OracleParams};
use crate::popularity::PageviewsConfig;
use crate::report::ReportOptions;

/// Zero-shot is used for expensive endpoints, this many shots otherwise.
pub const DEFAULT_SHOTS: usize = 15;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathsConfig {
    pub triples: Option<PathBuf>,
    pub templates: Option<PathBuf>,
    pub dataset: Option<PathBuf>,
    pub corpus: Option<PathBuf>,
    pub index: Option<PathBuf>,
    pub cache_dir: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RetrieverConfig {
    #[serde(default = "RetrieverConfig::default_k1")]
    pub k1: f64,
    #[serde(default = "RetrieverConfig::default_b")]
    pub b: f64,
}

impl RetrieverConfig {
    fn default_k1() -> f64 {
        1.2
    }
    fn default_b() -> f64 {
        0.75
    }
}

impl Default for RetrieverConfig {
    fn default() -> Self {
        Self {
            k1: Self::default_k1(),
            b: Self::default_b(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    #[serde(default = "DatasetConfig::default_cap")]
    pub per_relation_cap: usize,
    #[serde(default)]
    pub seed: u64,
}

impl DatasetConfig {
    fn default_cap() -> usize {
        DEFAULT_PER_RELATION_CAP
    }
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            per_relation_cap: DEFAULT_PER_RELATION_CAP,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(default)]
    pub mode: Option<Mode>,
    /// Unset means the endpoint's default.
    #[serde(default)]
    pub shots: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub match_mode: MatchMode,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TuneConfig {
    #[serde(default = "TuneConfig::default_split")]
    pub split_fraction: f64,
    #[serde(default = "TuneConfig::default_repeats")]
    pub repeats: usize,
    #[serde(default)]
    pub seed: u64,
}

impl TuneConfig {
    fn default_split() -> f64 {
        DEFAULT_SPLIT_FRACTION
    }
    fn default_repeats() -> usize {
        DEFAULT_REPEATS
    }
}

impl Default for TuneConfig {
    fn default() -> Self {
        Self {
            split_fraction: DEFAULT_SPLIT_FRACTION,
            repeats: DEFAULT_REPEATS,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub paths: PathsConfig,
    #[serde(default)]
    pub dataset: DatasetConfig,
    #[serde(default)]
    pub popularity: PageviewsConfig,
    #[serde(default)]
    pub retriever: RetrieverConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endpoint: Option<EndpointConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleParams>,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub tune: TuneConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost_model: Option<CostModel>,
    #[serde(default)]
    pub report: ReportOptions,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self =
            toml::from_str(text).map_err(|e| Error::Config(one_line(&e.to_string())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.retriever.k1 >= 0.0 && self.retriever.b >= 0.0 && self.retriever.b <= 1.0) {
            return Err(Error::Config(format!(
                "retriever: need k1 >= 0 and 0 <= b <= 1, got k1={} b={}",
                self.retriever.k1, self.retriever.b
            )));
        }
        if self.dataset.per_relation_cap == 0 {
            return Err(Error::Config(
                "dataset.per_relation_cap must be positive".into(),
            ));
        }
        if let Some(e) = &self.endpoint {
            e.validate()?;
        }
        if let Some(o) = &self.oracle {
            o.validate()?;
        }
        if self.endpoint.is_some() && self.oracle.is_some() {
            return Err(Error::Config(
                "set either [endpoint] or [oracle], not both".into(),
            ));
        }
        if !(self.tune.split_fraction > 0.0 && self.tune.split_fraction < 1.0)
            || self.tune.repeats == 0
        {
            return Err(Error::Config(
                "tune: split_fraction must lie in (0, 1) and repeats >= 1".into(),
            ));
        }
        if let Some(c) = &self.cost_model {
            c.validate()?;
        }
        if !(self.report.bin_width > 0.0) {
            return Err(Error::Config("report.bin_width must be positive".into()));
        }
        Ok(())
    }

    /// Explicit shots, else 0 for expensive endpoints and the default otherwise.
    pub fn effective_shots(&self) -> usize {
        self.run.shots.unwrap_or_else(|| match &self.endpoint {
            Some(e) => e.default_shots(),
            None => DEFAULT_SHOTS,
        })
    }
}

/// toml errors span several lines (source excerpt and caret); keep them on one.
fn one_line(msg: &str) -> String {
    msg.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.chars().all(|c| matches!(c, '|' | '^' | ' ')))
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    RunConfig::from_toml(&text).map_err(|e| match e {
        Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gets_defaults() {
        let cfg = RunConfig::from_toml("").unwrap();
        assert_eq!(cfg.retriever.k1, 1.2);
        assert_eq!(cfg.retriever.b, 0.75);
        assert_eq!(cfg.effective_shots(), 15);
        assert_eq!(cfg.dataset.per_relation_cap, 2000);
        assert_eq!(cfg.tune.repeats, 100);
    }

    #[test]
    fn expensive_endpoint_goes_zero_shot() {
        let cfg = RunConfig::from_toml(
            "[endpoint]\nbase_url = \"http://x\"\nmodel = \"m\"\nexpensive = true\n",
        )
        .unwrap();
        assert_eq!(cfg.effective_shots(), 0);
    }

    #[test]
    fn unknown_key_is_reported_with_its_line() {
        let err = RunConfig::from_toml("[retriever]\nk1 = 1.0\nkone = 2\n")
            .unwrap_err()
            .to_string();
        assert!(err.contains("kone"), "{err}");
        assert!(err.contains("line 3"), "{err}");
        assert!(!err.contains('\n'));
    }

    #[test]
    fn negative_price_rejected() {
        let err = RunConfig::from_toml(
            "[cost_model]\nprice_per_1k_prompt_tokens = -1.0\nprice_per_1k_completion_tokens = 0.02\n",
        )
        .unwrap_err();
        assert!(err.to_string().contains("price_per_1k_prompt_tokens"));
    }

    #[test]
    fn round_trip() {
        let text = r#"
[paths]
dataset = "d.jsonl"
index = "i.bin"

[oracle]
a = 2.0
b = 3.5
readout = 0.9

[run]
mode = "retrieval"
shots = 4
seed = 9

[cost_model]
price_per_1k_prompt_tokens = 0.02
price_per_1k_completion_tokens = 0.02
"#;
        let a = RunConfig::from_toml(text).unwrap();
        let b = RunConfig::from_toml(&a.to_toml().unwrap()).unwrap();
        assert_eq!(a, b);
        assert_eq!(b.run.mode, Some(Mode::Retrieval));
    }
}
