//! Pipeline configuration: TOML file, validation, `key=value` overrides and
//! a stable content hash.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::centrality::CentralityKind;
use crate::community::{Seeding, DEFAULT_MAX_SWEEPS};
use crate::enhance::EnhanceSettings;
use crate::error::{CelpError, Result};
use crate::features::PairFeatureConfig;
use crate::graph::SplitFractions;
use crate::scorer::ScorerConfig;

/// Synthetic input. Without a `seed` the graph is regenerated from each
/// run seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SbmData {
    pub block_sizes: Vec<usize>,
    pub p_in: f64,
    pub p_out: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Fraction of intra-block edges removed after sampling.
    #[serde(default, skip_serializing_if = "is_zero")]
    pub delete_intra: f64,
}

fn is_zero(x: &f64) -> bool {
    *x == 0.0
}

/// Either an edge-list file (with optional features) or an SBM spec.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub edges: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub features: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sbm: Option<SbmData>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    pub train: f64,
    pub valid: f64,
    pub test: f64,
    /// Evaluation negatives per positive; capped by the available non-edges.
    pub neg_per_pos: usize,
}

impl Default for SplitConfig {
    fn default() -> Self {
        let f = SplitFractions::default();
        SplitConfig { train: f.train, valid: f.valid, test: f.test, neg_per_pos: 100 }
    }
}

impl SplitConfig {
    pub fn fractions(&self) -> SplitFractions {
        SplitFractions { train: self.train, valid: self.valid, test: self.test }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CommunityConfig {
    pub k: usize,
    pub max_sweeps: usize,
    pub seeding: Seeding,
    /// Centrality for center selection and candidate filtering.
    pub centrality: CentralityKind,
}

impl Default for CommunityConfig {
    fn default() -> Self {
        CommunityConfig { k: 4, max_sweeps: DEFAULT_MAX_SWEEPS, seeding: Seeding::default(), centrality: CentralityKind::Pagerank }
    }
}

/// Switches for the three enhancement modules.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Ablation {
    /// Structural encoding appended to node features.
    pub global: bool,
    /// Edge completion and pruning.
    pub structure: bool,
    /// Local pair features in the scoring head.
    pub local: bool,
}

impl Default for Ablation {
    fn default() -> Self {
        Ablation { global: true, structure: true, local: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub k: usize,
    /// Heuristic baselines reported next to the model.
    pub baselines: Vec<crate::eval::HeuristicKind>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        use crate::eval::HeuristicKind::*;
        EvalConfig { k: 50, baselines: vec![Cn, Aa, Ra] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seeds: Vec<u64>,
    pub data: DataConfig,
    pub split: SplitConfig,
    pub community: CommunityConfig,
    pub enhance: EnhanceSettings,
    pub features: PairFeatureConfig,
    pub scorer: ScorerConfig,
    /// Confidence model; defaults to `scorer` when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pretrain: Option<ScorerConfig>,
    pub ablation: Ablation,
    pub eval: EvalConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seeds: vec![0],
            data: DataConfig::default(),
            split: SplitConfig::default(),
            community: CommunityConfig::default(),
            enhance: EnhanceSettings::default(),
            features: PairFeatureConfig::default(),
            scorer: ScorerConfig::default(),
            pretrain: None,
            ablation: Ablation::default(),
            eval: EvalConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: PipelineConfig = toml::from_str(s).map_err(|e| CelpError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| CelpError::io(path, e))?;
        Self::from_toml_str(&s).map_err(|e| CelpError::Config(format!("{}: {e}", path.display())))
    }

    /// Loads a file (or the defaults) and applies `a.b.c=value` overrides.
    /// Values are parsed as TOML, falling back to a plain string.
    pub fn load_with_overrides(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table = match path {
            Some(p) => {
                let s = std::fs::read_to_string(p).map_err(|e| CelpError::io(p, e))?;
                s.parse().map_err(|e: toml::de::Error| CelpError::Config(format!("{}: {e}", p.display())))?
            }
            None => toml::Table::new(),
        };
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let cfg: PipelineConfig =
            toml::Value::Table(table).try_into().map_err(|e: toml::de::Error| CelpError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(CelpError::Config(m));
        if self.seeds.is_empty() {
            return bad("seeds must not be empty".into());
        }
        match (&self.data.edges, &self.data.sbm) {
            (Some(_), Some(_)) => return bad("data: give either `edges` or `sbm`, not both".into()),
            (None, None) => return bad("data: one of `edges` or `sbm` is required".into()),
            (None, Some(s)) => {
                if self.data.features.is_some() {
                    return bad("data.features needs data.edges".into());
                }
                let spec = crate::sbm::SbmSpec {
                    block_sizes: s.block_sizes.clone(),
                    p_in: s.p_in,
                    p_out: s.p_out,
                    seed: 0,
                    delete_intra: s.delete_intra,
                };
                spec.validate().map_err(|e| CelpError::Config(format!("data.sbm: {e}")))?;
            }
            (Some(_), None) => {}
        }
        self.split.fractions().validate().map_err(|e| CelpError::Config(format!("split: {e}")))?;
        if self.community.k == 0 {
            return bad("community.k must be >= 1".into());
        }
        self.enhance.validate().map_err(|e| CelpError::Config(format!("enhance: {e}")))?;
        self.features.validate().map_err(|e| CelpError::Config(format!("features: {e}")))?;
        self.scorer.validate().map_err(|e| CelpError::Config(format!("scorer: {e}")))?;
        if let Some(p) = &self.pretrain {
            p.validate().map_err(|e| CelpError::Config(format!("pretrain: {e}")))?;
        }
        if self.eval.k == 0 {
            return bad("eval.k must be >= 1".into());
        }
        Ok(())
    }

    pub fn pretrain_config(&self) -> &ScorerConfig {
        self.pretrain.as_ref().unwrap_or(&self.scorer)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config is always representable as TOML")
    }

    pub fn hash(&self) -> String {
        content_hash(self)
    }
}

/// First 16 hex digits of the SHA-256 of the value's JSON form.
pub fn content_hash<T: Serialize>(value: &T) -> String {
    let json = serde_json::to_vec(value).expect("serializable");
    let digest = Sha256::digest(&json);
    hex::encode(&digest[..8])
}

fn apply_override(table: &mut toml::Table, spec: &str) -> Result<()> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| CelpError::Config(format!("override `{spec}` is not key=value")))?;
    let key = key.trim();
    let raw = raw.trim();
    let value = parse_value(raw);
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts.pop().filter(|s| !s.is_empty()).ok_or_else(|| CelpError::Config(format!("empty key in `{spec}`")))?;
    let mut cur = table;
    for p in parts {
        let entry = cur.entry(p.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| CelpError::Config(format!("`{p}` in `{key}` is not a table")))?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}

fn parse_value(raw: &str) -> toml::Value {
    format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}
