//! End-to-end orchestration with content-hashed stage caching.
//!
//! Stages per seed: load/split, communities + centers, structural encoding,
//! confidence pretraining, enhancement, featurization + training, HR@k.

use std::cell::{Cell, RefCell};
use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::centrality::{centrality, community_centers, CentralityScores};
use crate::community::{fluidc_with_seeding, CommunityPartition};
use crate::config::{content_hash, PipelineConfig};
use crate::encoding::{augment_features, structural_encoding, AugmentedFeatures, StructuralEncoding};
use crate::enhance::{candidate_edges, enhance_graph, pretrain_confidence, EnhancementPlan, ProbabilityMap};
use crate::error::{CelpError, Result, StageContext};
use crate::eval::{heuristic_hit_rate, hit_rate_at_k, EvalReport, SweepAxis, SweepPoint};
use crate::features::PairFeaturizer;
use crate::graph::{split_edges, EdgeSplit, Graph, Pair};
use crate::io;
use crate::rng::derive_seed;
use crate::sbm::{generate_sbm, SbmSpec};
use crate::scorer::{build_constraint, train, Checkpoint, ModelInputs, TrainReport, TrainedModel};

/// JSON stage artifacts keyed by `(stage, key)`, in memory and optionally
/// mirrored on disk so later processes can reuse them.
#[derive(Debug, Default)]
pub struct StageCache {
    dir: Option<PathBuf>,
    mem: RefCell<HashMap<String, String>>,
    hits: Cell<usize>,
    misses: Cell<usize>,
}

impl StageCache {
    pub fn in_memory() -> Self {
        StageCache::default()
    }

    pub fn on_disk(dir: impl Into<PathBuf>) -> Self {
        StageCache { dir: Some(dir.into()), ..StageCache::default() }
    }

    pub fn hits(&self) -> usize {
        self.hits.get()
    }

    pub fn misses(&self) -> usize {
        self.misses.get()
    }

    fn path(&self, stage: &str, key: &str) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| d.join(stage).join(format!("{key}.json")))
    }

    pub fn get_or_compute<T, F>(&self, stage: &str, key: &str, compute: F) -> Result<T>
    where
        T: Serialize + DeserializeOwned,
        F: FnOnce() -> Result<T>,
    {
        let id = format!("{stage}/{key}");
        if let Some(s) = self.mem.borrow().get(&id) {
            self.hits.set(self.hits.get() + 1);
            return Ok(serde_json::from_str(s)?);
        }
        if let Some(p) = self.path(stage, key).filter(|p| p.exists()) {
            let s = std::fs::read_to_string(&p).map_err(|e| CelpError::io(&p, e))?;
            if let Ok(v) = serde_json::from_str(&s) {
                self.hits.set(self.hits.get() + 1);
                self.mem.borrow_mut().insert(id, s);
                return Ok(v);
            }
        }
        self.misses.set(self.misses.get() + 1);
        let value = compute()?;
        let s = serde_json::to_string(&value)?;
        if let Some(p) = self.path(stage, key) {
            if let Some(d) = p.parent() {
                std::fs::create_dir_all(d).map_err(|e| CelpError::io(d, e))?;
            }
            std::fs::write(&p, &s).map_err(|e| CelpError::io(&p, e))?;
        }
        self.mem.borrow_mut().insert(id, s);
        Ok(value)
    }
}

/// Input graph for one seed plus the key identifying it.
/// The generator spec used for `seed` when the data source is an SBM.
pub fn sbm_spec(cfg: &PipelineConfig, seed: u64) -> Option<SbmSpec> {
    cfg.data.sbm.as_ref().map(|s| SbmSpec {
        block_sizes: s.block_sizes.clone(),
        p_in: s.p_in,
        p_out: s.p_out,
        seed: s.seed.unwrap_or(seed),
        delete_intra: s.delete_intra,
    })
}

pub fn load_graph(cfg: &PipelineConfig, seed: u64) -> Result<(Graph, String)> {
    let d = &cfg.data;
    if let Some(edges) = &d.edges {
        let ds = io::load_dataset(edges, d.features.as_deref())?;
        let key = content_hash(&(ds.graph.edges().collect::<Vec<_>>(), ds.graph.features()));
        return Ok((ds.graph, key));
    }
    let spec = sbm_spec(cfg, seed).ok_or_else(|| CelpError::Config("no data source".into()))?;
    let key = content_hash(&spec);
    Ok((generate_sbm(&spec)?.graph, key))
}

/// Everything up to (not including) enhancement.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub seed: u64,
    pub graph: Graph,
    pub split: EdgeSplit,
    pub train_graph: Graph,
    pub scores: CentralityScores,
    /// With centers filled.
    pub partition: CommunityPartition,
    pub encoding: Option<StructuralEncoding>,
    pub features: AugmentedFeatures,
    key: String,
}

#[derive(Serialize, Deserialize)]
struct CommunityArtifact {
    scores: CentralityScores,
    partition: CommunityPartition,
}

pub fn prepare(cfg: &PipelineConfig, seed: u64, cache: &StageCache) -> Result<Prepared> {
    let (graph, data_key) = load_graph(cfg, seed).stage("load")?;
    let split_key = content_hash(&(&data_key, &cfg.split, seed));
    let split: EdgeSplit = cache
        .get_or_compute("split", &split_key, || {
            split_edges(&graph, cfg.split.fractions(), cfg.split.neg_per_pos, derive_seed(seed, "split"))
        })
        .stage("split")?;
    let train_graph = split.train_graph(&graph).stage("split")?;

    let com_key = content_hash(&(&split_key, &cfg.community, seed));
    let c = &cfg.community;
    let art: CommunityArtifact = cache
        .get_or_compute("communities", &com_key, || {
            let p = fluidc_with_seeding(&train_graph, c.k, c.max_sweeps, derive_seed(seed, "fluidc"), c.seeding)?;
            let scores = centrality(&train_graph, c.centrality)?;
            let partition = community_centers(&train_graph, &p, &scores)?;
            Ok(CommunityArtifact { scores, partition })
        })
        .stage("communities")?;

    let (encoding, features) = if cfg.ablation.global {
        let centers = art.partition.centers.as_ref().expect("centers filled");
        let enc = structural_encoding(&train_graph, centers).stage("encoding")?;
        let x = augment_features(graph.features(), &enc).stage("encoding")?;
        (Some(enc), x)
    } else {
        (None, AugmentedFeatures::features_only(graph.features(), graph.n()))
    };
    let key = content_hash(&(&com_key, cfg.ablation.global));
    Ok(Prepared {
        seed,
        graph,
        split,
        train_graph,
        scores: art.scores,
        partition: art.partition,
        encoding,
        features,
        key,
    })
}

#[derive(Debug, Clone)]
pub struct Enhanced {
    pub graph: Graph,
    pub plan: EnhancementPlan,
    /// Present when the confidence model was trained.
    pub pretrain: Option<TrainReport>,
}

#[derive(Serialize, Deserialize)]
struct ConfidenceArtifact {
    cand: Vec<Pair>,
    probs: Vec<(Pair, f64)>,
    report: TrainReport,
}

/// Confidence pretraining on the raw training graph, then completion and
/// pruning. Skipped (empty plan) when disabled or `gamma = eta = 0`.
pub fn enhance(cfg: &PipelineConfig, prep: &Prepared, cache: &StageCache) -> Result<Enhanced> {
    let s = &cfg.enhance;
    if !cfg.ablation.structure || (s.gamma == 0.0 && s.eta == 0.0) {
        return Ok(Enhanced {
            graph: prep.train_graph.clone(),
            plan: EnhancementPlan { cand: Vec::new(), added: Vec::new(), removed: Vec::new(), gamma: s.gamma, eta: s.eta, top_m: s.top_m },
            pretrain: None,
        });
    }
    let seed = prep.seed;
    let pcfg = cfg.pretrain_config();
    let key = content_hash(&(&prep.key, &cfg.features, pcfg, s.top_m, cfg.ablation.local, seed));
    let art: ConfidenceArtifact = cache
        .get_or_compute("confidence", &key, || {
            let cand = candidate_edges(&prep.train_graph, &prep.scores, s.top_m, &prep.partition)?;
            let fz = PairFeaturizer::new(&prep.train_graph, &prep.partition, &cfg.features, derive_seed(seed, "sketch.pretrain"))?;
            let constraint = if pcfg.alpha > 0.0 {
                Some(build_constraint(&prep.partition, &prep.train_graph, pcfg.ppr_radius, cfg.features.restart)?)
            } else {
                None
            };
            let inputs = ModelInputs {
                featurizer: &fz,
                features: &prep.features,
                constraint: constraint.as_ref(),
                local: cfg.ablation.local,
            };
            let conf = pretrain_confidence(&inputs, &prep.split, &cand, pcfg, derive_seed(seed, "pretrain"))?;
            Ok(ConfidenceArtifact { cand, probs: conf.probs.into_iter().collect(), report: conf.report })
        })
        .stage("pretrain")?;
    let probs: ProbabilityMap = art.probs.into_iter().collect();
    let (graph, plan) = enhance_graph(&prep.train_graph, &art.cand, &probs, s).stage("enhance")?;
    Ok(Enhanced { graph, plan, pretrain: Some(art.report) })
}

pub struct Trained {
    pub featurizer: PairFeaturizer,
    pub model: TrainedModel,
    pub positives: Vec<Pair>,
}

/// Featurizes on the enhanced graph and trains the final scorer on the
/// training edges that survived pruning.
pub fn train_final(cfg: &PipelineConfig, prep: &Prepared, enh: &Enhanced) -> Result<Trained> {
    let seed = prep.seed;
    let fz = PairFeaturizer::new(&enh.graph, &prep.partition, &cfg.features, derive_seed(seed, "sketch"))
        .stage("featurize")?;
    let sc = &cfg.scorer;
    let constraint = if sc.alpha > 0.0 {
        Some(build_constraint(&prep.partition, &enh.graph, sc.ppr_radius, cfg.features.restart).stage("train")?)
    } else {
        None
    };
    let removed: std::collections::BTreeSet<Pair> = enh.plan.removed.iter().copied().collect();
    let positives: Vec<Pair> = prep.split.train_edges.iter().copied().filter(|e| !removed.contains(e)).collect();
    let inputs = ModelInputs { featurizer: &fz, features: &prep.features, constraint: constraint.as_ref(), local: cfg.ablation.local };
    let model = train(&inputs, &positives, &prep.split.valid_edges, &prep.split.valid_neg, sc, derive_seed(seed, "train"))
        .stage("train")?;
    Ok(Trained { featurizer: fz, model, positives })
}

/// Outcome of one seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub seed: u64,
    pub hr: f64,
    /// Heuristic HR@k on the unenhanced training graph, same split.
    pub baselines: BTreeMap<String, f64>,
    pub candidates: usize,
    pub added: usize,
    pub removed: usize,
    pub best_epoch: usize,
    pub best_valid_hr: Option<f64>,
    pub final_train_loss: f64,
}

fn run_dir(out: &Path, hash: &str, seed: u64) -> PathBuf {
    out.join(format!("{hash}-s{seed}"))
}

/// One seed end to end; artifacts go under `out/<hash>-s<seed>/` when `out`
/// is given.
pub fn run_seed(cfg: &PipelineConfig, seed: u64, cache: &StageCache, out: Option<&Path>) -> Result<RunResult> {
    let prep = prepare(cfg, seed, cache)?;
    let enh = enhance(cfg, &prep, cache)?;
    let trained = train_final(cfg, &prep, &enh)?;
    let k = cfg.eval.k;
    let split = &prep.split;
    let pos = trained.model.score(&trained.featurizer, &split.test_edges, false).stage("eval")?;
    let neg = trained.model.score(&trained.featurizer, &split.test_neg, false).stage("eval")?;
    let hr = hit_rate_at_k(&pos, &neg, k);
    let mut baselines = BTreeMap::new();
    for &kind in &cfg.eval.baselines {
        let b = heuristic_hit_rate(&prep.train_graph, kind, &split.test_edges, &split.test_neg, k).stage("eval")?;
        baselines.insert(format!("{kind:?}").to_lowercase(), b);
    }
    let result = RunResult {
        seed,
        hr,
        baselines,
        candidates: enh.plan.cand.len(),
        added: enh.plan.added.len(),
        removed: enh.plan.removed.len(),
        best_epoch: trained.model.report.best_epoch,
        best_valid_hr: trained.model.report.best_valid_hr,
        final_train_loss: trained.model.report.loss_trace.last().map_or(f64::NAN, |l| l.total),
    };
    if let Some(out) = out {
        write_run_artifacts(cfg, &prep, &enh, &trained, &result, &run_dir(out, &cfg.hash(), seed)).stage("write")?;
    }
    Ok(result)
}

fn write_run_artifacts(
    cfg: &PipelineConfig,
    prep: &Prepared,
    enh: &Enhanced,
    trained: &Trained,
    result: &RunResult,
    dir: &Path,
) -> Result<()> {
    io::write_json(&prep.split, &dir.join("split.json"))?;
    io::write_partition_csv(&prep.partition, &dir.join("partition.csv"))?;
    io::write_scores_csv(&prep.scores, &dir.join("scores.csv"))?;
    if let Some(enc) = &prep.encoding {
        io::write_encoding_csv(enc, &dir.join("encoding.csv"))?;
    }
    io::write_json(&enh.plan, &dir.join("plan.json"))?;
    io::write_edge_list(&enh.graph, &dir.join("enhanced_edges.txt"))?;
    let ckpt = Checkpoint::new(&cfg.scorer, &cfg.features, &trained.model.model);
    io::write_json(&ckpt, &dir.join("checkpoint.json"))?;
    io::write_json(&trained.model.report, &dir.join("train_report.json"))?;
    io::write_json(result, &dir.join("run.json"))?;
    std::fs::write(dir.join("config.toml"), cfg.to_toml()).map_err(|e| CelpError::io(dir, e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineOutput {
    pub report: EvalReport,
    pub baselines: BTreeMap<String, EvalReport>,
    pub runs: Vec<RunResult>,
}

fn config_value(cfg: &PipelineConfig) -> serde_json::Value {
    serde_json::to_value(cfg).expect("config serializes")
}

/// Runs every configured seed and aggregates. With `out`, writes per-seed
/// artifacts plus `report.json` in the run directory (`<hash>-s<seed>` for
/// a single seed, `<hash>` otherwise).
pub fn run_pipeline(cfg: &PipelineConfig, cache: &StageCache, out: Option<&Path>) -> Result<PipelineOutput> {
    cfg.validate()?;
    let runs = cfg.seeds.iter().map(|&s| run_seed(cfg, s, cache, out)).collect::<Result<Vec<_>>>()?;
    let k = cfg.eval.k;
    let report = EvalReport::from_runs(k, runs.iter().map(|r| r.hr).collect(), config_value(cfg))?;
    let mut baselines = BTreeMap::new();
    for name in runs[0].baselines.keys() {
        let scores = runs.iter().map(|r| r.baselines[name]).collect();
        let mut rep = EvalReport::from_runs(k, scores, serde_json::json!({ "heuristic": name }))?;
        rep.metric = format!("{} {}", name, rep.metric);
        baselines.insert(name.clone(), rep);
    }
    let output = PipelineOutput { report, baselines, runs };
    if let Some(out) = out {
        let dir = report_dir(cfg, out);
        io::write_json(&output.report, &dir.join("report.json")).stage("write")?;
        io::write_json(&output, &dir.join("summary.json")).stage("write")?;
    }
    Ok(output)
}

pub fn report_dir(cfg: &PipelineConfig, out: &Path) -> PathBuf {
    match cfg.seeds.as_slice() {
        [s] => run_dir(out, &cfg.hash(), *s),
        _ => out.join(cfg.hash()),
    }
}

/// Heuristic-only evaluation on the configured splits.
pub fn evaluate_heuristics(cfg: &PipelineConfig, cache: &StageCache) -> Result<BTreeMap<String, EvalReport>> {
    let mut per: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for &seed in &cfg.seeds {
        let (graph, data_key) = load_graph(cfg, seed).stage("load")?;
        let split_key = content_hash(&(&data_key, &cfg.split, seed));
        let split: EdgeSplit = cache
            .get_or_compute("split", &split_key, || {
                split_edges(&graph, cfg.split.fractions(), cfg.split.neg_per_pos, derive_seed(seed, "split"))
            })
            .stage("split")?;
        let g = split.train_graph(&graph).stage("split")?;
        for &kind in &cfg.eval.baselines {
            let hr = heuristic_hit_rate(&g, kind, &split.test_edges, &split.test_neg, cfg.eval.k).stage("eval")?;
            per.entry(format!("{kind:?}").to_lowercase()).or_default().push(hr);
        }
    }
    per.into_iter()
        .map(|(name, runs)| {
            let mut r = EvalReport::from_runs(cfg.eval.k, runs, serde_json::json!({ "heuristic": name, "config": config_value(cfg) }))?;
            r.metric = format!("{} {}", name, r.metric);
            Ok((name, r))
        })
        .collect()
}

/// Copy of `cfg` with one swept parameter set.
pub fn with_axis(cfg: &PipelineConfig, axis: SweepAxis, value: f64) -> Result<PipelineConfig> {
    let mut c = cfg.clone();
    let as_count = |v: f64| {
        if v >= 0.0 && v.fract() == 0.0 {
            Ok(v as usize)
        } else {
            Err(CelpError::Config(format!("{axis} needs a nonnegative integer, got {v}")))
        }
    };
    match axis {
        SweepAxis::K => c.community.k = as_count(value)?,
        SweepAxis::Gamma => c.enhance.gamma = value,
        SweepAxis::Eta => c.enhance.eta = value,
        SweepAxis::Alpha => c.scorer.alpha = value,
        SweepAxis::Layers => c.scorer.layers = as_count(value)?,
    }
    c.validate()?;
    Ok(c)
}

/// One full pipeline per value with the same seeds. Writes `sweep.csv`
/// (and each point's artifacts) under `out/sweep-<axis>-<hash>/`.
pub fn run_sweep(
    cfg: &PipelineConfig,
    axis: SweepAxis,
    values: &[f64],
    cache: &StageCache,
    out: Option<&Path>,
) -> Result<Vec<SweepPoint>> {
    let points = crate::eval::sweep(values, |v| {
        let c = with_axis(cfg, axis, v)?;
        Ok(run_pipeline(&c, cache, out)?.report)
    })?;
    if let Some(out) = out {
        let dir = out.join(format!("sweep-{axis}-{}", cfg.hash()));
        io::emit_plot_data(&points, &dir.join("sweep.csv")).stage("write")?;
        io::write_json(&points, &dir.join("sweep.json")).stage("write")?;
    }
    Ok(points)
}
