use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use celp_core::centrality::{centrality, community_centers, CentralityKind};
use celp_core::community::{fluidc_with_seeding, Seeding, DEFAULT_MAX_SWEEPS};
use celp_core::config::PipelineConfig;
use celp_core::encoding::structural_encoding;
use celp_core::eval::SweepAxis;
use celp_core::features::{PairFeatureConfig, PairFeaturizer};
use celp_core::graph::Pair;
use celp_core::io;
use celp_core::pipeline::{self, StageCache};
use celp_core::sbm::{generate_sbm, SbmSpec};
use celp_core::scorer::Checkpoint;

#[derive(Parser)]
#[command(name = "celp", version, about = "Community-enhanced link prediction")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load an edge list (and features), relabel ids, write a clean copy.
    Ingest {
        #[arg(long)]
        edges: PathBuf,
        #[arg(long)]
        features: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sample a stochastic block model graph.
    Sbm {
        #[arg(long, default_value_t = 2)]
        blocks: usize,
        #[arg(long, default_value_t = 100)]
        block_size: usize,
        #[arg(long, default_value_t = 0.3)]
        p_in: f64,
        #[arg(long, default_value_t = 0.01)]
        p_out: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Fraction of intra-block edges to hold out.
        #[arg(long, default_value_t = 0.0)]
        delete_intra: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fluid communities, centrality scores, centers and structural encoding.
    Communities {
        #[arg(long)]
        edges: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_MAX_SWEEPS)]
        max_sweeps: usize,
        #[arg(long, default_value = "spread")]
        seeding: Seeding,
        #[arg(long, default_value = "pagerank")]
        centrality: CentralityKind,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run through the enhancement stage and write the plan.
    Enhance(StageArgs),
    /// Dump pair features for the pairs listed in a file.
    Featurize {
        #[arg(long)]
        edges: PathBuf,
        /// `node_id,community_id` CSV.
        #[arg(long)]
        partition: PathBuf,
        /// Pairs to featurize, edge-list format.
        #[arg(long)]
        pairs: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1024)]
        sketch_dim: usize,
        /// Mask pairs that are edges of the graph.
        #[arg(long)]
        mask: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the final scorer for one seed and write a checkpoint.
    Train(StageArgs),
    /// Heuristic baselines (CN/AA/RA) on the configured splits.
    Eval(ConfigArgs),
    /// Full pipeline once per value of one parameter.
    Sweep {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        axis: SweepAxis,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
    },
    /// Full pipeline over every configured seed.
    Pipeline(ConfigArgs),
}

#[derive(Args)]
struct ConfigArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a config key, e.g. `--set enhance.gamma=0.1`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[arg(long, default_value = "runs")]
    out: PathBuf,
    /// Do not reuse or store cached stage artifacts.
    #[arg(long)]
    no_cache: bool,
}

#[derive(Args)]
struct StageArgs {
    #[command(flatten)]
    cfg: ConfigArgs,
    /// Seed for this run; defaults to the first configured seed.
    #[arg(long)]
    seed: Option<u64>,
}

impl ConfigArgs {
    fn load(&self) -> Result<PipelineConfig> {
        let cfg = PipelineConfig::load_with_overrides(self.config.as_deref(), &self.overrides)
            .context("loading config")?;
        eprintln!("# effective config (hash {})\n{}", cfg.hash(), cfg.to_toml());
        Ok(cfg)
    }

    fn cache(&self) -> StageCache {
        if self.no_cache {
            StageCache::in_memory()
        } else {
            StageCache::on_disk(self.out.join("cache"))
        }
    }
}

fn read_pairs(path: &Path, n: usize) -> Result<Vec<Pair>> {
    io::read_edge_list(path)?
        .into_iter()
        .map(|(a, b)| {
            let (u, v) = (a as usize, b as usize);
            if u >= n || v >= n {
                bail!("pair ({u}, {v}) out of range for {n} nodes");
            }
            Ok((u, v))
        })
        .collect()
}

fn run(cli: Cli) -> Result<()> {
    match cli.cmd {
        Command::Ingest { edges, features, out } => {
            let ds = io::load_dataset(&edges, features.as_deref()).context("stage `ingest`")?;
            io::write_edge_list(&ds.graph, &out.join("edges.txt"))?;
            io::write_relabel_csv(&ds.external_ids, &out.join("relabel.csv"))?;
            if let Some(x) = ds.graph.features() {
                io::write_json(x, &out.join("features.json"))?;
            }
            println!("nodes {} edges {}", ds.graph.n(), ds.graph.edge_count());
        }
        Command::Sbm { blocks, block_size, p_in, p_out, seed, delete_intra, out } => {
            let mut spec = SbmSpec::balanced(blocks, block_size, p_in, p_out, seed);
            spec.delete_intra = delete_intra;
            let s = generate_sbm(&spec).context("stage `sbm`")?;
            io::write_edge_list(&s.graph, &out.join("edges.txt"))?;
            let labels = celp_core::community::CommunityPartition::from_assignment(blocks, s.labels)?;
            io::write_partition_csv(&labels, &out.join("labels.csv"))?;
            if !s.deleted.is_empty() {
                let g = celp_core::graph::build_graph(&s.deleted, s.graph.n(), None)?;
                io::write_edge_list(&g, &out.join("deleted.txt"))?;
            }
            io::write_json(&spec, &out.join("spec.json"))?;
            println!("nodes {} edges {} deleted {}", s.graph.n(), s.graph.edge_count(), s.deleted.len());
        }
        Command::Communities { edges, k, seed, max_sweeps, seeding, centrality: kind, out } => {
            let g = io::load_dataset(&edges, None).context("stage `load`")?.graph;
            let p = fluidc_with_seeding(&g, k, max_sweeps, seed, seeding).context("stage `communities`")?;
            let scores = centrality(&g, kind).context("stage `centrality`")?;
            let p = community_centers(&g, &p, &scores).context("stage `centrality`")?;
            let centers = p.centers.clone().expect("filled");
            let enc = structural_encoding(&g, &centers).context("stage `encoding`")?;
            io::write_partition_csv(&p, &out.join("partition.csv"))?;
            io::write_scores_csv(&scores, &out.join("scores.csv"))?;
            io::write_encoding_csv(&enc, &out.join("encoding.csv"))?;
            io::write_json(&centers, &out.join("centers.json"))?;
            println!("k {} centers {:?}", p.k, centers);
        }
        Command::Enhance(args) => {
            let cfg = args.cfg.load()?;
            let seed = args.seed.unwrap_or(cfg.seeds[0]);
            let cache = args.cfg.cache();
            let prep = pipeline::prepare(&cfg, seed, &cache)?;
            let enh = pipeline::enhance(&cfg, &prep, &cache)?;
            let dir = args.cfg.out.join(format!("{}-s{seed}", cfg.hash()));
            io::write_json(&enh.plan, &dir.join("plan.json"))?;
            io::write_edge_list(&enh.graph, &dir.join("enhanced_edges.txt"))?;
            println!(
                "candidates {} added {} removed {} -> {}",
                enh.plan.cand.len(),
                enh.plan.added.len(),
                enh.plan.removed.len(),
                dir.join("plan.json").display()
            );
        }
        Command::Featurize { edges, partition, pairs, seed, sketch_dim, mask, out } => {
            let g = io::load_dataset(&edges, None).context("stage `load`")?.graph;
            let p = io::read_partition_csv(&partition)?;
            let scores = centrality(&g, CentralityKind::Pagerank).context("stage `centrality`")?;
            let p = community_centers(&g, &p, &scores).context("stage `centrality`")?;
            let fcfg = PairFeatureConfig { sketch_dim, ..PairFeatureConfig::default() };
            let fz = PairFeaturizer::new(&g, &p, &fcfg, seed).context("stage `featurize`")?;
            let pairs = read_pairs(&pairs, g.n())?;
            let rows = pairs
                .iter()
                .map(|&(u, v)| Ok(((u, v), fz.pair_representation(u, v, None, mask)?)))
                .collect::<celp_core::Result<Vec<_>>>()
                .context("stage `featurize`")?;
            io::write_pair_features_csv(&rows, &out)?;
            println!("{} pairs x {} columns -> {}", rows.len(), fcfg.feature_len(), out.display());
        }
        Command::Train(args) => {
            let cfg = args.cfg.load()?;
            let seed = args.seed.unwrap_or(cfg.seeds[0]);
            let cache = args.cfg.cache();
            let prep = pipeline::prepare(&cfg, seed, &cache)?;
            let enh = pipeline::enhance(&cfg, &prep, &cache)?;
            let trained = pipeline::train_final(&cfg, &prep, &enh)?;
            let dir = args.cfg.out.join(format!("{}-s{seed}", cfg.hash()));
            let ckpt = Checkpoint::new(&cfg.scorer, &cfg.features, &trained.model.model);
            io::write_json(&ckpt, &dir.join("checkpoint.json"))?;
            io::write_json(&trained.model.report, &dir.join("train_report.json"))?;
            println!(
                "best epoch {} valid HR@{} {:?} -> {}",
                trained.model.report.best_epoch,
                cfg.scorer.eval_k,
                trained.model.report.best_valid_hr,
                dir.join("checkpoint.json").display()
            );
        }
        Command::Eval(args) => {
            let cfg = args.load()?;
            let reports = pipeline::evaluate_heuristics(&cfg, &args.cache())?;
            let dir = args.out.join(format!("{}-heuristics", cfg.hash()));
            for (name, r) in &reports {
                io::write_json(r, &dir.join(format!("report_{name}.json")))?;
                println!("{:<10} {:.4} +- {:.4}", r.metric, r.mean, r.std);
            }
        }
        Command::Sweep { cfg: args, axis, values } => {
            let cfg = args.load()?;
            let points = pipeline::run_sweep(&cfg, axis, &values, &args.cache(), Some(&args.out))?;
            println!("{axis},mean,std");
            for p in &points {
                println!("{},{:.4},{:.4}", p.value, p.report.mean, p.report.std);
            }
        }
        Command::Pipeline(args) => {
            let cfg = args.load()?;
            let out = pipeline::run_pipeline(&cfg, &args.cache(), Some(&args.out))?;
            println!("celp {} {:.4} +- {:.4}", out.report.metric, out.report.mean, out.report.std);
            for r in out.baselines.values() {
                println!("{} {:.4} +- {:.4}", r.metric, r.mean, r.std);
            }
            println!("report: {}", pipeline::report_dir(&cfg, &args.out).join("report.json").display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
