//! Command-line interface. Each subcommand runs one pipeline stage against a work directory
//! laid out as [`ArtifactDir`]; `run` chains all of them.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::features::FeatureTable;
use crate::graphlearn::LearnConfig;
use crate::ingest::{load_corpus_root, read_labels, stratified_folds, write_corpus, FoldAssignment, Label};
use crate::ml::{cross_validate, ClassifierSpec, EvalReport, DEFAULT_SELECTION_K};
use crate::pipeline::{
    conventional_stage, emit_contribution_report, export_fold_features, features_stage, fuse_stage, graph_stage, load_graph_features,
    load_graphs, load_pruned, load_segments, load_signals, prune_stage, run_pipeline, segment_stage, signals_stage, ArtifactDir, Family,
    PipelineConfig, WeightChoice,
};
use crate::signals::SignalKind;
use crate::superpixel::{SlicParams, DEFAULT_COMPACTNESS};
use crate::synth::synthetic_corpus;

#[derive(Debug, Parser)]
#[command(name = "lesiongraph", version, about = "Multi-level superpixel graph features for melanoma detection")]
pub struct Cli {
    /// Worker threads for per-image work (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate a corpus and write a stratified fold assignment.
    Ingest(IngestArgs),
    /// Segment every image into superpixels at each level.
    Segment(SegmentArgs),
    /// Compute nodal descriptors for every level.
    Signals(SignalsArgs),
    /// Build Gaussian-weighted graphs.
    Graph(StageArgs),
    /// Learn graph weights by majorization-minimization.
    Learn(LearnArgs),
    /// Remove the weakest fraction of edges.
    Prune(PruneArgs),
    /// Extract vertex-domain and spectral graph features.
    Features(FeaturesArgs),
    /// Concatenate level features (and conventional features) into one table.
    Fuse(FuseArgs),
    /// Cross-validated selection and classification.
    Cv(CvArgs),
    /// Run every stage from a config file and/or flags.
    Run(RunArgs),
    /// Feature-contribution table and chart from a report.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct CorpusArgs {
    /// Corpus root containing `labels.csv` and `images/`.
    #[arg(long)]
    pub root: PathBuf,
    /// Directory receiving stage artifacts.
    #[arg(long, default_value = "work")]
    pub work: PathBuf,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long)]
    pub root: PathBuf,
    #[arg(long, default_value_t = 10)]
    pub folds: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value = "folds.json")]
    pub out: PathBuf,
    /// Generate a synthetic corpus of this many images into `--root` first.
    #[arg(long)]
    pub synthetic: Option<usize>,
    /// Side length of synthetic images.
    #[arg(long, default_value_t = 64)]
    pub size: u32,
}

#[derive(Debug, Args)]
pub struct SegmentArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[arg(long, default_value = "seg")]
    pub mode: Family,
    #[arg(long, value_delimiter = ',', default_values_t = [20, 40, 60, 80, 100])]
    pub levels: Vec<usize>,
    #[arg(long, default_value_t = DEFAULT_COMPACTNESS)]
    pub compactness: f64,
    /// Enforce exactly the requested superpixel count.
    #[arg(long, default_value_t = true, num_args = 0..=1, default_missing_value = "true", action = clap::ArgAction::Set)]
    pub exact_n: bool,
}

#[derive(Debug, Args)]
pub struct SignalsArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[arg(long, default_value = "color")]
    pub kind: SignalKind,
}

#[derive(Debug, Args)]
pub struct StageArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[arg(long, default_value = "color")]
    pub kind: SignalKind,
}

#[derive(Debug, Args)]
pub struct LearnArgs {
    #[command(flatten)]
    pub stage: StageArgs,
    #[arg(long, default_value_t = 1.0)]
    pub delta: f64,
    #[arg(long, default_value_t = 0.5)]
    pub gamma: f64,
    #[arg(long, default_value_t = 1e-6)]
    pub eps: f64,
    #[arg(long, default_value_t = 500)]
    pub max_iter: usize,
    /// Write the per-iteration objective of every graph as CSV.
    #[arg(long)]
    pub trace: bool,
}

#[derive(Debug, Args)]
pub struct PruneArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[arg(long, default_value_t = 0.0)]
    pub tau: f64,
}

#[derive(Debug, Args)]
pub struct FeaturesArgs {
    #[command(flatten)]
    pub stage: StageArgs,
    /// Read graphs from `graphs/` instead of `pruned/`.
    #[arg(long)]
    pub unpruned: bool,
}

#[derive(Debug, Args)]
pub struct FuseArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[arg(long, value_delimiter = ',', default_values_t = [20, 40, 60, 80, 100])]
    pub levels: Vec<usize>,
    /// Append conventional image features.
    #[arg(long)]
    pub conventional: bool,
    /// Output table (default `<work>/features.csv`).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CvArgs {
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long)]
    pub folds: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "knn,logreg,rf")]
    pub classifiers: Vec<String>,
    #[arg(long, default_value_t = DEFAULT_SELECTION_K)]
    pub k_select: usize,
    #[arg(long, default_value = "report.json")]
    pub report: PathBuf,
    /// Random forest seed.
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Write normalized, selected train/test rows of every fold here.
    #[arg(long)]
    pub export_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub root: PathBuf,
    /// Runs are written to `<out>/<config hash>/`.
    #[arg(long, default_value = "runs")]
    pub out: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub mode: Option<Family>,
    #[arg(long, value_delimiter = ',')]
    pub levels: Option<Vec<usize>>,
    #[arg(long)]
    pub weights: Option<WeightChoice>,
    #[arg(long)]
    pub kind: Option<SignalKind>,
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub conventional: Option<bool>,
    #[arg(long)]
    pub k_select: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub classifiers: Option<Vec<String>>,
    #[arg(long)]
    pub folds: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long, default_value = "report.json")]
    pub report: PathBuf,
    /// Directory for `contribution.csv` and `contribution.svg`.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

impl RunArgs {
    /// Config file (or defaults) with flag overrides applied.
    pub fn config(&self) -> Result<PipelineConfig> {
        let mut c = match &self.config {
            Some(path) => PipelineConfig::read_json(path)?,
            None => PipelineConfig::default(),
        };
        if let Some(v) = self.mode {
            c.mode = v;
        }
        if let Some(v) = &self.levels {
            c.levels = v.clone();
        }
        if let Some(v) = self.weights {
            c.weight_scheme = v;
        }
        if let Some(v) = self.kind {
            c.signal_kind = v;
        }
        if let Some(v) = self.tau {
            c.prune_tau = v;
        }
        if let Some(v) = self.conventional {
            c.conventional = v;
        }
        if let Some(v) = self.k_select {
            c.selection_k = v;
        }
        if let Some(v) = &self.classifiers {
            c.classifiers = v.clone();
        }
        if let Some(v) = self.folds {
            c.folds = v;
        }
        if let Some(v) = self.seed {
            c.seed = v;
        }
        c.validate()?;
        Ok(c)
    }
}

/// Labels sorted by id, matching the order images are loaded in.
fn corpus_labels(root: &Path) -> Result<Vec<(String, Label)>> {
    let mut labels = read_labels(&root.join("labels.csv"))?;
    labels.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(labels)
}

fn ids_of(labels: &[(String, Label)]) -> Vec<String> {
    labels.iter().map(|(id, _)| id.clone()).collect()
}

pub fn execute(cli: Cli) -> Result<()> {
    if let Some(jobs) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| Error::InvalidArgument(format!("cannot size worker pool: {e}")))?;
    }
    match cli.command {
        Command::Ingest(a) => {
            if let Some(n) = a.synthetic {
                write_corpus(&a.root, &synthetic_corpus(n, a.size, a.seed)?)?;
            }
            let images = load_corpus_root(&a.root)?;
            let labels: Vec<(String, Label)> = images.iter().map(|i| (i.id.clone(), i.label)).collect();
            let folds = stratified_folds(&labels, a.folds, a.seed)?;
            folds.write_json(&a.out)?;
            let positives = labels.iter().filter(|l| l.1.is_positive()).count();
            println!("{} images ({positives} melanoma), {} folds -> {}", labels.len(), a.folds, a.out.display());
        }
        Command::Segment(a) => {
            let images = load_corpus_root(&a.corpus.root)?;
            let params = SlicParams {
                compactness: a.compactness,
                exact_n: a.exact_n,
                ..SlicParams::default()
            };
            segment_stage(&images, a.mode, &a.levels, &params, &ArtifactDir::new(&a.corpus.work))?;
        }
        Command::Signals(a) => {
            let images = load_corpus_root(&a.corpus.root)?;
            let out = ArtifactDir::new(&a.corpus.work);
            let maps = load_segments(&ids_of(&corpus_labels(&a.corpus.root)?), &out)?;
            signals_stage(&images, &maps, a.kind, &out)?;
        }
        Command::Graph(a) => {
            let ids = ids_of(&corpus_labels(&a.corpus.root)?);
            let out = ArtifactDir::new(&a.corpus.work);
            let signals = load_signals(&ids, a.kind, &out)?;
            graph_stage(&ids, &signals, WeightChoice::Gaussian, &LearnConfig::default(), false, &out)?;
        }
        Command::Learn(a) => {
            let ids = ids_of(&corpus_labels(&a.stage.corpus.root)?);
            let out = ArtifactDir::new(&a.stage.corpus.work);
            let signals = load_signals(&ids, a.stage.kind, &out)?;
            let cfg = LearnConfig {
                delta: a.delta,
                gamma: a.gamma,
                epsilon: a.eps,
                max_iter: a.max_iter,
            };
            graph_stage(&ids, &signals, WeightChoice::Learned, &cfg, a.trace, &out)?;
        }
        Command::Prune(a) => {
            let ids = ids_of(&corpus_labels(&a.corpus.root)?);
            let out = ArtifactDir::new(&a.corpus.work);
            prune_stage(&ids, &load_graphs(&ids, &out)?, a.tau, &out)?;
        }
        Command::Features(a) => {
            let ids = ids_of(&corpus_labels(&a.stage.corpus.root)?);
            let out = ArtifactDir::new(&a.stage.corpus.work);
            let graphs = if a.unpruned { load_graphs(&ids, &out)? } else { load_pruned(&ids, &out)? };
            features_stage(&ids, &graphs, &load_signals(&ids, a.stage.kind, &out)?, &out)?;
        }
        Command::Fuse(a) => {
            let labels = corpus_labels(&a.corpus.root)?;
            let out = ArtifactDir::new(&a.corpus.work);
            let features = load_graph_features(&ids_of(&labels), &out)?;
            let conventional = if a.conventional {
                Some(conventional_stage(&load_corpus_root(&a.corpus.root)?, &out)?)
            } else {
                None
            };
            let table = fuse_stage(&labels, &features, conventional.as_deref(), &a.levels, &out)?;
            if let Some(path) = &a.out {
                table.write(path)?;
            }
            println!("{} images x {} features", table.ids.len(), table.n_features());
        }
        Command::Cv(a) => {
            let table = FeatureTable::read(&a.features)?;
            let folds = FoldAssignment::read_json(&a.folds)?;
            let specs = a
                .classifiers
                .iter()
                .map(|c| ClassifierSpec::parse_with_seed(c, a.seed))
                .collect::<Result<Vec<_>>>()?;
            let run = cross_validate(&table, &folds, &specs, a.k_select)?;
            run.report.write_json(&a.report)?;
            if let Some(dir) = &a.export_dir {
                export_fold_features(&table, &run.folds, dir)?;
            }
            print_summary(&run.report);
        }
        Command::Run(a) => {
            let config = a.config()?;
            let images = load_corpus_root(&a.root)?;
            let run = run_pipeline(&config, &images, &a.out)?;
            println!("artifacts in {}", run.dir.root().display());
            print_summary(&run.report);
        }
        Command::Report(a) => {
            let report = EvalReport::read_json(&a.report)?;
            for row in emit_contribution_report(&report, &a.out)? {
                println!("{:>14} {:>6} {:7.2}%", row.source, row.count, row.percent);
            }
        }
    }
    Ok(())
}

fn print_summary(report: &EvalReport) {
    println!("{:>8} {:>7} {:>7} {:>7} {:>7}", "model", "AC", "SPEC", "SENS", "AUC");
    for (name, c) in &report.classifiers {
        let a = &c.aggregate;
        println!("{name:>8} {:7.4} {:7.4} {:7.4} {:7.4}", a.ac, a.spec, a.sens, a.auc);
    }
}
