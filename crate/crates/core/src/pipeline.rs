//! End-to-end orchestration.
//!
//! Every stage is a function from in-memory inputs to in-memory outputs that also writes its
//! artifacts under an [`ArtifactDir`]. [`run_pipeline`] chains the stages under a directory
//! named by the configuration hash; the CLI calls the same functions one stage at a time.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::features::{conventional_features, fuse_levels, graph_feature_vector, FeatureTable, GraphFeatureVector, SourceTag};
use crate::graph::{gaussian_weights, pairwise_distances, prune, WeightScheme, WeightedGraph};
use crate::graphlearn::{learn_weights, LearnConfig};
use crate::ingest::{stratified_folds, FoldAssignment, Label, LabelledImage};
use crate::ml::{cross_validate, ClassifierSpec, EvalReport, FoldModels, DEFAULT_SELECTION_K};
use crate::signals::{build_signal_matrix, NodalSignalMatrix, SignalKind};
use crate::superpixel::io::{read_multilevel, write_multilevel};
use crate::superpixel::{ensemble_rgb, hierarchy_rgb, MultiLevelMaps, SlicParams, DEFAULT_COMPACTNESS, DEFAULT_ENSEMBLE_LEVELS};

/// Multi-level graph family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    /// Superpixel ensemble graph: levels segmented independently.
    Seg,
    /// Superpixel hierarchy graph: coarser levels merged from finer ones.
    Shg,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Seg => "seg",
            Family::Shg => "shg",
        })
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "seg" => Ok(Family::Seg),
            "shg" => Ok(Family::Shg),
            _ => Err(Error::InvalidArgument(format!("unknown graph family `{s}` (expected seg or shg)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightChoice {
    Gaussian,
    Learned,
}

impl fmt::Display for WeightChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WeightChoice::Gaussian => "gaussian",
            WeightChoice::Learned => "learned",
        })
    }
}

impl FromStr for WeightChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(WeightChoice::Gaussian),
            "learned" => Ok(WeightChoice::Learned),
            _ => Err(Error::InvalidArgument(format!("unknown weight scheme `{s}` (expected gaussian or learned)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub mode: Family,
    /// Superpixel counts, in the order features are concatenated.
    pub levels: Vec<usize>,
    pub compactness: f64,
    pub exact_n: bool,
    pub weight_scheme: WeightChoice,
    pub signal_kind: SignalKind,
    pub prune_tau: f64,
    pub learn: LearnConfig,
    /// Append the 394 conventional image features after the graph levels.
    pub conventional: bool,
    pub selection_k: usize,
    pub classifiers: Vec<String>,
    pub folds: usize,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            mode: Family::Seg,
            levels: DEFAULT_ENSEMBLE_LEVELS.to_vec(),
            compactness: DEFAULT_COMPACTNESS,
            exact_n: true,
            weight_scheme: WeightChoice::Learned,
            signal_kind: SignalKind::Color,
            prune_tau: 0.0,
            learn: LearnConfig::default(),
            conventional: false,
            selection_k: DEFAULT_SELECTION_K,
            classifiers: vec!["knn".into(), "logreg".into(), "rf".into()],
            folds: 10,
            seed: 42,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if self.levels.is_empty() || self.levels.iter().any(|&n| n < 2) {
            return bad(format!("levels must be non-empty with every count >= 2, got {:?}", self.levels));
        }
        if !(self.compactness.is_finite() && self.compactness > 0.0) {
            return bad(format!("compactness must be positive, got {}", self.compactness));
        }
        if !(0.0..=1.0).contains(&self.prune_tau) {
            return bad(format!("prune_tau must lie in [0, 1], got {}", self.prune_tau));
        }
        if self.selection_k == 0 {
            return bad("selection_k must be positive".into());
        }
        if self.folds < 2 {
            return bad(format!("folds must be >= 2, got {}", self.folds));
        }
        self.learn.validate()?;
        self.classifier_specs().map(|_| ())
    }

    pub fn classifier_specs(&self) -> Result<Vec<ClassifierSpec>> {
        if self.classifiers.is_empty() {
            return Err(Error::InvalidArgument("at least one classifier is required".into()));
        }
        self.classifiers.iter().map(|c| ClassifierSpec::parse_with_seed(c, self.seed)).collect()
    }

    pub fn slic_params(&self) -> SlicParams {
        SlicParams {
            compactness: self.compactness,
            exact_n: self.exact_n,
            ..SlicParams::default()
        }
    }

    /// Compact JSON with object keys in sorted order.
    pub fn canonical_json(&self) -> String {
        serde_json::to_value(self).expect("config serializes").to_string()
    }

    /// First 8 bytes of the SHA-256 of [`Self::canonical_json`], as 16 hex digits.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical_json().as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::json(path, e))
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::json(path, e))?;
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

/// File layout of one pipeline run.
///
/// ```text
/// config.json  folds.json  features.csv  features.layout.json  report.json
/// contribution.csv  contribution.svg
/// segments/<id>/level_<l>.{png,json}
/// signals/<id>/level_<l>_<kind>.csv
/// graphs/<id>/level_<l>.{csv,json}  graphs/<id>/level_<l>_trace.csv
/// pruned/<id>/level_<l>.{csv,json}
/// graph_features/<id>/level_<l>.json
/// conventional/<id>.csv
/// fold_features/fold_<k>_{train,test}.csv
/// ```
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArtifactDir {
    root: PathBuf,
}

impl ArtifactDir {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn config(&self) -> PathBuf {
        self.root.join("config.json")
    }

    pub fn folds(&self) -> PathBuf {
        self.root.join("folds.json")
    }

    pub fn features(&self) -> PathBuf {
        self.root.join("features.csv")
    }

    pub fn report(&self) -> PathBuf {
        self.root.join("report.json")
    }

    pub fn segments(&self, id: &str) -> PathBuf {
        self.root.join("segments").join(id)
    }

    pub fn signals(&self, id: &str, level: usize, kind: SignalKind) -> PathBuf {
        self.root.join("signals").join(id).join(format!("level_{level}_{}.csv", kind.as_str()))
    }

    pub fn graph(&self, id: &str, level: usize) -> PathBuf {
        self.root.join("graphs").join(id).join(format!("level_{level}.csv"))
    }

    pub fn trace(&self, id: &str, level: usize) -> PathBuf {
        self.root.join("graphs").join(id).join(format!("level_{level}_trace.csv"))
    }

    pub fn pruned(&self, id: &str, level: usize) -> PathBuf {
        self.root.join("pruned").join(id).join(format!("level_{level}.csv"))
    }

    pub fn graph_features(&self, id: &str, level: usize) -> PathBuf {
        self.root.join("graph_features").join(id).join(format!("level_{level}.json"))
    }

    pub fn conventional(&self, id: &str) -> PathBuf {
        self.root.join("conventional").join(format!("{id}.csv"))
    }

    pub fn fold_features(&self) -> PathBuf {
        self.root.join("fold_features")
    }

    /// Number of levels segmented for `id`, read from the segment sidecars.
    pub fn level_count(&self, id: &str) -> Result<usize> {
        let dir = self.segments(id);
        let count = (0..).take_while(|l| dir.join(format!("level_{l}.json")).is_file()).count();
        if count == 0 {
            return Err(Error::InvalidArgument(format!("no segments found for `{id}` under {}", dir.display())));
        }
        Ok(count)
    }
}

fn ensure_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(dir) => fs::create_dir_all(dir).map_err(|e| Error::io(dir, e)),
        None => Ok(()),
    }
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    ensure_parent(path)?;
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::json(path, e))?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::json(path, e))
}

/// Weight matrix CSV plus a `.json` sidecar holding the weight scheme.
pub fn write_graph(g: &WeightedGraph, path: &Path) -> Result<()> {
    ensure_parent(path)?;
    g.write_csv(path)?;
    write_json(&g.scheme, &path.with_extension("json"))
}

pub fn read_graph(path: &Path) -> Result<WeightedGraph> {
    let scheme: WeightScheme = read_json(&path.with_extension("json"))?;
    WeightedGraph::read_csv(path, scheme)
}

/// Descriptor matrix rescaled column-wise to [0,1]; graphs and graph signals are built on it.
pub fn scaled_signals(s: &NodalSignalMatrix) -> NodalSignalMatrix {
    NodalSignalMatrix {
        kind: s.kind,
        x: s.minmax_scaled(),
    }
}

type PerImage<T> = Vec<Vec<T>>;

pub fn segment_stage(images: &[LabelledImage], mode: Family, levels: &[usize], params: &SlicParams, out: &ArtifactDir) -> Result<Vec<MultiLevelMaps>> {
    images
        .par_iter()
        .map(|img| {
            let run = || {
                let maps = match mode {
                    Family::Seg => ensemble_rgb(&img.pixels, levels, params)?,
                    Family::Shg => hierarchy_rgb(&img.pixels, levels, params)?,
                };
                write_multilevel(&maps, &out.segments(&img.id))?;
                Ok(maps)
            };
            run().map_err(|e: Error| e.at_stage("segment", &img.id))
        })
        .collect()
}

pub fn load_segments(ids: &[String], out: &ArtifactDir) -> Result<Vec<MultiLevelMaps>> {
    ids.par_iter()
        .map(|id| read_multilevel(&out.segments(id)).map_err(|e| e.at_stage("segment", id)))
        .collect()
}

pub fn signals_stage(images: &[LabelledImage], maps: &[MultiLevelMaps], kind: SignalKind, out: &ArtifactDir) -> Result<PerImage<NodalSignalMatrix>> {
    images
        .par_iter()
        .zip(maps)
        .map(|(img, m)| {
            let run = || {
                m.maps
                    .iter()
                    .enumerate()
                    .map(|(l, map)| {
                        let s = build_signal_matrix(&img.pixels, map, kind)?;
                        let path = out.signals(&img.id, l, kind);
                        ensure_parent(&path)?;
                        s.write_csv(&path)?;
                        Ok(s)
                    })
                    .collect::<Result<Vec<_>>>()
            };
            run().map_err(|e| e.at_stage("signals", &img.id))
        })
        .collect()
}

pub fn load_signals(ids: &[String], kind: SignalKind, out: &ArtifactDir) -> Result<PerImage<NodalSignalMatrix>> {
    ids.par_iter()
        .map(|id| {
            let run = || {
                (0..out.level_count(id)?)
                    .map(|l| NodalSignalMatrix::read_csv(&out.signals(id, l, kind), kind))
                    .collect::<Result<Vec<_>>>()
            };
            run().map_err(|e| e.at_stage("signals", id))
        })
        .collect()
}

/// Builds one graph per level from min-max scaled descriptors. With `trace` set, learned graphs
/// also write their objective trace.
pub fn graph_stage(
    ids: &[String],
    signals: &[Vec<NodalSignalMatrix>],
    choice: WeightChoice,
    learn: &LearnConfig,
    trace: bool,
    out: &ArtifactDir,
) -> Result<PerImage<WeightedGraph>> {
    ids.par_iter()
        .zip(signals)
        .map(|(id, levels)| {
            let run = || {
                levels
                    .iter()
                    .enumerate()
                    .map(|(l, s)| {
                        let d = pairwise_distances(&s.minmax_scaled());
                        let g = match choice {
                            WeightChoice::Gaussian => gaussian_weights(&d)?,
                            WeightChoice::Learned => {
                                let outcome = learn_weights(&d, learn)?;
                                if !outcome.converged {
                                    log::warn!("{id} level {l}: graph learning stopped at max_iter without converging");
                                }
                                if trace {
                                    let path = out.trace(id, l);
                                    ensure_parent(&path)?;
                                    outcome.write_trace_csv(&path)?;
                                }
                                outcome.graph
                            }
                        };
                        write_graph(&g, &out.graph(id, l))?;
                        Ok(g)
                    })
                    .collect::<Result<Vec<_>>>()
            };
            run().map_err(|e| e.at_stage("graph", id))
        })
        .collect()
}

fn load_graph_dir(ids: &[String], out: &ArtifactDir, stage: &'static str, path: impl Fn(&str, usize) -> PathBuf + Sync) -> Result<PerImage<WeightedGraph>> {
    ids.par_iter()
        .map(|id| {
            let run = || (0..out.level_count(id)?).map(|l| read_graph(&path(id, l))).collect::<Result<Vec<_>>>();
            run().map_err(|e| e.at_stage(stage, id))
        })
        .collect()
}

pub fn load_graphs(ids: &[String], out: &ArtifactDir) -> Result<PerImage<WeightedGraph>> {
    load_graph_dir(ids, out, "graph", |id, l| out.graph(id, l))
}

pub fn load_pruned(ids: &[String], out: &ArtifactDir) -> Result<PerImage<WeightedGraph>> {
    load_graph_dir(ids, out, "prune", |id, l| out.pruned(id, l))
}

pub fn prune_stage(ids: &[String], graphs: &[Vec<WeightedGraph>], tau: f64, out: &ArtifactDir) -> Result<PerImage<WeightedGraph>> {
    ids.par_iter()
        .zip(graphs)
        .map(|(id, levels)| {
            let run = || {
                levels
                    .iter()
                    .enumerate()
                    .map(|(l, g)| {
                        let p = prune(g, tau)?;
                        write_graph(&p, &out.pruned(id, l))?;
                        Ok(p)
                    })
                    .collect::<Result<Vec<_>>>()
            };
            run().map_err(|e| e.at_stage("prune", id))
        })
        .collect()
}

/// Graph features per level; the graph signal is the row mean of the scaled descriptors.
pub fn features_stage(ids: &[String], graphs: &[Vec<WeightedGraph>], signals: &[Vec<NodalSignalMatrix>], out: &ArtifactDir) -> Result<PerImage<GraphFeatureVector>> {
    ids.par_iter()
        .zip(graphs.par_iter().zip(signals))
        .map(|(id, (gs, ss))| {
            let run = || {
                if gs.len() != ss.len() {
                    return Err(Error::InvalidArgument(format!("{} graphs but {} signal matrices", gs.len(), ss.len())));
                }
                gs.iter()
                    .zip(ss)
                    .enumerate()
                    .map(|(l, (g, s))| {
                        let v = graph_feature_vector(g, &scaled_signals(s))?;
                        write_json(&v, &out.graph_features(id, l))?;
                        Ok(v)
                    })
                    .collect::<Result<Vec<_>>>()
            };
            run().map_err(|e| e.at_stage("features", id))
        })
        .collect()
}

pub fn load_graph_features(ids: &[String], out: &ArtifactDir) -> Result<PerImage<GraphFeatureVector>> {
    ids.par_iter()
        .map(|id| {
            let run = || (0..out.level_count(id)?).map(|l| read_json(&out.graph_features(id, l))).collect::<Result<Vec<_>>>();
            run().map_err(|e| e.at_stage("features", id))
        })
        .collect()
}

fn write_vector_csv(values: &[f64], path: &Path) -> Result<()> {
    ensure_parent(path)?;
    let header: Vec<String> = (0..values.len()).map(|j| format!("f{j}")).collect();
    let row: Vec<String> = values.iter().map(f64::to_string).collect();
    fs::write(path, format!("{}\n{}\n", header.join(","), row.join(","))).map_err(|e| Error::io(path, e))
}

pub fn conventional_stage(images: &[LabelledImage], out: &ArtifactDir) -> Result<Vec<Vec<f64>>> {
    images
        .par_iter()
        .map(|img| {
            let values = conventional_features(&img.pixels);
            write_vector_csv(&values, &out.conventional(&img.id)).map_err(|e| e.at_stage("conventional", &img.id))?;
            Ok(values)
        })
        .collect()
}

/// Fuses every image's level vectors (and conventional block, when given) into one table and
/// writes `features.csv`.
pub fn fuse_stage(
    labels: &[(String, Label)],
    features: &[Vec<GraphFeatureVector>],
    conventional: Option<&[Vec<f64>]>,
    levels: &[usize],
    out: &ArtifactDir,
) -> Result<FeatureTable> {
    if features.len() != labels.len() || conventional.is_some_and(|c| c.len() != labels.len()) {
        return Err(Error::InvalidArgument("per-image inputs differ in length".into()));
    }
    let mut rows = Vec::with_capacity(labels.len());
    let mut layout = None;
    for (i, (id, _)) in labels.iter().enumerate() {
        let conv = conventional.map_or(&[][..], |c| &c[i]);
        let fused = fuse_levels(&features[i], levels, conv).map_err(|e| e.at_stage("fuse", id))?;
        match &layout {
            None => layout = Some(fused.layout),
            Some(l) if *l != fused.layout => {
                return Err(Error::InvalidArgument("feature layout differs between images".into()).at_stage("fuse", id));
            }
            Some(_) => {}
        }
        rows.push(fused.values);
    }
    let table = FeatureTable::new(
        labels.iter().map(|(id, _)| id.clone()).collect(),
        labels.iter().map(|(_, l)| *l).collect(),
        rows,
        layout.unwrap_or_default(),
    )?;
    fs::create_dir_all(out.root()).map_err(|e| Error::io(out.root(), e))?;
    table.write(&out.features())?;
    Ok(table)
}

/// Writes the normalized, selected train and test rows of every fold as
/// `fold_<k>_train.csv` / `fold_<k>_test.csv`, for use with external classifiers.
pub fn export_fold_features(table: &FeatureTable, folds: &[FoldModels], dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for f in folds {
        for (name, rows) in [("train", &f.train_rows), ("test", &f.test_rows)] {
            let x = nalgebra::DMatrix::from_fn(rows.len(), table.n_features(), |i, j| table.rows[rows[i]][j]);
            let x = f.selection.apply(&f.normalizer.transform(&x)?);
            let mut text = String::from("id,label");
            for &col in &f.selection.selected {
                text.push_str(&format!(",f{col}"));
            }
            text.push('\n');
            for (i, &r) in rows.iter().enumerate() {
                text.push_str(&format!("{},{}", table.ids[r], table.labels[r].as_str()));
                for v in x.row(i).iter() {
                    text.push_str(&format!(",{v}"));
                }
                text.push('\n');
            }
            let path = dir.join(format!("fold_{}_{name}.csv", f.fold));
            fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        }
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct PipelineRun {
    pub dir: ArtifactDir,
    pub report: EvalReport,
    pub table: FeatureTable,
    pub folds: Vec<FoldModels>,
}

/// Runs every stage on `images` and writes all artifacts under `out_root/<config hash>/`.
pub fn run_pipeline(config: &PipelineConfig, images: &[LabelledImage], out_root: &Path) -> Result<PipelineRun> {
    config.validate()?;
    let specs = config.classifier_specs()?;
    let out = ArtifactDir::new(out_root.join(config.hash()));
    fs::create_dir_all(out.root()).map_err(|e| Error::io(out.root(), e))?;
    config.write_json(&out.config())?;

    let labels: Vec<(String, Label)> = images.iter().map(|i| (i.id.clone(), i.label)).collect();
    let ids: Vec<String> = labels.iter().map(|(id, _)| id.clone()).collect();
    let folds = stratified_folds(&labels, config.folds, config.seed)?;
    folds.write_json(&out.folds())?;

    log::info!("segmenting {} images into {:?} superpixels", images.len(), config.levels);
    let maps = segment_stage(images, config.mode, &config.levels, &config.slic_params(), &out)?;
    let signals = signals_stage(images, &maps, config.signal_kind, &out)?;
    drop(maps);
    log::info!("building {} graphs", config.weight_scheme);
    let graphs = graph_stage(&ids, &signals, config.weight_scheme, &config.learn, true, &out)?;
    let pruned = prune_stage(&ids, &graphs, config.prune_tau, &out)?;
    drop(graphs);
    log::info!("extracting graph features");
    let features = features_stage(&ids, &pruned, &signals, &out)?;
    let conventional = if config.conventional { Some(conventional_stage(images, &out)?) } else { None };
    let table = fuse_stage(&labels, &features, conventional.as_deref(), &config.levels, &out)?;

    log::info!("cross-validating {} features over {} folds", table.n_features(), folds.k);
    let cv = cross_validate(&table, &folds, &specs, config.selection_k).map_err(|e| e.at_stage("cv", "*"))?;
    cv.report.write_json(&out.report())?;
    export_fold_features(&table, &cv.folds, &out.fold_features())?;
    emit_contribution_report(&cv.report, out.root())?;
    Ok(PipelineRun {
        dir: out,
        report: cv.report,
        table,
        folds: cv.folds,
    })
}

/// Loads the fold file written by `ingest`, or assigns folds when it is absent.
pub fn folds_for(labels: &[(String, Label)], path: &Path, k: usize, seed: u64) -> Result<FoldAssignment> {
    if path.is_file() {
        FoldAssignment::read_json(path)
    } else {
        stratified_folds(labels, k, seed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContributionRow {
    pub source: String,
    pub count: usize,
    pub percent: f64,
}

fn source_order(tag: &str) -> (u8, usize, String) {
    match tag.parse::<SourceTag>() {
        Ok(SourceTag::Level(n)) => (0, n, String::new()),
        Ok(SourceTag::Conventional) => (1, 0, String::new()),
        Err(_) => (2, 0, tag.to_string()),
    }
}

/// Share of selected features per source, levels by increasing node count first.
pub fn contribution_table(report: &EvalReport) -> Vec<ContributionRow> {
    let total: usize = report.selection_by_source.values().sum();
    let mut rows: Vec<ContributionRow> = report
        .selection_by_source
        .iter()
        .map(|(source, &count)| ContributionRow {
            source: source.clone(),
            count,
            percent: if total == 0 { 0.0 } else { 100.0 * count as f64 / total as f64 },
        })
        .collect();
    rows.sort_by_key(|r| source_order(&r.source));
    rows
}

fn contribution_svg(rows: &[ContributionRow]) -> String {
    const BAR_H: usize = 24;
    const LEFT: usize = 130;
    const WIDTH: usize = 360;
    let height = rows.len() * (BAR_H + 8) + 40;
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{height}\" font-family=\"sans-serif\" font-size=\"12\">\n",
        LEFT + WIDTH + 80
    );
    svg.push_str("<text x=\"10\" y=\"18\" font-size=\"14\">Selected features by source (%)</text>\n");
    for (i, r) in rows.iter().enumerate() {
        let y = 30 + i * (BAR_H + 8);
        let w = r.percent / 100.0 * WIDTH as f64;
        svg.push_str(&format!(
            "<text x=\"10\" y=\"{}\">{}</text>\n<rect x=\"{LEFT}\" y=\"{y}\" width=\"{w:.2}\" height=\"{BAR_H}\" fill=\"#4c72b0\"/>\n<text x=\"{:.2}\" y=\"{}\">{:.2}% ({})</text>\n",
            y + 16,
            r.source,
            LEFT as f64 + w + 6.0,
            y + 16,
            r.percent,
            r.count
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

/// Writes `contribution.csv` (`source,count,percent`) and a bar chart `contribution.svg` into `dir`.
pub fn emit_contribution_report(report: &EvalReport, dir: &Path) -> Result<Vec<ContributionRow>> {
    let rows = contribution_table(report);
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let csv_path = dir.join("contribution.csv");
    let mut w = csv::Writer::from_path(&csv_path).map_err(|e| Error::csv(&csv_path, e))?;
    for r in &rows {
        w.serialize(r).map_err(|e| Error::csv(&csv_path, e))?;
    }
    w.flush().map_err(|e| Error::io(&csv_path, e))?;
    let svg_path = dir.join("contribution.svg");
    fs::write(&svg_path, contribution_svg(&rows)).map_err(|e| Error::io(&svg_path, e))?;
    Ok(rows)
}
