//! Graph features (vertex-domain and spectral), conventional image features, and fusion.

mod conventional;
pub mod metrics;
pub mod spectral;

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use nalgebra::DVector;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::ingest::Label;
use crate::signals::{NodalSignalMatrix, SignalKind};

pub use conventional::{conventional_features, CONVENTIONAL_DIM};
pub use metrics::{global_metrics, graph_metrics, local_metrics, GlobalMetrics, GLOBAL_METRIC_NAMES, LOCAL_METRIC_NAMES};
pub use spectral::{gft, spectral_features, FourierBasis, SPECTRAL_FEATURE_NAMES};

/// Vertex-domain feature count `6n + 5`.
pub fn f1_len(n: usize) -> usize {
    6 * n + 5
}

/// Spectral feature count `n + 4`.
pub fn f2_len(n: usize) -> usize {
    n + 4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphFeatureVector {
    pub values: Vec<f64>,
    pub level_n: usize,
    pub kind: SignalKind,
    pub f1_len: usize,
    pub f2_len: usize,
}

impl GraphFeatureVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// `[local metrics row-major | global metrics | GFT of the scalar signal | spectral features]`.
///
/// The scalar graph signal is the per-node mean of the descriptor rows, so callers choose the
/// scaling by the matrix they pass in.
pub fn graph_feature_vector(g: &WeightedGraph, signals: &NodalSignalMatrix) -> Result<GraphFeatureVector> {
    let n = g.n();
    if signals.n() != n {
        return Err(Error::InvalidArgument(format!(
            "signal matrix has {} rows for a graph with {n} nodes",
            signals.n()
        )));
    }
    let (local, global) = graph_metrics(g);
    let mut values = Vec::with_capacity(f1_len(n) + f2_len(n));
    for i in 0..n {
        values.extend(local.row(i).iter());
    }
    values.extend(global.to_array());
    let coeffs = gft(g, &DVector::from_vec(signals.row_means()))?;
    values.extend(coeffs.iter());
    values.extend(spectral_features(&coeffs));
    if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(format!("non-finite graph feature at position {bad}")));
    }
    Ok(GraphFeatureVector {
        values,
        level_n: n,
        kind: signals.kind,
        f1_len: f1_len(n),
        f2_len: f2_len(n),
    })
}

/// Provenance of a block of fused features.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SourceTag {
    Level(usize),
    Conventional,
}

impl fmt::Display for SourceTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SourceTag::Level(n) => write!(f, "level-{n}"),
            SourceTag::Conventional => f.write_str("conventional"),
        }
    }
}

impl FromStr for SourceTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "conventional" {
            return Ok(SourceTag::Conventional);
        }
        s.strip_prefix("level-")
            .and_then(|n| n.parse().ok())
            .map(SourceTag::Level)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown source tag `{s}`")))
    }
}

impl Serialize for SourceTag {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for SourceTag {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayoutEntry {
    pub source: SourceTag,
    pub offset: usize,
    pub len: usize,
}

/// Column ranges of a fused vector, in order and without gaps.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FeatureLayout {
    pub entries: Vec<LayoutEntry>,
}

impl FeatureLayout {
    pub fn total_len(&self) -> usize {
        self.entries.last().map_or(0, |e| e.offset + e.len)
    }

    /// Source of column `col`.
    pub fn source_of(&self, col: usize) -> Option<SourceTag> {
        self.entries.iter().find(|e| col >= e.offset && col < e.offset + e.len).map(|e| e.source)
    }

    pub fn push(&mut self, source: SourceTag, len: usize) {
        let offset = self.total_len();
        self.entries.push(LayoutEntry { source, offset, len });
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FusedFeatureVector {
    pub values: Vec<f64>,
    pub layout: FeatureLayout,
}

/// Concatenates per-level vectors in configured order, then the conventional block (omitted
/// when empty).
pub fn fuse_levels(per_level: &[GraphFeatureVector], levels: &[usize], conventional: &[f64]) -> Result<FusedFeatureVector> {
    let got: Vec<usize> = per_level.iter().map(|v| v.level_n).collect();
    if got != levels {
        return Err(Error::InvalidArgument(format!("feature levels {got:?} do not match configured levels {levels:?}")));
    }
    let mut values = Vec::new();
    let mut layout = FeatureLayout::default();
    for v in per_level {
        if v.values.len() != v.f1_len + v.f2_len {
            return Err(Error::InvalidArgument(format!("level {} vector has inconsistent length", v.level_n)));
        }
        layout.push(SourceTag::Level(v.level_n), v.values.len());
        values.extend(&v.values);
    }
    if !conventional.is_empty() {
        layout.push(SourceTag::Conventional, conventional.len());
        values.extend(conventional);
    }
    Ok(FusedFeatureVector { values, layout })
}

/// Per-image fused features for a corpus, sharing one layout.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    pub ids: Vec<String>,
    pub labels: Vec<Label>,
    pub rows: Vec<Vec<f64>>,
    pub layout: FeatureLayout,
}

impl FeatureTable {
    pub fn new(ids: Vec<String>, labels: Vec<Label>, rows: Vec<Vec<f64>>, layout: FeatureLayout) -> Result<Self> {
        if ids.len() != labels.len() || ids.len() != rows.len() {
            return Err(Error::InvalidArgument("ids, labels and rows differ in length".into()));
        }
        let width = layout.total_len();
        if let Some(i) = rows.iter().position(|r| r.len() != width) {
            return Err(Error::InvalidArgument(format!(
                "row `{}` has {} features, layout has {width}",
                ids[i],
                rows[i].len()
            )));
        }
        Ok(Self { ids, labels, rows, layout })
    }

    pub fn n_features(&self) -> usize {
        self.layout.total_len()
    }

    pub fn layout_path(csv_path: &Path) -> PathBuf {
        csv_path.with_extension("layout.json")
    }

    /// Writes `id,label,f0..` and the layout sidecar next to it.
    pub fn write(&self, path: &Path) -> Result<()> {
        let mut text = String::from("id,label");
        for j in 0..self.n_features() {
            text.push_str(&format!(",f{j}"));
        }
        text.push('\n');
        for ((id, label), row) in self.ids.iter().zip(&self.labels).zip(&self.rows) {
            text.push_str(id);
            text.push(',');
            text.push_str(label.as_str());
            for v in row {
                text.push_str(&format!(",{v}"));
            }
            text.push('\n');
        }
        fs::write(path, text).map_err(|e| Error::io(path, e))?;
        let layout_path = Self::layout_path(path);
        let json = serde_json::to_string_pretty(&self.layout).map_err(|e| Error::json(&layout_path, e))?;
        fs::write(&layout_path, json).map_err(|e| Error::io(&layout_path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let layout_path = Self::layout_path(path);
        let layout: FeatureLayout = {
            let text = fs::read_to_string(&layout_path).map_err(|e| Error::io(&layout_path, e))?;
            serde_json::from_str(&text).map_err(|e| Error::json(&layout_path, e))?
        };
        let mut reader = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
        let (mut ids, mut labels, mut rows) = (Vec::new(), Vec::new(), Vec::new());
        for record in reader.records() {
            let record = record.map_err(|e| Error::csv(path, e))?;
            let id = record.get(0).unwrap_or_default().to_string();
            let label: Label = record.get(1).unwrap_or_default().parse().map_err(|_| Error::UnknownLabel {
                id: id.clone(),
                token: record.get(1).unwrap_or_default().to_string(),
            })?;
            let row = record
                .iter()
                .skip(2)
                .map(|v| v.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::csv(path, format!("row `{id}`: {e}")))?;
            ids.push(id);
            labels.push(label);
            rows.push(row);
        }
        Self::new(ids, labels, rows, layout)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::WeightScheme;
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_case(n: usize, seed: u64) -> (WeightedGraph, NodalSignalMatrix) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w: Vec<f64> = (0..n * (n - 1) / 2).map(|_| rng.gen_range(0.01..1.0)).collect();
        let g = WeightedGraph::from_edge_weights(n, &w, WeightScheme::Learned).unwrap();
        let x = DMatrix::from_fn(n, 9, |_, _| rng.gen_range(0.0..1.0));
        (g, NodalSignalMatrix { kind: SignalKind::Color, x })
    }

    #[test]
    fn feature_counts() {
        for (n, expected) in [(5, 44), (20, 149), (100, 709)] {
            let (g, x) = random_case(n, n as u64);
            let v = graph_feature_vector(&g, &x).unwrap();
            assert_eq!(v.len(), expected);
            assert_eq!(v.f1_len + v.f2_len, expected);
        }
    }

    #[test]
    fn mismatched_signal_rejected() {
        let (g, _) = random_case(6, 1);
        let (_, x) = random_case(7, 1);
        assert!(graph_feature_vector(&g, &x).is_err());
    }

    #[test]
    fn zero_pruning_gives_identical_features() {
        let (g, x) = random_case(12, 3);
        let pruned = crate::graph::prune(&g, 0.0).unwrap();
        let a = graph_feature_vector(&g, &x).unwrap();
        let b = graph_feature_vector(&pruned, &x).unwrap();
        assert_eq!(a.values, b.values);
    }

    fn dummy(n: usize) -> GraphFeatureVector {
        GraphFeatureVector {
            values: vec![0.0; f1_len(n) + f2_len(n)],
            level_n: n,
            kind: SignalKind::Color,
            f1_len: f1_len(n),
            f2_len: f2_len(n),
        }
    }

    #[test]
    fn fusion_lengths_and_layout() {
        let levels = [20, 40, 60, 80, 100];
        let per: Vec<_> = levels.iter().map(|&n| dummy(n)).collect();
        let fused = fuse_levels(&per, &levels, &vec![1.0; CONVENTIONAL_DIM]).unwrap();
        let expected: usize = levels.iter().map(|&n| (6 * n + 5) + (n + 4)).sum::<usize>() + 394;
        assert_eq!(expected, 149 + 289 + 429 + 569 + 709 + 394);
        assert_eq!(fused.values.len(), expected);
        let mut next = 0;
        for e in &fused.layout.entries {
            assert_eq!(e.offset, next);
            next += e.len;
        }
        assert_eq!(next, expected);
        assert_eq!(fused.layout.source_of(0), Some(SourceTag::Level(20)));
        assert_eq!(fused.layout.source_of(expected - 1), Some(SourceTag::Conventional));

        let single = fuse_levels(&[dummy(20)], &[20], &[]).unwrap();
        assert_eq!(single.values.len(), 149);
        assert_eq!(single.layout.entries.len(), 1);

        assert!(fuse_levels(&[dummy(20)], &[40], &[]).is_err());
    }

    #[test]
    fn source_tag_strings() {
        assert_eq!(SourceTag::Level(40).to_string(), "level-40");
        assert_eq!("level-40".parse::<SourceTag>().unwrap(), SourceTag::Level(40));
        assert_eq!("conventional".parse::<SourceTag>().unwrap(), SourceTag::Conventional);
        assert!("level-x".parse::<SourceTag>().is_err());
        assert_eq!(serde_json::to_string(&SourceTag::Level(5)).unwrap(), "\"level-5\"");
    }

    #[test]
    fn table_round_trip() {
        let layout = fuse_levels(&[dummy(2)], &[2], &[0.5, 0.25]).unwrap().layout;
        let rows = vec![vec![0.1; 25], vec![1.0 / 3.0; 25]];
        let table = FeatureTable::new(vec!["a".into(), "b".into()], vec![Label::Melanoma, Label::Benign], rows, layout).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("features.csv");
        table.write(&path).unwrap();
        assert!(FeatureTable::layout_path(&path).exists());
        assert_eq!(FeatureTable::read(&path).unwrap(), table);
    }
}
