//! Stratified k-fold evaluation with train-only normalization and selection.

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::classifiers::ClassifierSpec;
use super::evaluate::{evaluate, Confusion, Metrics};
use super::normalize::NormalizationModel;
use super::select::{l1_select, SelectionModel};
use crate::error::{Error, Result};
use crate::features::FeatureTable;
use crate::ingest::FoldAssignment;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldMetrics {
    pub fold: usize,
    pub n_test: usize,
    #[serde(flatten)]
    pub metrics: Metrics,
    /// Set when the held-out fold holds a single class and AUC is undefined.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub auc_error: Option<String>,
}

/// Test-size-weighted means over folds; AUC over the folds where it is defined.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub ac: f64,
    pub spec: f64,
    pub sens: f64,
    pub auc: f64,
    pub auc_folds: usize,
    pub confusion: Confusion,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierReport {
    pub spec: ClassifierSpec,
    pub per_fold: Vec<FoldMetrics>,
    pub aggregate: Aggregate,
    /// Held-out score of every image.
    pub scores: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub k_folds: usize,
    pub k_select: usize,
    pub n_features: usize,
    pub classifiers: BTreeMap<String, ClassifierReport>,
    /// How often columns from each source were selected, summed over folds.
    pub selection_by_source: BTreeMap<String, usize>,
}

impl EvalReport {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::json("<report>", e))
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::json(path, e))?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::json(path, e))
    }
}

/// Models fitted inside one fold, kept for auditing.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldModels {
    pub fold: usize,
    pub train_rows: Vec<usize>,
    pub test_rows: Vec<usize>,
    pub normalizer: NormalizationModel,
    pub selection: SelectionModel,
}

#[derive(Debug, Clone)]
pub struct CvRun {
    pub report: EvalReport,
    pub folds: Vec<FoldModels>,
}

pub(crate) fn rows_matrix(rows: &[Vec<f64>], idx: &[usize]) -> DMatrix<f64> {
    let p = rows.first().map_or(0, Vec::len);
    DMatrix::from_fn(idx.len(), p, |i, j| rows[idx[i]][j])
}

/// Normalizer and selector fitted on training rows only.
pub fn fit_fold_models(x_train: &DMatrix<f64>, y_train: &[bool], k_select: usize) -> Result<(NormalizationModel, SelectionModel)> {
    let normalizer = NormalizationModel::fit(x_train)?;
    let scaled = normalizer.transform(x_train)?;
    let selection = l1_select(&scaled, y_train, k_select)?;
    Ok((normalizer, selection))
}

struct FoldOutcome {
    models: FoldModels,
    scores: Vec<Vec<f64>>,
}

pub fn cross_validate(table: &FeatureTable, folds: &FoldAssignment, classifiers: &[ClassifierSpec], k_select: usize) -> Result<CvRun> {
    if classifiers.is_empty() {
        return Err(Error::InvalidArgument("no classifiers requested".into()));
    }
    let fold_of: Vec<usize> = table
        .ids
        .iter()
        .map(|id| {
            folds
                .fold_of(id)
                .ok_or_else(|| Error::InvalidArgument(format!("image `{id}` has no fold assignment")))
        })
        .collect::<Result<_>>()?;
    let y: Vec<bool> = table.labels.iter().map(|l| l.is_positive()).collect();

    let outcomes: Vec<FoldOutcome> = (0..folds.k)
        .into_par_iter()
        .map(|fold| {
            let train_rows: Vec<usize> = (0..y.len()).filter(|&i| fold_of[i] != fold).collect();
            let test_rows: Vec<usize> = (0..y.len()).filter(|&i| fold_of[i] == fold).collect();
            let y_train: Vec<bool> = train_rows.iter().map(|&i| y[i]).collect();
            let x_train = rows_matrix(&table.rows, &train_rows);
            let x_test = rows_matrix(&table.rows, &test_rows);
            let (normalizer, selection) = fit_fold_models(&x_train, &y_train, k_select)?;
            let train_sel = selection.apply(&normalizer.transform(&x_train)?);
            let test_sel = selection.apply(&normalizer.transform(&x_test)?);
            let scores = classifiers
                .iter()
                .map(|spec| {
                    let mut model = spec.build();
                    model.fit(&train_sel, &y_train)?;
                    model.predict_scores(&test_sel)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(FoldOutcome {
                models: FoldModels {
                    fold,
                    train_rows,
                    test_rows,
                    normalizer,
                    selection,
                },
                scores,
            })
        })
        .collect::<Result<_>>()?;

    let mut selection_by_source = BTreeMap::new();
    for entry in &table.layout.entries {
        selection_by_source.insert(entry.source.to_string(), 0);
    }
    for o in &outcomes {
        for &col in &o.models.selection.selected {
            let tag = table.layout.source_of(col).map_or_else(|| "unknown".to_string(), |t| t.to_string());
            *selection_by_source.entry(tag).or_insert(0) += 1;
        }
    }

    let mut reports = BTreeMap::new();
    for (c, spec) in classifiers.iter().enumerate() {
        let mut per_fold = Vec::new();
        let mut scores = BTreeMap::new();
        for o in &outcomes {
            if o.models.test_rows.is_empty() {
                continue;
            }
            let labels: Vec<bool> = o.models.test_rows.iter().map(|&i| y[i]).collect();
            let metrics = evaluate(&o.scores[c], &labels)?;
            let auc_error = metrics.auc.is_none().then(|| "held-out fold contains a single class".to_string());
            for (&row, &s) in o.models.test_rows.iter().zip(&o.scores[c]) {
                scores.insert(table.ids[row].clone(), s);
            }
            per_fold.push(FoldMetrics {
                fold: o.models.fold,
                n_test: labels.len(),
                metrics,
                auc_error,
            });
        }
        let aggregate = aggregate(&per_fold);
        reports.insert(
            spec.name().to_string(),
            ClassifierReport {
                spec: *spec,
                per_fold,
                aggregate,
                scores,
            },
        );
    }

    Ok(CvRun {
        report: EvalReport {
            k_folds: folds.k,
            k_select,
            n_features: table.n_features(),
            classifiers: reports,
            selection_by_source,
        },
        folds: outcomes.into_iter().map(|o| o.models).collect(),
    })
}

fn aggregate(per_fold: &[FoldMetrics]) -> Aggregate {
    let total: f64 = per_fold.iter().map(|f| f.n_test as f64).sum();
    let weighted = |get: &dyn Fn(&Metrics) -> f64| -> f64 {
        if total == 0.0 {
            0.0
        } else {
            per_fold.iter().map(|f| f.n_test as f64 * get(&f.metrics)).sum::<f64>() / total
        }
    };
    let auc_folds: Vec<&FoldMetrics> = per_fold.iter().filter(|f| f.metrics.auc.is_some()).collect();
    let auc_weight: f64 = auc_folds.iter().map(|f| f.n_test as f64).sum();
    let auc = if auc_weight > 0.0 {
        auc_folds.iter().map(|f| f.n_test as f64 * f.metrics.auc.unwrap_or(0.0)).sum::<f64>() / auc_weight
    } else {
        0.0
    };
    let mut confusion = Confusion::default();
    for f in per_fold {
        confusion.add(&f.metrics.confusion);
    }
    Aggregate {
        ac: weighted(&|m| m.ac),
        spec: weighted(&|m| m.spec),
        sens: weighted(&|m| m.sens),
        auc,
        auc_folds: auc_folds.len(),
        confusion,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{FeatureLayout, LayoutEntry, SourceTag};
    use crate::ingest::{stratified_folds, Label};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn separable_table(n: usize, p: usize, seed: u64) -> FeatureTable {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ids: Vec<String> = (0..n).map(|i| format!("img{i:03}")).collect();
        let labels: Vec<Label> = (0..n).map(|i| Label::from_positive(i % 2 == 0)).collect();
        let rows = labels
            .iter()
            .map(|l| {
                (0..p)
                    .map(|j| {
                        let noise = rng.gen_range(0.0..1.0);
                        if j < 3 {
                            noise * 0.3 + if l.is_positive() { 2.0 } else { 0.0 }
                        } else {
                            noise
                        }
                    })
                    .collect()
            })
            .collect();
        let layout = FeatureLayout {
            entries: vec![
                LayoutEntry { source: SourceTag::Level(5), offset: 0, len: p / 2 },
                LayoutEntry { source: SourceTag::Conventional, offset: p / 2, len: p - p / 2 },
            ],
        };
        FeatureTable::new(ids, labels, rows, layout).unwrap()
    }

    fn folds_for(table: &FeatureTable, k: usize) -> FoldAssignment {
        let pairs: Vec<(String, Label)> = table.ids.iter().cloned().zip(table.labels.iter().copied()).collect();
        stratified_folds(&pairs, k, 42).unwrap()
    }

    fn all_classifiers() -> Vec<ClassifierSpec> {
        ["knn", "logreg", "rf"].iter().map(|c| ClassifierSpec::parse_with_seed(c, 1).unwrap()).collect()
    }

    #[test]
    fn separable_corpus_scores_high() {
        let table = separable_table(40, 30, 1);
        let run = cross_validate(&table, &folds_for(&table, 10), &all_classifiers(), 10).unwrap();
        for (name, r) in &run.report.classifiers {
            assert!(r.aggregate.auc >= 0.99, "{name}: {}", r.aggregate.auc);
            assert_eq!(r.scores.len(), 40);
        }
        let total: usize = run.report.selection_by_source.values().sum();
        assert_eq!(total, 10 * 10);
    }

    #[test]
    fn two_folds_on_four_rows_predict_each_row_once() {
        let table = separable_table(4, 6, 2);
        let run = cross_validate(&table, &folds_for(&table, 2), &[ClassifierSpec::Knn { k: 1 }], 2).unwrap();
        let r = &run.report.classifiers["knn"];
        assert_eq!(r.scores.len(), 4);
        assert_eq!(r.per_fold.iter().map(|f| f.n_test).sum::<usize>(), 4);
        let mut seen: Vec<usize> = run.folds.iter().flat_map(|f| f.test_rows.clone()).collect();
        seen.sort_unstable();
        assert_eq!(seen, vec![0, 1, 2, 3]);
    }

    #[test]
    fn fold_models_depend_only_on_training_rows() {
        let table = separable_table(30, 12, 3);
        let folds = folds_for(&table, 5);
        let run = cross_validate(&table, &folds, &all_classifiers(), 4).unwrap();
        for f in &run.folds {
            let x = rows_matrix(&table.rows, &f.train_rows);
            let y: Vec<bool> = f.train_rows.iter().map(|&i| table.labels[i].is_positive()).collect();
            let (norm, sel) = fit_fold_models(&x, &y, 4).unwrap();
            assert_eq!(norm.checksum(), f.normalizer.checksum());
            assert_eq!(sel.checksum(), f.selection.checksum());
        }

        // flipping held-out labels of fold 0 leaves its fitted models untouched
        let mut flipped = table.clone();
        for &i in &run.folds[0].test_rows {
            flipped.labels[i] = Label::from_positive(!flipped.labels[i].is_positive());
        }
        let rerun = cross_validate(&flipped, &folds, &all_classifiers(), 4).unwrap();
        assert_eq!(rerun.folds[0].normalizer.checksum(), run.folds[0].normalizer.checksum());
        assert_eq!(rerun.folds[0].selection.checksum(), run.folds[0].selection.checksum());
        assert_ne!(rerun.report.classifiers["rf"].per_fold[0].metrics, run.report.classifiers["rf"].per_fold[0].metrics);
    }

    #[test]
    fn report_json_round_trip() {
        let table = separable_table(20, 8, 4);
        let run = cross_validate(&table, &folds_for(&table, 4), &all_classifiers(), 3).unwrap();
        let json = run.report.to_json().unwrap();
        let value: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert!(value["classifiers"]["rf"]["aggregate"]["auc"].is_number());
        assert!(value["classifiers"]["knn"]["per_fold"][0]["ac"].is_number());
        assert!(value["selection_by_source"]["level-5"].is_number());
        let back: EvalReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, run.report);
    }
}
