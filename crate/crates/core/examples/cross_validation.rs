//! Cross-validated L1 selection and classification on a feature table, with the per-source
//! contribution report.

use lesiongraph::features::{FeatureLayout, FeatureTable, SourceTag};
use lesiongraph::ingest::{stratified_folds, Label};
use lesiongraph::ml::{cross_validate, ClassifierSpec};
use lesiongraph::pipeline::emit_contribution_report;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> lesiongraph::Result<()> {
    // two informative columns in the "level-20" block, noise everywhere else
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (n, p) = (60, 40);
    let labels: Vec<Label> = (0..n).map(|i| Label::from_positive(i % 2 == 1)).collect();
    let rows: Vec<Vec<f64>> = labels
        .iter()
        .map(|l| {
            (0..p)
                .map(|j| {
                    let signal = if j < 2 && l.is_positive() { 0.8 } else { 0.0 };
                    signal + rng.gen_range(0.0..1.0)
                })
                .collect()
        })
        .collect();
    let mut layout = FeatureLayout::default();
    layout.push(SourceTag::Level(20), 20);
    layout.push(SourceTag::Level(40), 20);
    let ids: Vec<String> = (0..n).map(|i| format!("img_{i:03}")).collect();
    let table = FeatureTable::new(ids.clone(), labels.clone(), rows, layout)?;

    let folds = stratified_folds(&ids.into_iter().zip(labels).collect::<Vec<_>>(), 5, 42)?;
    let specs = ["knn", "logreg", "rf"]
        .iter()
        .map(|c| ClassifierSpec::parse_with_seed(c, 42))
        .collect::<lesiongraph::Result<Vec<_>>>()?;
    let run = cross_validate(&table, &folds, &specs, 4)?;
    for (name, c) in &run.report.classifiers {
        println!("{name:>7}: AUC {:.3}  AC {:.3}", c.aggregate.auc, c.aggregate.ac);
    }
    let out = std::env::temp_dir().join("lesiongraph-cv");
    for row in emit_contribution_report(&run.report, &out)? {
        println!("{:>9}: {:5.1}%", row.source, row.percent);
    }
    Ok(())
}
