//! Normalization, L1-logistic feature selection, classifiers and cross-validated evaluation.

mod classifiers;
mod cv;
mod evaluate;
mod normalize;
mod select;

pub use classifiers::{Classifier, ClassifierSpec, Knn, LogisticRegression, RandomForest};
pub use cv::{cross_validate, fit_fold_models, Aggregate, ClassifierReport, CvRun, EvalReport, FoldMetrics, FoldModels};
pub use evaluate::{auc, evaluate, Confusion, Metrics, DECISION_THRESHOLD};
pub use normalize::NormalizationModel;
pub use select::{fit_l1_logistic, l1_select, SelectionModel, BISECTION_STEPS, DEFAULT_SELECTION_K, LAMBDA_BOUNDS};

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}
