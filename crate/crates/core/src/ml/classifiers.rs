use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::evaluate::DECISION_THRESHOLD;
use super::sigmoid;
use crate::error::{Error, Result};

/// Binary classifier producing positive-class scores in [0,1].
pub trait Classifier: Send {
    fn name(&self) -> &'static str;

    fn fit(&mut self, x: &DMatrix<f64>, y: &[bool]) -> Result<()>;

    fn predict_scores(&self, x: &DMatrix<f64>) -> Result<Vec<f64>>;

    fn predict(&self, x: &DMatrix<f64>) -> Result<Vec<bool>> {
        Ok(self.predict_scores(x)?.into_iter().map(|s| s >= DECISION_THRESHOLD).collect())
    }
}

/// Classifier choice plus hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "lowercase")]
pub enum ClassifierSpec {
    Knn { k: usize },
    Logreg { l2: f64 },
    Rf { trees: usize, max_depth: usize, seed: u64 },
}

impl ClassifierSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ClassifierSpec::Knn { .. } => "knn",
            ClassifierSpec::Logreg { .. } => "logreg",
            ClassifierSpec::Rf { .. } => "rf",
        }
    }

    pub fn build(&self) -> Box<dyn Classifier> {
        match *self {
            ClassifierSpec::Knn { k } => Box::new(Knn::new(k)),
            ClassifierSpec::Logreg { l2 } => Box::new(LogisticRegression::new(l2)),
            ClassifierSpec::Rf { trees, max_depth, seed } => Box::new(RandomForest::new(trees, max_depth, seed)),
        }
    }

    /// Parses `knn`, `logreg` or `rf` with default hyperparameters; the forest takes `seed`.
    pub fn parse_with_seed(name: &str, seed: u64) -> Result<Self> {
        match name.trim() {
            "knn" => Ok(ClassifierSpec::Knn { k: 5 }),
            "logreg" => Ok(ClassifierSpec::Logreg { l2: 1.0 }),
            "rf" => Ok(ClassifierSpec::Rf {
                trees: 200,
                max_depth: 8,
                seed,
            }),
            other => Err(Error::InvalidArgument(format!("unknown classifier `{other}` (expected knn, logreg or rf)"))),
        }
    }
}

impl fmt::Display for ClassifierSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ClassifierSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse_with_seed(s, 0)
    }
}

fn check_training(x: &DMatrix<f64>, y: &[bool]) -> Result<()> {
    if x.nrows() != y.len() || y.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "{} training rows with {} labels",
            x.nrows(),
            y.len()
        )));
    }
    Ok(())
}

fn check_width(name: &str, expected: usize, x: &DMatrix<f64>) -> Result<()> {
    if x.ncols() != expected {
        return Err(Error::InvalidArgument(format!("{name} trained on {expected} columns, got {}", x.ncols())));
    }
    Ok(())
}

/// Score = fraction of positive labels among the `k` nearest training rows (Euclidean; ties by
/// training order).
#[derive(Debug, Clone)]
pub struct Knn {
    pub k: usize,
    train: Option<(DMatrix<f64>, Vec<bool>)>,
}

impl Knn {
    pub fn new(k: usize) -> Self {
        Self { k: k.max(1), train: None }
    }
}

impl Classifier for Knn {
    fn name(&self) -> &'static str {
        "knn"
    }

    fn fit(&mut self, x: &DMatrix<f64>, y: &[bool]) -> Result<()> {
        check_training(x, y)?;
        self.train = Some((x.clone(), y.to_vec()));
        Ok(())
    }

    fn predict_scores(&self, x: &DMatrix<f64>) -> Result<Vec<f64>> {
        let (tx, ty) = self.train.as_ref().ok_or(Error::NotFitted("knn"))?;
        check_width("knn", tx.ncols(), x)?;
        let k = self.k.min(ty.len());
        Ok(x.row_iter()
            .map(|row| {
                let mut d: Vec<(f64, usize)> = tx.row_iter().enumerate().map(|(i, t)| ((t - row).norm_squared(), i)).collect();
                d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                d[..k].iter().filter(|(_, i)| ty[*i]).count() as f64 / k as f64
            })
            .collect())
    }
}

/// L2-penalized logistic regression (intercept unpenalized) fitted by Newton's method.
#[derive(Debug, Clone)]
pub struct LogisticRegression {
    pub l2: f64,
    coef: Option<(DVector<f64>, f64)>,
}

impl LogisticRegression {
    pub fn new(l2: f64) -> Self {
        Self { l2, coef: None }
    }

    pub fn coefficients(&self) -> Option<(&DVector<f64>, f64)> {
        self.coef.as_ref().map(|(w, b)| (w, *b))
    }
}

impl Classifier for LogisticRegression {
    fn name(&self) -> &'static str {
        "logreg"
    }

    fn fit(&mut self, x: &DMatrix<f64>, y: &[bool]) -> Result<()> {
        check_training(x, y)?;
        let (n, p) = (x.nrows(), x.ncols());
        let a = x.clone().insert_column(p, 1.0);
        let yv = DVector::from_iterator(n, y.iter().map(|&t| if t { 1.0 } else { 0.0 }));
        let mut beta = DVector::zeros(p + 1);
        let mut penalty = DVector::from_element(p + 1, self.l2);
        penalty[p] = 0.0;
        for _ in 0..100 {
            let mu = (&a * &beta).map(sigmoid);
            let grad = a.tr_mul(&(&mu - &yv)) + penalty.component_mul(&beta);
            let weights = mu.map(|m| (m * (1.0 - m)).max(1e-10));
            let mut hess = a.tr_mul(&DMatrix::from_fn(n, p + 1, |i, j| a[(i, j)] * weights[i]));
            for j in 0..=p {
                hess[(j, j)] += penalty[j] + 1e-10;
            }
            let step = hess
                .cholesky()
                .ok_or_else(|| Error::InvalidArgument("logistic Hessian is not positive definite".into()))?
                .solve(&grad);
            beta -= &step;
            if step.amax() < 1e-10 {
                break;
            }
        }
        self.coef = Some((beta.rows(0, p).into_owned(), beta[p]));
        Ok(())
    }

    fn predict_scores(&self, x: &DMatrix<f64>) -> Result<Vec<f64>> {
        let (w, b) = self.coef.as_ref().ok_or(Error::NotFitted("logreg"))?;
        check_width("logreg", w.len(), x)?;
        Ok((x * w).add_scalar(*b).map(sigmoid).iter().copied().collect())
    }
}

#[derive(Debug, Clone)]
enum Node {
    Leaf(f64),
    Split { feature: usize, threshold: f64, left: Box<Node>, right: Box<Node> },
}

impl Node {
    fn predict(&self, row: &[f64]) -> f64 {
        match self {
            Node::Leaf(v) => *v,
            Node::Split { feature, threshold, left, right } => {
                if row[*feature] <= *threshold {
                    left.predict(row)
                } else {
                    right.predict(row)
                }
            }
        }
    }
}

fn gini(pos: f64, total: f64) -> f64 {
    if total == 0.0 {
        return 0.0;
    }
    let p = pos / total;
    2.0 * p * (1.0 - p)
}

/// CART tree on bootstrap rows with `√p` candidate features per split.
fn grow(rows: &[Vec<f64>], y: &[bool], idx: &[usize], depth: usize, max_depth: usize, mtry: usize, rng: &mut ChaCha8Rng) -> Node {
    let pos = idx.iter().filter(|&&i| y[i]).count();
    let frac = pos as f64 / idx.len() as f64;
    if depth >= max_depth || pos == 0 || pos == idx.len() || idx.len() < 2 {
        return Node::Leaf(frac);
    }
    let p = rows[0].len();
    let mut features = sample(rng, p, mtry.min(p)).into_vec();
    features.sort_unstable();
    let total = idx.len() as f64;
    let parent = gini(pos as f64, total);
    let mut best: Option<(f64, usize, f64)> = None;
    for &f in &features {
        let mut order: Vec<usize> = idx.to_vec();
        order.sort_by(|&a, &b| rows[a][f].total_cmp(&rows[b][f]).then(a.cmp(&b)));
        let mut left_pos = 0.0;
        for s in 1..order.len() {
            if y[order[s - 1]] {
                left_pos += 1.0;
            }
            let (lo, hi) = (rows[order[s - 1]][f], rows[order[s]][f]);
            if lo == hi {
                continue;
            }
            let nl = s as f64;
            let nr = total - nl;
            let impurity = (nl * gini(left_pos, nl) + nr * gini(pos as f64 - left_pos, nr)) / total;
            let gain = parent - impurity;
            if gain > 1e-12 && best.map_or(true, |b| gain > b.0) {
                best = Some((gain, f, lo + (hi - lo) / 2.0));
            }
        }
    }
    match best {
        None => Node::Leaf(frac),
        Some((_, feature, threshold)) => {
            let (l, r): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| rows[i][feature] <= threshold);
            Node::Split {
                feature,
                threshold,
                left: Box::new(grow(rows, y, &l, depth + 1, max_depth, mtry, rng)),
                right: Box::new(grow(rows, y, &r, depth + 1, max_depth, mtry, rng)),
            }
        }
    }
}

/// Seeded bagged CART ensemble; score = fraction of trees voting positive (a leaf at exactly
/// one half casts half a vote).
#[derive(Debug, Clone)]
pub struct RandomForest {
    pub trees: usize,
    pub max_depth: usize,
    pub seed: u64,
    fitted: Option<(usize, Vec<Node>)>,
}

impl RandomForest {
    pub fn new(trees: usize, max_depth: usize, seed: u64) -> Self {
        Self {
            trees: trees.max(1),
            max_depth,
            seed,
            fitted: None,
        }
    }
}

impl Classifier for RandomForest {
    fn name(&self) -> &'static str {
        "rf"
    }

    fn fit(&mut self, x: &DMatrix<f64>, y: &[bool]) -> Result<()> {
        check_training(x, y)?;
        let rows: Vec<Vec<f64>> = x.row_iter().map(|r| r.iter().copied().collect()).collect();
        let n = rows.len();
        let mtry = ((x.ncols() as f64).sqrt().floor() as usize).max(1);
        let forest = (0..self.trees)
            .map(|t| {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed.wrapping_add(t as u64));
                let idx: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
                grow(&rows, y, &idx, 0, self.max_depth, mtry, &mut rng)
            })
            .collect();
        self.fitted = Some((x.ncols(), forest));
        Ok(())
    }

    fn predict_scores(&self, x: &DMatrix<f64>) -> Result<Vec<f64>> {
        let (p, forest) = self.fitted.as_ref().ok_or(Error::NotFitted("rf"))?;
        check_width("rf", *p, x)?;
        Ok(x.row_iter()
            .map(|r| {
                let row: Vec<f64> = r.iter().copied().collect();
                let votes: f64 = forest
                    .iter()
                    .map(|t| {
                        let v = t.predict(&row);
                        if v > 0.5 {
                            1.0
                        } else if v == 0.5 {
                            0.5
                        } else {
                            0.0
                        }
                    })
                    .sum();
                votes / forest.len() as f64
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Two blobs centred at (±2, ±2) with jitter ±0.9, so the classes stay separated by a
    /// margin of at least 2 along the diagonal.
    fn blobs(n: usize, seed: u64) -> (DMatrix<f64>, Vec<bool>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let y: Vec<bool> = (0..n).map(|i| i % 2 == 0).collect();
        let x = DMatrix::from_fn(n, 2, |i, _| {
            let c = if y[i] { 2.0 } else { -2.0 };
            c + rng.gen_range(-0.9..0.9)
        });
        (x, y)
    }

    #[test]
    fn predict_before_fit_fails() {
        let x = DMatrix::zeros(1, 2);
        for spec in ["knn", "logreg", "rf"] {
            let c = spec.parse::<ClassifierSpec>().unwrap().build();
            assert!(matches!(c.predict_scores(&x), Err(Error::NotFitted(_))));
        }
        assert!("svm".parse::<ClassifierSpec>().is_err());
    }

    #[test]
    fn knn_one_neighbour_recalls_training_point() {
        let (x, y) = blobs(10, 0);
        let mut knn = Knn::new(1);
        knn.fit(&x, &y).unwrap();
        let scores = knn.predict_scores(&x).unwrap();
        for (s, l) in scores.iter().zip(&y) {
            assert_eq!(*s, if *l { 1.0 } else { 0.0 });
        }
    }

    #[test]
    fn logreg_separates_blobs() {
        let (x, y) = blobs(40, 1);
        let mut m = LogisticRegression::new(1.0);
        m.fit(&x, &y).unwrap();
        assert_eq!(m.predict(&x).unwrap(), y);
        assert!(m.predict_scores(&x).unwrap().iter().all(|s| (0.0..=1.0).contains(s)));
    }

    #[test]
    fn forest_is_deterministic_and_fits_blobs() {
        let (x, y) = blobs(30, 2);
        let mut a = RandomForest::new(25, 6, 7);
        let mut b = RandomForest::new(25, 6, 7);
        a.fit(&x, &y).unwrap();
        b.fit(&x, &y).unwrap();
        let (sa, sb) = (a.predict_scores(&x).unwrap(), b.predict_scores(&x).unwrap());
        assert_eq!(sa, sb);
        assert_eq!(a.predict(&x).unwrap(), y);
    }

    #[test]
    fn width_mismatch_is_an_error() {
        let (x, y) = blobs(10, 3);
        let mut m = Knn::new(3);
        m.fit(&x, &y).unwrap();
        assert!(m.predict_scores(&DMatrix::zeros(2, 3)).is_err());
    }
}
