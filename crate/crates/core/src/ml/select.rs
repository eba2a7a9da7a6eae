//! Feature selection by L1-penalized logistic regression.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::normalize::hex;
use super::sigmoid;
use crate::error::{Error, Result};

pub const DEFAULT_SELECTION_K: usize = 150;
pub const LAMBDA_BOUNDS: (f64, f64) = (1e-6, 1e2);
pub const BISECTION_STEPS: usize = 60;

const FISTA_MAX_ITER: usize = 2000;
const FISTA_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionModel {
    /// Column indices ordered by decreasing `|coefficient|`, ties by index.
    pub selected: Vec<usize>,
    pub k: usize,
    /// Coefficients of the fit the selection was read from (all zero when `k` covers every
    /// column and no fit was needed).
    pub weights: Vec<f64>,
    pub lambda: Option<f64>,
}

impl SelectionModel {
    pub fn apply(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        x.select_columns(&self.selected)
    }

    pub fn checksum(&self) -> String {
        let mut h = Sha256::new();
        for &j in &self.selected {
            h.update((j as u64).to_le_bytes());
        }
        h.update((self.k as u64).to_le_bytes());
        for w in &self.weights {
            h.update(w.to_bits().to_le_bytes());
        }
        h.update(self.lambda.unwrap_or(f64::NAN).to_bits().to_le_bytes());
        hex(&h.finalize())
    }
}

/// Largest eigenvalue of `AᵀA` for `A = [X 1]`, by power iteration from the all-ones vector.
fn lipschitz(x: &DMatrix<f64>) -> f64 {
    let p = x.ncols();
    let mut v = DVector::from_element(p + 1, 1.0);
    let mut est = 0.0;
    for _ in 0..200 {
        let av = x * v.rows(0, p) + DVector::from_element(x.nrows(), v[p]);
        let mut atav = DVector::zeros(p + 1);
        atav.rows_mut(0, p).copy_from(&x.tr_mul(&av));
        atav[p] = av.sum();
        let norm = atav.norm();
        if norm == 0.0 {
            return 0.0;
        }
        let next = norm / v.norm();
        v = atav / norm;
        if (next - est).abs() <= 1e-10 * next {
            est = next;
            break;
        }
        est = next;
    }
    est
}

/// Minimizes `mean logloss(b + Xw) + λ‖w‖₁` by FISTA, warm-started from `start`.
pub fn fit_l1_logistic(x: &DMatrix<f64>, y: &[bool], lambda: f64, start: Option<(&DVector<f64>, f64)>) -> (DVector<f64>, f64) {
    let (n, p) = (x.nrows(), x.ncols());
    let yv = DVector::from_iterator(n, y.iter().map(|&t| if t { 1.0 } else { 0.0 }));
    // logistic loss curvature ≤ 1/4; a little slack keeps the step safely inside 1/L
    let step = 1.0 / (0.25 * lipschitz(x) / n as f64 * 1.01 + 1e-12);
    let (mut w, mut b) = start.map_or((DVector::zeros(p), 0.0), |(w, b)| (w.clone(), b));
    let (mut zw, mut zb) = (w.clone(), b);
    let mut t = 1.0f64;
    for _ in 0..FISTA_MAX_ITER {
        let residual = (x * &zw).add_scalar(zb).map(sigmoid) - &yv;
        let gw = x.tr_mul(&residual) / n as f64;
        let gb = residual.sum() / n as f64;
        let shrink = step * lambda;
        let next_w = (&zw - gw * step).map(|v| v.signum() * (v.abs() - shrink).max(0.0));
        let next_b = zb - step * gb;
        let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        let momentum = (t - 1.0) / t_next;
        let change = (&next_w - &w).amax().max((next_b - b).abs());
        zw = &next_w + (&next_w - &w) * momentum;
        zb = next_b + (next_b - b) * momentum;
        w = next_w;
        b = next_b;
        t = t_next;
        if change <= FISTA_TOL * w.amax().max(b.abs()).max(1.0) {
            break;
        }
    }
    (w, b)
}

fn top_k(w: &DVector<f64>, k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..w.len()).filter(|&j| w[j] != 0.0).collect();
    idx.sort_by(|&a, &b| w[b].abs().total_cmp(&w[a].abs()).then(a.cmp(&b)));
    idx.truncate(k);
    idx
}

/// Keeps the `k` columns with the largest L1-logistic coefficients at the largest penalty
/// (bisected in log space) that still leaves at least `k` non-zero coefficients.
pub fn l1_select(x: &DMatrix<f64>, y: &[bool], k: usize) -> Result<SelectionModel> {
    let p = x.ncols();
    if x.nrows() != y.len() {
        return Err(Error::InvalidArgument("feature rows and labels differ in length".into()));
    }
    if k == 0 {
        return Err(Error::InvalidArgument("selection size must be positive".into()));
    }
    if k >= p {
        return Ok(SelectionModel {
            selected: (0..p).collect(),
            k,
            weights: vec![0.0; p],
            lambda: None,
        });
    }
    let nnz = |w: &DVector<f64>| w.iter().filter(|&&v| v != 0.0).count();
    let (lo_bound, hi_bound) = LAMBDA_BOUNDS;

    let (w_lo, b_lo) = fit_l1_logistic(x, y, lo_bound, None);
    if nnz(&w_lo) < k {
        log::warn!("only {} non-zero coefficients at the smallest penalty; keeping all of them", nnz(&w_lo));
        return Ok(SelectionModel {
            selected: top_k(&w_lo, k),
            k,
            weights: w_lo.iter().copied().collect(),
            lambda: Some(lo_bound),
        });
    }
    let (w_hi, _) = fit_l1_logistic(x, y, hi_bound, None);
    if nnz(&w_hi) >= k {
        return Ok(SelectionModel {
            selected: top_k(&w_hi, k),
            k,
            weights: w_hi.iter().copied().collect(),
            lambda: Some(hi_bound),
        });
    }

    // invariant: nnz(lo) ≥ k > nnz(hi)
    let (mut lo, mut hi) = (lo_bound.ln(), hi_bound.ln());
    let mut best = (w_lo, b_lo, lo_bound);
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        let lambda = mid.exp();
        let (w, b) = fit_l1_logistic(x, y, lambda, Some((&best.0, best.1)));
        let count = nnz(&w);
        if count >= k {
            lo = mid;
            best = (w, b, lambda);
            if count == k {
                break;
            }
        } else {
            hi = mid;
        }
    }
    Ok(SelectionModel {
        selected: top_k(&best.0, k),
        k,
        weights: best.0.iter().copied().collect(),
        lambda: Some(best.2),
    })
}
