//! Weighted superpixel graphs: Gaussian-kernel weights, percentile pruning, Laplacians.

use std::fmt;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum WeightScheme {
    Gaussian,
    Learned,
    Pruned { tau: f64, base: Box<WeightScheme> },
}

impl fmt::Display for WeightScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeightScheme::Gaussian => f.write_str("gaussian"),
            WeightScheme::Learned => f.write_str("learned"),
            WeightScheme::Pruned { tau, base } => write!(f, "pruned({tau}, {base})"),
        }
    }
}

/// Simple undirected graph stored as a dense symmetric weight matrix with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    weights: DMatrix<f64>,
    pub scheme: WeightScheme,
}

impl WeightedGraph {
    pub fn new(weights: DMatrix<f64>, scheme: WeightScheme) -> Result<Self> {
        let n = weights.nrows();
        if weights.ncols() != n {
            return Err(Error::InvalidArgument("weight matrix must be square".into()));
        }
        for i in 0..n {
            if weights[(i, i)] != 0.0 {
                return Err(Error::InvalidArgument(format!("self-loop at node {i}")));
            }
            for j in 0..n {
                let w = weights[(i, j)];
                if !w.is_finite() || w < 0.0 {
                    return Err(Error::InvalidArgument(format!("weight ({i},{j}) = {w} is not finite and non-negative")));
                }
                if w != weights[(j, i)] {
                    return Err(Error::InvalidArgument(format!("weights ({i},{j}) and ({j},{i}) differ")));
                }
            }
        }
        Ok(Self { weights, scheme })
    }

    /// Builds the symmetric matrix from upper-triangular edge weights in row-major order.
    pub fn from_edge_weights(n: usize, w: &[f64], scheme: WeightScheme) -> Result<Self> {
        if w.len() != n * n.saturating_sub(1) / 2 {
            return Err(Error::InvalidArgument(format!("{} edge weights for {n} nodes", w.len())));
        }
        let mut weights = DMatrix::zeros(n, n);
        let mut e = 0;
        for i in 0..n {
            for j in i + 1..n {
                weights[(i, j)] = w[e];
                weights[(j, i)] = w[e];
                e += 1;
            }
        }
        Self::new(weights, scheme)
    }

    pub fn n(&self) -> usize {
        self.weights.nrows()
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[(i, j)]
    }

    /// Upper-triangular weights `(i, j, w)` with `i < j`, row-major.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let n = self.n();
        (0..n).flat_map(move |i| (i + 1..n).map(move |j| (i, j, self.weights[(i, j)])))
    }

    pub fn edge_count(&self) -> usize {
        self.edges().filter(|e| e.2 > 0.0).count()
    }

    pub fn degrees(&self) -> Vec<f64> {
        self.weights.row_iter().map(|r| r.sum()).collect()
    }

    /// Dense CSV with a `n0,n1,..` header row, 17 significant digits per entry.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let header: Vec<String> = (0..self.n()).map(|j| format!("n{j}")).collect();
        let mut text = header.join(",");
        text.push('\n');
        for i in 0..self.n() {
            let row: Vec<String> = (0..self.n()).map(|j| format!("{:.16e}", self.weights[(i, j)])).collect();
            text.push_str(&row.join(","));
            text.push('\n');
        }
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn read_csv(path: &Path, scheme: WeightScheme) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let rows: Vec<Vec<f64>> = text
            .lines()
            .skip(1)
            .filter(|l| !l.trim().is_empty())
            .map(|l| l.split(',').map(|v| v.trim().parse::<f64>()).collect::<std::result::Result<Vec<_>, _>>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::csv(path, e))?;
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::csv(path, "weight matrix is not square"));
        }
        let flat: Vec<f64> = rows.into_iter().flatten().collect();
        Self::new(DMatrix::from_row_slice(n, n, &flat), scheme)
    }
}

/// Euclidean distances between the rows of `x`.
pub fn pairwise_distances(x: &DMatrix<f64>) -> DMatrix<f64> {
    let n = x.nrows();
    let mut d = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let dist = (x.row(i) - x.row(j)).norm();
            d[(i, j)] = dist;
            d[(j, i)] = dist;
        }
    }
    d
}

/// Mean and population variance of the off-diagonal pairwise distances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianParams {
    pub mu: f64,
    pub sigma2: f64,
}

impl GaussianParams {
    pub fn from_distances(d: &DMatrix<f64>) -> Result<Self> {
        let n = d.nrows();
        let r = n * n.saturating_sub(1) / 2;
        if r == 0 {
            return Err(Error::DegenerateDistances);
        }
        let upper = || (0..n).flat_map(move |i| (i + 1..n).map(move |j| d[(i, j)]));
        let mu = upper().sum::<f64>() / r as f64;
        let sigma2 = upper().map(|v| (v - mu).powi(2)).sum::<f64>() / r as f64;
        if !(sigma2 > 0.0) {
            return Err(Error::DegenerateDistances);
        }
        Ok(Self { mu, sigma2 })
    }

    /// `exp(-(d - μ)² / 2σ²)`. Peaks at `d = μ`, not at `d = 0`.
    pub fn weight(&self, d: f64) -> f64 {
        (-(d - self.mu).powi(2) / (2.0 * self.sigma2)).exp()
    }
}

pub fn gaussian_weights(d: &DMatrix<f64>) -> Result<WeightedGraph> {
    gaussian_weights_with_params(d).map(|(g, _)| g)
}

pub fn gaussian_weights_with_params(d: &DMatrix<f64>) -> Result<(WeightedGraph, GaussianParams)> {
    let params = GaussianParams::from_distances(d)?;
    let n = d.nrows();
    let mut w = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let v = params.weight(d[(i, j)]);
            w[(i, j)] = v;
            w[(j, i)] = v;
        }
    }
    Ok((WeightedGraph::new(w, WeightScheme::Gaussian)?, params))
}

/// Number of weakest edges a pruning ratio removes out of `r`.
pub fn pruned_edge_count(tau: f64, r: usize) -> usize {
    // tolerance keeps ratios such as 0.29 * 100 from flooring to 28
    ((tau * r as f64 + 1e-9).floor() as usize).min(r)
}

/// Threshold `T_τ`: the weight of the lowest retained edge, or `None` when every edge goes.
pub fn prune_threshold(g: &WeightedGraph, tau: f64) -> Result<Option<f64>> {
    if !(0.0..=1.0).contains(&tau) {
        return Err(Error::InvalidArgument(format!("pruning ratio {tau} outside [0, 1]")));
    }
    let mut w: Vec<f64> = g.edges().map(|e| e.2).collect();
    w.sort_by(f64::total_cmp);
    let removed = pruned_edge_count(tau, w.len());
    Ok(w.get(removed).copied())
}

/// Zeroes the weakest `⌊τ·r⌋` of the `r = n(n−1)/2` edges. Edges tied with the threshold are
/// kept, so fewer edges may be removed when ties straddle it.
pub fn prune(g: &WeightedGraph, tau: f64) -> Result<WeightedGraph> {
    let threshold = prune_threshold(g, tau)?;
    let mut w = g.weights.clone();
    let n = g.n();
    for i in 0..n {
        for j in 0..n {
            let keep = threshold.map_or(false, |t| w[(i, j)] >= t);
            if !keep {
                w[(i, j)] = 0.0;
            }
        }
    }
    Ok(WeightedGraph {
        weights: w,
        scheme: WeightScheme::Pruned {
            tau,
            base: Box::new(g.scheme.clone()),
        },
    })
}

/// Combinatorial Laplacian `diag(W·1) − W`.
pub fn laplacian(g: &WeightedGraph) -> DMatrix<f64> {
    let mut l = -g.weights.clone();
    for (i, deg) in g.degrees().into_iter().enumerate() {
        l[(i, i)] = deg;
    }
    l
}
