//! Vertex-domain graph metrics on weighted graphs.
//!
//! Edge length is `1/w` for `w > 0`; zero-weight pairs are non-edges. Pairs with no connecting
//! path count as twice the largest finite distance in the graph for closeness, eccentricity and
//! path length, and contribute 0 to efficiencies.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::graph::WeightedGraph;

pub const LOCAL_METRIC_NAMES: [&str; 6] = ["le", "lcc", "ns", "nbc", "cc", "ecc"];
pub const GLOBAL_METRIC_NAMES: [&str; 5] = ["cpl", "ge", "gcc", "density", "ga"];

/// Relative tolerance under which two path lengths count as equal.
const TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GlobalMetrics {
    pub cpl: f64,
    pub ge: f64,
    pub gcc: f64,
    pub density: f64,
    pub ga: f64,
    /// False when strength variance across edge endpoints is zero and `ga` was set to 0.
    pub ga_defined: bool,
}

impl GlobalMetrics {
    pub fn to_array(&self) -> [f64; 5] {
        [self.cpl, self.ge, self.gcc, self.density, self.ga]
    }
}

fn same_length(a: f64, b: f64) -> bool {
    (a - b).abs() <= TIE_TOL * a.abs().max(b.abs()).max(1.0)
}

/// Edge lengths, `∞` where there is no edge.
fn length_matrix(w: &DMatrix<f64>) -> DMatrix<f64> {
    w.map(|v| if v > 0.0 { 1.0 / v } else { f64::INFINITY })
}

/// Dense Dijkstra from `s` with shortest-path counting. Returns distances, path counts,
/// predecessor lists and the settling order.
fn single_source(len: &DMatrix<f64>, s: usize) -> (Vec<f64>, Vec<f64>, Vec<Vec<usize>>, Vec<usize>) {
    let n = len.nrows();
    let mut dist = vec![f64::INFINITY; n];
    let mut sigma = vec![0.0; n];
    let mut pred = vec![Vec::new(); n];
    let mut done = vec![false; n];
    let mut order = Vec::with_capacity(n);
    dist[s] = 0.0;
    sigma[s] = 1.0;
    loop {
        let mut u = usize::MAX;
        for v in 0..n {
            if !done[v] && dist[v].is_finite() && (u == usize::MAX || dist[v] < dist[u]) {
                u = v;
            }
        }
        if u == usize::MAX {
            break;
        }
        done[u] = true;
        order.push(u);
        for v in 0..n {
            let l = len[(u, v)];
            if done[v] || !l.is_finite() {
                continue;
            }
            let alt = dist[u] + l;
            if dist[v].is_finite() && same_length(alt, dist[v]) {
                sigma[v] += sigma[u];
                pred[v].push(u);
            } else if alt < dist[v] {
                dist[v] = alt;
                sigma[v] = sigma[u];
                pred[v] = vec![u];
            }
        }
    }
    (dist, sigma, pred, order)
}

fn shortest_distances(len: &DMatrix<f64>) -> DMatrix<f64> {
    let n = len.nrows();
    let mut d = DMatrix::from_element(n, n, f64::INFINITY);
    for s in 0..n {
        let (row, ..) = single_source(len, s);
        for (t, v) in row.into_iter().enumerate() {
            d[(s, t)] = v;
        }
    }
    d
}

/// Distances plus Brandes betweenness (undirected, each pair counted once).
fn distances_and_betweenness(len: &DMatrix<f64>) -> (DMatrix<f64>, Vec<f64>) {
    let n = len.nrows();
    let mut d = DMatrix::from_element(n, n, f64::INFINITY);
    let mut bc = vec![0.0; n];
    for s in 0..n {
        let (dist, sigma, pred, order) = single_source(len, s);
        let mut delta = vec![0.0; n];
        for &w in order.iter().rev() {
            for &v in &pred[w] {
                delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
            }
            if w != s {
                bc[w] += delta[w];
            }
        }
        for (t, v) in dist.into_iter().enumerate() {
            d[(s, t)] = v;
        }
    }
    for b in &mut bc {
        *b /= 2.0;
    }
    (d, bc)
}

/// Replacement length for unreachable pairs, or `None` when no pair is reachable.
fn unreachable_length(d: &DMatrix<f64>) -> Option<f64> {
    let n = d.nrows();
    let mut max = None::<f64>;
    for i in 0..n {
        for j in 0..n {
            if i != j && d[(i, j)].is_finite() {
                max = Some(max.map_or(d[(i, j)], |m| m.max(d[(i, j)])));
            }
        }
    }
    max.map(|m| 2.0 * m)
}

fn local_efficiency(w: &DMatrix<f64>, len: &DMatrix<f64>, i: usize) -> f64 {
    let n = w.nrows();
    let nbrs: Vec<usize> = (0..n).filter(|&j| j != i && w[(i, j)] > 0.0).collect();
    let k = nbrs.len();
    if k < 2 {
        return 0.0;
    }
    let sub = DMatrix::from_fn(k, k, |a, b| len[(nbrs[a], nbrs[b])]);
    let d = shortest_distances(&sub);
    let mut total = 0.0;
    for a in 0..k {
        for b in 0..k {
            if a != b && d[(a, b)].is_finite() {
                total += 1.0 / d[(a, b)];
            }
        }
    }
    total / (k * (k - 1)) as f64
}

/// Geometric-mean triangle intensity on weights scaled by the largest weight.
fn clustering(w: &DMatrix<f64>, i: usize, wmax: f64) -> f64 {
    let n = w.nrows();
    let nbrs: Vec<usize> = (0..n).filter(|&j| j != i && w[(i, j)] > 0.0).collect();
    let k = nbrs.len();
    if k < 2 || wmax <= 0.0 {
        return 0.0;
    }
    let mut total = 0.0;
    for &j in &nbrs {
        for &h in &nbrs {
            if j != h && w[(j, h)] > 0.0 {
                total += (w[(i, j)] * w[(i, h)] * w[(j, h)] / wmax.powi(3)).cbrt();
            }
        }
    }
    total / (k * (k - 1)) as f64
}

fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    if x.is_empty() {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    let denom = (sxx * syy).sqrt();
    // relative cutoff: equal strengths summed in different orders differ in the last bits
    let scale = x.iter().chain(y).map(|v| v * v).sum::<f64>();
    if denom <= 1e-24 * scale.max(f64::MIN_POSITIVE) {
        None
    } else {
        Some(sxy / denom)
    }
}

/// Local `n × 6` metric matrix (columns as in [`LOCAL_METRIC_NAMES`]) and global metrics.
pub fn graph_metrics(g: &WeightedGraph) -> (DMatrix<f64>, GlobalMetrics) {
    let n = g.n();
    let w = g.weights();
    let len = length_matrix(w);
    let (d, bc) = distances_and_betweenness(&len);
    let fill = unreachable_length(&d);
    let sub = |v: f64| if v.is_finite() { v } else { fill.unwrap_or(0.0) };
    let wmax = w.max();
    let strengths = g.degrees();

    let mut local = DMatrix::zeros(n, 6);
    let (mut path_sum, mut eff_sum) = (0.0, 0.0);
    for i in 0..n {
        let mut total = 0.0;
        let mut ecc: f64 = 0.0;
        for j in (0..n).filter(|&j| j != i) {
            let v = sub(d[(i, j)]);
            total += v;
            ecc = ecc.max(v);
            if d[(i, j)].is_finite() {
                eff_sum += 1.0 / d[(i, j)];
            }
        }
        path_sum += total;
        local[(i, 0)] = local_efficiency(w, &len, i);
        local[(i, 1)] = clustering(w, i, wmax);
        local[(i, 2)] = strengths[i];
        local[(i, 3)] = bc[i];
        local[(i, 4)] = if fill.is_some() && total > 0.0 { (n - 1) as f64 / total } else { 0.0 };
        local[(i, 5)] = if fill.is_some() { ecc } else { 0.0 };
    }

    let ordered_pairs = (n * n.saturating_sub(1)) as f64;
    let r = g.edges().count();
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for (i, j, wij) in g.edges() {
        if wij > 0.0 {
            xs.extend([strengths[i], strengths[j]]);
            ys.extend([strengths[j], strengths[i]]);
        }
    }
    let ga = pearson(&xs, &ys);
    let global = GlobalMetrics {
        cpl: if ordered_pairs > 0.0 && fill.is_some() { path_sum / ordered_pairs } else { 0.0 },
        ge: if ordered_pairs > 0.0 { eff_sum / ordered_pairs } else { 0.0 },
        gcc: if n > 0 { local.column(1).mean() } else { 0.0 },
        density: if r > 0 { g.edge_count() as f64 / r as f64 } else { 0.0 },
        ga: ga.unwrap_or(0.0),
        ga_defined: ga.is_some(),
    };
    (local, global)
}

pub fn local_metrics(g: &WeightedGraph) -> DMatrix<f64> {
    graph_metrics(g).0
}

pub fn global_metrics(g: &WeightedGraph) -> GlobalMetrics {
    graph_metrics(g).1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::WeightScheme;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn graph(n: usize, w: &[f64]) -> WeightedGraph {
        WeightedGraph::from_edge_weights(n, w, WeightScheme::Gaussian).unwrap()
    }

    /// Floyd–Warshall distances.
    fn fw(len: &DMatrix<f64>) -> DMatrix<f64> {
        let n = len.nrows();
        let mut d = len.clone();
        for i in 0..n {
            d[(i, i)] = 0.0;
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    if d[(i, k)] + d[(k, j)] < d[(i, j)] {
                        d[(i, j)] = d[(i, k)] + d[(k, j)];
                    }
                }
            }
        }
        d
    }

    struct Oracle {
        local: DMatrix<f64>,
        global: [f64; 5],
    }

    /// Brute force: Floyd–Warshall distances, path counts by relaxation over the distance
    /// order, betweenness by pair enumeration, clustering by triangle enumeration.
    fn oracle(g: &WeightedGraph) -> Oracle {
        let n = g.n();
        let w = g.weights();
        let len = w.map(|v| if v > 0.0 { 1.0 / v } else { f64::INFINITY });
        let d = fw(&len);
        let eq = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0);

        // σ[s][t] = number of shortest s–t paths
        let mut sigma = DMatrix::zeros(n, n);
        for s in 0..n {
            let mut by_dist: Vec<usize> = (0..n).filter(|&t| d[(s, t)].is_finite()).collect();
            by_dist.sort_by(|&a, &b| d[(s, a)].total_cmp(&d[(s, b)]));
            sigma[(s, s)] = 1.0;
            for &t in by_dist.iter().skip(1) {
                let mut count = 0.0;
                for u in 0..n {
                    if u != t && d[(s, u)].is_finite() && len[(u, t)].is_finite() && eq(d[(s, u)] + len[(u, t)], d[(s, t)]) {
                        count += sigma[(s, u)];
                    }
                }
                sigma[(s, t)] = count;
            }
        }
        let mut bc = vec![0.0; n];
        for s in 0..n {
            for t in s + 1..n {
                if !d[(s, t)].is_finite() {
                    continue;
                }
                for v in 0..n {
                    if v != s && v != t && d[(s, v)].is_finite() && d[(v, t)].is_finite() && eq(d[(s, v)] + d[(v, t)], d[(s, t)]) {
                        bc[v] += sigma[(s, v)] * sigma[(v, t)] / sigma[(s, t)];
                    }
                }
            }
        }

        let mut maxd = 0.0f64;
        let mut any = false;
        for i in 0..n {
            for j in 0..n {
                if i != j && d[(i, j)].is_finite() {
                    maxd = maxd.max(d[(i, j)]);
                    any = true;
                }
            }
        }
        let dsub = |i: usize, j: usize| if d[(i, j)].is_finite() { d[(i, j)] } else { 2.0 * maxd };

        let wmax = w.max();
        let mut local = DMatrix::zeros(n, 6);
        for i in 0..n {
            let nb: Vec<usize> = (0..n).filter(|&j| j != i && w[(i, j)] > 0.0).collect();
            let k = nb.len();
            if k >= 2 {
                let sub = DMatrix::from_fn(k, k, |a, b| if a == b { f64::INFINITY } else { len[(nb[a], nb[b])] });
                let ds = fw(&sub);
                let mut e = 0.0;
                let mut tri = 0.0;
                for a in 0..k {
                    for b in 0..k {
                        if a != b {
                            if ds[(a, b)].is_finite() {
                                e += 1.0 / ds[(a, b)];
                            }
                            let t = w[(i, nb[a])] * w[(i, nb[b])] * w[(nb[a], nb[b])];
                            tri += (t / (wmax * wmax * wmax)).powf(1.0 / 3.0);
                        }
                    }
                }
                local[(i, 0)] = e / (k * (k - 1)) as f64;
                local[(i, 1)] = tri / (k * (k - 1)) as f64;
            }
            local[(i, 2)] = (0..n).map(|j| w[(i, j)]).sum();
            local[(i, 3)] = bc[i];
            if any {
                let total: f64 = (0..n).filter(|&j| j != i).map(|j| dsub(i, j)).sum();
                local[(i, 4)] = if total > 0.0 { (n - 1) as f64 / total } else { 0.0 };
                local[(i, 5)] = (0..n).filter(|&j| j != i).map(|j| dsub(i, j)).fold(0.0, f64::max);
            }
        }

        let pairs = (n * (n - 1)) as f64;
        let mut cpl = 0.0;
        let mut ge = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    if any {
                        cpl += dsub(i, j);
                    }
                    if d[(i, j)].is_finite() {
                        ge += 1.0 / d[(i, j)];
                    }
                }
            }
        }
        let mut edges = 0.0;
        let (mut xs, mut ys) = (vec![], vec![]);
        for i in 0..n {
            for j in i + 1..n {
                if w[(i, j)] > 0.0 {
                    edges += 1.0;
                    xs.push(local[(i, 2)]);
                    ys.push(local[(j, 2)]);
                    xs.push(local[(j, 2)]);
                    ys.push(local[(i, 2)]);
                }
            }
        }
        let m = xs.len() as f64;
        let ga = if m > 0.0 {
            let (mx, my) = (xs.iter().sum::<f64>() / m, ys.iter().sum::<f64>() / m);
            let cov: f64 = xs.iter().zip(&ys).map(|(a, b)| (a - mx) * (b - my)).sum();
            let vx: f64 = xs.iter().map(|a| (a - mx).powi(2)).sum();
            let vy: f64 = ys.iter().map(|b| (b - my).powi(2)).sum();
            if vx * vy > 1e-20 { cov / (vx * vy).sqrt() } else { 0.0 }
        } else {
            0.0
        };
        Oracle {
            global: [
                cpl / pairs,
                ge / pairs,
                local.column(1).sum() / n as f64,
                edges / (n * (n - 1) / 2) as f64,
                ga,
            ],
            local,
        }
    }

    fn random_sparse_graph(seed: u64) -> WeightedGraph {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(2..=12);
        let keep = rng.gen_range(0.2..1.0);
        let w: Vec<f64> = (0..n * (n - 1) / 2)
            .map(|_| if rng.gen_bool(keep) { rng.gen_range(0.05..2.0) } else { 0.0 })
            .collect();
        graph(n, &w)
    }

    #[test]
    fn triangle_textbook_values() {
        let (local, global) = graph_metrics(&graph(3, &[1.0, 1.0, 1.0]));
        for i in 0..3 {
            assert_eq!(local[(i, 0)], 1.0);
            assert_eq!(local[(i, 1)], 1.0);
            assert_eq!(local[(i, 2)], 2.0);
            assert_eq!(local[(i, 3)], 0.0);
            assert_eq!(local[(i, 4)], 1.0);
            assert_eq!(local[(i, 5)], 1.0);
        }
        assert_eq!(global.to_array()[..4], [1.0, 1.0, 1.0, 1.0]);
        assert!(!global.ga_defined);
        assert_eq!(global.ga, 0.0);
    }

    #[test]
    fn path_textbook_values() {
        let (local, _) = graph_metrics(&graph(3, &[1.0, 0.0, 1.0]));
        assert_eq!(local[(1, 3)], 1.0);
        assert_eq!(local[(0, 3)], 0.0);
        assert_eq!(local[(0, 5)], 2.0);
        assert_eq!(local[(1, 5)], 1.0);
    }

    #[test]
    fn empty_graph_is_degenerate() {
        let (local, global) = graph_metrics(&graph(4, &[0.0; 6]));
        assert!(local.iter().all(|&v| v == 0.0));
        assert_eq!(global.density, 0.0);
        assert_eq!(global.ge, 0.0);
        assert_eq!(global.cpl, 0.0);
    }

    #[test]
    fn unreachable_pairs_use_doubled_diameter() {
        // edge 0–1 of weight 0.5 (length 2); node 2 isolated
        let (local, global) = graph_metrics(&graph(3, &[0.5, 0.0, 0.0]));
        assert_eq!(local[(2, 5)], 4.0);
        assert_eq!(local[(0, 5)], 4.0);
        assert_eq!(local[(0, 4)], 2.0 / 6.0);
        assert_eq!(global.cpl, (2.0 + 4.0 + 2.0 + 4.0 + 4.0 + 4.0) / 6.0);
        assert!((global.ge - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn matches_brute_force_oracle() {
        for seed in 0..60 {
            let g = random_sparse_graph(seed);
            let (local, global) = graph_metrics(&g);
            let o = oracle(&g);
            for i in 0..g.n() {
                for c in 0..6 {
                    let (a, b) = (local[(i, c)], o.local[(i, c)]);
                    assert!((a - b).abs() < 1e-9, "seed {seed} node {i} {}: {a} vs {b}", LOCAL_METRIC_NAMES[c]);
                }
            }
            for (c, (a, b)) in global.to_array().iter().zip(o.global).enumerate() {
                assert!((a - b).abs() < 1e-9, "seed {seed} {}: {a} vs {b}", GLOBAL_METRIC_NAMES[c]);
            }
        }
    }

    #[test]
    fn equal_length_paths_split_betweenness() {
        // 4-cycle with unit weights: each node lies on one of two shortest paths between
        // its two neighbours
        let (local, _) = graph_metrics(&graph(4, &[1.0, 0.0, 1.0, 1.0, 0.0, 1.0]));
        for i in 0..4 {
            assert!((local[(i, 3)] - 0.5).abs() < 1e-12);
        }
    }
}
