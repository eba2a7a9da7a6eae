//! Graph Fourier transform on the combinatorial Laplacian.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::graph::{laplacian, WeightedGraph};

pub const SPECTRAL_FEATURE_NAMES: [&str; 4] = ["energy", "power", "entropy", "amplitude"];

/// Laplacian eigenbasis with eigenvalues ascending. Each eigenvector's largest-magnitude entry
/// is positive; among entries tied to within 1e-9 the first one decides.
#[derive(Debug, Clone)]
pub struct FourierBasis {
    pub eigenvalues: DVector<f64>,
    pub u: DMatrix<f64>,
}

impl FourierBasis {
    pub fn new(g: &WeightedGraph) -> Self {
        let n = g.n();
        let eig = SymmetricEigen::new(laplacian(g));
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(a.cmp(&b)));
        let eigenvalues = DVector::from_iterator(n, order.iter().map(|&k| eig.eigenvalues[k]));
        let mut u = DMatrix::zeros(n, n);
        for (col, &k) in order.iter().enumerate() {
            let v = eig.eigenvectors.column(k);
            let top = v.amax();
            let peak = v.iter().position(|x| x.abs() >= top * (1.0 - 1e-9)).unwrap_or(0);
            let sign = if v[peak] < 0.0 { -1.0 } else { 1.0 };
            u.set_column(col, &(v * sign));
        }
        Self { eigenvalues, u }
    }

    pub fn forward(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.check(x)?;
        Ok(self.u.tr_mul(x))
    }

    pub fn inverse(&self, coeffs: &DVector<f64>) -> Result<DVector<f64>> {
        self.check(coeffs)?;
        Ok(&self.u * coeffs)
    }

    fn check(&self, x: &DVector<f64>) -> Result<()> {
        if x.len() != self.u.nrows() {
            return Err(Error::InvalidArgument(format!(
                "signal of length {} on a graph with {} nodes",
                x.len(),
                self.u.nrows()
            )));
        }
        Ok(())
    }
}

/// `x̂ = Uᵀx`.
pub fn gft(g: &WeightedGraph, signal: &DVector<f64>) -> Result<DVector<f64>> {
    FourierBasis::new(g).forward(signal)
}

/// Energy, power, spectral entropy and amplitude of a coefficient vector.
pub fn spectral_features(coeffs: &DVector<f64>) -> [f64; 4] {
    let energy = coeffs.norm_squared();
    if energy == 0.0 || coeffs.is_empty() {
        return [0.0; 4];
    }
    let entropy = -coeffs
        .iter()
        .map(|c| c * c / energy)
        .filter(|&p| p > 0.0)
        .map(|p| p * p.ln())
        .sum::<f64>();
    [energy, energy / coeffs.len() as f64, entropy, coeffs.amax()]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::WeightScheme;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_graph(n: usize, seed: u64) -> WeightedGraph {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w: Vec<f64> = (0..n * (n - 1) / 2).map(|_| rng.gen_range(0.01..1.0)).collect();
        WeightedGraph::from_edge_weights(n, &w, WeightScheme::Learned).unwrap()
    }

    #[test]
    fn constant_signal_lands_on_dc() {
        let g = random_graph(9, 4);
        let c = gft(&g, &DVector::from_element(9, 1.0)).unwrap();
        assert!((c[0] - 3.0).abs() < 1e-9);
        assert!(c.iter().skip(1).all(|v| v.abs() < 1e-9));
    }

    #[test]
    fn two_node_by_hand() {
        let g = WeightedGraph::from_edge_weights(2, &[1.0], WeightScheme::Gaussian).unwrap();
        let basis = FourierBasis::new(&g);
        assert!(basis.eigenvalues[0].abs() < 1e-12 && (basis.eigenvalues[1] - 2.0).abs() < 1e-12);
        // second eigenvector ±(1,−1)/√2 with the sign fixed so the first (tied) peak is positive
        let c = basis.forward(&DVector::from_vec(vec![1.0, -1.0])).unwrap();
        assert!(c[0].abs() < 1e-12);
        assert!((c[1] - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn spectral_feature_examples() {
        let n = 5.0f64;
        let dc = DVector::from_vec(vec![n.sqrt(), 0.0, 0.0, 0.0, 0.0]);
        let f = spectral_features(&dc);
        assert!((f[0] - n).abs() < 1e-12);
        assert!((f[1] - 1.0).abs() < 1e-12);
        assert_eq!(f[2], 0.0);
        assert!((f[3] - n.sqrt()).abs() < 1e-12);

        let flat = DVector::from_vec(vec![0.5, -0.5, 0.5, -0.5]);
        assert!((spectral_features(&flat)[2] - 4f64.ln()).abs() < 1e-12);
        assert_eq!(spectral_features(&DVector::zeros(4)), [0.0; 4]);
    }

    #[test]
    fn wrong_length_is_rejected() {
        assert!(gft(&random_graph(4, 0), &DVector::zeros(3)).is_err());
    }

    proptest! {
        #[test]
        fn parseval_and_inversion(seed in 0u64..1000, n in 2usize..30) {
            let g = random_graph(n, seed);
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabcd);
            let x = DVector::from_fn(n, |_, _| rng.gen_range(-3.0..3.0));
            let basis = FourierBasis::new(&g);
            let c = basis.forward(&x).unwrap();
            prop_assert!((c.norm() - x.norm()).abs() < 1e-9);
            prop_assert!((basis.inverse(&c).unwrap() - &x).amax() < 1e-9);
            for k in 1..n {
                prop_assert!(basis.eigenvalues[k] >= basis.eigenvalues[k - 1]);
            }
            prop_assert!(basis.eigenvalues[0].abs() < 1e-9);
        }
    }
}
