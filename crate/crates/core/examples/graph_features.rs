//! Vertex-domain metrics, graph Fourier coefficients and the fused per-level feature vector.

use lesiongraph::features::{graph_feature_vector, graph_metrics, FourierBasis, LOCAL_METRIC_NAMES, GLOBAL_METRIC_NAMES};
use lesiongraph::graph::{gaussian_weights, pairwise_distances};
use lesiongraph::pipeline::scaled_signals;
use lesiongraph::signals::{build_signal_matrix, SignalKind};
use lesiongraph::superpixel::{segment_rgb, SlicParams};
use lesiongraph::synth::synthetic_corpus;
use nalgebra::DVector;

fn main() -> lesiongraph::Result<()> {
    let img = &synthetic_corpus(2, 64, 4)?[1];
    let map = segment_rgb(&img.pixels, 20, &SlicParams::default())?;
    let signals = scaled_signals(&build_signal_matrix(&img.pixels, &map, SignalKind::Color)?);
    let g = gaussian_weights(&pairwise_distances(&signals.x))?;

    let (local, global) = graph_metrics(&g);
    println!("node 0: {:?}", LOCAL_METRIC_NAMES.iter().zip(local.row(0).iter()).collect::<Vec<_>>());
    println!("global: {:?}", GLOBAL_METRIC_NAMES.iter().zip(global.to_array()).collect::<Vec<_>>());

    let basis = FourierBasis::new(&g);
    let x = DVector::from_vec(signals.row_means());
    let coeffs = basis.forward(&x)?;
    println!("eigenvalues 0..4: {:.4?}", &basis.eigenvalues.as_slice()[..4]);
    println!("|x| = {:.6}, |x_hat| = {:.6}", x.norm(), coeffs.norm());

    let v = graph_feature_vector(&g, &signals)?;
    println!("feature vector: {} values ({} vertex-domain + {} spectral)", v.len(), v.f1_len, v.f2_len);
    Ok(())
}
