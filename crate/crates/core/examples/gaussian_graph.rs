//! Gaussian-kernel graph from descriptor distances, then pruning of the weakest edges.

use lesiongraph::graph::{gaussian_weights_with_params, laplacian, pairwise_distances, prune};
use lesiongraph::signals::{build_signal_matrix, SignalKind};
use lesiongraph::superpixel::{segment_rgb, SlicParams};
use lesiongraph::synth::synthetic_corpus;

fn main() -> lesiongraph::Result<()> {
    let img = &synthetic_corpus(1, 64, 3)?[0];
    let map = segment_rgb(&img.pixels, 20, &SlicParams::default())?;
    let signals = build_signal_matrix(&img.pixels, &map, SignalKind::Color)?;
    let d = pairwise_distances(&signals.minmax_scaled());
    let (g, params) = gaussian_weights_with_params(&d)?;
    println!("mu = {:.4}, sigma^2 = {:.4}, {} edges", params.mu, params.sigma2, g.edge_count());
    for tau in [0.0, 0.25, 0.5, 0.75] {
        let p = prune(&g, tau)?;
        let lap = laplacian(&p);
        println!("tau = {tau:.2}: {:>3} edges, trace(L) = {:.3}", p.edge_count(), lap.trace());
    }
    Ok(())
}
