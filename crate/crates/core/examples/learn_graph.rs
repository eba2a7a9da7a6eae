//! Learns edge weights by majorization-minimization and prints the objective trace.

use lesiongraph::graph::pairwise_distances;
use lesiongraph::graphlearn::{learn_weights, LearnConfig};
use lesiongraph::signals::{build_signal_matrix, SignalKind};
use lesiongraph::superpixel::{segment_rgb, SlicParams};
use lesiongraph::synth::synthetic_corpus;

fn main() -> lesiongraph::Result<()> {
    let img = &synthetic_corpus(2, 64, 8)?[1];
    let map = segment_rgb(&img.pixels, 40, &SlicParams::default())?;
    let signals = build_signal_matrix(&img.pixels, &map, SignalKind::Color)?;
    let d = pairwise_distances(&signals.minmax_scaled());
    let outcome = learn_weights(&d, &LearnConfig::default())?;
    for t in outcome.trace.iter().step_by(25) {
        println!("iter {:>4}  f = {:.10}", t.iteration, t.objective);
    }
    println!(
        "converged: {} after {} iterations (objective change below epsilon at {:?})",
        outcome.converged,
        outcome.iterations(),
        outcome.objective_rule_iteration
    );
    let w = &outcome.edge_weights;
    println!("edge weights: min {:.4}, max {:.4}, mean {:.4}", w.min(), w.max(), w.mean());
    Ok(())
}
