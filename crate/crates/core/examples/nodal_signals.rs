//! Colour, geometric and texture descriptors for the superpixels of one image.

use lesiongraph::signals::{build_signal_matrix, SignalKind};
use lesiongraph::superpixel::{segment_rgb, SlicParams};
use lesiongraph::synth::synthetic_corpus;

fn main() -> lesiongraph::Result<()> {
    let corpus = synthetic_corpus(2, 64, 5)?;
    for img in &corpus {
        let map = segment_rgb(&img.pixels, 20, &SlicParams::default())?;
        println!("{} ({}):", img.id, img.label.as_str());
        for kind in SignalKind::ALL {
            let s = build_signal_matrix(&img.pixels, &map, kind)?;
            let spread: Vec<String> = s
                .x
                .column_iter()
                .map(|c| format!("{:.3}", c.variance().sqrt()))
                .collect();
            println!("  {:>9}: {}x{} matrix, column std [{}]", kind.as_str(), s.n(), s.m(), spread.join(" "));
        }
    }
    Ok(())
}
