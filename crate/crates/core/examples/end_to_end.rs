//! Full pipeline on a generated corpus: SEG levels 20..100, learned weights, colour signals.
//!
//! ```text
//! cargo run --release --example end_to_end -- [n_images] [out_dir]
//! ```

use std::path::PathBuf;
use std::time::Instant;

use lesiongraph::pipeline::{contribution_table, run_pipeline, PipelineConfig};
use lesiongraph::synth::synthetic_corpus;

fn main() -> lesiongraph::Result<()> {
    env_logger::init();
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(40);
    let out = args.next().map_or_else(|| std::env::temp_dir().join("lesiongraph-e2e"), PathBuf::from);

    let images = synthetic_corpus(n, 64, 2024)?;
    let config = PipelineConfig::default();
    let start = Instant::now();
    let run = run_pipeline(&config, &images, &out)?;
    println!("artifacts: {}", run.dir.root().display());
    println!("{} images, {} fused features, {:.1}s", n, run.table.n_features(), start.elapsed().as_secs_f64());
    for (name, c) in &run.report.classifiers {
        let a = &c.aggregate;
        println!("{name:>7}: AC {:.3}  SPEC {:.3}  SENS {:.3}  AUC {:.3}", a.ac, a.spec, a.sens, a.auc);
    }
    println!("selected features by source:");
    for row in contribution_table(&run.report) {
        println!("  {:>14} {:>5} {:6.2}%", row.source, row.count, row.percent);
    }
    Ok(())
}
