//! Segments one synthetic lesion at several superpixel counts, in both ensemble and hierarchy
//! mode, and writes the label maps as 16-bit PNGs.

use lesiongraph::superpixel::io::write_multilevel;
use lesiongraph::superpixel::{ensemble_rgb, hierarchy_rgb, SlicParams};
use lesiongraph::synth::synthetic_corpus;

fn main() -> lesiongraph::Result<()> {
    let corpus = synthetic_corpus(2, 96, 11)?;
    let img = &corpus[1];
    let out = std::env::temp_dir().join("lesiongraph-segments");
    let params = SlicParams::default();

    let seg = ensemble_rgb(&img.pixels, &[20, 40, 60, 80, 100], &params)?;
    let shg = hierarchy_rgb(&img.pixels, &[5, 10, 20, 40, 80], &params)?;
    for (name, maps) in [("seg", &seg), ("shg", &shg)] {
        write_multilevel(maps, &out.join(name))?;
        let sizes: Vec<String> = maps
            .maps
            .iter()
            .map(|m| {
                let s = m.node_sizes();
                format!("n={} (sizes {}..{})", m.n(), s.iter().min().unwrap(), s.iter().max().unwrap())
            })
            .collect();
        println!("{name}: {}", sizes.join(", "));
    }
    if let Some(parents) = &shg.parents {
        println!("shg: node 0 of the 10-node level merges into node {} of the 5-node level", parents[0][0]);
    }
    println!("label maps written under {}", out.display());
    Ok(())
}
