use std::collections::BTreeSet;

use image::RgbImage;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::color::{ciede2000, lab_pixels, Lab};
use super::map::SuperpixelMap;
use super::slic::{segment_rgb, SlicParams};
use crate::error::{Error, Result};
use crate::ingest::LabelledImage;

pub const DEFAULT_ENSEMBLE_LEVELS: [usize; 5] = [20, 40, 60, 80, 100];
pub const DEFAULT_HIERARCHY_LEVELS: [usize; 5] = [5, 10, 20, 40, 80];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MapMode {
    /// Levels segmented independently (SEG).
    Ensemble,
    /// Each coarser level merges regions of the next finer one (SHG).
    Hierarchy,
}

impl MapMode {
    pub fn as_str(self) -> &'static str {
        match self {
            MapMode::Ensemble => "ensemble",
            MapMode::Hierarchy => "hierarchy",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiLevelMaps {
    /// Ordered coarse → fine.
    pub maps: Vec<SuperpixelMap>,
    pub mode: MapMode,
    /// Hierarchy only: `parents[l][fine_node]` is the node of `maps[l]` that contains
    /// `fine_node` of `maps[l + 1]`.
    pub parents: Option<Vec<Vec<usize>>>,
}

impl MultiLevelMaps {
    pub fn node_counts(&self) -> Vec<usize> {
        self.maps.iter().map(SuperpixelMap::n).collect()
    }
}

/// Independent SLIC map per level, returned in the order the levels were given.
pub fn build_ensemble(image: &LabelledImage, levels: &[usize], params: &SlicParams) -> Result<MultiLevelMaps> {
    ensemble_rgb(&image.pixels, levels, params)
}

pub fn ensemble_rgb(img: &RgbImage, levels: &[usize], params: &SlicParams) -> Result<MultiLevelMaps> {
    if levels.is_empty() {
        return Err(Error::InvalidArgument("at least one level is required".into()));
    }
    let maps = levels
        .par_iter()
        .enumerate()
        .map(|(i, &n)| {
            let mut map = segment_rgb(img, n, params)?;
            map.level_index = i;
            Ok(map)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MultiLevelMaps {
        maps,
        mode: MapMode::Ensemble,
        parents: None,
    })
}

/// SLIC at the finest level, then greedy CIEDE2000 merging of adjacent regions down to each
/// coarser level.
pub fn build_hierarchy(image: &LabelledImage, levels: &[usize], params: &SlicParams) -> Result<MultiLevelMaps> {
    hierarchy_rgb(&image.pixels, levels, params)
}

pub fn hierarchy_rgb(img: &RgbImage, levels: &[usize], params: &SlicParams) -> Result<MultiLevelMaps> {
    if levels.is_empty() {
        return Err(Error::InvalidArgument("at least one level is required".into()));
    }
    if levels.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument(format!(
            "hierarchy levels must be strictly increasing, got {levels:?}"
        )));
    }
    let finest_target = *levels.last().unwrap();
    let finest = segment_rgb(img, finest_target, params)?;
    if finest.n() < finest_target {
        return Err(Error::InvalidArgument(format!(
            "finest segmentation produced {} regions, fewer than the {finest_target} requested",
            finest.n()
        )));
    }
    let lab = lab_pixels(img);
    let mut finest = if finest.n() > finest_target {
        merge_to_count(&finest, &lab, finest_target).0
    } else {
        finest
    };
    finest.level_index = levels.len() - 1;

    let mut maps = vec![finest];
    let mut parents = Vec::new();
    for (i, &target) in levels.iter().enumerate().rev().skip(1) {
        let (mut coarse, parent) = merge_to_count(maps.last().unwrap(), &lab, target);
        coarse.level_index = i;
        maps.push(coarse);
        parents.push(parent);
    }
    maps.reverse();
    parents.reverse();
    Ok(MultiLevelMaps {
        maps,
        mode: MapMode::Hierarchy,
        parents: Some(parents),
    })
}

/// Repeatedly merges the adjacent region pair with the smallest CIEDE2000 distance between
/// mean Lab colors until `target` regions remain. Means are recomputed after every merge.
/// Returns the coarse map and the fine → coarse parent of every fine node.
pub fn merge_to_count(fine: &SuperpixelMap, lab: &[Lab], target: usize) -> (SuperpixelMap, Vec<usize>) {
    let n = fine.n();
    assert!(target >= 1 && target <= n, "merge target {target} outside 1..={n}");

    let mut sums = vec![[0.0f64; 3]; n];
    let mut counts = vec![0usize; n];
    for (idx, &l) in fine.labels().iter().enumerate() {
        let s = &mut sums[l as usize];
        s[0] += lab[idx].l;
        s[1] += lab[idx].a;
        s[2] += lab[idx].b;
        counts[l as usize] += 1;
    }
    let mut neighbors: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for &(a, b) in fine.adjacency().keys() {
        neighbors[a].insert(b);
        neighbors[b].insert(a);
    }
    let mut region_of: Vec<usize> = (0..n).collect();
    let mut alive: BTreeSet<usize> = (0..n).collect();
    let mean = |s: &[f64; 3], c: usize| Lab::new(s[0] / c as f64, s[1] / c as f64, s[2] / c as f64);

    while alive.len() > target {
        let mut best: Option<(f64, usize, usize)> = None;
        for &a in &alive {
            let ma = mean(&sums[a], counts[a]);
            for &b in neighbors[a].range(a + 1..) {
                let d = ciede2000(ma, mean(&sums[b], counts[b]));
                if best.map_or(true, |(bd, _, _)| d < bd) {
                    best = Some((d, a, b));
                }
            }
        }
        // a connected image always has an adjacent pair while more than one region remains
        let (_, keep, gone) = best.expect("adjacent pair");
        for k in 0..3 {
            sums[keep][k] += sums[gone][k];
        }
        counts[keep] += counts[gone];
        let moved = std::mem::take(&mut neighbors[gone]);
        for other in moved {
            neighbors[other].remove(&gone);
            if other != keep {
                neighbors[other].insert(keep);
                neighbors[keep].insert(other);
            }
        }
        neighbors[keep].remove(&gone);
        for r in region_of.iter_mut() {
            if *r == gone {
                *r = keep;
            }
        }
        alive.remove(&gone);
    }

    let coarse_labels: Vec<u32> = fine.labels().iter().map(|&l| region_of[l as usize] as u32).collect();
    let coarse = SuperpixelMap::from_labels(fine.width(), fine.height(), coarse_labels, fine.level_index)
        .expect("same dimensions as the fine map");
    let mut parent = vec![usize::MAX; n];
    for (idx, &l) in fine.labels().iter().enumerate() {
        parent[l as usize] = coarse.labels()[idx] as usize;
    }
    (coarse, parent)
}
