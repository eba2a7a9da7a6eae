use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::error::{Error, Result};

/// Pixel → node labeling for one level.
///
/// Labels are dense (`0..n`), every node is non-empty and 4-connected. Maps built by this
/// crate are canonical: node ids are assigned in raster order of each node's first pixel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuperpixelMap {
    width: usize,
    height: usize,
    labels: Vec<u32>,
    n: usize,
    pub level_index: usize,
}

impl SuperpixelMap {
    /// Builds a map from arbitrary labels, renumbering them canonically.
    pub fn from_labels(width: usize, height: usize, labels: Vec<u32>, level_index: usize) -> Result<Self> {
        if labels.len() != width * height || labels.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "label buffer has {} entries, expected {}x{}",
                labels.len(),
                width,
                height
            )));
        }
        let (labels, n) = canonical_relabel(&labels);
        Ok(Self {
            width,
            height,
            labels,
            n,
            level_index,
        })
    }

    /// Single node covering the whole image.
    pub fn single(width: usize, height: usize, level_index: usize) -> Self {
        Self {
            width,
            height,
            labels: vec![0; width * height],
            n: 1,
            level_index,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn label_at(&self, x: usize, y: usize) -> usize {
        self.labels[y * self.width + x] as usize
    }

    /// Pixel indices (row-major) of every node.
    pub fn node_pixels(&self) -> Vec<Vec<usize>> {
        let mut nodes = vec![Vec::new(); self.n];
        for (idx, &l) in self.labels.iter().enumerate() {
            nodes[l as usize].push(idx);
        }
        nodes
    }

    pub fn node_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.n];
        for &l in &self.labels {
            sizes[l as usize] += 1;
        }
        sizes
    }

    /// Shared 4-connected boundary length for every adjacent node pair `(a, b)` with `a < b`.
    pub fn adjacency(&self) -> BTreeMap<(usize, usize), usize> {
        let mut adj = BTreeMap::new();
        let mut bump = |a: u32, b: u32| {
            if a != b {
                let key = (a.min(b) as usize, a.max(b) as usize);
                *adj.entry(key).or_insert(0) += 1;
            }
        };
        for y in 0..self.height {
            for x in 0..self.width {
                let l = self.labels[y * self.width + x];
                if x + 1 < self.width {
                    bump(l, self.labels[y * self.width + x + 1]);
                }
                if y + 1 < self.height {
                    bump(l, self.labels[(y + 1) * self.width + x]);
                }
            }
        }
        adj
    }

    /// Checks the structural invariants: dense labels, non-empty and 4-connected nodes.
    pub fn validate(&self) -> Result<()> {
        if self.labels.iter().any(|&l| l as usize >= self.n) {
            return Err(Error::InvalidArgument("label out of range".into()));
        }
        let sizes = self.node_sizes();
        if let Some(empty) = sizes.iter().position(|&s| s == 0) {
            return Err(Error::InvalidArgument(format!("node {empty} is empty")));
        }
        let components = connected_components(self.width, self.height, &self.labels);
        let distinct: BTreeSet<u32> = components.iter().copied().collect();
        if distinct.len() != self.n {
            return Err(Error::InvalidArgument(format!(
                "{} connected components for {} nodes",
                distinct.len(),
                self.n
            )));
        }
        Ok(())
    }
}

/// Renumbers labels in order of first raster appearance. Returns the new labels and count.
pub(crate) fn canonical_relabel(labels: &[u32]) -> (Vec<u32>, usize) {
    let mut mapping: BTreeMap<u32, u32> = BTreeMap::new();
    let mut out = Vec::with_capacity(labels.len());
    for &l in labels {
        let next = mapping.len() as u32;
        out.push(*mapping.entry(l).or_insert(next));
    }
    (out, mapping.len())
}

/// 4-connected component id per pixel. Components of equal label that touch only diagonally
/// are distinct.
pub(crate) fn connected_components(width: usize, height: usize, labels: &[u32]) -> Vec<u32> {
    const UNSET: u32 = u32::MAX;
    let mut comp = vec![UNSET; labels.len()];
    let mut next = 0u32;
    let mut queue = VecDeque::new();
    for start in 0..labels.len() {
        if comp[start] != UNSET {
            continue;
        }
        comp[start] = next;
        queue.push_back(start);
        while let Some(idx) = queue.pop_front() {
            let (x, y) = (idx % width, idx / width);
            for (nx, ny) in neighbors4(x, y, width, height) {
                let nidx = ny * width + nx;
                if comp[nidx] == UNSET && labels[nidx] == labels[start] {
                    comp[nidx] = next;
                    queue.push_back(nidx);
                }
            }
        }
        next += 1;
    }
    comp
}

pub(crate) fn neighbors4(x: usize, y: usize, width: usize, height: usize) -> impl Iterator<Item = (usize, usize)> {
    let mut out = [(usize::MAX, usize::MAX); 4];
    let mut k = 0;
    if x > 0 {
        out[k] = (x - 1, y);
        k += 1;
    }
    if x + 1 < width {
        out[k] = (x + 1, y);
        k += 1;
    }
    if y > 0 {
        out[k] = (x, y - 1);
        k += 1;
    }
    if y + 1 < height {
        out[k] = (x, y + 1);
        k += 1;
    }
    out.into_iter().take(k)
}
