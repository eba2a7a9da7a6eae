//! SLIC superpixels in CIELAB space.
//!
//! Standard k-means over `(L, a, b, x, y)` restricted to a local window per center, followed by
//! a connectivity pass (orphan fragments join the neighbor they share the longest border with)
//! and, when `exact_n` is set, an exact-count pass that merges the smallest region into its most
//! similar neighbor or splits the largest region until the count matches the target.

use std::collections::{BTreeMap, VecDeque};

use image::RgbImage;

use super::color::{lab_pixels, Lab};
use super::map::{canonical_relabel, connected_components, neighbors4, SuperpixelMap};
use crate::error::{Error, Result};
use crate::ingest::LabelledImage;

pub const DEFAULT_COMPACTNESS: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlicParams {
    pub compactness: f64,
    pub iterations: usize,
    pub exact_n: bool,
}

impl Default for SlicParams {
    fn default() -> Self {
        Self {
            compactness: DEFAULT_COMPACTNESS,
            iterations: 10,
            exact_n: true,
        }
    }
}

/// SLIC with default iteration count and exact-count enforcement on.
pub fn slic_segment(image: &LabelledImage, n_target: usize, compactness: f64) -> Result<SuperpixelMap> {
    let params = SlicParams {
        compactness,
        ..SlicParams::default()
    };
    segment_rgb(&image.pixels, n_target, &params)
}

pub fn segment_rgb(img: &RgbImage, n_target: usize, params: &SlicParams) -> Result<SuperpixelMap> {
    let (width, height) = (img.width() as usize, img.height() as usize);
    let total = width * height;
    if n_target == 0 || n_target > total {
        return Err(Error::InvalidArgument(format!(
            "superpixel target {n_target} must lie in 1..={total} (pixel count)"
        )));
    }
    if !(params.compactness > 0.0) {
        return Err(Error::InvalidArgument("compactness must be positive".into()));
    }
    if n_target == 1 {
        return Ok(SuperpixelMap::single(width, height, 0));
    }

    let lab = lab_pixels(img);
    let labels = kmeans(&lab, width, height, n_target, params);
    let labels = enforce_connectivity(width, height, &labels);
    let mut regions = Regions::new(width, height, &labels, &lab);
    if params.exact_n {
        regions.force_count(n_target);
    }
    SuperpixelMap::from_labels(width, height, regions.labels, 0)
}

#[derive(Debug, Clone, Copy)]
struct Center {
    lab: Lab,
    x: f64,
    y: f64,
}

fn grid_shape(n: usize, width: usize, height: usize) -> (usize, usize) {
    let aspect = width as f64 / height as f64;
    let nx = ((n as f64 * aspect).sqrt().round() as usize).clamp(1, width);
    let ny = ((n as f64 / nx as f64).round() as usize).clamp(1, height);
    (nx, ny)
}

fn gradient(lab: &[Lab], width: usize, height: usize, x: usize, y: usize) -> f64 {
    let at = |x: usize, y: usize| lab[y * width + x];
    let (x0, x1) = (x.saturating_sub(1), (x + 1).min(width - 1));
    let (y0, y1) = (y.saturating_sub(1), (y + 1).min(height - 1));
    let sq = |p: Lab, q: Lab| (p.l - q.l).powi(2) + (p.a - q.a).powi(2) + (p.b - q.b).powi(2);
    sq(at(x1, y), at(x0, y)) + sq(at(x, y1), at(x, y0))
}

fn kmeans(lab: &[Lab], width: usize, height: usize, n_target: usize, params: &SlicParams) -> Vec<u32> {
    let total = width * height;
    let step = (total as f64 / n_target as f64).sqrt();
    let (nx, ny) = grid_shape(n_target, width, height);
    let (sx, sy) = (width as f64 / nx as f64, height as f64 / ny as f64);

    let mut centers = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let fx = (i as f64 + 0.5) * sx - 0.5;
            let fy = (j as f64 + 0.5) * sy - 0.5;
            let cx = (fx.round() as usize).min(width - 1);
            let cy = (fy.round() as usize).min(height - 1);
            // move to the lowest-gradient pixel of the 3x3 neighborhood, if strictly lower
            let (mut bx, mut by) = (cx, cy);
            let mut best = gradient(lab, width, height, cx, cy);
            let mut moved = false;
            for yy in cy.saturating_sub(1)..=(cy + 1).min(height - 1) {
                for xx in cx.saturating_sub(1)..=(cx + 1).min(width - 1) {
                    let g = gradient(lab, width, height, xx, yy);
                    if g < best {
                        best = g;
                        bx = xx;
                        by = yy;
                        moved = true;
                    }
                }
            }
            let (x, y) = if moved { (bx as f64, by as f64) } else { (fx, fy) };
            centers.push(Center {
                lab: lab[by * width + bx],
                x,
                y,
            });
        }
    }

    let radius = step.max(sx).max(sy).ceil() as i64;
    let spatial_scale = (params.compactness / step).powi(2);
    let mut labels = vec![0u32; total];
    let mut dist = vec![f64::INFINITY; total];

    for _ in 0..params.iterations.max(1) {
        dist.iter_mut().for_each(|d| *d = f64::INFINITY);
        for (k, c) in centers.iter().enumerate() {
            let (cx, cy) = (c.x.round() as i64, c.y.round() as i64);
            let x0 = (cx - radius).max(0) as usize;
            let x1 = ((cx + radius).min(width as i64 - 1)) as usize;
            let y0 = (cy - radius).max(0) as usize;
            let y1 = ((cy + radius).min(height as i64 - 1)) as usize;
            for y in y0..=y1 {
                for x in x0..=x1 {
                    let idx = y * width + x;
                    let p = lab[idx];
                    let dc = (p.l - c.lab.l).powi(2) + (p.a - c.lab.a).powi(2) + (p.b - c.lab.b).powi(2);
                    let ds = (x as f64 - c.x).powi(2) + (y as f64 - c.y).powi(2);
                    let d = dc + ds * spatial_scale;
                    if d < dist[idx] {
                        dist[idx] = d;
                        labels[idx] = k as u32;
                    }
                }
            }
        }

        let mut sums = vec![[0.0f64; 6]; centers.len()];
        for (idx, &l) in labels.iter().enumerate() {
            let s = &mut sums[l as usize];
            let p = lab[idx];
            s[0] += p.l;
            s[1] += p.a;
            s[2] += p.b;
            s[3] += (idx % width) as f64;
            s[4] += (idx / width) as f64;
            s[5] += 1.0;
        }
        for (c, s) in centers.iter_mut().zip(&sums) {
            if s[5] > 0.0 {
                *c = Center {
                    lab: Lab::new(s[0] / s[5], s[1] / s[5], s[2] / s[5]),
                    x: s[3] / s[5],
                    y: s[4] / s[5],
                };
            }
        }
    }
    labels
}

/// Keeps the largest 4-connected fragment of every label; every other fragment joins the
/// neighboring region it shares the longest border with.
fn enforce_connectivity(width: usize, height: usize, labels: &[u32]) -> Vec<u32> {
    let comp = connected_components(width, height, labels);
    let n_comp = comp.iter().map(|&c| c as usize + 1).max().unwrap_or(0);
    let mut size = vec![0usize; n_comp];
    let mut comp_label = vec![0u32; n_comp];
    for (idx, &c) in comp.iter().enumerate() {
        size[c as usize] += 1;
        comp_label[c as usize] = labels[idx];
    }
    // largest component per label (ties: lowest component id)
    let mut keeper: BTreeMap<u32, usize> = BTreeMap::new();
    for c in 0..n_comp {
        let l = comp_label[c];
        match keeper.get(&l) {
            Some(&k) if size[k] >= size[c] => {}
            _ => {
                keeper.insert(l, c);
            }
        }
    }
    // owner[c] = component whose region c ends up in; kept components own themselves
    let mut owner: Vec<Option<usize>> = vec![None; n_comp];
    for &k in keeper.values() {
        owner[k] = Some(k);
    }
    let mut comp_pixels = vec![Vec::new(); n_comp];
    for (idx, &c) in comp.iter().enumerate() {
        comp_pixels[c as usize].push(idx);
    }
    loop {
        let mut changed = false;
        let mut pending = false;
        for c in 0..n_comp {
            if owner[c].is_some() {
                continue;
            }
            let mut border: BTreeMap<usize, usize> = BTreeMap::new();
            for &idx in &comp_pixels[c] {
                for (nx, ny) in neighbors4(idx % width, idx / width, width, height) {
                    let nc = comp[ny * width + nx] as usize;
                    if nc != c {
                        if let Some(o) = owner[nc] {
                            *border.entry(o).or_insert(0) += 1;
                        }
                    }
                }
            }
            match border.iter().max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0))) {
                Some((&o, _)) => {
                    owner[c] = Some(o);
                    changed = true;
                }
                None => pending = true,
            }
        }
        if !pending || !changed {
            break;
        }
    }
    comp.iter()
        .map(|&c| {
            let o = owner[c as usize].unwrap_or(c as usize);
            comp_label[o]
        })
        .collect()
}

/// Mutable region bookkeeping used by the exact-count pass.
struct Regions<'a> {
    width: usize,
    height: usize,
    labels: Vec<u32>,
    pixels: Vec<Vec<usize>>,
    lab: &'a [Lab],
}

impl<'a> Regions<'a> {
    fn new(width: usize, height: usize, labels: &[u32], lab: &'a [Lab]) -> Self {
        let (labels, n) = canonical_relabel(labels);
        let mut pixels = vec![Vec::new(); n];
        for (idx, &l) in labels.iter().enumerate() {
            pixels[l as usize].push(idx);
        }
        Self {
            width,
            height,
            labels,
            pixels,
            lab,
        }
    }

    fn count(&self) -> usize {
        self.pixels.len()
    }

    fn mean_lab(&self, r: usize) -> Lab {
        let n = self.pixels[r].len() as f64;
        let (mut l, mut a, mut b) = (0.0, 0.0, 0.0);
        for &idx in &self.pixels[r] {
            let p = self.lab[idx];
            l += p.l;
            a += p.a;
            b += p.b;
        }
        Lab::new(l / n, a / n, b / n)
    }

    fn border_lengths(&self, r: usize) -> BTreeMap<usize, usize> {
        let mut border = BTreeMap::new();
        for &idx in &self.pixels[r] {
            for (nx, ny) in neighbors4(idx % self.width, idx / self.width, self.width, self.height) {
                let other = self.labels[ny * self.width + nx] as usize;
                if other != r {
                    *border.entry(other).or_insert(0) += 1;
                }
            }
        }
        border
    }

    /// Moves region `from` into `into`, then fills the hole with the last region id.
    fn merge(&mut self, from: usize, into: usize) {
        let moved = std::mem::take(&mut self.pixels[from]);
        for &idx in &moved {
            self.labels[idx] = into as u32;
        }
        self.pixels[into].extend(moved);
        let last = self.pixels.len() - 1;
        if from != last {
            let tail = self.pixels.pop().unwrap();
            for &idx in &tail {
                self.labels[idx] = from as u32;
            }
            self.pixels[from] = tail;
        } else {
            self.pixels.pop();
        }
    }

    fn merge_smallest(&mut self) {
        let smallest = (0..self.count())
            .min_by_key(|&r| (self.pixels[r].len(), r))
            .expect("at least two regions");
        let mean = self.mean_lab(smallest);
        let border = self.border_lengths(smallest);
        let target = border
            .iter()
            .map(|(&other, &len)| {
                let m = self.mean_lab(other);
                let d = (m.l - mean.l).powi(2) + (m.a - mean.a).powi(2) + (m.b - mean.b).powi(2);
                (other, d, len)
            })
            .min_by(|a, b| a.1.total_cmp(&b.1).then(b.2.cmp(&a.2)).then(a.0.cmp(&b.0)))
            .map(|(o, _, _)| o)
            .expect("a region in a connected image has a neighbor");
        self.merge(smallest, target);
    }

    /// Splits the largest region in two 4-connected halves by growing a BFS front from its
    /// extreme pixel along the longer bounding-box axis.
    fn split_largest(&mut self) {
        let r = (0..self.count())
            .max_by(|&a, &b| self.pixels[a].len().cmp(&self.pixels[b].len()).then(b.cmp(&a)))
            .expect("at least one region");
        let pix = &self.pixels[r];
        let w = self.width;
        let (min_x, max_x) = pix.iter().fold((usize::MAX, 0), |(lo, hi), &i| (lo.min(i % w), hi.max(i % w)));
        let (min_y, max_y) = pix.iter().fold((usize::MAX, 0), |(lo, hi), &i| (lo.min(i / w), hi.max(i / w)));
        let start = if max_x - min_x >= max_y - min_y {
            *pix.iter().min_by_key(|&&i| (i % w, i / w)).unwrap()
        } else {
            *pix.iter().min_by_key(|&&i| (i / w, i % w)).unwrap()
        };

        let half = pix.len() / 2;
        let mut in_first = vec![false; self.labels.len()];
        let mut visited = vec![false; self.labels.len()];
        let mut queue = VecDeque::from([start]);
        visited[start] = true;
        let mut taken = 0;
        while let Some(idx) = queue.pop_front() {
            if taken == half {
                break;
            }
            in_first[idx] = true;
            taken += 1;
            for (nx, ny) in neighbors4(idx % w, idx / w, w, self.height) {
                let nidx = ny * w + nx;
                if !visited[nidx] && self.labels[nidx] as usize == r {
                    visited[nidx] = true;
                    queue.push_back(nidx);
                }
            }
        }

        // components of the remainder: the largest becomes the new region, others rejoin the first half
        let rest: Vec<usize> = pix.iter().copied().filter(|&i| !in_first[i]).collect();
        let mut comp_of = vec![usize::MAX; self.labels.len()];
        let mut comps: Vec<Vec<usize>> = Vec::new();
        for &s in &rest {
            if comp_of[s] != usize::MAX {
                continue;
            }
            let id = comps.len();
            let mut members = vec![s];
            comp_of[s] = id;
            let mut q = VecDeque::from([s]);
            while let Some(idx) = q.pop_front() {
                for (nx, ny) in neighbors4(idx % w, idx / w, w, self.height) {
                    let nidx = ny * w + nx;
                    if self.labels[nidx] as usize == r && !in_first[nidx] && comp_of[nidx] == usize::MAX {
                        comp_of[nidx] = id;
                        members.push(nidx);
                        q.push_back(nidx);
                    }
                }
            }
            comps.push(members);
        }
        let biggest = (0..comps.len())
            .max_by(|&a, &b| comps[a].len().cmp(&comps[b].len()).then(b.cmp(&a)))
            .expect("remainder is non-empty");
        let new_id = self.count();
        let new_pixels = std::mem::take(&mut comps[biggest]);
        for &idx in &new_pixels {
            self.labels[idx] = new_id as u32;
        }
        self.pixels[r].retain(|&i| comp_of[i] != biggest || in_first[i]);
        self.pixels.push(new_pixels);
    }

    fn force_count(&mut self, n_target: usize) {
        while self.count() > n_target {
            self.merge_smallest();
        }
        while self.count() < n_target {
            self.split_largest();
        }
    }
}
