//! Per-superpixel descriptors (nodal signals).
//!
//! | kind      | m | entries |
//! |-----------|---|---------|
//! | color     | 9 | mean R,G,B in [0,1]; mean L,a,b; population std R,G,B |
//! | geometric | 6 | area, perimeter, 4π·area/perimeter², eccentricity, solidity, centroid offset |
//! | texture   | 8 | gray mean, std, skewness, excess kurtosis; GLCM contrast, energy, homogeneity, correlation |
//!
//! Perimeter counts exposed pixel sides (a 10×10 square has perimeter 40). The centroid offset is
//! the distance from the node centroid to the image center divided by the half diagonal, so it is
//! the only entry that changes when a node is translated.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use image::RgbImage;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::superpixel::{rgb_to_lab, SuperpixelMap};

pub const COLOR_DIM: usize = 9;
pub const GEOMETRIC_DIM: usize = 6;
pub const TEXTURE_DIM: usize = 8;
pub const GLCM_LEVELS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SignalKind {
    Color,
    Geometric,
    Texture,
}

impl SignalKind {
    pub const ALL: [SignalKind; 3] = [SignalKind::Color, SignalKind::Geometric, SignalKind::Texture];

    pub fn dim(self) -> usize {
        match self {
            SignalKind::Color => COLOR_DIM,
            SignalKind::Geometric => GEOMETRIC_DIM,
            SignalKind::Texture => TEXTURE_DIM,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SignalKind::Color => "color",
            SignalKind::Geometric => "geometric",
            SignalKind::Texture => "texture",
        }
    }
}

impl fmt::Display for SignalKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SignalKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "color" => Ok(SignalKind::Color),
            "geometric" => Ok(SignalKind::Geometric),
            "texture" => Ok(SignalKind::Texture),
            other => Err(Error::InvalidArgument(format!("unknown signal kind `{other}`"))),
        }
    }
}

/// `n × m` descriptor matrix; row `i` describes node `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct NodalSignalMatrix {
    pub kind: SignalKind,
    pub x: DMatrix<f64>,
}

impl NodalSignalMatrix {
    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn m(&self) -> usize {
        self.x.ncols()
    }

    /// Columns rescaled to [0,1] across nodes; constant columns become 0.
    pub fn minmax_scaled(&self) -> DMatrix<f64> {
        let mut out = self.x.clone();
        for mut col in out.column_iter_mut() {
            let lo = col.min();
            let hi = col.max();
            let span = hi - lo;
            for v in col.iter_mut() {
                *v = if span > 0.0 { (*v - lo) / span } else { 0.0 };
            }
        }
        out
    }

    /// Per-node mean of the descriptor row.
    pub fn row_means(&self) -> Vec<f64> {
        self.x.row_iter().map(|r| r.mean()).collect()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut text = String::from("node");
        for j in 0..self.m() {
            text.push_str(&format!(",f{j}"));
        }
        text.push('\n');
        for i in 0..self.n() {
            text.push_str(&i.to_string());
            for j in 0..self.m() {
                text.push_str(&format!(",{}", self.x[(i, j)]));
            }
            text.push('\n');
        }
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn read_csv(path: &Path, kind: SignalKind) -> Result<Self> {
        let mut reader = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
        let mut values = Vec::new();
        let mut rows = 0;
        for record in reader.records() {
            let record = record.map_err(|e| Error::csv(path, e))?;
            if record.len() != kind.dim() + 1 {
                return Err(Error::csv(path, format!("expected {} columns", kind.dim() + 1)));
            }
            for field in record.iter().skip(1) {
                values.push(field.parse::<f64>().map_err(|e| Error::csv(path, e))?);
            }
            rows += 1;
        }
        Ok(Self {
            kind,
            x: DMatrix::from_row_slice(rows, kind.dim(), &values),
        })
    }
}

fn population_mean_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let (sum, count) = values.clone().fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    let mean = sum / count as f64;
    let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / count as f64;
    (mean, var.sqrt())
}

fn color_of(img: &RgbImage, pixels: &[usize]) -> [f64; COLOR_DIM] {
    let raw = img.as_raw();
    let channel = |c: usize| pixels.iter().map(move |&i| f64::from(raw[i * 3 + c]) / 255.0);
    let (mr, sr) = population_mean_std(channel(0));
    let (mg, sg) = population_mean_std(channel(1));
    let (mb, sb) = population_mean_std(channel(2));
    let (mut l, mut a, mut b) = (0.0, 0.0, 0.0);
    for &i in pixels {
        let lab = rgb_to_lab([raw[i * 3], raw[i * 3 + 1], raw[i * 3 + 2]]);
        l += lab.l;
        a += lab.a;
        b += lab.b;
    }
    let n = pixels.len() as f64;
    [mr, mg, mb, l / n, a / n, b / n, sr, sg, sb]
}

/// Number of pixel sides of the node that face another node or the image border.
fn perimeter_of(map: &SuperpixelMap, node: usize, pixels: &[usize]) -> usize {
    let (w, h) = (map.width(), map.height());
    let labels = map.labels();
    let node = node as u32;
    let mut sides = 0;
    for &idx in pixels {
        let (x, y) = (idx % w, idx / w);
        sides += usize::from(x == 0 || labels[idx - 1] != node);
        sides += usize::from(x + 1 == w || labels[idx + 1] != node);
        sides += usize::from(y == 0 || labels[idx - w] != node);
        sides += usize::from(y + 1 == h || labels[idx + w] != node);
    }
    sides
}

fn cross(o: (i64, i64), a: (i64, i64), b: (i64, i64)) -> i64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

/// Area of the convex hull of the node's pixel squares.
pub(crate) fn convex_area(width: usize, pixels: &[usize]) -> f64 {
    use std::collections::BTreeMap;
    // only the extreme pixels of each row can contribute hull corners
    let mut rows: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
    for &idx in pixels {
        let (x, y) = (idx % width, idx / width);
        let e = rows.entry(y).or_insert((x, x));
        e.0 = e.0.min(x);
        e.1 = e.1.max(x);
    }
    let mut pts: Vec<(i64, i64)> = Vec::with_capacity(rows.len() * 4);
    for (&y, &(lo, hi)) in &rows {
        let (y, lo, hi) = (y as i64, lo as i64, hi as i64);
        pts.extend([(lo, y), (lo, y + 1), (hi + 1, y), (hi + 1, y + 1)]);
    }
    pts.sort_unstable();
    pts.dedup();
    if pts.len() < 3 {
        return 0.0;
    }
    let mut hull: Vec<(i64, i64)> = Vec::with_capacity(pts.len() * 2);
    for &p in &pts {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0 {
            hull.pop();
        }
        hull.push(p);
    }
    let lower_len = hull.len() + 1;
    for &p in pts.iter().rev().skip(1) {
        while hull.len() >= lower_len && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0 {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    let twice: i64 = (0..hull.len())
        .map(|i| {
            let (a, b) = (hull[i], hull[(i + 1) % hull.len()]);
            a.0 * b.1 - b.0 * a.1
        })
        .sum();
    twice.abs() as f64 / 2.0
}

fn geometric_of(map: &SuperpixelMap, node: usize, pixels: &[usize]) -> [f64; GEOMETRIC_DIM] {
    let w = map.width();
    let area = pixels.len() as f64;
    let perimeter = perimeter_of(map, node, pixels) as f64;
    let compactness = 4.0 * std::f64::consts::PI * area / (perimeter * perimeter);

    let (sx, sy) = pixels
        .iter()
        .fold((0.0, 0.0), |(sx, sy), &i| (sx + (i % w) as f64, sy + (i / w) as f64));
    let (cx, cy) = (sx / area, sy / area);
    let (mut cxx, mut cyy, mut cxy) = (0.0, 0.0, 0.0);
    for &i in pixels {
        let dx = (i % w) as f64 - cx;
        let dy = (i / w) as f64 - cy;
        cxx += dx * dx;
        cyy += dy * dy;
        cxy += dx * dy;
    }
    let (cxx, cyy, cxy) = (cxx / area, cyy / area, cxy / area);
    let half_trace = (cxx + cyy) / 2.0;
    let root = (((cxx - cyy) / 2.0).powi(2) + cxy * cxy).sqrt();
    let (major, minor) = (half_trace + root, (half_trace - root).max(0.0));
    let eccentricity = if major > 0.0 { (1.0 - minor / major).max(0.0).sqrt() } else { 0.0 };

    let solidity = area / convex_area(w, pixels);

    let (icx, icy) = ((map.width() as f64 - 1.0) / 2.0, (map.height() as f64 - 1.0) / 2.0);
    let half_diag = icx.hypot(icy);
    let offset = if half_diag > 0.0 { (cx - icx).hypot(cy - icy) / half_diag } else { 0.0 };

    [area, perimeter, compactness, eccentricity, solidity, offset]
}

pub(crate) fn gray_level(rgb: [u8; 3]) -> f64 {
    (0.299 * f64::from(rgb[0]) + 0.587 * f64::from(rgb[1]) + 0.114 * f64::from(rgb[2])) / 255.0
}

pub(crate) fn quantize(gray: f64, levels: usize) -> usize {
    ((gray * levels as f64) as usize).min(levels - 1)
}

/// Contrast, energy (angular second moment), homogeneity and correlation of a normalized,
/// symmetric co-occurrence matrix. Returns `None` when there are no pairs.
pub(crate) fn glcm_stats(counts: &[f64], levels: usize) -> Option<[f64; 4]> {
    let total: f64 = counts.iter().sum();
    if total == 0.0 {
        return None;
    }
    let p = |i: usize, j: usize| counts[i * levels + j] / total;
    let mut mu = 0.0;
    for i in 0..levels {
        for j in 0..levels {
            mu += i as f64 * p(i, j);
        }
    }
    let (mut contrast, mut energy, mut homogeneity, mut var, mut cov) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for i in 0..levels {
        for j in 0..levels {
            let pij = p(i, j);
            let d = i as f64 - j as f64;
            contrast += d * d * pij;
            energy += pij * pij;
            homogeneity += pij / (1.0 + d * d);
            var += (i as f64 - mu).powi(2) * pij;
            cov += (i as f64 - mu) * (j as f64 - mu) * pij;
        }
    }
    let correlation = if var > 1e-12 { cov / var } else { 0.0 };
    Some([contrast, energy, homogeneity, correlation])
}

fn texture_of(img: &RgbImage, map: &SuperpixelMap, node: usize, pixels: &[usize]) -> [f64; TEXTURE_DIM] {
    let raw = img.as_raw();
    let gray_at = |i: usize| gray_level([raw[i * 3], raw[i * 3 + 1], raw[i * 3 + 2]]);
    let (mean, std) = population_mean_std(pixels.iter().map(|&i| gray_at(i)));
    let (skew, kurt) = if std > 1e-12 {
        let n = pixels.len() as f64;
        let m3 = pixels.iter().map(|&i| (gray_at(i) - mean).powi(3)).sum::<f64>() / n;
        let m4 = pixels.iter().map(|&i| (gray_at(i) - mean).powi(4)).sum::<f64>() / n;
        (m3 / std.powi(3), m4 / std.powi(4) - 3.0)
    } else {
        (0.0, 0.0)
    };

    // horizontal offset (0, 1), both pixels inside the node, symmetrized
    let w = map.width();
    let labels = map.labels();
    let mut counts = vec![0.0; GLCM_LEVELS * GLCM_LEVELS];
    for &idx in pixels {
        if idx % w + 1 < w && labels[idx + 1] as usize == node {
            let a = quantize(gray_at(idx), GLCM_LEVELS);
            let b = quantize(gray_at(idx + 1), GLCM_LEVELS);
            counts[a * GLCM_LEVELS + b] += 1.0;
            counts[b * GLCM_LEVELS + a] += 1.0;
        }
    }
    let glcm = glcm_stats(&counts, GLCM_LEVELS).unwrap_or([0.0, 1.0, 0.0, 0.0]);
    [mean, std, skew, kurt, glcm[0], glcm[1], glcm[2], glcm[3]]
}

fn node_pixels_of(map: &SuperpixelMap, node: usize) -> Vec<usize> {
    assert!(node < map.n(), "node {node} out of range for a map with {} nodes", map.n());
    map.labels()
        .iter()
        .enumerate()
        .filter(|(_, &l)| l as usize == node)
        .map(|(i, _)| i)
        .collect()
}

pub fn color_descriptor(image: &RgbImage, map: &SuperpixelMap, node: usize) -> Vec<f64> {
    color_of(image, &node_pixels_of(map, node)).to_vec()
}

pub fn geometric_descriptor(map: &SuperpixelMap, node: usize) -> Vec<f64> {
    geometric_of(map, node, &node_pixels_of(map, node)).to_vec()
}

pub fn texture_descriptor(image: &RgbImage, map: &SuperpixelMap, node: usize) -> Vec<f64> {
    texture_of(image, map, node, &node_pixels_of(map, node)).to_vec()
}

pub fn build_signal_matrix(image: &RgbImage, map: &SuperpixelMap, kind: SignalKind) -> Result<NodalSignalMatrix> {
    if image.width() as usize != map.width() || image.height() as usize != map.height() {
        return Err(Error::InvalidArgument(format!(
            "map is {}x{} but image is {}x{}",
            map.width(),
            map.height(),
            image.width(),
            image.height()
        )));
    }
    let nodes = map.node_pixels();
    let mut x = DMatrix::zeros(map.n(), kind.dim());
    for (i, pixels) in nodes.iter().enumerate() {
        let row: Vec<f64> = match kind {
            SignalKind::Color => color_of(image, pixels).to_vec(),
            SignalKind::Geometric => geometric_of(map, i, pixels).to_vec(),
            SignalKind::Texture => texture_of(image, map, i, pixels).to_vec(),
        };
        for (j, v) in row.into_iter().enumerate() {
            x[(i, j)] = v;
        }
    }
    Ok(NodalSignalMatrix { kind, x })
}

#[cfg(test)]
mod tests {
    use super::*;
    use image::Rgb;

    fn whole(width: usize, height: usize) -> SuperpixelMap {
        SuperpixelMap::single(width, height, 0)
    }

    fn boxed(width: usize, height: usize, x0: usize, y0: usize, side: usize) -> SuperpixelMap {
        let labels = (0..width * height)
            .map(|i| {
                let (x, y) = (i % width, i / width);
                u32::from(!((x0..x0 + side).contains(&x) && (y0..y0 + side).contains(&y)))
            })
            .collect();
        SuperpixelMap::from_labels(width, height, labels, 0).unwrap()
    }

    #[test]
    fn mid_gray_color() {
        let img = RgbImage::from_pixel(20, 20, Rgb([255, 255, 255]));
        let img = RgbImage::from_fn(20, 20, |x, y| if (x + y) % 2 == 0 { Rgb([0, 0, 0]) } else { *img.get_pixel(x, y) });
        let d = color_descriptor(&img, &whole(20, 20), 0);
        // checkerboard black/white: mean 0.5, population std 0.5
        assert!((d[0] - 0.5).abs() < 1e-12 && (d[6] - 0.5).abs() < 1e-12);

        let gray = RgbImage::from_pixel(20, 20, Rgb([128, 128, 128]));
        let d = color_descriptor(&gray, &whole(20, 20), 0);
        for c in 0..3 {
            assert!((d[c] - 128.0 / 255.0).abs() < 1e-12);
            assert!(d[6 + c].abs() < 1e-12);
        }
    }

    #[test]
    fn pure_red_color() {
        let img = RgbImage::from_pixel(16, 16, Rgb([255, 0, 0]));
        let d = color_descriptor(&img, &whole(16, 16), 0);
        assert!((d[0] - 1.0).abs() < 1e-12);
        assert_eq!((d[1], d[2]), (0.0, 0.0));
    }

    #[test]
    fn single_node_area() {
        let d = geometric_descriptor(&whole(30, 20), 0);
        assert_eq!(d[0], 600.0);
        assert_eq!(d[1], 100.0);
        assert!((d[4] - 1.0).abs() < 1e-12);
        assert!(d[5].abs() < 1e-12);
    }

    #[test]
    fn square_compactness() {
        // 10x10 square: perimeter = 40 exposed sides, so 4π·100/1600
        let map = boxed(30, 30, 5, 7, 10);
        let node = map.label_at(5, 7);
        let d = geometric_descriptor(&map, node);
        assert_eq!(d[0], 100.0);
        assert_eq!(d[1], 40.0);
        assert!((d[2] - std::f64::consts::PI / 4.0).abs() < 1e-12);
        assert!(d[3].abs() < 1e-12, "square has isotropic moments");
        assert!((d[4] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn centered_node_has_zero_offset() {
        let map = boxed(21, 21, 8, 8, 5);
        let d = geometric_descriptor(&map, map.label_at(10, 10));
        assert!(d[5].abs() < 1e-12);
    }

    #[test]
    fn l_shape_solidity_below_one() {
        // 3x3 block minus its top-right 2x2: 5 px, hull of the L = 9 - 2 = 7
        let labels: Vec<u32> = (0..9).map(|i| u32::from(matches!(i, 1 | 2 | 4 | 5))).collect();
        let map = SuperpixelMap::from_labels(3, 3, labels, 0).unwrap();
        let node = map.label_at(0, 0);
        let d = geometric_descriptor(&map, node);
        assert_eq!(d[0], 5.0);
        assert!((d[4] - 5.0 / 7.0).abs() < 1e-12, "solidity {}", d[4]);
    }

    #[test]
    fn uniform_texture() {
        let img = RgbImage::from_pixel(16, 16, Rgb([90, 140, 30]));
        let d = texture_descriptor(&img, &whole(16, 16), 0);
        assert!(d[1].abs() < 1e-12);
        assert_eq!(d[4], 0.0);
        assert_eq!(d[5], 1.0);
        assert_eq!(d[6], 1.0);
    }

    #[test]
    fn stripe_contrast_by_hand_count() {
        // columns alternate black/white: every horizontal pair is (0,7) or (7,0),
        // so the symmetric GLCM has mass 1/2 at (0,7) and (7,0) only.
        let img = RgbImage::from_fn(16, 16, |x, _| if x % 2 == 0 { Rgb([0, 0, 0]) } else { Rgb([255, 255, 255]) });
        let d = texture_descriptor(&img, &whole(16, 16), 0);
        assert!((d[4] - 49.0).abs() < 1e-12);
        assert!((d[5] - 0.5).abs() < 1e-12);
        assert!((d[6] - 1.0 / 50.0).abs() < 1e-12);
        assert!((d[7] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_pixel_node_is_finite() {
        let map = boxed(16, 16, 4, 4, 1);
        let img = RgbImage::from_fn(16, 16, |x, y| Rgb([(x * 16) as u8, (y * 16) as u8, 7]));
        let node = map.label_at(4, 4);
        let d = texture_descriptor(&img, &map, node);
        assert!(d.iter().all(|v| v.is_finite()));
        assert_eq!(&d[4..], &[0.0, 1.0, 0.0, 0.0]);
        let g = geometric_descriptor(&map, node);
        assert!(g.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn matrix_shape_and_identical_rows() {
        // two identical 8x16 halves of a uniform image
        let labels: Vec<u32> = (0..16 * 16).map(|i| u32::from(i % 16 >= 8)).collect();
        let map = SuperpixelMap::from_labels(16, 16, labels, 0).unwrap();
        let img = RgbImage::from_pixel(16, 16, Rgb([10, 200, 30]));
        for kind in SignalKind::ALL {
            let m = build_signal_matrix(&img, &map, kind).unwrap();
            assert_eq!((m.n(), m.m()), (2, kind.dim()));
            assert!(m.x.iter().all(|v| v.is_finite()));
        }
        let c = build_signal_matrix(&img, &map, SignalKind::Color).unwrap();
        assert_eq!(c.x.row(0), c.x.row(1));
    }

    #[test]
    fn relabeling_permutes_rows() {
        let img = RgbImage::from_fn(24, 24, |x, y| Rgb([(x * 10) as u8, (y * 10) as u8, ((x * y) % 256) as u8]));
        let base: Vec<u32> = (0..24 * 24).map(|i| ((i % 24) / 8 + 3 * ((i / 24) / 12)) as u32).collect();
        let a = SuperpixelMap::from_labels(24, 24, base.clone(), 0).unwrap();
        let ma = build_signal_matrix(&img, &a, SignalKind::Texture).unwrap();
        // the canonical relabel is a fixed permutation; compare through pixel lookups
        let b = SuperpixelMap::from_labels(24, 24, base.iter().map(|&l| 5 - l).collect(), 0).unwrap();
        let mb = build_signal_matrix(&img, &b, SignalKind::Texture).unwrap();
        for idx in [0usize, 10, 20, 300, 400, 575] {
            let (x, y) = (idx % 24, idx / 24);
            assert_eq!(ma.x.row(a.label_at(x, y)), mb.x.row(b.label_at(x, y)));
        }
    }

    #[test]
    fn csv_round_trip() {
        let img = RgbImage::from_fn(16, 16, |x, y| Rgb([(x * 9) as u8, (y * 13) as u8, 3]));
        let map = boxed(16, 16, 2, 2, 6);
        let m = build_signal_matrix(&img, &map, SignalKind::Geometric).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("level_0_geometric.csv");
        m.write_csv(&path).unwrap();
        assert_eq!(NodalSignalMatrix::read_csv(&path, SignalKind::Geometric).unwrap(), m);
    }

    #[test]
    fn minmax_scaling() {
        let m = NodalSignalMatrix {
            kind: SignalKind::Color,
            x: DMatrix::from_row_slice(3, 2, &[2.0, 5.0, 4.0, 5.0, 6.0, 5.0]),
        };
        let s = m.minmax_scaled();
        assert_eq!(s.column(0).as_slice(), &[0.0, 0.5, 1.0]);
        assert_eq!(s.column(1).as_slice(), &[0.0, 0.0, 0.0]);
    }
}
