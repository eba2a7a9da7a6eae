//! Whole-image descriptor battery (394 values).
//!
//! | block                                   | count |
//! |-----------------------------------------|-------|
//! | RGB and Lab histograms, 32 bins/channel | 192   |
//! | GLCM, 4 angles × 4 distances × 10 stats | 160   |
//! | Otsu lesion-mask shape and moments      | 26    |
//! | Sobel gradient-orientation histogram    | 16    |

use std::f64::consts::PI;

use image::RgbImage;

use crate::signals::{convex_area, gray_level, quantize};
use crate::superpixel::rgb_to_lab;

pub const HISTOGRAM_BINS: usize = 32;
pub const CONVENTIONAL_GLCM_LEVELS: usize = 16;
pub const GLCM_DISTANCES: [usize; 4] = [1, 2, 4, 8];
pub const GLCM_STAT_NAMES: [&str; 10] = [
    "contrast",
    "dissimilarity",
    "homogeneity",
    "asm",
    "energy",
    "correlation",
    "entropy",
    "max_prob",
    "cluster_shade",
    "cluster_prominence",
];
pub const SHAPE_DIM: usize = 26;
pub const ORIENTATION_BINS: usize = 16;
pub const CONVENTIONAL_DIM: usize = 6 * HISTOGRAM_BINS + 4 * GLCM_DISTANCES.len() * GLCM_STAT_NAMES.len() + SHAPE_DIM + ORIENTATION_BINS;

pub fn conventional_features(image: &RgbImage) -> Vec<f64> {
    let gray: Vec<f64> = image.pixels().map(|p| gray_level(p.0)).collect();
    let (w, h) = (image.width() as usize, image.height() as usize);
    let mut out = Vec::with_capacity(CONVENTIONAL_DIM);
    out.extend(color_histograms(image));
    out.extend(glcm_block(&gray, w, h));
    out.extend(shape_block(&gray, w, h));
    out.extend(orientation_histogram(&gray, w, h));
    debug_assert_eq!(out.len(), CONVENTIONAL_DIM);
    out
}

fn bin(v: f64, lo: f64, hi: f64) -> usize {
    let t = ((v - lo) / (hi - lo) * HISTOGRAM_BINS as f64).floor();
    t.clamp(0.0, (HISTOGRAM_BINS - 1) as f64) as usize
}

/// Normalized per-channel histograms: R, G, B over [0,255], then L over [0,100] and a, b over
/// [−128,128).
fn color_histograms(image: &RgbImage) -> Vec<f64> {
    let mut hist = vec![0.0; 6 * HISTOGRAM_BINS];
    for p in image.pixels() {
        let lab = rgb_to_lab(p.0);
        let bins = [
            bin(f64::from(p.0[0]), 0.0, 256.0),
            bin(f64::from(p.0[1]), 0.0, 256.0),
            bin(f64::from(p.0[2]), 0.0, 256.0),
            bin(lab.l, 0.0, 100.0 + 1e-9),
            bin(lab.a, -128.0, 128.0),
            bin(lab.b, -128.0, 128.0),
        ];
        for (c, b) in bins.into_iter().enumerate() {
            hist[c * HISTOGRAM_BINS + b] += 1.0;
        }
    }
    let total = (image.width() * image.height()) as f64;
    hist.iter_mut().for_each(|v| *v /= total);
    hist
}

fn glcm_block(gray: &[f64], w: usize, h: usize) -> Vec<f64> {
    let levels = CONVENTIONAL_GLCM_LEVELS;
    let q: Vec<usize> = gray.iter().map(|&g| quantize(g, levels)).collect();
    let mut out = Vec::with_capacity(160);
    for angle in 0..4 {
        for &d in &GLCM_DISTANCES {
            let d = d as isize;
            let (dx, dy) = match angle {
                0 => (d, 0),
                1 => (d, -d),
                2 => (0, -d),
                _ => (-d, -d),
            };
            let mut counts = vec![0.0; levels * levels];
            for y in 0..h as isize {
                for x in 0..w as isize {
                    let (nx, ny) = (x + dx, y + dy);
                    if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                        continue;
                    }
                    let a = q[y as usize * w + x as usize];
                    let b = q[ny as usize * w + nx as usize];
                    counts[a * levels + b] += 1.0;
                    counts[b * levels + a] += 1.0;
                }
            }
            out.extend(glcm_ten(&counts, levels));
        }
    }
    out
}

fn glcm_ten(counts: &[f64], levels: usize) -> [f64; 10] {
    let total: f64 = counts.iter().sum();
    if total == 0.0 {
        return [0.0; 10];
    }
    let p = |i: usize, j: usize| counts[i * levels + j] / total;
    let mut mu = 0.0;
    for i in 0..levels {
        for j in 0..levels {
            mu += i as f64 * p(i, j);
        }
    }
    let mut s = [0.0; 10];
    let (mut var, mut cov) = (0.0, 0.0);
    for i in 0..levels {
        for j in 0..levels {
            let pij = p(i, j);
            if pij == 0.0 {
                continue;
            }
            let (fi, fj) = (i as f64, j as f64);
            let d = fi - fj;
            s[0] += d * d * pij;
            s[1] += d.abs() * pij;
            s[2] += pij / (1.0 + d * d);
            s[3] += pij * pij;
            s[6] -= pij * pij.ln();
            s[7] = f64::max(s[7], pij);
            let t = fi + fj - 2.0 * mu;
            s[8] += t.powi(3) * pij;
            s[9] += t.powi(4) * pij;
            var += (fi - mu).powi(2) * pij;
            cov += (fi - mu) * (fj - mu) * pij;
        }
    }
    s[4] = s[3].sqrt();
    s[5] = if var > 1e-12 { cov / var } else { 0.0 };
    s
}

/// Otsu threshold on 8-bit gray; pixels at or below it form the lesion mask.
pub(crate) fn otsu_threshold(gray8: &[u8]) -> u8 {
    let mut hist = [0.0f64; 256];
    for &g in gray8 {
        hist[g as usize] += 1.0;
    }
    let total = gray8.len() as f64;
    let sum_all: f64 = hist.iter().enumerate().map(|(i, c)| i as f64 * c).sum();
    let (mut w0, mut sum0) = (0.0, 0.0);
    let (mut best, mut best_t) = (-1.0, 0u8);
    for t in 0..256 {
        w0 += hist[t];
        sum0 += t as f64 * hist[t];
        let w1 = total - w0;
        if w0 == 0.0 {
            continue;
        }
        if w1 == 0.0 {
            if best < 0.0 {
                best_t = t as u8;
            }
            break;
        }
        let m0 = sum0 / w0;
        let m1 = (sum_all - sum0) / w1;
        let between = w0 * w1 * (m0 - m1).powi(2);
        if between > best {
            best = between;
            best_t = t as u8;
        }
    }
    best_t
}

fn shape_block(gray: &[f64], w: usize, h: usize) -> [f64; SHAPE_DIM] {
    let mut out = [0.0; SHAPE_DIM];
    let gray8: Vec<u8> = gray.iter().map(|&g| (g * 255.0).round().clamp(0.0, 255.0) as u8).collect();
    let t = otsu_threshold(&gray8);
    let mask: Vec<bool> = gray8.iter().map(|&g| g <= t).collect();
    let pixels: Vec<usize> = (0..mask.len()).filter(|&i| mask[i]).collect();
    let area = pixels.len() as f64;
    out[25] = f64::from(t) / 255.0;
    if pixels.is_empty() {
        return out;
    }
    let diag = ((w * w + h * h) as f64).sqrt();
    let at = |x: isize, y: isize| x >= 0 && y >= 0 && (x as usize) < w && (y as usize) < h && mask[y as usize * w + x as usize];

    let mut perimeter = 0.0;
    let (mut x0, mut x1, mut y0, mut y1) = (usize::MAX, 0, usize::MAX, 0);
    let (mut sx, mut sy) = (0.0, 0.0);
    for &i in &pixels {
        let (x, y) = (i % w, i / w);
        for (dx, dy) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
            if !at(x as isize + dx, y as isize + dy) {
                perimeter += 1.0;
            }
        }
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
        sx += x as f64;
        sy += y as f64;
    }
    let (cx, cy) = (sx / area, sy / area);
    let central = |p: i32, q: i32| -> f64 {
        pixels
            .iter()
            .map(|&i| ((i % w) as f64 - cx).powi(p) * ((i / w) as f64 - cy).powi(q))
            .sum()
    };
    let (mu20, mu02, mu11) = (central(2, 0) / area, central(0, 2) / area, central(1, 1) / area);
    let root = ((mu20 - mu02).powi(2) + 4.0 * mu11 * mu11).sqrt();
    let (l1, l2) = ((mu20 + mu02 + root) / 2.0, ((mu20 + mu02 - root) / 2.0).max(0.0));
    let theta = 0.5 * (2.0 * mu11).atan2(mu20 - mu02);
    let (bw, bh) = ((x1 - x0 + 1) as f64, (y1 - y0 + 1) as f64);

    out[0] = area / (w * h) as f64;
    out[1] = perimeter / (2 * (w + h)) as f64;
    out[2] = 4.0 * PI * area / (perimeter * perimeter);
    out[3] = if l1 > 0.0 { (1.0 - l2 / l1).sqrt() } else { 0.0 };
    let hull = convex_area(w, &pixels);
    out[4] = if hull > 0.0 { area / hull } else { 1.0 };
    out[5] = area / (bw * bh);
    out[6] = bw.min(bh) / bw.max(bh);
    out[7] = cx / w as f64;
    out[8] = cy / h as f64;
    out[9] = 4.0 * l1.sqrt() / diag;
    out[10] = 4.0 * l2.sqrt() / diag;
    out[11] = (2.0 * theta).sin();
    out[12] = (2.0 * theta).cos();
    out[13] = (4.0 * area / PI).sqrt() / diag;

    let (mut miss_x, mut miss_y) = (0.0, 0.0);
    for &i in &pixels {
        let (x, y) = ((i % w) as f64, (i / w) as f64);
        if !at((2.0 * cx - x).round() as isize, y as isize) {
            miss_x += 1.0;
        }
        if !at(x as isize, (2.0 * cy - y).round() as isize) {
            miss_y += 1.0;
        }
    }
    out[14] = miss_x / area;
    out[15] = miss_y / area;

    let eta = |p: i32, q: i32| central(p, q) / area.powf(1.0 + f64::from(p + q) / 2.0);
    let (n20, n02, n11) = (eta(2, 0), eta(0, 2), eta(1, 1));
    let (n30, n03, n21, n12) = (eta(3, 0), eta(0, 3), eta(2, 1), eta(1, 2));
    let (a, b) = (n30 + n12, n21 + n03);
    out[16] = n20 + n02;
    out[17] = (n20 - n02).powi(2) + 4.0 * n11 * n11;
    out[18] = (n30 - 3.0 * n12).powi(2) + (3.0 * n21 - n03).powi(2);
    out[19] = a * a + b * b;
    out[20] = (n30 - 3.0 * n12) * a * (a * a - 3.0 * b * b) + (3.0 * n21 - n03) * b * (3.0 * a * a - b * b);
    out[21] = (n20 - n02) * (a * a - b * b) + 4.0 * n11 * a * b;
    out[22] = (3.0 * n21 - n03) * a * (a * a - 3.0 * b * b) - (n30 - 3.0 * n12) * b * (3.0 * a * a - b * b);

    let inside: Vec<f64> = pixels.iter().map(|&i| gray[i]).collect();
    let mean_in = inside.iter().sum::<f64>() / area;
    let outside: Vec<f64> = (0..gray.len()).filter(|&i| !mask[i]).map(|i| gray[i]).collect();
    let mean_out = if outside.is_empty() { mean_in } else { outside.iter().sum::<f64>() / outside.len() as f64 };
    out[23] = mean_out - mean_in;
    out[24] = (inside.iter().map(|g| (g - mean_in).powi(2)).sum::<f64>() / area).sqrt();
    out
}

fn orientation_histogram(gray: &[f64], w: usize, h: usize) -> [f64; ORIENTATION_BINS] {
    let gray8: Vec<i32> = gray.iter().map(|&g| (g * 255.0).round() as i32).collect();
    let at = |x: isize, y: isize| gray8[y.clamp(0, h as isize - 1) as usize * w + x.clamp(0, w as isize - 1) as usize];
    let mut hist = [0.0; ORIENTATION_BINS];
    for y in 0..h as isize {
        for x in 0..w as isize {
            let gx = at(x + 1, y - 1) + 2 * at(x + 1, y) + at(x + 1, y + 1)
                - at(x - 1, y - 1)
                - 2 * at(x - 1, y)
                - at(x - 1, y + 1);
            let gy = at(x - 1, y + 1) + 2 * at(x, y + 1) + at(x + 1, y + 1)
                - at(x - 1, y - 1)
                - 2 * at(x, y - 1)
                - at(x + 1, y - 1);
            let (gx, gy) = (f64::from(gx), f64::from(gy));
            let mag = gx.hypot(gy);
            if mag > 0.0 {
                let t = (gy.atan2(gx) + PI) / (2.0 * PI) * ORIENTATION_BINS as f64;
                hist[(t.floor() as usize).min(ORIENTATION_BINS - 1)] += mag;
            }
        }
    }
    let total: f64 = hist.iter().sum();
    if total > 0.0 {
        hist.iter_mut().for_each(|v| *v /= total);
    }
    hist
}

#[cfg(test)]
mod tests {
    use super::*;
    use image::Rgb;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn dimension_is_394() {
        assert_eq!(CONVENTIONAL_DIM, 394);
        let img = RgbImage::from_pixel(20, 17, Rgb([10, 200, 30]));
        assert_eq!(conventional_features(&img).len(), 394);
    }

    #[test]
    fn uniform_image_histograms_are_one_hot() {
        let img = RgbImage::from_pixel(32, 32, Rgb([120, 60, 200]));
        let f = conventional_features(&img);
        for c in 0..6 {
            let h = &f[c * HISTOGRAM_BINS..(c + 1) * HISTOGRAM_BINS];
            assert_eq!(h.iter().filter(|&&v| v == 1.0).count(), 1);
            assert_eq!(h.iter().filter(|&&v| v == 0.0).count(), HISTOGRAM_BINS - 1);
        }
        // no gradient anywhere
        assert!(f[394 - 16..].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn noise_is_finite() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let img = RgbImage::from_fn(40, 33, |_, _| Rgb([rng.gen(), rng.gen(), rng.gen()]));
        let f = conventional_features(&img);
        assert!(f.iter().all(|v| v.is_finite()));
        let hist_sum: f64 = f[..32].iter().sum();
        assert!((hist_sum - 1.0).abs() < 1e-12);
        let orient: f64 = f[394 - 16..].iter().sum();
        assert!((orient - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dark_disc_mask() {
        let img = RgbImage::from_fn(64, 64, |x, y| {
            let r = ((x as f64 - 31.5).powi(2) + (y as f64 - 31.5).powi(2)).sqrt();
            if r < 16.0 { Rgb([40, 20, 10]) } else { Rgb([220, 190, 170]) }
        });
        let shape = &conventional_features(&img)[352..378];
        let area_frac = shape[0];
        assert!((area_frac - PI * 256.0 / 4096.0).abs() < 0.02);
        assert!((shape[7] - 31.5 / 64.0).abs() < 1e-9);
        assert!(shape[3] < 0.2, "disc eccentricity {}", shape[3]);
        assert!(shape[4] > 0.95);
        assert!(shape[14] < 0.05 && shape[15] < 0.05);
        assert!(shape[23] > 0.5);
    }

    #[test]
    fn otsu_splits_two_levels() {
        let mut g = vec![30u8; 50];
        g.extend(vec![200u8; 50]);
        let t = otsu_threshold(&g);
        assert!((30..200).contains(&t));
        assert_eq!(otsu_threshold(&[77, 77, 77]), 77);
    }

    #[test]
    fn vertical_edge_orientation() {
        // dark left half, bright right half: gradient points +x, angle 0
        let img = RgbImage::from_fn(32, 32, |x, _| if x < 16 { Rgb([0, 0, 0]) } else { Rgb([255, 255, 255]) });
        let f = conventional_features(&img);
        let orient = &f[394 - 16..];
        assert_eq!(orient[8], 1.0);
    }
}
