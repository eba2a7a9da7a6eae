//! Synthetic dermoscopy-like images with two visually distinct lesion classes.
//!
//! Benign lesions are round, smooth-edged and a single light brown. Melanoma lesions have a
//! lobed, asymmetric border and a patchwork of dark brown, black, blue-grey and red regions.

use std::f64::consts::TAU;

use image::{Rgb, RgbImage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::ingest::{Label, LabelledImage, MIN_SIDE};

const SKIN: [f64; 3] = [228.0, 192.0, 168.0];
const BENIGN: [f64; 3] = [168.0, 118.0, 82.0];
const MELANOMA_PALETTE: [[f64; 3]; 5] = [
    [72.0, 42.0, 28.0],
    [28.0, 20.0, 22.0],
    [92.0, 102.0, 134.0],
    [172.0, 62.0, 58.0],
    [120.0, 78.0, 50.0],
];

fn jitter(rng: &mut ChaCha8Rng, c: [f64; 3], amount: f64) -> [f64; 3] {
    c.map(|v| v + rng.gen_range(-amount..=amount))
}

fn put(img: &mut RgbImage, x: u32, y: u32, c: [f64; 3]) {
    img.put_pixel(x, y, Rgb(c.map(|v| v.round().clamp(0.0, 255.0) as u8)));
}

/// One synthetic lesion image of side `size`.
pub fn synthetic_lesion(size: u32, melanoma: bool, rng: &mut ChaCha8Rng) -> RgbImage {
    let s = f64::from(size);
    let skin = jitter(rng, SKIN, 8.0);
    let cx = s / 2.0 + rng.gen_range(-0.08..0.08) * s;
    let cy = s / 2.0 + rng.gen_range(-0.08..0.08) * s;
    let r0 = rng.gen_range(0.22..0.30) * s;
    let aspect = rng.gen_range(0.88..1.12);

    // border harmonics: none for benign, strong low-order lobes for melanoma
    let harmonics: Vec<(f64, f64, f64)> = if melanoma {
        (2..=6)
            .map(|k| (f64::from(k), rng.gen_range(0.05..0.16), rng.gen_range(0.0..TAU)))
            .collect()
    } else {
        Vec::new()
    };
    let benign_tone = jitter(rng, BENIGN, 12.0);
    // colour patches: Voronoi cells around seeds scattered off-centre
    let seeds: Vec<(f64, f64, [f64; 3])> = if melanoma {
        let (ox, oy) = (rng.gen_range(-0.4..0.4) * r0, rng.gen_range(-0.4..0.4) * r0);
        (0..5)
            .map(|i| {
                let a = rng.gen_range(0.0..TAU);
                let d = rng.gen_range(0.0..0.9) * r0;
                let c = jitter(rng, MELANOMA_PALETTE[i % MELANOMA_PALETTE.len()], 10.0);
                (cx + ox + d * a.cos(), cy + oy + d * a.sin(), c)
            })
            .collect()
    } else {
        Vec::new()
    };

    let mut img = RgbImage::new(size, size);
    for y in 0..size {
        for x in 0..size {
            let dx = (f64::from(x) + 0.5 - cx) / aspect;
            let dy = f64::from(y) + 0.5 - cy;
            let theta = dy.atan2(dx);
            let radius = r0 * (1.0 + harmonics.iter().map(|&(k, a, p)| a * (k * theta + p).cos()).sum::<f64>());
            let rho = (dx * dx + dy * dy).sqrt();
            let noise = if melanoma { 7.0 } else { 4.0 };
            let colour = if rho <= radius {
                if melanoma {
                    let (px, py) = (f64::from(x) + 0.5, f64::from(y) + 0.5);
                    let nearest = seeds
                        .iter()
                        .min_by(|a, b| {
                            let da = (a.0 - px).powi(2) + (a.1 - py).powi(2);
                            let db = (b.0 - px).powi(2) + (b.1 - py).powi(2);
                            da.total_cmp(&db)
                        })
                        .expect("seeds are non-empty");
                    nearest.2
                } else {
                    // soft rim: blend towards skin over the outer 15% of the radius
                    let t = ((rho / radius - 0.85) / 0.15).clamp(0.0, 1.0);
                    std::array::from_fn(|c| benign_tone[c] * (1.0 - t) + skin[c] * t)
                }
            } else {
                skin
            };
            let c = jitter(rng, colour, noise);
            put(&mut img, x, y, c);
        }
    }
    img
}

/// `n_images` lesions alternating benign / melanoma, ids `synth_000`, `synth_001`, ...
///
/// Image `i` draws from its own ChaCha8 stream seeded with `seed + i`, so a corpus is a prefix
/// of every larger corpus with the same seed.
pub fn synthetic_corpus(n_images: usize, size: u32, seed: u64) -> Result<Vec<LabelledImage>> {
    if size < MIN_SIDE {
        return Err(Error::InvalidArgument(format!("image side must be at least {MIN_SIDE}, got {size}")));
    }
    (0..n_images)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64));
            let melanoma = i % 2 == 1;
            let pixels = synthetic_lesion(size, melanoma, &mut rng);
            LabelledImage::new(format!("synth_{i:03}"), pixels, Label::from_positive(melanoma))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn colour_spread(img: &RgbImage) -> f64 {
        // std of luminance over non-skin pixels
        let lum: Vec<f64> = img
            .pixels()
            .map(|p| 0.299 * f64::from(p[0]) + 0.587 * f64::from(p[1]) + 0.114 * f64::from(p[2]))
            .filter(|&l| l < 180.0)
            .collect();
        let mean = lum.iter().sum::<f64>() / lum.len() as f64;
        (lum.iter().map(|l| (l - mean).powi(2)).sum::<f64>() / lum.len() as f64).sqrt()
    }

    #[test]
    fn corpus_is_balanced_and_deterministic() {
        let a = synthetic_corpus(10, 32, 7).unwrap();
        let b = synthetic_corpus(12, 32, 7).unwrap();
        assert_eq!(a.iter().filter(|i| i.label.is_positive()).count(), 5);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.id, y.id);
            assert_eq!(x.pixels, y.pixels);
        }
        assert_eq!(a[3].id, "synth_003");
    }

    #[test]
    fn melanoma_is_more_varied_than_benign() {
        let corpus = synthetic_corpus(20, 64, 1).unwrap();
        for pair in corpus.chunks(2) {
            assert!(colour_spread(&pair[1].pixels) > 1.5 * colour_spread(&pair[0].pixels));
        }
    }

    #[test]
    fn rejects_tiny_images() {
        assert!(synthetic_corpus(2, 8, 0).is_err());
    }
}
