//! Label maps on disk: one 16-bit grayscale PNG per level plus a JSON sidecar.

use std::fs;
use std::path::Path;

use image::{ImageBuffer, Luma};
use serde::{Deserialize, Serialize};

use super::map::SuperpixelMap;
use super::multilevel::{MapMode, MultiLevelMaps};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSidecar {
    pub n: usize,
    pub level_index: usize,
    pub mode: MapMode,
    /// For hierarchy levels above the coarsest: parent (in the next coarser level) of every node.
    pub parents: Option<Vec<usize>>,
}

pub fn write_label_png(map: &SuperpixelMap, path: &Path) -> Result<()> {
    if map.n() > usize::from(u16::MAX) + 1 {
        return Err(Error::InvalidArgument(format!("{} nodes do not fit a 16-bit label image", map.n())));
    }
    let buf: ImageBuffer<Luma<u16>, Vec<u16>> = ImageBuffer::from_raw(
        map.width() as u32,
        map.height() as u32,
        map.labels().iter().map(|&l| l as u16).collect(),
    )
    .expect("buffer matches dimensions");
    buf.save(path).map_err(|source| Error::Image {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_label_png(path: &Path, level_index: usize) -> Result<SuperpixelMap> {
    let img = image::open(path).map_err(|source| Error::Image {
        path: path.to_path_buf(),
        source,
    })?;
    let gray = img.to_luma16();
    let (w, h) = gray.dimensions();
    let labels = gray.into_raw().into_iter().map(u32::from).collect();
    SuperpixelMap::from_labels(w as usize, h as usize, labels, level_index)
}

/// Writes `level_<i>.png` and `level_<i>.json` for every level into `dir`.
pub fn write_multilevel(maps: &MultiLevelMaps, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (i, map) in maps.maps.iter().enumerate() {
        write_label_png(map, &dir.join(format!("level_{i}.png")))?;
        let parents = match (&maps.parents, i) {
            (Some(p), i) if i > 0 => Some(p[i - 1].clone()),
            _ => None,
        };
        let sidecar = LevelSidecar {
            n: map.n(),
            level_index: i,
            mode: maps.mode,
            parents,
        };
        let path = dir.join(format!("level_{i}.json"));
        let text = serde_json::to_string_pretty(&sidecar).map_err(|e| Error::json(&path, e))?;
        fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

pub fn read_multilevel(dir: &Path) -> Result<MultiLevelMaps> {
    let mut maps = Vec::new();
    let mut parents = Vec::new();
    let mut mode = MapMode::Ensemble;
    for i in 0.. {
        let json_path = dir.join(format!("level_{i}.json"));
        if !json_path.is_file() {
            break;
        }
        let text = fs::read_to_string(&json_path).map_err(|e| Error::io(&json_path, e))?;
        let sidecar: LevelSidecar = serde_json::from_str(&text).map_err(|e| Error::json(&json_path, e))?;
        let map = read_label_png(&dir.join(format!("level_{i}.png")), i)?;
        if map.n() != sidecar.n {
            return Err(Error::InvalidArgument(format!(
                "{}: sidecar says {} nodes, label image has {}",
                json_path.display(),
                sidecar.n,
                map.n()
            )));
        }
        mode = sidecar.mode;
        if let Some(p) = sidecar.parents {
            parents.push(p);
        }
        maps.push(map);
    }
    if maps.is_empty() {
        return Err(Error::InvalidArgument(format!("no levels found in {}", dir.display())));
    }
    Ok(MultiLevelMaps {
        maps,
        mode,
        parents: (mode == MapMode::Hierarchy).then_some(parents),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::superpixel::{hierarchy_rgb, SlicParams};
    use image::{Rgb, RgbImage};

    #[test]
    fn multilevel_survives_disk() {
        let img = RgbImage::from_fn(40, 30, |x, y| Rgb([(x * 6) as u8, (y * 8) as u8, ((x + y) * 3) as u8]));
        let maps = hierarchy_rgb(&img, &[4, 8, 16], &SlicParams::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_multilevel(&maps, dir.path()).unwrap();
        let back = read_multilevel(dir.path()).unwrap();
        assert_eq!(back, maps);
    }
}
