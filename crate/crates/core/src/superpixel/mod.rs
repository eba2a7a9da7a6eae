//! Superpixel maps: single-level SLIC, multi-level ensembles and merge hierarchies.

pub mod color;
pub mod io;
mod map;
mod multilevel;
mod slic;

pub use color::{ciede2000, rgb_to_lab, Lab};
pub use map::SuperpixelMap;
pub use multilevel::{
    build_ensemble, build_hierarchy, ensemble_rgb, hierarchy_rgb, merge_to_count, MapMode, MultiLevelMaps,
    DEFAULT_ENSEMBLE_LEVELS, DEFAULT_HIERARCHY_LEVELS,
};
pub use slic::{segment_rgb, slic_segment, SlicParams, DEFAULT_COMPACTNESS};
