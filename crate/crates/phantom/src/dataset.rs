use std::fs;
use std::path::{Path, PathBuf};

use mlct_core::derive_seed;
use mlct_core::io::{self, DwfDomain};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::model::{sample_phantom, PhantomConfig};
use crate::raster::{analytic_dwf, rasterize};
use crate::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetConfig {
    pub n1: usize,
    pub n2: usize,
    pub bins: usize,
    pub supersampling: usize,
    pub phantom: PhantomConfig,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self { n1: 64, n2: 64, bins: 36, supersampling: 4, phantom: PhantomConfig::default() }
    }
}

/// File stem of dataset item `index`.
pub fn item_stem(dir: &Path, index: usize) -> PathBuf {
    dir.join(format!("{index:05}"))
}

pub fn image_path(dir: &Path, index: usize) -> PathBuf {
    dir.join(format!("{index:05}_image.mct"))
}

pub fn dwf_path(dir: &Path, index: usize) -> PathBuf {
    dir.join(format!("{index:05}_dwf.mct"))
}

pub fn phantom_path(dir: &Path, index: usize) -> PathBuf {
    dir.join(format!("{index:05}_phantom.json"))
}

/// Write `count` (image, analytic wavefront set, phantom JSON) triples. Item
/// `i` uses seed `derive_seed(seed, i)`, so output does not depend on the
/// thread count.
pub fn dataset_generate(count: usize, seed: u64, cfg: &DatasetConfig, dir: &Path) -> Result<()> {
    cfg.phantom.validate()?;
    fs::create_dir_all(dir)?;
    (0..count).into_par_iter().try_for_each(|i| -> Result<()> {
        let phantom = sample_phantom(derive_seed(seed, i as u64), &cfg.phantom)?;
        let image = rasterize(&phantom, cfg.n1, cfg.n2, cfg.supersampling)?;
        let dwf = analytic_dwf(&phantom, cfg.n1, cfg.n2, cfg.bins)?;
        io::write_image(&image, image_path(dir, i))?;
        io::write_dwf(&dwf, DwfDomain::Image, dwf_path(dir, i))?;
        fs::write(phantom_path(dir, i), phantom.to_json())?;
        Ok(())
    })
}

/// Number of consecutive items present in a dataset directory.
pub fn dataset_len(dir: &Path) -> usize {
    (0..).take_while(|&i| image_path(dir, i).exists()).count()
}
