//! Dataset directories.

use std::fs;
use std::path::{Path, PathBuf};

use ptycho_core::{PtychoDataset, ScanGeometry};
use serde::{Deserialize, Serialize};

use crate::simulate::SimSpec;
use crate::{cimg, Error, Result};

pub const FORMAT_VERSION: u32 = 1;
pub const MANIFEST: &str = "manifest.json";

/// Contents of a dataset's `manifest.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub format_version: u32,
    pub object_shape: (usize, usize),
    pub window: (usize, usize),
    /// Top-left scan corners `(row, col)` in processing order.
    pub offsets: Vec<(usize, usize)>,
    pub sigma: f64,
    pub probe_file: Option<String>,
    pub truth_file: Option<String>,
    pub intensity_files: Vec<String>,
    pub sampling_ratio: f64,
    /// How the data were generated, when simulated.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulation: Option<SimSpec>,
}

pub fn intensity_file(j: usize) -> String {
    format!("intensity_{j:04}.cimg")
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::json(path, e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub(crate) fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::json(path, e))
}

pub(crate) fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Writes `data` into `dir` (created if needed) and returns the manifest.
pub fn save(
    dir: impl AsRef<Path>,
    data: &PtychoDataset,
    simulation: Option<SimSpec>,
) -> Result<DatasetManifest> {
    let dir = dir.as_ref();
    create_dir(dir)?;
    let geom = data.geometry();
    let probe_file = match data.probe() {
        Some(p) => {
            cimg::write_complex(dir.join("probe.cimg"), p)?;
            Some("probe.cimg".to_string())
        }
        None => None,
    };
    let truth_file = match data.truth() {
        Some(t) => {
            cimg::write_complex(dir.join("truth.cimg"), t)?;
            Some("truth.cimg".to_string())
        }
        None => None,
    };
    let mut intensity_files = Vec::with_capacity(geom.n_scans());
    for (j, frame) in data.intensities().iter().enumerate() {
        let name = intensity_file(j);
        cimg::write_real(dir.join(&name), frame)?;
        intensity_files.push(name);
    }
    let manifest = DatasetManifest {
        format_version: FORMAT_VERSION,
        object_shape: geom.object_shape(),
        window: geom.window(),
        offsets: geom.offsets().to_vec(),
        sigma: data.sigma(),
        probe_file,
        truth_file,
        intensity_files,
        sampling_ratio: ptycho_core::sim::sampling_ratio(geom)?,
        simulation,
    };
    write_json(&dir.join(MANIFEST), &manifest)?;
    Ok(manifest)
}

/// Loads a dataset directory written by [`save`].
pub fn load(dir: impl AsRef<Path>) -> Result<(PtychoDataset, DatasetManifest)> {
    let dir = dir.as_ref();
    let path: PathBuf = dir.join(MANIFEST);
    let m: DatasetManifest = read_json(&path)?;
    if m.format_version != FORMAT_VERSION {
        return Err(Error::format(
            &path,
            format!("unsupported format version {}", m.format_version),
        ));
    }
    let geom = ScanGeometry::new(m.object_shape, m.window, m.offsets.clone())?;
    let intensities = m
        .intensity_files
        .iter()
        .map(|f| cimg::read_real(dir.join(f)))
        .collect::<Result<Vec<_>>>()?;
    let probe = m
        .probe_file
        .as_ref()
        .map(|f| cimg::read_complex(dir.join(f)))
        .transpose()?;
    let truth = m
        .truth_file
        .as_ref()
        .map(|f| cimg::read_complex(dir.join(f)))
        .transpose()?;
    let data = PtychoDataset::new(geom, intensities, m.sigma, probe, truth)?;
    Ok((data, m))
}
