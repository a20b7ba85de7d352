//! Directory layout of stacks and scenes on disk.
//!
//! A stack directory holds one PGM per image, named `d{kk}_w{www}.pgm`,
//! plus a `manifest.json` describing schedules and slice placement. The
//! manifest is written after every image, so a directory without one is an
//! incomplete write.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::capture::{DefocusModel, LayeredScene, SceneLayer};
use crate::error::{Error, Result};
use crate::image::Image;
use crate::stack::{CapturedSlice, MultispectralFocalStack, SpectralVaryingStack};

use super::pgm;

pub const FORMAT_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";
pub const SCENE_DIR: &str = "scene";
pub const SCENE_FILE: &str = "scene.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StackKind {
    SpectralVarying,
    FocalStack,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceEntry {
    pub depth_index: usize,
    pub wavelength_index: usize,
    pub wavelength_nm: f64,
    /// Path relative to the manifest's directory.
    pub file: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StackManifest {
    pub format_version: u32,
    pub kind: StackKind,
    pub width: usize,
    pub height: usize,
    pub depth_schedule: Vec<f64>,
    pub wavelength_schedule: Vec<f64>,
    pub slices: Vec<SliceEntry>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Stack {
    SpectralVarying(SpectralVaryingStack),
    FocalStack(MultispectralFocalStack),
}

impl Stack {
    pub fn kind(&self) -> StackKind {
        match self {
            Stack::SpectralVarying(_) => StackKind::SpectralVarying,
            Stack::FocalStack(_) => StackKind::FocalStack,
        }
    }
}

impl From<SpectralVaryingStack> for Stack {
    fn from(s: SpectralVaryingStack) -> Self {
        Stack::SpectralVarying(s)
    }
}

impl From<MultispectralFocalStack> for Stack {
    fn from(s: MultispectralFocalStack) -> Self {
        Stack::FocalStack(s)
    }
}

pub fn slice_file_name(depth_index: usize, wavelength_nm: f64) -> String {
    format!("d{:02}_w{:03}.pgm", depth_index, wavelength_nm.round() as i64)
}

fn manifest_error(path: &Path, message: impl Into<String>) -> Error {
    Error::Manifest {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| manifest_error(path, e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| manifest_error(path, e.to_string()))
}

fn prepare_dir(dir: &Path, marker: &str) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let marker = dir.join(marker);
    if marker.exists() {
        fs::remove_file(&marker).map_err(|e| Error::io(&marker, e))?;
    }
    Ok(())
}

/// Writes every image, then the manifest. Returns the manifest path.
pub fn write_stack(stack: &Stack, dir: &Path) -> Result<PathBuf> {
    prepare_dir(dir, MANIFEST_FILE)?;
    let (kind, dims, depths, waves, items): (_, _, _, _, Vec<(usize, usize, &Image)>) = match stack
    {
        Stack::SpectralVarying(s) => (
            StackKind::SpectralVarying,
            s.dims(),
            s.depth_schedule(),
            s.wavelength_schedule(),
            s.slices()
                .iter()
                .enumerate()
                .map(|(k, sl)| (sl.depth_index, k, &sl.image))
                .collect(),
        ),
        Stack::FocalStack(s) => {
            let m = s.wavelengths();
            (
                StackKind::FocalStack,
                s.dims(),
                s.depth_schedule(),
                s.wavelength_schedule(),
                s.cells()
                    .iter()
                    .enumerate()
                    .map(|(idx, img)| (idx / m, idx % m, img))
                    .collect(),
            )
        }
    };

    let mut names = HashSet::new();
    let mut slices = Vec::with_capacity(items.len());
    for (depth_index, wavelength_index, img) in items {
        let wavelength_nm = waves[wavelength_index];
        let file = slice_file_name(depth_index, wavelength_nm);
        if !names.insert(file.clone()) {
            return Err(manifest_error(
                dir,
                format!("wavelengths round to the same file name {file}"),
            ));
        }
        pgm::write(&dir.join(&file), img)?;
        slices.push(SliceEntry {
            depth_index,
            wavelength_index,
            wavelength_nm,
            file,
        });
    }

    let manifest = StackManifest {
        format_version: FORMAT_VERSION,
        kind,
        width: dims.0,
        height: dims.1,
        depth_schedule: depths.to_vec(),
        wavelength_schedule: waves.to_vec(),
        slices,
    };
    let path = dir.join(MANIFEST_FILE);
    write_json(&path, &manifest)?;
    Ok(path)
}

/// Loads and fully validates the stack in `dir`.
pub fn read_stack(dir: &Path) -> Result<Stack> {
    let path = dir.join(MANIFEST_FILE);
    if !path.is_file() {
        return Err(manifest_error(&path, "missing manifest"));
    }
    let manifest: StackManifest = read_json(&path)?;
    if manifest.format_version != FORMAT_VERSION {
        return Err(manifest_error(
            &path,
            format!("unsupported format_version {}", manifest.format_version),
        ));
    }
    let n = manifest.depth_schedule.len();
    let m = manifest.wavelength_schedule.len();

    let mut seen = HashSet::new();
    let mut images = Vec::with_capacity(manifest.slices.len());
    for entry in &manifest.slices {
        if entry.depth_index >= n || entry.wavelength_index >= m {
            return Err(manifest_error(
                &path,
                format!("slice {} indexes outside the schedules", entry.file),
            ));
        }
        if entry.wavelength_nm != manifest.wavelength_schedule[entry.wavelength_index] {
            return Err(manifest_error(
                &path,
                format!("slice {} wavelength disagrees with the schedule", entry.file),
            ));
        }
        let key = match manifest.kind {
            StackKind::SpectralVarying => (0, entry.wavelength_index),
            StackKind::FocalStack => (entry.depth_index, entry.wavelength_index),
        };
        if !seen.insert(key) {
            return Err(manifest_error(
                &path,
                format!("slice {} duplicates an earlier entry", entry.file),
            ));
        }
        let file = dir.join(&entry.file);
        let img = pgm::read(&file)?;
        if img.dims() != (manifest.width, manifest.height) {
            return Err(Error::Decode {
                path: file,
                message: format!(
                    "decoded {}x{}, manifest declares {}x{}",
                    img.width(),
                    img.height(),
                    manifest.width,
                    manifest.height
                ),
            });
        }
        images.push((entry, img));
    }

    match manifest.kind {
        StackKind::SpectralVarying => {
            if images.len() != m {
                return Err(manifest_error(
                    &path,
                    format!("{} slices for {m} wavelengths", images.len()),
                ));
            }
            images.sort_by_key(|(e, _)| e.wavelength_index);
            let slices = images
                .into_iter()
                .map(|(e, image)| CapturedSlice {
                    depth_index: e.depth_index,
                    wavelength_nm: e.wavelength_nm,
                    image,
                })
                .collect();
            SpectralVaryingStack::new(slices, manifest.depth_schedule, manifest.wavelength_schedule)
                .map(Stack::SpectralVarying)
        }
        StackKind::FocalStack => {
            if images.len() != n * m {
                return Err(manifest_error(
                    &path,
                    format!("{} cells for a {n}x{m} grid", images.len()),
                ));
            }
            images.sort_by_key(|(e, _)| (e.depth_index, e.wavelength_index));
            let cells = images.into_iter().map(|(_, img)| img).collect();
            MultispectralFocalStack::new(manifest.depth_schedule, manifest.wavelength_schedule, cells)
                .map(Stack::FocalStack)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct LayerEntry {
    depth: f64,
    mask: String,
    spectra: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct SceneManifest {
    format_version: u32,
    width: usize,
    height: usize,
    wavelength_schedule: Vec<f64>,
    kappa: f64,
    focus_depths: Vec<f64>,
    layers: Vec<LayerEntry>,
}

/// Stores a scene together with the defocus model used to render it.
pub fn write_scene(scene: &LayeredScene, model: &DefocusModel, dir: &Path) -> Result<PathBuf> {
    prepare_dir(dir, SCENE_FILE)?;
    let mut layers = Vec::with_capacity(scene.layers().len());
    for (j, layer) in scene.layers().iter().enumerate() {
        let mask = format!("l{j:02}_mask.pgm");
        pgm::write(&dir.join(&mask), &layer.mask)?;
        let mut spectra = Vec::with_capacity(layer.spectra.len());
        for (tex, wl) in layer.spectra.iter().zip(scene.wavelength_schedule()) {
            let name = format!("l{j:02}_w{:03}.pgm", wl.round() as i64);
            pgm::write(&dir.join(&name), tex)?;
            spectra.push(name);
        }
        layers.push(LayerEntry {
            depth: layer.depth,
            mask,
            spectra,
        });
    }
    let (width, height) = scene.dims();
    let manifest = SceneManifest {
        format_version: FORMAT_VERSION,
        width,
        height,
        wavelength_schedule: scene.wavelength_schedule().to_vec(),
        kappa: model.kappa(),
        focus_depths: model.focus_depths().to_vec(),
        layers,
    };
    let path = dir.join(SCENE_FILE);
    write_json(&path, &manifest)?;
    Ok(path)
}

pub fn read_scene(dir: &Path) -> Result<(LayeredScene, DefocusModel)> {
    let path = dir.join(SCENE_FILE);
    if !path.is_file() {
        return Err(manifest_error(&path, "missing scene description"));
    }
    let manifest: SceneManifest = read_json(&path)?;
    if manifest.format_version != FORMAT_VERSION {
        return Err(manifest_error(
            &path,
            format!("unsupported format_version {}", manifest.format_version),
        ));
    }
    let mut layers = Vec::with_capacity(manifest.layers.len());
    for entry in &manifest.layers {
        let spectra = entry
            .spectra
            .iter()
            .map(|f| pgm::read(&dir.join(f)))
            .collect::<Result<Vec<_>>>()?;
        layers.push(SceneLayer {
            depth: entry.depth,
            mask: pgm::read(&dir.join(&entry.mask))?,
            spectra,
        });
    }
    let scene = LayeredScene::new(layers, manifest.wavelength_schedule)?;
    if scene.dims() != (manifest.width, manifest.height) {
        return Err(manifest_error(&path, "layer images disagree with declared size"));
    }
    let model = DefocusModel::new(manifest.kappa, manifest.focus_depths)?;
    Ok((scene, model))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn focal_stack() -> MultispectralFocalStack {
        let cells = (0..6)
            .map(|idx| Image::from_fn(5, 4, |r, c| ((idx + r * 5 + c) % 9) as f64 / 8.0).unwrap())
            .collect();
        MultispectralFocalStack::new(vec![1.0, 5.5], vec![430.0, 565.0, 700.0], cells).unwrap()
    }

    #[test]
    fn file_naming() {
        assert_eq!(slice_file_name(3, 460.0), "d03_w460.pgm");
        assert_eq!(slice_file_name(12, 700.2), "d12_w700.pgm");
    }

    #[test]
    fn focal_stack_round_trip_and_layout() {
        let dir = tempfile::tempdir().unwrap();
        let stack = Stack::from(focal_stack());
        let manifest = write_stack(&stack, dir.path()).unwrap();
        assert_eq!(manifest, dir.path().join(MANIFEST_FILE));
        let pgms = fs::read_dir(dir.path())
            .unwrap()
            .filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "pgm"))
            .count();
        assert_eq!(pgms, 6);
        assert!(dir.path().join("d01_w565.pgm").is_file());
        let back = read_stack(dir.path()).unwrap();
        let (Stack::FocalStack(orig), Stack::FocalStack(back)) = (&stack, &back) else {
            panic!("kind changed");
        };
        assert_eq!(orig.depth_schedule(), back.depth_schedule());
        for (a, b) in orig.cells().iter().zip(back.cells()) {
            for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
                assert!((x - y).abs() <= 1.0 / 65535.0);
            }
        }
    }

    #[test]
    fn missing_manifest_and_missing_file() {
        let dir = tempfile::tempdir().unwrap();
        let err = read_stack(dir.path()).unwrap_err();
        assert!(err.to_string().contains("missing manifest"));

        write_stack(&Stack::from(focal_stack()), dir.path()).unwrap();
        fs::remove_file(dir.path().join("d00_w430.pgm")).unwrap();
        let err = read_stack(dir.path()).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
        assert!(err.to_string().contains("d00_w430.pgm"));
    }

    #[test]
    fn declared_size_must_match() {
        let dir = tempfile::tempdir().unwrap();
        write_stack(&Stack::from(focal_stack()), dir.path()).unwrap();
        let path = dir.path().join(MANIFEST_FILE);
        let text = fs::read_to_string(&path).unwrap().replace("\"width\": 5", "\"width\": 6");
        fs::write(&path, text).unwrap();
        assert!(matches!(read_stack(dir.path()), Err(Error::Decode { .. })));
    }
}
