//! Synthetic multispectral scenes and the chromatic camera simulator.
//!
//! A scene is a back-to-front list of planar layers, each with a coverage
//! mask and one reflectance texture per wavelength. Rendering a slice
//! blurs every layer with a Gaussian whose width grows linearly with the
//! layer's distance from the focus depth, then alpha-composites the layers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::image::Image;
use crate::imgops::gaussian_blur;
use crate::stack::{CapturedSlice, MultispectralFocalStack, SpectralVaryingStack};

/// Nearest and farthest scene depth used by the default schedules.
pub const DEPTH_RANGE: (f64, f64) = (1.0, 10.0);
/// First and last central wavelength of the default spectral layout, nm.
pub const WAVELENGTH_RANGE: (f64, f64) = (430.0, 700.0);
pub const DEFAULT_KAPPA: f64 = 1.5;

/// Blur widths below this are treated as in focus. A Gaussian this narrow
/// has neighbour taps that underflow to zero anyway.
const MIN_BLUR_SIGMA: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct SceneLayer {
    pub depth: f64,
    /// Coverage in `[0, 1]`.
    pub mask: Image,
    /// One reflectance texture per wavelength.
    pub spectra: Vec<Image>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayeredScene {
    layers: Vec<SceneLayer>,
    wavelength_schedule: Vec<f64>,
    width: usize,
    height: usize,
}

impl LayeredScene {
    /// `layers` are ordered back to front.
    pub fn new(layers: Vec<SceneLayer>, wavelength_schedule: Vec<f64>) -> Result<Self> {
        let Some(first) = layers.first() else {
            return Err(Error::InvalidParameter("scene has no layers".into()));
        };
        let (width, height) = first.mask.dims();
        let m = wavelength_schedule.len();
        if m == 0 {
            return Err(Error::InvalidParameter("scene has no wavelengths".into()));
        }
        if let Some(i) = wavelength_schedule.windows(2).position(|p| p[1] <= p[0]) {
            return Err(Error::NonMonotoneWavelengths { position: i + 1 });
        }
        for (j, layer) in layers.iter().enumerate() {
            if !layer.depth.is_finite() {
                return Err(Error::InvalidParameter(format!("layer {j} depth is not finite")));
            }
            if layers[..j].iter().any(|l| l.depth == layer.depth) {
                return Err(Error::InvalidParameter(format!(
                    "layer {j} repeats depth {}",
                    layer.depth
                )));
            }
            if layer.spectra.len() != m {
                return Err(Error::ScheduleLength {
                    what: "layer spectra",
                    expected: m,
                    found: layer.spectra.len(),
                });
            }
            first.mask.ensure_same_dims(&layer.mask)?;
            for tex in &layer.spectra {
                first.mask.ensure_same_dims(tex)?;
            }
            if layer.mask.as_slice().iter().any(|&v| !(0.0..=1.0).contains(&v)) {
                return Err(Error::InvalidParameter(format!(
                    "layer {j} mask leaves [0, 1]"
                )));
            }
        }
        for p in 0..width * height {
            if !layers.iter().any(|l| l.mask.as_slice()[p] >= 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "pixel ({}, {}) is not fully covered by any layer",
                    p / width,
                    p % width
                )));
            }
        }
        Ok(LayeredScene {
            layers,
            wavelength_schedule,
            width,
            height,
        })
    }

    pub fn layers(&self) -> &[SceneLayer] {
        &self.layers
    }

    pub fn wavelength_schedule(&self) -> &[f64] {
        &self.wavelength_schedule
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }
}

/// Linear defocus: a layer at depth `z` seen with focus at `f` is blurred by
/// a Gaussian of width `kappa · |z − f|` pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct DefocusModel {
    kappa: f64,
    focus_depths: Vec<f64>,
}

impl DefocusModel {
    pub fn new(kappa: f64, focus_depths: Vec<f64>) -> Result<Self> {
        if !(kappa >= 0.0 && kappa.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "kappa must be non-negative, got {kappa}"
            )));
        }
        if focus_depths.is_empty() {
            return Err(Error::InvalidParameter("no focus depths".into()));
        }
        for (k, d) in focus_depths.iter().enumerate() {
            if !d.is_finite() || focus_depths[..k].contains(d) {
                return Err(Error::InvalidParameter(format!(
                    "focus depth {k} is not finite and distinct"
                )));
            }
        }
        Ok(DefocusModel {
            kappa,
            focus_depths,
        })
    }

    /// `n` focus depths evenly spaced over [`DEPTH_RANGE`].
    pub fn uniform(n: usize, kappa: f64) -> Result<Self> {
        Self::new(kappa, linspace(DEPTH_RANGE.0, DEPTH_RANGE.1, n))
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn focus_depths(&self) -> &[f64] {
        &self.focus_depths
    }

    pub fn blur_sigma(&self, layer_depth: f64, focus_depth: f64) -> f64 {
        self.kappa * (layer_depth - focus_depth).abs()
    }
}

/// `m` central wavelengths evenly spaced over [`WAVELENGTH_RANGE`]; ten
/// channels give 430, 460, …, 700 nm.
pub fn default_wavelengths(m: usize) -> Vec<f64> {
    linspace(WAVELENGTH_RANGE.0, WAVELENGTH_RANGE.1, m)
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// Generates a deterministic random layered scene.
///
/// Each layer carries a multi-octave texture `T1` and a coarse one `T2`; channel `λ` of the layer is `m(λ) + a(λ)·T1 + b(λ)·T2`, where the
/// spectral curves `m`, `a`, `b` vary smoothly with wavelength. The back
/// layer fills the frame; the others are ellipses or star polygons.
pub fn synth_scene(
    width: usize,
    height: usize,
    n_layers: usize,
    n_wavelengths: usize,
    seed: u64,
) -> Result<LayeredScene> {
    if width < 16 || height < 16 {
        return Err(Error::InvalidParameter(format!(
            "scene must be at least 16x16, got {width}x{height}"
        )));
    }
    if n_layers < 1 {
        return Err(Error::InvalidParameter("n_layers must be at least 1".into()));
    }
    if n_wavelengths < 2 {
        return Err(Error::InvalidParameter("n_wavelengths must be at least 2".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let wavelengths = default_wavelengths(n_wavelengths);

    let mut depths = sample_depths(&mut rng, n_layers);
    depths.sort_by(|a, b| b.total_cmp(a));

    let coarse_sigma = (width.min(height) as f64 / 8.0).max(2.0);
    let mut layers = Vec::with_capacity(n_layers);
    for (j, &depth) in depths.iter().enumerate() {
        let fine = multiscale_noise(&mut rng, width, height)?;
        let coarse = band_limited_noise(&mut rng, width, height, coarse_sigma)?;
        let curves = SpectralCurves::random(&mut rng);
        let spectra = wavelengths
            .iter()
            .map(|&wl| {
                let u = (wl - WAVELENGTH_RANGE.0) / (WAVELENGTH_RANGE.1 - WAVELENGTH_RANGE.0);
                let (m, a, b) = curves.at(u);
                let data = fine
                    .iter()
                    .zip(&coarse)
                    .map(|(t1, t2)| (m + a * t1 + b * t2).clamp(0.0, 1.0))
                    .collect();
                Image::new(width, height, data)
            })
            .collect::<Result<Vec<_>>>()?;
        let mask = if j == 0 {
            Image::filled(width, height, 1.0)
        } else {
            random_shape(&mut rng, width, height)?
        };
        layers.push(SceneLayer {
            depth,
            mask,
            spectra,
        });
    }
    LayeredScene::new(layers, wavelengths)
}

fn rng_range(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

/// Distinct depths in [`DEPTH_RANGE`], at least half a unit apart when
/// the range allows it.
fn sample_depths(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let (lo, hi) = DEPTH_RANGE;
    let min_gap = if n > 1 { ((hi - lo) / (2.0 * n as f64)).min(0.5) } else { 0.0 };
    let mut depths: Vec<f64> = Vec::with_capacity(n);
    let mut attempts = 0;
    while depths.len() < n {
        let d = rng_range(rng, lo, hi);
        attempts += 1;
        let gap_ok = depths.iter().all(|&e| (e - d).abs() >= min_gap);
        if (gap_ok || attempts > 10_000) && !depths.contains(&d) {
            depths.push(d);
        }
    }
    depths
}

/// Zero-mean, unit-variance Gaussian-filtered white noise.
fn band_limited_noise(
    rng: &mut ChaCha8Rng,
    width: usize,
    height: usize,
    sigma: f64,
) -> Result<Vec<f64>> {
    let white = Image::from_fn(width, height, |_, _| rng_range(rng, -1.0, 1.0))?;
    let mut v = gaussian_blur(&white, sigma)?.into_vec();
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    let inv_std = if var > 0.0 { 1.0 / var.sqrt() } else { 0.0 };
    v.iter_mut().for_each(|x| *x = (*x - mean) * inv_std);
    Ok(v)
}

/// Sum of band-limited octaves with amplitude proportional to scale, a
/// rough 1/f spectrum like natural image texture. Unit variance.
fn multiscale_noise(rng: &mut ChaCha8Rng, width: usize, height: usize) -> Result<Vec<f64>> {
    let base = rng_range(rng, 1.0, 2.0);
    let max_sigma = width.min(height) as f64 / 6.0;
    let mut acc = vec![0.0; width * height];
    let mut sigma = base;
    while sigma <= max_sigma {
        let octave = band_limited_noise(rng, width, height, sigma)?;
        let amp = sigma.sqrt();
        acc.iter_mut().zip(&octave).for_each(|(a, o)| *a += amp * o);
        sigma *= 2.0;
    }
    let n = acc.len() as f64;
    let mean = acc.iter().sum::<f64>() / n;
    let var = acc.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    let inv_std = if var > 0.0 { 1.0 / var.sqrt() } else { 0.0 };
    acc.iter_mut().for_each(|x| *x = (*x - mean) * inv_std);
    Ok(acc)
}

/// Smooth per-layer reflectance parameters as functions of the normalized
/// wavelength `u ∈ [0, 1]`.
struct SpectralCurves {
    mean: (f64, f64, f64, f64),
    contrast: (f64, f64, f64, f64),
    coarse: (f64, f64, f64),
}

impl SpectralCurves {
    fn random(rng: &mut ChaCha8Rng) -> Self {
        let tau = std::f64::consts::TAU;
        SpectralCurves {
            mean: (
                rng_range(rng, 0.35, 0.65),
                rng_range(rng, 0.05, 0.15),
                rng_range(rng, 0.4, 1.2),
                rng_range(rng, 0.0, tau),
            ),
            contrast: (
                rng_range(rng, 0.08, 0.12),
                rng_range(rng, 0.01, 0.04),
                rng_range(rng, 0.4, 1.2),
                rng_range(rng, 0.0, tau),
            ),
            coarse: (
                rng_range(rng, 0.02, 0.06),
                rng_range(rng, 0.3, 1.0),
                rng_range(rng, 0.0, tau),
            ),
        }
    }

    fn at(&self, u: f64) -> (f64, f64, f64) {
        let tau = std::f64::consts::TAU;
        let (m0, m1, mf, mp) = self.mean;
        let (a0, a1, af, ap) = self.contrast;
        let (b0, bf, bp) = self.coarse;
        (
            m0 + m1 * (tau * mf * u + mp).sin(),
            a0 + a1 * (tau * af * u + ap).cos(),
            b0 * (tau * bf * u + bp).sin(),
        )
    }
}

fn random_shape(rng: &mut ChaCha8Rng, width: usize, height: usize) -> Result<Image> {
    let size = width.min(height) as f64;
    let cx = rng_range(rng, 0.2, 0.8) * width as f64;
    let cy = rng_range(rng, 0.2, 0.8) * height as f64;
    let rx = rng_range(rng, 0.15, 0.35) * size;
    let ry = rng_range(rng, 0.15, 0.35) * size;
    let theta = rng_range(rng, 0.0, std::f64::consts::PI);
    let (sin_t, cos_t) = theta.sin_cos();

    if rng.random::<bool>() {
        Image::from_fn(width, height, |r, c| {
            let (dx, dy) = (c as f64 + 0.5 - cx, r as f64 + 0.5 - cy);
            let u = (dx * cos_t + dy * sin_t) / rx;
            let v = (-dx * sin_t + dy * cos_t) / ry;
            if u * u + v * v <= 1.0 { 1.0 } else { 0.0 }
        })
    } else {
        // star-shaped polygon with vertices at sorted angles
        let n_vertices = rng.random_range(5..=8);
        let vertices: Vec<(f64, f64)> = (0..n_vertices)
            .map(|k| {
                let angle = theta + std::f64::consts::TAU * k as f64 / n_vertices as f64;
                let radius = rng_range(rng, 0.6, 1.0);
                (cx + radius * rx * angle.cos(), cy + radius * ry * angle.sin())
            })
            .collect();
        Image::from_fn(width, height, |r, c| {
            if point_in_polygon(c as f64 + 0.5, r as f64 + 0.5, &vertices) { 1.0 } else { 0.0 }
        })
    }
}

fn point_in_polygon(x: f64, y: f64, poly: &[(f64, f64)]) -> bool {
    let mut inside = false;
    let mut j = poly.len() - 1;
    for i in 0..poly.len() {
        let (xi, yi) = poly[i];
        let (xj, yj) = poly[j];
        if (yi > y) != (yj > y) && x < (xj - xi) * (y - yi) / (yj - yi) + xi {
            inside = !inside;
        }
        j = i;
    }
    inside
}

/// Renders channel `wavelength_index` of the scene focused at `focus_depth`.
pub fn render_slice(
    scene: &LayeredScene,
    focus_depth: f64,
    model: &DefocusModel,
    wavelength_index: usize,
) -> Result<Image> {
    let m = scene.wavelength_schedule.len();
    if wavelength_index >= m {
        return Err(Error::InvalidParameter(format!(
            "wavelength index {wavelength_index} out of range for {m} channels"
        )));
    }
    let (w, h) = scene.dims();
    let mut canvas = vec![0.0; w * h];
    for layer in &scene.layers {
        let sigma = model.blur_sigma(layer.depth, focus_depth);
        let texture = &layer.spectra[wavelength_index];
        let (tex, mask) = if sigma < MIN_BLUR_SIGMA {
            (texture.clone(), layer.mask.clone())
        } else {
            (gaussian_blur(texture, sigma)?, gaussian_blur(&layer.mask, sigma)?)
        };
        for ((out, &t), &a) in canvas.iter_mut().zip(tex.as_slice()).zip(mask.as_slice()) {
            *out = a * t + (1.0 - a) * *out;
        }
    }
    Image::new(w, h, canvas)
}

/// Renders every (focus depth, wavelength) cell.
pub fn render_ground_truth(
    scene: &LayeredScene,
    model: &DefocusModel,
    wavelength_schedule: &[f64],
) -> Result<MultispectralFocalStack> {
    let m = scene.wavelength_schedule.len();
    if wavelength_schedule.len() != m {
        return Err(Error::ScheduleLength {
            what: "wavelength schedule",
            expected: m,
            found: wavelength_schedule.len(),
        });
    }
    let n = model.focus_depths.len();
    let cells = (0..n * m)
        .into_par_iter()
        .map(|idx| render_slice(scene, model.focus_depths[idx / m], model, idx % m))
        .collect::<Result<Vec<_>>>()?;
    MultispectralFocalStack::new(model.focus_depths.clone(), wavelength_schedule.to_vec(), cells)
}

/// Keeps one channel per slice: slice `k` is cell `(k, k)` of `gt`.
pub fn capture_spectral_varying(gt: &MultispectralFocalStack) -> Result<SpectralVaryingStack> {
    if gt.depths() != gt.wavelengths() {
        return Err(Error::ScheduleLength {
            what: "wavelength schedule",
            expected: gt.depths(),
            found: gt.wavelengths(),
        });
    }
    let slices = (0..gt.depths())
        .map(|k| CapturedSlice {
            depth_index: k,
            wavelength_nm: gt.wavelength_schedule()[k],
            image: gt.cell(k, k).clone(),
        })
        .collect();
    SpectralVaryingStack::new(
        slices,
        gt.depth_schedule().to_vec(),
        gt.wavelength_schedule().to_vec(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_layout_is_430_to_700_in_30nm_steps() {
        let wl = default_wavelengths(10);
        for (k, w) in wl.iter().enumerate() {
            assert!((w - (430.0 + 30.0 * k as f64)).abs() < 1e-9);
        }
    }

    #[test]
    fn synth_rejects_bad_arguments() {
        assert!(synth_scene(15, 32, 1, 2, 0).is_err());
        assert!(synth_scene(32, 32, 0, 2, 0).is_err());
        assert!(synth_scene(32, 32, 1, 1, 0).is_err());
    }

    #[test]
    fn synth_is_deterministic_and_seed_keyed() {
        let a = synth_scene(32, 24, 3, 4, 42).unwrap();
        let b = synth_scene(32, 24, 3, 4, 42).unwrap();
        let c = synth_scene(32, 24, 3, 4, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn single_layer_covers_frame() {
        let scene = synth_scene(24, 24, 1, 3, 5).unwrap();
        assert_eq!(scene.layers().len(), 1);
        assert!(scene.layers()[0].mask.as_slice().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn in_focus_single_layer_returns_texture() {
        let scene = synth_scene(24, 24, 1, 3, 9).unwrap();
        let depth = scene.layers()[0].depth;
        let model = DefocusModel::new(1.5, vec![depth]).unwrap();
        let out = render_slice(&scene, depth, &model, 2).unwrap();
        assert_eq!(out, scene.layers()[0].spectra[2]);
    }

    #[test]
    fn zero_kappa_removes_defocus() {
        let scene = synth_scene(24, 24, 3, 2, 1).unwrap();
        let model = DefocusModel::new(0.0, vec![1.0, 5.0, 9.0]).unwrap();
        let gt = render_ground_truth(&scene, &model, scene.wavelength_schedule()).unwrap();
        for d in 1..3 {
            for i in 0..2 {
                assert_eq!(gt.cell(d, i), gt.cell(0, i));
            }
        }
    }

    #[test]
    fn capture_takes_the_diagonal() {
        let n = 3;
        let cells = (0..n * n)
            .map(|idx| Image::filled(4, 4, (10 * (idx / n) + idx % n) as f64 / 100.0))
            .collect();
        let gt = MultispectralFocalStack::new(vec![1.0, 2.0, 3.0], vec![430.0, 565.0, 700.0], cells)
            .unwrap();
        let cap = capture_spectral_varying(&gt).unwrap();
        for k in 0..n {
            assert_eq!(cap.slice(k).image, Image::filled(4, 4, (11 * k) as f64 / 100.0));
            assert_eq!(cap.slice(k).depth_index, k);
            assert_eq!(cap.slice(k).wavelength_nm, gt.wavelength_schedule()[k]);
        }
    }

    #[test]
    fn capture_rejects_non_square_grid() {
        let gt = MultispectralFocalStack::new(vec![1.0, 2.0], vec![500.0], vec![Image::zeros(2, 2); 2])
            .unwrap();
        assert!(capture_spectral_varying(&gt).is_err());
    }

    #[test]
    fn one_by_one_ground_truth() {
        let scene = LayeredScene::new(
            vec![SceneLayer {
                depth: 4.0,
                mask: Image::filled(8, 8, 1.0),
                spectra: vec![Image::filled(8, 8, 0.25)],
            }],
            vec![550.0],
        )
        .unwrap();
        let model = DefocusModel::new(1.5, vec![2.0]).unwrap();
        let gt = render_ground_truth(&scene, &model, &[550.0]).unwrap();
        assert_eq!(gt.cells().len(), 1);
        assert_eq!(gt.cell(0, 0), &render_slice(&scene, 2.0, &model, 0).unwrap());
        let cap = capture_spectral_varying(&gt).unwrap();
        assert_eq!(cap.slice(0).image, *gt.cell(0, 0));
        assert!(render_ground_truth(&scene, &model, &[500.0, 600.0]).is_err());
    }

    #[test]
    fn scene_requires_full_coverage() {
        let layer = SceneLayer {
            depth: 2.0,
            mask: Image::filled(4, 4, 0.5),
            spectra: vec![Image::zeros(4, 4)],
        };
        assert!(LayeredScene::new(vec![layer], vec![500.0]).is_err());
    }
}
