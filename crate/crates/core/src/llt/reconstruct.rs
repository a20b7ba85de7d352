use rayon::prelude::*;

use crate::config::ReconConfig;
use crate::error::{Error, Result};
use crate::image::Image;
use crate::imgops::gaussian_blur;
use crate::maps::LltMaps;
use crate::stack::{MultispectralFocalStack, SpectralVaryingStack};

use super::fit::{fit_llt, FitReport};

/// `A ⊙ sharp + B` without clamping.
pub fn apply_maps(maps: &LltMaps, sharp_source: &Image) -> Result<Image> {
    maps.ensure_matches(sharp_source)?;
    let data = maps
        .gain()
        .as_slice()
        .iter()
        .zip(maps.offset().as_slice())
        .zip(sharp_source.as_slice())
        .map(|((&a, &b), &s)| a * s + b)
        .collect();
    Image::new(sharp_source.width(), sharp_source.height(), data)
}

/// Transfers a sharp channel through fitted maps, clamped to `[0, 1]`.
pub fn transfer_channel(maps: &LltMaps, sharp_source: &Image) -> Result<Image> {
    Ok(apply_maps(maps, sharp_source)?.clamp_unit())
}

/// Fit diagnostics for one off-diagonal output cell.
#[derive(Debug, Clone)]
pub struct PairReport {
    pub depth: usize,
    pub wavelength: usize,
    pub report: FitReport,
}

#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub stack: MultispectralFocalStack,
    /// One entry per fitted cell, in depth-major order.
    pub reports: Vec<PairReport>,
}

/// Recovers the full depths × wavelengths stack from a spectral-varying
/// stack.
///
/// Runs on the ambient rayon pool; each pair fit is sequential, so the
/// result does not depend on the number of worker threads.
pub fn reconstruct_focal_stack(
    captured: &SpectralVaryingStack,
    cfg: &ReconConfig,
) -> Result<MultispectralFocalStack> {
    reconstruct_with_reports(captured, cfg).map(|r| r.stack)
}

pub fn reconstruct_with_reports(
    captured: &SpectralVaryingStack,
    cfg: &ReconConfig,
) -> Result<Reconstruction> {
    cfg.validate()?;
    let n = captured.len();
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "reconstruction needs at least 2 slices, got {n}"
        )));
    }

    let blurred: Vec<Image> = captured
        .slices()
        .par_iter()
        .map(|s| gaussian_blur(&s.image, cfg.blur_sigma))
        .collect::<Result<_>>()?;

    // Slice position doubles as wavelength index.
    let source_of_depth: Vec<usize> = (0..n)
        .map(|d| captured.position_of_depth(d).expect("validated stack covers every depth"))
        .collect();

    let cells: Vec<(Image, Option<FitReport>)> = (0..n * n)
        .into_par_iter()
        .map(|idx| {
            let (depth, wavelength) = (idx / n, idx % n);
            let k = source_of_depth[depth];
            let sharp = &captured.slice(k).image;
            if wavelength == k {
                return Ok((sharp.clone(), None));
            }
            let fitted = fit_llt(&blurred[k], &blurred[wavelength], cfg)
                .and_then(|(maps, report)| Ok((transfer_channel(&maps, sharp)?, Some(report))));
            fitted.map_err(|e| Error::Fit {
                depth,
                wavelength,
                source: Box::new(e),
            })
        })
        .collect::<Result<_>>()?;

    let mut images = Vec::with_capacity(n * n);
    let mut reports = Vec::with_capacity(n * (n - 1));
    for (idx, (img, report)) in cells.into_iter().enumerate() {
        images.push(img);
        if let Some(report) = report {
            reports.push(PairReport {
                depth: idx / n,
                wavelength: idx % n,
                report,
            });
        }
    }
    let stack = MultispectralFocalStack::new(
        captured.depth_schedule().to_vec(),
        captured.wavelength_schedule().to_vec(),
        images,
    )?;
    Ok(Reconstruction { stack, reports })
}
