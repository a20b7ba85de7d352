//! PSNR / SSIM and per-cell stack evaluation.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::image::Image;
use crate::imgops::{convolve_separable, gaussian_kernel};
use crate::stack::MultispectralFocalStack;

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;

/// Peak signal-to-noise ratio in dB for intensities with peak 1.0.
/// Identical images give `f64::INFINITY`.
pub fn psnr(reference: &Image, test: &Image) -> Result<f64> {
    reference.ensure_same_dims(test)?;
    let n = reference.len();
    if n == 0 {
        return Err(Error::InvalidParameter("psnr of an empty image".into()));
    }
    let sse: f64 = reference
        .as_slice()
        .iter()
        .zip(test.as_slice())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    let mse = sse / n as f64;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (1.0 / mse).log10())
}

/// Mean SSIM using an 11×11 Gaussian window (σ = 1.5), K1 = 0.01,
/// K2 = 0.03, dynamic range 1.0 and replicate boundaries.
pub fn ssim(reference: &Image, test: &Image) -> Result<f64> {
    reference.ensure_same_dims(test)?;
    let (w, h) = reference.dims();
    if w < SSIM_WINDOW || h < SSIM_WINDOW {
        return Err(Error::InvalidParameter(format!(
            "ssim needs at least {SSIM_WINDOW}x{SSIM_WINDOW} pixels, got {w}x{h}"
        )));
    }
    let kernel = gaussian_kernel(SSIM_SIGMA)?;
    debug_assert_eq!(kernel.len(), SSIM_WINDOW);

    let x = reference.as_slice();
    let y = test.as_slice();
    let product = |f: &dyn Fn(usize) -> f64| {
        Image::from_finite(w, h, (0..w * h).map(f).collect())
    };
    let mu_x = convolve_separable(reference, &kernel);
    let mu_y = convolve_separable(test, &kernel);
    let xx = convolve_separable(&product(&|p| x[p] * x[p]), &kernel);
    let yy = convolve_separable(&product(&|p| y[p] * y[p]), &kernel);
    let xy = convolve_separable(&product(&|p| x[p] * y[p]), &kernel);

    let c1 = (SSIM_K1 * 1.0).powi(2);
    let c2 = (SSIM_K2 * 1.0).powi(2);
    let mut total = 0.0;
    for p in 0..w * h {
        let (mx, my) = (mu_x.as_slice()[p], mu_y.as_slice()[p]);
        let var_x = xx.as_slice()[p] - mx * mx;
        let var_y = yy.as_slice()[p] - my * my;
        let cov = xy.as_slice()[p] - mx * my;
        let num = (2.0 * mx * my + c1) * (2.0 * cov + c2);
        let den = (mx * mx + my * my + c1) * (var_x + var_y + c2);
        total += num / den;
    }
    Ok(total / (w * h) as f64)
}

/// Per-cell PSNR / SSIM of a reconstruction against ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalTable {
    pub depth_schedule: Vec<f64>,
    pub wavelength_schedule: Vec<f64>,
    /// Depth-major `depths × wavelengths` grid, possibly infinite.
    pub psnr: Vec<f64>,
    pub ssim: Vec<f64>,
}

/// Mean of a set of cell values; infinite PSNRs are left out and counted
/// separately.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellAverage {
    pub psnr_db: f64,
    pub ssim: f64,
    pub finite_cells: usize,
    pub infinite_cells: usize,
}

impl EvalTable {
    pub fn depths(&self) -> usize {
        self.depth_schedule.len()
    }

    pub fn wavelengths(&self) -> usize {
        self.wavelength_schedule.len()
    }

    pub fn psnr_at(&self, depth: usize, wavelength: usize) -> f64 {
        self.psnr[depth * self.wavelengths() + wavelength]
    }

    pub fn ssim_at(&self, depth: usize, wavelength: usize) -> f64 {
        self.ssim[depth * self.wavelengths() + wavelength]
    }

    fn average_of(&self, cells: impl Iterator<Item = (usize, usize)>) -> CellAverage {
        let mut psnr_sum = 0.0;
        let mut ssim_sum = 0.0;
        let (mut finite, mut infinite) = (0, 0);
        for (d, i) in cells {
            let p = self.psnr_at(d, i);
            if p.is_finite() {
                psnr_sum += p;
                finite += 1;
            } else {
                infinite += 1;
            }
            ssim_sum += self.ssim_at(d, i);
        }
        let total = finite + infinite;
        CellAverage {
            psnr_db: if finite > 0 { psnr_sum / finite as f64 } else { f64::INFINITY },
            ssim: if total > 0 { ssim_sum / total as f64 } else { f64::NAN },
            finite_cells: finite,
            infinite_cells: infinite,
        }
    }

    pub fn depth_average(&self, depth: usize) -> CellAverage {
        self.average_of((0..self.wavelengths()).map(move |i| (depth, i)))
    }

    pub fn overall_average(&self) -> CellAverage {
        let m = self.wavelengths();
        self.average_of((0..self.depths() * m).map(move |p| (p / m, p % m)))
    }

    /// Average over cells whose depth index differs from the wavelength
    /// index, i.e. the cells a reconstruction actually synthesizes.
    pub fn off_diagonal_average(&self) -> CellAverage {
        let m = self.wavelengths();
        self.average_of(
            (0..self.depths() * m)
                .map(move |p| (p / m, p % m))
                .filter(|(d, i)| d != i),
        )
    }

    /// CSV with header `depth_index,wavelength_nm,psnr_db,ssim`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("depth_index,wavelength_nm,psnr_db,ssim\n");
        for d in 0..self.depths() {
            for (i, wl) in self.wavelength_schedule.iter().enumerate() {
                let _ = writeln!(
                    out,
                    "{},{},{},{:.4}",
                    d,
                    wl,
                    format_psnr(self.psnr_at(d, i)),
                    self.ssim_at(d, i)
                );
            }
        }
        out
    }
}

/// Two decimals, or `Inf` for identical images.
pub fn format_psnr(db: f64) -> String {
    if db.is_infinite() && db > 0.0 {
        "Inf".to_string()
    } else {
        format!("{db:.2}")
    }
}

pub fn evaluate_stack(
    gt: &MultispectralFocalStack,
    recon: &MultispectralFocalStack,
) -> Result<EvalTable> {
    if gt.depths() != recon.depths() || gt.wavelengths() != recon.wavelengths() {
        return Err(Error::ScheduleLength {
            what: "reconstruction grid",
            expected: gt.depths() * gt.wavelengths(),
            found: recon.depths() * recon.wavelengths(),
        });
    }
    if gt.depth_schedule() != recon.depth_schedule()
        || gt.wavelength_schedule() != recon.wavelength_schedule()
    {
        return Err(Error::InvalidParameter(
            "ground truth and reconstruction schedules differ".into(),
        ));
    }
    let scores: Vec<(f64, f64)> = gt
        .cells()
        .par_iter()
        .zip(recon.cells())
        .map(|(g, r)| Ok((psnr(g, r)?, ssim(g, r)?)))
        .collect::<Result<_>>()?;
    let (psnr, ssim) = scores.into_iter().unzip();
    Ok(EvalTable {
        depth_schedule: gt.depth_schedule().to_vec(),
        wavelength_schedule: gt.wavelength_schedule().to_vec(),
        psnr,
        ssim,
    })
}
