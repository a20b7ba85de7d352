//! Discrete image operators: Gaussian blur, forward-difference gradient and
//! its adjoint, and element-wise arithmetic.
//!
//! All boundaries replicate the edge pixel. The gradient is a forward
//! difference that is zero in the last column (x) or last row (y), and
//! [`gradient_adjoint`] is its exact transpose, so `∇ᵀ∇` built from the two
//! is the exact Hessian of `‖∇u‖²/2`.

use crate::error::{Error, Result};
use crate::image::Image;

/// Horizontal and vertical forward differences of an image.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientPair {
    pub gx: Image,
    pub gy: Image,
}

/// Normalized 1-D Gaussian taps on `[-r, r]` with `r = ceil(3σ)`.
pub fn gaussian_kernel(sigma: f64) -> Result<Vec<f64>> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "gaussian sigma must be positive, got {sigma}"
        )));
    }
    let radius = (3.0 * sigma).ceil() as isize;
    let denom = 2.0 * sigma * sigma;
    let mut taps: Vec<f64> = (-radius..=radius)
        .map(|x| if x == 0 { 1.0 } else { (-((x * x) as f64) / denom).exp() })
        .collect();
    let sum: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= sum);
    Ok(taps)
}

/// Separable Gaussian blur, horizontal pass first.
pub fn gaussian_blur(img: &Image, sigma: f64) -> Result<Image> {
    let kernel = gaussian_kernel(sigma)?;
    Ok(convolve_separable(img, &kernel))
}

/// Convolves rows then columns with the same odd-length symmetric kernel.
pub(crate) fn convolve_separable(img: &Image, kernel: &[f64]) -> Image {
    let (w, h) = img.dims();
    if w == 0 || h == 0 {
        return img.clone();
    }
    let radius = (kernel.len() / 2) as isize;
    let src = img.as_slice();
    let last_col = w as isize - 1;
    let last_row = h as isize - 1;

    let mut tmp = vec![0.0; w * h];
    for r in 0..h {
        let row = &src[r * w..(r + 1) * w];
        let out = &mut tmp[r * w..(r + 1) * w];
        for (c, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (t, &k) in kernel.iter().enumerate() {
                let cc = (c as isize + t as isize - radius).clamp(0, last_col) as usize;
                acc += k * row[cc];
            }
            *o = acc;
        }
    }

    let mut out = vec![0.0; w * h];
    for r in 0..h {
        let dst = &mut out[r * w..(r + 1) * w];
        for (t, &k) in kernel.iter().enumerate() {
            let rr = (r as isize + t as isize - radius).clamp(0, last_row) as usize;
            let srow = &tmp[rr * w..(rr + 1) * w];
            for (d, &s) in dst.iter_mut().zip(srow) {
                *d += k * s;
            }
        }
    }
    Image::from_finite(w, h, out)
}

pub fn gradient(img: &Image) -> GradientPair {
    let (w, h) = img.dims();
    let mut gx = vec![0.0; w * h];
    let mut gy = vec![0.0; w * h];
    forward_diff(img.as_slice(), w, h, &mut gx, &mut gy);
    GradientPair {
        gx: Image::from_finite(w, h, gx),
        gy: Image::from_finite(w, h, gy),
    }
}

/// `∇ᵀ g`; satisfies `⟨∇u, g⟩ = ⟨u, ∇ᵀg⟩` for every `u`.
pub fn gradient_adjoint(g: &GradientPair) -> Result<Image> {
    g.gx.ensure_same_dims(&g.gy)?;
    let (w, h) = g.gx.dims();
    let mut out = vec![0.0; w * h];
    adjoint_diff(g.gx.as_slice(), g.gy.as_slice(), w, h, &mut out);
    Image::new(w, h, out)
}

/// Writes forward differences of `u` into `gx`, `gy`.
pub(crate) fn forward_diff(u: &[f64], w: usize, h: usize, gx: &mut [f64], gy: &mut [f64]) {
    for r in 0..h {
        let row = &u[r * w..(r + 1) * w];
        let gxr = &mut gx[r * w..(r + 1) * w];
        for c in 0..w.saturating_sub(1) {
            gxr[c] = row[c + 1] - row[c];
        }
        if w > 0 {
            gxr[w - 1] = 0.0;
        }
    }
    for r in 0..h {
        let gyr = &mut gy[r * w..(r + 1) * w];
        if r + 1 < h {
            let cur = &u[r * w..(r + 1) * w];
            let next = &u[(r + 1) * w..(r + 2) * w];
            for c in 0..w {
                gyr[c] = next[c] - cur[c];
            }
        } else {
            gyr.fill(0.0);
        }
    }
}

/// Writes `∇ᵀ(gx, gy)` into `out`. Entries of `gx` in the last column and of
/// `gy` in the last row are ignored, matching [`forward_diff`]'s range.
pub(crate) fn adjoint_diff(gx: &[f64], gy: &[f64], w: usize, h: usize, out: &mut [f64]) {
    for r in 0..h {
        let gxr = &gx[r * w..(r + 1) * w];
        let o = &mut out[r * w..(r + 1) * w];
        for c in 0..w {
            let mut v = 0.0;
            if c >= 1 {
                v += gxr[c - 1];
            }
            if c + 1 < w {
                v -= gxr[c];
            }
            o[c] = v;
        }
    }
    for r in 0..h {
        for c in 0..w {
            let mut v = 0.0;
            if r >= 1 {
                v += gy[(r - 1) * w + c];
            }
            if r + 1 < h {
                v -= gy[r * w + c];
            }
            out[r * w + c] += v;
        }
    }
}

fn zip_with(a: &Image, b: &Image, f: impl Fn(f64, f64) -> f64) -> Result<Image> {
    a.ensure_same_dims(b)?;
    let data = a
        .as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(&x, &y)| f(x, y))
        .collect();
    Image::new(a.width(), a.height(), data)
}

/// Element-wise product `a ⊙ b`.
pub fn hadamard(a: &Image, b: &Image) -> Result<Image> {
    zip_with(a, b, |x, y| x * y)
}

pub fn add(a: &Image, b: &Image) -> Result<Image> {
    zip_with(a, b, |x, y| x + y)
}

pub fn sub(a: &Image, b: &Image) -> Result<Image> {
    zip_with(a, b, |x, y| x - y)
}

pub fn scale(a: &Image, factor: f64) -> Result<Image> {
    a.map(|x| factor * x)
}
