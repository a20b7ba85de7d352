use crate::error::{Error, Result};
use crate::image::Image;
use crate::imgops::{adjoint_diff, forward_diff};
use crate::maps::LltMaps;

/// A fixed (source, target) channel pair with precomputed gradients.
pub(crate) struct LltProblem<'a> {
    pub(crate) width: usize,
    pub(crate) height: usize,
    source: &'a [f64],
    target: &'a [f64],
    src_gx: Vec<f64>,
    src_gy: Vec<f64>,
    tgt_gx: Vec<f64>,
    tgt_gy: Vec<f64>,
    alpha: f64,
    beta: f64,
    scratch_x: Vec<f64>,
    scratch_y: Vec<f64>,
    scratch_lap: Vec<f64>,
}

impl<'a> LltProblem<'a> {
    pub(crate) fn new(source: &'a Image, target: &'a Image, alpha: f64, beta: f64) -> Result<Self> {
        source.ensure_same_dims(target)?;
        if !alpha.is_finite() || !beta.is_finite() {
            return Err(Error::InvalidParameter("alpha and beta must be finite".into()));
        }
        let (w, h) = source.dims();
        let n = w * h;
        let mut src_gx = vec![0.0; n];
        let mut src_gy = vec![0.0; n];
        let mut tgt_gx = vec![0.0; n];
        let mut tgt_gy = vec![0.0; n];
        forward_diff(source.as_slice(), w, h, &mut src_gx, &mut src_gy);
        forward_diff(target.as_slice(), w, h, &mut tgt_gx, &mut tgt_gy);
        Ok(LltProblem {
            width: w,
            height: h,
            source: source.as_slice(),
            target: target.as_slice(),
            src_gx,
            src_gy,
            tgt_gx,
            tgt_gy,
            alpha,
            beta,
            scratch_x: vec![0.0; n],
            scratch_y: vec![0.0; n],
            scratch_lap: vec![0.0; n],
        })
    }

    pub(crate) fn objective(&self, a: &[f64], b: &[f64]) -> f64 {
        let (w, h) = (self.width, self.height);
        let mut data = 0.0;
        let mut grad = 0.0;
        for p in 0..w * h {
            let r = a[p] * self.source[p] + b[p] - self.target[p];
            data += r * r;
            let rx = a[p] * self.src_gx[p] - self.tgt_gx[p];
            let ry = a[p] * self.src_gy[p] - self.tgt_gy[p];
            grad += rx * rx + ry * ry;
        }
        let smooth = if self.beta != 0.0 {
            squared_gradient_norm(a, w, h) + squared_gradient_norm(b, w, h)
        } else {
            0.0
        };
        data + self.alpha * grad + self.beta * smooth
    }

    /// Writes `∂E/∂A` and `∂E/∂B` into `ga`, `gb`.
    pub(crate) fn gradient(&mut self, a: &[f64], b: &[f64], ga: &mut [f64], gb: &mut [f64]) {
        let (w, h) = (self.width, self.height);
        let two_alpha = 2.0 * self.alpha;
        for p in 0..w * h {
            let r = a[p] * self.source[p] + b[p] - self.target[p];
            let rx = a[p] * self.src_gx[p] - self.tgt_gx[p];
            let ry = a[p] * self.src_gy[p] - self.tgt_gy[p];
            ga[p] = 2.0 * self.source[p] * r
                + two_alpha * (self.src_gx[p] * rx + self.src_gy[p] * ry);
            gb[p] = 2.0 * r;
        }
        if self.beta != 0.0 {
            let two_beta = 2.0 * self.beta;
            for (map, out) in [(a, &mut *ga), (b, &mut *gb)] {
                forward_diff(map, w, h, &mut self.scratch_x, &mut self.scratch_y);
                adjoint_diff(&self.scratch_x, &self.scratch_y, w, h, &mut self.scratch_lap);
                for (o, l) in out.iter_mut().zip(&self.scratch_lap) {
                    *o += two_beta * l;
                }
            }
        }
    }
}

/// `‖∇u‖²` summed over both directions.
fn squared_gradient_norm(u: &[f64], w: usize, h: usize) -> f64 {
    let mut acc = 0.0;
    for r in 0..h {
        let row = &u[r * w..(r + 1) * w];
        for c in 0..w.saturating_sub(1) {
            let d = row[c + 1] - row[c];
            acc += d * d;
        }
        if r + 1 < h {
            let next = &u[(r + 1) * w..(r + 2) * w];
            for c in 0..w {
                let d = next[c] - row[c];
                acc += d * d;
            }
        }
    }
    acc
}

/// Evaluates the LLT energy of `maps` for mapping `source` onto `target`.
pub fn llt_objective(
    maps: &LltMaps,
    source: &Image,
    target: &Image,
    alpha: f64,
    beta: f64,
) -> Result<f64> {
    maps.ensure_matches(source)?;
    let problem = LltProblem::new(source, target, alpha, beta)?;
    let e = problem.objective(maps.gain().as_slice(), maps.offset().as_slice());
    if !e.is_finite() {
        return Err(Error::NonFiniteObjective { iterations: 0 });
    }
    Ok(e)
}

/// Analytic gradients `(∂E/∂A, ∂E/∂B)` of [`llt_objective`].
pub fn llt_gradients(
    maps: &LltMaps,
    source: &Image,
    target: &Image,
    alpha: f64,
    beta: f64,
) -> Result<(Image, Image)> {
    maps.ensure_matches(source)?;
    let mut problem = LltProblem::new(source, target, alpha, beta)?;
    let (w, h) = source.dims();
    let mut ga = vec![0.0; w * h];
    let mut gb = vec![0.0; w * h];
    problem.gradient(maps.gain().as_slice(), maps.offset().as_slice(), &mut ga, &mut gb);
    Ok((Image::new(w, h, ga)?, Image::new(w, h, gb)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_on_equal_channels_is_stationary() {
        let src = Image::from_fn(7, 5, |r, c| 0.1 * r as f64 + 0.03 * (c * c) as f64).unwrap();
        let maps = LltMaps::identity(7, 5);
        assert_eq!(llt_objective(&maps, &src, &src, 1.0, 0.1).unwrap(), 0.0);
        let (ga, gb) = llt_gradients(&maps, &src, &src, 1.0, 0.1).unwrap();
        assert!(ga.as_slice().iter().all(|&v| v == 0.0));
        assert!(gb.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn zero_maps_without_regularization() {
        let src = Image::from_fn(4, 4, |r, c| (r + c) as f64 / 8.0).unwrap();
        let tgt = Image::from_fn(4, 4, |r, c| ((r * 3 + c) % 5) as f64 / 5.0).unwrap();
        let maps = LltMaps::new(Image::zeros(4, 4), Image::zeros(4, 4)).unwrap();
        let e = llt_objective(&maps, &src, &tgt, 0.0, 0.0).unwrap();
        let expect: f64 = tgt.as_slice().iter().map(|v| v * v).sum();
        assert!((e - expect).abs() < 1e-15);
        let (_, gb) = llt_gradients(&maps, &src, &tgt, 0.0, 0.0).unwrap();
        for (g, t) in gb.as_slice().iter().zip(tgt.as_slice()) {
            assert_eq!(*g, -2.0 * t);
        }
    }

    #[test]
    fn mismatched_dimensions() {
        let maps = LltMaps::identity(4, 4);
        let a = Image::zeros(4, 4);
        let b = Image::zeros(4, 3);
        assert!(llt_objective(&maps, &a, &b, 1.0, 0.1).is_err());
        assert!(llt_gradients(&maps, &b, &b, 1.0, 0.1).is_err());
    }
}
