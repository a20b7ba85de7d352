//! Focal stack containers.
//!
//! Both stack types validate on construction and expose read-only
//! accessors, so a value that exists always satisfies its invariants.

use std::collections::HashMap;

use crate::error::{Error, Location, Result};
use crate::image::Image;

/// One captured slice: the image focused at `depth_index`, recorded in a
/// single spectral band.
#[derive(Debug, Clone, PartialEq)]
pub struct CapturedSlice {
    pub depth_index: usize,
    pub wavelength_nm: f64,
    pub image: Image,
}

/// Output of the chromatic camera: slice `k` is recorded at
/// `wavelength_schedule[k]` and focused at `depth_schedule[depth_index]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralVaryingStack {
    slices: Vec<CapturedSlice>,
    depth_schedule: Vec<f64>,
    wavelength_schedule: Vec<f64>,
}

/// Full depths × wavelengths grid of images, stored depth-major.
#[derive(Debug, Clone, PartialEq)]
pub struct MultispectralFocalStack {
    depth_schedule: Vec<f64>,
    wavelength_schedule: Vec<f64>,
    cells: Vec<Image>,
}

/// Re-checks every invariant of a stack.
pub trait ValidateStack {
    fn validate(&self) -> Result<()>;
}

/// Returns `Ok(())` or the first violated invariant with its location.
pub fn validate_stack<S: ValidateStack + ?Sized>(stack: &S) -> Result<()> {
    stack.validate()
}

impl SpectralVaryingStack {
    pub fn new(
        slices: Vec<CapturedSlice>,
        depth_schedule: Vec<f64>,
        wavelength_schedule: Vec<f64>,
    ) -> Result<Self> {
        let stack = SpectralVaryingStack {
            slices,
            depth_schedule,
            wavelength_schedule,
        };
        stack.validate()?;
        Ok(stack)
    }

    pub fn len(&self) -> usize {
        self.slices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slices.is_empty()
    }

    pub fn slices(&self) -> &[CapturedSlice] {
        &self.slices
    }

    pub fn slice(&self, k: usize) -> &CapturedSlice {
        &self.slices[k]
    }

    pub fn depth_schedule(&self) -> &[f64] {
        &self.depth_schedule
    }

    pub fn wavelength_schedule(&self) -> &[f64] {
        &self.wavelength_schedule
    }

    pub fn dims(&self) -> (usize, usize) {
        self.slices[0].image.dims()
    }

    /// Position in `slices` of the slice focused at `depth_index`.
    pub fn position_of_depth(&self, depth_index: usize) -> Option<usize> {
        self.slices.iter().position(|s| s.depth_index == depth_index)
    }
}

impl ValidateStack for SpectralVaryingStack {
    fn validate(&self) -> Result<()> {
        let n = self.slices.len();
        if n == 0 {
            return Err(Error::InvalidParameter("stack has no slices".into()));
        }
        if self.depth_schedule.len() != n {
            return Err(Error::ScheduleLength {
                what: "depth schedule",
                expected: n,
                found: self.depth_schedule.len(),
            });
        }
        if self.wavelength_schedule.len() != n {
            return Err(Error::ScheduleLength {
                what: "wavelength schedule",
                expected: n,
                found: self.wavelength_schedule.len(),
            });
        }
        check_schedules(&self.depth_schedule, &self.wavelength_schedule)?;

        let (w, h) = self.slices[0].image.dims();
        let mut seen: HashMap<usize, usize> = HashMap::with_capacity(n);
        for (k, s) in self.slices.iter().enumerate() {
            check_image(&s.image, w, h, Location::Slice(k))?;
            if s.depth_index >= n {
                return Err(Error::DepthOutOfRange {
                    index: s.depth_index,
                    slice: k,
                    count: n,
                });
            }
            if seen.insert(s.depth_index, k).is_some() {
                return Err(Error::DuplicateDepth {
                    index: s.depth_index,
                    slice: k,
                });
            }
            if s.wavelength_nm != self.wavelength_schedule[k] {
                return Err(Error::WavelengthMismatch {
                    slice: k,
                    expected: self.wavelength_schedule[k],
                    found: s.wavelength_nm,
                });
            }
        }
        Ok(())
    }
}

impl MultispectralFocalStack {
    /// `cells` is depth-major: cell `(d, i)` lives at `d * wavelengths + i`.
    pub fn new(
        depth_schedule: Vec<f64>,
        wavelength_schedule: Vec<f64>,
        cells: Vec<Image>,
    ) -> Result<Self> {
        let stack = MultispectralFocalStack {
            depth_schedule,
            wavelength_schedule,
            cells,
        };
        stack.validate()?;
        Ok(stack)
    }

    pub fn depths(&self) -> usize {
        self.depth_schedule.len()
    }

    pub fn wavelengths(&self) -> usize {
        self.wavelength_schedule.len()
    }

    pub fn cell(&self, depth: usize, wavelength: usize) -> &Image {
        assert!(depth < self.depths() && wavelength < self.wavelengths());
        &self.cells[depth * self.wavelengths() + wavelength]
    }

    pub fn cells(&self) -> &[Image] {
        &self.cells
    }

    pub fn depth_schedule(&self) -> &[f64] {
        &self.depth_schedule
    }

    pub fn wavelength_schedule(&self) -> &[f64] {
        &self.wavelength_schedule
    }

    pub fn dims(&self) -> (usize, usize) {
        self.cells[0].dims()
    }
}

impl ValidateStack for MultispectralFocalStack {
    fn validate(&self) -> Result<()> {
        let (n, m) = (self.depth_schedule.len(), self.wavelength_schedule.len());
        if n == 0 || m == 0 {
            return Err(Error::InvalidParameter(
                "focal stack needs at least one depth and one wavelength".into(),
            ));
        }
        if self.cells.len() != n * m {
            return Err(Error::ScheduleLength {
                what: "cell grid",
                expected: n * m,
                found: self.cells.len(),
            });
        }
        check_schedules(&self.depth_schedule, &self.wavelength_schedule)?;
        let (w, h) = self.cells[0].dims();
        for (idx, img) in self.cells.iter().enumerate() {
            let loc = Location::Cell {
                depth: idx / m,
                wavelength: idx % m,
            };
            check_image(img, w, h, loc)?;
        }
        Ok(())
    }
}

fn check_schedules(depths: &[f64], wavelengths: &[f64]) -> Result<()> {
    if let Some(i) = depths.iter().position(|d| !d.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "depth schedule entry {i} is not finite"
        )));
    }
    if let Some(i) = wavelengths.iter().position(|w| !w.is_finite() || *w <= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "wavelength schedule entry {i} is not a positive finite value"
        )));
    }
    if let Some(i) = wavelengths.windows(2).position(|p| p[1] <= p[0]) {
        return Err(Error::NonMonotoneWavelengths { position: i + 1 });
    }
    Ok(())
}

fn check_image(img: &Image, w: usize, h: usize, loc: Location) -> Result<()> {
    if img.dims() != (w, h) {
        return Err(Error::DimensionMismatch {
            expected_width: w,
            expected_height: h,
            found_width: img.width(),
            found_height: img.height(),
            location: Some(loc),
        });
    }
    img.check_finite().map_err(|e| e.with_location(loc))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schedule(n: usize) -> (Vec<f64>, Vec<f64>) {
        let depths = (0..n).map(|k| 1.0 + k as f64).collect();
        let waves = (0..n).map(|k| 430.0 + 30.0 * k as f64).collect();
        (depths, waves)
    }

    fn slices(n: usize, w: usize, h: usize) -> Vec<CapturedSlice> {
        let (_, waves) = schedule(n);
        (0..n)
            .map(|k| CapturedSlice {
                depth_index: k,
                wavelength_nm: waves[k],
                image: Image::filled(w, h, k as f64 / n as f64),
            })
            .collect()
    }

    #[test]
    fn well_formed_ten_slice_stack() {
        let (d, wl) = schedule(10);
        let stack = SpectralVaryingStack::new(slices(10, 8, 6), d, wl).unwrap();
        assert!(validate_stack(&stack).is_ok());
        assert_eq!(stack.dims(), (8, 6));
        assert_eq!(stack.position_of_depth(7), Some(7));
    }

    #[test]
    fn duplicate_depth_names_index() {
        let (d, wl) = schedule(5);
        let mut s = slices(5, 4, 4);
        s[4].depth_index = 3;
        let err = SpectralVaryingStack::new(s, d, wl).unwrap_err();
        assert!(matches!(err, Error::DuplicateDepth { index: 3, slice: 4 }));
        assert!(err.to_string().contains("depth index 3"));
    }

    #[test]
    fn nan_pixel_reports_slice_and_coordinates() {
        let (d, wl) = schedule(3);
        let mut s = slices(3, 4, 4);
        s[2].image.data_mut_for_test()[4 * 2 + 1] = f64::NAN;
        let err = SpectralVaryingStack::new(s, d, wl).unwrap_err();
        match err {
            Error::NonFinite {
                row,
                col,
                location,
            } => {
                assert_eq!((row, col), (2, 1));
                assert_eq!(location, Some(Location::Slice(2)));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn non_monotone_wavelengths() {
        let (d, mut wl) = schedule(4);
        wl.swap(1, 2);
        let mut s = slices(4, 4, 4);
        for (k, slice) in s.iter_mut().enumerate() {
            slice.wavelength_nm = wl[k];
        }
        let err = SpectralVaryingStack::new(s, d, wl).unwrap_err();
        assert!(matches!(err, Error::NonMonotoneWavelengths { position: 2 }));
    }

    #[test]
    fn dimension_mismatch_in_focal_stack_cell() {
        let (d, wl) = schedule(2);
        let mut cells = vec![Image::zeros(5, 5); 4];
        cells[3] = Image::zeros(5, 4);
        let err = MultispectralFocalStack::new(d, wl, cells).unwrap_err();
        assert!(matches!(
            err,
            Error::DimensionMismatch {
                location: Some(Location::Cell {
                    depth: 1,
                    wavelength: 1
                }),
                ..
            }
        ));
    }

    #[test]
    fn focal_stack_cell_count_must_match_schedules() {
        let (d, wl) = schedule(3);
        let err = MultispectralFocalStack::new(d, wl, vec![Image::zeros(2, 2); 8]).unwrap_err();
        assert!(matches!(err, Error::ScheduleLength { expected: 9, .. }));
    }

    #[test]
    fn permuted_depth_indices_are_valid() {
        let (d, wl) = schedule(3);
        let mut s = slices(3, 2, 2);
        s[0].depth_index = 2;
        s[2].depth_index = 0;
        let stack = SpectralVaryingStack::new(s, d, wl).unwrap();
        assert_eq!(stack.position_of_depth(0), Some(2));
    }
}
