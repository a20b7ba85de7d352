use crate::error::{Error, Result};
use crate::image::Image;

/// Per-pixel gain `A` and offset `B` of a local linear transformation
/// `target ≈ A ⊙ source + B`.
#[derive(Debug, Clone, PartialEq)]
pub struct LltMaps {
    gain: Image,
    offset: Image,
}

impl LltMaps {
    pub fn new(gain: Image, offset: Image) -> Result<Self> {
        gain.ensure_same_dims(&offset)?;
        Ok(LltMaps { gain, offset })
    }

    /// `A = 1`, `B = 0`.
    pub fn identity(width: usize, height: usize) -> Self {
        LltMaps {
            gain: Image::filled(width, height, 1.0),
            offset: Image::zeros(width, height),
        }
    }

    pub fn gain(&self) -> &Image {
        &self.gain
    }

    pub fn offset(&self) -> &Image {
        &self.offset
    }

    pub fn dims(&self) -> (usize, usize) {
        self.gain.dims()
    }

    pub fn into_parts(self) -> (Image, Image) {
        (self.gain, self.offset)
    }

    pub(crate) fn ensure_matches(&self, img: &Image) -> Result<()> {
        if self.dims() != img.dims() {
            return Err(Error::DimensionMismatch {
                expected_width: self.gain.width(),
                expected_height: self.gain.height(),
                found_width: img.width(),
                found_height: img.height(),
                location: None,
            });
        }
        Ok(())
    }
}
