//! Multispectral focal stack reconstruction.
//!
//! A chromatic camera records each slice of a focal stack in a different
//! spectral band. This crate recovers the full depths × wavelengths stack
//! by fitting local linear transformations (per-pixel gain and offset maps)
//! between heavily blurred channels and applying them to the sharp slices.
//!
//! Modules:
//! - [`image`], [`stack`], [`maps`], [`config`]: containers and parameters
//! - [`imgops`]: Gaussian blur, gradient and its adjoint
//! - [`llt`]: objective, gradients, gradient-descent fit, reconstruction
//! - [`capture`]: synthetic scenes and the camera simulator
//! - [`metrics`]: PSNR, SSIM and per-cell evaluation tables
//! - [`cli`]: command-line frontend and on-disk formats

pub mod capture;
pub mod cli;
pub mod config;
pub mod error;
pub mod image;
pub mod imgops;
pub mod llt;
pub mod maps;
pub mod metrics;
pub mod stack;

pub use config::ReconConfig;
pub use error::{Error, Location, Result};
pub use image::Image;
pub use maps::LltMaps;
pub use stack::{
    validate_stack, CapturedSlice, MultispectralFocalStack, SpectralVaryingStack, ValidateStack,
};
