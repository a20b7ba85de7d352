//! Local linear transformation (LLT) between spectral channels.
//!
//! Two channels blurred with the same large Gaussian are related by a
//! per-pixel affine map `I_i ≈ A ⊙ I_k + B`; the same maps carry the sharp
//! channel `k` of a slice over to channel `i`. The maps are found by
//! minimizing
//!
//! ```text
//! E(A, B) = ‖A⊙I_k + B − I_i‖²
//!         + α (‖A⊙∂x I_k − ∂x I_i‖² + ‖A⊙∂y I_k − ∂y I_i‖²)
//!         + β (‖∇A‖² + ‖∇B‖²)
//! ```
//!
//! with steepest descent and a backtracking (Armijo) line search.

mod fit;
mod objective;
mod reconstruct;

pub use fit::{fit_llt, FitReport, ARMIJO_C};
pub use objective::{llt_gradients, llt_objective};
pub use reconstruct::{
    apply_maps, reconstruct_focal_stack, reconstruct_with_reports, transfer_channel, PairReport,
    Reconstruction,
};
