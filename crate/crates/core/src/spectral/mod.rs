//! Fourier representation on the torus `[0, 2pi]^3`: transforms, per-mode
//! operators and norms.

mod fft;
pub mod field;
pub mod norms;
pub mod ops;

pub use field::{analyze_real, synthesize_real, PhysicalField, Resolution, SpectralField, TORUS_VOLUME};
pub use norms::{lp_norm, lp_norm_pow, GradientSamples, NormReport};
pub use ops::{
    derivative, gradient_inner, gradient_norm_sq, inner, l2_norm_sq, laplacian, laplacian_norm_sq, leray_project,
    leray_project_in_place, truncate_modes,
};
