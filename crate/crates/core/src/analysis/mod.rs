//! Numerical checks of the functional inequalities and of the time
//! mollification and cube truncation used to build weak-form test functions.

pub mod inequalities;
pub mod mollifier;
pub mod trajectory;

pub use inequalities::{
    lemma21_sandwich, lemma21_sandwich_on, lemma22_ratio, lemma22_ratio_on, nikolskii_pair, nikolskii_seminorm,
    sandwich_grid, truncation_errors, NikolskiiReport, SandwichReport,
};
pub use mollifier::{bump, Mollifier, MollifierAxioms};
pub use trajectory::{
    density_errors, mollify_trajectory, truncated_mollified, weak_form_residual, weak_form_terms, DensityPoint,
    TrajectoryRecorder, TrajectorySamples, WeakFormReport,
};
