//! Floquet-Bloch dispersion relation of periodic patterns and the linear
//! spreading speeds of coarsening fronts.

mod coarsening;
mod monodromy;

pub use coarsening::{
    bloch_pinch_check, coarsening_curve, coarsening_curve_with, coarsening_double_root, homotopy_root, prediction, trivial_root,
    wake_pattern, write_curve_csv, CoarseningCurve, CoarseningPrediction, CoarseningRoot, DOUBLING_TOL, PINCH_R_END,
};
pub use monodromy::{bloch_d, bloch_d_comoving, fold_to_cell, monodromy, solve_bloch_root, Background, Monodromy};
