//! Closed-form and root-found threshold quantities.

mod boundary;
pub(crate) mod optimize;
mod special;
mod thresholds;

pub use boundary::{
    boundary_report, boundary_roots, c_r, c_r_exact, f_boundary, theta_cc, theta_fold, zeta_estimate, BoundaryReport,
    Fold, ZetaEstimate,
};
pub use special::{nbinom_pmf, pi_binom, pi_binom_real, poisson_cdf_below, poisson_pmf, psi};
pub use thresholds::{
    critical_time, h_a, pc, pcx, phi, phi1, phi2, refined_critical, t_star, tau_prediction, theory_report,
    thresholds, RefinedCritical, TauPrediction, TheoryReport, Thresholds,
};
