//! Entropy methods for fast diffusion and weighted interpolation inequalities.
//!
//! Everything flow-facing runs in the artificial-dimension frame: radial
//! coordinate `s = r^alpha`, measure `s^{n-1} ds` with a possibly non-integer
//! dimension `n`, and stationary profile `B(s) = (1 + s^2)^{1/(m-1)}`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod constants;
pub mod error;
pub mod experiments;
pub mod flow;
pub mod functionals;
pub mod profiles;
pub mod quadrature;
pub mod spectrum;

pub use constants::{
    beta_fs, classify, classify_critical, derive, eta, region_scan, region_scan_critical, spectral_gap_closed_form,
    zeta_ckn, zeta_gns, CknParameters, DerivedParameters, RegionLabel, ScanRange,
};
pub use error::{Error, Result};
pub use experiments::{RateFit, Summary};
pub use flow::{evolve, initial_data, FlowConfig, FlowSeries, FlowState, InitialKind, Scheme};
pub use profiles::{make_grid, project, ProfileFamily, ProfileSpec, RadialField, RadialGrid, Spacing};
pub use spectrum::{hardy_poincare_gap, smallest_eigenvalue, SpectralResult};
