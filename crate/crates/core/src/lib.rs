//! Numerical laboratory for linear convolution-type stochastic Volterra equations.
//!
//! Each Fourier mode of the equation is governed by a scalar resolvent; the
//! crate solves those, evaluates the fractional special functions behind the
//! power kernel, simulates the field on the torus and decides regularity
//! criteria for the resulting Gaussian fields.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod approximation;
pub mod error;
pub mod field;
pub mod fractional;
pub mod grid;
pub mod kernel;
pub mod quad;
pub mod regularity;
pub mod resolvent;
pub mod special;
pub mod spectral;
pub mod symbol;
pub mod verification;

pub use approximation::{yosida_convergence_table, yosida_parameter, YosidaSweep};
pub use error::{Result, VflError};
pub use field::{
    mode_variance, sample_snapshot, simulate_path, torus_coefficients, FieldPath, FieldSnapshot,
    NoiseSeed, Regime, TorusCovariance,
};
pub use fractional::{
    alpha_resolvent_s, mittag_leffler, subordination_check, wright_density, FracParams,
};
pub use grid::TimeGrid;
pub use kernel::{Kernel, KernelClass, TabulatedKernel};
pub use regularity::{LimitMeasureReport, RegularityReport, Verdict};
pub use resolvent::{
    closed_form_r, closed_form_s, solve_r, solve_s, squared_tail_integral, Convention,
    ResolventGrid,
};
pub use spectral::{ModeCoefficient, SpectralSpec};
pub use symbol::{LevyAtom, Symbol};
pub use verification::{
    clt_band_test, heat_battery, mc_covariance_functional, mc_mode_variance, MCResult,
};
