//! Weighted Newtonian equilibrium measures on the unit sphere.
//!
//! The sphere sits in an axially symmetric external field `Q(φ)`; charges
//! interact through the Newtonian kernel `1/r`. When the support of the
//! extremal measure is a spherical cap, the crate computes
//!
//! * the cap itself (transcendental support equations and F-functional
//!   minimization, see [`support`]),
//! * the equilibrium density and its Robin constant, both in closed form
//!   for the no-field, point-charge and quadratic cases and through a generic
//!   two-stage Abel pipeline for arbitrary fields (see [`equilibrium`]),
//! * the ground-truth checks: Gauss variational inequalities evaluated with
//!   the ring kernel ([`potential`]) and two discretization oracles that do
//!   not use any closed form ([`oracle`]).
//!
//! Angles are polar angles in radians, `φ = 0` at the North Pole.
//!
//! ```
//! use capfield::{solve_support_pointcharge, verify_equilibrium, ClosedForm, ExternalField, PhiGrid, Spacing};
//!
//! let support = solve_support_pointcharge(1.0, 2.0)?;
//! let density = ClosedForm::PointCharge { q: 1.0, h: 2.0, alpha0: support.alpha0() };
//! let grid = PhiGrid::for_cap(&density.cap()?, 16, Spacing::BoundaryClustered)?;
//! let profile = density.profile(grid)?;
//! let field = ExternalField::point_charge(1.0, 2.0)?;
//! assert!(verify_equilibrium(&field, &profile, 1e-6)?.passed);
//! # Ok::<(), capfield::Error>(())
//! ```

// Constants keep all their digits; `!(x <= tol)` is used where NaN must fail.
#![allow(clippy::excessive_precision, clippy::neg_cmp_op_on_partial_ord)]

pub mod equilibrium;
mod error;
pub mod fields;
pub mod geometry;
pub mod oracle;
mod par;
pub mod potential;
pub mod quadrature;
pub mod support;

pub use error::{Error, Result};
pub use par::{init_thread_pool, Execution};

pub use equilibrium::{
    capacity_south_cap, density_general, density_general_with, nofield_density, northpole_density,
    pointcharge_density, quadratic_density, total_mass, ClosedForm, DensityProfile,
};
pub use fields::{validate_south_cap_hypotheses, ExternalField, FieldKind};
pub use geometry::{
    cap_area, chordal_gamma, Orientation, PhiGrid, PolarAngle, Spacing, SphericalCap,
};
pub use oracle::{
    discrete_energy_minimize, discrete_energy_minimize_with, nystrom_solve, nystrom_solve_with,
    DiscreteMeasure, EnergyConfig, NystromConfig,
};
pub use potential::{
    elliptic_k, potential_on_sphere, potential_table, ring_kernel, verify_equilibrium,
    verify_equilibrium_with, EquilibriumReport, PotentialSample, VerifyConfig,
};
pub use quadrature::{
    abel_stage_f, abel_stage_g, integrate_sqrt_singular, AbelConfig, SingularIntegrand,
};
pub use support::{
    ffunctional_numeric, ffunctional_pointcharge, ffunctional_quadratic, gonchar_heights,
    minimize_ffunctional, solve_support_northpole, solve_support_pointcharge,
    solve_support_quadratic, GoncharHeights, SupportMethod, SupportSolution,
};
