//! Hopf bifurcation at infinity for planar families `X_mu = X + mu z`
//! defined outside a closed disk.

// `!(x > 0.0)` guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bifurcation;
pub mod controls;
pub mod dual;
pub mod error;
pub mod expr;
pub mod field;
pub mod flow;
pub mod flux;
pub mod ode;
pub mod parse;
pub mod portrait;
pub mod spectral;

pub use error::{Error, Result};
pub use expr::{Expr, Func, Var};
pub use field::{
    catalog, catalog_family, parse_field, parse_field_file, Catalog, Jet, Mat2, PlanarField, Scale,
    ScaledField, Vec2, VectorField,
};
pub use flux::{
    divergence_integral, flux, index_at_infinity, radial_min_speed, speed_integral_check, winding_number,
    Estimate, FluxProfile, IndexClass, IndexControls, IndexEstimate, QuadratureControls, RadiusSchedule,
};
pub use spectral::{certify_class, eigs2, SampleGrid, SpectralClass, SpectralReport, Verdict};
pub use bifurcation::{
    audit_hypotheses, locate_bifurcation, scaling_family_check, sweep, AuditRow, BifurcationReport, HypothesisSet,
    LocateResult, MuSample, ScalingComparison, Status, SweepVerdict,
};
pub use controls::{Controls, GridControls};
pub use flow::{
    certify_infinity_stability, classify_trajectory, transversal_circle, InfinityStability, StabilityControls,
    StabilityVerdict, TrajectoryOutcome, TrajectoryVerdict, TransversalityCertificate,
};
pub use ode::{integrate, Direction, FlowControls, Termination, TimeScale, Trajectory};
pub use portrait::{portrait_svg, PortraitControls};
