//! Probability integrals of conserved currents over arbitrary hypersurfaces
//! of a Lorentzian spacetime, together with the flow machinery that evolves
//! those hypersurfaces and checks of the conservation laws behind them.
//!
//! The probability of a region `A` of a hypersurface is `∫_A ι*(J·μ)`, the
//! pullback of the current `J` contracted into the metric volume form. This
//! integrand needs no causality assumption on the surface. For spacelike
//! surfaces it coincides with `g(J,n)ν`, the unit-normal flux against the
//! induced Riemannian volume, which is checked numerically in [`born`].

pub mod born;
pub mod conservation;
pub mod currents;
pub mod error;
pub mod field;
pub mod flow;
pub mod geometry;
pub mod hypersurface;
pub mod linalg;
pub mod quadrature;

pub use born::{born_probability, verify_spacelike_identity, ContractedCurrentForm, RegionSpec};
pub use conservation::{conservation_sweep, divergence_theorem_check, reynolds_check, ConservationReport, FlowCylinder};
pub use currents::CurrentSpec;
pub use error::{GeometryError, Result};
pub use field::{SpacetimePoint, Vector, VectorField};
pub use flow::{FlowMap, Integrator};
pub use geometry::{CausalCharacter, Spacetime};
pub use hypersurface::{Orientation, ParametrizedHypersurface, TangentFrame};
pub use quadrature::{IntegralResult, ParamBox};
