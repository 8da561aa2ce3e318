//! Relativistic particle dynamics as an evolution contact Hamiltonian flow on the
//! nine-dimensional extended phase space `(q^μ, p_μ, φ)`.
//!
//! The crate is split along the natural layers of the problem:
//!
//! - [`geometry`]: spacetime points, co-momenta, inverse metric fields, their
//!   derivatives and Christoffel symbols.
//! - [`dynamics`]: the mass-shell contact Hamiltonian, its evolution vector field,
//!   divergence, and the φ- and proper-time-parametrized reduced equations.
//! - [`integrators`]: explicit Runge-Kutta integration in the flow parameter λ,
//!   stop conditions, shell projection and reparametrization by φ or τ.
//! - [`kinetic`]: weighted-marker transport of a phase-space density with entropy
//!   and entropy-production estimators.
//!
//! Geometric units (`c = 1`) are the default everywhere but `c` stays a
//! configurable positive constant.

// Tensor code indexes components explicitly, and `!(x > 0.0)` deliberately
// rejects NaN.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod integrators;
pub mod kinetic;

pub use dynamics::{ContactHamiltonianSystem, ExtendedTangent, FourVelocity, MassModel};
pub use error::{Error, Result};
pub use geometry::{
    ChristoffelSymbols, CoMomentum, ExtendedState, Mat4, Metric, MetricField, Minkowski, Potential,
    SpacetimePoint, Vec4, WeakField,
};
pub use integrators::{
    IntegratorConfig, Method, ShellProjection, StopCondition, Termination, Trajectory,
};
pub use kinetic::{Ensemble, EntropyFunctional, InitialDensitySpec, Marker};
