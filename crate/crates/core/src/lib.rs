//! Cascade model of an elliptical ring that changes shape while tumbling
//! down an incline, plus a collocation planner that steers its heading.

pub mod collocation;
pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod ode;
pub mod parallel;
pub mod quadrature;
pub mod scenario;

pub use dynamics::{
    body_angular_velocity, contact_radius, forcing_vector, mass_matrix, mechanical_energy,
    rotation_world_from_body, tumble_rhs, BodyRates, EquationForm, RollingInertia, SlopeModel,
    TumbleModel, TumbleState,
};
pub use error::{Error, Result};
pub use geometry::{
    ellipse_perimeter, impulse_b, inertia_triple, posture_rhs, solve_axis_for_perimeter,
    AxisPair, AxisRates, Ellipse, ImpulseInput, InertiaLabels, InertiaTriple, PostureState,
    RadiusPolicy, RingParams,
};
pub use ode::{integrate, IntegratorConfig, Solution};
pub use parallel::Execution;
