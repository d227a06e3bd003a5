//! Numerical verification engine for static positive-curvature
//! three-manifolds and their four-dimensional Einstein lifts.
//!
//! The crate builds explicit model geometries (hemisphere, round
//! cylinder, Schwarzschild–de Sitter family, user-supplied warped
//! products), computes connection and curvature data from the metric
//! components alone, and checks the pointwise identities, integral
//! formulas, boundary expansions, spectral inequalities, and ODE facts
//! that characterize them. A thin CLI crate drives these checks and
//! renders reports.

pub mod boundary;
pub mod algebra;
pub mod chart;
pub mod conformal;
pub mod curvature;
pub mod integral;
pub mod lift;
pub mod models;
pub mod ode;
pub mod par;
pub mod quad;
pub mod quotient;
pub mod report;
pub mod scan;
pub mod residuals;
pub mod roots;
pub mod slices;
pub mod triple;
pub mod weyl;
pub mod fd;
pub mod func1d;
pub mod jet;
pub mod tensor;
