//! Ultrasonic-lubrication friction control and the two bio-inspired
//! locomotion systems built on it, as desk-scale virtual experiments.
//!
//! The crate is organised bottom-up:
//!
//! - [`resonator`]: analytical modal analysis of the flat (free-free beam)
//!   and cylindrical (thin ring) friction-control modules, plus the driven
//!   voltage-to-amplitude response.
//! - [`squeezefilm`]: vibration amplitude to effective friction coefficient
//!   through air and liquid squeeze films, and the friction-reduction metric.
//! - [`surfaces`]: the substrate library (dry, wet, granular, tissue).
//! - [`dynamics`]: deterministic fixed-step 1-D multibody integrator with
//!   Karnopp stick-slip contacts and spring-damper actuators.
//! - [`gait`]: inchworm and ovipositor actuation/lubrication programs.
//! - [`harness`]: scenarios, the virtual experiments, outputs and checks.
//!
//! [`oracle`] holds independent reference solvers (finite differences,
//! quadrature) used to verify the closed forms above.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod error;
pub mod gait;
pub mod harness;
pub mod oracle;
pub mod resonator;
mod roots;
pub mod squeezefilm;
pub mod surfaces;

pub use error::{Error, Result};
