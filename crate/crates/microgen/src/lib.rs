//! Analytic simulation and inverse design of acoustic-wave-driven
//! electromagnetic microgenerators: a beam-suspended plate carries a cuboid
//! permanent magnet oscillating beneath a planar square spiral coil.
//!
//! The crate covers the full chain from geometry to electrical output:
//!
//! - [`magnetics`]: closed-form field of the cuboid magnet and flux through
//!   rectangular loops by adaptive quadrature,
//! - [`coil`]: spiral coil geometry, DC resistance, and flux linkage,
//! - [`suspension`]: lumped stiffness/mass/frequency and bending stress of
//!   the beam suspension,
//! - [`response`]: driven harmonic response, EMF, load power, and
//!   time-domain simulation,
//! - [`design`]: frequency matching, EMF maximization, sensitivities, and
//!   model-vs-measurement reporting,
//! - [`device`], [`table`], [`commands`]: device-file parsing, result
//!   tables, and the operations behind the `microgen` command-line tool.

pub mod coil;
pub mod commands;
pub mod design;
pub mod device;
pub mod error;
pub mod magnetics;
pub mod optimize;
pub mod quadrature;
pub mod response;
pub mod rootfind;
pub mod suspension;
pub mod table;

pub use error::{Error, Result};
