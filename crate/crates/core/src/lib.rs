pub mod cli;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod family;
pub mod freeflow;
pub mod geometry;
pub mod global_recon;
pub mod jet_recovery;
pub mod numerics;
pub mod ode;
pub mod potential;
pub mod quadrature;
pub mod series;
pub mod su_identity;
pub mod suite;
pub mod vec2;

pub use error::{Error, Result};
pub use vec2::{Frame, Vec2};
