//! Simulator for teleporting a spin-s state between two static scattering
//! centers using a stream of unpolarized, path-detected spin-1/2 mediators.

pub mod error;
pub mod spinops;
pub mod scatter;
pub mod channel;
pub mod montecarlo;
pub mod protocol;
pub mod experiments;
pub mod config;
pub mod selftest;
pub mod cli;

pub use error::{Error, Result};
