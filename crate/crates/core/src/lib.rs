//! Finite element solver for hydro-thermal (Darcy-Benard) convection in a
//! two-dimensional porous medium: Taylor-Hood Q2-Q1 velocity-pressure pair,
//! Q2 temperature, semi-implicit decoupled time stepping, and Nusselt-number
//! postprocessing for height-dependent hydraulic resistivity and thermal
//! diffusivity.

pub mod assembly;
pub mod cli;
pub mod dofs;
pub mod element;
pub mod error;
pub mod linalg;
pub mod mesh;
pub mod mms;
pub mod postprocess;
pub mod solver;

pub use error::{Error, Result};
