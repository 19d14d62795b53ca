//! Design toolkit for temperature-insensitive Type II quasi-phasematched
//! spontaneous parametric downconversion in periodically poled KTP.
//!
//! * [`materials`]: temperature-dependent refractive indices and thermal
//!   expansion, loaded from small text files.
//! * [`qpm`]: phase mismatch, `sinc²` intensity, poling period and
//!   phasematched wavelength solvers.
//! * [`spectra`]: emission spectra, crystal/pump temperature scans and the
//!   temperature-insensitivity report.
//! * [`compensation`]: signal–idler longitudinal phase and compensator
//!   length optimization.
//! * [`polarization`]: coincidence fringes, visibilities and Bell-state
//!   fidelity.
//! * [`cli`]: the `qpm-lab` command line.

pub mod cli;
pub mod compensation;
pub mod error;
pub mod materials;
pub mod polarization;
pub mod qpm;
mod roots;
pub mod spectra;

pub use error::{Error, Result};
pub use materials::{load_material, MaterialModel};
