//! Spectral solver and analysis toolkit for point-source scattering by
//! potentials that combine a critically-singular grid component with a
//! delta-shell surface component.
//!
//! The crate is organized around a periodic-box discretization
//! ([`spectral_core`]), Littlewood-Paley projectors ([`lp_decomp`]), the
//! family of frequency-weighted and annulus-weighted norms used by the
//! solver ([`funcspaces`]), potential assembly including hypersurface
//! quadrature ([`potentials`]), the limiting-absorption resolvent with
//! three cross-validating backends ([`resolvent`]), the direct scattering
//! solver ([`scattering`]), complex-geometrical-optics reconstruction
//! ([`cgo_inverse`]), and an empirical-constant benchmark harness
//! ([`estimate_bench`]).

pub mod cgo_inverse;
pub mod error;
pub mod estimate_bench;
pub mod funcspaces;
pub mod lp_decomp;
pub mod potentials;
pub mod resolvent;
pub mod scattering;
pub mod special;
pub mod spectral_core;

pub use error::{Result, ShellwaveError};
pub use spectral_core::{ComplexField, Grid, Side};
