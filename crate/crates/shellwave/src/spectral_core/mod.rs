//! Periodic-box discretization: the grid and its frequency lattice, the
//! symmetric-convention DFT, Fourier symbols, dyadic spatial annuli, and
//! the field file format.

mod fft;
mod field;
mod grid;
mod io;
mod symbols;

pub use fft::{crop_field, fwd, inv, pad_field};
pub use field::{ComplexField, Side};
pub use grid::{annulus_mask, critical_index, max_annulus_index, Grid};
pub use io::{read_field, write_field};
pub use symbols::{eval_symbol, SymbolSpec};
