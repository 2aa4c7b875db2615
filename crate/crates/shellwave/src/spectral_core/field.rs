//! Complex-valued sample arrays bound to a grid, on either the physical
//! or the frequency side.

use super::grid::Grid;
use crate::error::{Result, ShellwaveError};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Which side of the transform the samples live on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Physical,
    Frequency,
}

/// A `d`-dimensional complex sample array in lexicographic axis order.
#[derive(Clone, Debug)]
pub struct ComplexField {
    grid: Grid,
    side: Side,
    data: Vec<Complex64>,
}

impl ComplexField {
    /// Wraps existing data, checking the length against the grid.
    pub fn from_data(grid: Grid, side: Side, data: Vec<Complex64>) -> Result<ComplexField> {
        if data.len() != grid.len() {
            return Err(ShellwaveError::Parameter(format!(
                "field length {} does not match grid size {}",
                data.len(),
                grid.len()
            )));
        }
        Ok(ComplexField { grid, side, data })
    }

    /// All-zero field.
    pub fn zeros(grid: Grid, side: Side) -> ComplexField {
        ComplexField {
            grid,
            side,
            data: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    /// Physical-side field from a pointwise function of the coordinates.
    pub fn from_fn(grid: Grid, f: impl Fn([f64; 3]) -> Complex64) -> ComplexField {
        let data = (0..grid.len()).map(|i| f(grid.point(i))).collect();
        ComplexField {
            grid,
            side: Side::Physical,
            data,
        }
    }

    /// Frequency-side field from a pointwise function of the lattice.
    pub fn from_fn_freq(grid: Grid, f: impl Fn([f64; 3]) -> Complex64) -> ComplexField {
        let data = (0..grid.len()).map(|i| f(grid.xi(i))).collect();
        ComplexField {
            grid,
            side: Side::Frequency,
            data,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<Complex64> {
        self.data
    }

    /// Quadrature weight of one cell on this side.
    pub fn cell_volume(&self) -> f64 {
        let h = match self.side {
            Side::Physical => self.grid.dx(),
            Side::Frequency => self.grid.dxi(),
        };
        h.powi(self.grid.dimension() as i32)
    }

    /// `L^2` norm with the cell quadrature weight.
    pub fn norm_l2(&self) -> f64 {
        let s: f64 = self.data.iter().map(|z| z.norm_sqr()).sum();
        (s * self.cell_volume()).sqrt()
    }

    /// `L^p` norm by the equal-weight rule natural to periodic grids;
    /// `p` must be at least one and finite (use [`ComplexField::norm_max`]
    /// for the supremum).
    pub fn norm_lp(&self, p: f64) -> f64 {
        assert!(p >= 1.0 && p.is_finite());
        let s: f64 = self.data.iter().map(|z| z.norm().powf(p)).sum();
        (s * self.cell_volume()).powf(1.0 / p)
    }

    /// Maximum modulus over samples.
    pub fn norm_max(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Hermitian inner product `sum f conj(g)` with the cell weight.
    pub fn inner(&self, other: &ComplexField) -> Complex64 {
        assert_eq!(self.grid, other.grid);
        assert_eq!(self.side, other.side);
        let s: Complex64 = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a * b.conj())
            .sum();
        s * self.cell_volume()
    }

    /// Bilinear distributional pairing `sum f g` with the cell weight,
    /// with no complex conjugation.
    pub fn pair(&self, other: &ComplexField) -> Complex64 {
        assert_eq!(self.grid, other.grid);
        assert_eq!(self.side, other.side);
        let s: Complex64 = self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum();
        s * self.cell_volume()
    }

    /// In-place `self += c * other`.
    pub fn axpy(&mut self, c: Complex64, other: &ComplexField) {
        assert_eq!(self.grid, other.grid);
        assert_eq!(self.side, other.side);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += c * b;
        }
    }

    /// In-place scaling.
    pub fn scale(&mut self, c: Complex64) {
        for a in self.data.iter_mut() {
            *a *= c;
        }
    }

    /// Pointwise complex conjugation.
    pub fn conj(&self) -> ComplexField {
        ComplexField {
            grid: self.grid,
            side: self.side,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    /// Relative `L^2` distance to another field on the same grid.
    pub fn rel_l2_distance(&self, other: &ComplexField) -> f64 {
        assert_eq!(self.grid, other.grid);
        let mut num = 0.0;
        let mut den = 0.0;
        for (a, b) in self.data.iter().zip(&other.data) {
            num += (a - b).norm_sqr();
            den += b.norm_sqr();
        }
        if den == 0.0 {
            if num == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (num / den).sqrt()
        }
    }
}
