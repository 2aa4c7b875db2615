//! Symmetric-convention DFT on the periodic box.
//!
//! Both directions carry the factor `(2 pi)^(-d/2)`, so the forward
//! transform is `(dx / sqrt(2 pi))^d` times the shifted FFT and the
//! inverse is `(dxi / sqrt(2 pi))^d` times the shifted unnormalized
//! inverse FFT. Shifting maps between the coordinate-sorted storage
//! layout and the FFT-native ordering; for even `N` both shift
//! directions coincide with a rotation by `N/2` per axis.

use super::field::{ComplexField, Side};
use super::grid::Grid;
use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};
use std::cell::RefCell;
use std::sync::Arc;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(n: usize, direction: FftDirection) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft(n, direction))
}

/// Rotation by `N/2` along every axis, mapping coordinate-sorted data to
/// FFT ordering and back.
fn half_shift(grid: &Grid, data: &[Complex64]) -> Vec<Complex64> {
    let n = grid.samples_per_axis();
    let h = n / 2;
    let mut out = vec![Complex64::new(0.0, 0.0); data.len()];
    match grid.dimension() {
        2 => {
            for i0 in 0..n {
                let s0 = (i0 + h) % n;
                for i1 in 0..n {
                    let s1 = (i1 + h) % n;
                    out[i0 * n + i1] = data[s0 * n + s1];
                }
            }
        }
        _ => {
            for i0 in 0..n {
                let s0 = (i0 + h) % n;
                for i1 in 0..n {
                    let s1 = (i1 + h) % n;
                    let row_in = (s0 * n + s1) * n;
                    let row_out = (i0 * n + i1) * n;
                    for i2 in 0..n {
                        let s2 = (i2 + h) % n;
                        out[row_out + i2] = data[row_in + s2];
                    }
                }
            }
        }
    }
    out
}

/// Moves axis 0 to the end, so the next contiguous FFT pass acts on what
/// was the leading axis. After `d` applications the layout is restored.
fn rotate_axes(grid: &Grid, data: &[Complex64], out: &mut [Complex64]) {
    let n = grid.samples_per_axis();
    match grid.dimension() {
        2 => {
            for i0 in 0..n {
                for i1 in 0..n {
                    out[i1 * n + i0] = data[i0 * n + i1];
                }
            }
        }
        _ => {
            for i0 in 0..n {
                for i1 in 0..n {
                    let row = (i0 * n + i1) * n;
                    for i2 in 0..n {
                        out[(i1 * n + i2) * n + i0] = data[row + i2];
                    }
                }
            }
        }
    }
}

fn transform(grid: &Grid, data: Vec<Complex64>, direction: FftDirection) -> Vec<Complex64> {
    let n = grid.samples_per_axis();
    let d = grid.dimension();
    let fft = plan(n, direction);
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    let mut buf = half_shift(grid, &data);
    let mut tmp = vec![Complex64::new(0.0, 0.0); buf.len()];
    for _ in 0..d {
        fft.process_with_scratch(&mut buf, &mut scratch);
        rotate_axes(grid, &buf, &mut tmp);
        std::mem::swap(&mut buf, &mut tmp);
    }
    half_shift(grid, &buf)
}

/// Forward transform: physical samples to the frequency lattice.
pub fn fwd(f: &ComplexField) -> ComplexField {
    assert_eq!(f.side(), Side::Physical, "fwd expects a physical-side field");
    let grid = *f.grid();
    let mut data = transform(&grid, f.data().to_vec(), FftDirection::Forward);
    let scale = (grid.dx() / (2.0 * std::f64::consts::PI).sqrt()).powi(grid.dimension() as i32);
    for z in data.iter_mut() {
        *z *= scale;
    }
    ComplexField::from_data(grid, Side::Frequency, data).expect("length preserved")
}

/// Inverse transform: frequency lattice back to physical samples.
pub fn inv(f: &ComplexField) -> ComplexField {
    assert_eq!(
        f.side(),
        Side::Frequency,
        "inv expects a frequency-side field"
    );
    let grid = *f.grid();
    let mut data = transform(&grid, f.data().to_vec(), FftDirection::Inverse);
    let scale = (grid.dxi() / (2.0 * std::f64::consts::PI).sqrt()).powi(grid.dimension() as i32);
    for z in data.iter_mut() {
        *z *= scale;
    }
    ComplexField::from_data(grid, Side::Physical, data).expect("length preserved")
}

/// Embeds a physical field into a box enlarged by the integer factor
/// `pad`, keeping the sample spacing and centering the original block.
pub fn pad_field(f: &ComplexField, pad: usize) -> ComplexField {
    assert_eq!(f.side(), Side::Physical);
    assert!(pad >= 1);
    let g = f.grid();
    let n = g.samples_per_axis();
    let big = Grid::new(g.dimension(), g.half_side() * pad as f64, n * pad)
        .expect("padded grid parameters are valid when the source grid is");
    let mut out = ComplexField::zeros(big, Side::Physical);
    let offset = (pad - 1) * n / 2;
    let nb = big.samples_per_axis();
    match g.dimension() {
        2 => {
            for i0 in 0..n {
                for i1 in 0..n {
                    out.data_mut()[(i0 + offset) * nb + (i1 + offset)] =
                        f.data()[i0 * n + i1];
                }
            }
        }
        _ => {
            for i0 in 0..n {
                for i1 in 0..n {
                    let row_in = (i0 * n + i1) * n;
                    let row_out = ((i0 + offset) * nb + (i1 + offset)) * nb + offset;
                    out.data_mut()[row_out..row_out + n]
                        .copy_from_slice(&f.data()[row_in..row_in + n]);
                }
            }
        }
    }
    out
}

/// Extracts the centered block matching `small` from a padded field.
pub fn crop_field(f: &ComplexField, small: Grid) -> ComplexField {
    assert_eq!(f.side(), Side::Physical);
    let big = f.grid();
    let n = small.samples_per_axis();
    let nb = big.samples_per_axis();
    assert!(nb >= n && (nb - n) % 2 == 0);
    let offset = (nb - n) / 2;
    let mut out = ComplexField::zeros(small, Side::Physical);
    match small.dimension() {
        2 => {
            for i0 in 0..n {
                for i1 in 0..n {
                    out.data_mut()[i0 * n + i1] =
                        f.data()[(i0 + offset) * nb + (i1 + offset)];
                }
            }
        }
        _ => {
            for i0 in 0..n {
                for i1 in 0..n {
                    let row_out = (i0 * n + i1) * n;
                    let row_in = ((i0 + offset) * nb + (i1 + offset)) * nb + offset;
                    out.data_mut()[row_out..row_out + n]
                        .copy_from_slice(&f.data()[row_in..row_in + n]);
                }
            }
        }
    }
    out
}
