//! Periodic box `[-L, L)^d` sampled with `N` points per axis, together
//! with its frequency lattice `{pi k / L : -N/2 <= k_i < N/2}`.

use crate::error::{Result, ShellwaveError};
use serde::{Deserialize, Serialize};

/// Discretization of the box `[-L, L)^d`.
///
/// Samples sit at `x_i = -L + i * dx` with `dx = 2L/N`, and frequency
/// nodes at `xi_k = pi k / L` for integer `k` in `[-N/2, N/2)`. Both
/// sides are stored in coordinate-sorted (physically ordered) layout.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    d: usize,
    l: f64,
    n: usize,
}

impl Grid {
    /// Builds a grid, validating dimension, parity, and size bounds.
    pub fn new(d: usize, l: f64, n: usize) -> Result<Grid> {
        if d != 2 && d != 3 {
            return Err(ShellwaveError::Parameter(format!(
                "dimension must be 2 or 3, got {d}"
            )));
        }
        if n % 2 != 0 || n < 8 {
            return Err(ShellwaveError::Parameter(format!(
                "samples per axis must be even and at least 8, got {n}"
            )));
        }
        if !(l > 0.0) || !l.is_finite() {
            return Err(ShellwaveError::Parameter(format!(
                "half-side length must be positive and finite, got {l}"
            )));
        }
        Ok(Grid { d, l, n })
    }

    pub fn dimension(&self) -> usize {
        self.d
    }

    /// Half-side length of the box.
    pub fn half_side(&self) -> f64 {
        self.l
    }

    /// Samples per axis.
    pub fn samples_per_axis(&self) -> usize {
        self.n
    }

    /// Physical spacing `2L/N`.
    pub fn dx(&self) -> f64 {
        2.0 * self.l / self.n as f64
    }

    /// Frequency spacing `pi/L`.
    pub fn dxi(&self) -> f64 {
        std::f64::consts::PI / self.l
    }

    /// Total number of samples `N^d`.
    pub fn len(&self) -> usize {
        self.n.pow(self.d as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Physical coordinate along one axis at sample index `i`.
    pub fn coord(&self, i: usize) -> f64 {
        -self.l + i as f64 * self.dx()
    }

    /// Frequency coordinate along one axis at storage index `i`.
    pub fn freq(&self, i: usize) -> f64 {
        (i as i64 - (self.n / 2) as i64) as f64 * self.dxi()
    }

    /// Decomposes a flat lexicographic index into per-axis indices; the
    /// unused third slot is zero in dimension two.
    pub fn unravel(&self, flat: usize) -> [usize; 3] {
        let n = self.n;
        match self.d {
            2 => [flat / n, flat % n, 0],
            _ => [flat / (n * n), (flat / n) % n, flat % n],
        }
    }

    /// Flattens per-axis indices lexicographically.
    pub fn ravel(&self, idx: [usize; 3]) -> usize {
        let n = self.n;
        match self.d {
            2 => idx[0] * n + idx[1],
            _ => (idx[0] * n + idx[1]) * n + idx[2],
        }
    }

    /// Physical point for a flat index.
    pub fn point(&self, flat: usize) -> [f64; 3] {
        let idx = self.unravel(flat);
        let mut x = [0.0; 3];
        for a in 0..self.d {
            x[a] = self.coord(idx[a]);
        }
        x
    }

    /// Frequency node for a flat index.
    pub fn xi(&self, flat: usize) -> [f64; 3] {
        let idx = self.unravel(flat);
        let mut xi = [0.0; 3];
        for a in 0..self.d {
            xi[a] = self.freq(idx[a]);
        }
        xi
    }

    /// Squared radius `|x|^2` of a physical sample.
    pub fn radius2(&self, flat: usize) -> f64 {
        let x = self.point(flat);
        x[0] * x[0] + x[1] * x[1] + x[2] * x[2]
    }

    /// Squared frequency radius `|xi|^2`.
    pub fn xi_norm2(&self, flat: usize) -> f64 {
        let xi = self.xi(flat);
        xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2]
    }

    /// Largest resolvable frequency radius `pi N / (2L) * sqrt(d)`.
    pub fn max_xi(&self) -> f64 {
        std::f64::consts::PI * self.n as f64 / (2.0 * self.l) * (self.d as f64).sqrt()
    }
}

/// The critical dyadic index `k_lambda` with `2^(k_lambda - 1) <
/// sqrt(lambda) <= 2^(k_lambda)`, and the critical set
/// `I = {k_lambda - 2, ..., k_lambda + 1}`.
pub fn critical_index(lambda: f64) -> Result<(i32, [i32; 4])> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(ShellwaveError::Parameter(format!(
            "energy must be positive and finite, got {lambda}"
        )));
    }
    let half_log = 0.5 * lambda.log2();
    let mut k = half_log.ceil() as i32;
    // Guard the strict lower bracket against rounding at exact powers.
    while f64::powi(2.0, k - 1) >= lambda.sqrt() {
        k -= 1;
    }
    while f64::powi(2.0, k) < lambda.sqrt() {
        k += 1;
    }
    Ok((k, [k - 2, k - 1, k, k + 1]))
}

/// Indicator of the dyadic annulus `D_j` sampled on the grid, together
/// with a truncation flag raised when the annulus exceeds the box.
///
/// `D_0` is the closed unit ball and `D_j = {2^(j-1) < |x| <= 2^j}` for
/// `j >= 1`; boundary points belong to the annulus on the outside.
pub fn annulus_mask(grid: &Grid, j: u32) -> (Vec<f64>, bool) {
    let outer = f64::powi(2.0, j as i32);
    let inner = if j == 0 { 0.0 } else { outer / 2.0 };
    let truncated = outer > grid.half_side();
    let mut mask = vec![0.0; grid.len()];
    for (flat, m) in mask.iter_mut().enumerate() {
        let r = grid.radius2(flat).sqrt();
        let inside = if j == 0 {
            r <= 1.0
        } else {
            r > inner && r <= outer
        };
        if inside {
            *m = 1.0;
        }
    }
    (mask, truncated)
}

/// Largest annulus index whose outer radius can still intersect the box,
/// `2^j <= L sqrt(d)` rounded outward so the annuli cover every sample.
pub fn max_annulus_index(grid: &Grid) -> u32 {
    let r_max = grid.half_side() * (grid.dimension() as f64).sqrt();
    let mut j = 0u32;
    while f64::powi(2.0, j as i32) < r_max {
        j += 1;
    }
    j
}
