//! Littlewood-Paley projectors built from a radial bump pair.
//!
//! The low-pass profile `phi` equals 1 on [0, 1], vanishes on [2, inf),
//! and decreases monotonically in between; the band profile is
//! `psi(t) = phi(t) - phi(2t)`. Projections act as real radial
//! multipliers on the frequency lattice and return a field on the same
//! side as their input.

use crate::error::{Result, ShellwaveError};
use crate::spectral_core::{critical_index, fwd, inv, ComplexField, Side};
use serde::{Deserialize, Serialize};

/// Choice of transition profile for the bump pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LPBasis {
    /// `C^infinity` transition from the standard `exp(-1/t)` mollifier.
    #[default]
    Smooth,
    /// `C^2` quintic-smoothstep transition.
    C2Poly,
}

fn mollifier(u: f64) -> f64 {
    if u <= 0.0 {
        0.0
    } else {
        (-1.0 / u).exp()
    }
}

impl LPBasis {
    /// Low-pass profile value at `t >= 0`.
    pub fn phi(&self, t: f64) -> f64 {
        if t <= 1.0 {
            1.0
        } else if t >= 2.0 {
            0.0
        } else {
            match self {
                LPBasis::Smooth => {
                    let a = mollifier(2.0 - t);
                    let b = mollifier(t - 1.0);
                    a / (a + b)
                }
                LPBasis::C2Poly => {
                    let u = t - 1.0;
                    1.0 - u * u * u * (10.0 + u * (-15.0 + 6.0 * u))
                }
            }
        }
    }

    /// Band profile `psi(t) = phi(t) - phi(2t)`.
    pub fn psi(&self, t: f64) -> f64 {
        self.phi(t) - self.phi(2.0 * t)
    }
}

fn apply_radial_multiplier<F: Fn(f64) -> f64>(f: &ComplexField, weight: F) -> ComplexField {
    let side = f.side();
    let mut hat = match side {
        Side::Frequency => f.clone(),
        Side::Physical => fwd(f),
    };
    let grid = *hat.grid();
    for i in 0..grid.len() {
        let r = grid.xi_norm2(i).sqrt();
        let w = weight(r);
        hat.data_mut()[i] *= w;
    }
    match side {
        Side::Frequency => hat,
        Side::Physical => inv(&hat),
    }
}

/// Band projection `P_k`: multiplier `psi(|xi| / 2^k)`.
pub fn project(f: &ComplexField, k: i32, basis: LPBasis) -> ComplexField {
    let scale = 2.0_f64.powi(k);
    apply_radial_multiplier(f, |r| basis.psi(r / scale))
}

/// Low-pass projection `P_{<=k}`: multiplier `phi(|xi| / 2^k)`.
pub fn project_leq(f: &ComplexField, k: i32, basis: LPBasis) -> ComplexField {
    let scale = 2.0_f64.powi(k);
    apply_radial_multiplier(f, |r| basis.phi(r / scale))
}

/// Below-critical projection `P_{<I} = P_{<= k_lambda - 3}`.
pub fn project_below_i(f: &ComplexField, lambda: f64, basis: LPBasis) -> Result<ComplexField> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(ShellwaveError::Parameter(format!(
            "below-critical projection requires lambda > 0, got {lambda}"
        )));
    }
    let (k_lambda, _) = critical_index(lambda)?;
    Ok(project_leq(f, k_lambda - 3, basis))
}
