//! Fourier multiplier symbols evaluated on the frequency lattice.

use super::field::{ComplexField, Side};
use super::grid::Grid;
use crate::error::{Result, ShellwaveError};
use num_complex::Complex64;

/// The multiplier families used throughout the solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SymbolSpec {
    /// `m_lambda(xi) = |lambda - |xi|^2|`.
    MLambda { lambda: f64 },
    /// `q_tau(xi) = -|xi|^2 + i 2 tau xi_d + tau^2`.
    QTau { tau: f64 },
    /// `p_zeta(xi) = -|xi|^2 + i 2 zeta . xi`; only the first `d`
    /// components of `zeta` are read.
    PZeta { zeta: [Complex64; 3] },
    /// `lambda - |xi|^2`, the signed Helmholtz symbol.
    LambdaMinusXi2 { lambda: f64 },
}

impl SymbolSpec {
    fn validate(&self) -> Result<()> {
        let ok = match self {
            SymbolSpec::MLambda { lambda } | SymbolSpec::LambdaMinusXi2 { lambda } => {
                lambda.is_finite() && *lambda >= 0.0
            }
            SymbolSpec::QTau { tau } => tau.is_finite() && *tau >= 0.0,
            SymbolSpec::PZeta { zeta } => zeta.iter().all(|z| z.re.is_finite() && z.im.is_finite()),
        };
        if ok {
            Ok(())
        } else {
            Err(ShellwaveError::Parameter(format!(
                "symbol parameters must be finite and nonnegative where required: {self:?}"
            )))
        }
    }
}

/// Evaluates a symbol pointwise on the frequency lattice of `grid`.
pub fn eval_symbol(spec: SymbolSpec, grid: Grid) -> Result<ComplexField> {
    spec.validate()?;
    let d = grid.dimension();
    let mut out = ComplexField::zeros(grid, Side::Frequency);
    for i in 0..grid.len() {
        let xi = grid.xi(i);
        let xi2 = xi[..d].iter().map(|v| v * v).sum::<f64>();
        out.data_mut()[i] = match spec {
            SymbolSpec::MLambda { lambda } => Complex64::new((lambda - xi2).abs(), 0.0),
            SymbolSpec::LambdaMinusXi2 { lambda } => Complex64::new(lambda - xi2, 0.0),
            SymbolSpec::QTau { tau } => {
                Complex64::new(tau * tau - xi2, 2.0 * tau * xi[d - 1])
            }
            SymbolSpec::PZeta { zeta } => {
                let dot: Complex64 = (0..d).map(|a| zeta[a] * xi[a]).sum();
                Complex64::new(-xi2, 0.0) + Complex64::i() * 2.0 * dot
            }
        };
    }
    Ok(out)
}
