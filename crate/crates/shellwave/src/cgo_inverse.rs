//! Complex-geometrical-optics machinery: characteristic direction
//! pairs, the contraction fixed point for the CGO correction, the
//! Fourier-mode reconstruction table for potential differences, and the
//! rotation-averaged decay diagnostic.
//!
//! CGO solutions `v = e^{zeta . x}(1 + w)` grow exponentially across
//! the box, so fields are always carried as `(w, zeta)` pairs; every
//! pairing that involves two solutions multiplies the exponentials
//! analytically (`zeta_1 + zeta_2 = -i kappa`), leaving only bounded
//! oscillatory factors to evaluate.

use crate::error::{Result, ShellwaveError};
use crate::funcspaces::{epsilon_floor, xzeta_norm};
use crate::potentials::{band_limited_eval, DeltaShell, GridPotential};
use crate::resolvent::conj_resolve_zeta;
use crate::scattering::deposit_charges;
use crate::spectral_core::{fwd, ComplexField, Grid, Side};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm3(a: [f64; 3]) -> f64 {
    dot3(a, a).sqrt()
}

fn fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        num += (x - mx) * (y - my);
        den += (x - mx) * (x - mx);
    }
    num / den
}

// ---------------------------------------------------------------------
// Characteristic direction pairs
// ---------------------------------------------------------------------

/// A pair of complex directions with `zeta_j . zeta_j = -lambda` and
/// `zeta_1 + zeta_2 = -i kappa`, together with the real frame that
/// built them.
#[derive(Debug, Clone)]
pub struct ZetaPair {
    pub zeta1: [Complex64; 3],
    pub zeta2: [Complex64; 3],
    pub kappa: [f64; 3],
    pub tau: f64,
    pub lambda: f64,
    pub eta: [f64; 3],
    pub theta: [f64; 3],
}

/// Draws a unit vector orthogonal to every vector in `fixed`, by
/// Gram-Schmidt on seeded Gaussian draws.
fn seeded_orthogonal_unit(rng: &mut ChaCha8Rng, fixed: &[[f64; 3]]) -> [f64; 3] {
    loop {
        let mut v = [0.0f64; 3];
        for c in &mut v {
            *c = StandardNormal.sample(rng);
        }
        // Projecting twice scrubs the cancellation error left by a
        // draw nearly parallel to the fixed span.
        for _ in 0..2 {
            for f in fixed {
                let p = dot3(v, *f);
                for a in 0..3 {
                    v[a] -= p * f[a];
                }
            }
        }
        let n = norm3(v);
        if n > 0.1 {
            return [v[0] / n, v[1] / n, v[2] / n];
        }
    }
}

/// Builds the characteristic pair for direction `kappa` at modulation
/// `tau` and energy `lambda`:
/// `zeta_1 = tau eta + i(-kappa/2 + beta theta)` and
/// `zeta_2 = -tau eta + i(-kappa/2 - beta theta)` with
/// `beta = (tau^2 + lambda - |kappa|^2/4)^{1/2}` and `(eta, theta)` an
/// orthonormal frame orthogonal to `kappa`, drawn deterministically
/// from the seed.
pub fn make_zeta_pair(kappa: [f64; 3], tau: f64, lambda: f64, seed: u64) -> Result<ZetaPair> {
    if kappa.iter().any(|k| !k.is_finite()) {
        return Err(ShellwaveError::Parameter("kappa must be finite".into()));
    }
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(ShellwaveError::Parameter(format!(
            "tau must be positive and finite, got {tau}"
        )));
    }
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(ShellwaveError::Parameter(format!(
            "energy must be positive and finite, got {lambda}"
        )));
    }
    let k2 = dot3(kappa, kappa);
    let disc = tau * tau + lambda - k2 / 4.0;
    let scale = tau * tau + lambda + k2;
    let beta = if disc >= 0.0 {
        disc.sqrt()
    } else if disc > -1e-12 * scale {
        0.0
    } else {
        return Err(ShellwaveError::Parameter(format!(
            "tau = {tau} is too small for |kappa| = {:.4} at lambda = {lambda}: \
             tau^2 must be at least |kappa|^2/4 - lambda",
            k2.sqrt()
        )));
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let knorm = k2.sqrt();
    let frame_fixed: Vec<[f64; 3]> = if knorm > 0.0 {
        vec![[kappa[0] / knorm, kappa[1] / knorm, kappa[2] / knorm]]
    } else {
        Vec::new()
    };
    let eta = seeded_orthogonal_unit(&mut rng, &frame_fixed);
    let mut with_eta = frame_fixed;
    with_eta.push(eta);
    let theta = seeded_orthogonal_unit(&mut rng, &with_eta);
    let mut zeta1 = [Complex64::new(0.0, 0.0); 3];
    let mut zeta2 = [Complex64::new(0.0, 0.0); 3];
    for a in 0..3 {
        zeta1[a] = Complex64::new(tau * eta[a], -kappa[a] / 2.0 + beta * theta[a]);
        zeta2[a] = Complex64::new(-tau * eta[a], -kappa[a] / 2.0 - beta * theta[a]);
    }
    Ok(ZetaPair {
        zeta1,
        zeta2,
        kappa,
        tau,
        lambda,
        eta,
        theta,
    })
}

// ---------------------------------------------------------------------
// The CGO correction fixed point
// ---------------------------------------------------------------------

/// Convergence record of one CGO correction.
#[derive(Debug, Clone, Serialize)]
pub struct CgoReport {
    /// Fixed-point iterations performed.
    pub iterations: usize,
    /// `X^{1/2}_zeta` norm of the correction.
    pub w_norm: f64,
    /// `X^{-1/2}_zeta` norm of the band-limited potential field.
    pub v_norm: f64,
    /// `w_norm / v_norm`; zero for a zero potential.
    pub ratio: f64,
    /// `l^2` defect of `(Delta + 2 zeta . grad)w - V(1 + w)` over the
    /// solvable modes, the origin and floored modes excluded.
    pub residual: f64,
    /// Last measured step-to-step contraction factor.
    pub contraction: f64,
}

/// Band-limited grid representative of the full potential: the grid
/// component plus the shell quadrature deposited as point masses.
pub fn potential_field(
    grid: Grid,
    v0: Option<&GridPotential>,
    shell: Option<&DeltaShell>,
) -> Result<ComplexField> {
    if let Some(v) = v0 {
        if v.field().grid() != &grid {
            return Err(ShellwaveError::Parameter(
                "grid potential lives on a different grid".into(),
            ));
        }
    }
    let mut f = match v0 {
        Some(v) => v.field().clone(),
        None => ComplexField::zeros(grid, Side::Physical),
    };
    if let Some(sh) = shell {
        if sh.surface.dimension != grid.dimension() {
            return Err(ShellwaveError::Parameter(
                "shell surface dimension does not match the grid".into(),
            ));
        }
        let charges: Vec<Complex64> = sh
            .surface
            .weights
            .iter()
            .zip(&sh.alpha)
            .map(|(w, a)| Complex64::new(w * a, 0.0))
            .collect();
        let dep = deposit_charges(&grid, &sh.surface.nodes, &charges)?;
        f.axpy(Complex64::new(1.0, 0.0), &dep);
    }
    Ok(f)
}

/// `V (1 + w)` as a band-limited grid field: the grid part multiplies
/// pointwise, the shell part weighs `1 +` the trace of `w` by the
/// quadrature measure.
fn cgo_rhs(
    grid: Grid,
    v0: Option<&GridPotential>,
    shell: Option<&DeltaShell>,
    w: &ComplexField,
    what: &ComplexField,
) -> Result<ComplexField> {
    let one = Complex64::new(1.0, 0.0);
    let mut rhs = ComplexField::zeros(grid, Side::Physical);
    if let Some(v) = v0 {
        for ((r, b), wv) in rhs.data_mut().iter_mut().zip(v.field().data()).zip(w.data()) {
            *r = b.re * (one + wv);
        }
    }
    if let Some(sh) = shell {
        let traces = band_limited_eval(what, &sh.surface.nodes);
        let charges: Vec<Complex64> = sh
            .surface
            .weights
            .iter()
            .zip(&sh.alpha)
            .zip(&traces)
            .map(|((wq, a), t)| wq * a * (one + t))
            .collect();
        let dep = deposit_charges(&grid, &sh.surface.nodes, &charges)?;
        rhs.axpy(one, &dep);
    }
    Ok(rhs)
}

fn zeta_symbol(grid: &Grid, i: usize, zeta: &[Complex64; 3], d: usize) -> Complex64 {
    let xi = grid.xi(i);
    let mut dot = Complex64::new(0.0, 0.0);
    for a in 0..d {
        dot += zeta[a] * xi[a];
    }
    Complex64::new(-grid.xi_norm2(i), 0.0) + Complex64::new(0.0, 2.0) * dot
}

/// Solves `(Delta + 2 zeta . grad) w = V (1 + w)` by the contraction
/// fixed point `w <- conj_resolve_zeta(V(1 + w))`, so that
/// `v = e^{zeta . x}(1 + w)` solves the Schroedinger equation at the
/// energy encoded by `zeta . zeta = -lambda`.
///
/// Stops when the `X^{1/2}_zeta` norm of a step falls below `tol`;
/// growing steps abort with a divergence error naming the measured
/// factor. The residual reported is the forward defect of the returned
/// `w` against its own right-hand side, measured over the solvable
/// modes (the structurally singular origin mode and the floored
/// near-characteristic modes excluded).
pub fn cgo_correction(
    grid: Grid,
    v0: Option<&GridPotential>,
    shell: Option<&DeltaShell>,
    zeta: [Complex64; 3],
    tol: f64,
) -> Result<(ComplexField, CgoReport)> {
    if !(tol > 0.0) || !tol.is_finite() {
        return Err(ShellwaveError::Parameter(format!(
            "tolerance must be positive and finite, got {tol}"
        )));
    }
    let d = grid.dimension();
    let v_field = potential_field(grid, v0, shell)?;
    if v_field.norm_max() == 0.0 {
        return Ok((
            ComplexField::zeros(grid, Side::Physical),
            CgoReport {
                iterations: 0,
                w_norm: 0.0,
                v_norm: 0.0,
                ratio: 0.0,
                residual: 0.0,
                contraction: 0.0,
            },
        ));
    }
    let v_norm = xzeta_norm(&v_field, zeta, -0.5)?.value;

    let max_iter = 64;
    let mut w = ComplexField::zeros(grid, Side::Physical);
    let mut what = fwd(&w);
    let mut prev_step: Option<f64> = None;
    let mut contraction = 0.0;
    let mut rising = 0usize;
    let mut converged = false;
    let mut iterations = 0usize;
    while iterations < max_iter {
        let rhs = cgo_rhs(grid, v0, shell, &w, &what)?;
        let w_next = conj_resolve_zeta(&rhs, zeta)?;
        iterations += 1;
        let mut diff = w_next.clone();
        diff.axpy(Complex64::new(-1.0, 0.0), &w);
        let step = xzeta_norm(&diff, zeta, 0.5)?.value;
        if let Some(p) = prev_step {
            contraction = step / p;
            if contraction >= 1.0 {
                rising += 1;
                if rising >= 2 {
                    return Err(ShellwaveError::Divergence(format!(
                        "outside contraction regime: successive correction steps grow \
                         by {contraction:.3} under the characteristic direction with \
                         tau-scale {:.3}; weaken the potential or increase tau",
                        zeta.iter().map(|z| z.re * z.re).sum::<f64>().sqrt()
                    )));
                }
            } else {
                rising = 0;
            }
        }
        prev_step = Some(step);
        w = w_next;
        what = fwd(&w);
        if step < tol {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(ShellwaveError::Divergence(format!(
            "outside contraction regime: correction did not reach tolerance {tol} \
             within {max_iter} iterations (last contraction factor {contraction:.3})"
        )));
    }

    let rhs = cgo_rhs(grid, v0, shell, &w, &what)?;
    let rhat = fwd(&rhs);
    let tau_scale = (0..d).map(|a| zeta[a].re * zeta[a].re).sum::<f64>().sqrt();
    let floor = epsilon_floor(tau_scale);
    let mut resid2 = 0.0;
    for i in 0..grid.len() {
        if grid.xi_norm2(i) == 0.0 {
            continue;
        }
        let p = zeta_symbol(&grid, i, &zeta, d);
        if p.norm() < floor {
            continue;
        }
        resid2 += (p * what.data()[i] - rhat.data()[i]).norm_sqr();
    }
    let residual = (resid2 * what.cell_volume()).sqrt();
    let w_norm = xzeta_norm(&w, zeta, 0.5)?.value;
    Ok((
        w,
        CgoReport {
            iterations,
            w_norm,
            v_norm,
            ratio: if v_norm > 0.0 { w_norm / v_norm } else { 0.0 },
            residual,
            contraction,
        },
    ))
}

// ---------------------------------------------------------------------
// Fourier reconstruction of a potential difference
// ---------------------------------------------------------------------

/// One `(kappa, tau)` cell of the reconstruction table.
#[derive(Debug, Clone)]
pub struct ReconstructionCell {
    pub kappa: [f64; 3],
    pub tau: f64,
    /// `<V1 - V2, e^{-i kappa . x}>` computed from the potentials.
    pub direct: Complex64,
    /// `<(V1 - V2)(1 + w1)(1 + w2), e^{-i kappa . x}>`, averaged over
    /// orientation seeds; absent when every seed diverged.
    pub estimate: Option<Complex64>,
    /// The three correction terms `estimate - direct`; absent with it.
    pub remainder: Option<Complex64>,
    /// Largest deviation of a single-seed remainder from the mean.
    pub seed_spread: f64,
    /// Seeds whose corrections both converged.
    pub converged_seeds: usize,
}

/// Signed shell component of a potential difference.
struct ShellDiff {
    nodes: Vec<[f64; 3]>,
    /// Quadrature weight times signed strength per node.
    signed: Vec<f64>,
}

fn shell_diffs(s1: Option<&DeltaShell>, s2: Option<&DeltaShell>) -> Vec<ShellDiff> {
    let same_nodes = match (s1, s2) {
        (Some(a), Some(b)) => {
            a.surface.nodes.len() == b.surface.nodes.len()
                && a.surface
                    .nodes
                    .iter()
                    .zip(&b.surface.nodes)
                    .all(|(p, q)| p == q)
        }
        _ => false,
    };
    if same_nodes {
        let (a, b) = (s1.unwrap(), s2.unwrap());
        let signed: Vec<f64> = a
            .surface
            .weights
            .iter()
            .zip(a.alpha.iter().zip(&b.alpha))
            .map(|(w, (x, y))| w * (x - y))
            .collect();
        if signed.iter().all(|&s| s == 0.0) {
            return Vec::new();
        }
        return vec![ShellDiff {
            nodes: a.surface.nodes.clone(),
            signed,
        }];
    }
    let mut out = Vec::new();
    for (sh, orient) in [(s1, 1.0), (s2, -1.0)] {
        if let Some(sh) = sh {
            let signed: Vec<f64> = sh
                .surface
                .weights
                .iter()
                .zip(&sh.alpha)
                .map(|(w, a)| orient * w * a)
                .collect();
            if signed.iter().any(|&s| s != 0.0) {
                out.push(ShellDiff {
                    nodes: sh.surface.nodes.clone(),
                    signed,
                });
            }
        }
    }
    out
}

fn grid_diff(
    grid: &Grid,
    v1: Option<&GridPotential>,
    v2: Option<&GridPotential>,
) -> Result<Vec<(usize, f64)>> {
    for v in [v1, v2].into_iter().flatten() {
        if v.field().grid() != grid {
            return Err(ShellwaveError::Parameter(
                "potentials must share the reconstruction grid".into(),
            ));
        }
    }
    let mut dv = vec![0.0f64; grid.len()];
    if let Some(v) = v1 {
        for (d, z) in dv.iter_mut().zip(v.field().data()) {
            *d += z.re;
        }
    }
    if let Some(v) = v2 {
        for (d, z) in dv.iter_mut().zip(v.field().data()) {
            *d -= z.re;
        }
    }
    Ok(dv
        .into_iter()
        .enumerate()
        .filter(|(_, d)| *d != 0.0)
        .collect())
}

/// Tabulates the Fourier reconstruction identity over a `kappa` grid
/// and a `tau` list.
///
/// Per cell the direct pairing `<V1 - V2, e^{-i kappa . x}>` is the
/// oracle; the estimate pairs the difference against the product of
/// the two CGO solutions, whose exponentials combine to the same
/// oscillatory factor; the remainder collects the three `w` terms and
/// is expected to shrink as `tau` grows. Cells where every seed's
/// correction diverges carry no estimate.
#[allow(clippy::too_many_arguments)]
pub fn reconstruct_fourier(
    grid: Grid,
    v1: (Option<&GridPotential>, Option<&DeltaShell>),
    v2: (Option<&GridPotential>, Option<&DeltaShell>),
    lambda: f64,
    kappas: &[[f64; 3]],
    taus: &[f64],
    seeds: &[u64],
    tol: f64,
) -> Result<Vec<ReconstructionCell>> {
    if kappas.is_empty() || taus.is_empty() || seeds.is_empty() {
        return Err(ShellwaveError::Parameter(
            "reconstruction needs at least one kappa, tau, and seed".into(),
        ));
    }
    let dv = grid_diff(&grid, v1.0, v2.0)?;
    let shells = shell_diffs(v1.1, v2.1);
    let vol = grid.dx().powi(grid.dimension() as i32);
    let zero = Complex64::new(0.0, 0.0);

    if dv.is_empty() && shells.is_empty() {
        let mut out = Vec::new();
        for &kappa in kappas {
            for &tau in taus {
                out.push(ReconstructionCell {
                    kappa,
                    tau,
                    direct: zero,
                    estimate: Some(zero),
                    remainder: Some(zero),
                    seed_spread: 0.0,
                    converged_seeds: seeds.len(),
                });
            }
        }
        return Ok(out);
    }

    let phase = |kappa: [f64; 3], x: [f64; 3]| -> Complex64 {
        Complex64::from_polar(1.0, -dot3(kappa, x))
    };
    let direct_of = |kappa: [f64; 3]| -> Complex64 {
        let mut v = zero;
        for &(i, d) in &dv {
            v += d * phase(kappa, grid.point(i)) * vol;
        }
        for sd in &shells {
            for (node, &s) in sd.nodes.iter().zip(&sd.signed) {
                v += s * phase(kappa, *node);
            }
        }
        v
    };

    let cells: Vec<(usize, usize)> = (0..kappas.len())
        .flat_map(|ik| (0..taus.len()).map(move |it| (ik, it)))
        .collect();
    cells
        .into_par_iter()
        .map(|(ik, it)| -> Result<ReconstructionCell> {
            let kappa = kappas[ik];
            let tau = taus[it];
            let direct = direct_of(kappa);
            let mut remainders = Vec::new();
            for &seed in seeds {
                let pair = make_zeta_pair(kappa, tau, lambda, seed)?;
                let solved = (|| -> Result<Complex64> {
                    let (w1, _) = cgo_correction(grid, v1.0, v1.1, pair.zeta1, tol)?;
                    let (w2, _) = cgo_correction(grid, v2.0, v2.1, pair.zeta2, tol)?;
                    let w1hat = fwd(&w1);
                    let w2hat = fwd(&w2);
                    let mut r = zero;
                    for &(i, d) in &dv {
                        let a = w1.data()[i];
                        let b = w2.data()[i];
                        r += d * phase(kappa, grid.point(i)) * (a + b + a * b) * vol;
                    }
                    for sd in &shells {
                        let t1 = band_limited_eval(&w1hat, &sd.nodes);
                        let t2 = band_limited_eval(&w2hat, &sd.nodes);
                        for ((node, &s), (a, b)) in
                            sd.nodes.iter().zip(&sd.signed).zip(t1.iter().zip(&t2))
                        {
                            r += s * phase(kappa, *node) * (a + b + a * b);
                        }
                    }
                    Ok(r)
                })();
                match solved {
                    Ok(r) => remainders.push(r),
                    Err(ShellwaveError::Divergence(_))
                    | Err(ShellwaveError::SymbolSingularity(_)) => {}
                    Err(e) => return Err(e),
                }
            }
            let converged = remainders.len();
            let (estimate, remainder, spread) = if converged == 0 {
                (None, None, 0.0)
            } else {
                let mean = remainders.iter().sum::<Complex64>() / converged as f64;
                let spread = remainders
                    .iter()
                    .map(|r| (r - mean).norm())
                    .fold(0.0, f64::max);
                (Some(direct + mean), Some(mean), spread)
            };
            Ok(ReconstructionCell {
                kappa,
                tau,
                direct,
                estimate,
                remainder,
                seed_spread: spread,
                converged_seeds: converged,
            })
        })
        .collect()
}

// ---------------------------------------------------------------------
// Rotation-averaged decay
// ---------------------------------------------------------------------

/// Monte Carlo table of the rotation- and modulation-averaged dual
/// norm of a potential.
#[derive(Debug, Clone, Serialize)]
pub struct DecayTable {
    pub m_list: Vec<f64>,
    /// Mean of `|V|^2` in `X^{-1/2}_zeta` per window `[M, 2M]`.
    pub averages: Vec<f64>,
    pub std_errors: Vec<f64>,
    /// Log-log slope of the averages against `M`; absent when any
    /// window averages to zero or the list is a single point.
    pub slope: Option<f64>,
}

/// Haar frame: two orthonormal columns of a uniformly random rotation,
/// by Gram-Schmidt on Gaussian draws.
fn haar_frame(rng: &mut ChaCha8Rng) -> ([f64; 3], [f64; 3]) {
    let e1 = seeded_orthogonal_unit(rng, &[]);
    let e2 = seeded_orthogonal_unit(rng, &[e1]);
    (e1, e2)
}

/// Averages `|V|^2_{X^{-1/2}_zeta}` over Haar-random orientations and
/// uniform `tau` in `[M, 2M]` per entry of `m_list`, and fits the
/// log-log decay slope across the list.
pub fn rotation_average_decay(
    grid: Grid,
    v0: Option<&GridPotential>,
    shell: Option<&DeltaShell>,
    lambda: f64,
    m_list: &[f64],
    samples: usize,
    seed: u64,
) -> Result<DecayTable> {
    if grid.dimension() != 3 {
        return Err(ShellwaveError::Parameter(
            "the averaging diagnostic requires dimension three".into(),
        ));
    }
    if m_list.is_empty() || m_list.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(ShellwaveError::Parameter(
            "the M list must be nonempty and strictly increasing".into(),
        ));
    }
    if m_list[0] <= 0.0 || samples == 0 {
        return Err(ShellwaveError::Parameter(
            "M values must be positive and at least one sample is required".into(),
        ));
    }
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(ShellwaveError::Parameter(format!(
            "energy must be positive and finite, got {lambda}"
        )));
    }
    let v_field = potential_field(grid, v0, shell)?;
    if v_field.norm_max() == 0.0 {
        return Ok(DecayTable {
            m_list: m_list.to_vec(),
            averages: vec![0.0; m_list.len()],
            std_errors: vec![0.0; m_list.len()],
            slope: None,
        });
    }
    let vhat = fwd(&v_field);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut averages = Vec::with_capacity(m_list.len());
    let mut std_errors = Vec::with_capacity(m_list.len());
    for &m in m_list {
        let mut acc = 0.0;
        let mut acc2 = 0.0;
        for _ in 0..samples {
            let (e1, e2) = haar_frame(&mut rng);
            let t: f64 = rand::Rng::gen_range(&mut rng, m..2.0 * m);
            let b = (t * t + lambda).sqrt();
            let mut zeta = [Complex64::new(0.0, 0.0); 3];
            for a in 0..3 {
                zeta[a] = Complex64::new(t * e1[a], b * e2[a]);
            }
            let v = xzeta_norm(&vhat, zeta, -0.5)?.value;
            acc += v * v;
            acc2 += v * v * v * v;
        }
        let mean = acc / samples as f64;
        let var = (acc2 / samples as f64 - mean * mean).max(0.0);
        averages.push(mean);
        std_errors.push((var / samples as f64).sqrt());
    }
    let slope = if m_list.len() >= 2 && averages.iter().all(|&a| a > 0.0) {
        let xs: Vec<f64> = m_list.iter().map(|m| m.ln()).collect();
        let ys: Vec<f64> = averages.iter().map(|a| a.ln()).collect();
        Some(fit_slope(&xs, &ys))
    } else {
        None
    };
    Ok(DecayTable {
        m_list: m_list.to_vec(),
        averages,
        std_errors,
        slope,
    })
}
