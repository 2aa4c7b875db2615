//! Limiting-absorption Helmholtz resolvent `(lap + lambda +- i0)^{-1}`
//! with three cross-validating backends, plus the conjugated inverses
//! `(lap + 2 tau d_last + tau^2)^{-1}` and `(lap + 2 zeta.grad)^{-1}`.
//!
//! All backends realize the resolvent as an aperiodic convolution with
//! the outgoing kernel truncated at a radius the padded box can hold
//! without wrap-around, so periodic images never contaminate the
//! result. The truncated kernel has a closed-form radial transform in
//! both dimensions, which makes the multiplier exact up to rounding;
//! the backends differ in how they approach the `+- i0` limit and in
//! how much padding they spend. Ingoing resolves use the exact operator
//! identity `(lap + lambda - i0)^{-1} f = conj((lap + lambda +
//! i0)^{-1} conj f)`.

use crate::error::{Result, ShellwaveError};
use crate::funcspaces::epsilon_floor;
use crate::potentials::{band_limited_eval, sphere_quadrature};
use crate::special::{bessel_j0, bessel_j1, hankel1_0, hankel1_1};
use crate::spectral_core::{crop_field, fwd, inv, pad_field, ComplexField, Grid, Side};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

const PI: f64 = std::f64::consts::PI;

/// Fraction of the padded half-side used as the kernel truncation
/// radius; the remaining margin guarantees the circular convolution is
/// image-free for sources anywhere in the original box.
const KERNEL_RADIUS_FACTOR: f64 = 0.98;

/// Which side of the real axis the `+- i0` limit is taken from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResolventSign {
    /// `+ i0`: outgoing radiation condition.
    Outgoing,
    /// `- i0`: ingoing radiation condition.
    Ingoing,
}

/// Numerical realization of the limiting-absorption resolvent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResolventBackend {
    /// Closed-form transform of the truncated kernel on a triple-size
    /// box; the principal value and the sphere layer enter through one
    /// analytic formula. Default and most accurate.
    PvSphere,
    /// Complex energies `lambda + i eps` down a decreasing schedule,
    /// extrapolated to `eps -> 0`, on the unpadded box.
    Absorption,
    /// Physical-side sampling of the kernel split into its static
    /// `-1/(4 pi r)` part (transformed in closed form) and its smooth
    /// oscillatory remainder (transformed numerically) on a doubled
    /// box; dimension three only.
    Green3d,
}

impl ResolventBackend {
    fn pad(self) -> usize {
        match self {
            ResolventBackend::PvSphere => 3,
            ResolventBackend::Absorption => 1,
            ResolventBackend::Green3d => 2,
        }
    }

    /// Stable identifier used in reports and output metadata.
    pub fn name(self) -> &'static str {
        match self {
            ResolventBackend::PvSphere => "pv_sphere",
            ResolventBackend::Absorption => "absorption",
            ResolventBackend::Green3d => "green3d",
        }
    }
}

/// Parameters of a resolvent application.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolventSpec {
    /// Energy `lambda > 0`.
    pub lambda: f64,
    /// Radiation condition.
    pub sign: ResolventSign,
    /// Numerical backend.
    pub backend: ResolventBackend,
    /// Node order of the latitude-longitude rule used for sphere-layer
    /// quadrature; at least 8.
    pub sphere_quad_order: usize,
    /// Strictly decreasing positive absorption parameters, finest last.
    pub epsilon_schedule: Vec<f64>,
}

impl ResolventSpec {
    /// Defaults: `pv_sphere` backend, sphere order 16, geometric
    /// absorption schedule `lambda/10 * 2^{-j}` with four levels.
    pub fn new(lambda: f64, sign: ResolventSign) -> Result<ResolventSpec> {
        let spec = ResolventSpec {
            lambda,
            sign,
            backend: ResolventBackend::PvSphere,
            sphere_quad_order: 16,
            epsilon_schedule: (0..4).map(|j| lambda / 10.0 * 0.5f64.powi(j)).collect(),
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Same spec with a different backend.
    pub fn with_backend(mut self, backend: ResolventBackend) -> ResolventSpec {
        self.backend = backend;
        self
    }

    /// Checks the field invariants.
    pub fn validate(&self) -> Result<()> {
        if !self.lambda.is_finite() || self.lambda <= 0.0 {
            return Err(ShellwaveError::Parameter(format!(
                "energy must be finite and positive, got {}",
                self.lambda
            )));
        }
        if self.sphere_quad_order < 8 {
            return Err(ShellwaveError::Parameter(format!(
                "sphere quadrature order must be at least 8, got {}",
                self.sphere_quad_order
            )));
        }
        if self.epsilon_schedule.is_empty() {
            return Err(ShellwaveError::Parameter(
                "absorption schedule must not be empty".into(),
            ));
        }
        for w in self.epsilon_schedule.windows(2) {
            if w[1] >= w[0] {
                return Err(ShellwaveError::Parameter(
                    "absorption schedule must be strictly decreasing".into(),
                ));
            }
        }
        if self
            .epsilon_schedule
            .iter()
            .any(|e| !e.is_finite() || *e <= 0.0)
        {
            return Err(ShellwaveError::Parameter(
                "absorption schedule entries must be finite and positive".into(),
            ));
        }
        Ok(())
    }
}

/// Per-call diagnostics emitted alongside the solution.
#[derive(Debug, Clone, Serialize)]
pub struct ResolventDiagnostics {
    /// Backend that produced the field.
    pub backend: String,
    /// Energy of the call.
    pub lambda: f64,
    /// Fraction (in `l^2`) of the source transform inside the excluded
    /// shell band `m_lambda < (pi/L) sqrt(lambda)` of the original
    /// lattice.
    pub shell_mass_fraction: f64,
    /// Relative distance between the extrapolated solution and the
    /// finest-epsilon solution; absorption backend only.
    pub extrapolation_residual: Option<f64>,
    /// Kernel truncation radius actually used.
    pub kernel_radius: f64,
}

// ---------------------------------------------------------------------
// Truncated-kernel transforms
// ---------------------------------------------------------------------

/// `(e^{i d a} - 1)/d` with a series branch for small `|d|`.
fn phase_ramp(d: Complex64, a: f64, threshold: f64) -> Complex64 {
    if d.norm() < threshold {
        let i = Complex64::i();
        i * a - d * (a * a / 2.0) - i * d * d * (a.powi(3) / 6.0) + d * d * d * (a.powi(4) / 24.0)
    } else {
        ((Complex64::i() * d * a).exp() - 1.0) / d
    }
}

/// Radial transform of `-e^{i k r}/(4 pi r)` truncated at radius `a`,
/// dimension three: the exact resolvent multiplier of the truncated
/// outgoing kernel, finite on the sphere `b = Re k`.
struct Khat3 {
    k: Complex64,
    a: f64,
    threshold: f64,
}

impl Khat3 {
    fn new(k: Complex64, a: f64) -> Khat3 {
        Khat3 {
            k,
            a,
            threshold: 1e-6 * k.norm().max(1.0),
        }
    }

    fn eval(&self, b: f64) -> Complex64 {
        if b == 0.0 {
            let ika = Complex64::i() * self.k * self.a;
            return (ika.exp() * (ika - 1.0) + 1.0) / (self.k * self.k);
        }
        let plus = phase_ramp(self.k + b, self.a, self.threshold);
        let minus = phase_ramp(self.k - b, self.a, self.threshold);
        (plus - minus) / (2.0 * b)
    }
}

/// Radial transform of `-(i/4) H_0^{(1)}(k r)` truncated at radius
/// `a`, dimension two, via the Lommel cross-product of Bessel
/// solutions; real `b` near real `k` is clamped one threshold away
/// from the diagonal where the quotient form loses digits.
struct Khat2 {
    k: Complex64,
    a: f64,
    h0: Complex64,
    h1: Complex64,
    threshold: f64,
}

impl Khat2 {
    fn new(k: Complex64, a: f64) -> Khat2 {
        Khat2 {
            k,
            a,
            h0: hankel1_0(k * a),
            h1: hankel1_1(k * a),
            threshold: 1e-6 * k.norm().max(1.0),
        }
    }

    fn eval(&self, b: f64) -> Complex64 {
        let mut b = b;
        if (b - self.k.re).abs() < self.threshold && self.k.im.abs() < 1e-12 {
            b = self.k.re + self.threshold;
        }
        let two_i_over_pi = Complex64::new(0.0, 2.0 / PI);
        let lommel = if b == 0.0 {
            self.a * self.h1 / self.k + two_i_over_pi / (self.k * self.k)
        } else {
            let j0 = bessel_j0(b * self.a);
            let j1 = bessel_j1(b * self.a);
            (self.a * (b * self.h0 * j1 - self.k * self.h1 * j0) - two_i_over_pi)
                / (Complex64::new(b * b, 0.0) - self.k * self.k)
        };
        Complex64::new(0.0, -PI / 2.0) * lommel
    }
}

/// Weights that evaluate at zero the polynomial interpolating the
/// per-epsilon solutions: iterated first-order extrapolation for a
/// geometric schedule, and its general-node form otherwise.
fn extrapolation_weights(schedule: &[f64]) -> Vec<f64> {
    (0..schedule.len())
        .map(|i| {
            schedule
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, e)| e / (e - schedule[i]))
                .product()
        })
        .collect()
}

// ---------------------------------------------------------------------
// The resolvent
// ---------------------------------------------------------------------

fn ensure_physical(f: &ComplexField) -> ComplexField {
    match f.side() {
        Side::Physical => f.clone(),
        Side::Frequency => inv(f),
    }
}

fn ensure_frequency(f: &ComplexField) -> ComplexField {
    match f.side() {
        Side::Frequency => f.clone(),
        Side::Physical => fwd(f),
    }
}

/// Applies `(lap + lambda +- i0)^{-1}` to a band-limited source and
/// returns the physical-side solution.
pub fn resolve(f: &ComplexField, spec: &ResolventSpec) -> Result<ComplexField> {
    resolve_with_diagnostics(f, spec).map(|(u, _)| u)
}

/// As [`resolve`], also reporting shell mass and, for the absorption
/// backend, the extrapolation residual.
pub fn resolve_with_diagnostics(
    f: &ComplexField,
    spec: &ResolventSpec,
) -> Result<(ComplexField, ResolventDiagnostics)> {
    spec.validate()?;
    if f.data().iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(ShellwaveError::Parameter(
            "source field contains non-finite samples".into(),
        ));
    }
    let fp = ensure_physical(f);
    match spec.sign {
        ResolventSign::Outgoing => resolve_outgoing(&fp, spec),
        ResolventSign::Ingoing => {
            let (u, diag) = resolve_outgoing(&fp.conj(), spec)?;
            Ok((u.conj(), diag))
        }
    }
}

fn resolve_outgoing(
    fp: &ComplexField,
    spec: &ResolventSpec,
) -> Result<(ComplexField, ResolventDiagnostics)> {
    let grid = *fp.grid();
    let d = grid.dimension();
    let k = Complex64::new(spec.lambda.sqrt(), 0.0);

    let shell_mass_fraction = shell_band_fraction(fp, spec.lambda);

    let padded = pad_field(fp, spec.backend.pad());
    let gpad = *padded.grid();
    let a = KERNEL_RADIUS_FACTOR * gpad.half_side();
    let mut fh = fwd(&padded);
    drop(padded);

    let mut extrapolation_residual = None;
    match spec.backend {
        ResolventBackend::PvSphere => {
            apply_radial_kernel(&mut fh, d, k, a);
        }
        ResolventBackend::Absorption => {
            let weights = extrapolation_weights(&spec.epsilon_schedule);
            let ks: Vec<Complex64> = spec
                .epsilon_schedule
                .iter()
                .map(|e| Complex64::new(spec.lambda, *e).sqrt())
                .collect();
            let mut finest = fh.clone();
            apply_extrapolated_kernel(&mut fh, &mut finest, d, &ks, &weights, a);
            extrapolation_residual = Some(finest.rel_l2_distance(&fh));
        }
        ResolventBackend::Green3d => {
            if d != 3 {
                return Err(ShellwaveError::Parameter(format!(
                    "green3d backend requires dimension 3, got {d}"
                )));
            }
            apply_split_green_kernel(&mut fh, k, a);
        }
    }

    let u = crop_field(&inv(&fh), grid);
    let diag = ResolventDiagnostics {
        backend: spec.backend.name().to_string(),
        lambda: spec.lambda,
        shell_mass_fraction,
        extrapolation_residual,
        kernel_radius: a,
    };
    Ok((u, diag))
}

/// `l^2` fraction of the source transform inside the excluded band
/// `m_lambda < (pi/L) sqrt(lambda)` of the original lattice.
fn shell_band_fraction(fp: &ComplexField, lambda: f64) -> f64 {
    let fh = fwd(fp);
    let grid = fh.grid();
    let eps_shell = PI / grid.half_side() * lambda.sqrt();
    let mut total = 0.0;
    let mut band = 0.0;
    for (i, z) in fh.data().iter().enumerate() {
        let m = (lambda - grid.xi_norm2(i)).abs();
        let w = z.norm_sqr();
        total += w;
        if m < eps_shell {
            band += w;
        }
    }
    if total == 0.0 {
        0.0
    } else {
        (band / total).sqrt()
    }
}

fn apply_radial_kernel(fh: &mut ComplexField, d: usize, k: Complex64, a: f64) {
    let grid = *fh.grid();
    if d == 2 {
        let ker = Khat2::new(k, a);
        for (i, z) in fh.data_mut().iter_mut().enumerate() {
            *z *= ker.eval(grid.xi_norm2(i).sqrt());
        }
    } else {
        let ker = Khat3::new(k, a);
        for (i, z) in fh.data_mut().iter_mut().enumerate() {
            *z *= ker.eval(grid.xi_norm2(i).sqrt());
        }
    }
}

fn apply_extrapolated_kernel(
    fh: &mut ComplexField,
    finest: &mut ComplexField,
    d: usize,
    ks: &[Complex64],
    weights: &[f64],
    a: f64,
) {
    let grid = *fh.grid();
    if d == 2 {
        let kernels: Vec<Khat2> = ks.iter().map(|k| Khat2::new(*k, a)).collect();
        for i in 0..grid.len() {
            let b = grid.xi_norm2(i).sqrt();
            let mut m = Complex64::new(0.0, 0.0);
            for (w, ker) in weights.iter().zip(&kernels) {
                m += w * ker.eval(b);
            }
            fh.data_mut()[i] *= m;
            finest.data_mut()[i] *= kernels.last().expect("schedule nonempty").eval(b);
        }
    } else {
        let kernels: Vec<Khat3> = ks.iter().map(|k| Khat3::new(*k, a)).collect();
        for i in 0..grid.len() {
            let b = grid.xi_norm2(i).sqrt();
            let mut m = Complex64::new(0.0, 0.0);
            for (w, ker) in weights.iter().zip(&kernels) {
                m += w * ker.eval(b);
            }
            fh.data_mut()[i] *= m;
            finest.data_mut()[i] *= kernels.last().expect("schedule nonempty").eval(b);
        }
    }
}

fn apply_split_green_kernel(fh: &mut ComplexField, k: Complex64, a: f64) {
    let grid = *fh.grid();
    let oscillatory = ComplexField::from_fn(grid, |x| {
        let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
        if r > a {
            Complex64::new(0.0, 0.0)
        } else if r == 0.0 {
            -Complex64::i() * k / (4.0 * PI)
        } else {
            -((Complex64::i() * k * r).exp() - 1.0) / (4.0 * PI * r)
        }
    });
    let mh = fwd(&oscillatory);
    let factor = (2.0 * PI).powf(1.5);
    for (i, z) in fh.data_mut().iter_mut().enumerate() {
        let b2 = grid.xi_norm2(i);
        let stat = if b2 == 0.0 {
            -a * a / 2.0
        } else {
            -(1.0 - (b2.sqrt() * a).cos()) / b2
        };
        *z *= factor * mh.data()[i] + stat;
    }
}

// ---------------------------------------------------------------------
// Fundamental solution and closed-form kernels
// ---------------------------------------------------------------------

/// Resolvent applied to a unit-mass Gaussian mollification of the
/// delta at `y`; width defaults to three sample spacings and must be
/// at least two. The source must keep an `L/2` margin to the boundary
/// so the mollified tail cannot wrap around.
pub fn fundamental_solution(
    grid: Grid,
    y: [f64; 3],
    spec: &ResolventSpec,
    width: Option<f64>,
) -> Result<ComplexField> {
    spec.validate()?;
    let d = grid.dimension();
    for (axis, y_a) in y.iter().enumerate() {
        if axis >= d && *y_a != 0.0 {
            return Err(ShellwaveError::Parameter(format!(
                "source component {axis} must be zero in dimension {d}"
            )));
        }
        if axis < d && y_a.abs() > grid.half_side() / 2.0 {
            return Err(ShellwaveError::Parameter(format!(
                "source at {y_a} is too close to the boundary of the box of half-side {}",
                grid.half_side()
            )));
        }
    }
    let h = width.unwrap_or(3.0 * grid.dx());
    if !(h.is_finite() && h >= 2.0 * grid.dx()) {
        return Err(ShellwaveError::Parameter(format!(
            "mollification width {h} must be at least two sample spacings ({})",
            2.0 * grid.dx()
        )));
    }
    let norm = (2.0 * PI * h * h).powf(-(d as f64) / 2.0);
    let f = ComplexField::from_fn(grid, |x| {
        let mut r2 = 0.0;
        for a in 0..d {
            r2 += (x[a] - y[a]) * (x[a] - y[a]);
        }
        Complex64::new(norm * (-r2 / (2.0 * h * h)).exp(), 0.0)
    });
    resolve(&f, spec)
}

/// Closed-form outgoing or ingoing kernel at separation `r > 0`:
/// `-e^{+- i sqrt(lambda) r}/(4 pi r)` in dimension three and
/// `-(i/4) H_0^{(1)}(sqrt(lambda) r)` (or its conjugate) in dimension
/// two.
pub fn green_kernel(d: usize, lambda: f64, sign: ResolventSign, r: f64) -> Result<Complex64> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(ShellwaveError::Parameter(format!(
            "energy must be finite and positive, got {lambda}"
        )));
    }
    if !(r.is_finite() && r > 0.0) {
        return Err(ShellwaveError::Parameter(format!(
            "separation must be finite and positive, got {r}"
        )));
    }
    let k = lambda.sqrt();
    let outgoing = match d {
        3 => -(Complex64::i() * k * r).exp() / (4.0 * PI * r),
        2 => -Complex64::new(0.0, 0.25) * hankel1_0(Complex64::new(k * r, 0.0)),
        _ => {
            return Err(ShellwaveError::Parameter(format!(
                "kernel is available in dimensions 2 and 3, got {d}"
            )))
        }
    };
    Ok(match sign {
        ResolventSign::Outgoing => outgoing,
        ResolventSign::Ingoing => outgoing.conj(),
    })
}

// ---------------------------------------------------------------------
// Sphere layer as a dual route
// ---------------------------------------------------------------------

/// The sphere-layer pairing `-+ i pi/(2 sqrt(lambda)) int_{S_lambda}
/// fhat conj(ghat) dS`, with the transforms evaluated on the sphere by
/// the exact Fourier-series sum and integrated by the latitude-
/// longitude rule.
pub fn sphere_pairing(
    f: &ComplexField,
    g: &ComplexField,
    lambda: f64,
    sign: ResolventSign,
    order: usize,
) -> Result<Complex64> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(ShellwaveError::Parameter(format!(
            "energy must be finite and positive, got {lambda}"
        )));
    }
    if order < 8 {
        return Err(ShellwaveError::Parameter(format!(
            "sphere quadrature order must be at least 8, got {order}"
        )));
    }
    if f.grid() != g.grid() {
        return Err(ShellwaveError::Parameter(
            "sphere pairing requires matching grids".into(),
        ));
    }
    let d = f.grid().dimension();
    let root = lambda.sqrt();
    let sphere = sphere_quadrature(d, root, [0.0; 3], order, root + 1.0)?;
    let fv = band_limited_eval(&ensure_physical(f), &sphere.nodes);
    let gv = band_limited_eval(&ensure_physical(g), &sphere.nodes);
    let mut s = Complex64::new(0.0, 0.0);
    for ((w, a), b) in sphere.weights.iter().zip(&fv).zip(&gv) {
        s += w * a * b.conj();
    }
    let prefactor = match sign {
        ResolventSign::Outgoing => Complex64::new(0.0, -PI / (2.0 * root)),
        ResolventSign::Ingoing => Complex64::new(0.0, PI / (2.0 * root)),
    };
    Ok(prefactor * s)
}

/// [`sphere_pairing`] of a source with itself: the exact imaginary
/// part the resolvent quadratic form must reproduce.
pub fn sphere_term(
    f: &ComplexField,
    lambda: f64,
    sign: ResolventSign,
    order: usize,
) -> Result<Complex64> {
    sphere_pairing(f, f, lambda, sign, order)
}

// ---------------------------------------------------------------------
// Conjugated inverses
// ---------------------------------------------------------------------

/// Divides the transform by `q_tau(xi) = -|xi|^2 + 2 i tau xi_last +
/// tau^2`, zeroing modes under the epsilon floor; errors if those
/// modes carry more than `1e-10` of the source mass. Output side
/// matches the input side.
pub fn conj_resolve_tau(f: &ComplexField, tau: f64) -> Result<ComplexField> {
    if !(tau.is_finite() && tau > 0.0) {
        return Err(ShellwaveError::Parameter(format!(
            "tau must be finite and positive, got {tau}"
        )));
    }
    let side = f.side();
    let mut fh = ensure_frequency(f);
    let grid = *fh.grid();
    let d = grid.dimension();
    let floor = epsilon_floor(tau);
    let mut total2 = 0.0;
    let mut floored2 = 0.0;
    let mut worst = (0.0f64, [0.0f64; 3]);
    for i in 0..grid.len() {
        let xi = grid.xi(i);
        let q = Complex64::new(tau * tau - grid.xi_norm2(i), 2.0 * tau * xi[d - 1]);
        let z = fh.data()[i];
        total2 += z.norm_sqr();
        if q.norm() < floor {
            floored2 += z.norm_sqr();
            if z.norm() > worst.0 {
                worst = (z.norm(), xi);
            }
            fh.data_mut()[i] = Complex64::new(0.0, 0.0);
        } else {
            fh.data_mut()[i] = z / q;
        }
    }
    if floored2.sqrt() > 1e-10 * total2.sqrt() {
        return Err(ShellwaveError::SymbolSingularity(format!(
            "source has mass {:.3e} (of {:.3e}) on the zero set of q_tau, worst at xi = {:?}",
            floored2.sqrt(),
            total2.sqrt(),
            worst.1
        )));
    }
    Ok(match side {
        Side::Frequency => fh,
        Side::Physical => inv(&fh),
    })
}

/// Divides the transform by `p_zeta(xi) = -|xi|^2 + 2 i zeta.xi` for a
/// characteristic direction with `zeta.zeta = -lambda` (checked
/// relative to `max(1, |zeta|^2)`). The origin mode, where the symbol
/// vanishes structurally, is dropped in the principal-value sense; the
/// `1e-10` mass rule applies to the remaining floor modes. Output side
/// matches the input side.
pub fn conj_resolve_zeta(f: &ComplexField, zeta: [Complex64; 3]) -> Result<ComplexField> {
    let side = f.side();
    let mut fh = ensure_frequency(f);
    let grid = *fh.grid();
    let d = grid.dimension();
    check_zeta(d, &zeta)?;
    let tau = (0..d).map(|a| zeta[a].re * zeta[a].re).sum::<f64>().sqrt();
    let floor = epsilon_floor(tau);
    let mut total2 = 0.0;
    let mut floored2 = 0.0;
    let mut worst = (0.0f64, [0.0f64; 3]);
    for i in 0..grid.len() {
        let xi = grid.xi(i);
        let mut dot = Complex64::new(0.0, 0.0);
        for a in 0..d {
            dot += zeta[a] * xi[a];
        }
        let p = Complex64::new(-grid.xi_norm2(i), 0.0) + Complex64::new(0.0, 2.0) * dot;
        let z = fh.data()[i];
        total2 += z.norm_sqr();
        if grid.xi_norm2(i) == 0.0 {
            fh.data_mut()[i] = Complex64::new(0.0, 0.0);
        } else if p.norm() < floor {
            floored2 += z.norm_sqr();
            if z.norm() > worst.0 {
                worst = (z.norm(), xi);
            }
            fh.data_mut()[i] = Complex64::new(0.0, 0.0);
        } else {
            fh.data_mut()[i] = z / p;
        }
    }
    if floored2.sqrt() > 1e-10 * total2.sqrt() {
        return Err(ShellwaveError::SymbolSingularity(format!(
            "source has mass {:.3e} (of {:.3e}) on the zero set of p_zeta, worst at xi = {:?}",
            floored2.sqrt(),
            total2.sqrt(),
            worst.1
        )));
    }
    Ok(match side {
        Side::Frequency => fh,
        Side::Physical => inv(&fh),
    })
}

fn check_zeta(d: usize, zeta: &[Complex64; 3]) -> Result<()> {
    for (axis, z) in zeta.iter().enumerate() {
        if !z.re.is_finite() || !z.im.is_finite() {
            return Err(ShellwaveError::Parameter(
                "zeta components must be finite".into(),
            ));
        }
        if axis >= d && *z != Complex64::new(0.0, 0.0) {
            return Err(ShellwaveError::Parameter(format!(
                "zeta component {axis} must be zero in dimension {d}"
            )));
        }
    }
    let dot: Complex64 = (0..d).map(|a| zeta[a] * zeta[a]).sum();
    let scale = (0..d).map(|a| zeta[a].norm_sqr()).sum::<f64>().max(1.0);
    if dot.im.abs() > 1e-12 * scale || dot.re >= 0.0 {
        return Err(ShellwaveError::Parameter(format!(
            "zeta.zeta must be a negative real (-lambda), got {dot}"
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------
