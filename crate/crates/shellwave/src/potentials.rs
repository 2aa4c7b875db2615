//! Potentials combining a real grid component with a delta-shell
//! surface component, hypersurface quadrature, and exact band-limited
//! trace evaluation at off-grid nodes.

use crate::error::{Result, ShellwaveError};
use crate::special::gauss_legendre;
use crate::spectral_core::{fwd, ComplexField, Side};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Real-valued grid potential supported in a centered ball.
#[derive(Debug, Clone)]
pub struct GridPotential {
    field: ComplexField,
    support_radius: f64,
}

impl GridPotential {
    /// Validates realness and support containment.
    pub fn new(field: ComplexField, support_radius: f64) -> Result<GridPotential> {
        if field.side() != Side::Physical {
            return Err(ShellwaveError::Parameter(
                "a grid potential must be given by physical-side samples".into(),
            ));
        }
        if !(support_radius > 0.0) || !support_radius.is_finite() {
            return Err(ShellwaveError::Parameter(format!(
                "support radius must be positive, got {support_radius}"
            )));
        }
        let grid = field.grid();
        for i in 0..grid.len() {
            let z = field.data()[i];
            if z.im != 0.0 {
                return Err(ShellwaveError::Parameter(format!(
                    "grid potential has imaginary mass {} at sample {i}",
                    z.im
                )));
            }
            if z.re != 0.0 && grid.radius2(i).sqrt() > support_radius {
                return Err(ShellwaveError::Parameter(format!(
                    "grid potential sample {i} at radius {:.4} exceeds the \
                     declared support radius {support_radius}",
                    grid.radius2(i).sqrt()
                )));
            }
        }
        Ok(GridPotential {
            field,
            support_radius,
        })
    }

    /// Samples a real profile and clips it to the support ball.
    pub fn from_fn(
        grid: crate::spectral_core::Grid,
        support_radius: f64,
        f: impl Fn([f64; 3]) -> f64,
    ) -> Result<GridPotential> {
        let field = ComplexField::from_fn(grid, |x| {
            let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
            if r <= support_radius {
                Complex64::new(f(x), 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        GridPotential::new(field, support_radius)
    }

    pub fn field(&self) -> &ComplexField {
        &self.field
    }

    pub fn support_radius(&self) -> f64 {
        self.support_radius
    }

    /// `L^(d/2)` norm of the potential restricted to the set where it
    /// exceeds `lambda^(1/4)`; decays to zero as the energy grows.
    pub fn tail_norm(&self, lambda: f64) -> f64 {
        let grid = self.field.grid();
        let p = grid.dimension() as f64 / 2.0;
        let threshold = lambda.powf(0.25);
        let s: f64 = self
            .field
            .data()
            .iter()
            .map(|z| {
                let a = z.re.abs();
                if a > threshold {
                    a.powf(p)
                } else {
                    0.0
                }
            })
            .sum();
        (s * self.field.cell_volume()).powf(1.0 / p)
    }
}

/// Geometry family of a quadrature surface.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "lowercase", tag = "kind", content = "params")]
pub enum SurfaceKind {
    Sphere { r: f64, center: [f64; 3] },
    Polyhedral { center: [f64; 3], half_widths: [f64; 3] },
}

/// Quadrature surface: nodes, surface-measure weights, unit normals.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Hypersurface {
    pub kind: SurfaceKind,
    pub dimension: usize,
    pub nodes: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    pub normals: Vec<[f64; 3]>,
}

impl Hypersurface {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Total quadrature mass, converging to the surface area.
    pub fn area(&self) -> f64 {
        self.weights.iter().sum()
    }
}

fn check_inside_ball(max_radius: f64, r0: f64) -> Result<()> {
    if max_radius > r0 + 1e-12 {
        return Err(ShellwaveError::Parameter(format!(
            "surface reaches radius {max_radius:.6}, outside the support ball of radius {r0}"
        )));
    }
    Ok(())
}

/// Sphere (d = 3) or circle (d = 2) quadrature inside the support ball
/// of radius `r0`. In three dimensions the rule is a latitude-longitude
/// product: Gauss-Legendre in the polar cosine, equispaced azimuth.
pub fn sphere_quadrature(
    d: usize,
    r: f64,
    center: [f64; 3],
    n: usize,
    r0: f64,
) -> Result<Hypersurface> {
    if !(r > 0.0) || !r.is_finite() || n < 4 {
        return Err(ShellwaveError::Parameter(format!(
            "sphere quadrature requires r > 0 and n >= 4, got r = {r}, n = {n}"
        )));
    }
    let center_norm = match d {
        2 => (center[0] * center[0] + center[1] * center[1]).sqrt(),
        3 => (center[0] * center[0] + center[1] * center[1] + center[2] * center[2]).sqrt(),
        _ => {
            return Err(ShellwaveError::Parameter(format!(
                "surface dimension must be 2 or 3, got {d}"
            )))
        }
    };
    check_inside_ball(center_norm + r, r0)?;

    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    let mut normals = Vec::new();
    match d {
        2 => {
            let w = 2.0 * std::f64::consts::PI * r / n as f64;
            for j in 0..n {
                let phi = 2.0 * std::f64::consts::PI * j as f64 / n as f64;
                let normal = [phi.cos(), phi.sin(), 0.0];
                nodes.push([
                    center[0] + r * normal[0],
                    center[1] + r * normal[1],
                    0.0,
                ]);
                weights.push(w);
                normals.push(normal);
            }
        }
        _ => {
            let (ct, wt) = gauss_legendre(n);
            let m = 2 * n;
            let dphi = 2.0 * std::f64::consts::PI / m as f64;
            for i in 0..n {
                let cos_t = ct[i];
                let sin_t = (1.0 - cos_t * cos_t).max(0.0).sqrt();
                for j in 0..m {
                    let phi = dphi * j as f64;
                    let normal = [sin_t * phi.cos(), sin_t * phi.sin(), cos_t];
                    nodes.push([
                        center[0] + r * normal[0],
                        center[1] + r * normal[1],
                        center[2] + r * normal[2],
                    ]);
                    weights.push(r * r * wt[i] * dphi);
                    normals.push(normal);
                }
            }
        }
    }
    Ok(Hypersurface {
        kind: SurfaceKind::Sphere { r, center },
        dimension: d,
        nodes,
        weights,
        normals,
    })
}

/// Axis-aligned box surface quadrature: midpoint rule per face (d = 3)
/// or per edge (d = 2) with `n` subdivisions per direction.
pub fn box_quadrature(
    d: usize,
    center: [f64; 3],
    half_widths: [f64; 3],
    n: usize,
    r0: f64,
) -> Result<Hypersurface> {
    if n < 2 || half_widths[..d.min(3)].iter().any(|&h| !(h > 0.0)) {
        return Err(ShellwaveError::Parameter(format!(
            "box quadrature requires positive half-widths and n >= 2, got {half_widths:?}, n = {n}"
        )));
    }
    if d != 2 && d != 3 {
        return Err(ShellwaveError::Parameter(format!(
            "surface dimension must be 2 or 3, got {d}"
        )));
    }
    let corner: f64 = (0..d)
        .map(|a| (center[a].abs() + half_widths[a]).powi(2))
        .sum::<f64>()
        .sqrt();
    check_inside_ball(corner, r0)?;

    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    let mut normals = Vec::new();
    match d {
        2 => {
            for axis in 0..2 {
                let other = 1 - axis;
                for side in [-1.0, 1.0] {
                    let mut normal = [0.0; 3];
                    normal[axis] = side;
                    let w = 2.0 * half_widths[other] / n as f64;
                    for i in 0..n {
                        let t = -half_widths[other]
                            + (i as f64 + 0.5) * 2.0 * half_widths[other] / n as f64;
                        let mut p = [0.0; 3];
                        p[axis] = center[axis] + side * half_widths[axis];
                        p[other] = center[other] + t;
                        nodes.push(p);
                        weights.push(w);
                        normals.push(normal);
                    }
                }
            }
        }
        _ => {
            for axis in 0..3 {
                let (a1, a2) = match axis {
                    0 => (1, 2),
                    1 => (0, 2),
                    _ => (0, 1),
                };
                for side in [-1.0, 1.0] {
                    let mut normal = [0.0; 3];
                    normal[axis] = side;
                    let w = 4.0 * half_widths[a1] * half_widths[a2] / (n * n) as f64;
                    for i in 0..n {
                        let t1 = -half_widths[a1]
                            + (i as f64 + 0.5) * 2.0 * half_widths[a1] / n as f64;
                        for j in 0..n {
                            let t2 = -half_widths[a2]
                                + (j as f64 + 0.5) * 2.0 * half_widths[a2] / n as f64;
                            let mut p = [0.0; 3];
                            p[axis] = center[axis] + side * half_widths[axis];
                            p[a1] = center[a1] + t1;
                            p[a2] = center[a2] + t2;
                            nodes.push(p);
                            weights.push(w);
                            normals.push(normal);
                        }
                    }
                }
            }
        }
    }
    Ok(Hypersurface {
        kind: SurfaceKind::Polyhedral {
            center,
            half_widths,
        },
        dimension: d,
        nodes,
        weights,
        normals,
    })
}

/// Delta-shell component: real node values of `alpha` on a surface.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DeltaShell {
    pub surface: Hypersurface,
    pub alpha: Vec<f64>,
}

impl DeltaShell {
    pub fn new(surface: Hypersurface, alpha: Vec<f64>) -> Result<DeltaShell> {
        if alpha.len() != surface.len() {
            return Err(ShellwaveError::Parameter(format!(
                "alpha has {} values for {} surface nodes",
                alpha.len(),
                surface.len()
            )));
        }
        if alpha.iter().any(|a| !a.is_finite()) {
            return Err(ShellwaveError::Parameter(
                "alpha values must be finite".into(),
            ));
        }
        Ok(DeltaShell { surface, alpha })
    }

    /// Constant strength on every node.
    pub fn constant(surface: Hypersurface, alpha: f64) -> Result<DeltaShell> {
        let values = vec![alpha; surface.len()];
        DeltaShell::new(surface, values)
    }

    /// `sup |alpha|` over nodes.
    pub fn alpha_sup(&self) -> f64 {
        self.alpha.iter().map(|a| a.abs()).fold(0.0, f64::max)
    }
}

/// Exact band-limited evaluation of `u` at the surface nodes: the full
/// Fourier-series sum, restructured so nodes sharing their last
/// coordinate share the innermost contraction.
pub fn trace_eval(u: &ComplexField, surface: &Hypersurface) -> Vec<Complex64> {
    let uhat = match u.side() {
        Side::Frequency => u.clone(),
        Side::Physical => fwd(u),
    };
    band_limited_eval(&uhat, &surface.nodes)
}

/// Evaluates the Fourier-series interpolant of `field` at off-lattice
/// targets. A frequency-side field is evaluated at physical points
/// (`u(x) = (dxi/sqrt(2 pi))^d sum uhat_k e^{i xi_k . x}`); a
/// physical-side field gives its transform at frequency points
/// (`uhat(xi) = (dx/sqrt(2 pi))^d sum u_n e^{-i x_n . xi}`). Targets
/// sharing a bit-identical last coordinate share the innermost
/// contraction.
///
/// The lattice is asymmetric (the extreme row has no mirror partner),
/// so that row enters through its cosine: the interpolation kernel is
/// then real and even, values at lattice points are unchanged, and
/// conjugating a field conjugates its interpolant.
pub fn band_limited_eval(field: &ComplexField, targets: &[[f64; 3]]) -> Vec<Complex64> {
    let grid = field.grid();
    let d = grid.dimension();
    let n = grid.samples_per_axis();
    let root = (2.0 * std::f64::consts::PI).sqrt();
    let (scale, phase_sign) = match field.side() {
        Side::Frequency => ((grid.dxi() / root).powi(d as i32), 1.0),
        Side::Physical => ((grid.dx() / root).powi(d as i32), -1.0),
    };
    let lattice_coord = |j: usize| match field.side() {
        Side::Frequency => grid.freq(j),
        Side::Physical => grid.coord(j),
    };

    let phase_row = |t: f64| -> Vec<Complex64> {
        (0..n)
            .map(|j| {
                if j == 0 {
                    Complex64::new((lattice_coord(0) * t).cos(), 0.0)
                } else {
                    (Complex64::i() * phase_sign * lattice_coord(j) * t).exp()
                }
            })
            .collect()
    };

    // Group target indices by bit-identical last coordinate.
    let last_axis = d - 1;
    let mut order: Vec<usize> = (0..targets.len()).collect();
    order.sort_by_key(|&i| targets[i][last_axis].to_bits());
    let mut out = vec![Complex64::new(0.0, 0.0); targets.len()];

    let mut start = 0;
    while start < order.len() {
        let t_last = targets[order[start]][last_axis];
        let mut stop = start;
        while stop < order.len() && targets[order[stop]][last_axis].to_bits() == t_last.to_bits() {
            stop += 1;
        }
        let e_last = phase_row(t_last);
        match d {
            2 => {
                let mut b = vec![Complex64::new(0.0, 0.0); n];
                for k0 in 0..n {
                    let row = &field.data()[k0 * n..(k0 + 1) * n];
                    b[k0] = row.iter().zip(&e_last).map(|(a, e)| a * e).sum();
                }
                for &node in &order[start..stop] {
                    let e0 = phase_row(targets[node][0]);
                    let v: Complex64 = b.iter().zip(&e0).map(|(a, e)| a * e).sum();
                    out[node] = v * scale;
                }
            }
            _ => {
                let mut b = vec![Complex64::new(0.0, 0.0); n * n];
                for k0 in 0..n {
                    for k1 in 0..n {
                        let row = &field.data()[((k0 * n) + k1) * n..((k0 * n) + k1 + 1) * n];
                        b[k0 * n + k1] = row.iter().zip(&e_last).map(|(a, e)| a * e).sum();
                    }
                }
                for &node in &order[start..stop] {
                    let e0 = phase_row(targets[node][0]);
                    let e1 = phase_row(targets[node][1]);
                    let mut v = Complex64::new(0.0, 0.0);
                    for k0 in 0..n {
                        let c: Complex64 = b[k0 * n..(k0 + 1) * n]
                            .iter()
                            .zip(&e1)
                            .map(|(a, e)| a * e)
                            .sum();
                        v += c * e0[k0];
                    }
                    out[node] = v * scale;
                }
            }
        }
        start = stop;
    }
    out
}

/// Applies `V = V0 + alpha dsigma` to a band-limited field: the grid
/// part is the pointwise product, the shell part the per-node density
/// `alpha_i u(node_i)` paired with the surface weights downstream.
pub fn apply_potential(
    v0: Option<&GridPotential>,
    shell: Option<&DeltaShell>,
    u: &ComplexField,
) -> (ComplexField, Vec<Complex64>) {
    let grid_part = match v0 {
        Some(v) => {
            let mut out = u.clone();
            debug_assert_eq!(u.side(), Side::Physical);
            for (a, b) in out.data_mut().iter_mut().zip(v.field.data()) {
                *a *= b.re;
            }
            out
        }
        None => ComplexField::zeros(*u.grid(), u.side()),
    };
    let shell_part = match shell {
        Some(sh) => {
            let traces = trace_eval(u, &sh.surface);
            traces
                .into_iter()
                .zip(&sh.alpha)
                .map(|(t, &a)| t * a)
                .collect()
        }
        None => Vec::new(),
    };
    (grid_part, shell_part)
}

/// Discrete pairing `<alpha dsigma, f g> = sum_i w_i alpha_i f_i g_i`
/// over surface nodes, with no conjugation.
pub fn shell_pairing(shell: &DeltaShell, f: &[Complex64], g: &[Complex64]) -> Complex64 {
    shell
        .surface
        .weights
        .iter()
        .zip(&shell.alpha)
        .zip(f.iter().zip(g))
        .map(|((w, a), (x, y))| w * a * x * y)
        .sum()
}
