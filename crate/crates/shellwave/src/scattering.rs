//! Direct point-source scattering: incident waves, the Neumann-series
//! resolvent for the grid potential, the dense shell Fredholm solve,
//! data generation on the measurement sphere, and the structural checks
//! (radiation-condition decay, reciprocity, orthogonality).
//!
//! The discrete chain is built to be complex-symmetric end to end:
//! shell charges enter as band-limited point masses whose embedding is
//! the exact bilinear adjoint of [`trace_eval`], incident traces and
//! receiver readouts both use the closed-form kernel, and the resolvent
//! is an even-kernel convolution. Reciprocity of the data matrix then
//! holds to solver tolerance rather than to discretization error.

use crate::error::{Result, ShellwaveError};
use crate::funcspaces::x_star_norm;
use crate::lp_decomp::LPBasis;
use crate::potentials::{
    sphere_quadrature, trace_eval, DeltaShell, GridPotential, Hypersurface, SurfaceKind,
};
use crate::resolvent::{
    fundamental_solution, green_kernel, resolve, ResolventBackend, ResolventSign, ResolventSpec,
};
use crate::spectral_core::{fwd, inv, ComplexField, Grid, Side};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Seven-point sixth-order first-derivative stencil on a uniform line.
const D1_STENCIL: [(isize, f64); 6] = [
    (-3, -1.0 / 60.0),
    (-2, 9.0 / 60.0),
    (-1, -45.0 / 60.0),
    (1, 45.0 / 60.0),
    (2, -9.0 / 60.0),
    (3, 1.0 / 60.0),
];

fn norm3(x: [f64; 3]) -> f64 {
    (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt()
}

fn dist3(a: [f64; 3], b: [f64; 3]) -> f64 {
    norm3([a[0] - b[0], a[1] - b[1], a[2] - b[2]])
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
// Band-limited point charges
// ---------------------------------------------------------------------

/// Per-axis interpolation weights `D(p - x_j)` of the band-limited
/// delta, `D(t) = N^{-1} sum_k e^{i xi_k t}` over the frequency lattice
/// with the unpaired extreme mode entering through its cosine. The
/// paired modes sum to a real value, so the symmetrized kernel is the
/// real part of the one-sided closed form.
fn dirichlet_axis(grid: &Grid, p: f64) -> Vec<Complex64> {
    let n = grid.samples_per_axis();
    let nf = n as f64;
    let dxi = grid.dxi();
    let xi_min = -(nf / 2.0) * dxi;
    (0..n)
        .map(|j| {
            let t = p - grid.coord(j);
            let half = 0.5 * dxi * t;
            let s = half.sin();
            let ratio = if s.abs() < 1e-12 {
                nf * (nf * half).cos() / half.cos()
            } else {
                (nf * half).sin() / s
            };
            let full = Complex64::from_polar(ratio / nf, xi_min * t + (nf - 1.0) * half);
            Complex64::new(full.re, 0.0)
        })
        .collect()
}

/// Embeds point charges as band-limited unit masses on the grid.
///
/// The result is the exact bilinear adjoint of [`trace_eval`]: for any
/// field `u`, `sum_n deposit(c)_n u_n dx^d = sum_i c_i u(p_i)` with
/// `u(p_i)` the band-limited interpolant. A charge at a lattice point
/// reduces to a single scaled sample.
pub fn deposit_charges(
    grid: &Grid,
    points: &[[f64; 3]],
    charges: &[Complex64],
) -> Result<ComplexField> {
    if points.len() != charges.len() {
        return Err(ShellwaveError::Parameter(format!(
            "{} charge values for {} points",
            charges.len(),
            points.len()
        )));
    }
    let d = grid.dimension();
    let n = grid.samples_per_axis();
    let l = grid.half_side();
    for p in points {
        for a in 0..3 {
            let inside = if a < d {
                p[a].abs() <= l
            } else {
                p[a] == 0.0
            };
            if !inside || !p[a].is_finite() {
                return Err(ShellwaveError::Parameter(format!(
                    "charge location ({}, {}, {}) leaves the box of half-side {l}",
                    p[0], p[1], p[2]
                )));
            }
        }
    }
    let inv_vol = 1.0 / grid.dx().powi(d as i32);
    let mut out = vec![Complex64::new(0.0, 0.0); grid.len()];
    for (p, &c) in points.iter().zip(charges) {
        if c.norm_sqr() == 0.0 {
            continue;
        }
        let ax0 = dirichlet_axis(grid, p[0]);
        let ax1 = dirichlet_axis(grid, p[1]);
        if d == 2 {
            for i0 in 0..n {
                let c0 = c * ax0[i0] * inv_vol;
                let row = i0 * n;
                for i1 in 0..n {
                    out[row + i1] += c0 * ax1[i1];
                }
            }
        } else {
            let ax2 = dirichlet_axis(grid, p[2]);
            for i0 in 0..n {
                let c0 = c * ax0[i0] * inv_vol;
                for i1 in 0..n {
                    let c01 = c0 * ax1[i1];
                    let row = (i0 * n + i1) * n;
                    for i2 in 0..n {
                        out[row + i2] += c01 * ax2[i2];
                    }
                }
            }
        }
    }
    ComplexField::from_data(*grid, Side::Physical, out)
}

// ---------------------------------------------------------------------
// Incident waves
// ---------------------------------------------------------------------

/// Point-source incident wave: a regularized grid field plus the exact
/// closed-form evaluator.
///
/// The grid field resolves a Gaussian unit mass of width `width`
/// (default three grid spacings), so it matches the damped closed form
/// away from the source. The evaluator returns the unregularized
/// fundamental solution and is the representation used for traces and
/// receivers in the data path.
#[derive(Debug, Clone)]
pub struct IncidentWave {
    pub field: ComplexField,
    pub source: [f64; 3],
    pub lambda: f64,
    pub sign: ResolventSign,
    pub width: f64,
}

impl IncidentWave {
    /// Closed-form value `Phi_lambda(x - y)`; errors when `x` hits the
    /// source point.
    pub fn eval(&self, x: [f64; 3]) -> Result<Complex64> {
        let d = self.field.grid().dimension();
        green_kernel(d, self.lambda, self.sign, dist3(x, self.source))
    }
}

/// Builds the incident wave for a source at distance at least `r0` from
/// the origin, inside the box margin.
pub fn incident_wave(
    grid: Grid,
    y: [f64; 3],
    lambda: f64,
    sign: ResolventSign,
    r0: f64,
) -> Result<IncidentWave> {
    if !(r0 > 0.0) || !r0.is_finite() {
        return Err(ShellwaveError::Parameter(format!(
            "measurement radius must be positive, got {r0}"
        )));
    }
    let radius = norm3(y);
    if radius < r0 * (1.0 - 1e-9) {
        return Err(ShellwaveError::Parameter(format!(
            "source at radius {radius:.6} sits inside the measurement sphere of radius {r0}"
        )));
    }
    let spec = ResolventSpec::new(lambda, sign)?;
    let field = fundamental_solution(grid, y, &spec, None)?;
    Ok(IncidentWave {
        field,
        source: y,
        lambda,
        sign,
        width: 3.0 * grid.dx(),
    })
}

/// Source or receiver points on the measurement sphere of radius `r0`,
/// placed by the same latitude-longitude rule as the shell quadrature.
pub fn boundary_points(d: usize, r0: f64, n: usize) -> Result<Vec<[f64; 3]>> {
    Ok(sphere_quadrature(d, r0, [0.0; 3], n, r0)?.nodes)
}

// ---------------------------------------------------------------------
// Neumann-series resolvent for the grid potential
// ---------------------------------------------------------------------

/// Stopping and safety controls for the Neumann series.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct NeumannOptions {
    /// Stop once the latest term falls below `tol` times the leading
    /// term in the solution norm.
    pub tol: f64,
    /// Hard cap on the number of series terms.
    pub max_terms: usize,
    /// Littlewood-Paley basis for the stopping norm.
    pub basis: LPBasis,
}

impl Default for NeumannOptions {
    fn default() -> Self {
        NeumannOptions {
            tol: 1e-11,
            max_terms: 30,
            basis: LPBasis::default(),
        }
    }
}

/// Convergence record of one Neumann solve.
#[derive(Debug, Clone, Serialize)]
pub struct NeumannReport {
    /// Number of series terms summed.
    pub terms: usize,
    /// Last measured term-to-term contraction ratio in the solution
    /// norm; zero when the series truncates exactly.
    pub contraction_ratio: f64,
    /// PDE residual `|(Delta + lambda - V0)u - f| / |f|` in `l^2`,
    /// evaluated through the series identity: the residual of the
    /// partial sum is exactly `-V0` times the last term.
    pub residual: f64,
}

fn multiply_v0(v0: &GridPotential, u: &ComplexField) -> ComplexField {
    let mut out = u.clone();
    for (a, b) in out.data_mut().iter_mut().zip(v0.field().data()) {
        *a *= b.re;
    }
    out
}

/// Inverts `Delta + lambda (+-i0) - V0` by the Neumann series
/// `sum_n (R V0)^(n-1) R f`, with `R` the free resolvent.
///
/// The measured contraction proxy is the solution-norm ratio of one
/// application of `R V0`; a ratio at or above one aborts with a regime
/// error advising a larger spectral parameter, as does a ratio that
/// fails to decrease for five consecutive terms.
pub fn neumann_resolve_v0(
    f: &ComplexField,
    v0: Option<&GridPotential>,
    spec: &ResolventSpec,
    opts: &NeumannOptions,
) -> Result<(ComplexField, NeumannReport)> {
    if !(opts.tol > 0.0) || !opts.tol.is_finite() || opts.max_terms == 0 {
        return Err(ShellwaveError::Parameter(format!(
            "neumann options require tol > 0 and max_terms >= 1, got tol = {}, max_terms = {}",
            opts.tol, opts.max_terms
        )));
    }
    if let Some(v) = v0 {
        if v.field().grid() != f.grid() {
            return Err(ShellwaveError::Parameter(
                "potential and source live on different grids".into(),
            ));
        }
    }
    let f_l2 = f.norm_l2();
    let head = resolve(f, spec)?;
    let trivial = NeumannReport {
        terms: 1,
        contraction_ratio: 0.0,
        residual: 0.0,
    };
    let v0 = match v0 {
        Some(v) if v.field().norm_max() > 0.0 && f_l2 > 0.0 => v,
        _ => return Ok((head, trivial)),
    };
    let lambda = spec.lambda;
    let head_norm = x_star_norm(&head, lambda, opts.basis)?.value;
    if head_norm == 0.0 {
        return Ok((head, trivial));
    }
    let mut sum = head.clone();
    let mut term = head;
    let mut prev_norm = head_norm;
    let mut ratio = 0.0;
    let mut rising = 0usize;
    let mut terms = 1usize;
    while terms < opts.max_terms {
        let driven = multiply_v0(v0, &term);
        term = resolve(&driven, spec)?;
        terms += 1;
        let term_norm = x_star_norm(&term, lambda, opts.basis)?.value;
        ratio = term_norm / prev_norm;
        if terms == 2 && ratio >= 1.0 {
            return Err(ShellwaveError::Regime(format!(
                "contraction proxy rho = {ratio:.4} >= 1: the Neumann series for the \
                 potential-shifted resolvent diverges at lambda = {lambda}; increase the \
                 spectral parameter or weaken the grid potential"
            )));
        }
        rising = if ratio >= 1.0 { rising + 1 } else { 0 };
        if rising >= 5 {
            return Err(ShellwaveError::Regime(format!(
                "Neumann term norms non-decreasing over five steps (last ratio \
                 {ratio:.4}): spectral parameter lambda = {lambda} is below the \
                 convergent regime"
            )));
        }
        sum.axpy(Complex64::new(1.0, 0.0), &term);
        prev_norm = term_norm;
        if term_norm < opts.tol * head_norm {
            break;
        }
    }
    let residual = multiply_v0(v0, &term).norm_l2() / f_l2;
    Ok((
        sum,
        NeumannReport {
            terms,
            contraction_ratio: ratio,
            residual,
        },
    ))
}

// ---------------------------------------------------------------------
// Scattering problems
// ---------------------------------------------------------------------

/// Problem definition: potential, energy, sign, and the source and
/// receiver points on the measurement sphere of radius `r0`.
#[derive(Debug, Clone)]
pub struct ScatteringProblem {
    pub grid: Grid,
    pub lambda: f64,
    pub sign: ResolventSign,
    pub r0: f64,
    pub v0: Option<GridPotential>,
    pub shell: Option<DeltaShell>,
    pub sources: Vec<[f64; 3]>,
    pub receivers: Vec<[f64; 3]>,
    pub backend: ResolventBackend,
    pub neumann: NeumannOptions,
}

impl ScatteringProblem {
    /// Empty problem on the measurement sphere of radius `r0 >= 1`.
    pub fn new(grid: Grid, lambda: f64, sign: ResolventSign, r0: f64) -> ScatteringProblem {
        ScatteringProblem {
            grid,
            lambda,
            sign,
            r0,
            v0: None,
            shell: None,
            sources: Vec::new(),
            receivers: Vec::new(),
            backend: ResolventBackend::PvSphere,
            neumann: NeumannOptions::default(),
        }
    }

    pub fn with_v0(mut self, v0: GridPotential) -> ScatteringProblem {
        self.v0 = Some(v0);
        self
    }

    pub fn with_shell(mut self, shell: DeltaShell) -> ScatteringProblem {
        self.shell = Some(shell);
        self
    }

    /// Uses the same point list for sources and receivers.
    pub fn with_boundary_nodes(mut self, points: Vec<[f64; 3]>) -> ScatteringProblem {
        self.sources = points.clone();
        self.receivers = points;
        self
    }

    fn check_on_sphere(&self, label: &str, points: &[[f64; 3]]) -> Result<()> {
        let d = self.grid.dimension();
        for p in points {
            for a in d..3 {
                if p[a] != 0.0 {
                    return Err(ShellwaveError::Parameter(format!(
                        "{label} point has a nonzero component beyond dimension {d}"
                    )));
                }
            }
            let r = norm3(*p);
            if (r - self.r0).abs() > 1e-9 * self.r0.max(1.0) {
                return Err(ShellwaveError::Parameter(format!(
                    "{label} point at radius {r:.9} is off the measurement sphere of \
                     radius {}",
                    self.r0
                )));
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0) || !self.lambda.is_finite() {
            return Err(ShellwaveError::Parameter(format!(
                "energy must be positive and finite, got {}",
                self.lambda
            )));
        }
        if !(self.r0 >= 1.0) || !self.r0.is_finite() {
            return Err(ShellwaveError::Parameter(format!(
                "measurement radius must satisfy r0 >= 1, got {}",
                self.r0
            )));
        }
        if self.r0 >= self.grid.half_side() {
            return Err(ShellwaveError::Parameter(format!(
                "measurement radius {} does not fit in the box of half-side {}",
                self.r0,
                self.grid.half_side()
            )));
        }
        if self.sources.is_empty() || self.receivers.is_empty() {
            return Err(ShellwaveError::Parameter(
                "at least one source and one receiver are required".into(),
            ));
        }
        self.check_on_sphere("source", &self.sources)?;
        self.check_on_sphere("receiver", &self.receivers)?;
        if let Some(v) = &self.v0 {
            if v.field().grid() != &self.grid {
                return Err(ShellwaveError::Parameter(
                    "grid potential lives on a different grid".into(),
                ));
            }
            if v.support_radius() > self.r0 + 1e-12 {
                return Err(ShellwaveError::Parameter(format!(
                    "grid potential support radius {} leaves the support ball of radius {}",
                    v.support_radius(),
                    self.r0
                )));
            }
        }
        if let Some(sh) = &self.shell {
            if sh.surface.dimension != self.grid.dimension() {
                return Err(ShellwaveError::Parameter(
                    "shell surface dimension does not match the grid".into(),
                ));
            }
            for node in &sh.surface.nodes {
                if norm3(*node) > self.r0 + 1e-9 {
                    return Err(ShellwaveError::Parameter(format!(
                        "shell node at radius {:.6} leaves the support ball of radius {}",
                        norm3(*node),
                        self.r0
                    )));
                }
            }
        }
        Ok(())
    }

    fn resolvent_spec(&self) -> Result<ResolventSpec> {
        Ok(ResolventSpec::new(self.lambda, self.sign)?.with_backend(self.backend))
    }

    fn shell_len(&self) -> usize {
        self.shell.as_ref().map_or(0, |s| s.surface.len())
    }

    fn has_v0(&self) -> bool {
        self.v0
            .as_ref()
            .map_or(false, |v| v.field().norm_max() > 0.0)
    }

    fn has_shell(&self) -> bool {
        self.shell.as_ref().map_or(false, |s| s.alpha_sup() > 0.0)
    }

    /// Grid indices where the grid potential is nonzero.
    fn support_indices(&self) -> Vec<usize> {
        match &self.v0 {
            Some(v) => v
                .field()
                .data()
                .iter()
                .enumerate()
                .filter(|(_, z)| z.re != 0.0)
                .map(|(i, _)| i)
                .collect(),
            None => Vec::new(),
        }
    }

    /// Closed-form incident values at the listed grid indices.
    fn incident_on_support(&self, support: &[usize], y: [f64; 3]) -> Result<Vec<Complex64>> {
        let d = self.grid.dimension();
        support
            .iter()
            .map(|&i| green_kernel(d, self.lambda, self.sign, dist3(self.grid.point(i), y)))
            .collect()
    }

    /// Closed-form incident values at the shell nodes.
    fn incident_on_nodes(&self, y: [f64; 3]) -> Result<Vec<Complex64>> {
        let d = self.grid.dimension();
        match &self.shell {
            Some(sh) => sh
                .surface
                .nodes
                .iter()
                .map(|node| green_kernel(d, self.lambda, self.sign, dist3(*node, y)))
                .collect(),
            None => Ok(Vec::new()),
        }
    }
}

// ---------------------------------------------------------------------
// Data and solution containers
// ---------------------------------------------------------------------

/// Run metadata carried with a data matrix.
#[derive(Debug, Clone, Serialize)]
pub struct DataProvenance {
    pub backend: String,
    pub dimension: usize,
    pub half_side: f64,
    pub samples_per_axis: usize,
    pub shell_nodes: usize,
    pub neumann_terms_max: usize,
    pub neumann_residual_max: f64,
    pub condition: Option<f64>,
}

/// Scattered-field values indexed (receiver, source), with provenance.
#[derive(Debug, Clone)]
pub struct ScatteringData {
    pub lambda: f64,
    pub sign: ResolventSign,
    pub r0: f64,
    pub sources: Vec<[f64; 3]>,
    pub receivers: Vec<[f64; 3]>,
    /// Row-per-receiver matrix of scattered values.
    pub matrix: Vec<Vec<Complex64>>,
    /// `max |D - D^T| / max |D|` when sources and receivers coincide.
    pub reciprocity_defect: Option<f64>,
    pub provenance: DataProvenance,
}

/// Full output of the two-stage solve.
#[derive(Debug, Clone)]
pub struct ScatteringSolution {
    /// Scattered grid field per source.
    pub fields: Vec<ComplexField>,
    pub data: ScatteringData,
    /// Total-field traces at the shell nodes per source; empty without
    /// a shell.
    pub total_traces: Vec<Vec<Complex64>>,
    /// Neumann convergence record per source.
    pub reports: Vec<NeumannReport>,
    /// Condition number of the shell Fredholm matrix.
    pub condition: Option<f64>,
}

impl ScatteringSolution {
    /// Closed-form far representation of one scattered field: the
    /// induced volume and shell charges radiating through the exact
    /// kernel.
    pub fn far_evaluator(
        &self,
        problem: &ScatteringProblem,
        source_index: usize,
    ) -> Result<FarEvaluator> {
        if source_index >= problem.sources.len() {
            return Err(ShellwaveError::Parameter(format!(
                "source index {source_index} out of range for {} sources",
                problem.sources.len()
            )));
        }
        let support = problem.support_indices();
        let charges = induced_charges(
            problem,
            &support,
            &self.fields[source_index],
            self.total_traces.get(source_index).map_or(&[], |t| t),
            problem.sources[source_index],
        )?;
        let source_radius = charges
            .iter()
            .map(|(p, _)| norm3(*p))
            .fold(0.0, f64::max);
        Ok(FarEvaluator {
            d: problem.grid.dimension(),
            lambda: problem.lambda,
            sign: problem.sign,
            charges,
            source_radius,
        })
    }
}

/// Total induced charge list `V u_to`, quadrature weights included:
/// grid entries `V0(x_n) u_to(x_n) dx^d` and shell entries
/// `w_i alpha_i u_to(node_i)`.
fn induced_charges(
    problem: &ScatteringProblem,
    support: &[usize],
    u_sc: &ComplexField,
    total_traces: &[Complex64],
    y: [f64; 3],
) -> Result<Vec<([f64; 3], Complex64)>> {
    let mut charges = Vec::new();
    if let Some(v) = &problem.v0 {
        let vol = problem.grid.dx().powi(problem.grid.dimension() as i32);
        let u_in = problem.incident_on_support(support, y)?;
        for (&i, u_in_i) in support.iter().zip(&u_in) {
            let u_to = u_sc.data()[i] + u_in_i;
            charges.push((problem.grid.point(i), v.field().data()[i].re * u_to * vol));
        }
    }
    if let Some(sh) = &problem.shell {
        for ((node, (&w, &a)), &t) in sh
            .surface
            .nodes
            .iter()
            .zip(sh.surface.weights.iter().zip(&sh.alpha))
            .zip(total_traces)
        {
            charges.push((*node, w * a * t));
        }
    }
    Ok(charges)
}

fn defect_of(matrix: &[Vec<Complex64>]) -> f64 {
    let mut max_abs = 0.0f64;
    let mut max_skew = 0.0f64;
    for (i, row) in matrix.iter().enumerate() {
        for (j, z) in row.iter().enumerate() {
            max_abs = max_abs.max(z.norm());
            max_skew = max_skew.max((z - matrix[j][i]).norm());
        }
    }
    if max_abs == 0.0 {
        0.0
    } else {
        max_skew / max_abs
    }
}

fn same_points(a: &[[f64; 3]], b: &[[f64; 3]]) -> bool {
    a.len() == b.len()
        && a.iter()
            .zip(b)
            .all(|(p, q)| dist3(*p, *q) <= 1e-12 * (1.0 + norm3(*p)))
}

// ---------------------------------------------------------------------
// The two-stage solve
// ---------------------------------------------------------------------

/// Solves the direct problem for every source and fills the data
/// matrix at the receivers.
///
/// Stage one inverts the grid-potential part by [`neumann_resolve_v0`];
/// stage two solves the dense Fredholm system on the shell traces,
/// `(I - A) t = b` with `A_(ij)` the trace at node `i` of the
/// stage-one resolvent applied to the weighted unit charge at node `j`.
/// The scattered field is reassembled from the fixed-point identity and
/// receivers read the induced charges through the closed-form kernel.
pub fn solve_scattering(problem: &ScatteringProblem) -> Result<ScatteringSolution> {
    problem.validate()?;
    let grid = problem.grid;
    let m_src = problem.sources.len();
    let shell_n = problem.shell_len();
    let provenance_base = |terms: usize, residual: f64, condition: Option<f64>| DataProvenance {
        backend: problem.backend.name().to_string(),
        dimension: grid.dimension(),
        half_side: grid.half_side(),
        samples_per_axis: grid.samples_per_axis(),
        shell_nodes: shell_n,
        neumann_terms_max: terms,
        neumann_residual_max: residual,
        condition,
    };

    if !problem.has_v0() && !problem.has_shell() {
        let zeros = Complex64::new(0.0, 0.0);
        let traces: Vec<Vec<Complex64>> = problem
            .sources
            .iter()
            .map(|&y| problem.incident_on_nodes(y))
            .collect::<Result<_>>()?;
        let matrix = vec![vec![zeros; m_src]; problem.receivers.len()];
        let defect = same_points(&problem.sources, &problem.receivers).then_some(0.0);
        return Ok(ScatteringSolution {
            fields: vec![ComplexField::zeros(grid, Side::Physical); m_src],
            data: ScatteringData {
                lambda: problem.lambda,
                sign: problem.sign,
                r0: problem.r0,
                sources: problem.sources.clone(),
                receivers: problem.receivers.clone(),
                matrix,
                reciprocity_defect: defect,
                provenance: provenance_base(0, 0.0, None),
            },
            total_traces: traces,
            reports: vec![
                NeumannReport {
                    terms: 0,
                    contraction_ratio: 0.0,
                    residual: 0.0
                };
                m_src
            ],
            condition: None,
        });
    }

    let spec = problem.resolvent_spec()?;
    let support = problem.support_indices();

    // Stage two, system assembly: one stage-one solve per shell node.
    let mut condition = None;
    let factorization = match &problem.shell {
        Some(sh) if shell_n > 0 => {
            let columns: Vec<Vec<Complex64>> = (0..shell_n)
                .into_par_iter()
                .map(|j| -> Result<Vec<Complex64>> {
                    let strength = sh.surface.weights[j] * sh.alpha[j];
                    if strength == 0.0 {
                        return Ok(vec![Complex64::new(0.0, 0.0); shell_n]);
                    }
                    let charge = deposit_charges(
                        &grid,
                        &[sh.surface.nodes[j]],
                        &[Complex64::new(strength, 0.0)],
                    )?;
                    let (g, _) =
                        neumann_resolve_v0(&charge, problem.v0.as_ref(), &spec, &problem.neumann)?;
                    Ok(trace_eval(&g, &sh.surface))
                })
                .collect::<Result<_>>()?;
            let mut system = DMatrix::<Complex64>::identity(shell_n, shell_n);
            for (j, col) in columns.iter().enumerate() {
                for (i, a_ij) in col.iter().enumerate() {
                    system[(i, j)] -= a_ij;
                }
            }
            let sv = system.clone().svd(false, false).singular_values;
            let s_max = sv.iter().cloned().fold(0.0f64, f64::max);
            let s_min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
            if !(s_min > 1e-10 * s_max) {
                return Err(ShellwaveError::Divergence(format!(
                    "shell Fredholm matrix is singular at working precision: \
                     sigma_min/sigma_max = {:.3e}",
                    s_min / s_max
                )));
            }
            condition = Some(s_max / s_min);
            Some(system.lu())
        }
        _ => None,
    };

    // Per-source stage-one solves, trace system, and readout.
    struct PerSource {
        field: ComplexField,
        traces: Vec<Complex64>,
        report: NeumannReport,
        column: Vec<Complex64>,
    }
    let per_source: Vec<PerSource> = problem
        .sources
        .par_iter()
        .map(|&y| -> Result<PerSource> {
            let t_in = problem.incident_on_nodes(y)?;
            // V u_in on the grid: the grid-potential part sampled on its
            // support plus the weighted incident traces as shell charges.
            let mut driven = ComplexField::zeros(grid, Side::Physical);
            if problem.has_v0() {
                let v = problem.v0.as_ref().unwrap();
                let u_in = problem.incident_on_support(&support, y)?;
                for (&i, u_in_i) in support.iter().zip(&u_in) {
                    driven.data_mut()[i] = v.field().data()[i].re * u_in_i;
                }
            }
            if let Some(sh) = &problem.shell {
                let charges: Vec<Complex64> = sh
                    .surface
                    .weights
                    .iter()
                    .zip(&sh.alpha)
                    .zip(&t_in)
                    .map(|((w, a), t)| w * a * t)
                    .collect();
                let shell_part = deposit_charges(&grid, &sh.surface.nodes, &charges)?;
                driven.axpy(Complex64::new(1.0, 0.0), &shell_part);
            }
            let (b_field, report) =
                neumann_resolve_v0(&driven, problem.v0.as_ref(), &spec, &problem.neumann)?;

            let (field, t_total) = match (&problem.shell, &factorization) {
                (Some(sh), Some(lu)) => {
                    let b = DVector::from_vec(trace_eval(&b_field, &sh.surface));
                    let t_sc = lu.solve(&b).ok_or_else(|| {
                        ShellwaveError::Divergence(
                            "shell Fredholm factorization failed to back-substitute".into(),
                        )
                    })?;
                    let charges: Vec<Complex64> = sh
                        .surface
                        .weights
                        .iter()
                        .zip(&sh.alpha)
                        .zip(t_sc.iter())
                        .map(|((w, a), t)| w * a * t)
                        .collect();
                    let shell_src = deposit_charges(&grid, &sh.surface.nodes, &charges)?;
                    let (correction, _) =
                        neumann_resolve_v0(&shell_src, problem.v0.as_ref(), &spec, &problem.neumann)?;
                    let mut field = b_field;
                    field.axpy(Complex64::new(1.0, 0.0), &correction);
                    let t_total: Vec<Complex64> = t_in
                        .iter()
                        .zip(t_sc.iter())
                        .map(|(a, b)| a + b)
                        .collect();
                    (field, t_total)
                }
                _ => (b_field, t_in),
            };

            let charges = induced_charges(problem, &support, &field, &t_total, y)?;
            let column = problem
                .receivers
                .iter()
                .map(|&x| -> Result<Complex64> {
                    let mut v = Complex64::new(0.0, 0.0);
                    for (p, c) in &charges {
                        v += c * green_kernel(
                            grid.dimension(),
                            problem.lambda,
                            problem.sign,
                            dist3(x, *p),
                        )?;
                    }
                    Ok(v)
                })
                .collect::<Result<_>>()?;
            Ok(PerSource {
                field,
                traces: if problem.shell.is_some() { t_total } else { Vec::new() },
                report,
                column,
            })
        })
        .collect::<Result<_>>()?;

    let mut matrix = vec![vec![Complex64::new(0.0, 0.0); m_src]; problem.receivers.len()];
    for (s, ps) in per_source.iter().enumerate() {
        for (r, v) in ps.column.iter().enumerate() {
            matrix[r][s] = *v;
        }
    }
    let defect = same_points(&problem.sources, &problem.receivers).then(|| defect_of(&matrix));
    let terms_max = per_source.iter().map(|p| p.report.terms).max().unwrap_or(0);
    let residual_max = per_source
        .iter()
        .map(|p| p.report.residual)
        .fold(0.0, f64::max);

    let mut fields = Vec::with_capacity(m_src);
    let mut total_traces = Vec::with_capacity(m_src);
    let mut reports = Vec::with_capacity(m_src);
    for ps in per_source {
        fields.push(ps.field);
        total_traces.push(ps.traces);
        reports.push(ps.report);
    }
    Ok(ScatteringSolution {
        fields,
        data: ScatteringData {
            lambda: problem.lambda,
            sign: problem.sign,
            r0: problem.r0,
            sources: problem.sources.clone(),
            receivers: problem.receivers.clone(),
            matrix,
            reciprocity_defect: defect,
            provenance: provenance_base(terms_max, residual_max, condition),
        },
        total_traces,
        reports,
        condition,
    })
}

// ---------------------------------------------------------------------
// Radiation-condition diagnostics
// ---------------------------------------------------------------------

/// Closed-form radiating representation: point charges inside the
/// support ball evaluated through the exact kernel at any exterior
/// point.
#[derive(Debug, Clone)]
pub struct FarEvaluator {
    pub d: usize,
    pub lambda: f64,
    pub sign: ResolventSign,
    charges: Vec<([f64; 3], Complex64)>,
    /// Largest charge radius; evaluations must stay strictly outside.
    pub source_radius: f64,
}

impl FarEvaluator {
    /// Single point charge, for closed-form kernel diagnostics.
    pub fn point_source(
        d: usize,
        lambda: f64,
        sign: ResolventSign,
        p: [f64; 3],
        strength: Complex64,
    ) -> FarEvaluator {
        FarEvaluator {
            d,
            lambda,
            sign,
            charges: vec![(p, strength)],
            source_radius: norm3(p),
        }
    }

    /// Evaluator with no charges: the zero field.
    pub fn zero(d: usize, lambda: f64, sign: ResolventSign) -> FarEvaluator {
        FarEvaluator {
            d,
            lambda,
            sign,
            charges: Vec::new(),
            source_radius: 0.0,
        }
    }

    pub fn eval(&self, x: [f64; 3]) -> Result<Complex64> {
        let mut v = Complex64::new(0.0, 0.0);
        for (p, c) in &self.charges {
            v += c * green_kernel(self.d, self.lambda, self.sign, dist3(x, *p))?;
        }
        Ok(v)
    }

    /// Radial derivative by a sixth-order difference along `x/|x|`.
    pub fn radial_derivative(&self, x: [f64; 3], step: f64) -> Result<Complex64> {
        let r = norm3(x);
        let dir = [x[0] / r, x[1] / r, x[2] / r];
        let mut acc = Complex64::new(0.0, 0.0);
        for (offset, weight) in D1_STENCIL {
            let t = offset as f64 * step;
            let p = [x[0] + t * dir[0], x[1] + t * dir[1], x[2] + t * dir[2]];
            acc += weight * self.eval(p)?;
        }
        Ok(acc / step)
    }
}

/// Decay report of the radiation-condition combination.
#[derive(Debug, Clone, Serialize)]
pub struct SrcReport {
    pub radii: Vec<f64>,
    /// `max_dirs |d_r u -+ i sqrt(lambda) u|` per radius.
    pub max_combination: Vec<f64>,
    /// Least-squares slope of `log(max * R^((d-1)/2))` against
    /// `log R`; `None` when the field vanishes identically.
    pub slope: Option<f64>,
    pub sign: ResolventSign,
}

/// Measures the Sommerfeld combination of `u` on spheres of the given
/// radii and fits its decay rate beyond the free rate `R^(-(d-1)/2)`.
pub fn src_residual(
    far: &FarEvaluator,
    lambda: f64,
    sign: ResolventSign,
    radii: &[f64],
) -> Result<SrcReport> {
    if radii.len() < 2 {
        return Err(ShellwaveError::Parameter(
            "at least two radii are needed to fit a decay slope".into(),
        ));
    }
    let k = if lambda > 0.0 && lambda.is_finite() {
        lambda.sqrt()
    } else {
        return Err(ShellwaveError::Parameter(format!(
            "energy must be positive and finite, got {lambda}"
        )));
    };
    let step = (0.02f64).min(0.1 / k);
    for &r in radii {
        if !(r > far.source_radius + 4.0 * step) || !r.is_finite() {
            return Err(ShellwaveError::Parameter(format!(
                "radius {r} does not clear the charge support of radius {:.4}",
                far.source_radius
            )));
        }
    }
    let directions: Vec<[f64; 3]> = sphere_quadrature(far.d, 1.0, [0.0; 3], 8, 1.0)?.nodes;
    let ik = match sign {
        ResolventSign::Outgoing => Complex64::new(0.0, k),
        ResolventSign::Ingoing => Complex64::new(0.0, -k),
    };
    let mut max_combination = Vec::with_capacity(radii.len());
    for &radius in radii {
        let mut worst = 0.0f64;
        for dir in &directions {
            let x = [radius * dir[0], radius * dir[1], radius * dir[2]];
            let du = far.radial_derivative(x, step)?;
            let u = far.eval(x)?;
            worst = worst.max((du - ik * u).norm());
        }
        max_combination.push(worst);
    }
    let slope = if max_combination.iter().all(|&m| m < 1e-300) {
        None
    } else {
        let power = (far.d as f64 - 1.0) / 2.0;
        let xs: Vec<f64> = radii.iter().map(|r| r.ln()).collect();
        let ys: Vec<f64> = radii
            .iter()
            .zip(&max_combination)
            .map(|(r, m)| (m * r.powf(power)).ln())
            .collect();
        Some(fit_slope(&xs, &ys))
    };
    Ok(SrcReport {
        radii: radii.to_vec(),
        max_combination,
        slope,
        sign,
    })
}

// ---------------------------------------------------------------------
// Reciprocity and orthogonality
// ---------------------------------------------------------------------

/// Reciprocity defect of a square data matrix.
#[derive(Debug, Clone, Serialize)]
pub struct ReciprocityReport {
    /// `max |D - D^T| / max |D|`, with `0/0` read as zero.
    pub defect: f64,
    pub max_abs: f64,
}

/// Measures the symmetry defect of the data matrix; requires sources
/// and receivers to coincide.
pub fn reciprocity_check(data: &ScatteringData) -> Result<ReciprocityReport> {
    if data.matrix.len() != data.sources.len()
        || !same_points(&data.sources, &data.receivers)
    {
        return Err(ShellwaveError::Parameter(
            "reciprocity needs a square matrix over coinciding sources and receivers".into(),
        ));
    }
    let max_abs = data
        .matrix
        .iter()
        .flatten()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    Ok(ReciprocityReport {
        defect: defect_of(&data.matrix),
        max_abs,
    })
}

fn surface_distance(surface: &Hypersurface, x: [f64; 3]) -> f64 {
    match surface.kind {
        SurfaceKind::Sphere { r, center } => (dist3(x, center) - r).abs(),
        SurfaceKind::Polyhedral {
            center,
            half_widths,
        } => {
            let q = [
                (x[0] - center[0]).abs() - half_widths[0],
                (x[1] - center[1]).abs() - half_widths[1],
                (x[2] - center[2]).abs() - half_widths[2],
            ];
            let outside = norm3([q[0].max(0.0), q[1].max(0.0), q[2].max(0.0)]);
            let inside = q[0].max(q[1]).max(q[2]).min(0.0);
            (outside + inside).abs()
        }
    }
}

/// Interior Helmholtz defect of a candidate solution: the spectral
/// operator applied on the box, compared against `V u` over the support
/// ball, with a collar of three grid spacings excised around any shell
/// surface where the equation is distributional.
fn interior_residual(
    u: &ComplexField,
    v0: Option<&GridPotential>,
    shell: Option<&DeltaShell>,
    lambda: f64,
    r0: f64,
) -> Result<f64> {
    let grid = *u.grid();
    let mut uhat = fwd(u);
    for i in 0..grid.len() {
        let factor = lambda - grid.xi_norm2(i);
        uhat.data_mut()[i] *= factor;
    }
    let helm = inv(&uhat);
    let collar = 3.0 * grid.dx();
    let mut num = 0.0f64;
    let mut den = 0.0f64;
    for i in 0..grid.len() {
        let x = grid.point(i);
        if norm3(x) > r0 {
            continue;
        }
        if let Some(sh) = shell {
            if surface_distance(&sh.surface, x) < collar {
                continue;
            }
        }
        let vu = v0.map_or(Complex64::new(0.0, 0.0), |v| {
            v.field().data()[i].re * u.data()[i]
        });
        num += (helm.data()[i] - vu).norm_sqr();
        den += (lambda * u.data()[i]).norm_sqr();
    }
    if den == 0.0 {
        return Err(ShellwaveError::Parameter(
            "candidate solution vanishes on the support ball".into(),
        ));
    }
    Ok((num / den).sqrt())
}

fn grid_difference(
    v1: Option<&GridPotential>,
    v2: Option<&GridPotential>,
    grid: &Grid,
) -> Result<Vec<f64>> {
    for v in [v1, v2].into_iter().flatten() {
        if v.field().grid() != grid {
            return Err(ShellwaveError::Parameter(
                "potentials must share the solution grid".into(),
            ));
        }
    }
    let mut diff = vec![0.0; grid.len()];
    if let Some(v) = v1 {
        for (d, z) in diff.iter_mut().zip(v.field().data()) {
            *d += z.re;
        }
    }
    if let Some(v) = v2 {
        for (d, z) in diff.iter_mut().zip(v.field().data()) {
            *d -= z.re;
        }
    }
    Ok(diff)
}

/// The integral identity pairing `<(V1 - V2) v1, v2>` for two interior
/// solutions, with no conjugation.
///
/// Identical potentials short-circuit to exactly zero before any
/// residual measurement; otherwise both fields must satisfy their
/// respective equations on the support ball to within `1e-6`.
pub fn orthogonality_test(
    v1: (Option<&GridPotential>, Option<&DeltaShell>),
    v2: (Option<&GridPotential>, Option<&DeltaShell>),
    u1: &ComplexField,
    u2: &ComplexField,
    lambda: f64,
    r0: f64,
) -> Result<Complex64> {
    if u1.grid() != u2.grid() {
        return Err(ShellwaveError::Parameter(
            "solution fields live on different grids".into(),
        ));
    }
    let grid = *u1.grid();
    let diff = grid_difference(v1.0, v2.0, &grid)?;
    let shells_shared = match (v1.1, v2.1) {
        (None, None) => true,
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
    let shell_alpha_diff: Option<Vec<f64>> = if shells_shared {
        match (v1.1, v2.1) {
            (None, None) => None,
            (Some(a), Some(b)) => Some(
                a.alpha
                    .iter()
                    .zip(&b.alpha)
                    .map(|(x, y)| x - y)
                    .collect(),
            ),
            _ => unreachable!(),
        }
    } else {
        None
    };
    let grid_zero = diff.iter().all(|&d| d == 0.0);
    let shell_zero = match (&shell_alpha_diff, shells_shared) {
        (Some(da), true) => da.iter().all(|&a| a == 0.0),
        (None, true) => true,
        _ => false,
    };
    if grid_zero && shell_zero {
        return Ok(Complex64::new(0.0, 0.0));
    }

    for (label, u, pots) in [("first", u1, v1), ("second", u2, v2)] {
        let r = interior_residual(u, pots.0, pots.1, lambda, r0)?;
        if r > 1e-6 {
            return Err(ShellwaveError::Parameter(format!(
                "{label} field is not an interior solution: measured residual {r:.3e} \
                 exceeds 1e-6"
            )));
        }
    }

    let vol = grid.dx().powi(grid.dimension() as i32);
    let mut value = Complex64::new(0.0, 0.0);
    for i in 0..grid.len() {
        if diff[i] != 0.0 {
            value += diff[i] * u1.data()[i] * u2.data()[i] * vol;
        }
    }
    match (&shell_alpha_diff, shells_shared) {
        (Some(da), true) => {
            let sh = v1.1.unwrap();
            let t1 = trace_eval(u1, &sh.surface);
            let t2 = trace_eval(u2, &sh.surface);
            for ((w, a), (x, y)) in sh
                .surface
                .weights
                .iter()
                .zip(da)
                .zip(t1.iter().zip(&t2))
            {
                value += w * a * x * y;
            }
        }
        _ => {
            for (pots, orient) in [(v1.1, 1.0), (v2.1, -1.0)] {
                if let Some(sh) = pots {
                    let t1 = trace_eval(u1, &sh.surface);
                    let t2 = trace_eval(u2, &sh.surface);
                    for ((w, a), (x, y)) in sh
                        .surface
                        .weights
                        .iter()
                        .zip(&sh.alpha)
                        .zip(t1.iter().zip(&t2))
                    {
                        value += orient * w * a * x * y;
                    }
                }
            }
        }
    }
    Ok(value)
}
