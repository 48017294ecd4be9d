//! Conservative solver for the full two-dimensional exterior problem
//! `u_tt = div(A(x) grad u)` on an annulus, in polar coordinates.
//!
//! The stiffness form is assembled as a sum of nonnegative quadratic
//! contributions, so the semidiscrete operator `L = -M^{-1} K` is
//! symmetric (in the mass inner product) and negative semidefinite by
//! construction. Two assemblies are available and picked automatically:
//!
//! - an edge scheme when the coefficient field is diagonal in the polar
//!   frame (true for every radial-times-tangential construction), with
//!   midpoint-sampled edge conductances;
//! - a cell-centered scheme when mixed `dr x dtheta` terms are present,
//!   evaluating the full quadratic form on bilinear cell gradients.
//!
//! Time stepping, sampling, and diagnostics mirror the radial solver; bump
//! data is specified in the geodesic coordinate `rho = r^m` of the field
//! (plain `r` for fields without a cone power) so one description drives
//! both solvers.

use crate::metric::{CoefficientField, MetricError};
use crate::quad::clipped_trapezoid_uniform;
use crate::radial::{BumpSpec, DataKind, INSTABILITY_FACTOR, MAX_CFL};
use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PlanarError {
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("the planar solver handles dimension 2, the field has {n}")]
    NotPlanar { n: usize },
    #[error("grid starts at {r_min} but the obstacle has radius {r0}")]
    GridInsideObstacle { r_min: f64, r0: f64 },
    #[error("annulus [{r_min}, {r_max}] is empty or inverted")]
    InvalidExtent { r_min: f64, r_max: f64 },
    #[error("need at least {need} cells per direction, got {n_r} x {n_theta}")]
    TooFewCells {
        n_r: usize,
        n_theta: usize,
        need: usize,
    },
    #[error("time-step ratio must lie in (0, {MAX_CFL}], got {cfl}")]
    InvalidCfl { cfl: f64 },
    #[error("final time must be positive and finite, got {t_final}")]
    InvalidDuration { t_final: f64 },
    #[error("initial data is empty")]
    EmptyData,
    #[error("bump is malformed: {why}")]
    InvalidBump { why: String },
    #[error(
        "bump support [{support_lo}, {support_hi}] leaves the annulus \
         [{rho_min}, {rho_max}] (geodesic coordinate)"
    )]
    SupportOutsideDomain {
        support_lo: f64,
        support_hi: f64,
        rho_min: f64,
        rho_max: f64,
    },
    #[error(
        "outer geodesic radius {actual} too small: waves reach {required} \
         by the final time; enlarge the annulus"
    )]
    DomainTooSmall { required: f64, actual: f64 },
    #[error("sample stride must be positive")]
    InvalidSampleStride,
    #[error("energy grew from {initial} to {energy} by t = {t}: unstable run")]
    Instability { t: f64, energy: f64, initial: f64 },
    #[error("exponentially weighted energy overflowed at t = {t}")]
    NonFiniteWeight { t: f64 },
}

/// Uniform annular grid: nodes `(r_i, theta_j)` with `i = 0..=n_r`
/// (both rings Dirichlet) and `j = 0..n_theta` periodic.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PolarGrid {
    r_min: f64,
    r_max: f64,
    n_r: usize,
    n_theta: usize,
}

impl PolarGrid {
    pub fn new(r_min: f64, r_max: f64, n_r: usize, n_theta: usize) -> Result<Self, PlanarError> {
        if !(r_min.is_finite() && r_max.is_finite() && r_min > 0.0 && r_max > r_min) {
            return Err(PlanarError::InvalidExtent { r_min, r_max });
        }
        if n_r < 8 || n_theta < 8 {
            return Err(PlanarError::TooFewCells {
                n_r,
                n_theta,
                need: 8,
            });
        }
        Ok(Self {
            r_min,
            r_max,
            n_r,
            n_theta,
        })
    }

    pub fn r_min(&self) -> f64 {
        self.r_min
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn n_r(&self) -> usize {
        self.n_r
    }

    pub fn n_theta(&self) -> usize {
        self.n_theta
    }

    pub fn dr(&self) -> f64 {
        (self.r_max - self.r_min) / self.n_r as f64
    }

    pub fn dtheta(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.n_theta as f64
    }

    pub fn r(&self, i: usize) -> f64 {
        self.r_min + self.dr() * i as f64
    }

    pub fn theta(&self, j: usize) -> f64 {
        self.dtheta() * j as f64
    }

    pub fn n_nodes(&self) -> usize {
        (self.n_r + 1) * self.n_theta
    }

    pub fn idx(&self, i: usize, j: usize) -> usize {
        i * self.n_theta + j
    }
}

/// Separable initial bump `profile(rho) * cos(mode * theta)`, with the
/// radial profile living in the geodesic coordinate of the field.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Bump2D {
    pub center: f64,
    pub width: f64,
    pub amplitude: f64,
    pub angular_mode: usize,
    pub kind: DataKind,
}

impl Bump2D {
    fn profile(&self) -> BumpSpec {
        BumpSpec {
            center: self.center,
            width: self.width,
            amplitude: self.amplitude,
            kind: self.kind,
        }
    }

    pub fn support(&self) -> (f64, f64) {
        (self.center - self.width, self.center + self.width)
    }

    pub fn eval(&self, rho: f64, theta: f64) -> f64 {
        self.profile().eval(rho) * (self.angular_mode as f64 * theta).cos()
    }

    pub fn validate(&self) -> Result<(), PlanarError> {
        self.profile().validate().map_err(|e| PlanarError::InvalidBump {
            why: e.to_string(),
        })
    }
}

/// Which assembly the operator uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SchemeKind {
    /// Five-point star with midpoint edge conductances; requires the field
    /// to be diagonal in the polar frame.
    EdgeDiagonal,
    /// Bilinear cell gradients against the full frame matrix; handles
    /// mixed terms.
    CellCentered,
}

/// One snapshot of the planar field.
#[derive(Clone, Debug)]
pub struct PlanarState {
    pub t: f64,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

/// Assembled semidiscrete operator and the data needed for diagnostics.
pub struct PlanarOperator {
    grid: PolarGrid,
    scheme: SchemeKind,
    /// Radial edge conductance between rings `i` and `i+1`, `n_r * n_theta`.
    cr: Vec<f64>,
    /// Angular edge conductance between `j` and `j+1` on ring `i`,
    /// `(n_r+1) * n_theta` (boundary rows unused).
    ct: Vec<f64>,
    /// Frame coefficients at cell centers, `n_r * n_theta` each.
    cell_arr: Vec<f64>,
    cell_art: Vec<f64>,
    cell_att: Vec<f64>,
    /// Frame coefficients at nodes, `(n_r+1) * n_theta` each.
    node_arr: Vec<f64>,
    node_art: Vec<f64>,
    node_att: Vec<f64>,
    /// Lumped mass per ring: `r_i dr dtheta`.
    mass: Vec<f64>,
    dt_bound: f64,
    cone_power: Option<f64>,
}

fn frame_coefficients(
    field: &CoefficientField,
    r: f64,
    theta: f64,
) -> Result<(f64, f64, f64), MetricError> {
    let (c, s) = (theta.cos(), theta.sin());
    let x = DVector::from_vec(vec![r * c, r * s]);
    let a = field.evaluate(&x)?;
    let arr = c * (a[(0, 0)] * c + a[(0, 1)] * s) + s * (a[(1, 0)] * c + a[(1, 1)] * s);
    let art = -s * (a[(0, 0)] * c + a[(0, 1)] * s) + c * (a[(1, 0)] * c + a[(1, 1)] * s);
    let att = -s * (-a[(0, 0)] * s + a[(0, 1)] * c) + c * (-a[(1, 0)] * s + a[(1, 1)] * c);
    Ok((arr, art, att))
}

/// Relative size below which a mixed frame term counts as zero.
const DIAGONAL_TOL: f64 = 1e-12;

pub fn assemble_operator(
    field: &CoefficientField,
    grid: &PolarGrid,
) -> Result<PlanarOperator, PlanarError> {
    if field.dimension() != 2 {
        return Err(PlanarError::NotPlanar {
            n: field.dimension(),
        });
    }
    let r0 = field.obstacle_radius();
    if grid.r_min() < r0 * (1.0 - 1e-12) {
        return Err(PlanarError::GridInsideObstacle {
            r_min: grid.r_min(),
            r0,
        });
    }
    let (nr, nt) = (grid.n_r(), grid.n_theta());
    let (dr, dth) = (grid.dr(), grid.dtheta());

    let mut node_arr = vec![0.0; (nr + 1) * nt];
    let mut node_art = vec![0.0; (nr + 1) * nt];
    let mut node_att = vec![0.0; (nr + 1) * nt];
    for i in 0..=nr {
        for j in 0..nt {
            let (arr, art, att) = frame_coefficients(field, grid.r(i), grid.theta(j))?;
            let k = grid.idx(i, j);
            node_arr[k] = arr;
            node_art[k] = art;
            node_att[k] = att;
        }
    }

    let mut cell_arr = vec![0.0; nr * nt];
    let mut cell_art = vec![0.0; nr * nt];
    let mut cell_att = vec![0.0; nr * nt];
    let mut dt_bound = f64::INFINITY;
    for a in 0..nr {
        let rc = grid.r_min() + (a as f64 + 0.5) * dr;
        for b in 0..nt {
            let tc = (b as f64 + 0.5) * dth;
            let (arr, art, att) = frame_coefficients(field, rc, tc)?;
            let k = a * nt + b;
            cell_arr[k] = arr;
            cell_art[k] = art;
            cell_att[k] = att;
            // Largest eigenvalue of the frame matrix scaled to physical
            // lengths: [[arr, art/rc], [art/rc, att/rc^2]].
            let p = art / rc;
            let q = att / (rc * rc);
            let half = 0.5 * (arr + q);
            let disc = (0.5 * (arr - q)).hypot(p);
            let lam = half + disc;
            let cap = 1.0 / (lam * (1.0 / (dr * dr) + 1.0 / (rc * dth * rc * dth))).sqrt();
            dt_bound = dt_bound.min(cap);
        }
    }

    let mut max_mixed = 0.0_f64;
    for k in 0..nr * nt {
        let scale = cell_arr[k].abs() + cell_att[k].abs();
        if scale > 0.0 {
            max_mixed = max_mixed.max(cell_art[k].abs() / scale);
        }
    }
    for k in 0..(nr + 1) * nt {
        let scale = node_arr[k].abs() + node_att[k].abs();
        if scale > 0.0 {
            max_mixed = max_mixed.max(node_art[k].abs() / scale);
        }
    }
    let scheme = if max_mixed <= DIAGONAL_TOL {
        SchemeKind::EdgeDiagonal
    } else {
        SchemeKind::CellCentered
    };

    let mut cr = vec![0.0; nr * nt];
    let mut ct = vec![0.0; (nr + 1) * nt];
    if scheme == SchemeKind::EdgeDiagonal {
        for i in 0..nr {
            let rm = grid.r_min() + (i as f64 + 0.5) * dr;
            for j in 0..nt {
                let (arr, _, _) = frame_coefficients(field, rm, grid.theta(j))?;
                cr[i * nt + j] = arr * rm * dth / dr;
            }
        }
        for i in 1..nr {
            let ri = grid.r(i);
            for j in 0..nt {
                let tm = (j as f64 + 0.5) * dth;
                let (_, _, att) = frame_coefficients(field, ri, tm)?;
                ct[i * nt + j] = att * dr / (ri * dth);
            }
        }
    } else {
        // The cell scheme is marginally softer on the highest modes, but
        // keep the same conservative bound with extra margin.
        dt_bound *= 0.8;
    }

    let mass: Vec<f64> = (0..=nr).map(|i| grid.r(i) * dr * dth).collect();

    Ok(PlanarOperator {
        grid: grid.clone(),
        scheme,
        cr,
        ct,
        cell_arr,
        cell_art,
        cell_att,
        node_arr,
        node_art,
        node_att,
        mass,
        dt_bound,
        cone_power: field.cone_power(),
    })
}

impl PlanarOperator {
    pub fn grid(&self) -> &PolarGrid {
        &self.grid
    }

    pub fn scheme(&self) -> SchemeKind {
        self.scheme
    }

    /// Largest stable time step at ratio 1; runs scale it by their `cfl`.
    pub fn dt_bound(&self) -> f64 {
        self.dt_bound
    }

    pub fn mass(&self, i: usize) -> f64 {
        self.mass[i]
    }

    /// `out = L u = -M^{-1} K u`; Dirichlet rows are zero.
    pub fn apply(&self, u: &[f64], out: &mut [f64]) {
        assert_eq!(u.len(), self.grid.n_nodes());
        assert_eq!(out.len(), self.grid.n_nodes());
        match self.scheme {
            SchemeKind::EdgeDiagonal => self.apply_edge(u, out),
            SchemeKind::CellCentered => self.apply_cell(u, out),
        }
    }

    fn apply_edge(&self, u: &[f64], out: &mut [f64]) {
        let nt = self.grid.n_theta();
        let nr = self.grid.n_r();
        out.par_chunks_mut(nt).enumerate().for_each(|(i, row)| {
            if i == 0 || i == nr {
                row.fill(0.0);
                return;
            }
            let inv_m = 1.0 / self.mass[i];
            let base = i * nt;
            for (j, slot) in row.iter_mut().enumerate() {
                let jm = (j + nt - 1) % nt;
                let jp = (j + 1) % nt;
                let uc = u[base + j];
                let flux = self.cr[(i - 1) * nt + j] * (u[base - nt + j] - uc)
                    + self.cr[base + j] * (u[base + nt + j] - uc)
                    + self.ct[base + jm] * (u[base + jm] - uc)
                    + self.ct[base + j] * (u[base + jp] - uc);
                *slot = flux * inv_m;
            }
        });
    }

    fn apply_cell(&self, u: &[f64], out: &mut [f64]) {
        let nt = self.grid.n_theta();
        let nr = self.grid.n_r();
        let dr = self.grid.dr();
        let dth = self.grid.dtheta();
        let mut fr = vec![0.0; nr * nt];
        let mut gt = vec![0.0; nr * nt];
        fr.par_chunks_mut(nt)
            .zip(gt.par_chunks_mut(nt))
            .enumerate()
            .for_each(|(a, (fr_row, gt_row))| {
                let rc = self.grid.r_min() + (a as f64 + 0.5) * dr;
                let wc = rc * dr * dth;
                let base = a * nt;
                for b in 0..nt {
                    let bp = (b + 1) % nt;
                    let u00 = u[base + b];
                    let u10 = u[base + nt + b];
                    let u01 = u[base + bp];
                    let u11 = u[base + nt + bp];
                    let ur = (u10 - u00 + u11 - u01) / (2.0 * dr);
                    let ut = (u01 - u00 + u11 - u10) / (2.0 * dth);
                    let k = base + b;
                    fr_row[b] = wc * (self.cell_arr[k] * ur + self.cell_art[k] / rc * ut);
                    gt_row[b] = wc
                        * (self.cell_art[k] / rc * ur
                            + self.cell_att[k] / (rc * rc) * ut);
                }
            });
        out.par_chunks_mut(nt).enumerate().for_each(|(i, row)| {
            if i == 0 || i == nr {
                row.fill(0.0);
                return;
            }
            let inv_m = 1.0 / self.mass[i];
            for (j, slot) in row.iter_mut().enumerate() {
                let jm = (j + nt - 1) % nt;
                let lo = (i - 1) * nt;
                let hi = i * nt;
                let ku = (fr[lo + jm] + fr[lo + j] - fr[hi + jm] - fr[hi + j]) / (2.0 * dr)
                    + (gt[lo + jm] + gt[hi + jm] - gt[lo + j] - gt[hi + j]) / (2.0 * dth);
                *slot = -ku * inv_m;
            }
        });
    }

    /// `u^T K u` for vectors vanishing on the Dirichlet rings.
    pub fn stiffness_form(&self, u: &[f64]) -> f64 {
        let mut lu = vec![0.0; u.len()];
        self.apply(u, &mut lu);
        let nt = self.grid.n_theta();
        let mut acc = 0.0;
        for (k, (ui, lui)) in u.iter().zip(&lu).enumerate() {
            acc -= self.mass[k / nt] * ui * lui;
        }
        acc
    }

    /// Mass-weighted inner product `<a, M b>`.
    pub fn mass_product(&self, a: &[f64], b: &[f64]) -> f64 {
        let nt = self.grid.n_theta();
        a.iter()
            .zip(b)
            .enumerate()
            .map(|(k, (x, y))| self.mass[k / nt] * x * y)
            .sum()
    }
}

/// Energy in the form the time stepper conserves:
/// `(v^T M v + u^T K u) / 2`.
pub fn quadratic_energy(op: &PlanarOperator, state: &PlanarState) -> f64 {
    0.5 * (op.mass_product(&state.v, &state.v) + op.stiffness_form(&state.u))
}

/// Pointwise `v^2 + <A grad u, grad u>` from nodal differences: centered
/// inside, one-sided second order on the rings, periodic in angle.
pub fn nodal_energy_density(op: &PlanarOperator, state: &PlanarState) -> Vec<f64> {
    let grid = op.grid();
    let (nr, nt) = (grid.n_r(), grid.n_theta());
    let (dr, dth) = (grid.dr(), grid.dtheta());
    let u = &state.u;
    let mut dens = vec![0.0; grid.n_nodes()];
    dens.par_chunks_mut(nt).enumerate().for_each(|(i, row)| {
        let r = grid.r(i);
        let base = i * nt;
        for (j, slot) in row.iter_mut().enumerate() {
            let jm = (j + nt - 1) % nt;
            let jp = (j + 1) % nt;
            let ur = if i == 0 {
                (-3.0 * u[j] + 4.0 * u[nt + j] - u[2 * nt + j]) / (2.0 * dr)
            } else if i == nr {
                (3.0 * u[base + j] - 4.0 * u[base - nt + j] + u[base - 2 * nt + j]) / (2.0 * dr)
            } else {
                (u[base + nt + j] - u[base - nt + j]) / (2.0 * dr)
            };
            let ut = (u[base + jp] - u[base + jm]) / (2.0 * dth) / r;
            let k = base + j;
            let v = state.v[k];
            *slot = v * v
                + op.node_arr[k] * ur * ur
                + 2.0 * op.node_art[k] * ur * ut
                + op.node_att[k] * ut * ut;
        }
    });
    dens
}

fn radial_energy_profile(op: &PlanarOperator, dens: &[f64]) -> Vec<f64> {
    let grid = op.grid();
    let nt = grid.n_theta();
    (0..=grid.n_r())
        .map(|i| {
            let row: f64 = dens[i * nt..(i + 1) * nt].iter().sum();
            grid.r(i) * row * grid.dtheta()
        })
        .collect()
}

/// Nodal energy inside the Euclidean disc of radius `a`.
pub fn local_energy(op: &PlanarOperator, state: &PlanarState, a: f64) -> f64 {
    let profile = radial_energy_profile(op, &nodal_energy_density(op, state));
    let grid = op.grid();
    0.5 * clipped_trapezoid_uniform(&profile, grid.r_min(), grid.dr(), grid.r_min(), a)
}

/// Nodal energy over the whole annulus.
pub fn total_nodal_energy(op: &PlanarOperator, state: &PlanarState) -> f64 {
    local_energy(op, state, op.grid().r_max())
}

fn exp_weighted_from_profile(
    op: &PlanarOperator,
    profile: &[f64],
    t: f64,
) -> Result<f64, PlanarError> {
    let grid = op.grid();
    let mut acc = 0.0;
    for (i, &row) in profile.iter().enumerate() {
        if row <= 0.0 {
            continue;
        }
        let r = grid.r(i);
        let rho = match op.cone_power {
            Some(m) => r.powf(m),
            None => r,
        };
        let trapezoid_weight = if i == 0 || i == grid.n_r() { 0.5 } else { 1.0 };
        let term = (rho - t + (trapezoid_weight * row * grid.dr()).ln()).exp();
        acc += 0.5 * term;
        if !acc.is_finite() {
            return Err(PlanarError::NonFiniteWeight { t });
        }
    }
    Ok(acc)
}

/// Exponentially weighted energy `(1/2) int e^{rho(r) - t} (nodal density)`,
/// the planar counterpart of the radial diagnostic. Ring terms are assembled
/// in log space so a large geodesic radius cannot overflow against a
/// vanishing density.
pub fn exp_weighted_energy(
    op: &PlanarOperator,
    state: &PlanarState,
) -> Result<f64, PlanarError> {
    let profile = radial_energy_profile(op, &nodal_energy_density(op, state));
    exp_weighted_from_profile(op, &profile, state.t)
}

/// Nodal energy at or beyond geodesic coordinate `rho_front`.
pub fn support_mass_outside(op: &PlanarOperator, state: &PlanarState, rho_front: f64) -> f64 {
    let grid = op.grid();
    let r_front = match op.cone_power {
        Some(m) => rho_front.max(0.0).powf(1.0 / m),
        None => rho_front,
    };
    let profile = radial_energy_profile(op, &nodal_energy_density(op, state));
    0.5 * clipped_trapezoid_uniform(&profile, grid.r_min(), grid.dr(), r_front, grid.r_max())
}

/// A completed planar run: energy diagnostics per sample, plus the first
/// and final fields (full state histories would not fit in memory at
/// production resolutions).
pub struct PlanarRun {
    pub grid: PolarGrid,
    pub dt: f64,
    pub n_steps: usize,
    pub sample_stride: usize,
    /// Outer edge of the initial support, geodesic coordinate.
    pub support_outer: f64,
    pub observation_radii: Vec<f64>,
    pub times: Vec<f64>,
    /// Quadratic-form total energy per sample.
    pub total_energies: Vec<f64>,
    /// One series per observation radius, nodal density.
    pub local_energies: Vec<Vec<f64>>,
    /// Nodal energy beyond the causal front `support_outer + t`.
    pub outside_front: Vec<f64>,
    /// Exponentially weighted energy per sample.
    pub w_exp: Vec<f64>,
    pub first_state: PlanarState,
    pub final_state: PlanarState,
}

impl PlanarRun {
    /// `(times, values)` for the observation radius at `index`.
    pub fn local_series(&self, index: usize) -> (Vec<f64>, Vec<f64>) {
        (self.times.clone(), self.local_energies[index].clone())
    }
}

struct PlanarStepper<'o> {
    op: &'o PlanarOperator,
    dt: f64,
    prev: Vec<f64>,
    curr: Vec<f64>,
    lap: Vec<f64>,
    steps_taken: usize,
}

impl<'o> PlanarStepper<'o> {
    fn new(op: &'o PlanarOperator, u0: Vec<f64>, v0: &[f64], dt: f64) -> Self {
        let n = u0.len();
        let mut lap = vec![0.0; n];
        op.apply(&u0, &mut lap);
        let mut prev = vec![0.0; n];
        for i in 0..n {
            prev[i] = u0[i] - dt * v0[i] + 0.5 * dt * dt * lap[i];
        }
        Self {
            op,
            dt,
            prev,
            curr: u0,
            lap,
            steps_taken: 0,
        }
    }

    fn step(&mut self) {
        self.op.apply(&self.curr, &mut self.lap);
        let dt2 = self.dt * self.dt;
        let nt = self.op.grid().n_theta();
        let nr = self.op.grid().n_r();
        for i in 1..nr {
            for j in 0..nt {
                let k = i * nt + j;
                self.prev[k] = 2.0 * self.curr[k] - self.prev[k] + dt2 * self.lap[k];
            }
        }
        for j in 0..nt {
            self.prev[j] = 0.0;
            self.prev[nr * nt + j] = 0.0;
        }
        std::mem::swap(&mut self.prev, &mut self.curr);
        self.steps_taken += 1;
    }

    fn state(&mut self) -> PlanarState {
        self.op.apply(&self.curr, &mut self.lap);
        let dt2 = self.dt * self.dt;
        let n = self.curr.len();
        let mut v = vec![0.0; n];
        let nt = self.op.grid().n_theta();
        let nr = self.op.grid().n_r();
        for i in 1..nr {
            for j in 0..nt {
                let k = i * nt + j;
                let next = 2.0 * self.curr[k] - self.prev[k] + dt2 * self.lap[k];
                v[k] = (next - self.prev[k]) / (2.0 * self.dt);
            }
        }
        PlanarState {
            t: self.steps_taken as f64 * self.dt,
            u: self.curr.clone(),
            v,
        }
    }
}

/// Map a Euclidean radius to the geodesic coordinate of the field.
fn rho_of(field: &CoefficientField, r: f64) -> f64 {
    match field.cone_power() {
        Some(m) => r.powf(m),
        None => r,
    }
}

/// Run the planar problem to `t_final`, recording energy diagnostics every
/// `sample_stride`-th step (plus the final step) at the given observation
/// radii.
pub fn solve_planar(
    field: &CoefficientField,
    grid: &PolarGrid,
    data: &[Bump2D],
    t_final: f64,
    cfl: f64,
    sample_stride: usize,
    observation_radii: &[f64],
) -> Result<PlanarRun, PlanarError> {
    if !(cfl > 0.0 && cfl <= MAX_CFL) {
        return Err(PlanarError::InvalidCfl { cfl });
    }
    if !(t_final.is_finite() && t_final > 0.0) {
        return Err(PlanarError::InvalidDuration { t_final });
    }
    if sample_stride == 0 {
        return Err(PlanarError::InvalidSampleStride);
    }
    if data.is_empty() {
        return Err(PlanarError::EmptyData);
    }
    let op = assemble_operator(field, grid)?;
    let rho_min = rho_of(field, grid.r_min());
    let rho_max = rho_of(field, grid.r_max());
    for bump in data {
        bump.validate()?;
        let (lo, hi) = bump.support();
        if lo <= rho_min || hi >= rho_max {
            return Err(PlanarError::SupportOutsideDomain {
                support_lo: lo,
                support_hi: hi,
                rho_min,
                rho_max,
            });
        }
    }
    let support_outer = data
        .iter()
        .map(|b| b.support().1)
        .fold(f64::NEG_INFINITY, f64::max);
    if let Some(m) = field.cone_power() {
        // Unit causal speed in the geodesic coordinate; ten outer cells of
        // slack keep the outer ring dark.
        let margin = 10.0 * grid.dr() * m * grid.r_max().powf(m - 1.0);
        let required = support_outer + t_final + margin;
        if rho_max < required {
            return Err(PlanarError::DomainTooSmall {
                required,
                actual: rho_max,
            });
        }
    }

    let (nr, nt) = (grid.n_r(), grid.n_theta());
    let mut u0 = vec![0.0; grid.n_nodes()];
    let mut v0 = vec![0.0; grid.n_nodes()];
    for i in 1..nr {
        let rho = rho_of(field, grid.r(i));
        for j in 0..nt {
            let theta = grid.theta(j);
            for bump in data {
                let target = match bump.kind {
                    DataKind::Displacement => &mut u0,
                    DataKind::Velocity => &mut v0,
                };
                target[i * nt + j] += bump.eval(rho, theta);
            }
        }
    }

    let n_steps = ((t_final / (cfl * op.dt_bound())).ceil() as usize).max(1);
    let dt = t_final / n_steps as f64;
    let mut stepper = PlanarStepper::new(&op, u0, &v0, dt);

    #[derive(Default)]
    struct Diagnostics {
        times: Vec<f64>,
        total: Vec<f64>,
        local: Vec<Vec<f64>>,
        outside: Vec<f64>,
        w_exp: Vec<f64>,
    }
    let mut diag = Diagnostics {
        local: vec![Vec::new(); observation_radii.len()],
        ..Default::default()
    };

    let first_state = stepper.state();
    let e0 = quadratic_energy(&op, &first_state);
    let record = |s: &PlanarState, diag: &mut Diagnostics| -> Result<(), PlanarError> {
        let e = quadratic_energy(&op, s);
        if e > INSTABILITY_FACTOR * e0 && e > f64::MIN_POSITIVE {
            return Err(PlanarError::Instability {
                t: s.t,
                energy: e,
                initial: e0,
            });
        }
        diag.times.push(s.t);
        diag.total.push(e);
        let dens = nodal_energy_density(&op, s);
        let profile = radial_energy_profile(&op, &dens);
        for (series, a) in diag.local.iter_mut().zip(observation_radii) {
            series.push(
                0.5 * clipped_trapezoid_uniform(
                    &profile,
                    grid.r_min(),
                    grid.dr(),
                    grid.r_min(),
                    *a,
                ),
            );
        }
        let r_front = match field.cone_power() {
            Some(m) => (support_outer + s.t).max(0.0).powf(1.0 / m),
            None => support_outer + s.t,
        };
        diag.outside.push(
            0.5 * clipped_trapezoid_uniform(
                &profile,
                grid.r_min(),
                grid.dr(),
                r_front,
                grid.r_max(),
            ),
        );
        diag.w_exp.push(exp_weighted_from_profile(&op, &profile, s.t)?);
        Ok(())
    };
    record(&first_state, &mut diag)?;

    let mut final_state = None;
    for k in 1..=n_steps {
        stepper.step();
        if k % sample_stride == 0 || k == n_steps {
            let s = stepper.state();
            record(&s, &mut diag)?;
            if k == n_steps {
                final_state = Some(s);
            }
        }
    }

    Ok(PlanarRun {
        grid: grid.clone(),
        dt,
        n_steps,
        sample_stride,
        support_outer,
        observation_radii: observation_radii.to_vec(),
        times: diag.times,
        total_energies: diag.total,
        local_energies: diag.local,
        outside_front: diag.outside,
        w_exp: diag.w_exp,
        first_state,
        final_state: final_state.expect("at least one step"),
    })
}
