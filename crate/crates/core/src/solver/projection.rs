//! Discrete projection onto divergence-free meridional fields.
//!
//! The constrained set is the axis plus the interior nodes. The pressure
//! gradient `G` is the negative adjoint of the discrete divergence `D` in the
//! cylindrical inner product (weight `r_i`, `dr/4` on the axis), which makes
//! `G` the plain centred gradient in the bulk and turns the projection into an
//! orthogonal one. Consequences:
//!
//! * after `u - dt G p` with `D G p = D u / dt` the divergence on the
//!   constrained nodes equals the Poisson residual;
//! * the wide operator `D G` couples nodes two apart, so it splits into parity
//!   chains and has a small null space (chain constants). Right-hand sides of
//!   the form `D u` are automatically orthogonal to it;
//! * the pressure ghost beyond the prescribed velocity boundary is zero.
//!
//! `D G = A_r (x) I + I (x) A_z` is separable, and both factors are similar to
//! symmetric matrices, so the default solve diagonalises them once and applies
//! the inverse with four dense products. A red-black SOR relaxation on the same
//! operator is kept as an independent route.

use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{divergence, AxisymField, FieldRole, ScalarField};
use crate::grid::Grid;

/// Relative size under which a separated eigenvalue sum counts as zero.
const NULL_EIGEN_TOL: f64 = 1e-10;

/// Refinement passes the spectral solve may use to reach the tolerance.
const MAX_REFINEMENTS: usize = 3;

/// Sweep cap for the relaxation route.
pub const MAX_SWEEPS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoissonMethod {
    #[default]
    Spectral,
    RedBlack,
}

#[derive(Debug, Clone)]
struct NullMode {
    /// Weighted pseudo-inverse row used to read off the coefficient.
    fwd: Array2<f64>,
    /// Physical-space mode.
    mode: Array2<f64>,
}

/// Precomputed factorisation of the projection operator for one grid.
#[derive(Debug, Clone)]
pub struct ProjectionSolver {
    grid: Grid,
    /// Axial unknown indices (`grid.z_interior()` as a vector).
    zs: Vec<usize>,
    /// `U^T W^{1/2}` for the radial factor.
    fwd_r: Array2<f64>,
    /// `W^{-1/2} U`.
    inv_r: Array2<f64>,
    /// Orthogonal eigenvectors of the axial factor (columns) and transpose.
    uz: Array2<f64>,
    uz_t: Array2<f64>,
    inv_eig: Array2<f64>,
    null_modes: Vec<NullMode>,
    a_r: Array2<f64>,
    a_z: Array2<f64>,
    /// Nonzeros of `a_r` and `a_z` by row.
    rows_r: Vec<Vec<(usize, f64)>>,
    rows_z: Vec<Vec<(usize, f64)>>,
}

fn nonzero_rows(a: &Array2<f64>) -> Vec<Vec<(usize, f64)>> {
    a.outer_iter()
        .map(|row| row.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(k, v)| (k, *v)).collect())
        .collect()
}

fn radial_weights(g: &Grid) -> Vec<f64> {
    (0..g.nr)
        .map(|i| if i == 0 { g.dr / 4.0 } else { g.r(i) })
        .collect()
}

/// `G_r p` on `i = 1..nr-1` (index `i`, entry 0 unused) with `p[nr] = 0`.
fn grad_r_1d(p: &[f64], g: &Grid) -> Vec<f64> {
    let n = g.nr;
    let mut out = vec![0.0; n];
    for k in 1..n {
        let pp = if k + 1 < n { p[k + 1] } else { 0.0 };
        out[k] = (pp - p[k - 1]) / (2.0 * g.dr);
    }
    out
}

/// Radial divergence on `i = 0..nr-1` of a profile with `u[0] = u[nr] = 0`.
fn div_r_1d(u: &[f64], g: &Grid) -> Vec<f64> {
    let n = g.nr;
    let mut out = vec![0.0; n];
    out[0] = 2.0 * u[1] / g.dr;
    for i in 1..n {
        let up = if i + 1 < n { u[i + 1] } else { 0.0 };
        let um = if i >= 2 { u[i - 1] } else { 0.0 };
        out[i] = (g.r(i + 1) * up - g.r(i - 1) * um) / (2.0 * g.dr * g.r(i));
    }
    out
}

/// Centred difference along the axial unknowns with zero (wall) or wrapped ends.
fn centred_z_1d(v: &[f64], g: &Grid) -> Vec<f64> {
    let m = v.len();
    let periodic = g.is_periodic();
    (0..m)
        .map(|k| {
            let (lo, hi) = if periodic {
                (v[(k + m - 1) % m], v[(k + 1) % m])
            } else {
                (
                    if k > 0 { v[k - 1] } else { 0.0 },
                    if k + 1 < m { v[k + 1] } else { 0.0 },
                )
            };
            (hi - lo) / (2.0 * g.dz)
        })
        .collect()
}

fn column_matrix(n: usize, apply: impl Fn(&[f64]) -> Vec<f64>) -> Array2<f64> {
    let mut a = Array2::zeros((n, n));
    let mut e = vec![0.0; n];
    for k in 0..n {
        e[k] = 1.0;
        let col = apply(&e);
        for i in 0..n {
            a[[i, k]] = col[i];
        }
        e[k] = 0.0;
    }
    a
}

fn symmetric_eigen(m: &Array2<f64>) -> (Vec<f64>, Array2<f64>) {
    let n = m.nrows();
    let sym = DMatrix::from_fn(n, n, |i, k| 0.5 * (m[[i, k]] + m[[k, i]]));
    let eig = SymmetricEigen::new(sym);
    let vecs = Array2::from_shape_fn((n, n), |(i, k)| eig.eigenvectors[(i, k)]);
    (eig.eigenvalues.iter().copied().collect(), vecs)
}

impl ProjectionSolver {
    pub fn new(grid: Grid) -> Self {
        let g = grid;
        let n = g.nr;
        let zs: Vec<usize> = g.z_interior().collect();
        let m = zs.len();

        let a_r = column_matrix(n, |p| div_r_1d(&grad_r_1d(p, &g), &g));
        let a_z = column_matrix(m, |p| centred_z_1d(&centred_z_1d(p, &g), &g));

        let w: Vec<f64> = radial_weights(&g);
        let sw: Vec<f64> = w.iter().map(|x| x.sqrt()).collect();
        let m_r = Array2::from_shape_fn((n, n), |(i, k)| sw[i] * a_r[[i, k]] / sw[k]);
        let (mu, u) = symmetric_eigen(&m_r);
        let (lam, uz) = symmetric_eigen(&a_z);

        let fwd_r = Array2::from_shape_fn((n, n), |(a, i)| u[[i, a]] * sw[i]);
        let inv_r = Array2::from_shape_fn((n, n), |(i, a)| u[[i, a]] / sw[i]);
        let scale = mu.iter().chain(lam.iter()).fold(0.0_f64, |s, v| s.max(v.abs()));
        let mut inv_eig = Array2::zeros((n, m));
        let mut null_modes = Vec::new();
        for a in 0..n {
            for b in 0..m {
                let d = mu[a] + lam[b];
                if d.abs() > NULL_EIGEN_TOL * scale {
                    inv_eig[[a, b]] = 1.0 / d;
                } else {
                    let fwd = Array2::from_shape_fn((n, m), |(i, j)| fwd_r[[a, i]] * uz[[j, b]]);
                    let mode = Array2::from_shape_fn((n, m), |(i, j)| inv_r[[i, a]] * uz[[j, b]]);
                    null_modes.push(NullMode { fwd, mode });
                }
            }
        }
        let uz_t = uz.t().to_owned();
        let rows_r = nonzero_rows(&a_r);
        let rows_z = nonzero_rows(&a_z);
        ProjectionSolver {
            grid,
            zs,
            fwd_r,
            inv_r,
            uz,
            uz_t,
            inv_eig,
            null_modes,
            a_r,
            a_z,
            rows_r,
            rows_z,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Dimension of the operator's null space.
    pub fn null_dimension(&self) -> usize {
        self.null_modes.len()
    }

    /// Restriction of a node array to the unknowns `(0..nr) x z_interior`.
    pub(crate) fn gather(&self, f: &Array2<f64>) -> Array2<f64> {
        let mut out = Array2::zeros((self.grid.nr, self.zs.len()));
        for i in 0..self.grid.nr {
            for (b, &j) in self.zs.iter().enumerate() {
                out[[i, b]] = f[[i, j]];
            }
        }
        out
    }

    pub(crate) fn scatter(&self, p: &Array2<f64>) -> ScalarField {
        let g = self.grid;
        let mut out = ScalarField::zeros(g, FieldRole::Pressure);
        for i in 0..g.nr {
            for (b, &j) in self.zs.iter().enumerate() {
                out.values[[i, j]] = p[[i, b]];
            }
        }
        if g.is_periodic() {
            for i in 0..=g.nr {
                out.values[[i, g.nz]] = out.values[[i, 0]];
            }
        }
        out
    }

    /// Applies `D G` via its separated factors.
    pub fn apply(&self, p: &Array2<f64>) -> Array2<f64> {
        let (n, m) = p.dim();
        Array2::from_shape_fn((n, m), |(i, b)| {
            let radial: f64 = self.rows_r[i].iter().map(|&(k, a)| a * p[[k, b]]).sum();
            let axial: f64 = self.rows_z[b].iter().map(|&(l, a)| a * p[[i, l]]).sum();
            radial + axial
        })
    }

    /// Removes the components of `f` along the null space (the discrete
    /// compatibility condition, generalising a zero weighted mean).
    pub fn compatible(&self, f: &Array2<f64>) -> Array2<f64> {
        let mut out = f.clone();
        for nm in &self.null_modes {
            let c = (&nm.fwd * f).sum();
            out.scaled_add(-c, &nm.mode);
        }
        out
    }

    fn spectral(&self, f: &Array2<f64>) -> Array2<f64> {
        let coeff = self.fwd_r.dot(f).dot(&self.uz) * &self.inv_eig;
        self.inv_r.dot(&coeff).dot(&self.uz_t)
    }

    fn relative_residual(&self, p: &Array2<f64>, f: &Array2<f64>, fnorm: f64) -> f64 {
        sup(&(f - &self.apply(p))) / fnorm
    }

    /// Solves `D G p = f` on the unknowns, returning `p` and the achieved
    /// relative residual against the compatible part of `f`.
    pub fn solve_unknowns(
        &self,
        f: &Array2<f64>,
        tol: f64,
        method: PoissonMethod,
    ) -> Result<(Array2<f64>, f64)> {
        let fc = self.compatible(f);
        let fnorm = sup(&fc);
        if fnorm == 0.0 {
            return Ok((Array2::zeros(f.raw_dim()), 0.0));
        }
        match method {
            PoissonMethod::Spectral => {
                let mut p = self.spectral(&fc);
                let mut r = &fc - &self.apply(&p);
                let mut res = sup(&r) / fnorm;
                let mut passes = 0;
                while res > tol && passes < MAX_REFINEMENTS {
                    p += &self.spectral(&r);
                    r = &fc - &self.apply(&p);
                    res = sup(&r) / fnorm;
                    passes += 1;
                }
                if res > tol {
                    return Err(Error::PoissonNotConverged {
                        residual: res,
                        tol,
                        iterations: passes + 1,
                    });
                }
                Ok((p, res))
            }
            PoissonMethod::RedBlack => self.red_black(&fc, fnorm, tol),
        }
    }

    fn red_black(&self, f: &Array2<f64>, fnorm: f64, tol: f64) -> Result<(Array2<f64>, f64)> {
        let (n, m) = f.dim();
        let off = |rows: &[Vec<(usize, f64)>]| -> Vec<Vec<(usize, f64)>> {
            rows.iter()
                .enumerate()
                .map(|(i, row)| row.iter().copied().filter(|&(k, _)| k != i).collect())
                .collect()
        };
        let rows_r = off(&self.rows_r);
        let rows_z = off(&self.rows_z);
        // nodes coupled by the wide stencil are two apart, so this colouring
        // separates every pair of neighbours
        let color = |i: usize, b: usize| (i / 2 + b / 2) % 2;
        let chains = (n.max(m) / 2).max(2) as f64;
        let omega = 2.0 / (1.0 + (std::f64::consts::PI / chains).sin());
        let mut p = Array2::zeros((n, m));
        let mut res = f64::INFINITY;
        for sweep in 1..=MAX_SWEEPS {
            for c in 0..2 {
                for i in 0..n {
                    for b in 0..m {
                        if color(i, b) != c {
                            continue;
                        }
                        let mut acc = f[[i, b]];
                        for &(k, a) in &rows_r[i] {
                            acc -= a * p[[k, b]];
                        }
                        for &(l, a) in &rows_z[b] {
                            acc -= a * p[[i, l]];
                        }
                        let diag = self.a_r[[i, i]] + self.a_z[[b, b]];
                        let gs = acc / diag;
                        p[[i, b]] += omega * (gs - p[[i, b]]);
                    }
                }
            }
            if sweep % 10 == 0 {
                res = self.relative_residual(&p, f, fnorm);
                if res <= tol {
                    return Ok((self.compatible_solution(p), res));
                }
            }
        }
        Err(Error::PoissonNotConverged {
            residual: res,
            tol,
            iterations: MAX_SWEEPS,
        })
    }

    /// Strips null-space drift so both routes return the minimum-norm solution.
    fn compatible_solution(&self, p: Array2<f64>) -> Array2<f64> {
        // null modes are orthonormal in the weighted product, which is exactly
        // what `compatible` projects against
        self.compatible(&p)
    }

    /// Solves the projection Poisson problem for a node-array right-hand side.
    pub fn pressure_poisson_solve(
        &self,
        rhs: &ScalarField,
        tol: f64,
        method: PoissonMethod,
    ) -> Result<ScalarField> {
        let f = self.gather(&rhs.values);
        let (p, _) = self.solve_unknowns(&f, tol, method)?;
        Ok(self.scatter(&p))
    }

    /// Subtracts `scale * G p` from the constrained velocity nodes.
    pub(crate) fn subtract_gradient(&self, field: &mut AxisymField, p: &Array2<f64>, scale: f64) {
        let g = self.grid;
        let n = g.nr;
        let m = self.zs.len();
        let periodic = g.is_periodic();
        for b in 0..m {
            let j = self.zs[b];
            for k in 1..n {
                let pp = if k + 1 < n { p[[k + 1, b]] } else { 0.0 };
                field.vr[[k, j]] -= scale * (pp - p[[k - 1, b]]) / (2.0 * g.dr);
            }
            let (bm, bp) = if periodic {
                (Some((b + m - 1) % m), Some((b + 1) % m))
            } else {
                ((b > 0).then(|| b - 1), (b + 1 < m).then_some(b + 1))
            };
            for i in 0..n {
                let hi = bp.map_or(0.0, |x| p[[i, x]]);
                let lo = bm.map_or(0.0, |x| p[[i, x]]);
                field.vz[[i, j]] -= scale * (hi - lo) / (2.0 * g.dz);
            }
        }
        field.sync_periodic();
    }

    /// Projects `u_star`: solves `D G p = D u_star / dt` and returns
    /// `(u_star - dt G p, p)`.
    pub fn project(
        &self,
        u_star: &AxisymField,
        dt: f64,
        tol: f64,
        method: PoissonMethod,
    ) -> Result<(AxisymField, ScalarField)> {
        let div = divergence(u_star);
        let mut f = self.gather(&div.values);
        f.mapv_inplace(|v| v / dt);
        let (p, _) = self.solve_unknowns(&f, tol, method)?;
        let mut out = u_star.clone();
        self.subtract_gradient(&mut out, &p, dt);
        Ok((out, self.scatter(&p)))
    }

    /// Pressure that removes the divergent part of a tendency field.
    ///
    /// The meridional velocity on the far-field boundary is prescribed and
    /// steady, so the tendency is taken to vanish there.
    pub fn pressure_of(&self, tendency: &AxisymField, tol: f64) -> Result<ScalarField> {
        let g = self.grid;
        let mut t = tendency.clone();
        for i in 0..=g.nr {
            for j in 0..=g.nz {
                if g.is_boundary(i, j) {
                    t.vr[[i, j]] = 0.0;
                    t.vz[[i, j]] = 0.0;
                }
            }
        }
        let div = divergence(&t);
        let f = self.gather(&div.values);
        let (p, _) = self.solve_unknowns(&f, tol, PoissonMethod::Spectral)?;
        Ok(self.scatter(&p))
    }

    #[cfg(test)]
    pub(crate) fn radial_factor(&self) -> (&Array2<f64>, Vec<f64>) {
        (&self.a_r, radial_weights(&self.grid))
    }
}

fn sup(a: &Array2<f64>) -> f64 {
    a.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

/// Sup norm of the divergence over the constrained nodes.
/// Largest divergence over the nodes the projection constrains.
pub fn max_divergence(field: &AxisymField) -> f64 {
    let d = divergence(field);
    let g = field.grid;
    let mut m = 0.0_f64;
    for i in 0..g.nr {
        for j in g.z_interior() {
            m = m.max(d.values[[i, j]].abs());
        }
    }
    m
}
