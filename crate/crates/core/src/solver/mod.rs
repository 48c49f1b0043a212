//! Heun (RK2) time stepping with a projection after each stage.

pub mod operators;
pub mod projection;
pub mod residual;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{max_speed, AxisymField, ScalarField};
use crate::grid::Grid;
use crate::initdata::lamb_oseen_vtheta;

pub use operators::{advect, diffuse_plain, diffuse_swirllike, momentum_rhs};
pub use projection::{max_divergence, PoissonMethod, ProjectionSolver};
pub use residual::{mms_residual, EquationNorms, ResidualReport, ResidualWindow};

/// Largest Courant number accepted for a fixed time step.
pub const MAX_CFL: f64 = 0.5;

/// Upper bound on `projection_tol`.
pub const MAX_PROJECTION_TOL: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeStep {
    Fixed(f64),
    Cfl(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub mu: f64,
    pub time_step: TimeStep,
    pub t_end: f64,
    pub projection_tol: f64,
    pub snapshot_every: usize,
    pub poisson: PoissonMethod,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            mu: 1.0,
            time_step: TimeStep::Cfl(0.3),
            t_end: 1.0,
            projection_tol: 1e-10,
            snapshot_every: 10,
            poisson: PoissonMethod::Spectral,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(Error::config("solver.mu", format!("must be positive, got {}", self.mu)));
        }
        match self.time_step {
            TimeStep::Fixed(dt) if !(dt > 0.0 && dt.is_finite()) => {
                return Err(Error::config("solver.dt", format!("must be positive, got {dt}")));
            }
            TimeStep::Cfl(c) if !(c > 0.0 && c <= MAX_CFL) => {
                return Err(Error::config("solver.cfl", format!("must lie in (0, {MAX_CFL}], got {c}")));
            }
            _ => {}
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::config("solver.t_end", format!("must be non-negative, got {}", self.t_end)));
        }
        if !(self.projection_tol > 0.0 && self.projection_tol <= MAX_PROJECTION_TOL) {
            return Err(Error::config(
                "solver.projection_tol",
                format!("must lie in (0, {MAX_PROJECTION_TOL:e}], got {}", self.projection_tol),
            ));
        }
        if self.snapshot_every == 0 {
            return Err(Error::config("solver.snapshot_every", "must be at least 1"));
        }
        Ok(())
    }
}

/// Velocity prescribed on the far-field boundary nodes.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BoundaryData {
    #[default]
    Zero,
    /// The exact pure-swirl profile, whose `1/r` tail does not vanish at `r_max`.
    LambOseen {
        circulation: f64,
        nu: f64,
        t_offset: f64,
    },
}

impl BoundaryData {
    fn value(&self, r: f64, t: f64) -> [f64; 3] {
        match *self {
            BoundaryData::Zero => [0.0; 3],
            BoundaryData::LambOseen {
                circulation,
                nu,
                t_offset,
            } => [0.0, lamb_oseen_vtheta(circulation, nu, t_offset + t, r), 0.0],
        }
    }

    pub fn apply(&self, field: &mut AxisymField, t: f64) {
        let g = field.grid;
        for i in 0..=g.nr {
            for j in 0..=g.nz {
                if g.is_boundary(i, j) {
                    let v = self.value(g.r(i), t);
                    field.vr[[i, j]] = v[0];
                    field.vtheta[[i, j]] = v[1];
                    field.vz[[i, j]] = v[2];
                }
            }
        }
    }
}

/// Explicit diffusion limit. The first bound keeps the Heun stage inside its
/// real stability interval given the `1/r^2` term; the second is the nominal one.
pub fn diffusion_limit(g: &Grid, mu: f64) -> f64 {
    let h = g.min_spacing();
    let spectral = 1.8 / (mu * (5.0 / (g.dr * g.dr) + 4.0 / (g.dz * g.dz)));
    spectral.min(0.25 * h * h / mu)
}

/// Advective limit `cfl * h / max(1, Q)`.
pub fn advection_limit(g: &Grid, q: f64, cfl: f64) -> f64 {
    cfl * g.min_spacing() / q.max(1.0)
}

#[derive(Debug, Clone)]
pub struct Solver {
    config: SolverConfig,
    boundary: BoundaryData,
    projection: ProjectionSolver,
    state: AxisymField,
    t: f64,
    steps: usize,
}

impl Solver {
    /// Applies the boundary data at `t` and projects the initial state.
    pub fn new(initial: AxisymField, t: f64, config: SolverConfig, boundary: BoundaryData) -> Result<Self> {
        config.validate()?;
        let projection = ProjectionSolver::new(initial.grid);
        let mut u = crate::field::apply_axis_conditions(initial);
        boundary.apply(&mut u, t);
        u.sync_periodic();
        let (state, _) = projection.project(&u, 1.0, config.projection_tol, config.poisson)?;
        if !state.is_finite() {
            return Err(Error::NonFinite { t });
        }
        Ok(Solver {
            config,
            boundary,
            projection,
            state,
            t,
            steps: 0,
        })
    }

    /// Resumes from a stored state without re-projecting it.
    pub fn resume(state: AxisymField, t: f64, steps: usize, config: SolverConfig, boundary: BoundaryData) -> Result<Self> {
        config.validate()?;
        Ok(Solver {
            projection: ProjectionSolver::new(state.grid),
            config,
            boundary,
            state,
            t,
            steps,
        })
    }

    pub fn state(&self) -> &AxisymField {
        &self.state
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    pub fn projection(&self) -> &ProjectionSolver {
        &self.projection
    }

    pub fn is_finished(&self) -> bool {
        self.t >= self.config.t_end * (1.0 - 1e-12)
    }

    /// Step size for the current state, clipped so the run lands on `t_end`.
    pub fn next_dt(&self) -> Result<f64> {
        let g = &self.state.grid;
        let q = max_speed(&self.state).value;
        let diff = diffusion_limit(g, self.config.mu);
        let dt = match self.config.time_step {
            TimeStep::Cfl(c) => advection_limit(g, q, c).min(diff),
            TimeStep::Fixed(dt) => {
                let adv = advection_limit(g, q, MAX_CFL);
                if dt > adv {
                    return Err(Error::CflViolation {
                        dt,
                        limit: adv,
                        which: "advection",
                    });
                }
                if dt > diff {
                    return Err(Error::CflViolation {
                        dt,
                        limit: diff,
                        which: "diffusion",
                    });
                }
                dt
            }
        };
        let remaining = self.config.t_end - self.t;
        // avoid a sliver of a final step
        Ok(if remaining < dt * (1.0 + 1e-9) { remaining } else { dt })
    }

    fn stage(&self, mut u: AxisymField, t: f64) -> Result<AxisymField> {
        self.boundary.apply(&mut u, t);
        u.sync_periodic();
        let (v, _) = self
            .projection
            .project(&u, 1.0, self.config.projection_tol, self.config.poisson)?;
        Ok(v)
    }

    /// Advances by `dt`.
    pub fn step_by(&mut self, dt: f64) -> Result<()> {
        let mu = self.config.mu;
        let t1 = self.t + dt;
        let f0 = momentum_rhs(&self.state, mu);
        let mut u1 = self.state.clone();
        axpy(&mut u1, dt, &f0);
        let u1 = self.stage(u1, t1)?;
        let f1 = momentum_rhs(&u1, mu);
        let mut u2 = self.state.clone();
        axpy(&mut u2, 1.0, &u1);
        axpy(&mut u2, dt, &f1);
        u2.scale(0.5);
        let next = self.stage(u2, t1)?;
        if !next.is_finite() {
            return Err(Error::NonFinite { t: t1 });
        }
        self.state = next;
        self.t = t1;
        self.steps += 1;
        Ok(())
    }

    /// Advances by one admissible step and returns its size.
    pub fn step(&mut self) -> Result<f64> {
        let dt = self.next_dt()?;
        self.step_by(dt)?;
        Ok(dt)
    }

    /// Pressure balancing the current tendency.
    pub fn pressure(&self) -> Result<ScalarField> {
        let f = momentum_rhs(&self.state, self.config.mu);
        self.projection.pressure_of(&f, self.config.projection_tol)
    }
}

fn axpy(y: &mut AxisymField, a: f64, x: &AxisymField) {
    y.vr.scaled_add(a, &x.vr);
    y.vtheta.scaled_add(a, &x.vtheta);
    y.vz.scaled_add(a, &x.vz);
}
