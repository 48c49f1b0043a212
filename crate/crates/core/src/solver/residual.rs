//! Pointwise residual of the momentum and continuity equations evaluated on
//! stored snapshots.
//!
//! Spatial terms use centred differences (the viscous terms share the stencils
//! of the stepper), the pressure gradient is centred, and the time derivative
//! is the three-point centred formula on possibly nonuniform time levels, so
//! only the interior levels of the window contribute.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::field::{divergence_at, AxisymField, ScalarField};
use crate::grid::Grid;
use crate::history::SnapshotHistory;

use super::operators::{diffuse_plain_array, diffuse_swirllike_array};

/// Space-time region over which residuals are collected. A node counts when
/// its whole stencil lies inside the region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualWindow {
    pub t_start: f64,
    pub t_end: f64,
    pub r_limit: Option<f64>,
    pub z_limits: Option<(f64, f64)>,
    pub mu: f64,
}

impl ResidualWindow {
    pub fn times(t_start: f64, t_end: f64) -> Self {
        ResidualWindow {
            t_start,
            t_end,
            r_limit: None,
            z_limits: None,
            mu: 1.0,
        }
    }

    fn admits(&self, g: &Grid, i: usize, j: usize) -> bool {
        if let Some(rl) = self.r_limit {
            if g.r(i) + g.dr > rl * (1.0 + 1e-12) {
                return false;
            }
        }
        if let Some((lo, hi)) = self.z_limits {
            let z = g.z(j);
            let slack = 1e-12 * (1.0 + lo.abs().max(hi.abs()));
            if z - g.dz < lo - slack || z + g.dz > hi + slack {
                return false;
            }
        }
        true
    }
}

/// Sup norm and `r`-weighted RMS of one equation's residual.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EquationNorms {
    pub sup: f64,
    pub l2: f64,
}

#[derive(Debug, Default)]
struct Accum {
    sup: f64,
    sum: f64,
    weight: f64,
}

impl Accum {
    fn add(&mut self, v: f64, w: f64) {
        self.sup = self.sup.max(v.abs());
        self.sum += w * v * v;
        self.weight += w;
    }

    fn finish(&self) -> EquationNorms {
        EquationNorms {
            sup: self.sup,
            l2: if self.weight > 0.0 { (self.sum / self.weight).sqrt() } else { 0.0 },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ResidualReport {
    pub vr: EquationNorms,
    pub vtheta: EquationNorms,
    pub vz: EquationNorms,
    pub continuity: EquationNorms,
    /// Time levels at which residuals were evaluated.
    pub levels: usize,
}

impl ResidualReport {
    /// Largest momentum sup norm.
    pub fn momentum_sup(&self) -> f64 {
        self.vr.sup.max(self.vtheta.sup).max(self.vz.sup)
    }
}

/// Weights of the three-point derivative at the middle of `(t0, t1, t2)`.
fn centred_weights(t0: f64, t1: f64, t2: f64) -> [f64; 3] {
    let (h1, h2) = (t1 - t0, t2 - t1);
    [
        -h2 / (h1 * (h1 + h2)),
        (h2 - h1) / (h1 * h2),
        h1 / (h2 * (h1 + h2)),
    ]
}

struct Level<'a> {
    prev: &'a AxisymField,
    cur: &'a AxisymField,
    next: &'a AxisymField,
    p: &'a ScalarField,
    w: [f64; 3],
}

impl Level<'_> {
    fn dt(&self, pick: impl Fn(&AxisymField) -> &Array2<f64>, i: usize, j: usize) -> f64 {
        // the weights sum to zero, so differences keep constants exact
        let c = pick(self.cur)[[i, j]];
        self.w[0] * (pick(self.prev)[[i, j]] - c) + self.w[2] * (pick(self.next)[[i, j]] - c)
    }
}

#[inline]
fn centred_r(f: &Array2<f64>, g: &Grid, i: usize, j: usize) -> f64 {
    (f[[i + 1, j]] - f[[i - 1, j]]) / (2.0 * g.dr)
}

#[inline]
fn centred_z(f: &Array2<f64>, g: &Grid, i: usize, j: usize) -> f64 {
    let (jm, jp) = g.z_neighbours(j);
    (f[[i, jp]] - f[[i, jm]]) / (2.0 * g.dz)
}

/// Per-equation residual norms over the snapshots inside `window`.
pub fn mms_residual(history: &SnapshotHistory, window: &ResidualWindow) -> Result<ResidualReport> {
    let snaps: Vec<_> = history
        .iter()
        .filter(|s| s.t >= window.t_start && s.t <= window.t_end)
        .collect();
    if snaps.len() < 3 {
        return Err(Error::InsufficientSnapshots {
            needed: 3,
            found: snaps.len(),
        });
    }
    let g = snaps[0].field.grid;
    let mu = window.mu;
    let (mut ar, mut at, mut az, mut ac) = (Accum::default(), Accum::default(), Accum::default(), Accum::default());

    for k in 1..snaps.len() - 1 {
        let lv = Level {
            prev: &snaps[k - 1].field,
            cur: &snaps[k].field,
            next: &snaps[k + 1].field,
            p: &snaps[k].pressure,
            w: centred_weights(snaps[k - 1].t, snaps[k].t, snaps[k + 1].t),
        };
        let u = lv.cur;
        let lap_r = diffuse_swirllike_array(&u.vr, &g);
        let lap_t = diffuse_swirllike_array(&u.vtheta, &g);
        let lap_z = diffuse_plain_array(&u.vz, &g);
        let p = &lv.p.values;

        for j in g.z_interior() {
            if g.z_offset(j, -1).is_none() || g.z_offset(j, 1).is_none() {
                continue;
            }
            for i in 0..g.nr {
                if !window.admits(&g, i, j) {
                    continue;
                }
                let (ur, ut, uz) = (u.vr[[i, j]], u.vtheta[[i, j]], u.vz[[i, j]]);
                if i == 0 {
                    // only the even component carries an equation on the axis
                    let res = lv.dt(|f| &f.vz, 0, j) + uz * centred_z(&u.vz, &g, 0, j) + centred_z(p, &g, 0, j)
                        - mu * lap_z[[0, j]];
                    az.add(res, g.dr / 4.0);
                    ac.add(divergence_at(u, 0, j), g.dr / 4.0);
                    continue;
                }
                let r = g.r(i);
                let adv = |f: &Array2<f64>| ur * centred_r(f, &g, i, j) + uz * centred_z(f, &g, i, j);
                let res_r = lv.dt(|f| &f.vr, i, j) + adv(&u.vr) - ut * ut / r + centred_r(p, &g, i, j)
                    - mu * lap_r[[i, j]];
                let res_t = lv.dt(|f| &f.vtheta, i, j) + adv(&u.vtheta) + ur * ut / r - mu * lap_t[[i, j]];
                let res_z = lv.dt(|f| &f.vz, i, j) + adv(&u.vz) + centred_z(p, &g, i, j) - mu * lap_z[[i, j]];
                ar.add(res_r, r);
                at.add(res_t, r);
                az.add(res_z, r);
                ac.add(divergence_at(u, i, j), r);
            }
        }
    }
    Ok(ResidualReport {
        vr: ar.finish(),
        vtheta: at.finish(),
        vz: az.finish(),
        continuity: ac.finish(),
        levels: snaps.len() - 2,
    })
}
