//! Spatial operators of the pressure-free momentum tendency.
//!
//! Every operator returns zero on prescribed boundary nodes. The odd
//! components (`vr`, `vtheta`) are also zero on the axis; the even ones use
//! the axis limit of the cylindrical Laplacian.

use ndarray::Array2;

use crate::field::{AxisymField, Parity, ScalarField};
use crate::grid::Grid;

/// Second-order upwind derivative along r, falling back to first order next to
/// the far-field boundary.
#[inline]
fn upwind_r(f: &Array2<f64>, g: &Grid, i: usize, j: usize, a: f64, parity: Parity) -> f64 {
    if a > 0.0 {
        let fm1 = f[[i - 1, j]];
        let fm2 = if i >= 2 { f[[i - 2, j]] } else { parity.ghost(f[[1, j]]) };
        (3.0 * f[[i, j]] - 4.0 * fm1 + fm2) / (2.0 * g.dr)
    } else if a < 0.0 {
        if i + 2 <= g.nr {
            (-3.0 * f[[i, j]] + 4.0 * f[[i + 1, j]] - f[[i + 2, j]]) / (2.0 * g.dr)
        } else {
            (f[[i + 1, j]] - f[[i, j]]) / g.dr
        }
    } else {
        0.0
    }
}

#[inline]
fn upwind_z(f: &Array2<f64>, g: &Grid, i: usize, j: usize, a: f64) -> f64 {
    let s = if a > 0.0 {
        -1
    } else if a < 0.0 {
        1
    } else {
        return 0.0;
    };
    let j1 = g.z_offset(j, s).expect("interior node has both neighbours");
    let sign = -(s as f64);
    match g.z_offset(j, 2 * s) {
        Some(j2) => sign * (3.0 * f[[i, j]] - 4.0 * f[[i, j1]] + f[[i, j2]]) / (2.0 * g.dz),
        None => sign * (f[[i, j]] - f[[i, j1]]) / g.dz,
    }
}

#[inline]
fn d2_z(f: &Array2<f64>, g: &Grid, i: usize, j: usize) -> f64 {
    let (jm, jp) = g.z_neighbours(j);
    (f[[i, jp]] - 2.0 * f[[i, j]] + f[[i, jm]]) / (g.dz * g.dz)
}

fn sync(out: &mut Array2<f64>, g: &Grid) {
    if g.is_periodic() {
        for i in 0..=g.nr {
            out[[i, g.nz]] = out[[i, 0]];
        }
    }
}

pub(crate) fn advect_array(b: &AxisymField, f: &Array2<f64>, parity: Parity) -> Array2<f64> {
    let g = b.grid;
    let mut out = Array2::zeros(g.shape());
    for i in 0..g.nr {
        for j in g.z_interior() {
            let (ur, uz) = (b.vr[[i, j]], b.vz[[i, j]]);
            let radial = if i == 0 { 0.0 } else { ur * upwind_r(f, &g, i, j, ur, parity) };
            out[[i, j]] = radial + uz * upwind_z(f, &g, i, j, uz);
        }
    }
    sync(&mut out, &g);
    out
}

/// `vr df/dr + vz df/dz` with second-order upwinding.
pub fn advect(b: &AxisymField, f: &ScalarField, parity: Parity) -> ScalarField {
    ScalarField {
        grid: f.grid,
        values: advect_array(b, &f.values, parity),
        role: f.role,
    }
}

/// Radial part in flux form `d/dr((1/r) d/dr(r f))`, exact for `a r + b r^3`
/// next to the axis.
pub(crate) fn diffuse_swirllike_array(f: &Array2<f64>, g: &Grid) -> Array2<f64> {
    let mut out = Array2::zeros(g.shape());
    let dr2 = g.dr * g.dr;
    for i in 1..g.nr {
        let (rm, r, rp) = (g.r(i - 1), g.r(i), g.r(i + 1));
        let (hm, hp) = (r - 0.5 * g.dr, r + 0.5 * g.dr);
        for j in g.z_interior() {
            let (gm, g0, gp) = (rm * f[[i - 1, j]], r * f[[i, j]], rp * f[[i + 1, j]]);
            out[[i, j]] = ((gp - g0) / hp - (g0 - gm) / hm) / dr2 + d2_z(f, g, i, j);
        }
    }
    sync(&mut out, g);
    out
}

/// `(Delta - 1/r^2) f` for an odd component.
pub fn diffuse_swirllike(f: &ScalarField) -> ScalarField {
    ScalarField {
        grid: f.grid,
        values: diffuse_swirllike_array(&f.values, &f.grid),
        role: f.role,
    }
}

pub(crate) fn diffuse_plain_array(f: &Array2<f64>, g: &Grid) -> Array2<f64> {
    let mut out = Array2::zeros(g.shape());
    let dr2 = g.dr * g.dr;
    for j in g.z_interior() {
        // 2 f_rr on the axis, with the ghost f(-dr) = f(dr)
        out[[0, j]] = 4.0 * (f[[1, j]] - f[[0, j]]) / dr2 + d2_z(f, g, 0, j);
    }
    for i in 1..g.nr {
        let r = g.r(i);
        for j in g.z_interior() {
            let (fm, f0, fp) = (f[[i - 1, j]], f[[i, j]], f[[i + 1, j]]);
            out[[i, j]] = (fp - 2.0 * f0 + fm) / dr2 + (fp - fm) / (2.0 * g.dr * r) + d2_z(f, g, i, j);
        }
    }
    sync(&mut out, g);
    out
}

/// Cylindrical Laplacian `Delta f` for an even component.
pub fn diffuse_plain(f: &ScalarField) -> ScalarField {
    ScalarField {
        grid: f.grid,
        values: diffuse_plain_array(&f.values, &f.grid),
        role: f.role,
    }
}

/// Pressure-free tendency of the three momentum equations.
pub fn momentum_rhs(state: &AxisymField, mu: f64) -> AxisymField {
    let g = state.grid;
    let adv_r = advect_array(state, &state.vr, Parity::Odd);
    let adv_t = advect_array(state, &state.vtheta, Parity::Odd);
    let adv_z = advect_array(state, &state.vz, Parity::Even);
    let lap_r = diffuse_swirllike_array(&state.vr, &g);
    let lap_t = diffuse_swirllike_array(&state.vtheta, &g);
    let lap_z = diffuse_plain_array(&state.vz, &g);

    let mut rhs = AxisymField::zeros(g);
    for i in 1..g.nr {
        let r = g.r(i);
        for j in g.z_interior() {
            let (ur, ut) = (state.vr[[i, j]], state.vtheta[[i, j]]);
            rhs.vr[[i, j]] = -adv_r[[i, j]] + ut * ut / r + mu * lap_r[[i, j]];
            rhs.vtheta[[i, j]] = -adv_t[[i, j]] - ur * ut / r + mu * lap_t[[i, j]];
        }
    }
    for i in 0..g.nr {
        for j in g.z_interior() {
            rhs.vz[[i, j]] = -adv_z[[i, j]] + mu * lap_z[[i, j]];
        }
    }
    rhs.sync_periodic();
    rhs
}
