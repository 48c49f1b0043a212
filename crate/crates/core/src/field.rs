use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;

/// Reflection symmetry of a cylindrical component across the axis.
///
/// `vr` and `vtheta` change sign under `r -> -r`; `vz` and the pressure do not.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Odd,
    Even,
}

impl Parity {
    /// Value of the ghost node at `r = -dr` given the value at `r = dr`.
    #[inline]
    pub fn ghost(self, first: f64) -> f64 {
        match self {
            Parity::Odd => -first,
            Parity::Even => first,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldRole {
    Pressure,
    Streamfunction,
    Generic,
}

/// Scalar node values over a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub grid: Grid,
    pub values: Array2<f64>,
    pub role: FieldRole,
}

impl ScalarField {
    pub fn zeros(grid: Grid, role: FieldRole) -> Self {
        ScalarField {
            grid,
            values: Array2::zeros(grid.shape()),
            role,
        }
    }

    pub fn from_fn(grid: Grid, role: FieldRole, mut f: impl FnMut(f64, f64) -> f64) -> Self {
        let values = Array2::from_shape_fn(grid.shape(), |(i, j)| f(grid.r(i), grid.z(j)));
        ScalarField { grid, values, role }
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// Cylindrical velocity components `(vr, vtheta, vz)` at the nodes of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisymField {
    pub grid: Grid,
    pub vr: Array2<f64>,
    pub vtheta: Array2<f64>,
    pub vz: Array2<f64>,
}

impl AxisymField {
    pub fn zeros(grid: Grid) -> Self {
        AxisymField {
            grid,
            vr: Array2::zeros(grid.shape()),
            vtheta: Array2::zeros(grid.shape()),
            vz: Array2::zeros(grid.shape()),
        }
    }

    /// Builds a field from a closure `(r, z) -> [vr, vtheta, vz]`.
    pub fn from_fn(grid: Grid, mut f: impl FnMut(f64, f64) -> [f64; 3]) -> Self {
        let mut field = AxisymField::zeros(grid);
        for i in 0..=grid.nr {
            for j in 0..=grid.nz {
                let [a, b, c] = f(grid.r(i), grid.z(j));
                field.vr[[i, j]] = a;
                field.vtheta[[i, j]] = b;
                field.vz[[i, j]] = c;
            }
        }
        field
    }

    pub fn components(&self) -> [&Array2<f64>; 3] {
        [&self.vr, &self.vtheta, &self.vz]
    }

    #[inline]
    pub fn speed_at(&self, i: usize, j: usize) -> f64 {
        let (a, b, c) = (self.vr[[i, j]], self.vtheta[[i, j]], self.vz[[i, j]]);
        (a * a + b * b + c * c).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.components()
            .iter()
            .all(|c| c.iter().all(|v| v.is_finite()))
    }

    pub fn scale(&mut self, factor: f64) {
        self.vr.mapv_inplace(|v| v * factor);
        self.vtheta.mapv_inplace(|v| v * factor);
        self.vz.mapv_inplace(|v| v * factor);
    }

    /// Copies column 0 into the duplicate column `nz` on periodic grids.
    pub fn sync_periodic(&mut self) {
        if self.grid.is_periodic() {
            let nz = self.grid.nz;
            for c in [&mut self.vr, &mut self.vtheta, &mut self.vz] {
                for i in 0..=self.grid.nr {
                    c[[i, nz]] = c[[i, 0]];
                }
            }
        }
    }

    /// `E = sum r dr dz |v|^2 / 2` over the nodes (periodic duplicates excluded).
    pub fn kinetic_energy(&self) -> f64 {
        let g = &self.grid;
        let jmax = if g.is_periodic() { g.nz - 1 } else { g.nz };
        let mut e = 0.0;
        for i in 1..=g.nr {
            let r = g.r(i);
            for j in 0..=jmax {
                let s = self.speed_at(i, j);
                e += r * s * s;
            }
        }
        0.5 * e * g.dr * g.dz
    }

    /// Largest magnitude on the layer of nodes next to the far-field boundary.
    /// The boundary nodes themselves carry prescribed data, so this is the
    /// first place an undersized domain shows up.
    pub fn boundary_max(&self) -> f64 {
        let g = &self.grid;
        let mut m = 0.0_f64;
        for i in 0..g.nr {
            for j in 0..=g.nz {
                if g.is_boundary(i, j) {
                    continue;
                }
                let near = i + 1 == g.nr
                    || (!g.is_periodic() && (j == 1 || j + 1 == g.nz));
                if near {
                    m = m.max(self.speed_at(i, j));
                }
            }
        }
        m
    }

    /// Bilinear interpolation of the three components at `(r, z)`.
    pub fn interpolate(&self, r: f64, z: f64) -> Result<[f64; 3]> {
        let stencil = Bilinear::locate(&self.grid, r, z)?;
        Ok([
            stencil.apply(&self.vr),
            stencil.apply(&self.vtheta),
            stencil.apply(&self.vz),
        ])
    }
}

/// Cell lookup and weights for bilinear interpolation.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Bilinear {
    i: usize,
    j: usize,
    a: f64,
    b: f64,
}

impl Bilinear {
    pub(crate) fn locate(grid: &Grid, r: f64, z: f64) -> Result<Self> {
        if !grid.contains(r, z) {
            return Err(Error::OutOfDomain { r, z });
        }
        let s = (r / grid.dr).clamp(0.0, grid.nr as f64);
        let q = ((z - grid.z_min) / grid.dz).clamp(0.0, grid.nz as f64);
        let i = (s.floor() as usize).min(grid.nr - 1);
        let j = (q.floor() as usize).min(grid.nz - 1);
        Ok(Bilinear {
            i,
            j,
            a: s - i as f64,
            b: q - j as f64,
        })
    }

    /// Written as corrections to the lower-left value so constants are reproduced exactly.
    #[inline]
    pub(crate) fn apply(&self, f: &Array2<f64>) -> f64 {
        let (i, j) = (self.i, self.j);
        let f00 = f[[i, j]];
        let f10 = f[[i + 1, j]];
        let f01 = f[[i, j + 1]];
        let f11 = f[[i + 1, j + 1]];
        f00 + self.a * (f10 - f00) + self.b * (f01 - f00) + self.a * self.b * (f11 - f10 - f01 + f00)
    }
}

/// Enforces the parity conditions on the axis: `vr = vtheta = 0` and an even
/// extrapolation of `vz` whose one-sided radial derivative vanishes.
pub fn apply_axis_conditions(mut field: AxisymField) -> AxisymField {
    for j in 0..=field.grid.nz {
        field.vr[[0, j]] = 0.0;
        field.vtheta[[0, j]] = 0.0;
        // -3 f0 + 4 f1 - f2 = 0
        field.vz[[0, j]] = (4.0 * field.vz[[1, j]] - field.vz[[2, j]]) / 3.0;
    }
    field
}

/// Discrete divergence of the meridional drift `(vr, vz)`.
///
/// The radial part is the conservative centred form `(r vr)_r / r`, which on
/// the axis becomes `2 vr(dr) / dr`. Values are produced on the constrained
/// nodes (axis and interior); prescribed boundary nodes carry zero.
pub fn divergence(field: &AxisymField) -> ScalarField {
    let g = field.grid;
    let mut out = ScalarField::zeros(g, FieldRole::Generic);
    for i in 0..g.nr {
        for j in g.z_interior() {
            out.values[[i, j]] = divergence_at(field, i, j);
        }
    }
    if g.is_periodic() {
        for i in 0..=g.nr {
            out.values[[i, g.nz]] = out.values[[i, 0]];
        }
    }
    out
}

#[inline]
pub(crate) fn divergence_at(field: &AxisymField, i: usize, j: usize) -> f64 {
    let g = &field.grid;
    let radial = if i == 0 {
        2.0 * field.vr[[1, j]] / g.dr
    } else {
        let (rm, rp) = (g.r(i - 1), g.r(i + 1));
        (rp * field.vr[[i + 1, j]] - rm * field.vr[[i - 1, j]]) / (2.0 * g.dr * g.r(i))
    };
    let (jm, jp) = g.z_neighbours(j);
    radial + (field.vz[[i, jp]] - field.vz[[i, jm]]) / (2.0 * g.dz)
}

/// Node location `(r, z)` together with grid indices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeMax {
    pub value: f64,
    pub i: usize,
    pub j: usize,
    pub r: f64,
    pub z: f64,
}

fn scan_max(field: &AxisymField, weight: impl Fn(f64) -> f64) -> NodeMax {
    let g = field.grid;
    let mut best = NodeMax {
        value: 0.0,
        i: 0,
        j: 0,
        r: 0.0,
        z: g.z_min,
    };
    // i outer, j inner, strict comparison: ties go to the smallest r, then z.
    for i in 0..=g.nr {
        let w = weight(g.r(i));
        for j in 0..=g.nz {
            let v = w * field.speed_at(i, j);
            if v > best.value {
                best = NodeMax {
                    value: v,
                    i,
                    j,
                    r: g.r(i),
                    z: g.z(j),
                };
            }
        }
    }
    best
}

/// Largest nodal speed `Q` and its location.
pub fn max_speed(field: &AxisymField) -> NodeMax {
    scan_max(field, |_| 1.0)
}

/// Largest nodal value of `r |v|` and its location.
pub fn max_rspeed(field: &AxisymField) -> NodeMax {
    scan_max(field, |r| r)
}

/// Largest nodal value of `r |vtheta|`.
pub fn max_rvtheta(field: &AxisymField) -> f64 {
    let g = field.grid;
    let mut m = 0.0_f64;
    for i in 0..=g.nr {
        let r = g.r(i);
        for j in 0..=g.nz {
            m = m.max(r * field.vtheta[[i, j]].abs());
        }
    }
    m
}
