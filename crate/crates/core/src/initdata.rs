//! Initial data: the Lamb-Oseen oracle and normalised generators.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{AxisymField, FieldRole, ScalarField};
use crate::grid::Grid;
use crate::solver::BoundaryData;

/// Swirl of the Lamb-Oseen vortex, `Gamma/(2 pi r) (1 - exp(-r^2 / (4 nu t)))`.
pub fn lamb_oseen_vtheta(circulation: f64, nu: f64, t: f64, r: f64) -> f64 {
    if r == 0.0 {
        return 0.0;
    }
    -circulation / (2.0 * PI * r) * (-r * r / (4.0 * nu * t)).exp_m1()
}

pub fn lamb_oseen_field(circulation: f64, nu: f64, t_offset: f64, grid: Grid) -> AxisymField {
    AxisymField::from_fn(grid, |r, _| [0.0, lamb_oseen_vtheta(circulation, nu, t_offset, r), 0.0])
}

/// Cyclostrophic pressure `p(r) = int_0^r vtheta^2 / s ds`, integrated with
/// composite Simpson between neighbouring nodes.
pub fn lamb_oseen_pressure(circulation: f64, nu: f64, t: f64, grid: Grid) -> ScalarField {
    const SUB: usize = 16;
    let integrand = |s: f64| {
        if s == 0.0 {
            0.0
        } else {
            let v = lamb_oseen_vtheta(circulation, nu, t, s);
            v * v / s
        }
    };
    let mut profile = vec![0.0; grid.nr + 1];
    for i in 1..=grid.nr {
        let (a, b) = (grid.r(i - 1), grid.r(i));
        let h = (b - a) / SUB as f64;
        let mut acc = integrand(a) + integrand(b);
        for k in 1..SUB {
            acc += if k % 2 == 1 { 4.0 } else { 2.0 } * integrand(a + k as f64 * h);
        }
        profile[i] = profile[i - 1] + acc * h / 3.0;
    }
    let mut p = ScalarField::zeros(grid, FieldRole::Pressure);
    for (i, v) in profile.iter().enumerate() {
        p.values.row_mut(i).fill(*v);
    }
    p
}

fn default_n0() -> f64 {
    1.0
}

/// Initial-data description as stored in a run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSpec {
    /// Not rescaled: the profile is the exact solution used for validation.
    LambOseen {
        circulation: f64,
        #[serde(default = "default_nu")]
        nu: f64,
        t_offset: f64,
    },
    VortexRingSwirl {
        /// Stream-function amplitude `A`.
        amplitude: f64,
        /// Swirl amplitude `S`.
        swirl: f64,
        ring_r: f64,
        #[serde(default)]
        ring_z: f64,
        core: f64,
        #[serde(default = "default_n0")]
        n0: f64,
    },
    StreamRandom {
        seed: u64,
        modes: usize,
        #[serde(default = "default_amplitude")]
        amplitude: f64,
        #[serde(default)]
        swirl: f64,
        #[serde(default = "default_n0")]
        n0: f64,
    },
    Zero,
}

fn default_nu() -> f64 {
    1.0
}

fn default_amplitude() -> f64 {
    1.0
}

impl DataSpec {
    pub fn validate(&self) -> Result<()> {
        let finite = |name: &str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::config(format!("data.{name}"), "must be finite"))
            }
        };
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::config(format!("data.{name}"), format!("must be positive, got {v}")))
            }
        };
        match *self {
            DataSpec::LambOseen {
                circulation,
                nu,
                t_offset,
            } => {
                finite("circulation", circulation)?;
                positive("nu", nu)?;
                positive("t_offset", t_offset)
            }
            DataSpec::VortexRingSwirl {
                amplitude,
                swirl,
                ring_r,
                ring_z,
                core,
                n0,
            } => {
                finite("amplitude", amplitude)?;
                finite("swirl", swirl)?;
                finite("ring_z", ring_z)?;
                positive("ring_r", ring_r)?;
                positive("core", core)?;
                positive("n0", n0)
            }
            DataSpec::StreamRandom {
                modes,
                amplitude,
                swirl,
                n0,
                ..
            } => {
                if modes == 0 {
                    return Err(Error::config("data.modes", "must be at least 1"));
                }
                finite("amplitude", amplitude)?;
                finite("swirl", swirl)?;
                positive("n0", n0)
            }
            DataSpec::Zero => Ok(()),
        }
    }

    /// Bound the data is normalised to, where one applies.
    pub fn n0(&self) -> Option<f64> {
        match *self {
            DataSpec::VortexRingSwirl { n0, .. } | DataSpec::StreamRandom { n0, .. } => Some(n0),
            _ => None,
        }
    }

    /// Far-field data consistent with the initial field.
    pub fn boundary(&self) -> BoundaryData {
        match *self {
            DataSpec::LambOseen {
                circulation,
                nu,
                t_offset,
            } => BoundaryData::LambOseen {
                circulation,
                nu,
                t_offset,
            },
            _ => BoundaryData::Zero,
        }
    }

    pub fn generate(&self, grid: Grid) -> Result<AxisymField> {
        self.validate()?;
        match *self {
            DataSpec::LambOseen {
                circulation,
                nu,
                t_offset,
            } => Ok(lamb_oseen_field(circulation, nu, t_offset, grid)),
            DataSpec::VortexRingSwirl {
                amplitude,
                swirl,
                ring_r,
                ring_z,
                core,
                n0,
            } => vortex_ring_swirl(
                &RingParams {
                    amplitude,
                    swirl,
                    ring_r,
                    ring_z,
                    core,
                },
                n0,
                grid,
            ),
            DataSpec::StreamRandom {
                seed,
                modes,
                amplitude,
                swirl,
                n0,
            } => Ok(stream_random(seed, modes, amplitude, swirl, n0, grid)),
            DataSpec::Zero => Ok(AxisymField::zeros(grid)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RingParams {
    pub amplitude: f64,
    pub swirl: f64,
    pub ring_r: f64,
    pub ring_z: f64,
    pub core: f64,
}

/// Adds the velocity of `Psi = a r^2 exp(-((r-rc)^2 + (z-zc)^2)/d^2)`,
/// `vr = -Psi_z / r`, `vz = Psi_r / r`, in closed form.
fn gaussian_stream(a: f64, rc: f64, zc: f64, d: f64, r: f64, z: f64) -> (f64, f64, f64) {
    let d2 = d * d;
    let gauss = (-((r - rc).powi(2) + (z - zc).powi(2)) / d2).exp();
    let vr = a * r * gauss * 2.0 * (z - zc) / d2;
    let vz = a * gauss * (2.0 - 2.0 * r * (r - rc) / d2);
    (vr, vz, gauss)
}

/// Swirling vortex ring scaled down, if needed, so the three bounds of
/// [`check_n0_bounds`] hold with `n0`.
pub fn vortex_ring_swirl(p: &RingParams, n0: f64, grid: Grid) -> Result<AxisymField> {
    if p.ring_r <= 3.0 * p.core {
        return Err(Error::InvalidData(format!(
            "ring radius {} must exceed three core radii ({})",
            p.ring_r,
            3.0 * p.core
        )));
    }
    let field = AxisymField::from_fn(grid, |r, z| {
        let (vr, vz, gauss) = gaussian_stream(p.amplitude, p.ring_r, p.ring_z, p.core, r, z);
        [vr, p.swirl * (r / p.ring_r) * gauss, vz]
    });
    Ok(normalise(field, n0))
}

/// Sum of randomly placed Gaussian stream-function and swirl blobs.
pub fn stream_random(seed: u64, modes: usize, amplitude: f64, swirl: f64, n0: f64, grid: Grid) -> AxisymField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let zl = grid.z_max - grid.z_min;
    let blobs: Vec<[f64; 5]> = (0..modes)
        .map(|_| {
            let rc = grid.r_max * rng.random_range(0.2..0.6);
            let zc = grid.z_min + zl * rng.random_range(0.3..0.7);
            let d = grid.r_max * rng.random_range(0.05..0.12);
            let a = amplitude * rng.random_range(-1.0..1.0);
            let s = swirl * rng.random_range(-1.0..1.0);
            [rc, zc, d, a, s]
        })
        .collect();
    let field = AxisymField::from_fn(grid, |r, z| {
        let mut v = [0.0; 3];
        for &[rc, zc, d, a, s] in &blobs {
            let (vr, vz, gauss) = gaussian_stream(a, rc, zc, d, r, z);
            v[0] += vr;
            v[1] += s * (r / rc) * gauss;
            v[2] += vz;
        }
        v
    });
    normalise(field, n0)
}

fn normalise(mut field: AxisymField, n0: f64) -> AxisymField {
    let rep = check_n0_bounds(&field, n0);
    let worst = rep.sup_speed.max(rep.l2).max(rep.sup_rspeed);
    if worst <= n0 {
        return field;
    }
    // rounding can leave the scaled field an ulp above the bound
    let mut factor = n0 / worst;
    loop {
        let mut scaled = field.clone();
        scaled.scale(factor);
        if check_n0_bounds(&scaled, n0).pass {
            field = scaled;
            break;
        }
        factor *= 1.0 - 4.0 * f64::EPSILON;
    }
    field
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct N0Report {
    pub sup_speed: f64,
    /// `(sum 2 pi r |v|^2 dr dz)^(1/2)`, the norm of the 3D field.
    pub l2: f64,
    pub sup_rspeed: f64,
    /// Swirl-only reading of the weighted bound, for comparison.
    pub sup_rvtheta: f64,
    pub n0: f64,
    pub pass: bool,
}

pub fn check_n0_bounds(field: &AxisymField, n0: f64) -> N0Report {
    let g = &field.grid;
    let jmax = if g.is_periodic() { g.nz - 1 } else { g.nz };
    let (mut sup, mut rsup, mut rvt, mut l2) = (0.0_f64, 0.0_f64, 0.0_f64, 0.0);
    for i in 0..=g.nr {
        let r = g.r(i);
        for j in 0..=jmax {
            let s = field.speed_at(i, j);
            sup = sup.max(s);
            rsup = rsup.max(r * s);
            rvt = rvt.max(r * field.vtheta[[i, j]].abs());
            l2 += 2.0 * PI * r * s * s;
        }
    }
    let l2 = (l2 * g.dr * g.dz).sqrt();
    N0Report {
        sup_speed: sup,
        l2,
        sup_rspeed: rsup,
        sup_rvtheta: rvt,
        n0,
        pass: sup <= n0 && l2 <= n0 && rsup <= n0,
    }
}
