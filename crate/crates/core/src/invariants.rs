//! Executable bounds checked on a history or a per-step series.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::field::{max_rspeed, max_rvtheta, AxisymField, FieldRole, ScalarField};
use crate::history::SnapshotHistory;
use crate::solver::{max_divergence, mms_residual, ResidualReport, ResidualWindow};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InvariantConfig {
    /// Horizon of the short-time bound `sup |v| <= 2 N0`.
    pub h0: f64,
    /// Relative increase per step tolerated for `max r |vtheta|`.
    pub max_principle_tol: f64,
    /// Relative increase per step tolerated for the kinetic energy.
    pub energy_tol: f64,
    /// Divergence bound as a multiple of the projection tolerance.
    pub divergence_factor: f64,
    pub scaling_lambda: f64,
    /// Accepted band for residual ratio over `lambda^3`, e.g. `[7/8, 9/8]`.
    pub scaling_ratio_band: [f64; 2],
    pub rspeed_tol: f64,
    /// Radial cell counts of the convergence study.
    pub refinement_levels: Vec<usize>,
}

impl Default for InvariantConfig {
    fn default() -> Self {
        InvariantConfig {
            h0: 0.1,
            max_principle_tol: 1e-6,
            energy_tol: 1e-8,
            divergence_factor: 10.0,
            scaling_lambda: 2.0,
            scaling_ratio_band: [7.0 / 8.0, 9.0 / 8.0],
            rspeed_tol: 0.01,
            refinement_levels: vec![32, 64],
        }
    }
}

impl InvariantConfig {
    pub fn validate(&self) -> Result<()> {
        use crate::error::Error;
        let positive = [
            ("invariants.h0", self.h0),
            ("invariants.max_principle_tol", self.max_principle_tol),
            ("invariants.energy_tol", self.energy_tol),
            ("invariants.divergence_factor", self.divergence_factor),
            ("invariants.scaling_lambda", self.scaling_lambda),
            ("invariants.rspeed_tol", self.rspeed_tol),
        ];
        for (path, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(path, format!("must be positive, got {v}")));
            }
        }
        let [lo, hi] = self.scaling_ratio_band;
        if !(lo > 0.0 && hi > lo) {
            return Err(Error::config("invariants.scaling_ratio_band", "needs 0 < lower < upper"));
        }
        if self.refinement_levels.len() < 2 || self.refinement_levels.iter().any(|&n| n < 8) {
            return Err(Error::config("invariants.refinement_levels", "needs at least two levels of >= 8 cells"));
        }
        Ok(())
    }
}

/// One measured quantity against its bound. `margin` is positive when the
/// quantity is on the admissible side.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRow {
    pub check: String,
    pub quantity: String,
    pub value: f64,
    pub bound: f64,
    pub margin: f64,
    pub pass: bool,
}

impl CheckRow {
    pub fn at_most(check: &str, quantity: &str, value: f64, bound: f64) -> Self {
        CheckRow {
            check: check.into(),
            quantity: quantity.into(),
            value,
            bound,
            margin: bound - value,
            pass: value <= bound,
        }
    }

    pub fn at_least(check: &str, quantity: &str, value: f64, bound: f64) -> Self {
        CheckRow {
            check: check.into(),
            quantity: quantity.into(),
            value,
            bound,
            margin: value - bound,
            pass: value >= bound,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct CheckReport {
    pub rows: Vec<CheckRow>,
}

impl CheckReport {
    pub fn pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn extend(&mut self, other: CheckReport) {
        self.rows.extend(other.rows);
    }
}

/// Largest relative increase between consecutive entries, divided by the
/// number of steps separating them. `steps[k]` is the step index of entry `k`.
pub fn max_relative_increase(values: &[f64], steps: &[usize]) -> f64 {
    let mut worst = 0.0_f64;
    for k in 1..values.len() {
        let (a, b) = (values[k - 1], values[k]);
        let n = steps[k].saturating_sub(steps[k - 1]).max(1) as f64;
        let scale = a.abs().max(f64::MIN_POSITIVE);
        if b > a {
            worst = worst.max((b - a) / scale / n);
        }
    }
    worst
}

fn snapshot_steps(history: &SnapshotHistory) -> Vec<usize> {
    (0..history.len()).collect()
}

/// `max r |vtheta|` bounded by `n0` and non-increasing within `tol` per step.
pub fn check_max_principle_series(values: &[f64], steps: &[usize], n0: f64, tol: f64) -> CheckReport {
    let peak = values.iter().fold(0.0_f64, |m, v| m.max(*v));
    CheckReport {
        rows: vec![
            CheckRow::at_most("max_principle", "max r|vtheta|", peak, n0),
            CheckRow::at_most("max_principle", "relative increase per step", max_relative_increase(values, steps), tol),
        ],
    }
}

pub fn check_max_principle(history: &SnapshotHistory, n0: f64, tol: f64) -> CheckReport {
    let values: Vec<f64> = history.iter().map(|s| max_rvtheta(&s.field)).collect();
    check_max_principle_series(&values, &snapshot_steps(history), n0, tol)
}

/// Sup of the speed up to `h0` against `2 n0`, plus the empirical horizon:
/// the last stored time before the bound first fails.
pub fn check_short_time_bound(history: &SnapshotHistory, n0: f64, h0: f64) -> CheckReport {
    let mut sup = 0.0_f64;
    let mut empirical = 0.0_f64;
    let mut broken = false;
    for s in history.iter() {
        let q = s.running_max_speed;
        if s.t <= h0 {
            sup = sup.max(q);
        }
        if !broken {
            if q <= 2.0 * n0 {
                empirical = s.t;
            } else {
                broken = true;
            }
        }
    }
    CheckReport {
        rows: vec![
            CheckRow::at_most("short_time", "sup |v| for t <= h0", sup, 2.0 * n0),
            CheckRow {
                pass: empirical > 0.0,
                ..CheckRow::at_least("short_time", "empirical h0", empirical, 0.0)
            },
        ],
    }
}

pub fn check_energy_series(values: &[f64], steps: &[usize], tol: f64) -> CheckReport {
    CheckReport {
        rows: vec![CheckRow::at_most(
            "energy",
            "relative increase per step",
            max_relative_increase(values, steps),
            tol,
        )],
    }
}

pub fn check_energy(history: &SnapshotHistory, tol: f64) -> CheckReport {
    let values: Vec<f64> = history.iter().map(|s| s.field.kinetic_energy()).collect();
    check_energy_series(&values, &snapshot_steps(history), tol)
}

pub fn check_divergence(history: &SnapshotHistory, bound: f64) -> CheckReport {
    let worst = history.iter().fold(0.0_f64, |m, s| m.max(max_divergence(&s.field)));
    CheckReport {
        rows: vec![CheckRow::at_most("divergence", "sup divergence", worst, bound)],
    }
}

/// Result of comparing a history with its rescaled copy.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingOutcome {
    pub original: ResidualReport,
    pub rescaled: ResidualReport,
    /// `rescaled / original` of the largest momentum residual.
    pub residual_ratio: f64,
    /// Largest relative change of `max r |v|` over the snapshots.
    pub rspeed_change: f64,
    pub report: CheckReport,
}

/// Resamples `lambda v(lambda x, lambda^2 t)` (pressure `lambda^2 p`) on the
/// same grid. Nodes whose image leaves the domain are zeroed; they lie outside
/// the region handed to the residual.
pub fn rescale_snapshots(history: &SnapshotHistory, lambda: f64) -> Result<SnapshotHistory> {
    let mut out = SnapshotHistory::new(history.len());
    for s in history.iter() {
        let g = s.field.grid;
        let mut f = AxisymField::zeros(g);
        let mut p = ScalarField::zeros(g, FieldRole::Pressure);
        for i in 0..=g.nr {
            for j in 0..=g.nz {
                let (r, z) = (lambda * g.r(i), lambda * g.z(j));
                if let Ok(v) = s.field.interpolate(r, z) {
                    f.vr[[i, j]] = lambda * v[0];
                    f.vtheta[[i, j]] = lambda * v[1];
                    f.vz[[i, j]] = lambda * v[2];
                    let stencil = crate::field::Bilinear::locate(&g, r, z)?;
                    p.values[[i, j]] = lambda * lambda * stencil.apply(&s.pressure.values);
                }
            }
        }
        out.push(s.t / (lambda * lambda), f, p)?;
    }
    Ok(out)
}

fn max_rspeed_within(f: &AxisymField, r_max: f64, z: (f64, f64)) -> f64 {
    let g = f.grid;
    let mut m = 0.0_f64;
    for i in 0..=g.nr {
        let r = g.r(i);
        if r > r_max * (1.0 + 1e-12) {
            continue;
        }
        for j in 0..=g.nz {
            let zz = g.z(j);
            if zz < z.0 - 1e-12 || zz > z.1 + 1e-12 {
                continue;
            }
            m = m.max(r * f.speed_at(i, j));
        }
    }
    m
}

/// Residual covariance under `v -> lambda v(lambda x, lambda^2 t)`.
///
/// `window` selects the original region; the rescaled residual is taken over
/// its image (`r / lambda`, `z / lambda`, `t / lambda^2`).
pub fn check_scaling_covariance(
    history: &SnapshotHistory,
    lambda: f64,
    window: &ResidualWindow,
    band: [f64; 2],
    rspeed_tol: f64,
) -> Result<ScalingOutcome> {
    let g = history.first().ok_or(crate::error::Error::EmptyHistory)?.field.grid;
    let r_limit = window.r_limit.unwrap_or(g.r_max);
    let z_limits = window.z_limits.unwrap_or((g.z_min, g.z_max));
    let original_window = ResidualWindow {
        r_limit: Some(r_limit),
        z_limits: Some(z_limits),
        ..*window
    };
    let l2 = lambda * lambda;
    let image_window = ResidualWindow {
        t_start: window.t_start / l2,
        t_end: window.t_end / l2,
        r_limit: Some(r_limit / lambda),
        z_limits: Some((z_limits.0 / lambda, z_limits.1 / lambda)),
        mu: window.mu,
    };
    let scaled = rescale_snapshots(history, lambda)?;
    let original = mms_residual(history, &original_window)?;
    let rescaled = mms_residual(&scaled, &image_window)?;
    let residual_ratio = rescaled.momentum_sup() / original.momentum_sup();

    let mut rspeed_change = 0.0_f64;
    for (a, b) in history.iter().zip(scaled.iter()) {
        let ra = max_rspeed(&a.field).value;
        let rb = max_rspeed_within(&b.field, g.r_max / lambda, (g.z_min / lambda, g.z_max / lambda));
        if ra > 0.0 {
            rspeed_change = rspeed_change.max((rb - ra).abs() / ra);
        } else if rb > 0.0 {
            rspeed_change = f64::INFINITY;
        }
    }
    let l3 = lambda.powi(3);
    let normalised = residual_ratio / l3;
    let report = CheckReport {
        rows: vec![
            CheckRow::at_least("scaling", "residual ratio / lambda^3 (lower)", normalised, band[0]),
            CheckRow::at_most("scaling", "residual ratio / lambda^3 (upper)", normalised, band[1]),
            CheckRow::at_most("scaling", "relative change of max r|v|", rspeed_change, rspeed_tol),
        ],
    };
    Ok(ScalingOutcome {
        original,
        rescaled,
        residual_ratio,
        rspeed_change,
        report,
    })
}
