//! Almost-maximal points, parabolic-cube rescaling and closeness to a constant.
//!
//! A zoom at `(x0, t0)` with speed `Q` samples
//! `v~(x~, t~) = v(x~ / Q + x0, t~ / Q^2 + t0) / Q` on the normalised parabolic
//! cube `[-L, L]^3 x [-L^2, 0]`, with `x0 = (r0, 0, z0)`.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{max_rspeed, max_speed};
use crate::frame::{dot, norm, CylindricalFrame};
use crate::history::SnapshotHistory;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Mode {
    /// `|v(x0, t0)|` against the running sup of `|v|`.
    A,
    /// `r0 |v(x0, t0)|` against the running sup of `r |v|`.
    B,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::A => "A",
            Mode::B => "B",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZoomParameters {
    pub mode: Mode,
    pub t0: f64,
    pub r0: f64,
    pub z0: f64,
    pub q: f64,
    /// `r0 Q`.
    pub alpha: f64,
    /// `r0 / sqrt(alpha)`.
    pub beta: f64,
    pub ratio: f64,
}

impl ZoomParameters {
    pub fn new(mode: Mode, t0: f64, r0: f64, z0: f64, q: f64, ratio: f64) -> Self {
        let alpha = r0 * q;
        let beta = if alpha > 0.0 { r0 / alpha.sqrt() } else { 0.0 };
        ZoomParameters {
            mode,
            t0,
            r0,
            z0,
            q,
            alpha,
            beta,
            ratio,
        }
    }

    pub fn x0(&self) -> [f64; 3] {
        [self.r0, 0.0, self.z0]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MicroscopeConfig {
    pub epsilon: f64,
    pub sigma0: f64,
    pub holder_alpha: f64,
    pub ratio_threshold: f64,
    /// Samples per spatial edge (odd, so the centre is a sample).
    pub cube_resolution: usize,
    pub time_resolution: usize,
}

impl Default for MicroscopeConfig {
    fn default() -> Self {
        MicroscopeConfig {
            epsilon: 0.1,
            sigma0: 10.0,
            holder_alpha: 0.5,
            ratio_threshold: 0.25,
            cube_resolution: 9,
            time_resolution: 5,
        }
    }
}

impl MicroscopeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::config("microscope.epsilon", "must be positive"));
        }
        if !(self.sigma0 > 0.0 && self.sigma0.is_finite()) {
            return Err(Error::config("microscope.sigma0", "must be positive"));
        }
        if !(self.holder_alpha > 0.0 && self.holder_alpha < 1.0) {
            return Err(Error::config("microscope.holder_alpha", "must lie in (0, 1)"));
        }
        if !(self.ratio_threshold > 0.0 && self.ratio_threshold < 1.0) {
            return Err(Error::config("microscope.ratio_threshold", "must lie in (0, 1)"));
        }
        if self.cube_resolution < 5 || self.cube_resolution.is_multiple_of(2) {
            return Err(Error::config("microscope.cube_resolution", "must be odd and at least 5"));
        }
        if self.time_resolution < 3 {
            return Err(Error::config("microscope.time_resolution", "must be at least 3"));
        }
        Ok(())
    }

    /// Cube half-width `L` for a zoom, and whether the cap `alpha / 2` applied.
    pub fn half_width(&self, zoom: &ZoomParameters) -> (f64, bool) {
        let nominal = 1.0 / (self.sigma0 * self.epsilon);
        let cap = 0.5 * zoom.alpha;
        if zoom.alpha > 0.0 && nominal > cap {
            (cap, true)
        } else {
            (nominal, false)
        }
    }
}

/// Candidates whose maximality ratio reaches `ratio_threshold`, one per snapshot.
pub fn find_almost_maximal(history: &SnapshotHistory, mode: Mode, ratio_threshold: f64) -> Result<Vec<ZoomParameters>> {
    if history.is_empty() {
        return Err(Error::EmptyHistory);
    }
    let mut out = Vec::new();
    for snap in history.iter() {
        let (node, running) = match mode {
            Mode::A => (max_speed(&snap.field), snap.running_max_speed),
            Mode::B => (max_rspeed(&snap.field), snap.running_max_rspeed),
        };
        let ratio = if running > 0.0 { (node.value / running).min(1.0) } else { 0.0 };
        if ratio >= ratio_threshold && ratio > 0.0 {
            let q = snap.field.speed_at(node.i, node.j);
            out.push(ZoomParameters::new(mode, snap.t, node.r, node.z, q, ratio));
        }
    }
    Ok(out)
}

/// Rescaled samples on the normalised cube.
#[derive(Debug, Clone, PartialEq)]
pub struct CubeSample {
    pub zoom: ZoomParameters,
    pub half_width: f64,
    pub n_space: usize,
    pub n_time: usize,
    /// Indexed `((t * n + a) * n + b) * n + c` for `(t~, x~1, x~2, x~3)`.
    pub values: Vec<[f64; 3]>,
    /// Azimuthal component of each sample.
    pub swirl: Vec<f64>,
    pub valid: Vec<bool>,
    pub capped: bool,
    /// The cube reaches the axis (`L >= alpha`).
    pub crosses_axis: bool,
}

impl CubeSample {
    #[inline]
    pub fn index(&self, t: usize, a: usize, b: usize, c: usize) -> usize {
        ((t * self.n_space + a) * self.n_space + b) * self.n_space + c
    }

    pub fn space_step(&self) -> f64 {
        2.0 * self.half_width / (self.n_space - 1) as f64
    }

    pub fn time_step(&self) -> f64 {
        self.half_width * self.half_width / (self.n_time - 1) as f64
    }

    /// Normalised coordinates `(x~, t~)` of a sample.
    pub fn coords(&self, t: usize, a: usize, b: usize, c: usize) -> ([f64; 3], f64) {
        let h = self.space_step();
        let l = self.half_width;
        (
            [-l + a as f64 * h, -l + b as f64 * h, -l + c as f64 * h],
            -l * l + t as f64 * self.time_step(),
        )
    }

    pub fn center(&self) -> usize {
        let m = (self.n_space - 1) / 2;
        self.index(self.n_time - 1, m, m, m)
    }

    pub fn masked_fraction(&self) -> f64 {
        self.valid.iter().filter(|v| !**v).count() as f64 / self.valid.len() as f64
    }
}

/// Samples `Q^{-1} v(x~ / Q + x0, t~ / Q^2 + t0)` on the cube. Points outside
/// the grid or the stored time span are masked.
pub fn rescale_history(history: &SnapshotHistory, zoom: &ZoomParameters, config: &MicroscopeConfig) -> Result<CubeSample> {
    if zoom.q.is_nan() || zoom.q <= 0.0 {
        return Err(Error::ZeroSpeed);
    }
    let (half_width, capped) = config.half_width(zoom);
    let n = config.cube_resolution;
    let nt = config.time_resolution;
    let total = nt * n * n * n;
    let mut cube = CubeSample {
        zoom: *zoom,
        half_width,
        n_space: n,
        n_time: nt,
        values: vec![[0.0; 3]; total],
        swirl: vec![0.0; total],
        valid: vec![false; total],
        capped,
        crosses_axis: half_width >= zoom.alpha,
    };
    let x0 = zoom.x0();
    let q = zoom.q;
    for t in 0..nt {
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    let (xt, tt) = cube.coords(t, a, b, c);
                    let x = [xt[0] / q + x0[0], xt[1] / q + x0[1], xt[2] / q + x0[2]];
                    let time = tt / (q * q) + zoom.t0;
                    let k = cube.index(t, a, b, c);
                    if let Ok(v) = history.sample(x, time) {
                        let v = [v[0] / q, v[1] / q, v[2] / q];
                        cube.values[k] = v;
                        cube.swirl[k] = dot(v, CylindricalFrame::at(x).e_theta);
                        cube.valid[k] = true;
                    }
                }
            }
        }
    }
    if !cube.valid.iter().any(|v| *v) {
        return Err(Error::FullyMasked);
    }
    Ok(cube)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosenessReport {
    pub c_star: [f64; 3],
    /// Mean over valid samples, reported for comparison with the centre value.
    pub c_mean: [f64; 3],
    pub sup_dist: f64,
    pub grad_sup: f64,
    pub hess_sup: f64,
    pub dt_sup: f64,
    pub holder_seminorm: f64,
    pub total: f64,
    pub swirl_ratio: f64,
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

struct Stencil<'a> {
    cube: &'a CubeSample,
}

impl Stencil<'_> {
    fn at(&self, t: usize, idx: [isize; 3]) -> Option<[f64; 3]> {
        let n = self.cube.n_space as isize;
        if idx.iter().any(|&v| v < 0 || v >= n) {
            return None;
        }
        let k = self.cube.index(t, idx[0] as usize, idx[1] as usize, idx[2] as usize);
        self.cube.valid[k].then(|| self.cube.values[k])
    }

    fn shifted(idx: [isize; 3], d: usize, s: isize) -> [isize; 3] {
        let mut out = idx;
        out[d] += s;
        out
    }

    /// Jacobian `J[d][comp]` by centred differences.
    fn gradient(&self, t: usize, idx: [isize; 3], h: f64) -> Option<[[f64; 3]; 3]> {
        let mut j = [[0.0; 3]; 3];
        for (d, row) in j.iter_mut().enumerate() {
            let p = self.at(t, Self::shifted(idx, d, 1))?;
            let m = self.at(t, Self::shifted(idx, d, -1))?;
            for comp in 0..3 {
                row[comp] = (p[comp] - m[comp]) / (2.0 * h);
            }
        }
        Some(j)
    }

    /// All second derivatives `H[d1][d2][comp]`, flattened.
    fn hessian(&self, t: usize, idx: [isize; 3], h: f64) -> Option<[f64; 27]> {
        let f0 = self.at(t, idx)?;
        let mut out = [0.0; 27];
        for d1 in 0..3 {
            for d2 in d1..3 {
                let val: [f64; 3] = if d1 == d2 {
                    let p = self.at(t, Self::shifted(idx, d1, 1))?;
                    let m = self.at(t, Self::shifted(idx, d1, -1))?;
                    std::array::from_fn(|c| (p[c] - 2.0 * f0[c] + m[c]) / (h * h))
                } else {
                    let pp = self.at(t, Self::shifted(Self::shifted(idx, d1, 1), d2, 1))?;
                    let pm = self.at(t, Self::shifted(Self::shifted(idx, d1, 1), d2, -1))?;
                    let mp = self.at(t, Self::shifted(Self::shifted(idx, d1, -1), d2, 1))?;
                    let mm = self.at(t, Self::shifted(Self::shifted(idx, d1, -1), d2, -1))?;
                    std::array::from_fn(|c| (pp[c] - pm[c] - mp[c] + mm[c]) / (4.0 * h * h))
                };
                for c in 0..3 {
                    out[(d1 * 3 + d2) * 3 + c] = val[c];
                    out[(d2 * 3 + d1) * 3 + c] = val[c];
                }
            }
        }
        Some(out)
    }
}

fn frob(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn parabolic_distance(a: ([f64; 3], f64), b: ([f64; 3], f64)) -> f64 {
    norm(sub(a.0, b.0)).max((a.1 - b.1).abs().sqrt())
}

/// A space-time point with a sampled value.
type Tagged<const N: usize> = (([f64; 3], f64), [f64; N]);

/// Largest Holder quotient over all pairs of `(point, value)` entries.
fn holder_max<const N: usize>(points: &[Tagged<N>], exponent: f64) -> f64 {
    let mut best = 0.0_f64;
    for (k, (pa, va)) in points.iter().enumerate() {
        for (pb, vb) in &points[k + 1..] {
            let d = parabolic_distance(*pa, *pb);
            if d > 0.0 {
                let diff: f64 = va.iter().zip(vb.iter()).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
                best = best.max(diff / d.powf(exponent));
            }
        }
    }
    best
}

fn valid_extent(cube: &CubeSample) -> ([usize; 3], usize) {
    let n = cube.n_space;
    let mut seen = [vec![false; n], vec![false; n], vec![false; n]];
    let mut levels = vec![false; cube.n_time];
    for (t, level) in levels.iter_mut().enumerate() {
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    if cube.valid[cube.index(t, a, b, c)] {
                        seen[0][a] = true;
                        seen[1][b] = true;
                        seen[2][c] = true;
                        *level = true;
                    }
                }
            }
        }
    }
    let count = |v: &Vec<bool>| v.iter().filter(|x| **x).count();
    ([count(&seen[0]), count(&seen[1]), count(&seen[2])], count(&levels))
}

/// Discrete `C^{2,1,alpha}` distance of the cube to its centre value.
pub fn constant_closeness(cube: &CubeSample, config: &MicroscopeConfig) -> Result<ClosenessReport> {
    let (axes, levels) = valid_extent(cube);
    if axes.iter().any(|&k| k < 5) || levels < 3 {
        return Err(Error::InsufficientSamples(format!(
            "valid samples per axis {axes:?}, time levels {levels}"
        )));
    }
    let center = cube.center();
    if !cube.valid[center] {
        return Err(Error::InsufficientSamples("centre sample is masked".into()));
    }
    let c_star = cube.values[center];
    let n = cube.n_space;
    let (h, ht) = (cube.space_step(), cube.time_step());
    let st = Stencil { cube };

    let mut sum = [0.0; 3];
    let mut count = 0usize;
    let (mut sup_dist, mut grad_sup, mut hess_sup, mut dt_sup, mut swirl_ratio) = (0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64);
    let mut hess_pts: Vec<Tagged<27>> = Vec::new();
    let mut dt_pts: Vec<Tagged<3>> = Vec::new();

    for t in 0..cube.n_time {
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    let k = cube.index(t, a, b, c);
                    if !cube.valid[k] {
                        continue;
                    }
                    let v = cube.values[k];
                    for d in 0..3 {
                        sum[d] += v[d];
                    }
                    count += 1;
                    sup_dist = sup_dist.max(norm(sub(v, c_star)));
                    swirl_ratio = swirl_ratio.max(cube.swirl[k].abs());
                    let idx = [a as isize, b as isize, c as isize];
                    let pos = cube.coords(t, a, b, c);
                    if let Some(j) = st.gradient(t, idx, h) {
                        grad_sup = grad_sup.max(frob(&j.concat()));
                    }
                    if let Some(hs) = st.hessian(t, idx, h) {
                        hess_sup = hess_sup.max(frob(&hs));
                        hess_pts.push((pos, hs));
                    }
                    if t > 0 && t + 1 < cube.n_time {
                        let kp = cube.index(t + 1, a, b, c);
                        let km = cube.index(t - 1, a, b, c);
                        if cube.valid[kp] && cube.valid[km] {
                            let d = sub(cube.values[kp], cube.values[km]).map(|x| x / (2.0 * ht));
                            dt_sup = dt_sup.max(norm(d));
                            dt_pts.push((pos, d));
                        }
                    }
                }
            }
        }
    }
    let holder = holder_max(&hess_pts, config.holder_alpha) + holder_max(&dt_pts, config.holder_alpha);
    let c_mean = sum.map(|s| s / count as f64);
    Ok(ClosenessReport {
        c_star,
        c_mean,
        sup_dist,
        grad_sup,
        hess_sup,
        dt_sup,
        holder_seminorm: holder,
        total: sup_dist + grad_sup + hess_sup + dt_sup + holder,
        swirl_ratio,
    })
}

/// `max |v~ . e_theta|` over the valid samples.
pub fn swirl_smallness(cube: &CubeSample) -> f64 {
    cube.swirl
        .iter()
        .zip(cube.valid.iter())
        .filter(|(_, ok)| **ok)
        .fold(0.0_f64, |m, (s, _)| m.max(s.abs()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub zoom: ZoomParameters,
    pub closeness: ClosenessReport,
    pub half_width: f64,
    pub masked_fraction: f64,
    pub capped: bool,
    pub crosses_axis: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MicroscopeReport {
    pub rows: Vec<ReportRow>,
    /// Candidates whose cube had too few valid samples.
    pub skipped: usize,
}

impl MicroscopeReport {
    /// The row of `mode` with the latest `t0` (the largest `alpha` among ties).
    pub fn latest(&self, mode: Mode) -> Option<&ReportRow> {
        self.rows
            .iter()
            .filter(|r| r.zoom.mode == mode)
            .fold(None, |best: Option<&ReportRow>, r| match best {
                Some(b) if b.zoom.t0 >= r.zoom.t0 => Some(b),
                _ => Some(r),
            })
    }
}

/// Candidates of both modes with their closeness, sorted by `alpha` descending.
pub fn microscope_report(history: &SnapshotHistory, config: &MicroscopeConfig) -> Result<MicroscopeReport> {
    config.validate()?;
    if history.len() < 2 {
        return Err(Error::InsufficientSnapshots {
            needed: 2,
            found: history.len(),
        });
    }
    let mut report = MicroscopeReport::default();
    for mode in [Mode::A, Mode::B] {
        for zoom in find_almost_maximal(history, mode, config.ratio_threshold)? {
            let cube = match rescale_history(history, &zoom, config) {
                Ok(c) => c,
                Err(Error::FullyMasked) => {
                    report.skipped += 1;
                    continue;
                }
                Err(e) => return Err(e),
            };
            match constant_closeness(&cube, config) {
                Ok(closeness) => report.rows.push(ReportRow {
                    zoom,
                    closeness,
                    half_width: cube.half_width,
                    masked_fraction: cube.masked_fraction(),
                    capped: cube.capped,
                    crosses_axis: cube.crosses_axis,
                }),
                Err(Error::InsufficientSamples(_)) => report.skipped += 1,
                Err(e) => return Err(e),
            }
        }
    }
    report.rows.sort_by(|x, y| {
        y.zoom
            .alpha
            .partial_cmp(&x.zoom.alpha)
            .unwrap_or(Ordering::Equal)
            .then(x.zoom.mode.cmp(&y.zoom.mode))
            .then(x.zoom.t0.partial_cmp(&y.zoom.t0).unwrap_or(Ordering::Equal))
    });
    Ok(report)
}
