use axns_core::field::{AxisymField, FieldRole, ScalarField};
use axns_core::frame::{reconstruct_cartesian, CylindricalFrame};
use axns_core::grid::make_grid;
use axns_core::initdata::{lamb_oseen_vtheta, vortex_ring_swirl, RingParams};
use axns_core::invariants::rescale_snapshots;
use axns_core::microscope::{
    constant_closeness, find_almost_maximal, microscope_report, rescale_history, MicroscopeConfig, Mode,
    ZoomParameters,
};
use axns_core::run::lamb_oseen_history;
use axns_core::SnapshotHistory;
use proptest::prelude::*;

const CIRCULATION: f64 = 20.0;

fn vortex_history() -> SnapshotHistory {
    let g = make_grid(128, 32, 4.0, -1.0, 1.0).unwrap();
    let times: Vec<f64> = (0..=40).map(|k| 0.1 + 0.005 * k as f64).collect();
    lamb_oseen_history(g, CIRCULATION, 1.0, &times).unwrap()
}

fn config() -> MicroscopeConfig {
    // half-width 0.5: the cubes below stay inside the stored time span
    MicroscopeConfig {
        epsilon: 0.2,
        cube_resolution: 7,
        time_resolution: 3,
        ..Default::default()
    }
}

fn rotate(phi: f64, v: [f64; 3]) -> [f64; 3] {
    let (s, c) = phi.sin_cos();
    [c * v[0] - s * v[1], s * v[0] + c * v[1], v[2]]
}

#[test]
fn cube_matches_the_analytic_zoom() {
    let h = vortex_history();
    let (t0, r0) = (0.3, 0.8);
    let q = lamb_oseen_vtheta(CIRCULATION, 1.0, t0, r0);
    let zoom = ZoomParameters::new(Mode::A, t0, r0, 0.0, q, 1.0);
    let cube = rescale_history(&h, &zoom, &config()).unwrap();
    assert_eq!(cube.masked_fraction(), 0.0);
    let n = cube.n_space;
    let mut worst = 0.0_f64;
    for t in 0..cube.n_time {
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    let (y, s) = cube.coords(t, a, b, c);
                    let x = [r0 + y[0] / q, y[1] / q, y[2] / q];
                    let r = x[0].hypot(x[1]);
                    let speed = lamb_oseen_vtheta(CIRCULATION, 1.0, t0 + s / (q * q), r);
                    let exact = [-speed * x[1] / r / q, speed * x[0] / r / q, 0.0];
                    let got = cube.values[cube.index(t, a, b, c)];
                    for k in 0..3 {
                        worst = worst.max((got[k] - exact[k]).abs());
                    }
                }
            }
        }
    }
    assert!(worst < 2e-3, "{worst:e}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn zoom_is_invariant_under_the_equation_scaling(lambda in 1.2_f64..2.0) {
        let h = vortex_history();
        let scaled = rescale_snapshots(&h, lambda).unwrap();
        let (t0, r0) = (0.3, 1.0);
        let q = lamb_oseen_vtheta(CIRCULATION, 1.0, t0, r0);
        let cfg = config();
        let a = rescale_history(&h, &ZoomParameters::new(Mode::A, t0, r0, 0.0, q, 1.0), &cfg).unwrap();
        let zoom = ZoomParameters::new(Mode::A, t0 / (lambda * lambda), r0 / lambda, 0.0, lambda * q, 1.0);
        let b = rescale_history(&scaled, &zoom, &cfg).unwrap();
        prop_assert_eq!(a.half_width, b.half_width);
        for ((va, vb), (ka, kb)) in a.values.iter().zip(&b.values).zip(a.valid.iter().zip(&b.valid)) {
            prop_assert_eq!(ka, kb);
            if *ka {
                for k in 0..3 {
                    prop_assert!((va[k] - vb[k]).abs() < 5e-3, "{} vs {}", va[k], vb[k]);
                }
            }
        }
    }

    #[test]
    fn raising_the_threshold_never_adds_candidates(lo in 0.05_f64..0.95, step in 0.0_f64..0.5, seed in 0_u64..1000) {
        let g = make_grid(24, 24, 4.0, -2.0, 2.0).unwrap();
        let base = vortex_ring_swirl(
            &RingParams { amplitude: 1.0, swirl: 0.5, ring_r: 2.0, ring_z: 0.0, core: 0.5 },
            1e9,
            g,
        )
        .unwrap();
        let mut h = SnapshotHistory::new(16);
        let mut x = seed as f64 + 0.5;
        for k in 0..10 {
            x = (x * 7.31).fract();
            let mut f = base.clone();
            f.scale(0.2 + x);
            h.push(k as f64 * 0.1, f, ScalarField::zeros(g, FieldRole::Pressure)).unwrap();
        }
        let hi = (lo + step).min(1.0);
        for mode in [Mode::A, Mode::B] {
            let loose = find_almost_maximal(&h, mode, lo).unwrap();
            let strict = find_almost_maximal(&h, mode, hi).unwrap();
            prop_assert!(strict.len() <= loose.len());
            for z in &strict {
                prop_assert!(loose.iter().any(|w| w.t0 == z.t0 && w.r0 == z.r0 && w.z0 == z.z0));
            }
        }
    }

    #[test]
    fn reconstruction_commutes_with_rotation(phi in -3.2_f64..3.2, r in 0.0_f64..3.9, z in -0.9_f64..0.9) {
        let h = vortex_history();
        let f = &h.last().unwrap().field;
        let x = [r, 0.0, z];
        let v = reconstruct_cartesian(f, x).unwrap();
        let w = reconstruct_cartesian(f, rotate(phi, x)).unwrap();
        let rv = rotate(phi, v);
        for k in 0..3 {
            prop_assert!((w[k] - rv[k]).abs() < 1e-12);
        }
        let frame = CylindricalFrame::at(rotate(phi, x));
        let back = frame.to_cylindrical(w);
        prop_assert!((back[1] - f.interpolate(r, z).unwrap()[1]).abs() < 1e-12);
    }

    #[test]
    fn closeness_is_invariant_under_rotation_about_the_axis(phi in -3.2_f64..3.2) {
        let h = vortex_history();
        let (t0, r0) = (0.3, 0.8);
        let q = lamb_oseen_vtheta(CIRCULATION, 1.0, t0, r0);
        let cfg = config();
        let zoom = ZoomParameters::new(Mode::A, t0, r0, 0.0, q, 1.0);
        let cube = rescale_history(&h, &zoom, &cfg).unwrap();
        // the same cube, sampled after rotating every point about the z-axis
        let mut turned = cube.clone();
        let n = cube.n_space;
        for t in 0..cube.n_time {
            for a in 0..n {
                for b in 0..n {
                    for c in 0..n {
                        let (y, s) = cube.coords(t, a, b, c);
                        let x = rotate(phi, [r0 + y[0] / q, y[1] / q, y[2] / q]);
                        let v = h.sample(x, t0 + s / (q * q)).unwrap();
                        turned.values[cube.index(t, a, b, c)] = [v[0] / q, v[1] / q, v[2] / q];
                    }
                }
            }
        }
        let a = constant_closeness(&cube, &cfg).unwrap();
        let b = constant_closeness(&turned, &cfg).unwrap();
        prop_assert!((a.total - b.total).abs() <= 1e-9 * a.total.max(1.0), "{} vs {}", a.total, b.total);
        prop_assert!((a.sup_dist - b.sup_dist).abs() <= 1e-9);
    }
}

#[test]
fn every_candidate_centre_has_unit_speed() {
    let h = vortex_history();
    let cfg = config();
    let mut count = 0;
    for mode in [Mode::A, Mode::B] {
        for zoom in find_almost_maximal(&h, mode, cfg.ratio_threshold).unwrap() {
            let cube = rescale_history(&h, &zoom, &cfg).unwrap();
            let v = cube.values[cube.center()];
            let s = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
            assert!((s - 1.0).abs() < 1e-12, "{s}");
            count += 1;
        }
    }
    assert!(count >= 40);
}

#[test]
fn report_rows_are_ordered_and_complete() {
    // a strong ring decaying in amplitude, so the maxima sit inside the domain
    let g = make_grid(48, 48, 4.0, -2.0, 2.0).unwrap();
    let base = vortex_ring_swirl(
        &RingParams { amplitude: 8.0, swirl: 1.0, ring_r: 2.0, ring_z: 0.0, core: 0.5 },
        1e9,
        g,
    )
    .unwrap();
    let mut h = SnapshotHistory::new(32);
    for k in 0..20 {
        let mut f = base.clone();
        f.scale(1.0 / (1.0 + k as f64 * 0.05));
        h.push(k as f64 * 0.01, f, ScalarField::zeros(g, FieldRole::Pressure)).unwrap();
    }
    let rep = microscope_report(&h, &config()).unwrap();
    assert!(rep.rows.len() >= 10, "{} rows, {} skipped", rep.rows.len(), rep.skipped);
    for w in rep.rows.windows(2) {
        assert!(w[0].zoom.alpha >= w[1].zoom.alpha);
    }
    for row in &rep.rows {
        assert!(row.closeness.total.is_finite() && row.closeness.total >= 0.0);
        assert!((0.0..=1.0).contains(&row.masked_fraction));
        assert_eq!(row.crosses_axis, row.half_width >= row.zoom.alpha);
    }
    let latest = rep.latest(Mode::B).unwrap();
    assert!(rep.rows.iter().filter(|r| r.zoom.mode == Mode::B).all(|r| r.zoom.t0 <= latest.zoom.t0));
}

#[test]
fn uniform_axial_flow_is_exactly_constant_after_zooming() {
    let g = make_grid(16, 16, 2.0, -1.0, 1.0).unwrap();
    let mut h = SnapshotHistory::new(8);
    for k in 0..4 {
        h.push(k as f64, AxisymField::from_fn(g, |_, _| [0.0, 0.0, -3.0]), ScalarField::zeros(g, FieldRole::Pressure))
            .unwrap();
    }
    let cfg = MicroscopeConfig {
        epsilon: 1.0,
        ..Default::default()
    };
    let zoom = ZoomParameters::new(Mode::A, 3.0, 1.0, 0.0, 3.0, 1.0);
    let cube = rescale_history(&h, &zoom, &cfg).unwrap();
    let rep = constant_closeness(&cube, &cfg).unwrap();
    assert_eq!(rep.total, 0.0);
    assert_eq!(rep.swirl_ratio, 0.0);
    assert_eq!(rep.c_star, [0.0, 0.0, -1.0]);
}
