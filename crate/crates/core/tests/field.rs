use axns_core::field::{divergence, max_rspeed, max_speed};
use axns_core::grid::make_grid;
use axns_core::initdata::{vortex_ring_swirl, RingParams};
use axns_core::AxisymField;
use proptest::prelude::*;

proptest! {
    #[test]
    fn interpolation_reproduces_bilinear_functions(
        c in prop::array::uniform4(-2.0_f64..2.0),
        r in 0.0_f64..3.0,
        z in -1.0_f64..1.0,
    ) {
        let g = make_grid(12, 9, 3.0, -1.0, 1.0).unwrap();
        let f = |r: f64, z: f64| c[0] + c[1] * r + c[2] * z + c[3] * r * z;
        let field = AxisymField::from_fn(g, |r, z| [f(r, z), 2.0 * f(r, z), -f(r, z)]);
        let v = field.interpolate(r, z).unwrap();
        prop_assert!((v[0] - f(r, z)).abs() < 1e-12);
        prop_assert!((v[1] - 2.0 * f(r, z)).abs() < 1e-12);
        prop_assert!((v[2] + f(r, z)).abs() < 1e-12);
    }

    #[test]
    fn maxima_are_deterministic_scans(seed in 0_u64..10_000) {
        let g = make_grid(10, 10, 2.0, -1.0, 1.0).unwrap();
        let mut x = seed as f64 * 0.618 + 0.1;
        let field = AxisymField::from_fn(g, |_, _| {
            x = (x * 9.73).fract();
            [0.0, x, 0.5 - x]
        });
        let a = max_speed(&field);
        prop_assert_eq!(a, max_speed(&field));
        let mut scan = 0.0_f64;
        let mut rscan = 0.0_f64;
        for i in 0..=g.nr {
            for j in 0..=g.nz {
                scan = scan.max(field.speed_at(i, j));
                rscan = rscan.max(g.r(i) * field.speed_at(i, j));
            }
        }
        prop_assert_eq!(a.value, scan);
        prop_assert_eq!(max_rspeed(&field).value, rscan);
    }
}

#[test]
fn points_outside_the_grid_are_refused() {
    let g = make_grid(8, 8, 1.0, -1.0, 1.0).unwrap();
    let f = AxisymField::zeros(g);
    assert!(f.interpolate(1.0 + 1e-9, 0.0).is_err());
    assert!(f.interpolate(0.5, -1.5).is_err());
    assert!(f.interpolate(-0.1, 0.0).is_err());
    assert!(f.interpolate(1.0, 1.0).is_ok());
}

/// Sup of the discrete divergence of a ring on an `n x n` grid.
fn ring_divergence(n: usize) -> f64 {
    let g = make_grid(n, n, 6.0, -3.0, 3.0).unwrap();
    let p = RingParams {
        amplitude: 1.0,
        swirl: 0.0,
        ring_r: 3.0,
        ring_z: 0.0,
        core: 0.8,
    };
    let f = vortex_ring_swirl(&p, 1e9, g).unwrap();
    divergence(&f).values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

#[test]
fn stream_function_fields_are_discretely_nearly_solenoidal() {
    let coarse = ring_divergence(32);
    let fine = ring_divergence(64);
    assert!((3.5..=4.5).contains(&(coarse / fine)), "{coarse:e} {fine:e}");
}

#[test]
fn kinetic_energy_matches_quadrature_of_rigid_rotation() {
    // vtheta = r on [0, 1] x [0, 1]; the energy is a plain node sum
    let n = 20;
    let g = make_grid(n, n, 1.0, 0.0, 1.0).unwrap();
    let f = AxisymField::from_fn(g, |r, _| [0.0, r, 0.0]);
    let h = 1.0 / n as f64;
    let sum_r3: f64 = (1..=n).map(|i| (i as f64 * h).powi(3)).sum();
    let expected = 0.5 * sum_r3 * (n + 1) as f64 * h * h;
    assert!((f.kinetic_energy() - expected).abs() < 1e-14);
}
