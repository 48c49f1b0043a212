//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::thread;

use axns_core::config::{parse_config, RunConfig};
use axns_core::field::{AxisymField, FieldRole, ScalarField};
use axns_core::grid::{make_grid, ZBoundary};
use axns_core::invariants::{check_divergence, check_scaling_covariance, check_short_time_bound, max_relative_increase};
use axns_core::microscope::{constant_closeness, find_almost_maximal, rescale_history, MicroscopeConfig, Mode};
use axns_core::run::{
    data_bound, lamb_oseen_history, load_history, run_microscope, run_simulate, run_sweep, LambOseenStudy,
    SimulateOutcome, SweepSummary,
};
use axns_core::solver::ResidualWindow;
use axns_core::{Error, SnapshotHistory};

type Res<T> = std::result::Result<T, Box<dyn std::error::Error + Send + Sync>>;

struct Verdict {
    id: usize,
    name: &'static str,
    pass: bool,
    detail: String,
}

fn verdict(id: usize, name: &'static str, outcome: Res<(bool, String)>) -> Verdict {
    match outcome {
        Ok((pass, detail)) => Verdict { id, name, pass, detail },
        Err(e) => Verdict {
            id,
            name,
            pass: false,
            detail: format!("error: {e}"),
        },
    }
}

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn shipped_text(name: &str) -> Res<String> {
    Ok(std::fs::read_to_string(configs_dir().join(name))?)
}

fn shipped(name: &str, out: &Path) -> Res<RunConfig> {
    let mut cfg = parse_config(&shipped_text(name)?)?;
    cfg.output_dir = out.to_path_buf();
    Ok(cfg)
}

fn lamb_oseen_convergence() -> Res<(bool, String)> {
    let study = LambOseenStudy::default();
    // run alone so that the wall-clock times are not shared with other work
    let coarse = study.run(128)?;
    let fine = study.run(256)?;
    let ratio = coarse.error / fine.error;
    let rel = fine.error / fine.max_vtheta;
    let pass = (3.5..=4.5).contains(&ratio)
        && rel < 1e-3
        && coarse.seconds <= 300.0
        && fine.seconds <= 300.0;
    Ok((
        pass,
        format!(
            "err128={:.3e} err256={:.3e} ratio={ratio:.3} err256/max|vtheta|={rel:.3e} (<1e-3) time={:.1}s/{:.1}s",
            coarse.error, fine.error, coarse.seconds, fine.seconds
        ),
    ))
}

fn maximum_principle(ring: &SimulateOutcome, n0: f64) -> Res<(bool, String)> {
    let worst = ring.diagnostics.iter().fold(0.0_f64, |m, d| m.max(d.max_rvtheta));
    let steps: Vec<usize> = ring.diagnostics.iter().map(|d| d.step).collect();
    let values: Vec<f64> = ring.diagnostics.iter().map(|d| d.max_rvtheta).collect();
    let inc = max_relative_increase(&values, &steps);
    let snap_worst = ring.history.iter().fold(0.0_f64, |m, s| m.max(axns_core::field::max_rvtheta(&s.field)));
    let pass = worst <= n0 && snap_worst <= n0 && inc <= 1e-6;
    Ok((
        pass,
        format!(
            "max r|vtheta|={worst:.6e} (N0={n0}) over {} steps, largest relative increase per step={inc:.3e} (<=1e-6)",
            ring.diagnostics.len() - 1
        ),
    ))
}

fn divergence_and_energy(ring: &SimulateOutcome, tol: f64) -> Res<(bool, String)> {
    let bound = 10.0 * tol;
    let per_step = ring.diagnostics.iter().fold(0.0_f64, |m, d| m.max(d.max_divergence));
    let snaps = check_divergence(&ring.history, bound);
    let steps: Vec<usize> = ring.diagnostics.iter().map(|d| d.step).collect();
    let energy: Vec<f64> = ring.diagnostics.iter().map(|d| d.energy).collect();
    let inc = max_relative_increase(&energy, &steps);
    let pass = per_step <= bound && snaps.pass() && inc <= 1e-8;
    Ok((
        pass,
        format!("sup div={per_step:.3e} (<= {bound:.0e}), largest relative energy increase={inc:.3e} (<=1e-8)"),
    ))
}

fn scaling_covariance() -> Res<(bool, String)> {
    let study = LambOseenStudy::default();
    let g = study.grid(256)?.with_z_boundary(ZBoundary::Wall);
    let times: Vec<f64> = (0..5).map(|k| 0.25 + 0.01 * k as f64).collect();
    let hist = lamb_oseen_history(g, 1.0, 1.0, &times)?;
    let window = ResidualWindow {
        r_limit: Some(g.r_max),
        z_limits: Some((g.z_min, g.z_max)),
        ..ResidualWindow::times(times[0], times[4])
    };
    let out = check_scaling_covariance(&hist, 2.0, &window, [7.0 / 8.0, 9.0 / 8.0], 0.01)?;
    let pass = (7.0..=9.0).contains(&out.residual_ratio) && out.rspeed_change <= 0.01 && out.report.pass();
    Ok((
        pass,
        format!(
            "residual ratio={:.4} (in [7, 9]), max r|v| change={:.3e} (<=1e-2)",
            out.residual_ratio, out.rspeed_change
        ),
    ))
}

fn centre_speeds(history: &SnapshotHistory, cfg: &MicroscopeConfig) -> Res<(usize, f64)> {
    let mut count = 0;
    let mut worst = 0.0_f64;
    for mode in [Mode::A, Mode::B] {
        for zoom in find_almost_maximal(history, mode, cfg.ratio_threshold)? {
            let cube = match rescale_history(history, &zoom, cfg) {
                Ok(c) => c,
                Err(Error::FullyMasked) => continue,
                Err(e) => return Err(e.into()),
            };
            let v = cube.values[cube.center()];
            let speed = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
            worst = worst.max((speed - 1.0).abs());
            count += 1;
        }
    }
    Ok((count, worst))
}

/// Largest closeness total over the zooms of a constant flow, and their number.
fn constant_total() -> Res<(f64, usize)> {
    let g = make_grid(32, 32, 4.0, -2.0, 2.0)?;
    let mut h = SnapshotHistory::new(8);
    for k in 0..5 {
        h.push(
            k as f64 * 0.5,
            AxisymField::from_fn(g, |_, _| [0.0, 0.0, 0.75]),
            ScalarField::zeros(g, FieldRole::Pressure),
        )?;
    }
    let cfg = MicroscopeConfig::default();
    let mut worst = 0.0_f64;
    let mut evaluated = 0;
    for mode in [Mode::A, Mode::B] {
        for zoom in find_almost_maximal(&h, mode, cfg.ratio_threshold)? {
            if let Ok(cube) = rescale_history(&h, &zoom, &cfg) {
                if let Ok(rep) = constant_closeness(&cube, &cfg) {
                    worst = worst.max(rep.total);
                    evaluated += 1;
                }
            }
        }
    }
    Ok((worst, evaluated))
}

fn normalisation(histories: &[(&str, &SnapshotHistory)]) -> Res<(bool, String)> {
    let cfg = MicroscopeConfig::default();
    let mut total = 0;
    let mut worst = 0.0_f64;
    let mut parts = Vec::new();
    for (name, h) in histories {
        let (n, w) = centre_speeds(h, &cfg)?;
        total += n;
        worst = worst.max(w);
        parts.push(format!("{name}={n}"));
    }
    let (constant, evaluated) = constant_total()?;
    let pass = total >= 100 && worst <= 1e-4 && constant == 0.0 && evaluated > 0;
    Ok((
        pass,
        format!(
            "{total} zooms ({}), max ||v~(0,0)| - 1|={worst:.3e} (<=1e-4), constant-field total={constant:e} over {evaluated} zooms",
            parts.join(", ")
        ),
    ))
}

fn trend(summary: &[SweepSummary]) -> Res<(bool, String)> {
    let mut rows: Vec<&SweepSummary> = summary.iter().collect();
    rows.sort_by(|a, b| a.b_alpha.total_cmp(&b.b_alpha));
    let alphas: Vec<f64> = rows.iter().map(|r| r.b_alpha).collect();
    let span = alphas[alphas.len() - 1] / alphas[0];
    let decreasing = rows
        .windows(2)
        .all(|w| w[1].b_total < w[0].b_total && w[1].b_swirl_ratio < w[0].b_swirl_ratio);
    let pass = rows.len() >= 3 && span >= 4.0 && decreasing && alphas.iter().all(|a| a.is_finite());
    let listing: Vec<String> = rows
        .iter()
        .map(|r| format!("alpha={:.2}:total={:.4},swirl={:.4}", r.b_alpha, r.b_total, r.b_swirl_ratio))
        .collect();
    Ok((pass, format!("span={span:.2} (>=4) [{}]", listing.join(" "))))
}

fn short_time(runs: &[(String, &SnapshotHistory, f64, f64)]) -> Res<(bool, String)> {
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, h, n0, h0) in runs {
        let rep = check_short_time_bound(h, *n0, *h0);
        let empirical = rep.rows[1].value;
        pass &= rep.pass();
        parts.push(format!("{name}: h0>={empirical:.4}"));
    }
    Ok((pass, parts.join(", ")))
}

fn determinism(dir: &Path) -> Res<(bool, String)> {
    let files = ["diagnostics.csv", "microscope.csv", "snapshots/index.csv"];
    let mut outputs = Vec::new();
    for k in 0..2 {
        let mut cfg = shipped("random.toml", &dir.join(format!("run{k}")))?;
        cfg.solver.t_end = 0.1;
        run_simulate(&cfg, false)?;
        run_microscope(&cfg, &cfg.output_dir)?;
        let bytes: Vec<Vec<u8>> = files
            .iter()
            .map(|f| std::fs::read(cfg.output_dir.join(f)))
            .collect::<std::io::Result<_>>()?;
        outputs.push(bytes);
    }
    let same = outputs[0] == outputs[1];
    let sizes: Vec<usize> = outputs[0].iter().map(Vec::len).collect();
    Ok((same, format!("{} files compared, sizes {sizes:?} bytes", files.len())))
}

fn sweep_doc() -> Res<(toml::Value, BTreeMap<String, Vec<toml::Value>>)> {
    let mut doc: toml::Value = toml::from_str(&shipped_text("ring_sweep.toml")?)?;
    let sweep = doc
        .as_table_mut()
        .and_then(|t| t.remove("sweep"))
        .ok_or("ring_sweep.toml has no [sweep] table")?;
    Ok((doc, sweep.try_into()?))
}

fn main() -> ExitCode {
    let tmp = tempfile::tempdir().expect("temporary directory");
    let root = tmp.path();

    let c1 = verdict(1, "pure-swirl convergence", lamb_oseen_convergence());
    let (c4, c8, ring, random, lamb, sweep) = thread::scope(|s| {
        let c4 = s.spawn(|| verdict(4, "scaling covariance", scaling_covariance()));
        let c8 = s.spawn(|| verdict(8, "determinism", determinism(&root.join("det"))));
        let ring = s.spawn(|| -> Res<(RunConfig, SimulateOutcome)> {
            let cfg = shipped("ring.toml", &root.join("ring"))?;
            let out = run_simulate(&cfg, false)?;
            Ok((cfg, out))
        });
        let random = s.spawn(|| -> Res<(RunConfig, SimulateOutcome)> {
            let cfg = shipped("random.toml", &root.join("random"))?;
            let out = run_simulate(&cfg, false)?;
            Ok((cfg, out))
        });
        let lamb = s.spawn(|| -> Res<(RunConfig, SimulateOutcome)> {
            let cfg = shipped("lamb_oseen.toml", &root.join("lamb_oseen"))?;
            let out = run_simulate(&cfg, false)?;
            Ok((cfg, out))
        });
        let sweep = s.spawn(|| -> Res<(toml::Value, Vec<SweepSummary>)> {
            let (doc, table) = sweep_doc()?;
            let rows = run_sweep(&doc, &table, &root.join("sweep"))?;
            Ok((doc, rows))
        });
        (
            c4.join().expect("criterion 4"),
            c8.join().expect("criterion 8"),
            ring.join().expect("ring run"),
            random.join().expect("random run"),
            lamb.join().expect("vortex run"),
            sweep.join().expect("sweep"),
        )
    });

    let mut verdicts = vec![c1, c4, c8];
    match (&ring, &random, &lamb, &sweep) {
        (Ok((ring_cfg, ring)), Ok((random_cfg, random)), Ok((lamb_cfg, lamb)), Ok((sweep_doc, summary))) => {
            let n0 = data_bound(&ring_cfg.data);
            verdicts.push(verdict(2, "maximum principle", maximum_principle(ring, n0)));
            verdicts.push(verdict(
                3,
                "divergence and energy",
                divergence_and_energy(ring, ring_cfg.solver.projection_tol),
            ));
            let sweep_runs: Res<Vec<(String, SnapshotHistory)>> = summary
                .iter()
                .map(|s| {
                    let dir = root.join("sweep").join(format!("run_{:03}", s.run));
                    Ok((s.parameters.clone(), load_history(&dir, ZBoundary::Wall)?))
                })
                .collect();
            match sweep_runs {
                Ok(sweep_runs) => {
                    let strongest = &sweep_runs[sweep_runs.len() - 1].1;
                    verdicts.push(verdict(
                        5,
                        "zoom normalisation",
                        normalisation(&[("ring", &ring.history), ("random", &random.history), ("sweep", strongest)]),
                    ));
                    verdicts.push(verdict(6, "closeness trend", trend(summary)));
                    let sweep_cfg: Res<RunConfig> = (|| {
                        let mut c: RunConfig = sweep_doc.clone().try_into()?;
                        c.output_dir = root.join("sweep");
                        Ok(c)
                    })();
                    let mut runs: Vec<(String, &SnapshotHistory, f64, f64)> = vec![
                        ("lamb_oseen".into(), &lamb.history, data_bound(&lamb_cfg.data), lamb_cfg.invariants.h0),
                        ("ring".into(), &ring.history, n0, ring_cfg.invariants.h0),
                        ("random".into(), &random.history, data_bound(&random_cfg.data), random_cfg.invariants.h0),
                    ];
                    let c7 = match sweep_cfg {
                        Ok(c) => {
                            for (name, h) in &sweep_runs {
                                runs.push((format!("ring_sweep[{name}]"), h, data_bound(&c.data), c.invariants.h0));
                            }
                            short_time(&runs)
                        }
                        Err(e) => Err(e),
                    };
                    verdicts.push(verdict(7, "short-time bound", c7));
                }
                Err(e) => {
                    let msg = e.to_string();
                    for (id, name) in [(5, "zoom normalisation"), (6, "closeness trend"), (7, "short-time bound")] {
                        verdicts.push(verdict(id, name, Err(msg.clone().into())));
                    }
                }
            }
        }
        _ => {
            let msg = [ring.as_ref().err(), random.as_ref().err(), lamb.as_ref().err()]
                .into_iter()
                .flatten()
                .map(|e| e.to_string())
                .chain(sweep.as_ref().err().map(|e| e.to_string()))
                .collect::<Vec<_>>()
                .join("; ");
            for (id, name) in [
                (2, "maximum principle"),
                (3, "divergence and energy"),
                (5, "zoom normalisation"),
                (6, "closeness trend"),
                (7, "short-time bound"),
            ] {
                verdicts.push(verdict(id, name, Err(msg.clone().into())));
            }
        }
    }

    verdicts.sort_by_key(|v| v.id);
    let mut ok = true;
    for v in &verdicts {
        ok &= v.pass;
        println!("{} criterion {} {}: {}", if v.pass { "PASS" } else { "FAIL" }, v.id, v.name, v.detail);
    }
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
