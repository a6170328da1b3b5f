// Copyright 2026 The landau-lab authors
//
// Licensed under the Apache license, version 2.0 (the "license");
// you may not use this file except in compliance with the license.
// You may obtain a copy of the license at
//
//     http://www.apache.org/licenses/license-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the license is distributed on an "as is" basis,
// without warranties or conditions of any kind, either express or implied.
// See the license for the specific language governing permissions and
// limitations under the license.

//! Desk-scale acceptance criteria. Each test prints one line of the form
//! `criterion N <name>: PASS|FAIL <details>` and then asserts the criterion
//! with the pinned tolerances; run with `--nocapture` to see the lines.

use std::path::PathBuf;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use landau_core::coefficients::{laplacian_residual, spectral_summary, CoefficientEngine};
use landau_core::config::{parse_config, GridConfig, RunConfig};
use landau_core::datum::DatumSpec;
use landau_core::exponents::{ExactExponentSet, ExponentSet};
use landau_core::grid::{ScalarField, VelocityGrid};
use landau_core::harness::{check_moment_growth, degiorgi_empirical, fit_smoothing_rate, EstimateVerdict, Status};
use landau_core::ineq::{calibrate, holdout_corpus, run_bench, Calibration, Cutoff, Which};
use landau_core::io::{write_run, DIAGNOSTICS_FILE};
use landau_core::solver::{simulate, Outcome, Trajectory};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(n: usize, name: &str, ok: bool, detail: String) -> bool {
    println!("\ncriterion {n} {name}: {} {detail}", if ok { "PASS" } else { "FAIL" });
    ok
}

fn workspace() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn maxwellian_config(n: usize) -> RunConfig {
    RunConfig::new(
        GridConfig { n, half_width: 8.0 },
        DatumSpec::Maxwellian {
            density: 1.0,
            velocity: [0.0; 3],
            temperature: 1.0,
        },
        0.5,
    )
}

struct Timed {
    traj: Trajectory,
    wall: Duration,
}

fn timed(config: &RunConfig) -> Timed {
    let start = Instant::now();
    let traj = simulate(config).expect("run failed");
    Timed {
        traj,
        wall: start.elapsed(),
    }
}

fn maxwellian(n: usize) -> &'static Timed {
    static M16: OnceLock<Timed> = OnceLock::new();
    static M32: OnceLock<Timed> = OnceLock::new();
    match n {
        16 => M16.get_or_init(|| timed(&maxwellian_config(16))),
        32 => M32.get_or_init(|| timed(&maxwellian_config(32))),
        _ => unreachable!(),
    }
}

fn spike_config() -> RunConfig {
    parse_config(&workspace().join("configs/spike.yaml")).unwrap()
}

fn spike() -> &'static Timed {
    static SPIKE: OnceLock<Timed> = OnceLock::new();
    SPIKE.get_or_init(|| timed(&spike_config()))
}

fn fitted(v: &EstimateVerdict, key: &str) -> f64 {
    v.fitted(key).unwrap_or(f64::NAN)
}

fn micro(n: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(1_000_000))
}

#[test]
fn criterion_1_exponent_suite() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut bad = 0usize;
    let one = BigRational::one();
    for _ in 0..10_000 {
        // draw on a 1e-6 lattice so the exact route sees short rationals
        let pn: i64 = rng.gen_range(1_600_000..6_000_000);
        let p = pn as f64 * 1e-6;
        let m_floor = (9.0 * (p - 1.0) / (2.0 * p - 3.0)).max(9.0 * p / (2.0 * p - 1.0));
        let mn = (m_floor * 1e6).ceil() as i64 + rng.gen_range(1_000..200_000_000);
        let m = mn as f64 * 1e-6;
        let exact = ExactExponentSet::new(&micro(pn), &micro(mn)).unwrap();
        let set = exact.to_floats(p, m);
        let theta_exact = exact.theta1.clone() + exact.theta2.clone() + exact.theta3.clone() == one;
        let ok = theta_exact
            && exact.alpha1 > one
            && exact.gamma > BigRational::zero()
            && set.beta_star > 1.5 / p
            && set.beta_star < 1.0;
        bad += usize::from(!ok);
    }
    let s = ExponentSet::new(2.0, 10.0).unwrap();
    let spot = [
        (s.theta1, 20.0 / 31.0),
        (s.theta2, 8.0 / 31.0),
        (s.theta3, 3.0 / 31.0),
        (s.beta, 11.0 / 30.0),
        (s.gamma, 1.0 / 30.0),
        (s.beta_star, 30.0 / 31.0),
    ];
    let spot_err = spot.iter().fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    let wall = start.elapsed();
    let ok = bad == 0 && spot_err <= 1e-12 && wall < Duration::from_secs(5);
    let detail = format!("violations={bad}/10000 spot_err={spot_err:e} wall={wall:.2?}");
    assert!(report(1, "exponents", ok, detail));
}

fn origin_mean(values: &[f64], grid: &VelocityGrid) -> f64 {
    let h = grid.n() / 2;
    let mut sum = 0.0;
    for k in h - 1..=h {
        for j in h - 1..=h {
            for i in h - 1..=h {
                sum += values[grid.index(i, j, k)];
            }
        }
    }
    sum / 8.0
}

fn sampled_maxwellian(n: usize) -> ScalarField {
    let g = VelocityGrid::new(n, 8.0).unwrap();
    ScalarField::from_fn(g, |v| {
        (2.0 * std::f64::consts::PI).powf(-1.5) * (-0.5 * (v[0] * v[0] + v[1] * v[1] + v[2] * v[2])).exp()
    })
    .unwrap()
}

#[test]
fn criterion_2_coefficient_accuracy() {
    let start = Instant::now();
    let mut residual = [0.0; 2];
    let (mut a0, mut diag_err, mut trace_res) = (f64::NAN, 0.0f64, 0.0f64);
    for (slot, n) in [32usize, 64].into_iter().enumerate() {
        let f = sampled_maxwellian(n);
        let g = *f.grid();
        let c = CoefficientEngine::new(&g).unwrap().coefficients(&f).unwrap();
        residual[slot] = laplacian_residual(&c.potential, &f);
        if n == 64 {
            a0 = origin_mean(c.potential.values(), &g);
            for d in 0..3 {
                let diag = origin_mean(c.diffusion.component(d, d), &g);
                diag_err = diag_err.max((diag - a0 / 3.0).abs());
            }
            trace_res = c
                .diffusion
                .trace()
                .iter()
                .zip(c.potential.values())
                .fold(0.0f64, |m, (t, a)| m.max((t - a).abs()));
        }
    }
    let order = (residual[0] / residual[1]).log2();
    let wall = start.elapsed();
    let a0_err = (a0 - 0.0634936).abs();
    let ok =
        a0_err <= 1e-3 && diag_err <= 1e-3 && trace_res <= 1e-12 && order >= 1.8 && wall < Duration::from_secs(120);
    let detail = format!(
        "a(0)={a0:.7} diag_err={diag_err:e} trace_residual={trace_res:e} laplacian_order={order:.3} wall={wall:.2?}"
    );
    assert!(report(2, "coefficients", ok, detail));
}

#[test]
fn criterion_3_conservation_entropy() {
    let coarse = maxwellian(16);
    let fine = maxwellian(32);
    let traj = &fine.traj;
    let r0 = &traj.records[0];
    let scale = (r0.mass * r0.energy).sqrt();
    let (mut mass, mut momentum, mut energy, mut entropy_up) = (0.0f64, 0.0f64, 0.0f64, f64::NEG_INFINITY);
    for w in traj.records.windows(2) {
        let r = &w[1];
        mass = mass.max((r.mass - r0.mass).abs() / r0.mass);
        for d in 0..3 {
            momentum = momentum.max((r.momentum[d] - r0.momentum[d]).abs() / scale);
        }
        energy = energy.max((r.energy - r0.energy).abs() / r0.energy);
        entropy_up = entropy_up.max(w[1].entropy - w[0].entropy);
    }
    let sup_error = |t: &Trajectory| {
        let mu = t.initial();
        let last = &t.snapshots.last().unwrap().field;
        let diff = last
            .values()
            .iter()
            .zip(mu.values())
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        diff / mu.max_abs()
    };
    let (e16, e32) = (sup_error(&coarse.traj), sup_error(&fine.traj));
    let factor = e16 / e32;
    let wall = coarse.wall + fine.wall;
    let checks = [
        ("mass", mass <= 1e-12),
        ("momentum", momentum <= 1e-3),
        ("energy", energy <= 1e-3),
        ("entropy", entropy_up <= 1e-10),
        ("refinement", factor >= 2.5),
        ("runtime", wall < Duration::from_secs(600)),
    ];
    let failed: Vec<&str> = checks.iter().filter(|c| !c.1).map(|c| c.0).collect();
    let detail = format!(
        "mass={mass:e} momentum={momentum:e} energy={energy:e} max_entropy_increment={entropy_up:e} \
         sup_error 16->32 factor={factor:.3} wall={wall:.2?} failed_subchecks={failed:?}"
    );
    assert!(report(3, "conservation-entropy", failed.is_empty(), detail));
}

/// min over recorded step states and the final state of (1 + |v|^3) λ_min.
fn coercivity(traj: &Trajectory) -> f64 {
    let last = &traj.snapshots.last().unwrap().field;
    let engine = CoefficientEngine::new(last.grid()).unwrap();
    let (c0_final, _, _) = spectral_summary(&engine.diffusion_matrix(last).unwrap());
    traj.steps.iter().map(|s| s.c0_empirical).fold(c0_final, f64::min)
}

#[test]
fn criterion_4_coercivity() {
    let m = coercivity(&maxwellian(32).traj);
    let s = coercivity(&spike().traj);
    let ok = m > 0.0 && s > 0.0;
    assert!(report(4, "coercivity", ok, format!("c0 maxwellian={m:e} spike={s:e}")));
}

#[test]
fn criterion_5_smoothing_rate() {
    let run = spike();
    let h = &run.traj.config.harness;
    let v = fit_smoothing_rate(&run.traj, h.p, h.m, h).unwrap();
    let slope = fitted(&v, "slope");
    let monotone = fitted(&v, "monotone") == 1.0;
    let ok =
        run.traj.outcome == Outcome::Completed && slope >= -1.068 && monotone && run.wall < Duration::from_secs(1800);
    let detail = format!(
        "slope={slope:.4} threshold=-1.068 monotone={monotone} window_points={} wall={:.2?}",
        fitted(&v, "window_points"),
        run.wall
    );
    assert!(report(5, "smoothing", ok, detail));
}

#[test]
fn criterion_6_degiorgi() {
    let run = spike();
    let h = &run.traj.config.harness;
    let v = degiorgi_empirical(&run.traj, h.p, h.m, h).unwrap();
    let detail = format!(
        "status={} c1={:e} ln_k={:.4} ln_window_max={:.4} min_margin={:e}",
        v.status,
        fitted(&v, "c1"),
        fitted(&v, "ln_k"),
        fitted(&v, "window_max").ln(),
        fitted(&v, "min_recurrence_margin")
    );
    assert!(report(6, "degiorgi", v.status == Status::Pass, detail));
}

#[test]
fn criterion_7_moment_growth() {
    let run = spike();
    let h = &run.traj.config.harness;
    let v = check_moment_growth(&run.traj, 3.0, h).unwrap();
    let detail = format!("status={} fitted={:?}", v.status, v.fitted);
    assert!(report(7, "moments", v.status == Status::Pass, detail));
}

#[test]
fn criterion_8_inequality_bench() {
    let start = Instant::now();
    let text = std::fs::read_to_string(workspace().join("calibration/inequalities.txt")).unwrap();
    let committed = Calibration::parse(&text).unwrap();
    let fresh = calibrate(20261015, &committed.settings).unwrap();
    let rows = run_bench(&holdout_corpus(1, 100), &committed, Which::All).unwrap();
    let failing = rows.iter().filter(|r| !r.report.pass).count();
    let grid = committed.settings.grid().unwrap();
    let cutoff_violations: usize = [1.0, 2.0, 4.0]
        .iter()
        .map(|&r| Cutoff::new(r, committed.settings.p).unwrap().violations(&grid))
        .sum();
    let wall = start.elapsed();
    let ok = fresh == committed && failing == 0 && cutoff_violations == 0 && wall < Duration::from_secs(600);
    let detail = format!(
        "calibration_reproduced={} rows={} failing={failing} cutoff_violations={cutoff_violations} wall={wall:.2?}",
        fresh == committed,
        rows.len()
    );
    assert!(report(8, "inequality-bench", ok, detail));
}

#[test]
fn criterion_9_determinism() {
    let config = maxwellian_config(32);
    let again = simulate(&config).unwrap();
    let text = config.to_yaml();
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    write_run(dirs[0].path(), &text, &maxwellian(32).traj).unwrap();
    write_run(dirs[1].path(), &text, &again).unwrap();
    let read = |i: usize| std::fs::read(dirs[i].path().join(DIAGNOSTICS_FILE)).unwrap();
    let (a, b) = (read(0), read(1));
    let ok = !a.is_empty() && a == b;
    assert!(report(
        9,
        "determinism",
        ok,
        format!("diagnostics.csv bytes={} identical={}", a.len(), a == b)
    ));
}
