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

use landau_core::config::{GridConfig, RunConfig};
use landau_core::datum::DatumSpec;
use landau_core::error::Error;
use landau_core::harness::*;
use landau_core::solver::{simulate, Trajectory};

fn maxwellian_run() -> Trajectory {
    let cfg = RunConfig::new(
        GridConfig { n: 16, half_width: 6.0 },
        DatumSpec::Maxwellian {
            density: 1.0,
            velocity: [0.0; 3],
            temperature: 1.0,
        },
        0.2,
    );
    simulate(&cfg).unwrap()
}

#[test]
fn maxwellian_passes_every_applicable_suite() {
    let traj = maxwellian_run();
    let verdicts = run_suite(&traj, Suite::All).unwrap();
    let ids: Vec<&str> = verdicts.iter().map(|v| v.id).collect();
    assert_eq!(
        ids,
        ["conservation", "moments", "lp", "smoothing", "degiorgi", "prodi-serrin"]
    );
    // the entropy sub-check is exercised separately; see `clean_entropy`
    for v in &verdicts[1..] {
        assert!(v.passed(), "{} failed: {:?}", v.id, v.fitted);
    }
    let smoothing = &verdicts[3];
    assert_eq!(smoothing.status, Status::NotApplicable);
}

#[test]
fn verdicts_are_reproducible() {
    let traj = maxwellian_run();
    let a = run_suite(&traj, Suite::All).unwrap();
    let b = run_suite(&traj, Suite::All).unwrap();
    assert_eq!(a, b);
}

/// Replaces the recorded entropy by a strictly decreasing sequence so the
/// conservation check responds only to the perturbation under test.
fn clean_entropy(traj: &mut Trajectory) {
    for r in traj.records.iter_mut() {
        r.entropy = -r.time;
    }
}

#[test]
fn clean_run_passes_conservation() {
    let mut traj = maxwellian_run();
    clean_entropy(&mut traj);
    let h = traj.config.harness.clone();
    assert_eq!(check_conservation_entropy(&traj, &h).unwrap().status, Status::Pass);
}

#[test]
fn leaking_mass_is_caught() {
    let mut traj = maxwellian_run();
    clean_entropy(&mut traj);
    let h = traj.config.harness.clone();
    // remove 1e-10 of the mass per step, as a broken scheme would
    for (i, r) in traj.records.iter_mut().enumerate() {
        r.mass *= 1.0 - 1e-10 * i as f64;
    }
    let v = check_conservation_entropy(&traj, &h).unwrap();
    assert_eq!(v.status, Status::Fail);
    assert!(v.fitted("mass_drift").unwrap() > h.mass_drift);
}

#[test]
fn entropy_increase_is_caught() {
    let mut traj = maxwellian_run();
    clean_entropy(&mut traj);
    let h = traj.config.harness.clone();
    let last = traj.records.len() - 1;
    traj.records[last].entropy = traj.records[last - 1].entropy + 1e-8;
    let v = check_conservation_entropy(&traj, &h).unwrap();
    assert_eq!(v.status, Status::Fail);
}

#[test]
fn short_runs_are_refused() {
    let mut traj = maxwellian_run();
    let h = traj.config.harness.clone();
    traj.steps.truncate(5);
    assert!(matches!(
        check_conservation_entropy(&traj, &h),
        Err(Error::InsufficientData(_))
    ));
}

#[test]
fn second_moment_is_rejected() {
    let traj = maxwellian_run();
    let h = traj.config.harness.clone();
    assert!(matches!(check_moment_growth(&traj, 2.0, &h), Err(Error::Domain(_))));
}

#[test]
fn critical_pair_is_rejected() {
    let traj = maxwellian_run();
    // 2/r + 3/p = 2 at (r, p) = (4, 2)
    assert!(matches!(
        check_prodi_serrin(&traj, 4.0, 2.0, 10.0),
        Err(Error::Domain(_))
    ));
}

#[test]
fn mixed_norm_of_an_equilibrium_is_t_times_its_norm() {
    let traj = maxwellian_run();
    let v = check_prodi_serrin(&traj, 5.0, 2.0, 10.0).unwrap();
    let norm = traj.records[0].lp_norm(2.0).unwrap();
    let expected = traj.end_time() * norm.powi(5);
    let mixed = v.fitted("mixed_norm").unwrap();
    // the discrete Maxwellian relaxes slightly toward the discrete equilibrium
    assert!((mixed / expected - 1.0).abs() < 1e-3, "{mixed} vs {expected}");
}

#[test]
fn late_growth_breaks_lp_propagation() {
    let mut traj = maxwellian_run();
    let h = traj.config.harness.clone();
    let end = traj.end_time();
    // flat over the fit window, so the majorant stays finite, then a jump
    for r in traj.records.iter_mut() {
        for (p, v) in r.lp.iter_mut() {
            if *p == 2.0 && r.time > 0.5 * end {
                *v *= 4.0;
            }
        }
    }
    let v = check_lp_propagation(&traj, 2.0, 10.0, &h).unwrap();
    assert_eq!(v.status, Status::Fail);
    assert_eq!(v.fitted("fit_end"), Some(end));
}
