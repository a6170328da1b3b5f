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

use landau_core::config::{GridConfig, RunConfig, Scheme};
use landau_core::datum::{generate, DatumSpec};
use landau_core::diagnostics::entropy;
use landau_core::error::Error;
use landau_core::grid::ScalarField;
use landau_core::solver::*;
use proptest::prelude::*;

fn two_bumps() -> DatumSpec {
    DatumSpec::MaxwellianPlusSpike {
        weight: 0.5,
        density: 1.0,
        velocity: [0.5, 0.0, 0.0],
        temperature: 0.6,
        p: 2.0,
        delta: 0.3,
        center: [-1.0, 0.5, 0.0],
        radius: 1.5,
    }
}

fn run(scheme: Scheme) -> Trajectory {
    let mut cfg = RunConfig::new(GridConfig { n: 16, half_width: 6.0 }, two_bumps(), 0.05);
    cfg.scheme = scheme;
    cfg.snapshots.count = 6;
    simulate(&cfg).unwrap()
}

#[test]
fn explicit_run_conserves_and_stays_positive() {
    let t = run(Scheme::Explicit);
    assert_eq!(t.outcome, Outcome::Completed);
    let (r0, r1) = (&t.records[0], t.records.last().unwrap());
    assert!((r1.mass / r0.mass - 1.0).abs() < 1e-12);
    for s in &t.snapshots {
        assert!(s.field.min() >= 0.0);
    }
    for step in &t.steps {
        assert!(step.c0_empirical > 0.0);
    }
    // far from equilibrium the entropy drop dwarfs discretization noise
    assert!(r1.entropy < r0.entropy);
    let momentum_drift = (0..3)
        .map(|d| (r1.momentum[d] - r0.momentum[d]).abs())
        .fold(0.0, f64::max);
    assert!(momentum_drift < 1e-3, "{momentum_drift:e}");
    assert!((r1.energy / r0.energy - 1.0).abs() < 1e-3);
}

#[test]
fn semi_implicit_run_agrees_with_explicit() {
    let (e, s) = (run(Scheme::Explicit), run(Scheme::SemiImplicit));
    let (fe, fs) = (&e.snapshots.last().unwrap().field, &s.snapshots.last().unwrap().field);
    let diff = fe
        .values()
        .iter()
        .zip(fs.values())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(diff < 0.02 * fe.max(), "{diff:e} vs {:e}", fe.max());
    assert!((s.records.last().unwrap().mass / s.records[0].mass - 1.0).abs() < 1e-12);
}

#[test]
fn runs_are_bitwise_reproducible() {
    let (a, b) = (run(Scheme::Explicit), run(Scheme::Explicit));
    assert_eq!(a.records, b.records);
    assert_eq!(a.steps, b.steps);
}

#[test]
fn snapshots_land_on_schedule() {
    let t = run(Scheme::Explicit);
    let times: Vec<f64> = t.snapshots.iter().skip(1).map(|s| s.time).collect();
    let schedule = t.config.snapshot_times();
    assert_eq!(times.len(), schedule.len());
    for (a, b) in times.iter().zip(schedule) {
        assert!((a - b).abs() <= 1e-12 * b);
    }
}

#[test]
fn oversized_explicit_step_is_refused() {
    let g = landau_core::grid::VelocityGrid::new(8, 4.0).unwrap();
    let spec = DatumSpec::Maxwellian {
        density: 1.0,
        velocity: [0.0; 3],
        temperature: 1.0,
    };
    let f = generate(&spec, &g, false).unwrap().field;
    let stepper = Stepper::new(&g, Scheme::Explicit).unwrap();
    let frozen = stepper.freeze(&f).unwrap();
    let dt = stepper.stable_dt(&frozen, 1.0).dt;
    assert!(matches!(
        stepper.step(&f, &frozen, 2.0 * dt),
        Err(Error::StepTooLarge { .. })
    ));
    let (next, record) = stepper.step(&f, &frozen, 0.5 * dt).unwrap();
    assert!(next.min() >= 0.0);
    assert_eq!(record.dt, 0.5 * dt);
}

#[test]
fn negative_input_is_rejected() {
    let g = landau_core::grid::VelocityGrid::new(8, 4.0).unwrap();
    let mut values = vec![1.0; g.len()];
    values[3] = -1.0;
    let f = ScalarField::new(g, values).unwrap();
    let stepper = Stepper::new(&g, Scheme::Explicit).unwrap();
    assert!(stepper.freeze(&f).is_err() || stepper.step(&f, &stepper.freeze(&f).unwrap(), 1e-6).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn bernoulli_reflection(x in -50.0f64..50.0) {
        // B(-x) = B(x) + x
        let lhs = bernoulli(-x);
        let rhs = bernoulli(x) + x;
        prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0));
        prop_assert!(bernoulli(x) > 0.0);
    }

    #[test]
    fn one_step_keeps_mass_and_sign(
        values in prop::collection::vec(0.0f64..1.0, 512),
        frac in 0.05f64..1.0,
        semi in any::<bool>(),
    ) {
        let g = landau_core::grid::VelocityGrid::new(8, 3.0).unwrap();
        let f = ScalarField::new(g, values).unwrap();
        let scheme = if semi { Scheme::SemiImplicit } else { Scheme::Explicit };
        let stepper = Stepper::new(&g, scheme).unwrap();
        let frozen = stepper.freeze(&f).unwrap();
        let dt = frac * stepper.stable_dt(&frozen, 0.8).dt;
        let (next, _) = stepper.step(&f, &frozen, dt).unwrap();
        prop_assert!(next.min() >= 0.0);
        prop_assert!((next.integral() / f.integral() - 1.0).abs() < 1e-12);
        prop_assert!(entropy(&next).is_finite());
    }
}
