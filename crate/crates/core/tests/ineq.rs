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

use std::path::Path;

use landau_core::grid::{ScalarField, VelocityGrid};
use landau_core::ineq::*;
use proptest::prelude::*;

fn committed_calibration() -> Calibration {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../calibration/inequalities.txt");
    Calibration::parse(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn committed_calibration_is_reproducible() {
    let cal = committed_calibration();
    assert_eq!(cal.settings, BenchSettings::default());
    assert_eq!(calibrate(cal.corpus_seed, &cal.settings).unwrap(), cal);
}

#[test]
fn constants_are_not_decorative() {
    // with C₁ = C₂ = 0 the Sobolev bound must fail on any nonzero member
    let cal = committed_calibration();
    let broken = Calibration {
        c1: 0.0,
        c2: 0.0,
        c_eps: 0.0,
        ..cal
    };
    let rows = run_bench(&holdout_corpus(3, 4), &broken, Which::Sobolev).unwrap();
    assert!(rows.iter().all(|r| !r.report.pass));
}

#[test]
fn holdout_is_disjoint_from_calibration() {
    let h = 10.0 / 16.0;
    let cal = calibration_corpus(20261015, h);
    let hold = holdout_corpus(20261015, 100);
    assert_eq!(cal.len(), 20);
    assert!(hold.iter().all(|s| !cal.contains(s)));
}

#[test]
fn bench_csv_header_is_stable() {
    assert_eq!(BENCH_CSV_HEADER, "field,kind,inequality,radius,left,right,margin,pass");
}

#[test]
fn cell_average_sampling_keeps_mass_of_a_spike() {
    let grid = VelocityGrid::new(32, 4.0).unwrap();
    let shape = Shape::Spike {
        exponent: 1.4,
        center: [0.03, -0.02, 0.05],
        radius: 2.0,
    };
    let f = shape.sample(&grid).unwrap();
    assert!((f.integral() - 1.0).abs() < 0.02, "{}", f.integral());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Discrete Hölder: the interpolation bound holds for any nonnegative
    /// grid function, not only for corpus fields.
    #[test]
    fn interpolation_holds_for_arbitrary_fields(
        values in prop::collection::vec(0.0f64..1.0, 512),
        p in 1.6f64..4.0,
        extra in 0.5f64..30.0,
    ) {
        let g = ScalarField::new(VelocityGrid::new(8, 3.0).unwrap(), values).unwrap();
        let m = (9.0 * p / (2.0 * p - 1.0)).max(9.0 * (p - 1.0) / (2.0 * p - 3.0)) + extra;
        let r = lp_interpolation(&g, p, m).unwrap();
        prop_assert!(r.pass, "margin {:e}", r.margin);
    }

    #[test]
    fn cutoff_pointwise_bound(radius in 1.0f64..8.0, p in 1.6f64..5.0) {
        let grid = VelocityGrid::new(24, 2.2 * radius).unwrap();
        let c = Cutoff::new(radius, p).unwrap();
        prop_assert_eq!(c.violations(&grid), 0);
        prop_assert!(c.pointwise_ratio(&grid) <= 1.0 + 1e-10);
    }

    /// Both sides of the Sobolev bound are 2-homogeneous.
    #[test]
    fn sobolev_parts_scale_quadratically(scale in 0.01f64..100.0, seed in 0u64..1000) {
        let grid = VelocityGrid::new(16, 10.0).unwrap();
        let shape = holdout_corpus(seed, 1).remove(0);
        let g = shape.sample(&grid).unwrap();
        let gs = g.map(|x| scale * x).unwrap();
        let (a, b) = (sobolev_parts(&g, 2.0).unwrap(), sobolev_parts(&gs, 2.0).unwrap());
        let s2 = scale * scale;
        prop_assert!((b.left / (s2 * a.left) - 1.0).abs() < 1e-12);
        prop_assert!((b.gradient / (s2 * a.gradient) - 1.0).abs() < 1e-12);
        prop_assert!((b.lebesgue / (s2 * a.lebesgue) - 1.0).abs() < 1e-12);
    }
}
