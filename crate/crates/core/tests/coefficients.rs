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

use std::f64::consts::PI;

use landau_core::coefficients::*;
use landau_core::grid::{norm3, ScalarField, VelocityGrid};
use proptest::prelude::*;

fn maxwellian(grid: &VelocityGrid) -> ScalarField {
    ScalarField::from_fn(grid.clone(), |v| {
        (2.0 * PI).powf(-1.5) * (-0.5 * (v[0] * v[0] + v[1] * v[1] + v[2] * v[2])).exp()
    })
    .unwrap()
}

/// Potential of the unit Maxwellian: erf(r/√2)/(4πr).
fn potential_exact(r: f64) -> f64 {
    if r < 1e-12 {
        return (2.0 / PI).sqrt() / (4.0 * PI);
    }
    libm::erf(r / 2f64.sqrt()) / (4.0 * PI * r)
}

/// d/dr of the potential; ∇a = a'(r) v/r.
fn potential_slope(r: f64) -> f64 {
    let gauss = (2.0 / PI).sqrt() * (-0.5 * r * r).exp();
    (gauss * r - libm::erf(r / 2f64.sqrt())) / (4.0 * PI * r * r)
}

#[test]
fn maxwellian_potential_and_drift_match_closed_form() {
    let g = VelocityGrid::new(32, 8.0).unwrap();
    let f = maxwellian(&g);
    let c = CoefficientEngine::new(&g).unwrap().coefficients(&f).unwrap();
    let (mut ea, mut eb) = (0.0f64, 0.0f64);
    for idx in 0..g.len() {
        let v = g.point(idx);
        let r = norm3(v);
        ea = ea.max((c.potential.values()[idx] - potential_exact(r)).abs());
        for d in 0..3 {
            eb = eb.max((c.drift.component(d)[idx] - potential_slope(r) * v[d] / r).abs());
        }
    }
    // a(0) ≈ 0.0635 and |∇a| peaks near 0.03; both errors are O(h²)
    assert!(ea < 1e-4, "potential error {ea:e}");
    assert!(eb < 1e-3, "drift error {eb:e}");
}

#[test]
fn trace_identity_and_isotropy() {
    let g = VelocityGrid::new(16, 6.0).unwrap();
    let f = maxwellian(&g);
    let c = CoefficientEngine::new(&g).unwrap().coefficients(&f).unwrap();
    let report = coefficient_report(&f, &c, 2.0, None).unwrap();
    assert!(report.trace_residual <= 1e-12, "{:e}", report.trace_residual);
    assert!(report.c0_empirical > 0.0);
    // the eight cells around the origin see the same diagonal
    let n = g.n();
    let centre = g.index(n / 2, n / 2, n / 2);
    let d = c.diffusion.at(centre);
    assert!((d[0] - d[1]).abs() < 1e-15 && (d[1] - d[2]).abs() < 1e-15);
}

#[test]
fn divergence_of_a_is_grad_a() {
    let g = VelocityGrid::new(32, 8.0).unwrap();
    let f = maxwellian(&g);
    let c = CoefficientEngine::new(&g).unwrap().coefficients(&f).unwrap();
    let coarse = divergence_residual(&c);
    let g2 = VelocityGrid::new(16, 8.0).unwrap();
    let c2 = CoefficientEngine::new(&g2)
        .unwrap()
        .coefficients(&maxwellian(&g2))
        .unwrap();
    let finer_is_better = divergence_residual(&c2) / coarse;
    assert!(coarse < 2e-3, "{coarse:e}");
    assert!(finer_is_better > 2.0, "{finer_is_better}");
}

#[test]
fn free_space_decay() {
    // far from the support the potential is mass/(4π|v|)
    let g = VelocityGrid::new(32, 16.0).unwrap();
    let f = maxwellian(&g);
    let a = coulomb_potential(&f).unwrap();
    let corner = g.index(0, 0, 0);
    let r = norm3(g.point(corner));
    let expect = f.integral() / (4.0 * PI * r);
    assert!((a.values()[corner] / expect - 1.0).abs() < 1e-3);
}

fn random_field(values: Vec<f64>) -> ScalarField {
    ScalarField::new(VelocityGrid::new(8, 3.0).unwrap(), values).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn nonnegative_data_give_positive_semidefinite_coefficients(
        values in prop::collection::vec(0.0f64..1.0, 512),
    ) {
        let f = random_field(values);
        let c = CoefficientEngine::new(f.grid()).unwrap().coefficients(&f).unwrap();
        prop_assert!(c.potential.min() >= 0.0);
        let (_, sup, lambda_min) = spectral_summary(&c.diffusion);
        prop_assert!(lambda_min >= -1e-14 * sup);
    }

    #[test]
    fn coefficients_are_linear(
        x in prop::collection::vec(0.0f64..1.0, 512),
        y in prop::collection::vec(0.0f64..1.0, 512),
        s in 0.1f64..3.0,
    ) {
        let sum: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a + s * b).collect();
        let (fx, fy, fs) = (random_field(x), random_field(y), random_field(sum));
        let engine = CoefficientEngine::new(fx.grid()).unwrap();
        let (ax, ay, az) = (
            engine.coulomb_potential(&fx).unwrap(),
            engine.coulomb_potential(&fy).unwrap(),
            engine.coulomb_potential(&fs).unwrap(),
        );
        let scale = az.max_abs();
        for i in 0..az.values().len() {
            let lin = ax.values()[i] + s * ay.values()[i];
            prop_assert!((az.values()[i] - lin).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn reflection_covariance(values in prop::collection::vec(0.0f64..1.0, 512)) {
        let f = random_field(values);
        let g = f.grid().clone();
        let n = g.n();
        let mirror = |idx: usize| {
            let (i, j, k) = g.unravel(idx);
            g.index(n - 1 - i, j, k)
        };
        let reflected = ScalarField::new(g.clone(), (0..g.len()).map(|i| f.values()[mirror(i)]).collect()).unwrap();
        let engine = CoefficientEngine::new(&g).unwrap();
        let (c, r) = (engine.coefficients(&f).unwrap(), engine.coefficients(&reflected).unwrap());
        let tol = 1e-12 * c.potential.max_abs();
        for i in 0..g.len() {
            prop_assert!((r.potential.values()[i] - c.potential.values()[mirror(i)]).abs() <= tol);
            // ∂_x a flips sign under x → -x
            prop_assert!((r.drift.component(0)[i] + c.drift.component(0)[mirror(i)]).abs() <= tol);
        }
    }
}
