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

use landau_core::exponents::*;
use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// θ from the three Hölder constraints by Cramer's rule:
/// θ₁ + θ₂ + θ₃ = 1, θ₁/(3p) + θ₂/p + θ₃ = 1/(p+1), -(3/p)θ₁ + mθ₃ = 0.
fn thetas_by_cramer(p: f64, m: f64) -> [f64; 3] {
    let a = [[1.0, 1.0, 1.0], [1.0 / (3.0 * p), 1.0 / p, 1.0], [-3.0 / p, 0.0, m]];
    let b = [1.0, 1.0 / (p + 1.0), 0.0];
    let det = |x: [[f64; 3]; 3]| {
        x[0][0] * (x[1][1] * x[2][2] - x[1][2] * x[2][1]) - x[0][1] * (x[1][0] * x[2][2] - x[1][2] * x[2][0])
            + x[0][2] * (x[1][0] * x[2][1] - x[1][1] * x[2][0])
    };
    let d = det(a);
    let mut out = [0.0; 3];
    for (col, o) in out.iter_mut().enumerate() {
        let mut ac = a;
        for row in 0..3 {
            ac[row][col] = b[row];
        }
        *o = det(ac) / d;
    }
    out
}

#[test]
fn reference_point_values() {
    let e = ExactExponentSet::new(&q(2, 1), &q(10, 1)).unwrap();
    assert_eq!(
        (e.theta1.clone(), e.theta2.clone(), e.theta3.clone()),
        (q(20, 31), q(8, 31), q(3, 31))
    );
    assert_eq!(e.beta, q(11, 30));
    assert_eq!(e.gamma, q(1, 30));
    // shifted index p + γ = 61/30
    assert_eq!(e.gamma_tilde, q(41, 900));
    assert_eq!(e.beta_star, q(1230, 1271));
    assert_eq!(e.m_star, q(9, 1));
    let f = ExponentSet::new(2.0, 10.0).unwrap();
    assert!((f.beta_star - 0.967741935483871).abs() < 1e-12);
    assert!((-f.beta_star - 0.1 - (-1.0677419354838709)).abs() < 1e-12);
}

#[test]
fn cramer_oracle_matches_at_reference_point() {
    let t = thetas_by_cramer(2.0, 10.0);
    let want = [20.0 / 31.0, 8.0 / 31.0, 3.0 / 31.0];
    for (a, b) in t.iter().zip(want) {
        assert!((a - b).abs() < 1e-14);
    }
}

#[test]
fn csv_header_is_stable() {
    assert_eq!(
        CSV_HEADER,
        "p,m,theta1,theta2,theta3,alpha1,alpha2,beta,gamma,gamma_tilde,beta_star,m_star"
    );
}

#[test]
fn gain_vanishes_at_the_threshold() {
    // γ → 0⁺ monotonically as m ↓ m*(p)
    let m_star = moment_threshold(2.0).unwrap();
    let mut last = f64::INFINITY;
    for eps in [1.0, 0.1, 0.01, 0.001] {
        let g = degiorgi_exponents(2.0, m_star + eps).unwrap().gamma;
        assert!(g > 0.0 && g < last);
        last = g;
    }
    assert!(degiorgi_exponents(2.0, m_star).is_err());
}

#[test]
fn criticality_line() {
    assert_eq!(
        prodi_serrin_classify(2.0, 4.0, 10.0).unwrap().criticality,
        Criticality::Critical
    );
    assert_eq!(
        prodi_serrin_classify(2.0, 5.0, 10.0).unwrap().criticality,
        Criticality::Subcritical
    );
    assert_eq!(
        prodi_serrin_classify(2.0, 3.0, 10.0).unwrap().criticality,
        Criticality::Supercritical
    );
}

/// An admissible (p, m): p in (1.6, 6), m a little above m*(p) up to far above.
fn admissible() -> impl Strategy<Value = (f64, f64)> {
    (1.6f64..6.0, 0.001f64..200.0).prop_map(|(p, gap)| {
        let m_star = 9.0 * (p - 1.0) / (2.0 * p - 3.0);
        let floor = 9.0 * p / (2.0 * p - 1.0);
        (p, m_star.max(floor) + gap)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn exact_invariants((p, m) in admissible()) {
        let e = ExactExponentSet::new(&rational(p).unwrap(), &rational(m).unwrap()).unwrap();
        let one = q(1, 1);
        prop_assert_eq!(e.theta1.clone() + e.theta2.clone() + e.theta3.clone(), one.clone());
        prop_assert!(e.alpha1 > one);
        prop_assert!(e.gamma > q(0, 1));
        let lower = q(3, 2) / rational(p).unwrap();
        prop_assert!(e.beta_star > lower && e.beta_star < one);
    }

    #[test]
    fn exact_and_float_routes_agree((p, m) in admissible()) {
        let exact = ExponentSet::new(p, m).unwrap();
        let float = ExponentSet::from_floats(p, m).unwrap();
        for (a, b) in [
            (exact.theta1, float.theta1),
            (exact.theta2, float.theta2),
            (exact.theta3, float.theta3),
            (exact.beta, float.beta),
            (exact.gamma, float.gamma),
            (exact.beta_star, float.beta_star),
        ] {
            prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn thetas_solve_the_hoelder_system((p, m) in admissible()) {
        let e = interpolation_exponents(p, m).unwrap();
        let oracle = thetas_by_cramer(p, m);
        for (a, b) in [e.theta1, e.theta2, e.theta3].iter().zip(oracle) {
            prop_assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn gronwall_exponent_closed_form_agrees((p, m) in admissible()) {
        let c = prodi_serrin_classify(p, 10.0, m).unwrap();
        let closed = gronwall_exponent_closed_form(p, m);
        prop_assert!((c.gronwall_exponent - closed).abs() <= 1e-9 * closed.abs().max(1.0));
        // the infimum over m is approached from above
        prop_assert!(c.gronwall_exponent > c.infimum * (1.0 - 1e-12));
    }

    #[test]
    fn barrier_satisfies_the_reversed_recurrence(
        ln_a0 in -10.0f64..5.0,
        t in 0.01f64..1.0,
        ln_c1 in -8.0f64..4.0,
        (p, m) in admissible(),
    ) {
        let d = degiorgi_exponents(p, m).unwrap();
        let b = degiorgi_barrier(ln_a0.exp(), t, d.beta, d.gamma, ln_c1.exp(), 12).unwrap();
        prop_assert!((b.q.ln() - (d.gamma + 1.0 + d.beta) / d.beta * std::f64::consts::LN_2).abs() < 1e-9);
        for n in 0..10 {
            prop_assert!(b.reversed_recurrence_margin(n) >= -1e-9 * b.ln_k.abs().max(1.0));
        }
    }
}
