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

//! Closed-form exponent relations of the L^p propagation and De Giorgi
//! smoothing estimates.
//!
//! Every rational exponent is evaluated twice: once in exact rational
//! arithmetic on the binary value of the inputs (the reported route) and once
//! in plain `f64` (kept as an independent cross-check, see
//! [`ExponentSet::from_floats`]). The barrier quantities `Q` and `K` involve
//! real powers and are computed in floating point through logarithms.

use std::fmt;
use std::ops::{Add, Div, Mul, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Minimal field interface shared by the exact and floating-point routes.
pub trait Field:
    Clone + PartialOrd + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Div<Output = Self>
{
    fn from_int(v: i64) -> Self;
    fn to_float(&self) -> f64;
    fn is_zero_value(&self) -> bool;
}

impl Field for f64 {
    fn from_int(v: i64) -> Self {
        v as f64
    }
    fn to_float(&self) -> f64 {
        *self
    }
    fn is_zero_value(&self) -> bool {
        *self == 0.0
    }
}

impl Field for BigRational {
    fn from_int(v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }
    fn to_float(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
    fn is_zero_value(&self) -> bool {
        self.is_zero()
    }
}

fn int<T: Field>(v: i64) -> T {
    T::from_int(v)
}

fn checked_div<T: Field>(num: T, den: T, what: &str) -> Result<T> {
    if den.is_zero_value() {
        Err(Error::domain(format!("{what}: zero denominator")))
    } else {
        Ok(num / den)
    }
}

/// Exact binary value of a finite float as a rational.
pub fn rational(x: f64) -> Result<BigRational> {
    BigRational::from_float(x).ok_or_else(|| Error::domain(format!("non-finite input {x}")))
}

fn require_lebesgue<T: Field>(p: &T) -> Result<()> {
    // p > 3/2  <=>  2p - 3 > 0
    if int::<T>(2) * p.clone() - int(3) > int(0) {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "Lebesgue exponent p = {} must exceed 3/2",
            p.to_float()
        )))
    }
}

fn threshold_g<T: Field>(p: &T) -> T {
    int::<T>(9) * (p.clone() - int(1)) / (int::<T>(2) * p.clone() - int(3))
}

fn interpolation_floor_g<T: Field>(p: &T) -> T {
    int::<T>(9) * p.clone() / (int::<T>(2) * p.clone() - int(1))
}

fn require_above_threshold<T: Field>(p: &T, m: &T) -> Result<()> {
    require_lebesgue(p)?;
    let m_star = threshold_g(p);
    if *m > m_star {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "moment order m = {} must exceed m*(p) = {} (De Giorgi gain exponent would be <= 0)",
            m.to_float(),
            m_star.to_float()
        )))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Interpolation<T> {
    pub theta1: T,
    pub theta2: T,
    pub theta3: T,
    pub alpha1: T,
    pub alpha2: T,
}

fn interpolation_g<T: Field>(p: &T, m: &T) -> Result<Interpolation<T>> {
    require_lebesgue(p)?;
    let floor = interpolation_floor_g(p);
    if *m <= floor {
        return Err(Error::domain(format!(
            "moment order m = {} must exceed 9p/(2p-1) = {}",
            m.to_float(),
            floor.to_float()
        )));
    }
    let p = p.clone();
    let m = m.clone();
    let p1 = p.clone() + int(1);
    let den = p1.clone() * (int::<T>(2) * p.clone() * m.clone() - int::<T>(9) * p.clone() + int(9));
    let theta1 = checked_div(int::<T>(3) * m.clone() * p.clone(), den.clone(), "theta1")?;
    let theta2 = checked_div(
        int::<T>(2) * p.clone() * p.clone() * m.clone() - int::<T>(9) * p.clone() * p.clone() - m.clone() * p.clone(),
        den.clone(),
        "theta2",
    )?;
    let theta3 = checked_div(int(9), den, "theta3")?;
    let young = p.clone() - p1.clone() * theta1.clone();
    let alpha1 = checked_div(p1.clone() * theta2.clone(), young.clone(), "alpha1")?;
    let alpha2 = checked_div(p.clone() * p1 * theta3.clone(), young, "alpha2")?;
    Ok(Interpolation {
        theta1,
        theta2,
        theta3,
        alpha1,
        alpha2,
    })
}

fn gain_g<T: Field>(p: &T, m: &T) -> T {
    // 2(p - 3/2)/(3m) * [m - 9(p-1)/(2(p-3/2))] = ((2p-3) m - 9(p-1)) / (3m)
    ((int::<T>(2) * p.clone() - int(3)) * m.clone() - int::<T>(9) * (p.clone() - int(1))) / (int::<T>(3) * m.clone())
}

fn beta_g<T: Field>(m: &T) -> T {
    int::<T>(2) / int(3) - int::<T>(3) / m.clone()
}

#[derive(Clone, Debug, PartialEq)]
struct Smoothing<T> {
    beta: T,
    gamma: T,
    gamma_tilde: T,
    beta_star: T,
}

fn smoothing_g<T: Field>(p: &T, m: &T) -> Result<Smoothing<T>> {
    require_above_threshold(p, m)?;
    let beta = beta_g(m);
    let gamma = gain_g(p, m);
    let shifted = p.clone() + gamma.clone();
    let gamma_tilde = gain_g(&shifted, m);
    let one = int::<T>(1);
    let beta_star = (one.clone() + beta.clone()) / (one + beta.clone() + gamma_tilde.clone());
    Ok(Smoothing {
        beta,
        gamma,
        gamma_tilde,
        beta_star,
    })
}

/// Minimal weight order m*(p) = (9/2)(p-1)/(p-3/2).
pub fn moment_threshold(p: f64) -> Result<f64> {
    let p = rational(p)?;
    require_lebesgue(&p)?;
    Ok(threshold_g(&p).to_float())
}

/// Interpolation exponents θ₁, θ₂, θ₃ and the differential-inequality
/// exponents α₁, α₂. Requires p > 3/2 and m > 9p/(2p-1); the α's are only
/// meaningful (α₁ > 1) once m > m*(p).
pub fn interpolation_exponents(p: f64, m: f64) -> Result<Interpolation<f64>> {
    let exact = interpolation_g(&rational(p)?, &rational(m)?)?;
    Ok(Interpolation {
        theta1: exact.theta1.to_float(),
        theta2: exact.theta2.to_float(),
        theta3: exact.theta3.to_float(),
        alpha1: exact.alpha1.to_float(),
        alpha2: exact.alpha2.to_float(),
    })
}

/// Exact rational interpolation exponents.
pub fn interpolation_exponents_exact(p: &BigRational, m: &BigRational) -> Result<Interpolation<BigRational>> {
    interpolation_g(p, m)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DeGiorgiExponents {
    pub beta: f64,
    pub gamma: f64,
}

pub fn degiorgi_exponents(p: f64, m: f64) -> Result<DeGiorgiExponents> {
    let (p, m) = (rational(p)?, rational(m)?);
    require_above_threshold(&p, &m)?;
    Ok(DeGiorgiExponents {
        beta: beta_g(&m).to_float(),
        gamma: gain_g(&p, &m).to_float(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SmoothingExponent {
    pub gamma_tilde: f64,
    pub beta_star: f64,
}

pub fn smoothing_exponent(p: f64, m: f64) -> Result<SmoothingExponent> {
    let set = ExponentSet::new(p, m)?;
    Ok(SmoothingExponent {
        gamma_tilde: set.gamma_tilde,
        beta_star: set.beta_star,
    })
}

/// All exponents for one admissible (p, m).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExponentSet {
    pub p: f64,
    pub m: f64,
    pub theta1: f64,
    pub theta2: f64,
    pub theta3: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub beta: f64,
    pub gamma: f64,
    pub gamma_tilde: f64,
    pub beta_star: f64,
    pub m_star: f64,
}

pub const CSV_HEADER: &str = "p,m,theta1,theta2,theta3,alpha1,alpha2,beta,gamma,gamma_tilde,beta_star,m_star";

impl ExponentSet {
    /// Exact route: all relations evaluated in rational arithmetic on the
    /// binary values of `p` and `m`, rounded once at the end.
    pub fn new(p: f64, m: f64) -> Result<Self> {
        let exact = ExactExponentSet::new(&rational(p)?, &rational(m)?)?;
        Ok(exact.to_floats(p, m))
    }

    /// Floating-point route over the same formulas.
    pub fn from_floats(p: f64, m: f64) -> Result<Self> {
        if !p.is_finite() || !m.is_finite() {
            return Err(Error::domain("non-finite exponent input"));
        }
        let interp = interpolation_g(&p, &m)?;
        let smooth = smoothing_g(&p, &m)?;
        let set = ExponentSet {
            p,
            m,
            theta1: interp.theta1,
            theta2: interp.theta2,
            theta3: interp.theta3,
            alpha1: interp.alpha1,
            alpha2: interp.alpha2,
            beta: smooth.beta,
            gamma: smooth.gamma,
            gamma_tilde: smooth.gamma_tilde,
            beta_star: smooth.beta_star,
            m_star: threshold_g(&p),
        };
        set.check_invariants()?;
        Ok(set)
    }

    fn check_invariants(&self) -> Result<()> {
        let lower = 1.5 / self.p;
        if !(self.beta_star > lower && self.beta_star < 1.0) {
            return Err(Error::domain(format!(
                "beta* = {} left (3/(2p), 1) = ({lower}, 1)",
                self.beta_star
            )));
        }
        if !(self.alpha1 > 1.0) {
            return Err(Error::domain(format!("alpha1 = {} <= 1", self.alpha1)));
        }
        Ok(())
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            self.p,
            self.m,
            self.theta1,
            self.theta2,
            self.theta3,
            self.alpha1,
            self.alpha2,
            self.beta,
            self.gamma,
            self.gamma_tilde,
            self.beta_star,
            self.m_star
        )
    }

    fn entries(&self) -> [(&'static str, f64); 12] {
        [
            ("p", self.p),
            ("m", self.m),
            ("theta1", self.theta1),
            ("theta2", self.theta2),
            ("theta3", self.theta3),
            ("alpha1", self.alpha1),
            ("alpha2", self.alpha2),
            ("beta", self.beta),
            ("gamma", self.gamma),
            ("gamma_tilde", self.gamma_tilde),
            ("beta_star", self.beta_star),
            ("m_star", self.m_star),
        ]
    }
}

impl fmt::Display for ExponentSet {
    /// Aligned `key = value` lines.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (key, value) in self.entries() {
            writeln!(f, "{key:<12}= {value}")?;
        }
        Ok(())
    }
}

/// Exact rational counterpart of [`ExponentSet`].
#[derive(Clone, Debug, PartialEq)]
pub struct ExactExponentSet {
    pub theta1: BigRational,
    pub theta2: BigRational,
    pub theta3: BigRational,
    pub alpha1: BigRational,
    pub alpha2: BigRational,
    pub beta: BigRational,
    pub gamma: BigRational,
    pub gamma_tilde: BigRational,
    pub beta_star: BigRational,
    pub m_star: BigRational,
}

impl ExactExponentSet {
    pub fn new(p: &BigRational, m: &BigRational) -> Result<Self> {
        let interp = interpolation_g(p, m)?;
        let smooth = smoothing_g(p, m)?;
        let set = ExactExponentSet {
            theta1: interp.theta1,
            theta2: interp.theta2,
            theta3: interp.theta3,
            alpha1: interp.alpha1,
            alpha2: interp.alpha2,
            beta: smooth.beta,
            gamma: smooth.gamma,
            gamma_tilde: smooth.gamma_tilde,
            beta_star: smooth.beta_star,
            m_star: threshold_g(p),
        };
        set.verify_constraints(p, m)?;
        Ok(set)
    }

    /// Re-checks the three defining constraints of the θ's exactly.
    fn verify_constraints(&self, p: &BigRational, m: &BigRational) -> Result<()> {
        let one = int::<BigRational>(1);
        let sum = self.theta1.clone() + self.theta2.clone() + self.theta3.clone();
        let scaling = self.theta1.clone() / (int::<BigRational>(3) * p.clone())
            + self.theta2.clone() / p.clone()
            + self.theta3.clone();
        let target = one.clone() / (p.clone() + one.clone());
        let weight = -(int::<BigRational>(3) / p.clone()) * self.theta1.clone() + m.clone() * self.theta3.clone();
        if sum != one || scaling != target || !weight.is_zero() {
            return Err(Error::domain("interpolation constraints violated"));
        }
        for theta in [&self.theta1, &self.theta2, &self.theta3] {
            if !theta.is_positive() || *theta >= one {
                return Err(Error::domain("interpolation exponent outside (0, 1)"));
            }
        }
        let lower = int::<BigRational>(3) / (int::<BigRational>(2) * p.clone());
        if !(self.beta_star > lower && self.beta_star < one) {
            return Err(Error::domain("beta* outside (3/(2p), 1)"));
        }
        if self.alpha1 <= one || !self.gamma.is_positive() {
            return Err(Error::domain("alpha1 <= 1 or gamma <= 0"));
        }
        Ok(())
    }

    pub fn to_floats(&self, p: f64, m: f64) -> ExponentSet {
        ExponentSet {
            p,
            m,
            theta1: self.theta1.to_float(),
            theta2: self.theta2.to_float(),
            theta3: self.theta3.to_float(),
            alpha1: self.alpha1.to_float(),
            alpha2: self.alpha2.to_float(),
            beta: self.beta.to_float(),
            gamma: self.gamma.to_float(),
            gamma_tilde: self.gamma_tilde.to_float(),
            beta_star: self.beta_star.to_float(),
            m_star: self.m_star.to_float(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Criticality {
    Subcritical,
    Critical,
    Supercritical,
}

impl fmt::Display for Criticality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Criticality::Subcritical => "subcritical",
            Criticality::Critical => "critical",
            Criticality::Supercritical => "supercritical",
        })
    }
}

/// Classification of a mixed space-time integrability pair (r, p).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProdiSerrin {
    pub p: f64,
    pub r: f64,
    pub m: f64,
    /// 2/r + 3/p.
    pub scaling: f64,
    pub criticality: Criticality,
    /// p α₁ - p at this m.
    pub gronwall_exponent: f64,
    /// 2p/(2p-3), the limit of p α₁ - p as m → ∞.
    pub infimum: f64,
    /// p α₁ - p < r.
    pub gronwall_condition: bool,
    pub m_star: f64,
}

/// `r` may be `f64::INFINITY`.
pub fn prodi_serrin_classify(p: f64, r: f64, m: f64) -> Result<ProdiSerrin> {
    if !(r > 0.0) || r.is_nan() {
        return Err(Error::domain(format!("time exponent r = {r} must be positive")));
    }
    let (pe, me) = (rational(p)?, rational(m)?);
    require_above_threshold(&pe, &me)?;
    let two = int::<BigRational>(2);
    let three = int::<BigRational>(3);
    let space = three.clone() / pe.clone();
    let scaling = if r.is_infinite() {
        space
    } else {
        two.clone() / rational(r)? + space
    };
    let criticality = if scaling < two {
        Criticality::Subcritical
    } else if scaling == two {
        Criticality::Critical
    } else {
        Criticality::Supercritical
    };
    let interp = interpolation_g(&pe, &me)?;
    let gronwall = interp.alpha1 * pe.clone() - pe.clone();
    let infimum = two.clone() * pe.clone() / (two * pe.clone() - three);
    let gronwall_condition = r.is_infinite() || gronwall < rational(r)?;
    Ok(ProdiSerrin {
        p,
        r,
        m,
        scaling: scaling.to_float(),
        criticality,
        gronwall_exponent: gronwall.to_float(),
        infimum: infimum.to_float(),
        gronwall_condition,
        m_star: threshold_g(&pe).to_float(),
    })
}

/// Closed form (2mp - 9p)/(m(2p-3) - 9p + 9) of p α₁ - p.
pub fn gronwall_exponent_closed_form(p: f64, m: f64) -> f64 {
    (2.0 * m * p - 9.0 * p) / (m * (2.0 * p - 3.0) - 9.0 * p + 9.0)
}

/// Geometric barrier for the De Giorgi recurrence.
#[derive(Clone, Debug, PartialEq)]
pub struct Barrier {
    pub a0: f64,
    pub t: f64,
    pub beta: f64,
    pub gamma: f64,
    pub c1: f64,
    /// Q = 2^{(γ+1+β)/β}.
    pub q: f64,
    pub ln_q: f64,
    /// Level cap K; may overflow to +inf for tiny γ, `ln_k` stays finite.
    pub k: f64,
    pub ln_k: f64,
    /// A*_n = A₀ Q^{-n}, n = 0..=n_max.
    pub sequence: Vec<f64>,
}

pub fn degiorgi_barrier(a0: f64, t: f64, beta: f64, gamma: f64, c1: f64, n_max: usize) -> Result<Barrier> {
    for (name, value) in [("A0", a0), ("t", t), ("beta", beta), ("gamma", gamma), ("C1", c1)] {
        if !(value > 0.0) || !value.is_finite() {
            return Err(Error::domain(format!("{name} = {value} must be positive and finite")));
        }
    }
    let ln2 = std::f64::consts::LN_2;
    let ln_q = (gamma + 1.0 + beta) / beta * ln2;
    let ln_x = (1.0 + beta) * ln2 + c1.ln() + 2.0 * ln_q;
    let total = 1.0 + beta + gamma;
    let ln_first = (ln_x / gamma).max(ln_x / total);
    let ln_a0 = a0.ln();
    let ln_second = (beta / gamma * ln_a0).max(beta / total * ln_a0 - (1.0 + beta) / total * t.ln());
    let ln_k = ln_first + ln_second;
    let sequence = (0..=n_max)
        .map(|n| if n == 0 { a0 } else { (ln_a0 - n as f64 * ln_q).exp() })
        .collect();
    Ok(Barrier {
        a0,
        t,
        beta,
        gamma,
        c1,
        q: ln_q.exp(),
        ln_q,
        k: ln_k.exp(),
        ln_k,
        sequence,
    })
}

impl Barrier {
    /// log of A*_n.
    pub fn ln_level(&self, n: usize) -> f64 {
        self.a0.ln() - n as f64 * self.ln_q
    }

    /// Logarithmic margin ln A*_{n+2} - ln(right-hand side of the recurrence
    /// evaluated on A*_n). Nonnegative when the barrier dominates.
    pub fn reversed_recurrence_margin(&self, n: usize) -> f64 {
        let (b, g) = (self.beta, self.gamma);
        let ln2 = std::f64::consts::LN_2;
        // ln(1/(tK) + 1) computed stably when tK is huge or tiny
        let ln_tk = self.t.ln() + self.ln_k;
        let ln_bracket = if ln_tk > 0.0 {
            (-ln_tk).exp().ln_1p()
        } else {
            -ln_tk + ln_tk.exp().ln_1p()
        };
        let ln_rhs = self.c1.ln() + n as f64 * (g + 1.0 + b) * ln2 + (1.0 + b) * self.ln_level(n) - g * self.ln_k
            + (1.0 + b) * ln_bracket;
        self.ln_level(n + 2) - ln_rhs
    }
}
