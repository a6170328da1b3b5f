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

//! Analytic initial data (Maxwellians, truncated power-law spikes and their
//! mixtures) and the moment normalization to (mass, momentum, energy) =
//! (1, 0, 3).

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{norm3, ScalarField, VelocityGrid};

/// One analytic profile.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Component {
    /// ρ (2πθ)^{-3/2} exp(-|v-u|²/(2θ)).
    Maxwellian {
        density: f64,
        velocity: [f64; 3],
        temperature: f64,
    },
    /// c |v - v₀|^{-s} on the ball |v - v₀| < R, zero outside.
    Spike {
        amplitude: f64,
        exponent: f64,
        center: [f64; 3],
        radius: f64,
    },
}

impl Component {
    fn eval(&self, v: [f64; 3], r_floor: f64) -> f64 {
        match *self {
            Component::Maxwellian {
                density,
                velocity,
                temperature,
            } => {
                let d = sub(v, velocity);
                let r2 = dot(d, d);
                density * (2.0 * PI * temperature).powf(-1.5) * (-r2 / (2.0 * temperature)).exp()
            }
            Component::Spike {
                amplitude,
                exponent,
                center,
                radius,
            } => {
                let r = norm3(sub(v, center));
                if r < radius {
                    amplitude * r.max(r_floor).powf(-exponent)
                } else {
                    0.0
                }
            }
        }
    }

    /// (mass, momentum, ∫|v|² f) over all of R³.
    fn moments(&self) -> (f64, [f64; 3], f64) {
        match *self {
            Component::Maxwellian {
                density,
                velocity,
                temperature,
            } => (
                density,
                scale(velocity, density),
                density * (dot(velocity, velocity) + 3.0 * temperature),
            ),
            Component::Spike {
                amplitude,
                exponent,
                center,
                radius,
            } => {
                let mass = 4.0 * PI * amplitude * radius.powf(3.0 - exponent) / (3.0 - exponent);
                let spread = 4.0 * PI * amplitude * radius.powf(5.0 - exponent) / (5.0 - exponent);
                (mass, scale(center, mass), mass * dot(center, center) + spread)
            }
        }
    }

    /// Profile of v ↦ κ f(σ v + shift).
    fn affine(&self, kappa: f64, sigma: f64, shift: [f64; 3]) -> Component {
        match *self {
            Component::Maxwellian {
                density,
                velocity,
                temperature,
            } => Component::Maxwellian {
                density: kappa * density / sigma.powi(3),
                velocity: scale(sub(velocity, shift), 1.0 / sigma),
                temperature: temperature / (sigma * sigma),
            },
            Component::Spike {
                amplitude,
                exponent,
                center,
                radius,
            } => Component::Spike {
                amplitude: kappa * amplitude * sigma.powf(-exponent),
                exponent,
                center: scale(sub(center, shift), 1.0 / sigma),
                radius: radius / sigma,
            },
        }
    }
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn scale(a: [f64; 3], s: f64) -> [f64; 3] {
    [a[0] * s, a[1] * s, a[2] * s]
}

/// Sum of analytic components; kept alongside sampled fields so that
/// normalization can re-evaluate instead of resample.
#[derive(Clone, Debug, PartialEq)]
pub struct Datum {
    components: Vec<Component>,
    /// Lebesgue exponent the datum was built for, if it is a rough datum.
    lebesgue: Option<f64>,
}

impl Datum {
    pub fn maxwellian(density: f64, velocity: [f64; 3], temperature: f64) -> Result<Self> {
        if !(density > 0.0) || !(temperature > 0.0) || velocity.iter().any(|u| !u.is_finite()) {
            return Err(Error::domain(format!(
                "Maxwellian needs positive density and temperature (got {density}, {temperature})"
            )));
        }
        Ok(Datum {
            components: vec![Component::Maxwellian {
                density,
                velocity,
                temperature,
            }],
            lebesgue: None,
        })
    }

    /// Unit-mass spike c |v - v₀|^{-(3/p - δ)} truncated at `radius`.
    pub fn spike(p: f64, delta: f64, center: [f64; 3], radius: f64) -> Result<Self> {
        if !(p >= 1.0) {
            return Err(Error::domain(format!("spike exponent p = {p} must be >= 1")));
        }
        let critical = 3.0 / p;
        if !(delta > 0.0) || !(delta < critical) {
            return Err(Error::domain(format!(
                "spike needs 0 < delta < 3/p = {critical} (got {delta})"
            )));
        }
        if !(radius > 0.0) || center.iter().any(|c| !c.is_finite()) {
            return Err(Error::domain("spike radius must be positive"));
        }
        let exponent = critical - delta;
        let amplitude = (3.0 - exponent) / (4.0 * PI * radius.powf(3.0 - exponent));
        Ok(Datum {
            components: vec![Component::Spike {
                amplitude,
                exponent,
                center,
                radius,
            }],
            lebesgue: Some(p),
        })
    }

    /// (1 - w) · maxwellian + w · spike.
    pub fn mixture(weight: f64, maxwellian: &Datum, spike: &Datum) -> Result<Self> {
        if !(0.0..=1.0).contains(&weight) {
            return Err(Error::domain(format!("mixture weight {weight} outside [0, 1]")));
        }
        let mut components = maxwellian.scaled(1.0 - weight).components;
        components.extend(spike.scaled(weight).components);
        Ok(Datum {
            components,
            lebesgue: spike.lebesgue.or(maxwellian.lebesgue),
        })
    }

    fn scaled(&self, factor: f64) -> Datum {
        Datum {
            components: self
                .components
                .iter()
                .map(|c| c.affine(factor, 1.0, [0.0; 3]))
                .collect(),
            lebesgue: self.lebesgue,
        }
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn lebesgue(&self) -> Option<f64> {
        self.lebesgue
    }

    pub fn is_rough(&self) -> bool {
        self.components
            .iter()
            .any(|c| matches!(c, Component::Spike { exponent, .. } if *exponent > 0.0))
    }

    /// Pointwise value; spike singularities are evaluated at distance no
    /// smaller than `r_floor`.
    pub fn eval(&self, v: [f64; 3], r_floor: f64) -> f64 {
        self.components.iter().map(|c| c.eval(v, r_floor)).sum()
    }

    /// Samples at cell centers. A spike center landing exactly on a cell
    /// center is evaluated at a quarter cell.
    pub fn sample(&self, grid: &VelocityGrid) -> Result<ScalarField> {
        let l = grid.half_width();
        for c in &self.components {
            if let Component::Spike { center, .. } = c {
                if center.iter().any(|x| x.abs() >= l) {
                    return Err(Error::domain(format!(
                        "spike center {center:?} lies outside [-{l}, {l}]^3"
                    )));
                }
            }
        }
        let floor = 0.25 * grid.spacing();
        ScalarField::from_fn(*grid, |v| self.eval(v, floor))
    }

    /// Exact (mass, momentum, energy) over R³.
    pub fn moments(&self) -> (f64, [f64; 3], f64) {
        let mut mass = 0.0;
        let mut momentum = [0.0; 3];
        let mut energy = 0.0;
        for c in &self.components {
            let (m, p, e) = c.moments();
            mass += m;
            momentum = [momentum[0] + p[0], momentum[1] + p[1], momentum[2] + p[2]];
            energy += e;
        }
        (mass, momentum, energy)
    }

    /// Datum of v ↦ κ f(σ v + shift).
    pub fn affine(&self, kappa: f64, sigma: f64, shift: [f64; 3]) -> Datum {
        Datum {
            components: self.components.iter().map(|c| c.affine(kappa, sigma, shift)).collect(),
            lebesgue: self.lebesgue,
        }
    }

    /// Analytic normalization to moments (1, 0, 3).
    pub fn normalized(&self) -> Result<Datum> {
        let (mass, momentum, energy) = self.moments();
        let t = NormalizingMap::from_moments(mass, momentum, energy)?;
        Ok(self.affine(t.kappa, t.sigma, t.shift))
    }
}

/// Affine change g(v) = κ f(σ v + u) taking moments (ρ, ρu, E) to (1, 0, 3).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormalizingMap {
    pub kappa: f64,
    pub sigma: f64,
    pub shift: [f64; 3],
}

impl NormalizingMap {
    pub fn from_moments(mass: f64, momentum: [f64; 3], energy: f64) -> Result<Self> {
        if !(mass > 0.0) {
            return Err(Error::domain(format!("cannot normalize: mass {mass} is not positive")));
        }
        let u = scale(momentum, 1.0 / mass);
        let theta = (energy / mass - dot(u, u)) / 3.0;
        if !(theta > 0.0) {
            return Err(Error::domain(format!(
                "cannot normalize: temperature {theta} is not positive"
            )));
        }
        Ok(NormalizingMap {
            kappa: theta.powf(1.5) / mass,
            sigma: theta.sqrt(),
            shift: u,
        })
    }
}

/// Discrete (mass, momentum, energy) by midpoint quadrature.
pub fn discrete_moments(f: &ScalarField) -> (f64, [f64; 3], f64) {
    let mass = f.integral();
    let momentum = [
        f.weighted_integral(|v, x| v[0] * x),
        f.weighted_integral(|v, x| v[1] * x),
        f.weighted_integral(|v, x| v[2] * x),
    ];
    let energy = f.weighted_integral(|v, x| dot(v, v) * x);
    (mass, momentum, energy)
}

/// Normalizes a sampled field by trilinear resampling of κ f(σ v + u).
pub fn normalize(f: &ScalarField) -> Result<ScalarField> {
    f.check_distribution()?;
    let (mass, momentum, energy) = discrete_moments(f);
    let t = NormalizingMap::from_moments(mass, momentum, energy)?;
    ScalarField::from_fn(*f.grid(), |v| {
        let x = [
            t.sigma * v[0] + t.shift[0],
            t.sigma * v[1] + t.shift[1],
            t.sigma * v[2] + t.shift[2],
        ];
        t.kappa * f.interpolate(x)
    })
}

/// Serializable description of an initial datum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DatumSpec {
    Maxwellian {
        #[serde(default = "one")]
        density: f64,
        #[serde(default)]
        velocity: [f64; 3],
        #[serde(default = "one")]
        temperature: f64,
    },
    Spike {
        p: f64,
        delta: f64,
        #[serde(default)]
        center: [f64; 3],
        #[serde(default = "one")]
        radius: f64,
    },
    MaxwellianPlusSpike {
        weight: f64,
        #[serde(default = "one")]
        density: f64,
        #[serde(default)]
        velocity: [f64; 3],
        #[serde(default = "one")]
        temperature: f64,
        p: f64,
        delta: f64,
        #[serde(default)]
        center: [f64; 3],
        #[serde(default = "one")]
        radius: f64,
    },
}

fn one() -> f64 {
    1.0
}

impl DatumSpec {
    pub fn build(&self) -> Result<Datum> {
        match self {
            DatumSpec::Maxwellian {
                density,
                velocity,
                temperature,
            } => Datum::maxwellian(*density, *velocity, *temperature),
            DatumSpec::Spike {
                p,
                delta,
                center,
                radius,
            } => Datum::spike(*p, *delta, *center, *radius),
            DatumSpec::MaxwellianPlusSpike {
                weight,
                density,
                velocity,
                temperature,
                p,
                delta,
                center,
                radius,
            } => Datum::mixture(
                *weight,
                &Datum::maxwellian(*density, *velocity, *temperature)?,
                &Datum::spike(*p, *delta, *center, *radius)?,
            ),
        }
    }
}

/// Sampled datum together with its analytic descriptor.
#[derive(Clone, Debug)]
pub struct Generated {
    pub datum: Datum,
    pub field: ScalarField,
}

/// Builds the datum, optionally normalizes it analytically, and samples it.
pub fn generate(spec: &DatumSpec, grid: &VelocityGrid, normalize: bool) -> Result<Generated> {
    let mut datum = spec.build()?;
    if normalize {
        datum = datum.normalized()?;
    }
    let field = datum.sample(grid)?;
    Ok(Generated { datum, field })
}
