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

//! Per-state diagnostics, weighted dissipation, level sets and the
//! level-set functionals E_ℓ and A_ℓ.

use std::fmt::Write as _;

use crate::datum::{discrete_moments, Datum};
use crate::error::{Error, Result};
use crate::grid::{bracket, stable_sum, ScalarField};

/// Which L^p norms, weighted moments and dissipations to record.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagnosticsSpec {
    pub p_list: Vec<f64>,
    pub k_list: Vec<f64>,
}

impl Default for DiagnosticsSpec {
    fn default() -> Self {
        DiagnosticsSpec {
            p_list: vec![2.0],
            k_list: vec![3.0, 4.0],
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiagnosticsRecord {
    pub time: f64,
    pub mass: f64,
    pub momentum: [f64; 3],
    pub energy: f64,
    pub entropy: f64,
    /// (p, ‖f‖_p)
    pub lp: Vec<(f64, f64)>,
    pub linf: f64,
    /// (k, ∫⟨v⟩^k f)
    pub moments: Vec<(f64, f64)>,
    /// (p, ∫⟨v⟩^{-3}|∇f^{p/2}|²)
    pub dissipation: Vec<(f64, f64)>,
}

impl DiagnosticsRecord {
    pub fn csv_header(spec: &DiagnosticsSpec) -> String {
        let mut s = String::from("time,mass,momentum_x,momentum_y,momentum_z,energy,entropy");
        for p in &spec.p_list {
            let _ = write!(s, ",lp_{p}");
        }
        s.push_str(",linf");
        for k in &spec.k_list {
            let _ = write!(s, ",moment_{k}");
        }
        for p in &spec.p_list {
            let _ = write!(s, ",dissipation_{p}");
        }
        s
    }

    /// Shortest round-trip representation of every value.
    pub fn csv_row(&self) -> String {
        let mut s = format!(
            "{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
            self.time, self.mass, self.momentum[0], self.momentum[1], self.momentum[2], self.energy, self.entropy
        );
        for (_, v) in &self.lp {
            let _ = write!(s, ",{v:e}");
        }
        let _ = write!(s, ",{:e}", self.linf);
        for (_, v) in &self.moments {
            let _ = write!(s, ",{v:e}");
        }
        for (_, v) in &self.dissipation {
            let _ = write!(s, ",{v:e}");
        }
        s
    }

    pub fn lp_norm(&self, p: f64) -> Option<f64> {
        self.lp.iter().find(|(q, _)| *q == p).map(|(_, v)| *v)
    }

    pub fn moment(&self, k: f64) -> Option<f64> {
        self.moments.iter().find(|(q, _)| *q == k).map(|(_, v)| *v)
    }
}

/// ‖f‖_p by midpoint quadrature.
pub fn lp_norm(f: &ScalarField, p: f64) -> f64 {
    if p.is_infinite() {
        return f.max_abs();
    }
    let h3 = f.grid().cell_volume();
    (stable_sum(f.values().iter().map(|x| x.abs().powf(p))) * h3).powf(1.0 / p)
}

/// ∫⟨v⟩^k |f|.
pub fn weighted_moment(f: &ScalarField, k: f64) -> f64 {
    f.weighted_integral(|v, x| bracket(v).powf(k) * x.abs())
}

/// ∫ f log f with 0 log 0 = 0.
pub fn entropy(f: &ScalarField) -> f64 {
    let h3 = f.grid().cell_volume();
    stable_sum(f.values().iter().map(|&x| if x > 0.0 { x * x.ln() } else { 0.0 })) * h3
}

/// ∫⟨v⟩^{-3}|∇g|² with centered differences.
pub fn weighted_gradient_energy(g: &ScalarField) -> f64 {
    let grad = g.gradient();
    let grid = g.grid();
    stable_sum((0..grid.len()).map(|idx| {
        let w = bracket(grid.point(idx)).powi(-3);
        w * (grad[0][idx].powi(2) + grad[1][idx].powi(2) + grad[2][idx].powi(2))
    })) * grid.cell_volume()
}

/// D_p(f) = ∫⟨v⟩^{-3}|∇f^{p/2}|².
pub fn dissipation(f: &ScalarField, p: f64) -> Result<f64> {
    f.check_distribution()?;
    if !(p >= 1.0) {
        return Err(Error::domain(format!("dissipation needs p >= 1 (got {p})")));
    }
    Ok(weighted_gradient_energy(&f.map(|x| x.powf(p / 2.0))?))
}

pub fn diagnostics(f: &ScalarField, spec: &DiagnosticsSpec, time: f64) -> Result<DiagnosticsRecord> {
    f.check_distribution()?;
    let (mass, momentum, energy) = discrete_moments(f);
    let lp = spec.p_list.iter().map(|&p| (p, lp_norm(f, p))).collect();
    let moments = spec.k_list.iter().map(|&k| (k, weighted_moment(f, k))).collect();
    let dissipation = spec
        .p_list
        .iter()
        .map(|&p| dissipation(f, p).map(|d| (p, d)))
        .collect::<Result<Vec<_>>>()?;
    Ok(DiagnosticsRecord {
        time,
        mass,
        momentum,
        energy,
        entropy: entropy(f),
        lp,
        linf: f.max_abs(),
        moments,
        dissipation,
    })
}

/// Moment of an analytic datum sampled on the grid and on the same-spacing
/// grid widened to 1.25 L.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TailSensitivity {
    pub k: f64,
    pub at_l: f64,
    pub at_wide: f64,
}

impl TailSensitivity {
    pub fn relative(&self) -> f64 {
        (self.at_wide - self.at_l).abs() / self.at_wide.abs().max(f64::MIN_POSITIVE)
    }
}

pub fn moment_tail_sensitivity(datum: &Datum, grid: &crate::grid::VelocityGrid, k: f64) -> Result<TailSensitivity> {
    let narrow = datum.sample(grid)?;
    let wide = datum.sample(&grid.widened(1.25)?)?;
    Ok(TailSensitivity {
        k,
        at_l: weighted_moment(&narrow, k),
        at_wide: weighted_moment(&wide, k),
    })
}

/// Pointwise (f - ℓ)_+.
pub fn level_set_plus(f: &ScalarField, level: f64) -> ScalarField {
    f.map(|x| (x - level).max(0.0))
        .expect("positive part of a finite field is finite")
}

/// A stored state of a trajectory.
#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub time: f64,
    pub field: ScalarField,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LevelFunctionals {
    pub level: f64,
    pub window: (f64, f64),
    /// sup_t ∫(f_ℓ⁺)^p + ∫∫⟨v⟩^{-3}|∇(f_ℓ⁺)^{p/2}|²
    pub energy: f64,
    /// ∫∫(f_ℓ⁺)^{p+1}
    pub control: f64,
}

/// Per-snapshot integrands of the level functionals at one level.
#[derive(Clone, Debug)]
pub struct LevelProfile {
    pub times: Vec<f64>,
    pub lp_power: Vec<f64>,
    pub weighted_dissipation: Vec<f64>,
    pub lp1_power: Vec<f64>,
}

impl LevelProfile {
    pub fn new(snapshots: &[Snapshot], level: f64, p: f64) -> Result<Self> {
        let mut profile = LevelProfile {
            times: Vec::with_capacity(snapshots.len()),
            lp_power: Vec::with_capacity(snapshots.len()),
            weighted_dissipation: Vec::with_capacity(snapshots.len()),
            lp1_power: Vec::with_capacity(snapshots.len()),
        };
        for s in snapshots {
            let plus = level_set_plus(&s.field, level);
            let h3 = plus.grid().cell_volume();
            profile.times.push(s.time);
            if plus.max() == 0.0 {
                profile.lp_power.push(0.0);
                profile.weighted_dissipation.push(0.0);
                profile.lp1_power.push(0.0);
                continue;
            }
            profile
                .lp_power
                .push(stable_sum(plus.values().iter().map(|x| x.powf(p))) * h3);
            profile
                .lp1_power
                .push(stable_sum(plus.values().iter().map(|x| x.powf(p + 1.0))) * h3);
            profile
                .weighted_dissipation
                .push(weighted_gradient_energy(&plus.map(|x| x.powf(p / 2.0))?));
        }
        Ok(profile)
    }

    pub fn functionals(&self, level: f64, t1: f64, t2: f64) -> Result<LevelFunctionals> {
        check_window(&self.times, t1, t2)?;
        let sup = self
            .times
            .iter()
            .zip(&self.lp_power)
            .filter(|(t, _)| **t >= t1 && **t <= t2)
            .map(|(_, v)| *v)
            .fold(0.0, f64::max);
        Ok(LevelFunctionals {
            level,
            window: (t1, t2),
            energy: sup + integrate_window(&self.times, &self.weighted_dissipation, t1, t2),
            control: integrate_window(&self.times, &self.lp1_power, t1, t2),
        })
    }
}

fn check_window(times: &[f64], t1: f64, t2: f64) -> Result<()> {
    let (Some(first), Some(last)) = (times.first(), times.last()) else {
        return Err(Error::InsufficientData("no snapshots".into()));
    };
    if !(t1 < t2) || t1 < *first || t2 > *last {
        return Err(Error::InsufficientData(format!(
            "window [{t1}, {t2}] not inside the stored range [{first}, {last}]"
        )));
    }
    let inside = times.iter().filter(|t| **t >= t1 && **t <= t2).count();
    if inside < 4 {
        return Err(Error::InsufficientData(format!(
            "window [{t1}, {t2}] holds {inside} snapshots, need at least 4"
        )));
    }
    Ok(())
}

/// Exact integral over [t1, t2] of the piecewise-linear interpolant of
/// (times, values). Times must be increasing and cover the window.
pub fn integrate_window(times: &[f64], values: &[f64], t1: f64, t2: f64) -> f64 {
    let interp = |t: f64| -> f64 {
        let j = times.partition_point(|s| *s < t).clamp(1, times.len() - 1);
        let (a, b) = (times[j - 1], times[j]);
        if b == a {
            return values[j];
        }
        let w = (t - a) / (b - a);
        values[j - 1] * (1.0 - w) + values[j] * w
    };
    let mut nodes = vec![(t1, interp(t1))];
    for (t, v) in times.iter().zip(values) {
        if *t > t1 && *t < t2 {
            nodes.push((*t, *v));
        }
    }
    nodes.push((t2, interp(t2)));
    stable_sum(nodes.windows(2).map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1)))
}

/// E_ℓ(T1, T2) and A_ℓ(T1, T2) from stored snapshots.
pub fn level_functionals(snapshots: &[Snapshot], level: f64, t1: f64, t2: f64, p: f64) -> Result<LevelFunctionals> {
    if !(level >= 0.0) {
        return Err(Error::domain(format!("level {level} must be nonnegative")));
    }
    let times: Vec<f64> = snapshots.iter().map(|s| s.time).collect();
    check_window(&times, t1, t2)?;
    LevelProfile::new(snapshots, level, p)?.functionals(level, t1, t2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::VelocityGrid;

    #[test]
    fn zero_field_diagnostics() {
        let g = VelocityGrid::new(8, 4.0).unwrap();
        let d = diagnostics(&ScalarField::zeros(g), &DiagnosticsSpec::default(), 0.0).unwrap();
        assert_eq!(d.mass, 0.0);
        assert_eq!(d.energy, 0.0);
        assert_eq!(d.entropy, 0.0);
        assert_eq!(d.linf, 0.0);
    }

    #[test]
    fn negative_fields_are_rejected() {
        let g = VelocityGrid::new(8, 4.0).unwrap();
        let mut v = vec![1.0; g.len()];
        v[3] = -1e-300;
        let f = ScalarField::new(g, v).unwrap();
        assert!(diagnostics(&f, &DiagnosticsSpec::default(), 0.0).is_err());
        assert!(dissipation(&f, 2.0).is_err());
    }

    #[test]
    fn constant_field_has_no_dissipation() {
        let g = VelocityGrid::new(8, 4.0).unwrap();
        let f = ScalarField::new(g, vec![0.3; g.len()]).unwrap();
        assert!(dissipation(&f, 2.0).unwrap() < 1e-28);
    }

    #[test]
    fn header_matches_row_width() {
        let spec = DiagnosticsSpec {
            p_list: vec![2.0, 1.5],
            k_list: vec![3.0],
        };
        let g = VelocityGrid::new(8, 4.0).unwrap();
        let f = ScalarField::new(g, vec![0.01; g.len()]).unwrap();
        let d = diagnostics(&f, &spec, 0.5).unwrap();
        let header = DiagnosticsRecord::csv_header(&spec);
        assert!(header.contains("lp_1.5") && header.contains("dissipation_2"));
        assert_eq!(header.split(',').count(), d.csv_row().split(',').count());
    }

    #[test]
    fn window_integral_of_linear_function_is_exact() {
        let times = [0.0, 1.0, 2.5, 4.0];
        let values: Vec<f64> = times.iter().map(|t| 2.0 * t + 1.0).collect();
        // ∫_{0.5}^{3} (2t + 1) dt = 12 - 0.75
        assert!((integrate_window(&times, &values, 0.5, 3.0) - 11.25).abs() < 1e-13);
    }

    #[test]
    fn level_above_maximum_gives_zero_functionals() {
        let g = VelocityGrid::new(8, 4.0).unwrap();
        let snaps: Vec<Snapshot> = (0..5)
            .map(|i| Snapshot {
                time: i as f64,
                field: ScalarField::from_fn(g, |v| (-(v[0] * v[0])).exp()).unwrap(),
            })
            .collect();
        let lf = level_functionals(&snaps, 2.0, 0.0, 4.0, 2.0).unwrap();
        assert_eq!((lf.energy, lf.control), (0.0, 0.0));
        assert!(level_functionals(&snaps, 0.0, 0.5, 2.5, 2.0).is_err());
    }
}
