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

//! Run configuration: a YAML document with strict key checking.
//!
//! ```yaml
//! grid: { n: 32, half_width: 8.0 }
//! datum: { kind: maxwellian, density: 1.0, velocity: [0, 0, 0], temperature: 1.0 }
//! end_time: 0.5
//! ```
//!
//! Every other section is optional and filled with defaults; see
//! [`RunConfig`] for the full grammar.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::datum::DatumSpec;
use crate::diagnostics::DiagnosticsSpec;
use crate::error::{Error, Result};
use crate::grid::VelocityGrid;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Explicit,
    SemiImplicit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n: usize,
    #[serde(default = "default_half_width")]
    pub half_width: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnapshotConfig {
    /// Number of geometric snapshot times after t = 0.
    pub count: usize,
    /// First snapshot time as a fraction of the end time.
    pub first_fraction: f64,
}

impl Default for SnapshotConfig {
    fn default() -> Self {
        SnapshotConfig {
            count: 40,
            first_fraction: 1e-4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsConfig {
    pub p_list: Vec<f64>,
    pub k_list: Vec<f64>,
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        let d = DiagnosticsSpec::default();
        DiagnosticsConfig {
            p_list: d.p_list,
            k_list: d.k_list,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Undershoots below -undershoot · ‖f‖_∞ are errors.
    pub undershoot: f64,
    /// Relative residual of the implicit solve.
    pub linear_solve: f64,
    /// Abort with a partial trajectory once ‖f‖_∞ exceeds this.
    pub linf_guard: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            undershoot: 1e-12,
            linear_solve: 1e-10,
            linf_guard: 1e12,
        }
    }
}

/// Pre-registered pass criteria for the verification suites.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HarnessConfig {
    pub p: f64,
    pub m: f64,
    /// Time exponent of the mixed-norm suite.
    pub r: f64,
    pub moment_k: f64,
    /// Allowed growth factor of ‖f‖_p.
    pub kappa: f64,
    pub slope_slack: f64,
    /// ‖f‖_∞ must exceed this multiple of ‖f(T)‖_∞ inside the slope window.
    pub smoothing_drop: f64,
    pub mass_drift: f64,
    /// Relative momentum/energy drift per unit time.
    pub drift_per_time: f64,
    pub entropy_slack: f64,
    /// Leading fraction of the run in which the moment ratio may peak.
    pub early_fraction: f64,
    /// Leading fraction of the run used to fit the ODE majorant.
    pub fit_fraction: f64,
    /// De Giorgi target time t as a fraction of T.
    pub degiorgi_time_fraction: f64,
    pub degiorgi_levels: usize,
}

impl Default for HarnessConfig {
    fn default() -> Self {
        HarnessConfig {
            p: 2.0,
            m: 10.0,
            r: 5.0,
            moment_k: 3.0,
            kappa: 3.0,
            slope_slack: 0.1,
            smoothing_drop: 10.0,
            mass_drift: 1e-12,
            drift_per_time: 1e-3,
            entropy_slack: 1e-10,
            early_fraction: 0.2,
            fit_fraction: 0.1,
            degiorgi_time_fraction: 0.25,
            degiorgi_levels: 12,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridConfig,
    pub datum: DatumSpec,
    /// Rescale the datum to (mass, momentum, energy) = (1, 0, 3).
    #[serde(default = "yes")]
    pub normalize: bool,
    pub end_time: f64,
    #[serde(default = "default_scheme")]
    pub scheme: Scheme,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    /// Upper bound on any step; defaults to end_time / 50.
    #[serde(default)]
    pub max_dt: Option<f64>,
    #[serde(default)]
    pub snapshots: SnapshotConfig,
    #[serde(default)]
    pub diagnostics: DiagnosticsConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub harness: HarnessConfig,
}

fn default_half_width() -> f64 {
    8.0
}

fn yes() -> bool {
    true
}

fn default_scheme() -> Scheme {
    Scheme::Explicit
}

fn default_cfl() -> f64 {
    0.8
}

impl RunConfig {
    /// Minimal configuration with every optional section defaulted.
    pub fn new(grid: GridConfig, datum: DatumSpec, end_time: f64) -> Self {
        RunConfig {
            grid,
            datum,
            normalize: true,
            end_time,
            scheme: default_scheme(),
            cfl: default_cfl(),
            max_dt: None,
            snapshots: SnapshotConfig::default(),
            diagnostics: DiagnosticsConfig::default(),
            tolerances: Tolerances::default(),
            seed: 0,
            harness: HarnessConfig::default(),
        }
    }

    pub fn velocity_grid(&self) -> Result<VelocityGrid> {
        VelocityGrid::new(self.grid.n, self.grid.half_width)
    }

    pub fn diagnostics_spec(&self) -> DiagnosticsSpec {
        DiagnosticsSpec {
            p_list: self.diagnostics.p_list.clone(),
            k_list: self.diagnostics.k_list.clone(),
        }
    }

    pub fn max_dt(&self) -> f64 {
        self.max_dt.unwrap_or(self.end_time / 50.0)
    }

    /// Geometric snapshot times t_j = T r^{j-J}, j = 1..J, t_1 = first_fraction · T.
    pub fn snapshot_times(&self) -> Vec<f64> {
        let j_max = self.snapshots.count;
        let t = self.end_time;
        if j_max == 1 {
            return vec![t];
        }
        let ln_ratio = -self.snapshots.first_fraction.ln() / (j_max - 1) as f64;
        let mut times: Vec<f64> = (1..=j_max)
            .map(|j| t * (ln_ratio * (j as f64 - j_max as f64)).exp())
            .collect();
        times[j_max - 1] = t;
        times
    }

    /// Semantic checks; returns (key, message) of the first violation.
    fn violations(&self) -> Option<(&'static str, String)> {
        let n = self.grid.n;
        if n < 8 || n % 2 != 0 {
            return Some(("n", format!("grid size {n} must be even and at least 8")));
        }
        if !(self.grid.half_width > 0.0) {
            return Some(("half_width", "must be positive".into()));
        }
        if !(self.end_time > 0.0) || !self.end_time.is_finite() {
            return Some(("end_time", "must be positive".into()));
        }
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Some(("cfl", "must lie in (0, 1]".into()));
        }
        if let Some(dt) = self.max_dt {
            if !(dt > 0.0) {
                return Some(("max_dt", "must be positive".into()));
            }
        }
        if self.snapshots.count == 0 {
            return Some(("count", "need at least one snapshot".into()));
        }
        if !(self.snapshots.first_fraction > 0.0 && self.snapshots.first_fraction < 1.0) {
            return Some(("first_fraction", "must lie in (0, 1)".into()));
        }
        if self.diagnostics.p_list.iter().any(|p| !(*p >= 1.0)) {
            return Some(("p_list", "entries must be >= 1".into()));
        }
        if self.diagnostics.k_list.iter().any(|k| !k.is_finite()) {
            return Some(("k_list", "entries must be finite".into()));
        }
        let tol = &self.tolerances;
        if !(tol.undershoot >= 0.0) || !(tol.linear_solve > 0.0) || !(tol.linf_guard > 0.0) {
            return Some(("tolerances", "must be positive".into()));
        }
        let h = &self.harness;
        if !(h.kappa > 0.0) || !(h.smoothing_drop > 1.0) {
            return Some(("harness", "kappa must be positive and smoothing_drop > 1".into()));
        }
        if !(h.early_fraction > 0.0 && h.early_fraction <= 1.0)
            || !(h.fit_fraction > 0.0 && h.fit_fraction <= 1.0)
            || !(h.degiorgi_time_fraction > 0.0 && h.degiorgi_time_fraction < 1.0)
        {
            return Some(("harness", "fractions must lie in (0, 1]".into()));
        }
        if let Err(e) = self.datum.build() {
            return Some(("datum", e.to_string()));
        }
        None
    }

    pub fn validate(&self) -> Result<()> {
        match self.violations() {
            None => Ok(()),
            Some((key, message)) => Err(Error::Config {
                line: 0,
                key: key.into(),
                message,
            }),
        }
    }

    pub fn to_yaml(&self) -> String {
        serde_yaml::to_string(self).expect("config serializes")
    }
}

/// 1-based line of the first `key:` entry in the text, or 0.
fn locate_key(text: &str, key: &str) -> usize {
    let needle = format!("{key}:");
    text.lines()
        .position(|l| {
            let t = l.trim_start().trim_start_matches("- ");
            t.starts_with(&needle) || t.contains(&format!(" {needle}")) || t.contains(&format!("{{{needle}"))
        })
        .map_or(0, |i| i + 1)
}

pub fn parse_config_str(text: &str) -> Result<RunConfig> {
    let config: RunConfig = serde_yaml::from_str(text).map_err(|e| {
        let message = e.to_string();
        let key = message.split('`').nth(1).unwrap_or("").to_string();
        let line = e.location().map(|l| l.line()).unwrap_or_else(|| locate_key(text, &key));
        Error::Config { line, key, message }
    })?;
    if let Some((key, message)) = config.violations() {
        return Err(Error::Config {
            line: locate_key(text, key),
            key: key.into(),
            message,
        });
    }
    Ok(config)
}

pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    parse_config_str(&text)
}
