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

//! Conservative finite-volume integration of
//! ∂_t f = ∇·(A[f]∇f - f∇a[f]) with no-flux boundary faces.
//!
//! Face-normal transport (A_dd ∂_d f - b_d f) uses the Scharfetter–Gummel
//! exponentially fitted flux; the off-diagonal part Σ_{j≠d} A_dj ∂_j f is
//! centered and always explicit, with a donor-cell limiter that caps each
//! cell's total outflow at its content so explicit steps cannot go negative.

use rayon::prelude::*;

use crate::coefficients::{spectral_summary, CoefficientEngine, Coefficients};
use crate::config::{RunConfig, Scheme};
use crate::datum::{generate, Datum};
use crate::diagnostics::{diagnostics, DiagnosticsRecord, Snapshot};
use crate::error::{Error, Result};
use crate::grid::{stable_sum, ScalarField, VelocityGrid};

/// Bernoulli function B(x) = x/(e^x - 1).
pub fn bernoulli(x: f64) -> f64 {
    if x.abs() < 1e-6 {
        1.0 - 0.5 * x + x * x / 12.0
    } else {
        x / x.exp_m1()
    }
}

/// Stability bound CFL · min(h²/(6 sup‖A‖), h/sup|∇a|).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StableDt {
    pub dt: f64,
    /// Both coefficient bounds vanished; dt = CFL · h².
    pub degenerate: bool,
    pub diffusion_limited: bool,
}

pub fn stable_dt(grid: &VelocityGrid, sup_a: f64, sup_drift: f64, cfl: f64) -> StableDt {
    let h = grid.spacing();
    let diffusive = if sup_a > 0.0 {
        h * h / (6.0 * sup_a)
    } else {
        f64::INFINITY
    };
    let advective = if sup_drift > 0.0 { h / sup_drift } else { f64::INFINITY };
    if diffusive.is_infinite() && advective.is_infinite() {
        return StableDt {
            dt: cfl * h * h,
            degenerate: true,
            diffusion_limited: false,
        };
    }
    StableDt {
        dt: cfl * diffusive.min(advective),
        degenerate: false,
        diffusion_limited: diffusive <= advective,
    }
}

/// Face-normal Scharfetter–Gummel weights: the flux through the face between
/// cell c and c + e_d is `plus[d][c] f[c + e_d] - minus[d][c] f[c]`, already
/// divided by h for the divergence. Boundary faces carry zero weights.
struct FaceWeights {
    plus: [Vec<f64>; 3],
    minus: [Vec<f64>; 3],
}

impl FaceWeights {
    fn new(grid: &VelocityGrid, c: &Coefficients) -> Self {
        let n = grid.n();
        let h = grid.spacing();
        let stride = [1, n, n * n];
        let build = |d: usize| -> (Vec<f64>, Vec<f64>) {
            let a = c.diffusion.component(d, d);
            let b = c.drift.component(d);
            let s = stride[d];
            let mut plus = vec![0.0; grid.len()];
            let mut minus = vec![0.0; grid.len()];
            for idx in 0..grid.len() {
                let pos = [idx % n, (idx / n) % n, idx / (n * n)][d];
                if pos + 1 == n {
                    continue;
                }
                let diff = 0.5 * (a[idx] + a[idx + s]);
                let drift = 0.5 * (b[idx] + b[idx + s]);
                if diff > 0.0 {
                    // Péclet number from the per-cell ratio b/A_dd; this keeps
                    // the log-slope of a Maxwellian exact up to coefficient error
                    let pe = if a[idx] > 0.0 && a[idx + s] > 0.0 {
                        0.5 * h * (b[idx] / a[idx] + b[idx + s] / a[idx + s])
                    } else {
                        drift * h / diff
                    };
                    plus[idx] = diff / (h * h) * bernoulli(pe);
                    minus[idx] = diff / (h * h) * bernoulli(-pe);
                } else {
                    // pure upwind transport with velocity -drift
                    plus[idx] = (-drift).max(0.0) / h;
                    minus[idx] = drift.max(0.0) / h;
                }
            }
            (plus, minus)
        };
        let (p0, m0) = build(0);
        let (p1, m1) = build(1);
        let (p2, m2) = build(2);
        FaceWeights {
            plus: [p0, p1, p2],
            minus: [m0, m1, m2],
        }
    }

    /// (L g)_c = Σ_d [J_{c+½} - J_{c-½}] / h.
    fn apply(&self, grid: &VelocityGrid, g: &[f64], out: &mut [f64]) {
        let n = grid.n();
        let stride = [1, n, n * n];
        out.par_iter_mut().enumerate().for_each(|(idx, o)| {
            let mut acc = 0.0;
            for d in 0..3 {
                let s = stride[d];
                let pos = [idx % n, (idx / n) % n, idx / (n * n)][d];
                if pos + 1 < n {
                    acc += self.plus[d][idx] * g[idx + s] - self.minus[d][idx] * g[idx];
                }
                if pos > 0 {
                    let f = idx - s;
                    acc -= self.plus[d][f] * g[idx] - self.minus[d][f] * g[f];
                }
            }
            *o = acc;
        });
    }

    /// Diagonal of -L.
    fn diagonal(&self, grid: &VelocityGrid) -> Vec<f64> {
        let n = grid.n();
        let stride = [1, n, n * n];
        (0..grid.len())
            .map(|idx| {
                let mut acc = 0.0;
                for d in 0..3 {
                    let pos = [idx % n, (idx / n) % n, idx / (n * n)][d];
                    acc += self.minus[d][idx];
                    if pos > 0 {
                        acc += self.plus[d][idx - stride[d]];
                    }
                }
                acc
            })
            .collect()
    }
}

/// Explicit off-diagonal face fluxes Σ_{j≠d} A_dj ∂_j f; entry [d][c] is
/// the flux through the face between c and c + e_d (zero on the last layer).
fn off_diagonal_fluxes(grid: &VelocityGrid, c: &Coefficients, f: &[f64]) -> [Vec<f64>; 3] {
    let n = grid.n();
    let h = grid.spacing();
    let stride = [1, n, n * n];
    let coords = |idx: usize| [idx % n, (idx / n) % n, idx / (n * n)];
    // cell-centered derivatives, one-sided on the boundary layer
    let deriv = |idx: usize, j: usize| -> f64 {
        let pos = coords(idx)[j];
        let s = stride[j];
        if pos == 0 {
            (f[idx + s] - f[idx]) / h
        } else if pos + 1 == n {
            (f[idx] - f[idx - s]) / h
        } else {
            (f[idx + s] - f[idx - s]) / (2.0 * h)
        }
    };
    let build = |d: usize| -> Vec<f64> {
        let s = stride[d];
        (0..grid.len())
            .into_par_iter()
            .map(|idx| {
                if coords(idx)[d] + 1 == n {
                    return 0.0;
                }
                let mut flux = 0.0;
                for j in 0..3 {
                    if j == d {
                        continue;
                    }
                    let a = c.diffusion.component(d, j);
                    let a_face = 0.5 * (a[idx] + a[idx + s]);
                    flux += a_face * 0.5 * (deriv(idx, j) + deriv(idx + s, j));
                }
                flux
            })
            .collect()
    };
    [build(0), build(1), build(2)]
}

/// Telescoping divergence Σ_d (F_{c+½} - F_{c-½}) / h of face fluxes.
fn flux_divergence(grid: &VelocityGrid, fluxes: &[Vec<f64>; 3]) -> Vec<f64> {
    let n = grid.n();
    let h = grid.spacing();
    let stride = [1, n, n * n];
    (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let pos = [idx % n, (idx / n) % n, idx / (n * n)];
            let mut acc = 0.0;
            for d in 0..3 {
                acc += fluxes[d][idx];
                if pos[d] > 0 {
                    acc -= fluxes[d][idx - stride[d]];
                }
            }
            acc / h
        })
        .collect()
}

/// Scales the off-diagonal fluxes leaving each cell so that over a step of
/// length dt they remove at most `budget[c]` from it. A positive face flux
/// moves mass from c + e_d into c, so the donor is c + e_d; the limited
/// flux keeps the donor's factor, which leaves conservation exact.
fn limit_outflow(grid: &VelocityGrid, fluxes: &mut [Vec<f64>; 3], budget: &[f64], dt: f64) {
    let n = grid.n();
    let h = grid.spacing();
    let stride = [1, n, n * n];
    let factor: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let pos = [idx % n, (idx / n) % n, idx / (n * n)];
            let mut out = 0.0;
            for d in 0..3 {
                out += (-fluxes[d][idx]).max(0.0);
                if pos[d] > 0 {
                    out += fluxes[d][idx - stride[d]].max(0.0);
                }
            }
            let out = dt * out / h;
            if out > budget[idx] {
                (budget[idx] / out).max(0.0)
            } else {
                1.0
            }
        })
        .collect();
    for d in 0..3 {
        let s = stride[d];
        fluxes[d].par_iter_mut().enumerate().for_each(|(idx, flux)| {
            if *flux > 0.0 {
                *flux *= factor[idx + s];
            } else if *flux < 0.0 {
                *flux *= factor[idx];
            }
        });
    }
}

/// Full discrete collision operator ∇_h·(A∇f - f∇a) as used by the
/// explicit scheme.
pub fn collision_operator(grid: &VelocityGrid, c: &Coefficients, f: &[f64]) -> Vec<f64> {
    let weights = FaceWeights::new(grid, c);
    let mut out = vec![0.0; grid.len()];
    weights.apply(grid, f, &mut out);
    let off = flux_divergence(grid, &off_diagonal_fluxes(grid, c, f));
    out.iter_mut().zip(off).for_each(|(o, x)| *o += x);
    out
}

/// max over interior cells of |∇_h·(A∇f - f∇a) - (A:∇²f + f²)|.
pub fn nondivergence_residual(grid: &VelocityGrid, c: &Coefficients, f: &ScalarField) -> f64 {
    let n = grid.n();
    let h = grid.spacing();
    let stride = [1, n, n * n];
    let v = f.values();
    let op = collision_operator(grid, c, v);
    let mut worst: f64 = 0.0;
    for idx in 0..grid.len() {
        let pos = grid.unravel(idx);
        if ![pos.0, pos.1, pos.2].iter().all(|&q| q > 0 && q + 1 < n) {
            continue;
        }
        let mut contraction = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                let (si, sj) = (stride[i], stride[j]);
                let second = if i == j {
                    (v[idx + si] - 2.0 * v[idx] + v[idx - si]) / (h * h)
                } else {
                    (v[idx + si + sj] - v[idx + si - sj] - v[idx - si + sj] + v[idx - si - sj]) / (4.0 * h * h)
                };
                contraction += c.diffusion.component(i, j)[idx] * second;
            }
        }
        worst = worst.max((op[idx] - contraction - v[idx] * v[idx]).abs());
    }
    worst
}

/// Outcome of one accepted step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepRecord {
    pub time: f64,
    pub dt: f64,
    /// Mass removed by clamping tiny negative entries and redistributed.
    pub clamped_mass: f64,
    /// min (1 + |v|³) λ_min(A[f]) of the state the step started from.
    pub c0_empirical: f64,
    pub sup_a: f64,
    pub linear_iterations: usize,
}

impl StepRecord {
    pub const CSV_HEADER: &'static str = "time,dt,clamped_mass,c0_empirical,sup_a,linear_iterations";

    pub fn csv_row(&self) -> String {
        format!(
            "{:e},{:e},{:e},{:e},{:e},{}",
            self.time, self.dt, self.clamped_mass, self.c0_empirical, self.sup_a, self.linear_iterations
        )
    }
}

/// Mutable integrator state.
pub struct Stepper {
    grid: VelocityGrid,
    engine: CoefficientEngine,
    scheme: Scheme,
    undershoot: f64,
    solve_tolerance: f64,
}

/// Coefficients of the current state with their spectral summary.
pub struct Frozen {
    pub coefficients: Coefficients,
    pub c0_empirical: f64,
    pub sup_a: f64,
    pub sup_drift: f64,
}

impl Stepper {
    pub fn new(grid: &VelocityGrid, scheme: Scheme) -> Result<Self> {
        Ok(Stepper {
            grid: *grid,
            engine: CoefficientEngine::new(grid)?,
            scheme,
            undershoot: 1e-12,
            solve_tolerance: 1e-10,
        })
    }

    pub fn with_tolerances(mut self, undershoot: f64, solve_tolerance: f64) -> Self {
        self.undershoot = undershoot;
        self.solve_tolerance = solve_tolerance;
        self
    }

    pub fn engine(&self) -> &CoefficientEngine {
        &self.engine
    }

    pub fn freeze(&self, f: &ScalarField) -> Result<Frozen> {
        let coefficients = self.engine.coefficients(f)?;
        let (c0, sup_a, _) = spectral_summary(&coefficients.diffusion);
        let sup_drift = coefficients.drift.max_norm();
        Ok(Frozen {
            coefficients,
            c0_empirical: c0,
            sup_a,
            sup_drift,
        })
    }

    pub fn stable_dt(&self, frozen: &Frozen, cfl: f64) -> StableDt {
        stable_dt(&self.grid, frozen.sup_a, frozen.sup_drift, cfl)
    }

    /// One step from `f` with coefficients frozen at `f`.
    pub fn step(&self, f: &ScalarField, frozen: &Frozen, dt: f64) -> Result<(ScalarField, StepRecord)> {
        f.check_distribution()?;
        let g = &self.grid;
        if self.scheme == Scheme::Explicit {
            let bound = self.stable_dt(frozen, 1.0);
            if dt > bound.dt * (1.0 + 1e-12) {
                return Err(Error::StepTooLarge { dt, bound: bound.dt });
            }
        }
        let c = &frozen.coefficients;
        let v = f.values();
        let weights = FaceWeights::new(g, c);
        // what each cell can give up to the cross terms without going
        // negative: all of it when the normal part is implicit, otherwise
        // what the forward-Euler normal update leaves behind
        let budget: Vec<f64> = match self.scheme {
            Scheme::Explicit => v
                .iter()
                .zip(weights.diagonal(g))
                .map(|(x, d)| x * (1.0 - dt * d).max(0.0))
                .collect(),
            Scheme::SemiImplicit => v.to_vec(),
        };
        let mut fluxes = off_diagonal_fluxes(g, c, v);
        limit_outflow(g, &mut fluxes, &budget, dt);
        let off = flux_divergence(g, &fluxes);
        let mut normal = vec![0.0; g.len()];
        let mut iterations = 0;
        match self.scheme {
            Scheme::Explicit => weights.apply(g, v, &mut normal),
            Scheme::SemiImplicit => {
                // (I - dt L) f* = f + dt · off, then rebuild f_new from the
                // fluxes of f* so that mass telescopes exactly
                let rhs: Vec<f64> = v.iter().zip(&off).map(|(x, o)| x + dt * o).collect();
                let (solution, its) = self.solve(&weights, dt, &rhs, v)?;
                iterations = its;
                weights.apply(g, &solution, &mut normal);
            }
        }
        let mut next: Vec<f64> = v
            .iter()
            .zip(normal.iter().zip(&off))
            .map(|(x, (n, o))| x + dt * (n + o))
            .collect();
        if let Some(idx) = next.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite(idx));
        }
        let clamped_mass = self.repair(&mut next)?;
        let record = StepRecord {
            time: 0.0,
            dt,
            clamped_mass,
            c0_empirical: frozen.c0_empirical,
            sup_a: frozen.sup_a,
            linear_iterations: iterations,
        };
        Ok((ScalarField::new(*g, next)?, record))
    }

    /// Clamps tiny negative entries to zero and rescales the state so its
    /// total mass is unchanged; larger undershoots are errors.
    fn repair(&self, next: &mut [f64]) -> Result<f64> {
        let linf = next.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let tolerance = self.undershoot * linf;
        if let Some((idx, x)) = next.iter().enumerate().find(|(_, x)| **x < -tolerance) {
            return Err(Error::Undershoot {
                value: *x,
                tolerance: -tolerance,
                cell: idx,
            });
        }
        if next.iter().all(|x| *x >= 0.0) {
            return Ok(0.0);
        }
        let before = stable_sum(next.iter().copied());
        let clamped = -stable_sum(next.iter().filter(|x| **x < 0.0).copied());
        next.iter_mut().for_each(|x| *x = x.max(0.0));
        let after = stable_sum(next.iter().copied());
        if after > 0.0 {
            let factor = before / after;
            next.iter_mut().for_each(|x| *x *= factor);
        }
        Ok(clamped * self.grid.cell_volume())
    }

    /// BiCGSTAB with Jacobi preconditioning on (I - dt L) x = rhs.
    fn solve(&self, w: &FaceWeights, dt: f64, rhs: &[f64], guess: &[f64]) -> Result<(Vec<f64>, usize)> {
        let g = &self.grid;
        let len = g.len();
        let diag: Vec<f64> = w.diagonal(g).iter().map(|d| 1.0 + dt * d).collect();
        let mut scratch = vec![0.0; len];
        let mut apply = |x: &[f64], out: &mut Vec<f64>| {
            w.apply(g, x, &mut scratch);
            out.clear();
            out.extend(x.iter().zip(&scratch).map(|(x, l)| x - dt * l));
        };
        let dot = |a: &[f64], b: &[f64]| stable_sum(a.iter().zip(b).map(|(x, y)| x * y));
        let precond = |r: &[f64]| -> Vec<f64> { r.iter().zip(&diag).map(|(r, d)| r / d).collect() };
        let rhs_norm = dot(rhs, rhs).sqrt();
        let mut x = guess.to_vec();
        if rhs_norm == 0.0 {
            return Ok((vec![0.0; len], 0));
        }
        let mut ax = Vec::with_capacity(len);
        apply(&x, &mut ax);
        let mut r: Vec<f64> = rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let r_hat = r.clone();
        let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
        let mut v = vec![0.0; len];
        let mut p = vec![0.0; len];
        let mut t = Vec::with_capacity(len);
        let max_iter = 500;
        for it in 0..max_iter {
            let res = dot(&r, &r).sqrt() / rhs_norm;
            if res <= self.solve_tolerance {
                return Ok((x, it));
            }
            let rho_new = dot(&r_hat, &r);
            if rho_new == 0.0 || omega == 0.0 {
                return Err(Error::LinearSolve {
                    iterations: it,
                    residual: res,
                });
            }
            let beta = (rho_new / rho) * (alpha / omega);
            rho = rho_new;
            for i in 0..len {
                p[i] = r[i] + beta * (p[i] - omega * v[i]);
            }
            let y = precond(&p);
            apply(&y, &mut v);
            alpha = rho / dot(&r_hat, &v);
            let s: Vec<f64> = r.iter().zip(&v).map(|(r, v)| r - alpha * v).collect();
            let z = precond(&s);
            apply(&z, &mut t);
            let tt = dot(&t, &t);
            omega = if tt > 0.0 { dot(&t, &s) / tt } else { 0.0 };
            for i in 0..len {
                x[i] += alpha * y[i] + omega * z[i];
                r[i] = s[i] - omega * t[i];
            }
        }
        let res = dot(&r, &r).sqrt() / rhs_norm;
        if res <= self.solve_tolerance {
            Ok((x, max_iter))
        } else {
            Err(Error::LinearSolve {
                iterations: max_iter,
                residual: res,
            })
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Completed,
    /// ‖f‖_∞ exceeded the configured guard; the trajectory is partial.
    GuardTripped,
}

/// Stored result of one run.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub config: RunConfig,
    pub datum: Datum,
    /// t = 0 followed by the geometric schedule.
    pub snapshots: Vec<Snapshot>,
    /// One record for t = 0 and one per accepted step.
    pub records: Vec<DiagnosticsRecord>,
    pub steps: Vec<StepRecord>,
    pub outcome: Outcome,
}

impl Trajectory {
    pub fn end_time(&self) -> f64 {
        self.records.last().map_or(0.0, |r| r.time)
    }

    pub fn initial(&self) -> &ScalarField {
        &self.snapshots[0].field
    }
}

/// Halvings of dt tried after an undershoot before giving up.
const MAX_RETRIES: usize = 30;

pub fn simulate(config: &RunConfig) -> Result<Trajectory> {
    config.validate()?;
    let grid = config.velocity_grid()?;
    let generated = generate(&config.datum, &grid, config.normalize)?;
    let stepper = Stepper::new(&grid, config.scheme)?
        .with_tolerances(config.tolerances.undershoot, config.tolerances.linear_solve);
    let spec = config.diagnostics_spec();
    let schedule = config.snapshot_times();
    let mut f = generated.field;
    let mut time = 0.0;
    let mut snapshots = vec![Snapshot { time, field: f.clone() }];
    let mut records = vec![diagnostics(&f, &spec, time)?];
    let mut steps = Vec::new();
    let mut next_snapshot = 0;
    let mut outcome = Outcome::Completed;
    while next_snapshot < schedule.len() {
        let target = schedule[next_snapshot];
        let frozen = stepper.freeze(&f)?;
        let mut dt = stepper.stable_dt(&frozen, config.cfl).dt.min(config.max_dt());
        let lands = time + dt >= target * (1.0 - 1e-12);
        if lands {
            dt = target - time;
        }
        let mut attempt = 0;
        let (next, mut record, landed) = loop {
            match stepper.step(&f, &frozen, dt) {
                Ok((next, record)) => break (next, record, lands && attempt == 0),
                Err(Error::Undershoot { .. }) if attempt < MAX_RETRIES => {
                    attempt += 1;
                    dt *= 0.5;
                }
                Err(e) => return Err(e),
            }
        };
        time = if landed { target } else { time + dt };
        record.time = time;
        f = next;
        steps.push(record);
        records.push(diagnostics(&f, &spec, time)?);
        if landed {
            snapshots.push(Snapshot { time, field: f.clone() });
            next_snapshot += 1;
        }
        if f.max() > config.tolerances.linf_guard {
            outcome = Outcome::GuardTripped;
            break;
        }
    }
    Ok(Trajectory {
        config: config.clone(),
        datum: generated.datum,
        snapshots,
        records,
        steps,
        outcome,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bernoulli_values() {
        assert_eq!(bernoulli(0.0), 1.0);
        assert!((bernoulli(1.0) - 1.0 / (std::f64::consts::E - 1.0)).abs() < 1e-15);
        // B(-x) = B(x) + x
        for x in [1e-7, 1e-3, 0.5, 3.0, 40.0] {
            assert!((bernoulli(-x) - bernoulli(x) - x).abs() < 1e-12 * (1.0 + x));
        }
        assert_eq!(bernoulli(1000.0), 0.0);
    }

    #[test]
    fn stable_dt_formula() {
        let g = VelocityGrid::new(8, 4.0).unwrap();
        let a = stable_dt(&g, 0.1, 0.0, 0.8);
        assert!((a.dt - 0.8 / 0.6).abs() < 1e-14);
        assert!(a.diffusion_limited);
        let b = stable_dt(&g, 0.2, 0.0, 0.8);
        assert!((a.dt / b.dt - 2.0).abs() < 1e-14);
        let z = stable_dt(&g, 0.0, 0.0, 0.5);
        assert!(z.degenerate);
        assert_eq!(z.dt, 0.5);
    }
}
