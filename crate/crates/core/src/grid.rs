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

//! Cell-centered velocity grids and scalar fields with midpoint quadrature.

use crate::error::{Error, Result};

/// Uniform cell-centered grid on [-L, L]^3 with `n` cells per axis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VelocityGrid {
    n: usize,
    half_width: f64,
}

impl VelocityGrid {
    pub fn new(n: usize, half_width: f64) -> Result<Self> {
        if n < 8 || n % 2 != 0 {
            return Err(Error::Grid(format!("n = {n} must be even and at least 8")));
        }
        if !(half_width > 0.0) || !half_width.is_finite() {
            return Err(Error::Grid(format!("half width L = {half_width} must be positive")));
        }
        Ok(VelocityGrid { n, half_width })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(3)
    }

    /// Number of cells, n^3.
    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Center of cell `i` along one axis.
    pub fn center(&self, i: usize) -> f64 {
        -self.half_width + (i as f64 + 0.5) * self.spacing()
    }

    pub fn axis(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.center(i)).collect()
    }

    /// Linear index with x fastest.
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.n * (j + self.n * k)
    }

    pub fn unravel(&self, idx: usize) -> (usize, usize, usize) {
        let n = self.n;
        (idx % n, (idx / n) % n, idx / (n * n))
    }

    pub fn point(&self, idx: usize) -> [f64; 3] {
        let (i, j, k) = self.unravel(idx);
        [self.center(i), self.center(j), self.center(k)]
    }

    /// Same spacing, `n` replaced by the smallest even count covering
    /// `factor * L`.
    pub fn widened(&self, factor: f64) -> Result<Self> {
        let h = self.spacing();
        let mut n = (factor * self.n as f64).ceil() as usize;
        if n % 2 == 1 {
            n += 1;
        }
        VelocityGrid::new(n, n as f64 * h / 2.0)
    }
}

/// Japanese bracket ⟨v⟩ = (1 + |v|²)^{1/2}.
pub fn bracket(v: [f64; 3]) -> f64 {
    (1.0 + v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

pub fn norm3(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

/// Compensated (Neumaier) summation in iteration order.
pub fn stable_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0f64;
    let mut carry = 0.0f64;
    for x in values {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            carry += (sum - t) + x;
        } else {
            carry += (x - t) + sum;
        }
        sum = t;
    }
    sum + carry
}

/// One real value per grid cell.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    grid: VelocityGrid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: VelocityGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidField(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        if let Some(idx) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(idx));
        }
        Ok(ScalarField { grid, values })
    }

    pub fn zeros(grid: VelocityGrid) -> Self {
        ScalarField {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn from_fn(grid: VelocityGrid, f: impl Fn([f64; 3]) -> f64) -> Result<Self> {
        let values = (0..grid.len()).map(|idx| f(grid.point(idx))).collect();
        ScalarField::new(grid, values)
    }

    pub fn grid(&self) -> &VelocityGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        ScalarField::new(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Midpoint rule ∫ f.
    pub fn integral(&self) -> f64 {
        stable_sum(self.values.iter().copied()) * self.grid.cell_volume()
    }

    /// Midpoint rule ∫ w(v) f(v).
    pub fn weighted_integral(&self, w: impl Fn([f64; 3], f64) -> f64) -> f64 {
        let g = &self.grid;
        stable_sum(self.values.iter().enumerate().map(|(idx, &f)| w(g.point(idx), f))) * g.cell_volume()
    }

    /// Errors unless every entry is finite and nonnegative.
    pub fn check_distribution(&self) -> Result<()> {
        if let Some((idx, v)) = self.values.iter().enumerate().find(|(_, v)| **v < 0.0) {
            return Err(Error::InvalidField(format!("negative entry {v:e} at cell {idx}")));
        }
        Ok(())
    }

    /// Centered-difference gradient; second-order one-sided stencils on the
    /// boundary layer.
    pub fn gradient(&self) -> [Vec<f64>; 3] {
        let g = &self.grid;
        let n = g.n();
        let inv2h = 1.0 / (2.0 * g.spacing());
        let stride = [1, n, n * n];
        let v = &self.values;
        let mut out = [vec![0.0; g.len()], vec![0.0; g.len()], vec![0.0; g.len()]];
        for idx in 0..g.len() {
            let (i, j, k) = g.unravel(idx);
            for (axis, pos) in [i, j, k].into_iter().enumerate() {
                let s = stride[axis];
                out[axis][idx] = if pos == 0 {
                    (-3.0 * v[idx] + 4.0 * v[idx + s] - v[idx + 2 * s]) * inv2h
                } else if pos == n - 1 {
                    (3.0 * v[idx] - 4.0 * v[idx - s] + v[idx - 2 * s]) * inv2h
                } else {
                    (v[idx + s] - v[idx - s]) * inv2h
                };
            }
        }
        out
    }

    /// Trilinear interpolation, zero outside the hull of cell centers.
    pub fn interpolate(&self, x: [f64; 3]) -> f64 {
        let g = &self.grid;
        let n = g.n();
        let h = g.spacing();
        let mut base = [0usize; 3];
        let mut frac = [0.0; 3];
        for a in 0..3 {
            let s = (x[a] + g.half_width()) / h - 0.5;
            if !(s >= 0.0) || s > (n - 1) as f64 {
                return 0.0;
            }
            let b = (s.floor() as usize).min(n - 2);
            base[a] = b;
            frac[a] = s - b as f64;
        }
        let mut acc = 0.0;
        for corner in 0..8 {
            let mut w = 1.0;
            let mut ijk = base;
            for a in 0..3 {
                if corner >> a & 1 == 1 {
                    w *= frac[a];
                    ijk[a] += 1;
                } else {
                    w *= 1.0 - frac[a];
                }
            }
            if w != 0.0 {
                acc += w * self.values[g.index(ijk[0], ijk[1], ijk[2])];
            }
        }
        acc
    }
}
