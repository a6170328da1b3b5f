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

//! Zero-padded 3D FFT convolution on the doubled grid.
//!
//! Spectral arrays use a transposed layout with the z index fastest
//! (`z + m (x + m y)`, m = 2n); kernels and data share it, so nothing is
//! transposed back before multiplication.

use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Upper bound on the working set of one convolution engine.
pub const MEMORY_LIMIT_BYTES: usize = 6 << 30;

/// Transform of a real kernel with definite parity: even kernels have real
/// transforms, odd kernels purely imaginary ones.
#[derive(Clone, Debug)]
pub enum Spectrum {
    Real(Vec<f64>),
    Imaginary(Vec<f64>),
}

impl Spectrum {
    fn at(&self, c: usize) -> Complex64 {
        match self {
            Spectrum::Real(r) => Complex64::new(r[c], 0.0),
            Spectrum::Imaginary(r) => Complex64::new(0.0, r[c]),
        }
    }
}

pub struct PaddedFft {
    n: usize,
    m: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl PaddedFft {
    pub fn new(n: usize, kernels: usize) -> Result<Self> {
        let m = 2 * n;
        let cells = m * m * m;
        // two complex work arrays, one spectrum of the data, real kernels
        let bytes = cells * (3 * 16 + 8 * kernels);
        if bytes > MEMORY_LIMIT_BYTES {
            return Err(Error::Grid(format!(
                "padded grid {m}^3 needs about {} MiB, above the {} MiB limit",
                bytes >> 20,
                MEMORY_LIMIT_BYTES >> 20
            )));
        }
        let mut planner = FftPlanner::new();
        Ok(PaddedFft {
            n,
            m,
            forward: planner.plan_fft_forward(m),
            inverse: planner.plan_fft_inverse(m),
        })
    }

    pub fn padded_len(&self) -> usize {
        self.m * self.m * self.m
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Forward transform of an `x + m (y + m z)` array whose nonzero entries
    /// lie in [0, active)^3. Returns the spectrum in transposed layout.
    fn forward(&self, mut buf: Vec<Complex64>, active: usize) -> Vec<Complex64> {
        let m = self.m;
        let plane = m * m;
        let fft = &self.forward;
        buf.par_chunks_mut(plane).take(active).for_each_init(
            || PlaneScratch::new(m, fft.get_inplace_scratch_len()),
            |s, p| {
                fft.process_with_scratch(&mut p[..active * m], &mut s.fft);
                columns(fft.as_ref(), p, m, s);
            },
        );
        let mut spec = vec![Complex64::new(0.0, 0.0); m * plane];
        spec.par_chunks_mut(m).enumerate().for_each(|(c, line)| {
            for (z, out) in line.iter_mut().enumerate().take(active) {
                *out = buf[c + plane * z];
            }
        });
        spec.par_chunks_mut(m).for_each_init(
            || vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()],
            |s, line| fft.process_with_scratch(line, s),
        );
        spec
    }

    /// Inverse of [`forward`], keeping only the region [0, n)^3 (unscaled).
    fn inverse(&self, mut spec: Vec<Complex64>, out: &mut Vec<Complex64>) {
        let m = self.m;
        let n = self.n;
        let plane = m * m;
        let fft = &self.inverse;
        spec.par_chunks_mut(m).for_each_init(
            || vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()],
            |s, line| fft.process_with_scratch(line, s),
        );
        out.resize(m * plane, Complex64::new(0.0, 0.0));
        out.par_chunks_mut(plane).take(n).enumerate().for_each_init(
            || PlaneScratch::new(m, fft.get_inplace_scratch_len()),
            |s, (z, p)| {
                for (c, v) in p.iter_mut().enumerate() {
                    *v = spec[z + m * c];
                }
                columns(fft.as_ref(), p, m, s);
                fft.process_with_scratch(&mut p[..n * m], &mut s.fft);
            },
        );
    }

    /// Spectrum of a full-size real kernel given in `x + m (y + m z)` order.
    pub fn kernel_spectrum(&self, kernel: &[f64], odd: bool) -> Spectrum {
        let buf = kernel.iter().map(|&k| Complex64::new(k, 0.0)).collect();
        let spec = self.forward(buf, self.m);
        if odd {
            Spectrum::Imaginary(spec.iter().map(|c| c.im).collect())
        } else {
            Spectrum::Real(spec.iter().map(|c| c.re).collect())
        }
    }

    /// Spectrum of an n^3 real field, zero padded.
    pub fn data_spectrum(&self, values: &[f64]) -> Vec<Complex64> {
        let (n, m) = (self.n, self.m);
        let mut buf = vec![Complex64::new(0.0, 0.0); m * m * m];
        for k in 0..n {
            for j in 0..n {
                let src = &values[n * (j + n * k)..n * (j + n * k) + n];
                let dst = &mut buf[m * (j + m * k)..m * (j + m * k) + n];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d = Complex64::new(*s, 0.0);
                }
            }
        }
        self.forward(buf, n)
    }

    /// Two real convolutions with one inverse transform: returns
    /// (data ∗ k1, data ∗ k2) scaled by `factor`, each on n^3.
    pub fn convolve_pair(
        &self,
        data: &[Complex64],
        k1: &Spectrum,
        k2: Option<&Spectrum>,
        factor: f64,
        work: &mut Vec<Complex64>,
    ) -> (Vec<f64>, Option<Vec<f64>>) {
        let (n, m) = (self.n, self.m);
        let mut product = vec![Complex64::new(0.0, 0.0); data.len()];
        product
            .par_chunks_mut(m)
            .zip(data.par_chunks(m))
            .enumerate()
            .for_each(|(line, (p, d))| {
                let base = line * m;
                for z in 0..m {
                    let c = base + z;
                    let mut w = k1.at(c);
                    if let Some(k2) = k2 {
                        w += Complex64::new(0.0, 1.0) * k2.at(c);
                    }
                    p[z] = d[z] * w;
                }
            });
        self.inverse(product, work);
        let scale = factor / (m * m * m) as f64;
        let mut first = vec![0.0; n * n * n];
        let mut second = k2.map(|_| vec![0.0; n * n * n]);
        for k in 0..n {
            for j in 0..n {
                let src = &work[m * (j + m * k)..m * (j + m * k) + n];
                let base = n * (j + n * k);
                for (i, v) in src.iter().enumerate() {
                    first[base + i] = v.re * scale;
                    if let Some(s) = second.as_mut() {
                        s[base + i] = v.im * scale;
                    }
                }
            }
        }
        (first, second)
    }
}

struct PlaneScratch {
    fft: Vec<Complex64>,
    plane: Vec<Complex64>,
}

impl PlaneScratch {
    fn new(m: usize, scratch: usize) -> Self {
        PlaneScratch {
            fft: vec![Complex64::new(0.0, 0.0); scratch],
            plane: vec![Complex64::new(0.0, 0.0); m * m],
        }
    }
}

/// Transforms along y inside one m x m plane by transposing through scratch.
fn columns(fft: &dyn Fft<f64>, p: &mut [Complex64], m: usize, s: &mut PlaneScratch) {
    for y in 0..m {
        for x in 0..m {
            s.plane[y + m * x] = p[x + m * y];
        }
    }
    fft.process_with_scratch(&mut s.plane, &mut s.fft);
    for x in 0..m {
        for y in 0..m {
            p[x + m * y] = s.plane[y + m * x];
        }
    }
}
