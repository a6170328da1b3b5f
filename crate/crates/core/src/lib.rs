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

//! Numerical laboratory for the spatially homogeneous Landau equation with
//! Coulomb interactions: exponent relations, grids and fields, nonlocal
//! coefficients by free-space convolution, a conservative finite-volume
//! solver, functional-inequality benches and an estimate-verification
//! harness.

pub mod error;
pub mod exponents;

pub use error::{Error, Result};
pub mod coefficients;
pub mod config;
pub mod datum;
pub mod diagnostics;
pub mod fft;
pub mod grid;
pub mod harness;
pub mod ineq;
pub mod io;
pub mod solver;
