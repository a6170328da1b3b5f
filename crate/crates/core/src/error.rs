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

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter lies outside the domain where a formula is meaningful.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid field: {0}")]
    InvalidField(String),

    #[error("grid error: {0}")]
    Grid(String),

    #[error("time step {dt:e} exceeds the stability bound {bound:e}")]
    StepTooLarge { dt: f64, bound: f64 },

    #[error("negative undershoot {value:e} below tolerance {tolerance:e} at cell {cell}")]
    Undershoot { value: f64, tolerance: f64, cell: usize },

    #[error("linear solver stalled after {iterations} iterations (relative residual {residual:e})")]
    LinearSolve { iterations: usize, residual: f64 },

    #[error("non-finite value detected at cell {0}")]
    NonFinite(usize),

    #[error("config error at line {line}, key `{key}`: {message}")]
    Config { line: usize, key: String, message: String },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("run directory {0} is not empty")]
    RunDirectoryNotEmpty(PathBuf),

    #[error("unknown plot kind `{0}` (valid kinds: smoothing, entropy, degiorgi)")]
    UnknownPlotKind(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
