//   Copyright 2026 simplex-mpc developers
//
//   Licensed under the Apache License, Version 2.0 (the "License");
//   you may not use this file except in compliance with the License.
//   You may obtain a copy of the License at
//
//       http://www.apache.org/licenses/LICENSE-2.0
//
//   Unless required by applicable law or agreed to in writing, software
//   distributed under the License is distributed on an "AS IS" BASIS,
//   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
//   See the License for the specific language governing permissions and
//   limitations under the License.

//! Error type shared by every stage of the partitioning pipeline.

use std::path::PathBuf;

use crate::conic::ConicProgram;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("commutation {0} is not in the admissible set")]
    UnknownCommutation(String),

    #[error("invalid problem data: {0}")]
    InvalidProblem(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// The conic solver stalled. Never to be read as infeasibility; the
    /// offending program is attached so it can be dumped for inspection.
    #[error("conic solver failed ({context})")]
    Numerical {
        context: String,
        program: Box<ConicProgram>,
    },

    #[error("conic program is unbounded below ({context})")]
    Unbounded { context: String },

    #[error("no admissible commutation is feasible at the requested parameter")]
    Infeasible,

    #[error("domain vertices are affinely dependent")]
    DegenerateDomain,

    #[error("simplex is numerically singular")]
    SingularSimplex,

    #[error("bisection produced a child of volume {volume:e} below the minimum cell volume")]
    DegenerateChild { volume: f64 },

    #[error("unsupported domain: {0}")]
    UnsupportedDomain(String),

    #[error("parameter lies outside the partitioned domain")]
    OutOfDomain,

    /// Phase I found a cell whose centroid no commutation can make feasible,
    /// i.e. the parameter domain is not contained in the feasible set.
    #[error("domain not covered by feasible commutations; witness centroid {witness:?}")]
    DomainNotCovered { witness: Vec<f64> },

    #[error("feasible-map refinement exceeded depth {depth} at cell with centroid {centroid:?}")]
    DepthExceeded { depth: u32, centroid: Vec<f64> },

    /// Phase II could not certify a cell before hitting the depth or volume
    /// guard. `diameter` is an empirical upper bound on the overlap.
    #[error(
        "suboptimal-map refinement did not converge: cell at depth {depth} \
         (centroid {centroid:?}, diameter {diameter:e})"
    )]
    NonConvergence {
        depth: u32,
        centroid: Vec<f64>,
        diameter: f64,
        vertices: Vec<Vec<f64>>,
    },

    #[error("vertex {vertex} of the cell is not feasible for the assigned commutation")]
    VertexInfeasible { vertex: usize },

    #[error("tree does not carry vertex solutions (built in semi-explicit mode)")]
    ModeMismatch,

    #[error("corrupt tree file: {0}")]
    CorruptFile(String),

    #[error("unsupported tree file version {found} (expected {expected})")]
    VersionMismatch { found: u16, expected: u16 },

    #[error("i/o error on {path:?}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
