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

//! Offline simplicial partitioning and online evaluation for multiparametric
//! mixed-integer conic programs.
//!
//! The offline pipeline first computes a feasible commutation map over the
//! parameter domain ([`phase1`]) and then refines it until every cell carries
//! an ε-suboptimal commutation ([`phase2`]), optionally together with vertex
//! decision vectors for fully explicit evaluation. The resulting
//! [`tree::PartitionTree`] is queried online by the evaluators in
//! [`runtime`] and stored in compact binary form by [`persist`].

pub mod bench;
pub mod conic;
pub mod error;
pub mod geometry;
pub mod persist;
pub mod phase1;
pub mod phase2;
pub mod problem;
pub mod problems;
pub mod runtime;
pub mod sim;
pub mod tree;

pub use error::{Error, Result};
