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


//! Storage: binary tree files, JSON problem descriptions and CSV exports.

mod tree_file;

pub use tree_file::{
    decode, encode, load, save, BarycentricMap, CompiledTree, LayoutCounts, LoadedTree, StorageModel, MAGIC, VERSION,
};

mod schema;

pub use schema::{load_problem, parse_problem, problem_to_json, ConeFile, ProblemFile, ProgramFile};
