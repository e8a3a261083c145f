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

use std::io::Write;
use std::time::Instant;

use super::NodeId;
use crate::problem::CommutationId;

#[derive(Debug, Clone, PartialEq)]
pub enum ProgressEvent {
    Closed { node: NodeId, delta: CommutationId },
    Split { node: NodeId, children: Vec<NodeId> },
    Reassigned { node: NodeId, from: CommutationId, to: CommutationId },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProgressRecord {
    pub wall_time_s: f64,
    pub event: ProgressEvent,
    pub closed_leaf_count: usize,
    pub closed_volume_fraction: f64,
    pub open_count: usize,
    pub depth: u32,
}

/// Append-only event stream of one partitioning phase.
#[derive(Debug, Clone)]
pub struct ProgressLog {
    start: Instant,
    records: Vec<ProgressRecord>,
}

impl Default for ProgressLog {
    fn default() -> Self {
        Self {
            start: Instant::now(),
            records: Vec::new(),
        }
    }
}

impl ProgressLog {
    pub fn elapsed_s(&self) -> f64 {
        self.start.elapsed().as_secs_f64()
    }

    pub fn records(&self) -> &[ProgressRecord] {
        &self.records
    }

    pub(crate) fn push(&mut self, mut rec: ProgressRecord) {
        rec.wall_time_s = self.elapsed_s();
        self.records.push(rec);
    }

    pub const CSV_HEADER: &'static str =
        "wall_time_s,closed_leaf_count,closed_volume_fraction,open_count,depth";

    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "{}", Self::CSV_HEADER)?;
        for r in &self.records {
            writeln!(
                w,
                "{:.6},{},{:.12},{},{}",
                r.wall_time_s, r.closed_leaf_count, r.closed_volume_fraction, r.open_count, r.depth
            )?;
        }
        Ok(())
    }

    /// `(node, commutation)` pairs that were abandoned through a reassignment
    /// and later assigned to the same node again.
    pub fn reassignment_revisits(&self) -> Vec<(NodeId, CommutationId)> {
        use std::collections::HashSet;
        let mut rejected: HashSet<(NodeId, CommutationId)> = HashSet::new();
        let mut revisits = Vec::new();
        for r in &self.records {
            if let ProgressEvent::Reassigned { node, from, to } = r.event {
                if rejected.contains(&(node, to)) {
                    revisits.push((node, to));
                }
                rejected.insert((node, from));
            }
        }
        revisits
    }
}
