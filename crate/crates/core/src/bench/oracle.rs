//! Single-threaded reference solvers, independent of the engine's code
//! paths: a level queue for BFS, union-find for CC and Dijkstra for SSSP.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};

use crate::algorithms::{ProgramKind, Value, INF};
use crate::error::{Error, Result};
use crate::graph::{EdgeList, VertexId};

pub fn reference_solve(
    edges: &EdgeList,
    kind: ProgramKind,
    source: VertexId,
) -> Result<Vec<Value>> {
    let n = edges.num_vertices();
    if kind.needs_source() && source as usize >= n {
        return Err(Error::InvalidConfig(format!(
            "source {source} outside [0, {n})"
        )));
    }
    match kind {
        ProgramKind::Bfs => Ok(bfs_levels(edges, source)),
        ProgramKind::Cc => Ok(component_min_labels(edges)),
        ProgramKind::Sssp => {
            if !edges.is_weighted() {
                return Err(Error::InvalidConfig("sssp needs edge weights".into()));
            }
            Ok(dijkstra(edges, source))
        }
    }
}

fn adjacency(edges: &EdgeList) -> Vec<Vec<(VertexId, u32)>> {
    let mut adj = vec![Vec::new(); edges.num_vertices()];
    for (s, d, w) in edges.iter() {
        adj[s as usize].push((d, w));
    }
    adj
}

fn bfs_levels(edges: &EdgeList, source: VertexId) -> Vec<Value> {
    let adj = adjacency(edges);
    let mut level = vec![INF; adj.len()];
    let mut queue = VecDeque::from([source]);
    level[source as usize] = 0;
    while let Some(u) = queue.pop_front() {
        for &(v, _) in &adj[u as usize] {
            if level[v as usize] == INF {
                level[v as usize] = level[u as usize] + 1;
                queue.push_back(v);
            }
        }
    }
    level
}

/// Smallest vertex id of each weakly connected component.
fn component_min_labels(edges: &EdgeList) -> Vec<Value> {
    let n = edges.num_vertices();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for &(s, d) in edges.edges() {
        let (a, b) = (find(&mut parent, s as usize), find(&mut parent, d as usize));
        // keep the smaller id as root so the root is the component minimum
        if a < b {
            parent[b] = a;
        } else if b < a {
            parent[a] = b;
        }
    }
    (0..n).map(|v| find(&mut parent, v) as Value).collect()
}

fn dijkstra(edges: &EdgeList, source: VertexId) -> Vec<Value> {
    let adj = adjacency(edges);
    let mut dist = vec![INF; adj.len()];
    let mut heap = BinaryHeap::from([Reverse((0 as Value, source))]);
    dist[source as usize] = 0;
    while let Some(Reverse((d, u))) = heap.pop() {
        if d > dist[u as usize] {
            continue;
        }
        for &(v, w) in &adj[u as usize] {
            let nd = d + w as Value;
            if nd < dist[v as usize] {
                dist[v as usize] = nd;
                heap.push(Reverse((nd, v)));
            }
        }
    }
    dist
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerifyReport {
    pub mismatch_count: usize,
    /// First mismatches as `(vertex, got, expected)`, at most ten.
    pub first_mismatches: Vec<(VertexId, Value, Value)>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.mismatch_count == 0
    }
}

impl std::fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.passed() {
            return f.write_str("pass");
        }
        write!(f, "fail: {} mismatching vertices", self.mismatch_count)?;
        for (v, got, want) in &self.first_mismatches {
            write!(f, "; v{v} got {} expected {}", show(*got), show(*want))?;
        }
        Ok(())
    }
}

fn show(v: Value) -> String {
    if v == INF {
        "inf".into()
    } else {
        v.to_string()
    }
}

pub const MAX_LISTED_MISMATCHES: usize = 10;

pub fn verify(values: &[Value], oracle: &[Value]) -> Result<VerifyReport> {
    if values.len() != oracle.len() {
        return Err(Error::ContractViolation(format!(
            "value arrays differ in length: {} vs {}",
            values.len(),
            oracle.len()
        )));
    }
    let mut report = VerifyReport {
        mismatch_count: 0,
        first_mismatches: Vec::new(),
    };
    for (v, (&got, &want)) in values.iter().zip(oracle).enumerate() {
        if got != want {
            report.mismatch_count += 1;
            if report.first_mismatches.len() < MAX_LISTED_MISMATCHES {
                report.first_mismatches.push((v as VertexId, got, want));
            }
        }
    }
    Ok(report)
}
