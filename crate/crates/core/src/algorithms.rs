//! BFS, CC and SSSP as monotone min-combine vertex programs.
//!
//! Every program shares one shape: values start at `init`, a candidate for a
//! destination is `combine(source value, edge weight)`, and a stored value is
//! replaced only by a strictly smaller candidate. The same definitions drive
//! the push executor, the pull kernel and the skip predictors.

use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::VertexId;

pub type Value = u64;

/// Sentinel for "unreached". `combine` saturates at it.
pub const INF: Value = Value::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProgramKind {
    Bfs,
    Cc,
    Sssp,
}

impl ProgramKind {
    pub const ALL: [ProgramKind; 3] = [ProgramKind::Bfs, ProgramKind::Cc, ProgramKind::Sssp];

    pub fn needs_source(self) -> bool {
        !matches!(self, ProgramKind::Cc)
    }

    pub fn needs_weights(self) -> bool {
        matches!(self, ProgramKind::Sssp)
    }

    pub fn symmetric_input(self) -> bool {
        matches!(self, ProgramKind::Cc)
    }
}

impl fmt::Display for ProgramKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProgramKind::Bfs => "bfs",
            ProgramKind::Cc => "cc",
            ProgramKind::Sssp => "sssp",
        })
    }
}

impl FromStr for ProgramKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bfs" => Ok(ProgramKind::Bfs),
            "cc" => Ok(ProgramKind::Cc),
            "sssp" => Ok(ProgramKind::Sssp),
            other => Err(Error::InvalidConfig(format!("unknown algorithm {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VertexProgram {
    kind: ProgramKind,
    source: Option<VertexId>,
}

impl VertexProgram {
    pub fn bfs(source: VertexId, num_vertices: usize) -> Result<Self> {
        check_source(source, num_vertices)?;
        Ok(Self {
            kind: ProgramKind::Bfs,
            source: Some(source),
        })
    }

    pub fn cc() -> Self {
        Self {
            kind: ProgramKind::Cc,
            source: None,
        }
    }

    /// SSSP requires a weighted graph; `weighted` reports whether it is.
    pub fn sssp(source: VertexId, num_vertices: usize, weighted: bool) -> Result<Self> {
        check_source(source, num_vertices)?;
        if !weighted {
            return Err(Error::InvalidConfig("sssp needs a weighted graph".into()));
        }
        Ok(Self {
            kind: ProgramKind::Sssp,
            source: Some(source),
        })
    }

    pub fn for_kind(
        kind: ProgramKind,
        source: VertexId,
        num_vertices: usize,
        weighted: bool,
    ) -> Result<Self> {
        match kind {
            ProgramKind::Bfs => Self::bfs(source, num_vertices),
            ProgramKind::Cc => Ok(Self::cc()),
            ProgramKind::Sssp => Self::sssp(source, num_vertices, weighted),
        }
    }

    pub fn kind(&self) -> ProgramKind {
        self.kind
    }

    pub fn source(&self) -> Option<VertexId> {
        self.source
    }

    pub fn identity(&self) -> Value {
        INF
    }

    pub fn init(&self, v: VertexId) -> Value {
        match self.kind {
            ProgramKind::Cc => v as Value,
            ProgramKind::Bfs | ProgramKind::Sssp => {
                if Some(v) == self.source {
                    0
                } else {
                    INF
                }
            }
        }
    }

    #[inline]
    pub fn combine(&self, src_value: Value, weight: u32) -> Value {
        match self.kind {
            ProgramKind::Cc => src_value,
            ProgramKind::Bfs => saturating_step(src_value, 1),
            ProgramKind::Sssp => saturating_step(src_value, weight as Value),
        }
    }

    #[inline]
    pub fn better(&self, a: Value, b: Value) -> bool {
        a < b
    }

    /// Vertices active before the first pass.
    pub fn initial_frontier(&self, num_vertices: usize) -> Vec<VertexId> {
        match self.source {
            Some(s) => vec![s],
            None => (0..num_vertices as VertexId).collect(),
        }
    }
}

#[inline]
fn saturating_step(a: Value, by: Value) -> Value {
    if a == INF {
        INF
    } else {
        a.saturating_add(by).min(INF - 1)
    }
}

fn check_source(source: VertexId, num_vertices: usize) -> Result<()> {
    if (source as usize) < num_vertices {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!(
            "source {source} outside [0, {num_vertices})"
        )))
    }
}

/// Dense per-vertex values with a linearizable minimum-combine write.
#[derive(Debug)]
pub struct VertexValues {
    values: Vec<AtomicU64>,
}

impl VertexValues {
    pub fn init(program: &VertexProgram, num_vertices: usize) -> Self {
        Self {
            values: (0..num_vertices as VertexId)
                .map(|v| AtomicU64::new(program.init(v)))
                .collect(),
        }
    }

    pub fn from_values(values: &[Value]) -> Self {
        Self {
            values: values.iter().map(|&v| AtomicU64::new(v)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn get(&self, v: VertexId) -> Value {
        self.values[v as usize].load(Ordering::Relaxed)
    }

    /// Stores `min(old, proposal)` and returns the previous value when the
    /// proposal strictly improved it.
    #[inline]
    pub fn propose(&self, v: VertexId, proposal: Value) -> Option<Value> {
        let old = self.values[v as usize].fetch_min(proposal, Ordering::Relaxed);
        (proposal < old).then_some(old)
    }

    pub fn to_vec(&self) -> Vec<Value> {
        self.values
            .iter()
            .map(|a| a.load(Ordering::Relaxed))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_csr, symmetrize, EdgeList};
    use proptest::prelude::*;
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Relaxes edges in a random order until nothing improves.
    fn random_schedule_fixpoint(el: &EdgeList, program: &VertexProgram, seed: u64) -> Vec<Value> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut values: Vec<Value> = (0..el.num_vertices() as u32)
            .map(|v| program.init(v))
            .collect();
        let mut edges: Vec<_> = el.iter().collect();
        loop {
            edges.shuffle(&mut rng);
            let mut changed = false;
            // relax a random prefix first to vary interleavings
            let cut = rng.gen_range(0..=edges.len());
            for &(u, v, w) in edges[..cut].iter().chain(edges.iter()) {
                let cand = program.combine(values[u as usize], w);
                if program.better(cand, values[v as usize]) {
                    values[v as usize] = cand;
                    changed = true;
                }
            }
            if !changed {
                return values;
            }
        }
    }

    /// Every simple path, exhaustively. Only for tiny graphs.
    fn brute_force_paths(el: &EdgeList, source: u32) -> Vec<Value> {
        let n = el.num_vertices();
        let csr = build_csr(el).unwrap();
        let mut best = vec![INF; n];
        fn dfs(
            csr: &crate::graph::CsrGraph,
            u: u32,
            dist: Value,
            on: &mut Vec<bool>,
            best: &mut Vec<Value>,
        ) {
            best[u as usize] = best[u as usize].min(dist);
            on[u as usize] = true;
            let ws = csr.weights(u).unwrap();
            for (i, &v) in csr.neighbors(u).iter().enumerate() {
                if !on[v as usize] {
                    dfs(csr, v, dist + ws[i] as Value, on, best);
                }
            }
            on[u as usize] = false;
        }
        dfs(&csr, source, 0, &mut vec![false; n], &mut best);
        best
    }

    #[test]
    fn bfs_on_path() {
        let el = EdgeList::unweighted(4, vec![(0, 1), (1, 2)]).unwrap();
        let p = VertexProgram::bfs(0, 4).unwrap();
        assert_eq!(random_schedule_fixpoint(&el, &p, 1), vec![0, 1, 2, INF]);
        assert_eq!(p.combine(INF, 1), INF);
        assert!(VertexProgram::bfs(4, 4).is_err());
    }

    #[test]
    fn cc_labels() {
        let el = symmetrize(&EdgeList::unweighted(4, vec![(0, 1), (2, 3)]).unwrap());
        assert_eq!(
            random_schedule_fixpoint(&el, &VertexProgram::cc(), 3),
            vec![0, 0, 2, 2]
        );

        let chain =
            symmetrize(&EdgeList::unweighted(6, (0..5).map(|i| (i, i + 1)).collect()).unwrap());
        assert_eq!(
            random_schedule_fixpoint(&chain, &VertexProgram::cc(), 4),
            vec![0; 6]
        );

        let empty = EdgeList::unweighted(3, vec![]).unwrap();
        assert_eq!(
            random_schedule_fixpoint(&empty, &VertexProgram::cc(), 5),
            vec![0, 1, 2]
        );
    }

    #[test]
    fn sssp_three_vertex_example() {
        let el = EdgeList::new(4, vec![(0, 1), (0, 2), (2, 1)], Some(vec![5, 1, 2])).unwrap();
        let p = VertexProgram::sssp(0, 4, true).unwrap();
        let expected = brute_force_paths(&el, 0);
        assert_eq!(expected, vec![0, 3, 1, INF]);
        assert_eq!(random_schedule_fixpoint(&el, &p, 9), expected);
        assert!(matches!(
            VertexProgram::sssp(0, 4, false),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn propose_keeps_minimum() {
        let vals = VertexValues::from_values(&[10, INF]);
        assert_eq!(vals.propose(0, 12), None);
        assert_eq!(vals.propose(0, 7), Some(10));
        assert_eq!(vals.propose(0, 7), None);
        assert_eq!(vals.propose(1, 3), Some(INF));
        assert_eq!(vals.to_vec(), vec![7, 3]);
    }

    #[test]
    fn concurrent_proposals_settle_on_minimum() {
        let vals = VertexValues::from_values(&[2000]);
        let wins = std::sync::atomic::AtomicUsize::new(0);
        std::thread::scope(|s| {
            for t in 0..8u64 {
                let (vals, wins) = (&vals, &wins);
                s.spawn(move || {
                    for k in 0..200u64 {
                        if vals.propose(0, 1599 - (k * 8 + t)).is_some() {
                            wins.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                        }
                    }
                });
            }
        });
        assert_eq!(vals.get(0), 0);
        assert!(wins.load(std::sync::atomic::Ordering::Relaxed) >= 1);
    }

    proptest! {
        #[test]
        fn any_schedule_reaches_same_fixpoint(
            n in 1usize..12,
            raw in prop::collection::vec((0u32..12, 0u32..12, 1u32..9), 0..30),
            seeds in prop::array::uniform2(any::<u64>()),
        ) {
            let edges: Vec<_> = raw.iter().map(|&(s, d, _)| (s % n as u32, d % n as u32)).collect();
            let weights = raw.iter().map(|e| e.2).collect();
            let el = EdgeList::new(n, edges, Some(weights)).unwrap();
            let sym = symmetrize(&el);
            for program in [
                VertexProgram::bfs(0, n).unwrap(),
                VertexProgram::sssp(0, n, true).unwrap(),
            ] {
                prop_assert_eq!(
                    random_schedule_fixpoint(&el, &program, seeds[0]),
                    random_schedule_fixpoint(&el, &program, seeds[1])
                );
            }
            prop_assert_eq!(
                random_schedule_fixpoint(&sym, &VertexProgram::cc(), seeds[0]),
                random_schedule_fixpoint(&sym, &VertexProgram::cc(), seeds[1])
            );
            prop_assert_eq!(
                random_schedule_fixpoint(&el, &VertexProgram::sssp(0, n, true).unwrap(), seeds[0]),
                brute_force_paths(&el, 0)
            );
        }

        #[test]
        fn combine_is_monotone(a in 0u64..1000, b in 0u64..1000, w in 1u32..100) {
            for p in [VertexProgram::cc(), VertexProgram::bfs(0, 1).unwrap(), VertexProgram::sssp(0, 1, true).unwrap()] {
                if p.better(a, b) {
                    prop_assert!(p.combine(a, w) <= p.combine(b, w));
                }
                prop_assert_eq!(p.combine(p.identity(), w), p.identity());
            }
        }
    }
}
