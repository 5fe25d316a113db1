//! In-memory graph layouts.
//!
//! The host side keeps an out-edge [`CsrGraph`] for push passes. The window
//! side works on [`CscPage`]s: a contiguous run of destination vertices with
//! all of their in-edges, stored without a destination index array. A
//! [`PageSet`] is the ordered sequence of pages covering every vertex.

use crate::error::{Error, Result};

pub type VertexId = u32;

/// Width in bytes of every serialized id, offset and weight entry.
pub const ENTRY_BYTES: u64 = 4;

/// A directed edge multiset over `num_vertices` vertices.
///
/// Weights, when present, run parallel to `edges` and are all at least 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeList {
    num_vertices: usize,
    edges: Vec<(VertexId, VertexId)>,
    weights: Option<Vec<u32>>,
}

impl EdgeList {
    pub fn new(
        num_vertices: usize,
        edges: Vec<(VertexId, VertexId)>,
        weights: Option<Vec<u32>>,
    ) -> Result<Self> {
        if num_vertices > u32::MAX as usize {
            return Err(Error::MalformedInput(format!(
                "{num_vertices} vertices exceed 32-bit ids"
            )));
        }
        if let Some((i, &(s, d))) = edges
            .iter()
            .enumerate()
            .find(|(_, &(s, d))| s as usize >= num_vertices || d as usize >= num_vertices)
        {
            return Err(Error::MalformedInput(format!(
                "edge {i} ({s}, {d}) references a vertex outside [0, {num_vertices})"
            )));
        }
        if let Some(w) = &weights {
            if w.len() != edges.len() {
                return Err(Error::MalformedInput(format!(
                    "{} weights for {} edges",
                    w.len(),
                    edges.len()
                )));
            }
            if let Some(i) = w.iter().position(|&x| x == 0) {
                return Err(Error::MalformedInput(format!("edge {i} has weight 0")));
            }
        }
        Ok(Self {
            num_vertices,
            edges,
            weights,
        })
    }

    pub fn unweighted(num_vertices: usize, edges: Vec<(VertexId, VertexId)>) -> Result<Self> {
        Self::new(num_vertices, edges, None)
    }

    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(VertexId, VertexId)] {
        &self.edges
    }

    pub fn weights(&self) -> Option<&[u32]> {
        self.weights.as_deref()
    }

    pub fn is_weighted(&self) -> bool {
        self.weights.is_some()
    }

    /// Iterates `(src, dst, weight)` with weight 1 for unweighted lists.
    pub fn iter(&self) -> impl Iterator<Item = (VertexId, VertexId, u32)> + '_ {
        self.edges
            .iter()
            .enumerate()
            .map(move |(i, &(s, d))| (s, d, self.weights.as_ref().map_or(1, |w| w[i])))
    }

    pub fn with_weights(self, weights: Vec<u32>) -> Result<Self> {
        Self::new(self.num_vertices, self.edges, Some(weights))
    }

    pub fn into_parts(self) -> (usize, Vec<(VertexId, VertexId)>, Option<Vec<u32>>) {
        (self.num_vertices, self.edges, self.weights)
    }
}

/// Out-edge adjacency used by the host-side push executor.
#[derive(Debug, Clone)]
pub struct CsrGraph {
    num_vertices: usize,
    out_offsets: Vec<usize>,
    out_neighbors: Vec<VertexId>,
    out_weights: Option<Vec<u32>>,
}

impl CsrGraph {
    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    pub fn num_edges(&self) -> usize {
        self.out_neighbors.len()
    }

    pub fn out_offsets(&self) -> &[usize] {
        &self.out_offsets
    }

    pub fn out_degree(&self, v: VertexId) -> usize {
        let v = v as usize;
        self.out_offsets[v + 1] - self.out_offsets[v]
    }

    pub fn neighbors(&self, v: VertexId) -> &[VertexId] {
        let v = v as usize;
        &self.out_neighbors[self.out_offsets[v]..self.out_offsets[v + 1]]
    }

    /// Out-edge weights of `v`, or `None` for an unweighted graph.
    pub fn weights(&self, v: VertexId) -> Option<&[u32]> {
        let v = v as usize;
        self.out_weights
            .as_ref()
            .map(|w| &w[self.out_offsets[v]..self.out_offsets[v + 1]])
    }

    pub fn is_weighted(&self) -> bool {
        self.out_weights.is_some()
    }

    pub fn iter_edges(&self) -> impl Iterator<Item = (VertexId, VertexId, u32)> + '_ {
        (0..self.num_vertices as VertexId).flat_map(move |u| {
            let ws = self.weights(u);
            self.neighbors(u)
                .iter()
                .enumerate()
                .map(move |(i, &v)| (u, v, ws.map_or(1, |w| w[i])))
        })
    }
}

/// Builds the out-edge CSR. Edges keep their input order within a source.
pub fn build_csr(edges: &EdgeList) -> Result<CsrGraph> {
    let n = edges.num_vertices();
    let mut out_offsets = vec![0usize; n + 1];
    for &(s, d) in edges.edges() {
        if s as usize >= n || d as usize >= n {
            return Err(Error::MalformedInput(format!(
                "edge ({s}, {d}) out of range for {n} vertices"
            )));
        }
        out_offsets[s as usize + 1] += 1;
    }
    for i in 0..n {
        out_offsets[i + 1] += out_offsets[i];
    }
    let mut cursor = out_offsets.clone();
    let mut out_neighbors = vec![0; edges.num_edges()];
    let mut out_weights = edges.weights().map(|_| vec![0u32; edges.num_edges()]);
    for (s, d, w) in edges.iter() {
        let slot = cursor[s as usize];
        cursor[s as usize] += 1;
        out_neighbors[slot] = d;
        if let Some(ow) = out_weights.as_mut() {
            ow[slot] = w;
        }
    }
    Ok(CsrGraph {
        num_vertices: n,
        out_offsets,
        out_neighbors,
        out_weights,
    })
}

/// A contiguous destination range `[vertex_begin, vertex_end)` with its in-edges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CscPage {
    vertex_begin: VertexId,
    vertex_end: VertexId,
    in_offsets: Vec<u32>,
    in_sources: Vec<VertexId>,
    in_weights: Option<Vec<u32>>,
}

impl CscPage {
    pub fn vertex_begin(&self) -> VertexId {
        self.vertex_begin
    }

    pub fn vertex_end(&self) -> VertexId {
        self.vertex_end
    }

    pub fn vertex_range(&self) -> std::ops::Range<VertexId> {
        self.vertex_begin..self.vertex_end
    }

    pub fn num_destinations(&self) -> usize {
        (self.vertex_end - self.vertex_begin) as usize
    }

    pub fn num_edges(&self) -> usize {
        self.in_sources.len()
    }

    pub fn in_offsets(&self) -> &[u32] {
        &self.in_offsets
    }

    /// In-edge sources of destination `v`, which must lie in this page.
    pub fn sources(&self, v: VertexId) -> &[VertexId] {
        let local = (v - self.vertex_begin) as usize;
        let (a, b) = (
            self.in_offsets[local] as usize,
            self.in_offsets[local + 1] as usize,
        );
        &self.in_sources[a..b]
    }

    pub fn weights(&self, v: VertexId) -> Option<&[u32]> {
        let local = (v - self.vertex_begin) as usize;
        let (a, b) = (
            self.in_offsets[local] as usize,
            self.in_offsets[local + 1] as usize,
        );
        self.in_weights.as_ref().map(|w| &w[a..b])
    }

    pub fn in_degree(&self, v: VertexId) -> usize {
        let local = (v - self.vertex_begin) as usize;
        (self.in_offsets[local + 1] - self.in_offsets[local]) as usize
    }

    pub fn is_weighted(&self) -> bool {
        self.in_weights.is_some()
    }

    /// Serialized size of this page using its own weightedness.
    pub fn bytes(&self) -> u64 {
        page_bytes(self, self.is_weighted())
    }

    pub fn iter_edges(&self) -> impl Iterator<Item = (VertexId, VertexId, u32)> + '_ {
        self.vertex_range().flat_map(move |v| {
            let ws = self.weights(v);
            self.sources(v)
                .iter()
                .enumerate()
                .map(move |(i, &u)| (u, v, ws.map_or(1, |w| w[i])))
        })
    }
}

/// Transfer size of a page: offsets, sources and (optionally) weights, all
/// [`ENTRY_BYTES`] wide.
pub fn page_bytes(page: &CscPage, weighted: bool) -> u64 {
    let offsets = page.in_offsets.len() as u64;
    let sources = page.in_sources.len() as u64;
    let weights = if weighted { sources } else { 0 };
    (offsets + sources + weights) * ENTRY_BYTES
}

pub type PageId = usize;

#[derive(Debug, Clone)]
pub struct PageSet {
    pages: Vec<CscPage>,
    page_vertex_capacity: usize,
    num_vertices: usize,
}

impl PageSet {
    pub fn pages(&self) -> &[CscPage] {
        &self.pages
    }

    pub fn len(&self) -> usize {
        self.pages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pages.is_empty()
    }

    pub fn get(&self, id: PageId) -> &CscPage {
        &self.pages[id]
    }

    pub fn page_vertex_capacity(&self) -> usize {
        self.page_vertex_capacity
    }

    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    pub fn num_edges(&self) -> usize {
        self.pages.iter().map(CscPage::num_edges).sum()
    }

    pub fn page_of(&self, v: VertexId) -> PageId {
        v as usize / self.page_vertex_capacity
    }

    pub fn total_bytes(&self) -> u64 {
        self.pages.iter().map(CscPage::bytes).sum()
    }
}

/// Transposes the edge list by destination and cuts it into pages of at most
/// `page_vertex_capacity` destinations.
pub fn build_csc_pages(edges: &EdgeList, page_vertex_capacity: usize) -> Result<PageSet> {
    if page_vertex_capacity == 0 {
        return Err(Error::InvalidConfig(
            "page_vertex_capacity must be at least 1".into(),
        ));
    }
    let n = edges.num_vertices();
    let mut in_offsets = vec![0usize; n + 1];
    for &(_, d) in edges.edges() {
        in_offsets[d as usize + 1] += 1;
    }
    for i in 0..n {
        in_offsets[i + 1] += in_offsets[i];
    }
    let mut cursor = in_offsets.clone();
    let mut sources = vec![0; edges.num_edges()];
    let mut weights = edges.weights().map(|_| vec![0u32; edges.num_edges()]);
    for (s, d, w) in edges.iter() {
        let slot = cursor[d as usize];
        cursor[d as usize] += 1;
        sources[slot] = s;
        if let Some(ws) = weights.as_mut() {
            ws[slot] = w;
        }
    }

    let mut pages = Vec::with_capacity(n.div_ceil(page_vertex_capacity));
    let mut begin = 0usize;
    while begin < n {
        let end = (begin + page_vertex_capacity).min(n);
        let (lo, hi) = (in_offsets[begin], in_offsets[end]);
        pages.push(CscPage {
            vertex_begin: begin as VertexId,
            vertex_end: end as VertexId,
            in_offsets: in_offsets[begin..=end]
                .iter()
                .map(|&o| (o - lo) as u32)
                .collect(),
            in_sources: sources[lo..hi].to_vec(),
            in_weights: weights.as_ref().map(|w| w[lo..hi].to_vec()),
        });
        begin = end;
    }
    Ok(PageSet {
        pages,
        page_vertex_capacity,
        num_vertices: n,
    })
}

/// Adds the reverse of every edge. Duplicates are kept.
pub fn symmetrize(edges: &EdgeList) -> EdgeList {
    let mut out = Vec::with_capacity(edges.num_edges() * 2);
    let mut weights = edges
        .weights()
        .map(|_| Vec::with_capacity(edges.num_edges() * 2));
    for (s, d, w) in edges.iter() {
        out.push((s, d));
        out.push((d, s));
        if let Some(ws) = weights.as_mut() {
            ws.push(w);
            ws.push(w);
        }
    }
    EdgeList {
        num_vertices: edges.num_vertices(),
        edges: out,
        weights,
    }
}
