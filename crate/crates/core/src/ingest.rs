//! Edge-list text parsing, RMAT generation, weight assignment and the
//! `SRPH` binary graph file.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{EdgeList, VertexId};

pub const DEFAULT_WEIGHT_RANGE: (u32, u32) = (1, 64);

/// RMAT quadrant parameters. `|V| = 2^scale`, `|E| = edge_factor * |V|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RmatParams {
    pub scale: u32,
    pub edge_factor: u32,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub seed: u64,
}

impl RmatParams {
    /// Graph500 quadrant probabilities with edge factor 16.
    pub fn graph500(scale: u32, seed: u64) -> Self {
        Self {
            scale,
            edge_factor: 16,
            a: 0.57,
            b: 0.19,
            c: 0.19,
            d: 0.05,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.scale < 1 || self.scale > 31 {
            return Err(Error::InvalidConfig(format!(
                "rmat scale {} outside [1, 31]",
                self.scale
            )));
        }
        if self.edge_factor < 1 {
            return Err(Error::InvalidConfig("rmat edge_factor must be >= 1".into()));
        }
        let probs = [self.a, self.b, self.c, self.d];
        if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::InvalidConfig(format!(
                "rmat quadrant probabilities {probs:?} outside [0, 1]"
            )));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidConfig(format!(
                "rmat quadrant probabilities sum to {sum}, not 1"
            )));
        }
        Ok(())
    }
}

/// Parses SNAP-style lines `src dst` or `src dst w`. `#` starts a comment line.
pub fn parse_edge_list<R: BufRead>(reader: R, weighted: bool) -> Result<EdgeList> {
    let mut edges = Vec::new();
    let mut weights = Vec::new();
    let mut max_id: Option<VertexId> = None;
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut tokens = trimmed.split_whitespace();
        let mut field = |what: &str| -> Result<u32> {
            let tok = tokens.next().ok_or_else(|| Error::Parse {
                line: line_no,
                message: format!("missing {what}"),
            })?;
            tok.parse::<u32>().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("invalid {what} {tok:?}"),
            })
        };
        let src = field("source")?;
        let dst = field("destination")?;
        if weighted {
            let w = field("weight")?;
            if w == 0 {
                return Err(Error::Parse {
                    line: line_no,
                    message: "weight must be at least 1".into(),
                });
            }
            weights.push(w);
        }
        max_id = max_id.max(Some(src.max(dst)));
        edges.push((src, dst));
    }
    let n = max_id.map_or(0, |m| m as usize + 1);
    EdgeList::new(n, edges, weighted.then_some(weights))
}

pub fn generate_rmat(params: &RmatParams) -> Result<EdgeList> {
    params.validate()?;
    let n = 1usize << params.scale;
    let m = n * params.edge_factor as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let (ab, abc) = (params.a + params.b, params.a + params.b + params.c);
    let mut edges = Vec::with_capacity(m);
    for _ in 0..m {
        let (mut src, mut dst) = (0u32, 0u32);
        for level in (0..params.scale).rev() {
            let r: f64 = rng.gen();
            let (sb, db) = if r < params.a {
                (0, 0)
            } else if r < ab {
                (0, 1)
            } else if r < abc {
                (1, 0)
            } else {
                (1, 1)
            };
            src |= sb << level;
            dst |= db << level;
        }
        edges.push((src, dst));
    }
    EdgeList::unweighted(n, edges)
}

/// Replaces weights with independent uniform integers in `[lo, hi]`.
pub fn assign_weights(edges: EdgeList, seed: u64, lo: u32, hi: u32) -> Result<EdgeList> {
    if lo < 1 {
        return Err(Error::InvalidConfig(format!(
            "weight lower bound {lo} must be at least 1"
        )));
    }
    if hi < lo {
        return Err(Error::InvalidConfig(format!(
            "weight range [{lo}, {hi}] is empty"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weights = (0..edges.num_edges())
        .map(|_| rng.gen_range(lo..=hi))
        .collect();
    edges.with_weights(weights)
}

const MAGIC: &[u8; 4] = b"SRPH";
const VERSION: u8 = 1;
const FLAG_WEIGHTED: u8 = 1;
const HEADER_BYTES: usize = 24;

/// Header of the binary graph file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GraphFileHeader {
    pub weighted: bool,
    pub num_vertices: u64,
    pub num_edges: u64,
}

impl GraphFileHeader {
    pub fn record_bytes(&self) -> usize {
        if self.weighted {
            12
        } else {
            8
        }
    }

    fn encode(&self) -> [u8; HEADER_BYTES] {
        let mut buf = [0u8; HEADER_BYTES];
        buf[..4].copy_from_slice(MAGIC);
        buf[4] = VERSION;
        buf[5] = if self.weighted { FLAG_WEIGHTED } else { 0 };
        buf[8..16].copy_from_slice(&self.num_vertices.to_le_bytes());
        buf[16..24].copy_from_slice(&self.num_edges.to_le_bytes());
        buf
    }

    fn decode(buf: &[u8]) -> Result<Self> {
        if buf.len() < HEADER_BYTES {
            return Err(Error::Format(format!(
                "truncated header: expected {HEADER_BYTES} bytes, found {}",
                buf.len()
            )));
        }
        if &buf[..4] != MAGIC {
            return Err(Error::Format(format!("bad magic {:?}", &buf[..4])));
        }
        if buf[4] != VERSION {
            return Err(Error::Format(format!("unsupported version {}", buf[4])));
        }
        Ok(Self {
            weighted: buf[5] & FLAG_WEIGHTED != 0,
            num_vertices: u64::from_le_bytes(buf[8..16].try_into().unwrap()),
            num_edges: u64::from_le_bytes(buf[16..24].try_into().unwrap()),
        })
    }
}

pub fn write_binary<W: Write>(graph: &EdgeList, mut out: W) -> Result<()> {
    let header = GraphFileHeader {
        weighted: graph.is_weighted(),
        num_vertices: graph.num_vertices() as u64,
        num_edges: graph.num_edges() as u64,
    };
    out.write_all(&header.encode())?;
    for (s, d, w) in graph.iter() {
        out.write_all(&s.to_le_bytes())?;
        out.write_all(&d.to_le_bytes())?;
        if header.weighted {
            out.write_all(&w.to_le_bytes())?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn read_binary<R: Read>(mut input: R) -> Result<EdgeList> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    let header = GraphFileHeader::decode(&bytes)?;
    let payload = &bytes[HEADER_BYTES..];
    let expected = header.num_edges as usize * header.record_bytes();
    if payload.len() != expected {
        return Err(Error::Format(format!(
            "payload size mismatch: expected {expected} bytes, found {}",
            payload.len()
        )));
    }
    let word = |rec: &[u8], i: usize| u32::from_le_bytes(rec[4 * i..4 * i + 4].try_into().unwrap());
    let mut edges = Vec::with_capacity(header.num_edges as usize);
    let mut weights = header
        .weighted
        .then(|| Vec::with_capacity(header.num_edges as usize));
    for rec in payload.chunks_exact(header.record_bytes()) {
        edges.push((word(rec, 0), word(rec, 1)));
        if let Some(ws) = weights.as_mut() {
            ws.push(word(rec, 2));
        }
    }
    EdgeList::new(header.num_vertices as usize, edges, weights)
}

pub fn save_binary(graph: &EdgeList, path: impl AsRef<Path>) -> Result<()> {
    write_binary(graph, BufWriter::new(File::create(path)?))
}

pub fn load_binary(path: impl AsRef<Path>) -> Result<EdgeList> {
    read_binary(BufReader::new(File::open(path)?))
}
