//! Bounded-window streaming graph engine.
//!
//! Graphs are held as host-side CSR for push passes and as CSC pages for
//! dense pull passes. Pages stream through a window of `B` slots under one
//! of several schedules, and convergence predictors skip pulls of vertices
//! that are not expected to change.
//!
//! ```
//! use pagestream::{algorithms::VertexProgram, engine, graph::EdgeList};
//! use pagestream::algorithms::ProgramKind;
//!
//! let el = EdgeList::unweighted(3, vec![(0, 1), (1, 2)]).unwrap();
//! let g = engine::PreparedGraph::new(&el, ProgramKind::Bfs, None).unwrap();
//! let program = VertexProgram::bfs(0, 3).unwrap();
//! let (values, _) = engine::run(&g, &program, &engine::EngineConfig::default()).unwrap();
//! assert_eq!(values, vec![0, 1, 2]);
//! ```

pub mod algorithms;
pub mod bench;
pub mod engine;
pub mod error;
pub mod graph;
pub mod ingest;
pub mod metrics;
pub mod par;
pub mod predictor;
pub mod scheduler;

pub use error::{Error, Result};
