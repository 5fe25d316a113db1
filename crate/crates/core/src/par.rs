//! Worker pool with a sequential fallback.
//!
//! With the `parallel` feature a [`Workers`] of more than one thread owns a
//! rayon pool; otherwise every call runs inline on the caller's thread.

use crate::error::{Error, Result};

pub struct Workers {
    count: usize,
    #[cfg(feature = "parallel")]
    pool: Option<rayon::ThreadPool>,
}

impl Workers {
    pub fn new(count: usize) -> Result<Self> {
        if count == 0 {
            return Err(Error::InvalidConfig("worker_count must be >= 1".into()));
        }
        #[cfg(feature = "parallel")]
        {
            let pool = if count > 1 {
                Some(
                    rayon::ThreadPoolBuilder::new()
                        .num_threads(count)
                        .thread_name(|i| format!("pagestream-worker-{i}"))
                        .build()
                        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?,
                )
            } else {
                None
            };
            Ok(Self { count, pool })
        }
        #[cfg(not(feature = "parallel"))]
        Ok(Self { count })
    }

    pub fn sequential() -> Self {
        Self {
            count: 1,
            #[cfg(feature = "parallel")]
            pool: None,
        }
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn is_parallel(&self) -> bool {
        #[cfg(feature = "parallel")]
        {
            self.pool.is_some()
        }
        #[cfg(not(feature = "parallel"))]
        {
            false
        }
    }

    /// `items.map(f)` in input order.
    pub fn map<T, R, F>(&self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if let Some(pool) = &self.pool {
            use rayon::prelude::*;
            return pool.install(|| items.par_iter().map(&f).collect());
        }
        items.iter().map(f).collect()
    }

    /// Runs `f` over `0..len` split into contiguous chunks, one result per
    /// chunk in order.
    pub fn map_chunks<R, F>(&self, len: usize, min_chunk: usize, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(std::ops::Range<usize>) -> R + Sync + Send,
    {
        let chunks = if self.is_parallel() {
            (len / min_chunk.max(1)).clamp(1, self.count * 4)
        } else {
            1
        };
        let step = len.div_ceil(chunks).max(1);
        let ranges: Vec<_> = (0..len)
            .step_by(step)
            .map(|s| s..(s + step).min(len))
            .collect();
        self.map(&ranges, |r| f(r.clone()))
    }
}

impl std::fmt::Debug for Workers {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Workers")
            .field("count", &self.count)
            .field("parallel", &self.is_parallel())
            .finish()
    }
}
