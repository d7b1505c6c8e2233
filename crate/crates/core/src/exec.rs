//! Sequential / data-parallel execution switch.
//!
//! With the `parallel` feature disabled every variant runs sequentially, so
//! results never depend on which path executed them.

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    /// Parallel on a pool of `workers` threads, or rayon's global pool for `None`.
    Parallel {
        workers: Option<usize>,
    },
    #[default]
    Auto,
}

impl Execution {
    pub fn with_workers(workers: Option<usize>) -> Self {
        match workers {
            Some(1) => Execution::Sequential,
            w => Execution::Parallel { workers: w },
        }
    }

    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && !matches!(self, Execution::Sequential)
    }

    /// Order-preserving map over `items`.
    pub fn map<T, R, F>(self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            match self {
                Execution::Sequential => {}
                Execution::Auto | Execution::Parallel { workers: None } => {
                    return items.par_iter().map(&f).collect();
                }
                Execution::Parallel { workers: Some(n) } => {
                    match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
                        Ok(pool) => return pool.install(|| items.par_iter().map(&f).collect()),
                        Err(_) => return items.par_iter().map(&f).collect(),
                    }
                }
            }
        }
        items.iter().map(f).collect()
    }
}
