//! Execution policy. Every parallel map collects in index order and all
//! reductions happen afterwards in a fixed sequential order, so results do not
//! depend on the worker count.

use std::env;

pub const WORKERS_ENV: &str = "LOCHRIG_WORKERS";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExecPolicy {
    Sequential,
    /// `workers == 0` means the rayon default.
    Parallel { workers: usize },
}

impl Default for ExecPolicy {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            ExecPolicy::Parallel { workers: 0 }
        } else {
            ExecPolicy::Sequential
        }
    }
}

impl ExecPolicy {
    pub fn with_workers(workers: usize) -> Self {
        if workers == 1 || !cfg!(feature = "parallel") {
            ExecPolicy::Sequential
        } else {
            ExecPolicy::Parallel { workers }
        }
    }

    /// `LOCHRIG_WORKERS` wins over the requested count.
    pub fn resolve(requested: Option<usize>) -> Self {
        let from_env = env::var(WORKERS_ENV).ok().and_then(|v| v.trim().parse::<usize>().ok());
        match from_env.or(requested) {
            Some(w) => Self::with_workers(w),
            None => Self::default(),
        }
    }

    pub fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match self {
            ExecPolicy::Sequential => (0..n).map(f).collect(),
            #[cfg(feature = "parallel")]
            ExecPolicy::Parallel { workers } => {
                use rayon::prelude::*;
                let run = || (0..n).into_par_iter().map(&f).collect();
                match pool(*workers) {
                    Some(p) => p.install(run),
                    None => run(),
                }
            }
            #[cfg(not(feature = "parallel"))]
            ExecPolicy::Parallel { .. } => (0..n).map(f).collect(),
        }
    }
}

#[cfg(feature = "parallel")]
fn pool(workers: usize) -> Option<std::sync::Arc<rayon::ThreadPool>> {
    use std::collections::HashMap;
    use std::sync::{Arc, Mutex, OnceLock};
    if workers == 0 {
        return None;
    }
    static POOLS: OnceLock<Mutex<HashMap<usize, Arc<rayon::ThreadPool>>>> = OnceLock::new();
    let mut pools = POOLS.get_or_init(Default::default).lock().expect("pool registry poisoned");
    let p = pools.entry(workers).or_insert_with(|| {
        Arc::new(
            rayon::ThreadPoolBuilder::new()
                .num_threads(workers)
                .build()
                .expect("failed to build rayon pool"),
        )
    });
    Some(p.clone())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved() {
        for p in [ExecPolicy::Sequential, ExecPolicy::with_workers(3)] {
            let v = p.map(100, |i| i * i);
            assert_eq!(v, (0..100).map(|i| i * i).collect::<Vec<_>>());
        }
    }
}
