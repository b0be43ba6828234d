//! Data-parallel execution policy.
//!
//! Every per-face and per-cell kernel in the crate goes through
//! [`Execution::map_indices`]. Results are written by index, so the output
//! is bitwise identical whichever policy is selected. Without the `parallel`
//! feature both variants run sequentially.

use serde::{Deserialize, Serialize};

/// Minimum number of items handed to one rayon task.
pub const PAR_MIN_LEN: usize = 64;

/// Shorter index ranges are evaluated inline even under `Parallel`.
pub const PAR_THRESHOLD: usize = 4 * PAR_MIN_LEN;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Execution {
    Sequential,
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

impl Execution {
    /// True when this policy actually dispatches to the thread pool.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }

    /// Evaluate `f` for every index in `0..len`, returning results in index order.
    pub fn map_indices<T, F>(self, len: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self == Execution::Parallel && len >= PAR_THRESHOLD && rayon::current_num_threads() > 1 {
            use rayon::prelude::*;
            return (0..len)
                .into_par_iter()
                .with_min_len(PAR_MIN_LEN)
                .map(f)
                .collect();
        }
        (0..len).map(f).collect()
    }

    /// Evaluate `f` over a slice of jobs, one result per job, in order.
    pub fn map_jobs<J, T, F>(self, jobs: &[J], f: F) -> Vec<T>
    where
        J: Sync,
        T: Send,
        F: Fn(&J) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self == Execution::Parallel {
            use rayon::prelude::*;
            return jobs.par_iter().map(f).collect();
        }
        jobs.iter().map(f).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn policies_agree() {
        let f = |i: usize| (i as f64).sqrt().sin();
        let a = Execution::Sequential.map_indices(1000, f);
        let b = Execution::Parallel.map_indices(1000, f);
        assert_eq!(a, b);
    }

    #[test]
    fn empty_range() {
        let v: Vec<usize> = Execution::Parallel.map_indices(0, |i| i);
        assert!(v.is_empty());
    }
}
