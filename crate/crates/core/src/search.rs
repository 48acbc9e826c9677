//! Multistart search plumbing shared by the classifiers and bound searches.
//!
//! Every restart owns an RNG derived from `(seed, restart index)`, so results
//! do not depend on how restarts are scheduled across worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Number of independent restarts and local refinement steps per restart.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchBudget {
    pub restarts: usize,
    pub steps: usize,
}

impl SearchBudget {
    pub const fn new(restarts: usize, steps: usize) -> Self {
        Self { restarts, steps }
    }

    /// Upper bound on objective evaluations.
    pub fn evaluations(&self) -> usize {
        self.restarts * (self.steps + 1)
    }
}

/// RNG for one restart of one search.
pub fn restart_rng(seed: u64, restart: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(restart as u64 + 1);
    rng
}

/// Runs `restarts` independent jobs in parallel and keeps the one with the
/// largest score. Ties go to the lowest restart index.
pub fn best_of<T, F>(restarts: usize, job: F) -> Option<(usize, T, f64)>
where
    T: Send,
    F: Fn(usize) -> (T, f64) + Sync,
{
    (0..restarts)
        .into_par_iter()
        .map(|r| {
            let (v, s) = job(r);
            (r, v, s)
        })
        .reduce_with(|a, b| {
            if b.2 > a.2 || (b.2 == a.2 && b.0 < a.0) || a.2.is_nan() {
                b
            } else {
                a
            }
        })
}
