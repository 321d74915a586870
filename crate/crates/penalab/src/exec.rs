//! Thread-pool executor. Samples come back indexed by path, so the
//! reductions downstream see the same order for any worker count.

use penalab_core::experiments::{Executor, Sample};
use rayon::prelude::*;

pub struct Pool {
    pool: rayon::ThreadPool,
}

impl Pool {
    /// `workers = 0` uses one worker per available core.
    pub fn new(workers: usize) -> Result<Self, rayon::ThreadPoolBuildError> {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build()?;
        Ok(Self { pool })
    }

    pub fn workers(&self) -> usize {
        self.pool.current_num_threads()
    }
}

impl Executor for Pool {
    fn map(&self, n: usize, job: &(dyn Fn(usize) -> Sample + Sync)) -> Vec<Sample> {
        self.pool.install(|| (0..n).into_par_iter().map(job).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use penalab_core::experiments::Sequential;

    #[test]
    fn matches_sequential_order() {
        let job = |i: usize| Sample::new(vec![i as f64, (i as f64).sin()]);
        let pool = Pool::new(3).unwrap();
        assert_eq!(pool.workers(), 3);
        assert_eq!(pool.map(1000, &job), Sequential.map(1000, &job));
    }
}
