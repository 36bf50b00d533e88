//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature (default) the `Parallel` execution mode fans
//! work out over rayon; without it every mode runs sequentially. Results are
//! always collected in input order, so output never depends on the mode or
//! the thread count.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Execution {
    Sequential,
    /// Use rayon. `jobs = None` means the global pool; `Some(n)` builds a
    /// dedicated pool of `n` threads for the call.
    Parallel { jobs: Option<usize> },
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel { jobs: None }
        } else {
            Execution::Sequential
        }
    }
}

impl Execution {
    /// Build from a `--jobs` style count: `1` is sequential, `0` means "all cores".
    pub fn from_jobs(jobs: usize) -> Self {
        match jobs {
            1 => Execution::Sequential,
            0 => Execution::Parallel { jobs: None },
            n => Execution::Parallel { jobs: Some(n) },
        }
    }

    pub fn is_parallel(&self) -> bool {
        cfg!(feature = "parallel") && matches!(self, Execution::Parallel { .. })
    }

    /// Order-preserving map.
    pub fn map<T, R, F>(&self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if let Execution::Parallel { jobs } = *self {
            use rayon::prelude::*;
            return match jobs {
                Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
                    Ok(pool) => pool.install(|| items.par_iter().map(&f).collect()),
                    Err(_) => items.iter().map(&f).collect(),
                },
                None => items.par_iter().map(&f).collect(),
            };
        }
        items.iter().map(f).collect()
    }

    /// Order-preserving fallible map; the first error in input order wins.
    pub fn try_map<T, R, E, F>(&self, items: &[T], f: F) -> Result<Vec<R>, E>
    where
        T: Sync,
        R: Send,
        E: Send,
        F: Fn(&T) -> Result<R, E> + Sync + Send,
    {
        self.map(items, f).into_iter().collect()
    }
}

/// Derive an independent sub-seed from a base seed and a stream tag (splitmix64).
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut z = base
        .wrapping_add(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(stream.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modes_agree_and_preserve_order() {
        let xs: Vec<u64> = (0..1000).collect();
        let seq = Execution::Sequential.map(&xs, |x| x * x);
        let par = Execution::Parallel { jobs: Some(3) }.map(&xs, |x| x * x);
        let glob = Execution::Parallel { jobs: None }.map(&xs, |x| x * x);
        assert_eq!(seq, par);
        assert_eq!(seq, glob);
    }

    #[test]
    fn try_map_reports_first_error() {
        let xs: Vec<i32> = vec![1, -2, 3, -4];
        let r: Result<Vec<i32>, i32> =
            Execution::Parallel { jobs: Some(2) }.try_map(&xs, |&x| if x < 0 { Err(x) } else { Ok(x) });
        assert_eq!(r, Err(-2));
    }

    #[test]
    fn derived_seeds_differ_by_stream() {
        assert_ne!(derive_seed(7, 0), derive_seed(7, 1));
        assert_eq!(derive_seed(7, 3), derive_seed(7, 3));
    }
}
