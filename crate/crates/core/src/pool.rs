//! A reusable buffer pool with allocation accounting. Integrator working
//! vectors ("clones" of the state) are drawn from here so repeated outer
//! intervals do not allocate fresh memory after warm-up.

use crate::error::CoreError;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PoolStats {
    pub acquires: u64,
    pub releases: u64,
    pub fresh_allocations: u64,
}

impl PoolStats {
    pub fn currently_held(&self) -> u64 {
        self.acquires - self.releases
    }
}

#[derive(Debug, Default)]
pub struct VectorPool {
    free: Vec<Vec<f64>>,
    stats: PoolStats,
}

impl VectorPool {
    pub fn new() -> VectorPool {
        VectorPool::default()
    }

    /// Hand out a zeroed buffer of length `len`, reusing a released buffer
    /// with sufficient capacity when one exists. Growing an undersized
    /// buffer counts as a fresh allocation.
    pub fn acquire(&mut self, len: usize) -> Vec<f64> {
        self.stats.acquires += 1;
        if let Some(pos) = self.free.iter().position(|b| b.capacity() >= len) {
            let mut buf = self.free.swap_remove(pos);
            buf.clear();
            buf.resize(len, 0.0);
            return buf;
        }
        if let Some(mut buf) = self.free.pop() {
            self.stats.fresh_allocations += 1;
            buf.clear();
            buf.resize(len, 0.0);
            return buf;
        }
        self.stats.fresh_allocations += 1;
        vec![0.0; len]
    }

    pub fn release(&mut self, buf: Vec<f64>) -> Result<(), CoreError> {
        if self.stats.releases >= self.stats.acquires {
            return Err(CoreError::DoubleRelease);
        }
        self.stats.releases += 1;
        self.free.push(buf);
        Ok(())
    }

    pub fn stats(&self) -> PoolStats {
        self.stats
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reuse_after_release() {
        let mut pool = VectorPool::new();
        let b = pool.acquire(8);
        pool.release(b).unwrap();
        let _b = pool.acquire(8);
        assert_eq!(pool.stats().fresh_allocations, 1);
        assert_eq!(pool.stats().acquires, 2);
    }

    #[test]
    fn cold_pool_allocates_each_time() {
        let mut pool = VectorPool::new();
        let held: Vec<_> = (0..5).map(|_| pool.acquire(4)).collect();
        assert_eq!(pool.stats().fresh_allocations, 5);
        assert_eq!(pool.stats().currently_held(), 5);
        for b in held {
            pool.release(b).unwrap();
        }
        assert_eq!(pool.stats().currently_held(), 0);
    }

    #[test]
    fn steady_state_over_outer_steps() {
        let mut pool = VectorPool::new();
        let k = 6;
        let mut fresh_after = Vec::new();
        for _ in 0..10 {
            let bufs: Vec<_> = (0..k).map(|_| pool.acquire(32)).collect();
            for b in bufs {
                pool.release(b).unwrap();
            }
            fresh_after.push(pool.stats().fresh_allocations);
        }
        assert_eq!(fresh_after[0], k as u64);
        assert_eq!(fresh_after[1], fresh_after[9]);
    }

    #[test]
    fn double_release_detected() {
        let mut pool = VectorPool::new();
        let b = pool.acquire(2);
        pool.release(b).unwrap();
        assert_eq!(pool.release(vec![0.0; 2]).unwrap_err(), CoreError::DoubleRelease);
    }

    #[test]
    fn acquire_is_zeroed() {
        let mut pool = VectorPool::new();
        let mut b = pool.acquire(3);
        b.iter_mut().for_each(|x| *x = 7.0);
        pool.release(b).unwrap();
        let b = pool.acquire(3);
        assert!(b.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn resize_counts_as_fresh() {
        let mut pool = VectorPool::new();
        let b = pool.acquire(4);
        pool.release(b).unwrap();
        let _b = pool.acquire(4096);
        assert_eq!(pool.stats().fresh_allocations, 2);
    }
}
