//! Deterministic per-path random numbers.
//!
//! Every Monte Carlo path owns an independent counter-keyed stream: the
//! (run seed, path id) pair is expanded into a ChaCha8 key, so path `i` draws
//! the same increments no matter how paths are batched across threads or
//! how many other paths run. Standard normals come from the inverse CDF
//! applied to a 53-bit uniform, and antithetic paths negate the increments
//! of their primary while sharing its id.

use crate::grid::Grid;
use crate::model::{FactorRow, MAX_FACTORS};
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, Normal};

/// Stream of standard normals owned by one path.
pub struct PathRng {
    rng: ChaCha8Rng,
    normal: Normal,
}

impl PathRng {
    pub fn new(seed: u64, path_id: u64) -> Self {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&seed.to_le_bytes());
        key[8..16].copy_from_slice(&path_id.to_le_bytes());
        key[16..32].copy_from_slice(b"hjm-mc-path-v1\0\0");
        PathRng {
            rng: ChaCha8Rng::from_seed(key),
            normal: Normal::new(0.0, 1.0).expect("unit normal"),
        }
    }

    /// Uniform in the open interval (0,1) with 53-bit resolution, centered
    /// so that 0 and 1 are unreachable.
    fn uniform_open(&mut self) -> f64 {
        ((self.rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / 9007199254740992.0)
    }

    pub fn standard_normal(&mut self) -> f64 {
        let u = self.uniform_open();
        self.normal.inverse_cdf(u)
    }
}

/// Brownian increments for one path on a time grid: `dw(n)` holds
/// `ΔW_n = W(t_{n+1}) − W(t_n)` per factor.
pub struct WienerIncrements {
    dw: Vec<FactorRow>,
}

impl WienerIncrements {
    /// Draw the increments for `path_id` on the grid's time partition.
    /// `negate` produces the antithetic mirror of the same path id: exactly
    /// the negated increments, drawn from the same stream.
    pub fn sample(grid: &Grid, factors: usize, seed: u64, path_id: u64, negate: bool) -> Self {
        assert!((1..=MAX_FACTORS).contains(&factors));
        let mut rng = PathRng::new(seed, path_id);
        let sign = if negate { -1.0 } else { 1.0 };
        let mut dw = Vec::with_capacity(grid.n_steps());
        for n in 0..grid.n_steps() {
            let sqrt_dt = grid.dt(n).sqrt();
            let mut row = [0.0; MAX_FACTORS];
            for slot in row.iter_mut().take(factors) {
                *slot = sign * sqrt_dt * rng.standard_normal();
            }
            dw.push(row);
        }
        WienerIncrements { dw }
    }

    /// Wrap explicitly provided increments, one row per time step. Lets
    /// convergence studies couple refinement levels by summing a fine
    /// path's increments into the coarse partition.
    pub fn from_rows(dw: Vec<FactorRow>) -> Self {
        WienerIncrements { dw }
    }

    pub fn n_steps(&self) -> usize {
        self.dw.len()
    }

    pub fn dw(&self, n: usize) -> FactorRow {
        self.dw[n]
    }
}
