//! Monte Carlo driver: deterministic parallel sampling with compensated
//! accumulation.
//!
//! Samples are indexed by contiguous path ids. Ids are processed in fixed
//! chunks; each chunk is reduced sequentially with Neumaier compensated
//! summation, chunks are folded in id order, and every path draws its own
//! keyed random stream. The estimate is therefore byte-identical for a
//! given (seed, id range, path count) no matter how many worker threads
//! execute the chunks.

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::model::HjmModel;
use crate::payoff::{payoff_value, Payoff, QuadratureRule};
use crate::rng::WienerIncrements;
use crate::scheme::{simulate, CoeffTable, Scheme};
use rayon::prelude::*;

/// Ids per reduction chunk. Fixed: changing it changes the rounding of the
/// compensated sums and therefore the reproducible bit pattern.
const CHUNK: u64 = 256;

/// Monte Carlo run parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McConfig {
    /// Number of simulated paths. With antithetic sampling this must be
    /// even; a pair of mirrored paths forms one sample.
    pub paths: u64,
    pub seed: u64,
    pub antithetic: bool,
    /// Confidence multiplier for the statistical error band, e.g. 1.65 for
    /// a one-sided 95% band under the normal approximation.
    pub c0: f64,
    /// First path id of the run; successive runs of one study use disjoint
    /// id ranges so their samples stay independent.
    pub id_base: u64,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig {
            paths: 10_000,
            seed: 0,
            antithetic: true,
            c0: 1.65,
            id_base: 0,
        }
    }
}

impl McConfig {
    fn validate(&self) -> Result<()> {
        if self.paths == 0 {
            return Err(Error::InvalidConfig("path count must be positive".into()));
        }
        if self.antithetic && self.paths % 2 != 0 {
            return Err(Error::InvalidConfig(
                "antithetic sampling pairs paths; the path count must be even".into(),
            ));
        }
        if !(self.c0 > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "confidence multiplier {} must be positive",
                self.c0
            )));
        }
        Ok(())
    }

    /// Number of iid samples the run produces (pairs count once).
    pub fn samples(&self) -> u64 {
        if self.antithetic {
            self.paths / 2
        } else {
            self.paths
        }
    }
}

/// Per-component sample statistics of a vector-valued estimator.
#[derive(Debug, Clone)]
pub struct SampleStats {
    pub samples: u64,
    pub mean: Vec<f64>,
    /// Population standard deviation of the samples (biased formula,
    /// clamped at zero against rounding).
    pub std_dev: Vec<f64>,
}

impl SampleStats {
    /// Standard error of the sample mean for component `k`.
    pub fn std_error(&self, k: usize) -> f64 {
        self.std_dev[k] / (self.samples as f64).sqrt()
    }
}

fn neumaier_add(sum: &mut f64, comp: &mut f64, v: f64) {
    let t = *sum + v;
    if sum.abs() >= v.abs() {
        *comp += (*sum - t) + v;
    } else {
        *comp += (v - t) + *sum;
    }
    *sum = t;
}

struct ChunkAcc {
    sum: Vec<f64>,
    sum_c: Vec<f64>,
    sq: Vec<f64>,
    sq_c: Vec<f64>,
}

/// Evaluate `eval(id)` for `samples` ids starting at `id_base` and return
/// the per-component mean and population standard deviation. `width` is the
/// number of components each sample produces.
///
/// Chunks of ids are evaluated in parallel but reduced in id order with
/// compensated sums, so the result is bit-identical for any worker count.
pub fn run_samples<F>(samples: u64, width: usize, id_base: u64, eval: F) -> Result<SampleStats>
where
    F: Fn(u64) -> Result<Vec<f64>> + Sync,
{
    assert!(samples > 0 && width > 0);
    let n_chunks = samples.div_ceil(CHUNK);
    let chunks: Vec<ChunkAcc> = (0..n_chunks)
        .into_par_iter()
        .map(|c| -> Result<ChunkAcc> {
            let lo = c * CHUNK;
            let hi = (lo + CHUNK).min(samples);
            let mut acc = ChunkAcc {
                sum: vec![0.0; width],
                sum_c: vec![0.0; width],
                sq: vec![0.0; width],
                sq_c: vec![0.0; width],
            };
            for i in lo..hi {
                let vals = eval(id_base + i)?;
                debug_assert_eq!(vals.len(), width);
                for k in 0..width {
                    neumaier_add(&mut acc.sum[k], &mut acc.sum_c[k], vals[k]);
                    neumaier_add(&mut acc.sq[k], &mut acc.sq_c[k], vals[k] * vals[k]);
                }
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;

    // Sequential fold in chunk order keeps the result independent of how
    // chunks were scheduled across threads.
    let mut sum = vec![0.0; width];
    let mut sum_c = vec![0.0; width];
    let mut sq = vec![0.0; width];
    let mut sq_c = vec![0.0; width];
    for ch in &chunks {
        for k in 0..width {
            neumaier_add(&mut sum[k], &mut sum_c[k], ch.sum[k] + ch.sum_c[k]);
            neumaier_add(&mut sq[k], &mut sq_c[k], ch.sq[k] + ch.sq_c[k]);
        }
    }

    let n = samples as f64;
    let mut mean = Vec::with_capacity(width);
    let mut std_dev = Vec::with_capacity(width);
    for k in 0..width {
        let m1 = (sum[k] + sum_c[k]) / n;
        let m2 = (sq[k] + sq_c[k]) / n;
        mean.push(m1);
        std_dev.push((m2 - m1 * m1).max(0.0).sqrt());
    }
    Ok(SampleStats {
        samples,
        mean,
        std_dev,
    })
}

/// A priced contract: model, grid, payoff and the scheme's coefficient
/// tables bound together.
pub struct Pricer<'a> {
    pub model: &'a HjmModel,
    pub grid: &'a Grid,
    pub payoff: &'a Payoff,
    pub rule: QuadratureRule,
    table: CoeffTable,
}

/// Result of a Monte Carlo price run.
#[derive(Debug, Clone)]
pub struct PriceEstimate {
    /// Sample mean of the discretized payoff.
    pub value: f64,
    /// Population standard deviation of the iid samples.
    pub std_dev: f64,
    /// Confidence band `c0 · std_dev / √samples`.
    pub stat_error: f64,
    /// Number of iid samples (antithetic pairs count once).
    pub samples: u64,
    /// Number of simulated paths.
    pub paths: u64,
    /// First path id not consumed by this run, for follow-on runs.
    pub next_id: u64,
}

impl<'a> Pricer<'a> {
    pub fn new(
        model: &'a HjmModel,
        grid: &'a Grid,
        payoff: &'a Payoff,
        scheme: Scheme,
        rule: QuadratureRule,
    ) -> Result<Self> {
        let table = CoeffTable::new(model, grid, scheme)?;
        Ok(Pricer {
            model,
            grid,
            payoff,
            rule,
            table,
        })
    }

    pub fn table(&self) -> &CoeffTable {
        &self.table
    }

    pub fn scheme(&self) -> Scheme {
        self.table.scheme()
    }

    /// Simulate path `id` (optionally the antithetic mirror) and evaluate
    /// the discretized payoff.
    pub fn path_payoff(&self, seed: u64, id: u64, negate: bool) -> Result<f64> {
        let incs = WienerIncrements::sample(self.grid, self.model.factors(), seed, id, negate);
        let path = simulate(self.model, self.grid, self.payoff, &self.table, &incs)?;
        Ok(payoff_value(
            self.payoff,
            self.model,
            self.grid,
            self.rule,
            path.terminal(),
        ))
    }

    /// One iid payoff sample: a single path, or the mean of an antithetic
    /// pair sharing one id.
    fn sample_payoff(&self, mc: &McConfig, id: u64) -> Result<f64> {
        if mc.antithetic {
            let a = self.path_payoff(mc.seed, id, false)?;
            let b = self.path_payoff(mc.seed, id, true)?;
            Ok(0.5 * (a + b))
        } else {
            self.path_payoff(mc.seed, id, false)
        }
    }

    /// Monte Carlo price with the configured number of paths.
    pub fn price(&self, mc: &McConfig) -> Result<PriceEstimate> {
        mc.validate()?;
        let samples = mc.samples();
        let stats = run_samples(samples, 1, mc.id_base, |id| {
            Ok(vec![self.sample_payoff(mc, id)?])
        })?;
        Ok(PriceEstimate {
            value: stats.mean[0],
            std_dev: stats.std_dev[0],
            stat_error: mc.c0 * stats.std_error(0),
            samples,
            paths: mc.paths,
            next_id: mc.id_base + samples,
        })
    }

    /// Repeat the price run with doubled path counts and fresh ids until
    /// the statistical band falls below `tol`; fails with the best run's
    /// numbers if that would take more than `max_paths` paths in one run.
    pub fn adaptive_price(&self, mc: &McConfig, tol: f64, max_paths: u64) -> Result<PriceEstimate> {
        if !(tol > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "tolerance {tol} must be positive"
            )));
        }
        let mut cur = *mc;
        loop {
            let est = self.price(&cur)?;
            if est.stat_error <= tol {
                return Ok(est);
            }
            let next_paths = cur.paths * 2;
            if next_paths > max_paths {
                return Err(Error::TolUnreachable {
                    target: tol,
                    achieved: est.stat_error,
                    m: cur.paths,
                });
            }
            cur.id_base = est.next_id;
            cur.paths = next_paths;
        }
    }
}
