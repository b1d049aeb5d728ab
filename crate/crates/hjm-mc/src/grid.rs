//! Nested time/maturity partitions.
//!
//! The engine works on a pair of partitions: `0 = t_0 < … < t_N = t_max` for
//! evolution time and `0 = τ_0 < … < τ_L = τ_max` for bond maturity. Three
//! structural conditions tie them together:
//!
//! * every maturity node at or below `t_max` is also a time node,
//! * `t_max` itself is a maturity node (index `ell_star`),
//! * the payoff cutoff `tau_a` is a maturity node (index `ell_a`).
//!
//! Under these conditions the "diagonal cell" index `ℓ_n = max{ℓ : τ_ℓ ≤ t_n}`
//! is well defined, which is what the forward recursion uses to read the
//! short rate off the piecewise-constant curve.

use crate::error::{Error, Result};
use crate::quad::gauss5;

/// Absolute/relative tolerance used when matching nodes across partitions.
pub const NESTING_TOL: f64 = 1e-12;

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= NESTING_TOL * a.abs().max(b.abs()).max(1.0)
}

/// A validated pair of nested time/maturity partitions.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    t: Vec<f64>,
    tau: Vec<f64>,
    ell_star: usize,
    ell_a: usize,
    /// `ℓ_n` for every time node, precomputed once at construction.
    ell_at_step: Vec<usize>,
}

impl Grid {
    /// Uniform partitions: `N` time cells on `[0, t_max]`, `L` maturity cells
    /// on `[0, tau_max]`. The spacings must interlock: `Δτ` a multiple of
    /// `Δt`, and both `t_max` and `tau_a` multiples of `Δτ`. Maturity nodes
    /// below `t_max` are snapped bit-exactly onto their matching time nodes.
    pub fn uniform(n: usize, l: usize, t_max: f64, tau_max: f64, tau_a: f64) -> Result<Grid> {
        if n == 0 || l == 0 {
            return Err(Error::InvalidGrid(
                "need at least one cell per partition".into(),
            ));
        }
        let t: Vec<f64> = (0..=n)
            .map(|i| {
                if i == n {
                    t_max
                } else {
                    i as f64 * t_max / n as f64
                }
            })
            .collect();
        let tau: Vec<f64> = (0..=l)
            .map(|i| {
                if i == l {
                    tau_max
                } else {
                    i as f64 * tau_max / l as f64
                }
            })
            .collect();
        Grid::from_nodes(t, tau, tau_a)
    }

    /// Benchmark geometry used for the refinement tables: the maturity nodes
    /// on `[0, t_max]` are exactly the time nodes (so `ℓ_n = n` and the
    /// short-rate read-off tracks the diagonal with no lag), plus `l_tail`
    /// uniform cells on `[t_max, tau_max]`. Requires `tau_a = t_max`, which
    /// all benchmark contracts satisfy. Total maturity cells: `n + l_tail`.
    pub fn diagonal_nested(
        n: usize,
        l_tail: usize,
        t_max: f64,
        tau_max: f64,
        tau_a: f64,
    ) -> Result<Grid> {
        if !close(tau_a, t_max) {
            return Err(Error::InvalidGrid(format!(
                "diagonal-nested geometry requires tau_a = t_max, got tau_a = {tau_a}, t_max = {t_max}"
            )));
        }
        if n == 0 || l_tail == 0 {
            return Err(Error::InvalidGrid(
                "need at least one cell per partition".into(),
            ));
        }
        let t: Vec<f64> = (0..=n)
            .map(|i| {
                if i == n {
                    t_max
                } else {
                    i as f64 * t_max / n as f64
                }
            })
            .collect();
        let mut tau = t.clone();
        for i in 1..=l_tail {
            let node = if i == l_tail {
                tau_max
            } else {
                t_max + i as f64 * (tau_max - t_max) / l_tail as f64
            };
            tau.push(node);
        }
        Grid::from_nodes(t, tau, tau_a)
    }

    /// Explicit-nodes constructor for non-uniform partitions. Validates the
    /// nesting conditions and snaps maturity nodes below `t_max` onto their
    /// matching time nodes (they must already agree to within [`NESTING_TOL`]).
    pub fn from_nodes(mut t: Vec<f64>, mut tau: Vec<f64>, tau_a: f64) -> Result<Grid> {
        if t.len() < 2 || tau.len() < 2 {
            return Err(Error::InvalidGrid(
                "need at least one cell per partition".into(),
            ));
        }
        for (name, nodes) in [("time", &mut t), ("maturity", &mut tau)] {
            if nodes[0].abs() > NESTING_TOL {
                return Err(Error::InvalidGrid(format!(
                    "{name} partition must start at 0"
                )));
            }
            nodes[0] = 0.0;
            if nodes.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::InvalidGrid(format!(
                    "{name} partition must be strictly increasing"
                )));
            }
            if nodes.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidGrid(format!(
                    "{name} partition has non-finite node"
                )));
            }
        }
        let t_max = *t.last().unwrap();
        let tau_max = *tau.last().unwrap();
        if !(t_max > 0.0 && t_max <= tau_a && tau_a < tau_max) {
            return Err(Error::InvalidGrid(format!(
                "need 0 < t_max <= tau_a < tau_max, got t_max = {t_max}, tau_a = {tau_a}, tau_max = {tau_max}"
            )));
        }

        // Condition 1: every maturity node at or below t_max is a time node.
        // Snap matched nodes so later comparisons are bit-exact.
        let mut ell_star = None;
        for (ell, node) in tau.iter_mut().enumerate() {
            if *node > t_max && !close(*node, t_max) {
                break;
            }
            match t.iter().find(|tn| close(**tn, *node)) {
                Some(tn) => *node = *tn,
                None => {
                    return Err(Error::NestingViolation(format!(
                        "maturity node {node} (index {ell}) is below t_max but is not a time node"
                    )))
                }
            }
            if *node == t_max {
                ell_star = Some(ell);
            }
        }
        // Condition 2: t_max itself is a maturity node.
        let ell_star = ell_star.ok_or_else(|| {
            Error::NestingViolation(format!("t_max = {t_max} is not a maturity node"))
        })?;
        // Condition 3: tau_a is a maturity node.
        let ell_a = tau.iter().position(|x| close(*x, tau_a)).ok_or_else(|| {
            Error::NestingViolation(format!("tau_a = {tau_a} is not a maturity node"))
        })?;
        if ell_a < ell_star {
            return Err(Error::InvalidGrid("tau_a must not be below t_max".into()));
        }
        if ell_a == tau.len() - 1 {
            return Err(Error::InvalidGrid(
                "tau_a must leave at least one payoff cell".into(),
            ));
        }

        let ell_at_step = t
            .iter()
            .map(|&tn| {
                // Largest ℓ with τ_ℓ ≤ t_n. Matched nodes are bit-equal after
                // snapping, so a plain partition_point is exact.
                tau.partition_point(|&x| x <= tn) - 1
            })
            .collect();

        Ok(Grid {
            t,
            tau,
            ell_star,
            ell_a,
            ell_at_step,
        })
    }

    /// Number of time cells `N`.
    pub fn n_steps(&self) -> usize {
        self.t.len() - 1
    }

    /// Number of maturity cells `L`.
    pub fn n_cells(&self) -> usize {
        self.tau.len() - 1
    }

    /// Time nodes `t_0 … t_N`.
    pub fn t_nodes(&self) -> &[f64] {
        &self.t
    }

    /// Maturity nodes `τ_0 … τ_L`.
    pub fn tau_nodes(&self) -> &[f64] {
        &self.tau
    }

    pub fn t_max(&self) -> f64 {
        *self.t.last().unwrap()
    }

    pub fn tau_max(&self) -> f64 {
        *self.tau.last().unwrap()
    }

    /// Index of the maturity node equal to `t_max`.
    pub fn ell_star(&self) -> usize {
        self.ell_star
    }

    /// Index of the maturity node equal to the payoff cutoff `tau_a`.
    pub fn ell_a(&self) -> usize {
        self.ell_a
    }

    pub fn tau_a(&self) -> f64 {
        self.tau[self.ell_a]
    }

    /// Time step `Δt_n = t_{n+1} − t_n`.
    pub fn dt(&self, n: usize) -> f64 {
        self.t[n + 1] - self.t[n]
    }

    /// Maturity cell width `Δτ_ℓ = τ_{ℓ+1} − τ_ℓ`.
    pub fn dtau(&self, ell: usize) -> f64 {
        self.tau[ell + 1] - self.tau[ell]
    }

    /// `ℓ(t) = max{ℓ : τ_ℓ ≤ t}` for an arbitrary `t ∈ [0, t_max]`.
    pub fn ell_index(&self, t: f64) -> usize {
        assert!(
            t >= -NESTING_TOL && t <= self.t_max() * (1.0 + NESTING_TOL) + NESTING_TOL,
            "ell_index argument {t} outside [0, t_max]"
        );
        let tol = NESTING_TOL * t.abs().max(1.0);
        self.tau.partition_point(|&x| x <= t + tol) - 1
    }

    /// Diagonal cell index `ℓ_n` for time node `n` (precomputed).
    pub fn ell_at_step(&self, n: usize) -> usize {
        self.ell_at_step[n]
    }

    /// L²-projection of a function onto the piecewise constants of the
    /// maturity partition: per-cell averages, one value per cell, computed
    /// with a 5-point Gauss–Legendre rule (exact through degree 9).
    pub fn l2_project<F: Fn(f64) -> f64>(&self, f: F) -> Vec<f64> {
        (0..self.n_cells())
            .map(|ell| gauss5(&f, self.tau[ell], self.tau[ell + 1]) / self.dtau(ell))
            .collect()
    }
}
