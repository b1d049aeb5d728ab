//! Forward simulation of the discretized curve.
//!
//! The state of one path at time level `n` is a row of `L+2` values:
//! entries `0..L` hold the deviation of the forward curve from `f₀`, one
//! value per maturity cell (constant across the cell); entry `L` is the
//! running short-rate integral `Y`; entry `L+1` is the accumulated coupon
//! `Z`. The explicit Euler step reads the short rate from the cell
//! containing the current time and advances every cell with the same
//! scalar volatility factor.
//!
//! Two coefficient treatments are supported: `Nodal` evaluates `λ` and `λ̃`
//! at the left time/maturity node of each cell, `Projected` replaces them
//! by their per-cell maturity averages. The backward dual pass is defined
//! for the nodal variant only.

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::model::{FactorRow, HjmModel};
use crate::payoff::Payoff;
use crate::rng::WienerIncrements;

/// Coefficient treatment of the explicit Euler scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// `λ`, `λ̃` evaluated at the left node `(t_n, τ_ℓ)` of each cell.
    Nodal,
    /// `λ`, `λ̃` replaced by their maturity-cell averages at time `t_n`.
    Projected,
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Nodal => "nodal",
            Scheme::Projected => "projected",
        }
    }
}

/// Precomputed model coefficients on a grid.
///
/// Nodal tables cover every node pair `(t_n, τ_ℓ)`, `n = 0..=N`,
/// `ℓ = 0..=L`; the error estimators read them beyond the cells the forward
/// step touches. Projected tables are built only for the projected scheme
/// and cover the `N × L` step/cell pairs.
pub struct CoeffTable {
    scheme: Scheme,
    n_steps: usize,
    n_cells: usize,
    /// `λ(t_n, τ_ℓ)` at nodes, row-major `(N+1) × (L+1)`.
    lam: Vec<FactorRow>,
    /// `λ̃(t_n, τ_ℓ)` at nodes, row-major `(N+1) × (L+1)`.
    lam_tilde: Vec<f64>,
    /// Cell averages of `λ(t_n, ·)`, row-major `N × L` (projected only).
    plam: Vec<FactorRow>,
    /// Cell averages of `λ̃(t_n, ·)`, row-major `N × L` (projected only).
    plam_tilde: Vec<f64>,
    /// `f₀(t_n)` at time nodes.
    f0_t: Vec<f64>,
}

impl CoeffTable {
    pub fn new(model: &HjmModel, grid: &Grid, scheme: Scheme) -> Result<Self> {
        let n = grid.n_steps();
        let l = grid.n_cells();
        let t = grid.t_nodes();
        let tau = grid.tau_nodes();

        let mut lam = Vec::with_capacity((n + 1) * (l + 1));
        let mut lam_tilde = Vec::with_capacity((n + 1) * (l + 1));
        for &tn in t {
            for &tl in tau {
                lam.push(model.lambda(tn, tl));
                lam_tilde.push(model.lambda_tilde(tn, tl));
            }
        }

        let (mut plam, mut plam_tilde) = (Vec::new(), Vec::new());
        if scheme == Scheme::Projected {
            plam.reserve(n * l);
            plam_tilde.reserve(n * l);
            for &tn in t.iter().take(n) {
                let row_t = grid.l2_project(|z| model.lambda_tilde(tn, z));
                let row_0 = grid.l2_project(|z| model.lambda(tn, z)[0]);
                let row_1 = if model.factors() > 1 {
                    grid.l2_project(|z| model.lambda(tn, z)[1])
                } else {
                    vec![0.0; l]
                };
                for ell in 0..l {
                    plam.push([row_0[ell], row_1[ell]]);
                    plam_tilde.push(row_t[ell]);
                }
            }
        }

        let f0_t = t.iter().map(|&tn| model.f0(tn)).collect();
        Ok(CoeffTable {
            scheme,
            n_steps: n,
            n_cells: l,
            lam,
            lam_tilde,
            plam,
            plam_tilde,
            f0_t,
        })
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    /// `λ(t_n, τ_ℓ)` at node indices `n ∈ 0..=N`, `ℓ ∈ 0..=L`.
    pub fn lambda_node(&self, n: usize, ell: usize) -> FactorRow {
        self.lam[n * (self.n_cells + 1) + ell]
    }

    /// `λ̃(t_n, τ_ℓ)` at node indices.
    pub fn lambda_tilde_node(&self, n: usize, ell: usize) -> f64 {
        self.lam_tilde[n * (self.n_cells + 1) + ell]
    }

    /// `f₀(t_n)`.
    pub fn f0_at_step(&self, n: usize) -> f64 {
        self.f0_t[n]
    }

    /// Coefficient rows used by the forward step at time level `n`, one
    /// entry per maturity cell: `(λ̃ row, λ row)`.
    pub fn step_rows(&self, n: usize) -> (&[f64], &[FactorRow]) {
        let l = self.n_cells;
        match self.scheme {
            Scheme::Nodal => {
                let start = n * (l + 1);
                (
                    &self.lam_tilde[start..start + l],
                    &self.lam[start..start + l],
                )
            }
            Scheme::Projected => {
                let start = n * l;
                (
                    &self.plam_tilde[start..start + l],
                    &self.plam[start..start + l],
                )
            }
        }
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }
}

/// Full trajectory of one simulated path.
#[derive(Debug)]
pub struct PathState {
    n_steps: usize,
    row_len: usize,
    /// `(N+1)` state rows of length `L+2`, flattened.
    states: Vec<f64>,
    /// Short rate `r̄_n = ḡ_{n,ℓ_n} + f₀(t_n)` at every time level.
    rbar: Vec<f64>,
}

impl PathState {
    /// State row `[cells 0..L, Y, Z]` at time level `n`.
    pub fn row(&self, n: usize) -> &[f64] {
        &self.states[n * self.row_len..(n + 1) * self.row_len]
    }

    pub fn terminal(&self) -> &[f64] {
        self.row(self.n_steps)
    }

    pub fn rbar(&self, n: usize) -> f64 {
        self.rbar[n]
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }
}

/// Advance one state row from time level `n` to `n+1` in place.
///
/// `row` is `[cells 0..L, Y, Z]`; returns the short rate `r̄_n` used.
#[allow(clippy::too_many_arguments)]
fn step_row(
    model: &HjmModel,
    grid: &Grid,
    payoff: &Payoff,
    table: &CoeffTable,
    n: usize,
    row: &mut [f64],
    dw: FactorRow,
) -> Result<f64> {
    let l = grid.n_cells();
    let dt = grid.dt(n);
    let ell_n = grid.ell_at_step(n);
    let rbar = row[ell_n] + table.f0_at_step(n);
    let xi = model.xi(rbar);
    let dt_xi2 = dt * model.xi_sq(rbar);
    let (lamt, lam) = table.step_rows(n);

    let mut sum = 0.0;
    for ell in 0..l {
        let v = row[ell] + dt_xi2 * lamt[ell] + xi * (lam[ell][0] * dw[0] + lam[ell][1] * dw[1]);
        row[ell] = v;
        sum += v;
    }
    // Coupon first: it reads the Y entry at level n.
    if payoff.has_coupon() {
        row[l + 1] += dt * payoff.f(row[l]) * payoff.u(rbar);
    }
    row[l] += dt * rbar;
    sum += row[l] + row[l + 1];
    if !sum.is_finite() {
        return Err(Error::NonFiniteState {
            step: n,
            detail: format!("short rate {rbar}, state row sum {sum}"),
        });
    }
    Ok(rbar)
}

/// Simulate one path from zero initial deviation, recording every level.
pub fn simulate(
    model: &HjmModel,
    grid: &Grid,
    payoff: &Payoff,
    table: &CoeffTable,
    incs: &WienerIncrements,
) -> Result<PathState> {
    if incs.n_steps() != grid.n_steps() {
        return Err(Error::IncrementMismatch(format!(
            "{} increments for {} time steps",
            incs.n_steps(),
            grid.n_steps()
        )));
    }
    let n = grid.n_steps();
    let l = grid.n_cells();
    let row_len = l + 2;
    let mut states = vec![0.0; (n + 1) * row_len];
    let mut rbar = Vec::with_capacity(n + 1);

    for step in 0..n {
        let (done, rest) = states.split_at_mut((step + 1) * row_len);
        let prev = &done[step * row_len..];
        let next = &mut rest[..row_len];
        next.copy_from_slice(prev);
        rbar.push(step_row(
            model,
            grid,
            payoff,
            table,
            step,
            next,
            incs.dw(step),
        )?);
    }
    // Terminal short rate: read the cell containing t_max.
    let last = &states[n * row_len..];
    rbar.push(last[grid.ell_index(grid.t_max())] + table.f0_at_step(n));

    Ok(PathState {
        n_steps: n,
        row_len,
        states,
        rbar,
    })
}

/// Advance a state row from time level `from` to the terminal level with
/// the given increments, returning the terminal row. Used by the
/// finite-difference checks of the dual pass.
pub fn advance(
    model: &HjmModel,
    grid: &Grid,
    payoff: &Payoff,
    table: &CoeffTable,
    incs: &WienerIncrements,
    from: usize,
    mut row: Vec<f64>,
) -> Result<Vec<f64>> {
    debug_assert_eq!(row.len(), grid.n_cells() + 2);
    for n in from..grid.n_steps() {
        step_row(model, grid, payoff, table, n, &mut row, incs.dw(n))?;
    }
    Ok(row)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ho_lee_setup() -> (HjmModel, Grid, Payoff, CoeffTable) {
        let model = HjmModel::ho_lee_benchmark();
        let grid = Grid::diagonal_nested(5, 3, 1.0, 2.0, 1.0).unwrap();
        let table = CoeffTable::new(&model, &grid, Scheme::Nodal).unwrap();
        (model, grid, Payoff::Linear, table)
    }

    #[test]
    fn nodal_recursion_matches_hand_rolled_closed_form() {
        // With λ ≡ 1 and constant ξ = σ the curve update decouples:
        // ḡ_{n,ℓ} = σ² Σ_{m<n} Δt_m (τ_ℓ − t_m) + σ W_{t_n}.
        let (model, grid, payoff, table) = ho_lee_setup();
        let incs = WienerIncrements::sample(&grid, 1, 7, 3, false);
        let path = simulate(&model, &grid, &payoff, &table, &incs).unwrap();
        let sigma = 0.01;
        for n in 0..=grid.n_steps() {
            let w: f64 = (0..n).map(|m| incs.dw(m)[0]).sum();
            for ell in 0..grid.n_cells() {
                let drift: f64 = (0..n)
                    .map(|m| grid.dt(m) * (grid.tau_nodes()[ell] - grid.t_nodes()[m]))
                    .sum();
                let want = sigma * sigma * drift + sigma * w;
                let got = path.row(n)[ell];
                assert!(
                    (got - want).abs() < 1e-15,
                    "level {n} cell {ell}: {got} vs {want}"
                );
            }
        }
    }

    #[test]
    fn short_rate_and_integral_rows_are_consistent() {
        let (model, grid, payoff, table) = ho_lee_setup();
        let incs = WienerIncrements::sample(&grid, 1, 11, 0, false);
        let path = simulate(&model, &grid, &payoff, &table, &incs).unwrap();
        let l = grid.n_cells();
        for n in 0..=grid.n_steps() {
            let ell_n = if n < grid.n_steps() {
                grid.ell_at_step(n)
            } else {
                grid.ell_index(grid.t_max())
            };
            let want = path.row(n)[ell_n] + model.f0(grid.t_nodes()[n]);
            assert!((path.rbar(n) - want).abs() < 1e-15, "level {n}");
        }
        // Y telescopes the left-endpoint rectangle rule.
        let y: f64 = (0..grid.n_steps()).map(|m| grid.dt(m) * path.rbar(m)).sum();
        assert!((path.terminal()[l] - y).abs() < 1e-15);
        // No coupon: Z stays zero.
        assert_eq!(path.terminal()[l + 1], 0.0);
    }

    #[test]
    fn coupon_row_accumulates_discounted_positive_part() {
        let model = HjmModel::cir_benchmark();
        let grid = Grid::diagonal_nested(6, 3, 5.0, 8.0, 5.0).unwrap();
        let payoff = Payoff::cap(0.05).unwrap();
        let table = CoeffTable::new(&model, &grid, Scheme::Nodal).unwrap();
        let incs = WienerIncrements::sample(&grid, 1, 3, 9, false);
        let path = simulate(&model, &grid, &payoff, &table, &incs).unwrap();
        let l = grid.n_cells();
        let mut z = 0.0;
        for n in 0..grid.n_steps() {
            z += grid.dt(n) * (-path.row(n)[l]).exp() * (path.rbar(n) - 0.05).max(0.0);
        }
        assert!((path.terminal()[l + 1] - z).abs() < 1e-15);
        assert!(z > 0.0, "benchmark short rate starts above the cap");
    }

    #[test]
    fn projected_coefficients_are_cell_averages() {
        let model = HjmModel::ho_lee_benchmark();
        let grid = Grid::diagonal_nested(4, 2, 1.0, 2.0, 1.0).unwrap();
        let table = CoeffTable::new(&model, &grid, Scheme::Projected).unwrap();
        // λ ≡ 1 projects to itself; λ̃ = τ − t is linear, so its cell
        // average is the midpoint value.
        for n in 0..grid.n_steps() {
            let (lamt, lam) = table.step_rows(n);
            for ell in 0..grid.n_cells() {
                let mid =
                    0.5 * (grid.tau_nodes()[ell] + grid.tau_nodes()[ell + 1]) - grid.t_nodes()[n];
                assert!((lamt[ell] - mid).abs() < 1e-12, "step {n} cell {ell}");
                assert!((lam[ell][0] - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn projected_and_nodal_differ_in_drift_only_for_ho_lee() {
        let model = HjmModel::ho_lee_benchmark();
        let grid = Grid::diagonal_nested(5, 5, 1.0, 2.0, 1.0).unwrap();
        let nodal = CoeffTable::new(&model, &grid, Scheme::Nodal).unwrap();
        let proj = CoeffTable::new(&model, &grid, Scheme::Projected).unwrap();
        let incs = WienerIncrements::sample(&grid, 1, 21, 4, false);
        let a = simulate(&model, &grid, &Payoff::Linear, &nodal, &incs).unwrap();
        let b = simulate(&model, &grid, &Payoff::Linear, &proj, &incs).unwrap();
        let l = grid.n_cells();
        // Same noise, slightly different deterministic drift.
        let gap = (a.terminal()[0] - b.terminal()[0]).abs();
        assert!(gap > 0.0 && gap < 1e-4);
        // The short-rate integral sees the same O(Δt·Δτ) perturbation.
        assert!((a.terminal()[l] - b.terminal()[l]).abs() < 1e-4);
    }

    #[test]
    fn mismatched_increments_are_rejected() {
        let (model, grid, payoff, table) = ho_lee_setup();
        let other = Grid::diagonal_nested(7, 3, 1.0, 2.0, 1.0).unwrap();
        let incs = WienerIncrements::sample(&other, 1, 1, 0, false);
        let err = simulate(&model, &grid, &payoff, &table, &incs).unwrap_err();
        assert!(matches!(err, Error::IncrementMismatch(_)));
    }

    #[test]
    fn runaway_state_is_reported_not_propagated() {
        let model = HjmModel::cir_benchmark();
        let grid = Grid::diagonal_nested(5, 3, 5.0, 8.0, 5.0).unwrap();
        let payoff = Payoff::Linear;
        let table = CoeffTable::new(&model, &grid, Scheme::Nodal).unwrap();
        let incs = WienerIncrements::sample(&grid, 1, 1, 0, false);
        let mut row = vec![f64::MAX; grid.n_cells() + 2];
        row[grid.n_cells()] = 0.0;
        row[grid.n_cells() + 1] = 0.0;
        let err = advance(&model, &grid, &payoff, &table, &incs, 0, row).unwrap_err();
        assert!(matches!(err, Error::NonFiniteState { .. }), "{err:?}");
    }
}
