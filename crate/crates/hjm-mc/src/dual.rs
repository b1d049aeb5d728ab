//! Backward dual pass and a posteriori discretization-error estimators.
//!
//! For one simulated path, the first dual `φ_n ∈ R^{L+2}` transports the
//! gradient of the discrete payoff back through the forward recursion: it is
//! the exact pathwise derivative `∂Ḡ/∂ḡ_n` for the frozen Brownian
//! increments. The second dual `φ'_n ∈ R^{(L+2)×(L+2)}` transports the
//! Hessian. Both start from the payoff derivatives at the terminal level
//! and step backward with the transposed Jacobian of the one-step map;
//! the Hessian additionally picks up the step's own curvature.
//!
//! From the duals, two computable error terms accumulate along the sweep:
//! the maturity-discretization term pairs cell jumps of the coefficients
//! with the duals at the same level, and the time-discretization term pairs
//! level-to-level coefficient increments with the duals one level up.
//! Their sample averages estimate the weak error `E[G(g)] − E[Ḡ]` to
//! leading order.
//!
//! The pass is defined for the nodal coefficient scheme; requesting it for
//! the projected scheme is an error rather than a silent approximation.

use crate::error::{Error, Result};
use crate::estimator::{run_samples, McConfig, Pricer};
use crate::payoff::{composite_lambda_derivs, payoff_value};
use crate::rng::WienerIncrements;
use crate::scheme::{advance, simulate, PathState, Scheme};

/// First and second dual at one time level.
pub struct DualState {
    /// Row length `L+2`; cells `0..L`, then the `Y` and `Z` slots.
    pub dim: usize,
    /// First dual, length `L+2`.
    pub phi: Vec<f64>,
    /// Second dual, `(L+2)²` row-major, kept symmetric.
    pub phi2: Vec<f64>,
}

impl DualState {
    fn at(&self, a: usize, b: usize) -> f64 {
        self.phi2[a * self.dim + b]
    }
}

fn ensure_nodal(pricer: &Pricer) -> Result<()> {
    if pricer.scheme() != Scheme::Nodal {
        return Err(Error::SchemeUnsupported(format!(
            "the backward dual pass is defined for the {} scheme, not {}",
            Scheme::Nodal.name(),
            pricer.scheme().name()
        )));
    }
    Ok(())
}

/// Duals at the terminal level, from the payoff derivatives.
pub fn terminal_duals(pricer: &Pricer, terminal_row: &[f64]) -> DualState {
    let l = pricer.grid.n_cells();
    let dim = l + 2;
    let ell_a = pricer.grid.ell_a();
    let payoff = pricer.payoff;

    let lam = composite_lambda_derivs(
        payoff,
        pricer.model,
        pricer.grid,
        pricer.rule,
        &terminal_row[..l],
    );
    let ybar = terminal_row[l];
    let (f, fp, fpp) = (payoff.f(ybar), payoff.f_prime(ybar), payoff.f_second(ybar));
    let (g, gp, gpp) = (
        payoff.g(lam.value),
        payoff.g_prime(lam.value),
        payoff.g_second(lam.value),
    );

    let mut phi = vec![0.0; dim];
    for ell in ell_a..l {
        phi[ell] = f * gp * lam.grad[ell];
    }
    phi[l] = fp * g;
    phi[l + 1] = 1.0;

    let mut phi2 = vec![0.0; dim * dim];
    for ell in ell_a..l {
        for ell2 in ell_a..l {
            phi2[ell * dim + ell2] = if ell == ell2 {
                f * (gpp * lam.grad[ell] * lam.grad[ell] + gp * lam.diag[ell])
            } else {
                f * gpp * lam.grad[ell] * lam.grad[ell2]
            };
        }
        let v = fp * gp * lam.grad[ell];
        phi2[ell * dim + l] = v;
        phi2[l * dim + ell] = v;
    }
    phi2[l * dim + l] = fpp * g;
    // The Z slot enters the payoff linearly: its dual column stays zero.

    DualState { dim, phi, phi2 }
}

/// Scratch buffers reused across the levels of one sweep.
struct Workspace {
    /// `c'_{n,j}`: derivative of the step's cell increment in the short rate.
    cp: Vec<f64>,
    /// `c''_{n,j}`.
    cpp: Vec<f64>,
    /// `H·(J e_{ℓ_n})` — the second dual applied to the short-rate column
    /// of the step Jacobian.
    hv: Vec<f64>,
    /// `H·(J e_L)` — applied to the `Y` column.
    hy: Vec<f64>,
    /// Weight vectors of the maturity-jump quadratic forms.
    va: Vec<f64>,
    vb: Vec<f64>,
}

impl Workspace {
    fn new(l: usize) -> Self {
        Workspace {
            cp: vec![0.0; l],
            cpp: vec![0.0; l],
            hv: vec![0.0; l + 2],
            hy: vec![0.0; l + 2],
            va: vec![0.0; l],
            vb: vec![0.0; l],
        }
    }
}

/// Step the duals from level `n+1` to level `n` in place.
fn backward_step(
    pricer: &Pricer,
    path: &PathState,
    incs: &WienerIncrements,
    n: usize,
    dual: &mut DualState,
    ws: &mut Workspace,
) {
    let grid = pricer.grid;
    let model = pricer.model;
    let payoff = pricer.payoff;
    let table = pricer.table();
    let l = grid.n_cells();
    let dim = dual.dim;
    let dt = grid.dt(n);
    let ell_n = grid.ell_at_step(n);
    let rbar = path.rbar(n);
    let y_n = path.row(n)[l];
    let dw = incs.dw(n);

    // Sensitivities of the one-step map to the short-rate cell.
    let xs1 = model.xi_sq_prime(rbar);
    let xs2 = model.xi_sq_second(rbar);
    let x1 = model.xi_prime(rbar);
    let x2 = model.xi_second(rbar);
    for j in 0..l {
        let lt = table.lambda_tilde_node(n, j);
        let la = table.lambda_node(n, j);
        let noise = la[0] * dw[0] + la[1] * dw[1];
        ws.cp[j] = xs1 * lt * dt + x1 * noise;
        ws.cpp[j] = xs2 * lt * dt + x2 * noise;
    }

    let f = payoff.f(y_n);
    let fp = payoff.f_prime(y_n);
    let fpp = payoff.f_second(y_n);
    let u = payoff.u(rbar);
    let up = payoff.u_prime(rbar);
    let upp = payoff.u_second(rbar);
    let dt_fu1 = dt * f * up;
    let dt_f1u = dt * fp * u;

    // --- second dual: J^T H J plus the step's curvature ------------------
    // hv[a] = Σ_j (δ_{jℓ_n}+c'_j) H[a][j] + Δt H[a][L] + Δt F U' H[a][L+1]
    // hy[a] = H[a][L] + Δt F' U H[a][L+1]
    for a in 0..dim {
        let row = &dual.phi2[a * dim..a * dim + l];
        let mut acc = dual.at(a, ell_n) + dt * dual.at(a, l) + dt_fu1 * dual.at(a, l + 1);
        for j in 0..l {
            acc += ws.cp[j] * row[j];
        }
        ws.hv[a] = acc;
        ws.hy[a] = dual.at(a, l) + dt_f1u * dual.at(a, l + 1);
    }

    let mut s_ll =
        ws.hv[ell_n] + dt * ws.hv[l] + dt_fu1 * ws.hv[l + 1] + dt * f * upp * dual.phi[l + 1];
    for j in 0..l {
        s_ll += ws.cp[j] * ws.hv[j] + ws.cpp[j] * dual.phi[j];
    }
    let s_ly = ws.hv[l] + dt_f1u * ws.hv[l + 1] + dt * fp * up * dual.phi[l + 1];
    let s_lz = ws.hv[l + 1];
    let s_yy = ws.hy[l] + dt_f1u * ws.hy[l + 1] + dt * fpp * u * dual.phi[l + 1];
    let s_yz = ws.hy[l + 1];

    for b in 0..dim {
        dual.phi2[ell_n * dim + b] = ws.hv[b];
        dual.phi2[b * dim + ell_n] = ws.hv[b];
    }
    for b in 0..dim {
        dual.phi2[l * dim + b] = ws.hy[b];
        dual.phi2[b * dim + l] = ws.hy[b];
    }
    dual.phi2[ell_n * dim + ell_n] = s_ll;
    dual.phi2[ell_n * dim + l] = s_ly;
    dual.phi2[l * dim + ell_n] = s_ly;
    dual.phi2[ell_n * dim + l + 1] = s_lz;
    dual.phi2[(l + 1) * dim + ell_n] = s_lz;
    dual.phi2[l * dim + l] = s_yy;
    dual.phi2[l * dim + l + 1] = s_yz;
    dual.phi2[(l + 1) * dim + l] = s_yz;

    // --- first dual: transposed Jacobian --------------------------------
    let mut p_ell = dual.phi[ell_n] + dt * dual.phi[l] + dt_fu1 * dual.phi[l + 1];
    for j in 0..l {
        p_ell += ws.cp[j] * dual.phi[j];
    }
    let p_y = dual.phi[l] + dt_f1u * dual.phi[l + 1];
    dual.phi[ell_n] = p_ell;
    dual.phi[l] = p_y;
}

/// `Σ_{ℓ,ℓ'} v[ℓ] Φ[ℓ][ℓ'] v[ℓ']` over the curve block of the second dual.
fn curve_quad_form(dual: &DualState, l: usize, v: &[f64]) -> f64 {
    let dim = dual.dim;
    let mut acc = 0.0;
    for a in 0..l {
        let row = &dual.phi2[a * dim..a * dim + l];
        let mut inner = 0.0;
        for b in 0..l {
            inner += row[b] * v[b];
        }
        acc += v[a] * inner;
    }
    acc
}

/// Maturity-discretization contribution of level `n`, with duals at `n`.
fn e_tau_level(
    pricer: &Pricer,
    path: &PathState,
    n: usize,
    dual: &DualState,
    ws: &mut Workspace,
) -> f64 {
    let grid = pricer.grid;
    let table = pricer.table();
    let l = grid.n_cells();
    let xi2 = pricer.model.xi_sq(path.rbar(n));

    // Drift jump across each cell, against the first dual. The dual entry
    // already carries the cell width (through the quadrature weights in its
    // terminal data), so the jump enters unweighted: per cell this
    // reproduces the integral of `a(·,τ) − a(·,τ_ℓ)` over the cell.
    let mut first = 0.0;
    for ell in 0..l {
        let jump = table.lambda_tilde_node(n, ell + 1) - table.lambda_tilde_node(n, ell);
        first += 0.5 * xi2 * jump * dual.phi[ell];
    }

    // Diffusion jump, against the curve block of the second dual; the cell
    // widths again live inside the dual entries.
    let mut second = 0.0;
    for j in 0..pricer.model.factors() {
        for ell in 0..l {
            ws.va[ell] = table.lambda_node(n, ell + 1)[j];
            ws.vb[ell] = table.lambda_node(n, ell)[j];
        }
        second += curve_quad_form(dual, l, &ws.va) - curve_quad_form(dual, l, &ws.vb);
    }

    grid.dt(n) * (first + 0.25 * xi2 * second)
}

/// Time-discretization contribution of level `n`, with duals at `n+1`.
fn e_tim_level(
    pricer: &Pricer,
    path: &PathState,
    n: usize,
    dual: &DualState,
    ws: &mut Workspace,
) -> f64 {
    let grid = pricer.grid;
    let model = pricer.model;
    let payoff = pricer.payoff;
    let table = pricer.table();
    let l = grid.n_cells();
    let r0 = path.rbar(n);
    let r1 = path.rbar(n + 1);
    let xi2_0 = model.xi_sq(r0);
    let xi2_1 = model.xi_sq(r1);

    // Coupon increment against the Z dual (identically one).
    let coupon =
        payoff.f(path.row(n + 1)[l]) * payoff.u(r1) - payoff.f(path.row(n)[l]) * payoff.u(r0);
    let mut acc = coupon * dual.phi[l + 1];

    // Short-rate increment against the Y dual.
    acc += (r1 - r0) * dual.phi[l];

    // Drift increment per cell against the first dual.
    for ell in 0..l {
        let da =
            xi2_1 * table.lambda_tilde_node(n + 1, ell) - xi2_0 * table.lambda_tilde_node(n, ell);
        acc += da * dual.phi[ell];
    }

    // Diffusion increment against the curve block of the second dual.
    let mut quad = 0.0;
    for j in 0..model.factors() {
        for ell in 0..l {
            ws.va[ell] = table.lambda_node(n + 1, ell)[j];
            ws.vb[ell] = table.lambda_node(n, ell)[j];
        }
        quad += xi2_1 * curve_quad_form(dual, l, &ws.va) - xi2_0 * curve_quad_form(dual, l, &ws.vb);
    }
    acc += 0.5 * quad;

    0.5 * grid.dt(n) * acc
}

/// Pathwise error terms from one backward sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathErrorTerms {
    pub e_tau: f64,
    pub e_tim: f64,
}

/// Simulate path `id` (optionally mirrored) and run the backward sweep,
/// accumulating both error terms.
pub fn path_error_terms(
    pricer: &Pricer,
    seed: u64,
    id: u64,
    negate: bool,
) -> Result<PathErrorTerms> {
    ensure_nodal(pricer)?;
    let grid = pricer.grid;
    let incs = WienerIncrements::sample(grid, pricer.model.factors(), seed, id, negate);
    let path = simulate(pricer.model, grid, pricer.payoff, pricer.table(), &incs)?;

    let n = grid.n_steps();
    let mut ws = Workspace::new(grid.n_cells());
    let mut dual = terminal_duals(pricer, path.terminal());

    let mut e_tau = 0.0;
    let mut e_tim = e_tim_level(pricer, &path, n - 1, &dual, &mut ws);
    for m in (0..n).rev() {
        backward_step(pricer, &path, &incs, m, &mut dual, &mut ws);
        if m >= 1 {
            e_tim += e_tim_level(pricer, &path, m - 1, &dual, &mut ws);
        }
        e_tau += e_tau_level(pricer, &path, m, &dual, &mut ws);
    }
    Ok(PathErrorTerms { e_tau, e_tim })
}

/// Monte Carlo estimate of the two discretization-error terms.
#[derive(Debug, Clone)]
pub struct ErrorReport {
    /// Sample mean of the maturity-discretization term.
    pub e_tau: f64,
    /// Sample mean of the time-discretization term.
    pub e_tim: f64,
    /// Statistical band `c0·std/√samples` of `e_tau`.
    pub e_tau_stat: f64,
    /// Statistical band of `e_tim`.
    pub e_tim_stat: f64,
    pub samples: u64,
    pub paths: u64,
}

impl ErrorReport {
    /// Combined discretization-error estimate.
    pub fn total(&self) -> f64 {
        self.e_tau + self.e_tim
    }
}

/// Run the backward sweep over a Monte Carlo batch of paths.
pub fn error_estimate(pricer: &Pricer, mc: &McConfig) -> Result<ErrorReport> {
    ensure_nodal(pricer)?;
    let samples = mc.samples();
    if samples == 0 {
        return Err(Error::InvalidConfig("path count must be positive".into()));
    }
    if mc.antithetic && mc.paths % 2 != 0 {
        return Err(Error::InvalidConfig(
            "antithetic sampling pairs paths; the path count must be even".into(),
        ));
    }
    let stats = run_samples(samples, 2, mc.id_base, |id| {
        let terms = if mc.antithetic {
            let a = path_error_terms(pricer, mc.seed, id, false)?;
            let b = path_error_terms(pricer, mc.seed, id, true)?;
            PathErrorTerms {
                e_tau: 0.5 * (a.e_tau + b.e_tau),
                e_tim: 0.5 * (a.e_tim + b.e_tim),
            }
        } else {
            path_error_terms(pricer, mc.seed, id, false)?
        };
        Ok(vec![terms.e_tau, terms.e_tim])
    })?;
    Ok(ErrorReport {
        e_tau: stats.mean[0],
        e_tim: stats.mean[1],
        e_tau_stat: mc.c0 * stats.std_error(0),
        e_tim_stat: mc.c0 * stats.std_error(1),
        samples,
        paths: mc.paths,
    })
}

/// Ratio of the estimated to the realized discretization error.
///
/// `a` is the signed ratio (estimate over `E_c := exact − sample value`);
/// `b` is the statistical half-width normalized by `|E_c|`. The interval
/// `[a−b, a+b]` should cover one when the estimate is sharp and the
/// statistical errors are controlled.
#[derive(Debug, Clone, Copy)]
pub struct RatioInterval {
    pub a: f64,
    pub b: f64,
    /// Realized computational error `exact − sample value`.
    pub e_c: f64,
}

impl RatioInterval {
    pub fn lo(&self) -> f64 {
        self.a - self.b
    }

    pub fn hi(&self) -> f64 {
        self.a + self.b
    }
}

pub fn ratio_interval(
    exact: f64,
    value: f64,
    price_stat: f64,
    report: &ErrorReport,
) -> RatioInterval {
    let e_c = exact - value;
    RatioInterval {
        a: report.total() / e_c,
        b: (price_stat + report.e_tau_stat + report.e_tim_stat) / e_c.abs(),
        e_c,
    }
}

// --- finite-difference validation helpers ---------------------------------

/// `∂Ḡ/∂ḡ_n[i]` by a centered difference: perturb one state entry at level
/// `n` and replay the forward recursion with the same increments.
pub fn fd_gradient_entry(
    pricer: &Pricer,
    path: &PathState,
    incs: &WienerIncrements,
    n: usize,
    i: usize,
) -> Result<f64> {
    let base = path.row(n);
    let h = 1e-5 * base[i].abs().max(1.0);
    let payoff_shifted = |delta: f64| -> Result<f64> {
        let mut row = base.to_vec();
        row[i] += delta;
        let term = advance(
            pricer.model,
            pricer.grid,
            pricer.payoff,
            pricer.table(),
            incs,
            n,
            row,
        )?;
        Ok(payoff_value(
            pricer.payoff,
            pricer.model,
            pricer.grid,
            pricer.rule,
            &term,
        ))
    };
    Ok((payoff_shifted(h)? - payoff_shifted(-h)?) / (2.0 * h))
}

/// `∂²Ḡ/∂ḡ_n[i]∂ḡ_n[j]` by second differences of the replayed payoff.
pub fn fd_second_entry(
    pricer: &Pricer,
    path: &PathState,
    incs: &WienerIncrements,
    n: usize,
    i: usize,
    j: usize,
) -> Result<f64> {
    let base = path.row(n);
    let payoff_shifted = |di: f64, dj: f64| -> Result<f64> {
        let mut row = base.to_vec();
        row[i] += di;
        row[j] += dj;
        let term = advance(
            pricer.model,
            pricer.grid,
            pricer.payoff,
            pricer.table(),
            incs,
            n,
            row,
        )?;
        Ok(payoff_value(
            pricer.payoff,
            pricer.model,
            pricer.grid,
            pricer.rule,
            &term,
        ))
    };
    if i == j {
        let h = 5e-4 * base[i].abs().max(1.0);
        Ok(
            (payoff_shifted(h, 0.0)? - 2.0 * payoff_shifted(0.0, 0.0)? + payoff_shifted(-h, 0.0)?)
                / (h * h),
        )
    } else {
        let hi = 5e-4 * base[i].abs().max(1.0);
        let hj = 5e-4 * base[j].abs().max(1.0);
        Ok(
            (payoff_shifted(hi, hj)? - payoff_shifted(hi, -hj)? - payoff_shifted(-hi, hj)?
                + payoff_shifted(-hi, -hj)?)
                / (4.0 * hi * hj),
        )
    }
}

/// Full dual trajectory, one state per level, newest last. Meant for
/// validation; the production sweep streams instead of storing.
pub struct DualTrajectory {
    /// `phi[n]` = first dual at level `n`, `n = 0..=N`.
    pub phi: Vec<Vec<f64>>,
    /// `phi2[n]` = second dual at level `n`.
    pub phi2: Vec<Vec<f64>>,
}

pub fn dual_trajectory(
    pricer: &Pricer,
    path: &PathState,
    incs: &WienerIncrements,
) -> Result<DualTrajectory> {
    ensure_nodal(pricer)?;
    let n = pricer.grid.n_steps();
    let mut ws = Workspace::new(pricer.grid.n_cells());
    let mut dual = terminal_duals(pricer, path.terminal());
    let mut phi = vec![Vec::new(); n + 1];
    let mut phi2 = vec![Vec::new(); n + 1];
    phi[n] = dual.phi.clone();
    phi2[n] = dual.phi2.clone();
    for m in (0..n).rev() {
        backward_step(pricer, path, incs, m, &mut dual, &mut ws);
        phi[m] = dual.phi.clone();
        phi2[m] = dual.phi2.clone();
    }
    Ok(DualTrajectory { phi, phi2 })
}
