//! The operations behind the subcommands: single-grid pricing with the
//! error decomposition, refinement studies, strong-convergence sweeps of
//! the forward scheme itself, and closed-form cross-checks.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Context, Result};

use hjm_mc::oracle::{self, exact_forward, ExactDriver};
use hjm_mc::rng::WienerIncrements;
use hjm_mc::scheme::{simulate, CoeffTable};
use hjm_mc::{
    error_estimate, ratio_interval, run_samples, Grid, HjmModel, McConfig, Payoff, Pricer,
    QuadratureRule, Scheme,
};

use crate::config::{parse_rule, parse_scheme, RunConfig, RunSection};
use crate::table::TableRow;

/// Path ids for the backward error pass start here, far above any price
/// run, so the two estimates never share a sample stream.
pub const DUAL_ID_BASE: u64 = 1 << 32;

/// Budget for the doubling loop behind `tol_stat`.
pub const MAX_ADAPTIVE_PATHS: u64 = 1 << 23;

/// Price one grid and fill a table row: the estimate, the backward error
/// terms when the scheme has them, and the reference columns when a closed
/// form (or an override) provides the exact value.
pub fn price_level(
    model: &HjmModel,
    payoff: &Payoff,
    grid: &Grid,
    scheme: Scheme,
    rule: QuadratureRule,
    run: &RunSection,
    seed: u64,
) -> Result<TableRow> {
    let pricer = Pricer::new(model, grid, payoff, scheme, rule)?;
    let mc = McConfig {
        paths: run.m,
        seed,
        antithetic: run.antithetic,
        c0: run.c0,
        id_base: 0,
    };
    let est = match run.tol_stat {
        Some(tol) => pricer.adaptive_price(&mc, tol, MAX_ADAPTIVE_PATHS)?,
        None => pricer.price(&mc)?,
    };

    // only the nodal scheme has a backward dual pass; other rows leave the
    // error columns blank rather than failing the whole run
    let report = if scheme == Scheme::Nodal && run.m_dual() > 0 {
        let mc_dual = McConfig {
            paths: run.m_dual(),
            id_base: DUAL_ID_BASE,
            ..mc
        };
        Some(error_estimate(&pricer, &mc_dual)?)
    } else {
        None
    };

    let exact = run.exact_value.or_else(|| {
        oracle::exact_functional(model, payoff, grid.t_max(), grid.tau_a(), grid.tau_max()).ok()
    });

    let mut row = TableRow {
        n: grid.n_steps(),
        l: grid.n_cells(),
        value: est.value,
        stat_error: est.stat_error,
        e_tau: None,
        e_tim: None,
        e_tau_stat: None,
        e_tim_stat: None,
        exact: None,
        e_c: None,
        ratio_lo: None,
        ratio_hi: None,
    };
    if let Some(rep) = &report {
        row.e_tau = Some(rep.e_tau);
        row.e_tim = Some(rep.e_tim);
        row.e_tau_stat = Some(rep.e_tau_stat);
        row.e_tim_stat = Some(rep.e_tim_stat);
    }
    if let Some(x) = exact {
        row.exact = Some(x);
        row.e_c = Some(x - est.value);
        if let Some(rep) = &report {
            let ri = ratio_interval(x, est.value, est.stat_error, rep);
            row.ratio_lo = Some(ri.lo());
            row.ratio_hi = Some(ri.hi());
        }
    }
    row.validate()?;
    Ok(row)
}

pub fn run_price(cfg: &RunConfig) -> Result<TableRow> {
    let model = cfg.model.build()?;
    let payoff = cfg.payoff.build()?;
    let grid = cfg.grid.build()?;
    let scheme = parse_scheme(&cfg.run.scheme)?;
    let rule = parse_rule(&cfg.run.rule)?;
    price_level(&model, &payoff, &grid, scheme, rule, &cfg.run, cfg.run.seed)
}

/// Like [`run_price`] but the backward error estimate is the point, so a
/// scheme or path count that cannot produce one is an error here.
pub fn run_error_estimate(cfg: &RunConfig) -> Result<TableRow> {
    let scheme = parse_scheme(&cfg.run.scheme)?;
    if scheme != Scheme::Nodal {
        bail!("the backward error estimate is defined for the efd scheme");
    }
    if cfg.run.m_dual() == 0 {
        bail!("the error estimate needs a positive dual path count");
    }
    run_price(cfg)
}

/// One row per refinement level. Each level reuses the base geometry with
/// the partition scaled, and shifts the seed so levels are statistically
/// independent. A single-level study is exactly [`run_price`].
pub fn run_study(cfg: &RunConfig) -> Result<Vec<TableRow>> {
    let model = cfg.model.build()?;
    let payoff = cfg.payoff.build()?;
    let scheme = parse_scheme(&cfg.run.scheme)?;
    let rule = parse_rule(&cfg.run.rule)?;
    let levels = match &cfg.study {
        Some(s) if !s.levels.is_empty() => s.levels.clone(),
        _ => vec![cfg.grid.n],
    };
    let mut rows = Vec::with_capacity(levels.len());
    for (i, &n) in levels.iter().enumerate() {
        let grid = cfg.grid.scaled(n)?.build()?;
        let row = price_level(
            &model,
            &payoff,
            &grid,
            scheme,
            rule,
            &cfg.run,
            cfg.run.seed + i as u64,
        )
        .with_context(|| format!("level {n}"))?;
        rows.push(row);
    }
    Ok(rows)
}

/// Which discretization direction a strong-convergence sweep refines.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StrongDirection {
    Time,
    Maturity,
}

impl StrongDirection {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "time" => Ok(StrongDirection::Time),
            "maturity" => Ok(StrongDirection::Maturity),
            other => bail!("unknown direction {other:?}; expected time or maturity"),
        }
    }
}

/// One level of a strong-convergence sweep: the refined step size and the
/// root-mean-square nodal error against the exact solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrongRow {
    pub n: usize,
    pub l: usize,
    pub delta: f64,
    pub rms: f64,
}

pub const STRONG_HEADER: &str = "N,L,delta,rms";

pub fn strong_to_csv(rows: &[StrongRow]) -> String {
    let mut s = String::from(STRONG_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(s, "{},{},{:.16e},{:.16e}", r.n, r.l, r.delta, r.rms);
    }
    s
}

pub fn write_strong_csv(path: &Path, rows: &[StrongRow]) -> Result<()> {
    std::fs::write(path, strong_to_csv(rows))
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Slope of `ln(err)` against `ln(delta)` by least squares.
pub fn fit_slope(deltas: &[f64], errs: &[f64]) -> f64 {
    assert!(deltas.len() == errs.len() && deltas.len() >= 2);
    let xs: Vec<f64> = deltas.iter().map(|d| d.ln()).collect();
    let ys: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
    let n = xs.len() as f64;
    let xm = xs.iter().sum::<f64>() / n;
    let ym = ys.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in xs.iter().zip(&ys) {
        num += (x - xm) * (y - ym);
        den += (x - xm) * (x - xm);
    }
    num / den
}

/// Measure the forward scheme's own convergence, node by node, against the
/// explicitly solvable dynamics.
///
/// Time direction: flat-volatility (`ho-lee`) paths are coupled to the
/// exact solution through the same Wiener increments and the terminal
/// curve is compared at the nodes, refining the time partition at a fixed
/// maturity tail. Nodal coefficients (`efd`) are required, since the
/// comparison is taken at the nodes.
///
/// Maturity direction: for state-independent volatility the mean curve of
/// the scheme satisfies a deterministic recursion exactly, so the mean of
/// the cell-averaged (`efe`) scheme is compared against the exact mean
/// curve at the tail nodes, refining the tail at a fixed time partition.
/// The nodal scheme's coefficients are exact at the nodes and would show
/// no leading maturity error here, so `efe` is required.
pub fn run_strong_order(
    cfg: &RunConfig,
    direction: StrongDirection,
) -> Result<(Vec<StrongRow>, f64)> {
    let model = cfg.model.build()?;
    let payoff = cfg.payoff.build()?;
    let scheme = parse_scheme(&cfg.run.scheme)?;
    let rule = parse_rule(&cfg.run.rule)?;
    let so = cfg.strong_order.clone().unwrap_or_default();
    let gc = &cfg.grid;
    let seed = cfg.run.seed;

    let rows = match direction {
        StrongDirection::Time => {
            if !matches!(model, HjmModel::HoLee(_)) {
                bail!(
                    "the time-direction sweep couples paths to the explicit flat-volatility \
                     solution; run it with the ho-lee model"
                );
            }
            if scheme != Scheme::Nodal {
                bail!("the node-by-node comparison needs the efd scheme");
            }
            if so.time_levels.len() < 2 {
                bail!("need at least two refinement levels");
            }
            let mut rows = Vec::new();
            for &n in &so.time_levels {
                let grid = Grid::diagonal_nested(n, so.tail_cells, gc.t_max, gc.tau_max, gc.tau_a)?;
                let pricer = Pricer::new(&model, &grid, &payoff, scheme, rule)?;
                let t_max = grid.t_max();
                let first = grid.ell_index(t_max);
                let stats = run_samples(so.m, 1, 0, |id| {
                    let incs = WienerIncrements::sample(&grid, model.factors(), seed, id, false);
                    let path = simulate(&model, &grid, &payoff, pricer.table(), &incs)?;
                    let mut driver = ExactDriver::zero();
                    for m in 0..grid.n_steps() {
                        let dt = grid.dt(m);
                        let s = dt.sqrt();
                        let dw = incs.dw(m);
                        driver.step(&model, dt, [dw[0] / s, dw[1] / s])?;
                    }
                    let term = path.terminal();
                    let mut acc = 0.0;
                    for ell in first..grid.n_cells() {
                        let tau = grid.tau_nodes()[ell];
                        let diff =
                            term[ell] + model.f0(tau) - exact_forward(&model, t_max, tau, &driver)?;
                        acc += diff * diff;
                    }
                    Ok(vec![acc / (grid.n_cells() - first) as f64])
                })?;
                rows.push(StrongRow {
                    n,
                    l: grid.n_cells(),
                    delta: t_max / n as f64,
                    rms: stats.mean[0].sqrt(),
                });
            }
            rows
        }
        StrongDirection::Maturity => {
            if matches!(model, HjmModel::Cir(_)) {
                bail!(
                    "the maturity-direction sweep uses exact mean curves, which need \
                     state-independent volatility"
                );
            }
            if scheme != Scheme::Projected {
                bail!(
                    "the maturity-direction sweep measures the cell-averaged coefficients; \
                     run it with the efe scheme"
                );
            }
            if so.maturity_levels.len() < 2 {
                bail!("need at least two refinement levels");
            }
            let mut rows = Vec::new();
            for &tail in &so.maturity_levels {
                let grid = Grid::diagonal_nested(so.n_fixed, tail, gc.t_max, gc.tau_max, gc.tau_a)?;
                let table = CoeffTable::new(&model, &grid, scheme)?;
                let cells = grid.n_cells();
                // with state-independent volatility the mean curve follows
                // the drift recursion exactly, no sampling needed
                let mut mean = vec![0.0; cells];
                for n in 0..grid.n_steps() {
                    let r = mean[grid.ell_at_step(n)] + table.f0_at_step(n);
                    let a = model.xi_sq(r);
                    let dt = grid.dt(n);
                    let (lam_tilde, _) = table.step_rows(n);
                    for (g, lt) in mean.iter_mut().zip(lam_tilde) {
                        *g += dt * a * lt;
                    }
                }
                let driver = ExactDriver::zero();
                let t_max = grid.t_max();
                let mut acc = 0.0;
                let mut count = 0usize;
                for ell in grid.ell_a()..cells {
                    let tau = grid.tau_nodes()[ell];
                    let exact_mean = exact_forward(&model, t_max, tau, &driver)? - model.f0(tau);
                    let diff = mean[ell] - exact_mean;
                    acc += diff * diff;
                    count += 1;
                }
                rows.push(StrongRow {
                    n: so.n_fixed,
                    l: cells,
                    delta: (grid.tau_max() - grid.tau_a()) / tail as f64,
                    rms: (acc / count as f64).sqrt(),
                });
            }
            rows
        }
    };

    let deltas: Vec<f64> = rows.iter().map(|r| r.delta).collect();
    let errs: Vec<f64> = rows.iter().map(|r| r.rms).collect();
    let slope = fit_slope(&deltas, &errs);
    Ok((rows, slope))
}

/// Cross-check the closed-form reference machinery against independent
/// derivations, and optionally against a brute-force simulation of the
/// exact dynamics. Returns one report line per check; the first failure
/// aborts with a nonzero exit.
pub fn run_oracle_check(with_referee: bool) -> Result<Vec<String>> {
    let mut lines = Vec::new();

    // two independent derivations of the flat-volatility linear contract
    let ho_lee = HjmModel::ho_lee_benchmark();
    let engine = oracle::exact_functional(&ho_lee, &Payoff::Linear, 1.0, 1.0, 2.0)?;
    let direct = oracle::ho_lee_linear_reference(&ho_lee, 1.0, 1.0, 2.0)?;
    check_rel(
        "ho-lee linear value, moment engine vs direct integration",
        engine,
        direct,
        1e-10,
        &mut lines,
    )?;

    let vasicek = HjmModel::vasicek_benchmark();
    let engine = oracle::exact_functional(&vasicek, &Payoff::Linear, 0.3, 0.3, 6.0)?;
    let direct = oracle::vasicek_linear_reference(&vasicek, 0.3, 6.0)?;
    check_rel(
        "vasicek linear value, moment engine vs direct integration",
        engine,
        direct,
        1e-10,
        &mut lines,
    )?;

    // deep in the money, the call must collapse to forward minus strike leg
    let two_factor = HjmModel::two_factor_benchmark();
    let k = 1e-10;
    let call = oracle::exact_call_value(&two_factor, k, 1.0, 1.0, 3.0)?;
    let m = oracle::gaussian_moments(&two_factor, 1.0, 1.0, 3.0)?;
    let forward = (-(m.mu_x + m.mu_y) + 0.5 * (m.var_x + m.var_y + 2.0 * m.cov_xy)).exp();
    let bond = (-m.mu_y + 0.5 * m.var_y).exp();
    check_rel(
        "two-factor call at vanishing strike vs forward value",
        call,
        forward - k * bond,
        1e-9,
        &mut lines,
    )?;

    // the symbolic initial-curve integral against a dense trapezoid
    for (name, model, a, b) in [
        ("ho-lee", ho_lee, 1.0, 2.0),
        ("vasicek", vasicek, 0.3, 6.0),
        ("two-factor", two_factor, 1.0, 3.0),
    ] {
        let symbolic = oracle::initial_curve_integral(&model, a, b)?;
        let panels = 200_000;
        let h = (b - a) / panels as f64;
        let mut acc = 0.5 * (model.f0(a) + model.f0(b));
        for i in 1..panels {
            acc += model.f0(a + i as f64 * h);
        }
        let dense = acc * h;
        check_rel(
            &format!("{name} initial-curve integral, symbolic vs dense trapezoid"),
            symbolic,
            dense,
            1e-9,
            &mut lines,
        )?;
    }

    if with_referee {
        for (name, model, payoff, t, ta, tm) in [
            (
                "ho-lee linear",
                HjmModel::ho_lee_benchmark(),
                Payoff::Linear,
                1.0,
                1.0,
                2.0,
            ),
            (
                "vasicek linear",
                HjmModel::vasicek_benchmark(),
                Payoff::Linear,
                0.3,
                0.3,
                6.0,
            ),
            (
                "two-factor call",
                HjmModel::two_factor_benchmark(),
                Payoff::call(0.5)?,
                1.0,
                1.0,
                3.0,
            ),
        ] {
            let exact = oracle::exact_functional(&model, &payoff, t, ta, tm)?;
            let mc = oracle::brute_force_value(&model, &payoff, t, ta, tm, 200_000, 64, 256, 11)?;
            let tol = 5.0 * mc.std_error + 3e-5;
            let diff = (mc.value - exact).abs();
            if diff > tol {
                bail!(
                    "referee simulation of {name} disagrees with the closed form: \
                     {:.10e} vs {exact:.10e} (diff {diff:.3e}, tol {tol:.3e})",
                    mc.value
                );
            }
            lines.push(format!(
                "ok: {name} closed form confirmed by exact-dynamics simulation \
                 (diff {diff:.2e} within {tol:.2e})"
            ));
        }
    }

    Ok(lines)
}

fn check_rel(what: &str, a: f64, b: f64, tol: f64, lines: &mut Vec<String>) -> Result<()> {
    let denom = a.abs().max(b.abs()).max(1e-300);
    let rel = (a - b).abs() / denom;
    if !(rel < tol) {
        bail!("{what}: {a:.12e} vs {b:.12e} (rel diff {rel:.3e}, tol {tol:.1e})");
    }
    lines.push(format!("ok: {what} (rel diff {rel:.1e})"));
    Ok(())
}
