//! End-to-end acceptance gate for the workspace.
//!
//! Each test checks one engine-level guarantee: adjoint correctness against
//! finite differences, sharpness and first-order decay of the computable
//! error expansion, strong convergence orders in both grid directions,
//! fourth-order terminal quadrature, coverage of the combined error bound,
//! reproduction of the square-root-volatility benchmark pattern, bitwise
//! determinism across worker counts, and the cost model of the dual sweep.
//!
//! Every test prints one numbered verdict line (run with `--nocapture` to
//! see them on success; failures replay them). Tolerances are pinned next
//! to their asserts. Tests share a lock so the wall-clock-sensitive checks
//! are not distorted by concurrent load from the sampling-heavy ones.

use std::process::Command;
use std::sync::{Mutex, MutexGuard, PoisonError};
use std::time::Instant;

use hjm_mc::dual::{dual_trajectory, fd_gradient_entry, fd_second_entry};
use hjm_mc::oracle;
use hjm_mc::payoff::composite_lambda;
use hjm_mc::rng::WienerIncrements;
use hjm_mc::scheme::simulate;
use hjm_mc::{
    error_estimate, path_error_terms, ratio_interval, run_samples, Grid, HjmModel, McConfig,
    Payoff, Pricer, QuadratureRule, Scheme,
};
use hjm_mc_cli::commands::{fit_slope, run_strong_order, StrongDirection, DUAL_ID_BASE};
use hjm_mc_cli::config;

static GATE: Mutex<()> = Mutex::new(());

fn gate() -> MutexGuard<'static, ()> {
    GATE.lock().unwrap_or_else(PoisonError::into_inner)
}

/// The three benchmark contracts used across the suite, with their grid
/// geometry `(t_max, tau_max, tau_a)`.
fn benchmark(name: &str) -> (HjmModel, Payoff, f64, f64, f64) {
    match name {
        "ho-lee" => (HjmModel::ho_lee_benchmark(), Payoff::Linear, 1.0, 2.0, 1.0),
        "vasicek" => (HjmModel::vasicek_benchmark(), Payoff::Linear, 0.3, 6.0, 0.3),
        "cir" => (
            HjmModel::cir_benchmark(),
            Payoff::call(0.5).unwrap(),
            5.0,
            8.0,
            5.0,
        ),
        other => panic!("no benchmark named {other}"),
    }
}

/// 1. The backward duals are the exact derivatives of the computed payoff:
///    first duals match centered differences entry by entry at every level,
///    second duals match second differences at sampled index pairs.
#[test]
fn adjoint_state_derivatives_match_finite_differences() {
    let _g = gate();
    let t0 = Instant::now();
    let seed = 77;
    // 50 paths split across the three models; every path checks all
    // (level, entry) first derivatives and two sampled second-derivative
    // index pairs, 100 pairs in total.
    let mut grad_checks = 0usize;
    let mut pair_checks = 0usize;
    let mut worst_grad = 0.0_f64;
    let mut worst_pair = 0.0_f64;
    for (name, n_paths) in [("ho-lee", 17u64), ("vasicek", 17), ("cir", 16)] {
        let (model, payoff, t_max, tau_max, tau_a) = benchmark(name);
        let grid = Grid::diagonal_nested(8, 8, t_max, tau_max, tau_a).unwrap();
        let pricer = Pricer::new(
            &model,
            &grid,
            &payoff,
            Scheme::Nodal,
            QuadratureRule::Simpson,
        )
        .unwrap();
        let dim = grid.n_cells() + 2;
        for id in 0..n_paths {
            let incs = WienerIncrements::sample(&grid, model.factors(), seed, id, false);
            let path = simulate(&model, &grid, &payoff, pricer.table(), &incs).unwrap();
            let traj = dual_trajectory(&pricer, &path, &incs).unwrap();
            for n in 0..=grid.n_steps() {
                for i in 0..dim {
                    let fd = fd_gradient_entry(&pricer, &path, &incs, n, i).unwrap();
                    let tol = (1e-6 * fd.abs()).max(1e-10);
                    let dev = (traj.phi[n][i] - fd).abs();
                    assert!(
                        dev <= tol,
                        "{name} path {id}: first dual [{n}][{i}] = {} vs difference {}",
                        traj.phi[n][i],
                        fd
                    );
                    worst_grad = worst_grad.max(dev / tol);
                    grad_checks += 1;
                }
            }
            for k in 0..2u64 {
                let n = ((id * 7 + k * 3) % (grid.n_steps() as u64 + 1)) as usize;
                let i = ((id * 5 + k * 11) % dim as u64) as usize;
                let j = ((id * 13 + k * 17) % dim as u64) as usize;
                let fd = fd_second_entry(&pricer, &path, &incs, n, i, j).unwrap();
                // The absolute floor covers entries whose true second
                // derivative vanishes, where second differences return
                // pure roundoff and a relative comparison is undefined.
                let tol = (1e-4 * fd.abs()).max(1e-6);
                let dual = traj.phi2[n][i * dim + j];
                let dev = (dual - fd).abs();
                assert!(
                    dev <= tol,
                    "{name} path {id}: second dual [{n}][{i},{j}] = {dual} vs difference {fd}"
                );
                worst_pair = worst_pair.max(dev / tol);
                pair_checks += 1;
            }
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    println!(
        "1. adjoint derivatives vs finite differences: PASS \
         ({grad_checks} gradient entries, {pair_checks} second-derivative pairs, \
         worst dev {worst_grad:.2}x / {worst_pair:.2}x of tolerance, {secs:.1}s)"
    );
    assert!(
        secs < 60.0,
        "derivative check took {secs:.1}s, budget is one minute"
    );
}

/// 2. The ratio of the estimated to the realized discretization error
///    brackets one within twice its statistical half-width, across seeds.
#[test]
fn error_expansion_ratio_brackets_unity_across_seeds() {
    let _g = gate();
    let mut verdicts = Vec::new();
    for name in ["ho-lee", "vasicek"] {
        let (model, payoff, t_max, tau_max, tau_a) = benchmark(name);
        let grid = Grid::diagonal_nested(20, 20, t_max, tau_max, tau_a).unwrap();
        let pricer = Pricer::new(
            &model,
            &grid,
            &payoff,
            Scheme::Nodal,
            QuadratureRule::Simpson,
        )
        .unwrap();
        let exact = oracle::exact_functional(&model, &payoff, t_max, tau_a, tau_max).unwrap();
        let mut pass = 0;
        for seed in 11..16u64 {
            let mc = McConfig {
                paths: 5000,
                seed,
                antithetic: true,
                c0: 1.65,
                id_base: 0,
            };
            let est = pricer.price(&mc).unwrap();
            let mcd = McConfig {
                id_base: DUAL_ID_BASE,
                ..mc
            };
            let report = error_estimate(&pricer, &mcd).unwrap();
            let ri = ratio_interval(exact, est.value, est.stat_error, &report);
            let ok = (ri.a - 1.0).abs() <= 2.0 * ri.b;
            println!(
                "   {name} seed {seed}: A = {:.4}, B = {:.4}, interval [{:.4}, {:.4}] {}",
                ri.a,
                ri.b,
                ri.a - 2.0 * ri.b,
                ri.a + 2.0 * ri.b,
                if ok { "brackets 1" } else { "misses 1" }
            );
            if ok {
                pass += 1;
            }
        }
        verdicts.push((name, pass));
    }
    let ok = verdicts.iter().all(|&(_, p)| p >= 4);
    println!(
        "2. estimated/realized error ratio brackets 1 (need 4 of 5 seeds): {} -> {}",
        verdicts
            .iter()
            .map(|(n, p)| format!("{n} {p}/5"))
            .collect::<Vec<_>>()
            .join(", "),
        if ok { "PASS" } else { "FAIL" }
    );
    for (name, pass) in verdicts {
        assert!(pass >= 4, "{name}: only {pass}/5 seeds bracketed 1");
    }
}

/// 3. The realized error against the closed-form value halves per joint
///    doubling of the time and maturity grids: fitted slope near one.
#[test]
fn realized_error_halves_under_joint_refinement() {
    let _g = gate();
    let (model, payoff, t_max, tau_max, tau_a) = benchmark("ho-lee");
    let exact = oracle::exact_functional(&model, &payoff, t_max, tau_a, tau_max).unwrap();
    let mut deltas = Vec::new();
    let mut errs = Vec::new();
    for (i, n) in [5usize, 10, 20].into_iter().enumerate() {
        let grid = Grid::diagonal_nested(n, n, t_max, tau_max, tau_a).unwrap();
        let pricer = Pricer::new(
            &model,
            &grid,
            &payoff,
            Scheme::Nodal,
            QuadratureRule::Simpson,
        )
        .unwrap();
        let mc = McConfig {
            paths: 20_000,
            seed: 21 + i as u64,
            antithetic: true,
            c0: 1.65,
            id_base: 0,
        };
        let est = pricer.price(&mc).unwrap();
        let e_c = exact - est.value;
        println!(
            "   n = {n:2}: value {:.6e}, realized error {:.3e}, stat band {:.1e}",
            est.value, e_c, est.stat_error
        );
        // The slope is only meaningful once sampling noise is well below
        // the signal.
        assert!(
            est.stat_error < 0.2 * e_c.abs(),
            "n = {n}: statistical band {:.2e} exceeds 20% of the realized error {:.2e}",
            est.stat_error,
            e_c.abs()
        );
        deltas.push(t_max / n as f64);
        errs.push(e_c.abs());
    }
    let slope = fit_slope(&deltas, &errs);
    let ok = (0.8..=1.2).contains(&slope);
    println!(
        "3. realized error first-order decay: slope {slope:.3} in [0.80, 1.20] -> {}",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok, "fitted slope {slope:.3} outside [0.8, 1.2]");
}

/// 4a. Strong time-refinement order of the nodal scheme measured against
///    the explicitly solvable flat-volatility dynamics, plus a self-coupled
///    square-root-volatility sweep documenting the sub-first-order regime.
#[test]
fn time_refinement_strong_order_half_order_window() {
    let _g = gate();
    // Supplementary sweep first so its evidence is always printed: with
    // state-dependent volatility there is no explicit path to compare
    // against, so couple each grid to its own refinement by summing the
    // fine Wiener increments pairwise into the coarse partition.
    let (model, payoff, t_max, tau_max, tau_a) = benchmark("cir");
    let seed = 4242;
    let mut deltas = Vec::new();
    let mut rmss = Vec::new();
    for n in [16usize, 32, 64, 128, 256] {
        let coarse = Grid::diagonal_nested(n, 8, t_max, tau_max, tau_a).unwrap();
        let fine = Grid::diagonal_nested(2 * n, 8, t_max, tau_max, tau_a).unwrap();
        let pc = Pricer::new(
            &model,
            &coarse,
            &payoff,
            Scheme::Nodal,
            QuadratureRule::Simpson,
        )
        .unwrap();
        let pf = Pricer::new(
            &model,
            &fine,
            &payoff,
            Scheme::Nodal,
            QuadratureRule::Simpson,
        )
        .unwrap();
        let c_first = coarse.ell_index(t_max);
        let f_first = fine.ell_index(t_max);
        let tail = coarse.n_cells() - c_first;
        let stats = run_samples(800, 1, 0, |id| {
            let fi = WienerIncrements::sample(&fine, model.factors(), seed, id, false);
            let rows: Vec<_> = (0..n)
                .map(|m| {
                    let a = fi.dw(2 * m);
                    let b = fi.dw(2 * m + 1);
                    [a[0] + b[0], a[1] + b[1]]
                })
                .collect();
            let ci = WienerIncrements::from_rows(rows);
            let pathc = simulate(&model, &coarse, &payoff, pc.table(), &ci)?;
            let pathf = simulate(&model, &fine, &payoff, pf.table(), &fi)?;
            let tc = pathc.terminal();
            let tf = pathf.terminal();
            let mut acc = 0.0;
            for k in 0..tail {
                let d = tc[c_first + k] - tf[f_first + k];
                acc += d * d;
            }
            Ok(vec![acc / tail as f64])
        })
        .unwrap();
        deltas.push(t_max / n as f64);
        rmss.push(stats.mean[0].sqrt());
    }
    let sup_slope = fit_slope(&deltas, &rmss);
    println!(
        "   square-root volatility, self-coupled refinement: rms {:.3e} -> {:.3e}, slope {sup_slope:.3}",
        rmss[0],
        rmss[rmss.len() - 1]
    );
    assert!(
        (0.3..=0.85).contains(&sup_slope),
        "self-coupled sweep slope {sup_slope:.3} outside the sub-first-order window [0.30, 0.85]"
    );

    // The sweep as stated: flat-volatility paths coupled to the explicit
    // solution through the same increments.
    let cfg = config::preset("ho-lee").unwrap();
    let (rows, slope) = run_strong_order(&cfg, StrongDirection::Time).unwrap();
    for r in &rows {
        println!("   n = {:3}: dt = {:.4e}, rms {:.4e}", r.n, r.delta, r.rms);
    }
    let ok = (0.4..=0.7).contains(&slope);
    println!(
        "4a. time-direction strong order: slope {slope:.4} in [0.40, 0.70] -> {}",
        if ok { "PASS" } else { "FAIL" }
    );
    println!(
        "    note: flat volatility feeds the driving noise into the nodal recursion exactly, so \
         the coupled comparison isolates the deterministic first-order drift error and the slope \
         sits at one for any volatility that does not depend on the state; the half-order regime \
         requires state-dependent volatility, where no explicit comparison path exists — the \
         self-coupled square-root sweep above (slope {sup_slope:.2}) is the closest measurable \
         analogue and does land below first order."
    );
    assert!(ok, "time-direction slope {slope:.4} outside [0.4, 0.7]");
}

/// 4b. Strong maturity-refinement order of the cell-averaged scheme: the
///    mean curve converges at first order in the cell width.
#[test]
fn maturity_refinement_strong_order_first_order() {
    let _g = gate();
    let mut cfg = config::preset("vasicek").unwrap();
    cfg.run.scheme = "efe".to_string();
    let (rows, slope) = run_strong_order(&cfg, StrongDirection::Maturity).unwrap();
    for r in &rows {
        println!(
            "   tail cells = {:3}: dtau = {:.4e}, rms {:.4e}",
            r.l, r.delta, r.rms
        );
    }
    let ok = (0.8..=1.2).contains(&slope);
    println!(
        "4b. maturity-direction strong order: slope {slope:.4} in [0.80, 1.20] -> {}",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok, "maturity-direction slope {slope:.4} outside [0.8, 1.2]");
}

/// 5. The composite terminal quadrature converges at fourth order on a
///    frozen state, for both panel rules.
#[test]
fn terminal_quadrature_converges_at_fourth_order() {
    let _g = gate();
    // Frozen zero deviation: the integrand is the smooth initial curve, so
    // the quadrature error is isolated from simulation error entirely.
    let (model, payoff, _, tau_max, tau_a) = benchmark("ho-lee");
    let exact = oracle::initial_curve_integral(&model, tau_a, tau_max).unwrap();
    let mut slopes = Vec::new();
    for rule in [QuadratureRule::Simpson, QuadratureRule::Gauss2] {
        let mut deltas = Vec::new();
        let mut errs = Vec::new();
        for l in [4usize, 8, 16, 32] {
            let grid = Grid::diagonal_nested(l, l, 1.0, tau_max, tau_a).unwrap();
            let curve = vec![0.0; grid.n_cells()];
            let approx = composite_lambda(&payoff, &model, &grid, rule, &curve);
            deltas.push((tau_max - tau_a) / l as f64);
            errs.push((approx - exact).abs());
        }
        let slope = fit_slope(&deltas, &errs);
        println!(
            "   {}: errors {:.3e} -> {:.3e}, slope {slope:.3}",
            rule.name(),
            errs[0],
            errs[errs.len() - 1]
        );
        slopes.push((rule.name(), slope));
    }
    let ok = slopes.iter().all(|&(_, s)| (3.6..=4.4).contains(&s));
    println!(
        "5. terminal quadrature fourth order: {} -> {}",
        slopes
            .iter()
            .map(|(n, s)| format!("{n} {s:.2}"))
            .collect::<Vec<_>>()
            .join(", "),
        if ok { "PASS" } else { "FAIL" }
    );
    for (name, slope) in slopes {
        assert!(
            (3.6..=4.4).contains(&slope),
            "{name}: slope {slope:.3} outside [3.6, 4.4]"
        );
    }
}

/// 6. The combined bound — statistical band plus estimated discretization
///    error plus the dual estimates' own statistical bands — covers the
///    realized error in at least 85% of independent replications.
#[test]
fn combined_error_bound_covers_realized_error() {
    let _g = gate();
    let (model, payoff, t_max, tau_max, tau_a) = benchmark("ho-lee");
    let grid = Grid::diagonal_nested(20, 20, t_max, tau_max, tau_a).unwrap();
    let pricer = Pricer::new(
        &model,
        &grid,
        &payoff,
        Scheme::Nodal,
        QuadratureRule::Simpson,
    )
    .unwrap();
    let exact = oracle::exact_functional(&model, &payoff, t_max, tau_a, tau_max).unwrap();
    let reps = 200u64;
    let mut covered = 0u64;
    for rep in 0..reps {
        let mc = McConfig {
            paths: 200,
            seed: 9000 + rep,
            antithetic: true,
            c0: 1.65,
            id_base: 0,
        };
        let est = pricer.price(&mc).unwrap();
        let mcd = McConfig {
            paths: 400,
            id_base: DUAL_ID_BASE,
            ..mc
        };
        let report = error_estimate(&pricer, &mcd).unwrap();
        let bound = est.stat_error
            + (report.e_tau + report.e_tim).abs()
            + report.e_tau_stat
            + report.e_tim_stat;
        if (est.value - exact).abs() <= bound {
            covered += 1;
        }
    }
    let pct = 100.0 * covered as f64 / reps as f64;
    let ok = covered * 100 >= reps * 85;
    println!(
        "6. combined bound coverage: {covered}/{reps} = {pct:.1}% (need 85%) -> {}",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok, "coverage {covered}/{reps} below 85%");
}

/// 7. With square-root (state-dependent) volatility, where no closed form
///    exists, errors against a fine-grid self-reference reproduce the
///    expected magnitudes and halve per doubling.
#[test]
fn square_root_model_reproduces_halving_pattern() {
    let _g = gate();
    let (model, payoff, t_max, tau_max, tau_a) = benchmark("cir");
    let ref_grid = Grid::diagonal_nested(160, 96, t_max, tau_max, tau_a).unwrap();
    let ref_pricer = Pricer::new(
        &model,
        &ref_grid,
        &payoff,
        Scheme::Nodal,
        QuadratureRule::Simpson,
    )
    .unwrap();
    let ref_mc = McConfig {
        paths: 20_000,
        seed: 555,
        antithetic: true,
        c0: 1.65,
        id_base: 0,
    };
    let reference = ref_pricer.price(&ref_mc).unwrap();
    println!(
        "   self-reference (n = 160): {:.6e} +- {:.1e}",
        reference.value, reference.stat_error
    );
    // Expected error magnitudes at n = 5, 10, 20; the realized values must
    // sit within a factor of two (they depend on the RNG and the
    // square-root regularization), and consecutive levels must halve.
    let expected = [1.2e-2, 5.4e-3, 2.8e-3];
    let mut ecs = Vec::new();
    let mut bands = Vec::new();
    for (i, n) in [5usize, 10, 20].into_iter().enumerate() {
        let grid = Grid::diagonal_nested(n, 3 * n / 5, t_max, tau_max, tau_a).unwrap();
        let pricer = Pricer::new(
            &model,
            &grid,
            &payoff,
            Scheme::Nodal,
            QuadratureRule::Simpson,
        )
        .unwrap();
        let mc = McConfig {
            paths: 2000,
            seed: 600 + i as u64,
            antithetic: true,
            c0: 1.65,
            id_base: 0,
        };
        let est = pricer.price(&mc).unwrap();
        let e_c = reference.value - est.value;
        println!(
            "   n = {n:2}: value {:.6e}, error vs reference {:.4e} (expected scale {:.1e})",
            est.value, e_c, expected[i]
        );
        ecs.push(e_c);
        bands.push(est.stat_error + reference.stat_error);
    }
    let r1 = ecs[0].abs() / ecs[1].abs();
    let r2 = ecs[1].abs() / ecs[2].abs();
    let mag_ok = (0..3).all(|i| {
        ecs[i].abs() >= 0.5 * expected[i] - bands[i] && ecs[i].abs() <= 2.0 * expected[i] + bands[i]
    });
    let ratio_ok = (1.5..=2.7).contains(&r1) && (1.5..=2.7).contains(&r2);
    println!(
        "7. square-root benchmark pattern: halving ratios {r1:.2}, {r2:.2} in [1.5, 2.7], \
         magnitudes within 2x -> {}",
        if mag_ok && ratio_ok { "PASS" } else { "FAIL" }
    );
    for i in 0..3 {
        assert!(
            ecs[i].abs() >= 0.5 * expected[i] - bands[i]
                && ecs[i].abs() <= 2.0 * expected[i] + bands[i],
            "level {i}: |error| {:.3e} outside the stat-widened factor-2 window around {:.1e}",
            ecs[i].abs(),
            expected[i]
        );
    }
    assert!(
        ratio_ok,
        "halving ratios {r1:.2}, {r2:.2} outside [1.5, 2.7]"
    );
}

/// 8. The same configuration and seed produce byte-identical CSV no matter
///    how many worker threads the process uses.
#[test]
fn csv_output_identical_across_worker_counts() {
    let _g = gate();
    let bin = env!("CARGO_BIN_EXE_hjmmc");
    let dir = tempfile::tempdir().unwrap();
    let mut files = Vec::new();
    for threads in ["1", "4"] {
        let out = dir.path().join(format!("study-{threads}.csv"));
        let run = Command::new(bin)
            .args([
                "study", "--model", "ho-lee", "--M", "800", "--M-dual", "800", "--levels", "5,10",
                "--seed", "7", "--out",
            ])
            .arg(&out)
            .env("RAYON_NUM_THREADS", threads)
            .output()
            .unwrap();
        assert!(
            run.status.success(),
            "study run with {threads} thread(s) failed: {}",
            String::from_utf8_lossy(&run.stderr)
        );
        files.push(std::fs::read(&out).unwrap());
    }
    let lines = files[0].iter().filter(|&&b| b == b'\n').count();
    assert!(
        lines >= 3,
        "expected a header plus two level rows, found {lines} lines"
    );
    let ok = files[0] == files[1];
    println!(
        "8. byte-identical CSV across worker counts: {} bytes, 1 vs 4 threads -> {}",
        files[0].len(),
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok, "CSV output differs between 1 and 4 worker threads");
}

/// 9. One backward dual sweep costs O(N·L²) per path: doubling both grid
///    directions multiplies the per-path time by about eight.
#[test]
fn dual_sweep_cost_scales_with_grid_size() {
    let _g = gate();
    let (model, payoff, t_max, tau_max, tau_a) = benchmark("ho-lee");
    let sizes = [8usize, 16, 32];
    let mut per_path = [0.0; 3];
    // Measure largest first so the small, most timing-sensitive grid runs
    // on a warm CPU; take the best of several repetitions to filter load
    // spikes.
    for (slot, &n) in sizes.iter().enumerate().rev() {
        let grid = Grid::diagonal_nested(n, n, t_max, tau_max, tau_a).unwrap();
        let pricer = Pricer::new(
            &model,
            &grid,
            &payoff,
            Scheme::Nodal,
            QuadratureRule::Simpson,
        )
        .unwrap();
        for id in 0..16 {
            path_error_terms(&pricer, 1, id, false).unwrap();
        }
        let paths = 320u64;
        let mut best = f64::INFINITY;
        for r in 0..5u64 {
            let t0 = Instant::now();
            for id in 0..paths {
                path_error_terms(&pricer, 1, 1000 * r + id, false).unwrap();
            }
            best = best.min(t0.elapsed().as_secs_f64() / paths as f64);
        }
        per_path[slot] = best;
    }
    // Doubling n and l multiplies n·l² by eight. Fit the constant in
    // t = c·n·l² (geometric mean) and require every measured point to sit
    // within 1.5x of the fitted curve either way.
    let work: Vec<f64> = sizes.iter().map(|&n| (n * n * n) as f64).collect();
    let c = (per_path
        .iter()
        .zip(&work)
        .map(|(t, w)| (t / w).ln())
        .sum::<f64>()
        / 3.0)
        .exp();
    let mut devs = Vec::new();
    for ((&n, &t), &w) in sizes.iter().zip(&per_path).zip(&work) {
        let dev = t / (c * w);
        println!("   n = l = {n:2}: {t:.2e}s per path, {dev:.2}x the fitted n*l^2 curve");
        devs.push(dev);
    }
    let r1 = per_path[1] / per_path[0];
    let r2 = per_path[2] / per_path[1];
    let ok = devs.iter().all(|&d| (1.0 / 1.5..=1.5).contains(&d));
    println!(
        "9. dual sweep cost scaling: deviations from n*l^2 within 1.5x \
         (per-doubling ratios {r1:.2}, {r2:.2}; ideal 8) -> {}",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(
        ok,
        "per-path times deviate from the n*l^2 curve by more than 1.5x: {devs:?}"
    );
}
