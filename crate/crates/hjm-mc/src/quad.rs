//! Small quadrature kernels used internally: a fixed 5-point Gauss–Legendre
//! rule (exact through polynomial degree 9) and an adaptive driver built on
//! top of it for coefficient integrals with no closed form.

use crate::error::{Error, Result};

/// 5-point Gauss–Legendre abscissae on [-1, 1].
const GL5_X: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683,
    0.0,
    0.538_469_310_105_683,
    0.906_179_845_938_664,
];

/// 5-point Gauss–Legendre weights on [-1, 1].
const GL5_W: [f64; 5] = [
    0.236_926_885_056_189_08,
    0.478_628_670_499_366_47,
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_47,
    0.236_926_885_056_189_08,
];

/// Integrate `f` over `[a, b]` with a single 5-point Gauss–Legendre rule.
pub(crate) fn gauss5<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut acc = 0.0;
    for (x, w) in GL5_X.iter().zip(GL5_W.iter()) {
        acc += w * f(mid + half * x);
    }
    half * acc
}

/// Adaptive Gauss–Legendre integration of `f` over `[a, b]` to relative
/// tolerance `rel_tol` (with a small absolute floor so that integrals near
/// zero terminate). Bisects until the two-panel refinement agrees with the
/// single-panel estimate; errors out when the subdivision budget is spent.
pub(crate) fn adaptive_gauss<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    rel_tol: f64,
) -> Result<f64> {
    const MAX_EVALS: usize = 200_000;
    let mut evals = 0usize;
    let whole = gauss5(f, a, b);
    evals += 5;
    let scale = whole.abs().max(1e-300);
    let out = adapt(f, a, b, whole, rel_tol * scale + 1e-15, 0, &mut evals)?;
    if evals >= MAX_EVALS {
        return Err(Error::QuadratureNonconvergence(format!(
            "evaluation budget exhausted on [{a}, {b}]"
        )));
    }
    Ok(out)
}

fn adapt<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    whole: f64,
    abs_tol: f64,
    depth: usize,
    evals: &mut usize,
) -> Result<f64> {
    const MAX_DEPTH: usize = 48;
    const MAX_EVALS: usize = 200_000;
    if depth > MAX_DEPTH || *evals > MAX_EVALS {
        return Err(Error::QuadratureNonconvergence(format!(
            "no convergence on [{a}, {b}] (depth {depth})"
        )));
    }
    let mid = 0.5 * (a + b);
    let left = gauss5(f, a, mid);
    let right = gauss5(f, mid, b);
    *evals += 10;
    let refined = left + right;
    if (refined - whole).abs() <= abs_tol {
        return Ok(refined);
    }
    let half_tol = 0.5 * abs_tol;
    Ok(adapt(f, a, mid, left, half_tol, depth + 1, evals)?
        + adapt(f, mid, b, right, half_tol, depth + 1, evals)?)
}
