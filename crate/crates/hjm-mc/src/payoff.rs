//! Bond-contract payoffs and the composite maturity quadrature.
//!
//! A contract value has the form `F(Y)·G(Λ) + Z` where `Y` integrates the
//! short rate over time, `Λ = ∫ Ψ(f(t_max,τ)) dτ` integrates a function of
//! the terminal curve over `[τ_a, τ_max]`, and `Z` accumulates a running
//! coupon `F(Y_s)·U(r_s)`. Each payoff supplies `F`, `G`, `Ψ`, `U` together
//! with the first two derivatives the dual pass requires. At payoff kinks
//! the right-hand derivative is used.
//!
//! The simulated curve is piecewise constant across maturity cells, so `Λ`
//! is evaluated cell by cell with a fixed fourth-order panel rule applied to
//! `Ψ(ḡ_ℓ + f₀(·))`, the smooth initial curve varying inside the cell.

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::model::HjmModel;

/// Fourth-order panel rule for the maturity quadrature, given as offsets
/// `s_i ∈ [0,1]` across a cell with weights summing to one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadratureRule {
    /// Simpson's rule: endpoints and midpoint.
    Simpson,
    /// Two-point Gauss-Legendre.
    Gauss2,
}

impl QuadratureRule {
    pub fn nodes(&self) -> &'static [(f64, f64)] {
        // 1/(2√3) spelled out so the table is plain data.
        const G: f64 = 0.288_675_134_594_812_87;
        match self {
            QuadratureRule::Simpson => &[(0.0, 1.0 / 6.0), (0.5, 2.0 / 3.0), (1.0, 1.0 / 6.0)],
            QuadratureRule::Gauss2 => &[(0.5 - G, 0.5), (0.5 + G, 0.5)],
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            QuadratureRule::Simpson => "simpson",
            QuadratureRule::Gauss2 => "gauss2",
        }
    }
}

/// Contract payoff `F(Y)·G(Λ(Ψ)) + Z(U)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Payoff {
    /// `F(x) = 1 − x`, `G = Ψ = id`, no coupon: a linearized zero-coupon
    /// bond written on the average of the terminal curve.
    Linear,
    /// `F(x) = e^{−x}` discounting, `G(y) = (e^{−y} − strike)⁺`: a call on
    /// a zero-coupon bond over `[τ_a, τ_max]`.
    Call { strike: f64 },
    /// `F(x) = e^{−x}` discounting, `G ≡ 0`, running coupon
    /// `U(r) = (r − cap_rate)⁺`: the floating leg of a caplet strip.
    Cap { cap_rate: f64 },
}

impl Payoff {
    pub fn call(strike: f64) -> Result<Self> {
        if !(strike > 0.0) || !strike.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "call strike {strike} must be positive"
            )));
        }
        Ok(Payoff::Call { strike })
    }

    pub fn cap(cap_rate: f64) -> Result<Self> {
        if !cap_rate.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "cap rate {cap_rate} must be finite"
            )));
        }
        Ok(Payoff::Cap { cap_rate })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Payoff::Linear => "linear",
            Payoff::Call { .. } => "call",
            Payoff::Cap { .. } => "cap",
        }
    }

    /// Discount/weight factor `F`.
    pub fn f(&self, x: f64) -> f64 {
        match self {
            Payoff::Linear => 1.0 - x,
            Payoff::Call { .. } | Payoff::Cap { .. } => (-x).exp(),
        }
    }

    pub fn f_prime(&self, x: f64) -> f64 {
        match self {
            Payoff::Linear => -1.0,
            Payoff::Call { .. } | Payoff::Cap { .. } => -(-x).exp(),
        }
    }

    pub fn f_second(&self, x: f64) -> f64 {
        match self {
            Payoff::Linear => 0.0,
            Payoff::Call { .. } | Payoff::Cap { .. } => (-x).exp(),
        }
    }

    /// Terminal-curve functional `G` applied to `Λ`.
    pub fn g(&self, y: f64) -> f64 {
        match self {
            Payoff::Linear => y,
            Payoff::Call { strike } => ((-y).exp() - strike).max(0.0),
            Payoff::Cap { .. } => 0.0,
        }
    }

    pub fn g_prime(&self, y: f64) -> f64 {
        match self {
            Payoff::Linear => 1.0,
            Payoff::Call { strike } => {
                // Right-hand derivative: at the kink e^{−y} = strike the
                // option is out of the money for larger y, so slope 0.
                if (-y).exp() > *strike {
                    -(-y).exp()
                } else {
                    0.0
                }
            }
            Payoff::Cap { .. } => 0.0,
        }
    }

    pub fn g_second(&self, y: f64) -> f64 {
        match self {
            Payoff::Linear => 0.0,
            Payoff::Call { strike } => {
                if (-y).exp() > *strike {
                    (-y).exp()
                } else {
                    0.0
                }
            }
            Payoff::Cap { .. } => 0.0,
        }
    }

    /// Pointwise curve transform `Ψ` inside the maturity integral.
    pub fn psi(&self, z: f64) -> f64 {
        let _ = self;
        z
    }

    pub fn psi_prime(&self, z: f64) -> f64 {
        let _ = (self, z);
        1.0
    }

    pub fn psi_second(&self, z: f64) -> f64 {
        let _ = (self, z);
        0.0
    }

    /// Running coupon rate `U(r)`.
    pub fn u(&self, r: f64) -> f64 {
        match self {
            Payoff::Cap { cap_rate } => (r - cap_rate).max(0.0),
            _ => 0.0,
        }
    }

    pub fn u_prime(&self, r: f64) -> f64 {
        match self {
            // Right-hand derivative at the kink.
            Payoff::Cap { cap_rate } if r >= *cap_rate => 1.0,
            _ => 0.0,
        }
    }

    pub fn u_second(&self, r: f64) -> f64 {
        let _ = (self, r);
        0.0
    }

    /// Whether the running coupon `U` is identically zero, letting the
    /// simulation skip the `Z` accumulator's nonlinear evaluations.
    pub fn has_coupon(&self) -> bool {
        matches!(self, Payoff::Cap { .. })
    }
}

/// Composite maturity quadrature
/// `Λ̄ = Σ_ℓ Δτ_ℓ Σ_i w_i Ψ(curve[ℓ] + f₀(τ_ℓ + s_i Δτ_ℓ))`
/// over the cells covering `[τ_a, τ_max]`. `curve` holds the simulated
/// deviation from `f₀`, one value per maturity cell.
pub fn composite_lambda(
    payoff: &Payoff,
    model: &HjmModel,
    grid: &Grid,
    rule: QuadratureRule,
    curve: &[f64],
) -> f64 {
    debug_assert_eq!(curve.len(), grid.n_cells());
    let tau = grid.tau_nodes();
    let mut acc = 0.0;
    for ell in grid.ell_a()..grid.n_cells() {
        let dtau = grid.dtau(ell);
        let mut cell = 0.0;
        for &(s, w) in rule.nodes() {
            cell += w * payoff.psi(curve[ell] + model.f0(tau[ell] + s * dtau));
        }
        acc += dtau * cell;
    }
    acc
}

/// Composite quadrature value together with its gradient and diagonal
/// Hessian with respect to the per-cell curve values. Off-diagonal second
/// derivatives vanish because each cell value enters only its own panel.
/// Entries for cells below `ℓ_a` are zero.
pub struct LambdaDerivs {
    pub value: f64,
    /// `∂Λ̄/∂curve[ℓ]`, one entry per maturity cell.
    pub grad: Vec<f64>,
    /// `∂²Λ̄/∂curve[ℓ]²`, one entry per maturity cell.
    pub diag: Vec<f64>,
}

pub fn composite_lambda_derivs(
    payoff: &Payoff,
    model: &HjmModel,
    grid: &Grid,
    rule: QuadratureRule,
    curve: &[f64],
) -> LambdaDerivs {
    debug_assert_eq!(curve.len(), grid.n_cells());
    let tau = grid.tau_nodes();
    let l = grid.n_cells();
    let mut value = 0.0;
    let mut grad = vec![0.0; l];
    let mut diag = vec![0.0; l];
    for ell in grid.ell_a()..l {
        let dtau = grid.dtau(ell);
        let (mut v, mut d1, mut d2) = (0.0, 0.0, 0.0);
        for &(s, w) in rule.nodes() {
            let z = curve[ell] + model.f0(tau[ell] + s * dtau);
            v += w * payoff.psi(z);
            d1 += w * payoff.psi_prime(z);
            d2 += w * payoff.psi_second(z);
        }
        value += dtau * v;
        grad[ell] = dtau * d1;
        diag[ell] = dtau * d2;
    }
    LambdaDerivs { value, grad, diag }
}

/// Contract value `F(Y)·G(Λ̄) + Z` read off a terminal state row laid out as
/// `[curve cells 0..L, Y, Z]`.
pub fn payoff_value(
    payoff: &Payoff,
    model: &HjmModel,
    grid: &Grid,
    rule: QuadratureRule,
    state: &[f64],
) -> f64 {
    let l = grid.n_cells();
    debug_assert_eq!(state.len(), l + 2);
    let lam = composite_lambda(payoff, model, grid, rule, &state[..l]);
    payoff.f(state[l]) * payoff.g(lam) + state[l + 1]
}
