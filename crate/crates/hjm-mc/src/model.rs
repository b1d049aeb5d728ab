//! Forward-rate model coefficients.
//!
//! A model supplies the separable volatility `σ(t,τ) = ξ(r(t))·λ(t,τ)`, the
//! induced drift factor `λ̃(t,τ) = λ(t,τ)·∫_t^τ λ(t,z) dz`, the initial curve
//! `f₀`, and the analytic derivatives of `ξ` the backward dual pass needs.
//! All four benchmark models are stationary in the sense that `λ(t,τ)`
//! depends only on `x = τ − t`; the formulas extend smoothly to `x < 0`,
//! which the scheme needs for maturity cells behind the running diagonal.
//!
//! No automatic differentiation: every derivative is closed-form and is
//! cross-checked against finite differences in the tests.

use crate::error::{Error, Result};
use crate::quad::adaptive_gauss;

/// Maximum number of driving Brownian factors over all models.
pub const MAX_FACTORS: usize = 2;

/// A per-factor row; entries past [`HjmModel::factors`] are zero.
pub type FactorRow = [f64; MAX_FACTORS];

/// Ho-Lee: constant volatility `ξ = σ`, `λ ≡ 1`, market-price term
/// `ϑ(s) = theta_scale·exp(−theta_rate·s)` folded into the initial curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HoLeeParams {
    pub r0: f64,
    pub sigma: f64,
    pub theta_scale: f64,
    pub theta_rate: f64,
}

/// Vasicek: constant volatility `ξ = σ`, exponentially damped maturity
/// profile `λ(x) = exp(−α·x)`, mean-reversion level `theta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VasicekParams {
    pub r0: f64,
    pub sigma: f64,
    pub alpha: f64,
    pub theta: f64,
}

/// Cox-Ingersoll-Ross: state-dependent volatility `ξ(x) = σ·√x` regularized
/// near zero by `delta`, maturity profile `ψ'` from the Riccati bond ODE.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CirParams {
    pub r0: f64,
    pub sigma: f64,
    pub alpha: f64,
    pub theta: f64,
    /// Regularization: `ξ²(x) = σ²·(x + √(x²+δ))/2`, smooth and positive.
    pub delta: f64,
}

/// Two-factor Gaussian: `ξ ≡ 1`, `λ(x) = (σ1, σ2·exp(−a2·x/2))`, initial
/// curve `f₀(τ) = b0 + b1·exp(−k·τ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoFactorParams {
    pub sigma1: f64,
    pub sigma2: f64,
    pub a2: f64,
    pub b0: f64,
    pub b1: f64,
    pub k: f64,
}

/// One of the supported forward-rate models.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HjmModel {
    HoLee(HoLeeParams),
    Vasicek(VasicekParams),
    Cir(CirParams),
    TwoFactor(TwoFactorParams),
}

impl HjmModel {
    /// `σ = 0` is allowed: the curve becomes deterministic and the Monte
    /// Carlo estimator degenerates to a single repeated sample, which is a
    /// useful smoke configuration (statistical error collapses to zero).
    pub fn ho_lee(p: HoLeeParams) -> Result<Self> {
        if !(p.sigma >= 0.0) || !p.r0.is_finite() || p.theta_rate < 0.0 {
            return Err(Error::InvalidParameter(format!("ho_lee: {p:?}")));
        }
        Ok(HjmModel::HoLee(p))
    }

    pub fn vasicek(p: VasicekParams) -> Result<Self> {
        if !(p.sigma >= 0.0) || !(p.alpha > 0.0) || !p.r0.is_finite() || !p.theta.is_finite() {
            return Err(Error::InvalidParameter(format!("vasicek: {p:?}")));
        }
        Ok(HjmModel::Vasicek(p))
    }

    pub fn cir(p: CirParams) -> Result<Self> {
        if !(p.sigma > 0.0) || !(p.alpha > 0.0) || !(p.delta > 0.0) || !(p.r0 >= 0.0) {
            return Err(Error::InvalidParameter(format!("cir: {p:?}")));
        }
        Ok(HjmModel::Cir(p))
    }

    pub fn two_factor(p: TwoFactorParams) -> Result<Self> {
        if !(p.sigma1 > 0.0) || !(p.sigma2 > 0.0) || !(p.a2 > 0.0) || !p.k.is_finite() {
            return Err(Error::InvalidParameter(format!("two_factor: {p:?}")));
        }
        Ok(HjmModel::TwoFactor(p))
    }

    /// Benchmark parameterization used throughout the tests: `r0 = 0.05`,
    /// `σ = 0.01`, `ϑ(s) = 0.1·exp(−s)`. Contract geometry: `t_max = 1`,
    /// `τ_max = 2`, `τ_a = 1`.
    pub fn ho_lee_benchmark() -> Self {
        HjmModel::HoLee(HoLeeParams {
            r0: 0.05,
            sigma: 0.01,
            theta_scale: 0.1,
            theta_rate: 1.0,
        })
    }

    /// Benchmark parameterization: `r0 = 0.03`, `α = 1`, `σ = 0.01`,
    /// `ϑ = 0.05`. Contract geometry: `t_max = τ_a = 0.3`, `τ_max = 6`.
    pub fn vasicek_benchmark() -> Self {
        HjmModel::Vasicek(VasicekParams {
            r0: 0.03,
            sigma: 0.01,
            alpha: 1.0,
            theta: 0.05,
        })
    }

    /// Benchmark parameterization: `r0 = 0.15`, `α = 1`, `σ = 0.1`,
    /// `ϑ = 0.05`. Contract geometry: `t_max = τ_a = 5`, `τ_max = 8`.
    pub fn cir_benchmark() -> Self {
        HjmModel::Cir(CirParams {
            r0: 0.15,
            sigma: 0.1,
            alpha: 1.0,
            theta: 0.05,
            delta: 1e-8,
        })
    }

    /// Benchmark parameterization: `σ1 = 0.02`, `σ2 = 0.01`, `a2 = 0.5`,
    /// `f₀(τ) = 0.0759 − 0.0439·exp(−0.4454·τ)`. Contract geometry:
    /// `t_max = τ_a = 1`, `τ_max = 3`.
    pub fn two_factor_benchmark() -> Self {
        HjmModel::TwoFactor(TwoFactorParams {
            sigma1: 0.02,
            sigma2: 0.01,
            a2: 0.5,
            b0: 0.0759,
            b1: -0.0439,
            k: 0.4454,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            HjmModel::HoLee(_) => "ho_lee",
            HjmModel::Vasicek(_) => "vasicek",
            HjmModel::Cir(_) => "cir",
            HjmModel::TwoFactor(_) => "two_factor",
        }
    }

    /// Number of driving Brownian factors.
    pub fn factors(&self) -> usize {
        match self {
            HjmModel::TwoFactor(_) => 2,
            _ => 1,
        }
    }

    /// Short-rate volatility scale `ξ(x)`.
    pub fn xi(&self, x: f64) -> f64 {
        match self {
            HjmModel::HoLee(p) => p.sigma,
            HjmModel::Vasicek(p) => p.sigma,
            HjmModel::Cir(p) => p.sigma * cir_h(x, p.delta).sqrt(),
            HjmModel::TwoFactor(_) => 1.0,
        }
    }

    /// `ξ'(x)`.
    pub fn xi_prime(&self, x: f64) -> f64 {
        match self {
            HjmModel::Cir(p) => {
                let h = cir_h(x, p.delta);
                p.sigma * cir_h_prime(x, p.delta) / (2.0 * h.sqrt())
            }
            _ => 0.0,
        }
    }

    /// `ξ''(x)`.
    pub fn xi_second(&self, x: f64) -> f64 {
        match self {
            HjmModel::Cir(p) => {
                let h = cir_h(x, p.delta);
                let hp = cir_h_prime(x, p.delta);
                let hpp = cir_h_second(x, p.delta);
                p.sigma * (hpp / (2.0 * h.sqrt()) - hp * hp / (4.0 * h.powf(1.5)))
            }
            _ => 0.0,
        }
    }

    /// `ξ²(x)`.
    pub fn xi_sq(&self, x: f64) -> f64 {
        match self {
            HjmModel::HoLee(p) => p.sigma * p.sigma,
            HjmModel::Vasicek(p) => p.sigma * p.sigma,
            HjmModel::Cir(p) => p.sigma * p.sigma * cir_h(x, p.delta),
            HjmModel::TwoFactor(_) => 1.0,
        }
    }

    /// `(ξ²)'(x)`.
    pub fn xi_sq_prime(&self, x: f64) -> f64 {
        match self {
            HjmModel::Cir(p) => p.sigma * p.sigma * cir_h_prime(x, p.delta),
            _ => 0.0,
        }
    }

    /// `(ξ²)''(x)`.
    pub fn xi_sq_second(&self, x: f64) -> f64 {
        match self {
            HjmModel::Cir(p) => p.sigma * p.sigma * cir_h_second(x, p.delta),
            _ => 0.0,
        }
    }

    /// Volatility maturity profile `λ(t,τ)`, one entry per factor.
    pub fn lambda(&self, t: f64, tau: f64) -> FactorRow {
        let x = tau - t;
        match self {
            HjmModel::HoLee(_) => [1.0, 0.0],
            HjmModel::Vasicek(p) => [(-p.alpha * x).exp(), 0.0],
            HjmModel::Cir(p) => [cir_psi_prime(x, p), 0.0],
            HjmModel::TwoFactor(p) => [p.sigma1, p.sigma2 * (-0.5 * p.a2 * x).exp()],
        }
    }

    /// Drift maturity profile `λ̃(t,τ) = λ(t,τ)·∫_t^τ λ(t,z) dz` in closed
    /// form. Vanishes at `τ = t` for every model.
    pub fn lambda_tilde(&self, t: f64, tau: f64) -> f64 {
        let x = tau - t;
        match self {
            HjmModel::HoLee(_) => x,
            HjmModel::Vasicek(p) => {
                let e = (-p.alpha * x).exp();
                e * (1.0 - e) / p.alpha
            }
            HjmModel::Cir(p) => cir_psi_prime(x, p) * cir_psi(x, p),
            HjmModel::TwoFactor(p) => {
                let e = (-0.5 * p.a2 * x).exp();
                p.sigma1 * p.sigma1 * x + 2.0 * p.sigma2 * p.sigma2 / p.a2 * e * (1.0 - e)
            }
        }
    }

    /// Initial forward curve `f₀(τ)`.
    pub fn f0(&self, tau: f64) -> f64 {
        match self {
            HjmModel::HoLee(p) => {
                p.r0 - 0.5 * p.sigma * p.sigma * tau * tau + theta_antiderivative(p, tau)
            }
            HjmModel::Vasicek(p) => {
                let e = (-p.alpha * tau).exp();
                let ta = p.theta / p.alpha;
                let s = 1.0 - e;
                (p.r0 - ta) * e + ta - 0.5 * p.sigma * p.sigma / (p.alpha * p.alpha) * s * s
            }
            HjmModel::Cir(p) => p.r0 * cir_psi_prime(tau, p) + p.theta * cir_psi(tau, p),
            HjmModel::TwoFactor(p) => p.b0 + p.b1 * (-p.k * tau).exp(),
        }
    }

    /// `f₀'(τ)`.
    pub fn f0_prime(&self, tau: f64) -> f64 {
        match self {
            HjmModel::HoLee(p) => {
                -p.sigma * p.sigma * tau + p.theta_scale * (-p.theta_rate * tau).exp()
            }
            HjmModel::Vasicek(p) => {
                let e = (-p.alpha * tau).exp();
                let ta = p.theta / p.alpha;
                -p.alpha * (p.r0 - ta) * e - p.sigma * p.sigma / p.alpha * (1.0 - e) * e
            }
            HjmModel::Cir(p) => p.r0 * cir_psi_second(tau, p) + p.theta * cir_psi_prime(tau, p),
            HjmModel::TwoFactor(p) => -p.k * p.b1 * (-p.k * tau).exp(),
        }
    }

    /// SDE drift coefficient `a(t,τ,x) = ξ²(x + f₀(t))·λ̃(t,τ)` where `x` is
    /// the deviation of the curve from `f₀` at the diagonal.
    pub fn drift_a(&self, t: f64, tau: f64, x: f64) -> f64 {
        self.xi_sq(x + self.f0(t)) * self.lambda_tilde(t, tau)
    }

    /// SDE diffusion coefficient `b(t,τ,x) = ξ(x + f₀(t))·λ(t,τ)` per factor.
    pub fn diffusion_b(&self, t: f64, tau: f64, x: f64) -> FactorRow {
        let s = self.xi(x + self.f0(t));
        let mut row = self.lambda(t, tau);
        for v in row.iter_mut() {
            *v *= s;
        }
        row
    }
}

/// `λ̃` by adaptive quadrature of the defining integral, for models or
/// regions with no registered closed form and as an independent check of the
/// closed forms above. Relative tolerance 1e-10.
pub fn lambda_tilde_numeric(model: &HjmModel, t: f64, tau: f64) -> Result<f64> {
    let mut acc = 0.0;
    for j in 0..model.factors() {
        let lam_j = model.lambda(t, tau)[j];
        let integral = adaptive_gauss(&|z: f64| model.lambda(t, z)[j], t, tau, 1e-10)?;
        acc += lam_j * integral;
    }
    Ok(acc)
}

/// `∫_0^τ ϑ(s) ds` for the Ho-Lee market-price term, in closed form.
fn theta_antiderivative(p: &HoLeeParams, tau: f64) -> f64 {
    if p.theta_rate == 0.0 {
        p.theta_scale * tau
    } else {
        p.theta_scale / p.theta_rate * (1.0 - (-p.theta_rate * tau).exp())
    }
}

// --- CIR auxiliaries ------------------------------------------------------

/// Smooth positive-part regularization `h(x) = (x + √(x²+δ))/2`, so that
/// `ξ² = σ²·h` tends to `σ²·max(x,0)` as `δ → 0`.
fn cir_h(x: f64, delta: f64) -> f64 {
    0.5 * (x + (x * x + delta).sqrt())
}

fn cir_h_prime(x: f64, delta: f64) -> f64 {
    0.5 * (1.0 + x / (x * x + delta).sqrt())
}

fn cir_h_second(x: f64, delta: f64) -> f64 {
    0.5 * delta / (x * x + delta).powf(1.5)
}

fn cir_gamma(p: &CirParams) -> f64 {
    0.5 * (2.0 * p.sigma * p.sigma + p.alpha * p.alpha).sqrt()
}

/// Ratio `q = (sinh(γx) + (α/2γ)cosh(γx)) / (cosh(γx) + (α/2γ)sinh(γx))`,
/// evaluated in tanh form so it stays bounded for large |x|.
fn cir_q(x: f64, p: &CirParams) -> f64 {
    let g = cir_gamma(p);
    let a = p.alpha / (2.0 * g);
    let th = (g * x).tanh();
    (th + a) / (1.0 + a * th)
}

/// Bond-exponent slope `ψ` with `ψ(0) = 0`, `ψ'(0) = 1`; solves the Riccati
/// equation `ψ' = 1 − α·ψ − σ²ψ²/2`.
fn cir_psi(x: f64, p: &CirParams) -> f64 {
    let g = cir_gamma(p);
    let s2 = p.sigma * p.sigma;
    -p.alpha / s2 + 2.0 * g / s2 * cir_q(x, p)
}

fn cir_psi_prime(x: f64, p: &CirParams) -> f64 {
    let g = cir_gamma(p);
    let q = cir_q(x, p);
    2.0 * g * g / (p.sigma * p.sigma) * (1.0 - q * q)
}

fn cir_psi_second(x: f64, p: &CirParams) -> f64 {
    let g = cir_gamma(p);
    let q = cir_q(x, p);
    -4.0 * g * g * g / (p.sigma * p.sigma) * q * (1.0 - q * q)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all_benchmarks() -> Vec<HjmModel> {
        vec![
            HjmModel::ho_lee_benchmark(),
            HjmModel::vasicek_benchmark(),
            HjmModel::cir_benchmark(),
            HjmModel::two_factor_benchmark(),
        ]
    }

    /// Time horizon over which each benchmark model is exercised, matching
    /// its contract geometry (t_max, tau_max).
    fn horizon(model: &HjmModel) -> (f64, f64) {
        match model {
            HjmModel::HoLee(_) => (1.0, 2.0),
            HjmModel::Vasicek(_) => (0.3, 6.0),
            HjmModel::Cir(_) => (5.0, 8.0),
            HjmModel::TwoFactor(_) => (1.0, 3.0),
        }
    }

    #[test]
    fn lambda_tilde_vanishes_on_diagonal() {
        for model in all_benchmarks() {
            let (t_max, _) = horizon(&model);
            for i in 0..=10 {
                let t = t_max * i as f64 / 10.0;
                let v = model.lambda_tilde(t, t);
                assert!(
                    v.abs() < 1e-14,
                    "{}: lambda_tilde({t},{t}) = {v}",
                    model.name()
                );
            }
        }
    }

    #[test]
    fn lambda_tilde_closed_forms_match_quadrature() {
        // 20×20 sample over the extended domain [0,t_max]×[0,tau_max],
        // including maturities behind the diagonal.
        for model in all_benchmarks() {
            let (t_max, tau_max) = horizon(&model);
            for i in 0..20 {
                for j in 0..20 {
                    let t = t_max * i as f64 / 19.0;
                    let tau = tau_max * j as f64 / 19.0;
                    let closed = model.lambda_tilde(t, tau);
                    let numeric = lambda_tilde_numeric(&model, t, tau).unwrap();
                    let tol = 1e-8 * closed.abs().max(1e-6);
                    assert!(
                        (closed - numeric).abs() <= tol,
                        "{}: lambda_tilde({t},{tau}) closed {closed} vs numeric {numeric}",
                        model.name()
                    );
                }
            }
        }
    }

    #[test]
    fn initial_curve_starts_at_short_rate() {
        let checks = [
            (HjmModel::ho_lee_benchmark(), 0.05),
            (HjmModel::vasicek_benchmark(), 0.03),
            (HjmModel::cir_benchmark(), 0.15),
            (HjmModel::two_factor_benchmark(), 0.0759 - 0.0439),
        ];
        for (model, r0) in checks {
            let v = model.f0(0.0);
            assert!(
                (v - r0).abs() < 1e-12,
                "{}: f0(0) = {v}, want {r0}",
                model.name()
            );
        }
    }

    #[test]
    fn cir_psi_boundary_and_riccati() {
        let HjmModel::Cir(p) = HjmModel::cir_benchmark() else {
            unreachable!()
        };
        assert!(cir_psi(0.0, &p).abs() < 1e-14);
        assert!((cir_psi_prime(0.0, &p) - 1.0).abs() < 1e-13);
        // B(t;τ) = ψ(τ−t) must satisfy ∂_t B = σ²B²/2 + αB − 1, checked by
        // centered finite differences in t.
        let h = 1e-6;
        for k in 0..40 {
            let x: f64 = -5.0 + 13.0 * k as f64 / 39.0; // τ − t over the extended domain
            let dbdt = (cir_psi(x - h, &p) - cir_psi(x + h, &p)) / (2.0 * h);
            let b = cir_psi(x, &p);
            let rhs = 0.5 * p.sigma * p.sigma * b * b + p.alpha * b - 1.0;
            assert!(
                (dbdt - rhs).abs() < 1e-6 * rhs.abs().max(1.0),
                "riccati residual at x = {x}: {dbdt} vs {rhs}"
            );
        }
    }

    #[test]
    fn cir_regularization_limits() {
        let mk = |delta: f64| CirParams {
            delta,
            ..match HjmModel::cir_benchmark() {
                HjmModel::Cir(p) => p,
                _ => unreachable!(),
            }
        };
        // ξ(0) = σ·(δ/4)^{1/4}.
        let p = mk(1e-8);
        let m = HjmModel::Cir(p);
        let expect = p.sigma * (p.delta / 4.0).powf(0.25);
        assert!((m.xi(0.0) - expect).abs() < 1e-15);
        // ξ²(x) → σ²·max(x,0) as δ → 0.
        for x in [-0.01, 0.01] {
            let tight = HjmModel::Cir(mk(1e-14)).xi_sq(x);
            let target = p.sigma * p.sigma * x.max(0.0);
            assert!(
                (tight - target).abs() < 1e-9,
                "xi_sq({x}) = {tight} vs {target}"
            );
        }
    }

    #[test]
    fn analytic_derivatives_match_finite_differences() {
        let h = 1e-6;
        for model in all_benchmarks() {
            let (_, tau_max) = horizon(&model);
            for k in 0..12 {
                let x = 0.01 + 0.3 * k as f64 / 11.0;
                let fd1 = (model.xi_sq(x + h) - model.xi_sq(x - h)) / (2.0 * h);
                assert!((fd1 - model.xi_sq_prime(x)).abs() < 2e-4 * fd1.abs().max(1.0));
                let fd2 =
                    (model.xi_sq(x + h) - 2.0 * model.xi_sq(x) + model.xi_sq(x - h)) / (h * h);
                assert!(
                    (fd2 - model.xi_sq_second(x)).abs() < 5e-3 * fd2.abs().max(1.0),
                    "{} xi_sq'' at {x}: fd {fd2} vs {}",
                    model.name(),
                    model.xi_sq_second(x)
                );
                let fdx = (model.xi(x + h) - model.xi(x - h)) / (2.0 * h);
                assert!((fdx - model.xi_prime(x)).abs() < 2e-4 * fdx.abs().max(1.0));
                let fdxx = (model.xi(x + h) - 2.0 * model.xi(x) + model.xi(x - h)) / (h * h);
                assert!((fdxx - model.xi_second(x)).abs() < 5e-3 * fdxx.abs().max(1.0));

                let tau = tau_max * k as f64 / 11.0;
                let fd0 = (model.f0(tau + h) - model.f0(tau - h)) / (2.0 * h);
                assert!(
                    (fd0 - model.f0_prime(tau)).abs() < 1e-5 * fd0.abs().max(1.0),
                    "{} f0' at {tau}",
                    model.name()
                );
            }
        }
    }

    #[test]
    fn diffusion_is_xi_times_lambda() {
        let model = HjmModel::two_factor_benchmark();
        let b = model.diffusion_b(0.5, 2.0, 0.01);
        let lam = model.lambda(0.5, 2.0);
        let s = model.xi(0.01 + model.f0(0.5));
        assert_eq!(b[0], s * lam[0]);
        assert_eq!(b[1], s * lam[1]);
    }

    #[test]
    fn invalid_parameters_rejected() {
        let err = HjmModel::ho_lee(HoLeeParams {
            r0: 0.05,
            sigma: -0.01,
            theta_scale: 0.1,
            theta_rate: 1.0,
        });
        assert!(err.is_err());
        let err = HjmModel::cir(CirParams {
            r0: 0.1,
            sigma: 0.1,
            alpha: 1.0,
            theta: 0.05,
            delta: 0.0,
        });
        assert!(err.is_err());
        // zero volatility is a legal deterministic limit, not an error
        let ok = HjmModel::ho_lee(HoLeeParams {
            r0: 0.05,
            sigma: 0.0,
            theta_scale: 0.1,
            theta_rate: 1.0,
        });
        assert!(ok.is_ok());
    }
}
