//! Closed-form reference values and brute-force cross-checks.
//!
//! For the models with state-independent volatility (Ho-Lee, Vasicek,
//! two-factor) the forward curve is Gaussian and the bond-contract
//! functionals have closed forms. This module computes them two ways:
//!
//! * a small exponential-polynomial calculus ([`ExpPoly`]) that carries the
//!   exact antiderivatives through the moment integrals, and
//! * independently derived per-model formulas for the linear contract
//!   ([`ho_lee_linear_reference`], [`vasicek_linear_reference`]).
//!
//! On top of that, [`brute_force_value`] simulates the *exact* solution of
//! the forward equation (no Euler error — the Gaussian models have explicit
//! solutions driven by a Brownian motion or an Ornstein-Uhlenbeck factor)
//! and integrates the functional by trapezoid rules on fine grids. It is
//! slow and only lightly biased, which makes it a good referee whenever the
//! closed forms and the engine disagree.

use crate::error::{Error, Result};
use crate::estimator::run_samples;
use crate::model::HjmModel;
use crate::payoff::Payoff;
use crate::rng::PathRng;
use statrs::distribution::{ContinuousCDF, Normal};

/// One term `c * x^k * exp(gamma * x)`.
#[derive(Clone, Copy, Debug)]
struct Atom {
    c: f64,
    k: u32,
    gamma: f64,
}

/// A finite sum of `c * x^k * exp(gamma * x)` terms.
///
/// Everything the Gaussian moment integrals need — products, affine
/// substitutions, antiderivatives — stays inside this class of functions,
/// so the moments come out in closed form up to rounding.
#[derive(Clone, Debug, Default)]
pub struct ExpPoly {
    terms: Vec<Atom>,
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

fn binomial(n: u32, m: u32) -> f64 {
    factorial(n) / (factorial(m) * factorial(n - m))
}

impl ExpPoly {
    pub fn zero() -> Self {
        ExpPoly { terms: Vec::new() }
    }

    pub fn constant(c: f64) -> Self {
        ExpPoly::atom(c, 0, 0.0)
    }

    /// The single term `c * x^k * exp(gamma * x)`.
    pub fn atom(c: f64, k: u32, gamma: f64) -> Self {
        ExpPoly {
            terms: vec![Atom { c, k, gamma }],
        }
        .normalized()
    }

    fn normalized(mut self) -> Self {
        self.terms
            .sort_by(|a, b| a.gamma.total_cmp(&b.gamma).then(a.k.cmp(&b.k)));
        let mut merged: Vec<Atom> = Vec::with_capacity(self.terms.len());
        for t in self.terms {
            match merged.last_mut() {
                Some(last)
                    if last.k == t.k
                        && (last.gamma - t.gamma).abs() <= 1e-12 * last.gamma.abs().max(1.0) =>
                {
                    last.c += t.c;
                }
                _ => merged.push(t),
            }
        }
        merged.retain(|t| t.c != 0.0);
        ExpPoly { terms: merged }
    }

    pub fn add(&self, other: &ExpPoly) -> ExpPoly {
        let mut terms = self.terms.clone();
        terms.extend_from_slice(&other.terms);
        ExpPoly { terms }.normalized()
    }

    pub fn scale(&self, s: f64) -> ExpPoly {
        ExpPoly {
            terms: self
                .terms
                .iter()
                .map(|t| Atom { c: t.c * s, ..*t })
                .collect(),
        }
        .normalized()
    }

    pub fn mul(&self, other: &ExpPoly) -> ExpPoly {
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for a in &self.terms {
            for b in &other.terms {
                terms.push(Atom {
                    c: a.c * b.c,
                    k: a.k + b.k,
                    gamma: a.gamma + b.gamma,
                });
            }
        }
        ExpPoly { terms }.normalized()
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.terms
            .iter()
            .map(|t| t.c * x.powi(t.k as i32) * (t.gamma * x).exp())
            .sum()
    }

    /// An antiderivative (integration constant unspecified).
    ///
    /// `∫ x^k e^{γx} dx = e^{γx} Σ_{i=0..k} (−1)^i k!/(k−i)! x^{k−i}/γ^{i+1}`
    /// for `γ ≠ 0`, and `x^{k+1}/(k+1)` for `γ = 0`.
    pub fn antiderivative(&self) -> ExpPoly {
        let mut terms = Vec::new();
        for t in &self.terms {
            if t.gamma == 0.0 {
                terms.push(Atom {
                    c: t.c / (t.k + 1) as f64,
                    k: t.k + 1,
                    gamma: 0.0,
                });
            } else {
                for i in 0..=t.k {
                    let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                    let coef =
                        sign * factorial(t.k) / factorial(t.k - i) / t.gamma.powi(i as i32 + 1);
                    terms.push(Atom {
                        c: t.c * coef,
                        k: t.k - i,
                        gamma: t.gamma,
                    });
                }
            }
        }
        ExpPoly { terms }.normalized()
    }

    /// The antiderivative that vanishes at `a`.
    pub fn antiderivative_zero_at(&self, a: f64) -> ExpPoly {
        let f = self.antiderivative();
        let shift = ExpPoly::constant(-f.eval(a));
        f.add(&shift)
    }

    pub fn definite_integral(&self, a: f64, b: f64) -> f64 {
        let f = self.antiderivative();
        f.eval(b) - f.eval(a)
    }

    /// Substitute `x ↦ alpha + beta * x`.
    pub fn compose_affine(&self, alpha: f64, beta: f64) -> ExpPoly {
        let mut terms = Vec::new();
        for t in &self.terms {
            let scale = t.c * (t.gamma * alpha).exp();
            for m in 0..=t.k {
                terms.push(Atom {
                    c: scale
                        * binomial(t.k, m)
                        * alpha.powi((t.k - m) as i32)
                        * beta.powi(m as i32),
                    k: m,
                    gamma: t.gamma * beta,
                });
            }
        }
        ExpPoly { terms }.normalized()
    }
}

/// Volatility scale, factor loadings `λ_{0,j}(x)` and initial curve `f₀(τ)`
/// of a Gaussian (state-independent volatility) model, as exponential
/// polynomials.
struct GaussianSpec {
    vol: f64,
    loadings: Vec<ExpPoly>,
    f0: ExpPoly,
}

fn gaussian_spec(model: &HjmModel) -> Result<GaussianSpec> {
    match model {
        HjmModel::HoLee(p) => {
            let mut f0 = ExpPoly::atom(-0.5 * p.sigma * p.sigma, 2, 0.0);
            if p.theta_rate == 0.0 {
                f0 = f0
                    .add(&ExpPoly::constant(p.r0))
                    .add(&ExpPoly::atom(p.theta_scale, 1, 0.0));
            } else {
                let ck = p.theta_scale / p.theta_rate;
                f0 = f0.add(&ExpPoly::constant(p.r0 + ck)).add(&ExpPoly::atom(
                    -ck,
                    0,
                    -p.theta_rate,
                ));
            }
            Ok(GaussianSpec {
                vol: p.sigma,
                loadings: vec![ExpPoly::constant(1.0)],
                f0,
            })
        }
        HjmModel::Vasicek(p) => {
            let a = p.alpha;
            let s2 = p.sigma * p.sigma;
            let f0 = ExpPoly::constant(p.theta / a - 0.5 * s2 / (a * a))
                .add(&ExpPoly::atom(p.r0 - p.theta / a + s2 / (a * a), 0, -a))
                .add(&ExpPoly::atom(-0.5 * s2 / (a * a), 0, -2.0 * a));
            Ok(GaussianSpec {
                vol: p.sigma,
                loadings: vec![ExpPoly::atom(1.0, 0, -a)],
                f0,
            })
        }
        HjmModel::TwoFactor(p) => {
            let f0 = ExpPoly::constant(p.b0).add(&ExpPoly::atom(p.b1, 0, -p.k));
            Ok(GaussianSpec {
                vol: 1.0,
                loadings: vec![
                    ExpPoly::constant(p.sigma1),
                    ExpPoly::atom(p.sigma2, 0, -0.5 * p.a2),
                ],
                f0,
            })
        }
        HjmModel::Cir(_) => Err(Error::UnsupportedModel(
            "square-root volatility has no Gaussian closed form".into(),
        )),
    }
}

/// First and second moments of `Y = ∫₀^T f(s,s) ds` and
/// `X = ∫_{τa}^{τm} f(T,τ) dτ` under a Gaussian model.
#[derive(Clone, Copy, Debug)]
pub struct GaussianMoments {
    pub mu_y: f64,
    pub mu_x: f64,
    pub var_y: f64,
    pub var_x: f64,
    pub cov_xy: f64,
}

/// Exact joint moments of the discount integral `Y` and the terminal curve
/// integral `X` for a Gaussian model on the contract geometry
/// `(t_max, tau_a, tau_max)`.
pub fn gaussian_moments(
    model: &HjmModel,
    t_max: f64,
    tau_a: f64,
    tau_max: f64,
) -> Result<GaussianMoments> {
    let spec = gaussian_spec(model)?;
    let c2 = spec.vol * spec.vol;

    // λ̃₀ = Σ_j λ_{0,j} · ∫₀^x λ_{0,j}, then Λ̃₁(s) = ∫₀^s λ̃₀.
    let mut lambda_tilde = ExpPoly::zero();
    for lam in &spec.loadings {
        lambda_tilde = lambda_tilde.add(&lam.mul(&lam.antiderivative_zero_at(0.0)));
    }
    let big_lambda = lambda_tilde.antiderivative_zero_at(0.0);

    let mu_y =
        spec.f0.definite_integral(0.0, t_max) + c2 * big_lambda.definite_integral(0.0, t_max);
    let mu_x = spec.f0.definite_integral(tau_a, tau_max)
        + c2 * (big_lambda.definite_integral(tau_a, tau_max)
            - big_lambda.definite_integral(tau_a - t_max, tau_max - t_max));

    let mut var_y = 0.0;
    let mut var_x = 0.0;
    let mut cov_xy = 0.0;
    for lam in &spec.loadings {
        let p = lam.antiderivative_zero_at(0.0);
        // D_j(u) = ∫_u^T λ_{0,j}(s−u) ds, E_j(u) = ∫_{τa}^{τm} λ_{0,j}(τ−u) dτ.
        let d = p
            .compose_affine(t_max, -1.0)
            .add(&ExpPoly::constant(-p.eval(0.0)));
        let e = p
            .compose_affine(tau_max, -1.0)
            .add(&p.compose_affine(tau_a, -1.0).scale(-1.0));
        var_y += c2 * d.mul(&d).definite_integral(0.0, t_max);
        var_x += c2 * e.mul(&e).definite_integral(0.0, t_max);
        cov_xy += c2 * d.mul(&e).definite_integral(0.0, t_max);
    }

    Ok(GaussianMoments {
        mu_y,
        mu_x,
        var_y,
        var_x,
        cov_xy,
    })
}

/// `E[(1 − Y) X]` — the exact value of the linear contract.
pub fn exact_linear_value(model: &HjmModel, t_max: f64, tau_a: f64, tau_max: f64) -> Result<f64> {
    let m = gaussian_moments(model, t_max, tau_a, tau_max)?;
    Ok((1.0 - m.mu_y) * m.mu_x - m.cov_xy)
}

/// `E[e^{−Y} (e^{−X} − K)⁺]` — the exact value of the call contract.
///
/// With `(X, Y)` jointly Gaussian the expectation splits into two tilted
/// Gaussian tail probabilities:
/// `e^{−μ_{X+Y}+σ²_{X+Y}/2} Φ(d₁) − K e^{−μ_Y+σ²_Y/2} Φ(d₂)` with
/// `d₁ = (x* − μ_X + Cov(X, X+Y))/σ_X`, `d₂ = (x* − μ_X + Cov(X, Y))/σ_X`
/// and `x* = −ln K` (the payoff is in the money for `X < x*`).
pub fn exact_call_value(
    model: &HjmModel,
    strike: f64,
    t_max: f64,
    tau_a: f64,
    tau_max: f64,
) -> Result<f64> {
    if strike <= 0.0 {
        return Err(Error::InvalidParameter(
            "call strike must be positive".into(),
        ));
    }
    let m = gaussian_moments(model, t_max, tau_a, tau_max)?;
    let sigma_x = m.var_x.sqrt();
    if sigma_x <= 0.0 {
        return Err(Error::InvalidParameter(
            "degenerate terminal-curve variance".into(),
        ));
    }
    let x_star = -strike.ln();
    let std_normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mu_sum = m.mu_x + m.mu_y;
    let var_sum = m.var_x + m.var_y + 2.0 * m.cov_xy;
    let d1 = (x_star - m.mu_x + m.var_x + m.cov_xy) / sigma_x;
    let d2 = (x_star - m.mu_x + m.cov_xy) / sigma_x;
    Ok((-mu_sum + 0.5 * var_sum).exp() * std_normal.cdf(d1)
        - strike * (-m.mu_y + 0.5 * m.var_y).exp() * std_normal.cdf(d2))
}

/// Exact value of the supported contracts, dispatching on the payoff.
pub fn exact_functional(
    model: &HjmModel,
    payoff: &Payoff,
    t_max: f64,
    tau_a: f64,
    tau_max: f64,
) -> Result<f64> {
    match payoff {
        Payoff::Linear => exact_linear_value(model, t_max, tau_a, tau_max),
        Payoff::Call { strike } => exact_call_value(model, *strike, t_max, tau_a, tau_max),
        Payoff::Cap { .. } => Err(Error::UnsupportedPayoff(
            "no closed form for the coupon contract".into(),
        )),
    }
}

/// `∫_a^b f₀(τ) dτ` in closed form (Gaussian models only).
pub fn initial_curve_integral(model: &HjmModel, a: f64, b: f64) -> Result<f64> {
    let spec = gaussian_spec(model)?;
    Ok(spec.f0.definite_integral(a, b))
}

/// `Var f(t,τ) = c² Σ_j ∫_{τ−t}^{τ} λ_{0,j}(v)² dv` (Gaussian models only).
pub fn forward_variance(model: &HjmModel, t: f64, tau: f64) -> Result<f64> {
    let spec = gaussian_spec(model)?;
    let c2 = spec.vol * spec.vol;
    let mut var = 0.0;
    for lam in &spec.loadings {
        var += c2 * lam.mul(lam).definite_integral(tau - t, tau);
    }
    Ok(var)
}

/// Independently derived linear-contract value for the Ho-Lee model, from
/// the explicit solution `f(t,τ) = r0 − σ²(τ−t)²/2 + Θ(τ) + σW_t` with
/// `Θ(τ) = ∫₀^τ ϑ`:
/// `(1 − μ_Y) μ_X − σ² (τm − τa) T²/2`.
pub fn ho_lee_linear_reference(
    model: &HjmModel,
    t_max: f64,
    tau_a: f64,
    tau_max: f64,
) -> Result<f64> {
    let p = match model {
        HjmModel::HoLee(p) => p,
        _ => return Err(Error::UnsupportedModel("Ho-Lee reference formula".into())),
    };
    let (c, k) = (p.theta_scale, p.theta_rate);
    let theta_int = |s: f64| {
        if k == 0.0 {
            0.5 * c * s * s
        } else {
            (c / k) * (s + ((-k * s).exp() - 1.0) / k)
        }
    };
    let s2 = p.sigma * p.sigma;
    let mu_y = p.r0 * t_max + theta_int(t_max);
    let mu_x = p.r0 * (tau_max - tau_a)
        - s2 / 6.0 * ((tau_max - t_max).powi(3) - (tau_a - t_max).powi(3))
        + theta_int(tau_max)
        - theta_int(tau_a);
    let cov = s2 * (tau_max - tau_a) * t_max * t_max / 2.0;
    Ok((1.0 - mu_y) * mu_x - cov)
}

/// Independently derived linear-contract value for the Vasicek model with
/// `τa = T`, from the explicit Ornstein-Uhlenbeck solution.
pub fn vasicek_linear_reference(model: &HjmModel, t_max: f64, tau_max: f64) -> Result<f64> {
    let p = match model {
        HjmModel::Vasicek(p) => p,
        _ => return Err(Error::UnsupportedModel("Vasicek reference formula".into())),
    };
    let (a, s2) = (p.alpha, p.sigma * p.sigma);
    let (t, r) = (t_max, tau_max - t_max);
    let mu_y = p.theta * t / a + (p.r0 - p.theta / a) * (1.0 - (-a * t).exp()) / a;
    let tail = r - 2.0 * (1.0 - (-a * r).exp()) / a + (1.0 - (-2.0 * a * r).exp()) / (2.0 * a);
    let mu_x = (p.r0 - p.theta / a) * ((-a * t).exp() - (-a * tau_max).exp()) / a + p.theta * r / a
        - 0.5 * s2 / (a * a) * tail;
    let cov = s2 * (1.0 - (-a * t).exp()).powi(2) * (1.0 - (-a * r).exp()) / (2.0 * a * a * a);
    Ok((1.0 - mu_y) * mu_x - cov)
}

/// Driving state of the explicit solutions: a Brownian level and/or an
/// Ornstein-Uhlenbeck factor, depending on the model.
#[derive(Clone, Copy, Debug, Default)]
pub struct ExactDriver {
    pub w: f64,
    pub zeta: f64,
}

impl ExactDriver {
    pub fn zero() -> Self {
        ExactDriver { w: 0.0, zeta: 0.0 }
    }

    /// Advance the driver by `dt` using standard normal draws `z` (exact
    /// transition, no discretization error).
    pub fn step(&mut self, model: &HjmModel, dt: f64, z: [f64; 2]) -> Result<()> {
        match model {
            HjmModel::HoLee(_) => {
                self.w += dt.sqrt() * z[0];
            }
            HjmModel::Vasicek(p) => {
                let decay = (-p.alpha * dt).exp();
                let sd = p.sigma * ((1.0 - decay * decay) / (2.0 * p.alpha)).sqrt();
                self.zeta = self.zeta * decay + sd * z[0];
            }
            HjmModel::TwoFactor(p) => {
                self.w += dt.sqrt() * z[0];
                let beta = 0.5 * p.a2;
                let decay = (-beta * dt).exp();
                let sd = p.sigma2 * ((1.0 - decay * decay) / (2.0 * beta)).sqrt();
                self.zeta = self.zeta * decay + sd * z[1];
            }
            HjmModel::Cir(_) => {
                return Err(Error::UnsupportedModel(
                    "no explicit solution for square-root volatility".into(),
                ))
            }
        }
        Ok(())
    }
}

/// The exact forward rate `f(t,τ)` given the driver state at time `t`.
pub fn exact_forward(model: &HjmModel, t: f64, tau: f64, driver: &ExactDriver) -> Result<f64> {
    match model {
        HjmModel::HoLee(p) => {
            let theta = if p.theta_rate == 0.0 {
                p.theta_scale * tau
            } else {
                (p.theta_scale / p.theta_rate) * (1.0 - (-p.theta_rate * tau).exp())
            };
            Ok(p.r0 - 0.5 * p.sigma * p.sigma * (tau - t) * (tau - t) + theta + p.sigma * driver.w)
        }
        HjmModel::Vasicek(p) => {
            let a = p.alpha;
            let e = (-a * (tau - t)).exp();
            Ok(
                e * ((-a * t).exp() * (p.r0 - p.theta / a) + driver.zeta) + p.theta / a
                    - 0.5 * p.sigma * p.sigma / (a * a) * (1.0 - e) * (1.0 - e),
            )
        }
        HjmModel::TwoFactor(p) => {
            let beta = 0.5 * p.a2;
            let (e1, e2) = ((-beta * (tau - t)).exp(), (-beta * tau).exp());
            let drift = 0.5 * p.sigma1 * p.sigma1 * (tau * tau - (tau - t) * (tau - t))
                + (2.0 * p.sigma2 * p.sigma2 / p.a2)
                    * ((e1 - e2) / beta - (e1 * e1 - e2 * e2) / (2.0 * beta));
            Ok(p.b0 + p.b1 * (-p.k * tau).exp() + drift + p.sigma1 * driver.w + e1 * driver.zeta)
        }
        HjmModel::Cir(_) => Err(Error::UnsupportedModel(
            "no explicit solution for square-root volatility".into(),
        )),
    }
}

/// A brute-force Monte Carlo estimate with its standard error.
#[derive(Clone, Copy, Debug)]
pub struct BruteForceEstimate {
    pub value: f64,
    pub std_error: f64,
}

/// Estimate the contract value by simulating the exact solution and
/// integrating `Y` and `X` with trapezoid rules on `k_t`/`k_tau` uniform
/// panels. The only systematic error is the `O(Δ²)` trapezoid bias.
#[allow(clippy::too_many_arguments)]
pub fn brute_force_value(
    model: &HjmModel,
    payoff: &Payoff,
    t_max: f64,
    tau_a: f64,
    tau_max: f64,
    paths: u64,
    k_t: usize,
    k_tau: usize,
    seed: u64,
) -> Result<BruteForceEstimate> {
    if matches!(payoff, Payoff::Cap { .. }) {
        return Err(Error::UnsupportedPayoff(
            "coupon contracts are not supported by the brute-force referee".into(),
        ));
    }
    if paths == 0 || k_t == 0 || k_tau == 0 {
        return Err(Error::InvalidConfig(
            "brute-force referee needs paths, k_t and k_tau all positive".into(),
        ));
    }
    let dt = t_max / k_t as f64;
    let stats = run_samples(paths, 1, 0, |id| {
        let mut rng = PathRng::new(seed, id);
        let mut driver = ExactDriver::zero();
        let mut y = 0.5 * exact_forward(model, 0.0, 0.0, &driver)?;
        for k in 1..=k_t {
            let z = [rng.standard_normal(), rng.standard_normal()];
            driver.step(model, dt, z)?;
            let weight = if k == k_t { 0.5 } else { 1.0 };
            let t = k as f64 * dt;
            y += weight * exact_forward(model, t, t, &driver)?;
        }
        y *= dt;

        let dtau = (tau_max - tau_a) / k_tau as f64;
        let mut x = 0.0;
        for k in 0..=k_tau {
            let weight = if k == 0 || k == k_tau { 0.5 } else { 1.0 };
            x += weight * exact_forward(model, t_max, tau_a + k as f64 * dtau, &driver)?;
        }
        x *= dtau;

        Ok(vec![payoff.f(y) * payoff.g(x)])
    })?;
    Ok(BruteForceEstimate {
        value: stats.mean[0],
        std_error: stats.std_error(0),
    })
}
