//! Run configuration: a TOML file describing one pricing run, plus the
//! command-line overrides layered on top of it.
//!
//! A file names the model, the contract, the grid geometry and the Monte
//! Carlo parameters. Every benchmark table in `configs/` is one such file,
//! so a run is reproducible from the repository alone. Command-line flags
//! override individual keys; `--model` swaps in a complete benchmark
//! preset when no file is given.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Deserialize;

use hjm_mc::{
    CirParams, Grid, HjmModel, HoLeeParams, Payoff, QuadratureRule, Scheme, TwoFactorParams,
    VasicekParams,
};

/// Model section of a run configuration; `kind` selects the variant.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModelConfig {
    HoLee {
        r0: f64,
        sigma: f64,
        theta_scale: f64,
        theta_rate: f64,
    },
    Vasicek {
        r0: f64,
        sigma: f64,
        alpha: f64,
        theta: f64,
    },
    Cir {
        r0: f64,
        sigma: f64,
        alpha: f64,
        theta: f64,
        #[serde(default = "default_delta")]
        delta: f64,
    },
    TwoFactor {
        sigma1: f64,
        sigma2: f64,
        a2: f64,
        b0: f64,
        b1: f64,
        k: f64,
    },
}

fn default_delta() -> f64 {
    1e-8
}

impl ModelConfig {
    pub fn build(&self) -> Result<HjmModel> {
        let model = match *self {
            ModelConfig::HoLee {
                r0,
                sigma,
                theta_scale,
                theta_rate,
            } => HjmModel::ho_lee(HoLeeParams {
                r0,
                sigma,
                theta_scale,
                theta_rate,
            }),
            ModelConfig::Vasicek {
                r0,
                sigma,
                alpha,
                theta,
            } => HjmModel::vasicek(VasicekParams {
                r0,
                sigma,
                alpha,
                theta,
            }),
            ModelConfig::Cir {
                r0,
                sigma,
                alpha,
                theta,
                delta,
            } => HjmModel::cir(CirParams {
                r0,
                sigma,
                alpha,
                theta,
                delta,
            }),
            ModelConfig::TwoFactor {
                sigma1,
                sigma2,
                a2,
                b0,
                b1,
                k,
            } => HjmModel::two_factor(TwoFactorParams {
                sigma1,
                sigma2,
                a2,
                b0,
                b1,
                k,
            }),
        };
        Ok(model?)
    }
}

/// Payoff section; `kind` is `linear`, `call` or `cap`.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PayoffConfig {
    #[default]
    Linear,
    Call {
        strike: f64,
    },
    Cap {
        cap_rate: f64,
    },
}

impl PayoffConfig {
    pub fn build(&self) -> Result<Payoff> {
        let payoff = match *self {
            PayoffConfig::Linear => Payoff::Linear,
            PayoffConfig::Call { strike } => Payoff::call(strike)?,
            PayoffConfig::Cap { cap_rate } => Payoff::cap(cap_rate)?,
        };
        Ok(payoff)
    }
}

/// How the maturity partition relates to the time partition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GridStyle {
    /// Maturity nodes on `[0, t_max]` coincide with the time nodes and `l`
    /// more cells cover `(t_max, tau_max]`. Always satisfies the nesting
    /// requirement; this is the layout of all benchmark tables.
    Diagonal,
    /// `n` uniform time steps and `l` uniform maturity cells. Valid only
    /// when every time node lands on a maturity node.
    Uniform,
}

/// Grid section: time steps, maturity cells and the contract geometry.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default = "default_style")]
    pub style: GridStyle,
    /// Time steps on `[0, t_max]`.
    pub n: usize,
    /// Diagonal style: maturity cells beyond `t_max`. Uniform style: total
    /// maturity cells on `[0, tau_max]`.
    pub l: usize,
    pub t_max: f64,
    pub tau_max: f64,
    pub tau_a: f64,
}

fn default_style() -> GridStyle {
    GridStyle::Diagonal
}

impl GridConfig {
    pub fn build(&self) -> Result<Grid> {
        let grid = match self.style {
            GridStyle::Diagonal => {
                Grid::diagonal_nested(self.n, self.l, self.t_max, self.tau_max, self.tau_a)
            }
            GridStyle::Uniform => {
                Grid::uniform(self.n, self.l, self.t_max, self.tau_max, self.tau_a)
            }
        };
        Ok(grid?)
    }

    /// The same geometry refined to `n_new` time steps, with the maturity
    /// resolution scaled proportionally so cell aspect ratios are kept.
    pub fn scaled(&self, n_new: usize) -> Result<GridConfig> {
        if n_new == 0 {
            bail!("refinement level must be positive");
        }
        let num = self.l * n_new;
        if num % self.n != 0 {
            bail!(
                "level {} does not scale the base grid ({} steps, {} cells) to whole cells",
                n_new,
                self.n,
                self.l
            );
        }
        Ok(GridConfig {
            n: n_new,
            l: num / self.n,
            ..self.clone()
        })
    }
}

/// Monte Carlo and scheme parameters.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    /// `efd` steps nodal coefficients; `efe` steps cell-averaged ones.
    #[serde(default = "default_scheme")]
    pub scheme: String,
    /// Maturity quadrature: `simpson` or `gauss2`.
    #[serde(default = "default_rule")]
    pub rule: String,
    /// Paths for the price estimate.
    #[serde(default = "default_m")]
    pub m: u64,
    /// Paths for the backward error estimate; defaults to `m`. Zero skips
    /// the backward pass.
    pub m_dual: Option<u64>,
    #[serde(default)]
    pub seed: u64,
    /// Confidence multiplier for every statistical band.
    #[serde(default = "default_c0")]
    pub c0: f64,
    #[serde(default = "default_true")]
    pub antithetic: bool,
    /// Optional target for the price band; the run doubles the path count
    /// until it is met and fails if that would exceed the path budget.
    pub tol_stat: Option<f64>,
    /// CSV destination; stdout always gets the rendered table.
    pub output: Option<PathBuf>,
    /// Reference value for the `exact` column, overriding the built-in
    /// closed forms. Useful for self-reference studies.
    pub exact_value: Option<f64>,
}

fn default_scheme() -> String {
    "efd".into()
}

fn default_rule() -> String {
    "simpson".into()
}

fn default_m() -> u64 {
    10_000
}

fn default_c0() -> f64 {
    1.65
}

fn default_true() -> bool {
    true
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            scheme: default_scheme(),
            rule: default_rule(),
            m: default_m(),
            m_dual: None,
            seed: 0,
            c0: default_c0(),
            antithetic: true,
            tol_stat: None,
            output: None,
            exact_value: None,
        }
    }
}

impl RunSection {
    pub fn m_dual(&self) -> u64 {
        self.m_dual.unwrap_or(self.m)
    }
}

/// Refinement levels for the `study` subcommand, as time-step counts.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudySection {
    pub levels: Vec<usize>,
}

/// Parameters of the `strong-order` subcommand.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrongOrderSection {
    /// Time-step counts swept in the time direction.
    #[serde(default = "default_time_levels")]
    pub time_levels: Vec<usize>,
    /// Fixed number of maturity cells beyond `t_max` in the time direction.
    #[serde(default = "default_tail_cells")]
    pub tail_cells: usize,
    /// Tail cell counts swept in the maturity direction.
    #[serde(default = "default_maturity_levels")]
    pub maturity_levels: Vec<usize>,
    /// Fixed number of time steps in the maturity direction.
    #[serde(default = "default_n_fixed")]
    pub n_fixed: usize,
    /// Paths per level in the time direction (the maturity direction is
    /// deterministic).
    #[serde(default = "default_strong_m")]
    pub m: u64,
}

fn default_time_levels() -> Vec<usize> {
    vec![8, 16, 32, 64]
}

fn default_tail_cells() -> usize {
    64
}

fn default_maturity_levels() -> Vec<usize> {
    vec![8, 16, 32, 64]
}

fn default_n_fixed() -> usize {
    256
}

fn default_strong_m() -> u64 {
    4_000
}

impl Default for StrongOrderSection {
    fn default() -> Self {
        StrongOrderSection {
            time_levels: default_time_levels(),
            tail_cells: default_tail_cells(),
            maturity_levels: default_maturity_levels(),
            n_fixed: default_n_fixed(),
            m: default_strong_m(),
        }
    }
}

/// A complete run description, as read from a TOML file.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    #[serde(default)]
    pub payoff: PayoffConfig,
    pub grid: GridConfig,
    #[serde(default)]
    pub run: RunSection,
    pub study: Option<StudySection>,
    pub strong_order: Option<StrongOrderSection>,
}

pub fn parse_scheme(s: &str) -> Result<Scheme> {
    match s {
        "efd" | "nodal" => Ok(Scheme::Nodal),
        "efe" | "projected" => Ok(Scheme::Projected),
        other => bail!("unknown scheme {other:?}; expected efd or efe"),
    }
}

pub fn parse_rule(s: &str) -> Result<QuadratureRule> {
    match s {
        "simpson" => Ok(QuadratureRule::Simpson),
        "gauss2" => Ok(QuadratureRule::Gauss2),
        other => bail!("unknown quadrature rule {other:?}; expected simpson or gauss2"),
    }
}

/// Command-line values layered over the file; every field is optional.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    /// Benchmark preset name; replaces model, payoff and geometry.
    pub model: Option<String>,
    pub scheme: Option<String>,
    pub n: Option<usize>,
    pub l: Option<usize>,
    pub m: Option<u64>,
    pub m_dual: Option<u64>,
    pub seed: Option<u64>,
    pub c0: Option<f64>,
    /// `on` or `off`.
    pub antithetic: Option<String>,
    pub tol_stat: Option<f64>,
    pub out: Option<PathBuf>,
}

/// The four benchmark presets: model parameters, contract geometry, payoff
/// and customary path counts, selectable with `--model` alone.
pub fn preset(name: &str) -> Result<RunConfig> {
    let (model, payoff, grid, m, levels) = match name {
        "ho-lee" => (
            ModelConfig::HoLee {
                r0: 0.05,
                sigma: 0.01,
                theta_scale: 0.1,
                theta_rate: 1.0,
            },
            PayoffConfig::Linear,
            GridConfig {
                style: GridStyle::Diagonal,
                n: 5,
                l: 5,
                t_max: 1.0,
                tau_max: 2.0,
                tau_a: 1.0,
            },
            40_000,
            vec![5, 10, 20],
        ),
        "vasicek" => (
            ModelConfig::Vasicek {
                r0: 0.03,
                sigma: 0.01,
                alpha: 1.0,
                theta: 0.05,
            },
            PayoffConfig::Linear,
            GridConfig {
                style: GridStyle::Diagonal,
                n: 5,
                l: 5,
                t_max: 0.3,
                tau_max: 6.0,
                tau_a: 0.3,
            },
            40_000,
            vec![5, 10, 20],
        ),
        "cir" => (
            ModelConfig::Cir {
                r0: 0.15,
                sigma: 0.1,
                alpha: 1.0,
                theta: 0.05,
                delta: 1e-8,
            },
            PayoffConfig::Call { strike: 0.5 },
            GridConfig {
                style: GridStyle::Diagonal,
                n: 5,
                l: 3,
                t_max: 5.0,
                tau_max: 8.0,
                tau_a: 5.0,
            },
            2_000,
            vec![5, 10, 20],
        ),
        "two-factor" => (
            ModelConfig::TwoFactor {
                sigma1: 0.02,
                sigma2: 0.01,
                a2: 0.5,
                b0: 0.0759,
                b1: -0.0439,
                k: 0.4454,
            },
            PayoffConfig::Call { strike: 0.5 },
            GridConfig {
                style: GridStyle::Diagonal,
                n: 5,
                l: 5,
                t_max: 1.0,
                tau_max: 3.0,
                tau_a: 1.0,
            },
            40_000,
            vec![5, 10],
        ),
        other => bail!("unknown preset {other:?}; expected ho-lee, vasicek, cir or two-factor"),
    };
    Ok(RunConfig {
        model,
        payoff,
        grid,
        run: RunSection {
            m,
            ..RunSection::default()
        },
        study: Some(StudySection { levels }),
        strong_order: None,
    })
}

/// Read the configuration file (or take a preset) and apply the overrides.
pub fn load(path: Option<&Path>, ov: &Overrides) -> Result<RunConfig> {
    let mut cfg = match (path, &ov.model) {
        (Some(p), _) => {
            let text =
                std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            let mut cfg: RunConfig =
                toml::from_str(&text).with_context(|| format!("parsing {}", p.display()))?;
            // a preset on top of a file replaces the contract wholesale
            if let Some(name) = &ov.model {
                let pre = preset(name)?;
                cfg.model = pre.model;
                cfg.payoff = pre.payoff;
                cfg.grid = pre.grid;
            }
            cfg
        }
        (None, Some(name)) => preset(name)?,
        (None, None) => bail!("either --config or --model is required"),
    };

    if let Some(s) = &ov.scheme {
        parse_scheme(s)?;
        cfg.run.scheme = s.clone();
    }
    if let Some(n) = ov.n {
        cfg.grid.n = n;
    }
    if let Some(l) = ov.l {
        cfg.grid.l = l;
    }
    if let Some(m) = ov.m {
        cfg.run.m = m;
    }
    if let Some(md) = ov.m_dual {
        cfg.run.m_dual = Some(md);
    }
    if let Some(seed) = ov.seed {
        cfg.run.seed = seed;
    }
    if let Some(c0) = ov.c0 {
        cfg.run.c0 = c0;
    }
    if let Some(a) = &ov.antithetic {
        cfg.run.antithetic = match a.as_str() {
            "on" => true,
            "off" => false,
            other => bail!("--antithetic takes on or off, not {other:?}"),
        };
    }
    if let Some(tol) = ov.tol_stat {
        cfg.run.tol_stat = Some(tol);
    }
    if let Some(out) = &ov.out {
        cfg.run.output = Some(out.clone());
    }
    Ok(cfg)
}
