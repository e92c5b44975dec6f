//! Latent similarity distributions and the separation `δ` between them.
//!
//! `δ = 2·P(w > w') − 1` for `w ∼ F_in`, `w' ∼ F_out` independent.

use rand::Rng;
use rand_distr::Distribution as _;
use statrs::distribution::{Beta, Continuous, ContinuousCDF, Normal};

use super::quadrature;
use crate::error::{Error, Result};

/// A continuous distribution on the real line.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DistributionSpec {
    Normal { mean: f64, stddev: f64 },
    Beta { alpha: f64, beta: f64 },
    Uniform01,
}

impl DistributionSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Normal { mean, stddev } => {
                if !mean.is_finite() || !(stddev > 0.0) || !stddev.is_finite() {
                    return Err(Error::InvalidDistribution(format!(
                        "normal needs finite mean and stddev > 0, got ({mean}, {stddev})"
                    )));
                }
            }
            Self::Beta { alpha, beta } => {
                if !(alpha > 0.0 && beta > 0.0) || !alpha.is_finite() || !beta.is_finite() {
                    return Err(Error::InvalidDistribution(format!(
                        "beta needs alpha > 0 and beta > 0, got ({alpha}, {beta})"
                    )));
                }
            }
            Self::Uniform01 => {}
        }
        Ok(())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Self::Normal { mean, stddev } => rand_distr::Normal::new(mean, stddev)
                .expect("validated normal")
                .sample(rng),
            Self::Beta { alpha, beta } => rand_distr::Beta::new(alpha, beta)
                .expect("validated beta")
                .sample(rng),
            Self::Uniform01 => rng.random::<f64>(),
        }
    }

    /// A sampler that skips re-validating parameters on every draw.
    pub fn sampler(&self) -> Result<Sampler> {
        self.validate()?;
        Ok(match *self {
            Self::Normal { mean, stddev } => Sampler::Normal(
                rand_distr::Normal::new(mean, stddev).map_err(|e| Error::InvalidDistribution(e.to_string()))?,
            ),
            Self::Beta { alpha, beta } => Sampler::Beta(
                rand_distr::Beta::new(alpha, beta).map_err(|e| Error::InvalidDistribution(e.to_string()))?,
            ),
            Self::Uniform01 => Sampler::Uniform,
        })
    }

    pub fn pdf(&self, x: f64) -> f64 {
        match *self {
            Self::Normal { mean, stddev } => Normal::new(mean, stddev).unwrap().pdf(x),
            Self::Beta { alpha, beta } => {
                if x <= 0.0 || x >= 1.0 {
                    0.0
                } else {
                    Beta::new(alpha, beta).unwrap().pdf(x)
                }
            }
            Self::Uniform01 => {
                if (0.0..=1.0).contains(&x) {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            Self::Normal { mean, stddev } => Normal::new(mean, stddev).unwrap().cdf(x),
            Self::Beta { alpha, beta } => Beta::new(alpha, beta).unwrap().cdf(x.clamp(0.0, 1.0)),
            Self::Uniform01 => x.clamp(0.0, 1.0),
        }
    }

    /// Interval holding all but a negligible amount of probability mass.
    fn effective_support(&self) -> (f64, f64) {
        match *self {
            Self::Normal { mean, stddev } => (mean - 12.0 * stddev, mean + 12.0 * stddev),
            Self::Beta { .. } | Self::Uniform01 => (0.0, 1.0),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub enum Sampler {
    Normal(rand_distr::Normal<f64>),
    Beta(rand_distr::Beta<f64>),
    Uniform,
}

impl Sampler {
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Self::Normal(d) => d.sample(rng),
            Self::Beta(d) => d.sample(rng),
            Self::Uniform => rng.random::<f64>(),
        }
    }
}

fn std_normal_cdf(x: f64) -> f64 {
    Normal::standard().cdf(x)
}

fn std_normal_pdf(x: f64) -> f64 {
    Normal::standard().pdf(x)
}

fn std_normal_quantile(p: f64) -> f64 {
    Normal::standard().inverse_cdf(p)
}

/// `P(w > U)` for `w ∼ N(mean, stddev²)`, `U ∼ Unif(0, 1)`, i.e. `E[clamp(w, 0, 1)]`.
fn normal_above_uniform(mean: f64, stddev: f64) -> f64 {
    let a = -mean / stddev;
    let b = (1.0 - mean) / stddev;
    stddev * (std_normal_pdf(a) - std_normal_pdf(b))
        + mean * (std_normal_cdf(b) - std_normal_cdf(a))
        + (1.0 - std_normal_cdf(b))
}

/// `P(w > w')` by quadrature of `∫ f_in(x) F_out(x) dx`.
pub fn prob_greater_by_quadrature(f_in: &DistributionSpec, f_out: &DistributionSpec) -> Result<f64> {
    f_in.validate()?;
    f_out.validate()?;
    let (lo, hi) = f_in.effective_support();
    quadrature::integrate(|x| f_in.pdf(x) * f_out.cdf(x), lo, hi, 1e-9)
}

/// Separation `δ` between `F_in` and `F_out`.
///
/// Closed forms cover normal/normal, beta/uniform and normal/uniform pairs (and
/// their mirrors); anything else falls back to quadrature.
pub fn delta_of_distributions(f_in: &DistributionSpec, f_out: &DistributionSpec) -> Result<f64> {
    use DistributionSpec::*;
    f_in.validate()?;
    f_out.validate()?;
    let prob = match (*f_in, *f_out) {
        (Normal { mean: m1, stddev: s1 }, Normal { mean: m2, stddev: s2 }) => {
            std_normal_cdf((m1 - m2) / (s1 * s1 + s2 * s2).sqrt())
        }
        (Beta { alpha, beta }, Uniform01) => alpha / (alpha + beta),
        (Uniform01, Beta { alpha, beta }) => beta / (alpha + beta),
        (Uniform01, Uniform01) => 0.5,
        (Normal { mean, stddev }, Uniform01) => normal_above_uniform(mean, stddev),
        (Uniform01, Normal { mean, stddev }) => 1.0 - normal_above_uniform(mean, stddev),
        _ => prob_greater_by_quadrature(f_in, f_out)?,
    };
    Ok(2.0 * prob - 1.0)
}

/// Parametric families used to dial in a target `δ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DistributionFamily {
    /// `F_in = N(μ, σ²)`, `F_out = N(0, σ²)`.
    NormalNormal { sigma: f64 },
    /// `F_in = Beta(α, β)`, `F_out = Unif(0, 1)`.
    BetaUniform { beta: f64 },
    /// `F_in = N(μ, 1)`, `F_out = Unif(0, 1)`.
    NormalUniform,
}

impl DistributionFamily {
    pub fn name(&self) -> &'static str {
        match self {
            Self::NormalNormal { .. } => "normal-normal",
            Self::BetaUniform { .. } => "beta-uniform",
            Self::NormalUniform => "normal-uniform",
        }
    }

    /// Parses `normal-normal`, `beta-uniform`, `normal-uniform` with the default
    /// parameters (σ = 0.1, β = 2).
    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "normal-normal" | "normal" | "gaussian" => Some(Self::NormalNormal { sigma: 0.1 }),
            "beta-uniform" | "beta" => Some(Self::BetaUniform { beta: 2.0 }),
            "normal-uniform" => Some(Self::NormalUniform),
            _ => None,
        }
    }
}

/// Picks `(F_in, F_out)` in `family` whose separation equals `delta`.
pub fn params_for_delta(
    family: DistributionFamily,
    delta: f64,
) -> Result<(DistributionSpec, DistributionSpec)> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::InvalidParameter(format!("delta must lie in (0, 1], got {delta}")));
    }
    let target = 0.5 * (1.0 + delta);
    match family {
        DistributionFamily::NormalNormal { sigma } => {
            if !(sigma > 0.0) {
                return Err(Error::InvalidParameter(format!("sigma must be > 0, got {sigma}")));
            }
            if delta >= 1.0 {
                return Err(Error::InvalidParameter(
                    "delta = 1 needs an infinite mean gap between two normals".into(),
                ));
            }
            let mean = std::f64::consts::SQRT_2 * sigma * std_normal_quantile(target);
            Ok((
                DistributionSpec::Normal { mean, stddev: sigma },
                DistributionSpec::Normal { mean: 0.0, stddev: sigma },
            ))
        }
        DistributionFamily::BetaUniform { beta } => {
            if !(beta > 0.0) {
                return Err(Error::InvalidParameter(format!("beta must be > 0, got {beta}")));
            }
            if delta >= 1.0 {
                return Err(Error::InvalidParameter(
                    "delta = 1 needs an unbounded alpha for beta/uniform".into(),
                ));
            }
            let alpha = beta * (1.0 + delta) / (1.0 - delta);
            Ok((DistributionSpec::Beta { alpha, beta }, DistributionSpec::Uniform01))
        }
        DistributionFamily::NormalUniform => {
            let mean = normal_uniform_mean(target)?;
            Ok((DistributionSpec::Normal { mean, stddev: 1.0 }, DistributionSpec::Uniform01))
        }
    }
}

/// Solves `P(N(μ,1) > U) = target` for `μ` by bisection.
fn normal_uniform_mean(target: f64) -> Result<f64> {
    let residual = |mu: f64| normal_above_uniform(mu, 1.0) - target;
    let (mut lo, mut hi) = (-40.0, 40.0);
    let (r_lo, r_hi) = (residual(lo), residual(hi));
    if r_lo > 0.0 || r_hi <= 0.0 {
        return Err(Error::Numerical(format!(
            "bisection for target probability {target} is not bracketed by [{lo}, {hi}]"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if residual(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo < 1e-14 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}
