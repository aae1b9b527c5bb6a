use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::rng::{open_unit, std_exp};
use crate::special::{gamma_p, gamma_q};

/// Declared tail regime of a claim law.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailClass {
    LightTailed,
    SubexponentialIntegratedTail,
}

#[derive(Debug, Clone)]
pub enum ClaimKind {
    Exponential { mean: f64 },
    /// Lomax form: tail (1 + x/scale)^(-shape).
    Pareto { shape: f64, scale: f64 },
    Gamma { shape: f64, scale: f64, law: Gamma<f64>, size_biased: Gamma<f64> },
    Mixture(Vec<(f64, ClaimDistribution)>),
}

/// A positive claim-size law with its analytic functionals.
#[derive(Debug, Clone)]
pub struct ClaimDistribution {
    kind: ClaimKind,
    tail_class: TailClass,
    mean: f64,
    r_max: Option<f64>,
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(domain(format!("{name} must be finite and positive, got {v}")))
    }
}

impl ClaimDistribution {
    pub fn exponential(mean: f64) -> Result<Self> {
        let mean = positive("exponential mean", mean)?;
        Ok(ClaimDistribution {
            kind: ClaimKind::Exponential { mean },
            tail_class: TailClass::LightTailed,
            mean,
            r_max: Some(1.0 / mean),
        })
    }

    pub fn pareto(shape: f64, scale: f64) -> Result<Self> {
        let scale = positive("pareto scale", scale)?;
        if !(shape.is_finite() && shape > 1.0) {
            return Err(domain(format!("pareto shape must exceed 1 for a finite mean, got {shape}")));
        }
        Ok(ClaimDistribution {
            kind: ClaimKind::Pareto { shape, scale },
            tail_class: TailClass::SubexponentialIntegratedTail,
            mean: scale / (shape - 1.0),
            r_max: None,
        })
    }

    pub fn gamma(shape: f64, scale: f64) -> Result<Self> {
        let shape = positive("gamma shape", shape)?;
        let scale = positive("gamma scale", scale)?;
        let law = Gamma::new(shape, scale).map_err(|e| domain(e.to_string()))?;
        let size_biased = Gamma::new(shape + 1.0, scale).map_err(|e| domain(e.to_string()))?;
        Ok(ClaimDistribution {
            kind: ClaimKind::Gamma {
                shape,
                scale,
                law,
                size_biased,
            },
            tail_class: TailClass::LightTailed,
            mean: shape * scale,
            r_max: Some(1.0 / scale),
        })
    }

    /// Finite mixture; weights must be positive and sum to one.
    pub fn mixture(components: Vec<(f64, ClaimDistribution)>) -> Result<Self> {
        if components.is_empty() {
            return Err(domain("mixture needs at least one component"));
        }
        let mut total = 0.0;
        for (w, _) in &components {
            positive("mixture weight", *w)?;
            total += w;
        }
        if (total - 1.0).abs() > 1e-9 {
            return Err(domain(format!("mixture weights sum to {total}, expected 1")));
        }
        let mean = components.iter().map(|(w, d)| w * d.mean).sum();
        let heavy = components
            .iter()
            .any(|(_, d)| d.tail_class == TailClass::SubexponentialIntegratedTail);
        let r_max = if heavy {
            None
        } else {
            components
                .iter()
                .filter_map(|(_, d)| d.r_max)
                .reduce(f64::min)
        };
        Ok(ClaimDistribution {
            kind: ClaimKind::Mixture(components),
            tail_class: if heavy {
                TailClass::SubexponentialIntegratedTail
            } else {
                TailClass::LightTailed
            },
            mean,
            r_max,
        })
    }

    /// Confirm a declared tail class. Declarations contradicting the catalog
    /// (a light tail with a Pareto component, or the reverse) are rejected.
    pub fn with_declared_tail_class(self, declared: TailClass) -> Result<Self> {
        if declared != self.tail_class {
            return Err(domain(format!(
                "declared tail class {declared:?} contradicts the claim law, which is {:?}",
                self.tail_class
            )));
        }
        Ok(self)
    }

    pub fn kind(&self) -> &ClaimKind {
        &self.kind
    }

    pub fn tail_class(&self) -> TailClass {
        self.tail_class
    }

    pub fn is_light_tailed(&self) -> bool {
        self.tail_class == TailClass::LightTailed
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Right end of the mgf's domain of finiteness; `None` for heavy tails.
    pub fn r_max(&self) -> Option<f64> {
        self.r_max
    }

    /// F̄(x).
    pub fn tail(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 1.0;
        }
        match &self.kind {
            ClaimKind::Exponential { mean } => (-x / mean).exp(),
            ClaimKind::Pareto { shape, scale } => (1.0 + x / scale).powf(-shape),
            ClaimKind::Gamma { shape, scale, .. } => gamma_q(*shape, x / scale),
            ClaimKind::Mixture(parts) => parts.iter().map(|(w, d)| w * d.tail(x)).sum(),
        }
    }

    /// F(x), computed directly rather than as 1 − F̄ to keep small values accurate.
    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        match &self.kind {
            ClaimKind::Exponential { mean } => -(-x / mean).exp_m1(),
            ClaimKind::Pareto { shape, scale } => -(-shape * (x / scale).ln_1p()).exp_m1(),
            ClaimKind::Gamma { shape, scale, .. } => gamma_p(*shape, x / scale),
            ClaimKind::Mixture(parts) => parts.iter().map(|(w, d)| w * d.cdf(x)).sum(),
        }
    }

    /// F̄_I(x) = 1 − (1/μ)∫₀ˣ F̄(y) dy.
    pub fn integrated_tail(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 1.0;
        }
        match &self.kind {
            ClaimKind::Exponential { mean } => (-x / mean).exp(),
            ClaimKind::Pareto { shape, scale } => (1.0 + x / scale).powf(1.0 - shape),
            ClaimKind::Gamma { shape, scale, .. } => {
                // E[(X − x)⁺] / E[X]
                let y = x / scale;
                (gamma_q(shape + 1.0, y) - y / shape * gamma_q(*shape, y)).max(0.0)
            }
            ClaimKind::Mixture(parts) => {
                parts
                    .iter()
                    .map(|(w, d)| w * d.mean * d.integrated_tail(x))
                    .sum::<f64>()
                    / self.mean
            }
        }
    }

    /// F_I(x).
    pub fn integrated_cdf(&self, x: f64) -> f64 {
        1.0 - self.integrated_tail(x)
    }

    fn require_mgf(&self, r: f64) -> Result<f64> {
        let r_max = self.r_max.ok_or_else(|| {
            domain("moment generating function is infinite for a heavy-tailed claim law")
        })?;
        if !(r < r_max) || !r.is_finite() {
            return Err(domain(format!("mgf argument {r} outside (-inf, {r_max})")));
        }
        Ok(r_max)
    }

    /// M(r) − 1, evaluated without cancellation near r = 0.
    pub fn mgf_minus_one(&self, r: f64) -> Result<f64> {
        self.require_mgf(r)?;
        Ok(self.mgf_minus_one_unchecked(r))
    }

    fn mgf_minus_one_unchecked(&self, r: f64) -> f64 {
        match &self.kind {
            ClaimKind::Exponential { mean } => mean * r / (1.0 - mean * r),
            ClaimKind::Gamma { shape, scale, .. } => (-shape * (-scale * r).ln_1p()).exp_m1(),
            ClaimKind::Mixture(parts) => parts
                .iter()
                .map(|(w, d)| w * d.mgf_minus_one_unchecked(r))
                .sum(),
            ClaimKind::Pareto { .. } => f64::INFINITY,
        }
    }

    /// M(r) = E[e^{rX}].
    pub fn mgf(&self, r: f64) -> Result<f64> {
        Ok(1.0 + self.mgf_minus_one(r)?)
    }

    /// M′(r) = E[X e^{rX}].
    pub fn mgf_derivative(&self, r: f64) -> Result<f64> {
        self.require_mgf(r)?;
        Ok(self.mgf_derivative_unchecked(r))
    }

    fn mgf_derivative_unchecked(&self, r: f64) -> f64 {
        match &self.kind {
            ClaimKind::Exponential { mean } => mean / (1.0 - mean * r).powi(2),
            ClaimKind::Gamma { shape, scale, .. } => {
                shape * scale * (1.0 - scale * r).powf(-shape - 1.0)
            }
            ClaimKind::Mixture(parts) => parts
                .iter()
                .map(|(w, d)| w * d.mgf_derivative_unchecked(r))
                .sum(),
            ClaimKind::Pareto { .. } => f64::INFINITY,
        }
    }

    /// Light-tailed laws as a mixture of gamma components `(weight, shape, scale)`.
    /// Exponential(μ) is Gamma(1, μ).
    pub(crate) fn gamma_components(&self) -> Option<Vec<(f64, f64, f64)>> {
        match &self.kind {
            ClaimKind::Exponential { mean } => Some(vec![(1.0, 1.0, *mean)]),
            ClaimKind::Gamma { shape, scale, .. } => Some(vec![(1.0, *shape, *scale)]),
            ClaimKind::Pareto { .. } => None,
            ClaimKind::Mixture(parts) => {
                let mut out = Vec::new();
                for (w, d) in parts {
                    for (v, k, s) in d.gamma_components()? {
                        out.push((w * v, k, s));
                    }
                }
                Some(out)
            }
        }
    }

    /// Draw a claim size.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.kind {
            ClaimKind::Exponential { mean } => mean * std_exp(rng),
            ClaimKind::Pareto { shape, scale } => scale * (open_unit(rng).powf(-1.0 / shape) - 1.0),
            ClaimKind::Gamma { law, .. } => law.sample(rng),
            ClaimKind::Mixture(parts) => pick(parts, rng, |w, _| w).sample(rng),
        }
    }

    /// Draw from the integrated-tail law F_I (the ladder-height law).
    pub fn sample_integrated_tail<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.kind {
            ClaimKind::Exponential { mean } => mean * std_exp(rng),
            ClaimKind::Pareto { shape, scale } => {
                scale * (open_unit(rng).powf(-1.0 / (shape - 1.0)) - 1.0)
            }
            // uniform fraction of the size-biased law Gamma(k + 1, s)
            ClaimKind::Gamma { size_biased, .. } => open_unit(rng) * size_biased.sample(rng),
            ClaimKind::Mixture(parts) => {
                pick(parts, rng, |w, d| w * d.mean / self.mean).sample_integrated_tail(rng)
            }
        }
    }
}

fn pick<'a, R: Rng + ?Sized>(
    parts: &'a [(f64, ClaimDistribution)],
    rng: &mut R,
    weight: impl Fn(f64, &ClaimDistribution) -> f64,
) -> &'a ClaimDistribution {
    let target: f64 = rng.random();
    let mut acc = 0.0;
    for (w, d) in parts {
        acc += weight(*w, d);
        if target < acc {
            return d;
        }
    }
    &parts[parts.len() - 1].1
}
