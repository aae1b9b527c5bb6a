//! Adjustment coefficients, Cramér constants, the limiting overshoot law and
//! the asymptotic predictions for classical and modified ruin.

use serde::Serialize;

use crate::distributions::TailClass;
use crate::error::{domain, Error, Result};
use crate::ladder::RiskModel;
use crate::quadrature::{integrate, Tolerance};
use crate::rules::{BoundaryFunction, HypothesisReport, Theorem};

pub use crate::special::gamma as gamma_function;

/// Steps for the central differences behind D₁.
pub const DERIVATIVE_STEPS: (f64, f64) = (1e-4, 5e-5);
/// Relative agreement required between the Richardson value and the finer step.
pub const DERIVATIVE_TOLERANCE: f64 = 1e-6;

const ROOT_RESIDUAL: f64 = 1e-12;

/// a(ℓ) = ℓμ/(c − ℓμ).
pub fn heavy_prefactor(model: &RiskModel, intensity: f64) -> Result<f64> {
    model.check_intensity(intensity)?;
    let m = intensity * model.claim().mean();
    Ok(m / (model.premium_rate() - m))
}

fn require_light(model: &RiskModel) -> Result<()> {
    if model.claim().is_light_tailed() {
        Ok(())
    } else {
        Err(domain("adjustment coefficient needs a light-tailed claim law"))
    }
}

/// The positive root R of ℓ(M(r) − 1) = c r.
///
/// κ(r) = ℓ(M(r) − 1) − c r is convex with κ(0) = 0 and κ′(0) = ℓμ − c < 0, so
/// Newton iteration started right of the root decreases monotonically onto it.
/// A bisection bracket guards every step.
pub fn adjustment_coefficient(model: &RiskModel, intensity: f64) -> Result<f64> {
    require_light(model)?;
    if !(intensity > 0.0 && intensity.is_finite()) {
        return Err(domain(format!("adjustment coefficient needs a positive intensity, got {intensity}")));
    }
    let claim = model.claim();
    let c = model.premium_rate();
    if model.loading(intensity) >= 1.0 {
        return Err(Error::NoRoot(format!(
            "ℓμ = {} is not below c = {c}",
            intensity * claim.mean()
        )));
    }
    let r_max = claim.r_max().expect("light tail has r_max");
    let kappa = |r: f64| -> Result<f64> { Ok(intensity * claim.mgf_minus_one(r)? - c * r) };
    let slope = |r: f64| -> Result<f64> { Ok(intensity * claim.mgf_derivative(r)? - c) };

    let mut lo = 0.0;
    let mut hi = f64::NAN;
    for j in 1..=200 {
        let r = r_max * (1.0 - 0.5f64.powi(j));
        if kappa(r)? > 0.0 {
            hi = r;
            break;
        }
        lo = r;
    }
    if hi.is_nan() {
        return Err(Error::NoRoot(format!("no sign change of the Lundberg function below r_max = {r_max}")));
    }

    let mut r = hi;
    for _ in 0..200 {
        let k = kappa(r)?;
        if k == 0.0 {
            break;
        }
        if k > 0.0 {
            hi = r;
        } else {
            lo = r;
        }
        let d = slope(r)?;
        let mut next = r - k / d;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        if (next - r).abs() <= 4.0 * f64::EPSILON * r {
            r = next;
            break;
        }
        r = next;
    }
    let residual = kappa(r)?.abs();
    if residual >= ROOT_RESIDUAL * c * r || !(r > 0.0) {
        return Err(Error::NoRoot(format!(
            "Lundberg residual {residual:e} at r = {r} exceeds {ROOT_RESIDUAL:e}·cR"
        )));
    }
    Ok(r)
}

/// |ℓ(M(R) − 1) − cR| for a computed root.
pub fn lundberg_residual(model: &RiskModel, intensity: f64, r: f64) -> Result<f64> {
    Ok((intensity * model.claim().mgf_minus_one(r)? - model.premium_rate() * r).abs())
}

/// c_ℓ = (c − ℓμ)/(ℓM′(R) − c).
pub fn cramer_constant(model: &RiskModel, intensity: f64) -> Result<f64> {
    let r = adjustment_coefficient(model, intensity)?;
    cramer_constant_at(model, intensity, r)
}

fn cramer_constant_at(model: &RiskModel, intensity: f64, r: f64) -> Result<f64> {
    let c = model.premium_rate();
    let den = intensity * model.claim().mgf_derivative(r)? - c;
    if !(den > 0.0) {
        return Err(Error::DegenerateDenominator(format!("ℓM′(R) − c = {den} at ℓ = {intensity}")));
    }
    Ok((c - intensity * model.claim().mean()) / den)
}

/// Tolerance for the convolution integrals of the overshoot tail.
const CONVOLUTION_TOL: Tolerance = Tolerance {
    abs: 1e-14,
    rel: 1e-13,
    max_subdivisions: 1 << 15,
};

/// Distance from [0, 1] tolerated (and clamped) in a computed tail value.
const CLAMP_SLACK: f64 = 1e-9;

/// The limiting law ν_ℓ of the deficit given ruin as u → ∞, through its tail
/// T(x) = ν_ℓ((−∞, −x]).
#[derive(Debug, Clone)]
pub struct OvershootLaw<'a> {
    model: &'a RiskModel,
    intensity: f64,
    r: f64,
}

impl<'a> OvershootLaw<'a> {
    pub fn new(model: &'a RiskModel, intensity: f64) -> Result<Self> {
        let r = adjustment_coefficient(model, intensity)?;
        Ok(OvershootLaw { model, intensity, r })
    }

    pub fn adjustment_coefficient(&self) -> f64 {
        self.r
    }

    /// ∫_a^b e^{−R(b−z)} F̄(z) dz.
    fn convolution_piece(&self, a: f64, b: f64) -> Result<f64> {
        let r = self.r;
        let claim = self.model.claim();
        Ok(integrate(|z| (-r * (b - z)).exp() * claim.tail(z), a, b, CONVOLUTION_TOL)?.value)
    }

    fn combine(&self, x: f64, conv: f64) -> Result<f64> {
        let c = self.model.premium_rate();
        let l = self.intensity;
        let mu = self.model.claim().mean();
        let v = (c * (-self.r * x).exp() - l * conv - l * mu * self.model.claim().integrated_tail(x))
            / (c - l * mu);
        if !(v > -CLAMP_SLACK && v < 1.0 + CLAMP_SLACK) {
            return Err(Error::Numeric(format!("overshoot tail {v} at x = {x} outside [0, 1]")));
        }
        Ok(v.clamp(0.0, 1.0))
    }

    /// T(x) = (c e^{−Rx} − ℓ∫₀ˣ e^{−R(x−z)}F̄(z)dz − ℓμF̄_I(x)) / (c − ℓμ).
    pub fn tail(&self, x: f64) -> Result<f64> {
        if !(x >= 0.0 && x.is_finite()) {
            return Err(domain(format!("overshoot tail needs a finite x >= 0, got {x}")));
        }
        let conv = self.convolution_piece(0.0, x)?;
        self.combine(x, conv)
    }

    /// T on an increasing grid starting at 0, carrying the convolution forward
    /// from node to node.
    pub fn tail_on_grid(&self, grid: &[f64]) -> Result<Vec<f64>> {
        if grid.first() != Some(&0.0) || grid.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(domain("overshoot grid must start at 0 and increase strictly"));
        }
        let mut out = Vec::with_capacity(grid.len());
        let mut conv = 0.0;
        out.push(self.combine(0.0, 0.0)?);
        for w in grid.windows(2) {
            conv = (-self.r * (w[1] - w[0])).exp() * conv + self.convolution_piece(w[0], w[1])?;
            out.push(self.combine(w[1], conv)?);
        }
        Ok(out)
    }
}

/// ν_ℓ((−∞, −x]).
pub fn overshoot_limit_tail(model: &RiskModel, intensity: f64, x: f64) -> Result<f64> {
    OvershootLaw::new(model, intensity)?.tail(x)
}

/// Points on [0, x_max], geometric spacing from x_max·1e−3 scale, with the
/// breakpoints merged in.
fn graded_grid(x_max: f64, n: usize, breakpoints: &[f64]) -> Vec<f64> {
    // x_i = x_max (q^i − 1)/(q^n − 1), q^n = 1e3
    let span = 1e3f64.ln();
    let den = span.exp_m1();
    let mut g: Vec<f64> = (0..=n)
        .map(|i| x_max * (span * i as f64 / n as f64).exp_m1() / den)
        .collect();
    g[n] = x_max;
    g.extend(breakpoints.iter().copied().filter(|&b| b > 0.0 && b < x_max));
    g.sort_by(f64::total_cmp);
    g.dedup();
    g
}

const TAIL_CUTOFF: f64 = 1e-8;
const RATIO_TOLERANCE: f64 = 1e-6;
const INITIAL_POINTS: usize = 1 << 12;
const MAX_POINTS: usize = 1 << 21;

/// C_ℓ = ∫ w dν_ℓ by a midpoint Stieltjes sum on a refined grid.
pub fn limiting_ratio_constant(model: &RiskModel, intensity: f64, rule: &BoundaryFunction) -> Result<f64> {
    rule.check_hypotheses(Theorem::LightFixed).into_result()?;
    let law = OvershootLaw::new(model, intensity)?;
    let mu = model.claim().mean();

    let mut x_max = 16.0 * mu;
    while law.tail(x_max)? >= TAIL_CUTOFF {
        x_max *= 2.0;
        if x_max > 1e6 * mu {
            return Err(Error::Numeric("overshoot tail does not fall below 1e-8".into()));
        }
    }

    let breakpoints = rule.breakpoints();
    let stieltjes = |n: usize| -> Result<f64> {
        let grid = graded_grid(x_max, n, &breakpoints);
        let tail = law.tail_on_grid(&grid)?;
        let mut sum = 0.0;
        for i in 1..grid.len() {
            let mid = 0.5 * (grid[i - 1] + grid[i]);
            sum += rule.weight_at_deficit(mid) * (tail[i - 1] - tail[i]);
        }
        // mass beyond x_max
        sum += rule.weight_at_deficit(x_max) * tail[tail.len() - 1];
        Ok(sum)
    };

    let mut n = INITIAL_POINTS;
    let mut prev = stieltjes(n)?;
    loop {
        n *= 2;
        let next = stieltjes(n)?;
        if (next - prev).abs() < RATIO_TOLERANCE {
            return Ok(next.clamp(0.0, 1.0));
        }
        if n >= MAX_POINTS {
            return Err(Error::Numeric(format!(
                "ratio constant did not settle: {prev} vs {next} at {n} points"
            )));
        }
        prev = next;
    }
}

/// Per-intensity constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsymptoticConstants {
    pub ell_ref: f64,
    /// a(ℓ) = ℓμ/(c − ℓμ).
    pub a: f64,
    /// Light tails only.
    pub r: Option<f64>,
    pub cramer_c: Option<f64>,
    /// C_ℓ for the given rule; light tails only.
    pub ratio_constant: Option<f64>,
}

impl AsymptoticConstants {
    pub fn compute(model: &RiskModel, intensity: f64, rule: &BoundaryFunction) -> Result<Self> {
        let a = heavy_prefactor(model, intensity)?;
        if !model.claim().is_light_tailed() {
            return Ok(AsymptoticConstants {
                ell_ref: intensity,
                a,
                r: None,
                cramer_c: None,
                ratio_constant: None,
            });
        }
        let r = adjustment_coefficient(model, intensity)?;
        Ok(AsymptoticConstants {
            ell_ref: intensity,
            a,
            r: Some(r),
            cramer_c: Some(cramer_constant_at(model, intensity, r)?),
            ratio_constant: Some(limiting_ratio_constant(model, intensity, rule)?),
        })
    }
}

/// Which limit theorem applies to the model.
pub fn applicable_theorem(model: &RiskModel) -> Result<Theorem> {
    if model.claim().tail_class() == TailClass::SubexponentialIntegratedTail {
        return Ok(Theorem::Heavy);
    }
    let mix = model.mixing();
    if mix.endpoint_atom_mass() > 0.0 {
        Ok(Theorem::LightAtom)
    } else if mix.expansion().is_some() {
        Ok(Theorem::LightSharp)
    } else {
        Err(domain("the mixing law has neither an atom nor a regular density at its upper endpoint"))
    }
}

/// Net-profit and tail-class hypotheses shared by every theorem.
fn model_hypotheses(model: &RiskModel, theorem: Theorem) -> HypothesisReport {
    let mut report = HypothesisReport::new(theorem);
    let l1 = model.mixing().upper_endpoint();
    let ok = model.loading(l1) < 1.0;
    report.check(
        "net profit at the mixing endpoint",
        ok,
        format!("ℓ₁μ = {} vs c = {}", l1 * model.claim().mean(), model.premium_rate()),
    );
    let heavy = theorem == Theorem::Heavy;
    let class_ok = model.claim().is_light_tailed() != heavy;
    report.check(
        "claim tail class",
        class_ok,
        format!("declared {:?}", model.claim().tail_class()),
    );
    report
}

/// E[a(Λ)] = ∫ ℓμ/(c − ℓμ) G(dℓ).
pub fn heavy_mixed_prefactor(model: &RiskModel) -> Result<f64> {
    model.check_net_profit()?;
    let c = model.premium_rate();
    let mu = model.claim().mean();
    model.mixing().integrate(|l| l * mu / (c - l * mu))
}

/// E[a(Λ)] F̄_I(u), the common prediction for ψ(u) and ψ_cl(u).
pub fn heavy_prediction(model: &RiskModel, rule: &BoundaryFunction, u: f64) -> Result<f64> {
    model.check_net_profit()?;
    model_hypotheses(model, Theorem::Heavy)
        .merge(rule.check_hypotheses(Theorem::Heavy))
        .into_result()?;
    if !(u >= 0.0) {
        return Err(domain(format!("initial capital must be >= 0, got {u}")));
    }
    Ok(heavy_mixed_prefactor(model)? * model.claim().integrated_tail(u))
}

/// Number of density points in the sub-endpoint gap check.
pub const GAP_GRID_POINTS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AtomPrediction {
    /// p₁ C_{ℓ₁} c_{ℓ₁} e^{−R₁u}.
    pub value: f64,
    /// p₁ c_{ℓ₁} e^{−R₁u}.
    pub classical: f64,
    /// C_{ℓ₁}.
    pub ratio_constant: f64,
}

/// Prediction when G has an atom at ℓ₁.
pub fn atom_prediction(model: &RiskModel, rule: &BoundaryFunction, u: f64) -> Result<AtomPrediction> {
    model.check_net_profit()?;
    let mix = model.mixing();
    let p1 = mix.endpoint_atom_mass();
    let l1 = mix.upper_endpoint();
    let mut report = model_hypotheses(model, Theorem::LightAtom);
    report.check("atom at the mixing endpoint", p1 > 0.0, format!("p₁ = {p1}"));
    let report = report.merge(rule.check_hypotheses(Theorem::LightAtom));
    report.into_result()?;
    if !(u >= 0.0) {
        return Err(domain(format!("initial capital must be >= 0, got {u}")));
    }

    let r1 = adjustment_coefficient(model, l1)?;
    let mut gap = HypothesisReport::new(Theorem::LightAtom);
    for l in mix.sub_endpoint_grid(GAP_GRID_POINTS) {
        if l <= 0.0 {
            continue; // no claims arrive at ℓ = 0
        }
        let r = adjustment_coefficient(model, l)?;
        if !(r > r1) {
            gap.check(
                "sub-endpoint Lundberg gap",
                false,
                format!("R({l}) = {r} is not above R(ℓ₁) = {r1}"),
            );
            break;
        }
    }
    gap.into_result()?;

    let c1 = cramer_constant_at(model, l1, r1)?;
    let ratio = limiting_ratio_constant(model, l1, rule)?;
    let classical = p1 * c1 * (-r1 * u).exp();
    Ok(AtomPrediction {
        value: ratio * classical,
        classical,
        ratio_constant: ratio,
    })
}

/// Constants of the sharp endpoint-density asymptotic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EndpointRegularity {
    pub l1: f64,
    pub r1: f64,
    pub c1: f64,
    /// −R′(ℓ₁).
    pub d1: f64,
    pub b_coefficient: f64,
    pub b_exponent: f64,
    pub delta: f64,
    /// R(ℓ₁ − δ) − R₁.
    pub eta: f64,
}

impl EndpointRegularity {
    pub fn compute(model: &RiskModel) -> Result<Self> {
        model.check_net_profit()?;
        let mix = model.mixing();
        let l1 = mix.upper_endpoint();
        let mut report = model_hypotheses(model, Theorem::LightSharp);
        report.check(
            "no atom at the mixing endpoint",
            mix.endpoint_atom_mass() == 0.0,
            format!("G({{ℓ₁}}) = {}", mix.endpoint_atom_mass()),
        );
        let exp = mix.expansion().copied();
        report.check(
            "endpoint density expansion",
            exp.is_some(),
            if exp.is_some() {
                "g(ℓ₁ − z) ~ B z^(b−1) declared and verified"
            } else {
                "no density reaches ℓ₁"
            },
        );
        report.into_result()?;
        let exp = exp.expect("checked above");

        let r1 = adjustment_coefficient(model, l1)?;
        let c1 = cramer_constant_at(model, l1, r1)?;
        let d1 = endpoint_derivative(model, l1)?;
        let r_delta = adjustment_coefficient(model, l1 - exp.window)?;
        let eta = r_delta - r1;
        let mut gap = HypothesisReport::new(Theorem::LightSharp);
        gap.check(
            "uniform Lundberg gap below ℓ₁ − δ",
            eta > 0.0,
            format!("R(ℓ₁ − δ) − R₁ = {eta}"),
        );
        gap.into_result()?;
        Ok(EndpointRegularity {
            l1,
            r1,
            c1,
            d1,
            b_coefficient: exp.coefficient,
            b_exponent: exp.exponent,
            delta: exp.window,
            eta,
        })
    }

    /// B C₁ Γ(b)/(D₁u)^b e^{−R₁u}.
    pub fn classical_prediction(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u.is_finite()) {
            return Err(domain(format!("sharp prediction needs u > 0, got {u}")));
        }
        let b = self.b_exponent;
        Ok(self.b_coefficient * self.c1 * gamma_function(b)? * (-b * (self.d1 * u).ln() - self.r1 * u).exp())
    }
}

/// −R′(ℓ) by Richardson-extrapolated central differences.
pub fn endpoint_derivative(model: &RiskModel, intensity: f64) -> Result<f64> {
    let (h1, h2) = DERIVATIVE_STEPS;
    if model.loading(intensity + h1) >= 1.0 || intensity - h1 <= 0.0 {
        return Err(Error::DerivativeUnstable(format!(
            "difference stencil ℓ ± {h1} around {intensity} leaves the net-profit region"
        )));
    }
    let central = |h: f64| -> Result<f64> {
        Ok(-(adjustment_coefficient(model, intensity + h)? - adjustment_coefficient(model, intensity - h)?)
            / (2.0 * h))
    };
    let d1 = central(h1)?;
    let d2 = central(h2)?;
    let rich = (4.0 * d2 - d1) / 3.0;
    let rel = ((rich - d2) / rich).abs();
    if !(rel < DERIVATIVE_TOLERANCE) || !(rich > 0.0) {
        return Err(Error::DerivativeUnstable(format!(
            "central differences {d1} and {d2} give {rich}, relative change {rel:e}"
        )));
    }
    Ok(rich)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SharpPrediction {
    pub modified: f64,
    pub classical: f64,
    pub ratio_constant: f64,
}

/// Prediction when G has a regular density at ℓ₁.
pub fn sharp_prediction(model: &RiskModel, rule: &BoundaryFunction, u: f64) -> Result<SharpPrediction> {
    rule.check_hypotheses(Theorem::LightSharp).into_result()?;
    let reg = EndpointRegularity::compute(model)?;
    let classical = reg.classical_prediction(u)?;
    let ratio = limiting_ratio_constant(model, reg.l1, rule)?;
    Ok(SharpPrediction {
        modified: ratio * classical,
        classical,
        ratio_constant: ratio,
    })
}

/// One cell of the local-uniformity diagnostic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UniformityCell {
    pub u: f64,
    pub v: f64,
    /// ψ_cl(u, ℓ₁ − v/(D₁u)) / (C₁ e^{−R₁u} e^{−v}).
    pub ratio: f64,
}

/// Compares the exact exponential-claims ruin probability in the O(1/u)
/// window below ℓ₁ with its local limit; ratios tend to 1 as u grows.
pub fn local_uniformity_diagnostic(model: &RiskModel, us: &[f64], vs: &[f64]) -> Result<Vec<UniformityCell>> {
    let mu = match model.claim().kind() {
        crate::distributions::ClaimKind::Exponential { mean } => *mean,
        _ => return Err(domain("local uniformity diagnostic is exact only for exponential claims")),
    };
    let c = model.premium_rate();
    let l1 = model.mixing().upper_endpoint();
    let r1 = adjustment_coefficient(model, l1)?;
    let c1 = cramer_constant_at(model, l1, r1)?;
    let d1 = endpoint_derivative(model, l1)?;
    let mut out = Vec::new();
    for &u in us {
        for &v in vs {
            let l = l1 - v / (d1 * u);
            let exact = l * mu / c * (-(1.0 / mu - l / c) * u).exp();
            out.push(UniformityCell {
                u,
                v,
                ratio: exact / (c1 * (-r1 * u - v).exp()),
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{Atom, ClaimDistribution, DensityPart, DensityShape, MixingDistribution};
    use crate::quadrature::integrate_to_infinity;

    fn model(c: f64, claim: ClaimDistribution, mix: MixingDistribution) -> RiskModel {
        RiskModel::new(c, claim, mix).unwrap()
    }

    fn exp_fixed(mu: f64, c: f64, ell: f64) -> RiskModel {
        model(
            c,
            ClaimDistribution::exponential(mu).unwrap(),
            MixingDistribution::point_mass(ell).unwrap(),
        )
    }

    fn catalog() -> Vec<ClaimDistribution> {
        vec![
            ClaimDistribution::exponential(1.0).unwrap(),
            ClaimDistribution::exponential(2.0).unwrap(),
            ClaimDistribution::gamma(2.0, 0.5).unwrap(),
            ClaimDistribution::gamma(0.5, 2.0).unwrap(),
            ClaimDistribution::gamma(3.0, 1.0).unwrap(),
            ClaimDistribution::mixture(vec![
                (0.4, ClaimDistribution::exponential(0.5).unwrap()),
                (0.6, ClaimDistribution::gamma(2.0, 1.0).unwrap()),
            ])
            .unwrap(),
        ]
    }

    fn beta_endpoint(b: f64) -> MixingDistribution {
        let shape = if b == 1.0 {
            DensityShape::Uniform
        } else {
            DensityShape::Beta { alpha: 1.0, beta: b }
        };
        MixingDistribution::new(vec![], Some(DensityPart::new(0.6, 0.8, 1.0, shape).unwrap()), None).unwrap()
    }

    #[test]
    fn exponential_adjustment_coefficient() {
        let m = exp_fixed(1.0, 2.0, 1.0);
        assert!((adjustment_coefficient(&m, 1.0).unwrap() - 0.5).abs() < 1e-14);
        assert!(adjustment_coefficient(&m, 0.999 * 2.0).unwrap() < 1e-2);
        assert!(matches!(adjustment_coefficient(&m, 2.0), Err(Error::NoRoot(_))));
        let heavy = model(
            1.0,
            ClaimDistribution::pareto(2.5, 1.0).unwrap(),
            MixingDistribution::point_mass(0.5).unwrap(),
        );
        assert!(matches!(adjustment_coefficient(&heavy, 0.5), Err(Error::Domain(_))));
    }

    #[test]
    fn gamma_root_has_small_residual_and_sign_change() {
        let m = model(
            2.0,
            ClaimDistribution::gamma(2.0, 0.5).unwrap(),
            MixingDistribution::point_mass(1.0).unwrap(),
        );
        let r = adjustment_coefficient(&m, 1.0).unwrap();
        assert!(lundberg_residual(&m, 1.0, r).unwrap() < 1e-12 * 2.0 * r);
        let k = |x: f64| m.claim().mgf_minus_one(x).unwrap() - 2.0 * x;
        assert!(k(r * (1.0 - 1e-6)) < 0.0 && k(r * (1.0 + 1e-6)) > 0.0);
    }

    #[test]
    fn residuals_across_catalog_and_intensities() {
        for claim in catalog() {
            let mu = claim.mean();
            let c = 2.0;
            let m = model(c, claim, MixingDistribution::point_mass(0.1).unwrap());
            for i in 1..=99 {
                let l = c / mu * i as f64 / 100.0;
                let r = adjustment_coefficient(&m, l).unwrap();
                assert!(lundberg_residual(&m, l, r).unwrap() < 1e-12 * c * r, "ℓ = {l}");
            }
        }
    }

    #[test]
    fn adjustment_coefficient_decreases_in_intensity() {
        for claim in catalog() {
            let mu = claim.mean();
            let m = model(2.0, claim, MixingDistribution::point_mass(0.1).unwrap());
            let mut prev = f64::INFINITY;
            for i in 1..=50 {
                let r = adjustment_coefficient(&m, 2.0 / mu * i as f64 / 51.0).unwrap();
                assert!(r < prev);
                prev = r;
            }
        }
    }

    #[test]
    fn cramer_constants() {
        assert!((cramer_constant(&exp_fixed(1.0, 2.0, 1.0), 1.0).unwrap() - 0.5).abs() < 1e-14);
        assert!((cramer_constant(&exp_fixed(2.0, 5.0, 1.0), 1.0).unwrap() - 0.4).abs() < 1e-14);
        // Lundberg domination needs c_ℓ ≤ 1
        for claim in catalog() {
            let mu = claim.mean();
            let m = model(2.0, claim, MixingDistribution::point_mass(0.1).unwrap());
            for i in 1..10 {
                let cl = cramer_constant(&m, 2.0 / mu * i as f64 / 10.0).unwrap();
                assert!(cl > 0.0 && cl <= 1.0);
            }
        }
    }

    #[test]
    fn lundberg_domination_for_exponential_claims() {
        let mu = 1.0;
        let c = 2.0;
        for ell in [0.2, 0.5, 1.0, 1.8] {
            let m = exp_fixed(mu, c, ell);
            let r = adjustment_coefficient(&m, ell).unwrap();
            let cl = cramer_constant(&m, ell).unwrap();
            for i in 0..100 {
                let u = i as f64 * 0.5;
                assert!(cl * (-r * u).exp() <= (-r * u).exp());
            }
        }
    }

    #[test]
    fn overshoot_collapses_to_claim_law_for_exponential() {
        for mu in [0.5, 1.0, 2.0] {
            let c = 2.0;
            for frac in [0.2, 0.5, 0.9] {
                let ell = frac * c / mu;
                let m = exp_fixed(mu, c, ell);
                let law = OvershootLaw::new(&m, ell).unwrap();
                let grid: Vec<f64> = (0..=400).map(|i| i as f64 * 0.05 * mu).collect();
                let on_grid = law.tail_on_grid(&grid).unwrap();
                for (&x, &t) in grid.iter().zip(&on_grid) {
                    let want = (-x / mu).exp();
                    assert!((t - want).abs() < 1e-8, "μ {mu} ℓ {ell} x {x}: {t}");
                    if (x / mu * 20.0).round() as i64 % 40 == 0 {
                        assert!((law.tail(x).unwrap() - want).abs() < 1e-8);
                    }
                }
            }
        }
    }

    #[test]
    fn overshoot_tail_matches_cancellation_free_form() {
        // T(x) = ℓ/(c − ℓμ) ∫ₓ^∞ (e^{R(z−x)} − 1) F̄(z) dz
        let m = model(
            2.0,
            ClaimDistribution::gamma(2.0, 0.5).unwrap(),
            MixingDistribution::point_mass(1.0).unwrap(),
        );
        let law = OvershootLaw::new(&m, 1.0).unwrap();
        let r = law.adjustment_coefficient();
        let mut prev = 1.0;
        for i in 0..=40 {
            let x = i as f64 * 0.5;
            let oracle = integrate_to_infinity(
                |z| match m.claim().tail(z) {
                    0.0 => 0.0,
                    t => (r * (z - x)).exp_m1() * t,
                },
                x,
                Tolerance::absolute(1e-13),
            )
            .unwrap()
            .value
                / (2.0 - 1.0);
            let t = law.tail(x).unwrap();
            assert!((t - oracle).abs() < 1e-9, "x = {x}: {t} vs {oracle}");
            assert!(t <= prev);
            prev = t;
        }
        assert!(prev < 1e-5);
    }

    #[test]
    fn overshoot_tail_at_zero_is_one() {
        for claim in catalog() {
            let mu = claim.mean();
            let m = model(2.0, claim, MixingDistribution::point_mass(0.1).unwrap());
            for frac in [0.1, 0.5, 0.9] {
                let t = overshoot_limit_tail(&m, frac * 2.0 / mu, 0.0).unwrap();
                assert!((t - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn ratio_constants_for_exponential_claims() {
        let m = exp_fixed(1.0, 2.0, 1.0);
        let one = limiting_ratio_constant(&m, 1.0, &BoundaryFunction::classical()).unwrap();
        assert!((one - 1.0).abs() < 1e-6);
        let thr = limiting_ratio_constant(&m, 1.0, &BoundaryFunction::threshold(2.0).unwrap()).unwrap();
        assert!((thr - (-2.0f64).exp()).abs() < 1e-6, "{thr}");
        let abs = limiting_ratio_constant(&m, 1.0, &BoundaryFunction::exp_absorption(1.0).unwrap()).unwrap();
        assert!((abs - 0.5).abs() < 1e-6, "{abs}");
    }

    #[test]
    fn ratio_constant_refuses_irregular_rules() {
        let m = exp_fixed(1.0, 2.0, 1.0);
        let mut w = BoundaryFunction::threshold(1.0).unwrap();
        w.flags.is_monotone = false;
        assert!(matches!(
            limiting_ratio_constant(&m, 1.0, &w),
            Err(Error::HypothesisViolation(_))
        ));
    }

    #[test]
    fn heavy_prefactor_for_uniform_mixing() {
        let m = model(
            1.0,
            ClaimDistribution::pareto(2.5, 1.0).unwrap(),
            MixingDistribution::uniform(0.2, 0.5).unwrap(),
        );
        // ∫ kℓ/(1 − kℓ) dℓ / 0.3 with k = 2/3: antiderivative −ℓ − ln(1 − kℓ)/k
        let k = 2.0 / 3.0;
        let anti = |l: f64| -l - (1.0 - k * l).ln() / k;
        let exact = (anti(0.5) - anti(0.2)) / 0.3;
        let got = heavy_mixed_prefactor(&m).unwrap();
        assert!((got - exact).abs() < 1e-8, "{got} vs {exact}");

        let w = BoundaryFunction::exp_absorption(1.0).unwrap();
        let u = 10.0;
        let p = heavy_prediction(&m, &w, u).unwrap();
        let p2 = heavy_prediction(&m, &w, 2.0 * u).unwrap();
        let want = ((1.0 + 2.0 * u) / (1.0 + u)).powf(-1.5);
        assert!((p2 / p - want).abs() < 1e-12);
    }

    #[test]
    fn heavy_prediction_point_mass_is_exact() {
        let m = model(
            1.0,
            ClaimDistribution::pareto(2.5, 1.0).unwrap(),
            MixingDistribution::point_mass(0.6).unwrap(),
        );
        let a = heavy_prefactor(&m, 0.6).unwrap();
        let p = heavy_prediction(&m, &BoundaryFunction::classical(), 5.0).unwrap();
        assert_eq!(p, a * m.claim().integrated_tail(5.0));
    }

    #[test]
    fn heavy_prediction_gates() {
        let m = model(
            1.0,
            ClaimDistribution::pareto(2.5, 1.0).unwrap(),
            MixingDistribution::uniform(0.2, 0.5).unwrap(),
        );
        let half = BoundaryFunction::table(vec![(-10.0, 0.5), (-1.0, 0.2)]).unwrap();
        let err = heavy_prediction(&m, &half, 5.0).unwrap_err();
        assert!(matches!(err, Error::HypothesisViolation(_)));
        let light = exp_fixed(1.0, 2.0, 1.0);
        assert!(heavy_prediction(&light, &BoundaryFunction::classical(), 5.0).is_err());
        let bad = model(
            1.0,
            ClaimDistribution::pareto(2.5, 1.0).unwrap(),
            MixingDistribution::uniform(0.2, 2.0).unwrap(),
        );
        assert!(matches!(
            heavy_prediction(&bad, &BoundaryFunction::classical(), 5.0),
            Err(Error::NetProfitViolation { .. })
        ));
    }

    #[test]
    fn atom_prediction_cases() {
        let m = exp_fixed(1.0, 2.0, 1.0);
        let p = atom_prediction(&m, &BoundaryFunction::classical(), 7.0).unwrap();
        assert!((p.ratio_constant - 1.0).abs() < 1e-6);
        assert!((p.classical - 0.5 * (-3.5f64).exp()).abs() < 1e-15);

        let mix = MixingDistribution::new(
            vec![Atom { location: 1.0, mass: 0.3 }, Atom { location: 0.5, mass: 0.7 }],
            None,
            None,
        )
        .unwrap();
        let m = model(2.0, ClaimDistribution::exponential(1.0).unwrap(), mix);
        let u = 10.0;
        let p = atom_prediction(&m, &BoundaryFunction::threshold(1.0).unwrap(), u).unwrap();
        let want = 0.3 * (-1.0f64).exp() * 0.5 * (-0.5 * u).exp();
        assert!(((p.value - want) / want).abs() < 1e-5);
        assert!((p.ratio_constant - (-1.0f64).exp()).abs() < 1e-6);
        assert!((adjustment_coefficient(&m, 0.5).unwrap() - 0.75).abs() < 1e-14);
    }

    #[test]
    fn atom_prediction_needs_endpoint_atom() {
        let m = model(2.0, ClaimDistribution::exponential(1.0).unwrap(), beta_endpoint(2.0));
        assert!(matches!(
            atom_prediction(&m, &BoundaryFunction::classical(), 5.0),
            Err(Error::HypothesisViolation(_))
        ));
    }

    #[test]
    fn endpoint_derivative_for_exponential_claims() {
        for l1 in [0.4, 0.8, 1.5] {
            let m = exp_fixed(1.0, 2.0, l1);
            let d = endpoint_derivative(&m, l1).unwrap();
            assert!((d - 0.5).abs() < 1e-8, "{d}");
        }
    }

    #[test]
    fn sharp_prediction_b2_example() {
        let m = model(2.0, ClaimDistribution::exponential(1.0).unwrap(), beta_endpoint(2.0));
        let reg = EndpointRegularity::compute(&m).unwrap();
        assert!((reg.b_coefficient - 50.0).abs() < 1e-9);
        assert!((reg.c1 - 0.4).abs() < 1e-12);
        assert!((reg.r1 - 0.6).abs() < 1e-12);
        assert!(reg.eta > 0.0);
        for u in [10.0, 100.0] {
            let p = sharp_prediction(&m, &BoundaryFunction::classical(), u).unwrap();
            let want = 80.0 / (u * u) * (-0.6 * u).exp();
            assert!(((p.classical - want) / want).abs() < 1e-7);
            assert!(((p.modified - p.classical) / want).abs() < 1e-5);
        }
    }

    #[test]
    fn sharp_prediction_b1_uses_gamma_one() {
        let m = model(2.0, ClaimDistribution::exponential(1.0).unwrap(), beta_endpoint(1.0));
        let reg = EndpointRegularity::compute(&m).unwrap();
        let u = 50.0;
        let want = reg.b_coefficient * reg.c1 / (reg.d1 * u) * (-reg.r1 * u).exp();
        assert!(((reg.classical_prediction(u).unwrap() - want) / want).abs() < 1e-12);
    }

    #[test]
    fn local_uniformity_ratios_approach_one() {
        let m = model(2.0, ClaimDistribution::exponential(1.0).unwrap(), beta_endpoint(2.0));
        let cells = local_uniformity_diagnostic(&m, &[10.0, 1000.0], &[0.5, 2.0]).unwrap();
        for c in &cells {
            let dev = (c.ratio - 1.0).abs();
            if c.u == 1000.0 {
                assert!(dev < 1e-2, "{c:?}");
            }
        }
    }

    #[test]
    fn gamma_function_values() {
        assert_eq!(gamma_function(1.0).unwrap(), 1.0);
        assert_eq!(gamma_function(5.0).unwrap(), 24.0);
        let g = gamma_function(0.5).unwrap();
        assert!((g * g - std::f64::consts::PI).abs() < 1e-10);
        // ∫₀^∞ t^{−1/2} e^{−t} dt with t = s²
        let q = integrate(|s: f64| 2.0 * (-s * s).exp(), 0.0, 40.0, Tolerance::absolute(1e-13))
            .unwrap()
            .value;
        assert!((q - g).abs() < 1e-10);
        for b in [0.3, 1.7, 9.2] {
            let r = gamma_function(b + 1.0).unwrap() / (b * gamma_function(b).unwrap());
            assert!((r - 1.0).abs() < 1e-12);
        }
    }
}
