use rand::Rng;
use rand_distr::{Beta, Distribution};
use serde::Serialize;

use crate::error::{domain, Result};
use crate::quadrature::{integrate, Integral, Tolerance};
use crate::special::beta_reg;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Atom {
    pub location: f64,
    pub mass: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum DensityShape {
    Uniform,
    /// Beta(alpha, beta) law rescaled to the support interval.
    Beta { alpha: f64, beta: f64 },
}

/// Absolutely continuous part of G: `mass` times a probability density on (lo, hi).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DensityPart {
    pub lo: f64,
    pub hi: f64,
    pub mass: f64,
    pub shape: DensityShape,
}

/// Declared behaviour g(ℓ₁ − z) ~ B z^(b−1) for 0 < z < δ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EndpointExpansion {
    pub coefficient: f64,
    pub exponent: f64,
    pub window: f64,
}

impl DensityPart {
    pub fn new(lo: f64, hi: f64, mass: f64, shape: DensityShape) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo >= 0.0 && hi > lo) {
            return Err(domain(format!("density support ({lo}, {hi}) must satisfy 0 <= lo < hi")));
        }
        if !(mass > 0.0 && mass <= 1.0 + 1e-12) {
            return Err(domain(format!("density mass {mass} outside (0, 1]")));
        }
        if let DensityShape::Beta { alpha, beta } = shape {
            if !(alpha > 0.0 && beta > 0.0 && alpha.is_finite() && beta.is_finite()) {
                return Err(domain(format!("beta parameters ({alpha}, {beta}) must be positive")));
            }
        }
        Ok(DensityPart { lo, hi, mass, shape })
    }

    fn width(&self) -> f64 {
        self.hi - self.lo
    }

    /// Normalizing factor: g(ℓ) = norm · (ℓ − lo)^(α−1) (hi − ℓ)^(β−1).
    fn norm(&self) -> f64 {
        match self.shape {
            DensityShape::Uniform => self.mass / self.width(),
            DensityShape::Beta { alpha, beta } => {
                let ln_b = statrs::function::beta::ln_beta(alpha, beta);
                self.mass * (-ln_b - (alpha + beta - 1.0) * self.width().ln()).exp()
            }
        }
    }

    fn exponents(&self) -> (f64, f64) {
        match self.shape {
            DensityShape::Uniform => (1.0, 1.0),
            DensityShape::Beta { alpha, beta } => (alpha, beta),
        }
    }

    /// g(ℓ), zero outside the open support.
    pub fn pdf(&self, ell: f64) -> f64 {
        if !(ell > self.lo && ell < self.hi) {
            return 0.0;
        }
        let (alpha, beta) = self.exponents();
        self.norm() * (ell - self.lo).powf(alpha - 1.0) * (self.hi - ell).powf(beta - 1.0)
    }

    /// G-mass of (a, b] carried by the density.
    pub fn mass_between(&self, a: f64, b: f64) -> f64 {
        let cdf = |x: f64| {
            let t = ((x - self.lo) / self.width()).clamp(0.0, 1.0);
            match self.shape {
                DensityShape::Uniform => t,
                DensityShape::Beta { alpha, beta } => beta_reg(alpha, beta, t),
            }
        };
        self.mass * (cdf(b) - cdf(a)).max(0.0)
    }

    /// The exact expansion at the upper end: (B, b).
    pub fn natural_expansion(&self) -> (f64, f64) {
        let (alpha, beta) = self.exponents();
        (self.norm() * self.width().powf(alpha - 1.0), beta)
    }

    /// ∫ f g over the support. Each half is mapped through t = (distance to its
    /// endpoint)^exponent, which absorbs the power-law factor at that endpoint.
    fn integrate<F: Fn(f64) -> f64>(&self, f: &F, tol: Tolerance) -> Result<Integral> {
        let (alpha, beta) = self.exponents();
        let norm = self.norm();
        let (lo, hi) = (self.lo, self.hi);
        let half = 0.5 * self.width();

        // upper half: z = hi − ℓ = t^(1/β)
        let upper = |t: f64| {
            let z = t.powf(1.0 / beta);
            let ell = hi - z;
            f(ell) * norm * (ell - lo).powf(alpha - 1.0) / beta
        };
        // lower half: s = ℓ − lo = t^(1/α)
        let lower = |t: f64| {
            let s = t.powf(1.0 / alpha);
            let ell = lo + s;
            f(ell) * norm * (hi - ell).powf(beta - 1.0) / alpha
        };
        let split = Tolerance {
            abs: 0.5 * tol.abs,
            ..tol
        };
        let a = integrate(upper, 0.0, half.powf(beta), split)?;
        let b = integrate(lower, 0.0, half.powf(alpha), split)?;
        Ok(Integral {
            value: a.value + b.value,
            error: a.error + b.error,
            subdivisions: a.subdivisions + b.subdivisions,
        })
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self.shape {
            DensityShape::Uniform => self.lo + self.width() * rng.random::<f64>(),
            DensityShape::Beta { alpha, beta } => {
                let law = Beta::new(alpha, beta).expect("validated beta parameters");
                self.lo + self.width() * law.sample(rng)
            }
        }
    }
}

/// The mixing law G of the claim intensity Λ: finitely many atoms plus an
/// optional density part.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MixingDistribution {
    atoms: Vec<Atom>,
    density: Option<DensityPart>,
    expansion: Option<EndpointExpansion>,
    upper_endpoint: f64,
}

const MASS_TOLERANCE: f64 = 1e-9;

impl MixingDistribution {
    /// Build G and validate it. When the density part reaches ℓ₁ and no
    /// expansion is declared, the exact one is derived from the density shape.
    pub fn new(
        atoms: Vec<Atom>,
        density: Option<DensityPart>,
        declared: Option<EndpointExpansion>,
    ) -> Result<Self> {
        for a in &atoms {
            if !(a.location.is_finite() && a.location >= 0.0) {
                return Err(domain(format!("atom location {} must be >= 0", a.location)));
            }
            if !(a.mass > 0.0 && a.mass.is_finite()) {
                return Err(domain(format!("atom mass {} must be positive", a.mass)));
            }
        }
        let total = atoms.iter().map(|a| a.mass).sum::<f64>() + density.map_or(0.0, |d| d.mass);
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(domain(format!("mixing law has total mass {total}, expected 1")));
        }
        let upper_endpoint = atoms
            .iter()
            .map(|a| a.location)
            .chain(density.map(|d| d.hi))
            .reduce(f64::max)
            .ok_or_else(|| domain("mixing law needs at least one atom or a density"))?;

        let mut mix = MixingDistribution {
            atoms,
            density,
            expansion: None,
            upper_endpoint,
        };
        mix.expansion = match (declared, density) {
            (Some(exp), Some(d)) if d.hi == upper_endpoint => {
                mix.verify_expansion(&exp)?;
                Some(exp)
            }
            (Some(_), _) => {
                return Err(domain(
                    "an endpoint expansion needs a density part reaching the upper endpoint",
                ))
            }
            (None, Some(d)) if d.hi == upper_endpoint => Some(mix.derive_expansion(&d)?),
            (None, _) => None,
        };
        Ok(mix)
    }

    pub fn point_mass(location: f64) -> Result<Self> {
        Self::new(vec![Atom { location, mass: 1.0 }], None, None)
    }

    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![], Some(DensityPart::new(lo, hi, 1.0, DensityShape::Uniform)?), None)
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn density(&self) -> Option<&DensityPart> {
        self.density.as_ref()
    }

    pub fn expansion(&self) -> Option<&EndpointExpansion> {
        self.expansion.as_ref()
    }

    /// ℓ₁ = inf{ℓ : G(ℓ) = 1}.
    pub fn upper_endpoint(&self) -> f64 {
        self.upper_endpoint
    }

    /// p₁ = G({ℓ₁}).
    pub fn endpoint_atom_mass(&self) -> f64 {
        self.atoms
            .iter()
            .filter(|a| a.location == self.upper_endpoint)
            .map(|a| a.mass)
            .sum()
    }

    /// Largest atom location strictly below ℓ₁.
    fn nearest_atom_below_endpoint(&self) -> Option<f64> {
        self.atoms
            .iter()
            .map(|a| a.location)
            .filter(|&l| l < self.upper_endpoint)
            .reduce(f64::max)
    }

    fn expansion_grid(window: f64) -> impl Iterator<Item = f64> {
        // log-spaced over (0, δ/10]
        let top = window / 10.0;
        (0..=40).map(move |i| top * 10f64.powf(-6.0 * i as f64 / 40.0))
    }

    fn expansion_holds(&self, d: &DensityPart, exp: &EndpointExpansion) -> bool {
        Self::expansion_grid(exp.window).all(|z| {
            let ratio = d.pdf(self.upper_endpoint - z) / (exp.coefficient * z.powf(exp.exponent - 1.0));
            (0.9..=1.1).contains(&ratio)
        })
    }

    fn window_limit(&self, d: &DensityPart) -> f64 {
        let mut limit = d.hi - d.lo;
        if let Some(a) = self.nearest_atom_below_endpoint() {
            limit = limit.min(self.upper_endpoint - a);
        }
        limit
    }

    fn verify_expansion(&self, exp: &EndpointExpansion) -> Result<()> {
        let d = self
            .density
            .as_ref()
            .ok_or_else(|| domain("endpoint expansion declared without a density part"))?;
        if !(exp.coefficient > 0.0 && exp.exponent > 0.0 && exp.window > 0.0) {
            return Err(domain(format!("endpoint expansion {exp:?} needs B, b, δ > 0")));
        }
        if exp.window > self.window_limit(d) {
            return Err(domain(format!(
                "endpoint window δ = {} exceeds the density-only neighbourhood of ℓ₁ ({})",
                exp.window,
                self.window_limit(d)
            )));
        }
        if !self.expansion_holds(d, exp) {
            return Err(domain(format!(
                "declared expansion {exp:?} does not match the density near ℓ₁ within 10%"
            )));
        }
        Ok(())
    }

    fn derive_expansion(&self, d: &DensityPart) -> Result<EndpointExpansion> {
        let (coefficient, exponent) = d.natural_expansion();
        let mut window = 0.5 * self.window_limit(d);
        for _ in 0..60 {
            let exp = EndpointExpansion {
                coefficient,
                exponent,
                window,
            };
            if self.expansion_holds(d, &exp) {
                return Ok(exp);
            }
            window *= 0.5;
        }
        Err(domain("could not find an endpoint window where the density expansion holds"))
    }

    /// ∫ f dG with the default absolute tolerance 1e−10.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> Result<f64> {
        self.integrate_with(f, Tolerance::default())
    }

    /// Σ p_j f(ℓ_j) plus adaptive quadrature of f·g.
    pub fn integrate_with<F: Fn(f64) -> f64>(&self, f: F, tol: Tolerance) -> Result<f64> {
        let atoms: f64 = self.atoms.iter().map(|a| a.mass * f(a.location)).sum();
        let dens = match &self.density {
            Some(d) => d.integrate(&f, tol)?.value,
            None => 0.0,
        };
        Ok(atoms + dens)
    }

    /// Draw Λ ~ G.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let target: f64 = rng.random();
        let mut acc = 0.0;
        for a in &self.atoms {
            acc += a.mass;
            if target < acc {
                return a.location;
            }
        }
        match &self.density {
            Some(d) => d.sample(rng),
            None => self.atoms[self.atoms.len() - 1].location,
        }
    }

    /// Support points strictly below ℓ₁: the sub-endpoint atoms and `n` evenly
    /// spaced points of the density support.
    pub fn sub_endpoint_grid(&self, n: usize) -> Vec<f64> {
        let mut pts: Vec<f64> = self
            .atoms
            .iter()
            .map(|a| a.location)
            .filter(|&l| l < self.upper_endpoint)
            .collect();
        if let Some(d) = &self.density {
            let top = d.hi.min(self.upper_endpoint);
            for i in 0..n {
                let l = d.lo + (top - d.lo) * (i as f64 + 0.5) / n as f64;
                if l < self.upper_endpoint {
                    pts.push(l);
                }
            }
        }
        pts
    }
}
