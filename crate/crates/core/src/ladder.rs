//! Exact sampling of (ruin indicator, deficit at ruin) and plain Monte Carlo
//! estimators of classical and modified ruin.
//!
//! Given Λ = ℓ with ρ = ℓμ/c < 1, the maximum of the claim-surplus process is
//! a geometric(1 − ρ) sum of i.i.d. ladder heights with law F_I, and the
//! overshoot of the first ladder epoch above u is the deficit −U_T. Sampling
//! that walk gives the exact joint law of (1{T < ∞}, −U_T) with no time
//! horizon. [`simulate_path`] runs the surplus process itself and exists to
//! cross-check the ladder sampler.

use rand::Rng;
use serde::Serialize;

use crate::asymptotics;
use crate::distributions::{ClaimDistribution, MixingDistribution};
use crate::error::{domain, Error, Result};
use crate::estimate::{Estimate, PairTally};
use crate::rng::{block_plan, run_blocks, std_exp, StreamTag};
use crate::rules::BoundaryFunction;

/// Surplus U_t = u + c t − Σ X_i with claim intensity Λ ~ G.
#[derive(Debug, Clone)]
pub struct RiskModel {
    premium_rate: f64,
    claim: ClaimDistribution,
    mixing: MixingDistribution,
}

impl RiskModel {
    pub fn new(premium_rate: f64, claim: ClaimDistribution, mixing: MixingDistribution) -> Result<Self> {
        if !(premium_rate > 0.0 && premium_rate.is_finite()) {
            return Err(domain(format!("premium rate must be positive, got {premium_rate}")));
        }
        Ok(RiskModel {
            premium_rate,
            claim,
            mixing,
        })
    }

    pub fn premium_rate(&self) -> f64 {
        self.premium_rate
    }

    pub fn claim(&self) -> &ClaimDistribution {
        &self.claim
    }

    pub fn mixing(&self) -> &MixingDistribution {
        &self.mixing
    }

    /// ρ(ℓ) = ℓμ/c.
    pub fn loading(&self, intensity: f64) -> f64 {
        intensity * self.claim.mean() / self.premium_rate
    }

    /// The same premium and claim law with Λ ≡ ℓ.
    pub fn with_fixed_intensity(&self, intensity: f64) -> Result<RiskModel> {
        RiskModel::new(
            self.premium_rate,
            self.claim.clone(),
            MixingDistribution::point_mass(intensity)?,
        )
    }

    pub fn check_intensity(&self, intensity: f64) -> Result<()> {
        if !(intensity.is_finite() && intensity >= 0.0) {
            return Err(domain(format!("intensity must be finite and nonnegative, got {intensity}")));
        }
        if self.loading(intensity) >= 1.0 {
            return Err(Error::NetProfitViolation {
                intensity,
                mean: self.claim.mean(),
                premium: self.premium_rate,
            });
        }
        Ok(())
    }

    /// ℓ₁ μ < c.
    pub fn check_net_profit(&self) -> Result<()> {
        self.check_intensity(self.mixing.upper_endpoint())
    }
}

/// Outcome of one replication.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum RuinSample {
    Survived,
    /// Ruined with deficit −U_T > 0.
    Ruined { deficit: f64 },
}

impl RuinSample {
    pub fn is_ruined(&self) -> bool {
        matches!(self, RuinSample::Ruined { .. })
    }

    pub fn deficit(&self) -> Option<f64> {
        match *self {
            RuinSample::Ruined { deficit } => Some(deficit),
            RuinSample::Survived => None,
        }
    }
}

#[inline]
fn ladder_walk<R: Rng + ?Sized>(claim: &ClaimDistribution, rho: f64, u: f64, rng: &mut R) -> RuinSample {
    let mut level = 0.0;
    loop {
        if rng.random::<f64>() >= rho {
            return RuinSample::Survived;
        }
        level += claim.sample_integrated_tail(rng);
        if level > u {
            return RuinSample::Ruined { deficit: level - u };
        }
    }
}

/// One exact draw of (ruined, deficit) from initial capital `u` at intensity ℓ.
pub fn sample_ruin_ladder<R: Rng + ?Sized>(
    model: &RiskModel,
    intensity: f64,
    u: f64,
    rng: &mut R,
) -> Result<RuinSample> {
    if !(intensity > 0.0) {
        return Err(domain(format!("ladder sampling needs a positive intensity, got {intensity}")));
    }
    if !(u >= 0.0 && u.is_finite()) {
        return Err(domain(format!("initial capital must be finite and nonnegative, got {u}")));
    }
    let rho = model.loading(intensity);
    if rho >= 1.0 {
        return Err(domain(format!(
            "ladder sampling needs ℓμ < c, got ρ = {rho}"
        )));
    }
    Ok(ladder_walk(model.claim(), rho, u, rng))
}

/// Result of a direct path simulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum PathOutcome {
    Ruined { deficit: f64 },
    /// The surplus reached the upper barrier M. For light tails
    /// `residual_bound` is the Lundberg bound e^{−R M} on ruin after that.
    Survived { residual_bound: Option<f64> },
    /// The time horizon elapsed first.
    Censored { time: f64 },
}

/// Event-driven simulator of the surplus path at a fixed intensity.
#[derive(Debug, Clone)]
pub struct PathSimulator<'a> {
    model: &'a RiskModel,
    intensity: f64,
    barrier: Option<f64>,
    horizon: Option<f64>,
    adjustment: Option<f64>,
}

impl<'a> PathSimulator<'a> {
    pub fn new(
        model: &'a RiskModel,
        intensity: f64,
        barrier: Option<f64>,
        horizon: Option<f64>,
    ) -> Result<Self> {
        if !(intensity > 0.0 && intensity.is_finite()) {
            return Err(domain(format!("path simulation needs a positive intensity, got {intensity}")));
        }
        if barrier.is_none() && horizon.is_none() {
            return Err(domain("path simulation needs an upper barrier or a finite horizon"));
        }
        if let Some(t) = horizon {
            if !(t >= 0.0) {
                return Err(domain(format!("horizon must be nonnegative, got {t}")));
            }
        }
        let adjustment = if model.claim().is_light_tailed() && model.loading(intensity) < 1.0 {
            Some(asymptotics::adjustment_coefficient(model, intensity)?)
        } else {
            None
        };
        Ok(PathSimulator {
            model,
            intensity,
            barrier,
            horizon,
            adjustment,
        })
    }

    pub fn simulate<R: Rng + ?Sized>(&self, u: f64, rng: &mut R) -> Result<PathOutcome> {
        if !(u >= 0.0 && u.is_finite()) {
            return Err(domain(format!("initial capital must be finite and nonnegative, got {u}")));
        }
        if let Some(m) = self.barrier {
            if !(m > u) {
                return Err(domain(format!("upper barrier {m} must exceed the initial capital {u}")));
            }
        }
        let c = self.model.premium_rate();
        let horizon = self.horizon.unwrap_or(f64::INFINITY);
        let barrier = self.barrier.unwrap_or(f64::INFINITY);
        let mut t = 0.0;
        let mut surplus = u;
        loop {
            let wait = std_exp(rng) / self.intensity;
            // premium income is linear, so the barrier can only be crossed between claims
            let to_barrier = (barrier - surplus) / c;
            if to_barrier <= wait && t + to_barrier <= horizon {
                return Ok(PathOutcome::Survived {
                    residual_bound: self.adjustment.map(|r| (-r * barrier).exp()),
                });
            }
            if t + wait > horizon {
                return Ok(PathOutcome::Censored { time: horizon });
            }
            t += wait;
            surplus += c * wait;
            surplus -= self.model.claim().sample(rng);
            if surplus < 0.0 {
                return Ok(PathOutcome::Ruined { deficit: -surplus });
            }
        }
    }
}

/// One direct path simulation; see [`PathSimulator`].
pub fn simulate_path<R: Rng + ?Sized>(
    model: &RiskModel,
    intensity: f64,
    u: f64,
    barrier: Option<f64>,
    horizon: Option<f64>,
    rng: &mut R,
) -> Result<PathOutcome> {
    PathSimulator::new(model, intensity, barrier, horizon)?.simulate(u, rng)
}

/// Where the intensity of each replication comes from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Intensity {
    /// Λ ~ G drawn per replication.
    Mixed,
    Fixed(f64),
}

/// Classical and modified estimates from the same replications.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JointEstimate {
    pub classical: Estimate,
    pub modified: Estimate,
    /// Modified over classical, with its delta-method standard error.
    pub ratio: f64,
    pub ratio_std_error: f64,
}

impl JointEstimate {
    pub(crate) fn from_pair(pair: PairTally, streams: Vec<StreamTag>) -> Self {
        let (ratio, ratio_std_error) = pair.ratio();
        JointEstimate {
            classical: Estimate::from_tally(pair.classical, streams.clone()),
            modified: Estimate::from_tally(pair.modified, streams),
            ratio,
            ratio_std_error,
        }
    }
}

/// Plain Monte Carlo of ψ_cl(u) and ψ(u) with common random numbers.
///
/// Replication blocks run on the current rayon pool; block `b` uses stream
/// `b` of `seed`, so the result is independent of the thread count.
pub fn estimate_joint(
    model: &RiskModel,
    rule: &BoundaryFunction,
    u: f64,
    n: u64,
    seed: u64,
    intensity: Intensity,
) -> Result<JointEstimate> {
    if n == 0 {
        return Err(domain("replication count must be at least 1"));
    }
    if !(u >= 0.0 && u.is_finite()) {
        return Err(domain(format!("initial capital must be finite and nonnegative, got {u}")));
    }
    match intensity {
        Intensity::Mixed => model.check_net_profit()?,
        Intensity::Fixed(l) => {
            model.check_intensity(l)?;
            if l == 0.0 {
                return Err(domain("fixed intensity must be positive"));
            }
        }
    }
    let claim = model.claim();
    let plan = block_plan(seed, 0, n);
    let partials = run_blocks(&plan, |tag, rng| {
        let mut pair = PairTally::default();
        for _ in 0..tag.n_sub {
            let ell = match intensity {
                Intensity::Mixed => model.mixing().sample(rng),
                Intensity::Fixed(l) => l,
            };
            if ell == 0.0 {
                // no claims ever arrive
                pair.push(0.0, 0.0);
                continue;
            }
            match ladder_walk(claim, model.loading(ell), u, rng) {
                RuinSample::Survived => pair.push(0.0, 0.0),
                RuinSample::Ruined { deficit } => pair.push(1.0, rule.weight_at_deficit(deficit)),
            }
        }
        Ok(pair)
    })?;
    let pair = partials
        .iter()
        .fold(PairTally::default(), |acc, p| acc.merge(p));
    Ok(JointEstimate::from_pair(pair, plan))
}

/// Plain Monte Carlo of the mixed classical ruin probability ψ_cl(u).
pub fn estimate_classical(model: &RiskModel, u: f64, n: u64, seed: u64) -> Result<Estimate> {
    Ok(estimate_joint(model, &BoundaryFunction::classical(), u, n, seed, Intensity::Mixed)?.classical)
}

/// ψ_cl(u, ℓ) at a fixed intensity.
pub fn estimate_classical_at(model: &RiskModel, intensity: f64, u: f64, n: u64, seed: u64) -> Result<Estimate> {
    Ok(estimate_joint(
        model,
        &BoundaryFunction::classical(),
        u,
        n,
        seed,
        Intensity::Fixed(intensity),
    )?
    .classical)
}

/// Plain Monte Carlo of the mixed modified ruin probability ψ(u).
pub fn estimate_modified(model: &RiskModel, rule: &BoundaryFunction, u: f64, n: u64, seed: u64) -> Result<Estimate> {
    Ok(estimate_joint(model, rule, u, n, seed, Intensity::Mixed)?.modified)
}

/// ψ_ℓ(u) at a fixed intensity.
pub fn estimate_modified_at(
    model: &RiskModel,
    rule: &BoundaryFunction,
    intensity: f64,
    u: f64,
    n: u64,
    seed: u64,
) -> Result<Estimate> {
    Ok(estimate_joint(model, rule, u, n, seed, Intensity::Fixed(intensity))?.modified)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use crate::stats::{kolmogorov_distance, two_sample_distance};

    fn exp_model(c: f64, ell: f64) -> RiskModel {
        RiskModel::new(
            c,
            ClaimDistribution::exponential(1.0).unwrap(),
            MixingDistribution::point_mass(ell).unwrap(),
        )
        .unwrap()
    }

    /// ψ_cl(u, ℓ) for Exponential(μ) claims.
    fn exact_exponential(mu: f64, c: f64, ell: f64, u: f64) -> f64 {
        ell * mu / c * (-(1.0 / mu - ell / c) * u).exp()
    }

    fn within_sigmas(est: &Estimate, want: f64, k: f64) -> bool {
        (est.mean - want).abs() <= k * est.std_error
    }

    #[test]
    fn ruin_from_zero_has_probability_rho() {
        let m = exp_model(2.0, 1.0);
        let e = estimate_classical_at(&m, 1.0, 0.0, 1_000_000, 1).unwrap();
        assert!(within_sigmas(&e, 0.5, 4.0), "{e:?}");
    }

    #[test]
    fn zero_intensity_is_a_domain_error() {
        let m = exp_model(2.0, 1.0);
        let mut rng = stream(0, 0);
        assert!(matches!(sample_ruin_ladder(&m, 0.0, 1.0, &mut rng), Err(Error::Domain(_))));
        assert!(matches!(sample_ruin_ladder(&m, 2.0, 1.0, &mut rng), Err(Error::Domain(_))));
    }

    #[test]
    fn exact_law_for_exponential_claims() {
        let m = exp_model(2.0, 1.0);
        for u in [0.0, 1.0, 5.0, 10.0] {
            let e = estimate_classical_at(&m, 1.0, u, 1_000_000, 7).unwrap();
            let want = exact_exponential(1.0, 2.0, 1.0, u);
            assert!(within_sigmas(&e, want, 4.0), "u = {u}: {} vs {want}", e.mean);
        }
        let e = estimate_classical_at(&m, 1.0, 5.0, 1_000_000, 8).unwrap();
        assert!((exact_exponential(1.0, 2.0, 1.0, 5.0) - 0.041_042).abs() < 1e-6);
        assert!(within_sigmas(&e, 0.041_042, 4.0));
    }

    #[test]
    fn conditional_deficit_is_exponential() {
        let m = exp_model(2.0, 1.0);
        let mut rng = stream(21, 0);
        let mut deficits = Vec::new();
        for _ in 0..1_000_000 {
            if let RuinSample::Ruined { deficit } = sample_ruin_ladder(&m, 1.0, 1.0, &mut rng).unwrap() {
                deficits.push(deficit);
            }
        }
        let k = deficits.len() as f64;
        let mean = deficits.iter().sum::<f64>() / k;
        assert!((mean - 1.0).abs() < 4.0 / k.sqrt(), "{mean}");
        let d = kolmogorov_distance(&mut deficits, |x| 1.0 - (-x).exp());
        assert!(d < 1.63 / k.sqrt(), "{d}");
    }

    #[test]
    fn threshold_rule_scales_by_memoryless_factor() {
        let m = exp_model(2.0, 1.0);
        let w = BoundaryFunction::threshold(1.0).unwrap();
        let e = estimate_modified_at(&m, &w, 1.0, 5.0, 1_000_000, 3).unwrap();
        let want = 0.5 * (-2.5f64).exp() * (-1.0f64).exp();
        assert!((want - 0.015_099).abs() < 1e-6);
        assert!(within_sigmas(&e, want, 4.0), "{} vs {want}", e.mean);
    }

    #[test]
    fn classical_rule_reproduces_classical_estimate() {
        let m = RiskModel::new(
            1.0,
            ClaimDistribution::pareto(2.5, 1.0).unwrap(),
            MixingDistribution::uniform(0.2, 0.5).unwrap(),
        )
        .unwrap();
        let a = estimate_classical(&m, 3.0, 50_000, 9).unwrap();
        let b = estimate_modified(&m, &BoundaryFunction::classical(), 3.0, 50_000, 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn modified_never_exceeds_classical() {
        let m = exp_model(2.0, 1.0);
        for (seed, w) in [
            BoundaryFunction::threshold(0.5).unwrap(),
            BoundaryFunction::exp_absorption(2.0).unwrap(),
        ]
        .iter()
        .enumerate()
        {
            let j = estimate_joint(&m, w, 2.0, 20_000, seed as u64, Intensity::Mixed).unwrap();
            assert!(j.modified.mean <= j.classical.mean);
        }
    }

    #[test]
    fn point_mass_mixture_matches_fixed_intensity() {
        let m = exp_model(2.0, 1.0);
        let a = estimate_classical(&m, 2.0, 100_000, 31).unwrap();
        let b = estimate_classical_at(&m, 1.0, 2.0, 100_000, 32).unwrap();
        let se = (a.std_error.powi(2) + b.std_error.powi(2)).sqrt();
        assert!((a.mean - b.mean).abs() < 4.0 * se);
    }

    #[test]
    fn monotone_in_capital_under_common_numbers() {
        let m = RiskModel::new(
            2.0,
            ClaimDistribution::gamma(2.0, 0.5).unwrap(),
            MixingDistribution::uniform(0.5, 1.5).unwrap(),
        )
        .unwrap();
        let mut prev = f64::INFINITY;
        for u in [0.0, 0.5, 1.0, 2.0, 4.0, 8.0] {
            let e = estimate_classical(&m, u, 50_000, 4).unwrap();
            assert!(e.mean <= prev);
            prev = e.mean;
        }
    }

    #[test]
    fn net_profit_violation_is_rejected() {
        let m = RiskModel::new(
            1.0,
            ClaimDistribution::exponential(1.0).unwrap(),
            MixingDistribution::uniform(0.5, 1.0).unwrap(),
        )
        .unwrap();
        assert!(matches!(
            estimate_classical(&m, 1.0, 10, 0),
            Err(Error::NetProfitViolation { .. })
        ));
        assert!(estimate_classical(&exp_model(2.0, 1.0), 1.0, 0, 0).is_err());
    }

    #[test]
    fn atom_at_zero_contributes_nothing() {
        let m = RiskModel::new(
            1.0,
            ClaimDistribution::exponential(1.0).unwrap(),
            MixingDistribution::new(
                vec![
                    crate::distributions::Atom { location: 0.0, mass: 0.5 },
                    crate::distributions::Atom { location: 0.5, mass: 0.5 },
                ],
                None,
                None,
            )
            .unwrap(),
        )
        .unwrap();
        let e = estimate_classical(&m, 0.0, 200_000, 2).unwrap();
        assert!(within_sigmas(&e, 0.25, 4.0), "{}", e.mean);
    }

    #[test]
    fn path_simulator_edge_cases() {
        let m = exp_model(2.0, 1.0);
        let mut rng = stream(40, 0);
        let u = 1e6;
        let sim = PathSimulator::new(&m, 1.0, Some(u + 1.0), None).unwrap();
        let ruined = (0..10_000)
            .filter(|_| matches!(sim.simulate(u, &mut rng).unwrap(), PathOutcome::Ruined { .. }))
            .count();
        assert!((ruined as f64) < 10.0);

        let out = simulate_path(&m, 1.0, 1.0, None, Some(0.0), &mut rng).unwrap();
        assert_eq!(out, PathOutcome::Censored { time: 0.0 });
        assert!(simulate_path(&m, 1.0, 1.0, None, None, &mut rng).is_err());
        assert!(simulate_path(&m, 1.0, 1.0, Some(0.5), None, &mut rng).is_err());
        if let PathOutcome::Survived { residual_bound } =
            simulate_path(&m, 1.0, 0.0, Some(1e-9), None, &mut rng).unwrap()
        {
            assert!(residual_bound.unwrap() <= 1.0);
        }
    }

    #[test]
    fn path_and_ladder_deficits_agree() {
        let m = exp_model(2.0, 1.0);
        let u = 3.0;
        let sim = PathSimulator::new(&m, 1.0, Some(u + 100.0), None).unwrap();
        let mut rng = stream(41, 0);
        let mut from_path = Vec::new();
        while from_path.len() < 10_000 {
            if let PathOutcome::Ruined { deficit } = sim.simulate(u, &mut rng).unwrap() {
                from_path.push(deficit);
            }
        }
        let mut rng = stream(41, 1);
        let mut from_ladder = Vec::new();
        while from_ladder.len() < 10_000 {
            if let Some(d) = sample_ruin_ladder(&m, 1.0, u, &mut rng).unwrap().deficit() {
                from_ladder.push(d);
            }
        }
        let d = two_sample_distance(&mut from_path, &mut from_ladder);
        assert!(d < 0.02, "{d}");
    }
}
