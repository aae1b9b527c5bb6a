//! Experiment orchestration for the `ruin-lab` binary.
//!
//! A run reads an [`ExperimentConfig`], evaluates estimators and predictions on
//! the `u` grid and writes `<mode>.csv` (plus `<mode>_ratio.csv` for the
//! modified/classical ratio) and a `<mode>.json` sidecar into the output
//! directory. Nothing is written when the configuration is rejected.

pub mod config;
pub mod report;

use std::path::PathBuf;

use log::{debug, info};
use serde::Serialize;
use serde_json::json;

use crate::asymptotics::{
    applicable_theorem, atom_prediction, heavy_mixed_prefactor, heavy_prediction, local_uniformity_diagnostic,
    sharp_prediction, AsymptoticConstants, EndpointRegularity,
};
use crate::distributions::ClaimKind;
use crate::error::{domain, Error, Result};
use crate::estimate::Estimate;
use crate::ladder::{estimate_joint, Intensity, JointEstimate, RiskModel};
use crate::quadrature::{integrate, integrate_to_infinity, Tolerance};
use crate::rare_event::{is_estimate_joint, is_estimate_mixed, StrataSpec};
use crate::rules::{BoundaryFunction, HypothesisReport, Theorem};

pub use config::{ExperimentConfig, Method, Mode, Overrides};
pub use report::ComparisonRow;

use report::{render_csv, render_json, stream_ranges, trend_statistic};

/// C_w = E[w(−X)] for X ~ Exp(mean μ).
fn deficit_weight_mean(rule: &BoundaryFunction, mu: f64, rel: f64) -> Result<f64> {
    if rule.is_classical() {
        return Ok(1.0);
    }
    let tol = Tolerance {
        abs: 1e-300,
        rel,
        ..Default::default()
    };
    let f = |x: f64| rule.weight_at_deficit(x) * (-x / mu).exp() / mu;
    let mut cuts: Vec<f64> = rule.breakpoints().into_iter().filter(|b| *b > 0.0).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut a = 0.0;
    let mut total = 0.0;
    for b in cuts {
        total += integrate(f, a, b, tol)?.value;
        a = b;
    }
    Ok(total + integrate_to_infinity(f, a, tol)?.value)
}

/// ψ(u) for exponential claims by quadrature over the mixing law, using the
/// closed form ψ_ℓ(u) = C_w (ℓμ/c) e^{−(1/μ − ℓ/c)u}.
pub fn quadrature_exact_mixed(model: &RiskModel, rule: &BoundaryFunction, u: f64) -> Result<f64> {
    quadrature_exact_mixed_with(model, rule, u, 1e-10)
}

/// As [`quadrature_exact_mixed`] with relative tolerance `rel`.
pub fn quadrature_exact_mixed_with(model: &RiskModel, rule: &BoundaryFunction, u: f64, rel: f64) -> Result<f64> {
    let mu = match model.claim().kind() {
        ClaimKind::Exponential { mean } => *mean,
        _ => return Err(domain("exact quadrature needs exponential claims")),
    };
    if !(u >= 0.0 && u.is_finite()) {
        return Err(domain(format!("initial capital must be finite and nonnegative, got {u}")));
    }
    model.check_net_profit()?;
    let c = model.premium_rate();
    let c_w = deficit_weight_mean(rule, mu, rel)?;
    let psi_cl = model.mixing().integrate_with(
        |l| {
            if l <= 0.0 {
                0.0
            } else {
                l * mu / c * (-(1.0 / mu - l / c) * u).exp()
            }
        },
        Tolerance::relative(rel),
    )?;
    Ok(c_w * psi_cl)
}

/// Per-u estimator output.
#[derive(Debug, Clone)]
struct Sampled {
    u: f64,
    joint: JointEstimate,
    refinement_proxy: Option<f64>,
}

fn exact_estimate(mean: f64) -> Estimate {
    Estimate::from_parts(mean, 0.0, 0, Vec::new())
}

fn sample_at(cfg: &ExperimentConfig, u: f64) -> Result<Sampled> {
    let model = &cfg.model;
    let rule = &cfg.rule;
    let (joint, refinement_proxy) = match cfg.method {
        Method::LadderMc => {
            let intensity = match cfg.fixed_intensity {
                Some(l) => Intensity::Fixed(l),
                None => Intensity::Mixed,
            };
            (estimate_joint(model, rule, u, cfg.n, cfg.seed, intensity)?, None)
        }
        Method::TiltedIs => match cfg.fixed_intensity {
            Some(l) => (is_estimate_joint(model, l, rule, u, cfg.n, cfg.seed)?, None),
            None => {
                let spec = StrataSpec {
                    cells: cfg.cells,
                    ..StrataSpec::default()
                };
                let m = is_estimate_mixed(
                    model,
                    rule,
                    u,
                    spec,
                    cfg.n,
                    cfg.seed,
                    Some(cfg.tolerances.stratification),
                )?;
                (m.joint, Some(m.refinement_proxy))
            }
        },
        Method::QuadratureExact => {
            let tol = cfg.tolerances.quadrature;
            let classical = quadrature_exact_mixed_with(model, &BoundaryFunction::classical(), u, tol)?;
            let modified = if rule.is_classical() {
                classical
            } else {
                quadrature_exact_mixed_with(model, rule, u, tol)?
            };
            let joint = JointEstimate {
                classical: exact_estimate(classical),
                modified: exact_estimate(modified),
                ratio: modified / classical,
                ratio_std_error: 0.0,
            };
            (joint, None)
        }
    };
    debug!(
        "u = {u}: modified {} ± {}, classical {} ± {}",
        joint.modified.mean, joint.modified.std_error, joint.classical.mean, joint.classical.std_error
    );
    Ok(Sampled {
        u,
        joint,
        refinement_proxy,
    })
}

/// Prediction of one limit theorem at one u.
#[derive(Debug, Clone, Copy, Serialize)]
struct Prediction {
    u: f64,
    modified: f64,
    classical: f64,
    ratio_constant: f64,
}

fn single_intensity(model: &RiskModel) -> Option<f64> {
    let mix = model.mixing();
    match (mix.atoms(), mix.density()) {
        ([a], None) if a.mass == 1.0 => Some(a.location),
        _ => None,
    }
}

/// The theorem a run is checked against.
fn resolve_theorem(cfg: &ExperimentConfig) -> Theorem {
    if let Some(t) = cfg.theorem.explicit() {
        return t;
    }
    match applicable_theorem(&cfg.model) {
        Ok(Theorem::LightAtom) if single_intensity(&cfg.model).is_some() => Theorem::LightFixed,
        Ok(t) => t,
        // the sharp check reports the missing endpoint structure
        Err(_) => Theorem::LightSharp,
    }
}

fn predict(model: &RiskModel, rule: &BoundaryFunction, theorem: Theorem, u: f64) -> Result<Prediction> {
    let (modified, classical, ratio_constant) = match theorem {
        Theorem::Heavy => {
            let v = heavy_prediction(model, rule, u)?;
            (v, v, 1.0)
        }
        Theorem::LightFixed => {
            let mut report = HypothesisReport::new(Theorem::LightFixed);
            let single = single_intensity(model);
            report.check(
                "single intensity",
                single.is_some(),
                "the mixing law must be a point mass",
            );
            report.merge(rule.check_hypotheses(Theorem::LightFixed)).into_result()?;
            let p = atom_prediction(model, rule, u)?;
            (p.value, p.classical, p.ratio_constant)
        }
        Theorem::LightAtom => {
            let p = atom_prediction(model, rule, u)?;
            (p.value, p.classical, p.ratio_constant)
        }
        Theorem::LightSharp => {
            let p = sharp_prediction(model, rule, u)?;
            (p.modified, p.classical, p.ratio_constant)
        }
    };
    Ok(Prediction {
        u,
        modified,
        classical,
        ratio_constant,
    })
}

fn constants_json(cfg: &ExperimentConfig, theorem: Option<Theorem>) -> Result<serde_json::Value> {
    let model = &cfg.model;
    let l1 = model.mixing().upper_endpoint();
    let mut out = json!({
        "claim_mean": model.claim().mean(),
        "premium_rate": model.premium_rate(),
        "mixing_upper_endpoint": l1,
        "tail_class": model.claim().tail_class(),
        "rule": cfg.rule,
    });
    if model.check_net_profit().is_ok() {
        out["mean_heavy_prefactor"] = json!(heavy_mixed_prefactor(model)?);
        if l1 > 0.0 {
            out["endpoint"] = json!(AsymptoticConstants::compute(model, l1, &cfg.rule)?);
        }
        let atoms: Vec<AsymptoticConstants> = model
            .mixing()
            .atoms()
            .iter()
            .filter(|a| a.location > 0.0 && a.location < l1)
            .map(|a| AsymptoticConstants::compute(model, a.location, &cfg.rule))
            .collect::<Result<_>>()?;
        if !atoms.is_empty() {
            out["atoms"] = json!(atoms);
        }
    }
    if theorem == Some(Theorem::LightSharp) {
        out["endpoint_regularity"] = json!(EndpointRegularity::compute(model)?);
    }
    Ok(out)
}

fn estimate_json(e: &Estimate) -> serde_json::Value {
    json!({
        "mean": e.mean,
        "std_error": e.std_error,
        "n": e.n,
        "streams": stream_ranges(&e.streams),
    })
}

fn sampled_json(s: &Sampled) -> serde_json::Value {
    let mut v = json!({
        "u": s.u,
        "modified": estimate_json(&s.joint.modified),
        "classical": estimate_json(&s.joint.classical),
        "ratio": s.joint.ratio,
        "ratio_std_error": s.joint.ratio_std_error,
    });
    if let Some(p) = s.refinement_proxy {
        v["refinement_proxy"] = json!(p);
    }
    v
}

fn config_echo(cfg: &ExperimentConfig) -> serde_json::Value {
    serde_json::to_value(&cfg.echo).unwrap_or(serde_json::Value::Null)
}

/// Rendered output files, written only after every computation succeeded.
#[derive(Debug, Default)]
pub struct Outputs {
    pub files: Vec<(String, String)>,
}

impl Outputs {
    fn push(&mut self, name: String, body: String) {
        self.files.push((name, body));
    }

    fn write(&self, dir: &std::path::Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut paths = Vec::new();
        for (name, body) in &self.files {
            let p = dir.join(name);
            std::fs::write(&p, body)?;
            paths.push(p);
        }
        Ok(paths)
    }
}

fn json_body(value: &serde_json::Value) -> Result<String> {
    render_json(value).map_err(|e| Error::Numeric(format!("json serialization: {e}")))
}

fn sample_grid(cfg: &ExperimentConfig) -> Result<Vec<Sampled>> {
    cfg.u_grid
        .iter()
        .map(|&u| {
            info!("{} at u = {u}", cfg.method.tag());
            sample_at(cfg, u)
        })
        .collect()
}

fn render_simulate(cfg: &ExperimentConfig) -> Result<Outputs> {
    let method = cfg.method.tag();
    let samples = sample_grid(cfg)?;
    let rows: Vec<ComparisonRow> = samples
        .iter()
        .map(|s| ComparisonRow::estimate(s.u, s.joint.modified.mean, s.joint.modified.std_error, method))
        .collect();
    let ratio_rows: Vec<ComparisonRow> = samples
        .iter()
        .map(|s| ComparisonRow::estimate(s.u, s.joint.ratio, s.joint.ratio_std_error, method))
        .collect();
    let doc = json!({
        "config": config_echo(cfg),
        "method": method,
        "estimates": samples.iter().map(sampled_json).collect::<Vec<_>>(),
    });
    let mut out = Outputs::default();
    out.push("simulate.csv".into(), render_csv(&rows));
    out.push("simulate_ratio.csv".into(), render_csv(&ratio_rows));
    out.push("simulate.json".into(), json_body(&doc)?);
    Ok(out)
}

fn render_asymptotics(cfg: &ExperimentConfig) -> Result<Outputs> {
    let theorem = resolve_theorem(cfg);
    let predictions: Vec<Prediction> = cfg
        .u_grid
        .iter()
        .map(|&u| predict(&cfg.model, &cfg.rule, theorem, u))
        .collect::<Result<_>>()?;
    let mut doc = json!({
        "config": config_echo(cfg),
        "theorem": theorem,
        "hypotheses": cfg.rule.check_hypotheses(theorem),
        "constants": constants_json(cfg, Some(theorem))?,
        "predictions": predictions,
    });
    if theorem == Theorem::LightSharp && matches!(cfg.model.claim().kind(), ClaimKind::Exponential { .. }) {
        let us: Vec<f64> = cfg.u_grid.iter().copied().filter(|u| *u > 0.0).collect();
        doc["local_uniformity"] = json!(local_uniformity_diagnostic(&cfg.model, &us, &[0.5, 1.0, 2.0])?);
    }
    let mut out = Outputs::default();
    out.push("asymptotics.json".into(), json_body(&doc)?);
    Ok(out)
}

/// compare and table share one pipeline; they differ in file names only.
fn render_comparison(cfg: &ExperimentConfig) -> Result<Outputs> {
    let name = cfg.mode.name();
    let method = cfg.method.tag();
    let theorem = resolve_theorem(cfg);
    // predictions first: a hypothesis failure must not cost a simulation
    let predictions: Vec<Prediction> = cfg
        .u_grid
        .iter()
        .map(|&u| predict(&cfg.model, &cfg.rule, theorem, u))
        .collect::<Result<_>>()?;
    let samples = sample_grid(cfg)?;
    let rows: Vec<ComparisonRow> = samples
        .iter()
        .zip(&predictions)
        .map(|(s, p)| ComparisonRow::against(s.u, s.joint.modified.mean, s.joint.modified.std_error, p.modified, method))
        .collect();
    let classical_rows: Vec<ComparisonRow> = samples
        .iter()
        .zip(&predictions)
        .map(|(s, p)| {
            ComparisonRow::against(s.u, s.joint.classical.mean, s.joint.classical.std_error, p.classical, method)
        })
        .collect();
    let ratio_rows: Vec<ComparisonRow> = samples
        .iter()
        .zip(&predictions)
        .map(|(s, p)| ComparisonRow::against(s.u, s.joint.ratio, s.joint.ratio_std_error, p.ratio_constant, method))
        .collect();
    let summary = |rows: &[ComparisonRow]| {
        let ratios: Vec<f64> = rows.iter().filter_map(|r| r.ratio).collect();
        json!({
            "largest_u_ci_covers_one": rows.last().map(|r| r.covers_one()),
            "trend_statistic": trend_statistic(&ratios),
        })
    };
    let doc = json!({
        "config": config_echo(cfg),
        "method": method,
        "theorem": theorem,
        "hypotheses": cfg.rule.check_hypotheses(theorem),
        "constants": constants_json(cfg, Some(theorem))?,
        "predictions": predictions,
        "estimates": samples.iter().map(sampled_json).collect::<Vec<_>>(),
        "verification": {
            "modified": summary(&rows),
            "classical": summary(&classical_rows),
            "ratio": summary(&ratio_rows),
        },
    });
    let mut out = Outputs::default();
    out.push(format!("{name}.csv"), render_csv(&rows));
    out.push(format!("{name}_classical.csv"), render_csv(&classical_rows));
    out.push(format!("{name}_ratio.csv"), render_csv(&ratio_rows));
    out.push(format!("{name}.json"), json_body(&doc)?);
    Ok(out)
}

fn render(cfg: &ExperimentConfig) -> Result<Outputs> {
    match cfg.mode {
        Mode::Simulate => render_simulate(cfg),
        Mode::Asymptotics => render_asymptotics(cfg),
        Mode::Compare | Mode::Table => render_comparison(cfg),
    }
}

/// Run the experiment on a pool of `cfg.workers` threads and write its files.
///
/// On a hypothesis violation only the sidecar is written, naming the theorem
/// and the failed items.
pub fn run(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::Numeric(format!("thread pool: {e}")))?;
    match pool.install(|| render(cfg)) {
        Ok(out) => out.write(&cfg.out_dir),
        Err(Error::HypothesisViolation(report)) => {
            let doc = json!({
                "config": config_echo(cfg),
                "hypothesis_violation": report,
            });
            let mut out = Outputs::default();
            out.push(format!("{}.json", cfg.mode.name()), json_body(&doc)?);
            out.write(&cfg.out_dir)?;
            Err(Error::HypothesisViolation(report))
        }
        Err(e) => Err(e),
    }
}
