//! Experiment configuration: a TOML document with an integer schema version.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::distributions::{
    Atom, ClaimDistribution, DensityPart, DensityShape, EndpointExpansion, MixingDistribution, TailClass,
};
use crate::error::{Error, Result};
use crate::ladder::RiskModel;
use crate::rules::{BoundaryFunction, RegularityFlags, Theorem};

pub const SCHEMA_VERSION: i64 = 1;

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Simulate,
    Asymptotics,
    Compare,
    Table,
}

impl Mode {
    pub fn name(&self) -> &'static str {
        match self {
            Mode::Simulate => "simulate",
            Mode::Asymptotics => "asymptotics",
            Mode::Compare => "compare",
            Mode::Table => "table",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[default]
    LadderMc,
    TiltedIs,
    QuadratureExact,
}

impl Method {
    pub fn tag(&self) -> &'static str {
        match self {
            Method::LadderMc => "ladder_mc",
            Method::TiltedIs => "tilted_is",
            Method::QuadratureExact => "quadrature_exact",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TheoremChoice {
    #[default]
    Auto,
    Heavy,
    LightFixed,
    LightAtom,
    LightSharp,
}

impl TheoremChoice {
    pub fn explicit(&self) -> Option<Theorem> {
        match self {
            TheoremChoice::Auto => None,
            TheoremChoice::Heavy => Some(Theorem::Heavy),
            TheoremChoice::LightFixed => Some(Theorem::LightFixed),
            TheoremChoice::LightAtom => Some(Theorem::LightAtom),
            TheoremChoice::LightSharp => Some(Theorem::LightSharp),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClaimSpec {
    Exponential {
        mean: f64,
        tail_class: Option<TailClass>,
    },
    Pareto {
        shape: f64,
        scale: f64,
        tail_class: Option<TailClass>,
    },
    Gamma {
        shape: f64,
        scale: f64,
        tail_class: Option<TailClass>,
    },
    Mixture {
        components: Vec<WeightedClaim>,
        tail_class: Option<TailClass>,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightedClaim {
    pub weight: f64,
    pub claim: ClaimSpec,
}

impl ClaimSpec {
    pub fn build(&self) -> Result<ClaimDistribution> {
        let (dist, declared) = match self {
            ClaimSpec::Exponential { mean, tail_class } => (ClaimDistribution::exponential(*mean)?, tail_class),
            ClaimSpec::Pareto {
                shape,
                scale,
                tail_class,
            } => (ClaimDistribution::pareto(*shape, *scale)?, tail_class),
            ClaimSpec::Gamma {
                shape,
                scale,
                tail_class,
            } => (ClaimDistribution::gamma(*shape, *scale)?, tail_class),
            ClaimSpec::Mixture { components, tail_class } => {
                let parts = components
                    .iter()
                    .map(|c| Ok((c.weight, c.claim.build()?)))
                    .collect::<Result<Vec<_>>>()?;
                (ClaimDistribution::mixture(parts)?, tail_class)
            }
        };
        match declared {
            Some(t) => dist.with_declared_tail_class(*t),
            None => Ok(dist),
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomSpec {
    pub location: f64,
    pub mass: f64,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeName {
    Uniform,
    Beta,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensitySpec {
    pub lo: f64,
    pub hi: f64,
    /// Defaults to one minus the atom masses.
    pub mass: Option<f64>,
    pub shape: ShapeName,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpansionSpec {
    pub coefficient: f64,
    pub exponent: f64,
    pub window: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixingSpec {
    #[serde(default)]
    pub atoms: Vec<AtomSpec>,
    pub density: Option<DensitySpec>,
    pub expansion: Option<ExpansionSpec>,
}

impl MixingSpec {
    pub fn build(&self) -> Result<MixingDistribution> {
        let atoms: Vec<Atom> = self
            .atoms
            .iter()
            .map(|a| Atom {
                location: a.location,
                mass: a.mass,
            })
            .collect();
        let density = match &self.density {
            None => None,
            Some(d) => {
                let shape = match (d.shape, d.alpha, d.beta) {
                    (ShapeName::Uniform, None, None) => DensityShape::Uniform,
                    (ShapeName::Uniform, _, _) => {
                        return Err(config_err("uniform density takes no alpha or beta"))
                    }
                    (ShapeName::Beta, Some(alpha), Some(beta)) => DensityShape::Beta { alpha, beta },
                    (ShapeName::Beta, _, _) => return Err(config_err("beta density needs alpha and beta")),
                };
                let mass = d
                    .mass
                    .unwrap_or_else(|| 1.0 - atoms.iter().map(|a| a.mass).sum::<f64>());
                Some(DensityPart::new(d.lo, d.hi, mass, shape)?)
            }
        };
        let expansion = self.expansion.map(|e| EndpointExpansion {
            coefficient: e.coefficient,
            exponent: e.exponent,
            window: e.window,
        });
        MixingDistribution::new(atoms, density, expansion)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub premium_rate: f64,
    pub claim: ClaimSpec,
    pub mixing: MixingSpec,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlagSpec {
    pub is_monotone: bool,
    pub is_continuous: bool,
    pub limit_at_minus_infinity_is_one: bool,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case", deny_unknown_fields)]
pub enum RuleSpec {
    #[default]
    Classical,
    Threshold {
        d: f64,
    },
    ExpAbsorption {
        a: f64,
    },
    Table {
        points: Vec<(f64, f64)>,
        flags: Option<FlagSpec>,
    },
}

impl RuleSpec {
    pub fn build(&self) -> Result<BoundaryFunction> {
        match self {
            RuleSpec::Classical => Ok(BoundaryFunction::classical()),
            RuleSpec::Threshold { d } => BoundaryFunction::threshold(*d),
            RuleSpec::ExpAbsorption { a } => BoundaryFunction::exp_absorption(*a),
            RuleSpec::Table { points, flags: None } => BoundaryFunction::table(points.clone()),
            RuleSpec::Table {
                points,
                flags: Some(f),
            } => BoundaryFunction::table_with_flags(
                points.clone(),
                RegularityFlags {
                    is_monotone: f.is_monotone,
                    is_continuous: f.is_continuous,
                    limit_at_minus_infinity_is_one: f.limit_at_minus_infinity_is_one,
                },
            ),
        }
    }
}

fn default_cells() -> usize {
    256
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorSpec {
    #[serde(default)]
    pub method: Method,
    /// Fixed intensity ℓ; replaces the mixing law by a point mass.
    pub intensity: Option<f64>,
    /// Density cells of the stratified IS estimator.
    #[serde(default = "default_cells")]
    pub cells: usize,
    #[serde(default)]
    pub theorem: TheoremChoice,
}

impl Default for EstimatorSpec {
    fn default() -> Self {
        EstimatorSpec {
            method: Method::default(),
            intensity: None,
            cells: default_cells(),
            theorem: TheoremChoice::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceSpec {
    /// Relative bound on the stratification refinement proxy.
    #[serde(default = "default_stratification")]
    pub stratification: f64,
    /// Relative tolerance of the mixing quadrature in the exact method.
    #[serde(default = "default_quadrature")]
    pub quadrature: f64,
}

fn default_stratification() -> f64 {
    0.05
}

fn default_quadrature() -> f64 {
    1e-10
}

impl Default for ToleranceSpec {
    fn default() -> Self {
        ToleranceSpec {
            stratification: default_stratification(),
            quadrature: default_quadrature(),
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: Option<PathBuf>,
}

fn default_workers() -> usize {
    1
}

/// The raw document as deserialized.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub schema_version: i64,
    pub model: ModelSpec,
    #[serde(default)]
    pub rule: RuleSpec,
    #[serde(default)]
    pub estimator: EstimatorSpec,
    pub u_grid: Vec<f64>,
    pub n: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_workers")]
    pub workers: usize,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default)]
    pub tolerances: ToleranceSpec,
}

/// A validated experiment.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub model: RiskModel,
    pub rule: BoundaryFunction,
    pub method: Method,
    pub fixed_intensity: Option<f64>,
    pub cells: usize,
    pub theorem: TheoremChoice,
    pub u_grid: Vec<f64>,
    pub n: u64,
    pub seed: u64,
    pub workers: usize,
    pub out_dir: PathBuf,
    pub tolerances: ToleranceSpec,
    /// The document after overrides, without `workers` and `output`.
    pub echo: toml::Value,
}

/// Command-line adjustments applied on top of the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub out_dir: Option<PathBuf>,
    /// `dotted.key=value` pairs; the value is read as TOML, else as a string.
    pub assignments: Vec<String>,
}

fn parse_scalar(text: &str) -> toml::Value {
    match format!("v = {text}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("key present"),
        Err(_) => toml::Value::String(text.to_string()),
    }
}

/// Set `path` (dot separated) in a TOML table, creating intermediate tables.
pub fn apply_override(doc: &mut toml::Table, assignment: &str) -> Result<()> {
    let (path, value) = assignment
        .split_once('=')
        .ok_or_else(|| config_err(format!("override `{assignment}` is not key=value")))?;
    let keys: Vec<&str> = path.trim().split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(config_err(format!("override key `{path}` has an empty segment")));
    }
    let mut table = doc;
    for k in &keys[..keys.len() - 1] {
        let entry = table
            .entry(k.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry
            .as_table_mut()
            .ok_or_else(|| config_err(format!("override path `{path}` crosses non-table `{k}`")))?;
    }
    table.insert(keys[keys.len() - 1].to_string(), parse_scalar(value.trim()));
    Ok(())
}

fn strictly_increasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[0] < w[1])
}

impl ExperimentConfig {
    pub fn load(path: &Path, mode: Mode, overrides: &Overrides) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
        Self::from_str(&text, mode, overrides)
    }

    pub fn from_str(text: &str, mode: Mode, overrides: &Overrides) -> Result<Self> {
        let mut doc: toml::Table = text.parse().map_err(|e| config_err(format!("{e}")))?;
        for a in &overrides.assignments {
            apply_override(&mut doc, a)?;
        }
        if let Some(seed) = overrides.seed {
            doc.insert("seed".into(), toml::Value::Integer(seed as i64));
        }
        match doc.get("schema_version") {
            Some(toml::Value::Integer(SCHEMA_VERSION)) => {}
            Some(v) => {
                return Err(config_err(format!(
                    "schema_version {v} is not supported (expected {SCHEMA_VERSION})"
                )))
            }
            None => return Err(config_err("missing schema_version")),
        }
        let file: ConfigFile = toml::Value::Table(doc.clone())
            .try_into()
            .map_err(|e: toml::de::Error| config_err(e.to_string()))?;
        let built = Self::validate(file, mode, overrides);
        let mut cfg = built.map_err(|e| match e {
            Error::Domain(m) => Error::Config(m),
            other => other,
        })?;
        doc.remove("workers");
        doc.remove("output");
        doc.insert("mode".into(), toml::Value::String(mode.name().into()));
        cfg.echo = toml::Value::Table(doc);
        Ok(cfg)
    }

    fn validate(file: ConfigFile, mode: Mode, overrides: &Overrides) -> Result<Self> {
        if !(file.model.premium_rate > 0.0 && file.model.premium_rate.is_finite()) {
            return Err(config_err(format!(
                "premium_rate must be positive, got {}",
                file.model.premium_rate
            )));
        }
        if file.u_grid.is_empty() || !strictly_increasing(&file.u_grid) {
            return Err(config_err("u_grid must be nonempty and strictly increasing"));
        }
        if file.u_grid.iter().any(|u| !(*u >= 0.0 && u.is_finite())) {
            return Err(config_err("u_grid values must be finite and nonnegative"));
        }
        if file.n < 1 {
            return Err(config_err("n must be at least 1"));
        }
        let workers = overrides.workers.unwrap_or(file.workers);
        if workers < 1 {
            return Err(config_err("workers must be at least 1"));
        }
        if file.estimator.cells < 2 {
            return Err(config_err("estimator.cells must be at least 2"));
        }
        let claim = file.model.claim.build()?;
        let mixing = match file.estimator.intensity {
            Some(l) => MixingDistribution::point_mass(l)?,
            None => file.model.mixing.build()?,
        };
        let model = RiskModel::new(file.model.premium_rate, claim, mixing)?;
        let rule = file.rule.build()?;
        rule.validate_flags(model.claim().mean())?;
        let out_dir = overrides
            .out_dir
            .clone()
            .or(file.output.dir)
            .unwrap_or_else(|| PathBuf::from("out"));
        Ok(ExperimentConfig {
            mode,
            model,
            rule,
            method: file.estimator.method,
            fixed_intensity: file.estimator.intensity,
            cells: file.estimator.cells,
            theorem: file.estimator.theorem,
            u_grid: file.u_grid,
            n: file.n,
            seed: file.seed,
            workers,
            out_dir,
            tolerances: file.tolerances,
            echo: toml::Value::Table(toml::Table::new()),
        })
    }
}
