//! Declarative experiment configuration (TOML) and its resolution into a run plan.

use extcurv::estimator::{adapted_frame, predicted_w1, principal_frame, Budget, Method, MIN_TRIALS};
use extcurv::geometry::{CurveShape, HeightFunction, ManifoldKind, ManifoldModel};
use extcurv::vecops::{vec_from, Vector};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

/// Configs shipped with the binary, addressable by name.
pub const BUNDLED: [(&str, &str); 2] = [
    ("circle-closedform", include_str!("../configs/circle-closedform.toml")),
    ("pseudoflat-surface", include_str!("../configs/pseudoflat-surface.toml")),
];

/// Rejected configuration, reported with exit code 2.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn fail<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

/// Catalogue entries as written in a config's `[manifold]` table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ManifoldSpec {
    Circle { radius: f64 },
    Line {},
    Parabola { a: f64 },
    Ellipse { a: f64, b: f64 },
    Helix { radius: f64, pitch: f64 },
    Sphere { dim: usize, radius: f64 },
    FlatTorus { r1: f64, r2: f64 },
    GraphQuadratic { a: f64, b: f64, c: f64, window: f64 },
    GraphBump { amplitude: f64, width: f64, window: f64 },
    GraphMonkeySaddle { k: f64, window: f64 },
}

impl ManifoldSpec {
    pub fn build(&self) -> extcurv::Result<ManifoldModel> {
        use ManifoldSpec::*;
        let graph = |height, window| ManifoldModel::graph_surface(height, window);
        match *self {
            Circle { radius } => ManifoldModel::new(ManifoldKind::Circle { radius }),
            Line {} => ManifoldModel::planar_curve(CurveShape::Line),
            Parabola { a } => ManifoldModel::planar_curve(CurveShape::Parabola { a }),
            Ellipse { a, b } => ManifoldModel::planar_curve(CurveShape::Ellipse { a, b }),
            Helix { radius, pitch } => ManifoldModel::space_curve(CurveShape::Helix { radius, pitch }),
            Sphere { dim, radius } => ManifoldModel::new(ManifoldKind::Sphere { dim, radius }),
            FlatTorus { r1, r2 } => ManifoldModel::new(ManifoldKind::FlatTorus { r1, r2 }),
            GraphQuadratic { a, b, c, window } => graph(HeightFunction::Quadratic { a, b, c }, window),
            GraphBump { amplitude, width, window } => graph(HeightFunction::Bump { amplitude, width }, window),
            GraphMonkeySaddle { k, window } => graph(HeightFunction::MonkeySaddle { k }, window),
        }
    }
}

/// One line per catalogue entry: kind, parameters, intrinsic coordinates.
pub fn catalogue() -> Vec<(&'static str, &'static str, &'static str)> {
    vec![
        ("circle", "radius", "arc length (m=1, k=1)"),
        ("line", "-", "arc length along the x-axis (m=1, k=1)"),
        ("parabola", "a  (y = a x²/2)", "arc length from the vertex (m=1, k=1)"),
        ("ellipse", "a, b", "arc length from (a, 0) (m=1, k=1)"),
        ("helix", "radius, pitch", "arc length (m=1, k=2)"),
        ("sphere", "dim, radius", "normal coordinates at the north pole (m=dim, k=1)"),
        ("flat_torus", "r1, r2", "flat coordinates (m=2, k=2, in R⁴)"),
        ("graph_quadratic", "a, b, c, window", "(x, y) of z = (a x² + 2c xy + b y²)/2 (m=2, k=1)"),
        ("graph_bump", "amplitude, width, window", "(x, y) of a Gaussian bump (m=2, k=1)"),
        ("graph_monkey_saddle", "k, window", "(x, y) of z = k (x³ − 3xy²) (m=2, k=1)"),
    ]
}

/// A width rule `c * delta^p`. `c * delta`, `delta^p`, `delta` and a bare `c` are
/// accepted as shorthands for p = 1, c = 1, both 1, and p = 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WidthRule {
    pub coef: f64,
    pub power: f64,
}

impl WidthRule {
    pub fn eval(&self, delta: f64) -> f64 {
        if self.power == 1.0 {
            self.coef * delta
        } else {
            self.coef * delta.powf(self.power)
        }
    }
}

impl FromStr for WidthRule {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        let bad = || ConfigError(format!("width rule {s:?} is not of the form `c * delta^p`"));
        let number = |t: &str| t.trim().parse::<f64>().map_err(|_| bad());
        let delta_term = |t: &str| -> Result<f64, ConfigError> {
            let t = t.trim();
            match t.strip_prefix("delta") {
                Some("") => Ok(1.0),
                Some(rest) => number(rest.trim_start().strip_prefix('^').ok_or_else(bad)?),
                None => Err(bad()),
            }
        };
        let (coef, power) = match s.split_once('*') {
            Some((c, d)) => (number(c)?, delta_term(d)?),
            None if s.trim().starts_with("delta") => (1.0, delta_term(s)?),
            None => (number(s)?, 0.0),
        };
        if !(coef > 0.0) || !coef.is_finite() {
            return Err(ConfigError(format!("width rule {s:?}: coefficient must be positive and finite")));
        }
        if !(power >= 0.0) || !power.is_finite() {
            return Err(ConfigError(format!("width rule {s:?}: exponent must be finite and non-negative")));
        }
        Ok(Self { coef, power })
    }
}

impl<'de> Deserialize<'de> for WidthRule {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaseSection {
    /// Intrinsic coordinates of x₀ (see `list-manifolds`).
    pub intrinsic: Vec<f64>,
    /// Index into the principal tangent frame at x₀ (default 0).
    pub direction_index: Option<usize>,
    /// Explicit unit tangent direction in ambient coordinates.
    pub direction: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSection {
    pub delta0: f64,
    pub levels: usize,
    pub sigma: WidthRule,
    pub epsilon: WidthRule,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
}

/// Checks evaluated after a run; each contributes one PASS/FAIL line.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CriteriaSection {
    /// Deterministic W₁ equals the circle's closed form within a relative tolerance.
    pub circle_closed_form: Option<ClosedFormCriterion>,
    /// |κ| ≤ c·δ^power on every row.
    pub kappa_power_bound: Option<PowerBoundCriterion>,
    /// Log-log slope of |κ − κ_pred| against δ is at least `min` for every deterministic method.
    pub remainder_slope: Option<SlopeCriterion>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClosedFormCriterion {
    pub rel_tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerBoundCriterion {
    pub c: f64,
    pub power: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlopeCriterion {
    pub min: f64,
}

/// The config file as written.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub seed: u64,
    pub methods: Vec<Method>,
    pub manifold: ManifoldSpec,
    pub base: BaseSection,
    pub schedule: ScheduleSection,
    #[serde(default)]
    pub budget: Budget,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub criteria: CriteriaSection,
}

/// One δ level of a resolved plan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LevelPlan {
    pub level: usize,
    pub delta: f64,
    pub sigma: f64,
    pub epsilon: f64,
    pub kappa_pred: f64,
}

/// A fully resolved, validated plan.
#[derive(Debug, Clone)]
pub struct Plan {
    pub name: String,
    pub seed: u64,
    pub methods: Vec<Method>,
    pub manifold: ManifoldSpec,
    pub model: ManifoldModel,
    pub intrinsic: Vec<f64>,
    pub x0: Vector,
    pub v: Vector,
    pub levels: Vec<LevelPlan>,
    pub budget: Budget,
    pub out_dir: PathBuf,
    pub criteria: CriteriaSection,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError(e.to_string()))
    }

    /// Reads a config file; a path that does not exist is looked up among the bundled
    /// configs by name (with or without `.toml`).
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        if path.exists() {
            let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
            return Self::parse(&text);
        }
        let name = path.to_string_lossy();
        let name = name.strip_suffix(".toml").unwrap_or(&name);
        match BUNDLED.iter().find(|(n, _)| *n == name) {
            Some((_, text)) => Self::parse(text),
            None => fail(format!("{}: no such file or bundled config", path.display())),
        }
    }

    /// Validates everything that can be checked without running an estimate.
    pub fn resolve(&self) -> Result<Plan, ConfigError> {
        if self.name.trim().is_empty() {
            return fail("name must not be empty");
        }
        if self.methods.is_empty() {
            return fail("methods must list at least one estimator");
        }
        for (i, m) in self.methods.iter().enumerate() {
            if self.methods[..i].contains(m) {
                return fail(format!("method {} is listed twice", m.name()));
            }
        }
        let s = &self.schedule;
        if s.levels == 0 {
            return fail("schedule.levels must be at least 1 (got 0 levels)");
        }
        if !(s.delta0 > 0.0 && s.delta0 <= 1.0) {
            return fail(format!("schedule.delta0 must lie in (0, 1], got {}", s.delta0));
        }
        let b = &self.budget;
        if self.methods.iter().any(|m| !m.is_stochastic()) && b.order < extcurv::estimator::MIN_ORDER {
            return fail(format!("budget.order must be at least {}", extcurv::estimator::MIN_ORDER));
        }
        if self.methods.iter().any(|m| m.is_stochastic()) && b.trials < MIN_TRIALS {
            return fail(format!("budget.trials must be at least {MIN_TRIALS} for sampling methods, got {}", b.trials));
        }
        if self.methods.contains(&Method::DiscreteExact) && b.samples == 0 {
            return fail("budget.samples must be positive for discrete_exact");
        }
        if self.methods.contains(&Method::PointCloud) && !(b.intensity > 0.0 && b.intensity.is_finite()) {
            return fail("budget.intensity must be positive for point_cloud");
        }
        let c = &self.criteria;
        if c.circle_closed_form.is_some() && !matches!(self.manifold, ManifoldSpec::Circle { .. }) {
            return fail("criteria.circle_closed_form applies to the circle only");
        }
        if let Some(cf) = c.circle_closed_form {
            if !(cf.rel_tol > 0.0) {
                return fail("criteria.circle_closed_form.rel_tol must be positive");
            }
        }
        if let Some(pb) = c.kappa_power_bound {
            if !(pb.c > 0.0) || !pb.power.is_finite() {
                return fail("criteria.kappa_power_bound needs c > 0 and a finite power");
            }
        }
        if c.remainder_slope.is_some() && s.levels < 2 {
            return fail("criteria.remainder_slope needs at least 2 levels");
        }

        let model = self.manifold.build().map_err(|e| ConfigError(format!("manifold: {e}")))?;
        let x0 = model.embed(&self.base.intrinsic).map_err(|e| ConfigError(format!("base.intrinsic: {e}")))?;
        let v = match (&self.base.direction, self.base.direction_index) {
            (Some(_), Some(_)) => return fail("base.direction and base.direction_index are mutually exclusive"),
            (Some(d), None) => {
                if d.len() != model.ambient_dim() {
                    return fail(format!("base.direction must have {} components", model.ambient_dim()));
                }
                vec_from(d)
            }
            (None, idx) => {
                let frame = principal_frame(&model, &x0).map_err(|e| ConfigError(format!("base: {e}")))?;
                let i = idx.unwrap_or(0);
                match frame.get(i) {
                    Some(e) => e.clone(),
                    None => return fail(format!("base.direction_index {i} exceeds the dimension {}", model.dim())),
                }
            }
        };
        adapted_frame(&model, &x0, &v).map_err(|e| ConfigError(format!("base direction: {e}")))?;

        let mut levels = Vec::with_capacity(s.levels);
        for level in 0..s.levels {
            let delta = s.delta0 * 0.5f64.powi(level as i32);
            let (sigma, epsilon) = (s.sigma.eval(delta), s.epsilon.eval(delta));
            if sigma.max(epsilon) > 0.25 * delta {
                return fail(format!(
                    "level {level}: σ ∨ ε = {} exceeds δ/4 = {} (δ = {delta})",
                    sigma.max(epsilon),
                    0.25 * delta
                ));
            }
            let pred = predicted_w1(&model, &x0, &v, delta, sigma, epsilon)
                .map_err(|e| ConfigError(format!("level {level}: {e}")))?;
            levels.push(LevelPlan { level, delta, sigma, epsilon, kappa_pred: pred.kappa });
        }
        Ok(Plan {
            name: self.name.clone(),
            seed: self.seed,
            methods: self.methods.clone(),
            manifold: self.manifold.clone(),
            model,
            intrinsic: self.base.intrinsic.clone(),
            x0,
            v,
            levels,
            budget: *b,
            out_dir: self.output.dir.clone().unwrap_or_else(|| PathBuf::from("out").join(&self.name)),
            criteria: c.clone(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn width_rules() {
        let r: WidthRule = "0.25 * delta".parse().unwrap();
        assert_eq!(r, WidthRule { coef: 0.25, power: 1.0 });
        assert_eq!(r.eval(0.4), 0.25 * 0.4);
        let r: WidthRule = " 2.5e-1*delta^2 ".parse().unwrap();
        assert_eq!(r, WidthRule { coef: 0.25, power: 2.0 });
        assert_eq!("delta^1.5".parse::<WidthRule>().unwrap(), WidthRule { coef: 1.0, power: 1.5 });
        assert_eq!("delta".parse::<WidthRule>().unwrap(), WidthRule { coef: 1.0, power: 1.0 });
        assert_eq!("0.01".parse::<WidthRule>().unwrap(), WidthRule { coef: 0.01, power: 0.0 });
        for bad in ["", "delta *", "x * delta", "0.1 * sigma", "0.1 * delta^", "-1 * delta", "0.1 * delta^-1", "1 * 2", "0.1 * deltas"] {
            assert!(bad.parse::<WidthRule>().is_err(), "{bad:?} should be rejected");
        }
    }

    #[test]
    fn bundled_configs_resolve() {
        for (name, text) in BUNDLED {
            let cfg = ExperimentConfig::parse(text).unwrap();
            assert_eq!(cfg.name, name);
            cfg.resolve().unwrap();
        }
    }
}
