//! Coarse extrinsic curvature estimates, their predicted second-order expansion,
//! scaling-regime limits and mean-curvature recovery.
//!
//! With m = dim M, k = codim M and e₁ = v, the expansion reads
//!
//! κ_{σ,ε}(x₀, exp(δv)) = −(σ²/(k+2) − ε²/(2(m+2)))·⟨II(e₁,e₁), H⟩ + O(δ³)
//!
//! whenever II(e₁, e_j) = 0 for j ≥ 2. Everything here refuses to run when that
//! frame condition fails rather than return a number the expansion does not cover.

use crate::error::{Error, Result};
use crate::geometry::ManifoldModel;
use crate::measures::{poisson_tube_with_volume, sample_tube_framed, segment_volume, TubeSegmentSpec};
use crate::rng::{stream, Role};
use crate::transport::{w1_exact, SegmentPair};
use crate::vecops::{compensated_sum, loglog_slope, orthonormal_complement, Vector};
use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Fewest trials accepted by the stochastic methods.
pub const MIN_TRIALS: usize = 30;
/// Smallest quadrature order accepted by the deterministic methods.
pub const MIN_ORDER: usize = 8;
/// Relative tolerance of the frame condition II(e₁, e_j) = 0.
const FRAME_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    /// Upper bound ∫‖Tz − z‖ dμ_{x₀} by quadrature.
    #[serde(rename = "quadrature_T")]
    QuadratureT,
    /// Kantorovich–Rubinstein lower bound with the chord-direction test function.
    #[serde(rename = "dual")]
    Dual,
    /// Exact OT between equal-size uniform samples drawn with common random numbers.
    #[serde(rename = "discrete_exact")]
    DiscreteExact,
    /// Exact OT between independent Poisson clouds in the two segments.
    #[serde(rename = "point_cloud")]
    PointCloud,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::QuadratureT, Method::Dual, Method::DiscreteExact, Method::PointCloud];

    pub fn name(self) -> &'static str {
        match self {
            Method::QuadratureT => "quadrature_T",
            Method::Dual => "dual",
            Method::DiscreteExact => "discrete_exact",
            Method::PointCloud => "point_cloud",
        }
    }

    pub fn is_stochastic(self) -> bool {
        matches!(self, Method::DiscreteExact | Method::PointCloud)
    }
}

/// Work limits for one estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Budget {
    /// Radial quadrature nodes (deterministic methods).
    pub order: usize,
    /// Points per segment (discrete_exact).
    pub samples: usize,
    /// Poisson intensity per unit ambient volume (point_cloud).
    pub intensity: f64,
    /// Independent repetitions (stochastic methods).
    pub trials: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Self { order: 8, samples: 400, intensity: 1e4, trials: MIN_TRIALS }
    }
}

/// κ = 1 − w1/chord for one (x₀, y) pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvatureEstimate {
    pub kappa: f64,
    pub w1: f64,
    /// ‖x₀ − y‖ from the embedding.
    pub chord: f64,
    pub method: Method,
    /// Standard error over trials; 0 for deterministic methods.
    pub stderr: f64,
}

impl CurvatureEstimate {
    pub fn new(w1: f64, chord: f64, method: Method, stderr: f64) -> Result<Self> {
        if !(chord > 0.0) || !chord.is_finite() {
            return Err(Error::Contract(format!("chord must be positive, got {chord}")));
        }
        Ok(Self { kappa: 1.0 - w1 / chord, w1, chord, method, stderr })
    }
}

/// The second-order prediction for W₁ and κ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictedExpansion {
    pub chord: f64,
    /// ⟨II(e₁, e₁), H⟩ at x₀.
    pub inner: f64,
    /// c₂ = (σ²/(k+2) − ε²/(2(m+2)))·⟨II(e₁,e₁),H⟩.
    pub coefficient: f64,
    /// chord·(1 + c₂).
    pub w1: f64,
    /// −c₂.
    pub kappa: f64,
    /// Order of the neglected remainder in κ (it is one higher in W₁).
    pub remainder_order: u32,
}

/// σ²/(k+2) − ε²/(2(m+2)): the factor multiplying ⟨II(e₁,e₁),H⟩ in −κ.
pub fn width_factor(m: usize, k: usize, sigma: f64, epsilon: f64) -> f64 {
    sigma * sigma / (k as f64 + 2.0) - epsilon * epsilon / (2.0 * (m as f64 + 2.0))
}

/// ε/σ at which the width factor vanishes: √(2(m+2)/(k+2)).
pub fn pseudo_flat_ratio(m: usize, k: usize) -> f64 {
    (2.0 * (m as f64 + 2.0) / (k as f64 + 2.0)).sqrt()
}

/// Orthonormal tangent frame starting with v, after checking II(v, e_j) = 0 for j ≥ 2.
pub fn adapted_frame(model: &ManifoldModel, x0: &Vector, v: &Vector) -> Result<Vec<Vector>> {
    let tangent = model.tangent_frame(x0)?;
    let vn = v.norm();
    if (vn - 1.0).abs() > 1e-9 {
        return Err(Error::Contract(format!("direction must be a unit vector, norm is {vn}")));
    }
    let residual: Vector = v - tangent.iter().fold(Vector::zeros(v.len()), |acc, e| acc + e * e.dot(v));
    if residual.norm() > 1e-9 {
        return Err(Error::Contract("direction is not tangent at x₀".into()));
    }
    // Complete v inside the tangent space.
    let mut frame = vec![v.clone()];
    for e in &tangent {
        let mut w = e.clone();
        for f in &frame {
            w -= f * f.dot(&w);
        }
        if w.norm() > 1e-6 && frame.len() < tangent.len() {
            frame.push(&w / w.norm());
        }
    }
    let scale = model.second_fundamental_form(x0, v, v)?.norm().max(1.0);
    for e in &frame[1..] {
        let off = model.second_fundamental_form(x0, v, e)?.norm();
        if off > FRAME_TOL * scale {
            return Err(Error::Contract(format!(
                "frame condition II(e₁, e_j) = 0 fails at x₀ (|II(e₁, e_j)| = {off:e}); \
                 choose a principal direction"
            )));
        }
    }
    Ok(frame)
}

/// Orthonormal tangent frame diagonalizing II at x₀.
///
/// In codimension 1 these are the eigenvectors of the shape operator. In higher
/// codimension the standard tangent frame is used if it already diagonalizes II;
/// otherwise no such frame is sought and the call is refused.
pub fn principal_frame(model: &ManifoldModel, x0: &Vector) -> Result<Vec<Vector>> {
    let tangent = model.tangent_frame(x0)?;
    let m = tangent.len();
    if m == 1 {
        return Ok(tangent);
    }
    let frame = if model.codim() == 1 {
        let n = &model.normal_frame(x0)?[0];
        let mut s = DMatrix::<f64>::zeros(m, m);
        for i in 0..m {
            for j in 0..m {
                s[(i, j)] = model.second_fundamental_form(x0, &tangent[i], &tangent[j])?.dot(n);
            }
        }
        let eig = SymmetricEigen::new(s);
        (0..m)
            .map(|c| {
                let e = (0..m).fold(Vector::zeros(x0.len()), |acc, i| acc + &tangent[i] * eig.eigenvectors[(i, c)]);
                &e / e.norm()
            })
            .collect()
    } else {
        tangent
    };
    check_diagonal(model, x0, &frame)?;
    Ok(frame)
}

fn check_diagonal(model: &ManifoldModel, x0: &Vector, frame: &[Vector]) -> Result<()> {
    let mut scale = 1.0f64;
    for e in frame {
        scale = scale.max(model.second_fundamental_form(x0, e, e)?.norm());
    }
    for (i, a) in frame.iter().enumerate() {
        for b in &frame[i + 1..] {
            let off = model.second_fundamental_form(x0, a, b)?.norm();
            if off > FRAME_TOL * scale {
                return Err(Error::Contract(format!(
                    "no tangent frame diagonalizing II was found at x₀ (|II(e_i, e_j)| = {off:e})"
                )));
            }
        }
    }
    Ok(())
}

fn check_widths(delta: f64, sigma: f64, epsilon: f64) -> Result<()> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::Contract(format!("shift δ must be positive, got {delta}")));
    }
    if !(sigma > 0.0) || !(epsilon > 0.0) {
        return Err(Error::Contract(format!("widths must be positive, got σ = {sigma}, ε = {epsilon}")));
    }
    if sigma.max(epsilon) > 0.25 * delta * (1.0 + 1e-12) {
        return Err(Error::Contract(format!("σ ∨ ε = {} exceeds δ/4 = {}", sigma.max(epsilon), 0.25 * delta)));
    }
    Ok(())
}

/// Second-order prediction of W₁(μ_{x₀}, μ_y) and κ for y = exp_{x₀}(δv).
pub fn predicted_w1(
    model: &ManifoldModel,
    x0: &Vector,
    v: &Vector,
    delta: f64,
    sigma: f64,
    epsilon: f64,
) -> Result<PredictedExpansion> {
    check_widths(delta, sigma, epsilon)?;
    adapted_frame(model, x0, v)?;
    let y = model.geodesic(x0, v, delta)?;
    let chord = (&y - x0).norm();
    let inner = model.second_fundamental_form(x0, v, v)?.dot(&model.mean_curvature(x0)?);
    let coefficient = width_factor(model.dim(), model.codim(), sigma, epsilon) * inner;
    Ok(PredictedExpansion { chord, inner, coefficient, w1: chord * (1.0 + coefficient), kappa: -coefficient, remainder_order: 3 })
}

/// κ_{σ,ε}(x₀, exp_{x₀}(δv)) by the chosen method. Random streams are keyed by
/// (seed, experiment 0, trial).
#[allow(clippy::too_many_arguments)]
pub fn coarse_curvature(
    model: &ManifoldModel,
    x0: &Vector,
    v: &Vector,
    delta: f64,
    sigma: f64,
    epsilon: f64,
    method: Method,
    budget: &Budget,
    seed: u64,
) -> Result<CurvatureEstimate> {
    coarse_curvature_in_experiment(model, x0, v, delta, sigma, epsilon, method, budget, seed, 0)
}

/// [`coarse_curvature`] with an explicit experiment index for the random streams, so
/// that different levels of a sweep draw independent samples.
#[allow(clippy::too_many_arguments)]
pub fn coarse_curvature_in_experiment(
    model: &ManifoldModel,
    x0: &Vector,
    v: &Vector,
    delta: f64,
    sigma: f64,
    epsilon: f64,
    method: Method,
    budget: &Budget,
    seed: u64,
    experiment: u64,
) -> Result<CurvatureEstimate> {
    check_widths(delta, sigma, epsilon)?;
    adapted_frame(model, x0, v)?;
    match method {
        Method::QuadratureT | Method::Dual => {
            if budget.order < MIN_ORDER {
                return Err(Error::Contract(format!("quadrature order must be ≥ {MIN_ORDER}, got {}", budget.order)));
            }
            let pair = SegmentPair::new(model, x0, v, delta, sigma, epsilon, budget.order)?;
            let w1 = if method == Method::QuadratureT { pair.upper_bound()? } else { pair.dual_lower_bound()?.value };
            CurvatureEstimate::new(w1, pair.chord(), method, 0.0)
        }
        Method::DiscreteExact | Method::PointCloud => {
            if budget.trials < MIN_TRIALS {
                return Err(Error::Contract(format!(
                    "stochastic methods need at least {MIN_TRIALS} trials, got {}",
                    budget.trials
                )));
            }
            let pair = StochasticPair::new(model, x0, v, delta, sigma, epsilon, method, budget)?;
            let w1s: Vec<f64> = (0..budget.trials)
                .into_par_iter()
                .map(|t| pair.trial_w1(seed, experiment, t as u64))
                .collect::<Result<_>>()?;
            let (mean, stderr) = mean_and_stderr(&w1s);
            CurvatureEstimate::new(mean, pair.chord(), method, stderr)
        }
    }
}

/// The two segments of a stochastic estimate, prepared once and sampled per trial.
#[derive(Debug, Clone)]
pub struct StochasticPair {
    method: Method,
    budget: Budget,
    source: TubeSegmentSpec,
    target: TubeSegmentSpec,
    source_frame: Vec<Vector>,
    target_frame: Vec<Vector>,
    source_volume: f64,
    target_volume: f64,
    chord: f64,
}

impl StochasticPair {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        model: &ManifoldModel,
        x0: &Vector,
        v: &Vector,
        delta: f64,
        sigma: f64,
        epsilon: f64,
        method: Method,
        budget: &Budget,
    ) -> Result<Self> {
        if !method.is_stochastic() {
            return Err(Error::Contract(format!("{} is not a sampling method", method.name())));
        }
        check_widths(delta, sigma, epsilon)?;
        adapted_frame(model, x0, v)?;
        if method == Method::DiscreteExact && budget.samples == 0 {
            return Err(Error::Contract("discrete_exact needs at least one sample".into()));
        }
        let chart = model.fermi_chart(x0, v)?;
        let at_x = chart.frame(&vec![0.0; model.dim()])?;
        let mut alpha = vec![0.0; model.dim()];
        alpha[0] = delta;
        let at_y = chart.frame(&alpha)?;
        let source = TubeSegmentSpec::new(model.clone(), x0.clone(), v.clone(), sigma, epsilon)?;
        let target = source.recentered(at_y.point.clone(), at_y.tangent[0].clone())?;
        let (source_volume, target_volume) = if method == Method::PointCloud {
            (segment_volume(&source)?, segment_volume(&target)?)
        } else {
            (0.0, 0.0)
        };
        Ok(Self {
            method,
            budget: *budget,
            chord: (&at_y.point - x0).norm(),
            source_frame: at_x.tangent.iter().chain(&at_x.normal).cloned().collect(),
            target_frame: at_y.tangent.iter().chain(&at_y.normal).cloned().collect(),
            source,
            target,
            source_volume,
            target_volume,
        })
    }

    /// ‖x₀ − y‖.
    pub fn chord(&self) -> f64 {
        self.chord
    }

    /// W₁ between the samples of one trial. Streams are keyed by (seed, experiment,
    /// trial); discrete_exact drives both segments from the source stream.
    pub fn trial_w1(&self, seed: u64, experiment: u64, trial: u64) -> Result<f64> {
        let (mu, nu) = if self.method == Method::DiscreteExact {
            let mut rng = stream(seed, experiment, trial, Role::Source);
            let n = self.budget.samples;
            let mu = sample_tube_framed(&self.source, &self.source_frame, n, &mut rng.clone())?;
            (mu, sample_tube_framed(&self.target, &self.target_frame, n, &mut rng)?)
        } else {
            let n = self.budget.intensity;
            let mut rs = stream(seed, experiment, trial, Role::Source);
            let mut rt = stream(seed, experiment, trial, Role::Target);
            (
                poisson_tube_with_volume(&self.source, n, self.source_volume, &mut rs)?,
                poisson_tube_with_volume(&self.target, n, self.target_volume, &mut rt)?,
            )
        };
        Ok(w1_exact(&mu, &nu)?.0)
    }
}

/// Sample mean and standard error of the mean.
pub fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = compensated_sum(values.iter().copied()) / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = compensated_sum(values.iter().map(|x| (x - mean).powi(2))) / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// How σ and ε shrink with δ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "regime", rename_all = "snake_case")]
pub enum Regime {
    /// σ = δ/(4·max(1, C)), ε = Cσ.
    Coupled { c: f64 },
    /// σ = δ/4, ε = δ²/4.
    SigmaDominant,
    /// ε = δ/4, σ = δ²/4.
    EpsilonDominant,
}

/// Dyadic levels δ_ℓ = δ₀·2^(−ℓ) together with a regime.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub regime: Regime,
    pub delta0: f64,
}

impl Schedule {
    pub fn new(regime: Regime, delta0: f64) -> Result<Self> {
        if !(delta0 > 0.0 && delta0 <= 1.0) {
            return Err(Error::Contract(format!("δ₀ must lie in (0, 1], got {delta0}")));
        }
        if let Regime::Coupled { c } = regime {
            if !(c > 0.0) || !c.is_finite() {
                return Err(Error::Contract(format!("coupling constant must be positive, got {c}")));
            }
        }
        Ok(Self { regime, delta0 })
    }

    pub fn delta(&self, level: usize) -> f64 {
        self.delta0 * 0.5f64.powi(level as i32)
    }

    /// (σ, ε) at shift δ.
    pub fn widths(&self, delta: f64) -> (f64, f64) {
        match self.regime {
            Regime::Coupled { c } => {
                let sigma = delta / (4.0 * c.max(1.0));
                (sigma, c * sigma)
            }
            Regime::SigmaDominant => (0.25 * delta, 0.25 * delta * delta),
            Regime::EpsilonDominant => (0.25 * delta * delta, 0.25 * delta),
        }
    }

    /// The factor s with κ ≈ s·⟨II(e₁,e₁),H⟩ as δ → 0, keeping only the dominant
    /// width in the one-sided regimes.
    pub fn leading_factor(&self, m: usize, k: usize, delta: f64) -> Result<f64> {
        let (sigma, epsilon) = self.widths(delta);
        let s = match self.regime {
            Regime::Coupled { .. } => -width_factor(m, k, sigma, epsilon),
            Regime::SigmaDominant => -sigma * sigma / (k as f64 + 2.0),
            Regime::EpsilonDominant => epsilon * epsilon / (2.0 * (m as f64 + 2.0)),
        };
        let scale = sigma * sigma + epsilon * epsilon;
        if s.abs() <= 1e-12 * scale {
            return Err(Error::Contract(format!(
                "the schedule is pseudo-flat (ε/σ = √(2(m+2)/(k+2)) = {:.6}); κ carries no second-order signal",
                pseudo_flat_ratio(m, k)
            )));
        }
        Ok(s)
    }
}

/// One δ level of a regime study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelRecord {
    pub delta: f64,
    pub sigma: f64,
    pub epsilon: f64,
    /// κ (a sum over directions for mean-curvature studies).
    pub kappa: f64,
    pub stderr: f64,
    /// κ from the second-order prediction.
    pub kappa_pred: f64,
    /// κ divided by the schedule's leading factor.
    pub scaled: f64,
}

/// Limit extracted from a regime study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeLimit {
    /// Richardson-extrapolated limit of the scaled values.
    pub extracted: f64,
    /// The geometric value the limit should approach.
    pub predicted: f64,
    pub levels: Vec<LevelRecord>,
    /// Columns E, E′ = 2E_{ℓ+1} − E_ℓ, E″ = (4E′_{ℓ+1} − E′_ℓ)/3.
    pub richardson: Vec<Vec<f64>>,
    /// Log-log slope of |κ − κ_pred| against δ; `None` when every remainder vanishes.
    pub remainder_slope: Option<f64>,
    /// Whether |scaled − extracted| shrinks from each level to the next.
    pub monotone: bool,
}

/// Two-step Richardson table for values at δ, δ/2, δ/4, … with errors a·δ + b·δ² + ….
pub fn richardson(values: &[f64]) -> Vec<Vec<f64>> {
    let first: Vec<f64> = values.windows(2).map(|w| 2.0 * w[1] - w[0]).collect();
    let second: Vec<f64> = first.windows(2).map(|w| (4.0 * w[1] - w[0]) / 3.0).collect();
    vec![values.to_vec(), first, second]
}

/// Extracts ⟨II(e₁,e₁),H⟩ from κ along a schedule of dyadic levels.
#[allow(clippy::too_many_arguments)]
pub fn regime_limit(
    model: &ManifoldModel,
    x0: &Vector,
    v: &Vector,
    schedule: &Schedule,
    levels: usize,
    method: Method,
    budget: &Budget,
    seed: u64,
) -> Result<RegimeLimit> {
    let delta = schedule.delta(0);
    let (sigma, epsilon) = schedule.widths(delta);
    let predicted = predicted_w1(model, x0, v, delta, sigma, epsilon)?.inner;
    run_levels(model, x0, std::slice::from_ref(v), schedule, levels, method, budget, seed, predicted)
}

/// ‖H(x₀)‖² from Σ_j κ(x₀, exp(δ e_j)) over a principal frame, divided by
/// ε²/(2(m+2)) − σ²/(k+2).
#[allow(clippy::too_many_arguments)]
pub fn mean_curvature_norm(
    model: &ManifoldModel,
    x0: &Vector,
    delta: f64,
    sigma: f64,
    epsilon: f64,
    method: Method,
    budget: &Budget,
    seed: u64,
) -> Result<f64> {
    let frame = principal_frame(model, x0)?;
    mean_curvature_norm_in_frame(model, x0, &frame, delta, sigma, epsilon, method, budget, seed)
}

/// [`mean_curvature_norm`] in a caller-supplied orthonormal frame that diagonalizes II.
#[allow(clippy::too_many_arguments)]
pub fn mean_curvature_norm_in_frame(
    model: &ManifoldModel,
    x0: &Vector,
    frame: &[Vector],
    delta: f64,
    sigma: f64,
    epsilon: f64,
    method: Method,
    budget: &Budget,
    seed: u64,
) -> Result<f64> {
    check_frame(model, x0, frame)?;
    let factor = -width_factor(model.dim(), model.codim(), sigma, epsilon);
    if factor.abs() <= 1e-12 * (sigma * sigma + epsilon * epsilon) {
        return Err(Error::Contract("ε²/(2(m+2)) − σ²/(k+2) vanishes: pseudo-flat widths".into()));
    }
    let mut kappas = Vec::with_capacity(frame.len());
    for (j, e) in frame.iter().enumerate() {
        let est = coarse_curvature_in_experiment(model, x0, e, delta, sigma, epsilon, method, budget, seed, j as u64)?;
        kappas.push(est.kappa);
    }
    Ok(compensated_sum(kappas) / factor)
}

/// ‖H(x₀)‖² extracted along a schedule with Richardson extrapolation.
pub fn mean_curvature_norm_limit(
    model: &ManifoldModel,
    x0: &Vector,
    schedule: &Schedule,
    levels: usize,
    method: Method,
    budget: &Budget,
    seed: u64,
) -> Result<RegimeLimit> {
    let frame = principal_frame(model, x0)?;
    let predicted = model.mean_curvature(x0)?.norm_squared();
    run_levels(model, x0, &frame, schedule, levels, method, budget, seed, predicted)
}

fn check_frame(model: &ManifoldModel, x0: &Vector, frame: &[Vector]) -> Result<()> {
    if frame.len() != model.dim() {
        return Err(Error::Contract(format!("frame must have {} vectors, got {}", model.dim(), frame.len())));
    }
    for (i, a) in frame.iter().enumerate() {
        for (j, b) in frame.iter().enumerate() {
            let target = if i == j { 1.0 } else { 0.0 };
            if (a.dot(b) - target).abs() > 1e-9 {
                return Err(Error::Contract("frame is not orthonormal".into()));
            }
        }
    }
    // Tangency: each vector lies in the span of the model's tangent frame.
    let tangent = model.tangent_frame(x0)?;
    let normals = orthonormal_complement(&tangent, x0.len());
    if frame.iter().any(|e| normals.iter().any(|n| n.dot(e).abs() > 1e-9)) {
        return Err(Error::Contract("frame vectors must be tangent at x₀".into()));
    }
    check_diagonal(model, x0, frame)
}

#[allow(clippy::too_many_arguments)]
fn run_levels(
    model: &ManifoldModel,
    x0: &Vector,
    directions: &[Vector],
    schedule: &Schedule,
    levels: usize,
    method: Method,
    budget: &Budget,
    seed: u64,
    predicted: f64,
) -> Result<RegimeLimit> {
    if levels < 4 {
        return Err(Error::Contract(format!("regime limits need at least 4 dyadic levels, got {levels}")));
    }
    let (m, k) = (model.dim(), model.codim());
    let mut records = Vec::with_capacity(levels);
    for level in 0..levels {
        let delta = schedule.delta(level);
        let (sigma, epsilon) = schedule.widths(delta);
        let factor = schedule.leading_factor(m, k, delta)?;
        let mut kappa = Vec::new();
        let mut var = 0.0;
        let mut kappa_pred = Vec::new();
        for (j, e) in directions.iter().enumerate() {
            let experiment = (level * directions.len() + j) as u64;
            let est = coarse_curvature_in_experiment(model, x0, e, delta, sigma, epsilon, method, budget, seed, experiment)?;
            kappa.push(est.kappa);
            var += (est.stderr / est.chord).powi(2);
            kappa_pred.push(predicted_w1(model, x0, e, delta, sigma, epsilon)?.kappa);
        }
        let kappa = compensated_sum(kappa);
        records.push(LevelRecord {
            delta,
            sigma,
            epsilon,
            kappa,
            stderr: var.sqrt(),
            kappa_pred: compensated_sum(kappa_pred),
            scaled: kappa / factor,
        });
    }
    let scaled: Vec<f64> = records.iter().map(|r| r.scaled).collect();
    let richardson = richardson(&scaled);
    let extracted = *richardson[2].last().expect("at least two second-order entries");
    let deltas: Vec<f64> = records.iter().map(|r| r.delta).collect();
    let remainders: Vec<f64> = records.iter().map(|r| (r.kappa - r.kappa_pred).abs()).collect();
    let remainder_slope = if remainders.iter().all(|r| *r > 1e-300) {
        Some(loglog_slope(&deltas, &remainders))
    } else {
        None
    };
    let gaps: Vec<f64> = scaled.iter().map(|s| (s - extracted).abs()).collect();
    let monotone = gaps.windows(2).all(|w| w[1] <= w[0]);
    Ok(RegimeLimit { extracted, predicted, levels: records, richardson, remainder_slope, monotone })
}
