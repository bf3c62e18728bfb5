//! Tube test measures: the uniform probability measure on
//! B_{σ,ε}(x) = {z : ‖z − π(z)‖ < σ, d_M(π(z), x) < ε}.
//!
//! Three constructions: deterministic product quadrature in normal coordinates
//! (weighted by the ambient volume density), i.i.d. rejection sampling, and Poisson
//! point processes restricted to the segment.

use crate::error::{Error, Result};
use crate::geometry::{FermiChart, FermiPoint, ManifoldModel};
use crate::quadrature::ball_rule;
use crate::vecops::{compensated_sum, Vector};
use rand::Rng;
use rand_distr::{Distribution, Poisson};
use std::fmt::Write as _;

/// Proposals after which rejection sampling checks its acceptance rate.
const PROPOSAL_CHECK: usize = 1_000_000;
const MIN_ACCEPTANCE: f64 = 1e-4;
/// Quadrature order used for segment volumes (Poisson intensities).
const VOLUME_ORDER: usize = 8;

/// A tube segment B_{σ,ε}(x) together with the base direction of its Fermi chart.
#[derive(Debug, Clone)]
pub struct TubeSegmentSpec {
    pub manifold: ManifoldModel,
    pub center: Vector,
    pub direction: Vector,
    pub sigma: f64,
    pub epsilon: f64,
}

impl TubeSegmentSpec {
    pub fn new(manifold: ManifoldModel, center: Vector, direction: Vector, sigma: f64, epsilon: f64) -> Result<Self> {
        if !(sigma > 0.0) || sigma >= manifold.reach_bound() {
            return Err(Error::OutOfReach { distance: sigma, reach: manifold.reach_bound() });
        }
        if !(epsilon > 0.0) || epsilon >= manifold.injectivity_bound() {
            return Err(Error::Domain(format!(
                "epsilon {epsilon} must lie in (0, {})",
                manifold.injectivity_bound()
            )));
        }
        // Validates that the center is on M and the direction is a unit tangent.
        manifold.fermi_chart(&center, &direction)?;
        Ok(Self { manifold, center, direction, sigma, epsilon })
    }

    /// The same σ, ε around another point.
    pub fn recentered(&self, center: Vector, direction: Vector) -> Result<Self> {
        Self::new(self.manifold.clone(), center, direction, self.sigma, self.epsilon)
    }

    pub fn chart(&self) -> Result<FermiChart> {
        self.manifold.fermi_chart(&self.center, &self.direction)
    }

    /// Membership in the open segment.
    pub fn contains(&self, z: &Vector) -> bool {
        let Ok(p) = self.manifold.project(z) else {
            return false;
        };
        if p.distance >= self.sigma || (&p.foot - &self.center).norm() >= self.epsilon {
            return false;
        }
        matches!(self.manifold.distance(&p.foot, &self.center), Ok(d) if d < self.epsilon)
    }

    /// Axis-aligned box around the center with half-width 1.1(ε + σ).
    pub fn bounding_box(&self) -> (Vector, Vector) {
        let h = 1.1 * (self.epsilon + self.sigma);
        (self.center.add_scalar(-h), self.center.add_scalar(h))
    }
}

/// Finitely supported measure on ℝⁿ with atoms stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    dim: usize,
    coords: Vec<f64>,
    weights: Vec<f64>,
}

impl DiscreteMeasure {
    pub fn new(dim: usize, coords: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if dim == 0 || coords.len() != dim * weights.len() {
            return Err(Error::Contract(format!(
                "{} coordinates do not form {} atoms of dimension {dim}",
                coords.len(),
                weights.len()
            )));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::Contract("weights must be finite and nonnegative".into()));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::Contract("atom coordinates must be finite".into()));
        }
        Ok(Self { dim, coords, weights })
    }

    /// Equal weights 1/n on the given atoms.
    pub fn uniform(dim: usize, coords: Vec<f64>) -> Result<Self> {
        let n = coords.len().checked_div(dim).unwrap_or(0);
        Self::new(dim, coords, vec![1.0 / n as f64; n])
    }

    pub fn from_points(points: &[Vector], weights: Vec<f64>) -> Result<Self> {
        let dim = points.first().map_or(0, |p| p.len());
        if points.iter().any(|p| p.len() != dim) {
            return Err(Error::Contract("atoms of mixed dimension".into()));
        }
        Self::new(dim, points.iter().flat_map(|p| p.iter().copied()).collect(), weights)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total_mass(&self) -> f64 {
        compensated_sum(self.weights.iter().copied())
    }

    /// ∫ f dμ.
    pub fn integrate(&self, f: impl Fn(&[f64]) -> f64) -> f64 {
        compensated_sum(self.points().zip(&self.weights).map(|(p, w)| w * f(p)))
    }

    /// The measure pushed forward by z ↦ z + shift.
    pub fn translated(&self, shift: &[f64]) -> Self {
        let mut coords = self.coords.clone();
        for row in coords.chunks_exact_mut(self.dim) {
            for (c, s) in row.iter_mut().zip(shift) {
                *c += s;
            }
        }
        Self { dim: self.dim, coords, weights: self.weights.clone() }
    }

    /// Text form: a header `ambient_dim count`, then one row `x₁ … x_n weight` per atom.
    /// Floats use the shortest representation that parses back to the same bits.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.dim, self.len());
        for (p, w) in self.points().zip(&self.weights) {
            for c in p {
                write!(out, "{c:?} ").unwrap();
            }
            writeln!(out, "{w:?}").unwrap();
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::Parse("missing header".into()))?;
        let head: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| Error::Parse(format!("bad header token {t:?}"))))
            .collect::<Result<_>>()?;
        let [dim, count] = head[..] else {
            return Err(Error::Parse("header must be `ambient_dim count`".into()));
        };
        let mut coords = Vec::with_capacity(dim * count);
        let mut weights = Vec::with_capacity(count);
        for (i, line) in lines.enumerate() {
            let row: Vec<f64> = line
                .split_whitespace()
                .map(|t| t.parse().map_err(|_| Error::Parse(format!("row {i}: bad number {t:?}"))))
                .collect::<Result<_>>()?;
            if row.len() != dim + 1 {
                return Err(Error::Parse(format!("row {i}: expected {} values, got {}", dim + 1, row.len())));
            }
            coords.extend_from_slice(&row[..dim]);
            weights.push(row[dim]);
        }
        if weights.len() != count {
            return Err(Error::Parse(format!("header announces {count} rows, found {}", weights.len())));
        }
        Self::new(dim, coords, weights).map_err(|e| Error::Parse(e.to_string()))
    }
}

/// Deterministic node/weight representation of a tube measure.
#[derive(Debug, Clone)]
pub struct QuadratureMeasure {
    /// Ambient nodes.
    pub points: Vec<Vector>,
    /// Fermi coordinates of the nodes in the chart of the generating spec.
    pub fermi: Vec<FermiPoint>,
    /// Normalized weights (sum to 1).
    pub weights: Vec<f64>,
    /// Unnormalized total mass: the ambient volume of the segment.
    pub volume: f64,
    feet: Vec<Vector>,
    foot_of: Vec<usize>,
    local_beta: Vec<Vec<f64>>,
}

impl QuadratureMeasure {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(&Vector) -> f64) -> f64 {
        compensated_sum(self.points.iter().zip(&self.weights).map(|(p, w)| w * f(p)))
    }

    /// Weighted integral of a function of the Fermi coordinates.
    pub fn integrate_fermi(&self, f: impl Fn(&FermiPoint) -> f64) -> f64 {
        compensated_sum(self.fermi.iter().zip(&self.weights).map(|(p, w)| w * f(p)))
    }

    pub fn to_discrete(&self) -> DiscreteMeasure {
        DiscreteMeasure::from_points(&self.points, self.weights.clone()).expect("quadrature nodes are well formed")
    }

    /// Fermi coordinates of every node in another chart. The α part is shared by all
    /// nodes above the same foot point, so the chart inverse runs once per foot.
    pub fn fermi_in(&self, chart: &FermiChart) -> Result<Vec<FermiPoint>> {
        let model = chart.model();
        let mut per_foot = Vec::with_capacity(self.feet.len());
        for q in &self.feet {
            let alpha = chart.coords(q)?.alpha;
            let chart_normals = chart.frame(&alpha)?.normal;
            let local = model.normal_frame(q)?;
            let rot: Vec<Vec<f64>> = chart_normals.iter().map(|c| local.iter().map(|l| c.dot(l)).collect()).collect();
            per_foot.push((alpha, rot));
        }
        Ok(self
            .foot_of
            .iter()
            .zip(&self.local_beta)
            .map(|(&f, b)| {
                let (alpha, rot) = &per_foot[f];
                let beta = rot.iter().map(|r| r.iter().zip(b).map(|(x, y)| x * y).sum()).collect();
                FermiPoint::new(alpha.clone(), beta)
            })
            .collect())
    }
}

/// Product quadrature of μ_x^{σ,ε}: ball rules in normal coordinates on M (exact
/// geodesic ball of radius ε) and in the normal fibre (radius σ), each node weighted
/// by the Riemannian density of normal coordinates times the tube volume weight.
///
/// `order` is the number of radial nodes; one-dimensional balls use 2·order
/// Gauss–Legendre nodes.
pub fn quadrature_measure(spec: &TubeSegmentSpec, order: usize) -> Result<QuadratureMeasure> {
    let mut q = quadrature_nodes(spec, order)?;
    q.fermi = q.fermi_in(&spec.chart()?)?;
    Ok(q)
}

/// Ambient volume of the segment by quadrature.
pub fn segment_volume(spec: &TubeSegmentSpec) -> Result<f64> {
    Ok(quadrature_nodes(spec, VOLUME_ORDER)?.volume)
}

fn quadrature_nodes(spec: &TubeSegmentSpec, order: usize) -> Result<QuadratureMeasure> {
    if order < 4 {
        return Err(Error::Contract(format!("quadrature order must be at least 4, got {order}")));
    }
    let model = &spec.manifold;
    let (m, k) = (model.dim(), model.codim());
    if m > 3 || k > 3 {
        return Err(Error::Domain("ball quadrature supports dimensions up to 3".into()));
    }
    let tangent = ball_rule(m, order);
    let normal = ball_rule(k, order);
    let (scale_t, scale_n) = (spec.epsilon.powi(m as i32), spec.sigma.powi(k as i32));

    let mut out = QuadratureMeasure {
        points: Vec::with_capacity(tangent.len() * normal.len()),
        fermi: Vec::new(),
        weights: Vec::with_capacity(tangent.len() * normal.len()),
        volume: 0.0,
        feet: Vec::with_capacity(tangent.len()),
        foot_of: Vec::with_capacity(tangent.len() * normal.len()),
        local_beta: Vec::with_capacity(tangent.len() * normal.len()),
    };
    for t in &tangent {
        let coeffs: Vec<f64> = t.direction.iter().map(|d| spec.epsilon * t.radius * d).collect();
        let (foot, jac) = model.exp_with_density(&spec.center, &coeffs)?;
        let normals = model.normal_frame(&foot)?;
        let fi = out.feet.len();
        for b in &normal {
            let beta: Vec<f64> = b.direction.iter().map(|d| spec.sigma * b.radius * d).collect();
            let mut z = foot.clone();
            for (n, bj) in normals.iter().zip(&beta) {
                z += n * *bj;
            }
            let w = t.weight * scale_t * b.weight * scale_n * jac * model.tube_volume_weight(&foot, &beta)?;
            out.points.push(z);
            out.weights.push(w);
            out.foot_of.push(fi);
            out.local_beta.push(beta);
        }
        out.feet.push(foot);
    }
    out.volume = compensated_sum(out.weights.iter().copied());
    if !(out.volume > 0.0) {
        return Err(Error::Solver("quadrature produced a non-positive segment volume".into()));
    }
    for w in &mut out.weights {
        *w /= out.volume;
    }
    Ok(out)
}

/// n i.i.d. uniform points on the segment by rejection from its bounding box.
pub fn sample_tube<R: Rng + ?Sized>(spec: &TubeSegmentSpec, n: usize, rng: &mut R) -> Result<DiscreteMeasure> {
    if n == 0 {
        return Err(Error::Contract("sample size must be at least 1".into()));
    }
    let dim = spec.manifold.ambient_dim();
    let (lo, hi) = spec.bounding_box();
    let mut coords = Vec::with_capacity(n * dim);
    let mut accepted = 0usize;
    let mut proposals = 0usize;
    let mut z = Vector::zeros(dim);
    while accepted < n {
        for i in 0..dim {
            z[i] = lo[i] + (hi[i] - lo[i]) * rng.random::<f64>();
        }
        proposals += 1;
        if spec.contains(&z) {
            coords.extend(z.iter().copied());
            accepted += 1;
        }
        if proposals == PROPOSAL_CHECK && (accepted as f64) < MIN_ACCEPTANCE * proposals as f64 {
            return Err(Error::Misconfiguration(format!(
                "rejection sampling accepted {accepted} of {proposals} proposals for {}",
                spec.manifold.label()
            )));
        }
    }
    DiscreteMeasure::uniform(dim, coords)
}

/// n i.i.d. uniform points on the segment by rejection from the cube
/// center + F·[−h, h]ⁿ, h = 1.1(ε + σ), where F is an orthonormal ambient frame.
///
/// Two segments sampled with the same random stream and frames related by a rigid
/// motion that maps one segment onto the other yield point sets related by that
/// motion (common random numbers); otherwise each sample is still exactly uniform.
pub fn sample_tube_framed<R: Rng + ?Sized>(
    spec: &TubeSegmentSpec,
    frame: &[Vector],
    n: usize,
    rng: &mut R,
) -> Result<DiscreteMeasure> {
    if n == 0 {
        return Err(Error::Contract("sample size must be at least 1".into()));
    }
    let dim = spec.manifold.ambient_dim();
    if frame.len() != dim || frame.iter().any(|f| f.len() != dim) {
        return Err(Error::Contract(format!("frame must hold {dim} vectors of length {dim}")));
    }
    for (a, fa) in frame.iter().enumerate() {
        for (b, fb) in frame.iter().enumerate() {
            let target = if a == b { 1.0 } else { 0.0 };
            if (fa.dot(fb) - target).abs() > 1e-9 {
                return Err(Error::Contract("sampling frame is not orthonormal".into()));
            }
        }
    }
    let h = 1.1 * (spec.epsilon + spec.sigma);
    let mut coords = Vec::with_capacity(n * dim);
    let mut accepted = 0usize;
    let mut proposals = 0usize;
    while accepted < n {
        let mut z = spec.center.clone();
        for f in frame {
            z += f * (h * (2.0 * rng.random::<f64>() - 1.0));
        }
        proposals += 1;
        if spec.contains(&z) {
            coords.extend(z.iter().copied());
            accepted += 1;
        }
        if proposals == PROPOSAL_CHECK && (accepted as f64) < MIN_ACCEPTANCE * proposals as f64 {
            return Err(Error::Misconfiguration(format!(
                "rejection sampling accepted {accepted} of {proposals} proposals for {}",
                spec.manifold.label()
            )));
        }
    }
    DiscreteMeasure::uniform(dim, coords)
}

/// Empirical measure of a Poisson process with intensity n·Lebesgue restricted to the
/// segment: N ~ Poisson(n·vol) uniform points with equal weights.
pub fn poisson_tube<R: Rng + ?Sized>(spec: &TubeSegmentSpec, intensity: f64, rng: &mut R) -> Result<DiscreteMeasure> {
    let volume = segment_volume(spec)?;
    poisson_tube_with_volume(spec, intensity, volume, rng)
}

/// [`poisson_tube`] with a precomputed segment volume.
pub fn poisson_tube_with_volume<R: Rng + ?Sized>(
    spec: &TubeSegmentSpec,
    intensity: f64,
    volume: f64,
    rng: &mut R,
) -> Result<DiscreteMeasure> {
    if !(intensity > 0.0) {
        return Err(Error::Contract(format!("intensity must be positive, got {intensity}")));
    }
    let count = poisson_count(intensity * volume, rng)?;
    if count == 0 {
        return Err(Error::EmptyCloud);
    }
    sample_tube(spec, count, rng)
}

/// One Poisson(λ) draw.
pub fn poisson_count<R: Rng + ?Sized>(lambda: f64, rng: &mut R) -> Result<usize> {
    let dist = Poisson::new(lambda).map_err(|e| Error::Contract(format!("Poisson mean {lambda}: {e}")))?;
    Ok(dist.sample(rng) as usize)
}

/// Second-order expansion of the ambient volume density in Fermi coordinates around
/// the chart origin:
///
/// 1 − Σ βᵢHⁱ − Σ αⱼβᵢ ∂_{αⱼ}Hⁱ − ½ tr(S_β²) + ½(Σ βᵢHⁱ)² + ¼ Σ_{q,ℓ≥2} α_q α_ℓ ∂_q∂_ℓ tr g,
///
/// where S_β is the shape operator in the normal direction Σ βᵢnᵢ (the β-derivative of
/// the leaf mean curvature). Meant as a cross-check of [`FermiChart::volume_density`].
pub fn fermi_density_expansion(chart: &FermiChart, p: &FermiPoint) -> Result<f64> {
    let model = chart.model();
    let (m, k) = (model.dim(), model.codim());
    if p.alpha.len() != m || p.beta.len() != k {
        return Err(Error::Contract("Fermi point has the wrong shape".into()));
    }
    let origin = chart.frame(&vec![0.0; m])?;
    let h0: Vec<f64> = chart.mean_curvature_components(0.0)?;
    let beta_h: f64 = p.beta.iter().zip(&h0).map(|(b, h)| b * h).sum();

    let step = 1e-4 * model.reach_bound().min(1.0);
    let mut grad_h = vec![chart.mean_curvature_slope(step)?];
    for j in 1..m {
        let comp = |s: f64| -> Result<Vec<f64>> {
            let mut alpha = vec![0.0; m];
            alpha[j] = s;
            let f = chart.frame(&alpha)?;
            let h = model.mean_curvature(&f.point)?;
            Ok(f.normal.iter().map(|n| h.dot(n)).collect())
        };
        let (a, b) = (comp(step)?, comp(-step)?);
        grad_h.push(a.iter().zip(&b).map(|(x, y)| (x - y) / (2.0 * step)).collect());
    }
    let mixed: f64 = (0..m)
        .map(|j| p.alpha[j] * (0..k).map(|i| p.beta[i] * grad_h[j][i]).sum::<f64>())
        .sum();

    let mut nu = Vector::zeros(model.ambient_dim());
    for (n, b) in origin.normal.iter().zip(&p.beta) {
        nu += n * *b;
    }
    let mut shape_sq = 0.0;
    for a in &origin.tangent {
        for b in &origin.tangent {
            shape_sq += model.second_fundamental_form(&origin.point, a, b)?.dot(&nu).powi(2);
        }
    }

    let hat: f64 = p.alpha[1..].iter().map(|a| a * a).sum::<f64>().sqrt();
    let metric_term = if hat > 0.0 {
        let dir: Vec<f64> = std::iter::once(0.0).chain(p.alpha[1..].iter().map(|a| a / hat)).collect();
        let trace_g = |t: f64| -> Result<f64> {
            let base: Vec<f64> = dir.iter().map(|d| d * t).collect();
            let hd = 1e-5;
            let mut tr = 0.0;
            for i in 0..m {
                let (mut ap, mut am) = (base.clone(), base.clone());
                ap[i] += hd;
                am[i] -= hd;
                tr += ((chart.base_point(&ap)? - chart.base_point(&am)?) / (2.0 * hd)).norm_squared();
            }
            Ok(tr)
        };
        let t = 1e-3;
        let second = (trace_g(t)? - 2.0 * trace_g(0.0)? + trace_g(-t)?) / (t * t);
        0.25 * hat * hat * second
    } else {
        0.0
    };

    Ok(1.0 - beta_h - mixed - 0.5 * shape_sq + 0.5 * beta_h * beta_h + metric_term)
}
