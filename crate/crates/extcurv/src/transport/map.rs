//! The explicit transport map T between neighbouring tube measures and the
//! deterministic bounds it yields.

use crate::error::{Error, Result};
use crate::geometry::{FermiChart, FermiPoint, ManifoldModel};
use crate::measures::{quadrature_measure, QuadratureMeasure, TubeSegmentSpec};
use crate::vecops::{compensated_sum, Vector};

/// Nodes of the lattice on which the gradient of the dual test function is sampled.
const GRADIENT_NODES: f64 = 1e4;

/// T in Fermi coordinates along γ:
/// (α₁, α̂, β) ↦ (δ − α₁, α̂, βᵢ − ½(σ² − βᵢ²)(δ − 2α₁)hᵢ), with hᵢ = ∂_{α₁}(Hⁱ∘φ)(0).
///
/// The β correction makes the push-forward density match the target to third order;
/// it vanishes when the mean curvature components are constant along γ.
#[derive(Debug, Clone)]
pub struct TransportMapT {
    chart: FermiChart,
    delta: f64,
    sigma: f64,
    slopes: Vec<f64>,
}

impl TransportMapT {
    /// Uses the catalogue's closed-form slopes where available, otherwise central
    /// differences along γ with step 10⁻⁴·δ.
    pub fn new(chart: FermiChart, delta: f64, sigma: f64) -> Result<Self> {
        let slopes = chart.mean_curvature_slope(1e-4 * delta)?;
        Ok(Self { chart, delta, sigma, slopes })
    }

    pub fn chart(&self) -> &FermiChart {
        &self.chart
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn slopes(&self) -> &[f64] {
        &self.slopes
    }

    /// y = γ(δ).
    pub fn target(&self) -> Result<Vector> {
        let mut alpha = vec![0.0; self.chart.model().dim()];
        alpha[0] = self.delta;
        self.chart.base_point(&alpha)
    }

    pub fn map_coords(&self, p: &FermiPoint) -> FermiPoint {
        let shift = self.delta - 2.0 * p.alpha[0];
        let mut alpha = p.alpha.clone();
        alpha[0] = self.delta - p.alpha[0];
        let beta = p
            .beta
            .iter()
            .zip(&self.slopes)
            .map(|(b, h)| b - 0.5 * (self.sigma * self.sigma - b * b) * shift * h)
            .collect();
        FermiPoint::new(alpha, beta)
    }

    /// |det DT| in Fermi coordinates: Πᵢ |1 + βᵢ(δ − 2α₁)hᵢ|.
    pub fn jacobian(&self, p: &FermiPoint) -> f64 {
        let shift = self.delta - 2.0 * p.alpha[0];
        p.beta.iter().zip(&self.slopes).map(|(b, h)| (1.0 + b * shift * h).abs()).product()
    }

    /// T(φ(p)).
    pub fn apply_fermi(&self, p: &FermiPoint) -> Result<Vector> {
        self.chart.point(&self.map_coords(p))
    }

    /// φ ∘ T ∘ φ⁻¹ on ambient points.
    pub fn apply(&self, z: &Vector) -> Result<Vector> {
        self.apply_fermi(&self.chart.coords(z)?)
    }
}

/// Dual lower bound on W₁ and its ingredients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualBound {
    /// ∫ f d(μ_y − μ_{x₀}) / sup‖∇f‖.
    pub value: f64,
    /// ∫ f d(μ_y − μ_{x₀}).
    pub numerator: f64,
    /// Sampled sup of ‖∇f‖ over the region holding both segments (never below 1, the
    /// exact value at x₀).
    pub gradient_sup: f64,
    /// Lattice nodes where f could be evaluated.
    pub lattice_nodes: usize,
}

/// The tube measures at x₀ and y = γ(δ) in the Fermi chart along γ, with quadrature
/// representations of both and the map T between them.
#[derive(Debug, Clone)]
pub struct SegmentPair {
    pub map: TransportMapT,
    pub source_spec: TubeSegmentSpec,
    pub target_spec: TubeSegmentSpec,
    pub source: QuadratureMeasure,
    /// Target quadrature; its `fermi` field holds coordinates in the x₀ chart.
    pub target: QuadratureMeasure,
    pub sigma: f64,
    pub epsilon: f64,
}

impl SegmentPair {
    pub fn new(
        model: &ManifoldModel,
        x0: &Vector,
        v: &Vector,
        delta: f64,
        sigma: f64,
        epsilon: f64,
        order: usize,
    ) -> Result<Self> {
        if !(delta > 0.0) {
            return Err(Error::Contract(format!("shift δ must be positive, got {delta}")));
        }
        if sigma.max(epsilon) > 0.25 * delta * (1.0 + 1e-12) {
            return Err(Error::Contract(format!(
                "σ ∨ ε = {} exceeds δ/4 = {}",
                sigma.max(epsilon),
                0.25 * delta
            )));
        }
        let chart = model.fermi_chart(x0, v)?;
        let source_spec = TubeSegmentSpec::new(model.clone(), x0.clone(), v.clone(), sigma, epsilon)?;
        let map = TransportMapT::new(chart, delta, sigma)?;
        let mut alpha = vec![0.0; model.dim()];
        alpha[0] = delta;
        let at_y = map.chart().frame(&alpha)?;
        let target_spec = source_spec.recentered(at_y.point.clone(), at_y.tangent[0].clone())?;
        let source = quadrature_measure(&source_spec, order)?;
        let mut target = quadrature_measure(&target_spec, order)?;
        target.fermi = target.fermi_in(map.chart())?;
        Ok(Self { map, source_spec, target_spec, source, target, sigma, epsilon })
    }

    pub fn chart(&self) -> &FermiChart {
        self.map.chart()
    }

    /// ‖x₀ − y‖.
    pub fn chord(&self) -> f64 {
        (&self.target_spec.center - &self.source_spec.center).norm()
    }

    /// ∫ ‖Tz − z‖ dμ_{x₀}(z) by quadrature.
    pub fn upper_bound(&self) -> Result<f64> {
        let mut terms = Vec::with_capacity(self.source.len());
        for ((z, p), w) in self.source.points.iter().zip(&self.source.fermi).zip(&self.source.weights) {
            terms.push(w * (self.map.apply_fermi(p)? - z).norm());
        }
        Ok(compensated_sum(terms))
    }

    /// Unit direction p(α̂, β) of φ(δ, α̂, β) − φ(0, α̂, β).
    fn test_direction(&self, p: &FermiPoint) -> Result<Vector> {
        let mut a = p.clone();
        a.alpha[0] = self.map.delta();
        let mut b = p.clone();
        b.alpha[0] = 0.0;
        let d = self.chart().point(&a)? - self.chart().point(&b)?;
        Ok(&d / d.norm())
    }

    /// f(z) = ⟨z − x₀, p(α̂(z), β(z))⟩.
    fn test_function(&self, z: &Vector, p: &FermiPoint) -> Result<f64> {
        Ok((z - self.chart().origin()).dot(&self.test_direction(p)?))
    }

    /// ∫ f d(target − μ_{x₀}) for an arbitrary target quadrature whose `fermi`
    /// coordinates are in the x₀ chart.
    pub fn dual_numerator(&self, target: &QuadratureMeasure) -> Result<f64> {
        let integrate = |q: &QuadratureMeasure| -> Result<f64> {
            let mut terms = Vec::with_capacity(q.len());
            for ((z, p), w) in q.points.iter().zip(&q.fermi).zip(&q.weights) {
                terms.push(w * self.test_function(z, p)?);
            }
            Ok(compensated_sum(terms))
        };
        Ok(integrate(target)? - integrate(&self.source)?)
    }

    /// Largest ‖∇f‖ over a regular lattice of about 10⁴ nodes covering both segments
    /// in Fermi coordinates (α₁ ∈ [−1.1ε, δ + 1.1ε], |α̂ᵢ| ≤ 1.1ε, ‖β‖ ≤ σ), by
    /// central differences in ambient coordinates. Nodes where the chart inverse
    /// fails are skipped.
    pub fn gradient_sup(&self) -> (f64, usize) {
        let chart = self.chart();
        let m = chart.model().dim();
        let k = chart.model().codim();
        let n = m + k;
        let (delta, eps, sigma) = (self.map.delta(), 1.1 * self.epsilon, self.sigma);
        let mut side = GRADIENT_NODES.powf(1.0 / n as f64).ceil() as usize;
        if side.is_multiple_of(2) {
            side += 1;
        }
        let step = |lo: f64, hi: f64, i: usize| lo + (hi - lo) * i as f64 / (side - 1) as f64;
        let h = 1e-5 * delta;
        let f = |z: &Vector| -> Option<f64> {
            let p = chart.coords(z).ok()?;
            self.test_function(z, &p).ok()
        };
        let mut sup = 1.0f64;
        let mut used = 0usize;
        let mut idx = vec![0usize; n];
        loop {
            let alpha: Vec<f64> = (0..m)
                .map(|d| if d == 0 { step(-eps, delta + eps, idx[0]) } else { step(-eps, eps, idx[d]) })
                .collect();
            let beta: Vec<f64> = (0..k).map(|d| step(-sigma, sigma, idx[m + d])).collect();
            let p = FermiPoint::new(alpha, beta);
            if p.beta_norm() <= sigma {
                if let Ok(z) = chart.point(&p) {
                    let mut grad_sq = 0.0;
                    let mut ok = true;
                    for d in 0..n {
                        let (mut zp, mut zm) = (z.clone(), z.clone());
                        zp[d] += h;
                        zm[d] -= h;
                        match (f(&zp), f(&zm)) {
                            (Some(a), Some(b)) => grad_sq += ((a - b) / (2.0 * h)).powi(2),
                            _ => {
                                ok = false;
                                break;
                            }
                        }
                    }
                    if ok {
                        used += 1;
                        sup = sup.max(grad_sq.sqrt());
                    }
                }
            }
            // Odometer increment over the lattice.
            let mut d = 0;
            while d < n {
                idx[d] += 1;
                if idx[d] < side {
                    break;
                }
                idx[d] = 0;
                d += 1;
            }
            if d == n {
                break;
            }
        }
        (sup, used)
    }

    /// Kantorovich–Rubinstein lower bound ∫ f d(μ_y − μ_{x₀}) / sup‖∇f‖.
    pub fn dual_lower_bound(&self) -> Result<DualBound> {
        let numerator = self.dual_numerator(&self.target)?;
        let (gradient_sup, lattice_nodes) = self.gradient_sup();
        Ok(DualBound { value: numerator / gradient_sup, numerator, gradient_sup, lattice_nodes })
    }

    /// max |d(T_*μ_{x₀})/dμ_y − 1| over `n_probe` source nodes, using the exact chart
    /// volume densities ρ, segment volumes Z and the Jacobian of T:
    /// ratio = (ρ(p)/Z_{x₀}) / (|det DT(p)|·ρ(Tp)/Z_y).
    pub fn density_ratio_deviation(&self, n_probe: usize) -> Result<f64> {
        let n_probe = n_probe.max(1);
        let stride = (self.source.len() / n_probe).max(1);
        let (zx, zy) = (self.source.volume, self.target.volume);
        let chart = self.chart();
        let mut worst = 0.0f64;
        for p in self.source.fermi.iter().step_by(stride).take(n_probe) {
            let tp = self.map.map_coords(p);
            let ratio = (chart.volume_density(p)? / zx) / (self.map.jacobian(p) * chart.volume_density(&tp)? / zy);
            worst = worst.max((ratio - 1.0).abs());
        }
        Ok(worst)
    }
}

/// ∫‖Tz − z‖ dμ_{x₀}^{σ,ε}(z) by quadrature of the given order.
#[allow(non_snake_case)]
pub fn upper_bound_via_T(
    model: &ManifoldModel,
    x0: &Vector,
    v: &Vector,
    delta: f64,
    sigma: f64,
    epsilon: f64,
    order: usize,
) -> Result<f64> {
    if order < 8 {
        return Err(Error::Contract(format!("upper bound needs quadrature order ≥ 8, got {order}")));
    }
    SegmentPair::new(model, x0, v, delta, sigma, epsilon, order)?.upper_bound()
}

/// Dual lower bound on W₁(μ_{x₀}, μ_y) with the chord-direction test function.
pub fn dual_lower_bound(
    model: &ManifoldModel,
    x0: &Vector,
    v: &Vector,
    delta: f64,
    sigma: f64,
    epsilon: f64,
    order: usize,
) -> Result<DualBound> {
    if order < 8 {
        return Err(Error::Contract(format!("dual bound needs quadrature order ≥ 8, got {order}")));
    }
    SegmentPair::new(model, x0, v, delta, sigma, epsilon, order)?.dual_lower_bound()
}

/// Maximal deviation of the push-forward density ratio from 1 over `n_probe` nodes.
pub fn density_ratio_check(
    model: &ManifoldModel,
    x0: &Vector,
    v: &Vector,
    delta: f64,
    sigma: f64,
    epsilon: f64,
    n_probe: usize,
) -> Result<f64> {
    SegmentPair::new(model, x0, v, delta, sigma, epsilon, 8)?.density_ratio_deviation(n_probe)
}
