//! Fermi charts along a unit-speed base geodesic.

use super::{torus_normals, torus_point, wrap, CurveShape, GraphSurface, Located, ManifoldKind, ManifoldModel};
use crate::error::{Error, Result};
use crate::vecops::{orthonormal_complement, vec_from, zeros, Vector};
use nalgebra::{DMatrix, Matrix2, Vector2};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Coordinates (α, β) in a Fermi chart: α₁ runs along the base geodesic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FermiPoint {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
}

impl FermiPoint {
    pub fn new(alpha: Vec<f64>, beta: Vec<f64>) -> Self {
        Self { alpha, beta }
    }

    pub fn beta_norm(&self) -> f64 {
        self.beta.iter().map(|b| b * b).sum::<f64>().sqrt()
    }
}

/// Tangent and normal frames of the chart at ψ(α).
#[derive(Debug, Clone)]
pub struct ChartFrame {
    pub point: Vector,
    pub tangent: Vec<Vector>,
    pub normal: Vec<Vector>,
}

#[derive(Debug, Clone)]
enum ChartData {
    Curve { shape: CurveShape, s0: f64, sv: f64, twist: f64 },
    Sphere { radius: f64, xhat: Vector, vhat: Vector, others: Vec<Vector> },
    Torus { r1: f64, r2: f64, s0: [f64; 2], dir: [f64; 2] },
    Graph { g: GraphSurface, p0: Vector2<f64>, q0: Vector2<f64>, w0: Vector2<f64> },
}

/// Fermi chart φ(α, β) = exp_{γ(α₁)}(Σ_{i≥2} α_i e_i(α₁)) + Σ β_j n_j(α).
///
/// Tangent frames are parallel along γ and the normal frame solves
/// ∂ n_i = −Σ_j ⟨n_i, II(e₁, e_j)⟩ e_j along γ; both are extended off γ by parallel
/// transport along the α̂ geodesics. Closed forms are used for the catalogue entries;
/// [`FermiChart::normal_frame_by_ode`] integrates the frame equation directly.
#[derive(Debug, Clone)]
pub struct FermiChart {
    model: ManifoldModel,
    x0: Vector,
    v: Vector,
    data: ChartData,
}

impl FermiChart {
    pub(crate) fn new(model: ManifoldModel, x0: &Vector, v: &Vector) -> Result<Self> {
        let loc = model.locate(x0)?;
        model.check_tangent(&loc, v)?;
        if (v.norm() - 1.0).abs() > super::ON_MANIFOLD_TOL {
            return Err(Error::Contract("chart direction must be a unit vector".into()));
        }
        let data = match (&loc, model.kind()) {
            (Located::Curve(cp), _) => {
                let shape = model.curve().unwrap();
                let sv = v.dot(&cp.tangent).signum();
                let twist = shape.helix_curvature_torsion().map(|(_, tau)| sv * tau).unwrap_or(0.0);
                ChartData::Curve { shape, s0: cp.arclength, sv, twist }
            }
            (Located::Sphere(n), ManifoldKind::Sphere { radius, dim }) => {
                let others = orthonormal_complement(&[n.clone(), v.clone()], dim + 1);
                ChartData::Sphere { radius: *radius, xhat: n.clone(), vhat: v.clone(), others }
            }
            (Located::Torus(th), ManifoldKind::FlatTorus { r1, r2 }) => {
                let e = model.tangent_frame_at(&loc);
                ChartData::Torus { r1: *r1, r2: *r2, s0: [r1 * th[0], r2 * th[1]], dir: [v.dot(&e[0]), v.dot(&e[1])] }
            }
            (Located::Graph(p), ManifoldKind::GraphSurface(g)) => {
                let e = g.tangent_frame(*p);
                let cand = if e[0].dot(v).abs() < e[1].dot(v).abs() { &e[0] } else { &e[1] };
                let mut e2 = cand - v * cand.dot(v);
                e2 /= e2.norm();
                ChartData::Graph { g: g.clone(), p0: *p, q0: Vector2::new(v[0], v[1]), w0: Vector2::new(e2[0], e2[1]) }
            }
            _ => unreachable!(),
        };
        Ok(Self { model, x0: x0.clone(), v: v.clone(), data })
    }

    pub fn model(&self) -> &ManifoldModel {
        &self.model
    }

    pub fn origin(&self) -> &Vector {
        &self.x0
    }

    pub fn direction(&self) -> &Vector {
        &self.v
    }

    fn check_alpha(&self, alpha: &[f64]) -> Result<()> {
        if alpha.len() != self.model.dim() {
            return Err(Error::Domain(format!("expected {} alpha coordinates", self.model.dim())));
        }
        if alpha.iter().any(|a| !a.is_finite()) {
            return Err(Error::Domain("non-finite chart coordinate".into()));
        }
        match &self.data {
            ChartData::Sphere { radius, .. } => {
                let r = alpha[1..].iter().map(|a| a * a).sum::<f64>().sqrt();
                if alpha[0].abs() >= PI * radius || r >= 0.5 * PI * radius {
                    return Err(Error::Domain("outside the Fermi chart of the sphere".into()));
                }
            }
            ChartData::Torus { r1, r2, .. } => {
                if alpha.iter().map(|a| a * a).sum::<f64>().sqrt() >= PI * r1.min(*r2) {
                    return Err(Error::Domain("outside the Fermi chart of the torus".into()));
                }
            }
            ChartData::Curve { shape, .. } => {
                if let Some(p) = shape.period() {
                    if alpha[0].abs() >= 0.5 * p {
                        return Err(Error::Domain("outside the Fermi chart of the closed curve".into()));
                    }
                }
            }
            ChartData::Graph { g, .. } => {
                if alpha.iter().map(|a| a * a).sum::<f64>().sqrt() >= g.window {
                    return Err(Error::Domain("outside the Fermi chart of the graph".into()));
                }
            }
        }
        Ok(())
    }

    fn graph_base(&self, alpha: &[f64]) -> (Vector2<f64>, Vector2<f64>, Vector2<f64>) {
        if let ChartData::Graph { g, p0, q0, w0 } = &self.data {
            let (p, q, w) = g.flow(*p0, q0 * alpha[0], *w0, g.steps_for(alpha[0]));
            let (q, w) = if alpha[0] != 0.0 { (q / alpha[0], w) } else { (*q0, *w0) };
            (p, q, w)
        } else {
            unreachable!()
        }
    }

    fn graph_psi(&self, alpha: &[f64]) -> Vector2<f64> {
        if let ChartData::Graph { g, .. } = &self.data {
            let (p, _, w) = self.graph_base(alpha);
            if alpha[1] == 0.0 {
                p
            } else {
                g.flow(p, w * alpha[1], Vector2::zeros(), g.steps_for(alpha[1])).0
            }
        } else {
            unreachable!()
        }
    }

    /// Frames of the chart at ψ(α) (β = 0).
    pub fn frame(&self, alpha: &[f64]) -> Result<ChartFrame> {
        self.check_alpha(alpha)?;
        Ok(match &self.data {
            ChartData::Curve { shape, s0, sv, twist } => {
                let cp = shape.at_arclength(s0 + sv * alpha[0]);
                let mut normal = shape.normal_frame(&cp);
                if normal.len() == 2 {
                    let (s, c) = (twist * alpha[0]).sin_cos();
                    let (n, b) = (normal[0].clone(), normal[1].clone());
                    normal = vec![&n * c - &b * s, &n * s + &b * c];
                }
                ChartFrame { tangent: vec![&cp.tangent * *sv], point: cp.position, normal }
            }
            ChartData::Sphere { radius, xhat, vhat, others } => {
                let (s1, c1) = (alpha[0] / radius).sin_cos();
                let g = xhat * c1 + vhat * s1;
                let g1 = vhat * c1 - xhat * s1;
                let mut u = zeros(xhat.len());
                for (e, a) in others.iter().zip(&alpha[1..]) {
                    u += e * *a;
                }
                let r = u.norm();
                let (sr, cr) = (r / radius).sin_cos();
                let (n, radial) = if r > 0.0 {
                    let uh = &u / r;
                    (&g * cr + &uh * sr, Some(uh))
                } else {
                    (g.clone(), None)
                };
                let mut tangent = vec![g1];
                for e in others {
                    let t = match &radial {
                        Some(uh) => {
                            let comp = e.dot(uh);
                            e + (&(uh * cr - &g * sr) - uh) * comp
                        }
                        None => e.clone(),
                    };
                    tangent.push(t);
                }
                ChartFrame { point: &n * *radius, tangent, normal: vec![n] }
            }
            ChartData::Torus { r1, r2, s0, dir } => {
                let s = [s0[0] + alpha[0] * dir[0] - alpha[1] * dir[1], s0[1] + alpha[0] * dir[1] + alpha[1] * dir[0]];
                let th = [s[0] / r1, s[1] / r2];
                let (sn1, cs1) = th[0].sin_cos();
                let (sn2, cs2) = th[1].sin_cos();
                let t1 = vec_from(&[-sn1, cs1, 0.0, 0.0]);
                let t2 = vec_from(&[0.0, 0.0, -sn2, cs2]);
                ChartFrame {
                    point: torus_point(*r1, *r2, th, [0.0, 0.0]),
                    tangent: vec![&t1 * dir[0] + &t2 * dir[1], &t2 * dir[0] - &t1 * dir[1]],
                    normal: torus_normals(th).to_vec(),
                }
            }
            ChartData::Graph { g, .. } => {
                let (p, q, w) = self.graph_base(&[alpha[0], 0.0]);
                let u = if alpha[1] == 0.0 { p } else { self.graph_psi(alpha) };
                let (tangent, point) = if alpha[1] == 0.0 {
                    (vec![g.push_forward(p, q), g.push_forward(p, w)], g.embed(p))
                } else {
                    let tf = g.tangent_frame(u);
                    (tf.to_vec(), g.embed(u))
                };
                ChartFrame { point, tangent, normal: vec![g.unit_normal(u)] }
            }
        })
    }

    /// ψ(α): the chart image at β = 0.
    pub fn base_point(&self, alpha: &[f64]) -> Result<Vector> {
        self.check_alpha(alpha)?;
        match &self.data {
            ChartData::Graph { g, .. } => Ok(g.embed(self.graph_psi(alpha))),
            _ => Ok(self.frame(alpha)?.point),
        }
    }

    /// φ(α, β).
    pub fn point(&self, p: &FermiPoint) -> Result<Vector> {
        if p.beta.len() != self.model.codim() {
            return Err(Error::Domain(format!("expected {} beta coordinates", self.model.codim())));
        }
        let b = p.beta_norm();
        if b >= self.model.reach_bound() {
            return Err(Error::OutOfReach { distance: b, reach: self.model.reach_bound() });
        }
        match &self.data {
            ChartData::Torus { r1, r2, s0, dir } => {
                self.check_alpha(&p.alpha)?;
                let a = &p.alpha;
                let s = [s0[0] + a[0] * dir[0] - a[1] * dir[1], s0[1] + a[0] * dir[1] + a[1] * dir[0]];
                Ok(torus_point(*r1, *r2, [s[0] / r1, s[1] / r2], [p.beta[0], p.beta[1]]))
            }
            ChartData::Sphere { radius, .. } => {
                let f = self.frame(&p.alpha)?;
                Ok(f.point * (1.0 + p.beta[0] / radius))
            }
            _ => {
                let f = self.frame(&p.alpha)?;
                let mut z = f.point;
                for (n, b) in f.normal.iter().zip(&p.beta) {
                    z += n * *b;
                }
                Ok(z)
            }
        }
    }

    /// φ⁻¹(z): Fermi coordinates of an ambient point inside the chart.
    pub fn coords(&self, z: &Vector) -> Result<FermiPoint> {
        if z.len() != self.model.ambient_dim() {
            return Err(Error::Contract("point has wrong ambient dimension".into()));
        }
        let reach = self.model.reach_bound();
        let fp = match &self.data {
            ChartData::Curve { shape, s0, sv, .. } => {
                let t = shape.nearest_param(z, None);
                let cp = shape.at_param(t);
                let mut alpha = sv * (cp.arclength - s0);
                if let Some(p) = shape.period() {
                    alpha -= p * (alpha / p).round();
                }
                let f = self.frame(&[alpha])?;
                let d = z - &f.point;
                FermiPoint::new(vec![alpha], f.normal.iter().map(|n| d.dot(n)).collect())
            }
            ChartData::Sphere { radius, xhat, vhat, others } => {
                let rho = z.norm();
                if rho == 0.0 {
                    return Err(Error::OutOfReach { distance: *radius, reach });
                }
                let ph = z / rho;
                let a = ph.dot(xhat);
                let b = ph.dot(vhat);
                let c: Vec<f64> = others.iter().map(|e| ph.dot(e)).collect();
                let cn = c.iter().map(|x| x * x).sum::<f64>().sqrt();
                let r = radius * cn.atan2(a.hypot(b));
                let mut alpha = vec![radius * b.atan2(a)];
                alpha.extend(c.iter().map(|ci| if cn > 0.0 { r * ci / cn } else { 0.0 }));
                FermiPoint::new(alpha, vec![rho - radius])
            }
            ChartData::Torus { r1, r2, s0, dir } => {
                let rho1 = z[0].hypot(z[1]);
                let rho2 = z[2].hypot(z[3]);
                let th = [z[1].atan2(z[0]), z[3].atan2(z[2])];
                let ds = [r1 * wrap(th[0] - s0[0] / r1), r2 * wrap(th[1] - s0[1] / r2)];
                FermiPoint::new(
                    vec![ds[0] * dir[0] + ds[1] * dir[1], -ds[0] * dir[1] + ds[1] * dir[0]],
                    vec![rho1 - r1, rho2 - r2],
                )
            }
            ChartData::Graph { g, p0, q0, w0 } => {
                let u = g.project_param(z)?;
                let foot = g.embed(u);
                let beta = (z - &foot).dot(&g.unit_normal(u));
                let d = &foot - &self.x0;
                let e1 = g.push_forward(*p0, *q0);
                let e2 = g.push_forward(*p0, *w0);
                let mut a = Vector2::new(d.dot(&e1), d.dot(&e2));
                let h = 1e-6;
                for _ in 0..40 {
                    let r = self.graph_psi(a.as_slice()) - u;
                    if r.norm() < 1e-13 {
                        break;
                    }
                    let mut jac = Matrix2::zeros();
                    for k in 0..2 {
                        let mut e = Vector2::zeros();
                        e[k] = h;
                        jac.set_column(k, &((self.graph_psi((a + e).as_slice()) - self.graph_psi((a - e).as_slice())) / (2.0 * h)));
                    }
                    let step = jac.lu().solve(&r).ok_or_else(|| Error::Solver("singular chart Jacobian".into()))?;
                    a -= step;
                    if step.norm() < 1e-14 {
                        break;
                    }
                }
                FermiPoint::new(vec![a[0], a[1]], vec![beta])
            }
        };
        if fp.beta_norm() >= reach {
            return Err(Error::OutOfReach { distance: fp.beta_norm(), reach });
        }
        self.check_alpha(&fp.alpha)?;
        Ok(fp)
    }

    /// Components H^i(α₁) = ⟨H(γ(α₁)), n_i(α₁)⟩ of the mean curvature along γ.
    pub fn mean_curvature_components(&self, alpha1: f64) -> Result<Vec<f64>> {
        let mut alpha = vec![0.0; self.model.dim()];
        alpha[0] = alpha1;
        let f = self.frame(&alpha)?;
        let h = self.model.mean_curvature(&f.point)?;
        Ok(f.normal.iter().map(|n| h.dot(n)).collect())
    }

    /// ∂_{α₁}(H^i ∘ φ)(0): closed form for the catalogue entries, otherwise a central
    /// difference along γ with step `h`.
    pub fn mean_curvature_slope(&self, h: f64) -> Result<Vec<f64>> {
        match &self.data {
            ChartData::Curve { shape, s0, sv, twist } => match shape {
                CurveShape::Helix { .. } => {
                    let (kappa, _) = shape.helix_curvature_torsion().unwrap();
                    Ok(vec![0.0, kappa * twist])
                }
                _ => {
                    let (_, dk) = shape.signed_curvature(shape.param_at(*s0));
                    Ok(vec![-shape.planar_orientation() * sv * dk])
                }
            },
            ChartData::Sphere { .. } | ChartData::Torus { .. } => Ok(vec![0.0; self.model.codim()]),
            ChartData::Graph { .. } => self.mean_curvature_slope_fd(h),
        }
    }

    /// Central-difference estimate of ∂_{α₁}(H^i ∘ φ)(0).
    pub fn mean_curvature_slope_fd(&self, h: f64) -> Result<Vec<f64>> {
        let p = self.mean_curvature_components(h)?;
        let m = self.mean_curvature_components(-h)?;
        Ok(p.iter().zip(&m).map(|(a, b)| (a - b) / (2.0 * h)).collect())
    }

    /// |det Dφ(α, β)|: density of ambient volume in Fermi coordinates.
    pub fn volume_density(&self, p: &FermiPoint) -> Result<f64> {
        self.check_alpha(&p.alpha)?;
        match &self.data {
            ChartData::Sphere { radius, .. } => {
                let m = self.model.dim();
                let r = p.alpha[1..].iter().map(|a| a * a).sum::<f64>().sqrt();
                let ang = if r > 0.0 { (radius * (r / radius).sin() / r).powi(m as i32 - 2) } else { 1.0 };
                Ok((r / radius).cos() * ang * (1.0 + p.beta[0] / radius).powi(m as i32))
            }
            ChartData::Torus { r1, r2, .. } => Ok((1.0 + p.beta[0] / r1) * (1.0 + p.beta[1] / r2)),
            ChartData::Curve { .. } => {
                let f = self.frame(&p.alpha)?;
                let loc = self.model.locate(&f.point)?;
                self.model.tube_weight_for(&loc, &f.normal, &p.beta)
            }
            ChartData::Graph { .. } => {
                let n = self.model.ambient_dim();
                let h = 1e-5;
                let mut jac = DMatrix::<f64>::zeros(n, n);
                for k in 0..n {
                    let mut plus = p.clone();
                    let mut minus = p.clone();
                    if k < 2 {
                        plus.alpha[k] += h;
                        minus.alpha[k] -= h;
                    } else {
                        plus.beta[0] += h;
                        minus.beta[0] -= h;
                    }
                    let col = (self.point(&plus)? - self.point(&minus)?) / (2.0 * h);
                    jac.set_column(k, &col);
                }
                Ok(jac.determinant().abs())
            }
        }
    }

    /// Integrates the normal-frame equation ∂ n_i = −Σ_j ⟨n_i, II(e₁, e_j)⟩ e_j along γ
    /// from the chart's initial normal frame to α₁ with RK4.
    pub fn normal_frame_by_ode(&self, alpha1: f64, steps: usize) -> Result<Vec<Vector>> {
        let m = self.model.dim();
        let at = |a: f64| -> Result<ChartFrame> {
            let mut alpha = vec![0.0; m];
            alpha[0] = a;
            self.frame(&alpha)
        };
        let rhs = |a: f64, ns: &[Vector]| -> Result<Vec<Vector>> {
            let f = at(a)?;
            let mut out = Vec::with_capacity(ns.len());
            for n in ns {
                let mut d = zeros(n.len());
                for e in &f.tangent {
                    let ii = self.model.second_fundamental_form(&f.point, &f.tangent[0], e)?;
                    d -= e * n.dot(&ii);
                }
                out.push(d);
            }
            Ok(out)
        };
        let mut ns = at(0.0)?.normal;
        let h = alpha1 / steps as f64;
        let axpy = |ns: &[Vector], k: &[Vector], s: f64| -> Vec<Vector> { ns.iter().zip(k).map(|(n, d)| n + d * s).collect() };
        for i in 0..steps {
            let a = i as f64 * h;
            let k1 = rhs(a, &ns)?;
            let k2 = rhs(a + 0.5 * h, &axpy(&ns, &k1, 0.5 * h))?;
            let k3 = rhs(a + 0.5 * h, &axpy(&ns, &k2, 0.5 * h))?;
            let k4 = rhs(a + h, &axpy(&ns, &k3, h))?;
            ns = ns
                .iter()
                .enumerate()
                .map(|(j, n)| n + (&k1[j] + &k2[j] * 2.0 + &k3[j] * 2.0 + &k4[j]) * (h / 6.0))
                .collect();
        }
        Ok(ns)
    }
}
