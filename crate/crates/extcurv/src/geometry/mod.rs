//! Embedded submanifolds of Euclidean space with exact (or tightly controlled)
//! geodesics, frames, projections and curvature tensors.

mod chart;
mod curve;
mod graph;

pub use chart::{ChartFrame, FermiChart, FermiPoint};
pub use curve::{CurvePoint, CurveShape};
pub use graph::{GraphSurface, HeightFunction};

use crate::error::{Error, Result};
use crate::vecops::{orthonormal_complement, vec_from, zeros, Vector};
use nalgebra::{DMatrix, Vector2};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Tolerance for "lies on the manifold" and "is tangent" checks.
pub const ON_MANIFOLD_TOL: f64 = 1e-9;

/// Catalogue of supported submanifolds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ManifoldKind {
    Circle { radius: f64 },
    /// Line, parabola or ellipse in ℝ².
    PlanarCurve { profile: CurveShape },
    /// Helix in ℝ³.
    SpaceCurve { profile: CurveShape },
    /// Round m-sphere of radius R in ℝ^(m+1).
    Sphere { dim: usize, radius: f64 },
    /// Product of circles of radii R₁, R₂ in ℝ⁴.
    FlatTorus { r1: f64, r2: f64 },
    GraphSurface(GraphSurface),
}

/// An embedded submanifold together with its dimensions and reach bound.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifoldModel {
    kind: ManifoldKind,
    dim: usize,
    codim: usize,
    reach: f64,
}

/// Orthonormal tangent and normal frames at a point.
#[derive(Debug, Clone)]
pub struct FrameField {
    pub basepoint: Vector,
    pub tangent: Vec<Vector>,
    pub normal: Vec<Vector>,
}

/// Nearest-point projection onto the manifold.
#[derive(Debug, Clone)]
pub struct Projection {
    pub foot: Vector,
    /// Coordinates of z − foot in the normal frame at the foot.
    pub offset: Vec<f64>,
    pub normals: Vec<Vector>,
    pub distance: f64,
}

/// Internal location of a point on the manifold.
#[derive(Debug, Clone)]
pub(crate) enum Located {
    Curve(CurvePoint),
    Sphere(Vector),
    Torus([f64; 2]),
    Graph(Vector2<f64>),
}

impl ManifoldModel {
    pub fn new(kind: ManifoldKind) -> Result<Self> {
        let (dim, codim, reach) = match &kind {
            ManifoldKind::Circle { radius } => {
                if !(*radius > 0.0) {
                    return Err(Error::Domain("circle radius must be positive".into()));
                }
                (1, 1, *radius)
            }
            ManifoldKind::PlanarCurve { profile } => {
                profile.validate()?;
                if profile.ambient_dim() != 2 {
                    return Err(Error::Domain("planar curve profile must live in the plane".into()));
                }
                (1, 1, profile.reach())
            }
            ManifoldKind::SpaceCurve { profile } => {
                profile.validate()?;
                if profile.ambient_dim() != 3 {
                    return Err(Error::Domain("space curve profile must live in ℝ³".into()));
                }
                (1, 2, profile.reach())
            }
            ManifoldKind::Sphere { dim, radius } => {
                if *dim == 0 || !(*radius > 0.0) {
                    return Err(Error::Domain("sphere needs dim ≥ 1 and positive radius".into()));
                }
                (*dim, 1, *radius)
            }
            ManifoldKind::FlatTorus { r1, r2 } => {
                if !(*r1 > 0.0 && *r2 > 0.0) {
                    return Err(Error::Domain("torus radii must be positive".into()));
                }
                (2, 2, r1.min(*r2))
            }
            ManifoldKind::GraphSurface(g) => {
                if !(g.window > 0.0) {
                    return Err(Error::Domain("graph window must be positive".into()));
                }
                (2, 1, g.reach())
            }
        };
        Ok(Self { kind, dim, codim, reach })
    }

    pub fn circle(radius: f64) -> Self {
        Self::new(ManifoldKind::Circle { radius }).expect("valid circle")
    }

    pub fn sphere(dim: usize, radius: f64) -> Self {
        Self::new(ManifoldKind::Sphere { dim, radius }).expect("valid sphere")
    }

    pub fn flat_torus(r1: f64, r2: f64) -> Self {
        Self::new(ManifoldKind::FlatTorus { r1, r2 }).expect("valid torus")
    }

    pub fn planar_curve(profile: CurveShape) -> Result<Self> {
        Self::new(ManifoldKind::PlanarCurve { profile })
    }

    pub fn space_curve(profile: CurveShape) -> Result<Self> {
        Self::new(ManifoldKind::SpaceCurve { profile })
    }

    pub fn graph_surface(height: HeightFunction, window: f64) -> Result<Self> {
        Self::new(ManifoldKind::GraphSurface(GraphSurface { height, window }))
    }

    pub fn kind(&self) -> &ManifoldKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn codim(&self) -> usize {
        self.codim
    }

    pub fn ambient_dim(&self) -> usize {
        self.dim + self.codim
    }

    /// Conservative lower bound σ₀ on the reach.
    pub fn reach_bound(&self) -> f64 {
        self.reach
    }

    /// Radius below which geodesic balls are embedded and the distance is exact:
    /// half a period for closed curves, πR for the sphere, π·min(R₁, R₂) for the torus,
    /// half the window for graphs.
    pub fn injectivity_bound(&self) -> f64 {
        match &self.kind {
            ManifoldKind::Sphere { radius, .. } => PI * radius,
            ManifoldKind::FlatTorus { r1, r2 } => PI * r1.min(*r2),
            ManifoldKind::GraphSurface(g) => 0.5 * g.window,
            _ => self.curve().unwrap().period().map_or(f64::INFINITY, |p| 0.5 * p),
        }
    }

    /// Short human-readable label.
    pub fn label(&self) -> String {
        match &self.kind {
            ManifoldKind::Circle { radius } => format!("circle(R={radius})"),
            ManifoldKind::PlanarCurve { profile } | ManifoldKind::SpaceCurve { profile } => match profile {
                CurveShape::Circle { radius } => format!("circle(R={radius})"),
                CurveShape::Line => "line".into(),
                CurveShape::Parabola { a } => format!("parabola(a={a})"),
                CurveShape::Ellipse { a, b } => format!("ellipse(a={a},b={b})"),
                CurveShape::Helix { radius, pitch } => format!("helix(r={radius},h={pitch})"),
            },
            ManifoldKind::Sphere { dim, radius } => format!("sphere(m={dim},R={radius})"),
            ManifoldKind::FlatTorus { r1, r2 } => format!("flat_torus(R1={r1},R2={r2})"),
            ManifoldKind::GraphSurface(g) => format!("graph({:?})", g.height),
        }
    }

    /// The arc-length curve behind a one-dimensional entry.
    pub fn curve(&self) -> Option<CurveShape> {
        match &self.kind {
            ManifoldKind::Circle { radius } => Some(CurveShape::Circle { radius: *radius }),
            ManifoldKind::PlanarCurve { profile } | ManifoldKind::SpaceCurve { profile } => Some(profile.clone()),
            _ => None,
        }
    }

    /// Embedding of intrinsic parameters: arc length (curves), normal coordinates at
    /// the north pole (sphere), flat coordinates (torus), (x, y) (graph).
    pub fn embed(&self, intrinsic: &[f64]) -> Result<Vector> {
        if intrinsic.len() != self.dim {
            return Err(Error::Domain(format!(
                "expected {} intrinsic parameters, got {}",
                self.dim,
                intrinsic.len()
            )));
        }
        if intrinsic.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("non-finite intrinsic parameter".into()));
        }
        match &self.kind {
            ManifoldKind::Sphere { dim, radius } => {
                let r = intrinsic.iter().map(|v| v * v).sum::<f64>().sqrt();
                if r >= PI * radius {
                    return Err(Error::Domain("normal coordinates beyond the cut locus".into()));
                }
                let mut x = zeros(dim + 1);
                x[*dim] = radius * (r / radius).cos();
                if r > 0.0 {
                    let f = radius * (r / radius).sin() / r;
                    for i in 0..*dim {
                        x[i] = f * intrinsic[i];
                    }
                }
                Ok(x)
            }
            ManifoldKind::FlatTorus { r1, r2 } => Ok(torus_point(*r1, *r2, [intrinsic[0] / r1, intrinsic[1] / r2], [0.0, 0.0])),
            ManifoldKind::GraphSurface(g) => {
                let p = Vector2::new(intrinsic[0], intrinsic[1]);
                if !g.in_window(p) {
                    return Err(Error::Domain("graph parameters outside the working window".into()));
                }
                Ok(g.embed(p))
            }
            _ => Ok(self.curve().unwrap().at_arclength(intrinsic[0]).position),
        }
    }

    /// Nearest-point projection; errors when z is not within the reach bound.
    pub fn project(&self, z: &Vector) -> Result<Projection> {
        if z.len() != self.ambient_dim() {
            return Err(Error::Contract(format!("expected a point of ℝ^{}", self.ambient_dim())));
        }
        let proj = match &self.kind {
            ManifoldKind::Sphere { radius, .. } => {
                let r = z.norm();
                if r == 0.0 {
                    return Err(Error::OutOfReach { distance: *radius, reach: self.reach });
                }
                let n = z / r;
                Projection { foot: &n * *radius, offset: vec![r - radius], normals: vec![n], distance: (r - radius).abs() }
            }
            ManifoldKind::FlatTorus { r1, r2 } => {
                let rho1 = z[0].hypot(z[1]);
                let rho2 = z[2].hypot(z[3]);
                if rho1 == 0.0 || rho2 == 0.0 {
                    return Err(Error::OutOfReach { distance: r1.min(*r2), reach: self.reach });
                }
                let th = [z[1].atan2(z[0]), z[3].atan2(z[2])];
                let foot = torus_point(*r1, *r2, th, [0.0, 0.0]);
                let offset = vec![rho1 - r1, rho2 - r2];
                let distance = offset[0].hypot(offset[1]);
                Projection { foot, offset, normals: torus_normals(th).to_vec(), distance }
            }
            ManifoldKind::GraphSurface(g) => {
                let u = g.project_param(z)?;
                let foot = g.embed(u);
                let n = g.unit_normal(u);
                let d = z - &foot;
                Projection { offset: vec![d.dot(&n)], distance: d.norm(), foot, normals: vec![n] }
            }
            _ => {
                let c = self.curve().unwrap();
                let cp = c.at_param(c.nearest_param(z, None));
                let normals = c.normal_frame(&cp);
                let d = z - &cp.position;
                Projection {
                    offset: normals.iter().map(|n| d.dot(n)).collect(),
                    distance: d.norm(),
                    foot: cp.position,
                    normals,
                }
            }
        };
        if proj.distance >= self.reach {
            return Err(Error::OutOfReach { distance: proj.distance, reach: self.reach });
        }
        Ok(proj)
    }

    pub(crate) fn locate(&self, x: &Vector) -> Result<Located> {
        if x.len() != self.ambient_dim() {
            return Err(Error::Contract(format!("expected a point of ℝ^{}", self.ambient_dim())));
        }
        let scale = 1.0f64.max(x.norm());
        let check = |d: f64| {
            if d > ON_MANIFOLD_TOL * scale {
                Err(Error::Contract(format!("point is {d:e} away from the manifold")))
            } else {
                Ok(())
            }
        };
        match &self.kind {
            ManifoldKind::Sphere { radius, .. } => {
                check((x.norm() - radius).abs())?;
                Ok(Located::Sphere(x / x.norm()))
            }
            ManifoldKind::FlatTorus { r1, r2 } => {
                check((x[0].hypot(x[1]) - r1).hypot(x[2].hypot(x[3]) - r2))?;
                Ok(Located::Torus([x[1].atan2(x[0]), x[3].atan2(x[2])]))
            }
            ManifoldKind::GraphSurface(g) => {
                let p = Vector2::new(x[0], x[1]);
                check((x[2] - g.height.value(p)).abs())?;
                Ok(Located::Graph(p))
            }
            _ => {
                let c = self.curve().unwrap();
                let cp = c.at_param(c.nearest_param(x, None));
                check((x - &cp.position).norm())?;
                Ok(Located::Curve(cp))
            }
        }
    }

    fn check_on_manifold(&self, x: &Vector) -> Result<Located> {
        self.locate(x)
    }

    /// Orthonormal tangent frame at x.
    pub fn tangent_frame(&self, x: &Vector) -> Result<Vec<Vector>> {
        Ok(self.tangent_frame_at(&self.locate(x)?))
    }

    fn tangent_frame_at(&self, loc: &Located) -> Vec<Vector> {
        match (loc, &self.kind) {
            (Located::Curve(cp), _) => vec![cp.tangent.clone()],
            (Located::Sphere(n), ManifoldKind::Sphere { dim, .. }) => orthonormal_complement(std::slice::from_ref(n), dim + 1),
            (Located::Torus(th), _) => {
                let (s1, c1) = th[0].sin_cos();
                let (s2, c2) = th[1].sin_cos();
                vec![vec_from(&[-s1, c1, 0.0, 0.0]), vec_from(&[0.0, 0.0, -s2, c2])]
            }
            (Located::Graph(p), ManifoldKind::GraphSurface(g)) => g.tangent_frame(*p).to_vec(),
            _ => unreachable!(),
        }
    }

    /// Orthonormal normal frame at x (orientation conventions in the crate docs).
    pub fn normal_frame(&self, x: &Vector) -> Result<Vec<Vector>> {
        Ok(self.normal_frame_at(&self.locate(x)?))
    }

    fn normal_frame_at(&self, loc: &Located) -> Vec<Vector> {
        match (loc, &self.kind) {
            (Located::Curve(cp), _) => self.curve().unwrap().normal_frame(cp),
            (Located::Sphere(n), _) => vec![n.clone()],
            (Located::Torus(th), _) => torus_normals(*th).to_vec(),
            (Located::Graph(p), ManifoldKind::GraphSurface(g)) => vec![g.unit_normal(*p)],
            _ => unreachable!(),
        }
    }

    pub fn frame(&self, x: &Vector) -> Result<FrameField> {
        let loc = self.locate(x)?;
        Ok(FrameField { basepoint: x.clone(), tangent: self.tangent_frame_at(&loc), normal: self.normal_frame_at(&loc) })
    }

    fn check_tangent(&self, loc: &Located, w: &Vector) -> Result<()> {
        if w.len() != self.ambient_dim() {
            return Err(Error::Contract("tangent vector has wrong dimension".into()));
        }
        let scale = 1.0f64.max(w.norm());
        for n in self.normal_frame_at(loc) {
            if w.dot(&n).abs() > ON_MANIFOLD_TOL * scale {
                return Err(Error::Contract("vector is not tangent to the manifold".into()));
            }
        }
        Ok(())
    }

    /// Second fundamental form II_x(w₁, w₂) as an ambient normal vector.
    pub fn second_fundamental_form(&self, x: &Vector, w1: &Vector, w2: &Vector) -> Result<Vector> {
        let loc = self.locate(x)?;
        self.check_tangent(&loc, w1)?;
        self.check_tangent(&loc, w2)?;
        Ok(self.second_fundamental_form_at(&loc, w1, w2))
    }

    fn second_fundamental_form_at(&self, loc: &Located, w1: &Vector, w2: &Vector) -> Vector {
        match (loc, &self.kind) {
            (Located::Curve(cp), _) => &cp.curvature_vector * (w1.dot(&cp.tangent) * w2.dot(&cp.tangent)),
            (Located::Sphere(n), ManifoldKind::Sphere { radius, .. }) => n * (-w1.dot(w2) / radius),
            (Located::Torus(th), ManifoldKind::FlatTorus { r1, r2 }) => {
                let [n1, n2] = torus_normals(*th);
                n1 * (-(w1[0] * w2[0] + w1[1] * w2[1]) / r1) + n2 * (-(w1[2] * w2[2] + w1[3] * w2[3]) / r2)
            }
            (Located::Graph(p), ManifoldKind::GraphSurface(g)) => {
                let grad = g.height.gradient(*p);
                let hess = g.height.hessian(*p);
                let a1 = Vector2::new(w1[0], w1[1]);
                let a2 = Vector2::new(w2[0], w2[1]);
                let w2n = 1.0 + grad.norm_squared();
                let up = vec_from(&[-grad[0], -grad[1], 1.0]);
                up * ((a1.transpose() * hess * a2)[0] / w2n)
            }
            _ => unreachable!(),
        }
    }

    /// Mean curvature vector H = Σ II(e_i, e_i) (no 1/m factor).
    pub fn mean_curvature(&self, x: &Vector) -> Result<Vector> {
        let loc = self.locate(x)?;
        Ok(self.mean_curvature_at(&loc))
    }

    fn mean_curvature_at(&self, loc: &Located) -> Vector {
        let mut h = zeros(self.ambient_dim());
        for e in self.tangent_frame_at(loc) {
            h += self.second_fundamental_form_at(loc, &e, &e);
        }
        h
    }

    /// Unit-speed geodesic exp_x(t v).
    pub fn geodesic(&self, x: &Vector, v: &Vector, t: f64) -> Result<Vector> {
        let loc = self.check_on_manifold(x)?;
        self.check_tangent(&loc, v)?;
        if (v.norm() - 1.0).abs() > ON_MANIFOLD_TOL {
            return Err(Error::Contract("geodesic direction must be a unit vector".into()));
        }
        self.geodesic_at(&loc, x, v, t)
    }

    fn geodesic_at(&self, loc: &Located, x: &Vector, v: &Vector, t: f64) -> Result<Vector> {
        match (loc, &self.kind) {
            (Located::Curve(cp), _) => {
                let sign = v.dot(&cp.tangent).signum();
                Ok(self.curve().unwrap().at_arclength(cp.arclength + sign * t).position)
            }
            (Located::Sphere(_), ManifoldKind::Sphere { radius, .. }) => {
                let (s, c) = (t / radius).sin_cos();
                Ok(x * c + v * (radius * s))
            }
            (Located::Torus(th), ManifoldKind::FlatTorus { r1, r2 }) => {
                let e = self.tangent_frame_at(loc);
                let c = [v.dot(&e[0]), v.dot(&e[1])];
                Ok(torus_point(*r1, *r2, [th[0] + t * c[0] / r1, th[1] + t * c[1] / r2], [0.0, 0.0]))
            }
            (Located::Graph(p), ManifoldKind::GraphSurface(g)) => {
                let q = Vector2::new(v[0], v[1]) * t;
                let end = g.exp_param(*p, q);
                if !g.in_window(end) {
                    return Err(Error::Domain("geodesic leaves the graph window".into()));
                }
                Ok(g.embed(end))
            }
            _ => unreachable!(),
        }
    }

    /// Geodesic distance between two points of the manifold.
    pub fn distance(&self, x: &Vector, y: &Vector) -> Result<f64> {
        let lx = self.locate(x)?;
        let ly = self.locate(y)?;
        Ok(match (&lx, &ly, &self.kind) {
            (Located::Curve(a), Located::Curve(b), _) => self.curve().unwrap().arc_distance(a.arclength, b.arclength),
            (Located::Sphere(a), Located::Sphere(b), ManifoldKind::Sphere { radius, .. }) => {
                2.0 * radius * ((a - b).norm() / 2.0).min(1.0).asin()
            }
            (Located::Torus(a), Located::Torus(b), ManifoldKind::FlatTorus { r1, r2 }) => {
                (r1 * wrap_angle(b[0] - a[0])).hypot(r2 * wrap_angle(b[1] - a[1]))
            }
            (Located::Graph(a), Located::Graph(b), ManifoldKind::GraphSurface(g)) => {
                let q = g.log_param(*a, *b)?;
                (q.transpose() * g.metric(*a) * q)[0].sqrt()
            }
            _ => unreachable!(),
        })
    }

    /// Density of ambient volume against vol_M ⊗ Lebesgue(β) at the normal offset
    /// Σ β_j n_j(x): det(I − ⟨II(e_i, e_j), ν⟩).
    pub fn tube_volume_weight(&self, x: &Vector, beta: &[f64]) -> Result<f64> {
        let loc = self.locate(x)?;
        self.tube_volume_weight_at(&loc, beta)
    }

    pub(crate) fn tube_volume_weight_at(&self, loc: &Located, beta: &[f64]) -> Result<f64> {
        let normals = self.normal_frame_at(loc);
        self.tube_weight_for(loc, &normals, beta)
    }

    pub(crate) fn tube_weight_for(&self, loc: &Located, normals: &[Vector], beta: &[f64]) -> Result<f64> {
        if beta.len() != self.codim {
            return Err(Error::Contract(format!("expected {} normal offsets", self.codim)));
        }
        let b = beta.iter().map(|v| v * v).sum::<f64>().sqrt();
        if b >= self.reach {
            return Err(Error::OutOfReach { distance: b, reach: self.reach });
        }
        let mut nu = zeros(self.ambient_dim());
        for (n, bj) in normals.iter().zip(beta) {
            nu += n * *bj;
        }
        let e = self.tangent_frame_at(loc);
        let m = self.dim;
        let mut a = DMatrix::<f64>::identity(m, m);
        for i in 0..m {
            for j in i..m {
                let s = self.second_fundamental_form_at(loc, &e[i], &e[j]).dot(&nu);
                a[(i, j)] -= s;
                if i != j {
                    a[(j, i)] -= s;
                }
            }
        }
        Ok(a.determinant())
    }

    /// exp_x(Σ c_i e_i) for coefficients in the tangent frame at x, together with the
    /// Riemannian volume density of normal coordinates at that point.
    pub fn exp_with_density(&self, x: &Vector, coeffs: &[f64]) -> Result<(Vector, f64)> {
        let loc = self.locate(x)?;
        self.exp_with_density_at(&loc, x, coeffs)
    }

    pub(crate) fn exp_with_density_at(&self, loc: &Located, x: &Vector, coeffs: &[f64]) -> Result<(Vector, f64)> {
        let e = self.tangent_frame_at(loc);
        match (loc, &self.kind) {
            (Located::Curve(cp), _) => Ok((self.curve().unwrap().at_arclength(cp.arclength + coeffs[0]).position, 1.0)),
            (Located::Sphere(_), ManifoldKind::Sphere { dim, radius }) => {
                let mut w = zeros(dim + 1);
                for (ei, c) in e.iter().zip(coeffs) {
                    w += ei * *c;
                }
                let r = w.norm();
                if r == 0.0 {
                    return Ok((x.clone(), 1.0));
                }
                let (s, c) = (r / radius).sin_cos();
                let dens = (radius * s / r).powi(*dim as i32 - 1);
                Ok((x * c + &w * (radius * s / r), dens))
            }
            (Located::Torus(_), _) => {
                let mut w = zeros(4);
                for (ei, c) in e.iter().zip(coeffs) {
                    w += ei * *c;
                }
                let r = w.norm();
                if r == 0.0 {
                    return Ok((x.clone(), 1.0));
                }
                Ok((self.geodesic_at(loc, x, &(&w / r), r)?, 1.0))
            }
            (Located::Graph(p), ManifoldKind::GraphSurface(g)) => {
                let to_param = |c: &[f64]| {
                    let mut w = zeros(3);
                    for (ei, ci) in e.iter().zip(c) {
                        w += ei * *ci;
                    }
                    Vector2::new(w[0], w[1])
                };
                let len = coeffs.iter().map(|v| v * v).sum::<f64>().sqrt();
                let steps = g.steps_for(len) + 1;
                let end = |c: &[f64]| g.flow(*p, to_param(c), Vector2::zeros(), steps).0;
                let q = end(coeffs);
                let h = 1e-6;
                let mut jac = nalgebra::Matrix2::zeros();
                for k in 0..2 {
                    let mut cp = coeffs.to_vec();
                    let mut cm = coeffs.to_vec();
                    cp[k] += h;
                    cm[k] -= h;
                    jac.set_column(k, &((end(&cp) - end(&cm)) / (2.0 * h)));
                }
                let dens = g.metric(q).determinant().sqrt() * jac.determinant().abs();
                if !g.in_window(q) {
                    return Err(Error::Domain("exponential map leaves the graph window".into()));
                }
                Ok((g.embed(q), dens))
            }
            _ => unreachable!(),
        }
    }

    /// Fermi chart along the unit-speed geodesic from x₀ with initial direction v.
    pub fn fermi_chart(&self, x0: &Vector, v: &Vector) -> Result<FermiChart> {
        FermiChart::new(self.clone(), x0, v)
    }
}

pub(crate) fn wrap_angle(a: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let mut r = a % two_pi;
    if r > PI {
        r -= two_pi;
    } else if r <= -PI {
        r += two_pi;
    }
    r
}

pub(crate) fn torus_point(r1: f64, r2: f64, th: [f64; 2], beta: [f64; 2]) -> Vector {
    let (s1, c1) = th[0].sin_cos();
    let (s2, c2) = th[1].sin_cos();
    vec_from(&[(r1 + beta[0]) * c1, (r1 + beta[0]) * s1, (r2 + beta[1]) * c2, (r2 + beta[1]) * s2])
}

pub(crate) fn torus_normals(th: [f64; 2]) -> [Vector; 2] {
    let (s1, c1) = th[0].sin_cos();
    let (s2, c2) = th[1].sin_cos();
    [vec_from(&[c1, s1, 0.0, 0.0]), vec_from(&[0.0, 0.0, c2, s2])]
}

pub(crate) use wrap_angle as wrap;
