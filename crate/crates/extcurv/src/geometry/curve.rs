//! Closed-form parametric curves reparametrized by arc length.

use crate::error::{Error, Result};
use crate::quadrature::{gauss_legendre, Rule};
use crate::vecops::{vec_from, Vector};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::OnceLock;

/// Curve shapes with closed-form parametrizations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum CurveShape {
    /// Circle of the given radius centred at the origin, traversed counter-clockwise.
    Circle { radius: f64 },
    /// The x-axis in ℝ².
    Line,
    /// y = a·x²/2 (curvature a at the vertex), a ≠ 0.
    Parabola { a: f64 },
    /// (a cos t, b sin t), counter-clockwise.
    Ellipse { a: f64, b: f64 },
    /// (r cos t, r sin t, h t): curvature r/(r²+h²), torsion h/(r²+h²).
    Helix { radius: f64, pitch: f64 },
}

/// Differential data of a curve at one arc-length position.
#[derive(Debug, Clone)]
pub struct CurvePoint {
    pub param: f64,
    pub arclength: f64,
    pub position: Vector,
    pub tangent: Vector,
    /// d²c/ds².
    pub curvature_vector: Vector,
}

fn panel_rule() -> &'static Rule {
    static RULE: OnceLock<Rule> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(16))
}

impl CurveShape {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            CurveShape::Circle { radius } => radius > 0.0,
            CurveShape::Line => true,
            CurveShape::Parabola { a } => a != 0.0 && a.is_finite(),
            CurveShape::Ellipse { a, b } => a > 0.0 && b > 0.0,
            CurveShape::Helix { radius, pitch } => radius > 0.0 && pitch.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Domain(format!("invalid curve parameters {self:?}")))
        }
    }

    pub fn ambient_dim(&self) -> usize {
        match self {
            CurveShape::Helix { .. } => 3,
            _ => 2,
        }
    }

    pub fn codim(&self) -> usize {
        self.ambient_dim() - 1
    }

    pub fn position_at(&self, t: f64) -> Vector {
        match *self {
            CurveShape::Circle { radius: r } => vec_from(&[r * (t / r).cos(), r * (t / r).sin()]),
            CurveShape::Line => vec_from(&[t, 0.0]),
            CurveShape::Parabola { a } => vec_from(&[t, 0.5 * a * t * t]),
            CurveShape::Ellipse { a, b } => vec_from(&[a * t.cos(), b * t.sin()]),
            CurveShape::Helix { radius: r, pitch: h } => vec_from(&[r * t.cos(), r * t.sin(), h * t]),
        }
    }

    /// k-th derivative of the parametrization, k ∈ {1, 2, 3}.
    pub fn derivative(&self, t: f64, k: u8) -> Vector {
        match *self {
            CurveShape::Circle { radius: r } => {
                let (s, c) = (t / r).sin_cos();
                let f = r.powi(1 - k as i32);
                match k {
                    1 => vec_from(&[-s * f, c * f]),
                    2 => vec_from(&[-c * f, -s * f]),
                    _ => vec_from(&[s * f, -c * f]),
                }
            }
            CurveShape::Line => match k {
                1 => vec_from(&[1.0, 0.0]),
                _ => vec_from(&[0.0, 0.0]),
            },
            CurveShape::Parabola { a } => match k {
                1 => vec_from(&[1.0, a * t]),
                2 => vec_from(&[0.0, a]),
                _ => vec_from(&[0.0, 0.0]),
            },
            CurveShape::Ellipse { a, b } => {
                let (s, c) = t.sin_cos();
                match k {
                    1 => vec_from(&[-a * s, b * c]),
                    2 => vec_from(&[-a * c, -b * s]),
                    _ => vec_from(&[a * s, -b * c]),
                }
            }
            CurveShape::Helix { radius: r, pitch: h } => {
                let (s, c) = t.sin_cos();
                match k {
                    1 => vec_from(&[-r * s, r * c, h]),
                    2 => vec_from(&[-r * c, -r * s, 0.0]),
                    _ => vec_from(&[r * s, -r * c, 0.0]),
                }
            }
        }
    }

    pub fn speed(&self, t: f64) -> f64 {
        match *self {
            CurveShape::Circle { .. } | CurveShape::Line => 1.0,
            CurveShape::Parabola { a } => (1.0 + a * a * t * t).sqrt(),
            CurveShape::Ellipse { a, b } => {
                let (s, c) = t.sin_cos();
                (a * a * s * s + b * b * c * c).sqrt()
            }
            CurveShape::Helix { radius, pitch } => radius.hypot(pitch),
        }
    }

    fn ellipse_arc(&self, t: f64) -> f64 {
        let rule = panel_rule();
        let panels = ((t.abs() / 0.2).ceil() as usize).max(1);
        let h = t / panels as f64;
        let mut total = 0.0;
        for p in 0..panels {
            let mid = (p as f64 + 0.5) * h;
            let mut acc = 0.0;
            for (x, w) in rule.nodes.iter().zip(&rule.weights) {
                acc += w * self.speed(mid + 0.5 * h * x);
            }
            total += 0.5 * h * acc;
        }
        total
    }

    /// Arc length from parameter 0 to `t` (signed).
    pub fn arclength(&self, t: f64) -> f64 {
        match *self {
            CurveShape::Circle { .. } | CurveShape::Line => t,
            CurveShape::Parabola { a } => {
                let at = a * t;
                0.5 * (t * (1.0 + at * at).sqrt() + at.asinh() / a)
            }
            CurveShape::Ellipse { .. } => {
                let period = 2.0 * PI;
                let k = (t / period).floor();
                let rem = t - k * period;
                if k == 0.0 {
                    self.ellipse_arc(rem)
                } else {
                    k * self.period().unwrap() + self.ellipse_arc(rem)
                }
            }
            CurveShape::Helix { radius, pitch } => t * radius.hypot(pitch),
        }
    }

    /// Arc length of one period for closed curves.
    pub fn period(&self) -> Option<f64> {
        match *self {
            CurveShape::Circle { radius } => Some(2.0 * PI * radius),
            CurveShape::Ellipse { .. } => Some(self.ellipse_arc(2.0 * PI)),
            _ => None,
        }
    }

    /// Parameter at signed arc length `s` (inverse of [`Self::arclength`]).
    pub fn param_at(&self, s: f64) -> f64 {
        match *self {
            CurveShape::Circle { .. } | CurveShape::Line => s,
            CurveShape::Helix { radius, pitch } => s / radius.hypot(pitch),
            CurveShape::Parabola { .. } | CurveShape::Ellipse { .. } => {
                let mut t = match *self {
                    CurveShape::Ellipse { a, b } => 2.0 * s / (a + b),
                    _ => s,
                };
                for _ in 0..100 {
                    let f = self.arclength(t) - s;
                    let dt = f / self.speed(t);
                    t -= dt;
                    if dt.abs() < 1e-15 * (1.0 + t.abs()) {
                        break;
                    }
                }
                t
            }
        }
    }

    /// Differential data at arc length `s`.
    pub fn at_arclength(&self, s: f64) -> CurvePoint {
        self.at_param_with_arclength(self.param_at(s), s)
    }

    pub fn at_param(&self, t: f64) -> CurvePoint {
        self.at_param_with_arclength(t, self.arclength(t))
    }

    fn at_param_with_arclength(&self, t: f64, s: f64) -> CurvePoint {
        let d1 = self.derivative(t, 1);
        let d2 = self.derivative(t, 2);
        let sp = d1.norm();
        let tangent = &d1 / sp;
        let along = d2.dot(&tangent);
        let curvature_vector = (&d2 - &tangent * along) / (sp * sp);
        CurvePoint {
            param: t,
            arclength: s,
            position: self.position_at(t),
            tangent,
            curvature_vector,
        }
    }

    /// Sign making the right-hand normal of a planar curve point away from its
    /// centre of curvature.
    pub fn planar_orientation(&self) -> f64 {
        match *self {
            CurveShape::Parabola { a } if a < 0.0 => -1.0,
            _ => 1.0,
        }
    }

    /// Signed curvature of a planar curve and its arc-length derivative.
    pub fn signed_curvature(&self, t: f64) -> (f64, f64) {
        let d1 = self.derivative(t, 1);
        let d2 = self.derivative(t, 2);
        let d3 = self.derivative(t, 3);
        let num = d1[0] * d2[1] - d1[1] * d2[0];
        let dnum = d1[0] * d3[1] - d1[1] * d3[0];
        let sp = d1.norm();
        let dsp = d1.dot(&d2) / sp;
        let den = sp.powi(3);
        let dden = 3.0 * sp * sp * dsp;
        let k = num / den;
        let dk_dt = (dnum * den - num * dden) / (den * den);
        (k, dk_dt / sp)
    }

    /// Curvature and torsion of the helix.
    pub fn helix_curvature_torsion(&self) -> Option<(f64, f64)> {
        match *self {
            CurveShape::Helix { radius, pitch } => {
                let l2 = radius * radius + pitch * pitch;
                Some((radius / l2, pitch / l2))
            }
            _ => None,
        }
    }

    /// Point-wise normal frame: oriented right-hand normal (planar) or (N, B) (helix).
    pub fn normal_frame(&self, p: &CurvePoint) -> Vec<Vector> {
        match *self {
            CurveShape::Helix { .. } => {
                let t = p.param;
                let n = vec_from(&[-t.cos(), -t.sin(), 0.0]);
                let b = p.tangent.cross(&n);
                vec![n, b]
            }
            _ => {
                let o = self.planar_orientation();
                vec![vec_from(&[o * p.tangent[1], -o * p.tangent[0]])]
            }
        }
    }

    /// Conservative reach bound: 0.9 × (minimum radius of curvature, coil half-spacing).
    pub fn reach(&self) -> f64 {
        match *self {
            CurveShape::Circle { radius } => radius,
            CurveShape::Line => f64::INFINITY,
            CurveShape::Parabola { a } => 0.9 / a.abs(),
            CurveShape::Ellipse { a, b } => 0.9 * (b * b / a).min(a * a / b),
            CurveShape::Helix { radius, pitch } => {
                let l2 = radius * radius + pitch * pitch;
                0.9 * (l2 / radius).min(PI * pitch.abs())
            }
        }
    }

    fn initial_param(&self, z: &Vector) -> f64 {
        match *self {
            CurveShape::Circle { radius } => radius * z[1].atan2(z[0]),
            CurveShape::Line | CurveShape::Parabola { .. } => z[0],
            CurveShape::Ellipse { a, b } => (z[1] / b).atan2(z[0] / a),
            CurveShape::Helix { pitch, .. } => {
                let phi = z[1].atan2(z[0]);
                let k = ((z[2] / pitch - phi) / (2.0 * PI)).round();
                phi + 2.0 * PI * k
            }
        }
    }

    /// Parameter of the nearest curve point, by Newton on ⟨c(t) − z, c′(t)⟩ = 0.
    /// `hint` overrides the global initial guess.
    pub fn nearest_param(&self, z: &Vector, hint: Option<f64>) -> f64 {
        let mut t = hint.unwrap_or_else(|| self.initial_param(z));
        if let CurveShape::Circle { .. } | CurveShape::Line = self {
            if hint.is_none() {
                return t;
            }
        }
        for _ in 0..60 {
            let diff = self.position_at(t) - z;
            let d1 = self.derivative(t, 1);
            let d2 = self.derivative(t, 2);
            let g = diff.dot(&d1);
            let dg = d1.dot(&d1) + diff.dot(&d2);
            let step = g / dg;
            t -= step;
            if step.abs() < 1e-15 * (1.0 + t.abs()) {
                break;
            }
        }
        t
    }

    /// Arc-length distance between two arc-length positions (shortest way round for closed curves).
    pub fn arc_distance(&self, s1: f64, s2: f64) -> f64 {
        let d = (s2 - s1).abs();
        match self.period() {
            Some(p) => {
                let r = d % p;
                r.min(p - r)
            }
            None => d,
        }
    }
}
