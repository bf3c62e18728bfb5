//! Graph surfaces z = f(x, y): numerical geodesics, projection and log map.

use crate::error::{Error, Result};
use crate::vecops::{vec_from, Vector};
use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

/// Height functions with analytic first and second derivatives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "height", rename_all = "snake_case")]
pub enum HeightFunction {
    /// f = (a x² + 2c xy + b y²)/2.
    Quadratic { a: f64, b: f64, c: f64 },
    /// f = A exp(−(x² + y²)/(2w²)).
    Bump { amplitude: f64, width: f64 },
    /// f = k (x³ − 3xy²).
    MonkeySaddle { k: f64 },
}

const CHRISTOFFEL_STEP: f64 = 1e-5;
const GEODESIC_STEP: f64 = 1e-3;

impl HeightFunction {
    pub fn value(&self, p: Vector2<f64>) -> f64 {
        let (x, y) = (p[0], p[1]);
        match *self {
            HeightFunction::Quadratic { a, b, c } => 0.5 * (a * x * x + 2.0 * c * x * y + b * y * y),
            HeightFunction::Bump { amplitude, width } => {
                amplitude * (-(x * x + y * y) / (2.0 * width * width)).exp()
            }
            HeightFunction::MonkeySaddle { k } => k * (x * x * x - 3.0 * x * y * y),
        }
    }

    pub fn gradient(&self, p: Vector2<f64>) -> Vector2<f64> {
        let (x, y) = (p[0], p[1]);
        match *self {
            HeightFunction::Quadratic { a, b, c } => Vector2::new(a * x + c * y, c * x + b * y),
            HeightFunction::Bump { width, .. } => {
                let f = self.value(p);
                let w2 = width * width;
                Vector2::new(-x / w2 * f, -y / w2 * f)
            }
            HeightFunction::MonkeySaddle { k } => Vector2::new(3.0 * k * (x * x - y * y), -6.0 * k * x * y),
        }
    }

    pub fn hessian(&self, p: Vector2<f64>) -> Matrix2<f64> {
        let (x, y) = (p[0], p[1]);
        match *self {
            HeightFunction::Quadratic { a, b, c } => Matrix2::new(a, c, c, b),
            HeightFunction::Bump { width, .. } => {
                let f = self.value(p);
                let w2 = width * width;
                Matrix2::new(
                    (x * x / w2 - 1.0) / w2 * f,
                    x * y / (w2 * w2) * f,
                    x * y / (w2 * w2) * f,
                    (y * y / w2 - 1.0) / w2 * f,
                )
            }
            HeightFunction::MonkeySaddle { k } => Matrix2::new(6.0 * k * x, -6.0 * k * y, -6.0 * k * y, -6.0 * k * x),
        }
    }
}

/// A graph surface restricted to the square working window [−w, w]².
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphSurface {
    pub height: HeightFunction,
    pub window: f64,
}

impl GraphSurface {
    pub fn embed(&self, p: Vector2<f64>) -> Vector {
        vec_from(&[p[0], p[1], self.height.value(p)])
    }

    pub fn in_window(&self, p: Vector2<f64>) -> bool {
        p[0].abs() <= self.window && p[1].abs() <= self.window
    }

    /// Sign turning the upward normal into the orientation pointing away from the
    /// centre of curvature at the origin.
    pub fn orientation(&self) -> f64 {
        let h = self.height.hessian(Vector2::zeros());
        if h.trace() > 0.0 {
            -1.0
        } else {
            1.0
        }
    }

    pub fn unit_normal(&self, p: Vector2<f64>) -> Vector {
        let g = self.height.gradient(p);
        let w = (1.0 + g.norm_squared()).sqrt();
        vec_from(&[-g[0], -g[1], 1.0]) * (self.orientation() / w)
    }

    pub fn metric(&self, p: Vector2<f64>) -> Matrix2<f64> {
        let g = self.height.gradient(p);
        Matrix2::identity() + g * g.transpose()
    }

    /// Ambient tangent vector of a parameter velocity.
    pub fn push_forward(&self, p: Vector2<f64>, q: Vector2<f64>) -> Vector {
        let g = self.height.gradient(p);
        vec_from(&[q[0], q[1], g.dot(&q)])
    }

    /// Orthonormal tangent frame from Gram–Schmidt on (∂x, ∂y).
    pub fn tangent_frame(&self, p: Vector2<f64>) -> [Vector; 2] {
        let ex = self.push_forward(p, Vector2::new(1.0, 0.0));
        let ey = self.push_forward(p, Vector2::new(0.0, 1.0));
        let e1 = &ex / ex.norm();
        let mut e2 = &ey - &e1 * ey.dot(&e1);
        e2 /= e2.norm();
        [e1, e2]
    }

    /// Christoffel symbols Γ^k_ij with the metric derivatives taken by central differences.
    pub fn christoffel(&self, p: Vector2<f64>) -> [[[f64; 2]; 2]; 2] {
        let h = CHRISTOFFEL_STEP * self.window.max(1.0);
        let mut dg = [Matrix2::zeros(); 2];
        for (l, d) in dg.iter_mut().enumerate() {
            let mut e = Vector2::zeros();
            e[l] = h;
            *d = (self.metric(p + e) - self.metric(p - e)) / (2.0 * h);
        }
        let ginv = self.metric(p).try_inverse().expect("metric is positive definite");
        let mut gamma = [[[0.0; 2]; 2]; 2];
        for (k, gk) in gamma.iter_mut().enumerate() {
            for i in 0..2 {
                for j in 0..2 {
                    let mut s = 0.0;
                    for l in 0..2 {
                        s += ginv[(k, l)] * (dg[i][(j, l)] + dg[j][(i, l)] - dg[l][(i, j)]);
                    }
                    gk[i][j] = 0.5 * s;
                }
            }
        }
        gamma
    }

    fn geodesic_rhs(&self, state: &[f64; 6]) -> [f64; 6] {
        let p = Vector2::new(state[0], state[1]);
        let gam = self.christoffel(p);
        let q = [state[2], state[3]];
        let w = [state[4], state[5]];
        let mut out = [q[0], q[1], 0.0, 0.0, 0.0, 0.0];
        for k in 0..2 {
            let mut acc = 0.0;
            let mut par = 0.0;
            for i in 0..2 {
                for j in 0..2 {
                    acc += gam[k][i][j] * q[i] * q[j];
                    par += gam[k][i][j] * q[i] * w[j];
                }
            }
            out[2 + k] = -acc;
            out[4 + k] = -par;
        }
        out
    }

    /// Integrates the geodesic from `p` with parameter velocity `q` for unit time in
    /// `steps` RK4 steps, transporting the parameter vector `w` in parallel.
    pub fn flow(&self, p: Vector2<f64>, q: Vector2<f64>, w: Vector2<f64>, steps: usize) -> (Vector2<f64>, Vector2<f64>, Vector2<f64>) {
        let mut s = [p[0], p[1], q[0], q[1], w[0], w[1]];
        let h = 1.0 / steps as f64;
        for _ in 0..steps {
            let k1 = self.geodesic_rhs(&s);
            let k2 = self.geodesic_rhs(&add(&s, &k1, 0.5 * h));
            let k3 = self.geodesic_rhs(&add(&s, &k2, 0.5 * h));
            let k4 = self.geodesic_rhs(&add(&s, &k3, h));
            for i in 0..6 {
                s[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
        (Vector2::new(s[0], s[1]), Vector2::new(s[2], s[3]), Vector2::new(s[4], s[5]))
    }

    /// Number of RK4 steps for a geodesic of the given length.
    pub fn steps_for(&self, length: f64) -> usize {
        ((length.abs() / GEODESIC_STEP).ceil() as usize).max(1)
    }

    /// exp_p(q) with q a parameter velocity; returns the end point's parameters.
    pub fn exp_param(&self, p: Vector2<f64>, q: Vector2<f64>) -> Vector2<f64> {
        let len = self.metric(p).quadratic_form_len(q);
        self.flow(p, q, Vector2::zeros(), self.steps_for(len)).0
    }

    /// Nearest point parameters by Newton on the stationarity of ½‖z − E(u)‖².
    pub fn project_param(&self, z: &Vector) -> Result<Vector2<f64>> {
        let mut u = Vector2::new(z[0], z[1]);
        for _ in 0..50 {
            let g = self.height.gradient(u);
            let hs = self.height.hessian(u);
            let dz = z[2] - self.height.value(u);
            let f = -(Vector2::new(z[0], z[1]) - u) - g * dz;
            let jac = Matrix2::identity() + g * g.transpose() - hs * dz;
            let step = jac
                .lu()
                .solve(&f)
                .ok_or_else(|| Error::Solver("singular projection Jacobian".into()))?;
            u -= step;
            if step.norm() < 1e-12 {
                return Ok(u);
            }
        }
        Err(Error::Solver("graph projection did not converge in 50 iterations".into()))
    }

    /// Parameter velocity q with exp_p(q) = target, by Newton shooting.
    pub fn log_param(&self, p: Vector2<f64>, target: Vector2<f64>) -> Result<Vector2<f64>> {
        let mut q = target - p;
        let h = 1e-7;
        for _ in 0..30 {
            let steps = self.steps_for(self.metric(p).quadratic_form_len(q)) + 1;
            let end = |q: Vector2<f64>| self.flow(p, q, Vector2::zeros(), steps).0;
            let r = end(q) - target;
            if r.norm() < 1e-13 {
                return Ok(q);
            }
            let mut jac = Matrix2::zeros();
            for k in 0..2 {
                let mut e = Vector2::zeros();
                e[k] = h;
                let col = (end(q + e) - end(q - e)) / (2.0 * h);
                jac.set_column(k, &col);
            }
            let step = jac
                .lu()
                .solve(&r)
                .ok_or_else(|| Error::Solver("singular shooting Jacobian".into()))?;
            q -= step;
            if step.norm() < 1e-14 {
                return Ok(q);
            }
        }
        Err(Error::Solver("geodesic shooting did not converge".into()))
    }

    /// 0.9 / max spectral norm of the Hessian over a grid on the window.
    pub fn reach(&self) -> f64 {
        let n = 41;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let x = -self.window + 2.0 * self.window * i as f64 / (n - 1) as f64;
                let y = -self.window + 2.0 * self.window * j as f64 / (n - 1) as f64;
                let h = self.height.hessian(Vector2::new(x, y));
                let eig = h.symmetric_eigenvalues();
                worst = worst.max(eig[0].abs()).max(eig[1].abs());
            }
        }
        if worst == 0.0 {
            f64::INFINITY
        } else {
            0.9 / worst
        }
    }
}

trait QuadraticLen {
    fn quadratic_form_len(&self, q: Vector2<f64>) -> f64;
}

impl QuadraticLen for Matrix2<f64> {
    fn quadratic_form_len(&self, q: Vector2<f64>) -> f64 {
        (q.transpose() * self * q)[0].max(0.0).sqrt()
    }
}

fn add(s: &[f64; 6], k: &[f64; 6], h: f64) -> [f64; 6] {
    let mut out = *s;
    for i in 0..6 {
        out[i] += h * k[i];
    }
    out
}
