//! Gauss rules on intervals and polar/spherical product rules on balls.

use nalgebra::{DMatrix, SymmetricEigen};
use std::f64::consts::PI;

/// Nodes and weights of an interval rule.
#[derive(Debug, Clone)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Gauss–Legendre rule with `n` nodes on [−1, 1] (Newton on the three-term recurrence).
pub fn gauss_legendre(n: usize) -> Rule {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Rule { nodes, weights }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Gauss–Jacobi rule for the weight (1−x)^a (1+x)^b on [−1, 1], integer exponents,
/// via the Golub–Welsch eigenproblem.
pub fn gauss_jacobi(n: usize, a: u32, b: u32) -> Rule {
    assert!(n >= 1);
    let (a, b) = (a as f64, b as f64);
    let ab = a + b;
    let mut jac = DMatrix::<f64>::zeros(n, n);
    for k in 0..n {
        let kf = k as f64;
        let denom = (2.0 * kf + ab) * (2.0 * kf + ab + 2.0);
        jac[(k, k)] = if denom == 0.0 {
            (b - a) / (ab + 2.0)
        } else {
            (b * b - a * a) / denom
        };
        if k + 1 < n {
            let m = kf + 1.0;
            let s = 2.0 * m + ab;
            let beta = 4.0 * m * (m + a) * (m + b) * (m + ab) / (s * s * (s + 1.0) * (s - 1.0));
            jac[(k, k + 1)] = beta.sqrt();
            jac[(k + 1, k)] = beta.sqrt();
        }
    }
    let mu0 = 2f64.powf(ab + 1.0) * factorial(a) * factorial(b) / factorial(ab + 1.0);
    let eig = SymmetricEigen::new(jac);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let v0 = eig.eigenvectors[(0, i)];
            (eig.eigenvalues[i], mu0 * v0 * v0)
        })
        .collect();
    pairs.sort_by(|p, q| p.0.total_cmp(&q.0));
    Rule {
        nodes: pairs.iter().map(|p| p.0).collect(),
        weights: pairs.iter().map(|p| p.1).collect(),
    }
}

fn factorial(x: f64) -> f64 {
    (1..=(x.round() as u64)).map(|k| k as f64).product()
}

/// One node of a ball rule: the point is `radius * direction` in the unit ball.
#[derive(Debug, Clone)]
pub struct BallNode {
    pub radius: f64,
    pub direction: Vec<f64>,
    pub weight: f64,
}

/// Product rule on the unit ball of dimension 1, 2 or 3 with `order` radial nodes.
///
/// Weights sum to the volume of the unit ball. Exact for polynomials of degree
/// ≤ 2·order − 1.
pub fn ball_rule(dim: usize, order: usize) -> Vec<BallNode> {
    match dim {
        1 => {
            let gl = gauss_legendre(2 * order);
            gl.nodes
                .iter()
                .zip(&gl.weights)
                .map(|(&x, &w)| BallNode {
                    radius: x.abs(),
                    direction: vec![if x < 0.0 { -1.0 } else { 1.0 }],
                    weight: w,
                })
                .collect()
        }
        2 | 3 => {
            let radial = radial_rule(dim, order);
            let dirs = sphere_directions(dim, order);
            let mut out = Vec::with_capacity(radial.nodes.len() * dirs.len());
            for (&r, &wr) in radial.nodes.iter().zip(&radial.weights) {
                for (u, wu) in &dirs {
                    out.push(BallNode {
                        radius: r,
                        direction: u.clone(),
                        weight: wr * wu,
                    });
                }
            }
            out
        }
        _ => panic!("ball rules are implemented for dimensions 1 to 3, got {dim}"),
    }
}

/// Radial Gauss–Jacobi rule on [0, 1] for the weight r^(d−1).
pub fn radial_rule(dim: usize, order: usize) -> Rule {
    let gj = gauss_jacobi(order, 0, dim as u32 - 1);
    let scale = 0.5f64.powi(dim as i32);
    Rule {
        nodes: gj.nodes.iter().map(|x| 0.5 * (1.0 + x)).collect(),
        weights: gj.weights.iter().map(|w| w * scale).collect(),
    }
}

/// Directions on S^(dim−1) with weights summing to its area.
fn sphere_directions(dim: usize, order: usize) -> Vec<(Vec<f64>, f64)> {
    let m = 2 * order;
    let dphi = 2.0 * PI / m as f64;
    match dim {
        2 => (0..m)
            .map(|k| {
                let t = k as f64 * dphi;
                (vec![t.cos(), t.sin()], dphi)
            })
            .collect(),
        3 => {
            let gl = gauss_legendre(order);
            let mut out = Vec::with_capacity(order * m);
            for (&c, &wc) in gl.nodes.iter().zip(&gl.weights) {
                let s = (1.0 - c * c).sqrt();
                for k in 0..m {
                    let t = k as f64 * dphi;
                    out.push((vec![s * t.cos(), s * t.sin(), c], wc * dphi));
                }
            }
            out
        }
        _ => unreachable!(),
    }
}
