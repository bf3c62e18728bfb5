//! Exact discrete W₁ and the deterministic transport bounds between tube measures.
//!
//! - [`w1_exact`]: optimal transport between finitely supported measures with the
//!   Euclidean ground cost, certified by complementary slackness.
//! - [`TransportMapT`]: the explicit near-optimal map between the tube measures at
//!   x₀ and y = γ(δ), written in Fermi coordinates.
//! - [`SegmentPair`]: quadrature upper bound ∫‖Tz − z‖ dμ_{x₀}, dual lower bound from
//!   a near-1-Lipschitz test function, and the density-ratio diagnostic of T.

mod assignment;
mod map;
mod simplex;

pub use map::{density_ratio_check, dual_lower_bound, upper_bound_via_T, DualBound, SegmentPair, TransportMapT};

use crate::error::{Error, Result};
use crate::measures::DiscreteMeasure;
use crate::vecops::dist;
use std::fmt::Write as _;

/// Largest number of atoms per side accepted by [`w1_exact`].
pub const MAX_ATOMS: usize = 20_000;
/// Largest n₁·n₂ for which the simplex works from a tabulated cost matrix (128 MiB).
const DENSE_ARCS: usize = 1 << 24;
/// Relative tolerance on the dual feasibility residual of the optimality certificate.
const CERTIFICATE_TOL: f64 = 1e-8;

/// Which exact solver produced a plan.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Solver {
    Assignment,
    NetworkSimplex,
}

/// An optimal coupling: (source index, target index, mass) triplets.
#[derive(Debug, Clone)]
pub struct TransportPlan {
    pub flows: Vec<(usize, usize, f64)>,
    pub cost: f64,
    /// max over all pairs of the dual infeasibility (π_i − π_j − c_ij)₊.
    pub dual_residual: f64,
    pub solver: Solver,
    /// Simplex pivots (0 for the assignment solver).
    pub pivots: usize,
}

impl TransportPlan {
    /// Source and target marginals of the plan.
    pub fn marginals(&self, n1: usize, n2: usize) -> (Vec<f64>, Vec<f64>) {
        let (mut a, mut b) = (vec![0.0; n1], vec![0.0; n2]);
        for &(i, j, f) in &self.flows {
            a[i] += f;
            b[j] += f;
        }
        (a, b)
    }

    /// Plain-text export: header `cost <value> <rows>`, then `i j flow` rows.
    pub fn to_text(&self) -> String {
        let mut out = format!("cost {:?} {}\n", self.cost, self.flows.len());
        for (i, j, f) in &self.flows {
            writeln!(out, "{i} {j} {f:?}").unwrap();
        }
        out
    }
}

fn is_uniform(w: &[f64]) -> bool {
    let (lo, hi) = w.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    hi - lo <= 1e-12 * hi
}

/// Exact W₁(μ, ν) with the Euclidean ground cost.
///
/// Equal-size uniform inputs are solved as an assignment problem; everything else by
/// the transportation network simplex (uniform weights are scaled to integer
/// supplies n₂ and demands n₁ so that degeneracy is detected exactly). The result is
/// certified by dual feasibility on every pair.
pub fn w1_exact(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<(f64, TransportPlan)> {
    if mu.is_empty() || nu.is_empty() {
        return Err(Error::Contract("both measures must have at least one atom".into()));
    }
    if mu.dim() != nu.dim() {
        return Err(Error::Contract(format!("ambient dimensions differ: {} vs {}", mu.dim(), nu.dim())));
    }
    let (m1, m2) = (mu.total_mass(), nu.total_mass());
    if (m1 - m2).abs() > 1e-9 {
        return Err(Error::Contract(format!("total masses differ: {m1} vs {m2}")));
    }
    let (n1, n2) = (mu.len(), nu.len());
    if n1 > MAX_ATOMS || n2 > MAX_ATOMS {
        return Err(Error::Contract(format!(
            "exact transport is capped at {MAX_ATOMS} atoms per side, got {n1} and {n2}"
        )));
    }
    let cost = |i: usize, j: usize| dist(mu.point(i), nu.point(j));
    let uniform = is_uniform(mu.weights()) && is_uniform(nu.weights());

    let plan = if n1 == n2 && uniform {
        let sol = assignment::solve(n1, cost);
        let w = m1 / n1 as f64;
        let u: Vec<f64> = (0..n1).map(|i| cost(i, sol.row_to_col[i]) - sol.col_price[sol.row_to_col[i]]).collect();
        let mut residual = 0.0f64;
        let mut max_cost = 0.0f64;
        for i in 0..n1 {
            for j in 0..n2 {
                let c = cost(i, j);
                max_cost = max_cost.max(c);
                residual = residual.max(u[i] + sol.col_price[j] - c);
            }
        }
        let flows: Vec<_> = (0..n1).map(|i| (i, sol.row_to_col[i], w)).collect();
        let total = crate::vecops::compensated_sum(flows.iter().map(|&(i, j, f)| f * cost(i, j)));
        certify(residual, max_cost)?;
        TransportPlan { flows, cost: total, dual_residual: residual, solver: Solver::Assignment, pivots: 0 }
    } else {
        let (supply, demand, scale) = if uniform {
            (vec![n2 as f64; n1], vec![n1 as f64; n2], m1 / (n1 as f64 * n2 as f64))
        } else {
            let r = m1 / m2;
            (mu.weights().to_vec(), nu.weights().iter().map(|w| w * r).collect(), 1.0)
        };
        let (order1, order2) = projection_orders(mu, nu);
        let tol = 1e-12 * diameter_bound(mu, nu).max(f64::MIN_POSITIVE);
        let sol = if n1 * n2 <= DENSE_ARCS {
            let table: Vec<f64> = (0..n1 * n2).map(|k| cost(k / n2, k % n2)).collect();
            simplex::solve(&supply, &demand, &order1, &order2, |i, j| table[i * n2 + j], tol)?
        } else {
            simplex::solve(&supply, &demand, &order1, &order2, cost, tol)?
        };
        let mut residual = 0.0f64;
        let mut max_cost = 0.0f64;
        for i in 0..n1 {
            for j in 0..n2 {
                let c = cost(i, j);
                max_cost = max_cost.max(c);
                residual = residual.max(sol.potentials[i] - sol.potentials[n1 + j] - c);
            }
        }
        certify(residual, max_cost)?;
        let flows: Vec<_> = sol.flows.iter().map(|&(i, j, f)| (i, j, f * scale)).collect();
        let total = crate::vecops::compensated_sum(flows.iter().map(|&(i, j, f)| f * cost(i, j)));
        TransportPlan { flows, cost: total, dual_residual: residual, solver: Solver::NetworkSimplex, pivots: sol.pivots }
    };
    Ok((plan.cost, plan))
}

fn certify(residual: f64, max_cost: f64) -> Result<()> {
    if residual > CERTIFICATE_TOL * max_cost.max(f64::MIN_POSITIVE) {
        return Err(Error::Solver(format!(
            "optimality certificate failed: dual residual {residual:e} (max distance {max_cost:e})"
        )));
    }
    Ok(())
}

/// Atom orders by projection onto the direction between the two means; the
/// north-west-corner basis built from them is the 1-D optimal plan along it.
fn projection_orders(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> (Vec<usize>, Vec<usize>) {
    let d = mu.dim();
    let mean = |m: &DiscreteMeasure| {
        let mut c = vec![0.0; d];
        for (p, w) in m.points().zip(m.weights()) {
            for k in 0..d {
                c[k] += w * p[k];
            }
        }
        c
    };
    let (a, b) = (mean(mu), mean(nu));
    let mut dir: Vec<f64> = b.iter().zip(&a).map(|(x, y)| x - y).collect();
    if dir.iter().all(|x| x.abs() < 1e-300) {
        dir = vec![0.0; d];
        dir[0] = 1.0;
    }
    let order = |m: &DiscreteMeasure| {
        let key: Vec<f64> = m.points().map(|p| p.iter().zip(&dir).map(|(x, y)| x * y).sum()).collect();
        let mut idx: Vec<usize> = (0..m.len()).collect();
        idx.sort_by(|&i, &j| key[i].total_cmp(&key[j]));
        idx
    };
    (order(mu), order(nu))
}

/// Diagonal of the joint bounding box: an upper bound on every pairwise distance.
fn diameter_bound(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> f64 {
    let d = mu.dim();
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for p in mu.points().chain(nu.points()) {
        for k in 0..d {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    lo.iter().zip(&hi).map(|(l, h)| (h - l).powi(2)).sum::<f64>().sqrt()
}
