#![allow(dead_code)]

use extcurv::geometry::{CurveShape, HeightFunction, ManifoldKind, ManifoldModel};
use extcurv::vecops::{vec_from, Vector};
use nalgebra::DMatrix;

/// Every catalogue entry with representative parameters.
pub fn catalogue() -> Vec<ManifoldModel> {
    vec![
        ManifoldModel::circle(1.0),
        ManifoldModel::circle(2.5),
        ManifoldModel::planar_curve(CurveShape::Line).unwrap(),
        ManifoldModel::planar_curve(CurveShape::Parabola { a: 1.0 }).unwrap(),
        ManifoldModel::planar_curve(CurveShape::Ellipse { a: 2.0, b: 1.0 }).unwrap(),
        ManifoldModel::space_curve(CurveShape::Helix { radius: 0.5, pitch: 0.5 }).unwrap(),
        ManifoldModel::sphere(2, 1.0),
        ManifoldModel::sphere(3, 1.5),
        ManifoldModel::flat_torus(1.0, 2.0),
        ManifoldModel::graph_surface(HeightFunction::Quadratic { a: 1.0, b: 0.5, c: 0.2 }, 1.0).unwrap(),
        ManifoldModel::graph_surface(HeightFunction::Bump { amplitude: 0.3, width: 0.8 }, 1.0).unwrap(),
        ManifoldModel::graph_surface(HeightFunction::MonkeySaddle { k: 0.3 }, 1.0).unwrap(),
    ]
}

/// Maps unit-cube samples u ∈ [0,1]^dim to intrinsic parameters in a safe region.
pub fn intrinsic_from_unit(m: &ManifoldModel, u: &[f64]) -> Vec<f64> {
    let u = &u[..m.dim()];
    match m.kind() {
        ManifoldKind::Sphere { radius, .. } => u.iter().map(|v| (2.0 * v - 1.0) * 1.2 * radius).collect(),
        ManifoldKind::FlatTorus { r1, r2 } => vec![(2.0 * u[0] - 1.0) * 3.0 * r1, (2.0 * u[1] - 1.0) * 3.0 * r2],
        ManifoldKind::GraphSurface(_) => u.iter().map(|v| (2.0 * v - 1.0) * 0.5).collect(),
        _ => vec![(2.0 * u[0] - 1.0) * 1.5],
    }
}

/// Offsets with norm below half of min(reach, 1).
pub fn beta_from_unit(m: &ManifoldModel, u: &[f64]) -> Vec<f64> {
    let scale = 0.5 * m.reach_bound().min(1.0);
    let raw: Vec<f64> = u.iter().map(|v| 2.0 * v - 1.0).collect();
    let n = raw.iter().map(|v| v * v).sum::<f64>().sqrt().max(1.0);
    raw.iter().map(|v| v / n * scale * 0.999).collect()
}

/// Determinant of the central-difference Jacobian of (c, β) ↦ embed(c) + Σ β_j n_j(embed(c)),
/// divided by the Riemannian volume factor of the parametrization.
pub fn fd_leaf_volume_ratio(m: &ManifoldModel, c: &[f64], beta: &[f64]) -> f64 {
    let n = m.ambient_dim();
    let dim = m.dim();
    let map = |c: &[f64], b: &[f64]| -> Vector {
        let x = m.embed(c).unwrap();
        let normals = m.normal_frame(&x).unwrap();
        let mut z = x.clone();
        for (nj, bj) in normals.iter().zip(b) {
            z += nj * *bj;
        }
        z
    };
    let h = 1e-5;
    let mut full = DMatrix::<f64>::zeros(n, n);
    let mut base = DMatrix::<f64>::zeros(n, dim);
    for k in 0..n {
        let (mut cp, mut cm) = (c.to_vec(), c.to_vec());
        let (mut bp, mut bm) = (beta.to_vec(), beta.to_vec());
        if k < dim {
            cp[k] += h;
            cm[k] -= h;
        } else {
            bp[k - dim] += h;
            bm[k - dim] -= h;
        }
        let col = (map(&cp, &bp) - map(&cm, &bm)) / (2.0 * h);
        full.set_column(k, &col);
        if k < dim {
            let zero = vec![0.0; beta.len()];
            let col0 = (map(&cp, &zero) - map(&cm, &zero)) / (2.0 * h);
            base.set_column(k, &col0);
        }
    }
    let gram = base.transpose() * &base;
    full.determinant().abs() / gram.determinant().sqrt()
}

pub fn v(values: &[f64]) -> Vector {
    vec_from(values)
}
