//! Small dense-vector helpers shared across modules.

use nalgebra::DVector;

pub type Vector = DVector<f64>;

pub fn vec_from(values: &[f64]) -> Vector {
    DVector::from_column_slice(values)
}

pub fn zeros(n: usize) -> Vector {
    DVector::zeros(n)
}

/// Euclidean distance between two coordinate slices.
#[inline]
pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for (x, y) in a.iter().zip(b) {
        let d = x - y;
        s += d * d;
    }
    s.sqrt()
}

/// Gram–Schmidt completion: orthonormal vectors spanning the complement of `given`
/// (assumed orthonormal) in ℝⁿ, built from the standard basis in index order.
pub fn orthonormal_complement(given: &[Vector], n: usize) -> Vec<Vector> {
    let mut basis: Vec<Vector> = given.to_vec();
    let mut out = Vec::new();
    for i in 0..n {
        if basis.len() == n {
            break;
        }
        let mut e = zeros(n);
        e[i] = 1.0;
        for _ in 0..2 {
            for b in &basis {
                let c = e.dot(b);
                e -= b * c;
            }
        }
        let norm = e.norm();
        if norm > 1e-6 {
            e /= norm;
            basis.push(e.clone());
            out.push(e);
        }
    }
    out
}

/// Kahan–Babuška compensated sum.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0;
    let mut c = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            c += (sum - t) + v;
        } else {
            c += (v - t) + sum;
        }
        sum = t;
    }
    sum + c
}

/// Least-squares slope of log(y) against log(x).
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (a, b) in lx.iter().zip(&ly) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
    }
    sxy / sxx
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
