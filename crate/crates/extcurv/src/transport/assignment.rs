//! Dense linear assignment by the Jonker–Volgenant shortest augmenting path method.
//!
//! Costs are evaluated on demand, so memory stays O(n). Returns the row → column
//! assignment together with column prices v such that c(i, j) − u_i − v_j ≥ 0 with
//! equality on the assignment (u_i = c(i, x_i) − v_{x_i}).

const NONE: usize = usize::MAX;

pub(crate) struct Assignment {
    pub row_to_col: Vec<usize>,
    pub col_price: Vec<f64>,
}

/// Largest n for which the cost matrix is tabulated (128 MiB of f64) instead of
/// being re-evaluated in every shortest-path phase.
const DENSE_LIMIT: usize = 4096;

pub(crate) fn solve<C: Fn(usize, usize) -> f64>(n: usize, cost: C) -> Assignment {
    if n == 1 {
        return Assignment { row_to_col: vec![0], col_price: vec![cost(0, 0)] };
    }
    if n <= DENSE_LIMIT {
        let table: Vec<f64> = (0..n * n).map(|k| cost(k / n, k % n)).collect();
        return solve_with(n, |i, j| table[i * n + j]);
    }
    solve_with(n, cost)
}

fn solve_with<C: Fn(usize, usize) -> f64>(n: usize, cost: C) -> Assignment {
    let mut x = vec![NONE; n]; // row → column
    let mut y = vec![NONE; n]; // column → row
    let mut v = vec![0.0; n];
    let mut matches = vec![0usize; n];

    // Column reduction, in reverse order as in the original method.
    for j in (0..n).rev() {
        let (mut imin, mut min) = (0, cost(0, j));
        for i in 1..n {
            let c = cost(i, j);
            if c < min {
                min = c;
                imin = i;
            }
        }
        v[j] = min;
        matches[imin] += 1;
        if matches[imin] == 1 {
            x[imin] = j;
            y[j] = imin;
        } else if v[j] < v[x[imin]] {
            let j1 = x[imin];
            x[imin] = j;
            y[j] = imin;
            y[j1] = NONE;
        } else {
            y[j] = NONE;
        }
    }

    // Reduction transfer.
    let mut free = Vec::with_capacity(n);
    for i in 0..n {
        if matches[i] == 0 {
            free.push(i);
        } else if matches[i] == 1 {
            let j1 = x[i];
            let min = (0..n).filter(|&j| j != j1).map(|j| cost(i, j) - v[j]).fold(f64::INFINITY, f64::min);
            v[j1] -= min;
        }
    }

    // Augmenting row reduction, two passes. The step cap guards against the
    // floating-point ping-pong that can occur between near-tied columns.
    for _ in 0..2 {
        let pending = std::mem::take(&mut free);
        let mut stack: Vec<usize> = pending.into_iter().rev().collect();
        let mut steps = 0usize;
        while let Some(i) = stack.pop() {
            steps += 1;
            if steps > 100 * n {
                free.push(i);
                free.append(&mut stack);
                break;
            }
            let (mut umin, mut j1) = (cost(i, 0) - v[0], 0);
            let (mut usub, mut j2) = (f64::INFINITY, NONE);
            for j in 1..n {
                let h = cost(i, j) - v[j];
                if h < usub {
                    if h >= umin {
                        usub = h;
                        j2 = j;
                    } else {
                        usub = umin;
                        j2 = j1;
                        umin = h;
                        j1 = j;
                    }
                }
            }
            let mut i0 = y[j1];
            if umin < usub {
                v[j1] -= usub - umin;
            } else if i0 != NONE {
                j1 = j2;
                i0 = y[j2];
            }
            if let Some(old) = (x[i] != NONE).then_some(x[i]) {
                if y[old] == i {
                    y[old] = NONE;
                }
            }
            x[i] = j1;
            y[j1] = i;
            if i0 != NONE {
                x[i0] = NONE;
                if umin < usub {
                    stack.push(i0);
                } else {
                    free.push(i0);
                }
            }
        }
    }

    // Augmentation: Dijkstra over reduced costs from each remaining free row.
    let mut d = vec![0.0; n];
    let mut pred = vec![0usize; n];
    let mut cols: Vec<usize> = (0..n).collect();
    for &start in &free {
        for j in 0..n {
            d[j] = cost(start, j) - v[j];
            pred[j] = start;
            cols[j] = j;
        }
        let (mut low, mut up) = (0usize, 0usize);
        let mut last = 0usize;
        let mut min = 0.0;
        let end = 'search: loop {
            if up == low {
                last = low;
                min = d[cols[up]];
                up += 1;
                // The scan range is fixed at loop entry; `up` only marks the front of the new minimum set.
                #[allow(clippy::mut_range_bound)]
                for k in up..n {
                    let j = cols[k];
                    let h = d[j];
                    if h <= min {
                        if h < min {
                            up = low;
                            min = h;
                        }
                        cols.swap(k, up);
                        up += 1;
                    }
                }
                for &j in &cols[low..up] {
                    if y[j] == NONE {
                        break 'search j;
                    }
                }
            }
            let j1 = cols[low];
            low += 1;
            let i = y[j1];
            let h = cost(i, j1) - v[j1] - min;
            let mut k = up;
            while k < n {
                let j = cols[k];
                let v2 = cost(i, j) - v[j] - h;
                if v2 < d[j] {
                    pred[j] = i;
                    d[j] = v2;
                    if v2 == min {
                        if y[j] == NONE {
                            break 'search j;
                        }
                        cols.swap(k, up);
                        up += 1;
                    }
                }
                k += 1;
            }
        };
        // Columns scanned before the final minimum get their prices raised.
        for &j in &cols[..last] {
            v[j] += d[j] - min;
        }
        let mut j = end;
        loop {
            let i = pred[j];
            y[j] = i;
            let next = x[i];
            x[i] = j;
            if i == start {
                break;
            }
            j = next;
        }
    }
    Assignment { row_to_col: x, col_price: v }
}
