//! Primal network simplex for the uncapacitated transportation problem on the
//! implicit complete bipartite graph (sources × sinks).
//!
//! Arcs are never stored: arc (i, j) has id i·n₂ + j and its cost is computed on
//! demand. Only the spanning-tree basis is kept (parent pointers, depths, child
//! lists, flows on tree edges, node potentials). Pricing is block search; after a
//! long run of degenerate pivots the solver switches to Bland's rule (lowest-index
//! entering and leaving arcs) until the next non-degenerate pivot, which rules out
//! cycling.

use crate::error::{Error, Result};

const ROOT: usize = usize::MAX;

pub(crate) struct Solution {
    /// (source, sink, flow) for every tree arc with positive flow.
    pub flows: Vec<(usize, usize, f64)>,
    /// Node potentials π with c(i, j) − π_i + π_{n₁+j} ≥ 0 on all arcs at optimality.
    pub potentials: Vec<f64>,
    pub pivots: usize,
}

struct Tree {
    n1: usize,
    n2: usize,
    parent: Vec<usize>,
    depth: Vec<usize>,
    children: Vec<Vec<usize>>,
    /// Flow on the edge between a node and its parent.
    flow: Vec<f64>,
    pi: Vec<f64>,
}

impl Tree {
    fn is_source(&self, v: usize) -> bool {
        v < self.n1
    }

    /// (source, sink) endpoints of the edge between v and its parent.
    fn edge(&self, v: usize) -> (usize, usize) {
        let p = self.parent[v];
        if self.is_source(v) {
            (v, p - self.n1)
        } else {
            (p, v - self.n1)
        }
    }

    fn arc_id(&self, v: usize) -> usize {
        let (i, j) = self.edge(v);
        i * self.n2 + j
    }

    fn detach(&mut self, v: usize) {
        let p = self.parent[v];
        let ch = &mut self.children[p];
        let pos = ch.iter().position(|&c| c == v).expect("child list out of sync");
        ch.swap_remove(pos);
    }
}

/// Solves min Σ c(i,j) f_ij subject to Σ_j f_ij = supply_i, Σ_i f_ij = demand_j, f ≥ 0.
///
/// `order1`/`order2` give the node order for the north-west-corner starting basis.
/// `tol` is the pricing tolerance on reduced costs.
pub(crate) fn solve<C: Fn(usize, usize) -> f64>(
    supply: &[f64],
    demand: &[f64],
    order1: &[usize],
    order2: &[usize],
    cost: C,
    tol: f64,
) -> Result<Solution> {
    let (n1, n2) = (supply.len(), demand.len());
    let nodes = n1 + n2;
    let mut tree = Tree {
        n1,
        n2,
        parent: vec![ROOT; nodes],
        depth: vec![0; nodes],
        children: vec![Vec::new(); nodes],
        flow: vec![0.0; nodes],
        pi: vec![0.0; nodes],
    };

    // North-west corner basis: n₁ + n₂ − 1 arcs forming a spanning tree.
    let total: f64 = supply.iter().sum();
    let slack = 1e-12 * total.max(1.0);
    let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); nodes];
    {
        let (mut a, mut b) = (0usize, 0usize);
        let mut s = supply[order1[0]];
        let mut d = demand[order2[0]];
        loop {
            let (i, j) = (order1[a], order2[b]);
            let f = s.min(d);
            adj[i].push((n1 + j, f));
            adj[n1 + j].push((i, f));
            s -= f;
            d -= f;
            if a + 1 == n1 && b + 1 == n2 {
                break;
            }
            if (s <= slack && a + 1 < n1) || b + 1 == n2 {
                a += 1;
                s += supply[order1[a]];
            } else {
                b += 1;
                d += demand[order2[b]];
            }
        }
    }
    // Orient the tree from the first source.
    let root = order1[0];
    let mut stack = vec![root];
    let mut seen = vec![false; nodes];
    seen[root] = true;
    while let Some(u) = stack.pop() {
        for &(w, f) in &adj[u] {
            if !seen[w] {
                seen[w] = true;
                tree.parent[w] = u;
                tree.depth[w] = tree.depth[u] + 1;
                tree.flow[w] = f;
                tree.children[u].push(w);
                stack.push(w);
            }
        }
    }
    if seen.iter().any(|s| !s) {
        return Err(Error::Solver("initial basis is not a spanning tree".into()));
    }
    drop(adj);
    recompute_potentials(&mut tree, root, &cost);

    let arcs = n1 * n2;
    let block = ((arcs as f64).sqrt().ceil() as usize).clamp(1, arcs);
    let degenerate_limit = nodes.max(1000);
    let mut next = 0usize;
    let mut degenerate_run = 0usize;
    let mut pivots = 0usize;
    let max_pivots = 50 * arcs.max(nodes) + 10_000;
    let reduced = |t: &Tree, i: usize, j: usize| cost(i, j) - t.pi[i] + t.pi[n1 + j];

    loop {
        let bland = degenerate_run >= degenerate_limit;
        // Pricing.
        let entering = if bland {
            (0..arcs).find(|&k| reduced(&tree, k / n2, k % n2) < -tol)
        } else {
            let mut found = None;
            let mut scanned = 0usize;
            while scanned < arcs && found.is_none() {
                let mut best = -tol;
                let len = block.min(arcs - scanned);
                for _ in 0..len {
                    let rc = reduced(&tree, next / n2, next % n2);
                    if rc < best {
                        best = rc;
                        found = Some(next);
                    }
                    next += 1;
                    if next == arcs {
                        next = 0;
                    }
                }
                scanned += len;
            }
            found
        };
        let Some(k) = entering else { break };
        pivots += 1;
        if pivots > max_pivots {
            return Err(Error::Solver(format!("network simplex exceeded {max_pivots} pivots")));
        }
        let (ei, ej) = (k / n2, k % n2);
        let rc = reduced(&tree, ei, ej);
        let (a, b) = (ei, n1 + ej);

        // Cycle: entering arc a → b, then the tree path b → lca → a.
        // Edges on the b side are traversed child → parent, on the a side parent → child.
        let mut up_b = Vec::new();
        let mut up_a = Vec::new();
        let (mut x, mut y) = (b, a);
        while x != y {
            if tree.depth[x] >= tree.depth[y] {
                up_b.push(x);
                x = tree.parent[x];
            } else {
                up_a.push(y);
                y = tree.parent[y];
            }
        }
        // An edge loses flow when traversed against its source → sink orientation.
        // b side (child → parent): against iff the child is a sink.
        // a side (parent → child): against iff the child is a source.
        let mut theta = f64::INFINITY;
        let mut leave: Option<(usize, bool)> = None; // (child node, on the a side)
        let consider = |v: usize, on_a: bool, theta: &mut f64, leave: &mut Option<(usize, bool)>| {
            let f = tree.flow[v];
            let better = match *leave {
                None => true,
                Some((w, _)) => f < *theta || (f == *theta && tree.arc_id(v) < tree.arc_id(w)),
            };
            if better {
                *theta = f;
                *leave = Some((v, on_a));
            }
        };
        for &v in &up_b {
            if !tree.is_source(v) {
                consider(v, false, &mut theta, &mut leave);
            }
        }
        for &v in &up_a {
            if tree.is_source(v) {
                consider(v, true, &mut theta, &mut leave);
            }
        }
        let Some((out, out_on_a)) = leave else {
            return Err(Error::Solver("unbounded cycle in an uncapacitated transportation problem".into()));
        };
        // Push θ around the cycle.
        for &v in &up_b {
            if tree.is_source(v) {
                tree.flow[v] += theta;
            } else {
                tree.flow[v] -= theta;
            }
        }
        for &v in &up_a {
            if tree.is_source(v) {
                tree.flow[v] -= theta;
            } else {
                tree.flow[v] += theta;
            }
        }
        if theta > 0.0 {
            degenerate_run = 0;
        } else {
            degenerate_run += 1;
        }

        // Re-hang the detached subtree (rooted at `out`) from the entering endpoint
        // inside it, then hook it onto the other endpoint.
        let (inner, outer, path) = if out_on_a { (a, b, &up_a) } else { (b, a, &up_b) };
        let stop = path.iter().position(|&v| v == out).unwrap();
        let chain = &path[..=stop]; // inner = chain[0], …, out = chain[stop]
        tree.detach(out);
        for t in (0..stop).rev() {
            // Reverse edge chain[t] — chain[t+1]: chain[t+1] becomes a child of chain[t].
            let (c, p) = (chain[t], chain[t + 1]);
            tree.detach(c);
            tree.parent[p] = c;
            tree.flow[p] = tree.flow[c];
            tree.children[c].push(p);
        }
        tree.parent[inner] = outer;
        tree.flow[inner] = theta;
        tree.children[outer].push(inner);

        // Shift potentials of the moved subtree so the entering arc has zero reduced cost.
        let delta = if tree.is_source(inner) { rc } else { -rc };
        let mut stack = vec![inner];
        while let Some(u) = stack.pop() {
            tree.depth[u] = tree.depth[tree.parent[u]] + 1;
            tree.pi[u] += delta;
            stack.extend(tree.children[u].iter().copied());
        }
    }

    // Fresh potentials from the final tree (removes accumulated drift).
    let root = (0..nodes).find(|&v| tree.parent[v] == ROOT).unwrap();
    recompute_potentials(&mut tree, root, &cost);
    let mut flows = Vec::with_capacity(nodes);
    for v in 0..nodes {
        if tree.parent[v] != ROOT && tree.flow[v] > 0.0 {
            let (i, j) = tree.edge(v);
            flows.push((i, j, tree.flow[v]));
        }
    }
    if flows.iter().any(|f| f.2 < -slack) {
        return Err(Error::Solver("negative flow in the final basis".into()));
    }
    Ok(Solution { flows, potentials: tree.pi, pivots })
}

fn recompute_potentials<C: Fn(usize, usize) -> f64>(tree: &mut Tree, root: usize, cost: &C) {
    tree.pi[root] = 0.0;
    tree.depth[root] = 0;
    let mut stack = vec![root];
    while let Some(u) = stack.pop() {
        for idx in 0..tree.children[u].len() {
            let w = tree.children[u][idx];
            let (i, j) = tree.edge(w);
            let c = cost(i, j);
            // Tree arcs satisfy c(i, j) = π_i − π_{n₁+j}.
            tree.pi[w] = if tree.is_source(w) { c + tree.pi[u] } else { tree.pi[u] - c };
            tree.depth[w] = tree.depth[u] + 1;
            stack.push(w);
        }
    }
}
