//! Exact solver for small transportation problems.
//!
//! `min Σ c_ij v_ij` subject to row sums `r`, column sums `k` and `v ≥ 0`,
//! solved as a min-cost flow by successive shortest paths (Bellman–Ford on the
//! residual graph). Problem sizes here are a handful of states per side.

#[derive(Clone, Copy)]
struct Arc {
    to: usize,
    cap: f64,
    cost: f64,
}

/// Returns an optimal plan, row-major `nr × nc`. `rows` and `cols` must have
/// equal totals.
pub fn solve(cost: &[f64], rows: &[f64], cols: &[f64]) -> Vec<f64> {
    let (nr, nc) = (rows.len(), cols.len());
    debug_assert_eq!(cost.len(), nr * nc);
    let total: f64 = rows.iter().sum();
    let eps = 1e-15 * total.max(f64::MIN_POSITIVE);
    let n = nr + nc + 2;
    let (src, sink) = (nr + nc, nr + nc + 1);
    let mut arcs: Vec<Arc> = Vec::new();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut add = |arcs: &mut Vec<Arc>, a: usize, b: usize, cap: f64, cost: f64| {
        adj[a].push(arcs.len());
        arcs.push(Arc { to: b, cap, cost });
        adj[b].push(arcs.len());
        arcs.push(Arc { to: a, cap: 0.0, cost: -cost });
    };
    for (i, &r) in rows.iter().enumerate() {
        add(&mut arcs, src, i, r, 0.0);
    }
    let mut cell_arc = vec![0; nr * nc];
    for i in 0..nr {
        for j in 0..nc {
            cell_arc[i * nc + j] = arcs.len();
            add(&mut arcs, i, nr + j, f64::INFINITY, cost[i * nc + j]);
        }
    }
    for (j, &k) in cols.iter().enumerate() {
        add(&mut arcs, nr + j, sink, k, 0.0);
    }

    let mut shipped = 0.0;
    // Each augmentation saturates at least one arc; the bound is generous.
    for _ in 0..(4 * n * n) {
        if total - shipped <= eps {
            break;
        }
        let mut dist = vec![f64::INFINITY; n];
        let mut pred: Vec<Option<usize>> = vec![None; n];
        dist[src] = 0.0;
        for _ in 0..n {
            let mut changed = false;
            for u in 0..n {
                if dist[u] == f64::INFINITY {
                    continue;
                }
                for &e in &adj[u] {
                    let a = arcs[e];
                    if a.cap > eps && dist[u] + a.cost < dist[a.to] - 1e-14 * (1.0 + a.cost.abs()) {
                        dist[a.to] = dist[u] + a.cost;
                        pred[a.to] = Some(e);
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        if dist[sink] == f64::INFINITY {
            break;
        }
        let mut path = Vec::new();
        let mut v = sink;
        while v != src && path.len() <= n {
            let e = pred[v].expect("predecessor on shortest path");
            path.push(e);
            v = arcs[e ^ 1].to;
        }
        if v != src {
            break;
        }
        let push = path.iter().map(|&e| arcs[e].cap).fold(f64::INFINITY, f64::min);
        for &e in &path {
            arcs[e].cap -= push;
            arcs[e ^ 1].cap += push;
        }
        shipped += push;
    }
    cell_arc.iter().map(|&e| arcs[e ^ 1].cap).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn objective(c: &[f64], v: &[f64]) -> f64 {
        c.iter().zip(v).map(|(a, b)| a * b).sum()
    }

    #[test]
    fn two_by_two_picks_cheaper_vertex() {
        let v = solve(&[0.0, 1.0, 1.0, 0.0], &[0.5, 0.5], &[0.5, 0.5]);
        assert_eq!(v, vec![0.5, 0.0, 0.0, 0.5]);
        let v = solve(&[1.0, 0.0, 0.0, 1.0], &[0.3, 0.7], &[0.6, 0.4]);
        let expect = [0.0, 0.3, 0.6, 0.1];
        assert!(v.iter().zip(expect).all(|(a, b)| (a - b).abs() < 1e-15), "{v:?}");
    }

    #[test]
    fn feasible_and_no_worse_than_random_plans() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let (nr, nc) = (rng.random_range(2..5), rng.random_range(2..5));
            let plan: Vec<f64> = (0..nr * nc).map(|_| rng.random_range(0.0..1.0)).collect();
            let rows: Vec<f64> = (0..nr).map(|i| plan[i * nc..(i + 1) * nc].iter().sum()).collect();
            let cols: Vec<f64> = (0..nc).map(|j| (0..nr).map(|i| plan[i * nc + j]).sum()).collect();
            let cost: Vec<f64> = (0..nr * nc).map(|_| rng.random_range(-3.0..3.0)).collect();
            let v = solve(&cost, &rows, &cols);
            for i in 0..nr {
                let r: f64 = v[i * nc..(i + 1) * nc].iter().sum();
                assert!((r - rows[i]).abs() < 1e-12);
            }
            for j in 0..nc {
                let k: f64 = (0..nr).map(|i| v[i * nc + j]).sum();
                assert!((k - cols[j]).abs() < 1e-12);
            }
            assert!(v.iter().all(|&e| e >= 0.0));
            // The solution beats the generating plan and small perturbations of
            // any optimal plan along 2×2 cycles.
            let best = objective(&cost, &v);
            assert!(best <= objective(&cost, &plan) + 1e-12);
            for i in 0..nr {
                for i2 in 0..nr {
                    for j in 0..nc {
                        for j2 in 0..nc {
                            if i == i2 || j == j2 {
                                continue;
                            }
                            let room = v[i * nc + j2].min(v[i2 * nc + j]);
                            let delta = cost[i * nc + j] + cost[i2 * nc + j2] - cost[i * nc + j2] - cost[i2 * nc + j];
                            assert!(room <= 1e-12 || delta >= -1e-12, "improving cycle left");
                        }
                    }
                }
            }
        }
    }
}
