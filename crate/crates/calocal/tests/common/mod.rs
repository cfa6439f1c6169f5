//! Oracles and helpers shared by the integration test binaries.

pub fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

pub fn lcm(a: usize, b: usize) -> usize {
    a / gcd(a, b) * b
}

/// Exact minimum-cost transport between uniform empirical distributions,
/// solved as unit-mass min-cost flow by successive shortest paths with
/// Bellman-Ford on the residual bipartite graph. Independent of the
/// sorted-CDF construction used by the implementation.
pub fn w1_min_cost_flow(a: &[f64], b: &[f64]) -> f64 {
    let (n, m) = (a.len(), b.len());
    let l = lcm(n, m);
    let mut supply = vec![(l / n) as i64; n];
    let mut demand = vec![(l / m) as i64; m];
    let mut flow = vec![vec![0i64; m]; n];
    let mut total = 0.0;
    const ROOT: usize = usize::MAX;
    for _ in 0..l {
        let inf = f64::INFINITY;
        let mut dist_a = vec![inf; n];
        let mut dist_b = vec![inf; m];
        // Predecessor arcs: pred_b[j] = source feeding sink j,
        // pred_a[i] = sink refunding source i (ROOT marks a supply root).
        let mut pred_b = vec![ROOT; m];
        let mut pred_a = vec![ROOT; n];
        for (i, d) in dist_a.iter_mut().enumerate() {
            if supply[i] > 0 {
                *d = 0.0;
            }
        }
        for _ in 0..=(n + m) {
            let mut changed = false;
            for i in 0..n {
                if dist_a[i] < inf {
                    for j in 0..m {
                        let nd = dist_a[i] + (a[i] - b[j]).abs();
                        if nd + 1e-15 < dist_b[j] {
                            dist_b[j] = nd;
                            pred_b[j] = i;
                            changed = true;
                        }
                    }
                }
            }
            for j in 0..m {
                if dist_b[j] < inf {
                    for i in 0..n {
                        if flow[i][j] > 0 {
                            let nd = dist_b[j] - (a[i] - b[j]).abs();
                            if nd + 1e-15 < dist_a[i] {
                                dist_a[i] = nd;
                                pred_a[i] = j;
                                changed = true;
                            }
                        }
                    }
                }
            }
            if !changed {
                break;
            }
        }
        let mut best = ROOT;
        let mut best_dist = inf;
        for j in 0..m {
            if demand[j] > 0 && dist_b[j] < best_dist {
                best_dist = dist_b[j];
                best = j;
            }
        }
        assert!(best != ROOT, "no augmenting path found");
        demand[best] -= 1;
        // Push one unit back along the predecessor chain to a supply root.
        let mut j = best;
        loop {
            let i = pred_b[j];
            flow[i][j] += 1;
            if pred_a[i] == ROOT {
                supply[i] -= 1;
                break;
            }
            let refund = pred_a[i];
            flow[i][refund] -= 1;
            j = refund;
        }
        total += best_dist;
    }
    total / l as f64
}

/// Minimum transport cost by enumerating every assignment of the
/// common-denominator expansion. Only call when `lcm(n, m) <= 8`.
pub fn w1_bruteforce_permutations(a: &[f64], b: &[f64]) -> f64 {
    let l = lcm(a.len(), b.len());
    assert!(l <= 8, "expansion {l} too large to enumerate");
    let ea: Vec<f64> = a
        .iter()
        .flat_map(|&v| std::iter::repeat_n(v, l / a.len()))
        .collect();
    let eb: Vec<f64> = b
        .iter()
        .flat_map(|&v| std::iter::repeat_n(v, l / b.len()))
        .collect();

    fn recurse(fixed: &[f64], pool: &mut Vec<f64>, cost_so_far: f64, depth: usize, best: &mut f64) {
        if pool.is_empty() {
            *best = best.min(cost_so_far);
            return;
        }
        for i in 0..pool.len() {
            let v = pool.swap_remove(i);
            recurse(
                fixed,
                pool,
                cost_so_far + (fixed[depth] - v).abs(),
                depth + 1,
                best,
            );
            pool.push(v);
            let last = pool.len() - 1;
            pool.swap(i, last);
        }
    }
    let mut best = f64::INFINITY;
    let mut pool = eb.clone();
    recurse(&ea, &mut pool, 0.0, 0, &mut best);
    best / l as f64
}
