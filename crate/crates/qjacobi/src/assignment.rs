//! Square assignment problems on small dense cost matrices.
//!
//! `solve` returns the optimal permutation with the lowest lexicographic
//! order among all optimal ones. Costs are row-major, `cost[i * n + j]`.

const REL_TIE: f64 = 1e-12;

/// Total cost of a permutation, summed in row order.
pub fn permutation_cost(cost: &[f64], n: usize, perm: &[usize]) -> f64 {
    perm.iter().enumerate().map(|(i, &j)| cost[i * n + j]).sum()
}

fn tie_tol(best: f64) -> f64 {
    REL_TIE * best.abs() + 1e-300
}

/// Optimal assignment, lexicographically smallest among ties.
pub fn solve(cost: &[f64], n: usize) -> (Vec<usize>, f64) {
    assert_eq!(cost.len(), n * n);
    match n {
        0 => (Vec::new(), 0.0),
        1 => (vec![0], cost[0]),
        2 => {
            let id = cost[0] + cost[3];
            let sw = cost[1] + cost[2];
            if sw < id - tie_tol(sw) {
                (vec![1, 0], sw)
            } else {
                (vec![0, 1], id)
            }
        }
        3 | 4 => brute_force(cost, n),
        _ => {
            let perm = hungarian(cost, n);
            let best = permutation_cost(cost, n, &perm);
            let perm = lex_refine(cost, n, best);
            let c = permutation_cost(cost, n, &perm);
            (perm, c)
        }
    }
}

/// Exhaustive search in lexicographic order; keeps the first permutation whose
/// cost is not beaten by more than the tie tolerance.
pub fn brute_force(cost: &[f64], n: usize) -> (Vec<usize>, f64) {
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best_perm = perm.clone();
    let mut best = permutation_cost(cost, n, &perm);
    while next_permutation(&mut perm) {
        let c = permutation_cost(cost, n, &perm);
        if c < best - tie_tol(c) {
            best = c;
            best_perm.copy_from_slice(&perm);
        }
    }
    (best_perm, best)
}

/// Exact minimum over all permutations without tie handling (test oracle).
pub fn brute_force_min(cost: &[f64], n: usize) -> f64 {
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best = permutation_cost(cost, n, &perm);
    while next_permutation(&mut perm) {
        best = best.min(permutation_cost(cost, n, &perm));
    }
    best
}

/// Advances `p` to the next permutation in lexicographic order.
pub fn next_permutation(p: &mut [usize]) -> bool {
    let n = p.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

/// Shortest augmenting path Hungarian method with potentials, O(n^3).
pub fn hungarian(cost: &[f64], n: usize) -> Vec<usize> {
    let inf = f64::INFINITY;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0usize;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut ans = vec![0usize; n];
    for j in 1..=n {
        if p[j] > 0 {
            ans[p[j] - 1] = j - 1;
        }
    }
    ans
}

// Fix rows one at a time to the smallest column that still admits an optimal
// completion.
fn lex_refine(cost: &[f64], n: usize, best: f64) -> Vec<usize> {
    let mut perm = Vec::with_capacity(n);
    let mut used = vec![false; n];
    let mut prefix = 0.0;
    for i in 0..n {
        let rest_rows: Vec<usize> = (i + 1..n).collect();
        let mut chosen = None;
        for j in 0..n {
            if used[j] {
                continue;
            }
            let rest_cols: Vec<usize> = (0..n).filter(|&c| !used[c] && c != j).collect();
            let k = rest_rows.len();
            let mut sub = Vec::with_capacity(k * k);
            for &r in &rest_rows {
                for &c in &rest_cols {
                    sub.push(cost[r * n + c]);
                }
            }
            let tail = if k == 0 {
                0.0
            } else {
                let sp = hungarian(&sub, k);
                permutation_cost(&sub, k, &sp)
            };
            let total = prefix + cost[i * n + j] + tail;
            if total <= best + tie_tol(best) {
                chosen = Some(j);
                break;
            }
        }
        let j = chosen.unwrap_or_else(|| (0..n).find(|&c| !used[c]).unwrap());
        used[j] = true;
        prefix += cost[i * n + j];
        perm.push(j);
    }
    perm
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn hungarian_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in 1..=7 {
            for _ in 0..200 {
                let cost: Vec<f64> = (0..n * n).map(|_| rng.gen_range(0.0..10.0)).collect();
                let p = hungarian(&cost, n);
                let c = permutation_cost(&cost, n, &p);
                assert!((c - brute_force_min(&cost, n)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn ties_pick_lexicographic_minimum() {
        for n in 1..=7 {
            let cost = vec![1.0; n * n];
            let (p, _) = solve(&cost, n);
            assert_eq!(p, (0..n).collect::<Vec<_>>());
        }
        // rows 0 and 1 are interchangeable, the rest is forced
        let n = 5;
        let mut cost = vec![5.0; n * n];
        for i in 0..2 {
            cost[i * n + 3] = 0.0;
            cost[i * n + 4] = 0.0;
        }
        cost[2 * n] = 0.0;
        cost[3 * n + 1] = 0.0;
        cost[4 * n + 2] = 0.0;
        assert_eq!(solve(&cost, n).0, vec![3, 4, 0, 1, 2]);
    }

    #[test]
    fn solve_agrees_with_brute_force_order() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 5..=7 {
            for _ in 0..50 {
                // integer costs make ties common
                let cost: Vec<f64> = (0..n * n).map(|_| rng.gen_range(0..3) as f64).collect();
                assert_eq!(solve(&cost, n).0, brute_force(&cost, n).0);
            }
        }
    }
}
