//! Airtime scheduling: maximize sum_h q_h R_h tau_h subject to
//! sum_{h in clique} tau_h <= gamma for every maximal clique.
//!
//! With a single clique the optimum is a vertex: all airtime goes to
//! the hyperarc with the largest q_h R_h (split equally among ties).
//! The general case is a small LP solved by a dense tableau simplex;
//! instances here have at most a few dozen hyperarcs and cliques.

use crate::ids::HyperarcId;

/// Relative tolerance for treating weights as tied in the
/// single-clique shortcut.
const TIE_EPS: f64 = 1e-9;

pub fn solve_schedule(
    weights: &[f64], // q_h * R_h per hyperarc
    cliques: &[Vec<HyperarcId>],
    gamma: f64,
) -> Vec<f64> {
    let n = weights.len();
    let best = weights.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if n == 0 || best <= 0.0 {
        // Degenerate objective: any feasible point is optimal, return
        // the all-zeros allocation.
        return vec![0.0; n];
    }
    if cliques.len() == 1 {
        let ties: Vec<usize> = (0..n)
            .filter(|&h| weights[h] >= best * (1.0 - TIE_EPS))
            .collect();
        let share = gamma / ties.len() as f64;
        let mut tau = vec![0.0; n];
        for h in ties {
            tau[h] = share;
        }
        return tau;
    }
    simplex_max(weights, cliques, gamma)
}

/// Dense primal simplex for max c.x s.t. A x <= b, x >= 0 with A the
/// 0/1 clique-membership matrix and b = gamma. The slack basis is
/// feasible, so no phase one is needed; Bland's rule keeps it
/// deterministic and cycle-free.
fn simplex_max(c: &[f64], cliques: &[Vec<HyperarcId>], gamma: f64) -> Vec<f64> {
    let n = c.len();
    let m = cliques.len();
    // Tableau rows: m constraint rows + objective row.
    // Columns: n vars + m slacks + rhs.
    let cols = n + m + 1;
    let mut t = vec![vec![0.0f64; cols]; m + 1];
    for (i, clique) in cliques.iter().enumerate() {
        for h in clique {
            t[i][h.index()] = 1.0;
        }
        t[i][n + i] = 1.0;
        t[i][cols - 1] = gamma;
    }
    for j in 0..n {
        t[m][j] = -c[j];
    }
    let mut basis: Vec<usize> = (n..n + m).collect();

    loop {
        // Bland: entering variable = lowest index with negative reduced cost.
        let Some(enter) = (0..n + m).find(|&j| t[m][j] < -1e-12) else {
            break;
        };
        // Ratio test, Bland tie-break on basis index.
        let mut leave: Option<usize> = None;
        let mut best_ratio = f64::INFINITY;
        for i in 0..m {
            if t[i][enter] > 1e-12 {
                let ratio = t[i][cols - 1] / t[i][enter];
                if ratio < best_ratio - 1e-12
                    || (ratio < best_ratio + 1e-12
                        && leave.is_some_and(|l| basis[i] < basis[l]))
                {
                    best_ratio = ratio;
                    leave = Some(i);
                }
            }
        }
        let Some(leave) = leave else {
            // Unbounded cannot happen: every variable sits in >= 1 clique.
            break;
        };
        let piv = t[leave][enter];
        for v in t[leave].iter_mut() {
            *v /= piv;
        }
        for i in 0..=m {
            if i != leave {
                let f = t[i][enter];
                if f != 0.0 {
                    for j in 0..cols {
                        t[i][j] -= f * t[leave][j];
                    }
                }
            }
        }
        basis[leave] = enter;
    }

    let mut tau = vec![0.0; n];
    for i in 0..m {
        if basis[i] < n {
            tau[basis[i]] = t[i][cols - 1].max(0.0);
        }
    }
    tau
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(v: &[usize]) -> Vec<HyperarcId> {
        v.iter().map(|&i| HyperarcId::from_index(i)).collect()
    }

    #[test]
    fn single_clique_all_airtime_to_argmax() {
        let tau = solve_schedule(&[3.0, 1.0], &[ids(&[0, 1])], 1.0);
        assert_eq!(tau, vec![1.0, 0.0]);
    }

    #[test]
    fn zero_weights_yield_zero_allocation() {
        let tau = solve_schedule(&[0.0, 0.0, 0.0], &[ids(&[0, 1, 2])], 1.0);
        assert_eq!(tau, vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn ties_split_equally() {
        let tau = solve_schedule(&[2.0, 2.0, 1.0], &[ids(&[0, 1, 2])], 1.0);
        assert_eq!(tau, vec![0.5, 0.5, 0.0]);
    }

    #[test]
    fn disjoint_cliques_solve_independently() {
        let tau = solve_schedule(
            &[3.0, 1.0, 2.0, 5.0],
            &[ids(&[0, 1]), ids(&[2, 3])],
            1.0,
        );
        assert_eq!(tau, vec![1.0, 0.0, 0.0, 1.0]);
    }

    /// Exact LP oracle by basis enumeration: try every subset of
    /// constraints of size n as the active set, solve the square
    /// system, keep the best feasible point. Only usable for tiny
    /// instances.
    fn vertex_enumeration(c: &[f64], cliques: &[Vec<HyperarcId>], gamma: f64) -> f64 {
        let n = c.len();
        // Constraint rows: clique rows (a.x <= gamma) + n nonnegativity
        // rows (-x_i <= 0).
        let mut rows: Vec<(Vec<f64>, f64)> = Vec::new();
        for clique in cliques {
            let mut a = vec![0.0; n];
            for h in clique {
                a[h.index()] = 1.0;
            }
            rows.push((a, gamma));
        }
        for i in 0..n {
            let mut a = vec![0.0; n];
            a[i] = -1.0;
            rows.push((a, 0.0));
        }
        let total = rows.len();
        let mut best = f64::NEG_INFINITY;
        // Enumerate subsets of size n.
        let mut idx: Vec<usize> = (0..n).collect();
        loop {
            // Solve rows[idx] as equalities by Gaussian elimination.
            let mut a: Vec<Vec<f64>> = idx.iter().map(|&i| rows[i].0.clone()).collect();
            let mut b: Vec<f64> = idx.iter().map(|&i| rows[i].1).collect();
            if let Some(x) = gauss_solve(&mut a, &mut b) {
                let feasible = rows
                    .iter()
                    .all(|(row, rhs)| row.iter().zip(&x).map(|(r, v)| r * v).sum::<f64>() <= rhs + 1e-9);
                if feasible {
                    let val = c.iter().zip(&x).map(|(ci, xi)| ci * xi).sum::<f64>();
                    best = best.max(val);
                }
            }
            // Next combination.
            let mut i = n;
            loop {
                if i == 0 {
                    return best;
                }
                i -= 1;
                if idx[i] + (n - i) <= total - 1 {
                    idx[i] += 1;
                    for j in i + 1..n {
                        idx[j] = idx[j - 1] + 1;
                    }
                    break;
                }
            }
        }
    }

    fn gauss_solve(a: &mut [Vec<f64>], b: &mut [f64]) -> Option<Vec<f64>> {
        let n = b.len();
        for col in 0..n {
            let piv = (col..n).max_by(|&i, &j| {
                a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap()
            })?;
            if a[piv][col].abs() < 1e-12 {
                return None;
            }
            a.swap(col, piv);
            b.swap(col, piv);
            for row in 0..n {
                if row != col {
                    let f = a[row][col] / a[col][col];
                    for k in col..n {
                        a[row][k] -= f * a[col][k];
                    }
                    b[row] -= f * b[col];
                }
            }
        }
        Some((0..n).map(|i| b[i] / a[i][i]).collect())
    }

    #[test]
    fn lp_matches_vertex_enumeration_on_random_overlapping_cliques() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(77);
        for _ in 0..200 {
            let n = rng.gen_range(2..=5usize);
            let m = rng.gen_range(2..=4usize);
            let mut cliques = Vec::new();
            for _ in 0..m {
                let mut c: Vec<HyperarcId> = (0..n)
                    .filter(|_| rng.gen_bool(0.6))
                    .map(HyperarcId::from_index)
                    .collect();
                if c.is_empty() {
                    c.push(HyperarcId::from_index(rng.gen_range(0..n)));
                }
                cliques.push(c);
            }
            // Every hyperarc must appear in at least one clique.
            for h in 0..n {
                if !cliques.iter().any(|c| c.contains(&HyperarcId::from_index(h))) {
                    cliques[0].push(HyperarcId::from_index(h));
                }
            }
            let weights: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..4.0)).collect();
            let tau = solve_schedule(&weights, &cliques, 1.0);
            // Feasibility.
            for c in &cliques {
                let s: f64 = c.iter().map(|h| tau[h.index()]).sum();
                assert!(s <= 1.0 + 1e-9);
            }
            let got: f64 = weights.iter().zip(&tau).map(|(w, t)| w * t).sum();
            let want = vertex_enumeration(&weights, &cliques, 1.0);
            assert!(
                (got - want).abs() < 1e-7,
                "simplex {got} vs enumeration {want}"
            );
        }
    }
}
