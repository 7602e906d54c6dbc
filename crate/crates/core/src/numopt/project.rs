//! Exact Euclidean projection onto the probability simplex.
//!
//! Both the dominance and the traffic-splitting subproblems are
//! strictly concave quadratics over a simplex once the proximal term is
//! added; their maximizers reduce to a projection of a shifted point,
//! so this is the only optimization kernel they need.

/// Project `v` onto { w : w_i >= 0, sum w_i = 1 } in Euclidean norm.
/// Sort-based, exact up to floating point.
pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    let n = v.len();
    assert!(n > 0);
    if n == 1 {
        return vec![1.0];
    }
    let mut u: Vec<f64> = v.to_vec();
    u.sort_unstable_by(|a, b| b.partial_cmp(a).expect("projection input must be finite"));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    let mut rho = 0;
    for (j, &uj) in u.iter().enumerate() {
        cumsum += uj;
        let t = (cumsum - 1.0) / (j + 1) as f64;
        if uj - t > 0.0 {
            rho = j + 1;
            theta = t;
        }
    }
    debug_assert!(rho > 0);
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

/// Maximizer of sum_i (g_i w_i - c (w_i - mu_i)^2) over the simplex.
/// With c = 0 the problem is linear: mass splits equally over the
/// argmax coordinates.
pub fn max_linear_quadratic_simplex(g: &[f64], mu: &[f64], c: f64) -> Vec<f64> {
    debug_assert_eq!(g.len(), mu.len());
    if g.len() == 1 {
        return vec![1.0];
    }
    if c > 0.0 {
        let v: Vec<f64> = g
            .iter()
            .zip(mu)
            .map(|(&gi, &mi)| mi + gi / (2.0 * c))
            .collect();
        project_simplex(&v)
    } else {
        let best = g.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let ties: Vec<usize> = (0..g.len()).filter(|&i| g[i] >= best - 1e-12).collect();
        let share = 1.0 / ties.len() as f64;
        let mut w = vec![0.0; g.len()];
        for i in ties {
            w[i] = share;
        }
        w
    }
}

/// Minimizer of sum_i (p_i w_i + c (w_i - mu_i)^2) over the simplex.
pub fn min_linear_quadratic_simplex(p: &[f64], mu: &[f64], c: f64) -> Vec<f64> {
    let neg: Vec<f64> = p.iter().map(|&x| -x).collect();
    max_linear_quadratic_simplex(&neg, mu, c)
}
