//! Grid-search optimum for small instances, used to validate the
//! decomposed solver through an independent route: enumerate the
//! traffic-splitting simplices at fixed resolution, and for each split
//! profile search the rate box with nested refinement, keeping the best
//! clique-feasible point by total log utility.

use super::{Opt, Problem, SolverConfig};
use crate::catalog::Compiled;
use thiserror::Error;

#[derive(Debug, Clone)]
pub struct OracleResult {
    pub x: Vec<f64>,
    pub sum_x: f64,
    pub objective: f64,
}

#[derive(Debug, Error, PartialEq)]
pub enum OracleError {
    #[error("brute force supports at most 3 flows, scenario has {0}")]
    TooManyFlows(usize),
    #[error("split enumeration too large ({0} profiles)")]
    TooManyProfiles(usize),
    #[error("no feasible point on the grid")]
    NoFeasiblePoint,
}

/// All compositions of `steps` grid increments over `dims` coordinates.
fn simplex_grid(dims: usize, steps: usize) -> Vec<Vec<f64>> {
    fn rec(dims: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if dims == 1 {
            cur.push(left);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for take in 0..=left {
            cur.push(take);
            rec(dims - 1, left - take, cur, out);
            cur.pop();
        }
    }
    let mut raw = Vec::new();
    rec(dims, steps, &mut Vec::new(), &mut raw);
    raw.into_iter()
        .map(|counts| counts.iter().map(|&c| c as f64 / steps as f64).collect())
        .collect()
}

struct ProfileEval<'a> {
    p: &'a Problem<'a>,
    /// alpha per (code, slot) induced by the current split profile.
    coef: Vec<Vec<f64>>,
}

impl<'a> ProfileEval<'a> {
    fn feasible(&self, x: &[f64]) -> bool {
        let mut airtime = vec![0.0f64; self.p.n_hyperarcs];
        for k in 0..self.p.n_codes {
            let peak = self.p.code_members[k]
                .iter()
                .enumerate()
                .map(|(slot, &f)| self.coef[k][slot] * x[f.index()])
                .fold(0.0, f64::max);
            airtime[self.p.code_hyperarc[k]] += peak / self.p.rates[self.p.code_hyperarc[k]];
        }
        self.p
            .compiled
            .hypergraph
            .conflict
            .cliques
            .iter()
            .all(|c| c.iter().map(|h| airtime[h.index()]).sum::<f64>() <= self.p.gamma + 1e-12)
    }
}

/// Exhaustive search over split profiles and rates. Returns the best
/// feasible point by total log utility. `split_step` controls the
/// simplex grid resolution for the splitting variables.
pub fn brute_force_optimum(
    compiled: &Compiled,
    split_step: f64,
) -> Result<OracleResult, OracleError> {
    let config = SolverConfig::default();
    let p = Problem::new(compiled, &config);
    if p.n_flows > 3 {
        return Err(OracleError::TooManyFlows(p.n_flows));
    }
    let steps = (1.0 / split_step).round().max(1.0) as usize;

    // Uniform representation of the splitting variables: each group is
    // a list of weight targets, and a grid point assigns one weight per
    // target. One-hop: a target is a single (code, slot) option.
    // Multi-hop: a target is a whole partition, i.e. every hop of the
    // partition shares its weight.
    let mut weight_targets: Vec<Vec<Vec<Opt>>> = Vec::new();
    if let Some(pg) = &p.partition_groups {
        for paths in pg {
            for parts in paths {
                weight_targets.push(parts.clone());
            }
        }
    } else {
        for per_pos in &p.split_groups {
            for group in per_pos {
                weight_targets.push(group.iter().map(|&o| vec![o]).collect());
            }
        }
    }

    let grids: Vec<Vec<Vec<f64>>> = weight_targets
        .iter()
        .map(|g| {
            if g.len() == 1 {
                vec![vec![1.0]]
            } else {
                simplex_grid(g.len(), steps)
            }
        })
        .collect();
    let total: usize = grids.iter().map(Vec::len).product();
    if total > 2_000_000 {
        return Err(OracleError::TooManyProfiles(total));
    }

    // Per-flow rate upper bound: gamma times the best hyperarc rate
    // available at its most constrained hop.
    let x_hi: Vec<f64> = (0..p.n_flows)
        .map(|fi| {
            let per_pos = &p.split_groups[fi];
            let bound = per_pos
                .iter()
                .map(|group| {
                    group
                        .iter()
                        .map(|&(k, _)| p.rates[p.code_hyperarc[k]])
                        .fold(0.0, f64::max)
                })
                .fold(f64::INFINITY, f64::min);
            (bound * p.gamma).min(p.x_max)
        })
        .collect();

    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut profile = vec![0usize; grids.len()];
    loop {
        // Materialize the coefficient table for this profile.
        let mut coef: Vec<Vec<f64>> = p.code_members.iter().map(|m| vec![0.0; m.len()]).collect();
        for (gi, targets) in weight_targets.iter().enumerate() {
            let weights = &grids[gi][profile[gi]];
            for (ti, opts) in targets.iter().enumerate() {
                for &(k, s) in opts {
                    coef[k][s] = weights[ti];
                }
            }
        }
        let eval = ProfileEval { p: &p, coef };

        // Nested refinement over the rate box.
        let pts = 13usize;
        let mut lo: Vec<f64> = x_hi.iter().map(|&h| h / 2000.0).collect();
        let mut hi = x_hi.clone();
        let mut local_best: Option<(f64, Vec<f64>)> = None;
        for _round in 0..4 {
            let mut idx = vec![0usize; p.n_flows];
            let coord = |i: usize, j: usize| -> f64 {
                lo[i] + (hi[i] - lo[i]) * j as f64 / (pts - 1) as f64
            };
            'grid: loop {
                let x: Vec<f64> = idx.iter().enumerate().map(|(i, &j)| coord(i, j)).collect();
                if x.iter().all(|&v| v > 0.0) && eval.feasible(&x) {
                    let obj: f64 = x.iter().map(|&v| v.ln()).sum();
                    if local_best.as_ref().is_none_or(|(b, _)| obj > *b) {
                        local_best = Some((obj, x));
                    }
                }
                for i in 0..p.n_flows {
                    idx[i] += 1;
                    if idx[i] < pts {
                        continue 'grid;
                    }
                    idx[i] = 0;
                }
                break;
            }
            if let Some((_, bx)) = &local_best {
                for i in 0..p.n_flows {
                    let span = (hi[i] - lo[i]) / (pts - 1) as f64;
                    lo[i] = (bx[i] - 1.5 * span).max(x_hi[i] / 4000.0);
                    hi[i] = (bx[i] + 1.5 * span).min(x_hi[i]);
                }
            } else {
                break;
            }
        }
        if let Some((obj, x)) = local_best {
            if best.as_ref().is_none_or(|(b, _)| obj > *b) {
                best = Some((obj, x));
            }
        }

        // Advance the profile counter.
        let mut gi = 0;
        loop {
            if gi == grids.len() {
                let (objective, x) = best.ok_or(OracleError::NoFeasiblePoint)?;
                return Ok(OracleResult {
                    sum_x: x.iter().sum(),
                    x,
                    objective,
                });
            }
            profile[gi] += 1;
            if profile[gi] < grids[gi].len() {
                break;
            }
            profile[gi] = 0;
            gi += 1;
        }
    }
}
