//! Dual-decomposition solver for the congestion-control utility
//! maximization over a coded wireless mesh.
//!
//! Per iteration, with hyperarc duals q fixed: the dominance weights m
//! (which flow's rate a code pays for), the traffic splits (alpha per
//! hyperarc/code, or beta per coding-path partition in the multi-hop
//! formulation), the source rates x, and the clique airtime schedule
//! tau are each solved in closed form; q then takes a projected
//! subgradient step on the capacity constraints. Dominance and
//! splitting carry proximal terms anchored to periodically refreshed
//! targets, which damps the oscillation the bare linear subproblems
//! would produce.
//!
//! Subgradient iterates themselves keep rattling between schedule
//! vertices, so the reported solution is the average of the primal
//! variables over a tail window, which is also what the convergence
//! test inspects.

pub mod oracle;
pub mod project;
pub mod schedule;

use crate::catalog::Compiled;
use crate::ids::FlowId;
use project::{max_linear_quadratic_simplex, min_linear_quadratic_simplex};
use std::collections::VecDeque;

/// Step-size schedule c_t for the dual update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepRule {
    Constant(f64),
    /// c0 / sqrt(t)
    InvSqrt(f64),
    /// c0 / t
    InvT(f64),
}

impl StepRule {
    pub fn at(self, t: usize) -> f64 {
        match self {
            StepRule::Constant(c0) => c0,
            StepRule::InvSqrt(c0) => c0 / (t as f64).sqrt(),
            StepRule::InvT(c0) => c0 / t as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub step: StepRule,
    /// Proximal constant c in the dominance / splitting subproblems.
    pub proximal_c: f64,
    /// Iterations between proximal-anchor refreshes.
    pub anchor_period: usize,
    pub max_iters: usize,
    /// Threshold on |dx| and on the tail-averaged capacity residual.
    pub tol: f64,
    /// Length of the window over which the stop rule must hold.
    pub stall_window: usize,
    /// Tail window for primal averaging (reported solution).
    pub avg_window: usize,
    pub init_dual: f64,
    pub x_min: f64,
    /// x_max = factor times the largest hyperarc rate.
    pub x_max_rate_factor: f64,
    /// Overrides the scenario's per-clique airtime budget when set.
    pub overprovision: Option<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            step: StepRule::InvSqrt(0.05),
            proximal_c: 1.0,
            anchor_period: 5,
            max_iters: 120_000,
            tol: 1e-3,
            stall_window: 10,
            avg_window: 2_000,
            init_dual: 1.0,
            x_min: 1e-4,
            x_max_rate_factor: 10.0,
            overprovision: None,
        }
    }
}

/// One (code, member-slot) choice a flow can route through.
pub type Opt = (usize, usize);

/// Indexed view of a compiled scenario used by the solver: per-flow
/// splitting groups and per-code membership, all referring to the
/// catalog by dense indices.
pub struct Problem<'a> {
    pub compiled: &'a Compiled,
    pub gamma: f64,
    pub n_flows: usize,
    pub n_hyperarcs: usize,
    pub n_codes: usize,
    /// R_h per hyperarc.
    pub rates: Vec<f64>,
    /// Hyperarc index per code.
    pub code_hyperarc: Vec<usize>,
    /// Member flows per code.
    pub code_members: Vec<Vec<FlowId>>,
    /// One-hop view: flow -> path position -> options.
    pub split_groups: Vec<Vec<Vec<Opt>>>,
    /// Multi-hop view: flow -> coding path -> partition -> hops, present
    /// only when the catalog carries coding paths.
    pub partition_groups: Option<Vec<Vec<Vec<Vec<Opt>>>>>,
    pub x_max: f64,
}

impl<'a> Problem<'a> {
    pub fn new(compiled: &'a Compiled, config: &SolverConfig) -> Self {
        let cat = &compiled.catalog;
        let hg = &compiled.hypergraph;
        let n_codes = cat.codes.len();
        let code_hyperarc: Vec<usize> = cat.codes.iter().map(|c| c.hyperarc.index()).collect();
        let code_members: Vec<Vec<FlowId>> = cat.codes.iter().map(|c| c.flows.clone()).collect();
        let slot = |k: usize, f: FlowId| -> usize {
            cat.codes[k].member_slot(f).expect("flow belongs to code")
        };
        let split_groups: Vec<Vec<Vec<Opt>>> = cat
            .options
            .iter()
            .enumerate()
            .map(|(fi, per_pos)| {
                per_pos
                    .iter()
                    .map(|opts| {
                        opts.iter()
                            .map(|(_, k)| (k.index(), slot(k.index(), FlowId::from_index(fi))))
                            .collect()
                    })
                    .collect()
            })
            .collect();
        let partition_groups = cat.nc_paths.as_ref().map(|ncp| {
            ncp.iter()
                .enumerate()
                .map(|(fi, paths)| {
                    paths
                        .iter()
                        .map(|p| {
                            p.partitions
                                .iter()
                                .map(|z| {
                                    z.hops
                                        .iter()
                                        .map(|(_, k)| {
                                            (k.index(), slot(k.index(), FlowId::from_index(fi)))
                                        })
                                        .collect()
                                })
                                .collect()
                        })
                        .collect()
                })
                .collect()
        });
        let rates: Vec<f64> = hg.hyperarcs.iter().map(|h| h.rate).collect();
        let max_rate = rates.iter().cloned().fold(0.0, f64::max);
        Problem {
            gamma: config
                .overprovision
                .unwrap_or(compiled.scenario.overprovision),
            n_flows: compiled.flows.len(),
            n_hyperarcs: hg.hyperarcs.len(),
            n_codes,
            rates,
            code_hyperarc,
            code_members,
            split_groups,
            partition_groups,
            x_max: config.x_max_rate_factor * max_rate,
            compiled,
        }
    }
}

/// One snapshot of the decomposed iteration.
#[derive(Debug, Clone)]
pub struct SolverState {
    pub x: Vec<f64>,
    /// Dominance weights per code, per member slot; each row sums to 1.
    pub m: Vec<Vec<f64>>,
    pub mu_m: Vec<Vec<f64>>,
    /// Traffic split per code, per member slot (induced from beta in
    /// the multi-hop formulation).
    pub alpha: Vec<Vec<f64>>,
    /// One-hop split state: flow -> position -> option weights.
    pub alpha_groups: Vec<Vec<Vec<f64>>>,
    pub mu_alpha: Vec<Vec<Vec<f64>>>,
    /// Multi-hop split state: flow -> coding path -> partition weights.
    pub beta: Vec<Vec<Vec<f64>>>,
    pub mu_beta: Vec<Vec<Vec<f64>>>,
    pub tau: Vec<f64>,
    pub q: Vec<f64>,
    pub iter: usize,
}

impl SolverState {
    pub fn init(p: &Problem, config: &SolverConfig) -> Self {
        let uniform = |n: usize| vec![1.0 / n as f64; n];
        let m: Vec<Vec<f64>> = p.code_members.iter().map(|ms| uniform(ms.len())).collect();
        let alpha_groups: Vec<Vec<Vec<f64>>> = p
            .split_groups
            .iter()
            .map(|per_pos| per_pos.iter().map(|g| uniform(g.len())).collect())
            .collect();
        let beta: Vec<Vec<Vec<f64>>> = match &p.partition_groups {
            Some(pg) => pg
                .iter()
                .map(|paths| paths.iter().map(|z| uniform(z.len())).collect())
                .collect(),
            None => vec![Vec::new(); p.n_flows],
        };
        let mut st = SolverState {
            x: vec![config.x_min; p.n_flows],
            mu_m: m.clone(),
            m,
            alpha: vec![Vec::new(); p.n_codes],
            mu_alpha: alpha_groups.clone(),
            alpha_groups,
            mu_beta: beta.clone(),
            beta,
            tau: vec![0.0; p.n_hyperarcs],
            q: vec![config.init_dual; p.n_hyperarcs],
            iter: 0,
        };
        st.refresh_alpha_view(p);
        st.x = solve_rate(p, &st.q, &st.alpha, &st.m, config);
        st
    }

    /// Rebuild the per-code alpha view from whichever split state is
    /// authoritative for this problem.
    pub fn refresh_alpha_view(&mut self, p: &Problem) {
        for (k, ms) in p.code_members.iter().enumerate() {
            self.alpha[k] = vec![0.0; ms.len()];
        }
        if let Some(pg) = &p.partition_groups {
            for (fi, paths) in pg.iter().enumerate() {
                for (pi, parts) in paths.iter().enumerate() {
                    for (zi, hops) in parts.iter().enumerate() {
                        let w = self.beta[fi][pi][zi];
                        for &(k, s) in hops {
                            self.alpha[k][s] = w;
                        }
                    }
                }
            }
        } else {
            for (fi, per_pos) in p.split_groups.iter().enumerate() {
                for (gi, group) in per_pos.iter().enumerate() {
                    for (oi, &(k, s)) in group.iter().enumerate() {
                        self.alpha[k][s] = self.alpha_groups[fi][gi][oi];
                    }
                }
            }
        }
    }
}

/// Rate control: for log utility, x_s is the inverse of the summed
/// dual prices along the flow's path, weighted by split and dominance.
pub fn solve_rate(
    p: &Problem,
    q: &[f64],
    alpha: &[Vec<f64>],
    m: &[Vec<f64>],
    config: &SolverConfig,
) -> Vec<f64> {
    let mut price = vec![0.0f64; p.n_flows];
    for k in 0..p.n_codes {
        let qh = q[p.code_hyperarc[k]];
        if qh == 0.0 {
            continue;
        }
        for (slot, &f) in p.code_members[k].iter().enumerate() {
            price[f.index()] += qh * alpha[k][slot] * m[k][slot];
        }
    }
    price
        .iter()
        .map(|&pr| {
            if pr <= 0.0 {
                p.x_max
            } else {
                (1.0 / pr).clamp(config.x_min, p.x_max)
            }
        })
        .collect()
}

/// Dominance: per code, the exact maximizer of
/// sum_s (alpha_s x_s m_s - c (m_s - mu_s)^2) over the simplex.
pub fn solve_dominance(
    p: &Problem,
    alpha: &[Vec<f64>],
    x: &[f64],
    mu_m: &[Vec<f64>],
    c: f64,
) -> Vec<Vec<f64>> {
    (0..p.n_codes)
        .map(|k| {
            let g: Vec<f64> = p.code_members[k]
                .iter()
                .enumerate()
                .map(|(slot, &f)| alpha[k][slot] * x[f.index()])
                .collect();
            max_linear_quadratic_simplex(&g, &mu_m[k], c)
        })
        .collect()
}

/// One-hop traffic splitting: per flow and path node, minimize the
/// dual-priced split plus the proximal term over the simplex.
pub fn solve_split_onehop(
    p: &Problem,
    q: &[f64],
    m: &[Vec<f64>],
    mu_alpha: &[Vec<Vec<f64>>],
    c: f64,
) -> Vec<Vec<Vec<f64>>> {
    p.split_groups
        .iter()
        .enumerate()
        .map(|(fi, per_pos)| {
            per_pos
                .iter()
                .enumerate()
                .map(|(gi, group)| {
                    let prices: Vec<f64> = group
                        .iter()
                        .map(|&(k, s)| q[p.code_hyperarc[k]] * m[k][s])
                        .collect();
                    min_linear_quadratic_simplex(&prices, &mu_alpha[fi][gi], c)
                })
                .collect()
        })
        .collect()
}

/// Multi-hop traffic splitting: per flow and coding path, each
/// partition is priced by the sum of q m over the hyperarcs it
/// traverses; the split over partitions is then the same proximal
/// simplex problem.
pub fn solve_split_multihop(
    p: &Problem,
    q: &[f64],
    m: &[Vec<f64>],
    mu_beta: &[Vec<Vec<f64>>],
    c: f64,
) -> Vec<Vec<Vec<f64>>> {
    let pg = p
        .partition_groups
        .as_ref()
        .expect("multi-hop splitting requires coding paths in the catalog");
    pg.iter()
        .enumerate()
        .map(|(fi, paths)| {
            paths
                .iter()
                .enumerate()
                .map(|(pi, parts)| {
                    let prices: Vec<f64> = parts
                        .iter()
                        .map(|hops| {
                            hops.iter()
                                .map(|&(k, s)| q[p.code_hyperarc[k]] * m[k][s])
                                .sum()
                        })
                        .collect();
                    min_linear_quadratic_simplex(&prices, &mu_beta[fi][pi], c)
                })
                .collect()
        })
        .collect()
}

/// Aggregate per-hyperarc inflow: sum over codes of the dominant
/// member's split rate.
pub fn inflows(p: &Problem, alpha: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    let mut inflow = vec![0.0f64; p.n_hyperarcs];
    for k in 0..p.n_codes {
        let peak = p.code_members[k]
            .iter()
            .enumerate()
            .map(|(slot, &f)| alpha[k][slot] * x[f.index()])
            .fold(0.0, f64::max);
        inflow[p.code_hyperarc[k]] += peak;
    }
    inflow
}

/// Projected subgradient step on the hyperarc duals.
pub fn update_duals(p: &Problem, q: &[f64], alpha: &[Vec<f64>], x: &[f64], tau: &[f64], step: f64) -> Vec<f64> {
    let inflow = inflows(p, alpha, x);
    q.iter()
        .enumerate()
        .map(|(h, &qh)| (qh + step * (inflow[h] - p.rates[h] * tau[h])).max(0.0))
        .collect()
}

#[derive(Debug, Clone)]
pub struct IterRecord {
    pub iter: usize,
    pub x: Vec<f64>,
    pub sum_x: f64,
    pub q: Vec<f64>,
    pub objective: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, Default)]
pub struct ConvergenceTrace {
    pub records: Vec<IterRecord>,
}

impl ConvergenceTrace {
    /// CSV with one row per iteration: iter, per-flow x, sum, per-
    /// hyperarc q, objective, residual.
    pub fn to_csv(&self, flow_labels: &[String], hyperarc_labels: &[String]) -> String {
        let mut out = String::from("iter");
        for l in flow_labels {
            out.push_str(&format!(",x_{l}"));
        }
        out.push_str(",sum_x");
        for l in hyperarc_labels {
            out.push_str(&format!(",q_{l}"));
        }
        out.push_str(",objective,residual\n");
        for r in &self.records {
            out.push_str(&r.iter.to_string());
            for v in &r.x {
                out.push_str(&format!(",{v:.9}"));
            }
            out.push_str(&format!(",{:.9}", r.sum_x));
            for v in &r.q {
                out.push_str(&format!(",{v:.9}"));
            }
            out.push_str(&format!(",{:.9},{:.9}\n", r.objective, r.residual));
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub trace: ConvergenceTrace,
    pub converged: bool,
    pub iterations: usize,
    /// Reported operating point: the tail-averaged rates, scaled onto
    /// the clique-feasibility boundary (scaling never exceeds 1). This
    /// is an achievable rate vector by construction.
    pub x_avg: Vec<f64>,
    pub sum_x_avg: f64,
    /// Clique overload of the raw tail average before feasibility
    /// scaling: how far the unscaled average exceeded the airtime
    /// budget.
    pub raw_overload: f64,
    pub objective_avg: f64,
    pub final_state: SolverState,
}

/// Sliding window of primal iterates with running sums, so averages
/// cost O(size) per iteration instead of O(window x size).
struct TailWindow {
    cap: usize,
    x: VecDeque<Vec<f64>>,
    alpha: VecDeque<Vec<Vec<f64>>>,
    sum_x: Vec<f64>,
    sum_alpha: Vec<Vec<f64>>,
}

impl TailWindow {
    fn new(cap: usize, n_flows: usize, alpha_shape: &[Vec<f64>]) -> Self {
        TailWindow {
            cap,
            x: VecDeque::new(),
            alpha: VecDeque::new(),
            sum_x: vec![0.0; n_flows],
            sum_alpha: alpha_shape.iter().map(|r| vec![0.0; r.len()]).collect(),
        }
    }

    fn push(&mut self, x: &[f64], alpha: &[Vec<f64>]) {
        if self.x.len() == self.cap {
            let old_x = self.x.pop_front().unwrap();
            let old_a = self.alpha.pop_front().unwrap();
            for (s, v) in self.sum_x.iter_mut().zip(&old_x) {
                *s -= v;
            }
            for (row_s, row_v) in self.sum_alpha.iter_mut().zip(&old_a) {
                for (s, v) in row_s.iter_mut().zip(row_v) {
                    *s -= v;
                }
            }
        }
        for (s, v) in self.sum_x.iter_mut().zip(x) {
            *s += v;
        }
        for (row_s, row_v) in self.sum_alpha.iter_mut().zip(alpha) {
            for (s, v) in row_s.iter_mut().zip(row_v) {
                *s += v;
            }
        }
        self.x.push_back(x.to_vec());
        self.alpha.push_back(alpha.to_vec());
    }

    fn averages(&self) -> (Vec<f64>, Vec<Vec<f64>>) {
        let n = self.x.len().max(1) as f64;
        let x = self.sum_x.iter().map(|s| s / n).collect();
        let alpha = self
            .sum_alpha
            .iter()
            .map(|row| row.iter().map(|s| s / n).collect())
            .collect();
        (x, alpha)
    }
}

/// Worst clique airtime load of a (x, alpha) point: the airtime a
/// hyperarc needs is its inflow divided by its rate, and loads add up
/// within a clique. A point is an achievable rate vector iff the worst
/// load is at most gamma.
fn max_clique_load(p: &Problem, x: &[f64], alpha: &[Vec<f64>]) -> f64 {
    let inflow = inflows(p, alpha, x);
    p.compiled
        .hypergraph
        .conflict
        .cliques
        .iter()
        .map(|c| {
            c.iter()
                .map(|h| inflow[h.index()] / p.rates[h.index()])
                .sum::<f64>()
        })
        .fold(0.0, f64::max)
}

/// Run the full decomposed iteration to convergence (or max_iters).
pub fn solve(compiled: &Compiled, config: &SolverConfig) -> SolveReport {
    let p = Problem::new(compiled, config);
    let mut st = SolverState::init(&p, config);
    let mut trace = ConvergenceTrace::default();
    let mut window = TailWindow::new(config.avg_window, p.n_flows, &st.alpha);
    let mut stall: VecDeque<f64> = VecDeque::new();
    let mut converged = false;

    for t in 1..=config.max_iters {
        st.iter = t;
        let c = config.proximal_c;

        st.m = solve_dominance(&p, &st.alpha, &st.x, &st.mu_m, c);
        if p.partition_groups.is_some() {
            st.beta = solve_split_multihop(&p, &st.q, &st.m, &st.mu_beta, c);
        } else {
            st.alpha_groups = solve_split_onehop(&p, &st.q, &st.m, &st.mu_alpha, c);
        }
        st.refresh_alpha_view(&p);

        let x_new = solve_rate(&p, &st.q, &st.alpha, &st.m, config);
        let dx = x_new
            .iter()
            .zip(&st.x)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        st.x = x_new;

        let weights: Vec<f64> = (0..p.n_hyperarcs)
            .map(|h| st.q[h] * p.rates[h])
            .collect();
        st.tau = schedule::solve_schedule(
            &weights,
            &compiled.hypergraph.conflict.cliques,
            p.gamma,
        );

        let step = config.step.at(t);
        let q_new = update_duals(&p, &st.q, &st.alpha, &st.x, &st.tau, step);
        let dq = q_new
            .iter()
            .zip(&st.q)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        st.q = q_new;

        if t % config.anchor_period == 0 {
            st.mu_m = st.m.clone();
            st.mu_alpha = st.alpha_groups.clone();
            st.mu_beta = st.beta.clone();
        }

        window.push(&st.x, &st.alpha);
        let raw_inflow = inflows(&p, &st.alpha, &st.x);
        let raw_residual = (0..p.n_hyperarcs)
            .map(|h| (raw_inflow[h] - p.rates[h] * st.tau[h]).max(0.0))
            .fold(0.0, f64::max);
        let sum_x = st.x.iter().sum();
        trace.records.push(IterRecord {
            iter: t,
            x: st.x.clone(),
            sum_x,
            q: st.q.clone(),
            objective: st.x.iter().map(|&v| v.ln()).sum(),
            residual: raw_residual,
        });

        // Stop once the rate change, the dual movement and the
        // tail-averaged capacity overload all stay below tol for a
        // full window.
        let (ax, aalpha) = window.averages();
        let overload = (max_clique_load(&p, &ax, &aalpha) - p.gamma).max(0.0);
        // Dual movement gets double weight so a stop implies the
        // multipliers are settled well inside tol.
        stall.push_back(dx.max(overload).max(2.0 * dq));
        if stall.len() > config.stall_window {
            stall.pop_front();
        }
        if t >= config.avg_window
            && stall.len() == config.stall_window
            && stall.iter().all(|&v| v < config.tol)
        {
            converged = true;
            break;
        }
    }

    let (x_avg, alpha_avg) = window.averages();
    let load = max_clique_load(&p, &x_avg, &alpha_avg);
    let raw_overload = (load - p.gamma).max(0.0);
    // Scale the average onto the interior of the airtime budget: the
    // reported rates are achievable with a margin of a few tolerances.
    let budget = p.gamma * (1.0 - 3.0 * config.tol);
    let sigma = if load > budget { budget / load } else { 1.0 };
    let x_rep: Vec<f64> = x_avg.iter().map(|v| v * sigma).collect();
    SolveReport {
        iterations: st.iter,
        converged,
        sum_x_avg: x_rep.iter().sum(),
        objective_avg: x_rep.iter().map(|&v| v.ln()).sum(),
        x_avg: x_rep,
        raw_overload,
        trace,
        final_state: st,
    }
}
