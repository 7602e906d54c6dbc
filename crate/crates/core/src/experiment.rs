//! Experiment orchestration: seed sweeps, parameter sweeps, and
//! baseline-paired aggregation, with CSV/JSON emission.
//!
//! Aggregation follows the reference protocol: time-average within
//! each run first (the per-run throughput), then mean over seeds.
//! Improvement is computed per seed against a baseline run with the
//! identical seed and configuration point, then averaged.

use crate::catalog::{compile, Compiled};
use crate::metrics::Metrics;
use crate::qm::{DisciplineKind, QmConfig};
use crate::scenario::{self, CodingDepth, Scenario};
use crate::simcore::{run, SimConfig, TransportKind};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Scenario source: a named generator or an explicit file payload.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScenarioRef {
    Named {
        topology: String,
        #[serde(default)]
        caps: Vec<f64>,
        #[serde(default = "default_success")]
        success_prob: f64,
        #[serde(default = "default_wheel_flows")]
        wheel_flows: usize,
        #[serde(default)]
        grid_seed: u64,
    },
    Inline {
        scenario: Scenario,
    },
}

fn default_success() -> f64 {
    0.85
}

fn default_wheel_flows() -> usize {
    4
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepAxis {
    None,
    Buffer,
    Capacity,
    FlowCount,
}

/// One experiment: a scenario, the disciplines to compare, and an
/// optional sweep over buffer size, capacity, or flow count.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub scenario: ScenarioRef,
    /// Disciplines to run; the first is also the improvement baseline
    /// unless `baseline` overrides it.
    pub disciplines: Vec<String>,
    #[serde(default)]
    pub baseline: Option<String>,
    #[serde(default = "default_transport")]
    pub transport: String,
    #[serde(default = "default_buffer")]
    pub buffer: usize,
    /// Link capacity in bits per second.
    #[serde(default = "default_capacity")]
    pub capacity: f64,
    #[serde(default = "default_packet")]
    pub packet_size: u32,
    #[serde(default = "default_duration")]
    pub duration: f64,
    pub seeds: Vec<u64>,
    #[serde(default = "default_axis")]
    pub sweep: SweepAxis,
    #[serde(default)]
    pub sweep_values: Vec<f64>,
    #[serde(default)]
    pub coding_depth: Option<u8>,
    /// Emit one row per seed (for distribution plots) in addition to
    /// the aggregated rows.
    #[serde(default)]
    pub per_seed: bool,
}

fn default_transport() -> String {
    "tcp".into()
}
fn default_buffer() -> usize {
    10
}
fn default_capacity() -> f64 {
    1e6
}
fn default_packet() -> u32 {
    500
}
fn default_duration() -> f64 {
    60.0
}
fn default_axis() -> SweepAxis {
    SweepAxis::None
}

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("unknown discipline '{0}'")]
    UnknownDiscipline(String),
    #[error("unknown transport '{0}'")]
    UnknownTransport(String),
    #[error("sweep axis needs sweep_values")]
    MissingSweepValues,
    #[error("experiment needs at least one seed")]
    NoSeeds,
    #[error(transparent)]
    Compile(#[from] crate::catalog::CompileError),
    #[error("scenario: {0}")]
    Scenario(String),
    #[error("simulation: {0}")]
    Sim(#[from] crate::simcore::SimError),
}

/// One (sweep point, discipline, seed) cell.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ResultRow {
    pub sweep_value: f64,
    pub discipline: String,
    pub seed: u64,
    pub aggregate_throughput_bps: f64,
    pub per_flow_bps: Vec<f64>,
    /// Improvement over the baseline discipline at the same seed and
    /// sweep point, percent.
    pub improvement_pct: f64,
    pub relay_coded_frac: f64,
    pub relay_no_partner_frac: f64,
}

/// Aggregated over seeds.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SummaryRow {
    pub sweep_value: f64,
    pub discipline: String,
    pub seeds: usize,
    pub mean_throughput_bps: f64,
    pub mean_improvement_pct: f64,
    pub mean_relay_coded_frac: f64,
    pub mean_relay_no_partner_frac: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Default)]
pub struct ResultTable {
    pub rows: Vec<ResultRow>,
    pub summary: Vec<SummaryRow>,
}

fn parse_discipline(s: &str) -> Result<DisciplineKind, ExperimentError> {
    DisciplineKind::parse(s).ok_or_else(|| ExperimentError::UnknownDiscipline(s.to_string()))
}

impl ScenarioRef {
    pub fn build(
        &self,
        capacity: f64,
        depth: CodingDepth,
        duration: f64,
    ) -> Result<Scenario, ExperimentError> {
        match self {
            ScenarioRef::Named {
                topology,
                caps,
                success_prob,
                wheel_flows,
                grid_seed,
            } => {
                let caps: Vec<f64> = if caps.is_empty() {
                    vec![capacity]
                } else {
                    caps.clone()
                };
                scenario::by_name(
                    topology,
                    &caps,
                    *success_prob,
                    depth,
                    *wheel_flows,
                    *grid_seed,
                    duration,
                )
                .map_err(ExperimentError::Scenario)
            }
            ScenarioRef::Inline { scenario } => {
                let mut sc = scenario.clone();
                sc.coding_depth = depth;
                Ok(sc)
            }
        }
    }

    fn default_depth(&self) -> CodingDepth {
        match self {
            ScenarioRef::Named { topology, .. } if topology == "butterfly" => CodingDepth::TwoHop,
            ScenarioRef::Inline { scenario } => scenario.coding_depth,
            _ => CodingDepth::OneHop,
        }
    }
}

/// Run every (sweep point, discipline, seed) cell of the experiment.
/// Cell failures are reported in the returned list without aborting
/// the remaining cells.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<(ResultTable, Vec<String>), ExperimentError> {
    if spec.seeds.is_empty() {
        return Err(ExperimentError::NoSeeds);
    }
    if spec.sweep != SweepAxis::None && spec.sweep_values.is_empty() {
        return Err(ExperimentError::MissingSweepValues);
    }
    let transport = TransportKind::parse(&spec.transport)
        .ok_or_else(|| ExperimentError::UnknownTransport(spec.transport.clone()))?;
    let baseline_name = spec
        .baseline
        .clone()
        .unwrap_or_else(|| spec.disciplines[0].clone());
    let depth = spec
        .coding_depth
        .map(|d| CodingDepth::try_from(d).map_err(ExperimentError::Scenario))
        .transpose()?
        .unwrap_or_else(|| spec.scenario.default_depth());

    let sweep_values: Vec<f64> = if spec.sweep == SweepAxis::None {
        vec![f64::NAN]
    } else {
        spec.sweep_values.clone()
    };

    let mut failures = Vec::new();
    let mut table = ResultTable::default();

    for &value in &sweep_values {
        let buffer = if spec.sweep == SweepAxis::Buffer {
            value as usize
        } else {
            spec.buffer
        };
        let capacity = if spec.sweep == SweepAxis::Capacity {
            value
        } else {
            spec.capacity
        };
        let scenario = match self_scenario(spec, capacity, depth, value) {
            Ok(sc) => sc,
            Err(e) => {
                failures.push(format!("sweep {value}: {e}"));
                continue;
            }
        };
        let compiled = match compile(scenario) {
            Ok(c) => c,
            Err(e) => {
                failures.push(format!("sweep {value}: {e}"));
                continue;
            }
        };

        // Baseline runs first so each cell can pair with its seed.
        let mut order = spec.disciplines.clone();
        if let Some(i) = order.iter().position(|d| *d == baseline_name) {
            order.swap(0, i);
        } else {
            order.insert(0, baseline_name.clone());
        }

        let mut baseline_by_seed: std::collections::BTreeMap<u64, f64> = Default::default();
        for name in &order {
            let kind = parse_discipline(name)?;
            for &seed in &spec.seeds {
                match run_cell(&compiled, spec, kind, transport, buffer, seed) {
                    Ok(m) => {
                        let thr = m.totals.aggregate_throughput_bps;
                        if *name == baseline_name {
                            baseline_by_seed.insert(seed, thr);
                        }
                        let base = baseline_by_seed.get(&seed).copied().unwrap_or(f64::NAN);
                        let relay = m.nodes.iter().max_by_key(|n| n.data_tx);
                        table.rows.push(ResultRow {
                            sweep_value: value,
                            discipline: name.clone(),
                            seed,
                            aggregate_throughput_bps: thr,
                            per_flow_bps: m.flows.iter().map(|f| f.throughput_bps).collect(),
                            improvement_pct: if base > 0.0 {
                                (thr / base - 1.0) * 100.0
                            } else {
                                0.0
                            },
                            relay_coded_frac: relay.map_or(0.0, |n| n.coded_frac),
                            relay_no_partner_frac: relay.map_or(0.0, |n| n.no_partner_frac),
                        });
                    }
                    Err(e) => failures.push(format!("{name} seed {seed} sweep {value}: {e}")),
                }
            }
        }

        for name in &order {
            let cells: Vec<&ResultRow> = table
                .rows
                .iter()
                .filter(|r| {
                    r.discipline == *name
                        && (r.sweep_value == value
                            || (r.sweep_value.is_nan() && value.is_nan()))
                })
                .collect();
            if cells.is_empty() {
                continue;
            }
            let n = cells.len() as f64;
            table.summary.push(SummaryRow {
                sweep_value: value,
                discipline: name.clone(),
                seeds: cells.len(),
                mean_throughput_bps: cells.iter().map(|r| r.aggregate_throughput_bps).sum::<f64>()
                    / n,
                mean_improvement_pct: cells.iter().map(|r| r.improvement_pct).sum::<f64>() / n,
                mean_relay_coded_frac: cells.iter().map(|r| r.relay_coded_frac).sum::<f64>() / n,
                mean_relay_no_partner_frac: cells
                    .iter()
                    .map(|r| r.relay_no_partner_frac)
                    .sum::<f64>()
                    / n,
            });
        }
    }
    Ok((table, failures))
}

fn self_scenario(
    spec: &ExperimentSpec,
    capacity: f64,
    depth: CodingDepth,
    sweep_value: f64,
) -> Result<Scenario, ExperimentError> {
    match (&spec.scenario, spec.sweep) {
        (ScenarioRef::Named { .. }, SweepAxis::FlowCount) => {
            let ScenarioRef::Named {
                success_prob,
                grid_seed,
                topology,
                caps,
                ..
            } = &spec.scenario
            else {
                unreachable!()
            };
            let caps = if caps.is_empty() { vec![capacity] } else { caps.clone() };
            scenario::by_name(
                topology,
                &caps,
                *success_prob,
                depth,
                sweep_value as usize,
                *grid_seed,
                spec.duration,
            )
            .map_err(ExperimentError::Scenario)
        }
        _ => spec.scenario.build(capacity, depth, spec.duration),
    }
}

fn run_cell(
    compiled: &Compiled,
    spec: &ExperimentSpec,
    kind: DisciplineKind,
    transport: TransportKind,
    buffer: usize,
    seed: u64,
) -> Result<Metrics, ExperimentError> {
    let mut cfg = SimConfig {
        qm: QmConfig {
            kind,
            capacity: buffer,
            ..QmConfig::default()
        },
        transport,
        duration: spec.duration,
        seed,
        ..SimConfig::default()
    };
    cfg.tcp.mss = spec.packet_size;
    Ok(run(compiled, &cfg)?)
}

// ---------------------------------------------------------------------------
// Emission. Plain CSV with a fixed column order so reruns are
// byte-identical; flows are not expanded into columns.

pub fn rows_to_csv(table: &ResultTable) -> String {
    let mut out = String::from(
        "sweep_value,discipline,seed,throughput_bps,improvement_pct,relay_coded_frac,relay_no_partner_frac\n",
    );
    for r in &table.rows {
        out.push_str(&format!(
            "{},{},{},{:.3},{:.4},{:.6},{:.6}\n",
            fmt_sweep(r.sweep_value),
            r.discipline,
            r.seed,
            r.aggregate_throughput_bps,
            r.improvement_pct,
            r.relay_coded_frac,
            r.relay_no_partner_frac
        ));
    }
    out
}

pub fn summary_to_csv(table: &ResultTable) -> String {
    let mut out = String::from(
        "sweep_value,discipline,seeds,mean_throughput_bps,mean_improvement_pct,mean_relay_coded_frac,mean_relay_no_partner_frac\n",
    );
    for r in &table.summary {
        out.push_str(&format!(
            "{},{},{},{:.3},{:.4},{:.6},{:.6}\n",
            fmt_sweep(r.sweep_value),
            r.discipline,
            r.seeds,
            r.mean_throughput_bps,
            r.mean_improvement_pct,
            r.mean_relay_coded_frac,
            r.mean_relay_no_partner_frac
        ));
    }
    out
}

fn fmt_sweep(v: f64) -> String {
    if v.is_nan() {
        "-".to_string()
    } else {
        format!("{v}")
    }
}

/// Parse `rows_to_csv` output back into result rows (summary omitted).
pub fn rows_from_csv(s: &str) -> Result<Vec<ResultRow>, String> {
    let mut rows = Vec::new();
    for (i, line) in s.lines().enumerate().skip(1) {
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 7 {
            return Err(format!("line {}: expected 7 fields", i + 1));
        }
        let sweep_value = if parts[0] == "-" {
            f64::NAN
        } else {
            parts[0].parse().map_err(|e| format!("line {}: {e}", i + 1))?
        };
        let parse = |s: &str| -> Result<f64, String> {
            s.parse().map_err(|e| format!("line {}: {e}", i + 1))
        };
        rows.push(ResultRow {
            sweep_value,
            discipline: parts[1].to_string(),
            seed: parts[2].parse().map_err(|e| format!("line {}: {e}", i + 1))?,
            aggregate_throughput_bps: parse(parts[3])?,
            per_flow_bps: Vec::new(),
            improvement_pct: parse(parts[4])?,
            relay_coded_frac: parse(parts[5])?,
            relay_no_partner_frac: parse(parts[6])?,
        });
    }
    Ok(rows)
}

/// Built-in experiment presets mirroring the reference evaluation
/// grids. Values beyond the explicitly reported sweep points are
/// interpolations.
pub fn preset(name: &str) -> Option<ExperimentSpec> {
    let named = |topology: &str| ScenarioRef::Named {
        topology: topology.into(),
        caps: vec![],
        success_prob: 0.85,
        wheel_flows: 4,
        grid_seed: 1,
    };
    let seeds: Vec<u64> = (1..=10).collect();
    let base = ExperimentSpec {
        scenario: named("x"),
        disciplines: vec!["nonc".into(), "cope".into(), "ncaqm".into()],
        baseline: None,
        transport: "tcp".into(),
        buffer: 10,
        capacity: 1e6,
        packet_size: 500,
        duration: 60.0,
        seeds: seeds.clone(),
        sweep: SweepAxis::None,
        sweep_values: vec![],
        coding_depth: None,
        per_seed: false,
    };
    match name {
        // Per-topology improvement table at the reference operating
        // point (buffer 10, 500 B, 1 Mbps).
        "summary" => Some(base),
        "summary-cdf" => Some(ExperimentSpec {
            seeds: (1..=30).collect(),
            per_seed: true,
            ..base
        }),
        "buffer-sweep" => Some(ExperimentSpec {
            sweep: SweepAxis::Buffer,
            sweep_values: vec![5.0, 10.0, 20.0, 30.0, 50.0],
            ..base
        }),
        "wheel-flows" => Some(ExperimentSpec {
            scenario: named("wheel"),
            buffer: 30,
            sweep: SweepAxis::FlowCount,
            sweep_values: vec![2.0, 4.0, 6.0, 8.0],
            ..base
        }),
        "capacity-sweep" => Some(ExperimentSpec {
            buffer: 30,
            sweep: SweepAxis::Capacity,
            sweep_values: vec![1e6, 3e6, 5e6, 7e6, 9e6, 11e6],
            ..base
        }),
        "butterfly-buffers" => Some(ExperimentSpec {
            scenario: named("butterfly"),
            disciplines: vec!["nonc".into(), "bfly".into(), "ncaqm".into()],
            sweep: SweepAxis::Buffer,
            sweep_values: vec![5.0, 10.0, 20.0, 30.0, 50.0],
            ..base
        }),
        _ => None,
    }
}
