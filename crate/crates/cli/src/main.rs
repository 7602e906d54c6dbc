//! Command-line front end for the coded-mesh simulator and the
//! utility-maximization solver.

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use ncaqm_core::catalog::compile;
use ncaqm_core::experiment::{
    preset, rows_to_csv, run_experiment, summary_to_csv, ExperimentSpec, ScenarioRef,
};
use ncaqm_core::numopt::{self, oracle, SolverConfig, StepRule};
use ncaqm_core::qm::{DisciplineKind, DropFallback, QmConfig, RecodePolicy};
use ncaqm_core::scenario::{self, CodingDepth, Scenario};
use ncaqm_core::simcore::{KnowledgePolicy, SimConfig, TransportKind};
use std::fs;
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "ncaqm",
    about = "Discrete-event simulator and NUM solver for TCP over network-coded wireless mesh networks",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ScenarioArgs {
    /// Scenario JSON file; mutually exclusive with --topology.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Built-in generator: alice-bob, x, cross, wheel, grid, butterfly.
    #[arg(long)]
    topology: Option<String>,
    /// Link capacities for the generator (topology-specific order; a
    /// single value is broadcast). Solver units or bits/s.
    #[arg(long, value_delimiter = ',')]
    caps: Vec<f64>,
    /// Per-link delivery probability for generated links.
    #[arg(long, default_value_t = 0.85)]
    success_prob: f64,
    /// Coding depth: 0, 1 or 2 hops.
    #[arg(long, default_value_t = 1)]
    coding: u8,
    /// Flow count for the wheel generator.
    #[arg(long, default_value_t = 4)]
    flows: usize,
    /// Seed for the grid generator.
    #[arg(long, default_value_t = 1)]
    grid_seed: u64,
}

impl ScenarioArgs {
    /// `default_cap` fills in generator capacities when --caps is
    /// omitted: bits/s for simulation runs, abstract units for the
    /// solver.
    fn build(&self, duration: f64, default_cap: f64) -> Result<Scenario> {
        let depth = CodingDepth::try_from(self.coding).map_err(|e| anyhow!(e))?;
        match (&self.scenario, &self.topology) {
            (Some(path), None) => {
                let text = fs::read_to_string(path)
                    .with_context(|| format!("reading {}", path.display()))?;
                let mut sc = Scenario::from_json(&text).context("parsing scenario")?;
                sc.coding_depth = depth;
                Ok(sc)
            }
            (None, Some(name)) => {
                let caps = if self.caps.is_empty() {
                    vec![default_cap]
                } else {
                    self.caps.clone()
                };
                scenario::by_name(
                    name,
                    &caps,
                    self.success_prob,
                    depth,
                    self.flows,
                    self.grid_seed,
                    duration,
                )
                .map_err(|e| anyhow!(e))
            }
            (None, None) => bail!("provide --scenario <file> or --topology <name>"),
            (Some(_), Some(_)) => bail!("--scenario and --topology are mutually exclusive"),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation and emit its metrics.
    Sim {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Queue discipline: nonc, cope, bfly, ncaqm.
        #[arg(long, default_value = "nonc")]
        qm: String,
        /// Source model: tcp, optimal, saturated.
        #[arg(long, default_value = "tcp")]
        transport: String,
        /// Node buffer size, packets.
        #[arg(long, default_value_t = 10)]
        buffer: usize,
        /// Data payload size, bytes.
        #[arg(long, default_value_t = 500)]
        packet_size: u32,
        #[arg(long, default_value_t = 60.0)]
        duration: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Split-estimator window, transmissions.
        #[arg(long, default_value_t = 100)]
        window: usize,
        /// Recoding cadence: on-enqueue or every-ms:<T>.
        #[arg(long, default_value = "on-enqueue")]
        recode: String,
        /// Overflow fallback when the chosen flow is fully coded:
        /// tail or incoming.
        #[arg(long, default_value = "tail")]
        drop_fallback: String,
        /// Neighbor-knowledge mode: perfect or delayed-ms:<T>.
        #[arg(long, default_value = "perfect")]
        knowledge: String,
        /// Record the event log in the output.
        #[arg(long)]
        events: bool,
        /// Output file (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run an experiment grid from a spec file or a named preset.
    Sweep {
        /// Experiment spec JSON.
        #[arg(long)]
        spec: Option<PathBuf>,
        /// Built-in preset: summary, summary-cdf, buffer-sweep,
        /// wheel-flows, capacity-sweep, butterfly-buffers.
        #[arg(long)]
        preset: Option<String>,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
        /// csv or json.
        #[arg(long, default_value = "csv")]
        format: String,
    },
    /// Solve the rate-control utility maximization for a scenario.
    Solve {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, default_value_t = 120_000)]
        max_iters: usize,
        #[arg(long, default_value_t = 1e-3)]
        tol: f64,
        /// Subgradient step c0 (step is c0/sqrt(t)).
        #[arg(long, default_value_t = 0.05)]
        step: f64,
        /// Proximal damping constant.
        #[arg(long, default_value_t = 1.0)]
        proximal_c: f64,
        /// Per-clique airtime budget.
        #[arg(long)]
        overprovision: Option<f64>,
        /// Write the per-iteration trace CSV here.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Brute-force the optimum by grid search (at most 3 flows).
    Oracle {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Simplex grid step for the splitting variables.
        #[arg(long, default_value_t = 0.05)]
        grid_step: f64,
    },
}

fn parse_recode(s: &str) -> Result<RecodePolicy> {
    if s == "on-enqueue" {
        Ok(RecodePolicy::OnEnqueue)
    } else if let Some(ms) = s.strip_prefix("every-ms:") {
        Ok(RecodePolicy::EveryMs(ms.parse::<f64>()?))
    } else {
        bail!("--recode expects on-enqueue or every-ms:<T>")
    }
}

fn parse_knowledge(s: &str) -> Result<KnowledgePolicy> {
    if s == "perfect" {
        Ok(KnowledgePolicy::Perfect)
    } else if let Some(ms) = s.strip_prefix("delayed-ms:") {
        Ok(KnowledgePolicy::Delayed(ms.parse::<f64>()? / 1000.0))
    } else {
        bail!("--knowledge expects perfect or delayed-ms:<T>")
    }
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Sim {
            scenario,
            qm,
            transport,
            buffer,
            packet_size,
            duration,
            seed,
            window,
            recode,
            drop_fallback,
            knowledge,
            events,
            out,
        } => {
            let sc = scenario.build(duration, 1e6)?;
            let compiled = compile(sc)?;
            let kind = DisciplineKind::parse(&qm)
                .ok_or_else(|| anyhow!("unknown discipline '{qm}'"))?;
            let transport = TransportKind::parse(&transport)
                .ok_or_else(|| anyhow!("unknown transport '{transport}'"))?;
            let fallback = match drop_fallback.as_str() {
                "tail" => DropFallback::Tail,
                "incoming" => DropFallback::Incoming,
                other => bail!("unknown drop fallback '{other}'"),
            };
            let mut cfg = SimConfig {
                qm: QmConfig {
                    kind,
                    capacity: buffer,
                    window,
                    recode: parse_recode(&recode)?,
                    drop_fallback: fallback,
                },
                transport,
                duration,
                seed,
                knowledge: parse_knowledge(&knowledge)?,
                record_events: events,
                ..SimConfig::default()
            };
            cfg.tcp.mss = packet_size;
            let metrics = ncaqm_core::simcore::run(&compiled, &cfg)?;
            let json = metrics.to_json();
            match out {
                Some(path) => fs::write(&path, json)
                    .with_context(|| format!("writing {}", path.display()))?,
                None => println!("{json}"),
            }
            Ok(())
        }
        Command::Sweep {
            spec,
            preset: preset_name,
            out_dir,
            format,
        } => {
            let spec: ExperimentSpec = match (spec, preset_name) {
                (Some(path), None) => {
                    let text = fs::read_to_string(&path)
                        .with_context(|| format!("reading {}", path.display()))?;
                    serde_json::from_str(&text).context("parsing experiment spec")?
                }
                (None, Some(name)) => {
                    preset(&name).ok_or_else(|| anyhow!("unknown preset '{name}'"))?
                }
                _ => bail!("provide exactly one of --spec or --preset"),
            };
            let (table, failures) = run_experiment(&spec)?;
            fs::create_dir_all(&out_dir)?;
            match format.as_str() {
                "csv" => {
                    fs::write(out_dir.join("cells.csv"), rows_to_csv(&table))?;
                    fs::write(out_dir.join("summary.csv"), summary_to_csv(&table))?;
                }
                "json" => {
                    fs::write(
                        out_dir.join("results.json"),
                        serde_json::to_string_pretty(&table)?,
                    )?;
                }
                other => bail!("unknown format '{other}'"),
            }
            for f in &failures {
                eprintln!("cell failed: {f}");
            }
            eprintln!(
                "wrote {} cells, {} summary rows to {}",
                table.rows.len(),
                table.summary.len(),
                out_dir.display()
            );
            if failures.is_empty() {
                Ok(())
            } else {
                std::process::exit(failures.len().min(100) as i32);
            }
        }
        Command::Solve {
            scenario,
            max_iters,
            tol,
            step,
            proximal_c,
            overprovision,
            trace,
        } => {
            let sc = scenario.build(60.0, 1.0)?;
            let compiled = compile(sc)?;
            let config = SolverConfig {
                max_iters,
                tol,
                step: StepRule::InvSqrt(step),
                proximal_c,
                overprovision,
                ..SolverConfig::default()
            };
            let report = numopt::solve(&compiled, &config);
            let flow_labels: Vec<String> = compiled
                .flows
                .iter()
                .map(|f| format!("{}", f.id.0))
                .collect();
            let arc_labels: Vec<String> = compiled
                .hypergraph
                .hyperarcs
                .iter()
                .map(|h| compiled.hypergraph.hyperarc_label(&compiled.scenario, h.id))
                .collect();
            if let Some(path) = trace {
                fs::write(&path, report.trace.to_csv(&flow_labels, &arc_labels))
                    .with_context(|| format!("writing {}", path.display()))?;
            }
            println!(
                "{}",
                serde_json::json!({
                    "converged": report.converged,
                    "iterations": report.iterations,
                    "x": report.x_avg,
                    "sum_x": report.sum_x_avg,
                    "objective": report.objective_avg,
                    "raw_overload": report.raw_overload,
                })
            );
            Ok(())
        }
        Command::Oracle {
            scenario,
            grid_step,
        } => {
            let sc = scenario.build(60.0, 1.0)?;
            let compiled = compile(sc)?;
            let result = oracle::brute_force_optimum(&compiled, grid_step)?;
            println!(
                "{}",
                serde_json::json!({
                    "x": result.x,
                    "sum_x": result.sum_x,
                    "objective": result.objective,
                })
            );
            Ok(())
        }
    }
}
