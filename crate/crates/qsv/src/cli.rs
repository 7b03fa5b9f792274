//! Command-line front end: `simulate`, `predict` and `compare`
//! subcommands with machine-readable JSON/CSV output. Every run echoes
//! its full configuration; timing fields are isolated so outputs are
//! byte-stable for a fixed seed once timings are masked.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::circuits::{build_factor_circuit, find_benchmark, Circuit};
use crate::costmodel::{
    self, extract_profile, link_bit_sweep, MachineParams, PredictionRow,
};
use crate::gates::{ErrorModel, GateOp};
use crate::parallel::{plan_steps, run_parallel, RunStats};
use crate::statevec::{LevelSpec, Radix};
use crate::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "qsv", about = "State-vector simulator with parallel partitioning and an analytical cost model", version)]
pub struct Cli {
    #[command(subcommand)]
    pub cmd: Cmd,
}

#[derive(Debug, Subcommand)]
pub enum Cmd {
    /// Run a circuit (named benchmark or circuit file) and report the
    /// measurement histogram plus execution statistics.
    Simulate(SimulateArgs),
    /// Evaluate the analytical cost model over an n_p sweep.
    Predict(PredictArgs),
    /// Run a benchmark and compare observed wall-clock against the
    /// model, or sweep link-bit counts.
    Compare(CompareArgs),
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct CircuitSource {
    /// Named benchmark from the catalog.
    #[arg(long, conflicts_with = "circuit")]
    pub bench: Option<String>,
    /// Circuit file in the text format.
    #[arg(long)]
    pub circuit: Option<PathBuf>,
    /// Radix override (2 or 3); required with --circuit when the file
    /// header should be cross-checked, defaulted from the benchmark.
    #[arg(long)]
    pub radix: Option<u64>,
    /// Link-bit count of the two-level structure.
    #[arg(long)]
    pub link_bits: Option<u32>,
    /// State-bit (value-block) count of the two-level structure.
    #[arg(long)]
    pub state_bits: Option<u32>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub source: CircuitSource,
    /// Parallel-bit count; worker count is s^np.
    #[arg(long, default_value_t = 0)]
    pub np: u32,
    /// Std-dev of the laser rotation angle error, radians.
    #[arg(long, default_value_t = 0.0)]
    pub sigma_theta: f64,
    /// Decoherence rate per laser op.
    #[arg(long, default_value_t = 0.0)]
    pub decoherence: f64,
    /// Seed for error draws and measurement sampling.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value = "json")]
    pub format: OutputFormat,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct PredictArgs {
    /// Named benchmark from the catalog.
    #[arg(long)]
    pub bench: String,
    /// Machine preset (t3e, sp2) or a TOML parameter file.
    #[arg(long, default_value = "t3e")]
    pub machine: String,
    /// Single value `k` or inclusive range `a..b`.
    #[arg(long, default_value = "0..3")]
    pub np: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value = "csv")]
    pub format: OutputFormat,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct CompareArgs {
    #[arg(long)]
    pub bench: String,
    #[arg(long, default_value = "t3e")]
    pub machine: String,
    #[arg(long, default_value_t = 0)]
    pub np: u32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Sweep link-bit counts at fixed np instead of running once.
    #[arg(long)]
    pub link_sweep: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value = "csv")]
    pub format: OutputFormat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Json,
    Csv,
}

/// Resolved circuit plus geometry.
struct ResolvedCircuit {
    name: String,
    circuit: Circuit,
    s: Radix,
    level_spec: LevelSpec,
}

fn resolve_circuit(src: &CircuitSource) -> Result<ResolvedCircuit> {
    let (name, circuit, s, default_spec) = match (&src.bench, &src.circuit) {
        (Some(bench), None) => {
            let b = find_benchmark(bench)?;
            let fspec = b.factoring.ok_or_else(|| {
                Error::InvalidConfig(format!("benchmark {} is not simulatable", b.name))
            })?;
            (
                b.name.to_string(),
                build_factor_circuit(&fspec)?,
                b.s,
                Some(b.level_spec()),
            )
        }
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path)?;
            let (c, s) = Circuit::from_text(&text)?;
            (
                path.file_stem()
                    .map(|x| x.to_string_lossy().into_owned())
                    .unwrap_or_default(),
                c,
                s,
                None,
            )
        }
        _ => {
            return Err(Error::InvalidConfig(
                "exactly one of --bench / --circuit is required".into(),
            ))
        }
    };
    if let Some(r) = src.radix {
        if r != s.value() {
            return Err(Error::InvalidConfig(format!(
                "--radix {r} conflicts with the circuit radix {}",
                s.value()
            )));
        }
    }
    let m = circuit.total_bits;
    let level_spec = match (src.link_bits, src.state_bits) {
        (Some(l), Some(st)) => LevelSpec::two_level(l, st)?,
        (Some(l), None) => LevelSpec::two_level(l, m.checked_sub(l).filter(|v| *v > 0).ok_or_else(
            || Error::InvalidConfig(format!("link bits {l} leave no state bits of {m}")),
        )?)?,
        (None, Some(st)) => LevelSpec::two_level(m.checked_sub(st).filter(|v| *v > 0).ok_or_else(
            || Error::InvalidConfig(format!("state bits {st} leave no link bits of {m}")),
        )?, st)?,
        (None, None) => default_spec.unwrap_or_else(|| {
            let state = (m / 3).max(1);
            LevelSpec::two_level(m - state, state).expect("derived geometry valid")
        }),
    };
    level_spec.validate_for(m)?;
    Ok(ResolvedCircuit {
        name,
        circuit,
        s,
        level_spec,
    })
}

fn parse_np_range(text: &str) -> Result<Vec<u32>> {
    let parse_one = |t: &str| -> Result<u32> {
        t.trim()
            .parse()
            .map_err(|e| Error::Parse(format!("bad --np value {t:?}: {e}")))
    };
    if let Some((a, b)) = text.split_once("..") {
        let (a, b) = (parse_one(a)?, parse_one(b.trim_start_matches('='))?);
        if b < a {
            return Err(Error::Parse(format!("empty --np range {text:?}")));
        }
        Ok((a..=b).collect())
    } else {
        Ok(vec![parse_one(text)?])
    }
}

fn emit(out: &Option<PathBuf>, content: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, content)?,
        None => print!("{content}"),
    }
    Ok(())
}

/// Simulation result document.
#[derive(Debug, Serialize, Deserialize)]
pub struct SimulateReport {
    pub config: SimulateArgs,
    pub circuit: String,
    pub stats: RunStats,
    /// Probability of each nonzero measured-register value, computed
    /// before the collapse.
    pub histogram: Vec<HistogramEntry>,
    pub measured: Option<MeasuredOutcome>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramEntry {
    pub value: u64,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasuredOutcome {
    pub digits: Vec<u8>,
    pub value: u64,
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<SimulateReport> {
    let resolved = resolve_circuit(&args.source)?;
    let err = ErrorModel {
        sigma_theta: args.sigma_theta,
        decoherence_rate: args.decoherence,
        seed: args.seed,
    };
    // Split off a trailing Measure so the histogram reflects the
    // pre-collapse distribution.
    let mut circuit = resolved.circuit.clone();
    let measure_sites = match circuit.ops.last() {
        Some(GateOp::Measure { sites }) => {
            let sites = sites.clone();
            circuit.ops.pop();
            Some(sites)
        }
        _ => None,
    };
    let (mut state, stats, _) = run_parallel(
        &circuit,
        resolved.s,
        &resolved.level_spec,
        &err,
        args.np,
        args.seed,
    )?;
    let mut histogram = Vec::new();
    let mut measured = None;
    if let Some(sites) = &measure_sites {
        let dist = state.register_distribution(sites)?;
        for (value, p) in dist.iter().enumerate() {
            if *p > 1e-12 {
                histogram.push(HistogramEntry {
                    value: value as u64,
                    probability: *p,
                });
            }
        }
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(args.seed);
        let digits = state.measure_register(sites, &mut rng)?;
        let value = digits
            .iter()
            .enumerate()
            .map(|(k, &d)| d as u64 * resolved.s.value().pow(k as u32))
            .sum();
        measured = Some(MeasuredOutcome { digits, value });
    }
    Ok(SimulateReport {
        config: args.clone(),
        circuit: resolved.name,
        stats,
        histogram,
        measured,
    })
}

pub fn cmd_predict(args: &PredictArgs) -> Result<Vec<PredictionRow>> {
    let bench = find_benchmark(&args.bench)?;
    let mp = MachineParams::resolve(&args.machine)?;
    let nps = parse_np_range(&args.np)?;
    costmodel::predict(&bench, &mp, &nps)
}

/// One observed-vs-calculated row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub benchmark: String,
    pub machine: String,
    pub s: u64,
    pub n_p: u32,
    pub observed_seconds: f64,
    pub calculated_seconds: f64,
    pub relative_difference: f64,
    pub pct_compute: f64,
    pub pct_traversal: f64,
    pub pct_comm: f64,
}

pub fn cmd_compare(args: &CompareArgs) -> Result<String> {
    let bench = find_benchmark(&args.bench)?;
    let mp = MachineParams::resolve(&args.machine)?;
    if args.link_sweep {
        let fspec = bench.factoring.ok_or_else(|| {
            Error::InvalidConfig(format!("benchmark {} is not simulatable", bench.name))
        })?;
        let mut c = build_factor_circuit(&fspec)?;
        if matches!(c.ops.last(), Some(GateOp::Measure { .. })) {
            c.ops.pop();
        }
        let points = link_bit_sweep(&c, bench.s, args.np, &mp, 1..=c.total_bits - 1)?;
        let mut out = String::from("link_bits,t_par_model\n");
        for (l, t) in points {
            out.push_str(&format!("{l},{t:.6}\n"));
        }
        return Ok(out);
    }
    let sim = cmd_simulate(&SimulateArgs {
        source: CircuitSource {
            bench: Some(args.bench.clone()),
            circuit: None,
            radix: None,
            link_bits: None,
            state_bits: None,
        },
        np: args.np,
        sigma_theta: 0.0,
        decoherence: 0.0,
        seed: args.seed,
        out: None,
        format: OutputFormat::Json,
    })?;
    let fspec = bench.factoring.expect("simulatable checked above");
    let mut c = build_factor_circuit(&fspec)?;
    if matches!(c.ops.last(), Some(GateOp::Measure { .. })) {
        c.ops.pop();
    }
    let level_spec = bench.level_spec();
    let plan = plan_steps(&c, args.np, &level_spec, bench.s)?;
    let profile = extract_profile(&c, &plan, &level_spec, bench.s)?;
    let calculated = costmodel::t_par(&profile, args.np, bench.s, &mp)?;
    let observed = sim.stats.wall_seconds;
    let phase_total =
        (sim.stats.compute_seconds + sim.stats.traversal_seconds + sim.stats.comm_seconds).max(1e-300);
    let row = CompareRow {
        benchmark: bench.name.to_string(),
        machine: mp.name.clone(),
        s: bench.s.value(),
        n_p: args.np,
        observed_seconds: observed,
        calculated_seconds: calculated,
        relative_difference: (observed - calculated) / calculated,
        pct_compute: 100.0 * sim.stats.compute_seconds / phase_total,
        pct_traversal: 100.0 * sim.stats.traversal_seconds / phase_total,
        pct_comm: 100.0 * sim.stats.comm_seconds / phase_total,
    };
    match args.format {
        OutputFormat::Json => Ok(format!("{}\n", serde_json::to_string_pretty(&row).unwrap())),
        OutputFormat::Csv => Ok(format!(
            "benchmark,machine,s,n_p,observed_seconds,calculated_seconds,relative_difference,pct_compute,pct_traversal,pct_comm\n{},{},{},{},{:.6},{:.6},{:.4},{:.1},{:.1},{:.1}\n",
            row.benchmark,
            row.machine,
            row.s,
            row.n_p,
            row.observed_seconds,
            row.calculated_seconds,
            row.relative_difference,
            row.pct_compute,
            row.pct_traversal,
            row.pct_comm
        )),
    }
}

/// Entry point used by the binary; returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn dispatch(cli: &Cli) -> Result<()> {
    match &cli.cmd {
        Cmd::Simulate(args) => {
            let report = cmd_simulate(args)?;
            let text = match args.format {
                OutputFormat::Json => format!("{}\n", serde_json::to_string_pretty(&report).unwrap()),
                OutputFormat::Csv => {
                    let mut t = String::from("value,probability\n");
                    for h in &report.histogram {
                        t.push_str(&format!("{},{:.9}\n", h.value, h.probability));
                    }
                    t
                }
            };
            emit(&args.out, &text)
        }
        Cmd::Predict(args) => {
            let rows = cmd_predict(args)?;
            let text = match args.format {
                OutputFormat::Csv => costmodel::rows_to_csv(&rows),
                OutputFormat::Json => format!("{}\n", serde_json::to_string_pretty(&json!({
                    "config": args,
                    "rows": rows,
                }))
                .unwrap()),
            };
            emit(&args.out, &text)
        }
        Cmd::Compare(args) => {
            let text = cmd_compare(args)?;
            emit(&args.out, &text)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sim_args(bench: &str, np: u32, seed: u64) -> SimulateArgs {
        SimulateArgs {
            source: CircuitSource {
                bench: Some(bench.into()),
                circuit: None,
                radix: None,
                link_bits: None,
                state_bits: None,
            },
            np,
            sigma_theta: 0.0,
            decoherence: 0.0,
            seed,
            out: None,
            format: OutputFormat::Json,
        }
    }

    #[test]
    fn np_range_parsing() {
        assert_eq!(parse_np_range("0..3").unwrap(), vec![0, 1, 2, 3]);
        assert_eq!(parse_np_range("0..=2").unwrap(), vec![0, 1, 2]);
        assert_eq!(parse_np_range("2").unwrap(), vec![2]);
        assert!(parse_np_range("3..1").is_err());
        assert!(parse_np_range("x").is_err());
    }

    #[test]
    fn simulate_mult2_histogram() {
        let report = cmd_simulate(&sim_args("mult2", 0, 1)).unwrap();
        assert_eq!(report.circuit, "mult2");
        assert!(report.measured.is_some());
        let total: f64 = report.histogram.iter().map(|h| h.probability).sum();
        assert!((total - 1.0).abs() < 1e-9);
        assert_eq!(report.stats.laser_ops, report.stats.transforms);
    }

    #[test]
    fn simulate_parallel_matches_sequential_histogram() {
        let seq = cmd_simulate(&sim_args("mult2", 0, 7)).unwrap();
        let par = cmd_simulate(&sim_args("mult2", 2, 7)).unwrap();
        assert_eq!(seq.histogram.len(), par.histogram.len());
        for (a, b) in seq.histogram.iter().zip(&par.histogram) {
            assert_eq!(a.value, b.value);
            assert!((a.probability - b.probability).abs() < 1e-12);
        }
        assert_eq!(seq.measured, par.measured);
    }

    #[test]
    fn predict_row_count_and_preset_errors() {
        let rows = cmd_predict(&PredictArgs {
            bench: "mult2".into(),
            machine: "t3e".into(),
            np: "0..3".into(),
            out: None,
            format: OutputFormat::Csv,
        })
        .unwrap();
        assert_eq!(rows.len(), 4);
        assert!(cmd_predict(&PredictArgs {
            bench: "mult2".into(),
            machine: "cray99".into(),
            np: "0".into(),
            out: None,
            format: OutputFormat::Csv,
        })
        .is_err());
        assert!(cmd_predict(&PredictArgs {
            bench: "nope".into(),
            machine: "t3e".into(),
            np: "0".into(),
            out: None,
            format: OutputFormat::Csv,
        })
        .is_err());
    }

    #[test]
    fn predict_sp2_differs_only_by_machine() {
        let t3e = cmd_predict(&PredictArgs {
            bench: "mult2".into(),
            machine: "t3e".into(),
            np: "0..2".into(),
            out: None,
            format: OutputFormat::Csv,
        })
        .unwrap();
        let sp2 = cmd_predict(&PredictArgs {
            bench: "mult2".into(),
            machine: "sp2".into(),
            np: "0..2".into(),
            out: None,
            format: OutputFormat::Csv,
        })
        .unwrap();
        for (a, b) in t3e.iter().zip(&sp2) {
            assert_eq!(a.n_p, b.n_p);
            assert_ne!(a.t_par, b.t_par);
            // Same profile: speedups stay close even though absolute
            // times differ.
            assert!(a.speedup > 0.0 && b.speedup > 0.0);
        }
    }

    #[test]
    fn compare_single_row() {
        let out = cmd_compare(&CompareArgs {
            bench: "mult2".into(),
            machine: "t3e".into(),
            np: 0,
            seed: 1,
            link_sweep: false,
            out: None,
            format: OutputFormat::Csv,
        })
        .unwrap();
        let lines: Vec<&str> = out.trim().lines().collect();
        assert_eq!(lines.len(), 2);
        let fields: Vec<&str> = lines[1].split(',').collect();
        let pcts: f64 = fields[7..10]
            .iter()
            .map(|f| f.parse::<f64>().unwrap())
            .sum();
        assert!((pcts - 100.0).abs() < 0.5, "phase pcts sum to {pcts}");
        let rel: f64 = fields[6].parse().unwrap();
        assert!(rel.is_finite());
    }

    #[test]
    fn circuit_file_roundtrip_through_cli() {
        let spec = crate::circuits::FactoringSpec {
            n: 15,
            base: 7,
            a_bits: 2,
        };
        let c = build_factor_circuit(&spec).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f15.qc");
        std::fs::write(&path, c.to_text(Radix::Two)).unwrap();
        let args = SimulateArgs {
            source: CircuitSource {
                bench: None,
                circuit: Some(path),
                radix: Some(2),
                link_bits: Some(11),
                state_bits: Some(6),
            },
            np: 1,
            sigma_theta: 0.0,
            decoherence: 0.0,
            seed: 3,
            out: None,
            format: OutputFormat::Json,
        };
        let report = cmd_simulate(&args).unwrap();
        // With 2 A bits the four residues 7^a mod 15 are distinct, so
        // the transformed register is uniform over all 4 values.
        let values: Vec<u64> = report.histogram.iter().map(|h| h.value).collect();
        assert_eq!(values, vec![0, 1, 2, 3]);
        for h in &report.histogram {
            assert!((h.probability - 0.25).abs() < 1e-9);
        }
    }

    #[test]
    fn deterministic_report_for_fixed_seed() {
        let a = cmd_simulate(&sim_args("mult2", 1, 42)).unwrap();
        let b = cmd_simulate(&sim_args("mult2", 1, 42)).unwrap();
        assert_eq!(a.histogram, b.histogram);
        assert_eq!(a.measured, b.measured);
        // Everything except timing fields matches.
        let mut sa = a.stats.clone();
        let mut sb = b.stats.clone();
        for s in [&mut sa, &mut sb] {
            s.compute_seconds = 0.0;
            s.traversal_seconds = 0.0;
            s.comm_seconds = 0.0;
            s.wall_seconds = 0.0;
        }
        assert_eq!(sa, sb);
    }
}
