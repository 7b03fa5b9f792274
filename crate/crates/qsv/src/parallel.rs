//! Parallel execution: ownership by concatenated parallel-bit values,
//! step planning with lookahead, block reorganization over in-process
//! channels, and the worker pool itself.
//!
//! Workers never share amplitude storage. Each worker holds the full
//! link skeleton but only the value blocks it owns; the planner
//! guarantees no laser op in a step touches that step's parallel bits,
//! so every amplitude pair stays within one worker. Error draws are
//! keyed by (global laser-op ordinal, site), not by worker, which makes
//! parallel runs reproduce sequential ones.

use std::collections::BTreeSet;
use std::sync::mpsc::{channel, Receiver, Sender};
use std::sync::{Barrier, Condvar, Mutex};
use std::time::Instant;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::circuits::Circuit;
use crate::gates::{expand_to_lasers, ErrorModel, GateOp, LaserOp};
use crate::statevec::{
    HierarchicalStateVector, LevelSpec, PhaseTimers, Radix, StateIndex,
};
use crate::{Error, Result};

/// One computation step and the parallel-bit set active during it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlannedStep {
    /// Laser-stream index range [start, end).
    pub start: usize,
    pub end: usize,
    /// Parallel bits, most significant owner digit first (descending
    /// site order).
    pub parallel_bits: Vec<usize>,
    /// Parallel bits that changed entering this step; the initial
    /// scatter counts fully.
    pub n_c: u32,
}

/// Complete schedule for one circuit at a fixed parallel-bit count.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionPlan {
    pub n_p: u32,
    pub steps: Vec<PlannedStep>,
}

impl PartitionPlan {
    /// Reorganization count: every step entry is one reorganization,
    /// the first being the initial scatter.
    pub fn reorg_count(&self) -> u64 {
        self.steps.len() as u64
    }
}

/// A value block in flight during reorganization. `None` payload marks
/// an absent (all-zero) block.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockMessage {
    pub id: u64,
    pub amps: Option<Vec<Complex64>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StepStats {
    pub parallel_bits: Vec<usize>,
    pub lasers: u64,
    pub n_c: u32,
    pub blocks_moved: u64,
}

/// Execution statistics, serialized as JSON by the CLI. Timing fields
/// are isolated so they can be masked in golden-file comparisons.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    pub s: u64,
    pub total_bits: u32,
    pub link_bits: u32,
    pub state_bits: u32,
    pub n_p: u32,
    pub workers: u64,
    pub laser_ops: u64,
    pub transforms: u64,
    pub reorg_steps: u64,
    pub blocks_moved: u64,
    pub steps: Vec<StepStats>,
    pub compute_seconds: f64,
    pub traversal_seconds: f64,
    pub comm_seconds: f64,
    pub wall_seconds: f64,
}

/// Owner of a full state index: MSB-first concatenation of the
/// parallel-bit digits.
pub fn owner_of(index: StateIndex, parallel_bits: &[usize], s: Radix) -> usize {
    parallel_bits
        .iter()
        .fold(0usize, |acc, &b| acc * s.value() as usize + index.digit(b, s) as usize)
}

/// Owner of a value block. Block ids live in link space: link site `b`
/// is digit `b - state_bits` of the id.
pub fn owner_of_block(block_id: u64, parallel_bits: &[usize], state_bits: u32, s: Radix) -> usize {
    parallel_bits.iter().fold(0usize, |acc, &b| {
        let digit = (block_id / s.value().pow((b - state_bits as usize) as u32)) % s.value();
        acc * s.value() as usize + digit as usize
    })
}

/// Expands a circuit into its laser stream plus the trailing measured
/// sites, rejecting measurements anywhere but the end.
pub fn expand_circuit(c: &Circuit, s: Radix) -> Result<(Vec<LaserOp>, Option<Vec<usize>>)> {
    c.validate()?;
    let mut lasers = Vec::new();
    let mut measure = None;
    for op in &c.ops {
        if measure.is_some() {
            return Err(Error::InvalidSpec(
                "ops after the final Measure are not supported".into(),
            ));
        }
        if let GateOp::Measure { sites } = op {
            measure = Some(sites.clone());
        } else {
            lasers.extend(expand_to_lasers(op, s)?);
        }
    }
    Ok((lasers, measure))
}

fn laser_sites(op: &LaserOp) -> impl Iterator<Item = usize> {
    std::iter::once(op.target).chain(op.control.map(|(s, _)| s))
}

/// Greedy step planner. Scans the laser stream left to right; when the
/// stream is about to touch a current parallel bit, closes the step and
/// picks the n_p link bits whose next use lies farthest ahead,
/// preferring previously used bits (unused bits carry no amplitude
/// spread, so they are drawn only when too few used bits exist, and are
/// then marked used).
pub fn plan_steps(
    c: &Circuit,
    n_p: u32,
    level_spec: &LevelSpec,
    s: Radix,
) -> Result<PartitionPlan> {
    level_spec.validate_for(c.total_bits)?;
    if n_p > level_spec.link_bits() {
        return Err(Error::InvalidPlan(format!(
            "n_p = {n_p} exceeds the {} link bits",
            level_spec.link_bits()
        )));
    }
    let (lasers, _) = expand_circuit(c, s)?;
    let state_bits = level_spec.state_bits() as usize;
    let m = c.total_bits as usize;
    // Per-site sorted touch positions.
    let mut touches: Vec<Vec<usize>> = vec![Vec::new(); m];
    for (i, op) in lasers.iter().enumerate() {
        for site in laser_sites(op) {
            touches[site].push(i);
        }
    }
    let next_touch = |site: usize, pos: usize| -> usize {
        let t = &touches[site];
        match t.binary_search(&pos) {
            Ok(_) => pos,
            Err(idx) => t.get(idx).copied().unwrap_or(usize::MAX),
        }
    };
    let mut steps = Vec::new();
    let mut used: BTreeSet<usize> = BTreeSet::new();
    let mut current: Vec<usize> = Vec::new();
    let mut pos = 0usize;
    if lasers.is_empty() {
        return Ok(PartitionPlan {
            n_p,
            steps: vec![PlannedStep {
                start: 0,
                end: 0,
                parallel_bits: Vec::new(),
                n_c: n_p,
            }],
        });
    }
    while pos < lasers.len() {
        // Rank candidates: free right now, used bits first, then by
        // farthest next touch; among ties keep bits already in the set.
        let mut chosen: Vec<usize> = Vec::new();
        if n_p > 0 {
            let mut candidates: Vec<(bool, usize, bool, usize)> = (state_bits..m)
                .filter(|&b| next_touch(b, pos) > pos)
                .map(|b| {
                    (
                        used.contains(&b),
                        next_touch(b, pos),
                        current.contains(&b),
                        b,
                    )
                })
                .collect();
            candidates.sort_by(|a, b| {
                b.0.cmp(&a.0)
                    .then(b.1.cmp(&a.1))
                    .then(b.2.cmp(&a.2))
                    .then(a.3.cmp(&b.3))
            });
            if candidates.len() < n_p as usize {
                return Err(Error::InvalidPlan(format!(
                    "only {} free link bits at laser {pos}, need {n_p}",
                    candidates.len()
                )));
            }
            chosen = candidates[..n_p as usize].iter().map(|c| c.3).collect();
            chosen.sort_unstable_by(|a, b| b.cmp(a));
            // Unused picks start acting as used from here on.
            used.extend(chosen.iter().copied());
        }
        let end = chosen
            .iter()
            .map(|&b| next_touch(b, pos))
            .min()
            .unwrap_or(usize::MAX)
            .min(lasers.len());
        debug_assert!(end > pos);
        let n_c = if steps.is_empty() {
            n_p
        } else {
            chosen.iter().filter(|b| !current.contains(b)).count() as u32
        };
        for op in &lasers[pos..end] {
            for site in laser_sites(op) {
                used.insert(site);
            }
        }
        steps.push(PlannedStep {
            start: pos,
            end,
            parallel_bits: chosen.clone(),
            n_c,
        });
        current = chosen;
        pos = end;
    }
    Ok(PartitionPlan { n_p, steps })
}

/// Thread-count gate honoring the `QSV_THREADS` env var.
struct ComputeGate {
    tokens: Mutex<usize>,
    cv: Condvar,
    enabled: bool,
}

impl ComputeGate {
    fn from_env(workers: usize) -> ComputeGate {
        let cap = std::env::var("QSV_THREADS")
            .ok()
            .and_then(|v| v.parse::<usize>().ok())
            .filter(|&v| v >= 1);
        ComputeGate {
            tokens: Mutex::new(cap.unwrap_or(workers)),
            cv: Condvar::new(),
            enabled: cap.map(|c| c < workers).unwrap_or(false),
        }
    }

    fn acquire(&self) {
        if !self.enabled {
            return;
        }
        let mut t = self.tokens.lock().unwrap();
        while *t == 0 {
            t = self.cv.wait(t).unwrap();
        }
        *t -= 1;
    }

    fn release(&self) {
        if !self.enabled {
            return;
        }
        *self.tokens.lock().unwrap() += 1;
        self.cv.notify_one();
    }
}

struct SharedState {
    barrier: Barrier,
    /// One slot per worker for the decoherence all-reduce.
    partial_sums: Mutex<Vec<f64>>,
    gate: ComputeGate,
}

struct WorkerOutcome {
    vector: HierarchicalStateVector,
    timers: PhaseTimers,
    comm_seconds: f64,
    blocks_sent: Vec<u64>,
}

/// Checks statically that no laser in a step touches that step's
/// parallel bits.
fn verify_plan(plan: &PartitionPlan, lasers: &[LaserOp]) -> Result<()> {
    for step in &plan.steps {
        for op in &lasers[step.start..step.end] {
            for site in laser_sites(op) {
                if step.parallel_bits.contains(&site) {
                    return Err(Error::PlanViolation(format!(
                        "laser on site {site} inside a step parallelized over {:?}",
                        step.parallel_bits
                    )));
                }
            }
        }
    }
    Ok(())
}

/// Runs a circuit across `W = s^n_p` workers and gathers the result.
/// The returned state and measurement match a sequential (`n_p = 0`)
/// run with the same seeds.
pub fn run_parallel(
    c: &Circuit,
    s: Radix,
    level_spec: &LevelSpec,
    err: &ErrorModel,
    n_p: u32,
    meas_seed: u64,
) -> Result<(HierarchicalStateVector, RunStats, Option<Vec<u8>>)> {
    err.validate()?;
    let wall_start = Instant::now();
    let (lasers, measure_sites) = expand_circuit(c, s)?;
    let plan = plan_steps(c, n_p, level_spec, s)?;
    verify_plan(&plan, &lasers)?;
    let w = s.pow(n_p) as usize;
    let state_bits = level_spec.state_bits();

    // Initial scatter: split the starting basis vector by step-0 owner.
    let init =
        HierarchicalStateVector::new_basis_state(c.total_bits, s, level_spec.clone(), StateIndex(0))?;
    let mut locals: Vec<HierarchicalStateVector> = (0..w)
        .map(|_| HierarchicalStateVector::empty(s, level_spec.clone()))
        .collect();
    let first_bits = plan.steps[0].parallel_bits.clone();
    let mut init = init;
    let mut initial_blocks = 0u64;
    for id in init.allocated_block_ids() {
        let owner = owner_of_block(id, &first_bits, state_bits, s);
        if let Some(amps) = init.take_block(id) {
            locals[owner].insert_block(id, amps);
            initial_blocks += 1;
        }
    }

    let shared = SharedState {
        barrier: Barrier::new(w),
        partial_sums: Mutex::new(vec![0.0; w]),
        gate: ComputeGate::from_env(w),
    };
    let mut senders: Vec<Vec<Sender<Vec<BlockMessage>>>> = vec![Vec::new(); w];
    let mut receivers: Vec<Receiver<Vec<BlockMessage>>> = Vec::new();
    for _ in 0..w {
        let (tx, rx) = channel();
        receivers.push(rx);
        for worker_senders in senders.iter_mut() {
            worker_senders.push(tx.clone());
        }
    }

    let outcomes: Vec<Result<WorkerOutcome>> = std::thread::scope(|scope| {
        let mut handles = Vec::new();
        let shared = &shared;
        let plan = &plan;
        let lasers = &lasers;
        for (wid, (local, (rx, txs))) in locals
            .drain(..)
            .zip(receivers.drain(..).zip(senders.drain(..)))
            .enumerate()
        {
            handles.push(scope.spawn(move || {
                worker_main(wid, w, local, rx, txs, shared, plan, lasers, err, s, state_bits)
            }));
        }
        handles
            .into_iter()
            .map(|h| {
                h.join()
                    .unwrap_or_else(|_| Err(Error::Transport("worker panicked".into())))
            })
            .collect()
    });

    let mut gathered = HierarchicalStateVector::empty(s, level_spec.clone());
    let mut timers = PhaseTimers::default();
    let mut comm_seconds = 0.0;
    let mut blocks_moved = initial_blocks;
    let mut per_step_moved = vec![0u64; plan.steps.len()];
    for outcome in outcomes {
        let mut o = outcome?;
        for id in o.vector.allocated_block_ids() {
            if let Some(amps) = o.vector.take_block(id) {
                gathered.insert_block(id, amps);
            }
        }
        timers.traversal += o.timers.traversal;
        timers.compute += o.timers.compute;
        comm_seconds += o.comm_seconds;
        for (k, sent) in o.blocks_sent.iter().enumerate() {
            per_step_moved[k + 1] += sent;
            blocks_moved += sent;
        }
    }
    per_step_moved[0] = initial_blocks;

    let measured = match &measure_sites {
        Some(sites) => {
            let mut rng = ChaCha8Rng::seed_from_u64(meas_seed);
            Some(gathered.measure_register(sites, &mut rng)?)
        }
        None => None,
    };

    let dec_on = err.decoherence_rate > 0.0;
    let stats = RunStats {
        s: s.value(),
        total_bits: c.total_bits,
        link_bits: level_spec.link_bits(),
        state_bits,
        n_p,
        workers: w as u64,
        laser_ops: lasers.len() as u64,
        transforms: lasers.len() as u64 * if dec_on { 3 } else { 1 },
        reorg_steps: plan.reorg_count(),
        blocks_moved,
        steps: plan
            .steps
            .iter()
            .zip(&per_step_moved)
            .map(|(st, &moved)| StepStats {
                parallel_bits: st.parallel_bits.clone(),
                lasers: (st.end - st.start) as u64,
                n_c: st.n_c,
                blocks_moved: moved,
            })
            .collect(),
        compute_seconds: timers.compute,
        traversal_seconds: timers.traversal,
        comm_seconds,
        wall_seconds: wall_start.elapsed().as_secs_f64(),
    };
    Ok((gathered, stats, measured))
}

#[allow(clippy::too_many_arguments)]
fn worker_main(
    wid: usize,
    w: usize,
    mut local: HierarchicalStateVector,
    rx: Receiver<Vec<BlockMessage>>,
    txs: Vec<Sender<Vec<BlockMessage>>>,
    shared: &SharedState,
    plan: &PartitionPlan,
    lasers: &[LaserOp],
    err: &ErrorModel,
    s: Radix,
    state_bits: u32,
) -> Result<WorkerOutcome> {
    let dec_on = err.decoherence_rate > 0.0;
    let mut timers = PhaseTimers::default();
    let mut comm_seconds = 0.0;
    let mut blocks_sent = Vec::new();
    for (k, step) in plan.steps.iter().enumerate() {
        if !dec_on {
            shared.gate.acquire();
        }
        for (i, op) in lasers[step.start..step.end].iter().enumerate() {
            let ordinal = (step.start + i) as u64;
            let delta = err.angle_error(ordinal, op.target);
            if dec_on {
                shared.gate.acquire();
            }
            op.apply(&mut local, delta, &mut timers)?;
            if dec_on {
                let site = err.decoherence_site(ordinal, local.total_bits());
                local.scale_excited(site, (1.0 - err.decoherence_rate).sqrt())?;
                let partial = local.norm_sq();
                shared.gate.release();
                // All-reduce: everyone posts a slot, reads the total,
                // then re-arms for the next exchange.
                let t0 = Instant::now();
                shared.partial_sums.lock().unwrap()[wid] = partial;
                shared.barrier.wait();
                let total: f64 = shared.partial_sums.lock().unwrap().iter().sum();
                shared.barrier.wait();
                comm_seconds += t0.elapsed().as_secs_f64();
                if total < 1e-300 {
                    return Err(Error::DegenerateState);
                }
                local.scale_all(1.0 / total.sqrt());
            }
        }
        if !dec_on {
            shared.gate.release();
        }
        // Reorganize toward the next step's ownership.
        if let Some(next) = plan.steps.get(k + 1) {
            let t0 = Instant::now();
            let mut outgoing: Vec<Vec<BlockMessage>> = vec![Vec::new(); w];
            let mut sent = 0u64;
            for id in local.allocated_block_ids() {
                let new_owner = owner_of_block(id, &next.parallel_bits, state_bits, s);
                if new_owner != wid {
                    let amps = local.take_block(id).expect("listed block present");
                    outgoing[new_owner].push(BlockMessage {
                        id,
                        amps: Some(amps),
                    });
                    sent += 1;
                }
            }
            for (dest, msgs) in outgoing.into_iter().enumerate() {
                if dest != wid {
                    txs[dest]
                        .send(msgs)
                        .map_err(|e| Error::Transport(e.to_string()))?;
                }
            }
            for _ in 0..w - 1 {
                let msgs = rx
                    .recv()
                    .map_err(|e| Error::Transport(e.to_string()))?;
                for msg in msgs {
                    if let Some(amps) = msg.amps {
                        if local.block(msg.id).is_some() {
                            return Err(Error::Transport(format!(
                                "duplicate block {} delivered to worker {wid}",
                                msg.id
                            )));
                        }
                        local.insert_block(msg.id, amps);
                    }
                }
            }
            shared.barrier.wait();
            comm_seconds += t0.elapsed().as_secs_f64();
            blocks_sent.push(sent);
        }
    }
    Ok(WorkerOutcome {
        vector: local,
        timers,
        comm_seconds,
        blocks_sent,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuits::{build_factor_circuit, FactoringSpec};
    use std::f64::consts::FRAC_PI_2;

    fn toy_circuit(total_bits: u32) -> Circuit {
        let mut c = Circuit::new(total_bits);
        for site in 0..total_bits as usize {
            c.ops.push(GateOp::Rotate {
                site,
                theta: FRAC_PI_2,
                phi: FRAC_PI_2,
            });
        }
        for site in 0..total_bits as usize - 1 {
            c.ops.push(GateOp::CNot {
                control: site,
                target: site + 1,
            });
        }
        for site in (0..total_bits as usize).rev() {
            c.ops.push(GateOp::Rotate {
                site,
                theta: 0.3,
                phi: 0.1,
            });
        }
        c
    }

    #[test]
    fn owner_concatenation() {
        // s=2, bits [b3, b1] (MSB first), b3=1 b1=0 -> worker 2.
        let idx = StateIndex(0b1000);
        assert_eq!(owner_of(idx, &[3, 1], Radix::Two), 2);
        assert_eq!(owner_of(idx, &[], Radix::Two), 0);
        assert_eq!(owner_of(StateIndex(2 * 243), &[5], Radix::Three), 2);
    }

    #[test]
    fn block_owner_matches_index_owner() {
        let spec = LevelSpec::two_level(4, 3).unwrap();
        for block_id in 0..16u64 {
            let index = StateIndex(block_id << 3);
            for bits in [vec![6, 4], vec![5, 3], vec![6]] {
                assert_eq!(
                    owner_of_block(block_id, &bits, spec.state_bits(), Radix::Two),
                    owner_of(index, &bits, Radix::Two),
                    "id {block_id} bits {bits:?}"
                );
            }
        }
    }

    #[test]
    fn plan_never_touches_parallel_bits() {
        let spec = FactoringSpec {
            n: 15,
            base: 7,
            a_bits: 3,
        };
        let c = build_factor_circuit(&spec).unwrap();
        let ls = LevelSpec::two_level(12, 6).unwrap();
        for n_p in 0..5u32 {
            let plan = plan_steps(&c, n_p, &ls, Radix::Two).unwrap();
            let (lasers, _) = expand_circuit(&c, Radix::Two).unwrap();
            verify_plan(&plan, &lasers).unwrap();
            assert_eq!(plan.steps.first().unwrap().n_c, n_p);
            assert_eq!(plan.steps.last().unwrap().end, lasers.len());
            // Steps tile the stream.
            let mut pos = 0;
            for st in &plan.steps {
                assert_eq!(st.start, pos);
                assert!(st.end > st.start);
                assert_eq!(st.parallel_bits.len(), n_p as usize);
                pos = st.end;
            }
        }
    }

    #[test]
    fn plan_single_step_when_links_untouched() {
        // All gates inside the value level: one step regardless of n_p.
        let mut c = Circuit::new(8);
        for site in 0..3 {
            c.ops.push(GateOp::Rotate {
                site,
                theta: 0.5,
                phi: 0.0,
            });
        }
        let ls = LevelSpec::two_level(5, 3).unwrap();
        for n_p in 0..3 {
            let plan = plan_steps(&c, n_p, &ls, Radix::Two).unwrap();
            assert_eq!(plan.reorg_count(), 1);
        }
    }

    #[test]
    fn plan_alternating_bits_forces_steps() {
        // Three gates alternating between the only two link bits with
        // n_p = 1 forces a step per gate.
        let mut c = Circuit::new(3);
        for site in [1, 2, 1] {
            c.ops.push(GateOp::Rotate {
                site,
                theta: 0.5,
                phi: 0.0,
            });
        }
        let ls = LevelSpec::two_level(2, 1).unwrap();
        let plan = plan_steps(&c, 1, &ls, Radix::Two).unwrap();
        assert_eq!(plan.steps.len(), 3);
    }

    #[test]
    fn plan_rejects_oversized_np() {
        let c = toy_circuit(4);
        let ls = LevelSpec::two_level(2, 2).unwrap();
        assert!(plan_steps(&c, 3, &ls, Radix::Two).is_err());
    }

    fn distance(a: &HierarchicalStateVector, b: &HierarchicalStateVector) -> f64 {
        let (da, db) = (a.to_dense().unwrap(), b.to_dense().unwrap());
        da.iter()
            .zip(&db)
            .map(|(x, y)| (x - y).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    #[test]
    fn parallel_matches_sequential_ideal() {
        let c = toy_circuit(8);
        let ls = LevelSpec::two_level(5, 3).unwrap();
        let err = ErrorModel::ideal();
        let (base, stats0, _) = run_parallel(&c, Radix::Two, &ls, &err, 0, 9).unwrap();
        for n_p in 1..=2 {
            let (v, stats, _) = run_parallel(&c, Radix::Two, &ls, &err, n_p, 9).unwrap();
            assert!(distance(&base, &v) < 1e-12, "n_p = {n_p}");
            assert_eq!(stats.laser_ops, stats0.laser_ops);
        }
    }

    #[test]
    fn parallel_matches_sequential_with_errors() {
        let c = toy_circuit(8);
        let ls = LevelSpec::two_level(5, 3).unwrap();
        let err = ErrorModel {
            sigma_theta: 0.01,
            decoherence_rate: 0.001,
            seed: 5,
        };
        let (base, _, _) = run_parallel(&c, Radix::Two, &ls, &err, 0, 9).unwrap();
        assert!((base.norm_sq() - 1.0).abs() < 1e-9);
        for n_p in 1..=2 {
            let (v, _, _) = run_parallel(&c, Radix::Two, &ls, &err, n_p, 9).unwrap();
            assert!(distance(&base, &v) < 1e-12, "n_p = {n_p}");
        }
    }

    #[test]
    fn parallel_three_state() {
        let c = toy_circuit(6);
        let ls = LevelSpec::two_level(4, 2).unwrap();
        let err = ErrorModel::ideal();
        let (base, _, _) = run_parallel(&c, Radix::Three, &ls, &err, 0, 3).unwrap();
        for n_p in 1..=2 {
            let (v, _, _) = run_parallel(&c, Radix::Three, &ls, &err, n_p, 3).unwrap();
            assert!(distance(&base, &v) < 1e-12, "n_p = {n_p}");
        }
    }

    #[test]
    fn parallel_measurement_matches_sequential() {
        let mut c = toy_circuit(6);
        c.ops.push(GateOp::Measure {
            sites: vec![0, 1, 2],
        });
        let ls = LevelSpec::two_level(3, 3).unwrap();
        let err = ErrorModel::ideal();
        let (_, _, m0) = run_parallel(&c, Radix::Two, &ls, &err, 0, 123).unwrap();
        let (_, _, m1) = run_parallel(&c, Radix::Two, &ls, &err, 1, 123).unwrap();
        assert_eq!(m0, m1);
        assert!(m0.is_some());
    }

    #[test]
    fn w1_matches_circuits_execute() {
        let c = toy_circuit(6);
        let ls = LevelSpec::two_level(3, 3).unwrap();
        let err = ErrorModel::ideal();
        let (v, stats, _) = run_parallel(&c, Radix::Two, &ls, &err, 0, 7).unwrap();
        let out = crate::circuits::execute(&c, Radix::Two, &ls, &err, 7).unwrap();
        assert!(distance(&v, &out.state) < 1e-13);
        assert_eq!(stats.laser_ops, out.laser_ops);
    }

    #[test]
    fn ownership_partition_is_exhaustive() {
        // Every block id maps to exactly one worker.
        let bits = vec![7usize, 5];
        for id in 0..64u64 {
            let o = owner_of_block(id, &bits, 3, Radix::Two);
            assert!(o < 4);
        }
        let mut counts = [0usize; 4];
        for id in 0..64u64 {
            counts[owner_of_block(id, &bits, 3, Radix::Two)] += 1;
        }
        assert_eq!(counts, [16, 16, 16, 16]);
    }

    #[test]
    fn run_stats_serialize() {
        let c = toy_circuit(6);
        let ls = LevelSpec::two_level(3, 3).unwrap();
        let (_, stats, _) =
            run_parallel(&c, Radix::Two, &ls, &ErrorModel::ideal(), 1, 0).unwrap();
        let json = serde_json::to_string(&stats).unwrap();
        let back: RunStats = serde_json::from_str(&json).unwrap();
        assert_eq!(back, stats);
        assert!(stats.reorg_steps >= 1);
    }
}
