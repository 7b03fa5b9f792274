//! Analytical execution-time model: machine parameter presets, step
//! profiles extracted from planned circuits, and the closed-form
//! predictors for sequential, dynamic, parallel and decoherence runs.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::circuits::{Benchmark, Circuit};
use crate::gates::GateOp;
use crate::parallel::{expand_circuit, plan_steps, PartitionPlan};
use crate::statevec::{LevelSpec, Radix};
use crate::{Error, Result};

/// Measured machine constants. `t_op2`/`t_op3` are seconds per state
/// operation in the two- and three-state models, `t_t` seconds per link
/// traversal unit, `t_lat` seconds per message, `t_b` seconds per byte,
/// `t_lr` seconds per block reorganization, `q` bytes per amplitude.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MachineParams {
    #[serde(default)]
    pub name: String,
    pub t_op2: f64,
    pub t_op3: f64,
    pub t_t: f64,
    pub t_lat: f64,
    pub t_b: f64,
    pub t_lr: f64,
    #[serde(default = "default_q")]
    pub q: f64,
}

fn default_q() -> f64 {
    16.0
}

impl MachineParams {
    pub fn t3e() -> MachineParams {
        MachineParams {
            name: "t3e".into(),
            t_op2: 1.5e-6,
            t_op3: 9.0e-7,
            t_t: 4.5e-7,
            t_lat: 6e-6,
            t_b: 1e-9,
            t_lr: 8e-5,
            q: 16.0,
        }
    }

    pub fn sp2() -> MachineParams {
        MachineParams {
            name: "sp2".into(),
            t_op2: 2.3e-6,
            t_op3: 1.28e-6,
            t_t: 1e-6,
            t_lat: 2e-5,
            t_b: 2e-8,
            t_lr: 5e-4,
            q: 16.0,
        }
    }

    pub fn preset(name: &str) -> Result<MachineParams> {
        match name {
            "t3e" => Ok(MachineParams::t3e()),
            "sp2" => Ok(MachineParams::sp2()),
            other => Err(Error::UnknownPreset(other.to_string())),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<MachineParams> {
        let mp: MachineParams =
            toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        mp.validate()?;
        Ok(mp)
    }

    pub fn from_file(path: &Path) -> Result<MachineParams> {
        let text = std::fs::read_to_string(path)?;
        let mut mp = MachineParams::from_toml_str(&text)?;
        if mp.name.is_empty() {
            mp.name = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
        }
        Ok(mp)
    }

    /// Preset name or a config file path.
    pub fn resolve(spec: &str) -> Result<MachineParams> {
        match MachineParams::preset(spec) {
            Ok(mp) => Ok(mp),
            Err(_) if Path::new(spec).exists() => MachineParams::from_file(Path::new(spec)),
            Err(e) => Err(e),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (label, v) in [
            ("t_op2", self.t_op2),
            ("t_op3", self.t_op3),
            ("t_t", self.t_t),
            ("t_lat", self.t_lat),
            ("t_b", self.t_b),
            ("t_lr", self.t_lr),
            ("q", self.q),
        ] {
            if !(v > 0.0) {
                return Err(Error::InvalidConfig(format!("{label} must be > 0, got {v}")));
            }
        }
        Ok(())
    }

    pub fn t_op(&self, s: Radix) -> f64 {
        match s {
            Radix::Two => self.t_op2,
            Radix::Three => self.t_op3,
        }
    }

    /// All time constants scaled by `c` (used by the linearity check).
    pub fn scaled(&self, c: f64) -> MachineParams {
        MachineParams {
            name: self.name.clone(),
            t_op2: self.t_op2 * c,
            t_op3: self.t_op3 * c,
            t_t: self.t_t * c,
            t_lat: self.t_lat * c,
            t_b: self.t_b * c,
            t_lr: self.t_lr * c,
            q: self.q,
        }
    }
}

/// One step of the model input: laser ops in the step, total and link
/// bits used so far, and parallel bits changed entering the step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProfileStep {
    pub l: u64,
    pub n_b: u32,
    pub n_l: u32,
    pub n_c: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepProfile {
    pub steps: Vec<ProfileStep>,
    pub l_total: u64,
    pub n_b_total: u32,
}

impl StepProfile {
    pub fn validate(&self) -> Result<()> {
        let sum: u64 = self.steps.iter().map(|s| s.l).sum();
        if sum != self.l_total {
            return Err(Error::InvalidProfile(format!(
                "step laser counts sum to {sum}, l_total is {}",
                self.l_total
            )));
        }
        let mut prev = 0u32;
        for s in &self.steps {
            if s.n_b < prev {
                return Err(Error::InvalidProfile("n_b must be non-decreasing".into()));
            }
            if s.n_l > s.n_b || s.n_c > s.n_l {
                return Err(Error::InvalidProfile(format!(
                    "need n_c <= n_l <= n_b, got {s:?}"
                )));
            }
            prev = s.n_b;
        }
        Ok(())
    }

    /// Rescales step laser counts so they sum to `target` while keeping
    /// the step structure; used when predicting from published totals.
    pub fn rescaled(&self, target: u64) -> StepProfile {
        if self.l_total == 0 {
            return self.clone();
        }
        let mut steps = self.steps.clone();
        let ratio = target as f64 / self.l_total as f64;
        let mut assigned = 0u64;
        for s in steps.iter_mut() {
            s.l = (s.l as f64 * ratio).round() as u64;
            assigned += s.l;
        }
        // Absorb rounding drift in the largest step.
        if let Some(big) = steps.iter_mut().max_by_key(|s| s.l) {
            big.l = (big.l + target).saturating_sub(assigned);
        }
        StepProfile {
            steps,
            l_total: target,
            n_b_total: self.n_b_total,
        }
    }

    pub fn min_n_l(&self) -> u32 {
        self.steps.iter().map(|s| s.n_l).min().unwrap_or(0)
    }
}

/// Time for one reorganization step:
/// `(s^n_l - s^(n_l - n_c)) * (t_lat + t_b*q*s^(n_b - n_l) + t_lr)`.
pub fn t_reorg(n_l: u32, n_b: u32, n_c: u32, s: Radix, mp: &MachineParams) -> Result<f64> {
    if !(n_c <= n_l && n_l <= n_b) {
        return Err(Error::InvalidProfile(format!(
            "t_reorg needs n_c <= n_l <= n_b, got {n_c}, {n_l}, {n_b}"
        )));
    }
    let base = s.value() as f64;
    let blocks = base.powi(n_l as i32) - base.powi((n_l - n_c) as i32);
    Ok(blocks * (mp.t_lat + mp.t_b * mp.q * base.powi((n_b - n_l) as i32) + mp.t_lr))
}

/// Decoherence communication time: two messages per laser op.
pub fn t_dec(l_total: u64, mp: &MachineParams) -> f64 {
    2.0 * l_total as f64 * mp.t_lat
}

/// Compute time for `l` laser ops: `l * (s^n_l * t_t + s^(n_b-1) * t_op)`.
pub fn t_comp(l: u64, n_b: u32, n_l: u32, s: Radix, mp: &MachineParams) -> f64 {
    let base = s.value() as f64;
    l as f64 * (base.powi(n_l as i32) * mp.t_t + base.powi(n_b as i32 - 1) * mp.t_op(s))
}

/// Flat-structure sequential time: all bits busy, zero traversal.
pub fn t_seqflat(l_total: u64, n_b_total: u32, s: Radix, mp: &MachineParams) -> f64 {
    t_comp(l_total, n_b_total, 0, s, mp)
}

/// Sequential time over a dynamically allocated structure.
pub fn t_seqdyn(profile: &StepProfile, s: Radix, mp: &MachineParams) -> Result<f64> {
    profile.validate()?;
    Ok(profile
        .steps
        .iter()
        .map(|st| t_comp(st.l, st.n_b, st.n_l, s, mp))
        .sum())
}

/// Parallel time: per-step compute shrinks by `s^n_p`, plus per-step
/// reorganization cost.
pub fn t_par(profile: &StepProfile, n_p: u32, s: Radix, mp: &MachineParams) -> Result<f64> {
    profile.validate()?;
    if n_p > profile.min_n_l() {
        return Err(Error::InvalidProfile(format!(
            "n_p = {n_p} exceeds the smallest step n_l = {}",
            profile.min_n_l()
        )));
    }
    let mut total = 0.0;
    for st in &profile.steps {
        total += t_comp(st.l, st.n_b - n_p, st.n_l, s, mp);
        total += t_reorg(st.n_l, st.n_b, st.n_c, s, mp)?;
    }
    Ok(total)
}

/// Parallel time with decoherence: tripled transforms plus the global
/// sum exchange.
pub fn t_pardec(profile: &StepProfile, n_p: u32, s: Radix, mp: &MachineParams) -> Result<f64> {
    Ok(3.0 * t_par(profile, n_p, s, mp)? + t_dec(profile.l_total, mp))
}

/// Sequential time with decoherence.
pub fn t_seqdec(profile: &StepProfile, s: Radix, mp: &MachineParams) -> Result<f64> {
    Ok(3.0 * t_seqdyn(profile, s, mp)?)
}

/// Derives the model input from a planned circuit: per step, the laser
/// count, the cumulative count of total/link bits touched so far, and
/// the plan's n_c.
pub fn extract_profile(
    c: &Circuit,
    plan: &PartitionPlan,
    level_spec: &LevelSpec,
    s: Radix,
) -> Result<StepProfile> {
    let (lasers, _) = expand_circuit(c, s)?;
    let state_bits = level_spec.state_bits() as usize;
    let mut seen: std::collections::BTreeSet<usize> = std::collections::BTreeSet::new();
    let mut steps = Vec::new();
    let mut l_total = 0u64;
    for st in &plan.steps {
        for op in &lasers[st.start..st.end] {
            seen.insert(op.target);
            if let Some((site, _)) = op.control {
                seen.insert(site);
            }
        }
        let n_b = seen.len() as u32;
        let n_l = seen.iter().filter(|&&b| b >= state_bits).count() as u32;
        let l = (st.end - st.start) as u64;
        l_total += l;
        steps.push(ProfileStep {
            l,
            n_b,
            n_l,
            n_c: st.n_c.min(n_l),
        });
    }
    let profile = StepProfile {
        steps,
        l_total,
        n_b_total: seen.len() as u32,
    };
    profile.validate()?;
    Ok(profile)
}

/// One row of the prediction sweep output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRow {
    pub benchmark: String,
    pub machine: String,
    pub s: u64,
    pub n_p: u32,
    pub t_seqflat: f64,
    pub t_seqdyn: f64,
    pub t_par: f64,
    pub t_pardec: f64,
    pub speedup: f64,
}

/// Profile for a catalog benchmark: build its circuit, plan it at the
/// requested n_p, extract the profile, and rescale laser counts to the
/// published total so predictions use the catalog figures.
pub fn benchmark_profile(bench: &Benchmark, n_p: u32) -> Result<StepProfile> {
    let spec = bench.factoring.ok_or_else(|| {
        Error::InvalidSpec(format!("benchmark {} has no circuit builder", bench.name))
    })?;
    let mut c = crate::circuits::build_factor_circuit(&spec)?;
    if let Some(GateOp::Measure { .. }) = c.ops.last() {
        c.ops.pop();
    }
    let level_spec = bench.level_spec();
    let plan = plan_steps(&c, n_p, &level_spec, bench.s)?;
    let profile = extract_profile(&c, &plan, &level_spec, bench.s)?;
    Ok(profile.rescaled(bench.lasers))
}

/// Prediction sweep over `n_p` values for one benchmark and machine.
/// One profile, extracted at the finest requested granularity, feeds
/// every row so the sweep is self-consistent.
pub fn predict(bench: &Benchmark, mp: &MachineParams, nps: &[u32]) -> Result<Vec<PredictionRow>> {
    mp.validate()?;
    let max_np = nps.iter().copied().max().unwrap_or(0);
    let profile = benchmark_profile(bench, max_np)?;
    let seqdyn = t_seqdyn(&profile, bench.s, mp)?;
    let seqflat = t_seqflat(bench.lasers, bench.total_bits, bench.s, mp);
    let mut rows = Vec::new();
    for &n_p in nps {
        let par = t_par(&profile, n_p, bench.s, mp)?;
        let pardec = t_pardec(&profile, n_p, bench.s, mp)?;
        rows.push(PredictionRow {
            benchmark: bench.name.to_string(),
            machine: mp.name.clone(),
            s: bench.s.value(),
            n_p,
            t_seqflat: seqflat,
            t_seqdyn: seqdyn,
            t_par: par,
            t_pardec: pardec,
            speedup: seqdyn / par,
        });
    }
    Ok(rows)
}

pub fn rows_to_csv(rows: &[PredictionRow]) -> String {
    let mut out =
        String::from("benchmark,machine,s,n_p,t_seqflat,t_seqdyn,t_par,t_pardec,speedup\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{:.6},{:.6},{:.6},{:.6},{:.4}\n",
            r.benchmark, r.machine, r.s, r.n_p, r.t_seqflat, r.t_seqdyn, r.t_par, r.t_pardec,
            r.speedup
        ));
    }
    out
}

/// Model time versus link-bit count at fixed n_p: re-plan the same
/// circuit under each two-level geometry and evaluate `t_par`.
/// Geometries that cannot be partitioned at all (too few spare link
/// bits to keep n_p of them idle through any step) are reported as
/// infinite cost rather than dropped, so the sweep shows the full
/// feasibility window.
pub fn link_bit_sweep(
    c: &Circuit,
    s: Radix,
    n_p: u32,
    mp: &MachineParams,
    link_range: std::ops::RangeInclusive<u32>,
) -> Result<Vec<(u32, f64)>> {
    let mut out = Vec::new();
    for link_bits in link_range {
        if link_bits >= c.total_bits {
            continue;
        }
        if link_bits < n_p {
            out.push((link_bits, f64::INFINITY));
            continue;
        }
        let level_spec = LevelSpec::two_level(link_bits, c.total_bits - link_bits)?;
        let t = match plan_steps(c, n_p, &level_spec, s) {
            Ok(plan) => {
                let profile = extract_profile(c, &plan, &level_spec, s)?;
                if n_p > profile.min_n_l() {
                    f64::INFINITY
                } else {
                    t_par(&profile, n_p, s, mp)?
                }
            }
            Err(_) => f64::INFINITY,
        };
        out.push((link_bits, t));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuits::find_benchmark;

    fn sample_profile() -> StepProfile {
        StepProfile {
            steps: vec![
                ProfileStep {
                    l: 100,
                    n_b: 8,
                    n_l: 3,
                    n_c: 2,
                },
                ProfileStep {
                    l: 400,
                    n_b: 12,
                    n_l: 6,
                    n_c: 1,
                },
                ProfileStep {
                    l: 500,
                    n_b: 16,
                    n_l: 10,
                    n_c: 2,
                },
            ],
            l_total: 1000,
            n_b_total: 16,
        }
    }

    #[test]
    fn reorg_zero_when_nothing_changes() {
        let mp = MachineParams::t3e();
        assert_eq!(t_reorg(10, 16, 0, Radix::Two, &mp).unwrap(), 0.0);
        assert!(t_reorg(4, 3, 0, Radix::Two, &mp).is_err());
        assert!(t_reorg(4, 8, 5, Radix::Two, &mp).is_err());
    }

    #[test]
    fn reorg_reference_value() {
        // s=2, n_l=10, n_b=16, n_c=10, T3E, q=16:
        // 1023 * (6e-6 + 1.024e-6 + 8e-5) ~= 8.90e-2.
        let v = t_reorg(10, 16, 10, Radix::Two, &MachineParams::t3e()).unwrap();
        assert!((v - 1023.0 * (6e-6 + 1.024e-6 + 8e-5)).abs() < 1e-12);
        assert!((v - 8.90e-2).abs() < 1e-3);
    }

    #[test]
    fn dec_reference_value() {
        let v = t_dec(7137, &MachineParams::t3e());
        assert!((v - 8.5644e-2).abs() < 1e-9);
        assert_eq!(t_dec(0, &MachineParams::t3e()), 0.0);
    }

    #[test]
    fn comp_reference_value() {
        // l=7137, n_b=16, n_l=10, s=2, T3E ~= 354 s.
        let v = t_comp(7137, 16, 10, Radix::Two, &MachineParams::t3e());
        let expect = 7137.0 * (1024.0 * 4.5e-7 + 32768.0 * 1.5e-6);
        assert!((v - expect).abs() < 1e-9);
        assert!((v - 354.0).abs() < 2.0);
        // Flat variant.
        let flat = t_seqflat(7137, 16, Radix::Two, &MachineParams::t3e());
        assert!((flat - 350.9).abs() < 0.5);
        assert_eq!(flat, t_comp(7137, 16, 0, Radix::Two, &MachineParams::t3e()));
    }

    #[test]
    fn seqdec_identity() {
        let mp = MachineParams::sp2();
        let p = sample_profile();
        let dyn_t = t_seqdyn(&p, Radix::Two, &mp).unwrap();
        assert_eq!(t_seqdec(&p, Radix::Two, &mp).unwrap(), 3.0 * dyn_t);
    }

    #[test]
    fn par_degenerates_to_seqdyn() {
        let mp = MachineParams::t3e();
        let mut p = sample_profile();
        for st in p.steps.iter_mut() {
            st.n_c = 0;
        }
        assert_eq!(
            t_par(&p, 0, Radix::Two, &mp).unwrap(),
            t_seqdyn(&p, Radix::Two, &mp).unwrap()
        );
    }

    #[test]
    fn pardec_identity() {
        let mp = MachineParams::t3e();
        let p = sample_profile();
        let par = t_par(&p, 2, Radix::Two, &mp).unwrap();
        let pardec = t_pardec(&p, 2, Radix::Two, &mp).unwrap();
        assert!((pardec - 3.0 * par - 2.0 * 1000.0 * mp.t_lat).abs() < 1e-15);
    }

    #[test]
    fn scaling_linearity() {
        let mp = MachineParams::t3e();
        let scaled = mp.scaled(3.5);
        let p = sample_profile();
        for n_p in 0..=2 {
            let a = t_par(&p, n_p, Radix::Two, &mp).unwrap();
            let b = t_par(&p, n_p, Radix::Two, &scaled).unwrap();
            assert!((b / a - 3.5).abs() < 1e-12);
        }
        let a = t_seqdyn(&p, Radix::Two, &mp).unwrap();
        let b = t_seqdyn(&p, Radix::Two, &scaled).unwrap();
        assert!((b / a - 3.5).abs() < 1e-12);
    }

    #[test]
    fn np_exceeding_min_nl_rejected() {
        let p = sample_profile();
        assert!(t_par(&p, 4, Radix::Two, &MachineParams::t3e()).is_err());
    }

    #[test]
    fn profile_validation() {
        let mut p = sample_profile();
        p.l_total = 999;
        assert!(p.validate().is_err());
        let mut p = sample_profile();
        p.steps[2].n_b = 4;
        assert!(p.validate().is_err());
    }

    #[test]
    fn rescale_preserves_total() {
        let p = sample_profile();
        let r = p.rescaled(7137);
        assert_eq!(r.steps.iter().map(|s| s.l).sum::<u64>(), 7137);
        assert_eq!(r.l_total, 7137);
        assert_eq!(r.steps.len(), p.steps.len());
    }

    #[test]
    fn preset_lookup_and_toml() {
        assert!(MachineParams::preset("t3e").is_ok());
        assert!(MachineParams::preset("cray").is_err());
        let text = "t_op2 = 1e-6\nt_op3 = 1e-6\nt_t = 1e-7\nt_lat = 1e-5\nt_b = 1e-9\nt_lr = 1e-4\n";
        let mp = MachineParams::from_toml_str(text).unwrap();
        assert_eq!(mp.q, 16.0);
        assert!(MachineParams::from_toml_str("t_op2 = -1.0").is_err());
        assert!(MachineParams::from_toml_str(&format!("{text}bogus = 1")).is_err());
    }

    #[test]
    fn mult2_t3e_table_reproduction() {
        // Published totals for 1/2/4/8 processors: 282/143/73/38.
        let bench = find_benchmark("mult2").unwrap();
        let mp = MachineParams::t3e();
        let rows = predict(&bench, &mp, &[0, 1, 2, 3]).unwrap();
        let targets = [282.0, 143.0, 73.0, 38.0];
        for (row, target) in rows.iter().zip(targets) {
            let rel = (row.t_par - target) / target;
            assert!(
                rel.abs() <= 0.30,
                "n_p = {}: predicted {:.1}, target {target}, rel {rel:.2}",
                row.n_p,
                row.t_par
            );
        }
        for pair in rows.windows(2) {
            let ratio = pair[0].t_par / pair[1].t_par;
            assert!(
                (1.7..=2.1).contains(&ratio),
                "doubling ratio {ratio:.3} out of range"
            );
        }
    }

    #[test]
    fn seqdyn_below_seqflat_on_staged_profile() {
        let p = sample_profile();
        let mp = MachineParams::t3e();
        let dyn_t = t_seqdyn(&p, Radix::Two, &mp).unwrap();
        let flat = t_seqflat(p.l_total, p.n_b_total, Radix::Two, &mp);
        assert!(dyn_t < flat);
    }

    #[test]
    fn csv_output_shape() {
        let bench = find_benchmark("mult2").unwrap();
        let rows = predict(&bench, &MachineParams::t3e(), &[0, 1]).unwrap();
        let csv = rows_to_csv(&rows);
        let lines: Vec<&str> = csv.trim().lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(
            lines[0],
            "benchmark,machine,s,n_p,t_seqflat,t_seqdyn,t_par,t_pardec,speedup"
        );
        assert!(lines[1].starts_with("mult2,t3e,2,0,"));
    }
}
