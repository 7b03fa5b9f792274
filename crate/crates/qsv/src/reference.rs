//! Flat dense reference simulator.
//!
//! Deliberately independent of the hierarchical storage code: a plain
//! `Vec<Complex64>` indexed by the full state index, with its own index
//! arithmetic. Used to cross-check the hierarchical simulator at both
//! the gate level (exact permutations and diagonal phases) and the
//! laser level (explicit 2x2 pair sweeps).

use num_complex::Complex64;

use crate::gates::{GateOp, LaserOp, Pulse};
use crate::statevec::Radix;
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct DenseState {
    pub s: u64,
    pub total_bits: u32,
    pub amps: Vec<Complex64>,
}

impl DenseState {
    pub fn basis(radix: Radix, total_bits: u32, index: u64) -> DenseState {
        let s = radix.value();
        let dim = s.pow(total_bits) as usize;
        let mut amps = vec![Complex64::default(); dim];
        amps[index as usize] = Complex64::new(1.0, 0.0);
        DenseState {
            s,
            total_bits,
            amps,
        }
    }

    fn digit(&self, index: usize, site: usize) -> u64 {
        (index as u64 / self.s.pow(site as u32)) % self.s
    }

    fn with_digit(&self, index: usize, site: usize, d: u64) -> usize {
        let p = self.s.pow(site as u32);
        let old = self.digit(index, site);
        (index as u64 + (d as i64 - old as i64) as u64 * p) as usize
    }

    /// Ideal gate semantics: basis permutation or diagonal phase.
    pub fn apply_gate_ideal(&mut self, g: &GateOp) -> Result<()> {
        match g {
            GateOp::Rotate { site, theta, phi } => {
                let u = crate::gates::PairUnitary::rotation(*theta, *phi);
                self.pair_sweep(*site, (0, 1), &u.m, None);
            }
            GateOp::CNot { control, target } => {
                for i in 0..self.amps.len() {
                    if self.digit(i, *control) == 1 && self.digit(i, *target) == 0 {
                        let j = self.with_digit(i, *target, 1);
                        self.amps.swap(i, j);
                    }
                }
            }
            GateOp::CCNot {
                control1,
                control2,
                target,
            } => {
                for i in 0..self.amps.len() {
                    if self.digit(i, *control1) == 1
                        && self.digit(i, *control2) == 1
                        && self.digit(i, *target) == 0
                    {
                        let j = self.with_digit(i, *target, 1);
                        self.amps.swap(i, j);
                    }
                }
            }
            GateOp::CPhase {
                control,
                target,
                angle,
            } => {
                let ph = Complex64::from_polar(1.0, *angle);
                for i in 0..self.amps.len() {
                    if self.digit(i, *control) == 1 && self.digit(i, *target) == 1 {
                        self.amps[i] *= ph;
                    }
                }
            }
            GateOp::Measure { .. } => {
                return Err(Error::InvalidGate("Measure is not a unitary".into()))
            }
        }
        Ok(())
    }

    /// Laser semantics mirroring the production pair-transform contract,
    /// written as a full-dimension sweep rather than a block walk.
    pub fn apply_laser(&mut self, op: &LaserOp) {
        let u = match op.kind {
            Pulse::Rotation => crate::gates::PairUnitary::rotation(op.theta, op.phi),
            Pulse::Phase => crate::gates::PairUnitary::phase(op.theta),
        };
        let u = if op.global_phase != 0.0 {
            u.scaled(op.global_phase)
        } else {
            u
        };
        self.pair_sweep(op.target, op.levels, &u.m, op.control);
    }

    fn pair_sweep(
        &mut self,
        site: usize,
        (li, lj): (u8, u8),
        m: &[[Complex64; 2]; 2],
        control: Option<(usize, u8)>,
    ) {
        // Build matching indices from strides instead of filtering the
        // whole range: a division per amplitude dominates the sweep
        // otherwise.
        let s = self.s as usize;
        let dim = self.amps.len();
        let ps = s.pow(site as u32);
        let delta = (lj as i64 - li as i64) * ps as i64;
        let mut pair = |i: usize| {
            let j = (i as i64 + delta) as usize;
            let (a, b) = (self.amps[i], self.amps[j]);
            self.amps[i] = m[0][0] * a + m[0][1] * b;
            self.amps[j] = m[1][0] * a + m[1][1] * b;
        };
        match control {
            None => {
                let mut high = 0;
                while high < dim {
                    let base = high + li as usize * ps;
                    for low in 0..ps {
                        pair(base + low);
                    }
                    high += ps * s;
                }
            }
            Some((cs, cd)) => {
                let pc = s.pow(cs as u32);
                let (p1, d1, p2, d2) = if cs < site {
                    (pc, cd as usize, ps, li as usize)
                } else {
                    (ps, li as usize, pc, cd as usize)
                };
                let mut high = 0;
                while high < dim {
                    let b2 = high + d2 * p2;
                    let mut mid = 0;
                    while mid < p2 {
                        let base = b2 + mid + d1 * p1;
                        for low in 0..p1 {
                            pair(base + low);
                        }
                        mid += p1 * s;
                    }
                    high += p2 * s;
                }
            }
        }
    }

    pub fn norm_sq(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Probability of each value of the register formed by `sites`
    /// (sites[k] contributes digit * s^k).
    pub fn register_distribution(&self, sites: &[usize]) -> Vec<f64> {
        let dim = self.s.pow(sites.len() as u32) as usize;
        let mut out = vec![0.0; dim];
        for (i, a) in self.amps.iter().enumerate() {
            let mut val = 0u64;
            for (k, &site) in sites.iter().enumerate() {
                val += self.digit(i, site) * self.s.pow(k as u32);
            }
            out[val as usize] += a.norm_sqr();
        }
        out
    }

    pub fn distance(&self, other: &[Complex64]) -> f64 {
        self.amps
            .iter()
            .zip(other)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}
