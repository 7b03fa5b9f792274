//! Gate-level operations, their decomposition into laser operations,
//! and the operational-error / decoherence injection models.
//!
//! Every gate is implemented as a sequence of laser operations, each of
//! which is a single pairwise transform between two levels of one site,
//! optionally conditioned on one control site. The pair rotation
//! convention is
//!
//! ```text
//! u(theta, phi) = [ cos(theta/2)                 -i e^{-i phi} sin(theta/2) ]
//!                 [ -i e^{i phi} sin(theta/2)     cos(theta/2)              ]
//! ```

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::statevec::{HierarchicalStateVector, Radix, UNITARY_TOLERANCE};
use crate::{Error, Result};

/// A 2x2 complex transformation applied to an amplitude pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairUnitary {
    pub m: [[Complex64; 2]; 2],
}

impl PairUnitary {
    pub fn new(m: [[Complex64; 2]; 2]) -> PairUnitary {
        PairUnitary { m }
    }

    pub fn identity() -> PairUnitary {
        PairUnitary::new([
            [Complex64::new(1.0, 0.0), Complex64::default()],
            [Complex64::default(), Complex64::new(1.0, 0.0)],
        ])
    }

    /// Exact amplitude swap (the NOT block of Fig-2-style matrices).
    pub fn not() -> PairUnitary {
        PairUnitary::new([
            [Complex64::default(), Complex64::new(1.0, 0.0)],
            [Complex64::new(1.0, 0.0), Complex64::default()],
        ])
    }

    /// The crate-wide rotation convention `u(theta, phi)`.
    pub fn rotation(theta: f64, phi: f64) -> PairUnitary {
        // Snap cos/sin residue below 1e-15 to exact zero so multiples
        // of pi give exactly diagonal or antidiagonal matrices. The
        // sparse storage relies on exact zeros to avoid allocating
        // untouched sibling blocks; sin(pi) = 1.2e-16 would otherwise
        // seed junk blocks everywhere.
        let snap = |x: f64| if x.abs() < 1e-15 { 0.0 } else { x };
        let c = snap((theta / 2.0).cos());
        let s = snap((theta / 2.0).sin());
        let mi = Complex64::new(0.0, -1.0);
        PairUnitary::new([
            [
                Complex64::new(c, 0.0),
                mi * Complex64::from_polar(s, -phi),
            ],
            [mi * Complex64::from_polar(s, phi), Complex64::new(c, 0.0)],
        ])
    }

    /// `diag(1, e^{i theta})`.
    pub fn phase(theta: f64) -> PairUnitary {
        PairUnitary::new([
            [Complex64::new(1.0, 0.0), Complex64::default()],
            [Complex64::default(), Complex64::from_polar(1.0, theta)],
        ])
    }

    pub fn scaled(self, phase: f64) -> PairUnitary {
        let g = Complex64::from_polar(1.0, phase);
        PairUnitary::new([
            [self.m[0][0] * g, self.m[0][1] * g],
            [self.m[1][0] * g, self.m[1][1] * g],
        ])
    }

    /// `self * rhs` (rhs applied first).
    pub fn compose(&self, rhs: &PairUnitary) -> PairUnitary {
        let mut m = [[Complex64::default(); 2]; 2];
        for r in 0..2 {
            for c in 0..2 {
                m[r][c] = self.m[r][0] * rhs.m[0][c] + self.m[r][1] * rhs.m[1][c];
            }
        }
        PairUnitary::new(m)
    }

    /// Frobenius norm of `u u^dagger - I`.
    pub fn unitarity_deviation(&self) -> f64 {
        let mut dev = 0.0;
        for r in 0..2 {
            for c in 0..2 {
                let mut e = self.m[r][0] * self.m[c][0].conj() + self.m[r][1] * self.m[c][1].conj();
                if r == c {
                    e -= Complex64::new(1.0, 0.0);
                }
                dev += e.norm_sqr();
            }
        }
        dev.sqrt()
    }

    pub fn is_unitary(&self) -> bool {
        self.unitarity_deviation() <= UNITARY_TOLERANCE
    }
}

/// Circuit-level gates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum GateOp {
    Rotate {
        site: usize,
        theta: f64,
        phi: f64,
    },
    CNot {
        control: usize,
        target: usize,
    },
    CCNot {
        control1: usize,
        control2: usize,
        target: usize,
    },
    CPhase {
        control: usize,
        target: usize,
        angle: f64,
    },
    Measure {
        sites: Vec<usize>,
    },
}

impl GateOp {
    /// All sites referenced by the gate.
    pub fn sites(&self) -> Vec<usize> {
        match self {
            GateOp::Rotate { site, .. } => vec![*site],
            GateOp::CNot { control, target } => vec![*control, *target],
            GateOp::CCNot {
                control1,
                control2,
                target,
            } => vec![*control1, *control2, *target],
            GateOp::CPhase {
                control, target, ..
            } => vec![*control, *target],
            GateOp::Measure { sites } => sites.clone(),
        }
    }

    pub fn validate(&self, total_bits: u32) -> Result<()> {
        let sites = self.sites();
        for &s in &sites {
            if s >= total_bits as usize {
                return Err(Error::InvalidSite {
                    site: s,
                    total_bits,
                });
            }
        }
        let mut uniq = sites.clone();
        uniq.sort_unstable();
        uniq.dedup();
        if uniq.len() != sites.len() {
            return Err(Error::InvalidGate("gate sites must be distinct".into()));
        }
        Ok(())
    }

    pub fn is_measure(&self) -> bool {
        matches!(self, GateOp::Measure { .. })
    }
}

/// Pulse family of a laser operation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Pulse {
    /// `u(theta, phi)` between the two levels.
    Rotation,
    /// `diag(1, e^{i theta})` on the two levels.
    Phase,
}

/// One elementary laser operation: a single pairwise transform on one
/// site, optionally conditioned on a control site digit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaserOp {
    pub target: usize,
    pub levels: (u8, u8),
    pub kind: Pulse,
    pub theta: f64,
    pub phi: f64,
    /// Global phase applied to the pair block; physical when controlled.
    pub global_phase: f64,
    pub control: Option<(usize, u8)>,
}

impl LaserOp {
    pub fn rotation(target: usize, theta: f64, phi: f64) -> LaserOp {
        LaserOp {
            target,
            levels: (0, 1),
            kind: Pulse::Rotation,
            theta,
            phi,
            global_phase: 0.0,
            control: None,
        }
    }

    pub fn phase(target: usize, theta: f64) -> LaserOp {
        LaserOp {
            target,
            levels: (0, 1),
            kind: Pulse::Phase,
            theta,
            phi: 0.0,
            global_phase: 0.0,
            control: None,
        }
    }

    pub fn on_levels(mut self, i: u8, j: u8) -> LaserOp {
        self.levels = (i, j);
        self
    }

    pub fn controlled(mut self, site: usize, digit: u8) -> LaserOp {
        self.control = Some((site, digit));
        self
    }

    pub fn with_global_phase(mut self, g: f64) -> LaserOp {
        self.global_phase = g;
        self
    }

    /// Pair matrix with an additive perturbation of the pulse angle.
    pub fn matrix(&self, angle_error: f64) -> PairUnitary {
        let theta = self.theta + angle_error;
        let base = match self.kind {
            Pulse::Rotation => PairUnitary::rotation(theta, self.phi),
            Pulse::Phase => PairUnitary::phase(theta),
        };
        if self.global_phase == 0.0 {
            base
        } else {
            base.scaled(self.global_phase)
        }
    }

    /// Applies the laser op to the vector with the given angle error.
    pub fn apply(
        &self,
        v: &mut HierarchicalStateVector,
        angle_error: f64,
        timers: &mut crate::statevec::PhaseTimers,
    ) -> Result<()> {
        let controls: Vec<(usize, u8)> = self.control.into_iter().collect();
        v.apply_pair_transform_timed(&self.matrix(angle_error), self.target, self.levels, &controls, timers)
    }
}

/// Operational-error and decoherence configuration. All-zero fields
/// reproduce the ideal circuit bit-for-bit regardless of the seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorModel {
    /// Std-dev (radians) of the per-pulse rotation angle deviation.
    pub sigma_theta: f64,
    /// Amplitude-damping rate in [0, 1) applied after every laser op.
    pub decoherence_rate: f64,
    pub seed: u64,
}

impl ErrorModel {
    pub fn ideal() -> ErrorModel {
        ErrorModel {
            sigma_theta: 0.0,
            decoherence_rate: 0.0,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.decoherence_rate) {
            return Err(Error::RateOutOfRange(self.decoherence_rate));
        }
        if self.sigma_theta < 0.0 {
            return Err(Error::InvalidConfig("sigma_theta must be >= 0".into()));
        }
        Ok(())
    }

    /// Angle deviation for laser op `ordinal` targeting `site`. Keyed by
    /// (ordinal, site) rather than by worker so that parallel and
    /// sequential runs consume identical randomness.
    pub fn angle_error(&self, ordinal: u64, site: usize) -> f64 {
        if self.sigma_theta == 0.0 {
            return 0.0;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(mix(self.seed, ordinal, site as u64, 0x616e676c));
        let normal = Normal::new(0.0, self.sigma_theta).expect("valid sigma");
        normal.sample(&mut rng)
    }

    /// Damped site for the decoherence step after laser op `ordinal`.
    pub fn decoherence_site(&self, ordinal: u64, total_bits: u32) -> usize {
        let mut rng = ChaCha8Rng::seed_from_u64(mix(self.seed, ordinal, 0, 0x6465636f));
        rng.gen_range(0..total_bits as usize)
    }
}

fn mix(seed: u64, a: u64, b: u64, salt: u64) -> u64 {
    let mut x = seed
        ^ a.wrapping_mul(0x9e37_79b9_7f4a_7c15)
        ^ b.wrapping_mul(0xbf58_476d_1ce4_e5b9)
        ^ salt.wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^= x >> 30;
    x = x.wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x ^= x >> 27;
    x = x.wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// The 4x4 controlled-not matrix: identity with rows/columns 2 and 3
/// swapped (swap amplitudes a2 and a3).
pub fn cnot_matrix() -> [[Complex64; 4]; 4] {
    let one = Complex64::new(1.0, 0.0);
    let mut m = [[Complex64::default(); 4]; 4];
    m[0][0] = one;
    m[1][1] = one;
    m[2][3] = one;
    m[3][2] = one;
    m
}

/// Expands a gate into its ordered laser-operation sequence for the
/// given radix.
///
/// For `s = 3` a controlled-not is the five-pulse trapped-ion sequence
/// using level 2 of the target as a temporary; for `s = 2` it is a
/// single composite controlled pulse with the same net unitary. The
/// composed expansion equals the ideal gate matrix on the `{0, 1}`
/// computational manifold.
pub fn expand_to_lasers(g: &GateOp, s: Radix) -> Result<Vec<LaserOp>> {
    use std::f64::consts::{FRAC_PI_2, PI};
    match g {
        GateOp::Measure { .. } => Err(Error::InvalidGate(
            "Measure has no laser decomposition".into(),
        )),
        GateOp::Rotate { site, theta, phi } => Ok(vec![LaserOp::rotation(*site, *theta, *phi)]),
        GateOp::CPhase {
            control,
            target,
            angle,
        } => Ok(vec![LaserOp::phase(*target, *angle).controlled(*control, 1)]),
        GateOp::CNot { control, target } => match s {
            // One composite controlled pulse: e^{i pi/2} u(pi, 0) = NOT.
            Radix::Two => Ok(vec![LaserOp::rotation(*target, PI, 0.0)
                .with_global_phase(FRAC_PI_2)
                .controlled(*control, 1)]),
            // Five pulses: the 2 pi (1,2) pulse on the target picks up a
            // sign exactly when the flipped control sits in level 0.
            Radix::Three => Ok(vec![
                LaserOp::rotation(*target, FRAC_PI_2, -FRAC_PI_2),
                LaserOp::rotation(*control, PI, 0.0),
                LaserOp::rotation(*target, 2.0 * PI, 0.0)
                    .on_levels(1, 2)
                    .controlled(*control, 0),
                LaserOp::rotation(*control, PI, PI),
                LaserOp::rotation(*target, FRAC_PI_2, FRAC_PI_2),
            ]),
        },
        GateOp::CCNot {
            control1,
            control2,
            target,
        } => {
            // H(t) . CCZ . H(t) with CCZ built from controlled phases
            // and two inner controlled-nots.
            let mut ops = Vec::new();
            let h = |t: usize| {
                vec![
                    LaserOp::phase(t, PI),
                    LaserOp::rotation(t, FRAC_PI_2, FRAC_PI_2),
                ]
            };
            ops.extend(h(*target));
            ops.push(LaserOp::phase(*target, FRAC_PI_2).controlled(*control2, 1));
            ops.extend(expand_to_lasers(
                &GateOp::CNot {
                    control: *control1,
                    target: *control2,
                },
                s,
            )?);
            ops.push(LaserOp::phase(*target, -FRAC_PI_2).controlled(*control2, 1));
            ops.extend(expand_to_lasers(
                &GateOp::CNot {
                    control: *control1,
                    target: *control2,
                },
                s,
            )?);
            ops.push(LaserOp::phase(*target, FRAC_PI_2).controlled(*control1, 1));
            ops.extend(h(*target));
            Ok(ops)
        }
    }
}

/// Per-gate application statistics.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ApplyStats {
    /// Laser operations applied.
    pub laser_ops: u64,
    /// Total transformations recorded (3x laser ops with decoherence).
    pub transforms: u64,
}

/// Applies a gate as its laser sequence, injecting operational errors
/// and (when enabled) the decoherence step after every laser op.
/// `ordinal` is the global laser-op counter, advanced per laser op.
pub fn apply_gate(
    v: &mut HierarchicalStateVector,
    g: &GateOp,
    err: &ErrorModel,
    ordinal: &mut u64,
) -> Result<ApplyStats> {
    err.validate()?;
    g.validate(v.total_bits())?;
    let mut timers = crate::statevec::PhaseTimers::default();
    apply_gate_timed(v, g, err, ordinal, &mut timers)
}

pub fn apply_gate_timed(
    v: &mut HierarchicalStateVector,
    g: &GateOp,
    err: &ErrorModel,
    ordinal: &mut u64,
    timers: &mut crate::statevec::PhaseTimers,
) -> Result<ApplyStats> {
    let lasers = expand_to_lasers(g, v.radix())?;
    let mut stats = ApplyStats::default();
    for op in &lasers {
        let delta = err.angle_error(*ordinal, op.target);
        op.apply(v, delta, timers)?;
        stats.laser_ops += 1;
        stats.transforms += 1;
        if err.decoherence_rate > 0.0 {
            let site = err.decoherence_site(*ordinal, v.total_bits());
            decoherence_step_at(v, err.decoherence_rate, site)?;
            stats.transforms += 2;
        }
        *ordinal += 1;
    }
    Ok(stats)
}

/// Decoherence step: amplitude damping on a randomly selected site
/// followed by a global renormalization using the accumulated sum.
/// Returns the pre-renormalization sum.
pub fn decoherence_step<R: Rng>(
    v: &mut HierarchicalStateVector,
    rate: f64,
    rng: &mut R,
) -> Result<f64> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::RateOutOfRange(rate));
    }
    let site = rng.gen_range(0..v.total_bits() as usize);
    decoherence_step_at(v, rate, site)
}

/// Deterministic-site variant used by the executors.
pub fn decoherence_step_at(
    v: &mut HierarchicalStateVector,
    rate: f64,
    site: usize,
) -> Result<f64> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::RateOutOfRange(rate));
    }
    // Transformation 1: contract the excited components of the site.
    v.scale_excited(site, (1.0 - rate).sqrt())?;
    // The accumulated "sum" of the communication step.
    let sum = v.norm_sq();
    if sum < 1e-300 {
        return Err(Error::DegenerateState);
    }
    // Transformation 2: global renormalization.
    v.scale_all(1.0 / sum.sqrt());
    Ok(sum)
}
