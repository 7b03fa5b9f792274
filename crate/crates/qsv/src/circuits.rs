//! Circuit construction: reversible modular arithmetic, the factoring
//! circuit (prepare, modular exponentiation, transform, measure), the
//! benchmark catalog, the circuit text format, and the classical
//! post-processing (continued fractions).
//!
//! All arithmetic networks use only single-site rotations, controlled
//! nots and doubly controlled nots, so nothing needs more than two
//! controls and every gate expands into the laser set.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::gates::{apply_gate_timed, expand_to_lasers, ErrorModel, GateOp};
use crate::statevec::{HierarchicalStateVector, LevelSpec, PhaseTimers, Radix, StateIndex};
use crate::{Error, Result};

/// Named span of ops within a circuit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhaseMark {
    pub label: String,
    /// Index of the first op in the phase.
    pub start: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    pub total_bits: u32,
    pub ops: Vec<GateOp>,
    pub marks: Vec<PhaseMark>,
}

impl Circuit {
    pub fn new(total_bits: u32) -> Circuit {
        Circuit {
            total_bits,
            ops: Vec::new(),
            marks: Vec::new(),
        }
    }

    pub fn mark(&mut self, label: &str) {
        self.marks.push(PhaseMark {
            label: label.to_string(),
            start: self.ops.len(),
        });
    }

    pub fn validate(&self) -> Result<()> {
        for op in &self.ops {
            op.validate(self.total_bits)?;
        }
        Ok(())
    }

    /// Total laser operations after expansion (measurements excluded).
    pub fn laser_count(&self, s: Radix) -> Result<u64> {
        let mut n = 0u64;
        for op in &self.ops {
            if !op.is_measure() {
                n += expand_to_lasers(op, s)?.len() as u64;
            }
        }
        Ok(n)
    }

    /// Serializes to the line-oriented text format.
    pub fn to_text(&self, s: Radix) -> String {
        let mut out = format!("s={} M={}\n", s.value(), self.total_bits);
        let mut marks = self.marks.iter().peekable();
        for (i, op) in self.ops.iter().enumerate() {
            while marks.peek().map(|m| m.start) == Some(i) {
                out.push_str(&format!("# phase: {}\n", marks.next().unwrap().label));
            }
            let line = match op {
                GateOp::Rotate { site, theta, phi } => {
                    format!("ROT {site} {theta:.17e} {phi:.17e}")
                }
                GateOp::CNot { control, target } => format!("CNOT {control} {target}"),
                GateOp::CCNot {
                    control1,
                    control2,
                    target,
                } => format!("CCNOT {control1} {control2} {target}"),
                GateOp::CPhase {
                    control,
                    target,
                    angle,
                } => format!("CPHASE {control} {target} {angle:.17e}"),
                GateOp::Measure { sites } => {
                    let mut l = String::from("MEASURE");
                    for s in sites {
                        l.push_str(&format!(" {s}"));
                    }
                    l
                }
            };
            out.push_str(&line);
            out.push('\n');
        }
        for m in marks {
            out.push_str(&format!("# phase: {}\n", m.label));
        }
        out
    }

    /// Parses the text format. Lines starting with `#` are comments;
    /// `# phase: <label>` comments round-trip as phase marks.
    pub fn from_text(text: &str) -> Result<(Circuit, Radix)> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty circuit file".into()))?;
        let (s, m) = parse_header(header)?;
        let radix = Radix::from_value(s)?;
        let mut c = Circuit::new(m);
        for line in lines {
            if let Some(rest) = line.strip_prefix('#') {
                if let Some(label) = rest.trim().strip_prefix("phase:") {
                    c.mark(label.trim());
                }
                continue;
            }
            let mut parts = line.split_whitespace();
            let word = parts.next().unwrap();
            let mut next_usize = |what: &str| -> Result<usize> {
                parts
                    .next()
                    .ok_or_else(|| Error::Parse(format!("{word}: missing {what}")))?
                    .parse()
                    .map_err(|e| Error::Parse(format!("{word}: bad {what}: {e}")))
            };
            let op = match word {
                "ROT" => {
                    let site = next_usize("site")?;
                    let theta = next_f64(parts.next(), word, "theta")?;
                    let phi = next_f64(parts.next(), word, "phi")?;
                    GateOp::Rotate { site, theta, phi }
                }
                "CNOT" => GateOp::CNot {
                    control: next_usize("control")?,
                    target: next_usize("target")?,
                },
                "CCNOT" => GateOp::CCNot {
                    control1: next_usize("control1")?,
                    control2: next_usize("control2")?,
                    target: next_usize("target")?,
                },
                "CPHASE" => {
                    let control = next_usize("control")?;
                    let target = next_usize("target")?;
                    let angle = next_f64(parts.next(), word, "angle")?;
                    GateOp::CPhase {
                        control,
                        target,
                        angle,
                    }
                }
                "MEASURE" => {
                    drop(next_usize);
                    let sites: Vec<usize> = line
                        .split_whitespace()
                        .skip(1)
                        .map(|t| {
                            t.parse()
                                .map_err(|e| Error::Parse(format!("MEASURE: {e}")))
                        })
                        .collect::<Result<_>>()?;
                    GateOp::Measure { sites }
                }
                other => return Err(Error::Parse(format!("unknown op {other}"))),
            };
            c.ops.push(op);
        }
        c.validate()?;
        Ok((c, radix))
    }
}

fn parse_header(line: &str) -> Result<(u64, u32)> {
    let mut s = None;
    let mut m = None;
    for tok in line.split_whitespace() {
        if let Some(v) = tok.strip_prefix("s=") {
            s = Some(v.parse().map_err(|e| Error::Parse(format!("s=: {e}")))?);
        } else if let Some(v) = tok.strip_prefix("M=") {
            m = Some(v.parse().map_err(|e| Error::Parse(format!("M=: {e}")))?);
        } else {
            return Err(Error::Parse(format!("unexpected header token {tok}")));
        }
    }
    match (s, m) {
        (Some(s), Some(m)) => Ok((s, m)),
        _ => Err(Error::Parse("header must be `s=<s> M=<M>`".into())),
    }
}

fn next_f64(tok: Option<&str>, word: &str, what: &str) -> Result<f64> {
    tok.ok_or_else(|| Error::Parse(format!("{word}: missing {what}")))?
        .parse()
        .map_err(|e| Error::Parse(format!("{word}: bad {what}: {e}")))
}

/// Wire assignment for the factoring circuit, least significant sites
/// first: L carry bits, overflow bit, comparison flag, AND ancilla,
/// then the L-bit accumulator S, the L-bit product P, and the A bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RegisterLayout {
    pub l: u32,
    pub a_bits: u32,
}

impl RegisterLayout {
    pub fn new(n: u64, a_bits: u32) -> RegisterLayout {
        RegisterLayout {
            l: 64 - n.leading_zeros(),
            a_bits,
        }
    }

    pub fn carry(&self, i: usize) -> usize {
        debug_assert!(i < self.l as usize);
        i
    }
    pub fn c_out(&self) -> usize {
        self.l as usize
    }
    pub fn flag(&self) -> usize {
        self.l as usize + 1
    }
    pub fn and_anc(&self) -> usize {
        self.l as usize + 2
    }
    pub fn s_bit(&self, i: usize) -> usize {
        self.l as usize + 3 + i
    }
    pub fn p_bit(&self, i: usize) -> usize {
        2 * self.l as usize + 3 + i
    }
    pub fn a_bit(&self, i: usize) -> usize {
        3 * self.l as usize + 3 + i
    }
    pub fn total_bits(&self) -> u32 {
        3 * self.l + 3 + self.a_bits
    }
    pub fn a_sites(&self) -> Vec<usize> {
        (0..self.a_bits as usize).map(|i| self.a_bit(i)).collect()
    }
    fn s_sites(&self) -> Vec<usize> {
        (0..self.l as usize).map(|i| self.s_bit(i)).collect()
    }
    fn carry_sites(&self) -> Vec<usize> {
        (0..self.l as usize).map(|i| self.carry(i)).collect()
    }
}

fn ccnot(ops: &mut Vec<GateOp>, c1: usize, c2: usize, t: usize) {
    ops.push(GateOp::CCNot {
        control1: c1,
        control2: c2,
        target: t,
    });
}

fn cnot(ops: &mut Vec<GateOp>, c: usize, t: usize) {
    ops.push(GateOp::CNot {
        control: c,
        target: t,
    });
}

fn not(ops: &mut Vec<GateOp>, t: usize) {
    // Exact NOT up to a global phase of -i on the whole vector.
    ops.push(GateOp::Rotate {
        site: t,
        theta: PI,
        phi: 0.0,
    });
}

/// Carry propagation into `target`: target ^= maj(k_bit & ctl, b_i, c).
fn carry_gates(
    ops: &mut Vec<GateOp>,
    b_i: usize,
    c_wire: Option<usize>,
    target: usize,
    k_bit: bool,
    ctl: Option<usize>,
) {
    if let Some(c) = c_wire {
        ccnot(ops, b_i, c, target);
    }
    if k_bit {
        match ctl {
            Some(ct) => {
                ccnot(ops, ct, b_i, target);
                if let Some(c) = c_wire {
                    ccnot(ops, ct, c, target);
                }
            }
            None => {
                cnot(ops, b_i, target);
                if let Some(c) = c_wire {
                    cnot(ops, c, target);
                }
            }
        }
    }
}

fn sum_gates(ops: &mut Vec<GateOp>, b_i: usize, c_wire: Option<usize>, k_bit: bool, ctl: Option<usize>) {
    if let Some(c) = c_wire {
        cnot(ops, c, b_i);
    }
    if k_bit {
        match ctl {
            Some(ct) => cnot(ops, ct, b_i),
            None => not(ops, b_i),
        }
    }
}

/// Ripple adder of the constant `k` into register `b` (LSB first),
/// optionally conditioned on `ctl`. `carries` supplies at least
/// `b.len() - 1` zeroed scratch wires, restored to zero. With
/// `carry_out` the full carry leaves the register; otherwise the sum is
/// taken mod `2^b.len()`.
pub fn add_const(
    ops: &mut Vec<GateOp>,
    b: &[usize],
    carries: &[usize],
    k: u64,
    ctl: Option<usize>,
    carry_out: Option<usize>,
) {
    let w = b.len();
    assert!(carries.len() + 1 >= w);
    let kbit = |i: usize| (k >> i) & 1 == 1;
    let cw = |i: usize| if i == 0 { None } else { Some(carries[i - 1]) };
    for i in 0..w.saturating_sub(1) {
        carry_gates(ops, b[i], cw(i), carries[i], kbit(i), ctl);
    }
    if let Some(co) = carry_out {
        carry_gates(ops, b[w - 1], cw(w - 1), co, kbit(w - 1), ctl);
    }
    for i in (0..w).rev() {
        if i < w - 1 {
            carry_gates(ops, b[i], cw(i), carries[i], kbit(i), ctl);
        }
        sum_gates(ops, b[i], cw(i), kbit(i), ctl);
    }
}

/// `flag ^= [ctl &] (b + k carries out of b.len() bits)`, i.e. with
/// `k = 2^W - C` this is `flag ^= [ctl &] (b >= C)`. Register and
/// scratch are restored.
pub fn compare_flag(
    ops: &mut Vec<GateOp>,
    b: &[usize],
    carries: &[usize],
    k: u64,
    flag: usize,
    ctl: Option<usize>,
) {
    let w = b.len();
    assert!(carries.len() + 1 >= w);
    let kbit = |i: usize| (k >> i) & 1 == 1;
    let cw = |i: usize| if i == 0 { None } else { Some(carries[i - 1]) };
    for i in 0..w - 1 {
        carry_gates(ops, b[i], cw(i), carries[i], kbit(i), ctl);
    }
    carry_gates(ops, b[w - 1], cw(w - 1), flag, kbit(w - 1), ctl);
    for i in (0..w - 1).rev() {
        carry_gates(ops, b[i], cw(i), carries[i], kbit(i), ctl);
    }
}

/// Modular addition `S <- (S + [ctl] * c) mod n`, requiring `S < n` on
/// entry. Overflow bit, flag and carries end clear.
pub fn modular_add(
    ops: &mut Vec<GateOp>,
    layout: &RegisterLayout,
    n: u64,
    c: u64,
    ctl: Option<usize>,
) {
    let c = c % n;
    if c == 0 {
        return;
    }
    let s_sites = layout.s_sites();
    let carries = layout.carry_sites();
    let mut ext = s_sites.clone();
    ext.push(layout.c_out());
    let w = ext.len() as u32;
    // B := S + ctl*c, with the carry into the overflow bit.
    add_const(ops, &s_sites, &carries, c, ctl, Some(layout.c_out()));
    // flag := B >= n.
    compare_flag(ops, &ext, &carries, (1u64 << w) - n, layout.flag(), None);
    // B -= flag * n (mod 2^W).
    add_const(ops, &ext, &carries, (1u64 << w) - n, Some(layout.flag()), None);
    // Clear the flag: B >= n held iff the reduced value is below c
    // (when ctl fired), so flag ^= ctl, then flag ^= ctl & (B >= c).
    match ctl {
        Some(ct) => cnot(ops, ct, layout.flag()),
        None => not(ops, layout.flag()),
    }
    compare_flag(ops, &ext, &carries, (1u64 << w) - c, layout.flag(), ctl);
}

fn mod_mul(a: u64, b: u64, n: u64) -> u64 {
    ((a as u128 * b as u128) % n as u128) as u64
}

pub fn mod_pow(mut b: u64, mut e: u64, n: u64) -> u64 {
    let mut acc = 1 % n;
    b %= n;
    while e > 0 {
        if e & 1 == 1 {
            acc = mod_mul(acc, b, n);
        }
        b = mod_mul(b, b, n);
        e >>= 1;
    }
    acc
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

pub fn mod_inv(a: u64, n: u64) -> Option<u64> {
    let (mut r0, mut r1) = (n as i128, (a % n) as i128);
    let (mut t0, mut t1) = (0i128, 1i128);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (t0, t1) = (t1, t0 - q * t1);
    }
    if r0 != 1 {
        return None;
    }
    Some(t0.rem_euclid(n as i128) as u64)
}

/// One modular multiply pass conditioned on A bit `a_site`:
/// `P <- P * x^[a]  (mod n)` with the accumulator S used and cleared.
///
/// Accumulate `S = P * x^[a]` from per-bit constants (doubly controlled
/// on `a & P_p` for the `x - 1` part, singly controlled on `P_p` for
/// the copy part), swap S and P, then run the mirror network with the
/// modular inverse of `x` to return S to zero.
pub fn multiply_step(
    ops: &mut Vec<GateOp>,
    layout: &RegisterLayout,
    n: u64,
    x: u64,
    a_site: usize,
) {
    let x = x % n;
    let y = mod_inv(x, n).expect("x must be coprime to n");
    let l = layout.l as usize;
    let accumulate = |ops: &mut Vec<GateOp>, factor: u64, negate: bool| {
        for p in 0..l {
            let pw = mod_pow(2, p as u64, n);
            let c_ap = mod_mul(pw, (factor + n - 1) % n, n);
            let c_p = pw;
            let adj = |c: u64| if negate { (n - c % n) % n } else { c % n };
            if adj(c_ap) != 0 {
                ccnot(ops, a_site, layout.p_bit(p), layout.and_anc());
                modular_add(ops, layout, n, adj(c_ap), Some(layout.and_anc()));
                ccnot(ops, a_site, layout.p_bit(p), layout.and_anc());
            }
            if adj(c_p) != 0 {
                modular_add(ops, layout, n, adj(c_p), Some(layout.p_bit(p)));
            }
        }
    };
    accumulate(ops, x, false);
    for p in 0..l {
        let (sp, pp) = (layout.s_bit(p), layout.p_bit(p));
        cnot(ops, sp, pp);
        cnot(ops, pp, sp);
        cnot(ops, sp, pp);
    }
    accumulate(ops, y, true);
}

/// Factoring problem description.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FactoringSpec {
    pub n: u64,
    pub base: u64,
    pub a_bits: u32,
}

impl FactoringSpec {
    pub fn layout(&self) -> RegisterLayout {
        RegisterLayout::new(self.n, self.a_bits)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 3 || self.n % 2 == 0 {
            return Err(Error::InvalidSpec(format!("n = {} must be odd and > 2", self.n)));
        }
        if gcd(self.base, self.n) != 1 {
            return Err(Error::InvalidSpec(format!(
                "base {} shares a factor with {}",
                self.base, self.n
            )));
        }
        if self.a_bits == 0 {
            return Err(Error::InvalidSpec("a_bits must be positive".into()));
        }
        Ok(())
    }
}

/// The classical function the circuit computes: `x^a mod n`.
pub fn classical_f(x: u64, a: u64, n: u64) -> u64 {
    mod_pow(x, a, n)
}

/// Builds the full factoring circuit: superpose A, set P to one,
/// accumulate `base^A mod n` into P by conditioned multiply passes,
/// transform A, and measure A (most significant wire first, which
/// realizes the output bit reversal without swap gates).
pub fn build_factor_circuit(spec: &FactoringSpec) -> Result<Circuit> {
    spec.validate()?;
    let layout = spec.layout();
    let mut c = Circuit::new(layout.total_bits());
    c.mark("prepare");
    for i in 0..spec.a_bits as usize {
        // u(pi/2, pi/2) takes |0> exactly to (|0> + |1>)/sqrt(2).
        c.ops.push(GateOp::Rotate {
            site: layout.a_bit(i),
            theta: FRAC_PI_2,
            phi: FRAC_PI_2,
        });
    }
    not(&mut c.ops, layout.p_bit(0));
    c.mark("f(A)");
    for l in 0..spec.a_bits as usize {
        let x_l = mod_pow(spec.base, 1u64 << l, spec.n);
        multiply_step(&mut c.ops, &layout, spec.n, x_l, layout.a_bit(l));
    }
    c.mark("fft");
    qft(&mut c.ops, &layout.a_sites());
    c.mark("measure");
    let mut sites = layout.a_sites();
    sites.reverse();
    c.ops.push(GateOp::Measure { sites });
    c.validate()?;
    Ok(c)
}

/// Transform over `sites` (LSB first). Uses the single-pulse
/// pseudo-Hadamard `u(pi/2, -pi/2)`, which differs from a true
/// Hadamard only by an output-side phase, so the measured distribution
/// is the exact discrete Fourier transform. The conventional output
/// bit reversal is folded into the measurement order instead of being
/// applied with swap gates: output bit `n-1-j` is read from wire
/// `sites[j]`.
pub fn qft(ops: &mut Vec<GateOp>, sites: &[usize]) {
    let n = sites.len();
    for j in (0..n).rev() {
        ops.push(GateOp::Rotate {
            site: sites[j],
            theta: FRAC_PI_2,
            phi: -FRAC_PI_2,
        });
        for k in (0..j).rev() {
            ops.push(GateOp::CPhase {
                control: sites[k],
                target: sites[j],
                angle: PI / (1u64 << (j - k)) as f64,
            });
        }
    }
}

/// Benchmark catalog entry. Laser counts, link bits and state bits are
/// the published reference figures used by the cost model.
#[derive(Debug, Clone, PartialEq)]
pub struct Benchmark {
    pub name: &'static str,
    pub label: &'static str,
    pub s: Radix,
    pub total_bits: u32,
    pub lasers: u64,
    pub link_bits: u32,
    pub state_bits: u32,
    pub factoring: Option<FactoringSpec>,
}

impl Benchmark {
    pub fn level_spec(&self) -> LevelSpec {
        LevelSpec::two_level(self.link_bits, self.state_bits).expect("catalog geometry is valid")
    }
}

pub fn benchmark_catalog() -> Vec<Benchmark> {
    vec![
        Benchmark {
            name: "mult2",
            label: "Modulo Multiply, two state",
            s: Radix::Two,
            total_bits: 16,
            lasers: 7137,
            link_bits: 10,
            state_bits: 6,
            factoring: Some(FactoringSpec {
                n: 15,
                base: 7,
                a_bits: 1,
            }),
        },
        Benchmark {
            name: "mult3",
            label: "Modulo Multiply, three state",
            s: Radix::Three,
            total_bits: 16,
            lasers: 8854,
            link_bits: 10,
            state_bits: 6,
            factoring: Some(FactoringSpec {
                n: 15,
                base: 7,
                a_bits: 1,
            }),
        },
        Benchmark {
            name: "f15_9bits",
            label: "Factor 15, 9 A bits",
            s: Radix::Two,
            total_bits: 24,
            lasers: 70904,
            link_bits: 16,
            state_bits: 8,
            factoring: Some(FactoringSpec {
                n: 15,
                base: 7,
                a_bits: 9,
            }),
        },
        Benchmark {
            name: "f15_3bits",
            label: "Factor 15, 3 A bits",
            s: Radix::Two,
            total_bits: 18,
            lasers: 70793,
            link_bits: 12,
            state_bits: 6,
            factoring: Some(FactoringSpec {
                n: 15,
                base: 7,
                a_bits: 3,
            }),
        },
        Benchmark {
            name: "f21",
            label: "Factor 21",
            s: Radix::Two,
            total_bits: 24,
            lasers: 139678,
            link_bits: 16,
            state_bits: 8,
            factoring: Some(FactoringSpec {
                n: 21,
                base: 2,
                a_bits: 6,
            }),
        },
        Benchmark {
            name: "f35",
            label: "Factor 35",
            s: Radix::Two,
            total_bits: 28,
            lasers: 237798,
            link_bits: 20,
            state_bits: 8,
            factoring: Some(FactoringSpec {
                n: 35,
                base: 2,
                a_bits: 7,
            }),
        },
    ]
}

pub fn find_benchmark(name: &str) -> Result<Benchmark> {
    benchmark_catalog()
        .into_iter()
        .find(|b| b.name == name)
        .ok_or_else(|| Error::UnknownBenchmark(name.to_string()))
}

/// Closed-form laser operation count for factoring an L-bit number,
/// used as the scaling reference: `252 L^3 + 8 L^2 + L + 3`.
pub fn op_count_formula(l: u64) -> u64 {
    252 * l * l * l + 8 * l * l + l + 3
}

/// Continued-fraction convergent denominators of `y / 2^t`, ascending,
/// bounded by `max_den`.
pub fn period_candidates(y: u64, t_bits: u32, max_den: u64) -> Vec<u64> {
    let mut out = Vec::new();
    if y == 0 {
        return out;
    }
    let (mut num, mut den) = (y as i128, 1i128 << t_bits);
    let (mut p0, mut p1) = (0i128, 1i128);
    let (mut q0, mut q1) = (1i128, 0i128);
    while den != 0 {
        let a = num / den;
        (num, den) = (den, num - a * den);
        (p0, p1) = (p1, a * p1 + p0);
        (q0, q1) = (q1, a * q1 + q0);
        if q1 > max_den as i128 {
            break;
        }
        if q1 > 1 || (q1 == 1 && p1 >= 0) {
            out.push(q1 as u64);
        }
    }
    out.dedup();
    out
}

/// Classical post-processing of one measurement: recover a period
/// candidate from the continued fraction expansion and derive factors.
pub fn factors_from_measurement(y: u64, t_bits: u32, x: u64, n: u64) -> Option<(u64, u64)> {
    for q in period_candidates(y, t_bits, n) {
        let mut r = q;
        while r <= n {
            if mod_pow(x, r, n) == 1 {
                if r % 2 == 0 {
                    let h = mod_pow(x, r / 2, n);
                    for g in [gcd(h + n - 1, n), gcd(h + 1, n)] {
                        if g != 1 && g != n {
                            return Some((g, n / g));
                        }
                    }
                }
                break;
            }
            r += q;
        }
    }
    None
}

/// Result of a sequential circuit execution.
#[derive(Debug)]
pub struct ExecOutcome {
    pub state: HierarchicalStateVector,
    /// Digits from the final Measure op, if any (sites order as given).
    pub measured: Option<Vec<u8>>,
    pub laser_ops: u64,
    pub transforms: u64,
    pub timers: PhaseTimers,
}

impl ExecOutcome {
    /// Measured digits folded into a value, `measured[k]` weighted by
    /// `s^k`.
    pub fn measured_value(&self, s: Radix) -> Option<u64> {
        self.measured.as_ref().map(|digits| {
            digits
                .iter()
                .enumerate()
                .map(|(k, &d)| d as u64 * s.value().pow(k as u32))
                .sum()
        })
    }
}

/// Runs a circuit from the all-zero basis state on one thread.
/// Measurement sampling uses `meas_seed`; laser-level error draws come
/// from the error model's own seed.
pub fn execute(
    circuit: &Circuit,
    s: Radix,
    level_spec: &LevelSpec,
    err: &ErrorModel,
    meas_seed: u64,
) -> Result<ExecOutcome> {
    circuit.validate()?;
    err.validate()?;
    let mut v = HierarchicalStateVector::new_basis_state(
        circuit.total_bits,
        s,
        level_spec.clone(),
        StateIndex(0),
    )?;
    let mut rng = ChaCha8Rng::seed_from_u64(meas_seed);
    let mut ordinal = 0u64;
    let mut laser_ops = 0u64;
    let mut transforms = 0u64;
    let mut measured = None;
    let mut timers = PhaseTimers::default();
    for op in &circuit.ops {
        if let GateOp::Measure { sites } = op {
            measured = Some(v.measure_register(sites, &mut rng)?);
        } else {
            let stats = apply_gate_timed(&mut v, op, err, &mut ordinal, &mut timers)?;
            laser_ops += stats.laser_ops;
            transforms += stats.transforms;
        }
    }
    Ok(ExecOutcome {
        state: v,
        measured,
        laser_ops,
        transforms,
        timers,
    })
}
