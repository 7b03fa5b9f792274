//! Hierarchical state-vector storage and pairwise transforms.
//!
//! The `s^M` amplitude vector is stored as a block tree: zero or more
//! link levels, each holding `s^B` child slots for a level covering `B`
//! QU-bits, and a single value level holding `s^state_bits` amplitudes
//! per block. A `None` slot at a link level marks a sub-tree of all-zero
//! amplitudes that has not been allocated.
//!
//! Digit convention: QU-bit `k` of a state index is its `k`-th base-`s`
//! digit, least significant first. The value level covers QU-bits
//! `[0, state_bits)`; link levels cover the most significant digits,
//! with the first entry of `LevelSpec::link_levels` as the topmost
//! level. A value block is identified by its block id, the link portion
//! of the state index (`index / s^state_bits`).

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::time::Instant;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::gates::PairUnitary;
use crate::{Error, Result};

/// Complex amplitude of a basis state; the probability of observing the
/// state is `re^2 + im^2`.
pub type Amplitude = Complex64;

/// Norm drift alarm for long unitary sequences.
pub const NORM_TOLERANCE: f64 = 1e-9;
/// Unitarity tolerance (Frobenius) for pair transforms.
pub const UNITARY_TOLERANCE: f64 = 1e-12;
/// Guard for dense materialization.
pub const DENSE_GUARD: u64 = 1 << 26;
/// Blocks whose L2 norm falls below this after a pair transform are
/// released. Keeps uncomputed scratch from pinning the whole tree.
pub const PRUNE_TOLERANCE: f64 = 1e-14;

/// Number of states used to represent a QU-bit: 2 selects the reduced
/// two-state model, 3 the detailed three-state model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Radix {
    Two,
    Three,
}

impl Radix {
    pub fn value(self) -> u64 {
        match self {
            Radix::Two => 2,
            Radix::Three => 3,
        }
    }

    pub fn from_value(s: u64) -> Result<Radix> {
        match s {
            2 => Ok(Radix::Two),
            3 => Ok(Radix::Three),
            _ => Err(Error::Parse(format!("radix must be 2 or 3, got {s}"))),
        }
    }

    /// `s^e`, checked against u64 range by construction of the callers.
    pub fn pow(self, e: u32) -> u64 {
        self.value().pow(e)
    }
}

/// Geometry of the hierarchical vector: bit counts per link level
/// (topmost first) plus the bit count of the value level.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelSpec {
    link_levels: Vec<u32>,
    state_bits: u32,
}

impl LevelSpec {
    pub fn new(link_levels: Vec<u32>, state_bits: u32) -> Result<LevelSpec> {
        if state_bits == 0 {
            return Err(Error::InvalidLevelSpec("state_bits must be >= 1".into()));
        }
        if link_levels.iter().any(|&b| b == 0) {
            return Err(Error::InvalidLevelSpec(
                "link levels must each cover >= 1 bit".into(),
            ));
        }
        Ok(LevelSpec {
            link_levels,
            state_bits,
        })
    }

    /// Flat structure: a single value level and no link levels.
    pub fn flat(total_bits: u32) -> LevelSpec {
        LevelSpec {
            link_levels: Vec::new(),
            state_bits: total_bits,
        }
    }

    /// Two-level structure with one link level of `link_bits` bits.
    pub fn two_level(link_bits: u32, state_bits: u32) -> Result<LevelSpec> {
        if link_bits == 0 {
            return LevelSpec::new(Vec::new(), state_bits);
        }
        LevelSpec::new(vec![link_bits], state_bits)
    }

    pub fn link_levels(&self) -> &[u32] {
        &self.link_levels
    }

    pub fn state_bits(&self) -> u32 {
        self.state_bits
    }

    pub fn link_bits(&self) -> u32 {
        self.link_levels.iter().sum()
    }

    pub fn total_bits(&self) -> u32 {
        self.link_bits() + self.state_bits
    }

    pub fn validate_for(&self, total_bits: u32) -> Result<()> {
        if self.total_bits() != total_bits {
            return Err(Error::InvalidLevelSpec(format!(
                "levels cover {} bits, expected {}",
                self.total_bits(),
                total_bits
            )));
        }
        Ok(())
    }

    /// Low link-space offset of each link level, topmost first. Level
    /// `l` covers link digits `[lo_l, lo_l + B_l)` of a block id.
    fn level_offsets(&self) -> Vec<u32> {
        let mut lo = self.link_bits();
        self.link_levels
            .iter()
            .map(|&b| {
                lo -= b;
                lo
            })
            .collect()
    }
}

/// A basis-state index in `[0, s^M)` together with its base-`s` digit
/// decomposition; digit `k` is the value of QU-bit `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct StateIndex(pub u64);

impl StateIndex {
    pub fn digit(self, site: usize, s: Radix) -> u8 {
        ((self.0 / s.value().pow(site as u32)) % s.value()) as u8
    }

    pub fn with_digit(self, site: usize, s: Radix, digit: u8) -> StateIndex {
        let p = s.value().pow(site as u32);
        let old = (self.0 / p) % s.value();
        StateIndex(self.0 + (digit as u64) * p - old * p)
    }

    pub fn digits(self, total_bits: u32, s: Radix) -> Vec<u8> {
        (0..total_bits as usize).map(|k| self.digit(k, s)).collect()
    }

    pub fn from_digits(digits: &[u8], s: Radix) -> StateIndex {
        let mut v = 0u64;
        for &d in digits.iter().rev() {
            v = v * s.value() + d as u64;
        }
        StateIndex(v)
    }
}

#[derive(Debug)]
enum Node {
    Link(Vec<Option<Box<Node>>>),
    Value(Vec<Complex64>),
}

/// Wall-clock accounting for the link-traversal and state-computation
/// portions of pair transforms.
#[derive(Debug, Clone, Copy, Default)]
pub struct PhaseTimers {
    pub traversal: f64,
    pub compute: f64,
}

/// The `s^M`-dimensional state vector in hierarchical block storage.
///
/// Single-writer: concurrent mutation is not supported. Read-only
/// operations may run concurrently with each other.
#[derive(Debug)]
pub struct HierarchicalStateVector {
    radix: Radix,
    level_spec: LevelSpec,
    root: Option<Box<Node>>,
}

impl HierarchicalStateVector {
    /// All-absent vector (norm zero). Used as the starting point for
    /// worker-local partitions; a flat spec allocates its single value
    /// block immediately.
    pub fn empty(radix: Radix, level_spec: LevelSpec) -> HierarchicalStateVector {
        let root = if level_spec.link_levels.is_empty() {
            Some(Box::new(Node::Value(vec![
                Complex64::default();
                radix.pow(level_spec.state_bits) as usize
            ])))
        } else {
            None
        };
        HierarchicalStateVector {
            radix,
            level_spec,
            root,
        }
    }

    /// Basis state `|index>`: amplitude 1 at `index`, zero elsewhere.
    /// Only blocks on the path to `index` are allocated.
    pub fn new_basis_state(
        total_bits: u32,
        radix: Radix,
        level_spec: LevelSpec,
        index: StateIndex,
    ) -> Result<HierarchicalStateVector> {
        level_spec.validate_for(total_bits)?;
        let limit = radix.pow(total_bits);
        if index.0 >= limit {
            return Err(Error::IndexOutOfRange {
                index: index.0,
                limit,
            });
        }
        let mut v = HierarchicalStateVector::empty(radix, level_spec);
        let block_len = v.block_len() as u64;
        let block = v.ensure_block(index.0 / block_len);
        block[(index.0 % block_len) as usize] = Complex64::new(1.0, 0.0);
        Ok(v)
    }

    pub fn radix(&self) -> Radix {
        self.radix
    }

    pub fn level_spec(&self) -> &LevelSpec {
        &self.level_spec
    }

    pub fn total_bits(&self) -> u32 {
        self.level_spec.total_bits()
    }

    pub fn num_states(&self) -> u64 {
        self.radix.pow(self.total_bits())
    }

    pub fn block_len(&self) -> usize {
        self.radix.pow(self.level_spec.state_bits) as usize
    }

    fn check_site(&self, site: usize) -> Result<()> {
        if site >= self.total_bits() as usize {
            return Err(Error::InvalidSite {
                site,
                total_bits: self.total_bits(),
            });
        }
        Ok(())
    }

    /// Stored amplitude at `index`; zero (without allocating) when the
    /// path crosses an absent marker.
    pub fn get_amplitude(&self, index: StateIndex) -> Result<Amplitude> {
        let limit = self.num_states();
        if index.0 >= limit {
            return Err(Error::IndexOutOfRange {
                index: index.0,
                limit,
            });
        }
        let block_len = self.block_len() as u64;
        Ok(self
            .block(index.0 / block_len)
            .map(|b| b[(index.0 % block_len) as usize])
            .unwrap_or_default())
    }

    /// Allocated value block for `block_id`, if present.
    pub fn block(&self, block_id: u64) -> Option<&[Complex64]> {
        let offsets = self.level_spec.level_offsets();
        let mut node = self.root.as_deref()?;
        for (level, &bits) in self.level_spec.link_levels.iter().enumerate() {
            let slot = self.slot_of(block_id, offsets[level], bits);
            match node {
                Node::Link(slots) => node = slots[slot].as_deref()?,
                Node::Value(_) => unreachable!("value node above the value level"),
            }
        }
        match node {
            Node::Value(amps) => Some(amps),
            Node::Link(_) => unreachable!("link node at the value level"),
        }
    }

    fn block_mut(&mut self, block_id: u64) -> Option<&mut Vec<Complex64>> {
        let offsets = self.level_spec.level_offsets();
        let levels = self.level_spec.link_levels.clone();
        let mut node = self.root.as_deref_mut()?;
        let radix = self.radix;
        for (level, &bits) in levels.iter().enumerate() {
            let slot = ((block_id / radix.pow(offsets[level])) % radix.pow(bits)) as usize;
            match node {
                Node::Link(slots) => node = slots[slot].as_deref_mut()?,
                Node::Value(_) => unreachable!(),
            }
        }
        match node {
            Node::Value(amps) => Some(amps),
            Node::Link(_) => unreachable!(),
        }
    }

    fn slot_of(&self, block_id: u64, lo: u32, bits: u32) -> usize {
        ((block_id / self.radix.pow(lo)) % self.radix.pow(bits)) as usize
    }

    /// Allocates (if needed) and returns the value block for `block_id`.
    pub fn ensure_block(&mut self, block_id: u64) -> &mut Vec<Complex64> {
        let offsets = self.level_spec.level_offsets();
        let levels = self.level_spec.link_levels.clone();
        let radix = self.radix;
        let block_len = self.block_len();
        let mut node = self.root.get_or_insert_with(|| {
            Box::new(if levels.is_empty() {
                Node::Value(vec![Complex64::default(); block_len])
            } else {
                Node::Link(vec_none(radix.pow(levels[0]) as usize))
            })
        });
        for (level, &bits) in levels.iter().enumerate() {
            let slot = ((block_id / radix.pow(offsets[level])) % radix.pow(bits)) as usize;
            let next_len = if level + 1 < levels.len() {
                radix.pow(levels[level + 1]) as usize
            } else {
                0
            };
            match node.as_mut() {
                Node::Link(slots) => {
                    node = slots[slot].get_or_insert_with(|| {
                        Box::new(if next_len > 0 {
                            Node::Link(vec_none(next_len))
                        } else {
                            Node::Value(vec![Complex64::default(); block_len])
                        })
                    });
                }
                Node::Value(_) => unreachable!(),
            }
        }
        match node.as_mut() {
            Node::Value(amps) => amps,
            Node::Link(_) => unreachable!(),
        }
    }

    /// Removes and returns the value block for `block_id`, leaving an
    /// absent marker. Used by the reorganization machinery; note this is
    /// a transfer of ownership, not a deallocation during computation.
    pub fn take_block(&mut self, block_id: u64) -> Option<Vec<Complex64>> {
        if self.level_spec.link_levels.is_empty() {
            return None;
        }
        let offsets = self.level_spec.level_offsets();
        let levels = self.level_spec.link_levels.clone();
        let radix = self.radix;
        let mut node = self.root.as_deref_mut()?;
        for (level, &bits) in levels.iter().enumerate() {
            let slot = ((block_id / radix.pow(offsets[level])) % radix.pow(bits)) as usize;
            match node {
                Node::Link(slots) => {
                    if level + 1 == levels.len() {
                        let child = slots[slot].take()?;
                        match *child {
                            Node::Value(amps) => return Some(amps),
                            Node::Link(_) => unreachable!(),
                        }
                    }
                    node = slots[slot].as_deref_mut()?;
                }
                Node::Value(_) => unreachable!(),
            }
        }
        None
    }

    /// Installs `amps` as the value block for `block_id`.
    pub fn insert_block(&mut self, block_id: u64, amps: Vec<Complex64>) {
        debug_assert_eq!(amps.len(), self.block_len());
        *self.ensure_block(block_id) = amps;
    }

    /// Ids of all allocated value blocks, ascending.
    pub fn allocated_block_ids(&self) -> Vec<u64> {
        let mut ids = Vec::new();
        self.for_each_block(|id, _| ids.push(id));
        ids
    }

    pub fn allocated_block_count(&self) -> usize {
        let mut n = 0;
        self.for_each_block(|_, _| n += 1);
        n
    }

    /// Visits every allocated value block in ascending block-id order.
    pub fn for_each_block<F: FnMut(u64, &[Complex64])>(&self, mut f: F) {
        fn walk<F: FnMut(u64, &[Complex64])>(
            node: &Node,
            id_prefix: u64,
            levels: &[u32],
            offsets: &[u32],
            radix: Radix,
            f: &mut F,
        ) {
            match node {
                Node::Value(amps) => f(id_prefix, amps),
                Node::Link(slots) => {
                    let lo = offsets[0];
                    for (slot, child) in slots.iter().enumerate() {
                        if let Some(child) = child {
                            let id = id_prefix + (slot as u64) * radix.pow(lo);
                            walk(child, id, &levels[1..], &offsets[1..], radix, f);
                        }
                    }
                }
            }
        }
        if let Some(root) = self.root.as_deref() {
            let offsets = self.level_spec.level_offsets();
            walk(
                root,
                0,
                &self.level_spec.link_levels,
                &offsets,
                self.radix,
                &mut f,
            );
        }
    }

    fn for_each_block_mut<F: FnMut(u64, &mut [Complex64])>(&mut self, mut f: F) {
        fn walk<F: FnMut(u64, &mut [Complex64])>(
            node: &mut Node,
            id_prefix: u64,
            levels: &[u32],
            offsets: &[u32],
            radix: Radix,
            f: &mut F,
        ) {
            match node {
                Node::Value(amps) => f(id_prefix, amps),
                Node::Link(slots) => {
                    let lo = offsets[0];
                    for (slot, child) in slots.iter_mut().enumerate() {
                        if let Some(child) = child {
                            let id = id_prefix + (slot as u64) * radix.pow(lo);
                            walk(child, id, &levels[1..], &offsets[1..], radix, f);
                        }
                    }
                }
            }
        }
        let offsets = self.level_spec.level_offsets();
        let levels = self.level_spec.link_levels.clone();
        let radix = self.radix;
        if let Some(root) = self.root.as_deref_mut() {
            walk(root, 0, &levels, &offsets, radix, &mut f);
        }
    }

    /// `Σ |a_i|^2` over allocated blocks only.
    pub fn norm_sq(&self) -> f64 {
        let mut sum = 0.0;
        self.for_each_block(|_, amps| {
            sum += amps.iter().map(|a| a.norm_sqr()).sum::<f64>();
        });
        sum
    }

    /// Applies the 2x2 unitary `u` between digit values `levels.0` and
    /// `levels.1` of QU-bit `site`, restricted to indices whose control
    /// digits match. Pairs entirely inside absent sub-trees are skipped;
    /// a pair with exactly one side absent forces allocation of the
    /// absent side.
    pub fn apply_pair_transform(
        &mut self,
        u: &PairUnitary,
        site: usize,
        levels: (u8, u8),
        controls: &[(usize, u8)],
    ) -> Result<()> {
        let mut timers = PhaseTimers::default();
        self.apply_pair_transform_timed(u, site, levels, controls, &mut timers)
    }

    /// Same as [`apply_pair_transform`](Self::apply_pair_transform) but
    /// accumulates link-traversal and compute wall time into `timers`.
    pub fn apply_pair_transform_timed(
        &mut self,
        u: &PairUnitary,
        site: usize,
        levels: (u8, u8),
        controls: &[(usize, u8)],
        timers: &mut PhaseTimers,
    ) -> Result<()> {
        self.check_site(site)?;
        let s = self.radix.value() as u8;
        let (i, j) = levels;
        if i == j || i >= s || j >= s {
            return Err(Error::InvalidLevels(i, j));
        }
        for &(cs, cd) in controls {
            self.check_site(cs)?;
            if cs == site {
                return Err(Error::InvalidGate(
                    "control site equals target site".into(),
                ));
            }
            if cd >= s {
                return Err(Error::InvalidLevels(cd, cd));
            }
        }
        let dev = u.unitarity_deviation();
        if dev > UNITARY_TOLERANCE {
            return Err(Error::NonUnitary(dev));
        }
        self.apply_pair_raw(u, site, levels, controls, timers);
        Ok(())
    }

    /// Unchecked pair application; preconditions validated by callers.
    fn apply_pair_raw(
        &mut self,
        u: &PairUnitary,
        site: usize,
        (i, j): (u8, u8),
        controls: &[(usize, u8)],
        timers: &mut PhaseTimers,
    ) {
        let state_bits = self.level_spec.state_bits as usize;
        let s = self.radix;
        let in_block: Vec<(usize, u8)> = controls
            .iter()
            .copied()
            .filter(|&(cs, _)| cs < state_bits)
            .collect();
        let link_controls: Vec<(usize, u8)> = controls
            .iter()
            .copied()
            .filter(|&(cs, _)| cs >= state_bits)
            .map(|(cs, cd)| (cs - state_bits, cd))
            .collect();

        // Divisions per amplitude add up fast; evaluate the in-block
        // control predicate once per offset instead.
        let block_len = self.block_len();
        let ctrl_mask: Option<Vec<bool>> = if in_block.is_empty() {
            None
        } else {
            Some(
                (0..block_len)
                    .map(|t| {
                        in_block
                            .iter()
                            .all(|&(cs, cd)| StateIndex(t as u64).digit(cs, s) == cd)
                    })
                    .collect(),
            )
        };
        let passes = |mask: &Option<Vec<bool>>, t: usize| mask.as_ref().map_or(true, |m| m[t]);

        if site < state_bits {
            // Pairs lie inside individual value blocks.
            let t0 = Instant::now();
            let mut targets: Vec<&mut [Complex64]> = Vec::new();
            {
                let radix = s;
                let lc = &link_controls;
                self.for_each_block_mut(|id, amps| {
                    if lc
                        .iter()
                        .all(|&(cs, cd)| StateIndex(id).digit(cs, radix) == cd)
                    {
                        // SAFETY: blocks are disjoint; lifetimes tied to self
                        // for the duration of this call only.
                        let amps: &mut [Complex64] =
                            unsafe { std::slice::from_raw_parts_mut(amps.as_mut_ptr(), amps.len()) };
                        targets.push(amps);
                    }
                });
            }
            let t1 = Instant::now();
            timers.traversal += (t1 - t0).as_secs_f64();
            let stride = s.pow(site as u32) as usize;
            let group = stride * s.value() as usize;
            for amps in targets {
                let mut base = 0;
                while base < block_len {
                    for off in 0..stride {
                        if !passes(&ctrl_mask, base + off) {
                            continue;
                        }
                        let p = base + off + i as usize * stride;
                        let q = base + off + j as usize * stride;
                        let (ap, aq) = (amps[p], amps[q]);
                        amps[p] = u.m[0][0] * ap + u.m[0][1] * aq;
                        amps[q] = u.m[1][0] * ap + u.m[1][1] * aq;
                    }
                    base += group;
                }
            }
            timers.compute += t1.elapsed().as_secs_f64();
        } else {
            // Pairs span sibling blocks differing at one link digit.
            let t0 = Instant::now();
            let ls = site - state_bits;
            let ids = self.allocated_block_ids();
            let t1 = Instant::now();
            timers.traversal += (t1 - t0).as_secs_f64();
            let mut seen = std::collections::HashSet::with_capacity(ids.len());
            for id in ids {
                let d = StateIndex(id).digit(ls, s);
                if d != i && d != j {
                    continue;
                }
                let base = StateIndex(id).with_digit(ls, s, i).0;
                if !seen.insert(base) {
                    continue;
                }
                if !link_controls
                    .iter()
                    .all(|&(cs, cd)| cs == ls || StateIndex(id).digit(cs, s) == cd)
                {
                    continue;
                }
                let partner = StateIndex(base).with_digit(ls, s, j).0;
                let have_base = self.block(base).is_some();
                let have_partner = self.block(partner).is_some();
                if !have_base && !have_partner {
                    continue;
                }
                // An absent side stays absent when the element coupling
                // into it is exactly zero (diagonal pulses, bypassed
                // controlled rotations). This keeps the tree from
                // filling up with all-zero blocks.
                let zero = Complex64::new(0.0, 0.0);
                if !have_partner && u.m[1][0] == zero {
                    let a = self.block_mut(base).expect("base allocated");
                    for t in 0..block_len {
                        if passes(&ctrl_mask, t) {
                            a[t] *= u.m[0][0];
                        }
                    }
                } else if !have_base && u.m[0][1] == zero {
                    let b = self.block_mut(partner).expect("partner allocated");
                    for t in 0..block_len {
                        if passes(&ctrl_mask, t) {
                            b[t] *= u.m[1][1];
                        }
                    }
                } else {
                    if !have_base {
                        self.ensure_block(base);
                    }
                    if !have_partner {
                        self.ensure_block(partner);
                    }
                    let (a, b) = self.two_blocks_mut(base, partner);
                    for t in 0..block_len {
                        if !passes(&ctrl_mask, t) {
                            continue;
                        }
                        let (ap, aq) = (a[t], b[t]);
                        a[t] = u.m[0][0] * ap + u.m[0][1] * aq;
                        b[t] = u.m[1][0] * ap + u.m[1][1] * aq;
                    }
                    // Weight can move entirely across the pair; drop a
                    // side that is now empty. Cancellation leaves
                    // ~1e-16 rounding residue rather than exact zeros,
                    // so prune on block norm with a cutoff far below
                    // every comparison tolerance in use.
                    for id in [base, partner] {
                        let residual = self
                            .block(id)
                            .map(|amps| amps.iter().map(|x| x.norm_sqr()).sum::<f64>())
                            .unwrap_or(f64::INFINITY);
                        if residual < PRUNE_TOLERANCE * PRUNE_TOLERANCE {
                            self.take_block(id);
                        }
                    }
                }
            }
            timers.compute += t1.elapsed().as_secs_f64();
        }
    }

    fn two_blocks_mut(&mut self, a: u64, b: u64) -> (&mut [Complex64], &mut [Complex64]) {
        assert_ne!(a, b);
        let pa = self.block_mut(a).expect("block a allocated") as *mut Vec<Complex64>;
        let pb = self.block_mut(b).expect("block b allocated") as *mut Vec<Complex64>;
        // SAFETY: a != b address disjoint blocks in the tree.
        unsafe { ((*pa).as_mut_slice(), (*pb).as_mut_slice()) }
    }

    /// Multiplies every amplitude whose digit at `site` is nonzero by
    /// `factor`. Non-unitary: used by the decoherence damping step.
    pub fn scale_excited(&mut self, site: usize, factor: f64) -> Result<()> {
        self.check_site(site)?;
        let state_bits = self.level_spec.state_bits as usize;
        let s = self.radix;
        if site < state_bits {
            self.for_each_block_mut(|_, amps| {
                for (t, a) in amps.iter_mut().enumerate() {
                    if StateIndex(t as u64).digit(site, s) != 0 {
                        *a *= factor;
                    }
                }
            });
        } else {
            let ls = site - state_bits;
            self.for_each_block_mut(|id, amps| {
                if StateIndex(id).digit(ls, s) != 0 {
                    for a in amps.iter_mut() {
                        *a *= factor;
                    }
                }
            });
        }
        Ok(())
    }

    /// Multiplies every amplitude by `factor` (renormalization step).
    pub fn scale_all(&mut self, factor: f64) {
        self.for_each_block_mut(|_, amps| {
            for a in amps.iter_mut() {
                *a *= factor;
            }
        });
    }

    /// Probability distribution over the joint digit values of `sites`,
    /// where `sites[k]` contributes digit `* s^k` to the reported value.
    pub fn register_distribution(&self, sites: &[usize]) -> Result<Vec<f64>> {
        for &site in sites {
            self.check_site(site)?;
        }
        let s = self.radix;
        let n = s.value().pow(sites.len() as u32);
        if n > DENSE_GUARD {
            return Err(Error::SizeGuard { states: n });
        }
        let block_len = self.block_len() as u64;
        let mut dist = vec![0.0; n as usize];
        self.for_each_block(|id, amps| {
            for (t, a) in amps.iter().enumerate() {
                let p = a.norm_sqr();
                if p == 0.0 {
                    continue;
                }
                let idx = StateIndex(id * block_len + t as u64);
                let mut key = 0u64;
                for (k, &site) in sites.iter().enumerate() {
                    key += idx.digit(site, s) as u64 * s.value().pow(k as u32);
                }
                dist[key as usize] += p;
            }
        });
        Ok(dist)
    }

    /// Samples a measurement outcome over `sites`, collapses the state
    /// to the matching subspace and renormalizes. Returns the measured
    /// digit per site (same order as `sites`).
    pub fn measure_register<R: Rng>(&mut self, sites: &[usize], rng: &mut R) -> Result<Vec<u8>> {
        for &site in sites {
            self.check_site(site)?;
        }
        let mut uniq = sites.to_vec();
        uniq.sort_unstable();
        uniq.dedup();
        if uniq.len() != sites.len() {
            return Err(Error::InvalidGate("measurement sites must be distinct".into()));
        }
        let s = self.radix;
        let block_len = self.block_len() as u64;
        let mut outcomes: BTreeMap<u64, f64> = BTreeMap::new();
        self.for_each_block(|id, amps| {
            for (t, a) in amps.iter().enumerate() {
                let p = a.norm_sqr();
                if p == 0.0 {
                    continue;
                }
                let idx = StateIndex(id * block_len + t as u64);
                let mut key = 0u64;
                for (k, &site) in sites.iter().enumerate() {
                    key += idx.digit(site, s) as u64 * s.value().pow(k as u32);
                }
                *outcomes.entry(key).or_insert(0.0) += p;
            }
        });
        let total: f64 = outcomes.values().sum();
        if total < 1e-12 {
            return Err(Error::DegenerateState);
        }
        let r = rng.gen::<f64>() * total;
        let mut acc = 0.0;
        let mut chosen = *outcomes.keys().last().expect("nonempty outcomes");
        let mut chosen_p = *outcomes.values().last().unwrap();
        for (&key, &p) in &outcomes {
            acc += p;
            if r < acc {
                chosen = key;
                chosen_p = p;
                break;
            }
        }
        // Collapse and renormalize survivors.
        let inv = 1.0 / chosen_p.sqrt();
        self.for_each_block_mut(|id, amps| {
            for (t, a) in amps.iter_mut().enumerate() {
                let idx = StateIndex(id * block_len + t as u64);
                let mut key = 0u64;
                for (k, &site) in sites.iter().enumerate() {
                    key += idx.digit(site, s) as u64 * s.value().pow(k as u32);
                }
                if key == chosen {
                    *a *= inv;
                } else {
                    *a = Complex64::default();
                }
            }
        });
        let mut digits = Vec::with_capacity(sites.len());
        let mut key = chosen;
        for _ in 0..sites.len() {
            digits.push((key % s.value()) as u8);
            key /= s.value();
        }
        Ok(digits)
    }

    /// Flat amplitude array of length `s^M`, zero where absent.
    pub fn to_dense(&self) -> Result<Vec<Complex64>> {
        let n = self.num_states();
        if n > DENSE_GUARD {
            return Err(Error::SizeGuard { states: n });
        }
        let block_len = self.block_len() as u64;
        let mut dense = vec![Complex64::default(); n as usize];
        self.for_each_block(|id, amps| {
            let base = (id * block_len) as usize;
            dense[base..base + amps.len()].copy_from_slice(amps);
        });
        Ok(dense)
    }

    /// Writes the debug/oracle snapshot: header `s=<s> M=<M>`, then one
    /// line `<index> <re> <im>` per nonzero amplitude, 17 significant
    /// digits.
    pub fn write_snapshot<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "s={} M={}", self.radix.value(), self.total_bits())?;
        let block_len = self.block_len() as u64;
        let mut result = Ok(());
        self.for_each_block(|id, amps| {
            if result.is_err() {
                return;
            }
            for (t, a) in amps.iter().enumerate() {
                if a.re != 0.0 || a.im != 0.0 {
                    if let Err(e) =
                        writeln!(w, "{} {:.16e} {:.16e}", id * block_len + t as u64, a.re, a.im)
                    {
                        result = Err(e.into());
                        return;
                    }
                }
            }
        });
        result
    }

    /// Reads a snapshot written by [`write_snapshot`](Self::write_snapshot).
    pub fn read_snapshot<R: BufRead>(r: R, level_spec: LevelSpec) -> Result<HierarchicalStateVector> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty snapshot".into()))??;
        let (s, m) = parse_snapshot_header(&header)?;
        level_spec.validate_for(m)?;
        let radix = Radix::from_value(s)?;
        let mut v = HierarchicalStateVector::empty(radix, level_spec);
        let block_len = v.block_len() as u64;
        let limit = v.num_states();
        for line in lines {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split_whitespace();
            let idx: u64 = parts
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| Error::Parse(format!("bad snapshot line: {line}")))?;
            let re: f64 = parts
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| Error::Parse(format!("bad snapshot line: {line}")))?;
            let im: f64 = parts
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| Error::Parse(format!("bad snapshot line: {line}")))?;
            if idx >= limit {
                return Err(Error::IndexOutOfRange { index: idx, limit });
            }
            let block = v.ensure_block(idx / block_len);
            block[(idx % block_len) as usize] = Complex64::new(re, im);
        }
        Ok(v)
    }
}

fn parse_snapshot_header(header: &str) -> Result<(u64, u32)> {
    let mut s = None;
    let mut m = None;
    for tok in header.split_whitespace() {
        if let Some(v) = tok.strip_prefix("s=") {
            s = v.parse().ok();
        } else if let Some(v) = tok.strip_prefix("M=") {
            m = v.parse().ok();
        }
    }
    match (s, m) {
        (Some(s), Some(m)) => Ok((s, m)),
        _ => Err(Error::Parse(format!("bad snapshot header: {header}"))),
    }
}

fn vec_none(n: usize) -> Vec<Option<Box<Node>>> {
    let mut v = Vec::with_capacity(n);
    v.resize_with(n, || None);
    v
}
