//! Lazy block allocation at work: track how much of the tree is
//! resident while a factoring circuit runs, versus the dense size.

use qsv::circuits::{build_factor_circuit, FactoringSpec};
use qsv::gates::{apply_gate, ErrorModel, GateOp};
use qsv::statevec::{HierarchicalStateVector, LevelSpec, Radix, StateIndex};

fn main() {
    let spec = FactoringSpec {
        n: 15,
        base: 7,
        a_bits: 3,
    };
    let mut c = build_factor_circuit(&spec).unwrap();
    if matches!(c.ops.last(), Some(GateOp::Measure { .. })) {
        c.ops.pop();
    }
    let m = c.total_bits;
    let level_spec = LevelSpec::two_level(m - 6, 6).unwrap();
    let mut v =
        HierarchicalStateVector::new_basis_state(m, Radix::Two, level_spec, StateIndex(0))
            .unwrap();

    let total_blocks = 1u64 << (m - 6);
    println!("{m} bits, {total_blocks} blocks of {} amplitudes if dense", 1u64 << 6);
    let err = ErrorModel::ideal();
    let mut ordinal = 0;
    let step = c.ops.len() / 10;
    for (i, op) in c.ops.iter().enumerate() {
        apply_gate(&mut v, op, &err, &mut ordinal).unwrap();
        if i % step == 0 || i + 1 == c.ops.len() {
            let n = v.allocated_block_count() as u64;
            println!(
                "gate {i:4}: {n:4} blocks resident ({:5.2}% of dense)",
                100.0 * n as f64 / total_blocks as f64
            );
        }
    }
    println!("final norm_sq = {:.12}", v.norm_sq());
}
