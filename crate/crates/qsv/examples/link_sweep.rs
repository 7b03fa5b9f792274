//! How the link/value split drives the parallel model time: too few
//! link bits cannot be partitioned at all, too many make every pulse
//! pay the full tree traversal.

use qsv::circuits::find_benchmark;
use qsv::costmodel::{link_bit_sweep, MachineParams};
use qsv::gates::GateOp;

fn main() {
    let bench = find_benchmark("mult2").unwrap();
    let mut c = qsv::circuits::build_factor_circuit(&bench.factoring.unwrap()).unwrap();
    if matches!(c.ops.last(), Some(GateOp::Measure { .. })) {
        c.ops.pop();
    }
    let mp = MachineParams::t3e();
    for n_p in [1u32, 3] {
        println!("np = {n_p}");
        let points = link_bit_sweep(&c, bench.s, n_p, &mp, 1..=c.total_bits - 1).unwrap();
        for (l, t) in points {
            if t.is_finite() {
                println!("  {l:2} link bits: {t:10.3} s");
            } else {
                println!("  {l:2} link bits: infeasible");
            }
        }
    }
}
