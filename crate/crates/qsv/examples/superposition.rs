//! Uniform superposition on a small register and its measurement
//! distribution, the minimal end-to-end use of the state vector.

use qsv::gates::{apply_gate, ErrorModel, GateOp};
use qsv::statevec::{HierarchicalStateVector, LevelSpec, Radix, StateIndex};
use std::f64::consts::PI;

fn main() {
    let bits = 4;
    let spec = LevelSpec::two_level(2, 2).unwrap();
    let mut v =
        HierarchicalStateVector::new_basis_state(bits, Radix::Two, spec, StateIndex(0)).unwrap();

    // Rotate(pi/2, pi/2) maps |0> to (|0> + |1>)/sqrt(2) up to phase.
    let err = ErrorModel::ideal();
    let mut ordinal = 0;
    for site in 0..bits as usize {
        let g = GateOp::Rotate {
            site,
            theta: PI / 2.0,
            phi: PI / 2.0,
        };
        apply_gate(&mut v, &g, &err, &mut ordinal).unwrap();
    }

    println!("norm_sq = {:.12}", v.norm_sq());
    println!("allocated blocks = {}", v.allocated_block_count());
    let sites: Vec<usize> = (0..bits as usize).collect();
    let dist = v.register_distribution(&sites).unwrap();
    for (value, p) in dist.iter().enumerate() {
        println!("|{value:2}>  p = {p:.6}");
    }
}
