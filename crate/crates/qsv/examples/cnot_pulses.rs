//! Pulse-level expansion of the controlled-NOT for two- and
//! three-state sites, checked against the truth table.

use qsv::gates::{expand_to_lasers, ErrorModel, GateOp, LaserOp};
use qsv::statevec::{HierarchicalStateVector, LevelSpec, Radix, StateIndex};

fn show(s: Radix) {
    let gate = GateOp::CNot {
        control: 1,
        target: 0,
    };
    let lasers = expand_to_lasers(&gate, s).unwrap();
    println!("s = {}: {} pulses", s.value(), lasers.len());
    for op in &lasers {
        describe(op);
    }
    for c in 0..2u64 {
        for t in 0..2u64 {
            let input = StateIndex(c * s.value() + t);
            let mut v = HierarchicalStateVector::new_basis_state(
                2,
                s,
                LevelSpec::flat(2),
                input,
            )
            .unwrap();
            let err = ErrorModel::ideal();
            let mut timers = Default::default();
            for op in &lasers {
                op.apply(&mut v, 0.0, &mut timers).unwrap();
                let _ = &err;
            }
            let expect = StateIndex(c * s.value() + (t ^ c));
            let amp = v.get_amplitude(expect).unwrap();
            println!(
                "  |c={c} t={t}>  ->  |c={} t={}|  amp magnitude {:.6}",
                c,
                t ^ c,
                amp.norm()
            );
        }
    }
    println!();
}

fn describe(op: &LaserOp) {
    let ctl = op
        .control
        .map(|(s, d)| format!(" if site {s} = {d}"))
        .unwrap_or_default();
    println!(
        "  {:?} site {} levels {:?} theta {:+.4} phi {:+.4}{}",
        op.kind, op.target, op.levels, op.theta, op.phi, ctl
    );
}

fn main() {
    show(Radix::Two);
    show(Radix::Three);
}
