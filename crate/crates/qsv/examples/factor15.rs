//! Order finding for 15 with base 7: build the circuit, run it, read
//! the period off the transformed register and recover the factors.

use qsv::circuits::{
    build_factor_circuit, execute, factors_from_measurement, FactoringSpec,
};
use qsv::gates::ErrorModel;
use qsv::statevec::{LevelSpec, Radix};

fn main() {
    let spec = FactoringSpec {
        n: 15,
        base: 7,
        a_bits: 4,
    };
    let c = build_factor_circuit(&spec).unwrap();
    let m = c.total_bits;
    println!(
        "N = {}, X = {}, {} control bits, {} bits total, {} lasers",
        spec.n,
        spec.base,
        spec.a_bits,
        m,
        c.laser_count(Radix::Two).unwrap()
    );

    let level_spec = LevelSpec::two_level(m - 6, 6).unwrap();
    for seed in 0..3 {
        let out = execute(&c, Radix::Two, &level_spec, &ErrorModel::ideal(), seed).unwrap();
        let y = out.measured_value(Radix::Two).unwrap();
        match factors_from_measurement(y, spec.a_bits, spec.base, spec.n) {
            Some((p, q)) => println!("seed {seed}: measured {y:2} -> {} = {} x {}", spec.n, p, q),
            None => println!("seed {seed}: measured {y:2} -> no factor (retry)"),
        }
    }
}
