//! Effect of pulse-angle noise and decoherence on the order-finding
//! distribution: the ideal peaks smear out as errors grow.

use qsv::circuits::{build_factor_circuit, execute, FactoringSpec};
use qsv::gates::{ErrorModel, GateOp};
use qsv::statevec::{LevelSpec, Radix};

fn main() {
    let spec = FactoringSpec {
        n: 15,
        base: 7,
        a_bits: 3,
    };
    let mut c = build_factor_circuit(&spec).unwrap();
    let measure_sites = match c.ops.pop() {
        Some(GateOp::Measure { sites }) => sites,
        _ => unreachable!("factoring circuits end in a measurement"),
    };
    let m = c.total_bits;
    let level_spec = LevelSpec::two_level(m - 6, 6).unwrap();

    for (sigma, dec) in [(0.0, 0.0), (0.01, 0.0), (0.05, 0.0), (0.01, 0.001)] {
        let err = ErrorModel {
            sigma_theta: sigma,
            decoherence_rate: dec,
            seed: 11,
        };
        let out = execute(&c, Radix::Two, &level_spec, &err, 0).unwrap();
        let dist = out.state.register_distribution(&measure_sites).unwrap();
        let peaks: f64 = [0usize, 2, 4, 6].iter().map(|&y| dist[y]).sum();
        println!(
            "sigma {sigma:5.3} dec {dec:6.4}: norm {:.6}, weight on ideal peaks {:.4}",
            out.state.norm_sq(),
            peaks
        );
    }
}
