//! Analytical runtime predictions for the whole benchmark catalog on
//! both machine presets.

use qsv::circuits::benchmark_catalog;
use qsv::costmodel::{predict, rows_to_csv, MachineParams};

fn main() {
    let nps = [0u32, 1, 2, 3];
    for mp in [MachineParams::t3e(), MachineParams::sp2()] {
        for bench in benchmark_catalog() {
            if bench.factoring.is_none() {
                continue;
            }
            let rows = predict(&bench, &mp, &nps).unwrap();
            print!("{}", rows_to_csv(&rows));
        }
    }
}
