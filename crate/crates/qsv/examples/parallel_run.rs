//! Partitioned execution: run a benchmark across s^np workers and
//! print the step plan and movement statistics.

use qsv::circuits::find_benchmark;
use qsv::gates::ErrorModel;
use qsv::parallel::run_parallel;

fn main() {
    let bench = find_benchmark("mult2").unwrap();
    let c = qsv::circuits::build_factor_circuit(&bench.factoring.unwrap()).unwrap();
    let level_spec = bench.level_spec();

    for n_p in [0u32, 1, 2, 3] {
        let (state, stats, _) =
            run_parallel(&c, bench.s, &level_spec, &ErrorModel::ideal(), n_p, 1).unwrap();
        println!(
            "np={n_p}: {} workers, {} lasers, {} reorg steps, {} blocks moved, norm {:.9}",
            stats.workers,
            stats.laser_ops,
            stats.reorg_steps,
            stats.blocks_moved,
            state.norm_sq()
        );
        for (k, step) in stats.steps.iter().enumerate() {
            println!(
                "  step {k}: bits {:?}, {} lasers, {} blocks in",
                step.parallel_bits, step.lasers, step.blocks_moved
            );
        }
    }
}
