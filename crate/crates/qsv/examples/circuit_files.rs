//! Round-trip a circuit through the text format and a state through
//! the snapshot format.

use qsv::circuits::{build_factor_circuit, Circuit, FactoringSpec};
use qsv::gates::ErrorModel;
use qsv::statevec::{HierarchicalStateVector, LevelSpec, Radix};

fn main() {
    let spec = FactoringSpec {
        n: 15,
        base: 7,
        a_bits: 2,
    };
    let c = build_factor_circuit(&spec).unwrap();
    let text = c.to_text(Radix::Two);
    println!("--- circuit text ({} lines) ---", text.lines().count());
    for line in text.lines().take(12) {
        println!("{line}");
    }
    println!("...");

    let (parsed, s) = Circuit::from_text(&text).unwrap();
    assert_eq!(parsed, c);
    println!("parsed back: {} ops, radix {}", parsed.ops.len(), s.value());

    let level_spec = LevelSpec::two_level(c.total_bits - 5, 5).unwrap();
    let out = qsv::circuits::execute(&c, s, &level_spec, &ErrorModel::ideal(), 0).unwrap();
    let dir = std::env::temp_dir().join("qsv_snapshot_demo");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("state.qs");
    let mut f = std::io::BufWriter::new(std::fs::File::create(&path).unwrap());
    out.state.write_snapshot(&mut f).unwrap();
    drop(f);
    let reader = std::io::BufReader::new(std::fs::File::open(&path).unwrap());
    let restored = HierarchicalStateVector::read_snapshot(reader, level_spec).unwrap();
    println!(
        "snapshot round trip: {} blocks, norm {:.12}",
        restored.allocated_block_count(),
        restored.norm_sq()
    );
    std::fs::remove_file(&path).unwrap();
}
