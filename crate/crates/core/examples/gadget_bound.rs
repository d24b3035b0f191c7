//! Prints the instance bound of the gadget for a few sizes.
//!
//! cargo run --release --example gadget_bound -p corecheck-core

use std::time::Instant;

use corecheck::{build_gadget, instance_bound, BoundOptions, GadgetParams};

fn main() {
    for (k, n) in [(3, 9), (3, 12), (4, 12)] {
        let inst = build_gadget(&GadgetParams::new(k, n)).expect("valid parameters");
        let start = Instant::now();
        let cert = instance_bound(&inst, &BoundOptions::default());
        println!(
            "k={k} n={n}: beta={:.12} over {} orbits ({} clusterings) in {:.2?}",
            cert.beta,
            cert.clusterings_examined,
            cert.partitions_covered,
            start.elapsed()
        );
        println!("  argmin  {}", cert.argmin.display(&inst));
        println!("  witness {}", cert.report.witness.describe(&inst));
    }
}
