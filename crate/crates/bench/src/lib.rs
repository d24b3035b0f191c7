//! Shared inputs for the criterion benches.

use corecheck::{build_gadget, Clustering, GadgetParams, Instance};

pub fn gadget(k: usize, n: usize) -> Instance {
    build_gadget(&GadgetParams::new(k, n)).expect("valid gadget parameters")
}

/// A fixed clustering of `inst`: agents dealt round-robin into `k` clusters.
pub fn round_robin(inst: &Instance) -> Clustering {
    let assignment: Vec<usize> = (0..inst.num_agents()).map(|a| a % inst.k()).collect();
    Clustering::from_assignment(inst, &assignment).expect("every cluster is nonempty")
}
