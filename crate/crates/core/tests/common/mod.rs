//! Independent reference implementations shared by the integration tests.
//!
//! Everything here works on fully expanded agents with plain loops and
//! bitmasks; nothing goes through the library's enumeration or tables.

#![allow(dead_code, clippy::needless_range_loop)]

use corecheck::{from_points, metric_closure, EuclideanConfig, GraphSpec, Instance};
use rand::Rng;

/// Max-loss of agent `i` in the agent set `mask`.
pub fn loss_in(inst: &Instance, i: usize, mask: u64) -> f64 {
    let mut l: f64 = 0.0;
    for j in 0..inst.num_agents() {
        if mask >> j & 1 == 1 {
            l = l.max(inst.agent_dist(i, j));
        }
    }
    l
}

pub fn ratio(lc: f64, ls: f64) -> f64 {
    if ls == 0.0 {
        if lc == 0.0 {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        lc / ls
    }
}

/// CoreCheck exactly as stated: every coalition of at least `threshold`
/// agents, min ratio over its members, max over coalitions, floored at 1.
pub fn naive_alpha_with(inst: &Instance, assignment: &[usize], threshold: usize) -> f64 {
    let n = inst.num_agents();
    assert!(n < 64);
    let mut cluster_mask = vec![0u64; n];
    for i in 0..n {
        for j in 0..n {
            if assignment[i] == assignment[j] {
                cluster_mask[i] |= 1 << j;
            }
        }
    }
    let lc: Vec<f64> = (0..n).map(|i| loss_in(inst, i, cluster_mask[i])).collect();
    let mut alpha: f64 = 1.0;
    for s in 1u64..(1 << n) {
        if (s.count_ones() as usize) < threshold {
            continue;
        }
        let mut worst = f64::INFINITY;
        for i in 0..n {
            if s >> i & 1 == 1 {
                worst = worst.min(ratio(lc[i], loss_in(inst, i, s)));
            }
        }
        alpha = alpha.max(worst);
    }
    alpha
}

pub fn naive_alpha(inst: &Instance, assignment: &[usize]) -> f64 {
    naive_alpha_with(inst, assignment, inst.threshold())
}

/// Every assignment of `n` agents to exactly `k` unlabeled nonempty
/// clusters, by recursive first-fit (cluster ids in order of first use).
pub fn all_partitions(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(i: usize, n: usize, k: usize, used: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if n - i < k - used {
            return;
        }
        if i == n {
            out.push(cur.clone());
            return;
        }
        for c in 0..=used.min(k - 1) {
            cur.push(c);
            go(i + 1, n, k, used.max(c + 1), cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, k, 0, &mut Vec::new(), &mut out);
    out
}

/// Minimum of [`naive_alpha`] over every k-partition.
pub fn naive_bound(inst: &Instance) -> f64 {
    all_partitions(inst.num_agents(), inst.k())
        .iter()
        .map(|p| naive_alpha(inst, p))
        .fold(f64::INFINITY, f64::min)
}

fn random_multiplicities(rng: &mut impl Rng, max_agents: usize) -> Vec<usize> {
    let m = rng.random_range(1..=max_agents.min(5));
    let mut mult = vec![1; m];
    let mut total = m;
    while total < max_agents && rng.random_bool(0.6) {
        let s = rng.random_range(0..m);
        mult[s] += 1;
        total += 1;
    }
    mult
}

/// A small random instance: integer grid points (so ties and coincident
/// sites are common) or the closure of a random connected graph.
pub fn random_instance(rng: &mut impl Rng, max_agents: usize) -> Instance {
    let mult = random_multiplicities(rng, max_agents);
    let m = mult.len();
    let n: usize = mult.iter().sum();
    let k = rng.random_range(1..=n.min(4));
    let labels: Vec<String> = (0..m).map(|i| format!("s{i}")).collect();
    if rng.random_bool(0.5) {
        let coords = (0..m)
            .map(|_| vec![rng.random_range(0..4) as f64, rng.random_range(0..4) as f64])
            .collect();
        from_points(&EuclideanConfig { labels, multiplicity: mult, coords, k }).unwrap()
    } else {
        let mut g = GraphSpec::new(labels.clone(), mult, k);
        for i in 1..m {
            let j = rng.random_range(0..i);
            g.edge(&labels[i], &labels[j], rng.random_range(1..=4) as f64).unwrap();
        }
        for _ in 0..m {
            let (i, j) = (rng.random_range(0..m), rng.random_range(0..m));
            if i != j {
                g.edge(&labels[i], &labels[j], rng.random_range(1..=4) as f64).unwrap();
            }
        }
        metric_closure(&g).unwrap()
    }
}

/// A uniformly random k-clustering assignment (rejection sampling).
pub fn random_assignment(rng: &mut impl Rng, n: usize, k: usize) -> Vec<usize> {
    loop {
        let a: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
        let mut seen = vec![false; k];
        for &c in &a {
            seen[c] = true;
        }
        if seen.iter().all(|&s| s) {
            return a;
        }
    }
}
