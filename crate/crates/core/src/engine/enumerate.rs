//! Enumeration of k-clusterings.
//!
//! [`RgsIter`] walks every set partition of `n` agents into exactly `k`
//! blocks as restricted-growth strings in lexicographic order. [`orbits`]
//! instead yields one representative per orbit of the group that permutes
//! copies of the same site: a clustering up to that symmetry is a multiset
//! of `k` nonempty per-site count vectors summing to the multiplicities.

use crate::metric::Instance;

use super::Clustering;

/// Restricted-growth strings of length `n` with exactly `k` distinct values.
#[derive(Debug, Clone)]
pub struct RgsIter {
    current: Vec<u32>,
    k: usize,
    started: bool,
    done: bool,
}

impl RgsIter {
    pub fn new(n: usize, k: usize) -> Self {
        let done = k == 0 || k > n;
        let mut current = vec![0u32; n];
        if !done {
            // lexicographically smallest: zeros, then 1, 2, ..., k-1 at the tail
            for (j, slot) in current[n - (k - 1)..].iter_mut().enumerate() {
                *slot = j as u32 + 1;
            }
        }
        Self { current, k, started: false, done }
    }

    fn advance(&mut self) -> bool {
        let n = self.current.len();
        let k = self.k as u32;
        let mut prefix_max = vec![0u32; n];
        for i in 1..n {
            prefix_max[i] = prefix_max[i - 1].max(self.current[i]);
        }
        for i in (1..n).rev() {
            let cap = prefix_max[i - 1] + 1;
            let next = self.current[i] + 1;
            if next > cap || next >= k {
                continue;
            }
            let top = prefix_max[i - 1].max(next);
            let needed = (k - 1 - top) as usize;
            if needed > n - 1 - i {
                continue;
            }
            self.current[i] = next;
            let tail = &mut self.current[i + 1..];
            let zeros = tail.len() - needed;
            for (j, slot) in tail.iter_mut().enumerate() {
                *slot = if j < zeros { 0 } else { top + 1 + (j - zeros) as u32 };
            }
            return true;
        }
        false
    }
}

impl Iterator for RgsIter {
    type Item = Vec<u32>;

    fn next(&mut self) -> Option<Vec<u32>> {
        if self.done {
            return None;
        }
        if self.started && !self.advance() {
            self.done = true;
            return None;
        }
        self.started = true;
        Some(self.current.clone())
    }
}

/// One symmetry class of clusterings: `k` per-site count vectors in
/// non-increasing lexicographic order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Orbit {
    pub parts: Vec<Vec<u16>>,
    /// Number of concrete clusterings in the class.
    pub size: u128,
}

impl Orbit {
    /// The lexicographically smallest restricted-growth string in the class.
    pub fn canonical(&self, inst: &Instance) -> Clustering {
        let k = self.parts.len();
        let mut order: Vec<usize> = (0..k).collect();
        // identical parts get identical keys so each distinct arrangement is visited once
        let keys: Vec<usize> = (0..k)
            .map(|p| (0..=p).find(|&q| self.parts[q] == self.parts[p]).unwrap())
            .collect();
        let mut perm: Vec<usize> = order.iter().map(|&p| keys[p]).collect();
        let mut best: Option<Vec<u32>> = None;
        loop {
            // map keys back to concrete part indices, using each duplicate once
            let mut used = vec![false; k];
            for (slot, &key) in perm.iter().enumerate() {
                let p = (key..k).find(|&p| !used[p] && keys[p] == key).unwrap();
                used[p] = true;
                order[slot] = p;
            }
            let mut assignment = Vec::with_capacity(inst.num_agents());
            for s in 0..inst.num_sites() {
                for (label, &p) in order.iter().enumerate() {
                    for _ in 0..self.parts[p][s] {
                        assignment.push(label as u32);
                    }
                }
            }
            let rgs = canonicalize(&assignment);
            if best.as_ref().is_none_or(|b| rgs < *b) {
                best = Some(rgs);
            }
            if !next_permutation(&mut perm) {
                break;
            }
        }
        Clustering::from_rgs_unchecked(best.expect("at least one arrangement"), k)
    }
}

/// Relabels clusters by first appearance.
pub(crate) fn canonicalize(assignment: &[u32]) -> Vec<u32> {
    let mut map: Vec<Option<u32>> = Vec::new();
    let mut next = 0;
    assignment
        .iter()
        .map(|&c| {
            let c = c as usize;
            if c >= map.len() {
                map.resize(c + 1, None);
            }
            *map[c].get_or_insert_with(|| {
                next += 1;
                next - 1
            })
        })
        .collect()
}

fn next_permutation(v: &mut [usize]) -> bool {
    if v.len() < 2 {
        return false;
    }
    let mut i = v.len() - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = v.len() - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

fn factorial(n: usize) -> u128 {
    (1..=n as u128).product()
}

/// Orbit size: `prod m_s! / (prod_{p,s} c_{p,s}! * prod_j r_j!)` where `r_j`
/// counts repeated identical parts.
fn orbit_size(mult: &[usize], parts: &[Vec<u16>]) -> u128 {
    let numerator: u128 = mult.iter().map(|&c| factorial(c)).product();
    let mut denominator: u128 = parts
        .iter()
        .flat_map(|p| p.iter().map(|&c| factorial(c as usize)))
        .product();
    let mut run = 1;
    for w in parts.windows(2) {
        if w[0] == w[1] {
            run += 1;
        } else {
            denominator *= factorial(run);
            run = 1;
        }
    }
    denominator *= factorial(run);
    numerator / denominator
}

/// All orbits of k-clusterings of `inst`.
pub fn orbits(inst: &Instance) -> Vec<Orbit> {
    let mult: Vec<u16> = inst.multiplicity().iter().map(|&c| c as u16).collect();
    let mut out = Vec::new();
    let mut parts = Vec::with_capacity(inst.k());
    let mut remaining = mult.clone();
    split(&mut remaining, None, inst.k(), &mut parts, &mut out);
    for orbit in &mut out {
        orbit.size = orbit_size(inst.multiplicity(), &orbit.parts);
    }
    out
}

fn split(
    remaining: &mut Vec<u16>,
    prev: Option<&[u16]>,
    parts_left: usize,
    parts: &mut Vec<Vec<u16>>,
    out: &mut Vec<Orbit>,
) {
    let total: usize = remaining.iter().map(|&c| c as usize).sum();
    if parts_left == 1 {
        if total > 0 && prev.is_none_or(|p| remaining.as_slice() <= p) {
            parts.push(remaining.clone());
            out.push(Orbit { parts: parts.clone(), size: 0 });
            parts.pop();
        }
        return;
    }
    if total < parts_left {
        return;
    }
    // candidate parts in decreasing lexicographic order, capped by `prev`
    let m = remaining.len();
    let mut part = remaining.clone();
    loop {
        let size: usize = part.iter().map(|&c| c as usize).sum();
        if size > 0 && total - size >= parts_left - 1 && prev.is_none_or(|p| part.as_slice() <= p) {
            for s in 0..m {
                remaining[s] -= part[s];
            }
            parts.push(part.clone());
            let last = parts.last().unwrap().clone();
            split(remaining, Some(&last), parts_left - 1, parts, out);
            parts.pop();
            for s in 0..m {
                remaining[s] += part[s];
            }
        }
        // decrement odometer: last site fastest
        let mut pos = m;
        loop {
            if pos == 0 {
                return;
            }
            pos -= 1;
            if part[pos] > 0 {
                part[pos] -= 1;
                part[pos + 1..].copy_from_slice(&remaining[pos + 1..]);
                break;
            }
        }
    }
}
