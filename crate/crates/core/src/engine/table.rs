//! Precomputed coalition shapes and the CoreCheck inner loop.
//!
//! Agents at one site are interchangeable inside a coalition: their loss in
//! the coalition depends only on which sites the coalition touches. A
//! coalition is therefore a count vector `q` over sites, and the best choice
//! of concrete agents for `q` takes the `q[s]` copies of site `s` with the
//! largest loss in the clustering.

use crate::metric::Instance;

/// Loss ratio with the zero-loss conventions: `0/0 = 1`, `x/0 = +inf`.
#[inline]
pub(crate) fn ratio(in_clustering: f64, in_coalition: f64) -> f64 {
    if in_coalition == 0.0 {
        if in_clustering == 0.0 {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        in_clustering / in_coalition
    }
}

/// Loss of every copy of every site in one clustering, sorted descending per site.
#[derive(Debug, Clone)]
pub(crate) struct SiteLosses {
    start: Vec<usize>,
    losses: Vec<f64>,
}

impl SiteLosses {
    /// Builds from per-cluster site counts (`parts[p][s]` copies of `s` in cluster `p`).
    pub(crate) fn from_parts<P: AsRef<[u16]>>(inst: &Instance, parts: &[P]) -> Self {
        let m = inst.num_sites();
        let mut start = Vec::with_capacity(m + 1);
        let mut acc = 0;
        for &c in inst.multiplicity() {
            start.push(acc);
            acc += c;
        }
        start.push(acc);
        let mut losses = vec![0.0; acc];
        let mut fill = start.clone();
        let mut support = Vec::with_capacity(m);
        for part in parts {
            let part = part.as_ref();
            support.clear();
            support.extend((0..m).filter(|&s| part[s] > 0));
            for &s in &support {
                let loss = support.iter().map(|&t| inst.dist(s, t)).fold(0.0, f64::max);
                for _ in 0..part[s] {
                    losses[fill[s]] = loss;
                    fill[s] += 1;
                }
            }
        }
        for s in 0..m {
            losses[start[s]..start[s + 1]].sort_unstable_by(|a, b| b.total_cmp(a));
        }
        Self { start, losses }
    }

    /// The `rank`-th largest loss among copies of `site` (rank 0 = largest).
    #[inline]
    pub(crate) fn get(&self, site: usize, rank: usize) -> f64 {
        self.losses[self.start[site] + rank]
    }
}

/// Outcome of evaluating one clustering against every coalition shape.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Evaluation {
    pub alpha: f64,
    pub shape: usize,
}

/// Every coalition count vector of size at least the threshold, in
/// lexicographic order, with each member site's loss inside the coalition.
#[derive(Debug, Clone)]
pub(crate) struct CoalitionTable {
    sites: usize,
    counts: Vec<u16>,
    support_start: Vec<usize>,
    support: Vec<(usize, f64)>,
}

impl CoalitionTable {
    pub(crate) fn new(inst: &Instance, threshold: usize) -> Self {
        let m = inst.num_sites();
        let mult = inst.multiplicity();
        let mut counts = Vec::new();
        let mut support_start = vec![0];
        let mut support = Vec::new();
        let mut q = vec![0usize; m];
        loop {
            let size: usize = q.iter().sum();
            if size >= threshold.max(1) {
                let members: Vec<usize> = (0..m).filter(|&s| q[s] > 0).collect();
                for &s in &members {
                    let loss = members.iter().map(|&t| inst.dist(s, t)).fold(0.0, f64::max);
                    support.push((s, loss));
                }
                support_start.push(support.len());
                counts.extend(q.iter().map(|&c| c as u16));
            }
            // odometer, last site fastest, so shapes come out in lexicographic order
            let mut pos = m;
            loop {
                if pos == 0 {
                    return Self { sites: m, counts, support_start, support };
                }
                pos -= 1;
                if q[pos] < mult[pos] {
                    q[pos] += 1;
                    for c in &mut q[pos + 1..] {
                        *c = 0;
                    }
                    break;
                }
            }
        }
    }

    pub(crate) fn len(&self) -> usize {
        self.support_start.len() - 1
    }

    pub(crate) fn counts(&self, shape: usize) -> &[u16] {
        &self.counts[shape * self.sites..(shape + 1) * self.sites]
    }

    #[inline]
    fn support(&self, shape: usize) -> &[(usize, f64)] {
        &self.support[self.support_start[shape]..self.support_start[shape + 1]]
    }

    /// Min ratio over the members of one coalition shape.
    #[inline]
    pub(crate) fn min_ratio(&self, shape: usize, losses: &SiteLosses) -> f64 {
        let counts = self.counts(shape);
        self.support(shape)
            .iter()
            .map(|&(s, in_coalition)| ratio(losses.get(s, counts[s] as usize - 1), in_coalition))
            .fold(f64::INFINITY, f64::min)
    }

    /// CoreCheck factor of a clustering.
    ///
    /// The witness is the lexicographically smallest shape attaining the
    /// maximum. Returns `None` as soon as the factor is known to exceed
    /// `cutoff`.
    pub(crate) fn evaluate(&self, losses: &SiteLosses, cutoff: f64) -> Option<Evaluation> {
        let mut best = f64::NEG_INFINITY;
        let mut best_shape = usize::MAX;
        for shape in 0..self.len() {
            let counts = self.counts(shape);
            let mut value = f64::INFINITY;
            for &(s, in_coalition) in self.support(shape) {
                let r = ratio(losses.get(s, counts[s] as usize - 1), in_coalition);
                if r < value {
                    value = r;
                    if value <= best {
                        break;
                    }
                }
            }
            if value > best {
                best = value;
                best_shape = shape;
                if best > cutoff {
                    return None;
                }
            }
        }
        if best_shape == usize::MAX {
            // no eligible coalition at all
            return Some(Evaluation { alpha: 1.0, shape: usize::MAX });
        }
        Some(Evaluation { alpha: best.max(1.0), shape: best_shape })
    }
}
