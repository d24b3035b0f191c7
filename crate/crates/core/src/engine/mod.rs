//! Max-loss core stability: per-agent losses, the CoreCheck factor of a
//! clustering, blocking coalitions, and the instance bound
//! `beta = min over clusterings of alpha(C)`.

mod enumerate;
mod table;

use std::fmt;

use rayon::prelude::*;
use thiserror::Error;

use crate::metric::{Instance, DEFAULT_TOL};

pub use enumerate::{orbits, Orbit, RgsIter};
use table::{ratio, CoalitionTable, SiteLosses};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("agent {agent} is not a member of the set")]
    AgentNotInSet { agent: usize },
    #[error("invalid clustering: {0}")]
    InvalidClustering(String),
}

/// A partition of the agents into exactly `k` nonempty clusters, stored as a
/// restricted-growth string over agents ordered by (site, copy).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Clustering {
    rgs: Vec<u32>,
    k: usize,
}

impl Clustering {
    /// Builds from any cluster labelling of the agents; labels are canonicalized.
    pub fn from_assignment(inst: &Instance, assignment: &[usize]) -> Result<Self, EngineError> {
        let n = inst.num_agents();
        if assignment.len() != n {
            return Err(EngineError::InvalidClustering(format!(
                "{} agents assigned, instance has {}",
                assignment.len(),
                n
            )));
        }
        let raw: Vec<u32> = assignment.iter().map(|&c| c as u32).collect();
        let rgs = enumerate::canonicalize(&raw);
        let k = rgs.iter().max().map_or(0, |&c| c as usize + 1);
        if k != inst.k() {
            return Err(EngineError::InvalidClustering(format!(
                "{} nonempty clusters, instance requires {}",
                k,
                inst.k()
            )));
        }
        Ok(Self { rgs, k })
    }

    /// Builds from explicit clusters of agent indices.
    pub fn from_clusters(inst: &Instance, clusters: &[Vec<usize>]) -> Result<Self, EngineError> {
        let n = inst.num_agents();
        let mut assignment = vec![usize::MAX; n];
        for (c, members) in clusters.iter().enumerate() {
            if members.is_empty() {
                return Err(EngineError::InvalidClustering(format!("cluster {c} is empty")));
            }
            for &a in members {
                if a >= n {
                    return Err(EngineError::InvalidClustering(format!("agent {a} out of range")));
                }
                if assignment[a] != usize::MAX {
                    return Err(EngineError::InvalidClustering(format!(
                        "agent {} assigned twice",
                        inst.agent_name(a)
                    )));
                }
                assignment[a] = c;
            }
        }
        if let Some(a) = assignment.iter().position(|&c| c == usize::MAX) {
            return Err(EngineError::InvalidClustering(format!(
                "agent {} is not assigned",
                inst.agent_name(a)
            )));
        }
        Self::from_assignment(inst, &assignment)
    }

    pub(crate) fn from_rgs_unchecked(rgs: Vec<u32>, k: usize) -> Self {
        Self { rgs, k }
    }

    /// The canonical restricted-growth string.
    pub fn assignment(&self) -> &[u32] {
        &self.rgs
    }

    pub fn num_clusters(&self) -> usize {
        self.k
    }

    pub fn cluster_of(&self, agent: usize) -> usize {
        self.rgs[agent] as usize
    }

    /// Agent indices per cluster, in cluster-id order.
    pub fn clusters(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.k];
        for (a, &c) in self.rgs.iter().enumerate() {
            out[c as usize].push(a);
        }
        out
    }

    /// Per-cluster site counts.
    pub fn parts(&self, inst: &Instance) -> Vec<Vec<u16>> {
        let mut out = vec![vec![0u16; inst.num_sites()]; self.k];
        for (a, &c) in self.rgs.iter().enumerate() {
            out[c as usize][inst.agent_site(a)] += 1;
        }
        out
    }

    /// Loss of every agent in its own cluster.
    pub fn agent_losses(&self, inst: &Instance) -> Vec<f64> {
        let parts = self.parts(inst);
        let m = inst.num_sites();
        let site_loss: Vec<Vec<f64>> = parts
            .iter()
            .map(|part| {
                (0..m)
                    .map(|s| {
                        (0..m)
                            .filter(|&t| part[t] > 0)
                            .map(|t| inst.dist(s, t))
                            .fold(0.0, f64::max)
                    })
                    .collect()
            })
            .collect();
        (0..self.rgs.len())
            .map(|a| site_loss[self.rgs[a] as usize][inst.agent_site(a)])
            .collect()
    }

    fn check_against(&self, inst: &Instance) -> Result<(), EngineError> {
        if self.rgs.len() != inst.num_agents() {
            return Err(EngineError::InvalidClustering(format!(
                "clustering covers {} agents, instance has {}",
                self.rgs.len(),
                inst.num_agents()
            )));
        }
        if self.k != inst.k() {
            return Err(EngineError::InvalidClustering(format!(
                "clustering has {} clusters, instance requires {}",
                self.k,
                inst.k()
            )));
        }
        Ok(())
    }

    /// Renders like `{G1#0, G1#1, w} {G2, a, b} {G3#0, G3#1, c}`.
    pub fn display<'a>(&'a self, inst: &'a Instance) -> impl fmt::Display + 'a {
        DisplayClusters { clusters: self.clusters(), inst }
    }
}

struct DisplayClusters<'a> {
    clusters: Vec<Vec<usize>>,
    inst: &'a Instance,
}

impl fmt::Display for DisplayClusters<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.clusters.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            let names: Vec<String> = c.iter().map(|&a| self.inst.agent_name(a)).collect();
            write!(f, "{{{}}}", names.join(", "))?;
        }
        Ok(())
    }
}

/// A coalition as a per-site count vector.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Coalition {
    pub counts: Vec<usize>,
}

impl Coalition {
    pub fn new(counts: Vec<usize>) -> Self {
        Self { counts }
    }

    /// Builds from `(label, count)` pairs; unlisted sites get count 0.
    pub fn from_labels(inst: &Instance, entries: &[(&str, usize)]) -> Option<Self> {
        let mut counts = vec![0; inst.num_sites()];
        for &(label, c) in entries {
            let s = inst.site_index(label)?;
            if c > inst.multiplicity()[s] {
                return None;
            }
            counts[s] = c;
        }
        Some(Self { counts })
    }

    pub fn size(&self) -> usize {
        self.counts.iter().sum()
    }

    /// Renders like `G1*2 + c`.
    pub fn describe(&self, inst: &Instance) -> String {
        let parts: Vec<String> = self
            .counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(s, &c)| {
                if c == 1 {
                    inst.labels()[s].clone()
                } else {
                    format!("{}*{}", inst.labels()[s], c)
                }
            })
            .collect();
        parts.join(" + ")
    }
}

/// Result of CoreCheck on one clustering.
#[derive(Debug, Clone, PartialEq)]
pub struct CoreReport {
    /// Smallest alpha for which the clustering is in the alpha-core.
    pub alpha: f64,
    pub witness: Coalition,
    /// Concrete agents realizing the witness: at each site, the copies with
    /// the largest loss in the clustering (lower copy index on ties).
    pub members: Vec<usize>,
    /// `loss_i(C) / loss_i(S)` for each entry of `members`.
    pub ratios: Vec<f64>,
}

/// `loss_i(S) = max_{y in S} d(i, y)` over agent indices.
pub fn loss(agent: usize, set: &[usize], inst: &Instance) -> Result<f64, EngineError> {
    if !set.contains(&agent) {
        return Err(EngineError::AgentNotInSet { agent });
    }
    Ok(set.iter().map(|&y| inst.agent_dist(agent, y)).fold(0.0, f64::max))
}

/// CoreCheck with the coalition table built once and reused across clusterings.
#[derive(Debug, Clone)]
pub struct CoreChecker<'a> {
    inst: &'a Instance,
    threshold: usize,
    table: CoalitionTable,
}

impl<'a> CoreChecker<'a> {
    pub fn new(inst: &'a Instance) -> Self {
        Self::with_threshold(inst, inst.threshold())
    }

    /// Coalitions of size at least `threshold` may block. Threshold 1 drops
    /// the size constraint.
    pub fn with_threshold(inst: &'a Instance, threshold: usize) -> Self {
        Self { inst, threshold, table: CoalitionTable::new(inst, threshold) }
    }

    pub fn instance(&self) -> &'a Instance {
        self.inst
    }

    pub fn threshold(&self) -> usize {
        self.threshold
    }

    pub fn check(&self, c: &Clustering) -> Result<CoreReport, EngineError> {
        c.check_against(self.inst)?;
        let losses = SiteLosses::from_parts(self.inst, &c.parts(self.inst));
        let eval = self.table.evaluate(&losses, f64::INFINITY).expect("no cutoff");
        let counts: Vec<usize> = self.table.counts(eval.shape).iter().map(|&q| q as usize).collect();
        let agent_losses = c.agent_losses(self.inst);
        let members = pick_members(self.inst, &counts, &agent_losses);
        let support: Vec<usize> = (0..counts.len()).filter(|&s| counts[s] > 0).collect();
        let ratios = members
            .iter()
            .map(|&a| {
                let s = self.inst.agent_site(a);
                let in_coalition = support.iter().map(|&t| self.inst.dist(s, t)).fold(0.0, f64::max);
                ratio(agent_losses[a], in_coalition)
            })
            .collect();
        Ok(CoreReport { alpha: eval.alpha, witness: Coalition { counts }, members, ratios })
    }

    /// CoreCheck factor of every clustering in an orbit (they all agree).
    pub fn orbit_alpha(&self, orbit: &Orbit) -> f64 {
        let losses = SiteLosses::from_parts(self.inst, &orbit.parts);
        self.table.evaluate(&losses, f64::INFINITY).expect("no cutoff").alpha
    }

    /// Coalitions whose min ratio exceeds `alpha + tol`.
    pub fn blocking(&self, c: &Clustering, alpha: f64, tol: f64, first_only: bool) -> Vec<Coalition> {
        let losses = SiteLosses::from_parts(self.inst, &c.parts(self.inst));
        let mut out = Vec::new();
        for shape in 0..self.table.len() {
            if self.table.min_ratio(shape, &losses) > alpha + tol {
                out.push(Coalition {
                    counts: self.table.counts(shape).iter().map(|&q| q as usize).collect(),
                });
                if first_only {
                    break;
                }
            }
        }
        out
    }
}

fn pick_members(inst: &Instance, counts: &[usize], agent_losses: &[f64]) -> Vec<usize> {
    let mut members = Vec::new();
    for (s, &q) in counts.iter().enumerate() {
        let mut copies: Vec<usize> = (0..inst.multiplicity()[s]).map(|j| inst.agent_id(s, j)).collect();
        copies.sort_by(|&x, &y| agent_losses[y].total_cmp(&agent_losses[x]).then(x.cmp(&y)));
        let mut chosen = copies[..q].to_vec();
        chosen.sort_unstable();
        members.extend(chosen);
    }
    members
}

/// CoreCheck factor of `c`: the largest alpha such that some coalition of
/// at least `ceil(n/k)` agents alpha-blocks it, and never less than 1.
pub fn core_check(c: &Clustering, inst: &Instance) -> Result<CoreReport, EngineError> {
    CoreChecker::new(inst).check(c)
}

/// Coalitions that alpha-block `c`: min ratio strictly above `alpha + DEFAULT_TOL`.
pub fn blocking_report(c: &Clustering, inst: &Instance, alpha: f64, first_only: bool) -> Vec<Coalition> {
    CoreChecker::new(inst).blocking(c, alpha, DEFAULT_TOL, first_only)
}

/// Every k-clustering, as canonical restricted-growth strings in lexicographic order.
pub fn enumerate_clusterings(inst: &Instance) -> impl Iterator<Item = Clustering> {
    let k = inst.k();
    RgsIter::new(inst.num_agents(), k).map(move |rgs| Clustering::from_rgs_unchecked(rgs, k))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Symmetry {
    /// Every partition of the individual agents.
    None,
    /// One representative per orbit under permutations of same-site copies.
    #[default]
    Reduced,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct BoundOptions {
    pub symmetry: Symmetry,
    /// Split the clustering stream across the current rayon pool.
    pub parallel: bool,
    /// Overrides `ceil(n/k)`.
    pub threshold: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundCertificate {
    pub beta: f64,
    pub argmin: Clustering,
    pub report: CoreReport,
    /// Clusterings (or orbits, under symmetry reduction) that were evaluated.
    pub clusterings_examined: usize,
    /// Concrete clusterings those stand for.
    pub partitions_covered: u128,
}

#[derive(Debug, Clone)]
struct Leader {
    alpha: f64,
    index: usize,
    rgs: Option<Vec<u32>>,
}

/// `beta = min over all k-clusterings of alpha(C)`, ties broken by the
/// smallest canonical encoding, so the result does not depend on evaluation
/// order or parallelism.
pub fn instance_bound(inst: &Instance, opts: &BoundOptions) -> BoundCertificate {
    let checker = CoreChecker::with_threshold(inst, opts.threshold.unwrap_or(inst.threshold()));
    match opts.symmetry {
        Symmetry::Reduced => {
            let items = orbits(inst);
            let covered = items.iter().map(|o| o.size).sum();
            let leader = search(
                &items,
                opts.parallel,
                |o| SiteLosses::from_parts(inst, &o.parts),
                |o| o.canonical(inst).rgs,
                &checker.table,
            );
            finish(&checker, items[leader.index].canonical(inst), items.len(), covered)
        }
        Symmetry::None => {
            let items: Vec<Clustering> = enumerate_clusterings(inst).collect();
            let leader = search(
                &items,
                opts.parallel,
                |c| SiteLosses::from_parts(inst, &c.parts(inst)),
                |c| c.rgs.clone(),
                &checker.table,
            );
            let len = items.len();
            finish(&checker, items[leader.index].clone(), len, len as u128)
        }
    }
}

fn finish(checker: &CoreChecker<'_>, argmin: Clustering, examined: usize, covered: u128) -> BoundCertificate {
    let report = checker.check(&argmin).expect("enumerated clusterings are valid");
    BoundCertificate { beta: report.alpha, argmin, report, clusterings_examined: examined, partitions_covered: covered }
}

fn search<T: Sync>(
    items: &[T],
    parallel: bool,
    losses: impl Fn(&T) -> SiteLosses + Sync,
    canonical: impl Fn(&T) -> Vec<u32> + Sync,
    table: &CoalitionTable,
) -> Leader {
    let scan = |offset: usize, chunk: &[T]| -> Option<Leader> {
        let mut lead: Option<Leader> = None;
        for (i, item) in chunk.iter().enumerate() {
            let cutoff = lead.as_ref().map_or(f64::INFINITY, |l| l.alpha);
            let Some(eval) = table.evaluate(&losses(item), cutoff) else { continue };
            let candidate = Leader { alpha: eval.alpha, index: offset + i, rgs: None };
            lead = Some(match lead {
                None => candidate,
                Some(cur) => pick(cur, candidate, items, &canonical),
            });
        }
        lead
    };
    let lead = if parallel {
        const CHUNK: usize = 64;
        items
            .par_chunks(CHUNK)
            .enumerate()
            .filter_map(|(c, chunk)| scan(c * CHUNK, chunk))
            .reduce_with(|a, b| pick(a, b, items, &canonical))
    } else {
        scan(0, items)
    };
    lead.expect("at least one clustering")
}

fn pick<T>(mut a: Leader, mut b: Leader, items: &[T], canonical: &impl Fn(&T) -> Vec<u32>) -> Leader {
    if a.alpha < b.alpha {
        return a;
    }
    if b.alpha < a.alpha {
        return b;
    }
    let ra = a.rgs.get_or_insert_with(|| canonical(&items[a.index])).clone();
    let rb = b.rgs.get_or_insert_with(|| canonical(&items[b.index])).clone();
    if rb < ra {
        b
    } else {
        a
    }
}

/// CoreCheck over fully expanded agents: every subset of at least the
/// threshold size, no multiplicity shortcuts. Exponential in `n`; for
/// cross-checking [`core_check`].
pub fn expand_and_check(c: &Clustering, inst: &Instance) -> Result<CoreReport, EngineError> {
    c.check_against(inst)?;
    let n = inst.num_agents();
    assert!(n < 64, "expand_and_check is exponential in the agent count");
    let threshold = inst.threshold();
    let clusters = c.clusters();
    let in_cluster: Vec<f64> = (0..n)
        .map(|i| clusters[c.cluster_of(i)].iter().map(|&y| inst.agent_dist(i, y)).fold(0.0, f64::max))
        .collect();
    let mut best = f64::NEG_INFINITY;
    let mut best_counts: Option<Vec<usize>> = None;
    let mut members = Vec::with_capacity(n);
    for mask in 1u64..(1u64 << n) {
        if (mask.count_ones() as usize) < threshold {
            continue;
        }
        members.clear();
        members.extend((0..n).filter(|&i| mask >> i & 1 == 1));
        let value = members
            .iter()
            .map(|&i| {
                let in_coalition = members.iter().map(|&y| inst.agent_dist(i, y)).fold(0.0, f64::max);
                ratio(in_cluster[i], in_coalition)
            })
            .fold(f64::INFINITY, f64::min);
        if value >= best {
            let mut counts = vec![0; inst.num_sites()];
            for &i in &members {
                counts[inst.agent_site(i)] += 1;
            }
            if value > best || best_counts.as_ref().is_some_and(|b| counts < *b) {
                best = value;
                best_counts = Some(counts);
            }
        }
    }
    let counts = best_counts.expect("the full agent set is always eligible");
    let members = pick_members(inst, &counts, &in_cluster);
    let ratios = members
        .iter()
        .map(|&i| {
            let in_coalition = members.iter().map(|&y| inst.agent_dist(i, y)).fold(0.0, f64::max);
            ratio(in_cluster[i], in_coalition)
        })
        .collect();
    Ok(CoreReport { alpha: best.max(1.0), witness: Coalition { counts }, members, ratios })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn point_instance(mult: Vec<usize>, k: usize) -> Instance {
        let m = mult.len();
        Instance::new((0..m).map(|i| format!("s{i}")).collect(), mult, vec![vec![0.0; m]; m], k).unwrap()
    }

    #[test]
    fn singleton_loss_is_zero() {
        let inst = point_instance(vec![1, 2], 1);
        assert_eq!(loss(1, &[1], &inst).unwrap(), 0.0);
        assert_eq!(loss(0, &[1], &inst), Err(EngineError::AgentNotInSet { agent: 0 }));
    }

    #[test]
    fn all_agents_at_one_point() {
        let inst = point_instance(vec![3, 2], 2);
        for c in enumerate_clusterings(&inst) {
            let r = core_check(&c, &inst).unwrap();
            assert_eq!(r.alpha, 1.0);
            assert!(r.ratios.iter().all(|&x| x == 1.0));
        }
    }

    #[test]
    fn forced_singletons_bound_is_one() {
        let d = vec![vec![0.0, 1.0, 2.0], vec![1.0, 0.0, 1.5], vec![2.0, 1.5, 0.0]];
        let inst = Instance::new(vec!["x".into(), "y".into(), "z".into()], vec![1, 1, 1], d, 3).unwrap();
        let cert = instance_bound(&inst, &BoundOptions::default());
        assert_eq!(cert.beta, 1.0);
        assert_eq!(cert.clusterings_examined, 1);
        assert_eq!(cert.argmin.assignment(), &[0, 1, 2]);
    }

    #[test]
    fn zero_distance_conventions() {
        // two far-apart sites of two copies each; cluster mixing them is infinitely blocked
        let d = vec![vec![0.0, 5.0], vec![5.0, 0.0]];
        let inst = Instance::new(vec!["p".into(), "q".into()], vec![2, 2], d, 2).unwrap();
        let mixed = Clustering::from_assignment(&inst, &[0, 1, 0, 1]).unwrap();
        let r = core_check(&mixed, &inst).unwrap();
        assert!(r.alpha.is_infinite());
        assert_eq!(r.witness.counts, vec![0, 2]);
        let pure = Clustering::from_assignment(&inst, &[0, 0, 1, 1]).unwrap();
        assert_eq!(core_check(&pure, &inst).unwrap().alpha, 1.0);
    }

    #[test]
    fn invalid_clusterings() {
        let inst = point_instance(vec![2, 2], 2);
        assert!(Clustering::from_assignment(&inst, &[0, 0, 0]).is_err());
        assert!(Clustering::from_assignment(&inst, &[0, 0, 0, 0]).is_err());
        assert!(Clustering::from_clusters(&inst, &[vec![0, 1], vec![2]]).is_err());
        assert!(Clustering::from_clusters(&inst, &[vec![0, 1], vec![1, 2, 3]]).is_err());
        let other = point_instance(vec![1, 1, 1], 2);
        let c = Clustering::from_assignment(&other, &[0, 1, 1]).unwrap();
        assert!(core_check(&c, &inst).is_err());
    }

    #[test]
    fn infinite_alpha_blocks_nothing() {
        let d = vec![vec![0.0, 1.0, 3.0], vec![1.0, 0.0, 2.5], vec![3.0, 2.5, 0.0]];
        let inst = Instance::new(vec!["x".into(), "y".into(), "z".into()], vec![2, 1, 1], d, 2).unwrap();
        for c in enumerate_clusterings(&inst) {
            assert!(blocking_report(&c, &inst, f64::INFINITY, false).is_empty());
        }
    }

    #[test]
    fn expanded_matches_reduced_on_small_instance() {
        let d = vec![vec![0.0, 1.0, 3.0], vec![1.0, 0.0, 2.5], vec![3.0, 2.5, 0.0]];
        let inst = Instance::new(vec!["x".into(), "y".into(), "z".into()], vec![2, 2, 1], d, 2).unwrap();
        for c in enumerate_clusterings(&inst) {
            assert_eq!(core_check(&c, &inst).unwrap(), expand_and_check(&c, &inst).unwrap());
        }
    }

    #[test]
    fn parallel_and_naive_agree() {
        let d = vec![
            vec![0.0, 1.0, 3.0, 2.0],
            vec![1.0, 0.0, 2.5, 1.5],
            vec![3.0, 2.5, 0.0, 1.2],
            vec![2.0, 1.5, 1.2, 0.0],
        ];
        let inst = Instance::new(
            vec!["x".into(), "y".into(), "z".into(), "v".into()],
            vec![2, 1, 2, 2],
            d,
            3,
        )
        .unwrap();
        let serial = instance_bound(&inst, &BoundOptions::default());
        let par = instance_bound(&inst, &BoundOptions { parallel: true, ..Default::default() });
        let naive = instance_bound(&inst, &BoundOptions { symmetry: Symmetry::None, ..Default::default() });
        assert_eq!(serial, BoundCertificate { clusterings_examined: serial.clusterings_examined, ..par });
        assert_eq!(serial.beta, naive.beta);
        assert_eq!(serial.argmin, naive.argmin);
        assert_eq!(serial.report, naive.report);
        assert_eq!(serial.partitions_covered, naive.partitions_covered);
    }
}
