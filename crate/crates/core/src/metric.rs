//! Finite pseudometric spaces over weighted sites.
//!
//! A site is a location that hosts one or more agents ("copies") at mutual
//! distance zero. Distances are stored per site, so an instance with `m`
//! sites and `n` agents only carries an `m × m` matrix.

use std::fmt;

use thiserror::Error;

/// Default comparison tolerance for distances.
pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricError {
    #[error("sites {from} and {to} are not connected")]
    DisconnectedGraph { from: String, to: String },
    #[error("edge {from}-{to} has non-positive length {length}")]
    NonPositiveEdge { from: String, to: String, length: f64 },
    #[error("site {site} has a non-finite coordinate")]
    NonFiniteCoordinate { site: String },
    #[error("distance between {from} and {to} is not finite")]
    NonFiniteDistance { from: String, to: String },
    #[error("site {site} has multiplicity 0")]
    ZeroMultiplicity { site: String },
    #[error("{agents} agents cannot form {k} nonempty clusters")]
    TooFewAgents { agents: usize, k: usize },
    #[error("k must be positive")]
    ZeroClusters,
    #[error("unknown site label `{0}`")]
    UnknownLabel(String),
    #[error("duplicate site label `{0}`")]
    DuplicateLabel(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
}

/// A finite pseudometric space over sites with agent multiplicities, plus the
/// number of clusters `k` a clustering of it must use.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    labels: Vec<String>,
    multiplicity: Vec<usize>,
    dist: Vec<Vec<f64>>,
    k: usize,
    /// Coordinates, when the instance was built from points.
    coords: Option<Vec<Vec<f64>>>,
    /// Global index of each site's first agent.
    offsets: Vec<usize>,
}

impl Instance {
    /// Builds an instance from a full distance matrix.
    ///
    /// Only structural properties are checked here (shape, finiteness,
    /// multiplicities, `n >= k`). Metric axioms are reported by [`validate`].
    pub fn new(
        labels: Vec<String>,
        multiplicity: Vec<usize>,
        dist: Vec<Vec<f64>>,
        k: usize,
    ) -> Result<Self, MetricError> {
        let m = labels.len();
        if multiplicity.len() != m {
            return Err(MetricError::Shape(format!(
                "{} labels but {} multiplicities",
                m,
                multiplicity.len()
            )));
        }
        if dist.len() != m || dist.iter().any(|row| row.len() != m) {
            return Err(MetricError::Shape(format!("distance matrix must be {m}x{m}")));
        }
        for (i, label) in labels.iter().enumerate() {
            if labels[..i].contains(label) {
                return Err(MetricError::DuplicateLabel(label.clone()));
            }
        }
        if let Some(s) = multiplicity.iter().position(|&c| c == 0) {
            return Err(MetricError::ZeroMultiplicity { site: labels[s].clone() });
        }
        for i in 0..m {
            for j in 0..m {
                if !dist[i][j].is_finite() {
                    return Err(MetricError::NonFiniteDistance {
                        from: labels[i].clone(),
                        to: labels[j].clone(),
                    });
                }
            }
        }
        if k == 0 {
            return Err(MetricError::ZeroClusters);
        }
        let agents: usize = multiplicity.iter().sum();
        if agents < k {
            return Err(MetricError::TooFewAgents { agents, k });
        }
        let offsets = multiplicity
            .iter()
            .scan(0, |acc, &c| {
                let start = *acc;
                *acc += c;
                Some(start)
            })
            .collect();
        Ok(Self { labels, multiplicity, dist, k, coords: None, offsets })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn multiplicity(&self) -> &[usize] {
        &self.multiplicity
    }

    pub fn dist_matrix(&self) -> &[Vec<f64>] {
        &self.dist
    }

    #[inline]
    pub fn dist(&self, a: usize, b: usize) -> f64 {
        self.dist[a][b]
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn coords(&self) -> Option<&[Vec<f64>]> {
        self.coords.as_deref()
    }

    /// Number of sites.
    pub fn num_sites(&self) -> usize {
        self.labels.len()
    }

    /// Number of agents, counting multiplicities.
    pub fn num_agents(&self) -> usize {
        self.multiplicity.iter().sum()
    }

    /// Smallest coalition size that may block: `ceil(n / k)`.
    pub fn threshold(&self) -> usize {
        self.num_agents().div_ceil(self.k)
    }

    pub fn site_index(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Site hosting the agent with global index `agent`.
    pub fn agent_site(&self, agent: usize) -> usize {
        match self.offsets.binary_search(&agent) {
            // offsets are strictly increasing since multiplicities are positive
            Ok(s) => s,
            Err(s) => s - 1,
        }
    }

    /// Global index of copy `copy` of site `site`.
    pub fn agent_id(&self, site: usize, copy: usize) -> usize {
        debug_assert!(copy < self.multiplicity[site]);
        self.offsets[site] + copy
    }

    /// Distance between two agents.
    pub fn agent_dist(&self, a: usize, b: usize) -> f64 {
        self.dist[self.agent_site(a)][self.agent_site(b)]
    }

    /// Human-readable agent name, e.g. `G1#1`; sites of multiplicity one keep their label.
    pub fn agent_name(&self, agent: usize) -> String {
        let s = self.agent_site(agent);
        if self.multiplicity[s] == 1 {
            self.labels[s].clone()
        } else {
            format!("{}#{}", self.labels[s], agent - self.offsets[s])
        }
    }

    pub fn with_k(&self, k: usize) -> Result<Self, MetricError> {
        let mut out = Self::new(self.labels.clone(), self.multiplicity.clone(), self.dist.clone(), k)?;
        out.coords = self.coords.clone();
        Ok(out)
    }

    /// Multiplies every distance (and coordinate) by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        for row in &mut out.dist {
            for d in row.iter_mut() {
                *d *= factor;
            }
        }
        if let Some(coords) = &mut out.coords {
            for p in coords.iter_mut() {
                for x in p.iter_mut() {
                    *x *= factor;
                }
            }
        }
        out
    }

    /// One site per agent, each of multiplicity one. Copies are named `label#i`.
    pub fn expand(&self) -> Self {
        let n = self.num_agents();
        let labels = (0..n)
            .map(|a| {
                let s = self.agent_site(a);
                format!("{}#{}", self.labels[s], a - self.offsets[s])
            })
            .collect();
        let dist = (0..n)
            .map(|a| (0..n).map(|b| self.agent_dist(a, b)).collect())
            .collect();
        let mut out = Self::new(labels, vec![1; n], dist, self.k).expect("expansion preserves structure");
        out.coords = self
            .coords
            .as_ref()
            .map(|c| (0..n).map(|a| c[self.agent_site(a)].clone()).collect());
        out
    }

    /// Largest pairwise site distance.
    pub fn diameter(&self) -> f64 {
        self.dist.iter().flatten().copied().fold(0.0, f64::max)
    }
}

/// One weighted, undirected edge between two sites.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub length: f64,
}

/// A weighted graph over sites whose shortest-path lengths define the metric.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphSpec {
    pub labels: Vec<String>,
    pub multiplicity: Vec<usize>,
    pub edges: Vec<Edge>,
    pub k: usize,
}

impl GraphSpec {
    pub fn new(labels: Vec<String>, multiplicity: Vec<usize>, k: usize) -> Self {
        Self { labels, multiplicity, edges: Vec::new(), k }
    }

    /// Adds an edge by site label.
    pub fn edge(&mut self, a: &str, b: &str, length: f64) -> Result<&mut Self, MetricError> {
        let find = |l: &str| {
            self.labels
                .iter()
                .position(|x| x == l)
                .ok_or_else(|| MetricError::UnknownLabel(l.to_string()))
        };
        let (a, b) = (find(a)?, find(b)?);
        self.edges.push(Edge { a, b, length });
        Ok(self)
    }
}

/// Shortest-path closure of a weighted graph.
///
/// Relaxation is repeated until a full pass changes nothing, so the result
/// satisfies `d[i][h] <= d[i][j] + d[j][h]` exactly in floating point.
pub fn metric_closure(g: &GraphSpec) -> Result<Instance, MetricError> {
    let m = g.labels.len();
    if g.multiplicity.len() != m {
        return Err(MetricError::Shape(format!(
            "{} labels but {} multiplicities",
            m,
            g.multiplicity.len()
        )));
    }
    let mut d = vec![vec![f64::INFINITY; m]; m];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0.0;
    }
    for e in &g.edges {
        if e.a >= m || e.b >= m {
            return Err(MetricError::Shape(format!("edge endpoint out of range ({}, {})", e.a, e.b)));
        }
        if !(e.length > 0.0) || !e.length.is_finite() {
            return Err(MetricError::NonPositiveEdge {
                from: g.labels[e.a].clone(),
                to: g.labels[e.b].clone(),
                length: e.length,
            });
        }
        if e.a != e.b && e.length < d[e.a][e.b] {
            d[e.a][e.b] = e.length;
            d[e.b][e.a] = e.length;
        }
    }
    loop {
        let mut changed = false;
        for via in 0..m {
            for i in 0..m {
                let left = d[i][via];
                if left.is_infinite() {
                    continue;
                }
                for h in 0..m {
                    let cand = left + d[via][h];
                    if cand < d[i][h] {
                        d[i][h] = cand;
                        changed = true;
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }
    for i in 0..m {
        for h in 0..m {
            if d[i][h].is_infinite() {
                return Err(MetricError::DisconnectedGraph {
                    from: g.labels[i].clone(),
                    to: g.labels[h].clone(),
                });
            }
        }
    }
    Instance::new(g.labels.clone(), g.multiplicity.clone(), d, g.k)
}

/// Sites placed in `R^t`.
#[derive(Debug, Clone, PartialEq)]
pub struct EuclideanConfig {
    pub labels: Vec<String>,
    pub multiplicity: Vec<usize>,
    pub coords: Vec<Vec<f64>>,
    pub k: usize,
}

impl EuclideanConfig {
    pub fn dimension(&self) -> usize {
        self.coords.first().map_or(0, Vec::len)
    }
}

/// Euclidean distances between the configured points.
pub fn from_points(e: &EuclideanConfig) -> Result<Instance, MetricError> {
    let m = e.labels.len();
    if e.coords.len() != m {
        return Err(MetricError::Shape(format!("{} labels but {} points", m, e.coords.len())));
    }
    let t = e.dimension();
    for (s, p) in e.coords.iter().enumerate() {
        if p.len() != t {
            return Err(MetricError::Shape(format!(
                "point {} has dimension {}, expected {}",
                e.labels[s],
                p.len(),
                t
            )));
        }
        if p.iter().any(|x| !x.is_finite()) {
            return Err(MetricError::NonFiniteCoordinate { site: e.labels[s].clone() });
        }
    }
    let dist = (0..m)
        .map(|i| (0..m).map(|j| euclidean(&e.coords[i], &e.coords[j])).collect())
        .collect();
    let mut inst = Instance::new(e.labels.clone(), e.multiplicity.clone(), dist, e.k)?;
    inst.coords = Some(e.coords.clone());
    Ok(inst)
}

fn euclidean(p: &[f64], q: &[f64]) -> f64 {
    if p.len() == 2 {
        return (p[0] - q[0]).hypot(p[1] - q[1]);
    }
    p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

/// A violated pseudometric axiom. Indices are site indices.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NonZeroDiagonal { site: usize, value: f64 },
    Negative { i: usize, j: usize, value: f64 },
    Asymmetric { i: usize, j: usize, forward: f64, backward: f64 },
    /// `d(i, j) + d(j, h) < d(i, h) - tol`
    Triangle { i: usize, j: usize, h: usize, excess: f64 },
}

impl Violation {
    pub fn describe(&self, labels: &[String]) -> String {
        match *self {
            Violation::NonZeroDiagonal { site, value } => {
                format!("diagonal d({0},{0}) = {1}", labels[site], value)
            }
            Violation::Negative { i, j, value } => {
                format!("negative d({},{}) = {}", labels[i], labels[j], value)
            }
            Violation::Asymmetric { i, j, forward, backward } => format!(
                "asymmetric d({0},{1}) = {2} but d({1},{0}) = {3}",
                labels[i], labels[j], forward, backward
            ),
            Violation::Triangle { i, j, h, excess } => format!(
                "triangle ({},{},{}) violated by {}",
                labels[i], labels[j], labels[h], excess
            ),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} violation(s)", self.violations.len())
    }
}

/// Checks the pseudometric axioms within `tol`.
///
/// Each triangle violation is reported once, with `i < h`.
pub fn validate(inst: &Instance, tol: f64) -> ValidationReport {
    let d = inst.dist_matrix();
    let m = d.len();
    let mut violations = Vec::new();
    for (s, row) in d.iter().enumerate() {
        if row[s].abs() > tol {
            violations.push(Violation::NonZeroDiagonal { site: s, value: row[s] });
        }
    }
    for i in 0..m {
        for j in 0..m {
            if d[i][j] < -tol {
                violations.push(Violation::Negative { i, j, value: d[i][j] });
            }
            if i < j && (d[i][j] - d[j][i]).abs() > tol {
                violations.push(Violation::Asymmetric { i, j, forward: d[i][j], backward: d[j][i] });
            }
        }
    }
    for i in 0..m {
        for h in i + 1..m {
            for j in 0..m {
                if j == i || j == h {
                    continue;
                }
                let excess = d[i][h] - (d[i][j] + d[j][h]);
                if excess > tol {
                    violations.push(Violation::Triangle { i, j, h, excess });
                }
            }
        }
    }
    ValidationReport { violations }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn single_site_closure_is_zero() {
        let g = GraphSpec::new(labels(&["x"]), vec![1], 1);
        let inst = metric_closure(&g).unwrap();
        assert_eq!(inst.dist_matrix(), &[vec![0.0]]);
    }

    #[test]
    fn closure_prefers_shorter_path() {
        let mut g = GraphSpec::new(labels(&["x", "y", "z"]), vec![1, 1, 1], 1);
        g.edge("x", "y", 1.0).unwrap().edge("y", "z", 1.0).unwrap().edge("x", "z", 3.0).unwrap();
        let inst = metric_closure(&g).unwrap();
        assert_eq!(inst.dist(0, 2), 2.0);
        assert_eq!(inst.dist(2, 0), 2.0);
    }

    #[test]
    fn closure_errors() {
        let g = GraphSpec::new(labels(&["x", "y"]), vec![1, 1], 1);
        assert!(matches!(metric_closure(&g), Err(MetricError::DisconnectedGraph { .. })));
        let mut g = GraphSpec::new(labels(&["x", "y"]), vec![1, 1], 1);
        g.edge("x", "y", 0.0).unwrap();
        assert!(matches!(metric_closure(&g), Err(MetricError::NonPositiveEdge { .. })));
        let mut g = GraphSpec::new(labels(&["x", "y"]), vec![1, 1], 1);
        assert!(matches!(g.edge("x", "q", 1.0), Err(MetricError::UnknownLabel(_))));
    }

    #[test]
    fn identical_points_have_zero_distance() {
        let e = EuclideanConfig {
            labels: labels(&["p", "q"]),
            multiplicity: vec![1, 1],
            coords: vec![vec![0.3, -2.0], vec![0.3, -2.0]],
            k: 1,
        };
        assert_eq!(from_points(&e).unwrap().dist(0, 1), 0.0);
    }

    #[test]
    fn hypotenuse_a_to_b() {
        let e = EuclideanConfig {
            labels: labels(&["a", "b"]),
            multiplicity: vec![1, 1],
            coords: vec![vec![0.0, 0.0], vec![-0.52633831, 0.70311454]],
            k: 1,
        };
        // sqrt(0.52633831^2 + 0.70311454^2) evaluated in 50-digit arithmetic
        let d = from_points(&e).unwrap().dist(0, 1);
        assert!((d - 0.878_294_980_591_980_7).abs() < 1e-12, "{d}");
    }

    #[test]
    fn non_finite_coordinate_rejected() {
        let e = EuclideanConfig {
            labels: labels(&["a"]),
            multiplicity: vec![1],
            coords: vec![vec![f64::NAN, 0.0]],
            k: 1,
        };
        assert!(matches!(from_points(&e), Err(MetricError::NonFiniteCoordinate { .. })));
    }

    #[test]
    fn validate_reports_triangle_violation() {
        let d = vec![vec![0.0, 1.0, 5.0], vec![1.0, 0.0, 1.0], vec![5.0, 1.0, 0.0]];
        let inst = Instance::new(labels(&["1", "2", "3"]), vec![1, 1, 1], d, 1).unwrap();
        let report = validate(&inst, DEFAULT_TOL);
        assert_eq!(report.violations.len(), 1);
        match report.violations[0] {
            Violation::Triangle { i, j, h, excess } => {
                assert_eq!((i, j, h), (0, 1, 2));
                assert_eq!(excess, 3.0);
            }
            ref v => panic!("unexpected {v:?}"),
        }
    }

    #[test]
    fn validate_zero_matrix() {
        for m in 1..6 {
            let inst = Instance::new(
                (0..m).map(|i| i.to_string()).collect(),
                vec![1; m],
                vec![vec![0.0; m]; m],
                1,
            )
            .unwrap();
            assert!(validate(&inst, 0.0).is_empty());
        }
    }

    #[test]
    fn validate_flags_asymmetry_and_diagonal() {
        let d = vec![vec![0.5, 1.0], vec![2.0, 0.0]];
        let inst = Instance::new(labels(&["p", "q"]), vec![1, 1], d, 1).unwrap();
        let report = validate(&inst, DEFAULT_TOL);
        assert!(report.violations.iter().any(|v| matches!(v, Violation::NonZeroDiagonal { site: 0, .. })));
        assert!(report.violations.iter().any(|v| matches!(v, Violation::Asymmetric { i: 0, j: 1, .. })));
    }

    #[test]
    fn structural_errors() {
        assert!(matches!(
            Instance::new(labels(&["p"]), vec![0], vec![vec![0.0]], 1),
            Err(MetricError::ZeroMultiplicity { .. })
        ));
        assert!(matches!(
            Instance::new(labels(&["p"]), vec![2], vec![vec![0.0]], 3),
            Err(MetricError::TooFewAgents { agents: 2, k: 3 })
        ));
        assert!(matches!(
            Instance::new(labels(&["p", "p"]), vec![1, 1], vec![vec![0.0; 2]; 2], 1),
            Err(MetricError::DuplicateLabel(_))
        ));
    }

    #[test]
    fn agent_indexing() {
        let inst = Instance::new(labels(&["a", "G", "b"]), vec![1, 3, 1], vec![vec![0.0; 3]; 3], 2).unwrap();
        let sites: Vec<usize> = (0..5).map(|a| inst.agent_site(a)).collect();
        assert_eq!(sites, vec![0, 1, 1, 1, 2]);
        assert_eq!(inst.agent_id(1, 2), 3);
        assert_eq!(inst.agent_name(2), "G#1");
        assert_eq!(inst.agent_name(4), "b");
        assert_eq!(inst.threshold(), 3);
    }
}
