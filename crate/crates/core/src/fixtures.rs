//! The two empty-core instances: the weighted-graph gadget (any `k >= 3`)
//! and the nine-agent planar point set.

use thiserror::Error;

use crate::engine::Coalition;
use crate::metric::{from_points, metric_closure, EuclideanConfig, GraphSpec, Instance};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FixtureError {
    #[error("invalid gadget parameters: {0}")]
    InvalidParams(String),
}

pub const DEFAULT_FAR: f64 = 1e6;

/// Sites of the gadget core, in instance order. Dummy sites `D1..` follow.
pub const GADGET_SITES: [&str; 7] = ["a", "b", "c", "G1", "G2", "G3", "w"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GadgetParams {
    pub k: usize,
    pub n: usize,
    /// Distance from `w` (and every dummy site) to everything else.
    pub far: f64,
}

impl GadgetParams {
    pub fn new(k: usize, n: usize) -> Self {
        Self { k, n, far: DEFAULT_FAR }
    }

    pub fn with_far(self, far: f64) -> Self {
        Self { far, ..self }
    }

    /// Agents per block: `n / k`.
    pub fn block(&self) -> usize {
        self.n / self.k
    }

    fn check(&self) -> Result<(), FixtureError> {
        let bad = |msg: String| Err(FixtureError::InvalidParams(msg));
        if self.k < 3 {
            return bad(format!("k = {} but the gadget needs k >= 3", self.k));
        }
        if self.n < 9 {
            return bad(format!("n = {} but the gadget needs n >= 9", self.n));
        }
        if !self.n.is_multiple_of(self.k) {
            return bad(format!("n = {} is not divisible by k = {}", self.n, self.k));
        }
        if self.block() < 3 {
            return bad(format!("n / k = {} leaves group G2 empty", self.block()));
        }
        let core = core_distances();
        let diameter = core.iter().flatten().copied().fold(0.0, f64::max);
        if !(self.far > 4.0 * diameter) || !self.far.is_finite() {
            return bad(format!("far distance {} must exceed {}", self.far, 4.0 * diameter));
        }
        Ok(())
    }
}

fn pow2(fifths: i32) -> f64 {
    2f64.powf(fifths as f64 / 5.0)
}

/// Shortest-path closure over `a, b, c, G1, G2, G3`.
fn core_distances() -> Vec<Vec<f64>> {
    let labels: Vec<String> = GADGET_SITES[..6].iter().map(|s| s.to_string()).collect();
    let mut g = GraphSpec::new(labels, vec![1; 6], 1);
    let edges = [
        ("a", "G1", pow2(1)),
        ("a", "G2", 1.0),
        ("a", "G3", 1.0 + pow2(4)),
        ("b", "G1", 1.0 + pow2(1)),
        ("b", "G2", 2.0),
        ("b", "G3", pow2(4)),
        ("c", "G1", pow2(2)),
        ("c", "G2", 1.0 + pow2(3)),
        ("c", "G3", pow2(3)),
        ("a", "b", 1.0),
    ];
    for (x, y, len) in edges {
        g.edge(x, y, len).expect("gadget labels");
    }
    metric_closure(&g).expect("gadget graph is connected").dist_matrix().to_vec()
}

/// The gadget: groups `G1, G3` of `n/k - 1` agents, `G2` of `n/k - 2`,
/// single agents `a, b, c`, a far agent `w`, and `k - 3` far dummy sites of
/// `n/k` agents each.
pub fn build_gadget(p: &GadgetParams) -> Result<Instance, FixtureError> {
    p.check()?;
    let block = p.block();
    let dummies = p.k - 3;
    let m = 7 + dummies;
    let mut labels: Vec<String> = GADGET_SITES.iter().map(|s| s.to_string()).collect();
    labels.extend((1..=dummies).map(|i| format!("D{i}")));
    let mut multiplicity = vec![1, 1, 1, block - 1, block - 2, block - 1, 1];
    multiplicity.extend(std::iter::repeat_n(block, dummies));
    let core = core_distances();
    let mut dist = vec![vec![p.far; m]; m];
    for (i, row) in dist.iter_mut().enumerate() {
        row[i] = 0.0;
        if i < 6 {
            row[..6].copy_from_slice(&core[i]);
        }
    }
    Instance::new(labels, multiplicity, dist, p.k).map_err(|e| FixtureError::InvalidParams(e.to_string()))
}

/// The five coalitions the construction's case analysis relies on.
#[derive(Debug, Clone, PartialEq)]
pub struct NamedCoalitions {
    /// `G1 + a`
    pub s1: Coalition,
    /// `G1 + c`
    pub s2: Coalition,
    /// `G2 + a + b`
    pub s3: Coalition,
    /// `G3 + b`
    pub s4: Coalition,
    /// `G3 + c`
    pub s5: Coalition,
}

impl NamedCoalitions {
    pub fn all(&self) -> [(&'static str, &Coalition); 5] {
        [("S1", &self.s1), ("S2", &self.s2), ("S3", &self.s3), ("S4", &self.s4), ("S5", &self.s5)]
    }
}

pub fn named_coalitions(p: &GadgetParams) -> Result<NamedCoalitions, FixtureError> {
    p.check()?;
    let b = p.block();
    let m = 7 + p.k - 3;
    let make = |entries: &[(&str, usize)]| {
        let mut counts = vec![0; m];
        for &(label, c) in entries {
            counts[GADGET_SITES.iter().position(|s| *s == label).unwrap()] = c;
        }
        Coalition::new(counts)
    };
    Ok(NamedCoalitions {
        s1: make(&[("G1", b - 1), ("a", 1)]),
        s2: make(&[("G1", b - 1), ("c", 1)]),
        s3: make(&[("G2", b - 2), ("a", 1), ("b", 1)]),
        s4: make(&[("G3", b - 1), ("b", 1)]),
        s5: make(&[("G3", b - 1), ("c", 1)]),
    })
}

/// Planar point set: `G1` and `G3` hold two agents, every other site one; `k = 3`.
pub const EUCLID_POINTS: [(&str, usize, [f64; 2]); 7] = [
    ("a", 1, [0.0, 0.0]),
    ("b", 1, [-0.52633831, 0.70311454]),
    ("c", 1, [1.18678884, -1.12314325]),
    ("G1", 2, [1.0, 0.0]),
    ("G2", 1, [0.04545127, 0.87711815]),
    ("G3", 2, [0.21399904, -1.97998602]),
    ("w", 1, [10.0, 10.0]),
];

pub fn euclidean_config() -> EuclideanConfig {
    EuclideanConfig {
        labels: EUCLID_POINTS.iter().map(|p| p.0.to_string()).collect(),
        multiplicity: EUCLID_POINTS.iter().map(|p| p.1).collect(),
        coords: EUCLID_POINTS.iter().map(|p| p.2.to_vec()).collect(),
        k: 3,
    }
}

pub fn euclidean_fixture() -> Instance {
    from_points(&euclidean_config()).expect("fixture coordinates are finite")
}
