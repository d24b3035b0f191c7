//! Search over point coordinates for configurations with a large instance
//! bound.
//!
//! The objective is the exact bound of the induced Euclidean instance, with
//! no smoothing. It is piecewise smooth with kinks wherever the minimizing
//! clustering or its witness changes, so the search uses Nelder–Mead from
//! the initial point plus a number of Gaussian-perturbed restarts.
//!
//! Each start draws from its own ChaCha stream `(seed, start index)`, so
//! serial and parallel runs produce identical results.

pub mod nelder_mead;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use thiserror::Error;

use crate::engine::{instance_bound, BoundCertificate, BoundOptions};
use crate::metric::{from_points, EuclideanConfig, Instance, MetricError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OptimizerError {
    #[error("invalid search parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Metric(#[from] MetricError),
}

/// One coordinate held fixed during search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pin {
    pub site: usize,
    pub axis: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchParams {
    pub labels: Vec<String>,
    pub multiplicity: Vec<usize>,
    pub k: usize,
    pub dimension: usize,
    pub pins: Vec<Pin>,
    /// Nelder–Mead iterations per start.
    pub budget: usize,
    /// Perturbed starts in addition to the initial one.
    pub restarts: usize,
    /// Standard deviation of restart perturbations.
    pub sigma: f64,
    /// Initial simplex edge.
    pub step: f64,
    pub seed: u64,
    /// Convergence tolerance on the bound.
    pub tol: f64,
    /// Box for `Init::Random` coordinates.
    pub random_box: (f64, f64),
    pub parallel: bool,
}

impl SearchParams {
    /// Defaults for a point layout: site `a` pinned (origin gauge), `G1`
    /// pinned off the first axis (rotation gauge), and `w` pinned unless
    /// `free_far`. Pinned values are read from `reference`.
    pub fn for_layout(
        labels: Vec<String>,
        multiplicity: Vec<usize>,
        k: usize,
        reference: &[Vec<f64>],
        free_far: bool,
    ) -> Self {
        let dimension = reference.first().map_or(2, Vec::len);
        let mut pins = Vec::new();
        let mut pin_site = |label: &str, from_axis: usize| {
            if let Some(s) = labels.iter().position(|l| l == label) {
                for axis in from_axis..dimension {
                    pins.push(Pin { site: s, axis, value: reference[s][axis] });
                }
            }
        };
        pin_site("a", 0);
        pin_site("G1", 1);
        if !free_far {
            pin_site("w", 0);
        }
        Self {
            labels,
            multiplicity,
            k,
            dimension,
            pins,
            budget: 2000,
            restarts: 5,
            sigma: 0.05,
            step: 0.05,
            seed: 42,
            tol: 1e-12,
            random_box: (0.0, 1.0),
            parallel: false,
        }
    }

    /// [`for_layout`](Self::for_layout) with the sites and multiplicities of `inst`.
    pub fn for_instance(inst: &Instance, reference: &[Vec<f64>], free_far: bool) -> Self {
        Self::for_layout(inst.labels().to_vec(), inst.multiplicity().to_vec(), inst.k(), reference, free_far)
    }

    fn is_pinned(&self, site: usize, axis: usize) -> bool {
        self.pins.iter().any(|p| p.site == site && p.axis == axis)
    }

    /// (site, axis) of every free coordinate.
    fn free(&self) -> Vec<(usize, usize)> {
        (0..self.labels.len())
            .flat_map(|s| (0..self.dimension).map(move |a| (s, a)))
            .filter(|&(s, a)| !self.is_pinned(s, a))
            .collect()
    }

    fn check(&self) -> Result<(), OptimizerError> {
        let bad = |m: String| Err(OptimizerError::InvalidParams(m));
        if self.multiplicity.len() != self.labels.len() {
            return bad("labels and multiplicities differ in length".into());
        }
        if self.dimension == 0 {
            return bad("dimension must be positive".into());
        }
        if !(self.sigma > 0.0) {
            return bad(format!("sigma must be positive, got {}", self.sigma));
        }
        if !(self.step > 0.0) {
            return bad(format!("simplex step must be positive, got {}", self.step));
        }
        if !(self.random_box.0 < self.random_box.1) {
            return bad("random box is empty".into());
        }
        if let Some(p) = self.pins.iter().find(|p| p.site >= self.labels.len() || p.axis >= self.dimension) {
            return bad(format!("pin ({}, {}) out of range", p.site, p.axis));
        }
        if self.free().is_empty() {
            return bad("every coordinate is pinned".into());
        }
        Ok(())
    }
}

/// Coordinates together with their exact bound.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub coords: Vec<Vec<f64>>,
    pub beta: f64,
    pub certificate: BoundCertificate,
}

impl Candidate {
    pub fn instance(&self, params: &SearchParams) -> Instance {
        from_points(&config(&self.coords, params)).expect("candidate coordinates are finite")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Init {
    Explicit(Vec<Vec<f64>>),
    /// Free coordinates uniform in `random_box`, pinned ones at their pins.
    Random,
}

/// An accepted improvement of the overall best.
#[derive(Debug, Clone, PartialEq)]
pub struct LogEntry {
    pub start: usize,
    pub iteration: usize,
    pub beta: f64,
    pub diameter: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    pub best: Candidate,
    /// The evaluated initial point.
    pub init: Candidate,
    pub log: Vec<LogEntry>,
    pub evaluations: usize,
}

fn config(coords: &[Vec<f64>], params: &SearchParams) -> EuclideanConfig {
    EuclideanConfig {
        labels: params.labels.clone(),
        multiplicity: params.multiplicity.clone(),
        coords: coords.to_vec(),
        k: params.k,
    }
}

fn bound_of(coords: &[Vec<f64>], params: &SearchParams) -> Result<BoundCertificate, MetricError> {
    let inst = from_points(&config(coords, params))?;
    Ok(instance_bound(&inst, &BoundOptions::default()))
}

/// Exact bound of the Euclidean instance on `coords`.
pub fn evaluate(coords: &[Vec<f64>], params: &SearchParams) -> Result<Candidate, OptimizerError> {
    if coords.len() != params.labels.len() || coords.iter().any(|p| p.len() != params.dimension) {
        return Err(OptimizerError::InvalidParams(format!(
            "expected {} points of dimension {}",
            params.labels.len(),
            params.dimension
        )));
    }
    let certificate = bound_of(coords, params)?;
    Ok(Candidate { coords: coords.to_vec(), beta: certificate.beta, certificate })
}

fn rng_for(seed: u64, start: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(start as u64);
    rng
}

struct StartResult {
    x: Vec<f64>,
    beta: f64,
    improvements: Vec<nelder_mead::Progress>,
    evaluations: usize,
}

/// Best configuration found by Nelder–Mead from `init` and `restarts`
/// perturbations of it. Never returns less than the bound at `init`.
pub fn search(params: &SearchParams, init: Init) -> Result<SearchOutcome, OptimizerError> {
    params.check()?;
    let free = params.free();
    let mut base = match init {
        Init::Explicit(coords) => {
            if coords.len() != params.labels.len() || coords.iter().any(|p| p.len() != params.dimension) {
                return Err(OptimizerError::InvalidParams(format!(
                    "expected {} points of dimension {}",
                    params.labels.len(),
                    params.dimension
                )));
            }
            coords
        }
        Init::Random => {
            let mut rng = rng_for(params.seed, 0);
            let (lo, hi) = params.random_box;
            let mut coords = vec![vec![0.0; params.dimension]; params.labels.len()];
            for &(s, a) in &free {
                coords[s][a] = rng.random_range(lo..hi);
            }
            coords
        }
    };
    for p in &params.pins {
        base[p.site][p.axis] = p.value;
    }
    let init = evaluate(&base, params)?;
    if params.budget == 0 {
        return Ok(SearchOutcome { best: init.clone(), init, log: Vec::new(), evaluations: 1 });
    }

    let embed = |x: &[f64]| {
        let mut coords = base.clone();
        for (&(s, a), &v) in free.iter().zip(x) {
            coords[s][a] = v;
        }
        coords
    };
    let start0: Vec<f64> = free.iter().map(|&(s, a)| base[s][a]).collect();
    let settings = nelder_mead::Settings {
        max_iterations: params.budget,
        step: params.step,
        ftol: params.tol,
        xtol: 1e-10,
    };
    let run = |start: usize| -> StartResult {
        let x0 = if start == 0 {
            start0.clone()
        } else {
            let mut rng = rng_for(params.seed, start);
            let noise = Normal::new(0.0, params.sigma).expect("sigma checked positive");
            start0.iter().map(|&v| v + noise.sample(&mut rng)).collect()
        };
        let objective = |x: &[f64]| -> f64 {
            if x.iter().any(|v| !v.is_finite()) {
                return f64::INFINITY;
            }
            bound_of(&embed(x), params).map_or(f64::INFINITY, |c| -c.beta)
        };
        let m = nelder_mead::minimize(objective, &x0, &settings);
        StartResult { x: m.x, beta: -m.value, improvements: m.improvements, evaluations: m.evaluations }
    };
    let results: Vec<StartResult> = if params.parallel {
        (0..=params.restarts).into_par_iter().map(run).collect()
    } else {
        (0..=params.restarts).map(run).collect()
    };

    let mut log = Vec::new();
    let mut best_beta = init.beta;
    let mut best_start: Option<usize> = None;
    for (start, r) in results.iter().enumerate() {
        for p in &r.improvements {
            if -p.value > best_beta {
                best_beta = -p.value;
                log.push(LogEntry { start, iteration: p.iteration, beta: -p.value, diameter: p.diameter });
            }
        }
        if r.beta > init.beta && best_start.is_none_or(|b| r.beta > results[b].beta) {
            best_start = Some(start);
        }
    }
    let evaluations = 1 + results.iter().map(|r| r.evaluations).sum::<usize>();
    let best = match best_start {
        Some(s) => evaluate(&embed(&results[s].x), params)?,
        None => init.clone(),
    };
    Ok(SearchOutcome { best, init, log, evaluations })
}
