//! Nelder–Mead simplex minimization with the standard coefficients.

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Settings {
    pub max_iterations: usize,
    /// Initial simplex edge length along each axis.
    pub step: f64,
    /// Stop once the spread of objective values is at most this and the simplex is small.
    pub ftol: f64,
    /// Stop once the simplex diameter falls below this.
    pub xtol: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Progress {
    pub iteration: usize,
    pub value: f64,
    pub diameter: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub evaluations: usize,
    /// One entry each time the best vertex improved, starting with the initial point.
    pub improvements: Vec<Progress>,
}

fn diameter(simplex: &[Vec<f64>]) -> f64 {
    let mut d: f64 = 0.0;
    for (i, p) in simplex.iter().enumerate() {
        for q in &simplex[i + 1..] {
            let dist = p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            d = d.max(dist);
        }
    }
    d
}

fn along(from: &[f64], to: &[f64], t: f64) -> Vec<f64> {
    from.iter().zip(to).map(|(a, b)| a + t * (b - a)).collect()
}

pub fn minimize(mut f: impl FnMut(&[f64]) -> f64, start: &[f64], settings: &Settings) -> Minimum {
    let dim = start.len();
    if settings.max_iterations == 0 || dim == 0 {
        let value = f(start);
        return Minimum {
            x: start.to_vec(),
            value,
            iterations: 0,
            evaluations: 1,
            improvements: vec![Progress { iteration: 0, value, diameter: 0.0 }],
        };
    }
    let mut evaluations = 0;
    let mut eval = |x: &[f64]| {
        evaluations += 1;
        f(x)
    };
    let mut simplex = vec![start.to_vec()];
    for i in 0..dim {
        let mut v = start.to_vec();
        v[i] += settings.step;
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| eval(v)).collect();
    let mut improvements = vec![Progress { iteration: 0, value: values[0], diameter: diameter(&simplex) }];
    let mut best_seen = values[0];
    let mut iterations = 0;

    while iterations < settings.max_iterations {
        // stable sort keeps earlier vertices first on ties
        let mut order: Vec<usize> = (0..=dim).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let diam = diameter(&simplex);
        if values[0] < best_seen {
            best_seen = values[0];
            improvements.push(Progress { iteration: iterations, value: values[0], diameter: diam });
        }
        let spread = values[dim] - values[0];
        if diam <= settings.xtol || (spread <= settings.ftol && diam <= settings.ftol.sqrt()) {
            break;
        }
        iterations += 1;

        let mut centroid = vec![0.0; dim];
        for v in &simplex[..dim] {
            for (c, x) in centroid.iter_mut().zip(v) {
                *c += x / dim as f64;
            }
        }
        let worst = simplex[dim].clone();
        let reflected = along(&centroid, &worst, -REFLECT);
        let fr = eval(&reflected);
        if fr < values[0] {
            let expanded = along(&centroid, &worst, -REFLECT * EXPAND);
            let fe = eval(&expanded);
            if fe < fr {
                simplex[dim] = expanded;
                values[dim] = fe;
            } else {
                simplex[dim] = reflected;
                values[dim] = fr;
            }
            continue;
        }
        if fr < values[dim - 1] {
            simplex[dim] = reflected;
            values[dim] = fr;
            continue;
        }
        let (contracted, fc) = if fr < values[dim] {
            let p = along(&centroid, &reflected, CONTRACT);
            let v = eval(&p);
            (p, v)
        } else {
            let p = along(&centroid, &worst, CONTRACT);
            let v = eval(&p);
            (p, v)
        };
        if fc < fr.min(values[dim]) {
            simplex[dim] = contracted;
            values[dim] = fc;
            continue;
        }
        let best = simplex[0].clone();
        for i in 1..=dim {
            simplex[i] = along(&best, &simplex[i], SHRINK);
            values[i] = eval(&simplex[i]);
        }
    }

    let (best, &value) = values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("simplex is nonempty");
    if value < best_seen {
        improvements.push(Progress { iteration: iterations, value, diameter: diameter(&simplex) });
    }
    Minimum { x: simplex[best].clone(), value, iterations, evaluations, improvements }
}
