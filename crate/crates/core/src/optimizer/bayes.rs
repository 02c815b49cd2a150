//! Gaussian-process surrogate search with expected-improvement acquisition.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::problem::Objective;

pub const LENGTH_SCALE: f64 = 0.2;
pub const OBSERVATION_NOISE: f64 = 1e-6;
pub const MAX_INITIAL_DESIGN: usize = 40;
const UNIFORM_CANDIDATES: usize = 512;
const LOCAL_CANDIDATES: usize = 512;
const LOCAL_CENTERS: usize = 4;
const LOCAL_SCALE: f64 = 0.05;

/// Zero-mean GP with a squared-exponential kernel on standardized values.
#[derive(Debug, Clone)]
pub struct GaussianProcess {
    points: Vec<Vec<f64>>,
    chol: Cholesky<f64, Dyn>,
    alpha: DVector<f64>,
    y_mean: f64,
    y_scale: f64,
    length_scale: f64,
}

fn kernel(a: &[f64], b: &[f64], length_scale: f64) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (-0.5 * d2 / (length_scale * length_scale)).exp()
}

impl GaussianProcess {
    /// Fits to `points` (box-normalized) and `values`. Jitter is added to the
    /// diagonal until the Gram matrix factors.
    pub fn fit(points: &[Vec<f64>], values: &[f64], length_scale: f64, noise: f64) -> Self {
        assert_eq!(points.len(), values.len());
        assert!(!points.is_empty(), "a GP needs at least one observation");
        let m = values.len();
        let y_mean = values.iter().sum::<f64>() / m as f64;
        let var = values.iter().map(|v| (v - y_mean).powi(2)).sum::<f64>() / m as f64;
        let y_scale = if var.sqrt() > 1e-300 { var.sqrt() } else { 1.0 };
        let y = DVector::from_iterator(m, values.iter().map(|v| (v - y_mean) / y_scale));
        let gram = DMatrix::from_fn(m, m, |r, c| kernel(&points[r], &points[c], length_scale));
        let mut jitter = noise;
        let chol = loop {
            let mut k = gram.clone();
            for i in 0..m {
                k[(i, i)] += jitter;
            }
            if let Some(ch) = k.cholesky() {
                break ch;
            }
            jitter *= 10.0;
            assert!(jitter < 1.0, "Gram matrix failed to factor");
        };
        let alpha = chol.solve(&y);
        Self {
            points: points.to_vec(),
            chol,
            alpha,
            y_mean,
            y_scale,
            length_scale,
        }
    }

    /// Posterior mean and standard deviation in the original units.
    pub fn predict(&self, u: &[f64]) -> (f64, f64) {
        let ks = DVector::from_iterator(
            self.points.len(),
            self.points.iter().map(|p| kernel(p, u, self.length_scale)),
        );
        let mean = ks.dot(&self.alpha);
        let v = self
            .chol
            .l()
            .solve_lower_triangular(&ks)
            .expect("Cholesky factor is nonsingular");
        let var = (1.0 - v.norm_squared()).max(0.0);
        (self.y_mean + self.y_scale * mean, self.y_scale * var.sqrt())
    }
}

fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Expected improvement below `best` for a Gaussian prediction.
pub fn expected_improvement(mean: f64, std: f64, best: f64) -> f64 {
    let gain = best - mean;
    if std <= 1e-12 {
        return gain.max(0.0);
    }
    let z = gain / std;
    gain * normal_cdf(z) + std * normal_pdf(z)
}

/// `count` points in `[0, 1]^dim`, one per stratum in every coordinate.
pub fn latin_hypercube<R: Rng>(count: usize, dim: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let mut pts = vec![vec![0.0; dim]; count];
    let mut perm: Vec<usize> = (0..count).collect();
    for d in 0..dim {
        for i in (1..count).rev() {
            perm.swap(i, rng.random_range(0..=i));
        }
        for (p, &s) in pts.iter_mut().zip(&perm) {
            p[d] = (s as f64 + rng.random::<f64>()) / count as f64;
        }
    }
    pts
}

pub fn initial_design_size(dim: usize) -> usize {
    (2 * dim).clamp(1, MAX_INITIAL_DESIGN)
}

/// Maps between the parameter box and `[0, 1]^D`.
#[derive(Debug, Clone)]
pub struct BoxMap {
    bounds: Vec<(f64, f64)>,
}

impl BoxMap {
    pub fn new(bounds: Vec<(f64, f64)>) -> Self {
        Self { bounds }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.bounds.len()
            && x.iter()
                .zip(&self.bounds)
                .all(|(v, (lo, hi))| *lo <= *v && *v <= *hi)
    }

    pub fn to_unit(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.bounds)
            .map(|(v, (lo, hi))| if hi > lo { (v - lo) / (hi - lo) } else { 0.0 })
            .collect()
    }

    pub fn from_unit(&self, u: &[f64]) -> Vec<f64> {
        u.iter()
            .zip(&self.bounds)
            .map(|(v, (lo, hi))| lo + v * (hi - lo))
            .collect()
    }
}

/// Evaluated points of one search run, in evaluation order.
#[derive(Debug, Clone, PartialEq)]
pub struct BayesRun {
    pub points: Vec<Vec<f64>>,
    pub costs: Vec<f64>,
    /// Incumbent after the initial design, then after each acquisition.
    pub incumbents: Vec<f64>,
    /// Number of leading points that came from the supplied seeds.
    pub seeded: usize,
}

impl BayesRun {
    pub fn best(&self) -> (&[f64], f64) {
        let i = self
            .costs
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .expect("a run evaluates at least one point");
        (&self.points[i], self.costs[i])
    }
}

/// One seeded run: initial design (in-box seeds first, then a Latin
/// hypercube), followed by `steps` expected-improvement acquisitions.
pub fn bayesian_run<O: Objective + ?Sized, R: Rng>(
    obj: &O,
    steps: usize,
    seeds: &[Vec<f64>],
    rng: &mut R,
) -> BayesRun {
    let map = BoxMap::new(obj.bounds());
    let dim = obj.dimension();
    let mut points: Vec<Vec<f64>> = seeds.iter().filter(|s| map.contains(s)).cloned().collect();
    let seeded = points.len();
    let mut unit: Vec<Vec<f64>> = points.iter().map(|s| map.to_unit(s)).collect();
    let fill = initial_design_size(dim).saturating_sub(seeded);
    for u in latin_hypercube(fill, dim, rng) {
        points.push(map.from_unit(&u));
        unit.push(u);
    }
    let mut costs: Vec<f64> = points.iter().map(|x| obj.cost(x)).collect();
    let mut incumbents = vec![costs.iter().cloned().fold(f64::INFINITY, f64::min)];

    for _ in 0..steps {
        let gp = GaussianProcess::fit(&unit, &costs, LENGTH_SCALE, OBSERVATION_NOISE);
        let best = *incumbents.last().unwrap();
        let next = maximize_acquisition(obj, &gp, &unit, &costs, best, rng);
        let x = map.from_unit(&next);
        let c = obj.cost(&x);
        unit.push(next);
        points.push(x);
        costs.push(c);
        incumbents.push(best.min(c));
    }
    BayesRun {
        points,
        costs,
        incumbents,
        seeded,
    }
}

fn maximize_acquisition<O: Objective + ?Sized, R: Rng>(
    obj: &O,
    gp: &GaussianProcess,
    unit: &[Vec<f64>],
    costs: &[f64],
    best: f64,
    rng: &mut R,
) -> Vec<f64> {
    let dim = obj.dimension();
    let mut order: Vec<usize> = (0..costs.len()).collect();
    order.sort_by(|a, b| costs[*a].total_cmp(&costs[*b]));
    let centers: Vec<&Vec<f64>> = order
        .iter()
        .take(LOCAL_CENTERS)
        .map(|&i| &unit[i])
        .collect();

    let mut best_u: Option<(Vec<f64>, f64)> = None;
    let mut consider = |u: Vec<f64>| {
        let (m, s) = gp.predict(&u);
        let ei = expected_improvement(m, s, best);
        if best_u.as_ref().is_none_or(|(_, b)| ei > *b) {
            best_u = Some((u, ei));
        }
    };
    for _ in 0..UNIFORM_CANDIDATES {
        consider((0..dim).map(|_| rng.random::<f64>()).collect());
    }
    for k in 0..LOCAL_CANDIDATES {
        let c = centers[k % centers.len()];
        let u = (0..dim)
            .map(|d| {
                let z: f64 = StandardNormal.sample(rng);
                let v = c[d] + LOCAL_SCALE * z;
                if obj.is_periodic(d) {
                    v.rem_euclid(1.0)
                } else {
                    v.clamp(0.0, 1.0)
                }
            })
            .collect();
        consider(u);
    }
    best_u.expect("candidate set is non-empty").0
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    struct Bowl;

    impl Objective for Bowl {
        fn dimension(&self) -> usize {
            2
        }
        fn bounds(&self) -> Vec<(f64, f64)> {
            vec![(-1.0, 1.0); 2]
        }
        fn is_periodic(&self, _: usize) -> bool {
            false
        }
        fn cost(&self, x: &[f64]) -> f64 {
            (x[0] - 0.3).powi(2) + (x[1] + 0.2).powi(2)
        }
    }

    #[test]
    fn gp_interpolates_observations() {
        let pts = vec![vec![0.1, 0.2], vec![0.7, 0.4], vec![0.5, 0.9]];
        let ys = [1.0, -2.0, 0.5];
        let gp = GaussianProcess::fit(&pts, &ys, LENGTH_SCALE, OBSERVATION_NOISE);
        for (p, y) in pts.iter().zip(ys) {
            let (m, s) = gp.predict(p);
            assert!((m - y).abs() < 1e-3, "{m} vs {y}");
            assert!(s < 1e-2);
        }
        // Far from every observation the prior returns.
        let (m, s) = gp.predict(&[5.0, 5.0]);
        let mean = (1.0 - 2.0 + 0.5) / 3.0;
        assert!((m - mean).abs() < 1e-9);
        assert!(s > 1.0);
    }

    #[test]
    fn expected_improvement_limits() {
        assert_eq!(expected_improvement(1.0, 0.0, 2.0), 1.0);
        assert_eq!(expected_improvement(3.0, 0.0, 2.0), 0.0);
        // EI at the incumbent with unit spread is φ(0).
        assert!((expected_improvement(0.0, 1.0, 0.0) - 0.3989422804014327).abs() < 1e-15);
        assert!(expected_improvement(0.0, 1.0, 0.0) < expected_improvement(-0.5, 1.0, 0.0));
    }

    #[test]
    fn latin_hypercube_strata() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let pts = latin_hypercube(10, 3, &mut rng);
        for d in 0..3 {
            let mut bins: Vec<usize> = pts.iter().map(|p| (p[d] * 10.0) as usize).collect();
            bins.sort();
            assert_eq!(bins, (0..10).collect::<Vec<_>>());
        }
    }

    #[test]
    fn run_shapes_and_monotone_incumbents() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let run = bayesian_run(&Bowl, 0, &[], &mut rng);
        assert_eq!(run.points.len(), 4);
        assert_eq!(run.incumbents.len(), 1);

        let seed = vec![0.3, -0.2];
        let outside = vec![3.0, 0.0];
        let run = bayesian_run(&Bowl, 6, &[outside, seed.clone()], &mut rng);
        assert_eq!(run.seeded, 1);
        assert_eq!(run.points[0], seed);
        assert_eq!(run.incumbents[0], 0.0);
        assert_eq!(run.points.len(), 10);
        assert!(run.incumbents.windows(2).all(|w| w[1] <= w[0]));
    }
}
