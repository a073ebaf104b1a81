//! A fast, seeded battery of cross-checks between the analytic routines and
//! the oracles. `weakot verify` runs it.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{exhaustive_weak_cost, fw_minimize, vertex_scan, OracleConfig};
use crate::costs::CostFunction;
use crate::error::Result;
use crate::inequalities::{dual_gap, ConvexPLFunction};
use crate::measures::{majorize, DiscreteMeasure};
use crate::permutahedron::{check_variational, project};
use crate::weak_transport::{
    classical_cost, optimal_weak_coupling, rado_decompose, strassen_kernel, weak_cost, Refinement,
};

/// Atom range for random instances.
pub const ATOM_RANGE: f64 = 5.0;

/// A random pair `(a, b)` of equal length in `1..=n_max` with entries in
/// `[−5, 5]`. Every other draw is rounded to integers so ties show up.
pub fn random_instance(rng: &mut ChaCha8Rng, n_max: usize) -> (Vec<f64>, Vec<f64>) {
    let n = rng.gen_range(1..=n_max);
    let integral = rng.gen_bool(0.5);
    let mut draw = || {
        let v: f64 = rng.gen_range(-ATOM_RANGE..=ATOM_RANGE);
        if integral {
            v.round()
        } else {
            v
        }
    };
    let a = (0..n).map(|_| draw()).collect();
    let b = (0..n).map(|_| draw()).collect();
    (a, b)
}

/// A random convex piecewise-linear function with one to four breakpoints
/// in `[−5, 5]` and slopes in `[−3, 3]`.
pub fn random_potential(rng: &mut ChaCha8Rng) -> ConvexPLFunction<f64> {
    let k = rng.gen_range(1..=4);
    let mut bps: Vec<f64> = (0..k).map(|_| rng.gen_range(-ATOM_RANGE..=ATOM_RANGE)).collect();
    bps.sort_by(f64::total_cmp);
    bps.dedup();
    let mut slopes: Vec<f64> = (0..=bps.len()).map(|_| rng.gen_range(-3.0..=3.0)).collect();
    slopes.sort_by(f64::total_cmp);
    let mut values = vec![rng.gen_range(-2.0..=2.0)];
    for i in 1..bps.len() {
        let prev = values[i - 1];
        values.push(prev + slopes[i] * (bps[i] - bps[i - 1]));
    }
    ConvexPLFunction::convex(bps, values, slopes[0], *slopes.last().unwrap())
        .expect("sorted slopes give a convex function")
}

/// The three costs the optimizer must not depend on.
pub fn reference_costs() -> Vec<CostFunction<f64>> {
    vec![
        CostFunction::power(1.5).unwrap(),
        CostFunction::power(2.0).unwrap(),
        CostFunction::quad_lin(1.0).unwrap(),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteCheck {
    pub name: &'static str,
    pub passed: bool,
    pub instances: usize,
    /// Largest observed violation measure (the check's own units).
    pub worst: f64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub seed: u64,
    pub checks: Vec<SuiteCheck>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

struct Tally {
    name: &'static str,
    tolerance: f64,
    instances: usize,
    worst: f64,
    failed: bool,
}

impl Tally {
    fn new(name: &'static str, tolerance: f64) -> Self {
        Self { name, tolerance, instances: 0, worst: 0.0, failed: false }
    }

    fn record(&mut self, violation: f64) {
        self.instances += 1;
        if violation.is_nan() {
            self.failed = true;
        } else {
            self.worst = self.worst.max(violation);
        }
    }

    fn fail(&mut self) {
        self.instances += 1;
        self.failed = true;
    }

    fn finish(self) -> SuiteCheck {
        SuiteCheck {
            name: self.name,
            passed: !self.failed && self.worst <= self.tolerance,
            instances: self.instances,
            worst: self.worst,
            tolerance: self.tolerance,
        }
    }
}

fn sup_dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max)
}

/// Runs every cross-check on seeded random instances.
pub fn run_suite(seed: u64) -> Result<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cfg = OracleConfig::with_seed(seed);
    let quadratic = CostFunction::power(2.0)?;
    let costs = reference_costs();

    let mut fw_value = Tally::new("frank_wolfe_value", 1e-6);
    let mut fw_point = Tally::new("frank_wolfe_point", 1e-4);
    let mut independence = Tally::new("cost_independence", 1e-9);
    let mut vertices = Tally::new("vertex_scan_bounds", 1e-12);
    let mut variational = Tally::new("variational_inequality", 0.0);
    let mut residual = Tally::new("residual_majorization", 0.0);
    let mut rado = Tally::new("rado_decomposition", 1e-10);
    let mut kernel = Tally::new("martingale_kernel", 1e-10);
    let mut sandwich = Tally::new("kernel_space_sandwich", 1e-5);
    let mut duality = Tally::new("weak_duality", 1e-8);

    for _ in 0..60 {
        let (a, b) = random_instance(&mut rng, 6);
        let mu = DiscreteMeasure::uniform(&a)?;
        let nu = DiscreteMeasure::uniform(&b)?;

        let fw = fw_minimize(&a, &b, &quadratic, &cfg);
        let proj = project(&a, &b)?;
        let value = weak_cost(&nu, &mu, &quadratic, Refinement::Fixed(a.len()))?.value;
        match fw {
            Ok(fw) => {
                fw_value.record((fw.value - value).abs());
                fw_point.record(sup_dist(&fw.c_star, &proj.c_hat));
            }
            Err(_) => {
                fw_value.fail();
                fw_point.fail();
            }
        }

        let gammas: Vec<Vec<f64>> = costs
            .iter()
            .map(|t| weak_cost(&nu, &mu, t, Refinement::Fixed(a.len())).map(|r| r.gamma_hat.atoms().to_vec()))
            .collect::<Result<_>>()?;
        let spread = gammas
            .iter()
            .map(|g| if g.len() == gammas[0].len() { sup_dist(g, &gammas[0]) } else { f64::NAN })
            .fold(0.0, f64::max);
        independence.record(spread);

        let scan = vertex_scan(&a, &b, &quadratic)?;
        let classical = classical_cost(&nu, &mu, &quadratic);
        vertices.record((value - scan.value).max(0.0).max((scan.value - classical).abs()));

        let verdict = check_variational(&a, &proj, &b)?;
        variational.record(if verdict.holds { 0.0 } else { 1.0 });

        let weights: Vec<f64> = (0..4).map(|_| rng.gen::<f64>()).collect();
        let total: f64 = weights.iter().sum();
        let mut c = vec![0.0; a.len()];
        for w in &weights {
            let mut perm = b.clone();
            perm.shuffle(&mut rng);
            c.iter_mut().zip(&perm).for_each(|(x, y)| *x += w / total * y);
        }
        let lhs: Vec<f64> = a.iter().zip(&proj.c_hat).map(|(x, y)| x - y).collect();
        let rhs: Vec<f64> = a.iter().zip(&c).map(|(x, y)| x - y).collect();
        residual.record(if majorize(&lhs, &rhs)?.holds() { 0.0 } else { 1.0 });

        let p = rado_decompose(&proj.c_hat, &b)?;
        let defect = sup_dist(&p.apply(&b), &proj.c_hat).max(p.stochastic_defect());
        rado.record(if p.transforms.len() < a.len() { defect } else { f64::NAN });

        let gamma = weak_cost(&nu, &mu, &quadratic, Refinement::Fixed(a.len()))?.gamma_hat;
        let k = strassen_kernel(&gamma, &nu, Refinement::Fixed(a.len()))?;
        kernel.record(
            k.max_barycenter_error().max(k.max_row_sum_defect()).max(k.column_marginal_error(&nu)),
        );

        let potentials: Vec<_> = (0..10).map(|_| random_potential(&mut rng)).collect();
        duality.record(dual_gap(&nu, &mu, &quadratic, &potentials, Refinement::Fixed(a.len()))?.gap.max(0.0));
    }

    for _ in 0..20 {
        let (a, b) = random_instance(&mut rng, 3);
        let mu = DiscreteMeasure::uniform(&a)?;
        let nu = DiscreteMeasure::uniform(&b)?;
        let theta = &costs[rng.gen_range(0..costs.len())];
        let value = weak_cost(&nu, &mu, theta, Refinement::Auto)?.value;
        let built = optimal_weak_coupling(&nu, &mu, theta, Refinement::Auto)?.barycentric_cost(theta);
        match exhaustive_weak_cost(&nu, &mu, theta, 2, &cfg) {
            Ok(ex) => sandwich.record((ex.random_value - value).abs().max((built - value).abs())),
            Err(_) => sandwich.fail(),
        }
    }

    let checks = [
        fw_value,
        fw_point,
        independence,
        vertices,
        variational,
        residual,
        rado,
        kernel,
        sandwich,
        duality,
    ]
    .into_iter()
    .map(Tally::finish)
    .collect();
    Ok(SuiteReport { seed, checks })
}
