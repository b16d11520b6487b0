//! Random small loss problems shared by the oracle tests.

use d3pinn::geometry::{Decomposition, Interval, PointSets};
use d3pinn::losses::{GradientMode, InterfaceAverage, LossAssembly, LossOptions};
use d3pinn::network::{Activation, MlpConfig, MlpModel};
use d3pinn::problems::ProblemName;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}

pub struct Case {
    pub problem: ProblemName,
    pub cuts: Vec<f64>,
    pub models: Vec<MlpModel>,
    pub points: PointSets,
    pub options: LossOptions,
}

/// Width ≤ 3, depth ≤ 3, at most five points per set.
pub fn random_case(seed: u64) -> Case {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let problem = if rng.gen() {
        ProblemName::Example1
    } else {
        ProblemName::Example2
    };
    let cuts = if rng.gen() {
        vec![rng.gen_range(-0.5..0.5)]
    } else {
        vec![-0.4, 0.3]
    };
    let activation = [Activation::Tanh, Activation::Sin, Activation::Tan][rng.gen_range(0..3)];
    let models: Vec<MlpModel> = (0..=cuts.len())
        .map(|i| {
            let depth = rng.gen_range(1..=3);
            let width = rng.gen_range(1..=3);
            let mut m = MlpModel::init(MlpConfig::new(
                depth,
                width,
                activation,
                seed.wrapping_mul(7).wrapping_add(i as u64),
            ))
            .unwrap();
            for p in m.parameters_mut() {
                *p = 0.8 * *p + rng.gen_range(-0.3..0.3);
            }
            m
        })
        .collect();
    let mut edges = vec![-1.0];
    edges.extend(&cuts);
    edges.push(1.0);
    let mut n = || rng.gen_range(1..=5);
    let counts: Vec<usize> = (0..4 + cuts.len() * 2).map(|_| n()).collect();
    let residual = (0..=cuts.len())
        .map(|m| {
            (0..counts[m])
                .map(|_| (rng.gen_range(edges[m]..edges[m + 1]), rng.gen_range(0.0..1.0)))
                .collect()
        })
        .collect();
    let interface = cuts
        .iter()
        .enumerate()
        .map(|(k, &c)| (0..counts[3 + k]).map(|_| (c, rng.gen_range(0.0..1.0))).collect())
        .collect();
    let boundary = (0..counts[cuts.len() + 1])
        .map(|_| (if rng.gen() { -1.0 } else { 1.0 }, rng.gen_range(0.0..1.0)))
        .collect();
    let initial = (0..counts[cuts.len() + 2])
        .map(|_| (rng.gen_range(-1.0..1.0), 0.0))
        .collect();
    let options = LossOptions {
        interface_average: if rng.gen() {
            InterfaceAverage::Difference
        } else {
            InterfaceAverage::Sum
        },
        gradient: if rng.gen() {
            GradientMode::SpaceTime
        } else {
            GradientMode::SpaceOnly
        },
    };
    Case {
        problem,
        cuts,
        models,
        points: PointSets {
            residual,
            interface,
            boundary,
            initial,
            seed,
        },
        options,
    }
}

pub fn assembly(case: &Case) -> LossAssembly {
    let spec = case.problem.spec();
    let dec = Decomposition::new(Interval::new(-1.0, 1.0), 1.0, &case.cuts).unwrap();
    LossAssembly::new(&spec, &dec, &case.points, case.options).unwrap()
}
