//! Composite collocation loss of the decomposed networks.
//!
//! Nine components, each a mean of squares:
//!
//! | # | component | evaluated on |
//! |---|-----------|--------------|
//! | 1 | residual `u_t + N[u]`, per-subdomain means summed | residual points |
//! | 2 | boundary mismatch (Dirichlet or periodic) | boundary points |
//! | 3 | initial mismatch `u(x, 0) - h(x)` | initial points |
//! | 4 | residual jump `F^i - F^j` | interface points |
//! | 5 | value mismatch against the interface average | interface points |
//! | 6 | `\|∇F^i\|² + \|∇F^j\|²` | interface points |
//! | 7 | gradient jump `\|∇u^i - ∇u^j\|²` | interface points |
//! | 8 | residual-gradient jump `\|∇F^i - ∇F^j\|²` | interface points |
//! | 9 | `(F^i)² + (F^j)²` | interface points |
//!
//! Components 1-5 form the XPINN objective; 6-9 are the interface
//! enhancements. Per-point loss terms are differentiated with respect to the
//! network jets by forward-mode duals, and those adjoints are pulled back to
//! the parameters through [`JetTape::backward`].

use serde::{Deserialize, Serialize};

use crate::autodiff::dual::{Dual, Real};
use crate::autodiff::{forward_into, Field, JetLevel, JetTape};
use crate::error::{Error, Result};
use crate::geometry::{Decomposition, Point, PointSets};
use crate::network::MlpModel;
use crate::problems::{BoundaryKind, ProblemSpec};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossWeights {
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: f64,
    pub lambda4: f64,
    pub lambda5: f64,
    pub lambda6: f64,
    pub lambda7: f64,
    pub lambda8: f64,
    pub lambda9: f64,
}

impl LossWeights {
    pub fn from_array(l: [f64; 9]) -> Self {
        LossWeights {
            lambda1: l[0],
            lambda2: l[1],
            lambda3: l[2],
            lambda4: l[3],
            lambda5: l[4],
            lambda6: l[5],
            lambda7: l[6],
            lambda8: l[7],
            lambda9: l[8],
        }
    }

    pub fn as_array(&self) -> [f64; 9] {
        [
            self.lambda1,
            self.lambda2,
            self.lambda3,
            self.lambda4,
            self.lambda5,
            self.lambda6,
            self.lambda7,
            self.lambda8,
            self.lambda9,
        ]
    }

    pub fn zero() -> Self {
        LossWeights::from_array([0.0; 9])
    }

    /// The same weights with the interface enhancements switched off.
    pub fn xpinn(&self) -> Self {
        let mut l = self.as_array();
        l[5..].fill(0.0);
        LossWeights::from_array(l)
    }

    pub fn validate(&self) -> Result<()> {
        for (k, w) in self.as_array().iter().enumerate() {
            if !w.is_finite() || *w < 0.0 {
                return Err(Error::config(
                    format!("weights.lambda{}", k + 1),
                    format!("must be finite and nonnegative, got {w}"),
                ));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub residual: f64,
    pub boundary: f64,
    pub initial: f64,
    pub interface_residual_jump: f64,
    pub interface_value: f64,
    pub residual_gradient: f64,
    pub solution_gradient_jump: f64,
    pub residual_gradient_jump: f64,
    pub interface_residual: f64,
    pub total: f64,
}

pub const COMPONENT_NAMES: [&str; 9] = [
    "residual",
    "boundary",
    "initial",
    "interface_residual_jump",
    "interface_value",
    "residual_gradient",
    "solution_gradient_jump",
    "residual_gradient_jump",
    "interface_residual",
];

impl LossBreakdown {
    pub fn from_components(c: [f64; 9], weights: &LossWeights) -> Self {
        let mut b = LossBreakdown {
            residual: c[0],
            boundary: c[1],
            initial: c[2],
            interface_residual_jump: c[3],
            interface_value: c[4],
            residual_gradient: c[5],
            solution_gradient_jump: c[6],
            residual_gradient_jump: c[7],
            interface_residual: c[8],
            total: 0.0,
        };
        b.total = b.weighted_total(weights);
        b
    }

    pub fn components(&self) -> [f64; 9] {
        [
            self.residual,
            self.boundary,
            self.initial,
            self.interface_residual_jump,
            self.interface_value,
            self.residual_gradient,
            self.solution_gradient_jump,
            self.residual_gradient_jump,
            self.interface_residual,
        ]
    }

    /// `Σ λ_k L_k` in component order.
    pub fn weighted_total(&self, weights: &LossWeights) -> f64 {
        self.components()
            .iter()
            .zip(weights.as_array())
            .fold(0.0, |acc, (c, w)| acc + w * c)
    }

    /// `λ1 L_r + λ2 L_b + λ3 L_0 + λ4 L_IF + λ5 L_I`.
    pub fn xpinn_objective(&self, weights: &LossWeights) -> f64 {
        let w = weights.as_array();
        let c = self.components();
        (0..5).fold(0.0, |acc, k| acc + w[k] * c[k])
    }

    pub fn is_finite(&self) -> bool {
        self.components().iter().all(|c| c.is_finite()) && self.total.is_finite()
    }
}

/// How the value-continuity term compares the two sides.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterfaceAverage {
    /// `|u^i - ½(u^i + u^j)|² = |½(u^i - u^j)|²`
    #[default]
    Difference,
    /// `|u^i - ½(u^i - u^j)|² = |½(u^i + u^j)|²`, which pulls the
    /// interface average towards zero; kept for audits.
    Sum,
}

/// Which partial derivatives `∇` collects in the gradient terms.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradientMode {
    #[default]
    SpaceTime,
    SpaceOnly,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossOptions {
    #[serde(default)]
    pub interface_average: InterfaceAverage,
    #[serde(default)]
    pub gradient: GradientMode,
}

#[derive(Clone, Copy, Debug)]
enum ValueTerm {
    Dirichlet { model: usize, index: usize, target: f64 },
    Periodic { lo: (usize, usize), hi: (usize, usize) },
    Initial { model: usize, index: usize, target: f64 },
}

#[derive(Clone, Copy, Debug)]
struct InterfaceSlot {
    left: usize,
    left_offset: usize,
    right: usize,
    right_offset: usize,
    count: usize,
}

#[derive(Clone, Debug, Default)]
struct ModelBatches {
    residual: Vec<Point>,
    interface: Vec<Point>,
    values: Vec<Point>,
}

/// Point sets routed to the networks that score them, ready for repeated
/// loss and gradient evaluation.
#[derive(Clone, Debug)]
pub struct LossAssembly {
    problem: ProblemSpec,
    options: LossOptions,
    batches: Vec<ModelBatches>,
    interfaces: Vec<InterfaceSlot>,
    values: Vec<ValueTerm>,
    boundary_count: usize,
    initial_count: usize,
}

#[derive(Default)]
struct Tapes {
    residual: JetTape,
    interface: JetTape,
    values: JetTape,
}

/// Buffers reused across loss evaluations.
#[derive(Default)]
pub struct LossWorkspace {
    tapes: Vec<Tapes>,
    adjoints: Vec<[Vec<f64>; 3]>,
}

impl LossAssembly {
    pub fn new(problem: &ProblemSpec, dec: &Decomposition, points: &PointSets, options: LossOptions) -> Result<Self> {
        let n_sub = dec.subdomain_count();
        if points.residual.len() != n_sub {
            return Err(Error::Dimension {
                expected: n_sub,
                found: points.residual.len(),
                context: "residual point sets",
            });
        }
        if points.interface.len() != dec.interface_count() {
            return Err(Error::Dimension {
                expected: dec.interface_count(),
                found: points.interface.len(),
                context: "interface point sets",
            });
        }
        let mut batches = vec![ModelBatches::default(); n_sub];
        for (i, (set, sub)) in points.residual.iter().zip(dec.subdomains()).enumerate() {
            for &(x, t) in set {
                if !(sub.contains(x) && dec.contains(x, t)) {
                    return Err(Error::OutsideDomain { x, t });
                }
            }
            batches[i].residual = set.clone();
        }

        let mut interfaces = Vec::with_capacity(dec.interface_count());
        for ((left, right, cut), set) in dec.interfaces().into_iter().zip(&points.interface) {
            if set.is_empty() {
                return Err(Error::Domain(format!("interface at x = {cut} has no points")));
            }
            if let Some(&(x, t)) = set.iter().find(|&&(x, t)| x != cut || !dec.contains(x, t)) {
                return Err(Error::OutsideDomain { x, t });
            }
            let slot = InterfaceSlot {
                left,
                left_offset: batches[left].interface.len(),
                right,
                right_offset: batches[right].interface.len(),
                count: set.len(),
            };
            batches[left].interface.extend_from_slice(set);
            batches[right].interface.extend_from_slice(set);
            interfaces.push(slot);
        }

        let mut push_value = |model: usize, point: Point| {
            batches[model].values.push(point);
            batches[model].values.len() - 1
        };
        let space = dec.space();
        let mut values = Vec::new();
        for &(x, t) in &points.boundary {
            if !dec.contains(x, t) {
                return Err(Error::OutsideDomain { x, t });
            }
            match problem.boundary() {
                BoundaryKind::Dirichlet => {
                    let model = dec.owner(x)?;
                    let index = push_value(model, (x, t));
                    values.push(ValueTerm::Dirichlet {
                        model,
                        index,
                        target: problem.boundary_data(x, t),
                    });
                }
                BoundaryKind::Periodic => {
                    let lo_model = dec.owner(space.lo)?;
                    let lo = (lo_model, push_value(lo_model, (space.lo, t)));
                    let hi_model = dec.owner(space.hi)?;
                    let hi = (hi_model, push_value(hi_model, (space.hi, t)));
                    values.push(ValueTerm::Periodic { lo, hi });
                }
            }
        }
        for &(x, t) in &points.initial {
            if !dec.contains(x, t) {
                return Err(Error::OutsideDomain { x, t });
            }
            let model = dec.owner(x)?;
            let index = push_value(model, (x, t));
            values.push(ValueTerm::Initial {
                model,
                index,
                target: problem.initial(x),
            });
        }

        Ok(LossAssembly {
            problem: problem.clone(),
            options,
            batches,
            interfaces,
            values,
            boundary_count: points.boundary.len(),
            initial_count: points.initial.len(),
        })
    }

    pub fn model_count(&self) -> usize {
        self.batches.len()
    }

    /// Loss components and weighted total. When `grads` is given, the
    /// gradient of the weighted total with respect to each model's
    /// parameters is added into `grads[m]`.
    pub fn evaluate(
        &self,
        models: &[MlpModel],
        weights: &LossWeights,
        grads: Option<&mut [Vec<f64>]>,
    ) -> Result<LossBreakdown> {
        self.evaluate_in(&mut LossWorkspace::default(), models, weights, grads)
    }

    /// [`evaluate`](Self::evaluate) reusing the buffers in `ws`.
    pub fn evaluate_in(
        &self,
        ws: &mut LossWorkspace,
        models: &[MlpModel],
        weights: &LossWeights,
        mut grads: Option<&mut [Vec<f64>]>,
    ) -> Result<LossBreakdown> {
        if models.len() != self.batches.len() {
            return Err(Error::Dimension {
                expected: self.batches.len(),
                found: models.len(),
                context: "subdomain models",
            });
        }
        if let Some(g) = grads.as_deref() {
            if g.len() != models.len() {
                return Err(Error::Dimension {
                    expected: models.len(),
                    found: g.len(),
                    context: "gradient buffers",
                });
            }
        }
        let keep = grads.is_some();
        let residual_level = self.problem.residual_level();
        ws.tapes.resize_with(models.len(), Tapes::default);
        for ((model, batch), t) in models.iter().zip(&self.batches).zip(&mut ws.tapes) {
            forward_into(model, &batch.residual, residual_level, keep, &mut t.residual)?;
            forward_into(model, &batch.interface, JetLevel::Third, keep, &mut t.interface)?;
            forward_into(model, &batch.values, JetLevel::Value, keep, &mut t.values)?;
        }
        let tapes = &mut ws.tapes;
        let adjoints = &mut ws.adjoints;
        if keep {
            adjoints.resize_with(models.len(), Default::default);
            for (t, adj) in tapes.iter().zip(adjoints.iter_mut()) {
                for (buf, tape) in adj.iter_mut().zip([&t.residual, &t.interface, &t.values]) {
                    buf.clear();
                    buf.resize(tape.level().len() * tape.batch(), 0.0);
                }
            }
        }
        let lambda = weights.as_array();
        let mut comp = [0.0; 9];

        for (m, (tape, batch)) in tapes.iter().zip(&self.batches).enumerate() {
            let n = batch.residual.len();
            if n == 0 {
                continue;
            }
            let scale = 1.0 / n as f64;
            let mut sum = 0.0;
            for (p, &(x, t)) in batch.residual.iter().enumerate() {
                let u = Dual::<8>::seed_all(&tape.residual.jet(p), 0);
                let r = self.problem.residual(&u, x, t);
                sum += r.re * r.re;
                if keep {
                    let coeff = lambda[0] * 2.0 * r.re * scale;
                    let adj = &mut adjoints[m][0];
                    for (c, field) in Field::ALL.iter().enumerate().take(residual_level.len()) {
                        adj[tape.residual.adjoint_index(*field, p)] += coeff * r.eps[c];
                    }
                }
            }
            comp[0] += sum * scale;
        }

        let boundary_scale = 1.0 / self.boundary_count.max(1) as f64;
        let initial_scale = 1.0 / self.initial_count.max(1) as f64;
        let mut boundary_sum = 0.0;
        let mut initial_sum = 0.0;
        for term in &self.values {
            let value = |model: usize, index: usize| tapes[model].values.component(Field::Value, index);
            match *term {
                ValueTerm::Dirichlet { model, index, target } => {
                    let d = value(model, index) - target;
                    boundary_sum += d * d;
                    if keep {
                        adjoints[model][2][index] += lambda[1] * 2.0 * d * boundary_scale;
                    }
                }
                ValueTerm::Periodic { lo, hi } => {
                    let d = value(lo.0, lo.1) - value(hi.0, hi.1);
                    boundary_sum += d * d;
                    if keep {
                        let g = lambda[1] * 2.0 * d * boundary_scale;
                        adjoints[lo.0][2][lo.1] += g;
                        adjoints[hi.0][2][hi.1] -= g;
                    }
                }
                ValueTerm::Initial { model, index, target } => {
                    let d = value(model, index) - target;
                    initial_sum += d * d;
                    if keep {
                        adjoints[model][2][index] += lambda[2] * 2.0 * d * initial_scale;
                    }
                }
            }
        }
        comp[1] = boundary_sum * boundary_scale;
        comp[2] = initial_sum * initial_scale;

        for slot in &self.interfaces {
            let left = &tapes[slot.left].interface;
            let right = &tapes[slot.right].interface;
            let points = &self.batches[slot.left].interface[slot.left_offset..slot.left_offset + slot.count];
            let scale = 1.0 / slot.count as f64;
            let mut sums = [0.0; 6];
            for (q, &(x, t)) in points.iter().enumerate() {
                let ui = Dual::<16>::seed_all(&left.jet(slot.left_offset + q), 0);
                let uj = Dual::<16>::seed_all(&right.jet(slot.right_offset + q), 8);
                let terms = self.interface_terms(&ui, &uj, x, t);
                let mut weighted = Dual::<16>::constant(0.0);
                for (k, term) in terms.iter().enumerate() {
                    sums[k] += term.re;
                    weighted = weighted + *term * (lambda[3 + k] * scale);
                }
                if keep {
                    for (c, field) in Field::ALL.iter().enumerate() {
                        adjoints[slot.left][1][left.adjoint_index(*field, slot.left_offset + q)] += weighted.eps[c];
                        adjoints[slot.right][1][right.adjoint_index(*field, slot.right_offset + q)] +=
                            weighted.eps[8 + c];
                    }
                }
            }
            for k in 0..6 {
                comp[3 + k] += sums[k] * scale;
            }
        }

        if let Some(grads) = grads.as_deref_mut() {
            for (m, (tape, adj)) in tapes.iter_mut().zip(adjoints.iter()).enumerate() {
                let g = &mut grads[m];
                tape.residual.backward(&models[m], &adj[0], g)?;
                tape.interface.backward(&models[m], &adj[1], g)?;
                tape.values.backward(&models[m], &adj[2], g)?;
            }
        }
        Ok(LossBreakdown::from_components(comp, weights))
    }

    /// Interface terms 4-9 at one point, before averaging.
    fn interface_terms<S: Real>(&self, ui: &[S; 8], uj: &[S; 8], x: f64, t: f64) -> [S; 6] {
        let p = &self.problem;
        let ri = p.residual(ui, x, t);
        let rj = p.residual(uj, x, t);
        let gi = p.residual_gradient(ui, x, t);
        let gj = p.residual_gradient(uj, x, t);
        let dims = match self.options.gradient {
            GradientMode::SpaceTime => 2,
            GradientMode::SpaceOnly => 1,
        };
        let grad_u = |u: &[S; 8]| [u[Field::Dx.index()], u[Field::Dt.index()]];
        let (dui, duj) = (grad_u(ui), grad_u(uj));

        let value = |u: &[S; 8]| u[Field::Value.index()];
        let mismatch = match self.options.interface_average {
            InterfaceAverage::Difference => (value(ui) - value(uj)) * 0.5,
            InterfaceAverage::Sum => (value(ui) + value(uj)) * 0.5,
        };
        let zero = S::constant(0.0);
        let mut grad_residual = zero;
        let mut grad_u_jump = zero;
        let mut grad_residual_jump = zero;
        for d in 0..dims {
            grad_residual = grad_residual + gi[d].square() + gj[d].square();
            grad_u_jump = grad_u_jump + (dui[d] - duj[d]).square();
            grad_residual_jump = grad_residual_jump + (gi[d] - gj[d]).square();
        }
        [
            (ri - rj).square(),
            mismatch.square(),
            grad_residual,
            grad_u_jump,
            grad_residual_jump,
            ri.square() + rj.square(),
        ]
    }
}

fn breakdown(
    models: &[MlpModel],
    dec: &Decomposition,
    points: &PointSets,
    problem: &ProblemSpec,
    weights: &LossWeights,
    options: LossOptions,
) -> Result<LossBreakdown> {
    LossAssembly::new(problem, dec, points, options)?.evaluate(models, weights, None)
}

/// Sum over subdomains of the mean squared residual.
pub fn residual_loss(
    models: &[MlpModel],
    dec: &Decomposition,
    points: &PointSets,
    problem: &ProblemSpec,
) -> Result<f64> {
    Ok(breakdown(
        models,
        dec,
        points,
        problem,
        &LossWeights::zero(),
        LossOptions::default(),
    )?
    .residual)
}

pub fn boundary_loss(
    models: &[MlpModel],
    dec: &Decomposition,
    points: &PointSets,
    problem: &ProblemSpec,
) -> Result<f64> {
    Ok(breakdown(
        models,
        dec,
        points,
        problem,
        &LossWeights::zero(),
        LossOptions::default(),
    )?
    .boundary)
}

pub fn initial_loss(
    models: &[MlpModel],
    dec: &Decomposition,
    points: &PointSets,
    problem: &ProblemSpec,
) -> Result<f64> {
    Ok(breakdown(
        models,
        dec,
        points,
        problem,
        &LossWeights::zero(),
        LossOptions::default(),
    )?
    .initial)
}

/// Components 4-9 in order.
pub fn interface_losses(
    models: &[MlpModel],
    dec: &Decomposition,
    points: &PointSets,
    problem: &ProblemSpec,
    options: LossOptions,
) -> Result<[f64; 6]> {
    let c = breakdown(models, dec, points, problem, &LossWeights::zero(), options)?.components();
    Ok([c[3], c[4], c[5], c[6], c[7], c[8]])
}

pub fn total_loss(
    models: &[MlpModel],
    dec: &Decomposition,
    points: &PointSets,
    problem: &ProblemSpec,
    weights: &LossWeights,
    options: LossOptions,
) -> Result<LossBreakdown> {
    weights.validate()?;
    breakdown(models, dec, points, problem, weights, options)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::geometry::Interval;
    use crate::network::{Activation, MlpConfig};
    use crate::problems::{example1_diffusion, example2_burgers};

    /// Depth-1 network computing `a x + b t + c`.
    fn affine(a: f64, b: f64, c: f64) -> MlpModel {
        MlpModel::from_parameters(MlpConfig::new(1, 1, Activation::Tanh, 0), vec![a, b, c]).unwrap()
    }

    fn dec() -> Decomposition {
        Decomposition::new(Interval::new(-1.0, 1.0), 1.0, &[0.0]).unwrap()
    }

    fn points(
        residual: [Vec<Point>; 2],
        interface: Vec<Point>,
        boundary: Vec<Point>,
        initial: Vec<Point>,
    ) -> PointSets {
        PointSets {
            residual: residual.to_vec(),
            interface: vec![interface],
            boundary,
            initial,
            seed: 0,
        }
    }

    fn fixed_points() -> PointSets {
        points(
            [
                vec![(-0.5, 0.1), (-0.25, 0.7), (-0.8, 0.4)],
                vec![(0.3, 0.2), (0.6, 0.9), (0.95, 0.5)],
            ],
            vec![(0.0, 0.5), (0.0, 0.1)],
            vec![(-1.0, 0.3), (1.0, 0.6)],
            vec![(-0.7, 0.0), (0.2, 0.0), (0.5, 0.0)],
        )
    }

    #[test]
    fn zero_model_residual_is_negated_source() {
        let p = example1_diffusion();
        let pts = fixed_points();
        let zero = [affine(0.0, 0.0, 0.0), affine(0.0, 0.0, 0.0)];
        let source = |x: f64, t: f64| (-t).exp() * ((PI * PI) * (PI * x).sin() - (PI * x).sin());
        let expected: f64 = pts
            .residual
            .iter()
            .map(|set| set.iter().map(|&(x, t)| source(x, t).powi(2)).sum::<f64>() / set.len() as f64)
            .sum();
        let got = residual_loss(&zero, &dec(), &pts, &p).unwrap();
        assert!((got - expected).abs() < 1e-12 * expected);
        assert_eq!(boundary_loss(&zero, &dec(), &pts, &p).unwrap(), 0.0);
        let init: f64 = pts.initial.iter().map(|&(x, _)| (PI * x).sin().powi(2)).sum::<f64>() / 3.0;
        assert!((initial_loss(&zero, &dec(), &pts, &p).unwrap() - init).abs() < 1e-15);
    }

    #[test]
    fn constant_models() {
        let pts = fixed_points();
        let one = [affine(0.0, 0.0, 1.0), affine(0.0, 0.0, 1.0)];
        assert_eq!(boundary_loss(&one, &dec(), &pts, &example1_diffusion()).unwrap(), 1.0);

        let p2 = example2_burgers();
        let c = [affine(0.0, 0.0, 0.7), affine(0.0, 0.0, 0.7)];
        assert_eq!(boundary_loss(&c, &dec(), &pts, &p2).unwrap(), 0.0);
        let expected: f64 = pts
            .initial
            .iter()
            .map(|&(x, _)| (0.3 * (-9.0 * x * x).exp()).powi(2))
            .sum::<f64>()
            / 3.0;
        let got = initial_loss(&one, &dec(), &pts, &p2).unwrap();
        assert!((got - expected).abs() < 1e-15);
    }

    #[test]
    fn burgers_linear_stand_in() {
        // u = x: residual u_t + u u_x = x.
        let pts = fixed_points();
        let m = [affine(1.0, 0.0, 0.0), affine(1.0, 0.0, 0.0)];
        let expected: f64 = pts
            .residual
            .iter()
            .map(|set| set.iter().map(|&(x, _)| x * x).sum::<f64>() / set.len() as f64)
            .sum();
        let got = residual_loss(&m, &dec(), &pts, &example2_burgers()).unwrap();
        assert!((got - expected).abs() < 1e-12);
    }

    #[test]
    fn hand_computed_interface_case() {
        // Left u = x + t, right u = 2x, Burgers, one point (0, 0.5).
        let pts = points(
            [vec![(-0.5, 0.5)], vec![(0.5, 0.5)]],
            vec![(0.0, 0.5)],
            vec![(-1.0, 0.5)],
            vec![(0.1, 0.0)],
        );
        let m = [affine(1.0, 1.0, 0.0), affine(2.0, 0.0, 0.0)];
        let c = interface_losses(&m, &dec(), &pts, &example2_burgers(), LossOptions::default()).unwrap();
        assert!((c[0] - 2.25).abs() < 1e-12);
        assert!((c[1] - 0.0625).abs() < 1e-12);
        assert!((c[5] - 2.25).abs() < 1e-12);
        // ∇F^i = (u_xt + u_x² + u u_xx, u_tt + u_t u_x + u u_xt) = (1, 1); ∇F^j = (4, 0).
        assert!((c[2] - (2.0 + 16.0)).abs() < 1e-12);
        // ∇u^i = (1, 1), ∇u^j = (2, 0).
        assert!((c[3] - 2.0).abs() < 1e-12);
        assert!((c[4] - (9.0 + 1.0)).abs() < 1e-12);

        let literal = LossOptions {
            interface_average: InterfaceAverage::Sum,
            ..Default::default()
        };
        let c = interface_losses(&m, &dec(), &pts, &example2_burgers(), literal).unwrap();
        assert!((c[1] - 0.0625).abs() < 1e-12);
        let space_only = LossOptions {
            gradient: GradientMode::SpaceOnly,
            ..Default::default()
        };
        let c = interface_losses(&m, &dec(), &pts, &example2_burgers(), space_only).unwrap();
        assert!((c[2] - 17.0).abs() < 1e-12);
        assert!((c[3] - 1.0).abs() < 1e-12);
        assert!((c[4] - 9.0).abs() < 1e-12);
    }

    #[test]
    fn identical_models_have_continuous_interface() {
        let model = MlpModel::init(MlpConfig::new(3, 5, Activation::Tanh, 4)).unwrap();
        let m = [model.clone(), model];
        for p in [example1_diffusion(), example2_burgers()] {
            let c = interface_losses(&m, &dec(), &fixed_points(), &p, LossOptions::default()).unwrap();
            assert_eq!([c[0], c[1], c[3], c[4]], [0.0; 4]);
            assert!(c[2] > 0.0 && c[5] > 0.0);
        }
    }

    #[test]
    fn weighted_total_of_unit_components() {
        let w = LossWeights::from_array([1.0, 22.0, 1.0, 1.0, 10.0, 0.001, 10.0, 0.001, 1.0]);
        let b = LossBreakdown::from_components([1.0; 9], &w);
        assert!((b.total - 46.002).abs() < 1e-12);
        assert_eq!(
            LossBreakdown::from_components([3.0; 9], &LossWeights::zero()).total,
            0.0
        );
    }

    #[test]
    fn xpinn_reduction_is_exact() {
        let model = MlpModel::init(MlpConfig::new(3, 4, Activation::Tanh, 9)).unwrap();
        let m = [
            model.clone(),
            MlpModel::init(MlpConfig::new(3, 4, Activation::Tanh, 10)).unwrap(),
        ];
        let w = LossWeights::from_array([1.0, 22.0, 1.0, 1.0, 10.0, 0.001, 10.0, 0.001, 1.0]).xpinn();
        let b = total_loss(
            &m,
            &dec(),
            &fixed_points(),
            &example1_diffusion(),
            &w,
            LossOptions::default(),
        )
        .unwrap();
        assert_eq!(b.total.to_bits(), b.xpinn_objective(&w).to_bits());
    }

    #[test]
    fn negative_weight_rejected() {
        let mut w = LossWeights::from_array([1.0; 9]);
        w.lambda2 = -1.0;
        let err = w.validate().unwrap_err();
        assert!(err.to_string().contains("weights.lambda2"));
    }

    #[test]
    fn residual_point_outside_its_subdomain_rejected() {
        let mut pts = fixed_points();
        pts.residual[0].push((0.5, 0.5));
        let m = [affine(0.0, 0.0, 0.0), affine(0.0, 0.0, 0.0)];
        assert!(matches!(
            residual_loss(&m, &dec(), &pts, &example1_diffusion()),
            Err(Error::OutsideDomain { .. })
        ));
    }

    #[test]
    fn empty_interface_rejected() {
        let mut pts = fixed_points();
        pts.interface[0].clear();
        let m = [affine(0.0, 0.0, 0.0), affine(0.0, 0.0, 0.0)];
        assert!(interface_losses(&m, &dec(), &pts, &example1_diffusion(), LossOptions::default()).is_err());
    }
}
