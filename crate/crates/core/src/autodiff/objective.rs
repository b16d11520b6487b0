//! Scalar objectives over network outputs and their exact parameter
//! gradients.

use std::ops::{Add, Mul, Sub};

use super::{forward, Field, JetLevel};
use crate::error::Result;
use crate::network::{MlpModel, ParamGradient};

/// An expression over the derivative fields of one network and its
/// parameters. Only affine combinations, products and squares can be
/// built, so every objective is differentiable by the engine.
#[derive(Clone, Debug, PartialEq)]
pub enum Objective {
    Constant(f64),
    /// `‖θ‖² / 2`
    HalfParamNormSq,
    Field {
        field: Field,
        x: f64,
        t: f64,
    },
    Add(Box<Objective>, Box<Objective>),
    Sub(Box<Objective>, Box<Objective>),
    Mul(Box<Objective>, Box<Objective>),
    Scale(f64, Box<Objective>),
    Square(Box<Objective>),
}

impl Objective {
    pub fn field(field: Field, x: f64, t: f64) -> Self {
        Objective::Field { field, x, t }
    }

    pub fn value_at(x: f64, t: f64) -> Self {
        Objective::field(Field::Value, x, t)
    }

    pub fn square(self) -> Self {
        Objective::Square(Box::new(self))
    }

    pub fn scale(self, factor: f64) -> Self {
        Objective::Scale(factor, Box::new(self))
    }

    fn compile(&self, tape: &mut Vec<Node>, probes: &mut Vec<(Field, f64, f64)>) -> usize {
        let node = match self {
            Objective::Constant(c) => Node::Constant(*c),
            Objective::HalfParamNormSq => Node::HalfParamNormSq,
            Objective::Field { field, x, t } => {
                probes.push((*field, *x, *t));
                Node::Probe(probes.len() - 1)
            }
            Objective::Add(a, b) => Node::Add(a.compile(tape, probes), b.compile(tape, probes)),
            Objective::Sub(a, b) => Node::Sub(a.compile(tape, probes), b.compile(tape, probes)),
            Objective::Mul(a, b) => Node::Mul(a.compile(tape, probes), b.compile(tape, probes)),
            Objective::Scale(c, a) => Node::Scale(*c, a.compile(tape, probes)),
            Objective::Square(a) => Node::Square(a.compile(tape, probes)),
        };
        tape.push(node);
        tape.len() - 1
    }
}

impl Add for Objective {
    type Output = Objective;
    fn add(self, rhs: Objective) -> Objective {
        Objective::Add(Box::new(self), Box::new(rhs))
    }
}

impl Sub for Objective {
    type Output = Objective;
    fn sub(self, rhs: Objective) -> Objective {
        Objective::Sub(Box::new(self), Box::new(rhs))
    }
}

impl Mul for Objective {
    type Output = Objective;
    fn mul(self, rhs: Objective) -> Objective {
        Objective::Mul(Box::new(self), Box::new(rhs))
    }
}

#[derive(Clone, Copy, Debug)]
enum Node {
    Constant(f64),
    HalfParamNormSq,
    Probe(usize),
    Add(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
    Scale(f64, usize),
    Square(usize),
}

/// Value and exact parameter gradient of `objective` for `model`.
pub fn loss_param_gradient(objective: &Objective, model: &MlpModel) -> Result<(f64, ParamGradient)> {
    let mut tape = Vec::new();
    let mut probes = Vec::new();
    let root = objective.compile(&mut tape, &mut probes);

    let level = probes
        .iter()
        .map(|(f, _, _)| f.level())
        .max()
        .unwrap_or(JetLevel::Value);
    let points: Vec<(f64, f64)> = probes.iter().map(|&(_, x, t)| (x, t)).collect();
    let mut jets = forward(model, &points, level, true)?;
    let params = model.parameters();
    let half_norm_sq = 0.5 * params.iter().map(|p| p * p).sum::<f64>();

    let mut values = vec![0.0; tape.len()];
    for (i, node) in tape.iter().enumerate() {
        values[i] = match *node {
            Node::Constant(c) => c,
            Node::HalfParamNormSq => half_norm_sq,
            Node::Probe(p) => jets.component(probes[p].0, p),
            Node::Add(a, b) => values[a] + values[b],
            Node::Sub(a, b) => values[a] - values[b],
            Node::Mul(a, b) => values[a] * values[b],
            Node::Scale(c, a) => c * values[a],
            Node::Square(a) => values[a] * values[a],
        };
    }

    let mut adjoints = vec![0.0; tape.len()];
    adjoints[root] = 1.0;
    let mut jet_adjoint = jets.adjoint_buffer();
    let mut norm_adjoint = 0.0;
    for i in (0..tape.len()).rev() {
        let g = adjoints[i];
        if g == 0.0 {
            continue;
        }
        match tape[i] {
            Node::Constant(_) => {}
            Node::HalfParamNormSq => norm_adjoint += g,
            Node::Probe(p) => jet_adjoint[jets.adjoint_index(probes[p].0, p)] += g,
            Node::Add(a, b) => {
                adjoints[a] += g;
                adjoints[b] += g;
            }
            Node::Sub(a, b) => {
                adjoints[a] += g;
                adjoints[b] -= g;
            }
            Node::Mul(a, b) => {
                adjoints[a] += g * values[b];
                adjoints[b] += g * values[a];
            }
            Node::Scale(c, a) => adjoints[a] += g * c,
            Node::Square(a) => adjoints[a] += 2.0 * g * values[a],
        }
    }

    let mut grad = ParamGradient::zeros(model.parameter_count());
    if !probes.is_empty() {
        jets.backward(model, &jet_adjoint, &mut grad.components)?;
    }
    if norm_adjoint != 0.0 {
        for (g, p) in grad.components.iter_mut().zip(params) {
            *g += norm_adjoint * p;
        }
    }
    Ok((values[root], grad))
}
