//! Exact input and parameter derivatives of the subdomain networks.
//!
//! Input derivatives are propagated forward as truncated Taylor jets in
//! `(x, t)`: every hidden unit carries its value together with the partial
//! derivatives listed in [`Field`]. Parameter gradients of any scalar built
//! from those jets are obtained by reverse accumulation through the same
//! jet propagation, so objectives containing `u_xx` (or the third-order terms
//! needed by residual gradients) are differentiated exactly.
//!
//! Batches are processed as one matrix per layer: the rows of the matrix hold
//! component `c` of point `b` at row `c * batch + b`, so each affine layer is
//! a single matrix product.

pub mod dual;
mod objective;

use ndarray::linalg::general_mat_mul;
use ndarray::{s, Array2, ArrayView2, ArrayViewMut2};

use crate::error::{check_finite, Error, Result};
use crate::network::{Activation, MlpModel};

pub use objective::{loss_param_gradient, Objective};

pub const JET_LEN: usize = 8;

/// Partial derivatives of `u`, indexed by [`Field`].
pub type Jet = [f64; JET_LEN];

/// Partial derivatives carried by a jet. The order is chosen so that every
/// [`JetLevel`] is a prefix.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Field {
    Value = 0,
    Dx = 1,
    Dt = 2,
    Dxx = 3,
    Dxt = 4,
    Dtt = 5,
    Dxxx = 6,
    Dxxt = 7,
}

impl Field {
    pub const ALL: [Field; JET_LEN] = [
        Field::Value,
        Field::Dx,
        Field::Dt,
        Field::Dxx,
        Field::Dxt,
        Field::Dtt,
        Field::Dxxx,
        Field::Dxxt,
    ];

    #[inline]
    pub fn index(self) -> usize {
        self as usize
    }

    /// Smallest level that carries this field.
    pub fn level(self) -> JetLevel {
        match self {
            Field::Value => JetLevel::Value,
            Field::Dx | Field::Dt => JetLevel::First,
            Field::Dxx => JetLevel::Second,
            _ => JetLevel::Third,
        }
    }
}

/// How much of the jet a forward pass computes.
///
/// * `Value`: `u`
/// * `First`: `u, u_x, u_t`
/// * `Second`: `u, u_x, u_t, u_xx`
/// * `Third`: all of [`Field`], enough for space-time gradients of
///   second-order residuals.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum JetLevel {
    Value,
    First,
    Second,
    Third,
}

impl JetLevel {
    #[inline]
    pub fn len(self) -> usize {
        match self {
            JetLevel::Value => 1,
            JetLevel::First => 3,
            JetLevel::Second => 4,
            JetLevel::Third => JET_LEN,
        }
    }

    pub fn contains(self, field: Field) -> bool {
        field.index() < self.len()
    }
}

/// `û` and the derivatives the benchmark operators consume at one point.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DerivativeBundle {
    pub value: f64,
    pub d_dt: f64,
    pub d_dx: f64,
    pub d2_dx2: f64,
}

impl DerivativeBundle {
    pub fn from_jet(jet: &Jet) -> Self {
        DerivativeBundle {
            value: jet[Field::Value.index()],
            d_dt: jet[Field::Dt.index()],
            d_dx: jet[Field::Dx.index()],
            d2_dx2: jet[Field::Dxx.index()],
        }
    }

    /// The bundle as a jet; fields the bundle does not carry are zero.
    pub fn to_jet(&self) -> Jet {
        let mut jet = [0.0; JET_LEN];
        jet[Field::Value.index()] = self.value;
        jet[Field::Dx.index()] = self.d_dx;
        jet[Field::Dt.index()] = self.d_dt;
        jet[Field::Dxx.index()] = self.d2_dx2;
        jet
    }
}

#[derive(Default)]
struct LayerTape {
    /// Jets entering the layer, `(k * batch, fan_in)`.
    input: Array2<f64>,
    /// Jets of the affine map, `(k * batch, fan_out)`.
    pre: Array2<f64>,
    /// `σ..σ''''` at each pre-activation value; hidden layers only.
    derivs: Vec<[f64; 5]>,
}

/// Result of a batched forward pass, optionally retaining what the backward
/// pass needs. A tape can be refilled by [`forward_into`], which reuses its
/// buffers when the shapes are unchanged.
#[derive(Default)]
pub struct JetTape {
    level: Option<JetLevel>,
    batch: usize,
    kept: bool,
    layers: Vec<LayerTape>,
    grad_z: Array2<f64>,
    grad_a: Array2<f64>,
}

/// Reshapes `a` to `(rows, cols)`, reallocating only on a shape change.
/// Contents are unspecified afterwards.
fn ensure_shape(a: &mut Array2<f64>, rows: usize, cols: usize) {
    if a.dim() != (rows, cols) {
        *a = Array2::zeros((rows, cols));
    }
}

impl JetTape {
    pub fn new() -> Self {
        JetTape::default()
    }

    pub fn level(&self) -> JetLevel {
        self.level.unwrap_or(JetLevel::Value)
    }

    pub fn batch(&self) -> usize {
        self.batch
    }

    fn output(&self) -> &[f64] {
        match self.layers.last() {
            Some(last) if self.batch > 0 => last.pre.as_slice().expect("standard layout"),
            _ => &[],
        }
    }

    #[inline]
    pub fn component(&self, field: Field, point: usize) -> f64 {
        debug_assert!(self.level().contains(field));
        self.output()[field.index() * self.batch + point]
    }

    /// Jet of one point; fields beyond the tape's level are zero.
    pub fn jet(&self, point: usize) -> Jet {
        let out = self.output();
        let mut jet = [0.0; JET_LEN];
        for (c, slot) in jet.iter_mut().enumerate().take(self.level().len()) {
            *slot = out[c * self.batch + point];
        }
        jet
    }

    /// Zeroed adjoint buffer laid out like the output (`c * batch + point`).
    pub fn adjoint_buffer(&self) -> Vec<f64> {
        vec![0.0; self.level().len() * self.batch]
    }

    #[inline]
    pub fn adjoint_index(&self, field: Field, point: usize) -> usize {
        field.index() * self.batch + point
    }

    /// Accumulates into `grad` the parameter gradient of
    /// `sum_{c,b} adjoint[c * batch + b] * jet_c(point b)`.
    pub fn backward(&mut self, model: &MlpModel, adjoint: &[f64], grad: &mut [f64]) -> Result<()> {
        let k = self.level().len();
        let b = self.batch;
        if b > 0 && !self.kept {
            return Err(Error::Domain("forward pass was run without a tape".into()));
        }
        if adjoint.len() != k * b {
            return Err(Error::Dimension {
                expected: k * b,
                found: adjoint.len(),
                context: "jet adjoint",
            });
        }
        if grad.len() != model.parameter_count() {
            return Err(Error::Dimension {
                expected: model.parameter_count(),
                found: grad.len(),
                context: "parameter gradient",
            });
        }
        let spans = model.layers();
        if b == 0 {
            return Ok(());
        }
        if spans.len() != self.layers.len() || spans[0].fan_in != self.layers[0].input.ncols() {
            return Err(Error::Domain("tape was recorded for a different network".into()));
        }
        let params = model.parameters();
        let JetTape {
            layers, grad_z, grad_a, ..
        } = self;
        ensure_shape(grad_z, k * b, 1);
        grad_z.as_slice_mut().expect("standard layout").copy_from_slice(adjoint);
        for (l, span) in spans.iter().enumerate().rev() {
            let tape = &layers[l];
            {
                let (gw, gb) = grad[span.weights..span.biases + span.fan_out].split_at_mut(span.fan_in * span.fan_out);
                let mut gw =
                    ArrayViewMut2::from_shape((span.fan_out, span.fan_in), gw).expect("layer span matches shape");
                general_mat_mul(1.0, &grad_z.t(), &tape.input, 1.0, &mut gw);
                for row in grad_z.slice(s![0..b, ..]).rows() {
                    for (g, d) in gb.iter_mut().zip(row) {
                        *g += d;
                    }
                }
            }
            if l == 0 {
                break;
            }
            let w = ArrayView2::from_shape((span.fan_out, span.fan_in), &params[span.weights..span.biases])
                .expect("layer span matches shape");
            ensure_shape(grad_a, k * b, span.fan_in);
            general_mat_mul(1.0, grad_z, &w, 0.0, grad_a);
            let below = &layers[l - 1];
            ensure_shape(grad_z, k * b, span.fan_in);
            activation_backward(grad_a, &below.pre, &below.derivs, k, b, grad_z);
        }
        Ok(())
    }
}

/// Batched forward pass at `level`. With `keep_tape` the intermediate
/// matrices are retained for [`JetTape::backward`].
pub fn forward(model: &MlpModel, points: &[(f64, f64)], level: JetLevel, keep_tape: bool) -> Result<JetTape> {
    let mut tape = JetTape::new();
    forward_into(model, points, level, keep_tape, &mut tape)?;
    Ok(tape)
}

/// [`forward`] writing into an existing tape.
pub fn forward_into(
    model: &MlpModel,
    points: &[(f64, f64)],
    level: JetLevel,
    keep_tape: bool,
    tape: &mut JetTape,
) -> Result<()> {
    model.check_finite()?;
    for (i, &(x, t)) in points.iter().enumerate() {
        if !x.is_finite() || !t.is_finite() {
            return Err(Error::NonFinite {
                what: "input coordinate",
                index: i,
                value: if x.is_finite() { t } else { x },
            });
        }
    }
    let k = level.len();
    let b = points.len();
    let activation = model.config().activation;
    let spans = model.layers();
    tape.level = Some(level);
    tape.batch = b;
    tape.kept = keep_tape;
    tape.layers.resize_with(spans.len(), LayerTape::default);
    if b == 0 {
        return Ok(());
    }

    {
        let a = &mut tape.layers[0].input;
        ensure_shape(a, k * b, spans[0].fan_in);
        a.fill(0.0);
        for (i, &(x, t)) in points.iter().enumerate() {
            a[[i, 0]] = x;
            a[[i, 1]] = t;
            if k > 1 {
                a[[Field::Dx.index() * b + i, 0]] = 1.0;
                a[[Field::Dt.index() * b + i, 1]] = 1.0;
            }
        }
    }

    let params = model.parameters();
    let last = spans.len() - 1;
    for (l, span) in spans.iter().enumerate() {
        let w = ArrayView2::from_shape((span.fan_out, span.fan_in), &params[span.weights..span.biases])
            .expect("layer span matches shape");
        let (here, above) = tape.layers.split_at_mut(l + 1);
        let layer = &mut here[l];
        ensure_shape(&mut layer.pre, k * b, span.fan_out);
        general_mat_mul(1.0, &layer.input, &w.t(), 0.0, &mut layer.pre);
        let bias = &params[span.biases..span.biases + span.fan_out];
        for mut row in layer.pre.slice_mut(s![0..b, ..]).rows_mut() {
            for (zi, bi) in row.iter_mut().zip(bias) {
                *zi += bi;
            }
        }
        if l == last {
            layer.derivs.clear();
            break;
        }
        let next = &mut above[0].input;
        ensure_shape(next, k * b, span.fan_out);
        activation_forward(&layer.pre, activation, k, b, keep_tape, next, &mut layer.derivs);
    }
    Ok(())
}

fn activation_forward(
    z: &Array2<f64>,
    activation: Activation,
    k: usize,
    b: usize,
    keep: bool,
    out: &mut Array2<f64>,
    derivs: &mut Vec<[f64; 5]>,
) {
    let width = z.ncols();
    let zs = z.as_slice().expect("standard layout");
    let out = out.as_slice_mut().expect("standard layout");
    derivs.clear();
    let plane = b * width;
    for p in 0..b {
        for j in 0..width {
            let base = p * width + j;
            let mut zc = [0.0; JET_LEN];
            for (c, slot) in zc.iter_mut().enumerate().take(k) {
                *slot = zs[c * plane + base];
            }
            let d = activation.derivatives(zc[0]);
            let f = jet_compose(&d, &zc);
            for (c, value) in f.iter().enumerate().take(k) {
                out[c * plane + base] = *value;
            }
            if keep {
                derivs.push(d);
            }
        }
    }
}

/// Jet of `σ(z)` from the jet of `z` and `[σ, σ', σ'', σ''', σ'''']` at `z`.
#[inline]
fn jet_compose(s: &[f64; 5], z: &Jet) -> Jet {
    let [s0, s1, s2, s3, _] = *s;
    let [_, z1, z2, z3, z4, z5, z6, z7] = *z;
    [
        s0,
        s1 * z1,
        s1 * z2,
        s2 * z1 * z1 + s1 * z3,
        s2 * z1 * z2 + s1 * z4,
        s2 * z2 * z2 + s1 * z5,
        s3 * z1 * z1 * z1 + 3.0 * s2 * z1 * z3 + s1 * z6,
        s3 * z1 * z1 * z2 + s2 * (2.0 * z1 * z4 + z3 * z2) + s1 * z7,
    ]
}

/// Adjoint of `z`'s jet given the adjoint `g` of `σ(z)`'s jet.
#[inline]
fn jet_compose_adjoint(s: &[f64; 5], z: &Jet, g: &Jet) -> Jet {
    let [_, s1, s2, s3, s4] = *s;
    let [_, z1, z2, z3, z4, z5, z6, z7] = *z;
    let [g0, g1, g2, g3, g4, g5, g6, g7] = *g;
    let dz0 = g0 * s1
        + g1 * s2 * z1
        + g2 * s2 * z2
        + g3 * (s3 * z1 * z1 + s2 * z3)
        + g4 * (s3 * z1 * z2 + s2 * z4)
        + g5 * (s3 * z2 * z2 + s2 * z5)
        + g6 * (s4 * z1 * z1 * z1 + 3.0 * s3 * z1 * z3 + s2 * z6)
        + g7 * (s4 * z1 * z1 * z2 + s3 * (2.0 * z1 * z4 + z3 * z2) + s2 * z7);
    let dz1 = g1 * s1
        + g3 * 2.0 * s2 * z1
        + g4 * s2 * z2
        + g6 * 3.0 * (s3 * z1 * z1 + s2 * z3)
        + g7 * 2.0 * (s3 * z1 * z2 + s2 * z4);
    let dz2 = g2 * s1 + g4 * s2 * z1 + g5 * 2.0 * s2 * z2 + g7 * (s3 * z1 * z1 + s2 * z3);
    let dz3 = g3 * s1 + g6 * 3.0 * s2 * z1 + g7 * s2 * z2;
    let dz4 = g4 * s1 + g7 * 2.0 * s2 * z1;
    [dz0, dz1, dz2, dz3, dz4, g5 * s1, g6 * s1, g7 * s1]
}

fn activation_backward(
    da: &Array2<f64>,
    z: &Array2<f64>,
    derivs: &[[f64; 5]],
    k: usize,
    b: usize,
    out: &mut Array2<f64>,
) {
    let width = z.ncols();
    let zs = z.as_slice().expect("standard layout");
    let gs = da.as_slice().expect("standard layout");
    let out = out.as_slice_mut().expect("standard layout");
    let plane = b * width;
    for p in 0..b {
        for j in 0..width {
            let base = p * width + j;
            let mut zc = [0.0; JET_LEN];
            let mut gc = [0.0; JET_LEN];
            for c in 0..k {
                zc[c] = zs[c * plane + base];
                gc[c] = gs[c * plane + base];
            }
            let dz = jet_compose_adjoint(&derivs[base], &zc, &gc);
            for (c, value) in dz.iter().enumerate().take(k) {
                out[c * plane + base] = *value;
            }
        }
    }
}

/// Jets of `model` at each point, without a tape.
pub fn eval_jets(model: &MlpModel, points: &[(f64, f64)], level: JetLevel) -> Result<Vec<Jet>> {
    let tape = forward(model, points, level, false)?;
    Ok((0..points.len()).map(|i| tape.jet(i)).collect())
}

/// `û, û_t, û_x, û_xx` at one point.
pub fn eval_with_derivatives(model: &MlpModel, x: f64, t: f64) -> Result<DerivativeBundle> {
    check_finite("input coordinate", &[x, t])?;
    let tape = forward(model, &[(x, t)], JetLevel::Second, false)?;
    Ok(DerivativeBundle::from_jet(&tape.jet(0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{MlpConfig, MlpModel};

    fn model(depth: usize, width: usize, act: Activation, seed: u64) -> MlpModel {
        MlpModel::init(MlpConfig::new(depth, width, act, seed)).unwrap()
    }

    #[test]
    fn linear_network_derivatives() {
        let cfg = MlpConfig::new(1, 1, Activation::Tanh, 0);
        let m = MlpModel::from_parameters(cfg, vec![2.0, 3.0, 1.0]).unwrap();
        for &(x, t) in &[(0.0, 0.0), (0.4, -1.2), (3.0, 2.0)] {
            let d = eval_with_derivatives(&m, x, t).unwrap();
            assert_eq!(d.value, 2.0 * x + 3.0 * t + 1.0);
            assert_eq!(d.d_dx, 2.0);
            assert_eq!(d.d_dt, 3.0);
            assert_eq!(d.d2_dx2, 0.0);
        }
    }

    #[test]
    fn zero_network_is_zero() {
        let cfg = MlpConfig::new(3, 5, Activation::Tanh, 0);
        let n = cfg.parameter_count();
        let m = MlpModel::from_parameters(cfg, vec![0.0; n]).unwrap();
        let jets = eval_jets(&m, &[(0.3, 0.1), (-0.9, 0.7)], JetLevel::Third).unwrap();
        assert!(jets.iter().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn rejects_non_finite_inputs_and_parameters() {
        let m = model(2, 3, Activation::Tanh, 1);
        let err = eval_with_derivatives(&m, f64::NAN, 0.0).unwrap_err();
        assert!(matches!(err, Error::NonFinite { index: 0, .. }));

        let mut bad = m.clone();
        bad.parameters_mut()[4] = f64::INFINITY;
        let err = eval_with_derivatives(&bad, 0.1, 0.1).unwrap_err();
        assert!(matches!(err, Error::NonFinite { index: 4, .. }));
    }

    #[test]
    fn levels_agree_on_shared_fields() {
        let m = model(4, 7, Activation::Sin, 3);
        let pts = [(0.1, 0.2), (-0.5, 0.9), (0.77, 0.0)];
        let full = eval_jets(&m, &pts, JetLevel::Third).unwrap();
        for level in [JetLevel::Value, JetLevel::First, JetLevel::Second] {
            let part = eval_jets(&m, &pts, level).unwrap();
            for (a, b) in part.iter().zip(&full) {
                for c in 0..level.len() {
                    assert_eq!(a[c], b[c]);
                }
            }
        }
    }

    #[test]
    fn evaluation_is_deterministic() {
        let m = model(4, 10, Activation::Tanh, 11);
        let pts: Vec<_> = (0..17).map(|i| (i as f64 * 0.1 - 0.8, i as f64 * 0.05)).collect();
        let a = eval_jets(&m, &pts, JetLevel::Third).unwrap();
        let b = eval_jets(&m, &pts, JetLevel::Third).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn batch_and_single_point_agree() {
        let m = model(3, 6, Activation::Tanh, 5);
        let pts = [(0.1, 0.2), (-0.5, 0.9), (0.77, 0.0)];
        let batch = eval_jets(&m, &pts, JetLevel::Third).unwrap();
        for (i, &p) in pts.iter().enumerate() {
            let one = eval_jets(&m, &[p], JetLevel::Third).unwrap();
            for c in 0..JET_LEN {
                assert!((one[0][c] - batch[i][c]).abs() <= 1e-14 * (1.0 + batch[i][c].abs()));
            }
        }
    }

    #[test]
    fn adjoint_of_compose_matches_directional_derivative() {
        let s = Activation::Tanh.derivatives(0.4);
        let z = [0.4, 0.3, -0.2, 0.5, 0.1, -0.7, 0.25, 0.6];
        let g = [0.9, -0.4, 0.3, 0.8, -0.6, 0.2, 0.5, -0.1];
        let dir = [0.2, -0.1, 0.3, 0.05, -0.4, 0.6, 0.1, 0.2];
        let h = 1e-6;
        let eval = |eps: f64| {
            let zz: Jet = std::array::from_fn(|c| z[c] + eps * dir[c]);
            let ss = Activation::Tanh.derivatives(zz[0]);
            let f = jet_compose(&ss, &zz);
            f.iter().zip(&g).map(|(a, b)| a * b).sum::<f64>()
        };
        let fd = (eval(h) - eval(-h)) / (2.0 * h);
        let adj = jet_compose_adjoint(&s, &z, &g);
        let analytic: f64 = adj.iter().zip(&dir).map(|(a, b)| a * b).sum();
        assert!((fd - analytic).abs() < 1e-8, "{fd} vs {analytic}");
    }
}
