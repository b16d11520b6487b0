//! A deliberately plain reimplementation of the network, its derivatives
//! and the nine loss components, used as an oracle.
//!
//! Derivatives come from truncated bivariate power series: every quantity
//! is a polynomial of total degree 3 in `(dx, dt)` around the evaluation
//! point, and `∂x^i ∂t^j u = i! j! c[i][j]`.

use std::f64::consts::PI;

use d3pinn::geometry::PointSets;
use d3pinn::losses::{GradientMode, InterfaceAverage, LossOptions};
use d3pinn::network::{Activation, MlpModel};
use d3pinn::problems::ProblemName;

const N: usize = 4;

#[derive(Clone, Copy, Debug)]
pub struct Series([[f64; N]; N]);

impl Series {
    fn constant(v: f64) -> Self {
        let mut c = [[0.0; N]; N];
        c[0][0] = v;
        Series(c)
    }

    fn variable(v: f64, dim: usize) -> Self {
        let mut s = Series::constant(v);
        if dim == 0 {
            s.0[1][0] = 1.0;
        } else {
            s.0[0][1] = 1.0;
        }
        s
    }

    fn add(&self, other: &Series) -> Series {
        let mut c = self.0;
        for i in 0..N {
            for j in 0..N {
                c[i][j] += other.0[i][j];
            }
        }
        Series(c)
    }

    fn scale(&self, k: f64) -> Series {
        let mut c = self.0;
        for row in &mut c {
            for v in row.iter_mut() {
                *v *= k;
            }
        }
        Series(c)
    }

    fn mul(&self, other: &Series) -> Series {
        let mut c = [[0.0; N]; N];
        for i1 in 0..N {
            for j1 in 0..N - i1 {
                for i2 in 0..N - i1 - j1 {
                    for j2 in 0..N - i1 - i2 - j1 {
                        c[i1 + i2][j1 + j2] += self.0[i1][j1] * other.0[i2][j2];
                    }
                }
            }
        }
        Series(c)
    }

    /// `f(self)` given `f` and its first three derivatives at the constant
    /// term.
    fn compose(&self, f: [f64; 4]) -> Series {
        let mut p = *self;
        p.0[0][0] = 0.0;
        let p2 = p.mul(&p);
        let p3 = p2.mul(&p);
        Series::constant(f[0])
            .add(&p.scale(f[1]))
            .add(&p2.scale(f[2] / 2.0))
            .add(&p3.scale(f[3] / 6.0))
    }

    pub fn d(&self, i: usize, j: usize) -> f64 {
        let fact = |n: usize| (1..=n).product::<usize>() as f64;
        fact(i) * fact(j) * self.0[i][j]
    }
}

fn activation_series(act: Activation, z: f64) -> [f64; 4] {
    match act {
        Activation::Tanh => {
            let t = z.tanh();
            let sech2 = 1.0 - t * t;
            [t, sech2, -2.0 * t * sech2, sech2 * (6.0 * t * t - 2.0)]
        }
        Activation::Tan => {
            let s = z.tan();
            let sec2 = 1.0 + s * s;
            [s, sec2, 2.0 * s * sec2, sec2 * (2.0 + 6.0 * s * s)]
        }
        Activation::Sin => [z.sin(), z.cos(), -z.sin(), -z.cos()],
    }
}

/// Network output around `(x, t)` as a power series.
pub fn network_series(model: &MlpModel, x: f64, t: f64) -> Series {
    let p = model.parameters();
    let act = model.config().activation;
    let mut a = vec![Series::variable(x, 0), Series::variable(t, 1)];
    let layers = model.layers();
    for (l, span) in layers.iter().enumerate() {
        let mut next = Vec::with_capacity(span.fan_out);
        for o in 0..span.fan_out {
            let mut z = Series::constant(p[span.biases + o]);
            for (i, ai) in a.iter().enumerate() {
                z = z.add(&ai.scale(p[span.weights + o * span.fan_in + i]));
            }
            if l + 1 < layers.len() {
                z = z.compose(activation_series(act, z.0[0][0]));
            }
            next.push(z);
        }
        a = next;
    }
    a.pop().expect("one output")
}

/// `u, u_x, u_t, u_xx, u_xt, u_tt, u_xxx, u_xxt`.
pub fn derivatives(model: &MlpModel, x: f64, t: f64) -> [f64; 8] {
    let s = network_series(model, x, t);
    [
        s.d(0, 0),
        s.d(1, 0),
        s.d(0, 1),
        s.d(2, 0),
        s.d(1, 1),
        s.d(0, 2),
        s.d(3, 0),
        s.d(2, 1),
    ]
}

/// Residual and its `(x, t)` gradient at one point.
pub fn residual(problem: ProblemName, u: &[f64; 8], x: f64, t: f64) -> (f64, [f64; 2]) {
    let [v, ux, ut, uxx, uxt, utt, uxxx, uxxt] = *u;
    match problem {
        ProblemName::Example1 => {
            let e = (-t).exp();
            let (s, c) = ((PI * x).sin(), (PI * x).cos());
            let source = e * (PI * PI * s - s);
            let r = ut - uxx - source;
            let rx = uxt - uxxx - e * (PI * PI * PI * c - PI * c);
            let rt = utt - uxxt + source;
            (r, [rx, rt])
        }
        ProblemName::Example2 => {
            let r = ut + v * ux;
            let rx = uxt + ux * ux + v * uxx;
            let rt = utt + ut * ux + v * uxt;
            (r, [rx, rt])
        }
    }
}

fn initial(problem: ProblemName, x: f64) -> f64 {
    match problem {
        ProblemName::Example1 => (PI * x).sin(),
        ProblemName::Example2 => 0.3 * (-9.0 * x * x).exp() + 1.0,
    }
}

fn owner(cuts: &[f64], x: f64) -> usize {
    cuts.iter().filter(|&&c| c <= x).count()
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

/// The nine unweighted loss components.
pub fn components(
    problem: ProblemName,
    cuts: &[f64],
    models: &[MlpModel],
    points: &PointSets,
    options: LossOptions,
) -> [f64; 9] {
    let mut c = [0.0; 9];
    for (m, set) in points.residual.iter().enumerate() {
        let sq: Vec<f64> = set
            .iter()
            .map(|&(x, t)| residual(problem, &derivatives(&models[m], x, t), x, t).0.powi(2))
            .collect();
        c[0] += mean(&sq);
    }

    let value = |m: usize, x: f64, t: f64| derivatives(&models[m], x, t)[0];
    let last = models.len() - 1;
    let boundary: Vec<f64> = points
        .boundary
        .iter()
        .map(|&(x, t)| match problem {
            ProblemName::Example1 => value(owner(cuts, x), x, t).powi(2),
            ProblemName::Example2 => (value(0, -1.0, t) - value(last, 1.0, t)).powi(2),
        })
        .collect();
    c[1] = mean(&boundary);
    let init: Vec<f64> = points
        .initial
        .iter()
        .map(|&(x, t)| (value(owner(cuts, x), x, t) - initial(problem, x)).powi(2))
        .collect();
    c[2] = mean(&init);

    let dims = match options.gradient {
        GradientMode::SpaceTime => 2,
        GradientMode::SpaceOnly => 1,
    };
    for (k, set) in points.interface.iter().enumerate() {
        let mut terms: [Vec<f64>; 6] = Default::default();
        for &(x, t) in set {
            let ui = derivatives(&models[k], x, t);
            let uj = derivatives(&models[k + 1], x, t);
            let (ri, gi) = residual(problem, &ui, x, t);
            let (rj, gj) = residual(problem, &uj, x, t);
            let du_i = [ui[1], ui[2]];
            let du_j = [uj[1], uj[2]];
            let avg = match options.interface_average {
                InterfaceAverage::Difference => 0.5 * (ui[0] + uj[0]),
                InterfaceAverage::Sum => 0.5 * (ui[0] - uj[0]),
            };
            terms[0].push((ri - rj).powi(2));
            terms[1].push((ui[0] - avg).powi(2));
            terms[2].push((0..dims).map(|d| gi[d].powi(2) + gj[d].powi(2)).sum());
            terms[3].push((0..dims).map(|d| (du_i[d] - du_j[d]).powi(2)).sum());
            terms[4].push((0..dims).map(|d| (gi[d] - gj[d]).powi(2)).sum());
            terms[5].push(ri * ri + rj * rj);
        }
        for (slot, term) in c[3..].iter_mut().zip(&terms) {
            *slot += mean(term);
        }
    }
    c
}
