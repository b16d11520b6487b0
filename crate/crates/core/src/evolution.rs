//! Stage 2: freeze the spatial operator and integrate in time.
//!
//! With the trained approximation `û` the PDE `u_t + N[u] = 0` becomes the
//! ODE system `du/dt = g(x, t) = -N[û](x, t)` on a fixed spatial grid,
//! integrated with classical RK4 from the exact initial data.

use crate::autodiff::{forward_into, Jet, JetLevel, JetTape};
use crate::error::{Error, Result};
use crate::geometry::Decomposition;
use crate::grid::{cubic_stencil, linspace, SolutionField};
use crate::network::MlpModel;
use crate::problems::ProblemSpec;
use crate::trainer::TrainedModel;

/// Derivatives of the surrogate at one spatial point. Points on a cut carry
/// one jet per side.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Sample {
    One(Jet),
    Two(Jet, Jet),
}

/// Anything that supplies the jets `N` reads at a fixed time.
pub trait Surrogate {
    fn sample(&mut self, xs: &[f64], t: f64, level: JetLevel, out: &mut Vec<Sample>) -> Result<()>;
}

/// The trained subdomain networks.
pub struct DecomposedSurrogate {
    dec: Decomposition,
    models: Vec<MlpModel>,
    tape: JetTape,
    batch: Vec<(f64, f64)>,
    slots: Vec<(usize, usize)>,
}

impl DecomposedSurrogate {
    pub fn new(dec: Decomposition, models: Vec<MlpModel>) -> Result<Self> {
        if models.len() != dec.subdomain_count() {
            return Err(Error::Dimension {
                expected: dec.subdomain_count(),
                found: models.len(),
                context: "subdomain models",
            });
        }
        Ok(DecomposedSurrogate {
            dec,
            models,
            tape: JetTape::new(),
            batch: Vec::new(),
            slots: Vec::new(),
        })
    }

    pub fn from_trained(trained: &TrainedModel) -> Result<Self> {
        Self::new(trained.manifest.decomposition.clone(), trained.models.clone())
    }
}

impl Surrogate for DecomposedSurrogate {
    fn sample(&mut self, xs: &[f64], t: f64, level: JetLevel, out: &mut Vec<Sample>) -> Result<()> {
        out.clear();
        out.resize(xs.len(), Sample::One([0.0; 8]));
        let mut second: Vec<Option<Jet>> = vec![None; xs.len()];
        let mut sides = Vec::with_capacity(xs.len());
        for &x in xs {
            if !self.dec.contains(x, t) {
                return Err(Error::OutsideDomain { x, t });
            }
            sides.push(match self.dec.interface_at(x) {
                Some(k) => {
                    let (left, right, _) = self.dec.interfaces()[k];
                    (left, Some(right))
                }
                None => (self.dec.owner(x)?, None),
            });
        }
        for (m, model) in self.models.iter().enumerate() {
            self.batch.clear();
            self.slots.clear();
            for (i, (&x, &(left, right))) in xs.iter().zip(&sides).enumerate() {
                if left == m {
                    self.batch.push((x, t));
                    self.slots.push((i, 0));
                } else if right == Some(m) {
                    self.batch.push((x, t));
                    self.slots.push((i, 1));
                }
            }
            if self.batch.is_empty() {
                continue;
            }
            forward_into(model, &self.batch, level, false, &mut self.tape)?;
            for (p, &(i, side)) in self.slots.iter().enumerate() {
                let jet = self.tape.jet(p);
                if side == 0 {
                    out[i] = Sample::One(jet);
                } else {
                    second[i] = Some(jet);
                }
            }
        }
        for (sample, other) in out.iter_mut().zip(second) {
            if let (Sample::One(a), Some(b)) = (*sample, other) {
                *sample = Sample::Two(a, b);
            }
        }
        Ok(())
    }
}

/// Closed-form solution of a problem that has one.
pub struct ExactSurrogate {
    problem: ProblemSpec,
}

impl ExactSurrogate {
    pub fn new(problem: &ProblemSpec) -> Result<Self> {
        if problem.exact_jet(0.0, 0.0).is_none() {
            return Err(Error::Domain(format!(
                "{} has no closed-form solution",
                problem.name().as_str()
            )));
        }
        Ok(ExactSurrogate {
            problem: problem.clone(),
        })
    }
}

impl Surrogate for ExactSurrogate {
    fn sample(&mut self, xs: &[f64], t: f64, _level: JetLevel, out: &mut Vec<Sample>) -> Result<()> {
        out.clear();
        for &x in xs {
            let jet = self
                .problem
                .exact_jet(x, t)
                .ok_or_else(|| Error::Domain("no closed-form solution".into()))?;
            out.push(Sample::One(jet));
        }
        Ok(())
    }
}

/// A stored periodic field, such as the finite-difference reference.
///
/// Values are interpolated in time by cubic Lagrange polynomials; `u_x` and
/// `u_xx` are fourth-order centred differences on the periodic grid, then
/// interpolated in space. Only `u`, `u_x` and `u_xx` are supplied.
pub struct GridSurrogate {
    field: SolutionField,
    cells: usize,
    dx: f64,
    cached_t: Option<f64>,
    nodes: [Vec<f64>; 3],
}

impl GridSurrogate {
    /// `field` must have a uniform x grid whose last node repeats the first.
    pub fn periodic(field: SolutionField) -> Result<Self> {
        let nx = field.nx();
        if nx < 6 {
            return Err(Error::GridMismatch("periodic grid needs at least 6 nodes".into()));
        }
        let cells = nx - 1;
        let dx = (field.x_grid[cells] - field.x_grid[0]) / cells as f64;
        let uniform = field.x_grid.windows(2).all(|w| ((w[1] - w[0]) - dx).abs() <= 1e-9 * dx);
        let wraps = (0..field.nt()).all(|j| field.values[[0, j]] == field.values[[cells, j]]);
        if !uniform || !wraps {
            return Err(Error::GridMismatch("field is not on a uniform periodic grid".into()));
        }
        Ok(GridSurrogate {
            field,
            cells,
            dx,
            cached_t: None,
            nodes: Default::default(),
        })
    }

    fn refresh(&mut self, t: f64) -> Result<()> {
        if self.cached_t == Some(t) {
            return Ok(());
        }
        let (it, wt) = cubic_stencil(&self.field.t_grid, t)?;
        let n = self.cells;
        let u: Vec<f64> = (0..n)
            .map(|i| {
                wt.iter()
                    .enumerate()
                    .map(|(b, w)| w * self.field.values[[i, it + b]])
                    .sum()
            })
            .collect();
        let at = |i: isize| u[i.rem_euclid(n as isize) as usize];
        let mut ux = Vec::with_capacity(n + 1);
        let mut uxx = Vec::with_capacity(n + 1);
        for i in 0..n as isize {
            ux.push((at(i - 2) - 8.0 * at(i - 1) + 8.0 * at(i + 1) - at(i + 2)) / (12.0 * self.dx));
            uxx.push(
                (-at(i - 2) + 16.0 * at(i - 1) - 30.0 * at(i) + 16.0 * at(i + 1) - at(i + 2))
                    / (12.0 * self.dx * self.dx),
            );
        }
        let mut u = u;
        for v in [&mut u, &mut ux, &mut uxx] {
            v.push(v[0]);
        }
        self.nodes = [u, ux, uxx];
        self.cached_t = Some(t);
        Ok(())
    }
}

impl Surrogate for GridSurrogate {
    fn sample(&mut self, xs: &[f64], t: f64, level: JetLevel, out: &mut Vec<Sample>) -> Result<()> {
        if level > JetLevel::Second {
            return Err(Error::Domain(
                "grid surrogate supplies at most second derivatives".into(),
            ));
        }
        self.refresh(t)?;
        out.clear();
        for &x in xs {
            let (ix, wx) = cubic_stencil(&self.field.x_grid, x)?;
            let mut jet = [0.0; 8];
            for (slot, node) in [0usize, 1, 3].into_iter().zip(&self.nodes) {
                jet[slot] = wx.iter().enumerate().map(|(a, w)| w * node[ix + a]).sum();
            }
            out.push(Sample::One(jet));
        }
        Ok(())
    }
}

/// `g(x, t) = -N[û](x, t)`; at a cut the two sides are averaged.
pub struct FrozenRhs<S> {
    problem: ProblemSpec,
    surrogate: S,
    samples: Vec<Sample>,
}

impl<S: Surrogate> FrozenRhs<S> {
    pub fn new(problem: &ProblemSpec, surrogate: S) -> Self {
        FrozenRhs {
            problem: problem.clone(),
            surrogate,
            samples: Vec::new(),
        }
    }

    pub fn problem(&self) -> &ProblemSpec {
        &self.problem
    }

    fn level(&self) -> JetLevel {
        // u_t is never read by the spatial operator.
        match self.problem.residual_level() {
            JetLevel::Value | JetLevel::First => JetLevel::First,
            higher => higher,
        }
    }

    /// `g` at every `xs[i]` for one time.
    pub fn eval_many(&mut self, xs: &[f64], t: f64, out: &mut [f64]) -> Result<()> {
        let space = self.problem.space();
        if !(0.0..=self.problem.t_end()).contains(&t) {
            return Err(Error::OutsideDomain {
                x: xs.first().copied().unwrap_or(0.0),
                t,
            });
        }
        if let Some(&x) = xs.iter().find(|&&x| !space.contains(x)) {
            return Err(Error::OutsideDomain { x, t });
        }
        let level = self.level();
        self.surrogate.sample(xs, t, level, &mut self.samples)?;
        for ((g, sample), &x) in out.iter_mut().zip(&self.samples).zip(xs) {
            *g = match sample {
                Sample::One(j) => -self.problem.operator(j, x, t),
                Sample::Two(a, b) => -0.5 * (self.problem.operator(a, x, t) + self.problem.operator(b, x, t)),
            };
        }
        Ok(())
    }

    pub fn eval(&mut self, x: f64, t: f64) -> Result<f64> {
        let mut g = [0.0];
        self.eval_many(&[x], t, &mut g)?;
        Ok(g[0])
    }
}

/// `g(x, t)` of `rhs` at one point.
pub fn frozen_rhs_eval<S: Surrogate>(rhs: &mut FrozenRhs<S>, x: f64, t: f64) -> Result<f64> {
    rhs.eval(x, t)
}

/// States of an integration at requested times.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn last(&self) -> &[f64] {
        self.states.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

/// Classical RK4 for `u' = f(t, u)` from `u(0) = u0`, storing the state at
/// `0` and at every entry of `output_times` (strictly increasing, positive).
///
/// Each interval between outputs is covered by whole steps of size `h` and,
/// when the interval is not a multiple of `h`, one shortened final step, so
/// every output time is hit exactly. The last stage of a step is evaluated at
/// exactly the next step's start time.
pub fn rk4_integrate_at(
    mut f: impl FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
    u0: &[f64],
    h: f64,
    output_times: &[f64],
) -> Result<Trajectory> {
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::Domain(format!("step size must be positive, got {h}")));
    }
    let mut previous = 0.0;
    for &t in output_times {
        if !(t.is_finite() && t > previous) {
            return Err(Error::Domain(
                "output times must be finite and strictly increasing".into(),
            ));
        }
        previous = t;
    }
    let n = u0.len();
    let mut u = u0.to_vec();
    let halted = |time: f64, reason: &str| Error::IntegrationHalted {
        last_valid_time: time,
        reason: reason.to_string(),
    };
    if u.iter().any(|v| !v.is_finite()) {
        return Err(halted(0.0, "non-finite initial state"));
    }
    let mut k: [Vec<f64>; 4] = std::array::from_fn(|_| vec![0.0; n]);
    let mut stage = vec![0.0; n];
    let mut times = vec![0.0];
    let mut states = vec![u.clone()];
    let mut start = 0.0;
    for &end in output_times {
        let span = end - start;
        let whole = (span / h + 1e-9).floor() as usize;
        let partial = span - whole as f64 * h > 1e-12 * span.max(h);
        let steps = whole + usize::from(partial);
        for s in 0..steps {
            let t0 = start + s as f64 * h;
            let t1 = if s + 1 == steps {
                end
            } else {
                start + (s + 1) as f64 * h
            };
            let dt = t1 - t0;
            let mid = t0 + 0.5 * dt;
            f(t0, &u, &mut k[0])?;
            for (s, c, t) in [(1, 0.5, mid), (2, 0.5, mid), (3, 1.0, t1)] {
                for i in 0..n {
                    stage[i] = u[i] + c * dt * k[s - 1][i];
                }
                f(t, &stage, &mut k[s])?;
            }
            for i in 0..n {
                u[i] += dt / 6.0 * (k[0][i] + 2.0 * k[1][i] + 2.0 * k[2][i] + k[3][i]);
            }
            if u.iter().any(|v| !v.is_finite()) {
                return Err(halted(t0, "non-finite stage value"));
            }
        }
        start = end;
        times.push(end);
        states.push(u.clone());
    }
    Ok(Trajectory { times, states })
}

/// RK4 from `0` to `t_end`; the trajectory holds the initial and final
/// states.
pub fn rk4_integrate(
    f: impl FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
    u0: &[f64],
    h: f64,
    t_end: f64,
) -> Result<Trajectory> {
    rk4_integrate_at(f, u0, h, &[t_end])
}

/// Where stage 2 evaluates and stores the solution.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolutionGrid {
    /// Uniform spatial points including both endpoints.
    pub nx: usize,
    /// Spacing of stored times.
    pub output_dt: f64,
    /// RK4 step.
    pub step: f64,
}

impl Default for EvolutionGrid {
    fn default() -> Self {
        EvolutionGrid {
            nx: 201,
            output_dt: 0.01,
            step: 1e-3,
        }
    }
}

impl EvolutionGrid {
    pub fn validate(&self) -> Result<()> {
        if self.nx < 2 {
            return Err(Error::config("evolution.nx", "needs at least 2 points"));
        }
        if !(self.output_dt.is_finite() && self.output_dt > 0.0) {
            return Err(Error::config("evolution.output_dt", "must be positive"));
        }
        if !(self.step.is_finite() && self.step > 0.0) {
            return Err(Error::config("evolution.step", "must be positive"));
        }
        Ok(())
    }

    pub fn x_grid(&self, problem: &ProblemSpec) -> Vec<f64> {
        let s = problem.space();
        linspace(s.lo, s.hi, self.nx)
    }

    /// `0, output_dt, ...` up to the horizon, which is always included.
    pub fn t_grid(&self, problem: &ProblemSpec) -> Vec<f64> {
        let t_end = problem.t_end();
        let n = (t_end / self.output_dt - 1e-9).ceil() as usize;
        let mut ts: Vec<f64> = (0..n).map(|j| j as f64 * self.output_dt).collect();
        ts.push(t_end);
        ts
    }
}

/// Integrates `du/dt = g(x_i, t)` at every grid point from `u(x, 0) = h(x)`,
/// storing the field at `t_grid` (which must start at 0).
pub fn evolve<S: Surrogate>(rhs: &mut FrozenRhs<S>, x_grid: &[f64], h: f64, t_grid: &[f64]) -> Result<SolutionField> {
    if t_grid.first() != Some(&0.0) {
        return Err(Error::Domain("time grid must start at 0".into()));
    }
    let problem = rhs.problem().clone();
    let u0: Vec<f64> = x_grid.iter().map(|&x| problem.initial(x)).collect();
    let mut cache: Option<(f64, Vec<f64>)> = None;
    let f = |t: f64, _u: &[f64], out: &mut [f64]| -> Result<()> {
        match &cache {
            Some((ct, g)) if *ct == t => out.copy_from_slice(g),
            _ => {
                rhs.eval_many(x_grid, t, out)?;
                if let Some(i) = out.iter().position(|v| !v.is_finite()) {
                    return Err(Error::IntegrationHalted {
                        last_valid_time: t,
                        reason: format!("non-finite right-hand side at x = {}", x_grid[i]),
                    });
                }
                cache = Some((t, out.to_vec()));
            }
        }
        Ok(())
    };
    let trajectory = rk4_integrate_at(f, &u0, h, &t_grid[1..])?;
    let mut values = ndarray::Array2::zeros((x_grid.len(), t_grid.len()));
    for (j, state) in trajectory.states.iter().enumerate() {
        for (i, v) in state.iter().enumerate() {
            values[[i, j]] = *v;
        }
    }
    SolutionField::new(x_grid.to_vec(), t_grid.to_vec(), values, h)
}

/// Stage 2 on the configured grid.
pub fn evolve_on_grid<S: Surrogate>(rhs: &mut FrozenRhs<S>, grid: &EvolutionGrid) -> Result<SolutionField> {
    grid.validate()?;
    let problem = rhs.problem().clone();
    evolve(rhs, &grid.x_grid(&problem), grid.step, &grid.t_grid(&problem))
}
