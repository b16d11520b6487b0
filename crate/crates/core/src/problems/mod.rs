//! The two benchmark problems, written as `u_t + N[u] = 0` on
//! `[-1, 1] × [0, 1]`.
//!
//! * `example1`: diffusion with a manufactured source,
//!   `N[u] = -u_xx - e^{-t}(π² sin πx - sin πx)`, homogeneous Dirichlet,
//!   `h(x) = sin πx`, exact solution `e^{-t} sin πx`.
//! * `example2`: inviscid Burgers, `N[u] = u u_x`, periodic,
//!   `h(x) = 0.3 exp(-9x²) + 1`, reference from [`burgers_fd_reference`].

mod burgers;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::autodiff::dual::Real;
use crate::autodiff::{DerivativeBundle, Field, Jet, JetLevel};
use crate::geometry::Interval;

pub use burgers::{burgers_fd_reference, solve_periodic_burgers, FdScheme, ReferenceField, SpatialOrder, TimeScheme};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProblemName {
    Example1,
    Example2,
}

impl ProblemName {
    pub fn spec(self) -> ProblemSpec {
        match self {
            ProblemName::Example1 => example1_diffusion(),
            ProblemName::Example2 => example2_burgers(),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ProblemName::Example1 => "example1",
            ProblemName::Example2 => "example2",
        }
    }
}

impl std::str::FromStr for ProblemName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "example1" => Ok(ProblemName::Example1),
            "example2" => Ok(ProblemName::Example2),
            other => Err(format!("unknown problem `{other}` (expected example1 or example2)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryKind {
    /// `u = b` on both endpoints.
    Dirichlet,
    /// `u(x_lo, t) = u(x_hi, t)`.
    Periodic,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProblemSpec {
    name: ProblemName,
    space: Interval,
    t_end: f64,
    boundary: BoundaryKind,
}

pub fn example1_diffusion() -> ProblemSpec {
    ProblemSpec {
        name: ProblemName::Example1,
        space: Interval::new(-1.0, 1.0),
        t_end: 1.0,
        boundary: BoundaryKind::Dirichlet,
    }
}

pub fn example2_burgers() -> ProblemSpec {
    ProblemSpec {
        name: ProblemName::Example2,
        space: Interval::new(-1.0, 1.0),
        t_end: 1.0,
        boundary: BoundaryKind::Periodic,
    }
}

/// `e^{-t}(π² - 1) sin πx`, the manufactured source of example 1.
fn diffusion_source(x: f64, t: f64) -> f64 {
    (-t).exp() * (PI * PI * (PI * x).sin() - (PI * x).sin())
}

impl ProblemSpec {
    pub fn name(&self) -> ProblemName {
        self.name
    }

    pub fn space(&self) -> Interval {
        self.space
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn boundary(&self) -> BoundaryKind {
        self.boundary
    }

    /// Jet fields the residual `u_t + N[u]` reads.
    pub fn residual_level(&self) -> JetLevel {
        match self.name {
            ProblemName::Example1 => JetLevel::Second,
            ProblemName::Example2 => JetLevel::First,
        }
    }

    /// `N[u](x, t)` from the jet of `u`.
    pub fn operator<S: Real>(&self, u: &[S; 8], x: f64, t: f64) -> S {
        match self.name {
            ProblemName::Example1 => -u[Field::Dxx.index()] - diffusion_source(x, t),
            ProblemName::Example2 => u[Field::Value.index()] * u[Field::Dx.index()],
        }
    }

    /// `(∂N/∂x, ∂N/∂t)` as total derivatives along `u`.
    pub fn operator_gradient<S: Real>(&self, u: &[S; 8], x: f64, t: f64) -> [S; 2] {
        let f = |field: Field| u[field.index()];
        match self.name {
            ProblemName::Example1 => {
                let decay = (-t).exp() * (PI * PI - 1.0);
                let source_x = decay * PI * (PI * x).cos();
                let source_t = -decay * (PI * x).sin();
                [-f(Field::Dxxx) - source_x, -f(Field::Dxxt) - source_t]
            }
            ProblemName::Example2 => [
                f(Field::Dx) * f(Field::Dx) + f(Field::Value) * f(Field::Dxx),
                f(Field::Dt) * f(Field::Dx) + f(Field::Value) * f(Field::Dxt),
            ],
        }
    }

    /// `u_t + N[u]`.
    pub fn residual<S: Real>(&self, u: &[S; 8], x: f64, t: f64) -> S {
        u[Field::Dt.index()] + self.operator(u, x, t)
    }

    /// Space-time gradient of the residual.
    pub fn residual_gradient<S: Real>(&self, u: &[S; 8], x: f64, t: f64) -> [S; 2] {
        let [nx, nt] = self.operator_gradient(u, x, t);
        [u[Field::Dxt.index()] + nx, u[Field::Dtt.index()] + nt]
    }

    /// Initial data `h(x)`.
    pub fn initial(&self, x: f64) -> f64 {
        match self.name {
            ProblemName::Example1 => (PI * x).sin(),
            ProblemName::Example2 => 0.3 * (-9.0 * x * x).exp() + 1.0,
        }
    }

    /// Boundary data `b(x, t)` for Dirichlet problems.
    pub fn boundary_data(&self, _x: f64, _t: f64) -> f64 {
        0.0
    }

    pub fn exact(&self, x: f64, t: f64) -> Option<f64> {
        self.exact_jet(x, t).map(|j| j[0])
    }

    /// Closed-form jet of the exact solution, where one exists.
    pub fn exact_jet(&self, x: f64, t: f64) -> Option<Jet> {
        match self.name {
            ProblemName::Example1 => {
                let e = (-t).exp();
                let (s, c) = (PI * x).sin_cos();
                let u = e * s;
                let ux = PI * e * c;
                Some([u, ux, -u, -PI * PI * u, -ux, u, -PI * PI * ux, PI * PI * u])
            }
            ProblemName::Example2 => None,
        }
    }
}

/// `N[û](x, t)` from a derivative bundle.
pub fn apply_operator(problem: &ProblemSpec, bundle: &DerivativeBundle, x: f64, t: f64) -> f64 {
    problem.operator(&bundle.to_jet(), x, t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn example1_exact_values() {
        let p = example1_diffusion();
        assert!((p.exact(0.5, 0.0).unwrap() - 1.0).abs() < 1e-15);
        for t in [0.0, 0.3, 1.0] {
            assert_eq!(p.exact(0.0, t).unwrap(), 0.0);
        }
        assert!((p.exact(0.5, 1.0).unwrap() - (-1.0f64).exp()).abs() < 1e-15);
        assert!((p.exact(0.5, 1.0).unwrap() - 0.367879).abs() < 1e-6);
    }

    #[test]
    fn example2_initial_data() {
        let p = example2_burgers();
        assert_eq!(p.initial(0.0), 1.3);
        let edge = 0.3 * (-9.0f64).exp() + 1.0;
        assert_eq!(p.initial(1.0), edge);
        assert_eq!(p.initial(-1.0), edge);
        assert!((edge - 1.000_037_0).abs() < 1e-7);
        assert!(p.exact(0.0, 0.0).is_none());
    }

    #[test]
    fn burgers_stays_smooth_on_horizon() {
        // h'(x) = -5.4 x exp(-9x²) is most negative at x = 1/sqrt(18).
        let p = example2_burgers();
        let xm = 1.0 / 18.0f64.sqrt();
        let slope = -5.4 * xm * (-9.0 * xm * xm).exp();
        let mut steepest = 0.0f64;
        for i in 0..=20_000 {
            let x = -1.0 + i as f64 * 1e-4;
            let d = (p.initial(x + 1e-6) - p.initial(x - 1e-6)) / 2e-6;
            steepest = steepest.min(d);
        }
        assert!((steepest - slope).abs() < 1e-6);
        let t_shock = -1.0 / slope;
        assert!((t_shock - 1.29).abs() < 0.01 && t_shock > p.t_end());
    }

    #[test]
    fn operator_examples() {
        let p1 = example1_diffusion();
        let n = apply_operator(&p1, &DerivativeBundle::default(), 0.5, 0.0);
        assert!((n + (PI * PI - 1.0)).abs() < 1e-12);
        assert!((n + 8.8696).abs() < 1e-4);

        let p2 = example2_burgers();
        let b = DerivativeBundle {
            value: 2.0,
            d_dx: 3.0,
            ..Default::default()
        };
        assert_eq!(apply_operator(&p2, &b, 0.1, 0.2), 6.0);
    }

    #[test]
    fn manufactured_solution_annihilates_residual() {
        let p = example1_diffusion();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..1000 {
            let x = rng.gen_range(-1.0..=1.0);
            let t = rng.gen_range(0.0..=1.0);
            let jet = p.exact_jet(x, t).unwrap();
            let b = DerivativeBundle::from_jet(&jet);
            assert!((apply_operator(&p, &b, x, t) + b.d_dt).abs() < 1e-10);
            assert!((apply_operator(&p, &b, x, t) - (-t).exp() * (PI * x).sin()).abs() < 1e-10);
            let [gx, gt] = p.residual_gradient(&jet, x, t);
            assert!(gx.abs() < 1e-10 && gt.abs() < 1e-10);
        }
    }

    #[test]
    fn exact_jet_matches_differences() {
        let p = example1_diffusion();
        let (x, t, h) = (0.31, 0.42, 1e-5);
        let j = p.exact_jet(x, t).unwrap();
        let jx = |dx: f64| p.exact_jet(x + dx, t).unwrap();
        let jt = |dt: f64| p.exact_jet(x, t + dt).unwrap();
        let d = |a: Jet, b: Jet, k: usize| (a[k] - b[k]) / (2.0 * h);
        assert!((d(jx(h), jx(-h), 0) - j[1]).abs() < 1e-8);
        assert!((d(jt(h), jt(-h), 0) - j[2]).abs() < 1e-8);
        assert!((d(jx(h), jx(-h), 1) - j[3]).abs() < 1e-7);
        assert!((d(jt(h), jt(-h), 1) - j[4]).abs() < 1e-7);
        assert!((d(jt(h), jt(-h), 2) - j[5]).abs() < 1e-7);
        assert!((d(jx(h), jx(-h), 3) - j[6]).abs() < 1e-6);
        assert!((d(jt(h), jt(-h), 3) - j[7]).abs() < 1e-6);
    }
}
