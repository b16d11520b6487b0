//! Finite-difference reference for periodic inviscid Burgers.
//!
//! Method of lines on a periodic grid: the flux `F = u²/2` is differenced
//! centrally, to sixth order by default,
//! `du_i/dt = -(F_{i+3} - 9F_{i+2} + 45F_{i+1} - 45F_{i-1} + 9F_{i-2} - F_{i-3}) / (60 dx)`,
//! or to fourth, `-(-F_{i+2} + 8F_{i+1} - 8F_{i-1} + F_{i-2}) / (12 dx)`,
//! or second order, `-(F_{i+1} - F_{i-1}) / (2 dx)`. The system is advanced
//! with classical RK4 (default) or leapfrog started by one RK4 step. Every
//! stencil telescopes, so the grid mean of `u` is conserved up to rounding.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Interval;
use crate::grid::{linspace, SolutionField};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeScheme {
    #[default]
    Rk4,
    Leapfrog,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpatialOrder {
    Second,
    Fourth,
    #[default]
    Sixth,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FdScheme {
    pub time: TimeScheme,
    pub order: SpatialOrder,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReferenceField {
    pub field: SolutionField,
    pub dx: f64,
    pub dt: f64,
    pub scheme: FdScheme,
}

fn steps_for(span: f64, step: f64, what: &str) -> Result<usize> {
    let n = (span / step).round();
    if n < 1.0 || (n * step - span).abs() > 1e-9 * span.max(step) {
        return Err(Error::Domain(format!(
            "{what}: {span} is not an integer multiple of {step}"
        )));
    }
    Ok(n as usize)
}

fn flux_rhs(u: &[f64], dx: f64, order: SpatialOrder, out: &mut [f64]) {
    let n = u.len();
    let f = |k: usize| 0.5 * u[k % n] * u[k % n];
    match order {
        SpatialOrder::Second => {
            let scale = 1.0 / (2.0 * dx);
            for i in 0..n {
                out[i] = -(f(i + 1) - f(i + 3 * n - 1)) * scale;
            }
        }
        SpatialOrder::Fourth => {
            let scale = 1.0 / (12.0 * dx);
            for i in 0..n {
                out[i] = -(-f(i + 2) + 8.0 * f(i + 1) - 8.0 * f(i + 3 * n - 1) + f(i + 3 * n - 2)) * scale;
            }
        }
        SpatialOrder::Sixth => {
            let scale = 1.0 / (60.0 * dx);
            for i in 0..n {
                out[i] = -(f(i + 3) - 9.0 * f(i + 2) + 45.0 * f(i + 1) - 45.0 * f(i + 3 * n - 1)
                    + 9.0 * f(i + 3 * n - 2)
                    - f(i + 3 * n - 3))
                    * scale;
            }
        }
    }
}

struct Rk4Scratch {
    k: [Vec<f64>; 4],
    stage: Vec<f64>,
    order: SpatialOrder,
}

impl Rk4Scratch {
    fn new(n: usize, order: SpatialOrder) -> Self {
        Rk4Scratch {
            k: std::array::from_fn(|_| vec![0.0; n]),
            stage: vec![0.0; n],
            order,
        }
    }

    fn step(&mut self, u: &mut [f64], dx: f64, dt: f64) {
        let n = u.len();
        flux_rhs(u, dx, self.order, &mut self.k[0]);
        for (s, stage_factor) in [(1, 0.5), (2, 0.5), (3, 1.0)] {
            for i in 0..n {
                self.stage[i] = u[i] + stage_factor * dt * self.k[s - 1][i];
            }
            flux_rhs(&self.stage, dx, self.order, &mut self.k[s]);
        }
        for i in 0..n {
            u[i] += dt / 6.0 * (self.k[0][i] + 2.0 * self.k[1][i] + 2.0 * self.k[2][i] + self.k[3][i]);
        }
    }
}

fn guard(u: &[f64], dx: f64, dt: f64, time: f64) -> Result<()> {
    let mut max = 0.0f64;
    for &v in u {
        if !v.is_finite() {
            return Err(Error::IntegrationHalted {
                last_valid_time: time,
                reason: "non-finite state in finite-difference solve".into(),
            });
        }
        max = max.max(v.abs());
    }
    let courant = dt * max / dx;
    if courant >= 1.0 {
        return Err(Error::Cfl { courant });
    }
    Ok(())
}

/// Solves `u_t + (u²/2)_x = 0` with periodic boundaries from `u0`, storing
/// the field every `output_dt`. The stored x grid includes both endpoints;
/// the last node repeats the first.
pub fn solve_periodic_burgers(
    u0: impl Fn(f64) -> f64,
    space: Interval,
    t_end: f64,
    dx: f64,
    dt: f64,
    output_dt: f64,
    scheme: FdScheme,
) -> Result<ReferenceField> {
    if !(dx > 0.0 && dt > 0.0 && output_dt > 0.0) {
        return Err(Error::Domain("dx, dt and output_dt must be positive".into()));
    }
    let cells = steps_for(space.len(), dx, "domain length")?;
    let per_output = steps_for(output_dt, dt, "output interval")?;
    let outputs = steps_for(t_end, output_dt, "time horizon")?;

    let x_grid = linspace(space.lo, space.hi, cells + 1);
    let t_grid: Vec<f64> = (0..=outputs).map(|j| j as f64 * output_dt).collect();
    let mut u: Vec<f64> = x_grid[..cells].iter().map(|&x| u0(x)).collect();
    let mut values = ndarray::Array2::zeros((cells + 1, outputs + 1));
    let store = |values: &mut ndarray::Array2<f64>, u: &[f64], j: usize| {
        for i in 0..cells {
            values[[i, j]] = u[i];
        }
        values[[cells, j]] = u[0];
    };
    store(&mut values, &u, 0);
    guard(&u, dx, dt, 0.0)?;

    let mut rk = Rk4Scratch::new(cells, scheme.order);
    let mut previous: Option<Vec<f64>> = None;
    let mut rhs = vec![0.0; cells];
    let mut step = 0usize;
    for j in 1..=outputs {
        for _ in 0..per_output {
            match scheme.time {
                TimeScheme::Rk4 => rk.step(&mut u, dx, dt),
                TimeScheme::Leapfrog => match previous.as_mut() {
                    None => {
                        previous = Some(u.clone());
                        rk.step(&mut u, dx, dt);
                    }
                    Some(prev) => {
                        flux_rhs(&u, dx, scheme.order, &mut rhs);
                        for i in 0..cells {
                            let next = prev[i] + 2.0 * dt * rhs[i];
                            prev[i] = u[i];
                            u[i] = next;
                        }
                    }
                },
            }
            step += 1;
            guard(&u, dx, dt, step as f64 * dt)?;
        }
        store(&mut values, &u, j);
    }

    let field = SolutionField::new(x_grid, t_grid, values, dt)?;
    Ok(ReferenceField { field, dx, dt, scheme })
}

/// Example 2 reference on `[-1, 1] × [0, 1]`, stored every 0.01.
pub fn burgers_fd_reference(dx: f64, dt: f64) -> Result<ReferenceField> {
    let problem = super::example2_burgers();
    solve_periodic_burgers(
        |x| problem.initial(x),
        problem.space(),
        problem.t_end(),
        dx,
        dt,
        0.01,
        FdScheme::default(),
    )
}
