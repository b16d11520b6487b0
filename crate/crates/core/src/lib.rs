//! Decoupled domain-decomposed physics-informed networks.
//!
//! Training fits one network per spatial subdomain to a time-dependent PDE
//! `u_t + N[u] = 0`. The spatial operator is then frozen at the trained
//! approximation, `g(x, t) = -N[û](x, t)`, and the resulting ODE
//! `du/dt = g` is integrated with classical RK4 from the initial data.

pub mod autodiff;
pub mod config;
pub mod error;
pub mod evolution;
pub mod geometry;
pub mod grid;
pub mod harness;
pub mod io;
pub mod losses;
pub mod network;
pub mod problems;
pub mod trainer;

pub use error::{Error, Result};
