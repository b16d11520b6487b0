//! Space-time domain, its decomposition into spatial slabs, and collocation
//! point sampling.

use std::fmt::Write as _;
use std::path::Path;

use rand::distributions::{Distribution, Open01};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::write_atomic;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Interval { lo, hi }
    }

    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

/// The spatial interval split at `cuts` into slabs `Ω_1 … Ω_N`, each
/// extended over `[0, T]`. Interface `k` is the line `x = cuts[k]` shared
/// by subdomains `k` and `k + 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    space: Interval,
    t_end: f64,
    cuts: Vec<f64>,
}

impl Decomposition {
    pub fn new(space: Interval, t_end: f64, cuts: &[f64]) -> Result<Self> {
        if !(space.lo.is_finite() && space.hi.is_finite() && space.lo < space.hi) {
            return Err(Error::Domain(format!(
                "space interval [{}, {}] is empty or non-finite",
                space.lo, space.hi
            )));
        }
        if !(t_end.is_finite() && t_end > 0.0) {
            return Err(Error::Domain(format!("time horizon {t_end} must be positive")));
        }
        let mut prev = space.lo;
        for (i, &c) in cuts.iter().enumerate() {
            if !(c > prev && c < space.hi) {
                return Err(Error::Domain(format!(
                    "cut {i} at {c} is not strictly inside ({prev}, {}) ",
                    space.hi
                )));
            }
            prev = c;
        }
        Ok(Decomposition {
            space,
            t_end,
            cuts: cuts.to_vec(),
        })
    }

    pub fn space(&self) -> Interval {
        self.space
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn cuts(&self) -> &[f64] {
        &self.cuts
    }

    pub fn subdomain_count(&self) -> usize {
        self.cuts.len() + 1
    }

    pub fn interface_count(&self) -> usize {
        self.cuts.len()
    }

    pub fn subdomains(&self) -> Vec<Interval> {
        let mut edges = Vec::with_capacity(self.cuts.len() + 2);
        edges.push(self.space.lo);
        edges.extend_from_slice(&self.cuts);
        edges.push(self.space.hi);
        edges.windows(2).map(|w| Interval::new(w[0], w[1])).collect()
    }

    /// `(left subdomain, right subdomain, x)` of each interface.
    pub fn interfaces(&self) -> Vec<(usize, usize, f64)> {
        self.cuts.iter().enumerate().map(|(k, &c)| (k, k + 1, c)).collect()
    }

    /// Subdomain owning `x`: half-open slabs `[lo, hi)`, the last one closed.
    pub fn owner(&self, x: f64) -> Result<usize> {
        if !self.space.contains(x) {
            return Err(Error::OutsideDomain { x, t: f64::NAN });
        }
        Ok(self.cuts.partition_point(|&c| c <= x))
    }

    /// Interface index if `x` lies exactly on a cut.
    pub fn interface_at(&self, x: f64) -> Option<usize> {
        self.cuts.iter().position(|&c| c == x)
    }

    pub fn contains(&self, x: f64, t: f64) -> bool {
        self.space.contains(x) && (0.0..=self.t_end).contains(&t)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampling {
    #[default]
    Uniform,
    LatinHypercube,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointCounts {
    pub residual_per_subdomain: usize,
    /// Points on each interface.
    pub interface: usize,
    pub boundary: usize,
    pub initial: usize,
}

impl PointCounts {
    pub fn validate(&self) -> Result<()> {
        for (name, n) in [
            ("residual_per_subdomain", self.residual_per_subdomain),
            ("interface", self.interface),
            ("boundary", self.boundary),
            ("initial", self.initial),
        ] {
            if n == 0 {
                return Err(Error::config(format!("points.{name}"), "must be at least 1"));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Residual,
    Interface,
    Boundary,
    Initial,
}

impl Role {
    fn stream(self) -> u64 {
        match self {
            Role::Residual => 1,
            Role::Interface => 2,
            Role::Boundary => 3,
            Role::Initial => 4,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Role::Residual => "residual",
            Role::Interface => "interface",
            Role::Boundary => "boundary",
            Role::Initial => "initial",
        }
    }
}

pub type Point = (f64, f64);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointSets {
    pub residual: Vec<Vec<Point>>,
    pub interface: Vec<Vec<Point>>,
    pub boundary: Vec<Point>,
    pub initial: Vec<Point>,
    pub seed: u64,
}

fn rng_for(seed: u64, role: Role, index: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(role.stream() << 32 | index);
    rng
}

/// `n` samples in the open unit interval, i.i.d. or stratified.
fn unit_samples(rng: &mut ChaCha20Rng, n: usize, sampling: Sampling) -> Vec<f64> {
    match sampling {
        Sampling::Uniform => (0..n).map(|_| Open01.sample(rng)).collect(),
        Sampling::LatinHypercube => {
            let mut strata: Vec<usize> = (0..n).collect();
            strata.shuffle(rng);
            strata
                .into_iter()
                .map(|k| {
                    let u: f64 = Open01.sample(rng);
                    (k as f64 + u) / n as f64
                })
                .collect()
        }
    }
}

pub fn sample_points(dec: &Decomposition, counts: &PointCounts, seed: u64, sampling: Sampling) -> Result<PointSets> {
    counts.validate()?;
    let t_end = dec.t_end();

    let residual = dec
        .subdomains()
        .iter()
        .enumerate()
        .map(|(i, sub)| {
            let mut rng = rng_for(seed, Role::Residual, i as u64);
            let xs = unit_samples(&mut rng, counts.residual_per_subdomain, sampling);
            let ts = unit_samples(&mut rng, counts.residual_per_subdomain, sampling);
            xs.iter()
                .zip(&ts)
                .map(|(u, v)| (sub.lo + sub.len() * u, t_end * v))
                .filter(|&(x, _)| x > sub.lo && x < sub.hi)
                .collect::<Vec<_>>()
        })
        .collect::<Vec<_>>();
    // Rounding can in principle land a scaled sample on a slab edge.
    for (i, set) in residual.iter().enumerate() {
        if set.len() != counts.residual_per_subdomain {
            return Err(Error::Domain(format!(
                "subdomain {i} is too narrow to hold interior samples"
            )));
        }
    }

    let interface = dec
        .interfaces()
        .iter()
        .map(|&(k, _, x)| {
            let mut rng = rng_for(seed, Role::Interface, k as u64);
            unit_samples(&mut rng, counts.interface, sampling)
                .into_iter()
                .map(|v| (x, t_end * v))
                .collect()
        })
        .collect();

    let space = dec.space();
    let mut rng = rng_for(seed, Role::Boundary, 0);
    let ts = unit_samples(&mut rng, counts.boundary, sampling);
    let n_lo = counts.boundary.div_ceil(2);
    let boundary = ts
        .into_iter()
        .enumerate()
        .map(|(i, v)| (if i < n_lo { space.lo } else { space.hi }, t_end * v))
        .collect();

    let mut rng = rng_for(seed, Role::Initial, 0);
    let initial = unit_samples(&mut rng, counts.initial, sampling)
        .into_iter()
        .map(|u| (space.lo + space.len() * u, 0.0))
        .collect();

    Ok(PointSets {
        residual,
        interface,
        boundary,
        initial,
        seed,
    })
}

impl PointSets {
    pub fn total(&self) -> usize {
        self.residual.iter().map(Vec::len).sum::<usize>()
            + self.interface.iter().map(Vec::len).sum::<usize>()
            + self.boundary.len()
            + self.initial.len()
    }

    /// Delimited text: `role,id,x,t`. The id is the owning subdomain, or the
    /// interface index for interface points.
    pub fn to_csv(&self, dec: &Decomposition) -> Result<String> {
        let mut out = String::from("role,id,x,t\n");
        let mut row = |role: Role, id: usize, (x, t): Point| {
            let _ = writeln!(out, "{},{id},{x},{t}", role.as_str());
        };
        for (i, set) in self.residual.iter().enumerate() {
            set.iter().for_each(|&p| row(Role::Residual, i, p));
        }
        for (k, set) in self.interface.iter().enumerate() {
            set.iter().for_each(|&p| row(Role::Interface, k, p));
        }
        for &p in &self.boundary {
            row(Role::Boundary, dec.owner(p.0)?, p);
        }
        for &p in &self.initial {
            row(Role::Initial, dec.owner(p.0)?, p);
        }
        Ok(out)
    }

    pub fn write_csv(&self, dec: &Decomposition, path: &Path) -> Result<()> {
        write_atomic(path, self.to_csv(dec)?.as_bytes())
    }

    /// Order-sensitive fingerprint of every coordinate.
    pub fn fingerprint(&self) -> String {
        let mut bytes = Vec::with_capacity(self.total() * 16);
        let all = self
            .residual
            .iter()
            .chain(&self.interface)
            .flatten()
            .chain(&self.boundary)
            .chain(&self.initial);
        for &(x, t) in all {
            bytes.extend_from_slice(&x.to_le_bytes());
            bytes.extend_from_slice(&t.to_le_bytes());
        }
        crate::io::sha256_hex(&bytes)
    }
}
