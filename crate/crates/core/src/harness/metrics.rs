//! Relative error metrics over space-time grids.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::SolutionField;

/// Shape and extent of the grid errors were measured on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridDescriptor {
    pub nx: usize,
    pub nt: usize,
    pub x_range: (f64, f64),
    pub t_range: (f64, f64),
    pub step_size: f64,
}

impl GridDescriptor {
    pub fn of(field: &SolutionField) -> Self {
        let range = |g: &[f64]| (g.first().copied().unwrap_or(0.0), g.last().copied().unwrap_or(0.0));
        GridDescriptor {
            nx: field.nx(),
            nt: field.nt(),
            x_range: range(&field.x_grid),
            t_range: range(&field.t_grid),
            step_size: field.step_size,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub label: String,
    /// `Σ|u − v| / Σ|v|`.
    pub rel_l1: f64,
    /// `sqrt(Σ(u − v)²) / sqrt(Σv²)`.
    pub rel_l2: f64,
    /// Largest absolute pointwise error.
    pub linf: f64,
    /// Largest squared pointwise error, unnormalised.
    pub linf_squared: f64,
    pub n_points: usize,
    pub grid: GridDescriptor,
    /// Whether the reference was resampled onto the approximation's grid.
    pub interpolated: bool,
    /// Seconds spent producing the approximation.
    pub wall_time: f64,
}

fn grids_close(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len()
        && a.iter()
            .zip(b)
            .all(|(p, q)| (p - q).abs() <= 1e-12 * (1.0 + p.abs().max(q.abs())))
}

/// Compares `approx` against `reference` at every grid node.
///
/// Grids must agree unless `interpolate` is set, in which case the
/// reference is resampled onto the approximation's grid with cubic
/// interpolation.
pub fn relative_errors(
    approx: &SolutionField,
    reference: &SolutionField,
    interpolate: bool,
    label: &str,
) -> Result<ErrorReport> {
    let same = grids_close(&approx.x_grid, &reference.x_grid) && grids_close(&approx.t_grid, &reference.t_grid);
    let resampled;
    let reference = if same {
        reference
    } else if interpolate {
        resampled = reference.resample(&approx.x_grid, &approx.t_grid)?;
        &resampled
    } else {
        return Err(Error::GridMismatch(format!(
            "approximation is {} x {}, reference is {} x {}; enable interpolation to compare",
            approx.nx(),
            approx.nt(),
            reference.nx(),
            reference.nt()
        )));
    };
    let (mut diff_l1, mut ref_l1, mut diff_l2, mut ref_l2, mut linf) = (0.0, 0.0, 0.0, 0.0, 0.0f64);
    for (&u, &v) in approx.values.iter().zip(reference.values.iter()) {
        let d = (u - v).abs();
        diff_l1 += d;
        ref_l1 += v.abs();
        diff_l2 += d * d;
        ref_l2 += v * v;
        linf = linf.max(d);
    }
    if ref_l1 == 0.0 {
        return Err(Error::Domain("reference field is identically zero".into()));
    }
    if !(diff_l1.is_finite() && diff_l2.is_finite()) {
        return Err(Error::Domain("approximation contains non-finite values".into()));
    }
    Ok(ErrorReport {
        label: label.to_string(),
        rel_l1: diff_l1 / ref_l1,
        rel_l2: diff_l2.sqrt() / ref_l2.sqrt(),
        linf,
        linf_squared: linf * linf,
        n_points: approx.values.len(),
        grid: GridDescriptor::of(approx),
        interpolated: !same,
        wall_time: 0.0,
    })
}

/// Median of a non-empty sample.
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    fn field(values: &[f64]) -> SolutionField {
        let n = values.len();
        SolutionField::new(
            (0..n).map(|i| i as f64).collect(),
            vec![0.0],
            Array2::from_shape_vec((n, 1), values.to_vec()).unwrap(),
            0.1,
        )
        .unwrap()
    }

    #[test]
    fn hand_example() {
        let r = relative_errors(&field(&[1.1, 2.2]), &field(&[1.0, 2.0]), false, "t").unwrap();
        assert!((r.rel_l1 - 0.1).abs() < 1e-12);
        assert!((r.rel_l2 - 0.1).abs() < 1e-12);
        assert!((r.linf - 0.2).abs() < 1e-12);
        assert!((r.linf_squared - 0.04).abs() < 1e-12);
        assert_eq!(r.n_points, 2);
    }

    #[test]
    fn identical_fields_have_zero_error() {
        let f = field(&[0.5, -1.0, 3.0]);
        let r = relative_errors(&f, &f, false, "t").unwrap();
        assert_eq!((r.rel_l1, r.rel_l2, r.linf), (0.0, 0.0, 0.0));
    }

    #[test]
    fn scaling_leaves_relative_errors() {
        let a = relative_errors(&field(&[1.1, 2.2]), &field(&[1.0, 2.0]), false, "t").unwrap();
        let b = relative_errors(&field(&[11.0, 22.0]), &field(&[10.0, 20.0]), false, "t").unwrap();
        assert!((a.rel_l1 - b.rel_l1).abs() < 1e-12);
        assert!((a.rel_l2 - b.rel_l2).abs() < 1e-12);
        assert!((b.linf - 10.0 * a.linf).abs() < 1e-12);
    }

    #[test]
    fn mismatched_grids_need_interpolation() {
        let coarse = SolutionField::from_fn(vec![0.0, 0.5, 1.0], vec![0.0, 1.0], 0.1, |x, t| 1.0 + x + t);
        let fine = SolutionField::from_fn(vec![0.0, 0.25, 0.5, 0.75, 1.0], vec![0.0, 0.5, 1.0], 0.1, |x, t| {
            1.0 + x + t
        });
        assert!(matches!(
            relative_errors(&coarse, &fine, false, "t"),
            Err(Error::GridMismatch(_))
        ));
        let r = relative_errors(&coarse, &fine, true, "t").unwrap();
        assert!(r.interpolated);
        assert!(r.rel_l2 < 1e-12);
    }

    #[test]
    fn zero_reference_rejected() {
        assert!(relative_errors(&field(&[1.0]), &field(&[0.0]), false, "t").is_err());
    }

    #[test]
    fn medians() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
