//! Plot-ready text exports.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::SolutionField;
use crate::io::write_atomic;

fn column(field: &SolutionField, t: f64) -> Result<Vec<f64>> {
    match field.time_index(t) {
        Some(j) => Ok(field.values.column(j).to_vec()),
        None => field.x_grid.iter().map(|&x| field.interpolate(x, t)).collect(),
    }
}

/// Slices `series,t,x,value` with one `approx` series per requested time
/// and, when given, a matching `reference` series. Times off the stored
/// grid are interpolated.
pub fn slices_csv(field: &SolutionField, reference: Option<&SolutionField>, times: &[f64]) -> Result<String> {
    let (lo, hi) = match (field.t_grid.first(), field.t_grid.last()) {
        (Some(&lo), Some(&hi)) => (lo, hi),
        _ => return Err(Error::GridMismatch("field has no times".into())),
    };
    if let Some(t) = times.iter().find(|t| !(lo..=hi).contains(*t)) {
        return Err(Error::Domain(format!("slice time {t} is outside [{lo}, {hi}]")));
    }
    let mut out = String::from("series,t,x,value\n");
    let mut emit = |name: &str, f: &SolutionField| -> Result<()> {
        for &t in times {
            for (x, v) in f.x_grid.iter().zip(column(f, t)?) {
                let _ = writeln!(out, "{name},{t},{x},{v}");
            }
        }
        Ok(())
    };
    emit("approx", field)?;
    if let Some(r) = reference {
        emit("reference", r)?;
    }
    Ok(out)
}

pub fn export_slices(
    field: &SolutionField,
    reference: Option<&SolutionField>,
    times: &[f64],
    path: &Path,
) -> Result<()> {
    write_atomic(path, slices_csv(field, reference, times)?.as_bytes())
}

/// Pointwise `x,t,abs_error` over two fields on the same grid.
pub fn error_surface_csv(approx: &SolutionField, reference: &SolutionField) -> Result<String> {
    if !approx.same_grid(reference) {
        return Err(Error::GridMismatch("error surface needs identical grids".into()));
    }
    let mut out = String::from("x,t,abs_error\n");
    for (i, &x) in approx.x_grid.iter().enumerate() {
        for (j, &t) in approx.t_grid.iter().enumerate() {
            let e = (approx.values[[i, j]] - reference.values[[i, j]]).abs();
            let _ = writeln!(out, "{x},{t},{e}");
        }
    }
    Ok(out)
}

pub fn write_error_surface(approx: &SolutionField, reference: &SolutionField, path: &Path) -> Result<()> {
    write_atomic(path, error_surface_csv(approx, reference)?.as_bytes())
}
