//! Input fields named on the command line.

use std::path::Path;

use kp2_core::{Field2D, Grid2D};

use crate::error::CliError;
use crate::io::read_field;

/// amp * d/dx exp(-(x^2 + y^2) / width^2).
pub fn gauss_dx(grid: Grid2D, amp: f64, width: f64) -> Field2D {
    let w2 = width * width;
    Field2D::from_fn(grid, |x, y| amp * (-2.0 * x / w2) * (-(x * x + y * y) / w2).exp())
}

/// `zero`, `gauss:amp,width`, or a path to a KPF1 file (whose own grid wins).
pub fn load_field(spec: &str, grid: Grid2D) -> Result<Field2D, CliError> {
    if spec == "zero" {
        return Ok(Field2D::zeros(grid));
    }
    if let Some(args) = spec.strip_prefix("gauss:") {
        let parts: Vec<f64> = args
            .split(',')
            .map(|t| t.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| CliError::input(format!("bad gauss spec {spec}")))?;
        if parts.len() != 2 || !(parts[1] > 0.0) || !parts[0].is_finite() {
            return Err(CliError::input("gauss spec is gauss:amp,width with width > 0"));
        }
        return Ok(gauss_dx(grid, parts[0], parts[1]));
    }
    read_field(Path::new(spec))
}
