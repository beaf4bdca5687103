//! Uniform grids, sampled fields, shift curves, antiderivatives and norms.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use num_traits::Float;

use crate::error::{Error, Result};
use crate::spectral::{RowSpectral, Spectral2};

/// Relative edge tolerance for "decays at the x-edges".
pub const EDGE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid2D {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
    pub x0: f64,
    pub y0: f64,
}

impl Grid2D {
    pub fn new(nx: usize, ny: usize, lx: f64, ly: f64, x0: f64, y0: f64) -> Result<Self> {
        if !nx.is_power_of_two() || nx < 16 {
            return Err(Error::InvalidGrid(format!("nx not power of two >= 16 (got {nx})")));
        }
        if !ny.is_power_of_two() || ny < 16 {
            return Err(Error::InvalidGrid(format!("ny not power of two >= 16 (got {ny})")));
        }
        if !(lx > 0.0 && lx.is_finite()) || !(ly > 0.0 && ly.is_finite()) {
            return Err(Error::InvalidGrid(String::from("window lengths must be positive")));
        }
        if !x0.is_finite() || !y0.is_finite() {
            return Err(Error::InvalidGrid(String::from("window corner must be finite")));
        }
        Ok(Grid2D { nx, ny, lx, ly, x0, y0 })
    }

    /// Square window centred on the origin.
    pub fn centered(n: usize, l: f64) -> Result<Self> {
        Grid2D::new(n, n, l, l, -l / 2.0, -l / 2.0)
    }

    pub fn dx(&self) -> f64 {
        self.lx / self.nx as f64
    }

    pub fn dy(&self) -> f64 {
        self.ly / self.ny as f64
    }

    pub fn x(&self, j: usize) -> f64 {
        self.x0 + j as f64 * self.dx()
    }

    pub fn y(&self, i: usize) -> f64 {
        self.y0 + i as f64 * self.dy()
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.nx).map(|j| self.x(j)).collect()
    }

    pub fn ys(&self) -> Vec<f64> {
        (0..self.ny).map(|i| self.y(i)).collect()
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell(&self) -> f64 {
        self.dx() * self.dy()
    }

    /// Row index whose y coordinate equals `y` (to 1e-9 dy).
    pub fn row_of(&self, y: f64) -> Option<usize> {
        let r = (y - self.y0) / self.dy();
        let i = r.round();
        if (r - i).abs() < 1e-9 && i >= 0.0 && (i as usize) < self.ny {
            Some(i as usize)
        } else {
            None
        }
    }

    pub fn col_of(&self, x: f64) -> Option<usize> {
        let r = (x - self.x0) / self.dx();
        let j = r.round();
        if (r - j).abs() < 1e-9 && j >= 0.0 && (j as usize) < self.nx {
            Some(j as usize)
        } else {
            None
        }
    }

    pub fn rows(&self) -> RowSpectral {
        RowSpectral::new(self.nx, self.lx)
    }

    pub fn spectral2(&self) -> Spectral2 {
        Spectral2::new(self.nx, self.ny, self.lx, self.ly)
    }
}

/// The non-decaying background carried by a field.
#[derive(Debug, Clone, PartialEq)]
pub enum Meta {
    None,
    /// lambda * tanh(lambda (x - s(y))); `shift` is per row, absent means 0.
    Kink { lambda: f64, shift: Option<Vec<f64>> },
    Constant(f64),
    /// Piecewise constant at the edges with no closed-form background.
    Multikink,
}

impl fmt::Display for Meta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Meta::None => write!(f, "none"),
            Meta::Kink { lambda, shift: None } => write!(f, "kink({lambda})"),
            Meta::Kink { lambda, shift: Some(_) } => write!(f, "kink({lambda}, curve)"),
            Meta::Constant(c) => write!(f, "constant({c})"),
            Meta::Multikink => write!(f, "multikink"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Field2D {
    pub grid: Grid2D,
    pub values: Vec<f64>,
    pub meta: Meta,
}

impl Field2D {
    pub fn new(grid: Grid2D, values: Vec<f64>, meta: Meta) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidParameter(format!(
                "field has {} samples, grid needs {}",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(String::from("field has non-finite samples")));
        }
        Ok(Field2D { grid, values, meta })
    }

    pub fn zeros(grid: Grid2D) -> Self {
        Field2D { grid, values: vec![0.0; grid.len()], meta: Meta::None }
    }

    pub fn from_fn<F: Fn(f64, f64) -> f64>(grid: Grid2D, f: F) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for i in 0..grid.ny {
            let y = grid.y(i);
            for j in 0..grid.nx {
                values.push(f(grid.x(j), y));
            }
        }
        Field2D { grid, values, meta: Meta::None }
    }

    pub fn with_meta(mut self, meta: Meta) -> Self {
        self.meta = meta;
        self
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.grid.nx..(i + 1) * self.grid.nx]
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.grid.nx + j]
    }

    pub fn linf(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field2D {
        Field2D { grid: self.grid, values: self.values.iter().map(|&v| f(v)).collect(), meta: Meta::None }
    }

    pub fn zip(&self, other: &Field2D, f: impl Fn(f64, f64) -> f64) -> Result<Field2D> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Ok(Field2D { grid: self.grid, values, meta: Meta::None })
    }

    /// Background value at column `j` of row `i`.
    pub fn background(&self, i: usize, j: usize) -> f64 {
        match &self.meta {
            Meta::None => 0.0,
            Meta::Constant(c) => *c,
            Meta::Kink { lambda, shift } => {
                let s = shift.as_ref().map_or(0.0, |s| s[i]);
                lambda * (lambda * (self.grid.x(j) - s)).tanh()
            }
            Meta::Multikink => {
                let r = self.row(i);
                let (l, rr) = (r[0], r[self.grid.nx - 1]);
                0.5 * (l + rr) + 0.5 * (rr - l) * self.grid.x(j).tanh()
            }
        }
    }

    /// x-derivative of the background at column `j` of row `i`.
    pub fn background_dx(&self, i: usize, j: usize) -> f64 {
        match &self.meta {
            Meta::None | Meta::Constant(_) => 0.0,
            Meta::Kink { lambda, shift } => {
                let s = shift.as_ref().map_or(0.0, |s| s[i]);
                lambda * lambda * sech2(lambda * (self.grid.x(j) - s))
            }
            Meta::Multikink => {
                let r = self.row(i);
                0.5 * (r[self.grid.nx - 1] - r[0]) * sech2(self.grid.x(j))
            }
        }
    }

    /// Spectral x-derivative of the residual plus the analytic background slope.
    pub fn dx(&self) -> Result<Vec<f64>> {
        let res = self.residual();
        check_decay(&res, self.grid.nx, "field residual")?;
        let mut d = self.grid.rows().dx(&res);
        let nx = self.grid.nx;
        if self.meta != Meta::None {
            for i in 0..self.grid.ny {
                for j in 0..nx {
                    d[i * nx + j] += self.background_dx(i, j);
                }
            }
        }
        Ok(d)
    }

    /// Values minus the background.
    pub fn residual(&self) -> Vec<f64> {
        if self.meta == Meta::None {
            return self.values.clone();
        }
        let nx = self.grid.nx;
        let mut out = self.values.clone();
        for i in 0..self.grid.ny {
            for j in 0..nx {
                out[i * nx + j] -= self.background(i, j);
            }
        }
        out
    }

    /// Largest |residual| over the two outermost columns on each side.
    pub fn edge_value(&self) -> f64 {
        edge_max(&self.residual(), self.grid.nx)
    }

    /// Checks the decay precondition of spectral routines.
    pub fn check_decay(&self, what: &'static str) -> Result<()> {
        check_decay(&self.residual(), self.grid.nx, what)
    }
}

pub fn edge_max(values: &[f64], nx: usize) -> f64 {
    let mut m: f64 = 0.0;
    for row in values.chunks(nx) {
        for &j in &[0, 1, nx - 2, nx - 1] {
            m = m.max(row[j].abs());
        }
    }
    m
}

pub(crate) fn check_decay(values: &[f64], nx: usize, what: &'static str) -> Result<()> {
    check_decay_rel(values, nx, what, EDGE_TOL)
}

/// Edge check with a caller-chosen tolerance relative to the sup norm.
pub fn check_decay_rel(values: &[f64], nx: usize, what: &'static str, rel: f64) -> Result<()> {
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let edge = edge_max(values, nx);
    let tol = rel * scale + 1e-13;
    if edge > tol {
        return Err(Error::EdgeDecay { what, edge, tol });
    }
    Ok(())
}

/// A real function of y sampled on the rows of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftCurve {
    pub grid: Grid2D,
    pub values: Vec<f64>,
}

impl ShiftCurve {
    pub fn new(grid: Grid2D, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.ny || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(String::from("shift curve must have ny finite samples")));
        }
        Ok(ShiftCurve { grid, values })
    }

    pub fn constant(grid: Grid2D, c: f64) -> Self {
        ShiftCurve { grid, values: vec![c; grid.ny] }
    }

    /// Discrete l2 norm of the forward-difference derivative.
    pub fn derivative_l2(&self) -> f64 {
        let dy = self.grid.dy();
        let s: f64 = self.values.windows(2).map(|w| (w[1] - w[0]).powi(2) / dy).sum();
        s.sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormReport {
    pub l2: f64,
    pub l3: f64,
    pub linf: f64,
    pub h_minus_half_zero: f64,
    pub weighted_sech2_l2: f64,
}

pub fn make_grid(nx: usize, ny: usize, lx: f64, ly: f64, x0: f64, y0: f64) -> Result<Grid2D> {
    Grid2D::new(nx, ny, lx, ly, x0, y0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AntiderivativeMode {
    MeanFreeSpectral,
    CumulativeFromLeft,
}

/// x-antiderivative of a decaying field.
///
/// The cumulative mode is the spectral mean-free antiderivative plus the
/// linear ramp carried by the row mean, pinned to zero at the left edge.
pub fn x_antiderivative(f: &Field2D, mode: AntiderivativeMode) -> Result<Field2D> {
    let g = f.grid;
    let rs = g.rows();
    match mode {
        AntiderivativeMode::MeanFreeSpectral => {
            let values = rs.antiderivative(&f.values);
            Field2D::new(g, values, Meta::None)
        }
        AntiderivativeMode::CumulativeFromLeft => {
            f.check_decay("x_antiderivative input")?;
            Field2D::new(g, cumulative_from_left(&rs, &f.values, g), Meta::None)
        }
    }
}

pub(crate) fn cumulative_from_left(rs: &RowSpectral, values: &[f64], g: Grid2D) -> Vec<f64> {
    let nx = g.nx;
    let mut a = rs.antiderivative(values);
    for (i, row) in a.chunks_mut(nx).enumerate() {
        let src = &values[i * nx..(i + 1) * nx];
        let mean = src.iter().sum::<f64>() / nx as f64;
        let base = row[0];
        for (j, v) in row.iter_mut().enumerate() {
            *v += mean * (j as f64 * g.dx()) - base;
        }
    }
    a
}

/// Norms of a field and its plain integral.
pub fn integrate_and_norms(f: &Field2D) -> (NormReport, f64) {
    let g = f.grid;
    let cell = g.cell();
    let mut s1 = 0.0;
    let mut s2 = 0.0;
    let mut s3 = 0.0;
    let mut sw = 0.0;
    let mut linf: f64 = 0.0;
    for i in 0..g.ny {
        for j in 0..g.nx {
            let v = f.at(i, j);
            s1 += v;
            s2 += v * v;
            s3 += v.abs().powi(3);
            sw += sech2(g.x(j)) * v * v;
            linf = linf.max(v.abs());
        }
    }
    let report = NormReport {
        l2: (s2 * cell).sqrt(),
        l3: (s3 * cell).cbrt(),
        linf,
        h_minus_half_zero: h_minus_half_zero(f),
        weighted_sech2_l2: (sw * cell).sqrt(),
    };
    (report, s1 * cell)
}

/// Discrete norm with Fourier weight |2 pi xi|^{-1}, xi = 0 excluded.
pub fn h_minus_half_zero(f: &Field2D) -> f64 {
    let g = f.grid;
    let sp = g.spectral2();
    let hat = sp.forward_real(&f.values);
    let cell = g.cell();
    let mut s = 0.0;
    for l in 0..g.ny {
        for k in 1..g.nx {
            let w = sp.rows.wavenumber(k).abs();
            s += (hat[l * g.nx + k] * cell).norm_sqr() / w;
        }
    }
    (s / (g.lx * g.ly)).sqrt()
}

/// l2 computed from the discrete Fourier transform (Parseval).
pub fn l2_spectral(f: &Field2D) -> f64 {
    let g = f.grid;
    let hat = g.spectral2().forward_real(&f.values);
    let cell = g.cell();
    let s: f64 = hat.iter().map(|z| (z * cell).norm_sqr()).sum();
    (s / (g.lx * g.ly)).sqrt()
}

pub fn l2(values: &[f64], cell: f64) -> f64 {
    (values.iter().map(|v| v * v).sum::<f64>() * cell).sqrt()
}

/// l2 over the interior, leaving out `1/8` of the window on every side.
pub fn interior_l2(values: &[f64], g: &Grid2D) -> f64 {
    let (i0, i1) = (g.ny / 8, g.ny - g.ny / 8);
    let (j0, j1) = (g.nx / 8, g.nx - g.nx / 8);
    let mut s = 0.0;
    for i in i0..i1 {
        for j in j0..j1 {
            let v = values[i * g.nx + j];
            s += v * v;
        }
    }
    (s * g.cell()).sqrt()
}

pub fn sech2(x: f64) -> f64 {
    let c = x.abs();
    if c > 350.0 {
        return 0.0;
    }
    let e = (-2.0 * c).exp();
    4.0 * e / ((1.0 + e) * (1.0 + e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    #[test]
    fn grid_examples() {
        let g = make_grid(64, 64, 40.0, 40.0, -20.0, -20.0).unwrap();
        assert_eq!(g.dx(), 0.625);
        let g = make_grid(16, 16, 16.0, 16.0, -8.0, -8.0).unwrap();
        assert_eq!((g.dx(), g.dy()), (1.0, 1.0));
        let e = make_grid(17, 16, 16.0, 16.0, -8.0, -8.0).unwrap_err();
        assert!(format!("{e}").contains("nx not power of two"));
        assert!(make_grid(16, 16, 0.0, 16.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn antiderivative_of_cosine() {
        let g = make_grid(64, 16, 10.0, 4.0, 0.0, 0.0).unwrap();
        let f = Field2D::from_fn(g, |x, _| (2.0 * PI * x / 10.0).cos());
        let a = x_antiderivative(&f, AntiderivativeMode::MeanFreeSpectral).unwrap();
        for i in 0..g.ny {
            for j in 0..g.nx {
                let e = 10.0 / (2.0 * PI) * (2.0 * PI * g.x(j) / 10.0).sin();
                assert!((a.at(i, j) - e).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn antiderivative_of_gaussian_derivative() {
        let g = make_grid(512, 16, 40.0, 16.0, -20.0, -8.0).unwrap();
        let f = Field2D::from_fn(g, |x, _| -2.0 * x * (-x * x).exp());
        let a = x_antiderivative(&f, AntiderivativeMode::MeanFreeSpectral).unwrap();
        let mean = PI.sqrt() / 40.0;
        for i in 0..g.ny {
            for j in 0..g.nx {
                let x = g.x(j);
                assert!((a.at(i, j) - ((-x * x).exp() - mean)).abs() < 1e-10);
            }
        }
        let c = x_antiderivative(&f, AntiderivativeMode::CumulativeFromLeft).unwrap();
        for j in 0..g.nx {
            let x = g.x(j);
            assert!((c.at(3, j) - (-x * x).exp()).abs() < 1e-10);
        }
        let z = Field2D::zeros(g);
        for m in [AntiderivativeMode::MeanFreeSpectral, AntiderivativeMode::CumulativeFromLeft] {
            assert_eq!(x_antiderivative(&z, m).unwrap().linf(), 0.0);
        }
    }

    #[test]
    fn cumulative_rejects_non_decaying() {
        let g = make_grid(64, 16, 10.0, 4.0, 0.0, 0.0).unwrap();
        let f = Field2D::from_fn(g, |_, _| 1.0);
        assert!(matches!(
            x_antiderivative(&f, AntiderivativeMode::CumulativeFromLeft),
            Err(Error::EdgeDecay { .. })
        ));
    }

    #[test]
    fn integral_examples() {
        let g = make_grid(16, 16, 16.0, 16.0, -8.0, -8.0).unwrap();
        let (_, s) = integrate_and_norms(&Field2D::from_fn(g, |_, _| 1.0));
        assert!((s - 256.0).abs() < 1e-12);
        let g = make_grid(256, 16, 40.0, 8.0, -20.0, -4.0).unwrap();
        let (r, s) = integrate_and_norms(&Field2D::from_fn(g, |x, _| sech2(x)));
        assert!((s - 16.0).abs() < 1e-10);
        assert!(r.l2 <= (g.lx * g.ly).sqrt() * r.linf);
    }
}
