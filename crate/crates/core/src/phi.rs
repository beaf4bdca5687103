//! The functional Phi(h) = -1/2 int sech^2(x) h psi, where psi solves
//! psi_y - psi_xx + 2 tanh(x) psi_x = -h psi with psi -> 1 as y -> -inf.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex64;
use num_traits::Float;

use crate::error::{Error, Result};
use crate::grid::{sech2, Field2D, Meta};
use crate::quad::interp_rows;
use crate::spectral::RowEtd4;

#[derive(Debug, Clone, PartialEq)]
pub struct PhiOptions {
    /// Largest accepted |value - value_alt|.
    pub gap_tol: f64,
    /// Rejects h with max_x int |h| dy above this (psi would drop below
    /// roughly exp(-exposure)).
    pub exposure_guard: f64,
}

impl Default for PhiOptions {
    fn default() -> Self {
        PhiOptions { gap_tol: 1e-5, exposure_guard: 30.0 }
    }
}

#[derive(Debug, Clone)]
pub struct PhiResult {
    pub value: f64,
    pub value_alt: f64,
    pub consistency_gap: f64,
    pub psi: Field2D,
    pub psi_min: f64,
    /// max |psi - 1| on the first and last columns.
    pub edge_contamination: f64,
    /// consistency_gap within the configured tolerance.
    pub resolved: bool,
}

/// tanh(x) made periodic on the window: it returns smoothly to zero at the
/// point opposite x = 0.
pub fn periodic_tanh(x: f64, lx: f64) -> f64 {
    let xp = x - lx * ((x + 0.5 * lx) / lx).floor();
    xp.tanh() * (0.5 * lx - xp.abs()).tanh()
}

/// Marches chi = psi - 1 up from the bottom row (chi = 0) by ETDRK4:
/// diffusion exact per mode, transport and potential explicit, h
/// interpolated cubically between rows.
pub fn solve_psi(h: &Field2D) -> Result<Field2D> {
    solve_psi_with(h, &PhiOptions::default()).map(|(p, _)| p)
}

fn solve_psi_with(h: &Field2D, opts: &PhiOptions) -> Result<(Field2D, f64)> {
    let g = h.grid;
    let nx = g.nx;
    h.check_decay("potential h")?;
    let exposure = (0..nx)
        .map(|j| (0..g.ny).map(|i| h.at(i, j).abs()).sum::<f64>() * g.dy())
        .fold(0.0f64, f64::max);
    if exposure > opts.exposure_guard {
        return Err(Error::RegimeGuard(format!(
            "potential exposure {exposure:.3e} exceeds {}",
            opts.exposure_guard
        )));
    }
    let rs = g.rows();
    let kmax = core::f64::consts::PI / g.dx();
    let hmax = h.linf();
    let nsub = ((g.dy() * 2.0 * kmax / 2.0).ceil() as usize)
        .max((2.0 * hmax * g.dy()).ceil() as usize)
        .max(2);
    let etd = RowEtd4::new(&rs, g.dy() / nsub as f64, |k| {
        let w = rs.wavenumber(k);
        Complex64::new(-w * w, 0.0)
    });
    let tau: Vec<f64> = g.xs().iter().map(|&x| periodic_tanh(x, g.lx)).collect();
    let ik: Vec<Complex64> = (0..nx).map(|k| rs.ik(k)).collect();
    let rhs = |zh: &[Complex64], pos: f64| -> Vec<Complex64> {
        let mut d: Vec<Complex64> = zh.iter().zip(&ik).map(|(z, k)| z * k).collect();
        rs.fft().inverse(&mut d);
        let mut z = zh.to_vec();
        rs.fft().inverse(&mut z);
        let hr = interp_rows(&h.values, nx, pos);
        let q: Vec<f64> = (0..nx).map(|j| -2.0 * tau[j] * d[j].re - hr[j] * (1.0 + z[j].re)).collect();
        rs.forward(&q)
    };
    let mut psi = vec![1.0; g.len()];
    let mut zh = vec![Complex64::new(0.0, 0.0); nx];
    let mut edge = 0.0f64;
    for i in 0..g.ny - 1 {
        for s in 0..nsub {
            let pos = i as f64 + s as f64 / nsub as f64;
            etd.step(&mut zh, pos, 1.0 / nsub as f64, rhs);
        }
        let chi = rs.inverse_real(zh.clone());
        if chi.iter().any(|v| !v.is_finite()) {
            return Err(Error::Unstable { row: i + 1 });
        }
        edge = edge.max(chi[0].abs()).max(chi[nx - 1].abs());
        for j in 0..nx {
            psi[(i + 1) * nx + j] = 1.0 + chi[j];
        }
    }
    Ok((Field2D::new(g, psi, Meta::None)?, edge))
}

pub fn phi(h: &Field2D) -> Result<PhiResult> {
    phi_with(h, &PhiOptions::default())
}

pub fn phi_with(h: &Field2D, opts: &PhiOptions) -> Result<PhiResult> {
    let (psi, edge) = solve_psi_with(h, opts)?;
    let g = h.grid;
    let psi_min = psi.values.iter().cloned().fold(f64::INFINITY, f64::min);
    if psi_min <= 0.0 {
        return Err(Error::PsiNonPositive { min: psi_min });
    }
    let w: Vec<f64> = g.xs().iter().map(|&x| sech2(x)).collect();
    let mut s = 0.0;
    for i in 0..g.ny {
        for j in 0..g.nx {
            let k = i * g.nx + j;
            s += w[j] * h.values[k] * psi.values[k];
        }
    }
    let value = -0.5 * s * g.cell();
    let top = psi.row(g.ny - 1);
    let value_alt = 0.5 * w.iter().zip(top).map(|(a, b)| a * b).sum::<f64>() * g.dx() - 1.0;
    let gap = (value - value_alt).abs();
    Ok(PhiResult {
        value,
        value_alt,
        consistency_gap: gap,
        psi,
        psi_min,
        edge_contamination: edge,
        resolved: gap <= opts.gap_tol,
    })
}

/// Derivative at zero: -1/2 int sech^2(x) z.
pub fn phi_linear(z: &Field2D) -> f64 {
    let g = z.grid;
    let mut s = 0.0;
    for j in 0..g.nx {
        let w = sech2(g.x(j));
        for i in 0..g.ny {
            s += w * z.values[i * g.nx + j];
        }
    }
    -0.5 * s * g.cell()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_grid, Grid2D};
    use crate::heat::{apply_ktr, KtrSign};

    fn grid() -> Grid2D {
        make_grid(256, 256, 40.0, 40.0, -20.0, -20.0).unwrap()
    }

    fn bump(g: Grid2D, eps: f64) -> Field2D {
        Field2D::from_fn(g, |x, y| eps * sech2(x) * (-y * y).exp())
    }

    fn reflect_y(f: &Field2D) -> Field2D {
        let g = f.grid;
        let mut v = vec![0.0; g.len()];
        for i in 1..g.ny {
            v[i * g.nx..(i + 1) * g.nx].copy_from_slice(f.row(g.ny - i));
        }
        Field2D::new(g, v, Meta::None).unwrap()
    }

    #[test]
    fn zero_potential() {
        let r = phi(&Field2D::zeros(grid())).unwrap();
        assert_eq!(r.value, 0.0);
        assert!(r.value_alt.abs() < 1e-14 && r.consistency_gap < 1e-14);
        assert!(r.psi.values.iter().all(|p| (p - 1.0).abs() < 1e-14));
        assert_eq!(phi_linear(&Field2D::zeros(grid())), 0.0);
    }

    #[test]
    fn linear_values() {
        let g = grid();
        let exact = -(2.0 / 3.0) * core::f64::consts::PI.sqrt();
        assert!((phi_linear(&bump(g, 1.0)) - exact).abs() < 1e-10);
        let odd = Field2D::from_fn(g, |x, y| x * (-x * x - y * y).exp());
        assert!(phi_linear(&odd).abs() < 1e-14);
        let eps = 1e-4;
        let r = phi(&bump(g, eps)).unwrap();
        assert!((r.value / (eps * exact) - 1.0).abs() < 1e-3);
        assert!(r.consistency_gap < 1e-5 && r.resolved);
        let z = Field2D::from_fn(g, |x, y| (-(x - 0.3).powi(2) - (y + 0.4).powi(2) / 2.0).exp() * (1.0 + 0.3 * y));
        let p = phi(&z.map(|v| eps * v)).unwrap().value;
        let m = phi(&z.map(|v| -eps * v)).unwrap().value;
        let fd = (p - m) / (2.0 * eps);
        assert!((fd / phi_linear(&z) - 1.0).abs() < 1e-4);
    }

    #[test]
    fn reflection_and_gap() {
        let g = grid();
        let h = Field2D::from_fn(g, |x, y| 0.2 * (-(x - 0.5).powi(2) - (y - 0.3).powi(2)).exp() * (1.0 + 0.5 * y));
        let a = phi(&h).unwrap();
        let b = phi(&reflect_y(&h)).unwrap();
        assert!((a.value - b.value).abs() < 1e-8, "{} {}", a.value, b.value);
        assert!(a.consistency_gap < 1e-5, "{}", a.consistency_gap);
    }

    #[test]
    fn linearization_matches_kernel() {
        let g = make_grid(512, 256, 60.0, 40.0, -30.0, -16.0).unwrap();
        let f = bump(g, 1.0);
        let eps = 1e-3;
        let p = solve_psi(&f.map(|v| eps * v)).unwrap();
        let m = solve_psi(&f.map(|v| -eps * v)).unwrap();
        let lin: Vec<f64> = p.values.iter().zip(&m.values).map(|(a, b)| (a - b) / (2.0 * eps)).collect();
        let k = apply_ktr(KtrSign::Plus, &f).unwrap();
        // compare before the drifting fronts (speed 2) reach the x-edges
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..g.ny {
            if g.y(i) > 6.0 {
                break;
            }
            for j in 0..g.nx {
                let q = i * g.nx + j;
                num += (lin[q] + k.values[q]).powi(2);
                den += k.values[q].powi(2);
            }
        }
        let rel = (num / den).sqrt();
        assert!(rel < 1e-4, "{rel}");
    }

    #[test]
    fn guards_and_sign() {
        let g = grid();
        assert!(matches!(phi(&bump(g, 50.0)), Err(Error::RegimeGuard(_)) | Err(Error::PsiNonPositive { .. })));
        let neg = Field2D::from_fn(g, |x, y| -0.3 * (-(x * x) / 2.0 - y * y).exp());
        let r = phi(&neg).unwrap();
        assert!(r.psi.values.iter().all(|p| *p >= 1.0 - 1e-12));
    }
}
