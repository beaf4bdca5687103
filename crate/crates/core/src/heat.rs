//! Heat operators marching in y: Gamma^(c), its x-antiderivative and the
//! transport kernels built from them.
//!
//! Gamma^(c) inverts d_y + c d_x - d_x^2 with zero data below the bottom row,
//! so its kernel drifts right with speed c.

use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex64;
use num_traits::Float;

use crate::error::Result;
use crate::grid::{check_decay, sech2, Field2D, Grid2D, Meta};
use crate::profiles::{eta_minus, eta_plus};
use crate::quad::{cumulative_causal, factorial, lagrange_monomials, phi_functions};
use crate::spectral::RowSpectral;

fn symbol(rs: &RowSpectral, k: usize, c: f64) -> Complex64 {
    let w = rs.wavenumber(k);
    if rs.is_nyquist(k) {
        Complex64::new(-w * w, 0.0)
    } else {
        Complex64::new(-w * w, -c * w)
    }
}

/// One exponential step of d_y w = w_xx - c w_x + f, with the source linear
/// in y between its values at both ends of the step.
pub fn propagate_slice(w: &[f64], c: f64, dy: f64, f0: &[f64], f1: &[f64], lx: f64) -> Vec<f64> {
    let rs = RowSpectral::new(w.len(), lx);
    let wh = rs.forward(w);
    let a = rs.forward(f0);
    let b = rs.forward(f1);
    let out: Vec<Complex64> = (0..w.len())
        .map(|k| {
            let z = symbol(&rs, k, c) * dy;
            let p: [Complex64; 3] = phi_functions(z);
            p[0] * wh[k] + (p[1] * a[k] + p[2] * (b[k] - a[k])) * dy
        })
        .collect();
    rs.inverse_real(out)
}

/// Exponential integrator for the heat march. On each step the source is the
/// cubic through the rows k-2..k+1 (rows below the window count as zero), so
/// row k+1 never sees sources above it.
#[derive(Debug, Clone)]
pub(crate) struct Marcher {
    pub rs: RowSpectral,
    pub ny: usize,
    decay: Vec<Complex64>,
    weights: Vec<[Complex64; 4]>,
}

pub(crate) const CAUSAL_OFFSETS: [i64; 4] = [-2, -1, 0, 1];

impl Marcher {
    pub fn new(g: &Grid2D, c: f64) -> Self {
        let rs = g.rows();
        let dy = g.dy();
        let o = CAUSAL_OFFSETS;
        let a = lagrange_monomials(&[o[0] as f64, o[1] as f64, o[2] as f64, o[3] as f64]);
        let mut decay = Vec::with_capacity(g.nx);
        let mut weights = Vec::with_capacity(g.nx);
        for k in 0..g.nx {
            let z = symbol(&rs, k, c) * dy;
            let p: [Complex64; 5] = phi_functions(z);
            decay.push(p[0]);
            let mut w = [Complex64::new(0.0, 0.0); 4];
            for n in 0..4 {
                for j in 0..4 {
                    w[n] += p[j + 1] * (a[n][j] * factorial(j) * dy);
                }
            }
            weights.push(w);
        }
        Marcher { rs, ny: g.ny, decay, weights }
    }

    /// Marches from zero at the first row; `src` holds row spectra.
    pub fn march(&self, src: &[Complex64]) -> Vec<Complex64> {
        let nx = self.rs.nx;
        let ny = self.ny;
        let mut out = vec![Complex64::new(0.0, 0.0); nx * ny];
        for k in 0..ny - 1 {
            let (prev, next) = out.split_at_mut((k + 1) * nx);
            let prev = &prev[k * nx..];
            let next = &mut next[..nx];
            for m in 0..nx {
                next[m] = self.decay[m] * prev[m];
            }
            for (n, off) in CAUSAL_OFFSETS.iter().enumerate() {
                let r = k as i64 + off;
                if r < 0 {
                    continue;
                }
                let row = &src[r as usize * nx..(r as usize + 1) * nx];
                for m in 0..nx {
                    next[m] += self.weights[m][n] * row[m];
                }
            }
        }
        out
    }
}

/// Gamma^(c) applied to the source after a Fourier multiplier on x.
pub(crate) fn gamma_with_symbol<F>(c: f64, values: &[f64], g: &Grid2D, sym: F) -> Vec<f64>
where
    F: Fn(&RowSpectral, usize) -> Complex64,
{
    let m = Marcher::new(g, c);
    let mut hat = m.rs.forward_rows(values);
    let nx = g.nx;
    let s: Vec<Complex64> = (0..nx).map(|k| sym(&m.rs, k)).collect();
    for row in hat.chunks_mut(nx) {
        for (z, sk) in row.iter_mut().zip(&s) {
            *z *= sk;
        }
    }
    m.rs.inverse_rows(&m.march(&hat))
}

/// Duhamel solution of d_y u = u_xx - c u_x + f from zero below the window.
///
/// With `antideriv` the source is first replaced by its mean-free
/// x-antiderivative, and the x-mean of the kernel int_0^{x-cy} G_y, which is
/// -c (y - s) per unit source mass, is added as a double running integral.
pub fn apply_gamma(c: f64, f: &Field2D, antideriv: bool) -> Result<Field2D> {
    f.check_decay("gamma source")?;
    Field2D::new(f.grid, gamma_raw(c, &f.values, &f.grid, antideriv), Meta::None)
}

pub(crate) fn gamma_raw(c: f64, values: &[f64], g: &Grid2D, antideriv: bool) -> Vec<f64> {
    if !antideriv {
        return gamma_with_symbol(c, values, g, |_, _| Complex64::new(1.0, 0.0));
    }
    let mut out = gamma_with_symbol(c, values, g, |rs, k| {
        if k == 0 || rs.is_nyquist(k) {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(0.0, -1.0 / rs.wavenumber(k))
        }
    });
    if c != 0.0 {
        let nx = g.nx;
        let means: Vec<f64> = values.chunks(nx).map(|r| r.iter().sum::<f64>() / nx as f64).collect();
        let twice = cumulative_causal(&cumulative_causal(&means, g.dy()), g.dy());
        for (row, t) in out.chunks_mut(nx).zip(&twice) {
            for v in row.iter_mut() {
                *v -= c * t;
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KtrSign {
    Plus,
    Minus,
}

/// Right inverses of d_y - d_x^2 + 2 tanh d_x (plus) and
/// d_y - d_x^2 - 2 tanh d_x (minus), causal in y.
pub fn apply_ktr(sign: KtrSign, f: &Field2D) -> Result<Field2D> {
    f.check_decay("transport kernel source")?;
    let g = f.grid;
    let nx = g.nx;
    let weighted = |w: &dyn Fn(f64) -> f64| -> Vec<f64> {
        let mut v = f.values.clone();
        for row in v.chunks_mut(nx) {
            for (j, x) in row.iter_mut().enumerate() {
                *x *= w(g.x(j));
            }
        }
        v
    };
    let values = match sign {
        KtrSign::Plus => {
            let a = gamma_raw(2.0, &weighted(&eta_plus), &g, false);
            let b = gamma_raw(-2.0, &weighted(&eta_minus), &g, false);
            let s = weighted(&sech2);
            let cm = gamma_raw(-2.0, &s, &g, true);
            let cp = gamma_raw(2.0, &s, &g, true);
            (0..g.len()).map(|k| a[k] + b[k] + 0.5 * (cm[k] - cp[k])).collect()
        }
        KtrSign::Minus => {
            let a = gamma_raw(-2.0, &f.values, &g, false);
            let b = gamma_raw(2.0, &f.values, &g, false);
            let mut out = vec![0.0; g.len()];
            for i in 0..g.ny {
                for j in 0..nx {
                    let k = i * nx + j;
                    let x = g.x(j);
                    out[k] = eta_plus(x) * a[k] + eta_minus(x) * b[k];
                }
            }
            out
        }
    };
    Field2D::new(g, values, Meta::None)
}

/// (d_y + c d_x - d_x^2) u with a 7-point y stencil, spectral in x.
pub fn heat_operator(c: f64, u: &Field2D) -> Result<Vec<f64>> {
    let g = u.grid;
    check_decay(&u.values, g.nx, "heat operator input")?;
    let rs = g.rows();
    let uy = crate::quad::d_rows(&u.values, g.nx, g.dy(), 1, 7);
    let ux = rs.dx(&u.values);
    let uxx = rs.dxx(&u.values);
    Ok((0..g.len()).map(|k| uy[k] + c * ux[k] - uxx[k]).collect())
}

/// (d_y - d_x^2 +- 2 tanh d_x) u with a 7-point y stencil, spectral in x.
pub fn transport_operator(sign: KtrSign, u: &Field2D) -> Result<Vec<f64>> {
    let g = u.grid;
    let rs = g.rows();
    let uy = crate::quad::d_rows(&u.values, g.nx, g.dy(), 1, 7);
    let ux = rs.dx(&u.values);
    let uxx = rs.dxx(&u.values);
    let s = if sign == KtrSign::Plus { 2.0 } else { -2.0 };
    let mut out = vec![0.0; g.len()];
    for i in 0..g.ny {
        for j in 0..g.nx {
            let k = i * g.nx + j;
            out[k] = uy[k] - uxx[k] + s * g.x(j).tanh() * ux[k];
        }
    }
    Ok(out)
}
