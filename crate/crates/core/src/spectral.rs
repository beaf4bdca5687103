//! Row-wise (x-direction) and full 2D Fourier helpers.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64;
use num_traits::Float;

use crate::fft::{signed_index, Fft};
use crate::quad::phi_functions;

/// Fourier machinery along the periodic x-axis.
#[derive(Debug, Clone)]
pub struct RowSpectral {
    fft: Fft,
    pub nx: usize,
    pub lx: f64,
}

impl RowSpectral {
    pub fn new(nx: usize, lx: f64) -> Self {
        RowSpectral { fft: Fft::new(nx), nx, lx }
    }

    pub fn fft(&self) -> &Fft {
        &self.fft
    }

    /// Angular wavenumber of bin `k` (2 pi xi), Nyquist bin positive.
    pub fn wavenumber(&self, k: usize) -> f64 {
        2.0 * PI * signed_index(k, self.nx) as f64 / self.lx
    }

    pub fn is_nyquist(&self, k: usize) -> bool {
        k == self.nx / 2
    }

    /// Symbol of d/dx, zero at the Nyquist bin.
    pub fn ik(&self, k: usize) -> Complex64 {
        if self.is_nyquist(k) {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(0.0, self.wavenumber(k))
        }
    }

    pub fn forward(&self, row: &[f64]) -> Vec<Complex64> {
        let mut z: Vec<Complex64> = row.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.fft.forward(&mut z);
        z
    }

    /// Real part of the inverse transform.
    pub fn inverse_real(&self, mut z: Vec<Complex64>) -> Vec<f64> {
        self.fft.inverse(&mut z);
        z.iter().map(|c| c.re).collect()
    }

    /// Row spectra of a real row-major block (two rows per complex transform).
    pub fn forward_rows(&self, values: &[f64]) -> Vec<Complex64> {
        let nx = self.nx;
        let ny = values.len() / nx;
        let mut out = vec![Complex64::new(0.0, 0.0); values.len()];
        let mut buf = vec![Complex64::new(0.0, 0.0); nx];
        let mut i = 0;
        while i < ny {
            let pair = i + 1 < ny;
            for j in 0..nx {
                let b = if pair { values[(i + 1) * nx + j] } else { 0.0 };
                buf[j] = Complex64::new(values[i * nx + j], b);
            }
            self.fft.forward(&mut buf);
            for k in 0..nx {
                let kc = (nx - k) % nx;
                out[i * nx + k] = (buf[k] + buf[kc].conj()) * 0.5;
                if pair {
                    out[(i + 1) * nx + k] = (buf[k] - buf[kc].conj()) * Complex64::new(0.0, -0.5);
                }
            }
            i += 2;
        }
        out
    }

    /// Inverse of [`RowSpectral::forward_rows`] for Hermitian row spectra.
    pub fn inverse_rows(&self, hat: &[Complex64]) -> Vec<f64> {
        let nx = self.nx;
        let ny = hat.len() / nx;
        let mut out = vec![0.0; hat.len()];
        let mut buf = vec![Complex64::new(0.0, 0.0); nx];
        let mut i = 0;
        while i < ny {
            let pair = i + 1 < ny;
            for k in 0..nx {
                let b = if pair { hat[(i + 1) * nx + k] } else { Complex64::new(0.0, 0.0) };
                buf[k] = hat[i * nx + k] + Complex64::new(0.0, 1.0) * b;
            }
            self.fft.inverse(&mut buf);
            for j in 0..nx {
                out[i * nx + j] = buf[j].re;
                if pair {
                    out[(i + 1) * nx + j] = buf[j].im;
                }
            }
            i += 2;
        }
        out
    }

    /// Applies a real-preserving Fourier multiplier to every row of a
    /// row-major block. Two rows share one complex transform.
    pub fn apply_rows<F>(&self, values: &[f64], sym: F) -> Vec<f64>
    where
        F: Fn(usize) -> Complex64,
    {
        let nx = self.nx;
        let ny = values.len() / nx;
        let s: Vec<Complex64> = (0..nx).map(&sym).collect();
        let mut out = vec![0.0; values.len()];
        let mut buf = vec![Complex64::new(0.0, 0.0); nx];
        let mut i = 0;
        while i < ny {
            let a = &values[i * nx..(i + 1) * nx];
            let b = if i + 1 < ny { Some(&values[(i + 1) * nx..(i + 2) * nx]) } else { None };
            for j in 0..nx {
                buf[j] = Complex64::new(a[j], b.map_or(0.0, |b| b[j]));
            }
            self.fft.forward(&mut buf);
            // split into the two real spectra, multiply, recombine
            let mut prod = vec![Complex64::new(0.0, 0.0); nx];
            for k in 0..nx {
                let kc = (nx - k) % nx;
                let za = (buf[k] + buf[kc].conj()) * 0.5;
                let zb = (buf[k] - buf[kc].conj()) * Complex64::new(0.0, -0.5);
                prod[k] = s[k] * za + Complex64::new(0.0, 1.0) * s[k] * zb;
            }
            self.fft.inverse(&mut prod);
            for j in 0..nx {
                out[i * nx + j] = prod[j].re;
                if i + 1 < ny {
                    out[(i + 1) * nx + j] = prod[j].im;
                }
            }
            i += 2;
        }
        out
    }

    pub fn dx(&self, values: &[f64]) -> Vec<f64> {
        self.apply_rows(values, |k| self.ik(k))
    }

    pub fn dxx(&self, values: &[f64]) -> Vec<f64> {
        self.apply_rows(values, |k| {
            let w = self.wavenumber(k);
            Complex64::new(-w * w, 0.0)
        })
    }

    /// Mean-free antiderivative per row.
    pub fn antiderivative(&self, values: &[f64]) -> Vec<f64> {
        self.apply_rows(values, |k| {
            if k == 0 || self.is_nyquist(k) {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(0.0, -1.0 / self.wavenumber(k))
            }
        })
    }

    /// Translation f(x) -> f(x - a) per row.
    pub fn shift(&self, values: &[f64], a: f64) -> Vec<f64> {
        self.apply_rows(values, |k| {
            let w = self.wavenumber(k);
            if self.is_nyquist(k) {
                Complex64::new((w * a).cos(), 0.0)
            } else {
                Complex64::new((w * a).cos(), -(w * a).sin())
            }
        })
    }
}

/// ETDRK4 (Cox-Matthews) for row spectra z' = L z + N(z, pos) with a
/// diagonal linear symbol.
#[derive(Debug, Clone)]
pub struct RowEtd4 {
    h: f64,
    half: Vec<[Complex64; 2]>,
    full: Vec<[Complex64; 4]>,
}

impl RowEtd4 {
    pub fn new(rs: &RowSpectral, h: f64, sym: impl Fn(usize) -> Complex64) -> Self {
        let lin: Vec<Complex64> = (0..rs.nx).map(|k| sym(k) * h).collect();
        let half = lin.iter().map(|z| phi_functions::<2>(*z * 0.5)).collect();
        let full = lin.iter().map(|z| phi_functions::<4>(*z)).collect();
        RowEtd4 { h, half, full }
    }

    /// One step from `pos`; `dpos` is the step in the units `n` expects.
    pub fn step<F>(&self, zh: &mut [Complex64], pos: f64, dpos: f64, n: F)
    where
        F: Fn(&[Complex64], f64) -> Vec<Complex64>,
    {
        let h = self.h;
        let nx = zh.len();
        let n0 = n(zh, pos);
        let a: Vec<Complex64> =
            (0..nx).map(|k| self.half[k][0] * zh[k] + self.half[k][1] * n0[k] * (0.5 * h)).collect();
        let na = n(&a, pos + 0.5 * dpos);
        let b: Vec<Complex64> =
            (0..nx).map(|k| self.half[k][0] * zh[k] + self.half[k][1] * na[k] * (0.5 * h)).collect();
        let nb = n(&b, pos + 0.5 * dpos);
        let c: Vec<Complex64> = (0..nx)
            .map(|k| self.half[k][0] * a[k] + self.half[k][1] * (nb[k] * 2.0 - n0[k]) * (0.5 * h))
            .collect();
        let nc = n(&c, pos + dpos);
        for k in 0..nx {
            let [e, p1, p2, p3] = self.full[k];
            let f1 = p1 - p2 * 3.0 + p3 * 4.0;
            let f2 = (p2 - p3 * 2.0) * 2.0;
            let f3 = p3 * 4.0 - p2;
            zh[k] = e * zh[k] + (f1 * n0[k] + f2 * (na[k] + nb[k]) + f3 * nc[k]) * h;
        }
    }
}

/// 2D transform on a row-major `ny x nx` block (x fastest).
#[derive(Debug, Clone)]
pub struct Spectral2 {
    pub rows: RowSpectral,
    fy: Fft,
    pub ny: usize,
    pub ly: f64,
}

impl Spectral2 {
    pub fn new(nx: usize, ny: usize, lx: f64, ly: f64) -> Self {
        Spectral2 { rows: RowSpectral::new(nx, lx), fy: Fft::new(ny), ny, ly }
    }

    pub fn wavenumber_y(&self, l: usize) -> f64 {
        2.0 * PI * signed_index(l, self.ny) as f64 / self.ly
    }

    pub fn forward_real(&self, values: &[f64]) -> Vec<Complex64> {
        let mut z: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward(&mut z);
        z
    }

    pub fn forward(&self, z: &mut [Complex64]) {
        let nx = self.rows.nx;
        for row in z.chunks_mut(nx) {
            self.rows.fft().forward(row);
        }
        self.columns(z, false);
    }

    pub fn inverse(&self, z: &mut [Complex64]) {
        let nx = self.rows.nx;
        for row in z.chunks_mut(nx) {
            self.rows.fft().inverse(row);
        }
        self.columns(z, true);
    }

    pub fn inverse_real(&self, mut z: Vec<Complex64>) -> Vec<f64> {
        self.inverse(&mut z);
        z.iter().map(|c| c.re).collect()
    }

    /// 2D spectrum of a real block; only half the columns are transformed
    /// and the rest follow from Hermitian symmetry.
    pub fn forward_real_packed(&self, values: &[f64]) -> Vec<Complex64> {
        let nx = self.rows.nx;
        let ny = self.ny;
        let mut z = self.rows.forward_rows(values);
        self.half_columns(&mut z, false);
        for i in 0..ny {
            let ic = (ny - i) % ny;
            for k in nx / 2 + 1..nx {
                z[i * nx + k] = z[ic * nx + (nx - k)].conj();
            }
        }
        z
    }

    /// Real block from a Hermitian 2D spectrum.
    pub fn inverse_real_packed(&self, hat: &[Complex64]) -> Vec<f64> {
        let nx = self.rows.nx;
        let mut z = hat.to_vec();
        self.half_columns(&mut z, true);
        for row in z.chunks_mut(nx) {
            for k in nx / 2 + 1..nx {
                row[k] = row[nx - k].conj();
            }
        }
        self.rows.inverse_rows(&z)
    }

    fn half_columns(&self, z: &mut [Complex64], inv: bool) {
        let nx = self.rows.nx;
        let ny = self.ny;
        let mut col = vec![Complex64::new(0.0, 0.0); ny];
        for j in 0..=nx / 2 {
            for i in 0..ny {
                col[i] = z[i * nx + j];
            }
            if inv {
                self.fy.inverse(&mut col);
            } else {
                self.fy.forward(&mut col);
            }
            for i in 0..ny {
                z[i * nx + j] = col[i];
            }
        }
    }

    fn columns(&self, z: &mut [Complex64], inv: bool) {
        let nx = self.rows.nx;
        let ny = self.ny;
        let mut col = vec![Complex64::new(0.0, 0.0); ny];
        for j in 0..nx {
            for i in 0..ny {
                col[i] = z[i * nx + j];
            }
            if inv {
                self.fy.inverse(&mut col);
            } else {
                self.fy.forward(&mut col);
            }
            for i in 0..ny {
                z[i * nx + j] = col[i];
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivative_of_mode() {
        let nx = 64;
        let lx = 10.0;
        let rs = RowSpectral::new(nx, lx);
        let x: Vec<f64> = (0..nx).map(|j| j as f64 * lx / nx as f64).collect();
        let k = 2.0 * PI * 3.0 / lx;
        let mut v = Vec::new();
        for _ in 0..3 {
            v.extend(x.iter().map(|&x| (k * x).sin()));
        }
        let d = rs.dx(&v);
        for (j, val) in d.iter().enumerate() {
            assert!((val - k * (k * x[j % nx]).cos()).abs() < 1e-10);
        }
    }

    #[test]
    fn two_d_roundtrip() {
        let s = Spectral2::new(16, 32, 3.0, 5.0);
        let v: Vec<f64> = (0..512).map(|i| (i as f64 * 0.731).sin()).collect();
        let back = s.inverse_real(s.forward_real(&v));
        for (a, b) in v.iter().zip(&back) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn packed_matches_full() {
        let s = Spectral2::new(16, 8, 3.0, 5.0);
        let v: Vec<f64> = (0..128).map(|i| (i as f64 * 0.377).cos() + 0.1 * i as f64).collect();
        let full = s.forward_real(&v);
        let packed = s.forward_real_packed(&v);
        for (a, b) in full.iter().zip(&packed) {
            assert!((a - b).norm() < 1e-11);
        }
        let back = s.inverse_real_packed(&packed);
        for (a, b) in v.iter().zip(&back) {
            assert!((a - b).abs() < 1e-13);
        }
    }
}
