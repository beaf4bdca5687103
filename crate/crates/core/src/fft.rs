//! Iterative radix-2 complex FFT.

use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64;
use num_traits::Float;

#[derive(Debug, Clone)]
pub struct Fft {
    n: usize,
    twiddle: Vec<Complex64>,
    rev: Vec<usize>,
}

impl Fft {
    /// Plan for length `n`, which must be a power of two.
    pub fn new(n: usize) -> Self {
        assert!(n.is_power_of_two(), "fft length must be a power of two");
        let bits = n.trailing_zeros();
        let rev = (0..n)
            .map(|i| if bits == 0 { 0 } else { i.reverse_bits() >> (usize::BITS - bits) })
            .collect();
        let twiddle = (0..n / 2)
            .map(|k| {
                let a = -2.0 * PI * k as f64 / n as f64;
                Complex64::new(a.cos(), a.sin())
            })
            .collect();
        Fft { n, twiddle, rev }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Unnormalized forward transform, kernel `exp(-2 pi i j k / n)`.
    pub fn forward(&self, a: &mut [Complex64]) {
        self.run(a, false);
    }

    /// Inverse transform including the `1/n` factor.
    pub fn inverse(&self, a: &mut [Complex64]) {
        self.run(a, true);
        let s = 1.0 / self.n as f64;
        for z in a.iter_mut() {
            *z *= s;
        }
    }

    fn run(&self, a: &mut [Complex64], inv: bool) {
        let n = self.n;
        assert_eq!(a.len(), n);
        for i in 0..n {
            let j = self.rev[i];
            if i < j {
                a.swap(i, j);
            }
        }
        let mut len = 2;
        while len <= n {
            let half = len / 2;
            let step = n / len;
            for start in (0..n).step_by(len) {
                for j in 0..half {
                    let mut w = self.twiddle[j * step];
                    if inv {
                        w = w.conj();
                    }
                    let u = a[start + j];
                    let v = a[start + j + half] * w;
                    a[start + j] = u + v;
                    a[start + j + half] = u - v;
                }
            }
            len <<= 1;
        }
    }
}

/// Signed integer frequency of bin `k` for length `n` (Nyquist bin reported as +n/2).
pub fn signed_index(k: usize, n: usize) -> i64 {
    if k <= n / 2 {
        k as i64
    } else {
        k as i64 - n as i64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive(a: &[Complex64]) -> Vec<Complex64> {
        let n = a.len();
        (0..n)
            .map(|k| {
                let mut s = Complex64::new(0.0, 0.0);
                for (j, z) in a.iter().enumerate() {
                    let ang = -2.0 * PI * (j * k) as f64 / n as f64;
                    s += z * Complex64::new(ang.cos(), ang.sin());
                }
                s
            })
            .collect()
    }

    #[test]
    fn matches_naive_dft() {
        for &n in &[1usize, 2, 4, 8, 32] {
            let a: Vec<Complex64> = (0..n)
                .map(|j| Complex64::new((j as f64 * 0.37).sin(), (j as f64 * 1.3).cos()))
                .collect();
            let mut b = a.clone();
            Fft::new(n).forward(&mut b);
            for (x, y) in b.iter().zip(naive(&a)) {
                assert!((x - y).norm() < 1e-12);
            }
            Fft::new(n).inverse(&mut b);
            for (x, y) in b.iter().zip(&a) {
                assert!((x - y).norm() < 1e-13);
            }
        }
    }
}
