//! Small numerical building blocks: phi-functions, finite-difference weights,
//! cumulative quadrature along y and scalar root finding.

use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex64;
use num_traits::Float;

/// phi_0..phi_{K} at z, where phi_0 = exp and phi_{k+1}(z) = (phi_k(z) - 1/k!)/z.
pub fn phi_functions<const K: usize>(z: Complex64) -> [Complex64; K] {
    let mut out = [Complex64::new(0.0, 0.0); K];
    if z.norm() < 1.0 {
        // Taylor: phi_k(z) = sum_n z^n / (n+k)!
        for (k, o) in out.iter_mut().enumerate() {
            let mut term = Complex64::new(1.0 / factorial(k), 0.0);
            let mut s = term;
            for n in 1..40 {
                term = term * z / ((n + k) as f64);
                s += term;
                if term.norm() < 1e-18 * s.norm() {
                    break;
                }
            }
            *o = s;
        }
    } else {
        let mut p = z.exp();
        for (k, o) in out.iter_mut().enumerate() {
            if k > 0 {
                p = (p - 1.0 / factorial(k - 1)) / z;
            }
            *o = p;
        }
    }
    out
}

pub fn factorial(k: usize) -> f64 {
    (1..=k).fold(1.0, |a, b| a * b as f64)
}

/// Cubic interpolation between rows of a row-major block at fractional row
/// position `pos`, using rows floor(pos)-1 .. floor(pos)+2 clamped inward.
pub fn interp_rows(values: &[f64], nx: usize, pos: f64) -> Vec<f64> {
    let ny = values.len() / nx;
    let mut out = vec![0.0; nx];
    if ny < 4 {
        let r = (pos.round().max(0.0) as usize).min(ny - 1);
        out.copy_from_slice(&values[r * nx..(r + 1) * nx]);
        return out;
    }
    let base = (pos.floor() as i64).clamp(1, ny as i64 - 3);
    let a = lagrange_monomials(&[-1.0, 0.0, 1.0, 2.0]);
    let t = pos - base as f64;
    for n in 0..4 {
        let w = a[n][0] + t * (a[n][1] + t * (a[n][2] + t * a[n][3]));
        if w == 0.0 {
            continue;
        }
        let r = (base - 1 + n as i64) as usize;
        for (o, v) in out.iter_mut().zip(&values[r * nx..(r + 1) * nx]) {
            *o += w * v;
        }
    }
    out
}

/// Monomial coefficients of the Lagrange basis polynomials on `nodes`:
/// `out[n][j]` is the coefficient of theta^j in the n-th basis polynomial.
pub fn lagrange_monomials(nodes: &[f64; 4]) -> [[f64; 4]; 4] {
    let mut out = [[0.0; 4]; 4];
    for n in 0..4 {
        let mut poly = vec![1.0];
        let mut denom = 1.0;
        for m in 0..4 {
            if m == n {
                continue;
            }
            let mut next = vec![0.0; poly.len() + 1];
            for (d, c) in poly.iter().enumerate() {
                next[d + 1] += c;
                next[d] -= c * nodes[m];
            }
            poly = next;
            denom *= nodes[n] - nodes[m];
        }
        for j in 0..4 {
            out[n][j] = poly[j] / denom;
        }
    }
    out
}

/// Node offsets (relative to the left end of the step) of the cubic
/// interpolation stencil used on step `k -> k+1` of an `n`-row march.
pub fn stencil_offsets(k: usize, n: usize) -> [i64; 4] {
    if k == 0 || n < 4 {
        [0, 1, 2, 3]
    } else if k + 2 >= n {
        [-2, -1, 0, 1]
    } else {
        [-1, 0, 1, 2]
    }
}

/// Weights of the cubic-interpolation quadrature for one unit step.
pub fn step_weights(offs: &[i64; 4]) -> [f64; 4] {
    let nodes = [offs[0] as f64, offs[1] as f64, offs[2] as f64, offs[3] as f64];
    let a = lagrange_monomials(&nodes);
    let mut w = [0.0; 4];
    for n in 0..4 {
        w[n] = a[n][0] + a[n][1] / 2.0 + a[n][2] / 3.0 + a[n][3] / 4.0;
    }
    w
}

/// Running integral from the first sample, fourth order accurate.
pub fn cumulative(values: &[f64], h: f64) -> Vec<f64> {
    let n = values.len();
    let mut out = vec![0.0; n];
    if n < 2 {
        return out;
    }
    if n < 4 {
        for k in 1..n {
            out[k] = out[k - 1] + 0.5 * h * (values[k - 1] + values[k]);
        }
        return out;
    }
    for k in 0..n - 1 {
        let offs = stencil_offsets(k, n);
        let w = step_weights(&offs);
        let mut s = 0.0;
        for m in 0..4 {
            s += w[m] * values[(k as i64 + offs[m]) as usize];
        }
        out[k + 1] = out[k] + h * s;
    }
    out
}

/// Running integral treating samples before the first as zero, using the
/// same backward cubic stencil as the heat march (row k+1 only sees rows <= k+1).
pub fn cumulative_causal(values: &[f64], h: f64) -> Vec<f64> {
    let n = values.len();
    let w = step_weights(&[-2, -1, 0, 1]);
    let mut out = vec![0.0; n];
    for k in 0..n.saturating_sub(1) {
        let mut s = 0.0;
        for (m, off) in [-2i64, -1, 0, 1].iter().enumerate() {
            let r = k as i64 + off;
            if r >= 0 {
                s += w[m] * values[r as usize];
            }
        }
        out[k + 1] = out[k] + h * s;
    }
    out
}

/// Fornberg finite-difference weights for derivative order `m` at `x0`.
pub fn fd_weights(x0: f64, nodes: &[f64], m: usize) -> Vec<f64> {
    let n = nodes.len();
    let mut c = vec![vec![0.0; m + 1]; n];
    let mut c1 = 1.0;
    let mut c4 = nodes[0] - x0;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = nodes[i] - x0;
        for j in 0..i {
            let c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.iter().map(|r| r[m]).collect()
}

/// m-th derivative along the slow (row) index of a row-major block using a
/// `width`-point stencil, shifted one-sided near the ends.
pub fn d_rows(values: &[f64], nx: usize, h: f64, m: usize, width: usize) -> Vec<f64> {
    let ny = values.len() / nx;
    let width = width.min(ny);
    let mut out = vec![0.0; values.len()];
    let half = width / 2;
    for i in 0..ny {
        let start = i.saturating_sub(half).min(ny - width);
        let nodes: Vec<f64> = (start..start + width).map(|r| r as f64).collect();
        let w = fd_weights(i as f64, &nodes, m);
        let scale = h.powi(m as i32);
        let dst = &mut out[i * nx..(i + 1) * nx];
        for (q, wq) in w.iter().enumerate() {
            let src = &values[(start + q) * nx..(start + q + 1) * nx];
            for j in 0..nx {
                dst[j] += wq * src[j] / scale;
            }
        }
    }
    out
}

/// Root of an increasing function on `[lo, hi]` by bisection, polished by
/// Newton steps that are only accepted while they stay inside the bracket.
pub fn bracketed_root<F>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> Option<f64>
where
    F: Fn(f64) -> (f64, f64),
{
    let (flo, _) = f(lo);
    let (fhi, _) = f(hi);
    if flo.is_nan() || fhi.is_nan() || flo > 0.0 || fhi < 0.0 {
        return None;
    }
    if flo == 0.0 {
        return Some(lo);
    }
    if fhi == 0.0 {
        return Some(hi);
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let (fx, dfx) = f(x);
        if fx == 0.0 {
            return Some(x);
        }
        if fx < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let newton = if dfx > 0.0 { x - fx / dfx } else { f64::NAN };
        let next = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if (next - x).abs() < tol || hi - lo < tol {
            return Some(next);
        }
        x = next;
    }
    Some(x)
}

/// Golden-section search for a minimum on `[a, b]` followed by parabolic
/// refinement through the final bracket.
pub fn golden_min<F>(f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64)
where
    F: Fn(f64) -> f64,
{
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    let (mut xb, mut fb) = if fc < fd { (c, fc) } else { (d, fd) };
    // parabolic step through (a, xb, b)
    let fa = f(a);
    let fbb = f(b);
    let den = (xb - a) * (fb - fbb) - (xb - b) * (fb - fa);
    if den.abs() > 0.0 {
        let num = (xb - a).powi(2) * (fb - fbb) - (xb - b).powi(2) * (fb - fa);
        let xp = xb - 0.5 * num / den;
        if xp > a && xp < b {
            let fp = f(xp);
            if fp < fb {
                xb = xp;
                fb = fp;
            }
        }
    }
    (xb, fb)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phi_small_and_large_agree() {
        let z = Complex64::new(0.999, 0.01);
        let a: [Complex64; 5] = phi_functions(z);
        let z2 = Complex64::new(1.001, 0.01);
        let b: [Complex64; 5] = phi_functions(z2);
        for k in 0..5 {
            assert!((a[k] - b[k]).norm() < 1e-2 * a[k].norm());
        }
        let p: [Complex64; 3] = phi_functions(Complex64::new(0.0, 0.0));
        assert!((p[1].re - 1.0).abs() < 1e-15 && (p[2].re - 0.5).abs() < 1e-15);
    }

    #[test]
    fn cumulative_is_exact_for_cubics() {
        let h = 0.1;
        let v: Vec<f64> = (0..20).map(|i| (i as f64 * h).powi(3)).collect();
        let c = cumulative(&v, h);
        for (i, ci) in c.iter().enumerate() {
            let y = i as f64 * h;
            assert!((ci - y.powi(4) / 4.0).abs() < 1e-12);
        }
    }

    #[test]
    fn fornberg_central() {
        let w = fd_weights(0.0, &[-1.0, 0.0, 1.0], 1);
        assert!((w[0] + 0.5).abs() < 1e-15 && w[1].abs() < 1e-15 && (w[2] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn golden_finds_parabola_min() {
        let (x, _) = golden_min(|x| (x - 0.3) * (x - 0.3), -1.0, 2.0, 1e-6);
        assert!((x - 0.3).abs() < 1e-8);
    }
}
