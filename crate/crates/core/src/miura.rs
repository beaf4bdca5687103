//! Solvers for the Miura equation v_y - v_xx = (v^2)_x - u_x.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex64;
use num_traits::Float;

use crate::error::{Error, Result};
use crate::grid::{check_decay, check_decay_rel, h_minus_half_zero, Field2D, Grid2D, Meta, EDGE_TOL};
use crate::heat::Marcher;
use crate::profiles::Mollifier;
use crate::quad::{cumulative, interp_rows};
use crate::spectral::RowEtd4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub smallness_guard: f64,
    /// Edge-decay tolerance on the forcing, relative to its sup norm.
    pub edge_tol: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { tol: 1e-11, max_iter: 200, smallness_guard: 0.1, edge_tol: EDGE_TOL }
    }
}

impl SolveOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) || self.max_iter == 0 || !(self.edge_tol >= 0.0) {
            return Err(Error::InvalidParameter(String::from("tol must be > 0, max_iter >= 1 and edge_tol >= 0")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementaryReport {
    pub iterations: usize,
    /// l2 distance between the returned field and one more Picard step, i.e.
    /// the residual of the discrete tilted equation.
    pub residual_l2: f64,
    pub converged: bool,
    pub last_increment: f64,
}

fn l3(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs().powi(3)).sum::<f64>().cbrt()
}

/// Checks the smallness guard on a forcing field.
pub fn guard(u: &Field2D, opts: &SolveOptions) -> Result<f64> {
    check_decay_rel(&u.residual(), u.grid.nx, "forcing u", opts.edge_tol)?;
    let norm = h_minus_half_zero(u);
    if norm > opts.smallness_guard {
        return Err(Error::SmallnessGuard { norm, guard: opts.smallness_guard });
    }
    Ok(norm)
}

/// Elementary solution near the constant lambda: returns the decaying part
/// w of v = lambda + w, the fixed point of w = Gamma^(-2 lambda) d_x (w^2 - u).
pub fn solve_elementary(u: &Field2D, lambda: f64, opts: &SolveOptions) -> Result<(Field2D, ElementaryReport)> {
    opts.validate()?;
    guard(u, opts)?;
    let g = u.grid;
    let m = Marcher::new(&g, -2.0 * lambda);
    let step = |w: &[f64]| -> Vec<f64> {
        let src: Vec<f64> = w.iter().zip(&u.values).map(|(a, b)| a * a - b).collect();
        let mut hat = m.rs.forward_rows(&src);
        for row in hat.chunks_mut(g.nx) {
            for (k, z) in row.iter_mut().enumerate() {
                *z *= m.rs.ik(k);
            }
        }
        m.rs.inverse_rows(&m.march(&hat))
    };
    let mut w = vec![0.0; g.len()];
    let mut prev_inc = f64::INFINITY;
    let mut growth = 0;
    let mut iterations = 0;
    let mut converged = false;
    let mut inc = f64::INFINITY;
    while iterations < opts.max_iter {
        iterations += 1;
        let next = step(&w);
        let diff: Vec<f64> = next.iter().zip(&w).map(|(a, b)| a - b).collect();
        let scale = l3(&next);
        inc = if scale == 0.0 { l3(&diff) } else { l3(&diff) / scale };
        w = next;
        if !inc.is_finite() {
            return Err(Error::Diverged { iterations });
        }
        if inc < opts.tol {
            converged = true;
            break;
        }
        if inc > prev_inc {
            growth += 1;
            if growth >= 5 {
                return Err(Error::Diverged { iterations });
            }
        } else {
            growth = 0;
        }
        prev_inc = inc;
    }
    if !converged {
        return Err(Error::Diverged { iterations });
    }
    let check = step(&w);
    let residual: Vec<f64> = check.iter().zip(&w).map(|(a, b)| a - b).collect();
    let report = ElementaryReport {
        iterations,
        residual_l2: crate::grid::l2(&residual, g.cell()),
        converged,
        last_increment: inc,
    };
    Ok((Field2D::new(g, w, Meta::None)?, report))
}

/// Normalized primitive of an elementary solution: W with W_x = w and
/// W_y = w_x + 2 lambda w + w^2 - u, shifted so that
/// (W + lambda x + lambda^2 y) has zero mollifier average.
///
/// The x-mean of W is integrated in y from the bottom row; its rate is the
/// row mean of w^2 - u.
pub fn build_primitive(w: &Field2D, u: &Field2D, lambda: f64) -> Result<Field2D> {
    if w.grid != u.grid {
        return Err(Error::GridMismatch);
    }
    let g = w.grid;
    let nx = g.nx;
    let rs = g.rows();
    let mut prim = rs.antiderivative(&w.values);
    let rate: Vec<f64> = (0..g.ny)
        .map(|i| {
            let r = i * nx..(i + 1) * nx;
            let s: f64 = w.values[r.clone()].iter().zip(&u.values[r]).map(|(a, b)| a * a - b).sum();
            s / nx as f64
        })
        .collect();
    let level = cumulative(&rate, g.dy());
    for (row, l) in prim.chunks_mut(nx).zip(&level) {
        for v in row.iter_mut() {
            *v += l;
        }
    }
    let moll = Mollifier::for_grid(&g);
    let mut c = 0.0;
    for i in 0..g.ny {
        let y = g.y(i);
        if y.abs() >= 1.0 {
            continue;
        }
        for j in 0..nx {
            let x = g.x(j);
            let r = moll.eval(x, y);
            if r > 0.0 {
                c += r * (prim[i * nx + j] + lambda * x + lambda * lambda * y);
            }
        }
    }
    c *= g.cell();
    for v in prim.iter_mut() {
        *v -= c;
    }
    Field2D::new(g, prim, Meta::None)
}

/// Marches v = tanh(x) + z from the slice `v0` at `y_start` up to `y_end`
/// (both grid rows) by ETDRK4 with four substeps per row: diffusion exact,
/// 2 (tanh z)_x + (z^2)_x - u_x explicit. Rows outside the span repeat the
/// nearest marched row.
pub fn solve_kink_ivp(v0: &[f64], u: &Field2D, y_start: f64, y_end: f64) -> Result<Field2D> {
    let g = u.grid;
    let nx = g.nx;
    if v0.len() != nx {
        return Err(Error::InvalidParameter(format!("initial slice must have {nx} samples")));
    }
    let (i0, i1) = match (g.row_of(y_start), g.row_of(y_end)) {
        (Some(a), Some(b)) if a <= b => (a, b),
        _ => return Err(Error::InvalidParameter(String::from("y span must be increasing grid rows"))),
    };
    u.check_decay("forcing u")?;
    let xs = g.xs();
    let th: Vec<f64> = xs.iter().map(|x| x.tanh()).collect();
    let z0: Vec<f64> = v0.iter().zip(&th).map(|(a, b)| a - b).collect();
    check_decay(&z0, nx, "v0 - tanh")?;
    let rs = g.rows();
    let ux = rs.dx(&u.values);
    let nsub = 4usize;
    let etd = RowEtd4::new(&rs, g.dy() / nsub as f64, |k| {
        let w = rs.wavenumber(k);
        Complex64::new(-w * w, 0.0)
    });
    let ik: Vec<Complex64> = (0..nx).map(|k| rs.ik(k)).collect();
    let nonlinear = |zh: &[Complex64], pos: f64| -> Vec<Complex64> {
        let z = rs.inverse_real(zh.to_vec());
        let q: Vec<f64> = z.iter().zip(&th).map(|(z, t)| 2.0 * t * z + z * z).collect();
        let mut qh = rs.forward(&q);
        let uxh = rs.forward(&interp_rows(&ux, nx, pos));
        for k in 0..nx {
            qh[k] = ik[k] * qh[k] - uxh[k];
        }
        qh
    };

    let mut out = vec![0.0; g.len()];
    let mut zh = rs.forward(&z0);
    let write_row = |out: &mut Vec<f64>, i: usize, z: &[f64]| {
        for j in 0..nx {
            out[i * nx + j] = z[j] + th[j];
        }
    };
    write_row(&mut out, i0, &z0);
    for i in i0..i1 {
        for s in 0..nsub {
            let pos = i as f64 + s as f64 / nsub as f64;
            etd.step(&mut zh, pos, 1.0 / nsub as f64, nonlinear);
        }
        let z = rs.inverse_real(zh.clone());
        if z.iter().any(|v| !v.is_finite() || v.abs() > 1e6) {
            return Err(Error::Unstable { row: i + 1 });
        }
        write_row(&mut out, i + 1, &z);
    }
    for i in 0..i0 {
        let (a, b) = out.split_at_mut(i0 * nx);
        a[i * nx..(i + 1) * nx].copy_from_slice(&b[..nx]);
    }
    for i in i1 + 1..g.ny {
        let (a, b) = out.split_at_mut(i * nx);
        b[..nx].copy_from_slice(&a[i1 * nx..(i1 + 1) * nx]);
    }
    Field2D::new(g, out, Meta::Kink { lambda: 1.0, shift: None })
}

/// Guard on the distance to the kink family used by [`sech2_decompose`].
pub const KINK_GUARD: f64 = 0.3;

/// Splits a slice near the kink family as tanh(x - beta) + w with
/// w orthogonal to sech^2(x - beta).
pub fn sech2_decompose(v: &[f64], grid: &Grid2D) -> Result<(Vec<f64>, f64)> {
    let nx = grid.nx;
    if v.len() != nx {
        return Err(Error::InvalidParameter(format!("slice must have {nx} samples")));
    }
    let dx = grid.dx();
    let xs = grid.xs();
    let dist = |gam: f64| -> f64 {
        (v.iter().zip(&xs).map(|(a, x)| (a - (x - gam).tanh()).powi(2)).sum::<f64>() * dx).sqrt()
    };
    let (mut best, mut bd) = (0.0, f64::INFINITY);
    for &x in &xs {
        let d = dist(x);
        if d < bd {
            bd = d;
            best = x;
        }
    }
    if bd >= KINK_GUARD {
        return Err(Error::NotNearKink { distance: bd });
    }
    let f = |b: f64| -> (f64, f64) {
        let mut s = 0.0;
        let mut ds = 0.0;
        for (a, x) in v.iter().zip(&xs) {
            let t = (x - b).tanh();
            let s2 = 1.0 - t * t;
            s += (a - t) * s2;
            ds += s2 * s2 + (a - t) * 2.0 * s2 * t;
        }
        (s * dx, ds * dx)
    };
    let beta = crate::quad::bracketed_root(f, best - 1.0, best + 1.0, 1e-14)
        .ok_or_else(|| Error::NoRoot(format!("sech2 orthogonality near x = {best}")))?;
    let w = v.iter().zip(&xs).map(|(a, x)| a - (x - beta).tanh()).collect();
    Ok((w, beta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{interior_l2, make_grid, sech2};

    fn gauss_dx(eps: f64, s: f64) -> impl Fn(f64, f64) -> f64 {
        move |x: f64, y: f64| eps * (-2.0 * x / s) * (-(x * x + y * y) / s).exp()
    }

    #[test]
    fn zero_forcing_is_trivial() {
        let g = make_grid(64, 64, 40.0, 40.0, -20.0, -20.0).unwrap();
        let (w, rep) = solve_elementary(&Field2D::zeros(g), 1.0, &SolveOptions::default()).unwrap();
        assert_eq!(w.linf(), 0.0);
        assert_eq!(rep.iterations, 1);
        let p = build_primitive(&w, &Field2D::zeros(g), 1.0).unwrap();
        assert!(p.linf() < 1e-14);
    }

    #[test]
    fn guard_trips() {
        let g = make_grid(128, 128, 40.0, 40.0, -20.0, -20.0).unwrap();
        let u = Field2D::from_fn(g, gauss_dx(0.5, 4.0));
        assert!(matches!(
            solve_elementary(&u, 1.0, &SolveOptions::default()),
            Err(Error::SmallnessGuard { .. })
        ));
    }

    #[test]
    fn elementary_and_primitive_residuals() {
        let g = make_grid(512, 512, 40.0, 40.0, -20.0, -20.0).unwrap();
        let u = Field2D::from_fn(g, gauss_dx(0.05, 4.0));
        for lambda in [1.0, -1.0] {
            let (w, rep) = solve_elementary(&u, lambda, &SolveOptions::default()).unwrap();
            assert!(rep.converged && rep.iterations <= 30, "{rep:?}");
            assert!(rep.residual_l2 < 1e-8, "{rep:?}");
            let p = build_primitive(&w, &u, lambda).unwrap();
            let rs = g.rows();
            let px = rs.dx(&p.values);
            let d: Vec<f64> = px.iter().zip(&w.values).map(|(a, b)| a - b).collect();
            assert!(crate::grid::l2(&d, 1.0) < 1e-8 * crate::grid::l2(&w.values, 1.0));
            let py = crate::quad::d_rows(&p.values, g.nx, g.dy(), 1, 7);
            let wx = rs.dx(&w.values);
            let r: Vec<f64> = (0..g.len())
                .map(|k| {
                    let wv = w.values[k];
                    py[k] - wx[k] - 2.0 * lambda * wv - wv * wv + u.values[k]
                })
                .collect();
            assert!(interior_l2(&r, &g) < 1e-6, "{}", interior_l2(&r, &g));
        }
    }

    #[test]
    fn kink_is_stationary() {
        let g = make_grid(256, 64, 40.0, 8.0, -20.0, 0.0).unwrap();
        for shift in [0.0, 3.0] {
            let v0: Vec<f64> = g.xs().iter().map(|x| (x - shift).tanh()).collect();
            let v = solve_kink_ivp(&v0, &Field2D::zeros(g), 0.0, g.y(g.ny - 1)).unwrap();
            for i in 0..g.ny {
                for j in 0..g.nx {
                    assert!((v.at(i, j) - v0[j]).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn decompose_examples() {
        let g = make_grid(512, 16, 40.0, 1.0, -20.0, 0.0).unwrap();
        let xs = g.xs();
        let v: Vec<f64> = xs.iter().map(|x| (x - 2.0).tanh()).collect();
        let (w, b) = sech2_decompose(&v, &g).unwrap();
        assert!((b - 2.0).abs() < 1e-12 && w.iter().all(|x| x.abs() < 1e-12));
        let v: Vec<f64> = xs.iter().map(|x| x.tanh() + 0.01 * x * (-x * x).exp()).collect();
        let (_, b) = sech2_decompose(&v, &g).unwrap();
        assert!(b.abs() < 1e-12);
        let v: Vec<f64> = xs.iter().map(|x| x.tanh() + 0.01 * sech2(*x)).collect();
        let (_, b) = sech2_decompose(&v, &g).unwrap();
        // dense scan of F for a sign change
        let dx = g.dx();
        let f = |beta: f64| -> f64 {
            v.iter().zip(&xs).map(|(a, x)| (a - (x - beta).tanh()) * sech2(x - beta)).sum::<f64>() * dx
        };
        let mut prev = (-0.5, f(-0.5));
        let mut root = f64::NAN;
        for n in 1..=100_000 {
            let beta = -0.5 + n as f64 * 1e-5;
            let fb = f(beta);
            if prev.1 <= 0.0 && fb > 0.0 {
                root = prev.0 + (beta - prev.0) * (-prev.1) / (fb - prev.1);
                break;
            }
            prev = (beta, fb);
        }
        assert!((b - root).abs() < 1e-8, "{b} {root}");
        let far: Vec<f64> = xs.iter().map(|x| x.sin()).collect();
        assert!(matches!(sech2_decompose(&far, &g), Err(Error::NotNearKink { .. })));
    }

    #[test]
    fn multikink_closed_form() {
        let g = make_grid(512, 512, 64.0, 32.0, -32.0, -8.0).unwrap();
        let exact = |x: f64, y: f64| -> f64 {
            // d/dx log(e^{x+y} + 1 + e^{-x+y}), evaluated stably
            let a = [x + y, 0.0, -x + y];
            let m = a.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let e: Vec<f64> = a.iter().map(|t| (t - m).exp()).collect();
            (e[0] - e[2]) / (e[0] + e[1] + e[2])
        };
        let v0: Vec<f64> = g.xs().iter().map(|&x| exact(x, -8.0)).collect();
        let v = solve_kink_ivp(&v0, &Field2D::zeros(g), -8.0, 8.0).unwrap();
        let i1 = g.row_of(8.0).unwrap();
        let mut s = 0.0;
        for i in 0..=i1 {
            for j in 0..g.nx {
                s += (v.at(i, j) - exact(g.x(j), g.y(i))).powi(2);
            }
        }
        let err = (s * g.cell()).sqrt();
        assert!(err < 1e-4, "{err}");
        // restarting from a later row reproduces the tail
        let im = g.row_of(0.0).unwrap();
        let w = solve_kink_ivp(v.row(im), &Field2D::zeros(g), 0.0, 8.0).unwrap();
        let mut d = 0.0;
        for i in im..=i1 {
            for j in 0..g.nx {
                d += (w.at(i, j) - v.at(i, j)).powi(2);
            }
        }
        assert!((d * g.cell()).sqrt() < 1e-6);
    }
}
