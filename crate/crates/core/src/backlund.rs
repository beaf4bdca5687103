//! Cole-Hopf superposition of elementary solutions and the soliton addition
//! maps built from it.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use num_traits::Float;

use crate::error::{Error, Result};
use crate::grid::{sech2, Field2D, Grid2D, Meta, ShiftCurve};
use crate::miura::{build_primitive, guard, solve_elementary, ElementaryReport, SolveOptions};
use crate::profiles::{eta_minus, eta_plus, Mollifier};
use crate::quad::bracketed_root;

/// Elementary solution v = lambda + w with its normalized primitive.
#[derive(Debug, Clone)]
pub struct Elementary {
    pub lambda: f64,
    pub w: Field2D,
    /// x-derivative of `w`.
    pub wx: Vec<f64>,
    pub primitive: Field2D,
    pub report: ElementaryReport,
}

impl Elementary {
    pub fn solve(u: &Field2D, lambda: f64, opts: &SolveOptions) -> Result<Self> {
        let (w, report) = solve_elementary(u, lambda, opts)?;
        let primitive = build_primitive(&w, u, lambda)?;
        let wx = u.grid.rows().dx(&w.values);
        Ok(Elementary { lambda, w, wx, primitive, report })
    }

    /// Exponent lambda x + lambda^2 y + W at a grid point.
    fn exponent(&self, i: usize, j: usize) -> f64 {
        let g = &self.w.grid;
        let k = i * g.nx + j;
        self.lambda * g.x(j) + self.lambda * self.lambda * g.y(i) + self.primitive.values[k]
    }
}

/// The elementary solutions at lambda = -1 and lambda = +1.
#[derive(Debug, Clone)]
pub struct ElementaryPair {
    pub u: Field2D,
    pub minus: Elementary,
    pub plus: Elementary,
}

pub fn elementary_pair(u: &Field2D, opts: &SolveOptions) -> Result<ElementaryPair> {
    guard(u, opts)?;
    let minus = Elementary::solve(u, -1.0, opts)?;
    let plus = Elementary::solve(u, 1.0, opts)?;
    Ok(ElementaryPair { u: u.clone(), minus, plus })
}

impl ElementaryPair {
    pub fn grid(&self) -> Grid2D {
        self.u.grid
    }

    pub fn as_list(&self) -> [&Elementary; 2] {
        [&self.minus, &self.plus]
    }
}

/// Interior l2 of (d_y - d_xx + u)psi / psi for psi = sum_j exp(E_j),
/// relative to the interior l2 of u.
pub fn lax_relative_residual(elems: &[&Elementary], cs: &[f64], u: &Field2D) -> Result<f64> {
    let s = superpose(elems, cs)?;
    let g = u.grid;
    let wy: Vec<Vec<f64>> =
        elems.iter().map(|e| crate::quad::d_rows(&e.primitive.values, g.nx, g.dy(), 1, 7)).collect();
    let lams: Vec<f64> = elems.iter().map(|e| e.lambda).collect();
    let mut r = vec![0.0; g.len()];
    let mut ex = vec![0.0; elems.len()];
    for i in 0..g.ny {
        for j in 0..g.nx {
            let k = i * g.nx + j;
            for (n, e) in elems.iter().enumerate() {
                ex[n] = e.exponent(i, j) + cs[n];
            }
            let m = ex.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mut z = 0.0;
            let mut vy = 0.0;
            for n in 0..ex.len() {
                let t = (ex[n] - m).exp();
                z += t;
                vy += t * (lams[n] * lams[n] + wy[n][k]);
            }
            let v = s.v.values[k];
            r[k] = vy / z - s.vx[k] - v * v + u.values[k];
        }
    }
    let scale = crate::grid::interior_l2(&u.values, &g);
    if scale == 0.0 {
        return Ok(crate::grid::interior_l2(&r, &g));
    }
    Ok(crate::grid::interior_l2(&r, &g) / scale)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiSpec {
    pub lambdas: Vec<f64>,
    pub cs: Vec<f64>,
}

impl MultiSpec {
    pub fn validate(&self) -> Result<()> {
        if self.lambdas.is_empty() || self.lambdas.len() != self.cs.len() {
            return Err(Error::InvalidParameter(String::from("need M >= 1 lambdas and as many phases")));
        }
        if self.lambdas.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidParameter(String::from("lambdas must be strictly increasing")));
        }
        if self.lambdas.iter().chain(&self.cs).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(String::from("non-finite spec entry")));
        }
        Ok(())
    }
}

/// Superposed field and its exact x-derivative.
#[derive(Debug, Clone)]
pub struct Superposed {
    pub v: Field2D,
    pub vx: Vec<f64>,
}

/// Normalized-weight mixture: exponents, w_j and w_j,x at one point.
fn mix(lams: &[f64], ex: &mut [f64], w: &[f64], wx: &[f64]) -> (f64, f64) {
    let m = ex.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut z = 0.0;
    for t in ex.iter_mut() {
        *t = (*t - m).exp();
        z += *t;
    }
    let mut v = 0.0;
    for n in 0..lams.len() {
        v += ex[n] / z * (lams[n] + w[n]);
    }
    let mut vx = 0.0;
    for n in 0..lams.len() {
        let d = lams[n] + w[n] - v;
        vx += ex[n] / z * (wx[n] + d * d);
    }
    (v, vx)
}

fn superpose_point(elems: &[&Elementary], cs: &[f64], i: usize, j: usize) -> (f64, f64) {
    let k = i * elems[0].w.grid.nx + j;
    let lams: Vec<f64> = elems.iter().map(|e| e.lambda).collect();
    let mut ex: Vec<f64> = elems.iter().zip(cs).map(|(e, c)| e.exponent(i, j) + c).collect();
    let w: Vec<f64> = elems.iter().map(|e| e.w.values[k]).collect();
    let wx: Vec<f64> = elems.iter().map(|e| e.wx[k]).collect();
    mix(&lams, &mut ex, &w, &wx)
}

/// v = d_x log sum_j exp(lambda_j x + lambda_j^2 y + W_j + c_j), evaluated
/// through normalized weights; v_x = sum zeta_j w_j,x + sum zeta_j (v_j - v)^2.
pub fn superpose(elems: &[&Elementary], cs: &[f64]) -> Result<Superposed> {
    if elems.is_empty() || elems.len() != cs.len() {
        return Err(Error::InvalidParameter(String::from("one phase per elementary solution")));
    }
    let g = elems[0].w.grid;
    if elems.iter().any(|e| e.w.grid != g) {
        return Err(Error::GridMismatch);
    }
    let mut v = vec![0.0; g.len()];
    let mut vx = vec![0.0; g.len()];
    for i in 0..g.ny {
        for j in 0..g.nx {
            let (a, b) = superpose_point(elems, cs, i, j);
            v[i * g.nx + j] = a;
            vx[i * g.nx + j] = b;
        }
    }
    let lam: Vec<f64> = elems.iter().map(|e| e.lambda).collect();
    let meta = if lam.len() == 1 {
        Meta::Constant(lam[0])
    } else if lam.len() == 2 && lam[0] == -1.0 && lam[1] == 1.0 {
        Meta::Kink { lambda: 1.0, shift: None }
    } else {
        Meta::Multikink
    };
    Ok(Superposed { v: Field2D::new(g, v, meta)?, vx })
}

/// Kink field tanh(x - c) + perturbation from a pair, phases (c, -c).
pub fn kink_from_pair(pair: &ElementaryPair, c: f64) -> Result<Superposed> {
    superpose(&pair.as_list(), &[c, -c])
}

/// Per-row alpha with int (v - G_alpha) dx = 0, where
/// G_alpha = eta+(x - alpha) v+ + eta-(x - alpha) v-, and omega = v - G_alpha.
pub fn modulated_decompose(v: &Field2D, pair: &ElementaryPair) -> Result<(Field2D, ShiftCurve)> {
    let g = v.grid;
    if g != pair.grid() {
        return Err(Error::GridMismatch);
    }
    let nx = g.nx;
    let dx = g.dx();
    let xs = g.xs();
    let mut alpha = vec![0.0; g.ny];
    let mut omega = vec![0.0; g.len()];
    let mut guess: Option<f64> = None;
    for i in 0..g.ny {
        let r = i * nx..(i + 1) * nx;
        let row = &v.values[r.clone()];
        let vp: Vec<f64> = pair.plus.w.values[r.clone()].iter().map(|w| 1.0 + w).collect();
        let vm: Vec<f64> = pair.minus.w.values[r].iter().map(|w| -1.0 + w).collect();
        let f = |a: f64| -> (f64, f64) {
            let mut s = 0.0;
            let mut ds = 0.0;
            for j in 0..nx {
                let x = xs[j] - a;
                s += row[j] - eta_plus(x) * vp[j] - eta_minus(x) * vm[j];
                ds += 0.5 * sech2(x) * (vp[j] - vm[j]);
            }
            (s * dx, ds * dx)
        };
        let a0 = guess.unwrap_or_else(|| zero_crossing(row, &xs));
        let (f0, _) = f(a0);
        let width = f0.abs() + 1.0;
        let mut lo = a0 - width;
        let mut hi = a0 + width;
        let mut tries = 0;
        while (f(lo).0 > 0.0 || f(hi).0 < 0.0) && tries < 8 {
            lo -= width;
            hi += width;
            tries += 1;
        }
        let a = bracketed_root(f, lo, hi, 1e-14).ok_or(Error::BracketFailure { row: i })?;
        alpha[i] = a;
        guess = Some(a);
        for j in 0..nx {
            let x = xs[j] - a;
            omega[i * nx + j] = row[j] - eta_plus(x) * vp[j] - eta_minus(x) * vm[j];
        }
    }
    Ok((Field2D::new(g, omega, Meta::None)?, ShiftCurve::new(g, alpha)?))
}

fn zero_crossing(row: &[f64], xs: &[f64]) -> f64 {
    for j in 1..row.len() {
        if row[j - 1] <= 0.0 && row[j] > 0.0 {
            return xs[j - 1] + (xs[j] - xs[j - 1]) * (-row[j - 1]) / (row[j] - row[j - 1]);
        }
    }
    0.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamDirection {
    CToGamma0,
    Gamma0ToC,
}

/// Margin kept between the mollifier centre and the x-edges.
pub const GAMMA_MARGIN: f64 = 3.0;

/// F(gamma) = int rho(x - gamma, y) v^c(x, y) and its gamma derivative.
/// Nodes sit at gamma + k dx so the x-quadrature is symmetric about the
/// mollifier centre; rows are interpolated spectrally onto them.
fn rho_moment(pair: &ElementaryPair, c: f64, gamma: f64, moll: &Mollifier) -> (f64, f64) {
    let g = pair.grid();
    let rs = g.rows();
    let dx = g.dx();
    let list = pair.as_list();
    let lams = [-1.0, 1.0];
    let cs = [c, -c];
    let j0 = ((gamma - g.x0) / dx).round();
    let delta = gamma - (g.x0 + j0 * dx);
    let kmax = (1.0 / dx).ceil() as isize + 1;
    let mut s = 0.0;
    let mut ds = 0.0;
    for i in 0..g.ny {
        let y = g.y(i);
        if y.abs() >= 1.0 {
            continue;
        }
        let r = i * g.nx..(i + 1) * g.nx;
        // f(x + delta) on the grid
        let sh = |v: &[f64]| rs.shift(&v[r.clone()], -delta);
        let prim: Vec<Vec<f64>> = list.iter().map(|e| sh(&e.primitive.values)).collect();
        let w: Vec<Vec<f64>> = list.iter().map(|e| sh(&e.w.values)).collect();
        let wx: Vec<Vec<f64>> = list.iter().map(|e| sh(&e.wx)).collect();
        for k in -kmax..=kmax {
            let xr = k as f64 * dx;
            let r2 = xr * xr + y * y;
            if r2 >= 1.0 {
                continue;
            }
            let j = (j0 as isize + k).rem_euclid(g.nx as isize) as usize;
            let x = gamma + xr;
            let mut ex = [0.0; 2];
            for n in 0..2 {
                ex[n] = lams[n] * x + y + prim[n][j] + cs[n];
            }
            let (v, vx) = mix(&lams, &mut ex, &[w[0][j], w[1][j]], &[wx[0][j], wx[1][j]]);
            let rho = moll.eval(xr, y);
            s += rho * v;
            ds += rho * vx;
        }
    }
    (s * g.cell(), ds * g.cell())
}

/// gamma_0 for phase c: the root of int rho(x - gamma_0, y) v^c = 0.
pub fn c_to_gamma0(pair: &ElementaryPair, c: f64) -> Result<f64> {
    let g = pair.grid();
    let moll = Mollifier::for_grid(&g);
    let lo_w = g.x0 + GAMMA_MARGIN;
    let hi_w = g.x0 + g.lx - GAMMA_MARGIN;
    let lo = (c - g.lx / 3.0).max(lo_w);
    let hi = (c + g.lx / 3.0).min(hi_w);
    if !(lo < hi) {
        return Err(Error::NoRoot(format!("phase {c} too close to the window edge")));
    }
    let root = bracketed_root(|gm| rho_moment(pair, c, gm, &moll), lo, hi, 1e-13)
        .ok_or_else(|| Error::NoRoot(format!("gamma_0 for phase {c}")))?;
    if root <= lo_w || root >= hi_w {
        return Err(Error::NoRoot(format!("gamma_0 = {root} outside the window margin")));
    }
    Ok(root)
}

/// Phase c whose kink has the requested gamma_0 (secant iteration).
pub fn gamma0_to_c(pair: &ElementaryPair, gamma0: f64) -> Result<f64> {
    let mut c0 = gamma0;
    let mut f0 = c_to_gamma0(pair, c0)? - gamma0;
    if f0.abs() < 1e-13 {
        return Ok(c0);
    }
    let mut c1 = gamma0 - f0;
    for _ in 0..60 {
        let f1 = c_to_gamma0(pair, c1)? - gamma0;
        if f1.abs() < 1e-13 {
            return Ok(c1);
        }
        let den = f1 - f0;
        if den == 0.0 {
            break;
        }
        let c2 = c1 - f1 * (c1 - c0) / den;
        c0 = c1;
        f0 = f1;
        c1 = c2;
        if (c1 - c0).abs() < 1e-14 {
            return Ok(c1);
        }
    }
    Err(Error::NoRoot(format!("phase for gamma_0 = {gamma0}")))
}

pub fn param_map(direction: ParamDirection, pair: &ElementaryPair, value: f64) -> Result<f64> {
    match direction {
        ParamDirection::CToGamma0 => c_to_gamma0(pair, value),
        ParamDirection::Gamma0ToC => gamma0_to_c(pair, value),
    }
}

#[derive(Debug, Clone)]
pub struct BacklundOutput {
    pub u_bar: Field2D,
    pub v: Field2D,
    pub vx: Vec<f64>,
    pub alpha: ShiftCurve,
    pub omega: Field2D,
    pub c: f64,
    pub gamma0: f64,
}

/// Transform for a given phase c, reusing a solved pair.
pub fn add_with_phase(pair: &ElementaryPair, c: f64) -> Result<(Superposed, Field2D)> {
    let s = kink_from_pair(pair, c)?;
    let u = &pair.u;
    let values = u.values.iter().zip(&s.vx).map(|(a, b)| a - 2.0 * b).collect();
    let ub = Field2D::new(u.grid, values, Meta::None)?;
    Ok((s, ub))
}

pub fn soliton_add_with_pair(pair: &ElementaryPair, gamma0: f64) -> Result<BacklundOutput> {
    let c = gamma0_to_c(pair, gamma0)?;
    let (s, u_bar) = add_with_phase(pair, c)?;
    let (omega, alpha) = modulated_decompose(&s.v, pair)?;
    let v = s.v.with_meta(Meta::Kink { lambda: 1.0, shift: Some(alpha.values.clone()) });
    Ok(BacklundOutput { u_bar, v, vx: s.vx, alpha, omega, c, gamma0 })
}

/// u - 2 d_x v with v the kink solution of the Miura equation at gamma_0.
pub fn soliton_add(u: &Field2D, gamma0: f64, opts: &SolveOptions) -> Result<BacklundOutput> {
    let pair = elementary_pair(u, opts)?;
    soliton_add_with_pair(&pair, gamma0)
}

/// u - 2 d_x of the multikink superposition of elementary solutions.
pub fn multisoliton_add(u: &Field2D, spec: &MultiSpec, opts: &SolveOptions) -> Result<Field2D> {
    spec.validate()?;
    guard(u, opts)?;
    let elems: Vec<Elementary> =
        spec.lambdas.iter().map(|&l| Elementary::solve(u, l, opts)).collect::<Result<_>>()?;
    let refs: Vec<&Elementary> = elems.iter().collect();
    let s = superpose(&refs, &spec.cs)?;
    let values = u.values.iter().zip(&s.vx).map(|(a, b)| a - 2.0 * b).collect();
    Field2D::new(u.grid, values, Meta::None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use crate::profiles::soliton;

    fn grid() -> Grid2D {
        make_grid(256, 256, 40.0, 40.0, -20.0, -20.0).unwrap()
    }

    #[test]
    fn zero_forcing_gives_tanh_and_soliton() {
        let g = grid();
        let pair = elementary_pair(&Field2D::zeros(g), &SolveOptions::default()).unwrap();
        let s = kink_from_pair(&pair, 1.2).unwrap();
        for i in (0..g.ny).step_by(17) {
            for j in 0..g.nx {
                assert!((s.v.at(i, j) - (g.x(j) - 1.2).tanh()).abs() < 1e-12);
            }
        }
        for gm in [0.0, 2.5] {
            let out = soliton_add(&Field2D::zeros(g), gm, &SolveOptions::default()).unwrap();
            assert!((out.c - gm).abs() < 1e-9);
            for i in (0..g.ny).step_by(13) {
                for j in 0..g.nx {
                    assert!((out.u_bar.at(i, j) - soliton(1.0, g.x(j) - gm)).abs() < 1e-9);
                }
                assert!((out.alpha.values[i] - gm).abs() < 1e-9);
            }
            assert!(out.omega.linf() < 1e-9);
        }
        assert!((c_to_gamma0(&pair, 1.5).unwrap() - 1.5).abs() < 1e-9);
        assert!((gamma0_to_c(&pair, -2.0).unwrap() + 2.0).abs() < 1e-9);
    }

    #[test]
    fn constant_and_multikink() {
        let g = grid();
        let u = Field2D::zeros(g);
        let e = Elementary::solve(&u, 0.7, &SolveOptions::default()).unwrap();
        let s = superpose(&[&e], &[0.3]).unwrap();
        assert!(s.v.values.iter().all(|v| (v - 0.7).abs() < 1e-15));
        let spec = MultiSpec { lambdas: vec![0.7], cs: vec![0.0] };
        assert_eq!(multisoliton_add(&u, &spec, &SolveOptions::default()).unwrap().linf(), 0.0);
        let els: Vec<Elementary> =
            [-1.0, 0.0, 1.0].iter().map(|&l| Elementary::solve(&u, l, &SolveOptions::default()).unwrap()).collect();
        let refs: Vec<&Elementary> = els.iter().collect();
        let s = superpose(&refs, &[0.0, 0.0, 0.0]).unwrap();
        for i in (0..g.ny).step_by(11) {
            for j in 0..g.nx {
                let (x, y) = (g.x(j), g.y(i));
                let a = [-x + y, 0.0, x + y];
                let m = a.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let e: Vec<f64> = a.iter().map(|t| (t - m).exp()).collect();
                let exact = (e[2] - e[0]) / (e[0] + e[1] + e[2]);
                assert!((s.v.at(i, j) - exact).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn small_forcing_lax_and_decomposition() {
        let g = make_grid(512, 512, 40.0, 40.0, -20.0, -20.0).unwrap();
        let eps = 0.01;
        let u = Field2D::from_fn(g, |x, y| eps * -2.0 * x / 4.0 * (-(x * x + y * y) / 4.0).exp());
        let pair = elementary_pair(&u, &SolveOptions::default()).unwrap();
        for e in pair.as_list() {
            let r = lax_relative_residual(&[e], &[0.0], &u).unwrap();
            assert!(r < 1e-5, "{r}");
        }
        let r = lax_relative_residual(&pair.as_list(), &[0.3, -0.3], &u).unwrap();
        assert!(r < 1e-5, "{r}");
        let out = soliton_add_with_pair(&pair, 0.0).unwrap();
        assert!((c_to_gamma0(&pair, out.c).unwrap()).abs() < 1e-10);
        let dx = g.dx();
        for i in 0..g.ny {
            let s: f64 = out.omega.row(i).iter().sum::<f64>() * dx;
            assert!(s.abs() < 1e-10);
        }
        assert!(out.alpha.values.iter().all(|a| a.abs() < 0.1));
    }

    #[test]
    fn sandwich_with_zero_forcing() {
        let g = grid();
        let pair = elementary_pair(&Field2D::zeros(g), &SolveOptions::default()).unwrap();
        let dx = g.dx();
        let xs = g.xs();
        let gsum = |a: f64| xs.iter().map(|x| eta_plus(x - a) - eta_minus(x - a)).sum::<f64>() * dx;
        let (a, b) = (-0.7, 1.3);
        let d = gsum(a) - gsum(b);
        assert!((d - 2.0 * (b - a)).abs() < 1e-9);
        assert!(d >= b - a && d <= 3.0 * (b - a));
        let v = Field2D::from_fn(g, |x, _| (x - 0.4).tanh()).with_meta(Meta::Kink { lambda: 1.0, shift: None });
        let (om, al) = modulated_decompose(&v, &pair).unwrap();
        assert!(al.values.iter().all(|a| (a - 0.4).abs() < 1e-12));
        assert!(om.linf() < 1e-12);
    }
}
