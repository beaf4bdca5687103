//! Integrating-factor RK4 for KP-II on the periodic window, in the lab frame
//! and in the frame moving with a unit line soliton.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex64;
use num_traits::Float;

use crate::error::{Error, Result};
use crate::grid::{sech2, Field2D, Grid2D, Meta, ShiftCurve};
use crate::spectral::Spectral2;

/// Blow-up threshold on the sup norm.
pub const BLOWUP: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Frame {
    Lab,
    /// Moving with speed 4 around the line soliton.
    Comoving,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolveOptions {
    /// Negative values integrate backwards in time.
    pub dt: f64,
    pub t_final: f64,
    pub frame: Frame,
    pub dealias: bool,
    pub save_every: usize,
    /// Test hooks: switch off the quadratic term or the dispersive symbol.
    pub nonlinear: bool,
    pub dispersion: bool,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        EvolveOptions {
            dt: 1e-3,
            t_final: 1.0,
            frame: Frame::Lab,
            dealias: true,
            save_every: 100,
            nonlinear: true,
            dispersion: true,
        }
    }
}

impl EvolveOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt != 0.0) {
            return Err(Error::InvalidParameter(String::from("dt must be finite and nonzero")));
        }
        if !(self.t_final.is_finite() && self.t_final >= 0.0) {
            return Err(Error::InvalidParameter(String::from("T must be finite and >= 0")));
        }
        if self.save_every == 0 {
            return Err(Error::InvalidParameter(String::from("save_every must be >= 1")));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.t_final / self.dt.abs() + 1e-9).floor() as usize
    }

    /// Largest admissible |dt| for a field with sup norm `linf`.
    pub fn cfl_bound(grid: &Grid2D, linf: f64) -> f64 {
        if linf == 0.0 {
            f64::INFINITY
        } else {
            0.5 * grid.dx() / (6.0 * linf)
        }
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub frame: Frame,
    pub times: Vec<f64>,
    pub snapshots: Vec<Field2D>,
    pub mass: Vec<f64>,
    pub l2: Vec<f64>,
    pub warnings: Vec<String>,
}

impl Trajectory {
    fn push(&mut self, t: f64, f: Field2D) {
        let cell = f.grid.cell();
        self.mass.push(f.values.iter().sum::<f64>() * cell);
        self.l2.push((f.values.iter().map(|v| v * v).sum::<f64>() * cell).sqrt());
        self.times.push(t);
        self.snapshots.push(f);
    }

    /// |l2(end) - l2(0)| / l2(0).
    pub fn l2_drift(&self) -> f64 {
        let a = self.l2[0];
        let b = *self.l2.last().unwrap_or(&a);
        if a == 0.0 {
            b
        } else {
            (b - a).abs() / a
        }
    }
}

struct Stepper {
    sp: Spectral2,
    grid: Grid2D,
    e: Vec<Complex64>,
    e2: Vec<Complex64>,
    ik: Vec<Complex64>,
    keep: Vec<bool>,
    mask: Vec<bool>,
    background: Option<Vec<f64>>,
    source: Option<Vec<Complex64>>,
    nonlinear: bool,
    dt: f64,
}

impl Stepper {
    fn new(grid: Grid2D, opts: &EvolveOptions, comoving: bool) -> Self {
        let sp = grid.spectral2();
        let (nx, ny) = (grid.nx, grid.ny);
        let n = grid.len();
        let mut e = vec![Complex64::new(1.0, 0.0); n];
        let mut e2 = e.clone();
        let mut ik = vec![Complex64::new(0.0, 0.0); n];
        let mut keep = vec![true; n];
        let mut mask = vec![true; n];
        let kmax = sp.rows.wavenumber(nx / 2);
        let lmax = sp.wavenumber_y(ny / 2);
        for i in 0..ny {
            let l = sp.wavenumber_y(i);
            for j in 0..nx {
                let q = i * nx + j;
                let k = sp.rows.wavenumber(j);
                let nyq = j == nx / 2 || (ny > 1 && i == ny / 2);
                keep[q] = !nyq && !(j == 0 && i != 0);
                if opts.dealias {
                    mask[q] = 3.0 * k.abs() < 2.0 * kmax && 3.0 * l.abs() < 2.0 * lmax;
                }
                if !keep[q] {
                    continue;
                }
                ik[q] = Complex64::new(0.0, k);
                let mut w = 0.0;
                if opts.dispersion && j != 0 {
                    w = k * k * k - 3.0 * l * l / k;
                    if comoving {
                        w += 4.0 * k;
                    }
                }
                let z = Complex64::new(0.0, w * opts.dt);
                e[q] = z.exp();
                e2[q] = (z * 0.5).exp();
            }
        }
        Stepper {
            sp,
            grid,
            e,
            e2,
            ik,
            keep,
            mask,
            background: None,
            source: None,
            nonlinear: opts.nonlinear,
            dt: opts.dt,
        }
    }

    fn project(&self, z: &mut [Complex64]) {
        for (v, &k) in z.iter_mut().zip(&self.keep) {
            if !k {
                *v = Complex64::new(0.0, 0.0);
            }
        }
    }

    /// Nonlinear and source terms; also returns the sup of the full field.
    fn rhs(&self, hat: &[Complex64]) -> (Vec<Complex64>, f64) {
        let n = hat.len();
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        let mut sup = 0.0f64;
        if self.nonlinear {
            let u = self.sp.inverse_real_packed(hat);
            let q: Vec<f64> = match &self.background {
                Some(b) => u
                    .iter()
                    .zip(b)
                    .map(|(g, p)| {
                        sup = sup.max((g + p).abs());
                        g * (g + 2.0 * p)
                    })
                    .collect(),
                None => u
                    .iter()
                    .map(|g| {
                        sup = sup.max(g.abs());
                        g * g
                    })
                    .collect(),
            };
            let qh = self.sp.forward_real_packed(&q);
            for idx in 0..n {
                if self.keep[idx] && self.mask[idx] {
                    out[idx] = self.ik[idx] * qh[idx] * 3.0;
                }
            }
        }
        if let Some(s) = &self.source {
            for (o, v) in out.iter_mut().zip(s) {
                *o += v;
            }
        }
        (out, sup)
    }

    fn step(&self, u: &mut [Complex64], t: f64) -> Result<()> {
        let h = self.dt;
        let (k1, sup) = self.rhs(u);
        if sup > BLOWUP || !sup.is_finite() {
            return Err(Error::BlowUp { t });
        }
        let bound = EvolveOptions::cfl_bound(&self.grid, sup);
        if h.abs() > bound {
            return Err(Error::Cfl { dt: h.abs(), bound });
        }
        let n = u.len();
        let mut tmp = vec![Complex64::new(0.0, 0.0); n];
        for q in 0..n {
            tmp[q] = self.e2[q] * (u[q] + k1[q] * (h / 2.0));
        }
        let (k2, _) = self.rhs(&tmp);
        for q in 0..n {
            tmp[q] = self.e2[q] * u[q] + k2[q] * (h / 2.0);
        }
        let (k3, _) = self.rhs(&tmp);
        for q in 0..n {
            tmp[q] = self.e[q] * u[q] + self.e2[q] * k3[q] * h;
        }
        let (k4, _) = self.rhs(&tmp);
        for q in 0..n {
            let inc = self.e[q] * k1[q] + self.e2[q] * (k2[q] + k3[q]) * 2.0 + k4[q];
            u[q] = self.e[q] * u[q] + inc * (h / 6.0);
        }
        self.project(u);
        Ok(())
    }

    fn run(&self, u0: &Field2D, opts: &EvolveOptions, frame: Frame, warnings: Vec<String>) -> Result<Trajectory> {
        let mut hat = self.sp.forward_real_packed(&u0.values);
        self.project(&mut hat);
        let mut traj = Trajectory {
            frame,
            times: Vec::new(),
            snapshots: Vec::new(),
            mass: Vec::new(),
            l2: Vec::new(),
            warnings,
        };
        let field = |hat: &[Complex64]| Field2D::new(self.grid, self.sp.inverse_real_packed(hat), Meta::None);
        traj.push(0.0, field(&hat)?);
        let steps = opts.steps();
        for s in 1..=steps {
            let t = (s - 1) as f64 * opts.dt;
            self.step(&mut hat, t)?;
            if s % opts.save_every == 0 {
                let f = field(&hat)?;
                if f.linf() > BLOWUP {
                    return Err(Error::BlowUp { t: t + opts.dt });
                }
                traj.push(s as f64 * opts.dt, f);
            }
        }
        Ok(traj)
    }
}

/// Removes the y-varying part of the row means, which the inverse
/// x-derivative cannot act on. The (0, 0) mode is kept.
fn mean_free_rows(u: &Field2D, warnings: &mut Vec<String>) -> Field2D {
    let g = u.grid;
    let means: Vec<f64> = (0..g.ny).map(|i| u.row(i).iter().sum::<f64>() / g.nx as f64).collect();
    let avg = means.iter().sum::<f64>() / g.ny as f64;
    let dev = means.iter().fold(0.0f64, |m, v| m.max((v - avg).abs()));
    if dev <= 1e-10 {
        return u.clone();
    }
    warnings.push(format!("row means vary by {dev:.3e}; projected out"));
    let mut v = u.values.clone();
    for i in 0..g.ny {
        for x in &mut v[i * g.nx..(i + 1) * g.nx] {
            *x -= means[i] - avg;
        }
    }
    Field2D { grid: g, values: v, meta: Meta::None }
}

pub fn evolve(u0: &Field2D, opts: &EvolveOptions) -> Result<Trajectory> {
    opts.validate()?;
    match opts.frame {
        Frame::Lab => {
            let mut warnings = Vec::new();
            let u = mean_free_rows(u0, &mut warnings);
            Stepper::new(u0.grid, opts, false).run(&u, opts, Frame::Lab, warnings)
        }
        Frame::Comoving => evolve_with_soliton(u0, &ShiftCurve::constant(u0.grid, 0.0), opts),
    }
}

/// Evolves g with u = phi(x - 4t - alpha(y)) + g(x - 4t, y, t); snapshots
/// hold g in the moving frame.
pub fn evolve_with_soliton(g0: &Field2D, alpha: &ShiftCurve, opts: &EvolveOptions) -> Result<Trajectory> {
    opts.validate()?;
    let g = g0.grid;
    if alpha.grid != g || alpha.values.len() != g.ny {
        return Err(Error::GridMismatch);
    }
    g0.check_decay("perturbation")?;
    let mut warnings = Vec::new();
    let u = mean_free_rows(g0, &mut warnings);
    let mut st = Stepper::new(g, opts, true);
    let (ay, ayy) = periodic_derivatives(&alpha.values, g.ly);
    let mut phi = vec![0.0; g.len()];
    let mut src = vec![0.0; g.len()];
    for i in 0..g.ny {
        for j in 0..g.nx {
            let x = g.x(j) - alpha.values[i];
            let s2 = sech2(x);
            let p = -2.0 * s2;
            let px = 4.0 * s2 * x.tanh();
            phi[i * g.nx + j] = p;
            src[i * g.nx + j] = -3.0 * (ay[i] * ay[i] * px - ayy[i] * p);
        }
    }
    st.background = Some(phi);
    if src.iter().any(|v| *v != 0.0) {
        let mut sh = st.sp.forward_real_packed(&src);
        st.project(&mut sh);
        st.source = Some(sh);
    }
    st.run(&u, opts, Frame::Comoving, warnings)
}

/// First and second derivatives of a periodic sample.
fn periodic_derivatives(v: &[f64], ly: f64) -> (Vec<f64>, Vec<f64>) {
    let n = v.len();
    let rs = crate::spectral::RowSpectral::new(n, ly);
    (rs.dx(v), rs.dxx(v))
}

/// Least-squares speed of the minimum of the y-averaged profile.
pub fn lab_soliton_speed(traj: &Trajectory) -> Result<f64> {
    if traj.snapshots.len() < 2 {
        return Err(Error::InvalidParameter(String::from("need at least two snapshots")));
    }
    let g = traj.snapshots[0].grid;
    let mut pos: Vec<f64> = Vec::with_capacity(traj.snapshots.len());
    for f in &traj.snapshots {
        let mut p = vec![0.0; g.nx];
        for i in 0..g.ny {
            for (a, b) in p.iter_mut().zip(f.row(i)) {
                *a += b / g.ny as f64;
            }
        }
        let j = (0..g.nx).min_by(|&a, &b| p[a].total_cmp(&p[b])).unwrap_or(0);
        let mean_abs = p.iter().map(|v| v.abs()).sum::<f64>() / g.nx as f64;
        if !(p[j] < -1e-3 && -p[j] > 5.0 * mean_abs) {
            return Err(Error::NoSoliton);
        }
        let (a, b, c) = (p[(j + g.nx - 1) % g.nx], p[j], p[(j + 1) % g.nx]);
        let den = a - 2.0 * b + c;
        let off = if den > 0.0 { 0.5 * (a - c) / den } else { 0.0 };
        let mut x = g.x(j) + off * g.dx();
        if let Some(&prev) = pos.last() {
            while x - prev > g.lx / 2.0 {
                x -= g.lx;
            }
            while prev - x > g.lx / 2.0 {
                x += g.lx;
            }
        }
        pos.push(x);
    }
    let n = pos.len() as f64;
    let tm = traj.times.iter().sum::<f64>() / n;
    let xm = pos.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (t, x) in traj.times.iter().zip(&pos) {
        sxy += (t - tm) * (x - xm);
        sxx += (t - tm) * (t - tm);
    }
    Ok(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use crate::profiles::soliton;
    use core::f64::consts::PI;

    fn grid(n: usize) -> Grid2D {
        make_grid(n, n, 40.0, 40.0, -20.0, -20.0).unwrap()
    }

    fn bump(g: Grid2D, eps: f64) -> Field2D {
        Field2D::from_fn(g, |x, y| eps * -2.0 * x / 8.0 * (-(x * x + y * y) / 8.0).exp())
    }

    #[test]
    fn zero_stays_zero() {
        let g = grid(32);
        let opts = EvolveOptions { t_final: 0.01, save_every: 5, ..Default::default() };
        let tr = evolve(&Field2D::zeros(g), &opts).unwrap();
        assert_eq!(tr.snapshots.len(), 3);
        assert!(tr.snapshots.iter().all(|f| f.linf() == 0.0));
        let tr = evolve_with_soliton(&Field2D::zeros(g), &ShiftCurve::constant(g, 0.0), &opts).unwrap();
        assert!(tr.snapshots.iter().all(|f| f.linf() == 0.0));
    }

    #[test]
    fn linear_mode_rotates_by_symbol() {
        let g = grid(32);
        let (k, l) = (2.0 * PI / g.lx, 2.0 * PI / g.ly);
        let u0 = Field2D::from_fn(g, |x, y| (k * (x - g.x0)).sin() * (l * (y - g.y0)).cos());
        let dt = 0.01;
        let opts = EvolveOptions { dt, t_final: dt, save_every: 1, nonlinear: false, ..Default::default() };
        let tr = evolve(&u0, &opts).unwrap();
        let w = k * k * k - 3.0 * l * l / k;
        let u1 = &tr.snapshots[1];
        for i in 0..g.ny {
            for j in 0..g.nx {
                let (x, y) = (g.x(j) - g.x0, g.y(i) - g.y0);
                // sin(kx)cos(ly) split into exp(+-i l y) waves, each rotating by w
                let exact = (k * x + w * dt).sin() * (l * y).cos();
                assert!((u1.at(i, j) - exact).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn conservation_and_reversibility() {
        let g = grid(128);
        let u0 = bump(g, 0.01);
        let opts = EvolveOptions { dt: 2e-3, t_final: 0.2, save_every: 50, ..Default::default() };
        let tr = evolve(&u0, &opts).unwrap();
        assert!(tr.l2_drift() < 1e-8);
        let last = tr.snapshots.last().unwrap();
        let back = evolve(last, &EvolveOptions { dt: -2e-3, ..opts.clone() }).unwrap();
        let end = back.snapshots.last().unwrap();
        let d: f64 = end.values.iter().zip(&u0.values).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let n: f64 = u0.values.iter().map(|a| a * a).sum::<f64>().sqrt();
        assert!(d / n < 1e-6);
        for f in &tr.snapshots {
            for i in 0..g.ny {
                assert!(f.row(i).iter().sum::<f64>().abs() < 1e-10 * g.nx as f64);
            }
        }
    }

    #[test]
    fn soliton_speed_and_scaling() {
        let g = make_grid(256, 16, 40.0, 10.0, -20.0, -5.0).unwrap();
        for lam in [1.0, 0.8] {
            let u0 = Field2D::from_fn(g, |x, _| soliton(lam, x + 5.0));
            let opts = EvolveOptions { dt: 1e-3, t_final: 0.5, save_every: 50, ..Default::default() };
            let tr = evolve(&u0, &opts).unwrap();
            let c = lab_soliton_speed(&tr).unwrap();
            assert!((c - 4.0 * lam * lam).abs() < 0.02, "{lam} {c}");
        }
        let u0 = Field2D::from_fn(g, |x, _| soliton(1.0, x));
        let opts = EvolveOptions {
            t_final: 0.1,
            save_every: 20,
            nonlinear: false,
            dispersion: false,
            ..Default::default()
        };
        assert!(lab_soliton_speed(&evolve(&u0, &opts).unwrap()).unwrap().abs() < 1e-12);
        assert!(matches!(lab_soliton_speed(&evolve(&Field2D::zeros(g), &opts).unwrap()), Err(Error::NoSoliton)));
    }

    #[test]
    fn frames_agree() {
        let g = make_grid(256, 64, 40.0, 40.0, -20.0, -20.0).unwrap();
        let g0 = bump(g, 0.01);
        let opts = EvolveOptions { dt: 1e-3, t_final: 0.25, save_every: 250, ..Default::default() };
        let co = evolve_with_soliton(&g0, &ShiftCurve::constant(g, 0.0), &opts).unwrap();
        let u0 = g0.zip(&Field2D::from_fn(g, |x, _| soliton(1.0, x)), |a, b| a + b).unwrap();
        let lab = evolve(&u0, &opts).unwrap();
        let t = 0.25;
        let shifted = g.rows().shift(&co.snapshots[1].values, 4.0 * t);
        let ul = &lab.snapshots[1];
        let mut d = 0.0;
        let mut n = 0.0;
        for i in 0..g.ny {
            for j in 0..g.nx {
                let full = shifted[i * g.nx + j] + soliton(1.0, g.x(j) - 4.0 * t);
                d += (full - ul.at(i, j)).powi(2);
                n += ul.at(i, j).powi(2);
            }
        }
        assert!((d / n).sqrt() < 1e-5, "{}", (d / n).sqrt());
    }

    #[test]
    fn comoving_translation_mode() {
        let g = make_grid(256, 32, 40.0, 20.0, -20.0, -10.0).unwrap();
        let delta = 0.1;
        let g0 = Field2D::from_fn(g, |x, _| soliton(1.0, x - delta) - soliton(1.0, x));
        let opts = EvolveOptions { dt: 1e-3, t_final: 0.2, save_every: 200, ..Default::default() };
        let tr = evolve_with_soliton(&g0, &ShiftCurve::constant(g, 0.0), &opts).unwrap();
        let d = tr.snapshots[1].zip(&g0, |a, b| a - b).unwrap().linf();
        assert!(d < 1e-6, "{d}");
        let small = Field2D::from_fn(g, |x, y| 0.01 * (-(x * x + y * y) / 8.0).exp());
        let tr = evolve_with_soliton(&small, &ShiftCurve::constant(g, 0.0), &opts).unwrap();
        assert!(tr.l2[1] < 3.0 * tr.l2[0] && tr.l2[1] > tr.l2[0] / 3.0);
    }
}
