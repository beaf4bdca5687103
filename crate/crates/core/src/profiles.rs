//! Closed-form profiles and the Miura maps.

use alloc::vec::Vec;
use num_traits::Float;

use crate::error::{Error, Result};
use crate::grid::{check_decay, cumulative_from_left, sech2, Field2D, Grid2D, Meta, ShiftCurve};
use crate::quad::d_rows;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProfileKind {
    Soliton,
    Kink,
    EtaPlus,
    EtaMinus,
    Sech2,
    Mollifier,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProfileParams {
    pub lambda: f64,
    pub x_shift: f64,
    pub shift_curve: Option<ShiftCurve>,
}

impl ProfileParams {
    pub fn unit() -> Self {
        ProfileParams { lambda: 1.0, x_shift: 0.0, shift_curve: None }
    }

    pub fn shifted(x_shift: f64) -> Self {
        ProfileParams { lambda: 1.0, x_shift, shift_curve: None }
    }
}

/// -2 lambda^2 sech^2(lambda x)
pub fn soliton(lambda: f64, x: f64) -> f64 {
    -2.0 * lambda * lambda * sech2(lambda * x)
}

/// lambda tanh(lambda x)
pub fn kink(lambda: f64, x: f64) -> f64 {
    lambda * (lambda * x).tanh()
}

pub fn eta_plus(x: f64) -> f64 {
    0.5 * (1.0 + x.tanh())
}

pub fn eta_minus(x: f64) -> f64 {
    0.5 * (1.0 - x.tanh())
}

fn bump(r2: f64) -> f64 {
    if r2 < 1.0 {
        (-1.0 / (1.0 - r2)).exp()
    } else {
        0.0
    }
}

/// Radial bump normalized to unit mass by quadrature on a grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mollifier {
    pub scale: f64,
}

impl Mollifier {
    pub fn for_grid(g: &Grid2D) -> Self {
        let mut s = 0.0;
        for i in 0..g.ny {
            let y = g.y(i);
            if y.abs() >= 1.0 {
                continue;
            }
            for j in 0..g.nx {
                let x = g.x(j);
                s += bump(x * x + y * y);
            }
        }
        Mollifier { scale: 1.0 / (s * g.cell()) }
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        self.scale * bump(x * x + y * y)
    }
}

/// Samples f(x - x_shift - s(y)) for the chosen profile.
pub fn eval_profile(kind: ProfileKind, params: &ProfileParams, grid: &Grid2D) -> Result<Field2D> {
    let lam = params.lambda;
    if !(lam > 0.0 && lam.is_finite()) {
        return Err(Error::InvalidParameter(alloc::string::String::from("lambda must be positive")));
    }
    if let Some(c) = &params.shift_curve {
        if c.values.len() != grid.ny {
            return Err(Error::InvalidParameter(alloc::string::String::from(
                "shift curve length does not match the grid",
            )));
        }
    }
    let moll = if kind == ProfileKind::Mollifier { Some(Mollifier::for_grid(grid)) } else { None };
    let mut values = Vec::with_capacity(grid.len());
    for i in 0..grid.ny {
        let y = grid.y(i);
        let s = params.x_shift + params.shift_curve.as_ref().map_or(0.0, |c| c.values[i]);
        for j in 0..grid.nx {
            let x = grid.x(j) - s;
            values.push(match kind {
                ProfileKind::Soliton => soliton(lam, x),
                ProfileKind::Kink => kink(lam, x),
                ProfileKind::EtaPlus => eta_plus(lam * x),
                ProfileKind::EtaMinus => eta_minus(lam * x),
                ProfileKind::Sech2 => sech2(lam * x),
                ProfileKind::Mollifier => moll.unwrap().eval(x, y),
            });
        }
    }
    let meta = match kind {
        ProfileKind::Kink => {
            let shift: Vec<f64> = (0..grid.ny)
                .map(|i| params.x_shift + params.shift_curve.as_ref().map_or(0.0, |c| c.values[i]))
                .collect();
            Meta::Kink { lambda: lam, shift: Some(shift) }
        }
        _ => Meta::None,
    };
    Field2D::new(*grid, values, meta)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MiuraSign {
    Plus,
    Minus,
}

/// -(d_x^{-1} v_y +- v_x - v^2 + lambda^2), with d_x^{-1} v_y fixed by decay
/// at the left edge.
pub fn miura_apply(sign: MiuraSign, lambda: f64, v: &Field2D) -> Result<Field2D> {
    let g = v.grid;
    let vy = d_rows(&v.values, g.nx, g.dy(), 1, 7);
    check_decay(&vy, g.nx, "v_y")?;
    let inv_vy = cumulative_from_left(&g.rows(), &vy, g);
    let vx = v.dx()?;
    let s = match sign {
        MiuraSign::Plus => 1.0,
        MiuraSign::Minus => -1.0,
    };
    let values = (0..g.len())
        .map(|k| {
            let w = v.values[k];
            -(inv_vy[k] + s * vx[k] - w * w + lambda * lambda)
        })
        .collect();
    Field2D::new(g, values, Meta::None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    fn grid() -> Grid2D {
        make_grid(256, 32, 40.0, 8.0, -20.0, -4.0).unwrap()
    }

    #[test]
    fn profile_values() {
        let g = make_grid(64, 16, 40.0, 8.0, -20.0, -4.0).unwrap();
        let s = eval_profile(ProfileKind::Soliton, &ProfileParams::unit(), &g).unwrap();
        assert_eq!(s.at(0, 32), -2.0);
        let k = eval_profile(ProfileKind::Kink, &ProfileParams::unit(), &g).unwrap();
        assert_eq!(k.at(0, 32), 0.0);
        assert!((k.at(0, 63) - 1.0).abs() < 1e-12);
        let m = eval_profile(ProfileKind::Mollifier, &ProfileParams::unit(), &grid()).unwrap();
        let (_, mass) = crate::grid::integrate_and_norms(&m);
        assert!((mass - 1.0).abs() < 1e-8);
    }

    #[test]
    fn kink_identities() {
        let g = grid();
        let q = eval_profile(ProfileKind::Kink, &ProfileParams::unit(), &g).unwrap();
        let m = miura_apply(MiuraSign::Minus, 1.0, &q).unwrap();
        assert!(m.linf() < 1e-8);
        let p = miura_apply(MiuraSign::Plus, 1.0, &q).unwrap();
        let phi = eval_profile(ProfileKind::Soliton, &ProfileParams::unit(), &g).unwrap();
        let d = p.zip(&phi, |a, b| a - b).unwrap();
        assert!(d.linf() < 1e-8);
    }

    #[test]
    fn constants_are_killed() {
        let g = grid();
        let one = Field2D::from_fn(g, |_, _| 1.0).with_meta(Meta::Constant(1.0));
        for s in [MiuraSign::Plus, MiuraSign::Minus] {
            assert!(miura_apply(s, 1.0, &one).unwrap().linf() < 1e-12);
        }
    }
}
