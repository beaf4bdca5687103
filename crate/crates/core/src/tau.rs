//! Exact multisoliton fields from Wronskian tau functions.
//!
//! For f_n = sum_m A[n][m] exp(theta_m) the Wronskian expands by
//! Binet-Cauchy into sum_I det(A_I) V(lambda_I) exp(sum_{m in I} theta_m),
//! with V the Vandermonde product, so log tau is a log-sum-exp over column
//! sets and its x-derivatives are moments of the normalized weights.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use num_traits::Float;

use crate::error::{Error, Result};
use crate::grid::{Field2D, Grid2D, Meta};

#[derive(Debug, Clone, PartialEq)]
pub struct TauSpec {
    pub m: usize,
    pub n: usize,
    /// N rows of length M.
    pub a: Vec<Vec<f64>>,
    pub lambdas: Vec<f64>,
    pub theta0: Vec<f64>,
}

impl TauSpec {
    /// Single-row spec A = (e^{c_1}, ..., e^{c_M}) written as unit
    /// coefficients with the phases moved into theta0.
    pub fn line(lambdas: Vec<f64>, phases: Vec<f64>) -> Self {
        let m = lambdas.len();
        TauSpec { m, n: 1, a: vec![vec![1.0; m]], lambdas, theta0: phases }
    }

    pub fn check_shape(&self) -> Result<()> {
        let bad = |s: &str| Err(Error::InvalidParameter(String::from(s)));
        if !(self.n > 0 && self.n < self.m) {
            return bad("need 0 < N < M");
        }
        if self.a.len() != self.n || self.a.iter().any(|r| r.len() != self.m) {
            return bad("A must be N x M");
        }
        if self.lambdas.len() != self.m || self.theta0.len() != self.m {
            return bad("lambdas and theta0 need M entries");
        }
        if self.lambdas.windows(2).any(|w| !(w[0] < w[1])) {
            return bad("lambdas must be strictly increasing");
        }
        let all = self.a.iter().flatten().chain(&self.lambdas).chain(&self.theta0);
        if all.into_iter().any(|v| !v.is_finite()) {
            return bad("non-finite spec entry");
        }
        Ok(())
    }

    pub fn phase(&self, k: usize, x: f64, y: f64, t: f64) -> f64 {
        let l = self.lambdas[k];
        l * x + l * l * y - 4.0 * l * l * l * t + self.theta0[k]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    /// (M - N, N): incoming and outgoing line counts.
    pub label: (usize, usize),
    /// Every N x N minor with its column set.
    pub minors: Vec<(Vec<usize>, f64)>,
    /// False when A has a zero column or, in reduced row-echelon form, a
    /// row with a single nonzero entry.
    pub irreducible: bool,
}

/// Column sets of size k from 0..m in lexicographic order.
pub fn combinations(m: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..k).collect();
    if k > m {
        return out;
    }
    loop {
        out.push(idx.clone());
        let mut i = k;
        while i > 0 && idx[i - 1] == m - k + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return out;
        }
        idx[i - 1] += 1;
        for j in i..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Determinant by Gaussian elimination with partial pivoting.
pub fn det(mut a: Vec<Vec<f64>>) -> f64 {
    let n = a.len();
    let mut d = 1.0;
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap_or(c);
        if a[p][c] == 0.0 {
            return 0.0;
        }
        if p != c {
            a.swap(p, c);
            d = -d;
        }
        d *= a[c][c];
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            for k in c..n {
                a[r][k] -= f * a[c][k];
            }
        }
    }
    d
}

fn minor(spec: &TauSpec, cols: &[usize]) -> f64 {
    det(spec.a.iter().map(|r| cols.iter().map(|&c| r[c]).collect()).collect())
}

fn is_irreducible(spec: &TauSpec, tol: f64) -> bool {
    let mut a = spec.a.clone();
    let (n, m) = (spec.n, spec.m);
    for c in 0..m {
        if a.iter().all(|r| r[c].abs() <= tol) {
            return false;
        }
    }
    let mut row = 0;
    for c in 0..m {
        if row == n {
            break;
        }
        let p = (row..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap_or(row);
        if a[p][c].abs() <= tol {
            continue;
        }
        a.swap(p, row);
        let piv = a[row][c];
        for v in a[row].iter_mut() {
            *v /= piv;
        }
        for r in 0..n {
            if r != row {
                let f = a[r][c];
                for k in 0..m {
                    a[r][k] -= f * a[row][k];
                }
            }
        }
        row += 1;
    }
    a.iter().all(|r| r.iter().filter(|v| v.abs() > tol).count() >= 2)
}

pub fn validate_spec(spec: &TauSpec) -> Result<Classification> {
    spec.check_shape()?;
    let scale = spec.a.iter().flatten().fold(0.0f64, |s, v| s.max(v.abs()));
    let tol = 1e-12 * scale.powi(spec.n as i32).max(f64::MIN_POSITIVE);
    let minors: Vec<(Vec<usize>, f64)> =
        combinations(spec.m, spec.n).into_iter().map(|c| {
            let d = minor(spec, &c);
            (c, d)
        }).collect();
    if let Some((cols, v)) = minors.iter().find(|(_, v)| *v < -tol) {
        return Err(Error::NegativeMinor { columns: cols.clone(), value: *v });
    }
    if minors.iter().all(|(_, v)| v.abs() <= tol) {
        return Err(Error::RankDeficient);
    }
    let irreducible = is_irreducible(spec, 1e-12 * scale);
    Ok(Classification { label: (spec.m - spec.n, spec.n), minors, irreducible })
}

/// Terms of the Binet-Cauchy expansion: (log weight, x-rate) per column set
/// with a positive coefficient.
fn terms(spec: &TauSpec) -> Vec<(Vec<usize>, f64, f64)> {
    combinations(spec.m, spec.n)
        .into_iter()
        .filter_map(|c| {
            let mut coef = minor(spec, &c);
            for i in 0..c.len() {
                for j in i + 1..c.len() {
                    coef *= spec.lambdas[c[j]] - spec.lambdas[c[i]];
                }
            }
            if coef > 0.0 {
                let rate = c.iter().map(|&k| spec.lambdas[k]).sum();
                Some((c, coef.ln(), rate))
            } else {
                None
            }
        })
        .collect()
}

/// (log tau, d_x log tau, d_xx log tau) at one point.
pub fn log_tau_derivatives(spec: &TauSpec, x: f64, y: f64, t: f64) -> Result<(f64, f64, f64)> {
    let terms = terms(spec);
    if terms.is_empty() {
        return Err(Error::TauNonPositive { x, y });
    }
    let th: Vec<f64> = (0..spec.m).map(|k| spec.phase(k, x, y, t)).collect();
    log_moments(&terms, &th).ok_or(Error::TauNonPositive { x, y })
}

fn log_moments(terms: &[(Vec<usize>, f64, f64)], th: &[f64]) -> Option<(f64, f64, f64)> {
    let e: Vec<f64> = terms.iter().map(|(c, lw, _)| lw + c.iter().map(|&k| th[k]).sum::<f64>()).collect();
    let mx = e.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !mx.is_finite() {
        return None;
    }
    let (mut z, mut m1, mut m2) = (0.0, 0.0, 0.0);
    for (ei, (_, _, k)) in e.iter().zip(terms) {
        let p = (ei - mx).exp();
        z += p;
        m1 += p * k;
        m2 += p * k * k;
    }
    let (m1, m2) = (m1 / z, m2 / z);
    Some((mx + z.ln(), m1, (m2 - m1 * m1).max(0.0)))
}

/// u = -2 d_xx log tau on the grid.
pub fn u_from_tau(spec: &TauSpec, t: f64, grid: &Grid2D) -> Result<Field2D> {
    validate_spec(spec)?;
    let terms = terms(spec);
    let mut out = vec![0.0; grid.len()];
    let mut th = vec![0.0; spec.m];
    for i in 0..grid.ny {
        let y = grid.y(i);
        for j in 0..grid.nx {
            let x = grid.x(j);
            for (k, v) in th.iter_mut().enumerate() {
                *v = spec.phase(k, x, y, t);
            }
            let (_, _, d2) = log_moments(&terms, &th).ok_or(Error::TauNonPositive { x, y })?;
            out[i * grid.nx + j] = -2.0 * d2;
        }
    }
    Field2D::new(*grid, out, Meta::None)
}

/// f_n and its first three x-derivatives at a point.
pub fn seed_functions(spec: &TauSpec, x: f64, y: f64, t: f64) -> Vec<[f64; 4]> {
    spec.a
        .iter()
        .map(|row| {
            let mut d = [0.0; 4];
            for (k, a) in row.iter().enumerate() {
                let e = a * spec.phase(k, x, y, t).exp();
                let l = spec.lambdas[k];
                d[0] += e;
                d[1] += l * e;
                d[2] += l * l * e;
                d[3] += l * l * l * e;
            }
            d
        })
        .collect()
}

impl core::fmt::Display for Classification {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        let s = if self.irreducible { "" } else { " (decomposable)" };
        write!(f, "({}, {}){}", self.label.0, self.label.1, s)
    }
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_grid, sech2};

    fn spec(a: Vec<Vec<f64>>, lambdas: Vec<f64>) -> TauSpec {
        let m = lambdas.len();
        TauSpec { m, n: a.len(), a, lambdas, theta0: vec![0.0; m] }
    }

    #[test]
    fn classification() {
        let c = validate_spec(&spec(vec![vec![1.0, 1.0]], vec![-1.0, 1.0])).unwrap();
        assert_eq!(c.label, (1, 1));
        match validate_spec(&spec(vec![vec![1.0, -1.0]], vec![-1.0, 1.0])) {
            Err(Error::NegativeMinor { columns, value }) => {
                assert_eq!(columns, vec![1]);
                assert_eq!(value, -1.0);
            }
            other => panic!("{other:?}"),
        }
        let c = validate_spec(&spec(vec![vec![1.0; 3]], vec![-1.0, 0.0, 1.0])).unwrap();
        assert_eq!(c.label, (2, 1));
        assert!(c.irreducible);
        let c = validate_spec(&spec(vec![vec![1.0, 0.0, 1.0]], vec![-1.0, 0.0, 1.0])).unwrap();
        assert!(!c.irreducible);
        assert!(matches!(
            validate_spec(&spec(vec![vec![1.0, 1.0, 0.0], vec![1.0, 1.0, 0.0]], vec![-1.0, 0.0, 1.0])),
            Err(Error::RankDeficient)
        ));
        assert_eq!(combinations(5, 2).len(), 10);
    }

    #[test]
    fn line_soliton_values() {
        let s = spec(vec![vec![1.0, 1.0]], vec![-1.0, 1.0]);
        let g = make_grid(128, 64, 40.0, 20.0, -20.0, -10.0).unwrap();
        let u = u_from_tau(&s, 0.0, &g).unwrap();
        for i in 0..g.ny {
            for j in 0..g.nx {
                assert!((u.at(i, j) + 2.0 * sech2(g.x(j))).abs() < 1e-12);
            }
        }
        let (_, _, d2) = log_tau_derivatives(&s, 0.0, 0.0, 0.0).unwrap();
        assert!((-2.0 * d2 + 2.0).abs() < 1e-15);
        let u = u_from_tau(&s, 0.5, &g).unwrap();
        let row = u.row(10);
        let jmin = (0..g.nx).min_by(|&a, &b| row[a].total_cmp(&row[b])).unwrap();
        assert!((g.x(jmin) - 2.0).abs() <= g.dx());
    }

    #[test]
    fn three_term_value_at_origin() {
        let s = spec(vec![vec![1.0; 3]], vec![-1.0, 0.0, 1.0]);
        let (_, _, d2) = log_tau_derivatives(&s, 0.0, 0.0, 0.0).unwrap();
        // (log(2 cosh x + 1))'' at 0 is 2/3
        assert!((-2.0 * d2 + 4.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn two_row_wronskian_matches_direct() {
        let s = TauSpec {
            m: 4,
            n: 2,
            a: vec![vec![1.0, 0.0, -1.0, -2.0], vec![0.0, 1.0, 1.0, 1.0]],
            lambdas: vec![-1.5, -0.5, 0.25, 1.0],
            theta0: vec![0.1, -0.2, 0.3, 0.0],
        };
        validate_spec(&s).unwrap();
        for &(x, y, t) in &[(0.3, -0.4, 0.1), (-1.0, 0.5, 0.0), (0.7, 1.1, -0.2)] {
            let tau_at = |x: f64| {
                let f = seed_functions(&s, x, y, t);
                f[0][0] * f[1][1] - f[0][1] * f[1][0]
            };
            let (lt, d1, _) = log_tau_derivatives(&s, x, y, t).unwrap();
            assert!((tau_at(x).ln() - lt).abs() < 1e-12);
            let h = 1e-5;
            let fd = (tau_at(x + h).ln() - tau_at(x - h).ln()) / (2.0 * h);
            assert!((fd - d1).abs() < 1e-8);
            // seed functions solve f_y = f_xx, f_t = -4 f_xxx
            for (n, f) in seed_functions(&s, x, y, t).iter().enumerate() {
                let fy: f64 = (0..s.m).map(|k| s.a[n][k] * s.lambdas[k].powi(2) * s.phase(k, x, y, t).exp()).sum();
                let ft: f64 = (0..s.m).map(|k| -4.0 * s.a[n][k] * s.lambdas[k].powi(3) * s.phase(k, x, y, t).exp()).sum();
                assert!((fy - f[2]).abs() < 1e-10 && (ft + 4.0 * f[3]).abs() < 1e-10);
            }
        }
    }
}
