//! KPF1 field files, CSV curves, run manifests and the tau spec text format.
//!
//! A field `name.kpf` holds raw little-endian f64 samples (row-major, x
//! fastest). Its header `name.hdr` carries key=value lines.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use kp2_core::tau::TauSpec;
use kp2_core::{Field2D, Grid2D, Meta};

use crate::error::CliError;

pub fn header_path(path: &Path) -> PathBuf {
    path.with_extension("hdr")
}

fn meta_lines(meta: &Meta) -> String {
    let mut s = format!("meta={meta}\n");
    if let Meta::Kink { shift: Some(c), .. } = meta {
        let vals: Vec<String> = c.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(s, "shift={}", vals.join(","));
    }
    s
}

/// Writes the field and its header; `extra` lines record how it was made.
pub fn write_field(path: &Path, f: &Field2D, extra: &[(String, String)]) -> Result<(), CliError> {
    let mut bytes = Vec::with_capacity(8 * f.values.len());
    for v in &f.values {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))?;
    let g = f.grid;
    let mut h = format!(
        "format=KPF1\nnx={}\nny={}\nLx={}\nLy={}\nx0={}\ny0={}\n",
        g.nx, g.ny, g.lx, g.ly, g.x0, g.y0
    );
    h.push_str(&meta_lines(&f.meta));
    for (k, v) in extra {
        let _ = writeln!(h, "{k}={v}");
    }
    let hp = header_path(path);
    fs::write(&hp, h).map_err(|e| CliError::io(&hp, e))
}

pub fn parse_kv(text: &str) -> Vec<(String, String)> {
    text.lines()
        .filter_map(|l| {
            let l = l.trim();
            if l.is_empty() || l.starts_with('#') {
                return None;
            }
            l.split_once('=').map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        })
        .collect()
}

fn lookup<'a>(kv: &'a [(String, String)], key: &str) -> Option<&'a str> {
    kv.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
}

fn number<T: std::str::FromStr>(kv: &[(String, String)], key: &str) -> Result<T, CliError> {
    let v = lookup(kv, key).ok_or_else(|| CliError::input(format!("header lacks {key}")))?;
    v.parse().map_err(|_| CliError::input(format!("bad value for {key}: {v}")))
}

pub fn parse_meta(s: &str, shift: Option<&str>) -> Result<Meta, CliError> {
    let s = s.trim();
    if s == "none" {
        return Ok(Meta::None);
    }
    if s == "multikink" {
        return Ok(Meta::Multikink);
    }
    let inner = |p: &str| s.strip_prefix(p).and_then(|r| r.strip_suffix(')'));
    if let Some(c) = inner("constant(") {
        let c = c.trim().parse().map_err(|_| CliError::input(format!("bad meta {s}")))?;
        return Ok(Meta::Constant(c));
    }
    if let Some(body) = inner("kink(") {
        let mut parts = body.split(',');
        let lambda = parts
            .next()
            .and_then(|l| l.trim().parse().ok())
            .ok_or_else(|| CliError::input(format!("bad meta {s}")))?;
        let shift = match (parts.next(), shift) {
            (Some(_), Some(list)) => Some(
                list.split(',')
                    .map(|v| v.trim().parse::<f64>())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|_| CliError::input("bad shift list"))?,
            ),
            (Some(_), None) => return Err(CliError::input("kink meta with curve but no shift line")),
            (None, _) => None,
        };
        return Ok(Meta::Kink { lambda, shift });
    }
    Err(CliError::input(format!("unknown meta {s}")))
}

pub fn read_field(path: &Path) -> Result<Field2D, CliError> {
    let hp = header_path(path);
    let text = fs::read_to_string(&hp).map_err(|e| CliError::io(&hp, e))?;
    let kv = parse_kv(&text);
    if lookup(&kv, "format") != Some("KPF1") {
        return Err(CliError::input(format!("{} is not a KPF1 header", hp.display())));
    }
    let grid = Grid2D::new(
        number(&kv, "nx")?,
        number(&kv, "ny")?,
        number(&kv, "Lx")?,
        number(&kv, "Ly")?,
        number(&kv, "x0")?,
        number(&kv, "y0")?,
    )?;
    let meta = parse_meta(lookup(&kv, "meta").unwrap_or("none"), lookup(&kv, "shift"))?;
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    if bytes.len() != 8 * grid.len() {
        return Err(CliError::input(format!(
            "{} holds {} bytes, header needs {}",
            path.display(),
            bytes.len(),
            8 * grid.len()
        )));
    }
    let values = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    Ok(Field2D::new(grid, values, meta)?)
}

/// Two-column CSV with a header line.
pub fn write_curve(path: &Path, names: (&str, &str), xs: &[f64], vs: &[f64]) -> Result<(), CliError> {
    let mut s = format!("{},{}\n", names.0, names.1);
    for (x, v) in xs.iter().zip(vs) {
        let _ = writeln!(s, "{x},{v}");
    }
    fs::write(path, s).map_err(|e| CliError::io(path, e))
}

/// Multi-column CSV.
pub fn write_table(path: &Path, names: &[&str], cols: &[&[f64]]) -> Result<(), CliError> {
    let mut s = names.join(",");
    s.push('\n');
    let n = cols.iter().map(|c| c.len()).min().unwrap_or(0);
    for r in 0..n {
        let row: Vec<String> = cols.iter().map(|c| c[r].to_string()).collect();
        s.push_str(&row.join(","));
        s.push('\n');
    }
    fs::write(path, s).map_err(|e| CliError::io(path, e))
}

pub fn write_manifest(path: &Path, entries: &[(String, String)]) -> Result<(), CliError> {
    let mut s = String::new();
    for (k, v) in entries {
        let _ = writeln!(s, "{k}={v}");
    }
    fs::write(path, s).map_err(|e| CliError::io(path, e))
}

fn numbers(s: &str) -> Result<Vec<f64>, CliError> {
    s.split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| !t.is_empty())
        .map(|t| t.parse().map_err(|_| CliError::input(format!("bad number {t}"))))
        .collect()
}

/// Parses `M=`, `N=`, `lambdas=`, `theta0=` lines followed by `A=` and N
/// matrix rows. `theta0` defaults to zeros.
pub fn parse_tau_spec(text: &str) -> Result<TauSpec, CliError> {
    let mut m = None;
    let mut n = None;
    let mut lambdas = None;
    let mut theta0 = None;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut in_matrix = false;
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if in_matrix {
            rows.push(numbers(line)?);
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| CliError::input(format!("bad spec line: {line}")))?;
        let v = v.trim();
        match k.trim() {
            "M" => m = Some(v.parse::<usize>().map_err(|_| CliError::input("bad M"))?),
            "N" => n = Some(v.parse::<usize>().map_err(|_| CliError::input("bad N"))?),
            "lambdas" => lambdas = Some(numbers(v)?),
            "theta0" => theta0 = Some(numbers(v)?),
            "A" => {
                in_matrix = true;
                if !v.is_empty() {
                    rows.push(numbers(v)?);
                }
            }
            other => return Err(CliError::input(format!("unknown spec key {other}"))),
        }
    }
    let m = m.ok_or_else(|| CliError::input("spec lacks M"))?;
    let n = n.ok_or_else(|| CliError::input("spec lacks N"))?;
    let spec = TauSpec {
        m,
        n,
        a: rows,
        lambdas: lambdas.ok_or_else(|| CliError::input("spec lacks lambdas"))?,
        theta0: theta0.unwrap_or_else(|| vec![0.0; m]),
    };
    spec.check_shape()?;
    Ok(spec)
}

pub fn format_tau_spec(spec: &TauSpec) -> String {
    let join = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
    let mut s = format!(
        "M={}\nN={}\nlambdas={}\ntheta0={}\nA=\n",
        spec.m,
        spec.n,
        join(&spec.lambdas),
        join(&spec.theta0)
    );
    for r in &spec.a {
        s.push_str(&join(r));
        s.push('\n');
    }
    s
}
