//! Command-line front end. Every command writes its artifacts plus a
//! `.manifest` next to the main output listing all parameters and norms.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use kp2_core::backlund::{multisoliton_add, soliton_add, MultiSpec};
use kp2_core::diagnostics::{commute_check, l2phi_seminorm, CommuteOptions};
use kp2_core::evolve::{evolve, evolve_with_soliton, EvolveOptions, Frame};
use kp2_core::grid::{integrate_and_norms, make_grid, EDGE_TOL};
use kp2_core::miura::SolveOptions;
use kp2_core::phi::phi;
use kp2_core::tau::{u_from_tau, validate_spec};
use kp2_core::{Field2D, Grid2D, ShiftCurve};

use crate::error::CliError;
use crate::inputs::load_field;
use crate::io::{parse_tau_spec, write_curve, write_field, write_manifest, write_table};
use crate::verify::{run_all, run_one, Suite};

#[derive(Parser, Debug)]
#[command(name = "kp2", version, about = "Line soliton addition for KP-II: generate, transform, evolve, measure")]
pub struct Cli {
    /// Worker threads (falls back to KP2_THREADS, then the hardware count).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct GridArgs {
    #[arg(long, default_value_t = 512)]
    pub nx: usize,
    #[arg(long, default_value_t = 512)]
    pub ny: usize,
    #[arg(long = "Lx", default_value_t = 40.0)]
    pub lx: f64,
    #[arg(long = "Ly", default_value_t = 40.0)]
    pub ly: f64,
    /// Left edge; defaults to -Lx/2.
    #[arg(long)]
    pub x0: Option<f64>,
    /// Bottom edge; defaults to -Ly/2.
    #[arg(long)]
    pub y0: Option<f64>,
}

impl GridArgs {
    pub fn grid(&self) -> Result<Grid2D, CliError> {
        Ok(make_grid(
            self.nx,
            self.ny,
            self.lx,
            self.ly,
            self.x0.unwrap_or(-self.lx / 2.0),
            self.y0.unwrap_or(-self.ly / 2.0),
        )?)
    }
}

#[derive(Args, Debug, Clone)]
pub struct SolverArgs {
    #[arg(long, default_value_t = 1e-11)]
    pub tol: f64,
    #[arg(long, default_value_t = 200)]
    pub max_iter: usize,
    /// Smallness guard on the H^{-1/2,0} size of the forcing.
    #[arg(long, default_value_t = 0.1)]
    pub guard: f64,
}

impl SolverArgs {
    pub fn options(&self) -> SolveOptions {
        SolveOptions { tol: self.tol, max_iter: self.max_iter, smallness_guard: self.guard, edge_tol: EDGE_TOL }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameArg {
    Lab,
    Comoving,
}

#[derive(Args, Debug, Clone)]
pub struct EvolveArgs {
    #[arg(long, default_value_t = 1e-3, allow_negative_numbers = true)]
    pub dt: f64,
    #[arg(long = "T", default_value_t = 1.0)]
    pub t_final: f64,
    #[arg(long, default_value_t = 100)]
    pub save_every: usize,
    #[arg(long, value_enum, default_value_t = FrameArg::Lab)]
    pub frame: FrameArg,
}

impl EvolveArgs {
    pub fn options(&self) -> EvolveOptions {
        EvolveOptions {
            dt: self.dt,
            t_final: self.t_final,
            save_every: self.save_every,
            frame: match self.frame {
                FrameArg::Lab => Frame::Lab,
                FrameArg::Comoving => Frame::Comoving,
            },
            ..Default::default()
        }
    }
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Exact multisoliton from a tau spec.
    GenMultisoliton {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        t: f64,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Adds a unit line soliton at position gamma0 to a small field.
    BacklundAdd {
        #[arg(long, default_value = "zero")]
        u: String,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        gamma0: f64,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Adds the multisoliton built from rates `lambdas` and phases `cs`.
    MultisolitonAdd {
        #[arg(long, default_value = "zero")]
        u: String,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        lambdas: Vec<f64>,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        cs: Vec<f64>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Evolves a field under KP-II; in the co-moving frame the input is the
    /// perturbation of the soliton at `alpha`.
    Evolve {
        #[arg(long, default_value = "zero")]
        u: String,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        alpha: f64,
        #[arg(long)]
        out: PathBuf,
        /// Also write every snapshot as `<out stem>.<k>.kpf`.
        #[arg(long)]
        all_snapshots: bool,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        evolve: EvolveArgs,
    },
    /// The functional of a decaying potential; optionally writes psi.
    Phi {
        #[arg(long)]
        u: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Distance of a field to the modulated line solitons; optionally writes
    /// the optimal modulation as CSV.
    Seminorm {
        #[arg(long)]
        u: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Transform-then-evolve against evolve-then-transform; writes a CSV time series.
    CommuteCheck {
        #[arg(long)]
        u: String,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        gamma0: f64,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
        #[arg(long = "T", default_value_t = 0.25)]
        t_final: f64,
        #[arg(long, default_value_t = 50)]
        save_every: usize,
    },
    /// Runs the acceptance criteria and prints a pass/fail table.
    Verify {
        #[arg(long, default_value = "quick")]
        suite: String,
        /// Run only this criterion (1-10).
        #[arg(long)]
        only: Option<usize>,
    },
    /// Writes a field as x,y,value CSV.
    ExportCsv {
        #[arg(long)]
        u: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn kv(k: &str, v: impl ToString) -> (String, String) {
    (k.to_string(), v.to_string())
}

/// Shortest round-trip form, with an exponent for tiny and huge values.
fn num(x: f64) -> String {
    format!("{x:?}")
}

fn kf(k: &str, v: f64) -> (String, String) {
    (k.to_string(), num(v))
}

fn grid_kv(g: &Grid2D) -> Vec<(String, String)> {
    vec![kv("nx", g.nx), kv("ny", g.ny), kf("Lx", g.lx), kf("Ly", g.ly), kf("x0", g.x0), kf("y0", g.y0)]
}

fn solver_kv(o: &SolveOptions) -> Vec<(String, String)> {
    vec![kf("tol", o.tol), kv("max_iter", o.max_iter), kf("guard", o.smallness_guard)]
}

fn evolve_kv(o: &EvolveOptions) -> Vec<(String, String)> {
    vec![
        kf("dt", o.dt),
        kf("T", o.t_final),
        kv("save_every", o.save_every),
        kv("frame", if o.frame == Frame::Lab { "lab" } else { "comoving" }),
        kv("dealias", o.dealias),
    ]
}

fn norms_kv(f: &Field2D) -> Vec<(String, String)> {
    let (n, integral) = integrate_and_norms(f);
    vec![kf("l2", n.l2), kf("linf", n.linf), kf("integral", integral)]
}

fn manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest");
    PathBuf::from(s)
}

fn with_suffix(out: &Path, suffix: &str) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    out.with_file_name(format!("{stem}{suffix}"))
}

fn finish(out: &Path, command: &str, mut entries: Vec<(String, String)>) -> Result<(), CliError> {
    entries.insert(0, kv("command", command));
    entries.insert(1, kv("version", env!("CARGO_PKG_VERSION")));
    for (k, v) in &entries {
        println!("{k}={v}");
    }
    write_manifest(&manifest_path(out), &entries)
}

/// Validates that the parent directory of an output path exists.
fn check_out(out: &Path) -> Result<(), CliError> {
    match out.parent() {
        Some(p) if !p.as_os_str().is_empty() && !p.is_dir() => {
            Err(CliError::input(format!("output directory {} does not exist", p.display())))
        }
        _ => Ok(()),
    }
}

fn threads(flag: Option<usize>) -> Result<Option<usize>, CliError> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var("KP2_THREADS") {
        Ok(s) => s
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| CliError::input(format!("KP2_THREADS must be a positive integer, got {s}"))),
        Err(_) => Ok(None),
    }
}

pub fn dispatch(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = threads(cli.threads)? {
        if n == 0 {
            return Err(CliError::input("thread count must be positive"));
        }
        // fails only if a pool already exists, which is harmless
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match cli.command {
        Command::GenMultisoliton { spec, t, out, grid } => {
            check_out(&out)?;
            let text = std::fs::read_to_string(&spec).map_err(|e| CliError::io(&spec, e))?;
            let s = parse_tau_spec(&text)?;
            let class = validate_spec(&s)?;
            let g = grid.grid()?;
            let f = u_from_tau(&s, t, &g)?;
            let mut e = grid_kv(&g);
            e.extend([kv("spec", spec.display()), kf("t", t), kv("classification", &class)]);
            write_field(&out, &f, &e)?;
            e.extend(norms_kv(&f));
            e.push(kf("value_at_origin", value_at_origin(&f)));
            finish(&out, "gen-multisoliton", e)
        }
        Command::BacklundAdd { u, gamma0, out, grid, solver } => {
            check_out(&out)?;
            let g = grid.grid()?;
            let uf = load_field(&u, g)?;
            let opts = solver.options();
            let r = soliton_add(&uf, gamma0, &opts)?;
            let mut e = grid_kv(&uf.grid);
            e.extend(solver_kv(&opts));
            e.extend([kv("u", &u), kf("gamma0", gamma0), kf("c", r.c)]);
            write_field(&out, &r.u_bar, &e)?;
            write_curve(&with_suffix(&out, ".alpha.csv"), ("y", "alpha"), &uf.grid.ys(), &r.alpha.values)?;
            e.extend(norms_kv(&r.u_bar));
            e.push(kf("alpha_y_l2", r.alpha.derivative_l2()));
            finish(&out, "backlund-add", e)
        }
        Command::MultisolitonAdd { u, lambdas, cs, out, grid, solver } => {
            check_out(&out)?;
            let g = grid.grid()?;
            let uf = load_field(&u, g)?;
            let opts = solver.options();
            let spec = MultiSpec { lambdas: lambdas.clone(), cs: cs.clone() };
            let f = multisoliton_add(&uf, &spec, &opts)?;
            let join = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
            let mut e = grid_kv(&uf.grid);
            e.extend(solver_kv(&opts));
            e.extend([kv("u", &u), kv("lambdas", join(&lambdas)), kv("cs", join(&cs))]);
            write_field(&out, &f, &e)?;
            e.extend(norms_kv(&f));
            finish(&out, "multisoliton-add", e)
        }
        Command::Evolve { u, alpha, out, all_snapshots, grid, evolve: ev } => {
            check_out(&out)?;
            let g = grid.grid()?;
            let uf = load_field(&u, g)?;
            let opts = ev.options();
            let tr = match opts.frame {
                Frame::Lab => evolve(&uf, &opts)?,
                Frame::Comoving => evolve_with_soliton(&uf, &ShiftCurve::constant(uf.grid, alpha), &opts)?,
            };
            let mut e = grid_kv(&uf.grid);
            e.extend(evolve_kv(&opts));
            e.extend([kv("u", &u), kf("alpha", alpha)]);
            let last = tr.snapshots.last().expect("at least the initial snapshot");
            let mut fe = e.clone();
            fe.push(kf("t", tr.times.last().copied().unwrap_or(0.0)));
            write_field(&out, last, &fe)?;
            if all_snapshots {
                for (k, (f, t)) in tr.snapshots.iter().zip(&tr.times).enumerate() {
                    let mut se = e.clone();
                    se.push(kf("t", *t));
                    write_field(&with_suffix(&out, &format!(".{k}.kpf")), f, &se)?;
                }
            }
            write_table(&with_suffix(&out, ".norms.csv"), &["t", "mass", "l2"], &[&tr.times, &tr.mass, &tr.l2])?;
            e.extend(norms_kv(last));
            e.push(kf("l2_drift", tr.l2_drift()));
            for w in &tr.warnings {
                eprintln!("warning: {w}");
            }
            finish(&out, "evolve", e)
        }
        Command::Phi { u, out, grid } => {
            let g = grid.grid()?;
            let h = load_field(&u, g)?;
            let r = phi(&h)?;
            let mut e = grid_kv(&h.grid);
            e.extend([
                kv("u", &u),
                kf("phi", r.value),
                kf("phi_alt", r.value_alt),
                kf("consistency_gap", r.consistency_gap),
                kf("psi_min", r.psi_min),
                kf("edge_contamination", r.edge_contamination),
                kv("resolved", r.resolved),
            ]);
            match out {
                Some(out) => {
                    check_out(&out)?;
                    write_field(&out, &r.psi, &e)?;
                    finish(&out, "phi", e)
                }
                None => {
                    for (k, v) in &e {
                        println!("{k}={v}");
                    }
                    Ok(())
                }
            }
        }
        Command::Seminorm { u, out, grid } => {
            let g = grid.grid()?;
            let ub = load_field(&u, g)?;
            let s = l2phi_seminorm(&ub, None)?;
            let mut e = grid_kv(&ub.grid);
            e.extend([
                kv("u", &u),
                kf("seminorm", s.value),
                kv("iterations", s.iterations),
                kf("gradient_l2", s.gradient_l2),
            ]);
            match out {
                Some(out) => {
                    check_out(&out)?;
                    write_curve(&out, ("y", "sigma"), &ub.grid.ys(), &s.sigma.values)?;
                    finish(&out, "seminorm", e)
                }
                None => {
                    for (k, v) in &e {
                        println!("{k}={v}");
                    }
                    Ok(())
                }
            }
        }
        Command::CommuteCheck { u, gamma0, out, grid, solver, dt, t_final, save_every } => {
            check_out(&out)?;
            let g = grid.grid()?;
            let uf = load_field(&u, g)?;
            let mut opts = CommuteOptions::default();
            opts.evolve.dt = dt;
            opts.evolve.t_final = t_final;
            opts.evolve.save_every = save_every;
            opts.solve = SolveOptions { edge_tol: opts.solve.edge_tol, ..solver.options() };
            let r = commute_check(&uf, gamma0, &opts)?;
            write_table(
                &out,
                &["t", "gamma0_fit", "c_fit", "mismatch"],
                &[&r.times, &r.gamma0_fit, &r.c_fit, &r.mismatch],
            )?;
            let mut e = grid_kv(&uf.grid);
            e.extend(solver_kv(&opts.solve));
            e.extend(evolve_kv(&opts.evolve));
            e.extend([
                kv("u", &u),
                kf("gamma0", gamma0),
                kf("max_mismatch", r.mismatch.iter().cloned().fold(0.0, f64::max)),
                kf("speed_residual", r.speed_residual),
                kf("edge_max", r.edge_max),
                kf("u_edge_rel", r.u_edge_rel),
            ]);
            for w in &r.warnings {
                eprintln!("warning: {w}");
            }
            finish(&out, "commute-check", e)
        }
        Command::Verify { suite, only } => {
            let suite: Suite = suite.parse()?;
            let checks = match only {
                Some(id) if (1..=10).contains(&id) => {
                    let c = run_one(id, suite);
                    println!("{c}");
                    vec![c]
                }
                Some(id) => return Err(CliError::input(format!("criterion {id} is not in 1..=10"))),
                None => run_all(suite, |c| println!("{c}")),
            };
            let failed = checks.iter().filter(|c| !c.pass).count();
            println!("{} of {} criteria passed", checks.len() - failed, checks.len());
            if failed > 0 {
                return Err(CliError::Regime(format!("{failed} criteria failed")));
            }
            Ok(())
        }
        Command::ExportCsv { u, out } => {
            check_out(&out)?;
            let f = crate::io::read_field(&u)?;
            let g = f.grid;
            let mut xs = Vec::with_capacity(g.len());
            let mut ys = Vec::with_capacity(g.len());
            for i in 0..g.ny {
                for j in 0..g.nx {
                    xs.push(g.x(j));
                    ys.push(g.y(i));
                }
            }
            write_table(&out, &["x", "y", "value"], &[&xs, &ys, &f.values])
        }
    }
}

/// Sample nearest to the origin.
fn value_at_origin(f: &Field2D) -> f64 {
    let g = f.grid;
    let j = (((0.0 - g.x0) / g.dx()).round().max(0.0) as usize).min(g.nx - 1);
    let i = (((0.0 - g.y0) / g.dy()).round().max(0.0) as usize).min(g.ny - 1);
    f.at(i, j)
}
