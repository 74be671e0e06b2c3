//! Scenario runners behind the command-line front end. Each runner writes
//! its CSV/.dat artifacts into the output directory and returns the list of
//! checks it evaluated; `dispatch` adds the execution manifest.

use crate::basic_state::{validate_basic_state, BasicState, BasicStateExprs};
use crate::config::{ScenarioConfig, ScenarioKind};
use crate::geometry::Side;
use crate::solver::{
    a0_energy, boundary_h32_norm_sq, discrete_adjoint_check, div_defect, energy_report, eps_sweep, forcing_h1_norm_sq,
    write_series_csv, write_snapshot, EnergyReport, Manufactured, NeutralExact, NoForcing, Operator, ProblemData,
    Snapshot, SolverOptions,
};
use crate::spectral::{linspace, lopatinski, lopatinski_scan, ContactData, LaplaceFourierPoint, NeutralMode};
use crate::{Error, Result};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

/// One evaluated check.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckLine {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Result of a scenario run.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub checks: Vec<CheckLine>,
    pub notes: Vec<String>,
    pub artifacts: Vec<PathBuf>,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> Vec<&CheckLine> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }

    pub fn check(&self, name: &str) -> Option<&CheckLine> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// Human-readable report, one line per check.
    pub fn report(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            let _ = writeln!(s, "{:<4} {:<28} {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
        }
        for n in &self.notes {
            let _ = writeln!(s, "note {n}");
        }
        s
    }

    fn check_that(&mut self, name: &str, passed: bool, detail: String) {
        self.checks.push(CheckLine { name: name.to_string(), passed, detail });
    }
}

struct Ctx<'a> {
    cfg: &'a ScenarioConfig,
    dir: &'a Path,
    out: Outcome,
}

impl Ctx<'_> {
    fn write(&mut self, name: &str, text: &str) -> Result<()> {
        let p = self.dir.join(name);
        fs::write(&p, text)?;
        self.out.artifacts.push(p);
        Ok(())
    }

    fn series(&mut self, name: &str, series: &[EnergyReport]) -> Result<()> {
        let p = self.dir.join(name);
        write_series_csv(&p, series)?;
        self.out.artifacts.push(p);
        Ok(())
    }
}

/// Run the configured scenario, writing artifacts and `manifest.txt` into
/// `out_dir`. Errors (including blow-up) are returned after the manifest
/// and any partial artifacts have been written.
pub fn dispatch(cfg: &ScenarioConfig, out_dir: &Path) -> Result<Outcome> {
    fs::create_dir_all(out_dir)?;
    let start = Instant::now();
    let mut ctx = Ctx { cfg, dir: out_dir, out: Outcome::default() };
    let res = match cfg.kind {
        ScenarioKind::ValidateState => validate_state(&mut ctx),
        ScenarioKind::Spectrum => spectrum(&mut ctx),
        ScenarioKind::EnergyTest => energy_test(&mut ctx),
        ScenarioKind::NeutralMode => neutral_mode(&mut ctx),
        ScenarioKind::RtRun => rt_run(&mut ctx),
        ScenarioKind::EpsSweep => sweep(&mut ctx),
        ScenarioKind::AdjointCheck => adjoint_check(&mut ctx),
        ScenarioKind::Mms => mms(&mut ctx),
    };
    let status = match &res {
        Ok(()) if ctx.out.passed() => "passed".to_string(),
        Ok(()) => {
            let names: Vec<_> = ctx.out.failures().iter().map(|c| c.name.clone()).collect();
            format!("failed ({})", names.join(", "))
        }
        Err(e) => format!("error: {e}"),
    };
    let mut m = String::new();
    let _ = writeln!(m, "scenario = {}", cfg.kind);
    let _ = writeln!(m, "name = {}", cfg.name);
    let _ = writeln!(m, "version = {} {}", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION"));
    let _ = writeln!(m, "threads = {}", rayon::current_num_threads());
    let _ = writeln!(m, "wall_time_s = {:.3}", start.elapsed().as_secs_f64());
    let _ = writeln!(m, "status = {status}");
    m.push_str("\n[checks]\n");
    m.push_str(&ctx.out.report());
    m.push_str("\n[config]\n");
    m.push_str(&cfg.raw.echo());
    let mp = out_dir.join("manifest.txt");
    fs::write(&mp, m)?;
    ctx.out.artifacts.push(mp);
    res.map(|_| ctx.out)
}

fn require_constant(cfg: &ScenarioConfig) -> Result<(ContactData, BasicStateExprs)> {
    let overridden = cfg.state.plus.iter().chain(&cfg.state.minus).any(Option::is_some) || cfg.state.phi.is_some();
    if overridden || cfg.physics.rt_jump != 0.0 {
        return Err(Error::Config(format!(
            "{} needs a constant basic state (no state.* entries, physics.rt_jump = 0)",
            cfg.kind
        )));
    }
    let (plus, minus) = cfg.physics.states();
    let eos = cfg.physics.eos()?;
    let data = ContactData::new(plus, minus, eos).map_err(|e| Error::Config(format!("physics: {e}")))?;
    Ok((data, BasicStateExprs::constant(plus, minus, eos)))
}

/// Cell counts for a refinement level n (the x2 count), keeping the aspect
/// ratio of the grid block.
fn level_dims(cfg: &ScenarioConfig, n: usize) -> (usize, usize) {
    let n1 = ((n * cfg.grid.n1) as f64 / cfg.grid.n2 as f64).round() as usize;
    (n1.max(4), n)
}

fn order(e_coarse: f64, e_fine: f64, h_coarse: f64, h_fine: f64) -> f64 {
    (e_coarse / e_fine).ln() / (h_coarse / h_fine).ln()
}

fn solver_opts(cfg: &ScenarioConfig, eps: f64) -> SolverOptions {
    SolverOptions { alpha: cfg.run.alpha, ..SolverOptions::new(eps) }
}

fn validate_state(ctx: &mut Ctx) -> Result<()> {
    let cfg = ctx.cfg;
    let ex = cfg.basic_state_exprs()?;
    let b = cfg.build_state(&ex, cfg.grid.n1, cfg.grid.n2, cfg.run.eps)?;
    let rep = validate_basic_state(&b, cfg.tol.validate, cfg.tol.kappa);
    let mut csv = String::from("check,passed,value,side,i,j\n");
    for c in &rep.checks {
        let loc = c.location.map_or(",,".to_string(), |(s, i, j)| format!("{},{i},{j}", s.name()));
        let _ = writeln!(csv, "{},{},{:.6e},{loc}", c.name, c.passed, c.max_residual);
        ctx.out.check_that(c.name, c.passed, format!("value {:.3e}", c.max_residual));
    }
    ctx.write("validation.csv", &csv)?;
    ctx.out.notes.push(format!(
        "rho_min {:.4e}, p_min {:.4e}, min |H_N| {:.4e}, K {:.4e}",
        rep.rho_min, rep.p_min, rep.kappa_min, rep.k_bound
    ));
    ctx.out.notes.push(format!(
        "min [d1 p] = {:.4e}: Rayleigh-Taylor sign {}",
        rep.rt_margin,
        if rep.rt_stable() { "holds" } else { "violated" }
    ));
    Ok(())
}

fn spectrum(ctx: &mut Ctx) -> Result<()> {
    let cfg = ctx.cfg;
    let sp = &cfg.spectrum;
    let (data, _) = require_constant(cfg)?;
    let etas = linspace(sp.eta_min, sp.eta_max, sp.n_eta);
    let xis = linspace(sp.xi_min, sp.xi_max, sp.n_xi);
    let rows = lopatinski_scan(&data, sp.omega, &etas, &xis)?;
    let mut csv = String::from("eta,xi,omega,re_delta,im_delta,abs_delta,conditioning\n");
    let mut dat = String::from("# eta xi |Delta|\n");
    let mut min_abs = f64::INFINITY;
    for (k, r) in rows.iter().enumerate() {
        if k > 0 && k % xis.len() == 0 {
            dat.push('\n');
        }
        let a = r.delta.norm();
        min_abs = min_abs.min(a);
        let _ = writeln!(
            csv,
            "{},{},{},{:.10e},{:.10e},{:.10e},{:.6e}",
            r.eta, r.xi, r.omega, r.delta.re, r.delta.im, a, r.conditioning
        );
        let _ = writeln!(dat, "{} {} {:.10e}", r.eta, r.xi, a);
    }
    ctx.write("lopatinski.csv", &csv)?;
    ctx.write("lopatinski.dat", &dat)?;
    ctx.out.check_that("scan |Delta| > 0", min_abs > 0.0 && min_abs.is_finite(), format!("min {min_abs:.4e}"));

    // neutral family: s = eta - i omega v2
    let xi0 = -sp.omega * data.plus[crate::mhd::V2];
    let mut etas_n = sp.neutral_etas.clone();
    etas_n.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut ncsv = String::from("eta,xi,abs_delta\n");
    let mut vals = Vec::new();
    for &eta in &etas_n {
        let v = lopatinski(&data, &LaplaceFourierPoint::new(eta, xi0, sp.omega))?.lopatinski_value.norm();
        let _ = writeln!(ncsv, "{eta},{xi0},{v:.10e}");
        vals.push(v);
    }
    ctx.write("neutral_family.csv", &ncsv)?;
    let monotone = vals.windows(2).all(|w| w[1] < w[0]);
    ctx.out.check_that(
        "|Delta| decreases to neutral",
        monotone,
        vals.iter().map(|v| format!("{v:.3e}")).collect::<Vec<_>>().join(" > "),
    );
    let mode = NeutralMode::new(&data, sp.omega, 1.0, 1.0, 1.0);
    let res = mode.continuous_residual(&data);
    ctx.out.check_that("neutral mode residual", res == 0.0, format!("{res:e}"));
    Ok(())
}

fn default_bump(x1: f64, x2: f64, x2_len: f64) -> f64 {
    let c2 = 0.5 * x2_len;
    (-((x1 - 1.2).powi(2) + (x2 - c2).powi(2)) / 0.1).exp()
}

fn initial_snapshot(cfg: &ScenarioConfig, op: &Operator) -> Snapshot {
    let g = op.grid();
    let mut s = Snapshot::zeros(g);
    for side in Side::both() {
        for k in 0..g.npts() {
            let (x1, x2) = (g.x1(k / g.n2), g.x2(k % g.n2));
            s.u[side.index()][k] = match &cfg.init {
                Some(init) => {
                    let e = if side == Side::Plus { &init.plus } else { &init.minus };
                    std::array::from_fn(|c| e[c].eval(0.0, x1, x2))
                }
                None => {
                    let b = default_bump(x1, x2, g.x2_len);
                    [1.0, 0.3, -0.2, 0.1, 0.4, 0.5].map(|c| c * b)
                }
            };
        }
    }
    if let Some(init) = &cfg.init {
        for j in 0..g.n2 {
            s.phi[j] = init.phi.eval(0.0, 0.0, g.x2(j));
        }
    }
    op.init_divergence(&mut s);
    s
}

fn energy_test(ctx: &mut Ctx) -> Result<()> {
    let cfg = ctx.cfg;
    let ex = cfg.basic_state_exprs()?;
    let b = cfg.build_state(&ex, cfg.grid.n1, cfg.grid.n2, cfg.run.eps)?;
    let op = Operator::new(&b, solver_opts(cfg, cfg.run.eps))?;
    let mut s = initial_snapshot(cfg, &op);
    let mut series = Vec::new();
    let mut energy = Vec::new();
    let res = op.run(&mut s, &NoForcing, b.grid.steps(), cfg.run.report_every, |sn| {
        series.push(energy_report(&op, sn, &NoForcing));
        energy.push((sn.t, a0_energy(&op, sn)));
    });
    ctx.series("series.csv", &series)?;
    let mut csv = String::from("t,E,E_rel\n");
    let e0 = energy[0].1;
    for (t, e) in &energy {
        let _ = writeln!(csv, "{t:.8e},{e:.12e},{:.12e}", e / e0);
    }
    ctx.write("energy.csv", &csv)?;
    ctx.write("energy.dat", &csv.replace(',', " ").replacen("t E E_rel", "# t E E_rel", 1))?;
    res?;
    if cfg.run.snapshot {
        let (a, c) = write_snapshot(&ctx.dir.join("final"), &s, &b.grid)?;
        ctx.out.artifacts.extend([a, c]);
    }
    let tol = cfg.tol.energy_drift;
    let (drift, rise) = energy_drift(&energy.iter().map(|p| p.1).collect::<Vec<_>>());
    ctx.out.check_that("energy drift", drift <= tol, format!("|E(T)/E(0) - 1| = {drift:.3e} (tol {tol})"));
    ctx.out.check_that("energy non-increasing", rise <= tol, format!("largest relative rise {rise:.3e} (tol {tol})"));
    Ok(())
}

/// Relative drift |E_end / E_0 - 1| and largest rise above the running
/// minimum, relative to E_0.
pub fn energy_drift(e: &[f64]) -> (f64, f64) {
    let e0 = e[0];
    if e0 == 0.0 {
        return (0.0, e.iter().fold(0.0f64, |m, v| m.max(v.abs())));
    }
    let mut low = e0;
    let mut rise: f64 = 0.0;
    for &v in e {
        rise = rise.max((v - low) / e0);
        low = low.min(v);
    }
    ((e[e.len() - 1] / e0 - 1.0).abs(), rise)
}

fn neutral_mode(ctx: &mut Ctx) -> Result<()> {
    let cfg = ctx.cfg;
    let nb = &cfg.neutral;
    let (data, ex) = require_constant(cfg)?;
    let mode = NeutralMode::new(&data, nb.omega, nb.s_plus, nb.s_minus, nb.phi);
    let cres = mode.continuous_residual(&data);
    ctx.out.check_that("continuous residual", cres == 0.0, format!("{cres:e}"));
    let exact = NeutralExact(mode);
    let mut csv = String::from("N1,N2,h2,error,order\n");
    let mut prev: Option<(f64, f64)> = None;
    let mut orders = Vec::new();
    for &n in &nb.levels {
        let (n1, n2) = level_dims(cfg, n);
        let b = cfg.build_state(&ex, n1, n2, cfg.run.eps)?;
        let op = Operator::new(&b, solver_opts(cfg, cfg.run.eps))?;
        let m = Manufactured { op: &op, exact: &exact };
        let mut s = m.snapshot(0.0);
        op.run(&mut s, &m, b.grid.steps(), b.grid.steps(), |_| {})?;
        let e = m.error_sq(&s).sqrt();
        let o = prev.map(|(pe, ph)| order(pe, e, ph, b.grid.h2));
        if let Some(o) = o {
            orders.push(o);
        }
        let _ = writeln!(csv, "{n1},{n2},{:.6e},{e:.6e},{}", b.grid.h2, o.map_or(String::new(), |o| format!("{o:.4}")));
        prev = Some((e, b.grid.h2));
    }
    ctx.write("neutral_convergence.csv", &csv)?;
    ctx.write("neutral_convergence.dat", &to_dat(&csv))?;
    let worst = orders.iter().cloned().fold(f64::INFINITY, f64::min);
    let tol = cfg.tol.neutral_order;
    ctx.out.check_that("neutral refinement order", worst >= tol, format!("min order {worst:.3} (need >= {tol})"));
    Ok(())
}

fn to_dat(csv: &str) -> String {
    let mut lines = csv.lines();
    let mut s = format!("# {}\n", lines.next().unwrap_or("").replace(',', " "));
    for l in lines {
        s.push_str(&l.replace(',', " "));
        s.push('\n');
    }
    s
}

struct RtLevel {
    n1: usize,
    n2: usize,
    f_norm: f64,
    g_norm: f64,
    sup_j: f64,
    j_half: f64,
    j_end: f64,
}

fn rt_level(ctx: &mut Ctx, ex: &BasicStateExprs, n: usize, tag: &str) -> Result<RtLevel> {
    let cfg = ctx.cfg;
    let src = cfg.source.as_ref().ok_or_else(|| Error::Config("rt-run requires a source block".into()))?;
    let (n1, n2) = level_dims(cfg, n);
    let b = cfg.build_state(ex, n1, n2, cfg.run.eps)?;
    let rep = validate_basic_state(&b, cfg.tol.validate, cfg.tol.kappa);
    let bad: Vec<_> = rep.checks.iter().filter(|c| !c.passed).map(|c| c.name).collect();
    ctx.out.check_that(
        &format!("basic state{tag} N{n2}"),
        bad.is_empty(),
        if bad.is_empty() {
            format!("valid, min [d1 p] = {:.3e}", rep.rt_margin)
        } else {
            format!("failed: {}", bad.join(", "))
        },
    );
    let op = Operator::new(&b, solver_opts(cfg, cfg.run.eps))?;
    let data =
        ProblemData { source: Some(&src.source), boundary: Some(&src.boundary), lift_ell: Some(cfg.run.lift_ell) };
    let forcing = data.forcing(&op);
    let t_final = b.grid.t_final;
    let f_norm = forcing_h1_norm_sq(&op, forcing.as_ref(), t_final, cfg.run.f_samples);
    let g_norm = boundary_h32_norm_sq(&src.boundary, n2, b.grid.x2_len, t_final, cfg.run.f_samples);
    let mut s = Snapshot::zeros(&b.grid);
    let mut series = Vec::new();
    let res = op.run(&mut s, forcing.as_ref(), b.grid.steps(), cfg.run.report_every, |sn| {
        series.push(energy_report(&op, sn, forcing.as_ref()));
    });
    ctx.series(&format!("series{tag}_N{n2}.csv"), &series)?;
    res?;
    if cfg.run.snapshot {
        let (a, c) = write_snapshot(&ctx.dir.join(format!("final{tag}_N{n2}")), &s, &b.grid)?;
        ctx.out.artifacts.extend([a, c]);
    }
    let sup_j = series.iter().fold(0.0f64, |m, r| m.max(r.j));
    let half = series.iter().find(|r| r.t >= 0.5 * t_final).map_or(0.0, |r| r.j);
    Ok(RtLevel { n1, n2, f_norm, g_norm, sup_j, j_half: half, j_end: series.last().map_or(0.0, |r| r.j) })
}

fn rt_run(ctx: &mut Ctx) -> Result<()> {
    let cfg = ctx.cfg;
    let ex = cfg.basic_state_exprs()?;
    let levels = if cfg.run.levels.is_empty() { vec![cfg.grid.n2] } else { cfg.run.levels.clone() };
    let mut csv = String::from("N1,N2,F_H1_sq,g_H32_sq,sup_J,J_final,ratio\n");
    let mut ratios = Vec::new();
    let mut coarse = None;
    for &n in &levels {
        let r = rt_level(ctx, &ex, n, "")?;
        let ratio = r.sup_j / r.f_norm;
        let _ = writeln!(
            csv,
            "{},{},{:.8e},{:.8e},{:.8e},{:.8e},{:.8e}",
            r.n1, r.n2, r.f_norm, r.g_norm, r.sup_j, r.j_end, ratio
        );
        ratios.push(ratio);
        coarse.get_or_insert(r);
    }
    ctx.write("rt_levels.csv", &csv)?;
    ctx.write("rt_levels.dat", &to_dat(&csv))?;
    if ratios.iter().any(|r| !r.is_finite()) {
        ctx.out.check_that("sup J / |F|^2 finite", false, "forcing norm vanishes".into());
    } else if ratios.len() >= 2 {
        let (lo, hi) = ratios.iter().fold((f64::INFINITY, 0.0f64), |(a, b), r| (a.min(*r), b.max(*r)));
        let spread = (hi - lo) / lo;
        let tol = cfg.tol.refine_spread;
        ctx.out.check_that(
            "sup J / |F|^2 refinement",
            spread < tol,
            format!("ratios {ratios:.4?}, spread {spread:.3e} (tol {tol})"),
        );
    } else {
        ctx.out.notes.push(format!("sup J / |F|^2 = {:.4e}", ratios[0]));
    }
    if cfg.run.compare_violated && cfg.physics.rt_jump != 0.0 {
        let c = coarse.expect("at least one level");
        let mut vcfg = cfg.clone();
        vcfg.physics.rt_jump = -cfg.physics.rt_jump;
        let vex = vcfg.basic_state_exprs()?;
        let mut vctx = Ctx { cfg: &vcfg, dir: ctx.dir, out: Outcome::default() };
        let v = rt_level(&mut vctx, &vex, c.n2, "_flipped");
        ctx.out.artifacts.append(&mut vctx.out.artifacts);
        let growth = |r: &RtLevel| if r.j_half > 0.0 { r.j_end / r.j_half } else { f64::NAN };
        match v {
            Ok(v) => {
                let (gs, gv) = (growth(&c), growth(&v));
                ctx.out.notes.push(format!(
                    "sign-flipped pressure jump (exploratory): J(T)/J(T/2) = {gv:.4e} vs {gs:.4e}, sup J {:.4e} vs {:.4e}",
                    v.sup_j, c.sup_j
                ));
            }
            Err(Error::BlowUp { t, .. }) => {
                ctx.out.notes.push(format!("sign-flipped pressure jump (exploratory): blow-up at t = {t:.4}"));
            }
            Err(e) => return Err(e),
        }
    }
    Ok(())
}

fn sweep(ctx: &mut Ctx) -> Result<()> {
    let cfg = ctx.cfg;
    let src = cfg.source.as_ref().ok_or_else(|| Error::Config("eps-sweep requires a source block".into()))?;
    let ex = cfg.basic_state_exprs()?;
    let eps_max = cfg.run.eps_list[0];
    let b = cfg.build_state(&ex, cfg.grid.n1, cfg.grid.n2, eps_max)?;
    let data =
        ProblemData { source: Some(&src.source), boundary: Some(&src.boundary), lift_ell: Some(cfg.run.lift_ell) };
    let table = eps_sweep(&b, &cfg.run.eps_list, &data, cfg.run.report_every)?;
    let mut csv = String::from("eps_a,eps_b,diff,ratio\n");
    for r in &table.rows {
        let _ = writeln!(
            csv,
            "{},{},{:.8e},{}",
            r.eps_a,
            r.eps_b,
            r.diff,
            r.ratio.map_or(String::new(), |x| format!("{x:.6}"))
        );
    }
    ctx.write("sweep.csv", &csv)?;
    let mut runs = String::from("eps,sup_J,trace_eps_f7\n");
    let mut dat = String::from("# t J, one block per eps\n");
    for (k, ser) in table.series.iter().enumerate() {
        let eps = table.eps[k];
        let _ = writeln!(runs, "{eps},{:.8e},{:.8e}", table.sup_j[k], table.trace_f7[k]);
        let _ = writeln!(dat, "# eps = {eps}");
        for r in ser {
            let _ = writeln!(dat, "{:.8e} {:.8e}", r.t, r.j);
        }
        dat.push_str("\n\n");
        ctx.series(&format!("series_eps{k}.csv"), ser)?;
    }
    ctx.write("sweep_runs.csv", &runs)?;
    ctx.write("j_curves.dat", &dat)?;
    ctx.out.check_that(
        "sweep complete",
        table.truncated.is_none(),
        table.truncated.clone().unwrap_or_else(|| format!("{} runs", table.eps.len())),
    );
    let ratios: Vec<f64> = table.rows.iter().filter_map(|r| r.ratio).collect();
    let tol = cfg.tol.ratio_max;
    ctx.out.check_that(
        "Cauchy ratios",
        !ratios.is_empty() && table.ratios_below(tol),
        format!("{ratios:.4?} (tol {tol})"),
    );
    let growth = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(*x)) / v[0];
    let gt = cfg.tol.sweep_growth;
    let gj = growth(&table.sup_j);
    ctx.out.check_that("sup J uniform in eps", gj <= gt, format!("max/first {gj:.4} (tol {gt})"));
    let gf = growth(&table.trace_f7);
    ctx.out.check_that("eps f7 trace bounded", gf <= gt, format!("max/first {gf:.4} (tol {gt})"));
    Ok(())
}

fn adjoint_check(ctx: &mut Ctx) -> Result<()> {
    let cfg = ctx.cfg;
    let (_, ex) = require_constant(cfg)?;
    let b = cfg.build_state(&ex, cfg.grid.n1, cfg.grid.n2, cfg.run.eps)?;
    let op = Operator::new(&b, solver_opts(cfg, cfg.run.eps))?;
    let rep = discrete_adjoint_check(&op, cfg.adjoint_trials, cfg.run.seed)?;
    let csv = format!(
        "trials,eps,max_rel_defect,max_boundary_term\n{},{},{:.6e},{:.6e}\n",
        rep.trials, cfg.run.eps, rep.max_rel_defect, rep.max_boundary_term
    );
    ctx.write("adjoint.csv", &csv)?;
    let tol = cfg.tol.adjoint;
    ctx.out.check_that(
        "adjoint identity",
        rep.max_rel_defect <= tol,
        format!("max relative defect {:.3e} (tol {tol:e})", rep.max_rel_defect),
    );
    Ok(())
}

/// Per-level result of a manufactured-solution run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MmsLevel {
    pub n1: usize,
    pub n2: usize,
    pub h: f64,
    /// Space-time L2 error.
    pub error: f64,
    /// ||div h - f7|| (both sides) at the final time.
    pub div_defect: f64,
}

/// Solve the manufactured problem on an n1 x n2 grid and integrate the
/// error in time by the trapezoid rule over about `samples` sample times.
pub fn mms_level(
    b: &BasicState,
    opts: SolverOptions,
    exact: &dyn crate::solver::ExactSolution,
    samples: usize,
) -> Result<MmsLevel> {
    let op = Operator::new(b, opts)?;
    let m = Manufactured { op: &op, exact };
    let g = &b.grid;
    let mut s = m.snapshot(0.0);
    let every = (g.steps() / samples.max(1)).max(1);
    let mut pts: Vec<(f64, f64)> = Vec::new();
    op.run(&mut s, &m, g.steps(), every, |sn| pts.push((sn.t, m.error_sq(sn))))?;
    let mut acc = 0.0;
    for w in pts.windows(2) {
        acc += 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1);
    }
    let dd = div_defect(&op, &s, Side::Plus).hypot(div_defect(&op, &s, Side::Minus));
    Ok(MmsLevel { n1: g.n1, n2: g.n2, h: g.h1.max(g.h2), error: acc.sqrt(), div_defect: dd })
}

fn mms(ctx: &mut Ctx) -> Result<()> {
    let cfg = ctx.cfg;
    let exact = cfg.exact.as_ref().ok_or_else(|| Error::Config("mms requires an exact block".into()))?;
    let ex = cfg.basic_state_exprs()?;
    let levels = if cfg.run.levels.is_empty() { vec![20, 40, 80] } else { cfg.run.levels.clone() };
    let mut csv = String::from("N1,N2,h,error,order,div_defect,div_order\n");
    let mut prev: Option<MmsLevel> = None;
    let (mut orders, mut dorders) = (Vec::new(), Vec::new());
    for &n in &levels {
        let (n1, n2) = level_dims(cfg, n);
        let b = cfg.build_state(&ex, n1, n2, cfg.run.eps)?;
        let l = mms_level(&b, solver_opts(cfg, cfg.run.eps), exact, cfg.run.f_samples)?;
        let (o, d) = match prev {
            Some(p) => (Some(order(p.error, l.error, p.h, l.h)), Some(order(p.div_defect, l.div_defect, p.h, l.h))),
            None => (None, None),
        };
        orders.extend(o);
        dorders.extend(d);
        let f = |x: Option<f64>| x.map_or(String::new(), |v| format!("{v:.4}"));
        let _ = writeln!(csv, "{},{},{:.6e},{:.6e},{},{:.6e},{}", l.n1, l.n2, l.h, l.error, f(o), l.div_defect, f(d));
        prev = Some(l);
    }
    ctx.write("mms.csv", &csv)?;
    ctx.write("mms.dat", &to_dat(&csv))?;
    let (lo, hi) = (cfg.tol.order_min, cfg.tol.order_max);
    ctx.out.check_that(
        "space-time L2 order",
        !orders.is_empty() && orders.iter().all(|o| *o >= lo && *o <= hi),
        format!("{orders:.3?} (window [{lo}, {hi}])"),
    );
    let dt = cfg.tol.div_order;
    ctx.out.check_that(
        "divergence defect order",
        !dorders.is_empty() && dorders.iter().all(|o| *o >= dt),
        format!("{dorders:.3?} (need >= {dt})"),
    );
    Ok(())
}
