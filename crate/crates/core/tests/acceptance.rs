//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails. Scenario-based criteria use the bundled configs.

use contact_stab::basic_state::{BasicStateExprs, PointJet};
use contact_stab::config::ScenarioConfig;
use contact_stab::expr::Expr;
use contact_stab::geometry::{GeomPoint, Side};
use contact_stab::linearization::{
    a1_tilde, boundary_quadratic_form, boundary_signature, first_variation, nonlinear_operator, two_sided_signature,
    w_congruence_check, BoundaryCoeffs, PsiJet, Trace,
};
use contact_stab::mhd::{assemble, characteristic_speeds, Eos, PlasmaState};
use contact_stab::scenarios::{dispatch, Outcome};
use contact_stab::small;
use contact_stab::solver::{discrete_adjoint_check, Operator, SolverOptions};
use contact_stab::spectral::{linspace, lopatinski, lopatinski_scan, ContactData, LaplaceFourierPoint, NeutralMode};
use contact_stab::{basic_state::BasicState, grid::Grid, Vec6, NU};
use nalgebra::{Cholesky, DMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::path::PathBuf;
use std::time::{Duration, Instant};

struct Verdict {
    passed: bool,
    detail: String,
}

fn verdict(passed: bool, detail: String) -> Verdict {
    Verdict { passed, detail }
}

fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run_scenario(file: &str, kind: &str) -> Outcome {
    let cfg = ScenarioConfig::load(&configs().join(file), &[format!("scenario.kind={kind}")]).expect("bundled config");
    let dir = tempfile::tempdir().unwrap();
    dispatch(&cfg, dir.path()).expect("scenario runs")
}

fn check_passed(o: &Outcome, name: &str) -> (bool, String) {
    match o.check(name) {
        Some(c) => (c.passed, format!("{}: {}", c.name, c.detail)),
        None => (false, format!("{name}: missing")),
    }
}

fn within(limit: Duration, start: Instant) -> (bool, String) {
    let e = start.elapsed();
    (e <= limit, format!("{:.1}s of {}s", e.as_secs_f64(), limit.as_secs()))
}

fn random_state(rng: &mut ChaCha8Rng, eos: Eos) -> PlasmaState {
    PlasmaState {
        p: rng.gen_range(0.2..5.0),
        v1: rng.gen_range(-2.0..2.0),
        v2: rng.gen_range(-2.0..2.0),
        h1: rng.gen_range(-2.0..2.0),
        h2: rng.gen_range(-2.0..2.0),
        s: rng.gen_range(-1.0..1.0),
        eos,
    }
}

/// Fast/slow magnetosonic speeds from the textbook formula, written in
/// the cancellation-free form c_s^2 = c^2 c_A^2 / c_f^2.
fn speed_oracle(st: &PlasmaState, n: (f64, f64)) -> Vec6 {
    let rho = st.eos.rho(st.p, st.s);
    let c2 = st.eos.gamma * st.p / rho;
    let a2 = (st.h1 * st.h1 + st.h2 * st.h2) / rho;
    let hn = st.h1 * n.0 + st.h2 * n.1;
    let ca2 = hn * hn / rho;
    let disc = ((c2 + a2) * (c2 + a2) - 4.0 * c2 * ca2).max(0.0);
    let cf2 = 0.5 * (c2 + a2 + disc.sqrt());
    let cs2 = c2 * ca2 / cf2;
    let un = st.v1 * n.0 + st.v2 * n.1;
    let mut out = [un - cf2.sqrt(), un - cs2.sqrt(), un, un, un + cs2.sqrt(), un + cf2.sqrt()];
    out.sort_by(|a, b| a.partial_cmp(b).unwrap());
    out
}

fn criterion_1() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut sym = true;
    let mut pd = true;
    let mut worst: f64 = 0.0;
    for k in 0..1000 {
        let eos = Eos::new(rng.gen_range(1.1..3.0), rng.gen_range(0.5..2.0)).unwrap();
        let st = random_state(&mut rng, eos);
        let m = assemble(&st).unwrap();
        for a in [m.a0, m.a1, m.a2] {
            sym &= a == small::transpose(&a);
        }
        pd &= Cholesky::new(DMatrix::from_fn(NU, NU, |i, j| m.a0[i][j])).is_some();
        let th: f64 = if k == 0 { 0.0 } else { rng.gen_range(0.0..std::f64::consts::TAU) };
        let n = (th.cos(), th.sin());
        let got = characteristic_speeds(&st, n).unwrap();
        let want = speed_oracle(&st, n);
        for i in 0..NU {
            worst = worst.max((got[i] - want[i]).abs());
        }
    }
    let (fast, t) = within(Duration::from_secs(10), start);
    verdict(sym && pd && worst <= 1e-10 && fast, format!("symmetric {sym}, A0 > 0 {pd}, speed error {worst:.2e}, {t}"))
}

fn random_trace(rng: &mut ChaCha8Rng) -> Trace {
    loop {
        let t = Trace {
            h1: rng.gen_range(-2.0..2.0),
            h2: rng.gen_range(-2.0..2.0),
            d2psi: rng.gen_range(-0.9..0.9),
            d1phi: 1.0,
        };
        if t.hn().abs() >= 0.1 {
            return t;
        }
    }
}

fn criterion_2() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut bad = 0;
    for _ in 0..100 {
        let tp = random_trace(&mut rng);
        let tm = Trace { d1phi: -1.0, ..tp };
        if boundary_signature(&tp, Side::Plus) != (2, 2, 2)
            || boundary_signature(&tm, Side::Minus) != (2, 2, 2)
            || two_sided_signature(&tp, &tm) != (4, 4, 4)
        {
            bad += 1;
        }
    }
    let (fast, t) = within(Duration::from_secs(5), start);
    verdict(bad == 0 && fast, format!("{bad} of 100 traces with wrong inertia, {t}"))
}

fn criterion_3() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let eos = Eos::default();
    let mut cong: f64 = 0.0;
    let mut quad: f64 = 0.0;
    for _ in 0..100 {
        let tr = random_trace(&mut rng);
        cong = cong
            .max(w_congruence_check(&tr, Side::Plus))
            .max(w_congruence_check(&Trace { d1phi: -1.0, ..tr }, Side::Minus));
        // basic trace with w1 = 0 on both sides, H continuous
        let dtpsi = rng.gen_range(-0.5..0.5);
        let v2 = rng.gen_range(-1.0..1.0);
        let v1 = dtpsi + v2 * tr.d2psi;
        let basic = |s: f64| [rng_p(s), v1, v2, tr.h1, tr.h2, s];
        let (bp, bm) = (basic(0.1), basic(0.6));
        let gp = GeomPoint { d1phi: 1.0, d2psi: tr.d2psi, dtpsi, ..Default::default() };
        let gm = GeomPoint { d1phi: -1.0, ..gp };
        let ap = a1_tilde(&bp, &eos, &gp).unwrap();
        let am = a1_tilde(&bm, &eos, &gm).unwrap();
        let up: Vec6 = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
        let mut um: Vec6 = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
        um[1] = up[1];
        um[2] = up[2];
        let reference = -0.5 * (small::dot(&small::matvec(&ap, &up), &up) + small::dot(&small::matvec(&am, &um), &um));
        let c = BoundaryCoeffs {
            h_plus: (tr.h1, tr.h2),
            h_minus: (tr.h1, tr.h2),
            d2phi: tr.d2psi,
            v2_plus: v2,
            jump_d1p: 0.0,
            jump_d1htau: 0.0,
            d1vn_plus: 0.0,
            jump_d1v: (0.0, 0.0),
        };
        let (matrix, closed) = boundary_quadratic_form(&up, &um, &c, 0.0).unwrap();
        quad = quad.max((matrix - closed).abs()).max((reference - closed).abs());
    }
    verdict(cong <= 1e-12 && quad <= 1e-12, format!("congruence defect {cong:.2e}, quadratic form defect {quad:.2e}"))
}

fn rng_p(s: f64) -> f64 {
    1.0 + 0.5 * s
}

fn criterion_4() -> Verdict {
    let start = Instant::now();
    let e = |s: &str| Expr::parse(s).unwrap();
    let ex = BasicStateExprs {
        eos: Eos::default(),
        plus: [
            e("1 + 0.2*sin(x1 + x2 - t)"),
            e("0.1*cos(x1)*sin(x2)"),
            e("0.3 + 0.1*x1*cos(x2 + t)"),
            e("0.8 + 0.1*sin(x2)"),
            e("0.3 - 0.2*cos(x1 - x2)"),
            e("0.2*sin(t + x1)"),
        ],
        minus: [
            e("1.1 + 0.1*cos(x1 - x2)"),
            e("0.05*sin(x1 + t)"),
            e("0.2*cos(x2)"),
            e("0.9 - 0.1*sin(x1*x2)"),
            e("0.25 + 0.1*sin(x2 - t)"),
            e("0.7 + 0.1*cos(x1)"),
        ],
        phi: e("0.1*sin(x2 - t)"),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let epss = [1e-2, 1e-3, 1e-4, 1e-5];
    let mut worst_slope = f64::INFINITY;
    for _ in 0..10 {
        let side = if rng.gen_bool(0.5) { Side::Plus } else { Side::Minus };
        let (t, x1, x2) = (rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.5), rng.gen_range(0.0..6.0));
        let pj = ex.jet(side, t, x1, x2);
        let g = ex.geom(side, t, x1, x2);
        let mut r = || -> Vec6 { std::array::from_fn(|_| rng.gen_range(-1.0..1.0)) };
        let du = PointJet { u: r(), dt: r(), d1: r(), d2: r() };
        let q = r();
        let dpsi = PsiJet { psi: q[0], dt: q[1], d1: q[2], d2: q[3] };
        let fv = first_variation(&pj, &g, &ex.eos, &du, &dpsi).unwrap();
        let base = nonlinear_operator(&pj, &g, &ex.eos).unwrap();
        let mut pts = Vec::new();
        for &eps in &epss {
            let add = |a: &Vec6, b: &Vec6| -> Vec6 { std::array::from_fn(|i| a[i] + eps * b[i]) };
            let pu = PointJet {
                u: add(&pj.u, &du.u),
                dt: add(&pj.dt, &du.dt),
                d1: add(&pj.d1, &du.d1),
                d2: add(&pj.d2, &du.d2),
            };
            let pg = GeomPoint {
                psi: g.psi + eps * dpsi.psi,
                d1phi: g.d1phi + eps * dpsi.d1,
                d2psi: g.d2psi + eps * dpsi.d2,
                dtpsi: g.dtpsi + eps * dpsi.dt,
                ..g
            };
            let pert = nonlinear_operator(&pu, &pg, &ex.eos).unwrap();
            let err = (0..NU).map(|i| ((pert[i] - base[i]) / eps - fv[i]).powi(2)).sum::<f64>().sqrt();
            pts.push((eps.ln(), err.ln()));
        }
        // least-squares slope of log error against log eps
        let n = pts.len() as f64;
        let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / n, pts.iter().map(|p| p.1).sum::<f64>() / n);
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        worst_slope = worst_slope.min(sxy / sxx);
    }
    let (fast, t) = within(Duration::from_secs(60), start);
    verdict(worst_slope >= 0.9 && fast, format!("min log-log slope {worst_slope:.3} over 10 points, {t}"))
}

fn contact_sets() -> Vec<ContactData> {
    let mk = |gamma: f64, p: f64, v2: f64, h: (f64, f64), s: (f64, f64)| {
        let plus = [p, 0.0, v2, h.0, h.1, s.0];
        let mut minus = plus;
        minus[5] = s.1;
        ContactData::new(plus, minus, Eos::new(gamma, 1.0).unwrap()).unwrap()
    };
    vec![
        mk(5.0 / 3.0, 1.0, 0.5, (0.8, 0.3), (0.0, 0.7)),
        mk(5.0 / 3.0, 2.0, 0.0, (1.0, 0.0), (0.0, -0.5)),
        mk(1.4, 0.5, -0.3, (0.4, 0.6), (0.2, 1.0)),
        mk(1.4, 1.5, 1.0, (1.2, -0.5), (-0.3, 0.3)),
        mk(2.0, 1.0, 0.2, (0.3, 1.0), (0.0, 2.0)),
    ]
}

fn criterion_5(neutral: &Outcome) -> Verdict {
    let mut cont: f64 = 0.0;
    for d in contact_sets() {
        for omega in [0.5, 1.0, 3.0] {
            cont = cont.max(NeutralMode::new(&d, omega, 0.4, -0.3, 0.2).continuous_residual(&d));
        }
    }
    let (ok, det) = check_passed(neutral, "neutral refinement order");
    verdict(cont == 0.0 && ok, format!("continuous residual {cont:e}; {det}"))
}

fn criterion_6(energy: &Outcome, cfg: &ScenarioConfig, elapsed: Duration) -> Verdict {
    let setup = cfg.grid.n1 == 200 && cfg.grid.n2 == 200 && cfg.run.eps == 1e-3 && cfg.run.t_final == 1.0;
    let (a, da) = check_passed(energy, "energy drift");
    let (b, db) = check_passed(energy, "energy non-increasing");
    let fast = elapsed <= Duration::from_secs(300);
    verdict(setup && a && b && fast, format!("{da}; {db}; {:.1}s", elapsed.as_secs_f64()))
}

fn criterion_7() -> Verdict {
    let etas = linspace(0.05, 2.0, 40);
    let xis = linspace(-3.0, 3.0, 40);
    let omega = 1.0;
    let mut min_abs = f64::INFINITY;
    let mut monotone = true;
    let mut trail = Vec::new();
    for d in contact_sets() {
        for r in lopatinski_scan(&d, omega, &etas, &xis).unwrap() {
            min_abs = min_abs.min(r.delta.norm());
        }
        let xi0 = -omega * d.plus[2];
        let v: Vec<f64> = [0.05, 0.025, 0.0125]
            .iter()
            .map(|&eta| lopatinski(&d, &LaplaceFourierPoint::new(eta, xi0, omega)).unwrap().lopatinski_value.norm())
            .collect();
        monotone &= v[1] < v[0] && v[2] < v[1];
        trail.push(format!("{:.1e}/{:.1e}/{:.1e}", v[0], v[1], v[2]));
    }
    verdict(min_abs > 0.0 && monotone, format!("min |Delta| {min_abs:.3e}; neutral approach {}", trail.join(" ")))
}

fn criterion_8(mms: &Outcome, sweep: &Outcome) -> Verdict {
    let (a, da) = check_passed(mms, "divergence defect order");
    let (b, db) = check_passed(sweep, "eps f7 trace bounded");
    verdict(a && b, format!("{da}; {db}"))
}

fn criterion_9(mms: &Outcome, elapsed: Duration) -> Verdict {
    let (a, da) = check_passed(mms, "space-time L2 order");
    let fast = elapsed <= Duration::from_secs(600);
    verdict(a && fast, format!("{da}; {:.1}s", elapsed.as_secs_f64()))
}

fn criterion_10(sweep: &Outcome) -> Verdict {
    let (c, dc) = check_passed(sweep, "sweep complete");
    let (a, da) = check_passed(sweep, "Cauchy ratios");
    let (b, db) = check_passed(sweep, "sup J uniform in eps");
    verdict(a && b && c, format!("{dc}; {da}; {db}"))
}

fn criterion_11() -> Verdict {
    let plus = [1.0, 0.0, 0.5, 0.8, 0.3, 0.0];
    let mut minus = plus;
    minus[5] = 0.7;
    let ex = BasicStateExprs::constant(plus, minus, Eos::default());
    let grid = Grid::new(24, 20, 2.0, 6.0, 0.4, 3.0, 1.0).unwrap();
    let b = BasicState::from_exprs(&ex, &grid, 0.0).unwrap();
    let mut worst: f64 = 0.0;
    for (eps, seed) in [(0.0, 11), (0.1, 12), (1e-3, 13)] {
        let op = Operator::new(&b, SolverOptions::new(eps)).unwrap();
        worst = worst.max(discrete_adjoint_check(&op, 20, seed).unwrap().max_rel_defect);
    }
    verdict(worst <= 1e-10, format!("max relative defect {worst:.2e} over 20 pairs x 3 eps"))
}

fn criterion_12(rt: &Outcome) -> Verdict {
    let (a, da) = check_passed(rt, "sup J / |F|^2 refinement");
    let notes = rt.notes.join("; ");
    verdict(a, format!("{da}; {notes}"))
}

fn main() {
    let mut results: Vec<(usize, &str, Verdict)> = Vec::new();
    let mut record = |n: usize, name: &'static str, v: Verdict| {
        println!("criterion {n:>2} {:<34} {} ({})", name, if v.passed { "PASS" } else { "FAIL" }, v.detail);
        results.push((n, name, v));
    };
    record(1, "matrix structure", criterion_1());
    record(2, "boundary signature", criterion_2());
    record(3, "congruence and quadratic form", criterion_3());
    record(4, "linearization consistency", criterion_4());
    let neutral = run_scenario("neutral.cfg", "neutral-mode");
    record(5, "neutral mode", criterion_5(&neutral));
    let ecfg = ScenarioConfig::load(&configs().join("energy.cfg"), &[]).unwrap();
    let t = Instant::now();
    let energy = run_scenario("energy.cfg", "energy-test");
    record(6, "constant-coefficient energy", criterion_6(&energy, &ecfg, t.elapsed()));
    record(7, "weak Lopatinski scan", criterion_7());
    let t = Instant::now();
    let mms = run_scenario("mms.cfg", "mms");
    let mms_time = t.elapsed();
    let sweep = run_scenario("rt_stable.cfg", "eps-sweep");
    record(8, "divergence transport", criterion_8(&mms, &sweep));
    record(9, "manufactured convergence", criterion_9(&mms, mms_time));
    record(10, "eps-sweep Cauchy property", criterion_10(&sweep));
    record(11, "discrete adjoint identity", criterion_11());
    let rt = run_scenario("rt_stable.cfg", "rt-run");
    record(12, "RT boundedness under refinement", criterion_12(&rt));
    let failed: Vec<usize> = results.iter().filter(|r| !r.2.passed).map(|r| r.0).collect();
    if failed.is_empty() {
        println!("acceptance: all {} criteria PASS", results.len());
    } else {
        println!("acceptance: FAILED criteria {failed:?}");
        std::process::exit(1);
    }
}
