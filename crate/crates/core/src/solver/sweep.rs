//! Regularization sweep: the same problem solved for a decreasing sequence
//! of eps on one grid, compared in L2 of the space-time domain.

use super::{energy_report, EnergyReport, Forcing, Operator, ProblemData, Snapshot, SolverOptions};
use crate::basic_state::BasicState;
use crate::{Error, Result, Vec6};

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub eps_a: f64,
    pub eps_b: f64,
    /// ||U^{eps_a} - U^{eps_b}|| in L2 over [0, T] x both sides.
    pub diff: f64,
    /// diff divided by the previous row's diff.
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub eps: Vec<f64>,
    pub rows: Vec<SweepRow>,
    /// sup_t J(t) per completed eps.
    pub sup_j: Vec<f64>,
    /// sup_t ||eps f7^+ at x1 = 0||_{L2(x2)} per completed eps.
    pub trace_f7: Vec<f64>,
    pub series: Vec<Vec<EnergyReport>>,
    /// Set when a run blew up and the table stops early.
    pub truncated: Option<String>,
}

impl SweepTable {
    /// All successive-difference ratios are at most `bound`.
    pub fn ratios_below(&self, bound: f64) -> bool {
        self.rows.iter().filter_map(|r| r.ratio).all(|r| r <= bound)
    }
}

struct RunSamples {
    u: Vec<[Vec<Vec6>; 2]>,
    t: Vec<f64>,
    sup_j: f64,
    trace: f64,
    series: Vec<EnergyReport>,
}

fn run_one(basic: &BasicState, eps: f64, data: &ProblemData, every: usize) -> Result<RunSamples> {
    let op = Operator::new(basic, SolverOptions::new(eps))?;
    let forcing = data.forcing(&op);
    let g = &basic.grid;
    let mut snap = Snapshot::zeros(g);
    let mut out = RunSamples { u: Vec::new(), t: Vec::new(), sup_j: 0.0, trace: 0.0, series: Vec::new() };
    let forcing_ref: &dyn Forcing = forcing.as_ref();
    op.run(&mut snap, forcing_ref, g.steps(), every, |s| {
        out.u.push(s.u.clone());
        out.t.push(s.t);
        let r = energy_report(&op, s, forcing_ref);
        out.sup_j = out.sup_j.max(r.j);
        let tr: f64 = (0..g.n2).map(|j| (eps * s.f7[0][g.idx(0, j)]).powi(2) * g.h2).sum();
        out.trace = out.trace.max(tr.sqrt());
        out.series.push(r);
    })?;
    Ok(out)
}

/// Run the problem for each eps in `eps_list` (strictly decreasing) and
/// compare successive solutions, sampled every `every` steps.
pub fn eps_sweep(basic: &BasicState, eps_list: &[f64], data: &ProblemData, every: usize) -> Result<SweepTable> {
    if eps_list.len() < 2 {
        return Err(Error::Precondition("eps sweep needs at least two values".into()));
    }
    if eps_list.windows(2).any(|w| !(w[1] < w[0])) || eps_list.iter().any(|e| !(*e > 0.0)) {
        return Err(Error::Precondition("eps list must be positive and strictly decreasing".into()));
    }
    let g = &basic.grid;
    let every = every.max(1);
    let mut table = SweepTable {
        eps: eps_list.to_vec(),
        rows: Vec::new(),
        sup_j: Vec::new(),
        trace_f7: Vec::new(),
        series: Vec::new(),
        truncated: None,
    };
    let mut prev: Option<RunSamples> = None;
    for (n, &eps) in eps_list.iter().enumerate() {
        let cur = match run_one(basic, eps, data, every) {
            Ok(c) => c,
            Err(Error::BlowUp { t, msg }) => {
                table.truncated = Some(format!("eps = {eps}: blow-up at t = {t}: {msg}"));
                break;
            }
            Err(e) => return Err(e),
        };
        table.sup_j.push(cur.sup_j);
        table.trace_f7.push(cur.trace);
        if let Some(p) = &prev {
            let m = p.u.len().min(cur.u.len());
            let mut acc = 0.0;
            for k in 0..m {
                let lo = if k == 0 { cur.t[0] } else { 0.5 * (cur.t[k - 1] + cur.t[k]) };
                let hi = if k + 1 == m { cur.t[k] } else { 0.5 * (cur.t[k] + cur.t[k + 1]) };
                let w = hi - lo;
                let mut q = 0.0;
                for s in 0..2 {
                    for i in 0..g.np1() {
                        let mut row = 0.0;
                        for j in 0..g.n2 {
                            let idx = g.idx(i, j);
                            for c in 0..crate::NU {
                                let d = p.u[k][s][idx][c] - cur.u[k][s][idx][c];
                                row += d * d;
                            }
                        }
                        q += row * g.weight(i);
                    }
                }
                acc += w * q;
            }
            let diff = acc.sqrt();
            let ratio = table.rows.last().map(|r: &SweepRow| diff / r.diff);
            table.rows.push(SweepRow { eps_a: eps_list[n - 1], eps_b: eps, diff, ratio });
        }
        table.series.push(cur.series.clone());
        prev = Some(cur);
    }
    Ok(table)
}
