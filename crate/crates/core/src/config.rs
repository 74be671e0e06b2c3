//! Scenario configuration files.
//!
//! The format is one `section.key = value` per line with `#` comments.
//! Numeric values may be constant arithmetic expressions (`2*pi`), lists
//! are comma separated, and state/source/exact entries are expressions in
//! (t, x1, x2). Unknown and duplicate keys are errors.

use crate::basic_state::{BasicState, BasicStateExprs};
use crate::expr::Expr;
use crate::grid::Grid;
use crate::mhd::{Eos, COMPONENT_NAMES};
use crate::solver::{ExprBoundaryData, ExprExact, ExprSource};
use crate::{Error, Result, NU};
use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioKind {
    ValidateState,
    Spectrum,
    EnergyTest,
    NeutralMode,
    RtRun,
    EpsSweep,
    AdjointCheck,
    Mms,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 8] = [
        ScenarioKind::ValidateState,
        ScenarioKind::Spectrum,
        ScenarioKind::EnergyTest,
        ScenarioKind::NeutralMode,
        ScenarioKind::RtRun,
        ScenarioKind::EpsSweep,
        ScenarioKind::AdjointCheck,
        ScenarioKind::Mms,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::ValidateState => "validate-state",
            ScenarioKind::Spectrum => "spectrum",
            ScenarioKind::EnergyTest => "energy-test",
            ScenarioKind::NeutralMode => "neutral-mode",
            ScenarioKind::RtRun => "rt-run",
            ScenarioKind::EpsSweep => "eps-sweep",
            ScenarioKind::AdjointCheck => "adjoint-check",
            ScenarioKind::Mms => "mms",
        }
    }

    pub fn parse(s: &str) -> Option<ScenarioKind> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }

    /// Sections that must appear in a config of this kind.
    pub fn required_blocks(self) -> &'static [&'static str] {
        match self {
            ScenarioKind::ValidateState => &["grid"],
            ScenarioKind::Spectrum => &["spectrum"],
            ScenarioKind::EnergyTest => &["grid", "run"],
            ScenarioKind::NeutralMode => &["neutral"],
            ScenarioKind::RtRun => &["grid", "run", "source"],
            ScenarioKind::EpsSweep => &["grid", "run", "source"],
            ScenarioKind::AdjointCheck => &["grid", "adjoint"],
            ScenarioKind::Mms => &["grid", "run", "exact"],
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Ty {
    Num,
    Int,
    Str,
    List,
    Expr,
}

const SIMPLE_KEYS: &[(&str, Ty)] = &[
    ("scenario.kind", Ty::Str),
    ("scenario.name", Ty::Str),
    ("physics.gamma", Ty::Num),
    ("physics.eos_a", Ty::Num),
    ("physics.p0", Ty::Num),
    ("physics.v2", Ty::Num),
    ("physics.H1", Ty::Num),
    ("physics.H2", Ty::Num),
    ("physics.S_plus", Ty::Num),
    ("physics.S_minus", Ty::Num),
    ("physics.rt_jump", Ty::Num),
    ("physics.rt_scale", Ty::Num),
    ("state.phi", Ty::Expr),
    ("grid.N1", Ty::Int),
    ("grid.N2", Ty::Int),
    ("grid.X1", Ty::Num),
    ("grid.X2", Ty::Num),
    ("grid.cfl", Ty::Num),
    ("run.eps", Ty::Num),
    ("run.T_final", Ty::Num),
    ("run.out", Ty::Str),
    ("run.seed", Ty::Int),
    ("run.report_every", Ty::Int),
    ("run.eps_list", Ty::List),
    ("run.levels", Ty::List),
    ("run.lift_ell", Ty::Num),
    ("run.alpha", Ty::Num),
    ("run.snapshot", Ty::Int),
    ("run.f_samples", Ty::Int),
    ("run.compare_violated", Ty::Int),
    ("source.g1", Ty::Expr),
    ("source.g2", Ty::Expr),
    ("source.g3", Ty::Expr),
    ("source.g4", Ty::Expr),
    ("source.g5", Ty::Expr),
    ("exact.phi", Ty::Expr),
    ("init.phi", Ty::Expr),
    ("spectrum.eta_min", Ty::Num),
    ("spectrum.eta_max", Ty::Num),
    ("spectrum.n_eta", Ty::Int),
    ("spectrum.xi_min", Ty::Num),
    ("spectrum.xi_max", Ty::Num),
    ("spectrum.n_xi", Ty::Int),
    ("spectrum.omega", Ty::Num),
    ("spectrum.neutral_etas", Ty::List),
    ("neutral.omega", Ty::Num),
    ("neutral.S_plus", Ty::Num),
    ("neutral.S_minus", Ty::Num),
    ("neutral.phi", Ty::Num),
    ("neutral.levels", Ty::List),
    ("adjoint.trials", Ty::Int),
    ("tol.validate", Ty::Num),
    ("tol.kappa", Ty::Num),
    ("tol.energy_drift", Ty::Num),
    ("tol.adjoint", Ty::Num),
    ("tol.order_min", Ty::Num),
    ("tol.order_max", Ty::Num),
    ("tol.div_order", Ty::Num),
    ("tol.ratio_max", Ty::Num),
    ("tol.sweep_growth", Ty::Num),
    ("tol.refine_spread", Ty::Num),
    ("tol.neutral_order", Ty::Num),
];

fn key_type(key: &str) -> Option<Ty> {
    if let Some((_, t)) = SIMPLE_KEYS.iter().find(|(k, _)| *k == key) {
        return Some(*t);
    }
    let (section, rest) = key.split_once('.')?;
    if !matches!(section, "state" | "source" | "exact" | "init") {
        return None;
    }
    let (side, comp) = rest.split_once('.')?;
    if matches!(side, "plus" | "minus") && COMPONENT_NAMES.contains(&comp) {
        Some(Ty::Expr)
    } else {
        None
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Entry {
    value: String,
    line: usize,
}

/// Key-value pairs as read from the file, before typing.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    entries: BTreeMap<String, Entry>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<RawConfig> {
        let mut raw = RawConfig::default();
        for (n, line) in text.lines().enumerate() {
            let line_no = n + 1;
            let body = line.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let Some((k, v)) = body.split_once('=') else {
                return Err(Error::ConfigSyntax {
                    line: line_no,
                    msg: format!("expected `key = value`, got `{body}`"),
                });
            };
            let (k, v) = (k.trim(), v.trim());
            if !k.contains('.') || k.split('.').any(|p| p.is_empty() || p.contains(char::is_whitespace)) {
                return Err(Error::ConfigSyntax { line: line_no, msg: format!("malformed key `{k}`") });
            }
            if v.is_empty() {
                return Err(Error::ConfigSyntax { line: line_no, msg: format!("missing value for `{k}`") });
            }
            if key_type(k).is_none() {
                return Err(Error::ConfigSyntax { line: line_no, msg: format!("unknown key `{k}`") });
            }
            if let Some(prev) = raw.entries.get(k) {
                return Err(Error::ConfigSyntax {
                    line: line_no,
                    msg: format!("duplicate key `{k}` (first set on line {})", prev.line),
                });
            }
            raw.entries.insert(k.to_string(), Entry { value: v.to_string(), line: line_no });
        }
        Ok(raw)
    }

    /// Apply a `section.key=value` override, replacing any existing value.
    pub fn set_override(&mut self, assignment: &str) -> Result<()> {
        let Some((k, v)) = assignment.split_once('=') else {
            return Err(Error::Config(format!("override `{assignment}` is not of the form section.key=value")));
        };
        let (k, v) = (k.trim(), v.trim());
        if key_type(k).is_none() {
            return Err(Error::Config(format!("override names unknown key `{k}`")));
        }
        if v.is_empty() {
            return Err(Error::Config(format!("override for `{k}` has no value")));
        }
        self.entries.insert(k.to_string(), Entry { value: v.to_string(), line: 0 });
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|e| e.value.as_str())
    }

    fn has_section(&self, section: &str) -> bool {
        self.entries.keys().any(|k| k.split('.').next() == Some(section))
    }

    /// `key = value` lines in key order; overrides are marked.
    pub fn echo(&self) -> String {
        let mut s = String::new();
        for (k, e) in &self.entries {
            s.push_str(&format!("{k} = {}", e.value));
            if e.line == 0 {
                s.push_str("  # override");
            }
            s.push('\n');
        }
        s
    }

    fn num(&self, key: &str, default: f64) -> Result<f64> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => constant(key, v),
        }
    }

    fn int(&self, key: &str, default: i64) -> Result<i64> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => integer(key, v),
        }
    }

    fn list(&self, key: &str, default: &[f64]) -> Result<Vec<f64>> {
        match self.get(key) {
            None => Ok(default.to_vec()),
            Some(v) => v.split(',').map(|s| constant(key, s.trim())).collect(),
        }
    }

    fn expr(&self, key: &str) -> Result<Option<Expr>> {
        self.get(key).map(|v| Expr::parse(v).map_err(|e| Error::Config(format!("{key}: {e}")))).transpose()
    }

    fn side_exprs(&self, section: &str, side: &str) -> Result<[Option<Expr>; NU]> {
        let mut out: [Option<Expr>; NU] = Default::default();
        for (k, name) in COMPONENT_NAMES.iter().enumerate() {
            out[k] = self.expr(&format!("{section}.{side}.{name}"))?;
        }
        Ok(out)
    }
}

fn constant(key: &str, v: &str) -> Result<f64> {
    let e = Expr::parse(v).map_err(|e| Error::Config(format!("{key}: {e}")))?;
    if (0..3).any(|k| e.depends_on(k)) {
        return Err(Error::Config(format!("{key} must be a constant, got `{v}`")));
    }
    let x = e.eval(0.0, 0.0, 0.0);
    if !x.is_finite() {
        return Err(Error::Config(format!("{key} is not finite")));
    }
    Ok(x)
}

fn integer(key: &str, v: &str) -> Result<i64> {
    v.parse::<i64>().map_err(|_| Error::Config(format!("{key} must be an integer, got `{v}`")))
}

fn positive(key: &str, v: f64) -> Result<f64> {
    if v > 0.0 {
        Ok(v)
    } else {
        Err(Error::Config(format!("{key} must be positive")))
    }
}

fn positive_int(key: &str, v: i64) -> Result<usize> {
    if v > 0 {
        Ok(v as usize)
    } else {
        Err(Error::Config(format!("{key} must be positive")))
    }
}

fn int_list(key: &str, v: &[f64]) -> Result<Vec<usize>> {
    v.iter()
        .map(|x| {
            if *x >= 1.0 && x.fract() == 0.0 {
                Ok(*x as usize)
            } else {
                Err(Error::Config(format!("{key} entries must be positive integers")))
            }
        })
        .collect()
}

/// Background plasma parameters. The basic state is p0 (plus an optional
/// tanh layer producing a normal pressure-gradient jump), v = (0, v2),
/// H = (H1, H2), S = S_plus / S_minus, flat front.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Physics {
    pub gamma: f64,
    pub eos_a: f64,
    pub p0: f64,
    pub v2: f64,
    pub h1: f64,
    pub h2: f64,
    pub s_plus: f64,
    pub s_minus: f64,
    /// Target [d1 p] (sum of one-sided normal derivatives) at x1 = 0.
    pub rt_jump: f64,
    pub rt_scale: f64,
}

impl Physics {
    pub fn eos(&self) -> Result<Eos> {
        Eos::new(self.gamma, self.eos_a)
    }

    /// Constant states at the interface.
    pub fn states(&self) -> ([f64; NU], [f64; NU]) {
        let plus = [self.p0, 0.0, self.v2, self.h1, self.h2, self.s_plus];
        let mut minus = plus;
        minus[NU - 1] = self.s_minus;
        (plus, minus)
    }
}

#[derive(Debug, Clone, Default)]
pub struct StateOverrides {
    pub plus: [Option<Expr>; NU],
    pub minus: [Option<Expr>; NU],
    pub phi: Option<Expr>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridBlock {
    pub n1: usize,
    pub n2: usize,
    pub x1: f64,
    pub x2: f64,
    pub cfl: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunBlock {
    pub eps: f64,
    pub t_final: f64,
    pub out: String,
    pub seed: u64,
    pub report_every: usize,
    pub eps_list: Vec<f64>,
    pub levels: Vec<usize>,
    pub lift_ell: f64,
    pub alpha: f64,
    pub snapshot: bool,
    pub f_samples: usize,
    pub compare_violated: bool,
}

#[derive(Debug, Clone)]
pub struct SourceBlock {
    pub source: ExprSource,
    pub boundary: ExprBoundaryData,
}

/// Initial data; missing components are zero.
#[derive(Debug, Clone)]
pub struct InitBlock {
    pub plus: [Expr; NU],
    pub minus: [Expr; NU],
    pub phi: Expr,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumBlock {
    pub eta_min: f64,
    pub eta_max: f64,
    pub n_eta: usize,
    pub xi_min: f64,
    pub xi_max: f64,
    pub n_xi: usize,
    pub omega: f64,
    pub neutral_etas: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NeutralBlock {
    pub omega: f64,
    pub s_plus: f64,
    pub s_minus: f64,
    pub phi: f64,
    pub levels: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub validate: f64,
    pub kappa: f64,
    pub energy_drift: f64,
    pub adjoint: f64,
    pub order_min: f64,
    pub order_max: f64,
    pub div_order: f64,
    pub ratio_max: f64,
    /// Allowed max/first growth of sup J and of the eps f7 trace across a sweep.
    pub sweep_growth: f64,
    pub refine_spread: f64,
    pub neutral_order: f64,
}

/// A validated scenario configuration with defaults filled in.
#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub kind: ScenarioKind,
    pub name: String,
    pub physics: Physics,
    pub state: StateOverrides,
    pub grid: GridBlock,
    pub run: RunBlock,
    pub source: Option<SourceBlock>,
    pub exact: Option<ExprExact>,
    pub init: Option<InitBlock>,
    pub spectrum: SpectrumBlock,
    pub neutral: NeutralBlock,
    pub adjoint_trials: usize,
    pub tol: Tolerances,
    pub raw: RawConfig,
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<ScenarioConfig> {
        Self::from_raw(RawConfig::parse(text)?)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<ScenarioConfig> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut raw = RawConfig::parse(&text)?;
        for o in overrides {
            raw.set_override(o)?;
        }
        Self::from_raw(raw)
    }

    pub fn from_raw(raw: RawConfig) -> Result<ScenarioConfig> {
        let kind_s = raw.get("scenario.kind").ok_or_else(|| Error::Config("scenario.kind is required".into()))?;
        let kind = ScenarioKind::parse(kind_s)
            .ok_or_else(|| Error::Config(format!("scenario.kind `{kind_s}` is not a known scenario")))?;
        for b in kind.required_blocks() {
            if !raw.has_section(b) {
                return Err(Error::Config(format!("scenario kind {kind} requires a `{b}` block")));
            }
        }
        let name = raw.get("scenario.name").unwrap_or(kind.name()).to_string();

        let physics = Physics {
            gamma: raw.num("physics.gamma", 5.0 / 3.0)?,
            eos_a: raw.num("physics.eos_a", 1.0)?,
            p0: positive("physics.p0", raw.num("physics.p0", 1.0)?)?,
            v2: raw.num("physics.v2", 0.0)?,
            h1: raw.num("physics.H1", 0.8)?,
            h2: raw.num("physics.H2", 0.3)?,
            s_plus: raw.num("physics.S_plus", 0.0)?,
            s_minus: raw.num("physics.S_minus", 0.7)?,
            rt_jump: raw.num("physics.rt_jump", 0.0)?,
            rt_scale: positive("physics.rt_scale", raw.num("physics.rt_scale", 1.0)?)?,
        };
        physics.eos().map_err(|e| Error::Config(format!("physics: {e}")))?;

        let state = StateOverrides {
            plus: raw.side_exprs("state", "plus")?,
            minus: raw.side_exprs("state", "minus")?,
            phi: raw.expr("state.phi")?,
        };
        if let Some(phi) = &state.phi {
            if phi.depends_on(1) {
                return Err(Error::Config("state.phi must not depend on x1".into()));
            }
        }

        let grid = GridBlock {
            n1: positive_int("grid.N1", raw.int("grid.N1", 64)?)?,
            n2: positive_int("grid.N2", raw.int("grid.N2", 64)?)?,
            x1: positive("grid.X1", raw.num("grid.X1", 4.0)?)?,
            x2: positive("grid.X2", raw.num("grid.X2", 2.0 * std::f64::consts::PI)?)?,
            cfl: raw.num("grid.cfl", 0.4)?,
        };
        if !(grid.cfl > 0.0 && grid.cfl <= 1.0) {
            return Err(Error::Config(format!("grid.cfl must lie in (0, 1], got {}", grid.cfl)));
        }

        let eps = raw.num("run.eps", 0.05)?;
        if eps < 0.0 {
            return Err(Error::Config("run.eps must be non-negative".into()));
        }
        let t_final = raw.num("run.T_final", 1.0)?;
        if !(t_final >= 0.0) {
            return Err(Error::Config("run.T_final must be non-negative".into()));
        }
        let seed = raw.int("run.seed", 1)?;
        if seed < 0 {
            return Err(Error::Config("run.seed must be non-negative".into()));
        }
        let eps_list = raw.list("run.eps_list", &[0.1, 0.05, 0.025, 0.0125])?;
        if eps_list.len() < 2 || eps_list.windows(2).any(|w| !(w[1] < w[0])) || eps_list.iter().any(|e| !(*e > 0.0)) {
            return Err(Error::Config(
                "run.eps_list must hold at least two positive, strictly decreasing values".into(),
            ));
        }
        let levels = int_list("run.levels", &raw.list("run.levels", &[])?)?;
        let run = RunBlock {
            eps,
            t_final,
            out: raw.get("run.out").unwrap_or("out").to_string(),
            seed: seed as u64,
            report_every: positive_int("run.report_every", raw.int("run.report_every", 5)?)?,
            eps_list,
            levels,
            lift_ell: positive("run.lift_ell", raw.num("run.lift_ell", 0.5)?)?,
            alpha: raw.num("run.alpha", crate::solver::DEFAULT_ALPHA)?,
            snapshot: raw.int("run.snapshot", 0)? != 0,
            f_samples: positive_int("run.f_samples", raw.int("run.f_samples", 40)?)?,
            compare_violated: raw.int("run.compare_violated", 0)? != 0,
        };
        if run.alpha < 0.0 {
            return Err(Error::Config("run.alpha must be non-negative".into()));
        }

        let source = if raw.has_section("source") {
            let zero = || Expr::constant(0.0);
            let fill = |a: [Option<Expr>; NU]| a.map(|e| e.unwrap_or_else(zero));
            let mut rows: [Expr; 5] = std::array::from_fn(|_| zero());
            for (k, row) in rows.iter_mut().enumerate() {
                if let Some(e) = raw.expr(&format!("source.g{}", k + 1))? {
                    if e.depends_on(1) {
                        return Err(Error::Config(format!("source.g{} must not depend on x1", k + 1)));
                    }
                    *row = e;
                }
            }
            Some(SourceBlock {
                source: ExprSource {
                    plus: fill(raw.side_exprs("source", "plus")?),
                    minus: fill(raw.side_exprs("source", "minus")?),
                },
                boundary: ExprBoundaryData { rows },
            })
        } else {
            None
        };

        let exact = if raw.has_section("exact") {
            let plus = raw.side_exprs("exact", "plus")?;
            let minus = raw.side_exprs("exact", "minus")?;
            let need = |a: [Option<Expr>; NU], side: &str| -> Result<[Expr; NU]> {
                let mut out: [Expr; NU] = std::array::from_fn(|_| Expr::constant(0.0));
                for (k, e) in a.into_iter().enumerate() {
                    out[k] =
                        e.ok_or_else(|| Error::Config(format!("exact.{side}.{} is required", COMPONENT_NAMES[k])))?;
                }
                Ok(out)
            };
            let phi = raw.expr("exact.phi")?.ok_or_else(|| Error::Config("exact.phi is required".into()))?;
            if phi.depends_on(1) {
                return Err(Error::Config("exact.phi must not depend on x1".into()));
            }
            Some(ExprExact { plus: need(plus, "plus")?, minus: need(minus, "minus")?, phi })
        } else {
            None
        };

        let init = if raw.has_section("init") {
            let fill = |a: [Option<Expr>; NU]| a.map(|e| e.unwrap_or_else(|| Expr::constant(0.0)));
            let phi = raw.expr("init.phi")?.unwrap_or_else(|| Expr::constant(0.0));
            if phi.depends_on(1) {
                return Err(Error::Config("init.phi must not depend on x1".into()));
            }
            Some(InitBlock {
                plus: fill(raw.side_exprs("init", "plus")?),
                minus: fill(raw.side_exprs("init", "minus")?),
                phi,
            })
        } else {
            None
        };

        let spectrum = SpectrumBlock {
            eta_min: positive("spectrum.eta_min", raw.num("spectrum.eta_min", 0.05)?)?,
            eta_max: raw.num("spectrum.eta_max", 1.0)?,
            n_eta: positive_int("spectrum.n_eta", raw.int("spectrum.n_eta", 40)?)?,
            xi_min: raw.num("spectrum.xi_min", -2.0)?,
            xi_max: raw.num("spectrum.xi_max", 2.0)?,
            n_xi: positive_int("spectrum.n_xi", raw.int("spectrum.n_xi", 40)?)?,
            omega: raw.num("spectrum.omega", 1.0)?,
            neutral_etas: raw.list("spectrum.neutral_etas", &[0.05, 0.025, 0.0125])?,
        };
        if spectrum.eta_max < spectrum.eta_min {
            return Err(Error::Config("spectrum.eta_max must not be below spectrum.eta_min".into()));
        }
        if spectrum.neutral_etas.iter().any(|e| !(*e > 0.0)) {
            return Err(Error::Config("spectrum.neutral_etas must be positive".into()));
        }

        let neutral = NeutralBlock {
            omega: raw.num("neutral.omega", 1.0)?,
            s_plus: raw.num("neutral.S_plus", 0.3)?,
            s_minus: raw.num("neutral.S_minus", -0.2)?,
            phi: raw.num("neutral.phi", 0.1)?,
            levels: int_list("neutral.levels", &raw.list("neutral.levels", &[16.0, 32.0, 64.0, 128.0])?)?,
        };
        if kind == ScenarioKind::NeutralMode {
            let periods = neutral.omega * grid.x2 / (2.0 * std::f64::consts::PI);
            if neutral.omega == 0.0 || (periods - periods.round()).abs() > 1e-9 {
                return Err(Error::Config("neutral.omega * grid.X2 must be a nonzero multiple of 2 pi".into()));
            }
            if neutral.levels.len() < 2 {
                return Err(Error::Config("neutral.levels needs at least two grid sizes".into()));
            }
        }
        if matches!(kind, ScenarioKind::Mms) && !run.levels.is_empty() && run.levels.len() < 2 {
            return Err(Error::Config("run.levels needs at least two grid sizes for mms".into()));
        }

        let tol = Tolerances {
            validate: raw.num("tol.validate", 1e-8)?,
            kappa: raw.num("tol.kappa", 1e-3)?,
            energy_drift: raw.num("tol.energy_drift", 0.01)?,
            adjoint: raw.num("tol.adjoint", 1e-10)?,
            order_min: raw.num("tol.order_min", 1.8)?,
            order_max: raw.num("tol.order_max", 2.2)?,
            div_order: raw.num("tol.div_order", 0.9)?,
            ratio_max: raw.num("tol.ratio_max", 0.9)?,
            sweep_growth: raw.num("tol.sweep_growth", 1.5)?,
            refine_spread: raw.num("tol.refine_spread", 0.2)?,
            neutral_order: raw.num("tol.neutral_order", 1.9)?,
        };

        Ok(ScenarioConfig {
            kind,
            name,
            physics,
            state,
            grid,
            run,
            source,
            exact,
            init,
            spectrum,
            neutral,
            adjoint_trials: positive_int("adjoint.trials", raw.int("adjoint.trials", 20)?)?,
            tol,
            raw,
        })
    }

    /// Closed-form basic state: physics profiles with state.* overrides.
    pub fn basic_state_exprs(&self) -> Result<BasicStateExprs> {
        let ph = &self.physics;
        let eos = ph.eos()?;
        let (plus, minus) = ph.states();
        let mut ex = BasicStateExprs::constant(plus, minus, eos);
        if ph.rt_jump != 0.0 {
            // each side carries half of the normal gradient jump
            let src = format!("{} + {}*tanh(x1/{})", ph.p0, 0.5 * ph.rt_jump * ph.rt_scale, ph.rt_scale);
            let p = Expr::parse(&src)?;
            ex.plus[0] = p.clone();
            ex.minus[0] = p;
        }
        for k in 0..NU {
            if let Some(e) = &self.state.plus[k] {
                ex.plus[k] = e.clone();
            }
            if let Some(e) = &self.state.minus[k] {
                ex.minus[k] = e.clone();
            }
        }
        if let Some(phi) = &self.state.phi {
            ex.phi = phi.clone();
        }
        Ok(ex)
    }

    /// Grid of n1 x n2 cells with the configured extents, and the basic
    /// state sampled on it. The time step uses the largest characteristic
    /// speed of the state plus `eps`.
    pub fn build_state(&self, ex: &BasicStateExprs, n1: usize, n2: usize, eps: f64) -> Result<BasicState> {
        let g = &self.grid;
        let probe = Grid::new(n1, n2, g.x1, g.x2, g.cfl, 1.0, self.run.t_final)?;
        let speed = BasicState::from_exprs(ex, &probe, 0.0)?.max_speed() + eps;
        let grid = Grid::new(n1, n2, g.x1, g.x2, g.cfl, speed, self.run.t_final)?;
        BasicState::from_exprs(ex, &grid, 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "scenario.kind = energy-test\ngrid.N1 = 16\ngrid.N2 = 16\nrun.T_final = 0.1\n";

    #[test]
    fn minimal_energy_config_gets_defaults() {
        let c = ScenarioConfig::parse(MINIMAL).unwrap();
        assert_eq!(c.kind, ScenarioKind::EnergyTest);
        assert_eq!(c.grid.n1, 16);
        assert_eq!(c.physics.gamma, 5.0 / 3.0);
        assert!((c.grid.x2 - 2.0 * std::f64::consts::PI).abs() < 1e-15);
        assert_eq!(c.tol.energy_drift, 0.01);
    }

    #[test]
    fn expressions_in_numbers() {
        let c = ScenarioConfig::parse(&format!("{MINIMAL}grid.X2 = 4*pi  # two periods\n")).unwrap();
        assert!((c.grid.x2 - 4.0 * std::f64::consts::PI).abs() < 1e-14);
        let e = ScenarioConfig::parse(&format!("{MINIMAL}grid.X1 = 2*x1\n")).unwrap_err();
        assert!(e.to_string().contains("grid.X1 must be a constant"), "{e}");
    }

    #[test]
    fn negative_n1_is_rejected() {
        let e = ScenarioConfig::parse("scenario.kind = energy-test\ngrid.N1 = -4\nrun.eps = 0.1\n").unwrap_err();
        assert!(matches!(e, Error::Config(_)));
        assert!(e.to_string().contains("grid.N1 must be positive"), "{e}");
    }

    #[test]
    fn syntax_errors_carry_line_numbers() {
        let e = RawConfig::parse("# header\nscenario.kind = mms\ngrid.N1 16\n").unwrap_err();
        assert!(matches!(e, Error::ConfigSyntax { line: 3, .. }), "{e:?}");
        let e = RawConfig::parse("grid.N1 = 1\ngrid.N3 = 2\n").unwrap_err();
        assert!(matches!(e, Error::ConfigSyntax { line: 2, .. }));
        assert!(e.to_string().contains("unknown key"));
        let e = RawConfig::parse("grid.N1 = 1\n\ngrid.N1 = 2\n").unwrap_err();
        assert!(e.to_string().contains("first set on line 1"), "{e}");
        assert!(RawConfig::parse("grid.N1 =\n").is_err());
    }

    #[test]
    fn missing_block_is_a_config_error() {
        let e = ScenarioConfig::parse("scenario.kind = rt-run\ngrid.N1 = 8\nrun.eps = 0.1\n").unwrap_err();
        assert!(e.to_string().contains("requires a `source` block"), "{e}");
        let e = ScenarioConfig::parse("scenario.kind = nope\n").unwrap_err();
        assert!(e.to_string().contains("not a known scenario"));
    }

    #[test]
    fn overrides_replace_values() {
        let mut raw = RawConfig::parse(MINIMAL).unwrap();
        raw.set_override("grid.N1=32").unwrap();
        raw.set_override("run.eps = 0.2").unwrap();
        assert!(raw.set_override("grid.bogus=1").is_err());
        let c = ScenarioConfig::from_raw(raw).unwrap();
        assert_eq!(c.grid.n1, 32);
        assert_eq!(c.run.eps, 0.2);
        assert!(c.raw.echo().contains("grid.N1 = 32  # override"));
    }

    #[test]
    fn rt_jump_sets_normal_pressure_gradient() {
        let text = "scenario.kind = rt-run\nphysics.rt_jump = 0.5\nphysics.rt_scale = 2\ngrid.N1 = 8\ngrid.N2 = 8\nrun.T_final = 0.1\nsource.g1 = 0\n";
        let c = ScenarioConfig::parse(text).unwrap();
        let b = c.build_state(&c.basic_state_exprs().unwrap(), 8, 8, 0.0).unwrap();
        for j in 0..8 {
            assert!((b.rt_jump(j) - 0.5).abs() < 1e-14);
        }
    }

    #[test]
    fn state_overrides_apply() {
        let text = format!("{MINIMAL}state.plus.v2 = 0.1*x1\nstate.phi = 0.05*sin(x2)\n");
        let c = ScenarioConfig::parse(&text).unwrap();
        let ex = c.basic_state_exprs().unwrap();
        assert_eq!(ex.plus[2].eval(0.0, 2.0, 0.0), 0.2);
        assert_eq!(ex.minus[2].eval(0.0, 2.0, 0.0), 0.0);
        let e = ScenarioConfig::parse(&format!("{MINIMAL}state.phi = x1\n")).unwrap_err();
        assert!(e.to_string().contains("state.phi"));
    }

    #[test]
    fn mms_requires_every_exact_component() {
        let text = "scenario.kind = mms\ngrid.N1 = 8\nrun.eps = 0.1\nexact.phi = 0\nexact.plus.p = sin(x2)\n";
        let e = ScenarioConfig::parse(text).unwrap_err();
        assert!(e.to_string().contains("exact.plus.v1 is required"), "{e}");
    }
}
