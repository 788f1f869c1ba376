//! Orbits of the eps > 0 system from the entry section to the exit section,
//! shooting for the control parameter and entry-measure ensembles.

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;

use crate::error::{Error, Result, Side};
use crate::measures::{EmpiricalSample, TransportMeasure};
use crate::model::LienardSystem;
use crate::ode::{Dopri5, State, Step};
use crate::sdi::SdiEvaluator;

/// Smallest eps accepted unless [`SimConfig::allow_small_eps`] is set.
pub const MIN_EPS: f64 = 1.0 / 400.0;

/// Exit-height tolerance at which shooting stops early.
pub const SHOOT_HEIGHT_TOL: f64 = 1e-8;

/// Bracket width at which shooting stops.
pub const SHOOT_WIDTH_TOL: f64 = 1e-15;

/// Required accuracy of a reported crossing point.
pub const CROSSING_TOL: f64 = 1e-10;

/// Default entry section: through the attracting branch at this multiple of `s_c^-`.
pub const ENTRY_SECTION_FACTOR: f64 = 1.5;

/// Default exit section: through the repelling branch at this multiple of `s_c^+`.
pub const EXIT_SECTION_FACTOR: f64 = 1.1;

/// Ensemble runs with more failures than this fraction are flagged.
pub const FAILURE_FLAG_FRACTION: f64 = 0.10;

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub eps: f64,
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_step: f64,
    /// Fast-time budget per orbit; `None` means `50 / eps`.
    pub max_time: Option<f64>,
    /// x-position of the entry section (on the attracting side).
    pub x_entry: f64,
    /// x-position of the exit section (on the repelling side).
    pub x_exit: f64,
    pub allow_small_eps: bool,
}

impl SimConfig {
    pub fn new(eps: f64, x_entry: f64, x_exit: f64) -> Self {
        Self {
            eps,
            abs_tol: 1e-12,
            rel_tol: 1e-10,
            max_step: 1e-2,
            max_time: None,
            x_entry,
            x_exit,
            allow_small_eps: false,
        }
    }

    /// Sections at the default positions, see [`default_sections`].
    pub fn with_default_sections(
        system: &LienardSystem,
        eps: f64,
        sc_minus: f64,
        sc_plus: f64,
    ) -> Result<Self> {
        let (x_entry, x_exit) = default_sections(system, sc_minus, sc_plus)?;
        Ok(Self::new(eps, x_entry, x_exit))
    }

    pub fn budget(&self) -> f64 {
        self.max_time.unwrap_or(50.0 / self.eps)
    }

    pub fn check(&self) -> Result<()> {
        if !(self.eps > 0.0) {
            return Err(Error::Config(format!(
                "eps must be positive, got {}",
                self.eps
            )));
        }
        if self.eps < MIN_EPS && !self.allow_small_eps {
            return Err(Error::Config(format!(
                "eps = {} is below {MIN_EPS}; the canard window is then not resolvable in double precision",
                self.eps
            )));
        }
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0 && self.max_step > 0.0) {
            return Err(Error::Config(
                "tolerances and max_step must be positive".into(),
            ));
        }
        if !(self.x_entry > 0.0 && self.x_exit < 0.0) {
            return Err(Error::Config(format!(
                "sections must lie on opposite sides of the contact point (x_entry = {}, x_exit = {})",
                self.x_entry, self.x_exit
            )));
        }
        Ok(())
    }

    fn solver(&self) -> Dopri5 {
        Dopri5 {
            abs_tol: self.abs_tol,
            rel_tol: self.rel_tol,
            max_step: self.max_step,
        }
    }
}

/// The entry section passes through the attracting branch at height
/// `1.5 s_c^-`, the exit section through the repelling branch at `1.1 s_c^+`
/// (or at `x_min` when the branch does not reach that height). Orbits leave
/// the repelling branch just before meeting the exit section, so the exit
/// height read there carries little drift from the fast jump.
pub fn default_sections(system: &LienardSystem, sc_minus: f64, sc_plus: f64) -> Result<(f64, f64)> {
    let eval = SdiEvaluator::new(system.clone());
    let h_entry = (ENTRY_SECTION_FACTOR * sc_minus).min(eval.branch_max(Side::Attracting));
    let x_entry = eval.branch_root(h_entry, Side::Attracting)?;
    let top = eval.branch_max(Side::Repelling);
    let x_exit = if EXIT_SECTION_FACTOR * sc_plus < top {
        eval.branch_root(EXIT_SECTION_FACTOR * sc_plus, Side::Repelling)?
    } else {
        system.x_min()
    };
    Ok((x_entry, x_exit))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Outcome {
    /// Crossed the exit section with decreasing x at height `s_plus`.
    Crossed {
        s_plus: f64,
        t: f64,
    },
    /// Came back to x > 0 after passing the contact point: the orbit left
    /// the repelling branch towards the attracting one.
    EscapedRight,
    /// Fell below the contact region (y < -f(x_min)) or left the domain
    /// on the left without meeting the exit section.
    EscapedDown,
    BudgetExhausted,
}

impl Outcome {
    pub fn label(&self) -> &'static str {
        match self {
            Outcome::Crossed { .. } => "crossed",
            Outcome::EscapedRight => "escaped_right",
            Outcome::EscapedDown => "escaped_down",
            Outcome::BudgetExhausted => "budget_exhausted",
        }
    }

    pub fn exit_height(&self) -> Option<f64> {
        match self {
            Outcome::Crossed { s_plus, .. } => Some(*s_plus),
            _ => None,
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossingResult {
    pub outcome: Outcome,
    pub steps: usize,
    /// Point reported for a crossing (x, y).
    pub point: Option<State>,
}

/// Integrates from `(x_entry, s_minus)` until the exit section is crossed
/// with decreasing x, or an escape is detected.
pub fn integrate_to_section(
    system: &LienardSystem,
    cfg: &SimConfig,
    lambda: f64,
    s_minus: f64,
) -> Result<CrossingResult> {
    cfg.check()?;
    let eps = cfg.eps;
    let rhs = |_t: f64, u: &State| {
        let (dx, dy) = system.field(eps, lambda, u[0], u[1]);
        [dx, dy]
    };
    let solver = cfg.solver();
    let x_exit = cfg.x_exit;
    let y_floor = -system
        .repelling_max()
        .abs()
        .max(system.attracting_max().abs());
    let mut turned = false;
    let mut steps = 0usize;

    let found = solver.solve(
        rhs,
        0.0,
        [cfg.x_entry, s_minus],
        cfg.budget(),
        |step: &Step| {
            steps += 1;
            let (x0, x1) = (step.y0[0], step.y1[0]);
            if x0 > x_exit && x1 <= x_exit {
                return Some(Located::Crossing(*step));
            }
            if x1 < 0.0 {
                turned = true;
            }
            if turned && x1 > 0.0 {
                return Some(Located::Outcome(Outcome::EscapedRight));
            }
            if step.y1[1] < y_floor || x1 < system.x_min().min(x_exit) {
                return Some(Located::Outcome(Outcome::EscapedDown));
            }
            None
        },
    )?;

    Ok(match found {
        None => CrossingResult {
            outcome: Outcome::BudgetExhausted,
            steps,
            point: None,
        },
        Some(Located::Outcome(outcome)) => CrossingResult {
            outcome,
            steps,
            point: None,
        },
        Some(Located::Crossing(step)) => {
            let (t, point) = locate_crossing(&solver, &rhs, &step, x_exit);
            CrossingResult {
                outcome: Outcome::Crossed {
                    s_plus: point[1],
                    t,
                },
                steps,
                point: Some(point),
            }
        }
    })
}

enum Located {
    Crossing(Step),
    Outcome(Outcome),
}

/// Bisection on the dense output for `x(t) = x_exit`, then an exact RK step
/// from the start of the bracketing step (with Newton corrections if the
/// interpolant was not accurate enough).
fn locate_crossing<F: Fn(f64, &State) -> State>(
    solver: &Dopri5,
    rhs: &F,
    step: &Step,
    x_exit: f64,
) -> (f64, State) {
    let mut lo = step.t0;
    let mut hi = step.t1;
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if step.dense(mid)[0] > x_exit {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut t = 0.5 * (lo + hi);
    let mut point = solver.fixed_step(rhs, step.t0, &step.y0, t - step.t0);
    for _ in 0..4 {
        let residual = point[0] - x_exit;
        if residual.abs() <= 0.1 * CROSSING_TOL {
            break;
        }
        let speed = rhs(t, &point)[0];
        if speed == 0.0 {
            break;
        }
        t -= residual / speed;
        point = solver.fixed_step(rhs, step.t0, &step.y0, t - step.t0);
    }
    (t, point)
}

/// Which side of the target exit height an orbit falls on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Class {
    Low,
    High,
}

fn classify(outcome: &Outcome, sc_plus: f64) -> Class {
    match outcome {
        Outcome::Crossed { s_plus, .. } if *s_plus < sc_plus => Class::Low,
        Outcome::Crossed { .. } => Class::High,
        Outcome::EscapedDown => Class::Low,
        Outcome::EscapedRight | Outcome::BudgetExhausted => Class::High,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlResult {
    pub lambda: f64,
    pub iterations: usize,
    /// Exit height of the orbit through `s_c^-` at the returned lambda, if it
    /// crossed.
    pub exit: Option<f64>,
}

/// Shoots for `lambda_c(eps)`: the orbit through `s_c^-` exits at `s_c^+`.
/// Bisects on the orbit classification (exits below `s_c^+` vs exits above or
/// turns back), which is monotone in lambda near the canard.
pub fn find_control_lambda(
    system: &LienardSystem,
    cfg: &SimConfig,
    sc_minus: f64,
    sc_plus: f64,
    bracket: (f64, f64),
) -> Result<ControlResult> {
    let (mut lo, mut hi) = bracket;
    let run = |lambda: f64| integrate_to_section(system, cfg, lambda, sc_minus).map(|r| r.outcome);
    let out_lo = run(lo)?;
    let out_hi = run(hi)?;
    let class_lo = classify(&out_lo, sc_plus);
    let class_hi = classify(&out_hi, sc_plus);
    if class_lo == class_hi {
        return Err(Error::Bracket { lo, hi });
    }
    let mut best = (lo, out_lo.exit_height());
    let mut iterations = 0;
    while hi - lo > SHOOT_WIDTH_TOL {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        iterations += 1;
        let out = run(mid)?;
        best = (mid, out.exit_height());
        if let Some(s) = out.exit_height() {
            if (s - sc_plus).abs() <= SHOOT_HEIGHT_TOL {
                break;
            }
        }
        if classify(&out, sc_plus) == class_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(ControlResult {
        lambda: best.0,
        iterations,
        exit: best.1,
    })
}

/// Exit height `S_eps(s^-)` at the given control value.
pub fn transition_map(
    system: &LienardSystem,
    cfg: &SimConfig,
    lambda_c: f64,
    s_minus: f64,
) -> Result<Outcome> {
    integrate_to_section(system, cfg, lambda_c, s_minus).map(|r| r.outcome)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleMember {
    pub id: usize,
    pub s_entry: f64,
    pub outcome: Outcome,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleRun {
    pub eps: f64,
    pub lambda_c: f64,
    pub entry: EmpiricalSample,
    pub exits: EmpiricalSample,
    pub members: Vec<EnsembleMember>,
    pub failures: BTreeMap<&'static str, usize>,
    /// Set when more than [`FAILURE_FLAG_FRACTION`] of the orbits failed.
    pub flagged: bool,
}

impl EnsembleRun {
    pub fn failure_count(&self) -> usize {
        self.failures.values().sum()
    }
}

/// Samples `n` entry heights from `entry` and maps each through the
/// transition map. Members are computed independently, so the result does
/// not depend on the worker count.
pub fn ensemble_transport(
    system: &LienardSystem,
    cfg: &SimConfig,
    lambda_c: f64,
    entry: &TransportMeasure,
    n: usize,
    seed: u64,
) -> Result<EnsembleRun> {
    let sample = entry.sample(n, seed);
    let outcomes: Vec<Result<Outcome>> = sample
        .values
        .par_iter()
        .map(|&s| transition_map(system, cfg, lambda_c, s))
        .collect();
    let mut members = Vec::with_capacity(n);
    let mut exits = Vec::with_capacity(n);
    let mut failures = BTreeMap::new();
    for (id, (s, out)) in sample.values.iter().zip(outcomes).enumerate() {
        let outcome = out?;
        match outcome.exit_height() {
            Some(h) => exits.push(h),
            None => *failures.entry(outcome.label()).or_insert(0) += 1,
        }
        members.push(EnsembleMember {
            id,
            s_entry: *s,
            outcome,
        });
    }
    let failed: usize = failures.values().sum();
    Ok(EnsembleRun {
        eps: cfg.eps,
        lambda_c,
        flagged: (failed as f64) > FAILURE_FLAG_FRACTION * n as f64,
        exits: EmpiricalSample {
            count: exits.len(),
            values: exits,
            seed,
        },
        entry: sample,
        members,
        failures,
    })
}
