//! The slow relation function, its two-section variant with buffer points,
//! zeros of the total slow divergence integral and what they imply for
//! invariant measures and cyclicity.

use std::cell::RefCell;
use std::fmt;

use crate::error::{Error, Result, Side};
use crate::model::Order;
use crate::roots::bisect;
use crate::sdi::SdiEvaluator;

pub const DEFAULT_SOLVE_TOL: f64 = 1e-12;
pub const DEFAULT_SCAN_POINTS: usize = 2000;
/// Below this on the whole scan grid the integral counts as identically zero.
pub const IDENTICALLY_ZERO_TOL: f64 = 1e-12;
/// Zeros with `|I'|` above this are reported simple.
pub const SIMPLE_ZERO_TOL: f64 = 1e-8;
/// Local minima of `|I|` below this are tangential candidates.
pub const TANGENTIAL_TOL: f64 = 1e-10;
pub const ZERO_REFINE_TOL: f64 = 1e-12;
pub const ORBIT_STEP_TOL: f64 = 1e-12;

/// Which of the two mirrored defining identities a single-section relation uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    /// `I_-(s) + I_+(S(s)) = 0`, used when `-I_-(s0) <= I_+(s0)`.
    Forward,
    /// `I_-(S(s)) + I_+(s) = 0`.
    Mirrored,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FlowCase {
    Tunnel,
    Funnel { buffer: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Mode {
    SingleSection {
        s0: f64,
        orientation: Orientation,
    },
    TwoSection {
        l_lo: f64,
        l_hi: f64,
        sc_minus: f64,
        sc_plus: f64,
        case: FlowCase,
    },
}

#[derive(Debug, Clone)]
pub struct SlowRelation {
    evaluator: SdiEvaluator,
    mode: Mode,
    solve_tol: f64,
}

/// Solves `g(x) = target` for increasing, fallible `g` on `[lo, hi]`.
fn solve_increasing(g: impl Fn(f64) -> Result<f64>, target: f64, lo: f64, hi: f64) -> Result<f64> {
    let failure = RefCell::new(None);
    let x = bisect(
        |x| match g(x) {
            Ok(v) => v - target,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                0.0
            }
        },
        lo,
        hi,
        0.0,
    );
    match failure.into_inner() {
        Some(e) => Err(e),
        None => Ok(x),
    }
}

impl SlowRelation {
    /// Single-section relation on `[0, s0]`; the orientation is fixed here.
    pub fn single_section(evaluator: SdiEvaluator, s0: f64) -> Result<Self> {
        let max = evaluator.common_max();
        if !(s0 > 0.0 && s0 <= max) {
            return Err(Error::OutOfRange {
                value: s0,
                lo: 0.0,
                hi: max,
            });
        }
        let orientation = if -evaluator.sdi_minus(s0)? <= evaluator.sdi_plus(s0)? {
            Orientation::Forward
        } else {
            Orientation::Mirrored
        };
        Ok(Self {
            evaluator,
            mode: Mode::SingleSection { s0, orientation },
            solve_tol: DEFAULT_SOLVE_TOL,
        })
    }

    /// Two-section relation on the entry interval `L = [l_lo, l_hi]`.
    pub fn two_section(
        evaluator: SdiEvaluator,
        l: (f64, f64),
        sc_minus: f64,
        sc_plus: f64,
    ) -> Result<Self> {
        let (l_lo, l_hi) = l;
        let amax = evaluator.branch_max(Side::Attracting);
        if !(l_lo > 0.0 && l_lo < l_hi && l_hi <= amax) {
            return Err(Error::Config(format!(
                "entry interval [{l_lo}, {l_hi}] must satisfy 0 < lo < hi <= {amax}"
            )));
        }
        let case = match buffer_point(&evaluator, sc_minus, sc_plus)? {
            Some(buffer) => FlowCase::Funnel { buffer },
            None => FlowCase::Tunnel,
        };
        Ok(Self {
            evaluator,
            mode: Mode::TwoSection {
                l_lo,
                l_hi,
                sc_minus,
                sc_plus,
                case,
            },
            solve_tol: DEFAULT_SOLVE_TOL,
        })
    }

    pub fn evaluator(&self) -> &SdiEvaluator {
        &self.evaluator
    }

    pub fn mode(&self) -> &Mode {
        &self.mode
    }

    pub fn solve_tol(&self) -> f64 {
        self.solve_tol
    }

    pub fn orientation(&self) -> Option<Orientation> {
        match self.mode {
            Mode::SingleSection { orientation, .. } => Some(orientation),
            Mode::TwoSection { .. } => None,
        }
    }

    pub fn flow_case(&self) -> Option<FlowCase> {
        match self.mode {
            Mode::TwoSection { case, .. } => Some(case),
            Mode::SingleSection { .. } => None,
        }
    }

    pub fn buffer(&self) -> Option<f64> {
        match self.flow_case() {
            Some(FlowCase::Funnel { buffer }) => Some(buffer),
            _ => None,
        }
    }

    pub fn sc_plus(&self) -> Option<f64> {
        match self.mode {
            Mode::TwoSection { sc_plus, .. } => Some(sc_plus),
            Mode::SingleSection { .. } => None,
        }
    }

    pub fn entry_interval(&self) -> Option<(f64, f64)> {
        match self.mode {
            Mode::TwoSection { l_lo, l_hi, .. } => Some((l_lo, l_hi)),
            Mode::SingleSection { .. } => None,
        }
    }

    fn sdi_minus_increasing(&self, s: f64) -> Result<f64> {
        Ok(-self.evaluator.sdi_minus(s)?)
    }

    /// Height `u` on the repelling branch with `I_+(u) = value`.
    fn plus_level(&self, value: f64, cap: f64) -> Result<f64> {
        if value <= 0.0 {
            return Ok(0.0);
        }
        let top = self.evaluator.sdi_plus(cap)?;
        if value > top {
            return Err(Error::BranchRange {
                s: cap,
                side: Side::Repelling,
                max: self.evaluator.branch_max(Side::Repelling),
            });
        }
        solve_increasing(|u| self.evaluator.sdi_plus(u), value, 0.0, cap)
    }

    /// Height `u` on the attracting branch with `-I_-(u) = value`.
    fn minus_level(&self, value: f64, cap: f64) -> Result<f64> {
        if value <= 0.0 {
            return Ok(0.0);
        }
        let top = self.sdi_minus_increasing(cap)?;
        if value > top {
            return Err(Error::BranchRange {
                s: cap,
                side: Side::Attracting,
                max: self.evaluator.branch_max(Side::Attracting),
            });
        }
        solve_increasing(|u| self.sdi_minus_increasing(u), value, 0.0, cap)
    }

    /// `S(s)` on `[0, s0]`.
    pub fn slow_relation(&self, s: f64) -> Result<f64> {
        let Mode::SingleSection { s0, orientation } = self.mode else {
            return Err(Error::Config(
                "slow_relation needs a single-section relation".into(),
            ));
        };
        if !(0.0..=s0).contains(&s) {
            return Err(Error::OutOfRange {
                value: s,
                lo: 0.0,
                hi: s0,
            });
        }
        if s == 0.0 {
            return Ok(0.0);
        }
        match orientation {
            Orientation::Forward => self.plus_level(-self.evaluator.sdi_minus(s)?, s0),
            Orientation::Mirrored => self.minus_level(self.evaluator.sdi_plus(s)?, s0),
        }
    }

    /// Residual of the defining identity at `(s, S(s))`.
    pub fn residual(&self, s: f64, image: f64) -> Result<f64> {
        let e = &self.evaluator;
        Ok(match self.orientation() {
            Some(Orientation::Mirrored) => e.sdi_minus(image)? + e.sdi_plus(s)?,
            _ => e.sdi_minus(s)? + e.sdi_plus(image)?,
        })
    }

    fn check_entry(&self, s: f64) -> Result<()> {
        let Mode::TwoSection { l_lo, l_hi, .. } = self.mode else {
            return Err(Error::Config("needs a two-section relation".into()));
        };
        if !(l_lo..=l_hi).contains(&s) {
            return Err(Error::OutOfRange {
                value: s,
                lo: l_lo,
                hi: l_hi,
            });
        }
        Ok(())
    }

    /// `S0(s-)`, defined by `I_-(s-) + I_+(S0(s-)) = 0` on all of `L`.
    pub fn two_section_relation(&self, s_minus: f64) -> Result<f64> {
        self.check_entry(s_minus)?;
        let value = -self.evaluator.sdi_minus(s_minus)?;
        self.plus_level(value, self.evaluator.branch_max(Side::Repelling))
    }

    /// `S0^{-1}(s+)` for `s+` in `S0(L)`.
    pub fn relation_inverse(&self, s_plus: f64) -> Result<f64> {
        let (l_lo, l_hi) = self
            .entry_interval()
            .ok_or_else(|| Error::Config("needs a two-section relation".into()))?;
        let lo = self.two_section_relation(l_lo)?;
        // In the funnel case S0 may leave the repelling branch inside L.
        let hi = match self.two_section_relation(l_hi) {
            Err(Error::BranchRange { .. }) => self.evaluator.branch_max(Side::Repelling),
            other => other?,
        };
        let slack = 1e-12 * hi.max(1.0);
        if !(s_plus >= lo - slack && s_plus <= hi + slack) {
            return Err(Error::OutOfRange {
                value: s_plus,
                lo,
                hi,
            });
        }
        let value = self
            .evaluator
            .sdi_plus(s_plus.clamp(0.0, self.evaluator.branch_max(Side::Repelling)))?;
        Ok(self.minus_level(value, l_hi)?.clamp(l_lo, l_hi))
    }

    /// The limit map: `S0` below the buffer point, `s_c^+` at or above it.
    pub fn limit_map(&self, s_minus: f64) -> Result<f64> {
        self.check_entry(s_minus)?;
        match self.mode {
            Mode::TwoSection {
                case: FlowCase::Funnel { buffer },
                sc_plus,
                ..
            } if s_minus >= buffer => Ok(sc_plus),
            _ => self.two_section_relation(s_minus),
        }
    }

    /// Iterates `S` from `s` until consecutive iterates differ by less than
    /// [`ORBIT_STEP_TOL`].
    pub fn iterate_orbit(&self, s: f64, max_iter: usize) -> Result<Orbit> {
        let mut current = s;
        let mut direction = 0.0f64;
        let mut monotone = true;
        for step in 1..=max_iter {
            let next = self.slow_relation(current)?;
            let delta = next - current;
            if delta != 0.0 {
                if direction != 0.0 && delta.signum() != direction {
                    monotone = false;
                }
                direction = delta.signum();
            }
            current = next;
            if delta.abs() < ORBIT_STEP_TOL {
                return Ok(Orbit {
                    limit: current,
                    steps: step,
                    monotone,
                });
            }
        }
        let last_step = (self.slow_relation(current)? - current).abs();
        Err(Error::NoConvergence {
            iterations: max_iter,
            last_step,
        })
    }

    /// Upper end of the single-section domain.
    pub fn s0(&self) -> Option<f64> {
        match self.mode {
            Mode::SingleSection { s0, .. } => Some(s0),
            Mode::TwoSection { .. } => None,
        }
    }

    /// Cyclicity bound for the canard cycle at height `s`.
    pub fn cyclicity_report(&self, s: f64) -> Result<CyclicityReport> {
        let e = &self.evaluator;
        let sdi = e.sdi_total(s)?;
        let hopf = e.system().contact_order() == Order::Finite(2)
            && e.system().singularity_order() == Order::Finite(1);
        let (bound, stability) = if sdi.abs() >= TANGENTIAL_TOL {
            let stability = if sdi < 0.0 {
                Stability::Attracting
            } else {
                Stability::Repelling
            };
            (CycleBound::Exactly(1), Some(stability))
        } else {
            let hi = self.s0().unwrap_or_else(|| e.common_max());
            if let ZeroScan::IdenticallyZero { .. } = find_zeros_with_grid(e, (hi * 1e-3, hi), 200)?
            {
                (CycleBound::NoFiniteBound, None)
            } else if e.sdi_total_derivative(s)?.abs() > SIMPLE_ZERO_TOL {
                (CycleBound::Exactly(2), None)
            } else {
                (CycleBound::AtLeastThree, None)
            }
        };
        Ok(CyclicityReport {
            s,
            sdi,
            bound,
            stability,
            slow_fast_hopf: hopf,
        })
    }
}

/// Unique `s_b^-` in `(0, s_c^-)` with `I_-(s_b^-) + I_+(s_c^+) = 0`, or `None`
/// when `-I_-(s_c^-) <= I_+(s_c^+)`.
pub fn buffer_point(evaluator: &SdiEvaluator, sc_minus: f64, sc_plus: f64) -> Result<Option<f64>> {
    let target = evaluator.sdi_plus(sc_plus)?;
    if -evaluator.sdi_minus(sc_minus)? <= target {
        return Ok(None);
    }
    let s = solve_increasing(|u| Ok(-evaluator.sdi_minus(u)?), target, 0.0, sc_minus)?;
    Ok(Some(s))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Orbit {
    pub limit: f64,
    pub steps: usize,
    pub monotone: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Multiplicity {
    Simple,
    AtLeastTwo,
}

impl fmt::Display for Multiplicity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Multiplicity::Simple => f.write_str("1"),
            Multiplicity::AtLeastTwo => f.write_str(">=2"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Zero {
    pub s: f64,
    pub multiplicity: Multiplicity,
    /// Found as a near-zero local minimum of `|I|` without a sign change.
    pub tangential: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ZeroScan {
    IdenticallyZero { max_abs: f64 },
    Zeros(Vec<Zero>),
}

pub fn find_zeros(evaluator: &SdiEvaluator, interval: (f64, f64)) -> Result<ZeroScan> {
    find_zeros_with_grid(evaluator, interval, DEFAULT_SCAN_POINTS)
}

/// Scans `I` on a uniform grid over `interval` for sign changes and
/// tangential candidates. The upper end is clipped to the common branch range.
pub fn find_zeros_with_grid(
    evaluator: &SdiEvaluator,
    interval: (f64, f64),
    points: usize,
) -> Result<ZeroScan> {
    let (a, b) = (interval.0, interval.1.min(evaluator.common_max()));
    if !(a > 0.0 && a < b) {
        return Err(Error::Config(format!(
            "zero scan needs 0 < a < b, got [{a}, {b}]"
        )));
    }
    let n = points.max(2);
    let h = (b - a) / (n - 1) as f64;
    let grid: Vec<f64> = (0..n)
        .map(|i| if i + 1 == n { b } else { a + h * i as f64 })
        .collect();
    let values = grid
        .iter()
        .map(|&s| evaluator.sdi_total(s))
        .collect::<Result<Vec<_>>>()?;
    let max_abs = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if max_abs < IDENTICALLY_ZERO_TOL {
        return Ok(ZeroScan::IdenticallyZero { max_abs });
    }
    let multiplicity = |s: f64| -> Result<Multiplicity> {
        Ok(
            if evaluator.sdi_total_derivative(s)?.abs() > SIMPLE_ZERO_TOL {
                Multiplicity::Simple
            } else {
                Multiplicity::AtLeastTwo
            },
        )
    };
    let mut zeros = Vec::new();
    for i in 0..n {
        if values[i] == 0.0 {
            zeros.push(Zero {
                s: grid[i],
                multiplicity: multiplicity(grid[i])?,
                tangential: false,
            });
            continue;
        }
        if i + 1 < n && values[i + 1] != 0.0 && values[i].signum() != values[i + 1].signum() {
            let failure = RefCell::new(None);
            let s = bisect(
                |s| {
                    evaluator.sdi_total(s).unwrap_or_else(|e| {
                        failure.borrow_mut().get_or_insert(e);
                        0.0
                    })
                },
                grid[i],
                grid[i + 1],
                ZERO_REFINE_TOL,
            );
            if let Some(e) = failure.into_inner() {
                return Err(e);
            }
            zeros.push(Zero {
                s,
                multiplicity: multiplicity(s)?,
                tangential: false,
            });
        }
    }
    for i in 1..n.saturating_sub(1) {
        let (l, c, r) = (values[i - 1], values[i], values[i + 1]);
        let no_sign_change = l.signum() == c.signum() && c.signum() == r.signum() && c != 0.0;
        if no_sign_change && c.abs() < TANGENTIAL_TOL && c.abs() <= l.abs() && c.abs() <= r.abs() {
            zeros.push(Zero {
                s: grid[i],
                multiplicity: Multiplicity::AtLeastTwo,
                tangential: true,
            });
        }
    }
    zeros.sort_by(|x, y| x.s.total_cmp(&y.s));
    Ok(ZeroScan::Zeros(zeros))
}

/// Atoms of the extremal invariant measures of `S`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureClass {
    /// `0` followed by the detected zeros, increasing.
    pub atoms: Vec<f64>,
    /// Multiplicities of the nonzero atoms.
    pub multiplicities: Vec<Multiplicity>,
    pub uniquely_ergodic: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum InvariantMeasures {
    /// Every probability measure is invariant (`S` is the identity).
    Every { max_abs: f64 },
    /// Invariant measures are the convex hull of the Diracs at `atoms`.
    ConvexHull(MeasureClass),
}

pub fn classify_invariant_measures(
    evaluator: &SdiEvaluator,
    interval: (f64, f64),
) -> Result<InvariantMeasures> {
    Ok(match find_zeros(evaluator, interval)? {
        ZeroScan::IdenticallyZero { max_abs } => InvariantMeasures::Every { max_abs },
        ZeroScan::Zeros(zeros) => {
            let mut atoms = vec![0.0];
            atoms.extend(zeros.iter().map(|z| z.s));
            InvariantMeasures::ConvexHull(MeasureClass {
                uniquely_ergodic: zeros.is_empty(),
                multiplicities: zeros.iter().map(|z| z.multiplicity).collect(),
                atoms,
            })
        }
    })
}

impl fmt::Display for InvariantMeasures {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InvariantMeasures::Every { max_abs } => {
                writeln!(
                    f,
                    "slow divergence integral identically zero (max |I| = {max_abs:e})"
                )?;
                writeln!(
                    f,
                    "slow relation is the identity; every probability measure is invariant"
                )?;
                write!(f, "uniquely_ergodic = false")
            }
            InvariantMeasures::ConvexHull(c) => {
                let atoms: Vec<String> = c.atoms.iter().map(|a| format!("{a:.12}")).collect();
                writeln!(f, "atoms = [{}]", atoms.join(", "))?;
                let mult: Vec<String> = c.multiplicities.iter().map(ToString::to_string).collect();
                writeln!(f, "multiplicities = [{}]", mult.join(", "))?;
                writeln!(
                    f,
                    "invariant measures = convex hull of {} Dirac measure(s), weights eta_0..eta_{} free",
                    c.atoms.len(),
                    c.atoms.len() - 1
                )?;
                write!(f, "uniquely_ergodic = {}", c.uniquely_ergodic)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stability {
    Attracting,
    Repelling,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CycleBound {
    Exactly(u32),
    /// Zero of multiplicity at least two; no sharper bound is resolved.
    AtLeastThree,
    /// `I` vanishes identically.
    NoFiniteBound,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CyclicityReport {
    pub s: f64,
    pub sdi: f64,
    pub bound: CycleBound,
    pub stability: Option<Stability>,
    /// Contact orders `(2, 1)`; otherwise the bound refers to the
    /// non-generic family with a breaking parameter.
    pub slow_fast_hopf: bool,
}

impl fmt::Display for CyclicityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "s = {:.6}: I = {:.6e}, ", self.s, self.sdi)?;
        match self.bound {
            CycleBound::Exactly(k) => write!(f, "cyclicity <= {k}")?,
            CycleBound::AtLeastThree => write!(f, "cyclicity bound >= 3, undetermined")?,
            CycleBound::NoFiniteBound => write!(f, "no finite cyclicity bound")?,
        }
        match self.stability {
            Some(Stability::Attracting) => write!(f, ", hyperbolic attracting")?,
            Some(Stability::Repelling) => write!(f, ", hyperbolic repelling")?,
            None => {}
        }
        let family = if self.slow_fast_hopf {
            "slow-fast Hopf"
        } else {
            "non-generic"
        };
        write!(f, " ({family} family)")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::LienardSystem;

    fn vdp() -> SdiEvaluator {
        SdiEvaluator::new(LienardSystem::van_der_pol())
    }

    fn quartic() -> SdiEvaluator {
        SdiEvaluator::new(LienardSystem::quartic())
    }

    // Antiderivative of the van der Pol integrand, I_-(s) = -P(omega),
    // I_+(s) = P(alpha).
    fn p_vdp(x: f64) -> f64 {
        x * x / 2.0 + 2.0 * x.powi(3) / 3.0 + x.powi(4) / 4.0
    }

    fn f_vdp(x: f64) -> f64 {
        x * x / 2.0 + x.powi(3) / 3.0
    }

    #[test]
    fn vdp_orientation_is_mirrored() {
        let r = SlowRelation::single_section(vdp(), 0.16).unwrap();
        assert_eq!(r.orientation(), Some(Orientation::Mirrored));
        let q = SlowRelation::single_section(quartic(), 0.5).unwrap();
        assert_eq!(q.orientation(), Some(Orientation::Forward));
    }

    #[test]
    fn vdp_two_section_reference() {
        // I_+(S0) = 0.065025: solve P(alpha) = 0.065025 for alpha < 0.
        let alpha = bisect(|x| p_vdp(x) - 0.065025, -0.95, 0.0, 0.0);
        let expected = f_vdp(alpha);
        assert!((expected - 0.1003).abs() < 5e-4);
        let r = SlowRelation::two_section(vdp(), (0.01, 0.1), 0.05, 0.1).unwrap();
        let s0 = r.two_section_relation(0.054).unwrap();
        assert!((s0 - expected).abs() < 1e-10, "{s0} vs {expected}");
        assert!((r.relation_inverse(s0).unwrap() - 0.054).abs() < 1e-10);
    }

    #[test]
    fn vdp_single_section_decreases() {
        let r = SlowRelation::single_section(vdp(), 0.16).unwrap();
        let s = r.slow_relation(0.054).unwrap();
        assert!(s < 0.054 && s > 0.0);
        assert!(r.residual(0.054, s).unwrap().abs() <= 1e-12);
        assert_eq!(r.slow_relation(0.0).unwrap(), 0.0);
        assert!(r.slow_relation(0.2).is_err());
    }

    #[test]
    fn quartic_identity() {
        let r = SlowRelation::single_section(quartic(), 0.5).unwrap();
        for s in [0.01, 0.1, 0.3, 0.5] {
            assert!((r.slow_relation(s).unwrap() - s).abs() < 1e-10);
        }
        let t = SlowRelation::two_section(quartic(), (0.01, 0.2), 0.1, 0.1).unwrap();
        assert_eq!(t.flow_case(), Some(FlowCase::Tunnel));
        assert!((t.two_section_relation(0.07).unwrap() - 0.07).abs() < 1e-10);
        assert!((t.relation_inverse(0.07).unwrap() - 0.07).abs() < 1e-10);
    }

    #[test]
    fn flow_cases_and_buffer() {
        let e = vdp();
        assert_eq!(buffer_point(&e, 0.05, 0.1).unwrap(), None);
        assert!(-e.sdi_minus(0.05).unwrap() <= e.sdi_plus(0.1).unwrap());
        let b = buffer_point(&e, 0.1, 1.0 / 7.0).unwrap().unwrap();
        assert!((b - 0.0651).abs() < 5e-4, "{b}");
        let r = SlowRelation::two_section(e, (0.02, 0.075), 0.1, 1.0 / 7.0).unwrap();
        assert!((r.two_section_relation(b).unwrap() - 1.0 / 7.0).abs() < 1e-10);
        assert_eq!(r.limit_map(b).unwrap(), 1.0 / 7.0);
        assert_eq!(r.limit_map(0.075).unwrap(), 1.0 / 7.0);
        assert!(r.two_section_relation(0.067).unwrap() > 1.0 / 7.0);
        // The repelling branch ends before S0 reaches the top of L.
        assert!(matches!(
            r.two_section_relation(0.075),
            Err(Error::BranchRange { .. })
        ));
        let u = r.relation_inverse(0.16).unwrap();
        assert!((r.two_section_relation(u).unwrap() - 0.16).abs() < 1e-10);
        for h in [1e-4, 1e-6] {
            let below = r.limit_map(b - h).unwrap();
            assert!((below - 1.0 / 7.0).abs() < 20.0 * h);
        }
    }

    #[test]
    fn range_errors() {
        let r = SlowRelation::two_section(vdp(), (0.02, 0.1), 0.05, 0.1).unwrap();
        assert!(matches!(
            r.two_section_relation(0.2),
            Err(Error::OutOfRange { .. })
        ));
        assert!(matches!(
            r.relation_inverse(0.5),
            Err(Error::OutOfRange { .. })
        ));
        // Heights whose image would exceed the repelling branch top.
        let big = SlowRelation::two_section(vdp(), (0.02, 0.5), 0.05, 0.1).unwrap();
        assert!(matches!(
            big.two_section_relation(0.5),
            Err(Error::BranchRange { .. })
        ));
    }

    #[test]
    fn zeros_and_classes() {
        let e = vdp();
        assert_eq!(
            find_zeros(&e, (1e-4, 1.0 / 6.0)).unwrap(),
            ZeroScan::Zeros(vec![])
        );
        match classify_invariant_measures(&e, (1e-4, 0.16)).unwrap() {
            InvariantMeasures::ConvexHull(c) => {
                assert!(c.uniquely_ergodic);
                assert_eq!(c.atoms, vec![0.0]);
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            classify_invariant_measures(&quartic(), (1e-3, 0.5)).unwrap(),
            InvariantMeasures::Every { .. }
        ));
    }

    #[test]
    fn orbits() {
        let r = SlowRelation::single_section(vdp(), 0.16).unwrap();
        let o = r.iterate_orbit(0.05, 100_000).unwrap();
        assert!(o.limit.abs() < 1e-8);
        assert!(o.monotone);
        let q = SlowRelation::single_section(quartic(), 0.5).unwrap();
        let o = q.iterate_orbit(0.03, 10).unwrap();
        assert_eq!(o.steps, 1);
        assert!((o.limit - 0.03).abs() < 1e-10);
    }

    #[test]
    fn cyclicity() {
        let r = SlowRelation::single_section(vdp(), 0.16).unwrap();
        let c = r.cyclicity_report(0.05).unwrap();
        assert_eq!(c.bound, CycleBound::Exactly(1));
        assert_eq!(c.stability, Some(Stability::Attracting));
        assert!(c.slow_fast_hopf);
        let q = SlowRelation::single_section(quartic(), 0.5).unwrap();
        assert_eq!(
            q.cyclicity_report(0.1).unwrap().bound,
            CycleBound::NoFiniteBound
        );
    }
}
