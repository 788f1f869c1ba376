//! Lienard systems `x' = y - f(x)`, `y' = eps (lambda - p(x))` and the checks
//! that make their slow divergence integrals well defined.

use std::fmt;

use crate::error::{Error, Result};
use crate::expr::RealExpr;

/// Largest derivative order examined by [`detect_orders`].
pub const ORDER_CAP: u32 = 12;

/// Default number of sign-sampling points on each side of the contact point.
pub const DEFAULT_SIGN_GRID: usize = 512;

/// Vanishing order of a function at `x = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Order {
    Finite(u32),
    /// No nonzero derivative found up to [`ORDER_CAP`].
    AtLeastCap,
}

impl Order {
    pub fn finite(self) -> Option<u32> {
        match self {
            Order::Finite(k) => Some(k),
            Order::AtLeastCap => None,
        }
    }
}

impl fmt::Display for Order {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Order::Finite(k) => write!(f, "{k}"),
            Order::AtLeastCap => write!(f, ">= {ORDER_CAP}"),
        }
    }
}

fn is_nonzero(v: f64) -> bool {
    v.abs() > 1e-12
}

/// Vanishing order of `e` at 0: symbolic leading monomial for polynomials,
/// repeated symbolic differentiation otherwise, and a finite-difference
/// scaling estimate when a derivative cannot be evaluated at 0.
pub fn vanishing_order(e: &RealExpr) -> Order {
    if let Some(c) = e.coefficients() {
        return c
            .iter()
            .take(ORDER_CAP as usize)
            .position(|&a| a != 0.0)
            .map_or(Order::AtLeastCap, |k| Order::Finite(k as u32));
    }
    let mut d = e.clone();
    for k in 0..ORDER_CAP {
        match d.eval(0.0) {
            Ok(v) if is_nonzero(v) => return Order::Finite(k),
            Ok(_) => d = d.derivative(),
            Err(_) => return numeric_order(e),
        }
    }
    Order::AtLeastCap
}

/// Estimates k in `e(x) ~ c x^k` from the decay of `|e(h)|` for decreasing h.
fn numeric_order(e: &RealExpr) -> Order {
    let mut estimates = Vec::new();
    for sign in [1.0, -1.0] {
        let mut h = 1e-1;
        let mut prev: Option<f64> = None;
        for _ in 0..4 {
            let v = e.eval_fast(sign * h).abs();
            if let Some(p) = prev {
                if v > 0.0 && p > 0.0 && v.is_finite() && p.is_finite() {
                    estimates.push((p / v).log10());
                }
            }
            prev = Some(v);
            h /= 10.0;
        }
    }
    // The finest-scale pair on each side dominates.
    let Some(k) = estimates
        .iter()
        .rev()
        .take(2)
        .copied()
        .reduce(f64::max)
        .map(f64::round)
    else {
        return Order::AtLeastCap;
    };
    if k < 0.0 || k >= f64::from(ORDER_CAP) {
        Order::AtLeastCap
    } else {
        Order::Finite(k as u32)
    }
}

/// Contact order `n` of `f` and singularity order `m` of `p` at the origin.
pub fn detect_orders(f: &RealExpr, p: &RealExpr) -> (Order, Order) {
    (vanishing_order(f), vanishing_order(p))
}

/// A Lienard system with critical curve `y = f(x)` and slow equation
/// `y' = eps (lambda - p(x))`. Immutable once built.
#[derive(Debug, Clone)]
pub struct LienardSystem {
    f: RealExpr,
    df: RealExpr,
    p: RealExpr,
    x_min: f64,
    x_max: f64,
    n: Order,
    m: Order,
}

impl LienardSystem {
    /// Builds the system without validating it; see [`LienardSystem::validate`].
    pub fn new(f: RealExpr, p: RealExpr, x_min: f64, x_max: f64) -> Self {
        let df = f.derivative();
        let (n, m) = detect_orders(&f, &p);
        Self {
            f,
            df,
            p,
            x_min,
            x_max,
            n,
            m,
        }
    }

    pub fn from_strings(f: &str, p: &str, x_min: f64, x_max: f64) -> Result<Self> {
        Ok(Self::new(
            RealExpr::parse(f)?,
            RealExpr::parse(p)?,
            x_min,
            x_max,
        ))
    }

    /// Builds and validates; rejects systems that fail any assumption check.
    pub fn checked(f: RealExpr, p: RealExpr, x_min: f64, x_max: f64) -> Result<Self> {
        let system = Self::new(f, p, x_min, x_max);
        let report = system.validate();
        if report.all_pass() {
            Ok(system)
        } else {
            Err(Error::Rejected(report.failures().join("; ")))
        }
    }

    /// The van der Pol system `f = x^2/2 + x^3/3`, `p = x` on `[-0.95, 2]`.
    pub fn van_der_pol() -> Self {
        Self::from_strings("x^2/2 + x^3/3", "x", -0.95, 2.0).expect("valid literal")
    }

    /// The symmetric quartic system `f = x^4`, `p = x^3` on `[-1, 1]`.
    pub fn quartic() -> Self {
        Self::from_strings("x^4", "x^3", -1.0, 1.0).expect("valid literal")
    }

    pub fn f(&self) -> &RealExpr {
        &self.f
    }

    pub fn df(&self) -> &RealExpr {
        &self.df
    }

    pub fn p(&self) -> &RealExpr {
        &self.p
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn contact_order(&self) -> Order {
        self.n
    }

    pub fn singularity_order(&self) -> Order {
        self.m
    }

    #[inline]
    pub fn height(&self, x: f64) -> f64 {
        self.f.eval_fast(x)
    }

    #[inline]
    pub fn slope(&self, x: f64) -> f64 {
        self.df.eval_fast(x)
    }

    /// `g(x) = -p(x)`, the slow component at `lambda = 0`.
    #[inline]
    pub fn g(&self, x: f64) -> f64 {
        -self.p.eval_fast(x)
    }

    /// Vector field of the eps > 0 system.
    #[inline]
    pub fn field(&self, eps: f64, lambda: f64, x: f64, y: f64) -> (f64, f64) {
        (
            y - self.f.eval_fast(x),
            eps * (lambda - self.p.eval_fast(x)),
        )
    }

    /// Largest height reachable on the attracting branch, `f(x_max)`.
    pub fn attracting_max(&self) -> f64 {
        self.height(self.x_max)
    }

    /// Largest height reachable on the repelling branch, `f(x_min)`.
    pub fn repelling_max(&self) -> f64 {
        self.height(self.x_min)
    }

    pub fn validate(&self) -> AssumptionReport {
        self.validate_with_grid(DEFAULT_SIGN_GRID)
    }

    pub fn validate_with_grid(&self, points_per_side: usize) -> AssumptionReport {
        let mut checks = Vec::new();
        let domain_ok = self.x_min < 0.0 && 0.0 < self.x_max;
        checks.push(Check::new(
            "domain contains the contact point",
            domain_ok,
            None,
        ));

        let f0 = self.f.eval(0.0);
        checks.push(match f0 {
            Ok(v) => Check::new("f(0) = 0", v.abs() <= 1e-14, None),
            Err(_) => Check::new("f(0) = 0", false, Some(0.0)),
        });
        let df0 = self.df.eval(0.0);
        checks.push(match df0 {
            Ok(v) => Check::new("f'(0) = 0", v.abs() <= 1e-14, None),
            Err(_) => Check::new("f'(0) = 0", false, Some(0.0)),
        });

        let points = points_per_side.max(1);
        let right: Vec<f64> = (1..=points)
            .map(|i| self.x_max * i as f64 / points as f64)
            .collect();
        let left: Vec<f64> = (1..=points)
            .map(|i| self.x_min * i as f64 / points as f64)
            .collect();
        let sign_check = |name: &'static str, e: &RealExpr, xs: &[f64], want: f64| {
            let witness = if domain_ok {
                xs.iter()
                    .copied()
                    .find(|&x| !matches!(e.eval(x), Ok(v) if v * want > 0.0))
            } else {
                Some(f64::NAN)
            };
            Check::new(name, witness.is_none(), witness)
        };
        checks.push(sign_check("f' > 0 on (0, x_max]", &self.df, &right, 1.0));
        checks.push(sign_check("f' < 0 on [x_min, 0)", &self.df, &left, -1.0));
        checks.push(sign_check("p > 0 on (0, x_max]", &self.p, &right, 1.0));
        checks.push(sign_check("p < 0 on [x_min, 0)", &self.p, &left, -1.0));

        let (n, m) = (self.n.finite(), self.m.finite());
        checks.push(Check::new("contact order n finite", n.is_some(), None));
        checks.push(Check::new("singularity order m finite", m.is_some(), None));
        checks.push(Check::new(
            "n even",
            n.is_some_and(|n| n >= 2 && n % 2 == 0),
            None,
        ));
        checks.push(Check::new("m odd", m.is_some_and(|m| m % 2 == 1), None));
        checks.push(Check::new(
            "m < 2(n - 1)",
            matches!((n, m), (Some(n), Some(m)) if n >= 1 && m < 2 * (n - 1)),
            None,
        ));

        AssumptionReport {
            n: self.n,
            m: self.m,
            checks,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub pass: bool,
    pub witness: Option<f64>,
}

impl Check {
    fn new(name: &'static str, pass: bool, witness: Option<f64>) -> Self {
        Self {
            name,
            pass,
            witness,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionReport {
    pub n: Order,
    pub m: Order,
    pub checks: Vec<Check>,
}

impl AssumptionReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> Vec<String> {
        self.checks
            .iter()
            .filter(|c| !c.pass)
            .map(|c| match c.witness {
                Some(w) => format!("{} (witness x = {w})", c.name),
                None => c.name.to_string(),
            })
            .collect()
    }
}

impl fmt::Display for AssumptionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "contact order n = {}", self.n)?;
        writeln!(f, "singularity order m = {}", self.m)?;
        for c in &self.checks {
            let status = if c.pass { "pass" } else { "FAIL" };
            match c.witness {
                Some(w) => writeln!(f, "[{status}] {} (witness x = {w})", c.name)?,
                None => writeln!(f, "[{status}] {}", c.name)?,
            }
        }
        write!(
            f,
            "accepted = {}",
            if self.all_pass() { "true" } else { "false" }
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn orders(f: &str, p: &str) -> (Order, Order) {
        detect_orders(&RealExpr::parse(f).unwrap(), &RealExpr::parse(p).unwrap())
    }

    #[test]
    fn orders_of_reference_systems() {
        assert_eq!(
            orders("x^2/2 + x^3/3", "x"),
            (Order::Finite(2), Order::Finite(1))
        );
        assert_eq!(orders("x^4", "x^3"), (Order::Finite(4), Order::Finite(3)));
        assert_eq!(orders("x^2", "x^3"), (Order::Finite(2), Order::Finite(3)));
    }

    #[test]
    fn orders_of_rational_expressions() {
        // x^2/(1 + x) has order 2, handled by symbolic differentiation.
        assert_eq!(
            orders("x^2/(1 + x)", "x/(1 + x^2)"),
            (Order::Finite(2), Order::Finite(1))
        );
        // Removable singularity at 0 forces the numeric fallback.
        assert_eq!(
            orders("x^5/x", "x^4/x"),
            (Order::Finite(4), Order::Finite(3))
        );
    }

    #[test]
    fn flat_contact_hits_the_cap() {
        assert_eq!(
            vanishing_order(&RealExpr::parse("x^14").unwrap()),
            Order::AtLeastCap
        );
        let s = LienardSystem::from_strings("x^14", "x", -1.0, 1.0).unwrap();
        let r = s.validate();
        assert!(!r.all_pass());
        assert!(!r.check("contact order n finite").unwrap().pass);
    }

    #[test]
    fn van_der_pol_is_accepted() {
        let r = LienardSystem::van_der_pol().validate();
        assert!(r.all_pass(), "{r}");
        assert_eq!((r.n, r.m), (Order::Finite(2), Order::Finite(1)));
    }

    #[test]
    fn reversed_slow_flow_fails_assumption_three() {
        let s = LienardSystem::from_strings("x^2", "-x", -1.0, 1.0).unwrap();
        let r = s.validate();
        assert!(!r.check("p > 0 on (0, x_max]").unwrap().pass);
        assert!(!r.check("p < 0 on [x_min, 0)").unwrap().pass);
        assert!(r.check("m odd").unwrap().pass);
    }

    #[test]
    fn odd_contact_fails_parity() {
        let s = LienardSystem::from_strings("x^3", "x", -1.0, 1.0).unwrap();
        let r = s.validate();
        assert!(!r.check("n even").unwrap().pass);
        assert!(!r.check("f' < 0 on [x_min, 0)").unwrap().pass);
    }

    #[test]
    fn assumption_four_boundary() {
        let s = LienardSystem::from_strings("x^2", "x^3", -1.0, 1.0).unwrap();
        let r = s.validate();
        assert!(!r.check("m < 2(n - 1)").unwrap().pass);
        assert!(r.check("m odd").unwrap().pass);
        assert!(matches!(
            LienardSystem::checked(
                RealExpr::parse("x^2").unwrap(),
                RealExpr::parse("x^3").unwrap(),
                -1.0,
                1.0
            ),
            Err(Error::Rejected(_))
        ));
    }

    #[test]
    fn witness_points_to_the_bad_region() {
        // f' = x(1 + x) changes sign at x = -1, inside [-1.5, 0).
        let s = LienardSystem::from_strings("x^2/2 + x^3/3", "x", -1.5, 1.0).unwrap();
        let r = s.validate();
        let c = r.check("f' < 0 on [x_min, 0)").unwrap();
        assert!(!c.pass);
        assert!(c.witness.unwrap() <= -1.0);
    }

    #[test]
    fn domain_must_straddle_zero() {
        let s = LienardSystem::from_strings("x^2", "x", 0.5, 1.0).unwrap();
        assert!(
            !s.validate()
                .check("domain contains the contact point")
                .unwrap()
                .pass
        );
    }
}
