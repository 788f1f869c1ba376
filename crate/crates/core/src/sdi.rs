//! Slow divergence integrals along the two branches of the critical curve.
//!
//! For a height `s > 0`, `omega(s) > 0` and `alpha(s) < 0` are the branch
//! points with `f(x) = s`. With the integrand `h(x) = f'(x)^2 / g(x)`,
//! `g = -p`:
//!
//! ```text
//! I_-(s) = -int_{omega(s)}^{0} h dx  < 0
//! I_+(s) = -int_{0}^{alpha(s)} h dx  > 0
//! I_-'(s) = f'(omega)/g(omega),   I_+'(s) = -f'(alpha)/g(alpha)
//! ```

use std::cell::Cell;
use std::collections::HashMap;
use std::sync::Mutex;

use crate::error::{Error, Result, Side};
use crate::model::LienardSystem;
use crate::quad::{integrate, QuadSettings};
use crate::roots::bisect;

#[derive(Debug)]
pub struct SdiEvaluator {
    system: LienardSystem,
    quad: QuadSettings,
    cache: Mutex<HashMap<(Side, u64), f64>>,
}

impl Clone for SdiEvaluator {
    fn clone(&self) -> Self {
        Self::with_settings(self.system.clone(), self.quad)
    }
}

impl SdiEvaluator {
    pub fn new(system: LienardSystem) -> Self {
        Self::with_settings(system, QuadSettings::default())
    }

    pub fn with_settings(system: LienardSystem, quad: QuadSettings) -> Self {
        Self {
            system,
            quad,
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn system(&self) -> &LienardSystem {
        &self.system
    }

    pub fn quad_settings(&self) -> &QuadSettings {
        &self.quad
    }

    /// Largest admissible height on `side`.
    pub fn branch_max(&self, side: Side) -> f64 {
        match side {
            Side::Attracting => self.system.attracting_max(),
            Side::Repelling => self.system.repelling_max(),
        }
    }

    fn check_height(&self, s: f64, side: Side) -> Result<()> {
        let max = self.branch_max(side);
        if !(s >= 0.0 && s <= max) {
            return Err(Error::BranchRange { s, side, max });
        }
        Ok(())
    }

    /// The unique `x` on `side` with `f(x) = s`.
    pub fn branch_root(&self, s: f64, side: Side) -> Result<f64> {
        self.check_height(s, side)?;
        if s == 0.0 {
            return Ok(0.0);
        }
        let f = |x: f64| self.system.height(x) - s;
        Ok(match side {
            Side::Attracting => bisect(f, 0.0, self.system.x_max(), 0.0),
            Side::Repelling => bisect(f, self.system.x_min(), 0.0, 0.0),
        })
    }

    /// `f'(x)^2 / g(x)`, continuously extended by 0 at the contact point.
    pub fn integrand(&self, x: f64) -> Result<f64> {
        if x == 0.0 {
            return Ok(0.0);
        }
        let g = self.system.g(x);
        if g == 0.0 || !g.is_finite() {
            return Err(Error::SingularIntegrand { x });
        }
        let d = self.system.slope(x);
        Ok(d * d / g)
    }

    /// Integral of the integrand from `lo` to `hi`.
    fn integral(&self, lo: f64, hi: f64) -> Result<f64> {
        let singular = Cell::new(None);
        let h = |x: f64| match self.integrand(x) {
            Ok(v) => v,
            Err(_) => {
                singular.set(Some(x));
                0.0
            }
        };
        let r = integrate(h, lo, hi, &self.quad)?;
        if let Some(x) = singular.get() {
            return Err(Error::SingularIntegrand { x });
        }
        Ok(r.value)
    }

    fn cached(&self, side: Side, s: f64, compute: impl FnOnce() -> Result<f64>) -> Result<f64> {
        let key = (side, s.to_bits());
        if let Some(&v) = self.cache.lock().expect("cache poisoned").get(&key) {
            return Ok(v);
        }
        let v = compute()?;
        self.cache.lock().expect("cache poisoned").insert(key, v);
        Ok(v)
    }

    /// `I_-(s) < 0`, the integral along the attracting branch.
    pub fn sdi_minus(&self, s: f64) -> Result<f64> {
        self.check_height(s, Side::Attracting)?;
        if s == 0.0 {
            return Ok(0.0);
        }
        self.cached(Side::Attracting, s, || {
            let omega = self.branch_root(s, Side::Attracting)?;
            self.integral(0.0, omega)
        })
    }

    /// `I_+(s) > 0`, the integral along the repelling branch.
    pub fn sdi_plus(&self, s: f64) -> Result<f64> {
        self.check_height(s, Side::Repelling)?;
        if s == 0.0 {
            return Ok(0.0);
        }
        self.cached(Side::Repelling, s, || {
            let alpha = self.branch_root(s, Side::Repelling)?;
            self.integral(alpha, 0.0)
        })
    }

    pub fn sdi(&self, s: f64, side: Side) -> Result<f64> {
        match side {
            Side::Attracting => self.sdi_minus(s),
            Side::Repelling => self.sdi_plus(s),
        }
    }

    /// Closed-form derivative of `I_-` (attracting) or `I_+` (repelling).
    pub fn sdi_derivative(&self, s: f64, side: Side) -> Result<f64> {
        let x = self.branch_root(s, side)?;
        let g = self.system.g(x);
        if g == 0.0 {
            return Err(Error::SingularIntegrand { x });
        }
        let d = self.system.slope(x) / g;
        Ok(match side {
            Side::Attracting => d,
            Side::Repelling => -d,
        })
    }

    /// `I(s) = I_-(s) + I_+(s)`.
    pub fn sdi_total(&self, s: f64) -> Result<f64> {
        Ok(self.sdi_minus(s)? + self.sdi_plus(s)?)
    }

    /// Closed-form `I'(s)`.
    pub fn sdi_total_derivative(&self, s: f64) -> Result<f64> {
        Ok(self.sdi_derivative(s, Side::Attracting)? + self.sdi_derivative(s, Side::Repelling)?)
    }

    /// Largest height at which both branches are defined.
    pub fn common_max(&self) -> f64 {
        self.branch_max(Side::Attracting)
            .min(self.branch_max(Side::Repelling))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vdp() -> SdiEvaluator {
        SdiEvaluator::new(LienardSystem::van_der_pol())
    }

    fn quartic() -> SdiEvaluator {
        SdiEvaluator::new(LienardSystem::quartic())
    }

    #[test]
    fn branch_roots() {
        let e = vdp();
        let w = e.branch_root(0.054, Side::Attracting).unwrap();
        assert!((w - 0.3).abs() < 1e-13);
        let a = e.branch_root(0.054, Side::Repelling).unwrap();
        assert!((e.system().height(a) - 0.054).abs() <= 1e-14 * 1.0);
        assert!((a - (-0.3803)).abs() < 1e-4);

        let q = quartic();
        assert!((q.branch_root(0.0016, Side::Attracting).unwrap() - 0.2).abs() < 1e-14);
        assert!((q.branch_root(0.0016, Side::Repelling).unwrap() + 0.2).abs() < 1e-14);
    }

    #[test]
    fn branch_range_errors() {
        let e = vdp();
        assert!(matches!(
            e.branch_root(0.2, Side::Repelling),
            Err(Error::BranchRange {
                side: Side::Repelling,
                ..
            })
        ));
        assert!(e.branch_root(-0.1, Side::Attracting).is_err());
        assert!(e.branch_root(5.0, Side::Attracting).is_err());
        assert!(e.sdi_plus(0.17).is_err());
    }

    #[test]
    fn integrand_values() {
        let e = vdp();
        assert!((e.integrand(0.3).unwrap() - (-0.507)).abs() < 1e-14);
        assert_eq!(e.integrand(0.0).unwrap(), 0.0);
        assert!((quartic().integrand(0.5).unwrap() - (-2.0)).abs() < 1e-14);
    }

    #[test]
    fn singular_integrand_is_an_error() {
        // p vanishes at x = 0.5 away from the contact point.
        let s = LienardSystem::from_strings("x^2", "x*(x - 0.5)^2", -1.0, 1.0).unwrap();
        let e = SdiEvaluator::new(s);
        assert!(matches!(
            e.integrand(0.5),
            Err(Error::SingularIntegrand { .. })
        ));
    }

    #[test]
    fn reference_values() {
        let e = vdp();
        assert!((e.sdi_minus(0.054).unwrap() + 0.065025).abs() < 1e-12);
        assert!((e.sdi_plus(0.036).unwrap() - 0.029025).abs() < 1e-12);
        let q = quartic();
        assert!((q.sdi_minus(0.01).unwrap() + 0.04).abs() < 1e-12);
        assert!((q.sdi_plus(0.01).unwrap() - 0.04).abs() < 1e-12);
        assert!(q.sdi_total(0.01).unwrap().abs() < 1e-13);
    }

    #[test]
    fn vanishing_at_contact() {
        for e in [vdp(), quartic()] {
            assert!(e.sdi_minus(1e-8).unwrap().abs() < 1e-6);
            assert!(e.sdi_plus(1e-8).unwrap().abs() < 1e-6);
            assert!(e.sdi_minus(1e-6).unwrap() < 0.0);
            assert!(e.sdi_plus(1e-6).unwrap() > 0.0);
        }
    }

    #[test]
    fn closed_form_derivatives() {
        let e = vdp();
        assert!((e.sdi_derivative(0.054, Side::Attracting).unwrap() + 1.3).abs() < 1e-12);
        let q = quartic();
        assert!((q.sdi_derivative(0.01, Side::Attracting).unwrap() + 4.0).abs() < 1e-12);
        assert!((q.sdi_derivative(0.01, Side::Repelling).unwrap() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn cache_returns_identical_values() {
        let e = vdp();
        let a = e.sdi_plus(0.1).unwrap();
        let b = e.sdi_plus(0.1).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
        let fresh = e.clone().sdi_plus(0.1).unwrap();
        assert_eq!(a.to_bits(), fresh.to_bits());
    }
}
