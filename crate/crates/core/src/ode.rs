//! Dormand-Prince 5(4) integrator for planar systems, with the standard
//! fourth-order continuous extension used for event location.

use crate::error::{Error, Result};

pub type State = [f64; 2];

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

#[inline]
fn axpy(y: &State, h: f64, terms: &[(f64, &State)]) -> State {
    let mut out = *y;
    for (c, k) in terms {
        out[0] += h * c * k[0];
        out[1] += h * c * k[1];
    }
    out
}

/// One accepted step together with its dense-output coefficients.
#[derive(Debug, Clone, Copy)]
pub struct Step {
    pub t0: f64,
    pub t1: f64,
    pub y0: State,
    pub y1: State,
    cont: [State; 5],
}

impl Step {
    /// Continuous extension at `t` in `[t0, t1]`.
    pub fn dense(&self, t: f64) -> State {
        let theta = (t - self.t0) / (self.t1 - self.t0);
        let theta1 = 1.0 - theta;
        let r = &self.cont;
        let mut out = [0.0; 2];
        for i in 0..2 {
            out[i] = r[0][i]
                + theta * (r[1][i] + theta1 * (r[2][i] + theta * (r[3][i] + theta1 * r[4][i])));
        }
        out
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Dopri5 {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_step: f64,
}

impl Default for Dopri5 {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            rel_tol: 1e-10,
            max_step: 1e-2,
        }
    }
}

struct Stages {
    k: [State; 7],
    y1: State,
    err: State,
}

impl Dopri5 {
    fn stages<F: Fn(f64, &State) -> State>(
        rhs: &F,
        t: f64,
        y: &State,
        k1: State,
        h: f64,
    ) -> Stages {
        let k2 = rhs(t + C2 * h, &axpy(y, h, &[(A21, &k1)]));
        let k3 = rhs(t + C3 * h, &axpy(y, h, &[(A31, &k1), (A32, &k2)]));
        let k4 = rhs(
            t + C4 * h,
            &axpy(y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]),
        );
        let k5 = rhs(
            t + C5 * h,
            &axpy(y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
        );
        let k6 = rhs(
            t + h,
            &axpy(
                y,
                h,
                &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
            ),
        );
        let y1 = axpy(
            y,
            h,
            &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)],
        );
        let k7 = rhs(t + h, &y1);
        let mut err = [0.0; 2];
        for i in 0..2 {
            err[i] =
                h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        }
        Stages {
            k: [k1, k2, k3, k4, k5, k6, k7],
            y1,
            err,
        }
    }

    /// A single step of size `h` without error control.
    pub fn fixed_step<F: Fn(f64, &State) -> State>(
        &self,
        rhs: &F,
        t: f64,
        y: &State,
        h: f64,
    ) -> State {
        let k1 = rhs(t, y);
        Self::stages(rhs, t, y, k1, h).y1
    }

    fn error_norm(&self, y0: &State, s: &Stages) -> f64 {
        let sum: f64 = (0..2)
            .map(|i| {
                let scale = self.abs_tol + self.rel_tol * y0[i].abs().max(s.y1[i].abs());
                (s.err[i] / scale).powi(2)
            })
            .sum();
        (sum / 2.0).sqrt()
    }

    /// Integrates from `(t0, y0)` towards `t_end`, calling `observe` after
    /// every accepted step. Stops early when `observe` returns `Some`.
    pub fn solve<F, O, R>(
        &self,
        rhs: F,
        t0: f64,
        y0: State,
        t_end: f64,
        mut observe: O,
    ) -> Result<Option<R>>
    where
        F: Fn(f64, &State) -> State,
        O: FnMut(&Step) -> Option<R>,
    {
        let mut t = t0;
        let mut y = y0;
        let mut k1 = rhs(t, &y);
        let mut h = self.max_step.min(1e-3).min(t_end - t0);
        let mut rejected_last = false;
        while t < t_end {
            if !y[0].is_finite() || !y[1].is_finite() {
                return Err(Error::Stiffness {
                    t,
                    x: y[0],
                    y: y[1],
                });
            }
            h = h.min(self.max_step).min(t_end - t);
            if h <= 1e-14 * t.abs().max(1.0) {
                return Err(Error::Stiffness {
                    t,
                    x: y[0],
                    y: y[1],
                });
            }
            let s = Self::stages(&rhs, t, &y, k1, h);
            let err = self.error_norm(&y, &s);
            if err <= 1.0 && err.is_finite() {
                let k = &s.k;
                let mut cont = [[0.0; 2]; 5];
                for i in 0..2 {
                    let ydiff = s.y1[i] - y[i];
                    let bspl = h * k[0][i] - ydiff;
                    cont[0][i] = y[i];
                    cont[1][i] = ydiff;
                    cont[2][i] = bspl;
                    cont[3][i] = ydiff - h * k[6][i] - bspl;
                    cont[4][i] = h
                        * (D1 * k[0][i]
                            + D3 * k[2][i]
                            + D4 * k[3][i]
                            + D5 * k[4][i]
                            + D6 * k[5][i]
                            + D7 * k[6][i]);
                }
                let step = Step {
                    t0: t,
                    t1: t + h,
                    y0: y,
                    y1: s.y1,
                    cont,
                };
                t += h;
                y = s.y1;
                k1 = k[6];
                if let Some(r) = observe(&step) {
                    return Ok(Some(r));
                }
                let fac = if err == 0.0 {
                    5.0
                } else {
                    (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
                };
                h *= if rejected_last { fac.min(1.0) } else { fac };
                rejected_last = false;
            } else {
                let fac = if err.is_finite() {
                    (0.9 * err.powf(-0.2)).clamp(0.1, 0.9)
                } else {
                    0.1
                };
                h *= fac;
                rejected_last = true;
            }
        }
        Ok(None)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_period() {
        let solver = Dopri5 {
            abs_tol: 1e-12,
            rel_tol: 1e-12,
            max_step: 0.1,
        };
        let mut last = [0.0; 2];
        let r: Option<()> = solver
            .solve(
                |_, y| [y[1], -y[0]],
                0.0,
                [1.0, 0.0],
                2.0 * std::f64::consts::PI,
                |s| {
                    last = s.y1;
                    None
                },
            )
            .unwrap();
        assert!(r.is_none());
        assert!((last[0] - 1.0).abs() < 1e-9);
        assert!(last[1].abs() < 1e-9);
    }

    #[test]
    fn dense_output_interpolates() {
        let solver = Dopri5 {
            abs_tol: 1e-12,
            rel_tol: 1e-12,
            max_step: 0.5,
        };
        let mut worst: f64 = 0.0;
        solver
            .solve(
                |_, y| [y[1], -y[0]],
                0.0,
                [1.0, 0.0],
                3.0,
                |s: &Step| -> Option<()> {
                    for j in 1..10 {
                        let t = s.t0 + (s.t1 - s.t0) * f64::from(j) / 10.0;
                        let d = s.dense(t);
                        worst = worst.max((d[0] - t.cos()).abs());
                    }
                    None
                },
            )
            .unwrap();
        assert!(worst < 1e-8, "{worst}");
    }

    #[test]
    fn max_step_is_honored() {
        let solver = Dopri5 {
            max_step: 0.01,
            ..Dopri5::default()
        };
        let mut biggest: f64 = 0.0;
        solver
            .solve(
                |_, _| [0.0, 0.0],
                0.0,
                [0.0, 0.0],
                1.0,
                |s: &Step| -> Option<()> {
                    biggest = biggest.max(s.t1 - s.t0);
                    None
                },
            )
            .unwrap();
        assert!(biggest <= 0.01 + 1e-15);
    }

    #[test]
    fn blow_up_reports_stiffness() {
        let solver = Dopri5::default();
        let r: Result<Option<()>> =
            solver.solve(|_, y| [y[0] * y[0], 0.0], 0.0, [1.0, 0.0], 2.0, |_| None);
        assert!(matches!(r, Err(Error::Stiffness { .. })));
    }

    #[test]
    fn early_stop() {
        let solver = Dopri5::default();
        let r = solver
            .solve(
                |_, _| [1.0, 0.0],
                0.0,
                [0.0, 0.0],
                10.0,
                |s| (s.y1[0] > 0.5).then_some(s.t1),
            )
            .unwrap();
        assert!(r.unwrap() > 0.5);
    }
}
