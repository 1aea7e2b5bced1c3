//! Explicit integrators over flat complex state vectors.

use num_complex::Complex64 as C64;

use crate::model::SystemParams;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    /// Classical fixed-step fourth-order Runge–Kutta.
    Rk4,
    /// Dormand–Prince 5(4) with embedded error control.
    DormandPrince45,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegratorConfig {
    pub method: Method,
    pub max_step: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub interaction_picture: bool,
}

impl IntegratorConfig {
    pub fn rk4(max_step: f64) -> Self {
        Self { method: Method::Rk4, max_step, rel_tol: 1e-10, abs_tol: 1e-12, interaction_picture: true }
    }

    pub fn adaptive(rel_tol: f64, abs_tol: f64) -> Self {
        Self { method: Method::DormandPrince45, max_step: f64::INFINITY, rel_tol, abs_tol, interaction_picture: true }
    }

    /// RK4 with `steps_per_period` steps per period of the fastest
    /// interaction-picture oscillation, `2J`.
    pub fn for_params(params: &SystemParams, steps_per_period: usize) -> Self {
        let fastest = 2.0 * params.j.abs().max(params.delta0.abs()).max(1.0);
        Self::rk4(std::f64::consts::PI / (steps_per_period.max(1) as f64 * fastest))
    }

    pub fn with_max_step(mut self, max_step: f64) -> Self {
        self.max_step = max_step;
        self
    }

    pub fn with_interaction_picture(mut self, on: bool) -> Self {
        self.interaction_picture = on;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.max_step > 0.0) || !(self.rel_tol > 0.0) || !(self.abs_tol > 0.0) {
            return Err(Error::InvalidParams(format!(
                "integrator needs positive step and tolerances, got max_step={}, rel_tol={}, abs_tol={}",
                self.max_step, self.rel_tol, self.abs_tol
            )));
        }
        if self.method == Method::Rk4 && !self.max_step.is_finite() {
            return Err(Error::InvalidParams("fixed-step RK4 needs a finite max_step".into()));
        }
        Ok(())
    }
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self::rk4(1e-3)
    }
}

pub(crate) fn check_times(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::InvalidParams("time grid is empty".into()));
    }
    if times.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidParams("time grid has non-finite entries".into()));
    }
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidParams("time grid must be non-decreasing".into()));
    }
    Ok(())
}

#[inline]
fn axpy(out: &mut [C64], y: &[C64], h: f64, k: &[C64]) {
    for ((o, &yi), &ki) in out.iter_mut().zip(y).zip(k) {
        *o = yi + ki * h;
    }
}

/// Integrates `y' = rhs(t, y)` from `times[0]`, handing the state to
/// `observe` at every entry of `times` (the first call sees `y0`).
pub fn integrate<F, O>(
    y0: Vec<C64>,
    times: &[f64],
    cfg: &IntegratorConfig,
    mut rhs: F,
    mut observe: O,
) -> Result<Vec<C64>>
where
    F: FnMut(f64, &[C64], &mut [C64]),
    O: FnMut(usize, f64, &mut [C64]) -> Result<()>,
{
    cfg.validate()?;
    check_times(times)?;
    let mut y = y0;
    observe(0, times[0], &mut y)?;
    match cfg.method {
        Method::Rk4 => {
            let mut stepper = Rk4::new(y.len());
            for (k, w) in times.windows(2).enumerate() {
                let span = w[1] - w[0];
                if span > 0.0 {
                    let n = (span / cfg.max_step).ceil().max(1.0) as usize;
                    let h = span / n as f64;
                    for s in 0..n {
                        stepper.step(&mut rhs, w[0] + s as f64 * h, h, &mut y);
                    }
                }
                observe(k + 1, w[1], &mut y)?;
            }
        }
        Method::DormandPrince45 => {
            let mut dp = Dopri::new(y.len(), cfg);
            for (k, w) in times.windows(2).enumerate() {
                dp.advance(&mut rhs, w[0], w[1], &mut y)?;
                observe(k + 1, w[1], &mut y)?;
                // the observer may have touched the state
                dp.fsal_valid = false;
            }
        }
    }
    Ok(y)
}

struct Rk4 {
    k1: Vec<C64>,
    k2: Vec<C64>,
    k3: Vec<C64>,
    k4: Vec<C64>,
    tmp: Vec<C64>,
}

impl Rk4 {
    fn new(n: usize) -> Self {
        let z = vec![C64::new(0.0, 0.0); n];
        Self { k1: z.clone(), k2: z.clone(), k3: z.clone(), k4: z.clone(), tmp: z }
    }

    fn step<F: FnMut(f64, &[C64], &mut [C64])>(&mut self, rhs: &mut F, t: f64, h: f64, y: &mut [C64]) {
        rhs(t, y, &mut self.k1);
        axpy(&mut self.tmp, y, 0.5 * h, &self.k1);
        rhs(t + 0.5 * h, &self.tmp, &mut self.k2);
        axpy(&mut self.tmp, y, 0.5 * h, &self.k2);
        rhs(t + 0.5 * h, &self.tmp, &mut self.k3);
        axpy(&mut self.tmp, y, h, &self.k3);
        rhs(t + h, &self.tmp, &mut self.k4);
        let h6 = h / 6.0;
        for i in 0..y.len() {
            y[i] += (self.k1[i] + (self.k2[i] + self.k3[i]) * 2.0 + self.k4[i]) * h6;
        }
    }
}

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
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// fifth minus fourth order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

struct Dopri {
    k: [Vec<C64>; 7],
    tmp: Vec<C64>,
    ynew: Vec<C64>,
    h: f64,
    fsal_valid: bool,
    rel_tol: f64,
    abs_tol: f64,
    max_step: f64,
}

impl Dopri {
    fn new(n: usize, cfg: &IntegratorConfig) -> Self {
        let z = vec![C64::new(0.0, 0.0); n];
        Self {
            k: std::array::from_fn(|_| z.clone()),
            tmp: z.clone(),
            ynew: z,
            h: 0.0,
            fsal_valid: false,
            rel_tol: cfg.rel_tol,
            abs_tol: cfg.abs_tol,
            max_step: cfg.max_step,
        }
    }

    fn advance<F: FnMut(f64, &[C64], &mut [C64])>(
        &mut self,
        rhs: &mut F,
        t0: f64,
        t1: f64,
        y: &mut Vec<C64>,
    ) -> Result<()> {
        let span = t1 - t0;
        if span <= 0.0 {
            return Ok(());
        }
        if !self.fsal_valid {
            rhs(t0, y, &mut self.k[0]);
            self.fsal_valid = true;
        }
        if self.h <= 0.0 {
            let scale: f64 = y.iter().map(|v| v.norm()).fold(0.0, f64::max).max(1e-300);
            let dnorm: f64 = self.k[0].iter().map(|v| v.norm()).fold(0.0, f64::max);
            let guess = if dnorm > 0.0 { 0.01 * scale / dnorm } else { span };
            self.h = guess.min(span).min(self.max_step);
        }
        let mut t = t0;
        let mut rejects = 0usize;
        while t < t1 {
            let last = t + self.h >= t1;
            let h = if last { t1 - t } else { self.h };
            if !last && h <= 1e-14 * t1.abs().max(1.0) {
                return Err(Error::Accuracy(format!("adaptive step underflow at t={t}")));
            }
            let err = self.trial(rhs, t, h, y);
            if err <= 1.0 {
                t = if last { t1 } else { t + h };
                std::mem::swap(y, &mut self.ynew);
                self.k.swap(0, 6);
                let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                if !last {
                    self.h = (h * fac).min(self.max_step);
                }
                rejects = 0;
            } else {
                rejects += 1;
                if rejects > 200 {
                    return Err(Error::Accuracy(format!("adaptive step failed to converge at t={t}")));
                }
                self.h = h * (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
            }
        }
        Ok(())
    }

    /// One trial step; fills `ynew` and `k[6]`, returns the scaled error.
    fn trial<F: FnMut(f64, &[C64], &mut [C64])>(&mut self, rhs: &mut F, t: f64, h: f64, y: &[C64]) -> f64 {
        let n = y.len();
        let [k1, k2, k3, k4, k5, k6, k7] = &mut self.k;
        for i in 0..n {
            self.tmp[i] = y[i] + k1[i] * (h * A21);
        }
        rhs(t + C2 * h, &self.tmp, k2);
        for i in 0..n {
            self.tmp[i] = y[i] + (k1[i] * A31 + k2[i] * A32) * h;
        }
        rhs(t + C3 * h, &self.tmp, k3);
        for i in 0..n {
            self.tmp[i] = y[i] + (k1[i] * A41 + k2[i] * A42 + k3[i] * A43) * h;
        }
        rhs(t + C4 * h, &self.tmp, k4);
        for i in 0..n {
            self.tmp[i] = y[i] + (k1[i] * A51 + k2[i] * A52 + k3[i] * A53 + k4[i] * A54) * h;
        }
        rhs(t + C5 * h, &self.tmp, k5);
        for i in 0..n {
            self.tmp[i] = y[i] + (k1[i] * A61 + k2[i] * A62 + k3[i] * A63 + k4[i] * A64 + k5[i] * A65) * h;
        }
        rhs(t + h, &self.tmp, k6);
        for i in 0..n {
            self.ynew[i] = y[i] + (k1[i] * B1 + k3[i] * B3 + k4[i] * B4 + k5[i] * B5 + k6[i] * B6) * h;
        }
        rhs(t + h, &self.ynew, k7);
        let mut acc = 0.0;
        for i in 0..n {
            let e = (k1[i] * E1 + k3[i] * E3 + k4[i] * E4 + k5[i] * E5 + k6[i] * E6 + k7[i] * E7) * h;
            let sc = self.abs_tol + self.rel_tol * y[i].norm().max(self.ynew[i].norm());
            acc += (e.norm() / sc).powi(2);
        }
        (acc / n.max(1) as f64).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn decay_rhs(t: f64, y: &[C64], dy: &mut [C64]) {
        // y' = (−0.3 + 2i cos t) y
        let rate = C64::new(-0.3, 2.0 * t.cos());
        for (d, v) in dy.iter_mut().zip(y) {
            *d = rate * v;
        }
    }

    fn exact(t: f64) -> C64 {
        (C64::new(-0.3 * t, 2.0 * t.sin())).exp()
    }

    #[test]
    fn rk4_fourth_order() {
        let times = [0.0, 2.0];
        let errs: Vec<f64> = [0.1, 0.05]
            .iter()
            .map(|&h| {
                let y =
                    integrate(vec![C64::new(1.0, 0.0)], &times, &IntegratorConfig::rk4(h), decay_rhs, |_, _, _| Ok(()))
                        .unwrap();
                (y[0] - exact(2.0)).norm()
            })
            .collect();
        let order = (errs[0] / errs[1]).log2();
        assert!((order - 4.0).abs() < 0.3, "observed order {order}");
    }

    #[test]
    fn dopri_meets_tolerance_and_hits_outputs() {
        let times: Vec<f64> = (0..=10).map(|k| k as f64 * 0.7).collect();
        let mut seen = Vec::new();
        integrate(vec![C64::new(1.0, 0.0)], &times, &IntegratorConfig::adaptive(1e-10, 1e-12), decay_rhs, |k, t, y| {
            seen.push((k, t, y[0]));
            Ok(())
        })
        .unwrap();
        assert_eq!(seen.len(), times.len());
        for (k, t, y) in seen {
            assert_eq!(t, times[k]);
            assert!((y - exact(t)).norm() < 1e-8, "t={t}");
        }
    }

    #[test]
    fn rejects_bad_grids() {
        let cfg = IntegratorConfig::rk4(0.1);
        let run = |ts: &[f64]| integrate(vec![C64::new(1.0, 0.0)], ts, &cfg, decay_rhs, |_, _, _| Ok(()));
        assert!(run(&[]).is_err());
        assert!(run(&[1.0, 0.5]).is_err());
        assert!(integrate(vec![], &[0.0], &IntegratorConfig::rk4(0.0), decay_rhs, |_, _, _| Ok(())).is_err());
    }
}
