//! Adaptive Dormand–Prince 5(4) stepping for linear-algebra-free ODEs.
//!
//! The integrator works on any slice of [`Component`]s, which covers both
//! the vectorized density matrix (complex) and scalar moment equations
//! (real). Output is produced exactly at caller-supplied sample times by
//! clipping steps, not by interpolation.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub trait Component:
    Copy + Default + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self>
{
    fn magnitude(self) -> f64;
}

impl Component for f64 {
    fn magnitude(self) -> f64 {
        self.abs()
    }
}

impl Component for Complex64 {
    fn magnitude(self) -> f64 {
        self.norm()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { rtol: 1e-9, atol: 1e-11 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
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
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// 5th-order weights minus embedded 4th-order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 10.0;
const MAX_STEPS: usize = 50_000_000;

fn combine<T: Component>(out: &mut [T], y: &[T], h: f64, terms: &[(f64, &[T])]) {
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = T::default();
        for (coef, k) in terms {
            acc = acc + k[i] * *coef;
        }
        *o = y[i] + acc * h;
    }
}

/// Integrate `dy/dt = f(t, y)` from `times[0]` through every entry of
/// `times`, calling `observe(t, y)` at each (including the first).
///
/// `observe` may abort the run by returning an error.
pub fn integrate<T, F, O>(rhs: F, y0: &[T], times: &[f64], tol: Tolerances, observe: O) -> Result<StepStats>
where
    T: Component,
    F: FnMut(f64, &[T], &mut [T]),
    O: FnMut(f64, &[T]) -> Result<()>,
{
    integrate_projected(rhs, y0, times, tol, observe, |_: &mut [T]| {})
}

/// [`integrate`] with a linear projection applied to the state after every
/// accepted step.
///
/// The projection must commute with `f` (the exact flow stays on its
/// range), because it is also applied to the reused final-stage slope.
pub fn integrate_projected<T, F, O, P>(
    mut rhs: F,
    y0: &[T],
    times: &[f64],
    tol: Tolerances,
    mut observe: O,
    mut project: P,
) -> Result<StepStats>
where
    T: Component,
    F: FnMut(f64, &[T], &mut [T]),
    O: FnMut(f64, &[T]) -> Result<()>,
    P: FnMut(&mut [T]),
{
    let n = y0.len();
    let mut stats = StepStats { accepted: 0, rejected: 0, rhs_evals: 0 };
    let Some(&t_start) = times.first() else {
        return Ok(stats);
    };
    let mut y = y0.to_vec();
    observe(t_start, &y)?;
    if times.len() == 1 {
        return Ok(stats);
    }

    let mut k: Vec<Vec<T>> = (0..7).map(|_| vec![T::default(); n]).collect();
    let mut stage = vec![T::default(); n];
    let mut y_new = vec![T::default(); n];

    let mut t = t_start;
    rhs(t, &y, &mut k[0]);
    stats.rhs_evals += 1;
    let mut h = initial_step(&y, &k[0], tol, times[times.len() - 1] - t_start);
    let mut err_prev = 1e-4f64;

    for &target in &times[1..] {
        while t < target {
            if stats.accepted + stats.rejected > MAX_STEPS {
                return Err(Error::Integration(format!("step budget exhausted at t = {t}")));
            }
            let remaining = target - t;
            let clipped = h >= remaining;
            let step = if clipped { remaining } else { h };

            let (k1, rest) = k.split_at_mut(1);
            let k1 = &k1[0];
            let [k2, k3, k4, k5, k6, k7] = rest else { unreachable!() };

            combine(&mut stage, &y, step, &[(A21, k1)]);
            rhs(t + C2 * step, &stage, k2);
            combine(&mut stage, &y, step, &[(A31, k1), (A32, k2)]);
            rhs(t + C3 * step, &stage, k3);
            combine(&mut stage, &y, step, &[(A41, k1), (A42, k2), (A43, k3)]);
            rhs(t + C4 * step, &stage, k4);
            combine(&mut stage, &y, step, &[(A51, k1), (A52, k2), (A53, k3), (A54, k4)]);
            rhs(t + C5 * step, &stage, k5);
            combine(
                &mut stage,
                &y,
                step,
                &[(A61, k1), (A62, k2), (A63, k3), (A64, k4), (A65, k5)],
            );
            rhs(t + step, &stage, k6);
            combine(
                &mut y_new,
                &y,
                step,
                &[(A71, k1), (A73, k3), (A74, k4), (A75, k5), (A76, k6)],
            );
            rhs(t + step, &y_new, k7);
            stats.rhs_evals += 6;

            let mut sum = 0.0;
            for i in 0..n {
                let e = (k1[i] * E1 + k3[i] * E3 + k4[i] * E4 + k5[i] * E5 + k6[i] * E6 + k7[i] * E7)
                    * step;
                let scale = tol.atol + tol.rtol * y[i].magnitude().max(y_new[i].magnitude());
                let r = e.magnitude() / scale;
                sum += r * r;
            }
            let err = (sum / n.max(1) as f64).sqrt();
            if !err.is_finite() {
                return Err(Error::Integration(format!("non-finite error estimate at t = {t}")));
            }

            if err <= 1.0 {
                // PI controller (Hairer's beta = 0.04)
                let factor = if err == 0.0 {
                    MAX_FACTOR
                } else {
                    (SAFETY * err.powf(-0.17) * err_prev.powf(0.04)).clamp(MIN_FACTOR, MAX_FACTOR)
                };
                err_prev = err.max(1e-4);
                t = if clipped { target } else { t + step };
                std::mem::swap(&mut y, &mut y_new);
                // FSAL: k7 at the accepted point becomes k1.
                k.swap(0, 6);
                project(&mut y);
                project(&mut k[0]);
                stats.accepted += 1;
                if !clipped {
                    h = step * factor;
                } else {
                    h = h.max(step * factor).min(h * MAX_FACTOR);
                }
            } else {
                let factor = (SAFETY * err.powf(-0.2)).max(MIN_FACTOR);
                h = step * factor;
                stats.rejected += 1;
            }
            if h < 1e-14 * t.abs().max(1.0) {
                return Err(Error::Integration(format!("step size underflow at t = {t}")));
            }
        }
        observe(t, &y)?;
    }
    Ok(stats)
}

fn initial_step<T: Component>(y: &[T], f0: &[T], tol: Tolerances, span: f64) -> f64 {
    let n = y.len().max(1) as f64;
    let mut d0 = 0.0;
    let mut d1 = 0.0;
    for (yi, fi) in y.iter().zip(f0) {
        let sc = tol.atol + tol.rtol * yi.magnitude();
        d0 += (yi.magnitude() / sc).powi(2);
        d1 += (fi.magnitude() / sc).powi(2);
    }
    let (d0, d1) = ((d0 / n).sqrt(), (d1 / n).sqrt());
    let h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h.min(span.abs().max(1e-12))
}
