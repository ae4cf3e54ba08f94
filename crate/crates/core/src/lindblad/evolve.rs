use num_complex::Complex64;
use serde::Serialize;

use super::density::{observables_of, DensityMatrix, HERMITICITY_TOL};
use super::Liouvillian;
use crate::analytic::{check_time_grid, rate_set};
use crate::error::{Error, Result};
use crate::ode::{integrate, integrate_projected, StepStats, Tolerances};
use crate::params::PhysicalParams;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolveOptions {
    pub t_end: f64,
    /// Spacing of recorded samples; the last sample is always `t_end`.
    pub sample_dt: f64,
    pub tolerances: Tolerances,
    /// Largest population allowed in the top two Fock levels.
    pub tail_threshold: f64,
    /// Keep the full density matrix at every sample.
    pub keep_states: bool,
    /// Diagonalize every sample to track the smallest eigenvalue.
    pub check_positivity: bool,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        EvolveOptions {
            t_end: 10.0,
            sample_dt: 0.1,
            tolerances: Tolerances::default(),
            tail_threshold: 1e-6,
            keep_states: false,
            check_positivity: true,
        }
    }
}

impl EvolveOptions {
    pub fn sample_times(&self) -> Vec<f64> {
        let count = (self.t_end / self.sample_dt).floor() as usize;
        let mut times: Vec<f64> = (0..=count).map(|i| i as f64 * self.sample_dt).collect();
        match times.last() {
            Some(&last) if self.t_end - last > 1e-12 * self.t_end.max(1.0) => times.push(self.t_end),
            Some(_) => *times.last_mut().unwrap() = self.t_end,
            None => times.push(self.t_end),
        }
        if self.t_end == 0.0 {
            times.truncate(1);
        }
        times
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EvolveSample {
    pub t: f64,
    pub n: f64,
    pub rz: f64,
    pub rplus: Complex64,
    pub r11: f64,
    pub tail_mass: f64,
    pub trace_error: f64,
    /// Largest anti-Hermitian part removed from the state by a single step
    /// since the previous sample.
    pub hermiticity_drift: f64,
    /// `None` when positivity tracking is off.
    pub min_eigenvalue: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct Evolution {
    pub samples: Vec<EvolveSample>,
    /// Filled only with `keep_states`.
    pub states: Vec<DensityMatrix>,
    pub stats: StepStats,
}

impl Evolution {
    pub fn max_trace_error(&self) -> f64 {
        self.samples.iter().map(|s| s.trace_error).fold(0.0, f64::max)
    }
    pub fn max_hermiticity_drift(&self) -> f64 {
        self.samples.iter().map(|s| s.hermiticity_drift).fold(0.0, f64::max)
    }
    pub fn min_eigenvalue(&self) -> Option<f64> {
        self.samples
            .iter()
            .filter_map(|s| s.min_eigenvalue)
            .reduce(f64::min)
    }
}

/// Replace `vec(ρ)` by its Hermitian part and return the largest
/// `|ρᵢⱼ − ρⱼᵢ*|` that was removed.
fn hermitize(y: &mut [Complex64], d: usize) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..d {
        for j in i..d {
            let (a, b) = (y[i * d + j], y[j * d + i]);
            worst = worst.max((a - b.conj()).norm());
            let m = (a + b.conj()) * 0.5;
            y[i * d + j] = m;
            y[j * d + i] = m.conj();
        }
    }
    worst
}

/// Integrate the full master equation from `rho0`.
///
/// The exact flow keeps ρ Hermitian, but explicit Runge–Kutta steps near
/// the edge of their stability region slowly amplify the anti-Hermitian
/// rounding noise in weakly damped high-frequency modes. Each accepted
/// step is therefore projected back onto Hermitian matrices, and the size
/// of what was removed is reported as `hermiticity_drift`; a generator
/// that did not preserve Hermiticity would show up there at order `h`.
pub fn evolve(l: &Liouvillian, rho0: &DensityMatrix, opts: &EvolveOptions) -> Result<Evolution> {
    if rho0.n_max() != l.n_max() {
        return Err(Error::invalid(
            "rho0",
            format!("truncation {} does not match generator {}", rho0.n_max(), l.n_max()),
        ));
    }
    if !(opts.t_end >= 0.0 && opts.t_end.is_finite()) {
        return Err(Error::InvalidGrid(format!("t_end = {} must be >= 0", opts.t_end)));
    }
    if !(opts.sample_dt > 0.0) {
        return Err(Error::InvalidGrid(format!("sample_dt = {} must be > 0", opts.sample_dt)));
    }
    let h0 = rho0.hygiene();
    if !h0.is_physical(HERMITICITY_TOL) {
        return Err(Error::invalid("rho0", format!("not a density matrix: {h0:?}")));
    }

    let n_max = l.n_max();
    let times = opts.sample_times();
    let mut samples = Vec::with_capacity(times.len());
    let mut states = Vec::new();
    let d = l.dim();
    let drift = std::cell::Cell::new(0.0f64);
    let observe = |t: f64, y: &[Complex64]| -> Result<()> {
        let obs = observables_of(y, n_max);
        if obs.tail_mass > opts.tail_threshold {
            return Err(Error::TruncationBreach {
                time: t,
                tail: obs.tail_mass,
                threshold: opts.tail_threshold,
                n_max,
            });
        }
        let rho = DensityMatrix::from_vec(n_max, y)?;
        samples.push(EvolveSample {
            t,
            n: obs.n,
            rz: obs.rz,
            rplus: obs.rplus,
            r11: obs.r11,
            tail_mass: obs.tail_mass,
            trace_error: (obs.trace - Complex64::new(1.0, 0.0)).norm(),
            hermiticity_drift: drift.replace(0.0).max(rho.hermiticity_error()),
            min_eigenvalue: opts.check_positivity.then(|| rho.min_eigenvalue()),
        });
        if opts.keep_states {
            states.push(rho);
        }
        Ok(())
    };
    let stats = integrate_projected(
        |_, y: &[Complex64], dy: &mut [Complex64]| l.apply(y, dy),
        &rho0.to_vec(),
        &times,
        opts.tolerances,
        observe,
        |y: &mut [Complex64]| {
            let removed = hermitize(y, d);
            drift.set(drift.get().max(removed));
        },
    )?;
    Ok(Evolution { samples, states, stats })
}

/// Integrate `d⟨b†b⟩/dt = −C⟨b†b⟩ + A⁽⁺⁾` numerically on `times`.
pub fn reduced_phonon_evolve(p: &PhysicalParams, n0: f64, times: &[f64]) -> Result<Vec<f64>> {
    check_time_grid(times)?;
    let rates = rate_set(p)?;
    let (c, a) = (rates.cooling_rate, rates.a_rate_plus);
    let mut out = Vec::with_capacity(times.len());
    integrate(
        |_, y: &[f64], dy: &mut [f64]| dy[0] = -c * y[0] + a,
        &[n0],
        times,
        Tolerances { rtol: 1e-12, atol: 1e-15 },
        |_, y| {
            out.push(y[0]);
            Ok(())
        },
    )?;
    Ok(out)
}

/// Least-squares decay rate of `value − offset` over samples with
/// `t ∈ [t_min, t_max]`, from a straight-line fit of its logarithm.
///
/// Returns `None` with fewer than three usable samples.
pub fn fit_exponential_rate(
    points: impl IntoIterator<Item = (f64, f64)>,
    offset: f64,
    t_min: f64,
    t_max: f64,
) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points
        .into_iter()
        .filter(|&(t, v)| t >= t_min && t <= t_max && v - offset > 0.0)
        .map(|(t, v)| (t, (v - offset).ln()))
        .collect();
    if pts.len() < 3 {
        return None;
    }
    let k = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    Some(-sxy / sxx)
}
