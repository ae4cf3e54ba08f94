//! Stationary state of the truncated generator by a direct kernel solve.
//!
//! The system `L·vec(ρ) = 0, Tr ρ = 1` is solved by replacing one
//! diagonal-element row of `L` with the trace row. That matrix equals
//! `L̃ + e_k (t − e_k)ᵀ`, where `L̃` has row `k` replaced by `e_kᵀ`; by
//! Sherman–Morrison its solution is `L̃⁻¹e_k / Tr(L̃⁻¹e_k)`. `L̃` keeps the
//! band structure of `L` under a phonon-major ordering, so the solve costs
//! a banded LU instead of a dense one.

use num_complex::Complex64;
use serde::Serialize;

use super::banded::BandedLu;
use super::density::{observables_of, DensityMatrix, Hygiene, Observables, HERMITICITY_TOL};
use super::{build_liouvillian_with_cap, hilbert_dim, Liouvillian, DEFAULT_DIM_CAP, DEFAULT_N_MAX};
use crate::error::{Error, Result};
use crate::params::PhysicalParams;

/// A pivot smaller than this fraction of the largest generator entry marks
/// the replaced system as singular.
const PIVOT_RTOL: f64 = 1e-13;
/// Residual ‖L·vec(ρ)‖∞ required of an accepted steady state.
pub const RESIDUAL_TOL: f64 = 1e-10;
/// Dense SVD diagnostics are only attempted up to this many unknowns.
const SVD_DIAGNOSTIC_LIMIT: usize = 1600;

#[derive(Debug, Clone, Serialize)]
pub struct SteadyState {
    #[serde(skip)]
    pub rho: DensityMatrix,
    pub n_max: usize,
    pub observables: Observables,
    pub hygiene: Hygiene,
    /// ‖L·vec(ρ)‖∞
    pub residual: f64,
    /// Smallest pivot of the factorization, relative to max |L|.
    pub min_pivot_ratio: f64,
}

/// Position of element (i, j) in the banded ordering: phonon indices
/// outermost, atomic levels innermost.
fn band_position(i: usize, j: usize, m: usize) -> usize {
    let (a, n) = (i / m, i % m);
    let (b, k) = (j / m, j % m);
    ((n * m + k) * 2 + a) * 2 + b
}

pub fn steady_state(l: &Liouvillian) -> Result<SteadyState> {
    let d = l.dim();
    let m = l.n_max() + 1;
    let size = d * d;
    let perm: Vec<usize> = (0..size).map(|r| band_position(r / d, r % d, m)).collect();

    let mut entries = Vec::with_capacity(l.matrix().nnz());
    let (mut kl, mut ku) = (0usize, 0usize);
    for r in 0..size {
        for (col, v) in l.matrix().row(r) {
            let (pr, pc) = (perm[r], perm[col]);
            kl = kl.max(pr.saturating_sub(pc));
            ku = ku.max(pc.saturating_sub(pr));
            entries.push((pr, pc, v));
        }
    }
    let scale = l.matrix().max_abs();

    // Anchor candidates: ground-state populations with few phonons.
    let anchors = [(0, 0), (m, m), (1, 1), (m + 1, m + 1)];
    for &(ai, aj) in &anchors {
        let anchor = perm[ai * d + aj];
        let replaced = entries
            .iter()
            .copied()
            .filter(|&(r, _, _)| r != anchor)
            .chain(std::iter::once((anchor, anchor, Complex64::new(1.0, 0.0))));
        let Ok(lu) = BandedLu::factor(size, kl, ku, replaced, PIVOT_RTOL * scale) else {
            continue;
        };
        let solve = |rhs: &mut Vec<Complex64>| lu.solve_in_place(rhs);

        let mut y = vec![Complex64::new(0.0, 0.0); size];
        y[anchor] = Complex64::new(1.0, 0.0);
        solve(&mut y);
        // one round of iterative refinement against the replaced system
        let mut unpermuted = unpermute(&y, &perm);
        let mut lr = vec![Complex64::new(0.0, 0.0); size];
        l.apply(&unpermuted, &mut lr);
        let mut correction = vec![Complex64::new(0.0, 0.0); size];
        for r in 0..size {
            correction[perm[r]] = -lr[r];
        }
        correction[anchor] = Complex64::new(1.0, 0.0) - y[anchor];
        solve(&mut correction);
        for (yi, ci) in y.iter_mut().zip(&correction) {
            *yi += ci;
        }
        unpermuted = unpermute(&y, &perm);

        let trace: Complex64 = (0..d).map(|i| unpermuted[i * d + i]).sum();
        for v in unpermuted.iter_mut() {
            *v /= trace;
        }
        l.apply(&unpermuted, &mut lr);
        let residual = lr.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let rho = DensityMatrix::from_vec(l.n_max(), &unpermuted)?;
        return Ok(SteadyState {
            n_max: l.n_max(),
            observables: observables_of(&unpermuted, l.n_max()),
            hygiene: rho.hygiene(),
            rho,
            residual,
            min_pivot_ratio: lu.min_pivot / scale,
        });
    }
    Err(Error::NoSteadyState {
        smallest_singular_values: smallest_singular_values(l),
    })
}

fn unpermute(y: &[Complex64], perm: &[usize]) -> Vec<Complex64> {
    perm.iter().map(|&p| y[p]).collect()
}

fn smallest_singular_values(l: &Liouvillian) -> Option<[f64; 2]> {
    let size = l.dim() * l.dim();
    if size > SVD_DIAGNOSTIC_LIMIT {
        return None;
    }
    let mut sv: Vec<f64> = l.to_dense().singular_values().iter().copied().collect();
    sv.sort_by(|a, b| a.total_cmp(b));
    Some([sv[0], sv[1]])
}

impl SteadyState {
    /// Check residual and density-matrix invariants.
    pub fn verify(&self) -> Result<()> {
        if self.residual >= RESIDUAL_TOL || !self.hygiene.is_physical(HERMITICITY_TOL) {
            return Err(Error::NoSteadyState {
                smallest_singular_values: None,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceOptions {
    pub n_max_start: usize,
    pub step: usize,
    /// Accept when ⟨b†b⟩ moves by less than this (relative) over one step.
    pub rel_tol: f64,
    pub dim_cap: usize,
}

impl Default for ConvergenceOptions {
    fn default() -> Self {
        ConvergenceOptions {
            n_max_start: DEFAULT_N_MAX,
            step: 4,
            rel_tol: 1e-4,
            dim_cap: DEFAULT_DIM_CAP,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergedSteady {
    /// Solution at the accepted (larger) truncation.
    pub state: SteadyState,
    /// ⟨b†b⟩ at the previous truncation.
    pub n_previous: f64,
    pub rel_change: f64,
    /// Truncations tried, in order.
    pub n_max_history: Vec<usize>,
}

/// Steady state with automatic truncation escalation: raise n_max by
/// `step` until ⟨b†b⟩ changes by less than `rel_tol` or the dimension cap
/// is reached.
pub fn steady_state_converged(p: &PhysicalParams, opts: ConvergenceOptions) -> Result<ConvergedSteady> {
    let mut n_max = opts.n_max_start;
    let mut history = vec![n_max];
    let mut prev = steady_state(&build_liouvillian_with_cap(p, n_max, opts.dim_cap)?)?;
    prev.verify()?;
    loop {
        let next_n = n_max + opts.step.max(1);
        if hilbert_dim(next_n) > opts.dim_cap {
            let rel_change = f64::NAN;
            return Err(Error::NotConverged { n_max, rel_change });
        }
        let next = steady_state(&build_liouvillian_with_cap(p, next_n, opts.dim_cap)?)?;
        next.verify()?;
        history.push(next_n);
        let (a, b) = (prev.observables.n, next.observables.n);
        let rel_change = (b - a).abs() / b.abs().max(f64::MIN_POSITIVE);
        if rel_change < opts.rel_tol {
            return Ok(ConvergedSteady {
                state: next,
                n_previous: a,
                rel_change,
                n_max_history: history,
            });
        }
        if hilbert_dim(next_n + opts.step.max(1)) > opts.dim_cap {
            return Err(Error::NotConverged { n_max: next_n, rel_change });
        }
        prev = next;
        n_max = next_n;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::{steady_atom, steady_phonon};
    use crate::lindblad::build_liouvillian;

    #[test]
    fn banded_order_is_a_permutation() {
        let m = 4;
        let d = 2 * m;
        let mut seen = vec![false; d * d];
        for i in 0..d {
            for j in 0..d {
                let p = band_position(i, j, m);
                assert!(!seen[p]);
                seen[p] = true;
            }
        }
    }

    #[test]
    fn free_space_resonance_matches_closed_form() {
        let p = PhysicalParams::free_space(5.0, 2.0 * 11f64.sqrt(), 12.0, 0.1, 1.0).unwrap();
        let ss = steady_state(&build_liouvillian(&p, 12).unwrap()).unwrap();
        ss.verify().unwrap();
        let analytic = steady_phonon(&p).unwrap().finite().unwrap();
        let rel = (ss.observables.n - analytic).abs() / analytic;
        assert!(rel < 0.15, "oracle {} vs closed form {analytic}", ss.observables.n);
        let atom = steady_atom(&p).unwrap();
        assert!((ss.observables.r11 - atom.r11).abs() / atom.r11 < 0.05);
        assert!(ss.residual < RESIDUAL_TOL);
        assert!(ss.hygiene.hermiticity_error < 1e-12);
    }

    #[test]
    fn uncoupled_kernel_is_degenerate() {
        let p = PhysicalParams::free_space(5.0, 0.0, 2.0, 0.0, 1.0).unwrap();
        match steady_state(&build_liouvillian(&p, 3).unwrap()) {
            Err(Error::NoSteadyState { smallest_singular_values: Some([s0, s1]) }) => {
                assert!(s0 < 1e-12 && s1 < 1e-12, "{s0} {s1}");
            }
            other => panic!("expected NoSteadyState, got {other:?}"),
        }
    }

    #[test]
    fn convergence_escalates() {
        let p = PhysicalParams::new(5.0, 0.0, 6.0, 0.1, 1.0, 0.2, 0.2).unwrap();
        let conv = steady_state_converged(&p, ConvergenceOptions::default()).unwrap();
        assert!(conv.rel_change < 1e-4);
        assert!(conv.n_max_history.len() >= 2);
        assert_eq!(*conv.n_max_history.last().unwrap(), conv.state.n_max);
    }

    #[test]
    fn convergence_respects_cap() {
        let p = PhysicalParams::free_space(5.0, 2.0 * 11f64.sqrt(), 12.0, 0.1, 1.0).unwrap();
        let opts = ConvergenceOptions { n_max_start: 4, dim_cap: 12, ..Default::default() };
        assert!(matches!(steady_state_converged(&p, opts), Err(Error::NotConverged { .. })));
    }
}
