//! Numerical oracle: the full dressed-state master equation on
//! atom ⊗ truncated Fock space.
//!
//! The generator is
//!
//! ```text
//! dρ/dt = −i[H₀, ρ] − Σ_c κ_c {J_c†J_c ρ − 2 J_c ρ̄ J_c† + ρ J_c†J_c}
//! H₀    = ν b†b + Ω̄ R_z + iηΩ (R⁺ − R⁻)(b + b†)
//! ```
//!
//! with channels `(γ₀/4) sin²2θ` on `R_z`, `γ₊ cos⁴θ` on `R⁻` and
//! `γ₋ sin⁴θ` on `R⁺`. The recoil-averaged state inside each jump term is
//! expanded to second order in η:
//! `ρ̄ ≈ ρ + αη² (XρX − ½{X², ρ})`, `X = b + b†`, `α = 2/5`.
//! `X²` is formed as the square of the truncated `X`, which keeps the
//! truncated generator exactly trace preserving.

mod banded;
pub mod density;
mod evolve;
mod sparse;
mod steady;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::analytic::RECOIL_SECOND_MOMENT;
use crate::error::{Error, Result};
use crate::params::PhysicalParams;

pub use density::{fock, hilbert_dim, thermal, DensityMatrix, Hygiene, Observables};
pub use evolve::{
    evolve, fit_exponential_rate, reduced_phonon_evolve, EvolveOptions, EvolveSample, Evolution,
};
pub use sparse::CsrMatrix;
pub use steady::{
    steady_state, steady_state_converged, ConvergedSteady, ConvergenceOptions, SteadyState,
};

/// Default cap on the Hilbert dimension D = 2(n_max + 1).
pub const DEFAULT_DIM_CAP: usize = 128;
/// Default Fock truncation.
pub const DEFAULT_N_MAX: usize = 12;
/// Smallest accepted truncation.
pub const MIN_N_MAX: usize = 2;

/// Scalar content of the generator, decoupled from parameter validation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GeneratorTerms {
    pub nu: f64,
    pub omega_bar: f64,
    /// ηΩ
    pub coupling: f64,
    /// αη², the weight of the recoil correction.
    pub recoil: f64,
    /// (γ₀/4) sin²2θ on R_z
    pub kappa_dephase: f64,
    /// γ₊ cos⁴θ on R⁻ (|2̄⟩ → |1̄⟩)
    pub kappa_down: f64,
    /// γ₋ sin⁴θ on R⁺ (|1̄⟩ → |2̄⟩)
    pub kappa_up: f64,
}

impl GeneratorTerms {
    pub fn from_params(p: &PhysicalParams) -> Self {
        let f = p.dressed_frame();
        GeneratorTerms {
            nu: p.nu(),
            omega_bar: f.omega_bar,
            coupling: p.coupling(),
            recoil: RECOIL_SECOND_MOMENT * p.eta() * p.eta(),
            kappa_dephase: 0.25 * p.gamma_zero() * f.sin2_2theta(),
            kappa_down: p.gamma_plus() * f.cos4_theta(),
            kappa_up: p.gamma_minus() * f.sin4_theta(),
        }
    }

    /// Same Hamiltonian, every dissipative channel switched off.
    pub fn hamiltonian_only(self) -> Self {
        GeneratorTerms {
            kappa_dephase: 0.0,
            kappa_down: 0.0,
            kappa_up: 0.0,
            ..self
        }
    }
}

/// Linear generator acting on row-major vectorized density matrices.
#[derive(Debug, Clone)]
pub struct Liouvillian {
    terms: GeneratorTerms,
    params: Option<PhysicalParams>,
    n_max: usize,
    matrix: CsrMatrix,
}

type Op = DMatrix<Complex64>;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

struct Operators {
    h: Op,
    rz: Op,
    lower: Op, // R⁻
    raise: Op, // R⁺
    x: Op,
    x2: Op,
}

fn operators(terms: &GeneratorTerms, n_max: usize) -> Operators {
    let m = n_max + 1;
    let id_ph = Op::identity(m, m);
    let id_at = Op::identity(2, 2);
    let mut b = Op::zeros(m, m);
    for k in 1..m {
        b[(k - 1, k)] = c((k as f64).sqrt());
    }
    let x_ph = &b + b.adjoint();
    let num_ph = b.adjoint() * &b;

    // dressed levels: index 0 = |1̄⟩, 1 = |2̄⟩
    let mut rz_at = Op::zeros(2, 2);
    rz_at[(0, 0)] = c(-1.0);
    rz_at[(1, 1)] = c(1.0);
    let mut raise_at = Op::zeros(2, 2);
    raise_at[(1, 0)] = c(1.0);
    let lower_at = raise_at.adjoint();

    let rz = rz_at.kronecker(&id_ph);
    let raise = raise_at.kronecker(&id_ph);
    let lower = lower_at.kronecker(&id_ph);
    let x = id_at.kronecker(&x_ph);
    let x2 = &x * &x;
    let h = id_at.kronecker(&num_ph) * c(terms.nu)
        + &rz * c(terms.omega_bar)
        + (&raise - &lower) * &x * Complex64::new(0.0, terms.coupling);
    Operators { h, rz, lower, raise, x, x2 }
}

fn nonzeros(op: &Op) -> Vec<(usize, usize, Complex64)> {
    let mut out = Vec::new();
    for j in 0..op.ncols() {
        for i in 0..op.nrows() {
            let v = op[(i, j)];
            if v != c(0.0) {
                out.push((i, j, v));
            }
        }
    }
    out
}

struct Assembler {
    d: usize,
    triplets: Vec<(usize, usize, Complex64)>,
}

impl Assembler {
    /// ρ ↦ w · A ρ
    fn left(&mut self, a: &Op, w: Complex64) {
        for (i, k, v) in nonzeros(a) {
            for j in 0..self.d {
                self.triplets.push((i * self.d + j, k * self.d + j, w * v));
            }
        }
    }

    /// ρ ↦ w · ρ B
    fn right(&mut self, b: &Op, w: Complex64) {
        for (k, j, v) in nonzeros(b) {
            for i in 0..self.d {
                self.triplets.push((i * self.d + j, i * self.d + k, w * v));
            }
        }
    }

    /// ρ ↦ w · A ρ B
    fn sandwich(&mut self, a: &Op, b: &Op, w: Complex64) {
        let bs = nonzeros(b);
        for (i, k, va) in nonzeros(a) {
            for &(l, j, vb) in &bs {
                self.triplets.push((i * self.d + j, k * self.d + l, w * va * vb));
            }
        }
    }

    /// −κ {J†J ρ − 2 J ρ̄ J† + ρ J†J}
    fn channel(&mut self, kappa: f64, jump: &Op, ops: &Operators, recoil: f64) {
        if kappa == 0.0 {
            return;
        }
        let jd = jump.adjoint();
        let jdj = &jd * jump;
        self.left(&jdj, c(-kappa));
        self.right(&jdj, c(-kappa));
        self.sandwich(jump, &jd, c(2.0 * kappa));
        if recoil != 0.0 {
            let w = 2.0 * kappa * recoil;
            let jx = jump * &ops.x;
            let xjd = &ops.x * &jd;
            self.sandwich(&jx, &xjd, c(w));
            self.sandwich(&(jump * &ops.x2), &jd, c(-0.5 * w));
            self.sandwich(jump, &(&ops.x2 * &jd), c(-0.5 * w));
        }
    }
}

pub fn build_liouvillian(p: &PhysicalParams, n_max: usize) -> Result<Liouvillian> {
    build_liouvillian_with_cap(p, n_max, DEFAULT_DIM_CAP)
}

pub fn build_liouvillian_with_cap(p: &PhysicalParams, n_max: usize, dim_cap: usize) -> Result<Liouvillian> {
    let mut l = build_generator(GeneratorTerms::from_params(p), n_max, dim_cap)?;
    l.params = Some(*p);
    Ok(l)
}

/// Assemble the generator from raw terms; [`build_liouvillian`] is the
/// usual entry point.
pub fn build_generator(terms: GeneratorTerms, n_max: usize, dim_cap: usize) -> Result<Liouvillian> {
    if n_max < MIN_N_MAX {
        return Err(Error::invalid("n_max", format!("must be >= {MIN_N_MAX}, got {n_max}")));
    }
    let d = hilbert_dim(n_max);
    if d > dim_cap {
        return Err(Error::DimensionOverflow { dim: d, cap: dim_cap });
    }
    let ops = operators(&terms, n_max);
    let mut asm = Assembler { d, triplets: Vec::new() };
    asm.left(&ops.h, Complex64::new(0.0, -1.0));
    asm.right(&ops.h, Complex64::new(0.0, 1.0));
    asm.channel(terms.kappa_dephase, &ops.rz, &ops, terms.recoil);
    asm.channel(terms.kappa_down, &ops.lower, &ops, terms.recoil);
    asm.channel(terms.kappa_up, &ops.raise, &ops, terms.recoil);
    Ok(Liouvillian {
        terms,
        params: None,
        n_max,
        matrix: CsrMatrix::from_triplets(d * d, d * d, asm.triplets),
    })
}

impl Liouvillian {
    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// Hilbert dimension D; the generator is D² × D².
    pub fn dim(&self) -> usize {
        hilbert_dim(self.n_max)
    }

    pub fn terms(&self) -> &GeneratorTerms {
        &self.terms
    }

    pub fn params(&self) -> Option<&PhysicalParams> {
        self.params.as_ref()
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    pub fn apply(&self, rho: &[Complex64], out: &mut [Complex64]) {
        self.matrix.matvec(rho, out);
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        self.matrix.to_dense()
    }

    /// Largest |Σ_i L[(i,i), col]| over all columns: how far d(Tr ρ)/dt is
    /// from vanishing identically.
    pub fn trace_defect(&self) -> f64 {
        let d = self.dim();
        let mut row = vec![c(0.0); d * d];
        for i in 0..d {
            for (col, v) in self.matrix.row(i * d + i) {
                row[col] += v;
            }
        }
        row.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}
