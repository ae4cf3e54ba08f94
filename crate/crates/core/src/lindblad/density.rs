//! Density matrices on the dressed-atom ⊗ truncated-oscillator space.
//!
//! Basis index of |level, n⟩ is `level · (n_max + 1) + n`, with level 0 the
//! lower dressed state |1̄⟩ and level 1 the upper one |2̄⟩. Vectorization is
//! row-major: element (i, j) sits at `i · D + j`.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};

/// Hermiticity required of inputs, max |ρ − ρ†|.
pub const HERMITICITY_TOL: f64 = 1e-12;
/// Allowed trace drift.
pub const TRACE_TOL: f64 = 1e-8;
/// Most negative eigenvalue tolerated.
pub const POSITIVITY_TOL: f64 = -1e-10;

pub fn hilbert_dim(n_max: usize) -> usize {
    2 * (n_max + 1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    n_max: usize,
    matrix: DMatrix<Complex64>,
}

/// Expectation values read off a density matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Observables {
    pub trace: Complex64,
    /// ⟨b†b⟩
    pub n: f64,
    /// ⟨R_z⟩
    pub rz: f64,
    /// ⟨R⁺⟩ = Tr(|2̄⟩⟨1̄| ρ)
    pub rplus: Complex64,
    pub r11: f64,
    pub r22: f64,
    /// Population of the two highest Fock levels.
    pub tail_mass: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Hygiene {
    /// |Tr ρ − 1|
    pub trace_error: f64,
    /// max |ρ − ρ†|
    pub hermiticity_error: f64,
    /// Smallest eigenvalue of the Hermitian part.
    pub min_eigenvalue: f64,
}

impl Hygiene {
    pub fn is_physical(&self, hermiticity_tol: f64) -> bool {
        self.trace_error <= TRACE_TOL
            && self.hermiticity_error <= hermiticity_tol
            && self.min_eigenvalue >= POSITIVITY_TOL
    }
}

/// Observables straight from a row-major vectorized ρ.
pub fn observables_of(vec: &[Complex64], n_max: usize) -> Observables {
    let m = n_max + 1;
    let d = 2 * m;
    debug_assert_eq!(vec.len(), d * d);
    let diag = |i: usize| vec[i * d + i];
    let mut trace = Complex64::new(0.0, 0.0);
    let (mut n, mut r11, mut r22, mut tail) = (0.0, 0.0, 0.0, 0.0);
    let mut rplus = Complex64::new(0.0, 0.0);
    for k in 0..m {
        let lo = diag(k);
        let hi = diag(m + k);
        trace += lo + hi;
        r11 += lo.re;
        r22 += hi.re;
        n += k as f64 * (lo.re + hi.re);
        if k + 2 > n_max {
            tail += lo.re + hi.re;
        }
        // ⟨1̄,k| ρ |2̄,k⟩
        rplus += vec[k * d + (m + k)];
    }
    Observables {
        trace,
        n,
        rz: r22 - r11,
        rplus,
        r11,
        r22,
        tail_mass: tail,
    }
}

impl DensityMatrix {
    pub fn from_matrix(n_max: usize, matrix: DMatrix<Complex64>) -> Result<Self> {
        let d = hilbert_dim(n_max);
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::invalid(
                "rho",
                format!("expected {d}x{d}, got {}x{}", matrix.nrows(), matrix.ncols()),
            ));
        }
        Ok(DensityMatrix { n_max, matrix })
    }

    /// Rebuild from a row-major vectorization.
    pub fn from_vec(n_max: usize, vec: &[Complex64]) -> Result<Self> {
        let d = hilbert_dim(n_max);
        if vec.len() != d * d {
            return Err(Error::invalid("rho", format!("expected {} entries, got {}", d * d, vec.len())));
        }
        Ok(DensityMatrix {
            n_max,
            matrix: DMatrix::from_fn(d, d, |i, j| vec[i * d + j]),
        })
    }

    /// ρ_atom ⊗ ρ_phonon with a 2×2 dressed-basis atomic state.
    pub fn product(atom: &DMatrix<Complex64>, phonon: &DMatrix<Complex64>) -> Result<Self> {
        if atom.shape() != (2, 2) || phonon.nrows() != phonon.ncols() || phonon.nrows() < 1 {
            return Err(Error::invalid("rho", "atom must be 2x2 and phonon square"));
        }
        let n_max = phonon.nrows() - 1;
        Self::from_matrix(n_max, atom.kronecker(phonon))
    }

    /// Diagonal dressed populations with the phonon in a given state.
    pub fn with_dressed_populations(r11: f64, r22: f64, phonon: &DMatrix<Complex64>) -> Result<Self> {
        let atom = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            Complex64::new(r11, 0.0),
            Complex64::new(r22, 0.0),
        ]));
        Self::product(&atom, phonon)
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn to_vec(&self) -> Vec<Complex64> {
        let d = self.dim();
        let mut v = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                v.push(self.matrix[(i, j)]);
            }
        }
        v
    }

    pub fn observables(&self) -> Observables {
        observables_of(&self.to_vec(), self.n_max)
    }

    /// Reduced phonon populations p(n) = Σ_level ρ_{(level,n),(level,n)}.
    pub fn phonon_populations(&self) -> Vec<f64> {
        let m = self.n_max + 1;
        (0..m)
            .map(|k| self.matrix[(k, k)].re + self.matrix[(m + k, m + k)].re)
            .collect()
    }

    pub fn hermiticity_error(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in i..d {
                worst = worst.max((self.matrix[(i, j)] - self.matrix[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let herm = (&self.matrix + self.matrix.adjoint()) * Complex64::new(0.5, 0.0);
        SymmetricEigen::new(herm).eigenvalues.min()
    }

    pub fn hygiene(&self) -> Hygiene {
        Hygiene {
            trace_error: (self.matrix.trace() - Complex64::new(1.0, 0.0)).norm(),
            hermiticity_error: self.hermiticity_error(),
            min_eigenvalue: self.min_eigenvalue(),
        }
    }
}

/// Fock state |n⟩⟨n| truncated at `n_max`.
pub fn fock(n_max: usize, n: usize) -> DMatrix<Complex64> {
    assert!(n <= n_max, "Fock level {n} above truncation {n_max}");
    let mut m = DMatrix::zeros(n_max + 1, n_max + 1);
    m[(n, n)] = Complex64::new(1.0, 0.0);
    m
}

/// Thermal state with the given mean, renormalized after truncation.
pub fn thermal(n_max: usize, mean: f64) -> DMatrix<Complex64> {
    assert!(mean >= 0.0);
    let q = mean / (1.0 + mean);
    let weights: Vec<f64> = (0..=n_max).map(|k| q.powi(k as i32)).collect();
    let z: f64 = weights.iter().sum();
    DMatrix::from_fn(n_max + 1, n_max + 1, |i, j| {
        if i == j {
            Complex64::new(weights[i] / z, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_state_observables() {
        let rho = DensityMatrix::with_dressed_populations(0.75, 0.25, &fock(4, 2)).unwrap();
        assert_eq!(rho.dim(), 10);
        let o = rho.observables();
        assert!((o.trace.re - 1.0).abs() < 1e-15);
        assert!((o.n - 2.0).abs() < 1e-15);
        assert!((o.rz + 0.5).abs() < 1e-15);
        assert_eq!(o.tail_mass, 0.0);
        let h = rho.hygiene();
        assert!(h.is_physical(HERMITICITY_TOL));
        assert!(h.min_eigenvalue.abs() < 1e-15);
    }

    #[test]
    fn vec_round_trip_is_row_major() {
        let mut m = DMatrix::zeros(4, 4);
        m[(0, 1)] = Complex64::new(3.0, 0.0);
        let rho = DensityMatrix::from_matrix(1, m).unwrap();
        let v = rho.to_vec();
        assert_eq!(v[1], Complex64::new(3.0, 0.0));
        assert_eq!(DensityMatrix::from_vec(1, &v).unwrap(), rho);
    }

    #[test]
    fn coherence_enters_rplus() {
        let mut atom = DMatrix::zeros(2, 2);
        atom[(0, 0)] = Complex64::new(0.5, 0.0);
        atom[(1, 1)] = Complex64::new(0.5, 0.0);
        atom[(0, 1)] = Complex64::new(0.2, 0.1);
        atom[(1, 0)] = Complex64::new(0.2, -0.1);
        let rho = DensityMatrix::product(&atom, &thermal(6, 0.5)).unwrap();
        let o = rho.observables();
        assert!((o.rplus - Complex64::new(0.2, 0.1)).norm() < 1e-15);
        assert!(rho.hermiticity_error() < 1e-16);
    }

    #[test]
    fn thermal_tail_and_mean() {
        let p = thermal(40, 0.5);
        let mean: f64 = (0..=40).map(|k| k as f64 * p[(k, k)].re).sum();
        assert!((mean - 0.5).abs() < 1e-12);
        let rho = DensityMatrix::with_dressed_populations(1.0, 0.0, &thermal(3, 2.0)).unwrap();
        assert!(rho.observables().tail_mass > 0.3);
    }

    #[test]
    fn negative_eigenvalue_detected() {
        let mut m = DMatrix::zeros(4, 4);
        m[(0, 0)] = Complex64::new(1.2, 0.0);
        m[(1, 1)] = Complex64::new(-0.2, 0.0);
        let rho = DensityMatrix::from_matrix(1, m).unwrap();
        assert!((rho.min_eigenvalue() + 0.2).abs() < 1e-14);
        assert!(!rho.hygiene().is_physical(HERMITICITY_TOL));
    }
}
