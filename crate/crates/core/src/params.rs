//! Physical inputs and the laser-dressed frame.
//!
//! Every rate and frequency is a dimensionless multiple of a reference rate
//! chosen by the caller (see [`ReferenceRate`]). Only ratios ever enter the
//! model, so nothing here carries physical units.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which decay rate the dimensionless numbers are measured against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceRate {
    /// Free space, where all three dressed rates share one value.
    #[default]
    Gamma,
    /// Structured reservoir, rates quoted relative to the upper sideband rate.
    GammaPlus,
}

impl fmt::Display for ReferenceRate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ReferenceRate::Gamma => "gamma",
            ReferenceRate::GammaPlus => "gamma_plus",
        })
    }
}

impl FromStr for ReferenceRate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gamma" => Ok(ReferenceRate::Gamma),
            "gamma_plus" => Ok(ReferenceRate::GammaPlus),
            other => Err(Error::invalid(
                "reference_rate",
                format!("expected `gamma` or `gamma_plus`, got `{other}`"),
            )),
        }
    }
}

/// Model inputs: drive, detuning, trap and the three dressed decay rates.
///
/// Construction validates every field, so a value of this type is always
/// physically admissible. Fields are read through accessors; use the
/// `with_*` methods to derive a modified copy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct PhysicalParams {
    omega: f64,
    delta: f64,
    nu: f64,
    eta: f64,
    gamma_plus: f64,
    gamma_minus: f64,
    gamma_zero: f64,
}

/// Unvalidated mirror of [`PhysicalParams`], used for (de)serialization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawParams {
    pub omega: f64,
    pub delta: f64,
    pub nu: f64,
    pub eta: f64,
    pub gamma_plus: f64,
    pub gamma_minus: f64,
    pub gamma_zero: f64,
}

impl TryFrom<RawParams> for PhysicalParams {
    type Error = Error;

    fn try_from(r: RawParams) -> Result<Self> {
        PhysicalParams::new(
            r.omega,
            r.delta,
            r.nu,
            r.eta,
            r.gamma_plus,
            r.gamma_minus,
            r.gamma_zero,
        )
    }
}

impl From<PhysicalParams> for RawParams {
    fn from(p: PhysicalParams) -> Self {
        RawParams {
            omega: p.omega,
            delta: p.delta,
            nu: p.nu,
            eta: p.eta,
            gamma_plus: p.gamma_plus,
            gamma_minus: p.gamma_minus,
            gamma_zero: p.gamma_zero,
        }
    }
}

fn require_finite(field: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(field, format!("must be finite, got {v}")))
    }
}

impl PhysicalParams {
    pub fn new(
        omega: f64,
        delta: f64,
        nu: f64,
        eta: f64,
        gamma_plus: f64,
        gamma_minus: f64,
        gamma_zero: f64,
    ) -> Result<Self> {
        for (name, v) in [
            ("omega", omega),
            ("delta", delta),
            ("nu", nu),
            ("eta", eta),
            ("gamma_plus", gamma_plus),
            ("gamma_minus", gamma_minus),
            ("gamma_zero", gamma_zero),
        ] {
            require_finite(name, v)?;
        }
        if omega <= 0.0 {
            return Err(Error::invalid("omega", format!("must be > 0, got {omega}")));
        }
        if nu <= 0.0 {
            return Err(Error::invalid("nu", format!("must be > 0, got {nu}")));
        }
        if eta < 0.0 {
            return Err(Error::invalid("eta", format!("must be >= 0, got {eta}")));
        }
        for (name, g) in [
            ("gamma_plus", gamma_plus),
            ("gamma_minus", gamma_minus),
            ("gamma_zero", gamma_zero),
        ] {
            if g < 0.0 {
                return Err(Error::invalid(name, format!("must be >= 0, got {g}")));
            }
        }
        if gamma_plus + gamma_minus + gamma_zero <= 0.0 {
            return Err(Error::invalid(
                "gamma_plus",
                "gamma_plus, gamma_minus and gamma_zero are all zero",
            ));
        }
        Ok(PhysicalParams {
            omega,
            delta,
            nu,
            eta,
            gamma_plus,
            gamma_minus,
            gamma_zero,
        })
    }

    /// Free-space configuration: one decay rate on all three dressed lines.
    pub fn free_space(omega: f64, delta: f64, nu: f64, eta: f64, gamma: f64) -> Result<Self> {
        Self::new(omega, delta, nu, eta, gamma, gamma, gamma)
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }
    pub fn delta(&self) -> f64 {
        self.delta
    }
    pub fn nu(&self) -> f64 {
        self.nu
    }
    pub fn eta(&self) -> f64 {
        self.eta
    }
    pub fn gamma_plus(&self) -> f64 {
        self.gamma_plus
    }
    pub fn gamma_minus(&self) -> f64 {
        self.gamma_minus
    }
    pub fn gamma_zero(&self) -> f64 {
        self.gamma_zero
    }

    pub fn max_gamma(&self) -> f64 {
        self.gamma_plus.max(self.gamma_minus).max(self.gamma_zero)
    }

    /// Vibronic coupling strength ηΩ.
    pub fn coupling(&self) -> f64 {
        self.eta * self.omega
    }

    pub fn is_free_space(&self) -> bool {
        self.gamma_plus == self.gamma_minus && self.gamma_minus == self.gamma_zero
    }

    pub fn raw(&self) -> RawParams {
        (*self).into()
    }

    fn modified(self, f: impl FnOnce(&mut RawParams)) -> Result<Self> {
        let mut raw = self.raw();
        f(&mut raw);
        raw.try_into()
    }

    pub fn with_omega(self, v: f64) -> Result<Self> {
        self.modified(|r| r.omega = v)
    }
    pub fn with_delta(self, v: f64) -> Result<Self> {
        self.modified(|r| r.delta = v)
    }
    pub fn with_nu(self, v: f64) -> Result<Self> {
        self.modified(|r| r.nu = v)
    }
    pub fn with_eta(self, v: f64) -> Result<Self> {
        self.modified(|r| r.eta = v)
    }
    pub fn with_gammas(self, plus: f64, minus: f64, zero: f64) -> Result<Self> {
        self.modified(|r| {
            r.gamma_plus = plus;
            r.gamma_minus = minus;
            r.gamma_zero = zero;
        })
    }

    pub fn dressed_frame(&self) -> DressedFrame {
        DressedFrame::new(self.omega, self.delta)
    }
}

/// Trigonometry of the dressing angle θ, with cot 2θ = Δ/(2Ω).
///
/// θ itself is never stored; every formula downstream only needs these
/// functions of it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DressedFrame {
    /// Generalized Rabi frequency Ω̄ = √(Ω² + (Δ/2)²).
    pub omega_bar: f64,
    /// cos²θ
    pub cos2_theta: f64,
    /// sin²θ
    pub sin2_theta: f64,
    /// cos 2θ = Δ/(2Ω̄)
    pub cos_2theta: f64,
    /// sin 2θ = Ω/Ω̄
    pub sin_2theta: f64,
}

impl DressedFrame {
    fn new(omega: f64, delta: f64) -> Self {
        let omega_bar = omega.hypot(0.5 * delta);
        // The smaller of cos²θ, sin²θ is Ω²/(Ω̄(2Ω̄ + |Δ|)), which has no
        // cancellation; the larger one is its complement, so the pair sums
        // to one exactly.
        let small = omega * omega / (omega_bar * (2.0 * omega_bar + delta.abs()));
        let (cos2_theta, sin2_theta) = if delta >= 0.0 {
            (1.0 - small, small)
        } else {
            (small, 1.0 - small)
        };
        DressedFrame {
            omega_bar,
            cos2_theta,
            sin2_theta,
            cos_2theta: delta / (2.0 * omega_bar),
            sin_2theta: omega / omega_bar,
        }
    }

    pub fn cos4_theta(&self) -> f64 {
        self.cos2_theta * self.cos2_theta
    }

    pub fn sin4_theta(&self) -> f64 {
        self.sin2_theta * self.sin2_theta
    }

    /// sin²2θ
    pub fn sin2_2theta(&self) -> f64 {
        self.sin_2theta * self.sin_2theta
    }

    /// Splitting of the dressed doublet, 2Ω̄.
    pub fn splitting(&self) -> f64 {
        2.0 * self.omega_bar
    }
}

/// Parameters are validated at construction, so this cannot fail.
pub fn dressed_frame(p: &PhysicalParams) -> DressedFrame {
    p.dressed_frame()
}
