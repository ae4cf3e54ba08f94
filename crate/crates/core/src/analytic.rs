//! Closed-form cooling model.
//!
//! After the atomic degrees of freedom are eliminated, the vibrational mode
//! obeys a master equation with two complex coefficients `A₋*`, `A₊*`. Its
//! mean phonon number relaxes exponentially at the cooling rate
//! `C = A⁽⁻⁾ − A⁽⁺⁾` toward `A⁽⁺⁾ / C`. Everything here is a pure function of
//! [`PhysicalParams`].

use num_complex::Complex64;
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::params::{DressedFrame, PhysicalParams};

/// Second moment of the dipole emission pattern `w(x) = 3(1 + x²)/4`,
/// averaged as `½∫₋₁¹ x² w(x) dx`.
pub const RECOIL_SECOND_MOMENT: f64 = 0.4;

/// Relative tolerance below which the two dressed populations count as equal.
pub const POPULATION_TIE_RTOL: f64 = 1e-14;

/// Default factor standing in for "much greater than".
pub const DEFAULT_MARGIN: f64 = 10.0;

/// Steady dressed populations and the resulting inversions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteadyAtom {
    /// Lower dressed level population ⟨R₁₁⟩ₛ.
    pub r11: f64,
    /// Upper dressed level population ⟨R₂₂⟩ₛ.
    pub r22: f64,
    /// Dressed inversion ⟨R_z⟩ₛ = r22 − r11.
    pub rz: f64,
    /// Bare-state inversion ⟨S_z⟩ₛ = cos 2θ · rz / 2.
    pub sz: f64,
}

/// Decay and coupling coefficients of the reduced vibrational model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateSet {
    /// Coherence decay Γ⊥.
    pub gamma_perp: f64,
    /// Inversion decay γs.
    pub gamma_s: f64,
    /// Recoil diffusion Γ₀.
    pub gamma_0_eff: f64,
    /// A₋* (as printed, i.e. already conjugated).
    pub a_minus: Complex64,
    /// A₊*
    pub a_plus: Complex64,
    /// A⁽⁻⁾ = 2 Re A₋
    pub a_rate_minus: f64,
    /// A⁽⁺⁾ = 2 Re A₊
    pub a_rate_plus: f64,
    /// C = A⁽⁻⁾ − A⁽⁺⁾
    pub cooling_rate: f64,
}

/// Stationary mean phonon number, or the absence of one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SteadyPhonon {
    Finite(f64),
    /// The atom sits in the upper dressed level (or neither); the phonon
    /// number grows without bound.
    Heating,
}

impl SteadyPhonon {
    /// Text written in place of a number for heating rows.
    pub const HEATING_SENTINEL: &'static str = "heating";

    pub fn finite(self) -> Option<f64> {
        match self {
            SteadyPhonon::Finite(n) => Some(n),
            SteadyPhonon::Heating => None,
        }
    }

    pub fn is_heating(self) -> bool {
        matches!(self, SteadyPhonon::Heating)
    }
}

impl Serialize for SteadyPhonon {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            SteadyPhonon::Finite(n) => s.serialize_f64(*n),
            SteadyPhonon::Heating => s.serialize_str(Self::HEATING_SENTINEL),
        }
    }
}

struct Dressed {
    frame: DressedFrame,
    /// γ₊ cos⁴θ, the |2̄⟩ → |1̄⟩ rate
    down: f64,
    /// γ₋ sin⁴θ, the |1̄⟩ → |2̄⟩ rate
    up: f64,
}

fn dressed(p: &PhysicalParams) -> Dressed {
    let frame = p.dressed_frame();
    Dressed {
        down: p.gamma_plus() * frame.cos4_theta(),
        up: p.gamma_minus() * frame.sin4_theta(),
        frame,
    }
}

pub fn steady_atom(p: &PhysicalParams) -> Result<SteadyAtom> {
    let d = dressed(p);
    let total = d.down + d.up;
    if !(total > 0.0) {
        return Err(Error::DegenerateRates);
    }
    let r11 = d.down / total;
    let r22 = d.up / total;
    let rz = (d.up - d.down) / total;
    Ok(SteadyAtom {
        r11,
        r22,
        rz,
        sz: 0.5 * d.frame.cos_2theta * rz,
    })
}

/// Detuning of the red vibrational sideband from the dressed splitting, 2Ω̄ − ν.
pub fn sideband_detuning(p: &PhysicalParams) -> f64 {
    p.dressed_frame().splitting() - p.nu()
}

pub fn rate_set(p: &PhysicalParams) -> Result<RateSet> {
    let d = dressed(p);
    let atom = steady_atom(p)?;
    let gamma_s = d.down + d.up;
    let dephasing = p.gamma_zero() * d.frame.sin2_2theta();
    let gamma_perp = dephasing + gamma_s;
    let gamma_0_eff = RECOIL_SECOND_MOMENT
        * p.eta()
        * p.eta()
        * (d.up * atom.r11 + d.down * atom.r22 + 0.25 * dephasing);

    let g2 = p.coupling().powi(2);
    let detuning = sideband_detuning(p);
    let a_minus = gamma_0_eff + g2 * atom.r11 / Complex64::new(gamma_perp, detuning);
    let a_plus = gamma_0_eff + g2 * atom.r22 / Complex64::new(gamma_perp, -detuning);
    let a_rate_minus = 2.0 * a_minus.re;
    let a_rate_plus = 2.0 * a_plus.re;
    Ok(RateSet {
        gamma_perp,
        gamma_s,
        gamma_0_eff,
        a_minus,
        a_plus,
        a_rate_minus,
        a_rate_plus,
        cooling_rate: a_rate_minus - a_rate_plus,
    })
}

/// Net decay rate of ⟨b†b⟩, evaluated from its closed form
/// `−2(ηΩ)²Γ⊥⟨R_z⟩ₛ / (Γ⊥² + (2Ω̄ − ν)²)`.
pub fn cooling_rate(p: &PhysicalParams) -> Result<f64> {
    let d = dressed(p);
    let atom = steady_atom(p)?;
    let gamma_perp = p.gamma_zero() * d.frame.sin2_2theta() + d.down + d.up;
    let detuning = sideband_detuning(p);
    let g2 = p.coupling().powi(2);
    Ok(-2.0 * g2 * gamma_perp * atom.rz / (gamma_perp * gamma_perp + detuning * detuning))
}

/// Whether the steady populations are tied or inverted (no cooling fixed point).
pub fn is_heating(atom: &SteadyAtom) -> bool {
    let diff = atom.r11 - atom.r22;
    diff <= POPULATION_TIE_RTOL * atom.r11.max(atom.r22)
}

pub fn steady_phonon(p: &PhysicalParams) -> Result<SteadyPhonon> {
    if p.coupling() == 0.0 {
        return Err(Error::ZeroCoupling);
    }
    let atom = steady_atom(p)?;
    if is_heating(&atom) {
        return Ok(SteadyPhonon::Heating);
    }
    let rates = rate_set(p)?;
    let detuning = sideband_detuning(p);
    // −rz is r11 − r22 without the cancellation.
    let pop_gap = -atom.rz;
    let g2 = p.coupling().powi(2);
    let gp = rates.gamma_perp;
    let n = atom.r22 / pop_gap
        + rates.gamma_0_eff * (gp * gp + detuning * detuning) / (g2 * gp * pop_gap);
    Ok(SteadyPhonon::Finite(n))
}

/// Initial atomic state in the dressed basis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DressedInit {
    pub rz0: f64,
    pub rplus0: Complex64,
}

/// Initial atomic state in the bare basis; ⟨S⁻⟩(0) is the conjugate of ⟨S⁺⟩(0).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BareInit {
    pub sz0: f64,
    pub splus0: Complex64,
}

impl BareInit {
    /// Rotate into the dressed basis.
    ///
    /// `R_z = 2 cos2θ S_z + sin2θ (S⁺ + S⁻)` and
    /// `R⁺ = cos²θ S⁺ − sin²θ S⁻ − sin2θ S_z`, which follow from
    /// `|2⟩ = cosθ|2̄⟩ − sinθ|1̄⟩`, `|1⟩ = sinθ|2̄⟩ + cosθ|1̄⟩` with
    /// `S_z = (|2⟩⟨2| − |1⟩⟨1|)/2` and `R_z = |2̄⟩⟨2̄| − |1̄⟩⟨1̄|`.
    pub fn to_dressed(self, frame: &DressedFrame) -> DressedInit {
        let sminus0 = self.splus0.conj();
        DressedInit {
            rz0: 2.0 * frame.cos_2theta * self.sz0 + frame.sin_2theta * 2.0 * self.splus0.re,
            rplus0: frame.cos2_theta * self.splus0
                - frame.sin2_theta * sminus0
                - frame.sin_2theta * self.sz0,
        }
    }
}

/// Atom + phonon initial condition for [`trajectory`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryInit {
    pub atom: DressedInit,
    pub n0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub t: f64,
    pub rz: f64,
    pub rplus: Complex64,
    pub n: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub points: Vec<TrajectoryPoint>,
    /// Phonon number fixed point `A⁽⁺⁾/C`; `None` when C = 0.
    pub n_fixed_point: Option<f64>,
    /// True when C < 0 and the phonon number grows.
    pub growing: bool,
}

/// Check that a time grid is non-negative, finite and strictly increasing.
pub fn check_time_grid(times: &[f64]) -> Result<()> {
    for (i, &t) in times.iter().enumerate() {
        if !t.is_finite() || t < 0.0 {
            return Err(Error::InvalidGrid(format!("time[{i}] = {t} is negative or not finite")));
        }
        if i > 0 && t <= times[i - 1] {
            return Err(Error::InvalidGrid(format!(
                "times must be strictly increasing (time[{}] = {} >= time[{i}] = {t})",
                i - 1,
                times[i - 1]
            )));
        }
    }
    Ok(())
}

/// Evenly spaced grid `[0, t_end]` with `samples` points.
pub fn uniform_times(t_end: f64, samples: usize) -> Vec<f64> {
    match samples {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..samples)
            .map(|i| t_end * i as f64 / (samples - 1) as f64)
            .collect(),
    }
}

/// `n(t) = n0 e^{−Ct} + A⁽⁺⁾ (1 − e^{−Ct}) / C`, continuous through C = 0.
pub fn phonon_number_at(n0: f64, cooling_rate: f64, a_rate_plus: f64, t: f64) -> f64 {
    let x = cooling_rate * t;
    if x == 0.0 {
        return n0 + a_rate_plus * t;
    }
    // (1 − e^{−x})/x · t, stable for small x
    let relax = -(-x).exp_m1() / cooling_rate;
    n0 * (-x).exp() + a_rate_plus * relax
}

/// Closed-form time evolution of ⟨R_z⟩, ⟨R⁺⟩ and ⟨b†b⟩.
pub fn trajectory(p: &PhysicalParams, init: TrajectoryInit, times: &[f64]) -> Result<Trajectory> {
    check_time_grid(times)?;
    let atom = steady_atom(p)?;
    let rates = rate_set(p)?;
    let c = rates.cooling_rate;
    let points = times
        .iter()
        .map(|&t| TrajectoryPoint {
            t,
            rz: (init.atom.rz0 - atom.rz) * (-2.0 * rates.gamma_s * t).exp() + atom.rz,
            rplus: init.atom.rplus0 * (-rates.gamma_perp * t).exp(),
            n: phonon_number_at(init.n0, c, rates.a_rate_plus, t),
        })
        .collect();
    Ok(Trajectory {
        points,
        n_fixed_point: (c != 0.0).then(|| rates.a_rate_plus / c),
        growing: c < 0.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    /// `lhs < rhs`
    #[serde(rename = "<")]
    Less,
    /// `lhs ≪ rhs`, i.e. `rhs / lhs ≥ margin`
    #[serde(rename = "<<")]
    MuchLess,
}

/// One inequality of the validity regime.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidityCheck {
    pub name: String,
    pub lhs_label: String,
    pub lhs: f64,
    pub relation: Relation,
    pub rhs_label: String,
    pub rhs: f64,
    /// rhs / lhs; `None` when lhs is zero.
    pub ratio: Option<f64>,
    pub satisfied: bool,
}

impl ValidityCheck {
    fn new(
        name: &str,
        (lhs_label, lhs): (&str, f64),
        relation: Relation,
        (rhs_label, rhs): (&str, f64),
        margin: f64,
    ) -> Self {
        let ratio = (lhs != 0.0).then(|| rhs / lhs);
        let satisfied = match relation {
            Relation::Less => lhs < rhs,
            Relation::MuchLess => match ratio {
                Some(r) => r >= margin,
                None => rhs >= 0.0,
            },
        };
        ValidityCheck {
            name: name.to_owned(),
            lhs_label: lhs_label.to_owned(),
            lhs,
            relation,
            rhs_label: rhs_label.to_owned(),
            rhs,
            ratio,
            satisfied,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidityReport {
    pub margin: f64,
    pub checks: Vec<ValidityCheck>,
    /// Conjunction of every check.
    pub valid: bool,
    /// The closed-form trajectories only hold for t ≫ 1/(2Ω̄); this is
    /// `margin / (2Ω̄)`.
    pub min_time: f64,
}

impl ValidityReport {
    pub fn failing(&self) -> impl Iterator<Item = &ValidityCheck> {
        self.checks.iter().filter(|c| !c.satisfied)
    }
}

/// Regime diagnostics for the closed-form model.
///
/// The checks are: decay rates well below the dressed splitting (secular
/// approximation), vibronic coupling below the largest decay rate, the
/// cooling rate well below both atomic relaxation rates (adiabatic
/// elimination), and the red sideband dominating the blue one (only the
/// resonant Lorentzian is kept in `A₋*`, `A₊*`), both as bare Lorentzians
/// and weighted by the populations that drive them.
pub fn validity_report(p: &PhysicalParams, margin: f64) -> Result<ValidityReport> {
    if !(margin > 0.0 && margin.is_finite()) {
        return Err(Error::invalid("margin", format!("must be positive and finite, got {margin}")));
    }
    let frame = p.dressed_frame();
    let rates = rate_set(p)?;
    let split = frame.splitting();
    let gp2 = rates.gamma_perp.powi(2);
    let c = rates.cooling_rate.abs();

    let checks = vec![
        ValidityCheck::new(
            "secular",
            ("max(gamma_plus, gamma_minus, gamma_zero)", p.max_gamma()),
            Relation::MuchLess,
            ("2*omega_bar", split),
            margin,
        ),
        ValidityCheck::new(
            "weak_coupling",
            ("eta*omega", p.coupling()),
            Relation::Less,
            ("max(gamma_plus, gamma_minus, gamma_zero)", p.max_gamma()),
            margin,
        ),
        ValidityCheck::new(
            "slow_cooling_vs_inversion",
            ("|C|", c),
            Relation::MuchLess,
            ("2*gamma_s", 2.0 * rates.gamma_s),
            margin,
        ),
        ValidityCheck::new(
            "slow_cooling_vs_coherence",
            ("|C|", c),
            Relation::MuchLess,
            ("gamma_perp", rates.gamma_perp),
            margin,
        ),
        ValidityCheck::new(
            "off_resonant_heating",
            ("2*(eta*omega)^2*r11*gamma_perp/(gamma_perp^2 + (2*omega_bar + nu)^2)", off_resonant_heating(p)?),
            Relation::MuchLess,
            ("A_plus", rates.a_rate_plus),
            margin,
        ),
        ValidityCheck::new(
            "resolved_sideband",
            ("gamma_perp^2 + (2*omega_bar - nu)^2", gp2 + (split - p.nu()).powi(2)),
            Relation::MuchLess,
            ("gamma_perp^2 + (2*omega_bar + nu)^2", gp2 + (split + p.nu()).powi(2)),
            margin,
        ),
    ];
    let valid = checks.iter().all(|c| c.satisfied);
    Ok(ValidityReport {
        margin,
        checks,
        valid,
        min_time: margin / split,
    })
}

/// Heating rate of the blue-sideband process `R⁺b†`, which the closed form
/// drops. It is weighted by the lower dressed population, so it can rival
/// the kept heating `A⁽⁺⁾` when `r22` is small even though its Lorentzian
/// is far off resonance.
pub fn off_resonant_heating(p: &PhysicalParams) -> Result<f64> {
    let atom = steady_atom(p)?;
    let rates = rate_set(p)?;
    let gp = rates.gamma_perp;
    let detuning = p.dressed_frame().splitting() + p.nu();
    Ok(2.0 * p.coupling().powi(2) * atom.r11 * gp / (gp * gp + detuning * detuning))
}

/// Everything the closed form says about one parameter point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SteadySummary {
    pub frame: DressedFrame,
    pub atom: SteadyAtom,
    pub rates: RateSet,
    pub cooling_rate: f64,
    pub n_s: SteadyPhonon,
    pub validity: ValidityReport,
}

pub fn steady_summary(p: &PhysicalParams, margin: f64) -> Result<SteadySummary> {
    Ok(SteadySummary {
        frame: p.dressed_frame(),
        atom: steady_atom(p)?,
        rates: rate_set(p)?,
        cooling_rate: cooling_rate(p)?,
        n_s: steady_phonon(p)?,
        validity: validity_report(p, margin)?,
    })
}
