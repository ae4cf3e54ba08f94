//! One-dimensional parameter scans and the figure presets.
//!
//! Each grid point is evaluated on its own, so a failure at one point only
//! marks that row. Tables come back ordered by ascending `x`.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::{rate_set, steady_atom, steady_phonon, validity_report, SteadyPhonon, DEFAULT_MARGIN};
use crate::error::{Error, ErrorKind, Result};
use crate::lindblad::{build_liouvillian, steady_state, DEFAULT_N_MAX};
use crate::params::{PhysicalParams, ReferenceRate};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    Delta,
    /// γ₋/γ₊ at fixed γ₊; γ₀ follows a [`GammaZeroRule`].
    GammaRatio,
    Nu,
    Eta,
    Omega,
}

impl SweepVariable {
    pub const ALL: [SweepVariable; 5] = [
        SweepVariable::Delta,
        SweepVariable::GammaRatio,
        SweepVariable::Nu,
        SweepVariable::Eta,
        SweepVariable::Omega,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SweepVariable::Delta => "delta",
            SweepVariable::GammaRatio => "gamma_ratio",
            SweepVariable::Nu => "nu",
            SweepVariable::Eta => "eta",
            SweepVariable::Omega => "omega",
        }
    }
}

impl fmt::Display for SweepVariable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepVariable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SweepVariable::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown sweep variable `{s}`; expected one of delta, gamma_ratio, nu, eta, omega"
                ))
            })
    }
}

/// How γ₀ moves during a `gamma_ratio` sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GammaZeroRule {
    /// γ₀ = γ₋ at every point.
    EqualGammaMinus,
    /// γ₀ stays at its base value.
    Fixed,
}

impl FromStr for GammaZeroRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "equal_gamma_minus" => Ok(GammaZeroRule::EqualGammaMinus),
            "fixed" => Ok(GammaZeroRule::Fixed),
            other => Err(Error::Config(format!(
                "unknown gamma_zero_rule `{other}`; expected equal_gamma_minus or fixed"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Grid {
    /// `count` evenly spaced points from `min` to `max`, both included.
    Linear { min: f64, max: f64, count: usize },
    List(Vec<f64>),
}

impl Grid {
    /// Grid points in ascending order.
    pub fn points(&self) -> Result<Vec<f64>> {
        let mut pts = match *self {
            Grid::Linear { min, max, count } => {
                if !(min.is_finite() && max.is_finite()) {
                    return Err(Error::InvalidGrid(format!("bounds must be finite, got [{min}, {max}]")));
                }
                match count {
                    0 => return Err(Error::InvalidGrid("count must be at least 1".into())),
                    1 if min == max => vec![min],
                    1 => return Err(Error::InvalidGrid("a single point needs min == max".into())),
                    _ => (0..count)
                        .map(|i| {
                            let s = i as f64 / (count - 1) as f64;
                            min * (1.0 - s) + max * s
                        })
                        .collect(),
                }
            }
            Grid::List(ref v) => v.clone(),
        };
        if pts.is_empty() {
            return Err(Error::InvalidGrid("grid is empty".into()));
        }
        if let Some(bad) = pts.iter().find(|x| !x.is_finite()) {
            return Err(Error::InvalidGrid(format!("non-finite grid point {bad}")));
        }
        let increasing = pts.windows(2).all(|w| w[1] > w[0]);
        let decreasing = pts.windows(2).all(|w| w[1] < w[0]);
        if !(increasing || decreasing) {
            return Err(Error::InvalidGrid("grid must be strictly monotone".into()));
        }
        if !increasing {
            pts.reverse();
        }
        Ok(pts)
    }
}

/// Table columns, in output order. `x` always comes first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observable {
    NS,
    Rz,
    Sz,
    TwoSz,
    C,
    APlus,
    Valid,
    OracleN,
}

impl Observable {
    pub const ALL: [Observable; 8] = [
        Observable::NS,
        Observable::Rz,
        Observable::Sz,
        Observable::TwoSz,
        Observable::C,
        Observable::APlus,
        Observable::Valid,
        Observable::OracleN,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Observable::NS => "n_s",
            Observable::Rz => "rz",
            Observable::Sz => "sz",
            Observable::TwoSz => "two_sz",
            Observable::C => "c",
            Observable::APlus => "a_plus",
            Observable::Valid => "valid",
            Observable::OracleN => "oracle_n",
        }
    }
}

impl FromStr for Observable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Observable::ALL
            .into_iter()
            .find(|o| o.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown observable `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleSettings {
    pub n_max: usize,
}

impl Default for OracleSettings {
    fn default() -> Self {
        OracleSettings { n_max: DEFAULT_N_MAX }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub base: PhysicalParams,
    pub variable: SweepVariable,
    pub grid: Grid,
    /// Required for `gamma_ratio`, ignored otherwise.
    pub gamma_zero_rule: Option<GammaZeroRule>,
    /// Columns to record; the order is always that of [`Observable::ALL`].
    pub observables: Vec<Observable>,
    /// Also solve the master equation at every point.
    pub oracle: Option<OracleSettings>,
    /// Margin for the validity flag.
    pub margin: f64,
}

impl SweepSpec {
    pub fn new(base: PhysicalParams, variable: SweepVariable, grid: Grid) -> Self {
        SweepSpec {
            base,
            variable,
            grid,
            gamma_zero_rule: None,
            observables: Observable::ALL.to_vec(),
            oracle: None,
            margin: DEFAULT_MARGIN,
        }
    }

    pub fn validate(&self) -> Result<Vec<f64>> {
        if self.variable == SweepVariable::GammaRatio && self.gamma_zero_rule.is_none() {
            return Err(Error::Config(
                "a gamma_ratio sweep needs gamma_zero_rule (equal_gamma_minus or fixed)".into(),
            ));
        }
        if !(self.margin > 0.0 && self.margin.is_finite()) {
            return Err(Error::invalid("margin", format!("must be positive and finite, got {}", self.margin)));
        }
        self.grid.points()
    }

    /// Parameters at grid value `x`.
    pub fn params_at(&self, x: f64) -> Result<PhysicalParams> {
        let b = self.base;
        match self.variable {
            SweepVariable::Delta => b.with_delta(x),
            SweepVariable::Nu => b.with_nu(x),
            SweepVariable::Eta => b.with_eta(x),
            SweepVariable::Omega => b.with_omega(x),
            SweepVariable::GammaRatio => {
                let minus = x * b.gamma_plus();
                let zero = match self.gamma_zero_rule {
                    Some(GammaZeroRule::EqualGammaMinus) => minus,
                    _ => b.gamma_zero(),
                };
                b.with_gammas(b.gamma_plus(), minus, zero)
            }
        }
    }

    fn columns(&self) -> Vec<Observable> {
        let mut cols = self.observables.clone();
        cols.sort();
        cols.dedup();
        if self.oracle.is_none() {
            cols.retain(|&o| o != Observable::OracleN);
        }
        cols
    }
}

/// Why a row is incomplete.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RowError {
    pub kind: ErrorKind,
    pub tag: &'static str,
    pub message: String,
}

impl From<&Error> for RowError {
    fn from(e: &Error) -> Self {
        RowError {
            kind: e.kind(),
            tag: e.tag(),
            message: e.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub x: f64,
    pub n_s: Option<SteadyPhonon>,
    pub rz: Option<f64>,
    pub sz: Option<f64>,
    pub two_sz: Option<f64>,
    pub c: Option<f64>,
    pub a_plus: Option<f64>,
    pub valid: Option<bool>,
    pub oracle_n: Option<f64>,
    pub error: Option<RowError>,
}

impl SweepRow {
    fn empty(x: f64) -> Self {
        SweepRow {
            x,
            n_s: None,
            rz: None,
            sz: None,
            two_sz: None,
            c: None,
            a_plus: None,
            valid: None,
            oracle_n: None,
            error: None,
        }
    }

    pub fn is_heating(&self) -> bool {
        matches!(self.n_s, Some(SteadyPhonon::Heating))
    }

    pub fn finite_n(&self) -> Option<f64> {
        self.n_s.and_then(SteadyPhonon::finite)
    }
}

fn evaluate(spec: &SweepSpec, x: f64) -> SweepRow {
    let mut row = SweepRow::empty(x);
    let fail = |row: &mut SweepRow, e: &Error| {
        if row.error.is_none() {
            row.error = Some(e.into());
        }
    };
    let p = match spec.params_at(x) {
        Ok(p) => p,
        Err(e) => {
            fail(&mut row, &e);
            return row;
        }
    };
    match steady_atom(&p) {
        Ok(a) => {
            row.rz = Some(a.rz);
            row.sz = Some(a.sz);
            row.two_sz = Some(2.0 * a.sz);
        }
        Err(e) => fail(&mut row, &e),
    }
    match rate_set(&p) {
        Ok(r) => {
            row.c = Some(r.cooling_rate);
            row.a_plus = Some(r.a_rate_plus);
        }
        Err(e) => fail(&mut row, &e),
    }
    match steady_phonon(&p) {
        Ok(n) => row.n_s = Some(n),
        Err(e) => fail(&mut row, &e),
    }
    match validity_report(&p, spec.margin) {
        Ok(v) => row.valid = Some(v.valid),
        Err(e) => fail(&mut row, &e),
    }
    if let Some(o) = spec.oracle {
        let solved = build_liouvillian(&p, o.n_max).and_then(|l| steady_state(&l)).and_then(|s| {
            s.verify()?;
            Ok(s.observables.n)
        });
        match solved {
            Ok(n) => row.oracle_n = Some(n),
            Err(e) => fail(&mut row, &e),
        }
    }
    row
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepTable {
    /// Curve name, e.g. `nu=12`.
    pub label: String,
    pub spec: SweepSpec,
    pub columns: Vec<Observable>,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn error_rows(&self) -> impl Iterator<Item = &SweepRow> {
        self.rows.iter().filter(|r| r.error.is_some())
    }

    /// Row whose `x` is closest to `x`.
    pub fn nearest(&self, x: f64) -> Option<&SweepRow> {
        self.rows
            .iter()
            .min_by(|a, b| (a.x - x).abs().total_cmp(&(b.x - x).abs()))
    }

    /// Row with the smallest finite steady phonon number.
    pub fn argmin_n(&self) -> Option<&SweepRow> {
        self.rows
            .iter()
            .filter_map(|r| r.finite_n().map(|n| (r, n)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(r, _)| r)
    }

    /// One header line, then one line per row. Heating is written as the
    /// sentinel string, missing values as empty cells, and the trailing
    /// `error` column holds the error tag.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec![self.spec.variable.name().to_owned()];
        header.extend(self.columns.iter().map(|c| c.name().to_owned()));
        header.push("error".into());
        w.write_record(&header).map_err(csv_err)?;
        for row in &self.rows {
            let mut rec = vec![row.x.to_string()];
            for col in &self.columns {
                rec.push(cell(row, *col));
            }
            rec.push(row.error.as_ref().map(|e| e.tag.to_owned()).unwrap_or_default());
            w.write_record(&rec).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Rows as JSON objects restricted to the recorded columns.
    pub fn rows_json(&self) -> serde_json::Value {
        use serde_json::{json, Map, Value};
        let rows = self
            .rows
            .iter()
            .map(|row| {
                let full = serde_json::to_value(row).expect("rows serialize");
                let mut obj = Map::new();
                obj.insert("x".into(), json!(row.x));
                for col in &self.columns {
                    obj.insert(col.name().into(), full[col.name()].clone());
                }
                obj.insert("error".into(), full["error"].clone());
                Value::Object(obj)
            })
            .collect();
        Value::Array(rows)
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

fn opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn cell(row: &SweepRow, col: Observable) -> String {
    match col {
        Observable::NS => match row.n_s {
            Some(SteadyPhonon::Finite(n)) => n.to_string(),
            Some(SteadyPhonon::Heating) => SteadyPhonon::HEATING_SENTINEL.to_owned(),
            None => String::new(),
        },
        Observable::Rz => opt(row.rz),
        Observable::Sz => opt(row.sz),
        Observable::TwoSz => opt(row.two_sz),
        Observable::C => opt(row.c),
        Observable::APlus => opt(row.a_plus),
        Observable::Valid => row.valid.map(|v| v.to_string()).unwrap_or_default(),
        Observable::OracleN => opt(row.oracle_n),
    }
}

/// Evaluate every grid point in parallel.
pub fn run_sweep(label: impl Into<String>, spec: &SweepSpec) -> Result<SweepTable> {
    let xs = spec.validate()?;
    let rows = xs.par_iter().map(|&x| evaluate(spec, x)).collect();
    Ok(table(label.into(), spec, rows))
}

/// Same as [`run_sweep`] on the calling thread.
pub fn run_sweep_serial(label: impl Into<String>, spec: &SweepSpec) -> Result<SweepTable> {
    let xs = spec.validate()?;
    let rows = xs.iter().map(|&x| evaluate(spec, x)).collect();
    Ok(table(label.into(), spec, rows))
}

fn table(label: String, spec: &SweepSpec, rows: Vec<SweepRow>) -> SweepTable {
    SweepTable {
        label,
        columns: spec.columns(),
        spec: spec.clone(),
        rows,
    }
}

/// A named family of curves.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
    pub reference_rate: ReferenceRate,
    /// `(label, spec)` per curve.
    pub curves: Vec<(String, SweepSpec)>,
}

/// Trap frequencies shared by every preset.
pub const PRESET_NUS: [f64; 3] = [2.0, 6.0, 12.0];
const PRESET_OMEGA: f64 = 5.0;
const PRESET_ETA: f64 = 0.1;
const DELTA_GRID: Grid = Grid::Linear { min: -10.0, max: 10.0, count: 401 };
const RATIO_GRID: Grid = Grid::Linear { min: 0.01, max: 1.5, count: 300 };

pub const PRESET_NAMES: [&str; 4] = ["fig1", "fig1e", "fig2", "fig3"];

fn curves(
    gammas: (f64, f64, f64),
    delta: f64,
    variable: SweepVariable,
    grid: Grid,
    rule: Option<GammaZeroRule>,
) -> Vec<(String, SweepSpec)> {
    PRESET_NUS
        .iter()
        .map(|&nu| {
            let base = PhysicalParams::new(PRESET_OMEGA, delta, nu, PRESET_ETA, gammas.0, gammas.1, gammas.2)
                .expect("preset parameters are valid");
            let mut spec = SweepSpec::new(base, variable, grid.clone());
            spec.gamma_zero_rule = rule;
            (format!("nu={nu}"), spec)
        })
        .collect()
}

pub fn preset(name: &str) -> Result<Preset> {
    let p = match name {
        "fig1" => Preset {
            name: "fig1",
            description: "free space, gamma_plus = gamma_minus = gamma_zero = gamma; detuning scan",
            reference_rate: ReferenceRate::Gamma,
            curves: curves((1.0, 1.0, 1.0), 0.0, SweepVariable::Delta, DELTA_GRID, None),
        },
        "fig1e" => Preset {
            name: "fig1e",
            description: "structured reservoir, gamma_minus/gamma_plus = gamma_zero/gamma_plus = 0.2; detuning scan",
            reference_rate: ReferenceRate::GammaPlus,
            curves: curves((1.0, 0.2, 0.2), 0.0, SweepVariable::Delta, DELTA_GRID, None),
        },
        "fig2" => Preset {
            name: "fig2",
            description: "delta = 0, gamma_zero = gamma_minus; scan of gamma_minus/gamma_plus",
            reference_rate: ReferenceRate::GammaPlus,
            curves: curves(
                (1.0, 1.0, 1.0),
                0.0,
                SweepVariable::GammaRatio,
                RATIO_GRID,
                Some(GammaZeroRule::EqualGammaMinus),
            ),
        },
        "fig3" => Preset {
            name: "fig3",
            description: "delta/(2 omega) = -0.5, gamma_zero = gamma_minus; scan of gamma_minus/gamma_plus",
            reference_rate: ReferenceRate::GammaPlus,
            curves: curves(
                (1.0, 1.0, 1.0),
                -PRESET_OMEGA,
                SweepVariable::GammaRatio,
                RATIO_GRID,
                Some(GammaZeroRule::EqualGammaMinus),
            ),
        },
        other => {
            return Err(Error::UnknownPreset {
                name: other.to_owned(),
                available: PRESET_NAMES.iter().map(|s| s.to_string()).collect(),
            })
        }
    };
    Ok(p)
}

pub fn list_presets() -> Vec<Preset> {
    PRESET_NAMES.iter().map(|n| preset(n).expect("known preset")).collect()
}

impl Preset {
    /// Run every curve; only spec errors abort.
    pub fn run(&self) -> Result<Vec<SweepTable>> {
        self.curves.iter().map(|(label, spec)| run_sweep(label.clone(), spec)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_grid_hits_both_ends() {
        let pts = DELTA_GRID.points().unwrap();
        assert_eq!(pts.len(), 401);
        assert_eq!(pts[0], -10.0);
        assert_eq!(pts[400], 10.0);
        assert_eq!(pts[200], 0.0);
    }

    #[test]
    fn grid_validation() {
        assert!(Grid::List(vec![]).points().is_err());
        assert!(Grid::List(vec![1.0, 1.0]).points().is_err());
        assert!(Grid::List(vec![1.0, 3.0, 2.0]).points().is_err());
        assert!(Grid::List(vec![f64::NAN]).points().is_err());
        assert!(Grid::Linear { min: 0.0, max: 1.0, count: 0 }.points().is_err());
        assert!(Grid::Linear { min: 0.0, max: 1.0, count: 1 }.points().is_err());
        assert_eq!(Grid::Linear { min: 2.0, max: 2.0, count: 1 }.points().unwrap(), vec![2.0]);
        assert_eq!(Grid::List(vec![3.0, 2.0, 1.0]).points().unwrap(), vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn ratio_sweep_requires_rule() {
        let base = PhysicalParams::free_space(5.0, 0.0, 2.0, 0.1, 1.0).unwrap();
        let spec = SweepSpec::new(base, SweepVariable::GammaRatio, RATIO_GRID);
        assert!(matches!(run_sweep("x", &spec), Err(Error::Config(_))));
    }

    #[test]
    fn ratio_rule_ties_gamma_zero() {
        let base = PhysicalParams::new(5.0, 0.0, 2.0, 0.1, 1.0, 1.0, 0.7).unwrap();
        let mut spec = SweepSpec::new(base, SweepVariable::GammaRatio, Grid::List(vec![0.2]));
        spec.gamma_zero_rule = Some(GammaZeroRule::EqualGammaMinus);
        let p = spec.params_at(0.2).unwrap();
        assert_eq!((p.gamma_minus(), p.gamma_zero()), (0.2, 0.2));
        spec.gamma_zero_rule = Some(GammaZeroRule::Fixed);
        assert_eq!(spec.params_at(0.2).unwrap().gamma_zero(), 0.7);
    }

    #[test]
    fn row_errors_do_not_abort() {
        let base = PhysicalParams::free_space(5.0, 1.0, 2.0, 0.1, 1.0).unwrap();
        let spec = SweepSpec::new(base, SweepVariable::Eta, Grid::List(vec![-0.1, 0.0, 0.1]));
        let t = run_sweep("eta", &spec).unwrap();
        assert_eq!(t.rows.len(), 3);
        assert_eq!(t.rows[0].error.as_ref().unwrap().tag, "invalid-params");
        assert_eq!(t.rows[1].error.as_ref().unwrap().tag, "zero-coupling");
        assert!(t.rows[1].rz.is_some() && t.rows[1].n_s.is_none());
        assert!(t.rows[2].error.is_none());
        assert_eq!(t.error_rows().count(), 2);
    }

    #[test]
    fn parallel_equals_serial() {
        for p in list_presets() {
            for (label, spec) in &p.curves {
                assert_eq!(run_sweep(label.clone(), spec).unwrap(), run_sweep_serial(label.clone(), spec).unwrap());
            }
        }
    }

    #[test]
    fn preset_parameterization() {
        let f1 = preset("fig1").unwrap();
        assert_eq!(f1.curves.len(), 3);
        for (_, s) in &f1.curves {
            assert!(s.base.is_free_space());
            assert_eq!((s.base.omega(), s.base.eta()), (5.0, 0.1));
        }
        let f1e = preset("fig1e").unwrap();
        assert_eq!(f1e.reference_rate, ReferenceRate::GammaPlus);
        let b = f1e.curves[0].1.base;
        assert_eq!((b.gamma_minus() / b.gamma_plus(), b.gamma_zero() / b.gamma_plus()), (0.2, 0.2));
        let f3 = preset("fig3").unwrap();
        let b = f3.curves[0].1.base;
        assert_eq!(b.delta() / (2.0 * b.omega()), -0.5);
        match preset("fig9") {
            Err(Error::UnknownPreset { available, .. }) => assert_eq!(available.len(), 4),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn fig1_negative_detuning_heats() {
        for t in preset("fig1").unwrap().run().unwrap() {
            for r in &t.rows {
                if r.x < 0.0 {
                    assert!(r.is_heating(), "{} x={}", t.label, r.x);
                }
            }
        }
    }

    #[test]
    fn fig1e_cools_at_negative_detuning() {
        let tables = preset("fig1e").unwrap().run().unwrap();
        assert!(tables.iter().any(|t| t.rows.iter().any(|r| r.x < 0.0 && r.finite_n().is_some())));
    }

    #[test]
    fn csv_layout() {
        let base = PhysicalParams::free_space(5.0, 0.0, 2.0, 0.1, 1.0).unwrap();
        let mut spec = SweepSpec::new(base, SweepVariable::Delta, Grid::List(vec![-1.0, 1.0]));
        spec.observables = vec![Observable::C, Observable::NS];
        let t = run_sweep("d", &spec).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "delta,n_s,c,error");
        assert!(lines[1].starts_with("-1,heating,-"));
        assert_eq!(lines.len(), 3);
        let json = t.rows_json();
        assert_eq!(json[0]["n_s"], "heating");
        assert!(json[0].get("rz").is_none());
    }

    #[test]
    fn oracle_column() {
        let base = PhysicalParams::free_space(5.0, 2.0 * 11f64.sqrt(), 12.0, 0.1, 1.0).unwrap();
        let mut spec = SweepSpec::new(base, SweepVariable::Delta, Grid::List(vec![2.0 * 11f64.sqrt()]));
        spec.oracle = Some(OracleSettings { n_max: 8 });
        let t = run_sweep("res", &spec).unwrap();
        let row = &t.rows[0];
        let rel = (row.oracle_n.unwrap() - row.finite_n().unwrap()).abs() / row.finite_n().unwrap();
        assert!(rel < 0.15, "{row:?}");
        assert!(t.columns.contains(&Observable::OracleN));
    }
}
