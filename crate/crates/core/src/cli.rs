//! The `photocool` command-line front end.
//!
//! Exit codes: 0 success, 1 invalid input, 2 the model is undefined at the
//! requested point, 3 the numerical oracle failed or disagreed.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde_json::{json, Value};

use crate::analytic::{
    steady_summary, trajectory, uniform_times, BareInit, DressedInit, SteadyPhonon, TrajectoryInit, ValidityReport,
    DEFAULT_MARGIN,
};
use crate::config::{FileConfig, Format};
use crate::error::{Error, Result};
use crate::lindblad::{
    build_liouvillian_with_cap, reduced_phonon_evolve, steady_state, steady_state_converged, ConvergenceOptions,
    DEFAULT_DIM_CAP, DEFAULT_N_MAX,
};
use crate::params::{PhysicalParams, ReferenceRate};
use crate::sweep::{
    list_presets, preset, run_sweep, Grid, GammaZeroRule, Observable, OracleSettings, Preset, SweepSpec, SweepTable,
    SweepVariable,
};

const DEFAULT_T_END: f64 = 100.0;
const DEFAULT_SAMPLES: usize = 201;
const DEFAULT_N0: f64 = 5.0;
const DEFAULT_THRESHOLD: f64 = 0.15;
const DEFAULT_ATOM_THRESHOLD: f64 = 0.05;

#[derive(Parser, Debug)]
#[command(name = "photocool", version, about = "Sideband cooling of a trapped ion in a structured photonic reservoir")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Closed-form steady state: populations, rates, phonon number, validity.
    Steady {
        #[command(flatten)]
        io: IoArgs,
        #[command(flatten)]
        params: ParamArgs,
    },
    /// Closed-form time evolution, optionally with the numerically
    /// integrated phonon equation alongside.
    Trajectory {
        #[command(flatten)]
        io: IoArgs,
        #[command(flatten)]
        params: ParamArgs,
        #[command(flatten)]
        traj: TrajectoryArgs,
    },
    /// Parameter scan, either a named preset or a custom grid.
    Sweep {
        #[command(flatten)]
        io: IoArgs,
        #[command(flatten)]
        params: ParamArgs,
        #[command(flatten)]
        sweep: SweepArgs,
    },
    /// Compare the master-equation steady state with the closed form.
    Validate {
        #[command(flatten)]
        io: IoArgs,
        #[command(flatten)]
        params: ParamArgs,
        #[command(flatten)]
        oracle: OracleArgs,
    },
    /// List the sweep presets, or show one.
    Presets {
        name: Option<String>,
    },
}

#[derive(Args, Debug, Default)]
struct IoArgs {
    /// TOML config file, or an earlier JSON/CSV output to re-run.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Config section laid over the top-level keys.
    #[arg(long)]
    section: Option<String>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Output file (default: standard output).
    #[arg(long, short)]
    output: Option<String>,
}

#[derive(Args, Debug, Default)]
struct ParamArgs {
    #[arg(long, allow_hyphen_values = true)]
    omega: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    delta: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    nu: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    eta: Option<f64>,
    /// Set all three rates at once (free space).
    #[arg(long, allow_hyphen_values = true)]
    gamma: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    gamma_plus: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    gamma_minus: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    gamma_zero: Option<f64>,
    #[arg(long, value_parser = parse_reference_rate)]
    reference_rate: Option<ReferenceRate>,
    /// Factor required by the `<<` validity checks.
    #[arg(long, allow_hyphen_values = true)]
    margin: Option<f64>,
}

fn parse_reference_rate(s: &str) -> std::result::Result<ReferenceRate, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Args, Debug, Default)]
struct TrajectoryArgs {
    #[arg(long, allow_hyphen_values = true)]
    t_end: Option<f64>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    n0: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    rz0: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    rplus0_re: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    rplus0_im: Option<f64>,
    /// Bare-basis initial inversion; replaces rz0/rplus0.
    #[arg(long, allow_hyphen_values = true)]
    sz0: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    splus0_re: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    splus0_im: Option<f64>,
    /// Add an `n_ode` column from integrating the phonon rate equation.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    ode: Option<bool>,
}

#[derive(Args, Debug, Default)]
struct OracleArgs {
    #[arg(long)]
    n_max: Option<usize>,
    #[arg(long)]
    dim_cap: Option<usize>,
    /// Raise n_max until the phonon number settles.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    converge: Option<bool>,
    #[arg(long)]
    step: Option<usize>,
    #[arg(long)]
    rel_tol: Option<f64>,
    /// Relative tolerance on the phonon number.
    #[arg(long)]
    threshold: Option<f64>,
    /// Relative tolerance on the dressed populations.
    #[arg(long)]
    atom_threshold: Option<f64>,
}

#[derive(Args, Debug, Default)]
struct SweepArgs {
    #[arg(long)]
    preset: Option<String>,
    /// delta, gamma_ratio, nu, eta or omega.
    #[arg(long)]
    variable: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    max: Option<f64>,
    #[arg(long)]
    count: Option<usize>,
    /// Explicit grid, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    values: Option<Vec<f64>>,
    /// equal_gamma_minus or fixed.
    #[arg(long)]
    gamma_zero_rule: Option<String>,
    /// Columns to record, comma separated.
    #[arg(long, value_delimiter = ',')]
    observables: Option<Vec<String>>,
    /// Also solve the master equation at every point.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    oracle: Option<bool>,
    #[arg(long)]
    n_max: Option<usize>,
    /// Directory for CSV files (default: current directory).
    #[arg(long)]
    out_dir: Option<String>,
}

impl IoArgs {
    fn into_config(self, command: &str, flags: FileConfig) -> Result<FileConfig> {
        if self.section.is_some() && self.config.is_none() {
            return Err(Error::Config("--section needs --config".into()));
        }
        let mut cfg = match &self.config {
            Some(path) => FileConfig::load(path, self.section.as_deref())?,
            None => FileConfig::default(),
        };
        if let Some(c) = &cfg.command {
            if c != command {
                return Err(Error::Config(format!("config was written by `{c}`, not `{command}`")));
            }
        }
        cfg.overlay(&flags);
        cfg.overlay(&FileConfig {
            format: self.format,
            output: self.output,
            ..Default::default()
        });
        Ok(cfg)
    }
}

impl ParamArgs {
    fn apply(&self, c: &mut FileConfig) {
        let src = FileConfig {
            omega: self.omega,
            delta: self.delta,
            nu: self.nu,
            eta: self.eta,
            gamma: self.gamma,
            gamma_plus: self.gamma_plus,
            gamma_minus: self.gamma_minus,
            gamma_zero: self.gamma_zero,
            reference_rate: self.reference_rate,
            margin: self.margin,
            ..Default::default()
        };
        // explicit rate flags override a `gamma` from the config file
        let explicit_rates = self.gamma_plus.is_some() || self.gamma_minus.is_some() || self.gamma_zero.is_some();
        if explicit_rates && self.gamma.is_none() && c.gamma.is_some() {
            let g = c.gamma.take();
            c.gamma_plus = c.gamma_plus.or(g);
            c.gamma_minus = c.gamma_minus.or(g);
            c.gamma_zero = c.gamma_zero.or(g);
        }
        if self.gamma.is_some() {
            c.gamma_plus = None;
            c.gamma_minus = None;
            c.gamma_zero = None;
        }
        c.overlay(&src);
    }
}

/// Parse arguments and run; returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = if code == 0 {
                write!(out, "{}", e.render())
            } else {
                write!(err, "{}", e.render())
            };
            return code;
        }
    };
    match dispatch(cli.command, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error [{}]: {e}", e.tag());
            e.exit_code()
        }
    }
}

pub fn main() -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock())
}

fn dispatch(cmd: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    match cmd {
        Command::Steady { io, params } => {
            let cfg = resolve_with_params(io, "steady", params, FileConfig::default())?;
            cmd_steady(&cfg, out, err)
        }
        Command::Trajectory { io, params, traj } => {
            let flags = FileConfig {
                t_end: traj.t_end,
                samples: traj.samples,
                n0: traj.n0,
                rz0: traj.rz0,
                rplus0_re: traj.rplus0_re,
                rplus0_im: traj.rplus0_im,
                sz0: traj.sz0,
                splus0_re: traj.splus0_re,
                splus0_im: traj.splus0_im,
                ode: traj.ode,
                ..Default::default()
            };
            let cfg = resolve_with_params(io, "trajectory", params, flags)?;
            cmd_trajectory(&cfg, out, err)
        }
        Command::Sweep { io, params, sweep } => {
            let flags = FileConfig {
                preset: sweep.preset,
                variable: sweep.variable,
                min: sweep.min,
                max: sweep.max,
                count: sweep.count,
                values: sweep.values,
                gamma_zero_rule: sweep.gamma_zero_rule,
                observables: sweep.observables,
                oracle: sweep.oracle,
                n_max: sweep.n_max,
                out_dir: sweep.out_dir,
                ..Default::default()
            };
            let cfg = resolve_with_params(io, "sweep", params, flags)?;
            cmd_sweep(&cfg, out, err)
        }
        Command::Validate { io, params, oracle } => {
            let flags = FileConfig {
                n_max: oracle.n_max,
                dim_cap: oracle.dim_cap,
                converge: oracle.converge,
                step: oracle.step,
                rel_tol: oracle.rel_tol,
                threshold: oracle.threshold,
                atom_threshold: oracle.atom_threshold,
                ..Default::default()
            };
            let cfg = resolve_with_params(io, "validate", params, flags)?;
            cmd_validate(&cfg, out, err)
        }
        Command::Presets { name } => cmd_presets(name.as_deref(), out),
    }
}

fn resolve_with_params(io: IoArgs, command: &str, params: ParamArgs, flags: FileConfig) -> Result<FileConfig> {
    let mut cfg = io.into_config(command, flags)?;
    params.apply(&mut cfg);
    Ok(cfg)
}

/// Physical block of a resolved config.
struct Resolved {
    params: PhysicalParams,
    reference_rate: ReferenceRate,
    margin: f64,
    embedded: FileConfig,
}

fn resolve(command: &str, cfg: &FileConfig, default_format: Format) -> Result<(Resolved, Format)> {
    let params = cfg.physical_params()?;
    let reference_rate = cfg.reference_rate_for(&params);
    let margin = cfg.margin.unwrap_or(DEFAULT_MARGIN);
    let format = cfg.format.unwrap_or(default_format);
    let mut embedded = FileConfig::with_params(command, &params, reference_rate, margin);
    embedded.format = Some(format);
    Ok((
        Resolved {
            params,
            reference_rate,
            margin,
            embedded,
        },
        format,
    ))
}

fn warn_validity(report: &ValidityReport, err: &mut dyn Write) {
    if report.valid {
        return;
    }
    let _ = writeln!(
        err,
        "warning: parameters are outside the validity regime of the closed form (margin {}):",
        report.margin
    );
    for c in report.failing() {
        let ratio = c.ratio.map(|r| format!(" (ratio {r:.3})")).unwrap_or_default();
        let _ = writeln!(
            err,
            "  {}: {} = {} {} {} = {}{}",
            c.name,
            c.lhs_label,
            c.lhs,
            match c.relation {
                crate::analytic::Relation::Less => "<",
                crate::analytic::Relation::MuchLess => "<<",
            },
            c.rhs_label,
            c.rhs,
            ratio
        );
    }
}

/// Write to `--output` or standard output.
fn emit(cfg: &FileConfig, out: &mut dyn Write, body: &[u8]) -> Result<()> {
    match &cfg.output {
        Some(path) => fs::write(path, body).map_err(|e| Error::Io(format!("{path}: {e}")))?,
        None => out.write_all(body)?,
    }
    Ok(())
}

fn json_bytes(v: &Value) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(v).expect("json serializes");
    s.push('\n');
    s.into_bytes()
}

fn csv_bytes(config_line: &str, header: &[&str], rows: &[Vec<String>]) -> Result<Vec<u8>> {
    let mut buf = config_line.as_bytes().to_vec();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(header).map_err(|e| Error::Io(e.to_string()))?;
        for r in rows {
            w.write_record(r).map_err(|e| Error::Io(e.to_string()))?;
        }
        w.flush()?;
    }
    Ok(buf)
}

fn n_s_string(n: SteadyPhonon) -> String {
    match n {
        SteadyPhonon::Finite(v) => v.to_string(),
        SteadyPhonon::Heating => SteadyPhonon::HEATING_SENTINEL.to_owned(),
    }
}

fn cmd_steady(cfg: &FileConfig, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let (r, format) = resolve("steady", cfg, Format::Json)?;
    let s = steady_summary(&r.params, r.margin)?;
    warn_validity(&s.validity, err);
    let body = match format {
        Format::Json => json_bytes(&json!({
            "config": r.embedded.to_json(),
            "reference_rate": r.reference_rate,
            "n_s": s.n_s,
            "rz": s.atom.rz,
            "sz": s.atom.sz,
            "two_sz": 2.0 * s.atom.sz,
            "cooling_rate": s.cooling_rate,
            "atom": s.atom,
            "rates": s.rates,
            "frame": s.frame,
            "validity": s.validity,
        })),
        Format::Csv => csv_bytes(
            &r.embedded.csv_header_line(),
            &[
                "n_s", "r11", "r22", "rz", "sz", "two_sz", "c", "a_minus", "a_plus", "gamma_perp", "gamma_s",
                "gamma_0_eff", "valid",
            ],
            &[vec![
                n_s_string(s.n_s),
                s.atom.r11.to_string(),
                s.atom.r22.to_string(),
                s.atom.rz.to_string(),
                s.atom.sz.to_string(),
                (2.0 * s.atom.sz).to_string(),
                s.cooling_rate.to_string(),
                s.rates.a_rate_minus.to_string(),
                s.rates.a_rate_plus.to_string(),
                s.rates.gamma_perp.to_string(),
                s.rates.gamma_s.to_string(),
                s.rates.gamma_0_eff.to_string(),
                s.validity.valid.to_string(),
            ]],
        )?,
    };
    emit(cfg, out, &body)?;
    Ok(0)
}

fn cmd_trajectory(cfg: &FileConfig, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let (r, format) = resolve("trajectory", cfg, Format::Csv)?;
    let mut e = r.embedded;
    let t_end = cfg.t_end.unwrap_or(DEFAULT_T_END);
    let samples = cfg.samples.unwrap_or(DEFAULT_SAMPLES);
    let n0 = cfg.n0.unwrap_or(DEFAULT_N0);
    let ode = cfg.ode.unwrap_or(false);
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::invalid("t_end", format!("must be positive and finite, got {t_end}")));
    }
    if samples < 2 {
        return Err(Error::invalid("samples", "need at least 2"));
    }
    let bare = cfg.sz0.is_some() || cfg.splus0_re.is_some() || cfg.splus0_im.is_some();
    let dressed = cfg.rz0.is_some() || cfg.rplus0_re.is_some() || cfg.rplus0_im.is_some();
    if bare && dressed {
        return Err(Error::Config("give either the dressed (rz0, rplus0_*) or the bare (sz0, splus0_*) initial state".into()));
    }
    let atom = if bare {
        let b = BareInit {
            sz0: cfg.sz0.unwrap_or(-0.5),
            splus0: Complex64::new(cfg.splus0_re.unwrap_or(0.0), cfg.splus0_im.unwrap_or(0.0)),
        };
        e.sz0 = Some(b.sz0);
        e.splus0_re = Some(b.splus0.re);
        e.splus0_im = Some(b.splus0.im);
        b.to_dressed(&r.params.dressed_frame())
    } else {
        let d = DressedInit {
            rz0: cfg.rz0.unwrap_or(-1.0),
            rplus0: Complex64::new(cfg.rplus0_re.unwrap_or(0.0), cfg.rplus0_im.unwrap_or(0.0)),
        };
        e.rz0 = Some(d.rz0);
        e.rplus0_re = Some(d.rplus0.re);
        e.rplus0_im = Some(d.rplus0.im);
        d
    };
    e.t_end = Some(t_end);
    e.samples = Some(samples);
    e.n0 = Some(n0);
    e.ode = Some(ode);

    let report = crate::analytic::validity_report(&r.params, r.margin)?;
    warn_validity(&report, err);
    let times = uniform_times(t_end, samples);
    let traj = trajectory(&r.params, TrajectoryInit { atom, n0 }, &times)?;
    let n_ode = if ode { Some(reduced_phonon_evolve(&r.params, n0, &times)?) } else { None };

    let body = match format {
        Format::Json => {
            let mut doc = json!({
                "config": e.to_json(),
                "reference_rate": r.reference_rate,
                "initial_dressed": atom,
                "n_fixed_point": traj.n_fixed_point,
                "growing": traj.growing,
                "validity": report,
                "points": traj.points,
            });
            if let Some(n) = &n_ode {
                doc["n_ode"] = json!(n);
            }
            json_bytes(&doc)
        }
        Format::Csv => {
            let mut header = vec!["t", "rz", "re_rplus", "im_rplus", "n"];
            if ode {
                header.push("n_ode");
            }
            let rows: Vec<Vec<String>> = traj
                .points
                .iter()
                .enumerate()
                .map(|(i, p)| {
                    let mut row = vec![
                        p.t.to_string(),
                        p.rz.to_string(),
                        p.rplus.re.to_string(),
                        p.rplus.im.to_string(),
                        p.n.to_string(),
                    ];
                    if let Some(n) = &n_ode {
                        row.push(n[i].to_string());
                    }
                    row
                })
                .collect();
            csv_bytes(&e.csv_header_line(), &header, &rows)?
        }
    };
    emit(cfg, out, &body)?;
    Ok(0)
}

fn cmd_validate(cfg: &FileConfig, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let (r, format) = resolve("validate", cfg, Format::Json)?;
    let mut e = r.embedded;
    let n_max = cfg.n_max.unwrap_or(DEFAULT_N_MAX);
    let dim_cap = cfg.dim_cap.unwrap_or(DEFAULT_DIM_CAP);
    let converge = cfg.converge.unwrap_or(true);
    let defaults = ConvergenceOptions::default();
    let step = cfg.step.unwrap_or(defaults.step);
    let rel_tol = cfg.rel_tol.unwrap_or(defaults.rel_tol);
    let threshold = cfg.threshold.unwrap_or(DEFAULT_THRESHOLD);
    let atom_threshold = cfg.atom_threshold.unwrap_or(DEFAULT_ATOM_THRESHOLD);
    for (field, v) in [("threshold", threshold), ("atom_threshold", atom_threshold), ("rel_tol", rel_tol)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::invalid(field, format!("must be positive and finite, got {v}")));
        }
    }
    e.n_max = Some(n_max);
    e.dim_cap = Some(dim_cap);
    e.converge = Some(converge);
    e.step = Some(step);
    e.rel_tol = Some(rel_tol);
    e.threshold = Some(threshold);
    e.atom_threshold = Some(atom_threshold);

    let s = steady_summary(&r.params, r.margin)?;
    let analytic_n = match s.n_s {
        SteadyPhonon::Finite(n) => n,
        SteadyPhonon::Heating => return Err(Error::Heating),
    };
    warn_validity(&s.validity, err);

    let (state, convergence) = if converge {
        let opts = ConvergenceOptions {
            n_max_start: n_max,
            step,
            rel_tol,
            dim_cap,
        };
        let c = steady_state_converged(&r.params, opts)?;
        let summary = json!({
            "n_previous": c.n_previous,
            "rel_change": c.rel_change,
            "n_max_history": c.n_max_history,
        });
        (c.state, summary)
    } else {
        let st = steady_state(&build_liouvillian_with_cap(&r.params, n_max, dim_cap)?)?;
        st.verify()?;
        (st, Value::Null)
    };
    let o = state.observables;
    let rel_n = (o.n - analytic_n).abs() / analytic_n.abs();
    let rel_r11 = (o.r11 - s.atom.r11).abs() / s.atom.r11.abs();
    let rel_r22 = if s.atom.r22 > 0.0 { (o.r22 - s.atom.r22).abs() / s.atom.r22 } else { (o.r22 - s.atom.r22).abs() };
    let rel_atom = rel_r11.max(rel_r22);
    let pass = rel_n <= threshold && rel_atom <= atom_threshold;
    let failure = (!pass).then_some(if rel_n > threshold {
        Error::OracleMismatch { rel_error: rel_n, threshold }
    } else {
        Error::OracleMismatch { rel_error: rel_atom, threshold: atom_threshold }
    });

    let body = match format {
        Format::Json => json_bytes(&json!({
            "config": e.to_json(),
            "reference_rate": r.reference_rate,
            "valid": s.validity.valid,
            "failing_checks": s.validity.failing().map(|c| c.name.clone()).collect::<Vec<_>>(),
            "analytic": { "n_s": analytic_n, "r11": s.atom.r11, "r22": s.atom.r22 },
            "oracle": {
                "n": o.n,
                "r11": o.r11,
                "r22": o.r22,
                "n_max": state.n_max,
                "residual": state.residual,
                "tail_mass": o.tail_mass,
                "hygiene": state.hygiene,
                "convergence": convergence,
            },
            "rel_error_n": rel_n,
            "rel_error_r11": rel_r11,
            "rel_error_r22": rel_r22,
            "threshold": threshold,
            "atom_threshold": atom_threshold,
            "pass": pass,
            "error": failure.as_ref().map(|f| json!({ "tag": f.tag(), "message": f.to_string() })),
        })),
        Format::Csv => csv_bytes(
            &e.csv_header_line(),
            &[
                "analytic_n", "oracle_n", "rel_error_n", "analytic_r11", "oracle_r11", "rel_error_r11", "n_max",
                "valid", "pass",
            ],
            &[vec![
                analytic_n.to_string(),
                o.n.to_string(),
                rel_n.to_string(),
                s.atom.r11.to_string(),
                o.r11.to_string(),
                rel_r11.to_string(),
                state.n_max.to_string(),
                s.validity.valid.to_string(),
                pass.to_string(),
            ]],
        )?,
    };
    emit(cfg, out, &body)?;
    match failure {
        Some(f) => Err(f),
        None => Ok(0),
    }
}

fn sweep_spec_from(cfg: &FileConfig, base: PhysicalParams) -> Result<SweepSpec> {
    let variable: SweepVariable = cfg
        .variable
        .as_deref()
        .ok_or_else(|| Error::Config("a custom sweep needs `variable` (or use `preset`)".into()))?
        .parse()?;
    let grid = match (&cfg.values, cfg.min, cfg.max, cfg.count) {
        (Some(v), None, None, None) => Grid::List(v.clone()),
        (None, Some(min), Some(max), Some(count)) => Grid::Linear { min, max, count },
        _ => {
            return Err(Error::Config(
                "give either `values` or all of `min`, `max`, `count` for the grid".into(),
            ))
        }
    };
    let mut spec = SweepSpec::new(base, variable, grid);
    spec.gamma_zero_rule = cfg.gamma_zero_rule.as_deref().map(str::parse::<GammaZeroRule>).transpose()?;
    Ok(spec)
}

fn sanitize(label: &str) -> String {
    label.chars().filter(|c| c.is_ascii_alphanumeric() || *c == '.' || *c == '-' || *c == '_').collect()
}

fn cmd_sweep(cfg: &FileConfig, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let format = cfg.format.unwrap_or(Format::Csv);
    let margin = cfg.margin.unwrap_or(DEFAULT_MARGIN);
    let oracle = cfg.oracle.unwrap_or(false);
    let observables: Vec<Observable> = match &cfg.observables {
        Some(v) => v.iter().map(|s| s.parse()).collect::<Result<_>>()?,
        None => Observable::ALL
            .into_iter()
            .filter(|o| oracle || *o != Observable::OracleN)
            .collect(),
    };
    let n_max = cfg.n_max.unwrap_or(DEFAULT_N_MAX);

    let (family, mut embedded) = match &cfg.preset {
        Some(name) => {
            if cfg.has_physical_params() || cfg.variable.is_some() || cfg.values.is_some() || cfg.min.is_some() {
                return Err(Error::Config(format!(
                    "preset `{name}` fixes the parameters and grid; drop the explicit parameter and grid keys"
                )));
            }
            let p = preset(name)?;
            if let Some(rr) = cfg.reference_rate {
                if rr != p.reference_rate {
                    return Err(Error::Config(format!(
                        "preset `{name}` is quoted in units of {}, not {rr}",
                        p.reference_rate
                    )));
                }
            }
            let embedded = FileConfig {
                command: Some("sweep".into()),
                preset: Some(name.clone()),
                reference_rate: Some(p.reference_rate),
                margin: Some(margin),
                ..Default::default()
            };
            (p, embedded)
        }
        None => {
            let base = cfg.physical_params()?;
            let reference_rate = cfg.reference_rate_for(&base);
            let spec = sweep_spec_from(cfg, base)?;
            let mut embedded = FileConfig::with_params("sweep", &base, reference_rate, margin);
            embedded.variable = Some(spec.variable.name().to_owned());
            match &spec.grid {
                Grid::List(v) => embedded.values = Some(v.clone()),
                Grid::Linear { min, max, count } => {
                    embedded.min = Some(*min);
                    embedded.max = Some(*max);
                    embedded.count = Some(*count);
                }
            }
            embedded.gamma_zero_rule = cfg.gamma_zero_rule.clone();
            let p = Preset {
                name: "sweep",
                description: "custom scan",
                reference_rate,
                curves: vec![(spec.variable.name().to_owned(), spec)],
            };
            (p, embedded)
        }
    };
    embedded.observables = Some(observables.iter().map(|o| o.name().to_owned()).collect());
    embedded.oracle = Some(oracle);
    if oracle {
        embedded.n_max = Some(n_max);
    }
    embedded.format = Some(format);

    let mut family = family;
    for (_, spec) in family.curves.iter_mut() {
        spec.margin = margin;
        spec.observables = observables.clone();
        spec.oracle = oracle.then_some(OracleSettings { n_max });
    }
    let tables: Vec<SweepTable> = family
        .curves
        .iter()
        .map(|(label, spec)| run_sweep(label.clone(), spec))
        .collect::<Result<_>>()?;

    match format {
        Format::Json => {
            let curves: Vec<Value> = tables
                .iter()
                .map(|t| {
                    json!({
                        "label": t.label,
                        "spec": t.spec,
                        "columns": t.columns.iter().map(|c| c.name()).collect::<Vec<_>>(),
                        "rows": t.rows_json(),
                    })
                })
                .collect();
            let doc = json!({
                "config": embedded.to_json(),
                "preset": cfg.preset,
                "reference_rate": family.reference_rate,
                "variable": tables[0].spec.variable,
                "curves": curves,
            });
            emit(cfg, out, &json_bytes(&doc))?;
        }
        Format::Csv => {
            let dir = Path::new(cfg.out_dir.as_deref().unwrap_or("."));
            fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
            let header = embedded.csv_header_line();
            for t in &tables {
                let name = if tables.len() == 1 {
                    format!("{}.csv", family.name)
                } else {
                    format!("{}_{}.csv", family.name, sanitize(&t.label))
                };
                let path = dir.join(name);
                let mut buf = header.clone().into_bytes();
                buf.extend_from_slice(format!("# curve: {}\n", t.label).as_bytes());
                t.write_csv(&mut buf)?;
                fs::write(&path, buf).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
                let _ = writeln!(err, "wrote {}", path.display());
            }
        }
    }

    let first_error = tables.iter().flat_map(|t| t.error_rows()).next();
    if let Some(row) = first_error {
        let total: usize = tables.iter().map(|t| t.error_rows().count()).sum();
        let e = row.error.as_ref().expect("error row");
        let _ = writeln!(
            err,
            "error: {total} row(s) carry error markers; first at x = {}: [{}] {}",
            row.x, e.tag, e.message
        );
        return Ok(e.kind.exit_code());
    }
    Ok(0)
}

fn preset_json(p: &Preset) -> Value {
    json!({
        "name": p.name,
        "description": p.description,
        "reference_rate": p.reference_rate,
        "curves": p.curves.iter().map(|(label, spec)| json!({ "label": label, "spec": spec })).collect::<Vec<_>>(),
    })
}

fn cmd_presets(name: Option<&str>, out: &mut dyn Write) -> Result<i32> {
    let doc = match name {
        Some(n) => preset_json(&preset(n)?),
        None => Value::Array(list_presets().iter().map(preset_json).collect()),
    };
    out.write_all(&json_bytes(&doc))?;
    Ok(0)
}
