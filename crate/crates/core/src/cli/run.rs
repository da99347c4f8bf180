use crate::certify::{
    decay_bounds, escape_rate_bound, invariant_density_with_error, power_table, DecayCertificate,
    Mode,
};
use crate::contraction::{estimate_lambda2_escape, estimate_lambda2_mixing, TraceRow};
use crate::dynamics::PiecewiseMap;
use crate::error::{Error, Result};
use crate::lasota_yorke::{ly_hole, ly_iterate, ly_lorenz, ly_one_step, LYCertificate};
use crate::ulam::{apply_hole_mask, approx_coefficients, build_ulam, UlamMatrix};

use super::config::JobConfig;
use super::report::{MapSummary, Report, Status};

/// A finished job: the report and the matrix it was computed from.
#[derive(Debug)]
pub struct Outcome {
    pub report: Report,
    pub matrix: Option<UlamMatrix>,
}

fn derived_ly(cfg: &JobConfig, f: &PiecewiseMap, mode: Mode) -> Result<LYCertificate> {
    match (mode, cfg.lorenz_l) {
        (Mode::Mixing, Some(l)) => ly_lorenz(f, l),
        (Mode::Mixing, None) => ly_iterate(&ly_one_step(f)?),
        (Mode::Escape, _) => ly_hole(&ly_one_step(f)?),
    }
}

fn empty_report(cfg: &JobConfig, f: &PiecewiseMap, mode: Mode) -> Report {
    Report {
        mode,
        status: Status::Inconclusive,
        k: cfg.k,
        map: MapSummary {
            iterate: cfg.iterate,
            branches: f.branches().len(),
            inf_abs_deriv: f.inf_abs_deriv(),
            min_gap: f.min_gap(),
        },
        ly: None,
        ly_derived: None,
        approx: None,
        contraction: None,
        contraction_trace: Vec::new(),
        decay: None,
        constants: None,
        tables: Vec::new(),
        escape_rate: None,
        density: None,
        notes: Vec::new(),
        digest: cfg.digest.clone(),
    }
}

// Failures that still leave a valid, if inconclusive, report.
fn inconclusive(e: &Error) -> bool {
    matches!(e, Error::ExpansionTooWeak(_) | Error::NoContraction { .. })
}

fn trace_of(e: &Error) -> Vec<TraceRow> {
    match e {
        Error::NoContraction { trace, .. } => trace
            .iter()
            .map(|&(n, lambda2_upper, err_component)| TraceRow {
                n,
                lambda2_upper,
                err_component,
            })
            .collect(),
        _ => Vec::new(),
    }
}

/// Runs the whole pipeline for `mode`: map, iterate, Lasota–Yorke
/// coefficients, Ulam matrix, coarse contraction, bound matrix, `ρ`,
/// `(a, b)`, tables and the optional density or escape rate.
pub fn run_certify(cfg: &JobConfig, mode: Mode) -> Result<Outcome> {
    cfg.validate()?;
    if let Some(m) = cfg.mode {
        if m != mode {
            return Err(Error::Config(format!(
                "the configuration is for {m:?} mode, not {mode:?}"
            )));
        }
    }
    let hole = match mode {
        Mode::Escape => Some(
            cfg.hole
                .clone()
                .ok_or_else(|| Error::Config("escape mode needs certification.hole".into()))?,
        ),
        Mode::Mixing if cfg.hole.is_some() => {
            return Err(Error::Config("mixing mode does not take a hole".into()))
        }
        Mode::Mixing => None,
    };

    let f = cfg.build_map()?;
    let mut report = empty_report(cfg, &f, mode);

    let derived = derived_ly(cfg, &f, mode);
    let ly = match (&cfg.ly, derived) {
        (Some(u), d) => {
            report.ly_derived = Some(d.map_err(|e| e.to_string()));
            LYCertificate::user_supplied(u.a, u.lambda1, u.b)?
        }
        (None, Ok(l)) => l,
        (None, Err(e)) if inconclusive(&e) => {
            report.notes.push(e.to_string());
            return Ok(Outcome {
                report,
                matrix: None,
            });
        }
        (None, Err(e)) => return Err(e),
    };
    report.ly = Some(ly);
    if let Err(e) = ly.require_contracting() {
        report.notes.push(e.to_string());
        return Ok(Outcome {
            report,
            matrix: None,
        });
    }
    let ac = approx_coefficients(&ly)?;
    report.approx = Some(ac);

    let closed = build_ulam(&f, cfg.k)?;
    let u = match &hole {
        Some(h) => apply_hole_mask(&closed, h)?,
        None => closed,
    };
    let cc = match mode {
        Mode::Mixing => estimate_lambda2_mixing(&u, cfg.lambda2_target, cfg.n_max),
        Mode::Escape => estimate_lambda2_escape(&u, cfg.lambda2_target, cfg.n_max),
    };
    let cc = match cc {
        Ok(c) => c,
        Err(e) if inconclusive(&e) => {
            report.contraction_trace = trace_of(&e);
            report.notes.push(e.to_string());
            return Ok(Outcome {
                report,
                matrix: Some(u),
            });
        }
        Err(e) => return Err(e),
    };
    report.contraction_trace = cc.trace.clone();
    report.contraction = Some(cc.clone());

    let dc = DecayCertificate::from_parts(&ly, &ac, &cc, u.partition().delta())?;
    report.tables = power_table(&dc.m, cc.n1, &cfg.table_steps);
    match decay_bounds(&dc, &ly, 0) {
        Ok(c) => report.constants = Some(c),
        Err(e) => report
            .notes
            .push(format!("asymptotic constants unavailable: {e}")),
    }
    if dc.is_conclusive() {
        report.status = Status::Conclusive;
    } else {
        report
            .notes
            .push(format!("rho = {} is not below 1", dc.rho));
    }
    if mode == Mode::Escape {
        report.escape_rate = Some(escape_rate_bound(&dc)?);
    }
    if cfg.density && mode == Mode::Mixing && dc.is_conclusive() {
        report.density = Some(invariant_density_with_error(
            &u,
            &dc,
            &ly,
            &ac,
            cfg.density_max_steps,
        )?);
    }
    report.decay = Some(dc);
    Ok(Outcome {
        report,
        matrix: Some(u),
    })
}

pub fn run_certify_mixing(cfg: &JobConfig) -> Result<Outcome> {
    run_certify(cfg, Mode::Mixing)
}

pub fn run_certify_escape(cfg: &JobConfig) -> Result<Outcome> {
    run_certify(cfg, Mode::Escape)
}
