use std::io::Write;
use std::path::Path;

use serde_json::{json, Value};

use crate::certify::{DecayCertificate, DensityResult, Mode, TableRow};
use crate::contraction::{ContractionCertificate, TraceRow};
use crate::error::{Error, Result};
use crate::lasota_yorke::{LYCertificate, Provenance};
use crate::rigor::Interval;
use crate::ulam::ApproxCoefficients;

/// Whether the certificate proves `ρ < 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Conclusive,
    Inconclusive,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Conclusive => 0,
            Status::Inconclusive => 2,
        }
    }
}

/// Summary of the map actually certified.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MapSummary {
    pub iterate: usize,
    pub branches: usize,
    pub inf_abs_deriv: Interval,
    pub min_gap: Interval,
}

/// Outcome of a certification job.
#[derive(Clone, Debug)]
pub struct Report {
    pub mode: Mode,
    pub status: Status,
    pub k: usize,
    pub map: MapSummary,
    pub ly: Option<LYCertificate>,
    /// Coefficients derived from the map when the job ran on user-supplied
    /// ones, or the reason they could not be derived.
    pub ly_derived: Option<std::result::Result<LYCertificate, String>>,
    pub approx: Option<ApproxCoefficients>,
    pub contraction: Option<ContractionCertificate>,
    pub contraction_trace: Vec<TraceRow>,
    pub decay: Option<DecayCertificate>,
    pub constants: Option<(Interval, Interval)>,
    pub tables: Vec<TableRow>,
    pub escape_rate: Option<Interval>,
    pub density: Option<DensityResult>,
    pub notes: Vec<String>,
    pub digest: String,
}

/// Round-trip exact decimal form of a double.
pub fn dec(x: f64) -> String {
    format!("{x:?}")
}

fn iv(x: Interval) -> Value {
    json!([dec(x.lo()), dec(x.hi())])
}

fn ly_json(l: &LYCertificate) -> Value {
    json!({
        "A": iv(l.a),
        "lambda1": iv(l.lambda1),
        "B": iv(l.b),
        "provenance": l.provenance,
    })
}

fn table_json(rows: &[TableRow]) -> Value {
    Value::Array(
        rows.iter()
            .map(|r| {
                json!({
                    "h": r.h,
                    "strong": [dec(r.strong[0].hi()), dec(r.strong[1].hi())],
                    "weak": [dec(r.weak[0].hi()), dec(r.weak[1].hi())],
                })
            })
            .collect(),
    )
}

impl Report {
    pub fn delta(&self) -> Interval {
        Interval::from_i64_ratio(1, self.k as i64)
    }

    /// The certificate document. Keys are emitted in sorted order and all
    /// numbers as decimal strings, so equal reports serialise identically.
    pub fn to_json(&self) -> Value {
        let mut doc = json!({
            "mode": self.mode,
            "status": match self.status {
                Status::Conclusive => "conclusive",
                Status::Inconclusive => "inconclusive",
            },
            "delta": dec(self.delta().lo()),
            "k": self.k,
            "map": {
                "iterate": self.map.iterate,
                "branches": self.map.branches,
                "inf_abs_derivative": iv(self.map.inf_abs_deriv),
                "min_gap": iv(self.map.min_gap),
            },
            "tables": table_json(&self.tables),
            "notes": self.notes,
            "provenance": {
                "tool": concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION")),
                "rounding": "directed, emulated by error-free transformations",
                "config_sha256": self.digest,
            },
        });
        let obj = doc.as_object_mut().expect("object literal");
        if let Some(l) = &self.ly {
            obj.insert("lambda1".into(), iv(l.lambda1));
            obj.insert("A".into(), iv(l.a));
            obj.insert("B".into(), iv(l.b));
            obj.insert("ly_provenance".into(), json!(l.provenance));
        }
        match &self.ly_derived {
            Some(Ok(l)) => {
                obj.insert("ly_derived".into(), ly_json(l));
            }
            Some(Err(e)) => {
                obj.insert("ly_derived".into(), json!({ "error": e }));
            }
            None => {}
        }
        if let Some(ac) = &self.approx {
            obj.insert("C".into(), iv(ac.c));
            obj.insert("D".into(), iv(ac.d));
        }
        if let Some(c) = &self.contraction {
            obj.insert("n1".into(), json!(c.n1));
            obj.insert("lambda2".into(), iv(c.lambda2));
            obj.insert("basis_count".into(), json!(c.basis_count));
            obj.insert("space".into(), json!(c.space));
        }
        obj.insert(
            "contraction_trace".into(),
            Value::Array(
                self.contraction_trace
                    .iter()
                    .map(|r| json!([r.n, dec(r.lambda2_upper), dec(r.err_component)]))
                    .collect(),
            ),
        );
        if let Some(d) = &self.decay {
            let m = d.m;
            obj.insert(
                "M".into(),
                json!([[iv(m.m11), iv(m.m12)], [iv(m.m21), iv(m.m22)]]),
            );
            obj.insert("rho".into(), iv(d.rho));
            obj.insert("a".into(), iv(d.a));
            obj.insert("b".into(), iv(d.b));
        }
        if let Some((s, w)) = self.constants {
            obj.insert("strong_constant".into(), iv(s));
            obj.insert("weak_constant".into(), iv(w));
        }
        if let Some(r) = self.escape_rate {
            obj.insert("escape_rate".into(), iv(r));
        }
        if let Some(d) = &self.density {
            let t = &d.terms;
            obj.insert(
                "density".into(),
                json!({
                    "l1_error": iv(d.l1_error),
                    "mass": iv(d.f_delta.mass()),
                    "steps": t.steps,
                    "discretization": dec(t.discretization),
                    "fixity": dec(t.fixity),
                    "decay": dec(t.decay),
                    "mass_defect": dec(t.mass),
                    "near_fixity": dec(t.near_fixity),
                    "bv_f_delta": dec(t.bv_f_delta),
                    "bv_f": dec(t.bv_f),
                }),
            );
        }
        doc
    }

    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_json()).expect("serialisable");
        s.push('\n');
        s
    }

    pub fn is_user_supplied(&self) -> bool {
        self.ly
            .is_some_and(|l| l.provenance == Provenance::UserSupplied)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TableFormat {
    Csv,
    Json,
}

/// Writes the finite-time table as CSV (`h,strong_c1,strong_c2,weak_c1,
/// weak_c2`, upper bounds) or as the `tables` array of the certificate.
pub fn write_table(report: &Report, format: TableFormat, mut w: impl Write) -> std::io::Result<()> {
    match format {
        TableFormat::Csv => {
            writeln!(w, "h,strong_c1,strong_c2,weak_c1,weak_c2")?;
            for r in &report.tables {
                writeln!(
                    w,
                    "{},{},{},{},{}",
                    r.h,
                    dec(r.strong[0].hi()),
                    dec(r.strong[1].hi()),
                    dec(r.weak[0].hi()),
                    dec(r.weak[1].hi())
                )?;
            }
            Ok(())
        }
        TableFormat::Json => {
            let s =
                serde_json::to_string_pretty(&table_json(&report.tables)).expect("serialisable");
            writeln!(w, "{s}")
        }
    }
}

/// [`write_table`] to a file; the format follows the extension (`.json`
/// or anything else for CSV).
pub fn export_table(report: &Report, path: &Path) -> Result<()> {
    let format = match path.extension().and_then(|e| e.to_str()) {
        Some("json") => TableFormat::Json,
        _ => TableFormat::Csv,
    };
    let io = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = std::fs::File::create(path).map_err(io)?;
    let mut w = std::io::BufWriter::new(file);
    write_table(report, format, &mut w).map_err(io)?;
    w.flush().map_err(io)
}

/// `(h, [strong_c1, strong_c2], [weak_c1, weak_c2])`.
pub type TableRecord = (usize, [f64; 2], [f64; 2]);

/// Reads back the table rows written in the JSON format.
pub fn parse_table_json(text: &str) -> Result<Vec<TableRecord>> {
    let bad = |m: &str| Error::Config(format!("table JSON: {m}"));
    let v: Value = serde_json::from_str(text).map_err(|e| bad(&e.to_string()))?;
    let rows = v.as_array().ok_or_else(|| bad("expected an array"))?;
    rows.iter()
        .map(|r| {
            let h = r["h"].as_u64().ok_or_else(|| bad("missing h"))? as usize;
            let pair = |key: &str| -> Result<[f64; 2]> {
                let a = r[key]
                    .as_array()
                    .filter(|a| a.len() == 2)
                    .ok_or_else(|| bad(key))?;
                let f = |x: &Value| {
                    x.as_str()
                        .and_then(|s| s.parse::<f64>().ok())
                        .ok_or_else(|| bad(key))
                };
                Ok([f(&a[0])?, f(&a[1])?])
            };
            Ok((h, pair("strong")?, pair("weak")?))
        })
        .collect()
}
