use std::path::Path;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::certify::Mode;
use crate::dynamics::{
    build_map, iterate_map, linear_mod1, mod_one, BranchSpec, Hole, PiecewiseMap,
};
use crate::error::{Error, Result};
use crate::rigor::{parse_rational, Expr, Interval};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    map: RawMap,
    discretization: RawDiscretization,
    #[serde(default)]
    certification: RawCertification,
    #[serde(default)]
    outputs: RawOutputs,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMap {
    generator: Option<String>,
    #[serde(default)]
    branch: Vec<RawBranch>,
    iterate: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBranch {
    domain: [String; 2],
    formula: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDiscretization {
    delta: String,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCertification {
    mode: Option<String>,
    lambda2_target: Option<f64>,
    n_max: Option<usize>,
    hole: Option<[String; 2]>,
    lorenz_l: Option<f64>,
    ly: Option<RawLy>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLy {
    #[serde(rename = "A")]
    a: String,
    lambda1: String,
    #[serde(rename = "B")]
    b: String,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutputs {
    #[serde(default)]
    table_steps: Vec<usize>,
    #[serde(default)]
    density: bool,
    density_max_steps: Option<usize>,
}

/// How the map is given.
#[derive(Clone, Debug)]
pub enum MapSpec {
    /// `x -> a x mod 1`.
    LinearMod1(BigRational),
    /// `x -> f(x) mod 1` for a monotone `f`.
    Mod1(Expr),
    Branches(Vec<BranchSpec>),
}

impl MapSpec {
    pub fn build(&self) -> Result<PiecewiseMap> {
        match self {
            MapSpec::LinearMod1(a) => linear_mod1(a),
            MapSpec::Mod1(f) => mod_one(f),
            MapSpec::Branches(b) => build_map(b),
        }
    }
}

/// User-supplied Lasota–Yorke coefficients.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LyInput {
    pub a: Interval,
    pub lambda1: Interval,
    pub b: Interval,
}

/// A validated certification job.
#[derive(Clone, Debug)]
pub struct JobConfig {
    pub map: MapSpec,
    pub iterate: usize,
    pub mode: Option<Mode>,
    pub hole: Option<Hole>,
    /// Number of cells, `1/δ`.
    pub k: usize,
    pub lambda2_target: f64,
    pub n_max: usize,
    pub ly: Option<LyInput>,
    pub lorenz_l: Option<f64>,
    pub table_steps: Vec<usize>,
    pub density: bool,
    pub density_max_steps: usize,
    /// SHA-256 of the configuration text.
    pub digest: String,
}

pub const DEFAULT_LAMBDA2_TARGET: f64 = 0.5;
pub const DEFAULT_N_MAX: usize = 64;
pub const DEFAULT_DENSITY_STEPS: usize = 4000;

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, col)
}

fn number(field: &str, text: &str) -> Result<Interval> {
    Interval::parse(text).map_err(|_| Error::Config(format!("{field}: not a number: {text:?}")))
}

fn rational(field: &str, text: &str) -> Result<BigRational> {
    parse_rational(text)
        .ok_or_else(|| Error::Config(format!("{field}: not a rational number: {text:?}")))
}

/// Parses `2^-13`, `1/8192` or an exact decimal into the cell count.
pub fn parse_delta(text: &str) -> Result<usize> {
    let t = text.trim();
    let value = if let Some(e) = t.strip_prefix("2^") {
        let e: i32 = e
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("delta: bad exponent in {t:?}")))?;
        if !(-40..=-1).contains(&e) {
            return Err(Error::Config(format!(
                "delta: exponent {e} must lie in -40..=-1"
            )));
        }
        BigRational::new(BigInt::one(), BigInt::one() << (-e) as usize)
    } else {
        rational("delta", t)?
    };
    let inv = value.recip();
    let k = inv
        .is_integer()
        .then(|| inv.to_integer().to_usize())
        .flatten()
        .filter(|k| *k >= 2 && k.is_power_of_two())
        .ok_or_else(|| {
            Error::Config(format!(
                "delta = {t} must be 1/k with k a power of two, at least 2"
            ))
        })?;
    Ok(k)
}

fn parse_mode(text: &str) -> Result<Mode> {
    match text {
        "mixing" => Ok(Mode::Mixing),
        "escape" => Ok(Mode::Escape),
        other => Err(Error::Config(format!(
            "certification.mode: unknown mode {other:?}"
        ))),
    }
}

fn parse_generator(text: &str) -> Result<MapSpec> {
    let t = text.trim();
    let (name, arg) = t.split_once(char::is_whitespace).unwrap_or((t, ""));
    match name {
        "linear_mod1" => Ok(MapSpec::LinearMod1(rational("map.generator", arg.trim())?)),
        "mod1" => {
            let e = Expr::parse(arg.trim()).map_err(|e| {
                Error::Config(format!("map.generator formula {:?}: {e}", arg.trim()))
            })?;
            Ok(MapSpec::Mod1(e))
        }
        other => Err(Error::Config(format!(
            "map.generator: unknown generator {other:?} (expected linear_mod1 or mod1)"
        ))),
    }
}

impl JobConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| {
            let at = e
                .span()
                .map(|s| {
                    let (l, c) = line_col(text, s.start);
                    format!(" at line {l}, column {c}")
                })
                .unwrap_or_default();
            Error::Config(format!("invalid configuration{at}: {}", e.message()))
        })?;

        let map = match (&raw.map.generator, raw.map.branch.is_empty()) {
            (Some(g), true) => parse_generator(g)?,
            (None, false) => {
                let mut specs = Vec::new();
                for (n, b) in raw.map.branch.iter().enumerate() {
                    let field = format!("map.branch[{}]", n + 1);
                    let lo = number(&format!("{field}.domain"), &b.domain[0])?;
                    let hi = number(&format!("{field}.domain"), &b.domain[1])?;
                    let e = Expr::parse(&b.formula).map_err(|e| {
                        Error::Config(format!("{field}.formula {:?}: {e}", b.formula))
                    })?;
                    specs.push(BranchSpec::new(lo, hi, e));
                }
                MapSpec::Branches(specs)
            }
            (Some(_), false) => {
                return Err(Error::Config(
                    "map: give either a generator or a branch list, not both".into(),
                ))
            }
            (None, true) => return Err(Error::Config("map: no generator and no branches".into())),
        };
        let iterate = raw.map.iterate.unwrap_or(1);
        if iterate == 0 {
            return Err(Error::Config("map.iterate must be at least 1".into()));
        }

        let k = parse_delta(&raw.discretization.delta)?;
        let c = raw.certification;
        let mode = c.mode.as_deref().map(parse_mode).transpose()?;
        let hole = match &c.hole {
            Some([a, b]) => Some(Hole::new(
                rational("certification.hole", a)?,
                rational("certification.hole", b)?,
            )?),
            None => None,
        };
        let ly = match &c.ly {
            Some(l) => Some(LyInput {
                a: number("certification.ly.A", &l.a)?,
                lambda1: number("certification.ly.lambda1", &l.lambda1)?,
                b: number("certification.ly.B", &l.b)?,
            }),
            None => None,
        };
        if let Some(l) = c.lorenz_l {
            if !(l > 0.0 && l.is_finite()) {
                return Err(Error::Config(format!(
                    "certification.lorenz_l = {l} must be positive"
                )));
            }
        }
        let cfg = JobConfig {
            map,
            iterate,
            mode,
            hole,
            k,
            lambda2_target: c.lambda2_target.unwrap_or(DEFAULT_LAMBDA2_TARGET),
            n_max: c.n_max.unwrap_or(DEFAULT_N_MAX),
            ly,
            lorenz_l: c.lorenz_l,
            table_steps: raw.outputs.table_steps,
            density: raw.outputs.density,
            density_max_steps: raw
                .outputs
                .density_max_steps
                .unwrap_or(DEFAULT_DENSITY_STEPS),
            digest: hex(&Sha256::digest(text.as_bytes())),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    /// Checks the cross-field rules; run again after command-line
    /// overrides.
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda2_target > 0.0 && self.lambda2_target < 1.0) {
            return Err(Error::Config(format!(
                "lambda2_target = {} must lie in (0, 1)",
                self.lambda2_target
            )));
        }
        if self.n_max == 0 {
            return Err(Error::Config("n_max must be at least 1".into()));
        }
        if self.mode == Some(Mode::Escape) && self.hole.is_none() {
            return Err(Error::Config("escape mode needs certification.hole".into()));
        }
        if self.mode == Some(Mode::Mixing) && self.hole.is_some() {
            return Err(Error::Config("mixing mode does not take a hole".into()));
        }
        if !self.k.is_power_of_two() || self.k < 2 {
            return Err(Error::Config(format!(
                "k = {} must be a power of two",
                self.k
            )));
        }
        Ok(())
    }

    /// The map to certify, `T^iterate`.
    pub fn build_map(&self) -> Result<PiecewiseMap> {
        let t = self.map.build()?;
        if self.iterate == 1 {
            Ok(t)
        } else {
            iterate_map(&t, self.iterate)
        }
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
