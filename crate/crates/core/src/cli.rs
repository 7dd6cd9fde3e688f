//! Configuration, dispatch and reports for the `statdisc` binary.
//!
//! Every run produces one JSON document. Exit codes: 0 when the command
//! completed and its checks passed, 1 on a numerical failure, a failed check
//! or an internal inconsistency, 2 on malformed input.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use crate::disc::{self, DiscParameters, StationaryDisc};
use crate::error::{Error, Result};
use crate::json;
use crate::jets;
use crate::linalg::{self, CVec};
use crate::minimality;
use crate::pencil::{self, PencilFactorization};
use crate::quadric::Quadric;
use crate::report::{self, JacobianReport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

pub const DEFAULT_SEED: u64 = 0;
pub const LEVI_TRIALS: usize = 64;
pub const OPENNESS_RADIUS: f64 = 1e-3;
pub const OPENNESS_PROBES: usize = 50;
/// Radial step of the numeric jet cross-check.
pub const JET_STEP: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Check,
    SolveX,
    Disc,
    Verify,
    Jet,
    Jacobian,
    Center,
    Minimal,
    Defect,
    Scan,
}

impl Command {
    pub const ALL: [Command; 10] = [
        Command::Check,
        Command::SolveX,
        Command::Disc,
        Command::Verify,
        Command::Jet,
        Command::Jacobian,
        Command::Center,
        Command::Minimal,
        Command::Defect,
        Command::Scan,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Check => "check",
            Command::SolveX => "solve-x",
            Command::Disc => "disc",
            Command::Verify => "verify",
            Command::Jet => "jet",
            Command::Jacobian => "jacobian",
            Command::Center => "center",
            Command::Minimal => "minimal",
            Command::Defect => "defect",
            Command::Scan => "scan",
        }
    }

    /// Default number of boundary samples.
    fn default_samples(self) -> usize {
        match self {
            Command::Verify => 256,
            _ => 64,
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Input(format!("unknown command \"{s}\"")))
    }
}

/// Relative tolerances used to decide pass/fail in reports.
#[derive(Debug, Clone, PartialEq)]
pub struct Tolerances(BTreeMap<&'static str, f64>);

impl Default for Tolerances {
    fn default() -> Self {
        Self(BTreeMap::from([
            ("attachment", disc::ATTACHMENT_TOL),
            ("boundary", pencil::BOUNDARY_TOL),
            ("fd_invertibility", report::FD_INVERTIBILITY_TOL),
            ("fourier", disc::FOURIER_REL_TOL),
            ("hermitian", pencil::RESIDUAL_TOL),
            ("invertibility", report::INVERTIBILITY_TOL),
            ("jet", jets::JET_REL_TOL),
            ("minimality", minimality::MINIMALITY_TOL),
            ("pinning", disc::PINNING_TOL),
            ("residual", pencil::RESIDUAL_TOL),
            ("witness", minimality::WITNESS_TOL),
        ]))
    }
}

impl Tolerances {
    pub fn get(&self, name: &str) -> f64 {
        self.0[name]
    }

    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        if !(value.is_finite() && value > 0.0) {
            return Err(Error::Input(format!("tolerance {name} must be positive, got {value}")));
        }
        match self.0.iter_mut().find(|(k, _)| **k == name) {
            Some((_, v)) => {
                *v = value;
                Ok(())
            }
            None => Err(Error::Input(format!(
                "unknown tolerance \"{name}\" (known: {})",
                self.0.keys().copied().collect::<Vec<_>>().join(", ")
            ))),
        }
    }

    /// Apply a `NAME=VALUE` override.
    pub fn apply(&mut self, arg: &str) -> Result<()> {
        let (name, value) = arg
            .split_once('=')
            .ok_or_else(|| Error::Input(format!("tolerance override \"{arg}\" is not NAME=VALUE")))?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| Error::Input(format!("tolerance override \"{arg}\": bad value")))?;
        self.set(name.trim(), value)
    }

    /// Re-decide a Jacobian verdict with `invertibility`, or with
    /// `fd_invertibility` when its entries are difference quotients.
    pub fn judge(&self, r: JacobianReport) -> JacobianReport {
        let name = if r.from_differences { "fd_invertibility" } else { "invertibility" };
        r.with_tolerance(self.get(name))
    }

    pub fn to_json(&self) -> Value {
        Value::Object(self.0.iter().map(|(k, v)| (k.to_string(), json::real(*v))).collect())
    }
}

/// One scan coordinate, e.g. `a1.re` or `V2.im` (1-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Coordinate {
    A { index: usize, imaginary: bool },
    V { index: usize, imaginary: bool },
}

impl FromStr for Coordinate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Input(format!("bad scan coordinate \"{s}\" (expected a1.re, V2.im, ...)"));
        let (head, part) = s.split_once('.').ok_or_else(bad)?;
        let imaginary = match part {
            "re" => false,
            "im" => true,
            _ => return Err(bad()),
        };
        let (kind, index) = head.split_at(1);
        let index: usize = index.parse().map_err(|_| bad())?;
        if index == 0 {
            return Err(bad());
        }
        match kind {
            "a" => Ok(Coordinate::A { index: index - 1, imaginary }),
            "V" => Ok(Coordinate::V { index: index - 1, imaginary }),
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for Coordinate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (kind, index, imaginary) = match *self {
            Coordinate::A { index, imaginary } => ("a", index, imaginary),
            Coordinate::V { index, imaginary } => ("V", index, imaginary),
        };
        write!(f, "{kind}{}.{}", index + 1, if imaginary { "im" } else { "re" })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub coordinate: Coordinate,
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl Axis {
    pub fn values(&self) -> Vec<f64> {
        match self.count {
            0 => vec![],
            1 => vec![self.min],
            c => (0..c)
                .map(|i| self.min + (self.max - self.min) * i as f64 / (c - 1) as f64)
                .collect(),
        }
    }
}

impl FromStr for Axis {
    type Err = Error;

    /// `COORD=MIN:MAX:COUNT`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Input(format!("bad axis \"{s}\" (expected COORD=MIN:MAX:COUNT)"));
        let (coord, range) = s.split_once('=').ok_or_else(bad)?;
        let parts: Vec<&str> = range.split(':').collect();
        if parts.len() != 3 {
            return Err(bad());
        }
        let min: f64 = parts[0].trim().parse().map_err(|_| bad())?;
        let max: f64 = parts[1].trim().parse().map_err(|_| bad())?;
        let count: usize = parts[2].trim().parse().map_err(|_| bad())?;
        if !(min.is_finite() && max.is_finite()) {
            return Err(bad());
        }
        Ok(Axis {
            coordinate: coord.trim().parse()?,
            min,
            max,
            count,
        })
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub input: PathBuf,
    pub a: Option<Vec<Complex64>>,
    pub b0: Option<Vec<f64>>,
    pub v: Option<Vec<Complex64>>,
    pub tolerances: Tolerances,
    pub seed: u64,
    pub samples: Option<usize>,
    pub output: Option<PathBuf>,
    pub dump: bool,
    pub fourier: bool,
    pub axes: Vec<Axis>,
}

impl RunConfig {
    pub fn new(command: Command, input: impl Into<PathBuf>) -> Self {
        Self {
            command,
            input: input.into(),
            a: None,
            b0: None,
            v: None,
            tolerances: Tolerances::default(),
            seed: DEFAULT_SEED,
            samples: None,
            output: None,
            dump: false,
            fourier: false,
            axes: vec![],
        }
    }

    /// Load a config document. Relative paths resolve against the config's
    /// directory.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Input(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        Self::from_json(&text, base)
    }

    pub fn from_json(text: &str, base: &Path) -> Result<Self> {
        let v: Value = serde_json::from_str(text).map_err(|e| Error::Input(format!("config JSON: {e}")))?;
        let obj = v.as_object().ok_or_else(|| Error::Input("config: expected an object".into()))?;
        const KNOWN: [&str; 12] = [
            "command", "input", "a", "b0", "V", "tolerances", "seed", "samples", "output", "dump", "fourier", "grid",
        ];
        if let Some(k) = obj.keys().find(|k| !KNOWN.contains(&k.as_str())) {
            return Err(Error::Input(format!("config: unknown field \"{k}\"")));
        }
        let string = |key: &str| -> Result<&str> {
            obj.get(key)
                .and_then(Value::as_str)
                .ok_or_else(|| Error::Input(format!("config: missing or invalid \"{key}\"")))
        };
        let command: Command = string("command")?.parse()?;
        let mut config = RunConfig::new(command, base.join(string("input")?));
        if let Some(a) = obj.get("a") {
            config.a = Some(json::parse_complex_list(a, "a")?);
        }
        if let Some(b0) = obj.get("b0") {
            config.b0 = Some(json::parse_real_list(b0, "b0")?);
        }
        if let Some(v) = obj.get("V") {
            config.v = Some(json::parse_complex_list(v, "V")?);
        }
        if let Some(t) = obj.get("tolerances") {
            let t = t.as_object().ok_or_else(|| Error::Input("config: tolerances must be an object".into()))?;
            for (name, value) in t {
                config.tolerances.set(name, json::parse_real(value, name)?)?;
            }
        }
        let count = |key: &str| -> Result<Option<u64>> {
            obj.get(key)
                .map(|v| v.as_u64().ok_or_else(|| Error::Input(format!("config: \"{key}\" must be a non-negative integer"))))
                .transpose()
        };
        if let Some(seed) = count("seed")? {
            config.seed = seed;
        }
        config.samples = count("samples")?.map(|s| s as usize);
        if let Some(out) = obj.get("output") {
            let out = out.as_str().ok_or_else(|| Error::Input("config: output must be a string".into()))?;
            config.output = Some(base.join(out));
        }
        let flag = |key: &str| -> Result<bool> {
            obj.get(key)
                .map(|v| v.as_bool().ok_or_else(|| Error::Input(format!("config: \"{key}\" must be a boolean"))))
                .transpose()
                .map(|b| b.unwrap_or(false))
        };
        config.dump = flag("dump")?;
        config.fourier = flag("fourier")?;
        if let Some(grid) = obj.get("grid") {
            let grid = grid.as_object().ok_or_else(|| Error::Input("config: grid must be an object".into()))?;
            for (coord, range) in grid {
                let r = json::parse_real_list(range, coord)?;
                if r.len() != 3 || r[2] < 0.0 || r[2].fract() != 0.0 {
                    return Err(Error::Input(format!("grid.{coord}: expected [min, max, count]")));
                }
                config.axes.push(Axis {
                    coordinate: coord.parse()?,
                    min: r[0],
                    max: r[1],
                    count: r[2] as usize,
                });
            }
        }
        Ok(config)
    }

    fn samples(&self) -> usize {
        self.samples.unwrap_or(self.command.default_samples())
    }

    fn echo(&self) -> Value {
        let mut m = Map::new();
        m.insert("command".into(), json!(self.command.name()));
        m.insert("input".into(), json!(self.input.display().to_string()));
        m.insert("seed".into(), json!(self.seed));
        m.insert("samples".into(), json!(self.samples()));
        m.insert("dump".into(), json!(self.dump));
        m.insert("fourier".into(), json!(self.fourier));
        if !self.axes.is_empty() {
            m.insert("grid".into(), grid_json(&self.axes));
        }
        Value::Object(m)
    }
}

fn grid_json(axes: &[Axis]) -> Value {
    Value::Array(
        axes.iter()
            .map(|ax| json!({"coordinate": ax.coordinate.to_string(), "min": ax.min, "max": ax.max, "count": ax.count}))
            .collect(),
    )
}

/// Parse a complex vector flag: entries separated by `;`, each `re,im` or
/// `re`. Without `;`, `expected` comma-separated values are read as real
/// components, two values for a length-one vector as one complex number, and a
/// single value is repeated.
pub fn parse_complex_vector(s: &str, expected: usize, what: &str) -> Result<Vec<Complex64>> {
    let bad = |m: String| Error::Input(format!("--{what} \"{s}\": {m}"));
    let number = |t: &str| -> Result<f64> {
        let x: f64 = t.trim().parse().map_err(|_| bad(format!("\"{t}\" is not a number")))?;
        if x.is_finite() {
            Ok(x)
        } else {
            Err(bad("non-finite value".into()))
        }
    };
    let out: Vec<Complex64> = if s.contains(';') {
        s.split(';')
            .filter(|e| !e.trim().is_empty())
            .map(|entry| {
                let parts: Vec<&str> = entry.split(',').collect();
                match parts.as_slice() {
                    [re] => Ok(Complex64::new(number(re)?, 0.0)),
                    [re, im] => Ok(Complex64::new(number(re)?, number(im)?)),
                    _ => Err(bad(format!("entry \"{entry}\" is not re,im"))),
                }
            })
            .collect::<Result<_>>()?
    } else {
        let values: Vec<f64> = s.split(',').map(number).collect::<Result<_>>()?;
        match values.len() {
            k if k == expected => values.into_iter().map(|x| Complex64::new(x, 0.0)).collect(),
            2 if expected == 1 => vec![Complex64::new(values[0], values[1])],
            1 => vec![Complex64::new(values[0], 0.0); expected],
            _ => values.into_iter().map(|x| Complex64::new(x, 0.0)).collect(),
        }
    };
    if out.len() != expected {
        return Err(Error::DimensionMismatch(format!("--{what} has {} entries, expected {expected}", out.len())));
    }
    Ok(out)
}

/// Parse a real vector flag `v1,...,vd`.
pub fn parse_real_vector(s: &str, expected: usize, what: &str) -> Result<Vec<f64>> {
    let values: Vec<f64> = s
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| Error::Input(format!("--{what} \"{s}\": \"{t}\" is not a finite number")))
        })
        .collect::<Result<_>>()?;
    if values.len() != expected {
        return Err(Error::DimensionMismatch(format!(
            "--{what} has {} entries, expected {expected}",
            values.len()
        )));
    }
    Ok(values)
}

/// Result of [`run`]: the exit status and the report document.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub exit_code: i32,
    pub report: Value,
}

impl Outcome {
    /// Pretty-printed report with a trailing newline.
    pub fn render(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.report).expect("reports serialize");
        s.push('\n');
        s
    }
}

pub fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::Input(_) | Error::DimensionMismatch(_) | Error::NonHermitianInput { .. } => EXIT_INPUT,
        _ => EXIT_FAIL,
    }
}

fn error_kind(err: &Error) -> &'static str {
    match err {
        Error::Input(_) | Error::DimensionMismatch(_) | Error::NonHermitianInput { .. } => "InputError",
        Error::InternalInconsistency(_) => "InternalInconsistency",
        Error::PreconditionViolated(_) => "PreconditionViolated",
        _ => "SolverFail",
    }
}

pub fn load_quadric(path: &Path) -> Result<Quadric> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Input(format!("cannot read {}: {e}", path.display())))?;
    json::parse_quadric(&text)
}

/// Parameters resolved against the quadric.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub a: Vec<Complex64>,
    pub b0: Vec<f64>,
    pub v: CVec,
}

/// Fill defaults: `a = 0`, `V = (1, ..., 1)`, `b0` the best candidate of
/// [`Quadric::find_levi_direction`].
pub fn resolve(q: &Quadric, config: &RunConfig) -> Result<Resolved> {
    let a = config.a.clone().unwrap_or_else(|| vec![Complex64::new(0.0, 0.0); q.d()]);
    let v = config.v.clone().unwrap_or_else(|| vec![Complex64::new(1.0, 0.0); q.n()]);
    if a.len() != q.d() {
        return Err(Error::DimensionMismatch(format!("a has {} entries, expected d = {}", a.len(), q.d())));
    }
    if v.len() != q.n() {
        return Err(Error::DimensionMismatch(format!("V has {} entries, expected n = {}", v.len(), q.n())));
    }
    let b0 = match &config.b0 {
        Some(b0) if b0.len() != q.d() => {
            return Err(Error::DimensionMismatch(format!(
                "b0 has {} entries, expected d = {}",
                b0.len(),
                q.d()
            )))
        }
        Some(b0) => b0.clone(),
        None => q.find_levi_direction(LEVI_TRIALS, config.seed)?.b0,
    };
    Ok(Resolved {
        a,
        b0,
        v: CVec::from_vec(v),
    })
}

/// Load, dispatch and assemble the report. Never panics on bad input.
pub fn run(config: &RunConfig) -> Outcome {
    let mut report = Map::new();
    report.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
    report.insert("config".into(), config.echo());
    report.insert("tolerances".into(), config.tolerances.to_json());

    let result = load_quadric(&config.input).and_then(|q| {
        let p = resolve(&q, config)?;
        report.insert(
            "parameters".into(),
            json!({"a": json::complex_list(&p.a), "b0": json::real_list(&p.b0), "V": json::cvec(&p.v)}),
        );
        report.insert("quadric".into(), json!({"n": q.n(), "d": q.d()}));
        dispatch(&q, &p, config)
    });
    let exit_code = match result {
        Ok((pass, body)) => {
            report.insert("result".into(), body);
            report.insert("status".into(), json!(if pass { "pass" } else { "fail" }));
            if pass {
                EXIT_OK
            } else {
                EXIT_FAIL
            }
        }
        Err(err) => {
            log::error!("{err}");
            report.insert("status".into(), json!("error"));
            report.insert("error".into(), json!({"kind": error_kind(&err), "message": err.to_string()}));
            exit_code_for(&err)
        }
    };
    report.insert("exit_code".into(), json!(exit_code));
    Outcome {
        exit_code,
        report: Value::Object(report),
    }
}

type Dispatch = Result<(bool, Value)>;

fn dispatch(q: &Quadric, p: &Resolved, config: &RunConfig) -> Dispatch {
    let tol = &config.tolerances;
    match config.command {
        Command::Check => check(q, p, config),
        Command::SolveX => solve_x(q, p, config),
        Command::Disc => disc_values(q, p, config),
        Command::Verify => verify(q, p, config),
        Command::Jet => jet(q, p, tol),
        Command::Jacobian => jacobian(q, p, tol),
        Command::Center => center(q, p, tol),
        Command::Minimal => minimal(q, p, config),
        Command::Defect => defect(q, p, tol),
        Command::Scan => {
            let result = scan(q, p, config)?;
            let pass = result.violations.is_empty();
            Ok((pass, result.to_json()))
        }
    }
}

fn verdict(r: &JacobianReport, tol: &Tolerances) -> Value {
    json::jacobian(&tol.judge(r.clone()))
}

fn check(q: &Quadric, p: &Resolved, config: &RunConfig) -> Dispatch {
    let (levi, sigma) = q.levi_matrix(&p.b0)?;
    let levi_ok = sigma > config.tolerances.get("invertibility") * q.scale();
    let mut body = Map::new();
    body.insert("b0".into(), json::real_list(&p.b0));
    body.insert("levi_matrix".into(), json::cmat(&levi));
    body.insert("levi_sigma_min".into(), json::real(sigma));
    body.insert("levi_invertible".into(), json!(levi_ok));
    body.insert("scale".into(), json::real(q.scale()));
    if config.v.is_some() {
        body.insert(
            "d_nondegeneracy".into(),
            verdict(&q.d_nondegeneracy(&p.b0, &p.v)?, &config.tolerances),
        );
        body.insert(
            "full_nondegeneracy".into(),
            verdict(&q.full_nondegeneracy(&p.b0, &p.v)?, &config.tolerances),
        );
    }
    if config.dump {
        body.insert("quadric".into(), json::quadric(q));
    }
    Ok((levi_ok, Value::Object(body)))
}

fn solve_x(q: &Quadric, p: &Resolved, config: &RunConfig) -> Dispatch {
    let tol = &config.tolerances;
    let f = PencilFactorization::new(q, &p.a, &p.b0)?;
    let scale = f.scale();
    let residual = f.quadratic_residual();
    let boundary = f.boundary_identity_residual(q, pencil::BOUNDARY_SAMPLES);
    let hermitian = f.factor_hermitian_deviation();
    let sigma_b = linalg::smallest_singular_value(&f.factor);
    let checks = json!({
        "residual": {"value": json::real(residual), "bound": json::real(tol.get("residual") * scale), "pass": residual <= tol.get("residual") * scale},
        "boundary_identity": {"value": json::real(boundary), "bound": json::real(tol.get("boundary") * scale), "samples": pencil::BOUNDARY_SAMPLES, "pass": boundary <= tol.get("boundary") * scale},
        "factor_hermitian": {"value": json::real(hermitian), "bound": json::real(tol.get("hermitian") * scale), "pass": hermitian <= tol.get("hermitian") * scale},
        "factor_invertible": {"value": json::real(sigma_b), "bound": json::real(tol.get("invertibility") * scale), "pass": sigma_b > tol.get("invertibility") * scale},
    });
    let pass = checks.as_object().unwrap().values().all(|c| c["pass"] == json!(true));
    let mut body = Map::new();
    body.insert("X".into(), json::cmat(&f.x));
    body.insert("iterations".into(), json!(f.solution.iterations));
    body.insert("newton_steps".into(), json!(f.solution.newton_steps));
    body.insert("spectral_norm".into(), json::real(f.solution.spectral_norm));
    body.insert("spectral_radius".into(), json::real(linalg::spectral_radius(&f.x)));
    body.insert("scale".into(), json::real(scale));
    body.insert("checks".into(), checks);
    if config.dump {
        body.insert("factorization".into(), json::factorization(&f));
    }
    Ok((pass, Value::Object(body)))
}

fn build(q: &Quadric, p: &Resolved) -> Result<StationaryDisc> {
    StationaryDisc::new(q, DiscParameters::new(p.a.clone(), p.b0.clone(), p.v.clone()))
}

fn pinning(f: &StationaryDisc, tol: &Tolerances) -> Value {
    let r = f.pinning_residual();
    let bound = tol.get("pinning") * f.scale();
    json!({"value": json::real(r), "bound": json::real(bound), "pass": r <= bound})
}

fn disc_values(q: &Quadric, p: &Resolved, config: &RunConfig) -> Dispatch {
    let f = build(q, p)?;
    let samples = config.samples();
    if samples == 0 {
        return Err(Error::Input("samples must be positive".into()));
    }
    let column = |values: &[Vec<num_complex::Complex64>], range: std::ops::Range<usize>| -> Value {
        Value::Array(values[range].iter().map(json::complex_list).collect())
    };
    let (n, d) = (q.n(), q.d());
    let disc = f.disc_boundary_values(samples);
    let lift = f.lift_boundary_values(samples);
    let pin = pinning(&f, &config.tolerances);
    let pass = pin["pass"] == json!(true);
    let mut body = Map::new();
    body.insert("samples".into(), json!(samples));
    body.insert("zeta".into(), json::complex_list(&linalg::roots_of_unity(samples)));
    body.insert("h".into(), column(&disc, 0..n));
    body.insert("g".into(), column(&disc, n..n + d));
    body.insert("h_tilde".into(), column(&lift, 0..n));
    body.insert("g_tilde".into(), column(&lift, n..n + d));
    body.insert("imaginary_constants".into(), json::complex_list(f.imaginary_constants()));
    body.insert("pinning".into(), pin);
    if config.fourier {
        let table = disc::FourierTable::from_boundary_values(&lift);
        let modes: Vec<isize> = (0..table.samples).map(|k| disc::mode_index(k, table.samples)).collect();
        let comps: Vec<Value> = (0..lift.len())
            .map(|c| Value::Array(modes.iter().map(|m| json::complex(table.coefficient(c, *m))).collect()))
            .collect();
        body.insert(
            "fourier".into(),
            json!({"modes": modes, "layout": "rows: h~_1..h~_n then g~_1..g~_d; columns follow modes", "coefficients": comps}),
        );
    }
    if config.dump {
        body.insert("factorization".into(), json::factorization(f.factorization()));
    }
    Ok((pass, Value::Object(body)))
}

/// Power of two used for the Fourier test, at least twice the sample count.
pub fn holomorphy_samples(samples: usize) -> usize {
    (2 * samples).max(128).next_power_of_two()
}

fn verify(q: &Quadric, p: &Resolved, config: &RunConfig) -> Dispatch {
    let tol = &config.tolerances;
    let f = build(q, p)?;
    let samples = config.samples().max(8);
    let att = f.verify_attachment(samples)?;
    let att_bound = tol.get("attachment") * f.scale();
    let hol = f.verify_lift_holomorphic(holomorphy_samples(samples))?;
    let hol_bound = tol.get("fourier") * hol.max_coefficient;
    let pin = pinning(&f, tol);
    let checks = json!({
        "attachment": {"samples": att.samples, "max_residual": json::real(att.max_residual), "bound": json::real(att_bound), "pass": att.max_residual <= att_bound},
        "holomorphy": {"samples": hol.samples, "max_negative": json::real(hol.max_negative), "max_coefficient": json::real(hol.max_coefficient), "bound": json::real(hol_bound), "pass": hol.max_negative <= hol_bound},
        "pinning": pin,
    });
    let pass = checks.as_object().unwrap().values().all(|c| c["pass"] == json!(true));
    let mut body = Map::new();
    body.insert("checks".into(), checks);
    if config.dump {
        body.insert("factorization".into(), json::factorization(f.factorization()));
    }
    Ok((pass, Value::Object(body)))
}

fn jet(q: &Quadric, p: &Resolved, tol: &Tolerances) -> Dispatch {
    let f = build(q, p)?;
    let exact = jets::jet1(&f);
    let numeric = jets::jet1_numeric(&f, JET_STEP)?;
    let distance = exact.relative_distance(&numeric);
    let pass = distance <= tol.get("jet");
    let (_, block, im_a) = jets::normalized_jet(q, &p.a, &p.b0, &p.v)?;
    let jet_json = |j: &jets::Jet1| json!({"h": json::cvec(&j.h), "g": json::complex_list(&j.g), "g_tilde": json::complex_list(&j.g_tilde)});
    Ok((
        pass,
        json!({
            "jet": jet_json(&exact),
            "numeric": jet_json(&numeric),
            "numeric_step": JET_STEP,
            "relative_distance": json::real(distance),
            "pass": pass,
            "normalized": {"V": json::cvec(&p.v), "quadratic_block": json::real_list(&block), "im_a": json::real_list(&im_a)},
        }),
    ))
}

fn jacobian(q: &Quadric, p: &Resolved, tol: &Tolerances) -> Dispatch {
    let analytic = tol.judge(jets::jet_map_jacobian(q, &p.a, &p.b0, &p.v)?);
    let numeric = tol.judge(jets::jet_map_jacobian_fd(q, &p.a, &p.b0, &p.v)?);
    let necessity = jets::necessity_check(q, &p.a, &p.b0, &p.v)?;
    let agree = analytic.invertible == numeric.invertible;
    let mut body = Map::new();
    body.insert("verdict".into(), json!(if analytic.invertible { "invertible" } else { "singular" }));
    body.insert("analytic".into(), json::jacobian(&analytic));
    body.insert("finite_difference".into(), json::jacobian(&numeric));
    body.insert("verdicts_agree".into(), json!(agree));
    body.insert(
        "necessity".into(),
        json!({"minimal": necessity.minimality.minimal, "rank_sigma_min": json::real(necessity.minimality.rank_sigma_min), "consistent": necessity.consistent()}),
    );
    Ok((necessity.consistent(), Value::Object(body)))
}

fn center(q: &Quadric, p: &Resolved, tol: &Tolerances) -> Dispatch {
    let f = build(q, p)?;
    let (v, g) = jets::center_map(&f);
    let analytic = tol.judge(jets::center_jacobian(q, &p.a, &p.b0, &p.v)?);
    let numeric = tol.judge(jets::center_jacobian_fd(q, &p.a, &p.b0, &p.v)?);
    Ok((
        true,
        json!({
            "center": {"h": json::cvec(&v), "g": json::complex_list(&g)},
            "verdict": if analytic.invertible { "invertible" } else { "singular" },
            "analytic": json::jacobian(&analytic),
            "finite_difference": json::jacobian(&numeric),
            "verdicts_agree": analytic.invertible == numeric.invertible,
        }),
    ))
}

/// Gram verdict re-decided against the `minimality` tolerance.
fn gram_minimal(c: &minimality::MinimalityCertificate, tol: &Tolerances) -> bool {
    let scale = c.gram_threshold / minimality::MINIMALITY_TOL;
    c.gram_min_eigenvalue > tol.get("minimality") * scale
}

fn minimal(q: &Quadric, p: &Resolved, config: &RunConfig) -> Dispatch {
    let tol = &config.tolerances;
    let f = PencilFactorization::new(q, &p.a, &p.b0)?;
    let cert = minimality::is_stationary_minimal(q, &f.x, &p.v)?;
    let eq = minimality::minimality_equivalences(q, &p.a, &p.b0, &p.v)?;
    let orbit = minimality::orbit_basis(&f.x, &p.v);
    let u = (linalg::identity(q.n()) - &f.x) * &p.v;
    let orbit_u = minimality::orbit_basis(&f.x, &u);
    let is_minimal = gram_minimal(&cert, tol);
    let mut body = Map::new();
    body.insert("minimal".into(), json!(is_minimal));
    body.insert("certificate".into(), json::certificate(&cert));
    body.insert("orbit".into(), json::orbit(&orbit));
    body.insert("orbit_dimension_of_(I-X)V".into(), json!(orbit_u.real_dimension));
    body.insert(
        "equivalences".into(),
        json!({"nondefective": eq.nondefective, "minimal_at_h0": eq.minimal_at_h0, "minimal_at_dh0": eq.minimal_at_dh0, "minimal_at_dh1": eq.minimal_at_dh1, "borderline": eq.borderline, "agree": eq.all_agree()}),
    );
    if cert.minimal {
        let probe = minimality::openness_probe(q, &p.a, &p.b0, &p.v, OPENNESS_RADIUS, OPENNESS_PROBES, config.seed)?;
        body.insert(
            "openness".into(),
            json!({"radius": OPENNESS_RADIUS, "probes": probe.probes, "minimal": probe.minimal, "solver_failures": probe.solver_failures, "fraction": json::real(probe.fraction)}),
        );
    }
    let consistent = orbit.real_dimension == orbit_u.real_dimension && (eq.all_agree() || eq.borderline);
    Ok((consistent, Value::Object(body)))
}

fn defect(q: &Quadric, p: &Resolved, tol: &Tolerances) -> Dispatch {
    let f = build(q, p)?;
    let r = minimality::is_defective(&f)?;
    let witness_ok = r.witness.as_ref().is_none_or(|w| {
        let bound = tol.get("witness") * f.scale();
        w.boundary_residual <= bound && w.max_fourier_coefficient <= bound
    });
    let mut body = json::defect(&r);
    body["witness_verified"] = json!(witness_ok);
    Ok((witness_ok, body))
}

/// Outcome at one grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanRecord {
    pub index: usize,
    pub a: Vec<Complex64>,
    pub v: Vec<Complex64>,
    pub outcome: std::result::Result<PointVerdict, String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointVerdict {
    pub jet_sigma_min: f64,
    pub jet_invertible: bool,
    pub center_sigma_min: f64,
    pub center_invertible: bool,
    pub minimal: bool,
    pub defective: bool,
    /// Invertible jet Jacobian at a point whose orbit data has a real kernel.
    pub necessity_violated: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanResult {
    pub axes: Vec<Axis>,
    pub records: Vec<ScanRecord>,
    pub violations: Vec<usize>,
}

impl ScanResult {
    pub fn nondefective(&self) -> usize {
        self.verdicts().filter(|v| !v.defective).count()
    }

    pub fn jet_invertible(&self) -> usize {
        self.verdicts().filter(|v| v.jet_invertible).count()
    }

    pub fn center_invertible(&self) -> usize {
        self.verdicts().filter(|v| v.center_invertible).count()
    }

    pub fn failures(&self) -> usize {
        self.records.iter().filter(|r| r.outcome.is_err()).count()
    }

    fn verdicts(&self) -> impl Iterator<Item = &PointVerdict> {
        self.records.iter().filter_map(|r| r.outcome.as_ref().ok())
    }

    pub fn to_json(&self) -> Value {
        let points: Vec<Value> = self
            .records
            .iter()
            .map(|r| {
                let mut m = Map::new();
                m.insert("index".into(), json!(r.index));
                m.insert("a".into(), json::complex_list(&r.a));
                m.insert("V".into(), json::complex_list(&r.v));
                match &r.outcome {
                    Ok(v) => {
                        m.insert("jet_sigma_min".into(), json::real(v.jet_sigma_min));
                        m.insert("jet_invertible".into(), json!(v.jet_invertible));
                        m.insert("center_sigma_min".into(), json::real(v.center_sigma_min));
                        m.insert("center_invertible".into(), json!(v.center_invertible));
                        m.insert("minimal".into(), json!(v.minimal));
                        m.insert("defective".into(), json!(v.defective));
                    }
                    Err(e) => {
                        m.insert("error".into(), json!(e));
                    }
                }
                Value::Object(m)
            })
            .collect();
        json!({
            "grid": grid_json(&self.axes),
            "order": "row-major over the grid axes, first axis slowest",
            "points": points,
            "summary": {
                "points": self.records.len(),
                "failures": self.failures(),
                "nondefective": self.nondefective(),
                "jet_invertible": self.jet_invertible(),
                "center_invertible": self.center_invertible(),
                "necessity_violations": self.violations.len(),
            },
            "violations": self.violations,
        })
    }
}

fn evaluate_point(q: &Quadric, a: &[Complex64], b0: &[f64], v: &CVec, tol: &Tolerances) -> Result<PointVerdict> {
    let f = StationaryDisc::new(q, DiscParameters::new(a.to_vec(), b0.to_vec(), v.clone()))?;
    let necessity = jets::necessity_check(q, a, b0, v)?;
    let jet = tol.judge(necessity.jet);
    let center = tol.judge(jets::center_jacobian(q, a, b0, v)?);
    let defect = minimality::is_defective(&f)?;
    Ok(PointVerdict {
        jet_sigma_min: jet.sigma_min(),
        jet_invertible: jet.invertible,
        center_sigma_min: center.sigma_min(),
        center_invertible: center.invertible,
        minimal: necessity.minimality.minimal,
        defective: defect.defective,
        necessity_violated: jet.invertible && !necessity.minimality.rank_minimal,
    })
}

/// Evaluate every grid point. Axes are sorted into coordinate order
/// (`a` before `V`, by index, real part first) and traversed row-major with
/// the first axis slowest; coordinates without an axis keep their value from
/// `base`. Points
/// run in parallel and are reassembled in grid order.
pub fn scan(q: &Quadric, base: &Resolved, config: &RunConfig) -> Result<ScanResult> {
    let mut axes = config.axes.clone();
    axes.sort_by_key(|ax| ax.coordinate);
    for ax in &axes {
        let (index, bound, name) = match ax.coordinate {
            Coordinate::A { index, .. } => (index, q.d(), "d"),
            Coordinate::V { index, .. } => (index, q.n(), "n"),
        };
        if index >= bound {
            return Err(Error::DimensionMismatch(format!("axis {} exceeds {name} = {bound}", ax.coordinate)));
        }
    }
    for (i, ax) in axes.iter().enumerate() {
        if axes[..i].iter().any(|b| b.coordinate == ax.coordinate) {
            return Err(Error::Input(format!("axis {} listed twice", ax.coordinate)));
        }
    }
    let values: Vec<Vec<f64>> = axes.iter().map(Axis::values).collect();
    let total: usize = if axes.is_empty() { 0 } else { values.iter().map(Vec::len).product() };
    let points: Vec<(Vec<Complex64>, Vec<Complex64>)> = (0..total)
        .map(|flat| {
            let mut a = base.a.clone();
            let mut v: Vec<Complex64> = base.v.iter().copied().collect();
            let mut rest = flat;
            for (ax, vals) in axes.iter().zip(&values).rev() {
                let x = vals[rest % vals.len()];
                rest /= vals.len();
                let (slot, imaginary) = match ax.coordinate {
                    Coordinate::A { index, imaginary } => (&mut a[index], imaginary),
                    Coordinate::V { index, imaginary } => (&mut v[index], imaginary),
                };
                if imaginary {
                    slot.im = x;
                } else {
                    slot.re = x;
                }
            }
            (a, v)
        })
        .collect();
    let tol = &config.tolerances;
    let records: Vec<ScanRecord> = points
        .into_par_iter()
        .enumerate()
        .map(|(index, (a, v))| {
            let outcome = evaluate_point(q, &a, &base.b0, &CVec::from_vec(v.clone()), tol).map_err(|e| e.to_string());
            ScanRecord { index, a, v, outcome }
        })
        .collect();
    let violations: Vec<usize> = records
        .iter()
        .filter(|r| matches!(&r.outcome, Ok(v) if v.necessity_violated))
        .map(|r| r.index)
        .collect();
    if !violations.is_empty() {
        log::error!("necessity violated at grid points {violations:?}");
    }
    Ok(ScanResult {
        axes,
        records,
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;

    #[test]
    fn command_names_round_trip() {
        for cmd in Command::ALL {
            assert_eq!(cmd.name().parse::<Command>().unwrap(), cmd);
        }
        assert!("solve".parse::<Command>().is_err());
    }

    #[test]
    fn complex_vector_flags() {
        assert_eq!(parse_complex_vector("0.1", 1, "a").unwrap(), vec![c(0.1, 0.0)]);
        assert_eq!(parse_complex_vector("0.1,0.2", 1, "a").unwrap(), vec![c(0.1, 0.2)]);
        assert_eq!(parse_complex_vector("1,0", 2, "V").unwrap(), vec![c(1.0, 0.0), c(0.0, 0.0)]);
        assert_eq!(parse_complex_vector("0", 2, "a").unwrap(), vec![c(0.0, 0.0); 2]);
        assert_eq!(
            parse_complex_vector("1,2;3", 2, "V").unwrap(),
            vec![c(1.0, 2.0), c(3.0, 0.0)]
        );
        assert_eq!(parse_complex_vector("1,2;", 1, "V").unwrap(), vec![c(1.0, 2.0)]);
        assert!(matches!(parse_complex_vector("1,2,3", 2, "V"), Err(Error::DimensionMismatch(_))));
        assert!(matches!(parse_complex_vector("x", 1, "V"), Err(Error::Input(_))));
        assert!(matches!(parse_complex_vector("1,2,3;4", 2, "V"), Err(Error::Input(_))));
        assert!(matches!(parse_complex_vector("inf", 1, "V"), Err(Error::Input(_))));
    }

    #[test]
    fn real_vector_flags() {
        assert_eq!(parse_real_vector("1, 0", 2, "b0").unwrap(), vec![1.0, 0.0]);
        assert!(parse_real_vector("1", 2, "b0").is_err());
        assert!(parse_real_vector("nan", 1, "b0").is_err());
    }

    #[test]
    fn tolerance_overrides() {
        let mut t = Tolerances::default();
        t.apply("attachment=1e-8").unwrap();
        assert_eq!(t.get("attachment"), 1e-8);
        assert!(t.apply("bogus=1").is_err());
        assert!(t.apply("attachment=-1").is_err());
        assert!(t.apply("attachment").is_err());
    }

    #[test]
    fn axes_and_coordinates() {
        let ax: Axis = "a1.re=-0.05:0.05:5".parse().unwrap();
        assert_eq!(ax.coordinate, Coordinate::A { index: 0, imaginary: false });
        let vals = ax.values();
        assert_eq!(vals.len(), 5);
        assert_eq!((vals[0], vals[4]), (-0.05, 0.05));
        assert!("b1.re=0:1:2".parse::<Axis>().is_err());
        assert!("a0.re=0:1:2".parse::<Axis>().is_err());
        assert_eq!("V2.im".parse::<Coordinate>().unwrap().to_string(), "V2.im");
        let single = Axis { coordinate: Coordinate::V { index: 0, imaginary: true }, min: 0.3, max: 9.0, count: 1 };
        assert_eq!(single.values(), vec![0.3]);
    }

    #[test]
    fn config_documents() {
        let text = r#"{"command": "scan", "input": "q.json", "a": [[0.1, 0]], "V": [1],
                       "tolerances": {"attachment": 1e-9}, "seed": 3,
                       "grid": {"a1.re": [-0.05, 0.05, 5]}}"#;
        let cfg = RunConfig::from_json(text, Path::new("dir")).unwrap();
        assert_eq!(cfg.command, Command::Scan);
        assert_eq!(cfg.input, PathBuf::from("dir/q.json"));
        assert_eq!(cfg.a, Some(vec![c(0.1, 0.0)]));
        assert_eq!(cfg.seed, 3);
        assert_eq!(cfg.tolerances.get("attachment"), 1e-9);
        assert_eq!(cfg.axes.len(), 1);
        assert!(RunConfig::from_json(r#"{"command": "check", "input": "q", "extra": 1}"#, Path::new("")).is_err());
        assert!(RunConfig::from_json(r#"{"command": "nope", "input": "q"}"#, Path::new("")).is_err());
    }
}
