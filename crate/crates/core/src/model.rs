//! The 2x2 operator matrix, its structural checks, the degeneracy function Δ and
//! the principal-symbol determinant.
//!
//! The matrix acts on pairs (u, v) as
//!
//! ```text
//! [ Σ a_j D^j   Σ b_j D^j ]
//! [ Σ c_j D^j   d         ]      with D = -i d/dx.
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::config::Settings;
use crate::expr::{parse, EvalError, Expr, ParseError, Var};

/// Smallest |a_m| on the grid for which Assumption A counts as satisfied.
pub const LEADING_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid operator structure: {0}")]
pub struct StructureError(pub String);

#[derive(Clone, Debug, PartialEq)]
pub struct OperatorMatrix {
    a: Vec<Expr>,
    b: Vec<Expr>,
    c: Vec<Expr>,
    d: Expr,
}

impl OperatorMatrix {
    /// Orders are read off the list lengths: `m = a.len() - 1` and so on.
    pub fn new(a: Vec<Expr>, b: Vec<Expr>, c: Vec<Expr>, d: Expr) -> Result<OperatorMatrix, StructureError> {
        let op = OperatorMatrix { a, b, c, d };
        op.check_structure()?;
        Ok(op)
    }

    /// Convenience constructor from expression strings.
    pub fn parse(a: &[&str], b: &[&str], c: &[&str], d: &str) -> Result<OperatorMatrix, ConfigError> {
        let list = |name: char, src: &[&str]| -> Result<Vec<Expr>, ConfigError> {
            src.iter()
                .enumerate()
                .map(|(j, s)| parse_key(&format!("{name}{j}"), s))
                .collect()
        };
        Ok(OperatorMatrix::new(list('a', a)?, list('b', b)?, list('c', c)?, parse_key("d", d)?)?)
    }

    pub fn check_structure(&self) -> Result<(), StructureError> {
        if self.a.is_empty() || self.b.is_empty() || self.c.is_empty() {
            return Err(StructureError("a, b and c need at least one coefficient each".into()));
        }
        let (m, n, k) = (self.m(), self.n(), self.k());
        if m != n + k {
            return Err(StructureError(format!("m = {m} differs from n + k = {}", n + k)));
        }
        if m == 0 || m % 2 == 1 {
            return Err(StructureError(format!("m = {m} must be a positive even integer")));
        }
        let named = self.named_coefficients();
        if let Some((name, _)) = named.iter().find(|(_, e)| e.depends_on(Var::Lambda)) {
            return Err(StructureError(format!("coefficient {name} depends on lambda")));
        }
        Ok(())
    }

    pub fn m(&self) -> usize {
        self.a.len() - 1
    }

    pub fn n(&self) -> usize {
        self.b.len() - 1
    }

    pub fn k(&self) -> usize {
        self.c.len() - 1
    }

    pub fn a(&self) -> &[Expr] {
        &self.a
    }

    pub fn b(&self) -> &[Expr] {
        &self.b
    }

    pub fn c(&self) -> &[Expr] {
        &self.c
    }

    pub fn d(&self) -> &Expr {
        &self.d
    }

    pub fn a_m(&self) -> &Expr {
        &self.a[self.m()]
    }

    pub fn b_n(&self) -> &Expr {
        &self.b[self.n()]
    }

    pub fn c_k(&self) -> &Expr {
        &self.c[self.k()]
    }

    /// `(name, expr)` for every coefficient in the order a0.., b0.., c0.., d.
    pub fn named_coefficients(&self) -> Vec<(String, &Expr)> {
        let mut out = Vec::new();
        for (name, list) in [('a', &self.a), ('b', &self.b), ('c', &self.c)] {
            out.extend(list.iter().enumerate().map(|(j, e)| (format!("{name}{j}"), e)));
        }
        out.push(("d".to_string(), &self.d));
        out
    }

    /// True when no coefficient mentions `x`.
    pub fn is_constant(&self) -> bool {
        self.named_coefficients().iter().all(|(_, e)| !e.depends_on(Var::X))
    }

    /// Δ = d − b_n c_k / a_m, simplified.
    pub fn delta(&self) -> Expr {
        (&self.d - self.b_n() * self.c_k() / self.a_m()).simplify()
    }

    /// a_m ξ^m (d − λ) − b_n c_k ξ^(n+k), the determinant of the principal symbol matrix.
    pub fn dn_determinant(&self, x: f64, xi: f64, lambda: Complex64) -> Result<Complex64, EvalError> {
        let zero = Complex64::new(0.0, 0.0);
        let am = self.a_m().eval(x, zero)?;
        let d = self.d.eval(x, zero)?;
        let bc = self.b_n().eval(x, zero)? * self.c_k().eval(x, zero)?;
        let xm = xi.powi(self.m() as i32);
        Ok(am * xm * (d - lambda) - bc * xi.powi((self.n() + self.k()) as i32))
    }

    /// Checks Assumption A on `grid` and warns when the coupling b_n c_k vanishes there.
    pub fn validate(&self, grid: &[f64]) -> Result<Diagnostics, StructureError> {
        self.check_structure()?;
        let mut diag = Diagnostics::default();
        if grid.is_empty() {
            diag.push(Record::new(Assumption::A, Status::Inconclusive).note("empty grid"));
            return Ok(diag);
        }
        let zero = Complex64::new(0.0, 0.0);
        let mut worst: Option<(f64, f64)> = None;
        let mut failure: Option<(f64, EvalError)> = None;
        let mut coupling = 0.0f64;
        for &x in grid {
            match self.a_m().eval(x, zero) {
                Ok(v) => {
                    if worst.is_none_or(|(_, w)| v.norm() < w) {
                        worst = Some((x, v.norm()));
                    }
                }
                Err(e) => {
                    failure.get_or_insert((x, e));
                }
            }
            if let (Ok(b), Ok(c)) = (self.b_n().eval(x, zero), self.c_k().eval(x, zero)) {
                coupling = coupling.max((b * c).norm());
            }
        }
        let record = if let Some((x, e)) = failure {
            Record::new(Assumption::A, Status::Fail)
                .witness(Witness::at_x(x, f64::NAN))
                .note(&format!("a_m cannot be evaluated: {e}"))
        } else {
            let (x, min) = worst.expect("grid is non-empty");
            let status = if min > LEADING_FLOOR { Status::Pass } else { Status::Fail };
            Record::new(Assumption::A, status)
                .witness(Witness::at_x(x, min))
                .note("sampled evidence: min |a_m| over the validation grid")
        };
        diag.push(record);
        if coupling == 0.0 {
            diag.warn("b_n * c_k vanishes on the grid; Δ reduces to d");
        }
        Ok(diag)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Assumption {
    A,
    B1,
    B2,
    B3,
    C,
    D,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Inconclusive,
}

/// Where a check was decided and the value that decided it.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Witness {
    pub x: Option<f64>,
    pub lambda: Option<Complex64>,
    pub quantity: f64,
}

impl Witness {
    pub fn at_x(x: f64, quantity: f64) -> Witness {
        Witness { x: Some(x), lambda: None, quantity }
    }

    pub fn at_lambda(lambda: Complex64, quantity: f64) -> Witness {
        Witness { x: None, lambda: Some(lambda), quantity }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Record {
    pub assumption: Assumption,
    pub status: Status,
    /// Spectral parameter the check was run at, for λ-dependent assumptions.
    pub probe: Option<Complex64>,
    pub witness: Option<Witness>,
    pub theta: Option<f64>,
    pub delta: Option<f64>,
    pub note: String,
}

impl Record {
    pub fn new(assumption: Assumption, status: Status) -> Record {
        Record {
            assumption,
            status,
            probe: None,
            witness: None,
            theta: None,
            delta: None,
            note: String::new(),
        }
    }

    pub fn probe(mut self, lambda: Complex64) -> Record {
        self.probe = Some(lambda);
        self
    }

    pub fn witness(mut self, w: Witness) -> Record {
        self.witness = Some(w);
        self
    }

    pub fn note(mut self, note: &str) -> Record {
        self.note = note.to_string();
        self
    }

    pub fn sector(mut self, theta: f64, delta: f64) -> Record {
        self.theta = Some(theta);
        self.delta = Some(delta);
        self
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Diagnostics {
    pub records: Vec<Record>,
    pub warnings: Vec<String>,
}

impl Diagnostics {
    pub fn push(&mut self, r: Record) {
        debug_assert!(r.status == Status::Pass || r.witness.is_some() || !r.note.is_empty());
        self.records.push(r);
    }

    pub fn warn(&mut self, msg: &str) {
        log::warn!("{msg}");
        self.warnings.push(msg.to_string());
    }

    pub fn extend(&mut self, other: Diagnostics) {
        self.records.extend(other.records);
        self.warnings.extend(other.warnings);
    }

    pub fn has_failures(&self) -> bool {
        self.records.iter().any(|r| r.status == Status::Fail)
    }

    pub fn status_of(&self, a: Assumption) -> Vec<Status> {
        self.records.iter().filter(|r| r.assumption == a).map(|r| r.status).collect()
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed operator file: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("key {key}: {source}")]
    Expr { key: String, source: ParseError },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Structure(#[from] StructureError),
}

fn parse_key(key: &str, src: &str) -> Result<Expr, ConfigError> {
    parse(src).map_err(|source| ConfigError::Expr { key: key.to_string(), source })
}

/// An operator together with the settings block of its file.
#[derive(Clone, Debug)]
pub struct OperatorFile {
    pub op: OperatorMatrix,
    pub settings: Settings,
}

impl OperatorFile {
    pub fn load(path: &Path) -> Result<OperatorFile, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        OperatorFile::from_toml(&text)
    }

    /// Reads keys `m, n, k`, `a0..am`, `b0..bn`, `c0..ck`, `d` and an optional
    /// `[settings]` table. Any other key is an error.
    pub fn from_toml(text: &str) -> Result<OperatorFile, ConfigError> {
        let mut table: BTreeMap<String, toml::Value> = toml::from_str(text)?;
        let order = |table: &mut BTreeMap<String, toml::Value>, key: &str| -> Result<usize, ConfigError> {
            match table.remove(key) {
                Some(toml::Value::Integer(v)) if v >= 0 => Ok(v as usize),
                Some(other) => Err(ConfigError::Invalid(format!("key {key}: expected a non-negative integer, got {other}"))),
                None => Err(ConfigError::Invalid(format!("missing key {key}"))),
            }
        };
        let (m, n, k) = (order(&mut table, "m")?, order(&mut table, "n")?, order(&mut table, "k")?);
        if m != n + k {
            return Err(StructureError(format!("m = {m} differs from n + k = {}", n + k)).into());
        }
        if m == 0 || m % 2 == 1 {
            return Err(StructureError(format!("m = {m} must be a positive even integer")).into());
        }
        let mut coeff = |key: String| -> Result<Expr, ConfigError> {
            match table.remove(&key) {
                Some(toml::Value::String(s)) => parse_key(&key, &s),
                Some(toml::Value::Integer(v)) => Ok(Expr::real(v as f64)),
                Some(toml::Value::Float(v)) => Ok(Expr::real(v)),
                Some(other) => Err(ConfigError::Invalid(format!("key {key}: expected an expression, got {other}"))),
                None => Err(ConfigError::Invalid(format!("missing key {key}"))),
            }
        };
        let a = (0..=m).map(|j| coeff(format!("a{j}"))).collect::<Result<Vec<_>, _>>()?;
        let b = (0..=n).map(|j| coeff(format!("b{j}"))).collect::<Result<Vec<_>, _>>()?;
        let c = (0..=k).map(|j| coeff(format!("c{j}"))).collect::<Result<Vec<_>, _>>()?;
        let d = coeff("d".to_string())?;
        let settings = match table.remove("settings") {
            Some(v) => v.try_into::<Settings>()?,
            None => Settings::default(),
        };
        if let Some(key) = table.keys().next() {
            return Err(ConfigError::Invalid(format!("unknown key {key}")));
        }
        settings.check().map_err(ConfigError::Invalid)?;
        Ok(OperatorFile { op: OperatorMatrix::new(a, b, c, d)?, settings })
    }
}
