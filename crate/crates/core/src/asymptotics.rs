//! Limits at ±∞: the normalized Schur coefficients p_j/p_m, limit points of d,
//! and the sampled checks of the λ-dependent assumptions.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::config::Settings;
use crate::expr::{EvalError, Expr, Tape, Var, XFrame};
use crate::geometry::polyline_distance;
use crate::model::{Assumption, Diagnostics, OperatorMatrix, Record, Status, Witness};
use crate::schur::SchurSymbol;

/// Increments needed in a row before a sequence counts as converged.
pub const STREAK: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Side {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

impl Side {
    pub const BOTH: [Side; 2] = [Side::Plus, Side::Minus];

    pub fn sign(self) -> f64 {
        match self {
            Side::Plus => 1.0,
            Side::Minus => -1.0,
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Plus => "+",
            Side::Minus => "-",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LimitStatus {
    Converged,
    NotConvergent,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Certificate {
    pub samples: usize,
    pub last_increment: f64,
    /// Index t of the increment |r(x_{t+1}) − r(x_t)| that completed the streak.
    pub converged_at: Option<usize>,
    pub status: LimitStatus,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LimitError {
    #[error("limit of component {index} did not settle: last increment {increment:e} at x = {x:e}")]
    NotConvergent { index: usize, x: f64, increment: f64 },
    #[error("evaluation failed at x = {x:e}: {error}")]
    Eval { x: f64, error: EvalError },
}

/// Sample abscissae ±x0·ρ^t, t = 0..=T.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sampling {
    pub x0: f64,
    pub rho: f64,
    pub t_max: usize,
    pub tol: f64,
}

impl Sampling {
    pub fn from_settings(s: &Settings) -> Sampling {
        Sampling { x0: s.x0, rho: s.rho, t_max: s.t_max, tol: s.limit_tol }
    }

    pub fn points(&self, side: Side) -> Vec<f64> {
        (0..=self.t_max).map(|t| side.sign() * self.x0 * self.rho.powi(t as i32)).collect()
    }

    /// Same schedule started from a different x0, for independent re-checks.
    pub fn reseeded(&self, factor: f64) -> Sampling {
        Sampling { x0: self.x0 * factor, ..*self }
    }
}

/// Runs the increment test on a vector-valued sequence.
///
/// `eval(t, out)` writes the sequence values at sample t. Each component is
/// frozen once it has had [`STREAK`] consecutive increments within
/// `tol·(1+|r|)`; the call returns when all components are frozen.
pub fn sequence_limit<F>(
    width: usize,
    xs: &[f64],
    tol: f64,
    mut eval: F,
) -> Result<(Vec<Complex64>, Vec<Certificate>), LimitError>
where
    F: FnMut(usize, &mut [Complex64]) -> Result<(), EvalError>,
{
    let zero = Complex64::new(0.0, 0.0);
    let mut prev = vec![zero; width];
    let mut cur = vec![zero; width];
    let mut value = vec![zero; width];
    let mut streak = vec![0usize; width];
    let mut last_inc = vec![f64::INFINITY; width];
    let mut done: Vec<Option<usize>> = vec![None; width];
    let mut remaining = width;
    for (t, &x) in xs.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        if let Err(error) = eval(t, &mut cur) {
            if t > 0 {
                if let Some(index) = done.iter().position(|d| d.is_none()) {
                    if !matches!(error, EvalError::Pole) {
                        return Err(LimitError::NotConvergent { index, x, increment: last_inc[index] });
                    }
                }
            }
            return Err(LimitError::Eval { x, error });
        }
        if t > 0 {
            for j in 0..width {
                if done[j].is_some() {
                    continue;
                }
                let inc = (cur[j] - prev[j]).norm();
                last_inc[j] = inc;
                if inc <= tol * (1.0 + cur[j].norm()) {
                    streak[j] += 1;
                } else {
                    streak[j] = 0;
                }
                if streak[j] >= STREAK {
                    done[j] = Some(t - 1);
                    value[j] = cur[j];
                    remaining -= 1;
                }
            }
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    if let Some(index) = done.iter().position(|d| d.is_none()) {
        return Err(LimitError::NotConvergent { index, x: *xs.last().unwrap_or(&0.0), increment: last_inc[index] });
    }
    let certs = done
        .iter()
        .zip(&last_inc)
        .map(|(d, &inc)| Certificate {
            samples: d.map_or(xs.len(), |t| t + 2),
            last_increment: inc,
            converged_at: *d,
            status: LimitStatus::Converged,
        })
        .collect();
    Ok((value, certs))
}

/// Estimated p_j^±(λ) together with their certificates.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LimitProfile {
    pub side: Side,
    pub lambda: Complex64,
    /// p_0^±(λ) .. p_{m−1}^±(λ).
    pub values: Vec<Complex64>,
    pub certificates: Vec<Certificate>,
}

impl LimitProfile {
    pub fn m(&self) -> usize {
        self.values.len()
    }

    /// P_λ(ξ) = ξ^m + Σ p_j ξ^j.
    pub fn poly_eval(&self, xi: f64) -> Complex64 {
        let lead = Complex64::new(xi.powi(self.m() as i32), 0.0);
        lead + self.values.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * xi + c)
    }

    /// 1 + |ξ|^m + Σ |p_j||ξ|^j, the natural size of [`LimitProfile::poly_eval`].
    pub fn poly_scale(&self, xi: f64) -> f64 {
        let a = xi.abs();
        1.0 + a.powi(self.m() as i32) + self.values.iter().rev().fold(0.0, |acc, c| acc * a + c.norm())
    }
}

/// Evaluates p_j/p_m at ±x0·ρ^t with the λ-independent work cached per sample.
pub struct LimitEstimator {
    tape: Tape,
    side: Side,
    sampling: Sampling,
    xs: Vec<f64>,
    frames: Vec<XFrame>,
}

impl LimitEstimator {
    pub fn new(symbol: &SchurSymbol, side: Side, sampling: Sampling) -> LimitEstimator {
        let tape = symbol.tape().clone();
        let xs = sampling.points(side);
        let frames = xs.iter().map(|&x| tape.bind_x(x)).collect();
        LimitEstimator { tape, side, sampling, xs, frames }
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn sampling(&self) -> Sampling {
        self.sampling
    }

    /// Limits of p_j(x, λ)/p_m(x, λ) for j < m.
    pub fn ratios(&self, lambda: Complex64) -> Result<LimitProfile, LimitError> {
        let width = self.tape.num_outputs();
        let m = width - 1;
        let mut scratch = Vec::new();
        let mut p = vec![Complex64::new(0.0, 0.0); width];
        let (values, certificates) = sequence_limit(m, &self.xs, self.sampling.tol, |t, out| {
            self.tape.eval_frame(&self.frames[t], lambda, &mut scratch, &mut p)?;
            let pm = p[m];
            if pm.norm() < crate::expr::POLE_THRESHOLD {
                return Err(EvalError::Pole);
            }
            for j in 0..m {
                out[j] = p[j] / pm;
            }
            if out.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
                return Err(EvalError::Overflow);
            }
            Ok(())
        })?;
        Ok(LimitProfile { side: self.side, lambda, values, certificates })
    }
}

/// The sampled limit of λ-free expressions as x → ±∞.
pub fn expr_limits(exprs: &[Expr], side: Side, sampling: Sampling) -> Result<(Vec<Complex64>, Vec<Certificate>), LimitError> {
    let tape = Tape::compile(exprs);
    let xs = sampling.points(side);
    let zero = Complex64::new(0.0, 0.0);
    sequence_limit(exprs.len(), &xs, sampling.tol, |t, out| tape.eval(xs[t], zero, out))
}

/// Convenience wrapper: limits of p_j/p_m at one λ.
pub fn limit_ratio(symbol: &SchurSymbol, lambda: Complex64, side: Side, cfg: &Settings) -> Result<LimitProfile, LimitError> {
    LimitEstimator::new(symbol, side, Sampling::from_settings(cfg)).ratios(lambda)
}

/// Cluster estimate of Λ_∞(d).
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ExceptionalSet {
    pub points: Vec<Complex64>,
    pub radii: Vec<f64>,
    /// Sampled x-intervals that contributed values.
    pub windows: Vec<(f64, f64)>,
    pub declared: bool,
}

impl ExceptionalSet {
    pub fn declared(points: Vec<Complex64>) -> ExceptionalSet {
        let radii = vec![0.0; points.len()];
        ExceptionalSet { points, radii, windows: Vec::new(), declared: true }
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn distance(&self, z: Complex64) -> f64 {
        self.points.iter().map(|p| (z - p).norm()).fold(f64::INFINITY, f64::min)
    }
}

/// Greedy leader clustering; inputs earlier in `values` become leaders first.
/// Leaders end up more than `tol` apart and every member lies within `tol` of its leader.
pub fn cluster(values: &[Complex64], tol: f64) -> (Vec<Complex64>, Vec<f64>) {
    let key = |z: Complex64| ((z.re / tol).floor() as i64, (z.im / tol).floor() as i64);
    let mut cells: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    let mut leaders: Vec<Complex64> = Vec::new();
    let mut radii: Vec<f64> = Vec::new();
    for &z in values {
        let (kx, ky) = key(z);
        let mut home: Option<(usize, f64)> = None;
        for i in -1..=1 {
            for j in -1..=1 {
                for &l in cells.get(&(kx + i, ky + j)).map(|v| v.as_slice()).unwrap_or(&[]) {
                    let dist = (z - leaders[l]).norm();
                    if dist <= tol && home.is_none_or(|(_, d)| dist < d) {
                        home = Some((l, dist));
                    }
                }
            }
        }
        match home {
            Some((l, dist)) => radii[l] = radii[l].max(dist),
            None => {
                cells.entry((kx, ky)).or_default().push(leaders.len());
                leaders.push(z);
                radii.push(0.0);
            }
        }
    }
    (leaders, radii)
}

/// Samples d on dyadic windows [2^s, 2^(s+1)] and clusters the values from the
/// outermost `windows_used` windows that do not escape.
pub fn limit_points_at_infinity(d: &Expr, cfg: &Settings) -> ExceptionalSet {
    if let Some(declared) = &cfg.declared_exceptional_set {
        return ExceptionalSet::declared(declared.iter().map(|c| c.0).collect());
    }
    let tape = Tape::compile(std::slice::from_ref(d));
    let zero = Complex64::new(0.0, 0.0);
    let sides: &[Side] = if cfg.one_sided { &[Side::Plus] } else { &Side::BOTH };
    let mut values = Vec::new();
    let mut windows = Vec::new();
    let n = cfg.window_samples;
    for s in (cfg.windows - cfg.windows_used..cfg.windows).rev() {
        let lo = 2f64.powi(s as i32);
        for &side in sides {
            let mut sample = Vec::with_capacity(n);
            let mut out = [zero];
            for i in (0..n).rev() {
                let x = side.sign() * lo * (1.0 + i as f64 / n as f64);
                if tape.eval(x, zero, &mut out).is_ok() {
                    sample.push(out[0]);
                }
            }
            let min = sample.iter().map(|v| v.norm()).fold(f64::INFINITY, f64::min);
            if min <= cfg.escape_bound {
                values.extend(sample.into_iter().filter(|v| v.norm() <= cfg.escape_bound));
                windows.push((side.sign() * lo, side.sign() * 2.0 * lo));
            }
        }
    }
    // Half-width leaders keep every sampled value within cluster_tol of a representative
    // even across small sampling gaps.
    let (points, radii) = cluster(&values, 0.5 * cfg.cluster_tol);
    ExceptionalSet { points, radii, windows, declared: false }
}

/// Sampled images Δ(grid) and d(grid), used to decide whether a probe lies in
/// the closures that exempt it from the assumptions.
pub struct Closures {
    pub delta: Vec<Complex64>,
    pub d: Vec<Complex64>,
    pub tol: f64,
}

impl Closures {
    pub fn sample(op: &OperatorMatrix, grid: &[f64], tol: f64) -> Closures {
        let zero = Complex64::new(0.0, 0.0);
        let delta = op.delta();
        let image = |e: &Expr| grid.iter().filter_map(|&x| e.eval(x, zero).ok()).collect::<Vec<_>>();
        Closures { delta: image(&delta), d: image(op.d()), tol }
    }

    pub fn in_delta(&self, z: Complex64) -> bool {
        polyline_distance(z, &self.delta) <= self.tol
    }

    pub fn in_d(&self, z: Complex64) -> bool {
        polyline_distance(z, &self.d) <= self.tol
    }
}

fn max_on_grid(e: &Expr, grid: &[f64], lambda: Complex64) -> Result<(f64, f64), (f64, EvalError)> {
    let mut best = (grid[0], 0.0f64);
    for &x in grid {
        let v = e.eval(x, lambda).map_err(|err| (x, err))?.norm();
        if v > best.1 || v.is_nan() {
            best = (x, v);
        }
    }
    Ok(best)
}

/// Checks that every expression stays below `bound` on the grid.
fn bounded_record(a: Assumption, exprs: &[(String, Expr)], grid: &[f64], lambda: Complex64, bound: f64) -> Record {
    let mut worst: (f64, f64, &str) = (grid[0], 0.0, "");
    for (name, e) in exprs {
        match max_on_grid(e, grid, lambda) {
            Err((x, err)) => {
                return Record::new(a, Status::Fail)
                    .probe(lambda)
                    .witness(Witness::at_x(x, f64::INFINITY))
                    .note(&format!("{name} cannot be evaluated: {err}"));
            }
            Ok((x, v)) => {
                if !(v <= bound) {
                    return Record::new(a, Status::Fail)
                        .probe(lambda)
                        .witness(Witness::at_x(x, v))
                        .note(&format!("sampled evidence: |{name}| exceeds {bound:e}"));
                }
                if v >= worst.1 {
                    worst = (x, v, name);
                }
            }
        }
    }
    Record::new(a, Status::Pass)
        .probe(lambda)
        .witness(Witness::at_x(worst.0, worst.1))
        .note(&format!("sampled evidence: largest value from {}", worst.2))
}

/// max over θ ∈ [0, π] of min over the grid of Re(e^{iθ} p_m(x, λ)).
pub fn best_sector(pm: &[Complex64], grid: &[f64], points: usize) -> (f64, f64, f64) {
    let mut best = (0.0, f64::NEG_INFINITY, grid[0]);
    for i in 0..points {
        let theta = PI * i as f64 / (points - 1) as f64;
        let rot = Complex64::from_polar(1.0, theta);
        let (mut low, mut at) = (f64::INFINITY, grid[0]);
        for (v, &x) in pm.iter().zip(grid) {
            let r = (rot * v).re;
            if r < low {
                low = r;
                at = x;
            }
        }
        if low > best.1 {
            best = (theta, low, at);
        }
    }
    best
}

/// Runs B1–B3, C and D at each probe.
pub fn check_assumptions(
    op: &OperatorMatrix,
    symbol: &SchurSymbol,
    probes: &[Complex64],
    grid: &[f64],
    cfg: &Settings,
) -> Diagnostics {
    let mut diag = Diagnostics::default();
    if grid.is_empty() {
        diag.warn("empty validation grid; assumptions B, C and D not checked");
        return diag;
    }
    let closures = Closures::sample(op, grid, cfg.curve_res);
    let exceptional = limit_points_at_infinity(op.d(), cfg);
    let bound = cfg.escape_bound;
    let m = symbol.m();

    let p = symbol.coefficients();
    let mut b1 = Vec::new();
    for (j, pj) in p.iter().enumerate() {
        let d1 = pj.differentiate(Var::X).simplify();
        let d2 = d1.differentiate(Var::X).simplify();
        b1.push((format!("p{j}"), pj.clone()));
        b1.push((format!("p{j}'"), d1));
        b1.push((format!("p{j}''"), d2));
    }
    let inv_pm = vec![("1/p_m".to_string(), (Expr::one() / &p[m]))];
    let resolvent = op.d() - Expr::lambda();
    let mut b3 = Vec::new();
    for (g, c) in op.c().iter().enumerate() {
        b3.push((format!("c{g}/(d-lambda)"), c / &resolvent));
    }
    for (beta, b) in op.b().iter().enumerate() {
        let mut e = (b / &resolvent).simplify();
        for j in 0..=beta {
            b3.push((format!("(b{beta}/(d-lambda))^({j})"), e.clone()));
            if j < beta {
                e = e.differentiate(Var::X).simplify();
            }
        }
    }

    for &lambda in probes {
        let exempt_b = closures.in_delta(lambda) || closures.in_d(lambda);
        if exempt_b {
            let note = "probe lies in the sampled closure of Δ(ℝ) ∪ d(ℝ); the assumption does not constrain it";
            for a in [Assumption::B1, Assumption::B2, Assumption::B3, Assumption::C] {
                diag.push(Record::new(a, Status::Pass).probe(lambda).note(note));
            }
        } else {
            diag.push(bounded_record(Assumption::B1, &b1, grid, lambda, bound));
            let mut b2 = bounded_record(Assumption::B2, &inv_pm, grid, lambda, bound);
            if b2.status == Status::Pass {
                b2.note.push_str(" (bounded d with inf |a_m| > 0 implies this)");
            }
            diag.push(b2);
            diag.push(bounded_record(Assumption::B3, &b3, grid, lambda, bound));
            diag.push(sector_record(&p[m], grid, lambda, cfg.theta_points));
        }

        let exempt_d = closures.in_delta(lambda) || exceptional.distance(lambda) <= cfg.exc_tol;
        let mut failures = Vec::new();
        for side in Side::BOTH {
            if let Err(e) = limit_ratio(symbol, lambda, side, cfg) {
                failures.push(format!("side {side}: {e}"));
            }
        }
        let rec = if failures.is_empty() {
            Record::new(Assumption::D, Status::Pass).probe(lambda).note("limits of p_j/p_m converged on both sides")
        } else if exempt_d {
            Record::new(Assumption::D, Status::Pass)
                .probe(lambda)
                .note(&format!("probe lies in cl Δ(ℝ) ∪ Λ_∞(d) where limits are not required; {}", failures.join("; ")))
        } else {
            Record::new(Assumption::D, Status::Fail)
                .probe(lambda)
                .witness(Witness::at_lambda(lambda, f64::NAN))
                .note(&failures.join("; "))
        };
        diag.push(rec);
    }
    diag
}

fn sector_record(pm: &Expr, grid: &[f64], lambda: Complex64, points: usize) -> Record {
    let mut values = Vec::with_capacity(grid.len());
    for &x in grid {
        match pm.eval(x, lambda) {
            Ok(v) => values.push(v),
            Err(e) => {
                return Record::new(Assumption::C, Status::Fail)
                    .probe(lambda)
                    .witness(Witness::at_x(x, f64::NAN))
                    .note(&format!("p_m cannot be evaluated: {e}"));
            }
        }
    }
    let (theta, delta, at) = best_sector(&values, grid, points);
    if delta > 0.0 {
        Record::new(Assumption::C, Status::Pass)
            .probe(lambda)
            .sector(theta, delta)
            .witness(Witness::at_x(at, delta))
            .note("sampled evidence: min over grid of Re(e^{iθ} p_m) at the best θ")
    } else {
        Record::new(Assumption::C, Status::Fail)
            .probe(lambda)
            .witness(Witness::at_x(at, delta))
            .note(&format!("no θ in [0, π] makes Re(e^{{iθ}} p_m) positive; best θ = {theta:.4} gives {delta:e}"))
    }
}
