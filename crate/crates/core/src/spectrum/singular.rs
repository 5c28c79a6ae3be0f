//! The λ-roots of P_λ^±(ξ) = 0 traced along real ξ.
//!
//! For each side the limits p_j^±(λ) are reconstructed as rational functions
//! N_j/Q from samples on two circles; for fixed ξ the equation
//! ξ^m Q + Σ ξ^j N_j = 0 is then a polynomial in λ whose roots seed a Newton
//! iteration on the sampled limits themselves.

use std::f64::consts::PI;

use ndarray::Array2;
use ndarray_linalg::SVD;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::asymptotics::{LimitEstimator, LimitError, Sampling, Side};
use crate::config::{Settings, Window};
use crate::geometry::PointIndex;
use crate::poly::ComplexPoly;
use crate::schur::SchurSymbol;

/// Factor applied to x0 for the independent re-check of every accepted root.
pub const RECHECK_SEED: f64 = 1.618;
/// Relative size below which leading coefficients of the cleared polynomial are dropped.
pub const TRIM_TOL: f64 = 1e-13;
const NEWTON_ITERATIONS: usize = 40;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FitError {
    #[error("only {got} of {need} fit samples could be evaluated")]
    TooFewSamples { got: usize, need: usize },
    #[error("singular value decomposition failed: {0}")]
    Linalg(String),
}

/// p_j^±(λ) ≈ N_j(z)/Q(z) with z = (λ − center)/radius.
#[derive(Clone, Debug)]
pub struct RationalFit {
    pub center: Complex64,
    pub radius: f64,
    pub den: ComplexPoly,
    pub num: Vec<ComplexPoly>,
    /// max over samples and j of |N_j/Q − p_j| / (1 + |p_j|).
    pub residual: f64,
    pub samples: usize,
}

impl RationalFit {
    pub fn z(&self, lambda: Complex64) -> Complex64 {
        (lambda - self.center) / self.radius
    }

    pub fn lambda(&self, z: Complex64) -> Complex64 {
        self.center + z * self.radius
    }

    pub fn m(&self) -> usize {
        self.num.len()
    }

    /// ξ^m Q(z) + Σ ξ^j N_j(z).
    pub fn cleared(&self, xi: f64) -> ComplexPoly {
        let mut acc = self.den.scale(Complex64::new(xi.powi(self.m() as i32), 0.0));
        let mut power = 1.0;
        for n in &self.num {
            acc = &acc + &n.scale(Complex64::new(power, 0.0));
            power *= xi;
        }
        acc
    }

    /// Roots of the cleared polynomial mapped back to λ; `None` when it vanishes identically.
    pub fn roots(&self, xi: f64) -> Option<Vec<Complex64>> {
        let p = self.cleared(xi).trimmed(TRIM_TOL);
        p.degree()?;
        Some(p.roots().into_iter().map(|z| self.lambda(z)).collect())
    }

    /// d/dλ of the fitted ξ^m + Σ ξ^j N_j/Q.
    pub fn derivative(&self, xi: f64, lambda: Complex64) -> Complex64 {
        let z = self.z(lambda);
        let c = self.cleared(xi);
        let (q, dq) = (self.den.eval(z), self.den.derivative().eval(z));
        let (cv, dc) = (c.eval(z), c.derivative().eval(z));
        (dc * q - cv * dq) / (q * q * self.radius)
    }
}

/// Points on two circles about `center` where the limits are sampled.
fn fit_nodes(center: Complex64, radius: f64, count: usize, attempt: usize) -> Vec<Complex64> {
    let outer = count.div_ceil(2);
    let inner = count - outer;
    let shift = 0.1234 + 0.37 * attempt as f64;
    let mut nodes = Vec::with_capacity(count);
    for i in 0..outer {
        let a = 2.0 * PI * (i as f64 + shift) / outer as f64;
        nodes.push(center + Complex64::from_polar(radius, a));
    }
    for i in 0..inner {
        let a = 2.0 * PI * (i as f64 + 0.5 + shift) / inner as f64;
        nodes.push(center + Complex64::from_polar(0.55 * radius, a));
    }
    nodes
}

/// Reconstructs p_j^±(λ) as rational functions with a shared denominator.
///
/// Denominator degrees q = 0..=n+1 are tried in turn with numerator degree
/// q+1; the first fit whose residual is within `fit_tol` is returned,
/// otherwise the best one.
pub fn fit_limits(est: &LimitEstimator, n: usize, window: &Window, fit_tol: f64) -> Result<RationalFit, FitError> {
    let center = window.center();
    let radius = window.half_diagonal();
    let count = 4 * (n + 3);
    let mut zs = Vec::new();
    let mut rs: Vec<Vec<Complex64>> = Vec::new();
    for (i, &node) in fit_nodes(center, radius, count, 0).iter().enumerate() {
        let mut lambda = node;
        for attempt in 0..6 {
            match est.ratios(lambda) {
                Ok(p) => {
                    zs.push((lambda - center) / radius);
                    rs.push(p.values);
                    break;
                }
                Err(e) => {
                    log::debug!("fit sample {lambda} on side {} failed: {e}", est.side());
                    lambda = fit_nodes(center, radius, count, attempt + 1)[i];
                }
            }
        }
    }
    let m = rs.first().map_or(0, |r| r.len());
    let need = (n + 2) + m * (n + 3);
    if zs.len() * m.max(1) < need + 1 || m == 0 {
        return Err(FitError::TooFewSamples { got: zs.len(), need: count });
    }
    let mut best: Option<RationalFit> = None;
    for q in 0..=n + 1 {
        let fit = solve_fit(&zs, &rs, q, center, radius)?;
        let good = fit.residual <= fit_tol;
        if best.as_ref().is_none_or(|b| fit.residual < b.residual) {
            best = Some(fit);
        }
        if good {
            break;
        }
    }
    let best = best.expect("at least one degree tried");
    Ok(best)
}

fn solve_fit(zs: &[Complex64], rs: &[Vec<Complex64>], q: usize, center: Complex64, radius: f64) -> Result<RationalFit, FitError> {
    let m = rs[0].len();
    let p = q + 1;
    let cols = (q + 1) + m * (p + 1);
    let rows = zs.len() * m;
    let mut a = Array2::<Complex64>::zeros((rows.max(cols), cols));
    for (s, (&z, r)) in zs.iter().zip(rs).enumerate() {
        let pow: Vec<Complex64> = (0..=p.max(q)).map(|e| z.powi(e as i32)).collect();
        for j in 0..m {
            let row = s * m + j;
            let w = 1.0 / (1.0 + r[j].norm());
            for b in 0..=q {
                a[[row, b]] = -r[j] * pow[b] * w;
            }
            for e in 0..=p {
                a[[row, q + 1 + j * (p + 1) + e]] = pow[e] * w;
            }
        }
    }
    let (_, _, vt) = a.svd(false, true).map_err(|e| FitError::Linalg(e.to_string()))?;
    let vt = vt.ok_or_else(|| FitError::Linalg("no right singular vectors".into()))?;
    let v: Vec<Complex64> = vt.row(cols - 1).iter().map(|c| c.conj()).collect();
    let den = ComplexPoly::new(v[..=q].to_vec());
    let num: Vec<ComplexPoly> = (0..m)
        .map(|j| {
            let start = q + 1 + j * (p + 1);
            ComplexPoly::new(v[start..start + p + 1].to_vec())
        })
        .collect();
    let mut residual = 0.0f64;
    for (&z, r) in zs.iter().zip(rs) {
        let qz = den.eval(z);
        for j in 0..m {
            let approx = num[j].eval(z) / qz;
            let err = (approx - r[j]).norm() / (1.0 + r[j].norm());
            residual = residual.max(if err.is_finite() { err } else { f64::INFINITY });
        }
    }
    Ok(RationalFit { center, radius, den, num, residual, samples: zs.len() })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct Flags {
    pub in_regular_closure: bool,
    pub in_exceptional: bool,
    /// The same root was found on the other side and merged into this one.
    pub both_sides: bool,
}

impl Flags {
    pub fn csv(&self) -> String {
        let mut v = Vec::new();
        if self.in_regular_closure {
            v.push("in_regular_closure");
        }
        if self.in_exceptional {
            v.push("in_exceptional");
        }
        if self.both_sides {
            v.push("both_sides");
        }
        v.join(";")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SingularPoint {
    pub side: Side,
    pub xi: f64,
    pub lambda: Complex64,
    pub branch_id: usize,
    /// |P_λ(ξ)| / (1 + |ξ|^m + Σ|p_j||ξ|^j) at the accepted root.
    pub residual: f64,
    pub flags: Flags,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SkipReason {
    /// The cleared polynomial vanished identically at this ξ.
    IdentitySkip,
    NotConvergent { seed: Complex64, message: String },
    NewtonFailed { seed: Complex64, residual: f64 },
    RecheckFailed { lambda: Complex64, residual: f64 },
    FitFailed { message: String },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Skip {
    pub side: Side,
    pub xi: Option<f64>,
    pub reason: SkipReason,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SideSummary {
    pub side: Side,
    pub denominator_degree: Option<usize>,
    pub fit_residual: Option<f64>,
    pub fit_samples: usize,
    pub xi_count: usize,
    pub roots: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct SingularResult {
    pub points: Vec<SingularPoint>,
    pub skipped: Vec<Skip>,
    pub sides: Vec<SideSummary>,
}

/// Everything the sweep needs for one side.
struct SideSolver<'a> {
    est: LimitEstimator,
    check: LimitEstimator,
    fit: RationalFit,
    fit_good: bool,
    cfg: &'a Settings,
}

struct Accepted {
    lambda: Complex64,
    residual: f64,
}

impl SideSolver<'_> {
    fn residual(&self, est: &LimitEstimator, xi: f64, lambda: Complex64) -> Result<(Complex64, f64), LimitError> {
        let prof = est.ratios(lambda)?;
        let f = prof.poly_eval(xi);
        Ok((f, f.norm() / prof.poly_scale(xi)))
    }

    fn derivative(&self, xi: f64, lambda: Complex64, f: Complex64) -> Option<Complex64> {
        if self.fit_good {
            let d = self.fit.derivative(xi, lambda);
            if d.norm() > 0.0 && d.is_finite() {
                return Some(d);
            }
        }
        let h = 1e-6 * (1.0 + lambda.norm());
        let (fh, _) = self.residual(&self.est, xi, lambda + h).ok()?;
        let d = (fh - f) / h;
        (d.norm() > 0.0 && d.is_finite()).then_some(d)
    }

    fn polish(&self, xi: f64, seed: Complex64) -> Result<Accepted, SkipReason> {
        let mut lambda = seed;
        let mut best: Option<(Complex64, f64)> = None;
        for _ in 0..NEWTON_ITERATIONS {
            let (f, res) = self
                .residual(&self.est, xi, lambda)
                .map_err(|e| SkipReason::NotConvergent { seed, message: e.to_string() })?;
            if best.is_none_or(|(_, r)| res < r) {
                best = Some((lambda, res));
            }
            if res == 0.0 {
                break;
            }
            let Some(d) = self.derivative(xi, lambda, f) else {
                break;
            };
            let step = f / d;
            lambda -= step;
            if step.norm() <= 1e-15 * (1.0 + lambda.norm()) {
                break;
            }
            if !self.cfg.window.contains_with(lambda, self.cfg.window.half_diagonal()) {
                break;
            }
        }
        let (lambda, residual) = best.expect("at least one Newton iterate");
        if residual > self.cfg.root_tol {
            return Err(SkipReason::NewtonFailed { seed, residual });
        }
        match self.residual(&self.check, xi, lambda) {
            Ok((_, r)) if r <= self.cfg.root_tol => Ok(Accepted { lambda, residual: residual.max(r) }),
            Ok((_, r)) => Err(SkipReason::RecheckFailed { lambda, residual: r }),
            Err(e) => Err(SkipReason::NotConvergent { seed: lambda, message: e.to_string() }),
        }
    }

    /// Polished roots in the window at one ξ, plus the reasons seeds were dropped.
    fn solve(&self, xi: f64) -> (Vec<Accepted>, Vec<SkipReason>) {
        let w = &self.cfg.window;
        let Some(seeds) = self.fit.roots(xi) else {
            return (Vec::new(), vec![SkipReason::IdentitySkip]);
        };
        let margin = 1e-3 * w.half_diagonal();
        let mut roots: Vec<Accepted> = Vec::new();
        let mut skips = Vec::new();
        for seed in seeds.into_iter().filter(|s| w.contains_with(*s, margin)) {
            match self.polish(xi, seed) {
                Ok(a) => {
                    if !w.contains(a.lambda) {
                        continue;
                    }
                    if roots.iter().all(|r| (r.lambda - a.lambda).norm() > self.cfg.dedupe_tol) {
                        roots.push(a);
                    }
                }
                Err(reason) => skips.push(reason),
            }
        }
        (roots, skips)
    }
}

/// Fitted roots lying near the window, used only to steer ξ refinement.
fn window_seeds(fit: &RationalFit, xi: f64, w: &Window, margin: f64) -> Vec<Complex64> {
    fit.roots(xi)
        .unwrap_or_default()
        .into_iter()
        .filter(|z| w.contains_with(*z, margin))
        .collect()
}

fn needs_split(a: &[Complex64], b: &[Complex64], res: f64) -> bool {
    let far = |from: &[Complex64], to: &[Complex64]| {
        from.iter().any(|p| to.iter().map(|q| (p - q).norm()).fold(f64::INFINITY, f64::min) > res)
    };
    far(a, b) || far(b, a)
}

/// Inserts ξ values between grid neighbours until consecutive seed sets move
/// by at most `curve_res`.
///
/// Refinement proceeds level by level so the result does not depend on thread
/// scheduling; when the budget runs out the leftmost intervals are split first.
pub fn refine_xi(fit: &RationalFit, grid: &[f64], w: &Window, res: f64, max_points: usize) -> Vec<f64> {
    let mut pts: Vec<(f64, Vec<Complex64>)> = grid.par_iter().map(|&xi| (xi, window_seeds(fit, xi, w, res))).collect();
    let mut budget = max_points.saturating_sub(pts.len());
    while budget > 0 {
        let wanted: Vec<usize> = (0..pts.len().saturating_sub(1))
            .into_par_iter()
            .filter(|&i| {
                let (a, b) = (&pts[i], &pts[i + 1]);
                b.0 - a.0 > 1e-9 * a.0.abs().max(b.0.abs()).max(1.0) && needs_split(&a.1, &b.1, res)
            })
            .collect();
        if wanted.is_empty() {
            break;
        }
        let take = wanted.len().min(budget);
        budget -= take;
        let mids: Vec<(usize, (f64, Vec<Complex64>))> = wanted[..take]
            .par_iter()
            .map(|&i| {
                let mid = 0.5 * (pts[i].0 + pts[i + 1].0);
                (i, (mid, window_seeds(fit, mid, w, res)))
            })
            .collect();
        let mut next = Vec::with_capacity(pts.len() + mids.len());
        let mut mids = mids.into_iter().peekable();
        for (i, p) in pts.into_iter().enumerate() {
            next.push(p);
            if let Some((_, m)) = mids.next_if(|(j, _)| *j == i) {
                next.push(m);
            }
        }
        pts = next;
    }
    if budget == 0 {
        log::warn!("ξ refinement stopped at max_points = {max_points}");
    }
    pts.into_iter().map(|(xi, _)| xi).collect()
}

/// Where points should be flagged.
pub struct FlagContext<'a> {
    pub regular: &'a PointIndex,
    pub regular_tol: f64,
    pub exceptional: &'a crate::asymptotics::ExceptionalSet,
    pub exc_tol: f64,
}

/// Sweeps ξ on both sides, polishes the roots, merges coincident roots across
/// sides and assigns branch ids.
pub fn singular_part(symbol: &SchurSymbol, n: usize, xi_grid: &[f64], cfg: &Settings, flags: Option<&FlagContext>) -> SingularResult {
    let mut result = SingularResult::default();
    let sampling = Sampling::from_settings(cfg);
    let mut per_side: Vec<(Side, Vec<(f64, Accepted)>)> = Vec::new();
    for side in Side::BOTH {
        let est = LimitEstimator::new(symbol, side, sampling);
        let fit = match fit_limits(&est, n, &cfg.window, cfg.fit_tol) {
            Ok(f) => f,
            Err(e) => {
                log::warn!("side {side}: {e}");
                result.skipped.push(Skip { side, xi: None, reason: SkipReason::FitFailed { message: e.to_string() } });
                result.sides.push(SideSummary { side, denominator_degree: None, fit_residual: None, fit_samples: 0, xi_count: 0, roots: 0 });
                continue;
            }
        };
        let fit_good = fit.residual <= cfg.fit_tol;
        if !fit_good {
            log::warn!("side {side}: rational fit residual {:e} exceeds fit_tol; only independently converged roots are kept", fit.residual);
        }
        let solver = SideSolver {
            est,
            check: LimitEstimator::new(symbol, side, sampling.reseeded(RECHECK_SEED)),
            fit,
            fit_good,
            cfg,
        };
        let xs = refine_xi(&solver.fit, xi_grid, &cfg.window, cfg.curve_res, cfg.max_points);
        let solved: Vec<(Vec<Accepted>, Vec<SkipReason>)> = xs.par_iter().map(|&xi| solver.solve(xi)).collect();
        let mut roots = Vec::new();
        for (&xi, (acc, skips)) in xs.iter().zip(solved) {
            for reason in skips {
                result.skipped.push(Skip { side, xi: Some(xi), reason });
            }
            roots.extend(acc.into_iter().map(|a| (xi, a)));
        }
        result.sides.push(SideSummary {
            side,
            denominator_degree: solver.fit.den.degree(),
            fit_residual: Some(solver.fit.residual),
            fit_samples: solver.fit.samples,
            xi_count: xs.len(),
            roots: roots.len(),
        });
        per_side.push((side, roots));
    }

    // Merge roots that appear on both sides at the same ξ.
    if let [(_, plus), (_, minus)] = per_side.as_mut_slice() {
        let mut merged = vec![false; plus.len()];
        minus.retain(|(xi, a)| {
            let hit = plus
                .iter()
                .enumerate()
                .find(|(_, (x, b))| x == xi && (b.lambda - a.lambda).norm() <= cfg.dedupe_tol);
            match hit {
                Some((i, _)) => {
                    merged[i] = true;
                    false
                }
                None => true,
            }
        });
        let mut points: Vec<SingularPoint> = Vec::new();
        push_points(&mut points, Side::Plus, plus, Some(&merged));
        push_points(&mut points, Side::Minus, minus, None);
        result.points = points;
    } else {
        let mut points = Vec::new();
        for (side, roots) in &per_side {
            push_points(&mut points, *side, roots, None);
        }
        result.points = points;
    }

    assign_branches(&mut result.points, 10.0 * cfg.curve_res);
    if let Some(ctx) = flags {
        for p in &mut result.points {
            p.flags.in_regular_closure = ctx.regular.within(p.lambda, ctx.regular_tol);
            p.flags.in_exceptional = ctx.exceptional.distance(p.lambda) <= ctx.exc_tol;
        }
    }
    result
}

fn push_points(out: &mut Vec<SingularPoint>, side: Side, roots: &[(f64, Accepted)], merged: Option<&[bool]>) {
    for (i, (xi, a)) in roots.iter().enumerate() {
        out.push(SingularPoint {
            side,
            xi: *xi,
            lambda: a.lambda,
            branch_id: 0,
            residual: a.residual,
            flags: Flags { both_sides: merged.is_some_and(|m| m[i]), ..Flags::default() },
        });
    }
}

/// Nearest-neighbour continuation in ξ, per side. Points must be grouped by
/// side and sorted by ξ within each side.
pub fn assign_branches(points: &mut [SingularPoint], jump: f64) {
    let mut next_id = 0;
    let mut start = 0;
    while start < points.len() {
        let side = points[start].side;
        let end = start + points[start..].iter().take_while(|p| p.side == side).count();
        // (branch id, last λ) of branches alive at the previous ξ.
        let mut active: Vec<(usize, Complex64)> = Vec::new();
        let mut i = start;
        while i < end {
            let xi = points[i].xi;
            let j = i + points[i..end].iter().take_while(|p| p.xi == xi).count();
            let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
            for (a, &(_, l)) in active.iter().enumerate() {
                for k in i..j {
                    let dist = (points[k].lambda - l).norm();
                    if dist <= jump {
                        pairs.push((dist, a, k));
                    }
                }
            }
            pairs.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
            let mut used_a = vec![false; active.len()];
            let mut assigned = vec![false; j - i];
            for (_, a, k) in pairs {
                if used_a[a] || assigned[k - i] {
                    continue;
                }
                used_a[a] = true;
                assigned[k - i] = true;
                points[k].branch_id = active[a].0;
            }
            for k in i..j {
                if !assigned[k - i] {
                    points[k].branch_id = next_id;
                    next_id += 1;
                }
            }
            active = (i..j).map(|k| (points[k].branch_id, points[k].lambda)).collect();
            i = j;
        }
        start = end;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::OperatorMatrix;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn quadratic_well() -> OperatorMatrix {
        OperatorMatrix::parse(&["0", "0", "1"], &["0", "-i"], &["0", "i"], "-x^2").unwrap()
    }

    fn gaussian_coupled() -> OperatorMatrix {
        OperatorMatrix::parse(
            &["x^2/(x^2+1)", "0", "i", "0", "1"],
            &["cos(x)/sqrt(1+x^2)", "1"],
            &["x^2/(i+x^2)", "0", "0", "i"],
            "exp(-x^2/2) + i/(1+x^2)",
        )
        .unwrap()
    }

    #[test]
    fn quadratic_well_single_xi() {
        let op = quadratic_well();
        let s = SchurSymbol::build(&op).unwrap();
        let cfg = Settings::default();
        let res = singular_part(&s, op.n(), &[2.0], &cfg, None);
        assert_eq!(res.points.len(), 1, "{:?}", res);
        let p = res.points[0];
        assert!((p.lambda - c(4.0, 0.0)).norm() <= 1e-8);
        assert!(p.flags.both_sides);
    }

    #[test]
    fn gaussian_roots_at_zero() {
        let op = gaussian_coupled();
        let s = SchurSymbol::build(&op).unwrap();
        let cfg = Settings::default();
        let res = singular_part(&s, op.n(), &[0.0], &cfg, None);
        let mut got: Vec<Complex64> = res.points.iter().map(|p| p.lambda).collect();
        got.sort_by(|a, b| a.re.total_cmp(&b.re));
        assert_eq!(got.len(), 2, "{res:?}");
        assert!(got[0].norm() <= 1e-8, "{got:?}");
        assert!((got[1] - c(1.0, 0.0)).norm() <= 1e-8, "{got:?}");
        assert!(res.sides.iter().all(|s| s.denominator_degree == Some(1)));
    }

    #[test]
    fn uncoupled_constant_operator_traces_the_symbol() {
        // b = 0: roots are λ = a(ξ) = ξ^2 + 0.5ξ + (1 + i), plus λ = d from the cleared form.
        let op = OperatorMatrix::parse(&["1 + i", "0.5*i", "1"], &["0", "0"], &["0", "1"], "3").unwrap();
        let s = SchurSymbol::build(&op).unwrap();
        let cfg = Settings::default();
        for xi in [-1.5, 0.0, 0.7, 2.0] {
            let res = singular_part(&s, op.n(), &[xi], &cfg, None);
            let want = c(xi * xi + 1.0, 1.0 + 0.5 * xi);
            assert!(res.points.iter().any(|p| (p.lambda - want).norm() <= 1e-8), "ξ = {xi}: {res:?}");
        }
    }

    #[test]
    fn branches_follow_continuation() {
        let mk = |xi: f64, l: Complex64| SingularPoint {
            side: Side::Plus,
            xi,
            lambda: l,
            branch_id: 0,
            residual: 0.0,
            flags: Flags::default(),
        };
        let mut pts = vec![
            mk(0.0, c(0.0, 0.0)),
            mk(0.0, c(1.0, 0.0)),
            mk(0.1, c(1.001, 0.0)),
            mk(0.1, c(0.001, 0.0)),
            mk(0.2, c(5.0, 0.0)),
            mk(0.2, c(0.002, 0.0)),
        ];
        assign_branches(&mut pts, 0.01);
        let ids: Vec<usize> = pts.iter().map(|p| p.branch_id).collect();
        assert_eq!(ids, vec![0, 1, 1, 0, 2, 0]);
    }

    #[test]
    fn refinement_closes_gaps() {
        let op = quadratic_well();
        let s = SchurSymbol::build(&op).unwrap();
        let cfg = Settings::default();
        let est = LimitEstimator::new(&s, Side::Plus, Sampling::from_settings(&cfg));
        let fit = fit_limits(&est, op.n(), &cfg.window, cfg.fit_tol).unwrap();
        assert!(fit.residual <= cfg.fit_tol);
        let xs = refine_xi(&fit, &cfg.xi_grid(), &cfg.window, cfg.curve_res, cfg.max_points);
        let lam: Vec<f64> = xs.iter().filter(|x| x.abs() <= 10f64.sqrt()).map(|x| x * x).collect();
        let mut pos: Vec<f64> = lam.clone();
        pos.sort_by(f64::total_cmp);
        assert!(pos.windows(2).all(|w| w[1] - w[0] <= cfg.curve_res));
    }
}
