//! Independent cross-checks of the computed spectrum.
//!
//! [`det_scan`] solves the determinant of the frozen symbol matrix in closed
//! form, which the Schur route must reproduce for coefficients that settle at
//! infinity. [`discretize_and_eig`] is a plain finite-difference truncation; it
//! is useful for constant coefficients and for the regular part only.

use ndarray::Array2;
use ndarray_linalg::EigVals;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::asymptotics::{expr_limits, Certificate, LimitError, Sampling, Side};
use crate::config::Settings;
use crate::expr::{Tape, Var};
use crate::geometry::one_sided_hausdorff;
use crate::model::OperatorMatrix;

/// Largest N accepted by [`discretize_and_eig`] (the matrix is 2N × 2N).
pub const MAX_DENSE_N: usize = 4000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("frozen symbol refused: coefficient {coefficient} has no limit at {side}∞ ({source})")]
    NoLimit { coefficient: String, side: Side, source: LimitError },
    #[error("frozen symbol refused: |{coefficient}'({x})| = {value:e} exceeds deriv_tol")]
    Derivative { coefficient: String, x: f64, value: f64 },
    #[error("N = {n} exceeds the dense eigensolver budget of {max}")]
    Size { n: usize, max: usize },
    #[error("invalid discretization: {0}")]
    Grid(String),
    #[error("eigenvalue computation failed: {0}")]
    Linalg(String),
}

impl OracleError {
    pub fn is_refusal(&self) -> bool {
        matches!(self, OracleError::NoLimit { .. } | OracleError::Derivative { .. })
    }
}

/// Limits at ±∞ of the raw coefficients.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FrozenSymbol {
    pub side: Side,
    pub a: Vec<Complex64>,
    pub b: Vec<Complex64>,
    pub c: Vec<Complex64>,
    pub d: Complex64,
    pub certificates: Vec<Certificate>,
}

fn horner(coeffs: &[Complex64], xi: f64) -> Complex64 {
    coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * xi + c)
}

impl FrozenSymbol {
    /// Estimates the limits; refused when a limit fails to converge or a
    /// coefficient still moves at the outermost samples.
    pub fn estimate(op: &OperatorMatrix, side: Side, cfg: &Settings) -> Result<FrozenSymbol, OracleError> {
        let sampling = Sampling::from_settings(cfg);
        let named = op.named_coefficients();
        let exprs: Vec<_> = named.iter().map(|(_, e)| (*e).clone()).collect();
        let (values, certificates) = expr_limits(&exprs, side, sampling).map_err(|e| {
            let coefficient = match &e {
                LimitError::NotConvergent { index, .. } => named[*index].0.clone(),
                LimitError::Eval { .. } => "?".to_string(),
            };
            OracleError::NoLimit { coefficient, side, source: e }
        })?;

        let derivs: Vec<_> = exprs.iter().map(|e| e.differentiate(Var::X).simplify()).collect();
        let tape = Tape::compile(&derivs);
        let xs = sampling.points(side);
        let mut out = vec![Complex64::new(0.0, 0.0); derivs.len()];
        for &x in &xs[xs.len().saturating_sub(2)..] {
            tape.eval(x, Complex64::new(0.0, 0.0), &mut out).map_err(|_| OracleError::Derivative {
                coefficient: "?".into(),
                x,
                value: f64::INFINITY,
            })?;
            if let Some(j) = out.iter().position(|v| !(v.norm() <= cfg.deriv_tol)) {
                return Err(OracleError::Derivative { coefficient: named[j].0.clone(), x, value: out[j].norm() });
            }
        }

        let (m, n) = (op.m(), op.n());
        Ok(FrozenSymbol {
            side,
            a: values[..=m].to_vec(),
            b: values[m + 1..m + n + 2].to_vec(),
            c: values[m + n + 2..values.len() - 1].to_vec(),
            d: values[values.len() - 1],
            certificates,
        })
    }

    /// Symbol matrix entries (a(ξ), b(ξ), c(ξ), d).
    pub fn symbol(&self, xi: f64) -> [Complex64; 4] {
        [horner(&self.a, xi), horner(&self.b, xi), horner(&self.c, xi), self.d]
    }

    /// Roots of (a(ξ) − λ)(d − λ) − b(ξ)c(ξ) = 0.
    pub fn det_roots(&self, xi: f64) -> [Complex64; 2] {
        let [a, b, c, d] = self.symbol(xi);
        quadratic_eigs(a, b, c, d)
    }
}

/// Eigenvalues of [[a, b], [c, d]], computed without cancellation.
pub fn quadratic_eigs(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> [Complex64; 2] {
    let half = (a + d) / 2.0;
    let disc = (((a - d) / 2.0).powi(2) + b * c).sqrt();
    let big = if (half + disc).norm() >= (half - disc).norm() { half + disc } else { half - disc };
    let det = a * d - b * c;
    let small = if big.norm() == 0.0 { Complex64::new(0.0, 0.0) } else { det / big };
    [big, small]
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DetRoot {
    pub lambda: Complex64,
    /// λ coincides with d^±, where the Schur reduction does not apply.
    pub at_d: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DetRoots {
    pub xi: f64,
    pub roots: Vec<DetRoot>,
}

/// Closed-form determinant roots at every ξ.
pub fn det_scan(fs: &FrozenSymbol, xi_grid: &[f64]) -> Vec<DetRoots> {
    xi_grid
        .par_iter()
        .map(|&xi| {
            let roots = fs
                .det_roots(xi)
                .into_iter()
                .map(|lambda| DetRoot { lambda, at_d: (lambda - fs.d).norm() <= 1e-12 * (1.0 + fs.d.norm()) })
                .collect();
            DetRoots { xi, roots }
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    DirichletTruncate,
    Periodic,
}

/// Grid nodes on [−L, L]: periodic grids start at −L, truncated ones are cell-centred.
pub fn nodes(l: f64, n: usize, bc: Boundary) -> Vec<f64> {
    let h = 2.0 * l / n as f64;
    let shift = match bc {
        Boundary::Periodic => 0.0,
        Boundary::DirichletTruncate => 0.5,
    };
    (0..n).map(|j| -l + (j as f64 + shift) * h).collect()
}

fn stencil(n: usize, bc: Boundary, taps: &[(isize, Complex64)]) -> Array2<Complex64> {
    let mut m = Array2::zeros((n, n));
    for j in 0..n {
        for &(off, w) in taps {
            let col = j as isize + off;
            let col = match bc {
                Boundary::Periodic => col.rem_euclid(n as isize),
                Boundary::DirichletTruncate if col < 0 || col >= n as isize => continue,
                Boundary::DirichletTruncate => col,
            };
            m[[j, col as usize]] += w;
        }
    }
    m
}

/// Matrices of D^α = (−i d/dx)^α for α = 0..=max: even powers compose the
/// three-point second difference, odd powers add one central first difference.
fn derivative_powers(n: usize, h: f64, bc: Boundary, max: usize) -> Vec<Array2<Complex64>> {
    let r = |v: f64| Complex64::new(v, 0.0);
    let d1 = stencil(n, bc, &[(-1, Complex64::new(0.0, 0.5 / h)), (1, Complex64::new(0.0, -0.5 / h))]);
    let d2 = stencil(n, bc, &[(-1, r(-1.0 / (h * h))), (0, r(2.0 / (h * h))), (1, r(-1.0 / (h * h)))]);
    let mut out = vec![Array2::eye(n)];
    for alpha in 1..=max {
        let next = if alpha % 2 == 0 { out[alpha - 2].dot(&d2) } else { out[alpha - 1].dot(&d1) };
        out.push(next);
    }
    out
}

/// Σ diag(coeff_α(x_j)) D^α.
fn assemble(coeffs: &[crate::expr::Expr], xs: &[f64], pows: &[Array2<Complex64>]) -> Result<Array2<Complex64>, OracleError> {
    let n = xs.len();
    let mut m = Array2::<Complex64>::zeros((n, n));
    for (alpha, e) in coeffs.iter().enumerate() {
        if e.is_zero() {
            continue;
        }
        for (j, &x) in xs.iter().enumerate() {
            let v = e
                .eval(x, Complex64::new(0.0, 0.0))
                .map_err(|err| OracleError::Grid(format!("coefficient of order {alpha} at x = {x}: {err}")))?;
            if v != Complex64::new(0.0, 0.0) {
                let row = pows[alpha].row(j);
                let mut target = m.row_mut(j);
                target.scaled_add(v, &row);
            }
        }
    }
    Ok(m)
}

/// Eigenvalues of the 2N × 2N finite-difference block matrix on [−L, L].
pub fn discretize_and_eig(op: &OperatorMatrix, l: f64, n: usize, bc: Boundary) -> Result<Vec<Complex64>, OracleError> {
    if n > MAX_DENSE_N {
        return Err(OracleError::Size { n, max: MAX_DENSE_N });
    }
    if n < 16 || !(l > 0.0 && l.is_finite()) {
        return Err(OracleError::Grid(format!("need N >= 16 and L > 0, got N = {n}, L = {l}")));
    }
    if op.m() >= n {
        return Err(OracleError::Grid(format!("stencil of order {} does not fit {n} nodes", op.m())));
    }
    let h = 2.0 * l / n as f64;
    let xs = nodes(l, n, bc);
    let pows = derivative_powers(n, h, bc, op.m());
    let blocks = [
        assemble(op.a(), &xs, &pows)?,
        assemble(op.b(), &xs, &pows)?,
        assemble(op.c(), &xs, &pows)?,
        assemble(std::slice::from_ref(op.d()), &xs, &pows)?,
    ];
    let mut full = Array2::<Complex64>::zeros((2 * n, 2 * n));
    for (k, blk) in blocks.iter().enumerate() {
        let (r, c) = (k / 2 * n, k % 2 * n);
        full.slice_mut(ndarray::s![r..r + n, c..c + n]).assign(blk);
    }
    let eig = full.eigvals().map_err(|e| OracleError::Linalg(e.to_string()))?;
    Ok(eig.to_vec())
}

/// Exact eigenvalues of the periodic discretization of a constant-coefficient
/// operator: the 2 × 2 symbol with D replaced by sin(ξh)/h and D² by (2 − 2cos ξh)/h².
pub fn circulant_eigenvalues(op: &OperatorMatrix, l: f64, n: usize) -> Result<Vec<Complex64>, OracleError> {
    if !op.is_constant() {
        return Err(OracleError::Grid("circulant eigenvalues need constant coefficients".into()));
    }
    let zero = Complex64::new(0.0, 0.0);
    let consts = |list: &[crate::expr::Expr]| -> Result<Vec<Complex64>, OracleError> {
        list.iter()
            .map(|e| e.eval(0.0, zero).map_err(|err| OracleError::Grid(err.to_string())))
            .collect()
    };
    let (a, b, c) = (consts(op.a())?, consts(op.b())?, consts(op.c())?);
    let d = consts(std::slice::from_ref(op.d()))?[0];
    let h = 2.0 * l / n as f64;
    let mut out = Vec::with_capacity(2 * n);
    for k in 0..n {
        let theta = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
        let s1 = theta.sin() / h;
        let s2 = (2.0 - 2.0 * theta.cos()) / (h * h);
        let sym = |coeffs: &[Complex64]| {
            coeffs
                .iter()
                .enumerate()
                .map(|(alpha, &v)| v * s2.powi((alpha / 2) as i32) * s1.powi((alpha % 2) as i32))
                .sum::<Complex64>()
        };
        out.extend(quadratic_eigs(sym(&a), sym(&b), sym(&c), d));
    }
    Ok(out)
}

/// One run of the truncation study.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TruncationRun {
    pub l: f64,
    pub n: usize,
    pub h: f64,
    pub eigenvalues: usize,
    /// sup over the target points of the distance to the nearest eigenvalue.
    pub target_to_cloud: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TruncationReport {
    pub targets: usize,
    pub runs: Vec<TruncationRun>,
    /// True when target_to_cloud decreases strictly with L.
    pub monotone_shrink: bool,
    pub note: String,
}

/// Truncates on [−L, L] with h·L held fixed and measures how well each
/// eigenvalue cloud covers `targets`.
pub fn truncation_study(op: &OperatorMatrix, ls: &[f64], h_times_l: f64, targets: &[Complex64]) -> Result<TruncationReport, OracleError> {
    let mut runs = Vec::new();
    for &l in ls {
        let n = (2.0 * l * l / h_times_l).round() as usize;
        let eig = discretize_and_eig(op, l, n, Boundary::DirichletTruncate)?;
        let dist = one_sided_hausdorff(targets, &eig);
        log::info!("truncation L = {l}, N = {n}: coverage gap {dist:.4}");
        runs.push(TruncationRun { l, n, h: 2.0 * l / n as f64, eigenvalues: eig.len(), target_to_cloud: dist });
    }
    let monotone_shrink = runs.windows(2).all(|w| w[1].target_to_cloud < w[0].target_to_cloud);
    let note = if monotone_shrink {
        "coverage gap shrank with every L".to_string()
    } else {
        "coverage gap does not shrink monotonically in L; truncated problems do not approximate this part of the spectrum".to_string()
    };
    Ok(TruncationReport { targets: targets.len(), runs, monotone_shrink, note })
}
