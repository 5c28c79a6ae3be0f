//! The essential spectrum as the union of the regular and singular parts.

pub mod regular;
pub mod singular;

use std::io::{self, Write};

use num_complex::Complex64;
use serde::Serialize;

use crate::asymptotics::{limit_points_at_infinity, ExceptionalSet};
use crate::config::Settings;
use crate::geometry::PointIndex;
use crate::model::OperatorMatrix;
use crate::schur::{SchurError, SchurSymbol};

pub use regular::{regular_part, Param, RegularPoint};
pub use singular::{singular_part, FitError, Flags, SideSummary, SingularPoint, Skip, SkipReason};

pub const CSV_HEADER: &str = "part,side,param,re_lambda,im_lambda,branch_id,flags";
/// At most this many skipped ξ are listed in the report; the rest are only counted.
pub const MAX_REPORTED_SKIPS: usize = 2000;

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct SpectrumSet {
    pub regular: Vec<RegularPoint>,
    pub singular: Vec<SingularPoint>,
    pub exceptional: ExceptionalSet,
}

impl SpectrumSet {
    pub fn regular_lambdas(&self) -> Vec<Complex64> {
        self.regular.iter().map(|p| p.lambda).collect()
    }

    pub fn singular_lambdas(&self) -> Vec<Complex64> {
        self.singular.iter().map(|p| p.lambda).collect()
    }

    pub fn all_lambdas(&self) -> Vec<Complex64> {
        let mut v = self.regular_lambdas();
        v.extend(self.singular_lambdas());
        v
    }

    /// Number of distinct singular branches.
    pub fn branch_count(&self) -> usize {
        let mut ids: Vec<usize> = self.singular.iter().map(|p| p.branch_id).collect();
        ids.sort_unstable();
        ids.dedup();
        ids.len()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{CSV_HEADER}")?;
        for p in &self.regular {
            writeln!(w, "regular,·,{},{},{},{},", p.param.csv(), p.lambda.re, p.lambda.im, p.segment)?;
        }
        for p in &self.singular {
            writeln!(
                w,
                "singular,{},{},{},{},{},{}",
                p.side,
                p.xi,
                p.lambda.re,
                p.lambda.im,
                p.branch_id,
                p.flags.csv()
            )?;
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Report {
    pub sides: Vec<SideSummary>,
    pub skipped: Vec<Skip>,
    pub skipped_total: usize,
    pub warnings: Vec<String>,
    pub regular_points: usize,
    pub singular_points: usize,
    pub branches: usize,
    pub settings: Settings,
}

/// Runs the regular part, the exceptional-set estimate and the singular part.
///
/// Failures inside the singular sweep do not abort; they end up in the report.
pub fn essential_spectrum(op: &OperatorMatrix, cfg: &Settings) -> Result<(SpectrumSet, Report), SchurError> {
    let symbol = SchurSymbol::build_with_limit(op, cfg.node_limit)?;
    Ok(essential_spectrum_with(op, &symbol, cfg))
}

pub fn essential_spectrum_with(op: &OperatorMatrix, symbol: &SchurSymbol, cfg: &Settings) -> (SpectrumSet, Report) {
    let delta = op.delta();
    let (regular, exceptional) = rayon::join(|| regular_part(&delta, cfg), || limit_points_at_infinity(op.d(), cfg));
    let lambdas: Vec<Complex64> = regular.iter().map(|p| p.lambda).collect();
    let index = PointIndex::from_points(&lambdas, cfg.curve_res.max(1e-12));
    let ctx = singular::FlagContext {
        regular: &index,
        regular_tol: cfg.curve_res,
        exceptional: &exceptional,
        exc_tol: cfg.exc_tol,
    };
    let sing = singular_part(symbol, op.n(), &cfg.xi_grid(), cfg, Some(&ctx));

    let mut warnings = Vec::new();
    for s in &sing.sides {
        match s.fit_residual {
            Some(r) if r > cfg.fit_tol => warnings.push(format!(
                "side {}: rational fit residual {r:e} exceeds fit_tol {:e}",
                s.side, cfg.fit_tol
            )),
            None => warnings.push(format!("side {}: no rational fit; singular part is empty on this side", s.side)),
            _ => {}
        }
    }
    if regular.len() >= cfg.max_points {
        warnings.push(format!("regular part hit max_points = {}", cfg.max_points));
    }
    let skipped_total = sing.skipped.len();
    if skipped_total > 0 {
        log::info!("{skipped_total} seeds skipped in the singular sweep");
    }
    let set = SpectrumSet { regular, singular: sing.points, exceptional };
    let report = Report {
        sides: sing.sides,
        skipped: sing.skipped.into_iter().take(MAX_REPORTED_SKIPS).collect(),
        skipped_total,
        warnings,
        regular_points: set.regular.len(),
        singular_points: set.singular.len(),
        branches: set.branch_count(),
        settings: cfg.clone(),
    };
    (set, report)
}
