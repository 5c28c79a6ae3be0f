//! Sampling of cl{Δ(ℝ)} inside the plot window.

use num_complex::Complex64;
use serde::Serialize;

use crate::asymptotics::{expr_limits, Sampling, Side};
use crate::config::{Settings, Window};
use crate::expr::{Expr, Tape};

/// Abscissa of a regular point; the infinite tags mark limits of Δ.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Param {
    X(f64),
    PosInf,
    NegInf,
}

impl Param {
    pub fn csv(&self) -> String {
        match self {
            Param::X(x) => x.to_string(),
            Param::PosInf => "inf".to_string(),
            Param::NegInf => "-inf".to_string(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RegularPoint {
    pub param: Param,
    pub lambda: Complex64,
    /// Index of the connected run of samples inside the window.
    pub segment: usize,
}

struct Sampler {
    tape: Tape,
}

impl Sampler {
    fn eval(&self, x: f64) -> Option<Complex64> {
        let mut out = [Complex64::new(0.0, 0.0)];
        self.tape.eval(x, Complex64::new(0.0, 0.0), &mut out).ok()?;
        Some(out[0])
    }
}

/// True when the segment [a, b] may pass within `margin` of the window.
fn near_window(w: &Window, a: Complex64, b: Complex64, margin: f64) -> bool {
    let (lo_re, hi_re) = (a.re.min(b.re), a.re.max(b.re));
    let (lo_im, hi_im) = (a.im.min(b.im), a.im.max(b.im));
    hi_re >= w.re_min - margin && lo_re <= w.re_max + margin && hi_im >= w.im_min - margin && lo_im <= w.im_max + margin
}

/// Samples of Δ on an adaptively refined x-grid.
///
/// Starting from the validation grid, intervals whose image chord is longer
/// than `curve_res` near the window are bisected until the chord is short
/// enough, the interval degenerates, or `max_points` is reached. Only samples
/// inside the window are returned, followed by the limits of Δ at ±∞ when
/// they converge and lie inside the window.
pub fn regular_part(delta: &Expr, cfg: &Settings) -> Vec<RegularPoint> {
    let sampler = Sampler { tape: Tape::compile(std::slice::from_ref(delta)) };
    let w = cfg.window;
    let res = cfg.curve_res;
    let mut samples: Vec<(f64, Complex64)> = cfg
        .x_grid()
        .into_iter()
        .filter_map(|x| sampler.eval(x).map(|v| (x, v)))
        .collect();
    let mut budget = cfg.max_points.saturating_sub(samples.len());
    let mut refined = Vec::with_capacity(samples.len());
    for pair in samples.windows(2) {
        refined.push(pair[0]);
        refine(&sampler, pair[0], pair[1], &w, res, &mut budget, &mut refined);
    }
    if let Some(last) = samples.last() {
        refined.push(*last);
    }
    if budget == 0 {
        log::warn!("regular part: point budget of {} exhausted; curve may be under-resolved", cfg.max_points);
    }
    samples = refined;

    let mut points = Vec::new();
    let mut segment = 0;
    let mut inside_run = false;
    let mut last: Option<Complex64> = None;
    for (x, v) in samples {
        if w.contains(v) {
            if !inside_run && last.is_some() {
                segment += 1;
            }
            inside_run = true;
            if last != Some(v) {
                points.push(RegularPoint { param: Param::X(x), lambda: v, segment });
            }
            last = Some(v);
        } else {
            inside_run = false;
        }
    }

    let sampling = Sampling::from_settings(cfg);
    for (side, tag) in [(Side::Minus, Param::NegInf), (Side::Plus, Param::PosInf)] {
        match expr_limits(std::slice::from_ref(delta), side, sampling) {
            Ok((v, _)) if w.contains(v[0]) => {
                let seg = points
                    .iter()
                    .filter(|p| matches!(p.param, Param::X(_)))
                    .min_by(|a, b| (a.lambda - v[0]).norm().total_cmp(&(b.lambda - v[0]).norm()))
                    .map_or(segment, |p| p.segment);
                points.push(RegularPoint { param: tag, lambda: v[0], segment: seg });
            }
            Ok(_) => {}
            Err(e) => log::info!("Δ has no certified limit at {side}∞: {e}"),
        }
    }
    points
}

fn refine(
    s: &Sampler,
    a: (f64, Complex64),
    b: (f64, Complex64),
    w: &Window,
    res: f64,
    budget: &mut usize,
    out: &mut Vec<(f64, Complex64)>,
) {
    if *budget == 0 || (a.1 - b.1).norm() <= res || !near_window(w, a.1, b.1, res) {
        return;
    }
    let mid = 0.5 * (a.0 + b.0);
    if mid <= a.0 || mid >= b.0 || (b.0 - a.0) <= 1e-13 * (1.0 + a.0.abs()) {
        return;
    }
    let Some(v) = s.eval(mid) else {
        return;
    };
    *budget -= 1;
    let m = (mid, v);
    refine(s, a, m, w, res, budget, out);
    out.push(m);
    refine(s, m, b, w, res, budget, out);
}
