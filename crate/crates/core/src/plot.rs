//! Minimal SVG rendering of a spectrum set.

use std::collections::BTreeMap;
use std::fmt::Write;

use num_complex::Complex64;

use crate::config::Window;
use crate::spectrum::{Param, SpectrumSet};

pub const REGULAR_COLOR: &str = "#d62728";
pub const SINGULAR_COLOR: &str = "#1f4fbf";
const SIZE: f64 = 640.0;
const PAD: f64 = 48.0;

struct Frame {
    w: Window,
    sx: f64,
    sy: f64,
}

impl Frame {
    fn new(w: Window) -> Frame {
        let span = SIZE - 2.0 * PAD;
        Frame { w, sx: span / (w.re_max - w.re_min), sy: span / (w.im_max - w.im_min) }
    }

    fn map(&self, z: Complex64) -> (f64, f64) {
        (PAD + (z.re - self.w.re_min) * self.sx, SIZE - PAD - (z.im - self.w.im_min) * self.sy)
    }

    fn points(&self, zs: &[Complex64]) -> String {
        let mut s = String::new();
        for (i, &z) in zs.iter().enumerate() {
            let (x, y) = self.map(z);
            if i > 0 {
                s.push(' ');
            }
            let _ = write!(s, "{x:.2},{y:.2}");
        }
        s
    }
}

fn curve(out: &mut String, f: &Frame, class: &str, color: &str, zs: &[Complex64]) {
    if zs.len() >= 2 {
        let _ = writeln!(
            out,
            r#"<polyline class="{class}" fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            f.points(zs)
        );
    } else if let Some(&z) = zs.first() {
        let (x, y) = f.map(z);
        let _ = writeln!(out, r#"<circle class="{class}" cx="{x:.2}" cy="{y:.2}" r="2.5" fill="{color}"/>"#);
    }
}

/// Regular part in red, one polyline per connected run; singular branches in
/// blue, one polyline per branch id; exceptional points as open circles.
pub fn render_svg(set: &SpectrumSet, w: &Window) -> String {
    let f = Frame::new(*w);
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r##"<rect x="{PAD}" y="{PAD}" width="{0}" height="{0}" fill="none" stroke="#444"/>"##,
        SIZE - 2.0 * PAD
    );
    if w.re_min < 0.0 && w.re_max > 0.0 {
        let (x, _) = f.map(Complex64::new(0.0, 0.0));
        let _ = writeln!(out, r##"<line class="axis" x1="{x:.2}" y1="{PAD}" x2="{x:.2}" y2="{}" stroke="#bbb"/>"##, SIZE - PAD);
    }
    if w.im_min < 0.0 && w.im_max > 0.0 {
        let (_, y) = f.map(Complex64::new(0.0, 0.0));
        let _ = writeln!(out, r##"<line class="axis" x1="{PAD}" y1="{y:.2}" x2="{}" y2="{y:.2}" stroke="#bbb"/>"##, SIZE - PAD);
    }
    let label = |out: &mut String, x: f64, y: f64, anchor: &str, text: String| {
        let _ = writeln!(out, r#"<text x="{x:.1}" y="{y:.1}" font-size="12" font-family="sans-serif" text-anchor="{anchor}">{text}</text>"#);
    };
    label(&mut out, PAD, SIZE - PAD + 16.0, "start", format!("{}", w.re_min));
    label(&mut out, SIZE - PAD, SIZE - PAD + 16.0, "end", format!("{}", w.re_max));
    label(&mut out, PAD - 6.0, SIZE - PAD, "end", format!("{}i", w.im_min));
    label(&mut out, PAD - 6.0, PAD + 10.0, "end", format!("{}i", w.im_max));
    label(&mut out, SIZE / 2.0, SIZE - 12.0, "middle", "Re λ".to_string());

    let mut runs: BTreeMap<usize, Vec<Complex64>> = BTreeMap::new();
    let mut tags = Vec::new();
    for p in &set.regular {
        match p.param {
            Param::X(_) => runs.entry(p.segment).or_default().push(p.lambda),
            _ => tags.push(p.lambda),
        }
    }
    for zs in runs.values() {
        curve(&mut out, &f, "regular", REGULAR_COLOR, zs);
    }
    for &z in &tags {
        curve(&mut out, &f, "regular-limit", REGULAR_COLOR, &[z]);
    }

    let mut branches: BTreeMap<usize, Vec<Complex64>> = BTreeMap::new();
    for p in &set.singular {
        branches.entry(p.branch_id).or_default().push(p.lambda);
    }
    for zs in branches.values() {
        curve(&mut out, &f, "singular", SINGULAR_COLOR, zs);
    }

    for &z in &set.exceptional.points {
        if w.contains(z) {
            let (x, y) = f.map(z);
            let _ = writeln!(out, r#"<circle class="exceptional" cx="{x:.2}" cy="{y:.2}" r="4" fill="none" stroke="black"/>"#);
        }
    }
    out.push_str("</svg>\n");
    out
}

/// Number of `<polyline>` elements carrying the given class.
pub fn count_polylines(svg: &str, class: &str) -> usize {
    svg.matches(&format!(r#"<polyline class="{class}""#)).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::asymptotics::{ExceptionalSet, Side};
    use crate::spectrum::{Flags, RegularPoint, SingularPoint};

    #[test]
    fn two_colour_families() {
        let reg = |x: f64, seg| RegularPoint { param: Param::X(x), lambda: Complex64::new(-x, 0.0), segment: seg };
        let sing = |xi: f64, id| SingularPoint {
            side: Side::Plus,
            xi,
            lambda: Complex64::new(xi, 1.0 + id as f64),
            branch_id: id,
            residual: 0.0,
            flags: Flags::default(),
        };
        let set = SpectrumSet {
            regular: vec![reg(1.0, 0), reg(2.0, 0), reg(3.0, 1)],
            singular: vec![sing(0.0, 0), sing(0.5, 0), sing(0.0, 1), sing(0.5, 1), sing(0.0, 2)],
            exceptional: ExceptionalSet::declared(vec![Complex64::new(0.0, 0.0)]),
        };
        let svg = render_svg(&set, &Window::square(5.0));
        assert_eq!(count_polylines(&svg, "regular"), 1);
        assert_eq!(count_polylines(&svg, "singular"), 2);
        assert_eq!(svg.matches("<circle").count(), 3);
        assert!(svg.contains(REGULAR_COLOR) && svg.contains(SINGULAR_COLOR));
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
    }
}
