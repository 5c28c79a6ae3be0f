//! Tunable tolerances and sampling parameters shared by all stages.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::expr::{parse, Var};

/// A complex number written with the expression grammar, e.g. `"-3 + 2*i"`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ComplexLit(pub Complex64);

impl FromStr for ComplexLit {
    type Err = String;

    fn from_str(s: &str) -> Result<ComplexLit, String> {
        let e = parse(s).map_err(|e| format!("{s:?}: {e}"))?;
        if e.depends_on(Var::X) || e.depends_on(Var::Lambda) {
            return Err(format!("{s:?}: expected a constant"));
        }
        let v = e
            .eval(0.0, Complex64::new(0.0, 0.0))
            .map_err(|err| format!("{s:?}: {err}"))?;
        Ok(ComplexLit(v))
    }
}

impl fmt::Display for ComplexLit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let Complex64 { re, im } = self.0;
        if im < 0.0 {
            write!(f, "{re} - {}*i", -im)
        } else {
            write!(f, "{re} + {im}*i")
        }
    }
}

impl Serialize for ComplexLit {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ComplexLit {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<ComplexLit, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(ComplexLit(Complex64::new(v, 0.0))),
            Raw::Text(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Rectangle `[re_min, re_max] x [im_min, im_max]` in the λ-plane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 4]", into = "[f64; 4]")]
pub struct Window {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl Window {
    pub fn new(re_min: f64, re_max: f64, im_min: f64, im_max: f64) -> Result<Window, String> {
        let ok = [re_min, re_max, im_min, im_max].iter().all(|v| v.is_finite());
        if !ok || re_min >= re_max || im_min >= im_max {
            return Err(format!("degenerate window [{re_min}, {re_max}] x [{im_min}, {im_max}]"));
        }
        Ok(Window { re_min, re_max, im_min, im_max })
    }

    pub fn square(half: f64) -> Window {
        Window { re_min: -half, re_max: half, im_min: -half, im_max: half }
    }

    pub fn contains(&self, z: Complex64) -> bool {
        (self.re_min..=self.re_max).contains(&z.re) && (self.im_min..=self.im_max).contains(&z.im)
    }

    /// Like [`Window::contains`] with every side pushed outwards by `margin`.
    pub fn contains_with(&self, z: Complex64, margin: f64) -> bool {
        (self.re_min - margin..=self.re_max + margin).contains(&z.re)
            && (self.im_min - margin..=self.im_max + margin).contains(&z.im)
    }

    pub fn center(&self) -> Complex64 {
        Complex64::new(0.5 * (self.re_min + self.re_max), 0.5 * (self.im_min + self.im_max))
    }

    pub fn half_diagonal(&self) -> f64 {
        0.5 * (self.re_max - self.re_min).hypot(self.im_max - self.im_min)
    }
}

impl TryFrom<[f64; 4]> for Window {
    type Error = String;
    fn try_from(v: [f64; 4]) -> Result<Window, String> {
        Window::new(v[0], v[1], v[2], v[3])
    }
}

impl From<Window> for [f64; 4] {
    fn from(w: Window) -> [f64; 4] {
        [w.re_min, w.re_max, w.im_min, w.im_max]
    }
}

impl FromStr for Window {
    type Err = String;
    fn from_str(s: &str) -> Result<Window, String> {
        let parts: Vec<f64> = s
            .split(',')
            .map(|p| p.trim().parse::<f64>().map_err(|e| format!("window {s:?}: {e}")))
            .collect::<Result<_, _>>()?;
        let arr: [f64; 4] = parts
            .try_into()
            .map_err(|_| format!("window {s:?}: expected four numbers re_min,re_max,im_min,im_max"))?;
        Window::try_from(arr)
    }
}

/// Every tolerance and sampling knob. Loaded from the `[settings]` table of an
/// operator file; absent keys take the defaults below.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Settings {
    /// Half-width of the Chebyshev part of the validation grid.
    pub grid_half_width: f64,
    pub grid_points: usize,
    /// Largest |x| reached by the geometric tails of the validation grid.
    pub grid_tail: f64,

    pub limit_tol: f64,
    pub x0: f64,
    pub rho: f64,
    #[serde(rename = "T")]
    pub t_max: usize,

    pub escape_bound: f64,
    pub cluster_tol: f64,
    pub windows: usize,
    pub windows_used: usize,
    pub window_samples: usize,
    /// Only look at x -> +inf when estimating limit points of d.
    pub one_sided: bool,
    pub declared_exceptional_set: Option<Vec<ComplexLit>>,

    pub curve_res: f64,
    pub max_points: usize,

    pub root_tol: f64,
    pub fit_tol: f64,
    pub dedupe_tol: f64,
    pub exc_tol: f64,
    pub xi_count: usize,
    pub xi_min: f64,
    pub xi_max: f64,

    pub deriv_tol: f64,
    pub node_limit: usize,
    pub theta_points: usize,

    pub window: Window,
    pub probes: Vec<ComplexLit>,
}

impl Default for Settings {
    fn default() -> Settings {
        Settings {
            grid_half_width: 20.0,
            grid_points: 2048,
            grid_tail: 1e6,
            limit_tol: 1e-9,
            x0: 16.0,
            rho: 2.0,
            t_max: 40,
            escape_bound: 1e8,
            cluster_tol: 1e-4,
            windows: 24,
            windows_used: 6,
            window_samples: 32768,
            one_sided: false,
            declared_exceptional_set: None,
            curve_res: 1e-3,
            max_points: 200_000,
            root_tol: 1e-8,
            fit_tol: 1e-7,
            dedupe_tol: 1e-9,
            exc_tol: 1e-4,
            xi_count: 400,
            xi_min: 1e-3,
            xi_max: 1e3,
            deriv_tol: 1e-7,
            node_limit: 200_000,
            theta_points: 720,
            window: Window::square(10.0),
            probes: vec![
                ComplexLit(Complex64::new(0.0, 2.0)),
                ComplexLit(Complex64::new(-3.0, 1.0)),
                ComplexLit(Complex64::new(3.0, -2.0)),
            ],
        }
    }
}

impl Settings {
    /// Rejects non-positive tolerances and unusable sampling parameters.
    pub fn check(&self) -> Result<(), String> {
        let positive = [
            ("grid_half_width", self.grid_half_width),
            ("grid_tail", self.grid_tail),
            ("limit_tol", self.limit_tol),
            ("x0", self.x0),
            ("escape_bound", self.escape_bound),
            ("cluster_tol", self.cluster_tol),
            ("curve_res", self.curve_res),
            ("root_tol", self.root_tol),
            ("fit_tol", self.fit_tol),
            ("dedupe_tol", self.dedupe_tol),
            ("exc_tol", self.exc_tol),
            ("xi_min", self.xi_min),
            ("deriv_tol", self.deriv_tol),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(format!("setting {name} must be positive, got {v}"));
            }
        }
        if !(self.rho > 1.0) {
            return Err(format!("setting rho must exceed 1, got {}", self.rho));
        }
        if self.xi_max <= self.xi_min {
            return Err("setting xi_max must exceed xi_min".into());
        }
        if self.t_max < 4 || self.grid_points < 2 || self.windows == 0 || self.window_samples < 2 {
            return Err("settings T, grid_points, windows or window_samples too small".into());
        }
        if self.windows_used == 0 || self.windows_used > self.windows {
            return Err("setting windows_used must lie in 1..=windows".into());
        }
        if self.theta_points < 2 || self.xi_count == 0 || self.max_points < 16 {
            return Err("settings theta_points, xi_count or max_points too small".into());
        }
        Window::new(self.window.re_min, self.window.re_max, self.window.im_min, self.window.im_max)?;
        Ok(())
    }

    /// Default ξ grid: 0 together with ±logspace(xi_min, xi_max, xi_count), ascending.
    pub fn xi_grid(&self) -> Vec<f64> {
        let n = self.xi_count;
        let (l0, l1) = (self.xi_min.log10(), self.xi_max.log10());
        let pos: Vec<f64> = (0..n)
            .map(|i| {
                let t = if n == 1 { 0.0 } else { i as f64 / (n - 1) as f64 };
                10f64.powf(l0 + t * (l1 - l0))
            })
            .collect();
        let mut grid: Vec<f64> = pos.iter().rev().map(|v| -v).collect();
        grid.push(0.0);
        grid.extend(pos);
        grid
    }

    /// Validation grid: Chebyshev points on [-X, X], the origin, and geometric tails out to `grid_tail`.
    pub fn x_grid(&self) -> Vec<f64> {
        let (n, half) = (self.grid_points, self.grid_half_width);
        let mut grid: Vec<f64> = (0..n)
            .map(|j| -half * (std::f64::consts::PI * (j as f64 + 0.5) / n as f64).cos())
            .collect();
        grid.push(0.0);
        if self.grid_tail > half {
            let steps = 64;
            let ratio = (self.grid_tail / half).powf(1.0 / steps as f64);
            for t in 1..=steps {
                let v = half * ratio.powi(t);
                grid.push(v);
                grid.push(-v);
            }
        }
        grid.sort_by(f64::total_cmp);
        grid.dedup();
        grid
    }
}
