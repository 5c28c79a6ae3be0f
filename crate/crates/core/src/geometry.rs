//! Distances between point clouds and polylines in the complex plane.

use std::collections::HashMap;

use num_complex::Complex64;

/// Distance from `p` to the segment `[a, b]`.
pub fn segment_distance(p: Complex64, a: Complex64, b: Complex64) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_sqr();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let t = ((p - a) * ab.conj()).re / len2;
    (p - (a + ab * t.clamp(0.0, 1.0))).norm()
}

/// Distance from `p` to the polyline through `pts` (a single point counts as a polyline).
pub fn polyline_distance(p: Complex64, pts: &[Complex64]) -> f64 {
    match pts {
        [] => f64::INFINITY,
        [a] => (p - a).norm(),
        _ => pts
            .windows(2)
            .map(|w| segment_distance(p, w[0], w[1]))
            .fold(f64::INFINITY, f64::min),
    }
}

/// Uniform-grid bucket index for nearest-neighbour queries.
pub struct PointIndex {
    cell: f64,
    buckets: HashMap<(i64, i64), Vec<Complex64>>,
    len: usize,
    bounds: Option<(i64, i64, i64, i64)>,
}

impl PointIndex {
    pub fn new(cell: f64) -> PointIndex {
        assert!(cell > 0.0);
        PointIndex { cell, buckets: HashMap::new(), len: 0, bounds: None }
    }

    pub fn from_points(points: &[Complex64], cell: f64) -> PointIndex {
        let mut idx = PointIndex::new(cell);
        for &p in points {
            idx.insert(p);
        }
        idx
    }

    fn key(&self, p: Complex64) -> (i64, i64) {
        ((p.re / self.cell).floor() as i64, (p.im / self.cell).floor() as i64)
    }

    pub fn insert(&mut self, p: Complex64) {
        let k = self.key(p);
        self.buckets.entry(k).or_default().push(p);
        self.len += 1;
        self.bounds = Some(match self.bounds {
            None => (k.0, k.0, k.1, k.1),
            Some((a, b, c, d)) => (a.min(k.0), b.max(k.0), c.min(k.1), d.max(k.1)),
        });
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// True when some indexed point lies within `r` of `p`.
    pub fn within(&self, p: Complex64, r: f64) -> bool {
        let (kx, ky) = self.key(p);
        let reach = (r / self.cell).ceil() as i64;
        for i in -reach..=reach {
            for j in -reach..=reach {
                if let Some(v) = self.buckets.get(&(kx + i, ky + j)) {
                    if v.iter().any(|q| (p - q).norm() <= r) {
                        return true;
                    }
                }
            }
        }
        false
    }

    /// Distance from `p` to the closest indexed point, infinite when empty.
    pub fn nearest_distance(&self, p: Complex64) -> f64 {
        let Some((x0, x1, y0, y1)) = self.bounds else {
            return f64::INFINITY;
        };
        let (kx, ky) = self.key(p);
        let max_ring = [kx - x0, x1 - kx, ky - y0, y1 - ky].into_iter().map(i64::abs).max().unwrap_or(0);
        let mut best = f64::INFINITY;
        let mut visited = 0usize;
        let scan = |c: (i64, i64), best: &mut f64| {
            if let Some(v) = self.buckets.get(&c) {
                for q in v {
                    *best = best.min((p - q).norm());
                }
            }
        };
        for ring in 0..=max_ring {
            // Any point in ring r is at least (r - 1) cells away.
            if (ring - 1) as f64 * self.cell > best {
                break;
            }
            // Wide empty rings cost more than visiting every occupied cell.
            if visited > self.buckets.len() {
                for (&(bx, by), v) in &self.buckets {
                    if (bx - kx).abs().max((by - ky).abs()) >= ring {
                        for q in v {
                            best = best.min((p - q).norm());
                        }
                    }
                }
                break;
            }
            if ring == 0 {
                scan((kx, ky), &mut best);
                visited += 1;
                continue;
            }
            for i in -ring..=ring {
                scan((kx + i, ky - ring), &mut best);
                scan((kx + i, ky + ring), &mut best);
            }
            for j in 1 - ring..ring {
                scan((kx - ring, ky + j), &mut best);
                scan((kx + ring, ky + j), &mut best);
            }
            visited += 8 * ring as usize;
        }
        best
    }
}

/// sup over `from` of the distance to the nearest point of `to`.
pub fn one_sided_hausdorff(from: &[Complex64], to: &[Complex64]) -> f64 {
    if from.is_empty() {
        return 0.0;
    }
    if to.is_empty() {
        return f64::INFINITY;
    }
    let cell = cell_size(to);
    let idx = PointIndex::from_points(to, cell);
    from.iter().map(|&p| idx.nearest_distance(p)).fold(0.0, f64::max)
}

/// A bucket size giving a few points per occupied cell.
fn cell_size(points: &[Complex64]) -> f64 {
    let (mut lo, mut hi) = (points[0], points[0]);
    for p in points {
        lo = Complex64::new(lo.re.min(p.re), lo.im.min(p.im));
        hi = Complex64::new(hi.re.max(p.re), hi.im.max(p.im));
    }
    let span = (hi.re - lo.re).max(hi.im - lo.im);
    if span == 0.0 {
        1.0
    } else {
        (span / (points.len() as f64).sqrt()).max(span * 1e-9)
    }
}
