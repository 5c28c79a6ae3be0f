//! Dense polynomials with complex coefficients, stored lowest degree first.

use std::ops;

use ndarray::Array2;
use ndarray_linalg::EigVals;
use num_complex::Complex64;

#[derive(Clone, Debug, PartialEq, Default)]
pub struct ComplexPoly {
    coeffs: Vec<Complex64>,
}

impl ComplexPoly {
    pub fn new(mut coeffs: Vec<Complex64>) -> ComplexPoly {
        while coeffs.last().is_some_and(|c| *c == Complex64::new(0.0, 0.0)) {
            coeffs.pop();
        }
        ComplexPoly { coeffs }
    }

    pub fn zero() -> ComplexPoly {
        ComplexPoly { coeffs: Vec::new() }
    }

    pub fn constant(c: Complex64) -> ComplexPoly {
        ComplexPoly::new(vec![c])
    }

    /// The monomial `z`.
    pub fn z() -> ComplexPoly {
        ComplexPoly::new(vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)])
    }

    pub fn from_real(coeffs: &[f64]) -> ComplexPoly {
        ComplexPoly::new(coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect())
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeff(&self, j: usize) -> Complex64 {
        self.coeffs.get(j).copied().unwrap_or_default()
    }

    /// Degree, with the zero polynomial reported as `None`.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    pub fn derivative(&self) -> ComplexPoly {
        ComplexPoly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(j, &c)| c * j as f64)
                .collect(),
        )
    }

    pub fn scale(&self, s: Complex64) -> ComplexPoly {
        ComplexPoly::new(self.coeffs.iter().map(|&c| c * s).collect())
    }

    /// Drops leading coefficients with magnitude at most `rel_tol` times the largest one.
    pub fn trimmed(&self, rel_tol: f64) -> ComplexPoly {
        let big = self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let mut coeffs = self.coeffs.clone();
        while coeffs.last().is_some_and(|c| c.norm() <= rel_tol * big) {
            coeffs.pop();
        }
        ComplexPoly::new(coeffs)
    }

    /// All complex roots, as eigenvalues of the companion matrix.
    ///
    /// Leading coefficients are taken at face value; call [`ComplexPoly::trimmed`]
    /// first when they may be numerical noise. Returns an empty list for constants.
    pub fn roots(&self) -> Vec<Complex64> {
        let Some(deg) = self.degree() else {
            return Vec::new();
        };
        // Zero roots are split off exactly; they would otherwise be perturbed by balancing.
        let low = self.coeffs.iter().take_while(|c| c.norm() == 0.0).count();
        let mut roots = vec![Complex64::new(0.0, 0.0); low];
        let reduced = &self.coeffs[low..];
        let n = deg - low;
        if n == 0 {
            return roots;
        }
        let lead = reduced[n];
        if n == 1 {
            roots.push(-reduced[0] / lead);
            return roots;
        }
        let mut comp = Array2::<Complex64>::zeros((n, n));
        for i in 1..n {
            comp[[i, i - 1]] = Complex64::new(1.0, 0.0);
        }
        for i in 0..n {
            comp[[i, n - 1]] = -reduced[i] / lead;
        }
        match comp.eigvals() {
            Ok(ev) => roots.extend(ev.iter().copied()),
            Err(e) => log::warn!("companion eigenvalue solve failed: {e}"),
        }
        roots
    }
}

impl ops::Add for &ComplexPoly {
    type Output = ComplexPoly;
    fn add(self, rhs: &ComplexPoly) -> ComplexPoly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        ComplexPoly::new((0..n).map(|j| self.coeff(j) + rhs.coeff(j)).collect())
    }
}

impl ops::Sub for &ComplexPoly {
    type Output = ComplexPoly;
    fn sub(self, rhs: &ComplexPoly) -> ComplexPoly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        ComplexPoly::new((0..n).map(|j| self.coeff(j) - rhs.coeff(j)).collect())
    }
}

impl ops::Mul for &ComplexPoly {
    type Output = ComplexPoly;
    fn mul(self, rhs: &ComplexPoly) -> ComplexPoly {
        if self.is_zero() || rhs.is_zero() {
            return ComplexPoly::zero();
        }
        let mut out = vec![Complex64::new(0.0, 0.0); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        ComplexPoly::new(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn sorted(mut v: Vec<Complex64>) -> Vec<Complex64> {
        v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        v
    }

    #[test]
    fn roots_of_product_of_linear_factors() {
        let want = [c(1.0, 0.0), c(-2.0, 0.5), c(0.0, 3.0), c(4.0, -1.0)];
        let p = want
            .iter()
            .fold(ComplexPoly::constant(c(2.0, 1.0)), |acc, &r| &acc * &ComplexPoly::new(vec![-r, c(1.0, 0.0)]));
        let got = sorted(p.roots());
        for (g, w) in got.iter().zip(sorted(want.to_vec())) {
            assert!((g - w).norm() < 1e-12, "{g} vs {w}");
        }
    }

    #[test]
    fn zero_roots_are_exact() {
        let p = ComplexPoly::from_real(&[0.0, 0.0, -1.0, 1.0]);
        let got = sorted(p.roots());
        assert_eq!(got[0], c(0.0, 0.0));
        assert_eq!(got[1], c(0.0, 0.0));
        assert!((got[2] - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn trimming_and_degenerate_cases() {
        let p = ComplexPoly::new(vec![c(1.0, 0.0), c(2.0, 0.0), c(1e-20, 0.0)]);
        assert_eq!(p.trimmed(1e-14).degree(), Some(1));
        assert!(ComplexPoly::constant(c(3.0, 0.0)).roots().is_empty());
        assert!(ComplexPoly::zero().roots().is_empty());
        assert_eq!(ComplexPoly::new(vec![c(0.0, 0.0)]).degree(), None);
    }

    #[test]
    fn derivative_and_eval() {
        let p = ComplexPoly::from_real(&[1.0, -3.0, 0.0, 2.0]);
        assert_eq!(p.derivative(), ComplexPoly::from_real(&[-3.0, 0.0, 6.0]));
        assert_eq!(p.eval(c(2.0, 0.0)), c(11.0, 0.0));
    }
}
