mod common;

use common::*;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn determinant_example_value() {
    let det = quadratic_well().dn_determinant(1.0, 2.0, c(0.0, 0.0)).unwrap();
    assert_eq!(det, c(-8.0, 0.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn determinant_factors_through_delta(
        seed in 0u64..40,
        x in -6.0f64..6.0,
        xi in -3.0f64..3.0,
        lr in -4.0f64..4.0,
        li in -4.0f64..4.0,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let op = random_operator(&mut rng, if seed % 2 == 0 { 2 } else { 4 });
        let lambda = Complex64::new(lr, li);
        let zero = c(0.0, 0.0);
        let ev = |e: &spectra::expr::Expr| e.eval(x, zero).unwrap();
        let (am, bn, ck, d) = (ev(op.a_m()), ev(op.b_n()), ev(op.c_k()), ev(op.d()));
        let m = op.m() as i32;
        // 2x2 determinant of the principal symbol, entry by entry.
        let direct = am * xi.powi(m) * (d - lambda) - bn * xi.powi(op.n() as i32) * ck * xi.powi(op.k() as i32);
        let got = op.dn_determinant(x, xi, lambda).unwrap();
        let via_delta = am * (ev(&op.delta()) - lambda) * xi.powi(m);
        let scale = 1.0 + direct.norm() + (am * xi.powi(m) * (d - lambda)).norm();
        prop_assert!((got - direct).norm() <= 1e-12 * scale);
        prop_assert!((via_delta - direct).norm() <= 1e-10 * scale);
    }
}
