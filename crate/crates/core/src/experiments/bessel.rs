//! Bessel functions of the first kind and their zeros.

use std::f64::consts::PI;

/// Nodes of the trapezoid rule over one period; exact to round-off for
/// `x + n` well below this.
const QUADRATURE_NODES: usize = 256;
const SCAN_STEP: f64 = 0.05;

/// `J_n(x) = (1/π) ∫₀^π cos(nτ − x sin τ) dτ`, evaluated with the trapezoid
/// rule over the full period where it converges geometrically.
pub fn bessel_j(n: u32, x: f64) -> f64 {
    let h = 2.0 * PI / QUADRATURE_NODES as f64;
    let n = n as f64;
    let sum: f64 = (0..QUADRATURE_NODES)
        .map(|i| {
            let t = i as f64 * h;
            (n * t - x * t.sin()).cos()
        })
        .sum();
    sum / QUADRATURE_NODES as f64
}

/// `J_n'(x) = (J_{n−1}(x) − J_{n+1}(x)) / 2`, with `J_0' = −J_1`.
pub fn bessel_j_prime(n: u32, x: f64) -> f64 {
    if n == 0 {
        -bessel_j(1, x)
    } else {
        0.5 * (bessel_j(n - 1, x) - bessel_j(n + 1, x))
    }
}

/// The `l`-th positive zero of `J_m` (`l ≥ 1`), located by scanning for a
/// sign change and refined by bisection to the last representable bit.
pub fn bessel_zero(m: u32, l: u32) -> f64 {
    assert!(l >= 1, "zeros are counted from one");
    // Every positive zero of J_m lies beyond m.
    let mut a = (m as f64).max(SCAN_STEP);
    let mut fa = bessel_j(m, a);
    let mut found = 0;
    loop {
        let b = a + SCAN_STEP;
        let fb = bessel_j(m, b);
        if fa.signum() != fb.signum() {
            found += 1;
            if found == l {
                return bisect(m, a, b, fa);
            }
        }
        a = b;
        fa = fb;
    }
}

fn bisect(m: u32, mut lo: f64, mut hi: f64, mut flo: f64) -> f64 {
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return if bessel_j(m, lo).abs() < bessel_j(m, hi).abs() { lo } else { hi };
        }
        let fm = bessel_j(m, mid);
        if fm == 0.0 {
            return mid;
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reference_values() {
        // Abramowitz & Stegun, table 9.1.
        assert!((bessel_j(0, 1.0) - 0.765_197_686_557_966_6).abs() < 1e-15);
        assert!((bessel_j(1, 1.0) - 0.440_050_585_744_933_5).abs() < 1e-15);
        assert!((bessel_j(2, 10.0) - 0.254_630_313_685_120_6).abs() < 1e-14);
        assert!(bessel_j(3, 0.0).abs() < 1e-16);
        assert!((bessel_j(0, 0.0) - 1.0).abs() < 1e-16);
    }

    #[test]
    fn zeros_match_tables() {
        for (m, l, z) in [
            (0, 1, 2.404_825_557_695_773),
            (1, 1, 3.831_705_970_207_512),
            (1, 2, 7.015_586_669_815_619),
            (2, 1, 5.135_622_301_840_683),
            (3, 1, 6.380_161_895_923_984),
            (1, 6, 19.615_858_510_468_24),
            (12, 1, 16.698_249_933_848_25),
        ] {
            assert!((bessel_zero(m, l) - z).abs() < 1e-12, "j({m},{l})");
        }
        assert!((bessel_zero(1, 1).powi(2) - 14.682).abs() < 1e-3);
        assert!((bessel_zero(2, 1).powi(2) - 26.3746).abs() < 1e-3);
    }

    #[test]
    fn derivative_matches_difference_quotient() {
        for n in 0..4 {
            let x = 2.7;
            let h = 1e-5;
            let fd = (bessel_j(n, x + h) - bessel_j(n, x - h)) / (2.0 * h);
            assert!((bessel_j_prime(n, x) - fd).abs() < 1e-9);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn roots_have_tiny_residual(m in 0u32..8, l in 1u32..8) {
            let a = bessel_zero(m, l);
            prop_assert!(bessel_j(m, a).abs() < 1e-12);
            if l > 1 {
                prop_assert!(bessel_zero(m, l - 1) < a);
            }
        }

        #[test]
        fn three_term_recurrence(n in 1u32..10, x in 0.1f64..30.0) {
            let lhs = bessel_j(n - 1, x) + bessel_j(n + 1, x);
            let rhs = 2.0 * n as f64 / x * bessel_j(n, x);
            prop_assert!((lhs - rhs).abs() < 1e-12 * (1.0 + rhs.abs()));
        }
    }
}
