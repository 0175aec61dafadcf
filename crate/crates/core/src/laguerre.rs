//! Associated Laguerre polynomials by forward three-term recurrence.

/// `L_n^m(x)`, with `L_n^m ≡ 0` for `n < 0`.
pub fn assoc_laguerre(n: i64, m: u32, x: f64) -> f64 {
    if n < 0 {
        return 0.0;
    }
    let m = f64::from(m);
    let mut prev = 1.0;
    if n == 0 {
        return prev;
    }
    let mut cur = 1.0 + m - x;
    for j in 1..n {
        let j = j as f64;
        let next = ((2.0 * j + 1.0 + m - x) * cur - (j + m) * prev) / (j + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// `zⁿ · L_n^m(-w/z)` evaluated without forming `-w/z`.
///
/// Finite as `z → 0` (where it tends to `wⁿ/n!`), which the heralding
/// formulas need when the squeezing vanishes but the displacement does not.
pub fn scaled_laguerre(n: i64, m: u32, z: f64, w: f64) -> f64 {
    if n < 0 {
        return 0.0;
    }
    let m = f64::from(m);
    let mut prev = 1.0;
    if n == 0 {
        return prev;
    }
    let mut cur = (1.0 + m) * z + w;
    for j in 1..n {
        let j = j as f64;
        let next = (((2.0 * j + 1.0 + m) * z + w) * cur - (j + m) * z * z * prev) / (j + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn binomial(n: u64, k: u64) -> f64 {
        (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
    }

    // Explicit sum Σ_j (-1)^j C(n+m, n-j) x^j / j!
    fn explicit(n: u64, m: u64, x: f64) -> f64 {
        let mut fact = 1.0;
        let mut sum = 0.0;
        for j in 0..=n {
            if j > 0 {
                fact *= j as f64;
            }
            sum += (-1.0_f64).powi(j as i32) * binomial(n + m, n - j) * x.powi(j as i32) / fact;
        }
        sum
    }

    #[test]
    fn base_cases() {
        for m in 0..4 {
            assert_eq!(assoc_laguerre(0, m, 3.7), 1.0);
        }
        assert_eq!(assoc_laguerre(-1, 1, 0.4), 0.0);
        assert_eq!(assoc_laguerre(-2, 2, 0.4), 0.0);
        assert_relative_eq!(assoc_laguerre(2, 0, 2.0), -1.0, epsilon = 1e-15);
        assert_relative_eq!(assoc_laguerre(1, 1, 0.5), 1.5, epsilon = 1e-15);
    }

    #[test]
    fn matches_explicit_sum() {
        for n in 0..8 {
            for m in 0..3 {
                for &x in &[-12.0, -1.5, 0.0, 0.3, 2.0, 7.5] {
                    let expected = explicit(n, m, x);
                    assert_relative_eq!(
                        assoc_laguerre(n as i64, m as u32, x),
                        expected,
                        epsilon = 1e-9,
                        max_relative = 1e-11
                    );
                }
            }
        }
    }

    #[test]
    fn scaled_limit_at_zero() {
        // z = 0: wⁿ/n!
        assert_relative_eq!(scaled_laguerre(3, 0, 0.0, 2.0), 8.0 / 6.0, epsilon = 1e-15);
        assert_relative_eq!(scaled_laguerre(2, 2, 0.0, 1.5), 1.125, epsilon = 1e-15);
        assert_eq!(scaled_laguerre(-1, 1, 0.0, 1.0), 0.0);
    }

    proptest! {
        #[test]
        fn scaled_agrees_with_plain(n in 0i64..6, m in 0u32..3, z in 0.01f64..2.0, w in -5.0f64..20.0) {
            let direct = z.powi(n as i32) * assoc_laguerre(n, m, -w / z);
            let scaled = scaled_laguerre(n, m, z, w);
            prop_assert!((direct - scaled).abs() <= 1e-9 * direct.abs().max(1.0));
        }
    }
}
