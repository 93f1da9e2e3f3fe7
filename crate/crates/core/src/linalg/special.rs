use core::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};

/// Complete elliptic integral of the first kind in the modulus convention,
/// `K(k) = ∫_0^{π/2} dθ / sqrt(1 - k² sin²θ)`, for `0 <= k < 1`.
///
/// Evaluated as `π / (2 agm(1, sqrt(1 - k²)))`.
pub fn elliptic_k(modulus: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&modulus) {
        return Err(Error::Domain(alloc::format!(
            "elliptic_k needs 0 <= k < 1, got {modulus}"
        )));
    }
    Ok(agm_quarter_period(((1.0 - modulus) * (1.0 + modulus)).sqrt()))
}

/// `K(sqrt(1 - k'²))` from the complementary modulus `0 < k' <= 1`, accurate
/// where `sqrt(1 - k'²)` rounds to one.
pub fn elliptic_k_complementary(kp: f64) -> Result<f64> {
    if !(kp > 0.0 && kp <= 1.0) {
        return Err(Error::Domain(alloc::format!(
            "complementary modulus must lie in (0, 1], got {kp}"
        )));
    }
    Ok(agm_quarter_period(kp))
}

fn agm_quarter_period(mut b: f64) -> f64 {
    let mut a = 1.0_f64;
    for _ in 0..64 {
        if (a - b).abs() < 1e-15 * a {
            break;
        }
        let next = 0.5 * (a + b);
        b = (a * b).sqrt();
        a = next;
    }
    FRAC_PI_2 / a
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    // composite Simpson rule on the defining integral
    fn quadrature(k: f64) -> f64 {
        let n = 20_000;
        let h = FRAC_PI_2 / n as f64;
        let f = |t: f64| 1.0 / (1.0 - k * k * t.sin() * t.sin()).sqrt();
        let mut s = f(0.0) + f(FRAC_PI_2);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(i as f64 * h);
        }
        s * h / 3.0
    }

    #[test]
    fn zero_modulus() {
        assert!((elliptic_k(0.0).unwrap() - PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn half_modulus() {
        let k = elliptic_k(0.5).unwrap();
        assert!((k - 1.685_750_354_812_596).abs() < 1e-12, "{k}");
    }

    #[test]
    fn matches_quadrature() {
        for i in 1..=9 {
            let k = i as f64 / 10.0;
            let a = elliptic_k(k).unwrap();
            let q = quadrature(k);
            assert!((a - q).abs() < 1e-9 * q, "k={k}: {a} vs {q}");
        }
    }

    #[test]
    fn boundary() {
        let big = elliptic_k(0.999_999).unwrap();
        assert!(big.is_finite() && big > 7.0);
        assert!(elliptic_k(1.0).is_err());
        assert!(elliptic_k(-0.1).is_err());
        assert!(elliptic_k(f64::NAN).is_err());
    }

    #[test]
    fn complementary_form() {
        for kp in [0.2f64, 0.5, 0.9] {
            let direct = elliptic_k((1.0 - kp * kp).sqrt()).unwrap();
            assert!((elliptic_k_complementary(kp).unwrap() - direct).abs() < 1e-12);
        }
        // K(k) ~ ln(4/k') as k' -> 0
        let kp = 1e-12;
        assert!((elliptic_k_complementary(kp).unwrap() - (4.0 / kp).ln()).abs() < 1e-9);
        assert!(elliptic_k_complementary(0.0).is_err());
        assert_eq!(elliptic_k_complementary(1.0).unwrap(), FRAC_PI_2);
    }
}
