//! Special functions not covered by `libm`.

/// Bessel functions `J_0(x) ..= J_kmax(x)` for `x >= 0` by Miller's backward
/// recurrence, normalised with `J_0 + 2 sum J_2k = 1`.
pub fn bessel_j_sequence(x: f64, kmax: usize) -> Vec<f64> {
    let mut out = vec![0.0; kmax + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    assert!(x > 0.0, "bessel_j_sequence needs x >= 0");
    // Start well above both kmax and x so the recurrence has settled.
    let start = {
        let m = (kmax as f64).max(x) as usize;
        let s = m + 20 + (40.0 * (m as f64).sqrt()) as usize;
        s + (s & 1)
    };
    let mut jp1 = 0.0f64;
    let mut j = 1e-300f64;
    let mut norm = 0.0;
    for k in (0..=start).rev() {
        if k <= kmax {
            out[k] = j;
        }
        if k % 2 == 0 {
            norm += if k == 0 { j } else { 2.0 * j };
        }
        if k == 0 {
            break;
        }
        let jm1 = 2.0 * k as f64 / x * j - jp1;
        jp1 = j;
        j = jm1;
        if j.abs() > 1e250 {
            // Rescale everything accumulated so far.
            let s = 1e-250;
            j *= s;
            jp1 *= s;
            norm *= s;
            for v in out.iter_mut() {
                *v *= s;
            }
        }
    }
    for v in out.iter_mut() {
        *v /= norm;
    }
    out
}

/// `ln(b! / a!)` for `a <= b`, summed exactly.
pub fn ln_factorial_ratio(a: usize, b: usize) -> f64 {
    ((a + 1)..=b).map(|j| (j as f64).ln()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bessel_reference_values() {
        let j = bessel_j_sequence(1.0, 3);
        assert!((j[0] - 0.765_197_686_557_966_6).abs() < 1e-15);
        assert!((j[1] - 0.440_050_585_744_933_5).abs() < 1e-15);
        assert!((j[2] - 0.114_903_484_931_900_5).abs() < 1e-15);
        let j = bessel_j_sequence(10.0, 12);
        assert!((j[0] + 0.245_935_764_451_348_3).abs() < 1e-14);
        assert!((j[10] - 0.207_486_106_633_358_9).abs() < 1e-14);
    }

    #[test]
    fn bessel_tiny_tail() {
        let j = bessel_j_sequence(0.5, 30);
        assert!(j[30] >= 0.0 && j[30] < 1e-40);
        assert!((j[1] - libm::j1(0.5)).abs() < 1e-16);
    }

    #[test]
    fn bessel_large_argument() {
        let x = 300.0;
        let j = bessel_j_sequence(x, 320);
        assert!((j[0] - libm::j0(x)).abs() < 1e-13);
        assert!((j[1] - libm::j1(x)).abs() < 1e-13);
        assert!((j[50] - libm::jn(50, x)).abs() < 1e-13);
    }

    #[test]
    fn factorial_ratio() {
        assert!((ln_factorial_ratio(3, 5) - 20f64.ln()).abs() < 1e-14);
        assert_eq!(ln_factorial_ratio(4, 4), 0.0);
    }
}
