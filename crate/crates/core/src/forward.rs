//! Closed-form XYZ → Lgj.

use crate::error::{Error, Result};
use crate::model::{
    chromaticity, k_factor, signed_cbrt, LgjColor, XyzColor, LIGHTNESS_DIVISOR, LIGHTNESS_SHIFT,
    L_OFFSET, L_SCALE, SMALL_TERM, XYZ_TO_RGB,
};

const DEGENERATE_TOL: f64 = 1e-14;

/// Intermediate lightness `L'` and chroma normalizer `C` from the
/// modified luminance `Y0`.
#[inline]
pub fn lightness_from_y0(y0: f64) -> Result<(f64, f64)> {
    if !(y0 > DEGENERATE_TOL) || !y0.is_finite() {
        return Err(Error::DegenerateInput("Y0 must be positive"));
    }
    let cbrt_y0 = signed_cbrt(y0);
    let shifted = cbrt_y0 - LIGHTNESS_SHIFT;
    if shifted.abs() < DEGENERATE_TOL {
        return Err(Error::DegenerateInput(
            "cbrt(Y0) = 2/3, chroma normalizer undefined",
        ));
    }
    // Y0 - 30 is negative for dark colors, hence the signed root.
    let l_prime = LIGHTNESS_DIVISOR * (shifted + SMALL_TERM * signed_cbrt(y0 - 30.0));
    let chroma = l_prime / (LIGHTNESS_DIVISOR * shifted);
    Ok((l_prime, chroma))
}

#[inline(always)]
pub fn rgb_from_xyz(c: &XyzColor) -> (f64, f64, f64) {
    let m = &XYZ_TO_RGB;
    (
        m[0][0] * c.x + m[0][1] * c.y + m[0][2] * c.z,
        m[1][0] * c.x + m[1][1] * c.y + m[1][2] * c.z,
        m[2][0] * c.x + m[2][1] * c.y + m[2][2] * c.z,
    )
}

/// `(a, b)` from RGB via signed cube roots.
///
/// The rows of the cube-root matrix sum to zero, so the product is written
/// in terms of differences against the R root: equal roots give exactly
/// zero.
#[inline(always)]
pub fn ab_from_rgb(r: f64, g: f64, b: f64) -> (f64, f64) {
    let (cr, cg, cb) = (signed_cbrt(r), signed_cbrt(g), signed_cbrt(b));
    ab_from_cbrt_rgb(cr, cg, cb)
}

#[inline(always)]
pub(crate) fn ab_from_cbrt_rgb(cr: f64, cg: f64, cb: f64) -> (f64, f64) {
    let (dg, db) = (cg - cr, cb - cr);
    // -13.7 r + 17.7 g - 4 b  and  1.7 r + 8 g - 9.7 b
    (17.7 * dg - 4.0 * db, 8.0 * dg - 9.7 * db)
}

#[inline(always)]
pub(crate) fn lgj_from_parts(l_prime: f64, chroma: f64, a: f64, b: f64) -> LgjColor {
    LgjColor {
        l: (l_prime - L_OFFSET) / L_SCALE,
        g: chroma * a,
        j: chroma * b,
    }
}

/// XYZ (0–100 scale) → OSA-UCS Lgj.
pub fn xyz_to_lgj(c: &XyzColor) -> Result<LgjColor> {
    let (x, y) = chromaticity(c)?;
    let y0 = c.y * k_factor(x, y);
    let (l_prime, chroma) = lightness_from_y0(y0)?;
    let (r, g, b) = rgb_from_xyz(c);
    let (a, b) = ab_from_rgb(r, g, b);
    Ok(lgj_from_parts(l_prime, chroma, a, b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::RGB_TO_XYZ;

    #[test]
    fn lightness_at_y0_30_has_unit_chroma() {
        let (lp, c) = lightness_from_y0(30.0).unwrap();
        assert_eq!(c, 1.0);
        assert_eq!(lp, 5.9 * (30f64.cbrt() - 2.0 / 3.0));
    }

    #[test]
    fn lightness_rejects_degenerate() {
        for y0 in [8.0 / 27.0, 0.0, -1.0, 1e-15, f64::NAN] {
            assert!(
                matches!(lightness_from_y0(y0), Err(Error::DegenerateInput(_))),
                "{y0}"
            );
        }
    }

    #[test]
    fn lightness_at_y0_100() {
        // 40-digit evaluation of the same formula.
        let (lp, c) = lightness_from_y0(100.0).unwrap();
        assert!((lp - 24.473_295_282_274_62).abs() < 1e-13);
        assert!((c - 1.043_546_508_666_595).abs() < 1e-14);
    }

    #[test]
    fn rgb_examples() {
        assert_eq!(rgb_from_xyz(&XyzColor::new(0.0, 0.0, 0.0)), (0.0, 0.0, 0.0));
        let (r, _, _) = rgb_from_xyz(&XyzColor::new(100.0, 100.0, 0.0));
        assert!((r - 121.84).abs() < 1e-12);
        let (r, g, b) = rgb_from_xyz(&XyzColor::new(12.0, 67.0, 20.0));
        let expected = [
            0.799 * 12.0 + 0.4194 * 67.0 - 0.1648 * 20.0,
            -0.4493 * 12.0 + 1.3265 * 67.0 + 0.0927 * 20.0,
            -0.1149 * 12.0 + 0.3394 * 67.0 + 0.717 * 20.0,
        ];
        for (got, want) in [r, g, b].into_iter().zip(expected) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn ab_examples() {
        assert_eq!(ab_from_rgb(1.0, 1.0, 1.0), (0.0, 0.0));
        assert_eq!(ab_from_rgb(8.0, 8.0, 8.0), (0.0, 0.0));
        let (a, b) = ab_from_rgb(-8.0, 1.0, 27.0);
        assert!((a - (-13.7 * -2.0 + 17.7 - 4.0 * 3.0)).abs() < 1e-12);
        assert!((b - (1.7 * -2.0 + 8.0 - 9.7 * 3.0)).abs() < 1e-12);
    }

    #[test]
    fn ab_equals_matrix_product() {
        let v = [1.3, -0.7, 2.9];
        let (a, b) = ab_from_cbrt_rgb(v[0], v[1], v[2]);
        let m = crate::model::CBRT_RGB_TO_AB;
        let pa: f64 = (0..3).map(|i| m[0][i] * v[i]).sum();
        let pb: f64 = (0..3).map(|i| m[1][i] * v[i]).sum();
        assert!((a - pa).abs() < 1e-13 && (b - pb).abs() < 1e-13);
    }

    #[test]
    fn neutral_axis_is_exact() {
        for k in [0.5, 1.0, 7.3, 42.0, 99.9] {
            let xyz = crate::model::mat3_mul_vec(&RGB_TO_XYZ, [k, k, k]);
            let c = XyzColor::from(xyz);
            let (r, g, b) = rgb_from_xyz(&c);
            let lgj = xyz_to_lgj(&c).unwrap();
            if r == g && g == b {
                assert_eq!((lgj.g, lgj.j), (0.0, 0.0));
            } else {
                assert!(lgj.g.abs() < 1e-12 && lgj.j.abs() < 1e-12);
            }
        }
        // Equal roots give zero regardless of how RGB was produced.
        for r in [0.1, 3.0, 57.0, 121.0] {
            assert_eq!(ab_from_rgb(r, r, r), (0.0, 0.0));
        }
    }

    #[test]
    fn pipeline_is_the_composition() {
        let c = XyzColor::new(12.0, 67.0, 20.0);
        let (x, y) = chromaticity(&c).unwrap();
        let y0 = c.y * k_factor(x, y);
        let (lp, chroma) = lightness_from_y0(y0).unwrap();
        let (r, g, b) = rgb_from_xyz(&c);
        let (a, b) = ab_from_rgb(r, g, b);
        let manual = LgjColor::new((lp - L_OFFSET) / L_SCALE, chroma * a, chroma * b);
        let lgj = xyz_to_lgj(&c).unwrap();
        assert_eq!(lgj, manual);
        assert_eq!(lgj, xyz_to_lgj(&c).unwrap());
    }

    #[test]
    fn reference_color() {
        // Step-by-step evaluation in 50-digit arithmetic.
        let lgj = xyz_to_lgj(&XyzColor::new(12.0, 67.0, 20.0)).unwrap();
        assert!((lgj.l - 7.577_605_915_085_909).abs() < 1e-12);
        assert!((lgj.g - 21.087_837_172_711_474).abs() < 1e-12);
        assert!((lgj.j - 9.195_525_409_487_063).abs() < 1e-12);
    }

    #[test]
    fn unit_chroma_when_y0_is_30() {
        let base = XyzColor::new(12.0, 67.0, 20.0);
        let (x, y) = chromaticity(&base).unwrap();
        let s = 30.0 / (base.y * k_factor(x, y));
        let c = XyzColor::new(base.x * s, base.y * s, base.z * s);
        let (r, g, b) = rgb_from_xyz(&c);
        let (a, b) = ab_from_rgb(r, g, b);
        let lgj = xyz_to_lgj(&c).unwrap();
        // Y0 lands within an ulp or two of 30, where cbrt(Y0 - 30) is steep.
        assert!((lgj.g / a - 1.0).abs() < 1e-5 && (lgj.j / b - 1.0).abs() < 1e-5);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(xyz_to_lgj(&XyzColor::new(0.0, 0.0, 0.0)).is_err());
        // Y = 0 gives Y0 = 0.
        assert!(xyz_to_lgj(&XyzColor::new(10.0, 0.0, 10.0)).is_err());
    }
}
