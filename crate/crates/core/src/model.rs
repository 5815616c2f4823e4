//! Domain types, fixed constants and the scalar helpers shared by both
//! conversion directions.
//!
//! XYZ values are on the 0–100 scale (Y = 100 for the reference white). Any
//! triple with a positive component sum is accepted.

use std::sync::LazyLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Mat3 = [[f64; 3]; 3];

/// XYZ → RGB.
pub const XYZ_TO_RGB: Mat3 = [
    [0.7990, 0.4194, -0.1648],
    [-0.4493, 1.3265, 0.0927],
    [-0.1149, 0.3394, 0.7170],
];

pub const RGB_TO_XYZ: Mat3 = invert3(&XYZ_TO_RGB);

/// Cube-root RGB → (a, b). Both rows sum to zero.
pub const CBRT_RGB_TO_AB: [[f64; 3]; 2] = [[-13.7, 17.7, -4.0], [1.7, 8.0, -9.7]];

/// `CBRT_RGB_TO_AB` completed with the row `[1, 0, 0]`, so the free
/// coordinate `w` is the cube root of R.
pub const AUGMENTED_AB: Mat3 = [CBRT_RGB_TO_AB[0], CBRT_RGB_TO_AB[1], [1.0, 0.0, 0.0]];

pub const AUGMENTED_AB_INV: Mat3 = invert3(&AUGMENTED_AB);

pub const L_OFFSET: f64 = 14.3993;
pub const L_SCALE: f64 = std::f64::consts::SQRT_2;
pub const LIGHTNESS_DIVISOR: f64 = 5.9;
pub const LIGHTNESS_SHIFT: f64 = 2.0 / 3.0;
pub const SMALL_TERM: f64 = 0.042;
pub const SMALL_TERM_CUBED: f64 = SMALL_TERM * SMALL_TERM * SMALL_TERM;

/// Largest R reachable on the 0–100 scale (X = Y = 100, Z = 0).
pub const MAX_R: f64 = 79.9 + 41.94;

/// Newton start for the free coordinate: `cbrt(MAX_R)`.
#[inline]
pub fn initial_w() -> f64 {
    signed_cbrt(MAX_R)
}

const fn det3(m: &Mat3) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Closed-form adjugate inverse. Panics at compile time on a singular matrix.
const fn invert3(m: &Mat3) -> Mat3 {
    let det = det3(m);
    assert!(det != 0.0, "singular matrix");
    let inv = 1.0 / det;
    [
        [
            (m[1][1] * m[2][2] - m[1][2] * m[2][1]) * inv,
            (m[0][2] * m[2][1] - m[0][1] * m[2][2]) * inv,
            (m[0][1] * m[1][2] - m[0][2] * m[1][1]) * inv,
        ],
        [
            (m[1][2] * m[2][0] - m[1][0] * m[2][2]) * inv,
            (m[0][0] * m[2][2] - m[0][2] * m[2][0]) * inv,
            (m[0][2] * m[1][0] - m[0][0] * m[1][2]) * inv,
        ],
        [
            (m[1][0] * m[2][1] - m[1][1] * m[2][0]) * inv,
            (m[0][1] * m[2][0] - m[0][0] * m[2][1]) * inv,
            (m[0][0] * m[1][1] - m[0][1] * m[1][0]) * inv,
        ],
    ]
}

pub fn determinant(m: &Mat3) -> f64 {
    det3(m)
}

#[inline(always)]
pub fn mat3_mul_vec(m: &Mat3, v: [f64; 3]) -> [f64; 3] {
    [
        m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
        m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
        m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
    ]
}

pub fn mat3_mul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

/// Every constant the two transforms use, bundled for callers that want
/// them in one place.
#[derive(Debug, Clone, PartialEq)]
pub struct ConversionConstants {
    pub xyz_to_rgb: Mat3,
    pub rgb_to_xyz: Mat3,
    pub cbrt_rgb_to_ab: [[f64; 3]; 2],
    pub augmented_ab: Mat3,
    pub augmented_ab_inv: Mat3,
    pub l_offset: f64,
    pub l_scale: f64,
    pub lightness_divisor: f64,
    pub lightness_shift: f64,
    pub small_term: f64,
    pub initial_w: f64,
}

static CONSTANTS: LazyLock<ConversionConstants> = LazyLock::new(|| ConversionConstants {
    xyz_to_rgb: XYZ_TO_RGB,
    rgb_to_xyz: RGB_TO_XYZ,
    cbrt_rgb_to_ab: CBRT_RGB_TO_AB,
    augmented_ab: AUGMENTED_AB,
    augmented_ab_inv: AUGMENTED_AB_INV,
    l_offset: L_OFFSET,
    l_scale: L_SCALE,
    lightness_divisor: LIGHTNESS_DIVISOR,
    lightness_shift: LIGHTNESS_SHIFT,
    small_term: SMALL_TERM,
    initial_w: initial_w(),
});

impl ConversionConstants {
    pub fn get() -> &'static ConversionConstants {
        &CONSTANTS
    }
}

/// CIE tristimulus values on the 0–100 scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct XyzColor {
    #[serde(rename = "X")]
    pub x: f64,
    #[serde(rename = "Y")]
    pub y: f64,
    #[serde(rename = "Z")]
    pub z: f64,
}

impl XyzColor {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn sum(&self) -> f64 {
        self.x + self.y + self.z
    }
}

impl From<[f64; 3]> for XyzColor {
    fn from([x, y, z]: [f64; 3]) -> Self {
        Self { x, y, z }
    }
}

/// OSA-UCS coordinates: lightness `l`, and the signed opponent axes `g`
/// (greenness–redness) and `j` (yellowness–blueness).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LgjColor {
    #[serde(rename = "L")]
    pub l: f64,
    pub g: f64,
    pub j: f64,
}

impl LgjColor {
    pub const fn new(l: f64, g: f64, j: f64) -> Self {
        Self { l, g, j }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.l, self.g, self.j]
    }

    pub fn is_finite(&self) -> bool {
        self.l.is_finite() && self.g.is_finite() && self.j.is_finite()
    }
}

impl From<[f64; 3]> for LgjColor {
    fn from([l, g, j]: [f64; 3]) -> Self {
        Self { l, g, j }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CubicSolver {
    #[default]
    Cardano,
    Newton,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub cubic_solver: CubicSolver,
    /// Residual tolerance, relative to `max(1, target)`.
    pub newton_tol: f64,
    pub max_iter: usize,
    /// Cross-check the analytic derivative of phi against central
    /// differences on every Newton step.
    pub fd_check: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            cubic_solver: CubicSolver::Cardano,
            newton_tol: 1e-12,
            max_iter: 100,
            fd_check: false,
        }
    }
}

impl SolveOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.newton_tol > 0.0 && self.newton_tol.is_finite()) {
            return Err(Error::DegenerateInput("newton_tol must be positive"));
        }
        if self.max_iter == 0 {
            return Err(Error::DegenerateInput("max_iter must be at least 1"));
        }
        Ok(())
    }
}

/// Real cube root that keeps the sign of its argument.
#[inline(always)]
pub fn signed_cbrt(r: f64) -> f64 {
    cbrt_positive(r.abs()).copysign(r)
}

/// Bit-level seed for `x^(-1/3)`; at most 3.7 % off for normal `x`.
const RCBRT_MAGIC: u64 = 0x553f_0000_0000_0000;

/// Cube root of a nonnegative number, within 1 ulp.
///
/// Three division-free Newton steps on `x^(-1/3)` from a bit-level seed,
/// then one correction on the root itself. Everything inlines, which the
/// batch loops and the lightness cubic rely on. Zero, subnormal, huge and
/// non-finite arguments go through `f64::cbrt`.
#[inline(always)]
fn cbrt_positive(x: f64) -> f64 {
    if !(f64::MIN_POSITIVE..=1e300).contains(&x) {
        return x.cbrt();
    }
    let mut r = f64::from_bits(RCBRT_MAGIC - x.to_bits() / 3);
    r += r * (1.0 - x * r * r * r) * (1.0 / 3.0);
    r += r * (1.0 - x * r * r * r) * (1.0 / 3.0);
    r += r * (1.0 - x * r * r * r) * (1.0 / 3.0);
    let y = x * r * r;
    y + (x - y * y * y) * (r * r) * (1.0 / 3.0)
}

/// Chromaticity coordinates `(x, y)`.
pub fn chromaticity(c: &XyzColor) -> Result<(f64, f64)> {
    let sum = c.sum();
    if !(sum > 0.0) || !sum.is_finite() || !c.is_finite() {
        return Err(Error::DegenerateInput(
            "X + Y + Z must be positive and finite",
        ));
    }
    Ok((c.x / sum, c.y / sum))
}

/// Luminance factor `K(x, y)`; `Y0 = Y * K`.
#[inline(always)]
pub fn k_factor(x: f64, y: f64) -> f64 {
    4.4934 * x * x + 4.3034 * y * y - 4.276 * x * y - 1.3744 * x - 2.5643 * y + 1.8103
}

/// `(dK/dx, dK/dy)`.
#[inline(always)]
pub fn k_factor_gradient(x: f64, y: f64) -> (f64, f64) {
    (
        2.0 * 4.4934 * x - 4.276 * y - 1.3744,
        2.0 * 4.3034 * y - 4.276 * x - 2.5643,
    )
}
