//! Closed forms for the zero potential.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::HalfPlanePoint;

/// Square root with non-negative imaginary part; for `Im z > 0` both real
/// and imaginary parts are positive.
pub fn sqrt_upper(z: Complex64) -> Complex64 {
    let r = z.sqrt();
    if r.im < 0.0 {
        -r
    } else {
        r
    }
}

/// `i sqrt(z)`, the free m-function.
pub fn free_m(z: Complex64) -> Complex64 {
    Complex64::i() * sqrt_upper(z)
}

/// `(u0, u0', v0, v0')` at `x`.
pub fn free_solutions(z: Complex64, x: f64) -> [Complex64; 4] {
    let k = sqrt_upper(z);
    let w = k * x;
    let (c, s) = (w.cos(), w.sin());
    // v0 = sin(kx)/k written through the entire sinc to survive k -> 0
    let v0 = if w.norm() < 1e-3 {
        let q = w * w;
        Complex64::new(x, 0.0) * (1.0 - q / 6.0 + q * q / 120.0)
    } else {
        s / k
    };
    [c, -k * s, v0, c]
}

/// `|v0(x, z)|^2 = (cosh 2bx - cos 2ax) / (2 (a^2 + b^2))` with `sqrt z = a + ib`.
pub fn free_v0_norm_sqr(z: Complex64, x: f64) -> f64 {
    let k = sqrt_upper(z);
    ((2.0 * k.im * x).cosh() - (2.0 * k.re * x).cos()) / (2.0 * k.norm_sqr())
}

/// `-v0'(x, z) / v0(x, z)`, written as `i sqrt z (1 + 2E'/(E - E'))` with
/// `E = e^{-iax}` and `E' = e^{iax} e^{-2bx}` so that large `x` neither
/// overflows nor cancels.
pub fn free_log_derivative(z: Complex64, x: f64) -> Result<HalfPlanePoint> {
    if !(z.im > 0.0) || !(x > 0.0) {
        return Err(Error::Precondition(format!("free log-derivative needs Im z > 0 and x > 0, got z = {z}, x = {x}")));
    }
    let k = sqrt_upper(z);
    let (a, b) = (k.re, k.im);
    let e = Complex64::from_polar(1.0, -a * x);
    let ep = Complex64::from_polar((-2.0 * b * x).exp(), a * x);
    let ik = Complex64::i() * k;
    let w = ik + ik * (2.0 * ep) / (e - ep);
    HalfPlanePoint::from_complex(w)
}
