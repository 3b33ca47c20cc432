//! Exact propagator across a stretch of constant potential.
//!
//! For `-f'' + V f = z f` with constant `V` the map `(f, f') -> (f, f')` over a
//! length `l` is
//!
//! ```text
//! [ cos w          l sinc w ]
//! [ -(z-V) l sinc w  cos w  ]      w^2 = (z - V) l^2
//! ```
//!
//! Both `cos w` and `sinc w = sin w / w` are entire functions of `w^2`, so no
//! branch of the square root is ever selected. Negative `l` propagates
//! backwards.

use num_complex::Complex64;

/// Largest `|Im w|` allowed in a single piece; keeps `cos w` far from overflow.
const MAX_GROWTH_PER_PIECE: f64 = 20.0;

/// Below this `|w^2|` the power series is used.
const SERIES_THRESHOLD: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct CellMatrix {
    pub m11: Complex64,
    pub m12: Complex64,
    pub m21: Complex64,
    pub m22: Complex64,
}

impl CellMatrix {
    pub fn new(z: Complex64, v: f64, len: f64) -> Self {
        let k2 = z - v;
        let q = k2 * (len * len);
        let (c, sinc) = cos_sinc(q);
        Self { m11: c, m12: sinc * len, m21: -k2 * sinc * len, m22: c }
    }

    #[inline]
    pub fn apply(&self, f: Complex64, fp: Complex64) -> (Complex64, Complex64) {
        (self.m11 * f + self.m12 * fp, self.m21 * f + self.m22 * fp)
    }
}

/// `(cos w, sin w / w)` as functions of `q = w^2`.
pub(crate) fn cos_sinc(q: Complex64) -> (Complex64, Complex64) {
    if q.norm() < SERIES_THRESHOLD {
        // cos w = sum (-q)^n / (2n)!,  sinc w = sum (-q)^n / (2n+1)!
        let mut c = Complex64::new(0.0, 0.0);
        let mut s = Complex64::new(0.0, 0.0);
        let mut term = Complex64::new(1.0, 0.0);
        for n in 0..14 {
            let n = n as f64;
            c += term;
            let st = term / (2.0 * n + 1.0);
            s += st;
            term = term * (-q) / ((2.0 * n + 1.0) * (2.0 * n + 2.0));
        }
        (c, s)
    } else {
        let w = q.sqrt();
        (w.cos(), w.sin() / w)
    }
}

/// Number of equal pieces a stretch must be cut into so that each piece has
/// bounded exponential growth.
pub(crate) fn pieces_for(z: Complex64, v: f64, len: f64) -> usize {
    let growth = (z - v).sqrt().im.abs() * len.abs();
    (growth / MAX_GROWTH_PER_PIECE).ceil().max(1.0) as usize
}
