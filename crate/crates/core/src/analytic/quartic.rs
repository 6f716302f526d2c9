//! Real roots of Λ⁴ + BΛ³ + CΛ² + DΛ + E = 0 by Ferrari's method in trigonometric form.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Quartic {
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
}

impl Quartic {
    pub fn eval(&self, x: f64) -> f64 {
        (((x + self.b) * x + self.c) * x + self.d) * x + self.e
    }

    fn derivative(&self, x: f64) -> f64 {
        ((4.0 * x + 3.0 * self.b) * x + 2.0 * self.c) * x + self.d
    }

    /// Typical magnitude of the roots.
    pub fn scale(&self) -> f64 {
        1f64.max(self.b.abs()).max(self.c.abs().sqrt()).max(self.d.abs().cbrt()).max(self.e.abs().sqrt().sqrt())
    }

    fn err_complex(&self) -> Error {
        Error::ComplexRoots { b: self.b, c: self.c, d: self.d, e: self.e }
    }
}

/// Four real roots in ascending order.
///
/// The resolvent root is taken from the cosine branch `cos φ`; when the resulting `S` is
/// numerically zero the branch `cos(φ − 2π/3)` is used instead. Each root is finally polished
/// with Newton steps on the quartic, kept only when they reduce the residual.
pub fn ferrari_roots(b: f64, c: f64, d: f64, e: f64) -> Result<[f64; 4]> {
    let quartic = Quartic { b, c, d, e };
    if ![b, c, d, e].iter().all(|x| x.is_finite()) {
        return Err(quartic.err_complex());
    }
    let scale = quartic.scale();
    let tol = 1e-9 * scale * scale;

    let p = c - 3.0 * b * b / 8.0;
    let q = d + b / 2.0 * (b * b / 4.0 - c);
    let delta0_sq = c * c - 3.0 * b * d + 12.0 * e;
    if delta0_sq < -tol * scale * scale {
        return Err(quartic.err_complex());
    }
    let delta0 = delta0_sq.max(0.0).sqrt();
    let delta1 = 2.0 * c.powi(3) - 9.0 * c * (b * d + 8.0 * e) + 27.0 * (b * b * e + d * d);
    let phi = if delta0 > 0.0 { (delta1 / (2.0 * delta0.powi(3))).clamp(-1.0, 1.0).acos() / 3.0 } else { 0.0 };

    let s_tol = 1e-12 * scale;
    let mut s = None;
    for angle in [phi, phi - 2.0 * PI / 3.0] {
        let arg = (delta0 * angle.cos() - p) / 6.0;
        if arg < -tol {
            continue;
        }
        let candidate = arg.max(0.0).sqrt();
        if candidate >= s_tol {
            s = Some(candidate);
            break;
        }
    }
    let mut roots = match s {
        Some(s) => {
            let inner = |sign: f64| -> Result<f64> {
                let arg = -4.0 * s * s - 2.0 * p + sign * q / s;
                if arg < -tol {
                    return Err(quartic.err_complex());
                }
                Ok(0.5 * arg.max(0.0).sqrt())
            };
            let lower = inner(1.0)?;
            let upper = inner(-1.0)?;
            let shift = -b / 4.0;
            [shift - s - lower, shift - s + lower, shift + s - upper, shift + s + upper]
        }
        None if q.abs() <= tol * scale => {
            // biquadratic in the depressed variable: y⁴ + p y² + r = 0
            let r = e - b * d / 4.0 + b * b * c / 16.0 - 3.0 * b.powi(4) / 256.0;
            let disc = p * p - 4.0 * r;
            if disc < -tol * scale * scale {
                return Err(quartic.err_complex());
            }
            let sq = disc.max(0.0).sqrt();
            let (u1, u2) = ((-p - sq) / 2.0, (-p + sq) / 2.0);
            if u1 < -tol {
                return Err(quartic.err_complex());
            }
            let (y1, y2) = (u1.max(0.0).sqrt(), u2.max(0.0).sqrt());
            let shift = -b / 4.0;
            [shift - y2, shift - y1, shift + y1, shift + y2]
        }
        None => {
            return Err(Error::DegenerateResolvent { b, c, d, e });
        }
    };

    for root in roots.iter_mut() {
        for _ in 0..3 {
            let f = quartic.eval(*root);
            let df = quartic.derivative(*root);
            if f == 0.0 || df == 0.0 {
                break;
            }
            let next = *root - f / df;
            if quartic.eval(next).abs() < f.abs() {
                *root = next;
            } else {
                break;
            }
        }
    }
    roots.sort_by(f64::total_cmp);
    if !roots.iter().all(|x| x.is_finite()) {
        return Err(quartic.err_complex());
    }
    Ok(roots)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_roots(found: [f64; 4], expected: [f64; 4], tol: f64) {
        for (a, b) in found.iter().zip(expected) {
            assert!((a - b).abs() < tol, "{found:?} vs {expected:?}");
        }
    }

    #[test]
    fn product_of_two_quadratics() {
        // (Λ² − 1)(Λ² − 4)
        assert_roots(ferrari_roots(0.0, -5.0, 0.0, 4.0).unwrap(), [-2.0, -1.0, 1.0, 2.0], 1e-12);
    }

    #[test]
    fn roots_from_expanded_product() {
        let r = [-0.7, -0.05, 0.3, 1.9];
        let b = -(r[0] + r[1] + r[2] + r[3]);
        let c = r[0] * r[1] + r[0] * r[2] + r[0] * r[3] + r[1] * r[2] + r[1] * r[3] + r[2] * r[3];
        let d = -(r[0] * r[1] * r[2] + r[0] * r[1] * r[3] + r[0] * r[2] * r[3] + r[1] * r[2] * r[3]);
        let e = r[0] * r[1] * r[2] * r[3];
        assert_roots(ferrari_roots(b, c, d, e).unwrap(), r, 1e-12);
    }

    #[test]
    fn degenerate_inputs() {
        // Λ⁴: every resolvent branch vanishes, handled as a biquadratic
        assert_roots(ferrari_roots(0.0, 0.0, 0.0, 0.0).unwrap(), [0.0; 4], 1e-12);
        // (Λ − 1)²(Λ + 1)²
        assert_roots(ferrari_roots(0.0, -2.0, 0.0, 1.0).unwrap(), [-1.0, -1.0, 1.0, 1.0], 1e-7);
        // quadruple root away from zero
        assert_roots(ferrari_roots(-8.0, 24.0, -32.0, 16.0).unwrap(), [2.0; 4], 1e-7);
    }

    #[test]
    fn complex_roots_rejected() {
        // Λ⁴ + 1 has no real roots
        assert!(matches!(ferrari_roots(0.0, 0.0, 0.0, 1.0), Err(Error::ComplexRoots { .. })));
        assert!(ferrari_roots(f64::NAN, 0.0, 0.0, 0.0).is_err());
    }
}
