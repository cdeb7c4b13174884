//! Dormand–Prince 5(4) embedded Runge–Kutta integration for small autonomous systems.

use crate::error::{Error, Result};

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// fifth-order weights minus the embedded fourth-order ones
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const MAX_STEPS: usize = 200_000;

/// Integrate `y' = rhs(y)` from `z0` to `z1` (either direction) with local
/// error `tol` relative to the largest state component. Aborts once any
/// component exceeds `limit` in magnitude.
///
/// The relative norm matters when shooting along an exponentially growing
/// mode: an absolute floor would swamp a tail of size 1e-10.
pub(crate) fn integrate<const D: usize>(
    rhs: impl Fn(&[f64; D]) -> [f64; D],
    y0: [f64; D],
    z0: f64,
    z1: f64,
    tol: f64,
    limit: f64,
) -> Result<[f64; D]> {
    let span = z1 - z0;
    if span == 0.0 {
        return Ok(y0);
    }
    let dir = span.signum();
    let mut h = dir * (span.abs() * 1e-3).min(0.01);
    let mut z = z0;
    let mut y = y0;
    let mut k1 = rhs(&y);
    for _ in 0..MAX_STEPS {
        if (z1 - z) * dir <= 0.0 {
            return Ok(y);
        }
        if (z + h - z1) * dir > 0.0 {
            h = z1 - z;
        }
        let stage = |coeffs: &[(f64, &[f64; D])]| {
            let mut out = y;
            for (c, k) in coeffs {
                for i in 0..D {
                    out[i] += h * c * k[i];
                }
            }
            out
        };
        let k2 = rhs(&stage(&[(A21, &k1)]));
        let k3 = rhs(&stage(&[(A31, &k1), (A32, &k2)]));
        let k4 = rhs(&stage(&[(A41, &k1), (A42, &k2), (A43, &k3)]));
        let k5 = rhs(&stage(&[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
        let k6 = rhs(&stage(&[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]));
        let y_new = stage(&[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
        let k7 = rhs(&y_new);
        let size = y.iter().chain(&y_new).fold(f64::MIN_POSITIVE, |m, v| m.max(v.abs()));
        let mut err: f64 = 0.0;
        for i in 0..D {
            let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            err = err.max((e / (tol * size)).abs());
        }
        if !err.is_finite() {
            return Err(Error::Convergence(format!("non-finite state near z = {z}")));
        }
        if err <= 1.0 {
            z += h;
            y = y_new;
            k1 = k7;
            if y.iter().any(|v| v.abs() > limit) {
                return Err(Error::Convergence(format!("state exceeded {limit:e} at z = {z}")));
            }
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h *= factor;
        if h.abs() < 1e-14 * (1.0 + z.abs()) {
            return Err(Error::Convergence(format!("step size underflow at z = {z}")));
        }
    }
    Err(Error::Convergence(format!("more than {MAX_STEPS} steps between {z0} and {z1}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_and_oscillator() {
        let y = integrate(|y: &[f64; 1]| [y[0]], [1.0], 0.0, 2.0, 1e-12, 1e10).unwrap();
        assert!((y[0] - 2f64.exp()).abs() < 1e-10);
        let y = integrate(|y: &[f64; 2]| [y[1], -y[0]], [0.0, 1.0], 0.0, 10.0, 1e-12, 1e10).unwrap();
        assert!((y[0] - 10f64.sin()).abs() < 1e-9);
        // backward
        let y = integrate(|y: &[f64; 1]| [-y[0]], [1.0], 3.0, 0.0, 1e-12, 1e10).unwrap();
        assert!((y[0] - 3f64.exp()).abs() < 1e-9);
    }

    #[test]
    fn blow_up_is_an_error() {
        // y' = y², y(0) = 1 blows up at z = 1
        let r = integrate(|y: &[f64; 1]| [y[0] * y[0]], [1.0], 0.0, 2.0, 1e-10, 1e8);
        assert!(r.is_err());
    }
}
