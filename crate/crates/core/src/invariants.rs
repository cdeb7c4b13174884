//! Conserved quantities of the KdV (ε = 1) and ε = 3 equations, and the
//! integration-by-parts identities behind them as numerical residuals.

use std::fmt;
use std::fs;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::airy::{ai_primitive, bi_primitive, GAMMA_THIRD, GAMMA_TWO_THIRDS, PRIMITIVE_MAX_ABS_ARG};
use crate::dynamics::Trajectory;
use crate::error::{invalid, Error, Result};
use crate::fields::{quadrature, real_derivative, sci, Field};

const SQRT_3: f64 = 1.732_050_807_568_877_2;
const CBRT_2: f64 = 1.259_921_049_894_873_2;

/// Denominator floor of [`ConservedReport::relative_drift`].
pub const DRIFT_FLOOR: f64 = 1e-300;

/// Truncation control and normalizations of the ε = 3 series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesSpec {
    pub normalization_a: f64,
    pub normalization_b: f64,
    /// Stop once an integrated term bound falls below this fraction of the
    /// accumulated bound.
    pub tolerance: f64,
    pub k_max: usize,
}

impl Default for SeriesSpec {
    fn default() -> Self {
        Self {
            normalization_a: 6f64.cbrt() / std::f64::consts::PI,
            normalization_b: 36f64.cbrt() / std::f64::consts::PI,
            tolerance: 1e-15,
            k_max: 200,
        }
    }
}

impl SeriesSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(invalid(format!("series tolerance must be positive, got {}", self.tolerance)));
        }
        if self.k_max < 20 {
            return Err(invalid(format!("k_max must be at least 20, got {}", self.k_max)));
        }
        Ok(())
    }

    /// Series coefficients `c_k` with `P = ∫ Σ c_k u^{3k+1}` (momentum) or
    /// `E = ∫ Σ c_k u^{3k+2}` (energy), `k = 0..count`.
    ///
    /// Built from the exact ratio of consecutive terms, seeded with Γ(1/3)
    /// and Γ(2/3).
    pub fn coefficients(&self, kind: Eps3Kind, count: usize) -> Vec<f64> {
        let mut c = self.leading(kind);
        let mut out = Vec::with_capacity(count);
        for k in 0..count {
            out.push(c);
            c *= term_ratio(kind, k);
        }
        out
    }

    fn leading(&self, kind: Eps3Kind) -> f64 {
        match kind {
            Eps3Kind::Momentum => self.normalization_a * GAMMA_THIRD,
            Eps3Kind::Energy => self.normalization_b * GAMMA_TWO_THIRDS / 2.0,
        }
    }
}

/// `c_{k+1} / c_k`.
fn term_ratio(kind: Eps3Kind, k: usize) -> f64 {
    let (shift, offset) = match kind {
        Eps3Kind::Momentum => (1.0 / 3.0, 1.0),
        Eps3Kind::Energy => (2.0 / 3.0, 2.0),
    };
    let m = 3.0 * k as f64 + offset;
    6.0 * (k as f64 + shift) / ((m + 1.0) * (m + 2.0) * (m + 3.0))
}

/// Multipliers `a_k = 6^k Γ(k+1/3)/(3k)! · A` that combine the hierarchy
/// into the conserved momentum.
pub fn hierarchy_weights(spec: &SeriesSpec, count: usize) -> Vec<f64> {
    let mut a = spec.normalization_a * GAMMA_THIRD;
    let mut out = Vec::with_capacity(count);
    for k in 0..count {
        out.push(a);
        let kf = k as f64;
        a *= 6.0 * (kf + 1.0 / 3.0) / ((3.0 * kf + 1.0) * (3.0 * kf + 2.0) * (3.0 * kf + 3.0));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Series,
    Airy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Eps3Kind {
    Momentum,
    Energy,
}

/// `∫ u dx`.
pub fn kdv_momentum(field: &Field) -> Complex64 {
    quadrature(field)
}

/// `½ ∫ u² dx`.
pub fn kdv_energy(field: &Field) -> Complex64 {
    let h = field.grid().spacing();
    0.5 * h * field.to_complex_values().iter().map(|z| z * z).sum::<Complex64>()
}

pub fn eps3_momentum(field: &Field, method: Method) -> Result<f64> {
    eps3_invariant(field, Eps3Kind::Momentum, method, &SeriesSpec::default())
}

pub fn eps3_energy(field: &Field, method: Method) -> Result<f64> {
    eps3_invariant(field, Eps3Kind::Energy, method, &SeriesSpec::default())
}

/// The ε = 3 momentum or energy by either realization.
///
/// The Airy form is `∫ dx ∫_0^{2^{1/3}u} [Bi(s) ± √3 Ai(s)] ds`, plus for
/// the momentum and minus for the energy.
pub fn eps3_invariant(field: &Field, kind: Eps3Kind, method: Method, spec: &SeriesSpec) -> Result<f64> {
    let u = field.require_real(match kind {
        Eps3Kind::Momentum => "eps3_momentum",
        Eps3Kind::Energy => "eps3_energy",
    })?;
    let grid = field.grid();
    match method {
        Method::Airy => {
            let peak = field.max_abs();
            if CBRT_2 * peak > PRIMITIVE_MAX_ABS_ARG {
                return Err(Error::Range {
                    function: match kind {
                        Eps3Kind::Momentum => "eps3_momentum",
                        Eps3Kind::Energy => "eps3_energy",
                    },
                    x: peak,
                    min: -PRIMITIVE_MAX_ABS_ARG / CBRT_2,
                    max: PRIMITIVE_MAX_ABS_ARG / CBRT_2,
                });
            }
            let sign = match kind {
                Eps3Kind::Momentum => SQRT_3,
                Eps3Kind::Energy => -SQRT_3,
            };
            let mut samples = Vec::with_capacity(u.len());
            for &v in u {
                let s = CBRT_2 * v;
                samples.push(bi_primitive(s)? + sign * ai_primitive(s)?);
            }
            Ok(grid.integrate(samples))
        }
        Method::Series => {
            spec.validate()?;
            let c0 = spec.leading(kind);
            let cubes: Vec<f64> = u.iter().map(|v| v * v * v).collect();
            // c_k u^{3k+1} or c_k u^{3k+2}, updated in place so that neither
            // factor is formed on its own
            let mut terms: Vec<f64> = match kind {
                Eps3Kind::Momentum => u.iter().map(|&v| c0 * v).collect(),
                Eps3Kind::Energy => u.iter().map(|&v| c0 * v * v).collect(),
            };
            let mut total = 0.0;
            let mut scale = 0.0;
            let mut previous = f64::INFINITY;
            for k in 0..=spec.k_max {
                if k > 0 {
                    let ratio = term_ratio(kind, k - 1);
                    for (t, &c) in terms.iter_mut().zip(&cubes) {
                        *t *= ratio * c;
                    }
                }
                total += grid.integrate(terms.iter().copied());
                let bound = grid.integrate(terms.iter().map(|t| t.abs()));
                scale += bound;
                if !scale.is_finite() {
                    break;
                }
                if bound <= spec.tolerance * scale && bound <= previous {
                    return Ok(total);
                }
                previous = bound;
            }
            Err(Error::Convergence(format!(
                "ε = 3 series not converged after {} terms (max|u| = {})",
                spec.k_max + 1,
                field.max_abs()
            )))
        }
    }
}

/// `|∫ u^N u_x³ − 2/((N+1)(N+2)) ∫ u^{N+2} u_xxx|`.
pub fn parts_identity_residual(field: &Field, power: u32) -> Result<f64> {
    let u = field.require_real("parts_identity_residual")?;
    let grid = field.grid();
    let ux = real_derivative(grid, u, 1);
    let uxxx = real_derivative(grid, u, 3);
    let n = power as i32;
    let lhs = grid.integrate(u.iter().zip(&ux).map(|(&v, &d)| v.powi(n) * d * d * d));
    let coeff = 2.0 / ((power as f64 + 1.0) * (power as f64 + 2.0));
    let rhs = grid.integrate(u.iter().zip(&uxxx).map(|(&v, &d)| v.powi(n + 2) * d));
    Ok((lhs - coeff * rhs).abs())
}

/// Largest mismatch of
/// `d/dt ∫ u^{3k+1}/(3k+1) = ∫ 2u^{3k+3}u_xxx/((3k+2)(3k+3)) − ∫ u^{3k}u_xxx`
/// over interior snapshots, with the time derivative taken by three-point
/// differences.
pub fn hierarchy_residual(trajectory: &Trajectory, k: u32) -> Result<f64> {
    let snaps = &trajectory.snapshots;
    if snaps.len() < 3 {
        return Err(invalid(format!(
            "hierarchy_residual needs at least 3 snapshots, got {}",
            snaps.len()
        )));
    }
    let m = 3 * k as i32;
    let kf = k as f64;
    let mut lhs_q = Vec::with_capacity(snaps.len());
    let mut rhs = Vec::with_capacity(snaps.len());
    for s in snaps {
        let u = s.require_real("hierarchy_residual")?;
        let grid = s.grid();
        let uxxx = real_derivative(grid, u, 3);
        lhs_q.push(grid.integrate(u.iter().map(|&v| v.powi(m + 1))) / (3.0 * kf + 1.0));
        let a = grid.integrate(u.iter().zip(&uxxx).map(|(&v, &d)| v.powi(m + 3) * d));
        let b = grid.integrate(u.iter().zip(&uxxx).map(|(&v, &d)| v.powi(m) * d));
        rhs.push(2.0 * a / ((3.0 * kf + 2.0) * (3.0 * kf + 3.0)) - b);
    }
    let mut worst: f64 = 0.0;
    for j in 1..snaps.len() - 1 {
        let (t0, t1, t2) = (snaps[j - 1].time(), snaps[j].time(), snaps[j + 1].time());
        let (h1, h2) = (t1 - t0, t2 - t1);
        let deriv = -h2 / (h1 * (h1 + h2)) * lhs_q[j - 1]
            + (h2 - h1) / (h1 * h2) * lhs_q[j]
            + h1 / (h2 * (h1 + h2)) * lhs_q[j + 1];
        worst = worst.max((deriv - rhs[j]).abs());
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    KdvMomentum,
    KdvEnergy,
    Eps3Momentum(Method),
    Eps3Energy(Method),
}

impl Quantity {
    fn required_epsilon(self) -> f64 {
        match self {
            Quantity::KdvMomentum | Quantity::KdvEnergy => 1.0,
            Quantity::Eps3Momentum(_) | Quantity::Eps3Energy(_) => 3.0,
        }
    }

    pub fn evaluate(self, field: &Field) -> Result<f64> {
        match self {
            Quantity::KdvMomentum => Ok(kdv_momentum(field).re),
            Quantity::KdvEnergy => Ok(kdv_energy(field).re),
            Quantity::Eps3Momentum(m) => eps3_momentum(field, m),
            Quantity::Eps3Energy(m) => eps3_energy(field, m),
        }
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let m = |m: &Method| match m {
            Method::Series => "series",
            Method::Airy => "airy",
        };
        match self {
            Quantity::KdvMomentum => write!(f, "kdv_momentum"),
            Quantity::KdvEnergy => write!(f, "kdv_energy"),
            Quantity::Eps3Momentum(x) => write!(f, "eps3_momentum_{}", m(x)),
            Quantity::Eps3Energy(x) => write!(f, "eps3_energy_{}", m(x)),
        }
    }
}

/// An invariant tracked along a trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConservedReport {
    pub quantity: String,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    /// `(max − min) / max(|mean|, floor)`.
    pub relative_drift: f64,
}

fn drift(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    (max - min) / mean.abs().max(DRIFT_FLOOR)
}

impl ConservedReport {
    /// Drift over the first `n` values.
    pub fn drift_so_far(&self, n: usize) -> f64 {
        drift(&self.values[..n])
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["t", "value", "relative_drift_so_far"])?;
        for (i, (t, v)) in self.times.iter().zip(&self.values).enumerate() {
            w.write_record([sci(*t), sci(*v), sci(self.drift_so_far(i + 1))])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_summary(&self, path: &Path) -> Result<()> {
        #[derive(Serialize)]
        struct Summary<'a> {
            quantity: &'a str,
            samples: usize,
            t_start: Option<f64>,
            t_end: Option<f64>,
            relative_drift: f64,
        }
        let s = Summary {
            quantity: &self.quantity,
            samples: self.values.len(),
            t_start: self.times.first().copied(),
            t_end: self.times.last().copied(),
            relative_drift: self.relative_drift,
        };
        fs::write(path, serde_json::to_string_pretty(&s)? + "\n")?;
        Ok(())
    }
}

/// Evaluate `quantity` at every snapshot.
///
/// KdV invariants need an ε = 1 run, ε = 3 invariants an ε = 3 run, both on
/// a real carrier.
pub fn drift_report(trajectory: &Trajectory, quantity: Quantity) -> Result<ConservedReport> {
    let eps = trajectory.config.epsilon;
    if eps != quantity.required_epsilon() {
        return Err(invalid(format!("{quantity} does not apply to an epsilon = {eps} trajectory")));
    }
    if trajectory.snapshots.iter().any(|s| !s.is_real()) {
        return Err(invalid(format!("{quantity} needs a real-carrier trajectory")));
    }
    let values = trajectory
        .snapshots
        .iter()
        .map(|s| quantity.evaluate(s))
        .collect::<Result<Vec<_>>>()?;
    Ok(ConservedReport {
        quantity: quantity.to_string(),
        times: trajectory.times(),
        relative_drift: drift(&values),
        values,
    })
}
