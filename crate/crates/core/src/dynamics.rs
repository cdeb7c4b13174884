//! Time evolution of `u_t - i u (i u_x)^ε + u_xxx = 0` on a periodic grid,
//! and the two closed-form references: the KdV soliton and the ε = 0
//! Airy-kernel solution.
//!
//! The evolution is written `u_t = N(u) - u_xxx` with `N(u) = i u (i u_x)^ε`.
//! The dispersive term is integrated exactly in Fourier space through the
//! factor `exp(i k³ t)`; classical RK4 advances the remaining nonlinear part
//! (integrating-factor RK4).

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::airy::ai_unchecked;
use crate::error::{invalid, Error, Result};
use crate::fields::{derivative_multipliers, sample, Field, Grid, Interpolant, Values};

/// Any normalized mode above this aborts the run.
pub const BLOW_UP_THRESHOLD: f64 = 1e12;

/// Fraction of a step tolerated when checking that `dt` divides snapshot times.
const STEP_ALIGNMENT: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolutionConfig {
    pub epsilon: f64,
    pub dt: f64,
    pub t_final: f64,
    pub dealias: bool,
    /// Offsets from the initial field's time, sorted, within `[0, t_final]`.
    pub snapshot_times: Vec<f64>,
}

impl EvolutionConfig {
    pub fn new(epsilon: f64, dt: f64, snapshot_times: Vec<f64>) -> Self {
        let t_final = snapshot_times.iter().copied().fold(0.0, f64::max);
        Self {
            epsilon,
            dt,
            t_final,
            dealias: true,
            snapshot_times,
        }
    }

    pub fn with_dealias(mut self, dealias: bool) -> Self {
        self.dealias = dealias;
        self
    }

    /// Check the invariants and return the step index of every snapshot.
    pub fn validate(&self) -> Result<Vec<u64>> {
        if !self.epsilon.is_finite() {
            return Err(Error::Config(format!("epsilon must be finite, got {}", self.epsilon)));
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_final >= 0.0) {
            return Err(Error::Config(format!("t_final must be non-negative, got {}", self.t_final)));
        }
        if self.t_final > 0.0 && self.dt > self.t_final {
            return Err(Error::Config(format!(
                "dt = {} exceeds t_final = {}",
                self.dt, self.t_final
            )));
        }
        if self.snapshot_times.is_empty() {
            return Err(Error::Config("at least one snapshot time is required".into()));
        }
        let mut steps = Vec::with_capacity(self.snapshot_times.len());
        for (i, &t) in self.snapshot_times.iter().enumerate() {
            if !(0.0..=self.t_final).contains(&t) {
                return Err(Error::Config(format!(
                    "snapshot time {t} is outside [0, {}]",
                    self.t_final
                )));
            }
            if i > 0 && t <= self.snapshot_times[i - 1] {
                return Err(Error::Config("snapshot times must be strictly increasing".into()));
            }
            let ratio = t / self.dt;
            let n = ratio.round();
            if (ratio - n).abs() > STEP_ALIGNMENT {
                return Err(Error::Config(format!(
                    "dt = {} does not divide snapshot time {t}",
                    self.dt
                )));
            }
            steps.push(n as u64);
        }
        Ok(steps)
    }
}

/// Snapshots of one run, in time order.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub snapshots: Vec<Field>,
    pub config: EvolutionConfig,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TrajectoryManifest {
    pub epsilon: f64,
    pub dt: f64,
    #[serde(rename = "L")]
    pub length: f64,
    #[serde(rename = "N")]
    pub n_points: usize,
    pub times: Vec<f64>,
    pub files: Vec<String>,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(Field::time).collect()
    }

    pub fn last(&self) -> &Field {
        self.snapshots.last().expect("trajectory has at least one snapshot")
    }

    /// Snapshot whose time is closest to `t`.
    pub fn at(&self, t: f64) -> &Field {
        self.snapshots
            .iter()
            .min_by(|a, b| (a.time() - t).abs().total_cmp(&(b.time() - t).abs()))
            .expect("trajectory has at least one snapshot")
    }

    pub fn manifest(&self) -> TrajectoryManifest {
        let grid = self.snapshots[0].grid();
        TrajectoryManifest {
            epsilon: self.config.epsilon,
            dt: self.config.dt,
            length: grid.length(),
            n_points: grid.n_points(),
            times: self.times(),
            files: (0..self.snapshots.len()).map(snapshot_name).collect(),
        }
    }

    /// One CSV per snapshot plus `manifest.json`. Returns the written paths.
    pub fn write_dir(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let manifest = self.manifest();
        let mut written = Vec::new();
        for (field, name) in self.snapshots.iter().zip(&manifest.files) {
            let path = dir.join(name);
            field.write_csv(fs::File::create(&path)?)?;
            written.push(path);
        }
        let path = dir.join("manifest.json");
        fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n")?;
        written.push(path);
        Ok(written)
    }
}

fn snapshot_name(i: usize) -> String {
    format!("snapshot_{i:03}.csv")
}

/// How `(i u_x)^ε` is evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Power {
    /// Odd integer: `N(u) = -(-1)ⁿ u u_x^{2n+1}`, real arithmetic.
    Odd(i32),
    /// Even integer, exact integer power of `i u_x`.
    Even(i32),
    /// Principal branch of the complex power.
    General(f64),
}

impl Power {
    fn classify(epsilon: f64) -> Self {
        if epsilon.fract() == 0.0 && epsilon.abs() < i32::MAX as f64 {
            let e = epsilon as i32;
            if e.rem_euclid(2) == 1 {
                Power::Odd(e)
            } else {
                Power::Even(e)
            }
        } else {
            Power::General(epsilon)
        }
    }

    /// Real coefficient `i^{ε+1}` of the odd-integer reduction.
    fn odd_sign(e: i32) -> f64 {
        // i^{e+1} with e + 1 even
        if ((e + 1) / 2).rem_euclid(2) == 0 {
            1.0
        } else {
            -1.0
        }
    }

    fn real(self, epsilon: f64, u: f64, ux: f64) -> Result<f64> {
        match self {
            Power::Odd(e) => {
                if e < 0 && ux == 0.0 {
                    return Err(Error::SingularPower { epsilon });
                }
                Ok(Self::odd_sign(e) * u * ux.powi(e))
            }
            _ => Err(Error::CarrierMismatch { epsilon }),
        }
    }

    fn complex(self, epsilon: f64, u: Complex64, ux: Complex64) -> Result<Complex64> {
        let i = Complex64::i();
        let w = i * ux;
        if epsilon < 0.0 && w.norm() == 0.0 {
            return Err(Error::SingularPower { epsilon });
        }
        let p = match self {
            Power::Odd(e) | Power::Even(e) => w.powi(e),
            Power::General(e) => {
                if w.norm() == 0.0 {
                    Complex64::new(0.0, 0.0)
                } else {
                    w.powf(e)
                }
            }
        };
        Ok(i * u * p)
    }
}

/// The nonlinear term `N(u) = i u (i u_x)^ε` on the right of
/// `u_t = N(u) - u_xxx`.
///
/// Odd integers `ε = 2n + 1` reduce to `-(-1)ⁿ u u_x^{2n+1}` and keep a real
/// carrier real. Even integers produce a complex field from either carrier;
/// other values require a complex carrier and take the principal branch,
/// with `0^ε = 0` for `ε > 0`.
pub fn nonlinear_term(field: &Field, epsilon: f64) -> Result<Field> {
    let power = Power::classify(epsilon);
    let grid = field.grid().clone();
    let ux = crate::fields::spectral_derivative(field, 1)?;
    match (field.values(), ux.values()) {
        (Values::Real(u), Values::Real(d)) => match power {
            Power::Odd(_) => {
                let v = u
                    .iter()
                    .zip(d)
                    .map(|(&a, &b)| power.real(epsilon, a, b))
                    .collect::<Result<Vec<_>>>()?;
                Field::real(grid, v, field.time())
            }
            Power::Even(_) => {
                let v = u
                    .iter()
                    .zip(d)
                    .map(|(&a, &b)| power.complex(epsilon, a.into(), b.into()))
                    .collect::<Result<Vec<_>>>()?;
                Field::complex(grid, v, field.time())
            }
            Power::General(_) => Err(Error::CarrierMismatch { epsilon }),
        },
        (Values::Complex(u), Values::Complex(d)) => {
            let v = u
                .iter()
                .zip(d)
                .map(|(&a, &b)| power.complex(epsilon, a, b))
                .collect::<Result<Vec<_>>>()?;
            Field::complex(grid, v, field.time())
        }
        _ => unreachable!("derivative keeps the carrier"),
    }
}

/// Integrating-factor RK4 stepper working on Fourier coefficients.
pub struct Propagator {
    grid: Arc<Grid>,
    epsilon: f64,
    power: Power,
    real: bool,
    ik: Vec<Complex64>,
    /// Linear operator `i k³` (Nyquist mode excluded).
    linear: Vec<Complex64>,
    mask: Option<Vec<bool>>,
    factors: Option<(f64, Vec<Complex64>, Vec<Complex64>)>,
    work: Vec<Complex64>,
    deriv: Vec<Complex64>,
}

impl Propagator {
    /// `real` selects the real-arithmetic path, which requires odd-integer ε.
    pub fn new(grid: Arc<Grid>, epsilon: f64, dealias: bool, real: bool) -> Result<Self> {
        let power = Power::classify(epsilon);
        if real && !matches!(power, Power::Odd(_)) {
            return Err(Error::CarrierMismatch { epsilon });
        }
        let ik = derivative_multipliers(&grid, 1);
        let linear = derivative_multipliers(&grid, 3).into_iter().map(|m| -m).collect();
        let mask = dealias.then(|| grid.dealias_mask());
        let n = grid.n_points();
        Ok(Self {
            grid,
            epsilon,
            power,
            real,
            ik,
            linear,
            mask,
            factors: None,
            work: vec![Complex64::new(0.0, 0.0); n],
            deriv: vec![Complex64::new(0.0, 0.0); n],
        })
    }

    /// Fourier transform of `N(u)` for the state with coefficients `uhat`.
    fn nonlinear_hat(&mut self, uhat: &[Complex64], out: &mut [Complex64]) -> Result<()> {
        let grid = &self.grid;
        if self.real {
            // u + i u_x in one inverse transform: both are real signals
            let i = Complex64::i();
            for ((w, &c), &m) in self.work.iter_mut().zip(uhat).zip(&self.ik) {
                *w = c + i * (m * c);
            }
            grid.inverse(&mut self.work);
            for (o, w) in out.iter_mut().zip(&self.work) {
                *o = self.power.real(self.epsilon, w.re, w.im)?.into();
            }
        } else if self.power == Power::Even(0) {
            // (i u_x)^0 = 1
            out.copy_from_slice(uhat);
            grid.inverse(out);
            out.iter_mut().for_each(|z| *z *= Complex64::i());
        } else {
            self.work.copy_from_slice(uhat);
            for ((d, &c), &m) in self.deriv.iter_mut().zip(uhat).zip(&self.ik) {
                *d = m * c;
            }
            grid.inverse(&mut self.work);
            grid.inverse(&mut self.deriv);
            for ((o, &u), &ux) in out.iter_mut().zip(&self.work).zip(&self.deriv) {
                *o = self.power.complex(self.epsilon, u, ux)?;
            }
        }
        grid.forward(out);
        if let Some(mask) = &self.mask {
            for (o, &keep) in out.iter_mut().zip(mask) {
                if !keep {
                    *o = Complex64::new(0.0, 0.0);
                }
            }
        }
        Ok(())
    }

    fn factors(&mut self, h: f64) -> (Vec<Complex64>, Vec<Complex64>) {
        match &self.factors {
            Some((cached, e, e2)) if *cached == h => (e.clone(), e2.clone()),
            _ => {
                let e: Vec<Complex64> = self.linear.iter().map(|&l| (l * (0.5 * h)).exp()).collect();
                let e2: Vec<Complex64> = e.iter().map(|z| z * z).collect();
                self.factors = Some((h, e.clone(), e2.clone()));
                (e, e2)
            }
        }
    }

    /// One step of signed size `h` applied to the coefficients in place.
    pub fn step(&mut self, uhat: &mut [Complex64], h: f64) -> Result<()> {
        let n = uhat.len();
        let (e, e2) = self.factors(h);
        let zero = Complex64::new(0.0, 0.0);
        let mut a = vec![zero; n];
        let mut b = vec![zero; n];
        let mut c = vec![zero; n];
        let mut d = vec![zero; n];
        let mut stage = vec![zero; n];

        self.nonlinear_hat(uhat, &mut a)?;
        a.iter_mut().for_each(|z| *z *= h);
        for k in 0..n {
            stage[k] = e[k] * (uhat[k] + 0.5 * a[k]);
        }
        self.nonlinear_hat(&stage, &mut b)?;
        b.iter_mut().for_each(|z| *z *= h);
        for k in 0..n {
            stage[k] = e[k] * uhat[k] + 0.5 * b[k];
        }
        self.nonlinear_hat(&stage, &mut c)?;
        c.iter_mut().for_each(|z| *z *= h);
        for k in 0..n {
            stage[k] = e2[k] * uhat[k] + e[k] * c[k];
        }
        self.nonlinear_hat(&stage, &mut d)?;
        d.iter_mut().for_each(|z| *z *= h);
        for k in 0..n {
            uhat[k] = e2[k] * uhat[k] + (e2[k] * a[k] + 2.0 * e[k] * (b[k] + c[k]) + d[k]) / 6.0;
        }
        Ok(())
    }

    fn to_field(&self, uhat: &[Complex64], time: f64) -> Result<Field> {
        let mut data = uhat.to_vec();
        self.grid.inverse(&mut data);
        if self.real {
            Field::real(self.grid.clone(), data.into_iter().map(|z| z.re).collect(), time)
        } else {
            Field::complex(self.grid.clone(), data, time)
        }
    }
}

fn check_blow_up(uhat: &[Complex64], time: f64) -> Result<()> {
    let n = uhat.len() as f64;
    for (k, z) in uhat.iter().enumerate() {
        let m = z.norm() / n;
        if !m.is_finite() || m > BLOW_UP_THRESHOLD {
            return Err(Error::BlowUp {
                time,
                detail: format!("mode {k} has magnitude {m:e}"),
            });
        }
    }
    Ok(())
}

fn uses_real_path(field: &Field, epsilon: f64) -> bool {
    field.is_real() && matches!(Power::classify(epsilon), Power::Odd(_))
}

/// Advance `field` by `steps` steps of signed size `h`. Negative `h`
/// integrates backward in time.
pub fn propagate(field: &Field, epsilon: f64, dealias: bool, h: f64, steps: u64) -> Result<Field> {
    let real = uses_real_path(field, epsilon);
    let mut prop = Propagator::new(field.grid().clone(), epsilon, dealias, real)?;
    let mut uhat = field.spectrum();
    let t0 = field.time();
    for s in 1..=steps {
        prop.step(&mut uhat, h)?;
        check_blow_up(&uhat, t0 + s as f64 * h)?;
    }
    prop.to_field(&uhat, t0 + steps as f64 * h)
}

/// Integrate from `initial` and record the configured snapshots.
///
/// Odd-integer ε with a real initial field runs in real arithmetic; every
/// other case is promoted to a complex carrier.
pub fn evolve(initial: &Field, config: &EvolutionConfig) -> Result<Trajectory> {
    match evolve_partial(initial, config)? {
        (trajectory, None) => Ok(trajectory),
        (_, Some(err)) => Err(err),
    }
}

/// As [`evolve`], but a failure during stepping hands back the snapshots
/// recorded so far together with the error.
pub fn evolve_partial(initial: &Field, config: &EvolutionConfig) -> Result<(Trajectory, Option<Error>)> {
    let snapshot_steps = config.validate()?;
    let epsilon = config.epsilon;
    let real = uses_real_path(initial, epsilon);
    let start = if real { initial.clone() } else { initial.to_complex() };
    let mut prop = Propagator::new(initial.grid().clone(), epsilon, config.dealias, real)?;
    let mut uhat = start.spectrum();
    let t0 = initial.time();
    let mut trajectory = Trajectory {
        snapshots: Vec::with_capacity(snapshot_steps.len()),
        config: config.clone(),
    };
    let mut step = 0u64;
    for &target in &snapshot_steps {
        while step < target {
            let advanced = prop
                .step(&mut uhat, config.dt)
                .and_then(|_| check_blow_up(&uhat, t0 + (step + 1) as f64 * config.dt));
            if let Err(err) = advanced {
                return Ok((trajectory, Some(err)));
            }
            step += 1;
        }
        let time = t0 + step as f64 * config.dt;
        trajectory.snapshots.push(if step == 0 {
            start.clone()
        } else {
            prop.to_field(&uhat, time)?
        });
    }
    Ok((trajectory, None))
}

/// The KdV solitary wave `3c sech²(√c (x - ct - x₀)/2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KdvSoliton {
    pub c: f64,
    pub x0: f64,
}

pub fn kdv_soliton(c: f64, x0: f64) -> Result<KdvSoliton> {
    if !(c > 0.0) || !c.is_finite() {
        return Err(invalid(format!("soliton speed must be positive, got {c}")));
    }
    Ok(KdvSoliton { c, x0 })
}

impl KdvSoliton {
    pub fn value(&self, x: f64, t: f64) -> f64 {
        let s = 1.0 / (0.5 * self.c.sqrt() * (x - self.c * t - self.x0)).cosh();
        3.0 * self.c * s * s
    }

    /// The profile at time `t`, periodically wrapped onto the grid.
    pub fn sample(&self, grid: &Arc<Grid>, t: f64) -> Field {
        let l = grid.length();
        let centre = self.x0 + self.c * t;
        sample(
            |x| {
                let z = (x - centre + 0.5 * l).rem_euclid(l) - 0.5 * l;
                self.value(z + centre, t)
            },
            grid,
            t,
        )
    }
}

/// Samples below this fraction of the peak are left out of the convolution.
const EPS0_SUPPORT_CUTOFF: f64 = 1e-17;

/// Exact solution of the ε = 0 equation `u_t - i u + u_xxx = 0`:
/// `u(x,t) = e^{it} (3t)^{-1/3} ∫ ds u(x - s, 0) Ai((3t)^{-1/3} s)`,
/// by quadrature over the grid nodes. The kernel is the infinite-line one:
/// the separation is not wrapped, so values near the box edge carry no
/// periodic images.
pub fn eps0_exact(initial: &Field, t: f64) -> Result<Field> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(invalid(format!("eps0_exact needs t > 0, got {t}")));
    }
    let grid = initial.grid();
    let u0 = initial.to_complex_values();
    let peak = initial.max_abs();
    let support: Vec<(f64, Complex64)> = grid
        .nodes()
        .iter()
        .zip(&u0)
        .filter(|(_, u)| peak > 0.0 && u.norm() > EPS0_SUPPORT_CUTOFF * peak)
        .map(|(&x, &u)| (x, u))
        .collect();
    let scale = (3.0 * t).powf(-1.0 / 3.0);
    let h = grid.spacing();
    let phase = Complex64::from_polar(1.0, t);
    let values = grid
        .nodes()
        .iter()
        .map(|&x| {
            let sum: Complex64 = support
                .iter()
                .map(|&(y, u)| u * ai_unchecked(scale * (x - y)))
                .sum();
            phase * scale * h * sum
        })
        .collect();
    Field::complex(grid.clone(), values, initial.time() + t)
}

/// A KdV pulse `3c sech²(√c (x - x₀)/2)` matched to the rightmost tall crest
/// of a real field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseFit {
    pub c: f64,
    pub x0: f64,
    pub amplitude: f64,
    /// RMS of field minus pulse over `|x - x₀| ≤ 4/√c`.
    pub rms_residual: f64,
}

/// Crests lower than this fraction of the field maximum are skipped.
const CREST_FRACTION: f64 = 0.5;

/// Fit the rightmost crest with `c = peak/3` and `x₀` at the refined peak.
pub fn fit_rightmost_pulse(field: &Field) -> Result<PulseFit> {
    let u = field.require_real("fit_rightmost_pulse")?;
    let grid = field.grid();
    let n = u.len();
    let top = u.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(top > 0.0) {
        return Err(Error::NoWave("field has no positive crest".into()));
    }
    let crest = (0..n)
        .rev()
        .find(|&j| {
            let (l, r) = (u[(j + n - 1) % n], u[(j + 1) % n]);
            u[j] >= CREST_FRACTION * top && u[j] >= l && u[j] >= r
        })
        .ok_or_else(|| Error::NoWave("no crest found".into()))?;
    let interp = Interpolant::new(field)?;
    let x0 = interp.refine_extremum(grid.nodes()[crest], 2.0 * grid.spacing())?;
    let amplitude = interp.eval(x0, 0);
    let c = amplitude / 3.0;
    let pulse = kdv_soliton(c, x0)?;
    let half = 4.0 / c.sqrt();
    let (mut sum, mut count) = (0.0, 0usize);
    for (&x, &v) in grid.nodes().iter().zip(u) {
        if (x - x0).abs() <= half {
            sum += (v - pulse.value(x, 0.0)).powi(2);
            count += 1;
        }
    }
    Ok(PulseFit {
        c,
        x0,
        amplitude,
        rms_residual: (sum / count.max(1) as f64).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{distance, make_grid, sample_complex, Norm};
    use std::f64::consts::PI;

    fn sech(x: f64) -> f64 {
        1.0 / x.cosh()
    }

    #[test]
    fn kdv_nonlinearity() {
        let g = make_grid(2.0 * PI, 64).unwrap();
        let u = sample(f64::sin, &g, 0.0);
        let n = nonlinear_term(&u, 1.0).unwrap();
        let want = sample(|x| -x.sin() * x.cos(), &g, 0.0);
        assert!(n.is_real());
        assert!(distance(&n, &want, Norm::Linf).unwrap() < 1e-13);
    }

    #[test]
    fn cubic_nonlinearity() {
        let g = make_grid(2.0 * PI, 64).unwrap();
        let u = sample(f64::sin, &g, 0.0);
        let n = nonlinear_term(&u, 3.0).unwrap();
        let want = sample(|x| x.sin() * x.cos().powi(3), &g, 0.0);
        assert!(distance(&n, &want, Norm::Linf).unwrap() < 1e-13);
        // ε = 5 is n = 2: -(+1) u u_x^5
        let n5 = nonlinear_term(&u, 5.0).unwrap();
        let want = sample(|x| -x.sin() * x.cos().powi(5), &g, 0.0);
        assert!(distance(&n5, &want, Norm::Linf).unwrap() < 1e-13);
    }

    #[test]
    fn linear_case_is_multiplication_by_i() {
        let g = make_grid(20.0, 64).unwrap();
        let u = sample(sech, &g, 0.0);
        let n = nonlinear_term(&u, 0.0).unwrap();
        let want = sample_complex(|x| Complex64::new(0.0, sech(x)), &g, 0.0);
        assert!(distance(&n, &want, Norm::Linf).unwrap() < 1e-15);
    }

    #[test]
    fn general_power_needs_complex_carrier() {
        let g = make_grid(20.0, 64).unwrap();
        let u = sample(sech, &g, 0.0);
        assert!(matches!(nonlinear_term(&u, 0.5), Err(Error::CarrierMismatch { .. })));
        let n = nonlinear_term(&u.to_complex(), 0.5).unwrap();
        // principal branch at one node, against a direct evaluation
        let ux = crate::fields::spectral_derivative(&u, 1).unwrap();
        let j = 40;
        let (uj, dj) = (u.as_real().unwrap()[j], ux.as_real().unwrap()[j]);
        let want = Complex64::i() * uj * (Complex64::i() * dj).powf(0.5);
        let got = match n.values() {
            Values::Complex(v) => v[j],
            _ => unreachable!(),
        };
        assert!((got - want).norm() < 1e-14);
    }

    #[test]
    fn zero_derivative_with_positive_power_is_zero() {
        let g = make_grid(20.0, 32).unwrap();
        let u = sample_complex(|_| Complex64::new(1.0, 0.0), &g, 0.0);
        let n = nonlinear_term(&u, 1.5).unwrap();
        assert!(n.max_abs() == 0.0);
    }

    #[test]
    fn negative_power_with_vanishing_slope_is_singular() {
        let g = make_grid(20.0, 32).unwrap();
        let u = sample(|_| 1.0, &g, 0.0);
        assert!(matches!(nonlinear_term(&u, -1.0), Err(Error::SingularPower { .. })));
        let uc = u.to_complex();
        assert!(matches!(nonlinear_term(&uc, -0.5), Err(Error::SingularPower { .. })));
    }

    #[test]
    fn soliton_closed_form() {
        assert!(kdv_soliton(0.0, 0.0).is_err());
        assert!(kdv_soliton(-1.0, 0.0).is_err());
        let s = kdv_soliton(1.0, 0.0).unwrap();
        assert_eq!(s.value(0.0, 0.0), 3.0);
        let s4 = kdv_soliton(4.0, 0.0).unwrap();
        assert!((s4.value(4.0, 1.0) - 12.0).abs() < 1e-14);
        // sech²(arccosh √2) = 1/2
        let x = 2.0 * 2f64.sqrt().acosh();
        assert!((s.value(x, 0.0) - 1.5).abs() < 1e-14);
    }

    #[test]
    fn config_validation() {
        let ok = EvolutionConfig::new(1.0, 1e-3, vec![0.0, 0.8, 3.5]);
        assert_eq!(ok.validate().unwrap(), vec![0, 800, 3500]);
        let bad = EvolutionConfig::new(1.0, 0.3, vec![0.0, 1.0]);
        assert!(matches!(bad.validate(), Err(Error::Config(_))));
        let unsorted = EvolutionConfig::new(1.0, 0.1, vec![1.0, 0.5]);
        assert!(matches!(unsorted.validate(), Err(Error::Config(_))));
        let mut outside = EvolutionConfig::new(1.0, 0.1, vec![0.0, 1.0]);
        outside.t_final = 0.5;
        assert!(outside.validate().is_err());
        let big = EvolutionConfig::new(1.0, 2.0, vec![1.0]);
        assert!(big.validate().is_err());
        let zero_dt = EvolutionConfig::new(1.0, 0.0, vec![0.0]);
        assert!(zero_dt.validate().is_err());
        let only_zero = EvolutionConfig::new(3.0, 1e-3, vec![0.0]);
        assert_eq!(only_zero.validate().unwrap(), vec![0]);
    }

    #[test]
    fn zero_initial_stays_zero() {
        let g = make_grid(40.0, 128).unwrap();
        for eps in [0.0, 1.0, 3.0, 0.5, 2.0] {
            let cfg = EvolutionConfig::new(eps, 0.01, vec![0.0, 0.1, 0.2]);
            let tr = evolve(&Field::zeros(g.clone(), 0.0), &cfg).unwrap();
            assert_eq!(tr.snapshots.len(), 3);
            for s in &tr.snapshots {
                assert_eq!(s.max_abs(), 0.0, "epsilon = {eps}");
            }
        }
    }

    #[test]
    fn carrier_selection() {
        let g = make_grid(40.0, 128).unwrap();
        let u = sample(|x| 0.1 * sech(x), &g, 0.0);
        let cfg = EvolutionConfig::new(3.0, 0.01, vec![0.0, 0.05]);
        assert!(evolve(&u, &cfg).unwrap().last().is_real());
        let cfg = EvolutionConfig::new(0.5, 0.01, vec![0.0, 0.05]);
        assert!(!evolve(&u, &cfg).unwrap().last().is_real());
        assert!(Propagator::new(g, 2.0, true, true).is_err());
    }

    #[test]
    fn blow_up_is_reported() {
        // far beyond the explicit stability limit of the advective term
        let g = make_grid(20.0, 64).unwrap();
        let big = sample(|x| 500.0 * (2.0 * PI * x / 20.0).sin(), &g, 0.0);
        let cfg = EvolutionConfig::new(1.0, 0.05, vec![0.0, 50.0]).with_dealias(false);
        match evolve(&big, &cfg) {
            Err(Error::BlowUp { time, .. }) => assert!(time > 0.0 && time <= 50.0),
            other => panic!("expected blow-up, got {:?}", other.map(|t| t.last().max_abs())),
        }
    }

    #[test]
    fn linear_phase_only_for_constant_mode() {
        // ε = 0 and a constant field: u(t) = e^{it} u0
        let g = make_grid(10.0, 32).unwrap();
        let u = sample(|_| 1.0, &g, 0.0);
        let cfg = EvolutionConfig::new(0.0, 0.01, vec![0.0, 1.0]).with_dealias(false);
        let tr = evolve(&u, &cfg).unwrap();
        let want = sample_complex(|_| Complex64::from_polar(1.0, 1.0), &g, 1.0);
        assert!(distance(tr.last(), &want, Norm::Linf).unwrap() < 1e-9);
    }

    #[test]
    fn eps0_exact_basic_contracts() {
        let g = make_grid(100.0, 512).unwrap();
        let u = sample(|x| 3.0 * sech(x), &g, 0.0);
        assert!(eps0_exact(&u, 0.0).is_err());
        assert!(eps0_exact(&u, -1.0).is_err());
        let z = eps0_exact(&Field::zeros(g.clone(), 0.0), 1.0).unwrap();
        assert_eq!(z.max_abs(), 0.0);
        let a = eps0_exact(&u, 1.0).unwrap();
        assert!(!a.is_real());
        // stripping the unit phase leaves the modulus unchanged
        let stripped: Vec<Complex64> = a
            .to_complex_values()
            .iter()
            .map(|z| z * Complex64::from_polar(1.0, -1.0))
            .collect();
        for (p, q) in a.to_complex_values().iter().zip(&stripped) {
            assert!((p.norm() - q.norm()).abs() < 1e-14);
        }
    }

    #[test]
    fn time_reversal_equivariance() {
        // u(x,t) → u(-x,-t) maps solutions of the ε = 3 equation to solutions
        let g = make_grid(60.0, 256).unwrap();
        let u0 = sample(|x| -1.5 * sech(x - 0.7), &g, 0.0);
        let h = 2e-3;
        let forward = propagate(&u0, 3.0, true, h, 200).unwrap().reflected();
        let backward = propagate(&u0.reflected(), 3.0, true, -h, 200).unwrap();
        assert!(distance(&forward, &backward, Norm::Linf).unwrap() < 1e-6);
    }

    #[test]
    fn manifest_and_files() {
        let g = make_grid(20.0, 32).unwrap();
        let u = sample(|x| 0.1 * sech(x), &g, 0.0);
        let cfg = EvolutionConfig::new(1.0, 0.01, vec![0.0, 0.1]);
        let tr = evolve(&u, &cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let files = tr.write_dir(dir.path()).unwrap();
        assert_eq!(files.len(), 3);
        let m: TrajectoryManifest =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap())
                .unwrap();
        assert_eq!(m.n_points, 32);
        assert_eq!(m.length, 20.0);
        assert_eq!(m.times.len(), 2);
        let raw = std::fs::read_to_string(dir.path().join("manifest.json")).unwrap();
        assert!(raw.contains("\"L\"") && raw.contains("\"N\"") && raw.contains("\"epsilon\""));
    }

    #[test]
    fn partial_run_keeps_earlier_snapshots() {
        let g = make_grid(20.0, 64).unwrap();
        let big = sample(|x| 500.0 * (2.0 * PI * x / 20.0).sin(), &g, 0.0);
        let cfg = EvolutionConfig::new(1.0, 0.05, vec![0.0, 50.0]).with_dealias(false);
        let (tr, err) = evolve_partial(&big, &cfg).unwrap();
        assert_eq!(tr.snapshots.len(), 1);
        assert!(matches!(err, Some(Error::BlowUp { .. })));
    }

    #[test]
    fn pulse_fit_recovers_soliton() {
        let g = make_grid(80.0, 1024).unwrap();
        let s = kdv_soliton(1.3, 7.25).unwrap();
        let left = kdv_soliton(2.0, -15.0).unwrap();
        let u = sample(|x| s.value(x, 0.0) + left.value(x, 0.0), &g, 0.0);
        let fit = fit_rightmost_pulse(&u).unwrap();
        assert!((fit.c - 1.3).abs() < 1e-6, "{fit:?}");
        assert!((fit.x0 - 7.25).abs() < 1e-6);
        assert!(fit.rms_residual < 1e-6);
        assert!(fit_rightmost_pulse(&Field::zeros(g, 0.0)).is_err());
    }
}
