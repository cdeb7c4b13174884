//! Periodic grids, sampled fields, spectral derivatives and quadrature.
//!
//! The box `[-L/2, L/2)` stands in for the infinite line; every scenario
//! picks `L` so that the sampled waves are negligible at the edges.

use std::f64::consts::PI;
use std::fmt;
use std::io::Write;
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{invalid, Error, Result};

/// Smallest supported number of grid points.
pub const MIN_POINTS: usize = 16;

struct Plans {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

/// Uniform periodic grid on `[-L/2, L/2)`.
pub struct Grid {
    length: f64,
    n_points: usize,
    nodes: Vec<f64>,
    wavenumbers: Vec<f64>,
    plans: OnceLock<Plans>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("length", &self.length)
            .field("n_points", &self.n_points)
            .finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.length == other.length && self.n_points == other.n_points
    }
}

impl Grid {
    pub fn new(length: f64, n_points: usize) -> Result<Self> {
        if !(length > 0.0) || !length.is_finite() {
            return Err(invalid(format!("grid length must be positive, got {length}")));
        }
        if n_points < MIN_POINTS {
            return Err(invalid(format!(
                "grid needs at least {MIN_POINTS} points, got {n_points}"
            )));
        }
        let h = length / n_points as f64;
        let nodes = (0..n_points).map(|i| -0.5 * length + i as f64 * h).collect();
        let wavenumbers = (0..n_points)
            .map(|i| {
                let m = if i <= n_points / 2 {
                    i as f64
                } else {
                    i as f64 - n_points as f64
                };
                2.0 * PI * m / length
            })
            .collect();
        Ok(Self {
            length,
            n_points,
            nodes,
            wavenumbers,
            plans: OnceLock::new(),
        })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.n_points as f64
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Wavenumbers `2πm/L` in FFT order. Index `N/2` carries the Nyquist mode.
    pub fn wavenumbers(&self) -> &[f64] {
        &self.wavenumbers
    }

    /// Index of the unpaired Nyquist mode for even `N`.
    pub(crate) fn nyquist(&self) -> Option<usize> {
        (self.n_points % 2 == 0).then_some(self.n_points / 2)
    }

    /// 2/3-rule mask: `true` for retained modes `|m| ≤ N/3`.
    pub fn dealias_mask(&self) -> Vec<bool> {
        let cut = self.n_points / 3;
        (0..self.n_points)
            .map(|i| {
                let m = if i <= self.n_points / 2 { i } else { self.n_points - i };
                m <= cut && Some(i) != self.nyquist()
            })
            .collect()
    }

    fn plans(&self) -> &Plans {
        self.plans.get_or_init(|| {
            let mut planner = FftPlanner::new();
            Plans {
                forward: planner.plan_fft_forward(self.n_points),
                inverse: planner.plan_fft_inverse(self.n_points),
            }
        })
    }

    /// In-place forward DFT (unnormalized).
    pub(crate) fn forward(&self, data: &mut [Complex64]) {
        self.plans().forward.process(data);
    }

    /// In-place inverse DFT, normalized by `1/N`.
    pub(crate) fn inverse(&self, data: &mut [Complex64]) {
        self.plans().inverse.process(data);
        let s = 1.0 / self.n_points as f64;
        data.iter_mut().for_each(|z| *z *= s);
    }

    /// Trapezoidal (periodic rectangle) rule for a sampled real integrand.
    pub fn integrate(&self, samples: impl IntoIterator<Item = f64>) -> f64 {
        self.spacing() * samples.into_iter().sum::<f64>()
    }

    /// Index of the node nearest to `x` after periodic wrap.
    pub fn nearest_index(&self, x: f64) -> usize {
        let h = self.spacing();
        let shifted = (x + 0.5 * self.length).rem_euclid(self.length);
        ((shifted / h).round() as usize) % self.n_points
    }
}

/// Build a grid; see [`Grid::new`].
pub fn make_grid(length: f64, n_points: usize) -> Result<Arc<Grid>> {
    Grid::new(length, n_points).map(Arc::new)
}

/// Sample storage: real or complex carrier.
#[derive(Debug, Clone, PartialEq)]
pub enum Values {
    Real(Vec<f64>),
    Complex(Vec<Complex64>),
}

impl Values {
    pub fn len(&self) -> usize {
        match self {
            Values::Real(v) => v.len(),
            Values::Complex(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A wave sampled on a [`Grid`] at time `time`.
#[derive(Debug, Clone)]
pub struct Field {
    grid: Arc<Grid>,
    values: Values,
    time: f64,
}

impl Field {
    pub fn new(grid: Arc<Grid>, values: Values, time: f64) -> Result<Self> {
        if values.len() != grid.n_points() {
            return Err(invalid(format!(
                "field has {} samples but the grid has {} points",
                values.len(),
                grid.n_points()
            )));
        }
        Ok(Self { grid, values, time })
    }

    pub fn real(grid: Arc<Grid>, values: Vec<f64>, time: f64) -> Result<Self> {
        Self::new(grid, Values::Real(values), time)
    }

    pub fn complex(grid: Arc<Grid>, values: Vec<Complex64>, time: f64) -> Result<Self> {
        Self::new(grid, Values::Complex(values), time)
    }

    pub fn zeros(grid: Arc<Grid>, time: f64) -> Self {
        let n = grid.n_points();
        Self {
            grid,
            values: Values::Real(vec![0.0; n]),
            time,
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &Values {
        &self.values
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn with_time(mut self, time: f64) -> Self {
        self.time = time;
        self
    }

    pub fn is_real(&self) -> bool {
        matches!(self.values, Values::Real(_))
    }

    /// Real samples, if the carrier is real.
    pub fn as_real(&self) -> Option<&[f64]> {
        match &self.values {
            Values::Real(v) => Some(v),
            Values::Complex(_) => None,
        }
    }

    /// Real samples or an error naming the caller.
    pub fn require_real(&self, what: &str) -> Result<&[f64]> {
        self.as_real()
            .ok_or_else(|| invalid(format!("{what} needs a real-carrier field")))
    }

    /// Samples promoted to complex.
    pub fn to_complex_values(&self) -> Vec<Complex64> {
        match &self.values {
            Values::Real(v) => v.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
            Values::Complex(v) => v.clone(),
        }
    }

    pub fn to_complex(&self) -> Field {
        Field {
            grid: self.grid.clone(),
            values: Values::Complex(self.to_complex_values()),
            time: self.time,
        }
    }

    /// Largest sample modulus.
    pub fn max_abs(&self) -> f64 {
        match &self.values {
            Values::Real(v) => v.iter().fold(0.0, |m, x| m.max(x.abs())),
            Values::Complex(v) => v.iter().fold(0.0, |m, z| m.max(z.norm())),
        }
    }

    /// Largest modulus at the two outermost nodes on each side.
    pub fn edge_magnitude(&self) -> f64 {
        let n = self.grid.n_points();
        let idx = [0, 1, n - 2, n - 1];
        match &self.values {
            Values::Real(v) => idx.iter().fold(0.0, |m, &i| m.max(v[i].abs())),
            Values::Complex(v) => idx.iter().fold(0.0, |m, &i| m.max(v[i].norm())),
        }
    }

    /// Spatial reflection `u(x) → u(-x)`: node `j` maps to node `(N - j) mod N`.
    pub fn reflected(&self) -> Field {
        let n = self.grid.n_points();
        let values = match &self.values {
            Values::Real(v) => Values::Real((0..n).map(|j| v[(n - j) % n]).collect()),
            Values::Complex(v) => Values::Complex((0..n).map(|j| v[(n - j) % n]).collect()),
        };
        Field {
            grid: self.grid.clone(),
            values,
            time: self.time,
        }
    }

    /// Fourier coefficients (unnormalized forward DFT).
    pub fn spectrum(&self) -> Vec<Complex64> {
        let mut data = self.to_complex_values();
        self.grid.forward(&mut data);
        data
    }

    /// Snapshot as CSV: `x,re_u[,im_u]`, 17 significant digits.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        match &self.values {
            Values::Real(v) => {
                w.write_record(["x", "re_u"])?;
                for (x, u) in self.grid.nodes().iter().zip(v) {
                    w.write_record([sci(*x), sci(*u)])?;
                }
            }
            Values::Complex(v) => {
                w.write_record(["x", "re_u", "im_u"])?;
                for (x, u) in self.grid.nodes().iter().zip(v) {
                    w.write_record([sci(*x), sci(u.re), sci(u.im)])?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// 17 significant digits.
pub(crate) fn sci(v: f64) -> String {
    format!("{v:.16e}")
}

/// Sample a real pointwise function at the grid nodes.
pub fn sample<F: Fn(f64) -> f64>(f: F, grid: &Arc<Grid>, t: f64) -> Field {
    let values = grid.nodes().iter().map(|&x| f(x)).collect();
    Field {
        grid: grid.clone(),
        values: Values::Real(values),
        time: t,
    }
}

/// Sample a complex pointwise function at the grid nodes.
pub fn sample_complex<F: Fn(f64) -> Complex64>(f: F, grid: &Arc<Grid>, t: f64) -> Field {
    let values = grid.nodes().iter().map(|&x| f(x)).collect();
    Field {
        grid: grid.clone(),
        values: Values::Complex(values),
        time: t,
    }
}

/// Multiplier `(ik)^order` for a spectral derivative. The Nyquist mode is
/// dropped for odd orders so real fields stay real.
pub(crate) fn derivative_multipliers(grid: &Grid, order: u32) -> Vec<Complex64> {
    let nyq = grid.nyquist();
    grid.wavenumbers()
        .iter()
        .enumerate()
        .map(|(i, &k)| {
            if order % 2 == 1 && Some(i) == nyq {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(0.0, k).powu(order)
            }
        })
        .collect()
}

/// `order`-th derivative by the discrete Fourier transform, `order ∈ {1,2,3}`.
pub fn spectral_derivative(field: &Field, order: u32) -> Result<Field> {
    if !(1..=3).contains(&order) {
        return Err(invalid(format!("unsupported derivative order {order}")));
    }
    let grid = &field.grid;
    let mut data = field.spectrum();
    for (z, m) in data.iter_mut().zip(derivative_multipliers(grid, order)) {
        *z *= m;
    }
    grid.inverse(&mut data);
    let values = if field.is_real() {
        Values::Real(data.into_iter().map(|z| z.re).collect())
    } else {
        Values::Complex(data)
    };
    Ok(Field {
        grid: grid.clone(),
        values,
        time: field.time,
    })
}

/// Real-carrier derivative samples.
pub(crate) fn real_derivative(grid: &Grid, u: &[f64], order: u32) -> Vec<f64> {
    let mut data: Vec<Complex64> = u.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    grid.forward(&mut data);
    for (z, m) in data.iter_mut().zip(derivative_multipliers(grid, order)) {
        *z *= m;
    }
    grid.inverse(&mut data);
    data.into_iter().map(|z| z.re).collect()
}

/// `∫ u dx` by the periodic trapezoidal rule. Real fields give a zero
/// imaginary part.
pub fn quadrature(field: &Field) -> Complex64 {
    let h = field.grid.spacing();
    match &field.values {
        Values::Real(v) => Complex64::new(h * v.iter().sum::<f64>(), 0.0),
        Values::Complex(v) => v.iter().sum::<Complex64>() * h,
    }
}

/// Real part of [`quadrature`] for a real-carrier field.
pub fn quadrature_real(field: &Field) -> Result<f64> {
    let v = field.require_real("quadrature_real")?;
    Ok(field.grid.integrate(v.iter().copied()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Norm {
    /// Largest pointwise modulus.
    Linf,
    /// Root mean square over the nodes.
    L2,
}

/// Distance between two fields on the same grid.
pub fn distance(a: &Field, b: &Field, norm: Norm) -> Result<f64> {
    if a.grid != b.grid {
        return Err(invalid("fields live on different grids"));
    }
    let diffs: Vec<f64> = match (&a.values, &b.values) {
        (Values::Real(x), Values::Real(y)) => x.iter().zip(y).map(|(p, q)| (p - q).abs()).collect(),
        _ => a
            .to_complex_values()
            .iter()
            .zip(b.to_complex_values())
            .map(|(p, q)| (p - q).norm())
            .collect(),
    };
    Ok(match norm {
        Norm::Linf => diffs.iter().fold(0.0, |m: f64, d| m.max(*d)),
        Norm::L2 => (diffs.iter().map(|d| d * d).sum::<f64>() / diffs.len() as f64).sqrt(),
    })
}

/// Trigonometric interpolant of a real field, for evaluation between nodes.
pub struct Interpolant {
    x0: f64,
    coeffs: Vec<(f64, Complex64)>,
}

impl Interpolant {
    pub fn new(field: &Field) -> Result<Self> {
        field.require_real("Interpolant")?;
        let grid = field.grid();
        let n = grid.n_points() as f64;
        let nyq = grid.nyquist();
        let coeffs = field
            .spectrum()
            .into_iter()
            .zip(grid.wavenumbers())
            .enumerate()
            .filter(|(i, _)| Some(*i) != nyq)
            .map(|(_, (c, &k))| (k, c / n))
            .collect();
        Ok(Self {
            x0: grid.nodes()[0],
            coeffs,
        })
    }

    /// `d^order u/dx^order` at `x`.
    pub fn eval(&self, x: f64, order: u32) -> f64 {
        let s = x - self.x0;
        self.coeffs
            .iter()
            .map(|&(k, c)| (c * Complex64::new(0.0, k).powu(order) * Complex64::from_polar(1.0, k * s)).re)
            .sum()
    }

    /// Refine a local extremum near `x` by Newton iteration on `u'`.
    pub fn refine_extremum(&self, x: f64, max_shift: f64) -> Result<f64> {
        let mut z = x;
        for _ in 0..50 {
            let d1 = self.eval(z, 1);
            let d2 = self.eval(z, 2);
            if d2 == 0.0 {
                break;
            }
            let step = d1 / d2;
            z -= step;
            if (z - x).abs() > max_shift {
                return Err(Error::Convergence(format!(
                    "extremum refinement left the search window around {x}"
                )));
            }
            if step.abs() < 1e-13 {
                return Ok(z);
            }
        }
        Ok(z)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sech(x: f64) -> f64 {
        1.0 / x.cosh()
    }

    #[test]
    fn grid_construction() {
        assert!(matches!(make_grid(80.0, 8), Err(Error::InvalidArgument(_))));
        assert!(matches!(make_grid(0.0, 64), Err(Error::InvalidArgument(_))));
        assert!(matches!(make_grid(-1.0, 64), Err(Error::InvalidArgument(_))));
        let g = make_grid(80.0, 16).unwrap();
        assert_eq!(g.spacing(), 5.0);
        assert_eq!(g.nodes()[0], -40.0);
        assert_eq!(g.nodes().len(), 16);
        let g = make_grid(2.0 * PI, 64).unwrap();
        assert!((g.spacing() - 2.0 * PI / 64.0).abs() < 1e-15);
        for w in g.nodes().windows(2) {
            assert!((w[1] - w[0] - g.spacing()).abs() < 1e-14);
        }
    }

    #[test]
    fn sampling() {
        let g = make_grid(80.0, 1024).unwrap();
        let z = sample(|_| 0.0, &g, 0.0);
        assert_eq!(z.max_abs(), 0.0);
        let u = sample(|x| 3.0 * sech(x), &g, 0.5);
        let i0 = g.nearest_index(0.0);
        assert_eq!(g.nodes()[i0], 0.0);
        assert_eq!(u.as_real().unwrap()[i0], 3.0);
        assert_eq!(u.time(), 0.5);
        let v = sample(|x| -3.0 * sech(x), &g, 0.0);
        assert_eq!(v.as_real().unwrap()[i0], -3.0);
    }

    #[test]
    fn derivative_of_band_limited_sine() {
        let l = 10.0;
        let g = make_grid(l, 64).unwrap();
        let k = 2.0 * PI / l;
        let u = sample(|x| (k * x).sin(), &g, 0.0);
        let d1 = spectral_derivative(&u, 1).unwrap();
        let want = sample(|x| k * (k * x).cos(), &g, 0.0);
        assert!(distance(&d1, &want, Norm::Linf).unwrap() < 1e-12);
        let d3 = spectral_derivative(&u, 3).unwrap();
        let want = sample(|x| -k.powi(3) * (k * x).cos(), &g, 0.0);
        assert!(distance(&d3, &want, Norm::Linf).unwrap() < 1e-12);
        assert!(d3.is_real());
        assert!(matches!(spectral_derivative(&u, 4), Err(Error::InvalidArgument(_))));
        assert!(matches!(spectral_derivative(&u, 0), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn derivative_of_sech() {
        let g = make_grid(80.0, 1024).unwrap();
        let u = sample(sech, &g, 0.0);
        let d = spectral_derivative(&u, 1).unwrap();
        let want = sample(|x| -sech(x) * x.tanh(), &g, 0.0);
        assert!(distance(&d, &want, Norm::Linf).unwrap() < 1e-10);
    }

    #[test]
    fn complex_derivative_keeps_carrier() {
        let g = make_grid(2.0 * PI, 32).unwrap();
        let u = sample_complex(|x| Complex64::from_polar(1.0, 2.0 * x), &g, 0.0);
        let d = spectral_derivative(&u, 1).unwrap();
        let want = sample_complex(|x| Complex64::new(0.0, 2.0) * Complex64::from_polar(1.0, 2.0 * x), &g, 0.0);
        assert!(!d.is_real());
        assert!(distance(&d, &want, Norm::Linf).unwrap() < 1e-12);
    }

    #[test]
    fn repeated_first_derivative_equals_second() {
        let g = make_grid(60.0, 512).unwrap();
        let u = sample(|x| sech(x).powi(2) * (0.3 * x).cos(), &g, 0.0);
        let twice = spectral_derivative(&spectral_derivative(&u, 1).unwrap(), 1).unwrap();
        let second = spectral_derivative(&u, 2).unwrap();
        assert!(distance(&twice, &second, Norm::Linf).unwrap() < 1e-10);
    }

    #[test]
    fn quadrature_values() {
        let g = make_grid(80.0, 1024).unwrap();
        assert_eq!(quadrature(&Field::zeros(g.clone(), 0.0)).re, 0.0);
        let s2 = sample(|x| sech(x).powi(2), &g, 0.0);
        // ∫ sech² over [-40, 40] = 2 tanh 40
        assert!((quadrature_real(&s2).unwrap() - 2.0 * 40f64.tanh()).abs() < 1e-10);
        let sol = sample(|x| 3.0 * sech(0.5 * x).powi(2), &g, 0.0);
        assert!((quadrature_real(&sol).unwrap() - 12.0).abs() < 1e-9);
        let d = spectral_derivative(&sol, 1).unwrap();
        assert!(quadrature_real(&d).unwrap().abs() < 1e-12);
    }

    #[test]
    fn distances() {
        let g = make_grid(2.0 * PI, 64).unwrap();
        let s = sample(f64::sin, &g, 0.0);
        assert_eq!(distance(&s, &s, Norm::Linf).unwrap(), 0.0);
        let zero = Field::zeros(g.clone(), 0.0);
        let two = sample(|_| 2.0, &g, 0.0);
        assert_eq!(distance(&zero, &two, Norm::Linf).unwrap(), 2.0);
        let ms = sample(|x| -x.sin(), &g, 0.0);
        assert!((distance(&s, &ms, Norm::L2).unwrap() - 2f64.sqrt()).abs() < 1e-14);
        let other = make_grid(2.0 * PI, 32).unwrap();
        let o = Field::zeros(other, 0.0);
        assert!(matches!(distance(&s, &o, Norm::Linf), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn length_mismatch_rejected() {
        let g = make_grid(10.0, 16).unwrap();
        assert!(Field::real(g, vec![0.0; 15], 0.0).is_err());
    }

    #[test]
    fn reflection_maps_nodes() {
        let g = make_grid(20.0, 64).unwrap();
        let u = sample(|x| x.sin() + 0.1 * x.cos(), &g, 0.0);
        let r = u.reflected();
        let want = sample(|x| (-x).sin() + 0.1 * x.cos(), &g, 0.0);
        // the node -L/2 maps onto itself (periodic image of +L/2)
        let r = r.as_real().unwrap();
        let want = want.as_real().unwrap();
        for j in 1..64 {
            assert!((r[j] - want[j]).abs() < 1e-12);
        }
    }

    #[test]
    fn dealias_mask_keeps_two_thirds() {
        let g = make_grid(10.0, 96).unwrap();
        let kept = g.dealias_mask().iter().filter(|&&k| k).count();
        assert_eq!(kept, 2 * 32 + 1);
    }

    #[test]
    fn interpolant_refines_extremum() {
        let g = make_grid(40.0, 256).unwrap();
        let x0 = 0.123_456;
        let u = sample(|x| -2.0 * sech(x - x0).powi(2), &g, 0.0);
        let it = Interpolant::new(&u).unwrap();
        assert!((it.eval(1.7, 0) + 2.0 * sech(1.7 - x0).powi(2)).abs() < 1e-12);
        let z = it.refine_extremum(0.0, 1.0).unwrap();
        assert!((z - x0).abs() < 1e-10);
    }

    #[test]
    fn csv_layout() {
        let g = make_grid(10.0, 16).unwrap();
        let u = sample(|x| x, &g, 0.0);
        let mut buf = Vec::new();
        u.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("x,re_u"));
        assert_eq!(lines.next(), Some("-5.0000000000000000e0,-5.0000000000000000e0"));
        assert_eq!(text.lines().count(), 17);
        let mut buf = Vec::new();
        u.to_complex().write_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("x,re_u,im_u\n"));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn self_distance_is_zero(a in -3.0f64..3.0, w in 0.2f64..3.0, x0 in -5.0f64..5.0) {
                let g = make_grid(40.0, 128).unwrap();
                let u = sample(|x| a * sech(w * (x - x0)), &g, 0.0);
                prop_assert_eq!(distance(&u, &u, Norm::Linf).unwrap(), 0.0);
                prop_assert_eq!(distance(&u, &u, Norm::L2).unwrap(), 0.0);
            }

            #[test]
            fn derivative_integrates_to_zero(a in -3.0f64..3.0, w in 0.5f64..2.0, x0 in -5.0f64..5.0) {
                let g = make_grid(60.0, 512).unwrap();
                let u = sample(|x| a * sech(w * (x - x0)).powi(2), &g, 0.0);
                let d = spectral_derivative(&u, 1).unwrap();
                prop_assert!(quadrature_real(&d).unwrap().abs() < 1e-12);
            }
        }
    }
}
