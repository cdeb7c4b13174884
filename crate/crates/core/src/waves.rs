//! Solitary waves `u = f(x - ct)` of `u_t + (-1)ⁿ u u_x^{2n+1} + u_xxx = 0`,
//! found by shooting from the exponential tail toward the crest.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dynamics::Trajectory;
use crate::error::{invalid, Error, Result};
use crate::fields::{sci, Interpolant};
use crate::ode;

/// Tail length in decay lengths `1/√c`.
const TAIL_DECAY_LENGTHS: f64 = 24.0;
/// Node spacing in decay lengths.
const NODE_SPACING: f64 = 0.01;
/// Largest `|f(z_max)|` a profile may keep.
pub const BOUNDARY_TOLERANCE: f64 = 1e-9;
const BRACKET: f64 = 5.0;
const BRACKET_WIDENING: f64 = 4.0;
const SCAN_POINTS: usize = 64;
const SECANT_ITERATIONS: usize = 100;
/// Shooting states beyond this are treated as diverged.
const DIVERGENCE_LIMIT: f64 = 1e6;
const SCORER_SAMPLES: usize = 1000;
/// Local tolerance when evaluating between nodes.
const EVAL_TOLERANCE: f64 = 1e-14;

fn sign_n(n: u32) -> f64 {
    if n % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// `(f', f'', f''')` with `f''' = c f' − (−1)ⁿ f f'^{2n+1}`.
pub fn profile_rhs(n: u32, c: f64, state: [f64; 3]) -> [f64; 3] {
    let [f, fp, fpp] = state;
    [fp, fpp, c * fp - sign_n(n) * f * fp.powi(2 * n as i32 + 1)]
}

/// Half of an even solitary wave, sampled on `[0, z_max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    pub n: u32,
    pub c: f64,
    pub z_nodes: Vec<f64>,
    pub f: Vec<f64>,
    pub f_prime: Vec<f64>,
    pub f_double_prime: Vec<f64>,
    /// `a` in `f ~ a e^{−√c z}`.
    pub tail_amplitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileSummary {
    pub n: u32,
    pub c: f64,
    pub peak: f64,
    pub half_width: Option<f64>,
    pub tail_amplitude: f64,
}

impl Profile {
    /// A profile from externally computed samples on increasing `z ≥ 0`.
    pub fn from_samples(
        n: u32,
        c: f64,
        z_nodes: Vec<f64>,
        f: Vec<f64>,
        f_prime: Vec<f64>,
        f_double_prime: Vec<f64>,
        tail_amplitude: f64,
    ) -> Result<Self> {
        let m = z_nodes.len();
        if m < 2 || f.len() != m || f_prime.len() != m || f_double_prime.len() != m {
            return Err(Error::MalformedProfile("sample arrays must share a length of at least 2".into()));
        }
        if z_nodes[0] != 0.0 || z_nodes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::MalformedProfile("nodes must start at 0 and increase".into()));
        }
        Ok(Self {
            n,
            c,
            z_nodes,
            f,
            f_prime,
            f_double_prime,
            tail_amplitude,
        })
    }

    /// The identically zero profile, a degenerate solution of the ODE.
    pub fn zero(n: u32, c: f64) -> Self {
        let z_max = TAIL_DECAY_LENGTHS / c.sqrt();
        Self {
            n,
            c,
            z_nodes: vec![0.0, z_max],
            f: vec![0.0; 2],
            f_prime: vec![0.0; 2],
            f_double_prime: vec![0.0; 2],
            tail_amplitude: 0.0,
        }
    }

    pub fn z_max(&self) -> f64 {
        *self.z_nodes.last().expect("profile has nodes")
    }

    fn state(&self, j: usize) -> [f64; 3] {
        [self.f[j], self.f_prime[j], self.f_double_prime[j]]
    }

    /// `(f, f')` at `z ≥ 0`: a short integration of the profile ODE from the
    /// nearest node, or the exponential tail beyond `z_max`.
    fn local(&self, z: f64) -> (f64, f64) {
        let z_max = self.z_max();
        if z >= z_max {
            let r = self.c.sqrt();
            let f = self.tail_amplitude * (-r * z).exp();
            return (f, -r * f);
        }
        let i = self.z_nodes.partition_point(|&v| v < z);
        let j = if i == 0 {
            0
        } else if i >= self.z_nodes.len() || z - self.z_nodes[i - 1] <= self.z_nodes[i] - z {
            i - 1
        } else {
            i
        };
        let s = self.state(j);
        match ode::integrate(|y| profile_rhs(self.n, self.c, *y), s, self.z_nodes[j], z, EVAL_TOLERANCE, DIVERGENCE_LIMIT) {
            Ok(y) => (y[0], y[1]),
            Err(_) => {
                let h = z - self.z_nodes[j];
                (s[0] + h * (s[1] + 0.5 * h * s[2]), s[1] + h * s[2])
            }
        }
    }

    /// `f(z)` on the whole line (even extension).
    pub fn value(&self, z: f64) -> f64 {
        self.local(z.abs()).0
    }

    /// `f'(z)` on the whole line (odd extension).
    pub fn slope(&self, z: f64) -> f64 {
        let d = self.local(z.abs()).1;
        if z < 0.0 {
            -d
        } else {
            d
        }
    }

    /// `(z, f, f')` over `[−z_max, z_max]`.
    pub fn mirrored(&self) -> Vec<(f64, f64, f64)> {
        let m = self.z_nodes.len();
        let mut out = Vec::with_capacity(2 * m - 1);
        for j in (1..m).rev() {
            out.push((-self.z_nodes[j], self.f[j], -self.f_prime[j]));
        }
        for j in 0..m {
            out.push((self.z_nodes[j], self.f[j], self.f_prime[j]));
        }
        out
    }

    pub fn summary(&self) -> ProfileSummary {
        ProfileSummary {
            n: self.n,
            c: self.c,
            peak: peak_height(self),
            half_width: half_width(self).ok(),
            tail_amplitude: self.tail_amplitude,
        }
    }

    /// CSV `z,f,f_prime` over the mirrored domain.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["z", "f", "f_prime"])?;
        for (z, f, fp) in self.mirrored() {
            w.write_record([sci(z), sci(f), sci(fp)])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        fs::write(path, serde_json::to_string_pretty(&self.summary())? + "\n")?;
        Ok(())
    }
}

/// Integrate inward from the tail with amplitude `a`, returning the states
/// on the uniform nodes `z_j = j Δz` (index 0 at the crest).
fn shoot(n: u32, c: f64, a: f64, z_max: f64, dz: f64, tol: f64) -> Result<Vec<[f64; 3]>> {
    let r = c.sqrt();
    let m = (z_max / dz).round() as usize;
    let f = a * (-r * z_max).exp();
    let mut states = vec![[0.0; 3]; m + 1];
    states[m] = [f, -r * f, c * f];
    for j in (0..m).rev() {
        states[j] = ode::integrate(
            |y| profile_rhs(n, c, *y),
            states[j + 1],
            (j + 1) as f64 * dz,
            j as f64 * dz,
            tol / 10.0,
            DIVERGENCE_LIMIT,
        )?;
    }
    Ok(states)
}

fn slope_at_crest(n: u32, c: f64, a: f64, z_max: f64, dz: f64, tol: f64) -> Option<f64> {
    shoot(n, c, a, z_max, dz, tol).ok().map(|s| s[0][1])
}

/// First sign change of `f'(0)` scanning outward from `a = 0`.
fn bracket(n: u32, c: f64, limit: f64, z_max: f64, dz: f64, tol: f64) -> Option<((f64, f64), (f64, f64))> {
    let sign = sign_n(n);
    let mut prev: Option<(f64, f64)> = None;
    for j in 1..=SCAN_POINTS {
        let a = sign * limit * j as f64 / SCAN_POINTS as f64;
        match slope_at_crest(n, c, a, z_max, dz, tol) {
            Some(d) => {
                if let Some((pa, pd)) = prev {
                    if pd * d <= 0.0 {
                        return Some(((pa, pd), (a, d)));
                    }
                }
                prev = Some((a, d));
            }
            None => prev = None,
        }
    }
    None
}

/// Solve for the even solitary wave of family `n` and speed `c`.
///
/// Shoots from `z_max = 24/√c` on the tail `a e^{−√c z}` and adjusts `a`
/// until `|f'(0)| < tol`. The tail is lengthened if `|f(z_max)|` would
/// exceed [`BOUNDARY_TOLERANCE`].
pub fn solve_profile(n: u32, c: f64, tol: f64) -> Result<Profile> {
    if n < 1 {
        return Err(invalid(format!("family index must be at least 1, got {n}")));
    }
    if !(c > 0.0) || !c.is_finite() {
        return Err(invalid(format!("wave speed must be positive, got {c}")));
    }
    if !(tol > 0.0) {
        return Err(invalid(format!("tolerance must be positive, got {tol}")));
    }
    let r = c.sqrt();
    let dz = NODE_SPACING / r;
    let mut z_max = TAIL_DECAY_LENGTHS / r;
    for _ in 0..5 {
        let br = bracket(n, c, BRACKET, z_max, dz, tol)
            .or_else(|| bracket(n, c, BRACKET * BRACKET_WIDENING, z_max, dz, tol))
            .ok_or_else(|| {
                Error::NoSolution(format!("f'(0) does not change sign for n = {n}, c = {c}"))
            })?;
        let a = secant(n, c, br, z_max, dz, tol)?;
        if (a * (-r * z_max).exp()).abs() > BOUNDARY_TOLERANCE {
            z_max += 4.0 / r;
            continue;
        }
        let states = shoot(n, c, a, z_max, dz, tol)?;
        if states[0][0] * sign_n(n) <= 0.0 {
            return Err(Error::NoSolution(format!(
                "crest f(0) = {} has the wrong sign for n = {n}",
                states[0][0]
            )));
        }
        let m = states.len();
        return Ok(Profile {
            n,
            c,
            z_nodes: (0..m).map(|j| j as f64 * dz).collect(),
            f: states.iter().map(|s| s[0]).collect(),
            f_prime: states.iter().map(|s| s[1]).collect(),
            f_double_prime: states.iter().map(|s| s[2]).collect(),
            tail_amplitude: a,
        });
    }
    Err(Error::Convergence(format!("tail never fell below {BOUNDARY_TOLERANCE:e}")))
}

/// Secant iteration kept inside the bracket (Illinois weighting).
fn secant(n: u32, c: f64, ((mut a0, mut d0), (mut a1, mut d1)): ((f64, f64), (f64, f64)), z_max: f64, dz: f64, tol: f64) -> Result<f64> {
    if d0.abs() < tol {
        return Ok(a0);
    }
    if d1.abs() < tol {
        return Ok(a1);
    }
    let mut side = 0i8;
    for _ in 0..SECANT_ITERATIONS {
        let a = (a0 * d1 - a1 * d0) / (d1 - d0);
        let d = shoot(n, c, a, z_max, dz, tol)?[0][1];
        if d.abs() < tol {
            return Ok(a);
        }
        if d * d1 < 0.0 {
            a0 = a1;
            d0 = d1;
            side = 0;
        } else {
            if side == 1 {
                d0 /= 2.0;
            }
            side = 1;
        }
        a1 = a;
        d1 = d;
        if (a1 - a0).abs() <= 1e-15 * a1.abs() {
            break;
        }
    }
    Err(Error::Convergence(format!(
        "secant on the tail amplitude stagnated at a = {a1}, f'(0) = {d1:e}"
    )))
}

/// `f(0)`.
pub fn peak_height(profile: &Profile) -> f64 {
    profile.f[0]
}

/// Full width where `|f|` falls to half of `|f(0)|`, to linear interpolation.
pub fn half_width(profile: &Profile) -> Result<f64> {
    let half = 0.5 * profile.f[0].abs();
    if half == 0.0 {
        return Err(Error::MalformedProfile("zero peak has no half width".into()));
    }
    for j in 1..profile.f.len() {
        let (a, b) = (profile.f[j - 1].abs(), profile.f[j].abs());
        if a >= half && b < half {
            let (z0, z1) = (profile.z_nodes[j - 1], profile.z_nodes[j]);
            return Ok(2.0 * (z0 + (a - half) / (a - b) * (z1 - z0)));
        }
    }
    Err(Error::MalformedProfile("|f| never falls to half its peak".into()))
}

/// `max |H''(f) − 2f H(f) − 2c|` with `H = (f')²` sampled on a uniform grid
/// in `f` along the branch `z ≥ 0`; `H''` by central differences.
pub fn scorer_residual(profile: &Profile) -> Result<f64> {
    if profile.n != 1 {
        return Err(invalid(format!(
            "the Scorer form applies to the n = 1 family, got n = {}",
            profile.n
        )));
    }
    let c = profile.c;
    let f0 = profile.f[0];
    if f0 == 0.0 {
        return Ok((2.0 * c).abs());
    }
    // f(z) must move monotonically from the crest toward zero
    let toward = -f0.signum();
    if profile.f_prime[1..].iter().any(|&d| d * toward <= 0.0) {
        return Err(Error::MalformedProfile("profile is not monotone on z > 0".into()));
    }
    let f_end = 1e-3 * f0;
    if (profile.f.last().copied().unwrap_or(0.0) - f_end) * toward < 0.0 {
        return Err(Error::MalformedProfile("profile does not reach its tail".into()));
    }
    let m = SCORER_SAMPLES;
    let step = (f_end - f0) / m as f64;
    let mut h = Vec::with_capacity(m + 1);
    h.push(profile.f_prime[0].powi(2));
    for i in 1..=m {
        let target = f0 + i as f64 * step;
        let z = invert(profile, target)?;
        h.push(profile.local(z).1.powi(2));
    }
    let mut worst: f64 = 0.0;
    for i in 1..m {
        let f = f0 + i as f64 * step;
        let d2 = (h[i + 1] - 2.0 * h[i] + h[i - 1]) / (step * step);
        worst = worst.max((d2 - 2.0 * f * h[i] - 2.0 * c).abs());
    }
    Ok(worst)
}

/// `z > 0` with `f(z) = target` on a monotone branch.
fn invert(profile: &Profile, target: f64) -> Result<f64> {
    let toward = -profile.f[0].signum();
    let key = |v: f64| v * toward;
    let j = profile.f.partition_point(|&v| key(v) < key(target));
    if j == 0 || j >= profile.f.len() {
        return Err(Error::MalformedProfile(format!("value {target} is off the branch")));
    }
    let (z0, z1) = (profile.z_nodes[j - 1], profile.z_nodes[j]);
    let (f0, f1) = (profile.f[j - 1], profile.f[j]);
    let mut z = z0 + (target - f0) / (f1 - f0) * (z1 - z0);
    for _ in 0..50 {
        let (f, fp) = profile.local(z);
        let dz = (f - target) / fp;
        z = (z - dz).clamp(z0, z1);
        if dz.abs() < 1e-15 * (1.0 + z) {
            break;
        }
    }
    Ok(z)
}

/// Result of comparing a late-time pulse with the solitary wave at its speed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveMatch {
    pub c_fit: f64,
    /// Linf difference over the window.
    pub mismatch: f64,
    /// Trajectory value at the tracked extremum.
    pub peak: f64,
    pub position: f64,
    pub profile_peak: f64,
}

/// Relative change in extremum height allowed between the last two snapshots.
const COHERENCE: f64 = 0.2;

/// Track the extremum of sign `(−1)ⁿ` inside `window` over the last two
/// snapshots, fit the speed from its displacement, and compare the last
/// snapshot with the solitary wave at that speed.
pub fn match_emergent_wave(trajectory: &Trajectory, window: (f64, f64)) -> Result<WaveMatch> {
    let eps = trajectory.config.epsilon;
    let n = if eps.fract() == 0.0 && eps >= 3.0 && (eps as i64) % 2 == 1 {
        ((eps as i64 - 1) / 2) as u32
    } else {
        return Err(invalid(format!("emergent waves need odd epsilon ≥ 3, got {eps}")));
    };
    let snaps = &trajectory.snapshots;
    if snaps.len() < 2 {
        return Err(invalid("at least two snapshots are required"));
    }
    let (w0, w1) = window;
    if !(w1 > w0) {
        return Err(invalid(format!("empty window [{w0}, {w1}]")));
    }
    let s1 = &snaps[snaps.len() - 2];
    let s2 = &snaps[snaps.len() - 1];
    let sign = sign_n(n);
    let (x1, p1) = track(s1, window, sign)?;
    let (x2, p2) = track(s2, window, sign)?;
    let grid = s2.grid();
    let l = grid.length();
    let shift = (x2 - x1 + 0.5 * l).rem_euclid(l) - 0.5 * l;
    let c_fit = shift / (s2.time() - s1.time());
    if !(c_fit > 0.0) {
        return Err(Error::NoWave(format!("extremum moves left (speed {c_fit:.4})")));
    }
    if (p2 - p1).abs() > COHERENCE * p2.abs() {
        return Err(Error::NoWave(format!("extremum height changed from {p1:.4} to {p2:.4}")));
    }
    let profile = solve_profile(n, c_fit, 1e-10)?;
    let u = s2.require_real("match_emergent_wave")?;
    let mut mismatch: f64 = 0.0;
    for (&x, &v) in grid.nodes().iter().zip(u) {
        if x >= w0 && x <= w1 {
            mismatch = mismatch.max((v - profile.value(x - x2)).abs());
        }
    }
    Ok(WaveMatch {
        c_fit,
        mismatch,
        peak: p2,
        position: x2,
        profile_peak: peak_height(&profile),
    })
}

/// Refined position and value of the largest `sign·u` inside the window.
fn track(field: &crate::fields::Field, (w0, w1): (f64, f64), sign: f64) -> Result<(f64, f64)> {
    let u = field.require_real("match_emergent_wave")?;
    let nodes = field.grid().nodes();
    let inside: Vec<usize> = (0..u.len()).filter(|&j| nodes[j] >= w0 && nodes[j] <= w1).collect();
    if inside.len() < 3 {
        return Err(invalid("window holds fewer than 3 nodes"));
    }
    let &best = inside
        .iter()
        .max_by(|&&a, &&b| (sign * u[a]).total_cmp(&(sign * u[b])))
        .expect("window is non-empty");
    if sign * u[best] <= 0.0 {
        return Err(Error::NoWave("no extremum of the solitary-wave sign in the window".into()));
    }
    if best == inside[0] || best == *inside.last().expect("non-empty") {
        return Err(Error::NoWave("extremum sits on the window edge".into()));
    }
    if sign * u[best] < 0.1 * field.max_abs() {
        return Err(Error::NoWave("extremum is small next to the field maximum".into()));
    }
    let interp = Interpolant::new(field)?;
    let dx = field.grid().spacing();
    let x = interp.refine_extremum(nodes[best], 2.0 * dx)?;
    Ok((x, interp.eval(x, 0)))
}
