//! Airy functions Ai and Bi, the Scorer function Hi, and the primitives
//! `∫₀ˣ Ai` and `∫₀ˣ Bi`.
//!
//! Ai and Bi use their Maclaurin series for moderate arguments and the
//! classical asymptotic expansions beyond; the switching points are set so
//! both branches agree to better than 1e-11 where they meet. Hi uses its
//! power series for `x ≥ -4` and the Laplace integral
//! `Hi(x) = π⁻¹∫₀^∞ exp(-t³/3 + xt) dt` below that.

use std::f64::consts::{FRAC_1_PI, SQRT_2};
#[cfg(test)]
use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::quad::gl20;

/// Ai(0) = 3^{-2/3} / Γ(2/3)
const AI0: f64 = 0.355_028_053_887_817_24;
/// -Ai'(0) = 3^{-1/3} / Γ(1/3)
const AIP0: f64 = 0.258_819_403_792_806_8;
#[cfg(test)]
const SQRT_3: f64 = 1.732_050_807_568_877_2;
const INV_SQRT_PI: f64 = 0.564_189_583_547_756_3;

/// Accuracy-guaranteed range of [`ai`].
pub const AI_MAX_ABS_ARG: f64 = 30.0;
/// Upper argument limit of [`bi`] and [`hi`].
pub const BI_MAX_ARG: f64 = 12.0;
/// Range of the primitives.
pub const PRIMITIVE_MAX_ABS_ARG: f64 = 12.0;

/// Above this the Ai series loses absolute accuracy to cancellation.
const AI_SERIES_POS: f64 = 5.5;
/// Below `-NEG_SWITCH` the oscillatory asymptotic forms take over.
const NEG_SWITCH: f64 = 7.0;
const HI_SERIES_MIN: f64 = -4.0;
const SERIES_TERMS: usize = 200;

/// A point value with the evaluator's own error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AiryValue {
    pub argument: f64,
    pub value: f64,
    pub abs_error_estimate: f64,
}

/// Which function to evaluate through [`evaluate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AiryKind {
    Ai,
    Bi,
    Hi,
}

/// Evaluate one of the point functions together with an error estimate.
pub fn evaluate(kind: AiryKind, x: f64) -> Result<AiryValue> {
    let (value, abs_error_estimate) = match kind {
        AiryKind::Ai => {
            check(x, "ai", -AI_MAX_ABS_ARG, AI_MAX_ABS_ARG)?;
            ai_with_error(x)
        }
        AiryKind::Bi => {
            check(x, "bi", f64::NEG_INFINITY, BI_MAX_ARG)?;
            bi_with_error(x)
        }
        AiryKind::Hi => {
            check(x, "hi", f64::NEG_INFINITY, BI_MAX_ARG)?;
            hi_with_error(x)
        }
    };
    Ok(AiryValue {
        argument: x,
        value,
        abs_error_estimate,
    })
}

/// Airy function of the first kind, for `|x| ≤ 30`.
pub fn ai(x: f64) -> Result<f64> {
    check(x, "ai", -AI_MAX_ABS_ARG, AI_MAX_ABS_ARG)?;
    Ok(ai_unchecked(x))
}

/// Airy function of the second kind, for `x ≤ 12`.
pub fn bi(x: f64) -> Result<f64> {
    check(x, "bi", f64::NEG_INFINITY, BI_MAX_ARG)?;
    Ok(bi_with_error(x).0)
}

/// Scorer function Hi, the solution of `y'' - x y = 1/π` that decays as
/// `x → -∞`. Defined for `x ≤ 12`.
pub fn hi(x: f64) -> Result<f64> {
    check(x, "hi", f64::NEG_INFINITY, BI_MAX_ARG)?;
    Ok(hi_with_error(x).0)
}

/// `∫₀ˣ Ai(s) ds` for `|x| ≤ 12`.
pub fn ai_primitive(x: f64) -> Result<f64> {
    check(x, "ai_primitive", -PRIMITIVE_MAX_ABS_ARG, PRIMITIVE_MAX_ABS_ARG)?;
    Ok(primitive(ai_table(), ai_unchecked, x))
}

/// `∫₀ˣ Bi(s) ds` for `|x| ≤ 12`.
pub fn bi_primitive(x: f64) -> Result<f64> {
    check(x, "bi_primitive", -PRIMITIVE_MAX_ABS_ARG, PRIMITIVE_MAX_ABS_ARG)?;
    Ok(primitive(bi_table(), bi_unchecked, x))
}

fn check(x: f64, function: &'static str, min: f64, max: f64) -> Result<()> {
    if x.is_nan() || x < min || x > max {
        return Err(Error::Range {
            function,
            x,
            min,
            max,
        });
    }
    Ok(())
}

/// Ai without a range check. Accurate for every `x ≤ 30` and usable (with
/// the asymptotic branch) far below `-30`.
pub(crate) fn ai_unchecked(x: f64) -> f64 {
    ai_with_error(x).0
}

pub(crate) fn bi_unchecked(x: f64) -> f64 {
    bi_with_error(x).0
}

fn ai_with_error(x: f64) -> (f64, f64) {
    if x > AI_SERIES_POS {
        let (s, err) = asymptotic_sum(x, false, true);
        let zeta = 2.0 / 3.0 * x.powf(1.5);
        let pre = 0.5 * INV_SQRT_PI * x.powf(-0.25) * (-zeta).exp();
        (pre * s, pre * err + f64::EPSILON * (pre * s).abs())
    } else if x < -NEG_SWITCH {
        let o = Oscillatory::new(-x, false);
        (o.ai(), o.err)
    } else {
        Maclaurin::new(x).ai()
    }
}

fn bi_with_error(x: f64) -> (f64, f64) {
    if x < -NEG_SWITCH {
        let o = Oscillatory::new(-x, false);
        (o.bi(), o.err)
    } else {
        Maclaurin::new(x).bi()
    }
}

/// Derivatives (Ai'(x), Bi'(x)).
#[cfg(test)]
pub(crate) fn derivatives(x: f64) -> (f64, f64) {
    if x < -NEG_SWITCH {
        let o = Oscillatory::new(-x, true);
        (o.ai_prime(), o.bi_prime())
    } else {
        let s = Maclaurin::new(x);
        let aip = if x > AI_SERIES_POS {
            let (s, _) = asymptotic_sum(x, true, true);
            let zeta = 2.0 / 3.0 * x.powf(1.5);
            -0.5 * INV_SQRT_PI * x.powf(0.25) * (-zeta).exp() * s
        } else {
            AI0 * s.fp - AIP0 * s.gp
        };
        (aip, SQRT_3 * (AI0 * s.fp + AIP0 * s.gp))
    }
}

/// The even/odd auxiliary series `f = Σ 3ᵏ(1/3)ₖ x³ᵏ/(3k)!` and
/// `g = Σ 3ᵏ(2/3)ₖ x³ᵏ⁺¹/(3k+1)!`, summed in double-double arithmetic so
/// that cancellation for |x| up to the switch points costs no accuracy.
struct Maclaurin {
    f: Dd,
    g: Dd,
    #[cfg_attr(not(test), allow(dead_code))]
    fp: f64,
    #[cfg_attr(not(test), allow(dead_code))]
    gp: f64,
    abs_sum: f64,
}

impl Maclaurin {
    fn new(x: f64) -> Self {
        let x3 = Dd::from_prod(x, x).mul_f64(x);
        let (mut f, mut ft) = (Dd::from(1.0), Dd::from(1.0));
        let (mut g, mut gt) = (Dd::from(x), Dd::from(x));
        let mut abs_sum = 1.0 + x.abs();
        let x3f = x3.hi;
        let (mut fp, mut fpt) = (0.0, 0.5 * x * x);
        let (mut gp, mut gpt) = (1.0, 1.0);
        fp += fpt;
        for k in 1..SERIES_TERMS {
            let k3 = 3.0 * k as f64;
            ft = ft.mul(x3).div_f64((k3 - 1.0) * k3);
            gt = gt.mul(x3).div_f64(k3 * (k3 + 1.0));
            f = f.add(ft);
            g = g.add(gt);
            abs_sum += ft.hi.abs() + gt.hi.abs();
            if cfg!(test) {
                gpt *= x3f / (k3 * (k3 - 2.0));
                gp += gpt;
                if k >= 2 {
                    fpt *= x3f / ((k3 - 1.0) * (k3 - 3.0));
                    fp += fpt;
                }
            }
            if ft.hi.abs() + gt.hi.abs() <= 1e-33 * abs_sum {
                break;
            }
        }
        Self {
            f,
            g,
            fp,
            gp,
            abs_sum,
        }
    }

    fn ai(&self) -> (f64, f64) {
        let v = AI0_DD.mul(self.f).sub(AIP0_DD.mul(self.g)).hi;
        (v, self.err(v))
    }

    fn bi(&self) -> (f64, f64) {
        let v = BI0_DD.mul(self.f).add(BIP0_DD.mul(self.g)).hi;
        (v, self.err(v))
    }

    fn err(&self, v: f64) -> f64 {
        f64::EPSILON * v.abs() + 16.0 * f64::EPSILON * f64::EPSILON * self.abs_sum
    }
}

const AI0_DD: Dd = Dd { hi: AI0, lo: 2.052_336_324_362_12e-17 };
const AIP0_DD: Dd = Dd { hi: AIP0, lo: -2.522_243_111_610_832e-17 };
const BI0_DD: Dd = Dd { hi: 0.614_926_627_446_000_7, lo: 5.089_920_779_489_141_6e-17 };
const BIP0_DD: Dd = Dd { hi: 0.448_288_357_353_826_4, lo: -2.536_323_777_441_730_5e-17 };

/// Unevaluated sum `hi + lo` with `|lo| ≤ ulp(hi)/2`.
#[derive(Debug, Clone, Copy)]
struct Dd {
    hi: f64,
    lo: f64,
}

impl From<f64> for Dd {
    fn from(hi: f64) -> Self {
        Self { hi, lo: 0.0 }
    }
}

impl Dd {
    fn two_sum(a: f64, b: f64) -> Self {
        let s = a + b;
        let bb = s - a;
        let e = (a - (s - bb)) + (b - bb);
        Self { hi: s, lo: e }
    }

    fn quick(a: f64, b: f64) -> Self {
        let s = a + b;
        Self { hi: s, lo: b - (s - a) }
    }

    fn from_prod(a: f64, b: f64) -> Self {
        let p = a * b;
        Self { hi: p, lo: a.mul_add(b, -p) }
    }

    fn add(self, o: Self) -> Self {
        let s = Self::two_sum(self.hi, o.hi);
        let t = Self::two_sum(self.lo, o.lo);
        let s = Self::quick(s.hi, s.lo + t.hi);
        Self::quick(s.hi, s.lo + t.lo)
    }

    fn sub(self, o: Self) -> Self {
        self.add(Self { hi: -o.hi, lo: -o.lo })
    }

    fn mul(self, o: Self) -> Self {
        let p = Self::from_prod(self.hi, o.hi);
        Self::quick(p.hi, p.lo + (self.hi * o.lo + self.lo * o.hi))
    }

    fn mul_f64(self, b: f64) -> Self {
        let p = Self::from_prod(self.hi, b);
        Self::quick(p.hi, p.lo + self.lo * b)
    }

    fn div_f64(self, b: f64) -> Self {
        let q1 = self.hi / b;
        let r = self.sub(Self::from_prod(q1, b));
        let q2 = r.hi / b;
        let r = r.sub(Self::from_prod(q2, b));
        let q3 = r.hi / b;
        Self::quick(q1, q2).add(Self::from(q3))
    }
}

/// Coefficients `u_k` of the Airy asymptotic expansions.
fn u_coeffs() -> &'static [f64] {
    static U: OnceLock<Vec<f64>> = OnceLock::new();
    U.get_or_init(|| {
        let mut u = vec![1.0];
        for k in 1..60usize {
            let kf = k as f64;
            let prev = u[k - 1];
            u.push(
                prev * (6.0 * kf - 5.0) * (6.0 * kf - 3.0) * (6.0 * kf - 1.0)
                    / ((2.0 * kf - 1.0) * 216.0 * kf),
            );
        }
        u
    })
}

fn coeff(k: usize, derivative: bool) -> f64 {
    let u = u_coeffs()[k];
    if derivative {
        let kf = k as f64;
        -(6.0 * kf + 1.0) / (6.0 * kf - 1.0) * u
    } else {
        u
    }
}

/// `Σ (±1)ᵏ c_k ζ^{-k}` truncated at the smallest term. Returns the sum and
/// the magnitude of the first omitted term.
fn asymptotic_sum(x: f64, derivative: bool, alternating: bool) -> (f64, f64) {
    let zeta = 2.0 / 3.0 * x.abs().powf(1.5);
    let mut sum = 0.0;
    let mut last = f64::INFINITY;
    let mut zk = 1.0;
    for k in 0..u_coeffs().len() {
        let sign = if alternating && k % 2 == 1 { -1.0 } else { 1.0 };
        let term = sign * coeff(k, derivative) * zk;
        if term.abs() > last {
            return (sum, last);
        }
        sum += term;
        last = term.abs();
        if last < 1e-17 * sum.abs() {
            return (sum, last);
        }
        zk /= zeta;
    }
    (sum, last)
}

/// Oscillatory asymptotic forms at `-z`, `z > 0`.
struct Oscillatory {
    z: f64,
    cos: f64,
    sin: f64,
    even: f64,
    odd: f64,
    err: f64,
}

impl Oscillatory {
    fn new(z: f64, derivative: bool) -> Self {
        let zeta = 2.0 / 3.0 * z.powf(1.5);
        let mut even = 0.0;
        let mut odd = 0.0;
        let mut last = f64::INFINITY;
        let mut zk = 1.0;
        for k in 0..u_coeffs().len() {
            // (-1)^{floor(k/2)} on both the even and odd subsequences
            let sign = if (k / 2) % 2 == 1 { -1.0 } else { 1.0 };
            let term = sign * coeff(k, derivative) * zk;
            if term.abs() > last {
                break;
            }
            if k % 2 == 0 {
                even += term;
            } else {
                odd += term;
            }
            last = term.abs();
            if last < 1e-18 {
                break;
            }
            zk /= zeta;
        }
        // cos/sin of ζ - π/4 via angle subtraction keeps the reduction exact
        let (s, c) = zeta.sin_cos();
        let cos = (c + s) / SQRT_2;
        let sin = (s - c) / SQRT_2;
        let amp = INV_SQRT_PI * z.powf(if derivative { 0.25 } else { -0.25 });
        let err = amp * (last + 8.0 * f64::EPSILON * zeta.max(1.0));
        Self {
            z,
            cos,
            sin,
            even,
            odd,
            err,
        }
    }

    fn amp(&self, derivative: bool) -> f64 {
        INV_SQRT_PI * self.z.powf(if derivative { 0.25 } else { -0.25 })
    }

    fn ai(&self) -> f64 {
        self.amp(false) * (self.cos * self.even + self.sin * self.odd)
    }

    fn bi(&self) -> f64 {
        self.amp(false) * (-self.sin * self.even + self.cos * self.odd)
    }

    #[cfg(test)]
    fn ai_prime(&self) -> f64 {
        self.amp(true) * (self.sin * self.even - self.cos * self.odd)
    }

    #[cfg(test)]
    fn bi_prime(&self) -> f64 {
        self.amp(true) * (self.cos * self.even + self.sin * self.odd)
    }
}

fn hi_with_error(x: f64) -> (f64, f64) {
    if x >= HI_SERIES_MIN {
        hi_series(x)
    } else {
        (hi_laplace(x), 1e-15 * FRAC_1_PI / x.abs())
    }
}

/// `Hi(x) = π⁻¹ Σ 3^{(k-2)/3} Γ((k+1)/3) xᵏ/k!`, summed as three
/// interleaved chains with ratio `x³/((k+2)(k+3))`.
fn hi_series(x: f64) -> (f64, f64) {
    // 3^{-2/3}Γ(1/3), 3^{-1/3}Γ(2/3)
    const T0: f64 = 1.287_899_316_854_069_1;
    const T1: f64 = 0.938_892_940_101_744_6;
    let x3 = x * x * x;
    let mut terms = [T0, T1 * x, 0.5 * x * x];
    let mut sum: f64 = terms.iter().sum();
    let mut abs: f64 = terms.iter().map(|t| t.abs()).sum();
    let mut k = 0usize;
    while k < 3 * SERIES_TERMS {
        let j = k % 3;
        let kf = k as f64;
        terms[j] *= x3 / ((kf + 2.0) * (kf + 3.0));
        sum += terms[j];
        abs += terms[j].abs();
        k += 1;
        if j == 2 && terms.iter().all(|t| t.abs() <= 1e-17 * abs) {
            break;
        }
    }
    (FRAC_1_PI * sum, 4.0 * f64::EPSILON * FRAC_1_PI * abs)
}

/// Laplace integral for negative argument, integrand `exp(-t³/3 - |x|t)`.
fn hi_laplace(x: f64) -> f64 {
    let a = -x;
    // exp(-a t) < 1e-19 beyond t_end
    let t_end = 44.0 / a;
    let panels = 12;
    let h = t_end / panels as f64;
    let rule = gl20();
    let integrand = |t: f64| (-t * t * t / 3.0 - a * t).exp();
    let mut total = 0.0;
    for p in 0..panels {
        let lo = h * p as f64;
        total += rule.integrate(integrand, lo, lo + h);
    }
    FRAC_1_PI * total
}

const PANEL: f64 = 0.5;

/// Cumulative panel integrals at `±j·PANEL`, `j = 0..=24`.
struct PanelTable {
    positive: Vec<f64>,
    negative: Vec<f64>,
}

fn build_table(f: fn(f64) -> f64) -> PanelTable {
    let n = (PRIMITIVE_MAX_ABS_ARG / PANEL).round() as usize;
    let rule = gl20();
    let mut positive = vec![0.0; n + 1];
    let mut negative = vec![0.0; n + 1];
    for j in 0..n {
        let a = j as f64 * PANEL;
        positive[j + 1] = positive[j] + rule.integrate(f, a, a + PANEL);
        negative[j + 1] = negative[j] + rule.integrate(f, -a - PANEL, -a);
    }
    PanelTable { positive, negative }
}

fn ai_table() -> &'static PanelTable {
    static T: OnceLock<PanelTable> = OnceLock::new();
    T.get_or_init(|| build_table(ai_unchecked))
}

fn bi_table() -> &'static PanelTable {
    static T: OnceLock<PanelTable> = OnceLock::new();
    T.get_or_init(|| build_table(bi_unchecked))
}

fn primitive(table: &PanelTable, f: fn(f64) -> f64, x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let ax = x.abs();
    let j = ((ax / PANEL).floor() as usize).min(table.positive.len() - 1);
    let edge = j as f64 * PANEL;
    let rule = gl20();
    if x > 0.0 {
        table.positive[j] + rule.integrate(f, edge, ax)
    } else {
        // ∫₀^{-ax} f = -∫_{-ax}^0 f
        -(table.negative[j] + rule.integrate(f, -ax, -edge))
    }
}

/// Γ(1/3)
pub(crate) const GAMMA_THIRD: f64 = 2.678_938_534_707_747_6;
/// Γ(2/3)
pub(crate) const GAMMA_TWO_THIRDS: f64 = 1.354_117_939_426_400_4;

#[cfg(test)]
mod tests {
    use super::*;

    // Reference values from mpmath at 30 digits (airyai, airybi, scorerhi).
    const REF: &[(f64, f64, f64, f64)] = &[
        (0.0, 0.355028053887817239, 0.614926627446000735, 0.409951084964000490),
        (1.0, 0.135292416312881416, 1.20742359495287126, 0.972205155142433322),
        (2.5, 0.0157259233804704900, 6.48166073846057861, 6.34338318004200449),
        (-2.5, -0.112325067692966089, -0.432422471840705293, 0.117842871897912183),
        (5.0, 1.08344428136074417e-4, 657.792044171171182, 657.727124387077329),
        (-5.0, 0.350761009024114320, -0.138369134901600577, 0.0627632738503065351),
        (10.0, 1.10475325528986859e-10, 455641153.548225141, 455641153.516329136),
        (-10.0, 0.0402412384864431907, -0.314679829643838633, 0.0317685352825022727),
        (-20.0, -0.176406127077984690, -0.200139309322651349, 0.0159115253141022345),
        (12.0, 1.39318468887536084e-13, 329807225829.074176, 329807225829.047619),
    ];

    #[test]
    fn matches_reference_values() {
        for &(x, a, b, h) in REF {
            let av = ai(x).unwrap();
            assert!((av - a).abs() < 1e-10, "ai({x}) = {av}, want {a}");
            let bv = bi(x).unwrap();
            assert!(((bv - b) / b).abs() < 1e-10, "bi({x}) = {bv}, want {b}");
            let hv = hi(x).unwrap();
            assert!(((hv - h) / h).abs() < 1e-8, "hi({x}) = {hv}, want {h}");
        }
    }

    #[test]
    fn values_at_origin() {
        assert!((ai(0.0).unwrap() - 0.3550280539).abs() < 1e-10);
        assert!((bi(0.0).unwrap() - 0.6149266274).abs() < 1e-10);
        assert!((bi(0.0).unwrap() - SQRT_3 * ai(0.0).unwrap()).abs() < 1e-12);
        assert!((hi(0.0).unwrap() - 2.0 / 3.0 * bi(0.0).unwrap()).abs() < 1e-12);
        assert!((GAMMA_THIRD * GAMMA_TWO_THIRDS - 2.0 * PI / SQRT_3).abs() < 1e-15);
    }

    #[test]
    fn leading_asymptotics() {
        let x: f64 = 10.0;
        let lead = 0.5 / PI.sqrt() * x.powf(-0.25) * (-(2.0 / 3.0) * x.powf(1.5)).exp();
        assert!((ai(x).unwrap() / lead - 1.0).abs() < 0.02);

        let z: f64 = 5.0;
        let lead = z.powf(-0.25) / PI.sqrt() * ((2.0 / 3.0) * z.powf(1.5) + PI / 4.0).sin();
        let v = ai(-z).unwrap();
        assert_eq!(v.signum(), lead.signum());
        assert!((v / lead - 1.0).abs() < 0.05);
    }

    #[test]
    fn range_errors() {
        assert!(matches!(ai(30.5), Err(Error::Range { .. })));
        assert!(matches!(ai(-31.0), Err(Error::Range { .. })));
        assert!(ai(-30.0).is_ok());
        assert!(matches!(bi(12.5), Err(Error::Range { .. })));
        assert!(matches!(hi(13.0), Err(Error::Range { .. })));
        assert!(matches!(ai_primitive(12.1), Err(Error::Range { .. })));
        assert!(matches!(bi_primitive(-12.1), Err(Error::Range { .. })));
        assert!(matches!(ai(f64::NAN), Err(Error::Range { .. })));
    }

    #[test]
    fn branches_agree_at_switch_points() {
        for &x in &[AI_SERIES_POS, -NEG_SWITCH] {
            for dx in [-0.05, 0.0, 0.05] {
                let x = x + dx;
                let s = Maclaurin::new(x);
                let series_ai = s.ai().0;
                let series_bi = s.bi().0;
                let (asym_ai, asym_bi) = if x > 0.0 {
                    let (sum, _) = asymptotic_sum(x, false, true);
                    let zeta = 2.0 / 3.0 * x.powf(1.5);
                    (0.5 * INV_SQRT_PI * x.powf(-0.25) * (-zeta).exp() * sum, series_bi)
                } else {
                    let o = Oscillatory::new(-x, false);
                    (o.ai(), o.bi())
                };
                assert!((series_ai - asym_ai).abs() < 1e-11, "ai at {x}");
                assert!((series_bi - asym_bi).abs() < 1e-11, "bi at {x}");
            }
        }
    }

    #[test]
    fn wronskian() {
        for i in -5..=5 {
            let x = i as f64;
            let a = ai(x).unwrap();
            let b = bi(x).unwrap();
            let (ap, bp) = derivatives(x);
            assert!((a * bp - ap * b - FRAC_1_PI).abs() < 1e-9, "x = {x}");
        }
        // the wide-argument branches as well
        for &x in &[-8.0, -15.0, -25.0] {
            let (ap, bp) = derivatives(x);
            let w = ai_unchecked(x) * bp - ap * bi_unchecked(x);
            assert!((w - FRAC_1_PI).abs() < 1e-9, "x = {x}");
        }
    }

    #[test]
    fn derivatives_match_central_differences() {
        let h = 1e-5;
        for &x in &[-9.0, -3.0, 0.0, 2.0, 6.0] {
            let (ap, bp) = derivatives(x);
            let fd_a = (ai_unchecked(x + h) - ai_unchecked(x - h)) / (2.0 * h);
            let fd_b = (bi_unchecked(x + h) - bi_unchecked(x - h)) / (2.0 * h);
            assert!((ap - fd_a).abs() < 1e-7, "ai' at {x}");
            assert!((bp - fd_b).abs() < 1e-7 * bp.abs().max(1.0), "bi' at {x}");
        }
    }

    #[test]
    fn airy_equation_residuals() {
        let h = 1e-4;
        for i in -10..=10 {
            let x = i as f64 * 0.5;
            let a2 = (ai_unchecked(x + h) - 2.0 * ai_unchecked(x) + ai_unchecked(x - h)) / (h * h);
            assert!((a2 - x * ai_unchecked(x)).abs() < 1e-7, "ai at {x}");
            // Bi is checked relative to its size: at Bi(5) ≈ 658 one ulp alone
            // gives a central-difference noise of 1e-5.
            let b = bi_unchecked(x);
            let b2 = (bi_unchecked(x + h) - 2.0 * b + bi_unchecked(x - h)) / (h * h);
            assert!((b2 - x * b).abs() < 1e-7 * b.abs().max(1.0), "bi at {x}");
        }
    }

    #[test]
    fn scorer_equation_residual() {
        let h = 1e-4;
        for &x in &[-6.0, -4.5, -3.0, 0.0, 1.0, 3.0] {
            let f = |t: f64| hi(t).unwrap();
            let d2 = (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
            let r = d2 - x * f(x) - FRAC_1_PI;
            assert!(r.abs() < 1e-6, "residual {r} at {x}");
        }
    }

    #[test]
    fn scorer_decays_for_negative_argument() {
        for &x in &[-5.0, -10.0, -40.0] {
            let v = hi(x).unwrap();
            let lead = -FRAC_1_PI / x;
            assert!(v > 0.0 && (v - lead).abs() < 0.2 * lead, "hi({x}) = {v}");
        }
        assert!(hi(-10.0).unwrap().abs() < 0.05);
        // Hi - Bi (= -Gi) stays bounded
        for &x in &[-5.0, -10.0] {
            assert!((hi(x).unwrap() - bi(x).unwrap()).abs() < 1.0);
        }
    }

    #[test]
    fn series_and_laplace_agree_near_switch() {
        for &x in &[-4.0, -4.5, -5.0] {
            let (s, _) = hi_series(x);
            let l = hi_laplace(x);
            assert!(((s - l) / l).abs() < 1e-11, "x = {x}: {s} vs {l}");
        }
    }

    #[test]
    fn primitives() {
        assert_eq!(ai_primitive(0.0).unwrap(), 0.0);
        assert_eq!(bi_primitive(0.0).unwrap(), 0.0);
        // mpmath quad
        assert!((ai_primitive(12.0).unwrap() - 0.333333333333293802).abs() < 1e-12);
        assert!((ai_primitive(12.0).unwrap() - 1.0 / 3.0).abs() < 1e-9);
        assert!((bi_primitive(1.0).unwrap() - 0.872769116738008122).abs() < 1e-12);
    }

    #[test]
    fn error_estimates_are_small_in_range() {
        for i in -60..=60 {
            let x = i as f64 * 0.5;
            let v = evaluate(AiryKind::Ai, x).unwrap();
            assert!(v.abs_error_estimate >= 0.0 && v.abs_error_estimate < 1e-10, "{v:?}");
        }
        for i in -20..=24 {
            let x = i as f64 * 0.5;
            let b = evaluate(AiryKind::Bi, x).unwrap();
            assert!(b.abs_error_estimate <= 1e-10 * b.value.abs().max(1e-3), "{b:?}");
        }
    }
}
