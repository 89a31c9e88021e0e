//! Exponential integral and hypoexponential (sum of independent exponentials)
//! distribution primitives.

use crate::error::{Error, Result};
use crate::num::{lit, Real};

/// Euler-Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

// Positive root of Ei, split so that `x - ROOT_HI - ROOT_LO` keeps full precision.
const EI_ROOT_HI: f64 = 0.372_507_410_781_366_6;
const EI_ROOT_LO: f64 = 1.314_018_341_438_602_8e-17;

/// Exponential integral `Ei(x) = -PV ∫_{-x}^∞ e^{-t}/t dt`.
///
/// Fails with a domain error at `x = 0` and for non-finite input.
pub fn expint_ei<T: Real>(x: T) -> Result<T> {
    if x == T::zero() || x.is_nan() {
        return Err(Error::Domain { function: "expint_ei", detail: format!("undefined at x = {x}") });
    }
    if x < T::zero() {
        return Ok(-e1_positive(-x));
    }
    if x.is_infinite() {
        return Ok(x);
    }
    let d = (x - lit(EI_ROOT_HI)) - lit(EI_ROOT_LO);
    if d.abs() <= lit(0.1) {
        Ok(ei_near_root(x, d))
    } else if x <= lit(40.0) {
        Ok(ei_series(x))
    } else {
        Ok(ei_asymptotic(x))
    }
}

/// Exponential integral `E1(x) = ∫_x^∞ e^{-t}/t dt = -Ei(-x)` for `x > 0`.
pub fn expint_e1<T: Real>(x: T) -> Result<T> {
    if !(x > T::zero()) {
        return Err(Error::Domain { function: "expint_e1", detail: format!("requires x > 0, got {x}") });
    }
    Ok(e1_positive(x))
}

/// `e^x E1(x)` for `x > 0`, computed without forming `e^x` for large `x`.
///
/// This is `-e^x Ei(-x)`, the combination every closed-form ergodic rate uses.
pub fn scaled_e1<T: Real>(x: T) -> Result<T> {
    if !(x > T::zero()) {
        return Err(Error::Domain { function: "scaled_e1", detail: format!("requires x > 0, got {x}") });
    }
    if x.is_infinite() {
        return Ok(T::zero());
    }
    if x <= T::one() {
        Ok(x.exp() * e1_series(x))
    } else {
        Ok(e1_continued_fraction(x))
    }
}

fn e1_positive<T: Real>(x: T) -> T {
    if x.is_infinite() {
        T::zero()
    } else if x <= T::one() {
        e1_series(x)
    } else {
        (-x).exp() * e1_continued_fraction(x)
    }
}

// -γ - ln x - Σ (-x)^k / (k k!), alternating but with |x| ≤ 1 so no cancellation.
fn e1_series<T: Real>(x: T) -> T {
    let eps = T::epsilon();
    let mut term = T::one();
    let mut sum = T::zero();
    for k in 1..200 {
        let kf: T = lit(k as f64);
        term = term * (-x) / kf;
        let contrib = term / kf;
        sum = sum + contrib;
        if contrib.abs() <= eps * sum.abs() {
            break;
        }
    }
    -lit::<T>(EULER_GAMMA) - x.ln() - sum
}

// Modified Lentz evaluation of e^x E1(x) = 1/(x+1- 1²/(x+3- 2²/(x+5- ...))).
fn e1_continued_fraction<T: Real>(x: T) -> T {
    let tiny = T::min_positive_value() / T::epsilon();
    let two: T = lit(2.0);
    let mut b = x + T::one();
    let mut c = T::one() / tiny;
    let mut d = T::one() / b;
    let mut h = d;
    for i in 1..10_000 {
        let fi: T = lit(i as f64);
        let an = -fi * fi;
        b = b + two;
        d = T::one() / (an * d + b);
        c = b + an / c;
        let delta = c * d;
        h = h * delta;
        if (delta - T::one()).abs() <= T::epsilon() {
            break;
        }
    }
    h
}

fn ei_series<T: Real>(x: T) -> T {
    let eps = T::epsilon();
    let mut term = T::one();
    let mut sum = T::zero();
    for k in 1..500 {
        let kf: T = lit(k as f64);
        term = term * x / kf;
        let contrib = term / kf;
        sum = sum + contrib;
        if contrib <= eps * sum {
            break;
        }
    }
    lit::<T>(EULER_GAMMA) + x.ln() + sum
}

// Ei(x) - Ei(x0) with Ei(x0) = 0, written so the leading cancellation happens
// in `d = x - x0` rather than in γ + ln x + Σ.
fn ei_near_root<T: Real>(x: T, d: T) -> T {
    let x0: T = lit(EI_ROOT_HI);
    let eps = T::epsilon();
    // inner_k = Σ_{j<k} x^j x0^{k-1-j} = (x^k - x0^k)/(x - x0)
    let mut inner = T::one();
    let mut xp = T::one();
    let mut fact = T::one();
    let mut sum = T::zero();
    for k in 1..200 {
        let kf: T = lit(k as f64);
        fact = fact * kf;
        if k > 1 {
            xp = xp * x;
            inner = inner * x0 + xp;
        }
        let contrib = inner / (kf * fact);
        sum = sum + contrib;
        if contrib <= eps * sum {
            break;
        }
    }
    (d / x0).ln_1p() + d * sum
}

fn ei_asymptotic<T: Real>(x: T) -> T {
    let eps = T::epsilon();
    let mut term = T::one();
    let mut sum = T::one();
    for k in 1..200 {
        let next = term * lit(k as f64) / x;
        if next >= term {
            break;
        }
        term = next;
        sum = sum + term;
        if term <= eps * sum {
            break;
        }
    }
    x.exp() / x * sum
}

/// Relative gap below which two rates count as coincident, and the relative
/// nudge applied to the smaller one.
pub(crate) fn degeneracy_policy<T: Real>() -> (T, T) {
    if T::epsilon() < lit(1e-15) {
        (lit(1e-9), lit(1e-7))
    } else {
        let nudge = T::epsilon().cbrt();
        (nudge, nudge)
    }
}

/// Separates coincident rates in place by shrinking the smaller of each
/// degenerate pair. Returns whether anything was changed.
pub fn separate_rates<T: Real>(rates: &mut [T]) -> bool {
    let (threshold, nudge) = degeneracy_policy::<T>();
    let mut changed = false;
    for _ in 0..(4 * rates.len() * rates.len()) {
        let mut clash = None;
        'scan: for i in 0..rates.len() {
            for j in (i + 1)..rates.len() {
                let scale = rates[i].abs().max(rates[j].abs());
                if (rates[i] - rates[j]).abs() < threshold * scale {
                    clash = Some(if rates[i] <= rates[j] { i } else { j });
                    break 'scan;
                }
            }
        }
        match clash {
            Some(i) => {
                let before = rates[i];
                rates[i] = rates[i] * (T::one() - nudge);
                log::debug!("coincident rates: nudged {before} to {} (relative {nudge})", rates[i]);
                changed = true;
            }
            None => break,
        }
    }
    changed
}

/// Rates of a two- or three-stage hypoexponential distribution.
#[derive(Clone, Debug, PartialEq)]
pub struct HypoExpParams<T> {
    rates: Vec<T>,
    perturbed: bool,
}

impl<T: Real> HypoExpParams<T> {
    /// Validates the rates and separates coincident ones.
    pub fn new(rates: &[T]) -> Result<Self> {
        if !(rates.len() == 2 || rates.len() == 3) {
            return Err(Error::input("HypoExpParams::new", format!("need 2 or 3 rates, got {}", rates.len())));
        }
        if let Some(bad) = rates.iter().find(|r| !(r.is_finite() && **r > T::zero())) {
            return Err(Error::input("HypoExpParams::new", format!("rates must be finite and > 0, got {bad}")));
        }
        let mut rates = rates.to_vec();
        let perturbed = separate_rates(&mut rates);
        Ok(HypoExpParams { rates, perturbed })
    }

    pub fn rates(&self) -> &[T] {
        &self.rates
    }

    /// True when coincident input rates were nudged apart.
    pub fn perturbed(&self) -> bool {
        self.perturbed
    }

    pub fn rate_product(&self) -> T {
        self.rates.iter().fold(T::one(), |acc, &r| acc * r)
    }

    /// Partial-fraction weights. Three rates: `Φ1 = 1/((λ2-λ1)(λ3-λ1))`,
    /// `Φ2 = 1/((λ3-λ2)(λ2-λ1))`, `Φ3 = 1/((λ3-λ1)(λ3-λ2))`, entering with
    /// signs `+, -, +`. Two rates: the single weight `1/(λ2-λ1)`.
    pub fn phi(&self) -> Vec<T> {
        let l = &self.rates;
        if l.len() == 2 {
            vec![T::one() / (l[1] - l[0])]
        } else {
            vec![
                T::one() / ((l[1] - l[0]) * (l[2] - l[0])),
                T::one() / ((l[2] - l[1]) * (l[1] - l[0])),
                T::one() / ((l[2] - l[0]) * (l[2] - l[1])),
            ]
        }
    }

    // Evaluates Σ_i w_i g(λ_i) where w_i = Π_{j≠i} λ_j/(λ_j - λ_i).
    fn mix(&self, g: impl Fn(T) -> T) -> T {
        let prod = self.rate_product();
        let phi = self.phi();
        let l = &self.rates;
        if l.len() == 2 {
            prod * phi[0] * (g(l[0]) / l[0] - g(l[1]) / l[1])
        } else {
            prod * (phi[0] * g(l[0]) / l[0] - phi[1] * g(l[1]) / l[1] + phi[2] * g(l[2]) / l[2])
        }
    }

    /// Density of the sum at `z`; zero for `z < 0`.
    pub fn pdf(&self, z: T) -> Result<T> {
        if !z.is_finite() {
            return Err(Error::input("hypoexp_pdf", format!("z must be finite, got {z}")));
        }
        if z < T::zero() {
            return Ok(T::zero());
        }
        Ok(self.mix(|l| l * (-l * z).exp()))
    }

    pub fn cdf(&self, z: T) -> Result<T> {
        if !z.is_finite() && z != T::infinity() {
            return Err(Error::input("hypoexp_cdf", format!("z must not be NaN or -inf, got {z}")));
        }
        if z <= T::zero() {
            return Ok(T::zero());
        }
        Ok(T::one() - self.mix(|l| (-l * z).exp()))
    }

    /// `E[e^{-sZ}]` in partial-fraction form, `Π λ · Σ ±Φ_i/(λ_i + s)`.
    pub fn laplace(&self, s: T) -> T {
        self.mix(|l| l / (l + s))
    }

    pub fn mean(&self) -> T {
        self.rates.iter().fold(T::zero(), |acc, &r| acc + T::one() / r)
    }
}

/// Density of a sum of independent exponentials with the given rates.
pub fn hypoexp_pdf<T: Real>(params: &HypoExpParams<T>, z: T) -> Result<T> {
    params.pdf(z)
}

pub fn hypoexp_cdf<T: Real>(params: &HypoExpParams<T>, z: T) -> Result<T> {
    params.cdf(z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    // Reference values from an arbitrary-precision evaluation.
    const EI_TABLE: &[(f64, f64)] = &[
        (-700.0, -1.406_518_766_234_032_9e-307),
        (-50.0, -3.783_264_029_550_459e-24),
        (-10.0, -4.156_968_929_685_324_3e-6),
        (-5.0, -0.001_148_295_591_275_325_8),
        (-1.0, -0.219_383_934_395_520_27),
        (-0.1, -1.822_923_958_419_390_6),
        (-1e-6, -13.238_295_893_062_491),
        (1e-6, -13.238_293_893_062_491),
        (0.3725, -2.887_418_318_874_596_5e-5),
        (0.5, 0.454_219_904_863_173_58),
        (1.0, 1.895_117_816_355_936_8),
        (6.0, 85.989_762_142_439_2),
        (10.0, 2_492.228_976_241_877_8),
        (40.0, 6_039_718_263_611_241.6),
        (50.0, 1.058_563_689_713_169_1e20),
        (700.0, 1.450_978_736_052_560_9e301),
    ];

    #[test]
    fn ei_reference_values() {
        for &(x, want) in EI_TABLE {
            let got = expint_ei(x).unwrap();
            assert_relative_eq!(got, want, max_relative = 1e-12);
        }
    }

    #[test]
    fn ei_at_zero_is_domain_error() {
        assert!(matches!(expint_ei(0.0f64), Err(Error::Domain { .. })));
        assert!(expint_ei(f64::NAN).is_err());
        assert!(expint_e1(-1.0f64).is_err());
    }

    #[test]
    fn ei_small_argument_log_behaviour() {
        for x in [1e-4f64, 1e-6, 1e-8] {
            let gap = expint_ei(-x).unwrap() - (x.ln() + EULER_GAMMA);
            assert!(gap.abs() <= 2.0 * x, "x={x} gap={gap}");
        }
    }

    #[test]
    fn euler_constant() {
        assert_eq!(EULER_GAMMA, 0.5772156649015329);
    }

    #[test]
    fn ei_near_root_is_tiny_and_accurate() {
        let root = EI_ROOT_HI;
        assert!(expint_ei(root).unwrap().abs() < 1e-16);
        let below = expint_ei(root - 1e-9).unwrap();
        let above = expint_ei(root + 1e-9).unwrap();
        assert!(below < 0.0 && above > 0.0);
        // Ei'(x0) = e^{x0}/x0
        let slope = root.exp() / root;
        assert_relative_eq!(above, 1e-9 * slope, max_relative = 1e-6);
    }

    #[test]
    fn scaled_e1_matches_unscaled() {
        for x in [0.01f64, 0.5, 1.0, 1.5, 10.0, 300.0] {
            let direct = x.exp() * expint_e1(x).unwrap();
            assert_relative_eq!(scaled_e1(x).unwrap(), direct, max_relative = 1e-13);
        }
        // e^x E1(x) ~ 1/x (1 - 1/x + 2/x^2)
        let x = 1e6f64;
        assert_relative_eq!(scaled_e1(x).unwrap(), (1.0 - 1.0 / x + 2.0 / (x * x)) / x, max_relative = 1e-15);
    }

    #[test]
    fn f32_ei_is_close() {
        let got: f32 = expint_ei(-1.0f32).unwrap();
        assert_relative_eq!(got, -0.219_383_93f32, max_relative = 1e-5);
        let got: f32 = expint_ei(6.0f32).unwrap();
        assert_relative_eq!(got, 85.989_76f32, max_relative = 1e-5);
    }

    #[test]
    fn two_rate_pdf_at_zero() {
        let p = HypoExpParams::new(&[1.0f64, 2.0]).unwrap();
        assert_eq!(p.pdf(0.0).unwrap(), 0.0);
        assert!(p.pdf(f64::NAN).is_err());
        assert!(HypoExpParams::new(&[1.0f64]).is_err());
        assert!(HypoExpParams::new(&[1.0f64, 0.0]).is_err());
    }

    #[test]
    fn coincident_rates_are_separated() {
        let p = HypoExpParams::new(&[500.0f64, 500.0, 3.0]).unwrap();
        assert!(p.perturbed());
        let r = p.rates();
        assert!((r[0] - r[1]).abs() > 1e-9 * 500.0);
        assert_relative_eq!(r[0], 500.0 * (1.0 - 1e-7), max_relative = 1e-15);
        let q = HypoExpParams::new(&[2.0f64, 2.0, 2.0]).unwrap();
        let r = q.rates();
        assert!(r[0] != r[1] && r[1] != r[2] && r[0] != r[2]);
        // Erlang(2, 500) with a third stage: Laplace transform is still accurate
        let s = 37.0;
        let exact = (500.0f64 / 537.0).powi(2) * 3.0 / 40.0;
        assert_relative_eq!(p.laplace(s), exact, max_relative = 1e-7);
    }

    #[test]
    fn cdf_matches_known_two_rate_form() {
        let p = HypoExpParams::new(&[1.0f64, 3.0]).unwrap();
        let z: f64 = 0.7;
        let want = 1.0 - (3.0 * (-z).exp() - (-3.0 * z).exp()) / 2.0;
        assert_relative_eq!(p.cdf(z).unwrap(), want, max_relative = 1e-14);
        assert_eq!(p.cdf(-1.0).unwrap(), 0.0);
        assert_relative_eq!(p.mean(), 1.0 + 1.0 / 3.0);
    }

    proptest! {
        #[test]
        fn ei_monotone_on_each_half_line(x in 1e-6f64..60.0, f in 1.0001f64..2.0) {
            prop_assert!(expint_ei(x * f).unwrap() > expint_ei(x).unwrap());
            prop_assert!(expint_ei(-x * f).unwrap() > expint_ei(-x).unwrap());
        }

        #[test]
        fn pdf_nonnegative(l1 in 0.05f64..50.0, l2 in 0.05f64..50.0, l3 in 0.05f64..50.0, z in 0.0f64..20.0) {
            let p = HypoExpParams::new(&[l1, l2, l3]).unwrap();
            prop_assert!(p.pdf(z).unwrap() >= -1e-12);
            let c = p.cdf(z).unwrap();
            prop_assert!((-1e-9..=1.0 + 1e-9).contains(&c));
        }

        #[test]
        fn laplace_matches_product_form(l1 in 0.05f64..50.0, l2 in 0.05f64..50.0, l3 in 0.05f64..50.0, s in 0.0f64..100.0) {
            let p = HypoExpParams::new(&[l1, l2, l3]).unwrap();
            let r = p.rates();
            let product: f64 = r.iter().map(|&l| l / (l + s)).product();
            let gap = (p.laplace(s) - product).abs();
            prop_assert!(gap <= 1e-6 * product.max(1e-300) + 1e-12, "gap {gap} product {product}");
        }
    }
}
