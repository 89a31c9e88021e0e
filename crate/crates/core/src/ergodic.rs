//! Ergodic rates `E[½ log2(1 + min SINR)]` of the strong and weak signals.
//!
//! With antenna interference present the strong-signal rate needs numerical
//! integration; without it (`ϖ1 = ϖ2 = 0`) the strong rate has an exponential
//! integral closed form and the weak rate reduces to a finite 1-D integral.

use std::f64::consts::LN_2;

use crate::analysis::check_curve;
use crate::error::{Error, Result};
use crate::model::{SicMode, Signal, SignalIndex, SignalRole, SystemConfig};
use crate::num::{lit, Real};
use crate::quadrature::{integrate, integrate_semi_infinite, QuadratureSpec};
use crate::specfun::{degeneracy_policy, scaled_e1, separate_rates, HypoExpParams, EULER_GAMMA};

fn half_over_ln2<T: Real>() -> T {
    lit::<T>(0.5 / LN_2)
}

/// Constants shared by the strong- and weak-signal rate expressions.
#[derive(Clone, Debug, PartialEq)]
pub struct RateIntermediates<T> {
    /// `εΩ_I / (b_l Ω_k)`.
    pub lambda1: T,
    /// `a_t Ω_t / (a_l Ω_l)`.
    pub lambda2: T,
    /// `εΩ_I / (a_t Ω_t)`.
    pub lambda3: T,
    /// `(a_l Ω_l + b_l Ω_k) / (ρ a_l b_l Ω_l Ω_k)`.
    pub psi: T,
    pub a: T,
    pub b: T,
    pub c: T,
    /// Rates of `W = ερ|g|² + ρϖ2|h_k|²`: `1/(ερΩ_I)` and `1/(ρϖ2Ω_k)`.
    /// `None` unless both terms are present.
    pub w_rates: Option<HypoExpParams<T>>,
    /// True when a coincident `Λ` was nudged apart.
    pub perturbed: bool,
}

impl<T: Real> RateIntermediates<T> {
    pub fn new(config: &SystemConfig<T>, idx: SignalIndex) -> Result<Self> {
        let eps: T = config.sic.epsilon();
        let (l, k, t) = (idx.l(), idx.k(), idx.t());
        let (al, at, bl) = (config.a_of(l), config.a_of(t), config.b_of(l));
        let (om_l, om_k, om_t) = (config.omega_of(l), config.omega_of(k), config.omega_of(t));
        let mut lambda1 = eps * config.omega_i / (bl * om_k);
        let mut lambda2 = at * om_t / (al * om_l);
        let lambda3 = eps * config.omega_i / (at * om_t);
        let psi = (al * om_l + bl * om_k) / (config.rho * al * bl * om_l * om_k);

        let mut perturbed = off_unity(&mut lambda1) | off_unity(&mut lambda2);
        if lambda1 != T::zero() {
            let mut pair = [lambda1, lambda2];
            if separate_rates(&mut pair) {
                perturbed = true;
                lambda1 = pair[0];
                lambda2 = pair[1];
            }
            perturbed |= off_unity(&mut lambda1) | off_unity(&mut lambda2);
        }

        let a = T::one() / ((T::one() - lambda1) * (T::one() - lambda2));
        let b = if lambda1 == T::zero() {
            T::zero()
        } else {
            lambda1 * lambda1 / ((lambda1 - T::one()) * (lambda1 - lambda2))
        };
        let c = T::one() - a - b;

        let w_rates = if eps > T::zero() && config.varpi2 > T::zero() {
            Some(HypoExpParams::new(&[
                T::one() / (eps * config.rho * config.omega_i),
                T::one() / (config.rho * config.varpi2 * om_k),
            ])?)
        } else {
            None
        };

        Ok(RateIntermediates { lambda1, lambda2, lambda3, psi, a, b, c, w_rates, perturbed })
    }

    /// `A/(1+u) + B/(1+uΛ1) + C/(1+uΛ2)`.
    pub fn partial_fractions(&self, u: T) -> T {
        let mut sum = self.a / (T::one() + u) + self.c / (T::one() + u * self.lambda2);
        if self.lambda1 != T::zero() {
            sum = sum + self.b / (T::one() + u * self.lambda1);
        }
        sum
    }
}

// Moves a partial-fraction pole off 1, where A, B or C would diverge.
fn off_unity<T: Real>(x: &mut T) -> bool {
    let (threshold, nudge) = degeneracy_policy::<T>();
    if *x != T::zero() && (*x - T::one()).abs() < threshold {
        log::debug!("partial fraction pole {x} coincides with 1; nudged by {nudge}");
        *x = *x * (T::one() - nudge);
        return true;
    }
    false
}

fn require_no_leak<T: Real>(config: &SystemConfig<T>, operation: &'static str) -> Result<()> {
    if config.varpi1 != T::zero() || config.varpi2 != T::zero() {
        return Err(Error::precondition(
            operation,
            format!(
                "needs varpi1 = varpi2 = 0 (got {}, {}); use the numerical or Monte Carlo rate instead",
                config.varpi1, config.varpi2
            ),
        ));
    }
    Ok(())
}

/// Shape factor `φ` of the first lemma term at `(w, z)`.
pub fn lemma_phi<T: Real>(config: &SystemConfig<T>, idx: SignalIndex, w: T, z: T) -> T {
    let (al, bl) = (config.a_of(idx.l()), config.b_of(idx.l()));
    let (om_l, om_k) = (config.omega_of(idx.l()), config.omega_of(idx.k()));
    let aw = al * (w + T::one()) * om_l;
    (aw + bl * (z + T::one()) * om_k) / (aw * om_k)
}

/// Shape factor `ϑ` of the second lemma term at `(w, z)`.
pub fn lemma_vartheta<T: Real>(config: &SystemConfig<T>, idx: SignalIndex, w: T, z: T) -> T {
    let (al, bl) = (config.a_of(idx.l()), config.b_of(idx.l()));
    let (om_l, om_k) = (config.omega_of(idx.l()), config.omega_of(idx.k()));
    let bz = bl * (z + T::one()) * om_k;
    (al * (w + T::one()) * om_l + bz) / (bz * om_l)
}

fn numeric_strong_parts<T: Real>(config: &SystemConfig<T>, idx: SignalIndex) -> Result<(RateIntermediates<T>, HypoExpParams<T>, HypoExpParams<T>)> {
    config.validate()?;
    if config.sic == SicMode::Perfect {
        return Err(Error::precondition(
            "ergodic_rate_strong_numeric",
            "defined for imperfect SIC only; use Monte Carlo for perfect SIC with antenna interference",
        ));
    }
    if !(config.varpi1 > T::zero() && config.varpi2 > T::zero()) {
        return Err(Error::precondition(
            "ergodic_rate_strong_numeric",
            "needs varpi1 > 0 and varpi2 > 0; use ergodic_rate_strong_closed without interference",
        ));
    }
    let ri = RateIntermediates::new(config, idx)?;
    let im = crate::analysis::OutageIntermediates::new(config, idx)?;
    let z = im.uplink_rates.expect("varpi1 > 0 gives three uplink rates");
    let w = ri.w_rates.clone().expect("imperfect SIC with varpi2 > 0 gives two W rates");
    Ok((ri, z, w))
}

/// `1 - F_X(x)` for `X = min(γ_{R→x_l}, γ_{D_k→x_l})` under the lemma's model
/// of independent interference terms `Z` and `W`.
///
/// Conditioned on `(W, Z)` the minimum is exponential with rate
/// `(Z+1)/(ρa_lΩ_l) + (W+1)/(ρb_lΩ_k)`, so averaging over the two independent
/// hypoexponentials factorises into `e^{-xΨ} L_Z(x/(ρa_lΩ_l)) L_W(x/(ρb_lΩ_k))`.
pub fn strong_survival<T: Real>(config: &SystemConfig<T>, idx: SignalIndex, x: T) -> Result<T> {
    let (ri, z, w) = numeric_strong_parts(config, idx)?;
    Ok(survival_from_parts(config, idx, &ri, &z, &w, x))
}

fn survival_from_parts<T: Real>(
    config: &SystemConfig<T>,
    idx: SignalIndex,
    ri: &RateIntermediates<T>,
    z: &HypoExpParams<T>,
    w: &HypoExpParams<T>,
    x: T,
) -> T {
    let (al, bl) = (config.a_of(idx.l()), config.b_of(idx.l()));
    let (om_l, om_k) = (config.omega_of(idx.l()), config.omega_of(idx.k()));
    let sz = x / (config.rho * al * om_l);
    let sw = x / (config.rho * bl * om_k);
    (-x * ri.psi).exp() * z.laplace(sz) * w.laplace(sw)
}

/// `F_X(x)` as the lemma's double integral over the densities of `W` and `Z`,
/// evaluated by nested adaptive quadrature. Slow; used to check
/// [`strong_survival`].
pub fn strong_cdf_lemma<T: Real>(config: &SystemConfig<T>, idx: SignalIndex, x: T, q: &QuadratureSpec) -> Result<T> {
    let (_, z, w) = numeric_strong_parts(config, idx)?;
    if x <= T::zero() {
        return Ok(T::zero());
    }
    let (al, bl) = (config.a_of(idx.l()), config.b_of(idx.l()));
    let (om_l, om_k) = (config.omega_of(idx.l()), config.omega_of(idx.k()));
    let rho = config.rho;
    let z_scale = crate::num::to_f64(z.mean());
    let w_scale = crate::num::to_f64(w.mean());
    let inner_spec = q.with_scale(z_scale);
    let outer_spec = q.with_scale(w_scale);
    let outer = integrate_semi_infinite(
        |wv: T| {
            let fw = w.pdf(wv).unwrap_or(T::zero());
            if fw == T::zero() {
                return T::zero();
            }
            let inner = integrate_semi_infinite(
                |zv: T| {
                    let fz = z.pdf(zv).unwrap_or(T::zero());
                    let phi = lemma_phi(config, idx, wv, zv);
                    let vartheta = lemma_vartheta(config, idx, wv, zv);
                    let q1 = (T::one() - (-x * (wv + T::one()) * phi / (rho * bl)).exp()) / (phi * om_k);
                    let q2 = (T::one() - (-x * (zv + T::one()) * vartheta / (rho * al)).exp()) / (vartheta * om_l);
                    fz * (q1 + q2)
                },
                T::zero(),
                &inner_spec,
            );
            match inner {
                Ok(r) => fw * r.value,
                Err(_) => T::nan(),
            }
        },
        T::zero(),
        &outer_spec,
    )?;
    if outer.value.is_nan() {
        return Err(Error::Quadrature { estimate: f64::NAN, error: f64::NAN, subdivisions: 0 });
    }
    Ok(outer.value)
}

/// Strong-signal ergodic rate with antenna interference (`ϖ1, ϖ2 > 0`, ipSIC),
/// `1/(2 ln 2) ∫_0^∞ (1 - F_X(x))/(1 + x) dx`.
pub fn ergodic_rate_strong_numeric<T: Real>(config: &SystemConfig<T>, idx: SignalIndex, q: &QuadratureSpec) -> Result<T> {
    let (ri, z, w) = numeric_strong_parts(config, idx)?;
    let scale = (1.0 / crate::num::to_f64(ri.psi)).clamp(1e-3, 1e6);
    let r = integrate_semi_infinite(
        |x: T| survival_from_parts(config, idx, &ri, &z, &w, x) / (T::one() + x),
        T::zero(),
        &q.with_scale(scale),
    )?;
    Ok(r.value * half_over_ln2())
}

/// Strong-signal ergodic rate without antenna interference, in closed form:
/// `1/(2 ln 2) [A s(Ψ) + (B/Λ1) s(Ψ/Λ1) + (C/Λ2) s(Ψ/Λ2)]` with
/// `s(x) = e^x E1(x)`. Perfect SIC drops the `Λ1` term.
pub fn ergodic_rate_strong_closed<T: Real>(config: &SystemConfig<T>, idx: SignalIndex) -> Result<T> {
    config.validate()?;
    require_no_leak(config, "ergodic_rate_strong_closed")?;
    let ri = RateIntermediates::new(config, idx)?;
    let psi = ri.psi;
    let mut sum = ri.a * scaled_e1(psi)? + ri.c / ri.lambda2 * scaled_e1(psi / ri.lambda2)?;
    if ri.lambda1 != T::zero() {
        sum = sum + ri.b / ri.lambda1 * scaled_e1(psi / ri.lambda1)?;
    }
    Ok(sum * half_over_ln2())
}

/// High-SNR form of the closed strong rate using `Ei(-x) ≈ ln x + γ` and
/// `e^x ≈ 1 + x`. It keeps a `ρ` dependence through `Ψ` but converges to a ceiling.
pub fn ergodic_rate_strong_asymptotic<T: Real>(config: &SystemConfig<T>, idx: SignalIndex) -> Result<T> {
    config.validate()?;
    require_no_leak(config, "ergodic_rate_strong_asymptotic")?;
    let ri = RateIntermediates::new(config, idx)?;
    let ec: T = lit(EULER_GAMMA);
    let term = |x: T| (T::one() + x) * (x.ln() + ec);
    let psi = ri.psi;
    let mut sum = ri.a * term(psi) + ri.c / ri.lambda2 * term(psi / ri.lambda2);
    if ri.lambda1 != T::zero() {
        sum = sum + ri.b / ri.lambda1 * term(psi / ri.lambda1);
    }
    Ok(-sum * half_over_ln2())
}

/// Weak-signal ergodic rate without antenna interference, as the finite
/// integral over `(0, b_t/b_l)`; imperfect SIC adds the `1/(1 + xΛ3)` factor.
pub fn ergodic_rate_weak_numeric<T: Real>(config: &SystemConfig<T>, idx: SignalIndex, q: &QuadratureSpec) -> Result<T> {
    config.validate()?;
    require_no_leak(config, "ergodic_rate_weak_numeric")?;
    let ri = RateIntermediates::new(config, idx)?;
    let rho = config.rho;
    let (at, bt, bl) = (config.a_of(idx.t()), config.b_of(idx.t()), config.b_of(idx.l()));
    let (om_t, om_k, om_r) = (config.omega_of(idx.t()), config.omega_of(idx.k()), config.omega_of(idx.r()));
    let cap = bt / bl;
    let lambda3 = ri.lambda3;
    let integrand = |x: T| {
        let gap = bt - x * bl;
        if gap <= T::zero() {
            return T::zero();
        }
        let e = -x / (rho * at * om_t) - x / (rho * gap * om_k) - x / (rho * gap * om_r);
        e.exp() / ((T::one() + x) * (T::one() + x * lambda3))
    };
    // x = cap·(1 - (1-v)²) clusters nodes near the upper limit where the
    // integrand is crushed by exp(-1/(b_t - x b_l)).
    let two: T = lit(2.0);
    let r = integrate(
        |v: T| {
            let om = T::one() - v;
            integrand(cap * (T::one() - om * om)) * two * cap * om
        },
        T::zero(),
        T::one(),
        q,
    )?;
    Ok(r.value * half_over_ln2())
}

/// High-SNR weak-signal rate without antenna interference. Imperfect SIC:
/// `[ln(1 + b_t/b_l) - ln(1 + b_tΛ3/b_l)] / (2(1 - Λ3) ln 2)`, independent of
/// `ρ`. Perfect SIC: `1/(2 ln 2) e^σ [Ei(-σ/b_l) - Ei(-σ)]`, `σ = 1/(ρa_tΩ_t)`.
pub fn ergodic_rate_weak_highsnr<T: Real>(config: &SystemConfig<T>, idx: SignalIndex) -> Result<T> {
    config.validate()?;
    require_no_leak(config, "ergodic_rate_weak_highsnr")?;
    let (at, bt, bl) = (config.a_of(idx.t()), config.b_of(idx.t()), config.b_of(idx.l()));
    match config.sic {
        SicMode::Imperfect => {
            let ri = RateIntermediates::new(config, idx)?;
            let cap = bt / bl;
            let delta = T::one() - ri.lambda3;
            let ratio = cap / (T::one() + cap);
            let y = ratio * delta;
            let (threshold, _) = degeneracy_policy::<T>();
            // [ln(1+c) - ln(1+cΛ3)]/δ = -ln(1 - y)/δ, y = cδ/(1+c)
            let value = if delta.abs() < threshold {
                ratio * (T::one() + y / lit(2.0) + y * y / lit(3.0))
            } else {
                -(-y).ln_1p() / delta
            };
            Ok(value * half_over_ln2())
        }
        SicMode::Perfect => {
            let sigma = T::one() / (config.rho * at * config.omega_of(idx.t()));
            let value = scaled_e1(sigma)? - (sigma - sigma / bl).exp() * scaled_e1(sigma / bl)?;
            Ok(value * half_over_ln2())
        }
    }
}

/// Analytic ergodic rate of `signal` by the best available route: closed form
/// or finite integral without interference, numerical integration with it.
/// Combinations with no analytic route return a precondition error.
pub fn ergodic_rate<T: Real>(config: &SystemConfig<T>, signal: Signal, q: &QuadratureSpec) -> Result<T> {
    let idx = signal.index();
    let no_leak = config.varpi1 == T::zero() && config.varpi2 == T::zero();
    match (signal.role(), no_leak) {
        (SignalRole::Strong, true) => ergodic_rate_strong_closed(config, idx),
        (SignalRole::Strong, false) => ergodic_rate_strong_numeric(config, idx, q),
        (SignalRole::Weak, true) => ergodic_rate_weak_numeric(config, idx, q),
        (SignalRole::Weak, false) => Err(Error::precondition(
            "ergodic_rate",
            "the weak-signal rate with antenna interference has no analytic route; use Monte Carlo",
        )),
    }
}

/// High-SNR ergodic rate of `signal` (no antenna interference only).
pub fn ergodic_rate_highsnr<T: Real>(config: &SystemConfig<T>, signal: Signal) -> Result<T> {
    match signal.role() {
        SignalRole::Strong => ergodic_rate_strong_asymptotic(config, signal.index()),
        SignalRole::Weak => ergodic_rate_weak_highsnr(config, signal.index()),
    }
}

/// `ΔR / Δ log2 ρ` over the last two points of a rate curve.
pub fn high_snr_slope_estimate<T: Real>(curve: &[(T, T)]) -> Result<T> {
    check_curve("high_snr_slope_estimate", curve)?;
    if let Some(&(_, r)) = curve.iter().find(|(_, r)| !r.is_finite()) {
        return Err(Error::input("high_snr_slope_estimate", format!("rates must be finite, got {r}")));
    }
    let (r1, v1) = curve[curve.len() - 2];
    let (r2, v2) = curve[curve.len() - 1];
    Ok((v2 - v1) / (r2.log2() - r1.log2()))
}
