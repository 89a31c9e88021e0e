//! Closed-form outage probabilities, their high-SNR forms and diversity order.
//!
//! Strong signal `x_l` succeeds when the relay decodes it and the near user
//! `D_k` of the other group decodes both `x_t` and `x_l`. Weak signal `x_t`
//! succeeds when the relay decodes `x_l` then `x_t` and both users of the other
//! group decode `x_t`. All uplink interference is summarised by the
//! hypoexponential variable `Z = ρa_t|h_t|² + ρϖ1(a_k|h_k|² + a_r|h_r|²)`,
//! which enters only through its Laplace transform.

use crate::error::{Error, Result};
use crate::model::{gamma_threshold, SignalIndex, SignalRole, SystemConfig};
use crate::num::{lit, to_f64, Real};
use crate::specfun::HypoExpParams;

/// SNR used as the stand-in for `ρ → ∞` when reporting error floors.
pub const FLOOR_RHO: f64 = 1e12;

/// Every quantity the closed forms are built from, for one SNR and pairing.
#[derive(Clone, Debug, PartialEq)]
pub struct OutageIntermediates<T> {
    pub gamma_l: T,
    pub gamma_t: T,
    /// `γ_l / (ρ a_l)`.
    pub beta_l: T,
    /// `γ_t / (ρ a_t)`.
    pub beta_t: T,
    /// `γ_l / (ρ(b_l - ϖ2 γ_l))`; infinite when `b_l <= ϖ2 γ_l`.
    pub tau_l: T,
    /// `γ_t / (ρ(b_t - b_l γ_t - ϖ2 γ_t))`; infinite when `b_t <= (b_l + ϖ2) γ_t`.
    pub xi_t: T,
    pub theta_l: T,
    /// `(Ω_l + ρ β_l a_t Ω_t) / (Ω_l Ω_t)`.
    pub varphi_t: T,
    /// `1 / (ρ a_t Ω_t)`.
    pub lambda1: T,
    /// `{λ1, λ2, λ3}`; `None` when `ϖ1 = 0` and `Z` is a single exponential.
    pub uplink_rates: Option<HypoExpParams<T>>,
    /// `{λ'1, λ'2}` of the cross-group leakage alone; `None` when `ϖ1 = 0`.
    pub leak_rates: Option<HypoExpParams<T>>,
}

impl<T: Real> OutageIntermediates<T> {
    pub fn new(config: &SystemConfig<T>, idx: SignalIndex) -> Result<Self> {
        let rho = config.rho;
        let (l, k, t, r) = (idx.l(), idx.k(), idx.t(), idx.r());
        let gamma_l = gamma_threshold(config.rate_of(l))?;
        let gamma_t = gamma_threshold(config.rate_of(t))?;
        let (bl, bt) = (config.b_of(l), config.b_of(t));
        let w2 = config.varpi2;

        let tau_den = bl - w2 * gamma_l;
        let tau_l = if tau_den > T::zero() { gamma_l / (rho * tau_den) } else { T::infinity() };
        let xi_den = bt - bl * gamma_t - w2 * gamma_t;
        let xi_t = if xi_den > T::zero() { gamma_t / (rho * xi_den) } else { T::infinity() };

        let beta_l = gamma_l / (rho * config.a_of(l));
        let (om_l, om_t) = (config.omega_of(l), config.omega_of(t));
        let varphi_t = (om_l + rho * beta_l * config.a_of(t) * om_t) / (om_l * om_t);
        let lambda1 = T::one() / (rho * config.a_of(t) * om_t);

        let (uplink_rates, leak_rates) = if config.varpi1 > T::zero() {
            let lambda2 = T::one() / (rho * config.varpi1 * config.a_of(k) * config.omega_of(k));
            let lambda3 = T::one() / (rho * config.varpi1 * config.a_of(r) * config.omega_of(r));
            (
                Some(HypoExpParams::new(&[lambda1, lambda2, lambda3])?),
                Some(HypoExpParams::new(&[lambda2, lambda3])?),
            )
        } else {
            (None, None)
        };

        Ok(OutageIntermediates {
            gamma_l,
            gamma_t,
            beta_l,
            beta_t: gamma_t / (rho * config.a_of(t)),
            tau_l,
            xi_t,
            theta_l: tau_l.max(xi_t),
            varphi_t,
            lambda1,
            uplink_rates,
            leak_rates,
        })
    }

    /// Both `D_k` decoding conditions can be met by some channel realisation.
    pub fn strong_feasible(&self) -> bool {
        self.tau_l.is_finite() && self.xi_t.is_finite()
    }

    pub fn weak_feasible(&self) -> bool {
        self.xi_t.is_finite()
    }

    /// `E[e^{-sZ}]` for the full uplink interference `Z`.
    fn uplink_laplace(&self, s: T) -> T {
        match &self.uplink_rates {
            Some(p) => p.laplace(s),
            None => self.lambda1 / (self.lambda1 + s),
        }
    }

    /// `E[e^{-sZ'}]` for the leakage part `Z'` alone.
    fn leak_laplace(&self, s: T) -> T {
        match &self.leak_rates {
            Some(p) => p.laplace(s),
            None => T::one(),
        }
    }
}

/// Outcome of one closed-form outage evaluation.
#[derive(Clone, Debug, PartialEq)]
pub struct OutageResult<T> {
    pub p_exact: T,
    pub p_asymptotic: T,
    /// False when a decoding threshold exceeds its SINR ceiling; `p_exact` is then 1.
    pub feasible: bool,
    pub intermediates: OutageIntermediates<T>,
}

/// High-SNR outage expression at the configured SNR and its limiting floor.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AsymptoticOutage<T> {
    /// The expression clamped to `[0, 1]`.
    pub value: T,
    pub raw: T,
    /// The expression evaluated at `ρ = FLOOR_RHO`, clamped.
    pub floor: T,
    pub raw_floor: T,
    /// Set when either raw value left `[-1e-9, 1 + 1e-9]`.
    pub out_of_range: bool,
}

fn slack<T: Real>() -> T {
    lit::<T>(1e-9).max(T::epsilon() * lit(64.0))
}

fn in_unit_interval<T: Real>(raw: T) -> bool {
    raw >= -slack::<T>() && raw <= T::one() + slack::<T>()
}

fn checked_probability<T: Real>(quantity: &'static str, raw: T) -> Result<T> {
    if !in_unit_interval(raw) {
        return Err(Error::OutOfRange { quantity, raw: to_f64(raw) });
    }
    Ok(raw.max(T::zero()).min(T::one()))
}

fn clamp_unit<T: Real>(x: T) -> T {
    x.max(T::zero()).min(T::one())
}

// Probability that D_k decodes x_t then x_l, given a residual-interference
// variance scaled by ε; `e^{-θ/Ω_k} - c·e^{-θ/Ω_k - (θ/τ - 1)/(ερΩ_I)}`.
fn near_user_success<T: Real>(config: &SystemConfig<T>, idx: SignalIndex, im: &OutageIntermediates<T>) -> T {
    let eps: T = config.sic.epsilon();
    let om_k = config.omega_of(idx.k());
    let base = (-im.theta_l / om_k).exp();
    let ert = eps * config.rho * im.tau_l * config.omega_i;
    if ert == T::zero() {
        return base;
    }
    let c = ert / (om_k + ert);
    let excess = (im.theta_l / im.tau_l - T::one()) / (eps * config.rho * config.omega_i);
    base - c * (-im.theta_l / om_k - excess).exp()
}

fn strong_raw<T: Real>(config: &SystemConfig<T>, idx: SignalIndex, im: &OutageIntermediates<T>) -> T {
    let om_l = config.omega_of(idx.l());
    let relay = (-im.beta_l / om_l).exp() * im.uplink_laplace(im.beta_l / om_l);
    T::one() - relay * near_user_success(config, idx, im)
}

fn weak_raw<T: Real>(config: &SystemConfig<T>, idx: SignalIndex, im: &OutageIntermediates<T>, with_prefactor: bool) -> T {
    let eps: T = config.sic.epsilon();
    let (om_l, om_t) = (config.omega_of(idx.l()), config.omega_of(idx.t()));
    let (om_k, om_r) = (config.omega_of(idx.k()), config.omega_of(idx.r()));
    let s = im.beta_l / om_l + im.beta_t * im.varphi_t;
    let residual = T::one() + eps * im.beta_t * config.rho * im.varphi_t * config.omega_i;
    let mut success = im.leak_laplace(s) / (im.varphi_t * om_t * residual);
    if with_prefactor {
        success = success * (-im.beta_l / om_l - im.beta_t * im.varphi_t - im.xi_t / om_k - im.xi_t / om_r).exp();
    }
    T::one() - success
}

// 1 - L_Z(β_l/Ω_l)·[1 - θ/Ω_k - c(1 - θ(Ω_k + ερτΩ_I)/(ερτΩ_IΩ_k))], with the
// bracket equal to 1 under perfect SIC.
fn strong_asymptotic_raw<T: Real>(config: &SystemConfig<T>, idx: SignalIndex, im: &OutageIntermediates<T>) -> T {
    let om_l = config.omega_of(idx.l());
    let om_k = config.omega_of(idx.k());
    let laplace = im.uplink_laplace(im.beta_l / om_l);
    let eps: T = config.sic.epsilon();
    let ert = eps * config.rho * im.tau_l * config.omega_i;
    let bracket = if ert == T::zero() {
        T::one()
    } else {
        let c = ert / (om_k + ert);
        T::one() - im.theta_l / om_k - c * (T::one() - im.theta_l * (om_k + ert) / (ert * om_k))
    };
    T::one() - laplace * bracket
}

fn asymptotic_raw<T: Real>(config: &SystemConfig<T>, idx: SignalIndex, role: SignalRole) -> Result<(T, bool)> {
    let im = OutageIntermediates::new(config, idx)?;
    let feasible = match role {
        SignalRole::Strong => im.strong_feasible(),
        SignalRole::Weak => im.weak_feasible(),
    };
    if !feasible {
        return Ok((T::one(), false));
    }
    let raw = match role {
        SignalRole::Strong => strong_asymptotic_raw(config, idx, &im),
        SignalRole::Weak => weak_raw(config, idx, &im, false),
    };
    Ok((raw, true))
}

/// High-SNR outage of the strong (`Strong`) or weak (`Weak`) signal of `idx`.
///
/// The expression keeps its `ρ` dependence; `floor` is its value at
/// [`FLOOR_RHO`]. Raw values outside the unit interval are reported through
/// `out_of_range` and a warning, then clamped.
pub fn outage_asymptotic<T: Real>(config: &SystemConfig<T>, idx: SignalIndex, role: SignalRole) -> Result<AsymptoticOutage<T>> {
    config.validate()?;
    let (raw, _) = asymptotic_raw(config, idx, role)?;
    let at_floor = config.clone().with_rho(lit(FLOOR_RHO));
    let (raw_floor, _) = asymptotic_raw(&at_floor, idx, role)?;
    let out_of_range = !(in_unit_interval(raw) && in_unit_interval(raw_floor));
    if out_of_range {
        log::warn!("high-SNR outage expression left [0, 1]: value {raw}, floor {raw_floor} ({role:?}, {idx:?})");
    }
    Ok(AsymptoticOutage {
        value: clamp_unit(raw),
        raw,
        floor: clamp_unit(raw_floor),
        raw_floor,
        out_of_range,
    })
}

/// Outage probability of the strong signal `x_l`.
pub fn outage_strong<T: Real>(config: &SystemConfig<T>, idx: SignalIndex) -> Result<OutageResult<T>> {
    config.validate()?;
    let im = OutageIntermediates::new(config, idx)?;
    let asymptotic = outage_asymptotic(config, idx, SignalRole::Strong)?;
    if !im.strong_feasible() {
        return Ok(OutageResult { p_exact: T::one(), p_asymptotic: T::one(), feasible: false, intermediates: im });
    }
    let p_exact = checked_probability("strong-signal outage", strong_raw(config, idx, &im))?;
    Ok(OutageResult { p_exact, p_asymptotic: asymptotic.value, feasible: true, intermediates: im })
}

/// Outage probability of the weak signal `x_t`.
pub fn outage_weak<T: Real>(config: &SystemConfig<T>, idx: SignalIndex) -> Result<OutageResult<T>> {
    config.validate()?;
    let im = OutageIntermediates::new(config, idx)?;
    let asymptotic = outage_asymptotic(config, idx, SignalRole::Weak)?;
    if !im.weak_feasible() {
        return Ok(OutageResult { p_exact: T::one(), p_asymptotic: T::one(), feasible: false, intermediates: im });
    }
    let p_exact = checked_probability("weak-signal outage", weak_raw(config, idx, &im, true))?;
    Ok(OutageResult { p_exact, p_asymptotic: asymptotic.value, feasible: true, intermediates: im })
}

/// Outage of whichever signal `signal` names, using its own group pairing.
pub fn outage<T: Real>(config: &SystemConfig<T>, signal: crate::model::Signal) -> Result<OutageResult<T>> {
    match signal.role() {
        SignalRole::Strong => outage_strong(config, signal.index()),
        SignalRole::Weak => outage_weak(config, signal.index()),
    }
}

/// `-Δ ln p / Δ ln ρ` over the last two points of an outage curve.
pub fn diversity_order_estimate<T: Real>(curve: &[(T, T)]) -> Result<T> {
    check_curve("diversity_order_estimate", curve)?;
    if let Some(&(_, p)) = curve.iter().find(|(_, p)| !(*p > T::zero() && p.is_finite())) {
        return Err(Error::input("diversity_order_estimate", format!("outage values must be > 0, got {p}")));
    }
    let (r1, p1) = curve[curve.len() - 2];
    let (r2, p2) = curve[curve.len() - 1];
    Ok((p1.ln() - p2.ln()) / (r2.ln() - r1.ln()))
}

pub(crate) fn check_curve<T: Real>(operation: &'static str, curve: &[(T, T)]) -> Result<()> {
    if curve.len() < 2 {
        return Err(Error::input(operation, format!("need at least 2 points, got {}", curve.len())));
    }
    for pair in curve.windows(2) {
        if !(pair[1].0 > pair[0].0 && pair[0].0 > T::zero()) {
            return Err(Error::input(operation, "SNR values must be positive and strictly increasing"));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{SicMode, Signal};
    use crate::oracle::hypoexp_laplace_product;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn table_one(db: f64) -> SystemConfig<f64> {
        SystemConfig::table_one().with_snr_db(db)
    }

    #[test]
    fn vanishing_snr_means_certain_outage() {
        for mode in SicMode::ALL {
            let c = table_one(-60.0).with_sic(mode);
            for s in Signal::ALL {
                let r = outage(&c, s).unwrap();
                assert!(1.0 - r.p_exact <= 1e-6, "{s} {mode}: {}", r.p_exact);
            }
        }
    }

    #[test]
    fn infeasible_threshold_gives_unit_outage() {
        let mut c = table_one(20.0).with_varpi(0.5);
        // γ_l = 2^2 - 1 = 3, so ϖ2 γ_l = 1.5 > b_l = 0.2
        c.rates[0] = 1.0;
        let r = outage_strong(&c, SignalIndex::GROUP1).unwrap();
        assert!(!r.feasible);
        assert_eq!(r.p_exact, 1.0);
        assert!(r.intermediates.tau_l.is_infinite());

        let mut c = table_one(20.0);
        c.rates[1] = 2.0;
        let r = outage_weak(&c, SignalIndex::GROUP1).unwrap();
        assert!(!r.feasible);
        assert_eq!(r.p_exact, 1.0);
    }

    #[test]
    fn relay_term_matches_product_form_laplace() {
        let c = table_one(25.0);
        let im = OutageIntermediates::new(&c, SignalIndex::GROUP1).unwrap();
        let s = im.beta_l / c.omega[0];
        let rho = c.rho;
        let raw = [1.0 / (rho * 0.2 * 0.01), 1.0 / (rho * 0.01 * 0.8 * 0.25), 1.0 / (rho * 0.01 * 0.2 * 0.01)];
        assert!(im.uplink_rates.as_ref().unwrap().perturbed());
        assert_relative_eq!(im.uplink_laplace(s), hypoexp_laplace_product(&raw, s), max_relative = 1e-7);
    }

    #[test]
    fn no_leak_branch_is_the_limit() {
        for mode in SicMode::ALL {
            for s in Signal::ALL {
                let tiny = table_one(20.0).with_sic(mode).with_varpi(1e-9);
                let mut zero = tiny.clone();
                zero.varpi1 = 0.0;
                let a = outage(&tiny, s).unwrap().p_exact;
                let b = outage(&zero, s).unwrap().p_exact;
                assert!((a - b).abs() <= 1e-8, "{s} {mode}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn psic_floor_below_ipsic_floor() {
        for (idx, role) in [(SignalIndex::GROUP1, SignalRole::Strong), (SignalIndex::GROUP1, SignalRole::Weak)] {
            let ip = outage_asymptotic(&table_one(30.0), idx, role).unwrap();
            let p = outage_asymptotic(&table_one(30.0).with_sic(SicMode::Perfect), idx, role).unwrap();
            assert!(p.floor <= ip.floor);
            assert!(!ip.out_of_range && !p.out_of_range);
        }
    }

    #[test]
    fn psic_without_leak_still_has_floor() {
        let c = table_one(30.0).with_sic(SicMode::Perfect).with_varpi(0.0);
        let a = outage_asymptotic(&c, SignalIndex::GROUP1, SignalRole::Strong).unwrap();
        assert!(a.floor > 0.0 && a.floor < 1.0, "floor {}", a.floor);
    }

    #[test]
    fn exact_approaches_asymptote() {
        for mode in SicMode::ALL {
            let c = table_one(60.0).with_sic(mode);
            for s in Signal::ALL {
                let r = outage(&c, s).unwrap();
                let gap = (r.p_exact - r.p_asymptotic).abs() / r.p_asymptotic;
                assert!(gap <= 0.05, "{s} {mode}: exact {} asym {}", r.p_exact, r.p_asymptotic);
            }
        }
    }

    #[test]
    fn diversity_estimates() {
        let c = 3.0;
        let curve: Vec<(f64, f64)> = [1e3, 1e4, 1e5].iter().map(|&r| (r, c / (r * r))).collect();
        assert_relative_eq!(diversity_order_estimate(&curve).unwrap(), 2.0, epsilon = 1e-9);
        let flat = [(10.0, 0.2), (100.0, 0.2)];
        assert_eq!(diversity_order_estimate(&flat).unwrap(), 0.0);
        assert!(diversity_order_estimate(&[(10.0, 0.2), (100.0, 0.0)]).is_err());
        assert!(diversity_order_estimate(&[(10.0, 0.2)]).is_err());
        assert!(diversity_order_estimate(&[(100.0, 0.2), (10.0, 0.1)]).is_err());
    }

    #[test]
    fn table_one_diversity_is_zero() {
        let pts: Vec<(f64, f64)> = [50.0, 60.0]
            .iter()
            .map(|&db| {
                let c = table_one(db);
                (c.rho, outage_strong(&c, SignalIndex::GROUP1).unwrap().p_exact)
            })
            .collect();
        assert!(diversity_order_estimate(&pts).unwrap().abs() <= 0.1);
    }

    #[test]
    fn vanishing_residual_matches_perfect_sic() {
        for db in [0.0, 10.0, 20.0, 30.0, 40.0] {
            for s in Signal::ALL {
                let ip = table_one(db).with_omega_i(1e-12);
                let p = ip.clone().with_sic(SicMode::Perfect);
                let a = outage(&ip, s).unwrap().p_exact;
                let b = outage(&p, s).unwrap().p_exact;
                assert_relative_eq!(a, b, max_relative = 1e-6);
            }
        }
    }

    #[test]
    fn works_in_single_precision() {
        let c = SystemConfig::<f32>::table_one();
        let r = outage_strong(&c, SignalIndex::GROUP1).unwrap();
        let d = outage_strong(&SystemConfig::<f64>::table_one(), SignalIndex::GROUP1).unwrap();
        assert!((r.p_exact as f64 - d.p_exact).abs() < 1e-3);
    }

    proptest! {
        #[test]
        fn raw_output_stays_in_unit_interval(db in -10.0f64..60.0, v in 0.0f64..0.05, oi in -40.0f64..0.0, psic in any::<bool>()) {
            let mode = if psic { SicMode::Perfect } else { SicMode::Imperfect };
            let c = table_one(db).with_varpi(v).with_sic(mode).with_omega_i(crate::num::db_to_linear(oi));
            for s in Signal::ALL {
                prop_assert!(outage(&c, s).is_ok());
            }
        }

        #[test]
        fn more_interference_never_helps(db in 0.0f64..40.0, v in 0.0f64..0.05, dv in 0.0f64..0.05) {
            let lo = table_one(db).with_varpi(v);
            let hi = table_one(db).with_varpi(v + dv);
            for s in Signal::ALL {
                prop_assert!(outage(&hi, s).unwrap().p_exact >= outage(&lo, s).unwrap().p_exact - 1e-12);
            }
        }

        #[test]
        fn exchange_symmetry(db in 0.0f64..50.0) {
            let c = table_one(db);
            let a = outage_strong(&c, SignalIndex::GROUP1).unwrap().p_exact;
            let b = outage_strong(&c, SignalIndex::GROUP1.swapped()).unwrap().p_exact;
            prop_assert!((a - b).abs() <= 1e-12);
            let a = outage_weak(&c, SignalIndex::GROUP1).unwrap().p_exact;
            let b = outage_weak(&c, SignalIndex::GROUP2).unwrap().p_exact;
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn decreasing_in_snr_before_floor() {
        for s in Signal::ALL {
            let mut prev = 1.0;
            for db in 0..=30 {
                let p = outage(&table_one(db as f64), s).unwrap().p_exact;
                assert!(p <= prev + 1e-12, "{s} at {db} dB: {p} > {prev}");
                prev = p;
            }
        }
    }
}
