//! System throughput in both transmission modes and energy efficiency.

use crate::error::{Error, Result};
use crate::model::SystemConfig;
use crate::num::{lit, Real};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TransmissionMode {
    /// Fixed-rate transmission judged by outage.
    DelayLimited,
    /// Rate-adaptive transmission judged by ergodic rate.
    DelayTolerant,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SystemThroughput<T> {
    pub mode: TransmissionMode,
    /// Sum of `contributions`, in bits per channel use.
    pub value: T,
    /// Per-signal contributions for `x1..x4`.
    pub contributions: [T; 4],
}

/// `Σ (1 - P_i) R_i`.
pub fn throughput_delay_limited<T: Real>(outages: &[T], rates: &[T]) -> Result<SystemThroughput<T>> {
    if outages.len() != 4 || rates.len() != 4 {
        return Err(Error::input(
            "throughput_delay_limited",
            format!("need 4 outages and 4 rates, got {} and {}", outages.len(), rates.len()),
        ));
    }
    let mut contributions = [T::zero(); 4];
    for (i, (&p, &r)) in outages.iter().zip(rates).enumerate() {
        if !(p >= T::zero() && p <= T::one()) {
            return Err(Error::input("throughput_delay_limited", format!("outage {} = {p} outside [0, 1]", i + 1)));
        }
        if !(r >= T::zero() && r.is_finite()) {
            return Err(Error::input("throughput_delay_limited", format!("rate {} = {r} must be >= 0", i + 1)));
        }
        contributions[i] = (T::one() - p) * r;
    }
    Ok(SystemThroughput { mode: TransmissionMode::DelayLimited, value: sum(&contributions), contributions })
}

/// Sum of the four ergodic rates.
pub fn throughput_delay_tolerant<T: Real>(rates: &[T]) -> Result<SystemThroughput<T>> {
    if rates.len() != 4 {
        return Err(Error::input("throughput_delay_tolerant", format!("need 4 rates, got {}", rates.len())));
    }
    let mut contributions = [T::zero(); 4];
    for (i, &r) in rates.iter().enumerate() {
        if !(r >= T::zero() && r.is_finite()) {
            return Err(Error::input("throughput_delay_tolerant", format!("rate {} = {r} must be >= 0", i + 1)));
        }
        contributions[i] = r;
    }
    Ok(SystemThroughput { mode: TransmissionMode::DelayTolerant, value: sum(&contributions), contributions })
}

fn sum<T: Real>(xs: &[T; 4]) -> T {
    xs.iter().fold(T::zero(), |acc, &x| acc + x)
}

/// `2R / (T·P_u + T·P_r)`; the SNR driving the statistics is not involved.
pub fn energy_efficiency<T: Real>(throughput: &SystemThroughput<T>, config: &SystemConfig<T>) -> Result<T> {
    for (name, v) in [("T", config.time), ("Pu", config.p_user), ("Pr", config.p_relay)] {
        if !(v > T::zero() && v.is_finite()) {
            return Err(Error::input("energy_efficiency", format!("{name} must be > 0, got {v}")));
        }
    }
    Ok(lit::<T>(2.0) * throughput.value / (config.time * config.p_user + config.time * config.p_relay))
}
