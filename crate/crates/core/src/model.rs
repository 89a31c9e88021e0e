//! System parameters, signal-index convention, channel sampling and the
//! per-link SINR expressions.
//!
//! Users are numbered 1..=4: D1/D2 form group G1 (near/far), D3/D4 form G2.
//! The relay first decodes the strong uplink signal `x_l` of one group while
//! the other group leaks in through the antenna-isolation factor `varpi1`,
//! then forwards superposed downlink signals to the opposite group.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};
use crate::num::{db_to_linear, lit, Real};

/// Successive interference cancellation quality.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SicMode {
    /// Residual interference `|g|^2` remains after cancellation (epsilon = 1).
    Imperfect,
    /// Cancellation removes the decoded signal completely (epsilon = 0).
    Perfect,
}

impl SicMode {
    pub const ALL: [SicMode; 2] = [SicMode::Imperfect, SicMode::Perfect];

    pub fn epsilon<T: Real>(self) -> T {
        match self {
            SicMode::Imperfect => T::one(),
            SicMode::Perfect => T::zero(),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            SicMode::Imperfect => "ipsic",
            SicMode::Perfect => "psic",
        }
    }
}

impl fmt::Display for SicMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for SicMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ipsic" | "imperfect" => Ok(SicMode::Imperfect),
            "psic" | "perfect" => Ok(SicMode::Perfect),
            other => Err(Error::Parse(format!("unknown SIC mode `{other}` (expected ipsic or psic)"))),
        }
    }
}

/// Which group's strong signal (`l`) and weak signal (`t`) is analysed.
///
/// `k` is the near user of the other group (the partner of `l`), `r` the far
/// user of the other group. Only `l ∈ {1, 3}` and `t ∈ {2, 4}` exist.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SignalIndex {
    l: usize,
    k: usize,
    t: usize,
    r: usize,
}

impl SignalIndex {
    /// Strong signal x1 and weak signal x2 (uplink group G1).
    pub const GROUP1: SignalIndex = SignalIndex { l: 1, k: 3, t: 2, r: 4 };
    /// Strong signal x3 and weak signal x4 (uplink group G2).
    pub const GROUP2: SignalIndex = SignalIndex { l: 3, k: 1, t: 4, r: 2 };

    pub fn new(l: usize, t: usize) -> Result<Self> {
        let k = match l {
            1 => 3,
            3 => 1,
            _ => return Err(Error::input("SignalIndex::new", format!("l must be 1 or 3, got {l}"))),
        };
        let r = match t {
            2 => 4,
            4 => 2,
            _ => return Err(Error::input("SignalIndex::new", format!("t must be 2 or 4, got {t}"))),
        };
        Ok(SignalIndex { l, k, t, r })
    }

    /// All four constructible pairings.
    pub fn all() -> [SignalIndex; 4] {
        [
            SignalIndex { l: 1, k: 3, t: 2, r: 4 },
            SignalIndex { l: 1, k: 3, t: 4, r: 2 },
            SignalIndex { l: 3, k: 1, t: 2, r: 4 },
            SignalIndex { l: 3, k: 1, t: 4, r: 2 },
        ]
    }

    pub fn l(&self) -> usize {
        self.l
    }
    pub fn k(&self) -> usize {
        self.k
    }
    pub fn t(&self) -> usize {
        self.t
    }
    pub fn r(&self) -> usize {
        self.r
    }

    /// Exchange the group labels: (l,k) and (t,r) both swap.
    pub fn swapped(&self) -> Self {
        SignalIndex { l: self.k, k: self.l, t: self.r, r: self.t }
    }
}

/// Whether a signal is the strong (first-decoded) or weak member of its pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SignalRole {
    Strong,
    Weak,
}

/// One of the four user signals.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Signal {
    X1,
    X2,
    X3,
    X4,
}

impl Signal {
    pub const ALL: [Signal; 4] = [Signal::X1, Signal::X2, Signal::X3, Signal::X4];

    /// 1-based user number of the signal's source.
    pub fn user(self) -> usize {
        match self {
            Signal::X1 => 1,
            Signal::X2 => 2,
            Signal::X3 => 3,
            Signal::X4 => 4,
        }
    }

    pub fn role(self) -> SignalRole {
        match self {
            Signal::X1 | Signal::X3 => SignalRole::Strong,
            Signal::X2 | Signal::X4 => SignalRole::Weak,
        }
    }

    pub fn index(self) -> SignalIndex {
        match self {
            Signal::X1 | Signal::X2 => SignalIndex::GROUP1,
            Signal::X3 | Signal::X4 => SignalIndex::GROUP2,
        }
    }

    /// Destination user after the exchange (x1 -> D3, x2 -> D4, ...).
    pub fn destination(self) -> usize {
        match self {
            Signal::X1 => 3,
            Signal::X2 => 4,
            Signal::X3 => 1,
            Signal::X4 => 2,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Signal::X1 => "x1",
            Signal::X2 => "x2",
            Signal::X3 => "x3",
            Signal::X4 => "x4",
        }
    }
}

impl fmt::Display for Signal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Signal {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "x1" | "1" => Ok(Signal::X1),
            "x2" | "2" => Ok(Signal::X2),
            "x3" | "3" => Ok(Signal::X3),
            "x4" | "4" => Ok(Signal::X4),
            other => Err(Error::Parse(format!("unknown signal `{other}` (expected x1..x4)"))),
        }
    }
}

/// Distance-based large-scale fading: near users at `d_near`, far users at `d_far`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PathLoss<T> {
    pub alpha: T,
    pub d_near: T,
    pub d_far: T,
}

impl<T: Real> PathLoss<T> {
    /// `[Ω1, Ω2, Ω3, Ω4]` with `Ω = d^-alpha`.
    pub fn omegas(&self) -> [T; 4] {
        let near = self.d_near.powf(-self.alpha);
        let far = self.d_far.powf(-self.alpha);
        [near, far, near, far]
    }
}

/// Every parameter of the two-way relay NOMA model.
///
/// Arrays are indexed by user number minus one (`a[0]` is `a1`).
#[derive(Clone, Debug, PartialEq)]
pub struct SystemConfig<T> {
    /// Linear transmit SNR `P_u / N_0`.
    pub rho: T,
    /// Uplink power-allocation coefficients.
    pub a: [T; 4],
    /// Downlink power-allocation coefficients; `b1 + b2 = b3 + b4 = 1`.
    pub b: [T; 4],
    /// Inter-antenna interference level at the relay.
    pub varpi1: T,
    /// Interference level at the user nodes.
    pub varpi2: T,
    /// Variance of the residual-interference channel `g`.
    pub omega_i: T,
    /// Channel-gain variances `Ω1..Ω4`.
    pub omega: [T; 4],
    pub path_loss: Option<PathLoss<T>>,
    /// Target rates in bits per channel use.
    pub rates: [T; 4],
    pub sic: SicMode,
    /// Transmission time (normalised), used only for energy efficiency.
    pub time: T,
    /// User and relay transmit powers in watts, used only for energy efficiency.
    pub p_user: T,
    pub p_relay: T,
}

impl<T: Real> SystemConfig<T> {
    /// Parameters of the reference numerical setup: `a = (0.8, 0.2)`,
    /// `b = (0.2, 0.8)`, `R = (0.1, 0.01)` BPCU per group, `alpha = 2`,
    /// `d1 = 2 m`, `d2 = 10 m`, `varpi1 = varpi2 = 0.01`, `Ω_I = -20 dB`,
    /// `P_u = P_r = 10 W`, `T = 1`, ipSIC at 20 dB.
    pub fn table_one() -> Self {
        let path_loss = PathLoss { alpha: lit(2.0), d_near: lit(2.0), d_far: lit(10.0) };
        SystemConfig {
            rho: db_to_linear(lit(20.0)),
            a: [lit(0.8), lit(0.2), lit(0.8), lit(0.2)],
            b: [lit(0.2), lit(0.8), lit(0.2), lit(0.8)],
            varpi1: lit(0.01),
            varpi2: lit(0.01),
            omega_i: db_to_linear(lit(-20.0)),
            omega: path_loss.omegas(),
            path_loss: Some(path_loss),
            rates: [lit(0.1), lit(0.01), lit(0.1), lit(0.01)],
            sic: SicMode::Imperfect,
            time: T::one(),
            p_user: lit(10.0),
            p_relay: lit(10.0),
        }
    }

    pub fn with_rho(mut self, rho: T) -> Self {
        self.rho = rho;
        self
    }

    pub fn with_snr_db(self, db: T) -> Self {
        self.with_rho(db_to_linear(db))
    }

    pub fn with_sic(mut self, sic: SicMode) -> Self {
        self.sic = sic;
        self
    }

    /// Sets `varpi1 = varpi2 = v`.
    pub fn with_varpi(mut self, v: T) -> Self {
        self.varpi1 = v;
        self.varpi2 = v;
        self
    }

    pub fn with_omega_i(mut self, omega_i: T) -> Self {
        self.omega_i = omega_i;
        self
    }

    /// Replaces the channel variances with `d^-alpha` values.
    pub fn with_path_loss(mut self, path_loss: PathLoss<T>) -> Self {
        self.omega = path_loss.omegas();
        self.path_loss = Some(path_loss);
        self
    }

    /// Power coefficient `a_i` for 1-based user `i`.
    pub fn a_of(&self, user: usize) -> T {
        self.a[user - 1]
    }
    pub fn b_of(&self, user: usize) -> T {
        self.b[user - 1]
    }
    pub fn omega_of(&self, user: usize) -> T {
        self.omega[user - 1]
    }
    pub fn rate_of(&self, user: usize) -> T {
        self.rates[user - 1]
    }

    /// Checks every model invariant, naming the first one violated.
    pub fn validate(&self) -> Result<()> {
        let pos = |name: &'static str, v: T| -> Result<()> {
            if v.is_finite() && v > T::zero() {
                Ok(())
            } else {
                Err(Error::config(name, format!("must be finite and > 0, got {v}")))
            }
        };
        pos("rho > 0", self.rho)?;
        for (i, &a) in self.a.iter().enumerate() {
            if !(a.is_finite() && a > T::zero()) {
                return Err(Error::config("a_i > 0", format!("a{} = {a}", i + 1)));
            }
        }
        for (i, &b) in self.b.iter().enumerate() {
            if !(b.is_finite() && b >= T::zero()) {
                return Err(Error::config("b_i >= 0", format!("b{} = {b}", i + 1)));
            }
        }
        let tol = lit::<T>(1e-9);
        for (near, far) in [(0usize, 1usize), (2, 3)] {
            let sum = self.b[near] + self.b[far];
            if (sum - T::one()).abs() > tol {
                let name = if near == 0 { "b1 + b2 = 1" } else { "b3 + b4 = 1" };
                return Err(Error::config(
                    name,
                    format!("b{} + b{} = {sum}", near + 1, far + 1),
                ));
            }
            if self.b[far] <= self.b[near] {
                let name = if near == 0 { "b2 > b1" } else { "b4 > b3" };
                return Err(Error::config(
                    name,
                    format!("b{} = {}, b{} = {}", far + 1, self.b[far], near + 1, self.b[near]),
                ));
            }
        }
        for (name, v) in [("varpi1 in [0, 1]", self.varpi1), ("varpi2 in [0, 1]", self.varpi2)] {
            if !(v >= T::zero() && v <= T::one()) {
                return Err(Error::config(name, format!("got {v}")));
            }
        }
        pos("omega_I > 0", self.omega_i)?;
        for (i, &o) in self.omega.iter().enumerate() {
            if !(o.is_finite() && o > T::zero()) {
                return Err(Error::config("omega_i > 0", format!("omega{} = {o}", i + 1)));
            }
        }
        if let Some(pl) = &self.path_loss {
            pos("alpha > 0", pl.alpha)?;
            pos("d1 > 0", pl.d_near)?;
            pos("d2 > 0", pl.d_far)?;
            for (i, (&stored, derived)) in self.omega.iter().zip(pl.omegas()).enumerate() {
                if (stored - derived).abs() > tol * derived.max(T::one()) {
                    return Err(Error::config(
                        "omega = d^-alpha",
                        format!("omega{} = {stored} but d^-alpha = {derived}", i + 1),
                    ));
                }
            }
        }
        for (i, &r) in self.rates.iter().enumerate() {
            if !(r.is_finite() && r >= T::zero()) {
                return Err(Error::config("R_i >= 0", format!("R{} = {r}", i + 1)));
            }
        }
        pos("T > 0", self.time)?;
        pos("Pu > 0", self.p_user)?;
        pos("Pr > 0", self.p_relay)?;
        Ok(())
    }
}

/// Linear SINR threshold `2^(2R) - 1` for a two-slot exchange at target rate `R`.
pub fn gamma_threshold<T: Real>(rate: T) -> Result<T> {
    if !(rate >= T::zero()) || !rate.is_finite() {
        return Err(Error::input("gamma_threshold", format!("target rate must be >= 0, got {rate}")));
    }
    Ok((lit::<T>(2.0) * rate).exp2() - T::one())
}

/// One realisation of the channel power gains.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChannelDraw<T> {
    /// `|h_i|^2` for users 1..=4.
    pub h: [T; 4],
    /// Residual-interference gain `|g|^2`.
    pub g: T,
}

impl<T: Real> ChannelDraw<T> {
    pub fn h_of(&self, user: usize) -> T {
        self.h[user - 1]
    }
}

/// Draws the five exponential power gains with their configured means.
///
/// Five unit-mean exponentials are consumed in the order `h1, h2, h3, h4, g`.
pub fn sample_channel_draw<T: Real, R: Rng + ?Sized>(config: &SystemConfig<T>, rng: &mut R) -> ChannelDraw<T> {
    let mut h = [T::zero(); 4];
    for (gain, &mean) in h.iter_mut().zip(config.omega.iter()) {
        *gain = T::sample_exp1(rng) * mean;
    }
    let g = T::sample_exp1(rng) * config.omega_i;
    ChannelDraw { h, g }
}

/// The SINRs seen along one group pairing.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SinrSet<T> {
    /// Relay decoding `x_l` with `x_t` and the other group as interference.
    pub relay_strong: T,
    /// Relay decoding `x_t` after cancelling `x_l`.
    pub relay_weak: T,
    /// `D_k` decoding `x_t` first.
    pub near_decodes_weak: T,
    /// `D_k` decoding `x_l` after cancelling `x_t`.
    pub near_decodes_own: T,
    /// `D_r` decoding `x_t`.
    pub far_decodes_weak: T,
}

pub fn sinr_set<T: Real>(config: &SystemConfig<T>, draw: &ChannelDraw<T>, idx: SignalIndex) -> SinrSet<T> {
    let rho = config.rho;
    let eps: T = config.sic.epsilon();
    let (l, k, t, r) = (idx.l, idx.k, idx.t, idx.r);
    let (hl, hk, ht, hr) = (draw.h_of(l), draw.h_of(k), draw.h_of(t), draw.h_of(r));
    let (bl, bt) = (config.b_of(l), config.b_of(t));

    let leak = rho * config.varpi1 * (hk * config.a_of(k) + hr * config.a_of(r));
    let relay_strong = rho * hl * config.a_of(l) / (rho * ht * config.a_of(t) + leak + T::one());
    let relay_weak = rho * ht * config.a_of(t) / (eps * rho * draw.g + leak + T::one());

    let near_decodes_weak = rho * hk * bt / (rho * hk * bl + rho * config.varpi2 * hk + T::one());
    let near_decodes_own = rho * hk * bl / (eps * rho * draw.g + rho * config.varpi2 * hk + T::one());
    let far_decodes_weak = rho * hr * bt / (rho * hr * bl + rho * config.varpi2 * hr + T::one());

    SinrSet { relay_strong, relay_weak, near_decodes_weak, near_decodes_own, far_decodes_weak }
}
