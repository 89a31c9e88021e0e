//! Analytic-vs-simulation and analytic-vs-oracle checks over a configuration.
//!
//! Each numbered criterion produces one or more [`Check`]s. A check never
//! aborts the run: evaluation errors become failed entries.

use std::fmt;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analysis::{diversity_order_estimate, outage, outage_asymptotic};
use crate::ergodic::{
    ergodic_rate, ergodic_rate_strong_asymptotic, ergodic_rate_strong_closed, ergodic_rate_weak_highsnr,
    ergodic_rate_weak_numeric, high_snr_slope_estimate, RateIntermediates,
};
use crate::error::{Error, Result};
use crate::metrics::{energy_efficiency, throughput_delay_limited, throughput_delay_tolerant, TransmissionMode};
use crate::model::{SicMode, Signal, SignalIndex, SignalRole, SystemConfig};
use crate::montecarlo::{
    hypoexp_histogram, mc_ergodic, mc_oma_baseline, mc_outage, mc_system_throughput, McEstimate, McSettings,
};
use crate::num::rel_diff;
use crate::oracle::{ei_series_reference, strong_rate_integral};
use crate::output::to_csv;
use crate::quadrature::{integrate_semi_infinite, QuadratureSpec};
use crate::specfun::{expint_ei, HypoExpParams};
use crate::sweep::{run_sweep, Metric, SweepSpec};

pub const CRITERIA: std::ops::RangeInclusive<u8> = 1..=11;

/// Multiplier applied to every tolerance band.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ToleranceProfile {
    pub name: &'static str,
    pub scale: f64,
}

impl ToleranceProfile {
    pub const DEFAULT: ToleranceProfile = ToleranceProfile { name: "default", scale: 1.0 };
    pub const STRICT: ToleranceProfile = ToleranceProfile { name: "strict", scale: 0.5 };

    pub fn band(&self, x: f64) -> f64 {
        x * self.scale
    }
}

impl std::str::FromStr for ToleranceProfile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "default" => Ok(Self::DEFAULT),
            "strict" => Ok(Self::STRICT),
            other => Err(Error::Parse(format!("unknown tolerance profile `{other}` (expected default or strict)"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ValidateOptions {
    pub profile: ToleranceProfile,
    /// Monte Carlo trials per estimate.
    pub iterations: u64,
    pub seed: u64,
}

impl Default for ValidateOptions {
    fn default() -> Self {
        ValidateOptions { profile: ToleranceProfile::DEFAULT, iterations: 1_000_000, seed: 20_190_601 }
    }
}

/// One pass/fail line.
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub criterion: u8,
    pub name: String,
    /// Human-readable band, e.g. `"rel <= 0.05"`.
    pub tolerance: String,
    /// Worst observed deviation, in the units of `tolerance`.
    pub observed: f64,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} [{:>2}] {}: observed {:.4e}, tolerance {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.criterion,
            self.name,
            self.observed,
            self.tolerance
        )?;
        if !self.detail.is_empty() {
            write!(f, " ({})", self.detail)?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{c}")?;
        }
        let failed = self.failures().count();
        write!(f, "{} checks, {} failed", self.checks.len(), failed)
    }
}

/// Runs every criterion against `config`. Only an invalid config is an error.
pub fn validate(config: &SystemConfig<f64>, opts: &ValidateOptions) -> Result<ValidationReport> {
    config.validate()?;
    let mut report = ValidationReport::default();
    for n in CRITERIA {
        report.checks.extend(run_criterion(n, config, opts)?);
    }
    Ok(report)
}

/// Runs a single criterion.
pub fn run_criterion(n: u8, config: &SystemConfig<f64>, opts: &ValidateOptions) -> Result<Vec<Check>> {
    config.validate()?;
    let v = Validator { base: config, opts, tol: opts.profile };
    let checks = match n {
        1 => v.outage_vs_simulation(),
        2 => v.floors_and_diversity(),
        3 => v.perfect_sic_limit(),
        4 => v.ergodic_closed_forms(),
        5 => v.high_snr_rates(),
        6 => v.hypoexponential(),
        7 => v.exponential_integral(),
        8 => v.oma_ordering(),
        9 => v.throughput_ceiling(),
        10 => v.energy_efficiency_ordering(),
        11 => v.determinism(),
        other => return Err(Error::input("run_criterion", format!("no criterion {other}"))),
    };
    Ok(checks)
}

// `|value - reference| / |reference|`.
fn rel_to(value: f64, reference: f64) -> f64 {
    if value == reference {
        0.0
    } else {
        (value - reference).abs() / reference.abs()
    }
}

const GRID: [f64; 9] = [0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0, 35.0, 40.0];

struct Validator<'a> {
    base: &'a SystemConfig<f64>,
    opts: &'a ValidateOptions,
    tol: ToleranceProfile,
}

// Tracks the worst entry of a family of comparisons.
struct Worst {
    value: f64,
    at: String,
    error: Option<String>,
}

impl Worst {
    fn new() -> Self {
        Worst { value: 0.0, at: String::new(), error: None }
    }

    fn push(&mut self, value: f64, at: impl FnOnce() -> String) {
        if !(value <= self.value) {
            self.value = value;
            self.at = at();
        }
    }

    fn record<T>(&mut self, r: Result<T>, at: impl FnOnce() -> String) -> Option<T> {
        match r {
            Ok(v) => Some(v),
            Err(e) => {
                if self.error.is_none() {
                    self.error = Some(format!("{}: {e}", at()));
                }
                None
            }
        }
    }

    fn check(self, criterion: u8, name: &str, tolerance: String, limit: f64) -> Check {
        let passed = self.error.is_none() && self.value <= limit;
        let detail = match self.error {
            Some(e) => format!("error at {e}"),
            None if self.at.is_empty() => String::new(),
            None => format!("worst at {}", self.at),
        };
        Check { criterion, name: name.to_string(), tolerance, observed: self.value, passed, detail }
    }
}

fn signal_modes() -> impl Iterator<Item = (Signal, SicMode)> {
    Signal::ALL.into_iter().flat_map(|x| SicMode::ALL.into_iter().map(move |m| (x, m)))
}

impl<'a> Validator<'a> {
    fn at(&self, db: f64, mode: SicMode) -> SystemConfig<f64> {
        self.base.clone().with_snr_db(db).with_sic(mode)
    }

    fn settings(&self, point: u64) -> McSettings {
        McSettings::new(self.opts.iterations, self.opts.seed).at_point(point)
    }

    fn outage_vs_simulation(&self) -> Vec<Check> {
        let start = Instant::now();
        let abs = self.tol.band(0.005);
        let sigmas = self.tol.band(3.0);
        let mut worst = Worst::new();
        let mut point = 0;
        for &db in &GRID {
            for (x, mode) in signal_modes() {
                point += 1;
                let c = self.at(db, mode);
                let label = || format!("{x} {mode} {db} dB");
                let Some(a) = worst.record(outage(&c, x), label) else { continue };
                let Some(mc) = worst.record(mc_outage(&c, x.index(), x.role(), &self.settings(point)), label) else {
                    continue;
                };
                let band = (sigmas * McEstimate::binomial_sigma(a.p_exact, mc.n)).max(abs);
                let dev = (a.p_exact - mc.mean).abs() / band;
                worst.push(dev, || format!("{} (closed {:.5e}, simulated {:.5e})", label(), a.p_exact, mc.mean));
            }
        }
        let secs = start.elapsed().as_secs_f64();
        vec![
            worst.check(1, "outage closed forms vs simulation, 0-40 dB", format!("|dev|/max({sigmas}σ, {abs}) <= 1"), 1.0),
            Check {
                criterion: 1,
                name: "outage cross-validation runtime".into(),
                tolerance: "seconds <= 120".into(),
                observed: secs,
                passed: secs <= 120.0,
                detail: String::new(),
            },
        ]
    }

    fn floors_and_diversity(&self) -> Vec<Check> {
        let rel = self.tol.band(0.05);
        let dmax = self.tol.band(0.1);
        let mut floor = Worst::new();
        let mut div = Worst::new();
        for (x, mode) in signal_modes() {
            let c60 = self.at(60.0, mode);
            let label = || format!("{x} {mode}");
            let exact = floor.record(outage(&c60, x), label);
            let asym = floor.record(outage_asymptotic(&c60, x.index(), x.role()), label);
            if let (Some(e), Some(a)) = (&exact, asym) {
                floor.push(rel_to(a.value, e.p_exact), || format!("{} (exact {:.5e}, asymptotic {:.5e})", label(), e.p_exact, a.value));
            }
            let c50 = self.at(50.0, mode);
            if let (Some(p50), Some(e60)) = (div.record(outage(&c50, x), label), exact) {
                let curve = [(c50.rho, p50.p_exact), (c60.rho, e60.p_exact)];
                if let Some(d) = div.record(diversity_order_estimate(&curve), label) {
                    div.push(d.abs(), || format!("{} (d = {d:.3e})", label()));
                }
            }
        }
        vec![
            floor.check(2, "exact vs asymptotic outage at 60 dB", format!("rel <= {rel}"), rel),
            div.check(2, "diversity order between 50 and 60 dB", format!("|d| <= {dmax}"), dmax),
        ]
    }

    fn perfect_sic_limit(&self) -> Vec<Check> {
        let rel = self.tol.band(1e-6);
        let mut worst = Worst::new();
        for &db in &GRID {
            let ip = self.at(db, SicMode::Imperfect).with_omega_i(1e-12);
            let p = self.at(db, SicMode::Perfect);
            for x in Signal::ALL {
                let label = || format!("{x} {db} dB");
                let (Some(a), Some(b)) = (worst.record(outage(&ip, x), label), worst.record(outage(&p, x), label)) else {
                    continue;
                };
                worst.push(rel_to(a.p_exact, b.p_exact), || format!("{} exact", label()));
                let (Some(a), Some(b)) = (
                    worst.record(outage_asymptotic(&ip, x.index(), x.role()), label),
                    worst.record(outage_asymptotic(&p, x.index(), x.role()), label),
                ) else {
                    continue;
                };
                worst.push(rel_to(a.value, b.value), || format!("{} asymptotic", label()));
            }
        }
        vec![worst.check(3, "ipSIC with omega_I = 1e-12 vs pSIC", format!("rel <= {rel:e}"), rel)]
    }

    fn ergodic_closed_forms(&self) -> Vec<Check> {
        let oracle_tol = self.tol.band(1e-8);
        let rel = self.tol.band(0.02);
        let q = QuadratureSpec::default();
        let mut oracle = Worst::new();
        for &db in &GRID {
            for mode in SicMode::ALL {
                let c = self.at(db, mode).with_varpi(0.0);
                for idx in [SignalIndex::GROUP1, SignalIndex::GROUP2] {
                    let label = || format!("x{} {mode} {db} dB", idx.l());
                    let Some(ri) = oracle.record(RateIntermediates::new(&c, idx), label) else { continue };
                    let closed = oracle.record(ergodic_rate_strong_closed(&c, idx), label);
                    let direct = oracle.record(strong_rate_integral(ri.psi, ri.lambda1, ri.lambda2, &q), label);
                    if let (Some(a), Some(b)) = (closed, direct) {
                        oracle.push((a - b).abs(), label);
                    }
                }
            }
        }
        let mut strong = Worst::new();
        let mut weak = Worst::new();
        let mut point = 1000;
        for db in [10.0, 20.0, 30.0] {
            for (x, mode) in signal_modes() {
                point += 1;
                let c = self.at(db, mode).with_varpi(0.0);
                let w = if x.role() == SignalRole::Strong { &mut strong } else { &mut weak };
                let label = || format!("{x} {mode} {db} dB");
                let a = w.record(ergodic_rate(&c, x, &q), label);
                let mc = w.record(mc_ergodic(&c, x.index(), x.role(), &self.settings(point)), label);
                if let (Some(a), Some(mc)) = (a, mc) {
                    w.push(rel_to(a, mc.mean), || format!("{} (analytic {a:.6}, simulated {:.6})", label(), mc.mean));
                }
            }
        }
        vec![
            oracle.check(4, "closed strong rate vs direct quadrature, no interference", format!("abs <= {oracle_tol:e}"), oracle_tol),
            strong.check(4, "closed strong rates vs simulation at 10/20/30 dB", format!("rel <= {rel}"), rel),
            weak.check(4, "weak-signal rate integrals vs simulation at 10/20/30 dB", format!("rel <= {rel}"), rel),
        ]
    }

    fn high_snr_rates(&self) -> Vec<Check> {
        let rel = self.tol.band(0.05);
        let slope_tol = self.tol.band(0.05);
        let q = QuadratureSpec::default();
        let mut weak = Worst::new();
        let c40 = self.at(40.0, SicMode::Imperfect).with_varpi(0.0);
        for idx in [SignalIndex::GROUP1, SignalIndex::GROUP2] {
            let label = || format!("x{} ipsic 40 dB", idx.t());
            let a = weak.record(ergodic_rate_weak_highsnr(&c40, idx), label);
            let b = weak.record(ergodic_rate_weak_numeric(&c40, idx, &q), label);
            if let (Some(a), Some(b)) = (a, b) {
                weak.push(rel_to(a, b), || format!("{} (high-SNR {a:.6}, integral {b:.6})", label()));
            }
        }
        let mut strong = Worst::new();
        for mode in SicMode::ALL {
            let c = self.at(50.0, mode).with_varpi(0.0);
            for idx in [SignalIndex::GROUP1, SignalIndex::GROUP2] {
                let label = || format!("x{} {mode} 50 dB", idx.l());
                let a = strong.record(ergodic_rate_strong_asymptotic(&c, idx), label);
                let b = strong.record(ergodic_rate_strong_closed(&c, idx), label);
                if let (Some(a), Some(b)) = (a, b) {
                    strong.push(rel_to(a, b), || format!("{} (high-SNR {a:.6}, closed {b:.6})", label()));
                }
            }
        }
        let mut slope = Worst::new();
        for (x, mode) in signal_modes() {
            let label = || format!("{x} {mode}");
            let c50 = self.at(50.0, mode).with_varpi(0.0);
            let c60 = self.at(60.0, mode).with_varpi(0.0);
            let (Some(r50), Some(r60)) =
                (slope.record(ergodic_rate(&c50, x, &q), label), slope.record(ergodic_rate(&c60, x, &q), label))
            else {
                continue;
            };
            if let Some(s) = slope.record(high_snr_slope_estimate(&[(c50.rho, r50), (c60.rho, r60)]), label) {
                slope.push(s.abs(), || format!("{} (slope {s:.3e})", label()));
            }
        }
        vec![
            weak.check(5, "high-SNR weak rate vs its integral at 40 dB", format!("rel <= {rel}"), rel),
            strong.check(5, "high-SNR strong rate vs closed form at 50 dB", format!("rel <= {rel}"), rel),
            slope.check(5, "rate slope between 50 and 60 dB", format!("|slope| <= {slope_tol}"), slope_tol),
        ]
    }

    fn hypoexponential(&self) -> Vec<Check> {
        let tol = self.tol.band(1e-9);
        let sigmas = self.tol.band(3.0);
        let mut rng = ChaCha8Rng::seed_from_u64(self.opts.seed ^ 0x6879_706f);
        let mut mass = Worst::new();
        for trial in 0..50 {
            let rates: Vec<f64> = (0..3).map(|_| 10f64.powf(rng.random_range(-1.5..1.5))).collect();
            let label = || format!("trial {trial}, rates {rates:.4?}");
            let Some(p) = mass.record(HypoExpParams::new(&rates), label) else { continue };
            let mean = p.mean();
            let spec = QuadratureSpec::default().with_tolerances(1e-13, 1e-12).with_scale(mean);
            let total = integrate_semi_infinite(|z: f64| p.pdf(z).unwrap_or(f64::NAN), 0.0, &spec).map(|r| r.value);
            if let Some(t) = mass.record(total, label) {
                mass.push((t - 1.0).abs(), label);
            }
        }

        let rates = [0.5, 1.3, 4.0];
        let (bins, upper) = (100usize, 15.0);
        let mut hist = Worst::new();
        let settings = McSettings::new(self.opts.iterations, self.opts.seed).at_point(6000);
        let params = hist.record(HypoExpParams::new(&rates), String::new);
        let counts = hist.record(hypoexp_histogram(&rates, bins, upper, &settings), String::new);
        if let (Some(p), Some(counts)) = (params, counts) {
            let n = settings.n as f64;
            let width = upper / bins as f64;
            for (i, &k) in counts.iter().enumerate() {
                let lo = p.cdf(i as f64 * width).unwrap_or(f64::NAN);
                let hi = p.cdf((i + 1) as f64 * width).unwrap_or(f64::NAN);
                let q = hi - lo;
                let sigma = (n * q * (1.0 - q)).sqrt();
                let z = (k as f64 - n * q).abs() / sigma;
                hist.push(z, || format!("bin {i} (observed {k}, expected {:.1})", n * q));
            }
        }
        vec![
            mass.check(6, "density integrates to one, 50 random rate triples", format!("|1 - ∫f| <= {tol:e}"), tol),
            hist.check(6, "density vs simulated histogram, 100 bins", format!("|dev|/σ <= {sigmas}"), sigmas),
        ]
    }

    fn exponential_integral(&self) -> Vec<Check> {
        let tol = self.tol.band(1e-10);
        let mut worst = Worst::new();
        let (lo, hi) = (1e-6f64.ln(), 50f64.ln());
        for i in 0..50 {
            let m = (lo + (hi - lo) * i as f64 / 49.0).exp();
            for x in [-m, m] {
                let label = || format!("x = {x:e}");
                let (Some(a), Some(b)) = (worst.record(expint_ei(x), label), worst.record(ei_series_reference(x), label)) else {
                    continue;
                };
                worst.push(rel_to(a, b), label);
            }
        }
        vec![worst.check(7, "Ei against the multiprecision series, 100 points", format!("rel <= {tol:e}"), tol)]
    }

    fn oma_ordering(&self) -> Vec<Check> {
        let mut checks = Vec::new();
        let mut point = 7000;
        for (db, noma_better) in [(10.0, true), (35.0, false), (40.0, false)] {
            for mode in SicMode::ALL {
                let c = self.at(db, mode);
                let mut worst = Worst::new();
                let mut margins = Vec::new();
                for x in [Signal::X1, Signal::X2] {
                    point += 2;
                    let label = || format!("{x} {mode} {db} dB");
                    let noma = worst.record(mc_outage(&c, x.index(), x.role(), &self.settings(point)), label);
                    let oma = worst.record(mc_oma_baseline(&c, x, &self.settings(point + 1)), label);
                    if let (Some(n), Some(o)) = (noma, oma) {
                        // positive margin means the expected ordering is violated
                        let margin = if noma_better { n.mean - o.outage.mean } else { o.outage.mean - n.mean };
                        margins.push(format!("{x}: NOMA {:.4}, OMA {:.4}", n.mean, o.outage.mean));
                        worst.push(margin.max(-1.0) + 1.0, label);
                    }
                }
                let expect = if noma_better { "NOMA < OMA" } else { "NOMA > OMA" };
                let mut check = worst.check(8, &format!("{expect} outage for x1, x2 at {db} dB, {mode}"), "ordering holds".into(), 1.0);
                check.passed = check.passed && check.observed < 1.0;
                check.observed -= 1.0;
                check.tolerance = "margin < 0".into();
                check.detail = margins.join("; ");
                checks.push(check);
            }
        }
        checks
    }

    fn throughput_ceiling(&self) -> Vec<Check> {
        let rel = self.tol.band(0.02);
        let q = QuadratureSpec::default();
        let mut dl = Worst::new();
        let mut dt = Worst::new();
        let mut dt_sim = Worst::new();
        for mode in SicMode::ALL {
            let analytic = |db: f64, w: &mut Worst, tm: TransmissionMode, no_leak: bool| -> Option<f64> {
                let mut c = self.at(db, mode);
                if no_leak {
                    c = c.with_varpi(0.0);
                }
                let mut v = Vec::new();
                for x in Signal::ALL {
                    let r = match tm {
                        TransmissionMode::DelayLimited => outage(&c, x).map(|o| o.p_exact),
                        TransmissionMode::DelayTolerant => ergodic_rate(&c, x, &q),
                    };
                    v.push(w.record(r, || format!("{x} {mode} {db} dB"))?);
                }
                let t = match tm {
                    TransmissionMode::DelayLimited => throughput_delay_limited(&v, &c.rates),
                    TransmissionMode::DelayTolerant => throughput_delay_tolerant(&v),
                };
                w.record(t, String::new).map(|t| t.value)
            };
            if let (Some(a), Some(b)) = (
                analytic(50.0, &mut dl, TransmissionMode::DelayLimited, false),
                analytic(60.0, &mut dl, TransmissionMode::DelayLimited, false),
            ) {
                dl.push(rel_to(b, a), || format!("{mode} ({a:.6} -> {b:.6})"));
            }
            if let (Some(a), Some(b)) = (
                analytic(50.0, &mut dt, TransmissionMode::DelayTolerant, true),
                analytic(60.0, &mut dt, TransmissionMode::DelayTolerant, true),
            ) {
                dt.push(rel_to(b, a), || format!("{mode} without interference ({a:.6} -> {b:.6})"));
            }
            // shared draws at both SNRs so the difference is not swamped by noise
            let s = self.settings(8000);
            let a = dt_sim.record(mc_system_throughput(&self.at(50.0, mode), TransmissionMode::DelayTolerant, &s), String::new);
            let b = dt_sim.record(mc_system_throughput(&self.at(60.0, mode), TransmissionMode::DelayTolerant, &s), String::new);
            if let (Some(a), Some(b)) = (a, b) {
                dt_sim.push(rel_to(b.mean, a.mean), || format!("{mode} ({:.6} -> {:.6})", a.mean, b.mean));
            }
        }
        vec![
            dl.check(9, "delay-limited throughput change, 50 to 60 dB", format!("rel <= {rel}"), rel),
            dt.check(9, "delay-tolerant throughput change, 50 to 60 dB, analytic", format!("rel <= {rel}"), rel),
            dt_sim.check(9, "delay-tolerant throughput change, 50 to 60 dB, simulated", format!("rel <= {rel}"), rel),
        ]
    }

    fn energy_efficiency_ordering(&self) -> Vec<Check> {
        let rel = self.tol.band(0.05);
        let mut dl = Worst::new();
        for &db in &GRID {
            let mut ee = Vec::new();
            for mode in SicMode::ALL {
                let c = self.at(db, mode);
                let outages: Option<Vec<f64>> =
                    Signal::ALL.iter().map(|&x| dl.record(outage(&c, x).map(|o| o.p_exact), || format!("{x} {mode} {db} dB"))).collect();
                let Some(outages) = outages else { continue };
                let t = dl.record(throughput_delay_limited(&outages, &c.rates), String::new);
                if let Some(e) = t.and_then(|t| dl.record(energy_efficiency(&t, &c), String::new)) {
                    ee.push(e);
                }
            }
            if let [ip, p] = ee[..] {
                dl.push(rel_diff(ip, p), || format!("{db} dB (ipSIC {ip:.6}, pSIC {p:.6})"));
            }
        }
        let mut dt = Worst::new();
        let mut detail = Vec::new();
        for (i, db) in [30.0, 35.0, 40.0].into_iter().enumerate() {
            // the same draws for both modes compare the modes pathwise
            let s = self.settings(9000 + i as u64);
            let mut ee = Vec::new();
            for mode in SicMode::ALL {
                let c = self.at(db, mode);
                let t = dt.record(mc_system_throughput(&c, TransmissionMode::DelayTolerant, &s), String::new);
                let e = t.and_then(|t| {
                    let st = crate::metrics::SystemThroughput { mode: TransmissionMode::DelayTolerant, value: t.mean, contributions: [0.0; 4] };
                    dt.record(energy_efficiency(&st, &c), String::new)
                });
                ee.extend(e);
            }
            if let [ip, p] = ee[..] {
                detail.push(format!("{db} dB: ipSIC {ip:.6}, pSIC {p:.6}"));
                dt.push((ip - p).max(-1.0) + 1.0, || format!("{db} dB"));
            }
        }
        let mut order = dt.check(10, "delay-tolerant EE pSIC >= ipSIC at 30-40 dB", "ipSIC - pSIC <= 0".into(), 1.0);
        order.observed -= 1.0;
        order.detail = detail.join("; ");
        vec![dl.check(10, "delay-limited EE, ipSIC vs pSIC, 0-40 dB", format!("rel <= {rel}"), rel), order]
    }

    fn determinism(&self) -> Vec<Check> {
        let mut spec = SweepSpec::new(Metric::Outage, Signal::ALL.to_vec()).with_snr(0.0, 40.0, 10.0);
        spec.iterations = (self.opts.iterations / 5).max(4 * crate::montecarlo::CHUNK_TRIALS + 17);
        spec.seed = self.opts.seed;
        spec.include_asymptotic = true;
        spec.include_oma = true;
        let mut ee = spec.clone();
        ee.metric = Metric::EeDt;
        let mut w = Worst::new();
        let mut outputs = Vec::new();
        for workers in [1usize, 4, 8] {
            let mut text = String::new();
            for s in [&spec, &ee] {
                let mut s = s.clone();
                s.workers = Some(workers);
                if let Some(rows) = w.record(run_sweep(&s, self.base), || format!("{workers} workers")) {
                    text.push_str(&to_csv(&rows));
                }
            }
            outputs.push(text);
        }
        let differing = outputs.iter().filter(|o| **o != outputs[0]).count();
        w.push(differing as f64, || "outputs differ between worker counts".into());
        vec![w.check(11, "sweep CSV identical under 1, 4 and 8 workers", "differing outputs = 0".into(), 0.0)]
    }
}
