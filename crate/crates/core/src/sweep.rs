//! SNR sweeps producing one row per grid point, signal and SIC mode.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use rayon::prelude::*;

use crate::analysis::{outage, outage_asymptotic};
use crate::ergodic::{ergodic_rate, ergodic_rate_highsnr};
use crate::error::{Error, Result};
use crate::metrics::{energy_efficiency, throughput_delay_limited, throughput_delay_tolerant, SystemThroughput, TransmissionMode};
use crate::model::{SicMode, Signal, SystemConfig};
use crate::montecarlo::{
    mc_ergodic, mc_oma_baseline, mc_oma_system_throughput, mc_outage, mc_system_throughput, with_workers, McEstimate,
    McSettings, MIN_TRIALS,
};
use crate::quadrature::QuadratureSpec;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Metric {
    Outage,
    ErgodicRate,
    ThroughputDl,
    ThroughputDt,
    EeDl,
    EeDt,
}

impl Metric {
    pub const ALL: [Metric; 6] =
        [Metric::Outage, Metric::ErgodicRate, Metric::ThroughputDl, Metric::ThroughputDt, Metric::EeDl, Metric::EeDt];

    pub fn label(self) -> &'static str {
        match self {
            Metric::Outage => "outage",
            Metric::ErgodicRate => "ergodic_rate",
            Metric::ThroughputDl => "throughput_dl",
            Metric::ThroughputDt => "throughput_dt",
            Metric::EeDl => "ee_dl",
            Metric::EeDt => "ee_dt",
        }
    }

    /// System metrics aggregate all four signals into one row.
    pub fn is_system(self) -> bool {
        !matches!(self, Metric::Outage | Metric::ErgodicRate)
    }

    fn transmission(self) -> TransmissionMode {
        match self {
            Metric::Outage | Metric::ThroughputDl | Metric::EeDl => TransmissionMode::DelayLimited,
            Metric::ErgodicRate | Metric::ThroughputDt | Metric::EeDt => TransmissionMode::DelayTolerant,
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Metric::ALL.into_iter().find(|m| m.label() == s).ok_or_else(|| {
            let names: Vec<_> = Metric::ALL.iter().map(|m| m.label()).collect();
            Error::Parse(format!("unknown metric `{s}` (expected one of {})", names.join(", ")))
        })
    }
}

/// Which curve a row belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scheme {
    Noma(SicMode),
    /// Five-slot orthogonal baseline; Monte Carlo only.
    Oma,
}

impl Scheme {
    pub fn label(self) -> &'static str {
        match self {
            Scheme::Noma(m) => m.label(),
            Scheme::Oma => "oma",
        }
    }
}

/// Signal column of a row; system metrics use `Sum`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SignalSel {
    One(Signal),
    Sum,
}

impl SignalSel {
    pub fn label(self) -> &'static str {
        match self {
            SignalSel::One(s) => s.label(),
            SignalSel::Sum => "sum",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub snr_start_db: f64,
    pub snr_stop_db: f64,
    pub snr_step_db: f64,
    pub metric: Metric,
    /// Ignored by system metrics, which always cover all four signals.
    pub signals: Vec<Signal>,
    pub modes: Vec<SicMode>,
    pub iterations: u64,
    pub seed: u64,
    pub include_asymptotic: bool,
    pub include_oma: bool,
    /// Reuse one random stream per curve across the SNR grid.
    pub common_random_numbers: bool,
    /// Rayon threads; `None` uses the global pool.
    pub workers: Option<usize>,
    pub quadrature: QuadratureSpec,
    pub output: Option<PathBuf>,
}

impl SweepSpec {
    pub fn new(metric: Metric, signals: Vec<Signal>) -> Self {
        SweepSpec {
            snr_start_db: 0.0,
            snr_stop_db: 40.0,
            snr_step_db: 5.0,
            metric,
            signals,
            modes: SicMode::ALL.to_vec(),
            iterations: 100_000,
            seed: 1,
            include_asymptotic: false,
            include_oma: false,
            common_random_numbers: false,
            workers: None,
            quadrature: QuadratureSpec::default(),
            output: None,
        }
    }

    pub fn with_snr(mut self, start: f64, stop: f64, step: f64) -> Self {
        self.snr_start_db = start;
        self.snr_stop_db = stop;
        self.snr_step_db = step;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |detail: String| Err(Error::input("run_sweep", detail));
        if !(self.snr_start_db.is_finite() && self.snr_stop_db.is_finite()) || self.snr_start_db > self.snr_stop_db {
            return bad(format!("need start <= stop, got {}:{}", self.snr_start_db, self.snr_stop_db));
        }
        if !(self.snr_step_db > 0.0 && self.snr_step_db.is_finite()) {
            return bad(format!("step must be > 0, got {}", self.snr_step_db));
        }
        if self.signals.is_empty() {
            return bad("empty signal set".into());
        }
        if self.modes.is_empty() {
            return bad("empty SIC mode set".into());
        }
        if self.iterations < MIN_TRIALS {
            return bad(format!("iterations must be >= {MIN_TRIALS}, got {}", self.iterations));
        }
        if self.workers == Some(0) {
            return bad("workers must be >= 1".into());
        }
        self.quadrature.validate()
    }

    /// Grid points `start + i·step` up to `stop` (inclusive within rounding).
    pub fn grid(&self) -> Vec<f64> {
        let n = ((self.snr_stop_db - self.snr_start_db) / self.snr_step_db + 1e-9).floor() as usize;
        (0..=n).map(|i| self.snr_start_db + i as f64 * self.snr_step_db).collect()
    }

    fn signal_rows(&self) -> Vec<SignalSel> {
        if self.metric.is_system() {
            vec![SignalSel::Sum]
        } else {
            let mut s = self.signals.clone();
            s.sort();
            s.dedup();
            s.into_iter().map(SignalSel::One).collect()
        }
    }

    fn schemes(&self) -> Vec<Scheme> {
        let mut m = self.modes.clone();
        m.sort();
        m.dedup();
        let mut out: Vec<Scheme> = m.into_iter().map(Scheme::Noma).collect();
        if self.include_oma {
            out.push(Scheme::Oma);
        }
        out
    }
}

/// One row of a sweep table.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricPoint {
    pub snr_db: f64,
    pub signal: SignalSel,
    pub metric: Metric,
    pub scheme: Scheme,
    pub analytic: Option<f64>,
    pub asymptotic: Option<f64>,
    pub mc: McEstimate,
    /// False when a decoding threshold is unreachable or an analytic
    /// evaluation failed; the row is still reported.
    pub feasible: bool,
}

/// Evaluates every `(snr, signal, scheme)` cell; rows come back in that order.
pub fn run_sweep(spec: &SweepSpec, config: &SystemConfig<f64>) -> Result<Vec<MetricPoint>> {
    spec.validate()?;
    config.validate()?;
    let grid = spec.grid();
    let signals = spec.signal_rows();
    let schemes = spec.schemes();
    let mut cells = Vec::with_capacity(grid.len() * signals.len() * schemes.len());
    for (gi, &db) in grid.iter().enumerate() {
        for (si, &signal) in signals.iter().enumerate() {
            for (mi, &scheme) in schemes.iter().enumerate() {
                cells.push((gi, db, si, signal, mi, scheme));
            }
        }
    }
    // Stream ids never depend on which cells are requested, only on their
    // coordinates, so adding a signal or mode leaves other rows unchanged.
    let stream = |gi: usize, signal: SignalSel, scheme: Scheme| -> u64 {
        let g = if spec.common_random_numbers { 0 } else { gi as u64 + 1 };
        let s = match signal {
            SignalSel::One(x) => x.user() as u64,
            SignalSel::Sum => 0,
        };
        let m = match scheme {
            Scheme::Noma(SicMode::Imperfect) => 0,
            Scheme::Noma(SicMode::Perfect) => 1,
            Scheme::Oma => 2,
        };
        (g << 8) | (s << 2) | m
    };
    with_workers(spec.workers, || {
        cells
            .par_iter()
            .map(|&(gi, db, _, signal, _, scheme)| {
                let settings = McSettings::new(spec.iterations, spec.seed).at_point(stream(gi, signal, scheme));
                evaluate_cell(spec, config, db, signal, scheme, &settings)
            })
            .collect::<Result<Vec<_>>>()
    })?
}

fn evaluate_cell(
    spec: &SweepSpec,
    base: &SystemConfig<f64>,
    db: f64,
    signal: SignalSel,
    scheme: Scheme,
    settings: &McSettings,
) -> Result<MetricPoint> {
    let mut config = base.clone().with_snr_db(db);
    if let Scheme::Noma(m) = scheme {
        config = config.with_sic(m);
    }
    let metric = spec.metric;
    let feasible = std::cell::Cell::new(true);
    let keep = |what: &str, r: Result<f64>| -> Option<f64> {
        match r {
            Ok(v) => Some(v),
            // no analytic route for this regime; not a failure of the point
            Err(Error::Precondition { .. }) => None,
            Err(e) => {
                log::warn!("{metric} {} {} at {db} dB: {what} failed: {e}", signal.label(), scheme.label());
                feasible.set(false);
                None
            }
        }
    };

    let (analytic, asymptotic, mc) = match (scheme, signal) {
        (Scheme::Oma, SignalSel::One(x)) => {
            let est = mc_oma_baseline(&config, x, settings)?;
            (None, None, if metric == Metric::Outage { est.outage } else { est.rate })
        }
        (Scheme::Oma, SignalSel::Sum) => {
            let est = mc_oma_system_throughput(&config, metric.transmission(), settings)?;
            (None, None, scale_estimate(est, ee_factor(metric, &config)?))
        }
        (Scheme::Noma(_), SignalSel::One(x)) if metric == Metric::Outage => {
            let (analytic, ok) = match outage(&config, x) {
                Ok(r) => (Some(r.p_exact), r.feasible),
                Err(e) => (keep("closed form", Err(e)), false),
            };
            feasible.set(feasible.get() && ok);
            let asymptotic = if spec.include_asymptotic {
                keep("asymptote", outage_asymptotic(&config, x.index(), x.role()).map(|a| a.value))
            } else {
                None
            };
            (analytic, asymptotic, mc_outage(&config, x.index(), x.role(), settings)?)
        }
        (Scheme::Noma(_), SignalSel::One(x)) => {
            let analytic = keep("rate", ergodic_rate(&config, x, &spec.quadrature));
            let asymptotic =
                if spec.include_asymptotic { keep("high-SNR rate", ergodic_rate_highsnr(&config, x)) } else { None };
            (analytic, asymptotic, mc_ergodic(&config, x.index(), x.role(), settings)?)
        }
        (Scheme::Noma(_), SignalSel::Sum) => {
            let transmission = metric.transmission();
            let (analytic, ok) = system_value(&config, transmission, false, spec);
            feasible.set(feasible.get() && ok);
            let asymptotic = if spec.include_asymptotic { system_value(&config, transmission, true, spec).0 } else { None };
            let factor = ee_factor(metric, &config)?;
            let mc = mc_system_throughput(&config, transmission, settings)?;
            (analytic.map(|v| v * factor), asymptotic.map(|v| v * factor), scale_estimate(mc, factor))
        }
    };
    Ok(MetricPoint { snr_db: db, signal, metric, scheme, analytic, asymptotic, mc, feasible: feasible.get() })
}

// Analytic system throughput; `None` when any signal lacks an analytic value.
fn system_value(config: &SystemConfig<f64>, mode: TransmissionMode, asymptotic: bool, spec: &SweepSpec) -> (Option<f64>, bool) {
    let mut feasible = true;
    let mut values = Vec::with_capacity(4);
    for x in Signal::ALL {
        let v = match (mode, asymptotic) {
            (TransmissionMode::DelayLimited, false) => outage(config, x).map(|r| {
                feasible &= r.feasible;
                r.p_exact
            }),
            (TransmissionMode::DelayLimited, true) => outage_asymptotic(config, x.index(), x.role()).map(|a| a.value),
            (TransmissionMode::DelayTolerant, false) => ergodic_rate(config, x, &spec.quadrature),
            (TransmissionMode::DelayTolerant, true) => ergodic_rate_highsnr(config, x),
        };
        match v {
            Ok(v) => values.push(v),
            Err(Error::Precondition { .. }) => return (None, feasible),
            Err(e) => {
                log::warn!("system {mode:?} for {x}: {e}");
                return (None, false);
            }
        }
    }
    let t: Result<SystemThroughput<f64>> = match mode {
        TransmissionMode::DelayLimited => throughput_delay_limited(&values, &config.rates),
        TransmissionMode::DelayTolerant => throughput_delay_tolerant(&values),
    };
    (t.ok().map(|t| t.value), feasible)
}

// 1 for throughput, the energy-efficiency scale `2 / (T·Pu + T·Pr)` otherwise.
fn ee_factor(metric: Metric, config: &SystemConfig<f64>) -> Result<f64> {
    match metric {
        Metric::EeDl | Metric::EeDt => {
            let unit = SystemThroughput { mode: metric.transmission(), value: 1.0, contributions: [0.25; 4] };
            energy_efficiency(&unit, config)
        }
        _ => Ok(1.0),
    }
}

fn scale_estimate(e: McEstimate, k: f64) -> McEstimate {
    if k == 1.0 {
        return e;
    }
    McEstimate {
        mean: e.mean * k,
        half_width_95: e.half_width_95 * k,
        ci_low: e.ci_low * k,
        ci_high: e.ci_high * k,
        ..e
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick(metric: Metric, signals: Vec<Signal>) -> SweepSpec {
        let mut s = SweepSpec::new(metric, signals);
        s.iterations = 2000;
        s
    }

    #[test]
    fn grid_includes_endpoint() {
        let s = quick(Metric::Outage, vec![Signal::X1]).with_snr(0.0, 40.0, 5.0);
        assert_eq!(s.grid().len(), 9);
        assert_eq!(s.with_snr(0.0, 1.0, 0.1).grid().len(), 11);
    }

    #[test]
    fn outage_row_count_and_order() {
        let mut spec = quick(Metric::Outage, vec![Signal::X2, Signal::X1]);
        spec.modes = vec![SicMode::Imperfect];
        let rows = run_sweep(&spec, &SystemConfig::table_one()).unwrap();
        assert_eq!(rows.len(), 18);
        assert_eq!(rows[0].signal, SignalSel::One(Signal::X1));
        assert_eq!(rows[1].signal, SignalSel::One(Signal::X2));
        assert!(rows.windows(2).all(|w| w[0].snr_db <= w[1].snr_db));
        for r in &rows {
            assert!(r.mc.ci_low <= r.mc.mean && r.mc.mean <= r.mc.ci_high);
            assert!(r.analytic.is_some() && r.asymptotic.is_none());
        }
    }

    #[test]
    fn empty_signals_rejected() {
        assert!(run_sweep(&quick(Metric::Outage, vec![]), &SystemConfig::table_one()).is_err());
        let mut s = quick(Metric::Outage, vec![Signal::X1]);
        s.iterations = 10;
        assert!(run_sweep(&s, &SystemConfig::table_one()).is_err());
    }

    #[test]
    fn unreachable_threshold_marks_row_infeasible() {
        let mut c = SystemConfig::table_one();
        // 2^2.4 - 1 exceeds the near user's b2/b1 = 4 ceiling
        c.rates[1] = 1.2;
        let spec = quick(Metric::Outage, vec![Signal::X2]).with_snr(10.0, 10.0, 1.0);
        let rows = run_sweep(&spec, &c).unwrap();
        assert!(rows.iter().all(|r| !r.feasible && r.analytic == Some(1.0)));
    }

    #[test]
    fn system_metrics_produce_sum_rows_and_oma() {
        let mut spec = quick(Metric::EeDl, vec![Signal::X1]).with_snr(20.0, 30.0, 10.0);
        spec.include_oma = true;
        let rows = run_sweep(&spec, &SystemConfig::table_one()).unwrap();
        assert_eq!(rows.len(), 6);
        assert!(rows.iter().all(|r| r.signal == SignalSel::Sum));
        assert_eq!(rows[2].scheme, Scheme::Oma);
        assert!(rows[2].analytic.is_none());
        let ee = rows[0].analytic.unwrap();
        assert!(ee > 0.0 && ee <= 0.022 + 1e-12);
    }

    #[test]
    fn interference_rates_fall_back_to_monte_carlo() {
        let spec = quick(Metric::ErgodicRate, vec![Signal::X2]).with_snr(20.0, 20.0, 1.0);
        let rows = run_sweep(&spec, &SystemConfig::table_one()).unwrap();
        assert!(rows.iter().all(|r| r.analytic.is_none() && r.feasible && r.mc.mean > 0.0));
    }

    #[test]
    fn metric_names_parse() {
        for m in Metric::ALL {
            assert_eq!(m.label().parse::<Metric>().unwrap(), m);
        }
        assert!("snr".parse::<Metric>().is_err());
    }
}
