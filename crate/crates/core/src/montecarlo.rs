//! Seeded Monte Carlo estimates taken straight from the SINR definitions.
//!
//! Trials are split into fixed-size chunks. Chunk `c` of point `p` draws from
//! a ChaCha8 stream keyed by `(seed, p)` with stream id `c`, chunks run on the
//! rayon pool, and partial results are merged in chunk order, so an estimate
//! depends only on `(config, n, seed, point)` and never on the worker count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::metrics::TransmissionMode;
use crate::model::{gamma_threshold, sample_channel_draw, sinr_set, Signal, SignalIndex, SignalRole, SinrSet, SystemConfig};
use crate::num::{to_f64, Real};

/// Trials per chunk; part of the reproducibility contract.
pub const CHUNK_TRIALS: u64 = 1 << 16;

/// Smallest accepted trial count.
pub const MIN_TRIALS: u64 = 1000;

const Z95: f64 = 1.959_963_984_540_054;

/// Trial count, master seed and substream selector for one estimate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct McSettings {
    pub n: u64,
    pub seed: u64,
    /// Sweep point index. Estimates with different points use independent
    /// streams; reusing one point across SNRs gives common random numbers.
    pub point: u64,
}

impl McSettings {
    pub fn new(n: u64, seed: u64) -> Self {
        McSettings { n, seed, point: 0 }
    }

    pub fn at_point(mut self, point: u64) -> Self {
        self.point = point;
        self
    }

    fn check(&self, operation: &'static str) -> Result<()> {
        if self.n < MIN_TRIALS {
            return Err(Error::input(operation, format!("need at least {MIN_TRIALS} trials, got {}", self.n)));
        }
        Ok(())
    }
}

/// A sample mean with its 95% confidence interval.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub half_width_95: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub n: u64,
    pub seed: u64,
}

impl McEstimate {
    /// Interval for a proportion: normal approximation, or Wilson's score
    /// interval when fewer than 10 successes or failures were observed.
    pub fn from_proportion(events: u64, n: u64, seed: u64) -> Self {
        let nf = n as f64;
        let p = events as f64 / nf;
        let (low, high) = if (events as f64) < 10.0 || ((n - events) as f64) < 10.0 {
            let z2 = Z95 * Z95;
            let denom = 1.0 + z2 / nf;
            let centre = (p + z2 / (2.0 * nf)) / denom;
            let spread = Z95 * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
            ((centre - spread).max(0.0).min(p), (centre + spread).min(1.0).max(p))
        } else {
            let h = Z95 * (p * (1.0 - p) / nf).sqrt();
            ((p - h).max(0.0), (p + h).min(1.0))
        };
        McEstimate { mean: p, half_width_95: 0.5 * (high - low), ci_low: low, ci_high: high, n, seed }
    }

    fn from_moments(m: Moments, seed: u64) -> Self {
        let var = if m.count > 1 { m.m2 / (m.count - 1) as f64 } else { 0.0 };
        let h = Z95 * (var / m.count as f64).sqrt();
        McEstimate { mean: m.mean, half_width_95: h, ci_low: m.mean - h, ci_high: m.mean + h, n: m.count, seed }
    }

    /// Binomial standard error `sqrt(p(1-p)/n)` at probability `p`.
    pub fn binomial_sigma(p: f64, n: u64) -> f64 {
        (p * (1.0 - p) / n as f64).sqrt()
    }
}

#[derive(Clone, Copy, Debug, Default)]
struct Moments {
    count: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.count += 1;
        let d = x - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (x - self.mean);
    }

    fn merge(self, other: Moments) -> Moments {
        if self.count == 0 {
            return other;
        }
        if other.count == 0 {
            return self;
        }
        let count = self.count + other.count;
        let d = other.mean - self.mean;
        let mean = self.mean + d * other.count as f64 / count as f64;
        let m2 = self.m2 + other.m2 + d * d * (self.count as f64) * (other.count as f64) / count as f64;
        Moments { count, mean, m2 }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Generator for chunk `chunk` of point `point` under `seed`.
pub fn chunk_rng(seed: u64, point: u64, chunk: u64) -> ChaCha8Rng {
    let key = splitmix64(splitmix64(seed) ^ point.wrapping_mul(0xD1B5_4A32_D192_ED03));
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    rng.set_stream(chunk);
    rng
}

fn chunk_bounds(n: u64) -> impl IndexedParallelIterator<Item = (u64, u64)> {
    let chunks = n.div_ceil(CHUNK_TRIALS) as usize;
    (0..chunks).into_par_iter().map(move |c| {
        let c = c as u64;
        (c, CHUNK_TRIALS.min(n - c * CHUNK_TRIALS))
    })
}

/// Counts trials where `event` holds.
pub fn count_events<F>(settings: &McSettings, event: F) -> u64
where
    F: Fn(&mut ChaCha8Rng) -> bool + Sync,
{
    let counts: Vec<u64> = chunk_bounds(settings.n)
        .map(|(c, len)| {
            let mut rng = chunk_rng(settings.seed, settings.point, c);
            (0..len).filter(|_| event(&mut rng)).count() as u64
        })
        .collect();
    counts.into_iter().sum()
}

/// Mean and confidence interval of `sample`.
pub fn estimate_mean<F>(settings: &McSettings, sample: F) -> McEstimate
where
    F: Fn(&mut ChaCha8Rng) -> f64 + Sync,
{
    let parts: Vec<Moments> = chunk_bounds(settings.n)
        .map(|(c, len)| {
            let mut rng = chunk_rng(settings.seed, settings.point, c);
            let mut m = Moments::default();
            for _ in 0..len {
                m.push(sample(&mut rng));
            }
            m
        })
        .collect();
    let total = parts.into_iter().fold(Moments::default(), Moments::merge);
    McEstimate::from_moments(total, settings.seed)
}

/// Runs `f` on a dedicated pool of `workers` threads (`None`: the global pool).
pub fn with_workers<R: Send>(workers: Option<usize>, f: impl FnOnce() -> R + Send) -> Result<R> {
    match workers {
        None => Ok(f()),
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w.max(1))
                .build()
                .map_err(|e| Error::ThreadPool(e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}


// Decoding thresholds of the strong and weak signal of one pairing.
struct Thresholds {
    strong: f64,
    weak: f64,
}

impl Thresholds {
    fn new<T: Real>(config: &SystemConfig<T>, idx: SignalIndex) -> Result<Self> {
        Ok(Thresholds {
            strong: to_f64(gamma_threshold(config.rate_of(idx.l()))?),
            weak: to_f64(gamma_threshold(config.rate_of(idx.t()))?),
        })
    }

    fn decoded<T: Real>(&self, s: &SinrSet<T>, role: SignalRole) -> bool {
        let (gl, gt) = (self.strong, self.weak);
        let relay_strong = to_f64(s.relay_strong) > gl;
        let near_weak = to_f64(s.near_decodes_weak) > gt;
        match role {
            SignalRole::Strong => relay_strong && near_weak && to_f64(s.near_decodes_own) > gl,
            SignalRole::Weak => {
                to_f64(s.relay_weak) > gt && relay_strong && near_weak && to_f64(s.far_decodes_weak) > gt
            }
        }
    }
}

// `½ log2(1 + min SINR)` over the signal's decoding chain.
fn chain_rate<T: Real>(s: &SinrSet<T>, role: SignalRole) -> f64 {
    let m = match role {
        SignalRole::Strong => s.relay_strong.min(s.near_decodes_own),
        SignalRole::Weak => s.relay_weak.min(s.near_decodes_weak).min(s.far_decodes_weak),
    };
    0.5 * to_f64(m).ln_1p() / std::f64::consts::LN_2
}

/// Outage of the strong (`Strong`) or weak (`Weak`) signal of `idx`.
///
/// Strong succeeds when `γ_{R→x_l} > γ_l`, `γ_{D_k→x_t} > γ_t` and
/// `γ_{D_k→x_l} > γ_l`. Weak succeeds when `γ_{R→x_t} > γ_t`,
/// `γ_{R→x_l} > γ_l`, `γ_{D_k→x_t} > γ_t` and `γ_{D_r→x_t} > γ_t`.
pub fn mc_outage<T: Real>(config: &SystemConfig<T>, idx: SignalIndex, role: SignalRole, settings: &McSettings) -> Result<McEstimate> {
    settings.check("mc_outage")?;
    config.validate()?;
    let th = Thresholds::new(config, idx)?;
    let failures = count_events(settings, |rng| {
        let draw = sample_channel_draw(config, rng);
        !th.decoded(&sinr_set(config, &draw, idx), role)
    });
    Ok(McEstimate::from_proportion(failures, settings.n, settings.seed))
}

/// Mean of `½ log2(1 + min SINR)` over the signal's decoding chain.
pub fn mc_ergodic<T: Real>(config: &SystemConfig<T>, idx: SignalIndex, role: SignalRole, settings: &McSettings) -> Result<McEstimate> {
    settings.check("mc_ergodic")?;
    config.validate()?;
    Ok(estimate_mean(settings, |rng| {
        let draw = sample_channel_draw(config, rng);
        chain_rate(&sinr_set(config, &draw, idx), role)
    }))
}

/// Outage and rate of one signal in the five-slot orthogonal baseline.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OmaEstimate {
    pub outage: McEstimate,
    pub rate: McEstimate,
}

/// Uplink and downlink users of `signal` in the orthogonal baseline.
pub fn oma_route(signal: Signal) -> (usize, usize) {
    (signal.user(), signal.destination())
}

/// Five-slot orthogonal two-way relaying: each signal crosses an
/// interference-free uplink slot and a downlink slot at full SNR `ρ`. The
/// end-to-end SNR is the weaker hop, the outage threshold is `2^{5R} - 1` and
/// the rate is `(1/5) log2(1 + min SNR)`.
pub fn mc_oma_baseline<T: Real>(config: &SystemConfig<T>, signal: Signal, settings: &McSettings) -> Result<OmaEstimate> {
    settings.check("mc_oma_baseline")?;
    config.validate()?;
    let rate = to_f64(config.rate_of(signal.user()));
    let threshold = oma_threshold(rate)?;
    let (up, down) = oma_route(signal);
    let rho = to_f64(config.rho);
    let sample = |rng: &mut ChaCha8Rng| {
        let draw = sample_channel_draw(config, rng);
        rho * to_f64(draw.h_of(up)).min(to_f64(draw.h_of(down)))
    };
    let failures = count_events(settings, |rng| sample(rng) <= threshold);
    let rate_est = estimate_mean(settings, |rng| sample(rng).ln_1p() / (5.0 * std::f64::consts::LN_2));
    Ok(OmaEstimate { outage: McEstimate::from_proportion(failures, settings.n, settings.seed), rate: rate_est })
}

/// System throughput with every trial scoring all four signals on one draw:
/// `Σ 1{x_i decoded} R_i` when delay-limited, `Σ` chain rates when
/// delay-tolerant.
pub fn mc_system_throughput<T: Real>(config: &SystemConfig<T>, mode: TransmissionMode, settings: &McSettings) -> Result<McEstimate> {
    settings.check("mc_system_throughput")?;
    config.validate()?;
    let groups = [SignalIndex::GROUP1, SignalIndex::GROUP2];
    let th = [Thresholds::new(config, groups[0])?, Thresholds::new(config, groups[1])?];
    let rates: [f64; 4] = std::array::from_fn(|i| to_f64(config.rates[i]));
    Ok(estimate_mean(settings, |rng| {
        let draw = sample_channel_draw(config, rng);
        let mut total = 0.0;
        for (g, idx) in groups.iter().enumerate() {
            let s = sinr_set(config, &draw, *idx);
            for (role, user) in [(SignalRole::Strong, idx.l()), (SignalRole::Weak, idx.t())] {
                total += match mode {
                    TransmissionMode::DelayLimited => {
                        if th[g].decoded(&s, role) {
                            rates[user - 1]
                        } else {
                            0.0
                        }
                    }
                    TransmissionMode::DelayTolerant => chain_rate(&s, role),
                };
            }
        }
        total
    }))
}

/// [`mc_system_throughput`] for the five-slot orthogonal baseline.
pub fn mc_oma_system_throughput<T: Real>(config: &SystemConfig<T>, mode: TransmissionMode, settings: &McSettings) -> Result<McEstimate> {
    settings.check("mc_oma_system_throughput")?;
    config.validate()?;
    let rho = to_f64(config.rho);
    let mut targets = [(0.0, 0.0); 4];
    for (t, signal) in targets.iter_mut().zip(Signal::ALL) {
        let r = to_f64(config.rate_of(signal.user()));
        *t = (r, oma_threshold(r)?);
    }
    Ok(estimate_mean(settings, |rng| {
        let draw = sample_channel_draw(config, rng);
        let mut total = 0.0;
        for (signal, &(rate, threshold)) in Signal::ALL.iter().zip(&targets) {
            let (up, down) = oma_route(*signal);
            let snr = rho * to_f64(draw.h_of(up)).min(to_f64(draw.h_of(down)));
            total += match mode {
                TransmissionMode::DelayLimited => {
                    if snr > threshold {
                        rate
                    } else {
                        0.0
                    }
                }
                TransmissionMode::DelayTolerant => snr.ln_1p() / (5.0 * std::f64::consts::LN_2),
            };
        }
        total
    }))
}

/// `2^{5R} - 1`, the orthogonal-baseline SNR threshold for target rate `R`.
pub fn oma_threshold(rate: f64) -> Result<f64> {
    gamma_threshold(2.5 * rate)
}

/// Histogram of samples of the sum of independent exponentials with the given
/// rates: `bins` equal bins on `[0, upper)`, overflow discarded.
pub fn hypoexp_histogram(rates: &[f64], bins: usize, upper: f64, settings: &McSettings) -> Result<Vec<u64>> {
    settings.check("hypoexp_histogram")?;
    if bins == 0 || !(upper > 0.0) {
        return Err(Error::input("hypoexp_histogram", "need bins >= 1 and upper > 0"));
    }
    let width = upper / bins as f64;
    let parts: Vec<Vec<u64>> = chunk_bounds(settings.n)
        .map(|(c, len)| {
            let mut rng = chunk_rng(settings.seed, settings.point, c);
            let mut counts = vec![0u64; bins];
            for _ in 0..len {
                let z: f64 = rates.iter().map(|&l| f64::sample_exp1(&mut rng) / l).sum();
                let b = (z / width) as usize;
                if b < bins {
                    counts[b] += 1;
                }
            }
            counts
        })
        .collect();
    let mut total = vec![0u64; bins];
    for part in parts {
        for (t, p) in total.iter_mut().zip(part) {
            *t += p;
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SicMode;

    fn table_one(db: f64) -> SystemConfig<f64> {
        SystemConfig::table_one().with_snr_db(db)
    }

    #[test]
    fn impossible_threshold_is_certain_outage() {
        let mut c = table_one(20.0);
        c.rates = [20.0; 4];
        let s = McSettings::new(5000, 1);
        assert_eq!(mc_outage(&c, SignalIndex::GROUP1, SignalRole::Strong, &s).unwrap().mean, 1.0);
        assert_eq!(mc_outage(&c, SignalIndex::GROUP1, SignalRole::Weak, &s).unwrap().mean, 1.0);
    }

    #[test]
    fn too_few_trials_rejected() {
        let s = McSettings::new(999, 1);
        assert!(mc_outage(&table_one(20.0), SignalIndex::GROUP1, SignalRole::Strong, &s).is_err());
        assert!(mc_ergodic(&table_one(20.0), SignalIndex::GROUP1, SignalRole::Strong, &s).is_err());
    }

    #[test]
    fn worker_count_does_not_change_estimates() {
        let c = table_one(20.0);
        let s = McSettings::new(300_000, 42).at_point(3);
        let one = with_workers(Some(1), || mc_outage(&c, SignalIndex::GROUP1, SignalRole::Strong, &s).unwrap()).unwrap();
        let eight = with_workers(Some(8), || mc_outage(&c, SignalIndex::GROUP1, SignalRole::Strong, &s).unwrap()).unwrap();
        assert_eq!(one, eight);
        let one = with_workers(Some(1), || mc_ergodic(&c, SignalIndex::GROUP2, SignalRole::Weak, &s).unwrap()).unwrap();
        let eight = with_workers(Some(8), || mc_ergodic(&c, SignalIndex::GROUP2, SignalRole::Weak, &s).unwrap()).unwrap();
        assert_eq!(one.mean.to_bits(), eight.mean.to_bits());
        assert_eq!(one.half_width_95.to_bits(), eight.half_width_95.to_bits());
    }

    #[test]
    fn vanishing_snr_rate() {
        let s = McSettings::new(20_000, 5);
        let r = mc_ergodic(&table_one(-60.0), SignalIndex::GROUP1, SignalRole::Strong, &s).unwrap();
        assert!(r.mean <= 1e-3);
    }

    #[test]
    fn common_random_numbers_give_monotone_rates() {
        let s = McSettings::new(20_000, 9);
        let mut prev = 0.0;
        for db in (0..=40).step_by(5) {
            let c = table_one(db as f64).with_sic(SicMode::Perfect);
            let r = mc_ergodic(&c, SignalIndex::GROUP1, SignalRole::Weak, &s).unwrap();
            assert!(r.mean >= prev);
            prev = r.mean;
        }
    }

    #[test]
    fn system_throughput_matches_closed_form_outages() {
        use crate::analysis::outage;
        use crate::metrics::throughput_delay_limited;
        let c = table_one(30.0);
        let outages: Vec<f64> = Signal::ALL.iter().map(|&x| outage(&c, x).unwrap().p_exact).collect();
        let analytic = throughput_delay_limited(&outages, &c.rates).unwrap().value;
        let est = mc_system_throughput(&c, TransmissionMode::DelayLimited, &McSettings::new(400_000, 3)).unwrap();
        assert!((est.mean - analytic).abs() <= 1.5 * est.half_width_95.max(1e-6), "{est:?} vs {analytic}");
    }

    #[test]
    fn system_throughput_sums_chain_rates() {
        let c = table_one(20.0);
        let s = McSettings::new(200_000, 4);
        let total = mc_system_throughput(&c, TransmissionMode::DelayTolerant, &s).unwrap().mean;
        let parts: f64 = Signal::ALL
            .iter()
            .map(|x| mc_ergodic(&c, x.index(), x.role(), &s).unwrap().mean)
            .sum();
        // same draws, so only summation order differs
        assert!((total - parts).abs() < 1e-12);
        let oma = mc_oma_system_throughput(&c, TransmissionMode::DelayLimited, &s).unwrap();
        assert!(oma.mean > 0.0 && oma.mean <= 0.22);
    }

    #[test]
    fn oma_threshold_value() {
        assert!((oma_threshold(0.1).unwrap() - 0.414_213_562_373_095_05).abs() < 1e-15);
    }

    #[test]
    fn oma_has_unit_diversity() {
        let s = McSettings::new(1_000_000, 17);
        let p30 = mc_oma_baseline(&table_one(30.0), Signal::X1, &s).unwrap().outage.mean;
        let p40 = mc_oma_baseline(&table_one(40.0), Signal::X1, &s).unwrap().outage.mean;
        let slope = (p30.ln() - p40.ln()) / 10f64.ln();
        assert!((slope - 1.0).abs() < 0.15, "slope {slope}");
    }

    #[test]
    fn wilson_interval_near_edges() {
        let e = McEstimate::from_proportion(0, 1000, 0);
        assert_eq!(e.mean, 0.0);
        assert!(e.ci_low == 0.0 && e.ci_high > 0.0);
        let e = McEstimate::from_proportion(1000, 1000, 0);
        assert!(e.ci_high == 1.0 && e.ci_low < 1.0);
        let e = McEstimate::from_proportion(300, 1000, 0);
        assert!(e.ci_low < 0.3 && e.ci_high > 0.3);
    }

    #[test]
    fn interval_coverage() {
        let mut covered = 0;
        for seed in 0..500u64 {
            let s = McSettings::new(2000, seed);
            let hits = count_events(&s, |rng| {
                use rand::Rng;
                rng.random::<f64>() < 0.3
            });
            let e = McEstimate::from_proportion(hits, s.n, seed);
            if e.ci_low <= 0.3 && 0.3 <= e.ci_high {
                covered += 1;
            }
        }
        assert!(covered as f64 >= 0.93 * 500.0, "covered {covered}");
    }

    #[test]
    fn distinct_points_are_uncorrelated() {
        use rand::Rng;
        let n = 100_000usize;
        let a: Vec<f64> = {
            let mut r = chunk_rng(7, 0, 0);
            (0..n).map(|_| if r.random::<f64>() < 0.5 { 1.0 } else { 0.0 }).collect()
        };
        let b: Vec<f64> = {
            let mut r = chunk_rng(7, 1, 0);
            (0..n).map(|_| if r.random::<f64>() < 0.5 { 1.0 } else { 0.0 }).collect()
        };
        let ma = a.iter().sum::<f64>() / n as f64;
        let mb = b.iter().sum::<f64>() / n as f64;
        let cov: f64 = a.iter().zip(&b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / n as f64;
        let corr = cov / ((ma * (1.0 - ma)) * (mb * (1.0 - mb))).sqrt();
        assert!(corr.abs() < 0.01, "corr {corr}");
    }

    #[test]
    fn estimates_in_range() {
        let s = McSettings::new(10_000, 3);
        for db in [0.0, 20.0, 40.0] {
            let c = table_one(db);
            for role in [SignalRole::Strong, SignalRole::Weak] {
                let o = mc_outage(&c, SignalIndex::GROUP1, role, &s).unwrap();
                assert!((0.0..=1.0).contains(&o.mean) && o.ci_low <= o.mean && o.mean <= o.ci_high);
                let r = mc_ergodic(&c, SignalIndex::GROUP1, role, &s).unwrap();
                assert!(r.mean >= 0.0);
            }
        }
    }
}
