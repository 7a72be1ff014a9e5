//! The stochastic write/store/read trial.
//!
//! Each trial draws the number of spin-wave excitations created by the write
//! pulse from a Bose–Einstein law, emits one Stokes photon per excitation,
//! retrieves each excitation independently during the read pulse, applies
//! binomial losses on both channels, adds Poisson backgrounds, and finally
//! runs every channel through a non-paralyzable detector dead time.

use rand::Rng;
use rand_distr::{Binomial, Distribution, Geometric, Poisson};
use rayon::prelude::*;

use crate::config::{fraction, ExperimentConfig};
use crate::decoherence::{retrieval_efficiency, DecoherenceBudget};
use crate::error::{Error, Result};
use crate::rng::{block_stream, TRIAL_BLOCK};
use crate::stats::CountRecord;
use crate::Channel;

/// Background levels, each the expected number of detections per pulse.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseRates {
    pub crf_stokes_window: f64,
    pub crf_antistokes_window: f64,
    pub leakage_stokes: f64,
    pub leakage_antistokes: f64,
    /// Spectral CRF weights scale as `pressure^exponent`.
    pub crf_pressure_exponent: f64,
}

impl NoiseRates {
    pub fn zero() -> Self {
        NoiseRates {
            crf_stokes_window: 0.0,
            crf_antistokes_window: 0.0,
            leakage_stokes: 0.0,
            leakage_antistokes: 0.0,
            crf_pressure_exponent: 1.0,
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        for (field, v) in [
            ("NoiseRates.crf_stokes_window", self.crf_stokes_window),
            ("NoiseRates.crf_antistokes_window", self.crf_antistokes_window),
            ("NoiseRates.leakage_stokes", self.leakage_stokes),
            ("NoiseRates.leakage_antistokes", self.leakage_antistokes),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::validation(field, format!("must be >= 0, got {v}")));
            }
        }
        if !self.crf_pressure_exponent.is_finite() {
            return Err(Error::validation("NoiseRates.crf_pressure_exponent", "must be finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EventLabel {
    Signal,
    Crf,
    Leakage,
    Dark,
}

impl EventLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            EventLabel::Signal => "signal",
            EventLabel::Crf => "crf",
            EventLabel::Leakage => "leakage",
            EventLabel::Dark => "dark",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    /// Seconds from the start of the pulse window.
    pub timestamp: f64,
    pub label: EventLabel,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrialOutcome {
    pub stokes_events: Vec<Event>,
    pub antistokes_events: Vec<Event>,
    pub true_excitations: u64,
    pub retrieved: u64,
}

impl TrialOutcome {
    pub fn events(&self, channel: Channel) -> &[Event] {
        match channel {
            Channel::Stokes => &self.stokes_events,
            Channel::AntiStokes => &self.antistokes_events,
        }
    }

    pub fn signal_count(&self, channel: Channel) -> usize {
        self.events(channel)
            .iter()
            .filter(|e| e.label == EventLabel::Signal)
            .count()
    }

    fn clear(&mut self) {
        self.stokes_events.clear();
        self.antistokes_events.clear();
        self.true_excitations = 0;
        self.retrieved = 0;
    }
}

/// Number of excitations `m` from the write pulse and the Stokes photons emitted with them.
pub fn sample_write<R: Rng + ?Sized>(p: f64, rng: &mut R) -> Result<(u64, u64)> {
    if !(p >= 0.0) || !p.is_finite() {
        return Err(Error::domain("excitation probability", p));
    }
    if p == 0.0 {
        return Ok((0, 0));
    }
    let m = bose_einstein(p)?.sample(rng);
    Ok((m, m))
}

// P(m) = p^m / (1+p)^(m+1): failures before the first success at rate 1/(1+p).
fn bose_einstein(p: f64) -> Result<Geometric> {
    Geometric::new(1.0 / (1.0 + p)).map_err(|_| Error::domain("excitation probability", p))
}

/// Excitations converted to anti-Stokes photons during the read pulse.
pub fn sample_read<R: Rng + ?Sized>(m: u64, eta_ret: f64, rng: &mut R) -> Result<u64> {
    thin(m, eta_ret, rng)
}

/// Binomial thinning: each of `count` photons survives with probability `efficiency`.
pub fn thin<R: Rng + ?Sized>(count: u64, efficiency: f64, rng: &mut R) -> Result<u64> {
    if !(0.0..=1.0).contains(&efficiency) {
        return Err(Error::domain("efficiency", efficiency));
    }
    Ok(thin_unchecked(count, efficiency, rng))
}

#[inline]
fn thin_unchecked<R: Rng + ?Sized>(count: u64, efficiency: f64, rng: &mut R) -> u64 {
    if count == 0 || efficiency == 0.0 {
        return 0;
    }
    if efficiency == 1.0 {
        return count;
    }
    if count == 1 {
        return u64::from(rng.random::<f64>() < efficiency);
    }
    Binomial::new(count, efficiency)
        .expect("efficiency checked by caller")
        .sample(rng)
}

/// Poisson background events with uniform timestamps over `[0, window)`.
pub fn add_background<R: Rng + ?Sized>(
    window: f64,
    expected: f64,
    label: EventLabel,
    rng: &mut R,
) -> Result<Vec<Event>> {
    if !(window > 0.0) {
        return Err(Error::domain("background window", window));
    }
    if !(expected >= 0.0) || !expected.is_finite() {
        return Err(Error::domain("expected background count", expected));
    }
    if expected == 0.0 {
        return Ok(Vec::new());
    }
    let n = poisson(expected).sample(rng) as usize;
    Ok((0..n)
        .map(|_| Event {
            timestamp: rng.random::<f64>() * window,
            label,
        })
        .collect())
}

fn poisson(mean: f64) -> Poisson<f64> {
    Poisson::new(mean).expect("positive finite Poisson mean")
}

/// Non-paralyzable dead time: keeps an event iff it is at least `dead_time`
/// after the previously kept one.
pub fn dead_time_filter(events: &[Event], dead_time: f64) -> Result<Vec<Event>> {
    if events.windows(2).any(|w| w[1].timestamp < w[0].timestamp) {
        return Err(Error::UnsortedEvents);
    }
    let mut kept = events.to_vec();
    apply_dead_time(&mut kept, dead_time);
    Ok(kept)
}

// In-place greedy scan over a sorted list.
fn apply_dead_time(events: &mut Vec<Event>, dead_time: f64) {
    if events.len() < 2 || dead_time <= 0.0 {
        return;
    }
    let mut last = events[0].timestamp;
    let mut write = 1;
    for read in 1..events.len() {
        let e = events[read];
        if e.timestamp >= last + dead_time {
            last = e.timestamp;
            events[write] = e;
            write += 1;
        }
    }
    events.truncate(write);
}

/// Labelled Poisson background for one channel.
///
/// Draws the total count from the summed mean and labels each event with
/// probability proportional to its source's mean, which has the same law as
/// independent per-source Poisson draws and costs a single draw per pulse.
#[derive(Debug, Clone)]
struct BackgroundSource {
    total: Option<Poisson<f64>>,
    // cumulative label thresholds over [0, 1)
    crf_cut: f64,
    leakage_cut: f64,
}

impl BackgroundSource {
    fn new(crf: f64, leakage: f64, dark: f64) -> Self {
        let total = crf + leakage + dark;
        if total <= 0.0 {
            return BackgroundSource {
                total: None,
                crf_cut: 0.0,
                leakage_cut: 0.0,
            };
        }
        BackgroundSource {
            total: Some(poisson(total)),
            crf_cut: crf / total,
            leakage_cut: (crf + leakage) / total,
        }
    }

    #[inline]
    fn sample_into<R: Rng + ?Sized>(&self, window: f64, rng: &mut R, out: &mut Vec<Event>) {
        let Some(dist) = &self.total else { return };
        let n = dist.sample(rng) as usize;
        for _ in 0..n {
            let u: f64 = rng.random();
            let label = if u < self.crf_cut {
                EventLabel::Crf
            } else if u < self.leakage_cut {
                EventLabel::Leakage
            } else {
                EventLabel::Dark
            };
            out.push(Event {
                timestamp: rng.random::<f64>() * window,
                label,
            });
        }
    }
}

/// Per-delay sampling parameters, precomputed from a config.
#[derive(Debug, Clone)]
pub struct TrialModel {
    excitation: Option<Geometric>,
    stokes_efficiency: f64,
    antistokes_efficiency: f64,
    retrieval: f64,
    write_window: f64,
    read_window: f64,
    stokes_dead_time: f64,
    antistokes_dead_time: f64,
    stokes_background: BackgroundSource,
    antistokes_background: BackgroundSource,
}

impl TrialModel {
    /// `delay` is the storage time between the end of write and the start of read.
    pub fn new(config: &ExperimentConfig, delay: f64) -> Result<Self> {
        if !(delay >= 0.0) || !delay.is_finite() {
            return Err(Error::domain("storage delay", delay));
        }
        let budget = DecoherenceBudget::from_config(config)?;
        let retrieval = retrieval_efficiency(delay, &budget, config.intrinsic_retrieval_efficiency)?;
        Self::with_retrieval(config, retrieval)
    }

    /// Same as [`TrialModel::new`] with the retrieval efficiency given directly.
    pub fn with_retrieval(config: &ExperimentConfig, retrieval: f64) -> Result<Self> {
        config.validate()?;
        fraction("retrieval efficiency", retrieval)?;
        let p = config.excitation_probability;
        let excitation = if p > 0.0 { Some(bose_einstein(p)?) } else { None };
        let n = &config.noise;
        Ok(TrialModel {
            excitation,
            stokes_efficiency: config.stokes_chain.overall_efficiency(),
            antistokes_efficiency: config.antistokes_chain.overall_efficiency(),
            retrieval,
            write_window: config.pulses.write_duration,
            read_window: config.pulses.read_duration,
            stokes_dead_time: config.stokes_chain.dead_time,
            antistokes_dead_time: config.antistokes_chain.dead_time,
            stokes_background: BackgroundSource::new(
                n.crf_stokes_window,
                n.leakage_stokes,
                config.dark_expected(Channel::Stokes),
            ),
            antistokes_background: BackgroundSource::new(
                n.crf_antistokes_window,
                n.leakage_antistokes,
                config.dark_expected(Channel::AntiStokes),
            ),
        })
    }

    pub fn retrieval(&self) -> f64 {
        self.retrieval
    }

    /// Runs one trial into `out`, reusing its buffers.
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut TrialOutcome) {
        out.clear();
        let m = match &self.excitation {
            Some(dist) => dist.sample(rng),
            None => 0,
        };
        out.true_excitations = m;
        if m > 0 {
            let n1 = thin_unchecked(m, self.stokes_efficiency, rng);
            for _ in 0..n1 {
                out.stokes_events.push(Event {
                    timestamp: rng.random::<f64>() * self.write_window,
                    label: EventLabel::Signal,
                });
            }
            let r = thin_unchecked(m, self.retrieval, rng);
            out.retrieved = r;
            let n2 = thin_unchecked(r, self.antistokes_efficiency, rng);
            for _ in 0..n2 {
                out.antistokes_events.push(Event {
                    timestamp: rng.random::<f64>() * self.read_window,
                    label: EventLabel::Signal,
                });
            }
        }
        self.stokes_background
            .sample_into(self.write_window, rng, &mut out.stokes_events);
        self.antistokes_background
            .sample_into(self.read_window, rng, &mut out.antistokes_events);
        finish_channel(&mut out.stokes_events, self.stokes_dead_time);
        finish_channel(&mut out.antistokes_events, self.antistokes_dead_time);
    }

    /// Counting statistics for trials `[start, end)`, all inside block `block`.
    fn run_block(&self, seed: u64, block: u64, len: u64, scratch: &mut TrialOutcome) -> CountRecord {
        let mut rng = block_stream(seed, block);
        let mut record = CountRecord::default();
        for _ in 0..len {
            self.sample_into(&mut rng, scratch);
            record.add_trial(
                scratch.stokes_events.len() as u64,
                scratch.antistokes_events.len() as u64,
            );
        }
        record
    }

    /// Aggregated counts over `n_trials` trials; identical for any `workers`.
    pub fn run(&self, n_trials: u64, seed: u64, workers: usize) -> Result<CountRecord> {
        if n_trials == 0 {
            return Err(Error::InvalidArgument("n_trials must be at least 1".into()));
        }
        if workers == 0 {
            return Err(Error::InvalidArgument("workers must be at least 1".into()));
        }
        let blocks = n_trials.div_ceil(TRIAL_BLOCK);
        let block_len = |b: u64| TRIAL_BLOCK.min(n_trials - b * TRIAL_BLOCK);
        if workers == 1 {
            let mut scratch = TrialOutcome::default();
            let mut total = CountRecord::default();
            for b in 0..blocks {
                total.merge(&self.run_block(seed, b, block_len(b), &mut scratch));
            }
            return Ok(total);
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::InvalidArgument(format!("cannot start worker pool: {e}")))?;
        Ok(pool.install(|| {
            (0..blocks)
                .into_par_iter()
                .map_init(TrialOutcome::default, |scratch, b| {
                    self.run_block(seed, b, block_len(b), scratch)
                })
                .reduce(CountRecord::default, |mut a, b| {
                    a.merge(&b);
                    a
                })
        }))
    }

    /// Calls `f(trial_index, outcome)` for every trial in order; single-threaded.
    pub fn for_each_trial(&self, n_trials: u64, seed: u64, mut f: impl FnMut(u64, &TrialOutcome)) {
        let mut scratch = TrialOutcome::default();
        let blocks = n_trials.div_ceil(TRIAL_BLOCK);
        for b in 0..blocks {
            let mut rng = block_stream(seed, b);
            let len = TRIAL_BLOCK.min(n_trials - b * TRIAL_BLOCK);
            for i in 0..len {
                self.sample_into(&mut rng, &mut scratch);
                f(b * TRIAL_BLOCK + i, &scratch);
            }
        }
    }
}

#[inline]
fn finish_channel(events: &mut Vec<Event>, dead_time: f64) {
    if events.len() > 1 {
        events.sort_unstable_by(|a, b| a.timestamp.total_cmp(&b.timestamp));
        apply_dead_time(events, dead_time);
    }
}

/// One write/store/read cycle at storage delay `delay`.
pub fn simulate_trial<R: Rng + ?Sized>(config: &ExperimentConfig, delay: f64, rng: &mut R) -> Result<TrialOutcome> {
    let model = TrialModel::new(config, delay)?;
    let mut out = TrialOutcome::default();
    model.sample_into(rng, &mut out);
    Ok(out)
}

/// Counting statistics of `n_trials` trials at storage delay `delay`.
pub fn simulate_run(
    config: &ExperimentConfig,
    delay: f64,
    n_trials: u64,
    seed: u64,
    workers: usize,
) -> Result<CountRecord> {
    TrialModel::new(config, delay)?.run(n_trials, seed, workers)
}

/// Copy of `config` with the anti-Stokes signal path blocked while every
/// background source is kept: the fluorescence-tuned control measurement.
pub fn control_variant(config: &ExperimentConfig) -> ExperimentConfig {
    let mut c = config.clone();
    c.antistokes_chain.path_transmission = 0.0;
    c
}
