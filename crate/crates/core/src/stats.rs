//! Normalized correlation estimators, the closed-form model and the
//! Cauchy–Schwarz nonclassicality test.

use crate::error::{Error, Result};
use crate::Channel;

/// Counting statistics accumulated over trials.
///
/// `n12` is the trial-wise coincidence sum Σ n₁n₂ and `n*_pairs` the
/// within-channel factorial moments Σ n(n−1), so merging is field-wise addition.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct CountRecord {
    pub n_trials: u64,
    pub n1: u64,
    pub n2: u64,
    pub n12: u64,
    pub n1_pairs: u64,
    pub n2_pairs: u64,
    /// Trials with two or more Stokes detections.
    pub n1_multi: u64,
}

impl CountRecord {
    #[inline]
    pub fn add_trial(&mut self, n1: u64, n2: u64) {
        self.n_trials += 1;
        self.n1 += n1;
        self.n2 += n2;
        self.n12 += n1 * n2;
        self.n1_pairs += n1 * n1.saturating_sub(1);
        self.n2_pairs += n2 * n2.saturating_sub(1);
        self.n1_multi += u64::from(n1 >= 2);
    }

    pub fn merge(&mut self, other: &CountRecord) {
        self.n_trials += other.n_trials;
        self.n1 += other.n1;
        self.n2 += other.n2;
        self.n12 += other.n12;
        self.n1_pairs += other.n1_pairs;
        self.n2_pairs += other.n2_pairs;
        self.n1_multi += other.n1_multi;
    }

    pub fn merged(mut self, other: &CountRecord) -> CountRecord {
        self.merge(other);
        self
    }

    pub fn singles(&self, channel: Channel) -> u64 {
        match channel {
            Channel::Stokes => self.n1,
            Channel::AntiStokes => self.n2,
        }
    }

    pub fn pairs(&self, channel: Channel) -> u64 {
        match channel {
            Channel::Stokes => self.n1_pairs,
            Channel::AntiStokes => self.n2_pairs,
        }
    }

    /// Mean detections per trial.
    pub fn rate(&self, channel: Channel) -> f64 {
        self.singles(channel) as f64 / self.n_trials as f64
    }

    /// Checks singles against the dead-time ceiling: a window of length `T`
    /// holds at most `floor(T / dead_time) + 1` detections.
    pub fn within_ceiling(&self, windows: [f64; 2], dead_times: [f64; 2]) -> bool {
        [(self.n1, 0), (self.n2, 1)].into_iter().all(|(n, i)| {
            if dead_times[i] <= 0.0 {
                return true;
            }
            let per_window = (windows[i] / dead_times[i]).floor() + 1.0;
            n as f64 <= self.n_trials as f64 * per_window
        })
    }
}

/// A normalized correlation with its 1σ error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationEstimate {
    pub g: f64,
    pub sigma: f64,
    /// (coincidences or pairs, first singles, second singles)
    pub counts_used: (u64, u64, u64),
    /// Set when the numerator count was zero and a count of one was
    /// substituted to size the error bar.
    pub low_statistics: bool,
}

/// `g12 = N12 · n / (N1 · N2)` with `σ = g √(1/N12 + 1/N1 + 1/N2)`.
pub fn g2_cross(record: &CountRecord) -> Result<CorrelationEstimate> {
    if record.n1 == 0 {
        return Err(Error::EmptyChannel(Channel::Stokes));
    }
    if record.n2 == 0 {
        return Err(Error::EmptyChannel(Channel::AntiStokes));
    }
    let (n1, n2, n12) = (record.n1 as f64, record.n2 as f64, record.n12 as f64);
    let n = record.n_trials as f64;
    let counts_used = (record.n12, record.n1, record.n2);
    if record.n12 == 0 {
        // size the error bar as if a single coincidence had been seen
        let g1 = n / (n1 * n2);
        return Ok(CorrelationEstimate {
            g: 0.0,
            sigma: g1 * (1.0 + 1.0 / n1 + 1.0 / n2).sqrt(),
            counts_used,
            low_statistics: true,
        });
    }
    let g = n12 * n / (n1 * n2);
    Ok(CorrelationEstimate {
        g,
        sigma: g * (1.0 / n12 + 1.0 / n1 + 1.0 / n2).sqrt(),
        counts_used,
        low_statistics: false,
    })
}

/// `g_ii = Σ n(n−1) · n_trials / N²` from number-resolved trial records.
///
/// The error treats the number of unordered pairs `Σ n(n−1)/2` and the singles
/// as Poisson: `σ = g √(2/N_pairs + 4/N)`.
pub fn g2_auto(record: &CountRecord, channel: Channel) -> Result<CorrelationEstimate> {
    let singles = record.singles(channel);
    if singles == 0 {
        return Err(Error::EmptyChannel(channel));
    }
    let pairs = record.pairs(channel);
    let n = record.n_trials as f64;
    let s = singles as f64;
    let counts_used = (pairs, singles, singles);
    if pairs == 0 {
        let g1 = 2.0 * n / (s * s);
        return Ok(CorrelationEstimate {
            g: 0.0,
            sigma: g1 * (1.0 + 4.0 / s).sqrt(),
            counts_used,
            low_statistics: true,
        });
    }
    let p = pairs as f64;
    let g = p * n / (s * s);
    Ok(CorrelationEstimate {
        g,
        sigma: g * (2.0 / p + 4.0 / s).sqrt(),
        counts_used,
        low_statistics: false,
    })
}

/// Parameters of the closed-form cross-correlation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Mean excitations per write pulse.
    pub p: f64,
    pub eta_ret: f64,
    /// Overall Stokes detection efficiency.
    pub eta1: f64,
    /// Overall anti-Stokes detection efficiency.
    pub eta2: f64,
    /// Expected background detections per pulse.
    pub b1: f64,
    pub b2: f64,
}

impl ModelParams {
    fn validate(&self) -> Result<()> {
        if !(self.p >= 0.0) || !self.p.is_finite() {
            return Err(Error::domain("excitation probability", self.p));
        }
        for (what, v) in [
            ("retrieval efficiency", self.eta_ret),
            ("Stokes efficiency", self.eta1),
            ("anti-Stokes efficiency", self.eta2),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::domain(what, v));
            }
        }
        for (what, v) in [("Stokes background", self.b1), ("anti-Stokes background", self.b2)] {
            if !(v >= 0.0) || v.is_nan() {
                return Err(Error::domain(what, v));
            }
        }
        Ok(())
    }

    /// Mean Stokes detections per trial.
    pub fn stokes_rate(&self) -> f64 {
        self.p * self.eta1 + self.b1
    }

    /// Mean anti-Stokes detections per trial.
    pub fn antistokes_rate(&self) -> f64 {
        self.p * self.eta_ret * self.eta2 + self.b2
    }

    /// ⟨n₁n₂⟩ per trial.
    pub fn coincidence_rate(&self) -> f64 {
        let s1 = self.p * self.eta1;
        let s2 = self.p * self.eta_ret * self.eta2;
        self.eta1 * self.eta_ret * self.eta2 * (2.0 * self.p * self.p + self.p)
            + s1 * self.b2
            + self.b1 * s2
            + self.b1 * self.b2
    }
}

/// Closed-form g⁽²⁾₁,₂ of the trial model without dead time.
///
/// With Bose–Einstein excitation number (⟨m²⟩ = 2p² + p), independent
/// binomial losses and independent Poisson backgrounds,
/// `⟨n₁n₂⟩ = η₁η_rη₂(2p² + p) + pη₁b₂ + b₁pη_rη₂ + b₁b₂`, normalized by the
/// product of the singles rates. Infinite backgrounds give the limit 1.
pub fn analytic_g2(params: &ModelParams) -> Result<f64> {
    params.validate()?;
    if params.b1.is_infinite() || params.b2.is_infinite() {
        return Ok(1.0);
    }
    let s1 = params.stokes_rate();
    let s2 = params.antistokes_rate();
    if s1 == 0.0 || s2 == 0.0 {
        return Err(Error::InvalidArgument("g12 undefined with an empty channel".into()));
    }
    Ok(params.coincidence_rate() / (s1 * s2))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CauchySchwarz {
    /// `g12² / (g11 · g22)`; infinite when an auto-correlation is zero.
    pub r: f64,
    pub sigma_r: f64,
    /// `R > 1`.
    pub nonclassical: bool,
    /// `(R − 1) / σ_R`.
    pub confidence_sigmas: f64,
    /// `g12 > 2`, the test that assumes thermal auto-correlations.
    pub shortcut_nonclassical: bool,
    /// An auto-correlation estimate was zero, so R could not be formed.
    pub undetermined: bool,
}

impl CauchySchwarz {
    /// Violation established with at least `sigmas` standard deviations.
    pub fn nonclassical_at(&self, sigmas: f64) -> bool {
        self.nonclassical && !self.undetermined && self.confidence_sigmas >= sigmas
    }
}

pub fn cauchy_schwarz(
    g12: &CorrelationEstimate,
    g11: &CorrelationEstimate,
    g22: &CorrelationEstimate,
) -> CauchySchwarz {
    let shortcut_nonclassical = g12.g > 2.0;
    if g11.g <= 0.0 || g22.g <= 0.0 {
        return CauchySchwarz {
            r: f64::INFINITY,
            sigma_r: f64::INFINITY,
            nonclassical: false,
            confidence_sigmas: 0.0,
            shortcut_nonclassical,
            undetermined: true,
        };
    }
    let r = g12.g * g12.g / (g11.g * g22.g);
    let rel = |e: &CorrelationEstimate| if e.g > 0.0 { e.sigma / e.g } else { 0.0 };
    let sigma_r = if g12.g > 0.0 {
        r * (4.0 * rel(g12).powi(2) + rel(g11).powi(2) + rel(g22).powi(2)).sqrt()
    } else {
        // R = 0: first-order term from g12 alone
        2.0 * g12.g * g12.sigma / (g11.g * g22.g)
    };
    let confidence_sigmas = if sigma_r > 0.0 {
        (r - 1.0) / sigma_r
    } else if r > 1.0 {
        f64::INFINITY
    } else if r < 1.0 {
        f64::NEG_INFINITY
    } else {
        0.0
    };
    CauchySchwarz {
        r,
        sigma_r,
        nonclassical: r > 1.0,
        confidence_sigmas,
        shortcut_nonclassical,
        undetermined: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn est(g: f64, sigma: f64) -> CorrelationEstimate {
        CorrelationEstimate {
            g,
            sigma,
            counts_used: (0, 0, 0),
            low_statistics: false,
        }
    }

    #[test]
    fn cross_arithmetic() {
        let r = CountRecord {
            n_trials: 100,
            n1: 10,
            n2: 10,
            n12: 10,
            ..Default::default()
        };
        let e = g2_cross(&r).unwrap();
        assert_eq!(e.g, 10.0);
        assert!((e.sigma - 10.0 * (0.3f64).sqrt()).abs() < 1e-12);
        assert!(!e.low_statistics);
    }

    #[test]
    fn cross_empty_and_starved() {
        let r = CountRecord {
            n_trials: 100,
            n1: 0,
            n2: 5,
            ..Default::default()
        };
        assert_eq!(g2_cross(&r), Err(Error::EmptyChannel(Channel::Stokes)));
        let r = CountRecord {
            n_trials: 1000,
            n1: 10,
            n2: 5,
            n12: 0,
            ..Default::default()
        };
        let e = g2_cross(&r).unwrap();
        assert_eq!(e.g, 0.0);
        assert!(e.low_statistics && e.sigma > 0.0);
    }

    #[test]
    fn auto_starved() {
        let r = CountRecord {
            n_trials: 1000,
            n1: 10,
            n2: 5,
            ..Default::default()
        };
        let e = g2_auto(&r, Channel::Stokes).unwrap();
        assert_eq!(e.g, 0.0);
        assert!(e.low_statistics);
        let empty = CountRecord {
            n_trials: 10,
            ..Default::default()
        };
        assert_eq!(
            g2_auto(&empty, Channel::AntiStokes),
            Err(Error::EmptyChannel(Channel::AntiStokes))
        );
    }

    #[test]
    fn analytic_limits() {
        for p in [0.01, 0.1, 0.25, 1.0] {
            for (eta1, eta2) in [(0.3, 0.1), (1.0, 1.0), (0.03, 0.5)] {
                let g = analytic_g2(&ModelParams {
                    p,
                    eta_ret: 0.4,
                    eta1,
                    eta2,
                    b1: 0.0,
                    b2: 0.0,
                })
                .unwrap();
                assert!((g - (2.0 + 1.0 / p)).abs() < 1e-12 * g);
            }
        }
        let g = analytic_g2(&ModelParams {
            p: 0.2,
            eta_ret: 0.0,
            eta1: 0.3,
            eta2: 0.5,
            b1: 0.01,
            b2: 0.02,
        })
        .unwrap();
        assert_eq!(g, 1.0);
        let big = analytic_g2(&ModelParams {
            p: 0.2,
            eta_ret: 0.5,
            eta1: 0.3,
            eta2: 0.5,
            b1: 1e9,
            b2: 1e9,
        })
        .unwrap();
        assert!((big - 1.0).abs() < 1e-9);
        let inf = ModelParams {
            p: 0.2,
            eta_ret: 0.5,
            eta1: 0.3,
            eta2: 0.5,
            b1: f64::INFINITY,
            b2: f64::INFINITY,
        };
        assert_eq!(analytic_g2(&inf).unwrap(), 1.0);
        assert!(analytic_g2(&ModelParams { p: -1.0, ..inf }).is_err());
    }

    #[test]
    fn cauchy_schwarz_examples() {
        let cs = cauchy_schwarz(&est(2.0, 0.1), &est(2.0, 0.1), &est(2.0, 0.1));
        assert_eq!(cs.r, 1.0);
        assert!(!cs.nonclassical);
        let cs = cauchy_schwarz(&est(6.0, 0.3), &est(2.0, 0.1), &est(2.0, 0.1));
        assert_eq!(cs.r, 9.0);
        assert!(cs.nonclassical && cs.shortcut_nonclassical);
        let cs = cauchy_schwarz(&est(1.3, 0.1), &est(2.0, 0.1), &est(2.0, 0.1));
        assert!(cs.r < 1.0 && !cs.nonclassical && !cs.shortcut_nonclassical);
        let cs = cauchy_schwarz(&est(1.3, 0.1), &est(0.0, 0.1), &est(2.0, 0.1));
        assert!(cs.undetermined && !cs.nonclassical_at(3.0));
    }

    #[test]
    fn ceiling_check() {
        let r = CountRecord {
            n_trials: 10,
            n1: 130,
            n2: 10,
            ..Default::default()
        };
        // 1 μs / 80 ns -> at most 13 per window
        assert!(r.within_ceiling([1e-6, 1e-6], [80e-9, 80e-9]));
        let over = CountRecord { n1: 131, ..r };
        assert!(!over.within_ceiling([1e-6, 1e-6], [80e-9, 80e-9]));
    }

    fn arb_record() -> impl Strategy<Value = CountRecord> {
        proptest::collection::vec((0u64..4, 0u64..4), 1..50).prop_map(|trials| {
            let mut r = CountRecord::default();
            for (a, b) in trials {
                r.add_trial(a, b);
            }
            r
        })
    }

    proptest! {
        #[test]
        fn merge_is_commutative_and_associative(a in arb_record(), b in arb_record(), c in arb_record()) {
            prop_assert_eq!(a.merged(&b), b.merged(&a));
            prop_assert_eq!(a.merged(&b).merged(&c), a.merged(&b.merged(&c)));
        }

        #[test]
        fn merged_g2_equals_concatenated(x in proptest::collection::vec((0u64..4, 0u64..4), 1..60),
                                         y in proptest::collection::vec((0u64..4, 0u64..4), 1..60)) {
            let mut a = CountRecord::default();
            let mut b = CountRecord::default();
            let mut all = CountRecord::default();
            for &(n1, n2) in &x { a.add_trial(n1, n2); all.add_trial(n1, n2); }
            for &(n1, n2) in &y { b.add_trial(n1, n2); all.add_trial(n1, n2); }
            prop_assume!(all.n1 > 0 && all.n2 > 0);
            prop_assert_eq!(g2_cross(&a.merged(&b)).unwrap(), g2_cross(&all).unwrap());
        }

        #[test]
        fn zero_background_efficiency_invariance(p in 0.001f64..2.0, eta_ret in 0.01f64..=1.0,
                                                 eta1 in 0.01f64..=1.0, eta2 in 0.01f64..=1.0, k in 0.01f64..=1.0) {
            let base = ModelParams { p, eta_ret, eta1, eta2, b1: 0.0, b2: 0.0 };
            let g = analytic_g2(&base).unwrap();
            let g_scaled = analytic_g2(&ModelParams { eta1: eta1 * k, eta2: eta2 * k, ..base }).unwrap();
            prop_assert!((g - g_scaled).abs() <= 1e-10 * g);
        }
    }
}
