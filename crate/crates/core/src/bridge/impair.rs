//! Seeded packet loss, latency and jitter.
//!
//! Each submitted packet consumes exactly two uniform draws from a ChaCha8
//! stream keyed by the link seed (loss, then jitter), so a run is reproducible
//! from the seed whether or not a packet survives.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("invalid link parameters: {0}")]
pub struct LinkParamsError(&'static str);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinkParams {
    pub loss_prob: f64,
    pub latency_ms: f64,
    pub jitter_ms: f64,
    pub seed: u64,
}

impl Default for LinkParams {
    fn default() -> Self {
        Self {
            loss_prob: 0.0,
            latency_ms: 0.0,
            jitter_ms: 0.0,
            seed: 0,
        }
    }
}

impl LinkParams {
    pub fn validate(&self) -> Result<(), LinkParamsError> {
        if !(0.0..=1.0).contains(&self.loss_prob) {
            return Err(LinkParamsError("loss_prob must be in [0, 1]"));
        }
        if !(self.latency_ms >= 0.0 && self.jitter_ms >= 0.0) {
            return Err(LinkParamsError("latency and jitter must be non-negative"));
        }
        Ok(())
    }

    pub fn is_ideal(&self) -> bool {
        self.loss_prob == 0.0 && self.latency_ms == 0.0 && self.jitter_ms == 0.0
    }

    /// Same impairment with an independent seed for one numbered link.
    pub fn for_link(&self, link: u64) -> LinkParams {
        LinkParams {
            seed: self.seed ^ link.wrapping_mul(0x9E37_79B9_7F4A_7C15),
            ..*self
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimedPacket<T> {
    pub t_us: u64,
    pub payload: T,
}

/// Incremental form: packets are submitted at their send time and polled out
/// once the clock reaches their delivery time.
#[derive(Debug, Clone)]
pub struct LinkImpairer<T> {
    params: LinkParams,
    rng: ChaCha8Rng,
    pending: Vec<(u64, u64, T)>,
    submitted: u64,
    dropped: u64,
}

impl<T> LinkImpairer<T> {
    pub fn new(params: LinkParams) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(params.seed),
            params,
            pending: Vec::new(),
            submitted: 0,
            dropped: 0,
        }
    }

    /// Returns the delivery time, or `None` if the packet was lost.
    pub fn submit(&mut self, t_us: u64, payload: T) -> Option<u64> {
        let loss_draw: f64 = self.rng.random();
        let jitter_draw: f64 = self.rng.random();
        let order = self.submitted;
        self.submitted += 1;
        if loss_draw < self.params.loss_prob {
            self.dropped += 1;
            return None;
        }
        let delay_ms = self.params.latency_ms + jitter_draw * self.params.jitter_ms;
        let deliver = t_us + (delay_ms * 1000.0).round() as u64;
        self.pending.push((deliver, order, payload));
        Some(deliver)
    }

    /// Removes and returns every packet due at or before `now_us`, ordered by
    /// delivery time (ties by submission order).
    pub fn poll(&mut self, now_us: u64) -> Vec<TimedPacket<T>> {
        if self.pending.is_empty() {
            return Vec::new();
        }
        let (mut due, rest): (Vec<_>, Vec<_>) =
            self.pending.drain(..).partition(|(t, _, _)| *t <= now_us);
        self.pending = rest;
        due.sort_by_key(|(t, order, _)| (*t, *order));
        due.into_iter()
            .map(|(t_us, _, payload)| TimedPacket { t_us, payload })
            .collect()
    }

    pub fn in_flight(&self) -> usize {
        self.pending.len()
    }

    pub fn dropped(&self) -> u64 {
        self.dropped
    }

    pub fn submitted(&self) -> u64 {
        self.submitted
    }
}

/// Batch form over a whole stream with non-decreasing send times. Output
/// timestamps are delivery times, in delivery order.
pub fn link_impair<T>(stream: Vec<TimedPacket<T>>, params: &LinkParams) -> Vec<TimedPacket<T>> {
    let mut link = LinkImpairer::new(*params);
    for p in stream {
        link.submit(p.t_us, p.payload);
    }
    link.poll(u64::MAX)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stream(n: u64) -> Vec<TimedPacket<u64>> {
        (0..n)
            .map(|i| TimedPacket {
                t_us: i * 10_000,
                payload: i,
            })
            .collect()
    }

    #[test]
    fn pure_delay() {
        let params = LinkParams {
            latency_ms: 25.0,
            ..Default::default()
        };
        let out = link_impair(stream(100), &params);
        assert_eq!(out.len(), 100);
        for (i, p) in out.iter().enumerate() {
            assert_eq!(p.payload, i as u64);
            assert_eq!(p.t_us, i as u64 * 10_000 + 25_000);
        }
    }

    #[test]
    fn total_loss() {
        let params = LinkParams {
            loss_prob: 1.0,
            ..Default::default()
        };
        assert!(link_impair(stream(1000), &params).is_empty());
    }

    /// Direct binomial simulation with an independent generator.
    fn binomial_survivors(n: u64, p: f64, seed: u64) -> u64 {
        let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
        (0..n).filter(|_| rng.random::<f64>() >= p).count() as u64
    }

    #[test]
    fn five_percent_loss_within_binomial_bounds() {
        let params = LinkParams {
            loss_prob: 0.05,
            latency_ms: 50.0,
            jitter_ms: 10.0,
            seed: 77,
        };
        let delivered = link_impair(stream(10_000), &params).len() as u64;
        assert!((9_400..=9_600).contains(&delivered), "{delivered}");
        // sigma = sqrt(n p (1-p)) ~ 21.8, so the window is about +-4.6 sigma.
        let sigma = (10_000.0f64 * 0.05 * 0.95).sqrt();
        assert!((100.0 / sigma - 4.59).abs() < 0.01);
        for seed in 0..20 {
            let s = binomial_survivors(10_000, 0.05, seed);
            assert!((9_400..=9_600).contains(&s));
        }
    }

    #[test]
    fn jitter_reorders_but_preserves_bounds() {
        let params = LinkParams {
            latency_ms: 5.0,
            jitter_ms: 30.0,
            seed: 3,
            ..Default::default()
        };
        let out = link_impair(stream(500), &params);
        assert_eq!(out.len(), 500);
        assert!(out.windows(2).all(|w| w[0].t_us <= w[1].t_us));
        assert!(out.windows(2).any(|w| w[0].payload > w[1].payload));
        for p in &out {
            let sent = p.payload * 10_000;
            assert!(p.t_us >= sent + 5_000 && p.t_us <= sent + 35_000);
        }
    }

    #[test]
    fn reproducible_with_seed() {
        let params = LinkParams {
            loss_prob: 0.2,
            latency_ms: 10.0,
            jitter_ms: 20.0,
            seed: 99,
        };
        assert_eq!(
            link_impair(stream(2000), &params),
            link_impair(stream(2000), &params)
        );
        let other = LinkParams {
            seed: 100,
            ..params
        };
        assert_ne!(
            link_impair(stream(2000), &params),
            link_impair(stream(2000), &other)
        );
    }

    #[test]
    fn incremental_poll() {
        let mut link = LinkImpairer::new(LinkParams {
            latency_ms: 20.0,
            ..Default::default()
        });
        assert_eq!(link.submit(0, 'a'), Some(20_000));
        assert_eq!(link.submit(10_000, 'b'), Some(30_000));
        assert!(link.poll(19_999).is_empty());
        assert_eq!(link.poll(25_000).len(), 1);
        assert_eq!(link.in_flight(), 1);
        assert_eq!(link.poll(30_000)[0].payload, 'b');
    }

    #[test]
    fn validation() {
        assert!(LinkParams {
            loss_prob: 1.5,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(LinkParams {
            jitter_ms: -1.0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(LinkParams::default().validate().is_ok());
    }
}
