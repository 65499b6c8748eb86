//! One-way link emulation.
//!
//! A message first propagates (base delay plus a uniform jitter sample),
//! then drains through a FIFO bottleneck at `bandwidth_bps`. Because the
//! bottleneck is the last stage, delivered bits never outrun the cap, and
//! arrivals are forced monotone so delivery stays in order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Backlog above which a link counts as overloaded.
pub const BACKLOG_WARN_S: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LinkModel {
    pub base_delay_us: u64,
    /// Half-width of the uniform jitter.
    pub jitter_us: u64,
    pub bandwidth_bps: f64,
}

impl Default for LinkModel {
    fn default() -> Self {
        Self {
            base_delay_us: 2_000,
            jitter_us: 500,
            bandwidth_bps: 200e6,
        }
    }
}

impl LinkModel {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.bandwidth_bps > 0.0 && self.bandwidth_bps.is_finite()) {
            return Err(format!(
                "bandwidth_bps must be positive, got {}",
                self.bandwidth_bps
            ));
        }
        if self.jitter_us > self.base_delay_us {
            return Err(format!(
                "jitter_us {} exceeds base_delay_us {}",
                self.jitter_us, self.base_delay_us
            ));
        }
        Ok(())
    }

    pub fn serialization_us(&self, bytes: usize) -> f64 {
        bytes as f64 * 8.0 * 1e6 / self.bandwidth_bps
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LinkStats {
    pub messages: u64,
    pub bytes: u64,
    /// Longest wait behind earlier traffic, in microseconds.
    pub max_queue_us: u64,
    /// Messages that found more than [`BACKLOG_WARN_S`] of backlog.
    pub overloaded: u64,
}

/// Stateful link: FIFO state plus its own jitter stream.
#[derive(Debug, Clone)]
pub struct Link {
    model: LinkModel,
    rng: ChaCha8Rng,
    last_arrival_us: f64,
    busy_until_us: f64,
    stats: LinkStats,
}

impl Link {
    pub fn new(model: LinkModel, seed: u64) -> Self {
        Self {
            model,
            rng: ChaCha8Rng::seed_from_u64(seed),
            last_arrival_us: 0.0,
            busy_until_us: 0.0,
            stats: LinkStats::default(),
        }
    }

    pub fn model(&self) -> &LinkModel {
        &self.model
    }

    pub fn stats(&self) -> &LinkStats {
        &self.stats
    }

    /// Sends `bytes` at `t_send_us`; returns the delivery time of the last byte.
    pub fn transfer(&mut self, bytes: usize, t_send_us: u64) -> u64 {
        let j = self.model.jitter_us as i64;
        let jitter = if j > 0 { self.rng.gen_range(-j..=j) } else { 0 };
        let arrival = (t_send_us as f64 + self.model.base_delay_us as f64 + jitter as f64)
            .max(self.last_arrival_us);
        self.last_arrival_us = arrival;
        let start = arrival.max(self.busy_until_us);
        let wait = start - arrival;
        if wait > BACKLOG_WARN_S * 1e6 {
            self.stats.overloaded += 1;
        }
        self.stats.max_queue_us = self.stats.max_queue_us.max(wait.ceil() as u64);
        self.busy_until_us = start + self.model.serialization_us(bytes);
        self.stats.messages += 1;
        self.stats.bytes += bytes as u64;
        self.busy_until_us.ceil() as u64
    }
}

/// Stateless single transfer on an idle link.
pub fn link_transfer(link: &LinkModel, bytes: usize, t_send_us: u64, seed: u64) -> u64 {
    Link::new(*link, seed).transfer(bytes, t_send_us)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ideal(bw: f64) -> LinkModel {
        LinkModel {
            base_delay_us: 0,
            jitter_us: 0,
            bandwidth_bps: bw,
        }
    }

    #[test]
    fn one_megabyte_at_eight_megabits() {
        assert_eq!(link_transfer(&ideal(8e6), 1_000_000, 0, 1), 1_000_000);
    }

    #[test]
    fn zero_bytes_costs_only_propagation() {
        let m = LinkModel {
            base_delay_us: 40_000,
            jitter_us: 0,
            bandwidth_bps: 1e6,
        };
        assert_eq!(link_transfer(&m, 0, 5, 1), 40_005);
    }

    #[test]
    fn fifo_queueing() {
        let mut l = Link::new(ideal(8e6), 1);
        // 1000 bytes = 1 ms each; three sent together finish at 1, 2, 3 ms.
        let d: Vec<u64> = (0..3).map(|_| l.transfer(1000, 0)).collect();
        assert_eq!(d, vec![1_000, 2_000, 3_000]);
        assert_eq!(l.stats().max_queue_us, 2_000);
        // After the queue drains the next message waits for nobody.
        assert_eq!(l.transfer(1000, 10_000), 11_000);
    }

    #[test]
    fn jitter_is_bounded_and_ordered() {
        let m = LinkModel {
            base_delay_us: 10_000,
            jitter_us: 5_000,
            bandwidth_bps: 1e12,
        };
        let mut l = Link::new(m, 9);
        let mut prev = 0;
        for k in 0..10_000u64 {
            let t = k * 1_000;
            let d = l.transfer(10, t);
            assert!(d >= prev);
            assert!(d + 1 >= t + 5_000 && d <= t + 15_001 + 1_000, "{k}: {d}");
            prev = d;
        }
    }

    #[test]
    fn same_seed_same_jitter() {
        let m = LinkModel::default();
        let run = |seed| {
            let mut l = Link::new(m, seed);
            (0..100)
                .map(|k| l.transfer(5_000, k * 10_000))
                .collect::<Vec<_>>()
        };
        assert_eq!(run(3), run(3));
        assert_ne!(run(3), run(4));
    }

    #[test]
    fn overload_is_counted_not_dropped() {
        let mut l = Link::new(ideal(1e6), 1);
        let mut last = 0;
        for _ in 0..100 {
            last = l.transfer(10_000, 0);
        }
        assert_eq!(l.stats().messages, 100);
        assert_eq!(last, 8_000_000);
        assert!(l.stats().overloaded > 0);
    }

    #[test]
    fn validation() {
        assert!(LinkModel::default().validate().is_ok());
        assert!(ideal(0.0).validate().is_err());
        assert!(ideal(f64::NAN).validate().is_err());
        let bad = LinkModel {
            base_delay_us: 1,
            jitter_us: 2,
            bandwidth_bps: 1.0,
        };
        assert!(bad.validate().is_err());
    }
}
