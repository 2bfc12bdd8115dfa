//! Sidelink time-frequency grid and semi-persistent reservation timing.
//!
//! A scheduling window spans `L` subframes of `T` ms each; every subframe
//! carries `K` subchannels of `B` Hz. Subchannels are indexed zero-based,
//! subframe-major: index `k` lives in subframe `k / K` at slot `k % K`.
//! Each subframe is one macro-vertex of the matching graph.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Release-14 reservation durations in seconds.
pub const DEFAULT_T_SPS_POOL_S: [f64; 3] = [1.0, 4.0, 8.0];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResourceGrid {
    #[serde(rename = "k_subchannels")]
    k: usize,
    #[serde(rename = "l_subframes")]
    l: usize,
    t_ms: f64,
    b_hz: f64,
}

impl ResourceGrid {
    pub fn new(k: usize, l: usize, t_ms: f64, b_hz: f64) -> Result<Self> {
        let grid = ResourceGrid { k, l, t_ms, b_hz };
        grid.validate()?;
        Ok(grid)
    }

    /// Grid with the 1 ms / 1.26 MHz subchannel geometry used throughout the evaluation.
    pub fn with_dims(k: usize, l: usize) -> Result<Self> {
        Self::new(k, l, 1.0, 1.26e6)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.l == 0 {
            return Err(Error::InvalidParameter(format!(
                "grid dimensions must be positive (K={}, L={})",
                self.k, self.l
            )));
        }
        if !(self.t_ms > 0.0 && self.t_ms.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "subframe duration must be positive, got {} ms",
                self.t_ms
            )));
        }
        if !(self.b_hz > 0.0 && self.b_hz.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "subchannel bandwidth must be positive, got {} Hz",
                self.b_hz
            )));
        }
        Ok(())
    }

    /// Subchannels per subframe.
    pub fn k(&self) -> usize {
        self.k
    }

    /// Subframes per window.
    pub fn l(&self) -> usize {
        self.l
    }

    pub fn t_ms(&self) -> f64 {
        self.t_ms
    }

    pub fn b_hz(&self) -> f64 {
        self.b_hz
    }

    pub fn total_subchannels(&self) -> usize {
        self.k * self.l
    }

    pub fn window_ms(&self) -> f64 {
        self.t_ms * self.l as f64
    }

    pub fn subframe_of(&self, subchannel: usize) -> Result<usize> {
        if subchannel >= self.total_subchannels() {
            return Err(Error::Range {
                index: subchannel,
                limit: self.total_subchannels(),
            });
        }
        Ok(subchannel / self.k)
    }

    pub fn slot_of(&self, subchannel: usize) -> Result<usize> {
        self.subframe_of(subchannel)?;
        Ok(subchannel % self.k)
    }

    /// Global index of `slot` inside `subframe`.
    pub fn subchannel(&self, subframe: usize, slot: usize) -> Result<usize> {
        if subframe >= self.l {
            return Err(Error::Range {
                index: subframe,
                limit: self.l,
            });
        }
        if slot >= self.k {
            return Err(Error::Range {
                index: slot,
                limit: self.k,
            });
        }
        Ok(subframe * self.k + slot)
    }

    /// Subchannel indices of macro-vertex `subframe`.
    pub fn macro_vertex(&self, subframe: usize) -> std::ops::Range<usize> {
        let start = subframe * self.k;
        start..start + self.k
    }
}

/// Countdown of a semi-persistent reservation, in whole scheduling windows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpsTimer {
    t_sps_s: f64,
    window_ms: f64,
    remaining_windows: u64,
}

impl SpsTimer {
    /// A reservation of `t_sps_s` seconds; partial windows round up.
    pub fn new(t_sps_s: f64, window_ms: f64) -> Result<Self> {
        if !(t_sps_s >= 0.0 && t_sps_s.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "reservation duration must be non-negative, got {t_sps_s} s"
            )));
        }
        if !(window_ms > 0.0 && window_ms.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "window duration must be positive, got {window_ms} ms"
            )));
        }
        let ratio = t_sps_s * 1000.0 / window_ms;
        // 0.1 * 1000 / 100 must not become 2 windows through representation error.
        let rounded = ratio.round();
        let windows = if (ratio - rounded).abs() <= 1e-9 * rounded.max(1.0) {
            rounded
        } else {
            ratio.ceil()
        };
        Ok(SpsTimer {
            t_sps_s,
            window_ms,
            remaining_windows: windows as u64,
        })
    }

    /// Draws a reservation duration uniformly from `pool`.
    pub fn draw<R: Rng + ?Sized>(pool: &[f64], window_ms: f64, rng: &mut R) -> Result<Self> {
        if pool.is_empty() {
            return Err(Error::InvalidParameter("empty T_SPS pool".into()));
        }
        let t = pool[rng.random_range(0..pool.len())];
        Self::new(t, window_ms)
    }

    pub fn for_grid(t_sps_s: f64, grid: &ResourceGrid) -> Result<Self> {
        Self::new(t_sps_s, grid.window_ms())
    }

    pub fn t_sps_s(&self) -> f64 {
        self.t_sps_s
    }

    pub fn window_ms(&self) -> f64 {
        self.window_ms
    }

    pub fn remaining_windows(&self) -> u64 {
        self.remaining_windows
    }

    pub fn needs_reselection(&self) -> bool {
        self.remaining_windows == 0
    }

    /// One elapsed window. Saturates at zero.
    #[must_use]
    pub fn tick_window(self) -> Self {
        SpsTimer {
            remaining_windows: self.remaining_windows.saturating_sub(1),
            ..self
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn subframe_of_block_boundaries() {
        let g = ResourceGrid::with_dims(7, 100).unwrap();
        assert_eq!(g.subframe_of(0).unwrap(), 0);
        assert_eq!(g.subframe_of(6).unwrap(), 0);
        assert_eq!(g.subframe_of(7).unwrap(), 1);
        // 699 = 99 * 7 + 6
        assert_eq!(g.subframe_of(699).unwrap(), 99);
        assert!(matches!(
            g.subframe_of(700),
            Err(Error::Range {
                index: 700,
                limit: 700
            })
        ));
    }

    #[test]
    fn rejects_degenerate_grids() {
        assert!(ResourceGrid::new(0, 3, 1.0, 1.0).is_err());
        assert!(ResourceGrid::new(3, 0, 1.0, 1.0).is_err());
        assert!(ResourceGrid::new(3, 3, 0.0, 1.0).is_err());
        assert!(ResourceGrid::new(3, 3, 1.0, -1.0).is_err());
        assert!(ResourceGrid::new(3, 3, f64::NAN, 1.0).is_err());
    }

    #[test]
    fn subchannel_roundtrip() {
        let g = ResourceGrid::with_dims(3, 4).unwrap();
        let sc = g.subchannel(2, 1).unwrap();
        assert_eq!(sc, 7);
        assert_eq!(g.subframe_of(sc).unwrap(), 2);
        assert_eq!(g.slot_of(sc).unwrap(), 1);
        assert!(g.subchannel(4, 0).is_err());
        assert!(g.subchannel(0, 3).is_err());
        assert_eq!(g.macro_vertex(2), 6..9);
    }

    #[test]
    fn timer_one_second_at_ten_hertz() {
        let t = SpsTimer::new(1.0, 100.0).unwrap();
        assert_eq!(t.remaining_windows(), 10);
        assert_eq!(t.tick_window().remaining_windows(), 9);
    }

    #[test]
    fn timer_floors_at_zero() {
        let t = SpsTimer::new(0.0, 100.0).unwrap();
        assert!(t.needs_reselection());
        let t = t.tick_window();
        assert_eq!(t.remaining_windows(), 0);
        assert!(t.needs_reselection());
    }

    #[test]
    fn timer_eight_seconds_expires_after_eighty_ticks() {
        let mut t = SpsTimer::new(8.0, 100.0).unwrap();
        let mut ticks = 0;
        while !t.needs_reselection() {
            t = t.tick_window();
            ticks += 1;
        }
        assert_eq!(ticks, 80);
    }

    #[test]
    fn timer_rounds_partial_windows_up() {
        assert_eq!(SpsTimer::new(1.0, 300.0).unwrap().remaining_windows(), 4);
        assert_eq!(SpsTimer::new(0.1, 100.0).unwrap().remaining_windows(), 1);
        assert!(SpsTimer::new(1.0, 0.0).is_err());
    }

    #[test]
    fn draws_from_pool() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = ResourceGrid::with_dims(7, 100).unwrap();
        for _ in 0..100 {
            let t = SpsTimer::draw(&DEFAULT_T_SPS_POOL_S, g.window_ms(), &mut rng).unwrap();
            assert!(DEFAULT_T_SPS_POOL_S.contains(&t.t_sps_s()));
            assert_eq!(t.remaining_windows(), (t.t_sps_s() * 10.0) as u64);
        }
        assert!(SpsTimer::draw(&[], 100.0, &mut rng).is_err());
    }

    proptest! {
        #[test]
        fn subframes_partition_the_window(k in 1usize..=32, l in 1usize..=256) {
            let g = ResourceGrid::with_dims(k, l).unwrap();
            let mut counts = vec![0usize; l];
            for sc in 0..g.total_subchannels() {
                let sf = g.subframe_of(sc).unwrap();
                prop_assert!(g.macro_vertex(sf).contains(&sc));
                counts[sf] += 1;
            }
            prop_assert!(counts.iter().all(|&c| c == k));
        }

        #[test]
        fn timer_expires_after_ceiling_ticks(t_sps in 0.0f64..20.0, window in 1.0f64..500.0) {
            let mut t = SpsTimer::new(t_sps, window).unwrap();
            let expected = t.remaining_windows();
            let exact = t_sps * 1000.0 / window;
            prop_assert!(expected as f64 >= exact - 1e-6);
            prop_assert!((expected as f64) < exact + 1.0);
            let mut ticks = 0u64;
            while !t.needs_reselection() {
                t = t.tick_window();
                ticks += 1;
            }
            prop_assert_eq!(ticks, expected);
        }
    }
}
