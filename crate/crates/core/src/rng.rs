//! Counter-based Gaussian streams and dyadically coupled Brownian increments.
//!
//! Every standard normal is a pure function of `(seed, replica, mode, cell,
//! node)` through the Philox4x32-10 bijection, so replicas and modes can be
//! generated in any order, on any worker, with identical results.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

const PHILOX_M0: u32 = 0xD251_1F53;
const PHILOX_M1: u32 = 0xCD9E_8D57;
const PHILOX_W0: u32 = 0x9E37_79B9;
const PHILOX_W1: u32 = 0xBB67_AE85;

#[inline]
fn mulhilo(a: u32, b: u32) -> (u32, u32) {
    let p = u64::from(a) * u64::from(b);
    ((p >> 32) as u32, p as u32)
}

/// Philox4x32 with ten rounds.
pub fn philox4x32_10(counter: [u32; 4], key: [u32; 2]) -> [u32; 4] {
    let mut c = counter;
    let mut k = key;
    for round in 0..10 {
        if round > 0 {
            k[0] = k[0].wrapping_add(PHILOX_W0);
            k[1] = k[1].wrapping_add(PHILOX_W1);
        }
        let (hi0, lo0) = mulhilo(PHILOX_M0, c[0]);
        let (hi1, lo1) = mulhilo(PHILOX_M1, c[2]);
        c = [hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0];
    }
    c
}

/// Identifies one independent family of streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StreamKey {
    pub seed: u64,
    pub replica: u32,
}

impl StreamKey {
    pub fn new(seed: u64, replica: u32) -> Self {
        Self { seed, replica }
    }

    pub fn with_replica(self, replica: u32) -> Self {
        Self { replica, ..self }
    }

    fn key(&self) -> [u32; 2] {
        [self.seed as u32, (self.seed >> 32) as u32]
    }

    /// Standard normal attached to `(mode, cell, node)` via Box–Muller.
    pub fn normal(&self, mode: u32, cell: u32, node: u32) -> f64 {
        let out = philox4x32_10([node, cell, mode, self.replica], self.key());
        let a = (u64::from(out[0]) << 32) | u64::from(out[1]);
        let b = (u64::from(out[2]) << 32) | u64::from(out[3]);
        // u1 in (0, 1], u2 in [0, 1).
        let u1 = ((a >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64);
        let u2 = (b >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
    }

    /// Brownian increments of mode `mode` on a uniform grid of `n_steps`
    /// cells over `[0, horizon]`.
    ///
    /// Writing `n_steps = b 2^m` with `b` odd, each of the `b` base cells
    /// draws its total increment, which is then split by Lévy's midpoint
    /// construction `m` times. Doubling `n_steps` only adds one more level,
    /// so the coarse increments are exact sums of pairs of fine ones.
    pub fn brownian_increments(&self, mode: u32, n_steps: usize, horizon: f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(n_steps);
        self.fill_increments(mode, n_steps, horizon, &mut out);
        out
    }

    pub fn fill_increments(&self, mode: u32, n_steps: usize, horizon: f64, out: &mut Vec<f64>) {
        out.clear();
        if n_steps == 0 {
            return;
        }
        let levels = n_steps.trailing_zeros();
        let base = n_steps >> levels;
        let base_h = horizon / base as f64;
        let mut level = Vec::with_capacity(n_steps);
        for cell in 0..base {
            level.clear();
            level.push(base_h.sqrt() * self.normal(mode, cell as u32, 1));
            let mut h = base_h;
            for l in 0..levels {
                let half_sd = 0.5 * h.sqrt();
                let width = level.len();
                let mut next = Vec::with_capacity(2 * width);
                for (i, d) in level.iter().enumerate() {
                    let node = (1u32 << (l + 1)) + 2 * i as u32;
                    let z = self.normal(mode, cell as u32, node);
                    next.push(0.5 * d + half_sd * z);
                    next.push(0.5 * d - half_sd * z);
                }
                debug_assert_eq!(next.len(), 2 * width);
                level = next;
                h *= 0.5;
            }
            out.extend_from_slice(&level);
        }
    }
}

impl From<u64> for StreamKey {
    fn from(seed: u64) -> Self {
        Self { seed, replica: 0 }
    }
}
