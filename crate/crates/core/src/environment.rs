//! Wind turbulence, sensor noise and command delay.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Dryden filter gain (numerator of 3.54 / (s + 0.32)).
pub const DRYDEN_GAIN: f64 = 3.54;
/// Dryden filter pole (rad/s).
pub const DRYDEN_POLE: f64 = 0.32;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

fn fnv1a(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

/// Seed for one named random stream of one run.
pub fn derive_seed(master: u64, case_id: u64, stream: &str) -> u64 {
    splitmix64(splitmix64(master ^ fnv1a(stream)) ^ splitmix64(case_id.wrapping_add(1)))
}

/// An independently seeded standard-normal sequence.
#[derive(Debug, Clone)]
pub struct NoiseStream {
    rng: ChaCha8Rng,
}

impl NoiseStream {
    pub fn new(master: u64, case_id: u64, stream: &str) -> Self {
        NoiseStream { rng: ChaCha8Rng::seed_from_u64(derive_seed(master, case_id, stream)) }
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }
}

/// First-order Dryden turbulence filter driven by discrete white noise,
/// discretized exactly under zero-order hold.
#[derive(Debug, Clone)]
pub struct DrydenState {
    x_w: f64,
    v_w: f64,
    input_scale: f64,
    noise: NoiseStream,
}

impl DrydenState {
    /// `input_scale` multiplies each unit-variance white-noise draw.
    pub fn new(input_scale: f64, noise: NoiseStream) -> Self {
        DrydenState { x_w: 0.0, v_w: 0.0, input_scale, noise }
    }

    /// Input scale for which the stationary output standard deviation is
    /// `sigma` when the filter is stepped every `dt` seconds.
    pub fn input_scale_for_sigma(sigma: f64, dt: f64) -> f64 {
        let phi = (-DRYDEN_POLE * dt).exp();
        let gamma = DRYDEN_GAIN * (1.0 - phi) / DRYDEN_POLE;
        sigma * (1.0 - phi * phi).sqrt() / gamma
    }

    /// Stationary output variance for a given input scale and step.
    pub fn stationary_variance(input_scale: f64, dt: f64) -> f64 {
        let phi = (-DRYDEN_POLE * dt).exp();
        let gamma = DRYDEN_GAIN * (1.0 - phi) / DRYDEN_POLE;
        (gamma * input_scale).powi(2) / (1.0 - phi * phi)
    }

    pub fn output(&self) -> f64 {
        self.v_w
    }

    /// Draws one white-noise sample and advances the filter by `dt`.
    pub fn step(&mut self, dt: f64) -> Result<f64> {
        let u = self.input_scale * self.noise.standard_normal();
        self.advance(u, dt)
    }

    /// Advances the filter with an explicit held input.
    pub fn advance(&mut self, u: f64, dt: f64) -> Result<f64> {
        if !(dt > 0.0) {
            return Err(Error::invalid(format!("dryden step must be > 0, got {dt}")));
        }
        let phi = (-DRYDEN_POLE * dt).exp();
        self.x_w = phi * self.x_w + DRYDEN_GAIN * (1.0 - phi) / DRYDEN_POLE * u;
        self.v_w = self.x_w;
        Ok(self.v_w)
    }
}

/// Rate-gyro model: additive zero-mean Gaussian noise with the given 3σ.
pub fn gyro_measure(q_true: f64, three_sigma: f64, noise: &mut NoiseStream) -> f64 {
    if three_sigma == 0.0 {
        return q_true;
    }
    q_true + three_sigma / 3.0 * noise.standard_normal()
}

/// Fixed-depth FIFO between the controller and the TVC actuator.
#[derive(Debug, Clone)]
pub struct DelayLine {
    buf: VecDeque<f64>,
}

impl DelayLine {
    pub fn new(depth: usize) -> Self {
        DelayLine { buf: std::iter::repeat_n(0.0, depth).collect() }
    }

    pub fn depth(&self) -> usize {
        self.buf.len()
    }

    /// Pushes the newest command and returns the one issued `depth` ticks ago.
    pub fn push_pop(&mut self, value: f64) -> f64 {
        if self.buf.is_empty() {
            return value;
        }
        self.buf.push_back(value);
        self.buf.pop_front().unwrap_or(value)
    }
}

/// Number of control samples covering a delay in seconds.
pub fn delay_samples(delay_s: f64, f_gnc: f64) -> usize {
    (delay_s * f_gnc).round().max(0.0) as usize
}
