use alloc::vec::Vec;

use rand_core::RngCore;

use super::emitter::TwoLevelEmitter;
use super::quad;
use crate::hilbert::Polarization;
use crate::math::{ceil, uniform};
use crate::{Error, Result};

/// Grid size of the cumulative jump-probability tables.
pub const SAMPLER_GRID: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum EventKind {
    PhotonLeak,
    SpontaneousEmission,
    NoEvent,
}

/// Outcome of one emission window, unravelled into quantum jumps.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EmissionEvent {
    /// The photon left the cavity at `time` (µs). `polarization` is what a
    /// circular-basis measurement of the photon alone would have returned.
    PhotonLeak { time: f64, polarization: Polarization },
    SpontaneousEmission { time: f64 },
    NoEvent,
}

impl EmissionEvent {
    pub fn kind(&self) -> EventKind {
        match self {
            EmissionEvent::PhotonLeak { .. } => EventKind::PhotonLeak,
            EmissionEvent::SpontaneousEmission { .. } => EventKind::SpontaneousEmission,
            EmissionEvent::NoEvent => EventKind::NoEvent,
        }
    }

    pub fn time(&self) -> Option<f64> {
        match *self {
            EmissionEvent::PhotonLeak { time, .. } | EmissionEvent::SpontaneousEmission { time } => Some(time),
            EmissionEvent::NoEvent => None,
        }
    }
}

/// Inverse-CDF sampler of jump times within a fixed window. The cumulative
/// leak and spontaneous-emission probabilities are tabulated once on a
/// uniform grid and interpolated linearly.
#[derive(Clone, Debug)]
pub struct EmissionSampler {
    window: f64,
    times: Vec<f64>,
    leak: Vec<f64>,
    spont: Vec<f64>,
}

impl EmissionSampler {
    pub fn new(emitter: &TwoLevelEmitter, window: f64) -> Result<Self> {
        Self::with_grid(emitter, window, SAMPLER_GRID)
    }

    pub fn with_grid(emitter: &TwoLevelEmitter, window: f64, points: usize) -> Result<Self> {
        if !(window > 0.0 && window.is_finite()) {
            return Err(Error::InvalidParameter(alloc::format!("window must be positive, got {window}")));
        }
        if points < 2 {
            return Err(Error::InvalidParameter(alloc::string::String::from("sampler grid needs two points")));
        }
        let dt = window / (points - 1) as f64;
        let sub = ceil(dt / emitter.max_panel()).clamp(1.0, 512.0) as usize;
        let h = dt / sub as f64;
        let mut times = Vec::with_capacity(points);
        let mut leak = Vec::with_capacity(points);
        let mut spont = Vec::with_capacity(points);
        let (mut acc_l, mut acc_s) = (0.0, 0.0);
        times.push(0.0);
        leak.push(0.0);
        spont.push(0.0);
        for i in 1..points {
            let t0 = (i - 1) as f64 * dt;
            for j in 0..sub {
                let a = t0 + j as f64 * h;
                acc_l += quad::gk15(&|t| emitter.leak_rate(t), a, a + h).0;
                acc_s += quad::gk15(&|t| emitter.spont_rate(t), a, a + h).0;
            }
            times.push(i as f64 * dt);
            leak.push(acc_l);
            spont.push(acc_s);
        }
        Ok(EmissionSampler { window, times, leak, spont })
    }

    pub fn window(&self) -> f64 {
        self.window
    }

    /// `(leak, spontaneous, no event)` probabilities over the window.
    pub fn probabilities(&self) -> (f64, f64, f64) {
        let l = *self.leak.last().unwrap();
        let s = *self.spont.last().unwrap();
        (l, s, (1.0 - l - s).max(0.0))
    }

    pub fn sample<R: RngCore + ?Sized>(&self, rng: &mut R) -> EmissionEvent {
        let (pl, ps, _) = self.probabilities();
        let u = uniform(rng);
        if u < pl {
            let time = invert(&self.times, &self.leak, u);
            let polarization = if uniform(rng) < 0.5 { Polarization::L } else { Polarization::R };
            EmissionEvent::PhotonLeak { time, polarization }
        } else if u < pl + ps {
            EmissionEvent::SpontaneousEmission { time: invert(&self.times, &self.spont, u - pl) }
        } else {
            EmissionEvent::NoEvent
        }
    }

    /// Leak time conditioned on a leak inside the window.
    pub fn sample_leak_time<R: RngCore + ?Sized>(&self, rng: &mut R) -> f64 {
        let (pl, _, _) = self.probabilities();
        invert(&self.times, &self.leak, uniform(rng) * pl)
    }
}

fn invert(times: &[f64], cum: &[f64], target: f64) -> f64 {
    let i = cum.partition_point(|&c| c <= target).clamp(1, cum.len() - 1);
    let (c0, c1) = (cum[i - 1], cum[i]);
    let frac = if c1 > c0 { (target - c0) / (c1 - c0) } else { 0.0 };
    let t = times[i - 1] + frac * (times[i] - times[i - 1]);
    // Event times live in (0, window].
    if t > 0.0 {
        t
    } else {
        f64::MIN_POSITIVE
    }
}
