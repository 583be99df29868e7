//! Per-cavity emission dynamics under the non-Hermitian no-jump Hamiltonian.
//!
//! All rates are angular frequencies in rad/µs and times are in µs, so a
//! rate quoted as `2π × 27 MHz` is stored as `2π·27`.

mod emitter;
pub mod ode;
pub mod quad;
mod sampler;

use alloc::vec::Vec;
use rand_core::RngCore;

pub use emitter::TwoLevelEmitter;
pub use ode::OdeOptions;
pub use sampler::{EmissionEvent, EmissionSampler, EventKind, SAMPLER_GRID};

use crate::math::{c, exp, re, sqrt, FRAC_1_SQRT_2, TAU};
use crate::{Error, Result, C64};

/// Rates of one atom–cavity system plus the observation window.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PhysicalParams {
    /// Atom–cavity coupling `h` (rad/µs).
    pub h: f64,
    /// Cavity field amplitude decay `κ` (rad/µs); photons leak at `2κ`.
    pub kappa: f64,
    /// Excited-state population decay `γ` (rad/µs).
    pub gamma: f64,
    /// Observation window `T` (µs).
    pub window: f64,
}

impl PhysicalParams {
    pub fn new(h: f64, kappa: f64, gamma: f64, window: f64) -> Result<Self> {
        for (name, v) in [("h", h), ("kappa", kappa), ("gamma", gamma)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidParameter(alloc::format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        if !(window.is_finite() && window > 0.0) {
            return Err(Error::InvalidParameter(alloc::format!("window must be > 0, got {window}")));
        }
        Ok(PhysicalParams { h, kappa, gamma, window })
    }

    /// Uses the default waiting window `3/κ`.
    pub fn with_default_window(h: f64, kappa: f64, gamma: f64) -> Result<Self> {
        if !(kappa > 0.0) {
            return Err(Error::InvalidParameter(alloc::string::String::from("default window 3/κ needs κ > 0")));
        }
        Self::new(h, kappa, gamma, 3.0 / kappa)
    }

    /// Convenience constructor from values in MHz, each multiplied by 2π.
    pub fn from_mhz(h: f64, kappa: f64, gamma: f64) -> Result<Self> {
        Self::with_default_window(TAU * h, TAU * kappa, TAU * gamma)
    }

    /// ⁸⁷Rb in an optical-lattice cavity: h = 2π·27, κ = 2π·2.4, γ = 2π·6.
    pub fn rubidium() -> Self {
        Self::from_mhz(27.0, 2.4, 6.0).expect("valid preset")
    }

    /// Trapped ion with h = 2π·30, κ = h/10 and the given γ (MHz).
    pub fn ion(gamma_mhz: f64) -> Result<Self> {
        Self::from_mhz(30.0, 3.0, gamma_mhz)
    }

    /// The emission transition `|α⟩ → |g⟩,|e⟩` as a two-level emitter.
    pub fn emitter(&self) -> TwoLevelEmitter {
        TwoLevelEmitter { coupling: self.h * FRAC_1_SQRT_2, source_decay: 0.5 * self.gamma, field_decay: self.kappa }
    }

    /// The primed reset transitions `|g′⟩,|e′⟩ → |α′⟩` (single mode each).
    pub fn reset_emitter(&self) -> TwoLevelEmitter {
        TwoLevelEmitter { coupling: 0.5 * self.h, source_decay: 0.5 * self.gamma, field_decay: self.kappa }
    }
}

/// Amplitudes of `|α,0,0⟩`, `|g,1_L,0⟩` and `|e,0,1_R⟩` at one time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EmissionAmplitudes {
    pub c_alpha: C64,
    pub c_g: C64,
    pub c_e: C64,
    pub beta: C64,
}

impl EmissionAmplitudes {
    pub fn norm_sqr(&self) -> f64 {
        self.c_alpha.norm_sqr() + self.c_g.norm_sqr() + self.c_e.norm_sqr()
    }

    pub fn max_deviation(&self, other: &Self) -> f64 {
        (self.c_alpha - other.c_alpha)
            .norm()
            .max((self.c_g - other.c_g).norm())
            .max((self.c_e - other.c_e).norm())
    }
}

/// `β = ½√((κ+γ/2)² − 2(γκ+h²))`, principal root.
pub fn beta(p: &PhysicalParams) -> C64 {
    let s = p.kappa + 0.5 * p.gamma;
    let radicand = s * s - 2.0 * (p.gamma * p.kappa + p.h * p.h);
    if radicand >= 0.0 {
        c(0.5 * sqrt(radicand), 0.0)
    } else {
        c(0.0, 0.5 * sqrt(-radicand))
    }
}

/// Closed-form amplitudes at time `t`:
/// `c_α = e^{-(κ+γ/2)t/2}[cosh βt + (κ-γ/2)/(2β) sinh βt]` and
/// `c_g = c_e = -i h/(2β) e^{-(κ+γ/2)t/2} sinh βt`.
pub fn amplitudes_at(p: &PhysicalParams, t: f64) -> EmissionAmplitudes {
    let (c_alpha, field) = p.emitter().amplitudes(t);
    let c_g = field * FRAC_1_SQRT_2;
    EmissionAmplitudes { c_alpha, c_g, c_e: c_g, beta: beta(p) }
}

/// Probability that a photon (either polarization) is in the cavity at `t`.
pub fn emission_probability(p: &PhysicalParams, t: f64) -> f64 {
    let a = amplitudes_at(p, t);
    a.c_g.norm_sqr() + a.c_e.norm_sqr()
}

/// The textbook form `exp[-(κ+γ/2)t]·(h(e^{βt}-e^{-βt})/(2√2β))²`, evaluated
/// literally in complex arithmetic. Kept separate from
/// [`emission_probability`] so the two can be cross-checked.
pub fn emission_probability_displayed(p: &PhysicalParams, t: f64) -> f64 {
    let b = beta(p);
    let bt = b * t;
    let ratio = if bt.norm() < 1e-8 {
        // (e^{βt} - e^{-βt})/(2β) → t
        re(t)
    } else {
        (bt.exp() - (-bt).exp()) / (b * 2.0)
    };
    let amp = ratio * (p.h * FRAC_1_SQRT_2);
    (amp * amp * exp(-(p.kappa + 0.5 * p.gamma) * t)).re
}

/// Total probability that the excitation leaves as a cavity photon,
/// `κh² / ((κ+γ/2)(γκ+h²))`.
pub fn leak_probability_total(p: &PhysicalParams) -> Result<f64> {
    p.emitter().leak_total()
}

/// Total probability of spontaneous emission from `|α⟩`.
pub fn spont_probability_total(p: &PhysicalParams) -> Result<f64> {
    p.emitter().spont_total()
}

/// Leak probability during the configured window.
pub fn leak_probability_window(p: &PhysicalParams) -> f64 {
    p.emitter().leak_within(p.window)
}

/// Integrates the three-amplitude non-Hermitian system directly (no closed
/// form involved) and reports the amplitudes on `grid`.
pub fn ode_oracle_integrate(p: &PhysicalParams, grid: &[f64], opts: OdeOptions) -> Result<Vec<EmissionAmplitudes>> {
    let half_h = 0.5 * p.h;
    let half_gamma = 0.5 * p.gamma;
    let kappa = p.kappa;
    let minus_i = c(0.0, -1.0);
    let rhs = move |y: &[C64; 3]| {
        [
            y[0] * -half_gamma + minus_i * half_h * (y[1] + y[2]),
            minus_i * half_h * y[0] - y[1] * kappa,
            minus_i * half_h * y[0] - y[2] * kappa,
        ]
    };
    let ys = ode::integrate_autonomous(rhs, [re(1.0), re(0.0), re(0.0)], grid, opts)?;
    let b = beta(p);
    Ok(ys.into_iter().map(|y| EmissionAmplitudes { c_alpha: y[0], c_g: y[1], c_e: y[2], beta: b }).collect())
}

/// Samples one emission window (`p.window`) for a single cavity.
///
/// Builds a fresh [`EmissionSampler`]; reuse one directly for many draws.
pub fn sample_emission_event<R: RngCore + ?Sized>(p: &PhysicalParams, rng: &mut R) -> Result<EmissionEvent> {
    Ok(EmissionSampler::new(&p.emitter(), p.window)?.sample(rng))
}

/// Probability that the reset transition ends by a cavity leak, for
/// coupling `Ω`, upper-level amplitude decay `Γ₀` and field decay `Γ₁`:
/// `Γ₁Ω² / ((Γ₀+Γ₁)(Γ₀Γ₁+Ω²))`.
pub fn reset_leak_probability(coupling: f64, upper_decay: f64, field_decay: f64) -> Result<f64> {
    let e = TwoLevelEmitter::new(coupling, upper_decay, field_decay)?;
    if upper_decay + field_decay == 0.0 {
        return Err(Error::NoStationaryLimit("reset needs Γ₀ + Γ₁ > 0"));
    }
    e.leak_total()
}

/// Normalized overlap `∫f₁*f₂ / (‖f₁‖‖f₂‖)` of two leaked-photon envelopes.
pub fn envelope_overlap(e1: &TwoLevelEmitter, e2: &TwoLevelEmitter) -> Result<C64> {
    let end = match (e1.horizon(), e2.horizon()) {
        (Some(a), Some(b)) => a.max(b),
        _ => return Err(Error::ZeroNorm),
    };
    let first = e1.first_panel().min(e2.first_panel());
    let panel = e1.max_panel().min(e2.max_panel());
    let integrate = |f: &dyn Fn(f64) -> f64| quad::integrate_geometric(&|t| f(t), end, first, panel, 1e-15);
    let n1 = integrate(&|t| e1.envelope(t).norm_sqr());
    let n2 = integrate(&|t| e2.envelope(t).norm_sqr());
    if n1 <= 0.0 || n2 <= 0.0 {
        return Err(Error::ZeroNorm);
    }
    let re_part = integrate(&|t| (e1.envelope(t).conj() * e2.envelope(t)).re);
    let im_part = integrate(&|t| (e1.envelope(t).conj() * e2.envelope(t)).im);
    Ok(c(re_part, im_part) / sqrt(n1 * n2))
}

/// Temporal overlap of the photons leaked by two cavities.
pub fn wavepacket_overlap(p1: &PhysicalParams, p2: &PhysicalParams) -> Result<C64> {
    envelope_overlap(&p1.emitter(), &p2.emitter())
}
