use crate::math::{abs, c, cos, cosh, exp, sin, sinh, sqrt};
use crate::{Error, Result, C64};

use super::quad;

/// Amplitude model of one excitation shared between a decaying source
/// level and a leaky cavity field:
///
/// ```text
/// ċ₀ = -Γ₀ c₀ - iΩ c₁
/// ċ₁ = -Γ₁ c₁ - iΩ c₀
/// ```
///
/// with `c₀(0) = 1`, `c₁(0) = 0`. The leak rate out of the cavity is
/// `2Γ₁|c₁|²` and the spontaneous-emission rate `2Γ₀|c₀|²`.
///
/// The atom–cavity emission maps onto this with `Ω = h/√2`, `Γ₀ = γ/2`,
/// `Γ₁ = κ` (the field amplitude being the symmetric L/R combination); the
/// primed-level reset transitions use `Ω = h/2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoLevelEmitter {
    pub coupling: f64,
    pub source_decay: f64,
    pub field_decay: f64,
}

/// Below this `|βt|` the propagators switch to their Taylor series.
const SERIES_THRESHOLD: f64 = 1e-4;

impl TwoLevelEmitter {
    pub fn new(coupling: f64, source_decay: f64, field_decay: f64) -> Result<Self> {
        for (name, v) in [("coupling", coupling), ("source_decay", source_decay), ("field_decay", field_decay)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidParameter(alloc::format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        Ok(TwoLevelEmitter { coupling, source_decay, field_decay })
    }

    /// Half the total amplitude damping, `(Γ₀+Γ₁)/2`.
    pub fn mean_decay(&self) -> f64 {
        0.5 * (self.source_decay + self.field_decay)
    }

    fn detuning_half(&self) -> f64 {
        0.5 * (self.field_decay - self.source_decay)
    }

    /// `β² = ((Γ₁-Γ₀)/2)² - Ω²`; always real.
    pub fn beta_squared(&self) -> f64 {
        let d = self.detuning_half();
        d * d - self.coupling * self.coupling
    }

    /// Principal square root of `β²`.
    pub fn beta(&self) -> C64 {
        let b2 = self.beta_squared();
        if b2 >= 0.0 {
            c(sqrt(b2), 0.0)
        } else {
            c(0.0, sqrt(-b2))
        }
    }

    /// `(e^{-at} cosh βt, e^{-at} sinh(βt)/β)`, both real.
    pub fn propagators(&self, t: f64) -> (f64, f64) {
        let a = self.mean_decay();
        let b2 = self.beta_squared();
        let x2 = b2 * t * t;
        if abs(x2) < SERIES_THRESHOLD * SERIES_THRESHOLD {
            let damp = exp(-a * t);
            let ch = 1.0 + x2 / 2.0 + x2 * x2 / 24.0 + x2 * x2 * x2 / 720.0;
            let sh = t * (1.0 + x2 / 6.0 + x2 * x2 / 120.0 + x2 * x2 * x2 / 5040.0);
            return (damp * ch, damp * sh);
        }
        if b2 > 0.0 {
            let b = sqrt(b2);
            let bt = b * t;
            if bt < 30.0 {
                let damp = exp(-a * t);
                (damp * cosh(bt), damp * sinh(bt) / b)
            } else {
                let lead = 0.5 * exp((b - a) * t);
                let tail = exp(-2.0 * bt);
                (lead * (1.0 + tail), lead * (1.0 - tail) / b)
            }
        } else {
            let w = sqrt(-b2);
            let damp = exp(-a * t);
            (damp * cos(w * t), damp * sin(w * t) / w)
        }
    }

    /// `(c₀(t), c₁(t))`.
    pub fn amplitudes(&self, t: f64) -> (C64, C64) {
        let (ch, sh) = self.propagators(t);
        let c0 = ch + self.detuning_half() * sh;
        let c1 = -self.coupling * sh;
        (c(c0, 0.0), c(0.0, c1))
    }

    pub fn leak_rate(&self, t: f64) -> f64 {
        2.0 * self.field_decay * self.amplitudes(t).1.norm_sqr()
    }

    pub fn spont_rate(&self, t: f64) -> f64 {
        2.0 * self.source_decay * self.amplitudes(t).0.norm_sqr()
    }

    /// Norm remaining in the no-jump state at time `t`.
    pub fn survival(&self, t: f64) -> f64 {
        let (c0, c1) = self.amplitudes(t);
        c0.norm_sqr() + c1.norm_sqr()
    }

    /// Temporal amplitude of the leaked photon, `√(2Γ₁)·c₁(t)`.
    pub fn envelope(&self, t: f64) -> C64 {
        sqrt(2.0 * self.field_decay) * self.amplitudes(t).1
    }

    /// Probability that the excitation eventually leaves through the cavity:
    /// `Γ₁Ω² / ((Γ₀+Γ₁)(Γ₀Γ₁+Ω²))`.
    pub fn leak_total(&self) -> Result<f64> {
        let (om, g0, g1) = (self.coupling, self.source_decay, self.field_decay);
        if g0 + g1 == 0.0 {
            return if om == 0.0 { Ok(0.0) } else { Err(Error::NoStationaryLimit("no decay channel with nonzero coupling")) };
        }
        if om == 0.0 {
            return Ok(0.0);
        }
        Ok(g1 * om * om / ((g0 + g1) * (g0 * g1 + om * om)))
    }

    /// Probability that the excitation is eventually lost by spontaneous
    /// emission from the source level.
    pub fn spont_total(&self) -> Result<f64> {
        let (om, g0, g1) = (self.coupling, self.source_decay, self.field_decay);
        if g0 + g1 == 0.0 {
            return if om == 0.0 { Ok(0.0) } else { Err(Error::NoStationaryLimit("no decay channel with nonzero coupling")) };
        }
        if om == 0.0 {
            return Ok(if g0 > 0.0 { 1.0 } else { 0.0 });
        }
        // With Ω > 0 and some damping, both eigenvalues have negative real
        // part, so the excitation decays completely.
        Ok(1.0 - self.leak_total()?)
    }

    /// Slowest population decay rate, `2(a - Re β)`.
    pub fn slowest_rate(&self) -> f64 {
        let a = self.mean_decay();
        let b2 = self.beta_squared();
        if b2 > 0.0 {
            let b = sqrt(b2);
            // a - b = (a² - b²)/(a + b) avoids cancellation.
            let prod = self.source_decay * self.field_decay + self.coupling * self.coupling;
            if a + b > 0.0 {
                2.0 * prod / (a + b)
            } else {
                0.0
            }
        } else {
            2.0 * a
        }
    }

    /// Time after which the remaining population is below `e^{-45}`.
    pub fn horizon(&self) -> Option<f64> {
        let s = self.slowest_rate();
        (s > 0.0).then(|| 45.0 / s)
    }

    /// Longest quadrature panel that still resolves oscillations.
    pub(crate) fn max_panel(&self) -> f64 {
        let b = self.beta();
        let w = b.im.abs().max(b.re.abs()).max(self.mean_decay()).max(self.coupling);
        if w > 0.0 {
            1.0 / w
        } else {
            f64::INFINITY
        }
    }

    /// Characteristic first time scale, used to seed geometric panels.
    pub(crate) fn first_panel(&self) -> f64 {
        let w = self.mean_decay() + self.beta().norm() + self.coupling;
        if w > 0.0 {
            1.0 / w
        } else {
            1.0
        }
    }

    /// Probability of a cavity leak within `[0, window]`, by quadrature.
    pub fn leak_within(&self, window: f64) -> f64 {
        self.integrate_rate(window, |t| self.leak_rate(t))
    }

    /// Probability of spontaneous emission within `[0, window]`.
    pub fn spont_within(&self, window: f64) -> f64 {
        self.integrate_rate(window, |t| self.spont_rate(t))
    }

    fn integrate_rate(&self, window: f64, f: impl Fn(f64) -> f64) -> f64 {
        let end = match self.horizon() {
            Some(h) => h.min(window),
            None => window,
        };
        quad::integrate_geometric(&f, end, self.first_panel(), self.max_panel(), 1e-14)
    }
}
