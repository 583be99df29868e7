use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::dynamics::{envelope_overlap, PhysicalParams, TwoLevelEmitter};
use crate::math::{re, sqrt};
use crate::optics::{DetectorSpec, NetworkConfig};
use crate::{Error, Result, C64};

/// Efficiency and dark-count rate of one detector.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DetectorModel {
    pub efficiency: f64,
    /// Dark counts per second.
    pub dark_rate_hz: f64,
}

impl DetectorModel {
    pub const IDEAL: DetectorModel = DetectorModel { efficiency: 1.0, dark_rate_hz: 0.0 };
}

/// Everything that can go wrong in one round: per-cavity rates, per-rail
/// transmission between source and network, detector imperfections and the
/// detection window.
#[derive(Clone, Debug, PartialEq)]
pub struct ImperfectionModel {
    pub cavities: Vec<PhysicalParams>,
    /// Transmission of each source rail, in cavity order.
    pub transmissions: Vec<f64>,
    /// One entry per detector, in network declaration order.
    pub detectors: Vec<DetectorModel>,
    /// Detection window (µs).
    pub window: f64,
    /// Treat every cavity as emitting with certainty (pure optics study).
    pub force_emission: bool,
}

impl ImperfectionModel {
    /// Perfect optics and certain emission for `sources` cavities with the
    /// given rates, read out by `detectors` detectors.
    pub fn ideal_with(params: PhysicalParams, sources: usize, detectors: usize) -> Self {
        ImperfectionModel {
            cavities: vec![params; sources],
            transmissions: vec![1.0; sources],
            detectors: vec![DetectorModel::IDEAL; detectors],
            window: params.window,
            force_emission: true,
        }
    }

    /// Ideal four-cavity, four-detector generation model.
    pub fn ideal() -> Self {
        Self::ideal_with(PhysicalParams::rubidium(), 4, 4)
    }

    /// Ideal two-cavity, two-detector fusion model.
    pub fn ideal_fusion() -> Self {
        Self::ideal_with(PhysicalParams::rubidium(), 2, 2)
    }

    /// Uses the cavities' actual leak probabilities instead of certain
    /// emission.
    pub fn with_emission(mut self) -> Self {
        self.force_emission = false;
        self
    }

    /// Same per-photon loss rate `η` on every source rail.
    pub fn with_photon_loss(mut self, loss: f64) -> Self {
        self.transmissions.iter_mut().for_each(|t| *t = 1.0 - loss);
        self
    }

    pub fn with_detector_efficiency(mut self, efficiency: f64) -> Self {
        self.detectors.iter_mut().for_each(|d| d.efficiency = efficiency);
        self
    }

    pub fn with_dark_rate(mut self, hz: f64) -> Self {
        self.detectors.iter_mut().for_each(|d| d.dark_rate_hz = hz);
        self
    }

    pub fn with_window(mut self, window: f64) -> Self {
        self.window = window;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.cavities.is_empty() || self.cavities.len() != self.transmissions.len() {
            return Err(Error::InvalidParameter(format!(
                "{} cavities but {} rail transmissions",
                self.cavities.len(),
                self.transmissions.len()
            )));
        }
        if !(self.window > 0.0 && self.window.is_finite()) {
            return Err(Error::InvalidParameter(format!("window must be positive, got {}", self.window)));
        }
        for &t in &self.transmissions {
            if !(0.0..=1.0).contains(&t) {
                return Err(Error::InvalidParameter(format!("transmission {t} outside [0, 1]")));
            }
        }
        for d in &self.detectors {
            if !(0.0..=1.0).contains(&d.efficiency) || !(d.dark_rate_hz >= 0.0 && d.dark_rate_hz.is_finite()) {
                return Err(Error::InvalidParameter(format!("bad detector {d:?}")));
            }
            if self.dark_probability(d) > 1.0 {
                return Err(Error::InvalidParameter(format!("dark rate {} Hz saturates the window", d.dark_rate_hz)));
            }
        }
        Ok(())
    }

    /// False-click probability per window: rate × window.
    pub fn dark_probability(&self, d: &DetectorModel) -> f64 {
        d.dark_rate_hz * self.window * 1e-6
    }

    /// True when every cavity has the same rates.
    pub fn equal_cavities(&self) -> bool {
        self.cavities.windows(2).all(|w| w[0].h == w[1].h && w[0].kappa == w[1].kappa && w[0].gamma == w[1].gamma)
    }

    /// Copy of `network` with this model's detectors and source losses.
    pub(crate) fn dress(&self, network: &NetworkConfig, source_rails: &[u32]) -> Result<NetworkConfig> {
        let n = network.detectors().count();
        if self.detectors.len() != n {
            return Err(Error::InvalidParameter(format!(
                "model has {} detectors, network declares {n}",
                self.detectors.len()
            )));
        }
        let mut i = 0;
        let dressed = network.with_detectors(|d| {
            let m = self.detectors[i];
            i += 1;
            DetectorSpec { efficiency: m.efficiency, dark_probability: self.dark_probability(&m), ..*d }
        });
        let losses: Vec<(u32, f64)> = source_rails.iter().copied().zip(self.transmissions.iter().copied()).collect();
        Ok(dressed.with_input_losses(&losses))
    }
}

/// Expansion coefficients of each photon envelope over an orthonormal set of
/// temporal modes. Row `k` lists `(mode, coefficient)` for emitter `k`; the
/// Gram matrix of the envelopes is reproduced exactly.
pub fn temporal_modes(emitters: &[TwoLevelEmitter]) -> Result<Vec<Vec<(u8, C64)>>> {
    let n = emitters.len();
    let mut gram = vec![vec![re(0.0); n]; n];
    for i in 0..n {
        gram[i][i] = re(1.0);
        for j in 0..i {
            let same = emitters[i] == emitters[j];
            let o = if same { re(1.0) } else { envelope_overlap(&emitters[i], &emitters[j])? };
            gram[i][j] = o.conj();
            gram[j][i] = o;
        }
    }
    cholesky_rows(&gram)
}

/// Rows of a lower-triangular `L` with `L L† = G` (row `i` of `L` holds the
/// coordinates of vector `i`). Columns whose pivot vanishes are skipped, so
/// identical vectors share one mode.
fn cholesky_rows(gram: &[Vec<C64>]) -> Result<Vec<Vec<(u8, C64)>>> {
    const PIVOT_EPS: f64 = 1e-12;
    let n = gram.len();
    let mut l = vec![vec![re(0.0); n]; n];
    let mut live = vec![false; n];
    for j in 0..n {
        let mut d = gram[j][j].re;
        for k in 0..j {
            d -= l[j][k].norm_sqr();
        }
        if d > PIVOT_EPS {
            live[j] = true;
            let pivot = sqrt(d);
            l[j][j] = re(pivot);
            for i in (j + 1)..n {
                // ⟨vector i, basis j⟩ from G_ij = Σ_k L_ik L_jk*.
                let mut s = gram[i][j];
                for k in 0..j {
                    s -= l[i][k] * l[j][k].conj();
                }
                l[i][j] = s / pivot;
            }
        } else if d < -1e-9 {
            return Err(Error::InvalidParameter(format!("overlap matrix not positive semidefinite ({d})")));
        }
    }
    let mut mode = vec![0u8; n];
    let mut next = 0u8;
    for j in 0..n {
        if live[j] {
            mode[j] = next;
            next += 1;
        }
    }
    Ok((0..n)
        .map(|i| (0..n).filter(|&j| live[j] && l[i][j] != re(0.0)).map(|j| (mode[j], l[i][j])).collect())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::c;

    #[test]
    fn equal_emitters_share_one_mode() {
        let e = PhysicalParams::rubidium().emitter();
        let rows = temporal_modes(&[e, e, e]).unwrap();
        for r in rows {
            assert_eq!(r.len(), 1);
            assert_eq!(r[0].0, 0);
            assert!((r[0].1 - re(1.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn gram_matrix_is_reproduced() {
        let g = vec![
            vec![re(1.0), c(0.6, 0.1), re(0.3)],
            vec![c(0.6, -0.1), re(1.0), re(0.5)],
            vec![re(0.3), re(0.5), re(1.0)],
        ];
        let rows = cholesky_rows(&g).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let mut s = re(0.0);
                for &(mi, ci) in &rows[i] {
                    for &(mj, cj) in &rows[j] {
                        if mi == mj {
                            s += ci * cj.conj();
                        }
                    }
                }
                assert!((s - g[i][j]).norm() < 1e-14, "{i}{j}");
            }
        }
    }

    #[test]
    fn mismatched_cavities_get_two_modes() {
        let a = PhysicalParams::rubidium();
        let mut b = a;
        b.kappa *= 1.5;
        let rows = temporal_modes(&[a.emitter(), b.emitter()]).unwrap();
        assert_eq!(rows[1].len(), 2);
        let o = envelope_overlap(&a.emitter(), &b.emitter()).unwrap();
        assert!((rows[1][0].1 - o.conj()).norm() < 1e-12);
    }

    #[test]
    fn model_validation_and_dark_probability() {
        let m = ImperfectionModel::ideal().with_dark_rate(100.0).with_window(3.0 / (crate::math::TAU * 2.4));
        m.validate().unwrap();
        let p = m.dark_probability(&m.detectors[0]);
        assert!((p - 1.98944e-5).abs() < 1e-9);
        let bad = ImperfectionModel::ideal().with_photon_loss(1.5);
        assert!(bad.validate().is_err());
    }
}
