use alloc::format;
use alloc::vec;

use rand_core::RngCore;

use crate::math::{powi, uniform};
use crate::optics::NetworkConfig;
use crate::{Error, Result};

use super::chain::{build_encoded_chain, build_four_atom_cluster, ChainState, MAX_TARGET_ATOMS};
use super::fusion::fuse;
use super::generation::run_generation_round_exact;
use super::model::ImperfectionModel;

/// What a failed fusion costs the growing chain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum FailurePolicy {
    /// Only the measured end pair is lost; the chain shrinks by two atoms
    /// and is dropped if fewer than four remain.
    #[default]
    KeepTruncated,
    /// The whole growing chain is restarted.
    DiscardChain,
}

/// Per-attempt success probabilities driving chain growth.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GrowthModel {
    /// Heralded four-atom block per generation round.
    pub p_generation: f64,
    /// Heralded outcome per fusion attempt.
    pub p_fusion: f64,
    pub policy: FailurePolicy,
}

impl GrowthModel {
    pub fn new(p_generation: f64, p_fusion: f64, policy: FailurePolicy) -> Result<Self> {
        for p in [p_generation, p_fusion] {
            if !(p > 0.0 && p <= 1.0) {
                return Err(Error::InvalidParameter(format!("success probability {p} outside (0, 1]")));
            }
        }
        Ok(GrowthModel { p_generation, p_fusion, policy })
    }

    /// Heralding probabilities from the exact generation and fusion tables.
    /// Growth proceeds on every herald; imperfect fidelity of the heralded
    /// states does not change the attempt counts.
    pub fn from_models(
        generation: &ImperfectionModel,
        network: &NetworkConfig,
        fusion: &ImperfectionModel,
        policy: FailurePolicy,
    ) -> Result<Self> {
        let gen = run_generation_round_exact(generation, network)?;
        let block = build_four_atom_cluster()?;
        let fused = fuse(&block, &block.renumbered(5)?, fusion)?;
        Self::new(gen.acceptance(), fused.acceptance(), policy)
    }
}

/// Counters of one growth run.
#[derive(Clone, Debug)]
pub struct GrowthStats {
    pub generation_rounds: u64,
    pub fusion_attempts: u64,
    pub fusion_failures: u64,
    /// Atom restarts: four per failed round, and the atoms discarded by
    /// each failed fusion.
    pub restarts: u64,
    pub final_length: usize,
    /// The heralded target chain, built when small enough to hold densely.
    pub final_chain: Option<ChainState>,
}

fn new_block<R: RngCore + ?Sized>(m: &GrowthModel, stats: &mut GrowthStats, rng: &mut R) {
    loop {
        stats.generation_rounds += 1;
        if uniform(rng) < m.p_generation {
            return;
        }
        stats.restarts += 4;
    }
}

/// Grows a chain of `target` atoms (even, at least four) from heralded
/// four-atom blocks, each fusion adding two atoms.
pub fn grow_chain<R: RngCore + ?Sized>(target: usize, model: &GrowthModel, rng: &mut R) -> Result<GrowthStats> {
    if target < 4 || !target.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!("target length must be even and at least 4, got {target}")));
    }
    let mut stats = GrowthStats {
        generation_rounds: 0,
        fusion_attempts: 0,
        fusion_failures: 0,
        restarts: 0,
        final_length: 0,
        final_chain: None,
    };
    let mut len = 0usize;
    while len < target {
        if len == 0 {
            new_block(model, &mut stats, rng);
            len = 4;
            continue;
        }
        new_block(model, &mut stats, rng);
        stats.fusion_attempts += 1;
        if uniform(rng) < model.p_fusion {
            len += 2;
        } else {
            stats.fusion_failures += 1;
            // The fresh block is spent either way.
            stats.restarts += 4;
            match model.policy {
                FailurePolicy::KeepTruncated => {
                    stats.restarts += 2;
                    len -= 2;
                    if len < 4 {
                        stats.restarts += len as u64;
                        len = 0;
                    }
                }
                FailurePolicy::DiscardChain => {
                    stats.restarts += len as u64;
                    len = 0;
                }
            }
        }
    }
    stats.final_length = len;
    if len <= MAX_TARGET_ATOMS {
        stats.final_chain = Some(build_encoded_chain(&vec![2; len / 2])?);
    }
    Ok(stats)
}

/// Expected generation rounds and fusion attempts to grow a chain of
/// `target` atoms, solved exactly over the chain-length states.
pub fn expected_growth(target: usize, model: &GrowthModel) -> Result<(f64, f64)> {
    if target < 4 || !target.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!("target length must be even and at least 4, got {target}")));
    }
    // States: 0 (no chain) and lengths 4, 6, …, target−2; index 0 is "no chain".
    let lengths: vec::Vec<usize> = core::iter::once(0).chain((4..target).step_by(2)).collect();
    let n = lengths.len();
    let index = |len: usize| lengths.iter().position(|&l| l == len);
    let (pg, pf) = (model.p_generation, model.p_fusion);
    let mut a = vec![vec![0.0; n]; n];
    let mut rounds = vec![0.0; n];
    let mut fusions = vec![0.0; n];
    for (i, &len) in lengths.iter().enumerate() {
        a[i][i] += 1.0;
        rounds[i] = 1.0 / pg;
        if len == 0 {
            if let Some(first) = index(4) {
                a[i][first] -= 1.0;
            }
            continue;
        }
        fusions[i] = 1.0;
        if let Some(up) = index(len + 2) {
            a[i][up] -= pf;
        }
        let fail = match model.policy {
            FailurePolicy::KeepTruncated if len >= 6 => len - 2,
            _ => 0,
        };
        a[i][index(fail).unwrap_or(0)] -= 1.0 - pf;
    }
    let r = solve(a.clone(), rounds)?;
    let f = solve(a, fusions)?;
    Ok((r[0], f[0]))
}

/// Gaussian elimination with partial pivoting.
fn solve(mut a: vec::Vec<vec::Vec<f64>>, mut b: vec::Vec<f64>) -> Result<vec::Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .filter(|&p| a[p][col].abs() > 1e-300)
            .ok_or_else(|| Error::InvalidParameter(format!("singular growth system at column {col}")))?;
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f != 0.0 {
                for k in col..n {
                    a[row][k] -= f * a[col][k];
                }
                b[row] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Ok(x)
}

/// Relative success scaling with per-photon loss `η` over `n` photons.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossScaling {
    /// One photon per atom: `(1−η)ⁿ`.
    pub this_scheme: f64,
    /// Two photons per atom: `(1−η)^{2n}`.
    pub cascade_scheme: f64,
}

impl LossScaling {
    pub fn ratio(&self) -> f64 {
        self.this_scheme / self.cascade_scheme
    }
}

pub fn loss_scaling_comparison(loss: f64, n: u32) -> Result<LossScaling> {
    if !(0.0..=1.0).contains(&loss) || n == 0 {
        return Err(Error::InvalidParameter(format!("need η in [0, 1] and n >= 1, got η={loss}, n={n}")));
    }
    let s = 1.0 - loss;
    Ok(LossScaling { this_scheme: powi(s, n as i32), cascade_scheme: powi(s, 2 * n as i32) })
}

/// Mean generation rounds and fusions of many runs, for quick summaries.
pub fn mean_counts(runs: &[GrowthStats]) -> (f64, f64) {
    let n = runs.len().max(1) as f64;
    let g: u64 = runs.iter().map(|r| r.generation_rounds).sum();
    let f: u64 = runs.iter().map(|r| r.fusion_attempts).sum();
    (g as f64 / n, f as f64 / n)
}
