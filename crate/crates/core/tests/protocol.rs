use atomcluster_core::dynamics::{leak_probability_window, PhysicalParams};
use atomcluster_core::hilbert::{AtomLevel, SparseHybridState};
use atomcluster_core::optics::{default_four_atom_network, OutcomePattern, Reading};
use atomcluster_core::protocol::{
    build_briegel_cluster, build_encoded_chain, build_four_atom_cluster, expected_growth, fuse, grow_chain, loss_scaling_comparison,
    restart, restart_success_probability, run_generation_round_exact, FailurePolicy, GrowthModel, ImperfectionModel,
    RoundSampler,
};
use atomcluster_core::C64;
use proptest::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;

use AtomLevel::{E, G};

fn within_3_sigma(count: usize, n: usize, p: f64) -> bool {
    let sigma = (n as f64 * p * (1.0 - p)).sqrt();
    (count as f64 - n as f64 * p).abs() <= 3.0 * sigma.max(1.0)
}

#[test]
fn briegel_examples() {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let one = build_briegel_cluster(1).unwrap().state;
    assert!((one.atom_amplitude(&[G]).re - h).abs() < 1e-15 && (one.atom_amplitude(&[E]).re - h).abs() < 1e-15);
    let two = build_briegel_cluster(2).unwrap().state;
    for (l, a) in [([G, G], 0.5), ([G, E], 0.5), ([E, G], 0.5), ([E, E], -0.5)] {
        assert!((two.atom_amplitude(&l).re - a).abs() < 1e-15);
    }
    assert!(build_briegel_cluster(0).is_err());
}

#[test]
fn four_atom_state_is_hadamard_equivalent_to_linear_cluster() {
    let four = build_four_atom_cluster().unwrap();
    let briegel = build_briegel_cluster(4).unwrap();
    let rotated = four.with_hadamards(&[1, 4]).unwrap();
    let overlap = briegel.state.inner(&rotated.state).unwrap().norm();
    assert!((overlap - 1.0).abs() < 1e-12, "{overlap}");
    // Any other single pair of Hadamards does not do it.
    let wrong = four.with_hadamards(&[1, 2]).unwrap();
    assert!(briegel.state.inner(&wrong.state).unwrap().norm() < 0.9);
}

/// The six-atom fused state written out term by term.
fn six_atom_reference() -> SparseHybridState {
    let a = 1.0 / (2.0 * 2f64.sqrt());
    let terms: [([AtomLevel; 6], f64); 8] = [
        ([G, G, G, G, G, G], a),
        ([E, E, G, G, G, G], a),
        ([G, G, E, E, G, G], a),
        ([G, G, G, G, E, E], a),
        ([E, E, E, E, G, G], -a),
        ([G, G, E, E, E, E], -a),
        ([E, E, G, G, E, E], a),
        ([E, E, E, E, E, E], a),
    ];
    SparseHybridState::from_atom_terms(vec![1, 2, 3, 6, 7, 8], terms.iter().map(|(l, x)| (&l[..], C64::new(*x, 0.0))))
        .unwrap()
}

#[test]
fn fusion_reproduces_six_atom_amplitudes() {
    let a = build_four_atom_cluster().unwrap();
    let b = a.renumbered(5).unwrap();
    let r = fuse(&a, &b, &ImperfectionModel::ideal_fusion()).unwrap();
    assert_eq!(r.target.len(), a.len() + b.len() - 2);
    assert!((r.acceptance() - 0.5).abs() < 1e-12);
    let dd = r.table.entry(&OutcomePattern(vec![Reading::Plus, Reading::Plus])).unwrap();
    assert_eq!(dd.post.len(), 1);
    let post = &dd.post.branches()[0].state;
    let reference = six_atom_reference();
    let phase = post.atom_amplitude(&[G; 6]) / post.atom_amplitude(&[G; 6]).norm();
    for (label, amp) in reference.terms() {
        assert!((post.amplitude(label) * phase.conj() - amp).norm() < 1e-12, "{label:?}");
    }
    assert_eq!(post.len(), 8);
    assert!((reference.inner(&r.target.state).unwrap().norm() - 1.0).abs() < 1e-12);
    for e in r.table.accepted() {
        let c = e.correction.as_ref().unwrap();
        assert!(c.correctable);
        assert!(c.paulis.iter().all(|p| p.kind == atomcluster_core::optics::PauliKind::Z));
    }
}

#[test]
fn fused_lengths_add() {
    let four = build_four_atom_cluster().unwrap();
    let six = fuse(&four, &four.renumbered(5).unwrap(), &ImperfectionModel::ideal_fusion()).unwrap().target;
    let ten = fuse(&six, &four.renumbered(20).unwrap(), &ImperfectionModel::ideal_fusion()).unwrap();
    assert_eq!(ten.target.len(), 6 + 4 - 2);
    assert_eq!(ten.target.layout, vec![2, 2, 2, 2]);
    assert!((ten.acceptance() - 0.5).abs() < 1e-12);
    let expected = build_encoded_chain(&[2, 2, 2, 2]).unwrap().state;
    assert!((expected.relabel_atoms(ten.target.atom_ids.clone()).unwrap().inner(&ten.target.state).unwrap().norm() - 1.0).abs() < 1e-12);
}

#[test]
fn ideal_round_and_cavity_limited_round() {
    let net = default_four_atom_network();
    let ideal = run_generation_round_exact(&ImperfectionModel::ideal(), &net).unwrap();
    assert!((ideal.acceptance() - 0.125).abs() < 1e-12);
    assert!((ideal.mean_fidelity().unwrap() - 1.0).abs() < 1e-12);

    let rb = run_generation_round_exact(&ImperfectionModel::ideal().with_emission(), &net).unwrap();
    let leak = leak_probability_window(&PhysicalParams::rubidium());
    assert!((rb.acceptance() - leak.powi(4) * 0.125).abs() < 1e-12);
    assert!((rb.min_fidelity().unwrap() - 1.0).abs() < 1e-9);
}

#[test]
fn robustness_grid() {
    let net = default_four_atom_network();
    for loss in [0.1, 0.5] {
        for eff in [0.5, 0.9] {
            let model = ImperfectionModel::ideal().with_photon_loss(loss).with_detector_efficiency(eff);
            let t = run_generation_round_exact(&model, &net).unwrap();
            let expected = 0.125 * ((1.0 - loss) * eff).powi(4);
            assert!((t.acceptance() - expected).abs() < 1e-9, "η={loss} η_d={eff}");
            for e in t.table.accepted() {
                assert!((e.correction.as_ref().unwrap().fidelity - 1.0).abs() < 1e-9);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn fidelity_survives_any_loss(loss in 0.0f64..0.9, eff in 0.1f64..=1.0, dl in 0.01f64..0.1) {
        let net = default_four_atom_network();
        let model = ImperfectionModel::ideal().with_emission().with_photon_loss(loss).with_detector_efficiency(eff);
        let t = run_generation_round_exact(&model, &net).unwrap();
        for e in t.table.accepted() {
            prop_assert!((e.correction.as_ref().unwrap().fidelity - 1.0).abs() < 1e-9);
        }
        let worse_loss = run_generation_round_exact(&model.clone().with_photon_loss(loss + dl), &net).unwrap();
        let worse_eff = run_generation_round_exact(&model.clone().with_detector_efficiency(eff - dl * eff), &net).unwrap();
        prop_assert!(worse_loss.acceptance() < t.acceptance());
        prop_assert!(worse_eff.acceptance() < t.acceptance());
    }
}

#[test]
fn dark_counts_with_a_blocked_rail() {
    let net = default_four_atom_network();
    let mut model = ImperfectionModel::ideal().with_dark_rate(100.0);
    let p = model.dark_probability(&model.detectors[0]);
    assert!((p - 1.98944e-5).abs() < 1e-9);
    let clean = run_generation_round_exact(&model, &net).unwrap();
    assert!(clean.mean_fidelity().unwrap() < 1.0);
    model.transmissions[0] = 0.0;
    let t = run_generation_round_exact(&model, &net).unwrap();
    assert!(t.acceptance() > 0.0 && t.acceptance() < 1e-3);
    assert!(t.mean_fidelity().unwrap() < 1.0);
}

#[test]
fn sampled_rounds_match_exact_tables() {
    let net = default_four_atom_network();
    let models = [
        ImperfectionModel::ideal(),
        ImperfectionModel::ideal().with_emission(),
        ImperfectionModel::ideal().with_photon_loss(0.1).with_detector_efficiency(0.9),
        ImperfectionModel::ideal_with(PhysicalParams::ion(10.0).unwrap(), 4, 4).with_emission(),
        ImperfectionModel::ideal().with_photon_loss(0.3).with_dark_rate(5000.0),
    ];
    for (i, model) in models.iter().enumerate() {
        let sampler = RoundSampler::new(model, &net).unwrap();
        let exact = sampler.tables().acceptance();
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + i as u64);
        let n = 100_000;
        let mut hits = 0;
        for _ in 0..n {
            let r = sampler.sample(&mut rng).unwrap();
            if r.accepted {
                hits += 1;
                assert!(r.corrected_state.is_some());
            }
        }
        assert!(within_3_sigma(hits, n, exact), "model {i}: {hits}/{n} vs {exact}");
    }
}

#[test]
fn sampling_is_deterministic_per_seed() {
    let sampler = RoundSampler::new(&ImperfectionModel::ideal().with_emission(), &default_four_atom_network()).unwrap();
    let draw = |seed| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..200).map(|_| sampler.sample(&mut rng).unwrap().pattern).collect::<Vec<_>>()
    };
    assert_eq!(draw(3), draw(3));
    assert_ne!(draw(3), draw(4));
}

#[test]
fn mismatched_cavities_lose_fidelity_smoothly() {
    let net = default_four_atom_network();
    let fidelity = |ratio: f64| {
        let mut model = ImperfectionModel::ideal();
        model.cavities[1].kappa *= ratio;
        run_generation_round_exact(&model, &net).unwrap().mean_fidelity().unwrap()
    };
    assert!((fidelity(1.0) - 1.0).abs() < 1e-12);
    assert!(1.0 - fidelity(1.0 + 1e-6) < 1e-8);
    let sweep: Vec<f64> = (0..=10).map(|j| fidelity(1.0 + j as f64 / 10.0)).collect();
    assert!(sweep.windows(2).all(|w| w[1] < w[0]), "{sweep:?}");
    assert!(sweep[10] < 0.99);

    let four = build_four_atom_cluster().unwrap();
    let mut fm = ImperfectionModel::ideal_fusion();
    fm.cavities[1].kappa *= 2.0;
    let r = fuse(&four, &four.renumbered(5).unwrap(), &fm).unwrap();
    assert!(r.table.mean_corrected_fidelity().unwrap() < 1.0);
}

#[test]
fn restart_statistics() {
    let p = PhysicalParams::rubidium();
    let q = restart_success_probability(&p).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let n = 100_000;
    let first = (0..n).filter(|_| restart(G, &p, 0, &mut rng).unwrap().success).count();
    assert!(within_3_sigma(first, n, q));
    let two_more = (0..n).filter(|_| restart(E, &p, 2, &mut rng).unwrap().success).count();
    assert!(within_3_sigma(two_more, n, 1.0 - (1.0 - q).powi(3)));
}

/// Expected generation rounds and fusion attempts to reach `target` atoms,
/// from the absorbing Markov chain over the current chain length.
fn growth_oracle(target: usize, pg: f64, pf: f64, keep: bool) -> (f64, f64) {
    let states = target / 2 + 1;
    let mut rounds = vec![0.0; states];
    let mut fusions = vec![0.0; states];
    let idx = |len: usize| len / 2;
    for _ in 0..100_000 {
        let mut delta: f64 = 0.0;
        for len in (0..target).step_by(2).filter(|&l| l == 0 || l >= 4) {
            let (r, f) = if len == 0 {
                (1.0 / pg + rounds[idx(4)], fusions[idx(4)])
            } else {
                let fail = if keep && len >= 6 { idx(len - 2) } else { 0 };
                let up = idx(len + 2);
                (
                    1.0 / pg + pf * rounds[up] + (1.0 - pf) * rounds[fail],
                    1.0 + pf * fusions[up] + (1.0 - pf) * fusions[fail],
                )
            };
            delta = delta.max((r - rounds[idx(len)]).abs()).max((f - fusions[idx(len)]).abs());
            rounds[idx(len)] = r;
            fusions[idx(len)] = f;
        }
        if delta < 1e-12 {
            break;
        }
    }
    (rounds[0], fusions[0])
}

fn mean_and_sigma(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}

#[test]
fn growth_matches_markov_chain() {
    let cases = [
        (4, 0.125, 0.5, FailurePolicy::KeepTruncated),
        (6, 1.0, 0.5, FailurePolicy::KeepTruncated),
        (8, 0.125, 0.5, FailurePolicy::KeepTruncated),
        (10, 0.125, 0.5, FailurePolicy::DiscardChain),
        (4, 0.125 * 0.9f64.powi(4), 0.5, FailurePolicy::KeepTruncated),
    ];
    for (i, (target, pg, pf, policy)) in cases.into_iter().enumerate() {
        let model = GrowthModel::new(pg, pf, policy).unwrap();
        let (er, ef) = growth_oracle(target, pg, pf, policy == FailurePolicy::KeepTruncated);
        let (lr, lf) = expected_growth(target, &model).unwrap();
        assert!((lr - er).abs() < 1e-8 * er && (lf - ef).abs() < 1e-8 * ef.max(1.0), "case {i}");
        let mut rng = ChaCha8Rng::seed_from_u64(40 + i as u64);
        let runs: Vec<_> = (0..20_000).map(|_| grow_chain(target, &model, &mut rng).unwrap()).collect();
        let (mr, sr) = mean_and_sigma(&runs.iter().map(|r| r.generation_rounds as f64).collect::<Vec<_>>());
        let (mf, sf) = mean_and_sigma(&runs.iter().map(|r| r.fusion_attempts as f64).collect::<Vec<_>>());
        assert!((mr - er).abs() <= 3.0 * sr.max(1e-12), "case {i}: rounds {mr} vs {er}");
        assert!((mf - ef).abs() <= 3.0 * sf.max(1e-12), "case {i}: fusions {mf} vs {ef}");
        assert!(runs.iter().all(|r| r.final_length == target));
    }
    // Closed forms for the simplest cases.
    assert!((growth_oracle(4, 0.125, 0.5, true).0 - 8.0).abs() < 1e-9);
    assert!((growth_oracle(6, 1.0, 0.5, true).1 - 2.0).abs() < 1e-9);
    assert!((growth_oracle(4, 0.125 * 0.9f64.powi(4), 0.5, true).0 - 8.0 / 0.9f64.powi(4)).abs() < 1e-9);
}

#[test]
fn growth_probabilities_from_models() {
    let lossy = ImperfectionModel::ideal().with_photon_loss(0.1);
    let m = GrowthModel::from_models(&lossy, &default_four_atom_network(), &ImperfectionModel::ideal_fusion(), FailurePolicy::KeepTruncated).unwrap();
    assert!((m.p_generation - 0.125 * 0.9f64.powi(4)).abs() < 1e-12);
    assert!((m.p_fusion - 0.5).abs() < 1e-12);
    // Dark counts cost fidelity, not heralds.
    let dark = ImperfectionModel::ideal().with_dark_rate(100.0);
    let m = GrowthModel::from_models(&dark, &default_four_atom_network(), &ImperfectionModel::ideal_fusion().with_dark_rate(100.0), FailurePolicy::KeepTruncated).unwrap();
    assert!(m.p_generation > 0.124 && m.p_fusion > 0.499);
}

proptest! {
    #[test]
    fn loss_scaling_properties(loss in 0.0f64..=1.0, n in 1u32..20) {
        let s = loss_scaling_comparison(loss, n).unwrap();
        prop_assert!(s.this_scheme >= s.cascade_scheme);
        prop_assert!((s.this_scheme - (1.0 - loss).powi(n as i32)).abs() < 1e-15);
        prop_assert!((s.cascade_scheme - (1.0 - loss).powi(2 * n as i32)).abs() < 1e-15);
        if loss < 1.0 {
            prop_assert!((s.ratio() / (1.0 - loss).powi(-(n as i32)) - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn loss_scaling_examples() {
    let z = loss_scaling_comparison(0.0, 4).unwrap();
    assert_eq!((z.this_scheme, z.cascade_scheme), (1.0, 1.0));
    let s = loss_scaling_comparison(0.1, 4).unwrap();
    assert!((s.cascade_scheme - 0.43047).abs() < 5e-6);
}
