use atomcluster_core::dynamics::{
    amplitudes_at, beta, emission_probability, emission_probability_displayed, envelope_overlap, leak_probability_total,
    leak_probability_window, ode_oracle_integrate, reset_leak_probability, sample_emission_event, spont_probability_total,
    wavepacket_overlap, EmissionEvent, EmissionSampler, EventKind, OdeOptions, PhysicalParams, TwoLevelEmitter,
};
use atomcluster_core::hilbert::Polarization;
use atomcluster_core::C64;
use proptest::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use std::f64::consts::{PI, TAU};

fn mhz(h: f64, k: f64, g: f64) -> PhysicalParams {
    PhysicalParams::from_mhz(h, k, g).unwrap()
}

/// Fixed-step RK4 on (c_α, c_g, c_e) plus the accumulated leak and
/// spontaneous-emission probabilities.
fn rk4_oracle(h: f64, kappa: f64, gamma: f64, t_end: f64, steps: usize) -> ([C64; 3], f64, f64) {
    let i = C64::new(0.0, 1.0);
    let f = |y: &[C64; 3]| -> ([C64; 3], f64, f64) {
        let da = -y[0] * (gamma / 2.0) - i * (h / 2.0) * (y[1] + y[2]);
        let dg = -i * (h / 2.0) * y[0] - y[1] * kappa;
        let de = -i * (h / 2.0) * y[0] - y[2] * kappa;
        let leak = 2.0 * kappa * (y[1].norm_sqr() + y[2].norm_sqr());
        let spont = gamma * y[0].norm_sqr();
        ([da, dg, de], leak, spont)
    };
    let add = |y: &[C64; 3], k: &[C64; 3], s: f64| [y[0] + k[0] * s, y[1] + k[1] * s, y[2] + k[2] * s];
    let dt = t_end / steps as f64;
    let mut y = [C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)];
    let (mut leak, mut spont) = (0.0, 0.0);
    for _ in 0..steps {
        let (k1, l1, s1) = f(&y);
        let (k2, l2, s2) = f(&add(&y, &k1, dt / 2.0));
        let (k3, l3, s3) = f(&add(&y, &k2, dt / 2.0));
        let (k4, l4, s4) = f(&add(&y, &k3, dt));
        for j in 0..3 {
            y[j] += (k1[j] + k2[j] * 2.0 + k3[j] * 2.0 + k4[j]) * (dt / 6.0);
        }
        leak += (l1 + 2.0 * l2 + 2.0 * l3 + l4) * dt / 6.0;
        spont += (s1 + 2.0 * s2 + 2.0 * s3 + s4) * dt / 6.0;
    }
    (y, leak, spont)
}

fn log_uniform(rng: &mut impl RngCore, lo: f64, hi: f64) -> f64 {
    let u = (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
    (lo.ln() + u * (hi.ln() - lo.ln())).exp()
}

#[test]
fn beta_examples() {
    let p = PhysicalParams::new(0.0, 4.0, 0.0, 1.0).unwrap();
    assert!((beta(&p) - C64::new(2.0, 0.0)).norm() < 1e-15);
    let b = beta(&PhysicalParams::rubidium());
    // Eigenvalue splitting of the symmetric-mode 2×2 generator
    // [[-γ/2, -ih/√2], [-ih/√2, -κ]]: λ± = -(κ+γ/2)/2 ± β.
    let (k, g, h) = (TAU * 2.4, TAU * 6.0, TAU * 27.0);
    let tr = -(k + g / 2.0);
    let det = g / 2.0 * k + h * h / 2.0;
    let disc = C64::new(tr * tr / 4.0 - det, 0.0).sqrt();
    assert!((b - disc).norm() < 1e-9);
    assert!((b.im / TAU - 19.0895).abs() < 1e-4);
}

#[test]
fn rk4_matches_closed_form_at_reference_rates() {
    let p = PhysicalParams::rubidium();
    for t in [0.01, 0.05, 0.11, 0.19] {
        let (y, _, _) = rk4_oracle(p.h, p.kappa, p.gamma, t, 40_000);
        let a = amplitudes_at(&p, t);
        assert!((a.c_alpha - y[0]).norm() < 1e-10, "t={t}");
        assert!((a.c_g - y[1]).norm() < 1e-10);
        assert!((a.c_e - y[2]).norm() < 1e-10);
        assert!((a.c_g - a.c_e).norm() < 1e-15);
    }
}

#[test]
fn adaptive_ode_agrees_over_random_parameters() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for n in 0..100 {
        let kappa = log_uniform(&mut rng, 0.1, 300.0);
        let gamma = log_uniform(&mut rng, 0.1, 300.0);
        let h = match n % 4 {
            // Right on top of the β = 0 manifold, and just either side.
            0 => (kappa - gamma / 2.0).abs() / 2f64.sqrt() * (1.0 + 1e-9),
            1 => (kappa - gamma / 2.0).abs() / 2f64.sqrt() * (1.0 - 1e-6),
            _ => log_uniform(&mut rng, 0.1, 300.0),
        };
        let p = PhysicalParams::new(h, kappa, gamma, 1.0).unwrap();
        let a = (kappa + gamma / 2.0) / 2.0;
        let fastest = h.max(kappa).max(gamma);
        let t_end = (4.0 / a).min(40.0 / fastest);
        let grid: Vec<f64> = (0..=25).map(|j| t_end * j as f64 / 25.0).collect();
        let ode = ode_oracle_integrate(&p, &grid, OdeOptions::default()).unwrap();
        for (t, o) in grid.iter().zip(&ode) {
            worst = worst.max(amplitudes_at(&p, *t).max_deviation(o));
        }
    }
    assert!(worst < 1e-9, "max deviation {worst:e}");
}

#[test]
fn leak_totals_match_rk4_quadrature() {
    for p in [PhysicalParams::rubidium(), PhysicalParams::ion(10.0).unwrap(), mhz(5.0, 1.0, 0.5)] {
        let rate = p.h.max(p.kappa).max(p.gamma);
        let slow = (p.kappa + p.gamma / 2.0) / 2.0 - beta(&p).re.max(0.0);
        let t_end = 40.0 / slow;
        let steps = ((t_end * rate / 0.002) as usize).max(10_000);
        let (y, leak, spont) = rk4_oracle(p.h, p.kappa, p.gamma, t_end, steps);
        let remaining = y.iter().map(|c| c.norm_sqr()).sum::<f64>();
        assert!(remaining < 1e-14);
        assert!((leak_probability_total(&p).unwrap() - leak).abs() < 1e-8, "{p:?}");
        assert!((spont_probability_total(&p).unwrap() - spont).abs() < 1e-8);
    }
}

#[test]
fn reference_parameter_points() {
    let rb = leak_probability_total(&PhysicalParams::rubidium()).unwrap();
    assert!((rb - 0.435835).abs() < 1e-6, "{rb}");
    let ion = leak_probability_total(&PhysicalParams::ion(10.0).unwrap()).unwrap();
    assert!((ion - 2700.0 / 7440.0).abs() < 1e-12);
    assert!((spont_probability_total(&PhysicalParams::rubidium()).unwrap() - (1.0 - rb)).abs() < 1e-12);
    // The quoted joint figures are not the fourth power of either value.
    assert!((rb.powi(4) - 0.208).abs() > 0.1);
    assert!((ion.powi(4) - 0.16).abs() > 0.1);
}

#[test]
fn leak_edge_cases() {
    assert_eq!(leak_probability_total(&PhysicalParams::new(3.0, 2.0, 0.0, 1.0).unwrap()).unwrap(), 1.0);
    assert_eq!(leak_probability_total(&PhysicalParams::new(3.0, 0.0, 2.0, 1.0).unwrap()).unwrap(), 0.0);
    assert!(leak_probability_total(&PhysicalParams::new(3.0, 0.0, 0.0, 1.0).unwrap()).is_err());
    assert_eq!(spont_probability_total(&PhysicalParams::new(3.0, 0.0, 2.0, 1.0).unwrap()).unwrap(), 1.0);
}

#[test]
fn emission_probability_examples() {
    let p = PhysicalParams::new(7.0, 0.0, 0.0, 1.0).unwrap();
    let t = PI / (2f64.sqrt() * 7.0);
    assert!((emission_probability(&p, t) - 1.0).abs() < 1e-12);
    assert!(amplitudes_at(&p, t).c_alpha.norm() < 1e-12);
    assert_eq!(emission_probability(&PhysicalParams::rubidium(), 0.0), 0.0);

    // Golden-section search of the RK4 populations for the peak.
    let rb = PhysicalParams::rubidium();
    let pop = |t: f64| {
        let (y, _, _) = rk4_oracle(rb.h, rb.kappa, rb.gamma, t, 4000);
        y[1].norm_sqr() + y[2].norm_sqr()
    };
    let (mut a, mut b) = (0.0, 0.03);
    let r = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..80 {
        let (c, d) = (b - r * (b - a), a + r * (b - a));
        if pop(c) > pop(d) {
            b = d;
        } else {
            a = c;
        }
    }
    let t_star = (a + b) / 2.0;
    assert!((t_star - 0.011926).abs() < 2e-6, "{t_star}");
    assert!((emission_probability(&rb, t_star) - 0.654321).abs() < 1e-6);
}

/// Independent evaluation of the displayed emission-probability expression
/// `P = (h²/(2|β|²)) e^{−(κ+γ/2)t} |sinh βt|²`.
fn displayed_oracle(p: &PhysicalParams, t: f64) -> f64 {
    let b4 = (p.kappa + p.gamma / 2.0).powi(2) - 2.0 * (p.gamma * p.kappa + p.h * p.h);
    let b = C64::new(b4, 0.0).sqrt() / 2.0;
    let decay = (-(p.kappa + p.gamma / 2.0) * t).exp();
    if b.norm() * t < 1e-8 {
        return p.h * p.h / 2.0 * t * t * decay;
    }
    let s = (b * t).sinh();
    p.h * p.h / (2.0 * b.norm_sqr()) * decay * s.norm_sqr()
}

#[test]
fn displayed_expression_matches_on_random_inputs() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..100 {
        let p = PhysicalParams::new(
            log_uniform(&mut rng, 0.1, 300.0),
            log_uniform(&mut rng, 0.1, 300.0),
            log_uniform(&mut rng, 0.1, 300.0),
            1.0,
        )
        .unwrap();
        let t = log_uniform(&mut rng, 1e-4, 0.5);
        let from_amps = emission_probability(&p, t);
        assert!((from_amps - displayed_oracle(&p, t)).abs() < 1e-12, "{p:?} t={t}");
        assert!((from_amps - emission_probability_displayed(&p, t)).abs() < 1e-12);
    }
}

#[test]
fn reset_leak_matches_quadrature() {
    let p = PhysicalParams::rubidium();
    let closed = reset_leak_probability(p.h / 2.0, p.gamma / 2.0, p.kappa).unwrap();
    // Same two-level structure as the symmetric emission mode, but with
    // coupling h/2: c₁ = √2·c_g of an emitter whose h is h/√2.
    let (_, leak, _) = rk4_oracle(p.h / 2f64.sqrt(), p.kappa, p.gamma, 40.0 / 5.0, 400_000);
    assert!((closed - leak).abs() < 1e-8, "{closed} vs {leak}");
    assert!((closed - 0.427553).abs() < 1e-6);
    assert_eq!(reset_leak_probability(3.0, 0.0, 1.0).unwrap(), 1.0);
    assert_eq!(reset_leak_probability(0.0, 1.0, 1.0).unwrap(), 0.0);
    assert!(reset_leak_probability(1.0, 0.0, 0.0).is_err());
}

/// Closed-form overlap of two envelopes `f(t) ∝ e^{−at} sinh(βt)/β`, each
/// a sum of two exponentials.
fn overlap_oracle(p1: &PhysicalParams, p2: &PhysicalParams) -> f64 {
    let terms = |p: &PhysicalParams| -> [(C64, C64); 2] {
        let a = (p.kappa + p.gamma / 2.0) / 2.0;
        let b = beta(p);
        // sinh(βt)/β = (e^{βt} − e^{−βt}) / (2β)
        [(C64::new(1.0, 0.0) / (b * 2.0), -b + a), (-C64::new(1.0, 0.0) / (b * 2.0), b + a)]
    };
    let inner = |x: &PhysicalParams, y: &PhysicalParams| -> C64 {
        let mut s = C64::new(0.0, 0.0);
        for (cx, rx) in terms(x) {
            for (cy, ry) in terms(y) {
                s += cx.conj() * cy / (rx.conj() + ry);
            }
        }
        s
    };
    let o = inner(p1, p2) / (inner(p1, p1) * inner(p2, p2)).sqrt();
    o.re
}

#[test]
fn overlap_matches_closed_form() {
    let p1 = PhysicalParams::rubidium();
    let mut p2 = p1;
    p2.kappa *= 2.0;
    let o = wavepacket_overlap(&p1, &p2).unwrap();
    assert!(o.norm() < 1.0 - 1e-3);
    assert!((o.re - overlap_oracle(&p1, &p2)).abs() < 1e-9, "{o} vs {}", overlap_oracle(&p1, &p2));
    assert!(o.im.abs() < 1e-12);
    let back = wavepacket_overlap(&p2, &p1).unwrap();
    assert!((back - o.conj()).norm() < 1e-12);
    assert!((wavepacket_overlap(&p1, &p1).unwrap() - C64::new(1.0, 0.0)).norm() < 1e-12);
    let dark = TwoLevelEmitter::new(0.0, 1.0, 1.0).unwrap();
    assert!(envelope_overlap(&dark, &p1.emitter()).is_err());
}

fn three_sigma(count: usize, n: usize, p: f64) -> bool {
    let sigma = (n as f64 * p * (1.0 - p)).sqrt();
    (count as f64 - n as f64 * p).abs() <= 3.0 * sigma.max(1.0)
}

#[test]
fn sampled_event_frequencies() {
    let p = PhysicalParams::rubidium();
    let sampler = EmissionSampler::new(&p.emitter(), p.window).unwrap();
    let (pl, ps, pn) = sampler.probabilities();
    let window_leak = leak_probability_window(&p);
    assert!((pl - window_leak).abs() < 1e-9);
    assert!((pl + ps + pn - 1.0).abs() < 1e-8);
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let n = 100_000;
    let (mut leaks, mut sponts, mut lefts) = (0, 0, 0);
    let mut early = 0;
    for _ in 0..n {
        match sampler.sample(&mut rng) {
            EmissionEvent::PhotonLeak { time, polarization } => {
                assert!(time > 0.0 && time <= p.window);
                leaks += 1;
                if polarization == Polarization::L {
                    lefts += 1;
                }
                if time < 0.05 {
                    early += 1;
                }
            }
            EmissionEvent::SpontaneousEmission { time } => {
                assert!(time > 0.0 && time <= p.window);
                sponts += 1;
            }
            EmissionEvent::NoEvent => {}
        }
    }
    assert!(three_sigma(leaks, n, pl));
    assert!(three_sigma(sponts, n, ps));
    assert!(three_sigma(lefts, leaks, 0.5));
    // Leak-time distribution: fraction before 50 ns from the rate integral.
    let e = p.emitter();
    let early_p = e.leak_within(0.05) / pl;
    assert!(three_sigma(early, leaks, early_p));
}

#[test]
fn sampler_limits() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let lossless_atom = PhysicalParams::new(30.0, 10.0, 0.0, 50.0).unwrap();
    for _ in 0..1000 {
        assert_eq!(sample_emission_event(&lossless_atom, &mut rng).unwrap().kind(), EventKind::PhotonLeak);
    }
    let no_coupling = PhysicalParams::new(0.0, 10.0, 5.0, 1.0).unwrap();
    for _ in 0..1000 {
        assert_ne!(sample_emission_event(&no_coupling, &mut rng).unwrap().kind(), EventKind::PhotonLeak);
    }
}

#[test]
fn unitary_limit_conserves_norm() {
    let p = PhysicalParams::new(17.0, 0.0, 0.0, 1.0).unwrap();
    let grid: Vec<f64> = (0..50).map(|j| j as f64 * 0.03).collect();
    for (t, o) in grid.iter().zip(ode_oracle_integrate(&p, &grid, OdeOptions::default()).unwrap()) {
        assert!((o.norm_sqr() - 1.0).abs() < 1e-9);
        assert!((amplitudes_at(&p, *t).norm_sqr() - 1.0).abs() < 1e-12);
    }
    let decay = PhysicalParams::new(0.0, 1.0, 3.0, 1.0).unwrap();
    let a = amplitudes_at(&decay, 0.7);
    assert!((a.c_alpha.re - (-1.5 * 0.7f64).exp()).abs() < 1e-15);
}

fn rates() -> impl Strategy<Value = (f64, f64, f64)> {
    let r = || (-2.3f64..5.7).prop_map(f64::exp);
    (r(), r(), r())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn totals_conserve_probability((h, k, g) in rates()) {
        let p = PhysicalParams::new(h, k, g, 1.0).unwrap();
        let sum = leak_probability_total(&p).unwrap() + spont_probability_total(&p).unwrap();
        prop_assert!((sum - 1.0).abs() < 1e-8);
    }

    #[test]
    fn window_budget_closes((h, k, g) in rates(), w in 0.01f64..2.0) {
        let p = PhysicalParams::new(h, k, g, w).unwrap();
        let e = p.emitter();
        let total = e.leak_within(w) + e.spont_within(w) + e.survival(w);
        prop_assert!((total - 1.0).abs() < 1e-8, "{}", total);
    }

    #[test]
    fn survival_norm_never_increases((h, k, g) in rates()) {
        let p = PhysicalParams::new(h, k, g, 1.0).unwrap();
        let mut last = 1.0 + 1e-15;
        for j in 0..200 {
            let n = amplitudes_at(&p, j as f64 * 2e-3).norm_sqr();
            prop_assert!(n <= last + 1e-13);
            last = n;
        }
    }

    #[test]
    fn ground_amplitude_monotone_when_overdamped(k in 1.0f64..100.0, g in 0.5f64..50.0, frac in 0.0f64..0.99) {
        // Real β with κ ≥ γ/2 keeps c_α positive and decreasing.
        prop_assume!(k >= g / 2.0);
        let h = frac * (k - g / 2.0) / 2f64.sqrt();
        let p = PhysicalParams::new(h, k, g, 1.0).unwrap();
        let mut last = f64::INFINITY;
        for j in 0..200 {
            let a = amplitudes_at(&p, j as f64 * 5e-3).c_alpha.norm();
            prop_assert!(a <= last + 1e-13);
            last = a;
        }
    }

    #[test]
    fn continuous_across_beta_zero(k in 0.5f64..100.0, g in 0.1f64..50.0, t in 0.001f64..0.5) {
        prop_assume!((k - g / 2.0).abs() > 1e-3);
        let h0 = (k - g / 2.0).abs() / 2f64.sqrt();
        let below = amplitudes_at(&PhysicalParams::new(h0 * (1.0 - 1e-9), k, g, 1.0).unwrap(), t);
        let at = amplitudes_at(&PhysicalParams::new(h0, k, g, 1.0).unwrap(), t);
        let above = amplitudes_at(&PhysicalParams::new(h0 * (1.0 + 1e-9), k, g, 1.0).unwrap(), t);
        prop_assert!(below.max_deviation(&at) < 1e-7);
        prop_assert!(above.max_deviation(&at) < 1e-7);
    }
}

#[test]
fn revivals_break_amplitude_monotonicity() {
    // Underdamped rates: |c_α| returns after its first zero.
    let p = PhysicalParams::rubidium();
    let values: Vec<f64> = (0..400).map(|j| amplitudes_at(&p, j as f64 * 2.5e-4).c_alpha.norm()).collect();
    assert!(values.windows(2).any(|w| w[1] > w[0] + 1e-6));
}
