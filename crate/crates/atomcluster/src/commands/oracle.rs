use atomcluster_core::dynamics::{amplitudes_at, leak_probability_total, ode_oracle_integrate, spont_probability_total, OdeOptions, PhysicalParams};
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use rayon::prelude::*;

use crate::batch::with_pool;
use crate::config::OracleConfig;
use crate::error::{CliError, CliResult};
use crate::report::{Check, Report};

use super::Invocation;

pub const COLUMNS: [&str; 11] = [
    "set",
    "h",
    "kappa",
    "gamma",
    "beta_re",
    "beta_im",
    "t_end",
    "max_deviation",
    "budget_error",
    "leak_closed",
    "leak_quadrature",
];

const GRID: usize = 25;

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    let u = (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
    lo * (u * (hi / lo).ln()).exp()
}

/// Rates in rad/µs. Every fourth set sits on the β = 0 manifold and every
/// fourth after that just below it.
pub fn parameter_sets(seed: u64, n: usize) -> Vec<(f64, f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let kappa = log_uniform(&mut rng, 0.1, 300.0);
            let gamma = log_uniform(&mut rng, 0.1, 300.0);
            let edge = (kappa - gamma / 2.0).abs() / 2f64.sqrt();
            let h = match i % 4 {
                0 => edge * (1.0 + 1e-9),
                1 => edge * (1.0 - 1e-6),
                _ => log_uniform(&mut rng, 0.1, 300.0),
            };
            (h, kappa, gamma)
        })
        .collect()
}

struct SetResult {
    beta: (f64, f64),
    t_end: f64,
    deviation: f64,
    budget: f64,
    leak_closed: f64,
    leak_quad: f64,
}

fn evaluate(h: f64, kappa: f64, gamma: f64, opts: OdeOptions) -> CliResult<SetResult> {
    let p = PhysicalParams::new(h, kappa, gamma, 1.0)?;
    let a = (kappa + gamma / 2.0) / 2.0;
    let t_end = (4.0 / a).min(40.0 / h.max(kappa).max(gamma));
    let grid: Vec<f64> = (0..=GRID).map(|j| t_end * j as f64 / GRID as f64).collect();
    let ode = ode_oracle_integrate(&p, &grid, opts)?;
    let deviation = grid.iter().zip(&ode).map(|(t, o)| amplitudes_at(&p, *t).max_deviation(o)).fold(0.0, f64::max);
    let e = p.emitter();
    let budget = (e.leak_within(t_end) + e.spont_within(t_end) + e.survival(t_end) - 1.0).abs();
    let leak_closed = leak_probability_total(&p)?;
    let total = (leak_closed + spont_probability_total(&p)? - 1.0).abs();
    let leak_quad = e.horizon().map_or(f64::NAN, |hz| e.leak_within(hz));
    let b = e.beta();
    Ok(SetResult { beta: (b.re, b.im), t_end, deviation, budget: budget.max(total), leak_closed, leak_quad })
}

/// Largest amplitude jump across the β = 0 manifold, over a few rate pairs.
fn manifold_jump() -> CliResult<f64> {
    let mut worst: f64 = 0.0;
    for (kappa, gamma) in [(10.0, 3.0), (1.0, 40.0), (77.0, 0.5)] {
        let edge = (kappa - gamma / 2.0f64).abs() / 2f64.sqrt();
        let on = PhysicalParams::new(edge, kappa, gamma, 1.0)?;
        for s in [1.0 - 1e-10, 1.0 + 1e-10] {
            let near = PhysicalParams::new(edge * s, kappa, gamma, 1.0)?;
            for j in 1..=20 {
                let t = j as f64 * 0.2 / kappa.max(gamma);
                worst = worst.max(amplitudes_at(&on, t).max_deviation(&amplitudes_at(&near, t)));
            }
        }
    }
    Ok(worst)
}

/// Largest norm drift of the κ = γ = 0 evolution, ODE and closed form.
fn unitary_drift(opts: OdeOptions) -> CliResult<(f64, f64)> {
    let p = PhysicalParams::new(17.0, 0.0, 0.0, 1.0)?;
    let grid: Vec<f64> = (0..50).map(|j| j as f64 * 0.03).collect();
    let ode = ode_oracle_integrate(&p, &grid, opts)?;
    let ode_drift = ode.iter().map(|o| (o.norm_sqr() - 1.0).abs()).fold(0.0, f64::max);
    let closed = grid.iter().map(|t| (amplitudes_at(&p, *t).norm_sqr() - 1.0).abs()).fold(0.0, f64::max);
    Ok((ode_drift, closed))
}

pub fn run(inv: &Invocation) -> CliResult<Report> {
    let oc = inv.config.oracle.clone().unwrap_or_default();
    validate(&oc)?;
    let opts = OdeOptions { rtol: oc.integrator_rtol, atol: oc.integrator_atol, ..OdeOptions::default() };
    let sets = parameter_sets(oc.seed, oc.sets);
    let results: Vec<SetResult> =
        with_pool(|| sets.par_iter().map(|&(h, k, g)| evaluate(h, k, g, opts)).collect())?;

    let mut report = Report::new("oracle", COLUMNS.to_vec(), inv.meta(None));
    report.meta.seed = Some(oc.seed);
    let (mut worst, mut worst_set, mut budget, mut leak_gap) = (0.0f64, 0usize, 0.0f64, 0.0f64);
    for (i, (&(h, k, g), r)) in sets.iter().zip(&results).enumerate() {
        if r.deviation > worst {
            worst = r.deviation;
            worst_set = i;
        }
        budget = budget.max(r.budget);
        if r.leak_quad.is_finite() {
            leak_gap = leak_gap.max((r.leak_closed - r.leak_quad).abs());
        }
        report.push_row(vec![
            i.into(),
            h.into(),
            k.into(),
            g.into(),
            r.beta.0.into(),
            r.beta.1.into(),
            r.t_end.into(),
            r.deviation.into(),
            r.budget.into(),
            r.leak_closed.into(),
            r.leak_quad.into(),
        ]);
    }
    report.checks.push(Check::required(
        "analytic_vs_ode",
        worst <= oc.tolerance,
        Some(worst),
        format!("largest amplitude deviation over {} sets (set {worst_set}), tolerance {:e}", sets.len(), oc.tolerance),
    ));
    report.checks.push(Check::required(
        "probability_budget",
        budget <= 1e-8,
        Some(budget),
        "leak + spontaneous + survival closes to one",
    ));
    report.checks.push(Check::required(
        "leak_closed_form_vs_quadrature",
        leak_gap <= 1e-8,
        Some(leak_gap),
        "closed-form total leak against quadrature of the leak rate",
    ));
    let jump = manifold_jump()?;
    report.checks.push(Check::required(
        "continuity_across_beta_zero",
        jump <= 1e-7,
        Some(jump),
        "amplitudes on and either side of the critical coupling agree",
    ));
    let (ode_drift, closed_drift) = unitary_drift(opts)?;
    report.checks.push(Check::required(
        "lossless_norm",
        closed_drift <= 1e-12 && ode_drift <= oc.tolerance,
        Some(ode_drift.max(closed_drift)),
        format!("norm drift without decay: closed form {closed_drift:e}, integrator {ode_drift:e}"),
    ));
    Ok(report)
}

fn validate(oc: &OracleConfig) -> CliResult<()> {
    if oc.sets == 0 {
        return Err(CliError::Config(String::from("`oracle.sets` must be at least 1")));
    }
    for (name, v) in [("tolerance", oc.tolerance), ("integrator_rtol", oc.integrator_rtol), ("integrator_atol", oc.integrator_atol)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(CliError::Config(format!("`oracle.{name}` must be positive, got {v}")));
        }
    }
    Ok(())
}
