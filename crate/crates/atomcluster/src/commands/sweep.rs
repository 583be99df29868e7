use rayon::prelude::*;

use crate::batch::with_pool;
use crate::config::{RunConfig, SweepAxis, SweepParam};
use crate::error::{CliError, CliResult};
use crate::report::{Check, Report};

use super::generate::{evaluate_point, PointOutcome, COLUMNS};
use super::Invocation;

/// Largest grid a sweep will evaluate.
pub const MAX_GRID_POINTS: u64 = 1_000_000;

/// Number of grid points, refusing grids beyond [`MAX_GRID_POINTS`].
pub fn grid_size(axes: &[SweepAxis]) -> CliResult<u64> {
    let mut n: u64 = 1;
    for a in axes {
        n = n.checked_mul(a.len()?).filter(|&n| n <= MAX_GRID_POINTS).ok_or_else(|| {
            CliError::Resource(format!("sweep grid exceeds {MAX_GRID_POINTS} points"))
        })?;
    }
    Ok(n)
}

/// Per-axis indices of grid point `i`; the last axis varies fastest.
fn indices(axes: &[SweepAxis], mut i: u64) -> Vec<u64> {
    let mut idx = vec![0; axes.len()];
    for (k, a) in axes.iter().enumerate().rev() {
        let n = a.len().unwrap_or(1);
        idx[k] = i % n;
        i /= n;
    }
    idx
}

fn point_config(base: &RunConfig, axes: &[SweepAxis], i: u64) -> CliResult<RunConfig> {
    let mut cfg = base.clone();
    for (a, j) in axes.iter().zip(indices(axes, i)) {
        cfg = cfg.with_param(a.parameter, a.value(j), a.unit);
    }
    cfg.sweep = None;
    cfg.validate()?;
    Ok(cfg)
}

/// Expected direction of acceptance along an axis: `Some(-1.0)` for
/// non-increasing, `Some(1.0)` for non-decreasing.
fn direction(p: SweepParam) -> Option<f64> {
    match p {
        SweepParam::Gamma | SweepParam::PhotonLoss => Some(-1.0),
        SweepParam::DetectorEfficiency => Some(1.0),
        _ => None,
    }
}

fn monotonicity_checks(axes: &[SweepAxis], points: &[PointOutcome]) -> CliResult<Vec<Check>> {
    let mut checks = Vec::new();
    let mut stride = 1u64;
    let mut strides = vec![0; axes.len()];
    for (k, a) in axes.iter().enumerate().rev() {
        strides[k] = stride;
        stride *= a.len()?;
    }
    for (k, a) in axes.iter().enumerate() {
        let Some(dir) = direction(a.parameter) else { continue };
        let mut worst: f64 = 0.0;
        let mut pairs = 0;
        for i in 0..points.len() as u64 {
            let idx = indices(axes, i);
            if idx[k] + 1 >= a.len()? {
                continue;
            }
            let j = i + strides[k];
            let dv = a.value(idx[k] + 1) - a.value(idx[k]);
            if dv == 0.0 {
                continue;
            }
            let (pa, pb) = (points[i as usize].acceptance, points[j as usize].acceptance);
            // Positive when the step goes the wrong way.
            let violation = -(pb - pa) * dir * dv.signum();
            worst = worst.max(violation);
            pairs += 1;
        }
        let word = if dir < 0.0 { "non-increasing" } else { "non-decreasing" };
        checks.push(Check::required(
            format!("monotone_in_{}", a.parameter.name()),
            worst <= 1e-12,
            Some(worst),
            format!("acceptance {word} in {} over {pairs} neighbouring pairs", a.parameter.name()),
        ));
    }
    Ok(checks)
}

pub fn run(inv: &Invocation) -> CliResult<Report> {
    let axes = inv
        .config
        .sweep
        .clone()
        .ok_or_else(|| CliError::Config(String::from("`sweep` needs a `sweep` list of axes in the config")))?;
    let n = grid_size(&axes)?;
    let net = inv.network()?;
    let sampling = inv.sampling(100_000)?;
    let configs = (0..n).map(|i| point_config(&inv.config, &axes, i)).collect::<CliResult<Vec<_>>>()?;
    let points: Vec<PointOutcome> = with_pool(|| {
        configs
            .par_iter()
            .enumerate()
            .map(|(i, cfg)| evaluate_point(cfg, &net, i as u64, sampling, false))
            .collect()
    })?;
    let mut report = Report::new("sweep", COLUMNS.to_vec(), inv.meta(sampling));
    let mono = monotonicity_checks(&axes, &points)?;
    for p in points {
        report.push_row(p.row);
        report.checks.extend(p.checks);
    }
    report.checks.extend(mono);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Range;

    fn axis(p: SweepParam, steps: u64) -> SweepAxis {
        SweepAxis { parameter: p, values: None, range: Some(Range { from: 0.0, to: 0.5, steps }), unit: None }
    }

    #[test]
    fn grid_indexing_and_limits() {
        let axes = vec![axis(SweepParam::PhotonLoss, 3), axis(SweepParam::DetectorEfficiency, 2)];
        assert_eq!(grid_size(&axes).unwrap(), 6);
        assert_eq!(indices(&axes, 3), vec![1, 1]);
        assert_eq!(grid_size(&[]).unwrap(), 1);
        let big = vec![axis(SweepParam::PhotonLoss, 1001), axis(SweepParam::DarkRateHz, 1000)];
        assert_eq!(grid_size(&big).unwrap_err().exit_code(), 3);
    }
}
