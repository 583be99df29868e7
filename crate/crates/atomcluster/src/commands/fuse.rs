use atomcluster_core::dynamics::envelope_overlap;
use atomcluster_core::protocol::{build_encoded_chain, expected_growth, fuse, grow_chain, GrowthModel};

use crate::batch::run_blocks;
use crate::config::FusionConfig;
use crate::error::{CliError, CliResult};
use crate::report::{Cell, Check, Report};

use super::Invocation;

pub const COLUMNS: [&str; 15] = [
    "kind",
    "label",
    "accepted",
    "probability",
    "correction",
    "fidelity",
    "fused_length",
    "visibility",
    "target",
    "runs",
    "mean_rounds",
    "expected_rounds",
    "mean_fusions",
    "expected_fusions",
    "mean_restarts",
];

fn validate(fc: &FusionConfig) -> CliResult<()> {
    if fc.target < 4 || fc.target % 2 == 1 {
        return Err(CliError::Config(format!("`fusion.target` must be even and at least 4, got {}", fc.target)));
    }
    for (name, l) in [("left_layout", &fc.left_layout), ("right_layout", &fc.right_layout)] {
        if l.is_empty() || l.contains(&0) || l.iter().sum::<usize>() < 2 {
            return Err(CliError::Config(format!("`fusion.{name}` must hold positive sizes totalling at least 2")));
        }
    }
    Ok(())
}

/// Running sums over growth runs.
#[derive(Default)]
struct Sums {
    n: f64,
    rounds: (f64, f64),
    fusions: (f64, f64),
    restarts: f64,
}

impl Sums {
    fn add(&mut self, rounds: f64, fusions: f64, restarts: f64) {
        self.n += 1.0;
        self.rounds.0 += rounds;
        self.rounds.1 += rounds * rounds;
        self.fusions.0 += fusions;
        self.fusions.1 += fusions * fusions;
        self.restarts += restarts;
    }

    fn merge(mut self, o: &Sums) -> Sums {
        self.n += o.n;
        self.rounds = (self.rounds.0 + o.rounds.0, self.rounds.1 + o.rounds.1);
        self.fusions = (self.fusions.0 + o.fusions.0, self.fusions.1 + o.fusions.1);
        self.restarts += o.restarts;
        self
    }

    /// Sample mean and its standard error.
    fn stat(&self, s: (f64, f64)) -> (f64, f64) {
        let mean = s.0 / self.n;
        let var = (s.1 / self.n - mean * mean).max(0.0) * self.n / (self.n - 1.0).max(1.0);
        (mean, (var / self.n).sqrt())
    }
}

fn empty_row(kind: &str) -> Vec<Cell> {
    let mut row = vec![Cell::Empty; COLUMNS.len()];
    row[0] = kind.into();
    row
}

pub fn run(inv: &Invocation) -> CliResult<Report> {
    let cfg = &inv.config;
    let fc = cfg.fusion.clone().unwrap_or_default();
    validate(&fc)?;
    let sampling = inv.sampling(10_000)?;
    let model = cfg.fusion_model()?;
    let left = build_encoded_chain(&fc.left_layout)?;
    let right = build_encoded_chain(&fc.right_layout)?.renumbered(left.len() as u32 + 1)?;
    let result = fuse(&left, &right, &model)?;
    let visibility = envelope_overlap(&model.cavities[0].reset_emitter(), &model.cavities[1].reset_emitter())
        .map(|c| c.norm())
        .ok();
    let fused_len = result.target.len();

    let mut report = Report::new("fuse", COLUMNS.to_vec(), inv.meta(sampling));
    for e in &result.table.entries {
        let c = e.correction.as_ref();
        let mut row = empty_row("pattern");
        row[1] = result.table.label(&e.pattern).into();
        row[2] = e.accepted.into();
        row[3] = e.probability.into();
        row[4] = c.map(|c| c.label()).into();
        row[5] = c.map(|c| c.fidelity).into();
        report.push_row(row);
    }
    let acceptance = result.acceptance();
    let fidelity = result.table.mean_corrected_fidelity();
    let mut row = empty_row("summary");
    row[1] = "fusion".into();
    row[3] = acceptance.into();
    row[5] = fidelity.into();
    row[6] = fused_len.into();
    row[7] = visibility.into();
    report.push_row(row);

    let total = result.table.total_probability();
    report.checks.push(Check::required(
        "total_probability",
        (total - 1.0).abs() <= 1e-9,
        Some(total - 1.0),
        "outcome probabilities sum to one",
    ));
    let expected_len = left.len() + right.len() - 2;
    report.checks.push(Check::required(
        "fused_length",
        fused_len == expected_len,
        Some(fused_len as f64),
        format!("fusing {} and {} atoms leaves {expected_len}", left.len(), right.len()),
    ));
    let min_fid = result.table.accepted().filter_map(|e| e.correction.as_ref().map(|c| c.fidelity)).reduce(f64::min);
    if cfg.optics.dark_rate_hz == 0.0 && model.equal_cavities() {
        if let Some(f) = min_fid {
            report.checks.push(Check::required(
                "fidelity_unaffected",
                f >= 1.0 - 1e-9,
                Some(1.0 - f),
                "every accepted outcome corrects to the fused chain",
            ));
        }
    } else if let Some(f) = fidelity {
        report.checks.push(Check::flag(
            "fidelity_unaffected",
            f >= 1.0 - 1e-9,
            Some(f),
            format!("mean corrected fidelity {f:.6} with visibility {}", visibility.map_or("n/a".into(), |v| format!("{v:.6}"))),
        ));
    }

    if let Some(s) = sampling {
        let net = inv.network()?;
        let gen = cfg.generation_model(net.detectors().count())?;
        let gm = GrowthModel::from_models(&gen, &net, &model, fc.policy.into())?;
        let (exp_rounds, exp_fusions) = expected_growth(fc.target, &gm)?;
        let blocks = run_blocks(s.seed, 0, s.trials, |rng, n| {
            let mut sums = Sums::default();
            for _ in 0..n {
                let st = grow_chain(fc.target, &gm, rng)?;
                sums.add(st.generation_rounds as f64, st.fusion_attempts as f64, st.restarts as f64);
            }
            Ok(sums)
        })?;
        let sums = blocks.iter().fold(Sums::default(), Sums::merge);
        let (mr, er) = sums.stat(sums.rounds);
        let (mf, ef) = sums.stat(sums.fusions);
        let mut row = empty_row("growth");
        row[1] = format!("{:?}", gm.policy).into();
        row[8] = fc.target.into();
        row[9] = s.trials.into();
        row[10] = mr.into();
        row[11] = exp_rounds.into();
        row[12] = mf.into();
        row[13] = exp_fusions.into();
        row[14] = (sums.restarts / sums.n).into();
        report.push_row(row);
        for (name, mean, se, exp) in [("growth_rounds", mr, er, exp_rounds), ("growth_fusions", mf, ef, exp_fusions)] {
            let dev = (mean - exp).abs();
            report.checks.push(Check::required(
                format!("{name}_within_3sigma"),
                dev <= 3.0 * se.max(1e-12),
                Some(dev),
                format!("sampled mean {mean:.4} against exact {exp:.4} (standard error {se:.4})"),
            ));
        }
    }
    Ok(report)
}
