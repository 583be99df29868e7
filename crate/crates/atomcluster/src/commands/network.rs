use atomcluster_core::dynamics::PhysicalParams;
use atomcluster_core::hilbert::{AtomLevel, MixedEnsemble, PolBasis, SparseHybridState};
use atomcluster_core::optics::{DetectorSpec, NetworkConfig, CORRECTABLE_THRESHOLD};
use atomcluster_core::protocol::{build_encoded_chain, build_four_atom_cluster, emission_branches, DetectorModel, ImperfectionModel};
use atomcluster_core::C64;

use crate::config::{RunConfig, TargetKind};
use crate::error::{CliError, CliResult};
use crate::netdoc::input_rails;
use crate::report::{Cell, Check, Report};

use super::Invocation;

pub const COLUMNS: [&str; 7] = ["pattern", "accepted", "probability", "correction", "fidelity", "correctable", "inputs"];

/// One atom per input rail (ids `1..=n` in rail order), each having emitted
/// a photon with certainty.
pub fn input_state(rails: &[u32]) -> CliResult<SparseHybridState> {
    let atoms: Vec<(u32, AtomLevel)> = (1..=rails.len() as u32).map(|a| (a, AtomLevel::Alpha)).collect();
    let mut s = SparseHybridState::product(&atoms)?;
    for &r in rails {
        s = s.with_rail(r, PolBasis::Circular)?;
    }
    let mode = [(0u8, C64::new(1.0, 0.0))];
    for (k, &r) in rails.iter().enumerate() {
        s = s.emit(k as u32 + 1, r, &emission_branches(), &mode)?;
    }
    Ok(s)
}

/// The network with the configured detector and input-rail imperfections.
fn dressed(cfg: &RunConfig, net: &NetworkConfig, rails: &[u32]) -> CliResult<NetworkConfig> {
    let window = cfg.window()?;
    let m = ImperfectionModel::ideal_with(PhysicalParams::rubidium(), 0, 0).with_window(window);
    let d = DetectorModel { efficiency: cfg.optics.detector_efficiency, dark_rate_hz: cfg.optics.dark_rate_hz };
    let dark = m.dark_probability(&d);
    if dark > 1.0 {
        return Err(CliError::Config(format!("dark rate {} Hz saturates the window", d.dark_rate_hz)));
    }
    let out = net.with_detectors(|s| DetectorSpec { efficiency: d.efficiency, dark_probability: dark, ..*s });
    let t = cfg.rail_transmissions();
    let losses: Vec<(u32, f64)> = if rails.len() == t.len() {
        rails.iter().copied().zip(t).collect()
    } else {
        rails.iter().map(|&r| (r, 1.0 - cfg.optics.photon_loss)).collect()
    };
    Ok(out.with_input_losses(&losses))
}

fn target(kind: TargetKind, inputs: usize) -> CliResult<Option<SparseHybridState>> {
    let chain = match (kind, inputs) {
        (TargetKind::None, _) => None,
        (TargetKind::Auto | TargetKind::FourAtom, 4) => Some(build_four_atom_cluster()?),
        (TargetKind::Auto | TargetKind::Bell, 2) => Some(build_encoded_chain(&[2])?),
        (TargetKind::Auto, _) => None,
        (k, n) => return Err(CliError::Config(format!("target {k:?} does not fit a network with {n} inputs"))),
    };
    Ok(chain.map(|c| c.state))
}

pub fn run(inv: &Invocation) -> CliResult<Report> {
    let net = inv.network()?;
    let rails = input_rails(&net);
    if rails.is_empty() {
        return Err(CliError::Config(String::from("network has no input rails")));
    }
    let cfg = &inv.config;
    let dressed = dressed(cfg, &net, &rails)?;
    let input = MixedEnsemble::pure(input_state(&rails)?);
    let mut table = dressed.run(&input)?;
    let target = target(cfg.target, rails.len())?;
    // Reachability is a property of the wiring, judged without detector noise.
    let mut reachable = None;
    if let Some(t) = &target {
        table.attach_corrections(t, CORRECTABLE_THRESHOLD)?;
        let mut clean = net.run(&input)?;
        clean.attach_corrections(t, CORRECTABLE_THRESHOLD)?;
        reachable = Some(clean.correctable_probability());
    }

    let mut report = Report::new("network", COLUMNS.to_vec(), inv.meta(None));
    let inputs = rails.iter().map(u32::to_string).collect::<Vec<_>>().join(" ");
    for e in &table.entries {
        let c = e.correction.as_ref();
        report.push_row(vec![
            table.label(&e.pattern).into(),
            e.accepted.into(),
            e.probability.into(),
            c.map(|c| c.label()).into(),
            c.map(|c| c.fidelity).into(),
            c.map(|c| c.correctable).into(),
            Cell::from(inputs.as_str()),
        ]);
    }
    let total = table.total_probability();
    report.checks.push(Check::required(
        "total_probability",
        (total - 1.0).abs() <= 1e-9,
        Some(total - 1.0),
        "outcome probabilities sum to one",
    ));
    let accepted = table.accepted_probability();
    report.checks.push(Check::flag("accepted_probability", true, Some(accepted), "heralded fraction of all rounds"));
    if let Some(reachable) = reachable {
        let detail = if reachable > 0.0 {
            "some accepted pattern corrects to the target"
        } else {
            "target unreachable: no accepted pattern of the noiseless network corrects to it"
        };
        report.checks.push(Check::flag("target_reachable", reachable > 0.0, Some(reachable), detail));
    }
    Ok(report)
}
