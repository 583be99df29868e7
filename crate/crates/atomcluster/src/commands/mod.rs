//! The subcommands. Each turns an [`Invocation`] into a [`Report`].

use std::path::{Path, PathBuf};

use atomcluster_core::optics::NetworkConfig;
use serde_json::Value;

use crate::config::{parse_config, RunConfig};
use crate::error::{CliError, CliResult};
use crate::netdoc;
use crate::report::{Meta, Report};

pub mod fuse;
pub mod generate;
pub mod network;
pub mod oracle;
pub mod sweep;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::Subcommand)]
pub enum Command {
    /// One generation round: emission, optics, heralding and fidelity.
    Generate,
    /// Generation over a grid of parameter values.
    Sweep,
    /// Outcome table of a network document with ideal single-photon inputs.
    Network,
    /// Closed-form amplitudes against direct ODE integration.
    Oracle,
    /// Fusion of two chains and the cost of growing a long chain.
    Fuse,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Generate => "generate",
            Command::Sweep => "sweep",
            Command::Network => "network",
            Command::Oracle => "oracle",
            Command::Fuse => "fuse",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Sampling {
    pub seed: u64,
    pub trials: u64,
}

/// A parsed configuration plus the command-line overrides.
#[derive(Clone, Debug, Default)]
pub struct Invocation {
    pub config: RunConfig,
    /// Raw configuration bytes, hashed into the report.
    pub config_bytes: Vec<u8>,
    /// Directory that relative network paths resolve against.
    pub config_dir: Option<PathBuf>,
    /// Set when the configuration file is itself a network document.
    pub network_doc: Option<Value>,
    pub seed: Option<u64>,
    pub trials: Option<u64>,
    pub exact_only: bool,
}

impl Invocation {
    /// Parses configuration text. A document with a top-level `elements`
    /// list is taken as a bare network with default settings.
    pub fn from_text(text: &str, dir: Option<&Path>) -> CliResult<Self> {
        let mut inv = Invocation {
            config_bytes: text.as_bytes().to_vec(),
            config_dir: dir.map(Path::to_path_buf),
            ..Invocation::default()
        };
        let probe: Option<Value> = serde_json::from_str(text).ok();
        match probe {
            Some(v) if v.get("elements").is_some() => inv.network_doc = Some(v),
            _ => inv.config = parse_config(text)?,
        }
        Ok(inv)
    }

    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        match path {
            None => Self::from_text("{}", None),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", p.display())))?;
                Self::from_text(&text, p.parent())
            }
        }
    }

    pub fn network(&self) -> CliResult<NetworkConfig> {
        match &self.network_doc {
            Some(doc) => netdoc::from_value(doc),
            None => netdoc::resolve(self.config.network.as_ref(), self.config_dir.as_deref()),
        }
    }

    pub fn effective_seed(&self) -> Option<u64> {
        self.seed.or(self.config.seed)
    }

    /// Seed and trial count for sampling commands, or `None` when only the
    /// exact tables are wanted. Sampling without a seed is a config error.
    pub fn sampling(&self, default_trials: u64) -> CliResult<Option<Sampling>> {
        let trials = self.trials.or(self.config.trials).unwrap_or(default_trials);
        if self.exact_only || trials == 0 {
            return Ok(None);
        }
        let seed = self.effective_seed().ok_or_else(|| {
            CliError::Config(String::from("sampling needs a seed: pass --seed or set `seed` (or use --exact-only)"))
        })?;
        Ok(Some(Sampling { seed, trials }))
    }

    pub fn meta(&self, sampling: Option<Sampling>) -> Meta {
        Meta::new(sampling.map(|s| s.seed).or(self.effective_seed()), &self.config_bytes)
    }
}

pub fn execute(cmd: Command, inv: &Invocation) -> CliResult<Report> {
    if inv.network_doc.is_some() && cmd != Command::Network {
        return Err(CliError::Config(format!(
            "`{}` needs a run configuration; a bare network document only suits `network`",
            cmd.name()
        )));
    }
    match cmd {
        Command::Generate => generate::run(inv),
        Command::Sweep => sweep::run(inv),
        Command::Network => network::run(inv),
        Command::Oracle => oracle::run(inv),
        Command::Fuse => fuse::run(inv),
    }
}
