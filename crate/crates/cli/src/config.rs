use std::path::{Path, PathBuf};

use rank_obstruction::certify::{CertConfig, SardConfig};
use rank_obstruction::instance::{make_instance, Mode};
use rank_obstruction::{Instance64, InstanceParams64};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Everything a command needs. Loaded from `--config`, then overridden by flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub instance: Option<PathBuf>,
    pub m: Option<usize>,
    pub k: Option<usize>,
    pub n: Option<usize>,
    pub ball_radius: Option<f64>,
    pub s: Option<f64>,
    pub mode: Mode,
    pub seed: u64,
    pub depth: usize,
    pub samples: usize,
    pub checks: usize,
    pub tol: f64,
    pub fd_step: f64,
    pub generations: usize,
    pub threads: Option<usize>,
    #[serde(skip_serializing)]
    pub out: Option<PathBuf>,
    pub suite: String,
    pub input: Option<PathBuf>,
    pub jacobian: bool,
    pub padded: Option<PaddedDims>,
    pub sard: SardConfig,
    pub approx: ApproxSettings,
    pub slice: SliceSettings,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PaddedDims {
    pub ell: usize,
    pub r: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ApproxSettings {
    pub epsilons: Vec<f64>,
    pub samples: usize,
}

impl Default for ApproxSettings {
    fn default() -> Self {
        Self {
            epsilons: vec![0.2, 0.1, 0.05, 0.025],
            samples: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SliceSettings {
    pub axes: [usize; 2],
    pub resolution: usize,
    pub extent: f64,
    /// Base point of the plane; zeros when empty.
    pub offset: Vec<f64>,
}

impl Default for SliceSettings {
    fn default() -> Self {
        Self {
            axes: [0, 1],
            resolution: 64,
            extent: 1.0,
            offset: Vec::new(),
        }
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        let cert = CertConfig::default();
        Self {
            instance: None,
            m: None,
            k: None,
            n: None,
            ball_radius: None,
            s: None,
            mode: Mode::Desk,
            seed: cert.seed,
            depth: cert.depth,
            samples: cert.samples,
            checks: cert.checks,
            tol: cert.tol,
            fd_step: cert.fd_step,
            generations: cert.generations,
            threads: None,
            out: None,
            suite: "all".into(),
            input: None,
            jacobian: false,
            padded: None,
            sard: SardConfig::default(),
            approx: ApproxSettings::default(),
            slice: SliceSettings::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
                serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))
            }
        }
    }

    /// Fills unset instance parameters with the defaults of the selected mode.
    pub fn resolve(&mut self) {
        let (m, k, n, rb) = match self.mode {
            Mode::Toy => (2, 2, 2, 0.12),
            _ => (3, 4, 2, 0.15),
        };
        self.m.get_or_insert(m);
        self.k.get_or_insert(k);
        self.n.get_or_insert(n);
        self.ball_radius.get_or_insert(rb);
        self.s.get_or_insert(0.05);
    }

    pub fn params(&self) -> Result<InstanceParams64, CliError> {
        make_instance(
            self.m.unwrap_or(3),
            self.k.unwrap_or(4),
            self.n.unwrap_or(2),
            self.ball_radius.unwrap_or(0.15),
            self.s.unwrap_or(0.05),
            self.mode,
            self.seed,
        )
        .map_err(|e| CliError::Config(e.to_string()))
    }

    /// Loads `instance` if given, otherwise builds from the parameters.
    pub fn instance(&self) -> Result<Instance64, CliError> {
        match &self.instance {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
                Instance64::from_json(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))
            }
            None => Instance64::build(self.params()?).map_err(|e| CliError::Config(e.to_string())),
        }
    }

    pub fn cert_config(&self) -> CertConfig {
        CertConfig {
            depth: self.depth,
            samples: self.samples,
            checks: self.checks,
            tol: self.tol,
            fd_step: self.fd_step,
            seed: self.seed,
            generations: self.generations,
            ..CertConfig::default()
        }
    }
}
