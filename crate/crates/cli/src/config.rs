//! TOML run configuration: explicit schema, unknown keys rejected by name.

use std::path::{Path, PathBuf};

use qaction_core::{
    Experiment, ExperimentTemplate, FourVector, GaussianPacket, QuadratureSpec, Screen,
    SolverConfig,
};
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: ExperimentSection,
    pub screen: Option<ScreenSection>,
    pub quadrature: Option<QuadratureSection>,
    pub solver: Option<SolverSection>,
    pub output: Option<OutputSection>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub mass: f64,
    pub hbar: f64,
    /// Source-to-detector displacement; required by the single-point
    /// commands, ignored by screen commands.
    pub displacement: Option<[f64; 4]>,
    pub packet: PacketSection,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PacketSection {
    pub center: Option<[f64; 4]>,
    pub sigma: [f64; 4],
    pub momentum: [f64; 4],
    pub amplitude: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScreenSection {
    pub radius: f64,
    pub theta_points: usize,
    pub phi_points: usize,
    pub time_points: usize,
    pub t_max: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureSection {
    pub nodes: Option<usize>,
    pub window: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub residual_tol: Option<f64>,
    pub far_field_threshold: Option<f64>,
    pub refine_threshold: Option<f64>,
    pub bracket_doublings: Option<u32>,
}

/// Default output paths per command; `--out` wins over these.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub amplitude: Option<PathBuf>,
    pub action: Option<PathBuf>,
    pub stationary_c: Option<PathBuf>,
    pub scan: Option<PathBuf>,
    pub normalize: Option<PathBuf>,
    pub nonrel: Option<PathBuf>,
    pub verify: Option<PathBuf>,
}

fn vector(values: [f64; 4]) -> FourVector {
    FourVector::new(values[0], values[1], values[2], values[3])
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)?;
        toml::from_str(&text)
            .map_err(|err| CliError::Config(format!("{}: {}", path.display(), err.message())))
    }

    /// Packet, mass and hbar; validated.
    pub fn template(&self) -> Result<ExperimentTemplate, CliError> {
        let packet = &self.experiment.packet;
        let mut gaussian = GaussianPacket::new(packet.sigma, vector(packet.momentum));
        if let Some(center) = packet.center {
            gaussian.center = vector(center);
        }
        if let Some(amplitude) = packet.amplitude {
            gaussian.amplitude = amplitude;
        }
        let template =
            ExperimentTemplate::new(gaussian, self.experiment.mass, self.experiment.hbar);
        template.validate().map_err(|err| CliError::Config(err.to_string()))?;
        Ok(template)
    }

    /// Template plus the configured displacement.
    pub fn experiment(&self) -> Result<Experiment, CliError> {
        let template = self.template()?;
        let displacement = self.experiment.displacement.ok_or_else(|| {
            CliError::Config("experiment.displacement is required by this command".into())
        })?;
        Ok(template.at_displacement(vector(displacement)))
    }

    pub fn screen(&self) -> Result<Screen, CliError> {
        let section = self
            .screen
            .as_ref()
            .ok_or_else(|| CliError::Config("a [screen] section is required by this command".into()))?;
        let screen = Screen {
            radius: section.radius,
            theta_points: section.theta_points,
            phi_points: section.phi_points,
            time_points: section.time_points,
            t_max: section.t_max,
        };
        screen.validate().map_err(|err| CliError::Config(err.to_string()))?;
        Ok(screen)
    }

    pub fn solver(&self) -> SolverConfig {
        let mut config = SolverConfig::default();
        if let Some(section) = &self.solver {
            if let Some(v) = section.residual_tol {
                config.residual_tol = v;
            }
            if let Some(v) = section.far_field_threshold {
                config.far_field_threshold = v;
            }
            if let Some(v) = section.refine_threshold {
                config.refine_threshold = v;
            }
            if let Some(v) = section.bracket_doublings {
                config.bracket_doublings = v;
            }
        }
        config
    }

    pub fn quadrature(&self) -> Result<QuadratureSpec, CliError> {
        let defaults = QuadratureSpec::default();
        let (mut nodes, mut window) = (defaults.nodes(), defaults.window());
        if let Some(section) = &self.quadrature {
            if let Some(v) = section.nodes {
                nodes = v;
            }
            if let Some(v) = section.window {
                window = v;
            }
        }
        QuadratureSpec::new(nodes, window).map_err(|err| CliError::Config(err.to_string()))
    }

    /// Output path for a command: explicit flag, then the [output] section.
    pub fn output_path(&self, command: &str, flag: Option<PathBuf>) -> Option<PathBuf> {
        if flag.is_some() {
            return flag;
        }
        let section = self.output.as_ref()?;
        match command {
            "amplitude" => section.amplitude.clone(),
            "action" => section.action.clone(),
            "stationary-c" => section.stationary_c.clone(),
            "scan" => section.scan.clone(),
            "normalize" => section.normalize.clone(),
            "nonrel" => section.nonrel.clone(),
            "verify" => section.verify.clone(),
            _ => None,
        }
    }
}
