//! Validated input data: the prepared packet, the detected packet, the
//! particle constants and the source-to-detector displacement.

use thiserror::Error;

use crate::minkowski::FourVector;

/// Rejected input. Every variant names the offending field so front ends can
/// report actionable messages.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("{field} must be positive, got {value}")]
    NotPositive { field: String, value: f64 },
    #[error("{field} must be non-negative, got {value}")]
    Negative { field: String, value: f64 },
    #[error("{field} must be finite, got {value}")]
    NotFinite { field: String, value: f64 },
    #[error("{field} must be at least {min}, got {value}")]
    TooSmall { field: String, min: usize, value: usize },
    #[error("{field} must be even, got {value}")]
    NotEven { field: String, value: usize },
    #[error("screen time window t_max = {t_max} must exceed the radius {radius}")]
    WindowInsideScreen { t_max: f64, radius: f64 },
}

fn check_finite(field: &str, value: f64) -> Result<(), ConfigError> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(ConfigError::NotFinite { field: field.into(), value })
    }
}

fn check_positive(field: &str, value: f64) -> Result<(), ConfigError> {
    check_finite(field, value)?;
    if value > 0.0 {
        Ok(())
    } else {
        Err(ConfigError::NotPositive { field: field.into(), value })
    }
}

fn check_vector(field: &str, v: &FourVector) -> Result<(), ConfigError> {
    for mu in 0..4 {
        check_finite(&format!("{field}[{mu}]"), v[mu])?;
    }
    Ok(())
}

/// Non-negative inner time. The inner time parametrises the evolution from
/// preparation (`0`) to detection (`C`).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct LifeTime(f64);

impl LifeTime {
    pub const ZERO: LifeTime = LifeTime(0.0);

    pub fn new(c: f64) -> Result<Self, ConfigError> {
        check_finite("life time", c)?;
        if c < 0.0 {
            return Err(ConfigError::Negative { field: "life time".into(), value: c });
        }
        Ok(LifeTime(c))
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.0
    }
}

impl std::fmt::Display for LifeTime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// The prepared packet: a separable Gaussian with per-axis widths, a central
/// momentum and a real overall amplitude.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPacket {
    /// Centre of the packet at inner time zero.
    pub center: FourVector,
    /// Per-axis width `sigma0_mu > 0`.
    pub sigma: [f64; 4],
    /// Central momentum `p0`.
    pub momentum: FourVector,
    /// Real positive overall amplitude; `1` unless a normalization pass
    /// supplies a different value.
    pub amplitude: f64,
}

impl GaussianPacket {
    /// Packet at the origin with unit amplitude.
    pub fn new(sigma: [f64; 4], momentum: FourVector) -> Self {
        GaussianPacket { center: FourVector::ZERO, sigma, momentum, amplitude: 1.0 }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        check_vector("packet center", &self.center)?;
        check_vector("packet momentum", &self.momentum)?;
        for mu in 0..4 {
            // Positive width guards every downstream division by sigma^2.
            check_positive(&format!("packet width sigma[{mu}]"), self.sigma[mu])?;
        }
        check_positive("packet amplitude", self.amplitude)?;
        Ok(())
    }
}

/// The detected packet of the overlap integral: per-axis widths (all zero in
/// the sharp-detector limit) and a central momentum that is ignored when the
/// widths vanish.
#[derive(Debug, Clone, PartialEq)]
pub struct FinalPacket {
    /// Per-axis width `sigma1_mu >= 0`.
    pub sigma: [f64; 4],
    /// Central momentum `p1`.
    pub momentum: FourVector,
}

impl FinalPacket {
    /// Sharp-detector limit: all widths zero, momentum irrelevant.
    pub fn sharp() -> Self {
        FinalPacket { sigma: [0.0; 4], momentum: FourVector::ZERO }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        check_vector("final momentum", &self.momentum)?;
        for mu in 0..4 {
            check_finite(&format!("final width sigma1[{mu}]"), self.sigma[mu])?;
            if self.sigma[mu] < 0.0 {
                return Err(ConfigError::Negative {
                    field: format!("final width sigma1[{mu}]"),
                    value: self.sigma[mu],
                });
            }
        }
        Ok(())
    }
}

/// Everything that defines a run except the displacement: packet, mass and
/// hbar. Screen scans pair this with one displacement per detector.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentTemplate {
    pub packet: GaussianPacket,
    pub mass: f64,
    pub hbar: f64,
}

impl ExperimentTemplate {
    pub fn new(packet: GaussianPacket, mass: f64, hbar: f64) -> Self {
        ExperimentTemplate { packet, mass, hbar }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.packet.validate()?;
        check_positive("mass", self.mass)?;
        check_positive("hbar", self.hbar)?;
        Ok(())
    }

    /// Fix a source-to-detector displacement.
    pub fn at_displacement(&self, displacement: FourVector) -> Experiment {
        Experiment {
            packet: self.packet.clone(),
            mass: self.mass,
            hbar: self.hbar,
            displacement,
        }
    }
}

/// A fully specified single-amplitude problem.
#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    pub packet: GaussianPacket,
    /// Particle mass `m > 0`.
    pub mass: f64,
    /// Quantum of action; kept tunable so the classical limit can be probed.
    pub hbar: f64,
    /// Displacement `DeltaX` from preparation centre to detection centre.
    pub displacement: FourVector,
}

impl Experiment {
    pub fn template(&self) -> ExperimentTemplate {
        ExperimentTemplate { packet: self.packet.clone(), mass: self.mass, hbar: self.hbar }
    }
}

/// Validates and returns the experiment unchanged. Validation is idempotent:
/// an already-valid experiment passes through bit for bit.
pub fn validate_experiment(exp: Experiment) -> Result<Experiment, ConfigError> {
    exp.template().validate()?;
    check_vector("displacement", &exp.displacement)?;
    Ok(exp)
}
