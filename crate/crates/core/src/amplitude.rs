//! Closed-form transition amplitude, its continuous phase (the quantum
//! action), the classical action, the quadratic action correction and the
//! probability envelope.
//!
//! All functions here are analytic in the inputs; the numerical
//! cross-checks live in [`crate::oracle`].

use num_complex::Complex64;
use thiserror::Error;

use crate::experiment::{Experiment, LifeTime};
use crate::minkowski::THETA;

/// Largest magnitude allowed for the real part of the amplitude exponent.
/// Beyond this `exp` would silently saturate to `inf`/`0` in double
/// precision, so the evaluation errors out instead.
pub const EXPONENT_LIMIT: f64 = 700.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AmplitudeError {
    #[error(
        "amplitude exponent out of range: Re = {re:.6e}, limit {limit}; \
         rescale widths, displacement or amplitude before evaluating"
    )]
    ExponentOutOfRange { re: f64, limit: f64 },
}

/// One evaluated amplitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmplitudeResult {
    /// The complex amplitude `K`.
    pub value: Complex64,
    /// The continuous phase `Lambda` (the quantum action), in units of
    /// action. Agrees with `arg(value) * hbar` modulo `2 pi hbar`.
    pub phase: f64,
    /// `|K|^2`, exactly `value.norm_sqr()`.
    pub modulus_sq: f64,
    /// Modulus of the spreading prefactor alone.
    pub prefactor_modulus: f64,
}

/// Per-axis complex denominator `1 + 2 i hbar theta C / sigma^2`.
///
/// Its real part is identically one, so the principal square root is
/// continuous in `C` on `[0, inf)` and equals one at `C = 0`.
#[inline]
fn axis_denominator(exp: &Experiment, mu: usize, c: f64) -> Complex64 {
    let s2 = exp.packet.sigma[mu] * exp.packet.sigma[mu];
    Complex64::new(1.0, 2.0 * exp.hbar * THETA[mu] * c / s2)
}

/// Closed-form amplitude at inner time `C`.
///
/// The packet amplitude acts as the overall constant; widths, momentum,
/// displacement, mass and hbar enter through the spreading prefactor and the
/// exponent. The square-root branch is fixed by continuity from `C = 0`,
/// where every factor is one.
pub fn closed_form_amplitude(
    exp: &Experiment,
    c: LifeTime,
) -> Result<AmplitudeResult, AmplitudeError> {
    let cv = c.value();
    let hbar = exp.hbar;
    let mut prefactor = Complex64::new(1.0, 0.0);
    let mut exponent = Complex64::new(0.0, exp.mass * exp.mass * cv / hbar);
    for mu in 0..4 {
        let s2 = exp.packet.sigma[mu] * exp.packet.sigma[mu];
        let d = axis_denominator(exp, mu, cv);
        // Re(d) = 1 keeps the principal branch on the continuous sheet.
        prefactor *= d.sqrt().finv();
        let z = Complex64::new(
            exp.packet.momentum[mu],
            hbar * THETA[mu] * exp.displacement[mu] / s2,
        );
        exponent += z * z / d * (s2 / (2.0 * hbar * hbar));
    }
    if exponent.re.abs() > EXPONENT_LIMIT {
        return Err(AmplitudeError::ExponentOutOfRange { re: exponent.re, limit: EXPONENT_LIMIT });
    }
    let value = prefactor * exponent.exp() * exp.packet.amplitude;
    Ok(AmplitudeResult {
        value,
        phase: quantum_action(exp, c),
        modulus_sq: value.norm_sqr(),
        prefactor_modulus: prefactor.norm(),
    })
}

/// Modulus of the spreading prefactor, `prod_mu (1 + 4 hbar^2 C^2 /
/// sigma_mu^4)^(-1/4)`. Cannot overflow; decays like `C^(-1/2)` per axis once
/// the spreading term dominates.
pub fn prefactor_modulus(sigma: &[f64; 4], hbar: f64, c: f64) -> f64 {
    let mut p = 1.0;
    for &s in sigma {
        let s2 = s * s;
        let u = 2.0 * hbar * c / s2;
        p *= (1.0 + u * u).powf(-0.25);
    }
    p
}

/// The quantum action `Lambda(C)`: the continuous phase of the amplitude in
/// units of action.
///
/// Defined by the analytic expression (one arctangent and one rational term
/// per axis plus the mass term), not by the wrapped argument of the complex
/// value, so it stays single-valued along the whole trajectory.
pub fn quantum_action(exp: &Experiment, c: LifeTime) -> f64 {
    let cv = c.value();
    let hbar = exp.hbar;
    let mut lambda = exp.mass * exp.mass * cv;
    for mu in 0..4 {
        let s2 = exp.packet.sigma[mu] * exp.packet.sigma[mu];
        let s4 = s2 * s2;
        let p = exp.packet.momentum[mu];
        let dx = exp.displacement[mu];
        let denom = 1.0 + 4.0 * hbar * hbar * cv * cv / s4;
        lambda -= 0.5 * hbar * (2.0 * hbar * THETA[mu] * cv / s2).atan();
        lambda -= THETA[mu] * ((p * p - hbar * hbar * dx * dx / s4) * cv - p * dx) / denom;
    }
    lambda
}

/// Analytic derivative of the quantum action with respect to the inner time.
pub fn action_derivative(exp: &Experiment, c: LifeTime) -> f64 {
    let cv = c.value();
    let hbar = exp.hbar;
    let h2 = hbar * hbar;
    let mut out = exp.mass * exp.mass;
    for mu in 0..4 {
        let s2 = exp.packet.sigma[mu] * exp.packet.sigma[mu];
        let s4 = s2 * s2;
        let p = exp.packet.momentum[mu];
        let dx = exp.displacement[mu];
        let denom = 1.0 + 4.0 * h2 * cv * cv / s4;
        let n = (p * p - h2 * dx * dx / s4) * cv - p * dx;
        let n_prime = p * p - h2 * dx * dx / s4;
        let d_prime = 8.0 * h2 * cv / s4;
        out -= THETA[mu] * (h2 / (s2 * denom) + (n_prime * denom - n * d_prime) / (denom * denom));
    }
    out
}

/// The classical action `Lambda0(C) = sum theta p dX - (sum theta p^2 - m^2) C`,
/// the hbar-free limit of the quantum action.
pub fn classical_action(exp: &Experiment, c: LifeTime) -> f64 {
    classical_action_raw(
        &exp.packet.momentum.0,
        &exp.displacement.0,
        exp.mass,
        c.value(),
    )
}

/// Classical action from raw components; shared with the plane-wave identity
/// check, which has no packet to build an [`Experiment`] from.
pub(crate) fn classical_action_raw(p: &[f64; 4], dx: &[f64; 4], mass: f64, c: f64) -> f64 {
    let mut pdx = 0.0;
    let mut p2 = 0.0;
    for mu in 0..4 {
        pdx += THETA[mu] * p[mu] * dx[mu];
        p2 += THETA[mu] * p[mu] * p[mu];
    }
    pdx - (p2 - mass * mass) * c
}

/// Quadratic (order `hbar^2`) coefficient of the quantum action expansion:
/// `Lambda = Lambda0 + hbar^2 Lambda2 + O(hbar^4)` at fixed `C`.
pub fn action_correction(exp: &Experiment, c: LifeTime) -> f64 {
    let cv = c.value();
    let mut sum = 0.0;
    for mu in 0..4 {
        let s2 = exp.packet.sigma[mu] * exp.packet.sigma[mu];
        let s4 = s2 * s2;
        let p = exp.packet.momentum[mu];
        let dx = exp.displacement[mu];
        sum += 4.0 * THETA[mu] * (p * dx - p * p * cv) * cv * cv / s4;
        sum += THETA[mu] * (1.0 / s2 - dx * dx / s4) * cv;
    }
    -sum
}

/// Derivative of [`action_correction`] in `C`; the quasi-classical life times
/// are exactly its roots.
pub fn action_correction_derivative(exp: &Experiment, c: f64) -> f64 {
    let mut sum = 0.0;
    for mu in 0..4 {
        let s2 = exp.packet.sigma[mu] * exp.packet.sigma[mu];
        let s4 = s2 * s2;
        let p = exp.packet.momentum[mu];
        let dx = exp.displacement[mu];
        sum += 8.0 * THETA[mu] * p * dx * c / s4 - 12.0 * THETA[mu] * p * p * c * c / s4;
        sum += THETA[mu] * (1.0 / s2 - dx * dx / s4);
    }
    -sum
}

/// Probability envelope `exp[-sum (dX - 2 p C)^2 / (2 (sigma^2 + 4 hbar^2 C^2
/// / sigma^2))]`.
///
/// The square is Euclidean: each axis contributes a non-negative deficit, so
/// the envelope peaks at exactly `dX = 2 p C` with value one. `|K|^2 /
/// envelope` is independent of the displacement.
pub fn envelope(exp: &Experiment, c: LifeTime) -> f64 {
    (-envelope_deficit(exp, c.value())).exp()
}

/// Exponent of the envelope (non-negative), kept separate so callers can work
/// in log space.
pub(crate) fn envelope_deficit(exp: &Experiment, c: f64) -> f64 {
    let hbar = exp.hbar;
    let mut deficit = 0.0;
    for mu in 0..4 {
        let s2 = exp.packet.sigma[mu] * exp.packet.sigma[mu];
        let spread = s2 + 4.0 * hbar * hbar * c * c / s2;
        let miss = exp.displacement[mu] - 2.0 * exp.packet.momentum[mu] * c;
        deficit += miss * miss / (2.0 * spread);
    }
    deficit
}
