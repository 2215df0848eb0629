//! Life-time selection: where the quantum action is stationary in the inner
//! time.
//!
//! Three levels of approximation live here, from cheapest to exact:
//!
//! 1. the classical life time `sqrt(dX.dX) / (2 m)` of a timelike
//!    displacement;
//! 2. the quasi-classical roots of the quadratic correction, obtained in
//!    closed form;
//! 3. an exact root of the full action derivative, bracketed around a seed
//!    and polished by a safeguarded secant iteration.
//!
//! [`select_branch`] encodes the policy for choosing between the two
//! quasi-classical roots; [`stationary_lifetime_exact`] refines whichever
//! seed the caller trusts.

use thiserror::Error;

use crate::amplitude::action_derivative;
use crate::experiment::{Experiment, LifeTime};
use crate::minkowski::{minkowski_square, FourVector, THETA};

/// Which stationary solution a life time came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// Quasi-classical root with the positive square root.
    Plus,
    /// Quasi-classical root with the negative square root.
    Minus,
    /// Root of the full action derivative.
    Exact,
}

impl Branch {
    pub fn as_str(&self) -> &'static str {
        match self {
            Branch::Plus => "plus",
            Branch::Minus => "minus",
            Branch::Exact => "exact",
        }
    }
}

impl std::fmt::Display for Branch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Tuning knobs for branch selection and the exact solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Largest acceptable `|dAction/dC|` at a reported exact root, relative
    /// to `max(1, m^2)`.
    pub residual_tol: f64,
    /// Far-field ratio above which the plus branch is taken outright.
    pub far_field_threshold: f64,
    /// When `hbar C / sigma_mu^2` exceeds this on any axis, a quasi-classical
    /// life time should be refined by the exact solver.
    pub refine_threshold: f64,
    /// Half-range of the bracketing scan in octaves around the seed.
    pub bracket_doublings: u32,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            residual_tol: 1e-10,
            far_field_threshold: 100.0,
            refine_threshold: 1e-3,
            bracket_doublings: 6,
        }
    }
}

/// One probe of the action derivative, reported when bracketing fails.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivativeSample {
    pub c: f64,
    pub derivative: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StationarityError {
    #[error("displacement is not timelike: squared interval {interval:.6e} <= 0")]
    NotTimelike { interval: f64 },
    #[error("life time must be positive for this operation")]
    ZeroLifeTime,
    #[error("quadratic correction has no real stationary point: discriminant {discriminant:.6e} < 0")]
    NoRealRoot { discriminant: f64 },
    #[error(
        "quadratic coefficient {coefficient:.6e} is negligible: momentum too close to null, \
         quasi-classical roots undefined"
    )]
    DegenerateQuadratic { coefficient: f64 },
    #[error("both quasi-classical roots are negative: {c_plus:.6e} and {c_minus:.6e}")]
    NoAdmissibleRoot { c_plus: f64, c_minus: f64 },
    #[error(
        "no sign change in the action derivative over {} sampled inner times in [{:.6e}, {:.6e}]",
        samples.len(),
        samples.first().map_or(f64::NAN, |s| s.c),
        samples.last().map_or(f64::NAN, |s| s.c)
    )]
    NoStationaryPoint { samples: Vec<DerivativeSample> },
}

/// A selected or solved stationary life time, with its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct StationarySolution {
    pub life_time: LifeTime,
    pub branch: Branch,
    /// Discriminant of the quasi-classical quadratic, when one was solved.
    pub discriminant: Option<f64>,
    /// Action derivative at the reported root, when it was evaluated.
    pub residual: Option<f64>,
    /// Derivative evaluations spent by the exact solver.
    pub iterations: u32,
    /// Central momentum does not satisfy `p.p = m^2` to 1e-9.
    pub off_shell: bool,
    /// The selection had to fall back to a heuristic, or the residual check
    /// failed; the life time is a best effort, not a certified root.
    pub low_confidence: bool,
}

/// Classical life time of a timelike displacement: the displacement is
/// traversed at the classical momentum `dX / (2C)` with `p.p = m^2`, which
/// fixes `C = sqrt(dX.dX) / (2 m)`.
pub fn classical_lifetime(exp: &Experiment) -> Result<LifeTime, StationarityError> {
    let interval = minkowski_square(&exp.displacement);
    if interval <= 0.0 {
        return Err(StationarityError::NotTimelike { interval });
    }
    Ok(LifeTime::new(interval.sqrt() / (2.0 * exp.mass)).expect("positive by construction"))
}

/// Momentum that carries the packet centre across `dx` in inner time `c`.
pub fn classical_momentum(dx: &FourVector, c: LifeTime) -> Result<FourVector, StationarityError> {
    if c.value() <= 0.0 {
        return Err(StationarityError::ZeroLifeTime);
    }
    Ok(*dx * (0.5 / c.value()))
}

/// How far the central momentum is from the mass shell: `p.p - m^2`.
pub fn mass_shell_residual(exp: &Experiment) -> f64 {
    minkowski_square(&exp.packet.momentum) - exp.mass * exp.mass
}

fn is_off_shell(exp: &Experiment) -> bool {
    mass_shell_residual(exp).abs() > 1e-9 * (exp.mass * exp.mass).max(1.0)
}

/// The two roots of the quadratic correction's derivative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuasiClassicalRoots {
    /// Root taken with `+sqrt(discriminant)`.
    pub c_plus: f64,
    /// Root taken with `-sqrt(discriminant)`.
    pub c_minus: f64,
    pub discriminant: f64,
}

/// Width-weighted quadratic coefficients of the correction's derivative:
/// `12 a C^2 - 8 b C - g = 0`.
fn quadratic_coefficients(exp: &Experiment) -> (f64, f64, f64, f64) {
    let mut a = 0.0;
    let mut b = 0.0;
    let mut g = 0.0;
    let mut scale = 0.0;
    for mu in 0..4 {
        let s2 = exp.packet.sigma[mu] * exp.packet.sigma[mu];
        let s4 = s2 * s2;
        let p = exp.packet.momentum[mu];
        let dx = exp.displacement[mu];
        a += THETA[mu] * p * p / s4;
        b += THETA[mu] * p * dx / s4;
        g += THETA[mu] * (1.0 / s2 - dx * dx / s4);
        scale += p * p / s4;
    }
    (a, b, g, scale)
}

/// Stationary points of the quadratic action correction, in closed form.
///
/// The correction's derivative is quadratic in the life time; its roots are
/// `(8 b +/- sqrt(64 b^2 + 48 a g)) / (24 a)` in terms of the width-weighted
/// momentum and displacement moments. Degenerate (near-null momentum) and
/// complex cases are reported as errors.
pub fn quasiclassical_lifetimes(
    exp: &Experiment,
) -> Result<QuasiClassicalRoots, StationarityError> {
    let (a, b, g, scale) = quadratic_coefficients(exp);
    if a == 0.0 || a.abs() < 1e-14 * scale {
        return Err(StationarityError::DegenerateQuadratic { coefficient: a });
    }
    let discriminant = 64.0 * b * b + 48.0 * a * g;
    if discriminant < 0.0 {
        return Err(StationarityError::NoRealRoot { discriminant });
    }
    let sqrt_d = discriminant.sqrt();
    Ok(QuasiClassicalRoots {
        c_plus: (8.0 * b + sqrt_d) / (24.0 * a),
        c_minus: (8.0 * b - sqrt_d) / (24.0 * a),
        discriminant,
    })
}

/// Far-field diagnostic for branch selection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FarField {
    /// `sum theta dX^2/sigma^4` over `|sum theta / sigma^2|`; infinite when
    /// the widths balance the signature exactly.
    pub ratio: f64,
    /// The width combination `sum theta / sigma^2` vanished to rounding, so
    /// the ratio is meaningless and reported as infinite.
    pub balanced: bool,
}

/// Ratio of the displacement moment to the width moment; large values mean
/// the detector sits deep in the far field where the plus branch dominates.
pub fn far_field_ratio(exp: &Experiment) -> FarField {
    let mut num = 0.0;
    let mut den = 0.0;
    let mut den_scale = 0.0;
    for mu in 0..4 {
        let s2 = exp.packet.sigma[mu] * exp.packet.sigma[mu];
        let dx = exp.displacement[mu];
        num += THETA[mu] * dx * dx / (s2 * s2);
        den += THETA[mu] / s2;
        den_scale += 1.0 / s2;
    }
    if den.abs() <= 1e-14 * den_scale {
        FarField { ratio: f64::INFINITY, balanced: true }
    } else {
        FarField { ratio: num / den.abs(), balanced: false }
    }
}

/// Chooses between the two quasi-classical roots.
///
/// Policy, in order:
///
/// * deep far field over a timelike displacement: the plus branch, which is
///   the one that survives as the displacement grows;
/// * timelike displacement otherwise: the admissible (non-negative) root
///   closer to the classical life time;
/// * non-timelike displacement: any admissible root, plus preferred, flagged
///   low confidence since the classical anchor is gone.
///
/// Both roots negative is an error. The returned solution keeps the
/// discriminant and flags; its residual is not evaluated here.
pub fn select_branch(
    exp: &Experiment,
    roots: &QuasiClassicalRoots,
    config: &SolverConfig,
) -> Result<StationarySolution, StationarityError> {
    let interval = minkowski_square(&exp.displacement);
    let timelike = interval > 0.0;
    let far = far_field_ratio(exp);
    let admissible_plus = roots.c_plus >= 0.0;
    let admissible_minus = roots.c_minus >= 0.0;
    if !admissible_plus && !admissible_minus {
        return Err(StationarityError::NoAdmissibleRoot {
            c_plus: roots.c_plus,
            c_minus: roots.c_minus,
        });
    }
    let (life_time, branch, low_confidence) = if timelike
        && !far.balanced
        && far.ratio >= config.far_field_threshold
        && admissible_plus
    {
        (roots.c_plus, Branch::Plus, false)
    } else if timelike {
        let classical = classical_lifetime(exp)?.value();
        let pick_plus = match (admissible_plus, admissible_minus) {
            (true, false) => true,
            (false, true) => false,
            _ => (roots.c_plus - classical).abs() <= (roots.c_minus - classical).abs(),
        };
        if pick_plus {
            (roots.c_plus, Branch::Plus, false)
        } else {
            (roots.c_minus, Branch::Minus, false)
        }
    } else if admissible_plus {
        (roots.c_plus, Branch::Plus, true)
    } else {
        (roots.c_minus, Branch::Minus, true)
    };
    Ok(StationarySolution {
        life_time: LifeTime::new(life_time).expect("admissible root is non-negative and finite"),
        branch,
        discriminant: Some(roots.discriminant),
        residual: None,
        iterations: 0,
        off_shell: is_off_shell(exp),
        low_confidence,
    })
}

/// Exact stationary life time: a root of the full action derivative.
///
/// The derivative is probed on a geometric ladder of inner times around the
/// seed (`2^k` steps, `k` in `-bracket_doublings..=bracket_doublings`); the
/// sign change nearest the seed is then polished by bisection with secant
/// acceleration until the bracket collapses to a few ulps. No sign change
/// anywhere on the ladder means no stationary point in range, and the probes
/// are handed back for diagnosis.
pub fn stationary_lifetime_exact(
    exp: &Experiment,
    seed: LifeTime,
    config: &SolverConfig,
) -> Result<StationarySolution, StationarityError> {
    let c0 = seed.value();
    if c0 <= 0.0 {
        return Err(StationarityError::ZeroLifeTime);
    }
    let f = |c: f64| action_derivative(exp, LifeTime::new(c).expect("probe times stay positive"));
    let doublings = config.bracket_doublings as i32;
    let samples: Vec<DerivativeSample> = (-doublings..=doublings)
        .map(|k| {
            let c = c0 * (k as f64).exp2();
            DerivativeSample { c, derivative: f(c) }
        })
        .collect();
    let mut iterations = samples.len() as u32;

    // An exact zero on the ladder is already a root.
    if let Some(hit) = samples.iter().find(|s| s.derivative == 0.0) {
        return Ok(finish(exp, config, hit.c, 0.0, iterations));
    }

    // Pick the sign-change interval whose geometric midpoint is nearest the
    // seed (log distance, since the ladder is geometric).
    let mut bracket: Option<(DerivativeSample, DerivativeSample)> = None;
    let mut best = f64::INFINITY;
    for pair in samples.windows(2) {
        if pair[0].derivative * pair[1].derivative < 0.0 {
            let mid = (pair[0].c * pair[1].c).sqrt();
            let dist = (mid / c0).ln().abs();
            if dist < best {
                best = dist;
                bracket = Some((pair[0], pair[1]));
            }
        }
    }
    let Some((lo_s, hi_s)) = bracket else {
        return Err(StationarityError::NoStationaryPoint { samples });
    };

    let (mut lo, mut flo) = (lo_s.c, lo_s.derivative);
    let (mut hi, mut fhi) = (hi_s.c, hi_s.derivative);
    let width_target = |hi: f64| 4.0 * f64::EPSILON * hi.max(1.0);
    while hi - lo > width_target(hi) && iterations < 200 {
        let width = hi - lo;
        // Secant proposal, demoted to the midpoint whenever it falls outside
        // the safe interior or an iteration is due for a guaranteed halving.
        let secant = (lo * fhi - hi * flo) / (fhi - flo);
        let use_secant =
            iterations % 3 != 0 && secant > lo + 0.01 * width && secant < hi - 0.01 * width;
        let x = if use_secant { secant } else { 0.5 * (lo + hi) };
        let fx = f(x);
        iterations += 1;
        if fx == 0.0 {
            return Ok(finish(exp, config, x, 0.0, iterations));
        }
        if flo * fx < 0.0 {
            hi = x;
            fhi = fx;
        } else {
            lo = x;
            flo = fx;
        }
    }
    let root = 0.5 * (lo + hi);
    let residual = f(root);
    Ok(finish(exp, config, root, residual, iterations + 1))
}

fn finish(
    exp: &Experiment,
    config: &SolverConfig,
    root: f64,
    residual: f64,
    iterations: u32,
) -> StationarySolution {
    StationarySolution {
        life_time: LifeTime::new(root).expect("root lies inside a positive bracket"),
        branch: Branch::Exact,
        discriminant: None,
        residual: Some(residual),
        iterations,
        off_shell: is_off_shell(exp),
        low_confidence: residual.abs() > config.residual_tol * (exp.mass * exp.mass).max(1.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::test_fixtures::reference;

    fn lt(c: f64) -> LifeTime {
        LifeTime::new(c).unwrap()
    }

    #[test]
    fn classical_lifetime_on_reference_is_ten() {
        let exp = reference();
        let c = classical_lifetime(&exp).unwrap();
        assert!((c.value() - 10.0).abs() < 1e-15);
    }

    #[test]
    fn classical_lifetime_rejects_spacelike_displacement() {
        let mut exp = reference();
        exp.displacement = FourVector::new(1.0, 5.0, 0.0, 0.0);
        match classical_lifetime(&exp) {
            Err(StationarityError::NotTimelike { interval }) => {
                assert!((interval + 24.0).abs() < 1e-12)
            }
            other => panic!("expected NotTimelike, got {other:?}"),
        }
    }

    #[test]
    fn classical_momentum_inverts_the_drift() {
        let dx = FourVector::new(20.0, 4.0, -2.0, 0.0);
        let p = classical_momentum(&dx, lt(10.0)).unwrap();
        assert_eq!(p, FourVector::new(1.0, 0.2, -0.1, 0.0));
        assert!(matches!(
            classical_momentum(&dx, LifeTime::ZERO),
            Err(StationarityError::ZeroLifeTime)
        ));
    }

    /// Hand-checked quadratic on the reference setup: a = 1, b = 20,
    /// g = -402, so the discriminant is 6304.
    #[test]
    fn reference_roots_match_the_hand_computation() {
        let exp = reference();
        let roots = quasiclassical_lifetimes(&exp).unwrap();
        assert!((roots.discriminant - 6304.0).abs() < 1e-9);
        let sqrt_d = 6304.0_f64.sqrt();
        assert!((roots.c_plus - (160.0 + sqrt_d) / 24.0).abs() < 1e-12);
        assert!((roots.c_minus - (160.0 - sqrt_d) / 24.0).abs() < 1e-12);
        // The plus root sits within a quarter percent of the classical ten.
        assert!((roots.c_plus / 10.0 - 1.0).abs() < 0.003);
    }

    #[test]
    fn null_momentum_is_degenerate() {
        let mut exp = reference();
        exp.packet.momentum = FourVector::new(1.0, 1.0, 0.0, 0.0);
        assert!(matches!(
            quasiclassical_lifetimes(&exp),
            Err(StationarityError::DegenerateQuadratic { .. })
        ));
    }

    #[test]
    fn transverse_displacement_has_no_real_root() {
        let mut exp = reference();
        exp.displacement = FourVector::new(0.0, 0.5, 0.0, 0.0);
        match quasiclassical_lifetimes(&exp) {
            Err(StationarityError::NoRealRoot { discriminant }) => {
                assert!((discriminant + 84.0).abs() < 1e-9)
            }
            other => panic!("expected NoRealRoot, got {other:?}"),
        }
    }

    #[test]
    fn reference_far_field_ratio_is_two_hundred() {
        let exp = reference();
        let far = far_field_ratio(&exp);
        assert!(!far.balanced);
        assert!((far.ratio - 200.0).abs() < 1e-12);
    }

    #[test]
    fn balanced_widths_report_an_infinite_ratio() {
        let mut exp = reference();
        let w = 3.0_f64.sqrt();
        exp.packet.sigma = [1.0, w, w, w];
        let far = far_field_ratio(&exp);
        assert!(far.balanced);
        assert!(far.ratio.is_infinite());
    }

    #[test]
    fn far_field_selection_takes_the_plus_branch() {
        let exp = reference();
        let roots = quasiclassical_lifetimes(&exp).unwrap();
        let sol = select_branch(&exp, &roots, &SolverConfig::default()).unwrap();
        assert_eq!(sol.branch, Branch::Plus);
        assert_eq!(sol.life_time.value(), roots.c_plus);
        assert!(!sol.low_confidence);
        assert!(!sol.off_shell);
        assert_eq!(sol.discriminant, Some(roots.discriminant));
    }

    /// Near field: shrink the displacement so the ratio drops below the
    /// threshold; the choice then goes to the root nearest the classical
    /// life time.
    #[test]
    fn near_field_selection_is_anchored_to_the_classical_value() {
        let mut exp = reference();
        exp.displacement = FourVector::new(6.0, 0.0, 0.0, 0.0);
        let far = far_field_ratio(&exp);
        assert!(far.ratio < 100.0);
        let roots = quasiclassical_lifetimes(&exp).unwrap();
        let classical = classical_lifetime(&exp).unwrap().value();
        let sol = select_branch(&exp, &roots, &SolverConfig::default()).unwrap();
        let chosen = sol.life_time.value();
        let other = if sol.branch == Branch::Plus { roots.c_minus } else { roots.c_plus };
        assert!((chosen - classical).abs() <= (other - classical).abs());
    }

    #[test]
    fn off_shell_momentum_sets_the_flag() {
        let mut exp = reference();
        exp.packet.momentum = FourVector::new(1.3, 0.0, 0.0, 0.0);
        let roots = quasiclassical_lifetimes(&exp).unwrap();
        let sol = select_branch(&exp, &roots, &SolverConfig::default()).unwrap();
        assert!(sol.off_shell);
    }

    /// The exact solver's root must agree with an independent bisection of
    /// the derivative evaluated by nothing fancier than sign checks.
    #[test]
    fn exact_root_agrees_with_a_plain_bisection() {
        let exp = reference();
        let seed = classical_lifetime(&exp).unwrap();
        let sol = stationary_lifetime_exact(&exp, seed, &SolverConfig::default()).unwrap();
        assert_eq!(sol.branch, Branch::Exact);
        assert!(!sol.low_confidence, "residual {:?}", sol.residual);

        let f = |c: f64| action_derivative(&exp, lt(c));
        let (mut lo, mut hi) = (5.0, 10.5);
        assert!(f(lo) < 0.0 && f(hi) > 0.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let independent = 0.5 * (lo + hi);
        assert!(
            (sol.life_time.value() - independent).abs() < 1e-9,
            "solver {} vs bisection {independent}",
            sol.life_time.value()
        );
    }

    /// With a small hbar the exact root collapses onto the quasi-classical
    /// plus root.
    #[test]
    fn exact_root_approaches_the_quasiclassical_root() {
        let mut exp = reference();
        exp.hbar = 0.1;
        let roots = quasiclassical_lifetimes(&exp).unwrap();
        let sol =
            stationary_lifetime_exact(&exp, lt(roots.c_plus), &SolverConfig::default()).unwrap();
        assert!(
            (sol.life_time.value() - roots.c_plus).abs() < 0.01 * roots.c_plus,
            "exact {} vs quasi {}",
            sol.life_time.value(),
            roots.c_plus
        );
    }

    #[test]
    fn exact_solver_rejects_a_zero_seed() {
        let exp = reference();
        assert!(matches!(
            stationary_lifetime_exact(&exp, LifeTime::ZERO, &SolverConfig::default()),
            Err(StationarityError::ZeroLifeTime)
        ));
    }

    /// Far off shell with a small hbar the derivative never changes sign:
    /// the mass term cannot balance the momentum term.
    #[test]
    fn off_shell_derivative_has_no_root_and_reports_its_probes() {
        let mut exp = reference();
        exp.packet.momentum = FourVector::new(1.3, 0.0, 0.0, 0.0);
        exp.displacement = FourVector::ZERO;
        exp.hbar = 1e-6;
        match stationary_lifetime_exact(&exp, lt(5.0), &SolverConfig::default()) {
            Err(StationarityError::NoStationaryPoint { samples }) => {
                assert_eq!(samples.len(), 13);
                assert!(samples.iter().all(|s| s.derivative < 0.0));
            }
            other => panic!("expected NoStationaryPoint, got {other:?}"),
        }
    }

    mod properties {
        use super::*;
        use crate::amplitude::{action_correction_derivative, action_derivative};
        use crate::experiment::{ExperimentTemplate, GaussianPacket};
        use proptest::prelude::*;

        /// On-shell packets with the detector on the classical arrival ray.
        /// Per-axis widths are free, so the width-weighted quadratic may
        /// degenerate; properties over this family stay conditional.
        fn on_shell_arrivals() -> impl Strategy<Value = Experiment> {
            (
                0.5f64..2.0,
                prop::array::uniform3(-0.6f64..0.6),
                1.0f64..15.0,
                0.05f64..0.6,
                prop::array::uniform4(0.7f64..1.4),
            )
                .prop_map(|(mass, pk, c_cl, hbar, sigma)| {
                    let p0 = (mass * mass + pk.iter().map(|p| p * p).sum::<f64>()).sqrt();
                    let momentum = FourVector::new(p0, pk[0], pk[1], pk[2]);
                    let packet = GaussianPacket::new(sigma, momentum);
                    let dx = momentum * (2.0 * c_cl);
                    ExperimentTemplate::new(packet, mass, hbar).at_displacement(dx)
                })
        }

        /// Same ridge geometry, but with one shared width and `c m >= 2 s`.
        /// There the discriminant is `(32 m^2/s^6)(2 c^2 m^2/s^2 - 3) > 0`,
        /// so both quasi-classical roots exist and are positive.
        fn quadratic_friendly_arrivals() -> impl Strategy<Value = Experiment> {
            (
                0.6f64..2.0,
                prop::array::uniform3(-0.6f64..0.6),
                2.5f64..12.0,
                0.05f64..0.5,
                0.7f64..1.3,
            )
                .prop_filter_map(
                    "need c m >= 2 s for a safely positive discriminant",
                    |(mass, pk, c_cl, hbar, s)| {
                        if c_cl * mass < 2.0 * s {
                            return None;
                        }
                        let p0 = (mass * mass + pk.iter().map(|p| p * p).sum::<f64>()).sqrt();
                        let momentum = FourVector::new(p0, pk[0], pk[1], pk[2]);
                        let packet = GaussianPacket::new([s; 4], momentum);
                        let dx = momentum * (2.0 * c_cl);
                        Some(ExperimentTemplate::new(packet, mass, hbar).at_displacement(dx))
                    },
                )
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn exact_solver_keeps_its_residual_contract(exp in on_shell_arrivals()) {
                let config = SolverConfig::default();
                let seed = classical_lifetime(&exp).unwrap();
                match stationary_lifetime_exact(&exp, seed, &config) {
                    Ok(sol) => {
                        prop_assert!(sol.life_time.value() >= 0.0);
                        prop_assert!(!sol.off_shell);
                        let resid = action_derivative(&exp, sol.life_time).abs();
                        let tol = config.residual_tol * (exp.mass * exp.mass).max(1.0);
                        prop_assert!(sol.low_confidence || resid <= tol, "residual {resid}");
                    }
                    // A derivative with no sign change is a legitimate
                    // outcome, but it must come with its probe trail.
                    Err(StationarityError::NoStationaryPoint { samples }) => {
                        prop_assert!(samples.len() >= 2);
                    }
                    Err(other) => prop_assert!(false, "unexpected error {other}"),
                }
            }

            #[test]
            fn quasi_roots_zero_the_correction_derivative(exp in quadratic_friendly_arrivals()) {
                let roots = quasiclassical_lifetimes(&exp).unwrap();
                prop_assert!(roots.discriminant > 0.0);
                prop_assert!(roots.c_minus > 0.0 && roots.c_plus > roots.c_minus);
                for root in [roots.c_plus, roots.c_minus] {
                    // The derivative value scales with the quadratic's own
                    // coefficients; measure the residual against that.
                    let scale: f64 = (0..4)
                        .map(|mu| {
                            let s2 = exp.packet.sigma[mu] * exp.packet.sigma[mu];
                            let s4 = s2 * s2;
                            let p = exp.packet.momentum[mu];
                            let dx = exp.displacement[mu];
                            12.0 * (p * p / s4) * root * root
                                + 8.0 * (p * dx / s4).abs() * root
                                + (1.0 / s2 + dx * dx / s4)
                        })
                        .sum();
                    let resid = action_correction_derivative(&exp, root).abs();
                    prop_assert!(resid <= 1e-9 * scale, "residual {resid} vs scale {scale}");
                }
            }

            #[test]
            fn selected_branch_is_an_admissible_root(exp in quadratic_friendly_arrivals()) {
                let config = SolverConfig::default();
                let roots = quasiclassical_lifetimes(&exp).unwrap();
                let sol = select_branch(&exp, &roots, &config).unwrap();
                let c = sol.life_time.value();
                prop_assert!(c >= 0.0);
                let matches_plus = (c - roots.c_plus).abs() <= 1e-12 * (1.0 + c);
                let matches_minus = (c - roots.c_minus).abs() <= 1e-12 * (1.0 + c);
                match sol.branch {
                    Branch::Plus => prop_assert!(matches_plus),
                    Branch::Minus => prop_assert!(matches_minus),
                    Branch::Exact => prop_assert!(false, "select_branch never refines"),
                }
                // The ray is timelike by construction, so no low-confidence
                // fallback can fire.
                prop_assert!(!sol.low_confidence);
            }
        }
    }
}
