//! Spherical detector screens: per-detector amplitudes, full scans, the
//! normalization constant and asymptotic diagnostics.
//!
//! A screen is a sphere of fixed radius around the preparation point; each
//! detector is addressed by polar angles and an arrival time (the time
//! component of the displacement). Rows never abort: any failure of the
//! life-time machinery is recorded in per-row flags and the amplitude is
//! zeroed, so a scan always returns one row per grid point.
//!
//! With the `parallel` feature rows and quadrature contributions are computed
//! by rayon over the flattened index set and then reassembled in index order,
//! so the output is byte-identical to the sequential path.

use num_complex::Complex64;
use thiserror::Error;

use crate::amplitude::{closed_form_amplitude, prefactor_modulus, quantum_action};
use crate::experiment::{ConfigError, ExperimentTemplate};
use crate::gauss::GaussLegendre;
use crate::minkowski::{minkowski_square, FourVector};
use crate::numeric::{log_log_slope, KahanSum};
use crate::stationarity::{
    classical_lifetime, quasiclassical_lifetimes, select_branch, stationary_lifetime_exact,
    Branch, DerivativeSample, SolverConfig, StationarityError, StationarySolution,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DetectionError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(
        "normalization integral did not converge: {coarse} vs {fine} on the doubled grid \
         (shift {shift:.3e} > {tolerance:.0e} relative)"
    )]
    NotConverged { coarse: f64, fine: f64, shift: f64, tolerance: f64 },
    #[error("normalization integral vanished: every row was flagged or underflowed")]
    ZeroIntegral,
    #[error("spatial speed {speed:.3e} exceeds 1e-3, not a non-relativistic setup")]
    NotNonRelativistic { speed: f64 },
    #[error("time momentum component must be positive, got {p0}")]
    NonPositiveTimeMomentum { p0: f64 },
    #[error("life-time range [{c_lo}, {c_hi}] too narrow: need c_hi >= 100 c_lo > 0")]
    RangeTooNarrow { c_lo: f64, c_hi: f64 },
    #[error(
        "packet is not in the spreading regime at c_lo: largest (2 hbar c / sigma^2)^2 is \
         {largest:.3e} <= 1"
    )]
    NotSpreading { largest: f64 },
    #[error(transparent)]
    Stationarity(#[from] StationarityError),
}

/// A spherical detector screen with a uniform scan grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Screen {
    /// Sphere radius around the preparation point.
    pub radius: f64,
    /// Polar samples (midpoint rule over [0, pi] in scans, Gauss-Legendre
    /// nodes in cos(theta) for the normalization integral).
    pub theta_points: usize,
    /// Azimuthal samples.
    pub phi_points: usize,
    /// Arrival-time samples.
    pub time_points: usize,
    /// Largest arrival time scanned.
    pub t_max: f64,
}

impl Screen {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.radius > 0.0) || !self.radius.is_finite() {
            return Err(ConfigError::NotPositive {
                field: "screen radius".into(),
                value: self.radius,
            });
        }
        for (field, value) in [
            ("screen theta_points", self.theta_points),
            ("screen phi_points", self.phi_points),
            ("screen time_points", self.time_points),
        ] {
            if value < 2 {
                return Err(ConfigError::TooSmall { field: field.into(), min: 2, value });
            }
        }
        if !self.t_max.is_finite() || self.t_max <= self.radius {
            return Err(ConfigError::WindowInsideScreen {
                t_max: self.t_max,
                radius: self.radius,
            });
        }
        Ok(())
    }

    /// Same screen with every grid count doubled; used for self-checks.
    pub fn doubled(&self) -> Screen {
        Screen {
            theta_points: self.theta_points * 2,
            phi_points: self.phi_points * 2,
            time_points: self.time_points * 2,
            ..*self
        }
    }

    pub fn row_count(&self) -> usize {
        self.theta_points * self.phi_points * self.time_points
    }
}

/// One detector position on the screen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScreenPoint {
    pub theta: f64,
    pub phi: f64,
    /// Arrival time: the time component of the displacement.
    pub dx0: f64,
}

impl ScreenPoint {
    /// Displacement four-vector from the preparation point to this detector.
    pub fn displacement(&self, radius: f64) -> FourVector {
        let (sin_t, cos_t) = self.theta.sin_cos();
        let (sin_p, cos_p) = self.phi.sin_cos();
        FourVector::new(
            self.dx0,
            radius * sin_t * cos_p,
            radius * sin_t * sin_p,
            radius * cos_t,
        )
    }
}

/// Per-row diagnostics. Flags record why a row's amplitude may be missing or
/// approximate; they never abort a scan.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RowFlags {
    /// Central momentum off the mass shell beyond 1e-9 relative.
    pub off_shell: bool,
    /// Branch selection fell back to a heuristic or the exact residual check
    /// failed.
    pub low_confidence: bool,
    /// Displacement not timelike; no classical anchor exists.
    pub not_timelike: bool,
    /// Momentum too close to null for the quasi-classical quadratic.
    pub degenerate_quadratic: bool,
    /// Quadratic correction has no real stationary point.
    pub no_real_root: bool,
    /// Both quasi-classical roots negative.
    pub no_admissible_root: bool,
    /// Exact refinement found no sign change of the action derivative.
    pub no_stationary_point: bool,
    /// Closed-form exponent left the double range; amplitude zeroed.
    pub amplitude_out_of_range: bool,
}

impl RowFlags {
    const NAMES: [(&'static str, fn(&RowFlags) -> bool); 8] = [
        ("off-shell", |f| f.off_shell),
        ("low-confidence", |f| f.low_confidence),
        ("not-timelike", |f| f.not_timelike),
        ("degenerate-quadratic", |f| f.degenerate_quadratic),
        ("no-real-root", |f| f.no_real_root),
        ("no-admissible-root", |f| f.no_admissible_root),
        ("no-stationary-point", |f| f.no_stationary_point),
        ("amplitude-out-of-range", |f| f.amplitude_out_of_range),
    ];

    pub fn is_empty(&self) -> bool {
        *self == RowFlags::default()
    }

    /// The set life-time/amplitude flags, in a fixed order.
    pub fn names(&self) -> Vec<&'static str> {
        Self::NAMES.iter().filter(|(_, get)| get(self)).map(|(name, _)| *name).collect()
    }
}

impl std::fmt::Display for RowFlags {
    /// `-` when clear, otherwise semicolon-joined flag names (CSV-safe).
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.is_empty() {
            f.write_str("-")
        } else {
            f.write_str(&self.names().join(";"))
        }
    }
}

/// Amplitude and life-time data for one detector.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionRow {
    pub theta: f64,
    pub phi: f64,
    pub dx: FourVector,
    /// Selected stationary life time; zero sentinel when none was found.
    pub c_stationary: f64,
    /// Provenance of the life time; `None` when selection failed outright.
    pub branch: Option<Branch>,
    /// Quantum action at the selected life time; zero sentinel without one.
    pub lambda: f64,
    pub k: Complex64,
    pub k_abs2: f64,
    pub flags: RowFlags,
    /// Derivative probes kept when exact refinement failed, so a flagged row
    /// can be audited without rerunning the solver.
    pub derivative_samples: Option<Vec<DerivativeSample>>,
}

/// Evaluates one detector. Never fails: every error path is converted into
/// flags and sentinel values on the returned row.
pub fn amplitude_at_detector(
    template: &ExperimentTemplate,
    point: ScreenPoint,
    radius: f64,
    config: &SolverConfig,
) -> DetectionRow {
    let dx = point.displacement(radius);
    let exp = template.at_displacement(dx);
    let mut row = DetectionRow {
        theta: point.theta,
        phi: point.phi,
        dx,
        c_stationary: 0.0,
        branch: None,
        lambda: 0.0,
        k: Complex64::new(0.0, 0.0),
        k_abs2: 0.0,
        flags: RowFlags::default(),
        derivative_samples: None,
    };
    row.flags.not_timelike = minkowski_square(&dx) <= 0.0;

    let selected = quasiclassical_lifetimes(&exp).and_then(|roots| {
        select_branch(&exp, &roots, config)
    });
    let mut solution = match selected {
        Ok(solution) => solution,
        Err(err) => {
            match err {
                StationarityError::DegenerateQuadratic { .. } => {
                    row.flags.degenerate_quadratic = true
                }
                StationarityError::NoRealRoot { .. } => row.flags.no_real_root = true,
                StationarityError::NoAdmissibleRoot { .. } => row.flags.no_admissible_root = true,
                // select_branch only consults the classical anchor for
                // timelike displacements, so these do not occur here.
                _ => row.flags.low_confidence = true,
            }
            return row;
        }
    };
    row.flags.off_shell = solution.off_shell;
    row.flags.low_confidence = solution.low_confidence;

    // The quasi-classical roots assume a small spreading parameter; once
    // hbar C / sigma^2 is past the threshold on any axis the root is only a
    // seed and the exact derivative root is required.
    let c_quasi = solution.life_time.value();
    let needs_refinement = c_quasi > 0.0
        && (0..4).any(|mu| {
            exp.hbar * c_quasi / (exp.packet.sigma[mu] * exp.packet.sigma[mu])
                > config.refine_threshold
        });
    if needs_refinement {
        match stationary_lifetime_exact(&exp, solution.life_time, config) {
            Ok(refined) => {
                // Keep the quasi-classical discriminant next to the exact root.
                solution = StationarySolution { discriminant: solution.discriminant, ..refined };
                row.flags.low_confidence = solution.low_confidence;
            }
            Err(StationarityError::NoStationaryPoint { samples }) => {
                row.flags.no_stationary_point = true;
                row.derivative_samples = Some(samples);
            }
            Err(_) => row.flags.low_confidence = true,
        }
    }

    row.c_stationary = solution.life_time.value();
    row.branch = Some(solution.branch);
    row.lambda = quantum_action(&exp, solution.life_time);
    match closed_form_amplitude(&exp, solution.life_time) {
        Ok(result) => {
            row.k = result.value;
            row.k_abs2 = result.modulus_sq;
        }
        Err(_) => row.flags.amplitude_out_of_range = true,
    }
    row
}

/// A full scan: one row per grid point, lexicographic in (theta, phi, time).
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionTable {
    pub screen: Screen,
    pub rows: Vec<DetectionRow>,
}

pub(crate) const CSV_HEADER: &str =
    "theta,phi,dx0,dx1,dx2,dx3,c_stationary,branch,lambda,k_re,k_im,k_abs2,flags";

impl DetectionTable {
    /// Rows carrying at least one flag.
    pub fn flagged_rows(&self) -> usize {
        self.rows.iter().filter(|r| !r.flags.is_empty()).count()
    }

    /// CSV with a fixed header; floats use the shortest round-trip form, the
    /// branch column reads `none` for rows without a life time.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.rows.len() + 1));
        out.push_str(CSV_HEADER);
        out.push('\n');
        for row in &self.rows {
            let branch = row.branch.map_or("none", |b| b.as_str());
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                row.theta,
                row.phi,
                row.dx[0],
                row.dx[1],
                row.dx[2],
                row.dx[3],
                row.c_stationary,
                branch,
                row.lambda,
                row.k.re,
                row.k.im,
                row.k_abs2,
                row.flags,
            ));
        }
        out
    }
}

/// Maps `f` over `0..n`, in parallel when the feature is on; the output
/// order is the index order either way.
#[cfg(feature = "parallel")]
fn collect_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn collect_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).map(f).collect()
}

fn scan_point(screen: &Screen, flat: usize) -> ScreenPoint {
    let nt = screen.time_points;
    let np = screen.phi_points;
    let k = flat % nt;
    let j = (flat / nt) % np;
    let i = flat / (nt * np);
    ScreenPoint {
        theta: std::f64::consts::PI * (i as f64 + 0.5) / screen.theta_points as f64,
        phi: 2.0 * std::f64::consts::PI * j as f64 / np as f64,
        dx0: screen.t_max * (k + 1) as f64 / nt as f64,
    }
}

/// Scans the whole screen. Grid: polar midpoints, azimuth from zero, arrival
/// times in (0, t_max]; rows in lexicographic (theta, phi, time) order.
pub fn screen_scan(
    template: &ExperimentTemplate,
    screen: &Screen,
    config: &SolverConfig,
) -> Result<DetectionTable, DetectionError> {
    template.validate()?;
    screen.validate()?;
    let rows = collect_indexed(screen.row_count(), |flat| {
        amplitude_at_detector(template, scan_point(screen, flat), screen.radius, config)
    });
    Ok(DetectionTable { screen: *screen, rows })
}

/// Sequential twin of [`screen_scan`], compiled unconditionally so the two
/// paths can be compared (and benchmarked) under the `parallel` feature.
pub fn screen_scan_seq(
    template: &ExperimentTemplate,
    screen: &Screen,
    config: &SolverConfig,
) -> Result<DetectionTable, DetectionError> {
    template.validate()?;
    screen.validate()?;
    let rows = (0..screen.row_count())
        .map(|flat| {
            amplitude_at_detector(template, scan_point(screen, flat), screen.radius, config)
        })
        .collect();
    Ok(DetectionTable { screen: *screen, rows })
}

/// Result of [`normalization_constant`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normalization {
    /// Packet amplitude that makes the screen integral one.
    pub amplitude: f64,
    /// Converged value of the screen integral of `|K|^2` (fine grid).
    pub integral: f64,
    /// Absolute difference between the two grid resolutions.
    pub error: f64,
    pub coarse_integral: f64,
}

/// Integral of `|K|^2` over the screen sphere and all arrival times, by
/// tensor-product Gauss-Legendre quadrature: `cos(theta)` on [-1, 1], phi on
/// [0, 2 pi], and the arrival time mapped to u in [0, 1) by
/// `dx0 = grid_scale 2 m R u / (1 - u)`.
fn screen_integral(
    template: &ExperimentTemplate,
    screen: &Screen,
    config: &SolverConfig,
    grid_scale: f64,
) -> f64 {
    let rule_cos = GaussLegendre::new(screen.theta_points);
    let rule_phi = GaussLegendre::new(screen.phi_points);
    let rule_u = GaussLegendre::new(screen.time_points);
    let t_scale = grid_scale * 2.0 * template.mass * screen.radius;
    let radius = screen.radius;
    let (nt, np) = (screen.time_points, screen.phi_points);
    let contributions = collect_indexed(screen.row_count(), |flat| {
        let k = flat % nt;
        let j = (flat / nt) % np;
        let i = flat / (nt * np);
        let cos_t = rule_cos.nodes()[i];
        // Map phi from [-1, 1] to [0, 2 pi].
        let phi = std::f64::consts::PI * (rule_phi.nodes()[j] + 1.0);
        // Map u from [-1, 1] to [0, 1), then to an arrival time.
        let u = 0.5 * (rule_u.nodes()[k] + 1.0);
        let dx0 = t_scale * u / (1.0 - u);
        let jacobian = std::f64::consts::PI
            * 0.5
            * t_scale
            / ((1.0 - u) * (1.0 - u))
            * rule_cos.weights()[i]
            * rule_phi.weights()[j]
            * rule_u.weights()[k];
        let point = ScreenPoint { theta: cos_t.acos(), phi, dx0 };
        let row = amplitude_at_detector(template, point, radius, config);
        row.k_abs2 * radius * radius * jacobian
    });
    let mut sum = KahanSum::new();
    for v in contributions {
        sum.add(v);
    }
    sum.value()
}

/// Screen integral of `|K|^2` for the template as given, honoring its packet
/// amplitude, on the screen's own grid (no resolution doubling).
///
/// This is the re-integration entry point: after rescaling a packet by the
/// constant from [`normalization_constant`], the value here should sit at 1
/// within that constant's reported error.
pub fn screen_density_integral(
    template: &ExperimentTemplate,
    screen: &Screen,
    config: &SolverConfig,
    grid_scale: f64,
) -> Result<f64, DetectionError> {
    template.validate()?;
    screen.validate()?;
    if !(grid_scale > 0.0) || !grid_scale.is_finite() {
        return Err(ConfigError::NotPositive {
            field: "normalization grid_scale".into(),
            value: grid_scale,
        }
        .into());
    }
    Ok(screen_integral(template, screen, config, grid_scale))
}

/// Normalizes the packet amplitude against the screen: finds `A` with
/// `A^2 * integral = 1` for a unit-amplitude packet.
///
/// The integral is evaluated on the screen's grid and again with all three
/// node counts doubled; a relative shift above 1e-3 is a convergence error.
/// Rows that produce no amplitude at all (no usable life time, or an exponent
/// outside the double range) contribute zero; for underflowed tails that is
/// exact, and any systematic gap from failed rows shows up in the doubling
/// check rather than being papered over.
pub fn normalization_constant(
    template: &ExperimentTemplate,
    screen: &Screen,
    config: &SolverConfig,
    grid_scale: f64,
) -> Result<Normalization, DetectionError> {
    template.validate()?;
    screen.validate()?;
    if !(grid_scale > 0.0) || !grid_scale.is_finite() {
        return Err(ConfigError::NotPositive {
            field: "normalization grid_scale".into(),
            value: grid_scale,
        }
        .into());
    }
    let mut unit = template.clone();
    unit.packet.amplitude = 1.0;
    let coarse = screen_integral(&unit, screen, config, grid_scale);
    let fine = screen_integral(&unit, &screen.doubled(), config, grid_scale);
    if !(fine > 0.0) {
        return Err(DetectionError::ZeroIntegral);
    }
    let shift = (fine - coarse).abs();
    if shift > 1e-3 * fine {
        return Err(DetectionError::NotConverged {
            coarse,
            fine,
            shift: shift / fine,
            tolerance: 1e-3,
        });
    }
    Ok(Normalization {
        amplitude: 1.0 / fine.sqrt(),
        integral: fine,
        error: shift,
        coarse_integral: coarse,
    })
}

/// One arrival time of the non-relativistic comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NonrelRow {
    /// Arrival time (displacement time component).
    pub t: f64,
    /// Exact stationary life time.
    pub c_stationary: f64,
    /// Newtonian expectation `t / (2 m)`.
    pub newtonian_c: f64,
    pub c_gap_rel: f64,
    /// Quantum action at the stationary life time.
    pub lambda: f64,
    /// Leading non-relativistic phase `m t`.
    pub phase_reference: f64,
    pub phase_gap_rel: f64,
}

/// Slow-packet check: for speeds below 1e-3 the stationary life time must
/// approach `t / (2 m)` and the action must approach `m t`.
///
/// The displacement at each time follows the packet drift, so the detector
/// sits where the packet actually arrives.
pub fn nonrel_limit_report(
    template: &ExperimentTemplate,
    times: &[f64],
    config: &SolverConfig,
) -> Result<Vec<NonrelRow>, DetectionError> {
    template.validate()?;
    let p = template.packet.momentum;
    if p[0] <= 0.0 {
        return Err(DetectionError::NonPositiveTimeMomentum { p0: p[0] });
    }
    let speed = (1..4).map(|k| (p[k] / p[0]).abs()).fold(0.0, f64::max);
    if speed > 1e-3 {
        return Err(DetectionError::NotNonRelativistic { speed });
    }
    let mut rows = Vec::with_capacity(times.len());
    for &t in times {
        let dx = FourVector::new(t, p[1] / p[0] * t, p[2] / p[0] * t, p[3] / p[0] * t);
        let exp = template.at_displacement(dx);
        let seed = classical_lifetime(&exp)?;
        let solution = stationary_lifetime_exact(&exp, seed, config)?;
        let c = solution.life_time.value();
        let newtonian = t / (2.0 * template.mass);
        let lambda = quantum_action(&exp, solution.life_time);
        let phase_reference = template.mass * t;
        rows.push(NonrelRow {
            t,
            c_stationary: c,
            newtonian_c: newtonian,
            c_gap_rel: (c - newtonian).abs() / newtonian,
            lambda,
            phase_reference,
            phase_gap_rel: (lambda - phase_reference).abs() / phase_reference,
        });
    }
    Ok(rows)
}

/// Fitted log-log slope of the amplitude prefactor between two life times.
///
/// Deep in the spreading regime every axis contributes -1/2, so an isotropic
/// packet decays with slope -2. Requires `c_hi >= 100 c_lo` and at least one
/// axis already spreading at `c_lo`.
pub fn prefactor_decay_slope(
    template: &ExperimentTemplate,
    c_lo: f64,
    c_hi: f64,
) -> Result<f64, DetectionError> {
    template.validate()?;
    if !(c_lo > 0.0) || !(c_hi >= 100.0 * c_lo) || !c_hi.is_finite() {
        return Err(DetectionError::RangeTooNarrow { c_lo, c_hi });
    }
    let largest = template
        .packet
        .sigma
        .iter()
        .map(|s| {
            let u = 2.0 * template.hbar * c_lo / (s * s);
            u * u
        })
        .fold(0.0, f64::max);
    if largest <= 1.0 {
        return Err(DetectionError::NotSpreading { largest });
    }
    let n = 64;
    let ratio = (c_hi / c_lo).ln();
    let points: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let c = c_lo * (ratio * i as f64 / (n - 1) as f64).exp();
            (c, prefactor_modulus(&template.packet.sigma, template.hbar, c))
        })
        .collect();
    Ok(log_log_slope(&points))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::test_fixtures::reference;
    use crate::experiment::GaussianPacket;

    fn reference_template() -> ExperimentTemplate {
        reference().template()
    }

    fn small_screen() -> Screen {
        Screen { radius: 5.0, theta_points: 3, phi_points: 4, time_points: 5, t_max: 40.0 }
    }

    #[test]
    fn screen_validation_names_the_offending_field() {
        let mut s = small_screen();
        s.radius = 0.0;
        let msg = s.validate().unwrap_err().to_string();
        assert!(msg.contains("screen radius"), "{msg}");
        let mut s = small_screen();
        s.phi_points = 1;
        let msg = s.validate().unwrap_err().to_string();
        assert!(msg.contains("phi_points") && msg.contains("at least 2"), "{msg}");
        let mut s = small_screen();
        s.t_max = 4.0;
        assert!(matches!(
            s.validate(),
            Err(ConfigError::WindowInsideScreen { t_max, radius }) if t_max == 4.0 && radius == 5.0
        ));
    }

    #[test]
    fn screen_point_displacement_is_spherical() {
        let p = ScreenPoint { theta: std::f64::consts::FRAC_PI_2, phi: 0.0, dx0: 7.0 };
        let dx = p.displacement(3.0);
        assert!((dx[0] - 7.0).abs() < 1e-15);
        assert!((dx[1] - 3.0).abs() < 1e-15);
        assert!(dx[2].abs() < 1e-15);
        assert!(dx[3].abs() < 1e-12);
        let spatial: f64 = (1..4).map(|k| dx[k] * dx[k]).sum();
        assert!((spatial.sqrt() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn flags_render_as_dash_or_kebab_names() {
        let mut flags = RowFlags::default();
        assert_eq!(flags.to_string(), "-");
        flags.off_shell = true;
        flags.no_real_root = true;
        assert_eq!(flags.to_string(), "off-shell;no-real-root");
    }

    #[test]
    fn detector_row_on_the_reference_axis_is_clean() {
        let template = reference_template();
        let point = ScreenPoint { theta: 0.3, phi: 0.0, dx0: 20.0 };
        let row = amplitude_at_detector(&template, point, 0.5, &SolverConfig::default());
        assert!(row.flags.is_empty(), "flags {}", row.flags);
        assert_eq!(row.branch, Some(Branch::Exact));
        assert!(row.c_stationary > 9.0 && row.c_stationary < 11.0);
        assert!(row.k_abs2 > 0.0);
        assert!((row.k.norm_sqr() / row.k_abs2 - 1.0).abs() < 1e-12);
        assert!(row.derivative_samples.is_none());
    }

    /// A detector before the light cone cannot give a classical life time;
    /// the row must come back flagged rather than abort.
    #[test]
    fn spacelike_rows_are_flagged_not_fatal() {
        let template = reference_template();
        let point = ScreenPoint { theta: 1.0, phi: 0.5, dx0: 1.0 };
        let row = amplitude_at_detector(&template, point, 5.0, &SolverConfig::default());
        assert!(row.flags.not_timelike);
        assert!(!row.flags.is_empty());
    }

    #[test]
    fn scan_has_one_row_per_grid_point_in_fixed_order() {
        let template = reference_template();
        let screen = small_screen();
        let table = screen_scan(&template, &screen, &SolverConfig::default()).unwrap();
        assert_eq!(table.rows.len(), screen.row_count());
        // Lexicographic (theta, phi, time): the time index varies fastest.
        let r0 = &table.rows[0];
        let r1 = &table.rows[1];
        assert_eq!(r0.theta, r1.theta);
        assert_eq!(r0.phi, r1.phi);
        assert!(r1.dx[0] > r0.dx[0]);
        let stride = screen.time_points;
        assert_eq!(table.rows[0].theta, table.rows[stride - 1].theta);
        assert!(table.rows[stride].phi > table.rows[0].phi);
    }

    #[test]
    fn parallel_and_sequential_scans_agree_exactly() {
        let template = reference_template();
        let screen = small_screen();
        let config = SolverConfig::default();
        let par = screen_scan(&template, &screen, &config).unwrap();
        let seq = screen_scan_seq(&template, &screen, &config).unwrap();
        assert_eq!(par.to_csv(), seq.to_csv());
    }

    /// With an isotropic packet at rest the density only sees the spatial
    /// distance, so rotating the azimuth by pi must not change it.
    #[test]
    fn azimuthal_symmetry_of_a_packet_at_rest() {
        let mut exp = reference();
        exp.packet = GaussianPacket::new([1.0; 4], FourVector::new(1.0, 0.0, 0.0, 0.0));
        let template = exp.template();
        let screen =
            Screen { radius: 4.0, theta_points: 3, phi_points: 6, time_points: 4, t_max: 30.0 };
        let table = screen_scan(&template, &screen, &SolverConfig::default()).unwrap();
        let nt = screen.time_points;
        let half = screen.phi_points / 2;
        for i in 0..screen.theta_points {
            for j in 0..half {
                for k in 0..nt {
                    let a = &table.rows[(i * screen.phi_points + j) * nt + k];
                    let b = &table.rows[(i * screen.phi_points + j + half) * nt + k];
                    if a.k_abs2 == 0.0 && b.k_abs2 == 0.0 {
                        continue;
                    }
                    assert!(
                        ((a.k_abs2 - b.k_abs2) / a.k_abs2).abs() < 1e-12,
                        "rows {a:?} vs {b:?}"
                    );
                }
            }
        }
    }

    #[test]
    fn csv_header_and_shape_are_stable() {
        let template = reference_template();
        let screen = small_screen();
        let table = screen_scan(&template, &screen, &SolverConfig::default()).unwrap();
        let csv = table.to_csv();
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "theta,phi,dx0,dx1,dx2,dx3,c_stationary,branch,lambda,k_re,k_im,k_abs2,flags"
        );
        assert_eq!(csv.lines().count(), 1 + screen.row_count());
        for line in lines {
            assert_eq!(line.split(',').count(), 13, "{line}");
        }
    }

    /// Along a fixed direction, far beyond the arrival peak, the density
    /// must fall off monotonically with arrival time.
    #[test]
    fn late_time_tail_is_monotone() {
        let template = reference_template();
        let config = SolverConfig::default();
        let radius = 5.0;
        let mut last = f64::INFINITY;
        for &t in &[40.0, 60.0, 90.0, 140.0, 220.0] {
            let point = ScreenPoint { theta: 1.1, phi: 2.0, dx0: t };
            let row = amplitude_at_detector(&template, point, radius, &config);
            assert!(row.flags.is_empty(), "t {t}: flags {}", row.flags);
            assert!(row.k_abs2 < last, "t {t}: {} !< {last}", row.k_abs2);
            last = row.k_abs2;
        }
    }

    #[test]
    fn normalization_makes_the_screen_integral_one() {
        // Branch selection switches roots near the light cone, which puts an
        // O(1) jump into the screen density wherever that region still carries
        // weight. A drifting packet with a small hbar keeps the density in a
        // smooth cap around the classical arrival, so the doubling check can
        // converge. The momentum sits on the polar axis, which makes the
        // integrand independent of phi and keeps the grid cheap.
        let mut packet =
            GaussianPacket::new([1.0; 4], FourVector::new(1.25, 0.0, 0.0, 0.75));
        packet.amplitude = 3.0;
        let template = ExperimentTemplate::new(packet, 1.0, 0.06);
        let screen = Screen {
            radius: 20.0,
            theta_points: 128,
            phi_points: 2,
            time_points: 128,
            t_max: 80.0,
        };
        let config = SolverConfig::default();
        let norm = normalization_constant(&template, &screen, &config, 1.0).expect("normalize");
        assert!(norm.amplitude > 0.0);
        assert!((norm.amplitude * norm.amplitude * norm.integral - 1.0).abs() < 1e-12);
        assert!(norm.error <= 1e-3 * norm.integral);
        // The unit-amplitude integral ignores the template's amplitude.
        let mut plain = template.clone();
        plain.packet.amplitude = 1.0;
        let norm2 = normalization_constant(&plain, &screen, &config, 1.0).expect("normalize");
        assert_eq!(norm.integral, norm2.integral);
        // Re-integrating the rescaled density on the base grid lands on 1
        // within the reported resolution error.
        let mut rescaled = template.clone();
        rescaled.packet.amplitude = norm.amplitude;
        let redone = screen_density_integral(&rescaled, &screen, &config, 1.0).expect("integrate");
        assert!(
            (redone - 1.0).abs() <= norm.error / norm.integral + 1e-12,
            "redone {redone}, error {}",
            norm.error / norm.integral
        );
    }

    #[test]
    fn nonrel_report_matches_newton_and_the_mass_phase() {
        let template = reference_template();
        let rows = nonrel_limit_report(&template, &[1e4], &SolverConfig::default()).unwrap();
        assert_eq!(rows.len(), 1);
        let row = &rows[0];
        assert!((row.newtonian_c - 5000.0).abs() < 1e-9);
        assert!(row.c_gap_rel < 1e-3, "c gap {}", row.c_gap_rel);
        assert!(row.phase_gap_rel < 1e-3, "phase gap {}", row.phase_gap_rel);
        // The sub-leading phase is the quarter turn from the four arctangent
        // prefactor terms.
        let expected = row.phase_reference + std::f64::consts::FRAC_PI_2;
        assert!((row.lambda - expected).abs() / expected < 1e-6);
    }

    #[test]
    fn nonrel_report_rejects_fast_packets() {
        let mut exp = reference();
        exp.packet.momentum = FourVector::new(1.0, 0.1, 0.0, 0.0);
        match nonrel_limit_report(&exp.template(), &[100.0], &SolverConfig::default()) {
            Err(DetectionError::NotNonRelativistic { speed }) => {
                assert!((speed - 0.1).abs() < 1e-12)
            }
            other => panic!("expected NotNonRelativistic, got {other:?}"),
        }
    }

    #[test]
    fn isotropic_prefactor_decays_with_slope_minus_two() {
        let template = reference_template();
        let slope = prefactor_decay_slope(&template, 10.0, 1e4).unwrap();
        assert!((slope + 2.0).abs() < 5e-3, "slope {slope}");
    }

    #[test]
    fn single_spreading_axis_gives_slope_minus_half() {
        let mut exp = reference();
        exp.packet = GaussianPacket::new(
            [1.0, 1e4, 1e4, 1e4],
            FourVector::new(1.0, 0.0, 0.0, 0.0),
        );
        let slope = prefactor_decay_slope(&exp.template(), 10.0, 1e4).unwrap();
        assert!((slope + 0.5).abs() < 5e-3, "slope {slope}");
    }

    #[test]
    fn decay_slope_guards_its_regime() {
        let template = reference_template();
        assert!(matches!(
            prefactor_decay_slope(&template, 10.0, 500.0),
            Err(DetectionError::RangeTooNarrow { .. })
        ));
        assert!(matches!(
            prefactor_decay_slope(&template, 1e-3, 10.0),
            Err(DetectionError::NotSpreading { .. })
        ));
    }
}
