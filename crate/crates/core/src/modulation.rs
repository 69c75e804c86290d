//! Phase-modulated pulses: first-order interaction-frame rotations, exact
//! four-segment simulation, and the first-order-robust composite.
//!
//! The modulated pulse runs over `[0, 4 dt]` with `dt = pi / A`. The carrier
//! phase `phi_1` is 0 on the first and last quarter and pi on the middle two;
//! the modulation `d(phi_2)/dt` follows the shape (constant `-B`/`+B` halves
//! for the linear shape, the four-fold reflection schedule of a sampled
//! `f(t)` otherwise). In the modulation frame the evolution is
//! `dY/dt = (A eps cos(phi_1) Ox - d(phi_2)/dt Oz) Y`, and because both
//! `cos(phi_1)` and `d(phi_2)/dt` integrate to zero over a full cycle the
//! frame agrees with the lab frame at both endpoints.

use crate::pulse::{Block, Event, PulseProgram, RfSegment};
use crate::quad::composite_simpson;
use crate::so3::{Axis, Rotation};
use nalgebra::Vector3;
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModulationError {
    #[error("amplitude must be positive, got {0}")]
    BadAmplitude(f64),
    #[error("modulation magnitude must be nonnegative, got {0}")]
    BadRate(f64),
    #[error("first-order analysis requires B/A < 0.2, got {0}")]
    RateRatioTooLarge(f64),
    #[error("dispersion scale must be positive, got {0}")]
    BadEps(f64),
    #[error("sampled shape needs at least 3 samples, got {0}")]
    TooFewSamples(usize),
    #[error("sample magnitude {0} exceeds the declared modulation magnitude")]
    SampleOutOfRange(f64),
    #[error("sampled shape required for this operation")]
    NotSampled,
    #[error("linear shape required for this operation")]
    NotLinear,
    #[error("modulation csv: {0}")]
    BadCsv(String),
}

/// Modulation shape: constant-rate halves, or `f(t)` sampled uniformly on
/// `[0, dt]` including both endpoints.
#[derive(Clone, Debug)]
pub enum Shape {
    Linear,
    Sampled(Vec<f64>),
}

#[derive(Clone, Debug)]
pub struct ModulationSpec {
    pub amplitude_a: f64,
    pub rate_b: f64,
    pub shape: Shape,
}

impl ModulationSpec {
    pub fn new(amplitude_a: f64, rate_b: f64, shape: Shape) -> Result<Self, ModulationError> {
        if amplitude_a <= 0.0 {
            return Err(ModulationError::BadAmplitude(amplitude_a));
        }
        if rate_b < 0.0 {
            return Err(ModulationError::BadRate(rate_b));
        }
        if rate_b / amplitude_a >= 0.2 {
            return Err(ModulationError::RateRatioTooLarge(rate_b / amplitude_a));
        }
        if let Shape::Sampled(samples) = &shape {
            if samples.len() < 3 {
                return Err(ModulationError::TooFewSamples(samples.len()));
            }
            for &s in samples {
                if s.abs() > rate_b + 1e-12 {
                    return Err(ModulationError::SampleOutOfRange(s));
                }
            }
        }
        Ok(ModulationSpec {
            amplitude_a,
            rate_b,
            shape,
        })
    }

    /// Quarter-cycle duration `dt = pi / A`.
    pub fn dt(&self) -> f64 {
        PI / self.amplitude_a
    }

    /// `f(tau)` on `[0, dt]` by linear interpolation of the samples
    /// (constant `-B` for the linear shape).
    fn f_at(&self, tau: f64) -> f64 {
        match &self.shape {
            Shape::Linear => -self.rate_b,
            Shape::Sampled(samples) => {
                let n = samples.len();
                let x = (tau / self.dt()).clamp(0.0, 1.0) * (n - 1) as f64;
                let i = (x.floor() as usize).min(n - 2);
                let w = x - i as f64;
                samples[i] * (1.0 - w) + samples[i + 1] * w
            }
        }
    }

    /// The modulation rate `d(phi_2)/dt` at time `t` in `[0, 4 dt]`,
    /// applying the four-fold reflection schedule to `f`.
    fn phi2_rate(&self, t: f64) -> f64 {
        let dt = self.dt();
        if t <= dt {
            self.f_at(t)
        } else if t <= 2.0 * dt {
            self.f_at(2.0 * dt - t)
        } else if t <= 3.0 * dt {
            -self.f_at(t - 2.0 * dt)
        } else {
            -self.f_at(4.0 * dt - t)
        }
    }

    /// Carrier phase `phi_1` at time `t`: 0 on the outer quarters, pi inside.
    fn cos_phi1(&self, t: f64) -> f64 {
        let dt = self.dt();
        if t <= dt || t > 3.0 * dt {
            1.0
        } else {
            -1.0
        }
    }
}

/// Default number of piecewise-constant slices per quarter for sampled shapes.
pub const DEFAULT_SUBSTEPS: usize = 1000;

/// First-order rotation of the linear shape:
/// `exp(c Oy)` with `c = (4B / (A eps)) (1 - cos(pi eps))`.
pub fn linear_first_order(spec: &ModulationSpec, eps: f64) -> Result<Rotation, ModulationError> {
    if eps <= 0.0 {
        return Err(ModulationError::BadEps(eps));
    }
    if !matches!(spec.shape, Shape::Linear) {
        return Err(ModulationError::NotLinear);
    }
    let c = 4.0 * spec.rate_b / (spec.amplitude_a * eps) * (1.0 - (PI * eps).cos());
    Ok(Rotation::about(Axis::Y, c))
}

/// First-order rotation of a sampled shape:
/// `exp(c Oy)` with `c = -4 \int_0^{dt} f(t) sin(A eps t) dt`, integrated by
/// composite Simpson over the samples (padded to an odd count by midpoint
/// refinement when needed).
pub fn arbitrary_first_order(spec: &ModulationSpec, eps: f64) -> Result<Rotation, ModulationError> {
    if eps <= 0.0 {
        return Err(ModulationError::BadEps(eps));
    }
    let samples = match &spec.shape {
        Shape::Sampled(s) => s,
        Shape::Linear => return Err(ModulationError::NotSampled),
    };
    let dt = spec.dt();
    // Evaluate on an odd uniform grid aligned with the sample resolution.
    let n = if samples.len() % 2 == 1 {
        samples.len()
    } else {
        2 * samples.len() - 1
    };
    let h = dt / (n - 1) as f64;
    let vals: Vec<f64> = (0..n)
        .map(|i| {
            let t = i as f64 * h;
            spec.f_at(t) * (spec.amplitude_a * eps * t).sin()
        })
        .collect();
    let c = -4.0 * composite_simpson(&vals, 0.0, dt);
    Ok(Rotation::about(Axis::Y, c))
}

/// First-order rotation for either shape.
pub fn first_order(spec: &ModulationSpec, eps: f64) -> Result<Rotation, ModulationError> {
    match spec.shape {
        Shape::Linear => linear_first_order(spec, eps),
        Shape::Sampled(_) => arbitrary_first_order(spec, eps),
    }
}

/// Exact propagator of the modulated pulse over `[0, 4 dt]` at dispersion
/// scale `eps`. The linear shape composes exactly four constant-Hamiltonian
/// segments; sampled shapes use `substeps` piecewise-constant slices per
/// quarter with midpoint sampling.
pub fn simulate_modulated(spec: &ModulationSpec, eps: f64, substeps: usize) -> Rotation {
    let dt = spec.dt();
    match spec.shape {
        Shape::Linear => {
            let (a, b) = (spec.amplitude_a * eps, spec.rate_b);
            // dY/dt = (A eps cos(phi1) Ox - phi2_rate Oz) Y per quarter.
            let segs = [(a, b), (-a, b), (-a, -b), (a, -b)];
            let mut u = Rotation::identity();
            for (x, z) in segs {
                let r = Rotation::from_scaled_axis(Vector3::new(x * dt, 0.0, z * dt));
                u = r.after(&u);
            }
            u
        }
        Shape::Sampled(_) => {
            let steps = substeps.max(1);
            let h = dt / steps as f64;
            let mut u = Rotation::identity();
            for q in 0..4 {
                for i in 0..steps {
                    let t = q as f64 * dt + (i as f64 + 0.5) * h;
                    let x = spec.amplitude_a * eps * spec.cos_phi1(t);
                    let z = -spec.phi2_rate(t);
                    let r = Rotation::from_scaled_axis(Vector3::new(x * h, 0.0, z * h));
                    u = r.after(&u);
                }
            }
            u
        }
    }
}

/// Robust composite verification report.
#[derive(Clone, Debug)]
pub struct RobustReport {
    /// Net rotation angle (radians) of the composite versus `eps`.
    pub angles: Vec<(f64, f64)>,
    /// Central-difference estimate of `d(net angle)/d eps` at `eps = 1`.
    pub derivative_at_one: f64,
    /// Net angle at `eps = 1`, nominally `16 B / A`.
    pub angle_at_one: f64,
}

/// Exact net rotation of the composite (modulated pulse followed by a direct
/// y-phase pulse of nominal flip `8B/A`, scaled by `eps`).
pub fn robust_rotation(spec: &ModulationSpec, eps: f64, substeps: usize) -> Rotation {
    let direct = Rotation::about(Axis::Y, eps * 8.0 * spec.rate_b / spec.amplitude_a);
    direct.after(&simulate_modulated(spec, eps, substeps))
}

/// Builds the first-order-robust composite: the modulated block realized as a
/// lab-frame phase ramp (phase `phi_1 + phi_2` discretized into
/// `slices_per_quarter` RF segments per quarter) followed by the direct
/// `(8B/A)` y-phase segment. The report is computed from the exact modulated
/// propagator, not from the discretization.
pub fn robust_composite(
    spec: &ModulationSpec,
    slices_per_quarter: usize,
    delta: f64,
    grid_points: usize,
) -> Result<(PulseProgram, RobustReport), ModulationError> {
    if !matches!(spec.shape, Shape::Linear) {
        return Err(ModulationError::NotLinear);
    }
    let dt = spec.dt();
    let steps = slices_per_quarter.max(1);
    let h = dt / steps as f64;
    let mut events = Vec::with_capacity(4 * steps + 1);
    // phi_2(t) accumulated at slice midpoints; phi_2(0) = 0.
    for q in 0..4 {
        for i in 0..steps {
            let t = q as f64 * dt + (i as f64 + 0.5) * h;
            let phi2 = if t <= 2.0 * dt {
                -spec.rate_b * t
            } else {
                -2.0 * spec.rate_b * dt + spec.rate_b * (t - 2.0 * dt)
            };
            let phi1 = if spec.cos_phi1(t) > 0.0 { 0.0 } else { PI };
            events.push(Event::Rf(RfSegment::new(
                (spec.amplitude_a * h).to_degrees(),
                (phi1 + phi2).to_degrees(),
            )));
        }
    }
    events.push(Event::Rf(RfSegment::new(
        (8.0 * spec.rate_b / spec.amplitude_a).to_degrees(),
        90.0,
    )));
    let program = PulseProgram {
        blocks: vec![Block { events, reps: 1 }],
        meta: None,
    };

    let n = if grid_points % 2 == 1 {
        grid_points.max(3)
    } else {
        grid_points + 1
    };
    let angles = (0..n)
        .map(|i| {
            let eps = 1.0 - delta + 2.0 * delta * i as f64 / (n - 1) as f64;
            (eps, robust_rotation(spec, eps, DEFAULT_SUBSTEPS).angle())
        })
        .collect();
    let fd = 1e-4;
    let derivative_at_one = (robust_rotation(spec, 1.0 + fd, DEFAULT_SUBSTEPS).angle()
        - robust_rotation(spec, 1.0 - fd, DEFAULT_SUBSTEPS).angle())
        / (2.0 * fd);
    let angle_at_one = robust_rotation(spec, 1.0, DEFAULT_SUBSTEPS).angle();
    Ok((
        program,
        RobustReport {
            angles,
            derivative_at_one,
            angle_at_one,
        },
    ))
}

/// Parses a `t,f` CSV (header optional) with uniform spacing starting at 0,
/// returning the sample values for [`Shape::Sampled`].
pub fn parse_modulation_csv(text: &str) -> Result<Vec<f64>, ModulationError> {
    let mut rows: Vec<(f64, f64)> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split(',');
        let t = parts.next().unwrap_or("").trim();
        let f = parts.next().unwrap_or("").trim();
        if lineno == 0 && t.parse::<f64>().is_err() {
            continue; // header row
        }
        let t: f64 = t
            .parse()
            .map_err(|_| ModulationError::BadCsv(format!("line {}: bad t value", lineno + 1)))?;
        let f: f64 = f
            .parse()
            .map_err(|_| ModulationError::BadCsv(format!("line {}: bad f value", lineno + 1)))?;
        rows.push((t, f));
    }
    if rows.len() < 3 {
        return Err(ModulationError::TooFewSamples(rows.len()));
    }
    let h = rows[1].0 - rows[0].0;
    if rows[0].0.abs() > 1e-9 {
        return Err(ModulationError::BadCsv("time axis must start at 0".into()));
    }
    if h <= 0.0 {
        return Err(ModulationError::BadCsv("time axis must be increasing".into()));
    }
    for w in rows.windows(2) {
        if ((w[1].0 - w[0].0) - h).abs() > 1e-6 * h.max(1e-12) {
            return Err(ModulationError::BadCsv(format!(
                "non-uniform spacing near t = {}",
                w[1].0
            )));
        }
    }
    Ok(rows.into_iter().map(|(_, f)| f).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::so3::geodesic_distance;
    use approx::assert_abs_diff_eq;

    fn linear(a: f64, b: f64) -> ModulationSpec {
        ModulationSpec::new(a, b, Shape::Linear).unwrap()
    }

    #[test]
    fn spec_validation() {
        assert!(ModulationSpec::new(0.0, 0.01, Shape::Linear).is_err());
        assert!(ModulationSpec::new(1.0, -0.01, Shape::Linear).is_err());
        assert!(ModulationSpec::new(1.0, 0.3, Shape::Linear).is_err());
        assert!(ModulationSpec::new(1.0, 0.01, Shape::Sampled(vec![0.0, 0.0])).is_err());
        assert!(ModulationSpec::new(1.0, 0.01, Shape::Sampled(vec![0.0, 0.5, 0.0])).is_err());
    }

    #[test]
    fn linear_first_order_anchors() {
        let spec = linear(1.0, 0.01);
        let c1 = linear_first_order(&spec, 1.0).unwrap().angle();
        assert_abs_diff_eq!(c1, 8.0 * 0.01, epsilon = 1e-12);
        let c2 = linear_first_order(&spec, 2.0).unwrap().angle();
        assert_abs_diff_eq!(c2, 0.0, epsilon = 1e-12);
        // Small-deviation expansion: c ~ (8B/A)(1 - d).
        let d = 1e-3;
        let c = linear_first_order(&spec, 1.0 + d).unwrap().angle();
        assert_abs_diff_eq!(c, 8.0 * 0.01 * (1.0 - d), epsilon = 1e-6);
        assert!(linear_first_order(&spec, 0.0).is_err());
    }

    #[test]
    fn zero_rate_gives_identity() {
        let spec = linear(1.0, 0.0);
        for eps in [0.6, 1.0, 1.4] {
            let u = simulate_modulated(&spec, eps, 1);
            assert_abs_diff_eq!(u.angle(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn richardson_quadratic_convergence_off_resonance() {
        for eps in [0.6, 1.2, 1.4] {
            let d: Vec<f64> = [0.02, 0.01, 0.005]
                .iter()
                .map(|&b| {
                    let spec = linear(1.0, b);
                    geodesic_distance(
                        &simulate_modulated(&spec, eps, 1),
                        &linear_first_order(&spec, eps).unwrap(),
                    )
                })
                .collect();
            let r1 = d[0] / d[1];
            let r2 = d[1] / d[2];
            assert!((3.4..=4.6).contains(&r1), "eps {eps}: ratio {r1}");
            assert!((3.4..=4.6).contains(&r2), "eps {eps}: ratio {r2}");
        }
    }

    #[test]
    fn sampled_constant_matches_linear_exactly_in_the_limit() {
        let b = 0.01;
        let lin = linear(1.0, b);
        let samp = ModulationSpec::new(1.0, b, Shape::Sampled(vec![-b; 101])).unwrap();
        for eps in [0.7, 1.0, 1.3] {
            let d = geodesic_distance(
                &simulate_modulated(&lin, eps, 1),
                &simulate_modulated(&samp, eps, 2000),
            );
            assert!(d < 1e-8, "eps {eps}: {d}");
            // First-order formulas agree too.
            let dfo = geodesic_distance(
                &linear_first_order(&lin, eps).unwrap(),
                &arbitrary_first_order(&samp, eps).unwrap(),
            );
            assert!(dfo < 1e-6, "eps {eps}: {dfo}");
        }
    }

    #[test]
    fn sampled_sine_matches_closed_form() {
        // f(t) = -B sin(A t): closed-form first-order coefficient via
        // product-to-sum.
        let (a, b) = (1.0, 0.01);
        let n = 2001;
        let dt = PI / a;
        let samples: Vec<f64> = (0..n)
            .map(|i| -b * (a * dt * i as f64 / (n - 1) as f64).sin())
            .collect();
        let spec = ModulationSpec::new(a, b, Shape::Sampled(samples)).unwrap();
        for eps in [0.6f64, 1.3] {
            let got = arbitrary_first_order(&spec, eps).unwrap().angle();
            let expect = 4.0 * b
                * (((1.0 - eps) * PI).sin() / (2.0 * a * (1.0 - eps))
                    - ((1.0 + eps) * PI).sin() / (2.0 * a * (1.0 + eps)));
            assert_abs_diff_eq!(got, expect.abs(), epsilon = 1e-6);
        }
    }

    #[test]
    fn substep_refinement_converges() {
        let b = 0.01;
        let spec = ModulationSpec::new(1.0, b, Shape::Sampled(vec![-b; 51])).unwrap();
        let coarse = simulate_modulated(&spec, 1.2, 1000);
        let fine = simulate_modulated(&spec, 1.2, 2000);
        assert!(geodesic_distance(&coarse, &fine) < 1e-8);
    }

    #[test]
    fn robust_composite_flattens_the_dispersion() {
        let spec = linear(1.0, 0.01);
        let (program, report) = robust_composite(&spec, 200, 0.5, 21).unwrap();
        assert_abs_diff_eq!(report.angle_at_one, 16.0 * 0.01, epsilon = 1e-4);
        assert!(
            report.derivative_at_one.abs() <= 1e-3 * report.angle_at_one,
            "derivative {} angle {}",
            report.derivative_at_one,
            report.angle_at_one
        );
        // The discretized program reproduces the exact composite at eps = 1.
        let exact = robust_rotation(&spec, 1.0, 1);
        let approx = crate::sim::program_rotation(&program, 1.0, &crate::sim::SimOptions::default());
        assert!(geodesic_distance(&exact, &approx) < 1e-3);
    }

    #[test]
    fn frame_closure_integrals_vanish() {
        let spec = linear(1.0, 0.015);
        let dt = spec.dt();
        let n = 4001;
        let h = 4.0 * dt / (n - 1) as f64;
        let cos_vals: Vec<f64> = (0..n).map(|i| spec.cos_phi1((i as f64 + 0.5) * h)).collect();
        let rate_vals: Vec<f64> = (0..n).map(|i| spec.phi2_rate((i as f64 + 0.5) * h)).collect();
        let cos_int = composite_simpson(&cos_vals, 0.0, 4.0 * dt);
        let rate_int = composite_simpson(&rate_vals, 0.0, 4.0 * dt);
        assert_abs_diff_eq!(cos_int, 0.0, epsilon = 1e-2);
        assert_abs_diff_eq!(rate_int, 0.0, epsilon = 1e-2);
    }

    #[test]
    fn csv_parsing() {
        let good = "t,f\n0,0.0\n0.5,-0.01\n1.0,0.0\n";
        assert_eq!(parse_modulation_csv(good).unwrap(), vec![0.0, -0.01, 0.0]);
        assert!(parse_modulation_csv("t,f\n0,0\n1,0\n").is_err());
        assert!(parse_modulation_csv("t,f\n0,0\n0.5,0\n1.2,0\n").is_err());
        assert!(parse_modulation_csv("t,f\n0.1,0\n0.2,0\n0.3,0\n").is_err());
    }
}
