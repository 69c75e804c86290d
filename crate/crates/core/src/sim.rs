//! Bloch-sphere simulation of pulse programs over a dispersion ensemble and
//! the ensemble error metric.
//!
//! Each RF segment is one exact rotation: at dispersion scale `eps` a segment
//! with flip `f` and phase `phi` (radians) rotates by the scaled axis
//! `(eps f cos(phi), eps f sin(phi), omega |f|)`, where `omega` is a static
//! Larmor offset in radians per unit of nominal flip (the segment duration is
//! proportional to `|f|`). Z-shifts are exact frame rotations, independent of
//! both `eps` and `omega`.

use crate::pulse::{Event, FlipConvention, PulseProgram, total_flip_angle};
use crate::quad::composite_simpson;
use crate::so3::Rotation;
use nalgebra::Vector3;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("ensemble grid needs an odd point count of at least 3, got {0}")]
    BadGridCount(usize),
    #[error("dispersion half-width must lie in (0, 1), got {0}")]
    BadDelta(f64),
    #[error("profile and grid lengths differ: {profile} vs {grid}")]
    LengthMismatch { profile: usize, grid: usize },
}

/// Uniform grid of dispersion scales `eps` over `[1 - delta, 1 + delta]`.
#[derive(Clone, Debug)]
pub struct EnsembleGrid {
    pub epsilons: Vec<f64>,
    pub delta: f64,
}

impl EnsembleGrid {
    pub fn uniform(delta: f64, count: usize) -> Result<Self, SimError> {
        if count < 3 || count % 2 == 0 {
            return Err(SimError::BadGridCount(count));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(SimError::BadDelta(delta));
        }
        let h = 2.0 * delta / (count - 1) as f64;
        let epsilons = (0..count).map(|i| 1.0 - delta + i as f64 * h).collect();
        Ok(EnsembleGrid { epsilons, delta })
    }
}

/// Default ensemble resolution used by the CLI and the evaluation helpers.
pub const DEFAULT_GRID_POINTS: usize = 201;

#[derive(Clone, Copy, Debug, Default)]
pub struct SimOptions {
    /// Static Larmor offset in radians per radian of nominal flip.
    pub offset_omega: f64,
}

/// Final magnetization over the ensemble, one unit vector per grid point.
#[derive(Clone, Debug)]
pub struct StateProfile {
    pub epsilons: Vec<f64>,
    pub states: Vec<Vector3<f64>>,
}

/// Target final state, either fixed or varying across the ensemble.
pub enum Target {
    Fixed(Vector3<f64>),
    FromFn(Box<dyn Fn(f64) -> Vector3<f64> + Sync>),
}

impl Target {
    pub fn at(&self, eps: f64) -> Vector3<f64> {
        match self {
            Target::Fixed(v) => *v,
            Target::FromFn(f) => f(eps),
        }
    }

    /// Final state of an ideal rotation by `theta` about the axis at `phase`,
    /// starting from +z. For phase 90 and theta 90 degrees this is +x.
    pub fn ideal_flip(theta_rad: f64, phase_rad: f64) -> Self {
        let axis = Vector3::new(phase_rad.cos(), phase_rad.sin(), 0.0);
        let state = Rotation::from_scaled_axis(axis * theta_rad).apply(&Vector3::z());
        Target::Fixed(state)
    }
}

/// The exact rotation of a single event at dispersion scale `eps`.
pub fn event_rotation(event: &Event, eps: f64, opts: &SimOptions) -> Rotation {
    match event {
        Event::Rf(rf) => {
            let f = rf.flip_deg.to_radians();
            let phi = rf.phase_deg.to_radians();
            let w = Vector3::new(
                eps * f * phi.cos(),
                eps * f * phi.sin(),
                opts.offset_omega * f.abs(),
            );
            Rotation::from_scaled_axis(w)
        }
        Event::Z(z) => Rotation::from_scaled_axis(Vector3::new(
            0.0,
            0.0,
            z.angle_deg.to_radians(),
        )),
    }
}

/// Net rotation of the whole program at one dispersion scale.
pub fn program_rotation(program: &PulseProgram, eps: f64, opts: &SimOptions) -> Rotation {
    let mut acc = Rotation::identity();
    for block in &program.blocks {
        let mut block_rot = Rotation::identity();
        for event in &block.events {
            block_rot = event_rotation(event, eps, opts).after(&block_rot);
        }
        for _ in 0..block.reps {
            acc = block_rot.after(&acc);
        }
    }
    acc
}

/// Propagates the +z initial state through the program at every grid point.
pub fn simulate_program(
    program: &PulseProgram,
    grid: &EnsembleGrid,
    opts: &SimOptions,
) -> StateProfile {
    let states = grid
        .epsilons
        .iter()
        .map(|&eps| program_rotation(program, eps, opts).apply(&Vector3::z()))
        .collect();
    StateProfile {
        epsilons: grid.epsilons.clone(),
        states,
    }
}

/// Root-mean ensemble error: sqrt of the average of `|X(eps) - target(eps)|^2`
/// over the dispersion interval, integrated by composite Simpson.
pub fn l2_error(profile: &StateProfile, target: &Target) -> Result<f64, SimError> {
    let n = profile.epsilons.len();
    if n < 3 || n % 2 == 0 {
        return Err(SimError::BadGridCount(n));
    }
    if profile.states.len() != n {
        return Err(SimError::LengthMismatch {
            profile: profile.states.len(),
            grid: n,
        });
    }
    let residuals: Vec<f64> = profile
        .epsilons
        .iter()
        .zip(&profile.states)
        .map(|(&eps, state)| (state - target.at(eps)).norm_squared())
        .collect();
    let a = profile.epsilons[0];
    let b = profile.epsilons[n - 1];
    let mean = composite_simpson(&residuals, a, b) / (b - a);
    Ok(mean.max(0.0).sqrt())
}

/// Full evaluation: error metric, both flip-angle conventions, and the
/// pointwise residual norm for plotting.
#[derive(Clone, Debug)]
pub struct ErrorReport {
    pub l2_error: f64,
    pub flip_benchmark_rad: f64,
    pub flip_rf_sum_rad: f64,
    pub per_eps_residual: Vec<(f64, f64)>,
}

pub fn evaluate_program(
    program: &PulseProgram,
    grid: &EnsembleGrid,
    opts: &SimOptions,
    target: &Target,
) -> Result<ErrorReport, SimError> {
    let profile = simulate_program(program, grid, opts);
    let l2 = l2_error(&profile, target)?;
    let per_eps_residual = profile
        .epsilons
        .iter()
        .zip(&profile.states)
        .map(|(&eps, state)| (eps, (state - target.at(eps)).norm()))
        .collect();
    Ok(ErrorReport {
        l2_error: l2,
        flip_benchmark_rad: total_flip_angle(program, FlipConvention::Benchmark),
        flip_rf_sum_rad: total_flip_angle(program, FlipConvention::RfSum),
        per_eps_residual,
    })
}

/// CSV rows `epsilon,x,y,z` with a header line.
pub fn profile_csv(profile: &StateProfile) -> String {
    let mut out = String::from("epsilon,x,y,z\n");
    for (eps, s) in profile.epsilons.iter().zip(&profile.states) {
        out.push_str(&format!("{eps:.10},{:.10},{:.10},{:.10}\n", s.x, s.y, s.z));
    }
    out
}

/// CSV rows `epsilon,residual` with a header line.
pub fn residual_csv(residual: &[(f64, f64)]) -> String {
    let mut out = String::from("epsilon,residual\n");
    for (eps, r) in residual {
        out.push_str(&format!("{eps:.10},{r:.10}\n"));
    }
    out
}
