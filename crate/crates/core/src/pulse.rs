//! Pulse program data model, amplitude-splitting compiler and flip-angle
//! accounting.
//!
//! A program is an ordered list of blocks; each block repeats an event list.
//! RF segments are scaled by the dispersion parameter at simulation time,
//! z-shifts are exact frame rotations and never scaled. Angles are kept at
//! full precision internally; rounding to 0.1 degree happens only in the text
//! serializer.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PulseError {
    #[error("split threshold must be positive, got {0}")]
    NonPositiveThreshold(f64),
    #[error("design method {found:?} does not match compiler {expected:?}")]
    MethodMismatch { expected: Method, found: Method },
    #[error("invalid design record: {0}")]
    InvalidDesign(String),
}

/// Synthesis method of a design or compiled program.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "FSM")]
    Fsm,
    #[serde(rename = "DeltaMod")]
    DeltaMod,
}

/// How the frequencies of a design were chosen.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Selection {
    Heuristic,
    Greedy,
    Gradient,
}

/// One RF segment: nominal flip angle (scaled by the dispersion parameter at
/// simulation time) and RF phase, both in degrees. Flips may be negative; the
/// phase is normalized to [0, 360).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RfSegment {
    pub flip_deg: f64,
    pub phase_deg: f64,
}

impl RfSegment {
    pub fn new(flip_deg: f64, phase_deg: f64) -> Self {
        RfSegment {
            flip_deg,
            phase_deg: phase_deg.rem_euclid(360.0),
        }
    }
}

/// An instantaneous, exact frame rotation about z, in degrees. Not scaled by
/// the dispersion parameter.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ZShift {
    pub angle_deg: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Event {
    Rf(RfSegment),
    Z(ZShift),
}

/// An event list repeated `reps` times.
#[derive(Clone, Debug, PartialEq)]
pub struct Block {
    pub events: Vec<Event>,
    pub reps: u32,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProgramMeta {
    pub method: Method,
    pub theta_deg: f64,
    pub delta: f64,
}

/// The executable artifact: ordered blocks plus optional design metadata.
#[derive(Clone, Debug, PartialEq)]
pub struct PulseProgram {
    pub blocks: Vec<Block>,
    pub meta: Option<ProgramMeta>,
}

impl PulseProgram {
    /// All events in time order, blocks expanded by their repetition counts.
    pub fn events_expanded(&self) -> impl Iterator<Item = Event> + '_ {
        self.blocks.iter().flat_map(|b| {
            std::iter::repeat_with(move || b.events.iter().copied())
                .take(b.reps as usize)
                .flatten()
        })
    }
}

/// Synthesis result: method, target angle, dispersion half-width, frequencies
/// and amplitudes (degrees), plus provenance of the frequency selection.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DesignRecord {
    pub method: Method,
    pub theta_deg: f64,
    pub delta: f64,
    pub gammas_deg: Vec<f64>,
    pub alphas_deg: Vec<f64>,
    pub selection: Selection,
    pub seed: u64,
}

impl DesignRecord {
    pub fn validate(&self) -> Result<(), PulseError> {
        if self.gammas_deg.len() != self.alphas_deg.len() {
            return Err(PulseError::InvalidDesign(format!(
                "{} frequencies but {} amplitudes",
                self.gammas_deg.len(),
                self.alphas_deg.len()
            )));
        }
        if self.gammas_deg.is_empty() {
            return Err(PulseError::InvalidDesign("empty design".into()));
        }
        for w in self.gammas_deg.windows(2) {
            if w[0] >= w[1] {
                return Err(PulseError::InvalidDesign(format!(
                    "frequencies must be strictly ascending: {} >= {}",
                    w[0], w[1]
                )));
            }
        }
        if self.gammas_deg[0] <= 0.0 {
            return Err(PulseError::InvalidDesign(
                "frequencies must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("design record serializes")
    }

    pub fn from_toml(text: &str) -> Result<Self, PulseError> {
        let record: DesignRecord = toml::from_str(text)
            .map_err(|e| PulseError::InvalidDesign(e.to_string()))?;
        record.validate()?;
        Ok(record)
    }
}

/// Splits an amplitude into `reps` equal signed parts with `|part| <= threshold`.
/// `reps * part` reproduces the amplitude exactly.
pub fn split_amplitude(alpha_deg: f64, threshold_deg: f64) -> Result<(u32, f64), PulseError> {
    if threshold_deg <= 0.0 {
        return Err(PulseError::NonPositiveThreshold(threshold_deg));
    }
    let reps = (alpha_deg.abs() / threshold_deg).ceil().max(1.0) as u32;
    Ok((reps, alpha_deg / reps as f64))
}

/// Compiles a delta-modulated design: per frequency a three-segment block
/// `(g)_0 (2g)_{180 - a'/2} (g)_0` repeated, where `a'` is the per-repetition
/// amplitude from the splitter. The middle phase shift realizes a pair of
/// z-kicks of area +-a'/2, so the block needs no explicit z events.
pub fn compile_dmod(
    design: &DesignRecord,
    threshold_deg: f64,
) -> Result<PulseProgram, PulseError> {
    expect_method(design, Method::DeltaMod)?;
    design.validate()?;
    let mut blocks = Vec::new();
    for (&g, &a) in design.gammas_deg.iter().zip(&design.alphas_deg) {
        let (reps, per_rep) = split_amplitude(a, threshold_deg)?;
        blocks.push(Block {
            events: vec![
                Event::Rf(RfSegment::new(g, 0.0)),
                Event::Rf(RfSegment::new(2.0 * g, 180.0 - per_rep / 2.0)),
                Event::Rf(RfSegment::new(g, 0.0)),
            ],
            reps,
        });
    }
    Ok(PulseProgram {
        blocks,
        meta: Some(meta_of(design)),
    })
}

/// The explicit-z form of a delta-modulated block, equivalent to the
/// phase-encoded form of [`compile_dmod`] as a net rotation. Used to verify
/// the frame-change construction; the z areas in each block sum to zero.
pub fn compile_dmod_explicit_z(
    design: &DesignRecord,
    threshold_deg: f64,
) -> Result<PulseProgram, PulseError> {
    expect_method(design, Method::DeltaMod)?;
    design.validate()?;
    let mut blocks = Vec::new();
    for (&g, &a) in design.gammas_deg.iter().zip(&design.alphas_deg) {
        let (reps, per_rep) = split_amplitude(a, threshold_deg)?;
        blocks.push(Block {
            events: vec![
                Event::Rf(RfSegment::new(g, 0.0)),
                Event::Z(ZShift {
                    angle_deg: per_rep / 2.0,
                }),
                Event::Rf(RfSegment::new(2.0 * g, 180.0)),
                Event::Z(ZShift {
                    angle_deg: -per_rep / 2.0,
                }),
                Event::Rf(RfSegment::new(g, 0.0)),
            ],
            reps,
        });
    }
    Ok(PulseProgram {
        blocks,
        meta: Some(meta_of(design)),
    })
}

/// Compiles a Fourier-synthesis design: per frequency the five-segment element
/// `(g)_0 (b'/2)_90 (2g)_180 (b'/2)_90 (g)_0` repeated, with `b'` the
/// per-repetition amplitude. Negative amplitudes keep their sign on the
/// 90-degree segments. Every segment is RF (dispersion-scaled).
pub fn compile_fsm(design: &DesignRecord, threshold_deg: f64) -> Result<PulseProgram, PulseError> {
    expect_method(design, Method::Fsm)?;
    design.validate()?;
    let mut blocks = Vec::new();
    for (&g, &a) in design.gammas_deg.iter().zip(&design.alphas_deg) {
        let (reps, per_rep) = split_amplitude(a, threshold_deg)?;
        blocks.push(Block {
            events: vec![
                Event::Rf(RfSegment::new(g, 0.0)),
                Event::Rf(RfSegment::new(per_rep / 2.0, 90.0)),
                Event::Rf(RfSegment::new(2.0 * g, 180.0)),
                Event::Rf(RfSegment::new(per_rep / 2.0, 90.0)),
                Event::Rf(RfSegment::new(g, 0.0)),
            ],
            reps,
        });
    }
    Ok(PulseProgram {
        blocks,
        meta: Some(meta_of(design)),
    })
}

/// Dispatches on the design's method tag.
pub fn compile(design: &DesignRecord, threshold_deg: f64) -> Result<PulseProgram, PulseError> {
    match design.method {
        Method::Fsm => compile_fsm(design, threshold_deg),
        Method::DeltaMod => compile_dmod(design, threshold_deg),
    }
}

fn expect_method(design: &DesignRecord, expected: Method) -> Result<(), PulseError> {
    if design.method != expected {
        return Err(PulseError::MethodMismatch {
            expected,
            found: design.method,
        });
    }
    Ok(())
}

fn meta_of(design: &DesignRecord) -> ProgramMeta {
    ProgramMeta {
        method: design.method,
        theta_deg: design.theta_deg,
        delta: design.delta,
    }
}

/// Flip-angle accounting conventions, both reported in radians.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FlipConvention {
    /// Counts the conjugation (carrier) rotations, 4*n*g per block, plus the
    /// per-repetition z-kick areas for delta-modulated blocks. This is the
    /// accounting behind the published benchmark durations.
    Benchmark,
    /// Sum of |flip| over every RF segment.
    RfSum,
}

/// Total flip angle of a program in radians under the given convention.
pub fn total_flip_angle(program: &PulseProgram, convention: FlipConvention) -> f64 {
    let deg = match convention {
        FlipConvention::RfSum => program
            .blocks
            .iter()
            .map(|b| {
                let per_rep: f64 = b
                    .events
                    .iter()
                    .map(|e| match e {
                        Event::Rf(rf) => rf.flip_deg.abs(),
                        Event::Z(_) => 0.0,
                    })
                    .sum();
                per_rep * b.reps as f64
            })
            .sum::<f64>(),
        FlipConvention::Benchmark => program
            .blocks
            .iter()
            .map(|b| benchmark_block_flip(b))
            .sum::<f64>(),
    };
    deg.to_radians()
}

fn benchmark_block_flip(block: &Block) -> f64 {
    let rf: Vec<&RfSegment> = block
        .events
        .iter()
        .filter_map(|e| match e {
            Event::Rf(s) => Some(s),
            Event::Z(_) => None,
        })
        .collect();
    let n = block.reps as f64;
    match rf.as_slice() {
        // Five-segment element: only the four carrier rotations count.
        [a, b, c, d, e]
            if a.phase_deg == 0.0
                && b.phase_deg == 90.0
                && c.phase_deg == 180.0
                && d.phase_deg == 90.0
                && e.phase_deg == 0.0 =>
        {
            n * 4.0 * a.flip_deg.abs()
        }
        // Three-segment delta-modulated element: carrier rotations plus the
        // z-kick area encoded in the middle phase.
        [a, b, c] if a.phase_deg == 0.0 && c.phase_deg == 0.0 => {
            let z_area = 2.0 * (180.0 - b.phase_deg);
            n * (4.0 * a.flip_deg.abs() + z_area.abs())
        }
        // Anything else: fall back to the RF sum for this block.
        _ => {
            let per_rep: f64 = rf.iter().map(|s| s.flip_deg.abs()).sum();
            n * per_rep
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn split_published_examples() {
        let (reps, per) = split_amplitude(105.5, 9.0).unwrap();
        assert_eq!(reps, 12);
        assert_abs_diff_eq!(per, 105.5 / 12.0, epsilon = 1e-12);
        assert_abs_diff_eq!(per, 8.7917, epsilon = 5e-5);

        let (reps, per) = split_amplitude(16.6, 9.0).unwrap();
        assert_eq!(reps, 2);
        assert_abs_diff_eq!(per, 8.3, epsilon = 1e-12);

        let (reps, per) = split_amplitude(-5.9, 9.0).unwrap();
        assert_eq!(reps, 1);
        assert_abs_diff_eq!(per, -5.9, epsilon = 1e-12);

        assert!(split_amplitude(10.0, 0.0).is_err());
        assert!(split_amplitude(10.0, -1.0).is_err());
    }

    #[test]
    fn split_is_exact_and_bounded() {
        for alpha in [187.3, 33.8, -10.8059, 0.0, 8.9999, 9.0, 9.0001] {
            let (reps, per) = split_amplitude(alpha, 9.0).unwrap();
            assert_abs_diff_eq!(per * reps as f64, alpha, epsilon = 1e-12);
            assert!(per.abs() <= 9.0 + 1e-12);
        }
    }

    fn dmod_design(gammas: &[f64], alphas: &[f64]) -> DesignRecord {
        DesignRecord {
            method: Method::DeltaMod,
            theta_deg: 90.0,
            delta: 0.5,
            gammas_deg: gammas.to_vec(),
            alphas_deg: alphas.to_vec(),
            selection: Selection::Gradient,
            seed: 0,
        }
    }

    #[test]
    fn compile_dmod_worked_example() {
        let design = dmod_design(&[88.6, 265.1], &[105.5, 16.6]);
        let program = compile_dmod(&design, 9.0).unwrap();
        assert_eq!(program.blocks.len(), 2);
        assert_eq!(program.blocks[0].reps, 12);
        assert_eq!(program.blocks[1].reps, 2);
        let mid = match program.blocks[0].events[1] {
            Event::Rf(s) => s,
            _ => panic!("expected rf"),
        };
        assert_abs_diff_eq!(mid.flip_deg, 177.2, epsilon = 0.11);
        assert_abs_diff_eq!(mid.phase_deg, 175.6, epsilon = 0.05);
        let mid2 = match program.blocks[1].events[1] {
            Event::Rf(s) => s,
            _ => panic!("expected rf"),
        };
        assert_abs_diff_eq!(mid2.phase_deg, 175.85, epsilon = 1e-9);
    }

    #[test]
    fn compile_dmod_zero_amplitude() {
        let design = dmod_design(&[90.0], &[0.0]);
        let program = compile_dmod(&design, 9.0).unwrap();
        let mid = match program.blocks[0].events[1] {
            Event::Rf(s) => s,
            _ => panic!(),
        };
        assert_eq!(mid.phase_deg, 180.0);
        let zprog = compile_dmod_explicit_z(&design, 9.0).unwrap();
        let z_sum: f64 = zprog.blocks[0]
            .events
            .iter()
            .map(|e| match e {
                Event::Z(z) => z.angle_deg,
                _ => 0.0,
            })
            .sum();
        assert_eq!(z_sum, 0.0);
    }

    #[test]
    fn compile_dmod_small_negative_amplitude() {
        // A -0.3 degree term compiles to a single rep with phase 180.15.
        let design = dmod_design(&[730.2], &[-0.3]);
        let program = compile_dmod(&design, 9.0).unwrap();
        assert_eq!(program.blocks[0].reps, 1);
        let mid = match program.blocks[0].events[1] {
            Event::Rf(s) => s,
            _ => panic!(),
        };
        assert_abs_diff_eq!(mid.phase_deg, 180.15, epsilon = 1e-9);
    }

    #[test]
    fn explicit_z_areas_cancel() {
        let design = dmod_design(&[90.0, 270.0], &[105.5, 16.7]);
        let program = compile_dmod_explicit_z(&design, 9.0).unwrap();
        for block in &program.blocks {
            let z_sum: f64 = block
                .events
                .iter()
                .map(|e| match e {
                    Event::Z(z) => z.angle_deg,
                    _ => 0.0,
                })
                .sum();
            assert_eq!(z_sum, 0.0);
        }
    }

    #[test]
    fn compile_fsm_published_example() {
        let design = DesignRecord {
            method: Method::Fsm,
            theta_deg: 90.0,
            delta: 0.5,
            gammas_deg: vec![49.3, 196.5],
            alphas_deg: vec![187.3, 33.8],
            selection: Selection::Heuristic,
            seed: 0,
        };
        let program = compile_fsm(&design, 9.0).unwrap();
        assert_eq!(program.blocks[0].reps, 21);
        assert_eq!(program.blocks[1].reps, 4);
        let half = match program.blocks[0].events[1] {
            Event::Rf(s) => s,
            _ => panic!(),
        };
        assert_abs_diff_eq!(half.flip_deg, 4.5, epsilon = 0.05);
        assert_eq!(half.phase_deg, 90.0);
        // No z events in a Fourier-synthesis program.
        assert!(program
            .events_expanded()
            .all(|e| matches!(e, Event::Rf(_))));
    }

    #[test]
    fn compile_fsm_preserves_signed_flips() {
        let design = DesignRecord {
            method: Method::Fsm,
            theta_deg: 90.0,
            delta: 0.5,
            gammas_deg: vec![369.0],
            alphas_deg: vec![-10.8],
            selection: Selection::Heuristic,
            seed: 0,
        };
        let program = compile_fsm(&design, 9.0).unwrap();
        assert_eq!(program.blocks[0].reps, 2);
        let half = match program.blocks[0].events[1] {
            Event::Rf(s) => s,
            _ => panic!(),
        };
        assert_abs_diff_eq!(half.flip_deg, -2.7, epsilon = 1e-9);
        assert_eq!(half.phase_deg, 90.0);
    }

    #[test]
    fn compile_rejects_wrong_method() {
        let design = dmod_design(&[90.0], &[10.0]);
        assert!(compile_fsm(&design, 9.0).is_err());
        let mut fsm = design;
        fsm.method = Method::Fsm;
        assert!(compile_dmod(&fsm, 9.0).is_err());
    }

    #[test]
    fn compiled_amplitudes_reconstruct_exactly() {
        let design = dmod_design(&[86.7, 259.1, 427.8, 730.2], &[108.5, 22.9, 4.6, -0.3]);
        let program = compile_dmod(&design, 9.0).unwrap();
        for (block, &alpha) in program.blocks.iter().zip(&design.alphas_deg) {
            let mid = match block.events[1] {
                Event::Rf(s) => s,
                _ => panic!(),
            };
            let per_rep = 2.0 * (180.0 - mid.phase_deg);
            assert_abs_diff_eq!(per_rep * block.reps as f64, alpha, epsilon = 1e-10);
        }
    }

    #[test]
    fn flip_angle_conventions() {
        let single = PulseProgram {
            blocks: vec![Block {
                events: vec![Event::Rf(RfSegment::new(90.0, 0.0))],
                reps: 1,
            }],
            meta: None,
        };
        assert_abs_diff_eq!(
            total_flip_angle(&single, FlipConvention::RfSum),
            std::f64::consts::FRAC_PI_2,
            epsilon = 1e-12
        );

        // Published benchmark anchor: 12x(90,270 deg) + 2x(270) delta-mod blocks.
        let design = dmod_design(&[90.0, 270.0], &[105.5, 16.7]);
        let program = compile_dmod(&design, 9.0).unwrap();
        assert_abs_diff_eq!(
            total_flip_angle(&program, FlipConvention::Benchmark),
            115.230,
            epsilon = 0.05
        );

        let fsm = DesignRecord {
            method: Method::Fsm,
            theta_deg: 90.0,
            delta: 0.5,
            gammas_deg: vec![51.5, 373.7],
            alphas_deg: vec![163.4, -15.7],
            selection: Selection::Gradient,
            seed: 0,
        };
        let program = compile_fsm(&fsm, 9.0).unwrap();
        assert_abs_diff_eq!(
            total_flip_angle(&program, FlipConvention::Benchmark),
            120.519,
            epsilon = 0.05
        );
    }

    #[test]
    fn design_record_toml_round_trip() {
        let design = dmod_design(&[88.6, 265.1], &[105.5, 16.6]);
        let text = design.to_toml();
        assert!(text.contains("method = \"DeltaMod\""));
        assert!(text.contains("gammas_deg"));
        let back = DesignRecord::from_toml(&text).unwrap();
        assert_eq!(back, design);
    }

    #[test]
    fn design_record_validation() {
        let mut design = dmod_design(&[270.0, 90.0], &[1.0, 2.0]);
        assert!(design.validate().is_err());
        design.gammas_deg = vec![90.0, 270.0];
        assert!(design.validate().is_ok());
        design.alphas_deg.pop();
        assert!(design.validate().is_err());
    }
}
