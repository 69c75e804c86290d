//! Composite RF pulse synthesis, compilation, and Bloch-sphere simulation
//! robust to RF-field amplitude dispersion.
//!
//! The library covers the full pipeline: choose basis frequencies
//! ([`search`]), solve for amplitudes ([`synth`]), compile the design into a
//! pulse program ([`pulse`]), parse or print its text form ([`notation`]),
//! simulate it over a dispersion ensemble ([`sim`]), and analyze
//! phase-modulated first-order constructions ([`modulation`]). All rotation
//! algebra is exact ([`so3`]); a corpus of published reference designs lives
//! in [`benchmarks`].

pub mod benchmarks;
pub mod modulation;
pub mod notation;
pub mod pulse;
pub mod quad;
pub mod search;
pub mod sim;
pub mod so3;
pub mod synth;

pub use pulse::{
    compile, compile_dmod, compile_fsm, Block, DesignRecord, Event, FlipConvention, Method,
    PulseProgram, RfSegment, Selection, ZShift,
};
pub use search::{design, gradient_search, greedy_search, heuristic_frequencies, SearchOptions};
pub use sim::{simulate_program, EnsembleGrid, ErrorReport, SimOptions, StateProfile, Target};
pub use so3::{geodesic_distance, Rotation};
pub use synth::{gram_solve, BasisSpec, EffectiveProfile, TargetProfile};
