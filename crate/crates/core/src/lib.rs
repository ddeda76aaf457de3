//! Switch-weight design and verification for current-steering DACs whose
//! dominant glitch mechanism is rise/fall asymmetry.
//!
//! The crate covers the full loop:
//!
//! - [`model`]: bases, switch patterns, codewords, transition models, and the
//!   per-transition glitch error (summed weight of toggled switches).
//! - [`reps`]: representation-set enumeration and the expected-glitch-power
//!   metrics (exact and Monte Carlo), normalized against thermometer coding.
//! - [`mappers`]: per-sample representation selection — optimal trellis
//!   search, greedy best-next (with an offline LUT), and memoryless tables
//!   from coordinate descent.
//! - [`optimizer`]: simulated annealing over valid weight vectors.
//! - [`sim`]: behavioral waveform synthesis with skewed on/off edges and
//!   SNDR/SFDR measurement.
//! - [`presets`]: binary / thermometer / segmented / optimized reference
//!   bases.

pub mod error;
pub mod mappers;
pub mod model;
pub mod optimizer;
pub mod presets;
pub mod reps;
pub mod sim;

pub use error::{Error, Result};
pub use mappers::{
    build_greedy_lut, canonical_table, greedy_map, mapping_cost_path, mapping_cost_table,
    memoryless_solve, viterbi_map, Mapper, MappingTable, TrellisPath,
};
pub use model::{
    decode, glitch_error, Basis, Codeword, RepDistribution, Representation, TransitionModel,
};
pub use optimizer::{anneal, neighbor, objective, AnnealConfig, ObjectiveMode, SearchResult};
pub use reps::{
    enumerate_reps, metric_complete, metric_monte_carlo, metric_overcomplete, rep_count_stats,
    thermometer_metric, EvalMethod, MetricReport, RepSet, RepStats,
};
pub use sim::{
    measure_sfdr, measure_sndr, run_experiment, synthesize, zoh_reference, EdgeModel, EdgeShape,
    SimResult, StimulusConfig, StimulusKind,
};
