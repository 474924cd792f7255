//! Deterministic simulator and analysis toolkit for weighted fast
//! probabilistic consensus (FPC).
//!
//! Nodes hold normalized weights ("mana") and repeatedly sample small
//! quorums to converge on a binary opinion against shared random
//! thresholds. This crate covers:
//!
//! - [`weights`]: weight vectors, Zipf generation, log-log fitting,
//!   weight splitting.
//! - [`scheme`]: voting schemes `(f, g)`, sampling probabilities, exact
//!   and Monte-Carlo voting power, fairness diagnostics.
//! - [`protocol`]: the per-node state machine with weighted quorum means
//!   and counter-based finalization.
//! - [`adversary`]: the cautious minority adversary and population
//!   assembly.
//! - [`complexity`]: analytic query-load predictions and telemetry
//!   comparison.
//! - [`sim`]: seeded experiment runs, agreement-failure metrics, sweeps
//!   and CSV rendering.
//!
//! Every run is reproducible bit-for-bit from its configuration and a
//! single 64-bit seed; see [`seed`] for the derivation scheme.

pub mod adversary;
pub mod complexity;
mod numeric;
pub mod protocol;
pub mod scheme;
pub mod seed;
pub mod sim;
pub mod weights;

pub use adversary::{adversary_opinion, build_population, AdversaryConfig, AdversaryStrategy, Population};
pub use complexity::{
    asymptotic_class, compare_telemetry, expected_queries, fair_gossip_threshold,
    QueryLoadProfile, TelemetryReport,
};
pub use protocol::{NodeState, ProtocolConfig, Role, ThresholdSequence};
pub use scheme::{
    fairness_gap, heavy_node_power, sampling_probs, voting_power_exact, voting_power_mc,
    VotingPowerReport, VotingScheme, WeightFn,
};
pub use sim::{
    agreement_failure, assign_initial_opinions, run_once, run_repetitions, sweep,
    ExperimentConfig, ExperimentResult, RunRecord, SweepAxis, SweepRow,
};
pub use weights::{fit_zipf, split_weight, zipf_weights, WeightVector, ZipfFit, ZipfParams};
