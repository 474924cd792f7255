//! Experiment orchestration: population construction, initial-opinion
//! assignment, the synchronous round loop, agreement-failure metrics,
//! parameter sweeps and query telemetry.
//!
//! Everything is deterministic in `(config, seed)`. Repetition `r` of a
//! configuration runs under `derive_seed(base, r)`; sweep point `a` (in
//! ascending axis order) first derives `derive_seed(base, a)` as its own
//! base. Within one run, stream 0 carries the shared thresholds and stream
//! `1 + i` carries node `i`'s query randomness. Repetitions execute in
//! parallel; aggregation is an order-independent fold.

use rand::Rng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::adversary::{adversary_opinion, build_population, AdversaryConfig, AdversaryError};
use crate::protocol::{
    eta, node_stream, update_opinion, NodeState, ProtocolConfig, ProtocolError,
    ThresholdSequence,
};
use crate::scheme::{sampling_probs, CumulativeSampler, SchemeError, VotingScheme};
use crate::seed::{derive_seed, stream_rng};
use crate::weights::{zipf_weights, WeightError, WeightVector};

/// Fraction of honest nodes that must disagree for a run to count as an
/// agreement failure.
pub const DEFAULT_FAILURE_THRESHOLD: f64 = 0.01;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("initial average opinion p0 must lie in [0,1], got {0}")]
    InvalidInitialOpinion(f64),
    #[error("reply drop probability must lie in [0,1), got {0}")]
    InvalidReplyDrop(f64),
    #[error("at least one repetition is required")]
    ZeroRepetitions,
    #[error("adversary takes all {0} identities; no honest nodes remain")]
    NoHonestNodes(usize),
    #[error("sweep values must be nonempty")]
    EmptySweep,
    #[error("quorum axis value {0} is not a positive integer")]
    NonIntegerQuorum(f64),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Scheme(#[from] SchemeError),
    #[error(transparent)]
    Adversary(#[from] AdversaryError),
    #[error(transparent)]
    Weights(#[from] WeightError),
}

/// Full description of one experiment point.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub protocol: ProtocolConfig,
    pub adversary: AdversaryConfig,
    /// Initial average opinion target: the heaviest honest nodes holding
    /// together just over `p0` of the honest mass start at opinion 1.
    pub p0: f64,
    /// Zipf exponent of the honest weight distribution.
    pub zipf_s: f64,
    pub repetitions: u32,
    /// Probability that any single queried reply goes missing; replies
    /// that go missing are excluded from the quorum mean entirely.
    pub reply_drop: f64,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        self.protocol.validate()?;
        if !self.p0.is_finite() || !(0.0..=1.0).contains(&self.p0) {
            return Err(SimError::InvalidInitialOpinion(self.p0));
        }
        if !self.reply_drop.is_finite() || !(0.0..1.0).contains(&self.reply_drop) {
            return Err(SimError::InvalidReplyDrop(self.reply_drop));
        }
        if self.repetitions == 0 {
            return Err(SimError::ZeroRepetitions);
        }
        if !self.adversary.q.is_finite() || !(0.0..1.0).contains(&self.adversary.q) {
            return Err(AdversaryError::InvalidFraction(self.adversary.q).into());
        }
        if !self.zipf_s.is_finite() || self.zipf_s < 0.0 {
            return Err(WeightError::InvalidExponent(self.zipf_s).into());
        }
        if self.adversary.identity_count(self.protocol.n) >= self.protocol.n {
            return Err(SimError::NoHonestNodes(self.protocol.n));
        }
        Ok(())
    }
}

/// Outcome of a single repetition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunRecord {
    /// At least [`DEFAULT_FAILURE_THRESHOLD`] of the honest nodes ended on
    /// the minority opinion.
    pub agreement_failure: bool,
    /// Every honest node finalized before the round cap.
    pub all_finalized: bool,
    /// Rounds executed; at most `max_it`.
    pub rounds: u32,
    /// Queries answered per node (identity order), over the whole run.
    pub queries_received: Vec<u64>,
    /// Total quorum draws issued over the whole run.
    pub query_draws: u64,
}

/// Give opinion 1 to the heaviest honest nodes until their cumulative
/// share of the honest mass first strictly exceeds `p0`; everyone else
/// starts at 0. `p0 >= 1` assigns 1 to all nodes; `p0 = 0` to the single
/// heaviest only.
pub fn assign_initial_opinions(w: &WeightVector, p0: f64) -> Vec<bool> {
    let n = w.len();
    if p0 >= 1.0 {
        return vec![true; n];
    }
    let mut opinions = vec![false; n];
    let mut cumulative = 0.0;
    for rank in 0..n {
        opinions[w.node_of_rank(rank)] = true;
        cumulative += w.ranked()[rank];
        if cumulative > p0 {
            break;
        }
    }
    opinions
}

/// Whether the minority camp holds at least `threshold` of the honest
/// node count (heads, not mass).
pub fn agreement_failure(final_honest_opinions: &[bool], threshold: f64) -> bool {
    if final_honest_opinions.is_empty() {
        return false;
    }
    let ones = final_honest_opinions.iter().filter(|&&s| s).count();
    let minority = ones.min(final_honest_opinions.len() - ones);
    minority as f64 / final_honest_opinions.len() as f64 >= threshold
}

/// Execute one repetition under `run_seed`.
///
/// The population is `n` nodes: Zipf-weighted honest nodes plus the
/// adversary's identities. Rounds are synchronous: honest replies are the
/// opinions entering the round, adversarial replies are the mana-weighted
/// minority of the honest opinions entering the round. Every honest node
/// issues `k` queries per round until the run halts, finalized ones
/// included (they keep participating, their opinion just never moves), so
/// each executed round draws exactly `k * honest_n` quorum slots.
/// Adversarial identities answer queries but issue none. The run ends
/// when all honest nodes have finalized or after `max_it` rounds.
pub fn run_once(cfg: &ExperimentConfig, run_seed: u64) -> Result<RunRecord, SimError> {
    cfg.validate()?;
    let proto = &cfg.protocol;
    let total = proto.n;
    let adversaries = cfg.adversary.identity_count(total);
    let honest_n = total - adversaries;

    let honest = zipf_weights(cfg.zipf_s, honest_n)?;
    let population = build_population(&honest, &cfg.adversary, total)?;
    let probs = sampling_probs(&population.weights, &proto.scheme)?;
    let sampler = CumulativeSampler::new(&probs)?;
    let opinion_weight: Vec<f64> = (0..total)
        .map(|i| proto.scheme.opinion.apply(population.weights.node_weight(i)))
        .collect();
    let honest_mass: Vec<f64> = (0..honest_n)
        .map(|i| population.weights.node_weight(i))
        .collect();

    let mut states: Vec<NodeState> = assign_initial_opinions(&honest, cfg.p0)
        .into_iter()
        .map(NodeState::honest)
        .collect();
    states.extend((honest_n..total).map(|_| NodeState::adversarial()));

    let thresholds = ThresholdSequence::generate(run_seed, proto.beta, proto.max_it);
    let mut rngs: Vec<ChaCha12Rng> = (0..honest_n)
        .map(|i| stream_rng(run_seed, node_stream(i)))
        .collect();

    let mut queries_received = vec![0u64; total];
    let mut query_draws = 0u64;
    let mut snapshot = vec![false; total];
    let mut reply_opinions: Vec<bool> = Vec::with_capacity(proto.k);
    let mut reply_weights: Vec<f64> = Vec::with_capacity(proto.k);

    let mut rounds = 0u32;
    let mut all_finalized = false;
    for round in 1..=proto.max_it {
        rounds = round;
        for (slot, state) in snapshot.iter_mut().zip(&states) {
            *slot = state.opinion;
        }
        let adv_reply = adversary_opinion(
            (0..honest_n).map(|i| (snapshot[i], honest_mass[i])),
        );
        let u_t = if round >= 2 {
            thresholds.for_round(round)
        } else {
            f64::NAN
        };

        for i in 0..honest_n {
            let finalized = states[i].finalized;
            let rng = &mut rngs[i];
            reply_opinions.clear();
            reply_weights.clear();
            for _ in 0..proto.k {
                let j = sampler.draw(rng);
                queries_received[j] += 1;
                query_draws += 1;
                if finalized {
                    continue;
                }
                if cfg.reply_drop > 0.0 && rng.random::<f64>() < cfg.reply_drop {
                    continue;
                }
                let opinion = if population.is_honest(j) {
                    snapshot[j]
                } else {
                    adv_reply
                };
                reply_opinions.push(opinion);
                reply_weights.push(opinion_weight[j]);
            }
            if finalized {
                continue;
            }
            if let Some(mean) = eta(&reply_opinions, &reply_weights) {
                states[i] = update_opinion(&states[i], mean, round, proto.tau, u_t, proto.l);
            }
        }

        if states[..honest_n].iter().all(|s| s.finalized) {
            all_finalized = true;
            break;
        }
    }

    let final_honest: Vec<bool> = states[..honest_n].iter().map(|s| s.opinion).collect();
    Ok(RunRecord {
        agreement_failure: agreement_failure(&final_honest, DEFAULT_FAILURE_THRESHOLD),
        all_finalized,
        rounds,
        queries_received,
        query_draws,
    })
}

/// Aggregated outcome of a batch of repetitions.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub records: Vec<RunRecord>,
    pub failures: u32,
    /// `failures / repetitions`, exactly.
    pub failure_rate: f64,
    /// 95% Wilson score interval on the failure rate.
    pub ci_low: f64,
    pub ci_high: f64,
    pub mean_rounds: f64,
}

/// Fold repetition records into an [`ExperimentResult`]. Counting and
/// averaging are order-independent, so the aggregate does not depend on
/// the order in which repetitions ran.
pub fn aggregate(records: Vec<RunRecord>) -> ExperimentResult {
    let trials = records.len() as u32;
    let failures = records.iter().filter(|r| r.agreement_failure).count() as u32;
    let total_rounds: u64 = records.iter().map(|r| u64::from(r.rounds)).sum();
    let failure_rate = if trials == 0 {
        0.0
    } else {
        f64::from(failures) / f64::from(trials)
    };
    let (ci_low, ci_high) = wilson_interval(failures, trials);
    let mean_rounds = if trials == 0 {
        0.0
    } else {
        total_rounds as f64 / f64::from(trials)
    };
    ExperimentResult {
        records,
        failures,
        failure_rate,
        ci_low,
        ci_high,
        mean_rounds,
    }
}

/// 95% Wilson score interval for a binomial proportion.
pub fn wilson_interval(successes: u32, trials: u32) -> (f64, f64) {
    const Z: f64 = 1.959963984540054;
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = f64::from(trials);
    let p = f64::from(successes) / n;
    let z2 = Z * Z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = Z * ((p * (1.0 - p) + z2 / (4.0 * n)) / n).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Run all repetitions of `cfg` in parallel. Repetition `r` uses seed
/// `derive_seed(cfg.protocol.seed, r)`.
pub fn run_repetitions(cfg: &ExperimentConfig) -> Result<ExperimentResult, SimError> {
    cfg.validate()?;
    let records: Result<Vec<RunRecord>, SimError> = (0..cfg.repetitions)
        .into_par_iter()
        .map(|r| run_once(cfg, derive_seed(cfg.protocol.seed, u64::from(r))))
        .collect();
    Ok(aggregate(records?))
}

/// Which parameter a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    /// Adversary weight fraction `q`.
    AdversaryFraction,
    /// Quorum size `k`.
    QuorumSize,
    /// Zipf exponent `s` of the honest weights.
    ZipfExponent,
}

impl SweepAxis {
    pub fn label(&self) -> &'static str {
        match self {
            SweepAxis::AdversaryFraction => "q",
            SweepAxis::QuorumSize => "k",
            SweepAxis::ZipfExponent => "s",
        }
    }
}

/// One row of a sweep table.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub axis_value: f64,
    pub repetitions: u32,
    pub failures: u32,
    pub failure_rate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub mean_rounds: f64,
}

fn apply_axis(cfg: &mut ExperimentConfig, axis: SweepAxis, value: f64) -> Result<(), SimError> {
    match axis {
        SweepAxis::AdversaryFraction => {
            if !value.is_finite() || !(0.0..1.0).contains(&value) {
                return Err(AdversaryError::InvalidFraction(value).into());
            }
            cfg.adversary.q = value;
        }
        SweepAxis::QuorumSize => {
            if !value.is_finite() || value < 1.0 || value.fract() != 0.0 {
                return Err(SimError::NonIntegerQuorum(value));
            }
            cfg.protocol.k = value as usize;
        }
        SweepAxis::ZipfExponent => {
            if !value.is_finite() || value < 0.0 {
                return Err(WeightError::InvalidExponent(value).into());
            }
            cfg.zipf_s = value;
        }
    }
    Ok(())
}

/// Sweep one axis over `values` (sorted ascending in the output). Point
/// `a` runs its repetitions under base seed `derive_seed(cfg.protocol.seed, a)`.
pub fn sweep(
    cfg: &ExperimentConfig,
    axis: SweepAxis,
    values: &[f64],
) -> Result<Vec<SweepRow>, SimError> {
    if values.is_empty() {
        return Err(SimError::EmptySweep);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("axis values must be comparable"));

    let mut rows = Vec::with_capacity(sorted.len());
    for (index, &value) in sorted.iter().enumerate() {
        let mut point = cfg.clone();
        apply_axis(&mut point, axis, value)?;
        point.protocol.seed = derive_seed(cfg.protocol.seed, index as u64);
        let result = run_repetitions(&point)?;
        rows.push(SweepRow {
            axis_value: value,
            repetitions: point.repetitions,
            failures: result.failures,
            failure_rate: result.failure_rate,
            ci_low: result.ci_low,
            ci_high: result.ci_high,
            mean_rounds: result.mean_rounds,
        });
    }
    Ok(rows)
}

/// Render a sweep table as CSV (schema: axis_value, repetitions,
/// failures, failure_rate, ci_low, ci_high, mean_rounds).
pub fn render_sweep_csv(rows: &[SweepRow]) -> String {
    let mut out =
        String::from("axis_value,repetitions,failures,failure_rate,ci_low,ci_high,mean_rounds\n");
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            row.axis_value,
            row.repetitions,
            row.failures,
            row.failure_rate,
            row.ci_low,
            row.ci_high,
            row.mean_rounds
        ));
    }
    out
}

/// Pure query-layer telemetry: every node issues `k` queries per round for
/// `rounds` rounds against the scheme's sampling distribution; returns
/// queries received per node (identity order). Node `i` draws from stream
/// `1 + i` of `seed`, the same layout as a consensus run.
pub fn collect_query_telemetry(
    w: &WeightVector,
    scheme: &VotingScheme,
    k: usize,
    rounds: u64,
    seed: u64,
) -> Result<Vec<u64>, SimError> {
    let probs = sampling_probs(w, scheme)?;
    let sampler = CumulativeSampler::new(&probs)?;
    let mut rngs: Vec<ChaCha12Rng> = (0..w.len())
        .map(|i| stream_rng(seed, node_stream(i)))
        .collect();
    let mut received = vec![0u64; w.len()];
    for _ in 0..rounds {
        for rng in rngs.iter_mut() {
            for _ in 0..k {
                received[sampler.draw(rng)] += 1;
            }
        }
    }
    Ok(received)
}
