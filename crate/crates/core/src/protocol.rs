//! The voting state machine: quorum means, threshold updates and
//! counter-based local termination.
//!
//! Each round a node samples `k` peers with replacement, forms the
//! opinion-weighted mean `eta` of the replies, and compares it against a
//! threshold: the fixed `tau` in round 1, then the network-wide random
//! thresholds `U_t`, uniform on `[beta, 1-beta]` and shared by every node.
//! A node finalizes once its opinion has survived `l` consecutive rounds
//! unchanged; a run is cut off after `max_it` rounds regardless.

use rand::Rng;
use thiserror::Error;

use crate::scheme::VotingScheme;
use crate::seed::stream_rng;

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("node count must be at least 1")]
    NoNodes,
    #[error("quorum size must be at least 1")]
    ZeroQuorum,
    #[error("tau must lie in [0,1], got {0}")]
    InvalidTau(f64),
    #[error("beta must lie in [0, 1/2], got {0}")]
    InvalidBeta(f64),
    #[error("finalization streak l must satisfy 1 <= l <= max_it, got l={l}, max_it={max_it}")]
    InvalidStreak { l: u32, max_it: u32 },
    #[error("majority reduction check requires tau = beta = 1/2, got tau={tau}, beta={beta}")]
    NotMajorityConfig { tau: f64, beta: f64 },
}

/// Whether a node follows the protocol or an adversary strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Honest,
    Adversarial,
}

/// Per-node protocol state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeState {
    /// Current binary opinion; `true` is opinion 1.
    pub opinion: bool,
    /// Consecutive threshold rounds without an opinion change.
    pub counter: u32,
    /// Set once `counter` reaches the streak target; the opinion never
    /// changes afterwards.
    pub finalized: bool,
    pub role: Role,
}

impl NodeState {
    pub fn honest(opinion: bool) -> Self {
        Self {
            opinion,
            counter: 0,
            finalized: false,
            role: Role::Honest,
        }
    }

    pub fn adversarial() -> Self {
        Self {
            opinion: false,
            counter: 0,
            finalized: false,
            role: Role::Adversarial,
        }
    }
}

/// Protocol and experiment parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolConfig {
    /// Total node count, honest plus adversarial.
    pub n: usize,
    /// Quorum size: peers sampled (with replacement) per query round.
    pub k: usize,
    /// First-round threshold.
    pub tau: f64,
    /// Random-threshold bound; `U_t` is uniform on `[beta, 1-beta]`.
    pub beta: f64,
    /// Consecutive stable rounds required to finalize.
    pub l: u32,
    /// Hard cap on rounds.
    pub max_it: u32,
    pub scheme: VotingScheme,
    /// Base seed; all randomness in a run derives from it.
    pub seed: u64,
}

impl ProtocolConfig {
    pub fn validate(&self) -> Result<(), ProtocolError> {
        if self.n == 0 {
            return Err(ProtocolError::NoNodes);
        }
        if self.k == 0 {
            return Err(ProtocolError::ZeroQuorum);
        }
        if !(0.0..=1.0).contains(&self.tau) || !self.tau.is_finite() {
            return Err(ProtocolError::InvalidTau(self.tau));
        }
        if !(0.0..=0.5).contains(&self.beta) || !self.beta.is_finite() {
            return Err(ProtocolError::InvalidBeta(self.beta));
        }
        if self.l == 0 || self.l > self.max_it {
            return Err(ProtocolError::InvalidStreak {
                l: self.l,
                max_it: self.max_it,
            });
        }
        Ok(())
    }
}

/// Stream index of the shared threshold sequence under a run seed.
pub const THRESHOLD_STREAM: u64 = 0;

/// Stream index of node `i`'s query randomness under a run seed.
pub fn node_stream(node: usize) -> u64 {
    1 + node as u64
}

/// The common random thresholds `U_1, U_2, ..` of one run.
///
/// All nodes share the sequence (it stands in for a network-wide agreed
/// random beacon), and it is fully determined by the run seed: the `t`-th
/// value is drawn from the run's threshold stream and mapped to
/// `[beta, 1-beta]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdSequence {
    values: Vec<f64>,
}

impl ThresholdSequence {
    /// Generate `U_1 ..= U_rounds` for a run.
    pub fn generate(run_seed: u64, beta: f64, rounds: u32) -> Self {
        let mut rng = stream_rng(run_seed, THRESHOLD_STREAM);
        let span = 1.0 - 2.0 * beta;
        let values = (0..rounds)
            .map(|_| beta + span * rng.random::<f64>())
            .collect();
        Self { values }
    }

    /// `U_t`, 1-based.
    pub fn value(&self, t: u32) -> f64 {
        self.values[(t - 1) as usize]
    }

    /// The threshold applied when updating into round `round` (>= 2),
    /// which is `U_{round-1}`.
    pub fn for_round(&self, round: u32) -> f64 {
        debug_assert!(round >= 2);
        self.value(round - 1)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Opinion-weighted mean of the received replies:
/// `sum g_j s_j / sum g_j`. Replies whose opinion weight is zero carry no
/// signal; `None` means nothing usable was received and the caller keeps
/// its previous opinion without touching the counter.
pub fn eta(opinions: &[bool], g_values: &[f64]) -> Option<f64> {
    debug_assert_eq!(opinions.len(), g_values.len());
    let mut num = 0.0;
    let mut denom = 0.0;
    for (&opinion, &g) in opinions.iter().zip(g_values) {
        denom += g;
        if opinion {
            num += g;
        }
    }
    if denom > 0.0 {
        Some(num / denom)
    } else {
        None
    }
}

/// One opinion update.
///
/// Round 1 compares against `tau` inclusively; later rounds flip to 1
/// above `u_t`, to 0 below it, and keep the previous opinion on an exact
/// tie. The stability counter only runs in the random-threshold regime:
/// it resets on a change, increments otherwise, and the node finalizes
/// once it reaches `l`.
pub fn update_opinion(
    state: &NodeState,
    eta: f64,
    round: u32,
    tau: f64,
    u_t: f64,
    l: u32,
) -> NodeState {
    debug_assert!(!state.finalized, "finalized nodes do not update");
    debug_assert!(round >= 1);
    let prev = state.opinion;
    let (opinion, counter) = if round == 1 {
        (eta >= tau, state.counter)
    } else {
        let opinion = if eta > u_t {
            true
        } else if eta < u_t {
            false
        } else {
            prev
        };
        (opinion, if opinion == prev { state.counter + 1 } else { 0 })
    };
    NodeState {
        opinion,
        counter,
        finalized: counter >= l,
        role: state.role,
    }
}

/// Draw a quorum of `k` peers with replacement. Exposed as a free helper
/// over [`crate::scheme::CumulativeSampler`] for callers that hold raw
/// probabilities.
pub fn sample_quorum<R: Rng>(
    rng: &mut R,
    sampler: &crate::scheme::CumulativeSampler,
    k: usize,
    out: &mut Vec<usize>,
) {
    out.clear();
    out.extend((0..k).map(|_| sampler.draw(rng)));
}

/// Self-test that the update rule degenerates to standard majority voting
/// when `tau = beta = 1/2` (so `U_t` is pinned at 1/2): above half flips
/// to 1, below half flips to 0, an exact tie keeps the previous opinion.
///
/// Checks the exhaustive grid `eta in {0, 0.01, .., 1}` against both
/// previous opinions, plus `random_batch` seeded random pairs.
pub fn majority_reduction_check(
    config: &ProtocolConfig,
    random_batch: usize,
) -> Result<bool, ProtocolError> {
    config.validate()?;
    if config.tau != 0.5 || config.beta != 0.5 {
        return Err(ProtocolError::NotMajorityConfig {
            tau: config.tau,
            beta: config.beta,
        });
    }
    let agrees = |eta_value: f64, prev: bool| -> bool {
        let state = NodeState::honest(prev);
        let updated = update_opinion(&state, eta_value, 2, config.tau, 0.5, config.l);
        let majority = if eta_value > 0.5 {
            true
        } else if eta_value < 0.5 {
            false
        } else {
            prev
        };
        updated.opinion == majority
    };

    for i in 0..=100u32 {
        let eta_value = f64::from(i) / 100.0;
        for prev in [false, true] {
            if !agrees(eta_value, prev) {
                return Ok(false);
            }
        }
    }
    let mut rng = stream_rng(config.seed, 0);
    for _ in 0..random_batch {
        let eta_value: f64 = rng.random();
        let prev = rng.random::<bool>();
        if !agrees(eta_value, prev) {
            return Ok(false);
        }
    }
    Ok(true)
}
