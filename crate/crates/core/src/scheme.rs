//! Voting schemes and voting power.
//!
//! A scheme is a pair of weight maps `(f, g)`: `f` shapes the probability
//! that a node is sampled into a quorum, `g` shapes how much a sampled
//! node's reply counts inside the quorum mean. The voting power of a node
//! is its expected share of influence on a quorum's weighted mean opinion,
//! taken over the multinomial quorum draw:
//!
//! ```text
//! v_i = sum over count vectors y with |y| = k of
//!       multinomial(k; y) * (y_i g_i / sum_n y_n g_n) * prod_j p_j^{y_j}
//! ```
//!
//! The module computes voting power two ways: exact enumeration over all
//! quorum compositions, and a seeded Monte-Carlo estimator. A scheme is
//! fair when splitting a node's weight never changes the combined power of
//! the parts; [`fairness_gap`] measures the deviation directly.

use rand::Rng;

use thiserror::Error;

use crate::numeric::{kahan_sum, Kahan};
use crate::seed::stream_rng;
use crate::weights::{split_weight, WeightError, WeightVector};

#[derive(Debug, Error)]
pub enum SchemeError {
    #[error("power exponent must be finite and >= 0, got {0}")]
    InvalidExponent(f64),
    #[error("all sampling weights map to zero; scheme is degenerate on this vector")]
    DegenerateSampling,
    #[error(
        "exact enumeration needs {terms} weighted terms, over the budget of {budget}; \
         use the Monte-Carlo estimator instead"
    )]
    EnumerationTooLarge { terms: f64, budget: u64 },
    #[error("quorum size {0} is too large for stable exact enumeration; use the Monte-Carlo estimator")]
    QuorumTooLarge(usize),
    #[error("quorum size must be at least 1")]
    ZeroQuorum,
    #[error("sample count must be at least 1")]
    ZeroSamples,
    #[error("opinion weight must be strictly positive, g({input}) = {output}")]
    NonPositiveOpinionWeight { input: f64, output: f64 },
    #[error(transparent)]
    Weights(#[from] WeightError),
}

/// A weight map from the supported family. `Power(a)` is `m -> m^a`;
/// construction canonicalizes `Power(0)` to `Constant` and `Power(1)` to
/// `Identity` so scheme equality is decidable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeightFn {
    /// `m -> 1`.
    Constant,
    /// `m -> m`.
    Identity,
    /// `m -> m^alpha` with `alpha > 0`, `alpha != 1`.
    Power(f64),
}

impl WeightFn {
    /// `m -> m^alpha`, canonicalized.
    pub fn power(alpha: f64) -> Result<Self, SchemeError> {
        if !alpha.is_finite() || alpha < 0.0 {
            return Err(SchemeError::InvalidExponent(alpha));
        }
        Ok(if alpha == 0.0 {
            WeightFn::Constant
        } else if alpha == 1.0 {
            WeightFn::Identity
        } else {
            WeightFn::Power(alpha)
        })
    }

    pub fn apply(&self, m: f64) -> f64 {
        match self {
            WeightFn::Constant => 1.0,
            WeightFn::Identity => m,
            WeightFn::Power(alpha) => m.powf(*alpha),
        }
    }
}

impl std::fmt::Display for WeightFn {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            WeightFn::Constant => write!(f, "const"),
            WeightFn::Identity => write!(f, "id"),
            WeightFn::Power(alpha) => write!(f, "pow:{alpha}"),
        }
    }
}

/// The pair `(f, g)`: `sampling` weights the quorum draw, `opinion`
/// weights replies inside the quorum mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VotingScheme {
    pub sampling: WeightFn,
    pub opinion: WeightFn,
}

impl VotingScheme {
    pub fn new(sampling: WeightFn, opinion: WeightFn) -> Self {
        Self { sampling, opinion }
    }

    /// The fair scheme: sample proportional to weight, count every reply
    /// equally. The only member of the family whose voting power equals
    /// the weight for every quorum size.
    pub fn fair() -> Self {
        Self::new(WeightFn::Identity, WeightFn::Constant)
    }
}

/// How voting power was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PowerMethod {
    ExactEnumeration,
    MonteCarlo { samples: u64 },
}

/// Per-node voting power, in node-identity order.
#[derive(Debug, Clone, PartialEq)]
pub struct VotingPowerReport {
    pub powers: Vec<f64>,
    /// Per-node standard errors; `None` for exact enumeration.
    pub std_err: Option<Vec<f64>>,
    pub method: PowerMethod,
}

impl VotingPowerReport {
    pub fn total(&self) -> f64 {
        kahan_sum(self.powers.iter().copied())
    }
}

/// Sampling probabilities `p_j = f(m_j) / sum_i f(m_i)` in node-identity
/// order. Zero-weight nodes get probability zero under `Identity` and
/// `Power`; the vector sums to 1.
pub fn sampling_probs(w: &WeightVector, scheme: &VotingScheme) -> Result<Vec<f64>, SchemeError> {
    let raw: Vec<f64> = (0..w.len())
        .map(|i| scheme.sampling.apply(w.node_weight(i)))
        .collect();
    let total = kahan_sum(raw.iter().copied());
    if total.is_nan() || total <= 0.0 {
        return Err(SchemeError::DegenerateSampling);
    }
    Ok(raw.into_iter().map(|v| v / total).collect())
}

/// Accumulation mode for the exact enumerator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Precision {
    /// Plain f64 accumulation.
    Double,
    /// Kahan-compensated accumulation; recovers the bits lost to long
    /// cancellation-free sums and is the default.
    #[default]
    Compensated,
}

/// Options for [`voting_power_exact_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactOptions {
    /// Cap on `N * C(k+N-1, N-1)`, the weighted term count of the
    /// enumeration. The exact path refuses to run over budget rather than
    /// degrade silently.
    pub term_budget: u64,
    pub precision: Precision,
}

impl Default for ExactOptions {
    fn default() -> Self {
        Self {
            term_budget: 10_000_000,
            precision: Precision::default(),
        }
    }
}

/// Quorum compositions of `k` over `n` slots can overflow f64 partial
/// products beyond this; the Monte-Carlo path has no such limit.
const MAX_EXACT_QUORUM: usize = 1000;

/// Exact voting power by full enumeration of quorum compositions.
///
/// Iterates the compositions of `k` into `N` parts in colex order; each
/// composition's probability mass is distributed over the sampled nodes in
/// proportion to `y_i g_i`. A composition whose sampled opinion mass is
/// zero contributes nothing.
pub fn voting_power_exact(
    w: &WeightVector,
    scheme: &VotingScheme,
    k: usize,
) -> Result<VotingPowerReport, SchemeError> {
    voting_power_exact_with(w, scheme, k, &ExactOptions::default())
}

pub fn voting_power_exact_with(
    w: &WeightVector,
    scheme: &VotingScheme,
    k: usize,
    opts: &ExactOptions,
) -> Result<VotingPowerReport, SchemeError> {
    if k == 0 {
        return Err(SchemeError::ZeroQuorum);
    }
    if k > MAX_EXACT_QUORUM {
        return Err(SchemeError::QuorumTooLarge(k));
    }
    let n = w.len();
    let terms = (n as f64) * composition_count(k, n);
    if !terms.is_finite() || terms > opts.term_budget as f64 {
        return Err(SchemeError::EnumerationTooLarge {
            terms,
            budget: opts.term_budget,
        });
    }

    let probs = sampling_probs(w, scheme)?;
    let g: Vec<f64> = (0..n)
        .map(|i| scheme.opinion.apply(w.node_weight(i)))
        .collect();

    let mut acc = vec![Kahan::default(); n];
    let compensated = opts.precision == Precision::Compensated;

    // Colex enumeration: start at (k, 0, .., 0); move one unit from the
    // first nonzero slot to its successor, dumping the remainder into slot
    // 0. Ends once everything sits in the last slot.
    let mut y = vec![0usize; n];
    y[0] = k;
    loop {
        let mass = composition_mass(&y, k, &probs);
        if mass > 0.0 {
            let mut denom = 0.0;
            for (i, &count) in y.iter().enumerate() {
                if count > 0 {
                    denom += count as f64 * g[i];
                }
            }
            if denom > 0.0 {
                for (i, &count) in y.iter().enumerate() {
                    if count > 0 {
                        let share = mass * (count as f64 * g[i]) / denom;
                        if compensated {
                            acc[i].add(share);
                        } else {
                            acc[i].sum += share;
                        }
                    }
                }
            }
        }

        if y[n - 1] == k {
            break;
        }
        let first = y.iter().position(|&c| c > 0).expect("composition of k >= 1");
        let moved = y[first];
        y[first] = 0;
        y[0] = moved - 1;
        y[first + 1] += 1;
    }

    Ok(VotingPowerReport {
        powers: acc.into_iter().map(|a| a.sum).collect(),
        std_err: None,
        method: PowerMethod::ExactEnumeration,
    })
}

/// `C(k+n-1, n-1)` in f64; saturates to infinity on overflow.
fn composition_count(k: usize, n: usize) -> f64 {
    let mut c = 1.0f64;
    for i in 1..n {
        c *= (k + i) as f64 / i as f64;
        if !c.is_finite() {
            break;
        }
    }
    c
}

/// `multinomial(k; y) * prod_j p_j^{y_j}` for one composition.
///
/// The multinomial coefficient is folded into the probability factors level
/// by level (each slot contributes `C(remaining, y_j) * p_j^{y_j}`), which
/// keeps partial products bounded for quorums up to [`MAX_EXACT_QUORUM`].
fn composition_mass(y: &[usize], k: usize, probs: &[f64]) -> f64 {
    let mut mass = 1.0f64;
    let mut remaining = k;
    for (&count, &p) in y.iter().zip(probs) {
        if count == 0 {
            continue;
        }
        if p == 0.0 {
            return 0.0;
        }
        for c in 1..=count {
            mass *= (remaining - c + 1) as f64 / c as f64 * p;
        }
        remaining -= count;
        if mass == 0.0 {
            return 0.0;
        }
    }
    mass
}

/// Cumulative-distribution sampler for quorum draws with replacement.
#[derive(Debug, Clone)]
pub struct CumulativeSampler {
    cumulative: Vec<f64>,
}

impl CumulativeSampler {
    /// `probs` must be non-negative with positive total; it is not
    /// required to be exactly normalized.
    pub fn new(probs: &[f64]) -> Result<Self, SchemeError> {
        let mut cumulative = Vec::with_capacity(probs.len());
        let mut run = 0.0;
        for &p in probs {
            run += p;
            cumulative.push(run);
        }
        if run.is_nan() || run <= 0.0 {
            return Err(SchemeError::DegenerateSampling);
        }
        for c in &mut cumulative {
            *c /= run;
        }
        // Pin the top of the scale so every u in [0,1) lands in a bucket.
        let len = cumulative.len();
        cumulative[len - 1] = 1.0;
        Ok(Self { cumulative })
    }

    /// One draw. Index `i` owns the half-open interval
    /// `[cumulative[i-1], cumulative[i])`, so zero-probability entries are
    /// never selected.
    #[inline]
    pub fn draw<R: Rng>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        self.cumulative.partition_point(|&c| c <= u)
    }
}

/// Monte-Carlo voting power: draw `samples` quorums of size `k` with
/// replacement and average each node's influence share. Deterministic in
/// `(seed, inputs)`; the report carries per-node standard errors.
pub fn voting_power_mc(
    w: &WeightVector,
    scheme: &VotingScheme,
    k: usize,
    samples: u64,
    seed: u64,
) -> Result<VotingPowerReport, SchemeError> {
    if k == 0 {
        return Err(SchemeError::ZeroQuorum);
    }
    if samples == 0 {
        return Err(SchemeError::ZeroSamples);
    }
    let n = w.len();
    let probs = sampling_probs(w, scheme)?;
    let sampler = CumulativeSampler::new(&probs)?;
    let g: Vec<f64> = (0..n)
        .map(|i| scheme.opinion.apply(w.node_weight(i)))
        .collect();

    let mut rng = stream_rng(seed, 0);
    let mut sum = vec![0.0f64; n];
    let mut sum_sq = vec![0.0f64; n];
    let mut counts = vec![0usize; n];
    let mut touched = Vec::with_capacity(k);

    for _ in 0..samples {
        touched.clear();
        for _ in 0..k {
            let j = sampler.draw(&mut rng);
            if counts[j] == 0 {
                touched.push(j);
            }
            counts[j] += 1;
        }
        let mut denom = 0.0;
        for &j in &touched {
            denom += counts[j] as f64 * g[j];
        }
        if denom > 0.0 {
            for &j in &touched {
                let credit = counts[j] as f64 * g[j] / denom;
                sum[j] += credit;
                sum_sq[j] += credit * credit;
            }
        }
        for &j in &touched {
            counts[j] = 0;
        }
    }

    let nf = samples as f64;
    let powers: Vec<f64> = sum.iter().map(|s| s / nf).collect();
    let std_err: Vec<f64> = powers
        .iter()
        .zip(&sum_sq)
        .map(|(&mean, &sq)| {
            if samples < 2 {
                0.0
            } else {
                let var = ((sq - nf * mean * mean) / (nf - 1.0)).max(0.0);
                (var / nf).sqrt()
            }
        })
        .collect();

    Ok(VotingPowerReport {
        powers,
        std_err: Some(std_err),
        method: PowerMethod::MonteCarlo { samples },
    })
}

/// Power retained or lost when node `node` splits with ratio `x`:
/// `v_node(original) - (v_part1 + v_part2)` on the split vector, both sides
/// by exact enumeration. Zero for a fair scheme; positive means splitting
/// strictly loses power, negative means merging strictly loses power.
pub fn fairness_gap(
    w: &WeightVector,
    scheme: &VotingScheme,
    k: usize,
    node: usize,
    x: f64,
) -> Result<f64, SchemeError> {
    let original = voting_power_exact(w, scheme, k)?;
    let split = split_weight(w, node, x)?;
    let parts = voting_power_exact(&split, scheme, k)?;
    // split_weight places the two parts at identity indices node, node + 1.
    Ok(original.powers[node] - (parts.powers[node] + parts.powers[node + 1]))
}

/// Voting power of the heavier node in a fixed two-node network with
/// weights (2/3, 1/3) when quorums are sampled uniformly, with its
/// large-quorum limit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerCurvePoint {
    /// Exact power at quorum size `k`.
    pub value: f64,
    /// `g(2/3) / (g(2/3) + g(1/3))`, the limit as `k` grows.
    pub limit: f64,
}

/// Exact voting power of a node holding 2/3 of the weight against a 1/3
/// peer under uniform sampling (constant `f`), for quorum size `k`.
///
/// The number of heavy-node appearances in a quorum is Binomial(k, 1/2);
/// the power is the expected review share
/// `E[X g(2/3) / (X g(2/3) + (k - X) g(1/3))]`. For any `g` that weights
/// 2/3 strictly above 1/3 the value sits strictly below the limit and
/// moves with `k`, so no opinion weighting can rescue uniform sampling
/// into fairness for every quorum size.
pub fn heavy_node_power(g: &WeightFn, k: usize) -> Result<PowerCurvePoint, SchemeError> {
    if k == 0 {
        return Err(SchemeError::ZeroQuorum);
    }
    // The pmf recurrence starts at 2^-k, which underflows past this.
    if k > MAX_EXACT_QUORUM {
        return Err(SchemeError::QuorumTooLarge(k));
    }
    let g_heavy = g.apply(2.0 / 3.0);
    let g_light = g.apply(1.0 / 3.0);
    for (input, output) in [(2.0 / 3.0, g_heavy), (1.0 / 3.0, g_light)] {
        if output.is_nan() || output <= 0.0 {
            return Err(SchemeError::NonPositiveOpinionWeight { input, output });
        }
    }

    // Binomial(k, 1/2) mass, built by the pmf recurrence.
    let mut pmf = 0.5f64.powi(k as i32);
    let mut value = Kahan::default();
    for x in 0..=k {
        if x > 0 {
            pmf *= (k - x + 1) as f64 / x as f64;
            let share = x as f64 * g_heavy / (x as f64 * g_heavy + (k - x) as f64 * g_light);
            value.add(pmf * share);
        }
        // x = 0 contributes nothing: the heavy node is absent.
    }

    Ok(PowerCurvePoint {
        value: value.sum,
        limit: g_heavy / (g_heavy + g_light),
    })
}
