//! Message-complexity analysis: expected per-rank query load under Zipf
//! weights, its growth classes, the fair gossip threshold, and comparison
//! of analytic predictions against simulated query telemetry.

use thiserror::Error;

use crate::numeric::kahan_sum;
use crate::weights::WeightError;

#[derive(Debug, Error)]
pub enum ComplexityError {
    #[error("rank {rank} out of range 1..={n}")]
    RankOutOfRange { rank: usize, n: usize },
    #[error("exponent must be finite and >= 0, got {0}")]
    InvalidExponent(f64),
    #[error("node count must be at least 1")]
    NoNodes,
    #[error("observed counts cover {observed} ranks, expected {expected}")]
    DimensionMismatch { observed: usize, expected: usize },
    #[error("round count must be at least 1")]
    NoRounds,
    #[error(transparent)]
    Weights(#[from] WeightError),
}

/// Expected queries answered per round by the node of 1-based `rank` in a
/// population of `n` nodes with Zipf(`s`) weights and quorum size `k`:
/// `k * n * rank^(-s) / sum_{j=1..n} j^(-s)`. Summed over ranks this is
/// exactly `k * n`, the number of queries issued per round.
pub fn expected_queries(n: usize, s: f64, rank: usize, k: usize) -> Result<f64, ComplexityError> {
    if n == 0 {
        return Err(ComplexityError::NoNodes);
    }
    if !s.is_finite() || s < 0.0 {
        return Err(ComplexityError::InvalidExponent(s));
    }
    if rank == 0 || rank > n {
        return Err(ComplexityError::RankOutOfRange { rank, n });
    }
    let total = kahan_sum((1..=n).map(|j| (j as f64).powf(-s)));
    Ok(k as f64 * n as f64 * (rank as f64).powf(-s) / total)
}

/// Per-rank expected query load for one `(n, s, k)` configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryLoadProfile {
    pub n: usize,
    pub s: f64,
    pub k: usize,
    /// Expected queries per round, indexed by 0-based rank.
    expected: Vec<f64>,
}

impl QueryLoadProfile {
    pub fn new(n: usize, s: f64, k: usize) -> Result<Self, ComplexityError> {
        if n == 0 {
            return Err(ComplexityError::NoNodes);
        }
        if !s.is_finite() || s < 0.0 {
            return Err(ComplexityError::InvalidExponent(s));
        }
        let total = kahan_sum((1..=n).map(|j| (j as f64).powf(-s)));
        let scale = k as f64 * n as f64 / total;
        let expected = (1..=n).map(|r| scale * (r as f64).powf(-s)).collect();
        Ok(Self { n, s, k, expected })
    }

    /// Expected queries per round for 1-based `rank`.
    pub fn expected(&self, rank: usize) -> f64 {
        self.expected[rank - 1]
    }

    pub fn per_rank(&self) -> &[f64] {
        &self.expected
    }

    /// Total expected queries per round; `k * n` up to rounding.
    pub fn total(&self) -> f64 {
        kahan_sum(self.expected.iter().copied())
    }
}

/// Whether a growth statement is about the top-ranked node or a general
/// rank function `h(N)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RankScope {
    TopRank,
    GeneralRank,
}

/// Growth class of the per-round query load on a node of rank `h(N)` as
/// the network grows, by weight-exponent regime.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AsymptoticOrder {
    /// `s < 1`: load grows like `N^s * h(N)^(-s)`.
    SublinearTotal { s: f64 },
    /// `s = 1`: load grows like `N / log N * h(N)^(-1)`.
    Critical,
    /// `s > 1`: load grows like `N * h(N)^(-s)`.
    LinearTotal { s: f64 },
}

impl AsymptoticOrder {
    pub fn describe(&self, scope: RankScope) -> String {
        match (self, scope) {
            (AsymptoticOrder::SublinearTotal { s }, RankScope::TopRank) => format!("Theta(N^{s})"),
            (AsymptoticOrder::SublinearTotal { s }, RankScope::GeneralRank) => {
                format!("Theta(N^{s} * h(N)^-{s})")
            }
            (AsymptoticOrder::Critical, RankScope::TopRank) => "Theta(N / log N)".to_string(),
            (AsymptoticOrder::Critical, RankScope::GeneralRank) => {
                "Theta(N / log N * h(N)^-1)".to_string()
            }
            (AsymptoticOrder::LinearTotal { .. }, RankScope::TopRank) => "Theta(N)".to_string(),
            (AsymptoticOrder::LinearTotal { s }, RankScope::GeneralRank) => {
                format!("Theta(N * h(N)^-{s})")
            }
        }
    }
}

/// Classify the query-load growth for weight exponent `s`.
pub fn asymptotic_class(s: f64) -> Result<AsymptoticOrder, ComplexityError> {
    if !s.is_finite() || s < 0.0 {
        return Err(ComplexityError::InvalidExponent(s));
    }
    Ok(if s < 1.0 {
        AsymptoticOrder::SublinearTotal { s }
    } else if s == 1.0 {
        AsymptoticOrder::Critical
    } else {
        AsymptoticOrder::LinearTotal { s }
    })
}

/// The rank above which nodes should gossip rather than answer individual
/// queries so that every node processes the same order of messages:
/// `ceil(N^(s/(s+1)))` for `s <= 1` and `ceil(N^(1/(1+s)))` for `s > 1`.
/// Both meet at `ceil(sqrt(N))` when `s = 1`, the worst case.
pub fn fair_gossip_threshold(n: usize, s: f64) -> Result<usize, ComplexityError> {
    if n == 0 {
        return Err(ComplexityError::NoNodes);
    }
    if !s.is_finite() || s < 0.0 {
        return Err(ComplexityError::InvalidExponent(s));
    }
    let exponent = if s <= 1.0 { s / (s + 1.0) } else { 1.0 / (1.0 + s) };
    let value = (n as f64).powf(exponent);
    // powf can miss an exact integer by an ulp either way; snap before
    // taking the ceiling so e.g. 10^4 at s = 3 yields 10, not 11.
    let snapped = value.round();
    let threshold = if (value - snapped).abs() <= 1e-9 * snapped.max(1.0) {
        snapped
    } else {
        value.ceil()
    };
    Ok(threshold as usize)
}

/// One rank's row of a telemetry comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TelemetryRow {
    /// 1-based rank.
    pub rank: usize,
    /// Expected queries per round.
    pub expected: f64,
    /// Observed queries per round.
    pub observed_mean: f64,
    /// `|observed_mean - expected| / expected`.
    pub rel_error: f64,
}

/// Comparison of observed per-rank query counts against a
/// [`QueryLoadProfile`].
#[derive(Debug, Clone, PartialEq)]
pub struct TelemetryReport {
    pub rows: Vec<TelemetryRow>,
    /// Largest relative error over ranks whose expected per-round count is
    /// at least 1; the low-expectation tail is excluded from the headline.
    pub max_rel_error: f64,
    pub rounds: u64,
}

/// Compare observed per-rank query counts (summed over `rounds` rounds,
/// rank order) against the analytic profile.
pub fn compare_telemetry(
    profile: &QueryLoadProfile,
    observed: &[u64],
    rounds: u64,
) -> Result<TelemetryReport, ComplexityError> {
    if observed.len() != profile.n {
        return Err(ComplexityError::DimensionMismatch {
            observed: observed.len(),
            expected: profile.n,
        });
    }
    if rounds == 0 {
        return Err(ComplexityError::NoRounds);
    }
    let mut rows = Vec::with_capacity(profile.n);
    let mut max_rel_error = 0.0f64;
    for (i, &count) in observed.iter().enumerate() {
        let expected = profile.expected(i + 1);
        let observed_mean = count as f64 / rounds as f64;
        let rel_error = (observed_mean - expected).abs() / expected;
        if expected >= 1.0 {
            max_rel_error = max_rel_error.max(rel_error);
        }
        rows.push(TelemetryRow {
            rank: i + 1,
            expected,
            observed_mean,
            rel_error,
        });
    }
    Ok(TelemetryReport {
        rows,
        max_rel_error,
        rounds,
    })
}

/// Render a telemetry report as CSV (schema: rank, expected,
/// observed_mean, rel_error).
pub fn render_telemetry_csv(report: &TelemetryReport) -> String {
    let mut out = String::from("rank,expected,observed_mean,rel_error\n");
    for row in &report.rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            row.rank, row.expected, row.observed_mean, row.rel_error
        ));
    }
    out
}

/// Chi-square goodness-of-fit of observed category counts against
/// multinomial cell probabilities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GoodnessOfFit {
    pub statistic: f64,
    /// Critical value at the 0.01 significance level.
    pub threshold: f64,
    pub degrees: usize,
    pub pass: bool,
}

/// Pearson chi-square test of `observed` counts against `probs` at
/// significance 0.01. Cells with zero probability must hold zero counts.
/// The critical value uses the Wilson-Hilferty approximation, accurate to
/// well under a percent at the degrees of freedom that arise here.
pub fn multinomial_gof(observed: &[u64], probs: &[f64]) -> Result<GoodnessOfFit, ComplexityError> {
    if observed.len() != probs.len() {
        return Err(ComplexityError::DimensionMismatch {
            observed: observed.len(),
            expected: probs.len(),
        });
    }
    let total: u64 = observed.iter().sum();
    if total == 0 {
        return Err(ComplexityError::NoRounds);
    }
    let mut statistic = 0.0;
    let mut cells = 0usize;
    for (&count, &p) in observed.iter().zip(probs) {
        if p > 0.0 {
            let expected = total as f64 * p;
            let diff = count as f64 - expected;
            statistic += diff * diff / expected;
            cells += 1;
        } else if count > 0 {
            // Counts in an impossible cell: unconditionally reject.
            statistic = f64::INFINITY;
        }
    }
    let degrees = cells.saturating_sub(1).max(1);
    let threshold = chi_square_quantile(degrees, 0.99);
    Ok(GoodnessOfFit {
        statistic,
        threshold,
        degrees,
        pass: statistic <= threshold,
    })
}

/// Wilson-Hilferty chi-square quantile: `df * (1 - 2/(9 df) + z * sqrt(2/(9 df)))^3`.
fn chi_square_quantile(df: usize, p: f64) -> f64 {
    // Normal quantiles for the significance levels used in this crate.
    let z = match p {
        p if (p - 0.99).abs() < 1e-12 => 2.3263478740408408,
        p if (p - 0.95).abs() < 1e-12 => 1.6448536269514722,
        _ => unimplemented!("quantile {p} not tabulated"),
    };
    let d = df as f64;
    let term = 1.0 - 2.0 / (9.0 * d) + z * (2.0 / (9.0 * d)).sqrt();
    d * term * term * term
}
