//! Node weight vectors: construction, normalization, Zipf generation and
//! log-log regression fitting.
//!
//! A [`WeightVector`] holds the normalized masses `m_1..m_N` (summing to 1)
//! of the nodes in a network. Weights are kept sorted in non-increasing
//! order together with the permutation back to node identity, so both
//! rank-based and identity-based views are cheap.

use std::io::BufRead;

use thiserror::Error;

use crate::numeric::kahan_sum;

/// Absolute tolerance on the total mass of a normalized weight vector.
pub const MASS_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum WeightError {
    #[error("weight vector must contain at least one entry")]
    Empty,
    #[error("weight {value} at index {index} is negative or not finite")]
    InvalidWeight { index: usize, value: f64 },
    #[error("weights sum to zero; cannot normalize")]
    ZeroMass,
    #[error("zipf exponent must be finite and >= 0, got {0}")]
    InvalidExponent(f64),
    #[error("node index {node} out of range for {len} nodes")]
    NodeOutOfRange { node: usize, len: usize },
    #[error("split ratio must lie strictly inside (0,1), got {0}")]
    InvalidSplitRatio(f64),
    #[error("regression needs at least 2 strictly positive values, got {0} usable")]
    NotEnoughPoints(usize),
    #[error("value {value} at index {index} is not strictly positive")]
    NonPositiveValue { index: usize, value: f64 },
    #[error("ranks list length {ranks} does not match values length {values}")]
    RankLengthMismatch { ranks: usize, values: usize },
    #[error("rank {0} is not a positive integer")]
    InvalidRank(u64),
    #[error("line {line}: {source}")]
    Parse {
        line: usize,
        source: std::num::ParseFloatError,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Normalized node weights, sorted non-increasing, with the permutation
/// back to node identity.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    /// Weights in non-increasing order.
    ranked: Vec<f64>,
    /// `node_of_rank[r]` is the node identity holding rank `r` (0-based).
    node_of_rank: Vec<usize>,
    /// Inverse permutation: `rank_of_node[i]` is the 0-based rank of node `i`.
    rank_of_node: Vec<usize>,
}

impl WeightVector {
    /// Build a normalized weight vector from raw non-negative weights given
    /// in node-identity order. The input is renormalized to total mass 1.
    /// Sorting ties are broken by original index, so construction is
    /// deterministic.
    pub fn new(weights: Vec<f64>) -> Result<Self, WeightError> {
        if weights.is_empty() {
            return Err(WeightError::Empty);
        }
        for (index, &value) in weights.iter().enumerate() {
            if !value.is_finite() || value < 0.0 {
                return Err(WeightError::InvalidWeight { index, value });
            }
        }
        let total = kahan_sum(weights.iter().copied());
        if total <= 0.0 {
            return Err(WeightError::ZeroMass);
        }

        let mut order: Vec<usize> = (0..weights.len()).collect();
        order.sort_by(|&a, &b| {
            weights[b]
                .partial_cmp(&weights[a])
                .expect("weights are finite")
                .then(a.cmp(&b))
        });

        let ranked: Vec<f64> = order.iter().map(|&i| weights[i] / total).collect();
        let mut rank_of_node = vec![0usize; weights.len()];
        for (rank, &node) in order.iter().enumerate() {
            rank_of_node[node] = rank;
        }

        Ok(Self {
            ranked,
            node_of_rank: order,
            rank_of_node,
        })
    }

    pub fn len(&self) -> usize {
        self.ranked.len()
    }

    pub fn is_empty(&self) -> bool {
        // Construction rejects empty inputs, so this is always false.
        self.ranked.is_empty()
    }

    /// Weights in non-increasing (rank) order.
    pub fn ranked(&self) -> &[f64] {
        &self.ranked
    }

    /// The node identity holding 0-based rank `rank`.
    pub fn node_of_rank(&self, rank: usize) -> usize {
        self.node_of_rank[rank]
    }

    /// The 0-based rank of node `node`.
    pub fn rank_of_node(&self, node: usize) -> usize {
        self.rank_of_node[node]
    }

    /// Weight of node `node` (identity order).
    pub fn node_weight(&self, node: usize) -> f64 {
        self.ranked[self.rank_of_node[node]]
    }

    /// Weights in node-identity order.
    pub fn node_weights(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.node_weight(i)).collect()
    }

    /// Total mass; 1 up to rounding.
    pub fn total(&self) -> f64 {
        kahan_sum(self.ranked.iter().copied())
    }
}

/// Parameters of a Zipf law over `n` ranks: rank `r` carries mass
/// `c * r^(-s)` with `c` chosen so the masses sum to 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZipfParams {
    pub s: f64,
    pub n: usize,
    /// Normalization constant `1 / sum_{r=1..n} r^(-s)`.
    pub c: f64,
}

impl ZipfParams {
    pub fn new(s: f64, n: usize) -> Result<Self, WeightError> {
        if !s.is_finite() || s < 0.0 {
            return Err(WeightError::InvalidExponent(s));
        }
        if n == 0 {
            return Err(WeightError::Empty);
        }
        let sum = kahan_sum((1..=n).map(|r| (r as f64).powf(-s)));
        Ok(Self { s, n, c: 1.0 / sum })
    }
}

/// Zipf weight vector: rank `r` (1-based) gets `r^(-s) / sum_j j^(-s)`.
///
/// `s = 0` is the uniform distribution; larger `s` concentrates mass on the
/// lowest ranks. Node identity coincides with rank order for the output.
pub fn zipf_weights(s: f64, n: usize) -> Result<WeightVector, WeightError> {
    ZipfParams::new(s, n)?;
    let raw: Vec<f64> = (1..=n).map(|r| (r as f64).powf(-s)).collect();
    WeightVector::new(raw)
}

/// Result of fitting a Zipf law by ordinary least squares on
/// `log(value) ~ log(rank)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZipfFit {
    /// Estimated exponent; the regression slope is `-s`.
    pub s: f64,
    /// Estimated scale, `exp(intercept)`.
    pub c: f64,
    /// Coefficient of determination of the log-log fit.
    pub r_squared: f64,
    /// Number of points used.
    pub points: usize,
}

/// Fit a Zipf exponent to positive values by unweighted OLS in log-log space.
///
/// When `ranks` is `None`, values are sorted non-increasing and assigned
/// ranks `1..=len` (ties keep input order). Explicit `ranks` must be
/// positive and pair up with `values` as given.
pub fn fit_zipf(values: &[f64], ranks: Option<&[u64]>) -> Result<ZipfFit, WeightError> {
    for (index, &value) in values.iter().enumerate() {
        if !value.is_finite() || value <= 0.0 {
            return Err(WeightError::NonPositiveValue { index, value });
        }
    }
    if values.len() < 2 {
        return Err(WeightError::NotEnoughPoints(values.len()));
    }

    let (xs, ys): (Vec<f64>, Vec<f64>) = match ranks {
        Some(ranks) => {
            if ranks.len() != values.len() {
                return Err(WeightError::RankLengthMismatch {
                    ranks: ranks.len(),
                    values: values.len(),
                });
            }
            if let Some(&bad) = ranks.iter().find(|&&r| r == 0) {
                return Err(WeightError::InvalidRank(bad));
            }
            ranks
                .iter()
                .zip(values)
                .map(|(&r, &v)| ((r as f64).ln(), v.ln()))
                .unzip()
        }
        None => {
            let mut sorted = values.to_vec();
            sorted.sort_by(|a, b| b.partial_cmp(a).expect("values are finite"));
            sorted
                .iter()
                .enumerate()
                .map(|(i, &v)| (((i + 1) as f64).ln(), v.ln()))
                .unzip()
        }
    };

    let (slope, intercept, r_squared) = linear_fit(&xs, &ys)?;
    Ok(ZipfFit {
        s: -slope,
        c: intercept.exp(),
        r_squared,
        points: xs.len(),
    })
}

/// OLS line fit returning (slope, intercept, r_squared).
pub(crate) fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<(f64, f64, f64), WeightError> {
    let n = xs.len();
    if n < 2 {
        return Err(WeightError::NotEnoughPoints(n));
    }
    let nf = n as f64;
    let mean_x = xs.iter().sum::<f64>() / nf;
    let mean_y = ys.iter().sum::<f64>() / nf;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mean_x) * (x - mean_x);
        sxy += (x - mean_x) * (y - mean_y);
        syy += (y - mean_y) * (y - mean_y);
    }
    if sxx == 0.0 {
        // All ranks identical: no line to fit.
        return Err(WeightError::NotEnoughPoints(1));
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let r_squared = if syy > 0.0 {
        let mut sse = 0.0;
        for (&x, &y) in xs.iter().zip(ys) {
            let e = y - (intercept + slope * x);
            sse += e * e;
        }
        (1.0 - sse / syy).clamp(0.0, 1.0)
    } else {
        // Flat data is fit perfectly by the flat line.
        1.0
    };
    Ok((slope, intercept, r_squared))
}

/// Split node `node` into two parts with ratio `x` in (0,1).
///
/// In identity order the node's mass `m` is replaced in place by the pair
/// `x*m, (1-x)*m`; all other nodes keep their mass and shift up by one
/// index after the split position. The result is renormalized.
pub fn split_weight(w: &WeightVector, node: usize, x: f64) -> Result<WeightVector, WeightError> {
    if node >= w.len() {
        return Err(WeightError::NodeOutOfRange { node, len: w.len() });
    }
    if !x.is_finite() || x <= 0.0 || x >= 1.0 {
        return Err(WeightError::InvalidSplitRatio(x));
    }
    let mut out = Vec::with_capacity(w.len() + 1);
    for (i, m) in w.node_weights().into_iter().enumerate() {
        if i == node {
            out.push(x * m);
            out.push((1.0 - x) * m);
        } else {
            out.push(m);
        }
    }
    WeightVector::new(out)
}

/// Parse one positive decimal value per line; blank lines and `#` comments
/// are skipped. This is the on-disk format for externally supplied value
/// snapshots fed to [`fit_zipf`].
pub fn parse_values<R: BufRead>(reader: R) -> Result<Vec<f64>, WeightError> {
    let mut values = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let value: f64 = trimmed
            .parse()
            .map_err(|source| WeightError::Parse { line: i + 1, source })?;
        values.push(value);
    }
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn assert_close(actual: f64, expected: f64, tol: f64) {
        assert!(
            (actual - expected).abs() <= tol,
            "expected {expected}, got {actual} (tol {tol})"
        );
    }

    #[test]
    fn zipf_s0_is_uniform() {
        let w = zipf_weights(0.0, 4).unwrap();
        for &m in w.ranked() {
            assert_close(m, 0.25, 1e-15);
        }
    }

    #[test]
    fn zipf_s1_two_nodes() {
        // C = 1/(1 + 1/2) = 2/3.
        let w = zipf_weights(1.0, 2).unwrap();
        assert_close(w.ranked()[0], 2.0 / 3.0, 1e-15);
        assert_close(w.ranked()[1], 1.0 / 3.0, 1e-15);
    }

    #[test]
    fn zipf_s1_three_nodes() {
        // C = 1/(1 + 1/2 + 1/3) = 6/11.
        let w = zipf_weights(1.0, 3).unwrap();
        assert_close(w.ranked()[0], 6.0 / 11.0, 1e-15);
        assert_close(w.ranked()[1], 3.0 / 11.0, 1e-15);
        assert_close(w.ranked()[2], 2.0 / 11.0, 1e-15);
    }

    #[test]
    fn zipf_rejects_bad_params() {
        assert!(zipf_weights(-0.5, 4).is_err());
        assert!(zipf_weights(f64::NAN, 4).is_err());
        assert!(zipf_weights(1.0, 0).is_err());
        assert!(ZipfParams::new(-1.0, 4).is_err());
    }

    #[test]
    fn zipf_params_normalization_constant() {
        let params = ZipfParams::new(1.0, 2).unwrap();
        assert_close(params.c, 2.0 / 3.0, 1e-15);
        // c makes the generated masses sum to 1.
        let params = ZipfParams::new(0.9, 50).unwrap();
        let total: f64 = (1..=50).map(|r| params.c * (r as f64).powf(-0.9)).sum();
        assert_close(total, 1.0, 1e-12);
    }

    #[test]
    fn fit_recovers_exact_harmonic_law() {
        let values = [1.0, 0.5, 1.0 / 3.0, 0.25];
        let fit = fit_zipf(&values, None).unwrap();
        assert_close(fit.s, 1.0, 1e-9);
        assert!(fit.r_squared > 1.0 - 1e-9);
    }

    #[test]
    fn fit_flat_data_gives_zero_exponent() {
        let fit = fit_zipf(&[1.0, 1.0, 1.0, 1.0], None).unwrap();
        assert_close(fit.s, 0.0, 1e-9);
        assert_close(fit.r_squared, 1.0, 1e-12);
    }

    #[test]
    fn fit_round_trips_generated_weights() {
        for &s in &[0.0, 0.5, 0.9, 1.0, 1.1, 2.0] {
            for &n in &[10usize, 100, 1000] {
                let w = zipf_weights(s, n).unwrap();
                let fit = fit_zipf(w.ranked(), None).unwrap();
                assert_close(fit.s, s, 1e-9);
            }
        }
    }

    #[test]
    fn fit_rejects_degenerate_input() {
        assert!(fit_zipf(&[1.0], None).is_err());
        assert!(fit_zipf(&[1.0, 0.0], None).is_err());
        assert!(fit_zipf(&[1.0, -2.0], None).is_err());
        assert!(fit_zipf(&[1.0, 2.0], Some(&[1])).is_err());
        assert!(fit_zipf(&[1.0, 2.0], Some(&[0, 1])).is_err());
    }

    #[test]
    fn fit_with_explicit_ranks() {
        // Same law sampled at scattered ranks.
        let ranks = [1u64, 3, 7, 20];
        let values: Vec<f64> = ranks.iter().map(|&r| 5.0 * (r as f64).powf(-0.7)).collect();
        let fit = fit_zipf(&values, Some(&ranks)).unwrap();
        assert_close(fit.s, 0.7, 1e-9);
        assert_close(fit.c, 5.0, 1e-9);
    }

    #[test]
    fn split_symmetric() {
        let w = WeightVector::new(vec![0.5, 0.5]).unwrap();
        let split = split_weight(&w, 0, 0.5).unwrap();
        let by_node = split.node_weights();
        assert_close(by_node[0], 0.25, 1e-15);
        assert_close(by_node[1], 0.25, 1e-15);
        assert_close(by_node[2], 0.5, 1e-15);
    }

    #[test]
    fn split_keeps_identity_order() {
        let w = WeightVector::new(vec![2.0 / 3.0, 1.0 / 3.0]).unwrap();
        let split = split_weight(&w, 0, 0.25).unwrap();
        let by_node = split.node_weights();
        assert_close(by_node[0], 1.0 / 6.0, 1e-15);
        assert_close(by_node[1], 0.5, 1e-15);
        assert_close(by_node[2], 1.0 / 3.0, 1e-15);
    }

    #[test]
    fn split_single_node() {
        let w = WeightVector::new(vec![1.0]).unwrap();
        let split = split_weight(&w, 0, 0.1).unwrap();
        let by_node = split.node_weights();
        assert_close(by_node[0], 0.1, 1e-15);
        assert_close(by_node[1], 0.9, 1e-15);
    }

    #[test]
    fn split_rejects_boundary_ratios() {
        let w = WeightVector::new(vec![1.0]).unwrap();
        assert!(split_weight(&w, 0, 0.0).is_err());
        assert!(split_weight(&w, 0, 1.0).is_err());
        assert!(split_weight(&w, 1, 0.5).is_err());
    }

    #[test]
    fn ranking_breaks_ties_by_index() {
        let w = WeightVector::new(vec![0.25, 0.5, 0.25]).unwrap();
        assert_eq!(w.node_of_rank(0), 1);
        assert_eq!(w.node_of_rank(1), 0);
        assert_eq!(w.node_of_rank(2), 2);
        assert_eq!(w.rank_of_node(2), 2);
    }

    #[test]
    fn parse_values_skips_blank_and_comment_lines() {
        let input = "1.5\n\n# header\n0.25\n";
        let values = parse_values(input.as_bytes()).unwrap();
        assert_eq!(values, vec![1.5, 0.25]);
        assert!(parse_values("1.0\nabc\n".as_bytes()).is_err());
    }

    proptest! {
        #[test]
        fn zipf_mass_is_one(s in 0.0f64..4.0, n in 1usize..2000) {
            let w = zipf_weights(s, n).unwrap();
            prop_assert!((w.total() - 1.0).abs() <= MASS_TOLERANCE);
        }

        #[test]
        fn zipf_is_strictly_decreasing_for_positive_s(s in 0.05f64..4.0, n in 2usize..500) {
            let w = zipf_weights(s, n).unwrap();
            for pair in w.ranked().windows(2) {
                prop_assert!(pair[0] > pair[1]);
            }
        }

        #[test]
        fn split_then_merge_restores_vector(
            raw in proptest::collection::vec(0.01f64..10.0, 1..12),
            node_pick in 0usize..12,
            x in 0.01f64..0.99,
        ) {
            let w = WeightVector::new(raw).unwrap();
            let node = node_pick % w.len();
            let split = split_weight(&w, node, x).unwrap();
            let mut merged = split.node_weights();
            let part = merged.remove(node + 1);
            merged[node] += part;
            for (a, b) in merged.iter().zip(w.node_weights()) {
                prop_assert!((a - b).abs() <= 1e-15);
            }
        }
    }

    #[test]
    fn large_zipf_stays_normalized() {
        for &s in &[0.0, 1.0, 4.0] {
            let w = zipf_weights(s, 100_000).unwrap();
            assert!((w.total() - 1.0).abs() <= MASS_TOLERANCE);
        }
    }
}
