//! The cautious adversary: a single actor holding a fraction `q` of the
//! total weight, split over `round(q*N)` equal-weight identities, replying
//! to every query with the mana-weighted minority opinion of the honest
//! population from the previous step.

use thiserror::Error;

use crate::protocol::Role;
use crate::weights::{WeightError, WeightVector};

#[derive(Debug, Error)]
pub enum AdversaryError {
    #[error("adversary weight fraction must lie in [0,1), got {0}")]
    InvalidFraction(f64),
    #[error(
        "honest node count {honest} does not leave room for {adversaries} adversarial \
         identities in a population of {total}"
    )]
    PopulationMismatch {
        honest: usize,
        adversaries: usize,
        total: usize,
    },
    #[error(transparent)]
    Weights(#[from] WeightError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AdversaryStrategy {
    /// No adversary; any configured `q` is ignored.
    None,
    /// Reply with the mana-weighted minority opinion of the honest nodes,
    /// one step behind.
    #[default]
    CautiousMinority,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdversaryConfig {
    /// Fraction of the total weight held by the adversary.
    pub q: f64,
    pub strategy: AdversaryStrategy,
}

impl AdversaryConfig {
    pub fn new(q: f64, strategy: AdversaryStrategy) -> Result<Self, AdversaryError> {
        if !q.is_finite() || !(0.0..1.0).contains(&q) {
            return Err(AdversaryError::InvalidFraction(q));
        }
        Ok(Self { q, strategy })
    }

    pub fn none() -> Self {
        Self {
            q: 0.0,
            strategy: AdversaryStrategy::None,
        }
    }

    /// Number of adversarial identities in a population of `total` nodes:
    /// `round(q * total)`, zero when the strategy is `None`. Each identity
    /// holds `q / round(q * total)` of the total weight, which is exactly
    /// `1/total` whenever `q * total` is integral.
    pub fn identity_count(&self, total: usize) -> usize {
        match self.strategy {
            AdversaryStrategy::None => 0,
            AdversaryStrategy::CautiousMinority => (self.q * total as f64).round() as usize,
        }
    }
}

/// A full population: combined weight vector plus per-node roles. Honest
/// nodes occupy identities `0..honest_count` in the order of the honest
/// input vector; adversarial identities follow.
#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    pub weights: WeightVector,
    pub roles: Vec<Role>,
    honest_count: usize,
}

impl Population {
    pub fn len(&self) -> usize {
        self.roles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.roles.is_empty()
    }

    pub fn honest_count(&self) -> usize {
        self.honest_count
    }

    pub fn adversary_count(&self) -> usize {
        self.roles.len() - self.honest_count
    }

    pub fn is_honest(&self, node: usize) -> bool {
        self.roles[node] == Role::Honest
    }
}

/// Assemble a population of `total` nodes: the honest vector is scaled to
/// mass `1 - q` and `round(q * total)` adversarial identities share mass
/// `q` equally. `honest.len()` must equal `total` minus the adversarial
/// identity count.
pub fn build_population(
    honest: &WeightVector,
    adv: &AdversaryConfig,
    total: usize,
) -> Result<Population, AdversaryError> {
    if !adv.q.is_finite() || !(0.0..1.0).contains(&adv.q) {
        return Err(AdversaryError::InvalidFraction(adv.q));
    }
    let adversaries = adv.identity_count(total);
    if honest.len() + adversaries != total {
        return Err(AdversaryError::PopulationMismatch {
            honest: honest.len(),
            adversaries,
            total,
        });
    }
    let q = if adversaries == 0 { 0.0 } else { adv.q };
    let mut raw: Vec<f64> = honest
        .node_weights()
        .into_iter()
        .map(|m| m * (1.0 - q))
        .collect();
    if adversaries > 0 {
        let each = q / adversaries as f64;
        raw.extend(std::iter::repeat_n(each, adversaries));
    }
    let weights = WeightVector::new(raw)?;
    let mut roles = vec![Role::Honest; honest.len()];
    roles.extend(std::iter::repeat_n(Role::Adversarial, adversaries));
    Ok(Population {
        weights,
        roles,
        honest_count: honest.len(),
    })
}

/// The opinion the adversary transmits: the mana-weighted minority of the
/// honest `(opinion, weight)` pairs. An exact tie between the camps, and
/// the degenerate empty case, resolve to opinion 0.
pub fn adversary_opinion<I>(honest: I) -> bool
where
    I: IntoIterator<Item = (bool, f64)>,
{
    let mut mass_one = 0.0;
    let mut mass_zero = 0.0;
    for (opinion, weight) in honest {
        if opinion {
            mass_one += weight;
        } else {
            mass_zero += weight;
        }
    }
    mass_one < mass_zero
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::zipf_weights;

    #[test]
    fn no_adversary_population() {
        let honest = zipf_weights(1.0, 10).unwrap();
        let pop = build_population(&honest, &AdversaryConfig::none(), 10).unwrap();
        assert_eq!(pop.honest_count(), 10);
        assert_eq!(pop.adversary_count(), 0);
        assert!((pop.weights.total() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn quarter_adversary_identities_hold_one_over_n() {
        let adv = AdversaryConfig::new(0.25, AdversaryStrategy::CautiousMinority).unwrap();
        assert_eq!(adv.identity_count(1000), 250);
        let honest = zipf_weights(1.0, 750).unwrap();
        let pop = build_population(&honest, &adv, 1000).unwrap();
        assert_eq!(pop.adversary_count(), 250);
        for node in 750..1000 {
            assert!((pop.weights.node_weight(node) - 0.001).abs() <= 1e-15);
            assert!(!pop.is_honest(node));
        }
        assert!((pop.weights.total() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn small_population_split() {
        let adv = AdversaryConfig::new(0.1, AdversaryStrategy::CautiousMinority).unwrap();
        assert_eq!(adv.identity_count(10), 1);
        let honest = zipf_weights(1.0, 9).unwrap();
        let pop = build_population(&honest, &adv, 10).unwrap();
        assert!((pop.weights.node_weight(9) - 0.1).abs() <= 1e-15);
        let honest_mass: f64 = (0..9).map(|i| pop.weights.node_weight(i)).sum();
        assert!((honest_mass - 0.9).abs() <= 1e-12);
        // Honest nodes keep their Zipf proportions after scaling.
        let expected_top = 0.9 * honest.node_weight(0);
        assert!((pop.weights.node_weight(0) - expected_top).abs() <= 1e-15);
    }

    #[test]
    fn population_mismatch_is_rejected() {
        let adv = AdversaryConfig::new(0.25, AdversaryStrategy::CautiousMinority).unwrap();
        let honest = zipf_weights(1.0, 10).unwrap();
        assert!(matches!(
            build_population(&honest, &adv, 1000),
            Err(AdversaryError::PopulationMismatch { .. })
        ));
    }

    #[test]
    fn invalid_fraction_is_rejected() {
        assert!(AdversaryConfig::new(1.0, AdversaryStrategy::CautiousMinority).is_err());
        assert!(AdversaryConfig::new(-0.1, AdversaryStrategy::CautiousMinority).is_err());
        assert!(AdversaryConfig::new(f64::NAN, AdversaryStrategy::CautiousMinority).is_err());
    }

    #[test]
    fn minority_by_mass_not_by_count() {
        // Two light nodes at 1 outweigh one heavy node at 0 by count only.
        let honest = [(true, 0.1), (true, 0.15), (false, 0.75)];
        assert!(adversary_opinion(honest));
    }

    #[test]
    fn lighter_side_is_minority() {
        let honest = [(true, 0.5), (false, 0.25)];
        assert!(!adversary_opinion(honest));
    }

    #[test]
    fn unanimous_honest_population_makes_empty_side_minority() {
        let honest = [(true, 0.3), (true, 0.7)];
        assert!(!adversary_opinion(honest));
    }

    #[test]
    fn exact_tie_resolves_to_zero() {
        let honest = [(true, 0.375), (false, 0.375)];
        assert!(!adversary_opinion(honest));
    }
}
