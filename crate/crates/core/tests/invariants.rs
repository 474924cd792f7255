//! Cross-module seeded invariants: termination behavior of honest-only
//! runs, and multinomial consistency of run telemetry with the sampling
//! distribution. These are statistical statements pinned per seed, so the
//! outcomes here are deterministic.

use wfpc::adversary::AdversaryConfig;
use wfpc::complexity::multinomial_gof;
use wfpc::protocol::ProtocolConfig;
use wfpc::scheme::{sampling_probs, VotingScheme};
use wfpc::sim::{collect_query_telemetry, run_once, run_repetitions, ExperimentConfig};
use wfpc::weights::zipf_weights;

fn honest_config(n: usize, p0: f64, zipf_s: f64, repetitions: u32) -> ExperimentConfig {
    ExperimentConfig {
        protocol: ProtocolConfig {
            n,
            k: 20,
            tau: 0.66,
            beta: 0.3,
            l: 10,
            max_it: 50,
            scheme: VotingScheme::fair(),
            seed: 7,
        },
        adversary: AdversaryConfig::none(),
        p0,
        zipf_s,
        repetitions,
        reply_drop: 0.0,
    }
}

#[test]
fn honest_runs_finalize_well_before_the_round_cap() {
    for &n in &[50usize, 100, 200] {
        for &p0 in &[0.2, 0.9] {
            let cfg = honest_config(n, p0, 0.0, 100);
            let result = run_repetitions(&cfg).unwrap();
            let finalized = result.records.iter().filter(|r| r.all_finalized).count();
            assert!(
                finalized >= 99,
                "n={n} p0={p0}: only {finalized}/100 repetitions finalized"
            );
            assert!(result.records.iter().all(|r| r.rounds <= 50));
        }
    }
}

#[test]
fn run_telemetry_is_multinomial_consistent() {
    // Query receipts over a full consensus run follow the sampling
    // distribution; chi-square at significance 0.01.
    for &(n, s) in &[(100usize, 1.0), (200, 0.5)] {
        let mut cfg = honest_config(n, 0.66, s, 1);
        cfg.protocol.max_it = 50;
        let record = run_once(&cfg, 21).unwrap();
        let w = zipf_weights(s, n).unwrap();
        let probs = sampling_probs(&w, &cfg.protocol.scheme).unwrap();
        let gof = multinomial_gof(&record.queries_received, &probs).unwrap();
        assert!(
            gof.pass,
            "n={n} s={s}: statistic {} over critical {}",
            gof.statistic, gof.threshold
        );
    }
}

#[test]
fn dedicated_telemetry_is_multinomial_consistent() {
    for &n in &[100usize, 200] {
        let w = zipf_weights(1.0, n).unwrap();
        let scheme = VotingScheme::fair();
        let observed = collect_query_telemetry(&w, &scheme, 20, 1000, 7).unwrap();
        let probs = sampling_probs(&w, &scheme).unwrap();
        let gof = multinomial_gof(&observed, &probs).unwrap();
        assert!(
            gof.pass,
            "n={n}: statistic {} over critical {}",
            gof.statistic, gof.threshold
        );
    }
}

#[test]
fn uniform_weights_concentrate_at_constant_load() {
    // Every rank expects k queries per round; 1000 rounds keep every
    // relative error under 10%.
    let w = zipf_weights(0.0, 100).unwrap();
    let scheme = VotingScheme::fair();
    let observed = collect_query_telemetry(&w, &scheme, 20, 1000, 7).unwrap();
    let profile = wfpc::complexity::QueryLoadProfile::new(100, 0.0, 20).unwrap();
    let report = wfpc::complexity::compare_telemetry(&profile, &observed, 1000).unwrap();
    for row in &report.rows {
        assert!(row.rel_error < 0.1, "rank {}: {}", row.rank, row.rel_error);
    }
}

#[test]
fn strong_majority_without_adversary_never_fails() {
    let mut cfg = honest_config(60, 0.9, 0.0, 50);
    cfg.protocol.seed = 17;
    let rows = wfpc::sim::sweep(&cfg, wfpc::sim::SweepAxis::ZipfExponent, &[0.0]).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].failures, 0);
}
