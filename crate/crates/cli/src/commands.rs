//! Implementations of the six subcommands.

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

use wfpc::adversary::{AdversaryConfig, AdversaryStrategy};
use wfpc::complexity::{
    asymptotic_class, compare_telemetry, fair_gossip_threshold, multinomial_gof,
    render_telemetry_csv, QueryLoadProfile, RankScope,
};
use wfpc::protocol::ProtocolConfig;
use wfpc::scheme::{
    fairness_gap, sampling_probs, voting_power_exact, voting_power_mc, VotingPowerReport,
    VotingScheme, WeightFn,
};
use wfpc::seed::derive_seed;
use wfpc::sim::{
    collect_query_telemetry, render_sweep_csv, run_repetitions, sweep as run_sweep,
    ExperimentConfig,
};
use wfpc::weights::{fit_zipf as fit_zipf_values, parse_values, zipf_weights, WeightVector};

use crate::layers::{write_atomic, ConfigEcho, Layers, MethodArg, WeightFnArg};
use crate::{ComplexityArgs, FairnessArgs, FitZipfArgs, PowerArgs, SimulateArgs, SweepArgs};

const DEFAULT_OUT_DIR: &str = "wfpc-out";

fn finish_outputs(
    out: Option<&Path>,
    echo: &ConfigEcho,
    files: &[(&str, &str)],
) -> Result<Vec<PathBuf>> {
    let Some(dir) = out else {
        return Ok(Vec::new());
    };
    let mut written = Vec::new();
    for (name, contents) in files {
        written.push(write_atomic(dir, name, contents)?);
    }
    written.push(write_atomic(dir, "config.txt", &echo.render())?);
    Ok(written)
}

fn announce(written: &[PathBuf]) {
    for path in written {
        eprintln!("wrote {}", path.display());
    }
}

/// Weight vector plus the echo entries describing where it came from.
fn resolve_weights(
    layers: &Layers,
    zipf_s: Option<f64>,
    n: Option<usize>,
    weights_file: Option<PathBuf>,
    echo: &mut ConfigEcho,
) -> Result<WeightVector> {
    let weights_file = layers.resolve_opt("weights-file", weights_file)?;
    if let Some(path) = weights_file {
        let file = File::open(&path).with_context(|| format!("opening {}", path.display()))?;
        let values = parse_values(BufReader::new(file))
            .with_context(|| format!("parsing {}", path.display()))?;
        echo.push("weights-file", path.display());
        return Ok(WeightVector::new(values)?);
    }
    let s = layers.resolve("zipf-s", zipf_s, 1.0)?;
    let n = layers.resolve("n", n, 100)?;
    echo.push("zipf-s", s);
    echo.push("n", n);
    Ok(zipf_weights(s, n)?)
}

fn resolve_scheme(
    layers: &Layers,
    f: Option<WeightFnArg>,
    g: Option<WeightFnArg>,
    echo: &mut ConfigEcho,
) -> Result<VotingScheme> {
    let f = layers.resolve("f", f, WeightFnArg(WeightFn::Identity))?.0;
    let g = layers.resolve("g", g, WeightFnArg(WeightFn::Constant))?.0;
    echo.push("f", f);
    echo.push("g", g);
    Ok(VotingScheme::new(f, g))
}

fn power_csv(w: &WeightVector, report: &VotingPowerReport) -> String {
    let mut csv = String::from("rank,weight,voting_power,std_err\n");
    for rank in 0..w.len() {
        let node = w.node_of_rank(rank);
        let se = report
            .std_err
            .as_ref()
            .map(|se| se[node])
            .unwrap_or(0.0);
        csv.push_str(&format!(
            "{},{},{},{}\n",
            rank + 1,
            w.ranked()[rank],
            report.powers[node],
            se
        ));
    }
    csv
}

pub fn power(args: PowerArgs) -> Result<()> {
    let layers = Layers::load(args.io.config.as_deref())?;
    let mut echo = ConfigEcho::new("power");
    let w = resolve_weights(
        &layers,
        args.weights.zipf_s,
        args.weights.n,
        args.weights.weights_file,
        &mut echo,
    )?;
    let scheme = resolve_scheme(&layers, args.weights.f, args.weights.g, &mut echo)?;
    let k = layers.resolve("k", args.weights.k, 20)?;
    let method = layers.resolve("method", args.method, MethodArg::Exact)?;
    let seed = layers.resolve("seed", args.seed, 1u64)?;
    echo.push("k", k);
    echo.push("method", method);

    let report = match method {
        MethodArg::Exact => voting_power_exact(&w, &scheme, k)
            .context("exact enumeration failed (consider --method mc)")?,
        MethodArg::Mc => {
            let samples = layers.resolve("samples", args.samples, 100_000u64)?;
            echo.push("samples", samples);
            echo.push("seed", seed);
            voting_power_mc(&w, &scheme, k, samples, seed)?
        }
    };

    let csv = power_csv(&w, &report);
    print!("{csv}");
    let written = finish_outputs(args.io.out.as_deref(), &echo, &[("power.csv", &csv)])?;
    announce(&written);
    Ok(())
}

pub fn fairness(args: FairnessArgs) -> Result<()> {
    let layers = Layers::load(args.io.config.as_deref())?;
    let mut echo = ConfigEcho::new("fairness");
    let w = resolve_weights(
        &layers,
        args.weights.zipf_s,
        args.weights.n,
        args.weights.weights_file,
        &mut echo,
    )?;
    let scheme = resolve_scheme(&layers, args.weights.f, args.weights.g, &mut echo)?;
    let k = layers.resolve("k", args.weights.k, 20)?;
    let node = layers.resolve("node", args.node, 0usize)?;
    let ratios = layers
        .resolve_opt("split-ratios", args.split_ratios)?
        .map(|list| list.0)
        .unwrap_or_else(|| vec![0.1, 0.25, 0.5]);
    echo.push("k", k);
    echo.push("node", node);
    echo.push(
        "split-ratios",
        ratios
            .iter()
            .map(|x| x.to_string())
            .collect::<Vec<_>>()
            .join(","),
    );

    let original = voting_power_exact(&w, &scheme, k)
        .context("exact enumeration failed; fairness needs the exact path")?;
    let v_original = original.powers[node];
    let mut csv = String::from("x,v_original,v_split_sum,gap\n");
    for &x in &ratios {
        let gap = fairness_gap(&w, &scheme, k, node, x)?;
        csv.push_str(&format!("{},{},{},{}\n", x, v_original, v_original - gap, gap));
    }
    print!("{csv}");
    let written = finish_outputs(args.io.out.as_deref(), &echo, &[("fairness.csv", &csv)])?;
    announce(&written);
    Ok(())
}

struct ResolvedExperiment {
    config: ExperimentConfig,
    out: PathBuf,
}

fn resolve_experiment(
    layers: &Layers,
    args: &crate::ProtocolArgs,
    out: Option<&Path>,
    echo: &mut ConfigEcho,
) -> Result<ResolvedExperiment> {
    let n = layers.resolve("n", args.n, 100usize)?;
    let k = layers.resolve("k", args.k, 20usize)?;
    let tau = layers.resolve("tau", args.tau, 0.66)?;
    let beta = layers.resolve("beta", args.beta, 0.3)?;
    let l = layers.resolve("l", args.l, 10u32)?;
    let max_it = layers.resolve("max-it", args.max_it, 50u32)?;
    let q = layers.resolve("q", args.q, 0.0)?;
    let s = layers.resolve("s", args.s, 1.0)?;
    let p0 = layers.resolve("p0", args.p0, 0.66)?;
    let reps = layers.resolve("reps", args.reps, 300u32)?;
    let reply_drop = layers.resolve("reply-drop", args.reply_drop, 0.0)?;
    let seed = layers.resolve("seed", args.seed, 1u64)?;
    let f = layers.resolve("f", args.f, WeightFnArg(WeightFn::Identity))?.0;
    let g = layers.resolve("g", args.g, WeightFnArg(WeightFn::Constant))?.0;

    for (key, value) in [
        ("n", n.to_string()),
        ("k", k.to_string()),
        ("tau", tau.to_string()),
        ("beta", beta.to_string()),
        ("l", l.to_string()),
        ("max-it", max_it.to_string()),
        ("q", q.to_string()),
        ("s", s.to_string()),
        ("p0", p0.to_string()),
        ("reps", reps.to_string()),
        ("reply-drop", reply_drop.to_string()),
        ("seed", seed.to_string()),
        ("f", f.to_string()),
        ("g", g.to_string()),
    ] {
        echo.push(key, value);
    }

    let config = ExperimentConfig {
        protocol: ProtocolConfig {
            n,
            k,
            tau,
            beta,
            l,
            max_it,
            scheme: VotingScheme::new(f, g),
            seed,
        },
        adversary: AdversaryConfig::new(q, AdversaryStrategy::CautiousMinority)?,
        p0,
        zipf_s: s,
        repetitions: reps,
        reply_drop,
    };
    config.validate()?;
    let out = out
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));
    Ok(ResolvedExperiment { config, out })
}

pub fn simulate(args: SimulateArgs) -> Result<()> {
    let layers = Layers::load(args.io.config.as_deref())?;
    let mut echo = ConfigEcho::new("simulate");
    let resolved = resolve_experiment(&layers, &args.protocol, args.io.out.as_deref(), &mut echo)?;
    let config = &resolved.config;

    let result = run_repetitions(config)?;

    let mut reps_csv = String::from("rep,seed,agreement_failure,all_finalized,rounds\n");
    for (rep, record) in result.records.iter().enumerate() {
        reps_csv.push_str(&format!(
            "{},{},{},{},{}\n",
            rep,
            derive_seed(config.protocol.seed, rep as u64),
            record.agreement_failure,
            record.all_finalized,
            record.rounds
        ));
    }
    let summary_csv = format!(
        "repetitions,failures,failure_rate,ci_low,ci_high,mean_rounds\n{},{},{},{},{},{}\n",
        config.repetitions,
        result.failures,
        result.failure_rate,
        result.ci_low,
        result.ci_high,
        result.mean_rounds
    );

    let mut files: Vec<(&str, String)> = vec![
        ("repetitions.csv", reps_csv),
        ("summary.csv", summary_csv),
    ];

    // With no adversary the population is the pure Zipf vector (identity =
    // rank), and every round draws k queries per node, so run telemetry is
    // directly comparable to the analytic profile.
    if config.adversary.identity_count(config.protocol.n) == 0 {
        let mut observed = vec![0u64; config.protocol.n];
        let mut total_rounds = 0u64;
        for record in &result.records {
            total_rounds += u64::from(record.rounds);
            for (slot, &count) in observed.iter_mut().zip(&record.queries_received) {
                *slot += count;
            }
        }
        let profile = QueryLoadProfile::new(config.protocol.n, config.zipf_s, config.protocol.k)?;
        let report = compare_telemetry(&profile, &observed, total_rounds)?;
        files.push(("telemetry.csv", render_telemetry_csv(&report)));
    }

    println!(
        "{} repetitions: {} failures, failure_rate = {} (95% CI [{}, {}]), mean_rounds = {}",
        config.repetitions,
        result.failures,
        result.failure_rate,
        result.ci_low,
        result.ci_high,
        result.mean_rounds
    );

    let file_refs: Vec<(&str, &str)> = files
        .iter()
        .map(|(name, contents)| (*name, contents.as_str()))
        .collect();
    let written = finish_outputs(Some(&resolved.out), &echo, &file_refs)?;
    announce(&written);
    Ok(())
}

pub fn sweep(args: SweepArgs) -> Result<()> {
    let layers = Layers::load(args.io.config.as_deref())?;
    let mut echo = ConfigEcho::new("sweep");
    let resolved = resolve_experiment(&layers, &args.protocol, args.io.out.as_deref(), &mut echo)?;
    let axis = layers.resolve_required("axis", args.axis)?;
    let values = layers.resolve_required("values", args.values)?;
    echo.push("axis", axis);
    echo.push("values", &values);

    let rows = run_sweep(&resolved.config, axis.0, &values.0)?;
    let csv = render_sweep_csv(&rows);
    for row in &rows {
        println!(
            "{} = {}: failure_rate = {} ({} / {})",
            axis.0.label(),
            row.axis_value,
            row.failure_rate,
            row.failures,
            row.repetitions
        );
    }
    let written = finish_outputs(Some(&resolved.out), &echo, &[("sweep.csv", &csv)])?;
    announce(&written);
    Ok(())
}

pub fn complexity(args: ComplexityArgs) -> Result<()> {
    let layers = Layers::load(args.io.config.as_deref())?;
    let mut echo = ConfigEcho::new("complexity");
    let n = layers.resolve("n", args.n, 100usize)?;
    let s = layers.resolve("s", args.s, 1.0)?;
    let k = layers.resolve("k", args.k, 20usize)?;
    let rounds = layers.resolve("rounds", args.rounds, 0u64)?;
    let seed = layers.resolve("seed", args.seed, 1u64)?;
    for (key, value) in [
        ("n", n.to_string()),
        ("s", s.to_string()),
        ("k", k.to_string()),
        ("rounds", rounds.to_string()),
        ("seed", seed.to_string()),
    ] {
        echo.push(key, value);
    }

    let profile = QueryLoadProfile::new(n, s, k)?;
    let order = asymptotic_class(s)?;
    println!(
        "per-round load of rank h(N): {}; top rank: {}",
        order.describe(RankScope::GeneralRank),
        order.describe(RankScope::TopRank)
    );
    println!(
        "fair gossip threshold rank: {}",
        fair_gossip_threshold(n, s)?
    );

    let csv = if rounds > 0 {
        let w = zipf_weights(s, n)?;
        let scheme = VotingScheme::fair();
        let observed = collect_query_telemetry(&w, &scheme, k, rounds, seed)?;
        let report = compare_telemetry(&profile, &observed, rounds)?;
        let gof = multinomial_gof(&observed, &sampling_probs(&w, &scheme)?)?;
        println!(
            "telemetry over {rounds} rounds: max_rel_error = {} (ranks with expectation >= 1)",
            report.max_rel_error
        );
        println!(
            "multinomial goodness-of-fit: statistic = {:.2}, critical(0.01) = {:.2}, pass = {}",
            gof.statistic, gof.threshold, gof.pass
        );
        render_telemetry_csv(&report)
    } else {
        let mut csv = String::from("rank,expected,observed_mean,rel_error\n");
        for rank in 1..=n {
            csv.push_str(&format!("{},{},,\n", rank, profile.expected(rank)));
        }
        csv
    };

    let written = finish_outputs(args.io.out.as_deref(), &echo, &[("complexity.csv", &csv)])?;
    if written.is_empty() {
        print!("{csv}");
    }
    announce(&written);
    Ok(())
}

pub fn fit_zipf(args: FitZipfArgs) -> Result<()> {
    let layers = Layers::load(args.io.config.as_deref())?;
    let mut echo = ConfigEcho::new("fit-zipf");
    let input: PathBuf = layers.resolve_required("input", args.input)?;
    let ranks = layers.resolve_opt("ranks", args.ranks)?;
    let max_rank = layers.resolve_opt("max-rank", args.max_rank)?;
    echo.push("input", input.display());

    if ranks.is_some() && max_rank.is_some() {
        bail!("--ranks and --max-rank cannot be combined");
    }

    let file = File::open(&input).with_context(|| format!("opening {}", input.display()))?;
    let mut values = parse_values(BufReader::new(file))
        .with_context(|| format!("parsing {}", input.display()))?;

    if let Some(cutoff) = max_rank {
        echo.push("max-rank", cutoff);
        values.sort_by(|a, b| b.partial_cmp(a).expect("parsed values are finite"));
        values.truncate(cutoff);
    }
    let fit = match &ranks {
        Some(list) => {
            echo.push(
                "ranks",
                list.0
                    .iter()
                    .map(|r| r.to_string())
                    .collect::<Vec<_>>()
                    .join(","),
            );
            fit_zipf_values(&values, Some(&list.0))?
        }
        None => fit_zipf_values(&values, None)?,
    };

    println!("s = {}", fit.s);
    println!("c = {}", fit.c);
    println!("r_squared = {}", fit.r_squared);
    println!("points = {}", fit.points);

    let csv = format!(
        "s,c,r_squared,points\n{},{},{},{}\n",
        fit.s, fit.c, fit.r_squared, fit.points
    );
    let written = finish_outputs(args.io.out.as_deref(), &echo, &[("fit.csv", &csv)])?;
    announce(&written);
    Ok(())
}
