use std::fs;
use std::path::Path;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use pacr_core::dsl::{self, parse_program, parse_value, print_function, print_program};
use pacr_core::harness::config::{self, ExperimentConfig, RunArtifacts};
use pacr_core::harness::experiments::run_decay_experiment;
use pacr_core::search::{Certificate, Outcome, RunReport};
use pacr_core::stats::{self, PrecisionBudget};
use serde::Serialize;

use crate::output::{write_csv, write_json, write_jsonl, write_text, Provenance};
use crate::{BoundsArgs, DecayArgs, EvalArgs, Overrides, RunArgs, SampleComplexityArgs};

pub const EXIT_I_DONT_KNOW: u8 = 2;

#[derive(Debug, Serialize)]
struct SampleComplexity {
    m: u64,
    epsilon_hat: f64,
    delta_hat: f64,
}

pub fn sample_complexity(a: SampleComplexityArgs) -> Result<ExitCode> {
    let (m, epsilon_hat, delta_hat) = if a.lemma {
        (
            stats::sample_complexity_lemma(a.class_size, a.epsilon, a.delta)?,
            a.epsilon,
            a.delta,
        )
    } else if a.bottom_up {
        (
            stats::sample_complexity_bottomup(a.class_size, a.k_max, a.epsilon, a.delta)?,
            a.epsilon / (2.0 * a.k_max as f64),
            a.delta / a.k_max as f64,
        )
    } else {
        (
            stats::sample_complexity_topdown(a.class_size, a.k_max, a.epsilon, a.delta)?,
            a.epsilon / a.k_max as f64,
            a.delta / a.k_max as f64,
        )
    };
    let out = SampleComplexity {
        m,
        epsilon_hat,
        delta_hat,
    };
    if a.json {
        println!("{}", serde_json::to_string(&out)?);
    } else {
        println!("m = {}", out.m);
        println!("epsilon_hat = {}", out.epsilon_hat);
        println!("delta_hat = {}", out.delta_hat);
    }
    Ok(ExitCode::SUCCESS)
}

fn load_config(path: &Path, o: &Overrides) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut cfg = ExperimentConfig::from_json(&text).with_context(|| format!("in {}", path.display()))?;
    if let Some(v) = o.epsilon {
        cfg.epsilon = v;
    }
    if let Some(v) = o.delta {
        cfg.delta = v;
    }
    if let Some(v) = o.seed {
        cfg.seed = v;
    }
    if o.k_max.is_some() {
        cfg.k_max = o.k_max;
    }
    if o.trials.is_some() {
        cfg.trials = o.trials;
    }
    if o.heldout.is_some() {
        cfg.heldout = o.heldout;
    }
    if o.workers.is_some() {
        cfg.workers = o.workers;
    }
    Ok(cfg)
}

#[derive(Debug, Serialize)]
struct RunSummary<'a> {
    outcome: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    reason: Option<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    certificate: Option<&'a Certificate>,
    budget: &'a PrecisionBudget,
    nodes_expanded: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    heldout_error: Option<f64>,
    heldout_samples: u64,
}

fn summary<'a, T>(
    report: &'a RunReport<T>,
    budget: &'a PrecisionBudget,
    heldout_error: Option<f64>,
    heldout_samples: u64,
) -> RunSummary<'a> {
    let (outcome, reason, certificate) = match &report.outcome {
        Outcome::Accepted { certificate, .. } => ("accepted", None, Some(certificate)),
        Outcome::IDontKnow { reason } => ("i_dont_know", Some(reason.as_str()), None),
    };
    RunSummary {
        outcome,
        reason,
        certificate,
        budget,
        nodes_expanded: report.nodes_expanded,
        heldout_error,
        heldout_samples,
    }
}

#[derive(Serialize)]
struct CertificateFile<'a> {
    certificate: &'a Certificate,
}

#[derive(Serialize)]
struct GraphFile {
    #[serde(flatten)]
    graph: pacr_core::graph::GraphDocument,
    evs: Vec<String>,
}

pub fn run(a: RunArgs) -> Result<ExitCode> {
    let cfg = load_config(&a.config, &a.overrides)?;
    let result = config::run_config(&cfg)?;
    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let prov = Provenance::new(&cfg);
    let out = |name: &str| a.out.join(name);
    let summary = match &result.artifacts {
        RunArtifacts::BottomUp(r) => {
            write_jsonl(&out("events.jsonl"), &prov, &r.events)?;
            if let Outcome::Accepted { result: d, certificate } = &r.outcome {
                let file = GraphFile {
                    graph: d.graph.to_document(),
                    evs: d.evs.iter().map(print_function).collect(),
                };
                write_json(&out("graph.json"), &prov, &file)?;
                write_json(&out("certificate.json"), &prov, &CertificateFile { certificate })?;
            }
            summary(r, &result.budget, result.heldout_error, result.heldout_samples)
        }
        RunArtifacts::TopDown(r) => {
            write_jsonl(&out("events.jsonl"), &prov, &r.events)?;
            if let Outcome::Accepted { result: g, certificate } = &r.outcome {
                let text = format!(
                    "{}# entry: {}\n{}",
                    prov.comment_lines(),
                    g.entry,
                    print_program(&g.program)
                );
                write_text(&out("program.pacl"), &text)?;
                write_json(&out("certificate.json"), &prov, &CertificateFile { certificate })?;
            }
            summary(r, &result.budget, result.heldout_error, result.heldout_samples)
        }
    };
    write_json(&out("outcome.json"), &prov, &summary)?;

    match summary.certificate {
        Some(c) => {
            println!(
                "accepted: k = {}, m = {}, epsilon = {}, delta = {}",
                c.k, c.m, c.epsilon, c.delta
            );
            if let Some(e) = summary.heldout_error {
                println!("held-out error = {e} over {} samples", summary.heldout_samples);
            }
            Ok(ExitCode::SUCCESS)
        }
        None => {
            println!("I don't know: {}", summary.reason.unwrap_or_default());
            Ok(ExitCode::from(EXIT_I_DONT_KNOW))
        }
    }
}

pub fn validate_bounds(a: BoundsArgs) -> Result<ExitCode> {
    let cfg = load_config(&a.config, &a.overrides)?;
    let report = config::validate_bounds(&cfg)?;
    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let prov = Provenance::new(&cfg);
    let (header, rows) = report.csv();
    write_csv(&a.out.join(format!("{}.csv", cfg.task)), &prov, &header, &rows)?;
    write_json(&a.out.join(format!("{}.json", cfg.task)), &prov, &SummaryOf(&report))?;
    match &report {
        config::BoundsReport::Trials(r) => {
            println!(
                "{}: {} of {} trials kept a proposal with error > {} (rate {:.4}, tolerance {:.4}), m = {}",
                r.experiment, r.bad_survivals, r.trial_count, r.epsilon, r.bad_survival_rate, r.tolerance, r.m
            );
            if let Some(c) = r.vacuous_control_survived {
                println!("uncalled helper survived in every trial: {c}");
            }
        }
        config::BoundsReport::Decay(r) => {
            for row in &r.rows {
                println!(
                    "k = {:>3}  empirical = {:.5}  exact = {:.5}  approx = {:.5}  tolerance = {:.5}  {}",
                    row.k,
                    row.empirical,
                    row.exact,
                    row.approx,
                    row.tolerance,
                    if row.within { "ok" } else { "OUT" }
                );
            }
        }
    }
    if report.passed() {
        println!("all checks passed");
        Ok(ExitCode::SUCCESS)
    } else {
        println!("checks FAILED");
        Ok(ExitCode::from(1))
    }
}

/// The JSON summary: everything except the per-trial records, which are
/// in the CSV.
struct SummaryOf<'a>(&'a config::BoundsReport);

impl Serialize for SummaryOf<'_> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut v = serde_json::to_value(self.0).map_err(serde::ser::Error::custom)?;
        if let Some(obj) = v.as_object_mut() {
            obj.remove("trials");
        }
        v.serialize(s)
    }
}

#[derive(Serialize)]
struct DecayLine {
    k: u64,
    exact: f64,
    approx: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    empirical: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    within: Option<bool>,
}

pub fn chain_decay(a: DecayArgs) -> Result<ExitCode> {
    let mut lines = Vec::new();
    let mut passed = true;
    if let Some(trials) = a.trials {
        if trials == 0 {
            bail!("--trials must be at least 1");
        }
        let r = run_decay_experiment(a.epsilon, &a.k_values, trials, a.seed).map_err(anyhow::Error::msg)?;
        passed = r.passed;
        lines.extend(r.rows.iter().map(|row| DecayLine {
            k: row.k,
            exact: row.exact,
            approx: row.approx,
            empirical: Some(row.empirical),
            within: Some(row.within),
        }));
    } else {
        for &k in &a.k_values {
            let c = stats::chain_success(&vec![a.epsilon; k as usize])?;
            lines.push(DecayLine {
                k,
                exact: c.exact,
                approx: c.approx,
                empirical: None,
                within: None,
            });
        }
    }
    if a.json {
        println!("{}", serde_json::to_string(&lines)?);
    } else {
        for l in &lines {
            print!("k = {:>3}  exact = {:.5}  approx = {:.5}", l.k, l.exact, l.approx);
            match l.empirical {
                Some(e) => println!("  empirical = {e:.5}"),
                None => println!(),
            }
        }
    }
    Ok(if passed { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

pub fn eval(a: EvalArgs) -> Result<ExitCode> {
    let text = fs::read_to_string(&a.file).with_context(|| format!("reading {}", a.file.display()))?;
    let program = parse_program(&text).with_context(|| format!("in {}", a.file.display()))?;
    program.validate()?;
    let args = a
        .args
        .iter()
        .map(|s| parse_value(s).map_err(|e| anyhow::anyhow!("argument `{s}`: {e}")))
        .collect::<Result<Vec<_>>>()?;
    let value = dsl::eval_function(&program, &a.function, args, a.fuel)?;
    println!("{value}");
    Ok(ExitCode::SUCCESS)
}
