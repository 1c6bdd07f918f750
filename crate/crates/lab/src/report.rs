//! Run reports and their JSON, CSV and text renderings.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use sr_core::bell::Estimate;

use crate::config::{ExperimentConfig, Format};
use crate::error::LabError;
use crate::run::{self, ExperimentResult};

pub const TOOL: &str = "sr-lab";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// A self-contained record of one run: the config echo is enough to replay it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub tool: String,
    pub version: String,
    pub config: ExperimentConfig,
    pub result: ExperimentResult,
    /// Wall-clock duration; left out unless timing was requested, so reports
    /// of the same config stay byte-identical.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub elapsed_ms: Option<f64>,
}

pub fn run_experiment(config: ExperimentConfig) -> Result<RunReport, LabError> {
    let result = run::execute(&config)?;
    Ok(RunReport { tool: String::from(TOOL), version: String::from(VERSION), config, result, elapsed_ms: None })
}

pub fn emit_report(r: &RunReport, format: Format) -> Result<Vec<u8>, LabError> {
    match format {
        Format::Json => {
            let mut out = serde_json::to_vec_pretty(r).map_err(|e| LabError::Format(e.to_string()))?;
            out.push(b'\n');
            Ok(out)
        }
        Format::Csv => emit_csv(&r.result),
        Format::Text => Ok(emit_text(r).into_bytes()),
    }
}

pub fn parse_report(bytes: &[u8]) -> Result<RunReport, LabError> {
    serde_json::from_slice(bytes).map_err(|e| LabError::Format(e.to_string()))
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn axis(v: [f64; 3]) -> String {
    format!("{} {} {}", v[0], v[1], v[2])
}

fn emit_csv(result: &ExperimentResult) -> Result<Vec<u8>, LabError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| LabError::Format(e.to_string());
    match result {
        ExperimentResult::Chsh(r) => {
            w.write_record([
                "pair", "alice", "bob", "trials", "detected_pairs", "detection_rate", "e_detected", "e_detected_stderr",
                "e_full", "e_full_stderr", "e_quantum",
            ])
            .map_err(csv_err)?;
            for p in &r.pairs {
                w.write_record([
                    p.pair.label().to_string(),
                    axis(p.alice.vector()),
                    axis(p.bob.vector()),
                    p.trials.to_string(),
                    p.detected_pairs.to_string(),
                    p.detection_rate.to_string(),
                    opt(p.detected.map(|e| e.value)),
                    opt(p.detected.map(|e| e.stderr)),
                    p.full.value.to_string(),
                    p.full.stderr.to_string(),
                    p.quantum.to_string(),
                ])
                .map_err(csv_err)?;
            }
            let trials: u64 = r.pairs.iter().map(|p| p.trials).sum();
            let detected: u64 = r.pairs.iter().map(|p| p.detected_pairs).sum();
            w.write_record([
                String::from("S"),
                String::new(),
                String::new(),
                trials.to_string(),
                detected.to_string(),
                (detected as f64 / trials.max(1) as f64).to_string(),
                opt(r.s_detected.map(|e| e.value)),
                opt(r.s_detected.map(|e| e.stderr)),
                r.s_full.value.to_string(),
                r.s_full.stderr.to_string(),
                r.s_quantum.to_string(),
            ])
            .map_err(csv_err)?;
        }
        ExperimentResult::Tally(t) => {
            w.write_record(["i", "N", "N0", "N_F"]).map_err(csv_err)?;
            for c in &t.counts.cells {
                w.write_record([c.cell.to_string(), c.n.to_string(), c.n0.to_string(), c.n_f.to_string()]).map_err(csv_err)?;
            }
        }
        ExperimentResult::Ghz(g) => {
            w.write_record([
                "context", "required_parity", "trials", "detected", "detection_rate", "parity_rate_detected",
                "parity_rate_full", "quantum_parity", "all_contexts_satisfied",
            ])
            .map_err(csv_err)?;
            for c in &g.contexts {
                w.write_record([
                    c.context.clone(),
                    c.required_parity.to_string(),
                    c.trials.to_string(),
                    c.detected.to_string(),
                    c.detection_rate.to_string(),
                    opt(c.parity_rate_detected),
                    c.parity_rate_full.to_string(),
                    c.quantum_parity.to_string(),
                    c.all_contexts_satisfied.to_string(),
                ])
                .map_err(csv_err)?;
            }
        }
        other => {
            return Err(LabError::Format(format!("{} results are not tabular; use json or text", kind_of(other))));
        }
    }
    w.into_inner().map_err(|e| LabError::Format(e.to_string()))
}

fn kind_of(r: &ExperimentResult) -> &'static str {
    match r {
        ExperimentResult::Chsh(_) => "chsh",
        ExperimentResult::Ghz(_) => "ghz",
        ExperimentResult::Pc(_) => "pc",
        ExperimentResult::MerminBruteforce(_) => "mermin-bruteforce",
        ExperimentResult::Tally(_) => "tally",
        ExperimentResult::Measure(_) => "measure",
        ExperimentResult::Fapp(_) => "fapp",
        ExperimentResult::Recognize(_) => "recognize",
    }
}

fn est(e: Option<Estimate>) -> String {
    match e {
        Some(e) => format!("{:+.6} ± {:.6}", e.value, e.stderr),
        None => String::from("n/a"),
    }
}

fn emit_text(r: &RunReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{} {}  experiment={}  trials={}  seed={}", r.tool, r.version, kind_of(&r.result), r.config.trials, r.config.seed);
    match &r.result {
        ExperimentResult::Chsh(c) => {
            let _ = writeln!(s, "model {}", c.model);
            let _ = writeln!(s, "{:<7} {:>10} {:>24} {:>24} {:>10}", "pair", "det.rate", "E detected", "E full", "E quantum");
            for p in &c.pairs {
                let _ = writeln!(
                    s,
                    "{:<7} {:>10.6} {:>24} {:>24} {:>+10.6}",
                    p.pair.label(),
                    p.detection_rate,
                    est(p.detected),
                    est(Some(p.full)),
                    p.quantum
                );
            }
            let _ = writeln!(s, "S detected {}", est(c.s_detected));
            let _ = writeln!(s, "S full     {}", est(Some(c.s_full)));
            let _ = writeln!(s, "S quantum  {:+.9}", c.s_quantum);
            let v = c.s_trial_values;
            let _ = writeln!(s, "s(lambda): -2 x {}, +2 x {}, other x {}", v.minus_two, v.plus_two, v.other);
        }
        ExperimentResult::Ghz(g) => {
            let _ = writeln!(s, "model {}", g.model);
            let _ = writeln!(s, "{:<8} {:>8} {:>10} {:>14} {:>10} {:>8}", "context", "parity", "det.rate", "parity|det", "parity all", "quantum");
            for c in &g.contexts {
                let pd = c.parity_rate_detected.map(|p| format!("{p:.6}")).unwrap_or_else(|| String::from("n/a"));
                let _ = writeln!(
                    s,
                    "{:<8} {:>+8} {:>10.6} {:>14} {:>10.6} {:>+8.3}",
                    c.context, c.required_parity, c.detection_rate, pd, c.parity_rate_full, c.quantum_parity
                );
            }
        }
        ExperimentResult::Pc(p) => {
            let r = &p.report;
            let _ = writeln!(s, "model {}  direction {}", p.model, axis(r.direction.vector()));
            let _ = writeln!(s, "pair detection rate {:.6} ({} of {})", r.pair_detection_rate, r.detected_pairs, r.trials);
            let a = r.anticorrelation_rate_detected.map(|x| x.to_string()).unwrap_or_else(|| String::from("n/a"));
            let _ = writeln!(s, "anticorrelation among detected pairs {a}");
        }
        ExperimentResult::MerminBruteforce(m) => {
            let r = &m.report;
            let _ = writeln!(s, "satisfiable {}  ({} of {} assignments, best meets {} of 4)", r.satisfiable, r.satisfying_assignments, r.assignment_count, r.max_satisfied);
            let _ = writeln!(s, "quantum parities {:?}", m.quantum_parities);
        }
        ExperimentResult::Tally(t) => {
            let e = &t.estimates;
            let _ = writeln!(s, "model {}  observable {}", t.model, t.observable);
            let _ = writeln!(s, "N {}  N0 {}  N_F {}  cells {}", t.counts.n, t.counts.n0, t.counts.n_f_total(), t.counts.cells.len());
            let _ = writeln!(s, "p_total {:.6} ± {:.6}", e.p_total, e.stderr_total);
            let _ = writeln!(s, "p_detect {:.6} ± {:.6}", e.p_detect, e.stderr_detect);
            match (e.p_conditional, e.stderr_conditional) {
                (Some(p), Some(se)) => {
                    let _ = writeln!(s, "p_conditional {p:.6} ± {se:.6}");
                }
                _ => {
                    let _ = writeln!(s, "p_conditional n/a (no detections)");
                }
            }
            if let Some(g) = t.fair_sampling {
                let _ = writeln!(s, "window frequency detected {:.6}, all objects {:.6}, z = {:.2}", g.detected_frequency, g.full_frequency, g.z_score);
            }
            let _ = writeln!(s, "identities hold {}", t.identities_hold);
            if let Some(d) = t.dichotomy_holds {
                let _ = writeln!(s, "dichotomy holds {d}");
            }
        }
        ExperimentResult::Measure(m) => {
            let _ = writeln!(s, "branches {}  final norm {:.12}", m.branches, m.final_norm);
            let _ = writeln!(s, "detected weight {:.6}  undetected weight {:.6}", m.detected_weight, m.undetected_weight);
            fapp_text(&mut s, &m.fapp);
        }
        ExperimentResult::Fapp(f) => fapp_text(&mut s, f),
        ExperimentResult::Recognize(r) => {
            let _ = writeln!(s, "support probability {:.6}", r.support_probability);
            let _ = writeln!(s, "detected {} of {}: {} answered 1, {} answered 0", r.detected, r.trials, r.answered_one, r.answered_zero);
            let _ = writeln!(s, "recognized {}", r.recognized);
        }
    }
    if let Some(ms) = r.elapsed_ms {
        let _ = writeln!(s, "elapsed {ms:.1} ms");
    }
    s
}

fn fapp_text(s: &mut String, f: &sr_core::measurement::FappReport) {
    let _ = writeln!(s, "schmidt weights {:?}", f.schmidt_weights);
    let _ = writeln!(s, "max local probability difference {:.3e}", f.local_prob_max_diff);
    let _ = writeln!(s, "support probability: pure {:.9}, mixture {:.9}", f.support_prob_pure, f.support_prob_mixture);
}
