//! Dispatch from configs to the core experiments.

use std::ops::Range;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sr_core::bell::{
    chsh_pair_range, ghz_context_range, ghz_results, mermin_bruteforce, pc_range, quantum_parities, ghz_state, ChshReport,
    ChshSettings, GhzContextResult, GhzContextualModel, GhzTally, MerminReport, PairRole, PairTally, ParityScenario,
    PcReport, PcTally,
};
use sr_core::ensemble::{
    estimate_probabilities, fair_sampling_gap, singlet_reference_model, tally_range, AlwaysDetectModel, DetectionModel,
    FairSamplingGap, MeasurementSetting, ProbabilityEstimates, SingletModel, TableModel, TallyCounts,
};
use sr_core::linalg::{born_probability, projector};
use sr_core::measurement::{
    evolve_premeasurement, fapp_compare, recognize_state, select_detected, simulate_support_tests, FappReport,
};
use sr_core::statespace::{Observable, PropertyWindow};
use sr_core::ensemble::Outcome;

use crate::config::{self, AnglesSpec, Experiment, ExperimentConfig, ModelSpec, ObservableSpec};
use crate::error::LabError;

/// Trials per parallel work item. Tallies are integer counts, so the split
/// never changes a result.
pub const CHUNK: u64 = 1 << 15;

fn par_ranges<T, F>(trials: u64, f: F) -> sr_core::Result<Vec<T>>
where
    T: Send,
    F: Fn(Range<u64>) -> sr_core::Result<T> + Sync,
{
    let chunks = trials.div_ceil(CHUNK);
    (0..chunks).into_par_iter().map(|k| f(k * CHUNK..((k + 1) * CHUNK).min(trials))).collect()
}

enum LabModel {
    Singlet(SingletModel),
    AlwaysDetect(AlwaysDetectModel),
    Ghz(GhzContextualModel),
    Table(TableModel),
}

macro_rules! with_model {
    ($model:expr, $m:ident => $body:expr) => {
        match $model {
            LabModel::Singlet($m) => $body,
            LabModel::AlwaysDetect($m) => $body,
            LabModel::Ghz($m) => $body,
            LabModel::Table($m) => $body,
        }
    };
}

fn build_model(spec: Option<&ModelSpec>, default: &str, scenario: ParityScenario) -> Result<LabModel, LabError> {
    match spec {
        None => named_model(default, scenario),
        Some(ModelSpec::Named(name)) => named_model(name, scenario),
        Some(ModelSpec::Table(t)) => config::table_model(t).map(LabModel::Table).map_err(|e| LabError::config("model", e)),
    }
}

fn named_model(name: &str, scenario: ParityScenario) -> Result<LabModel, LabError> {
    match name {
        "singlet-reference" => Ok(LabModel::Singlet(singlet_reference_model())),
        "always-detect" => Ok(LabModel::AlwaysDetect(AlwaysDetectModel)),
        "ghz-contextual" => Ok(LabModel::Ghz(GhzContextualModel::new(scenario))),
        other => Err(LabError::config("model", format!("unknown model `{other}`"))),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GhzRun {
    pub model: String,
    pub contexts: Vec<GhzContextResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcRun {
    pub model: String,
    #[serde(flatten)]
    pub report: PcReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MerminRun {
    #[serde(flatten)]
    pub report: MerminReport,
    /// Exact parities of `(|000> + |111>)/sqrt(2)` for the same contexts.
    pub quantum_parities: [f64; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TallyRun {
    pub model: String,
    pub observable: String,
    pub counts: TallyCounts,
    pub estimates: ProbabilityEstimates,
    /// `None` when nothing was detected.
    pub fair_sampling: Option<FairSamplingGap>,
    pub identities_hold: bool,
    /// Checked only for deterministic models.
    pub dichotomy_holds: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureRun {
    pub branches: usize,
    pub final_norm: f64,
    pub detected_weight: f64,
    pub undetected_weight: f64,
    /// Amplitudes of the selected state as `[re, im]`, system index major.
    pub selected_state: Vec<[f64; 2]>,
    pub selected_dims: Vec<usize>,
    pub fapp: FappReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecognizeRun {
    pub support_probability: f64,
    pub trials: u64,
    pub detected: u64,
    pub answered_one: u64,
    pub answered_zero: u64,
    pub recognized: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentResult {
    Chsh(ChshReport),
    Ghz(GhzRun),
    Pc(PcRun),
    MerminBruteforce(MerminRun),
    Tally(TallyRun),
    Measure(MeasureRun),
    Fapp(FappReport),
    Recognize(RecognizeRun),
}

fn rt(path: &str) -> impl Fn(sr_core::Error) -> LabError + '_ {
    move |e| LabError::runtime(path, e)
}

/// Runs one experiment. The result depends only on the config.
pub fn execute(cfg: &ExperimentConfig) -> Result<ExperimentResult, LabError> {
    cfg.validate()?;
    let (trials, seed) = (cfg.trials, cfg.seed);
    match &cfg.experiment {
        Experiment::Chsh { model, angles, order } => {
            let settings = match angles {
                Some(a) => a.resolve().map_err(|e| LabError::config("angles", e))?,
                None => AnglesSpec::Preset(String::from("chsh-optimal")).resolve().map_err(|e| LabError::config("angles", e))?,
            };
            let order = order.unwrap_or(PairRole::ALL);
            let model = build_model(model.as_ref(), "singlet-reference", ParityScenario::standard())?;
            with_model!(&model, m => run_chsh_parallel(m, &settings, &order, trials, seed)).map(ExperimentResult::Chsh)
        }
        Experiment::Ghz { model, contexts, parities } => {
            let scenario = config::scenario(contexts, parities).map_err(|e| LabError::config("contexts", e))?;
            let model = build_model(model.as_ref(), "ghz-contextual", scenario)?;
            let contexts = with_model!(&model, m => run_ghz_parallel(m, &scenario, trials, seed))?;
            Ok(ExperimentResult::Ghz(GhzRun { model: with_model!(&model, m => m.name().to_string()), contexts }))
        }
        Experiment::Pc { model, direction } => {
            let axis = direction.resolve().map_err(|e| LabError::config("direction", e))?;
            let model = build_model(model.as_ref(), "singlet-reference", ParityScenario::standard())?;
            let tally = with_model!(&model, m => {
                par_ranges(trials, |r| pc_range(m, axis, seed, r)).map_err(rt("experiment"))?.iter().fold(PcTally::default(), |mut acc, t| {
                    acc.merge(t);
                    acc
                })
            });
            Ok(ExperimentResult::Pc(PcRun {
                model: with_model!(&model, m => m.name().to_string()),
                report: PcReport::from_tally(axis, &tally),
            }))
        }
        Experiment::MerminBruteforce { contexts, parities } => {
            let scenario = config::scenario(contexts, parities).map_err(|e| LabError::config("contexts", e))?;
            Ok(ExperimentResult::MerminBruteforce(MerminRun {
                report: mermin_bruteforce(&scenario),
                quantum_parities: quantum_parities(&ghz_state(), &scenario).map_err(rt("contexts"))?,
            }))
        }
        Experiment::Tally { model, context, observable, window, includes_a0 } => {
            let context = context
                .iter()
                .enumerate()
                .map(|(i, s)| s.resolve().map_err(|e| LabError::config(format!("context[{i}]"), e)))
                .collect::<Result<Vec<_>, _>>()?;
            let obs = observable
                .clone()
                .unwrap_or(ObservableSpec::Preset(String::from("dichotomic")))
                .resolve()
                .map_err(|e| LabError::config("observable", e))?;
            let window = PropertyWindow::new(&obs, window, *includes_a0).map_err(|e| LabError::config("window", e.to_string()))?;
            let model = build_model(model.as_ref(), "singlet-reference", ParityScenario::standard())?;
            with_model!(&model, m => run_tally(m, &context, &obs, &window, trials, seed)).map(ExperimentResult::Tally)
        }
        Experiment::Measure { branching } => {
            let b = branching.resolve().map_err(|e| LabError::config("branching", e))?;
            let chi = evolve_premeasurement(&b).map_err(rt("branching"))?;
            let selected = select_detected(&chi, &b).map_err(rt("branching"))?;
            let dims = b.dims();
            let fapp = fapp_compare(&selected, dims).map_err(rt("branching"))?;
            Ok(ExperimentResult::Measure(MeasureRun {
                branches: b.branches(),
                final_norm: chi.amplitudes().iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt(),
                detected_weight: b.detected_weight(),
                undetected_weight: b.undetected_weight(),
                selected_state: selected.amplitudes().iter().map(|z| [z.re, z.im]).collect(),
                selected_dims: vec![dims.0, dims.1],
                fapp,
            }))
        }
        Experiment::Fapp { branching, state } => {
            let (s_f, dims) = match (branching, state) {
                (Some(b), None) => {
                    let b = b.resolve().map_err(|e| LabError::config("branching", e))?;
                    let chi = evolve_premeasurement(&b).map_err(rt("branching"))?;
                    (select_detected(&chi, &b).map_err(rt("branching"))?, b.dims())
                }
                (None, Some(s)) => {
                    let v = s.resolve().map_err(|e| LabError::config("state", e))?;
                    let dims = match v.dims() {
                        [a, b] => (*a, *b),
                        _ => return Err(LabError::config("state.dims", "a bipartite state needs two factor dimensions")),
                    };
                    (v, dims)
                }
                _ => return Err(LabError::config("fapp", "give exactly one of `branching` and `state`")),
            };
            fapp_compare(&s_f, dims).map(ExperimentResult::Fapp).map_err(rt("experiment"))
        }
        Experiment::Recognize { prepared, candidate, detect_probability, min_detected } => {
            let prepared = prepared.resolve().map_err(|e| LabError::config("prepared", e))?;
            let candidate = candidate.resolve().map_err(|e| LabError::config("candidate", e))?;
            if prepared.dim() != candidate.dim() {
                return Err(LabError::config("candidate", "dimension differs from the prepared state"));
            }
            let p = born_probability(&prepared, &projector(&candidate).map_err(rt("candidate"))?).map_err(rt("candidate"))?;
            let outcomes = simulate_support_tests(&prepared, &candidate, *detect_probability, trials, seed)
                .map_err(|e| LabError::config("detect_probability", e.to_string()))?;
            let count = |f: fn(&Outcome) -> bool| outcomes.iter().filter(|o| f(o)).count() as u64;
            Ok(ExperimentResult::Recognize(RecognizeRun {
                support_probability: p,
                trials,
                detected: count(|o| o.is_registered()),
                answered_one: count(|o| *o == Outcome::Value(1.0)),
                answered_zero: count(|o| *o == Outcome::Value(0.0)),
                recognized: recognize_state(&outcomes, *min_detected),
            }))
        }
    }
}

/// CHSH with every sub-ensemble split into parallel chunks.
pub fn run_chsh_parallel<M: DetectionModel + Sync>(
    model: &M,
    settings: &ChshSettings,
    order: &[PairRole; 4],
    trials: u64,
    seed: u64,
) -> Result<ChshReport, LabError> {
    let mut seen = [false; 4];
    for r in order {
        seen[*r as usize] = true;
    }
    if seen.iter().any(|s| !s) {
        return Err(LabError::config("order", "must list each setting pair once"));
    }
    let mut tallies = [PairTally::default(); 4];
    for (slot, &role) in tallies.iter_mut().zip(order) {
        *slot = run_pair_parallel(model, settings, role, trials, seed)?;
    }
    ChshReport::assemble(model.name(), settings, order, &tallies).map_err(rt("experiment"))
}

/// One CHSH sub-ensemble, split into parallel chunks.
pub fn run_pair_parallel<M: DetectionModel + Sync>(
    model: &M,
    settings: &ChshSettings,
    role: PairRole,
    trials: u64,
    seed: u64,
) -> Result<PairTally, LabError> {
    let mut tally = PairTally::default();
    for part in par_ranges(trials, |r| chsh_pair_range(model, settings, role, seed, r)).map_err(rt("model"))? {
        tally.merge(&part);
    }
    Ok(tally)
}

pub fn run_ghz_parallel<M: DetectionModel + Sync>(
    model: &M,
    scenario: &ParityScenario,
    trials: u64,
    seed: u64,
) -> Result<Vec<GhzContextResult>, LabError> {
    let mut tallies = [GhzTally::default(); 4];
    for (k, slot) in tallies.iter_mut().enumerate() {
        for part in par_ranges(trials, |r| ghz_context_range(model, scenario, k, seed, r)).map_err(rt("model"))? {
            slot.merge(&part);
        }
    }
    ghz_results(scenario, &tallies).map_err(rt("experiment"))
}

fn run_tally<M: DetectionModel + Sync>(
    model: &M,
    context: &[MeasurementSetting],
    obs: &Observable,
    window: &PropertyWindow<'_>,
    trials: u64,
    seed: u64,
) -> Result<TallyRun, LabError> {
    let mut counts = TallyCounts::new();
    for part in par_ranges(trials, |r| tally_range(model, context, window, seed, r)).map_err(rt("window"))? {
        counts.merge(&part);
    }
    let estimates = estimate_probabilities(&counts).map_err(rt("experiment"))?;
    let fair_sampling = match fair_sampling_gap(model, context, window, trials, seed) {
        Ok(g) => Some(g),
        Err(sr_core::Error::NoDetections) => None,
        Err(e) => return Err(LabError::runtime("experiment", e)),
    };
    Ok(TallyRun {
        model: model.name().to_string(),
        observable: obs.label().to_string(),
        identities_hold: counts.consistent() && counts.aggregate_identity_holds() && counts.cell_identity_holds(),
        dichotomy_holds: model.deterministic().then(|| counts.dichotomy_holds()),
        counts,
        estimates,
        fair_sampling,
    })
}
