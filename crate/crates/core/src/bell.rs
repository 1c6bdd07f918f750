//! Nonlocality arguments as experiments: perfect correlation, CHSH and the
//! three-party GHZ/Mermin parity scenario.
//!
//! Each scenario is evaluated three ways: the exact quantum oracle, the
//! detected sub-ensemble of a hidden-variable model, and the same model's full
//! ensemble of predetermined values. CHSH uses four disjoint sub-ensembles,
//! one per setting pair.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::ops::Range;

use rand_core::RngCore;

use crate::ensemble::{ensure_supported, measure_context, DetectionModel};
pub use crate::ensemble::{Axis, MeasurementSetting, Party, Pauli};
use crate::error::{Error, Result};
use crate::linalg::{born_probability, c, check_dim, qubit, Projector, StateVector, ZERO};
use crate::rng::{self, domain};

/// `(|01> - |10>)/sqrt(2)`.
pub fn singlet_state() -> StateVector {
    let h = core::f64::consts::FRAC_1_SQRT_2;
    StateVector::with_dims(alloc::vec![ZERO, c(h, 0.0), c(-h, 0.0), ZERO], alloc::vec![2, 2])
        .expect("singlet is normalized")
}

/// `(|000> + |111>)/sqrt(2)`.
pub fn ghz_state() -> StateVector {
    let h = core::f64::consts::FRAC_1_SQRT_2;
    let mut amps = alloc::vec![ZERO; 8];
    amps[0] = c(h, 0.0);
    amps[7] = c(h, 0.0);
    StateVector::with_dims(amps, alloc::vec![2, 2, 2]).expect("GHZ state is normalized")
}

/// Exact `<(n_1.sigma) ⊗ ... ⊗ (n_k.sigma)>` on a `k`-qubit state, summed over
/// the `2^k` joint outcomes with Born probabilities.
pub fn quantum_correlation(state: &StateVector, axes: &[Axis]) -> Result<f64> {
    let k = axes.len();
    check_dim(1usize << k, state.dim())?;
    let mut total = 0.0;
    for outcome in 0..(1u32 << k) {
        let mut sign = 1.0;
        let mut proj: Option<Projector> = None;
        for (q, axis) in axes.iter().enumerate() {
            let up = outcome & (1 << q) == 0;
            if !up {
                sign = -sign;
            }
            let p = qubit::spin_projector(axis.vector(), up);
            proj = Some(match proj {
                None => p,
                Some(acc) => acc.tensor(&p),
            });
        }
        let p = proj.expect("at least one axis");
        total += sign * born_probability(state, &p)?;
    }
    Ok(total)
}

/// Alice's `a, a'` and Bob's `b, b'`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ChshSettings {
    pub a: Axis,
    pub a_prime: Axis,
    pub b: Axis,
    pub b_prime: Axis,
}

impl ChshSettings {
    /// In-plane angles in degrees.
    pub fn from_degrees(a: f64, a_prime: f64, b: f64, b_prime: f64) -> Self {
        Self {
            a: Axis::in_plane_degrees(a),
            a_prime: Axis::in_plane_degrees(a_prime),
            b: Axis::in_plane_degrees(b),
            b_prime: Axis::in_plane_degrees(b_prime),
        }
    }

    /// `a = 0°, a' = 90°, b = 45°, b' = 315°`: `S = -2 sqrt(2)` on the singlet.
    pub fn optimal() -> Self {
        Self::from_degrees(0.0, 90.0, 45.0, 315.0)
    }
}

/// One of the four CHSH setting pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum PairRole {
    #[cfg_attr(feature = "serde", serde(rename = "a,b"))]
    AB,
    #[cfg_attr(feature = "serde", serde(rename = "a,b'"))]
    ABPrime,
    #[cfg_attr(feature = "serde", serde(rename = "a',b"))]
    APrimeB,
    #[cfg_attr(feature = "serde", serde(rename = "a',b'"))]
    APrimeBPrime,
}

impl PairRole {
    pub const ALL: [PairRole; 4] = [PairRole::AB, PairRole::ABPrime, PairRole::APrimeB, PairRole::APrimeBPrime];

    /// Coefficient in `S = E(a,b) + E(a,b') + E(a',b) - E(a',b')`.
    pub fn sign(self) -> f64 {
        if self == PairRole::APrimeBPrime {
            -1.0
        } else {
            1.0
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            PairRole::AB => "a,b",
            PairRole::ABPrime => "a,b'",
            PairRole::APrimeB => "a',b",
            PairRole::APrimeBPrime => "a',b'",
        }
    }

    fn stream(self) -> u64 {
        domain::CHSH + self as u64
    }

    pub fn alice(self, s: &ChshSettings) -> MeasurementSetting {
        let axis = match self {
            PairRole::AB | PairRole::ABPrime => s.a,
            PairRole::APrimeB | PairRole::APrimeBPrime => s.a_prime,
        };
        MeasurementSetting::new(Party::A, axis)
    }

    pub fn bob(self, s: &ChshSettings) -> MeasurementSetting {
        let axis = match self {
            PairRole::AB | PairRole::APrimeB => s.b,
            PairRole::ABPrime | PairRole::APrimeBPrime => s.b_prime,
        };
        MeasurementSetting::new(Party::B, axis)
    }
}

/// Exact `S` on a two-qubit state.
pub fn quantum_chsh(state: &StateVector, settings: &ChshSettings) -> Result<f64> {
    check_dim(4, state.dim())?;
    let mut s = 0.0;
    for role in PairRole::ALL {
        let e = quantum_correlation(state, &[role.alice(settings).axis, role.bob(settings).axis])?;
        s += role.sign() * e;
    }
    Ok(s)
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

/// Integer accumulator of one CHSH sub-ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PairTally {
    pub trials: u64,
    /// Both parties registered.
    pub detected: u64,
    /// Detected pairs with product `+1`.
    pub detected_plus: u64,
    /// All pairs whose predetermined product is `+1`.
    pub full_plus: u64,
    /// Objects with `s(lambda) = -2`.
    pub s_minus_two: u64,
    /// Objects with `s(lambda) = +2`.
    pub s_plus_two: u64,
    /// Objects with any other `s(lambda)`; zero for every `±1`-valued model.
    pub s_other: u64,
}

impl PairTally {
    pub fn merge(&mut self, o: &PairTally) {
        self.trials += o.trials;
        self.detected += o.detected;
        self.detected_plus += o.detected_plus;
        self.full_plus += o.full_plus;
        self.s_minus_two += o.s_minus_two;
        self.s_plus_two += o.s_plus_two;
        self.s_other += o.s_other;
    }
}

fn require_dichotomic(v: f64, model: &str) -> Result<f64> {
    if v == 1.0 || v == -1.0 {
        Ok(v)
    } else {
        Err(Error::Model(format!("model `{model}` produced non-dichotomic value {v}")))
    }
}

/// `A(a)B(b) + A(a)B(b') + A(a')B(b) - A(a')B(b')` from predetermined values.
pub fn chsh_trial_value<M: DetectionModel>(model: &M, micro: &M::Micro, settings: &ChshSettings) -> f64 {
    let a = model.value_map(micro, &MeasurementSetting::new(Party::A, settings.a));
    let ap = model.value_map(micro, &MeasurementSetting::new(Party::A, settings.a_prime));
    let b = model.value_map(micro, &MeasurementSetting::new(Party::B, settings.b));
    let bp = model.value_map(micro, &MeasurementSetting::new(Party::B, settings.b_prime));
    a * b + a * bp + ap * b - ap * bp
}

fn chsh_context(settings: &ChshSettings) -> [MeasurementSetting; 4] {
    [
        MeasurementSetting::new(Party::A, settings.a),
        MeasurementSetting::new(Party::A, settings.a_prime),
        MeasurementSetting::new(Party::B, settings.b),
        MeasurementSetting::new(Party::B, settings.b_prime),
    ]
}

/// Runs trials `range` of the sub-ensemble for `role`.
pub fn chsh_pair_range<M: DetectionModel>(
    model: &M,
    settings: &ChshSettings,
    role: PairRole,
    seed: u64,
    range: Range<u64>,
) -> Result<PairTally> {
    ensure_supported(model, &chsh_context(settings))?;
    let context = [role.alice(settings), role.bob(settings)];
    let mut tally = PairTally::default();
    for t in range {
        let mut rng = rng::trial_rng(seed, role.stream(), t);
        let micro = model.sample(&mut rng);
        let rec = measure_context(model, &micro, &context, &mut rng);
        let product = require_dichotomic(rec.full_product, model.name())?;
        tally.trials += 1;
        if product > 0.0 {
            tally.full_plus += 1;
        }
        if rec.detected {
            tally.detected += 1;
            if rec.product > 0.0 {
                tally.detected_plus += 1;
            }
        }
        let s = chsh_trial_value(model, &micro, settings);
        if s == 2.0 {
            tally.s_plus_two += 1;
        } else if s == -2.0 {
            tally.s_minus_two += 1;
        } else {
            tally.s_other += 1;
        }
    }
    Ok(tally)
}

/// Per-pair correlation estimates.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PairReport {
    pub pair: PairRole,
    pub alice: Axis,
    pub bob: Axis,
    pub trials: u64,
    pub detected_pairs: u64,
    pub detection_rate: f64,
    /// `None` when no pair was detected by both parties.
    pub detected: Option<Estimate>,
    pub full: Estimate,
    pub quantum: f64,
}

/// Counts of per-object `s(lambda)` over all four sub-ensembles.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrialValueCounts {
    pub minus_two: u64,
    pub plus_two: u64,
    pub other: u64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ChshReport {
    pub model: String,
    pub trials_per_pair: u64,
    pub pairs: Vec<PairReport>,
    /// `None` when some pair had no double detections.
    pub s_detected: Option<Estimate>,
    /// Mean of `s(lambda)` over every prepared object.
    pub s_full: Estimate,
    pub s_quantum: f64,
    pub s_trial_values: TrialValueCounts,
}

fn correlation(plus: u64, total: u64) -> Option<Estimate> {
    (total > 0).then(|| {
        let e = (2.0 * plus as f64 - total as f64) / total as f64;
        Estimate { value: e, stderr: libm::sqrt((1.0 - e * e).max(0.0) / total as f64) }
    })
}

impl ChshReport {
    /// Assembles a report from one tally per entry of `order`. The quantum
    /// column is the singlet oracle.
    pub fn assemble(model: &str, settings: &ChshSettings, order: &[PairRole; 4], tallies: &[PairTally; 4]) -> Result<Self> {
        let singlet = singlet_state();
        let mut pairs = Vec::with_capacity(4);
        let mut by_role: [Option<(Option<Estimate>, f64)>; 4] = [None; 4];
        let mut values = TrialValueCounts { minus_two: 0, plus_two: 0, other: 0 };
        for (&role, t) in order.iter().zip(tallies) {
            let (alice, bob) = (role.alice(settings).axis, role.bob(settings).axis);
            let quantum = quantum_correlation(&singlet, &[alice, bob])?;
            let detected = correlation(t.detected_plus, t.detected);
            by_role[role as usize] = Some((detected, quantum));
            values.minus_two += t.s_minus_two;
            values.plus_two += t.s_plus_two;
            values.other += t.s_other;
            pairs.push(PairReport {
                pair: role,
                alice,
                bob,
                trials: t.trials,
                detected_pairs: t.detected,
                detection_rate: if t.trials > 0 { t.detected as f64 / t.trials as f64 } else { 0.0 },
                detected,
                full: correlation(t.full_plus, t.trials).ok_or(Error::EmptyEnsemble)?,
                quantum,
            });
        }
        // Sums run in canonical pair order so the report order cannot change them.
        let mut s_det = Some((0.0, 0.0));
        let mut s_quantum = 0.0;
        for role in PairRole::ALL {
            let (detected, quantum) =
                by_role[role as usize].ok_or_else(|| Error::Model(String::from("CHSH order must list each setting pair once")))?;
            s_quantum += role.sign() * quantum;
            s_det = match (s_det, detected) {
                (Some((v, var)), Some(e)) => Some((v + role.sign() * e.value, var + e.stderr * e.stderr)),
                _ => None,
            };
        }
        let n = values.minus_two + values.plus_two;
        if values.other > 0 || n == 0 {
            return Err(Error::Model(format!("{} objects had s(lambda) outside {{-2, +2}}", values.other)));
        }
        let mean = 2.0 * (values.plus_two as f64 - values.minus_two as f64) / n as f64;
        let var = (4.0 - mean * mean).max(0.0);
        Ok(Self {
            model: String::from(model),
            trials_per_pair: tallies[0].trials,
            pairs,
            s_detected: s_det.map(|(v, var)| Estimate { value: v, stderr: libm::sqrt(var) }),
            s_full: Estimate { value: mean, stderr: libm::sqrt(var / n as f64) },
            s_quantum,
            s_trial_values: values,
        })
    }

    pub fn pair(&self, role: PairRole) -> Option<&PairReport> {
        self.pairs.iter().find(|p| p.pair == role)
    }

    /// Detected `S`, or `NoDetections` if a pair had no double detections.
    pub fn detected_s(&self) -> Result<Estimate> {
        self.s_detected.ok_or(Error::NoDetections)
    }
}

/// CHSH with four disjoint sub-ensembles of `trials` objects each, reported
/// in `order`. Sub-ensemble streams are keyed by pair, not by position.
pub fn run_chsh<M: DetectionModel>(
    model: &M,
    settings: &ChshSettings,
    order: &[PairRole; 4],
    trials: u64,
    seed: u64,
) -> Result<ChshReport> {
    if trials == 0 {
        return Err(Error::EmptyEnsemble);
    }
    let mut seen = [false; 4];
    for r in order {
        seen[*r as usize] = true;
    }
    if seen.iter().any(|s| !s) {
        return Err(Error::Model(String::from("CHSH order must list each setting pair once")));
    }
    let mut tallies = [PairTally::default(); 4];
    for (slot, &role) in tallies.iter_mut().zip(order) {
        *slot = chsh_pair_range(model, settings, role, seed, 0..trials)?;
    }
    ChshReport::assemble(model.name(), settings, order, &tallies)
}

/// Same-direction measurements on both wings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PcTally {
    pub trials: u64,
    pub detected: u64,
    pub anticorrelated: u64,
}

impl PcTally {
    pub fn merge(&mut self, o: &PcTally) {
        self.trials += o.trials;
        self.detected += o.detected;
        self.anticorrelated += o.anticorrelated;
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PcReport {
    pub direction: Axis,
    pub trials: u64,
    pub detected_pairs: u64,
    pub pair_detection_rate: f64,
    /// Fraction of doubly-detected pairs with product `-1`; `None` if none detected.
    pub anticorrelation_rate_detected: Option<f64>,
}

impl PcReport {
    pub fn from_tally(direction: Axis, t: &PcTally) -> Self {
        Self {
            direction,
            trials: t.trials,
            detected_pairs: t.detected,
            pair_detection_rate: if t.trials > 0 { t.detected as f64 / t.trials as f64 } else { 0.0 },
            anticorrelation_rate_detected: (t.detected > 0).then(|| t.anticorrelated as f64 / t.detected as f64),
        }
    }
}

pub fn pc_range<M: DetectionModel>(model: &M, direction: Axis, seed: u64, range: Range<u64>) -> Result<PcTally> {
    let context = [MeasurementSetting::new(Party::A, direction), MeasurementSetting::new(Party::B, direction)];
    ensure_supported(model, &context)?;
    let mut tally = PcTally::default();
    for t in range {
        let mut rng = rng::trial_rng(seed, domain::PC, t);
        let micro = model.sample(&mut rng);
        let rec = measure_context(model, &micro, &context, &mut rng);
        tally.trials += 1;
        if rec.detected {
            tally.detected += 1;
            if rec.product < 0.0 {
                tally.anticorrelated += 1;
            }
        }
    }
    Ok(tally)
}

/// Perfect-correlation check along one direction.
pub fn run_singlet_pc<M: DetectionModel>(model: &M, direction: Axis, trials: u64, seed: u64) -> Result<PcReport> {
    if trials == 0 {
        return Err(Error::EmptyEnsemble);
    }
    Ok(PcReport::from_tally(direction, &pc_range(model, direction, seed, 0..trials)?))
}

/// Three parties, four contexts of `X`/`Y` settings, and the parity each
/// context's product must take.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ParityScenario {
    pub contexts: [[Pauli; 3]; 4],
    pub parities: [i8; 4],
}

impl ParityScenario {
    /// `XXX = +1`, `XYY = YXY = YYX = -1`: the GHZ state's parities.
    pub fn standard() -> Self {
        use Pauli::{X, Y};
        Self { contexts: [[X, X, X], [X, Y, Y], [Y, X, Y], [Y, Y, X]], parities: [1, -1, -1, -1] }
    }

    pub fn new(contexts: [[Pauli; 3]; 4], parities: [i8; 4]) -> Result<Self> {
        if contexts.iter().flatten().any(|p| *p == Pauli::Z) {
            return Err(Error::Model(String::from("parity contexts use only X and Y")));
        }
        if parities.iter().any(|p| *p != 1 && *p != -1) {
            return Err(Error::Model(String::from("required parities must be +1 or -1")));
        }
        Ok(Self { contexts, parities })
    }

    pub fn label(&self, k: usize) -> String {
        self.contexts[k].iter().map(|p| format!("{p:?}")).collect()
    }

    pub fn settings(&self, k: usize) -> [MeasurementSetting; 3] {
        let parties = [Party::A, Party::B, Party::C];
        core::array::from_fn(|q| MeasurementSetting::new(parties[q], Axis::from_pauli(self.contexts[k][q])))
    }

    fn context_index(&self, context: &[MeasurementSetting]) -> Option<usize> {
        if context.len() != 3 {
            return None;
        }
        (0..4).find(|&k| {
            self.settings(k)
                .iter()
                .zip(context)
                .all(|(want, got)| want.party == got.party && want.axis.approx_eq(&got.axis))
        })
    }
}

/// Local value assignment: bit `2*party + (0 for X, 1 for Y)`, set means `-1`.
pub type Assignment = u8;

pub fn assignment_value(assignment: Assignment, party: Party, pauli: Pauli) -> f64 {
    let bit = 2 * party.index() + usize::from(pauli == Pauli::Y);
    if assignment & (1 << bit) != 0 {
        -1.0
    } else {
        1.0
    }
}

fn satisfied_contexts(scenario: &ParityScenario, assignment: Assignment) -> u32 {
    let parties = [Party::A, Party::B, Party::C];
    (0..4)
        .filter(|&k| {
            let product: f64 = (0..3).map(|q| assignment_value(assignment, parties[q], scenario.contexts[k][q])).product();
            product == f64::from(scenario.parities[k])
        })
        .count() as u32
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MerminReport {
    pub satisfiable: bool,
    /// Most constraints any single assignment meets.
    pub max_satisfied: u32,
    /// Assignments enumerated (`2^6`).
    pub assignment_count: u32,
    /// Assignments meeting all four constraints.
    pub satisfying_assignments: u32,
}

/// Enumerates all 64 assignments of `±1` to the six local observables.
pub fn mermin_bruteforce(scenario: &ParityScenario) -> MerminReport {
    let mut max_satisfied = 0;
    let mut satisfying = 0;
    for a in 0..64u8 {
        let k = satisfied_contexts(scenario, a);
        max_satisfied = max_satisfied.max(k);
        if k == 4 {
            satisfying += 1;
        }
    }
    MerminReport { satisfiable: satisfying > 0, max_satisfied, assignment_count: 64, satisfying_assignments: satisfying }
}

/// Exact parities of the scenario's contexts on a three-qubit state.
pub fn quantum_parities(state: &StateVector, scenario: &ParityScenario) -> Result<[f64; 4]> {
    let mut out = [0.0; 4];
    for (k, slot) in out.iter_mut().enumerate() {
        let axes = scenario.contexts[k].map(Axis::from_pauli);
        *slot = quantum_correlation(state, &axes)?;
    }
    Ok(out)
}

/// Microstate: a uniform assignment of the six local values. A context's
/// triple registers iff the assignment meets that context's required parity,
/// so detection depends on all three settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GhzContextualModel {
    scenario: ParityScenario,
}

impl GhzContextualModel {
    pub fn new(scenario: ParityScenario) -> Self {
        Self { scenario }
    }
}

impl Default for GhzContextualModel {
    fn default() -> Self {
        Self::new(ParityScenario::standard())
    }
}

impl DetectionModel for GhzContextualModel {
    type Micro = Assignment;

    fn name(&self) -> &str {
        "ghz-contextual"
    }

    fn sample(&self, rng: &mut dyn RngCore) -> Assignment {
        (rng.next_u32() & 0x3f) as u8
    }

    fn cell(&self, micro: &Assignment) -> u32 {
        u32::from(*micro)
    }

    fn value_map(&self, micro: &Assignment, setting: &MeasurementSetting) -> f64 {
        match setting.axis.pauli() {
            Some(p @ (Pauli::X | Pauli::Y)) => assignment_value(*micro, setting.party, p),
            _ => f64::NAN,
        }
    }

    fn detect_probability(&self, _micro: &Assignment, _setting: &MeasurementSetting) -> f64 {
        1.0
    }

    fn detect_probability_in_context(&self, micro: &Assignment, setting: &MeasurementSetting, context: &[MeasurementSetting]) -> f64 {
        // The triple's registration is carried by the first party's detector.
        let Some(k) = self.scenario.context_index(context) else {
            return 1.0;
        };
        if setting.party != context[0].party {
            return 1.0;
        }
        let product: f64 = context.iter().map(|s| self.value_map(micro, s)).product();
        if product == f64::from(self.scenario.parities[k]) {
            1.0
        } else {
            0.0
        }
    }

    fn supports(&self, setting: &MeasurementSetting) -> bool {
        matches!(setting.axis.pauli(), Some(Pauli::X | Pauli::Y))
    }

    fn deterministic(&self) -> bool {
        true
    }

    fn local(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GhzTally {
    pub trials: u64,
    pub detected: u64,
    pub parity_detected: u64,
    pub parity_full: u64,
    /// Objects whose predetermined values meet all four constraints.
    pub all_contexts_satisfied: u64,
}

impl GhzTally {
    pub fn merge(&mut self, o: &GhzTally) {
        self.trials += o.trials;
        self.detected += o.detected;
        self.parity_detected += o.parity_detected;
        self.parity_full += o.parity_full;
        self.all_contexts_satisfied += o.all_contexts_satisfied;
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GhzContextResult {
    pub context: String,
    pub required_parity: i8,
    pub trials: u64,
    pub detected: u64,
    pub detection_rate: f64,
    /// `None` when no triple was detected.
    pub parity_rate_detected: Option<f64>,
    pub parity_rate_full: f64,
    pub quantum_parity: f64,
    pub all_contexts_satisfied: u64,
}

pub fn ghz_context_range<M: DetectionModel>(
    model: &M,
    scenario: &ParityScenario,
    k: usize,
    seed: u64,
    range: Range<u64>,
) -> Result<GhzTally> {
    let context = scenario.settings(k);
    for j in 0..4 {
        ensure_supported(model, &scenario.settings(j))?;
    }
    let required = f64::from(scenario.parities[k]);
    let mut tally = GhzTally::default();
    for t in range {
        let mut rng = rng::trial_rng(seed, domain::GHZ + k as u64, t);
        let micro = model.sample(&mut rng);
        let rec = measure_context(model, &micro, &context, &mut rng);
        tally.trials += 1;
        if rec.full_product == required {
            tally.parity_full += 1;
        }
        if rec.detected {
            tally.detected += 1;
            if rec.product == required {
                tally.parity_detected += 1;
            }
        }
        let all = (0..4).all(|j| {
            let p: f64 = scenario.settings(j).iter().map(|s| model.value_map(&micro, s)).product();
            p == f64::from(scenario.parities[j])
        });
        if all {
            tally.all_contexts_satisfied += 1;
        }
    }
    Ok(tally)
}

pub fn ghz_results(scenario: &ParityScenario, tallies: &[GhzTally; 4]) -> Result<Vec<GhzContextResult>> {
    let quantum = quantum_parities(&ghz_state(), scenario)?;
    Ok((0..4)
        .map(|k| {
            let t = &tallies[k];
            GhzContextResult {
                context: scenario.label(k),
                required_parity: scenario.parities[k],
                trials: t.trials,
                detected: t.detected,
                detection_rate: t.detected as f64 / t.trials.max(1) as f64,
                parity_rate_detected: (t.detected > 0).then(|| t.parity_detected as f64 / t.detected as f64),
                parity_rate_full: t.parity_full as f64 / t.trials.max(1) as f64,
                quantum_parity: quantum[k],
                all_contexts_satisfied: t.all_contexts_satisfied,
            }
        })
        .collect())
}

/// One disjoint sub-ensemble of `trials` objects per context.
pub fn run_ghz<M: DetectionModel>(model: &M, scenario: &ParityScenario, trials: u64, seed: u64) -> Result<Vec<GhzContextResult>> {
    if trials == 0 {
        return Err(Error::EmptyEnsemble);
    }
    let mut tallies = [GhzTally::default(); 4];
    for (k, slot) in tallies.iter_mut().enumerate() {
        *slot = ghz_context_range(model, scenario, k, seed, 0..trials)?;
    }
    ghz_results(scenario, &tallies)
}
