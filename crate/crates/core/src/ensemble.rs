//! Ensembles of physical objects with hidden microstates.
//!
//! A [`DetectionModel`] fixes, for each microstate and setting, a predetermined
//! outcome value and the probability that the apparatus registers anything at
//! all. Measuring an ensemble produces exact integer tallies per cell of
//! identical (or coarse-grained) microstates, and from those the total,
//! detection and conditional probabilities.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::ops::Range;

use rand_core::RngCore;

use crate::error::{Error, Result};
use crate::linalg::STRUCT_TOL;
use crate::rng::{self, domain};
use crate::statespace::PropertyWindow;

/// Measuring station.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Party {
    A,
    B,
    C,
}

impl Party {
    pub fn index(self) -> usize {
        self as usize
    }
}

/// Named Pauli directions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Pauli {
    X,
    Y,
    Z,
}

/// A unit 3-vector.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "[f64; 3]", into = "[f64; 3]"))]
pub struct Axis([f64; 3]);

impl Axis {
    pub const X: Axis = Axis([1.0, 0.0, 0.0]);
    pub const Y: Axis = Axis([0.0, 1.0, 0.0]);
    pub const Z: Axis = Axis([0.0, 0.0, 1.0]);

    /// Accepts only vectors of unit length (within the structural tolerance).
    pub fn new(v: [f64; 3]) -> Result<Self> {
        let n = norm3(v);
        if !n.is_finite() || (n - 1.0).abs() > STRUCT_TOL {
            return Err(Error::Normalization(n));
        }
        Ok(Axis(v))
    }

    pub fn normalized(v: [f64; 3]) -> Result<Self> {
        let n = norm3(v);
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::Normalization(n));
        }
        Ok(Axis([v[0] / n, v[1] / n, v[2] / n]))
    }

    /// Direction at angle `theta` (radians) from `+z` towards `+x`.
    pub fn in_plane(theta: f64) -> Self {
        Axis([libm::sin(theta), 0.0, libm::cos(theta)])
    }

    pub fn in_plane_degrees(deg: f64) -> Self {
        Self::in_plane(deg.to_radians())
    }

    /// Polar angle `theta`, azimuth `phi`, radians.
    pub fn from_angles(theta: f64, phi: f64) -> Self {
        Axis([
            libm::sin(theta) * libm::cos(phi),
            libm::sin(theta) * libm::sin(phi),
            libm::cos(theta),
        ])
    }

    pub fn from_pauli(p: Pauli) -> Self {
        match p {
            Pauli::X => Self::X,
            Pauli::Y => Self::Y,
            Pauli::Z => Self::Z,
        }
    }

    pub fn pauli(&self) -> Option<Pauli> {
        [Pauli::X, Pauli::Y, Pauli::Z]
            .into_iter()
            .find(|&p| self.dot(&Axis::from_pauli(p)) > 1.0 - STRUCT_TOL)
    }

    pub fn vector(&self) -> [f64; 3] {
        self.0
    }

    pub fn dot(&self, other: &Axis) -> f64 {
        dot3(self.0, other.0)
    }

    pub fn approx_eq(&self, other: &Axis) -> bool {
        self.dot(other) > 1.0 - STRUCT_TOL
    }
}

impl TryFrom<[f64; 3]> for Axis {
    type Error = Error;
    fn try_from(v: [f64; 3]) -> Result<Self> {
        Axis::new(v)
    }
}

impl From<Axis> for [f64; 3] {
    fn from(a: Axis) -> Self {
        a.0
    }
}

pub(crate) fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm3(v: [f64; 3]) -> f64 {
    libm::sqrt(dot3(v, v))
}

/// One party's measurement direction.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MeasurementSetting {
    pub party: Party,
    pub axis: Axis,
}

impl MeasurementSetting {
    pub fn new(party: Party, axis: Axis) -> Self {
        Self { party, axis }
    }
}

impl core::fmt::Display for MeasurementSetting {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        let [x, y, z] = self.axis.vector();
        write!(f, "{:?}@({x:.6},{y:.6},{z:.6})", self.party)
    }
}

/// Result of one measurement: a registered value or the no-registration outcome.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Outcome {
    NoRegistration,
    Value(f64),
}

impl Outcome {
    pub fn value(self) -> Option<f64> {
        match self {
            Outcome::Value(v) => Some(v),
            Outcome::NoRegistration => None,
        }
    }

    pub fn is_registered(self) -> bool {
        matches!(self, Outcome::Value(_))
    }
}

/// Hidden-variable model of a source plus detectors.
///
/// Values are predetermined for every setting; detection is a separate event
/// whose probability may depend on the microstate and the setting. A model is
/// local when `detect_probability_in_context` ignores the other parties'
/// settings.
pub trait DetectionModel {
    type Micro: Clone;

    fn name(&self) -> &str;

    /// Draws one microstate. Must consume randomness only from `rng`.
    fn sample(&self, rng: &mut dyn RngCore) -> Self::Micro;

    /// Cell of the partition into objects with the same microscopic properties.
    fn cell(&self, micro: &Self::Micro) -> u32;

    /// Predetermined outcome, regardless of detection.
    fn value_map(&self, micro: &Self::Micro, setting: &MeasurementSetting) -> f64;

    fn detect_probability(&self, micro: &Self::Micro, setting: &MeasurementSetting) -> f64;

    /// Detection probability of `setting` when it is measured jointly with
    /// `context` (which contains `setting`).
    fn detect_probability_in_context(
        &self,
        micro: &Self::Micro,
        setting: &MeasurementSetting,
        _context: &[MeasurementSetting],
    ) -> f64 {
        self.detect_probability(micro, setting)
    }

    fn supports(&self, _setting: &MeasurementSetting) -> bool {
        true
    }

    /// Detection is 0/1 and cells hold identical microstates, so every cell
    /// answers a property all-or-nothing.
    fn deterministic(&self) -> bool {
        false
    }

    fn local(&self) -> bool {
        true
    }
}

pub(crate) fn ensure_supported<M: DetectionModel + ?Sized>(model: &M, context: &[MeasurementSetting]) -> Result<()> {
    match context.iter().find(|s| !model.supports(s)) {
        Some(s) => Err(Error::UnsupportedSetting { model: String::from(model.name()), setting: format!("{s}") }),
        None => Ok(()),
    }
}

/// Prepares `n` objects. Object `t` is drawn from its own stream.
pub fn sample_ensemble<M: DetectionModel>(model: &M, n: usize, seed: u64) -> Result<Vec<M::Micro>> {
    if n == 0 {
        return Err(Error::EmptyEnsemble);
    }
    Ok((0..n as u64)
        .map(|t| model.sample(&mut rng::trial_rng(seed, domain::ENSEMBLE, t)))
        .collect())
}

/// Registers `value_map` iff `draw < detect_probability`.
pub fn measure_object<M: DetectionModel>(model: &M, micro: &M::Micro, setting: &MeasurementSetting, draw: f64) -> Outcome {
    registered(model.detect_probability(micro, setting), model.value_map(micro, setting), draw)
}

fn registered(p: f64, value: f64, draw: f64) -> Outcome {
    if draw < p {
        Outcome::Value(value)
    } else {
        Outcome::NoRegistration
    }
}

/// Joint measurement of several settings on one object (or one correlated
/// tuple). The measured quantity is the product of the parties' values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContextRecord {
    /// Every party registered.
    pub detected: bool,
    /// Product of registered values; meaningful only when `detected`.
    pub product: f64,
    /// Product of predetermined values, detected or not.
    pub full_product: f64,
}

/// Measures `context` on `micro`, one uniform draw per party from `rng`.
pub fn measure_context<M: DetectionModel>(
    model: &M,
    micro: &M::Micro,
    context: &[MeasurementSetting],
    rng: &mut dyn RngCore,
) -> ContextRecord {
    let mut detected = true;
    let mut product = 1.0;
    for s in context {
        let p = model.detect_probability_in_context(micro, s, context);
        let v = model.value_map(micro, s);
        product *= v;
        if !registered(p, v, rng::uniform(rng)).is_registered() {
            detected = false;
        }
    }
    ContextRecord { detected, product, full_product: product }
}

/// Tallies for one cell `S^(i)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CellTally {
    pub cell: u32,
    /// `N^(i)`
    pub n: u64,
    /// `N0^(i)`, objects not detected.
    pub n0: u64,
    /// `N_F^(i)`, detected objects whose outcome lies in the window.
    pub n_f: u64,
}

impl CellTally {
    pub fn detected(&self) -> u64 {
        self.n - self.n0
    }
}

/// Exact integer tallies of one ensemble measurement.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TallyCounts {
    pub n: u64,
    pub n0: u64,
    /// Non-empty cells in increasing cell order.
    pub cells: Vec<CellTally>,
}

impl TallyCounts {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, cell: u32, detected: bool, in_window: bool) {
        let idx = match self.cells.binary_search_by_key(&cell, |c| c.cell) {
            Ok(i) => i,
            Err(i) => {
                self.cells.insert(i, CellTally { cell, n: 0, n0: 0, n_f: 0 });
                i
            }
        };
        let row = &mut self.cells[idx];
        self.n += 1;
        row.n += 1;
        if !detected {
            self.n0 += 1;
            row.n0 += 1;
        } else if in_window {
            row.n_f += 1;
        }
    }

    /// Componentwise sum; associative and commutative.
    pub fn merge(&mut self, other: &TallyCounts) {
        self.n += other.n;
        self.n0 += other.n0;
        for row in &other.cells {
            match self.cells.binary_search_by_key(&row.cell, |c| c.cell) {
                Ok(i) => {
                    let r = &mut self.cells[i];
                    r.n += row.n;
                    r.n0 += row.n0;
                    r.n_f += row.n_f;
                }
                Err(i) => self.cells.insert(i, *row),
            }
        }
    }

    pub fn n_f_total(&self) -> u64 {
        self.cells.iter().map(|c| c.n_f).sum()
    }

    /// `N = sum N^(i)`, `N0 = sum N0^(i)`, `0 <= N_F^(i) <= N^(i) - N0^(i)`.
    pub fn consistent(&self) -> bool {
        let n: u64 = self.cells.iter().map(|c| c.n).sum();
        let n0: u64 = self.cells.iter().map(|c| c.n0).sum();
        n == self.n && n0 == self.n0 && self.cells.iter().all(|c| c.n0 <= c.n && c.n_f <= c.detected())
    }

    /// Per-cell frequency identity
    /// `N_F/N = ((N - N0)/N) * (N_F/(N - N0))`, checked by cross-multiplication
    /// for every cell with at least one detection.
    pub fn cell_identity_holds(&self) -> bool {
        self.cells.iter().filter(|c| c.detected() > 0).all(|c| {
            let (nf, n, d) = (c.n_f as u128, c.n as u128, c.detected() as u128);
            // lhs = nf / n, rhs = (d * nf) / (n * d)
            nf * (n * d) == (d * nf) * n
        })
    }

    /// Aggregate identity `(1/N) sum N_F = ((N - N0)/N) * (sum N_F/(N - N0))`,
    /// with the partition sums checked alongside.
    pub fn aggregate_identity_holds(&self) -> bool {
        if !self.consistent() || self.n == 0 {
            return false;
        }
        let d = (self.n - self.n0) as u128;
        if d == 0 {
            return self.n_f_total() == 0;
        }
        let (nf, n) = (self.n_f_total() as u128, self.n as u128);
        nf * (n * d) == (d * nf) * n
    }

    /// `N_F^(i) * (N^(i) - N0^(i) - N_F^(i)) = 0` in every cell.
    pub fn dichotomy_holds(&self) -> bool {
        self.cells.iter().all(|c| c.n_f == 0 || c.n_f == c.detected())
    }
}

fn tally_trial<M: DetectionModel>(
    model: &M,
    context: &[MeasurementSetting],
    window: &PropertyWindow<'_>,
    seed: u64,
    t: u64,
) -> Result<(u32, ContextRecord)> {
    let mut rng = rng::trial_rng(seed, domain::TALLY, t);
    let micro = model.sample(&mut rng);
    let rec = measure_context(model, &micro, context, &mut rng);
    if window.observable().index_of(rec.full_product).is_none() {
        return Err(Error::Observable(format!(
            "value {} is not an eigenvalue of {}",
            rec.full_product,
            window.observable().label()
        )));
    }
    Ok((model.cell(&micro), rec))
}

fn check_tally_inputs<M: DetectionModel>(model: &M, context: &[MeasurementSetting], window: &PropertyWindow<'_>) -> Result<()> {
    if window.includes_a0() {
        return Err(Error::NoRepresentation);
    }
    if context.is_empty() {
        return Err(Error::Model(String::from("empty measurement context")));
    }
    ensure_supported(model, context)
}

/// Tallies trials `range` of a run; ranges merge into the full run.
pub fn tally_range<M: DetectionModel>(
    model: &M,
    context: &[MeasurementSetting],
    window: &PropertyWindow<'_>,
    seed: u64,
    range: Range<u64>,
) -> Result<TallyCounts> {
    check_tally_inputs(model, context, window)?;
    let mut counts = TallyCounts::new();
    for t in range {
        let (cell, rec) = tally_trial(model, context, window, seed, t)?;
        counts.record(cell, rec.detected, rec.detected && window.contains(rec.product));
    }
    Ok(counts)
}

/// Measures `context` on `n` fresh objects and tallies the property `window`
/// over the product of the registered values.
pub fn tally_counts<M: DetectionModel>(
    model: &M,
    context: &[MeasurementSetting],
    window: &PropertyWindow<'_>,
    n: u64,
    seed: u64,
) -> Result<TallyCounts> {
    if n == 0 {
        return Err(Error::EmptyEnsemble);
    }
    tally_range(model, context, window, seed, 0..n)
}

/// Total, detection and conditional probabilities with binomial standard errors.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ProbabilityEstimates {
    pub p_total: f64,
    pub p_detect: f64,
    /// `None` when nothing was detected.
    pub p_conditional: Option<f64>,
    pub stderr_total: f64,
    pub stderr_detect: f64,
    pub stderr_conditional: Option<f64>,
}

impl ProbabilityEstimates {
    pub fn conditional(&self) -> Result<f64> {
        self.p_conditional.ok_or(Error::NoDetections)
    }
}

pub(crate) fn binomial_stderr(p: f64, count: u64) -> f64 {
    libm::sqrt((p * (1.0 - p)).max(0.0) / count as f64)
}

/// `p_total = p_detect * p_conditional`, exact in floating point: `p_total`
/// is formed as that product whenever something was detected.
pub fn estimate_probabilities(t: &TallyCounts) -> Result<ProbabilityEstimates> {
    if t.n == 0 {
        return Err(Error::EmptyEnsemble);
    }
    let detected = t.n - t.n0;
    let nf = t.n_f_total();
    let p_detect = detected as f64 / t.n as f64;
    let p_conditional = (detected > 0).then(|| nf as f64 / detected as f64);
    let p_total = match p_conditional {
        Some(pc) => p_detect * pc,
        None => 0.0,
    };
    Ok(ProbabilityEstimates {
        p_total,
        p_detect,
        p_conditional,
        stderr_total: binomial_stderr(p_total, t.n),
        stderr_detect: binomial_stderr(p_detect, t.n),
        stderr_conditional: p_conditional.map(|p| binomial_stderr(p, detected)),
    })
}

/// Window frequency among detected objects versus among all objects, using
/// predetermined values for the undetected ones.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FairSamplingGap {
    pub detected_frequency: f64,
    pub detected_stderr: f64,
    pub full_frequency: f64,
    pub full_stderr: f64,
    /// `|detected - full|` in units of the combined standard error.
    pub z_score: f64,
}

pub fn fair_sampling_gap<M: DetectionModel>(
    model: &M,
    context: &[MeasurementSetting],
    window: &PropertyWindow<'_>,
    n: u64,
    seed: u64,
) -> Result<FairSamplingGap> {
    if n == 0 {
        return Err(Error::EmptyEnsemble);
    }
    check_tally_inputs(model, context, window)?;
    let (mut detected, mut detected_in, mut full_in) = (0u64, 0u64, 0u64);
    for t in 0..n {
        let (_, rec) = tally_trial(model, context, window, seed, t)?;
        if window.contains(rec.full_product) {
            full_in += 1;
        }
        if rec.detected {
            detected += 1;
            if window.contains(rec.product) {
                detected_in += 1;
            }
        }
    }
    if detected == 0 {
        return Err(Error::NoDetections);
    }
    let pd = detected_in as f64 / detected as f64;
    let pf = full_in as f64 / n as f64;
    let (sd, sf) = (binomial_stderr(pd, detected), binomial_stderr(pf, n));
    let se = libm::sqrt(sd * sd + sf * sf);
    let diff = (pd - pf).abs();
    Ok(FairSamplingGap {
        detected_frequency: pd,
        detected_stderr: sd,
        full_frequency: pf,
        full_stderr: sf,
        z_score: if se > 0.0 { diff / se } else if diff > 0.0 { f64::INFINITY } else { 0.0 },
    })
}

fn sign(x: f64) -> f64 {
    if x < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// The twelve vertices of a regular icosahedron, used as patch centres for
/// binning directions into cells.
fn icosahedron_vertices() -> [[f64; 3]; 12] {
    let phi = (1.0 + libm::sqrt(5.0)) / 2.0;
    let n = libm::sqrt(1.0 + phi * phi);
    let (a, b) = (1.0 / n, phi / n);
    [
        [0.0, a, b],
        [0.0, a, -b],
        [0.0, -a, b],
        [0.0, -a, -b],
        [a, b, 0.0],
        [a, -b, 0.0],
        [-a, b, 0.0],
        [-a, -b, 0.0],
        [b, 0.0, a],
        [b, 0.0, -a],
        [-b, 0.0, a],
        [-b, 0.0, -a],
    ]
}

/// Index of the icosahedral patch containing `lambda`.
pub fn icosahedral_cell(lambda: [f64; 3]) -> u32 {
    let mut best = (0u32, f64::NEG_INFINITY);
    for (i, v) in icosahedron_vertices().iter().enumerate() {
        let d = dot3(*v, lambda);
        if d > best.1 {
            best = (i as u32, d);
        }
    }
    best.0
}

/// Singlet-source reference model: `lambda` uniform on the sphere, Alice
/// registers `-sign(a . lambda)` with probability `|a . lambda|`, Bob always
/// registers `sign(b . lambda)`. Parties other than `A` use Bob's map.
#[derive(Debug, Clone, Copy, Default)]
pub struct SingletModel;

pub fn singlet_reference_model() -> SingletModel {
    SingletModel
}

impl DetectionModel for SingletModel {
    type Micro = [f64; 3];

    fn name(&self) -> &str {
        "singlet-reference"
    }

    fn sample(&self, rng: &mut dyn RngCore) -> [f64; 3] {
        rng::unit_sphere(rng)
    }

    fn cell(&self, micro: &[f64; 3]) -> u32 {
        icosahedral_cell(*micro)
    }

    fn value_map(&self, micro: &[f64; 3], setting: &MeasurementSetting) -> f64 {
        let proj = dot3(setting.axis.vector(), *micro);
        match setting.party {
            Party::A => -sign(proj),
            Party::B | Party::C => sign(proj),
        }
    }

    fn detect_probability(&self, micro: &[f64; 3], setting: &MeasurementSetting) -> f64 {
        match setting.party {
            Party::A => dot3(setting.axis.vector(), *micro).abs().min(1.0),
            Party::B | Party::C => 1.0,
        }
    }
}

/// The singlet model's value maps with perfect detection: a plain local
/// deterministic model.
#[derive(Debug, Clone, Copy, Default)]
pub struct AlwaysDetectModel;

impl DetectionModel for AlwaysDetectModel {
    type Micro = [f64; 3];

    fn name(&self) -> &str {
        "always-detect"
    }

    fn sample(&self, rng: &mut dyn RngCore) -> [f64; 3] {
        rng::unit_sphere(rng)
    }

    fn cell(&self, micro: &[f64; 3]) -> u32 {
        icosahedral_cell(*micro)
    }

    fn value_map(&self, micro: &[f64; 3], setting: &MeasurementSetting) -> f64 {
        SingletModel.value_map(micro, setting)
    }

    fn detect_probability(&self, _micro: &[f64; 3], _setting: &MeasurementSetting) -> f64 {
        1.0
    }
}

/// One microstate of a [`TableModel`].
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TableRow {
    pub weight: f64,
    /// One value per table setting.
    pub values: Vec<f64>,
    /// One detection probability per table setting.
    pub detect: Vec<f64>,
}

/// Finite microstate space given as a table: each row is a microstate with a
/// preparation weight, and each column a setting.
#[derive(Debug, Clone, PartialEq)]
pub struct TableModel {
    name: String,
    settings: Vec<MeasurementSetting>,
    rows: Vec<TableRow>,
    cumulative: Vec<f64>,
}

impl TableModel {
    pub fn new(name: impl Into<String>, settings: Vec<MeasurementSetting>, rows: Vec<TableRow>) -> Result<Self> {
        if rows.is_empty() || settings.is_empty() {
            return Err(Error::Model(String::from("table needs at least one row and one setting")));
        }
        let mut total = 0.0;
        let mut cumulative = Vec::with_capacity(rows.len());
        for (i, r) in rows.iter().enumerate() {
            if r.values.len() != settings.len() || r.detect.len() != settings.len() {
                return Err(Error::Model(format!("row {i} does not have one entry per setting")));
            }
            if !(r.weight >= 0.0) || !r.weight.is_finite() {
                return Err(Error::Model(format!("row {i} has invalid weight {}", r.weight)));
            }
            if r.detect.iter().any(|p| !(0.0..=1.0).contains(p)) {
                return Err(Error::Model(format!("row {i} has a detection probability outside [0, 1]")));
            }
            if r.values.iter().any(|v| !v.is_finite()) {
                return Err(Error::Model(format!("row {i} has a non-finite value")));
            }
            total += r.weight;
            cumulative.push(total);
        }
        if !(total > 0.0) {
            return Err(Error::Model(String::from("table weights sum to zero")));
        }
        for c in &mut cumulative {
            *c /= total;
        }
        Ok(Self { name: name.into(), settings, rows, cumulative })
    }

    pub fn rows(&self) -> &[TableRow] {
        &self.rows
    }

    pub fn settings(&self) -> &[MeasurementSetting] {
        &self.settings
    }

    fn column(&self, setting: &MeasurementSetting) -> Option<usize> {
        self.settings
            .iter()
            .position(|s| s.party == setting.party && s.axis.approx_eq(&setting.axis))
    }
}

impl DetectionModel for TableModel {
    type Micro = u32;

    fn name(&self) -> &str {
        &self.name
    }

    fn sample(&self, rng: &mut dyn RngCore) -> u32 {
        let u = rng::uniform(rng);
        let idx = self.cumulative.partition_point(|&c| c <= u);
        idx.min(self.rows.len() - 1) as u32
    }

    fn cell(&self, micro: &u32) -> u32 {
        *micro
    }

    fn value_map(&self, micro: &u32, setting: &MeasurementSetting) -> f64 {
        self.column(setting).map_or(f64::NAN, |c| self.rows[*micro as usize].values[c])
    }

    fn detect_probability(&self, micro: &u32, setting: &MeasurementSetting) -> f64 {
        self.column(setting).map_or(0.0, |c| self.rows[*micro as usize].detect[c])
    }

    fn supports(&self, setting: &MeasurementSetting) -> bool {
        self.column(setting).is_some()
    }

    fn deterministic(&self) -> bool {
        self.rows.iter().all(|r| r.detect.iter().all(|&p| p == 0.0 || p == 1.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statespace::Observable;

    fn alice(axis: Axis) -> MeasurementSetting {
        MeasurementSetting::new(Party::A, axis)
    }

    fn bob(axis: Axis) -> MeasurementSetting {
        MeasurementSetting::new(Party::B, axis)
    }

    #[test]
    fn axis_validation() {
        assert!(Axis::new([1.0, 1.0, 0.0]).is_err());
        assert!(Axis::normalized([0.0, 0.0, 0.0]).is_err());
        let a = Axis::normalized([3.0, 0.0, 4.0]).unwrap();
        assert!((a.vector()[2] - 0.8).abs() < 1e-15);
        assert_eq!(Axis::X.pauli(), Some(Pauli::X));
        assert_eq!(Axis::in_plane_degrees(45.0).pauli(), None);
    }

    #[test]
    fn sample_ensemble_is_reproducible() {
        let m = singlet_reference_model();
        let a = sample_ensemble(&m, 4, 7).unwrap();
        let b = sample_ensemble(&m, 4, 7).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, sample_ensemble(&m, 4, 8).unwrap());
        assert_eq!(sample_ensemble(&m, 0, 7), Err(Error::EmptyEnsemble));
    }

    #[test]
    fn measure_object_respects_detection() {
        let m = AlwaysDetectModel;
        let lambda = [0.0, 0.0, 1.0];
        for draw in [0.0, 0.5, 0.999_999] {
            assert!(measure_object(&m, &lambda, &alice(Axis::Z), draw).is_registered());
        }
        // Alice orthogonal to lambda: detect probability 0.
        let s = singlet_reference_model();
        for draw in [0.0, 0.5, 0.999] {
            assert_eq!(measure_object(&s, &lambda, &alice(Axis::X), draw), Outcome::NoRegistration);
        }
        // Singlet: Alice registers -sign(a . lambda).
        let lambda = [0.6, 0.0, 0.8];
        assert_eq!(measure_object(&s, &lambda, &alice(Axis::Z), 0.1), Outcome::Value(-1.0));
        assert_eq!(measure_object(&s, &lambda, &alice(Axis::Z), 0.8), Outcome::NoRegistration);
        assert_eq!(measure_object(&s, &lambda, &bob(Axis::Z), 0.99), Outcome::Value(1.0));
    }

    #[test]
    fn tally_arithmetic_example() {
        let t = TallyCounts { n: 10, n0: 4, cells: alloc::vec![CellTally { cell: 0, n: 10, n0: 4, n_f: 6 }] };
        assert!(t.consistent() && t.cell_identity_holds() && t.aggregate_identity_holds() && t.dichotomy_holds());
        let e = estimate_probabilities(&t).unwrap();
        assert_eq!((e.p_total, e.p_detect, e.p_conditional), (0.6, 0.6, Some(1.0)));
        assert_eq!(e.p_total, e.p_detect * e.p_conditional.unwrap());
    }

    #[test]
    fn no_detections_keeps_total_and_detect() {
        let t = TallyCounts { n: 5, n0: 5, cells: alloc::vec![CellTally { cell: 3, n: 5, n0: 5, n_f: 0 }] };
        let e = estimate_probabilities(&t).unwrap();
        assert_eq!(e.p_detect, 0.0);
        assert_eq!(e.p_total, 0.0);
        assert_eq!(e.conditional(), Err(Error::NoDetections));
        assert_eq!(estimate_probabilities(&TallyCounts::new()), Err(Error::EmptyEnsemble));
    }

    #[test]
    fn tally_rejects_a0_window_and_empty_run() {
        let obs = Observable::spin_along([0.0, 0.0, 1.0]);
        let w = PropertyWindow::new(&obs, &[1.0], true).unwrap();
        let m = singlet_reference_model();
        assert_eq!(tally_counts(&m, &[alice(Axis::Z)], &w, 10, 1), Err(Error::NoRepresentation));
        let w = w.without_a0();
        assert_eq!(tally_counts(&m, &[alice(Axis::Z)], &w, 0, 1), Err(Error::EmptyEnsemble));
    }

    #[test]
    fn always_detect_has_no_undetected_objects() {
        let obs = Observable::spin_along([0.0, 0.0, 1.0]);
        let w = PropertyWindow::new(&obs, &[1.0], false).unwrap();
        let t = tally_counts(&AlwaysDetectModel, &[alice(Axis::Z)], &w, 2000, 3).unwrap();
        assert_eq!(t.n0, 0);
        let e = estimate_probabilities(&t).unwrap();
        assert_eq!(e.p_detect, 1.0);
        assert_eq!(e.p_total, e.p_conditional.unwrap());
    }

    #[test]
    fn ranges_merge_to_full_run() {
        let obs = Observable::spin_along([0.0, 0.0, 1.0]);
        let w = PropertyWindow::new(&obs, &[-1.0], false).unwrap();
        let m = singlet_reference_model();
        let ctx = [alice(Axis::in_plane_degrees(30.0))];
        let full = tally_counts(&m, &ctx, &w, 3000, 11).unwrap();
        let mut parts = tally_range(&m, &ctx, &w, 11, 2000..3000).unwrap();
        parts.merge(&tally_range(&m, &ctx, &w, 11, 0..1200).unwrap());
        parts.merge(&tally_range(&m, &ctx, &w, 11, 1200..2000).unwrap());
        assert_eq!(parts, full);
        assert!(full.consistent());
        assert!(full.cells.len() <= 12);
    }

    #[test]
    fn table_model_sampling_and_validation() {
        let s = [alice(Axis::Z)];
        let rows = alloc::vec![
            TableRow { weight: 1.0, values: alloc::vec![1.0], detect: alloc::vec![1.0] },
            TableRow { weight: 3.0, values: alloc::vec![-1.0], detect: alloc::vec![0.0] },
        ];
        let m = TableModel::new("t", s.to_vec(), rows.clone()).unwrap();
        assert!(m.deterministic());
        assert!(!m.supports(&bob(Axis::Z)));
        let obs = Observable::spin_along([0.0, 0.0, 1.0]);
        let w = PropertyWindow::new(&obs, &[1.0], false).unwrap();
        let t = tally_counts(&m, &s, &w, 4000, 5).unwrap();
        assert!(t.dichotomy_holds());
        let frac = (t.n - t.n0) as f64 / t.n as f64;
        assert!((frac - 0.25).abs() < 0.03, "{frac}");
        assert!(matches!(tally_counts(&m, &[bob(Axis::Z)], &w, 10, 1), Err(Error::UnsupportedSetting { .. })));

        let mut bad = rows;
        bad[0].detect[0] = 1.5;
        assert!(TableModel::new("bad", s.to_vec(), bad).is_err());
    }

    #[test]
    fn icosahedral_cells_cover_twelve_patches() {
        let mut seen = [false; 12];
        for v in icosahedron_vertices() {
            seen[icosahedral_cell(v) as usize] = true;
            assert!((norm3(v) - 1.0).abs() < 1e-12);
        }
        assert!(seen.iter().all(|&s| s));
    }
}
