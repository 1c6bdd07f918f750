//! Measurement as a unitary premeasurement with a no-registration branch,
//! followed by the observer's selection of registered runs.
//!
//! An object prepared in `sum c_i |phi_i>` meets an apparatus in `|psi_0>`.
//! With amplitude `t_i` the apparatus moves to pointer `|psi_i>`; otherwise it
//! stays in `|psi_0>` and the object is left in `|phi_i>`. The selected
//! (registered) state is compared with its biorthogonal mixture.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{ComplexField, DMatrix, DVector};

use crate::ensemble::Outcome;
use crate::error::{Error, Result};
use crate::linalg::{
    self, born_probability, check_dim, mixture_from_schmidt, partial_trace, schmidt_decompose, tensor_product,
    DensityOperator, Projector, StateVector, Subsystem, C64, CLAMP_TOL, STRUCT_TOL, ZERO,
};
use crate::rng::{self, domain};
use crate::statespace::Observable;

/// Apparatus and object data of one premeasurement.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementBranching {
    system_basis: Vec<StateVector>,
    apparatus_ready: StateVector,
    apparatus_pointer: Vec<StateVector>,
    t: Vec<C64>,
    c: Vec<C64>,
}

fn check_orthonormal(vs: &[&StateVector], what: &str) -> Result<()> {
    for (i, u) in vs.iter().enumerate() {
        for (j, v) in vs.iter().enumerate().skip(i) {
            let ip = u.inner(v)?;
            let want = if i == j { 1.0 } else { 0.0 };
            if (ip.modulus() - want).abs() > STRUCT_TOL {
                return Err(Error::Branching(format!("{what} vectors {i} and {j} are not orthonormal")));
            }
        }
    }
    Ok(())
}

impl MeasurementBranching {
    pub fn new(
        system_basis: Vec<StateVector>,
        apparatus_ready: StateVector,
        apparatus_pointer: Vec<StateVector>,
        t: Vec<C64>,
        c: Vec<C64>,
    ) -> Result<Self> {
        let k = c.len();
        if k == 0 || system_basis.len() != k || apparatus_pointer.len() != k || t.len() != k {
            return Err(Error::Branching(format!(
                "need one basis vector, pointer, t and c per branch (c: {k}, t: {}, basis: {}, pointers: {})",
                t.len(),
                system_basis.len(),
                apparatus_pointer.len()
            )));
        }
        let ds = system_basis[0].dim();
        let da = apparatus_ready.dim();
        for v in &system_basis {
            check_dim(ds, v.dim()).map_err(|e| Error::Branching(format!("{e}")))?;
        }
        for v in &apparatus_pointer {
            check_dim(da, v.dim()).map_err(|e| Error::Branching(format!("{e}")))?;
        }
        check_orthonormal(&system_basis.iter().collect::<Vec<_>>(), "system")?;
        let mut apparatus: Vec<&StateVector> = vec![&apparatus_ready];
        apparatus.extend(apparatus_pointer.iter());
        check_orthonormal(&apparatus, "apparatus")?;
        if let Some(i) = t.iter().position(|ti| !(ti.modulus() <= 1.0 + STRUCT_TOL)) {
            return Err(Error::Branching(format!("|t_{i}| exceeds 1")));
        }
        let norm: f64 = c.iter().map(|ci| ci.modulus_squared()).sum();
        if (norm - 1.0).abs() > STRUCT_TOL {
            return Err(Error::Branching(format!("sum |c_i|^2 = {norm}")));
        }
        Ok(Self { system_basis, apparatus_ready, apparatus_pointer, t, c })
    }

    /// Computational-basis branching: `|phi_i> = |i>`, `|psi_0> = |0>`,
    /// `|psi_i> = |i + 1>`.
    pub fn standard(c: Vec<C64>, t: Vec<C64>, system_dim: usize, apparatus_dim: usize) -> Result<Self> {
        let k = c.len();
        if k > system_dim {
            return Err(Error::Branching(format!("{k} branches do not fit a system of dimension {system_dim}")));
        }
        if k + 1 > apparatus_dim {
            return Err(Error::Branching(format!(
                "apparatus of dimension {apparatus_dim} cannot hold a ready state and {k} pointers"
            )));
        }
        let system_basis = (0..k).map(|i| StateVector::basis(system_dim, i)).collect();
        let pointers = (0..k).map(|i| StateVector::basis(apparatus_dim, i + 1)).collect();
        Self::new(system_basis, StateVector::basis(apparatus_dim, 0), pointers, t, c)
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.system_basis[0].dim(), self.apparatus_ready.dim())
    }

    pub fn branches(&self) -> usize {
        self.c.len()
    }

    pub fn c(&self) -> &[C64] {
        &self.c
    }

    pub fn t(&self) -> &[C64] {
        &self.t
    }

    /// `t_i'`, taken real and non-negative.
    pub fn t_prime(&self, i: usize) -> f64 {
        libm::sqrt((1.0 - self.t[i].modulus_squared()).max(0.0))
    }

    /// `sum |c_i|^2 |t_i|^2`.
    pub fn detected_weight(&self) -> f64 {
        self.c.iter().zip(&self.t).map(|(c, t)| c.modulus_squared() * t.modulus_squared()).sum()
    }

    /// `sum |c_i|^2 |t_i'|^2`.
    pub fn undetected_weight(&self) -> f64 {
        (0..self.branches()).map(|i| self.c[i].modulus_squared() * self.t_prime(i).powi(2)).sum()
    }

    /// The prepared product state `(sum c_i |phi_i>) |psi_0>`.
    pub fn initial_state(&self) -> Result<StateVector> {
        let (ds, _) = self.dims();
        let mut obj = DVector::from_element(ds, ZERO);
        for (ci, phi) in self.c.iter().zip(&self.system_basis) {
            obj += phi.as_dvector() * *ci;
        }
        let obj = StateVector::new(obj.data.into())?;
        Ok(tensor_product(&obj, &self.apparatus_ready))
    }

    fn pointer_projector(&self) -> DMatrix<C64> {
        let (_, da) = self.dims();
        self.apparatus_pointer
            .iter()
            .fold(DMatrix::zeros(da, da), |acc, p| acc + p.as_dvector() * p.as_dvector().adjoint())
    }
}

/// `sum c_i t_i |phi_i>|psi_i> + sum c_i t_i' |phi_i>|psi_0>`.
pub fn evolve_premeasurement(b: &MeasurementBranching) -> Result<StateVector> {
    let (ds, da) = b.dims();
    let mut out = DVector::from_element(ds * da, ZERO);
    for i in 0..b.branches() {
        let phi = b.system_basis[i].as_dvector();
        out += phi.kronecker(b.apparatus_pointer[i].as_dvector()) * (b.c[i] * b.t[i]);
        out += phi.kronecker(b.apparatus_ready.as_dvector()) * (b.c[i] * b.t_prime(i));
    }
    StateVector::with_dims(out.data.into(), vec![ds, da]).map_err(|e| Error::Branching(format!("final state: {e}")))
}

/// Keeps the registered runs: projects the apparatus onto its pointer
/// subspace and renormalizes.
pub fn select_detected(chi_f: &StateVector, b: &MeasurementBranching) -> Result<StateVector> {
    let (ds, da) = b.dims();
    check_dim(ds * da, chi_f.dim())?;
    let q = DMatrix::<C64>::identity(ds, ds).kronecker(&b.pointer_projector());
    let v = q * chi_f.as_dvector();
    let norm = v.norm();
    if !(norm > CLAMP_TOL) {
        return Err(Error::NoDetections);
    }
    let scaled: Vec<C64> = v.iter().map(|z| z.unscale(norm)).collect();
    StateVector::with_dims(scaled, vec![ds, da])
}

/// State after registering eigenvalue number `eigenvalue_index`.
pub fn projection_postulate(s: &StateVector, obs: &Observable, eigenvalue_index: usize) -> Result<StateVector> {
    let p = obs
        .projectors()
        .get(eigenvalue_index)
        .ok_or_else(|| Error::Observable(format!("no eigenvalue with index {eigenvalue_index}")))?;
    if born_probability(s, p)? <= CLAMP_TOL {
        return Err(Error::ImpossibleOutcome);
    }
    let v = p.apply(s)?;
    let norm = v.norm();
    StateVector::with_dims(v.iter().map(|z| z.unscale(norm)).collect(), s.dims().to_vec())
}

/// Pure final state versus its biorthogonal mixture.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FappReport {
    /// Largest local probability difference over the probe set, both factors.
    pub local_prob_max_diff: f64,
    /// `Tr(|S><S| P_S)`, always 1.
    pub support_prob_pure: f64,
    /// `Tr(M_S P_S) = sum p_i^2`.
    pub support_prob_mixture: f64,
    pub purity_gap: f64,
    pub schmidt_weights: Vec<f64>,
}

/// Number of seeded random rank-1 probes per factor.
pub const RANDOM_PROBES: usize = 20;
const PROBE_SEED: u64 = 0x5eed_f4bb;

/// Local probes on a `d`-dimensional factor: eigenprojectors of the
/// computational basis, the discrete Fourier basis and a chirped Fourier
/// basis, then [`RANDOM_PROBES`] seeded random rank-1 projectors.
pub fn probe_projectors(d: usize) -> Vec<Projector> {
    let mut out = Vec::with_capacity(3 * d + RANDOM_PROBES);
    let tau = 2.0 * core::f64::consts::PI;
    for k in 0..d {
        out.push(linalg::projector(&StateVector::basis(d, k)).expect("basis vector"));
    }
    for chirp in [0.0, 0.5] {
        for k in 0..d {
            let amps: Vec<C64> = (0..d)
                .map(|j| {
                    let jf = j as f64;
                    let phase = tau * (jf * k as f64 + chirp * jf * jf) / d as f64;
                    C64::new(libm::cos(phase), libm::sin(phase))
                })
                .collect();
            out.push(linalg::projector(&StateVector::normalized(amps).expect("nonzero")).expect("normalized"));
        }
    }
    for r in 0..RANDOM_PROBES as u64 {
        let mut rng = rng::trial_rng(PROBE_SEED, domain::PROBES + d as u64, r);
        let amps: Vec<C64> = (0..d)
            .map(|_| C64::new(2.0 * rng::uniform(&mut rng) - 1.0, 2.0 * rng::uniform(&mut rng) - 1.0))
            .collect();
        if let Ok(v) = StateVector::normalized(amps) {
            out.push(linalg::projector(&v).expect("normalized"));
        }
    }
    out
}

pub fn fapp_compare(s_f: &StateVector, dims: (usize, usize)) -> Result<FappReport> {
    let terms = schmidt_decompose(s_f, dims)?;
    let mixture = mixture_from_schmidt(&terms)?;
    let pure = DensityOperator::pure(s_f);
    let mut diff: f64 = 0.0;
    for (keep, d) in [(Subsystem::A, dims.0), (Subsystem::B, dims.1)] {
        let rp = partial_trace(&pure, dims, keep)?;
        let rm = partial_trace(&mixture, dims, keep)?;
        for p in probe_projectors(d) {
            diff = diff.max((rp.probability(&p)? - rm.probability(&p)?).abs());
        }
    }
    let support = linalg::projector(s_f)?;
    let support_prob_pure = born_probability(s_f, &support)?;
    let support_prob_mixture = mixture.probability(&support)?;
    Ok(FappReport {
        local_prob_max_diff: diff,
        support_prob_pure,
        support_prob_mixture,
        purity_gap: support_prob_pure - support_prob_mixture,
        schmidt_weights: terms.iter().map(|t| t.weight).collect(),
    })
}

/// Support-test outcomes of objects prepared in `prepared` and tested for
/// the support of `candidate`. Each object registers with probability
/// `detect_probability`; registered objects answer `1` (possesses the
/// support) with the Born probability, else `0`.
pub fn simulate_support_tests(
    prepared: &StateVector,
    candidate: &StateVector,
    detect_probability: f64,
    n: u64,
    seed: u64,
) -> Result<Vec<Outcome>> {
    if !(0.0..=1.0).contains(&detect_probability) {
        return Err(Error::Model(String::from("detection probability outside [0, 1]")));
    }
    let p = born_probability(prepared, &linalg::projector(candidate)?)?;
    Ok((0..n)
        .map(|t| {
            let mut rng = rng::trial_rng(seed, domain::RECOGNIZE, t);
            if rng::uniform(&mut rng) < detect_probability {
                Outcome::Value(if rng::uniform(&mut rng) < p { 1.0 } else { 0.0 })
            } else {
                Outcome::NoRegistration
            }
        })
        .collect())
}

/// A preparation is recognized as the candidate state when at least
/// `min_detected` support tests registered and all of them answered `1`.
pub fn recognize_state(outcomes: &[Outcome], min_detected: usize) -> bool {
    let mut detected = 0usize;
    for o in outcomes {
        match o {
            Outcome::Value(v) if *v == 1.0 => detected += 1,
            Outcome::Value(_) => return false,
            Outcome::NoRegistration => {}
        }
    }
    detected >= min_detected.max(1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;
    use crate::statespace::consistent;
    use core::f64::consts::FRAC_1_SQRT_2;

    fn h() -> C64 {
        c(FRAC_1_SQRT_2, 0.0)
    }

    #[test]
    fn ideal_and_blind_single_branch() {
        let b = MeasurementBranching::standard(vec![c(1.0, 0.0)], vec![c(1.0, 0.0)], 2, 2).unwrap();
        let chi = evolve_premeasurement(&b).unwrap();
        let want = tensor_product(&StateVector::basis(2, 0), &StateVector::basis(2, 1));
        assert!(chi.same_ray(&want));

        let b = MeasurementBranching::standard(vec![c(1.0, 0.0)], vec![ZERO], 2, 2).unwrap();
        let chi = evolve_premeasurement(&b).unwrap();
        let want = tensor_product(&StateVector::basis(2, 0), &StateVector::basis(2, 0));
        assert!(chi.same_ray(&want));
        assert_eq!(select_detected(&chi, &b), Err(Error::NoDetections));
    }

    #[test]
    fn entangled_premeasurement_is_normalized() {
        let b = MeasurementBranching::standard(vec![h(), h()], vec![c(1.0, 0.0); 2], 2, 3).unwrap();
        let chi = evolve_premeasurement(&b).unwrap();
        let n: f64 = chi.amplitudes().iter().map(|z| z.modulus_squared()).sum();
        assert!((n - 1.0).abs() < 1e-12);
        assert!((b.detected_weight() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn uniform_attenuation_renormalizes_away() {
        let ideal = MeasurementBranching::standard(vec![h(), h()], vec![c(1.0, 0.0); 2], 2, 3).unwrap();
        let weak = MeasurementBranching::standard(vec![h(), h()], vec![c(0.9, 0.0); 2], 2, 3).unwrap();
        let s1 = select_detected(&evolve_premeasurement(&ideal).unwrap(), &ideal).unwrap();
        let s2 = select_detected(&evolve_premeasurement(&weak).unwrap(), &weak).unwrap();
        assert!(s1.same_ray(&s2));
        assert!((weak.detected_weight() + weak.undetected_weight() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn selection_can_distort_superposition() {
        let b = MeasurementBranching::standard(vec![h(), h()], vec![c(1.0, 0.0), ZERO], 2, 3).unwrap();
        let sf = select_detected(&evolve_premeasurement(&b).unwrap(), &b).unwrap();
        let want = tensor_product(&StateVector::basis(2, 0), &StateVector::basis(3, 1));
        assert_eq!(sf.amplitudes(), want.amplitudes());
    }

    #[test]
    fn branching_validation() {
        assert!(MeasurementBranching::standard(vec![c(1.0, 0.0)], vec![c(1.5, 0.0)], 2, 2).is_err());
        assert!(MeasurementBranching::standard(vec![c(0.5, 0.0)], vec![c(1.0, 0.0)], 2, 2).is_err());
        assert!(MeasurementBranching::standard(vec![h(), h()], vec![c(1.0, 0.0)], 2, 3).is_err());
        assert!(MeasurementBranching::standard(vec![h(), h()], vec![c(1.0, 0.0); 2], 2, 2).is_err());
        let bad_ready = StateVector::basis(3, 1);
        let r = MeasurementBranching::new(
            vec![StateVector::basis(2, 0)],
            bad_ready,
            vec![StateVector::basis(3, 1)],
            vec![c(1.0, 0.0)],
            vec![c(1.0, 0.0)],
        );
        assert!(matches!(r, Err(Error::Branching(_))));
    }

    #[test]
    fn projection_postulate_examples() {
        let sz = Observable::spin_along([0.0, 0.0, 1.0]);
        let up = StateVector::basis(2, 0);
        assert!(projection_postulate(&up, &sz, 0).unwrap().same_ray(&up));
        assert_eq!(projection_postulate(&up, &sz, 1), Err(Error::ImpossibleOutcome));

        let plus = StateVector::from_real(&[FRAC_1_SQRT_2, FRAC_1_SQRT_2]).unwrap();
        let s0 = projection_postulate(&plus, &sz, 0).unwrap();
        let s1 = projection_postulate(&plus, &sz, 1).unwrap();
        assert!(s0.same_ray(&up));
        assert!(consistent(&plus, &s0).unwrap() && consistent(&plus, &s1).unwrap());
        assert!(!consistent(&s0, &s1).unwrap());
    }

    #[test]
    fn fapp_examples() {
        let b = MeasurementBranching::standard(vec![h(), h()], vec![c(1.0, 0.0); 2], 2, 3).unwrap();
        let sf = select_detected(&evolve_premeasurement(&b).unwrap(), &b).unwrap();
        let r = fapp_compare(&sf, (2, 3)).unwrap();
        assert!(r.local_prob_max_diff < 1e-9);
        assert!((r.support_prob_mixture - 0.5).abs() < 1e-9);
        assert!((r.support_prob_pure - 1.0).abs() < 1e-12);

        let prod = tensor_product(&StateVector::basis(2, 1), &StateVector::basis(3, 2));
        let r = fapp_compare(&prod, (2, 3)).unwrap();
        assert!((r.support_prob_mixture - 1.0).abs() < 1e-12);
        assert!(r.purity_gap.abs() < 1e-12);
    }

    #[test]
    fn probe_set_size() {
        assert_eq!(probe_projectors(2).len(), 6 + RANDOM_PROBES);
        assert_eq!(probe_projectors(3).len(), 9 + RANDOM_PROBES);
        assert_eq!(probe_projectors(3), probe_projectors(3));
    }

    #[test]
    fn recognition_examples() {
        let all_yes = vec![Outcome::Value(1.0); 1000];
        assert!(recognize_state(&all_yes, 1000));
        let mut one_no = all_yes.clone();
        one_no[500] = Outcome::Value(0.0);
        assert!(!recognize_state(&one_no, 10));
        assert!(!recognize_state(&[Outcome::NoRegistration; 20], 0));
        assert!(!recognize_state(&[], 0));
    }

    #[test]
    fn simulated_support_tests() {
        let up = StateVector::basis(2, 0);
        let plus = StateVector::from_real(&[FRAC_1_SQRT_2, FRAC_1_SQRT_2]).unwrap();
        let same = simulate_support_tests(&up, &up, 0.7, 2000, 4).unwrap();
        assert!(recognize_state(&same, 100));
        let other = simulate_support_tests(&plus, &up, 0.7, 2000, 4).unwrap();
        assert!(!recognize_state(&other, 100));
    }
}
