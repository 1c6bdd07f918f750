//! Observables extended with a no-registration outcome, properties as
//! eigenvalue windows, and the certainty and consistency relations between
//! pure states and properties.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use nalgebra::{ComplexField, DMatrix};

use crate::error::{Error, Result};
use crate::linalg::{self, check_dim, max_abs_diff, qubit, Projector, StateVector, C64, STRUCT_TOL};

/// Default sentinel used for the no-registration value of spin observables.
pub const DEFAULT_NO_REGISTRATION: f64 = 0.0;

/// A discrete observable `A0`: eigenvalues `a_1..a_k` with their spectral
/// projectors, plus the no-registration value `a_0`.
///
/// `a_0` is a label only; nothing ever computes with it.
#[derive(Debug, Clone, PartialEq)]
pub struct Observable {
    label: String,
    eigenvalues: Vec<f64>,
    projectors: Vec<Projector>,
    no_registration_value: f64,
}

impl Observable {
    pub fn new(
        label: impl Into<String>,
        eigenvalues: Vec<f64>,
        projectors: Vec<Projector>,
        no_registration_value: f64,
    ) -> Result<Self> {
        if eigenvalues.is_empty() || eigenvalues.len() != projectors.len() {
            return Err(Error::Observable(format!(
                "{} eigenvalues for {} projectors",
                eigenvalues.len(),
                projectors.len()
            )));
        }
        for (i, a) in eigenvalues.iter().enumerate() {
            if !a.is_finite() {
                return Err(Error::Observable(format!("eigenvalue {a} is not finite")));
            }
            if eigenvalues[..i].contains(a) {
                return Err(Error::Observable(format!("eigenvalue {a} is repeated")));
            }
        }
        if eigenvalues.contains(&no_registration_value) {
            return Err(Error::Observable(format!(
                "no-registration value {no_registration_value} collides with an eigenvalue"
            )));
        }
        let dim = projectors[0].dim();
        for p in &projectors {
            check_dim(dim, p.dim())?;
        }
        for i in 0..projectors.len() {
            for j in (i + 1)..projectors.len() {
                let prod = projectors[i].matrix() * projectors[j].matrix();
                if prod.iter().any(|z| z.modulus() > STRUCT_TOL) {
                    return Err(Error::Observable(format!("projectors {i} and {j} are not orthogonal")));
                }
            }
        }
        let sum = projectors.iter().fold(DMatrix::<C64>::zeros(dim, dim), |acc, p| acc + p.matrix());
        if max_abs_diff(&sum, &DMatrix::identity(dim, dim)) > STRUCT_TOL {
            return Err(Error::Observable(String::from("projectors do not resolve the identity")));
        }
        Ok(Self { label: label.into(), eigenvalues, projectors, no_registration_value })
    }

    /// Spin-1/2 observable `n . sigma` with eigenvalues `+1, -1`.
    pub fn spin_along(n: [f64; 3]) -> Self {
        Self {
            label: format!("spin-along({:.6},{:.6},{:.6})", n[0], n[1], n[2]),
            eigenvalues: alloc::vec![1.0, -1.0],
            projectors: alloc::vec![qubit::spin_projector(n, true), qubit::spin_projector(n, false)],
            no_registration_value: DEFAULT_NO_REGISTRATION,
        }
    }

    /// Spin along the direction with polar angle `theta` and azimuth `phi` (radians).
    pub fn spin_along_angles(theta: f64, phi: f64) -> Self {
        let n = [
            libm::sin(theta) * libm::cos(phi),
            libm::sin(theta) * libm::sin(phi),
            libm::cos(theta),
        ];
        let mut obs = Self::spin_along(n);
        obs.label = format!("spin-along({theta},{phi})");
        obs
    }

    /// The dichotomic support test of `s`: eigenvalue `1` on the ray of `s`,
    /// `0` on its complement, and `-1` as the no-registration label.
    pub fn support_test(s: &StateVector) -> Result<Self> {
        let p = linalg::projector(s)?;
        let q = p.complement();
        Self::new("support", alloc::vec![1.0, 0.0], alloc::vec![p, q], -1.0)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn projectors(&self) -> &[Projector] {
        &self.projectors
    }

    pub fn no_registration_value(&self) -> f64 {
        self.no_registration_value
    }

    pub fn dim(&self) -> usize {
        self.projectors[0].dim()
    }

    pub fn index_of(&self, value: f64) -> Option<usize> {
        self.eigenvalues.iter().position(|&a| a == value)
    }
}

/// A property `(A0, Delta)` with `Delta` a finite set of eigenvalues, possibly
/// including the no-registration outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct PropertyWindow<'a> {
    observable: &'a Observable,
    window: Vec<usize>,
    includes_a0: bool,
}

impl<'a> PropertyWindow<'a> {
    /// Builds a window from outcome values. A value equal to the observable's
    /// no-registration value switches `includes_a0` on.
    pub fn new(observable: &'a Observable, values: &[f64], includes_a0: bool) -> Result<Self> {
        let mut window = Vec::new();
        let mut includes_a0 = includes_a0;
        for &v in values {
            if v == observable.no_registration_value {
                includes_a0 = true;
                continue;
            }
            let idx = observable
                .index_of(v)
                .ok_or_else(|| Error::Observable(format!("{v} is not an eigenvalue of {}", observable.label)))?;
            if !window.contains(&idx) {
                window.push(idx);
            }
        }
        window.sort_unstable();
        Ok(Self { observable, window, includes_a0 })
    }

    pub fn observable(&self) -> &'a Observable {
        self.observable
    }

    pub fn includes_a0(&self) -> bool {
        self.includes_a0
    }

    /// Eigenvalues in the window, `a_0` excluded.
    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.window.iter().map(|&i| self.observable.eigenvalues[i])
    }

    /// Whether a registered value lies in `Delta`.
    pub fn contains(&self, value: f64) -> bool {
        self.values().any(|a| a == value)
    }

    /// The same window with `a_0` removed.
    pub fn without_a0(&self) -> Self {
        Self { includes_a0: false, ..self.clone() }
    }

    fn projector_ignoring_a0(&self) -> Result<Projector> {
        let obs = self.observable;
        Projector::sum(obs.dim(), self.window.iter().map(|&i| &obs.projectors[i]))
    }
}

/// Projector of a property. Windows containing `a_0` have none.
pub fn property_projector(f: &PropertyWindow<'_>) -> Result<Projector> {
    if f.includes_a0 {
        return Err(Error::NoRepresentation);
    }
    f.projector_ignoring_a0()
}

/// Whether a property is certainly true, certainly false, or neither in a state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum CertaintyClass {
    CertainlyTrue,
    CertainlyFalse,
    Indeterminate,
}

/// Certainly true needs `a_0` in the window (the object may go unregistered)
/// and `P s = s` for the rest of the window; certainly false needs `a_0`
/// outside the window and `P s = 0`.
pub fn classify_certainty(s: &StateVector, f: &PropertyWindow<'_>) -> Result<CertaintyClass> {
    check_dim(f.observable.dim(), s.dim())?;
    let p = f.projector_ignoring_a0()?;
    let ps = p.apply(s)?;
    if f.includes_a0 {
        let residual = (&ps - s.as_dvector()).norm();
        if residual < STRUCT_TOL {
            return Ok(CertaintyClass::CertainlyTrue);
        }
    } else if ps.norm() < STRUCT_TOL {
        return Ok(CertaintyClass::CertainlyFalse);
    }
    Ok(CertaintyClass::Indeterminate)
}

/// The support of a pure state: the rank-1 projector onto its ray.
pub fn support_of(s: &StateVector) -> Result<Projector> {
    linalg::projector(s)
}

/// Two pure states are consistent iff their vectors are not orthogonal.
pub fn consistent(s1: &StateVector, s2: &StateVector) -> Result<bool> {
    Ok(s1.inner(s2)?.modulus() > STRUCT_TOL)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::born_probability;
    use core::f64::consts::FRAC_1_SQRT_2;

    const Z: [f64; 3] = [0.0, 0.0, 1.0];

    fn up() -> StateVector {
        StateVector::basis(2, 0)
    }

    fn down() -> StateVector {
        StateVector::basis(2, 1)
    }

    #[test]
    fn property_projector_examples() {
        let sz = Observable::spin_along(Z);
        let w = PropertyWindow::new(&sz, &[1.0], false).unwrap();
        let p = property_projector(&w).unwrap();
        assert!(max_abs_diff(p.matrix(), linalg::projector(&up()).unwrap().matrix()) < 1e-15);

        let all = PropertyWindow::new(&sz, &[1.0, -1.0], false).unwrap();
        let p = property_projector(&all).unwrap();
        assert!(max_abs_diff(p.matrix(), &DMatrix::identity(2, 2)) < 1e-15);

        let with_a0 = PropertyWindow::new(&sz, &[1.0, DEFAULT_NO_REGISTRATION], false).unwrap();
        assert!(with_a0.includes_a0());
        assert_eq!(property_projector(&with_a0), Err(Error::NoRepresentation));
    }

    #[test]
    fn window_rejects_foreign_values() {
        let sz = Observable::spin_along(Z);
        assert!(PropertyWindow::new(&sz, &[0.5], false).is_err());
    }

    #[test]
    fn certainty_examples() {
        let sz = Observable::spin_along(Z);
        let up_a0 = PropertyWindow::new(&sz, &[1.0], true).unwrap();
        let minus = PropertyWindow::new(&sz, &[-1.0], false).unwrap();
        let plus = PropertyWindow::new(&sz, &[1.0], false).unwrap();
        assert_eq!(classify_certainty(&up(), &up_a0).unwrap(), CertaintyClass::CertainlyTrue);
        assert_eq!(classify_certainty(&up(), &minus).unwrap(), CertaintyClass::CertainlyFalse);
        assert_eq!(classify_certainty(&up(), &plus).unwrap(), CertaintyClass::Indeterminate);

        let minus_a0 = PropertyWindow::new(&sz, &[-1.0], true).unwrap();
        assert_eq!(classify_certainty(&up(), &minus_a0).unwrap(), CertaintyClass::Indeterminate);
        let only_a0 = PropertyWindow::new(&sz, &[], true).unwrap();
        assert_eq!(classify_certainty(&up(), &only_a0).unwrap(), CertaintyClass::Indeterminate);

        let bell = StateVector::basis(4, 0);
        assert!(matches!(classify_certainty(&bell, &plus), Err(Error::Dimension { .. })));
    }

    #[test]
    fn observable_validation() {
        let p_up = qubit::spin_projector(Z, true);
        let p_down = qubit::spin_projector(Z, false);
        assert!(Observable::new("dup", alloc::vec![1.0, 1.0], alloc::vec![p_up.clone(), p_down.clone()], 0.0).is_err());
        assert!(Observable::new("a0", alloc::vec![1.0, 0.0], alloc::vec![p_up.clone(), p_down.clone()], 0.0).is_err());
        assert!(Observable::new("incomplete", alloc::vec![1.0], alloc::vec![p_up.clone()], 0.0).is_err());
        assert!(Observable::new("overlap", alloc::vec![1.0, -1.0], alloc::vec![p_up.clone(), p_up.clone()], 0.0).is_err());
        assert!(Observable::new("ok", alloc::vec![1.0, -1.0], alloc::vec![p_up, p_down], 0.0).is_ok());
    }

    #[test]
    fn support_examples() {
        let p = support_of(&up()).unwrap();
        assert!(max_abs_diff(p.matrix(), &DMatrix::from_row_slice(2, 2, &[linalg::ONE, linalg::ZERO, linalg::ZERO, linalg::ZERO])) < 1e-15);
        let plus = StateVector::from_real(&[FRAC_1_SQRT_2, FRAC_1_SQRT_2]).unwrap();
        assert!((born_probability(&plus, &support_of(&plus).unwrap()).unwrap() - 1.0).abs() < 1e-12);
        assert!(born_probability(&plus, &p).unwrap() < 1.0);
    }

    #[test]
    fn consistency_examples() {
        let plus = StateVector::from_real(&[FRAC_1_SQRT_2, FRAC_1_SQRT_2]).unwrap();
        assert!(consistent(&up(), &up()).unwrap());
        assert!(!consistent(&up(), &down()).unwrap());
        assert!(consistent(&up(), &plus).unwrap());
        assert!(consistent(&up(), &StateVector::basis(3, 0)).is_err());
    }

    #[test]
    fn support_test_observable() {
        let plus = StateVector::from_real(&[FRAC_1_SQRT_2, FRAC_1_SQRT_2]).unwrap();
        let obs = Observable::support_test(&plus).unwrap();
        assert_eq!(obs.eigenvalues(), &[1.0, 0.0]);
        assert_eq!(obs.no_registration_value(), -1.0);
    }
}
