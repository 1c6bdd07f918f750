//! Exact dense linear algebra for the standard quantum side of every experiment.
//!
//! States are complex vectors, properties are orthogonal projectors and mixtures
//! are density operators. Composite systems use the Kronecker convention: index
//! `i * d_b + j` addresses `|i>|j>`.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{Complex, ComplexField, DMatrix, DVector};

use crate::error::{Error, Result};

/// Complex amplitude type used throughout the crate.
pub type C64 = Complex<f64>;

/// Structural tolerance: normalization, hermiticity, idempotence, orthogonality.
pub const STRUCT_TOL: f64 = 1e-9;

/// Probabilities computed within this distance outside `[0, 1]` are clamped.
pub const CLAMP_TOL: f64 = 1e-12;

/// Schmidt weights below this threshold are dropped.
pub const SCHMIDT_CUTOFF: f64 = 1e-12;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// A normalized pure state, optionally tagged with a subsystem factorization.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amps: DVector<C64>,
    dims: Vec<usize>,
}

impl StateVector {
    /// Builds a state from amplitudes that must already be normalized.
    pub fn new(amplitudes: Vec<C64>) -> Result<Self> {
        let dim = amplitudes.len();
        Self::with_dims(amplitudes, vec![dim])
    }

    /// Builds a composite state; the product of `dims` must equal the amplitude count.
    pub fn with_dims(amplitudes: Vec<C64>, dims: Vec<usize>) -> Result<Self> {
        let dim = amplitudes.len();
        if dim == 0 {
            return Err(Error::Dimension { expected: 1, found: 0 });
        }
        let prod: usize = dims.iter().product();
        if prod != dim || dims.contains(&0) {
            return Err(Error::Dimension { expected: prod, found: dim });
        }
        if amplitudes.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::Normalization(f64::NAN));
        }
        let amps = DVector::from_vec(amplitudes);
        let norm = amps.norm();
        if (norm - 1.0).abs() > STRUCT_TOL {
            return Err(Error::Normalization(norm));
        }
        Ok(Self { amps, dims })
    }

    /// Rescales arbitrary nonzero amplitudes to unit norm.
    pub fn normalized(amplitudes: Vec<C64>) -> Result<Self> {
        let dim = amplitudes.len();
        Self::normalized_with_dims(amplitudes, vec![dim])
    }

    pub fn normalized_with_dims(amplitudes: Vec<C64>, dims: Vec<usize>) -> Result<Self> {
        let v = DVector::from_vec(amplitudes);
        let norm = v.norm();
        if !(norm > CLAMP_TOL) || !norm.is_finite() {
            return Err(Error::Normalization(norm));
        }
        Self::with_dims((v / C64::from(norm)).data.into(), dims)
    }

    pub fn from_real(amplitudes: &[f64]) -> Result<Self> {
        Self::new(amplitudes.iter().map(|&x| c(x, 0.0)).collect())
    }

    /// Computational basis vector `|index>`.
    pub fn basis(dim: usize, index: usize) -> Self {
        assert!(index < dim, "basis index {index} out of range for dim {dim}");
        let mut amps = DVector::from_element(dim, ZERO);
        amps[index] = ONE;
        Self { amps, dims: vec![dim] }
    }

    pub(crate) fn from_dvector_unchecked(amps: DVector<C64>, dims: Vec<usize>) -> Self {
        Self { amps, dims }
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn amplitudes(&self) -> &[C64] {
        self.amps.as_slice()
    }

    pub(crate) fn as_dvector(&self) -> &DVector<C64> {
        &self.amps
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        check_dim(self.dim(), other.dim())?;
        Ok(self.amps.dotc(&other.amps))
    }

    /// True when both vectors represent the same ray, i.e. `|<u|v>| = 1`.
    pub fn same_ray(&self, other: &StateVector) -> bool {
        self.inner(other)
            .map(|z| (z.modulus() - 1.0).abs() < STRUCT_TOL)
            .unwrap_or(false)
    }

    /// Re-tags the factorization without touching the amplitudes.
    pub fn reshape(mut self, dims: Vec<usize>) -> Result<Self> {
        let prod: usize = dims.iter().product();
        check_dim(self.dim(), prod)?;
        self.dims = dims;
        Ok(self)
    }

    /// Applies a unitary. Fails if the image is not normalized.
    pub fn apply(&self, unitary: &DMatrix<C64>) -> Result<StateVector> {
        check_dim(unitary.nrows(), self.dim())?;
        let out = unitary * &self.amps;
        StateVector::with_dims(out.data.into(), self.dims.clone())
    }
}

/// Kronecker product of two states; the dims lists are concatenated.
pub fn tensor_product(a: &StateVector, b: &StateVector) -> StateVector {
    let amps = a.amps.kronecker(&b.amps);
    let mut dims = a.dims.clone();
    dims.extend_from_slice(&b.dims);
    StateVector { amps, dims }
}

/// An orthogonal projector `P = P^2 = P^dagger`.
#[derive(Debug, Clone, PartialEq)]
pub struct Projector {
    m: DMatrix<C64>,
}

impl Projector {
    pub fn new(matrix: DMatrix<C64>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::InvalidOperator("projector matrix is not square"));
        }
        if !approx_eq(&matrix, &matrix.adjoint(), STRUCT_TOL) {
            return Err(Error::InvalidOperator("projector is not Hermitian"));
        }
        if !approx_eq(&(&matrix * &matrix), &matrix, STRUCT_TOL) {
            return Err(Error::InvalidOperator("projector is not idempotent"));
        }
        Ok(Self { m: matrix })
    }

    pub(crate) fn from_matrix_unchecked(m: DMatrix<C64>) -> Self {
        Self { m }
    }

    pub fn zero(dim: usize) -> Self {
        Self { m: DMatrix::from_element(dim, dim, ZERO) }
    }

    pub fn identity(dim: usize) -> Self {
        Self { m: DMatrix::identity(dim, dim) }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.m
    }

    /// `P ⊗ Q`, a projector on the composite space.
    pub fn tensor(&self, other: &Projector) -> Projector {
        Projector { m: self.m.kronecker(&other.m) }
    }

    /// `I - P`.
    pub fn complement(&self) -> Projector {
        Projector { m: DMatrix::identity(self.dim(), self.dim()) - &self.m }
    }

    pub fn apply(&self, v: &StateVector) -> Result<DVector<C64>> {
        check_dim(self.dim(), v.dim())?;
        Ok(&self.m * &v.amps)
    }

    /// Sum of pairwise-orthogonal projectors. Orthogonality is the caller's
    /// responsibility; the result is re-validated.
    pub fn sum<'a>(dim: usize, parts: impl IntoIterator<Item = &'a Projector>) -> Result<Projector> {
        let mut acc = DMatrix::from_element(dim, dim, ZERO);
        for p in parts {
            check_dim(dim, p.dim())?;
            acc += &p.m;
        }
        Projector::new(acc)
    }
}

/// Rank-1 projector `|v><v|` onto the ray of a normalized vector.
pub fn projector(v: &StateVector) -> Result<Projector> {
    let norm = v.amps.norm();
    if (norm - 1.0).abs() > STRUCT_TOL {
        return Err(Error::Normalization(norm));
    }
    Ok(Projector { m: &v.amps * v.amps.adjoint() })
}

/// Born probability `<v|P|v>`, clamped to `[0, 1]` against rounding.
pub fn born_probability(s: &StateVector, p: &Projector) -> Result<f64> {
    let pv = p.apply(s)?;
    Ok(clamp_probability(s.amps.dotc(&pv).re))
}

pub(crate) fn clamp_probability(p: f64) -> f64 {
    if (-CLAMP_TOL..0.0).contains(&p) {
        0.0
    } else if p > 1.0 && p <= 1.0 + CLAMP_TOL {
        1.0
    } else {
        p
    }
}

/// A density operator: Hermitian, unit trace, positive semidefinite.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    m: DMatrix<C64>,
}

impl DensityOperator {
    pub fn new(matrix: DMatrix<C64>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::InvalidOperator("density matrix is not square"));
        }
        if !approx_eq(&matrix, &matrix.adjoint(), STRUCT_TOL) {
            return Err(Error::InvalidOperator("density matrix is not Hermitian"));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > STRUCT_TOL || tr.im.abs() > STRUCT_TOL {
            return Err(Error::Normalization(tr.re));
        }
        let min_eig = matrix.clone().symmetric_eigenvalues().min();
        if min_eig < -STRUCT_TOL {
            return Err(Error::InvalidOperator("density matrix is not positive semidefinite"));
        }
        Ok(Self { m: matrix })
    }

    /// `|v><v|`.
    pub fn pure(v: &StateVector) -> Self {
        Self { m: &v.amps * v.amps.adjoint() }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.m
    }

    pub fn trace(&self) -> C64 {
        self.m.trace()
    }

    /// `Tr(rho^2)`.
    pub fn purity(&self) -> f64 {
        (&self.m * &self.m).trace().re
    }

    /// `Tr(rho P)`, clamped like [`born_probability`].
    pub fn probability(&self, p: &Projector) -> Result<f64> {
        check_dim(self.dim(), p.dim())?;
        Ok(clamp_probability((&self.m * p.matrix()).trace().re))
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = self.m.clone().symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(|a, b| b.total_cmp(a));
        ev
    }
}

/// Which factor of a bipartite system to keep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Subsystem {
    A,
    B,
}

/// Reduced density operator of one factor of a `d_a x d_b` system.
pub fn partial_trace(rho: &DensityOperator, dims: (usize, usize), keep: Subsystem) -> Result<DensityOperator> {
    let (da, db) = dims;
    check_dim(rho.dim(), da * db)?;
    let m = &rho.m;
    let out = match keep {
        Subsystem::A => DMatrix::from_fn(da, da, |i, k| (0..db).map(|j| m[(i * db + j, k * db + j)]).sum()),
        Subsystem::B => DMatrix::from_fn(db, db, |j, l| (0..da).map(|i| m[(i * db + j, i * db + l)]).sum()),
    };
    Ok(DensityOperator { m: out })
}

/// One term `sqrt(p) |left>|right>` of a biorthogonal decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct SchmidtTerm {
    pub weight: f64,
    pub left: StateVector,
    pub right: StateVector,
}

/// Biorthogonal (Schmidt) decomposition through the SVD of the `d_a x d_b`
/// coefficient matrix. Weights are sorted in descending order; weights below
/// [`SCHMIDT_CUTOFF`] are dropped. Degenerate blocks get an arbitrary
/// orthonormal basis.
pub fn schmidt_decompose(v: &StateVector, dims: (usize, usize)) -> Result<Vec<SchmidtTerm>> {
    let (da, db) = dims;
    check_dim(v.dim(), da * db)?;
    let norm = v.amps.norm();
    if (norm - 1.0).abs() > STRUCT_TOL {
        return Err(Error::Normalization(norm));
    }
    // Row-major reshape: coeff[(i, j)] = v[i * db + j].
    let coeff = DMatrix::from_fn(da, db, |i, j| v.amps[i * db + j]);
    let svd = coeff.svd(true, true);
    let (u, v_t) = match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => (u, v_t),
        _ => return Err(Error::InvalidOperator("singular value decomposition failed")),
    };

    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));

    let mut terms = Vec::new();
    for k in order {
        let sigma = svd.singular_values[k];
        let weight = sigma * sigma;
        if weight < SCHMIDT_CUTOFF {
            continue;
        }
        let left = DVector::from_iterator(da, u.column(k).iter().copied());
        // coeff = U S V^dagger, so the right factor is the k-th row of V^dagger.
        let right = DVector::from_iterator(db, v_t.row(k).iter().copied());
        terms.push(SchmidtTerm {
            weight,
            left: StateVector::from_dvector_unchecked(left, vec![da]),
            right: StateVector::from_dvector_unchecked(right, vec![db]),
        });
    }
    Ok(terms)
}

/// Rebuilds `sum sqrt(p_i) |left_i>|right_i>`.
pub fn schmidt_reconstruct(terms: &[SchmidtTerm]) -> Option<StateVector> {
    let first = terms.first()?;
    let (da, db) = (first.left.dim(), first.right.dim());
    let mut acc = DVector::from_element(da * db, ZERO);
    for t in terms {
        acc += t.left.amps.kronecker(&t.right.amps) * C64::from(libm::sqrt(t.weight));
    }
    Some(StateVector::from_dvector_unchecked(acc, vec![da, db]))
}

/// The mixture `sum p_i |l_i r_i><l_i r_i|` associated with a decomposition.
pub fn mixture_from_schmidt(terms: &[SchmidtTerm]) -> Result<DensityOperator> {
    let first = terms.first().ok_or(Error::Normalization(0.0))?;
    let total: f64 = terms.iter().map(|t| t.weight).sum();
    if (total - 1.0).abs() > STRUCT_TOL {
        return Err(Error::Normalization(total));
    }
    let dim = first.left.dim() * first.right.dim();
    let mut m = DMatrix::from_element(dim, dim, ZERO);
    for t in terms {
        if t.weight <= 0.0 {
            return Err(Error::Normalization(t.weight));
        }
        let prod = t.left.amps.kronecker(&t.right.amps);
        check_dim(dim, prod.len())?;
        m += (&prod * prod.adjoint()) * C64::from(t.weight);
    }
    Ok(DensityOperator { m })
}

/// Largest entrywise modulus of `a - b`.
pub fn max_abs_diff(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    if a.shape() != b.shape() {
        return f64::INFINITY;
    }
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).modulus()).fold(0.0, f64::max)
}

fn approx_eq(a: &DMatrix<C64>, b: &DMatrix<C64>, tol: f64) -> bool {
    max_abs_diff(a, b) <= tol
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::Dimension { expected, found })
    }
}

/// Pauli matrices and single-qubit helpers.
pub mod qubit {
    use super::*;

    pub fn sigma_x() -> DMatrix<C64> {
        DMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
    }

    pub fn sigma_y() -> DMatrix<C64> {
        DMatrix::from_row_slice(2, 2, &[ZERO, c(0.0, -1.0), c(0.0, 1.0), ZERO])
    }

    pub fn sigma_z() -> DMatrix<C64> {
        DMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, c(-1.0, 0.0)])
    }

    /// `n . sigma` for a unit vector `n`.
    pub fn spin_operator(n: [f64; 3]) -> DMatrix<C64> {
        sigma_x() * C64::from(n[0]) + sigma_y() * C64::from(n[1]) + sigma_z() * C64::from(n[2])
    }

    /// Eigenvector of `n . sigma` with eigenvalue `+1` (`up`) or `-1`.
    pub fn spin_state(n: [f64; 3], up: bool) -> StateVector {
        let theta = libm::acos(n[2].clamp(-1.0, 1.0));
        let phi = libm::atan2(n[1], n[0]);
        let (ch, sh) = (libm::cos(theta / 2.0), libm::sin(theta / 2.0));
        let phase = C64::new(libm::cos(phi), libm::sin(phi));
        let amps = if up {
            vec![C64::from(ch), phase * sh]
        } else {
            vec![C64::from(-sh), phase * ch]
        };
        StateVector::from_dvector_unchecked(DVector::from_vec(amps), vec![2])
    }

    /// Projector onto the `±1` eigenspace of `n . sigma`, `(I ± n.sigma)/2`.
    pub fn spin_projector(n: [f64; 3], up: bool) -> Projector {
        let sign = if up { 1.0 } else { -1.0 };
        let m = (DMatrix::<C64>::identity(2, 2) + spin_operator(n) * C64::from(sign)) * C64::from(0.5);
        Projector::from_matrix_unchecked(m)
    }
}
