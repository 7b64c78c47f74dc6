//! Dense complex linear algebra for the small Hermitian systems used
//! throughout the crate.
//!
//! Everything is built on a single Hermitian eigensolver. Propagation is
//! `e^{-iHt} = V e^{-iΛt} V†`; spectral decompositions cluster the sorted
//! eigenvalues and keep an orthonormal basis for each eigenspace, so the
//! projectors are only materialized on request.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::{Error, Result};

pub type C64 = Complex64;
pub type ComplexMatrix = DMatrix<C64>;

/// Relative tolerance on `max |H - H†|` against `max |H|`.
pub const HERMITICITY_TOL: f64 = 1e-12;
/// Tolerance on `| ‖ψ‖ - 1 |` for states.
pub const NORM_TOL: f64 = 1e-12;
/// Eigenvalue clustering tolerance, relative to the spectral range.
pub const DEFAULT_CLUSTER_REL_TOL: f64 = 1e-9;
/// Accept `PQP` eigenvalues at or above `1 - DEFAULT_INTERSECTION_TOL`.
pub const DEFAULT_INTERSECTION_TOL: f64 = 1e-9;
/// Idempotency / hermiticity tolerance for projector inputs.
pub const PROJECTOR_TOL: f64 = 1e-10;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

fn max_abs(m: &ComplexMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

fn check_square(m: &ComplexMatrix) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    if m.nrows() == 0 {
        return Err(Error::Empty("matrix"));
    }
    Ok(m.nrows())
}

/// Worst `|m_ij - conj(m_ji)|` and where it occurs.
fn hermiticity_defect(m: &ComplexMatrix) -> (usize, usize, f64) {
    let n = m.nrows();
    let mut worst = (0, 0, 0.0);
    for i in 0..n {
        for j in i..n {
            let d = (m[(i, j)] - m[(j, i)].conj()).norm();
            if d > worst.2 {
                worst = (i, j, d);
            }
        }
    }
    worst
}

/// Conjugate transpose.
pub fn adjoint(m: &ComplexMatrix) -> ComplexMatrix {
    m.adjoint()
}

pub fn identity(dim: usize) -> ComplexMatrix {
    ComplexMatrix::identity(dim, dim)
}

pub fn sigma_x() -> ComplexMatrix {
    ComplexMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
}

pub fn sigma_y() -> ComplexMatrix {
    let i = C64::new(0.0, 1.0);
    ComplexMatrix::from_row_slice(2, 2, &[ZERO, -i, i, ZERO])
}

pub fn sigma_z() -> ComplexMatrix {
    ComplexMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE])
}

/// A self-adjoint operator. The stored matrix is exactly Hermitian: inputs
/// within tolerance are symmetrized on construction.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianOperator {
    matrix: ComplexMatrix,
}

impl HermitianOperator {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        check_square(&matrix)?;
        for (idx, z) in matrix.iter().enumerate() {
            if !z.re.is_finite() || !z.im.is_finite() {
                // column-major storage
                let n = matrix.nrows();
                return Err(Error::NonFinite {
                    row: idx % n,
                    col: idx / n,
                });
            }
        }
        let (row, col, deviation) = hermiticity_defect(&matrix);
        if deviation > HERMITICITY_TOL * max_abs(&matrix) {
            return Err(Error::NotHermitian {
                row,
                col,
                deviation,
            });
        }
        let matrix = (&matrix + matrix.adjoint()).scale(0.5);
        Ok(Self { matrix })
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Result<Self> {
        if diag.is_empty() {
            return Err(Error::Empty("diagonal"));
        }
        let d = DVector::from_iterator(diag.len(), diag.iter().map(|&x| C64::new(x, 0.0)));
        Self::new(ComplexMatrix::from_diagonal(&d))
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            matrix: ComplexMatrix::zeros(dim, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        same_dim(self.dim(), other.dim())?;
        Ok(Self {
            matrix: &self.matrix + &other.matrix,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        same_dim(self.dim(), other.dim())?;
        Ok(Self {
            matrix: &self.matrix - &other.matrix,
        })
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            matrix: self.matrix.scale(factor),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.matrix.norm()
    }

    pub fn max_abs_entry(&self) -> f64 {
        max_abs(&self.matrix)
    }

    /// Full eigendecomposition with eigenvalues sorted ascending.
    pub fn eigensystem(&self) -> Eigensystem {
        Eigensystem::of_hermitian(&self.matrix)
    }

    /// `‖H v - λ v‖`.
    pub fn eigen_residual(&self, v: &DVector<C64>, lambda: f64) -> f64 {
        (&self.matrix * v - v.scale(lambda)).norm()
    }

    pub fn commutator_norm(&self, other: &Self) -> Result<f64> {
        same_dim(self.dim(), other.dim())?;
        let c = &self.matrix * &other.matrix - &other.matrix * &self.matrix;
        Ok(c.norm())
    }
}

fn same_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// Unit-norm state in a finite-dimensional Hilbert space.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    amps: DVector<C64>,
}

impl StateVector {
    pub fn new(amps: DVector<C64>) -> Result<Self> {
        if amps.is_empty() {
            return Err(Error::Empty("state"));
        }
        let norm = amps.norm();
        if !norm.is_finite() || (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized { norm });
        }
        Ok(Self { amps })
    }

    pub fn from_slice(amps: &[C64]) -> Result<Self> {
        Self::new(DVector::from_column_slice(amps))
    }

    /// Rescales to unit norm; fails only for the zero (or non-finite) vector.
    pub fn normalized(amps: DVector<C64>) -> Result<Self> {
        if amps.is_empty() {
            return Err(Error::Empty("state"));
        }
        let norm = amps.norm();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::NotNormalized { norm });
        }
        Ok(Self {
            amps: amps.unscale(norm),
        })
    }

    /// Computational basis vector `|index⟩`.
    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        if index >= dim {
            return Err(Error::InvalidArgument(format!(
                "basis index {index} out of range for dimension {dim}"
            )));
        }
        let mut amps = DVector::zeros(dim);
        amps[index] = ONE;
        Ok(Self { amps })
    }

    pub(crate) fn from_unit_unchecked(amps: DVector<C64>) -> Self {
        debug_assert!((amps.norm() - 1.0).abs() < 1e-9);
        Self { amps }
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amps
    }

    pub fn into_amplitudes(self) -> DVector<C64> {
        self.amps
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Self) -> Result<C64> {
        same_dim(self.dim(), other.dim())?;
        Ok(self.amps.dotc(&other.amps))
    }

    pub fn norm(&self) -> f64 {
        self.amps.norm()
    }
}

/// Eigenvalues (ascending) and the matching orthonormal eigenvectors as
/// columns.
#[derive(Clone, Debug)]
pub struct Eigensystem {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

impl Eigensystem {
    fn of_hermitian(m: &ComplexMatrix) -> Self {
        let n = m.nrows();
        let eig = SymmetricEigen::new(m.clone());
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let mut vectors = ComplexMatrix::zeros(n, n);
        for (dst, &src) in order.iter().enumerate() {
            vectors.set_column(dst, &eig.eigenvectors.column(src));
        }
        Self { values, vectors }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// Coordinates of `psi` in the eigenbasis, `V† ψ`.
    pub fn coordinates(&self, psi: &DVector<C64>) -> DVector<C64> {
        self.vectors.ad_mul(psi)
    }

    /// `e^{-iHt} ψ`.
    pub fn propagate(&self, psi: &DVector<C64>, t: f64) -> DVector<C64> {
        let mut c = self.coordinates(psi);
        for (ci, &l) in c.iter_mut().zip(&self.values) {
            *ci *= C64::from_polar(1.0, -l * t);
        }
        &self.vectors * c
    }

    pub fn spectral_range(&self) -> f64 {
        match (self.values.first(), self.values.last()) {
            (Some(lo), Some(hi)) => hi - lo,
            _ => 0.0,
        }
    }

    pub fn spectral_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |acc, l| acc.max(l.abs()))
    }

    /// `DEFAULT_CLUSTER_REL_TOL` times the spectral range, or times the
    /// spectral norm (at least 1) when the spectrum is a single point.
    pub fn default_cluster_tol(&self) -> f64 {
        let range = self.spectral_range();
        if range > 0.0 {
            DEFAULT_CLUSTER_REL_TOL * range
        } else {
            DEFAULT_CLUSTER_REL_TOL * self.spectral_norm().max(1.0)
        }
    }

    /// Groups consecutive sorted eigenvalues whose spacing is at most
    /// `cluster_tol`.
    pub fn cluster(&self, cluster_tol: f64) -> Result<SpectralDecomposition> {
        if !(cluster_tol > 0.0 && cluster_tol.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "cluster tolerance must be positive, got {cluster_tol}"
            )));
        }
        let n = self.dim();
        let mut clusters = Vec::new();
        let mut start = 0;
        for i in 1..=n {
            if i == n || self.values[i] - self.values[i - 1] > cluster_tol {
                let members = &self.values[start..i];
                let eigenvalue = members.iter().sum::<f64>() / members.len() as f64;
                let basis = self.vectors.columns(start, i - start).into_owned();
                clusters.push(EigenCluster { eigenvalue, basis });
                start = i;
            }
        }
        Ok(SpectralDecomposition {
            dim: n,
            clusters,
            cluster_tol,
        })
    }
}

/// One eigenspace: its (averaged) eigenvalue and an orthonormal basis stored
/// as columns.
#[derive(Clone, Debug)]
pub struct EigenCluster {
    pub eigenvalue: f64,
    pub basis: ComplexMatrix,
}

impl EigenCluster {
    pub fn multiplicity(&self) -> usize {
        self.basis.ncols()
    }

    pub fn projector(&self) -> ComplexMatrix {
        &self.basis * self.basis.adjoint()
    }

    /// `Π ψ`.
    pub fn project(&self, psi: &DVector<C64>) -> DVector<C64> {
        &self.basis * self.basis.ad_mul(psi)
    }

    /// `⟨ψ|Π|ψ⟩`.
    pub fn weight(&self, psi: &DVector<C64>) -> f64 {
        self.basis.ad_mul(psi).norm_squared()
    }
}

#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    dim: usize,
    clusters: Vec<EigenCluster>,
    cluster_tol: f64,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn clusters(&self) -> &[EigenCluster] {
        &self.clusters
    }

    pub fn cluster_tol(&self) -> f64 {
        self.cluster_tol
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.clusters.iter().map(|c| c.eigenvalue).collect()
    }

    /// `Σ λ Π`.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(self.dim, self.dim);
        for c in &self.clusters {
            m += c.projector().scale(c.eigenvalue);
        }
        m
    }
}

/// Spectral decomposition with eigenvalues within `cluster_tol` merged.
pub fn spectral_decompose(h: &HermitianOperator, cluster_tol: f64) -> Result<SpectralDecomposition> {
    h.eigensystem().cluster(cluster_tol)
}

/// `e^{-iHt}|ψ⟩`.
pub fn evolve(h: &HermitianOperator, psi: &StateVector, t: f64) -> Result<StateVector> {
    same_dim(h.dim(), psi.dim())?;
    let out = h.eigensystem().propagate(psi.amplitudes(), t);
    Ok(StateVector::from_unit_unchecked(out))
}

/// Kronecker product in list order.
pub fn tensor_product(ops: &[ComplexMatrix]) -> Result<ComplexMatrix> {
    let (first, rest) = ops.split_first().ok_or(Error::Empty("operator list"))?;
    Ok(rest.iter().fold(first.clone(), |acc, m| acc.kronecker(m)))
}

pub fn tensor_state(states: &[StateVector]) -> Result<StateVector> {
    let (first, rest) = states.split_first().ok_or(Error::Empty("state list"))?;
    let amps = rest
        .iter()
        .fold(first.amps.clone(), |acc, s| acc.kronecker(&s.amps));
    Ok(StateVector::from_unit_unchecked(amps))
}

fn check_projector(p: &ComplexMatrix, name: &str) -> Result<usize> {
    let n = check_square(p)?;
    let (row, col, dev) = hermiticity_defect(p);
    if dev > PROJECTOR_TOL {
        return Err(Error::NotProjector(format!(
            "{name} is not Hermitian at ({row}, {col}), deviation {dev:e}"
        )));
    }
    let idem = max_abs(&(p * p - p));
    if idem > PROJECTOR_TOL {
        return Err(Error::NotProjector(format!(
            "{name} is not idempotent, max |P² - P| = {idem:e}"
        )));
    }
    Ok(n)
}

/// Orthonormal basis of `range(P) ∩ range(Q)`: the eigenvectors of `PQP`
/// whose eigenvalue lies within `tol` of 1.
pub fn range_intersection(
    p: &ComplexMatrix,
    q: &ComplexMatrix,
    tol: f64,
) -> Result<Vec<StateVector>> {
    let n = check_projector(p, "P")?;
    same_dim(n, check_projector(q, "Q")?)?;
    let pqp = p * q * p;
    let pqp = HermitianOperator {
        matrix: (&pqp + pqp.adjoint()).scale(0.5),
    };
    let eig = pqp.eigensystem();
    Ok(eig
        .values
        .iter()
        .enumerate()
        .filter(|(_, &l)| l >= 1.0 - tol)
        .map(|(i, _)| StateVector::from_unit_unchecked(eig.vectors.column(i).into_owned()))
        .collect())
}

/// Same intersection as [`range_intersection`], but taking orthonormal bases
/// (as columns) of the two ranges. Works in the `rank P` dimensional
/// coordinates of the first range, so it is cheap for low-rank projectors.
pub fn subspace_intersection(
    basis_p: &ComplexMatrix,
    basis_q: &ComplexMatrix,
    tol: f64,
) -> Vec<DVector<C64>> {
    debug_assert_eq!(basis_p.nrows(), basis_q.nrows());
    let overlap = basis_q.ad_mul(basis_p);
    let gram = overlap.ad_mul(&overlap);
    let gram = (&gram + gram.adjoint()).scale(0.5);
    let eig = Eigensystem::of_hermitian(&gram);
    eig.values
        .iter()
        .enumerate()
        .filter(|(_, &l)| l >= 1.0 - tol)
        .map(|(i, _)| {
            let v = basis_p * eig.vectors.column(i);
            let norm = v.norm();
            v.unscale(norm)
        })
        .collect()
}
