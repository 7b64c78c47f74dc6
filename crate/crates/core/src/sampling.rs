//! Seeded random operators and states.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::{ComplexMatrix, HermitianOperator, StateVector, C64};

/// Independent generator for sample `stream` of a seeded computation, so
/// results do not depend on how samples are scheduled across threads.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

pub fn gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| complex_gaussian(rng))
}

/// `(G + G†)/2` with i.i.d. complex Gaussian `G`.
pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> HermitianOperator {
    let g = gaussian_matrix(rng, dim, dim);
    HermitianOperator::new((&g + g.adjoint()).scale(0.5)).expect("symmetrized matrix is Hermitian")
}

/// Haar-distributed unitary from the QR factorization of a Gaussian matrix.
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> ComplexMatrix {
    let qr = gaussian_matrix(rng, dim, dim).qr();
    let (mut q, r) = qr.unpack();
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
        let mut col = q.column_mut(j);
        col *= phase;
    }
    q
}

/// Uniformly distributed unit vector.
pub fn random_state<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> StateVector {
    let v = DVector::from_fn(dim, |_, _| complex_gaussian(rng));
    StateVector::normalized(v).expect("gaussian vector is nonzero")
}

/// Uniformly distributed unit vector in the span of orthonormal `basis`
/// columns.
pub fn random_state_in_span<R: Rng + ?Sized>(rng: &mut R, basis: &ComplexMatrix) -> StateVector {
    let coeffs = DVector::from_fn(basis.ncols(), |_, _| complex_gaussian(rng));
    StateVector::normalized(basis * coeffs).expect("gaussian combination is nonzero")
}

/// A model with planted decoherence-free blocks.
///
/// In the basis given by the columns of `unitary`, block `i` (of size
/// `blocks[i]`, laid out first) has `H̃ = c_i·1` and `H_E` diagonal. The
/// remaining coordinates (at least two, since a one-dimensional remainder
/// would itself be a common eigenvector) carry generic Hermitian blocks, so
/// no further common eigenvectors exist.
#[derive(Clone, Debug)]
pub struct PlantedModel {
    pub model: crate::dephasing::DephasingModel,
    pub unitary: ComplexMatrix,
    pub blocks: Vec<usize>,
}

impl PlantedModel {
    pub fn generate<R: Rng + ?Sized>(rng: &mut R, dim: usize, blocks: &[usize]) -> Self {
        let planted: usize = blocks.iter().sum();
        assert!(planted + 2 <= dim, "planted blocks must leave a generic remainder of at least 2");
        let mut h_int = ComplexMatrix::zeros(dim, dim);
        let mut h_env = ComplexMatrix::zeros(dim, dim);
        let mut offset = 0;
        for (i, &size) in blocks.iter().enumerate() {
            // well separated scalars, one per block
            let c = (i as f64 + 1.0) * 0.9 + 0.3 * rng.random::<f64>();
            for k in offset..offset + size {
                h_int[(k, k)] = C64::new(c, 0.0);
                h_env[(k, k)] = C64::new(rng.sample::<f64, _>(StandardNormal), 0.0);
            }
            offset += size;
        }
        let rest = dim - planted;
        let a = random_hermitian(rng, rest).into_matrix();
        let b = random_hermitian(rng, rest).into_matrix();
        h_int.view_mut((planted, planted), (rest, rest)).copy_from(&a);
        h_env.view_mut((planted, planted), (rest, rest)).copy_from(&b);

        let u = random_unitary(rng, dim);
        let rotate = |m: &ComplexMatrix| {
            let m = &u * m * u.adjoint();
            HermitianOperator::new((&m + m.adjoint()).scale(0.5)).expect("conjugated Hermitian")
        };
        let model = crate::dephasing::DephasingModel::new(rotate(&h_int), rotate(&h_env))
            .expect("equal dimensions");
        Self {
            model,
            unitary: u,
            blocks: blocks.to_vec(),
        }
    }
}
