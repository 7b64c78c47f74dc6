//! Decoherence-free environment states.
//!
//! `|r(t)| = 1` for all `t` holds exactly when `|I⟩` is a combination of
//! common eigenvectors of `H₀` and `H₁` that share one energy difference
//! `λ₀ - λ₁`. Common eigenvectors are found pairwise from the clustered
//! spectra of the two branches: the intersection of the ranges of `Π⁽⁰⁾_j`
//! and `Π⁽¹⁾_k`.

use nalgebra::DVector;
use rayon::prelude::*;

use crate::dephasing::{min_abs_factor, DephasingModel, TimeGrid};
use crate::linalg::{
    subspace_intersection, ComplexMatrix, Eigensystem, HermitianOperator, StateVector, C64,
};
use crate::sampling::{random_hermitian, stream_rng};
use crate::{Error, Result};

/// Default relative detection tolerance.
pub const DEFAULT_DETECTION_TOL: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct CommonEigenvector {
    pub vector: StateVector,
    pub lambda0: f64,
    pub lambda1: f64,
}

impl CommonEigenvector {
    pub fn delta(&self) -> f64 {
        self.lambda0 - self.lambda1
    }
}

#[derive(Clone, Debug)]
pub struct DfsGroup {
    /// Shared `λ₀ - λ₁` of the group.
    pub delta: f64,
    pub basis: Vec<StateVector>,
}

impl DfsGroup {
    /// Basis vectors as columns.
    pub fn basis_matrix(&self) -> ComplexMatrix {
        let cols: Vec<DVector<C64>> = self.basis.iter().map(|v| v.amplitudes().clone()).collect();
        ComplexMatrix::from_columns(&cols)
    }
}

#[derive(Clone, Debug)]
pub struct DfsReport {
    pub groups: Vec<DfsGroup>,
    pub exists: bool,
    /// Total number of common eigenvectors, the `M` of the block form.
    pub block_dim: usize,
}

/// Clustering tolerance for a spectrum: `rel` times its range, or times its
/// norm (at least 1) when the range is zero.
fn cluster_tol(eig: &Eigensystem, rel: f64) -> f64 {
    let range = eig.spectral_range();
    if range > 0.0 {
        rel * range
    } else {
        rel * eig.spectral_norm().max(1.0)
    }
}

fn rayleigh(h: &HermitianOperator, v: &DVector<C64>) -> f64 {
    v.dotc(&(h.matrix() * v)).re
}

/// All common eigenvectors of the branch Hamiltonians, tagged with their
/// eigenvalues.
///
/// `tol` is relative. Eigenvalues closer than `tol` times the spectral range
/// are treated as degenerate, range intersections accept `PQP` eigenvalues
/// at or above `1 - tol`, and a candidate is kept only if both residuals
/// `‖H v - ⟨H⟩ v‖` are at most `tol` times the larger branch norm.
pub fn common_eigenvectors(model: &DephasingModel, tol: f64) -> Result<Vec<CommonEigenvector>> {
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "detection tolerance must lie in (0, 1), got {tol}"
        )));
    }
    let (h0, h1) = model.branch_hamiltonians();
    let e0 = h0.eigensystem();
    let e1 = h1.eigensystem();
    let scale = e0.spectral_norm().max(e1.spectral_norm());
    let max_residual = tol * scale;
    let d0 = e0.cluster(cluster_tol(&e0, tol))?;
    let d1 = e1.cluster(cluster_tol(&e1, tol))?;

    let mut found = Vec::new();
    for c0 in d0.clusters() {
        for c1 in d1.clusters() {
            for v in subspace_intersection(&c0.basis, &c1.basis, tol) {
                let lambda0 = rayleigh(&h0, &v);
                let lambda1 = rayleigh(&h1, &v);
                if h0.eigen_residual(&v, lambda0) <= max_residual
                    && h1.eigen_residual(&v, lambda1) <= max_residual
                {
                    found.push(CommonEigenvector {
                        vector: StateVector::normalized(v)?,
                        lambda0,
                        lambda1,
                    });
                }
            }
        }
    }
    Ok(found)
}

/// Groups the common eigenvectors by energy difference. Any unit vector in
/// the span of one group keeps `|r(t)| = 1`.
pub fn decoherence_free_states(model: &DephasingModel, tol: f64) -> Result<DfsReport> {
    let mut common = common_eigenvectors(model, tol)?;
    let block_dim = common.len();
    common.sort_by(|a, b| a.delta().total_cmp(&b.delta()));

    // same tolerance as the eigenvalue clustering, on the scale of the deltas
    let (h0, h1) = model.branch_hamiltonians();
    let scale = h0
        .eigensystem()
        .spectral_range()
        .max(h1.eigensystem().spectral_range());
    let delta_tol = if scale > 0.0 { tol * scale } else { tol };

    let mut groups: Vec<(Vec<f64>, Vec<StateVector>)> = Vec::new();
    let mut last_delta = f64::NEG_INFINITY;
    for ce in common {
        let delta = ce.delta();
        match groups.last_mut() {
            Some((deltas, basis)) if delta - last_delta <= delta_tol => {
                deltas.push(delta);
                basis.push(ce.vector);
            }
            _ => groups.push((vec![delta], vec![ce.vector])),
        }
        last_delta = delta;
    }
    let groups: Vec<DfsGroup> = groups
        .into_iter()
        .map(|(deltas, basis)| DfsGroup {
            delta: deltas.iter().sum::<f64>() / deltas.len() as f64,
            basis,
        })
        .collect();
    Ok(DfsReport {
        exists: !groups.is_empty(),
        groups,
        block_dim,
    })
}

/// `min_t |r(t)| ≥ 1 - tol` over a uniform grid on `[0, horizon]`.
pub fn verify_coherence(
    model: &DephasingModel,
    initial: &StateVector,
    horizon: f64,
    samples: usize,
    tol: f64,
) -> Result<bool> {
    let grid = TimeGrid::new(horizon, samples)?;
    let dynamics = model.dynamics();
    let prepared = dynamics.prepare(initial)?;
    Ok(min_abs_factor(&prepared, grid) >= 1.0 - tol)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PerturbationKind {
    /// Dense Gaussian Hermitian perturbations of `H_E`.
    Unconstrained,
    /// Perturbations diagonal on the common eigenvectors and supported on
    /// their orthogonal complement, so the shared structure survives.
    Structured,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FragilityReport {
    /// Fraction of perturbed models that still have a common eigenvector.
    pub fraction: f64,
    pub preserved: usize,
    pub samples: usize,
    pub seed: u64,
    pub scale: f64,
    pub kind: PerturbationKind,
}

/// Perturbs `H_E` by random Hermitian `ΔH` with `‖ΔH‖_F = scale·‖H_E‖_F` and
/// counts how often a common eigenvector survives at detection tolerance
/// `tol`.
///
/// Sample `i` draws from its own stream of the seeded generator, so the
/// result does not depend on scheduling. As `scale → 0` the outcome is
/// decided by `tol` rather than by the perturbation.
pub fn fragility_probe(
    model: &DephasingModel,
    scale: f64,
    samples: usize,
    seed: u64,
    kind: PerturbationKind,
    tol: f64,
) -> Result<FragilityReport> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "perturbation scale must be positive, got {scale}"
        )));
    }
    if samples == 0 {
        return Err(Error::InvalidArgument("need at least one sample".into()));
    }
    let common = common_eigenvectors(model, tol)?;
    if common.is_empty() {
        return Err(Error::Precondition(
            "fragility probe needs a model with a common eigenvector".into(),
        ));
    }
    let env_norm = model.h_env().frobenius_norm();
    if env_norm == 0.0 {
        return Err(Error::Precondition(
            "H_E vanishes, so a relative perturbation is undefined".into(),
        ));
    }
    let target = scale * env_norm;
    let dim = model.dim();
    let cols: Vec<DVector<C64>> = common.iter().map(|c| c.vector.amplitudes().clone()).collect();
    let preserved_basis = ComplexMatrix::from_columns(&cols);
    let complement = ComplexMatrix::identity(dim, dim) - &preserved_basis * preserved_basis.adjoint();

    let preserved = (0..samples)
        .into_par_iter()
        .map(|i| -> Result<bool> {
            let mut rng = stream_rng(seed, i as u64);
            let g = random_hermitian(&mut rng, dim).into_matrix();
            let delta = match kind {
                PerturbationKind::Unconstrained => g,
                PerturbationKind::Structured => {
                    let mut d = &complement * g * &complement;
                    for v in &cols {
                        let shift: f64 = rand_distr::Distribution::sample(
                            &rand_distr::StandardNormal,
                            &mut rng,
                        );
                        d += v * v.adjoint() * C64::new(shift, 0.0);
                    }
                    d
                }
            };
            let norm = delta.norm();
            let delta = if norm > 0.0 { delta * C64::new(target / norm, 0.0) } else { delta };
            let h_env = HermitianOperator::new(model.h_env().matrix() + delta)?;
            let perturbed = DephasingModel::new(model.h_int().clone(), h_env)?;
            Ok(!common_eigenvectors(&perturbed, tol)?.is_empty())
        })
        .collect::<Result<Vec<bool>>>()?
        .into_iter()
        .filter(|&p| p)
        .count();

    Ok(FragilityReport {
        fraction: preserved as f64 / samples as f64,
        preserved,
        samples,
        seed,
        scale,
        kind,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{sigma_x, sigma_z};
    use crate::sampling::{self, PlantedModel};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn model(h_int: ComplexMatrix, h_env: ComplexMatrix) -> DephasingModel {
        DephasingModel::new(
            HermitianOperator::new(h_int).unwrap(),
            HermitianOperator::new(h_env).unwrap(),
        )
        .unwrap()
    }

    fn diag(d: &[f64]) -> ComplexMatrix {
        HermitianOperator::from_real_diagonal(d).unwrap().into_matrix()
    }

    #[test]
    fn commuting_diagonals_share_everything() {
        let m = model(diag(&[1.0, 2.0]), diag(&[3.0, 4.0]));
        let found = common_eigenvectors(&m, DEFAULT_DETECTION_TOL).unwrap();
        assert_eq!(found.len(), 2);
    }

    #[test]
    fn anticommuting_paulis_share_nothing() {
        let m = model(sigma_z(), sigma_x());
        assert!(common_eigenvectors(&m, DEFAULT_DETECTION_TOL).unwrap().is_empty());
        let report = decoherence_free_states(&m, DEFAULT_DETECTION_TOL).unwrap();
        assert!(!report.exists);
        assert_eq!(report.block_dim, 0);
    }

    #[test]
    fn planted_vector_is_recovered() {
        let mut r = rng(21);
        for dim in [3, 5, 8, 16, 32] {
            let planted = PlantedModel::generate(&mut r, dim, &[1]);
            let found = common_eigenvectors(&planted.model, DEFAULT_DETECTION_TOL).unwrap();
            assert_eq!(found.len(), 1, "dim {dim}");
            let target = planted.unitary.column(0).into_owned();
            let overlap = found[0].vector.amplitudes().dotc(&target).norm_sqr();
            assert!(overlap >= 1.0 - 1e-8, "overlap {overlap}");
        }
    }

    #[test]
    fn reported_vectors_are_sound() {
        let mut r = rng(22);
        let tol = DEFAULT_DETECTION_TOL;
        for _ in 0..10 {
            let planted = PlantedModel::generate(&mut r, 9, &[2, 1]);
            let (h0, h1) = planted.model.branch_hamiltonians();
            let scale = h0.eigensystem().spectral_norm().max(h1.eigensystem().spectral_norm());
            let found = common_eigenvectors(&planted.model, tol).unwrap();
            assert_eq!(found.len(), 3);
            for ce in &found {
                let v = ce.vector.amplitudes();
                assert!(h0.eigen_residual(v, ce.lambda0) <= tol * scale);
                assert!(h1.eigen_residual(v, ce.lambda1) <= tol * scale);
            }
        }
    }

    #[test]
    fn near_common_vector_lies_in_span() {
        // Completeness: a vector with tiny residuals in both branches must be
        // spanned by the output.
        let mut r = rng(23);
        let planted = PlantedModel::generate(&mut r, 6, &[2]);
        let found = common_eigenvectors(&planted.model, DEFAULT_DETECTION_TOL).unwrap();
        let cols: Vec<_> = found.iter().map(|c| c.vector.amplitudes().clone()).collect();
        let span = ComplexMatrix::from_columns(&cols);
        let basis = planted.unitary.columns(0, 2).into_owned();
        let v = sampling::random_state_in_span(&mut r, &basis);
        let projected = &span * span.ad_mul(v.amplitudes());
        assert!((projected - v.amplitudes()).norm() < 1e-8);
    }

    #[test]
    fn scalar_interaction_gives_single_full_group() {
        let mut r = rng(24);
        let dim = 5;
        let h_env = sampling::random_hermitian(&mut r, dim);
        let h_int = ComplexMatrix::identity(dim, dim) * C64::new(0.7, 0.0);
        let m = model(h_int, h_env.into_matrix());
        let report = decoherence_free_states(&m, DEFAULT_DETECTION_TOL).unwrap();
        assert!(report.exists);
        assert_eq!(report.block_dim, dim);
        assert_eq!(report.groups.len(), 1);
        assert!((report.groups[0].delta - 1.4).abs() < 1e-9);
        let basis = report.groups[0].basis_matrix();
        for _ in 0..10 {
            let psi = sampling::random_state_in_span(&mut r, &basis);
            assert!(verify_coherence(&m, &psi, 1e4, 500, 1e-9).unwrap());
        }
    }

    #[test]
    fn mixing_two_groups_decoheres() {
        let mut r = rng(25);
        let planted = PlantedModel::generate(&mut r, 6, &[1, 1]);
        let report = decoherence_free_states(&planted.model, DEFAULT_DETECTION_TOL).unwrap();
        assert_eq!(report.groups.len(), 2);
        let a = report.groups[0].basis[0].amplitudes();
        let b = report.groups[1].basis[0].amplitudes();
        let psi = StateVector::normalized(a + b).unwrap();
        // |r|² = |½ + ½ e^{iΔt}|² reaches 0 at Δt = π
        let dd = report.groups[1].delta - report.groups[0].delta;
        let horizon = 4.0 * std::f64::consts::PI / dd.abs();
        assert!(!verify_coherence(&planted.model, &psi, horizon, 1000, 1e-4).unwrap());
        let dynamics = planted.model.dynamics();
        let prepared = dynamics.prepare(&psi).unwrap();
        let t = std::f64::consts::PI / dd.abs();
        assert!(prepared.decoherence_factor(t).norm() < 1e-9);
    }

    #[test]
    fn group_members_share_delta_and_are_orthonormal() {
        let mut r = rng(26);
        let planted = PlantedModel::generate(&mut r, 10, &[3, 2]);
        let report = decoherence_free_states(&planted.model, DEFAULT_DETECTION_TOL).unwrap();
        assert_eq!(report.block_dim, 5);
        let mut sizes: Vec<usize> = report.groups.iter().map(|g| g.basis.len()).collect();
        sizes.sort();
        assert_eq!(sizes, vec![2, 3]);
        for g in &report.groups {
            let b = g.basis_matrix();
            let gram = b.ad_mul(&b);
            assert!((gram - ComplexMatrix::identity(b.ncols(), b.ncols())).norm() < 1e-10);
        }
    }

    #[test]
    fn probe_requires_common_eigenvector() {
        let m = model(sigma_z(), sigma_x());
        let err = fragility_probe(&m, 1e-2, 10, 0, PerturbationKind::Unconstrained, 1e-9);
        assert!(matches!(err, Err(Error::Precondition(_))));
    }

    #[test]
    fn probe_structured_vs_unconstrained() {
        let mut r = rng(27);
        let planted = PlantedModel::generate(&mut r, 4, &[1]);
        let tol = DEFAULT_DETECTION_TOL;
        let s = fragility_probe(&planted.model, 1e-2, 50, 3, PerturbationKind::Structured, tol).unwrap();
        assert_eq!(s.fraction, 1.0);
        let u = fragility_probe(&planted.model, 1e-2, 50, 3, PerturbationKind::Unconstrained, tol).unwrap();
        assert_eq!(u.fraction, 0.0);
        let again = fragility_probe(&planted.model, 1e-2, 50, 3, PerturbationKind::Unconstrained, tol).unwrap();
        assert_eq!(u, again);
    }
}
