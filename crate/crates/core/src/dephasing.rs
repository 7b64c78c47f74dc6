//! The pure-dephasing model `H = σᶻ ⊗ H̃ + 1 ⊗ H_E`.
//!
//! With the qubit in `a|0⟩ + b|1⟩` and the environment in `|I⟩`, the two
//! environment branches evolve under `H₀ = H_E + H̃` and `H₁ = H_E - H̃`.
//! The qubit coherence is scaled by `r(t) = ⟨ε₀(t)|ε₁(t)⟩`.

use nalgebra::DVector;
use rayon::prelude::*;

use crate::linalg::{
    evolve, ComplexMatrix, Eigensystem, HermitianOperator, SpectralDecomposition, StateVector, C64,
};
use crate::{Error, Result};

/// Amplitude tolerance for `|a|² + |b|² = 1`.
pub const AMPLITUDE_TOL: f64 = 1e-12;
/// Default horizon is this many times the inverse smallest frequency gap.
pub const DEFAULT_HORIZON_FACTOR: f64 = 1e4;

#[derive(Clone, Debug, PartialEq)]
pub struct DephasingModel {
    h_int: HermitianOperator,
    h_env: HermitianOperator,
}

impl DephasingModel {
    pub fn new(h_int: HermitianOperator, h_env: HermitianOperator) -> Result<Self> {
        if h_int.dim() != h_env.dim() {
            return Err(Error::DimensionMismatch {
                expected: h_int.dim(),
                found: h_env.dim(),
            });
        }
        Ok(Self { h_int, h_env })
    }

    pub fn dim(&self) -> usize {
        self.h_int.dim()
    }

    /// `H̃`, the operator multiplying `σᶻ`.
    pub fn h_int(&self) -> &HermitianOperator {
        &self.h_int
    }

    /// `H_E`, the environment self-evolution.
    pub fn h_env(&self) -> &HermitianOperator {
        &self.h_env
    }

    /// `(H_E + H̃, H_E - H̃)`.
    pub fn branch_hamiltonians(&self) -> (HermitianOperator, HermitianOperator) {
        let h0 = self.h_env.add(&self.h_int).expect("dimensions checked");
        let h1 = self.h_env.sub(&self.h_int).expect("dimensions checked");
        (h0, h1)
    }

    pub fn dynamics(&self) -> BranchDynamics {
        BranchDynamics::new(self)
    }

    fn check_state(&self, state: &StateVector) -> Result<()> {
        if state.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: state.dim(),
            });
        }
        Ok(())
    }
}

pub fn branch_hamiltonians(model: &DephasingModel) -> (HermitianOperator, HermitianOperator) {
    model.branch_hamiltonians()
}

/// Diagonalized branches of a model, reusable across initial states and
/// times.
#[derive(Clone, Debug)]
pub struct BranchDynamics {
    h0: Eigensystem,
    h1: Eigensystem,
    /// `V₀† V₁`: the `H₁` eigenbasis expressed in the `H₀` eigenbasis.
    overlap: ComplexMatrix,
}

impl BranchDynamics {
    pub fn new(model: &DephasingModel) -> Self {
        let (h0, h1) = model.branch_hamiltonians();
        let h0 = h0.eigensystem();
        let h1 = h1.eigensystem();
        let overlap = h0.vectors.ad_mul(&h1.vectors);
        Self { h0, h1, overlap }
    }

    pub fn dim(&self) -> usize {
        self.h0.dim()
    }

    pub fn branches(&self) -> (&Eigensystem, &Eigensystem) {
        (&self.h0, &self.h1)
    }

    pub fn prepare(&self, initial: &StateVector) -> Result<PreparedState<'_>> {
        if initial.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: initial.dim(),
            });
        }
        Ok(PreparedState {
            dynamics: self,
            c0: self.h0.coordinates(initial.amplitudes()),
            c1: self.h1.coordinates(initial.amplitudes()),
        })
    }

    /// Distinct branch frequencies `λ⁽⁰⁾_j - λ⁽¹⁾_k` over the clustered
    /// spectra, ascending.
    pub fn frequencies(&self) -> Vec<f64> {
        let tol = self.h0.default_cluster_tol().max(self.h1.default_cluster_tol());
        let e0 = self.h0.cluster(tol).expect("positive tolerance").eigenvalues();
        let e1 = self.h1.cluster(tol).expect("positive tolerance").eigenvalues();
        let mut freqs: Vec<f64> = e0
            .iter()
            .flat_map(|a| e1.iter().map(move |b| a - b))
            .collect();
        freqs.sort_by(f64::total_cmp);
        freqs.dedup_by(|b, a| (*b - *a).abs() <= tol);
        freqs
    }

    /// Smallest spacing between distinct branch frequencies, if more than
    /// one frequency exists.
    pub fn min_frequency_gap(&self) -> Option<f64> {
        self.frequencies()
            .windows(2)
            .map(|w| w[1] - w[0])
            .min_by(f64::total_cmp)
    }

    /// `1e4 / (smallest nonzero frequency gap)`, or `1e4` for a single
    /// frequency.
    pub fn default_horizon(&self) -> f64 {
        match self.min_frequency_gap() {
            Some(g) if g > 0.0 => DEFAULT_HORIZON_FACTOR / g,
            _ => DEFAULT_HORIZON_FACTOR,
        }
    }
}

/// A model together with one initial environment state.
#[derive(Clone, Debug)]
pub struct PreparedState<'a> {
    dynamics: &'a BranchDynamics,
    c0: DVector<C64>,
    c1: DVector<C64>,
}

impl PreparedState<'_> {
    /// Branch states at time `t`, both expressed in the `H₀` eigenbasis.
    fn branch_coordinates(&self, t: f64) -> (DVector<C64>, DVector<C64>) {
        let phase = |c: &DVector<C64>, values: &[f64]| {
            DVector::from_iterator(
                c.len(),
                c.iter()
                    .zip(values)
                    .map(|(ci, &l)| ci * C64::from_polar(1.0, -l * t)),
            )
        };
        let x = phase(&self.c0, &self.dynamics.h0.values);
        let y = &self.dynamics.overlap * phase(&self.c1, &self.dynamics.h1.values);
        (x, y)
    }

    /// `r(t) = ⟨ε₀(t)|ε₁(t)⟩`.
    pub fn decoherence_factor(&self, t: f64) -> C64 {
        let (x, y) = self.branch_coordinates(t);
        x.dotc(&y)
    }

    /// `1 - |r(t)|²`, evaluated as the squared norm of the part of `ε₁`
    /// orthogonal to `ε₀`. This keeps full relative precision when the
    /// deficit is tiny.
    pub fn echo_deficit(&self, t: f64) -> f64 {
        let (x, y) = self.branch_coordinates(t);
        let r = x.dotc(&y);
        (y - x * r).norm_squared()
    }

    /// Loschmidt echo `|r(t)|²`.
    pub fn echo(&self, t: f64) -> f64 {
        self.decoherence_factor(t).norm_sqr()
    }
}

/// `r(t) = ⟨I|e^{iH₀t} e^{-iH₁t}|I⟩`, propagating each branch directly.
pub fn decoherence_factor(model: &DephasingModel, initial: &StateVector, t: f64) -> Result<C64> {
    model.check_state(initial)?;
    let (h0, h1) = model.branch_hamiltonians();
    let eps0 = evolve(&h0, initial, t)?;
    let eps1 = evolve(&h1, initial, t)?;
    eps0.inner(&eps1)
}

/// `r(t)` as the double sum over branch eigenprojectors,
/// `Σ_{jk} e^{i(λ⁽⁰⁾_j - λ⁽¹⁾_k)t} ⟨I|Π⁽⁰⁾_j Π⁽¹⁾_k|I⟩`.
#[derive(Clone, Debug)]
pub struct SpectralFactor {
    /// `(λ⁽⁰⁾_j - λ⁽¹⁾_k, ⟨I|Π⁽⁰⁾_j Π⁽¹⁾_k|I⟩)` for every cluster pair.
    pub terms: Vec<(f64, C64)>,
}

impl SpectralFactor {
    pub fn new(
        d0: &SpectralDecomposition,
        d1: &SpectralDecomposition,
        initial: &StateVector,
    ) -> Result<Self> {
        if d0.dim() != initial.dim() || d1.dim() != initial.dim() {
            return Err(Error::DimensionMismatch {
                expected: d0.dim(),
                found: initial.dim(),
            });
        }
        let psi = initial.amplitudes();
        let left: Vec<_> = d0.clusters().iter().map(|c| c.project(psi)).collect();
        let right: Vec<_> = d1.clusters().iter().map(|c| c.project(psi)).collect();
        let mut terms = Vec::with_capacity(left.len() * right.len());
        for (c0, p0) in d0.clusters().iter().zip(&left) {
            for (c1, p1) in d1.clusters().iter().zip(&right) {
                terms.push((c0.eigenvalue - c1.eigenvalue, p0.dotc(p1)));
            }
        }
        Ok(Self { terms })
    }

    pub fn of_model(model: &DephasingModel, initial: &StateVector) -> Result<Self> {
        model.check_state(initial)?;
        let (h0, h1) = model.branch_hamiltonians();
        let e0 = h0.eigensystem();
        let e1 = h1.eigensystem();
        let d0 = e0.cluster(e0.default_cluster_tol())?;
        let d1 = e1.cluster(e1.default_cluster_tol())?;
        Self::new(&d0, &d1, initial)
    }

    pub fn evaluate(&self, t: f64) -> C64 {
        self.terms
            .iter()
            .map(|&(w, c)| c * C64::from_polar(1.0, w * t))
            .sum()
    }
}

pub fn decoherence_factor_spectral(
    model: &DephasingModel,
    initial: &StateVector,
    t: f64,
) -> Result<C64> {
    Ok(SpectralFactor::of_model(model, initial)?.evaluate(t))
}

/// Qubit state `a|0⟩ + b|1⟩`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QubitAmplitudes {
    a: C64,
    b: C64,
}

impl QubitAmplitudes {
    pub fn new(a: C64, b: C64) -> Result<Self> {
        let norm = a.norm_sqr() + b.norm_sqr();
        if !norm.is_finite() || (norm - 1.0).abs() > AMPLITUDE_TOL {
            return Err(Error::NotNormalized { norm: norm.sqrt() });
        }
        Ok(Self { a, b })
    }

    /// `a = b = 1/√2`.
    pub fn balanced() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Self {
            a: C64::new(h, 0.0),
            b: C64::new(h, 0.0),
        }
    }

    pub fn a(&self) -> C64 {
        self.a
    }

    pub fn b(&self) -> C64 {
        self.b
    }
}

/// `Tr ρ² = 1 - 2|a|²|b|²(1 - |r|²)`.
pub fn purity(amps: &QubitAmplitudes, r: C64) -> f64 {
    1.0 - 2.0 * amps.a.norm_sqr() * amps.b.norm_sqr() * (1.0 - r.norm_sqr())
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrajectoryRecord {
    pub times: Vec<f64>,
    pub r_values: Vec<C64>,
    pub echo: Vec<f64>,
    pub purity: Vec<f64>,
}

impl TrajectoryRecord {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Uniform grid `horizon · i / (samples - 1)`, `i = 0..samples`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeGrid {
    pub horizon: f64,
    pub samples: usize,
}

impl TimeGrid {
    pub fn new(horizon: f64, samples: usize) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "horizon must be positive and finite, got {horizon}"
            )));
        }
        if samples < 2 {
            return Err(Error::InvalidArgument(format!(
                "need at least 2 time samples, got {samples}"
            )));
        }
        Ok(Self { horizon, samples })
    }

    pub fn time(&self, i: usize) -> f64 {
        self.horizon * i as f64 / (self.samples - 1) as f64
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.samples).map(|i| self.time(i)).collect()
    }
}

pub fn trajectory(
    model: &DephasingModel,
    initial: &StateVector,
    amps: &QubitAmplitudes,
    times: &[f64],
) -> Result<TrajectoryRecord> {
    if let Some(i) = times.windows(2).position(|w| w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Greater)) {
        return Err(Error::InvalidArgument(format!(
            "times must be strictly increasing (index {})",
            i + 1
        )));
    }
    let dynamics = model.dynamics();
    let prepared = dynamics.prepare(initial)?;
    let r_values: Vec<C64> = times
        .par_iter()
        .map(|&t| prepared.decoherence_factor(t))
        .collect();
    let echo = r_values.iter().map(|r| r.norm_sqr()).collect();
    let purity = r_values.iter().map(|&r| purity(amps, r)).collect();
    Ok(TrajectoryRecord {
        times: times.to_vec(),
        r_values,
        echo,
        purity,
    })
}

/// Mean of `|r(t)|²` over a uniform grid on `[0, horizon]`.
pub fn time_averaged_echo(
    model: &DephasingModel,
    initial: &StateVector,
    horizon: f64,
    samples: usize,
) -> Result<f64> {
    let dynamics = model.dynamics();
    let prepared = dynamics.prepare(initial)?;
    Ok(1.0 - mean_deficit(&prepared, TimeGrid::new(horizon, samples)?))
}

/// Mean of `1 - |r(t)|²` over the grid. Samples are evaluated in parallel
/// and summed sequentially.
pub fn mean_deficit(prepared: &PreparedState<'_>, grid: TimeGrid) -> f64 {
    let deficits: Vec<f64> = (0..grid.samples)
        .into_par_iter()
        .map(|i| prepared.echo_deficit(grid.time(i)))
        .collect();
    deficits.iter().sum::<f64>() / grid.samples as f64
}

/// Samples per block in [`min_abs_factor`]; phases are recomputed exactly
/// at each block start, so the recurrence drift stays near 1e-14.
const PHASE_BLOCK: usize = 64;

/// Smallest `|r(t)|` over the grid.
///
/// Within a block of the uniform grid the phases `e^{-iλt}` advance by
/// multiplication, which avoids evaluating sines of large arguments at
/// every sample.
pub fn min_abs_factor(prepared: &PreparedState<'_>, grid: TimeGrid) -> f64 {
    let d = prepared.dynamics;
    let dt = grid.horizon / (grid.samples - 1) as f64;
    let step = |values: &[f64]| -> Vec<C64> {
        values.iter().map(|&l| C64::from_polar(1.0, -l * dt)).collect()
    };
    let (step0, step1) = (step(&d.h0.values), step(&d.h1.values));
    let blocks = grid.samples.div_ceil(PHASE_BLOCK);
    (0..blocks)
        .into_par_iter()
        .map(|b| {
            let start = b * PHASE_BLOCK;
            let end = (start + PHASE_BLOCK).min(grid.samples);
            let t = grid.time(start);
            let anchor = |c: &DVector<C64>, values: &[f64]| -> DVector<C64> {
                DVector::from_iterator(
                    c.len(),
                    c.iter().zip(values).map(|(ci, &l)| ci * C64::from_polar(1.0, -l * t)),
                )
            };
            let mut x = anchor(&prepared.c0, &d.h0.values);
            let mut z = anchor(&prepared.c1, &d.h1.values);
            let mut y = DVector::zeros(x.len());
            let mut best = f64::INFINITY;
            for i in start..end {
                if i > start {
                    x.iter_mut().zip(&step0).for_each(|(v, s)| *v *= s);
                    z.iter_mut().zip(&step1).for_each(|(v, s)| *v *= s);
                }
                y.gemv(C64::new(1.0, 0.0), &d.overlap, &z, C64::new(0.0, 0.0));
                best = best.min(x.dotc(&y).norm());
            }
            best
        })
        .reduce(|| f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{sigma_x, sigma_z, tensor_state};
    use crate::sampling;
    use nalgebra::DMatrix;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn random_model(r: &mut ChaCha8Rng, dim: usize) -> DephasingModel {
        DephasingModel::new(
            sampling::random_hermitian(r, dim),
            sampling::random_hermitian(r, dim),
        )
        .unwrap()
    }

    fn real_symmetric(r: &mut ChaCha8Rng, dim: usize) -> HermitianOperator {
        let h = sampling::random_hermitian(r, dim);
        HermitianOperator::new(h.matrix().map(|z| C64::new(z.re, 0.0))).unwrap()
    }

    #[test]
    fn grid_minimum_matches_pointwise_evaluation() {
        let mut r = rng(91);
        let model = random_model(&mut r, 7);
        let psi = sampling::random_state(&mut r, 7);
        let dynamics = model.dynamics();
        let prepared = dynamics.prepare(&psi).unwrap();
        // several phase blocks; at long times both routes carry the
        // rounding of λt itself, about |λ|·t·ε
        for (horizon, tol) in [(500.0, 1e-12), (5e4, 1e-10)] {
            let grid = TimeGrid::new(horizon, 1000).unwrap();
            let direct = grid
                .times()
                .iter()
                .map(|&t| prepared.decoherence_factor(t).norm())
                .fold(f64::INFINITY, f64::min);
            let diff = (min_abs_factor(&prepared, grid) - direct).abs();
            assert!(diff <= tol, "{horizon}: {diff:e}");
        }
    }

    /// `Tr ρ²` from the explicit joint state `a|0⟩|ε₀⟩ + b|1⟩|ε₁⟩`.
    fn purity_by_partial_trace(
        model: &DephasingModel,
        initial: &StateVector,
        amps: &QubitAmplitudes,
        t: f64,
    ) -> f64 {
        let (h0, h1) = model.branch_hamiltonians();
        let e0 = evolve(&h0, initial, t).unwrap();
        let e1 = evolve(&h1, initial, t).unwrap();
        let q0 = StateVector::basis(2, 0).unwrap();
        let q1 = StateVector::basis(2, 1).unwrap();
        let joint = tensor_state(&[q0, e0]).unwrap().into_amplitudes() * amps.a()
            + tensor_state(&[q1, e1]).unwrap().into_amplitudes() * amps.b();
        let n = model.dim();
        let rho = DMatrix::from_fn(2, 2, |i, j| {
            (0..n).map(|e| joint[i * n + e] * joint[j * n + e].conj()).sum::<C64>()
        });
        (&rho * &rho).trace().re
    }

    #[test]
    fn branch_examples() {
        let z = HermitianOperator::new(sigma_z()).unwrap();
        let m = DephasingModel::new(z.clone(), HermitianOperator::zeros(2)).unwrap();
        let (h0, h1) = m.branch_hamiltonians();
        assert_eq!(h0, z);
        assert_eq!(h1, z.scale(-1.0));

        let a = HermitianOperator::new(sigma_x()).unwrap();
        let m = DephasingModel::new(HermitianOperator::zeros(2), a.clone()).unwrap();
        let (h0, h1) = m.branch_hamiltonians();
        assert_eq!((h0, h1), (a.clone(), a));

        let mut r = rng(5);
        let m = random_model(&mut r, 5);
        let (h0, h1) = m.branch_hamiltonians();
        let diff = h0.matrix() - h1.matrix() - m.h_int().matrix().scale(2.0);
        assert!(diff.iter().all(|z| z.norm() <= 1e-14));
    }

    #[test]
    fn model_dimension_mismatch() {
        assert!(DephasingModel::new(HermitianOperator::zeros(2), HermitianOperator::zeros(3)).is_err());
        let m = DephasingModel::new(HermitianOperator::zeros(2), HermitianOperator::zeros(2)).unwrap();
        let psi = StateVector::basis(3, 0).unwrap();
        assert!(decoherence_factor(&m, &psi, 1.0).is_err());
        assert!(decoherence_factor_spectral(&m, &psi, 1.0).is_err());
    }

    #[test]
    fn factor_is_one_at_zero() {
        let mut r = rng(6);
        let m = random_model(&mut r, 4);
        let psi = sampling::random_state(&mut r, 4);
        assert!((decoherence_factor(&m, &psi, 0.0).unwrap() - C64::new(1.0, 0.0)).norm() < 1e-13);
        let s = SpectralFactor::of_model(&m, &psi).unwrap();
        let total: C64 = s.terms.iter().map(|t| t.1).sum();
        assert!((total - C64::new(1.0, 0.0)).norm() < 1e-13);
    }

    #[test]
    fn static_environment_eigenstate_stays_coherent() {
        let mut r = rng(7);
        let u = sampling::random_unitary(&mut r, 4);
        let d = HermitianOperator::from_real_diagonal(&[0.3, -1.1, 2.0, 0.7]).unwrap();
        let h_int = HermitianOperator::new(&u * d.matrix() * u.adjoint()).unwrap();
        let m = DephasingModel::new(h_int, HermitianOperator::zeros(4)).unwrap();
        let eig = StateVector::new(u.column(2).into_owned()).unwrap();
        for k in 0..50 {
            let t = 0.37 * k as f64;
            let rv = decoherence_factor(&m, &eig, t).unwrap();
            assert!((rv.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn routes_agree_on_random_models() {
        let mut r = rng(8);
        for dim in [2, 4, 4, 8, 16] {
            let m = random_model(&mut r, dim);
            let psi = sampling::random_state(&mut r, dim);
            let dynamics = m.dynamics();
            let prepared = dynamics.prepare(&psi).unwrap();
            let spectral = SpectralFactor::of_model(&m, &psi).unwrap();
            for t in [0.0, 0.3, 1.7, 12.5, -4.0] {
                let direct = decoherence_factor(&m, &psi, t).unwrap();
                assert!((direct - spectral.evaluate(t)).norm() < 1e-10);
                assert!((direct - prepared.decoherence_factor(t)).norm() < 1e-12);
                let deficit = 1.0 - direct.norm_sqr();
                assert!((prepared.echo_deficit(t) - deficit).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn commuting_branches_collapse_to_one_term() {
        let h_int = HermitianOperator::from_real_diagonal(&[1.0, 2.0, 3.5]).unwrap();
        let h_env = HermitianOperator::from_real_diagonal(&[0.2, -0.4, 0.9]).unwrap();
        let m = DephasingModel::new(h_int, h_env).unwrap();
        let psi = StateVector::basis(3, 1).unwrap();
        let s = SpectralFactor::of_model(&m, &psi).unwrap();
        let live: Vec<_> = s.terms.iter().filter(|t| t.1.norm() > 1e-14).collect();
        assert_eq!(live.len(), 1);
        assert!((live[0].0 - 4.0).abs() < 1e-12);
        assert!((s.evaluate(3.3).norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn purity_examples() {
        let bal = QubitAmplitudes::balanced();
        assert!((purity(&bal, C64::new(0.0, 1.0)) - 1.0).abs() < 1e-15);
        assert!((purity(&bal, C64::new(0.0, 0.0)) - 0.5).abs() < 1e-15);
        assert!(QubitAmplitudes::new(C64::new(1.0, 0.0), C64::new(0.1, 0.0)).is_err());
    }

    #[test]
    fn purity_matches_partial_trace() {
        let mut r = rng(9);
        for _ in 0..30 {
            let dim = r.random_range(2..8);
            let m = random_model(&mut r, dim);
            let psi = sampling::random_state(&mut r, dim);
            let q = sampling::random_state(&mut r, 2);
            let amps = QubitAmplitudes::new(q.amplitudes()[0], q.amplitudes()[1]).unwrap();
            let t = 2.3;
            let rv = decoherence_factor(&m, &psi, t).unwrap();
            let direct = purity_by_partial_trace(&m, &psi, &amps, t);
            assert!((purity(&amps, rv) - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn trajectory_single_sample() {
        let mut r = rng(10);
        let m = random_model(&mut r, 3);
        let psi = sampling::random_state(&mut r, 3);
        let rec = trajectory(&m, &psi, &QubitAmplitudes::balanced(), &[0.0]).unwrap();
        assert!((rec.r_values[0] - C64::new(1.0, 0.0)).norm() < 1e-13);
        assert!((rec.purity[0] - 1.0).abs() < 1e-13);
    }

    #[test]
    fn trajectory_rejects_unsorted_times() {
        let m = DephasingModel::new(HermitianOperator::zeros(2), HermitianOperator::zeros(2)).unwrap();
        let psi = StateVector::basis(2, 0).unwrap();
        let amps = QubitAmplitudes::balanced();
        assert!(trajectory(&m, &psi, &amps, &[0.0, 1.0, 1.0]).is_err());
        assert!(trajectory(&m, &psi, &amps, &[2.0, 1.0]).is_err());
    }

    #[test]
    fn trajectory_of_shared_eigenstate_is_coherent() {
        let mut r = rng(11);
        let u = sampling::random_unitary(&mut r, 5);
        let conj = |d: &[f64]| {
            let d = HermitianOperator::from_real_diagonal(d).unwrap();
            HermitianOperator::new(&u * d.matrix() * u.adjoint()).unwrap()
        };
        let m = DephasingModel::new(
            conj(&[0.4, 1.3, -0.8, 2.2, 0.1]),
            conj(&[1.9, -0.6, 0.5, 0.3, -1.4]),
        )
        .unwrap();
        let psi = StateVector::new(u.column(3).into_owned()).unwrap();
        let times = TimeGrid::new(500.0, 1000).unwrap().times();
        let rec = trajectory(&m, &psi, &QubitAmplitudes::balanced(), &times).unwrap();
        assert!(rec.echo.iter().all(|e| (e - 1.0).abs() < 1e-9));
        assert!((time_averaged_echo(&m, &psi, 500.0, 1000).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn trajectory_matches_single_calls() {
        let mut r = rng(12);
        let m = random_model(&mut r, 6);
        let psi = sampling::random_state(&mut r, 6);
        let amps = QubitAmplitudes::balanced();
        let times = [0.0, 0.5, 1.25, 7.0, 40.0];
        let rec = trajectory(&m, &psi, &amps, &times).unwrap();
        for (i, &t) in times.iter().enumerate() {
            let single = decoherence_factor(&m, &psi, t).unwrap();
            assert!((rec.r_values[i] - single).norm() < 1e-12);
            assert!((rec.echo[i] - single.norm_sqr()).abs() < 1e-12);
            assert!(rec.purity[i] >= 0.5 - 1e-12 && rec.purity[i] <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn time_average_converges_with_samples() {
        let mut r = rng(13);
        let m = random_model(&mut r, 4);
        let psi = sampling::random_state(&mut r, 4);
        let a = time_averaged_echo(&m, &psi, 2000.0, 20_000).unwrap();
        let b = time_averaged_echo(&m, &psi, 2000.0, 40_000).unwrap();
        assert!((a - b).abs() < 1e-3, "{a} {b}");
        assert!(time_averaged_echo(&m, &psi, 0.0, 10).is_err());
        assert!(time_averaged_echo(&m, &psi, 1.0, 1).is_err());
    }

    #[test]
    fn default_horizon_uses_smallest_gap() {
        let h_int = HermitianOperator::from_real_diagonal(&[0.5, -0.5]).unwrap();
        let m = DephasingModel::new(h_int, HermitianOperator::zeros(2)).unwrap();
        // frequencies {-1, 0, 0, 1} -> distinct {-1, 0, 1}, gap 1
        let d = m.dynamics();
        assert_eq!(d.frequencies().len(), 3);
        assert!((d.default_horizon() - 1e4).abs() < 1e-6);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn factor_bounded_by_one(seed in any::<u64>(), dim in 1usize..12, t in -100.0f64..100.0) {
            let mut r = rng(seed);
            let m = random_model(&mut r, dim);
            let psi = sampling::random_state(&mut r, dim);
            prop_assert!(decoherence_factor(&m, &psi, t).unwrap().norm() <= 1.0 + 1e-12);
        }

        #[test]
        fn real_models_are_time_reversal_symmetric(seed in any::<u64>(), dim in 1usize..8, t in 0.0f64..30.0) {
            let mut r = rng(seed);
            let m = DephasingModel::new(real_symmetric(&mut r, dim), real_symmetric(&mut r, dim)).unwrap();
            let v = sampling::random_state(&mut r, dim);
            let psi = StateVector::normalized(v.amplitudes().map(|z| C64::new(z.re, 0.0))).unwrap();
            let fwd = decoherence_factor(&m, &psi, t).unwrap();
            let back = decoherence_factor(&m, &psi, -t).unwrap();
            prop_assert!((back - fwd.conj()).norm() <= 1e-10);
        }

        #[test]
        fn joint_eigenvector_of_commuting_pair_never_decoheres(seed in any::<u64>(), dim in 1usize..8, t in 0.0f64..1e4) {
            let mut r = rng(seed);
            let u = sampling::random_unitary(&mut r, dim);
            let d1: Vec<f64> = (0..dim).map(|i| (i as f64 * 0.71).sin()).collect();
            let d2: Vec<f64> = (0..dim).map(|i| (i as f64 * 1.37).cos()).collect();
            let conj = |d: &[f64]| {
                let d = HermitianOperator::from_real_diagonal(d).unwrap();
                HermitianOperator::new(&u * d.matrix() * u.adjoint()).unwrap()
            };
            let m = DephasingModel::new(conj(&d1), conj(&d2)).unwrap();
            prop_assert!(m.h_int().commutator_norm(m.h_env()).unwrap() < 1e-12);
            let psi = StateVector::new(u.column(0).into_owned()).unwrap();
            let prepared_dyn = m.dynamics();
            let prepared = prepared_dyn.prepare(&psi).unwrap();
            prop_assert!(prepared.echo_deficit(t) < 1e-9);
        }
    }
}
