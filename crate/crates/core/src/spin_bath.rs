//! `n`-spin bath coupled through `σᶻ ⊗ Σ_k g_k σᶻ_k`, with a rank-one
//! self-evolution `H_E = λ Σ_{x,y} |x⟩⟨y| = λN|Φ⟩⟨Φ|`.
//!
//! Basis states are labelled by `x ∈ [0, 2ⁿ)` whose binary digits
//! `x₁x₂…x_n` (most significant first) give the spin states, so
//! `H̃|x⟩ = ω_x|x⟩` with `ω_x = Σ_k (-1)^{x_k} g_k`.

use log::warn;

use crate::dephasing::{DephasingModel, QubitAmplitudes};
use crate::linalg::{tensor_state, ComplexMatrix, HermitianOperator, StateVector, C64};
use crate::{Error, Result};

/// Largest bath handled by default (dense `4096 x 4096` diagonalization).
pub const MAX_SPINS: usize = 12;

/// Decreasing couplings whose every prefix has a non-degenerate `ω`
/// spectrum. The first four are the standard test configuration.
pub const DEFAULT_COUPLINGS: [f64; MAX_SPINS] = [
    0.95, 0.61, 0.37, 0.17, 0.102295, 0.052694, 0.007499, 0.003747, 0.001872, 0.000937, 0.000467,
    0.000234,
];

/// Levels closer than this (relative to `Σ|g_k|`) count as degenerate.
const DEGENERACY_TOL: f64 = 1e-12;

/// Per-spin normalization tolerance.
pub const SPIN_NORM_TOL: f64 = 1e-12;

/// `λ / min_gap` above which perturbation theory is flagged.
pub const PERTURBATIVE_RATIO: f64 = 0.1;

#[derive(Clone, Debug, PartialEq)]
pub struct ZurekConfig {
    couplings: Vec<f64>,
    lambda: f64,
}

impl ZurekConfig {
    pub fn new(couplings: Vec<f64>, lambda: f64) -> Result<Self> {
        if couplings.is_empty() {
            return Err(Error::Empty("couplings"));
        }
        if couplings.len() > MAX_SPINS {
            return Err(Error::InvalidArgument(format!(
                "at most {MAX_SPINS} spins supported, got {}",
                couplings.len()
            )));
        }
        if let Some(k) = couplings.iter().position(|g| !g.is_finite()) {
            return Err(Error::InvalidArgument(format!("coupling {k} is not finite")));
        }
        if !lambda.is_finite() {
            return Err(Error::InvalidArgument("lambda is not finite".into()));
        }
        min_gap(&couplings)?;
        Ok(Self { couplings, lambda })
    }

    /// First `n` entries of [`DEFAULT_COUPLINGS`].
    pub fn default_couplings(n: usize, lambda: f64) -> Result<Self> {
        if n == 0 || n > MAX_SPINS {
            return Err(Error::InvalidArgument(format!(
                "spin count must be in 1..={MAX_SPINS}, got {n}"
            )));
        }
        Self::new(DEFAULT_COUPLINGS[..n].to_vec(), lambda)
    }

    pub fn couplings(&self) -> &[f64] {
        &self.couplings
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn n(&self) -> usize {
        self.couplings.len()
    }

    /// `N = 2ⁿ`.
    pub fn dim(&self) -> usize {
        1 << self.n()
    }

    pub fn with_lambda(&self, lambda: f64) -> Self {
        Self {
            couplings: self.couplings.clone(),
            lambda,
        }
    }

    pub fn min_gap(&self) -> f64 {
        min_gap(&self.couplings).expect("validated on construction")
    }
}

/// `ω_x` for the spin configuration `bits = (x₁, …, x_n)`.
pub fn omega(bits: &[bool], couplings: &[f64]) -> Result<f64> {
    if bits.len() != couplings.len() {
        return Err(Error::DimensionMismatch {
            expected: couplings.len(),
            found: bits.len(),
        });
    }
    Ok(bits
        .iter()
        .zip(couplings)
        .map(|(&b, &g)| if b { -g } else { g })
        .sum())
}

/// `ω_x` for the basis label `x`.
pub fn omega_index(x: usize, couplings: &[f64]) -> f64 {
    let n = couplings.len();
    couplings
        .iter()
        .enumerate()
        .map(|(k, &g)| if (x >> (n - 1 - k)) & 1 == 1 { -g } else { g })
        .sum()
}

/// `ω_x` for every label, in label order.
pub fn spectrum(couplings: &[f64]) -> Vec<f64> {
    (0..1usize << couplings.len())
        .map(|x| omega_index(x, couplings))
        .collect()
}

/// `min_{x≠y} |ω_x - ω_y|`; fails on a degenerate spectrum.
pub fn min_gap(couplings: &[f64]) -> Result<f64> {
    if couplings.is_empty() {
        return Err(Error::Empty("couplings"));
    }
    let mut w = spectrum(couplings);
    w.sort_by(f64::total_cmp);
    let gap = w
        .windows(2)
        .map(|p| p[1] - p[0])
        .min_by(f64::total_cmp)
        .expect("at least two levels");
    let scale: f64 = couplings.iter().map(|g| g.abs()).sum();
    if gap <= DEGENERACY_TOL * scale {
        return Err(Error::DegenerateSpectrum(format!(
            "couplings {couplings:?} give coinciding levels ω_x"
        )));
    }
    Ok(gap)
}

pub fn build_zurek(config: &ZurekConfig) -> DephasingModel {
    let h_int = HermitianOperator::from_real_diagonal(&spectrum(&config.couplings))
        .expect("finite diagonal");
    let n = config.dim();
    let h_env = HermitianOperator::new(ComplexMatrix::from_element(
        n,
        n,
        C64::new(config.lambda, 0.0),
    ))
    .expect("constant real matrix is Hermitian");
    DephasingModel::new(h_int, h_env).expect("equal dimensions")
}

/// `|0…0⟩`.
pub fn ground_state(n: usize) -> StateVector {
    StateVector::basis(1 << n, 0).expect("index 0 exists")
}

/// Which level energies enter `sin⁴((E_x - E_0)t/2)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum LevelEnergies {
    /// Exact eigenvalues of `H₀`, each matched to the label whose basis
    /// vector it overlaps most.
    #[default]
    Exact,
    /// Unperturbed `ω_x`.
    Unperturbed,
}

/// Second-order echo for the initial state `|0…0⟩`:
/// `|r(t)|² ≈ 1 - 16λ² Σ_{x≠0} sin⁴((E_x - E_0)t/2) / (ω₀ - ω_x)²`.
#[derive(Clone, Debug)]
pub struct PerturbativeEcho {
    /// `(E_x - E_0, 16λ²/(ω₀ - ω_x)²)` for `x ≠ 0`.
    terms: Vec<(f64, f64)>,
}

impl PerturbativeEcho {
    pub fn new(config: &ZurekConfig) -> Result<Self> {
        Self::with_levels(config, LevelEnergies::Exact)
    }

    pub fn with_levels(config: &ZurekConfig, levels: LevelEnergies) -> Result<Self> {
        let gap = config.min_gap();
        if config.lambda.abs() > PERTURBATIVE_RATIO * gap {
            warn!(
                "lambda = {} exceeds {PERTURBATIVE_RATIO} x min gap {gap}; perturbative echo is unreliable",
                config.lambda
            );
        }
        let omegas = spectrum(&config.couplings);
        let energies = match levels {
            LevelEnergies::Unperturbed => omegas.clone(),
            LevelEnergies::Exact => matched_energies(config)?,
        };
        let lam2 = config.lambda * config.lambda;
        let terms = (1..omegas.len())
            .map(|x| {
                let d = omegas[0] - omegas[x];
                (energies[x] - energies[0], 16.0 * lam2 / (d * d))
            })
            .collect();
        Ok(Self { terms })
    }

    /// `1 - |r(t)|²` to second order in `λ`.
    pub fn deficit(&self, t: f64) -> f64 {
        self.terms
            .iter()
            .map(|&(w, c)| c * (0.5 * w * t).sin().powi(4))
            .sum()
    }

    pub fn echo(&self, t: f64) -> f64 {
        1.0 - self.deficit(t)
    }
}

/// Eigenvalues of `H₀ = H_E + H̃` assigned to labels by maximal overlap.
fn matched_energies(config: &ZurekConfig) -> Result<Vec<f64>> {
    let (h0, _) = build_zurek(config).branch_hamiltonians();
    let eig = h0.eigensystem();
    let n = config.dim();
    let mut energies = vec![0.0; n];
    let mut taken = vec![false; n];
    for (x, energy) in energies.iter_mut().enumerate() {
        let best = (0..n)
            .max_by(|&a, &b| {
                eig.vectors[(x, a)]
                    .norm_sqr()
                    .total_cmp(&eig.vectors[(x, b)].norm_sqr())
            })
            .expect("nonempty");
        if std::mem::replace(&mut taken[best], true) {
            return Err(Error::Precondition(format!(
                "level {x} cannot be matched to a unique eigenvector; lambda is too strong"
            )));
        }
        *energy = eig.values[best];
    }
    Ok(energies)
}

pub fn perturbative_echo(config: &ZurekConfig, t: f64) -> Result<f64> {
    Ok(PerturbativeEcho::new(config)?.echo(t))
}

/// `1 - 6λ² Σ_{x≠0} 1/(ω₀ - ω_x)²`, the time average of the second-order
/// echo (`⟨sin⁴⟩ = 3/8`).
pub fn perturbative_average(config: &ZurekConfig) -> f64 {
    let w = spectrum(&config.couplings);
    let s: f64 = w[1..].iter().map(|wx| (w[0] - wx).powi(-2)).sum();
    1.0 - 6.0 * config.lambda * config.lambda * s
}

/// Spins prepared independently in `α_k|0⟩ + β_k|1⟩`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductState {
    alphas: Vec<C64>,
    betas: Vec<C64>,
}

impl ProductState {
    pub fn new(alphas: Vec<C64>, betas: Vec<C64>) -> Result<Self> {
        if alphas.is_empty() {
            return Err(Error::Empty("spins"));
        }
        if alphas.len() != betas.len() {
            return Err(Error::DimensionMismatch {
                expected: alphas.len(),
                found: betas.len(),
            });
        }
        for (a, b) in alphas.iter().zip(&betas) {
            let norm = a.norm_sqr() + b.norm_sqr();
            if !norm.is_finite() || (norm - 1.0).abs() > SPIN_NORM_TOL {
                return Err(Error::NotNormalized { norm: norm.sqrt() });
            }
        }
        Ok(Self { alphas, betas })
    }

    /// Every spin with `|β_k|² = ε` (real, non-negative amplitudes).
    pub fn uniform_error(n: usize, epsilon: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(Error::InvalidArgument(format!(
                "epsilon must lie in [0, 1], got {epsilon}"
            )));
        }
        Self::new(
            vec![C64::new((1.0 - epsilon).sqrt(), 0.0); n],
            vec![C64::new(epsilon.sqrt(), 0.0); n],
        )
    }

    pub fn n(&self) -> usize {
        self.alphas.len()
    }

    pub fn alphas(&self) -> &[C64] {
        &self.alphas
    }

    pub fn betas(&self) -> &[C64] {
        &self.betas
    }
}

pub fn product_state(spec: &ProductState) -> StateVector {
    let spins: Vec<StateVector> = spec
        .alphas
        .iter()
        .zip(&spec.betas)
        .map(|(&a, &b)| {
            QubitAmplitudes::new(a, b).expect("validated");
            StateVector::normalized(nalgebra::DVector::from_vec(vec![a, b])).expect("nonzero spin")
        })
        .collect();
    tensor_state(&spins).expect("at least one spin")
}

/// Infinite-time average of `|r(t)|²` at `λ = 0`:
/// `Π_k (|α_k|⁴ + |β_k|⁴)`, from
/// `r(t) = Π_k (|α_k|² e^{2ig_k t} + |β_k|² e^{-2ig_k t})`. Assumes the
/// couplings are rationally independent.
pub fn product_average_echo(couplings: &[f64], spec: &ProductState) -> Result<f64> {
    if couplings.len() != spec.n() {
        return Err(Error::DimensionMismatch {
            expected: couplings.len(),
            found: spec.n(),
        });
    }
    Ok(spec
        .alphas
        .iter()
        .zip(&spec.betas)
        .map(|(a, b)| a.norm_sqr().powi(2) + b.norm_sqr().powi(2))
        .product())
}

/// `((1 - ε)² + ε²)ⁿ`, the least average echo when every spin has
/// `|β_k|² ≤ ε`. For small `ε` this is `≈ 1 - 2nε`.
pub fn preparation_bound(epsilon: f64, n: usize) -> Result<f64> {
    if !(0.0..=0.5).contains(&epsilon) {
        return Err(Error::InvalidArgument(format!(
            "epsilon must lie in [0, 1/2], got {epsilon}"
        )));
    }
    Ok(((1.0 - epsilon).powi(2) + epsilon * epsilon).powi(n as i32))
}
