//! Single-spin environment: the min-max choice of initial Bloch vector.
//!
//! With `H₀`, `H₁` describing precession at frequency `ω` about
//! `m̂₀ = (sin α, 0, cos α)` and `m̂₁ = (-sin α, 0, cos α)`, the branch states
//! are `v̂` rotated about each axis by `ωt`, and `|r(t)| = cos(γ(t)/2)` with
//! `γ` the angle between the two rotated vectors. We look for the `v̂` whose
//! worst-case `|r|` over a period is largest.

use std::cmp::Ordering;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, PI};

use nalgebra::{DVector, Vector3};
use rayon::prelude::*;

use crate::dephasing::DephasingModel;
use crate::linalg::{sigma_x, sigma_z, HermitianOperator, SpectralDecomposition, StateVector, C64};
use crate::{Error, Result};

pub const UNIT_TOL: f64 = 1e-12;
/// Half-width of the band around `α = π/3` tagged as the regime boundary.
pub const BOUNDARY_BAND: f64 = 1e-6;
/// Golden-section bracket width, in units of `ωt`.
pub const TIME_REFINE_TOL: f64 = 1e-6;
/// Smallest angular step of the local search, in radians.
pub const ANGLE_REFINE_TOL: f64 = 1e-4;
pub const MIN_TIME_SAMPLES: usize = 64;
pub const MIN_SPHERE_SAMPLES: usize = 500;
/// Optima closer than this in `r_min` are ties.
pub const TIE_TOL: f64 = 1e-6;
/// Coordinates closer than this count as equal when breaking ties; it sits
/// above the residual drift of the local search.
pub const TIE_COORD_TOL: f64 = 1e-3;
/// Cluster weights below this do not count in [`eigenstate_candidate_rmin`].
pub const WEIGHT_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochVector {
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        let v = Self { x, y, z };
        let norm = v.norm();
        if !norm.is_finite() || (norm - 1.0).abs() > UNIT_TOL {
            return Err(Error::NotNormalized { norm });
        }
        Ok(v)
    }

    pub fn normalized(x: f64, y: f64, z: f64) -> Result<Self> {
        let n = (x * x + y * y + z * z).sqrt();
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::NotNormalized { norm: n });
        }
        Ok(Self::raw(x / n, y / n, z / n))
    }

    /// `(sin θ cos φ, sin θ sin φ, cos θ)`.
    pub fn from_angles(theta: f64, phi: f64) -> Self {
        Self::raw(theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos())
    }

    fn raw(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    fn from_vec3(v: Vector3<f64>) -> Self {
        Self::raw(v.x, v.y, v.z)
    }

    fn vec3(&self) -> Vector3<f64> {
        Vector3::new(self.x, self.y, self.z)
    }

    fn renormalized(self) -> Self {
        let n = self.norm();
        Self::raw(self.x / n, self.y / n, self.z / n)
    }

    pub fn x_axis() -> Self {
        Self::raw(1.0, 0.0, 0.0)
    }

    pub fn y_axis() -> Self {
        Self::raw(0.0, 1.0, 0.0)
    }

    pub fn z_axis() -> Self {
        Self::raw(0.0, 0.0, 1.0)
    }

    pub fn norm(&self) -> f64 {
        self.vec3().norm()
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.vec3().dot(&other.vec3())
    }

    pub fn neg(&self) -> Self {
        Self::raw(-self.x, -self.y, -self.z)
    }

    /// Angle in `[0, π]`, accurate near both ends.
    pub fn angle_to(&self, other: &Self) -> f64 {
        let a = self.vec3();
        let b = other.vec3();
        a.cross(&b).norm().atan2(a.dot(&b))
    }

    /// Polar and azimuthal angles.
    pub fn angles(&self) -> (f64, f64) {
        (self.z.clamp(-1.0, 1.0).acos(), self.y.atan2(self.x))
    }

    /// Spin-½ state whose Bloch vector is `self`.
    pub fn spinor(&self) -> StateVector {
        let (theta, phi) = self.angles();
        let amps = DVector::from_vec(vec![
            C64::new((theta / 2.0).cos(), 0.0),
            C64::from_polar((theta / 2.0).sin(), phi),
        ]);
        StateVector::normalized(amps).expect("unit spinor")
    }
}

/// Two precession axes at `±α` from `ẑ` in the x–z plane, common
/// frequency `ω`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldPair {
    alpha: f64,
    omega: f64,
}

impl FieldPair {
    pub fn new(alpha: f64, omega: f64) -> Result<Self> {
        check_alpha(alpha)?;
        if !(omega > 0.0 && omega.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "precession frequency must be positive, got {omega}"
            )));
        }
        Ok(Self { alpha, omega })
    }

    /// `ω = 1`; times are then in units of `1/ω`.
    pub fn unit(alpha: f64) -> Result<Self> {
        Self::new(alpha, 1.0)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn period(&self) -> f64 {
        2.0 * PI / self.omega
    }

    pub fn m0(&self) -> BlochVector {
        BlochVector::raw(self.alpha.sin(), 0.0, self.alpha.cos())
    }

    pub fn m1(&self) -> BlochVector {
        BlochVector::raw(-self.alpha.sin(), 0.0, self.alpha.cos())
    }

    pub fn regime(&self) -> Regime {
        if (self.alpha - FRAC_PI_3).abs() <= BOUNDARY_BAND {
            Regime::Boundary
        } else if self.alpha < FRAC_PI_3 {
            Regime::Perpendicular
        } else {
            Regime::Aligned
        }
    }

    /// Dephasing model with `H₀ = (ω/2) m̂₀·σ` and `H₁ = (ω/2) m̂₁·σ`, i.e.
    /// `H̃ = (ω/2) sin α σˣ` and `H_E = (ω/2) cos α σᶻ`.
    pub fn dephasing_model(&self) -> DephasingModel {
        let half = 0.5 * self.omega;
        let h_int = HermitianOperator::new(sigma_x() * C64::new(half * self.alpha.sin(), 0.0))
            .expect("Hermitian");
        let h_env = HermitianOperator::new(sigma_z() * C64::new(half * self.alpha.cos(), 0.0))
            .expect("Hermitian");
        DephasingModel::new(h_int, h_env).expect("equal dimensions")
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < FRAC_PI_2) {
        return Err(Error::InvalidArgument(format!(
            "alpha must lie in (0, π/2), got {alpha}"
        )));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Regime {
    /// `α < π/3`: `v̂ = ŷ`, perpendicular to both fields, is optimal.
    Perpendicular,
    /// `α > π/3`: `v̂` along one of the fields is optimal.
    Aligned,
    /// `α = π/3`: both families give `|r_min| = 1/2`.
    Boundary,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::Perpendicular => "perpendicular",
            Regime::Aligned => "aligned",
            Regime::Boundary => "boundary",
        }
    }
}

/// Rodrigues rotation of `v` about unit `axis` by `angle`.
pub fn rotate(v: &BlochVector, axis: &BlochVector, angle: f64) -> Result<BlochVector> {
    for u in [v, axis] {
        let n = u.norm();
        if (n - 1.0).abs() > UNIT_TOL {
            return Err(Error::NotNormalized { norm: n });
        }
    }
    Ok(rotate_unchecked(v, axis, angle))
}

fn rotate_unchecked(v: &BlochVector, axis: &BlochVector, angle: f64) -> BlochVector {
    let (s, c) = angle.sin_cos();
    let k = axis.vec3();
    let v = v.vec3();
    BlochVector::from_vec3(v * c + k.cross(&v) * s + k * (k.dot(&v) * (1.0 - c)))
}

/// `|r(t)| = cos(γ/2)`, `γ` the angle between `v̂` precessed about `m̂₀`
/// and about `m̂₁` for time `t`.
pub fn coherence_at(v: &BlochVector, fields: &FieldPair, t: f64) -> f64 {
    let phase = fields.omega * t;
    let v0 = rotate_unchecked(v, &fields.m0(), phase);
    let v1 = rotate_unchecked(v, &fields.m1(), phase);
    (v0.angle_to(&v1) / 2.0).cos()
}

/// Golden-section minimization of `f` on `[lo, hi]` down to width `tol`.
fn golden_min(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - inv_phi * (hi - lo);
    let mut b = lo + inv_phi * (hi - lo);
    let (mut fa, mut fb) = (f(a), f(b));
    while hi - lo > tol {
        if fa <= fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - inv_phi * (hi - lo);
            fa = f(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + inv_phi * (hi - lo);
            fb = f(b);
        }
    }
    let t = 0.5 * (lo + hi);
    (f(t), t)
}

/// How many grid-level local minima get golden-section refinement.
const REFINED_TIME_MINIMA: usize = 4;

/// Worst coherence over one period and the time it occurs, with `t` in
/// `[0, 2π/ω)`. Equal minima resolve to the earliest time.
pub fn min_coherence(
    v: &BlochVector,
    fields: &FieldPair,
    time_samples: usize,
) -> Result<(f64, f64)> {
    if time_samples < MIN_TIME_SAMPLES {
        return Err(Error::InvalidArgument(format!(
            "need at least {MIN_TIME_SAMPLES} time samples, got {time_samples}"
        )));
    }
    Ok(min_coherence_unchecked(v, fields, time_samples))
}

fn min_coherence_unchecked(v: &BlochVector, fields: &FieldPair, samples: usize) -> (f64, f64) {
    // work in phase ωt on [0, 2π)
    let f = |phase: f64| coherence_at(v, fields, phase / fields.omega);
    let step = 2.0 * PI / samples as f64;
    let values: Vec<f64> = (0..samples).map(|i| f(i as f64 * step)).collect();
    let mut minima: Vec<usize> = (0..samples)
        .filter(|&i| {
            let prev = values[(i + samples - 1) % samples];
            let next = values[(i + 1) % samples];
            values[i] <= prev && values[i] <= next
        })
        .collect();
    minima.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    minima.truncate(REFINED_TIME_MINIMA);

    let mut best = (f64::INFINITY, 0.0);
    for i in minima {
        let center = i as f64 * step;
        let (val, phase) = golden_min(f, center - step, center + step, TIME_REFINE_TOL);
        let phase = phase.rem_euclid(2.0 * PI);
        let better = val < best.0 - 1e-12 || ((val - best.0).abs() <= 1e-12 && phase < best.1);
        if better {
            best = (val, phase);
        }
    }
    (best.0, best.1 / fields.omega)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OptimizerSettings {
    pub sphere_samples: usize,
    pub time_samples: usize,
    /// Number of best grid points handed to local refinement.
    pub refine_top: usize,
    /// Also refine from `±ŷ`, `±m̂₀`, `±m̂₁`.
    pub analytic_seeds: bool,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        Self {
            sphere_samples: 2000,
            time_samples: 256,
            refine_top: 16,
            analytic_seeds: true,
        }
    }
}

impl OptimizerSettings {
    fn validate(&self) -> Result<()> {
        if self.sphere_samples < MIN_SPHERE_SAMPLES {
            return Err(Error::InvalidArgument(format!(
                "need at least {MIN_SPHERE_SAMPLES} sphere samples, got {}",
                self.sphere_samples
            )));
        }
        if self.time_samples < MIN_TIME_SAMPLES {
            return Err(Error::InvalidArgument(format!(
                "need at least {MIN_TIME_SAMPLES} time samples, got {}",
                self.time_samples
            )));
        }
        if self.refine_top == 0 && !self.analytic_seeds {
            return Err(Error::InvalidArgument("nothing to refine".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BlochOptimum {
    pub v_star: BlochVector,
    pub r_min: f64,
    pub t_worst: f64,
    pub regime: Regime,
    /// Distinct optima within [`TIE_TOL`] of `r_min`, in tie-break order
    /// (`v_star` first).
    pub ties: Vec<BlochVector>,
    /// `min_coherence` at `v̂ = ŷ`.
    pub perpendicular_family: f64,
    /// `min_coherence` at `v̂ = m̂₀`.
    pub aligned_family: f64,
}

/// `n` nearly uniform points on the unit sphere.
pub fn fibonacci_sphere(n: usize) -> Vec<BlochVector> {
    let golden_angle = PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
            let rho = (1.0 - z * z).sqrt();
            let phi = golden_angle * i as f64;
            BlochVector::raw(rho * phi.cos(), rho * phi.sin(), z)
        })
        .collect()
}

/// Unit vectors along increasing `θ` and `φ` at `v`; near the poles,
/// any orthonormal tangent pair.
fn tangent_frame(v: &BlochVector) -> (Vector3<f64>, Vector3<f64>) {
    let (theta, phi) = v.angles();
    if theta.sin() > 1e-8 {
        let e_theta = Vector3::new(theta.cos() * phi.cos(), theta.cos() * phi.sin(), -theta.sin());
        let e_phi = Vector3::new(-phi.sin(), phi.cos(), 0.0);
        (e_theta, e_phi)
    } else {
        (Vector3::x(), Vector3::y())
    }
}

/// Compass search along the local `θ`/`φ` directions (and their
/// diagonals), halving the step until it drops below `ANGLE_REFINE_TOL`.
fn refine(start: BlochVector, fields: &FieldPair, time_samples: usize) -> (BlochVector, f64) {
    let objective = |v: &BlochVector| min_coherence_unchecked(v, fields, time_samples).0;
    let mut best = start;
    let mut best_val = objective(&best);
    let mut step = 0.05;
    let dirs = [
        (1.0, 0.0),
        (-1.0, 0.0),
        (0.0, 1.0),
        (0.0, -1.0),
        (1.0, 1.0),
        (1.0, -1.0),
        (-1.0, 1.0),
        (-1.0, -1.0),
    ];
    while step >= ANGLE_REFINE_TOL {
        let (e1, e2) = tangent_frame(&best);
        let mut improved = false;
        for (a, b) in dirs {
            let d = (e1 * a + e2 * b).normalize();
            let cand = BlochVector::from_vec3(best.vec3() * step.cos() + d * step.sin()).renormalized();
            let val = objective(&cand);
            if val > best_val + 1e-14 {
                best = cand;
                best_val = val;
                improved = true;
                break;
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    (best, best_val)
}

/// Deterministic preference among equally good vectors: larger `y`, then
/// larger `z`, then larger `x`.
fn tie_order(a: &BlochVector, b: &BlochVector) -> Ordering {
    let cmp = |p: f64, q: f64| {
        if (p - q).abs() <= TIE_COORD_TOL {
            Ordering::Equal
        } else {
            q.total_cmp(&p)
        }
    };
    cmp(a.y, b.y).then(cmp(a.z, b.z)).then(cmp(a.x, b.x))
}

/// Maximizes `min_t |r(t)|` over the sphere: Fibonacci grid, then local
/// refinement of the best grid points.
pub fn optimize_initial_state(fields: &FieldPair, settings: &OptimizerSettings) -> Result<BlochOptimum> {
    settings.validate()?;
    let ts = settings.time_samples;
    let grid = fibonacci_sphere(settings.sphere_samples);
    let mut scored: Vec<(f64, BlochVector)> = grid
        .par_iter()
        .map(|v| (min_coherence_unchecked(v, fields, ts).0, *v))
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0));

    let mut seeds: Vec<BlochVector> = scored
        .iter()
        .take(settings.refine_top)
        .map(|s| s.1)
        .collect();
    if settings.analytic_seeds {
        let y = BlochVector::y_axis();
        seeds.extend([y, y.neg(), fields.m0(), fields.m0().neg(), fields.m1(), fields.m1().neg()]);
    }

    let refined: Vec<(BlochVector, f64)> = seeds
        .par_iter()
        .map(|s| refine(*s, fields, ts))
        .collect();
    let best_val = refined
        .iter()
        .map(|r| r.1)
        .fold(f64::NEG_INFINITY, f64::max);

    let mut ties: Vec<BlochVector> = Vec::new();
    let mut tied: Vec<&(BlochVector, f64)> = refined
        .iter()
        .filter(|r| r.1 >= best_val - TIE_TOL)
        .collect();
    tied.sort_by(|a, b| tie_order(&a.0, &b.0).then(b.1.total_cmp(&a.1)));
    for (v, _) in tied {
        if ties.iter().all(|u| u.angle_to(v) > 1e-2) {
            ties.push(*v);
        }
    }
    let v_star = ties[0];
    let (r_min, t_worst) = min_coherence_unchecked(&v_star, fields, ts);

    Ok(BlochOptimum {
        v_star,
        r_min,
        t_worst,
        regime: fields.regime(),
        ties,
        perpendicular_family: min_coherence_unchecked(&BlochVector::y_axis(), fields, ts).0,
        aligned_family: min_coherence_unchecked(&fields.m0(), fields, ts).0,
    })
}

/// `cos α` for `α ≤ π/3`, `cos(π - 2α)` for `α ≥ π/3`.
pub fn theoretical_rmin(alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    Ok(if alpha <= FRAC_PI_3 {
        alpha.cos()
    } else {
        (PI - 2.0 * alpha).cos()
    })
}

/// Largest angle between the branches for `v̂ = m̂₀`: `min(4α, 2π - 4α)`.
pub fn aligned_max_angle(alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    Ok((4.0 * alpha).min(2.0 * PI - 4.0 * alpha))
}

/// For `|I⟩` an eigenstate of `H₀` with weight on at most two `H₁`
/// eigenspaces, `r(t)` has two frequencies and `min |r| = |p₁ - p₂|` with
/// `p_k = ⟨I|Π⁽¹⁾_k|I⟩`.
pub fn eigenstate_candidate_rmin(initial: &StateVector, h1: &SpectralDecomposition) -> Result<f64> {
    if initial.dim() != h1.dim() {
        return Err(Error::DimensionMismatch {
            expected: h1.dim(),
            found: initial.dim(),
        });
    }
    let weights: Vec<f64> = h1
        .clusters()
        .iter()
        .map(|c| c.weight(initial.amplitudes()))
        .filter(|&p| p > WEIGHT_TOL)
        .collect();
    match weights.as_slice() {
        [p] => Ok(*p),
        [p1, p2] => Ok((p1 - p2).abs()),
        _ => Err(Error::Precondition(format!(
            "state has weight on {} eigenspaces of H₁, expected at most two",
            weights.len()
        ))),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub alpha: f64,
    pub optimum: BlochOptimum,
    pub theoretical: f64,
}

/// Optimizes every `α` in the grid; rows come back in grid order.
pub fn alpha_sweep(alphas: &[f64], settings: &OptimizerSettings) -> Result<Vec<SweepRow>> {
    alphas
        .par_iter()
        .map(|&alpha| {
            let fields = FieldPair::unit(alpha)?;
            Ok(SweepRow {
                alpha,
                optimum: optimize_initial_state(&fields, settings)?,
                theoretical: theoretical_rmin(alpha)?,
            })
        })
        .collect()
}

/// `points` evenly spaced angles strictly inside `(0, π/2)`: cell midpoints.
pub fn alpha_grid(points: usize) -> Vec<f64> {
    (0..points)
        .map(|i| (i as f64 + 0.5) * FRAC_PI_2 / points as f64)
        .collect()
}
