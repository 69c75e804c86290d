//! Amplitude synthesis: least-squares projection of a target dispersion
//! profile onto a trigonometric basis.
//!
//! Given frequencies `gamma_k`, the effective flip of a compiled sequence as a
//! function of the dispersion scale `eps` is
//!
//! - Fourier synthesis: `f(eps) = eps * sum_k alpha_k cos(gamma_k eps)`
//! - delta modulation:  `f(eps) = sum_k alpha_k sin(gamma_k eps)`
//!
//! A uniform target flip `theta` therefore means fitting `cos(gamma_k eps)`
//! to `theta / eps` in the first case and `sin(gamma_k eps)` to `theta` in the
//! second, both in the plain L2 inner product over `[1 - delta, 1 + delta]`.
//! The Gram matrix has closed forms; the load vector is closed form for the
//! delta-modulated basis and integrated adaptively for the Fourier basis.

use crate::pulse::Method;
use crate::quad::{adaptive_simpson, composite_simpson};
use crate::so3::Rotation;
use nalgebra::{DMatrix, DVector, Vector3};
use thiserror::Error;

const QUAD_TOL: f64 = 1e-12;
const COND_LIMIT: f64 = 1e12;
const RESIDUAL_LIMIT: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("basis needs at least one frequency")]
    EmptyBasis,
    #[error("dispersion half-width must lie in (0, 1), got {0}")]
    BadDelta(f64),
    #[error(
        "gram matrix is ill-conditioned (cond = {cond:.3e}); frequencies {gamma_i:.6} and {gamma_j:.6} rad are nearly dependent over this interval"
    )]
    IllConditioned {
        cond: f64,
        gamma_i: f64,
        gamma_j: f64,
    },
    #[error("normal-equation residual {0:.3e} exceeds tolerance")]
    SolveResidual(f64),
}

/// A trigonometric fitting basis over `eps` in `[1 - delta, 1 + delta]`.
#[derive(Clone, Debug)]
pub struct BasisSpec {
    pub method: Method,
    /// Frequencies in radians, strictly ascending and positive.
    pub gammas_rad: Vec<f64>,
    pub delta: f64,
}

impl BasisSpec {
    pub fn new(method: Method, gammas_rad: Vec<f64>, delta: f64) -> Result<Self, SynthError> {
        if gammas_rad.is_empty() {
            return Err(SynthError::EmptyBasis);
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(SynthError::BadDelta(delta));
        }
        Ok(BasisSpec {
            method,
            gammas_rad,
            delta,
        })
    }

    /// Basis function `k` in the fitting space.
    pub fn basis_value(&self, k: usize, eps: f64) -> f64 {
        let g = self.gammas_rad[k];
        match self.method {
            Method::Fsm => (g * eps).cos(),
            Method::DeltaMod => (g * eps).sin(),
        }
    }
}

/// Target flip-angle profile `f*(eps)` in radians (the physical flip, not the
/// fitting-space target; the basis handles the `1/eps` factor for Fourier
/// synthesis internally).
pub enum TargetProfile {
    Uniform(f64),
    FromFn(Box<dyn Fn(f64) -> f64 + Sync>),
}

impl TargetProfile {
    pub fn flip_at(&self, eps: f64) -> f64 {
        match self {
            TargetProfile::Uniform(theta) => *theta,
            TargetProfile::FromFn(f) => f(eps),
        }
    }

    /// The fitting-space target for the given method.
    fn fit_value(&self, method: Method, eps: f64) -> f64 {
        match method {
            Method::Fsm => self.flip_at(eps) / eps,
            Method::DeltaMod => self.flip_at(eps),
        }
    }
}

/// Integral of cos(a * eps) over [1 - delta, 1 + delta].
fn cos_integral(a: f64, delta: f64) -> f64 {
    if a.abs() < 1e-14 {
        2.0 * delta
    } else {
        ((a * (1.0 + delta)).sin() - (a * (1.0 - delta)).sin()) / a
    }
}

/// Gram matrix of the basis in closed form.
pub fn gram_matrix(basis: &BasisSpec) -> DMatrix<f64> {
    let n = basis.gammas_rad.len();
    let d = basis.delta;
    let sign = match basis.method {
        // cos cos = (cos(diff) + cos(sum)) / 2; sin sin = (cos(diff) - cos(sum)) / 2
        Method::Fsm => 1.0,
        Method::DeltaMod => -1.0,
    };
    DMatrix::from_fn(n, n, |i, j| {
        let gi = basis.gammas_rad[i];
        let gj = basis.gammas_rad[j];
        0.5 * (cos_integral(gi - gj, d) + sign * cos_integral(gi + gj, d))
    })
}

/// Load vector `V_k = <b_k, target>` in the fitting inner product.
pub fn load_vector(basis: &BasisSpec, target: &TargetProfile) -> DVector<f64> {
    let d = basis.delta;
    let closed_form_uniform = matches!(
        (basis.method, target),
        (Method::DeltaMod, TargetProfile::Uniform(_))
    );
    DVector::from_fn(basis.gammas_rad.len(), |k, _| {
        let g = basis.gammas_rad[k];
        if closed_form_uniform {
            let theta = target.flip_at(1.0);
            2.0 * theta * g.sin() * (g * d).sin() / g
        } else {
            adaptive_simpson(
                |eps| basis.basis_value(k, eps) * target.fit_value(basis.method, eps),
                1.0 - d,
                1.0 + d,
                QUAD_TOL,
            )
        }
    })
}

/// Solves the normal equations for the amplitudes (radians). Errors when the
/// Gram matrix is ill-conditioned, naming the closest frequency pair.
pub fn gram_solve(basis: &BasisSpec, target: &TargetProfile) -> Result<Vec<f64>, SynthError> {
    let phi = gram_matrix(basis);
    let v = load_vector(basis, target);

    let svd = phi.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let cond = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if cond > COND_LIMIT {
        // Report the closest pair of frequencies as the likely culprit.
        let (mut bi, mut bj, mut best) = (0, 0, f64::INFINITY);
        for i in 0..basis.gammas_rad.len() {
            for j in (i + 1)..basis.gammas_rad.len() {
                let gap = (basis.gammas_rad[i] - basis.gammas_rad[j]).abs();
                if gap < best {
                    best = gap;
                    bi = i;
                    bj = j;
                }
            }
        }
        return Err(SynthError::IllConditioned {
            cond,
            gamma_i: basis.gammas_rad[bi],
            gamma_j: basis.gammas_rad[bj.max(bi)],
        });
    }
    let alpha = svd
        .solve(&v, 0.0)
        .map_err(|_| SynthError::SolveResidual(f64::INFINITY))?;
    let residual = (&phi * &alpha - &v).amax();
    if residual > RESIDUAL_LIMIT {
        return Err(SynthError::SolveResidual(residual));
    }
    Ok(alpha.iter().copied().collect())
}

/// The achieved effective flip profile of a synthesized design.
#[derive(Clone, Debug)]
pub struct EffectiveProfile {
    pub method: Method,
    pub gammas_rad: Vec<f64>,
    pub alphas_rad: Vec<f64>,
}

impl EffectiveProfile {
    /// Effective flip angle (radians) at dispersion scale `eps`.
    pub fn value(&self, eps: f64) -> f64 {
        let sum: f64 = self
            .gammas_rad
            .iter()
            .zip(&self.alphas_rad)
            .map(|(&g, &a)| match self.method {
                Method::Fsm => a * (g * eps).cos(),
                Method::DeltaMod => a * (g * eps).sin(),
            })
            .sum();
        match self.method {
            Method::Fsm => eps * sum,
            Method::DeltaMod => sum,
        }
    }
}

/// Integrated squared residual in the fitting space,
/// `int (sum_k alpha_k b_k(eps) - t(eps))^2 deps`, by direct adaptive
/// quadrature. Direct evaluation avoids the catastrophic cancellation that the
/// algebraic form `c - V' Phi^-1 V` suffers when the target is nearly in the
/// span of the basis.
pub fn residual_functional(basis: &BasisSpec, alphas_rad: &[f64], target: &TargetProfile) -> f64 {
    let d = basis.delta;
    adaptive_simpson(
        |eps| {
            let fit: f64 = (0..basis.gammas_rad.len())
                .map(|k| alphas_rad[k] * basis.basis_value(k, eps))
                .sum();
            let r = fit - target.fit_value(basis.method, eps);
            r * r
        },
        1.0 - d,
        1.0 + d,
        QUAD_TOL,
    )
}

/// Ensemble state error of the *ideal* effective Hamiltonian: the final state
/// of an exact rotation by `f(eps)` about y, measured against the rotation by
/// `theta` about y, root-mean-squared over the dispersion interval.
pub fn hamiltonian_state_error(
    profile: &EffectiveProfile,
    theta_rad: f64,
    delta: f64,
    grid_points: usize,
) -> f64 {
    assert!(grid_points >= 3 && grid_points % 2 == 1);
    let target = Rotation::about(crate::so3::Axis::Y, theta_rad).apply(&Vector3::z());
    let h = 2.0 * delta / (grid_points - 1) as f64;
    let sq: Vec<f64> = (0..grid_points)
        .map(|i| {
            let eps = 1.0 - delta + i as f64 * h;
            let state =
                Rotation::about(crate::so3::Axis::Y, profile.value(eps)).apply(&Vector3::z());
            (state - target).norm_squared()
        })
        .collect();
    let mean = composite_simpson(&sq, 1.0 - delta, 1.0 + delta) / (2.0 * delta);
    mean.max(0.0).sqrt()
}
