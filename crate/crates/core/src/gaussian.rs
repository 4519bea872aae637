//! Multimode Gaussian states described by their first and second moments.
//!
//! Quadratures are interleaved as `(x₁, p₁, …, x_K, p_K)`, the vacuum has
//! covariance `½·I`, and a mode's complex amplitude is `(x + i p)/√2`.

use nalgebra::{DMatrix, DVector, Matrix2, SymmetricEigen, Vector2};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::STRUCTURAL_TOL;

/// Symplectic form `Ω = ⊕ [[0, 1], [-1, 0]]` on `k` modes.
pub fn omega(k: usize) -> DMatrix<f64> {
    let mut w = DMatrix::zeros(2 * k, 2 * k);
    for j in 0..k {
        w[(2 * j, 2 * j + 1)] = 1.0;
        w[(2 * j + 1, 2 * j)] = -1.0;
    }
    w
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

/// A real `2K × 2K` matrix satisfying `S Ω Sᵀ = Ω`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticMap {
    matrix: DMatrix<f64>,
}

impl SymplecticMap {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        Self::with_tol(matrix, STRUCTURAL_TOL)
    }

    pub fn with_tol(matrix: DMatrix<f64>, tol: f64) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() || !matrix.nrows().is_multiple_of(2) || matrix.nrows() == 0 {
            return Err(Error::InvalidDimension(format!(
                "symplectic map must be 2K x 2K, got {} x {}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let residual = symplectic_residual(&matrix);
        if !(residual <= tol) {
            return Err(Error::NotSymplectic { residual, tol });
        }
        Ok(Self { matrix })
    }

    pub fn identity(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidDimension("zero modes".into()));
        }
        Ok(Self {
            matrix: DMatrix::identity(2 * k, 2 * k),
        })
    }

    pub fn mode_count(&self) -> usize {
        self.matrix.nrows() / 2
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// `max |S Ω Sᵀ − Ω|`.
    pub fn residual(&self) -> f64 {
        symplectic_residual(&self.matrix)
    }

    /// Map that applies `self` first, then `after`.
    pub fn then(&self, after: &SymplecticMap) -> Result<SymplecticMap> {
        if self.matrix.nrows() != after.matrix.nrows() {
            return Err(Error::DimensionMismatch {
                expected: self.matrix.nrows(),
                found: after.matrix.nrows(),
            });
        }
        Ok(SymplecticMap {
            matrix: &after.matrix * &self.matrix,
        })
    }
}

pub(crate) fn symplectic_residual(s: &DMatrix<f64>) -> f64 {
    let w = omega(s.nrows() / 2);
    max_abs(&(s * &w * s.transpose() - w))
}

/// Gaussian state of `K` bosonic modes.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    mean: DVector<f64>,
    covariance: DMatrix<f64>,
}

/// Vacuum on `k` modes.
pub fn vacuum_state(k: usize) -> Result<GaussianState> {
    if k == 0 {
        return Err(Error::InvalidDimension("vacuum of zero modes".into()));
    }
    Ok(GaussianState {
        mean: DVector::zeros(2 * k),
        covariance: DMatrix::identity(2 * k, 2 * k) * 0.5,
    })
}

/// Product of coherent states with the given amplitudes.
pub fn coherent_state(amplitudes: &[Complex64]) -> Result<GaussianState> {
    let mut state = vacuum_state(amplitudes.len())?;
    for (j, psi) in amplitudes.iter().enumerate() {
        let [x, p] = amplitude_to_quadratures(*psi);
        state.mean[2 * j] = x;
        state.mean[2 * j + 1] = p;
    }
    Ok(state)
}

pub(crate) fn amplitude_to_quadratures(psi: Complex64) -> [f64; 2] {
    [std::f64::consts::SQRT_2 * psi.re, std::f64::consts::SQRT_2 * psi.im]
}

impl GaussianState {
    /// Validated construction with the default structural tolerance.
    pub fn new(mean: DVector<f64>, covariance: DMatrix<f64>) -> Result<Self> {
        Self::with_tol(mean, covariance, STRUCTURAL_TOL)
    }

    pub fn with_tol(mean: DVector<f64>, covariance: DMatrix<f64>, tol: f64) -> Result<Self> {
        let n = mean.len();
        if n == 0 || !n.is_multiple_of(2) {
            return Err(Error::InvalidDimension(format!(
                "mean vector length {n} is not 2K with K >= 1"
            )));
        }
        if covariance.nrows() != n || covariance.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: covariance.nrows().max(covariance.ncols()),
            });
        }
        let asym = max_abs(&(&covariance - covariance.transpose()));
        if asym > tol {
            return Err(Error::InvalidState(format!(
                "covariance not symmetric (max deviation {asym:e})"
            )));
        }
        let state = Self { mean, covariance };
        let min_eig = state.uncertainty_min_eigenvalue();
        if min_eig < -tol {
            return Err(Error::InvalidState(format!(
                "covariance violates the uncertainty principle (min eigenvalue {min_eig:e})"
            )));
        }
        Ok(state)
    }

    pub fn mode_count(&self) -> usize {
        self.mean.len() / 2
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    /// Smallest eigenvalue of `V + (i/2)Ω`, computed on its real form
    /// `[[V, -Ω/2], [Ω/2, V]]`. Non-negative for physical states.
    pub fn uncertainty_min_eigenvalue(&self) -> f64 {
        let n = self.mean.len();
        let half_w = omega(n / 2) * 0.5;
        let mut real_form = DMatrix::zeros(2 * n, 2 * n);
        real_form.view_mut((0, 0), (n, n)).copy_from(&self.covariance);
        real_form.view_mut((n, n), (n, n)).copy_from(&self.covariance);
        real_form.view_mut((0, n), (n, n)).copy_from(&(-&half_w));
        real_form.view_mut((n, 0), (n, n)).copy_from(&half_w);
        // symmetrise away rounding before the symmetric eigensolver
        let real_form = (&real_form + real_form.transpose()) * 0.5;
        SymmetricEigen::new(real_form)
            .eigenvalues
            .iter()
            .fold(f64::INFINITY, |acc, v| acc.min(*v))
    }

    /// `mean' = S·mean`, `V' = S V Sᵀ`.
    pub fn apply_map(&self, map: &SymplecticMap) -> Result<GaussianState> {
        if map.matrix.nrows() != self.mean.len() {
            return Err(Error::DimensionMismatch {
                expected: self.mean.len(),
                found: map.matrix.nrows(),
            });
        }
        let s = &map.matrix;
        Ok(GaussianState {
            mean: s * &self.mean,
            covariance: s * &self.covariance * s.transpose(),
        })
    }

    /// Reduced state on `modes`, in the given order.
    pub fn marginal(&self, modes: &[usize]) -> Result<GaussianState> {
        if modes.is_empty() {
            return Err(Error::InvalidDimension("empty mode selection".into()));
        }
        check_indices(modes, self.mode_count())?;
        let n = 2 * modes.len();
        let quad: Vec<usize> = modes.iter().flat_map(|&m| [2 * m, 2 * m + 1]).collect();
        let mean = DVector::from_iterator(n, quad.iter().map(|&i| self.mean[i]));
        let covariance = DMatrix::from_fn(n, n, |r, c| self.covariance[(quad[r], quad[c])]);
        Ok(GaussianState { mean, covariance })
    }

    /// `(Var x, Var p)` of one mode.
    pub fn quadrature_variance(&self, mode: usize) -> Result<(f64, f64)> {
        self.check_mode(mode)?;
        Ok((
            self.covariance[(2 * mode, 2 * mode)],
            self.covariance[(2 * mode + 1, 2 * mode + 1)],
        ))
    }

    /// Mean amplitude `⟨a⟩ = (⟨x⟩ + i⟨p⟩)/√2` of one mode.
    pub fn amplitude(&self, mode: usize) -> Result<Complex64> {
        self.check_mode(mode)?;
        Ok(Complex64::new(self.mean[2 * mode], self.mean[2 * mode + 1]) / std::f64::consts::SQRT_2)
    }

    pub fn mode_moments(&self, mode: usize) -> Result<(Vector2<f64>, Matrix2<f64>)> {
        self.check_mode(mode)?;
        let i = 2 * mode;
        Ok((
            Vector2::new(self.mean[i], self.mean[i + 1]),
            Matrix2::new(
                self.covariance[(i, i)],
                self.covariance[(i, i + 1)],
                self.covariance[(i + 1, i)],
                self.covariance[(i + 1, i + 1)],
            ),
        ))
    }

    /// Overlap `⟨t|ρ|t⟩` between one mode's reduced state and the coherent
    /// state `|target⟩`.
    pub fn fidelity_with_coherent(&self, mode: usize, target: Complex64) -> Result<f64> {
        let (mean, cov) = self.mode_moments(mode)?;
        coherent_overlap(&mean, &cov, target)
    }

    fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.mode_count() {
            return Err(Error::IndexOutOfRange {
                index: mode,
                len: self.mode_count(),
            });
        }
        Ok(())
    }
}

/// `F = exp(-½ dᵀ (V + ½I)⁻¹ d) / √det(V + ½I)` for a single-mode Gaussian
/// with mean `mean` and covariance `cov`, where `d` is the offset from the
/// target's quadratures.
pub fn coherent_overlap(mean: &Vector2<f64>, cov: &Matrix2<f64>, target: Complex64) -> Result<f64> {
    let [tx, tp] = amplitude_to_quadratures(target);
    let d = mean - Vector2::new(tx, tp);
    let sum = cov + Matrix2::identity() * 0.5;
    let det = sum.determinant();
    if !(det > 0.0) || !det.is_finite() {
        return Err(Error::Singular(format!("V + I/2 has determinant {det:e}")));
    }
    let inv = sum
        .try_inverse()
        .ok_or_else(|| Error::Singular("V + I/2 not invertible".into()))?;
    let quad = d.dot(&(inv * d));
    Ok((-0.5 * quad).exp() / det.sqrt())
}

pub(crate) fn check_indices(indices: &[usize], len: usize) -> Result<()> {
    let mut seen = vec![false; len];
    for &i in indices {
        if i >= len {
            return Err(Error::IndexOutOfRange { index: i, len });
        }
        if seen[i] {
            return Err(Error::RepeatedIndex(i));
        }
        seen[i] = true;
    }
    Ok(())
}
