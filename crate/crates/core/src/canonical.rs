//! Linear canonical transforms `b = M a + L a†` on `K` bosonic modes.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::gaussian::{check_indices, SymplecticMap};
use crate::STRUCTURAL_TOL;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Operator-level linear map `b_i = M_ij a_j + L_ij a_j†`.
///
/// Construction does not check canonicity, so that deliberately broken
/// transforms can be built and diagnosed with [`commutation_residual`];
/// [`CanonicalTransform::to_symplectic`] is where the check is enforced.
///
/// [`commutation_residual`]: CanonicalTransform::commutation_residual
#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalTransform {
    m: DMatrix<Complex64>,
    l: DMatrix<Complex64>,
}

impl CanonicalTransform {
    pub fn new(m: DMatrix<Complex64>, l: DMatrix<Complex64>) -> Result<Self> {
        let k = m.nrows();
        if k == 0 {
            return Err(Error::InvalidDimension("zero modes".into()));
        }
        for mat in [&m, &l] {
            if mat.nrows() != k || mat.ncols() != k {
                return Err(Error::DimensionMismatch {
                    expected: k,
                    found: mat.nrows().max(mat.ncols()),
                });
            }
        }
        Ok(Self { m, l })
    }

    pub fn mode_count(&self) -> usize {
        self.m.nrows()
    }

    pub fn m_matrix(&self) -> &DMatrix<Complex64> {
        &self.m
    }

    pub fn l_matrix(&self) -> &DMatrix<Complex64> {
        &self.l
    }

    /// Largest entry of `M Lᵀ − L Mᵀ` and `M Mᴴ − L Lᴴ − I`; zero for a
    /// transform that preserves the bosonic commutation relations.
    pub fn commutation_residual(&self) -> f64 {
        let k = self.mode_count();
        let c1 = &self.m * self.l.transpose() - &self.l * self.m.transpose();
        let c2 = &self.m * self.m.adjoint() - &self.l * self.l.adjoint() - DMatrix::<Complex64>::identity(k, k);
        c1.iter().chain(c2.iter()).fold(0.0_f64, |acc, z| acc.max(z.norm()))
    }

    /// Transform that applies `self` first and then `after`.
    pub fn then(&self, after: &CanonicalTransform) -> Result<CanonicalTransform> {
        compose(self, after)
    }

    pub fn to_symplectic(&self) -> Result<SymplecticMap> {
        self.to_symplectic_with_tol(STRUCTURAL_TOL)
    }

    /// Quadrature image of the transform. With `a = (x + i p)/√2` the block
    /// for modes `(i, j)` is `[[Re(M+L), -Im(M-L)], [Im(M+L), Re(M-L)]]`.
    pub fn to_symplectic_with_tol(&self, tol: f64) -> Result<SymplecticMap> {
        let residual = self.commutation_residual();
        if !(residual <= tol) {
            return Err(Error::NotCanonical { residual, tol });
        }
        let k = self.mode_count();
        let mut s = DMatrix::zeros(2 * k, 2 * k);
        for i in 0..k {
            for j in 0..k {
                let sum = self.m[(i, j)] + self.l[(i, j)];
                let diff = self.m[(i, j)] - self.l[(i, j)];
                s[(2 * i, 2 * j)] = sum.re;
                s[(2 * i, 2 * j + 1)] = -diff.im;
                s[(2 * i + 1, 2 * j)] = sum.im;
                s[(2 * i + 1, 2 * j + 1)] = diff.re;
            }
        }
        // canonicity at `tol` implies symplecticity at a comparable level
        SymplecticMap::with_tol(s, 4.0 * tol.max(STRUCTURAL_TOL))
    }
}

pub fn identity_transform(k: usize) -> Result<CanonicalTransform> {
    if k == 0 {
        return Err(Error::InvalidDimension("zero modes".into()));
    }
    Ok(CanonicalTransform {
        m: DMatrix::identity(k, k),
        l: DMatrix::zeros(k, k),
    })
}

/// `second ∘ first`: `M = M₂M₁ + L₂L₁*`, `L = M₂L₁ + L₂M₁*`.
pub fn compose(first: &CanonicalTransform, second: &CanonicalTransform) -> Result<CanonicalTransform> {
    if first.mode_count() != second.mode_count() {
        return Err(Error::DimensionMismatch {
            expected: first.mode_count(),
            found: second.mode_count(),
        });
    }
    Ok(CanonicalTransform {
        m: &second.m * &first.m + &second.l * first.l.conjugate(),
        l: &second.m * &first.l + &second.l * first.m.conjugate(),
    })
}

/// Unitary DFT on `k` modes, `M_lj = exp(2πi·lj/k)/√k`, `L = 0`.
///
/// Row 0 is uniform, so the forward transform concentrates `k` equal
/// amplitudes into mode 0. With `inverse` set the conjugate transpose is
/// returned, whose column 0 distributes mode 0 evenly over all outputs.
pub fn dft_transform(k: usize, inverse: bool) -> Result<CanonicalTransform> {
    if k == 0 {
        return Err(Error::InvalidDimension("DFT over zero modes".into()));
    }
    let norm = 1.0 / (k as f64).sqrt();
    let sign = if inverse { -1.0 } else { 1.0 };
    let m = DMatrix::from_fn(k, k, |l, j| {
        // reduce the exponent mod k so large index products stay exact
        let phase = 2.0 * std::f64::consts::PI * ((l * j) % k) as f64 / k as f64;
        Complex64::from_polar(norm, sign * phase)
    });
    Ok(CanonicalTransform {
        m,
        l: DMatrix::zeros(k, k),
    })
}

/// Two-mode phase-conjugated-inputs amplifier of gain `g`:
/// `b₁ = √G a₁ + √(G−1) a₂†`, `b₂ = √(G−1) a₁† + √G a₂`.
pub fn pcia_transform(g: f64) -> Result<CanonicalTransform> {
    if !(g >= 1.0) || !g.is_finite() {
        return Err(Error::Domain(format!("amplifier gain must be >= 1, got {g}")));
    }
    let s = Complex64::new(g.sqrt(), 0.0);
    let t = Complex64::new((g - 1.0).sqrt(), 0.0);
    Ok(CanonicalTransform {
        m: DMatrix::from_row_slice(2, 2, &[s, ZERO, ZERO, s]),
        l: DMatrix::from_row_slice(2, 2, &[ZERO, t, t, ZERO]),
    })
}

/// Lift `t` to `k_total` modes, acting on `targets` (in order) and as the
/// identity everywhere else.
pub fn embed(t: &CanonicalTransform, targets: &[usize], k_total: usize) -> Result<CanonicalTransform> {
    if targets.len() != t.mode_count() {
        return Err(Error::DimensionMismatch {
            expected: t.mode_count(),
            found: targets.len(),
        });
    }
    check_indices(targets, k_total)?;
    let mut m = DMatrix::identity(k_total, k_total);
    let mut l = DMatrix::zeros(k_total, k_total);
    for &r in targets {
        m[(r, r)] = ZERO;
    }
    for (a, &ra) in targets.iter().enumerate() {
        for (b, &rb) in targets.iter().enumerate() {
            m[(ra, rb)] = t.m[(a, b)];
            l[(ra, rb)] = t.l[(a, b)];
        }
    }
    Ok(CanonicalTransform { m, l })
}
