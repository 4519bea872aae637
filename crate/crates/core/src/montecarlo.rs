//! Wigner-sampling oracle.
//!
//! Each input quadrature is drawn from `N(mean, 1/2)`, pushed through the
//! machine's symplectic matrix, and per-output-mode moments are accumulated
//! in two passes (mean, then centred second moments). For Gaussian inputs and
//! linear maps this is exact in distribution, so the only error is sampling
//! error.
//!
//! # Stream derivation (v1)
//!
//! Samples are grouped in blocks of [`BLOCK_SIZE`]. Block `b` draws from
//! `ChaCha12Rng::seed_from_u64(seed)` on stream `b`; within a sample the
//! normals are consumed in slot order `x₀, p₀, x₁, p₁, …`. Blocks are
//! processed in parallel and merged in block order, so results do not
//! depend on the number of worker threads.

use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::{DMatrix, Matrix2, Vector2};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::canonical::CanonicalTransform;
use crate::error::{Error, Result};
use crate::gaussian::{amplitude_to_quadratures, coherent_overlap, GaussianState};
use crate::machine::{CloningMachine, MachineLayout, NoiseReport, OutputRole};
use crate::STRUCTURAL_TOL;

/// Samples per RNG stream.
pub const BLOCK_SIZE: usize = 8192;

/// Default `|z|` above which a comparison is flagged.
pub const Z_FLAG: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SampleConfig {
    pub sample_count: usize,
    pub seed: u64,
    pub psi: Complex64,
}

impl SampleConfig {
    pub fn new(sample_count: usize, seed: u64, psi: Complex64) -> Result<Self> {
        if sample_count < 2 {
            return Err(Error::Domain(format!(
                "need at least 2 samples to estimate a variance, got {sample_count}"
            )));
        }
        if !(psi.re.is_finite() && psi.im.is_finite()) {
            return Err(Error::Domain("psi must be finite".into()));
        }
        Ok(Self {
            sample_count,
            seed,
            psi,
        })
    }
}

/// Moments of one output mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModeMoments {
    pub mode: usize,
    /// `(⟨x⟩, ⟨p⟩)`
    pub mean: [f64; 2],
    /// Row-major 2×2 covariance.
    pub covariance: [[f64; 2]; 2],
    /// `√(Var/n)` per quadrature.
    pub mean_se: [f64; 2],
    /// `Var·√(2/(n − 1))` per quadrature.
    pub variance_se: [f64; 2],
}

impl ModeMoments {
    fn from_moments(mode: usize, mean: Vector2<f64>, cov: Matrix2<f64>, n: usize) -> Self {
        let n_f = n as f64;
        let var = [cov[(0, 0)], cov[(1, 1)]];
        Self {
            mode,
            mean: [mean[0], mean[1]],
            covariance: [[cov[(0, 0)], cov[(0, 1)]], [cov[(1, 0)], cov[(1, 1)]]],
            mean_se: var.map(|v| (v / n_f).sqrt()),
            variance_se: var.map(|v| v * (2.0 / (n_f - 1.0)).sqrt()),
        }
    }

    pub fn mean_vector(&self) -> Vector2<f64> {
        Vector2::new(self.mean[0], self.mean[1])
    }

    pub fn covariance_matrix(&self) -> Matrix2<f64> {
        Matrix2::new(
            self.covariance[0][0],
            self.covariance[0][1],
            self.covariance[1][0],
            self.covariance[1][1],
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalMoments {
    pub sample_count: usize,
    pub seed: u64,
    pub psi: Complex64,
    pub modes: Vec<ModeMoments>,
}

impl EmpiricalMoments {
    /// Infinite-sample surrogate: analytic moments dressed with the standard
    /// errors `sample_count` samples would have.
    pub fn from_state(state: &GaussianState, psi: Complex64, sample_count: usize) -> Result<Self> {
        if sample_count < 2 {
            return Err(Error::Domain("sample_count must be at least 2".into()));
        }
        let modes = (0..state.mode_count())
            .map(|i| {
                let (mean, cov) = state.mode_moments(i)?;
                Ok(ModeMoments::from_moments(i, mean, cov, sample_count))
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            sample_count,
            seed: 0,
            psi,
            modes,
        })
    }
}

/// Nonzero entries of each row of a dense matrix.
struct SparseRows {
    rows: Vec<Vec<(usize, f64)>>,
}

impl SparseRows {
    fn new(s: &DMatrix<f64>) -> Self {
        let rows = (0..s.nrows())
            .map(|r| {
                (0..s.ncols())
                    .filter(|&c| s[(r, c)] != 0.0)
                    .map(|c| (c, s[(r, c)]))
                    .collect()
            })
            .collect();
        Self { rows }
    }

    fn apply(&self, input: &[f64], out: &mut [f64]) {
        for (o, row) in out.iter_mut().zip(&self.rows) {
            *o = row.iter().map(|&(c, v)| v * input[c]).sum();
        }
    }
}

struct Sampler {
    seed: u64,
    sample_count: usize,
    input_mean: Vec<f64>,
    map: SparseRows,
}

impl Sampler {
    fn new(transform: &CanonicalTransform, amplitudes: &[Complex64], config: &SampleConfig) -> Result<Self> {
        if config.sample_count < 2 {
            return Err(Error::Domain("sample_count must be at least 2".into()));
        }
        if amplitudes.len() != transform.mode_count() {
            return Err(Error::DimensionMismatch {
                expected: transform.mode_count(),
                found: amplitudes.len(),
            });
        }
        let s = transform.to_symplectic_with_tol(STRUCTURAL_TOL)?;
        Ok(Self {
            seed: config.seed,
            sample_count: config.sample_count,
            input_mean: amplitudes.iter().flat_map(|&a| amplitude_to_quadratures(a)).collect(),
            map: SparseRows::new(s.matrix()),
        })
    }

    fn dim(&self) -> usize {
        self.input_mean.len()
    }

    fn block_count(&self) -> usize {
        self.sample_count.div_ceil(BLOCK_SIZE)
    }

    /// Calls `f` on every output sample of block `b`, in order.
    fn for_each_in_block(&self, b: usize, mut f: impl FnMut(&[f64])) {
        let mut rng = ChaCha12Rng::seed_from_u64(self.seed);
        rng.set_stream(b as u64);
        let len = BLOCK_SIZE.min(self.sample_count - b * BLOCK_SIZE);
        let mut input = vec![0.0; self.dim()];
        let mut output = vec![0.0; self.dim()];
        for _ in 0..len {
            for (x, &m) in input.iter_mut().zip(&self.input_mean) {
                let z: f64 = StandardNormal.sample(&mut rng);
                *x = m + FRAC_1_SQRT_2 * z;
            }
            self.map.apply(&input, &mut output);
            f(&output);
        }
    }

    fn block_sums(&self, b: usize) -> Vec<f64> {
        let mut sums = vec![0.0; self.dim()];
        self.for_each_in_block(b, |y| {
            for (s, v) in sums.iter_mut().zip(y) {
                *s += v;
            }
        });
        sums
    }

    /// Centred `(xx, xp, pp)` sums per mode.
    fn block_products(&self, b: usize, mean: &[f64]) -> Vec<f64> {
        let modes = self.dim() / 2;
        let mut acc = vec![0.0; 3 * modes];
        self.for_each_in_block(b, |y| accumulate_products(&mut acc, y, mean));
        acc
    }

    fn finish(&self, mean: Vec<f64>, products: Vec<f64>, psi: Complex64) -> EmpiricalMoments {
        let n = self.sample_count;
        let denom = (n - 1) as f64;
        let modes = (0..self.dim() / 2)
            .map(|i| {
                let mu = Vector2::new(mean[2 * i], mean[2 * i + 1]);
                let (xx, xp, pp) = (products[3 * i], products[3 * i + 1], products[3 * i + 2]);
                let cov = Matrix2::new(xx, xp, xp, pp) / denom;
                ModeMoments::from_moments(i, mu, cov, n)
            })
            .collect();
        EmpiricalMoments {
            sample_count: n,
            seed: self.seed,
            psi,
            modes,
        }
    }

    fn run_blocked(&self, psi: Complex64) -> EmpiricalMoments {
        let blocks = self.block_count();
        let n = self.sample_count as f64;

        let partial: Vec<Vec<f64>> = (0..blocks).into_par_iter().map(|b| self.block_sums(b)).collect();
        let mean = merge(self.dim(), &partial)
            .into_iter()
            .map(|s| s / n)
            .collect::<Vec<_>>();

        let partial: Vec<Vec<f64>> = (0..blocks)
            .into_par_iter()
            .map(|b| self.block_products(b, &mean))
            .collect();
        let products = merge(3 * self.dim() / 2, &partial);
        self.finish(mean, products, psi)
    }

    /// Same sample sequence, one running accumulator per pass.
    fn run_single(&self, psi: Complex64) -> EmpiricalMoments {
        let blocks = self.block_count();
        let mut sums = vec![0.0; self.dim()];
        for b in 0..blocks {
            self.for_each_in_block(b, |y| {
                for (s, v) in sums.iter_mut().zip(y) {
                    *s += v;
                }
            });
        }
        let mean: Vec<f64> = sums.into_iter().map(|s| s / self.sample_count as f64).collect();
        let mut products = vec![0.0; 3 * self.dim() / 2];
        for b in 0..blocks {
            self.for_each_in_block(b, |y| accumulate_products(&mut products, y, &mean));
        }
        self.finish(mean, products, psi)
    }
}

fn accumulate_products(acc: &mut [f64], y: &[f64], mean: &[f64]) {
    for (i, a) in acc.chunks_exact_mut(3).enumerate() {
        let dx = y[2 * i] - mean[2 * i];
        let dp = y[2 * i + 1] - mean[2 * i + 1];
        a[0] += dx * dx;
        a[1] += dx * dp;
        a[2] += dp * dp;
    }
}

fn merge(len: usize, partial: &[Vec<f64>]) -> Vec<f64> {
    partial.iter().fold(vec![0.0; len], |mut acc, p| {
        for (a, v) in acc.iter_mut().zip(p) {
            *a += v;
        }
        acc
    })
}

/// Sample a bare transform fed with coherent inputs of the given amplitudes.
pub fn simulate_transform(
    transform: &CanonicalTransform,
    amplitudes: &[Complex64],
    config: &SampleConfig,
) -> Result<EmpiricalMoments> {
    Ok(Sampler::new(transform, amplitudes, config)?.run_blocked(config.psi))
}

/// Sample the machine with `N` copies of `ψ` and `N'` copies of `ψ*`.
pub fn simulate(machine: &CloningMachine, config: &SampleConfig) -> Result<EmpiricalMoments> {
    let amplitudes = machine.layout.input_amplitudes(config.psi);
    simulate_transform(&machine.transform, &amplitudes, config)
}

/// Reference path for the merge-equivalence check: identical samples, a
/// single sequential accumulator instead of per-block partial sums.
pub fn simulate_single_pass(machine: &CloningMachine, config: &SampleConfig) -> Result<EmpiricalMoments> {
    let amplitudes = machine.layout.input_amplitudes(config.psi);
    Ok(Sampler::new(&machine.transform, &amplitudes, config)?.run_single(config.psi))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModeComparison {
    pub mode: usize,
    pub role: OutputRole,
    pub z_mean: [f64; 2],
    pub z_variance: [f64; 2],
    pub fidelity: f64,
    pub fidelity_expected: f64,
    pub fidelity_se: f64,
    pub z_fidelity: f64,
}

impl ModeComparison {
    pub fn max_abs_z(&self) -> f64 {
        self.z_mean
            .iter()
            .chain(&self.z_variance)
            .chain(std::iter::once(&self.z_fidelity))
            .fold(0.0_f64, |acc, z| acc.max(z.abs()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonSummary {
    pub threshold: f64,
    pub modes: Vec<ModeComparison>,
    pub max_abs_z: f64,
    pub flagged: bool,
}

/// Delta-method standard error of the coherent-state fidelity estimated from
/// `n` Gaussian samples: the sample mean has covariance `V/n`, the sample
/// covariance the Wishart covariance `(VᵢₖVⱼₗ + VᵢₗVⱼₖ)/(n − 1)`.
fn fidelity_se(mean: &Vector2<f64>, cov: &Matrix2<f64>, target: Complex64, n: usize) -> Result<f64> {
    let f = |m: &Vector2<f64>, c: &Matrix2<f64>| coherent_overlap(m, c, target);
    let h = 1e-6;
    let mut g_mean = Vector2::zeros();
    for i in 0..2 {
        let mut e = Vector2::zeros();
        e[i] = h;
        g_mean[i] = (f(&(mean + e), cov)? - f(&(mean - e), cov)?) / (2.0 * h);
    }
    // derivatives with respect to (Vxx, Vxp = Vpx, Vpp)
    let basis = [
        Matrix2::new(1.0, 0.0, 0.0, 0.0),
        Matrix2::new(0.0, 1.0, 1.0, 0.0),
        Matrix2::new(0.0, 0.0, 0.0, 1.0),
    ];
    let mut g_cov = [0.0; 3];
    for (g, e) in g_cov.iter_mut().zip(&basis) {
        *g = (f(mean, &(cov + e * h))? - f(mean, &(cov - e * h))?) / (2.0 * h);
    }
    let idx = [(0, 0), (0, 1), (1, 1)];
    let mut var_cov = 0.0;
    for (a, &(i, j)) in idx.iter().enumerate() {
        for (b, &(k, l)) in idx.iter().enumerate() {
            let w = cov[(i, k)] * cov[(j, l)] + cov[(i, l)] * cov[(j, k)];
            var_cov += g_cov[a] * g_cov[b] * w;
        }
    }
    let n = n as f64;
    let var = (g_mean.transpose() * cov * g_mean)[0] / n + var_cov / (n - 1.0);
    Ok(var.max(0.0).sqrt())
}

fn z(observed: f64, expected: f64, se: f64) -> f64 {
    let d = observed - expected;
    if d == 0.0 {
        0.0
    } else if se > 0.0 {
        d / se
    } else {
        d.signum() * f64::INFINITY
    }
}

/// Z-scores of sampled clone/anticlone moments against the closed forms:
/// means against `ψ` (resp. `ψ*`), variances against `1/2 + n_th`,
/// fidelities against the reported values.
pub fn compare_to_analytic(
    emp: &EmpiricalMoments,
    report: &NoiseReport,
    layout: &MachineLayout,
) -> Result<ComparisonSummary> {
    if emp.modes.len() != layout.total_modes {
        return Err(Error::RoleMismatch(format!(
            "sampled {} modes, layout has {}",
            emp.modes.len(),
            layout.total_modes
        )));
    }
    if layout.clones.len() != report.m_clones as usize || layout.anticlones.len() != report.m_anticlones as usize {
        return Err(Error::RoleMismatch(format!(
            "layout has {} clones / {} anticlones, report describes {} / {}",
            layout.clones.len(),
            layout.anticlones.len(),
            report.m_clones,
            report.m_anticlones
        )));
    }
    let targets = layout
        .clones
        .iter()
        .enumerate()
        .map(|(l, &mode)| Ok((mode, OutputRole::Clone(l), emp.psi, report.n_th_clone, report.f_clone)))
        .chain(layout.anticlones.iter().enumerate().map(|(l, &mode)| {
            match (report.n_th_anticlone, report.f_anticlone) {
                (Some(n_th), Some(f)) => Ok((mode, OutputRole::Anticlone(l), emp.psi.conj(), n_th, f)),
                _ => Err(Error::RoleMismatch("report has no anticlone figures".into())),
            }
        }));

    let mut modes = Vec::new();
    for t in targets {
        let (mode, role, target, n_th, f_expected) = t?;
        let mm = &emp.modes[mode];
        if mm.mode != mode {
            return Err(Error::RoleMismatch(format!(
                "slot {mode} holds moments of mode {}",
                mm.mode
            )));
        }
        let expected_mean = amplitude_to_quadratures(target);
        let expected_var = 0.5 + n_th;
        let (mean, cov) = (mm.mean_vector(), mm.covariance_matrix());
        let fidelity = coherent_overlap(&mean, &cov, target)?;
        let se = fidelity_se(&mean, &cov, target, emp.sample_count)?;
        modes.push(ModeComparison {
            mode,
            role,
            z_mean: [0, 1].map(|q| z(mm.mean[q], expected_mean[q], mm.mean_se[q])),
            z_variance: [0, 1].map(|q| z(mm.covariance[q][q], expected_var, mm.variance_se[q])),
            fidelity,
            fidelity_expected: f_expected,
            fidelity_se: se,
            z_fidelity: z(fidelity, f_expected, se),
        });
    }
    let max_abs_z = modes.iter().map(ModeComparison::max_abs_z).fold(0.0, f64::max);
    Ok(ComparisonSummary {
        threshold: Z_FLAG,
        modes,
        max_abs_z,
        flagged: max_abs_z > Z_FLAG,
    })
}
