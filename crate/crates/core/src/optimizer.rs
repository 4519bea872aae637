//! Numerical rediscovery of the optimal amplifier, and the optimal input
//! asymmetry for a fixed number of inputs.
//!
//! # Amplifier search
//!
//! With inputs `⟨a₁⟩ = αψ`, `⟨a₂⟩ = βψ*` (β scaled to 1) and a target
//! `⟨b₁⟩ = γψ`, the row of the transform producing `b₁` has real entries
//! `M₁ⱼ, L₁ⱼ` after gauge fixing. The mean constraints eliminate
//! `M₁₂ = −αL₁₁` and `L₁₂ = γ − αM₁₁`, leaving `x = (M₁₁, L₁₁, M₁₃, L₁₃)`.
//! The search minimises the output variance
//!
//! ```text
//! f(x) = ½ [M₁₁² + (γ − αM₁₁)² + (1 + α²)L₁₁² + M₁₃² + L₁₃²]
//! ```
//!
//! subject to the single row-normalisation constraint
//!
//! ```text
//! c(x) = M₁₁² − (γ − αM₁₁)² − (1 − α²)L₁₁² + M₁₃² − L₁₃² − 1 = 0,
//! ```
//!
//! by quadratic-penalty continuation with multiplier updates from several
//! seeded starts, then polishes the best point with Newton steps on the KKT
//! system. The winner is completed to a three-mode transform and checked
//! against the full commutation relations.

use nalgebra::{Matrix4, Matrix5, Vector4, Vector5};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::canonical::CanonicalTransform;
use crate::error::{Error, Result};
use crate::machine::{asymmetry_gain, gain_from_amplitudes};

#[derive(Debug, Clone, Serialize)]
pub struct SearchOptions {
    pub seed: u64,
    /// Number of independent starting points.
    pub restarts: usize,
    /// KKT residual below which a start counts as converged.
    pub tol: f64,
    /// Cap on penalty/multiplier outer iterations per start.
    pub max_outer: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            seed: 0x5eed_0001,
            restarts: 8,
            tol: 1e-10,
            max_outer: 60,
        }
    }
}

/// One amplifier-search instance in the β = 1 frame.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct AmplifierSearchProblem {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    /// `|α|/|β|`
    pub scaled_alpha: f64,
    /// `|γ|/|β|`
    pub scaled_gamma: f64,
}

impl AmplifierSearchProblem {
    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Result<Self> {
        if ![alpha, beta, gamma].iter().all(|v| v.is_finite()) {
            return Err(Error::Domain("amplitudes must be finite".into()));
        }
        if gamma.abs() < alpha.abs() {
            return Err(Error::Domain(format!(
                "|gamma| = {} < |alpha| = {}: attenuation regime",
                gamma.abs(),
                alpha.abs()
            )));
        }
        if beta == 0.0 {
            return Err(Error::Domain(
                "beta = 0 cannot be normalised away; use gain_from_amplitudes".into(),
            ));
        }
        Ok(Self {
            alpha,
            beta,
            gamma,
            scaled_alpha: alpha.abs() / beta.abs(),
            scaled_gamma: gamma.abs() / beta.abs(),
        })
    }

    fn quad(&self) -> (Vector4<f64>, Vector4<f64>) {
        let a2 = self.scaled_alpha * self.scaled_alpha;
        (
            Vector4::new(1.0 + a2, 1.0 + a2, 1.0, 1.0),
            Vector4::new(1.0 - a2, -(1.0 - a2), 1.0, -1.0),
        )
    }

    /// Output variance `(Δb₁)²`.
    pub fn objective(&self, x: &Vector4<f64>) -> f64 {
        let (a, g) = (self.scaled_alpha, self.scaled_gamma);
        let l12 = g - a * x[0];
        0.5 * (x[0] * x[0] + l12 * l12 + (1.0 + a * a) * x[1] * x[1] + x[2] * x[2] + x[3] * x[3])
    }

    /// Row normalisation `Σ M₁ⱼ² − Σ L₁ⱼ² − 1`.
    pub fn constraint(&self, x: &Vector4<f64>) -> f64 {
        let (a, g) = (self.scaled_alpha, self.scaled_gamma);
        let l12 = g - a * x[0];
        x[0] * x[0] - l12 * l12 - (1.0 - a * a) * x[1] * x[1] + x[2] * x[2] - x[3] * x[3] - 1.0
    }

    fn objective_grad(&self, x: &Vector4<f64>) -> Vector4<f64> {
        let (diag, _) = self.quad();
        let mut g = diag.component_mul(x);
        g[0] -= self.scaled_alpha * self.scaled_gamma;
        g
    }

    fn constraint_grad(&self, x: &Vector4<f64>) -> Vector4<f64> {
        let (_, cdiag) = self.quad();
        let mut g = 2.0 * cdiag.component_mul(x);
        g[0] += 2.0 * self.scaled_alpha * self.scaled_gamma;
        g
    }

    fn kkt_residual(&self, x: &Vector4<f64>, lambda: f64) -> f64 {
        let g = self.objective_grad(x) + lambda * self.constraint_grad(x);
        g.amax().max(self.constraint(x).abs())
    }

    /// Complete the solved row to a three-mode transform: row 2 is the
    /// amplifier's conjugate output with gain `M₁₁²`, row 3 the identity.
    fn completed_transform(&self, x: &Vector4<f64>) -> CanonicalTransform {
        let (a, g) = (self.scaled_alpha, self.scaled_gamma);
        let gain = x[0] * x[0];
        let c = |v: f64| Complex64::new(v, 0.0);
        let z = c(0.0);
        let m = nalgebra::DMatrix::from_row_slice(
            3,
            3,
            &[
                c(x[0]),
                c(-a * x[1]),
                c(x[2]), //
                z,
                c(gain.sqrt()),
                z, //
                z,
                z,
                c(1.0),
            ],
        );
        let l = nalgebra::DMatrix::from_row_slice(
            3,
            3,
            &[
                c(x[1]),
                c(g - a * x[0]),
                c(x[3]), //
                c((gain - 1.0).max(0.0).sqrt()),
                z,
                z, //
                z,
                z,
                z,
            ],
        );
        CanonicalTransform::new(m, l).expect("3x3 blocks")
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SearchResult {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub m11: f64,
    pub l11: f64,
    pub m12: f64,
    pub l12: f64,
    pub m13: f64,
    pub l13: f64,
    pub multiplier: f64,
    /// `(Δb₁)² = ½ Σⱼ (M₁ⱼ² + L₁ⱼ²)` at the solution.
    pub objective: f64,
    /// `|Σ M₁ⱼ² − Σ L₁ⱼ² − 1|`
    pub reduced_residual: f64,
    /// Commutation residual of the completed three-mode transform.
    pub full_residual: f64,
    pub kkt_residual: f64,
    /// `G = M₁₁²`
    pub gain: f64,
    /// Closed-form gain for the same amplitudes, for comparison.
    pub formula_gain: f64,
    pub iterations: usize,
    pub converged: bool,
    pub restarts: usize,
    /// Converged starts that landed on the reported solution (within 1e-6).
    pub agreeing_starts: usize,
}

impl SearchResult {
    /// Largest of `|M₁₃|, |L₁₃|, |L₁₁|, |M₁₂|`.
    pub fn auxiliary_coupling(&self) -> f64 {
        [self.m13, self.l13, self.l11, self.m12]
            .iter()
            .fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }
}

#[derive(Debug, Clone)]
struct StartOutcome {
    x: Vector4<f64>,
    lambda: f64,
    kkt: f64,
    objective: f64,
    iterations: usize,
}

/// Damped Newton on `P(x) = f + λc + (μ/2)c²`.
fn minimise_penalty(
    p: &AmplifierSearchProblem,
    mut x: Vector4<f64>,
    lambda: f64,
    mu: f64,
    grad_tol: f64,
    iterations: &mut usize,
) -> Vector4<f64> {
    let (diag, cdiag) = p.quad();
    let value = |x: &Vector4<f64>| {
        let c = p.constraint(x);
        p.objective(x) + lambda * c + 0.5 * mu * c * c
    };
    let mut damping = 0.0;
    for _ in 0..200 {
        *iterations += 1;
        let c = p.constraint(&x);
        let gc = p.constraint_grad(&x);
        let w = lambda + mu * c;
        let grad = p.objective_grad(&x) + w * gc;
        if grad.amax() < grad_tol {
            break;
        }
        let hess = Matrix4::from_diagonal(&(diag + 2.0 * w * cdiag)) + mu * gc * gc.transpose();
        let f0 = value(&x);
        let mut accepted = false;
        for _ in 0..60 {
            let shifted = hess + Matrix4::identity() * damping;
            if let Some(chol) = shifted.cholesky() {
                let step = -chol.solve(&grad);
                let mut t = 1.0;
                while t > 1e-12 {
                    let trial = x + t * step;
                    if value(&trial) <= f0 + 1e-4 * t * grad.dot(&step) {
                        x = trial;
                        accepted = true;
                        break;
                    }
                    t *= 0.5;
                }
                if accepted {
                    damping *= 0.25;
                    if damping < 1e-12 {
                        damping = 0.0;
                    }
                    break;
                }
            }
            damping = if damping == 0.0 {
                1e-6 * (1.0 + hess.amax())
            } else {
                damping * 10.0
            };
        }
        if !accepted {
            break;
        }
    }
    x
}

/// Newton iterations on `(∇f + λ∇c, c) = 0` from a nearby point.
fn polish_kkt(p: &AmplifierSearchProblem, x: Vector4<f64>, lambda: f64, iterations: &mut usize) -> (Vector4<f64>, f64) {
    let (diag, cdiag) = p.quad();
    let (mut x, mut lambda) = (x, lambda);
    let mut best = (x, lambda, p.kkt_residual(&x, lambda));
    for _ in 0..30 {
        *iterations += 1;
        let gc = p.constraint_grad(&x);
        let mut rhs = Vector5::zeros();
        rhs.fixed_rows_mut::<4>(0)
            .copy_from(&(p.objective_grad(&x) + lambda * gc));
        rhs[4] = p.constraint(&x);
        let mut jac = Matrix5::zeros();
        jac.fixed_view_mut::<4, 4>(0, 0)
            .copy_from(&Matrix4::from_diagonal(&(diag + 2.0 * lambda * cdiag)));
        jac.fixed_view_mut::<4, 1>(0, 4).copy_from(&gc);
        jac.fixed_view_mut::<1, 4>(4, 0).copy_from(&gc.transpose());
        let Some(step) = jac.lu().solve(&(-rhs)) else { break };
        x += step.fixed_rows::<4>(0);
        lambda += step[4];
        let r = p.kkt_residual(&x, lambda);
        if r < best.2 {
            best = (x, lambda, r);
        }
        if r < 1e-15 || step.amax() < 1e-16 {
            break;
        }
    }
    (best.0, best.1)
}

fn run_start(p: &AmplifierSearchProblem, x0: Vector4<f64>, opts: &SearchOptions) -> StartOutcome {
    let mut iterations = 0;
    let (mut x, mut lambda, mut mu) = (x0, 0.0, 10.0);
    let mut grad_tol = 1e-4;
    let mut last_c = f64::INFINITY;
    for _ in 0..opts.max_outer {
        x = minimise_penalty(p, x, lambda, mu, grad_tol, &mut iterations);
        let c = p.constraint(&x);
        lambda += mu * c;
        if c.abs() > 0.25 * last_c {
            mu = (mu * 10.0).min(1e10);
        }
        last_c = c.abs();
        grad_tol = (grad_tol * 0.1).max(1e-10);
        if grad_tol <= 1e-10 && p.kkt_residual(&x, lambda) < 1e-9 {
            break;
        }
    }
    let (x, lambda) = polish_kkt(p, x, lambda, &mut iterations);
    StartOutcome {
        x,
        lambda,
        kkt: p.kkt_residual(&x, lambda),
        objective: p.objective(&x),
        iterations,
    }
}

/// With `α = 0` the inputs `a₁` and `a₃` are both vacuum and any rotation
/// between them leaves `f` and `c` unchanged. Fix that gauge by moving all
/// of the `a₁/a₃` coupling onto `a₁` (with `M₁₁ ≥ 0`).
fn rotate_vacua(x: &Vector4<f64>) -> Vector4<f64> {
    let m = x[0].hypot(x[2]);
    let l = if m > 0.0 {
        (x[0] * x[1] + x[2] * x[3]) / m
    } else {
        x[1].hypot(x[3])
    };
    let l_perp = if m > 0.0 { (x[0] * x[3] - x[2] * x[1]) / m } else { 0.0 };
    Vector4::new(m, l, 0.0, l_perp)
}

/// Minimise the output variance of `b₁` over the reduced constraint set.
pub fn solve_amplifier(alpha: f64, beta: f64, gamma: f64, opts: &SearchOptions) -> Result<SearchResult> {
    let p = AmplifierSearchProblem::new(alpha, beta, gamma)?;
    let formula_gain = gain_from_amplitudes(p.scaled_alpha, 1.0, p.scaled_gamma)?;
    let restarts = opts.restarts.max(1);
    let scale = 1.0 + p.scaled_gamma;

    // starting points are drawn up front so the outcome cannot depend on
    // how rayon schedules the starts
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let starts: Vec<Vector4<f64>> = (0..restarts)
        .map(|_| Vector4::from_fn(|_, _| rng.random_range(-scale..scale)))
        .collect();
    let mut outcomes: Vec<StartOutcome> = starts.par_iter().map(|x0| run_start(&p, *x0, opts)).collect();
    if p.scaled_alpha == 0.0 {
        for o in &mut outcomes {
            o.x = rotate_vacua(&o.x);
        }
    }

    let iterations = outcomes.iter().map(|o| o.iterations).sum();
    let converged: Vec<&StartOutcome> = outcomes.iter().filter(|o| o.kkt <= opts.tol).collect();
    let Some(best) = converged
        .iter()
        .copied()
        .min_by(|a, b| a.objective.total_cmp(&b.objective))
    else {
        let residual = outcomes.iter().map(|o| o.kkt).fold(f64::INFINITY, f64::min);
        return Err(Error::NonConvergence { restarts, residual });
    };
    let agreeing_starts = converged
        .iter()
        .filter(|o| (o.objective - best.objective).abs() < 1e-6 && (o.x - best.x).abs().max() < 1e-6)
        .count();

    let (a, g) = (p.scaled_alpha, p.scaled_gamma);
    let x = best.x;
    Ok(SearchResult {
        alpha,
        beta,
        gamma,
        m11: x[0],
        l11: x[1],
        m12: -a * x[1],
        l12: g - a * x[0],
        m13: x[2],
        l13: x[3],
        multiplier: best.lambda,
        objective: best.objective,
        reduced_residual: p.constraint(&x).abs(),
        full_residual: p.completed_transform(&x).commutation_residual(),
        kkt_residual: best.kkt,
        gain: x[0] * x[0],
        formula_gain,
        iterations,
        converged: true,
        restarts,
        agreeing_starts,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct AsymmetryOptions {
    /// Spacing of the initial scan over `a`.
    pub grid_step: f64,
    /// Bracket width at which golden-section refinement stops.
    pub refine_tol: f64,
}

impl Default for AsymmetryOptions {
    fn default() -> Self {
        Self {
            grid_step: 1e-3,
            refine_tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TracePoint {
    pub a: f64,
    pub n_th: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AsymmetryResult {
    pub n: f64,
    pub m: f64,
    pub a_star: f64,
    pub gain: f64,
    pub n_th: f64,
    /// The scan grid, for plotting.
    pub trace: Vec<TracePoint>,
}

/// Clone noise `(G(a) − 1)/M`.
pub fn asymmetry_noise(n: f64, m: f64, a: f64) -> Result<f64> {
    Ok((asymmetry_gain(n, m, a)? - 1.0) / m)
}

/// Conjugate fraction `a ∈ [0, 1)` minimising the clone noise for `n` inputs
/// and `m` clones. Ties are broken towards the smaller `a`.
pub fn minimize_asymmetry(n: f64, m: f64, opts: &AsymmetryOptions) -> Result<AsymmetryResult> {
    if !(m >= 1.0) {
        return Err(Error::Domain(format!("need at least one clone, got M = {m}")));
    }
    if !(n > 0.0) || !n.is_finite() {
        return Err(Error::Domain(format!("need a positive input count, got n = {n}")));
    }
    if !(opts.grid_step > 0.0 && opts.grid_step < 1.0) || !(opts.refine_tol > 0.0) {
        return Err(Error::Domain(
            "grid step must lie in (0, 1), refine tolerance > 0".into(),
        ));
    }
    // feasibility: M ≥ (1 − a) n
    let a_lo = (1.0 - m / n).max(0.0);
    if a_lo >= 1.0 {
        return Err(Error::Domain("empty feasible region".into()));
    }
    let noise = |a: f64| asymmetry_noise(n, m, a);

    let steps = (1.0 / opts.grid_step).round() as usize;
    let mut grid: Vec<f64> = (0..steps)
        .map(|i| i as f64 * opts.grid_step)
        .filter(|&a| a >= a_lo && a < 1.0)
        .collect();
    if grid.first().is_none_or(|&a| a > a_lo) {
        grid.insert(0, a_lo);
    }
    let trace: Vec<TracePoint> = grid
        .par_iter()
        .map(|&a| noise(a).map(|n_th| TracePoint { a, n_th }))
        .collect::<Result<_>>()?;

    let min_val = trace.iter().map(|p| p.n_th).fold(f64::INFINITY, f64::min);
    let flat = 1e-14 * min_val.abs().max(1e-300);
    let best = *trace.iter().find(|p| p.n_th <= min_val + flat).expect("non-empty grid");

    let lo = (best.a - opts.grid_step).max(a_lo);
    let hi = (best.a + opts.grid_step).min(1.0 - f64::EPSILON);
    let refined = golden_section(lo, hi, opts.refine_tol, |a| noise(a).unwrap_or(f64::INFINITY));
    let refined = TracePoint {
        a: refined,
        n_th: noise(refined)?,
    };

    let star = if refined.n_th < best.n_th - flat || ((refined.n_th - best.n_th).abs() <= flat && refined.a < best.a) {
        refined
    } else {
        best
    };
    Ok(AsymmetryResult {
        n,
        m,
        a_star: star.a,
        gain: asymmetry_gain(n, m, star.a)?,
        n_th: star.n_th,
        trace,
    })
}

fn golden_section(mut lo: f64, mut hi: f64, tol: f64, f: impl Fn(f64) -> f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn solve(a: f64, b: f64, c: f64) -> SearchResult {
        solve_amplifier(a, b, c, &SearchOptions::default()).unwrap()
    }

    #[test]
    fn phase_conjugating_amplifier() {
        let r = solve(0.0, 1.0, 1.0);
        assert!((r.gain - 2.0).abs() < 1e-8);
        assert!(r.full_residual < 1e-8);
        assert!(r.auxiliary_coupling() < 1e-6);
    }

    #[test]
    fn mixed_inputs() {
        let r = solve(1.0, 2f64.sqrt(), 3f64.sqrt());
        assert!((r.gain - 1.20204).abs() < 1e-5);
        assert!((r.gain - r.formula_gain).abs() / r.formula_gain < 1e-10);
        assert!(r.auxiliary_coupling() < 1e-6);
    }

    #[test]
    fn no_amplification_needed() {
        let r = solve(1.0, 1.0, 1.0);
        assert!((r.gain - 1.0).abs() < 1e-10);
        assert!((r.objective - 0.5).abs() < 1e-10);
    }

    #[test]
    fn objective_matches_row_norm() {
        let r = solve(0.7, 1.9, 2.4);
        let row = [r.m11, r.m12, r.m13, r.l11, r.l12, r.l13];
        let recomputed = 0.5 * row.iter().map(|v| v * v).sum::<f64>();
        assert!((r.objective - recomputed).abs() < 1e-12);
        assert!(r.reduced_residual < 1e-12);
    }

    #[test]
    fn beta_is_normalised_away() {
        let r1 = solve(0.5, 1.0, 1.5);
        let r2 = solve(1.5, 3.0, 4.5);
        assert!((r1.gain - r2.gain).abs() < 1e-10);
        assert_eq!(r2.beta, 3.0);
    }

    #[test]
    fn domain_errors() {
        let o = SearchOptions::default();
        assert!(matches!(solve_amplifier(2.0, 1.0, 1.0, &o), Err(Error::Domain(_))));
        assert!(matches!(solve_amplifier(1.0, 0.0, 2.0, &o), Err(Error::Domain(_))));
    }

    #[test]
    fn non_convergence_is_reported() {
        let o = SearchOptions {
            max_outer: 1,
            tol: 1e-30,
            ..SearchOptions::default()
        };
        assert!(matches!(
            solve_amplifier(0.4, 1.0, 2.0, &o),
            Err(Error::NonConvergence { .. })
        ));
    }

    #[test]
    fn multi_start_agrees_on_a_single_minimiser() {
        let o = SearchOptions {
            restarts: 16,
            ..SearchOptions::default()
        };
        for (a, b, c) in [(0.0, 1.0, 2.0), (0.9, 1.1, 3.0), (2.0, 1.0, 2.5)] {
            let r = solve_amplifier(a, b, c, &o).unwrap();
            assert!(r.agreeing_starts >= 1);
            assert!((r.gain - r.formula_gain).abs() / r.formula_gain < 1e-10);
        }
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let o = SearchOptions::default();
        let a = solve_amplifier(0.3, 1.2, 2.0, &o).unwrap();
        let b = solve_amplifier(0.3, 1.2, 2.0, &o).unwrap();
        assert_eq!(a.m11.to_bits(), b.m11.to_bits());
        assert_eq!(a.iterations, b.iterations);
    }

    #[test]
    fn asymmetry_identity_case() {
        let r = minimize_asymmetry(8.0, 8.0, &AsymmetryOptions::default()).unwrap();
        assert_eq!(r.a_star, 0.0);
        assert_eq!(r.n_th, 0.0);
    }

    #[test]
    fn asymmetry_interior_minimum() {
        let r = minimize_asymmetry(8.0, 16.0, &AsymmetryOptions::default()).unwrap();
        assert!(r.a_star > 0.0 && r.a_star < 0.5);
        assert!(r.trace.iter().all(|p| r.n_th <= p.n_th + 1e-15));
        // value from an independent dense scan
        assert!((r.a_star - 0.25).abs() < 1e-6, "a* = {}", r.a_star);
    }

    #[test]
    fn asymmetry_large_m_tends_to_balance() {
        let r = minimize_asymmetry(8.0, 8.0e4, &AsymmetryOptions::default()).unwrap();
        assert!((r.a_star - 0.5).abs() < 0.02);
    }

    #[test]
    fn asymmetry_approach_to_half_is_monotone() {
        let n = 8.0;
        let ms: Vec<f64> = std::iter::once(n + 1.0)
            .chain((1..=13).map(|k| n * 2f64.powi(k)))
            .chain(std::iter::once(n * 1e4))
            .collect();
        let dist: Vec<f64> = ms
            .iter()
            .map(|&m| (minimize_asymmetry(n, m, &AsymmetryOptions::default()).unwrap().a_star - 0.5).abs())
            .collect();
        for w in dist.windows(2) {
            assert!(w[1] <= w[0] + 1e-9, "{dist:?}");
        }
    }

    #[test]
    fn asymmetry_curve_shape() {
        for m in [9.0, 16.0, 32.0, 64.0] {
            let r = minimize_asymmetry(8.0, m, &AsymmetryOptions::default()).unwrap();
            // single interior minimum: strictly decreasing then increasing on the grid
            let idx = r
                .trace
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.n_th.total_cmp(&b.1.n_th))
                .unwrap()
                .0;
            assert!(idx > 0);
            assert!(r.trace[..=idx].windows(2).all(|w| w[1].n_th < w[0].n_th));
            assert!(r.trace[idx..].windows(2).all(|w| w[1].n_th > w[0].n_th));
            assert!((asymmetry_noise(8.0, m, 1.0).unwrap() - 0.125).abs() < 1e-14);
        }
    }

    #[test]
    fn asymmetry_domain() {
        let o = AsymmetryOptions::default();
        assert!(minimize_asymmetry(8.0, 0.5, &o).is_err());
        assert!(minimize_asymmetry(0.0, 8.0, &o).is_err());
        // M < n is fine: the feasible region starts at a = 1 − M/n
        let r = minimize_asymmetry(8.0, 4.0, &o).unwrap();
        assert!(r.a_star >= 0.5);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(32))]

            #[test]
            fn search_matches_closed_form(
                alpha in -3.0..3.0f64,
                beta in prop_oneof![-3.0..-0.1f64, 0.1..3.0f64],
                excess in 0.0..3.0f64,
                seed in any::<u64>(),
            ) {
                let gamma = alpha.abs() + excess;
                let opts = SearchOptions { seed, ..SearchOptions::default() };
                let r = solve_amplifier(alpha, beta, gamma, &opts).unwrap();
                prop_assert!((r.gain - r.formula_gain).abs() / r.formula_gain < 1e-6);
                prop_assert!(r.auxiliary_coupling() < 1e-6);
                prop_assert!(r.full_residual < 1e-8);
            }

            #[test]
            fn a_star_is_grid_optimal(m in 8.0..200.0f64) {
                let r = minimize_asymmetry(8.0, m, &AsymmetryOptions::default()).unwrap();
                prop_assert!(r.trace.iter().all(|p| r.n_th <= p.n_th + 1e-15));
                prop_assert!(r.a_star < 0.5 + 1e-12);
            }
        }
    }
}
