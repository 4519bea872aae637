//! Phase-conjugated-inputs (PCI) cloning machines for continuous variables.
//!
//! A PCI cloner takes `N` replicas of a coherent state `|ψ⟩` and `N'`
//! replicas of its conjugate `|ψ*⟩` and produces `M` clones of `|ψ⟩` plus
//! `M' = M + N' - N` anticlones of `|ψ*⟩`. The machine is a beam-splitter
//! network (discrete Fourier transforms) around a single two-mode
//! phase-insensitive amplifier.
//!
//! The crate is organised bottom-up:
//!
//! * [`gaussian`] — Gaussian states by first and second moments, symplectic maps.
//! * [`canonical`] — linear canonical transforms `b = M a + L a†`.
//! * [`machine`] — the cloner itself plus every closed-form gain/noise/fidelity.
//! * [`optimizer`] — constrained search that rediscovers the optimal amplifier,
//!   and the input-asymmetry minimisation.
//! * [`montecarlo`] — Wigner-sampling oracle for the built machines.
//!
//! Units: `ħ = 1`, vacuum quadrature variance `1/2`, `a = (x + i p)/√2`.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` deliberately rejects NaN

pub mod canonical;
mod error;
pub mod gaussian;
pub mod machine;
pub mod montecarlo;
pub mod optimizer;

pub use canonical::{compose, dft_transform, embed, identity_transform, pcia_transform, CanonicalTransform};
pub use error::{Error, Result};
pub use gaussian::{coherent_state, omega, vacuum_state, GaussianState, SymplecticMap};
pub use machine::{
    asymmetry_gain, build_machine, gain_from_amplitudes, gain_from_counts, measurement_noise, noise_report,
    p_function_density, CloningConfig, CloningMachine, MachineLayout, NoiseReport,
};
pub use montecarlo::{compare_to_analytic, simulate, ComparisonSummary, EmpiricalMoments, SampleConfig};
pub use optimizer::{
    minimize_asymmetry, solve_amplifier, AsymmetryOptions, AsymmetryResult, SearchOptions, SearchResult,
};

pub use num_complex::Complex64;

/// Default tolerance for structural invariants (symplecticity, canonicity, PSD).
pub const STRUCTURAL_TOL: f64 = 1e-10;
/// Default tolerance for closed-form identities.
pub const CLOSED_FORM_TOL: f64 = 1e-12;
