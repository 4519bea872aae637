//! The PCI cloning machine and its closed-form predictions.
//!
//! `N` replicas of `|ψ⟩` are concentrated into one mode by an `N`-mode DFT,
//! `N'` replicas of `|ψ*⟩` likewise; the two concentrated modes go through a
//! phase-conjugated-inputs amplifier (PCIA) of gain `G`, and the amplifier
//! outputs are spread over `M` clones and `M' = M + N' − N` anticlones by
//! inverse DFTs fed with vacua.

use num_complex::Complex64;
use serde::Serialize;

use crate::canonical::{dft_transform, embed, identity_transform, pcia_transform, CanonicalTransform};
use crate::error::{Error, Result};
use crate::gaussian::{coherent_state, GaussianState};

/// Input and output counts of a PCI cloner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CloningConfig {
    n_inputs: u32,
    n_conj: u32,
    m_clones: u32,
}

impl CloningConfig {
    pub fn new(n_inputs: u32, n_conj: u32, m_clones: u32) -> Result<Self> {
        if n_inputs == 0 && n_conj == 0 {
            return Err(Error::Domain("need at least one input replica (N + N' >= 1)".into()));
        }
        if m_clones == 0 {
            return Err(Error::Domain("need at least one clone (M >= 1)".into()));
        }
        if m_clones < n_inputs {
            return Err(Error::Attenuation { n_inputs, m_clones });
        }
        Ok(Self {
            n_inputs,
            n_conj,
            m_clones,
        })
    }

    /// `N`, replicas of `|ψ⟩`.
    pub fn n_inputs(&self) -> u32 {
        self.n_inputs
    }

    /// `N'`, replicas of `|ψ*⟩`.
    pub fn n_conj(&self) -> u32 {
        self.n_conj
    }

    /// `M`, clones of `|ψ⟩`.
    pub fn m_clones(&self) -> u32 {
        self.m_clones
    }

    /// `M' = M + N' − N`, anticlones; never below `N'`.
    pub fn m_anticlones(&self) -> u32 {
        self.m_clones + self.n_conj - self.n_inputs
    }

    pub fn total_inputs(&self) -> u32 {
        self.n_inputs + self.n_conj
    }
}

/// Optimal PCIA gain for real input amplitudes `α` (of `ψ`), `β` (of `ψ*`)
/// and requested output amplitude `γ`.
///
/// Evaluated in the rationalised form `√G = (γ² + β²)/(αγ + β√(γ² − α² + β²))`,
/// which equals `(−αγ + β√(γ² − α² + β²))/(β² − α²)` wherever the latter is
/// defined and has no removable singularity at `α = β`. Only magnitudes
/// matter: signs are phases that the gauge freedom absorbs.
pub fn gain_from_amplitudes(alpha: f64, beta: f64, gamma: f64) -> Result<f64> {
    let (a, b, c) = (alpha.abs(), beta.abs(), gamma.abs());
    if ![a, b, c].iter().all(|v| v.is_finite()) {
        return Err(Error::Domain("amplitudes must be finite".into()));
    }
    if c < a {
        return Err(Error::Domain(format!(
            "|gamma| = {c} < |alpha| = {a}: attenuation regime"
        )));
    }
    if a == 0.0 && b == 0.0 {
        return Err(Error::Domain("alpha = beta = 0: no input signal".into()));
    }
    let root = (c * c - a * a + b * b).sqrt();
    let sqrt_g = (c * c + b * b) / (a * c + b * root);
    Ok(sqrt_g * sqrt_g)
}

/// Gain of the `(N, N') → M` machine.
///
/// Uses `√G = (M + N')/(√(NM) + √(N'M'))`, the rationalised form of
/// `(√(N'M') − √(NM))/(N' − N)`; at `N = N'` it gives `(M + N)²/(4MN)` and at
/// `N' = 0` it gives `M/N`.
pub fn gain_from_counts(config: &CloningConfig) -> f64 {
    let n = config.n_inputs as f64;
    let nc = config.n_conj as f64;
    let m = config.m_clones as f64;
    let mc = config.m_anticlones() as f64;
    let sqrt_g = (m + nc) / ((n * m).sqrt() + (nc * mc).sqrt());
    // the ratio is ≥ 1 mathematically; clip rounding below it
    (sqrt_g * sqrt_g).max(1.0)
}

/// Gain as a function of the conjugate fraction `a = N'/n` for `n` total
/// inputs and `m` clones, treating `N = (1−a)n`, `N' = an` as continuous.
///
/// `√G = (√a·√(M/n + 2a − 1) − √(M/n)·√(1−a))/(2a − 1)`, evaluated in the
/// equivalent form `(M/n + a)/(√((1−a)M/n) + √(a(M/n + 2a − 1)))` that is
/// regular at `a = 1/2`.
pub fn asymmetry_gain(n: f64, m: f64, a: f64) -> Result<f64> {
    if !(n > 0.0) || !n.is_finite() {
        return Err(Error::Domain(format!("total input count must be positive, got {n}")));
    }
    if !(m > 0.0) || !m.is_finite() {
        return Err(Error::Domain(format!("clone count must be positive, got {m}")));
    }
    if !(0.0..=1.0).contains(&a) {
        return Err(Error::Domain(format!("asymmetry must lie in [0, 1], got {a}")));
    }
    // slack for `a = N'/n` not being exact in binary
    if m < (1.0 - a) * n * (1.0 - 1e-12) {
        return Err(Error::Domain(format!(
            "M = {m} < N = (1 - a) n = {}: attenuation regime",
            (1.0 - a) * n
        )));
    }
    let r = m / n;
    let sqrt_g = (r + a) / (((1.0 - a) * r).sqrt() + (a * (r + 2.0 * a - 1.0)).sqrt());
    Ok((sqrt_g * sqrt_g).max(1.0))
}

/// Gaussian P-function of a clone with `n_th` thermal photons around `ψ`.
pub fn p_function_density(n_th: f64, xi: Complex64, psi: Complex64) -> Result<f64> {
    if !(n_th > 0.0) || !n_th.is_finite() {
        return Err(Error::Domain(format!(
            "P-function needs n_th > 0 (got {n_th}); n_th = 0 is a point mass"
        )));
    }
    Ok((-(xi - psi).norm_sqr() / n_th).exp() / (std::f64::consts::PI * n_th))
}

/// Added noise of the optimal measurement on `N` replicas of `|ψ⟩` and `N'`
/// of `|ψ*⟩`: `1/(√N + √N')²`, the same as measuring `(√N + √N')²`
/// identical replicas.
pub fn measurement_noise(n_inputs: u32, n_conj: u32) -> Result<f64> {
    if n_inputs == 0 && n_conj == 0 {
        return Err(Error::Domain("measurement needs at least one replica".into()));
    }
    let (n, nc) = (n_inputs as f64, n_conj as f64);
    // expanded so that perfect-square products stay exact
    Ok(1.0 / (n + nc + 2.0 * (n * nc).sqrt()))
}

/// Added variance of the standard `k → m` cloner, `1/k − 1/m` (zero when
/// `m ≤ k`, where replicas can simply be handed out).
pub fn standard_cloner_noise(k: u32, m: u32) -> f64 {
    if m <= k {
        0.0
    } else {
        1.0 / k as f64 - 1.0 / m as f64
    }
}

/// Clone fidelity of the standard `k → m` cloner, `km/(km + m − k)`.
pub fn standard_cloner_fidelity(k: u32, m: u32) -> f64 {
    if m <= k {
        1.0
    } else {
        let (k, m) = (k as f64, m as f64);
        k * m / (k * m + m - k)
    }
}

/// Every closed-form figure of merit for one configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoiseReport {
    pub n_inputs: u32,
    pub n_conj: u32,
    pub m_clones: u32,
    pub m_anticlones: u32,
    pub gain: f64,
    pub n_th_clone: f64,
    /// `None` when the machine has no anticlone outputs (`M' = 0`).
    pub n_th_anticlone: Option<f64>,
    pub var_clone: f64,
    pub var_anticlone: Option<f64>,
    pub f_clone: f64,
    pub f_anticlone: Option<f64>,
    /// Standard `(N + N') → M` cloner on identical replicas.
    pub baseline_var: f64,
    pub baseline_f: f64,
    /// Anticlones of the standard cloner come from a measurement: `K/(K + 1)`.
    pub baseline_f_anticlone: f64,
    pub measurement_limit_noise: f64,
}

pub fn noise_report(config: &CloningConfig) -> NoiseReport {
    let gain = gain_from_counts(config);
    let m = config.m_clones as f64;
    let mc = config.m_anticlones();
    let n_th_clone = (gain - 1.0) / m;
    let n_th_anticlone = (mc > 0).then(|| (gain - 1.0) / mc as f64);
    let k = config.total_inputs();
    NoiseReport {
        n_inputs: config.n_inputs,
        n_conj: config.n_conj,
        m_clones: config.m_clones,
        m_anticlones: mc,
        gain,
        n_th_clone,
        n_th_anticlone,
        var_clone: 0.5 + n_th_clone,
        var_anticlone: n_th_anticlone.map(|n| 0.5 + n),
        f_clone: 1.0 / (1.0 + n_th_clone),
        f_anticlone: n_th_anticlone.map(|n| 1.0 / (1.0 + n)),
        baseline_var: 0.5 + standard_cloner_noise(k, config.m_clones),
        baseline_f: standard_cloner_fidelity(k, config.m_clones),
        baseline_f_anticlone: k as f64 / (k as f64 + 1.0),
        measurement_limit_noise: measurement_noise(config.n_inputs, config.n_conj)
            .expect("config guarantees N + N' >= 1"),
    }
}

/// What enters an input slot of the machine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum InputRole {
    Signal,
    Conjugate,
    /// Stand-in for an absent concentrated mode (`N = 0` or `N' = 0`).
    CentralVacuum,
    CloneVacuum,
    AnticloneVacuum,
}

/// What leaves an output slot of the machine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum OutputRole {
    Clone(usize),
    Anticlone(usize),
    Residual,
}

/// Slot assignment of the global mode register.
///
/// Slot 0 carries `a₁ → b₁` and slot 1 carries `a₂ → b₂`. The remaining
/// slots hold, in order, the extra signal replicas, the extra conjugate
/// replicas, the clone-side vacua `v_k` and the anticlone-side vacua `w_k`.
/// With all of `N, N', M'` positive this totals `N + N' + M + M' − 2` modes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MachineLayout {
    pub total_modes: usize,
    pub signal_inputs: Vec<usize>,
    pub conjugate_inputs: Vec<usize>,
    pub central_vacua: Vec<usize>,
    pub clone_vacua: Vec<usize>,
    pub anticlone_vacua: Vec<usize>,
    pub clones: Vec<usize>,
    pub anticlones: Vec<usize>,
    pub residual: Vec<usize>,
}

impl MachineLayout {
    pub fn for_config(config: &CloningConfig) -> Self {
        let n = config.n_inputs as usize;
        let nc = config.n_conj as usize;
        let m = config.m_clones as usize;
        let mc = config.m_anticlones() as usize;

        let mut next = 2;
        let mut take = |count: usize| -> Vec<usize> {
            let v: Vec<usize> = (next..next + count).collect();
            next += count;
            v
        };
        let signal_extra = take(n.saturating_sub(1));
        let conj_extra = take(nc.saturating_sub(1));
        let clone_vacua = take(m - 1);
        let anticlone_vacua = take(mc.saturating_sub(1));
        let total_modes = next;

        let with_head =
            |head: usize, rest: &[usize]| -> Vec<usize> { std::iter::once(head).chain(rest.iter().copied()).collect() };
        let signal_inputs = if n > 0 { with_head(0, &signal_extra) } else { vec![] };
        let conjugate_inputs = if nc > 0 { with_head(1, &conj_extra) } else { vec![] };
        let mut central_vacua = vec![];
        if n == 0 {
            central_vacua.push(0);
        }
        if nc == 0 {
            central_vacua.push(1);
        }
        let clones = with_head(0, &clone_vacua);
        let anticlones = if mc > 0 { with_head(1, &anticlone_vacua) } else { vec![] };
        let mut residual: Vec<usize> = signal_extra.iter().chain(&conj_extra).copied().collect();
        if mc == 0 {
            residual.push(1);
        }
        residual.sort_unstable();

        Self {
            total_modes,
            signal_inputs,
            conjugate_inputs,
            central_vacua,
            clone_vacua,
            anticlone_vacua,
            clones,
            anticlones,
            residual,
        }
    }

    pub fn input_roles(&self) -> Vec<InputRole> {
        let mut roles = vec![InputRole::CentralVacuum; self.total_modes];
        for &i in &self.signal_inputs {
            roles[i] = InputRole::Signal;
        }
        for &i in &self.conjugate_inputs {
            roles[i] = InputRole::Conjugate;
        }
        for &i in &self.clone_vacua {
            roles[i] = InputRole::CloneVacuum;
        }
        for &i in &self.anticlone_vacua {
            roles[i] = InputRole::AnticloneVacuum;
        }
        roles
    }

    pub fn output_roles(&self) -> Vec<OutputRole> {
        let mut roles = vec![OutputRole::Residual; self.total_modes];
        for (l, &i) in self.clones.iter().enumerate() {
            roles[i] = OutputRole::Clone(l);
        }
        for (l, &i) in self.anticlones.iter().enumerate() {
            roles[i] = OutputRole::Anticlone(l);
        }
        roles
    }

    /// Coherent amplitudes fed to each input slot.
    pub fn input_amplitudes(&self, psi: Complex64) -> Vec<Complex64> {
        self.input_roles()
            .into_iter()
            .map(|role| match role {
                InputRole::Signal => psi,
                InputRole::Conjugate => psi.conj(),
                _ => Complex64::new(0.0, 0.0),
            })
            .collect()
    }

    pub fn input_state(&self, psi: Complex64) -> GaussianState {
        coherent_state(&self.input_amplitudes(psi)).expect("layout has at least two modes")
    }
}

/// A built PCI cloner: the global canonical transform plus its slot layout.
#[derive(Debug, Clone, PartialEq)]
pub struct CloningMachine {
    pub config: CloningConfig,
    pub gain: f64,
    pub transform: CanonicalTransform,
    pub layout: MachineLayout,
}

impl CloningMachine {
    /// Joint output state for input amplitude `ψ`.
    pub fn output_state(&self, psi: Complex64) -> Result<GaussianState> {
        self.layout.input_state(psi).apply_map(&self.transform.to_symplectic()?)
    }
}

/// Concentrate → amplify → distribute, as one `K`-mode canonical transform.
pub fn build_machine(config: &CloningConfig) -> Result<CloningMachine> {
    let layout = MachineLayout::for_config(config);
    let k = layout.total_modes;
    let gain = gain_from_counts(config);

    let mut t = identity_transform(k)?;
    let mut stage = |sub: CanonicalTransform, targets: &[usize]| -> Result<()> {
        t = t.then(&embed(&sub, targets, k)?)?;
        Ok(())
    };
    if !layout.signal_inputs.is_empty() {
        stage(dft_transform(layout.signal_inputs.len(), false)?, &layout.signal_inputs)?;
    }
    if !layout.conjugate_inputs.is_empty() {
        stage(
            dft_transform(layout.conjugate_inputs.len(), false)?,
            &layout.conjugate_inputs,
        )?;
    }
    stage(pcia_transform(gain)?, &[0, 1])?;
    stage(dft_transform(layout.clones.len(), true)?, &layout.clones)?;
    if !layout.anticlones.is_empty() {
        stage(dft_transform(layout.anticlones.len(), true)?, &layout.anticlones)?;
    }

    Ok(CloningMachine {
        config: *config,
        gain,
        transform: t,
        layout,
    })
}
