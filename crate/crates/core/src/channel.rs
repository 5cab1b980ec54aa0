//! Lossy bosonic channel, ideal cat-code recovery, and the effective logical channel.
//!
//! Logical density matrices are vectorized as (ρ00, ρ01, ρ10, ρ11)ᵀ with
//! |0_L⟩ = |C_α^s⟩ and |1_L⟩ = |C_α^{s+d}⟩. A [`LogicalChannel`] is the real
//! 4×4 matrix acting on that vector.
//!
//! Three routes produce a channel:
//! * [`exact_logical_channel`] composes the Fock-space Kraus operators of the
//!   loss channel with the recovery and reads off the 4×4 action;
//! * [`analytic_channel`] assembles the closed form from Poisson loss weights
//!   and back-action coefficients;
//! * [`PauliApprox::to_channel`] is the leading-order Pauli channel.

use std::f64::consts::PI;
use std::fmt;

use nalgebra::Matrix4;
use num_complex::Complex64;

use crate::error::{domain, Error, Result};
use crate::fock::{
    cat_state, cat_state_at, ln_factorials, normalization_factor, wrap_index, CatCodeParams,
    FockOperator, FockVector, DEGENERATE_NORM,
};

/// Stop summing loss events once the cumulative Poisson mass exceeds `1 − LOSS_MASS_CUTOFF`.
pub const LOSS_MASS_CUTOFF: f64 = 1e-14;

/// Tolerance on the Hermiticity-preservation symmetry of a channel matrix.
pub const HERMITICITY_TOLERANCE: f64 = 1e-8;

/// Entries that the closed-form channel allows to be non-zero.
const PATTERN: [(usize, usize); 8] = [
    (0, 0),
    (1, 1),
    (2, 2),
    (3, 3),
    (0, 3),
    (3, 0),
    (1, 2),
    (2, 1),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    /// Fock-space composition of loss and recovery.
    Exact,
    /// Closed form from loss weights and back-action coefficients.
    Analytic,
    /// Leading-order Pauli channel.
    Pauli,
    /// Built directly from a matrix (identity, test channels, …).
    Synthetic,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Provenance::Exact => "exact",
            Provenance::Analytic => "analytic",
            Provenance::Pauli => "pauli",
            Provenance::Synthetic => "synthetic",
        };
        f.write_str(s)
    }
}

/// Real 4×4 superoperator on vectorized logical density matrices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogicalChannel {
    matrix: Matrix4<f64>,
    provenance: Provenance,
}

impl LogicalChannel {
    pub fn new(matrix: Matrix4<f64>, provenance: Provenance) -> Self {
        Self { matrix, provenance }
    }

    pub fn identity() -> Self {
        Self::new(Matrix4::identity(), Provenance::Synthetic)
    }

    /// ρ ↦ (1−p)ρ + p_x XρX + p_y YρY + p_z ZρZ with p = p_x + p_y + p_z.
    pub fn pauli(p_x: f64, p_y: f64, p_z: f64) -> Self {
        let flip = p_x + p_y;
        let coherence = 1.0 - p_x - p_y - 2.0 * p_z;
        #[rustfmt::skip]
        let m = Matrix4::new(
            1.0 - flip, 0.0,        0.0,        flip,
            0.0,        coherence,  p_x - p_y,  0.0,
            0.0,        p_x - p_y,  coherence,  0.0,
            flip,       0.0,        0.0,        1.0 - flip,
        );
        Self::new(m, Provenance::Synthetic)
    }

    pub fn matrix(&self) -> &Matrix4<f64> {
        &self.matrix
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = provenance;
        self
    }

    /// Matrix entry with 1-based indices, matching the usual ℰ_ij notation.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.matrix[(i - 1, j - 1)]
    }

    pub fn rows(&self) -> [[f64; 4]; 4] {
        let mut out = [[0.0; 4]; 4];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, x) in row.iter_mut().enumerate() {
                *x = self.matrix[(i, j)];
            }
        }
        out
    }

    /// `self ∘ rhs`: apply `rhs` first.
    pub fn compose(&self, rhs: &LogicalChannel) -> LogicalChannel {
        LogicalChannel::new(self.matrix * rhs.matrix, self.provenance)
    }

    /// Applies the channel to a 2×2 logical density matrix.
    pub fn apply(&self, rho: &[[Complex64; 2]; 2]) -> [[Complex64; 2]; 2] {
        let v = [rho[0][0], rho[0][1], rho[1][0], rho[1][1]];
        let mut out = [Complex64::new(0.0, 0.0); 4];
        for (i, slot) in out.iter_mut().enumerate() {
            for (j, x) in v.iter().enumerate() {
                *slot += *x * self.matrix[(i, j)];
            }
        }
        [[out[0], out[1]], [out[2], out[3]]]
    }

    pub fn max_abs_diff(&self, other: &LogicalChannel) -> f64 {
        (self.matrix - other.matrix).amax()
    }

    /// Largest violation of the symmetry under swapping the ρ01 and ρ10 slots,
    /// which a real matrix must satisfy to map Hermitian inputs to Hermitian outputs.
    pub fn hermiticity_deviation(&self) -> f64 {
        let swap = |i: usize| match i {
            1 => 2,
            2 => 1,
            other => other,
        };
        let mut worst: f64 = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                worst = worst.max((self.matrix[(i, j)] - self.matrix[(swap(i), swap(j))]).abs());
            }
        }
        worst
    }

    pub fn is_hermiticity_preserving(&self) -> bool {
        self.hermiticity_deviation() <= HERMITICITY_TOLERANCE
    }

    /// max(|M11 + M41 − 1|, |M14 + M44 − 1|): trace loss on the code space.
    pub fn trace_deviation(&self) -> f64 {
        let m = &self.matrix;
        let first = (m[(0, 0)] + m[(3, 0)] - 1.0).abs();
        let last = (m[(0, 3)] + m[(3, 3)] - 1.0).abs();
        first.max(last)
    }

    /// Largest |entry| outside the closed-form sparsity pattern.
    pub fn off_pattern_leakage(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                if !PATTERN.contains(&(i, j)) {
                    worst = worst.max(self.matrix[(i, j)].abs());
                }
            }
        }
        worst
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(0.0..1.0).contains(&gamma) {
        return domain(format!(
            "loss probability gamma must lie in [0, 1) (got {gamma})"
        ));
    }
    Ok(())
}

/// Ŵ_k = γ^{k/2}(1−γ)^{a†a/2} a^k / √k!, with
/// ⟨m−k|Ŵ_k|m⟩ = √C(m,k)·γ^{k/2}·(1−γ)^{(m−k)/2}.
pub fn kraus_operator(k: usize, gamma: f64, nmax: usize) -> FockOperator {
    assert!((0.0..1.0).contains(&gamma), "gamma must lie in [0, 1)");
    let lnf = ln_factorials(nmax);
    let mut op = FockOperator::zeros(nmax);
    if k > nmax {
        return op;
    }
    let loss_amp = gamma.powf(0.5 * k as f64);
    for m in k..=nmax {
        let binom = (0.5 * (lnf[m] - lnf[k] - lnf[m - k])).exp();
        let keep = (1.0 - gamma).powf(0.5 * (m - k) as f64);
        op.entries_mut()[(m - k, m)] = Complex64::new(binom * loss_amp * keep, 0.0);
    }
    op
}

/// Poisson loss mass folded into the 2d residues of the loss count.
#[derive(Debug, Clone, PartialEq)]
pub struct LossWeights {
    weights: Vec<f64>,
    mean_loss: f64,
}

impl LossWeights {
    pub fn d(&self) -> usize {
        self.weights.len() / 2
    }

    /// Δ = γα²
    pub fn mean_loss(&self) -> f64 {
        self.mean_loss
    }

    /// T_j for j ∈ [0, 2d).
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// T_k: loss counts that recovery undoes correctly.
    pub fn correct(&self, k: usize) -> f64 {
        assert!(k < self.d());
        self.weights[k]
    }

    /// T_{k+d}: loss counts that recovery misidentifies.
    pub fn incorrect(&self, k: usize) -> f64 {
        assert!(k < self.d());
        self.weights[k + self.d()]
    }

    /// ε_f = Σ_k T_{k+d}
    pub fn bit_flip(&self) -> f64 {
        self.weights[self.d()..].iter().sum()
    }

    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// Poisson masses of the loss count grouped by residue mod 2d.
pub fn loss_weights_for(d: usize, mean_loss: f64) -> LossWeights {
    assert!(d >= 1 && mean_loss >= 0.0 && mean_loss.is_finite());
    let period = 2 * d;
    let mut weights = vec![0.0; period];
    let mut p = (-mean_loss).exp();
    let mut j = 0usize;
    loop {
        weights[j % period] += p;
        if p == 0.0 {
            break;
        }
        if j + 1 >= period && j as f64 >= mean_loss {
            let floor = weights.iter().cloned().fold(f64::INFINITY, f64::min);
            if p < 1e-18 * floor {
                break;
            }
        }
        j += 1;
        p *= mean_loss / j as f64;
    }
    LossWeights { weights, mean_loss }
}

pub fn loss_weights(params: &CatCodeParams, gamma: f64) -> Result<LossWeights> {
    check_gamma(gamma)?;
    Ok(loss_weights_for(params.d(), params.mean_loss(gamma)))
}

/// Back-action coefficients A, B, C, D built from G(n, m) = √(𝒩_m(α′)/𝒩_n(α)).
#[derive(Debug, Clone, PartialEq)]
pub struct BackActionCoeffs {
    d: usize,
    s: usize,
    alpha: f64,
    alpha_prime: f64,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub dd: Vec<f64>,
}

impl BackActionCoeffs {
    pub fn alpha_prime(&self) -> f64 {
        self.alpha_prime
    }

    /// G(n, m) with both indices taken mod 2d.
    pub fn g(&self, n: i64, m: i64) -> f64 {
        let num = normalization_factor(m, self.d, self.alpha_prime);
        let den = normalization_factor(n, self.d, self.alpha);
        (num / den).sqrt()
    }

    pub fn s(&self) -> usize {
        self.s
    }
}

pub fn back_action(params: &CatCodeParams, gamma: f64) -> Result<BackActionCoeffs> {
    check_gamma(gamma)?;
    let d = params.d();
    let s = params.s() as i64;
    let di = d as i64;
    let alpha = params.alpha();
    let alpha_prime = params.damped_alpha(gamma);

    let norm_at = |n: i64, amp: f64| -> Result<f64> {
        let norm = normalization_factor(n, d, amp);
        if norm <= DEGENERATE_NORM {
            return Err(Error::DegenerateCat {
                n: wrap_index(n, d),
                amplitude: amp,
                norm,
            });
        }
        Ok(norm)
    };
    let n0 = norm_at(s, alpha)?;
    let n1 = norm_at(s + di, alpha)?;

    let mut out = BackActionCoeffs {
        d,
        s: params.s(),
        alpha,
        alpha_prime,
        a: Vec::with_capacity(d),
        b: Vec::with_capacity(d),
        c: Vec::with_capacity(d),
        dd: Vec::with_capacity(d),
    };
    for k in 0..di {
        let same = norm_at(s - k, alpha_prime)?;
        let other = norm_at(di + s - k, alpha_prime)?;
        out.a.push((same / n0).sqrt());
        out.b.push((other / n0).sqrt());
        out.c.push((same / n1).sqrt());
        out.dd.push((other / n1).sqrt());
    }
    Ok(out)
}

/// Loss followed by ideal recovery, computed in the truncated Fock space.
///
/// The recovery Kraus operators are
/// K_k = |C_α^s⟩⟨C_{α′}^{s−k}| + |C_α^{d+s}⟩⟨C_{α′}^{d+s−k}| for k ∈ [0, d).
pub fn exact_logical_channel(
    params: &CatCodeParams,
    gamma: f64,
    nmax: usize,
) -> Result<LogicalChannel> {
    check_gamma(gamma)?;
    let d = params.d();
    let s = params.s() as i64;
    let di = d as i64;
    let logical = [
        cat_state(s, params, nmax)?,
        cat_state(s + di, params, nmax)?,
    ];
    let alpha_prime = params.damped_alpha(gamma);
    let damped: Vec<FockVector> = (0..2 * di)
        .map(|n| cat_state_at(n, d, alpha_prime, nmax))
        .collect::<Result<_>>()?;

    let mean_loss = params.mean_loss(gamma);
    let mut matrix = Matrix4::<f64>::zeros();
    let mut p = (-mean_loss).exp();
    let mut cumulative = 0.0;
    for loss in 0..=nmax {
        let w = kraus_operator(loss, gamma, nmax);
        let lost = [w.apply(&logical[0]), w.apply(&logical[1])];
        for k in 0..di {
            let targets = [
                &damped[wrap_index(s - k, d)],
                &damped[wrap_index(di + s - k, d)],
            ];
            // r[i'][i] = ⟨i'_L| K_k Ŵ_loss |i_L⟩
            let mut r = [[Complex64::new(0.0, 0.0); 2]; 2];
            for (row, target) in r.iter_mut().zip(targets) {
                for (slot, state) in row.iter_mut().zip(&lost) {
                    *slot = target.inner(state);
                }
            }
            for ip in 0..2 {
                for jp in 0..2 {
                    for i in 0..2 {
                        for j in 0..2 {
                            let z = r[ip][i] * r[jp][j].conj();
                            matrix[(2 * ip + jp, 2 * i + j)] += z.re;
                        }
                    }
                }
            }
        }
        cumulative += p;
        if cumulative > 1.0 - LOSS_MASS_CUTOFF || p == 0.0 && loss as f64 > mean_loss {
            break;
        }
        p *= mean_loss / (loss + 1) as f64;
    }
    Ok(LogicalChannel::new(matrix, Provenance::Exact))
}

/// Closed-form logical channel from Poisson loss weights and back-action coefficients.
pub fn analytic_channel(params: &CatCodeParams, gamma: f64) -> Result<LogicalChannel> {
    let t = loss_weights(params, gamma)?;
    let g = back_action(params, gamma)?;
    let mut m = Matrix4::<f64>::zeros();
    for k in 0..params.d() {
        let (a, b, c, dd) = (g.a[k], g.b[k], g.c[k], g.dd[k]);
        let right = t.correct(k);
        let wrong = t.incorrect(k);
        m[(0, 0)] += right * a * a;
        m[(1, 1)] += right * a * dd;
        m[(2, 2)] += right * a * dd;
        m[(3, 3)] += right * dd * dd;
        m[(0, 3)] += wrong * c * c;
        m[(1, 2)] += wrong * b * c;
        m[(2, 1)] += wrong * b * c;
        m[(3, 0)] += wrong * b * b;
    }
    Ok(LogicalChannel::new(m, Provenance::Analytic))
}

/// The s-independent pieces of the dephasing error:
/// ε_d = `base` − `amplitude`·cos θ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DephasingTerms {
    pub base: f64,
    pub amplitude: f64,
    pub mu: f64,
    pub psi: f64,
    /// atan2(e^μ sin ψ, 1 − e^μ cos ψ)
    pub phase_shift: f64,
}

pub fn dephasing_terms(d: usize, alpha_sq: f64, gamma: f64) -> DephasingTerms {
    let df = d as f64;
    let half = (PI / (2.0 * df)).sin().powi(2);
    let mean_loss = gamma * alpha_sq;
    let mu = 2.0 * mean_loss * (2.0 * half - (PI / df).sin().powi(2));
    let psi = mean_loss * (2.0 * (PI / df).sin() - (2.0 * PI / df).sin());
    let envelope = 0.5 * (-4.0 * alpha_sq * half).exp();
    let base = envelope * (4.0 * mean_loss * half).exp_m1();
    // 1 − 2e^μ cos ψ + e^{2μ} = (e^μ − 1)² + 4e^μ sin²(ψ/2)
    let em = mu.exp();
    let sin_half = (0.5 * psi).sin();
    let radius = (mu.exp_m1().powi(2) + 4.0 * em * sin_half * sin_half).sqrt();
    let denom = -mu.exp_m1() + 2.0 * em * sin_half * sin_half;
    let phase_shift = (em * psi.sin()).atan2(denom);
    DephasingTerms {
        base,
        amplitude: envelope * radius,
        mu,
        psi,
        phase_shift,
    }
}

/// Leading-order Pauli description of the logical channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PauliApprox {
    pub eps_f: f64,
    pub eps_d: f64,
    pub mu: f64,
    pub psi: f64,
    pub theta: f64,
    /// δ = |⟨α|αe^{iπ/d}⟩|, overlap of neighbouring coherent components.
    pub overlap: f64,
}

/// Largest ε_f for which the Pauli form is trusted.
pub const MAX_VALID_BIT_FLIP: f64 = 1e-2;
/// Largest neighbour overlap δ for which the Pauli form is trusted.
pub const MAX_VALID_OVERLAP: f64 = 0.1;

impl PauliApprox {
    pub fn total(&self) -> f64 {
        self.eps_f + self.eps_d
    }

    pub fn in_validity_regime(&self) -> bool {
        self.eps_f <= MAX_VALID_BIT_FLIP && self.overlap <= MAX_VALID_OVERLAP
    }

    pub fn to_channel(&self) -> LogicalChannel {
        LogicalChannel::pauli(self.eps_f, 0.0, self.eps_d).with_provenance(Provenance::Pauli)
    }
}

pub fn pauli_approx(params: &CatCodeParams, gamma: f64) -> Result<PauliApprox> {
    let t = loss_weights(params, gamma)?;
    let d = params.d() as f64;
    let alpha_sq = params.alpha_sq();
    let terms = dephasing_terms(params.d(), alpha_sq, gamma);
    let theta =
        2.0 * params.s() as f64 * PI / d - 2.0 * alpha_sq * (PI / d).sin() - terms.phase_shift;
    let eps_d = terms.base - terms.amplitude * theta.cos();
    Ok(PauliApprox {
        eps_f: t.bit_flip(),
        eps_d,
        mu: terms.mu,
        psi: terms.psi,
        theta,
        overlap: (alpha_sq * ((PI / d).cos() - 1.0)).exp(),
    })
}
