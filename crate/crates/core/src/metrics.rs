//! Decoherence metrics for logical channels.
//!
//! The diamond distance ½‖ℰ − ℐ‖⋄ of a qubit channel is attained on a pure
//! system⊗ancilla state with a two-dimensional ancilla. Up to an ancilla
//! unitary, which leaves the trace norm unchanged, every such state has the
//! Schmidt form
//!
//! ```text
//! |ψ⟩ = cos t |u₀⟩|0⟩ + sin t |u₁⟩|1⟩,   (|u₀⟩, |u₁⟩) a rotated qubit basis,
//! ```
//!
//! so the search runs over three angles (t, ϑ, φ): a fixed 20³ grid followed
//! by Nelder–Mead refinement from the five best grid points.

use std::f64::consts::PI;

use nalgebra::Matrix4;
use num_complex::Complex64;

use crate::channel::{dephasing_terms, loss_weights_for, LogicalChannel, HERMITICITY_TOLERANCE};
use crate::error::{domain, Error, Result};
use crate::search::{bisect, golden_section, nelder_mead, rightmost_local_min};

/// Grid points per angle in the coarse stage.
pub const GRID_POINTS: usize = 20;
/// Number of grid optima refined by Nelder–Mead.
pub const REFINE_STARTS: usize = 5;
/// Refinement stops once the simplex spread is below this (relative to the value).
pub const REFINE_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiamondMethod {
    /// Numerical maximization over input states.
    Oracle,
    /// p_x + p_y + p_z for a Pauli channel.
    PauliClosedForm,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiamondResult {
    /// ½‖ℰ₁ − ℰ₂‖⋄
    pub value: f64,
    /// Maximizing input on system⊗ancilla, ordered |00⟩, |01⟩, |10⟩, |11⟩.
    pub argmax_state: [Complex64; 4],
    pub method: DiamondMethod,
}

/// The pure system⊗ancilla state for Schmidt angle `t` and basis direction (ϑ, φ).
pub fn schmidt_state(angles: &[f64; 3]) -> [Complex64; 4] {
    let [t, polar, azimuth] = *angles;
    let (c, s) = ((0.5 * polar).cos(), (0.5 * polar).sin());
    let u0 = [Complex64::new(c, 0.0), Complex64::from_polar(s, azimuth)];
    let u1 = [-Complex64::from_polar(s, -azimuth), Complex64::new(c, 0.0)];
    let (w0, w1) = (t.cos(), t.sin());
    // index 2·system + ancilla
    [u0[0] * w0, u1[0] * w1, u0[1] * w0, u1[1] * w1]
}

/// ½‖((ℰ₁ − ℰ₂) ⊗ id)(|ψ⟩⟨ψ|)‖₁ for the superoperator difference `diff`.
pub fn output_trace_distance(diff: &Matrix4<f64>, state: &[Complex64; 4]) -> f64 {
    let mut out = Matrix4::<Complex64>::zeros();
    for sys_out_row in 0..2 {
        for sys_out_col in 0..2 {
            let row = 2 * sys_out_row + sys_out_col;
            for sys_in_row in 0..2 {
                for sys_in_col in 0..2 {
                    let weight = diff[(row, 2 * sys_in_row + sys_in_col)];
                    if weight == 0.0 {
                        continue;
                    }
                    for anc_row in 0..2 {
                        for anc_col in 0..2 {
                            let amp = state[2 * sys_in_row + anc_row]
                                * state[2 * sys_in_col + anc_col].conj();
                            out[(2 * sys_out_row + anc_row, 2 * sys_out_col + anc_col)] +=
                                amp * weight;
                        }
                    }
                }
            }
        }
    }
    let hermitian = (out + out.adjoint()) * Complex64::new(0.5, 0.0);
    0.5 * hermitian
        .symmetric_eigenvalues()
        .iter()
        .map(|x| x.abs())
        .sum::<f64>()
}

/// ½‖ℰ₁ − ℰ₂‖⋄ by deterministic grid search plus local refinement.
pub fn diamond_distance(a: &LogicalChannel, b: &LogicalChannel) -> Result<DiamondResult> {
    for ch in [a, b] {
        let deviation = ch.hermiticity_deviation();
        if deviation > HERMITICITY_TOLERANCE {
            return Err(Error::NonHermitianChannel { deviation });
        }
    }
    let diff = a.matrix() - b.matrix();
    let objective = |angles: &[f64; 3]| output_trace_distance(&diff, &schmidt_state(angles));

    let n = GRID_POINTS;
    let mut grid: Vec<([f64; 3], f64)> = Vec::with_capacity(n * n * n);
    for i in 0..n {
        let t = 0.5 * PI * i as f64 / (n - 1) as f64;
        for j in 0..n {
            let polar = PI * j as f64 / (n - 1) as f64;
            for k in 0..n {
                let azimuth = 2.0 * PI * k as f64 / n as f64;
                let angles = [t, polar, azimuth];
                grid.push((angles, objective(&angles)));
            }
        }
    }
    // stable sort keeps grid order among ties
    grid.sort_by(|x, y| y.1.total_cmp(&x.1));

    let mut best = grid[0];
    for &(start, _) in grid.iter().take(REFINE_STARTS) {
        let (angles, neg) = nelder_mead(
            |p: &[f64; 3]| -objective(p),
            start,
            0.05,
            REFINE_TOLERANCE,
            1e-300,
            2000,
        );
        if -neg > best.1 {
            best = (angles, -neg);
        }
    }
    Ok(DiamondResult {
        value: best.1.clamp(0.0, 1.0),
        argmax_state: schmidt_state(&best.0),
        method: DiamondMethod::Oracle,
    })
}

/// Γ = ½‖ℰ − ℐ‖⋄
pub fn diamond_distance_to_identity(channel: &LogicalChannel) -> Result<DiamondResult> {
    diamond_distance(channel, &LogicalChannel::identity())
}

/// Closed form for Pauli channels, attained on a maximally entangled input.
pub fn pauli_diamond(p_x: f64, p_y: f64, p_z: f64) -> DiamondResult {
    let r = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    DiamondResult {
        value: p_x + p_y + p_z,
        argmax_state: [r, zero, zero, r],
        method: DiamondMethod::PauliClosedForm,
    }
}

/// Analytic envelopes of the diamond distance over the logical subspace s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeBounds {
    /// ε_f + ε_d at cos θ = 1
    pub gamma_minus: f64,
    /// ε_f + ε_d at cos θ = −1
    pub gamma_plus: f64,
    /// ε_f plus the s-independent part of ε_d
    pub gamma_bar: f64,
}

/// Envelope values at amplitude squared `alpha_sq`; no domain checks.
pub fn envelopes_at(d: usize, alpha_sq: f64, gamma: f64) -> EnvelopeBounds {
    let eps_f = loss_weights_for(d, gamma * alpha_sq).bit_flip();
    let terms = dephasing_terms(d, alpha_sq, gamma);
    EnvelopeBounds {
        gamma_minus: eps_f + terms.base - terms.amplitude,
        gamma_plus: eps_f + terms.base + terms.amplitude,
        gamma_bar: eps_f + terms.base,
    }
}

pub fn envelope_bounds(d: usize, alpha: f64, gamma: f64) -> Result<EnvelopeBounds> {
    if d < 2 {
        return domain(format!("envelopes need d >= 2 (got {d})"));
    }
    if !(alpha.is_finite() && alpha > 0.0) {
        return domain(format!("alpha must be positive (got {alpha})"));
    }
    if !(0.0..1.0).contains(&gamma) {
        return domain(format!("gamma must lie in [0, 1) (got {gamma})"));
    }
    Ok(envelopes_at(d, alpha * alpha, gamma))
}

/// Step of the α² scan used to locate envelope minima.
pub const ALPHA_SQ_STEP: f64 = 0.01;

/// Minimizes an envelope-type curve over α² and returns `(α², value)`.
///
/// For small α every envelope collapses towards zero because the expansion
/// behind it stops being meaningful, so the physical optimum is the
/// rightmost interior local minimum of a scan over `[0.25, 4d² + 40]`.
pub fn minimize_over_alpha_sq<F>(d: usize, curve: F) -> Result<(f64, f64)>
where
    F: Fn(f64) -> f64,
{
    let lo = 0.25;
    let hi = 4.0 * (d * d) as f64 + 40.0;
    let steps = ((hi - lo) / ALPHA_SQ_STEP).round() as usize;
    let xs: Vec<f64> = (0..=steps).map(|i| lo + i as f64 * ALPHA_SQ_STEP).collect();
    let values: Vec<f64> = xs.iter().map(|&x| curve(x)).collect();
    let i = rightmost_local_min(&values).ok_or_else(|| {
        Error::Convergence(format!(
            "no interior minimum for d={d} in alpha^2 in [{lo}, {hi}]"
        ))
    })?;
    Ok(golden_section(&curve, xs[i - 1], xs[i + 1], 1e-10))
}

/// Numerical minimizer of Γ₋ over α², returned as `(α², Γ₋)`.
pub fn minimize_gamma_minus(d: usize, gamma: f64) -> Result<(f64, f64)> {
    if d < 2 || !(gamma > 0.0 && gamma < 1.0) {
        return domain(format!(
            "need d >= 2 and gamma in (0, 1) (got d={d}, gamma={gamma})"
        ));
    }
    minimize_over_alpha_sq(d, |x| envelopes_at(d, x, gamma).gamma_minus)
}

/// Numerical minimizer of Γ̄ over α², returned as `(α², Γ̄)`.
pub fn minimize_gamma_bar(d: usize, gamma: f64) -> Result<(f64, f64)> {
    if d < 2 || !(gamma > 0.0 && gamma < 1.0) {
        return domain(format!(
            "need d >= 2 and gamma in (0, 1) (got d={d}, gamma={gamma})"
        ));
    }
    minimize_over_alpha_sq(d, |x| envelopes_at(d, x, gamma).gamma_bar)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Suppression {
    /// Amplitude where the s-averaged dephasing equals ε_f.
    pub alpha_subo: f64,
    /// Amplitude minimizing Γ₋.
    pub alpha_o: f64,
    /// Γ̄(α_subo) / Γ₋(α_o)
    pub ratio: f64,
}

/// Compares the subspace-agnostic choice α_subo with the optimum of Γ₋.
pub fn suppression_ratio(d: usize, gamma: f64) -> Result<Suppression> {
    if d < 3 {
        return domain(format!("suppression ratio needs d >= 3 (got {d})"));
    }
    let (alpha_o_sq, gamma_minus) = minimize_gamma_minus(d, gamma)?;
    let half = (PI / (2.0 * d as f64)).sin().powi(2);
    // ln(½e^{−4α²S}(e^{4ΔS} − 1)) − ln ε_f
    let log_gap = |x: f64| {
        let dephasing = 0.5f64.ln() - 4.0 * x * half + (4.0 * gamma * x * half).exp_m1().ln();
        dephasing - loss_weights_for(d, gamma * x).bit_flip().ln()
    };
    let lo = alpha_o_sq;
    let mut hi = 2.0 * alpha_o_sq;
    while log_gap(hi) > 0.0 {
        hi *= 2.0;
        if hi > 1e5 {
            return Err(Error::NoCrossing { lo, hi });
        }
    }
    let alpha_subo_sq = bisect(log_gap, lo, hi, 1e-14).ok_or(Error::NoCrossing { lo, hi })?;
    let gamma_bar = envelopes_at(d, alpha_subo_sq, gamma).gamma_bar;
    let out = Suppression {
        alpha_subo: alpha_subo_sq.sqrt(),
        alpha_o: alpha_o_sq.sqrt(),
        ratio: gamma_bar / gamma_minus,
    };
    assert!(
        out.alpha_subo > out.alpha_o,
        "crossing {} found below the optimum {}",
        out.alpha_subo,
        out.alpha_o
    );
    Ok(out)
}
