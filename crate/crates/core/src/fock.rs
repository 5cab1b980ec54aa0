//! Truncated Fock-space states and operators.
//!
//! States live on the number basis |0⟩…|nmax⟩. Coherent and cat states are
//! expanded directly in that basis with log-factorial weights, so amplitudes
//! stay finite well past m = 170.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{domain, Error, Result};

/// Weight allowed in the top [`TAIL_WINDOW`] levels before a state is rejected.
pub const TAIL_TOLERANCE: f64 = 1e-12;
/// Number of top levels inspected by the tail-mass check.
pub const TAIL_WINDOW: usize = 5;
/// Cat states with normalization factor at or below this value are undefined.
pub const DEGENERATE_NORM: f64 = 1e-14;

/// Default cutoff for a code of amplitude `alpha`: `max(⌈α² + 8α + 20⌉, 32)`.
pub fn default_nmax(alpha: f64) -> usize {
    let rule = (alpha * alpha + 8.0 * alpha + 20.0).ceil() as usize;
    rule.max(32)
}

/// `ln m!` for m = 0..=nmax.
pub fn ln_factorials(nmax: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(nmax + 1);
    let mut acc = 0.0;
    out.push(acc);
    for m in 1..=nmax {
        acc += (m as f64).ln();
        out.push(acc);
    }
    out
}

/// Complex amplitudes over |0⟩…|nmax⟩.
#[derive(Debug, Clone, PartialEq)]
pub struct FockVector {
    amplitudes: DVector<Complex64>,
}

impl FockVector {
    pub fn new(amplitudes: Vec<Complex64>) -> Self {
        assert!(!amplitudes.is_empty(), "a Fock vector needs at least |0⟩");
        Self {
            amplitudes: DVector::from_vec(amplitudes),
        }
    }

    /// The number state |m⟩.
    pub fn number_state(m: usize, nmax: usize) -> Self {
        let mut amps = vec![Complex64::new(0.0, 0.0); nmax + 1];
        amps[m] = Complex64::new(1.0, 0.0);
        Self::new(amps)
    }

    pub fn nmax(&self) -> usize {
        self.amplitudes.len() - 1
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        self.amplitudes.as_slice()
    }

    pub fn as_dvector(&self) -> &DVector<Complex64> {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Σ|c_m|² over the last [`TAIL_WINDOW`] levels (m > nmax − 5).
    pub fn tail_mass(&self) -> f64 {
        let start = (self.nmax() + 1).saturating_sub(TAIL_WINDOW);
        self.amplitudes
            .iter()
            .skip(start)
            .map(|a| a.norm_sqr())
            .sum()
    }

    pub fn is_well_truncated(&self) -> bool {
        self.tail_mass() <= TAIL_TOLERANCE
    }

    fn check_truncation(self) -> Result<Self> {
        let tail = self.tail_mass();
        if tail > TAIL_TOLERANCE {
            return Err(Error::Truncation {
                nmax: self.nmax(),
                tail,
            });
        }
        Ok(self)
    }

    /// ⟨self|other⟩
    pub fn inner(&self, other: &FockVector) -> Complex64 {
        assert_eq!(self.nmax(), other.nmax(), "mismatched truncations");
        self.amplitudes.dotc(&other.amplitudes)
    }

    /// ⟨self|op|self⟩
    pub fn expectation(&self, op: &FockOperator) -> Complex64 {
        self.inner(&op.apply(self))
    }

    pub fn scale(&self, factor: Complex64) -> FockVector {
        FockVector {
            amplitudes: &self.amplitudes * factor,
        }
    }
}

/// Complex matrix over the truncated number basis.
#[derive(Debug, Clone, PartialEq)]
pub struct FockOperator {
    entries: DMatrix<Complex64>,
}

impl FockOperator {
    pub fn from_matrix(entries: DMatrix<Complex64>) -> Self {
        assert!(entries.is_square() && entries.nrows() > 0);
        Self { entries }
    }

    pub fn zeros(nmax: usize) -> Self {
        Self::from_matrix(DMatrix::zeros(nmax + 1, nmax + 1))
    }

    pub fn identity(nmax: usize) -> Self {
        Self::from_matrix(DMatrix::identity(nmax + 1, nmax + 1))
    }

    pub fn nmax(&self) -> usize {
        self.entries.nrows() - 1
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub(crate) fn entries_mut(&mut self) -> &mut DMatrix<Complex64> {
        &mut self.entries
    }

    pub fn apply(&self, v: &FockVector) -> FockVector {
        assert_eq!(self.nmax(), v.nmax(), "mismatched truncations");
        FockVector {
            amplitudes: &self.entries * &v.amplitudes,
        }
    }

    pub fn adjoint(&self) -> FockOperator {
        FockOperator {
            entries: self.entries.adjoint(),
        }
    }

    pub fn compose(&self, rhs: &FockOperator) -> FockOperator {
        FockOperator {
            entries: &self.entries * &rhs.entries,
        }
    }

    pub fn add(&self, rhs: &FockOperator) -> FockOperator {
        FockOperator {
            entries: &self.entries + &rhs.entries,
        }
    }

    /// Largest entrywise modulus of `self − rhs`.
    pub fn max_abs_diff(&self, rhs: &FockOperator) -> f64 {
        (&self.entries - &rhs.entries)
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }
}

/// The code triple (d, α, s).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CatCodeParams {
    d: usize,
    alpha: f64,
    s: usize,
}

impl CatCodeParams {
    pub fn new(d: usize, alpha: f64, s: usize) -> Result<Self> {
        if d < 1 {
            return domain(format!("d must be >= 1 (got {d})"));
        }
        if !(alpha.is_finite() && alpha > 0.0) {
            return domain(format!("alpha must be positive and finite (got {alpha})"));
        }
        if s >= d {
            return domain(format!("s must lie in [0, d-1] = [0, {}] (got {s})", d - 1));
        }
        Ok(Self { d, alpha, s })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn alpha_sq(&self) -> f64 {
        self.alpha * self.alpha
    }

    pub fn s(&self) -> usize {
        self.s
    }

    /// Number of coherent components, 2d.
    pub fn components(&self) -> usize {
        2 * self.d
    }

    /// ω = exp(iπ/d)
    pub fn omega(&self) -> Complex64 {
        Complex64::from_polar(1.0, PI / self.d as f64)
    }

    /// Damped amplitude α′ = √(1−γ)·α.
    pub fn damped_alpha(&self, gamma: f64) -> f64 {
        (1.0 - gamma).sqrt() * self.alpha
    }

    /// Mean number of lost excitations Δ = γα².
    pub fn mean_loss(&self, gamma: f64) -> f64 {
        gamma * self.alpha_sq()
    }

    /// Cat index reduced to [0, 2d).
    pub fn wrap(&self, n: i64) -> usize {
        wrap_index(n, self.d)
    }

    pub fn default_nmax(&self) -> usize {
        default_nmax(self.alpha)
    }
}

/// Reduces a cat index mod 2d with a non-negative representative.
pub fn wrap_index(n: i64, d: usize) -> usize {
    n.rem_euclid(2 * d as i64) as usize
}

/// e^{−|β|²/2} Σ β^m/√(m!) |m⟩ truncated at `nmax`.
pub fn coherent_state(beta: Complex64, nmax: usize) -> Result<FockVector> {
    let lnf = ln_factorials(nmax);
    let r = beta.norm();
    let phase = beta.arg();
    let amps = (0..=nmax)
        .map(|m| {
            if r == 0.0 {
                return if m == 0 {
                    Complex64::new(1.0, 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                };
            }
            let log_mag = m as f64 * r.ln() - 0.5 * lnf[m] - 0.5 * r * r;
            Complex64::from_polar(log_mag.exp(), m as f64 * phase)
        })
        .collect();
    FockVector::new(amps).check_truncation()
}

/// 𝒩_n(a) = Σ_{k=0}^{2d−1} ω^{−kn} e^{(ω^k−1)a²}.
///
/// The sum is real by k ↔ 2d−k pairing; the imaginary residue is discarded.
pub fn normalization_factor(n: i64, d: usize, amplitude: f64) -> f64 {
    assert!(d >= 1 && amplitude >= 0.0);
    let n = wrap_index(n, d) as f64;
    let a2 = amplitude * amplitude;
    let step = PI / d as f64;
    let mut sum = Complex64::new(0.0, 0.0);
    for k in 0..2 * d {
        let angle = step * k as f64;
        let w = Complex64::from_polar(1.0, angle);
        // ω^{−kn}·e^{(ω^k−1)a²} = e^{a²(cos−1)} · e^{i(a² sin − kn π/d)}
        let mag = ((w.re - 1.0) * a2).exp();
        sum += Complex64::from_polar(mag, w.im * a2 - angle * n);
    }
    debug_assert!(
        sum.im.abs() <= 1e-12 * (2 * d) as f64,
        "imaginary residue {} in N_n",
        sum.im
    );
    sum.re
}

fn require_nondegenerate(n: usize, d: usize, amplitude: f64) -> Result<f64> {
    let norm = normalization_factor(n as i64, d, amplitude);
    if norm <= DEGENERATE_NORM {
        return Err(Error::DegenerateCat { n, amplitude, norm });
    }
    Ok(norm)
}

/// |C_a^n⟩ for an arbitrary amplitude `amplitude`, built on the number basis.
pub fn cat_state_at(n: i64, d: usize, amplitude: f64, nmax: usize) -> Result<FockVector> {
    let n = wrap_index(n, d);
    if amplitude == 0.0 && n != 0 {
        return Err(Error::DegenerateCat {
            n,
            amplitude,
            norm: 0.0,
        });
    }
    let norm = require_nondegenerate(n, d, amplitude)?;
    let lnf = ln_factorials(nmax);
    let prefactor = (2.0 * d as f64 / norm).sqrt();
    let period = 2 * d;
    let mut amps = vec![Complex64::new(0.0, 0.0); nmax + 1];
    for m in (n..=nmax).step_by(period) {
        let value = if amplitude == 0.0 {
            if m == 0 {
                1.0
            } else {
                0.0
            }
        } else {
            prefactor
                * (m as f64 * amplitude.ln() - 0.5 * lnf[m] - 0.5 * amplitude * amplitude).exp()
        };
        amps[m] = Complex64::new(value, 0.0);
    }
    FockVector::new(amps).check_truncation()
}

/// |C_α^n⟩ for the code amplitude.
pub fn cat_state(n: i64, params: &CatCodeParams, nmax: usize) -> Result<FockVector> {
    cat_state_at(n, params.d(), params.alpha(), nmax)
}

/// Annihilation operator with ⟨m−1|a|m⟩ = √m.
pub fn annihilation(nmax: usize) -> FockOperator {
    assert!(nmax >= 1);
    let mut op = FockOperator::zeros(nmax);
    for m in 1..=nmax {
        op.entries_mut()[(m - 1, m)] = Complex64::new((m as f64).sqrt(), 0.0);
    }
    op
}

pub fn creation(nmax: usize) -> FockOperator {
    annihilation(nmax).adjoint()
}

/// a†a, diagonal with entries m.
pub fn number_operator(nmax: usize) -> FockOperator {
    assert!(nmax >= 1);
    let mut op = FockOperator::zeros(nmax);
    for m in 0..=nmax {
        op.entries_mut()[(m, m)] = Complex64::new(m as f64, 0.0);
    }
    op
}

/// ⟨C_α^n|a†a|C_α^n⟩ = α²·𝒩_{n−1}(α)/𝒩_n(α).
pub fn mean_excitation(n: i64, params: &CatCodeParams) -> Result<f64> {
    let d = params.d();
    let idx = wrap_index(n, d);
    let norm = require_nondegenerate(idx, d, params.alpha())?;
    Ok(params.alpha_sq() * normalization_factor(n - 1, d, params.alpha()) / norm)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    /// 2d·e^{−a²}·Σ_{m≡n mod 2d} a^{2m}/m!, summed in the number basis.
    fn norm_by_series(n: usize, d: usize, a: f64) -> f64 {
        let lnf = ln_factorials(600);
        (n..=600)
            .step_by(2 * d)
            .map(|m| (2.0 * m as f64 * a.ln() - lnf[m] - a * a).exp())
            .sum::<f64>()
            * 2.0
            * d as f64
    }

    #[test]
    fn vacuum_is_coherent_state_at_zero() {
        let v = coherent_state(c(0.0), 10).unwrap();
        assert_eq!(v.amplitudes()[0], c(1.0));
        assert!(v.amplitudes()[1..].iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn coherent_state_mean_number() {
        let v = coherent_state(c(3.0), 60).unwrap();
        let n = v.expectation(&number_operator(60));
        assert!((n.re - 9.0).abs() < 1e-9, "{n}");
        assert!((v.norm_sqr() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn coherent_overlap_matches_closed_form() {
        let rot = Complex64::from_polar(1.0, PI / 3.0);
        let a = coherent_state(c(3.0), 60).unwrap();
        let b = coherent_state(rot * 3.0, 60).unwrap();
        let expected = (rot * 9.0 - 9.0).exp();
        assert!((a.inner(&b) - expected).norm() < 1e-9);
    }

    #[test]
    fn coherent_state_rejects_short_truncation() {
        assert!(matches!(
            coherent_state(c(5.0), 20),
            Err(Error::Truncation { nmax: 20, .. })
        ));
    }

    #[test]
    fn normalization_at_vacuum() {
        assert!((normalization_factor(0, 3, 0.0) - 6.0).abs() < 1e-14);
        for n in 1..6 {
            assert!(normalization_factor(n, 3, 0.0).abs() < 1e-14);
        }
    }

    #[test]
    fn normalization_sum_rule() {
        for d in 1..=6 {
            for &a in &[0.3, 1.0, 2.2, 3.0, 5.5] {
                let total: f64 = (0..2 * d as i64)
                    .map(|n| normalization_factor(n, d, a))
                    .sum();
                assert!((total - 2.0 * d as f64).abs() < 1e-10, "d={d} a={a}");
            }
        }
    }

    #[test]
    fn normalization_matches_number_basis_series() {
        let got = normalization_factor(0, 3, 3.0);
        let want = norm_by_series(0, 3, 3.0);
        assert!((got - want).abs() < 1e-10, "{got} vs {want}");
        for n in 0..8 {
            let got = normalization_factor(n as i64, 4, 2.5);
            assert!((got - norm_by_series(n, 4, 2.5)).abs() < 1e-10);
        }
    }

    #[test]
    fn normalization_is_periodic_in_index() {
        let a = normalization_factor(-1, 3, 2.0);
        let b = normalization_factor(5, 3, 2.0);
        assert_eq!(a, b);
    }

    #[test]
    fn cat_states_are_orthonormal() {
        let p = CatCodeParams::new(3, 3.0, 0).unwrap();
        let nmax = p.default_nmax();
        let cats: Vec<_> = (0..6).map(|n| cat_state(n, &p, nmax).unwrap()).collect();
        for (i, a) in cats.iter().enumerate() {
            for (j, b) in cats.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((a.inner(b) - c(want)).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn even_cat_has_even_support() {
        let p = CatCodeParams::new(1, 2.0, 0).unwrap();
        let v = cat_state(0, &p, 40).unwrap();
        for (m, a) in v.amplitudes().iter().enumerate() {
            if m % 2 == 1 {
                assert_eq!(a.norm(), 0.0);
            }
        }
    }

    #[test]
    fn cat_support_is_residue_class() {
        let p = CatCodeParams::new(3, 3.0, 0).unwrap();
        let v = cat_state(0, &p, 53).unwrap();
        for (m, a) in v.amplitudes().iter().enumerate() {
            assert_eq!(a.norm() > 0.0, m % 6 == 0, "m={m}");
        }
    }

    #[test]
    fn cat_state_matches_coherent_superposition() {
        // Σ_k ω^{−kn}|ω^k α⟩ / √(2d 𝒩_n)
        let p = CatCodeParams::new(2, 2.5, 0).unwrap();
        let nmax = 60;
        for n in 0..4i64 {
            let mut acc = vec![Complex64::new(0.0, 0.0); nmax + 1];
            for k in 0..4 {
                let w = p.omega().powu(k as u32);
                let coh = coherent_state(w * p.alpha(), nmax).unwrap();
                let weight = w.powi(-(n as i32));
                for (slot, z) in acc.iter_mut().zip(coh.amplitudes()) {
                    *slot += weight * z;
                }
            }
            let scale = 1.0 / (4.0 * normalization_factor(n, 2, p.alpha())).sqrt();
            let cat = cat_state(n, &p, nmax).unwrap();
            for (x, y) in acc.iter().zip(cat.amplitudes()) {
                assert!((x * scale - y).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn degenerate_cat_is_rejected() {
        assert!(matches!(
            cat_state_at(3, 2, 0.0, 32),
            Err(Error::DegenerateCat { n: 3, .. })
        ));
        assert!(matches!(
            cat_state_at(7, 4, 1e-3, 32),
            Err(Error::DegenerateCat { n: 7, .. })
        ));
        // n = 0 at vacuum is just |0⟩
        let v = cat_state_at(0, 2, 0.0, 32).unwrap();
        assert_eq!(v.amplitudes()[0], c(1.0));
    }

    #[test]
    fn annihilation_lowers_vacuum_and_cats() {
        let a = annihilation(10);
        let out = a.apply(&FockVector::number_state(0, 10));
        assert!(out.norm_sqr() == 0.0);

        let p = CatCodeParams::new(3, 3.0, 2).unwrap();
        let nmax = p.default_nmax();
        let a = annihilation(nmax);
        let lowered = a.apply(&cat_state(2, &p, nmax).unwrap());
        let target = cat_state(1, &p, nmax).unwrap();
        // a|C^n⟩ = α √(𝒩_{n−1}/𝒩_n) |C^{n−1}⟩
        let factor = p.alpha()
            * (normalization_factor(1, 3, p.alpha()) / normalization_factor(2, 3, p.alpha()))
                .sqrt();
        for (x, y) in lowered.amplitudes().iter().zip(target.amplitudes()) {
            assert!((x - y * factor).norm() < 1e-9);
        }
    }

    #[test]
    fn number_operator_agrees_with_mean_excitation() {
        let p = CatCodeParams::new(3, 3.0, 0).unwrap();
        let nmax = p.default_nmax();
        let num = number_operator(nmax);
        for n in 0..6 {
            let v = cat_state(n, &p, nmax).unwrap();
            let fock = v.expectation(&num).re;
            let closed = mean_excitation(n, &p).unwrap();
            assert!((fock - closed).abs() < 1e-9, "n={n}: {fock} vs {closed}");
        }
    }

    #[test]
    fn mean_excitation_oscillates_about_alpha_sq() {
        let p = CatCodeParams::new(3, 3.0, 0).unwrap();
        let means: Vec<f64> = (0..6).map(|n| mean_excitation(n, &p).unwrap()).collect();
        let above = means.iter().filter(|&&m| m > 9.0).count();
        assert!(above > 0 && above < 6, "{means:?}");
    }

    #[test]
    fn mean_excitation_limits() {
        let big = CatCodeParams::new(3, 8.0, 0).unwrap();
        for n in 0..6 {
            let m = mean_excitation(n, &big).unwrap();
            assert!((m / 64.0 - 1.0).abs() < 0.01);
        }
        let tiny = CatCodeParams::new(1, 1e-3, 0).unwrap();
        assert!(mean_excitation(0, &tiny).unwrap() < 1e-11);
    }

    #[test]
    fn completeness_of_means() {
        for d in 1..=4 {
            let p = CatCodeParams::new(d, 2.3, 0).unwrap();
            let total: f64 = (0..2 * d as i64)
                .map(|n| normalization_factor(n, d, p.alpha()) * mean_excitation(n, &p).unwrap())
                .sum::<f64>()
                / (2 * d) as f64;
            assert!((total - p.alpha_sq()).abs() < 1e-9);
        }
    }

    #[test]
    fn params_validation() {
        assert!(CatCodeParams::new(0, 1.0, 0).is_err());
        assert!(CatCodeParams::new(2, 0.0, 0).is_err());
        assert!(CatCodeParams::new(2, 1.0, 2).is_err());
        let p = CatCodeParams::new(4, 3.0, 1).unwrap();
        assert_eq!(p.wrap(-1), 7);
        assert!((p.mean_loss(0.005) - 0.045).abs() < 1e-15);
        assert!((p.damped_alpha(0.19) - 0.9 * 3.0).abs() < 1e-15);
    }

    #[test]
    fn default_rule() {
        assert_eq!(default_nmax(1.0), 32);
        assert_eq!(default_nmax(3.0), 53);
    }
}
