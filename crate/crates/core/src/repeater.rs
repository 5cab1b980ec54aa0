//! One-way repeater chains built from identical cat-code stations.
//!
//! Each station sees loss γ = L̃₀ + 2(1 − η): fiber loss over the spacing
//! L̃₀ (in units of the attenuation length) plus coupling loss on both ends.

use crate::channel::{exact_logical_channel, LogicalChannel};
use crate::error::{domain, Error, Result};
use crate::fock::CatCodeParams;
use crate::optimize::{find_optimal_code, OptimalCode};
use crate::search::golden_section;

pub const DEFAULT_L_ATT_KM: f64 = 20.0;
/// Range searched for the dimensionless spacing L̃₀.
pub const SPACING_RANGE: (f64, f64) = (1e-4, 0.05);
const SPACING_GRID: usize = 25;

pub fn station_gamma(eta: f64, l0_tilde: f64) -> f64 {
    l0_tilde + 2.0 * (1.0 - eta)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RepeaterPlan {
    pub eta: f64,
    pub l0_tilde: f64,
    pub l_att_km: f64,
    pub l_tot_km: f64,
    pub d: usize,
    pub alpha: f64,
    pub s: usize,
    pub stations: usize,
}

impl RepeaterPlan {
    pub fn gamma(&self) -> f64 {
        station_gamma(self.eta, self.l0_tilde)
    }

    pub fn params(&self) -> Result<CatCodeParams> {
        CatCodeParams::new(self.d, self.alpha, self.s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateResult {
    pub q_z: f64,
    pub q_x: f64,
    /// Secure key bits per channel use.
    pub rate: f64,
    pub per_station: LogicalChannel,
    pub composed: LogicalChannel,
}

/// ℰ^N by repeated squaring.
pub fn channel_power(e: &LogicalChannel, n: u64) -> LogicalChannel {
    let mut result = LogicalChannel::identity().with_provenance(e.provenance());
    let mut base = *e;
    let mut n = n;
    while n > 0 {
        if n & 1 == 1 {
            result = base.compose(&result);
        }
        n >>= 1;
        if n > 0 {
            base = base.compose(&base);
        }
    }
    result
}

/// Bit error rates in the Z and X bases, (Q_Z, Q_X).
pub fn qber(e: &LogicalChannel) -> (f64, f64) {
    let m = |i, j| e.entry(i, j);
    let q_z = 0.5 * (m(1, 4) + m(4, 1));
    let q_x =
        0.25 * ((m(1, 1) + m(1, 4) + m(4, 1) + m(4, 4)) - (m(2, 2) + m(2, 3) + m(3, 2) + m(3, 3)));
    (q_z, q_x)
}

pub fn binary_entropy(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        return 0.0;
    }
    -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
}

/// Secure key rate per mode, 1 − H(Q_Z) − H(Q_X) clamped at zero.
pub fn skrpm(q_z: f64, q_x: f64) -> f64 {
    (1.0 - binary_entropy(q_z) - binary_entropy(q_x)).max(0.0)
}

/// Best spacing and code for one d: minimizes τ₋ = Γ₋/L̃₀.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpacingOptimum {
    pub eta: f64,
    pub l0_tilde: f64,
    pub code: OptimalCode,
    pub tau_minus: f64,
}

impl SpacingOptimum {
    pub fn d(&self) -> usize {
        self.code.d
    }

    /// Distance πα/d between neighbouring coherent components.
    pub fn arc_length(&self) -> f64 {
        std::f64::consts::PI * self.code.alpha_star / self.code.d as f64
    }
}

fn check_eta(eta: f64) -> Result<()> {
    if !(eta > 0.9 && eta <= 1.0) {
        return domain(format!("eta must lie in (0.9, 1] (got {eta})"));
    }
    Ok(())
}

pub fn optimize_spacing(eta: f64, d: usize) -> Result<SpacingOptimum> {
    check_eta(eta)?;
    let tau = |ln_l0: f64| -> Result<(f64, OptimalCode)> {
        let l0 = ln_l0.exp();
        let code = find_optimal_code(d, station_gamma(eta, l0))?;
        Ok((code.gamma_minus_at_opt / l0, code))
    };
    let (lo, hi) = (SPACING_RANGE.0.ln(), SPACING_RANGE.1.ln());
    let xs: Vec<f64> = (0..SPACING_GRID)
        .map(|i| lo + (hi - lo) * i as f64 / (SPACING_GRID - 1) as f64)
        .collect();
    let values = xs
        .iter()
        .map(|&x| Ok(tau(x)?.0))
        .collect::<Result<Vec<f64>>>()?;
    let i = (0..values.len())
        .min_by(|&a, &b| values[a].total_cmp(&values[b]))
        .expect("nonempty grid");
    let left = xs[i.saturating_sub(1)];
    let right = xs[(i + 1).min(xs.len() - 1)];
    let mut failure = None;
    let (ln_l0, _) = golden_section(
        |x| match tau(x) {
            Ok((v, _)) => v,
            Err(e) => {
                failure = Some(e);
                f64::INFINITY
            }
        },
        left,
        right,
        1e-6,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    let (tau_minus, code) = tau(ln_l0)?;
    Ok(SpacingOptimum {
        eta,
        l0_tilde: ln_l0.exp(),
        code,
        tau_minus,
    })
}

/// Spacing optimum for every d in the range.
pub fn tau_table(eta: f64, d_range: &[usize]) -> Result<Vec<SpacingOptimum>> {
    d_range.iter().map(|&d| optimize_spacing(eta, d)).collect()
}

pub fn plan_for(spacing: &SpacingOptimum, l_tot_km: f64, l_att_km: f64) -> Result<RepeaterPlan> {
    let ordered = l_att_km > 0.0 && l_tot_km >= l_att_km;
    if !ordered {
        return domain(format!(
            "need L_tot >= L_att > 0 (got L_tot={l_tot_km}, L_att={l_att_km})"
        ));
    }
    let stations = (l_tot_km / (spacing.l0_tilde * l_att_km)).round().max(1.0) as usize;
    Ok(RepeaterPlan {
        eta: spacing.eta,
        l0_tilde: spacing.l0_tilde,
        l_att_km,
        l_tot_km,
        d: spacing.code.d,
        alpha: spacing.code.alpha_star,
        s: spacing.code.s_star,
        stations,
    })
}

/// Chain of exact per-station channels.
pub fn evaluate_plan(plan: &RepeaterPlan) -> Result<RateResult> {
    let params = plan.params()?;
    let per_station = exact_logical_channel(&params, plan.gamma(), params.default_nmax())?;
    let composed = channel_power(&per_station, plan.stations as u64);
    let (q_z, q_x) = qber(&composed);
    Ok(RateResult {
        q_z,
        q_x,
        rate: skrpm(q_z, q_x),
        per_station,
        composed,
    })
}

/// Plan and chain result for every spacing optimum, in input order.
pub fn evaluate_spacings(
    spacings: &[SpacingOptimum],
    l_tot_km: f64,
    l_att_km: f64,
) -> Result<Vec<(RepeaterPlan, RateResult)>> {
    spacings
        .iter()
        .map(|spacing| {
            let plan = plan_for(spacing, l_tot_km, l_att_km)?;
            Ok((plan, evaluate_plan(&plan)?))
        })
        .collect()
}

/// Highest positive rate among the candidates; ties go to the earlier entry.
pub fn pick_best(candidates: &[(RepeaterPlan, RateResult)]) -> Result<(RepeaterPlan, RateResult)> {
    let mut best: Option<&(RepeaterPlan, RateResult)> = None;
    for c in candidates {
        if c.1.rate > 0.0 && best.is_none_or(|b| c.1.rate > b.1.rate) {
            best = Some(c);
        }
    }
    if let Some(b) = best {
        return Ok(*b);
    }
    let (q_z, q_x) = candidates
        .iter()
        .map(|(_, r)| (r.q_z, r.q_x))
        .min_by(|a, b| (a.0 + a.1).total_cmp(&(b.0 + b.1)))
        .unwrap_or((f64::NAN, f64::NAN));
    Err(Error::NoPositiveRate { q_z, q_x })
}

/// Best plan among precomputed spacing optima; ties go to the smaller d.
pub fn best_plan(
    spacings: &[SpacingOptimum],
    l_tot_km: f64,
    l_att_km: f64,
) -> Result<(RepeaterPlan, RateResult)> {
    pick_best(&evaluate_spacings(spacings, l_tot_km, l_att_km)?)
}

pub fn optimize_plan(
    eta: f64,
    l_tot_km: f64,
    l_att_km: f64,
    d_range: &[usize],
) -> Result<(RepeaterPlan, RateResult)> {
    if d_range.is_empty() {
        return domain("empty d range");
    }
    best_plan(&tau_table(eta, d_range)?, l_tot_km, l_att_km)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::pauli_approx;

    #[test]
    fn trivial_powers() {
        let e = LogicalChannel::pauli(0.01, 0.002, 0.03);
        assert_eq!(
            channel_power(&e, 0).max_abs_diff(&LogicalChannel::identity()),
            0.0
        );
        assert_eq!(channel_power(&e, 1).max_abs_diff(&e), 0.0);
    }

    #[test]
    fn two_station_flip_probability() {
        let (ef, ed) = (0.013, 0.004);
        let e2 = channel_power(&LogicalChannel::pauli(ef, 0.0, ed), 2);
        assert!((qber(&e2).0 - 2.0 * ef * (1.0 - ef)).abs() < 1e-12);
    }

    #[test]
    fn power_semigroup() {
        let p = CatCodeParams::new(3, 2.0, 1).unwrap();
        let e = exact_logical_channel(&p, 0.01, p.default_nmax()).unwrap();
        for (a, b) in [(3, 4), (17, 0), (64, 37)] {
            let lhs = channel_power(&e, a + b);
            let rhs = channel_power(&e, a).compose(&channel_power(&e, b));
            assert!(lhs.max_abs_diff(&rhs) < 1e-12);
        }
    }

    #[test]
    fn pauli_qber_is_exact() {
        assert_eq!(qber(&LogicalChannel::identity()), (0.0, 0.0));
        let (qz, qx) = qber(&LogicalChannel::pauli(0.021, 0.0, 0.007));
        assert!((qz - 0.021).abs() < 1e-16 && (qx - 0.007).abs() < 1e-16);
    }

    #[test]
    fn qber_grows_along_chain() {
        let e = LogicalChannel::pauli(1e-3, 0.0, 2e-3);
        let mut last = (0.0, 0.0);
        for n in [1, 2, 5, 10, 100, 1000] {
            let q = qber(&channel_power(&e, n));
            assert!(q.0 >= last.0 && q.1 >= last.1);
            last = q;
        }
    }

    #[test]
    fn single_station_qber_tracks_pauli_errors() {
        let code = find_optimal_code(4, 0.005).unwrap();
        let p = code.params().unwrap();
        let e = exact_logical_channel(&p, 0.005, p.default_nmax()).unwrap();
        let approx = pauli_approx(&p, 0.005).unwrap();
        let (qz, qx) = qber(&e);
        assert!(
            ((qz - approx.eps_f) / approx.eps_f).abs() < 0.1,
            "{qz} {}",
            approx.eps_f
        );
        assert!(
            ((qx - approx.eps_d) / approx.eps_d).abs() < 0.1,
            "{qx} {}",
            approx.eps_d
        );
    }

    #[test]
    fn key_rate_values() {
        assert_eq!(skrpm(0.0, 0.0), 1.0);
        assert_eq!(skrpm(0.5, 0.0), 0.0);
        let h = -0.11 * 0.11f64.log2() - 0.89 * 0.89f64.log2();
        assert!((skrpm(0.11, 0.11) - (1.0 - 2.0 * h).max(0.0)).abs() < 1e-15);
        assert!(
            (skrpm(0.05, 0.01) - (1.0 - binary_entropy(0.05) - binary_entropy(0.01))).abs() < 1e-15
        );
    }

    #[test]
    fn spacing_below_coupling_loss() {
        let opt = optimize_spacing(0.995, 4).unwrap();
        assert!(opt.l0_tilde < 0.01, "{}", opt.l0_tilde);
        assert!(opt.tau_minus > 0.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(optimize_spacing(0.8, 4).unwrap_err().is_domain());
        let opt = optimize_spacing(0.995, 3).unwrap();
        assert!(plan_for(&opt, 10.0, 20.0).unwrap_err().is_domain());
        assert!(optimize_plan(0.995, 1000.0, 20.0, &[]).is_err());
    }

    #[test]
    fn hopeless_chain_reports_no_rate() {
        let opt = optimize_spacing(0.91, 2).unwrap();
        let err = best_plan(&[opt], 1e5, 20.0).unwrap_err();
        assert!(matches!(err, Error::NoPositiveRate { .. }), "{err}");
    }
}
