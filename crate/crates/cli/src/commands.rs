use std::path::PathBuf;

use rayon::prelude::*;
use serde::Serialize;

use catqec::channel::{
    analytic_channel, exact_logical_channel, pauli_approx, LogicalChannel, MAX_VALID_BIT_FLIP,
    MAX_VALID_OVERLAP,
};
use catqec::fock::CatCodeParams;
use catqec::metrics::{
    diamond_distance_to_identity, envelope_bounds, envelopes_at, minimize_gamma_bar,
    minimize_gamma_minus, suppression_ratio,
};
use catqec::optimize::find_optimal_code;
use catqec::repeater::{evaluate_spacings, optimize_spacing, pick_best, DEFAULT_L_ATT_KM};

use crate::config::Resolver;
use crate::{
    write_text, BoundsArgs, ChannelArgs, CliError, CodeArgs, Mode, RepeaterArgs, SweepArgs,
};

/// Deferred computation, so that `--print-config` can stop after resolution.
pub struct Job(Box<dyn FnOnce() -> Result<String, CliError>>);

impl Job {
    fn new(f: impl FnOnce() -> Result<String, CliError> + 'static) -> Self {
        Job(Box::new(f))
    }

    pub fn run(self) -> Result<String, CliError> {
        (self.0)()
    }
}

/// Twelve significant digits.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.11e}")
}

fn json<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    text.push('\n');
    Ok(text)
}

#[derive(Serialize)]
struct ChannelReport {
    d: usize,
    alpha: f64,
    s: usize,
    gamma: f64,
    nmax: usize,
    mode: String,
    provenance: String,
    matrix: [[f64; 4]; 4],
    #[serde(skip_serializing_if = "Option::is_none")]
    matrix_analytic: Option<[[f64; 4]; 4]>,
    eps_f: f64,
    eps_d: f64,
    theta: f64,
    overlap: f64,
    max_dev: f64,
    agreement_tol: f64,
    agrees: bool,
    pauli_valid: bool,
    hermiticity_preserving: bool,
    trace_deviation: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    diamond: Option<f64>,
}

pub fn channel(r: &Resolver, a: ChannelArgs) -> Result<Job, CliError> {
    let d = r.required(a.d, "d")?;
    let alpha = r.required(a.alpha, "alpha")?;
    let gamma = r.required(a.gamma, "gamma")?;
    let s = r.or(a.s, "s", 0)?;
    let mode = r.or(a.mode, "mode", Mode::Both)?;
    let nmax = r.opt(a.nmax, "nmax")?;
    let with_diamond = r.flag(a.diamond, "diamond")?;
    let tol = r.tolerance(
        a.agreement_tol,
        "agreement_tol",
        "CATQEC_AGREEMENT_TOL",
        1e-8,
    )?;
    let max_flip = r.tolerance(
        a.max_bit_flip,
        "max_bit_flip",
        "CATQEC_MAX_BIT_FLIP",
        MAX_VALID_BIT_FLIP,
    )?;
    let max_overlap = r.tolerance(
        a.max_overlap,
        "max_overlap",
        "CATQEC_MAX_OVERLAP",
        MAX_VALID_OVERLAP,
    )?;
    Ok(Job::new(move || {
        let p = CatCodeParams::new(d, alpha, s)?;
        let nmax = nmax.unwrap_or(p.default_nmax());
        let exact = exact_logical_channel(&p, gamma, nmax)?;
        let analytic = analytic_channel(&p, gamma)?;
        let approx = pauli_approx(&p, gamma)?;
        let max_dev = exact.max_abs_diff(&analytic);
        let chosen: LogicalChannel = match mode {
            Mode::Exact | Mode::Both => exact,
            Mode::Analytic => analytic,
            Mode::Pauli => approx.to_channel(),
        };
        let diamond = if with_diamond {
            Some(diamond_distance_to_identity(&chosen)?.value)
        } else {
            None
        };
        json(&ChannelReport {
            d,
            alpha,
            s,
            gamma,
            nmax,
            mode: mode.to_string(),
            provenance: chosen.provenance().to_string(),
            matrix: chosen.rows(),
            matrix_analytic: (mode == Mode::Both).then(|| analytic.rows()),
            eps_f: approx.eps_f,
            eps_d: approx.eps_d,
            theta: approx.theta,
            overlap: approx.overlap,
            max_dev,
            agreement_tol: tol,
            agrees: max_dev <= tol,
            pauli_valid: approx.eps_f <= max_flip && approx.overlap <= max_overlap,
            hermiticity_preserving: chosen.is_hermiticity_preserving(),
            trace_deviation: chosen.trace_deviation(),
            diamond,
        })
    }))
}

pub const SWEEP_HEADER: &str =
    "alpha_sq,s,gamma_exact_diamond,eps_f,eps_d,gamma_minus,gamma_plus,gamma_bar";

pub fn sweep_alpha(r: &Resolver, a: SweepArgs) -> Result<Job, CliError> {
    let d = r.required(a.d, "d")?;
    let gamma = r.required(a.gamma, "gamma")?;
    let only_s = r.opt(a.s, "s")?;
    let lo = r.or(a.alpha_sq_min, "alpha_sq_min", 2.0)?;
    let hi = r.or(a.alpha_sq_max, "alpha_sq_max", 12.0)?;
    let step = r.or(a.alpha_sq_step, "alpha_sq_step", 0.1)?;
    let nmax = r.opt(a.nmax, "nmax")?;
    if !(step > 0.0 && lo > 0.0 && hi >= lo) {
        return Err(CliError::Usage(format!(
            "need 0 < alpha-sq-min <= alpha-sq-max and alpha-sq-step > 0 (got {lo}, {hi}, {step})"
        )));
    }
    if let Some(s) = only_s {
        if s >= d {
            return Err(CliError::Usage(format!(
                "s must lie in [0, d-1] (got s={s}, d={d})"
            )));
        }
    }
    Ok(Job::new(move || {
        // small slack so that an endpoint hit up to rounding is included
        let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
        let subspaces: Vec<usize> = match only_s {
            Some(s) => vec![s],
            None => (0..d).collect(),
        };
        let grid: Vec<(f64, usize)> = (0..count)
            .flat_map(|i| {
                let x = lo + i as f64 * step;
                subspaces.iter().map(move |&s| (x, s))
            })
            .collect();
        let rows = grid
            .par_iter()
            .map(|&(alpha_sq, s)| -> Result<String, CliError> {
                let p = CatCodeParams::new(d, alpha_sq.sqrt(), s)?;
                let exact = exact_logical_channel(&p, gamma, nmax.unwrap_or(p.default_nmax()))?;
                let diamond = diamond_distance_to_identity(&exact)?.value;
                let approx = pauli_approx(&p, gamma)?;
                let env = envelopes_at(d, alpha_sq, gamma);
                let cols = [
                    fmt_float(alpha_sq),
                    s.to_string(),
                    fmt_float(diamond),
                    fmt_float(approx.eps_f),
                    fmt_float(approx.eps_d),
                    fmt_float(env.gamma_minus),
                    fmt_float(env.gamma_plus),
                    fmt_float(env.gamma_bar),
                ];
                Ok(cols.join(","))
            })
            .collect::<Result<Vec<String>, CliError>>()?;
        let mut out = String::from(SWEEP_HEADER);
        out.push('\n');
        for row in rows {
            out.push_str(&row);
            out.push('\n');
        }
        Ok(out)
    }))
}

#[derive(Serialize)]
struct OptimizeReport {
    d: usize,
    gamma: f64,
    alpha_o_analytic: Option<f64>,
    alpha_star: f64,
    alpha_star_sq: f64,
    s_star: usize,
    gamma_minus: f64,
    envelope_gamma_minus: f64,
    numeric_argmin_alpha_sq: Option<f64>,
    bracket: [f64; 2],
    certificate_diamond: Option<f64>,
}

pub fn optimize(r: &Resolver, a: CodeArgs) -> Result<Job, CliError> {
    let d = r.required(a.d, "d")?;
    let gamma = r.required(a.gamma, "gamma")?;
    let certify = r.or(a.no_certificate.then_some(false), "certificate", true)?;
    Ok(Job::new(move || {
        let code = find_optimal_code(d, gamma)?;
        let certificate = if certify {
            Some(code.certificate()?)
        } else {
            None
        };
        json(&OptimizeReport {
            d,
            gamma,
            alpha_o_analytic: code.alpha_o_analytic,
            alpha_star: code.alpha_star,
            alpha_star_sq: code.alpha_star * code.alpha_star,
            s_star: code.s_star,
            gamma_minus: code.gamma_minus_at_opt,
            envelope_gamma_minus: code.envelope_gamma_minus,
            numeric_argmin_alpha_sq: minimize_gamma_minus(d, gamma).ok().map(|(x, _)| x),
            bracket: [code.bracket.0, code.bracket.1],
            certificate_diamond: certificate,
        })
    }))
}

#[derive(Serialize)]
struct BoundsAt {
    d: usize,
    gamma: f64,
    alpha_sq: f64,
    gamma_minus: f64,
    gamma_plus: f64,
    gamma_bar: f64,
}

#[derive(Serialize)]
struct BoundsMinima {
    d: usize,
    gamma: f64,
    alpha_sq_min_gamma_minus: f64,
    min_gamma_minus: f64,
    alpha_sq_min_gamma_bar: f64,
    min_gamma_bar: f64,
}

pub fn bounds(r: &Resolver, a: BoundsArgs) -> Result<Job, CliError> {
    let d = r.required(a.d, "d")?;
    let gamma = r.required(a.gamma, "gamma")?;
    let alpha = match (r.opt(a.alpha, "alpha")?, r.opt(a.alpha_sq, "alpha_sq")?) {
        (Some(_), Some(_)) => {
            return Err(CliError::Usage(
                "give either alpha or alpha_sq, not both".into(),
            ))
        }
        (Some(x), None) => Some(x),
        (None, Some(x2)) if x2 > 0.0 => Some(x2.sqrt()),
        (None, Some(x2)) => {
            return Err(CliError::Usage(format!(
                "alpha_sq must be positive (got {x2})"
            )))
        }
        (None, None) => None,
    };
    Ok(Job::new(move || match alpha {
        Some(alpha) => {
            let e = envelope_bounds(d, alpha, gamma)?;
            json(&BoundsAt {
                d,
                gamma,
                alpha_sq: alpha * alpha,
                gamma_minus: e.gamma_minus,
                gamma_plus: e.gamma_plus,
                gamma_bar: e.gamma_bar,
            })
        }
        None => {
            let (xm, vm) = minimize_gamma_minus(d, gamma)?;
            let (xb, vb) = minimize_gamma_bar(d, gamma)?;
            json(&BoundsMinima {
                d,
                gamma,
                alpha_sq_min_gamma_minus: xm,
                min_gamma_minus: vm,
                alpha_sq_min_gamma_bar: xb,
                min_gamma_bar: vb,
            })
        }
    }))
}

#[derive(Serialize)]
struct SuppressionReport {
    d: usize,
    gamma: f64,
    alpha_o: f64,
    alpha_subo: f64,
    alpha_o_sq: f64,
    alpha_subo_sq: f64,
    ratio: f64,
}

pub fn suppression(r: &Resolver, a: CodeArgs) -> Result<Job, CliError> {
    let d = r.required(a.d, "d")?;
    let gamma = r.required(a.gamma, "gamma")?;
    Ok(Job::new(move || {
        let s = suppression_ratio(d, gamma)?;
        json(&SuppressionReport {
            d,
            gamma,
            alpha_o: s.alpha_o,
            alpha_subo: s.alpha_subo,
            alpha_o_sq: s.alpha_o * s.alpha_o,
            alpha_subo_sq: s.alpha_subo * s.alpha_subo,
            ratio: s.ratio,
        })
    }))
}

pub const REPEATER_HEADER: &str = "L_tot_km,d_opt,alpha_opt,s_opt,L0_tilde_opt,N,Q_Z,Q_X,rate";
pub const TABLE_HEADER: &str = "d,tau_minus,arc_length";

pub fn repeater(r: &Resolver, a: RepeaterArgs) -> Result<Job, CliError> {
    let eta = r.required(a.eta, "eta")?;
    let distances: Vec<f64> = r.list(a.l_tot_km, "l_tot_km")?;
    let l_att = r.or(a.l_att_km, "l_att_km", DEFAULT_L_ATT_KM)?;
    let d_min = r.or(a.d_min, "d_min", 2)?;
    let d_max = r.or(a.d_max, "d_max", 10)?;
    let table_path: Option<PathBuf> = r
        .opt(
            a.table_output.map(|p| p.display().to_string()),
            "table_output",
        )?
        .map(PathBuf::from);
    if distances.is_empty() {
        return Err(CliError::Usage(
            "missing --l-tot-km (flag or config key)".into(),
        ));
    }
    if d_min < 2 || d_max < d_min {
        return Err(CliError::Usage(format!(
            "need 2 <= d-min <= d-max (got {d_min}, {d_max})"
        )));
    }
    Ok(Job::new(move || {
        let d_range: Vec<usize> = (d_min..=d_max).collect();
        let spacings = d_range
            .par_iter()
            .map(|&d| optimize_spacing(eta, d))
            .collect::<Result<Vec<_>, _>>()?;
        let rows = distances
            .par_iter()
            .map(|&l_tot| -> Result<String, CliError> {
                let candidates = evaluate_spacings(&spacings, l_tot, l_att)?;
                let (plan, result) = match pick_best(&candidates) {
                    Ok(best) => best,
                    // no positive rate: report the lowest-error plan with rate 0
                    Err(_) => *candidates
                        .iter()
                        .min_by(|x, y| (x.1.q_z + x.1.q_x).total_cmp(&(y.1.q_z + y.1.q_x)))
                        .expect("nonempty d range"),
                };
                let cols = [
                    fmt_float(l_tot),
                    plan.d.to_string(),
                    fmt_float(plan.alpha),
                    plan.s.to_string(),
                    fmt_float(plan.l0_tilde),
                    plan.stations.to_string(),
                    fmt_float(result.q_z),
                    fmt_float(result.q_x),
                    fmt_float(result.rate),
                ];
                Ok(cols.join(","))
            })
            .collect::<Result<Vec<String>, CliError>>()?;

        let mut table = format!("{TABLE_HEADER}\n");
        for s in &spacings {
            table.push_str(&format!(
                "{},{},{}\n",
                s.d(),
                fmt_float(s.tau_minus),
                fmt_float(s.arc_length())
            ));
        }
        let mut out = format!("{REPEATER_HEADER}\n");
        for row in rows {
            out.push_str(&row);
            out.push('\n');
        }
        eprintln!(
            "catqec: eta={eta}, L_att={l_att} km; d, alpha, s and spacing re-optimized at each distance"
        );
        match table_path {
            Some(path) => write_text(Some(&path), &table)?,
            None => {
                out.push('\n');
                out.push_str(&table);
            }
        }
        Ok(out)
    }))
}
