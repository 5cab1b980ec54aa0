//! One- and few-dimensional minimizers and a bracketing root finder.

/// 1/φ
const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section minimization of `f` on `[lo, hi]`, returns `(x, f(x))`.
///
/// The interval shrinks until its width drops below `tol`. The best point seen,
/// including both ends, is returned, so a monotone `f` yields the lower endpoint value.
pub fn golden_section<F>(mut f: F, lo: f64, hi: f64, tol: f64) -> (f64, f64)
where
    F: FnMut(f64) -> f64,
{
    assert!(lo <= hi, "empty bracket [{lo}, {hi}]");
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut iterations = 0;
    while (b - a).abs() > tol && iterations < 500 {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
        iterations += 1;
    }
    let mut best = if fc <= fd { (c, fc) } else { (d, fd) };
    for x in [lo, hi] {
        let fx = f(x);
        if fx < best.1 {
            best = (x, fx);
        }
    }
    best
}

/// Bisection for a sign change of `f` in `[lo, hi]`. `None` if the ends share a sign.
pub fn bisect<F>(mut f: F, lo: f64, hi: f64, tol: f64) -> Option<f64>
where
    F: FnMut(f64) -> f64,
{
    let (mut a, mut b) = (lo, hi);
    let mut fa = f(a);
    let fb = f(b);
    if fa == 0.0 {
        return Some(a);
    }
    if fb == 0.0 {
        return Some(b);
    }
    if fa.signum() == fb.signum() || fa.is_nan() || fb.is_nan() {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if (b - a).abs() <= tol * mid.abs().max(1.0) {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Some(mid);
        }
        if fm.signum() == fa.signum() {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    Some(0.5 * (a + b))
}

/// Nelder–Mead simplex minimization from `start` with initial edge `step`.
///
/// Stops when the spread of simplex values falls below `rel_tol·|f_best| + abs_tol`
/// or after `max_iter` iterations.
pub fn nelder_mead<F, const N: usize>(
    mut f: F,
    start: [f64; N],
    step: f64,
    rel_tol: f64,
    abs_tol: f64,
    max_iter: usize,
) -> ([f64; N], f64)
where
    F: FnMut(&[f64; N]) -> f64,
{
    let mut simplex: Vec<([f64; N], f64)> = Vec::with_capacity(N + 1);
    simplex.push((start, f(&start)));
    for i in 0..N {
        let mut p = start;
        p[i] += step;
        simplex.push((p, f(&p)));
    }

    for _ in 0..max_iter {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = simplex[0].1;
        let worst = simplex[N].1;
        if (worst - best).abs() <= rel_tol * best.abs() + abs_tol {
            break;
        }

        let mut centroid = [0.0; N];
        for (p, _) in &simplex[..N] {
            for (c, x) in centroid.iter_mut().zip(p) {
                *c += x / N as f64;
            }
        }
        let along = |t: f64| -> [f64; N] {
            let mut out = [0.0; N];
            for i in 0..N {
                out[i] = centroid[i] + t * (simplex[N].0[i] - centroid[i]);
            }
            out
        };

        let reflected = along(-1.0);
        let fr = f(&reflected);
        if fr < simplex[0].1 {
            let expanded = along(-2.0);
            let fe = f(&expanded);
            simplex[N] = if fe < fr {
                (expanded, fe)
            } else {
                (reflected, fr)
            };
            continue;
        }
        if fr < simplex[N - 1].1 {
            simplex[N] = (reflected, fr);
            continue;
        }
        let contracted = if fr < simplex[N].1 {
            along(-0.5)
        } else {
            along(0.5)
        };
        let fc = f(&contracted);
        if fc < simplex[N].1.min(fr) {
            simplex[N] = (contracted, fc);
            continue;
        }
        // shrink toward the best vertex
        let anchor = simplex[0].0;
        for vertex in simplex.iter_mut().skip(1) {
            for i in 0..N {
                vertex.0[i] = anchor[i] + 0.5 * (vertex.0[i] - anchor[i]);
            }
            vertex.1 = f(&vertex.0);
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    simplex[0]
}

/// Index of the rightmost strict interior local minimum of `values`.
pub fn rightmost_local_min(values: &[f64]) -> Option<usize> {
    (1..values.len().saturating_sub(1))
        .rev()
        .find(|&i| values[i] < values[i - 1] && values[i] <= values[i + 1])
}

/// Spearman rank correlation (average ranks for ties).
pub fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let rx = ranks(xs);
    let ry = ranks(ys);
    let n = xs.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        cov += (a - mx) * (b - my);
        vx += (a - mx).powi(2);
        vy += (b - my).powi(2);
    }
    cov / (vx * vy).sqrt()
}

fn ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut out = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = 0.5 * (i + j) as f64 + 1.0;
        for &k in &order[i..=j] {
            out[k] = rank;
        }
        i = j + 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_finds_parabola_minimum() {
        let (x, fx) = golden_section(|x| (x - 1.3).powi(2) + 2.0, 0.0, 5.0, 1e-10);
        assert!((x - 1.3).abs() < 1e-6);
        assert!((fx - 2.0).abs() < 1e-15);
    }

    #[test]
    fn golden_returns_endpoint_for_monotone() {
        let (x, _) = golden_section(|x| x, 2.0, 3.0, 1e-9);
        assert_eq!(x, 2.0);
    }

    #[test]
    fn bisect_root() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-14).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-12);
        assert!(bisect(|x| x * x + 1.0, -1.0, 1.0, 1e-12).is_none());
    }

    #[test]
    fn nelder_mead_rosenbrock() {
        let (x, fx) = nelder_mead(
            |p: &[f64; 2]| (1.0 - p[0]).powi(2) + 100.0 * (p[1] - p[0] * p[0]).powi(2),
            [-1.2, 1.0],
            0.5,
            0.0,
            1e-20,
            5000,
        );
        assert!(fx < 1e-12, "{fx}");
        assert!((x[0] - 1.0).abs() < 1e-5 && (x[1] - 1.0).abs() < 1e-5);
    }

    #[test]
    fn local_min_scan() {
        let v = [1.0, 0.5, 0.8, 0.9, 0.4, 0.6, 0.7];
        assert_eq!(rightmost_local_min(&v), Some(4));
        assert_eq!(rightmost_local_min(&[1.0, 2.0, 3.0]), None);
    }

    #[test]
    fn spearman_extremes() {
        let x = [1.0, 2.0, 3.0, 4.0];
        assert!((spearman(&x, &[10.0, 20.0, 30.0, 40.0]) - 1.0).abs() < 1e-15);
        assert!((spearman(&x, &[4.0, 3.0, 2.0, 1.0]) + 1.0).abs() < 1e-15);
        let tied = spearman(&[1.0, 1.0, 2.0], &[1.0, 2.0, 3.0]);
        assert!(tied > 0.0 && tied < 1.0);
    }
}
