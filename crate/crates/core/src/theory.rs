//! Closed-form limits: transition thresholds, the single-pair regime
//! diagram in the dense-relay limit, and the fully connected and
//! spanning-tree capacitances.
//!
//! Distances here are ratios `d / lambda0` and sizes are `L / lambda0`.

use std::f64::consts::{LN_2, PI, SQRT_2};

use serde::Serialize;

use crate::error::{MqeError, Result};
use crate::geometry::distance_pdf_unchecked;
use crate::qchannel::{capacitance_of_ratio, check_alpha, check_probability, efficiency};
use crate::quad::{integrate, QuadOptions};

/// Efficiency of a pair at distance `d` relayed by `m` equally spaced nodes.
pub fn single_pair_efficiency(m: usize, d: f64, lambda0: f64, alpha: f64, p: f64) -> f64 {
    efficiency(capacitance_of_ratio(d / ((m + 1) as f64 * lambda0)), m, alpha, p)
}

/// `[1 - Delta(m) ln(1 - p)]^-1` with `Delta(m) = ln 2 / (ln(m + 1) - ln m)`:
/// the `alpha` below which `m` relays beat `m - 1` for `d << lambda0`.
pub fn alpha_c_step(m: usize, p: f64) -> Result<f64> {
    if m < 1 {
        return Err(MqeError::invalid("transition index m must be at least 1"));
    }
    check_probability(p)?;
    if p >= 1.0 {
        return Ok(0.0);
    }
    let m = m as f64;
    let delta = LN_2 / ((m + 1.0).ln() - m.ln());
    Ok(1.0 / (1.0 - delta * (-p).ln_1p()))
}

/// `alpha` at which `E(m_hi) = E(m_lo)` for a pair at `d / lambda0 = d`.
///
/// Both sides are affine in `alpha`, so the root is
/// `dq / (dq - dm ln(1 - p))`.
pub fn crossing_alpha(d: f64, m_lo: usize, m_hi: usize, p: f64) -> Result<f64> {
    check_crossing_args(d, m_lo, m_hi, p)?;
    if p >= 1.0 {
        return Ok(0.0);
    }
    let dq = capacitance_of_ratio(d / (m_hi + 1) as f64) - capacitance_of_ratio(d / (m_lo + 1) as f64);
    let dm = (m_hi - m_lo) as f64;
    let c = (-p).ln_1p();
    if dq <= 0.0 {
        return Ok(0.0);
    }
    Ok(dq / (dq - dm * c))
}

fn check_crossing_args(d: f64, m_lo: usize, m_hi: usize, p: f64) -> Result<()> {
    if !(d > 0.0 && d.is_finite()) {
        return Err(MqeError::invalid(format!("distance ratio must be positive, got {d}")));
    }
    if m_hi <= m_lo {
        return Err(MqeError::invalid(format!("need m_hi > m_lo, got {m_hi} <= {m_lo}")));
    }
    check_probability(p)
}

/// Bisection on `E(m_hi) - E(m_lo)` over `alpha in [0, 1]`.
pub fn crossing_alpha_bisect(d: f64, m_lo: usize, m_hi: usize, p: f64, tol: f64) -> Result<f64> {
    check_crossing_args(d, m_lo, m_hi, p)?;
    let g = |a: f64| single_pair_efficiency(m_hi, d, 1.0, a, p) - single_pair_efficiency(m_lo, d, 1.0, a, p);
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let (g_lo, g_hi) = (g(lo), g(hi));
    if !(g_lo > 0.0 && g_hi < 0.0) {
        return Err(MqeError::NumericFailure(format!(
            "crossing not bracketed for d = {d}, m {m_lo} -> {m_hi}: g(0) = {g_lo:e}, g(1) = {g_hi:e}"
        )));
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Upper end of the `m` scan used for the first transition.
pub fn m_scan_limit(d: f64) -> usize {
    (10.0 * d).ceil() as usize + 10
}

/// First transition away from the direct link at `d / lambda0 = d`:
/// `(m_bar, alpha)` with `alpha = max_m alpha_c^{0 -> m}`, smallest `m` on ties.
pub fn first_transition(d: f64, p: f64) -> Result<(usize, f64)> {
    let mut best = (1, crossing_alpha(d, 0, 1, p)?);
    for m in 2..=m_scan_limit(d) {
        let a = crossing_alpha(d, 0, m, p)?;
        if a > best.1 {
            best = (m, a);
        }
    }
    Ok(best)
}

/// Optimal relay count `argmax_m E(m)` for a pair at `d / lambda0 = d`,
/// smallest `m` on ties. Without a security penalty the count is unbounded
/// and this returns an error.
pub fn optimal_relays(d: f64, alpha: f64, p: f64) -> Result<usize> {
    check_alpha(alpha)?;
    check_probability(p)?;
    if d.is_nan() || d <= 0.0 {
        return Err(MqeError::invalid(format!("distance ratio must be positive, got {d}")));
    }
    let penalty = alpha * (-p).ln_1p();
    if p >= 1.0 || alpha >= 1.0 {
        return Ok(0);
    }
    if penalty == 0.0 {
        return Err(MqeError::invalid("optimal relay count is unbounded without a security penalty"));
    }
    const CAP: usize = 10_000_000;
    let mut best = (0usize, single_pair_efficiency(0, d, 1.0, alpha, p));
    let mut m = 1usize;
    loop {
        let e = single_pair_efficiency(m, d, 1.0, alpha, p);
        if e > best.1 {
            best = (m, e);
        }
        // 1 - e^{-x} >= x e^{-x} bounds every later capacitance.
        let x = d / (m + 1) as f64;
        let bound = (1.0 - alpha) * (-x.log2() + x / LN_2) + penalty * m as f64;
        if bound < best.1 {
            return Ok(best.0);
        }
        m += 1;
        if m > CAP {
            return Err(MqeError::NumericFailure(format!("relay scan did not terminate for d = {d}, alpha = {alpha}")));
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RegimeDiagram {
    pub p: f64,
    pub d_over_lambda: Vec<f64>,
    pub alpha: Vec<f64>,
    /// `relays[i][j]`: optimal relay count at `d_over_lambda[i]`, `alpha[j]`.
    pub relays: Vec<Vec<usize>>,
    /// `m_bar(d)`.
    pub m_bar: Vec<usize>,
    /// `alpha_c^{0 -> m_bar}(d)`: above it the direct link is optimal.
    pub first_boundary: Vec<f64>,
    /// `step_boundaries[i][s]` is `alpha_c^{m-1 -> m}(d_i)` for `m = m_bar + 1 + s`.
    pub step_boundaries: Vec<Vec<f64>>,
}

/// Regime diagram on a `(d / lambda0, alpha)` grid with `extra_steps`
/// one-by-one boundaries after the first transition.
pub fn regime_diagram(d_over_lambda: &[f64], alpha: &[f64], p: f64, extra_steps: usize) -> Result<RegimeDiagram> {
    check_probability(p)?;
    if p >= 1.0 {
        return Err(MqeError::invalid("regime diagram needs p < 1"));
    }
    let mut out = RegimeDiagram {
        p,
        d_over_lambda: d_over_lambda.to_vec(),
        alpha: alpha.to_vec(),
        relays: Vec::new(),
        m_bar: Vec::new(),
        first_boundary: Vec::new(),
        step_boundaries: Vec::new(),
    };
    for &d in d_over_lambda {
        let (m_bar, a_first) = first_transition(d, p)?;
        let exact = crossing_alpha_bisect(d, 0, m_bar, p, 1e-10)?;
        if (exact - a_first).abs() > 1e-8 {
            return Err(MqeError::NumericFailure(format!(
                "closed-form crossing {a_first} disagrees with bisection {exact} at d = {d}"
            )));
        }
        let steps =
            (m_bar + 1..m_bar + 1 + extra_steps).map(|m| crossing_alpha(d, m - 1, m, p)).collect::<Result<Vec<_>>>()?;
        let row = alpha
            .iter()
            .map(|&a| if a > 0.0 { optimal_relays(d, a, p) } else { Err(MqeError::invalid("alpha grid must be positive")) })
            .collect::<Result<Vec<_>>>()?;
        out.m_bar.push(m_bar);
        out.first_boundary.push(a_first);
        out.step_boundaries.push(steps);
        out.relays.push(row);
    }
    Ok(out)
}

fn log1mexp(x: f64) -> f64 {
    if x < LN_2 {
        (-(-x).exp_m1()).ln()
    } else {
        (-(-x).exp()).ln_1p()
    }
}

fn check_size(l: f64) -> Result<()> {
    if !(l > 0.0 && l.is_finite()) {
        return Err(MqeError::invalid(format!("L / lambda0 must be positive, got {l}")));
    }
    Ok(())
}

const FC_QUAD: QuadOptions = QuadOptions { abs_tol: 1e-14, rel_tol: 1e-9, max_intervals: 4000 };

/// Fully connected capacitance averaged over pair distances, for an
/// arbitrary distance density on `[0, sqrt 2]`.
pub fn q_fc_with_density<F: Fn(f64) -> f64>(l_over_lambda: f64, density: F) -> Result<f64> {
    check_size(l_over_lambda)?;
    let r = integrate(
        |z| if z > 0.0 { density(z) * log1mexp(z * l_over_lambda) } else { 0.0 },
        0.0,
        SQRT_2,
        &[1.0],
        FC_QUAD,
    )?;
    Ok(-r.value / LN_2)
}

/// Mean direct-link capacitance of uniformly placed users.
pub fn q_fc(l_over_lambda: f64) -> Result<f64> {
    q_fc_with_density(l_over_lambda, distance_pdf_unchecked)
}

/// `-<ln(z L / lambda0)> / ln 2`, the `L << lambda0` form of [`q_fc`].
pub fn q_fc_small(l_over_lambda: f64) -> Result<f64> {
    check_size(l_over_lambda)?;
    let mean_log = integrate(
        |z| if z > 0.0 { distance_pdf_unchecked(z) * z.ln() } else { 0.0 },
        0.0,
        SQRT_2,
        &[1.0],
        FC_QUAD,
    )?;
    Ok(-(mean_log.value + l_over_lambda.ln()) / LN_2)
}

/// `(2 pi / ln 2) (lambda0 / L)^2`, the `L >> lambda0` form of [`q_fc`].
pub fn q_fc_large(l_over_lambda: f64) -> Result<f64> {
    check_size(l_over_lambda)?;
    Ok(2.0 * PI / LN_2 / (l_over_lambda * l_over_lambda))
}

/// Longest Euclidean spanning-tree edge of `n` uniform points, in units of `L`.
pub fn mst_longest_edge(n: usize) -> f64 {
    let n = n as f64;
    (n.ln() / (PI * n)).sqrt()
}

/// Capacitance of the longest spanning-tree edge.
pub fn q_mst(n: usize, l_over_lambda: f64) -> Result<f64> {
    check_size(l_over_lambda)?;
    if n < 2 {
        return Err(MqeError::invalid(format!("need at least 2 users, got {n}")));
    }
    Ok(capacitance_of_ratio(l_over_lambda * mst_longest_edge(n)))
}

/// First-transition `alpha` of the most distant possible pair
/// (`d = sqrt(2) L`); below it essentially every pair is relayed.
pub fn alpha_bar(l_over_lambda: f64, p: f64) -> Result<f64> {
    check_size(l_over_lambda)?;
    Ok(first_transition(SQRT_2 * l_over_lambda, p)?.1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::P_INV_E;

    #[test]
    fn thresholds_at_inverse_e() {
        assert!((alpha_c_step(1, P_INV_E).unwrap() - 0.5).abs() < 1e-12);
        assert!((alpha_c_step(2, P_INV_E).unwrap() - 0.369).abs() < 1e-3);
        assert!((alpha_c_step(3, P_INV_E).unwrap() - 0.293).abs() < 1e-3);
        assert_eq!(alpha_c_step(2, 1.0).unwrap(), 0.0);
        assert!(alpha_c_step(0, 0.5).is_err());
    }

    #[test]
    fn threshold_monotonicity() {
        for m in 1..20 {
            assert!(alpha_c_step(m + 1, 0.3).unwrap() < alpha_c_step(m, 0.3).unwrap());
        }
        for p in [0.05, 0.2, 0.5, 0.9] {
            assert!(alpha_c_step(2, p + 0.05).unwrap() < alpha_c_step(2, p).unwrap());
        }
    }

    #[test]
    fn single_pair_limits() {
        let q = capacitance_of_ratio(0.7);
        assert_eq!(single_pair_efficiency(0, 0.7, 1.0, 0.3, 0.2), 0.7 * q);
        // d -> 0: E(1) - E(0) -> (1 - alpha) + alpha ln(1 - p)
        let (a, p) = (0.3, 0.2);
        let diff = single_pair_efficiency(1, 1e-9, 1.0, a, p) - single_pair_efficiency(0, 1e-9, 1.0, a, p);
        assert!((diff - ((1.0 - a) + a * (-p).ln_1p())).abs() < 1e-6, "{diff}");
        let diff = single_pair_efficiency(1, 1e-9, 1.0, 0.5, P_INV_E) - single_pair_efficiency(0, 1e-9, 1.0, 0.5, P_INV_E);
        assert!(diff.abs() < 1e-6);
    }

    #[test]
    fn closed_form_matches_bisection() {
        for d in [1e-3, 0.1, 1.0, 7.0, 30.0] {
            for (lo, hi) in [(0, 1), (0, 4), (2, 3)] {
                let a = crossing_alpha(d, lo, hi, P_INV_E).unwrap();
                let b = crossing_alpha_bisect(d, lo, hi, P_INV_E, 1e-12).unwrap();
                assert!((a - b).abs() < 1e-9, "d={d} {lo}->{hi}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn small_distance_boundaries_match_steps() {
        let diag = regime_diagram(&[1e-3], &[0.45], P_INV_E, 3).unwrap();
        assert_eq!(diag.m_bar[0], 1);
        assert!((diag.first_boundary[0] - alpha_c_step(1, P_INV_E).unwrap()).abs() < 1e-4);
        for (s, &b) in diag.step_boundaries[0].iter().enumerate() {
            assert!((b - alpha_c_step(s + 2, P_INV_E).unwrap()).abs() < 1e-4, "step {}: {b}", s + 2);
        }
        assert_eq!(diag.relays[0][0], 1);
    }

    #[test]
    fn large_distance_jumps_and_scales() {
        let (m1, a1) = first_transition(20.0, P_INV_E).unwrap();
        let (m2, a2) = first_transition(40.0, P_INV_E).unwrap();
        assert!(m1 > 1 && m2 > m1);
        let ratio = a1 / a2;
        assert!((ratio - 2.0).abs() < 0.4, "{ratio}");
    }

    #[test]
    fn relay_count_non_increasing_in_alpha() {
        let alphas: Vec<f64> = (1..40).map(|i| i as f64 / 40.0).collect();
        let diag = regime_diagram(&[0.05, 0.5, 3.0, 12.0], &alphas, P_INV_E, 2).unwrap();
        for (i, row) in diag.relays.iter().enumerate() {
            for w in row.windows(2) {
                assert!(w[1] <= w[0], "d = {}: {row:?}", diag.d_over_lambda[i]);
            }
            for (j, &a) in alphas.iter().enumerate() {
                if a > diag.first_boundary[i] {
                    assert_eq!(row[j], 0);
                }
            }
        }
    }

    #[test]
    fn q_mst_values() {
        assert!((mst_longest_edge(1024) - 0.0464).abs() < 1e-4);
        let q = q_mst(1024, 0.1).unwrap();
        assert!((q - 7.75).abs() < 0.01, "{q}");
    }

    #[test]
    fn q_fc_monotone() {
        let mut last = f64::INFINITY;
        for l in [0.01, 0.1, 0.5, 1.0, 3.0, 10.0, 30.0] {
            let q = q_fc(l).unwrap();
            assert!(q < last);
            last = q;
        }
    }

    #[test]
    fn alpha_bar_limits() {
        let small = alpha_bar(1e-4, P_INV_E).unwrap();
        assert!((small - 0.5).abs() < 1e-4);
        let ratio = alpha_bar(20.0, P_INV_E).unwrap() / alpha_bar(40.0, P_INV_E).unwrap();
        assert!((ratio - 2.0).abs() < 0.4, "{ratio}");
    }
}
