//! Observables of an [`MqeNetwork`].

use serde::Serialize;

use crate::error::{MqeError, Result};
use crate::optimizer::MqeNetwork;

/// Pair averages run over the `N (N - 1)` ordered pairs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NetworkObservables {
    /// Mean capacitance of the chosen paths (bits per use).
    pub q_star: f64,
    /// Mean topological length of the stored paths.
    pub l_star: f64,
    /// Mean `m* + 1`, the length booked by the iteration.
    pub l_star_budget: f64,
    /// Worst pair capacitance.
    pub q_min: f64,
    /// Link density `<k> / (N - 1)`.
    pub rho: f64,
    /// Global efficiency.
    pub efficiency: f64,
    pub length_mismatches: usize,
}

pub fn observables(net: &MqeNetwork) -> NetworkObservables {
    let n = net.len();
    let pairs = (n * (n - 1) / 2) as f64;
    let (mut q_sum, mut l_sum, mut lb_sum, mut e_sum) = (0.0, 0.0, 0.0, 0.0);
    let mut q_min = f64::INFINITY;
    for a in 0..n {
        for b in a + 1..n {
            let q = net.pair_capacitance(a, b);
            q_sum += q;
            q_min = q_min.min(q);
            l_sum += net.path_length(a, b) as f64;
            lb_sum += (net.m_star(a, b) + 1) as f64;
            e_sum += net.pair_efficiency(a, b);
        }
    }
    NetworkObservables {
        q_star: q_sum / pairs,
        l_star: l_sum / pairs,
        l_star_budget: lb_sum / pairs,
        q_min,
        rho: net.density(),
        efficiency: e_sum / pairs,
        length_mismatches: net.length_mismatches(),
    }
}

/// Per-node count of ordered pairs whose chosen path uses the node as a relay.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BetweennessTable {
    pub counts: Vec<u64>,
}

impl BetweennessTable {
    /// `(value, number of nodes with that value)`, ascending by value.
    pub fn histogram(&self) -> Vec<(u64, usize)> {
        let mut sorted = self.counts.clone();
        sorted.sort_unstable();
        let mut out: Vec<(u64, usize)> = Vec::new();
        for v in sorted {
            match out.last_mut() {
                Some((last, c)) if *last == v => *c += 1,
                _ => out.push((v, 1)),
            }
        }
        out
    }

    pub fn mean(&self) -> f64 {
        self.counts.iter().map(|&c| c as f64).sum::<f64>() / self.counts.len() as f64
    }

    pub fn variance(&self) -> f64 {
        let mu = self.mean();
        self.counts.iter().map(|&c| (c as f64 - mu).powi(2)).sum::<f64>() / self.counts.len() as f64
    }
}

pub fn modified_betweenness(net: &MqeNetwork) -> BetweennessTable {
    let n = net.len();
    let mut counts = vec![0u64; n];
    for a in 0..n {
        for b in a + 1..n {
            // Stored b -> a paths are the reverse of a -> b.
            for c in net.intermediates(a, b) {
                counts[c] += 2;
            }
        }
    }
    BetweennessTable { counts }
}

/// Power-law fit `rho ~ N^(-omega)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScalingFit {
    pub omega: f64,
    pub std_error: f64,
    /// `ln rho` at `ln N = 0`.
    pub intercept: f64,
}

/// Least-squares slope of `ln rho` against `ln N`; `omega` is its negative.
pub fn density_scaling(samples: &[(usize, f64)]) -> Result<ScalingFit> {
    let mut sizes: Vec<usize> = samples.iter().map(|s| s.0).collect();
    sizes.sort_unstable();
    sizes.dedup();
    if sizes.len() < 3 {
        return Err(MqeError::invalid(format!("need at least 3 distinct sizes, got {}", sizes.len())));
    }
    if let Some(bad) = samples.iter().find(|s| s.1.is_nan() || s.1 <= 0.0 || s.0 == 0) {
        return Err(MqeError::invalid(format!("cannot fit sample (N = {}, rho = {})", bad.0, bad.1)));
    }
    let pts: Vec<(f64, f64)> = samples.iter().map(|&(n, r)| ((n as f64).ln(), r.ln())).collect();
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let std_error = if pts.len() > 2 { (ssr / (k - 2.0) / sxx).sqrt() } else { 0.0 };
    Ok(ScalingFit { omega: -slope, std_error, intercept })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Provenance, UserSet};
    use crate::optimizer::build_mqe;
    use crate::P_INV_E;

    fn collinear() -> UserSet {
        UserSet::new(vec![[0.0, 0.0], [0.4, 0.0], [1.0, 0.0]], 1.0, 1.0, Provenance::Explicit).unwrap()
    }

    #[test]
    fn fully_connected_regime() {
        let u = crate::geometry::sample_users(30, 1.0, 4).unwrap();
        let net = build_mqe(&u, 1.0, P_INV_E).unwrap();
        let obs = observables(&net);
        assert_eq!(obs.l_star, 1.0);
        assert_eq!(obs.rho, 1.0);
        let q0 = net.capacitances();
        let mut direct = 0.0;
        for a in 0..30 {
            for b in a + 1..30 {
                direct += q0.get(a, b);
            }
        }
        assert!((obs.q_star - direct / 435.0).abs() < 1e-12);
        assert!(modified_betweenness(&net).counts.iter().all(|&c| c == 0));
    }

    #[test]
    fn collinear_middle_node() {
        let net = build_mqe(&collinear(), 0.0, P_INV_E).unwrap();
        assert_eq!(modified_betweenness(&net).counts, vec![0, 2, 0]);
        assert_eq!(net.edges(), &[(0, 1), (1, 2)]);
    }

    #[test]
    fn histogram_groups_values() {
        let t = BetweennessTable { counts: vec![3, 0, 3, 1, 0, 0] };
        assert_eq!(t.histogram(), vec![(0, 3), (1, 1), (3, 2)]);
    }

    #[test]
    fn exact_power_law() {
        let samples: Vec<(usize, f64)> = [128, 256, 512, 1024].iter().map(|&n| (n, 3.0 * (n as f64).powf(-0.83))).collect();
        let fit = density_scaling(&samples).unwrap();
        assert!((fit.omega - 0.83).abs() < 1e-12, "{fit:?}");
        assert!(fit.std_error < 1e-10);
    }

    #[test]
    fn flat_density_gives_zero_exponent() {
        let fit = density_scaling(&[(10, 1.0), (20, 1.0), (40, 1.0)]).unwrap();
        assert_eq!(fit.omega, 0.0);
    }

    #[test]
    fn too_few_sizes() {
        assert!(matches!(density_scaling(&[(10, 0.5), (20, 0.3), (20, 0.31)]), Err(MqeError::InvalidArgument(_))));
    }
}
