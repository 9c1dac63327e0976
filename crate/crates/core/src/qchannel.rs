//! Link and path functionals: capacitance (bits per channel use), security
//! and the capacitance/security efficiency.
//!
//! Capacitance is in base 2. The security penalty of the efficiency uses the
//! natural logarithm, so with `p = 1 - 1/e` every intermediate node costs
//! exactly `alpha`.

use std::f64::consts::LN_2;

use crate::error::{MqeError, Result};
use crate::geometry::DistanceMatrix;

/// Capacitance of a zero-length link. Compares above every finite
/// capacitance and stays finite under `(1 - alpha) * q`, so it is only ever
/// used through `min`/`max` and that product.
pub const INFINITE_CAPACITANCE: f64 = f64::MAX;

/// `-log2(1 - exp(-x))` for `x = d / lambda0 > 0`.
#[inline]
pub(crate) fn capacitance_of_ratio(x: f64) -> f64 {
    if x <= 0.0 {
        return INFINITE_CAPACITANCE;
    }
    // log(1 - e^{-x}) without cancellation on either side of ln 2.
    let log1mexp = if x < LN_2 { (-(-x).exp_m1()).ln() } else { (-(-x).exp()).ln_1p() };
    -log1mexp / LN_2
}

/// Repeaterless capacitance `-log2(1 - exp(-d / lambda0))` of a link of
/// length `d`. A zero-length link returns [`INFINITE_CAPACITANCE`].
pub fn link_capacitance(d: f64, lambda0: f64) -> Result<f64> {
    if d.is_nan() || d < 0.0 {
        return Err(MqeError::invalid(format!("link length must be non-negative, got {d}")));
    }
    if !(lambda0 > 0.0 && lambda0.is_finite()) {
        return Err(MqeError::invalid(format!("lambda0 must be positive, got {lambda0}")));
    }
    Ok(capacitance_of_ratio(d / lambda0))
}

/// Symmetric matrix of direct-link capacitances with a sentinel diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct CapacitanceMatrix {
    n: usize,
    data: Vec<f64>,
}

impl CapacitanceMatrix {
    pub fn from_distances(d: &DistanceMatrix) -> Self {
        let n = d.len();
        let mut data = vec![INFINITE_CAPACITANCE; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let q = capacitance_of_ratio(d.get(i, j));
                data[i * n + j] = q;
                data[j * n + i] = q;
            }
        }
        CapacitanceMatrix { n, data }
    }

    /// Builds from a row-major `n x n` matrix. The diagonal is overwritten
    /// with the sentinel; off-diagonal entries must be positive and symmetric.
    pub fn from_row_major(n: usize, mut data: Vec<f64>) -> Result<Self> {
        if n < 2 || data.len() != n * n {
            return Err(MqeError::invalid(format!("expected {n}x{n} matrix with n >= 2, got {} entries", data.len())));
        }
        for i in 0..n {
            data[i * n + i] = INFINITE_CAPACITANCE;
            for j in i + 1..n {
                let (a, b) = (data[i * n + j], data[j * n + i]);
                if a != b {
                    return Err(MqeError::invalid(format!("asymmetric entry ({i}, {j}): {a} vs {b}")));
                }
                if a.is_nan() || a <= 0.0 {
                    return Err(MqeError::invalid(format!("capacitance ({i}, {j}) must be positive, got {a}")));
                }
            }
        }
        Ok(CapacitanceMatrix { n, data })
    }

    /// Matrix of the relabeled users: entry `(i, j)` is `(perm[i], perm[j])`.
    pub(crate) fn permuted(&self, perm: &[usize]) -> Self {
        let n = self.n;
        let mut data = Vec::with_capacity(n * n);
        for &pi in perm {
            let row = self.row(pi);
            data.extend(perm.iter().map(|&pj| row[pj]));
        }
        CapacitanceMatrix { n, data }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub(crate) fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

/// Minimum edge capacitance along a node walk, without a simplicity check.
pub fn walk_capacitance(nodes: &[usize], q0: &CapacitanceMatrix) -> Result<f64> {
    if nodes.len() < 2 {
        return Err(MqeError::InvalidPath(format!("a path needs at least one edge, got {} node(s)", nodes.len())));
    }
    if let Some(&bad) = nodes.iter().find(|&&v| v >= q0.len()) {
        return Err(MqeError::InvalidPath(format!("node {bad} out of range for {} users", q0.len())));
    }
    Ok(nodes.windows(2).map(|w| q0.get(w[0], w[1])).fold(INFINITE_CAPACITANCE, f64::min))
}

fn check_simple(nodes: &[usize]) -> Result<()> {
    let mut seen = nodes.to_vec();
    seen.sort_unstable();
    if let Some(w) = seen.windows(2).find(|w| w[0] == w[1]) {
        return Err(MqeError::InvalidPath(format!("node {} repeats", w[0])));
    }
    Ok(())
}

/// Bottleneck capacitance of a simple path.
pub fn path_capacitance(nodes: &[usize], q0: &CapacitanceMatrix) -> Result<f64> {
    let q = walk_capacitance(nodes, q0)?;
    check_simple(nodes)?;
    Ok(q)
}

/// `(1 - p)^(length - 1)`.
pub fn path_security(length: usize, p: f64) -> Result<f64> {
    if length < 1 {
        return Err(MqeError::invalid("path length must be at least 1"));
    }
    check_probability(p)?;
    Ok((1.0 - p).powi((length - 1) as i32))
}

pub(crate) fn check_probability(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(MqeError::invalid(format!("probability must lie in [0, 1], got {p}")));
    }
    Ok(())
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(MqeError::invalid(format!("alpha must lie in [0, 1], got {alpha}")));
    }
    Ok(())
}

/// Efficiency of a path with bottleneck `capacitance` and `intermediates`
/// trusted nodes. Every efficiency in the crate goes through this function
/// so that independently computed optima compare bit-for-bit.
#[inline]
pub fn efficiency(capacitance: f64, intermediates: usize, alpha: f64, p: f64) -> f64 {
    let security = if intermediates == 0 {
        0.0
    } else if p >= 1.0 {
        return f64::NEG_INFINITY;
    } else {
        alpha * (-p).ln_1p() * intermediates as f64
    };
    (1.0 - alpha) * capacitance + security
}

/// Simple path with its bottleneck capacitance and security.
#[derive(Debug, Clone, PartialEq)]
pub struct PathDescriptor {
    pub nodes: Vec<usize>,
    pub capacitance: f64,
    pub security: f64,
}

impl PathDescriptor {
    pub fn new(nodes: Vec<usize>, q0: &CapacitanceMatrix, p: f64) -> Result<Self> {
        let capacitance = path_capacitance(&nodes, q0)?;
        let security = path_security(nodes.len() - 1, p)?;
        Ok(PathDescriptor { nodes, capacitance, security })
    }

    /// Topological length (number of edges).
    pub fn length(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn intermediates(&self) -> usize {
        self.nodes.len() - 2
    }

    pub fn source(&self) -> usize {
        self.nodes[0]
    }

    pub fn target(&self) -> usize {
        *self.nodes.last().expect("non-empty path")
    }
}

pub fn path_efficiency(path: &PathDescriptor, alpha: f64, p: f64) -> Result<f64> {
    check_alpha(alpha)?;
    check_probability(p)?;
    Ok(efficiency(path.capacitance, path.intermediates(), alpha, p))
}

/// One entry of a per-ordered-pair efficiency table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairEfficiency {
    pub source: usize,
    pub target: usize,
    pub efficiency: f64,
}

/// Mean efficiency over all `n (n - 1)` ordered pairs.
pub fn network_efficiency(n: usize, table: &[PairEfficiency]) -> Result<f64> {
    if n < 2 {
        return Err(MqeError::invalid(format!("need at least 2 users, got {n}")));
    }
    let mut seen = vec![false; n * n];
    let mut sum = 0.0;
    for e in table {
        if e.source >= n || e.target >= n || e.source == e.target {
            return Err(MqeError::invalid(format!("bad pair ({}, {}) for {n} users", e.source, e.target)));
        }
        let slot = &mut seen[e.source * n + e.target];
        if *slot {
            return Err(MqeError::invalid(format!("duplicate pair ({}, {})", e.source, e.target)));
        }
        *slot = true;
        sum += e.efficiency;
    }
    for a in 0..n {
        for b in 0..n {
            if a != b && !seen[a * n + b] {
                return Err(MqeError::IncompleteTable(a, b));
            }
        }
    }
    Ok(sum / (n * (n - 1)) as f64)
}
