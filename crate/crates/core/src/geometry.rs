//! User configurations in the square and their pair distances.

use std::fmt;
use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{MqeError, Result};

/// Origin of a user configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    /// Drawn uniformly with `ChaCha8Rng::seed_from_u64(seed)`.
    Seeded(u64),
    /// Coordinates supplied by the caller.
    Explicit,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::Seeded(s) => write!(f, "{s}"),
            Provenance::Explicit => f.write_str("explicit"),
        }
    }
}

/// `N >= 2` points in `[0, L] x [0, L]`, in physical length units, plus the
/// loss decay length `lambda0` in the same units.
#[derive(Debug, Clone, PartialEq)]
pub struct UserSet {
    points: Vec<[f64; 2]>,
    side: f64,
    lambda0: f64,
    provenance: Provenance,
}

impl UserSet {
    pub fn new(points: Vec<[f64; 2]>, side: f64, lambda0: f64, provenance: Provenance) -> Result<Self> {
        if points.len() < 2 {
            return Err(MqeError::invalid(format!("need at least 2 users, got {}", points.len())));
        }
        if !(side > 0.0 && side.is_finite()) {
            return Err(MqeError::invalid(format!("square side must be positive, got {side}")));
        }
        if !(lambda0 > 0.0 && lambda0.is_finite()) {
            return Err(MqeError::invalid(format!("lambda0 must be positive, got {lambda0}")));
        }
        for (i, &[x, y]) in points.iter().enumerate() {
            if !(0.0..=side).contains(&x) || !(0.0..=side).contains(&y) {
                return Err(MqeError::invalid(format!("user {i} at ({x}, {y}) lies outside [0, {side}]^2")));
            }
        }
        let set = UserSet { points, side, lambda0, provenance };
        let dups = set.coincident_pairs();
        if !dups.is_empty() {
            log::warn!(
                "{} coincident user pair(s), e.g. ({}, {}): their link gets infinite capacitance",
                dups.len(),
                dups[0].0,
                dups[0].1
            );
        }
        Ok(set)
    }

    /// Uniform i.i.d. sampling; coordinates depend only on `(n, side, seed)`.
    pub fn sample(n: usize, side: f64, lambda0: f64, seed: u64) -> Result<Self> {
        if n < 2 {
            return Err(MqeError::invalid(format!("need at least 2 users, got {n}")));
        }
        if !(side > 0.0 && side.is_finite()) {
            return Err(MqeError::invalid(format!("square side must be positive, got {side}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let points = (0..n)
            .map(|_| {
                let x: f64 = rng.random();
                let y: f64 = rng.random();
                [side * x, side * y]
            })
            .collect();
        UserSet::new(points, side, lambda0, Provenance::Seeded(seed))
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[[f64; 2]] {
        &self.points
    }

    pub fn side(&self) -> f64 {
        self.side
    }

    pub fn lambda0(&self) -> f64 {
        self.lambda0
    }

    /// `L / lambda0`, the only size parameter the physics depends on.
    pub fn side_over_lambda(&self) -> f64 {
        self.side / self.lambda0
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    /// Unordered pairs `(i, j)`, `i < j`, sharing identical coordinates.
    pub fn coincident_pairs(&self) -> Vec<(usize, usize)> {
        let mut idx: Vec<usize> = (0..self.points.len()).collect();
        idx.sort_by(|&a, &b| {
            let (pa, pb) = (self.points[a], self.points[b]);
            pa[0].total_cmp(&pb[0]).then(pa[1].total_cmp(&pb[1])).then(a.cmp(&b))
        });
        let mut out = Vec::new();
        let mut start = 0;
        while start < idx.len() {
            let mut end = start + 1;
            while end < idx.len() && self.points[idx[end]] == self.points[idx[start]] {
                end += 1;
            }
            for a in start..end {
                for b in a + 1..end {
                    let (i, j) = (idx[a].min(idx[b]), idx[a].max(idx[b]));
                    out.push((i, j));
                }
            }
            start = end;
        }
        out.sort_unstable();
        out
    }

    /// Reads the plain-text coordinate format:
    ///
    /// ```text
    /// L <side> lambda0 <lambda0> [seed <seed>]
    /// <x> <y>
    /// ...
    /// ```
    ///
    /// Blank lines and lines starting with `#` are ignored.
    pub fn read_from<R: BufRead>(reader: R) -> Result<Self> {
        let mut header: Option<(f64, f64, Provenance)> = None;
        let mut points = Vec::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            let lineno = lineno + 1;
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let toks: Vec<&str> = line.split_whitespace().collect();
            if header.is_none() {
                header = Some(parse_header(&toks, lineno)?);
                continue;
            }
            if toks.len() != 2 {
                return Err(MqeError::Parse { line: lineno, msg: format!("expected 'x y', got {line:?}") });
            }
            let x = parse_f64(toks[0], lineno)?;
            let y = parse_f64(toks[1], lineno)?;
            points.push([x, y]);
        }
        let (side, lambda0, provenance) =
            header.ok_or(MqeError::Parse { line: 0, msg: "missing 'L <value> lambda0 <value>' header".into() })?;
        UserSet::new(points, side, lambda0, provenance)
    }

    /// Writes the coordinate format with 17 significant digits, which
    /// round-trips every `f64` exactly.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        write!(w, "L {:.16e} lambda0 {:.16e}", self.side, self.lambda0)?;
        if let Provenance::Seeded(s) = self.provenance {
            write!(w, " seed {s}")?;
        }
        writeln!(w)?;
        for &[x, y] in &self.points {
            writeln!(w, "{x:.16e} {y:.16e}")?;
        }
        Ok(())
    }
}

fn parse_f64(tok: &str, line: usize) -> Result<f64> {
    tok.parse::<f64>().map_err(|e| MqeError::Parse { line, msg: format!("bad number {tok:?}: {e}") })
}

fn parse_header(toks: &[&str], line: usize) -> Result<(f64, f64, Provenance)> {
    let bad = || MqeError::Parse { line, msg: format!("expected 'L <value> lambda0 <value>', got {:?}", toks.join(" ")) };
    match toks {
        ["L", side, "lambda0", lambda0, rest @ ..] => {
            let provenance = match rest {
                [] => Provenance::Explicit,
                ["seed", s] => Provenance::Seeded(
                    s.parse().map_err(|e| MqeError::Parse { line, msg: format!("bad seed {s:?}: {e}") })?,
                ),
                _ => return Err(bad()),
            };
            Ok((parse_f64(side, line)?, parse_f64(lambda0, line)?, provenance))
        }
        _ => Err(bad()),
    }
}

/// `n` uniform users in a square of side `side`, with `lambda0 = 1` so that
/// `side` is `L / lambda0`.
pub fn sample_users(n: usize, side: f64, seed: u64) -> Result<UserSet> {
    UserSet::sample(n, side, 1.0, seed)
}

/// Symmetric pair distances in units of `lambda0`, zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<f64>,
    lambda0: f64,
}

impl DistanceMatrix {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// `d_ij / lambda0`.
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    /// `d_ij` in the user set's physical units.
    pub fn physical(&self, i: usize, j: usize) -> f64 {
        self.get(i, j) * self.lambda0
    }

    pub fn lambda0(&self) -> f64 {
        self.lambda0
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(0.0, f64::max)
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }
}

pub fn distance_matrix(users: &UserSet) -> DistanceMatrix {
    let n = users.len();
    let lambda0 = users.lambda0();
    let pts = users.points();
    let mut data = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let dx = pts[i][0] - pts[j][0];
            let dy = pts[i][1] - pts[j][1];
            let d = dx.hypot(dy) / lambda0;
            data[i * n + j] = d;
            data[j * n + i] = d;
        }
    }
    DistanceMatrix { n, data, lambda0 }
}

/// Density of the distance between two uniform points in the unit square,
/// as a function of `z = d / L`. Supported on `[0, sqrt(2)]`.
pub fn distance_pdf(z: f64) -> Result<f64> {
    if z.is_nan() || z < 0.0 {
        return Err(MqeError::invalid(format!("distance ratio must be non-negative, got {z}")));
    }
    Ok(distance_pdf_unchecked(z))
}

pub(crate) fn distance_pdf_unchecked(z: f64) -> f64 {
    use std::f64::consts::PI;
    if z <= 1.0 {
        2.0 * z * (PI - 4.0 * z + z * z)
    } else if z < std::f64::consts::SQRT_2 {
        let inner = 4.0 * (1.0 / z).asin() - (2.0 + PI) + 4.0 * (z * z - 1.0).sqrt() - z * z;
        (2.0 * z * inner).max(0.0)
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::SQRT_2;

    #[test]
    fn two_points_inside_unit_square() {
        let u = sample_users(2, 1.0, 7).unwrap();
        assert_eq!(u.len(), 2);
        for &[x, y] in u.points() {
            assert!((0.0..=1.0).contains(&x) && (0.0..=1.0).contains(&y));
        }
    }

    #[test]
    fn sampling_rejects_bad_arguments() {
        assert!(matches!(sample_users(1, 1.0, 0), Err(MqeError::InvalidArgument(_))));
        assert!(matches!(sample_users(5, 0.0, 0), Err(MqeError::InvalidArgument(_))));
        assert!(matches!(sample_users(5, -1.0, 0), Err(MqeError::InvalidArgument(_))));
    }

    #[test]
    fn sampling_is_reproducible() {
        let a = sample_users(50, 3.0, 99).unwrap();
        let b = sample_users(50, 3.0, 99).unwrap();
        assert_eq!(a, b);
        let c = sample_users(50, 3.0, 100).unwrap();
        assert_ne!(a.points(), c.points());
    }

    #[test]
    fn three_four_five() {
        let u = UserSet::new(vec![[0.0, 0.0], [3.0, 4.0]], 5.0, 1.0, Provenance::Explicit).unwrap();
        let d = distance_matrix(&u);
        assert_eq!(d.get(0, 1), 5.0);
        assert_eq!(d.get(1, 0), 5.0);
        assert_eq!(d.get(0, 0), 0.0);
    }

    #[test]
    fn distances_are_in_lambda_units() {
        let u = UserSet::new(vec![[0.0, 0.0], [3.0, 4.0]], 10.0, 2.0, Provenance::Explicit).unwrap();
        let d = distance_matrix(&u);
        assert_eq!(d.get(0, 1), 2.5);
        assert_eq!(d.physical(0, 1), 5.0);
    }

    #[test]
    fn duplicates_are_flagged_not_rejected() {
        let u = UserSet::new(vec![[0.5, 0.5], [0.1, 0.2], [0.5, 0.5]], 1.0, 1.0, Provenance::Explicit).unwrap();
        assert_eq!(u.coincident_pairs(), vec![(0, 2)]);
        assert_eq!(distance_matrix(&u).get(0, 2), 0.0);
    }

    #[test]
    fn out_of_square_rejected() {
        let r = UserSet::new(vec![[0.0, 0.0], [1.5, 0.5]], 1.0, 1.0, Provenance::Explicit);
        assert!(matches!(r, Err(MqeError::InvalidArgument(_))));
    }

    #[test]
    fn max_distance_bounded_by_diagonal() {
        let u = sample_users(300, 2.0, 5).unwrap();
        assert!(distance_matrix(&u).max() <= SQRT_2 * 2.0);
    }

    #[test]
    fn pdf_endpoints_and_junction() {
        assert_eq!(distance_pdf(SQRT_2).unwrap(), 0.0);
        assert_eq!(distance_pdf(2.0).unwrap(), 0.0);
        assert_eq!(distance_pdf(0.0).unwrap(), 0.0);
        let below = distance_pdf(1.0).unwrap();
        let above = distance_pdf(1.0 + 1e-15).unwrap();
        assert!((below - above).abs() < 1e-10);
        assert!(matches!(distance_pdf(-0.1), Err(MqeError::InvalidArgument(_))));
    }

    #[test]
    fn file_round_trip_is_exact() {
        let u = UserSet::sample(20, 7.3, 0.37, 11).unwrap();
        let mut buf = Vec::new();
        u.write_to(&mut buf).unwrap();
        let back = UserSet::read_from(buf.as_slice()).unwrap();
        assert_eq!(u, back);
    }

    #[test]
    fn parse_errors() {
        let bad_header = "L 1 lambda 1\n0 0\n1 1\n";
        assert!(matches!(UserSet::read_from(bad_header.as_bytes()), Err(MqeError::Parse { line: 1, .. })));
        let bad_point = "L 1 lambda0 1\n0 0\n1\n";
        assert!(matches!(UserSet::read_from(bad_point.as_bytes()), Err(MqeError::Parse { line: 3, .. })));
        let ok = "# comment\nL 1 lambda0 2\n\n0 0\n1 1\n";
        let u = UserSet::read_from(ok.as_bytes()).unwrap();
        assert_eq!(u.provenance(), Provenance::Explicit);
        assert_eq!(u.lambda0(), 2.0);
    }
}
