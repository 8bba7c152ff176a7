//! Defect graph construction and minimum-weight perfect matching.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{QecError, Result};
use crate::lattice::RhgLattice;

pub const MIN_WEIGHT: f64 = 1e-12;
pub const MAX_WEIGHT: f64 = 20.0;
/// Largest graph solved by the exact subset recursion; bigger graphs go to blossom.
pub const EXACT_LIMIT: usize = 14;

/// Cubes whose face bits have odd parity.
pub fn extract_syndrome(bits: &[u8], lattice: &RhgLattice) -> Vec<usize> {
    (0..lattice.cubes().len())
        .filter(|&c| lattice.cube_faces(c).iter().fold(0u8, |acc, &f| acc ^ bits[f]) & 1 == 1)
        .collect()
}

/// `ln((1 - p)/p)` clamped to `[MIN_WEIGHT, MAX_WEIGHT]`. Returns the weight and
/// whether `p` carried no information (`p >= 1/2`).
pub fn face_weight(p: f64) -> (f64, bool) {
    if !(p < 0.5) {
        return (MIN_WEIGHT, true);
    }
    let w = ((1.0 - p) / p).ln();
    (w.clamp(MIN_WEIGHT, MAX_WEIGHT), false)
}

#[derive(Clone, Copy, PartialEq)]
struct Entry(f64, usize);

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.partial_cmp(&self.0).unwrap_or(Ordering::Equal).then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Single-source shortest paths over cubes, faces as weighted edges.
#[derive(Debug, Clone)]
pub struct ShortestPaths {
    pub dist: Vec<f64>,
    /// Face used to reach each cube, `usize::MAX` at the source.
    pub via: Vec<usize>,
}

pub fn dijkstra(lattice: &RhgLattice, weights: &[f64], source: usize) -> ShortestPaths {
    let n = lattice.cubes().len();
    let mut dist = vec![f64::INFINITY; n];
    let mut via = vec![usize::MAX; n];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(Entry(0.0, source));
    while let Some(Entry(d, c)) = heap.pop() {
        if d > dist[c] {
            continue;
        }
        for &f in lattice.cube_faces(c) {
            let [a, b] = lattice.face_cubes(f);
            let next = if a == c { b } else { a };
            let nd = d + weights[f];
            if nd < dist[next] {
                dist[next] = nd;
                via[next] = f;
                heap.push(Entry(nd, next));
            }
        }
    }
    ShortestPaths { dist, via }
}

impl ShortestPaths {
    /// Faces on the path from the source to `target`.
    pub fn path(&self, lattice: &RhgLattice, target: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut c = target;
        while self.via[c] != usize::MAX {
            let f = self.via[c];
            out.push(f);
            let [a, b] = lattice.face_cubes(f);
            c = if a == c { b } else { a };
        }
        out
    }
}

/// Complete graph on the defects with shortest-path weights.
#[derive(Debug, Clone)]
pub struct MatchingGraph {
    pub defects: Vec<usize>,
    pub weights: Vec<Vec<f64>>,
    pub paths: Vec<ShortestPaths>,
}

pub fn matching_graph(defects: &[usize], face_weights: &[f64], lattice: &RhgLattice) -> MatchingGraph {
    let paths: Vec<ShortestPaths> = defects.iter().map(|&s| dijkstra(lattice, face_weights, s)).collect();
    let weights = paths
        .iter()
        .map(|sp| defects.iter().map(|&t| sp.dist[t]).collect())
        .collect();
    MatchingGraph {
        defects: defects.to_vec(),
        weights,
        paths,
    }
}

/// Minimum-weight perfect matching on a complete graph given by a symmetric weight matrix.
pub fn mwpm(weights: &[Vec<f64>]) -> Result<Vec<(usize, usize)>> {
    let n = weights.len();
    if n % 2 == 1 {
        return Err(QecError::Invariant(format!("odd node count {n}")));
    }
    if weights.iter().any(|r| r.len() != n) {
        return Err(QecError::InvalidParameter("weight matrix not square".into()));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    if n <= EXACT_LIMIT {
        Ok(exact_matching(weights))
    } else {
        blossom_matching(weights)
    }
}

/// Subset recursion: the lowest unmatched node pairs with every other choice.
pub fn exact_matching(w: &[Vec<f64>]) -> Vec<(usize, usize)> {
    let n = w.len();
    let full = (1usize << n) - 1;
    let mut best = vec![f64::INFINITY; 1 << n];
    let mut choice = vec![(0usize, 0usize); 1 << n];
    best[0] = 0.0;
    // masks of matched nodes; only masks with even popcount reachable
    for mask in 0..full {
        if !best[mask].is_finite() {
            continue;
        }
        let i = (!mask).trailing_zeros() as usize;
        for j in (i + 1)..n {
            if mask >> j & 1 == 0 {
                let next = mask | 1 << i | 1 << j;
                let v = best[mask] + w[i][j];
                if v < best[next] {
                    best[next] = v;
                    choice[next] = (i, j);
                }
            }
        }
    }
    let mut pairs = Vec::with_capacity(n / 2);
    let mut mask = full;
    while mask != 0 {
        let (i, j) = choice[mask];
        pairs.push((i, j));
        mask &= !(1 << i | 1 << j);
    }
    pairs.sort_unstable();
    pairs
}

/// Blossom on integer weights: maximises `C - round(w * scale)` at maximum cardinality.
fn blossom_matching(w: &[Vec<f64>]) -> Result<Vec<(usize, usize)>> {
    let n = w.len();
    let max = w
        .iter()
        .flatten()
        .copied()
        .filter(|v| v.is_finite())
        .fold(0.0f64, f64::max);
    let scale = if max > 0.0 { 1e8 / max.max(1.0) } else { 1.0 };
    let big = (max * scale).round() as i64 + 1;
    let mut edges = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            if w[i][j].is_finite() {
                let v = big - (w[i][j] * scale).round() as i64;
                edges.push((i, j, v as i32));
            }
        }
    }
    let mates = mwmatching::Matching::new(edges).max_cardinality().solve();
    let mut pairs = Vec::with_capacity(n / 2);
    for (i, &m) in mates.iter().enumerate() {
        if m == usize::MAX || m >= n {
            return Err(QecError::Invariant(format!("node {i} left unmatched")));
        }
        if i < m {
            pairs.push((i, m));
        }
    }
    if pairs.len() * 2 != n {
        return Err(QecError::Invariant("matching not perfect".into()));
    }
    Ok(pairs)
}

pub fn matching_weight(weights: &[Vec<f64>], pairs: &[(usize, usize)]) -> f64 {
    pairs.iter().map(|&(i, j)| weights[i][j]).sum()
}
